fn main() {
    std::process::exit(tpn::cli::run(std::env::args_os()));
}
