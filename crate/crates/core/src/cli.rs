//! The `tpn` command line and the library entry points behind each
//! subcommand.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::thread;

use clap::{Parser, Subcommand};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::dataset::Dataset;
use crate::diagnostics::{crps_circular, summarize, PosteriorDraws};
use crate::error::{Error, Result};
use crate::io::{
    dataset_from_matrix, holdout_split, read_config, read_csv, read_draws, read_json_file, read_params, write_csv,
    write_draws, write_json, write_summary, DrawWriter, ModelParams, RunConfig,
};
use crate::mcmc::{run_chain, run_from, AcceptanceRates, ChainState, Checkpoint, McmcConfig, PriorSpec};
use crate::model::ModelKind;

/// Environment variable naming the default output directory of `fit`.
pub const OUTPUT_DIR_ENV: &str = "TPN_OUTPUT_DIR";
const DEFAULT_OUTPUT_DIR: &str = "tpn-output";
const CHECKPOINT_FILE: &str = "checkpoint.json";
/// Stream of the seed reserved for posterior predictive draws in `score`.
const PREDICTIVE_STREAM: u64 = u64::MAX;

#[derive(Debug, Parser)]
#[command(
    name = "tpn",
    version,
    about = "Toroidal projected normal models for multivariate circular data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a synthetic dataset from a parameter file.
    Simulate {
        #[arg(long)]
        model: ModelKind,
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run MCMC and write draws, a summary table and acceptance rates.
    Fit {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        chains: usize,
        #[arg(long)]
        seed: u64,
        /// Continue the chains found in the output directory.
        #[arg(long)]
        resume: bool,
    },
    /// Evaluate the density of one coordinate pair on a square grid.
    Density {
        #[arg(long)]
        model: ModelKind,
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        grid: usize,
        /// 1-based coordinates, e.g. `1,2`.
        #[arg(long)]
        pair: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit on a training split and report the mean circular CRPS on the rest.
    Score {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        holdout: Option<f64>,
        #[arg(long)]
        seed: u64,
        /// Also write the report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarise a draw directory, optionally against true parameters.
    Summarize {
        #[arg(long)]
        draws: PathBuf,
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Simulate {
            model,
            params,
            n,
            seed,
            out,
        } => {
            let p = read_params(&params)?;
            if p.kind() != model {
                return Err(Error::config(
                    "model",
                    format!("--model {model} but the parameter file describes {}", p.kind()),
                ));
            }
            write_csv(&simulate(&p, n, seed)?, &out)?;
            println!("wrote {n} draws to {}", out.display());
        }
        Command::Fit {
            data,
            config,
            out_dir,
            chains,
            seed,
            resume,
        } => {
            let cfg = load_config(config.as_deref())?;
            let data_path = data_path(data, &cfg)?;
            let ds = read_csv(&data_path, cfg.angle_unit)?;
            let dir = out_dir
                .or_else(|| cfg.out_dir.clone())
                .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
            let report = fit(
                &ds,
                &cfg,
                &FitOptions {
                    out_dir: dir.clone(),
                    chains,
                    seed,
                    resume,
                },
            )?;
            println!(
                "wrote {} draws from {chains} chain(s) to {}",
                report.draws.len(),
                dir.display()
            );
        }
        Command::Density {
            model,
            params,
            grid,
            pair,
            out,
        } => {
            let p = read_params(&params)?;
            if p.kind() != model {
                return Err(Error::config(
                    "model",
                    format!("--model {model} but the parameter file describes {}", p.kind()),
                ));
            }
            let (j, k) = parse_pair(&pair, p.dim())?;
            let g = density_grid(&p, grid, (j, k))?;
            write_grid(&g, (j, k), &out)?;
            println!("wrote {grid}×{grid} grid to {}", out.display());
        }
        Command::Score {
            data,
            config,
            holdout,
            seed,
            out,
        } => {
            let mut cfg = load_config(config.as_deref())?;
            if let Some(h) = holdout {
                cfg.holdout_fraction = h;
                cfg.validate()?;
            }
            let ds = read_csv(&data_path(data, &cfg)?, cfg.angle_unit)?;
            let report = score(&ds, &cfg, seed)?;
            println!("model {} crps {} cells {}", report.model, report.crps, report.cells);
            if let Some(out) = out {
                write_json(&report, &out)?;
            }
        }
        Command::Summarize { draws, truth, out } => {
            let posterior = read_draws(&draws)?;
            let reference = truth.map(|t| read_params(&t)).transpose()?;
            if let Some(r) = &reference {
                if r.kind() != posterior.kind {
                    return Err(Error::config(
                        "truth",
                        format!("draws are {} but the truth file describes {}", posterior.kind, r.kind()),
                    ));
                }
            }
            let rows = summarize(&posterior, reference.map(|r| r.reference()).as_ref())?;
            match out {
                Some(path) => write_summary(&rows, fs::File::create(&path).map_err(|e| Error::io(&path, e))?)?,
                None => write_summary(&rows, std::io::stdout().lock())?,
            }
        }
    }
    Ok(())
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => read_config(p),
        None => Ok(RunConfig::default()),
    }
}

fn data_path(flag: Option<PathBuf>, cfg: &RunConfig) -> Result<PathBuf> {
    flag.or_else(|| cfg.data.clone())
        .ok_or_else(|| Error::config("data", "no data file given (use --data or the `data` config field)"))
}

fn parse_pair(s: &str, d: usize) -> Result<(usize, usize)> {
    let bad = || {
        Error::config(
            "pair",
            format!("expected two distinct 1-based coordinates `j,k` up to {d}, got `{s}`"),
        )
    };
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    let j: usize = a.trim().parse().map_err(|_| bad())?;
    let k: usize = b.trim().parse().map_err(|_| bad())?;
    if j == 0 || k == 0 || j > d || k > d || j == k {
        return Err(bad());
    }
    Ok((j - 1, k - 1))
}

/// `n` draws from `params` as a dataset.
pub fn simulate(params: &ModelParams, n: usize, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    dataset_from_matrix(&params.sample(n, &mut rng)?)
}

/// Density of coordinates `pair` (0-based) on an `m × m` grid over
/// `[-π, π)²`; entry `(a, b)` is at `(-π + 2πa/m, -π + 2πb/m)`.
pub fn density_grid(params: &ModelParams, m: usize, pair: (usize, usize)) -> Result<DMatrix<f64>> {
    if m == 0 {
        return Err(Error::config("grid", "must be at least 1"));
    }
    let sub = params.marginal(&[pair.0, pair.1])?;
    // Bivariate densities are deterministic; the generator is never drawn from.
    let mut rng = ChaCha20Rng::seed_from_u64(0);
    let step = std::f64::consts::TAU / m as f64;
    let at = |a: usize| -std::f64::consts::PI + step * a as f64;
    let mut g = DMatrix::zeros(m, m);
    for a in 0..m {
        for b in 0..m {
            g[(a, b)] = sub.logpdf(&[at(a), at(b)], 1, &mut rng)?.exp();
        }
    }
    Ok(g)
}

/// Writes a grid in long form with columns `theta_j,theta_k,density`.
pub fn write_grid(g: &DMatrix<f64>, pair: (usize, usize), path: &Path) -> Result<()> {
    let m = g.nrows();
    let step = std::f64::consts::TAU / m as f64;
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::numerical(format!("{}: {e}", path.display())))?;
    let to_err = |e: csv::Error| Error::numerical(format!("{}: {e}", path.display()));
    w.write_record([
        format!("theta{}", pair.0 + 1),
        format!("theta{}", pair.1 + 1),
        "density".into(),
    ])
    .map_err(to_err)?;
    for a in 0..m {
        for b in 0..m {
            let ta = -std::f64::consts::PI + step * a as f64;
            let tb = -std::f64::consts::PI + step * b as f64;
            w.write_record([ta.to_string(), tb.to_string(), g[(a, b)].to_string()])
                .map_err(to_err)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub out_dir: PathBuf,
    pub chains: usize,
    pub seed: u64,
    pub resume: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainAcceptance {
    pub chain: usize,
    #[serde(flatten)]
    pub rates: AcceptanceRates,
}

#[derive(Debug, Clone)]
pub struct FitReport {
    /// Draws of all chains, concatenated in chain order.
    pub draws: PosteriorDraws,
    pub acceptance: Vec<ChainAcceptance>,
}

fn chain_dir(out: &Path, chain: usize) -> PathBuf {
    out.join("chains").join(format!("chain{}", chain + 1))
}

/// Runs `opts.chains` chains in parallel, streaming each to
/// `out_dir/chains/chainK/` with periodic checkpoints, then writes the
/// merged draws, `summary.csv` and `acceptance.json` to `out_dir`.
pub fn fit(data: &Dataset, cfg: &RunConfig, opts: &FitOptions) -> Result<FitReport> {
    if opts.chains == 0 {
        return Err(Error::config("chains", "must be at least 1"));
    }
    let priors = cfg.priors(data.dim())?;
    let mcmc = cfg.mcmc(opts.seed);
    mcmc.validate(data.dim())?;
    fs::create_dir_all(&opts.out_dir).map_err(|e| Error::io(&opts.out_dir, e))?;
    let outputs: Vec<Result<(PosteriorDraws, AcceptanceRates)>> = thread::scope(|scope| {
        let handles: Vec<_> = (0..opts.chains)
            .map(|k| {
                let dir = chain_dir(&opts.out_dir, k);
                let (priors, mcmc) = (priors.clone(), mcmc.clone());
                scope.spawn(move || {
                    run_streaming(
                        data,
                        cfg.model,
                        priors,
                        mcmc,
                        k as u64,
                        &dir,
                        cfg.checkpoint_every,
                        opts.resume,
                    )
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(Error::numerical("chain thread panicked")))
            })
            .collect()
    });
    let mut chains = Vec::new();
    let mut acceptance = Vec::new();
    for (k, out) in outputs.into_iter().enumerate() {
        let (draws, rates) = out?;
        chains.push(draws);
        acceptance.push(ChainAcceptance { chain: k + 1, rates });
    }
    let draws = PosteriorDraws::merge(&chains)?;
    write_draws(&draws, &opts.out_dir)?;
    let rows = summarize(&draws, None)?;
    let summary_path = opts.out_dir.join("summary.csv");
    write_summary(
        &rows,
        fs::File::create(&summary_path).map_err(|e| Error::io(&summary_path, e))?,
    )?;
    write_json(&acceptance, &opts.out_dir.join("acceptance.json"))?;
    Ok(FitReport { draws, acceptance })
}

/// Runs one chain, appending every retained draw to `dir` and writing a
/// checkpoint every `every` retained draws and at the end. With `resume`,
/// continues from the checkpoint in `dir` and drops draws written after it.
#[allow(clippy::too_many_arguments)]
fn run_streaming(
    data: &Dataset,
    kind: ModelKind,
    priors: PriorSpec,
    mcmc: McmcConfig,
    chain: u64,
    dir: &Path,
    every: usize,
    resume: bool,
) -> Result<(PosteriorDraws, AcceptanceRates)> {
    let cp_path = dir.join(CHECKPOINT_FILE);
    let (state, previous) = if resume && cp_path.exists() {
        let cp: Checkpoint = read_json_file(&cp_path)?;
        if cp.kind != kind {
            return Err(Error::config(
                "model",
                format!("checkpoint in {} is for {}", dir.display(), cp.kind),
            ));
        }
        let mut prev = read_draws(dir).unwrap_or_else(|_| PosteriorDraws::new(kind, data.dim(), data.missing_cells()));
        let keep = prev
            .iterations
            .iter()
            .take_while(|&&t| t <= cp.iteration as u64)
            .count();
        prev.iterations.truncate(keep);
        prev.mu.truncate(keep);
        prev.concentration.truncate(keep);
        prev.sigma.truncate(keep);
        prev.imputed.truncate(keep);
        (ChainState::restore(data, priors, mcmc, cp)?, prev)
    } else {
        (
            ChainState::new(data, kind, priors, mcmc, chain)?,
            PosteriorDraws::new(kind, data.dim(), data.missing_cells()),
        )
    };
    let mut writer = DrawWriter::create(dir, &previous)?;
    for t in 0..previous.len() {
        writer.append(
            previous.iterations[t],
            [
                &previous.mu[t],
                &previous.concentration[t],
                &previous.sigma[t],
                &previous.imputed[t],
            ],
        )?;
    }
    writer.flush()?;
    let mut since = 0;
    let out = run_from(state, &mut |draw, st| {
        writer.append(
            draw.iteration,
            [&draw.mu, &draw.concentration, &draw.sigma_upper, &draw.imputed],
        )?;
        since += 1;
        if since == every || st.iteration() == st.config().iterations {
            since = 0;
            writer.flush()?;
            write_checkpoint(&st.checkpoint(), &cp_path)?;
        }
        Ok(())
    })?;
    writer.flush()?;
    let draws = PosteriorDraws::merge(&[previous, out.draws])?;
    Ok((draws, out.acceptance))
}

fn write_checkpoint(cp: &Checkpoint, path: &Path) -> Result<()> {
    let tmp = path.with_extension("json.tmp");
    write_json(cp, &tmp)?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreReport {
    pub model: ModelKind,
    /// Mean circular CRPS over observed held-out cells.
    pub crps: f64,
    pub cells: usize,
    pub train_rows: usize,
    pub holdout_rows: usize,
}

/// Fits `cfg.model` on a training split and scores the held-out rows with
/// one posterior predictive draw per retained posterior draw.
pub fn score(data: &Dataset, cfg: &RunConfig, seed: u64) -> Result<ScoreReport> {
    let (train_idx, test_idx) = holdout_split(seed, data.n(), cfg.holdout_fraction)?;
    if test_idx.is_empty() {
        return Err(Error::config("holdout_fraction", "no rows held out"));
    }
    let train = data.select_rows(&train_idx);
    if let Some(j) = train.first_empty_column() {
        return Err(Error::domain(format!(
            "column `{}` has no observed training values",
            train.columns()[j]
        )));
    }
    let fit = run_chain(&train, cfg.model, &cfg.priors(data.dim())?, &cfg.mcmc(seed))?;
    let draws = fit.draws;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(PREDICTIVE_STREAM);
    let d = data.dim();
    let mut predictive: Vec<Vec<f64>> = vec![Vec::with_capacity(draws.len()); d];
    for t in 0..draws.len() {
        let p = ModelParams::from_draw(cfg.model, &draws.mu[t], &draws.concentration[t], &draws.sigma[t])?;
        let x = p.sample(1, &mut rng)?;
        for (j, col) in predictive.iter_mut().enumerate() {
            col.push(x[(0, j)]);
        }
    }
    let mut total = 0.0;
    let mut cells = 0;
    for &i in &test_idx {
        for (j, col) in predictive.iter().enumerate() {
            if let Some(y) = data.get(i, j) {
                total += crps_circular(col, y)?;
                cells += 1;
            }
        }
    }
    if cells == 0 {
        return Err(Error::domain("held-out rows have no observed cells"));
    }
    Ok(ScoreReport {
        model: cfg.model,
        crps: total / cells as f64,
        cells,
        train_rows: train_idx.len(),
        holdout_rows: test_idx.len(),
    })
}
