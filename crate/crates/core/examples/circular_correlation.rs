//! Rivest's circular correlation of bivariate TPN samples across ρ.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use tpn::circular::AngleVector;
use tpn::diagnostics::rivest_correlation;
use tpn::gaussian::CorrelationMatrix;
use tpn::tpn::{tpn_sample, TpnParams};

fn main() -> tpn::Result<()> {
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    println!("rho    rivest");
    for rho in [-0.8, -0.4, 0.0, 0.4, 0.8] {
        let p = TpnParams::new(
            AngleVector::new([0.5, -1.0])?,
            vec![1.1, 1.1],
            CorrelationMatrix::from_upper(2, &[rho])?,
        )?;
        let a = tpn_sample(&p, 20_000, &mut rng)?.angles;
        let x: Vec<f64> = a.column(0).iter().copied().collect();
        let y: Vec<f64> = a.column(1).iter().copied().collect();
        println!("{rho:+.1}   {:+.3}", rivest_correlation(&x, &y, 0.5, -1.0)?);
    }
    Ok(())
}
