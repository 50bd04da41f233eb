//! Evaluate TPN log-densities in two and three dimensions.
//!
//! In two dimensions the orthant moment is a one-dimensional integral, so
//! the density is exact. From three dimensions on it is a Monte Carlo
//! estimate whose precision grows with the budget.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use tpn::circular::AngleVector;
use tpn::gaussian::CorrelationMatrix;
use tpn::tpn::{tpn_logpdf, univariate_pdf, TpnParams};

fn main() -> tpn::Result<()> {
    let mut rng = ChaCha20Rng::seed_from_u64(1);

    let p1 = TpnParams::new(AngleVector::new([0.0])?, vec![1.1], CorrelationMatrix::identity(1))?;
    for theta in [0.0, 1.0, 3.0] {
        let a = tpn_logpdf(&[theta], &p1, 1, &mut rng)?.exp();
        println!(
            "d=1 theta={theta:.1}: {a:.6} (closed form {:.6})",
            univariate_pdf(theta, 0.0, 1.1)
        );
    }

    let p2 = TpnParams::new(
        AngleVector::new([0.3, -0.2])?,
        vec![1.1, 2.0],
        CorrelationMatrix::from_upper(2, &[0.6])?,
    )?;
    println!(
        "d=2 at the mean: {:.6}",
        tpn_logpdf(&[0.3, -0.2], &p2, 1, &mut rng)?.exp()
    );

    let p3 = TpnParams::new(
        AngleVector::new([0.0, 0.0, 0.0])?,
        vec![1.0, 1.0, 1.0],
        CorrelationMatrix::from_upper(3, &[0.5, 0.3, 0.4])?,
    )?;
    for budget in [1_000, 10_000, 100_000] {
        let v = tpn_logpdf(&[0.2, 0.1, -0.3], &p3, budget, &mut rng)?;
        println!("d=3 budget {budget:>6}: log density {v:.5}");
    }
    Ok(())
}
