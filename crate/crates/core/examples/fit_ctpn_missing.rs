//! Fit a CTPN to data with missing cells. The sampler imputes every
//! masked angle, and the 95% intervals of the imputations are checked
//! against the values that were removed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use tpn::circular::{wrap_unchecked, AngleVector};
use tpn::copula::CtpnParams;
use tpn::dataset::Dataset;
use tpn::gaussian::CorrelationMatrix;
use tpn::io::ModelParams;
use tpn::mcmc::{run_chain, McmcConfig, PriorSpec};
use tpn::model::ModelKind;

fn main() -> tpn::Result<()> {
    let truth = ModelParams::Ctpn(CtpnParams::wrapped_cauchy(
        AngleVector::new([0.0, 2.0])?,
        &[0.6, 0.8],
        CorrelationMatrix::from_upper(2, &[0.7])?,
    )?);
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let full = truth.sample(150, &mut rng)?;
    let mut removed = Vec::new();
    let rows = (0..full.nrows())
        .map(|i| {
            (0..2)
                .map(|j| {
                    if rng.random::<f64>() < 0.15 {
                        removed.push(full[(i, j)]);
                        None
                    } else {
                        Some(full[(i, j)])
                    }
                })
                .collect()
        })
        .collect();
    let data = Dataset::new(vec!["a".into(), "b".into()], rows)?;

    let config = McmcConfig {
        iterations: 10_000,
        burn_in: 3_000,
        thin: 5,
        seed: 5,
        ..McmcConfig::default()
    };
    let out = run_chain(&data, ModelKind::Ctpn, &PriorSpec::default_for(2), &config)?;
    let draws = out.draws;

    let mut covered = 0;
    for (m, &value) in removed.iter().enumerate() {
        let mut d: Vec<f64> = draws.imputed.iter().map(|row| wrap_unchecked(row[m] - value)).collect();
        d.sort_by(f64::total_cmp);
        let (lo, hi) = (d[d.len() * 25 / 1000], d[d.len() * 975 / 1000]);
        covered += usize::from(lo <= 0.0 && 0.0 <= hi);
    }
    println!(
        "{} cells imputed; {covered} intervals contain the removed value",
        removed.len()
    );
    for j in 0..2 {
        let mean = draws.concentration.iter().map(|c| c[j]).sum::<f64>() / draws.len() as f64;
        println!("lambda[{}] posterior mean {mean:.3}", j + 1);
    }
    Ok(())
}
