//! Simulate from a known TPN, fit it by MCMC and print the posterior
//! summary next to the true values.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use tpn::circular::AngleVector;
use tpn::diagnostics::summarize;
use tpn::gaussian::CorrelationMatrix;
use tpn::io::{dataset_from_matrix, write_summary, ModelParams};
use tpn::mcmc::{run_chain, McmcConfig, PriorSpec};
use tpn::model::ModelKind;
use tpn::tpn::TpnParams;

fn main() -> tpn::Result<()> {
    let truth = ModelParams::Tpn(TpnParams::new(
        AngleVector::new([0.5, -1.0, 2.5])?,
        vec![1.1; 3],
        CorrelationMatrix::from_upper(3, &[0.5, -0.4, 0.2])?,
    )?);
    let mut rng = ChaCha20Rng::seed_from_u64(21);
    let data = dataset_from_matrix(&truth.sample(100, &mut rng)?)?;

    let config = McmcConfig {
        seed: 21,
        ..McmcConfig::default()
    };
    let out = run_chain(&data, ModelKind::Tpn, &PriorSpec::default_for(3), &config)?;
    let acc = &out.acceptance;
    println!(
        "retained {} draws; acceptance mu {:.2?}, sigma {:.2}",
        out.draws.len(),
        acc.mu,
        acc.sigma
    );

    let rows = summarize(&out.draws, Some(&truth.reference()))?;
    write_summary(&rows, std::io::stdout().lock())
}
