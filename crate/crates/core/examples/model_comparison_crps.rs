//! Compare TPN and CTPN fits on held-out rows by mean circular CRPS.
//! The data come from a CTPN with very different margin concentrations,
//! which the TPN margins cannot match.

use tpn::circular::AngleVector;
use tpn::cli::{score, simulate};
use tpn::copula::CtpnParams;
use tpn::gaussian::CorrelationMatrix;
use tpn::io::{ModelParams, RunConfig};
use tpn::model::ModelKind;

fn main() -> tpn::Result<()> {
    let truth = ModelParams::Ctpn(CtpnParams::wrapped_cauchy(
        AngleVector::new([0.5, -1.0, 2.5])?,
        &[0.2, 0.6, 0.9],
        CorrelationMatrix::from_upper(3, &[0.5, -0.4, 0.2])?,
    )?);
    let data = simulate(&truth, 300, 42)?;
    for model in [ModelKind::Tpn, ModelKind::Ctpn] {
        let cfg = RunConfig {
            model,
            iterations: 12_000,
            burn_in: 4_000,
            thin: 8,
            ..RunConfig::default()
        };
        let r = score(&data, &cfg, 42)?;
        println!("{model}: CRPS {:.4} over {} held-out cells", r.crps, r.cells);
    }
    Ok(())
}
