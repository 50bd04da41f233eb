//! Tabulate the closed-form bivariate copula density and show that its
//! mode runs along a diagonal whose direction follows the sign of ρ.

use std::f64::consts::{PI, TAU};

use tpn::copula::copula_pdf_bivariate;

fn main() -> tpn::Result<()> {
    let m = 8;
    for rho in [0.7, -0.7] {
        println!("rho = {rho}");
        for a in 0..m {
            let t1 = -PI + TAU * a as f64 / m as f64;
            let row: Vec<String> = (0..m)
                .map(|b| {
                    let t2 = -PI + TAU * b as f64 / m as f64;
                    copula_pdf_bivariate(t1, t2, 0.0, 0.0, rho).map(|v| format!("{v:.3}"))
                })
                .collect::<tpn::Result<_>>()?;
            println!("  {}", row.join(" "));
        }
    }
    let flat = copula_pdf_bivariate(1.0, -2.0, 0.0, 0.0, 0.0)?;
    println!("independent copula: {flat:.6} = 1/(4π²) = {:.6}", 1.0 / (TAU * TAU));
    Ok(())
}
