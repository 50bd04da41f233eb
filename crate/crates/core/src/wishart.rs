//! Inverse Wishart density and sampler, and the truncated Inverse Wishart
//! prior supported on matrices whose entrywise absolute value is also
//! positive definite.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use statrs::function::gamma::ln_gamma;

use crate::error::{check_dim, Error, Result};
use crate::gaussian::{abs_transform, is_positive_definite, CovarianceMatrix, PD_TOL};

/// ln Γ_d(a), the multivariate gamma function.
pub fn ln_multivariate_gamma(d: usize, a: f64) -> f64 {
    let df = d as f64;
    df * (df - 1.0) / 4.0 * std::f64::consts::PI.ln() + (0..d).map(|j| ln_gamma(a - j as f64 / 2.0)).sum::<f64>()
}

/// Log-density of IW(df, scale) at `sigma`, including the normalising constant.
pub fn iw_logpdf(sigma: &CovarianceMatrix, df: f64, scale: &CovarianceMatrix) -> Result<f64> {
    let d = scale.dim();
    check_dim(d, sigma.dim())?;
    if !(df > d as f64 - 1.0) {
        return Err(Error::domain(format!(
            "inverse Wishart df {df} must exceed d - 1 = {}",
            d - 1
        )));
    }
    let dd = d as f64;
    let trace = sigma.solve_matrix(scale.matrix()).trace();
    Ok(0.5 * df * scale.ln_det()
        - 0.5 * df * dd * std::f64::consts::LN_2
        - ln_multivariate_gamma(d, 0.5 * df)
        - 0.5 * (df + dd + 1.0) * sigma.ln_det()
        - 0.5 * trace)
}

/// One draw from IW(df, scale) via the Bartlett decomposition.
///
/// With `scale = L Lᵀ` and Bartlett factor `A`, the draw is
/// `L A⁻ᵀ A⁻¹ Lᵀ`.
pub fn iw_sample<R: Rng + ?Sized>(df: f64, scale: &CovarianceMatrix, rng: &mut R) -> Result<CovarianceMatrix> {
    let d = scale.dim();
    if !(df > d as f64 - 1.0) {
        return Err(Error::domain(format!(
            "inverse Wishart df {df} must exceed d - 1 = {}",
            d - 1
        )));
    }
    let mut a = DMatrix::<f64>::zeros(d, d);
    for i in 0..d {
        let chi = ChiSquared::new(df - i as f64).map_err(|e| Error::domain(e.to_string()))?;
        a[(i, i)] = chi.sample(rng).sqrt();
        for j in 0..i {
            a[(i, j)] = rng.sample(StandardNormal);
        }
    }
    let a_inv = a
        .solve_lower_triangular(&DMatrix::identity(d, d))
        .ok_or_else(|| Error::numerical("singular Bartlett factor"))?;
    let b = scale.cholesky_l() * a_inv.transpose();
    let s = &b * b.transpose();
    CovarianceMatrix::new(0.5 * (&s + s.transpose()))
}

/// Inverse Wishart prior truncated to the set of positive definite matrices
/// whose entrywise absolute value is positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct TiwPrior {
    df: f64,
    scale: CovarianceMatrix,
}

impl TiwPrior {
    /// Requires `df > d + 1` so that the untruncated prior mean exists.
    pub fn new(df: f64, scale: CovarianceMatrix) -> Result<Self> {
        let d = scale.dim() as f64;
        if !(df > d + 1.0) {
            return Err(Error::domain(format!("TIW df {df} must exceed d + 1 = {}", d + 1.0)));
        }
        Ok(TiwPrior { df, scale })
    }

    pub fn df(&self) -> f64 {
        self.df
    }

    pub fn scale(&self) -> &CovarianceMatrix {
        &self.scale
    }

    pub fn dim(&self) -> usize {
        self.scale.dim()
    }
}

/// `true` when both `m` and its entrywise absolute value are positive definite.
pub fn in_support(m: &DMatrix<f64>) -> bool {
    is_positive_definite(m, PD_TOL) && is_positive_definite(&abs_transform(m), PD_TOL)
}

/// Unnormalised TIW log-density, or `None` outside the support.
///
/// The truncation constant is never computed; it cancels in every
/// Metropolis–Hastings ratio.
pub fn tiw_unnorm_logpdf(sigma: &DMatrix<f64>, prior: &TiwPrior) -> Option<f64> {
    if sigma.nrows() != prior.dim() || !in_support(sigma) {
        return None;
    }
    let cov = CovarianceMatrix::new(sigma.clone()).ok()?;
    iw_logpdf(&cov, prior.df, &prior.scale).ok()
}
