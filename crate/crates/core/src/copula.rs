//! The copula case of the TPN (`κ = 0`, uniform margins), its closed-form
//! bivariate density, wrapped Cauchy margins, and the copula extension
//! (CTPN) that binds arbitrary unimodal margins with the TPN copula.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circular::{to_unit_interval_turn, wrap_unchecked, Angle, AngleVector};
use crate::error::{check_dim, Error, Result};
use crate::gaussian::CorrelationMatrix;
use crate::tpn::{bivariate_tau, tpn_logpdf, tpn_sample, TpnParams};

/// Log-density of the TPN copula (`μ = 0`, `κ = 0`) at `θ`.
pub fn copula_logpdf<R: Rng + ?Sized>(
    theta: &[f64],
    sigma: &CorrelationMatrix,
    budget: usize,
    rng: &mut R,
) -> Result<f64> {
    copula_logpdf_with(theta, &TpnParams::copula(sigma.clone())?, budget, rng)
}

fn copula_logpdf_with<R: Rng + ?Sized>(theta: &[f64], copula: &TpnParams, budget: usize, rng: &mut R) -> Result<f64> {
    tpn_logpdf(theta, copula, budget, rng)
}

/// Closed-form bivariate copula density.
///
/// Uses the ordinary-arctangent form of the bracket, which stays finite and
/// continuous through `τ = 0`.
pub fn copula_pdf_bivariate(theta_j: f64, theta_k: f64, mu_j: f64, mu_k: f64, rho: f64) -> Result<f64> {
    if !(rho.abs() < 1.0) {
        return Err(Error::domain(format!("correlation {rho} outside (-1, 1)")));
    }
    let tau = bivariate_tau(theta_j, theta_k, mu_j, mu_k, rho);
    let q = (1.0 - tau * tau).sqrt();
    let bracket = q + tau * ((tau / q).atan() - FRAC_PI_2);
    Ok((1.0 - rho * rho) / (q * q * q) * bracket / (TAU * TAU))
}

/// A unimodal circular margin described by its density, CDF and quantile.
///
/// The CDF is measured counter-clockwise from the mode, so `cdf(mode) = 0`.
pub trait CircularMarginal {
    fn ln_pdf(&self, theta: f64) -> f64;

    fn pdf(&self, theta: f64) -> f64 {
        self.ln_pdf(theta).exp()
    }

    /// Value in `[0, 1)`.
    fn cdf(&self, theta: f64) -> f64;

    /// Inverse of [`CircularMarginal::cdf`] for `u ∈ [0, 1)`.
    fn quantile(&self, u: f64) -> Result<Angle>;
}

/// Wrapped Cauchy distribution with mode `mu_star` and concentration `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWrappedCauchy", into = "RawWrappedCauchy")]
pub struct WrappedCauchyParams {
    mu_star: Angle,
    lambda: f64,
}

#[derive(Serialize, Deserialize)]
struct RawWrappedCauchy {
    #[serde(default)]
    mu_star: f64,
    lambda: f64,
}

impl TryFrom<RawWrappedCauchy> for WrappedCauchyParams {
    type Error = Error;

    fn try_from(raw: RawWrappedCauchy) -> Result<Self> {
        WrappedCauchyParams::new(Angle::new(raw.mu_star)?, raw.lambda)
    }
}

impl From<WrappedCauchyParams> for RawWrappedCauchy {
    fn from(p: WrappedCauchyParams) -> Self {
        RawWrappedCauchy {
            mu_star: p.mu_star.radians(),
            lambda: p.lambda,
        }
    }
}

impl WrappedCauchyParams {
    pub fn new(mu_star: Angle, lambda: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&lambda) {
            return Err(Error::domain(format!(
                "wrapped Cauchy concentration {lambda} outside [0, 1)"
            )));
        }
        Ok(WrappedCauchyParams { mu_star, lambda })
    }

    /// Mode at zero, as required for CTPN margins.
    pub fn centered(lambda: f64) -> Result<Self> {
        Self::new(Angle::ZERO, lambda)
    }

    pub fn mu_star(&self) -> Angle {
        self.mu_star
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

pub fn wc_pdf(theta: f64, p: &WrappedCauchyParams) -> f64 {
    let l = p.lambda;
    (1.0 - l * l) / (1.0 + l * l - 2.0 * l * (theta - p.mu_star.radians()).cos()) / TAU
}

pub fn wc_ln_pdf(theta: f64, p: &WrappedCauchyParams) -> f64 {
    let l = p.lambda;
    (1.0 - l * l).ln() - (1.0 + l * l - 2.0 * l * (theta - p.mu_star.radians()).cos()).ln() - TAU.ln()
}

/// Largest double below one; CDF values are kept in `[0, 1)`.
pub(crate) const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

pub fn wc_cdf(theta: f64, p: &WrappedCauchyParams) -> f64 {
    let l = p.lambda;
    let x = wrap_unchecked(theta - p.mu_star.radians());
    let c = x.cos();
    let arg = (((1.0 + l * l) * c - 2.0 * l) / (1.0 + l * l - 2.0 * l * c)).clamp(-1.0, 1.0);
    let a = arg.acos() / TAU;
    if x >= 0.0 {
        a
    } else {
        (1.0 - a).min(BELOW_ONE)
    }
}

pub fn wc_quantile(u: f64, p: &WrappedCauchyParams) -> Result<Angle> {
    if !(0.0..1.0).contains(&u) {
        return Err(Error::domain(format!("quantile level {u} outside [0, 1)")));
    }
    let l = p.lambda;
    let c = (TAU * u).cos();
    let arg = ((2.0 * l + (1.0 + l * l) * c) / (1.0 + l * l + 2.0 * l * c)).clamp(-1.0, 1.0);
    let s = if u <= 0.5 { 1.0 } else { -1.0 };
    Angle::new(p.mu_star.radians() + s * arg.acos())
}

impl CircularMarginal for WrappedCauchyParams {
    fn ln_pdf(&self, theta: f64) -> f64 {
        wc_ln_pdf(theta, self)
    }

    fn pdf(&self, theta: f64) -> f64 {
        wc_pdf(theta, self)
    }

    fn cdf(&self, theta: f64) -> f64 {
        wc_cdf(theta, self)
    }

    fn quantile(&self, u: f64) -> Result<Angle> {
        wc_quantile(u, self)
    }
}

/// Parameters of the copula extension: locations `μ`, margins with mode at
/// zero, and the copula correlation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CtpnParams<M = WrappedCauchyParams> {
    mu: AngleVector,
    marginals: Vec<M>,
    copula: TpnParams,
}

impl CtpnParams<WrappedCauchyParams> {
    /// Wrapped Cauchy margins with concentrations `lambda`.
    pub fn wrapped_cauchy(mu: AngleVector, lambda: &[f64], sigma: CorrelationMatrix) -> Result<Self> {
        let marginals = lambda
            .iter()
            .map(|&l| WrappedCauchyParams::centered(l))
            .collect::<Result<Vec<_>>>()?;
        Self::new(mu, marginals, sigma)
    }

    pub fn lambda(&self) -> Vec<f64> {
        self.marginals.iter().map(|m| m.lambda).collect()
    }
}

impl<M: CircularMarginal> CtpnParams<M> {
    pub fn new(mu: AngleVector, marginals: Vec<M>, sigma: CorrelationMatrix) -> Result<Self> {
        check_dim(mu.dim(), marginals.len())?;
        check_dim(mu.dim(), sigma.dim())?;
        for (j, m) in marginals.iter().enumerate() {
            if m.cdf(0.0) != 0.0 {
                return Err(Error::domain(format!("margin {j} must have its mode at zero")));
            }
        }
        Ok(CtpnParams {
            mu,
            marginals,
            copula: TpnParams::copula(sigma)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.mu.dim()
    }

    pub fn mu(&self) -> &AngleVector {
        &self.mu
    }

    pub fn marginals(&self) -> &[M] {
        &self.marginals
    }

    pub fn sigma(&self) -> &CorrelationMatrix {
        self.copula.sigma()
    }

    /// Maps `θ` to the copula scale, `2π F_j(θ_j − μ_j)` wrapped to `[-π, π)`.
    pub fn to_copula_scale(&self, theta: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), theta.len())?;
        Ok(theta
            .iter()
            .zip(self.mu.as_slice())
            .zip(&self.marginals)
            .map(|((&t, &m), f)| wrap_unchecked(TAU * f.cdf(t - m)))
            .collect())
    }
}

/// `n × d` draws from the copula extension.
pub fn ctpn_sample<M: CircularMarginal, R: Rng + ?Sized>(
    params: &CtpnParams<M>,
    n: usize,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let u = tpn_sample(&params.copula, n, rng)?.angles;
    let mu = params.mu.as_slice();
    let mut out = DMatrix::zeros(n, params.dim());
    for j in 0..params.dim() {
        for i in 0..n {
            let level = to_unit_interval_turn(u[(i, j)]) / TAU;
            let x = params.marginals[j].quantile(level.min(BELOW_ONE))?;
            out[(i, j)] = wrap_unchecked(mu[j] + x.radians());
        }
    }
    Ok(out)
}

/// Log-density of the copula extension at `θ`.
pub fn ctpn_logpdf<M: CircularMarginal, R: Rng + ?Sized>(
    theta: &[f64],
    params: &CtpnParams<M>,
    budget: usize,
    rng: &mut R,
) -> Result<f64> {
    let z = params.to_copula_scale(theta)?;
    let margins: f64 = theta
        .iter()
        .zip(params.mu.as_slice())
        .zip(&params.marginals)
        .map(|((&t, &m), f)| f.ln_pdf(t - m))
        .sum();
    Ok(params.dim() as f64 * TAU.ln() + copula_logpdf_with(&z, &params.copula, budget, rng)? + margins)
}

/// The copula density of a single pair evaluated on an `m × m` grid over
/// `[-π, π)²`; row `a` is `θ_j = -π + 2πa/m`.
pub fn bivariate_grid(rho: f64, m: usize) -> Result<DMatrix<f64>> {
    let step = TAU / m as f64;
    let mut grid = DMatrix::zeros(m, m);
    for a in 0..m {
        for b in 0..m {
            grid[(a, b)] = copula_pdf_bivariate(-PI + step * a as f64, -PI + step * b as f64, 0.0, 0.0, rho)?;
        }
    }
    Ok(grid)
}
