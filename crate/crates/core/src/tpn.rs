//! The toroidal projected normal distribution.
//!
//! `Θ ~ TPN_d(μ, κ, Σ)` is obtained by drawing `X_c ~ N(κ, Σ_c)` and
//! `X_s ~ N(0, Σ)` independently, with `Σ_c = |Σ|` entrywise, and setting
//! `Θ_j = μ_j + atan*(X_{s,j}, X_{c,j})`.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::circular::{mod_atan, wrap_unchecked, AngleVector};
use crate::error::{check_dim, Error, Result};
use crate::gaussian::{mvn_logpdf, mvn_sample, CorrelationMatrix, CovarianceMatrix};
use crate::normal::{std_cdf, std_pdf};
use crate::orthant::orthant_tmvn_stats;

/// Largest condition number of `V⁻¹` accepted by [`build_v`].
pub const MAX_V_CONDITION: f64 = 1e12;

/// Parameters of a TPN distribution with its derived covariance `Σ_c`.
#[derive(Debug, Clone, PartialEq)]
pub struct TpnParams {
    mu: AngleVector,
    kappa: Vec<f64>,
    sigma: CorrelationMatrix,
    sigma_c: CovarianceMatrix,
}

impl TpnParams {
    pub fn new(mu: AngleVector, kappa: Vec<f64>, sigma: CorrelationMatrix) -> Result<Self> {
        let d = mu.dim();
        check_dim(d, kappa.len())?;
        check_dim(d, sigma.dim())?;
        if let Some(k) = kappa.iter().find(|k| !(k.is_finite() && **k >= 0.0)) {
            return Err(Error::domain(format!(
                "concentration {k} must be finite and non-negative"
            )));
        }
        let sigma_c = sigma
            .as_covariance()
            .abs_transform()
            .map_err(|_| Error::NotPositiveDefinite("entrywise absolute value of the correlation matrix".into()))?;
        Ok(TpnParams {
            mu,
            kappa,
            sigma,
            sigma_c,
        })
    }

    /// The copula case: `κ = 0`, `μ = 0`.
    pub fn copula(sigma: CorrelationMatrix) -> Result<Self> {
        let d = sigma.dim();
        Self::new(AngleVector::new(vec![0.0; d])?, vec![0.0; d], sigma)
    }

    pub fn dim(&self) -> usize {
        self.mu.dim()
    }

    pub fn mu(&self) -> &AngleVector {
        &self.mu
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    pub fn sigma(&self) -> &CorrelationMatrix {
        &self.sigma
    }

    pub fn sigma_c(&self) -> &CovarianceMatrix {
        &self.sigma_c
    }

    /// Parameters of the marginal law of the coordinates in `indices`.
    pub fn marginal(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&j) = indices.iter().find(|&&j| j >= self.dim()) {
            return Err(Error::domain(format!(
                "coordinate {j} out of range for d = {}",
                self.dim()
            )));
        }
        Self::new(
            AngleVector::new(indices.iter().map(|&j| self.mu.as_slice()[j]))?,
            indices.iter().map(|&j| self.kappa[j]).collect(),
            self.sigma.submatrix(indices)?,
        )
    }
}

/// Draws from a TPN distribution, `n × d`, with the latent radii.
#[derive(Debug, Clone, PartialEq)]
pub struct TpnDraws {
    pub angles: DMatrix<f64>,
    pub radii: DMatrix<f64>,
}

pub fn tpn_sample<R: Rng + ?Sized>(params: &TpnParams, n: usize, rng: &mut R) -> Result<TpnDraws> {
    if n == 0 {
        return Err(Error::domain("sample size must be at least 1"));
    }
    let d = params.dim();
    let kappa = DVector::from_column_slice(&params.kappa);
    let zero = DVector::zeros(d);
    let mut angles = DMatrix::zeros(n, d);
    let mut radii = DMatrix::zeros(n, d);
    for i in 0..n {
        let (xc, xs) = loop {
            let xc = mvn_sample(&kappa, &params.sigma_c, rng);
            let xs = mvn_sample(&zero, params.sigma.as_covariance(), rng);
            // the origin has probability zero; redraw rather than bias
            if (0..d).all(|j| xc[j] != 0.0 || xs[j] != 0.0) {
                break (xc, xs);
            }
        };
        for j in 0..d {
            let a = mod_atan(xs[j], xc[j])?.radians();
            angles[(i, j)] = wrap_unchecked(params.mu.as_slice()[j] + a);
            radii[(i, j)] = xc[j].hypot(xs[j]);
        }
    }
    Ok(TpnDraws { angles, radii })
}

/// Density of the univariate TPN (projected normal with unit variance).
pub fn univariate_pdf(theta: f64, mu: f64, kappa: f64) -> f64 {
    let (s, c) = (theta - mu).sin_cos();
    std_pdf(kappa) / TAU.sqrt() + kappa * c * std_pdf(kappa * s) * std_cdf(kappa * c)
}

/// The Gaussian system of the radial representation at a fixed `θ`.
#[derive(Debug, Clone)]
pub struct VSystem {
    /// `V = (T_c Σ_c⁻¹ T_c + T_s Σ⁻¹ T_s)⁻¹`.
    pub v: CovarianceMatrix,
    pub v_inv: DMatrix<f64>,
    /// `η = V T_c Σ_c⁻¹ κ`.
    pub eta: DVector<f64>,
    /// `−½ κᵀ (I − Σ_c⁻¹ T_c V T_c) Σ_c⁻¹ κ`.
    pub const_term: f64,
}

pub fn build_v(theta: &[f64], params: &TpnParams) -> Result<VSystem> {
    let d = params.dim();
    check_dim(d, theta.len())?;
    let mu = params.mu.as_slice();
    let (ts, tc): (Vec<f64>, Vec<f64>) = (0..d).map(|j| (theta[j] - mu[j]).sin_cos()).unzip();
    let prec_c = params.sigma_c.inverse();
    let prec_s = params.sigma.as_covariance().inverse();
    let v_inv = DMatrix::from_fn(d, d, |j, k| {
        tc[j] * prec_c[(j, k)] * tc[k] + ts[j] * prec_s[(j, k)] * ts[k]
    });

    let eig = v_inv.clone().symmetric_eigen().eigenvalues;
    let (lo, hi) = (eig.min(), eig.max());
    if !(lo > 0.0 && hi / lo <= MAX_V_CONDITION) {
        return Err(Error::numerical(format!(
            "V is singular or ill-conditioned (eigenvalues {lo:e} .. {hi:e})"
        )));
    }
    let v_inv_cov =
        CovarianceMatrix::new(v_inv.clone()).map_err(|e| Error::numerical(format!("V⁻¹ not factorisable: {e}")))?;
    let v =
        CovarianceMatrix::new(v_inv_cov.inverse()).map_err(|e| Error::numerical(format!("V not factorisable: {e}")))?;

    let kappa = DVector::from_column_slice(&params.kappa);
    let pk = &prec_c * &kappa;
    let b = DVector::from_fn(d, |j, _| tc[j] * pk[j]);
    let eta = v_inv_cov.solve(&b);
    let const_term = -0.5 * (kappa.dot(&pk) - eta.dot(&b));
    Ok(VSystem {
        v,
        v_inv,
        eta,
        const_term,
    })
}

/// Log-density of the TPN at `θ`.
///
/// Exact at `d ≤ 2`; for `d ≥ 3` the orthant moment is estimated with
/// `budget` Monte Carlo draws from `rng`.
pub fn tpn_logpdf<R: Rng + ?Sized>(theta: &[f64], params: &TpnParams, budget: usize, rng: &mut R) -> Result<f64> {
    let d = params.dim() as f64;
    let sys = build_v(theta, params)?;
    let stats = orthant_tmvn_stats(&sys.eta, &sys.v, budget, rng)?;
    let ln_2pi = TAU.ln();
    Ok(
        -0.5 * d * ln_2pi - 0.5 * params.sigma_c.ln_det() - 0.5 * params.sigma.as_covariance().ln_det()
            + sys.const_term
            + stats.prod_moment.ln()
            + 0.5 * sys.v.ln_det()
            + stats.ln_orthant_prob,
    )
}

/// Log of the joint density of radii and angles.
pub fn joint_latent_logpdf(r: &[f64], theta: &[f64], params: &TpnParams) -> Result<f64> {
    let d = params.dim();
    check_dim(d, r.len())?;
    check_dim(d, theta.len())?;
    if let Some(x) = r.iter().find(|x| !(**x > 0.0)) {
        return Err(Error::domain(format!("radius {x} must be positive")));
    }
    let mu = params.mu.as_slice();
    let xc = DVector::from_fn(d, |j, _| r[j] * (theta[j] - mu[j]).cos());
    let xs = DVector::from_fn(d, |j, _| r[j] * (theta[j] - mu[j]).sin());
    let kappa = DVector::from_column_slice(&params.kappa);
    Ok(mvn_logpdf(&xc, &kappa, &params.sigma_c)?
        + mvn_logpdf(&xs, &DVector::zeros(d), params.sigma.as_covariance())?
        + r.iter().map(|x| x.ln()).sum::<f64>())
}

/// `+1` for non-negative arguments, `-1` otherwise.
#[inline]
pub fn sign(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// `τ = −|ρ| cos(θ̄_j − sign(ρ) θ̄_k)` with `θ̄ = θ − μ`.
pub fn bivariate_tau(theta_j: f64, theta_k: f64, mu_j: f64, mu_k: f64, rho: f64) -> f64 {
    -rho.abs() * ((theta_j - mu_j) - sign(rho) * (theta_k - mu_k)).cos()
}
