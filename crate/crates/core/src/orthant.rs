//! Moments of a multivariate normal truncated to the positive orthant.
//!
//! For `X ~ N(η, V)` this computes `P(X > 0)` and `E[X₁ ⋯ X_d | X > 0]`.
//! One and two dimensions are handled deterministically (closed form and
//! adaptive quadrature). Higher dimensions use a coordinate-wise Gibbs
//! sampler for the product moment and the GHK simulator for the orthant
//! probability.

use nalgebra::DVector;
use rand::Rng;

use crate::error::{check_dim, Error, Result};
use crate::gaussian::CovarianceMatrix;
use crate::normal::{
    ln_positive_part_mean, ln_std_cdf, ln_std_pdf, sample_std_truncated_below, sample_truncated_below,
};
use crate::quadrature::integrate_log;

/// Orthant probabilities below this are reported as unevaluable.
pub const MIN_ORTHANT_PROB: f64 = 1e-300;
/// Gibbs sweeps discarded before accumulating the product moment.
pub const GIBBS_BURN_IN: usize = 100;
/// Default Monte Carlo budget for `d ≥ 3`.
pub const DEFAULT_BUDGET: usize = 100_000;
/// Relative tolerance of the two-dimensional quadrature.
pub const QUAD_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthantStats {
    /// `E[X₁ ⋯ X_d | X > 0]`.
    pub prod_moment: f64,
    /// `ln P(X > 0)`.
    pub ln_orthant_prob: f64,
    /// Monte Carlo standard error of `prod_moment` (zero when deterministic).
    pub prod_moment_se: f64,
}

impl OrthantStats {
    pub fn orthant_prob(&self) -> f64 {
        self.ln_orthant_prob.exp()
    }
}

pub fn orthant_tmvn_stats<R: Rng + ?Sized>(
    eta: &DVector<f64>,
    v: &CovarianceMatrix,
    budget: usize,
    rng: &mut R,
) -> Result<OrthantStats> {
    let d = v.dim();
    check_dim(d, eta.len())?;
    if budget == 0 {
        return Err(Error::domain("orthant budget must be at least 1"));
    }
    let stats = match d {
        1 => one_dim(eta[0], v.matrix()[(0, 0)]),
        2 => two_dim(eta, v)?,
        _ => monte_carlo(eta, v, budget, rng)?,
    };
    if !(stats.ln_orthant_prob >= MIN_ORTHANT_PROB.ln()) {
        return Err(Error::numerical(format!(
            "orthant probability exp({}) below {MIN_ORTHANT_PROB:e}",
            stats.ln_orthant_prob
        )));
    }
    if !(stats.prod_moment.is_finite() && stats.prod_moment > 0.0) {
        return Err(Error::numerical(format!(
            "non-finite product moment {}",
            stats.prod_moment
        )));
    }
    Ok(stats)
}

fn one_dim(eta: f64, var: f64) -> OrthantStats {
    let sd = var.sqrt();
    let t = eta / sd;
    let ln_p = ln_std_cdf(t);
    OrthantStats {
        prod_moment: sd * (ln_positive_part_mean(t) - ln_p).exp(),
        ln_orthant_prob: ln_p,
        prod_moment_se: 0.0,
    }
}

/// Integrates over the first coordinate in standardised form; the second
/// coordinate is handled analytically through its conditional normal law.
fn two_dim(eta: &DVector<f64>, v: &CovarianceMatrix) -> Result<OrthantStats> {
    let m = v.matrix();
    let s1 = m[(0, 0)].sqrt();
    let slope = m[(0, 1)] / s1;
    let s2 = (m[(1, 1)] - slope * slope).max(0.0).sqrt();
    if s2 <= 0.0 {
        return Err(Error::numerical("degenerate bivariate covariance"));
    }
    let a = -eta[0] / s1;
    let lo = a.max(-40.0);
    let hi = a.max(0.0) + 40.0;
    let cond_t = |z: f64| (eta[1] + slope * z) / s2;

    let ln_p = integrate_log(|z| ln_std_pdf(z) + ln_std_cdf(cond_t(z)), lo, hi, QUAD_REL_TOL)
        .ok_or_else(|| Error::numerical("orthant probability quadrature underflow"))?;
    let ln_m = integrate_log(
        |z| {
            let x1 = eta[0] + s1 * z;
            if x1 <= 0.0 {
                return f64::NEG_INFINITY;
            }
            ln_std_pdf(z) + x1.ln() + s2.ln() + ln_positive_part_mean(cond_t(z))
        },
        lo,
        hi,
        QUAD_REL_TOL,
    )
    .ok_or_else(|| Error::numerical("product moment quadrature underflow"))?;
    Ok(OrthantStats {
        prod_moment: (ln_m - ln_p).exp(),
        ln_orthant_prob: ln_p,
        prod_moment_se: 0.0,
    })
}

fn monte_carlo<R: Rng + ?Sized>(
    eta: &DVector<f64>,
    v: &CovarianceMatrix,
    budget: usize,
    rng: &mut R,
) -> Result<OrthantStats> {
    let ln_p = ghk_ln_orthant_prob(eta, v, budget, rng);
    let (prod_moment, se) = gibbs_product_moment(eta, v, budget, rng);
    Ok(OrthantStats {
        prod_moment,
        ln_orthant_prob: ln_p,
        prod_moment_se: se,
    })
}

/// GHK estimate of `ln P(N(η, V) > 0)`.
pub fn ghk_ln_orthant_prob<R: Rng + ?Sized>(
    eta: &DVector<f64>,
    v: &CovarianceMatrix,
    draws: usize,
    rng: &mut R,
) -> f64 {
    let d = v.dim();
    let l = v.cholesky_l();
    let mut e = vec![0.0; d];
    let mut ln_weights = Vec::with_capacity(draws);
    for _ in 0..draws {
        let mut ln_w = 0.0;
        for k in 0..d {
            let partial: f64 = (0..k).map(|j| l[(k, j)] * e[j]).sum();
            let bound = (-eta[k] - partial) / l[(k, k)];
            ln_w += ln_std_cdf(-bound);
            e[k] = sample_std_truncated_below(bound, rng);
        }
        ln_weights.push(ln_w);
    }
    log_mean_exp(&ln_weights)
}

fn log_mean_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let s: f64 = xs.iter().map(|x| (x - max).exp()).sum();
    max + (s / xs.len() as f64).ln()
}

/// Gibbs estimate of `E[∏ X_k | X > 0]` with a batch-means standard error.
fn gibbs_product_moment<R: Rng + ?Sized>(
    eta: &DVector<f64>,
    v: &CovarianceMatrix,
    budget: usize,
    rng: &mut R,
) -> (f64, f64) {
    let d = v.dim();
    let precision = v.inverse();
    let cond_sd: Vec<f64> = (0..d).map(|k| precision[(k, k)].recip().sqrt()).collect();
    let mut x: Vec<f64> = (0..d).map(|k| eta[k].max(0.0) + v.matrix()[(k, k)].sqrt()).collect();

    let sweep = |x: &mut Vec<f64>, rng: &mut R| {
        for k in 0..d {
            let shift: f64 = (0..d)
                .filter(|&j| j != k)
                .map(|j| precision[(k, j)] * (x[j] - eta[j]))
                .sum();
            let mean = eta[k] - shift / precision[(k, k)];
            x[k] = sample_truncated_below(mean, cond_sd[k], 0.0, rng).max(f64::MIN_POSITIVE);
        }
    };
    for _ in 0..GIBBS_BURN_IN {
        sweep(&mut x, rng);
    }

    let batches = budget.clamp(1, 50);
    let per_batch = budget / batches;
    let mut batch_means = Vec::with_capacity(batches);
    let mut total = 0.0;
    let mut count = 0usize;
    for b in 0..batches {
        let size = if b + 1 == batches {
            budget - per_batch * (batches - 1)
        } else {
            per_batch
        };
        let mut acc = 0.0;
        for _ in 0..size {
            sweep(&mut x, rng);
            acc += x.iter().product::<f64>();
        }
        total += acc;
        count += size;
        if size > 0 {
            batch_means.push(acc / size as f64);
        }
    }
    let mean = total / count as f64;
    let se = if batch_means.len() > 1 {
        let nb = batch_means.len() as f64;
        let var = batch_means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (nb - 1.0);
        (var / nb).sqrt()
    } else {
        f64::NAN
    };
    (mean, se)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{dmatrix, dvector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use std::f64::consts::PI;

    fn rng() -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(3)
    }

    #[test]
    fn half_normal_closed_form() {
        let v = CovarianceMatrix::identity(1);
        let s = orthant_tmvn_stats(&dvector![0.0], &v, 1, &mut rng()).unwrap();
        assert_relative_eq!(s.orthant_prob(), 0.5, max_relative = 1e-14);
        assert_relative_eq!(s.prod_moment, (2.0 / PI).sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn independent_bivariate() {
        let v = CovarianceMatrix::identity(2);
        let s = orthant_tmvn_stats(&dvector![0.0, 0.0], &v, 1, &mut rng()).unwrap();
        assert_relative_eq!(s.orthant_prob(), 0.25, max_relative = 1e-10);
        assert_relative_eq!(s.prod_moment, 2.0 / PI, max_relative = 1e-10);
    }

    #[test]
    fn bivariate_orthant_probability_closed_form() {
        // P(X > 0) for centred X with correlation r is 1/4 + asin(r)/(2π)
        for &r in &[-0.95, -0.5, 0.0, 0.3, 0.9] {
            let v = CovarianceMatrix::new(dmatrix![2.0, r * 2.0; r * 2.0, 2.0]).unwrap();
            let s = orthant_tmvn_stats(&dvector![0.0, 0.0], &v, 1, &mut rng()).unwrap();
            assert_relative_eq!(s.orthant_prob(), 0.25 + r.asin() / (2.0 * PI), max_relative = 1e-9);
        }
    }

    #[test]
    fn trivariate_independent_monte_carlo() {
        let v = CovarianceMatrix::identity(3);
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let s = orthant_tmvn_stats(&dvector![0.0, 0.0, 0.0], &v, 1_000_000, &mut rng).unwrap();
        let truth = (2.0 / PI).powf(1.5);
        assert!(
            (s.prod_moment - truth).abs() < 3.0 * s.prod_moment_se,
            "{s:?} vs {truth}"
        );
        assert_relative_eq!(s.orthant_prob(), 0.125, max_relative = 1e-12);
    }

    #[test]
    fn underflow_is_an_error() {
        let v = CovarianceMatrix::identity(1);
        assert!(orthant_tmvn_stats(&dvector![-40.0], &v, 1, &mut rng()).is_err());
        let v = CovarianceMatrix::identity(2);
        assert!(orthant_tmvn_stats(&dvector![-30.0, -30.0], &v, 1, &mut rng()).is_err());
        assert!(orthant_tmvn_stats(&dvector![0.0, 0.0], &v, 0, &mut rng()).is_err());
    }
}
