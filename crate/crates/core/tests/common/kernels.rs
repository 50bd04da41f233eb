//! Stationarity checks of the individual MCMC updates against independent
//! posterior oracles. Each returns a goodness-of-fit p-value.

use std::f64::consts::{PI, TAU};

use nalgebra::{dmatrix, DMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};
use tpn::circular::AngleVector;
use tpn::copula::{ctpn_sample, CtpnParams};
use tpn::dataset::Dataset;
use tpn::gaussian::{CorrelationMatrix, CovarianceMatrix};
use tpn::mcmc::{remap_identifiability, ChainState, McmcConfig, PriorSpec};
use tpn::model::ModelKind;
use tpn::tpn::{tpn_logpdf, tpn_sample, TpnParams};
use tpn::wishart::iw_sample;

use super::{energy_test, ks_pvalue, GridCdf};

/// Projected-normal density of `θ` for latent mean `(κ cos μ, κ sin μ)` and
/// covariance `σ² I`.
pub fn pn_pdf(theta: f64, mu: f64, kappa: f64, sigma2: f64) -> f64 {
    let z = Normal::new(0.0, 1.0).unwrap();
    let k = kappa / sigma2.sqrt();
    let (s, c) = (theta - mu).sin_cos();
    (-0.5 * k * k).exp() / TAU + k * c * z.pdf(k * s) * z.cdf(k * c)
}

pub fn wc_pdf(x: f64, lambda: f64) -> f64 {
    (1.0 - lambda * lambda) / (TAU * (1.0 + lambda * lambda - 2.0 * lambda * x.cos()))
}

pub fn config(seed: u64) -> McmcConfig {
    McmcConfig {
        seed,
        adapt: false,
        ..McmcConfig::default()
    }
}

pub fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn tpn_params(mu: &[f64], kappa: &[f64], upper: &[f64]) -> TpnParams {
    TpnParams::new(
        AngleVector::new(mu.iter().copied()).unwrap(),
        kappa.to_vec(),
        CorrelationMatrix::from_upper(mu.len(), upper).unwrap(),
    )
    .unwrap()
}

pub fn univariate_data(mu: f64, kappa: f64, n: usize, seed: u64) -> Dataset {
    let p = tpn_params(&[mu], &[kappa], &[]);
    let a = tpn_sample(&p, n, &mut ChaCha20Rng::seed_from_u64(seed)).unwrap().angles;
    Dataset::from_rows(&rows(&a)).unwrap()
}

/// Slice update of one radius with everything else frozen, against the
/// conditional `r exp(−|r u − κ e₁|² / 2σ²)` on a fine grid.
pub fn radius_pvalue() -> f64 {
    let theta = 2.0;
    let data = Dataset::from_rows(&[vec![theta]]).unwrap();
    let mut st = ChainState::new(&data, ModelKind::Tpn, PriorSpec::default_for(1), config(1), 0).unwrap();
    let (kappa, sigma2) = (1.5, 0.7);
    st.set_sigma(dmatrix![sigma2]).unwrap();
    st.set_concentration(&[kappa]).unwrap();
    st.set_mu(&[0.0]).unwrap();
    let mut rs = Vec::new();
    for t in 0..50_000 {
        st.update_radii();
        if t % 5 == 0 {
            rs.push(st.radii()[0]);
        }
    }
    let grid = GridCdf::from_log(0.0, 12.0, 20_000, |r| {
        let (xc, xs) = (r * theta.cos() - kappa, r * theta.sin());
        r.ln() - 0.5 * (xc * xc + xs * xs) / sigma2
    });
    ks_pvalue(&rs, |x| grid.cdf(x))
}

fn kappa_chain(st: &mut ChainState, j: usize, draws: usize, thin: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(draws);
    for t in 0..draws * thin {
        st.update_radii();
        st.update_kappa_at(j);
        if t % thin == thin - 1 {
            out.push(st.concentration()[j]);
        }
    }
    out
}

/// `κ` with radii and `κ` alternating, `d = 1` and `Σ = 2.5`, against the
/// grid posterior of the projected normal likelihood.
pub fn kappa_univariate_pvalue() -> f64 {
    let data = univariate_data(0.0, 1.0, 20, 2);
    let sigma2 = 2.5;
    let mut st = ChainState::new(&data, ModelKind::Tpn, PriorSpec::default_for(1), config(2), 0).unwrap();
    st.set_mu(&[0.0]).unwrap();
    st.set_sigma(dmatrix![sigma2]).unwrap();
    let ks = kappa_chain(&mut st, 0, 5_000, 20);
    let thetas = data.observed_column(0);
    let prior = Normal::new(0.0, 1e5f64.sqrt()).unwrap();
    let grid = GridCdf::from_log(0.0, 12.0, 12_000, |k| {
        prior.ln_pdf(k) + thetas.iter().map(|&t| pn_pdf(t, 0.0, k, sigma2).ln()).sum::<f64>()
    });
    ks_pvalue(&ks, |x| grid.cdf(x))
}

/// `κ₁` at `d = 2` with a fixed non-unit covariance, against the grid
/// posterior built from the bivariate density.
pub fn kappa_bivariate_pvalue() -> f64 {
    let p = tpn_params(&[0.0, 0.0], &[1.0, 0.7], &[0.5]);
    let a = tpn_sample(&p, 15, &mut ChaCha20Rng::seed_from_u64(3)).unwrap().angles;
    let data = Dataset::from_rows(&rows(&a)).unwrap();
    let sigma = dmatrix![2.0, 0.6; 0.6, 0.5];
    let kappa2 = 0.4;
    let mut st = ChainState::new(&data, ModelKind::Tpn, PriorSpec::default_for(2), config(3), 0).unwrap();
    st.set_mu(&[0.0, 0.0]).unwrap();
    st.set_sigma(sigma.clone()).unwrap();
    st.set_concentration(&[1.0, kappa2]).unwrap();
    let ks = kappa_chain(&mut st, 0, 5_000, 20);

    let cov = CovarianceMatrix::new(sigma).unwrap();
    let mut r = ChaCha20Rng::seed_from_u64(0);
    let grid = GridCdf::from_log(1e-6, 6.0, 1_500, |k| {
        let (corr, kid) = remap_identifiability(&cov, &[k, kappa2]).unwrap();
        let q = TpnParams::new(AngleVector::new([0.0, 0.0]).unwrap(), kid, corr).unwrap();
        (0..data.n())
            .map(|i| tpn_logpdf(&[a[(i, 0)], a[(i, 1)]], &q, 1, &mut r).unwrap())
            .sum::<f64>()
    });
    ks_pvalue(&ks, |x| grid.cdf(x))
}

/// `μ` with radii and `μ` alternating, against the grid posterior.
pub fn mu_pvalue() -> f64 {
    let data = univariate_data(0.5, 1.2, 25, 4);
    let mut st = ChainState::new(&data, ModelKind::Tpn, PriorSpec::default_for(1), config(4), 0).unwrap();
    st.set_concentration(&[1.2]).unwrap();
    let mut ms = Vec::new();
    for t in 0..100_000 {
        st.update_radii();
        st.update_mu_at(0);
        if t % 20 == 19 {
            ms.push(st.mu()[0]);
        }
    }
    let thetas = data.observed_column(0);
    let grid = GridCdf::from_log(-PI, PI, 8_000, |m| {
        thetas.iter().map(|&t| pn_pdf(t, m, 1.2, 1.0).ln()).sum()
    });
    ks_pvalue(&ms, |x| grid.cdf(x))
}

/// `λ` of a one-dimensional CTPN, whose likelihood is the wrapped Cauchy
/// product, against the grid posterior under the uniform prior.
pub fn lambda_pvalue(lambda: f64, n: usize, seed: u64) -> f64 {
    let mut r = ChaCha20Rng::seed_from_u64(seed);
    let p = CtpnParams::wrapped_cauchy(
        AngleVector::new([0.0]).unwrap(),
        &[lambda],
        CorrelationMatrix::identity(1),
    )
    .unwrap();
    let a = ctpn_sample(&p, n, &mut r).unwrap();
    let data = Dataset::from_rows(&rows(&a)).unwrap();
    let mut st = ChainState::new(&data, ModelKind::Ctpn, PriorSpec::default_for(1), config(seed), 0).unwrap();
    st.set_mu(&[0.0]).unwrap();
    let mut ls = Vec::new();
    for t in 0..100_000 {
        st.update_radii();
        st.update_lambda_at(0);
        if t % 20 == 19 {
            ls.push(st.concentration()[0]);
        }
    }
    let thetas = data.observed_column(0);
    let grid = GridCdf::from_log(0.0, 1.0 - 1e-9, 20_000, |l| {
        thetas.iter().map(|&t| wc_pdf(t, l).ln()).sum()
    });
    ks_pvalue(&ls, |x| grid.cdf(x))
}

pub fn has_psd_abs(m: &DMatrix<f64>) -> bool {
    m.abs().cholesky().is_some() && m.clone().cholesky().is_some()
}

fn remapped_correlations(m: &DMatrix<f64>) -> Vec<f64> {
    let s: Vec<f64> = (0..3).map(|j| m[(j, j)].sqrt()).collect();
    vec![
        m[(0, 1)] / (s[0] * s[1]),
        m[(0, 2)] / (s[0] * s[2]),
        m[(1, 2)] / (s[1] * s[2]),
    ]
}

/// Remapped `Σ` updates without data at `d = 3` against inverse Wishart
/// draws rejected outside the truncated support.
pub fn sigma_prior_pvalue() -> f64 {
    let d = 3;
    let data = Dataset::empty(d).unwrap();
    let mut st = ChainState::new(&data, ModelKind::Tpn, PriorSpec::default_for(d), config(8), 0).unwrap();
    let mut chain = Vec::new();
    for t in 0..5_000 * 20 {
        st.update_sigma().unwrap();
        if t % 20 == 19 {
            chain.push(remapped_correlations(st.sigma()));
        }
    }
    let mut r = ChaCha20Rng::seed_from_u64(9);
    let scale = CovarianceMatrix::identity(d);
    let mut exact = Vec::new();
    while exact.len() < 5_000 {
        let m = iw_sample((d + 2) as f64, &scale, &mut r).unwrap().into_matrix();
        if has_psd_abs(&m) {
            exact.push(remapped_correlations(&m));
        }
    }
    energy_test(&chain, &exact, 200, 10)
}
