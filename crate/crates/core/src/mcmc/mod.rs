//! Posterior sampling for TPN and CTPN models.
//!
//! The sampler works on the unidentified parameterisation: `Σ` is a full
//! covariance matrix with a truncated Inverse Wishart prior and, for the
//! TPN, `κ` lives on the matching scale. Every retained state is mapped to
//! the identified parameterisation (correlation matrix, rescaled `κ`)
//! before it is emitted.
//!
//! One sweep updates, in order: every latent radius (slice sampler), every
//! missing cell (exact Gibbs draw), each `μ_j` (random-walk MH), each `κ_j`
//! (conjugate truncated normal) or `λ_j` (reflected random-walk MH), and
//! finally `Σ` (Inverse Wishart independence-style MH).

mod state;

use std::thread;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use state::{AcceptanceRates, ChainState, Checkpoint};

use crate::dataset::Dataset;
use crate::diagnostics::PosteriorDraws;
use crate::error::{Error, Result};
use crate::gaussian::{CorrelationMatrix, CovarianceMatrix};
use crate::model::ModelKind;
use crate::wishart::TiwPrior;

/// Upper end of the `λ` proposal domain; reflection keeps draws below it.
pub const LAMBDA_MAX: f64 = 1.0 - 1e-9;
/// Target acceptance rate for the scalar random-walk blocks.
pub const TARGET_SCALAR_ACCEPT: f64 = 0.44;
/// Target acceptance rate for the `Σ` block.
pub const TARGET_SIGMA_ACCEPT: f64 = 0.25;
/// Burn-in sweeps between two adaptation steps.
pub const ADAPT_BATCH: usize = 50;

/// Prior hyperparameters. `μ` is circular uniform and `λ` uniform on
/// `[0, 1)`; neither has free hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec {
    /// Mean `m` of the (pre-truncation) normal prior on each `κ_j`.
    pub kappa_mean: f64,
    /// Variance `v` of that prior.
    pub kappa_var: f64,
    pub tiw: TiwPrior,
}

impl PriorSpec {
    pub fn new(kappa_mean: f64, kappa_var: f64, tiw: TiwPrior) -> Result<Self> {
        if !(kappa_var > 0.0 && kappa_var.is_finite()) || !kappa_mean.is_finite() {
            return Err(Error::domain(format!(
                "kappa prior needs finite mean and positive variance, got ({kappa_mean}, {kappa_var})"
            )));
        }
        Ok(PriorSpec {
            kappa_mean,
            kappa_var,
            tiw,
        })
    }

    /// `κ_j ~ N(0, 10⁵)` truncated to `(0, ∞)`, `Σ ~ TIW(d + 2, I)`.
    pub fn default_for(d: usize) -> Self {
        PriorSpec {
            kappa_mean: 0.0,
            kappa_var: 1e5,
            tiw: TiwPrior::new(d as f64 + 2.0, CovarianceMatrix::identity(d)).expect("d + 2 > d + 1"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McmcConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// Degrees of freedom of the `Σ` proposal; `None` means `d + 22`.
    pub sigma_proposal_df: Option<f64>,
    /// Half-width of the uniform random walk on each `μ_j`, in radians.
    pub mu_step: f64,
    /// Half-width of the reflected random walk on each `λ_j`.
    pub lambda_step: f64,
    pub seed: u64,
    /// Tune step sizes during burn-in.
    pub adapt: bool,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            iterations: 30_000,
            burn_in: 10_000,
            thin: 10,
            sigma_proposal_df: None,
            mu_step: 0.3,
            lambda_step: 0.1,
            seed: 0,
            adapt: true,
        }
    }
}

impl McmcConfig {
    pub fn proposal_df(&self, d: usize) -> f64 {
        self.sigma_proposal_df.unwrap_or(d as f64 + 22.0)
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if self.thin == 0 {
            return Err(Error::config("thin", "must be at least 1"));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::config(
                "burn_in",
                format!("{} must be smaller than iterations ({})", self.burn_in, self.iterations),
            ));
        }
        if !(self.proposal_df(d) > d as f64 + 1.0) {
            return Err(Error::config(
                "sigma_proposal_df",
                format!("must exceed d + 1 = {}", d + 1),
            ));
        }
        if !(self.mu_step > 0.0 && self.mu_step.is_finite()) {
            return Err(Error::config("mu_step", "must be positive"));
        }
        if !(self.lambda_step > 0.0 && self.lambda_step.is_finite()) {
            return Err(Error::config("lambda_step", "must be positive"));
        }
        Ok(())
    }

    /// Number of draws retained by a full run.
    pub fn retained(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }

    /// Whether sweep `t` (0-based) is retained.
    pub fn keeps(&self, t: usize) -> bool {
        t >= self.burn_in && (t - self.burn_in + 1).is_multiple_of(self.thin)
    }
}

/// One new `r` from the slice sampler for a density proportional to
/// `r · exp(−½ A (r − B/A)²)` on `r > 0`.
///
/// `ln_beta1` is the log of the vertical slice level and `beta2 ∈ [0, 1]`
/// selects the point inside the slice, uniformly in `r²`.
pub fn slice_radius(a: f64, b: f64, ln_beta1: f64, beta2: f64) -> f64 {
    debug_assert!(a > 0.0, "slice precision must be positive");
    let centre = b / a;
    let half = (-2.0 * ln_beta1 / a).max(0.0).sqrt();
    let lo = centre + (-centre).max(-half);
    let hi = centre + half;
    ((hi * hi - lo * lo) * beta2 + lo * lo).sqrt().max(f64::MIN_POSITIVE)
}

/// Maps an unidentified `(Σ, κ)` to the identified `(correlation, κ / s)`,
/// with `s_j = √Σ_jj`.
pub fn remap_identifiability(sigma: &CovarianceMatrix, kappa: &[f64]) -> Result<(CorrelationMatrix, Vec<f64>)> {
    let m = sigma.matrix();
    let d = m.nrows();
    crate::error::check_dim(d, kappa.len())?;
    let s = DVector::from_fn(d, |j, _| m[(j, j)].sqrt());
    let mut c = DMatrix::from_fn(d, d, |j, k| m[(j, k)] / (s[j] * s[k]));
    c.fill_diagonal(1.0);
    let corr = CorrelationMatrix::new(c)?;
    Ok((corr, kappa.iter().zip(s.iter()).map(|(k, s)| k / s).collect()))
}

/// Mean and variance of the normal full conditional of one `κ_j`, before
/// truncation to `(0, ∞)`.
///
/// `lam_jj` is the diagonal entry of `|Σ|⁻¹` and `adjusted_sum` is
/// `Σ_i [x_c,ij + Σ_{k≠j} Λ_jk (x_c,ik − κ_k) / Λ_jj]`.
pub fn kappa_posterior(lam_jj: f64, n: usize, adjusted_sum: f64, prior_mean: f64, prior_var: f64) -> (f64, f64) {
    let var = 1.0 / (1.0 / prior_var + n as f64 * lam_jj);
    (var * (lam_jj * adjusted_sum + prior_mean / prior_var), var)
}

/// A retained state on the identified scale.
#[derive(Debug, Clone, PartialEq)]
pub struct RetainedDraw {
    /// Number of completed sweeps.
    pub iteration: u64,
    pub mu: Vec<f64>,
    pub concentration: Vec<f64>,
    pub sigma_upper: Vec<f64>,
    pub imputed: Vec<f64>,
}

impl PosteriorDraws {
    pub fn push(&mut self, draw: RetainedDraw) {
        self.iterations.push(draw.iteration);
        self.mu.push(draw.mu);
        self.concentration.push(draw.concentration);
        self.sigma.push(draw.sigma_upper);
        self.imputed.push(draw.imputed);
    }
}

#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub draws: PosteriorDraws,
    pub acceptance: AcceptanceRates,
}

/// Runs one chain from its initial state.
pub fn run_chain(data: &Dataset, kind: ModelKind, priors: &PriorSpec, config: &McmcConfig) -> Result<ChainOutput> {
    let state = ChainState::new(data, kind, priors.clone(), config.clone(), 0)?;
    run_from(state, &mut |_, _| Ok(()))
}

/// Continues `state` until `config.iterations`, handing every retained draw
/// and the state that produced it to `sink`.
pub fn run_from(
    mut state: ChainState,
    sink: &mut dyn FnMut(&RetainedDraw, &ChainState) -> Result<()>,
) -> Result<ChainOutput> {
    let mut draws = PosteriorDraws::new(state.kind(), state.dim(), state.missing_cells().to_vec());
    while state.iteration() < state.config().iterations {
        let t = state.iteration();
        state.sweep()?;
        if state.config().keeps(t) {
            let draw = state.retained_draw()?;
            sink(&draw, &state)?;
            draws.push(draw);
        }
    }
    Ok(ChainOutput {
        draws,
        acceptance: state.acceptance_rates(),
    })
}

/// Runs `chains` independent chains in parallel. Chain `k` uses stream `k`
/// of the configured seed, so results do not depend on scheduling.
pub fn run_chains(
    data: &Dataset,
    kind: ModelKind,
    priors: &PriorSpec,
    config: &McmcConfig,
    chains: usize,
) -> Result<Vec<ChainOutput>> {
    if chains == 0 {
        return Err(Error::config("chains", "must be at least 1"));
    }
    let states = (0..chains)
        .map(|k| ChainState::new(data, kind, priors.clone(), config.clone(), k as u64))
        .collect::<Result<Vec<_>>>()?;
    thread::scope(|scope| {
        let handles: Vec<_> = states
            .into_iter()
            .map(|s| scope.spawn(move || run_from(s, &mut |_, _| Ok(()))))
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(Error::numerical("chain thread panicked")))
            })
            .collect()
    })
}
