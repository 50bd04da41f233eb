use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Open01, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{
    remap_identifiability, slice_radius, McmcConfig, PriorSpec, RetainedDraw, ADAPT_BATCH, LAMBDA_MAX,
    TARGET_SCALAR_ACCEPT, TARGET_SIGMA_ACCEPT,
};
use crate::circular::{circ_mean_and_mrl, mod_atan, to_unit_interval_turn, wrap_unchecked};
use crate::copula::{wc_cdf, wc_ln_pdf, wc_quantile, WrappedCauchyParams, BELOW_ONE};
use crate::dataset::Dataset;
use crate::error::{check_dim, Error, Result};
use crate::gaussian::{abs_transform, CovarianceMatrix};
use crate::model::ModelKind;
use crate::normal::sample_truncated_below;
use crate::wishart::{iw_logpdf, iw_sample, tiw_unnorm_logpdf};

const MIN_MU_STEP: f64 = 1e-4;
const MAX_LAMBDA_STEP: f64 = 0.5;
const MIN_SIGMA_EXCESS: f64 = 1.0;
const MAX_SIGMA_EXCESS: f64 = 1e6;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
struct Tally {
    accepted: u64,
    proposed: u64,
}

impl Tally {
    fn record(&mut self, accepted: bool) {
        self.proposed += 1;
        self.accepted += accepted as u64;
    }

    fn rate(self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct Tallies {
    mu: Vec<Tally>,
    lambda: Vec<Tally>,
    sigma: Tally,
}

impl Tallies {
    fn new(d: usize) -> Self {
        Tallies {
            mu: vec![Tally::default(); d],
            lambda: vec![Tally::default(); d],
            sigma: Tally::default(),
        }
    }
}

/// Post burn-in Metropolis–Hastings acceptance rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceRates {
    pub mu: Vec<f64>,
    /// Empty for the TPN, whose `κ` is drawn exactly.
    pub lambda: Vec<f64>,
    pub sigma: f64,
}

/// Everything needed to resume a chain bit-for-bit, given the same data,
/// priors and configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub kind: ModelKind,
    pub dim: usize,
    pub n: usize,
    pub iteration: usize,
    pub mu: Vec<f64>,
    pub concentration: Vec<f64>,
    /// Unidentified `Σ`, row-major.
    pub sigma: Vec<f64>,
    pub r: Vec<f64>,
    pub psi: Vec<f64>,
    pub theta: Vec<f64>,
    pub mu_step: Vec<f64>,
    pub lambda_step: Vec<f64>,
    pub sigma_df: f64,
    batch: Tallies,
    total: Tallies,
    rng: ChaCha20Rng,
}

/// The full state of one chain, including latent radii and imputed cells.
///
/// Matrices over observations are stored row-major as `n × d` vectors.
/// `psi` is the angle on the latent scale: `θ − μ` for the TPN and
/// `2π F_λ(θ − μ)` for the CTPN.
#[derive(Debug, Clone)]
pub struct ChainState {
    kind: ModelKind,
    priors: PriorSpec,
    config: McmcConfig,
    n: usize,
    d: usize,
    missing: Vec<(usize, usize)>,
    theta: Vec<f64>,
    r: Vec<f64>,
    psi: Vec<f64>,
    x_c: Vec<f64>,
    x_s: Vec<f64>,
    mu: Vec<f64>,
    /// `κ` on the unidentified scale, or `λ`.
    conc: Vec<f64>,
    sigma: DMatrix<f64>,
    lam_c: DMatrix<f64>,
    lam_s: DMatrix<f64>,
    mu_step: Vec<f64>,
    lambda_step: Vec<f64>,
    sigma_df: f64,
    batch: Tallies,
    total: Tallies,
    iteration: usize,
    rng: ChaCha20Rng,
}

impl ChainState {
    /// Initial state of chain number `chain`, which draws from stream
    /// `chain` of the configured seed.
    pub fn new(data: &Dataset, kind: ModelKind, priors: PriorSpec, config: McmcConfig, chain: u64) -> Result<Self> {
        let d = data.dim();
        let n = data.n();
        config.validate(d)?;
        check_dim(d, priors.tiw.dim())?;
        let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
        rng.set_stream(chain);
        let mu = (0..d)
            .map(|j| {
                let col = data.observed_column(j);
                if col.is_empty() {
                    Ok(0.0)
                } else {
                    Ok(circ_mean_and_mrl(&col)?.mean.map_or(0.0, |a| a.radians()))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let conc = match kind {
            ModelKind::Tpn => vec![1.0; d],
            ModelKind::Ctpn => vec![0.5; d],
        };
        let mut theta = vec![0.0; n * d];
        for i in 0..n {
            for j in 0..d {
                theta[i * d + j] = data.get(i, j).unwrap_or(mu[j]);
            }
        }
        let mut state = ChainState {
            kind,
            sigma_df: config.proposal_df(d),
            mu_step: vec![config.mu_step.min(PI); d],
            lambda_step: vec![config.lambda_step.min(MAX_LAMBDA_STEP); d],
            priors,
            config,
            n,
            d,
            missing: data.missing_cells(),
            theta,
            r: vec![1.0; n * d],
            psi: vec![0.0; n * d],
            x_c: vec![0.0; n * d],
            x_s: vec![0.0; n * d],
            mu,
            conc,
            sigma: DMatrix::identity(d, d),
            lam_c: DMatrix::identity(d, d),
            lam_s: DMatrix::identity(d, d),
            batch: Tallies::new(d),
            total: Tallies::new(d),
            iteration: 0,
            rng,
        };
        for i in 0..n {
            for j in 0..d {
                let idx = i * d + j;
                state.set_psi(idx, state.working_angle(state.theta[idx], state.mu[j], state.conc[j]));
            }
        }
        state.refresh_precisions()?;
        Ok(state)
    }

    /// Rebuilds a chain from a checkpoint taken on the same data.
    pub fn restore(data: &Dataset, priors: PriorSpec, config: McmcConfig, cp: Checkpoint) -> Result<Self> {
        let d = data.dim();
        let n = data.n();
        check_dim(d, cp.dim)?;
        check_dim(n, cp.n)?;
        config.validate(d)?;
        check_dim(d, priors.tiw.dim())?;
        for v in [&cp.r, &cp.psi, &cp.theta] {
            check_dim(n * d, v.len())?;
        }
        for v in [&cp.mu, &cp.concentration, &cp.mu_step, &cp.lambda_step] {
            check_dim(d, v.len())?;
        }
        check_dim(d * d, cp.sigma.len())?;
        for i in 0..n {
            for j in 0..d {
                if let Some(x) = data.get(i, j) {
                    if x != cp.theta[i * d + j] {
                        return Err(Error::domain(format!(
                            "checkpoint does not match the data at row {i}, column {j}"
                        )));
                    }
                }
            }
        }
        let mut state = ChainState {
            kind: cp.kind,
            priors,
            config,
            n,
            d,
            missing: data.missing_cells(),
            theta: cp.theta,
            r: cp.r,
            psi: vec![0.0; n * d],
            x_c: vec![0.0; n * d],
            x_s: vec![0.0; n * d],
            mu: cp.mu,
            conc: cp.concentration,
            sigma: DMatrix::from_row_slice(d, d, &cp.sigma),
            lam_c: DMatrix::identity(d, d),
            lam_s: DMatrix::identity(d, d),
            mu_step: cp.mu_step,
            lambda_step: cp.lambda_step,
            sigma_df: cp.sigma_df,
            batch: cp.batch,
            total: cp.total,
            iteration: cp.iteration,
            rng: cp.rng,
        };
        for (idx, &p) in cp.psi.iter().enumerate() {
            state.set_psi(idx, p);
        }
        state.refresh_precisions()?;
        Ok(state)
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            kind: self.kind,
            dim: self.d,
            n: self.n,
            iteration: self.iteration,
            mu: self.mu.clone(),
            concentration: self.conc.clone(),
            sigma: self.sigma.transpose().as_slice().to_vec(),
            r: self.r.clone(),
            psi: self.psi.clone(),
            theta: self.theta.clone(),
            mu_step: self.mu_step.clone(),
            lambda_step: self.lambda_step.clone(),
            sigma_df: self.sigma_df,
            batch: self.batch.clone(),
            total: self.total.clone(),
            rng: self.rng.clone(),
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of completed sweeps.
    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn config(&self) -> &McmcConfig {
        &self.config
    }

    pub fn missing_cells(&self) -> &[(usize, usize)] {
        &self.missing
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    /// `κ` on the unidentified scale (TPN) or `λ` (CTPN).
    pub fn concentration(&self) -> &[f64] {
        &self.conc
    }

    /// Unidentified `Σ`.
    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn radii(&self) -> &[f64] {
        &self.r
    }

    /// Current angles, observed and imputed, row-major.
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn mu_steps(&self) -> &[f64] {
        &self.mu_step
    }

    pub fn sigma_proposal_df(&self) -> f64 {
        self.sigma_df
    }

    /// Overwrites `Σ`; the matrix must lie in the TIW support.
    pub fn set_sigma(&mut self, sigma: DMatrix<f64>) -> Result<()> {
        if tiw_unnorm_logpdf(&sigma, &self.priors.tiw).is_none() {
            return Err(Error::NotPositiveDefinite("Σ or |Σ| is not positive definite".into()));
        }
        self.sigma = sigma;
        self.refresh_precisions()
    }

    /// Overwrites the concentrations and moves the latent points to match.
    pub fn set_concentration(&mut self, conc: &[f64]) -> Result<()> {
        check_dim(self.d, conc.len())?;
        for &c in conc {
            let ok = match self.kind {
                ModelKind::Tpn => c > 0.0 && c.is_finite(),
                ModelKind::Ctpn => (0.0..=LAMBDA_MAX).contains(&c),
            };
            if !ok {
                return Err(Error::domain(format!("concentration {c} out of range")));
            }
        }
        self.conc = conc.to_vec();
        self.recompute_psi();
        Ok(())
    }

    /// Overwrites the locations and moves the latent points to match.
    pub fn set_mu(&mut self, mu: &[f64]) -> Result<()> {
        check_dim(self.d, mu.len())?;
        self.mu = mu.iter().map(|&m| crate::circular::wrap(m)).collect::<Result<_>>()?;
        self.recompute_psi();
        Ok(())
    }

    /// One full sweep: radii, missing cells, `μ`, `κ` or `λ`, then `Σ`.
    pub fn sweep(&mut self) -> Result<()> {
        self.update_radii();
        self.impute_missing()?;
        self.update_mu();
        match self.kind {
            ModelKind::Tpn => self.update_kappa(),
            ModelKind::Ctpn => self.update_lambda(),
        }
        self.update_sigma()?;
        self.iteration += 1;
        if self.config.adapt && self.iteration <= self.config.burn_in && self.iteration.is_multiple_of(ADAPT_BATCH) {
            self.adapt();
        }
        Ok(())
    }

    /// The current state on the identified scale.
    pub fn retained_draw(&self) -> Result<RetainedDraw> {
        let cov = CovarianceMatrix::new(self.sigma.clone())?;
        let (corr, kappa) = remap_identifiability(&cov, &self.conc)?;
        let concentration = match self.kind {
            ModelKind::Tpn => kappa,
            ModelKind::Ctpn => self.conc.clone(),
        };
        Ok(RetainedDraw {
            iteration: self.iteration as u64,
            mu: self.mu.clone(),
            concentration,
            sigma_upper: corr.upper(),
            imputed: self.missing.iter().map(|&(i, j)| self.theta[i * self.d + j]).collect(),
        })
    }

    pub fn acceptance_rates(&self) -> AcceptanceRates {
        AcceptanceRates {
            mu: self.total.mu.iter().map(|t| t.rate()).collect(),
            lambda: match self.kind {
                ModelKind::Tpn => Vec::new(),
                ModelKind::Ctpn => self.total.lambda.iter().map(|t| t.rate()).collect(),
            },
            sigma: self.total.sigma.rate(),
        }
    }

    /// Slice update of every latent radius.
    pub fn update_radii(&mut self) {
        for i in 0..self.n {
            for j in 0..self.d {
                let idx = i * self.d + j;
                let (c, s) = (self.psi[idx].cos(), self.psi[idx].sin());
                let (eta_c, eta_s) = self.conditional_means(i, j);
                let lc = self.lam_c[(j, j)];
                let ls = self.lam_s[(j, j)];
                let a = lc * c * c + ls * s * s;
                let b = lc * c * eta_c + ls * s * eta_s;
                let dev = self.r[idx] - b / a;
                let u: f64 = self.rng.sample(Open01);
                let ln_beta1 = -0.5 * a * dev * dev + u.ln();
                let beta2: f64 = self.rng.random();
                self.r[idx] = slice_radius(a, b, ln_beta1, beta2);
                self.x_c[idx] = self.r[idx] * c;
                self.x_s[idx] = self.r[idx] * s;
            }
        }
    }

    /// Exact draw of every missing cell given everything else.
    pub fn impute_missing(&mut self) -> Result<()> {
        for m in 0..self.missing.len() {
            let (i, j) = self.missing[m];
            let idx = i * self.d + j;
            let (eta_c, eta_s) = self.conditional_means(i, j);
            let sd_c = self.lam_c[(j, j)].sqrt().recip();
            let sd_s = self.lam_s[(j, j)].sqrt().recip();
            let (xc, xs) = loop {
                let zc: f64 = self.rng.sample(StandardNormal);
                let zs: f64 = self.rng.sample(StandardNormal);
                let xc = eta_c + sd_c * zc;
                let xs = eta_s + sd_s * zs;
                if xc != 0.0 || xs != 0.0 {
                    break (xc, xs);
                }
            };
            let psi = mod_atan(xs, xc)?.radians();
            self.r[idx] = xc.hypot(xs);
            self.set_psi(idx, psi);
            self.theta[idx] = match self.kind {
                ModelKind::Tpn => wrap_unchecked(self.mu[j] + psi),
                ModelKind::Ctpn => {
                    let u = (to_unit_interval_turn(psi) / TAU).min(BELOW_ONE);
                    let x = wc_quantile(u, &WrappedCauchyParams::centered(self.conc[j])?)?;
                    wrap_unchecked(self.mu[j] + x.radians())
                }
            };
        }
        Ok(())
    }

    /// Random-walk Metropolis update of each `μ_j`.
    pub fn update_mu(&mut self) {
        for j in 0..self.d {
            self.update_mu_at(j);
        }
    }

    pub fn update_mu_at(&mut self, j: usize) {
        let step = self.mu_step[j];
        let shift: f64 = self.rng.random_range(-step..step);
        let proposal = wrap_unchecked(self.mu[j] + shift);
        let (new_psi, log_ratio) = self.mu_move(j, proposal);
        let accepted = self.accept(log_ratio);
        if accepted {
            self.mu[j] = proposal;
            self.set_column(j, &new_psi);
        }
        self.record(|t| &mut t.mu[j], accepted);
    }

    /// Log acceptance ratio of moving `μ_j` to `proposal`.
    pub fn mu_log_ratio(&self, j: usize, proposal: f64) -> f64 {
        self.mu_move(j, proposal).1
    }

    fn mu_move(&self, j: usize, proposal: f64) -> (Vec<f64>, f64) {
        let (new_psi, mut log_ratio) = self.column_move(j, proposal, self.conc[j]);
        if self.kind == ModelKind::Ctpn {
            let f = centered(self.conc[j]);
            for i in 0..self.n {
                let t = self.theta[i * self.d + j];
                log_ratio += wc_ln_pdf(t - proposal, &f) - wc_ln_pdf(t - self.mu[j], &f);
            }
        }
        (new_psi, log_ratio)
    }

    /// Reflected random-walk Metropolis update of each `λ_j`.
    pub fn update_lambda(&mut self) {
        for j in 0..self.d {
            self.update_lambda_at(j);
        }
    }

    pub fn update_lambda_at(&mut self, j: usize) {
        let step = self.lambda_step[j];
        let shift: f64 = self.rng.random_range(-step..step);
        let proposal = reflect(self.conc[j] + shift, LAMBDA_MAX);
        let (new_psi, log_ratio) = self.lambda_move(j, proposal);
        let accepted = self.accept(log_ratio);
        if accepted {
            self.conc[j] = proposal;
            self.set_column(j, &new_psi);
        }
        self.record(|t| &mut t.lambda[j], accepted);
    }

    /// Log acceptance ratio of moving `λ_j` to `proposal`.
    pub fn lambda_log_ratio(&self, j: usize, proposal: f64) -> f64 {
        self.lambda_move(j, proposal).1
    }

    fn lambda_move(&self, j: usize, proposal: f64) -> (Vec<f64>, f64) {
        let (new_psi, mut log_ratio) = self.column_move(j, self.mu[j], proposal);
        let (f_old, f_new) = (centered(self.conc[j]), centered(proposal));
        for i in 0..self.n {
            let x = self.theta[i * self.d + j] - self.mu[j];
            log_ratio += wc_ln_pdf(x, &f_new) - wc_ln_pdf(x, &f_old);
        }
        (new_psi, log_ratio)
    }

    /// Conjugate truncated-normal draw of each `κ_j`.
    pub fn update_kappa(&mut self) {
        for j in 0..self.d {
            self.update_kappa_at(j);
        }
    }

    pub fn update_kappa_at(&mut self, j: usize) {
        let (mean, var) = self.kappa_conditional(j);
        self.conc[j] = sample_truncated_below(mean, var.sqrt(), 0.0, &mut self.rng).max(f64::MIN_POSITIVE);
    }

    /// Mean and variance of the full conditional of `κ_j` before truncation.
    pub fn kappa_conditional(&self, j: usize) -> (f64, f64) {
        let lam = self.lam_c[(j, j)];
        let adjusted: f64 = (0..self.n)
            .map(|i| self.x_c[i * self.d + j] + self.other_c(i, j) / lam)
            .sum();
        super::kappa_posterior(lam, self.n, adjusted, self.priors.kappa_mean, self.priors.kappa_var)
    }

    /// Metropolis–Hastings update of `Σ` with an Inverse Wishart proposal
    /// centred on the current value.
    pub fn update_sigma(&mut self) -> Result<()> {
        let d = self.d as f64;
        let scale = CovarianceMatrix::new(&self.sigma * (self.sigma_df - d - 1.0))?;
        let proposal = iw_sample(self.sigma_df, &scale, &mut self.rng)?.into_matrix();
        let accepted = match self.sigma_log_ratio(&proposal) {
            Some(lr) => self.accept(lr),
            None => false,
        };
        if accepted {
            self.sigma = proposal;
            self.refresh_precisions()?;
        }
        self.record(|t| &mut t.sigma, accepted);
        Ok(())
    }

    /// Log acceptance ratio of moving `Σ` to `proposal`, or `None` when the
    /// proposal lies outside the prior support.
    pub fn sigma_log_ratio(&self, proposal: &DMatrix<f64>) -> Option<f64> {
        let prior_new = tiw_unnorm_logpdf(proposal, &self.priors.tiw)?;
        let prior_old = tiw_unnorm_logpdf(&self.sigma, &self.priors.tiw)?;
        let (s_c, s_s) = self.scatter();
        let lik_new = gaussian_pair_loglik(proposal, self.n, &s_c, &s_s)?;
        let lik_old = gaussian_pair_loglik(&self.sigma, self.n, &s_c, &s_s)?;
        let d = self.d as f64;
        let excess = self.sigma_df - d - 1.0;
        let cur = CovarianceMatrix::new(self.sigma.clone()).ok()?;
        let new = CovarianceMatrix::new(proposal.clone()).ok()?;
        let q_forward = iw_logpdf(&new, self.sigma_df, &CovarianceMatrix::new(cur.matrix() * excess).ok()?).ok()?;
        let q_back = iw_logpdf(&cur, self.sigma_df, &CovarianceMatrix::new(new.matrix() * excess).ok()?).ok()?;
        Some(lik_new - lik_old + prior_new - prior_old + q_back - q_forward)
    }

    fn accept(&mut self, log_ratio: f64) -> bool {
        if log_ratio >= 0.0 {
            return true;
        }
        let u: f64 = self.rng.sample(Open01);
        u.ln() < log_ratio
    }

    fn record(&mut self, slot: impl Fn(&mut Tallies) -> &mut Tally, accepted: bool) {
        slot(&mut self.batch).record(accepted);
        if self.iteration >= self.config.burn_in {
            slot(&mut self.total).record(accepted);
        }
    }

    fn adapt(&mut self) {
        let k = (self.iteration / ADAPT_BATCH) as f64;
        let delta = (1.0 / k.sqrt()).min(0.25);
        for j in 0..self.d {
            let g = if self.batch.mu[j].rate() > TARGET_SCALAR_ACCEPT {
                delta
            } else {
                -delta
            };
            self.mu_step[j] = (self.mu_step[j] * g.exp()).clamp(MIN_MU_STEP, PI);
            if self.kind == ModelKind::Ctpn {
                let g = if self.batch.lambda[j].rate() > TARGET_SCALAR_ACCEPT {
                    delta
                } else {
                    -delta
                };
                self.lambda_step[j] = (self.lambda_step[j] * g.exp()).clamp(MIN_MU_STEP, MAX_LAMBDA_STEP);
            }
        }
        // A larger df concentrates the proposal around the current Σ.
        let d = self.d as f64;
        let g = if self.batch.sigma.rate() < TARGET_SIGMA_ACCEPT {
            delta
        } else {
            -delta
        };
        let excess = ((self.sigma_df - d - 1.0) * g.exp()).clamp(MIN_SIGMA_EXCESS, MAX_SIGMA_EXCESS);
        self.sigma_df = d + 1.0 + excess;
        self.batch = Tallies::new(self.d);
    }

    fn refresh_precisions(&mut self) -> Result<()> {
        let s = CovarianceMatrix::new(self.sigma.clone())?;
        let c = CovarianceMatrix::new(abs_transform(&self.sigma))?;
        self.lam_s = s.inverse();
        self.lam_c = c.inverse();
        Ok(())
    }

    fn kappa_at(&self, j: usize) -> f64 {
        match self.kind {
            ModelKind::Tpn => self.conc[j],
            ModelKind::Ctpn => 0.0,
        }
    }

    fn working_angle(&self, theta: f64, mu: f64, conc: f64) -> f64 {
        match self.kind {
            ModelKind::Tpn => theta - mu,
            ModelKind::Ctpn => TAU * wc_cdf(theta - mu, &centered(conc)),
        }
    }

    fn set_psi(&mut self, idx: usize, psi: f64) {
        self.psi[idx] = psi;
        self.x_c[idx] = self.r[idx] * psi.cos();
        self.x_s[idx] = self.r[idx] * psi.sin();
    }

    fn set_column(&mut self, j: usize, psi: &[f64]) {
        for (i, &p) in psi.iter().enumerate() {
            self.set_psi(i * self.d + j, p);
        }
    }

    fn recompute_psi(&mut self) {
        for i in 0..self.n {
            for j in 0..self.d {
                let idx = i * self.d + j;
                let p = self.working_angle(self.theta[idx], self.mu[j], self.conc[j]);
                self.set_psi(idx, p);
            }
        }
    }

    /// `Σ_{k≠j} Λc_jk (x_c,ik − κ_k)`.
    fn other_c(&self, i: usize, j: usize) -> f64 {
        let row = &self.x_c[i * self.d..(i + 1) * self.d];
        (0..self.d)
            .filter(|&k| k != j)
            .map(|k| self.lam_c[(j, k)] * (row[k] - self.kappa_at(k)))
            .sum()
    }

    /// `Σ_{k≠j} Λs_jk x_s,ik`.
    fn other_s(&self, i: usize, j: usize) -> f64 {
        let row = &self.x_s[i * self.d..(i + 1) * self.d];
        (0..self.d)
            .filter(|&k| k != j)
            .map(|k| self.lam_s[(j, k)] * row[k])
            .sum()
    }

    /// Conditional means of `x_c,ij` and `x_s,ij` given the rest of row `i`.
    fn conditional_means(&self, i: usize, j: usize) -> (f64, f64) {
        (
            self.kappa_at(j) - self.other_c(i, j) / self.lam_c[(j, j)],
            -self.other_s(i, j) / self.lam_s[(j, j)],
        )
    }

    /// New latent angles of column `j` under `(μ_j, conc_j) = (mu, conc)`
    /// and the resulting change in the Gaussian log-likelihood.
    fn column_move(&self, j: usize, mu: f64, conc: f64) -> (Vec<f64>, f64) {
        let kj = self.kappa_at(j);
        let (lc, ls) = (self.lam_c[(j, j)], self.lam_s[(j, j)]);
        let mut psi = Vec::with_capacity(self.n);
        let mut dq = 0.0;
        for i in 0..self.n {
            let idx = i * self.d + j;
            let p = self.working_angle(self.theta[idx], mu, conc);
            let r = self.r[idx];
            let (ec_old, ec_new) = (self.x_c[idx] - kj, r * p.cos() - kj);
            let (es_old, es_new) = (self.x_s[idx], r * p.sin());
            dq += lc * (ec_new * ec_new - ec_old * ec_old) + 2.0 * (ec_new - ec_old) * self.other_c(i, j);
            dq += ls * (es_new * es_new - es_old * es_old) + 2.0 * (es_new - es_old) * self.other_s(i, j);
            psi.push(p);
        }
        (psi, -0.5 * dq)
    }

    /// Scatter matrices `Σ_i (x_c,i − κ)(x_c,i − κ)ᵀ` and `Σ_i x_s,i x_s,iᵀ`.
    fn scatter(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let d = self.d;
        let kappa: Vec<f64> = (0..d).map(|k| self.kappa_at(k)).collect();
        let ec = DMatrix::from_fn(self.n, d, |i, k| self.x_c[i * d + k] - kappa[k]);
        let es = DMatrix::from_row_slice(self.n, d, &self.x_s);
        (ec.transpose() * &ec, es.transpose() * &es)
    }
}

fn centered(lambda: f64) -> WrappedCauchyParams {
    WrappedCauchyParams::centered(lambda).expect("λ kept inside [0, 1)")
}

/// Reflects `x` into `[0, hi]`.
fn reflect(mut x: f64, hi: f64) -> f64 {
    loop {
        if x < 0.0 {
            x = -x;
        } else if x > hi {
            x = 2.0 * hi - x;
        } else {
            return x;
        }
    }
}

/// `ln N(x_c; κ, |Σ|) + ln N(x_s; 0, Σ)` summed over `n` rows, up to the
/// constant, from the scatter matrices.
fn gaussian_pair_loglik(sigma: &DMatrix<f64>, n: usize, s_c: &DMatrix<f64>, s_s: &DMatrix<f64>) -> Option<f64> {
    let cs = CovarianceMatrix::new(sigma.clone()).ok()?;
    let cc = CovarianceMatrix::new(abs_transform(sigma)).ok()?;
    let tr_c = cc.solve_matrix(s_c).trace();
    let tr_s = cs.solve_matrix(s_s).trace();
    Some(-0.5 * n as f64 * (cc.ln_det() + cs.ln_det()) - 0.5 * (tr_c + tr_s))
}
