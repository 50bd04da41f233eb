//! Rivest circular correlation, circular CRPS, and posterior summaries.

use std::f64::consts::{PI, TAU};

use crate::circular::{circ_distance, circ_mean_and_mrl, wrap_unchecked};
use crate::error::{check_dim, Error, Result};
use crate::model::ModelKind;

/// Resultant magnitudes below this select the degenerate `2ξ` branch.
pub const RIVEST_DEGENERATE: f64 = 1e-10;

/// Plug-in Rivest circular correlation between two angle samples.
///
/// `mu_j`, `mu_k` are the model mean directions used in the `sin²`
/// normalisers.
pub fn rivest_correlation(samples_j: &[f64], samples_k: &[f64], mu_j: f64, mu_k: f64) -> Result<f64> {
    check_dim(samples_j.len(), samples_k.len())?;
    if samples_j.is_empty() {
        return Err(Error::domain("Rivest correlation of empty samples"));
    }
    let n = samples_j.len() as f64;
    let (mut dc, mut ds, mut sc, mut ss, mut sj, mut sk) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for (&a, &b) in samples_j.iter().zip(samples_k) {
        let (s, c) = (a - b).sin_cos();
        dc += c;
        ds += s;
        let (s, c) = (a + b).sin_cos();
        sc += c;
        ss += s;
        sj += (a - mu_j).sin().powi(2);
        sk += (b - mu_k).sin().powi(2);
    }
    let diff = dc.hypot(ds) / n;
    let sum = sc.hypot(ss) / n;
    let xi = 0.5 * (diff - sum);
    let value = if diff < RIVEST_DEGENERATE || sum < RIVEST_DEGENERATE {
        2.0 * xi
    } else {
        xi / (sj / n).max(sk / n)
    };
    Ok(value.clamp(-1.0, 1.0))
}

/// Circular CRPS of a predictive sample against one observation, using
/// arc length as the distance. Runs in `O(S log S)`.
pub fn crps_circular(draws: &[f64], observed: f64) -> Result<f64> {
    if draws.len() < 2 {
        return Err(Error::domain("circular CRPS needs at least two predictive draws"));
    }
    let s = draws.len() as f64;
    let to_obs: f64 = draws.iter().map(|&x| circ_distance(x, observed)).sum::<f64>() / s;
    Ok((to_obs - pairwise_arc_sum(draws) / (s * s)).max(0.0))
}

/// `Σ_{i<j} circ_distance(x_i, x_j)` via a sorted sweep.
fn pairwise_arc_sum(xs: &[f64]) -> f64 {
    let mut a: Vec<f64> = xs.iter().map(|&x| wrap_unchecked(x)).collect();
    a.sort_by(f64::total_cmp);
    let mut prefix = Vec::with_capacity(a.len() + 1);
    prefix.push(0.0);
    for &x in &a {
        prefix.push(prefix.last().unwrap() + x);
    }
    let mut total = 0.0;
    let mut p = 0;
    for j in 0..a.len() {
        while a[j] - a[p] > PI {
            p += 1;
        }
        // i in [p, j): the short arc runs forward; i < p: it wraps around
        let near = (j - p) as f64 * a[j] - (prefix[j] - prefix[p]);
        let far = p as f64 * (TAU - a[j]) + prefix[p];
        total += near + far;
    }
    total
}

/// Retained posterior draws of one or more chains, on the identified scale.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    pub kind: ModelKind,
    pub dim: usize,
    /// Sweep index of each retained draw.
    pub iterations: Vec<u64>,
    /// `draws × d` mean directions.
    pub mu: Vec<Vec<f64>>,
    /// `draws × d` values of `κ` (TPN) or `λ` (CTPN).
    pub concentration: Vec<Vec<f64>>,
    /// `draws × d(d−1)/2` correlations, strictly-upper entries row-major.
    pub sigma: Vec<Vec<f64>>,
    /// Masked cells `(row, column)` in the order of `imputed` columns.
    pub missing_cells: Vec<(usize, usize)>,
    /// `draws × missing` imputed angles.
    pub imputed: Vec<Vec<f64>>,
}

impl PosteriorDraws {
    pub fn new(kind: ModelKind, dim: usize, missing_cells: Vec<(usize, usize)>) -> Self {
        PosteriorDraws {
            kind,
            dim,
            iterations: Vec::new(),
            mu: Vec::new(),
            concentration: Vec::new(),
            sigma: Vec::new(),
            missing_cells,
            imputed: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.iterations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterations.is_empty()
    }

    /// Checks that every block has one row per draw of the right width.
    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        let d = self.dim;
        let blocks: [(&Vec<Vec<f64>>, usize); 4] = [
            (&self.mu, d),
            (&self.concentration, d),
            (&self.sigma, d * d.saturating_sub(1) / 2),
            (&self.imputed, self.missing_cells.len()),
        ];
        for (block, width) in blocks {
            check_dim(n, block.len())?;
            for row in block {
                check_dim(width, row.len())?;
            }
        }
        Ok(())
    }

    /// Concatenates the draws of several chains of the same model.
    pub fn merge(chains: &[PosteriorDraws]) -> Result<PosteriorDraws> {
        let first = chains.first().ok_or_else(|| Error::domain("no chains to merge"))?;
        let mut out = PosteriorDraws::new(first.kind, first.dim, first.missing_cells.clone());
        for c in chains {
            if c.kind != first.kind || c.missing_cells != first.missing_cells {
                return Err(Error::domain("cannot merge chains of different models or datasets"));
            }
            check_dim(first.dim, c.dim)?;
            out.iterations.extend_from_slice(&c.iterations);
            out.mu.extend_from_slice(&c.mu);
            out.concentration.extend_from_slice(&c.concentration);
            out.sigma.extend_from_slice(&c.sigma);
            out.imputed.extend_from_slice(&c.imputed);
        }
        Ok(out)
    }

    /// Scalar parameter names in the order used by [`summarize`].
    pub fn parameter_names(&self) -> Vec<String> {
        let d = self.dim;
        let mut names: Vec<String> = (1..=d).map(|j| format!("mu[{j}]")).collect();
        names.extend((1..=d).map(|j| format!("{}[{j}]", self.kind.concentration_name())));
        for j in 1..=d {
            for k in (j + 1)..=d {
                names.push(format!("rho[{j},{k}]"));
            }
        }
        names
    }
}

/// True parameter values to compare posterior draws against.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub mu: Vec<f64>,
    pub concentration: Vec<f64>,
    /// Strictly-upper correlations, row-major.
    pub sigma: Vec<f64>,
}

impl Reference {
    fn values(&self) -> Vec<f64> {
        let mut v = self.mu.clone();
        v.extend_from_slice(&self.concentration);
        v.extend_from_slice(&self.sigma);
        v
    }
}

/// One row of the posterior summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub name: String,
    pub circular: bool,
    /// Circular mean for angles, arithmetic mean otherwise.
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
    pub truth: Option<f64>,
    /// 2.5% and 97.5% quantiles of `draw − truth` (wrapped for angles).
    pub diff_lower: Option<f64>,
    pub diff_upper: Option<f64>,
}

impl SummaryRow {
    /// Whether the 95% interval of differences contains zero.
    pub fn covers_truth(&self) -> Option<bool> {
        Some(self.diff_lower? <= 0.0 && 0.0 <= self.diff_upper?)
    }
}

/// Linear-interpolation sample quantile of sorted data.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn interval(mut xs: Vec<f64>) -> (f64, f64) {
    xs.sort_by(f64::total_cmp);
    (quantile_sorted(&xs, 0.025), quantile_sorted(&xs, 0.975))
}

/// Posterior mean and 95% interval of each scalar parameter, plus interval
/// of differences from `reference` when supplied.
///
/// Angular intervals are computed on draws unwrapped around their circular
/// mean, so a posterior straddling `±π` gets a contiguous interval.
pub fn summarize(draws: &PosteriorDraws, reference: Option<&Reference>) -> Result<Vec<SummaryRow>> {
    if draws.is_empty() {
        return Err(Error::domain("no posterior draws to summarize"));
    }
    draws.validate()?;
    let d = draws.dim;
    let truth = reference.map(Reference::values);
    if let Some(t) = &truth {
        check_dim(d + d + d * d.saturating_sub(1) / 2, t.len())?;
    }
    let column = |block: &Vec<Vec<f64>>, j: usize| block.iter().map(|row| row[j]).collect::<Vec<f64>>();
    let mut columns: Vec<(Vec<f64>, bool)> = (0..d).map(|j| (column(&draws.mu, j), true)).collect();
    columns.extend((0..d).map(|j| (column(&draws.concentration, j), false)));
    columns.extend((0..draws.sigma[0].len()).map(|j| (column(&draws.sigma, j), false)));

    let names = draws.parameter_names();
    let mut rows = Vec::with_capacity(columns.len());
    for (idx, (xs, circular)) in columns.into_iter().enumerate() {
        let t = truth.as_ref().map(|t| t[idx]);
        let row = if circular {
            let centre = circ_mean_and_mrl(&xs)?.mean.map_or(0.0, |a| a.radians());
            let (lo, hi) = interval(xs.iter().map(|&x| wrap_unchecked(x - centre)).collect());
            let diffs = t.map(|t| interval(xs.iter().map(|&x| wrap_unchecked(x - t)).collect()));
            SummaryRow {
                name: names[idx].clone(),
                circular,
                mean: centre,
                lower: wrap_unchecked(centre + lo),
                upper: wrap_unchecked(centre + hi),
                truth: t,
                diff_lower: diffs.map(|d| d.0),
                diff_upper: diffs.map(|d| d.1),
            }
        } else {
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            let diffs = t.map(|t| interval(xs.iter().map(|&x| x - t).collect()));
            let (lo, hi) = interval(xs);
            SummaryRow {
                name: names[idx].clone(),
                circular,
                mean,
                lower: lo,
                upper: hi,
                truth: t,
                diff_lower: diffs.map(|d| d.0),
                diff_upper: diffs.map(|d| d.1),
            }
        };
        rows.push(row);
    }
    Ok(rows)
}
