//! Goodness-of-fit helpers shared by the integration tests.
#![allow(dead_code)]

pub mod kernels;

use std::f64::consts::{PI, TAU};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use tpn::tpn::{tpn_logpdf, TpnParams};

/// Asymptotic Kolmogorov tail probability with the Stephens correction.
fn kolmogorov_tail(d: f64, n_eff: f64) -> f64 {
    let s = n_eff.sqrt();
    let lambda = (s + 0.12 + 0.11 / s) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as i64 % 2 == 1 { term } else { -term };
        if term < 1e-12 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample KS p-value of `xs` against the continuous CDF `cdf`.
pub fn ks_pvalue(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    kolmogorov_tail(d, n)
}

/// Two-sample KS p-value.
pub fn ks2_pvalue(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    kolmogorov_tail(d, na * nb / (na + nb))
}

/// Upper tail of the chi-square distribution.
pub fn chi2_sf(stat: f64, df: f64) -> f64 {
    1.0 - ChiSquared::new(df).unwrap().cdf(stat)
}

/// Pearson goodness-of-fit p-value of `observed` counts against expected
/// probabilities, pooling cells with expected count below 5.
pub fn chi2_gof(observed: &[u64], probs: &[f64]) -> f64 {
    let n: u64 = observed.iter().sum();
    let total_p: f64 = probs.iter().sum();
    let mut stat = 0.0;
    let mut cells = 0usize;
    let (mut pool_o, mut pool_e) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        let e = n as f64 * p / total_p;
        if e < 5.0 {
            pool_o += o as f64;
            pool_e += e;
            continue;
        }
        stat += (o as f64 - e).powi(2) / e;
        cells += 1;
    }
    if pool_e > 0.0 {
        stat += (pool_o - pool_e).powi(2) / pool_e.max(1e-300);
        cells += 1;
    }
    chi2_sf(stat, (cells - 1) as f64)
}

/// Pearson chi-square p-value for two samples binned on the same cells.
pub fn chi2_two_sample(a: &[u64], b: &[u64]) -> f64 {
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    let (ka, kb) = ((nb / na).sqrt(), (na / nb).sqrt());
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&x, &y) in a.iter().zip(b) {
        if x + y == 0 {
            continue;
        }
        let (x, y) = (x as f64, y as f64);
        stat += (ka * x - kb * y).powi(2) / (x + y);
        cells += 1;
    }
    chi2_sf(stat, (cells - 1) as f64)
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Energy-distance statistic for the group labels `in_a` (1 for the first
/// sample), from the upper triangle of the pairwise distances stored row by
/// row in `dist`.
fn energy_stat(dist: &[f32], row_sums: &[f64], in_a: &[f32]) -> f64 {
    let n = in_a.len();
    let (mut xx, mut yy, mut total) = (0.0, 0.0, 0.0);
    let mut offset = 0;
    for a in 0..n {
        let len = n - a - 1;
        let row = &dist[offset..offset + len];
        let to_a: f64 = row.iter().zip(&in_a[a + 1..]).map(|(d, l)| (d * l) as f64).sum();
        if in_a[a] == 1.0 {
            xx += to_a;
        } else {
            yy += row_sums[a] - to_a;
        }
        total += row_sums[a];
        offset += len;
    }
    let xy = total - xx - yy;
    let na = in_a.iter().filter(|&&l| l == 1.0).count() as f64;
    let nb = n as f64 - na;
    2.0 * xy / (na * nb) - 2.0 * xx / (na * na) - 2.0 * yy / (nb * nb)
}

/// Permutation p-value of the energy-distance two-sample test.
pub fn energy_test(a: &[Vec<f64>], b: &[Vec<f64>], permutations: usize, seed: u64) -> f64 {
    use rand::seq::SliceRandom;
    let pooled: Vec<&Vec<f64>> = a.iter().chain(b).collect();
    let n = pooled.len();
    let mut dist = Vec::with_capacity(n * (n - 1) / 2);
    let mut row_sums = Vec::with_capacity(n);
    for i in 0..n {
        let start = dist.len();
        dist.extend(((i + 1)..n).map(|j| euclid(pooled[i], pooled[j]) as f32));
        row_sums.push(dist[start..].iter().map(|&d| d as f64).sum());
    }
    let mut labels: Vec<f32> = (0..n).map(|i| if i < a.len() { 1.0 } else { 0.0 }).collect();
    let observed = energy_stat(&dist, &row_sums, &labels);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut exceed = 0;
    for _ in 0..permutations {
        labels.shuffle(&mut rng);
        if energy_stat(&dist, &row_sums, &labels) >= observed {
            exceed += 1;
        }
    }
    (1 + exceed) as f64 / (1 + permutations) as f64
}

/// CDF on `[lo, hi]` of an unnormalised density, tabulated with the
/// trapezoid rule on `m` intervals and interpolated linearly.
pub struct GridCdf {
    lo: f64,
    step: f64,
    cum: Vec<f64>,
}

impl GridCdf {
    pub fn new(lo: f64, hi: f64, m: usize, mut density: impl FnMut(f64) -> f64) -> Self {
        let step = (hi - lo) / m as f64;
        Self::from_values(lo, step, (0..=m).map(|i| density(lo + step * i as f64)).collect())
    }

    /// Builds the grid from a log-density, shifted by its maximum first.
    pub fn from_log(lo: f64, hi: f64, m: usize, mut ln_density: impl FnMut(f64) -> f64) -> Self {
        let step = (hi - lo) / m as f64;
        let lf: Vec<f64> = (0..=m).map(|i| ln_density(lo + step * i as f64)).collect();
        let max = lf.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Self::from_values(lo, step, lf.iter().map(|l| (l - max).exp()).collect())
    }

    fn from_values(lo: f64, step: f64, f: Vec<f64>) -> Self {
        let mut cum = vec![0.0; f.len()];
        for i in 1..f.len() {
            cum[i] = cum[i - 1] + 0.5 * step * (f[i - 1] + f[i]);
        }
        let total = *cum.last().unwrap();
        cum.iter_mut().for_each(|c| *c /= total);
        GridCdf { lo, step, cum }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let t = (x - self.lo) / self.step;
        if t <= 0.0 {
            return 0.0;
        }
        let i = t.floor() as usize;
        if i + 1 >= self.cum.len() {
            return 1.0;
        }
        self.cum[i] + (t - i as f64) * (self.cum[i + 1] - self.cum[i])
    }

    pub fn mean(&self) -> f64 {
        let mut m = 0.0;
        for i in 1..self.cum.len() {
            let x = self.lo + self.step * (i as f64 - 0.5);
            m += x * (self.cum[i] - self.cum[i - 1]);
        }
        m
    }
}

/// Mean resultant length of a sample of angles.
pub fn mrl(xs: &[f64]) -> f64 {
    let (c, s) = xs.iter().fold((0.0, 0.0), |(c, s), &x| (c + x.cos(), s + x.sin()));
    (c * c + s * s).sqrt() / xs.len() as f64
}

/// Cell probabilities of a bivariate TPN on the `bins × bins` grid over
/// `[-π, π)²` (4 × 4 Gauss–Legendre points per cell), row-major.
pub fn cell_probabilities(p: &TpnParams, bins: usize) -> Vec<f64> {
    let nodes = [
        -0.861_136_311_594_053,
        -0.339_981_043_584_856,
        0.339_981_043_584_856,
        0.861_136_311_594_053,
    ];
    let weights = [
        0.347_854_845_137_454,
        0.652_145_154_862_546,
        0.652_145_154_862_546,
        0.347_854_845_137_454,
    ];
    let w = TAU / bins as f64;
    let mut r = ChaCha20Rng::seed_from_u64(0);
    let mut out = vec![0.0; bins * bins];
    for a in 0..bins {
        for b in 0..bins {
            let (ca, cb) = (-PI + w * (a as f64 + 0.5), -PI + w * (b as f64 + 0.5));
            let mut s = 0.0;
            for (x, wx) in nodes.iter().zip(weights) {
                for (y, wy) in nodes.iter().zip(weights) {
                    let t = [ca + 0.5 * w * x, cb + 0.5 * w * y];
                    s += wx * wy * tpn_logpdf(&t, p, 1, &mut r).unwrap().exp();
                }
            }
            out[a * bins + b] = s * w * w / 4.0;
        }
    }
    out
}
