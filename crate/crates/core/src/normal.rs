//! Scalar standard-normal functions and univariate truncated-normal sampling.

use std::f64::consts::FRAC_1_SQRT_2;

use rand::distr::Open01;
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

/// ln(√(2π))
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Truncation points (in standard deviations) beyond which the exponential
/// rejection sampler replaces CDF inversion.
pub const TAIL_SWITCH: f64 = 5.0;

#[inline]
pub fn std_pdf(z: f64) -> f64 {
    (-0.5 * z * z - LN_SQRT_2PI).exp()
}

#[inline]
pub fn ln_std_pdf(z: f64) -> f64 {
    -0.5 * z * z - LN_SQRT_2PI
}

#[inline]
pub fn std_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// ln Φ(z), accurate far into both tails.
pub fn ln_std_cdf(z: f64) -> f64 {
    if z > 5.0 {
        (-0.5 * erfc(z * FRAC_1_SQRT_2)).ln_1p()
    } else if z > -30.0 {
        std_cdf(z).ln()
    } else {
        // Φ(z) = φ(z)/|z| · (1 - 1/z² + 3/z⁴ - 15/z⁶ + ...)
        let w = 1.0 / (z * z);
        let series = 1.0 - w * (1.0 - 3.0 * w * (1.0 - 5.0 * w * (1.0 - 7.0 * w)));
        ln_std_pdf(z) - (-z).ln() + series.ln()
    }
}

/// Standard normal quantile function.
pub fn std_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// E[(Z + t)⁺] = φ(t) + t Φ(t) for Z ~ N(0, 1).
pub fn positive_part_mean(t: f64) -> f64 {
    if t > -10.0 {
        (std_pdf(t) + t * std_cdf(t)).max(0.0)
    } else {
        // φ(t) (1/t² - 3/t⁴ + 15/t⁶ - 105/t⁸ + 945/t¹⁰)
        let w = 1.0 / (t * t);
        let series = w * (1.0 - 3.0 * w * (1.0 - 5.0 * w * (1.0 - 7.0 * w * (1.0 - 9.0 * w))));
        std_pdf(t) * series
    }
}

/// ln E[(Z + t)⁺], finite wherever [`ln_std_cdf`] is.
pub fn ln_positive_part_mean(t: f64) -> f64 {
    if t > -10.0 {
        positive_part_mean(t).ln()
    } else {
        let w = 1.0 / (t * t);
        let series = w * (1.0 - 3.0 * w * (1.0 - 5.0 * w * (1.0 - 7.0 * w * (1.0 - 9.0 * w))));
        ln_std_pdf(t) + series.ln()
    }
}

/// Draws from N(mean, sd²) restricted to `(lower, ∞)`.
pub fn sample_truncated_below<R: Rng + ?Sized>(mean: f64, sd: f64, lower: f64, rng: &mut R) -> f64 {
    debug_assert!(sd > 0.0);
    let a = (lower - mean) / sd;
    mean + sd * sample_std_truncated_below(a, rng)
}

/// Draws Z ~ N(0, 1) conditioned on Z > a.
pub fn sample_std_truncated_below<R: Rng + ?Sized>(a: f64, rng: &mut R) -> f64 {
    if a > TAIL_SWITCH {
        return sample_tail_exponential(a, rng);
    }
    if a < -TAIL_SWITCH {
        // Almost no mass is removed; plain rejection terminates immediately.
        loop {
            let z: f64 = rng.sample(StandardNormal);
            if z > a {
                return z;
            }
        }
    }
    let upper_mass = std_cdf(-a);
    let u: f64 = rng.sample(Open01);
    let z = -std_quantile(u * upper_mass);
    // Inversion can land a rounding error below the bound.
    z.max(a)
}

/// Exponential-proposal rejection sampler for the far tail (Robert, 1995).
fn sample_tail_exponential<R: Rng + ?Sized>(a: f64, rng: &mut R) -> f64 {
    let alpha = 0.5 * (a + (a * a + 4.0).sqrt());
    loop {
        let u1: f64 = rng.sample(Open01);
        let z = a - u1.ln() / alpha;
        let u2: f64 = rng.sample(Open01);
        if u2.ln() <= -0.5 * (z - alpha) * (z - alpha) {
            return z;
        }
    }
}

/// Mean of N(mean, sd²) truncated to `(0, ∞)`.
pub fn truncated_mean_positive(mean: f64, sd: f64) -> f64 {
    let t = mean / sd;
    sd * positive_part_mean(t) / std_cdf(t)
}
