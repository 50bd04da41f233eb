//! Angle arithmetic on the circle `[-π, π)`.
//!
//! Every angle handled by this crate is stored in radians and reduced into the
//! half-open interval `[-π, π)`. Degrees only appear at the I/O boundary.

use std::f64::consts::{PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Resultant lengths below this are treated as "no mean direction".
pub const MRL_TIE_THRESHOLD: f64 = 1e-12;

/// An angle in radians, always inside `[-π, π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Angle(f64);

impl Angle {
    pub const ZERO: Angle = Angle(0.0);

    /// Wraps `radians` into `[-π, π)`. Fails on non-finite input.
    pub fn new(radians: f64) -> Result<Self> {
        wrap(radians).map(Angle)
    }

    pub fn from_degrees(degrees: f64) -> Result<Self> {
        Self::new(degrees.to_radians())
    }

    #[inline]
    pub fn radians(self) -> f64 {
        self.0
    }

    pub fn degrees(self) -> f64 {
        self.0.to_degrees()
    }

    /// The point diametrically opposite on the circle.
    pub fn antipode(self) -> Angle {
        Angle(wrap_unchecked(self.0 + PI))
    }
}

impl TryFrom<f64> for Angle {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Angle::new(value)
    }
}

impl From<Angle> for f64 {
    fn from(a: Angle) -> f64 {
        a.0
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// An ordered, non-empty list of angles (a point on the hypertorus).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct AngleVector(Vec<f64>);

impl AngleVector {
    /// Wraps each component; fails on empty input or non-finite components.
    pub fn new(components: impl IntoIterator<Item = f64>) -> Result<Self> {
        let v = components.into_iter().map(wrap).collect::<Result<Vec<_>>>()?;
        if v.is_empty() {
            return Err(Error::domain("angle vector must have at least one component"));
        }
        Ok(AngleVector(v))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, j: usize) -> Angle {
        Angle(self.0[j])
    }

    pub fn iter(&self) -> impl Iterator<Item = Angle> + '_ {
        self.0.iter().map(|&a| Angle(a))
    }
}

impl TryFrom<Vec<f64>> for AngleVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        AngleVector::new(v)
    }
}

impl From<AngleVector> for Vec<f64> {
    fn from(v: AngleVector) -> Vec<f64> {
        v.0
    }
}

/// Two-argument inverse tangent with values in `[-π, π)`.
///
/// Returns the angle whose cosine and sine are proportional to `x` and `y`.
/// The origin has no direction and is a domain error.
pub fn mod_atan(y: f64, x: f64) -> Result<Angle> {
    if !(x.is_finite() && y.is_finite()) {
        return Err(Error::domain(format!("mod_atan of non-finite ({y}, {x})")));
    }
    if x == 0.0 && y == 0.0 {
        return Err(Error::domain("mod_atan at the origin: direction undefined"));
    }
    Ok(Angle(half_open(y.atan2(x))))
}

/// Reduces `x` modulo 2π into `[-π, π)`.
pub fn wrap(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain(format!("cannot wrap non-finite angle {x}")));
    }
    Ok(wrap_unchecked(x))
}

/// [`wrap`] for callers that already know `x` is finite.
#[inline]
pub fn wrap_unchecked(x: f64) -> f64 {
    debug_assert!(x.is_finite());
    if (-PI..PI).contains(&x) {
        return x;
    }
    let y = x - TAU * ((x + PI) / TAU).floor();
    half_open(y)
}

#[inline]
fn half_open(a: f64) -> f64 {
    if a >= PI {
        a - TAU
    } else if a < -PI {
        a + TAU
    } else {
        a
    }
}

/// Arc length between two angles, in `[0, π]`.
#[inline]
pub fn circ_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).abs() % TAU;
    PI - (PI - d).abs()
}

/// Maps an angle in `[-π, π)` to `[0, 2π)`.
#[inline]
pub fn to_unit_interval_turn(a: f64) -> f64 {
    if a < 0.0 {
        a + TAU
    } else {
        a
    }
}

/// Sample circular mean direction and mean resultant length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircularSummary {
    /// `None` when the resultant vector is shorter than [`MRL_TIE_THRESHOLD`].
    pub mean: Option<Angle>,
    pub mrl: f64,
}

pub fn circ_mean_and_mrl(samples: &[f64]) -> Result<CircularSummary> {
    if samples.is_empty() {
        return Err(Error::domain("circular mean of an empty sample"));
    }
    let n = samples.len() as f64;
    let (s, c) = samples.iter().fold((0.0, 0.0), |(s, c), &a| (s + a.sin(), c + a.cos()));
    let (s, c) = (s / n, c / n);
    let mrl = s.hypot(c).min(1.0);
    let mean = if mrl < MRL_TIE_THRESHOLD {
        None
    } else {
        Some(mod_atan(s, c)?)
    };
    Ok(CircularSummary { mean, mrl })
}
