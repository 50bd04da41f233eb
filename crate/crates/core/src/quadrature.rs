//! Globally adaptive Gauss–Kronrod (7, 15) quadrature on finite intervals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        kronrod += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    Segment {
        a,
        b,
        value: kronrod * h,
        error: ((kronrod - gauss) * h).abs(),
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

/// Integrates `f` over `[a, b]`, starting from `initial_pieces` equal
/// subintervals and bisecting the worst one until the summed error estimate
/// is below `max(abs_tol, rel_tol·|I|)`.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    initial_pieces: usize,
) -> Integral {
    const MAX_SEGMENTS: usize = 2000;
    let pieces = initial_pieces.max(1);
    let width = (b - a) / pieces as f64;
    let mut heap: BinaryHeap<Segment> = (0..pieces)
        .map(|i| {
            let lo = a + width * i as f64;
            let hi = if i + 1 == pieces { b } else { lo + width };
            gk15(&mut f, lo, hi)
        })
        .collect();
    loop {
        let (value, error) = heap.iter().fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
        let target = abs_tol.max(rel_tol * value.abs());
        if error <= target || heap.len() >= MAX_SEGMENTS {
            return Integral {
                value,
                error,
                converged: error <= target,
            };
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(Segment { error: 0.0, ..worst });
            continue;
        }
        heap.push(gk15(&mut f, worst.a, mid));
        heap.push(gk15(&mut f, mid, worst.b));
    }
}

/// Integrates `exp(ln_f)` over `[a, b]` and returns the natural log of the
/// integral. The integrand is rescaled by its maximum on a scan grid and the
/// domain is trimmed to where it exceeds `exp(-60)` of that maximum.
pub fn integrate_log<F: FnMut(f64) -> f64>(mut ln_f: F, a: f64, b: f64, rel_tol: f64) -> Option<f64> {
    const SCAN: usize = 160;
    let step = (b - a) / SCAN as f64;
    let grid: Vec<f64> = (0..=SCAN).map(|i| ln_f(a + step * i as f64)).collect();
    let peak = grid
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    if !peak.is_finite() {
        return None;
    }
    let keep = |v: &f64| *v > peak - 60.0;
    let first = grid.iter().position(keep)?;
    let last = grid.iter().rposition(keep)?;
    let lo = a + step * first.saturating_sub(1) as f64;
    let hi = (a + step * (last + 1).min(SCAN) as f64).min(b);
    let pieces = (last + 2 - first.saturating_sub(1)).clamp(2, 16);
    let out = integrate(|x| (ln_f(x) - peak).exp(), lo, hi, 0.0, rel_tol, pieces);
    if out.value > 0.0 {
        Some(peak + out.value.ln())
    } else {
        None
    }
}
