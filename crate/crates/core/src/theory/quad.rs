//! Adaptive Gauss-Kronrod (G7, K15) quadrature on finite intervals.
//!
//! Globally adaptive bisection: the segment with the largest error estimate
//! is split until the summed error estimate meets the tolerance. Error
//! estimation follows the classic rescaling of |K15 - G7| against the
//! centred absolute integral.

use crate::error::{Error, Result};
use std::collections::BinaryHeap;

/// Kronrod abscissae (positive half, descending; last entry is the centre).
const XGK: [f64; 8] = [
    0.991_455_371_120_813,
    0.949_107_912_342_759,
    0.864_864_423_359_769,
    0.741_531_185_599_394,
    0.586_087_235_467_691,
    0.405_845_151_377_397,
    0.207_784_955_007_898,
    0.0,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022_935_322_010_529,
    0.063_092_092_629_979,
    0.104_790_010_322_250,
    0.140_653_259_715_525,
    0.169_004_726_639_267,
    0.190_350_578_064_785,
    0.204_432_940_075_298,
    0.209_482_141_084_728,
];

/// Gauss weights for the embedded 7-point rule (odd-index Kronrod nodes).
const WG: [f64; 4] = [
    0.129_484_966_168_870,
    0.279_705_391_489_277,
    0.381_830_050_505_119,
    0.417_959_183_673_469,
];

/// Quadrature tolerances and budget.
#[derive(Debug, Clone, Copy)]
pub struct QuadOpts {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_segments: usize,
}

impl Default for QuadOpts {
    fn default() -> Self {
        QuadOpts { abs_tol: 1e-10, rel_tol: 1e-8, max_segments: 4000 }
    }
}

impl QuadOpts {
    /// Tight tolerances for identity checks that must hold to ~1e-9 relative.
    pub fn tight() -> Self {
        QuadOpts { abs_tol: 1e-14, rel_tol: 1e-12, max_segments: 20_000 }
    }
}

/// Converged integral estimate.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub evals: usize,
}

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
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One G7/K15 panel on `[a, b]`.
fn qk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_centre = f(centre);

    let mut res_k = WGK[7] * f_centre;
    let mut res_g = WG[3] * f_centre;
    let mut res_abs = res_k.abs();
    let mut vals = [0.0f64; 7];
    let mut sums = [0.0f64; 7];
    for i in 0..7 {
        let dx = half * XGK[i];
        let f1 = f(centre - dx);
        let f2 = f(centre + dx);
        sums[i] = f1 + f2;
        vals[i] = f1.abs() + f2.abs();
        res_k += WGK[i] * sums[i];
        res_abs += WGK[i] * vals[i];
    }
    for i in (1..7).step_by(2) {
        res_g += WG[i / 2] * sums[i];
    }
    // centred absolute integral for the error rescaling
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (f_centre - mean).abs();
    for i in 0..7 {
        res_asc += WGK[i] * ((sums[i] - 2.0 * mean).abs() + 0.0_f64.max(vals[i] - sums[i].abs()));
    }

    let value = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * 1.0_f64.min((200.0 * err / res_asc).powf(1.5));
    }
    let tiny = f64::MIN_POSITIVE / (50.0 * f64::EPSILON);
    if res_abs > tiny {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Segment { a, b, value, error: err }
}

/// Integrate `f` over `[a, b]`.
///
/// Fails with [`Error::QuadratureNoConverge`] when the tolerance cannot be
/// met within `opts.max_segments` panels, and with a parameter error when
/// the integrand produces non-finite values.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: &QuadOpts) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidParam(format!("quadrature interval [{a}, {b}] not finite")));
    }
    if a == b {
        return Ok(QuadResult { value: 0.0, abs_error: 0.0, evals: 0 });
    }

    let mut heap = BinaryHeap::new();
    let first = qk15(&f, a, b);
    let mut evals = 15usize;
    let mut total_value = first.value;
    let mut total_error = first.error;
    heap.push(first);

    loop {
        if !total_value.is_finite() {
            return Err(Error::InvalidParam(
                "integrand produced a non-finite value".into(),
            ));
        }
        let tol = opts.abs_tol.max(opts.rel_tol * total_value.abs());
        if total_error <= tol {
            // resummation over segments avoids drift in the running totals
            let segs = heap.into_sorted_vec();
            let vals: Vec<f64> = segs.iter().map(|s| s.value).collect();
            let errs: Vec<f64> = segs.iter().map(|s| s.error).collect();
            return Ok(QuadResult {
                value: crate::stats::pairwise_sum(&vals),
                abs_error: crate::stats::pairwise_sum(&errs),
                evals,
            });
        }
        if heap.len() >= opts.max_segments {
            return Err(Error::QuadratureNoConverge {
                estimate: total_value,
                abs_error: total_error,
                tol,
            });
        }
        let worst = heap.pop().expect("heap cannot be empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval at floating-point resolution: keep it, accept its error
            heap.push(worst);
            let segs = heap.into_sorted_vec();
            let vals: Vec<f64> = segs.iter().map(|s| s.value).collect();
            let errs: Vec<f64> = segs.iter().map(|s| s.error).collect();
            let value = crate::stats::pairwise_sum(&vals);
            let abs_error = crate::stats::pairwise_sum(&errs);
            let tol = opts.abs_tol.max(opts.rel_tol * value.abs());
            if abs_error <= tol {
                return Ok(QuadResult { value, abs_error, evals });
            }
            return Err(Error::QuadratureNoConverge { estimate: value, abs_error, tol });
        }
        let left = qk15(&f, worst.a, mid);
        let right = qk15(&f, mid, worst.b);
        evals += 30;
        total_value += left.value + right.value - worst.value;
        total_error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
}
