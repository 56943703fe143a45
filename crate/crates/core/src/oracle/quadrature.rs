//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! The interval with the largest error estimate is halved until the summed
//! estimate meets the tolerance. Callers pass every known kink (for instance
//! the convex-minorant knot) as a breakpoint so no panel straddles one.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{BoundsError, Result};

pub const DEFAULT_REL_TOL: f64 = 1e-9;
pub const MAX_INTERVALS: usize = 1_000_000;

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
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    Panel {
        a,
        b,
        value: k * h,
        error: ((k - g) * h).abs(),
    }
}

/// Tolerances and panel budget for [`integrate_with`].
#[derive(Debug, Clone, Copy)]
pub struct QuadratureOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            rel_tol: DEFAULT_REL_TOL,
            abs_tol: 0.0,
            max_intervals: MAX_INTERVALS,
        }
    }
}

/// `∫ f` over `[points[0], points[last]]`, with every listed point a panel
/// boundary. Stops when the error estimate is below `rel_tol * |value|`
/// (or `abs_tol`).
pub fn integrate_with<F: Fn(f64) -> f64>(f: F, points: &[f64], opts: QuadratureOptions) -> Result<Integral> {
    let mut heap = BinaryHeap::new();
    for w in points.windows(2) {
        if w[1] > w[0] {
            heap.push(kronrod(&f, w[0], w[1]));
        }
    }
    let totals = |h: &BinaryHeap<Panel>| h.iter().fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
    let (mut value, mut error) = totals(&heap);
    loop {
        if !value.is_finite() {
            return Err(BoundsError::Numeric {
                what: "quadrature (non-finite integrand)",
                achieved: f64::INFINITY,
            });
        }
        if error <= (opts.rel_tol * value.abs()).max(opts.abs_tol) {
            // running sums drift; confirm on exact totals
            let (v, e) = totals(&heap);
            if e <= (opts.rel_tol * v.abs()).max(opts.abs_tol) {
                return Ok(Integral {
                    value: v,
                    error: e,
                    intervals: heap.len(),
                });
            }
            (value, error) = (v, e);
            continue;
        }
        let Some(worst) = heap.pop() else {
            unreachable!("nonzero error implies a panel")
        };
        let mid = 0.5 * (worst.a + worst.b);
        if heap.len() + 2 > opts.max_intervals || mid <= worst.a || mid >= worst.b {
            return Err(BoundsError::Numeric {
                what: "adaptive quadrature",
                achieved: error / value.abs(),
            });
        }
        let (l, r) = (kronrod(&f, worst.a, mid), kronrod(&f, mid, worst.b));
        value += l.value + r.value - worst.value;
        error += l.error + r.error - worst.error;
        heap.push(l);
        heap.push(r);
    }
}

/// [`integrate_with`] using default panel budget.
pub fn integrate_breaks<F: Fn(f64) -> f64>(f: F, points: &[f64], rel_tol: f64, abs_tol: f64) -> Result<Integral> {
    integrate_with(
        f,
        points,
        QuadratureOptions {
            rel_tol,
            abs_tol,
            ..Default::default()
        },
    )
}

/// `∫_a^b f` to relative tolerance `rel_tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<Integral> {
    integrate_breaks(f, &[a, b], rel_tol, 0.0)
}
