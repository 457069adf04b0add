//! Globally adaptive Gauss–Kronrod quadrature (7/15 point) in one and two
//! dimensions. The 2D rule is iterated: an adaptive outer integral whose
//! integrand is itself an adaptive inner integral.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

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

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    /// Subdivision budget per adaptive integral.
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-8,
            max_intervals: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
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
        self.error.total_cmp(&other.error) == Ordering::Equal
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

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    Segment {
        a,
        b,
        value: k * h,
        error: ((k - g) * h).abs(),
    }
}

/// Integrates `f` over `[breaks[0], breaks[last]]`, starting from the
/// partition given by `breaks` (sorted, at least two points).
pub fn integrate_1d<F: FnMut(f64) -> f64>(
    mut f: F,
    breaks: &[f64],
    opts: QuadOptions,
) -> Result<QuadResult> {
    if breaks.len() < 2 || breaks.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::Numeric(format!("invalid break points {breaks:?}")));
    }
    let mut heap = BinaryHeap::new();
    let mut evals = 0;
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            heap.push(kronrod(&mut f, w[0], w[1]));
            evals += 15;
        }
    }
    let mut done: Vec<Segment> = Vec::new();
    let span = breaks[breaks.len() - 1] - breaks[0];
    let total_err = |heap: &BinaryHeap<Segment>, done: &[Segment]| -> f64 {
        heap.iter().chain(done).map(|s| s.error).sum()
    };
    let mut err = total_err(&heap, &done);
    while err > opts.abs_tol {
        if heap.len() + done.len() >= opts.max_intervals {
            let value: f64 = heap.iter().chain(&done).map(|s| s.value).sum();
            return Err(Error::Numeric(format!(
                "quadrature did not converge: value {value:e}, error estimate {err:e} > tolerance {:e} after {} intervals / {evals} evaluations on [{}, {}]",
                opts.abs_tol,
                heap.len() + done.len(),
                breaks[0],
                breaks[breaks.len() - 1],
            )));
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if (worst.b - worst.a) <= 1e-13 * span.max(1.0) || mid <= worst.a || mid >= worst.b {
            // cannot refine further; keep it as is
            done.push(worst);
            if heap.is_empty() {
                break;
            }
            err = total_err(&heap, &done);
            continue;
        }
        let left = kronrod(&mut f, worst.a, mid);
        let right = kronrod(&mut f, mid, worst.b);
        evals += 30;
        err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        // resync the running sum now and then to shed rounding drift
        if evals % 3000 == 0 {
            err = total_err(&heap, &done);
        }
    }
    let mut parts: Vec<Segment> = heap.into_vec();
    parts.extend(done);
    // sum in position order so the result is independent of heap layout
    parts.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = parts.iter().map(|s| s.value).sum();
    let error = parts.iter().map(|s| s.error).sum();
    Ok(QuadResult {
        value,
        error,
        evaluations: evals,
    })
}

/// Iterated 2D integral of `f(x, y)` over a rectangle given by break points
/// in each coordinate.
pub fn integrate_2d<F: Fn(f64, f64) -> f64>(
    f: F,
    x_breaks: &[f64],
    y_breaks: &[f64],
    opts: QuadOptions,
) -> Result<QuadResult> {
    let x_span = x_breaks.last().copied().unwrap_or(0.0) - x_breaks.first().copied().unwrap_or(0.0);
    let inner_opts = QuadOptions {
        abs_tol: 0.5 * opts.abs_tol / x_span.max(1.0),
        ..opts
    };
    let outer_opts = QuadOptions {
        abs_tol: 0.5 * opts.abs_tol,
        ..opts
    };
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let inner_evals = RefCell::new(0usize);
    let outer = integrate_1d(
        |x| {
            if failure.borrow().is_some() {
                return 0.0;
            }
            match integrate_1d(|y| f(x, y), y_breaks, inner_opts) {
                Ok(r) => {
                    *inner_evals.borrow_mut() += r.evaluations;
                    r.value
                }
                Err(e) => {
                    *failure.borrow_mut() = Some(e);
                    0.0
                }
            }
        },
        x_breaks,
        outer_opts,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let outer = outer?;
    Ok(QuadResult {
        value: outer.value,
        error: outer.error + inner_opts.abs_tol * x_span,
        evaluations: inner_evals.into_inner(),
    })
}
