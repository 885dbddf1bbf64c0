//! Globally adaptive Gauss–Kronrod (7/15) quadrature in one dimension, and a
//! nested two-dimensional rule built on it.

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
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Tolerances and budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl QuadConfig {
    pub fn relative(rel_tol: f64) -> Self {
        QuadConfig { rel_tol, abs_tol: 1e-300, max_intervals: 2000 }
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    let kron = kron * h;
    let gauss = gauss * h;
    (kron, (kron - gauss).abs())
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
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
        self.error.total_cmp(&other.error).then(other.a.total_cmp(&self.a))
    }
}

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Integrates `f` over `[a, b]`, bisecting the worst segment until the total
/// error estimate meets `max(abs_tol, rel_tol·|I|)` or the budget runs out.
/// Endpoints are never evaluated.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: QuadConfig) -> QuadResult {
    if a == b {
        return QuadResult { value: 0.0, error: 0.0, evaluations: 0, converged: true };
    }
    let (v, e) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value: v, error: e });
    let mut evaluations = 15;
    loop {
        let value = compensated_sum(heap.iter().map(|s| s.value));
        let error: f64 = heap.iter().map(|s| s.error).sum();
        let target = cfg.abs_tol.max(cfg.rel_tol * value.abs());
        if error <= target || !error.is_finite() || heap.len() >= cfg.max_intervals {
            let converged = error <= target;
            return QuadResult { value, error, evaluations, converged };
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            let value = compensated_sum(heap.iter().map(|s| s.value));
            return QuadResult { value, error, evaluations, converged: false };
        }
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        evaluations += 30;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
    }
}

/// Sums adaptive integrals over consecutive pieces `[p_0, p_1], [p_1, p_2], …`
/// (useful to split at known kinks).
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, breaks: &[f64], cfg: QuadConfig) -> QuadResult {
    let mut out = QuadResult { value: 0.0, error: 0.0, evaluations: 0, converged: true };
    let mut parts = Vec::new();
    for w in breaks.windows(2) {
        let r = integrate(&f, w[0], w[1], cfg);
        parts.push(r.value);
        out.error += r.error;
        out.evaluations += r.evaluations;
        out.converged &= r.converged;
    }
    out.value = compensated_sum(parts);
    out
}

/// `∫_{x0}^{x1} ∫_{lo(x)}^{hi(x)} f(x, y) dy dx` by nested adaptive rules.
/// The inner tolerance is a tenth of the outer one; the reported error adds
/// the accumulated inner error bound to the outer estimate.
pub fn integrate_2d<F, L, H>(f: F, x_breaks: &[f64], lo: L, hi: H, cfg: QuadConfig) -> QuadResult
where
    F: Fn(f64, f64) -> f64,
    L: Fn(f64) -> f64,
    H: Fn(f64) -> f64,
{
    let inner_cfg = QuadConfig { rel_tol: cfg.rel_tol * 0.1, abs_tol: cfg.abs_tol * 0.1, ..cfg };
    let inner_err = std::cell::Cell::new(0.0_f64);
    let inner_ok = std::cell::Cell::new(true);
    let inner_evals = std::cell::Cell::new(0usize);
    let outer = integrate_pieces(
        |x| {
            let (a, b) = (lo(x), hi(x));
            if b <= a {
                return 0.0;
            }
            let r = integrate(|y| f(x, y), a, b, inner_cfg);
            inner_err.set(inner_err.get().max(r.error));
            inner_ok.set(inner_ok.get() && r.converged);
            inner_evals.set(inner_evals.get() + r.evaluations);
            r.value
        },
        x_breaks,
        cfg,
    );
    let width = x_breaks.last().copied().unwrap_or(0.0) - x_breaks.first().copied().unwrap_or(0.0);
    let error = outer.error + inner_err.get() * width.abs();
    let target = cfg.abs_tol.max(cfg.rel_tol * outer.value.abs());
    QuadResult {
        value: outer.value,
        error,
        evaluations: outer.evaluations + inner_evals.get(),
        converged: outer.converged && inner_ok.get() && error <= 2.0 * target,
    }
}
