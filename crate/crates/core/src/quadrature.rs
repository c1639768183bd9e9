//! Adaptive Gauss–Legendre quadrature.
//!
//! Each panel is integrated with a 15-point rule and compared against the
//! same rule on its two halves; the panel with the largest disagreement is
//! split until the global error estimate meets the tolerance.

use std::collections::BinaryHeap;
use std::sync::OnceLock;

const ORDER: usize = 15;

/// Nodes and weights on [-1, 1].
fn gauss_legendre() -> &'static ([f64; ORDER], [f64; ORDER]) {
    static RULE: OnceLock<([f64; ORDER], [f64; ORDER])> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre_rule(ORDER))
}

fn gauss_legendre_rule<const N: usize>(n: usize) -> ([f64; N], [f64; N]) {
    let mut nodes = [0.0; N];
    let mut weights = [0.0; N];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(x) and P_{n-1}(x)
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn panel<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let (nodes, weights) = gauss_legendre();
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sum = 0.0;
    let mut abs = 0.0;
    for (x, w) in nodes.iter().zip(weights) {
        let v = f(mid + half * x);
        sum += w * v;
        abs += w * v.abs();
    }
    (sum * half, abs * half.abs())
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Tolerance {
    pub rel: f64,
    /// Absolute floor expressed relative to the integral of |f|.
    pub abs_scale: f64,
    pub max_panels: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rel: 1e-12,
            abs_scale: 1e-14,
            max_panels: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Estimate {
    pub value: f64,
    pub error: f64,
    pub abs_integral: f64,
    pub converged: bool,
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    abs: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn refine<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Panel {
    let mid = 0.5 * (a + b);
    let (coarse, _) = panel(f, a, b);
    let (left, left_abs) = panel(f, a, mid);
    let (right, right_abs) = panel(f, mid, b);
    let value = left + right;
    Panel {
        a,
        b,
        value,
        abs: left_abs + right_abs,
        error: (value - coarse).abs(),
    }
}

/// Integrates `f` over the concatenation of the intervals delimited by
/// `breaks` (ascending).
pub(crate) fn integrate<F: FnMut(f64) -> f64>(mut f: F, breaks: &[f64], tol: Tolerance) -> Estimate {
    let mut heap = BinaryHeap::new();
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            heap.push(refine(&mut f, w[0], w[1]));
        }
    }
    loop {
        let (value, error, abs) = heap
            .iter()
            .fold((0.0, 0.0, 0.0), |(v, e, s), p| (v + p.value, e + p.error, s + p.abs));
        let target = (tol.rel * value.abs()).max(tol.abs_scale * abs);
        if error <= target || heap.len() >= tol.max_panels {
            return Estimate {
                value: sum_ordered(&heap),
                error,
                abs_integral: abs,
                converged: error <= target,
            };
        }
        let worst = heap.pop().expect("nonempty panel set");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval can no longer be split in floating point
            heap.push(Panel { error: 0.0, ..worst });
            continue;
        }
        heap.push(refine(&mut f, worst.a, mid));
        heap.push(refine(&mut f, mid, worst.b));
    }
}

/// Sum of panel values in ascending interval order, so the result does not
/// depend on heap layout.
fn sum_ordered(heap: &BinaryHeap<Panel>) -> f64 {
    let mut panels: Vec<&Panel> = heap.iter().collect();
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    panels.iter().map(|p| p.value).sum()
}

/// Convenience wrapper returning only the value.
#[allow(dead_code)]
pub(crate) fn integrate_value<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    integrate(f, &[a, b], Tolerance::default()).value
}
