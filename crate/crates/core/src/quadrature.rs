//! Gauss–Legendre rules and a composite integrator with panel doubling.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Roots of `P_n` by Newton's method from Chebyshev-like guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Shared cached rule.
    pub fn cached(n: usize) -> std::sync::Arc<GaussLegendre> {
        static CACHE: OnceLock<Mutex<HashMap<usize, std::sync::Arc<GaussLegendre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("quadrature cache poisoned");
        guard.entry(n).or_insert_with(|| std::sync::Arc::new(GaussLegendre::new(n))).clone()
    }

    /// `∫_a^b f` with the rule applied on `panels` equal sub-intervals.
    pub fn composite<F>(&self, f: &F, a: f64, b: f64, panels: usize) -> (Complex64, f64)
    where
        F: Fn(f64) -> Complex64,
    {
        let h = (b - a) / panels as f64;
        let mut sum = Complex64::new(0.0, 0.0);
        let mut abs_sum = 0.0;
        for k in 0..panels {
            let mid = a + h * (k as f64 + 0.5);
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                let v = f(mid + 0.5 * h * x) * (w * 0.5 * h);
                sum += v;
                abs_sum += v.norm();
            }
        }
        (sum, abs_sum)
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Outcome of [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: Complex64,
    /// `∫|f|` approximation on the final level.
    pub l1: f64,
    /// Change between the last two levels.
    pub change: f64,
    pub converged: bool,
}

/// Composite Gauss–Legendre with panel counts `1, 2, 4, …, 2^max_levels`,
/// stopping once successive values agree to `rel_tol · ∫|f|`.
pub fn integrate<F>(f: F, a: f64, b: f64, order: usize, max_levels: u32, rel_tol: f64) -> Integral
where
    F: Fn(f64) -> Complex64,
{
    let rule = GaussLegendre::cached(order);
    let (mut prev, mut l1) = rule.composite(&f, a, b, 1);
    let mut change = f64::INFINITY;
    for level in 1..=max_levels {
        let (v, abs) = rule.composite(&f, a, b, 1 << level);
        change = (v - prev).norm();
        l1 = abs;
        prev = v;
        if change <= rel_tol * l1.max(f64::MIN_POSITIVE) {
            return Integral { value: v, l1, change, converged: true };
        }
    }
    Integral { value: prev, l1, change, converged: false }
}
