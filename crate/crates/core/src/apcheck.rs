//! Almost periods and translation boundedness of zero sets, checked on
//! finite windows.
//!
//! A shift `τ` is an ε-almost period of a point set when some bijection moves
//! every point of `A` onto `A − τ` by less than ε. On a window this becomes a
//! bipartite matching problem on the overlap of the window and its shift,
//! with a unit margin kept away from the overlap edges.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::strip_zeros::ZeroSet;
use crate::wiener::ExpSum;

/// Fraction of the window that must survive a shift.
pub const MIN_OVERLAP: f64 = 0.8;
const EDGE_MARGIN: f64 = 1.0;

/// Largest multiplicity-counted number of zeros in `[t, t+1]`, `t` stepped by ½.
pub fn translation_bound(zeros: &ZeroSet) -> usize {
    zeros.max_unit_count(0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TauCheck {
    pub tau: f64,
    /// Largest displacement of the matching found, or of the best attempt.
    pub max_displacement: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlmostPeriodReport {
    pub epsilon: f64,
    pub window: (f64, f64),
    /// Accepted shifts in increasing order.
    pub periods: Vec<f64>,
    /// Largest gap between consecutive accepted shifts, counting both ends of
    /// the scanned range; `None` when nothing was accepted.
    pub max_gap: Option<f64>,
    pub checks: Vec<TauCheck>,
}

impl AlmostPeriodReport {
    fn from_checks(epsilon: f64, window: (f64, f64), mut checks: Vec<TauCheck>) -> Self {
        checks.sort_by(|a, b| a.tau.total_cmp(&b.tau));
        let periods: Vec<f64> = checks.iter().filter(|c| c.accepted).map(|c| c.tau).collect();
        let max_gap = match (checks.first(), checks.last(), periods.first(), periods.last()) {
            (Some(lo), Some(hi), Some(first), Some(last)) => {
                let inner = periods.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
                Some(inner.max(first - lo.tau).max(hi.tau - last))
            }
            _ => None,
        };
        AlmostPeriodReport { epsilon, window, periods, max_gap, checks }
    }

    /// CSV with columns `tau,max_displacement,accepted`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("tau,max_displacement,accepted\n");
        for c in &self.checks {
            s.push_str(&format!("{},{},{}\n", c.tau, c.max_displacement, c.accepted));
        }
        s
    }
}

/// Tests every `τ` in `tau_grid` as an ε-almost period of the zero set.
pub fn almost_periods(zeros: &ZeroSet, epsilon: f64, tau_grid: &[f64]) -> Result<AlmostPeriodReport> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput("epsilon must be positive".into()));
    }
    let (x0, x1) = (zeros.window.x_min, zeros.window.x_max);
    let width = x1 - x0;
    if let Some(&tau) = tau_grid.iter().find(|t| width - t.abs() < MIN_OVERLAP * width) {
        let overlap = (width - tau.abs()).max(0.0) / width;
        return Err(Error::WindowTooSmall { tail: 1.0 - overlap, tol: 1.0 - MIN_OVERLAP });
    }
    let pts = zeros.expanded();
    let checks = tau_grid.par_iter().map(|&tau| check_tau(&pts, (x0, x1), epsilon, tau)).collect();
    Ok(AlmostPeriodReport::from_checks(epsilon, (x0, x1), checks))
}

fn check_tau(pts: &[Complex64], (x0, x1): (f64, f64), eps: f64, tau: f64) -> TauCheck {
    // the shifted set A − τ lives on [x0 − τ, x1 − τ]
    let lo = x0.max(x0 - tau) + EDGE_MARGIN;
    let hi = x1.min(x1 - tau) - EDGE_MARGIN;
    let shifted: Vec<Complex64> = pts.iter().map(|p| p - tau).collect();
    let core = |v: &[Complex64], pad: f64| -> Vec<Complex64> {
        v.iter().copied().filter(|p| p.re >= lo - pad && p.re <= hi + pad).collect()
    };
    // every core point on either side must find a partner within ε
    let (d1, ok1) = saturating_matching(&core(pts, 0.0), &core(&shifted, eps), eps);
    let (d2, ok2) = saturating_matching(&core(&shifted, 0.0), &core(pts, eps), eps);
    TauCheck { tau, max_displacement: d1.max(d2), accepted: ok1 && ok2 }
}

/// Matching of every point of `left` to a distinct point of `right` closer
/// than `eps`. Greedy nearest-neighbour first, augmenting paths when greedy
/// gets stuck. Returns the largest displacement used and whether `left` was
/// saturated.
fn saturating_matching(left: &[Complex64], right: &[Complex64], eps: f64) -> (f64, bool) {
    if left.len() > right.len() {
        return (f64::INFINITY, false);
    }
    // right is sorted by real part (inputs are)
    let candidates = |p: &Complex64| -> Vec<usize> {
        let start = right.partition_point(|q| q.re < p.re - eps);
        (start..right.len()).take_while(|&j| right[j].re <= p.re + eps).filter(|&j| (right[j] - p).norm() < eps).collect()
    };
    let adj: Vec<Vec<usize>> = left.iter().map(candidates).collect();
    let mut owner: Vec<Option<usize>> = vec![None; right.len()];
    let mut assigned: Vec<Option<usize>> = vec![None; left.len()];
    for (i, p) in left.iter().enumerate() {
        let best = adj[i]
            .iter()
            .copied()
            .filter(|&j| owner[j].is_none())
            .min_by(|&a, &b| (right[a] - p).norm().total_cmp(&(right[b] - p).norm()));
        if let Some(j) = best {
            owner[j] = Some(i);
            assigned[i] = Some(j);
        }
    }
    for i in 0..left.len() {
        if assigned[i].is_none() {
            let mut seen = vec![false; right.len()];
            if !augment(i, &adj, &mut owner, &mut assigned, &mut seen) {
                return (f64::INFINITY, false);
            }
        }
    }
    let d = assigned
        .iter()
        .enumerate()
        .map(|(i, j)| (right[j.expect("saturated")] - left[i]).norm())
        .fold(0.0, f64::max);
    (d, true)
}

fn augment(
    i: usize,
    adj: &[Vec<usize>],
    owner: &mut [Option<usize>],
    assigned: &mut [Option<usize>],
    seen: &mut [bool],
) -> bool {
    for &j in &adj[i] {
        if seen[j] {
            continue;
        }
        seen[j] = true;
        let free = match owner[j] {
            None => true,
            Some(k) => augment(k, adj, owner, assigned, seen),
        };
        if free {
            owner[j] = Some(i);
            assigned[i] = Some(j);
            return true;
        }
    }
    false
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionPeriodReport {
    pub report: AlmostPeriodReport,
    /// `Σ |q_ω| |e^{2πiωτ} − 1|` per τ, an upper bound for `sup_x |Q(x+τ) − Q(x)|`.
    pub defect: Vec<f64>,
    /// Shifts whose defect alone certifies them.
    pub predicted: Vec<f64>,
}

/// `Σ |q_ω| |e^{2πiωτ} − 1|`.
pub fn diophantine_defect(q: &ExpSum, tau: f64) -> f64 {
    q.terms().iter().map(|t| t.coef.norm() * (crate::wiener::expi(t.freq, Complex64::new(tau, 0.0)) - 1.0).norm()).sum()
}

/// ε-almost periods of `Q` on the real line, measured on `x_grid`.
pub fn ap_function_periods(q: &ExpSum, epsilon: f64, tau_grid: &[f64], x_grid: &[f64]) -> FunctionPeriodReport {
    let checks: Vec<TauCheck> = tau_grid
        .par_iter()
        .map(|&tau| {
            let d = x_grid
                .iter()
                .map(|&x| (q.eval(Complex64::new(x + tau, 0.0)) - q.eval(Complex64::new(x, 0.0))).norm())
                .fold(0.0, f64::max);
            TauCheck { tau, max_displacement: d, accepted: d < epsilon }
        })
        .collect();
    let window = (
        x_grid.iter().copied().fold(f64::INFINITY, f64::min),
        x_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    let report = AlmostPeriodReport::from_checks(epsilon, window, checks);
    let defect: Vec<f64> = report.checks.iter().map(|c| diophantine_defect(q, c.tau)).collect();
    let predicted = report.checks.iter().zip(&defect).filter(|(_, d)| **d < epsilon).map(|(c, _)| c.tau).collect();
    FunctionPeriodReport { report, defect, predicted }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityReport {
    /// Slope of `count(−R, R)` against `2R`.
    pub density: f64,
    pub rho_consistency: f64,
    pub per_radius: Vec<(f64, f64)>,
}

/// Empirical zero density against `1/ρ` from the numbering.
pub fn density(zeros: &ZeroSet, r_grid: &[f64]) -> Result<DensityReport> {
    let num = zeros.numbering()?;
    if r_grid.is_empty() {
        return Err(Error::InvalidInput("density needs at least one radius".into()));
    }
    let counts: Vec<(f64, f64)> = r_grid.iter().map(|&r| (2.0 * r, zeros.count_re_within(r) as f64)).collect();
    let density = if counts.len() == 1 {
        counts[0].1 / counts[0].0
    } else {
        let n = counts.len() as f64;
        let mx = counts.iter().map(|c| c.0).sum::<f64>() / n;
        let my = counts.iter().map(|c| c.1).sum::<f64>() / n;
        let sxy: f64 = counts.iter().map(|c| (c.0 - mx) * (c.1 - my)).sum();
        let sxx: f64 = counts.iter().map(|c| (c.0 - mx).powi(2)).sum();
        sxy / sxx
    };
    let per_radius = counts.iter().map(|(d, c)| (d / 2.0, c / d)).collect();
    Ok(DensityReport { density, rho_consistency: (density - 1.0 / num.rho).abs(), per_radius })
}
