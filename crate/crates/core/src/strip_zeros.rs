//! Zeros of exponential sums inside rectangles of a horizontal strip.
//!
//! Counting uses the argument principle on a certified walk along each edge:
//! from a sample `z` with value `Q(z)` the walk advances by at most
//! `0.9·|Q(z)|/M₁`, where `M₁` bounds `|Q'|` on the edge. On that step
//! `|Q(z') − Q(z)| < |Q(z)|`, so the segment is zero free and the principal
//! argument of `Q(z')/Q(z)` is the exact increment of `arg Q`. The winding
//! number therefore comes out as an integer up to rounding, and a contour that
//! passes too close to a zero is rejected instead of miscounted.
//!
//! [`find_zeros`] bisects rectangles until each holds one zero, polishes it
//! with Newton's method, and treats a persistent `k`-fold count as a cluster
//! whose position is found as a simple zero of `Q^{(k−1)}` and certified with
//! a Rouché test on a small disk.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wiener::ExpSum;
use crate::SCHEMA;

const TWO_PI: f64 = 2.0 * PI;
/// Fraction of the zero-free radius used as a walking step.
const STEP_FRACTION: f64 = 0.9;
const MAX_WALK_STEPS: usize = 20_000_000;
const MAX_CUT_ATTEMPTS: usize = 24;
const MAX_GROW_ATTEMPTS: usize = 20;
const JITTER_SEED: u64 = 0x5157_0001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        let r = Rect { x_min, x_max, y_min, y_max };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max].iter().all(|v| v.is_finite());
        if !finite || self.x_min >= self.x_max || self.y_min >= self.y_max {
            return Err(Error::InvalidInput(format!(
                "rectangle needs x_min < x_max and y_min < y_max, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))
    }

    pub fn contains(&self, z: Complex64) -> bool {
        self.contains_with_margin(z, 0.0)
    }

    pub fn contains_with_margin(&self, z: Complex64, margin: f64) -> bool {
        z.re >= self.x_min - margin
            && z.re <= self.x_max + margin
            && z.im >= self.y_min - margin
            && z.im <= self.y_max + margin
    }

    /// Counter-clockwise corners starting at the lower left.
    pub fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.x_min, self.y_min),
            Complex64::new(self.x_max, self.y_min),
            Complex64::new(self.x_max, self.y_max),
            Complex64::new(self.x_min, self.y_max),
        ]
    }

    pub fn split_at_x(&self, x: f64) -> (Rect, Rect) {
        (Rect { x_max: x, ..*self }, Rect { x_min: x, ..*self })
    }

    pub fn split_at_y(&self, y: f64) -> (Rect, Rect) {
        (Rect { y_max: y, ..*self }, Rect { y_min: y, ..*self })
    }
}

impl std::str::FromStr for Rect {
    type Err = Error;
    /// Parses `x_min,x_max,y_min,y_max`.
    fn from_str(s: &str) -> Result<Self> {
        let v: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidInput(format!("rectangle {s:?}: {e}")))?;
        if v.len() != 4 {
            return Err(Error::InvalidInput(format!("rectangle {s:?} needs four numbers")));
        }
        Rect::new(v[0], v[1], v[2], v[3])
    }
}

/// Closed strip `|Im z| ≤ half_width` containing every zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Strip {
    pub half_width: f64,
    /// Set when the series is a single exponential and has no zeros at all.
    pub no_zeros: bool,
}

/// Strip containing all zeros, from dominance of the extreme frequencies.
///
/// Above the line `Im z = y` the term with the smallest frequency dominates
/// once `|q_min| > Σ_{ω≠ω_min} |q_ω| e^{−2π(ω−ω_min)y}`; below, the largest
/// frequency plays that role.
pub fn strip_bound(q: &ExpSum) -> Result<Strip> {
    let terms = q.terms();
    let (first, last) = match (terms.first(), terms.last()) {
        (Some(a), Some(b)) => (*a, *b),
        _ => return Err(Error::InvalidInput("the zero series has no isolated zeros".into())),
    };
    let floor = q.drop_tol().max(q.discarded_norm());
    for t in [first, last] {
        if t.coef.norm() <= floor {
            return Err(Error::EndpointNotAttained { freq: t.freq });
        }
    }
    if terms.len() == 1 {
        return Ok(Strip { half_width: 0.0, no_zeros: true });
    }
    let excess_up = |y: f64| -> f64 {
        terms[1..]
            .iter()
            .map(|t| t.coef.norm() * (-TWO_PI * (t.freq - first.freq) * y).exp())
            .sum::<f64>()
            - first.coef.norm()
    };
    let excess_down = |y: f64| -> f64 {
        terms[..terms.len() - 1]
            .iter()
            .map(|t| t.coef.norm() * (-TWO_PI * (last.freq - t.freq) * y).exp())
            .sum::<f64>()
            - last.coef.norm()
    };
    let h = dominance_height(excess_up).max(dominance_height(excess_down));
    Ok(Strip { half_width: h, no_zeros: false })
}

/// Smallest `y ≥ 0` (up to 1e-12) with `excess(y) < 0`, for decreasing `excess`.
fn dominance_height(excess: impl Fn(f64) -> f64) -> f64 {
    if excess(0.0) < 0.0 {
        return 0.0;
    }
    let mut hi = 1.0;
    while excess(hi) >= 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    while hi - lo > 1e-12 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if excess(mid) < 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Result of the argument-principle count on a closed rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Winding {
    pub count: usize,
    /// Distance of the raw winding number from the nearest integer.
    pub residual: f64,
    /// Smallest `|Q|` met on the boundary.
    pub boundary_min: f64,
    pub evaluations: usize,
}

/// Number of zeros of `q` in `rect`, counted with multiplicity.
pub fn count_zeros(q: &ExpSum, rect: &Rect) -> Result<usize> {
    winding(q, rect).map(|w| w.count)
}

/// Winding number of `q` around the boundary of `rect` with diagnostics.
pub fn winding(q: &ExpSum, rect: &Rect) -> Result<Winding> {
    rect.validate()?;
    let c = rect.corners();
    let mut total = 0.0;
    let mut boundary_min = f64::INFINITY;
    let mut evaluations = 0;
    for k in 0..4 {
        let e = walk_edge(q, c[k], c[(k + 1) % 4])?;
        total += e.arg_change;
        boundary_min = boundary_min.min(e.min_modulus);
        evaluations += e.evaluations;
    }
    let w = total / TWO_PI;
    let n = w.round();
    let residual = (w - n).abs();
    if residual >= 0.25 || n < 0.0 {
        return Err(Error::NonIntegerWinding { value: w, residual });
    }
    Ok(Winding { count: n as usize, residual, boundary_min, evaluations })
}

struct EdgeWalk {
    arg_change: f64,
    min_modulus: f64,
    evaluations: usize,
}

fn walk_edge(q: &ExpSum, a: Complex64, b: Complex64) -> Result<EdgeWalk> {
    let (y_lo, y_hi) = (a.im.min(b.im), a.im.max(b.im));
    let m1 = q.derivative_bound(y_lo, y_hi);
    let scale = q.norm_on_line(y_lo).max(q.norm_on_line(y_hi));
    let floor = 1e3 * f64::EPSILON * scale;
    let len = (b - a).norm();
    let dir = (b - a) / len;
    let max_step = len / 4.0;
    let mut t = 0.0;
    let mut z = a;
    let mut v = q.eval(z);
    let mut out = EdgeWalk { arg_change: 0.0, min_modulus: v.norm(), evaluations: 1 };
    while t < len {
        let modulus = v.norm();
        out.min_modulus = out.min_modulus.min(modulus);
        let boundary_zero = || Error::BoundaryZero { re: z.re, im: z.im, modulus };
        if modulus <= floor {
            return Err(boundary_zero());
        }
        let radius = if m1 > 0.0 { STEP_FRACTION * modulus / m1 } else { f64::INFINITY };
        let min_step = 1e-13 * (1.0 + z.norm());
        if radius < min_step || out.evaluations > MAX_WALK_STEPS {
            return Err(boundary_zero());
        }
        let step = radius.min(max_step).min(len - t);
        t += step;
        z = if t >= len { b } else { a + dir * t };
        let next = q.eval(z);
        out.arg_change += (next / v).arg();
        out.evaluations += 1;
        v = next;
    }
    out.min_modulus = out.min_modulus.min(v.norm());
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroPoint {
    pub location: Complex64,
    pub multiplicity: u32,
}

/// Canonical numbering `a_n = ρn + φ(n)` of a zero multiset.
#[derive(Debug, Clone, PartialEq)]
pub struct Numbering {
    pub rho: f64,
    pub m_bound: f64,
    /// `(n, φ(n))` for consecutive `n`, multiplicities repeated.
    pub phi: Vec<(i64, Complex64)>,
}

impl Numbering {
    pub fn n_min(&self) -> i64 {
        self.phi.first().map_or(0, |p| p.0)
    }

    pub fn n_max(&self) -> i64 {
        self.phi.last().map_or(-1, |p| p.0)
    }

    pub fn phi(&self, n: i64) -> Option<Complex64> {
        let i = n.checked_sub(self.n_min())?;
        self.phi.get(usize::try_from(i).ok()?).map(|p| p.1)
    }

    /// `a_n`, when `n` lies in the numbered range.
    pub fn point(&self, n: i64) -> Option<Complex64> {
        self.phi(n).map(|p| p + self.rho * n as f64)
    }

    /// Largest `N` such that `a_{−N..=N}` are all numbered.
    pub fn symmetric_extent(&self) -> i64 {
        self.n_max().min(-self.n_min())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ZeroSetRepr", try_from = "ZeroSetRepr")]
pub struct ZeroSet {
    pub points: Vec<ZeroPoint>,
    pub window: Rect,
    pub numbering: Option<Numbering>,
}

impl ZeroSet {
    /// Builds a zero set from located points; sorts by `(Re, Im)`.
    pub fn new(mut points: Vec<ZeroPoint>, window: Rect) -> Result<Self> {
        window.validate()?;
        if let Some(p) = points.iter().find(|p| !window.contains(p.location)) {
            return Err(Error::InvalidInput(format!("zero {} lies outside the window", p.location)));
        }
        if points.iter().any(|p| p.multiplicity == 0) {
            return Err(Error::InvalidInput("multiplicity must be at least 1".into()));
        }
        points.sort_by(|a, b| cmp_complex(&a.location, &b.location));
        Ok(ZeroSet { points, window, numbering: None })
    }

    /// Simple zeros at the given locations.
    pub fn from_locations(locations: impl IntoIterator<Item = Complex64>, window: Rect) -> Result<Self> {
        let points = locations.into_iter().map(|location| ZeroPoint { location, multiplicity: 1 }).collect();
        Self::new(points, window)
    }

    pub fn total_multiplicity(&self) -> usize {
        self.points.iter().map(|p| p.multiplicity as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Locations repeated by multiplicity, in `(Re, Im)` order.
    pub fn expanded(&self) -> Vec<Complex64> {
        self.points
            .iter()
            .flat_map(|p| std::iter::repeat_n(p.location, p.multiplicity as usize))
            .collect()
    }

    /// Largest multiplicity-counted number of zeros with `Re z` in `[t, t+1]`,
    /// for `t` stepped by `step` from the left edge of the window.
    pub fn max_unit_count(&self, step: f64) -> usize {
        let xs: Vec<(f64, usize)> =
            self.points.iter().map(|p| (p.location.re, p.multiplicity as usize)).collect();
        let mut best = 0;
        let mut t = self.window.x_min;
        while t <= self.window.x_max {
            let lo = xs.partition_point(|p| p.0 < t);
            let hi = xs.partition_point(|p| p.0 <= t + 1.0);
            best = best.max(xs[lo..hi].iter().map(|p| p.1).sum());
            t += step;
        }
        best
    }

    /// Multiplicity-counted number of zeros with `|Re z| < r`.
    pub fn count_re_within(&self, r: f64) -> usize {
        self.points.iter().filter(|p| p.location.re.abs() < r).map(|p| p.multiplicity as usize).sum()
    }

    /// Multiplicity-counted number of zeros with `|z| ≤ r`.
    pub fn count_abs_within(&self, r: f64) -> usize {
        self.points.iter().filter(|p| p.location.norm() <= r).map(|p| p.multiplicity as usize).sum()
    }

    pub fn numbering(&self) -> Result<&Numbering> {
        self.numbering.as_ref().ok_or(Error::NotNumbered)
    }

    /// Distance from `z` to the nearest zero.
    pub fn distance_to(&self, z: Complex64) -> f64 {
        let i = self.points.partition_point(|p| p.location.re < z.re);
        let mut best = f64::INFINITY;
        for p in self.points[i..].iter() {
            if p.location.re - z.re > best {
                break;
            }
            best = best.min((p.location - z).norm());
        }
        for p in self.points[..i].iter().rev() {
            if z.re - p.location.re > best {
                break;
            }
            best = best.min((p.location - z).norm());
        }
        best
    }
}

fn cmp_complex(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Tuning knobs of the subdivision solver.
#[derive(Debug, Clone, Copy)]
pub struct ZeroFinder {
    /// Relative residual target `|Q(a)| / (‖Q‖_W e^{2π max|ω| |Im a|})`.
    pub tol: f64,
    /// Radius of the disk certifying a `k`-fold cluster.
    pub cluster_radius: f64,
    pub seed: u64,
}

impl ZeroFinder {
    pub fn new(tol: f64) -> Self {
        ZeroFinder { tol, cluster_radius: 1e-6, seed: JITTER_SEED }
    }

    pub fn find(&self, q: &ExpSum, rect: &Rect) -> Result<ZeroSet> {
        rect.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut window = *rect;
        let mut attempt = 0;
        let top = loop {
            match winding(q, &window) {
                Ok(w) => break w,
                Err(Error::BoundaryZero { .. }) if attempt < MAX_GROW_ATTEMPTS => {
                    attempt += 1;
                    window = Rect {
                        x_min: window.x_min - rng.gen_range(1e-4..0.01),
                        x_max: window.x_max + rng.gen_range(1e-4..0.01),
                        y_min: window.y_min - rng.gen_range(1e-4..0.01),
                        y_max: window.y_max + rng.gen_range(1e-4..0.01),
                    };
                }
                Err(e) => return Err(e),
            }
        };
        let mut solver = Solver { q, finder: self, rng, derivatives: vec![q.clone()], out: Vec::new() };
        solver.solve(window, top.count, 0)?;
        let mut points = solver.out;
        points.sort_by(|a, b| cmp_complex(&a.location, &b.location));
        let found: usize = points.iter().map(|p| p.multiplicity as usize).sum();
        if found != top.count {
            return Err(Error::NonIntegerWinding { value: found as f64, residual: (found as f64 - top.count as f64).abs() });
        }
        ZeroSet::new(points, window)
    }
}

/// Zeros of `q` in `rect`, simple zeros polished to relative residual `tol`.
pub fn find_zeros(q: &ExpSum, rect: &Rect, tol: f64) -> Result<ZeroSet> {
    ZeroFinder::new(tol).find(q, rect)
}

struct Solver<'a> {
    q: &'a ExpSum,
    finder: &'a ZeroFinder,
    rng: ChaCha8Rng,
    /// `Q, Q', Q'', …` built on demand.
    derivatives: Vec<ExpSum>,
    out: Vec<ZeroPoint>,
}

impl Solver<'_> {
    fn derivative(&mut self, order: usize) -> &ExpSum {
        while self.derivatives.len() <= order {
            let next = self.derivatives.last().expect("Q itself").derivative();
            self.derivatives.push(next);
        }
        &self.derivatives[order]
    }

    fn solve(&mut self, rect: Rect, count: usize, depth: usize) -> Result<()> {
        if count == 0 {
            return Ok(());
        }
        let side = rect.width().max(rect.height());
        if count == 1 {
            if let Some(z) = self.newton(0, rect) {
                self.out.push(ZeroPoint { location: z, multiplicity: 1 });
                return Ok(());
            }
        } else if count <= 8 {
            if let Some(z) = self.cluster(rect, count) {
                self.out.push(ZeroPoint { location: z, multiplicity: count as u32 });
                return Ok(());
            }
        }
        let floor = 1e3 * f64::EPSILON * (1.0 + rect.center().norm());
        if side < floor || depth > 2000 {
            return Err(Error::ResolutionLimit { count, width: side });
        }
        let (a, b) = self.split(rect, count)?;
        self.solve(a.0, a.1, depth + 1)?;
        self.solve(b.0, b.1, depth + 1)
    }

    /// Splits across the longer side at a jittered position whose cut
    /// passes the boundary check and keeps the count additive.
    fn split(&mut self, rect: Rect, count: usize) -> Result<((Rect, usize), (Rect, usize))> {
        let mut last_err = None;
        for attempt in 0..MAX_CUT_ATTEMPTS {
            let spread = if attempt == 0 { 0.05 } else { 0.3 };
            let u = 0.5 + self.rng.gen_range(-spread..spread);
            let (a, b) = if rect.width() >= rect.height() {
                rect.split_at_x(rect.x_min + u * rect.width())
            } else {
                rect.split_at_y(rect.y_min + u * rect.height())
            };
            match (winding(self.q, &a), winding(self.q, &b)) {
                (Ok(wa), Ok(wb)) if wa.count + wb.count == count => {
                    return Ok(((a, wa.count), (b, wb.count)));
                }
                (Err(e), _) | (_, Err(e)) => last_err = Some(e),
                (Ok(wa), Ok(wb)) => {
                    last_err = Some(Error::NonIntegerWinding {
                        value: (wa.count + wb.count) as f64,
                        residual: ((wa.count + wb.count) as f64 - count as f64).abs(),
                    })
                }
            }
        }
        Err(last_err.expect("at least one attempt"))
    }

    /// Newton iteration on `Q^{(order)}` from the centre of `rect`; returns
    /// the limit when it converges inside `rect`.
    fn newton(&mut self, order: usize, rect: Rect) -> Option<Complex64> {
        let f = self.derivative(order).clone();
        let slack = 0.05 * rect.width().max(rect.height());
        let mut z = rect.center();
        for _ in 0..100 {
            let (v, d) = f.eval_with_derivative(z);
            if d.norm() == 0.0 || !d.norm().is_finite() {
                return None;
            }
            let step = v / d;
            z -= step;
            if !rect.contains_with_margin(z, slack) {
                return None;
            }
            if step.norm() <= 4.0 * f64::EPSILON * (1.0 + z.norm()) {
                // a couple of extra iterations settle the last bits
                for _ in 0..2 {
                    let (v, d) = f.eval_with_derivative(z);
                    if d.norm() > 0.0 {
                        z -= v / d;
                    }
                }
                return rect.contains(z).then_some(z);
            }
        }
        None
    }

    /// A `k`-fold cluster: simple zero of `Q^{(k−1)}` certified by Rouché on
    /// a disk of radius `cluster_radius`.
    fn cluster(&mut self, rect: Rect, k: usize) -> Option<Complex64> {
        let z = self.newton(k - 1, rect)?;
        let rho = self.finder.cluster_radius * (1.0 + z.norm());
        let mut lower_terms = 0.0;
        let mut factorial = 1.0;
        let mut lead = 0.0;
        for j in 0..=k {
            if j > 0 {
                factorial *= j as f64;
            }
            let c = self.derivative(j).eval(z).norm() / factorial;
            if j < k {
                lower_terms += c * rho.powi(j as i32);
            } else {
                lead = c * rho.powi(k as i32);
            }
        }
        // Taylor remainder of order k+1 on the disk
        let kk = k as i32 + 1;
        let fact_k1: f64 = (1..=k + 1).map(|i| i as f64).product();
        let tail: f64 = self
            .q
            .terms()
            .iter()
            .map(|t| {
                let a = TWO_PI * t.freq.abs() * rho;
                t.coef.norm() * (-TWO_PI * t.freq * z.im).exp() * a.powi(kk) / fact_k1 * a.exp()
            })
            .sum();
        (lead > lower_terms + tail).then_some(z)
    }
}

/// Sorts points by `(Re, Im)`, repeats multiplicities, and numbers them
/// `a_n = ρn + φ(n)` with `ρ` the least-squares slope of `Re a_n` against `n`.
///
/// Index 0 goes to a point nearest the origin; among equally near points the
/// one making the mean of `Re φ` closest to zero wins (then the first in order).
pub fn enumerate(zeros: &ZeroSet) -> Result<ZeroSet> {
    let pts = zeros.expanded();
    let m = pts.len();
    if m < 10 {
        return Err(Error::TooFewPoints { needed: 10, got: m });
    }
    let mean_k = (m as f64 - 1.0) / 2.0;
    let mean_x = pts.iter().map(|p| p.re).sum::<f64>() / m as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (k, p) in pts.iter().enumerate() {
        let dk = k as f64 - mean_k;
        sxy += dk * (p.re - mean_x);
        sxx += dk * dk;
    }
    let rho = sxy / sxx;
    if !(rho > 0.0) {
        return Err(Error::InvalidInput("zeros do not advance along the real axis".into()));
    }
    let dmin = pts.iter().map(|p| p.norm()).fold(f64::INFINITY, f64::min);
    let mut best: Option<(usize, f64)> = None;
    for (k, p) in pts.iter().enumerate() {
        if p.norm() > dmin * (1.0 + 1e-9) + 1e-12 {
            continue;
        }
        let mean_re_phi = (mean_x - rho * (mean_k - k as f64)).abs();
        if best.is_none_or(|(_, b)| mean_re_phi < b - 1e-12) {
            best = Some((k, mean_re_phi));
        }
    }
    let k0 = best.expect("non-empty").0 as i64;
    let phi: Vec<(i64, Complex64)> = pts
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let n = k as i64 - k0;
            (n, p - rho * n as f64)
        })
        .collect();
    let m_bound = phi.iter().map(|p| p.1.norm()).fold(0.0, f64::max);
    Ok(ZeroSet { numbering: Some(Numbering { rho, m_bound, phi }), ..zeros.clone() })
}

/// `min |Q(z)|` over a scan of `|Im z| ≤ s`, `Re z` in the window, keeping
/// only points at distance at least `eps` from every known zero.
pub fn separation(q: &ExpSum, zeros: &ZeroSet, eps: f64, s: f64) -> Result<f64> {
    if !(eps > 0.0 && s >= 0.0) {
        return Err(Error::InvalidInput("separation needs eps > 0 and s >= 0".into()));
    }
    let (x0, x1) = (zeros.window.x_min + eps, zeros.window.x_max - eps);
    let area = (x1 - x0).max(0.0) * 2.0 * s;
    let h = (eps / 4.0).min(0.05).max((area / 4e6).sqrt());
    let nx = ((x1 - x0) / h).ceil().max(1.0) as usize;
    let ny = ((2.0 * s) / h).ceil().max(1.0) as usize;
    let scale = q.norm_on_line(s).max(q.norm_on_line(-s));
    let floor = 1e-8 * scale;
    let mut m = f64::INFINITY;
    let mut probe = |z: Complex64| -> Result<()> {
        if z.re < x0 || z.re > x1 || z.im.abs() > s || zeros.distance_to(z) < eps * (1.0 - 1e-12) {
            return Ok(());
        }
        let v = q.eval(z).norm();
        if v < floor {
            return Err(Error::ZeroEscape { re: z.re, im: z.im, modulus: v });
        }
        m = m.min(v);
        Ok(())
    };
    for i in 0..=nx {
        let x = x0 + (x1 - x0) * i as f64 / nx as f64;
        for j in 0..=ny {
            probe(Complex64::new(x, -s + 2.0 * s * j as f64 / ny as f64))?;
        }
    }
    // |Q| is smallest right at the excluded disks
    for p in &zeros.points {
        for radius in [eps, 1.25 * eps, 1.5 * eps, 2.0 * eps] {
            for k in 0..128 {
                let t = TWO_PI * k as f64 / 128.0;
                probe(p.location + Complex64::from_polar(radius, t))?;
            }
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LindelofRow {
    pub r: f64,
    /// `#{|a_n| ≤ r} / r`
    pub count_ratio: f64,
    /// `|Σ_{|a_n| ≤ r} 1/a_n|`
    pub reciprocal_sum: f64,
}

/// Both Lindelöf statistics on a radius grid. Diagnostic only.
pub fn lindelof_diag(zeros: &ZeroSet, r_grid: &[f64]) -> Result<Vec<LindelofRow>> {
    if zeros.points.iter().any(|p| p.location.norm() < 1e-12) {
        return Err(Error::ZeroAtOrigin);
    }
    Ok(r_grid
        .iter()
        .filter(|_| !zeros.is_empty())
        .map(|&r| {
            let (mut count, mut sum) = (0usize, Complex64::new(0.0, 0.0));
            for p in zeros.points.iter().filter(|p| p.location.norm() <= r) {
                count += p.multiplicity as usize;
                sum += p.multiplicity as f64 / p.location;
            }
            LindelofRow { r, count_ratio: count as f64 / r, reciprocal_sum: sum.norm() }
        })
        .collect())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PointRepr {
    re: f64,
    im: f64,
    mult: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PhiRepr {
    n: i64,
    re: f64,
    im: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ZeroSetRepr {
    #[serde(default = "schema_tag")]
    schema: String,
    window: Rect,
    points: Vec<PointRepr>,
    #[serde(default)]
    rho: Option<f64>,
    #[serde(default)]
    m_bound: Option<f64>,
    #[serde(default)]
    phi: Vec<PhiRepr>,
}

fn schema_tag() -> String {
    SCHEMA.to_string()
}

impl From<ZeroSet> for ZeroSetRepr {
    fn from(z: ZeroSet) -> Self {
        let (rho, m_bound, phi) = match z.numbering {
            Some(n) => (
                Some(n.rho),
                Some(n.m_bound),
                n.phi.iter().map(|(n, p)| PhiRepr { n: *n, re: p.re, im: p.im }).collect(),
            ),
            None => (None, None, Vec::new()),
        };
        ZeroSetRepr {
            schema: SCHEMA.to_string(),
            window: z.window,
            points: z
                .points
                .iter()
                .map(|p| PointRepr { re: p.location.re, im: p.location.im, mult: p.multiplicity })
                .collect(),
            rho,
            m_bound,
            phi,
        }
    }
}

impl TryFrom<ZeroSetRepr> for ZeroSet {
    type Error = Error;
    fn try_from(r: ZeroSetRepr) -> Result<Self> {
        if r.schema != SCHEMA {
            return Err(Error::InvalidInput(format!("unsupported schema {:?}", r.schema)));
        }
        let points = r
            .points
            .iter()
            .map(|p| ZeroPoint { location: Complex64::new(p.re, p.im), multiplicity: p.mult })
            .collect();
        let mut z = ZeroSet::new(points, r.window)?;
        if let Some(rho) = r.rho {
            let phi: Vec<(i64, Complex64)> = r.phi.iter().map(|p| (p.n, Complex64::new(p.re, p.im))).collect();
            if phi.windows(2).any(|w| w[1].0 != w[0].0 + 1) {
                return Err(Error::InvalidInput("phi table indices must be consecutive".into()));
            }
            let m_bound = r.m_bound.unwrap_or_else(|| phi.iter().map(|p| p.1.norm()).fold(0.0, f64::max));
            z.numbering = Some(Numbering { rho, m_bound, phi });
        }
        Ok(z)
    }
}
