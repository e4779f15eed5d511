//! Atoms `Σ b_γ δ_γ` of the c-Fourier transform of the zero-counting measure
//! of an exponential sum.
//!
//! After recentring the spectrum to `[−κ, κ]` the sum factors on the upper
//! side as `Q(z) = q_{−κ} e^{−2πiκz}(1 + P(z))` with `spec P ⊂ (0, 2κ]`. On a
//! line `Im z = s` where `‖P‖_W ≤ 2/3` the logarithm `log(1 + P)` is a Wiener
//! series `Σ p_γ e^{2πiγz}` and the atoms for `γ > 0` are
//! `b_γ = −γ p_γ e^{2πγs}`. Negative `γ` come from the same computation on
//! `Q(−z)`, whose zeros are the reflected set. The atom at the origin is
//! `b_0 = 2κ`, the density of zeros.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cfourier::{pair_zeros, TestFunction};
use crate::error::{Error, Result};
use crate::strip_zeros::{strip_bound, ZeroSet};
use crate::wiener::ExpSum;
use crate::SCHEMA;

const TWO_PI: f64 = 2.0 * PI;
/// Target Wiener norm of `P` on the chosen line.
pub const LINE_NORM: f64 = 2.0 / 3.0;
const LINE_RESOLUTION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub gamma: f64,
    pub b: Complex64,
}

/// Pure point measure `Σ b_γ δ_γ` with bookkeeping on how it was computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "AtomRepr", try_from = "AtomRepr")]
pub struct AtomMeasure {
    /// Strictly increasing in `gamma`.
    pub entries: Vec<Atom>,
    pub kappa: f64,
    pub s_upper: f64,
    pub s_lower: f64,
    pub tail_tol: f64,
    /// Frequency recentring applied to the input series.
    pub center_shift: f64,
    /// Wiener-norm mass discarded by the logarithmic series on either line.
    pub discarded: f64,
    /// Every atom with `gamma` in `[complete_lower, complete_upper]` is present.
    pub complete_lower: f64,
    pub complete_upper: f64,
}

impl AtomMeasure {
    /// Measure from explicit atoms; the completeness range is their hull and
    /// `kappa` is half the atom at the origin.
    pub fn from_entries(entries: impl IntoIterator<Item = (f64, Complex64)>) -> Result<Self> {
        let mut entries: Vec<Atom> = entries.into_iter().map(|(gamma, b)| Atom { gamma, b }).collect();
        entries.sort_by(|a, b| a.gamma.total_cmp(&b.gamma));
        if entries.windows(2).any(|w| w[1].gamma <= w[0].gamma) {
            return Err(Error::InvalidInput("atom positions must be distinct".into()));
        }
        if entries.iter().any(|a| !a.gamma.is_finite() || !a.b.re.is_finite() || !a.b.im.is_finite()) {
            return Err(Error::InvalidInput("atoms must be finite".into()));
        }
        let kappa = entries.iter().find(|a| a.gamma == 0.0).map_or(0.0, |a| a.b.re / 2.0);
        let (lo, hi) = match (entries.first(), entries.last()) {
            (Some(a), Some(b)) => (a.gamma, b.gamma),
            _ => (0.0, 0.0),
        };
        Ok(AtomMeasure {
            entries,
            kappa,
            s_upper: 0.0,
            s_lower: 0.0,
            tail_tol: 0.0,
            center_shift: 0.0,
            discarded: 0.0,
            complete_lower: lo,
            complete_upper: hi,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `b_γ` for the atom within `tol` of `gamma`.
    pub fn b_at(&self, gamma: f64, tol: f64) -> Option<Complex64> {
        let i = self.entries.partition_point(|a| a.gamma < gamma - tol);
        self.entries.get(i).filter(|a| (a.gamma - gamma).abs() <= tol).map(|a| a.b)
    }

    pub fn b0(&self) -> f64 {
        self.b_at(0.0, 0.0).map_or(0.0, |b| b.re)
    }

    /// `Σ_{|γ| < r} |b_γ|`.
    pub fn variation_within(&self, r: f64) -> f64 {
        self.entries.iter().filter(|a| a.gamma.abs() < r).map(|a| a.b.norm()).sum()
    }

    /// Atoms whose position satisfies `keep`, completeness range unchanged.
    pub fn filtered(&self, keep: impl Fn(f64) -> bool) -> AtomMeasure {
        AtomMeasure { entries: self.entries.iter().filter(|a| keep(a.gamma)).copied().collect(), ..self.clone() }
    }

    /// Radius of the symmetric range where atoms are complete.
    pub fn complete_radius(&self) -> f64 {
        self.complete_upper.min(-self.complete_lower).max(0.0)
    }

    /// Fitted `L` in `log Σ_{|γ|<r}|b_γ| ≈ L·r` over the complete range.
    pub fn growth_rate(&self) -> f64 {
        let r_max = self.complete_radius();
        let steps = 64;
        let grid: Vec<f64> = (1..=steps).map(|k| r_max * k as f64 / steps as f64).collect();
        let sums: Vec<f64> = grid.iter().map(|&r| self.variation_within(r)).collect();
        log_slope(&grid, &sums)
    }

    /// CSV with columns `gamma,re,im`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("gamma,re,im\n");
        for a in &self.entries {
            s.push_str(&format!("{},{},{}\n", a.gamma, a.b.re, a.b.im));
        }
        s
    }
}

/// Least-squares slope of `ln v` against `r` over the upper half of the grid
/// (entries with `v > 0` only); 0 when fewer than two usable points.
pub(crate) fn log_slope(r: &[f64], v: &[f64]) -> f64 {
    let start = r.len() / 2;
    let pts: Vec<(f64, f64)> =
        r[start..].iter().zip(&v[start..]).filter(|p| *p.1 > 0.0).map(|(r, v)| (*r, v.ln())).collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx > 0.0 {
        sxy / sxx
    } else {
        0.0
    }
}

/// `Q` split as `q_{−κ} e^{−2πiκz}(1 + P)` after recentring.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub kappa: f64,
    pub q_minus_kappa: Complex64,
    pub p: ExpSum,
    pub center_shift: f64,
    /// `Q` with spectrum recentred to `[−κ, κ]`.
    pub centered: ExpSum,
}

pub fn normalize(q: &ExpSum) -> Result<Normalized> {
    strip_bound(q)?;
    let (lo, hi) = (q.min_freq().expect("non-empty"), q.max_freq().expect("non-empty"));
    let kappa = (hi - lo) / 2.0;
    if kappa <= q.merge_tol() {
        return Err(Error::DegenerateSpectrum);
    }
    let center_shift = (lo + hi) / 2.0;
    let centered = q.translate_frequencies(-center_shift);
    let (q_minus_kappa, p) = factor_lower_endpoint(&centered);
    Ok(Normalized { kappa, q_minus_kappa, p, center_shift, centered })
}

/// `(q_{ω_min}, P)` with `Q = q_{ω_min} e^{2πiω_min z}(1 + P)`.
fn factor_lower_endpoint(q: &ExpSum) -> (Complex64, ExpSum) {
    let first = q.terms()[0];
    let tol = q.merge_tol();
    let p = q
        .translate_frequencies(-first.freq)
        .scale(first.coef.inv())
        .retain_frequencies(|f| f > tol);
    // the constant term is exactly 1 by construction and carries no loss
    let p = ExpSum::with_tolerances(p.terms().iter().map(|t| (t.freq, t.coef)), q.merge_tol(), q.drop_tol())
        .expect("fewer terms than the input")
        .with_discarded_norm(q.discarded_norm() / first.coef.norm());
    (first.coef, p)
}

/// Smallest `s` on a grid of step 1e-6 with `‖P(· + is)‖_W ≤ 2/3`.
pub fn choose_line(p: &ExpSum) -> Result<f64> {
    if p.min_freq().is_some_and(|f| f <= 0.0) {
        return Err(Error::InvalidInput("choose_line needs a spectrum inside (0, ∞)".into()));
    }
    if p.norm() <= LINE_NORM {
        return Ok(0.0);
    }
    let mut hi = LINE_RESOLUTION;
    while p.norm_on_line(hi) > LINE_NORM {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    while hi - lo > LINE_RESOLUTION {
        let mid = 0.5 * (lo + hi);
        if p.norm_on_line(mid) <= LINE_NORM {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

struct Side {
    atoms: Vec<Atom>,
    line: f64,
    cutoff: f64,
    discarded: f64,
}

/// Atoms at `γ > 0` from the factorisation at the lower spectrum endpoint.
fn positive_side(centered: &ExpSum, tail_tol: f64, line: Option<f64>) -> Result<Side> {
    let (_, p) = factor_lower_endpoint(centered);
    let s = match line {
        Some(s) => s,
        None => choose_line(&p)?,
    };
    let ps = p.shift_line(s)?;
    let log_tol = tail_tol / 2.0;
    let log = ps.log1p(log_tol)?;
    let order = ps.log1p_order(log_tol);
    // powers of P beyond the truncation only reach frequencies ≥ (N+1)·min spec P
    let cutoff = (order as f64 + 1.0) * p.min_freq().unwrap_or(f64::INFINITY) * (1.0 - 1e-12);
    let atoms = log
        .terms()
        .iter()
        .filter(|t| t.freq < cutoff)
        .map(|t| Atom { gamma: t.freq, b: -t.coef * t.freq * (TWO_PI * t.freq * s).exp() })
        .collect();
    Ok(Side { atoms, line: s, cutoff, discarded: log.discarded_norm() })
}

/// Atom measure of the zero set of `q`.
pub fn atoms(q: &ExpSum, tail_tol: f64) -> Result<AtomMeasure> {
    atoms_on_lines(q, tail_tol, None, None)
}

/// As [`atoms`], with explicit lines for the upper and lower factorisations.
pub fn atoms_on_lines(
    q: &ExpSum,
    tail_tol: f64,
    s_upper: Option<f64>,
    s_lower: Option<f64>,
) -> Result<AtomMeasure> {
    if !(tail_tol > 0.0) {
        return Err(Error::InvalidInput("tail_tol must be positive".into()));
    }
    let n = normalize(q)?;
    let (up, down) = rayon::join(
        || positive_side(&n.centered, tail_tol, s_upper),
        || positive_side(&n.centered.reflect(), tail_tol, s_lower),
    );
    let (up, down) = (up?, down?);
    let mut entries: Vec<Atom> = down.atoms.iter().rev().map(|a| Atom { gamma: -a.gamma, b: a.b }).collect();
    entries.push(Atom { gamma: 0.0, b: Complex64::new(2.0 * n.kappa, 0.0) });
    entries.extend(up.atoms.iter().copied());
    Ok(AtomMeasure {
        entries,
        kappa: n.kappa,
        s_upper: up.line,
        s_lower: down.line,
        tail_tol,
        center_shift: n.center_shift,
        discarded: up.discarded.max(down.discarded),
        complete_lower: -down.cutoff,
        complete_upper: up.cutoff,
    })
}

/// Outcome of [`verify_der`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerReport {
    pub max_rel_error: f64,
    /// Estimated relative error of the corrected partial-fraction sum.
    pub window_error: f64,
    /// Symmetric extent `N` of the numbered window.
    pub extent: i64,
    pub samples: Vec<DerSample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerSample {
    pub zeta: [f64; 2],
    pub partial_fractions: [f64; 2],
    pub atom_series: [f64; 2],
    pub rel_error: f64,
}

/// Compares the logarithmic derivative from the zeros,
/// `lim_N Σ_{|n|≤N} 1/(ζ − a_n)`, with the atom series
/// `−2πi Σ_{γ>0} b_γ e^{2πiγζ} − πi b_0`.
///
/// The partial-fraction sum is corrected for the omitted symmetric pairs:
/// `1/(ζ−a_n) + 1/(ζ−a_{−n}) ≈ −(2ζ − s)/(ρ²n²)` with `s` the mean of
/// `φ(n) + φ(−n)`.
pub fn verify_der(zeros: &ZeroSet, atoms: &AtomMeasure, zeta_samples: &[Complex64], tol: f64) -> Result<DerReport> {
    let num = zeros.numbering()?;
    let threshold = atoms.growth_rate() / TWO_PI;
    if let Some(z) = zeta_samples.iter().find(|z| z.im <= threshold) {
        return Err(Error::LineTooLow { y: z.im, threshold });
    }
    let n_max = num.symmetric_extent();
    if n_max < 10 {
        return Err(Error::WindowTooSmall { tail: f64::INFINITY, tol });
    }
    let rho = num.rho;
    let pair_sums: Vec<Complex64> =
        (1..=n_max).map(|n| num.phi(n).expect("in range") + num.phi(-n).expect("in range")).collect();
    let s_bar = pair_sums.iter().sum::<Complex64>() / n_max as f64;
    let s_spread = pair_sums[pair_sums.len() / 2..].iter().map(|s| (s - s_bar).norm()).fold(0.0, f64::max);
    let nf = n_max as f64;
    let inv_sq_tail = 1.0 / nf - 1.0 / (2.0 * nf * nf) + 1.0 / (6.0 * nf * nf * nf);
    let positive: Vec<_> = atoms.entries.iter().filter(|a| a.gamma > 0.0).collect();
    let b0 = atoms.b0();
    let mut samples = Vec::with_capacity(zeta_samples.len());
    let mut window_error: f64 = 0.0;
    for &zeta in zeta_samples {
        let mut lhs = 1.0 / (zeta - num.point(0).expect("index 0"));
        for n in 1..=n_max {
            lhs += 1.0 / (zeta - num.point(n).expect("in range")) + 1.0 / (zeta - num.point(-n).expect("in range"));
        }
        lhs -= (2.0 * zeta - s_bar) / (rho * rho) * inv_sq_tail;
        let mut rhs = Complex64::new(0.0, -PI * b0);
        for a in &positive {
            rhs += Complex64::new(0.0, -TWO_PI) * a.b * crate::wiener::expi(a.gamma, zeta);
        }
        let scale = rhs.norm().max(f64::MIN_POSITIVE);
        let m = num.m_bound;
        let est = (s_spread / (rho * rho * nf)
            + (2.0 * zeta.norm() + 2.0 * m) * (zeta.norm() + 2.0 * m) / (rho.powi(3) * nf * nf))
            / scale;
        window_error = window_error.max(est);
        let rel_error = (lhs - rhs).norm() / scale;
        samples.push(DerSample {
            zeta: [zeta.re, zeta.im],
            partial_fractions: [lhs.re, lhs.im],
            atom_series: [rhs.re, rhs.im],
            rel_error,
        });
    }
    if window_error > tol {
        return Err(Error::WindowTooSmall { tail: window_error, tol });
    }
    let max_rel_error = samples.iter().map(|s| s.rel_error).fold(0.0, f64::max);
    Ok(DerReport { max_rel_error, window_error, extent: n_max, samples })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualityReport {
    pub rel_error: f64,
    pub zeros_side: [f64; 2],
    pub atoms_side: [f64; 2],
    /// Bound on the contribution of zeros outside the window.
    pub zeros_tail: f64,
    /// Wiener mass discarded while computing the atoms.
    pub atoms_discarded: f64,
}

/// `|⟨μ_A, φ̂^c⟩ − Σ b_γ φ(γ)| / (1 + |Σ b_γ φ(γ)|)`.
pub fn verify_duality(zeros: &ZeroSet, atoms: &AtomMeasure, phi: &TestFunction, tol: f64) -> Result<DualityReport> {
    let (lo, hi) = phi.support();
    if !atoms.is_empty() && (lo < atoms.complete_lower || hi > atoms.complete_upper) {
        return Err(Error::WindowTooSmall { tail: f64::INFINITY, tol });
    }
    let z = pair_zeros(zeros, phi, tol)?;
    let a = crate::cfourier::pair_atoms(atoms, phi);
    Ok(DualityReport {
        rel_error: (z.value - a).norm() / (1.0 + a.norm()),
        zeros_side: [z.value.re, z.value.im],
        atoms_side: [a.re, a.im],
        zeros_tail: z.tail_bound,
        atoms_discarded: atoms.discarded,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionsReport {
    /// Fitted exponential rate of `Σ_{|γ|<r}|b_γ|`.
    pub growth_rate: f64,
    pub r_grid: Vec<f64>,
    pub variation: Vec<f64>,
    /// `Σ_{2^{−k} ≤ |γ| < 1} |b_γ/γ|` for `k = 1, 2, …`.
    pub small_gamma_sums: Vec<f64>,
    pub small_gamma_diverges: bool,
    /// Smallest distance between consecutive atom positions.
    pub min_gap: f64,
    /// Largest number of atoms in a unit interval.
    pub max_unit_count: usize,
}

pub fn check_conditions(atoms: &AtomMeasure, r_grid: &[f64]) -> ConditionsReport {
    let variation: Vec<f64> = r_grid.iter().map(|&r| atoms.variation_within(r)).collect();
    let growth_rate = log_slope(r_grid, &variation);
    let smallest = atoms.entries.iter().filter(|a| a.gamma != 0.0).map(|a| a.gamma.abs()).fold(1.0, f64::min);
    // only complete dyadic shells are summed
    let levels = if smallest < 1.0 { (-smallest.log2() + 1e-12).floor() as i32 } else { 1 };
    let small_gamma_sums: Vec<f64> = (1..=levels.max(1))
        .map(|k| {
            let lo = 0.5f64.powi(k);
            atoms
                .entries
                .iter()
                .filter(|a| a.gamma.abs() >= lo && a.gamma.abs() < 1.0)
                .map(|a| (a.b / a.gamma).norm())
                .sum()
        })
        .collect();
    let small_gamma_diverges = neig_diverges(&small_gamma_sums);
    let gammas: Vec<f64> = atoms.entries.iter().map(|a| a.gamma).collect();
    let min_gap = gammas.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let mut max_unit_count = 0;
    for (i, g) in gammas.iter().enumerate() {
        let j = gammas.partition_point(|x| *x <= g + 1.0);
        max_unit_count = max_unit_count.max(j - i);
    }
    ConditionsReport {
        growth_rate,
        r_grid: r_grid.to_vec(),
        variation,
        small_gamma_sums,
        small_gamma_diverges,
        min_gap,
        max_unit_count,
    }
}

/// Dyadic increments that fail to shrink geometrically signal divergence.
pub(crate) fn neig_diverges(partial: &[f64]) -> bool {
    if partial.len() < 4 {
        return false;
    }
    let inc: Vec<f64> = partial.windows(2).map(|w| w[1] - w[0]).collect();
    let tail = &inc[inc.len() - 3..];
    tail.iter().all(|d| *d > 1e-12) && tail.windows(2).all(|w| w[1] >= 0.75 * w[0])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct AtomEntryRepr {
    gamma: f64,
    re: f64,
    im: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct AtomRepr {
    #[serde(default = "schema_tag")]
    schema: String,
    kappa: f64,
    entries: Vec<AtomEntryRepr>,
    #[serde(default)]
    center_shift: f64,
    #[serde(default)]
    tail_tol: f64,
    #[serde(default)]
    s_upper: f64,
    #[serde(default)]
    s_lower: f64,
    #[serde(default)]
    discarded: f64,
    #[serde(default)]
    complete_lower: Option<f64>,
    #[serde(default)]
    complete_upper: Option<f64>,
}

fn schema_tag() -> String {
    SCHEMA.to_string()
}

impl From<AtomMeasure> for AtomRepr {
    fn from(a: AtomMeasure) -> Self {
        AtomRepr {
            schema: SCHEMA.to_string(),
            kappa: a.kappa,
            entries: a.entries.iter().map(|e| AtomEntryRepr { gamma: e.gamma, re: e.b.re, im: e.b.im }).collect(),
            center_shift: a.center_shift,
            tail_tol: a.tail_tol,
            s_upper: a.s_upper,
            s_lower: a.s_lower,
            discarded: a.discarded,
            complete_lower: Some(a.complete_lower),
            complete_upper: Some(a.complete_upper),
        }
    }
}

impl TryFrom<AtomRepr> for AtomMeasure {
    type Error = Error;
    fn try_from(r: AtomRepr) -> Result<Self> {
        if r.schema != SCHEMA {
            return Err(Error::InvalidInput(format!("unsupported schema {:?}", r.schema)));
        }
        let mut a = AtomMeasure::from_entries(r.entries.iter().map(|e| (e.gamma, Complex64::new(e.re, e.im))))?;
        a.kappa = r.kappa;
        a.center_shift = r.center_shift;
        a.tail_tol = r.tail_tol;
        a.s_upper = r.s_upper;
        a.s_lower = r.s_lower;
        a.discarded = r.discarded;
        if let Some(lo) = r.complete_lower {
            a.complete_lower = lo;
        }
        if let Some(hi) = r.complete_upper {
            a.complete_upper = hi;
        }
        Ok(a)
    }
}
