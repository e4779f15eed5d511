//! Inverse direction: from atom data back to an exponential sum whose zeros
//! are the prescribed set.
//!
//! On a line `Im z = y₀` above the growth threshold the logarithm of the
//! target function is `−Σ_{γ>0} (b_γ/γ) e^{−2πγy₀} e^{2πiγx}` up to a linear
//! phase and a constant. Exponentiating in the Wiener algebra gives
//! `g(x) = f(x + iy₀) e^{iπb₀x}`, and moving each term of `g` back to the
//! plane turns frequency `ω` into `ω − b₀/2` with weight `e^{π(2ω−b₀)y₀}`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{neig_diverges, AtomMeasure};
use crate::strip_zeros::{find_zeros, Rect, ZeroSet};
use crate::wiener::ExpSum;
use crate::SCHEMA;

const TWO_PI: f64 = 2.0 * PI;
/// Frequencies beyond `SPECTRUM_GUARD·κ` mean the reconstruction went wrong.
pub const SPECTRUM_GUARD: f64 = 10.0;
const ZERO_MATCH_TOL: f64 = 1e-6;

/// Checks the growth and small-`γ` conditions needed on the line `y0`.
fn check_line(atoms: &AtomMeasure, y0: f64) -> Result<()> {
    let threshold = atoms.growth_rate() / TWO_PI;
    if !(y0 > threshold) {
        return Err(Error::LineTooLow { y: y0, threshold });
    }
    let smallest = atoms.entries.iter().filter(|a| a.gamma > 0.0).map(|a| a.gamma).fold(1.0, f64::min);
    if smallest < 1.0 {
        let levels = (-smallest.log2() + 1e-12).floor() as i32;
        let partial: Vec<f64> = (1..=levels.max(1))
            .map(|k| {
                let lo = 0.5f64.powi(k);
                atoms
                    .entries
                    .iter()
                    .filter(|a| a.gamma >= lo && a.gamma < 1.0)
                    .map(|a| (a.b / a.gamma).norm())
                    .sum()
            })
            .collect();
        if neig_diverges(&partial) {
            return Err(Error::NeigDiverges { partial: *partial.last().expect("non-empty") });
        }
    }
    Ok(())
}

/// `−Σ_{γ>0} (b_γ/γ) e^{−2πγy₀} e^{2πiγx}` with no constant term.
pub fn log_series(atoms: &AtomMeasure, y0: f64) -> Result<ExpSum> {
    check_line(atoms, y0)?;
    Ok(ExpSum::new(
        atoms
            .entries
            .iter()
            .filter(|a| a.gamma > 0.0)
            .map(|a| (a.gamma, -a.b / a.gamma * (-TWO_PI * a.gamma * y0).exp())),
    ))
}

/// Mass of the top quarter of the computed log series; a stand-in for what
/// lies beyond the atoms' complete range when terms decay geometrically.
fn log_tail_estimate(log: &ExpSum) -> f64 {
    let Some(top) = log.max_freq() else { return 0.0 };
    log.terms().iter().filter(|t| t.freq >= 0.75 * top).map(|t| t.coef.norm()).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "RecRepr", try_from = "RecRepr")]
pub struct ReconstructionResult {
    /// `f(z) = Σ c_ν e^{2πiνz}`, normalized to `f(0) = 1`.
    pub series: ExpSum,
    pub y0: f64,
    pub log_series: ExpSum,
    /// Factor divided out to reach `f(0) = 1`.
    pub normalization: Complex64,
    pub b0: f64,
    pub kappa: f64,
    /// Recentring of the series the atoms came from.
    pub center_shift: f64,
    pub tail_estimate: f64,
}

impl ReconstructionResult {
    /// Phase `θ = πb₀ − 2πκ` relating the centred input to the output.
    pub fn phase(&self) -> f64 {
        PI * self.b0 - TWO_PI * self.kappa
    }
}

/// Exponential sum with the zero set encoded by `atoms`.
///
/// With `y0 = None` the line starts at `L/2π + 0.25` and doubles until the
/// log-series tail estimate meets `tail_tol`.
pub fn from_atoms(atoms: &AtomMeasure, y0: Option<f64>, tail_tol: f64) -> Result<ReconstructionResult> {
    if !(tail_tol > 0.0) {
        return Err(Error::InvalidInput("tail_tol must be positive".into()));
    }
    let (y0, log) = match y0 {
        Some(y) => (y, log_series(atoms, y)?),
        None => {
            let mut y = atoms.growth_rate().max(0.0) / TWO_PI + 0.25;
            loop {
                let log = log_series(atoms, y)?;
                if log_tail_estimate(&log) <= tail_tol || y > 64.0 {
                    break (y, log);
                }
                y *= 2.0;
            }
        }
    };
    let tail_estimate = log_tail_estimate(&log);
    let b0 = atoms.b0();
    // fine drop inside exp; coarse drop before re-weighting by e^{2πωy₀},
    // which would otherwise blow rounding noise at high ω back up
    let fine = log.retol(log.merge_tol(), tail_tol * 1e-3)?;
    let g = fine.exp(tail_tol)?.drop_below(tail_tol / 2.0);
    let bound = SPECTRUM_GUARD * atoms.kappa.max(b0 / 2.0).max(f64::MIN_POSITIVE);
    let mut terms = Vec::with_capacity(g.len());
    for t in g.terms() {
        let nu = t.freq - b0 / 2.0;
        if nu.abs() > bound {
            return Err(Error::SpectrumUnbounded { freq: nu, bound });
        }
        terms.push((nu, t.coef * (PI * (2.0 * t.freq - b0) * y0).exp()));
    }
    let raw = ExpSum::with_tolerances(terms, g.merge_tol(), 0.0)?;
    let normalization = raw.eval(Complex64::new(0.0, 0.0));
    if normalization.norm() == 0.0 {
        return Err(Error::ZeroAtOrigin);
    }
    let series = raw.scale(normalization.inv());
    Ok(ReconstructionResult {
        series,
        y0,
        log_series: log,
        normalization,
        b0,
        kappa: atoms.kappa,
        center_shift: atoms.center_shift,
        tail_estimate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProductValue {
    pub value: Complex64,
    /// Estimated `|f(z) − value|` from the omitted symmetric pairs.
    pub tail_estimate: f64,
    pub extent: i64,
}

/// `(1 − z/a₀)·Π_{n=1..N} (1 − z/a_n)(1 − z/a_{−n})` over the numbered window.
pub fn canonical_product(zeros: &ZeroSet, z: Complex64) -> Result<ProductValue> {
    let num = zeros.numbering()?;
    if zeros.points.iter().any(|p| p.location.norm() < 1e-9) {
        return Err(Error::ZeroAtOrigin);
    }
    let n_max = num.symmetric_extent();
    let one = Complex64::new(1.0, 0.0);
    let mut value = one - z / num.point(0).expect("index 0");
    let mut s_sum = Complex64::new(0.0, 0.0);
    for n in 1..=n_max {
        let (a, b) = (num.point(n).expect("in range"), num.point(-n).expect("in range"));
        value *= (one - z / a) * (one - z / b);
        s_sum += num.phi(n).expect("in range") + num.phi(-n).expect("in range");
    }
    // log of the omitted pairs ≈ (z·s̄ − z²)/(ρ²N)
    let s_bar = if n_max > 0 { s_sum / n_max as f64 } else { s_sum };
    let log_tail = (z * s_bar - z * z) / (num.rho * num.rho * n_max.max(1) as f64);
    let tail_estimate = value.norm() * (log_tail.exp() - one).norm();
    Ok(ProductValue { value, tail_estimate, extent: n_max })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundtripReport {
    pub zero_count: usize,
    /// Largest distance between matched zeros.
    pub zero_distance: f64,
    pub ratio_mean: [f64; 2],
    /// `max |r − mean r| / |mean r|` over the grid.
    pub ratio_deviation: f64,
    /// Phase `θ + 2π·center_shift` used in the ratio.
    pub phase: f64,
    /// Slope of `log r` across the grid; zero when the phase is right.
    pub measured_d: [f64; 2],
    pub grid_points: usize,
}

/// Compares `Q` with a reconstruction: equal zeros in `rect` and a constant
/// ratio `Q(z) / (f(z) e^{i(θ + 2πc)z})`.
pub fn verify_roundtrip(q: &ExpSum, rec: &ReconstructionResult, rect: &Rect) -> Result<RoundtripReport> {
    let (zq, zf) = rayon::join(|| find_zeros(q, rect, 1e-12), || find_zeros(&rec.series, rect, 1e-12));
    let (zq, zf) = (zq?, zf?);
    let core = Rect {
        x_min: zq.window.x_min.max(zf.window.x_min),
        x_max: zq.window.x_max.min(zf.window.x_max),
        y_min: zq.window.y_min.max(zf.window.y_min),
        y_max: zq.window.y_max.min(zf.window.y_max),
    };
    let a: Vec<_> = zq.points.iter().filter(|p| core.contains(p.location)).collect();
    let b: Vec<_> = zf.points.iter().filter(|p| core.contains(p.location)).collect();
    if a.len() != b.len() {
        return Err(Error::ZeroMismatch { detail: format!("{} zeros of Q against {} of the reconstruction", a.len(), b.len()) });
    }
    let mut zero_distance: f64 = 0.0;
    let mut used = vec![false; b.len()];
    for p in &a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, x)| (j, (x.location - p.location).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("equal counts");
        if d > ZERO_MATCH_TOL || b[j].multiplicity != p.multiplicity {
            return Err(Error::ZeroMismatch {
                detail: format!("zero {} (multiplicity {}) has no partner within {ZERO_MATCH_TOL}", p.location, p.multiplicity),
            });
        }
        used[j] = true;
        zero_distance = zero_distance.max(d);
    }
    let phase = rec.phase() + TWO_PI * rec.center_shift;
    let all_zeros: Vec<_> = zq.points.iter().map(|p| p.location).collect();
    let grid: Vec<Complex64> = (0..20)
        .flat_map(|i| {
            (0..20).map(move |j| {
                Complex64::new(
                    rect.x_min + rect.width() * (i as f64 + 0.5) / 20.0,
                    rect.y_min + rect.height() * (j as f64 + 0.5) / 20.0,
                )
            })
        })
        .filter(|z| all_zeros.iter().all(|a| (a - z).norm() >= 0.1))
        .collect();
    if grid.is_empty() {
        return Err(Error::InvalidInput("no grid point is 0.1 away from the zeros".into()));
    }
    let ratios: Vec<Complex64> = grid
        .par_iter()
        .map(|&z| q.eval(z) / (rec.series.eval(z) * (Complex64::i() * phase * z).exp()))
        .collect();
    let mean = ratios.iter().sum::<Complex64>() / ratios.len() as f64;
    let ratio_deviation = ratios.iter().map(|r| (r - mean).norm()).fold(0.0, f64::max) / mean.norm();
    let (first, last) = (grid[0], grid[grid.len() - 1]);
    let d = (ratios[ratios.len() - 1] / ratios[0]).ln() / (last - first);
    Ok(RoundtripReport {
        zero_count: a.iter().map(|p| p.multiplicity as usize).sum(),
        zero_distance,
        ratio_mean: [mean.re, mean.im],
        ratio_deviation,
        phase,
        measured_d: [d.re, d.im],
        grid_points: grid.len(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RecRepr {
    #[serde(default = "schema_tag")]
    schema: String,
    series: ExpSum,
    y0: f64,
    b0: f64,
    kappa: f64,
    #[serde(default)]
    center_shift: f64,
    normalization: [f64; 2],
    log_series: ExpSum,
    #[serde(default)]
    tail_estimate: f64,
}

fn schema_tag() -> String {
    SCHEMA.to_string()
}

impl From<ReconstructionResult> for RecRepr {
    fn from(r: ReconstructionResult) -> Self {
        RecRepr {
            schema: SCHEMA.to_string(),
            series: r.series,
            y0: r.y0,
            b0: r.b0,
            kappa: r.kappa,
            center_shift: r.center_shift,
            normalization: [r.normalization.re, r.normalization.im],
            log_series: r.log_series,
            tail_estimate: r.tail_estimate,
        }
    }
}

impl TryFrom<RecRepr> for ReconstructionResult {
    type Error = Error;
    fn try_from(r: RecRepr) -> Result<Self> {
        if r.schema != SCHEMA {
            return Err(Error::InvalidInput(format!("unsupported schema {:?}", r.schema)));
        }
        Ok(ReconstructionResult {
            series: r.series,
            y0: r.y0,
            log_series: r.log_series,
            normalization: Complex64::new(r.normalization[0], r.normalization[1]),
            b0: r.b0,
            kappa: r.kappa,
            center_shift: r.center_shift,
            tail_estimate: r.tail_estimate,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use crate::spectral::atoms;
    use crate::strip_zeros::enumerate;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn cos_atoms(k_max: i32) -> AtomMeasure {
        AtomMeasure::from_entries((-k_max..=k_max).map(|k| (k as f64, c(if k % 2 == 0 { 1.0 } else { -1.0 }, 0.0))))
            .unwrap()
    }

    #[test]
    fn log_series_cos() {
        let a = cos_atoms(40);
        let l = log_series(&a, 0.5).unwrap();
        assert!(l.coefficient_at(0.0).is_none());
        for k in 1..=40 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let want = -sign * (-PI * k as f64).exp() / k as f64;
            let got = l.coefficient_at(k as f64).unwrap();
            assert!((got.re - want).abs() <= 1e-15 * want.abs() && got.im == 0.0);
        }
        let twice = log_series(&a, 1.0).unwrap();
        for k in 1..=5 {
            let r = twice.coefficient_at(k as f64).unwrap() / l.coefficient_at(k as f64).unwrap();
            assert!((r.re - (-PI * k as f64).exp()).abs() < 1e-15);
        }
        let only_zero = AtomMeasure::from_entries([(0.0, c(1.0, 0.0))]).unwrap();
        assert!(log_series(&only_zero, 0.5).unwrap().is_empty());
    }

    #[test]
    fn log_series_rejects_low_line() {
        let a = atoms(&presets::cos3(), 1e-10).unwrap();
        assert!(matches!(log_series(&a, 0.1), Err(Error::LineTooLow { .. })));
    }

    #[test]
    fn log_series_detects_small_gamma_divergence() {
        let a = AtomMeasure::from_entries((1..=4096).map(|k| (1.0 / k as f64, c(1.0 / k as f64, 0.0)))).unwrap();
        assert!(matches!(log_series(&a, 0.5), Err(Error::NeigDiverges { .. })));
    }

    #[test]
    fn cos_from_atoms() {
        let rec = from_atoms(&cos_atoms(40), Some(0.5), 1e-12).unwrap();
        assert_eq!(rec.series.len(), 2);
        assert!((rec.series.eval(c(0.0, 0.0)) - 1.0).norm() < 1e-12);
        assert!(rec.series.eval(c(0.5, 0.0)).norm() < 1e-8);
        for z in [c(0.3, 0.2), c(-1.1, 0.7)] {
            let want = (PI * z).cos();
            assert!((rec.series.eval(z) - want).norm() < 1e-10 * want.norm().max(1.0));
        }
    }

    #[test]
    fn exp_of_log_matches_pointwise() {
        let a = atoms(&presets::cos3(), 1e-10).unwrap();
        let l = log_series(&a, 0.4).unwrap();
        let g = l.exp(1e-12).unwrap();
        for k in 0..50 {
            let x = Complex64::new(-3.0 + 6.0 * k as f64 / 49.0, 0.0);
            let lhs = g.eval(x);
            let rhs = l.eval(x).exp();
            assert!((lhs - rhs).norm() <= 10.0 * (1e-12 + g.discarded_norm()) * rhs.norm().max(1.0));
        }
    }

    #[test]
    fn cos3_reconstruction_is_finite_and_matches() {
        let q = presets::cos3();
        let a = atoms(&q, 1e-10).unwrap();
        let rec = from_atoms(&a, None, 1e-10).unwrap();
        assert!(rec.series.terms().iter().filter(|t| t.coef.norm() > 1e-9).count() <= 25);
        let r = verify_roundtrip(&q, &rec, &Rect::new(-2.0, 2.3, -1.0, 1.0).unwrap()).unwrap();
        assert!(r.zero_distance < 1e-6 && r.ratio_deviation < 1e-5, "{r:?}");
        assert!((r.ratio_mean[0] - 5.0).abs() < 1e-6);
    }

    #[test]
    fn y0_independence() {
        let a = atoms(&presets::cos3(), 1e-10).unwrap();
        let r1 = from_atoms(&a, Some(0.4), 1e-10).unwrap();
        let r2 = from_atoms(&a, Some(0.65), 1e-10).unwrap();
        let rect = Rect::new(-1.9, 2.2, -0.5, 0.5).unwrap();
        let z1 = find_zeros(&r1.series, &rect, 1e-12).unwrap().expanded();
        let z2 = find_zeros(&r2.series, &rect, 1e-12).unwrap().expanded();
        assert_eq!(z1.len(), z2.len());
        assert!(z1.iter().zip(&z2).all(|(a, b)| (a - b).norm() < 1e-6));
    }

    #[test]
    fn roundtrip_examples() {
        let q = presets::cosine();
        let a = atoms(&q, 1e-10).unwrap();
        let rec = from_atoms(&a, None, 1e-10).unwrap();
        let rect = Rect::new(-3.0, 3.0, -1.0, 1.0).unwrap();
        let r = verify_roundtrip(&q, &rec, &rect).unwrap();
        assert!(r.ratio_deviation < 1e-5, "{r:?}");
        let five = q.scale(c(5.0, 0.0));
        let r5 = verify_roundtrip(&five, &rec, &rect).unwrap();
        assert!((r5.ratio_mean[0] - 5.0 * r.ratio_mean[0]).abs() < 1e-9);
        let shifted = q.translate_frequencies(1.0);
        let a2 = atoms(&shifted, 1e-10).unwrap();
        let rec2 = from_atoms(&a2, None, 1e-10).unwrap();
        let r2 = verify_roundtrip(&shifted, &rec2, &rect).unwrap();
        assert!(r2.ratio_deviation < 1e-5 && r2.zero_count == r.zero_count);
        // different zeros are caught
        let wrong = from_atoms(&atoms(&presets::cos3(), 1e-10).unwrap(), None, 1e-10).unwrap();
        assert!(matches!(verify_roundtrip(&q, &wrong, &rect), Err(Error::ZeroMismatch { .. })));
    }

    #[test]
    fn canonical_product_cos() {
        let w = Rect::new(-2000.0, 2001.0, -1.0, 1.0).unwrap();
        let zeros = ZeroSet::from_locations((-2000..=2000).map(|k| c(k as f64 + 0.5, 0.0)), w).unwrap();
        let zeros = enumerate(&zeros).unwrap();
        assert_eq!(canonical_product(&zeros, c(0.0, 0.0)).unwrap().value, c(1.0, 0.0));
        assert_eq!(canonical_product(&zeros, c(0.5, 0.0)).unwrap().value.norm(), 0.0);
        let p = canonical_product(&zeros, c(1.0, 0.0)).unwrap();
        assert!((p.value + 1.0).norm() <= 2.0 * p.tail_estimate + 1e-12, "{p:?}");
        assert!(p.tail_estimate < 1.5e-3);
        let unnumbered = ZeroSet::from_locations([c(0.5, 0.0)], w).unwrap();
        assert!(matches!(canonical_product(&unnumbered, c(1.0, 0.0)), Err(Error::NotNumbered)));
    }

    #[test]
    fn canonical_product_shares_zeros_with_series() {
        let q = presets::cos3();
        let a = atoms(&q, 1e-10).unwrap();
        let rec = from_atoms(&a, None, 1e-10).unwrap();
        let zeros = enumerate(&find_zeros(&q, &Rect::new(-300.0, 301.0, -1.0, 1.0).unwrap(), 1e-12).unwrap()).unwrap();
        for z in [c(0.5, presets::cos3_zero_height()), c(-1.5, -presets::cos3_zero_height())] {
            assert!(rec.series.eval(z).norm() < 1e-8);
            assert!(canonical_product(&zeros, z).unwrap().value.norm() < 1e-8);
        }
        for z in [c(0.2, 0.1), c(1.1, -0.3)] {
            let p = canonical_product(&zeros, z).unwrap();
            let f = rec.series.eval(z);
            assert!((p.value - f).norm() < 10.0 * p.tail_estimate + 1e-6, "{} vs {}", p.value, f);
        }
    }

    #[test]
    fn reconstruction_json_round_trip() {
        let rec = from_atoms(&cos_atoms(30), Some(0.5), 1e-12).unwrap();
        let s = serde_json::to_string(&rec).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["b0"], 1.0);
        assert!(v["series"]["terms"].is_array());
        let back: ReconstructionResult = serde_json::from_str(&s).unwrap();
        assert_eq!(back, rec);
    }
}
