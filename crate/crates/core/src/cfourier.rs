//! Smooth compactly supported test functions, their Fourier transforms
//! extended to the complex plane, and the two pairings
//! `⟨μ_A, φ̂^c⟩ = Σ mult·φ̂^c(a_n)` and `Σ b_γ φ(γ)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::integrate;
use crate::spectral::{log_slope, AtomMeasure};
use crate::strip_zeros::ZeroSet;

const TWO_PI: f64 = 2.0 * PI;
/// `∫_{−1}^{1} exp(−1/(1−u²)) du`.
pub const STANDARD_BUMP_MASS: f64 = 0.443_993_816_168_079_4;
/// Largest `|Im z|` accepted by [`hat_c`]; `e^{2π|y||t|}` beyond this
/// swamps the quadrature at test scale.
pub const MAX_IM: f64 = 10.0;
const HAT_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BumpKind {
    StandardBump,
}

/// `φ(t) = exp(−1/(1−u²))` for `u = (t − center)/half_width`, `|u| < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub kind: BumpKind,
    pub center: f64,
    pub half_width: f64,
    /// Gauss–Legendre points per panel.
    #[serde(default = "default_order")]
    pub order: usize,
    /// Panel doublings allowed before giving up.
    #[serde(default = "default_levels")]
    pub levels: u32,
}

fn default_order() -> usize {
    24
}

fn default_levels() -> u32 {
    12
}

impl TestFunction {
    pub fn standard_bump(center: f64, half_width: f64) -> Result<Self> {
        let f = TestFunction {
            kind: BumpKind::StandardBump,
            center,
            half_width,
            order: default_order(),
            levels: default_levels(),
        };
        f.validate()?;
        Ok(f)
    }

    pub fn with_quadrature(self, order: usize, levels: u32) -> Result<Self> {
        let f = TestFunction { order, levels, ..self };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0 && self.half_width.is_finite() && self.center.is_finite()) {
            return Err(Error::InvalidInput("test function needs a finite center and half_width > 0".into()));
        }
        if self.order < 2 || self.levels > 24 {
            return Err(Error::InvalidInput("quadrature needs order >= 2 and at most 24 levels".into()));
        }
        Ok(())
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }

    pub fn eval(&self, t: f64) -> f64 {
        bump((t - self.center) / self.half_width)
    }

    /// `∫φ`, from the tabulated mass of the unit bump.
    pub fn integral(&self) -> f64 {
        STANDARD_BUMP_MASS * self.half_width
    }
}

fn bump(u: f64) -> f64 {
    let v = 1.0 - u * u;
    if v <= 0.0 {
        0.0
    } else {
        (-1.0 / v).exp()
    }
}

/// `φ̂^c(z) = ∫ φ(t) e^{−2πizt} dt`.
pub fn hat_c(phi: &TestFunction, z: Complex64) -> Result<Complex64> {
    if z.im.abs() > MAX_IM {
        return Err(Error::InvalidInput(format!("|Im z| = {} exceeds the guard {MAX_IM}", z.im.abs())));
    }
    let (c, h) = (phi.center, phi.half_width);
    // factor e^{−2πizc} out and integrate over the unit bump
    let f = |u: f64| {
        let w = bump(u);
        if w == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let a = -TWO_PI * h * u;
        Complex64::from_polar(w * (-a * z.im).exp(), a * z.re)
    };
    let r = integrate(f, -1.0, 1.0, phi.order, phi.levels, HAT_REL_TOL);
    if !r.converged {
        return Err(Error::QuadratureNotConverged { re: z.re, im: z.im, change: r.change });
    }
    Ok(r.value * h * crate::wiener::expi(-c, z))
}

/// `max |φ̂^c(z)|·max{1, |z|}^m` over the sample.
pub fn decay_check(phi: &TestFunction, m: i32, sample: &[Complex64]) -> Result<f64> {
    let vals: Vec<f64> = sample
        .par_iter()
        .map(|&z| hat_c(phi, z).map(|v| v.norm() * z.norm().max(1.0).powi(m)))
        .collect::<Result<_>>()?;
    Ok(vals.into_iter().fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Pairing {
    pub value: Complex64,
    /// Bound on `Σ |φ̂^c(a)|` over zeros outside the window.
    pub tail_bound: f64,
}

/// `Σ mult·φ̂^c(a)` over the zeros.
///
/// Zeros outside the window are bounded through `|φ̂^c(z)| ≤ C/|z|³`, with `C`
/// measured on `R ≤ |Re z| ≤ 4R` across the height of the known zeros, and at most `D`
/// zeros per unit length (`D` the window's unit-interval count):
/// `Σ_{|Re a| > R} |φ̂^c(a)| ≤ 2DC Σ_{k≥0} (R+k)^{−3} ≤ 2DC (R^{−3} + R^{−2}/2)`.
pub fn pair_zeros(zeros: &ZeroSet, phi: &TestFunction, tol: f64) -> Result<Pairing> {
    let terms: Vec<Complex64> = zeros
        .points
        .par_iter()
        .map(|p| hat_c(phi, p.location).map(|v| v * p.multiplicity as f64))
        .collect::<Result<_>>()?;
    let value = terms.iter().sum();
    let tail_bound = zeros_tail_bound(zeros, phi)?;
    if tail_bound > tol {
        return Err(Error::WindowTooSmall { tail: tail_bound, tol });
    }
    Ok(Pairing { value, tail_bound })
}

fn zeros_tail_bound(zeros: &ZeroSet, phi: &TestFunction) -> Result<f64> {
    let d = zeros.max_unit_count(0.5) as f64;
    if d == 0.0 {
        return Ok(0.0);
    }
    let w = zeros.window;
    let r = (-w.x_min).min(w.x_max);
    if r <= 1.0 {
        return Ok(f64::INFINITY);
    }
    // zeros outside the window share the strip of the known ones
    let height = zeros.points.iter().map(|p| p.location.im.abs()).fold(0.0, f64::max).min(MAX_IM);
    let mut sample = Vec::new();
    for k in 0..=32 {
        let x = r * (1.0 + 3.0 * k as f64 / 32.0);
        for y in [-height, 0.0, height] {
            if y == 0.0 && height > 0.0 {
                continue;
            }
            sample.push(Complex64::new(x, y));
            sample.push(Complex64::new(-x, y));
        }
    }
    let c = decay_check(phi, 3, &sample)?;
    Ok(2.0 * d * c * (r.powi(-3) + 0.5 * r.powi(-2)))
}

/// `Σ_{γ ∈ supp φ} b_γ φ(γ)`.
pub fn pair_atoms(atoms: &AtomMeasure, phi: &TestFunction) -> Complex64 {
    let (lo, hi) = phi.support();
    atoms.entries.iter().filter(|a| a.gamma > lo && a.gamma < hi).map(|a| a.b * phi.eval(a.gamma)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthDiagnostics {
    pub r_grid: Vec<f64>,
    /// Zeros (with multiplicity) with `|Re a| < r`.
    pub m_mu: Vec<f64>,
    /// `Σ_{|γ|<r} |b_γ|`.
    pub atom_variation: Vec<f64>,
    /// Least-squares `L` in `log Σ_{|γ|<r}|b_γ| ≈ L·r` over the upper half of the grid.
    pub fitted_l: f64,
}

pub fn growth(zeros: &ZeroSet, atoms: &AtomMeasure, r_grid: &[f64]) -> GrowthDiagnostics {
    let m_mu = r_grid.iter().map(|&r| zeros.count_re_within(r) as f64).collect();
    let atom_variation: Vec<f64> = r_grid.iter().map(|&r| atoms.variation_within(r)).collect();
    let fitted_l = log_slope(r_grid, &atom_variation);
    GrowthDiagnostics { r_grid: r_grid.to_vec(), m_mu, atom_variation, fitted_l }
}
