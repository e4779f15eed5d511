//! Absolutely convergent exponential sums `Q(x) = Σ q_ω e^{2πiωx}` with exact
//! real frequencies.
//!
//! An [`ExpSum`] stores a finite list of `(frequency, coefficient)` terms sorted
//! by frequency, together with the modulus of everything that was dropped on
//! the way (`discarded_norm`). That number is a bound, in Wiener norm
//! `‖Q‖_W = Σ|q_ω|` on the real line, for the distance between the stored sum
//! and the exact object the computation was approximating. Every operation
//! propagates it, so [`ExpSum::eval_error_bound`] can certify point values.
//!
//! Frequencies closer than `merge_tol` are merged (coefficients summed, the
//! smallest frequency of the run kept). Coefficients with modulus at most
//! `drop_tol` are dropped and their modulus is added to `discarded_norm`.

use std::f64::consts::PI;
use std::ops::{Add, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::SCHEMA;

pub const DEFAULT_MERGE_TOL: f64 = 1e-9;
pub const DEFAULT_DROP_TOL: f64 = 0.0;
/// Hard cap on stored terms; sumsets grow exponentially with series degree.
pub const TERM_CAP: usize = 10_000_000;

const TWO_PI: f64 = 2.0 * PI;

/// One term `coef · e^{2πi·freq·z}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub freq: f64,
    pub coef: Complex64,
}

impl Term {
    pub fn new(freq: f64, coef: Complex64) -> Self {
        Term { freq, coef }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ExpSumRepr", try_from = "ExpSumRepr")]
pub struct ExpSum {
    terms: Vec<Term>,
    merge_tol: f64,
    drop_tol: f64,
    discarded_norm: f64,
}

impl Default for ExpSum {
    fn default() -> Self {
        ExpSum::zero()
    }
}

impl ExpSum {
    /// Builds a sum with the default tolerances.
    pub fn new<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (f64, Complex64)>,
    {
        Self::with_tolerances(terms, DEFAULT_MERGE_TOL, DEFAULT_DROP_TOL)
            .expect("term list within cap")
    }

    pub fn with_tolerances<I>(terms: I, merge_tol: f64, drop_tol: f64) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, Complex64)>,
    {
        if !(merge_tol >= 0.0 && drop_tol >= 0.0) {
            return Err(Error::InvalidInput(
                "merge_tol and drop_tol must be non-negative".into(),
            ));
        }
        let raw: Vec<Term> = terms.into_iter().map(|(f, c)| Term::new(f, c)).collect();
        if raw.iter().any(|t| !t.freq.is_finite() || !t.coef.re.is_finite() || !t.coef.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite frequency or coefficient".into()));
        }
        Self::normalized(raw, merge_tol, drop_tol, 0.0)
    }

    pub fn zero() -> Self {
        ExpSum {
            terms: Vec::new(),
            merge_tol: DEFAULT_MERGE_TOL,
            drop_tol: DEFAULT_DROP_TOL,
            discarded_norm: 0.0,
        }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new([(0.0, c)])
    }

    pub fn monomial(freq: f64, coef: Complex64) -> Self {
        Self::new([(freq, coef)])
    }

    /// Same terms, new tolerances; terms are re-merged and re-dropped.
    pub fn retol(&self, merge_tol: f64, drop_tol: f64) -> Result<Self> {
        Self::normalized(self.terms.clone(), merge_tol, drop_tol, self.discarded_norm)
    }

    pub fn with_discarded_norm(mut self, discarded: f64) -> Self {
        self.discarded_norm = self.discarded_norm.max(discarded);
        self
    }

    fn normalized(mut raw: Vec<Term>, merge_tol: f64, drop_tol: f64, discarded: f64) -> Result<Self> {
        raw.sort_by(|a, b| a.freq.total_cmp(&b.freq));
        let mut merged: Vec<Term> = Vec::with_capacity(raw.len());
        let mut last_freq = f64::NEG_INFINITY;
        for t in raw {
            match merged.last_mut() {
                Some(prev) if t.freq - last_freq <= merge_tol => prev.coef += t.coef,
                _ => merged.push(t),
            }
            last_freq = t.freq;
        }
        let mut dropped = 0.0;
        merged.retain(|t| {
            let m = t.coef.norm();
            if m <= drop_tol {
                dropped += m;
                false
            } else {
                true
            }
        });
        if merged.len() > TERM_CAP {
            return Err(Error::CapExceeded { terms: merged.len(), cap: TERM_CAP });
        }
        Ok(ExpSum { terms: merged, merge_tol, drop_tol, discarded_norm: discarded + dropped })
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn merge_tol(&self) -> f64 {
        self.merge_tol
    }

    pub fn drop_tol(&self) -> f64 {
        self.drop_tol
    }

    pub fn discarded_norm(&self) -> f64 {
        self.discarded_norm
    }

    /// Wiener norm `Σ|q_ω|` of the stored terms.
    pub fn norm(&self) -> f64 {
        self.terms.iter().map(|t| t.coef.norm()).sum()
    }

    pub fn spectrum(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.freq).collect()
    }

    pub fn min_freq(&self) -> Option<f64> {
        self.terms.first().map(|t| t.freq)
    }

    pub fn max_freq(&self) -> Option<f64> {
        self.terms.last().map(|t| t.freq)
    }

    pub fn max_abs_freq(&self) -> f64 {
        match (self.min_freq(), self.max_freq()) {
            (Some(a), Some(b)) => a.abs().max(b.abs()),
            _ => 0.0,
        }
    }

    /// Coefficient stored within `merge_tol` of `freq`, if any.
    pub fn coefficient_at(&self, freq: f64) -> Option<Complex64> {
        let i = self.terms.partition_point(|t| t.freq < freq - self.merge_tol);
        self.terms
            .get(i)
            .filter(|t| (t.freq - freq).abs() <= self.merge_tol)
            .map(|t| t.coef)
    }

    /// Wiener norm of `x ↦ Q(x + iy)`, i.e. `Σ|q_ω| e^{-2πωy}`.
    pub fn norm_on_line(&self, y: f64) -> f64 {
        self.terms.iter().map(|t| t.coef.norm() * (-TWO_PI * t.freq * y).exp()).sum()
    }

    /// Upper bound for `|Q'(z)|` over the band `y_lo ≤ Im z ≤ y_hi`.
    pub fn derivative_bound(&self, y_lo: f64, y_hi: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let damp = (-TWO_PI * t.freq * y_lo).max(-TWO_PI * t.freq * y_hi).exp();
                TWO_PI * t.freq.abs() * t.coef.norm() * damp
            })
            .sum()
    }

    /// Largest factor `e^{-2πωy}` over the frequency hull of the stored terms.
    fn hull_growth(&self, y: f64) -> f64 {
        match (self.min_freq(), self.max_freq()) {
            (Some(a), Some(b)) => (-TWO_PI * a * y).max(-TWO_PI * b * y).max(0.0).exp(),
            _ => 1.0,
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.terms.iter().map(|t| t.coef * expi(t.freq, z)).sum()
    }

    /// `(Q(z), Q'(z))` in one pass.
    pub fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut v = Complex64::new(0.0, 0.0);
        let mut d = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            let e = t.coef * expi(t.freq, z);
            v += e;
            d += e * Complex64::new(0.0, TWO_PI * t.freq);
        }
        (v, d)
    }

    /// Certified bound on `|eval(z) − exact(z)|` from the discarded mass.
    pub fn eval_error_bound(&self, z: Complex64) -> f64 {
        self.discarded_norm * (TWO_PI * self.max_abs_freq() * z.im.abs()).exp()
    }

    pub fn scale(&self, c: Complex64) -> ExpSum {
        let raw = self.terms.iter().map(|t| Term::new(t.freq, t.coef * c)).collect();
        Self::normalized(raw, self.merge_tol, self.drop_tol, self.discarded_norm * c.norm().max(1.0))
            .expect("scaling does not add terms")
    }

    /// Multiplies by `e^{2πi·shift·z}`: every frequency moves by `shift`.
    pub fn translate_frequencies(&self, shift: f64) -> ExpSum {
        let terms = self.terms.iter().map(|t| Term::new(t.freq + shift, t.coef)).collect();
        ExpSum { terms, ..self.clone() }
    }

    /// `z ↦ Q(−z)`: frequencies change sign.
    pub fn reflect(&self) -> ExpSum {
        let terms = self.terms.iter().rev().map(|t| Term::new(-t.freq, t.coef)).collect();
        ExpSum { terms, ..self.clone() }
    }

    pub fn add(&self, other: &ExpSum) -> ExpSum {
        let raw = self.terms.iter().chain(other.terms.iter()).copied().collect();
        Self::normalized(
            raw,
            self.merge_tol.max(other.merge_tol),
            self.drop_tol.max(other.drop_tol),
            self.discarded_norm + other.discarded_norm,
        )
        .expect("sum of two capped sums stays manageable")
    }

    pub fn sub(&self, other: &ExpSum) -> ExpSum {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> ExpSum {
        let terms = self.terms.iter().map(|t| Term::new(t.freq, -t.coef)).collect();
        ExpSum { terms, ..self.clone() }
    }

    /// Pointwise product; the spectrum lands in the sumset of both spectra.
    pub fn mul(&self, other: &ExpSum) -> Result<ExpSum> {
        let pairs = self.terms.len().saturating_mul(other.terms.len());
        if pairs > 4 * TERM_CAP {
            return Err(Error::CapExceeded { terms: pairs, cap: TERM_CAP });
        }
        let mut raw = Vec::with_capacity(pairs);
        for a in &self.terms {
            for b in &other.terms {
                raw.push(Term::new(a.freq + b.freq, a.coef * b.coef));
            }
        }
        let (dp, dq) = (self.discarded_norm, other.discarded_norm);
        let propagated = dp * other.norm() + dq * self.norm() + dp * dq;
        Self::normalized(
            raw,
            self.merge_tol.max(other.merge_tol),
            self.drop_tol.max(other.drop_tol),
            propagated.max(dp).max(dq),
        )
    }

    /// Restriction to the line `Im z = y`: `q_ω ↦ q_ω e^{-2πωy}`.
    pub fn shift_line(&self, y: f64) -> Result<ExpSum> {
        let mut raw = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let c = t.coef * (-TWO_PI * t.freq * y).exp();
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::Overflow { y });
            }
            raw.push(Term::new(t.freq, c));
        }
        let carried = self.discarded_norm * self.hull_growth(y);
        if !carried.is_finite() {
            return Err(Error::Overflow { y });
        }
        Self::normalized(raw, self.merge_tol, self.drop_tol, carried.max(self.discarded_norm))
    }

    pub fn derivative(&self) -> ExpSum {
        let raw = self
            .terms
            .iter()
            .map(|t| Term::new(t.freq, t.coef * Complex64::new(0.0, TWO_PI * t.freq)))
            .collect();
        let carried = self.discarded_norm * (TWO_PI * self.max_abs_freq()).max(1.0);
        Self::normalized(raw, self.merge_tol, self.drop_tol, carried).expect("no new terms")
    }

    /// Drops every coefficient with modulus at most `threshold`, accounting for it.
    pub fn drop_below(&self, threshold: f64) -> ExpSum {
        Self::normalized(self.terms.clone(), self.merge_tol, self.drop_tol.max(threshold), self.discarded_norm)
            .expect("no new terms")
    }

    /// Keeps only frequencies satisfying `keep`; the rest count as discarded.
    pub fn retain_frequencies(&self, keep: impl Fn(f64) -> bool) -> ExpSum {
        let mut discarded = self.discarded_norm;
        let terms = self
            .terms
            .iter()
            .filter(|t| {
                let k = keep(t.freq);
                if !k {
                    discarded += t.coef.norm();
                }
                k
            })
            .copied()
            .collect();
        ExpSum { terms, discarded_norm: discarded, ..self.clone() }
    }

    /// `log(1 + P)` by the Mercator series, truncated once the remainder
    /// bound `Σ_{n>N} ‖P‖ⁿ/n` drops below `tail_tol`.
    pub fn log1p(&self, tail_tol: f64) -> Result<ExpSum> {
        let r = self.norm();
        if r >= 1.0 {
            return Err(Error::NormTooLarge { norm: r });
        }
        let (order, tail) = mercator_order(r, tail_tol);
        let mut acc = ExpSum { terms: Vec::new(), ..self.clone() };
        acc.discarded_norm = 0.0;
        let mut power = self.clone();
        for n in 1..=order {
            if n > 1 {
                power = power.mul(self)?;
            }
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
            acc = acc.add(&power.scale_real(sign / n as f64));
        }
        let r_eff = r + self.discarded_norm;
        let input_err = if r_eff < 1.0 { self.discarded_norm / (1.0 - r_eff) } else { f64::INFINITY };
        let d = acc.discarded_norm.max(input_err) + tail;
        Ok(acc.with_discarded_norm(d))
    }

    /// Number of Mercator terms [`ExpSum::log1p`] uses for this norm and tolerance.
    pub fn log1p_order(&self, tail_tol: f64) -> usize {
        mercator_order(self.norm(), tail_tol).0
    }

    /// `exp(P)`: the constant term is factored out exactly, the rest goes
    /// through a Taylor series truncated by `Σ_{n>K} rⁿ/n! ≤ tail_tol`.
    pub fn exp(&self, tail_tol: f64) -> Result<ExpSum> {
        let c0 = self.coefficient_at(0.0).unwrap_or_default();
        let rest = self.retain_frequencies(|f| f.abs() > self.merge_tol);
        let rest = ExpSum { discarded_norm: self.discarded_norm, ..rest };
        let scale = c0.exp();
        let r = rest.norm();
        let rel_tol = tail_tol / scale.norm().max(f64::MIN_POSITIVE);
        let (order, tail) = taylor_order(r, rel_tol);
        let mut acc = ExpSum::constant(Complex64::new(1.0, 0.0));
        acc.merge_tol = self.merge_tol;
        acc.drop_tol = self.drop_tol;
        let mut term = acc.clone();
        for k in 1..=order {
            term = term.mul(&rest)?.scale_real(1.0 / k as f64);
            acc = acc.add(&term);
        }
        let d = ((acc.discarded_norm + tail) * scale.norm()).max(self.discarded_norm);
        let raw = acc.terms.iter().map(|t| Term::new(t.freq, t.coef * scale)).collect();
        Self::normalized(raw, acc.merge_tol, acc.drop_tol, d)
    }

    /// `1/(1 + P)` by the geometric series; needs `‖P‖_W < 1`.
    pub fn inv1p(&self, tail_tol: f64) -> Result<ExpSum> {
        let r = self.norm();
        if r >= 1.0 {
            return Err(Error::NormTooLarge { norm: r });
        }
        let mut order = 0usize;
        while r.powi(order as i32 + 1) / (1.0 - r) > tail_tol {
            order += 1;
        }
        let mut acc = ExpSum::constant(Complex64::new(1.0, 0.0));
        acc.merge_tol = self.merge_tol;
        acc.drop_tol = self.drop_tol;
        let minus = self.neg();
        let mut power = acc.clone();
        for _ in 0..order {
            power = power.mul(&minus)?;
            acc = acc.add(&power);
        }
        let tail = r.powi(order as i32 + 1) / (1.0 - r);
        let d = acc.discarded_norm + tail;
        Ok(acc.with_discarded_norm(d))
    }

    fn scale_real(&self, s: f64) -> ExpSum {
        let terms = self.terms.iter().map(|t| Term::new(t.freq, t.coef * s)).collect();
        let d = self.discarded_norm * s.abs().max(1.0);
        ExpSum { terms, discarded_norm: d, ..self.clone() }
    }
}

/// `e^{2πi·freq·z}`.
#[inline]
pub(crate) fn expi(freq: f64, z: Complex64) -> Complex64 {
    let a = TWO_PI * freq;
    Complex64::from_polar((-a * z.im).exp(), a * z.re)
}

fn mercator_order(r: f64, tail_tol: f64) -> (usize, f64) {
    if r == 0.0 {
        return (0, 0.0);
    }
    let bound = |n: usize| r.powi(n as i32 + 1) / ((n as f64 + 1.0) * (1.0 - r));
    let mut n = 1;
    while bound(n) > tail_tol {
        n += 1;
    }
    (n, bound(n))
}

fn taylor_order(r: f64, tail_tol: f64) -> (usize, f64) {
    if r == 0.0 {
        return (0, 0.0);
    }
    // r^{K+1}/(K+1)! · 1/(1 − r/(K+2)), valid once K+2 > r
    let mut k = 0usize;
    let mut next = r; // r^{k+1}/(k+1)!
    loop {
        let ratio = r / (k as f64 + 2.0);
        if ratio < 1.0 {
            let bound = next / (1.0 - ratio);
            if bound <= tail_tol {
                return (k, bound);
            }
        }
        k += 1;
        next *= r / (k as f64 + 1.0);
    }
}

impl Add for &ExpSum {
    type Output = ExpSum;
    fn add(self, rhs: &ExpSum) -> ExpSum {
        ExpSum::add(self, rhs)
    }
}

impl Sub for &ExpSum {
    type Output = ExpSum;
    fn sub(self, rhs: &ExpSum) -> ExpSum {
        ExpSum::sub(self, rhs)
    }
}

impl Neg for &ExpSum {
    type Output = ExpSum;
    fn neg(self) -> ExpSum {
        ExpSum::neg(self)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermRepr {
    pub freq: f64,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpSumRepr {
    #[serde(default = "schema_tag")]
    pub schema: String,
    pub terms: Vec<TermRepr>,
    #[serde(default = "default_merge_tol")]
    pub merge_tol: f64,
    #[serde(default)]
    pub drop_tol: f64,
    #[serde(default)]
    pub discarded_norm: f64,
}

fn schema_tag() -> String {
    SCHEMA.to_string()
}

fn default_merge_tol() -> f64 {
    DEFAULT_MERGE_TOL
}

impl From<ExpSum> for ExpSumRepr {
    fn from(s: ExpSum) -> Self {
        ExpSumRepr {
            schema: SCHEMA.to_string(),
            terms: s
                .terms
                .iter()
                .map(|t| TermRepr { freq: t.freq, re: t.coef.re, im: t.coef.im })
                .collect(),
            merge_tol: s.merge_tol,
            drop_tol: s.drop_tol,
            discarded_norm: s.discarded_norm,
        }
    }
}

impl TryFrom<ExpSumRepr> for ExpSum {
    type Error = Error;
    fn try_from(r: ExpSumRepr) -> Result<Self> {
        if r.schema != SCHEMA {
            return Err(Error::InvalidInput(format!("unsupported schema {:?}", r.schema)));
        }
        if !(r.discarded_norm >= 0.0) {
            return Err(Error::InvalidInput("discarded_norm must be non-negative".into()));
        }
        let s = ExpSum::with_tolerances(
            r.terms.into_iter().map(|t| (t.freq, Complex64::new(t.re, t.im))),
            r.merge_tol,
            r.drop_tol,
        )?;
        Ok(s.with_discarded_norm(r.discarded_norm))
    }
}
