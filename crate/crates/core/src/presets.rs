//! Closed-form exponential sums used throughout the tests and the CLI.

use num_complex::Complex64;

use crate::wiener::ExpSum;

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `e^{πiz} − e^{−πiz} = 2i sin(πz)`: zeros at the integers.
pub fn sine() -> ExpSum {
    ExpSum::new([(-0.5, re(-1.0)), (0.5, re(1.0))])
}

/// `e^{πiz} + e^{−πiz} = 2cos(πz)`: zeros at `ℤ + ½`.
pub fn cosine() -> ExpSum {
    ExpSum::new([(-0.5, re(1.0)), (0.5, re(1.0))])
}

/// `2cos(2πz) + 3`: zeros at `k + ½ ± i·arccosh(3/2)/(2π)`.
pub fn cos3() -> ExpSum {
    ExpSum::new([(-1.0, re(1.0)), (0.0, re(3.0)), (1.0, re(1.0))])
}

/// `e^{πiz} − e^{−πiz} + 0.3·e^{πi√2 z}`: incommensurable frequencies.
pub fn threefreq() -> ExpSum {
    ExpSum::new([(-0.5, re(-1.0)), (0.5, re(1.0)), (std::f64::consts::SQRT_2 / 2.0, re(0.3))])
}

/// Imaginary part of the zeros of [`cos3`].
pub fn cos3_zero_height() -> f64 {
    1.5f64.acosh() / (2.0 * std::f64::consts::PI)
}

pub fn by_name(name: &str) -> Option<ExpSum> {
    match name {
        "sin" => Some(sine()),
        "cos" => Some(cosine()),
        "cos3" => Some(cos3()),
        "threefreq" => Some(threefreq()),
        _ => None,
    }
}

pub const NAMES: [&str; 4] = ["sin", "cos", "cos3", "threefreq"];
