//! Complex Gamma function (Lanczos, `g = 7`, nine terms) with reflection.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

const G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `sin(πz)` with the argument reduced by the nearest integer, so that it
/// stays accurate next to the zeros.
pub fn sin_pi(z: Complex64) -> Complex64 {
    let n = z.re.round();
    let w = Complex64::new(z.re - n, z.im) * PI;
    let s = w.sin();
    if n.rem_euclid(2.0) == 1.0 {
        -s
    } else {
        s
    }
}

/// `ln Γ(z)` for `Re z ≥ 1/2` (principal branch of the Lanczos form).
fn ln_gamma_right(z: Complex64) -> Complex64 {
    let z = z - 1.0;
    let mut x = Complex64::new(LANCZOS[0], 0.0);
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        x += *c / (z + i as f64);
    }
    let t = z + G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

/// `s` is a pole of Γ when it is a nonpositive integer.
pub fn gamma_pole(s: Complex64) -> Option<i64> {
    (s.im == 0.0 && s.re <= 0.0 && s.re == s.re.round()).then_some(s.re as i64)
}

pub fn gamma(s: Complex64) -> Result<Complex64> {
    if let Some(n) = gamma_pole(s) {
        return Err(Error::GammaPole(n));
    }
    if s.im == 0.0 && s.re == s.re.round() && s.re <= 171.0 {
        let mut f = 1.0;
        for k in 2..s.re as u64 {
            f *= k as f64;
        }
        return Ok(Complex64::new(f, 0.0));
    }
    if s.re < 0.5 {
        // Γ(s) Γ(1-s) = π / sin(πs)
        let g = ln_gamma_right(1.0 - s).exp();
        return Ok(PI / (sin_pi(s) * g));
    }
    Ok(ln_gamma_right(s).exp())
}

pub fn gamma_real(x: f64) -> Result<f64> {
    gamma(Complex64::new(x, 0.0)).map(|g| g.re)
}

/// `1/Γ(s)`, entire; zero at the poles of Γ.
pub fn rgamma(s: Complex64) -> Complex64 {
    match gamma(s) {
        Ok(g) => 1.0 / g,
        Err(_) => Complex64::new(0.0, 0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn integers_and_half() {
        assert_eq!(gamma(c(5.0, 0.0)).unwrap().re, 24.0);
        assert_eq!(gamma(c(1.0, 0.0)).unwrap().re, 1.0);
        assert!((gamma_real(0.5).unwrap() - PI.sqrt()).abs() < 1e-15);
        assert!((gamma_real(-0.5).unwrap() + 2.0 * PI.sqrt()).abs() < 1e-14);
        assert!(matches!(gamma(c(-3.0, 0.0)), Err(Error::GammaPole(-3))));
    }

    #[test]
    fn recurrence_on_the_strip() {
        for &(re, im) in &[(-7.3, 2.0), (0.25, -40.0), (3.5, 11.0), (15.2, 45.0), (-19.4, 0.7)] {
            let s = c(re, im);
            let lhs = gamma(s + 1.0).unwrap();
            let rhs = s * gamma(s).unwrap();
            assert!(((lhs - rhs) / lhs).norm() < 1e-12, "{s}");
        }
    }
}
