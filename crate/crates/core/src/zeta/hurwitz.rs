//! Hurwitz zeta `ζ(s, a)` by Euler–Maclaurin summation with a rigorous
//! remainder bound, and the Dirichlet-series helpers built on it.

use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::expansion::{bernoulli_table, factorial, rational_to_f64, UNIT_ROUNDOFF as U};
use num_rational::BigRational;

const MAX_TERMS: usize = 120;

/// `B_{2j} / (2j)!` for `j = 0..MAX_TERMS`.
fn bernoulli_ratios() -> &'static [f64] {
    static CELL: OnceLock<Vec<f64>> = OnceLock::new();
    CELL.get_or_init(|| {
        let b = bernoulli_table(2 * MAX_TERMS + 1);
        (0..=MAX_TERMS)
            .map(|j| rational_to_f64(&(b[2 * j].clone() / BigRational::from_integer(factorial(2 * j as u64)))))
            .collect()
    })
}

/// `ζ(s, a) = Σ_{k≥0} (a+k)^{-s}` for `a > 0`, `s ≠ 1`, with an absolute error bound.
pub fn hurwitz(s: Complex64, a: f64, eps: f64) -> Result<(Complex64, f64)> {
    if s == Complex64::new(1.0, 0.0) {
        return Err(Error::PoleProximity { s: "1".into(), pole: 1, distance: 0.0 });
    }
    if !(a > 0.0) {
        return Err(Error::InvalidParameter(format!("Hurwitz parameter must be positive, got {a}")));
    }
    let sigma = s.re;
    let ratios = bernoulli_ratios();
    let mut n = (s.norm().ceil() as usize + 10).max(16);
    loop {
        let x = a + n as f64;
        let mut sum = Complex64::new(0.0, 0.0);
        let mut abs = 0.0;
        for k in 0..n {
            let term = (-s * (a + k as f64).ln()).exp();
            sum += term;
            abs += term.norm();
        }
        let xs = (-s * x.ln()).exp();
        let head = x * xs / (s - 1.0) + 0.5 * xs;
        sum += head;
        abs += head.norm();
        // Rising factorial (s)_{2j-1} and x^{-s-2j+1}.
        let mut rising = s;
        let mut xpow = xs / x;
        let mut best = f64::INFINITY;
        let mut total = sum;
        for (j, &ratio) in ratios.iter().enumerate().take(MAX_TERMS).skip(1) {
            let term = ratio * rising * xpow;
            let next_rising = rising * (s + (2 * j - 1) as f64);
            // |R_j| ≤ 4 |(s)_{2j}| / (2π)^{2j} · x^{1-σ-2j} / (σ+2j-1)
            let denom = sigma + (2 * j) as f64 - 1.0;
            let bound = if denom > 0.0 {
                4.0 * next_rising.norm() / (2.0 * PI).powi(2 * j as i32) * x.powf(1.0 - sigma - 2.0 * j as f64) / denom
            } else {
                f64::INFINITY
            };
            total += term;
            abs += term.norm();
            if bound < best {
                best = bound;
            }
            if bound <= eps * 0.5 {
                let err = bound + 4.0 * U * abs + 8.0 * (n as f64) * U * U * abs;
                return Ok((total, err));
            }
            if bound > 2.0 * best {
                break;
            }
            rising = next_rising * (s + (2 * j) as f64);
            xpow /= x * x;
        }
        if n > 1 << 20 {
            return Err(Error::Budget { budget: n as u64, achieved: best });
        }
        n *= 2;
    }
}

/// Riemann `ζ(s)`.
pub fn riemann(s: Complex64, eps: f64) -> Result<(Complex64, f64)> {
    hurwitz(s, 1.0, eps)
}

/// Dirichlet `β(s) = Σ_{n≥0} (-1)^n (2n+1)^{-s} = 4^{-s}(ζ(s,1/4) - ζ(s,3/4))`.
pub fn dirichlet_beta(s: Complex64, eps: f64) -> Result<(Complex64, f64)> {
    let f = (-s * 4f64.ln()).exp();
    let scale = f.norm().max(1e-300);
    let (a, ea) = hurwitz(s, 0.25, eps / (2.0 * scale))?;
    let (b, eb) = hurwitz(s, 0.75, eps / (2.0 * scale))?;
    let v = f * (a - b);
    Ok((v, scale * (ea + eb) + 4.0 * U * v.norm() + 2.0 * U * scale * (a.norm() + b.norm())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn riemann_special_values() {
        let (z2, e2) = riemann(r(2.0), 1e-14).unwrap();
        assert!((z2.re - PI * PI / 6.0).abs() < 1e-14 && e2 < 1e-13);
        let (z0, _) = riemann(r(0.0), 1e-14).unwrap();
        assert!((z0.re + 0.5).abs() < 1e-14);
        let (zm1, _) = riemann(r(-1.0), 1e-14).unwrap();
        assert!((zm1.re + 1.0 / 12.0).abs() < 1e-14);
        let (zh, _) = riemann(r(0.5), 1e-14).unwrap();
        assert!((zh.re + 1.460_354_508_809_586_8).abs() < 1e-13);
    }

    #[test]
    fn beta_values() {
        let (b3, _) = dirichlet_beta(r(3.0), 1e-14).unwrap();
        assert!((b3.re - PI.powi(3) / 32.0).abs() < 1e-13);
        // Catalan's constant
        let (b2, _) = dirichlet_beta(r(2.0), 1e-14).unwrap();
        assert!((b2.re - 0.915_965_594_177_219).abs() < 1e-13);
    }
}
