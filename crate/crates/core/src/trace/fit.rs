//! Numerical extraction of `a₀ … a_N` from heat-trace samples on a geometric grid.
//!
//! For each `r`, `z(t) = τ_p(t)/t^r = a₀t^{-r} + … + a_r + a_{r+1}t + …`.
//! Richardson elimination removes `t^{-r}, …, t^{-1}` and then `t, t², …`
//! column by column; the entry whose last step changed least (relative to
//! the propagated sample error, against both of its parents) is taken as
//! the estimate. Its uncertainty is an estimate too: a run of vanishing
//! coefficients stalls the columns and can make it optimistic.

use serde::Serialize;

use super::TraceSample;
use crate::error::{Error, Result};
use crate::expansion::{FloatCoeff, LaurentExpansion, Remainder, UNIT_ROUNDOFF};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FittedExpansion {
    pub expansion: LaurentExpansion,
    /// Powers `r` whose error estimate exceeds the requested tolerance.
    pub failures: Vec<i32>,
}

impl FittedExpansion {
    pub fn is_ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Fit `τ_p(t) = t^p · value(t)` through `t^order`. Samples may come in any order.
pub fn fit_expansion(samples: &[TraceSample], p: u32, order: u32, tol: f64) -> Result<FittedExpansion> {
    let mut s: Vec<&TraceSample> = samples.iter().collect();
    s.sort_by(|a, b| b.t.total_cmp(&a.t));
    if s.len() < 3 {
        return Err(Error::NonGeometricGrid(format!("need at least 3 samples, got {}", s.len())));
    }
    if order as usize + 2 > s.len() {
        return Err(Error::InvalidParameter(format!(
            "order {order} needs at least {} samples, got {}",
            order + 2,
            s.len()
        )));
    }
    if s.iter().any(|x| !(x.t > 0.0 && x.t.is_finite())) {
        return Err(Error::NonGeometricGrid("sample times must be positive and finite".into()));
    }
    let rho = s[1].t / s[0].t;
    for w in s.windows(2) {
        let r = w[1].t / w[0].t;
        if (r - rho).abs() > 1e-12 * rho || rho >= 1.0 {
            return Err(Error::NonGeometricGrid(format!("ratio {r} differs from {rho}")));
        }
    }
    let n = s.len();
    let mut coeffs = Vec::with_capacity(order as usize + 1);
    let mut failures = Vec::new();
    for r in 0..=order as i32 {
        let mut t_col: Vec<f64> = Vec::with_capacity(n);
        let mut e_col: Vec<f64> = Vec::with_capacity(n);
        for x in &s {
            let scale = x.t.powi(p as i32 - r);
            let z = x.value * scale;
            t_col.push(z);
            e_col.push(x.abs_error * scale + UNIT_ROUNDOFF * z.abs());
        }
        let mut best: Option<(f64, f64)> = None;
        for k in 1..n {
            // Exponent removed at step k: -r, …, -1, then 1, 2, ….
            let e = if k <= r as usize { k as i32 - 1 - r } else { k as i32 - r };
            let f = rho.powi(e);
            let d = 1.0 - f;
            let mut next_t = Vec::with_capacity(n - k);
            let mut next_e = Vec::with_capacity(n - k);
            for j in 1..t_col.len() {
                let v = (t_col[j] - f * t_col[j - 1]) / d;
                next_t.push(v);
                next_e.push((e_col[j] + f.abs() * e_col[j - 1]) / d.abs() + UNIT_ROUNDOFF * v.abs());
            }
            if k > r as usize {
                // Compare with both entries of the previous column it was built from.
                for (j, (&v, &ev)) in next_t.iter().zip(&next_e).enumerate() {
                    let score = ev + (v - t_col[j]).abs().max((v - t_col[j + 1]).abs());
                    if best.is_none_or(|(_, b)| score < b) {
                        best = Some((v, score));
                    }
                }
            }
            t_col = next_t;
            e_col = next_e;
        }
        let (value, err) = best.unwrap_or((f64::NAN, f64::INFINITY));
        if !(err <= tol) {
            failures.push(r);
        }
        coeffs.push(FloatCoeff::new(value, err));
    }
    Ok(FittedExpansion {
        expansion: LaurentExpansion::float(0, coeffs, Remainder::PowerLaw)?,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::KernelKind;

    fn synthetic(coeffs: &[f64], p: u32, n: usize) -> Vec<TraceSample> {
        (0..n)
            .map(|j| {
                let t = 0.25 * 0.5f64.powi(j as i32);
                let tau: f64 = coeffs.iter().enumerate().map(|(r, c)| c * t.powi(r as i32)).sum();
                TraceSample { t, value: tau / t.powi(p as i32), abs_error: 0.0, kernel: KernelKind::Exponential }
            })
            .collect()
    }

    #[test]
    fn recovers_polynomial() {
        let c = [2.0, -1.0, 0.5, 3.0, -7.0, 1.0];
        let f = fit_expansion(&synthetic(&c, 2, 12), 2, 3, 1e-7).unwrap();
        assert!(f.is_ok(), "{:?}", f.failures);
        for r in 0..=3 {
            assert!((f.expansion.coeff_f64(r).unwrap() - c[r as usize]).abs() < 1e-7, "r={r}");
        }
    }

    #[test]
    fn rejects_bad_grids() {
        let mut s = synthetic(&[1.0], 1, 6);
        s[3].t *= 1.01;
        assert!(matches!(fit_expansion(&s, 1, 2, 1e-6), Err(Error::NonGeometricGrid(_))));
        assert!(fit_expansion(&synthetic(&[1.0], 1, 4), 1, 3, 1e-6).is_err());
    }

    #[test]
    fn flags_unreachable_tolerance() {
        let f = fit_expansion(&synthetic(&[1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0], 0, 5), 0, 3, 1e-300).unwrap();
        assert!(!f.is_ok());
    }
}
