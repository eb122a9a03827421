//! Closed-form small-`t` expansions of `τ_p(t) = t^p Tr(b e^{-t|D|})` (and the
//! Gaussian analogue) for weights given by polynomials plus finite corrections.
//!
//! Exponential kernel: `Σ_{k≥1} k^j e^{-tk} = j!/t^{j+1} + Σ_m ζ(-j-m)(-t)^m/m!`,
//! convergent for `t < 2π`, so every coefficient is rational.
//!
//! Gaussian kernel: `Σ_{k≥1} k^j e^{-t²k²} ~ ½Γ((j+1)/2) t^{-j-1} + Σ_m ζ(-j-2m)(-1)^m t^{2m}/m!`,
//! where the series vanishes identically for even `j > 0` (and is `-1/2` for
//! `j = 0`), leaving a remainder beyond all orders. The `Γ` of half-integers
//! brings in `√π`, so these are returned in the float backend.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Zero};

use super::KernelKind;
use crate::error::{Error, Result};
use crate::expansion::{
    bernoulli_table, factorial, rational_to_f64, riemann_zeta_nonpositive, FloatCoeff, LaurentExpansion, Remainder,
    UNIT_ROUNDOFF,
};
use crate::spectrum::{isqrt, resolve_weights, LatticeWeights, LevelPoly, Observable, SpectralModel, Weights};

/// Exponential-kernel expansion of `τ_p` through `t^order`, `p` the pair dimension.
pub fn closed_form_expansion(model: &SpectralModel, obs: &Observable, order: i32) -> Result<LaurentExpansion> {
    closed_form_expansion_kernel(model, obs, KernelKind::Exponential, order)
}

pub fn closed_form_expansion_kernel(
    model: &SpectralModel,
    obs: &Observable,
    kernel: KernelKind,
    order: i32,
) -> Result<LaurentExpansion> {
    let p = model.pair_dimension(obs) as i32;
    let trace_order = order - p;
    let no_form = || Error::NoClosedForm {
        model: model.name().to_string(),
        observable: obs.to_string(),
        kernel: kernel.as_str(),
    };
    let trace = match (resolve_weights(model, obs)?, kernel) {
        (Weights::Integer(lp), KernelKind::Exponential) => integer_exponential(&lp, trace_order)?,
        (Weights::Integer(lp), KernelKind::Gaussian) => integer_gaussian(&lp, trace_order)?,
        (Weights::Lattice(lw), _) => lattice(&lw, kernel, trace_order).ok_or_else(no_form)??,
        (Weights::Table(rows), _) => table(&rows, kernel, trace_order)?,
    };
    Ok(trace.shift_power(p))
}

fn q(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Coefficients of `Σ_{k≥1} k^j e^{-tk}` as `(power, value)` pairs up to `t^order`.
fn polylog_terms(j: usize, order: i32, bern: &[BigRational]) -> Vec<(i32, BigRational)> {
    let mut out = vec![(-(j as i32) - 1, BigRational::from_integer(factorial(j as u64)))];
    let mut inv_fact = BigRational::one();
    for m in 0..=order.max(-1) {
        let m = m as usize;
        if m > 0 {
            inv_fact /= q(m as i64);
        }
        let z = riemann_zeta_nonpositive(j + m, bern);
        let sign = if m.is_odd() { -BigRational::one() } else { BigRational::one() };
        out.push((m as i32, z * sign * &inv_fact));
    }
    out
}

/// Power-series coefficients of `e^{-μ t}` (or of `e^{-μ t²}` when `squared`).
fn exp_terms(mu: &BigRational, order: i32, squared: bool) -> Vec<(i32, BigRational)> {
    let mut out = Vec::new();
    let mut c = BigRational::one();
    let step = if squared { 2 } else { 1 };
    let mut m = 0i32;
    while m * step <= order {
        out.push((m * step, c.clone()));
        c = c * (-mu) / q(m as i64 + 1);
        m += 1;
    }
    out
}

struct Acc {
    lo: i32,
    hi: i32,
    c: Vec<BigRational>,
}

impl Acc {
    fn new(lo: i32, hi: i32) -> Self {
        let lo = lo.min(hi);
        Self { lo, hi, c: vec![BigRational::zero(); (hi - lo + 1) as usize] }
    }

    fn add(&mut self, power: i32, v: BigRational) {
        if power >= self.lo && power <= self.hi {
            self.c[(power - self.lo) as usize] += v;
        }
    }

    fn finish(self, remainder: Remainder) -> Result<LaurentExpansion> {
        LaurentExpansion::exact(self.lo, self.c, remainder)
    }
}

fn integer_exponential(lp: &LevelPoly, order: i32) -> Result<LaurentExpansion> {
    let total = lp.total_poly();
    let deg = total.degree();
    let lo = deg.map_or(0, |d| -(d as i32) - 1);
    let mut acc = Acc::new(lo, order);
    let bern = bernoulli_table(deg.unwrap_or(0) + order.max(0) as usize + 3);
    for (j, pj) in total.coeffs().iter().enumerate() {
        if pj.is_zero() {
            continue;
        }
        if j == 0 {
            // Level k = 0 of the constant part.
            acc.add(0, pj.clone());
        }
        for (pow, v) in polylog_terms(j, order, &bern) {
            acc.add(pow, v * pj);
        }
    }
    for (k, (p, m)) in &lp.corr {
        let w = p + m;
        for (pow, v) in exp_terms(&q(*k as i64), order, false) {
            acc.add(pow, v * &w);
        }
    }
    acc.finish(Remainder::PowerLaw)
}

/// `Γ((j+1)/2)` as `(rational, has √π factor)`.
fn gamma_half_integer(j: usize) -> (BigRational, bool) {
    if j.is_multiple_of(2) {
        // Γ(n + 1/2) = (2n)! / (4^n n!) √π
        let n = (j / 2) as u64;
        let num = factorial(2 * n);
        let den = num_traits::pow(BigInt::from(4), n as usize) * factorial(n);
        (BigRational::new(num, den), true)
    } else {
        (BigRational::from_integer(factorial(((j - 1) / 2) as u64)), false)
    }
}

/// Float accumulator for expansions mixing rationals and `√π` multiples.
struct FloatAcc {
    lo: i32,
    hi: i32,
    c: Vec<FloatCoeff>,
}

impl FloatAcc {
    fn new(lo: i32, hi: i32) -> Self {
        let lo = lo.min(hi);
        Self { lo, hi, c: vec![FloatCoeff::exact(0.0); (hi - lo + 1) as usize] }
    }

    /// Add `r · (√π)^{[sqrt_pi]}`.
    fn add(&mut self, power: i32, r: &BigRational, sqrt_pi: bool) {
        if power < self.lo || power > self.hi || r.is_zero() {
            return;
        }
        let mut v = rational_to_f64(r);
        let mut rel = UNIT_ROUNDOFF;
        if sqrt_pi {
            v *= std::f64::consts::PI.sqrt();
            rel += 2.0 * UNIT_ROUNDOFF;
        }
        let slot = &mut self.c[(power - self.lo) as usize];
        let s = slot.value + v;
        slot.err += rel * v.abs() + UNIT_ROUNDOFF * s.abs();
        slot.value = s;
    }

    fn add_f64(&mut self, power: i32, v: f64, err: f64) {
        if power < self.lo || power > self.hi {
            return;
        }
        let slot = &mut self.c[(power - self.lo) as usize];
        let s = slot.value + v;
        slot.err += err + UNIT_ROUNDOFF * s.abs();
        slot.value = s;
    }

    fn finish(self, remainder: Remainder) -> Result<LaurentExpansion> {
        LaurentExpansion::float(self.lo, self.c, remainder)
    }
}

fn integer_gaussian(lp: &LevelPoly, order: i32) -> Result<LaurentExpansion> {
    let total = lp.total_poly();
    let deg = total.degree();
    let lo = deg.map_or(0, |d| -(d as i32) - 1);
    let mut acc = FloatAcc::new(lo, order);
    let bern = bernoulli_table(deg.unwrap_or(0) + 2 * order.max(0) as usize + 3);
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let mut beyond = true;
    for (j, pj) in total.coeffs().iter().enumerate() {
        if pj.is_zero() {
            continue;
        }
        if j == 0 {
            acc.add(0, pj, false);
        }
        let (g, sp) = gamma_half_integer(j);
        acc.add(-(j as i32) - 1, &(g * &half * pj), sp);
        if j % 2 == 1 {
            beyond = false;
        }
        let mut inv_fact = BigRational::one();
        let mut m = 0usize;
        while 2 * (m as i32) <= order {
            if m > 0 {
                inv_fact /= q(m as i64);
            }
            let z = riemann_zeta_nonpositive(j + 2 * m, &bern);
            let sign = if m.is_odd() { -BigRational::one() } else { BigRational::one() };
            acc.add(2 * m as i32, &(z * sign * &inv_fact * pj), false);
            m += 1;
        }
    }
    for (k, (p, m)) in &lp.corr {
        let w = p + m;
        if *k > 0 {
            beyond = false;
        }
        for (pow, v) in exp_terms(&q((*k * *k) as i64), order, true) {
            acc.add(pow, &(v * &w), false);
        }
    }
    let rem = if beyond { Remainder::BeyondAllOrders } else { Remainder::PowerLaw };
    acc.finish(rem)
}

/// Lattice closed forms: `None` when the pair has none.
fn lattice(lw: &LatticeWeights, kernel: KernelKind, order: i32) -> Option<Result<LaurentExpansion>> {
    let squared = kernel == KernelKind::Gaussian;
    let mut acc_terms: Vec<(i32, f64, f64)> = Vec::new();
    if let Some(pw) = lw.point {
        let odd = pw.a % 2 == 1 || pw.b % 2 == 1;
        if !odd {
            if !squared || pw.j % 2 == 1 {
                return None;
            }
            // Σ_{Z²} m^a n^b (m²+n²)^J e^{-t²(m²+n²)} factors into products of
            // one-dimensional theta moments, each Γ((e+1)/2) t^{-e-1} for even e.
            let half = pw.j / 2;
            let mut binom = BigInt::one();
            for i in 0..=half {
                let (ea, eb) = ((pw.a + 2 * i) as usize, (pw.b + 2 * (half - i)) as usize);
                let (ga, _) = gamma_half_integer(ea);
                let (gb, _) = gamma_half_integer(eb);
                let r = BigRational::from_integer(binom.clone()) * ga * gb;
                let v = pw.coef * rational_to_f64(&r) * std::f64::consts::PI;
                acc_terms.push((-((ea + eb) as i32) - 2, v, 4.0 * UNIT_ROUNDOFF * v.abs()));
                binom = binom * BigInt::from(half - i) / BigInt::from(i + 1);
            }
            if pw.a == 0 && pw.b == 0 && pw.j == 0 {
                acc_terms.push((0, -pw.coef, 0.0));
            }
        }
    }
    let lo = acc_terms.iter().map(|t| t.0).min().unwrap_or(0).min(0);
    let mut acc = FloatAcc::new(lo, order);
    for &(pow, v, e) in &acc_terms {
        acc.add_f64(pow, v, e);
    }
    let mut beyond = squared;
    let mut finite: Vec<(u64, f64)> = Vec::new();
    let origin = lw.origin.0 + lw.origin.1;
    if origin != 0.0 {
        finite.push((u64::from(lw.origin_moved), origin));
    }
    finite.extend(lw.shells.iter().map(|&(k, p, m)| (k, p + m)));
    for (shell, w) in finite {
        if shell != 0 {
            beyond = false;
        }
        let w = match BigRational::from_f64(w) {
            Some(w) => w,
            None => return Some(Err(Error::InvalidParameter("non-finite weight".into()))),
        };
        let root = isqrt(shell);
        if squared || root * root == shell {
            let mu = q(if squared { shell } else { root } as i64);
            for (pow, v) in exp_terms(&mu, order, squared) {
                acc.add(pow, &(v * &w), false);
            }
        } else {
            // e^{-t√k}: the m-th coefficient carries the rounding of (√k)^m.
            let mu = (shell as f64).sqrt();
            let wf = rational_to_f64(&w);
            let mut c = 1.0;
            for m in 0..=order.max(-1) {
                let v = wf * c;
                acc.add_f64(m, v, (2.0 * m as f64 + 3.0) * UNIT_ROUNDOFF * v.abs());
                c *= -mu / (m as f64 + 1.0);
            }
        }
    }
    let rem = if beyond { Remainder::BeyondAllOrders } else { Remainder::PowerLaw };
    Some(acc.finish(rem))
}

fn table(rows: &[(f64, f64, f64)], kernel: KernelKind, order: i32) -> Result<LaurentExpansion> {
    let mut acc = Acc::new(0, order.max(0));
    for &(v, p, m) in rows {
        let w = BigRational::from_f64(p + m).ok_or_else(|| Error::InvalidParameter("non-finite weight".into()))?;
        let v = BigRational::from_f64(v).ok_or_else(|| Error::InvalidParameter("non-finite level".into()))?;
        let (mu, squared) = match kernel {
            KernelKind::Exponential => (v, false),
            KernelKind::Gaussian => (&v * &v, true),
        };
        for (pow, c) in exp_terms(&mu, order, squared) {
            acc.add(pow, c * &w);
        }
    }
    acc.finish(Remainder::PowerLaw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::{rat, Coefficient};

    fn coeff(e: &LaurentExpansion, p: i32) -> BigRational {
        match e.coeff(p).unwrap() {
            Coefficient::Rational(q) => q,
            Coefficient::Float(_) => panic!("expected exact"),
        }
    }

    #[test]
    fn circle_adjusted_exponential() {
        let e = closed_form_expansion(&SpectralModel::circle().adjusted(), &Observable::Identity, 3).unwrap();
        assert_eq!(e.leading_order(), 0);
        assert_eq!(coeff(&e, 0), rat(2, 1));
        assert_eq!(coeff(&e, 1), rat(0, 1));
        assert_eq!(coeff(&e, 2), rat(-5, 6));
        assert_eq!(coeff(&e, 3), rat(1, 2));
    }

    #[test]
    fn number_operator_tau() {
        let e = closed_form_expansion(&SpectralModel::number_op(), &Observable::Identity, 3).unwrap();
        let want = [rat(1, 1), rat(1, 2), rat(1, 12), rat(0, 1)];
        for (r, w) in want.iter().enumerate() {
            assert_eq!(&coeff(&e, r as i32), w);
        }
    }

    #[test]
    fn circle_gaussian_is_root_pi() {
        let e = closed_form_expansion_kernel(&SpectralModel::circle(), &Observable::Identity, KernelKind::Gaussian, 4).unwrap();
        assert_eq!(e.remainder(), Remainder::BeyondAllOrders);
        assert!((e.coeff_f64(0).unwrap() - std::f64::consts::PI.sqrt()).abs() < 1e-15);
        for r in 1..=4 {
            assert_eq!(e.coeff_f64(r).unwrap(), 0.0);
        }
    }

    #[test]
    fn nc_torus_gaussian_monomial() {
        let e = closed_form_expansion_kernel(
            &SpectralModel::nc_torus(),
            &Observable::LatticeMonomial { a: 2, b: 0 },
            KernelKind::Gaussian,
            2,
        )
        .unwrap();
        // Two matrix copies of (√π/2 t^{-3})(√π t^{-1}).
        assert!((e.coeff_f64(0).unwrap() - std::f64::consts::PI).abs() < 1e-14);
        assert_eq!(e.remainder(), Remainder::BeyondAllOrders);
    }

    #[test]
    fn lattice_exponential_has_no_closed_form() {
        let e = closed_form_expansion(&SpectralModel::nc_torus(), &Observable::Identity, 2);
        assert!(matches!(e, Err(Error::NoClosedForm { .. })));
    }

    #[test]
    fn half_integer_gamma() {
        assert_eq!(gamma_half_integer(0), (rat(1, 1), true));
        assert_eq!(gamma_half_integer(2), (rat(1, 2), true));
        assert_eq!(gamma_half_integer(4), (rat(3, 4), true));
        assert_eq!(gamma_half_integer(5), (rat(2, 1), false));
    }
}
