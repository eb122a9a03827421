use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::expansion::rational_to_f64;

/// Polynomial in the level index `k` with rational coefficients (`coeffs[i]` multiplies `k^i`).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly {
    coeffs: Vec<BigRational>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: BigRational) -> Self {
        Self::new(vec![c])
    }

    pub fn from_ints(c: &[i64]) -> Self {
        Self::new(c.iter().map(|&v| BigRational::from_integer(v.into())).collect())
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, k: u64) -> BigRational {
        let x = BigRational::from_integer(BigInt::from(k));
        self.coeffs
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, c| acc * &x + c)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coeffs.iter().map(rational_to_f64).collect()
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let z = BigRational::zero();
        Poly::new(
            (0..n)
                .map(|i| self.coeffs.get(i).unwrap_or(&z) + other.coeffs.get(i).unwrap_or(&z))
                .collect(),
        )
    }

    pub fn scale(&self, q: &BigRational) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * q).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    /// Multiply by `k^j`.
    pub fn times_power(&self, j: u32) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let mut c = vec![BigRational::zero(); j as usize];
        c.extend(self.coeffs.iter().cloned());
        Poly::new(c)
    }

    /// `k ↦ P(k - n)`.
    pub fn shift(&self, n: u64) -> Poly {
        let lin = Poly::new(vec![
            BigRational::from_integer(-BigInt::from(n)),
            BigRational::one(),
        ]);
        let mut acc = Poly::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(&lin).add(&Poly::constant(c.clone()));
        }
        acc
    }

    /// `v ↦ Σ_{j=0}^{v} P(j)`, via Newton forward differences and the hockey-stick identity.
    pub fn partial_sum(&self) -> Poly {
        let Some(deg) = self.degree() else {
            return Poly::zero();
        };
        let mut diffs: Vec<BigRational> = (0..=deg as u64).map(|k| self.eval(k)).collect();
        let mut out = Poly::zero();
        for i in 0..=deg {
            // diffs[0] now holds Δ^i P(0).
            if !diffs[0].is_zero() {
                out = out.add(&binomial_poly(1, i as u32 + 1).scale(&diffs[0]));
            }
            for m in 0..diffs.len() - 1 {
                diffs[m] = &diffs[m + 1] - &diffs[m];
            }
            diffs.pop();
        }
        out
    }

    /// Sum of absolute coefficients, a constant `C` with `|P(k)| ≤ C (1+k)^deg`.
    pub fn abs_bound(&self) -> f64 {
        self.coeffs.iter().map(|c| rational_to_f64(&c.abs())).sum()
    }
}

/// `C(k + a, r)` as a polynomial in `k`.
pub fn binomial_poly(a: i64, r: u32) -> Poly {
    let mut acc = Poly::from_ints(&[1]);
    let mut fact = BigInt::one();
    for i in 0..r as i64 {
        acc = acc.mul(&Poly::from_ints(&[a - i, 1]));
        fact *= BigInt::from(i + 1);
    }
    acc.scale(&BigRational::new(BigInt::one(), fact))
}

pub(crate) fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * x + v)
}

pub(crate) fn horner_abs(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * x + v.abs())
}

/// Signed level data on integer levels `k = 0, 1, 2, …`: a polynomial part
/// for each sign plus finitely supported corrections.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LevelPoly {
    pub plus: Poly,
    pub minus: Poly,
    pub corr: BTreeMap<u64, (BigRational, BigRational)>,
}

impl LevelPoly {
    pub fn new(plus: Poly, minus: Poly) -> Self {
        Self {
            plus,
            minus,
            corr: BTreeMap::new(),
        }
    }

    pub fn with_correction(mut self, k: u64, plus: BigRational, minus: BigRational) -> Self {
        self.add_correction(k, plus, minus);
        self
    }

    pub fn add_correction(&mut self, k: u64, plus: BigRational, minus: BigRational) {
        let e = self
            .corr
            .entry(k)
            .or_insert_with(|| (BigRational::zero(), BigRational::zero()));
        e.0 += plus;
        e.1 += minus;
        if e.0.is_zero() && e.1.is_zero() {
            self.corr.remove(&k);
        }
    }

    pub fn at(&self, k: u64) -> (BigRational, BigRational) {
        let (mut p, mut m) = (self.plus.eval(k), self.minus.eval(k));
        if let Some((cp, cm)) = self.corr.get(&k) {
            p += cp;
            m += cm;
        }
        (p, m)
    }

    pub fn total_poly(&self) -> Poly {
        self.plus.add(&self.minus)
    }

    pub fn max_corr_level(&self) -> Option<u64> {
        self.corr.keys().next_back().copied()
    }

    pub fn degree(&self) -> Option<usize> {
        match (self.plus.degree(), self.minus.degree()) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        }
    }

    pub fn scale(&self, q: &BigRational) -> Self {
        let mut out = Self::new(self.plus.scale(q), self.minus.scale(q));
        for (k, (p, m)) in &self.corr {
            out.add_correction(*k, p * q, m * q);
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = Self::new(self.plus.add(&other.plus), self.minus.add(&other.minus));
        out.corr = self.corr.clone();
        for (k, (p, m)) in &other.corr {
            out.add_correction(*k, p.clone(), m.clone());
        }
        out
    }

    /// Keep a single sign.
    pub fn sign_part(&self, plus: bool) -> Self {
        let z = Poly::zero();
        let mut out = if plus {
            Self::new(self.plus.clone(), z)
        } else {
            Self::new(z, self.minus.clone())
        };
        for (k, (p, m)) in &self.corr {
            if plus {
                out.add_correction(*k, p.clone(), BigRational::zero());
            } else {
                out.add_correction(*k, BigRational::zero(), m.clone());
            }
        }
        out
    }

    /// Multiply level `k` by `k^j`.
    pub fn times_power(&self, j: u32) -> Self {
        let mut out = Self::new(self.plus.times_power(j), self.minus.times_power(j));
        for (k, (p, m)) in &self.corr {
            let f = BigRational::from_integer(BigInt::from(*k).pow(j));
            out.add_correction(*k, p * &f, m * &f);
        }
        out
    }

    /// `v ↦ Σ_{j=0}^{v}` of each sign.
    pub fn partial_sums(&self) -> Self {
        let mut out = Self::new(self.plus.partial_sum(), self.minus.partial_sum());
        let total_p: BigRational = self.corr.values().map(|c| c.0.clone()).sum();
        let total_m: BigRational = self.corr.values().map(|c| c.1.clone()).sum();
        // A correction at level j contributes a step for v ≥ j: add the full step to
        // the polynomial part and subtract it below j.
        out.plus = out.plus.add(&Poly::constant(total_p));
        out.minus = out.minus.add(&Poly::constant(total_m));
        if let Some(top) = self.max_corr_level() {
            for v in 0..top {
                let (mut p, mut m) = (BigRational::zero(), BigRational::zero());
                for (_, (cp, cm)) in self.corr.range(v + 1..) {
                    p -= cp;
                    m -= cm;
                }
                out.add_correction(v, p, m);
            }
        }
        out
    }

    /// Convolution with a finitely supported sequence `w_n` on the number operator
    /// levels: `v ↦ Σ_n w_n X(v - n)`.
    pub fn convolve_finite(&self, factor: &[(u64, BigRational)]) -> Self {
        let mut out = Self::default();
        for (n, w) in factor {
            let mut part = Self::new(self.plus.shift(*n).scale(w), self.minus.shift(*n).scale(w));
            // The shifted polynomial is only meant for v ≥ n.
            for v in 0..*n {
                part.add_correction(v, -(part.plus.eval(v)), -(part.minus.eval(v)));
            }
            for (k, (p, m)) in &self.corr {
                part.add_correction(k + n, p * w, m * w);
            }
            out = out.add(&part);
        }
        out
    }

    /// Move the level-0 weight onto level 1 (the `D + P` kernel shift).
    pub fn move_zero_to_one(&self) -> Self {
        let (p0, m0) = self.at(0);
        let mut out = self.clone();
        out.add_correction(0, -p0.clone(), -m0.clone());
        out.add_correction(1, p0, m0);
        out
    }

    pub fn is_zero(&self) -> bool {
        self.plus.is_zero() && self.minus.is_zero() && self.corr.is_empty()
    }

    /// Total weight `W₊(0) + W₋(0)` on the kernel level.
    pub fn level_zero_total(&self) -> BigRational {
        let (p, m) = self.at(0);
        p + m
    }

    pub(crate) fn f64_view(&self) -> LevelPolyF64 {
        LevelPolyF64 {
            plus: self.plus.to_f64(),
            minus: self.minus.to_f64(),
            corr: self
                .corr
                .iter()
                .map(|(k, (p, m))| (*k, rational_to_f64(p), rational_to_f64(m)))
                .collect(),
        }
    }
}

/// `f64` mirror of [`LevelPoly`] for summation loops.
#[derive(Debug, Clone)]
pub(crate) struct LevelPolyF64 {
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
    pub corr: Vec<(u64, f64, f64)>,
}

impl LevelPolyF64 {
    /// Total weight of the polynomial part at `k` and its absolute-value bound.
    pub fn poly_total(&self, k: f64) -> (f64, f64) {
        let v = horner(&self.plus, k) + horner(&self.minus, k);
        let a = horner_abs(&self.plus, k) + horner_abs(&self.minus, k);
        (v, a)
    }

    pub fn degree(&self) -> usize {
        self.plus.len().max(self.minus.len()).saturating_sub(1)
    }

    /// `C` with `|W(k)| ≤ C (1+k)^deg` for the polynomial part.
    pub fn growth_const(&self) -> f64 {
        self.plus.iter().chain(self.minus.iter()).map(|c| c.abs()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::rat;

    #[test]
    fn binomial_polynomials() {
        let p = binomial_poly(2, 2);
        for k in 0..20u64 {
            let want = (k + 2) * (k + 1) / 2;
            assert_eq!(p.eval(k), BigRational::from_integer(want.into()));
        }
    }

    #[test]
    fn partial_sum_of_squares() {
        let p = Poly::from_ints(&[0, 0, 1]);
        let s = p.partial_sum();
        for v in 0..30u64 {
            let want: u64 = (0..=v).map(|j| j * j).sum();
            assert_eq!(s.eval(v), BigRational::from_integer(want.into()));
        }
    }

    #[test]
    fn partial_sums_handle_corrections() {
        let lp = LevelPoly::new(Poly::from_ints(&[1]), Poly::from_ints(&[1])).with_correction(0, rat(0, 1), rat(-1, 1));
        let s = lp.partial_sums();
        for v in 0..10u64 {
            let (p, m) = s.at(v);
            assert_eq!(p, BigRational::from_integer((v + 1).into()));
            assert_eq!(m, BigRational::from_integer(v.into()));
        }
    }

    #[test]
    fn shift_matches_evaluation() {
        let p = Poly::from_ints(&[3, -1, 2]);
        let s = p.shift(4);
        for k in 4..20u64 {
            assert_eq!(s.eval(k), p.eval(k - 4));
        }
    }

    #[test]
    fn finite_convolution() {
        let lp = LevelPoly::new(Poly::from_ints(&[1, 1]), Poly::zero()).with_correction(2, rat(5, 1), rat(0, 1));
        let f = [(0u64, rat(1, 2)), (3, rat(2, 1))];
        let c = lp.convolve_finite(&f);
        for v in 0..15u64 {
            let mut want = BigRational::zero();
            for (n, w) in &f {
                if v >= *n {
                    want += lp.at(v - n).0 * w;
                }
            }
            assert_eq!(c.at(v).0, want, "v={v}");
        }
    }
}
