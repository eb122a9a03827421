//! Certified partial sums of heat traces: compensated accumulation, analytic
//! tail bounds, and cutoff search.

use crate::error::{Error, Result};
use crate::expansion::UNIT_ROUNDOFF as U;
use crate::par;
use crate::spectrum::poly::LevelPolyF64;
use crate::spectrum::PointWeight;

use super::{KernelKind, SumStrategy};

/// Neumaier compensated sum that also tracks `Σ|x|` for the error bound.
#[derive(Debug, Clone, Copy, Default)]
pub struct Compensated {
    sum: f64,
    comp: f64,
    abs: f64,
    n: u64,
}

impl Compensated {
    pub fn add(&mut self, x: f64) {
        let s = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - s) + x;
        } else {
            self.comp += (x - s) + self.sum;
        }
        self.sum = s;
        self.abs += x.abs();
        self.n += 1;
    }

    /// Fold in a partial sum computed separately, keeping its compensation.
    pub fn merge(&mut self, other: &Compensated) {
        let (n, abs) = (self.n, self.abs);
        self.add(other.sum);
        self.add(other.comp);
        self.n = n + other.n;
        self.abs = abs + other.abs;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    pub fn abs_sum(&self) -> f64 {
        self.abs
    }

    /// Bound on the accumulation error (not counting errors in the terms).
    pub fn rounding_bound(&self) -> f64 {
        let nf = self.n as f64;
        2.0 * U * self.value().abs() + 2.0 * nf * U * U * self.abs + 4.0 * U * U * self.abs
    }
}

/// Value of a sum with bounds on the accumulated rounding error.
#[derive(Debug, Clone, Copy, Default)]
pub struct PartialSum {
    pub value: f64,
    pub rounding: f64,
    pub abs: f64,
}

impl PartialSum {
    fn from_parts(acc: &Compensated, eval_err: f64) -> Self {
        Self {
            value: acc.value(),
            rounding: acc.rounding_bound() + eval_err,
            abs: acc.abs_sum(),
        }
    }
}

/// Kernel factor `e^{-tλ}` or `e^{-t²λ²}` with the relative error of its evaluation.
#[inline]
pub fn kernel_factor(kernel: KernelKind, t: f64, lambda: f64) -> (f64, f64) {
    match kernel {
        KernelKind::Exponential => {
            let arg = t * lambda;
            ((-arg).exp(), (2.0 + arg) * U)
        }
        KernelKind::Gaussian => {
            let x = t * lambda;
            let arg = x * x;
            ((-arg).exp(), (2.0 + 3.0 * arg) * U)
        }
    }
}

/// Bound on `Σ_{k>K} C (1+k)^m e^{-tk}` (resp. `e^{-t²k²}`), valid once `K`
/// passes the point where the summand is decreasing fast enough.
pub fn tail_bound(kernel: KernelKind, c: f64, m: u32, t: f64, k: u64) -> f64 {
    if c == 0.0 {
        return 0.0;
    }
    let kf = k as f64;
    let mf = m as f64;
    let ln = match kernel {
        KernelKind::Exponential => {
            if kf < (2.0 * mf / t).max(2.0) {
                return f64::INFINITY;
            }
            (2.0 * c).ln() + mf * (1.0 + kf).ln() - t * kf - t.ln()
        }
        KernelKind::Gaussian => {
            if kf < (mf.sqrt() / t).max(1.0) {
                return f64::INFINITY;
            }
            c.ln() + mf * (1.0 + kf).ln() - t * t * kf * kf - (t * t * kf).ln()
        }
    };
    ln.exp()
}

/// Smallest cutoff (up to a factor of two, then bisected) whose tail bound meets `target`.
pub fn choose_cutoff<F: Fn(u64) -> f64>(tail: F, k_min: u64, target: f64, budget: u64) -> Result<(u64, f64)> {
    let mut hi = k_min.max(2);
    while tail(hi) > target {
        if hi >= budget {
            return Err(Error::Budget {
                budget,
                achieved: tail(budget),
            });
        }
        hi = hi.saturating_mul(2).min(budget);
    }
    let mut lo = (hi / 2).max(k_min);
    if lo < hi && tail(lo) <= target {
        return Ok((lo, tail(lo)));
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if tail(mid) <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((hi, tail(hi)))
}

fn shard_bounds(n: u64, strategy: SumStrategy) -> Vec<(u64, u64)> {
    let shards = match strategy {
        SumStrategy::Sequential => 1,
        SumStrategy::Sharded(s) => (s.max(1) as u64).min(n.max(1)),
    };
    let base = n / shards;
    let extra = n % shards;
    let mut out = Vec::with_capacity(shards as usize);
    let mut start = 0;
    for i in 0..shards {
        let len = base + u64::from(i < extra);
        out.push((start, start + len));
        start += len;
    }
    out
}

/// `Σ_{k=0}^{K} W(k) κ(t, k)` over the polynomial part of integer-level weights.
pub fn sum_integer_poly(
    w: &LevelPolyF64,
    t: f64,
    kernel: KernelKind,
    k_max: u64,
    strategy: SumStrategy,
    parallel: bool,
) -> PartialSum {
    let deg = w.degree() as f64;
    let bounds = shard_bounds(k_max + 1, strategy);
    let shards = par::map_indexed(bounds.len(), parallel, |i| {
        let (lo, hi) = bounds[i];
        let mut acc = Compensated::default();
        let mut eval_err = 0.0;
        for k in lo..hi {
            let kf = k as f64;
            let (wv, wa) = w.poly_total(kf);
            if wa == 0.0 {
                continue;
            }
            let (e, rel) = kernel_factor(kernel, t, kf);
            acc.add(wv * e);
            eval_err += (rel + (2.0 * deg + 2.0) * U) * wa * e;
        }
        (acc, eval_err)
    });
    let mut total = Compensated::default();
    let mut eval_err = 0.0;
    for (acc, e) in &shards {
        total.merge(acc);
        eval_err += e;
    }
    PartialSum::from_parts(&total, eval_err * (1.0 + 4.0 * U))
}

/// Finite list of `(λ, weight)` terms.
pub fn sum_terms(terms: &[(f64, f64)], t: f64, kernel: KernelKind) -> PartialSum {
    let mut acc = Compensated::default();
    let mut eval_err = 0.0;
    for &(lambda, wt) in terms {
        let (e, rel) = kernel_factor(kernel, t, lambda);
        acc.add(wt * e);
        eval_err += (rel + U) * (wt * e).abs();
    }
    PartialSum::from_parts(&acc, eval_err)
}

/// Growth data for the point weights: `|w(m,n)| ≤ coef · 2^{q/2} · j^q` on the band `max(|m|,|n|) = j`.
pub fn lattice_band_const(pw: &PointWeight) -> (f64, u32) {
    let q = pw.degree();
    // 8j points per band, each with |w| ≤ coef (√2 j)^q.
    (8.0 * pw.coef.abs() * 2f64.powf(q as f64 / 2.0), q + 1)
}

/// `Σ_{(m,n) ≠ 0, |m|,|n| ≤ R} w(m,n) κ(t, √(m²+n²))`, summed by rows `m ≥ 0`
/// using the reflection symmetry of even monomials.
pub fn sum_lattice_rows(pw: &PointWeight, t: f64, kernel: KernelKind, r: u64, parallel: bool) -> PartialSum {
    if pw.a % 2 == 1 || pw.b % 2 == 1 {
        // Odd monomials cancel between (m,n) and its reflection.
        return PartialSum::default();
    }
    let per_term = (pw.degree() as f64 + 6.0) * U;
    let r = r as i64;
    let rows = par::map_indexed(r as usize + 1, parallel, |mi| {
        let m = mi as i64;
        let mut acc = Compensated::default();
        let mut eval_err = 0.0;
        let start = if m == 0 { 1 } else { 0 };
        for n in start..=r {
            // Multiplicity of the reflected copies of (m, n) with m, n ≥ 0.
            let copies = match (m == 0, n == 0) {
                (true, true) => 0.0,
                (true, false) | (false, true) => 2.0,
                (false, false) => 4.0,
            };
            let lambda = ((m * m + n * n) as f64).sqrt();
            let (e, rel) = kernel_factor(kernel, t, lambda);
            let x = copies * pw.at(m, n) * e;
            acc.add(x);
            eval_err += (rel + per_term) * x.abs();
        }
        (acc, eval_err)
    });
    let mut total = Compensated::default();
    let mut eval_err = 0.0;
    for (acc, e) in &rows {
        total.merge(acc);
        eval_err += e;
    }
    PartialSum::from_parts(&total, eval_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut c = Compensated::default();
        c.add(1.0);
        for _ in 0..1000 {
            c.add(1e-17);
        }
        c.add(-1.0);
        assert!((c.value() - 1e-14).abs() < 1e-26, "{}", c.value());
    }

    #[test]
    fn tail_bound_dominates_true_tail() {
        for &t in &[0.05, 0.3, 1.0] {
            for m in 0..4u32 {
                let k = ((2.0 * m as f64 / t).max(2.0)).ceil() as u64 + 3;
                let bound = tail_bound(KernelKind::Exponential, 1.0, m, t, k);
                let truth: f64 = (k + 1..k + 20000).map(|j| (1.0 + j as f64).powi(m as i32) * (-t * j as f64).exp()).sum();
                assert!(truth <= bound, "t={t} m={m}");
                let kg = ((m as f64).sqrt() / t).ceil() as u64 + 1;
                let gb = tail_bound(KernelKind::Gaussian, 1.0, m, t, kg);
                let gt: f64 = (kg + 1..kg + 5000).map(|j| (1.0 + j as f64).powi(m as i32) * (-(t * j as f64).powi(2)).exp()).sum();
                assert!(gt <= gb, "gauss t={t} m={m}");
            }
        }
    }

    #[test]
    fn cutoff_search_respects_budget() {
        let tail = |k: u64| (-(k as f64) / 100.0).exp();
        let (k, b) = choose_cutoff(tail, 1, 1e-3, 1 << 20).unwrap();
        assert!(b <= 1e-3 && tail(k - 1) > 1e-3);
        assert!(matches!(choose_cutoff(tail, 1, 1e-3, 100), Err(Error::Budget { budget: 100, .. })));
    }

    #[test]
    fn shards_cover_range() {
        let b = shard_bounds(10, SumStrategy::Sharded(3));
        assert_eq!(b, vec![(0, 4), (4, 7), (7, 10)]);
        assert_eq!(shard_bounds(5, SumStrategy::Sequential), vec![(0, 5)]);
    }
}
