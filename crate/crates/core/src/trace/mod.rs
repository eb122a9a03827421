//! Certified heat traces `Tr(b e^{-t|D|})` and `Tr(b e^{-t²D²})`, grid
//! sampling, closed-form small-`t` expansions and numerical coefficient fits.

mod closed;
mod fit;
pub(crate) mod sum;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use closed::{closed_form_expansion, closed_form_expansion_kernel};
pub use fit::{fit_expansion, FittedExpansion};

use crate::error::{Error, Result};
use crate::expansion::UNIT_ROUNDOFF;
use crate::par;
use crate::spectrum::{resolve_weights, LatticeWeights, Observable, SpectralModel, Weights};
use sum::{choose_cutoff, lattice_band_const, sum_integer_poly, sum_lattice_rows, sum_terms, tail_bound, PartialSum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KernelKind {
    /// `e^{-t|D|}`
    #[serde(rename = "exp")]
    Exponential,
    /// `e^{-t²D²}`
    #[serde(rename = "gauss")]
    Gaussian,
}

impl KernelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            KernelKind::Exponential => "exp",
            KernelKind::Gaussian => "gauss",
        }
    }
}

impl std::str::FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp" | "exponential" => Ok(KernelKind::Exponential),
            "gauss" | "gaussian" => Ok(KernelKind::Gaussian),
            _ => Err(Error::Parse(format!("unknown kernel `{s}` (expected exp or gauss)"))),
        }
    }
}

/// How level sums are partitioned. A fixed partition gives bit-identical
/// results whether or not the shards run in parallel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SumStrategy {
    Sequential,
    Sharded(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceOptions {
    /// Requested accuracy: `abs_error ≤ eps · max(1, |value|)`.
    pub eps: f64,
    /// Maximum number of levels (or lattice rows/columns) to sum.
    pub budget: u64,
    pub strategy: SumStrategy,
    pub parallel: bool,
}

impl TraceOptions {
    pub fn new(eps: f64) -> Self {
        Self {
            eps,
            ..Self::default()
        }
    }
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            eps: 1e-12,
            budget: 1 << 30,
            strategy: SumStrategy::Sequential,
            parallel: par::available(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub value: f64,
    pub abs_error: f64,
    pub kernel: KernelKind,
}

pub fn heat_trace(model: &SpectralModel, obs: &Observable, t: f64, kernel: KernelKind, eps: f64) -> Result<TraceSample> {
    heat_trace_with(model, obs, t, kernel, &TraceOptions::new(eps))
}

pub fn heat_trace_with(
    model: &SpectralModel,
    obs: &Observable,
    t: f64,
    kernel: KernelKind,
    opts: &TraceOptions,
) -> Result<TraceSample> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!("t must be positive and finite, got {t}")));
    }
    if !(opts.eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {}", opts.eps)));
    }
    let tail_target = opts.eps / 2.0;
    let (sum, tail) = match resolve_weights(model, obs)? {
        Weights::Integer(lp) => {
            let w = lp.f64_view();
            let k_min = lp.max_corr_level().unwrap_or(0);
            let (c, m) = (w.growth_const(), w.degree() as u32);
            let (k, tail) = choose_cutoff(|k| tail_bound(kernel, c, m, t, k), k_min, tail_target, opts.budget)?;
            let mut s = sum_integer_poly(&w, t, kernel, k, opts.strategy, opts.parallel);
            let corr: Vec<(f64, f64)> = w.corr.iter().map(|&(k, p, m)| (k as f64, p + m)).collect();
            s = combine(&[s, sum_terms(&corr, t, kernel)]);
            (s, tail)
        }
        Weights::Lattice(lw) => lattice_trace(&lw, t, kernel, tail_target, opts)?,
        Weights::Table(rows) => {
            let terms: Vec<(f64, f64)> = rows.iter().map(|&(v, p, m)| (v, p + m)).collect();
            (sum_terms(&terms, t, kernel), 0.0)
        }
    };
    let allowed = opts.eps * sum.value.abs().max(1.0);
    if sum.rounding > allowed / 2.0 {
        return Err(Error::Precision {
            requested: opts.eps,
            achieved: (sum.rounding + tail) / sum.value.abs().max(1.0),
        });
    }
    Ok(TraceSample {
        t,
        value: sum.value,
        abs_error: sum.rounding + tail,
        kernel,
    })
}

/// Sum partial sums in order, adding their error bounds.
fn combine(parts: &[PartialSum]) -> PartialSum {
    let mut acc = sum::Compensated::default();
    let mut rounding = 0.0;
    let mut abs = 0.0;
    for p in parts {
        acc.add(p.value);
        rounding += p.rounding;
        abs += p.abs;
    }
    PartialSum {
        value: acc.value(),
        rounding: rounding + acc.rounding_bound() + 2.0 * UNIT_ROUNDOFF * acc.abs_sum(),
        abs,
    }
}

fn lattice_trace(
    lw: &LatticeWeights,
    t: f64,
    kernel: KernelKind,
    tail_target: f64,
    opts: &TraceOptions,
) -> Result<(PartialSum, f64)> {
    let origin_lambda = if lw.origin_moved { 1.0 } else { 0.0 };
    let mut finite: Vec<(f64, f64)> = vec![(origin_lambda, lw.origin.0 + lw.origin.1)];
    finite.extend(lw.shells.iter().map(|&(k, p, m)| ((k as f64).sqrt(), p + m)));
    let finite = sum_terms(&finite, t, kernel);
    let Some(pw) = lw.point else {
        return Ok((finite, 0.0));
    };
    let (point, tail) = match kernel {
        KernelKind::Gaussian if pw.j % 2 == 0 => theta::factored(&pw, t, tail_target, opts)?,
        _ => {
            let (c, m) = lattice_band_const(&pw);
            let (r, tail) = choose_cutoff(|r| tail_bound(kernel, c, m, t, r), 1, tail_target, opts.budget)?;
            (sum_lattice_rows(&pw, t, kernel, r, opts.parallel), tail)
        }
    };
    Ok((combine(&[finite, point]), tail))
}

/// Gaussian lattice sums through one-dimensional theta sums:
/// `Σ_{m,n} m^a n^b e^{-t²(m²+n²)} = θ_a(t) θ_b(t)`.
mod theta {
    use super::*;
    use crate::spectrum::poly::LevelPolyF64;
    use crate::spectrum::PointWeight;

    /// `θ_a(t) = Σ_{m∈ℤ} m^a e^{-t²m²}` with its error bound.
    pub fn theta(a: u32, t: f64, target: f64, opts: &TraceOptions) -> Result<(f64, f64)> {
        if a % 2 == 1 {
            return Ok((0.0, 0.0));
        }
        let mut mono = vec![0.0; a as usize + 1];
        mono[a as usize] = 1.0;
        let w = LevelPolyF64 { plus: mono, minus: vec![], corr: vec![] };
        // The two half-lines carry target/2 each.
        let (k, tail) = choose_cutoff(
            |k| tail_bound(KernelKind::Gaussian, 1.0, a, t, k),
            1,
            target / 2.0,
            opts.budget,
        )?;
        let s = sum_integer_poly(&w, t, KernelKind::Gaussian, k, opts.strategy, false);
        // sum_integer_poly includes m = 0, which contributes 1 only for a = 0.
        let zero = if a == 0 { 1.0 } else { 0.0 };
        let v = 2.0 * s.value - zero;
        let err = 2.0 * (s.rounding + tail) + UNIT_ROUNDOFF * v.abs();
        Ok((v, err))
    }

    fn leading_size(a: u32, t: f64) -> f64 {
        // θ_a ≈ Γ((a+1)/2) t^{-(a+1)}; a cheap overestimate is enough here.
        let g = libm_gamma_half(a);
        g * t.powi(-(a as i32 + 1)) + 1.0
    }

    fn libm_gamma_half(a: u32) -> f64 {
        // Γ((a+1)/2) for even a, by the recurrence from Γ(1/2).
        let mut g = std::f64::consts::PI.sqrt();
        let mut x = 0.5;
        for _ in 0..a / 2 {
            g *= x;
            x += 1.0;
        }
        g
    }

    pub fn factored(pw: &PointWeight, t: f64, target: f64, opts: &TraceOptions) -> Result<(PartialSum, f64)> {
        if pw.a % 2 == 1 || pw.b % 2 == 1 {
            return Ok((PartialSum::default(), 0.0));
        }
        let half = pw.j / 2;
        let mut acc = sum::Compensated::default();
        let mut err = 0.0;
        let mut binom = 1.0;
        for i in 0..=half {
            let (ea, eb) = (pw.a + 2 * i, pw.b + 2 * (half - i));
            let scale = pw.coef.abs() * binom * (half as f64 + 1.0);
            let ta = theta(ea, t, target / (4.0 * scale * leading_size(eb, t)), opts)?;
            let tb = theta(eb, t, target / (4.0 * scale * leading_size(ea, t)), opts)?;
            let prod = ta.0 * tb.0;
            acc.add(pw.coef * binom * prod);
            err += pw.coef.abs() * binom * (ta.0.abs() * tb.1 + tb.0.abs() * ta.1 + ta.1 * tb.1 + 3.0 * UNIT_ROUNDOFF * prod.abs());
            binom = binom * (half - i) as f64 / (i + 1) as f64;
        }
        if pw.a == 0 && pw.b == 0 && pw.j == 0 {
            // Remove the origin; its weight is added separately.
            acc.add(-pw.coef);
        }
        let value = acc.value();
        Ok((
            PartialSum {
                value,
                rounding: err + acc.rounding_bound(),
                abs: acc.abs_sum(),
            },
            0.0,
        ))
    }
}

/// Samples at `t_j = t₀ ρ^j`, `j = 0..count`, evaluated in parallel across grid points.
#[allow(clippy::too_many_arguments)]
pub fn sample_grid(
    model: &SpectralModel,
    obs: &Observable,
    t0: f64,
    rho: f64,
    count: usize,
    kernel: KernelKind,
    eps: f64,
) -> Result<Vec<TraceSample>> {
    sample_grid_with(model, obs, t0, rho, count, kernel, &TraceOptions::new(eps))
}

pub fn sample_grid_with(
    model: &SpectralModel,
    obs: &Observable,
    t0: f64,
    rho: f64,
    count: usize,
    kernel: KernelKind,
    opts: &TraceOptions,
) -> Result<Vec<TraceSample>> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidParameter(format!("grid ratio must lie in (0,1), got {rho}")));
    }
    if !(t0 > 0.0) {
        return Err(Error::InvalidParameter(format!("t0 must be positive, got {t0}")));
    }
    let ts: Vec<f64> = (0..count).map(|j| t0 * rho.powi(j as i32)).collect();
    // Inner sums stay sequential here; the grid supplies the parallelism.
    let inner = TraceOptions { parallel: false, ..*opts };
    par::map_indexed(count, opts.parallel, |j| heat_trace_with(model, obs, ts[j], kernel, &inner))
        .into_iter()
        .collect()
}

/// CSV with columns `t,value,abs_error,kernel`.
pub fn samples_to_csv(samples: &[TraceSample]) -> String {
    let mut out = String::from("t,value,abs_error,kernel\n");
    for s in samples {
        let _ = writeln!(out, "{:e},{:e},{:e},{}", s.t, s.value, s.abs_error, s.kernel.as_str());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_exponential_at_one() {
        let s = heat_trace(&SpectralModel::circle(), &Observable::Identity, 1.0, KernelKind::Exponential, 1e-13).unwrap();
        let exact = (1.0 + (-1f64).exp()) / (1.0 - (-1f64).exp());
        assert!((s.value - exact).abs() <= s.abs_error + 1e-15);
        assert!((s.value - 2.1639534).abs() < 1e-7);
    }

    #[test]
    fn number_operator_at_ln2() {
        let s = heat_trace(&SpectralModel::number_op(), &Observable::Identity, 2f64.ln(), KernelKind::Exponential, 1e-13).unwrap();
        assert!((s.value - 2.0).abs() <= s.abs_error.max(4e-16));
    }

    #[test]
    fn circle_gaussian_at_one() {
        let s = heat_trace(&SpectralModel::circle(), &Observable::Identity, 1.0, KernelKind::Gaussian, 1e-13).unwrap();
        let direct: f64 = (-5i32..=5).map(|k| (-(k * k) as f64).exp()).sum();
        assert!((s.value - direct).abs() < 1e-10);
        assert!((s.value - 1.7726372).abs() < 1e-7);
    }

    #[test]
    fn nc_torus_gaussian_matches_row_sum() {
        let m = SpectralModel::nc_torus();
        let obs = Observable::LatticeMonomial { a: 2, b: 0 };
        let t = 0.7;
        let f = heat_trace(&m, &obs, t, KernelKind::Gaussian, 1e-12).unwrap();
        let mut direct = 0.0;
        for a in -30i64..=30 {
            for b in -30i64..=30 {
                direct += 2.0 * (a * a) as f64 * (-(t * t) * (a * a + b * b) as f64).exp();
            }
        }
        assert!((f.value - direct).abs() < 1e-10 * direct);
    }

    #[test]
    fn invalid_inputs() {
        let c = SpectralModel::circle();
        assert!(heat_trace(&c, &Observable::Identity, 0.0, KernelKind::Exponential, 1e-10).is_err());
        assert!(heat_trace(&c, &Observable::Identity, 1.0, KernelKind::Exponential, 0.0).is_err());
        let opts = TraceOptions { budget: 10, ..TraceOptions::new(1e-12) };
        let e = heat_trace_with(&c, &Observable::Identity, 1e-3, KernelKind::Exponential, &opts).unwrap_err();
        assert!(matches!(e, Error::Budget { budget: 10, .. }));
    }

    #[test]
    fn sharded_sums_are_reproducible() {
        let m = SpectralModel::sphere_eq(2).unwrap();
        let mut opts = TraceOptions::new(1e-12);
        opts.strategy = SumStrategy::Sharded(7);
        let a = heat_trace_with(&m, &Observable::Identity, 0.01, KernelKind::Exponential, &opts).unwrap();
        opts.parallel = false;
        let b = heat_trace_with(&m, &Observable::Identity, 0.01, KernelKind::Exponential, &opts).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }

    #[test]
    fn csv_layout() {
        let s = TraceSample { t: 0.5, value: 2.0, abs_error: 1e-12, kernel: KernelKind::Gaussian };
        assert_eq!(samples_to_csv(&[s]), "t,value,abs_error,kernel\n5e-1,2e0,1e-12,gauss\n");
    }
}
