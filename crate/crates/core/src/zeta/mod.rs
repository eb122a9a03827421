//! Spectral zeta functions `ζ_b(s) = Tr(b |D|^{-s})` (kernel excluded):
//! direct Dirichlet sums, poles and residues from heat coefficients, and
//! meromorphic continuation through the Mellin transform of the heat trace.

pub mod gamma;
pub mod hurwitz;
pub mod quad;

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Zero;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::expansion::{factorial, rational_to_f64, Coefficient, FloatCoeff, LaurentExpansion, Remainder, UNIT_ROUNDOFF as U};
use crate::spectrum::poly::horner_abs;
use crate::spectrum::{resolve_weights, LatticeWeights, LevelKind, Observable, SpectralModel, Weights};
use crate::trace::sum::{choose_cutoff, lattice_band_const, tail_bound};
use crate::trace::{
    closed_form_expansion_kernel, fit_expansion, heat_trace_with, sample_grid_with, KernelKind, TraceOptions,
};

pub use gamma::{gamma, gamma_real};

/// `|s - k| <` this at a pole with nonzero residue is refused.
pub const POLE_THRESHOLD: f64 = 1e-6;
/// Residues above this (float path) count as poles.
pub const RESIDUE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaValue {
    pub s: Complex64,
    pub value: Complex64,
    pub abs_error: f64,
}

pub(crate) fn complex_json(z: Complex64) -> Value {
    if z.im == 0.0 {
        json!(z.re)
    } else {
        json!({"re": z.re, "im": z.im})
    }
}

impl ZetaValue {
    pub fn to_json(&self) -> Value {
        json!({"s": complex_json(self.s), "value": complex_json(self.value), "abs_error": self.abs_error})
    }
}

/// Poles, residues and the value at zero of `ζ_b`, read off the heat expansion of `D' = D + P`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZetaData {
    pub p: u32,
    /// `k ↦ Res_{s=k} ζ_b`, only nonzero residues.
    pub poles: BTreeMap<u32, Coefficient>,
    pub value_at_zero: Coefficient,
    /// `Tr(P b P)`, the weight of `b` on `ker D`.
    pub kernel_trace: Coefficient,
}

impl ZetaData {
    pub fn to_json(&self) -> Value {
        let poles: serde_json::Map<String, Value> =
            self.poles.iter().map(|(k, r)| (k.to_string(), r.to_json())).collect();
        json!({
            "p": self.p,
            "poles": poles,
            "zeta_at_zero": self.value_at_zero.to_json(),
            "kernel_trace": self.kernel_trace.to_json(),
        })
    }
}

fn coeff_is_nonzero(c: &Coefficient) -> bool {
    match c {
        Coefficient::Rational(q) => !q.is_zero(),
        Coefficient::Float(f) => f.value.abs() > f.err.max(RESIDUE_TOL),
    }
}

fn coeff_div_int(c: &Coefficient, d: &BigInt) -> Coefficient {
    match c {
        Coefficient::Rational(q) => Coefficient::Rational(q / BigRational::from_integer(d.clone())),
        Coefficient::Float(f) => {
            let df = rational_to_f64(&BigRational::from_integer(d.clone()));
            Coefficient::Float(FloatCoeff::new(f.value / df, f.err / df + U * (f.value / df).abs()))
        }
    }
}

fn coeff_sub(a: &Coefficient, b: &Coefficient) -> Coefficient {
    match (a, b) {
        (Coefficient::Rational(x), Coefficient::Rational(y)) => Coefficient::Rational(x - y),
        _ => {
            let v = a.to_f64() - b.to_f64();
            Coefficient::Float(FloatCoeff::new(v, a.error() + b.error() + U * v.abs()))
        }
    }
}

/// `Res_{s=k} ζ = a_{p-k}/Γ(k)` for `k = 1..p` and `ζ(0) = a_p - Tr(PbP)`, where
/// `a_r` are the coefficients of `τ_p(t) = t^p Tr(b e^{-t|D'|})`.
pub fn poles_and_residues(expansion: &LaurentExpansion, p: u32, kernel_trace: &Coefficient) -> Result<ZetaData> {
    let get = |r: i32| {
        expansion
            .coeff(r)
            .ok_or_else(|| Error::MissingCoefficients(format!("t^{r} coefficient of τ_{p} is not available")))
    };
    let mut poles = BTreeMap::new();
    for k in 1..=p {
        let a = get((p - k) as i32)?;
        let res = coeff_div_int(&a, &factorial(k as u64 - 1));
        if coeff_is_nonzero(&res) {
            poles.insert(k, res);
        }
    }
    let value_at_zero = coeff_sub(&get(p as i32)?, kernel_trace);
    Ok(ZetaData { p, poles, value_at_zero, kernel_trace: kernel_trace.clone() })
}

fn kernel_trace_of(model: &SpectralModel, obs: &Observable) -> Result<Coefficient> {
    if model.is_kernel_adjusted() || model.kernel_dim() == 0 {
        return Ok(Coefficient::Rational(BigRational::zero()));
    }
    Ok(match model.kernel_weight_exact(obs)? {
        Some(q) => Coefficient::Rational(q),
        None => Coefficient::Float(FloatCoeff::exact(model.kernel_weight(obs)?)),
    })
}

fn dprime(model: &SpectralModel) -> SpectralModel {
    if model.kernel_dim() > 0 {
        model.adjusted()
    } else {
        model.clone()
    }
}

/// [`ZetaData`] for a model/observable pair, from the exponential closed form
/// when there is one and the Gaussian form (converted) otherwise.
pub fn zeta_data(model: &SpectralModel, obs: &Observable) -> Result<ZetaData> {
    let z = ContinuedZeta::new(model, obs, ZetaOptions::default())?;
    z.data()
}

// ---------------------------------------------------------------------------
// Direct Dirichlet sums

fn pow_neg(x: f64, s: Complex64) -> Complex64 {
    (-s * x.ln()).exp()
}

/// `Σ_{λ>0} W(λ) λ^{-s}` for `Re s > p + 1/4`, with absolute error ≤ `eps`.
pub fn zeta_direct(model: &SpectralModel, obs: &Observable, s: Complex64, eps: f64) -> Result<ZetaValue> {
    let p = model.pair_dimension(obs) as f64;
    if s.re <= p + 0.25 {
        return Err(Error::DirectDomain { re: s.re, min: p + 0.25 });
    }
    let (value, err) = match resolve_weights(model, obs)? {
        Weights::Integer(lp) => {
            let total = lp.total_poly();
            let coeffs: Vec<f64> = total.coeffs().iter().map(rational_to_f64).collect();
            let n = coeffs.iter().filter(|c| **c != 0.0).count().max(1) as f64;
            let mut v = Complex64::new(0.0, 0.0);
            let mut e = 0.0;
            for (j, c) in coeffs.iter().enumerate() {
                if *c == 0.0 {
                    continue;
                }
                let (z, ez) = hurwitz::riemann(s - j as f64, eps / (2.0 * n * c.abs()))?;
                v += *c * z;
                e += c.abs() * ez + 2.0 * U * (c * z).norm();
            }
            for (k, (wp, wm)) in &lp.corr {
                if *k == 0 {
                    continue;
                }
                let w = rational_to_f64(&(wp + wm));
                let term = w * pow_neg(*k as f64, s);
                v += term;
                e += 4.0 * U * term.norm();
            }
            (v, e)
        }
        Weights::Lattice(lw) => lattice_direct(&lw, s, eps)?,
        Weights::Table(rows) => {
            let mut v = Complex64::new(0.0, 0.0);
            let mut e = 0.0;
            for (lambda, wp, wm) in rows {
                if lambda > 0.0 {
                    let term = (wp + wm) * pow_neg(lambda, s);
                    v += term;
                    e += 4.0 * U * term.norm();
                }
            }
            (v, e)
        }
    };
    Ok(ZetaValue { s, value, abs_error: err })
}

fn lattice_direct(lw: &LatticeWeights, s: Complex64, eps: f64) -> Result<(Complex64, f64)> {
    let mut v = Complex64::new(0.0, 0.0);
    let mut e = 0.0;
    if lw.origin_moved {
        v += lw.origin.0 + lw.origin.1;
    }
    for &(k, wp, wm) in &lw.shells {
        let term = (wp + wm) * pow_neg(k as f64, s / 2.0);
        v += term;
        e += 4.0 * U * term.norm();
    }
    let Some(pw) = lw.point else {
        return Ok((v, e));
    };
    if pw.a % 2 == 1 || pw.b % 2 == 1 {
        return Ok((v, e));
    }
    if pw.a == 0 && pw.b == 0 {
        // Σ' (m²+n²)^{-w} = 4 ζ(w) β(w) with w = (s - j)/2.
        let w = (s - pw.j as f64) / 2.0;
        let (z, ez) = hurwitz::riemann(w, eps / (16.0 * pw.coef.abs()))?;
        let (b, eb) = hurwitz::dirichlet_beta(w, eps / (16.0 * pw.coef.abs() * z.norm().max(1.0)))?;
        let val = 4.0 * pw.coef * z * b;
        v += val;
        e += 4.0 * pw.coef.abs() * (z.norm() * eb + b.norm() * ez + ez * eb) + 4.0 * U * val.norm();
        return Ok((v, e));
    }
    // Band sums over max(|m|,|n|) = j; |w| λ^{-σ} ≤ C j^{q+1-σ} per band.
    let q = pw.degree() as f64;
    let excess = s.re - q - 2.0;
    let c = 8.0 * pw.coef.abs() * 2f64.powf(q / 2.0);
    let needed = (c / (0.5 * eps * excess)).powf(1.0 / excess).ceil();
    if !(needed < 4.0e4) {
        return Err(Error::Budget { budget: 40_000, achieved: c * 4.0e4f64.powf(-excess) / excess });
    }
    let r = needed as i64;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut abs = 0.0;
    for m in 0..=r {
        for n in 0..=r {
            if m == 0 && n == 0 {
                continue;
            }
            let copies = match (m == 0, n == 0) {
                (true, _) | (_, true) => 2.0,
                _ => 4.0,
            };
            let term = copies * pw.at(m, n) * pow_neg((m * m + n * n) as f64, s / 2.0);
            acc += term;
            abs += term.norm();
        }
    }
    let tail = c * (r as f64).powf(-excess) / excess;
    Ok((v + acc, e + tail + 4.0 * (r as f64) * U * abs))
}

// ---------------------------------------------------------------------------
// Continuation

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaOptions {
    /// Target absolute error.
    pub eps: f64,
    /// Split point `c` of the Mellin integral `∫₀^c + ∫_c^∞`.
    pub split: f64,
    /// Expansion order `N` (of `τ_p`); `None` picks one from `s`.
    pub order: Option<u32>,
    /// Force the exponential or Gaussian route.
    pub route: Option<KernelKind>,
    pub parallel: bool,
}

impl Default for ZetaOptions {
    fn default() -> Self {
        Self { eps: 1e-10, split: 1.0, order: None, route: None, parallel: crate::par::available() }
    }
}

/// Continuation of `ζ_b` for one model/observable pair.
///
/// With `φ(t) = Tr(b e^{-t|D'|}) = Σ_{r≤N} a_r t^{r-p} + R_N(t)`,
/// `Γ(s) ζ_{D'}(s) = Σ_r a_r c^{s+r-p}/(s+r-p) + ∫₀^c R_N t^{s-1} + ∫_c^∞ φ t^{s-1}`,
/// and `ζ_D = ζ_{D'} - Tr(PbP)`. The Gaussian route is the same with
/// `½Γ(s/2)` in place of `Γ(s)`.
#[derive(Debug, Clone)]
pub struct ContinuedZeta {
    model: SpectralModel,
    obs: Observable,
    p: u32,
    kernel: KernelKind,
    expansion: LaurentExpansion,
    kernel_trace: Coefficient,
    fitted: bool,
    opts: ZetaOptions,
}

const DEFAULT_EXTRA_ORDER: u32 = 16;
const FIT_ORDER: u32 = 8;

impl ContinuedZeta {
    pub fn new(model: &SpectralModel, obs: &Observable, opts: ZetaOptions) -> Result<Self> {
        if !(opts.eps > 0.0) || !(opts.split > 0.0) {
            return Err(Error::InvalidParameter("eps and split must be positive".into()));
        }
        let dp = dprime(model);
        let p = dp.pair_dimension(obs);
        let order = opts.order.unwrap_or(p + DEFAULT_EXTRA_ORDER);
        let routes: Vec<KernelKind> = match opts.route {
            Some(k) => vec![k],
            None => vec![KernelKind::Exponential, KernelKind::Gaussian],
        };
        let mut found = None;
        for kernel in &routes {
            match closed_form_expansion_kernel(&dp, obs, *kernel, order as i32) {
                Ok(e) => {
                    found = Some((*kernel, e, false));
                    break;
                }
                Err(Error::NoClosedForm { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        let (kernel, expansion, fitted) = match found {
            Some(f) => f,
            None => {
                let kernel = match (opts.route, dp.level_kind()) {
                    (Some(k), _) => k,
                    (None, LevelKind::Lattice) => KernelKind::Gaussian,
                    (None, _) => KernelKind::Exponential,
                };
                let topts = TraceOptions { eps: 1e-14, ..TraceOptions::default() };
                let samples = sample_grid_with(&dp, obs, 0.25, 0.5, 14, kernel, &topts)?;
                let fit = fit_expansion(&samples, p, FIT_ORDER.min(order), f64::INFINITY)?;
                (kernel, fit.expansion, true)
            }
        };
        Ok(Self {
            kernel_trace: kernel_trace_of(model, obs)?,
            model: dp,
            obs: obs.clone(),
            p,
            kernel,
            expansion,
            fitted,
            opts,
        })
    }

    pub fn kernel(&self) -> KernelKind {
        self.kernel
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    /// Whether the heat coefficients were fitted numerically rather than known in closed form.
    pub fn is_fitted(&self) -> bool {
        self.fitted
    }

    /// Expansion of `τ_p` for `D'` in the exponential kernel through `t^order`.
    pub fn exponential_expansion(&self, order: u32) -> Result<LaurentExpansion> {
        match self.kernel {
            KernelKind::Exponential => self.expansion.truncate(order as i32),
            KernelKind::Gaussian => {
                let lookup = |m: u32| -> Option<(f64, f64)> {
                    let s = Complex64::new(-(m as f64), 0.0);
                    self.eval_dprime(s).ok().map(|z| (z.value.re, z.abs_error))
                };
                gauss_to_exp(&self.expansion, &lookup, self.p, order)
            }
        }
    }

    /// Expansion actually used for the continuation (kernel given by [`Self::kernel`]).
    pub fn route_expansion(&self) -> &LaurentExpansion {
        &self.expansion
    }

    pub fn data(&self) -> Result<ZetaData> {
        poles_and_residues(&self.exponential_expansion(self.p)?, self.p, &self.kernel_trace)
    }

    fn coeff(&self, r: i32) -> Option<(f64, f64)> {
        self.expansion.coeff(r).map(|c| (c.to_f64(), c.error()))
    }

    fn coeff_nonzero(&self, r: i32) -> bool {
        self.expansion.coeff(r).is_some_and(|c| match c {
            Coefficient::Rational(q) => !q.is_zero(),
            Coefficient::Float(f) => f.value != 0.0 && f.value.abs() > f.err,
        })
    }

    /// `ζ_b(s)` with the kernel excluded.
    pub fn eval(&self, s: Complex64) -> Result<ZetaValue> {
        let mut z = self.eval_dprime(s)?;
        z.value -= self.kernel_trace.to_f64();
        z.abs_error += self.kernel_trace.error() + U * z.value.norm();
        Ok(z)
    }

    /// Prefactor pole of `Γ(s)` (or `½Γ(s/2)`) at `s`, as the `m` in `s = -m`.
    fn prefactor_pole(&self, s: Complex64) -> Option<u32> {
        if s.im.abs() > 1e-12 || s.re > 0.5 {
            return None;
        }
        let m = (-s.re).round();
        if (s.re + m).abs() > 1e-12 {
            return None;
        }
        let m = m as u32;
        match self.kernel {
            KernelKind::Exponential => Some(m),
            KernelKind::Gaussian => m.is_multiple_of(2).then_some(m),
        }
    }

    fn prefactor(&self, s: Complex64) -> Result<Complex64> {
        match self.kernel {
            KernelKind::Exponential => gamma(s),
            KernelKind::Gaussian => Ok(0.5 * gamma(s / 2.0)?),
        }
    }

    fn missing(&self, what: String) -> Error {
        Error::MissingCoefficients(format!("{what} (expansion of `{}` known through t^{})", self.obs, self.expansion.truncation_order()))
    }

    /// `ζ_{D'}(s)`, the kernel included at eigenvalue 1.
    pub fn eval_dprime(&self, s: Complex64) -> Result<ZetaValue> {
        let p = self.p as i32;
        for k in 1..=p {
            let d = (s - k as f64).norm();
            if d < POLE_THRESHOLD && self.coeff_nonzero(p - k) {
                return Err(Error::PoleProximity { s: fmt_complex(s), pole: k, distance: d });
            }
        }
        if let Some(m) = self.prefactor_pole(s) {
            // Limit of M(s)/prefactor(s) at the prefactor pole.
            let (r, scale) = match self.kernel {
                KernelKind::Exponential => (p + m as i32, signed_factorial(m)),
                KernelKind::Gaussian => (p + m as i32, signed_factorial(m / 2)),
            };
            let (a, e) = self.coeff(r).ok_or_else(|| self.missing(format!("ζ(-{m}) needs the t^{r} coefficient")))?;
            let v = a * scale;
            return Ok(ZetaValue { s, value: Complex64::new(v, 0.0), abs_error: e * scale.abs() + U * v.abs() });
        }
        let n = self.expansion.truncation_order();
        let depth = (n + 1 - p) as f64 + s.re;
        if self.expansion.remainder() == Remainder::PowerLaw && depth <= 2.0 {
            return Err(self.missing(format!("Re s = {} needs the expansion past t^{}", s.re, (p as f64 - s.re + 1.0).ceil())));
        }
        let pref = self.prefactor(s)?;
        let pn = pref.norm();
        let target = self.opts.eps * pn.max(1e-300);
        let c = self.opts.split;

        // Σ a_r c^{s+r-p}/(s+r-p)
        let mut series = Complex64::new(0.0, 0.0);
        let mut series_err = 0.0;
        for (r, coef) in self.expansion.terms() {
            let (a, e) = (coef.to_f64(), coef.error());
            if a == 0.0 && e == 0.0 {
                continue;
            }
            let w = s + (r - p) as f64;
            let term_scale = (w * c.ln()).exp() / w;
            if !term_scale.norm().is_finite() {
                continue;
            }
            series += a * term_scale;
            series_err += e * term_scale.norm() + 4.0 * U * (a * term_scale).norm();
        }

        let near = self.near_integral(s, target, depth)?;
        let far = self.far_integral(s, target)?;
        let m = series + near.0 + far.0;
        let m_err = series_err + near.1 + far.1;
        let value = m / pref;
        let abs_error = m_err / pn + 4.0 * U * value.norm() * (1.0 + s.norm());
        Ok(ZetaValue { s, value, abs_error })
    }

    fn trace_at(&self, t: f64) -> Result<(f64, f64)> {
        let mut eps = 1e-14;
        loop {
            let opts = TraceOptions { eps, parallel: false, ..TraceOptions::default() };
            match heat_trace_with(&self.model, &self.obs, t, self.kernel, &opts) {
                Ok(x) => return Ok((x.value, x.abs_error)),
                Err(Error::Precision { .. }) if eps < 1e-10 => eps *= 10.0,
                Err(e) => return Err(e),
            }
        }
    }

    /// `∫₀^c R_N(t) t^{s-1} dt` over dyadic pieces in `u = ln t`.
    fn near_integral(&self, s: Complex64, target: f64, depth: f64) -> Result<(Complex64, f64)> {
        let p = self.p as i32;
        let terms: Vec<(i32, f64, f64)> =
            self.expansion.terms().into_iter().map(|(r, c)| (r - p, c.to_f64(), c.error())).collect();
        let integrand = |u: f64| -> Result<(Complex64, f64)> {
            let t = u.exp();
            let (phi, phi_err) = self.trace_at(t)?;
            let mut poly = 0.0;
            let mut comp = 0.0;
            let mut abs = 0.0;
            let mut err = phi_err;
            for &(e, a, ea) in &terms {
                let x = a * t.powi(e);
                let y = poly + x;
                comp += if poly.abs() >= x.abs() { (poly - y) + x } else { (x - y) + poly };
                poly = y;
                abs += x.abs();
                err += ea * t.powi(e);
            }
            let rem = phi - (poly + comp);
            err += 4.0 * U * (phi.abs() + abs);
            let f = (u * s).exp();
            Ok((rem * f, err * f.norm() + 2.0 * U * (rem * f).norm()))
        };
        let ln2 = std::f64::consts::LN_2;
        let top = self.opts.split.ln();
        let ratio = 2f64.powf(-depth.min(60.0));
        let tol = target / 16.0;
        let mut total = Complex64::new(0.0, 0.0);
        let mut err = 0.0;
        let mut quiet = 0;
        let mut prev = f64::INFINITY;
        for i in 0..200 {
            let hi = top - i as f64 * ln2;
            let q = quad::integrate(&integrand, hi - ln2, hi, tol / 2f64.powi(i.min(30) + 1), self.opts.parallel)?;
            total += q.value;
            err += q.err;
            let size = q.value.norm() + q.err;
            quiet = if size < tol { quiet + 1 } else { 0 };
            // A growing piece is cancellation noise in φ - poly; true pieces shrink geometrically.
            if quiet >= 2 || (i >= 2 && size > prev) {
                err += size * ratio / (1.0 - ratio);
                return Ok((total, err));
            }
            prev = size;
        }
        Err(Error::Quadrature("near-zero Mellin integral did not settle".into()))
    }

    /// `∫_c^∞ φ(t) t^{s-1} dt`, truncated where the decay bound drops below the target.
    fn far_integral(&self, s: Complex64, target: f64) -> Result<(Complex64, f64)> {
        let weights = resolve_weights(&self.model, &self.obs)?;
        let lambda_min = min_level(&weights);
        let integrand = |t: f64| -> Result<(Complex64, f64)> {
            let (phi, e) = self.trace_at(t)?;
            let f = ((s - 1.0) * t.ln()).exp();
            Ok((phi * f, e * f.norm() + 2.0 * U * (phi * f).norm()))
        };
        let step = match self.kernel {
            KernelKind::Exponential => 2.0 / lambda_min,
            KernelKind::Gaussian => 1.0 / lambda_min,
        };
        let tol = target / 16.0;
        let mut total = Complex64::new(0.0, 0.0);
        let mut err = 0.0;
        let mut lo = self.opts.split;
        for i in 0..2000 {
            let hi = lo + step;
            let q = quad::integrate(&integrand, lo, hi, tol / 2f64.powi(i.min(30) + 1), self.opts.parallel)?;
            total += q.value;
            err += q.err;
            let bound = far_tail(&weights, self.kernel, hi, s.re, lambda_min);
            if bound < tol {
                return Ok((total, err + bound));
            }
            lo = hi;
        }
        Err(Error::Quadrature("Mellin integral tail did not decay".into()))
    }
}

fn fmt_complex(s: Complex64) -> String {
    if s.im == 0.0 {
        format!("{}", s.re)
    } else {
        format!("{}{:+}i", s.re, s.im)
    }
}

fn signed_factorial(m: u32) -> f64 {
    let f: f64 = (1..=m).map(f64::from).product();
    if m % 2 == 1 {
        -f
    } else {
        f
    }
}

fn min_level(w: &Weights) -> f64 {
    match w {
        Weights::Integer(_) | Weights::Lattice(_) => 1.0,
        Weights::Table(rows) => rows.iter().filter(|r| r.0 > 0.0).map(|r| r.0).fold(f64::INFINITY, f64::min).min(1e300),
    }
}

/// Upper bound for `Σ |W(λ)| κ(t, λ)` over nonzero levels.
fn abs_trace_bound(w: &Weights, kernel: KernelKind, t: f64) -> f64 {
    let k = |lambda: f64| match kernel {
        KernelKind::Exponential => (-t * lambda).exp(),
        KernelKind::Gaussian => (-(t * lambda).powi(2)).exp(),
    };
    let slack = 1.0 + 1e-10;
    match w {
        Weights::Integer(lp) => {
            let f = lp.f64_view();
            let (c, m) = (f.growth_const(), f.degree() as u32);
            let cut = choose_cutoff(|n| tail_bound(kernel, c, m, t, n), 1, 1e-300, 1 << 24);
            let (n, tail) = cut.unwrap_or((1 << 24, f64::INFINITY));
            let mut s = 0.0;
            for j in 1..=n {
                let x = j as f64;
                s += (horner_abs(&f.plus, x) + horner_abs(&f.minus, x)) * k(x);
            }
            for &(j, a, b) in &f.corr {
                if j > 0 {
                    s += (a.abs() + b.abs()) * k(j as f64);
                }
            }
            (s + tail) * slack
        }
        Weights::Lattice(lw) => {
            let mut s = 0.0;
            if lw.origin_moved {
                s += (lw.origin.0.abs() + lw.origin.1.abs()) * k(1.0);
            }
            for &(j, a, b) in &lw.shells {
                s += (a.abs() + b.abs()) * k((j as f64).sqrt());
            }
            if let Some(pw) = &lw.point {
                let (c, m) = lattice_band_const(pw);
                let cut = choose_cutoff(|n| tail_bound(kernel, c, m, t, n), 1, 1e-300, 1 << 24);
                let (n, tail) = cut.unwrap_or((1 << 24, f64::INFINITY));
                for j in 1..=n {
                    s += c * (j as f64).powi(m as i32) * k(j as f64);
                }
                s += tail;
            }
            s * slack
        }
        Weights::Table(rows) => rows
            .iter()
            .filter(|r| r.0 > 0.0)
            .map(|r| (r.1.abs() + r.2.abs()) * k(r.0))
            .sum::<f64>()
            * slack,
    }
}

/// Bound for `|∫_T^∞ φ(t) t^{s-1} dt|` from the decay of the smallest level.
fn far_tail(w: &Weights, kernel: KernelKind, big_t: f64, sigma: f64, lambda_min: f64) -> f64 {
    let phi = abs_trace_bound(w, kernel, big_t);
    if phi == 0.0 {
        return 0.0;
    }
    let rate = match kernel {
        KernelKind::Exponential => lambda_min,
        KernelKind::Gaussian => 2.0 * big_t * lambda_min * lambda_min,
    };
    let eff = rate - (sigma - 1.0).max(0.0) / big_t;
    if eff <= 0.0 {
        return f64::INFINITY;
    }
    2.0 * phi * big_t.powf(sigma - 1.0) / eff
}

/// `ζ_b(s)` by continuation; `order` is the expansion order `N` of `τ_p`.
pub fn zeta_continued(model: &SpectralModel, obs: &Observable, s: Complex64, eps: f64, order: Option<u32>) -> Result<ZetaValue> {
    let opts = ZetaOptions { eps, order, ..ZetaOptions::default() };
    ContinuedZeta::new(model, obs, opts)?.eval(s)
}

/// Exponential heat coefficients from Gaussian ones: with `u = p - r`,
/// `a_r = Γ(u)·2g_r/Γ(u/2)` for `u ≥ 1` and `a_r = (-1)^m ζ(-m)/m!` for `u = -m ≤ 0`,
/// where `ζ(-m) = (-1)^{m/2}(m/2)! g_{p+m}` for even `m` and odd-`m` values
/// come from `zeta_at(m)` (value, error) for `ζ_{D'}(-m)`.
pub fn gauss_to_exp(
    gauss: &LaurentExpansion,
    zeta_at: &dyn Fn(u32) -> Option<(f64, f64)>,
    p: u32,
    order: u32,
) -> Result<LaurentExpansion> {
    let g = |r: i32| -> Result<(f64, f64)> {
        gauss
            .coeff(r)
            .map(|c| (c.to_f64(), c.error()))
            .ok_or_else(|| Error::MissingCoefficients(format!("Gaussian t^{r} coefficient is not available")))
    };
    let mut missing = Vec::new();
    let mut coeffs = Vec::with_capacity(order as usize + 1);
    for r in 0..=order as i32 {
        let u = p as i32 - r;
        let c = if u >= 1 {
            let (gv, ge) = g(r)?;
            let f = gamma_real(u as f64)? * 2.0 / gamma_real(u as f64 / 2.0)?;
            FloatCoeff::new(f * gv, f.abs() * ge + 4.0 * U * (f * gv).abs())
        } else {
            let m = (-u) as u32;
            let zeta = if m.is_multiple_of(2) {
                let (gv, ge) = g(p as i32 + m as i32)?;
                let sf = signed_factorial(m / 2);
                Some((gv * sf, ge * sf.abs()))
            } else {
                zeta_at(m)
            };
            match zeta {
                Some((z, ze)) => {
                    let f = 1.0 / signed_factorial(m);
                    FloatCoeff::new(z * f, ze * f.abs() + 2.0 * U * (z * f).abs())
                }
                None => {
                    missing.push(-(m as i32));
                    FloatCoeff::exact(f64::NAN)
                }
            }
        };
        coeffs.push(c);
    }
    if !missing.is_empty() {
        return Err(Error::MissingZetaValues(missing));
    }
    LaurentExpansion::float(0, coeffs, Remainder::PowerLaw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::rat;

    fn r(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn direct_examples() {
        let z = zeta_direct(&SpectralModel::number_op(), &Observable::Identity, r(2.0), 1e-12).unwrap();
        assert!((z.value.re - 1.644_934_066_848_226_4).abs() < 1e-12);
        let z = zeta_direct(&SpectralModel::circle(), &Observable::Identity, r(3.0), 1e-12).unwrap();
        assert!((z.value.re - 2.404_113_806_319_188_5).abs() < 1e-12);
        assert!(matches!(
            zeta_direct(&SpectralModel::circle(), &Observable::Identity, r(1.1), 1e-12),
            Err(Error::DirectDomain { .. })
        ));
    }

    #[test]
    fn residues_from_circle_expansion() {
        let e = LaurentExpansion::from_fractions(0, &[(2, 1), (0, 1), (-5, 6), (1, 2)], Remainder::PowerLaw).unwrap();
        let d = poles_and_residues(&e, 1, &Coefficient::Rational(rat(1, 1))).unwrap();
        assert_eq!(d.poles.get(&1), Some(&Coefficient::Rational(rat(2, 1))));
        assert_eq!(d.value_at_zero, Coefficient::Rational(rat(-1, 1)));
        let short = LaurentExpansion::from_fractions(0, &[(2, 1)], Remainder::PowerLaw).unwrap();
        assert!(matches!(poles_and_residues(&short, 1, &Coefficient::Rational(rat(0, 1))), Err(Error::MissingCoefficients(_))));
    }

    #[test]
    fn number_operator_continuation() {
        let m = SpectralModel::number_op();
        let z0 = zeta_continued(&m, &Observable::Identity, r(0.0), 1e-10, None).unwrap();
        assert!((z0.value.re + 0.5).abs() < 1e-12);
        let z = zeta_continued(&m, &Observable::Identity, r(0.5), 1e-10, None).unwrap();
        assert!((z.value.re + 1.460_354_508_809_586_8).abs() < 1e-8, "{:?}", z);
        let z = zeta_continued(&m, &Observable::Identity, Complex64::new(-1.5, 2.0), 1e-10, None).unwrap();
        let (want, _) = hurwitz::riemann(Complex64::new(-1.5, 2.0), 1e-14).unwrap();
        assert!((z.value - want).norm() < 1e-8, "{:?} vs {want}", z);
    }
}
