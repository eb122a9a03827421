//! Truncated Laurent expansions `Σ_{r=ℓ₀}^{N} c_r t^r` in the small-`t` regime.
//!
//! Two coefficient backends are supported: exact reduced rationals and `f64`
//! values carrying an absolute error bound. An expansion also records what is
//! known about the remainder: either `O(t^{N+1})`, or "beyond all orders",
//! meaning every coefficient past the stored ones vanishes (the remainder is
//! smaller than any power, as for Gaussian theta sums).

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Value};

use crate::error::{Error, Result};

pub(crate) const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    ExactRational,
    FloatWithError,
}

impl Backend {
    fn name(self) -> &'static str {
        match self {
            Backend::ExactRational => "exact-rational",
            Backend::FloatWithError => "float-with-error",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Remainder {
    /// `O(t^{N+1})` past the truncation order.
    #[serde(rename = "power")]
    PowerLaw,
    /// All further coefficients are zero.
    #[serde(rename = "beyond-all-orders")]
    BeyondAllOrders,
}

/// A float coefficient with its absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloatCoeff {
    pub value: f64,
    pub err: f64,
}

impl FloatCoeff {
    pub fn new(value: f64, err: f64) -> Self {
        Self { value, err }
    }

    pub fn exact(value: f64) -> Self {
        Self { value, err: 0.0 }
    }

    fn zero() -> Self {
        Self::exact(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient {
    Rational(BigRational),
    Float(FloatCoeff),
}

impl Coefficient {
    pub fn to_f64(&self) -> f64 {
        match self {
            Coefficient::Rational(q) => rational_to_f64(q),
            Coefficient::Float(c) => c.value,
        }
    }

    /// Absolute error bound; zero for exact coefficients.
    pub fn error(&self) -> f64 {
        match self {
            Coefficient::Rational(_) => 0.0,
            Coefficient::Float(c) => c.err,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Coefficient::Rational(q) => q.is_zero(),
            Coefficient::Float(c) => c.value == 0.0 && c.err == 0.0,
        }
    }

    pub fn backend(&self) -> Backend {
        match self {
            Coefficient::Rational(_) => Backend::ExactRational,
            Coefficient::Float(_) => Backend::FloatWithError,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Coefficient::Rational(q) => json!({ "num": bigint_json(q.numer()), "den": bigint_json(q.denom()), "exact": true }),
            Coefficient::Float(c) => json!({ "val": c.value, "err": c.err }),
        }
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Parse("coefficient must be an object".into()))?;
        if let (Some(n), Some(d)) = (obj.get("num"), obj.get("den")) {
            let num = bigint_from_json(n)?;
            let den = bigint_from_json(d)?;
            if den.is_zero() {
                return Err(Error::Parse("zero denominator".into()));
            }
            return Ok(Coefficient::Rational(BigRational::new(num, den)));
        }
        if let (Some(val), Some(err)) = (obj.get("val"), obj.get("err")) {
            let value = val
                .as_f64()
                .ok_or_else(|| Error::Parse("`val` must be a number".into()))?;
            let err = err
                .as_f64()
                .ok_or_else(|| Error::Parse("`err` must be a number".into()))?;
            if !(err >= 0.0) {
                return Err(Error::Parse(format!("negative error bound {err}")));
            }
            return Ok(Coefficient::Float(FloatCoeff::new(value, err)));
        }
        Err(Error::Parse("coefficient needs {num,den} or {val,err}".into()))
    }
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Rational(q) => write!(f, "{q}"),
            Coefficient::Float(c) => write!(f, "{:e} ± {:.1e}", c.value, c.err),
        }
    }
}

fn bigint_json(n: &BigInt) -> Value {
    match n.to_i64() {
        Some(v) => json!(v),
        None => json!(n.to_string()),
    }
}

fn bigint_from_json(v: &Value) -> Result<BigInt> {
    if let Some(i) = v.as_i64() {
        return Ok(BigInt::from(i));
    }
    if let Some(s) = v.as_str() {
        return s
            .parse::<BigInt>()
            .map_err(|e| Error::Parse(format!("bad integer `{s}`: {e}")));
    }
    Err(Error::Parse(format!("expected integer, found {v}")))
}

/// Nearest-double conversion that survives huge numerators and denominators.
pub fn rational_to_f64(q: &BigRational) -> f64 {
    if let Some(v) = q.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    // Scale both parts down to keep about 64 significant bits.
    let n_bits = q.numer().bits() as i64;
    let d_bits = q.denom().bits() as i64;
    let shift_n = (n_bits - 64).max(0);
    let shift_d = (d_bits - 64).max(0);
    let n = (q.numer() >> shift_n as usize).to_f64().unwrap_or(f64::NAN);
    let d = (q.denom() >> shift_d as usize).to_f64().unwrap_or(f64::NAN);
    n / d * 2f64.powi((shift_n - shift_d) as i32)
}

#[derive(Debug, Clone, PartialEq)]
enum Coeffs {
    Exact(Vec<BigRational>),
    Float(Vec<FloatCoeff>),
}

impl Coeffs {
    fn len(&self) -> usize {
        match self {
            Coeffs::Exact(v) => v.len(),
            Coeffs::Float(v) => v.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaurentExpansion {
    leading_order: i32,
    coeffs: Coeffs,
    remainder: Remainder,
}

impl LaurentExpansion {
    /// Exact expansion with coefficients for powers `leading_order..`.
    pub fn exact(leading_order: i32, coeffs: Vec<BigRational>, remainder: Remainder) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidExpansion("no coefficients".into()));
        }
        // BigRational constructors already keep fractions reduced with a positive denominator.
        Ok(Self {
            leading_order,
            coeffs: Coeffs::Exact(coeffs),
            remainder,
        })
    }

    pub fn float(leading_order: i32, coeffs: Vec<FloatCoeff>, remainder: Remainder) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidExpansion("no coefficients".into()));
        }
        if let Some(bad) = coeffs.iter().find(|c| !(c.err >= 0.0) || !c.value.is_finite()) {
            return Err(Error::InvalidExpansion(format!(
                "float coefficient {} ± {} is not admissible",
                bad.value, bad.err
            )));
        }
        Ok(Self {
            leading_order,
            coeffs: Coeffs::Float(coeffs),
            remainder,
        })
    }

    /// Convenience constructor from small integer fractions `(num, den)`.
    pub fn from_fractions(leading_order: i32, fracs: &[(i64, i64)], remainder: Remainder) -> Result<Self> {
        let coeffs = fracs
            .iter()
            .map(|&(n, d)| {
                if d == 0 {
                    Err(Error::InvalidExpansion("zero denominator".into()))
                } else {
                    Ok(BigRational::new(n.into(), d.into()))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::exact(leading_order, coeffs, remainder)
    }

    /// The exact constant `1`.
    pub fn one() -> Self {
        Self {
            leading_order: 0,
            coeffs: Coeffs::Exact(vec![BigRational::one()]),
            remainder: Remainder::BeyondAllOrders,
        }
    }

    /// The exact zero function.
    pub fn zero() -> Self {
        Self {
            leading_order: 0,
            coeffs: Coeffs::Exact(vec![BigRational::zero()]),
            remainder: Remainder::BeyondAllOrders,
        }
    }

    pub fn leading_order(&self) -> i32 {
        self.leading_order
    }

    pub fn truncation_order(&self) -> i32 {
        self.leading_order + self.coeffs.len() as i32 - 1
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.len() == 0
    }

    pub fn backend(&self) -> Backend {
        match self.coeffs {
            Coeffs::Exact(_) => Backend::ExactRational,
            Coeffs::Float(_) => Backend::FloatWithError,
        }
    }

    pub fn remainder(&self) -> Remainder {
        self.remainder
    }

    /// Highest power whose coefficient is known; `None` means every power is
    /// known (beyond-all-orders remainder).
    fn validity(&self) -> Option<i32> {
        match self.remainder {
            Remainder::PowerLaw => Some(self.truncation_order()),
            Remainder::BeyondAllOrders => None,
        }
    }

    /// Coefficient of `t^power`, or `None` if the power lies past the
    /// truncation order of a power-law expansion.
    pub fn coeff(&self, power: i32) -> Option<Coefficient> {
        if let Some(v) = self.validity() {
            if power > v {
                return None;
            }
        }
        let idx = power - self.leading_order;
        Some(match &self.coeffs {
            Coeffs::Exact(v) => Coefficient::Rational(
                usize::try_from(idx)
                    .ok()
                    .and_then(|i| v.get(i).cloned())
                    .unwrap_or_else(BigRational::zero),
            ),
            Coeffs::Float(v) => Coefficient::Float(
                usize::try_from(idx)
                    .ok()
                    .and_then(|i| v.get(i).copied())
                    .unwrap_or_else(FloatCoeff::zero),
            ),
        })
    }

    pub fn coeff_f64(&self, power: i32) -> Option<f64> {
        self.coeff(power).map(|c| c.to_f64())
    }

    pub fn exact_coeffs(&self) -> Option<&[BigRational]> {
        match &self.coeffs {
            Coeffs::Exact(v) => Some(v),
            Coeffs::Float(_) => None,
        }
    }

    pub fn float_coeffs(&self) -> Option<&[FloatCoeff]> {
        match &self.coeffs {
            Coeffs::Float(v) => Some(v),
            Coeffs::Exact(_) => None,
        }
    }

    /// Every stored coefficient as `(power, coefficient)`.
    pub fn terms(&self) -> Vec<(i32, Coefficient)> {
        (self.leading_order..=self.truncation_order())
            .map(|p| (p, self.coeff_unchecked(p)))
            .collect()
    }

    fn coeff_unchecked(&self, power: i32) -> Coefficient {
        let idx = (power - self.leading_order) as usize;
        match &self.coeffs {
            Coeffs::Exact(v) => Coefficient::Rational(v[idx].clone()),
            Coeffs::Float(v) => Coefficient::Float(v[idx]),
        }
    }

    /// Float copy; exact coefficients pick up their conversion rounding.
    pub fn to_float(&self) -> Self {
        match &self.coeffs {
            Coeffs::Float(_) => self.clone(),
            Coeffs::Exact(v) => Self {
                leading_order: self.leading_order,
                coeffs: Coeffs::Float(
                    v.iter()
                        .map(|q| {
                            let x = rational_to_f64(q);
                            FloatCoeff::new(x, x.abs() * UNIT_ROUNDOFF)
                        })
                        .collect(),
                ),
                remainder: self.remainder,
            },
        }
    }

    /// Drop coefficients above `order`; the result always has a power-law
    /// remainder unless nothing nonzero was dropped from a beyond-all-orders
    /// expansion.
    pub fn truncate(&self, order: i32) -> Result<Self> {
        if order < self.leading_order {
            return Err(Error::TruncationExhausted {
                leading: self.leading_order,
                truncation: order,
            });
        }
        if let Some(v) = self.validity() {
            if order > v {
                return Err(Error::MissingCoefficients(format!(
                    "requested order {order} exceeds validity {v}"
                )));
            }
        }
        let n = (order - self.leading_order + 1) as usize;
        let dropped_nonzero = self.truncation_order() > order
            && ((order + 1)..=self.truncation_order()).any(|p| !self.coeff_unchecked(p).is_zero());
        let remainder = match self.remainder {
            Remainder::BeyondAllOrders if !dropped_nonzero => Remainder::BeyondAllOrders,
            _ => Remainder::PowerLaw,
        };
        let coeffs = match &self.coeffs {
            Coeffs::Exact(v) => Coeffs::Exact(
                (0..n)
                    .map(|i| v.get(i).cloned().unwrap_or_else(BigRational::zero))
                    .collect(),
            ),
            Coeffs::Float(v) => Coeffs::Float((0..n).map(|i| v.get(i).copied().unwrap_or_else(FloatCoeff::zero)).collect()),
        };
        Ok(Self {
            leading_order: self.leading_order,
            coeffs,
            remainder,
        })
    }

    fn check_backends(&self, other: &Self) -> Result<()> {
        if self.backend() != other.backend() {
            return Err(Error::BackendMismatch {
                left: self.backend().name(),
                right: other.backend().name(),
            });
        }
        Ok(())
    }

    /// Cauchy product. The result is valid up to the smaller of the two
    /// orders at which either factor's remainder starts to contribute.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_backends(other)?;
        let leading = self.leading_order + other.leading_order;
        let (truncation, remainder) = match (self.validity(), other.validity()) {
            (None, None) => (
                self.truncation_order() + other.truncation_order(),
                Remainder::BeyondAllOrders,
            ),
            (Some(a), None) => (a + other.leading_order, Remainder::PowerLaw),
            (None, Some(b)) => (b + self.leading_order, Remainder::PowerLaw),
            (Some(a), Some(b)) => ((a + other.leading_order).min(b + self.leading_order), Remainder::PowerLaw),
        };
        if truncation < leading {
            return Err(Error::TruncationExhausted {
                leading,
                truncation,
            });
        }
        let n = (truncation - leading + 1) as usize;
        let coeffs = match (&self.coeffs, &other.coeffs) {
            (Coeffs::Exact(a), Coeffs::Exact(b)) => {
                let mut out = vec![BigRational::zero(); n];
                for (i, ai) in a.iter().enumerate().take(n) {
                    if ai.is_zero() {
                        continue;
                    }
                    for (j, bj) in b.iter().enumerate().take(n - i) {
                        out[i + j] += ai * bj;
                    }
                }
                Coeffs::Exact(out)
            }
            (Coeffs::Float(a), Coeffs::Float(b)) => {
                let mut out = vec![FloatCoeff::zero(); n];
                let mut mag = vec![0.0f64; n];
                let mut count = vec![0usize; n];
                for (i, ai) in a.iter().enumerate().take(n) {
                    for (j, bj) in b.iter().enumerate().take(n - i) {
                        let r = i + j;
                        let prod = ai.value * bj.value;
                        out[r].value += prod;
                        out[r].err += ai.value.abs() * bj.err + bj.value.abs() * ai.err + ai.err * bj.err;
                        mag[r] += prod.abs();
                        count[r] += 1;
                    }
                }
                for r in 0..n {
                    // Products and the running sum each round once per term.
                    out[r].err += (count[r] as f64 + 1.0) * UNIT_ROUNDOFF * mag[r];
                }
                Coeffs::Float(out)
            }
            _ => unreachable!("backends checked"),
        };
        Ok(Self {
            leading_order: leading,
            coeffs,
            remainder,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_backends(other)?;
        let leading = self.leading_order.min(other.leading_order);
        let (truncation, remainder) = match (self.validity(), other.validity()) {
            (None, None) => (
                self.truncation_order().max(other.truncation_order()),
                Remainder::BeyondAllOrders,
            ),
            (Some(a), None) | (None, Some(a)) => (a, Remainder::PowerLaw),
            (Some(a), Some(b)) => (a.min(b), Remainder::PowerLaw),
        };
        let coeffs = match (&self.coeffs, &other.coeffs) {
            (Coeffs::Exact(_), Coeffs::Exact(_)) => Coeffs::Exact(
                (leading..=truncation)
                    .map(|p| exact_or_zero(self, p) + exact_or_zero(other, p))
                    .collect(),
            ),
            (Coeffs::Float(_), Coeffs::Float(_)) => Coeffs::Float(
                (leading..=truncation)
                    .map(|p| {
                        let a = float_or_zero(self, p);
                        let b = float_or_zero(other, p);
                        let v = a.value + b.value;
                        FloatCoeff::new(v, a.err + b.err + v.abs() * UNIT_ROUNDOFF)
                    })
                    .collect(),
            ),
            _ => unreachable!("backends checked"),
        };
        Ok(Self {
            leading_order: leading,
            coeffs,
            remainder,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        let coeffs = match &self.coeffs {
            Coeffs::Exact(v) => Coeffs::Exact(v.iter().map(|q| -q).collect()),
            Coeffs::Float(v) => Coeffs::Float(v.iter().map(|c| FloatCoeff::new(-c.value, c.err)).collect()),
        };
        Self {
            leading_order: self.leading_order,
            coeffs,
            remainder: self.remainder,
        }
    }

    /// Multiply by a scalar of the matching backend.
    pub fn scale(&self, factor: &Coefficient) -> Result<Self> {
        match (factor, &self.coeffs) {
            (Coefficient::Rational(q), Coeffs::Exact(_)) => Ok(self.scale_rational(q)),
            (Coefficient::Float(c), Coeffs::Float(v)) => Ok(Self {
                leading_order: self.leading_order,
                coeffs: Coeffs::Float(
                    v.iter()
                        .map(|a| {
                            let x = a.value * c.value;
                            FloatCoeff::new(
                                x,
                                a.err * c.value.abs() + a.value.abs() * c.err + a.err * c.err + x.abs() * UNIT_ROUNDOFF,
                            )
                        })
                        .collect(),
                ),
                remainder: self.remainder,
            }),
            _ => Err(Error::BackendMismatch {
                left: self.backend().name(),
                right: factor.backend().name(),
            }),
        }
    }

    pub fn scale_rational(&self, q: &BigRational) -> Self {
        match &self.coeffs {
            Coeffs::Exact(v) => Self {
                leading_order: self.leading_order,
                coeffs: Coeffs::Exact(v.iter().map(|a| a * q).collect()),
                remainder: self.remainder,
            },
            Coeffs::Float(_) => self
                .scale(&Coefficient::Float(FloatCoeff::new(
                    rational_to_f64(q),
                    rational_to_f64(q).abs() * UNIT_ROUNDOFF,
                )))
                .expect("float backend"),
        }
    }

    /// Multiply by `t^k`.
    pub fn shift_power(&self, k: i32) -> Self {
        Self {
            leading_order: self.leading_order + k,
            coeffs: self.coeffs.clone(),
            remainder: self.remainder,
        }
    }

    /// Evaluate the stored partial sum at `t`.
    pub fn eval_partial(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        let mut comp = 0.0;
        for (p, c) in self.terms() {
            let term = c.to_f64() * t.powi(p);
            let s = acc + term;
            if acc.abs() >= term.abs() {
                comp += (acc - s) + term;
            } else {
                comp += (term - s) + acc;
            }
            acc = s;
        }
        acc + comp
    }

    /// True when the two expansions agree coefficientwise on every power
    /// both of them determine.
    pub fn agrees_with(&self, other: &Self, tol: f64) -> bool {
        let lo = self.leading_order.min(other.leading_order);
        let hi = match (self.validity(), other.validity()) {
            (None, None) => self.truncation_order().max(other.truncation_order()),
            (Some(a), None) | (None, Some(a)) => a,
            (Some(a), Some(b)) => a.min(b),
        };
        (lo..=hi).all(|p| match (self.coeff(p), other.coeff(p)) {
            (Some(Coefficient::Rational(a)), Some(Coefficient::Rational(b))) => a == b,
            (Some(a), Some(b)) => (a.to_f64() - b.to_f64()).abs() <= tol + a.error() + b.error(),
            _ => false,
        })
    }

    pub fn to_json(&self) -> Value {
        json!({
            "leading_order": self.leading_order,
            "coeffs": self.terms().iter().map(|(_, c)| c.to_json()).collect::<Vec<_>>(),
            "remainder": match self.remainder {
                Remainder::PowerLaw => "power",
                Remainder::BeyondAllOrders => "beyond-all-orders",
            },
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let leading = v
            .get("leading_order")
            .and_then(Value::as_i64)
            .ok_or_else(|| Error::Parse("missing integer `leading_order`".into()))? as i32;
        let remainder = match v.get("remainder").and_then(Value::as_str) {
            Some("power") => Remainder::PowerLaw,
            Some("beyond-all-orders") => Remainder::BeyondAllOrders,
            other => return Err(Error::Parse(format!("bad remainder tag {other:?}"))),
        };
        let raw = v
            .get("coeffs")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("missing array `coeffs`".into()))?;
        let coeffs = raw.iter().map(Coefficient::from_json).collect::<Result<Vec<_>>>()?;
        if coeffs.iter().all(|c| matches!(c, Coefficient::Rational(_))) {
            let exact = coeffs
                .into_iter()
                .map(|c| match c {
                    Coefficient::Rational(q) => q,
                    Coefficient::Float(_) => unreachable!(),
                })
                .collect();
            Self::exact(leading, exact, remainder)
        } else if coeffs.iter().all(|c| matches!(c, Coefficient::Float(_))) {
            let float = coeffs
                .into_iter()
                .map(|c| match c {
                    Coefficient::Float(f) => f,
                    Coefficient::Rational(_) => unreachable!(),
                })
                .collect();
            Self::float(leading, float, remainder)
        } else {
            Err(Error::Parse("mixed coefficient backends".into()))
        }
    }
}

impl Serialize for LaurentExpansion {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LaurentExpansion {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let v = Value::deserialize(deserializer)?;
        LaurentExpansion::from_json(&v).map_err(D::Error::custom)
    }
}

impl fmt::Display for LaurentExpansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (p, c) in self.terms() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match p {
                0 => write!(f, "({c})")?,
                1 => write!(f, "({c})·t")?,
                _ => write!(f, "({c})·t^{p}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        match self.remainder {
            Remainder::PowerLaw => write!(f, " + O(t^{})", self.truncation_order() + 1),
            Remainder::BeyondAllOrders => write!(f, " + (beyond all orders)"),
        }
    }
}

fn exact_or_zero(e: &LaurentExpansion, p: i32) -> BigRational {
    match e.coeff(p) {
        Some(Coefficient::Rational(q)) => q,
        _ => BigRational::zero(),
    }
}

fn float_or_zero(e: &LaurentExpansion, p: i32) -> FloatCoeff {
    match e.coeff(p) {
        Some(Coefficient::Float(c)) => c,
        _ => FloatCoeff::zero(),
    }
}

/// Bernoulli numbers `B_0..=B_n` with `B_1 = -1/2`, from
/// `Σ_{k=0}^{m} C(m+1, k) B_k = 0`.
pub fn bernoulli_table(n: usize) -> Vec<BigRational> {
    let mut b: Vec<BigRational> = Vec::with_capacity(n + 1);
    b.push(BigRational::one());
    for m in 1..=n {
        if m > 1 && m % 2 == 1 {
            b.push(BigRational::zero());
            continue;
        }
        // binom(m+1, k) for k = 0..m, built incrementally.
        let mut binom = BigInt::one();
        let mut acc = BigRational::zero();
        for (k, bk) in b.iter().enumerate() {
            if !bk.is_zero() {
                acc += BigRational::from_integer(binom.clone()) * bk;
            }
            binom = binom * BigInt::from(m + 1 - k) / BigInt::from(k + 1);
        }
        b.push(-acc / BigRational::from_integer(BigInt::from(m + 1)));
    }
    b
}

pub fn bernoulli(n: usize) -> BigRational {
    bernoulli_table(n).pop().expect("table is nonempty")
}

pub(crate) fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// Riemann zeta at nonpositive integers: `ζ(-n) = (-1)^n B_{n+1}/(n+1)`.
pub(crate) fn riemann_zeta_nonpositive(n: usize, bern: &[BigRational]) -> BigRational {
    let b = &bern[n + 1];
    let v = b / BigRational::from_integer(BigInt::from(n + 1));
    if n.is_odd() {
        -v
    } else {
        v
    }
}

/// `1/(1 - e^{-t}) = Σ_{n≥0} (-1)^n B_n t^{n-1}/n!`, through the power `t^order`.
pub fn geometric_expansion(order: u32) -> LaurentExpansion {
    let n_max = order as usize + 1;
    let bern = bernoulli_table(n_max);
    let coeffs = (0..=n_max)
        .map(|n| {
            let v = &bern[n] / BigRational::from_integer(factorial(n as u64));
            if n.is_odd() {
                -v
            } else {
                v
            }
        })
        .collect();
    LaurentExpansion::exact(-1, coeffs, Remainder::PowerLaw).expect("nonempty")
}

/// `e^{-λ t} = Σ (-λ)^m t^m / m!` through `t^order`.
pub fn exp_expansion(lambda: &BigRational, order: u32) -> LaurentExpansion {
    let mut coeffs = Vec::with_capacity(order as usize + 1);
    let mut term = BigRational::one();
    for m in 0..=order {
        coeffs.push(term.clone());
        term = term * (-lambda) / BigRational::from_integer(BigInt::from(m + 1));
    }
    LaurentExpansion::exact(0, coeffs, Remainder::PowerLaw).expect("nonempty")
}

/// `1 - e^{-t}` through `t^order`.
pub fn one_minus_exp_expansion(order: u32) -> LaurentExpansion {
    LaurentExpansion::one()
        .sub(&exp_expansion(&BigRational::one(), order))
        .expect("exact backends")
}

#[cfg(test)]
pub(crate) fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}


#[cfg(test)]
mod tests {
    use super::*;

    fn ex(lead: i32, f: &[(i64, i64)], rem: Remainder) -> LaurentExpansion {
        LaurentExpansion::from_fractions(lead, f, rem).unwrap()
    }

    #[test]
    fn bernoulli_small_values() {
        assert_eq!(bernoulli(0), rat(1, 1));
        assert_eq!(bernoulli(1), rat(-1, 2));
        assert_eq!(bernoulli(2), rat(1, 6));
        assert_eq!(bernoulli(3), rat(0, 1));
        assert_eq!(bernoulli(4), rat(-1, 30));
        assert_eq!(bernoulli(12), rat(-691, 2730));
    }

    #[test]
    fn square_of_geometric_head() {
        let a = ex(-1, &[(1, 1), (1, 2), (1, 12)], Remainder::PowerLaw);
        let sq = a.mul(&a).unwrap();
        assert_eq!(sq.leading_order(), -2);
        assert_eq!(sq.truncation_order(), 0);
        assert_eq!(sq.coeff(-2), Some(Coefficient::Rational(rat(1, 1))));
        assert_eq!(sq.coeff(-1), Some(Coefficient::Rational(rat(1, 1))));
        assert_eq!(sq.coeff(0), Some(Coefficient::Rational(rat(5, 12))));
        assert_eq!(sq.coeff(1), None);
    }

    #[test]
    fn unit_and_zero_products() {
        let e = geometric_expansion(4);
        assert_eq!(e.mul(&LaurentExpansion::one()).unwrap(), e);
        let z = e.mul(&LaurentExpansion::zero()).unwrap();
        assert_eq!(z.leading_order(), e.leading_order());
        assert!(z.terms().iter().all(|(_, c)| c.is_zero()));
    }

    #[test]
    fn shift_and_scale() {
        let a = ex(-1, &[(2, 1), (0, 1), (1, 6)], Remainder::PowerLaw);
        let s = a.shift_power(1);
        assert_eq!(s, ex(0, &[(2, 1), (0, 1), (1, 6)], Remainder::PowerLaw));
        let b = ex(-1, &[(1, 1), (1, 2)], Remainder::PowerLaw);
        assert_eq!(b.scale_rational(&rat(2, 1)), ex(-1, &[(2, 1), (1, 1)], Remainder::PowerLaw));
    }

    #[test]
    fn circle_adjusted_trace_by_addition() {
        // coth(t/2) = 2/(1-e^{-t}) - 1, then the kernel correction -1 + e^{-t}.
        let coth = geometric_expansion(3)
            .scale_rational(&rat(2, 1))
            .sub(&LaurentExpansion::one())
            .unwrap();
        let corr = exp_expansion(&rat(1, 1), 3).sub(&LaurentExpansion::one()).unwrap();
        let d = coth.add(&corr).unwrap();
        assert_eq!(d.truncation_order(), 3);
        let want = ex(-1, &[(2, 1), (0, 1), (-5, 6), (1, 2), (-61, 360)], Remainder::PowerLaw);
        for p in -1..=3 {
            assert_eq!(d.coeff(p), want.coeff(p), "power {p}");
        }
    }

    #[test]
    fn geometric_coefficients() {
        let g = geometric_expansion(3);
        assert_eq!(g.leading_order(), -1);
        assert_eq!(g.truncation_order(), 3);
        let want = [(1, 1), (1, 2), (1, 12), (0, 1), (-1, 720)];
        for (i, &(n, d)) in want.iter().enumerate() {
            assert_eq!(g.coeff(i as i32 - 1), Some(Coefficient::Rational(rat(n, d))));
        }
    }

    #[test]
    fn geometric_times_one_minus_exp_is_one() {
        for n in 0..12u32 {
            let g = geometric_expansion(n);
            let prod = g.mul(&one_minus_exp_expansion(n + 1)).unwrap();
            assert_eq!(prod.truncation_order(), n as i32);
            for p in prod.leading_order()..=prod.truncation_order() {
                let want = if p == 0 { rat(1, 1) } else { rat(0, 1) };
                assert_eq!(prod.coeff(p), Some(Coefficient::Rational(want)), "N={n} p={p}");
            }
        }
    }

    #[test]
    fn backend_mismatch_is_an_error() {
        let a = geometric_expansion(2);
        let b = a.to_float();
        assert!(matches!(a.mul(&b), Err(Error::BackendMismatch { .. })));
        assert!(matches!(a.add(&b), Err(Error::BackendMismatch { .. })));
    }

    #[test]
    fn float_errors_propagate() {
        let a = LaurentExpansion::float(0, vec![FloatCoeff::new(1.0, 1e-3), FloatCoeff::new(2.0, 0.0)], Remainder::PowerLaw)
            .unwrap();
        let p = a.mul(&a).unwrap();
        let c0 = p.coeff(0).unwrap();
        assert!((c0.to_f64() - 1.0).abs() < 1e-15);
        assert!(c0.error() >= 2e-3);
        assert!(LaurentExpansion::float(0, vec![FloatCoeff::new(1.0, -1.0)], Remainder::PowerLaw).is_err());
    }

    #[test]
    fn json_layout() {
        let a = ex(-1, &[(1, 1), (1, 2)], Remainder::PowerLaw);
        let v = a.to_json();
        assert_eq!(v, json!({"leading_order": -1, "coeffs": [{"num": 1, "den": 1, "exact": true}, {"num": 1, "den": 2, "exact": true}], "remainder": "power"}));
        assert_eq!(LaurentExpansion::from_json(&v).unwrap(), a);
        let big = LaurentExpansion::exact(0, vec![BigRational::from_integer(factorial(30))], Remainder::BeyondAllOrders).unwrap();
        assert_eq!(LaurentExpansion::from_json(&big.to_json()).unwrap(), big);
    }

    #[test]
    fn beyond_all_orders_products_keep_full_length() {
        let a = ex(-1, &[(1, 1), (0, 1), (3, 1)], Remainder::BeyondAllOrders);
        let b = ex(0, &[(2, 1), (1, 1)], Remainder::BeyondAllOrders);
        let p = a.mul(&b).unwrap();
        assert_eq!(p.remainder(), Remainder::BeyondAllOrders);
        assert_eq!(p.truncation_order(), 2);
        assert_eq!(p.coeff(5), Some(Coefficient::Rational(rat(0, 1))));
    }
}
