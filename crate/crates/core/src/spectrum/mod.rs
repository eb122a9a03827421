//! Spectral triples reduced to the eigenvalue data of `D`: levels of `|D|`,
//! their multiplicities split by the sign of `D`, the kernel dimension and the
//! summability exponent, together with diagonal observables on them.

mod observable;
mod parse;
pub mod poly;

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde_json::{json, Value};

pub use observable::{DiagEntry, GrowthClass, Observable, Sign, SuspendedObservable};
pub use parse::{parse_model, parse_observable, parse_rational};
pub use poly::{binomial_poly, LevelPoly, Poly};

use crate::error::{Error, Result};
use crate::expansion::rational_to_f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelKind {
    /// Level `k` has eigenvalue `k`.
    Integer,
    /// Shell `k = m² + n²` of `ℤ²` with eigenvalue `√k`.
    Lattice,
    /// Finite list of levels with arbitrary real values.
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuspensionTag {
    Suspension,
    Amplification,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Origin {
    Builtin,
    Custom,
    Suspended { base: Box<SpectralModel>, tag: SuspensionTag },
    KernelAdjusted { base: Box<SpectralModel> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableLevel {
    pub value: f64,
    pub mult_plus: u64,
    pub mult_minus: u64,
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Integer(LevelPoly),
    Lattice { kernel_moved: bool },
    Table(Vec<TableLevel>),
}

/// One eigenvalue level of `|D|`.
#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub index: u64,
    pub value: f64,
    pub mult_plus: u128,
    pub mult_minus: u128,
}

impl Level {
    pub fn total(&self) -> u128 {
        self.mult_plus + self.mult_minus
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralModel {
    name: String,
    repr: Repr,
    p: u32,
    count_const: f64,
    matrix_mult: u32,
    origin: Origin,
}

/// Result of [`SpectralModel::kernel_adjust`].
#[derive(Debug, Clone)]
pub struct KernelAdjusted {
    pub model: SpectralModel,
    /// Set when the input had no kernel and was returned unchanged.
    pub warning: Option<String>,
}

pub const NC_TORUS_MATRIX_MULT: u32 = 2;

impl SpectralModel {
    /// Dirac operator `-i d/dθ` on the circle: eigenvalues `k ∈ ℤ`.
    pub fn circle() -> Self {
        let mults = LevelPoly::new(Poly::from_ints(&[1]), Poly::from_ints(&[1])).with_correction(
            0,
            BigRational::zero(),
            BigRational::from_integer((-1).into()),
        );
        Self::integer("circle", mults, 1, 2.0, Origin::Builtin)
    }

    /// Number operator on `ℓ²(ℕ)`.
    pub fn number_op() -> Self {
        let mults = LevelPoly::new(Poly::from_ints(&[1]), Poly::zero());
        Self::integer("number_op", mults, 1, 1.0, Origin::Builtin)
    }

    /// Matrix Dirac operator on the noncommutative torus; `D² = Δ ⊗ 1₂` with
    /// `Δ e_{m,n} = (m² + n²) e_{m,n}`.
    pub fn nc_torus() -> Self {
        Self {
            name: "nc_torus".into(),
            repr: Repr::Lattice { kernel_moved: false },
            p: 2,
            count_const: 2.0 * std::f64::consts::PI,
            matrix_mult: NC_TORUS_MATRIX_MULT,
            origin: Origin::Builtin,
        }
    }

    /// `D_ℓ` on `ℓ²(ℕ^ℓ × ℤ)` with `d(γ) = ±(γ₁ + ⋯ + γ_ℓ + |γ_{ℓ+1}|)`, sign from `γ_{ℓ+1}`.
    pub fn sphere_torus(ell: u32) -> Result<Self> {
        if ell < 1 {
            return Err(Error::InvalidParameter(format!("sphere_torus needs ℓ ≥ 1, got {ell}")));
        }
        let l = ell as i64;
        let mults = LevelPoly::new(binomial_poly(l, ell), binomial_poly(l - 1, ell));
        Ok(Self::integer(&format!("sphere_torus({ell})"), mults, ell + 1, 2.0, Origin::Builtin))
    }

    /// `D_eq` on `ℓ²(ℕ^ℓ × ℤ × ℕ^ℓ)` with `|d_γ| = Σ|γ_i|`; positive when
    /// `γ_{ℓ+2} = ⋯ = γ_{2ℓ+1} = 0` and `γ_{ℓ+1} ≥ 0`.
    pub fn sphere_eq(ell: u32) -> Result<Self> {
        if ell < 1 {
            return Err(Error::InvalidParameter(format!("sphere_eq needs ℓ ≥ 1, got {ell}")));
        }
        let l = ell as i64;
        let total = binomial_poly(2 * l - 1, 2 * ell - 1).add(&binomial_poly(2 * l - 1, 2 * ell).scale(&BigRational::from_integer(2.into())));
        let plus = binomial_poly(l, ell);
        let minus = total.add(&plus.scale(&BigRational::from_integer((-1).into())));
        let mults = LevelPoly::new(plus, minus);
        Ok(Self::integer(&format!("sphere_eq({ell})"), mults, 2 * ell + 1, 2.0, Origin::Builtin))
    }

    /// Finite spectrum from a JSON description `{levels:[{v,mp,mm}], p, C, kernel_dim}`.
    pub fn from_custom_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let levels = v
            .get("levels")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("custom model needs a `levels` array".into()))?;
        let mut table = Vec::with_capacity(levels.len());
        for l in levels {
            let value = l.get("v").and_then(Value::as_f64).ok_or_else(|| Error::Parse("level needs `v`".into()))?;
            let mp = l.get("mp").and_then(Value::as_u64).ok_or_else(|| Error::Parse("level needs integer `mp`".into()))?;
            let mm = l.get("mm").and_then(Value::as_u64).ok_or_else(|| Error::Parse("level needs integer `mm`".into()))?;
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::Parse(format!("level value {value} must be finite and nonnegative")));
            }
            table.push(TableLevel { value, mult_plus: mp, mult_minus: mm });
        }
        if table.windows(2).any(|w| w[1].value <= w[0].value) {
            return Err(Error::Parse("level values must be strictly increasing".into()));
        }
        let p = v.get("p").and_then(Value::as_u64).ok_or_else(|| Error::Parse("custom model needs integer `p`".into()))?;
        let count_const = v.get("C").and_then(Value::as_f64).unwrap_or(1.0);
        let name = v.get("name").and_then(Value::as_str).unwrap_or("custom").to_string();
        let model = Self {
            name,
            repr: Repr::Table(table),
            p: p as u32,
            count_const,
            matrix_mult: 1,
            origin: Origin::Custom,
        };
        if let Some(k) = v.get("kernel_dim") {
            let declared = k.as_u64().ok_or_else(|| Error::Parse("`kernel_dim` must be an integer".into()))?;
            if declared != model.kernel_dim() {
                return Err(Error::Parse(format!(
                    "declared kernel_dim {declared} disagrees with the zero level multiplicity {}",
                    model.kernel_dim()
                )));
            }
        }
        Ok(model)
    }

    fn integer(name: &str, mults: LevelPoly, p: u32, c: f64, origin: Origin) -> Self {
        Self {
            name: name.into(),
            repr: Repr::Integer(mults),
            p,
            count_const: c,
            matrix_mult: 1,
            origin,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    /// Constant `C` in the counting bound `N(λ) ≤ C (1+λ)^p`.
    pub fn count_const(&self) -> f64 {
        self.count_const
    }

    pub fn matrix_mult(&self) -> u32 {
        self.matrix_mult
    }

    pub fn origin(&self) -> &Origin {
        &self.origin
    }

    pub fn level_kind(&self) -> LevelKind {
        match self.repr {
            Repr::Integer(_) => LevelKind::Integer,
            Repr::Lattice { .. } => LevelKind::Lattice,
            Repr::Table(_) => LevelKind::Table,
        }
    }

    /// Multiplicity data of an integer-level model.
    pub fn multiplicities(&self) -> Option<&LevelPoly> {
        match &self.repr {
            Repr::Integer(m) => Some(m),
            _ => None,
        }
    }

    pub fn table(&self) -> Option<&[TableLevel]> {
        match &self.repr {
            Repr::Table(t) => Some(t),
            _ => None,
        }
    }

    pub fn kernel_dim(&self) -> u64 {
        match &self.repr {
            Repr::Integer(m) => m.level_zero_total().to_integer().to_u64().unwrap_or(0),
            Repr::Lattice { kernel_moved } => {
                if *kernel_moved {
                    0
                } else {
                    self.matrix_mult as u64
                }
            }
            Repr::Table(t) => t
                .iter()
                .find(|l| l.value == 0.0)
                .map_or(0, |l| l.mult_plus + l.mult_minus),
        }
    }

    /// Kernel dimension of the model before any kernel adjustment.
    pub fn original_kernel_dim(&self) -> u64 {
        match &self.origin {
            Origin::KernelAdjusted { base } => base.kernel_dim(),
            _ => self.kernel_dim(),
        }
    }

    pub fn is_kernel_adjusted(&self) -> bool {
        matches!(self.origin, Origin::KernelAdjusted { .. })
    }

    /// Eigenvalue of `|D|` at level index `k`.
    pub fn level_value(&self, k: u64) -> f64 {
        match &self.repr {
            Repr::Integer(_) => k as f64,
            Repr::Lattice { .. } => (k as f64).sqrt(),
            Repr::Table(t) => t.get(k as usize).map_or(f64::INFINITY, |l| l.value),
        }
    }

    /// Level `k` with its multiplicities, or `None` if it is empty (or past a finite table).
    pub fn level(&self, k: u64) -> Result<Option<Level>> {
        let (mp, mm) = match &self.repr {
            Repr::Integer(m) => {
                let (p, q) = m.at(k);
                (to_count(&p, k)?, to_count(&q, k)?)
            }
            Repr::Lattice { kernel_moved } => {
                let r = r2(k) as u128 * self.matrix_mult as u128 / 2;
                let kernel = self.matrix_mult as u128;
                match (k, kernel_moved) {
                    (0, false) => (kernel, 0),
                    (0, true) => (0, 0),
                    (1, true) => (r + kernel, r),
                    _ => (r, r),
                }
            }
            Repr::Table(t) => match t.get(k as usize) {
                Some(l) => (l.mult_plus as u128, l.mult_minus as u128),
                None => return Ok(None),
            },
        };
        if mp == 0 && mm == 0 {
            return Ok(None);
        }
        Ok(Some(Level {
            index: k,
            value: self.level_value(k),
            mult_plus: mp,
            mult_minus: mm,
        }))
    }

    /// Nonempty levels with index `≤ max_index`, in increasing value order.
    pub fn levels_upto(&self, max_index: u64) -> Result<Vec<Level>> {
        let mut out = Vec::new();
        for k in 0..=max_index {
            if let Some(l) = self.level(k)? {
                out.push(l);
            }
        }
        Ok(out)
    }

    /// Counting function `N(λ) = Σ_{value ≤ λ} mult`.
    pub fn counting(&self, lambda: f64) -> Result<u128> {
        let max_index = match self.repr {
            Repr::Integer(_) => lambda.floor() as u64,
            Repr::Lattice { .. } => (lambda * lambda).floor() as u64,
            Repr::Table(ref t) => t.len() as u64,
        };
        let mut n = 0u128;
        for l in self.levels_upto(max_index)? {
            if l.value <= lambda {
                n = n
                    .checked_add(l.total())
                    .ok_or(Error::EnumerationOverflow { level: l.index, bound: u128::MAX })?;
            }
        }
        Ok(n)
    }

    /// `D' = D + P`: the kernel is moved to eigenvalue 1 with sign `+`.
    pub fn kernel_adjust(&self) -> KernelAdjusted {
        if self.kernel_dim() == 0 {
            return KernelAdjusted {
                model: self.clone(),
                warning: Some(format!("model `{}` has no kernel; returned unchanged", self.name)),
            };
        }
        let repr = match &self.repr {
            Repr::Integer(m) => {
                let (p0, m0) = m.at(0);
                let mut moved = m.clone();
                moved.add_correction(0, -p0.clone(), -m0.clone());
                moved.add_correction(1, p0 + m0, BigRational::zero());
                Repr::Integer(moved)
            }
            Repr::Lattice { .. } => Repr::Lattice { kernel_moved: true },
            Repr::Table(t) => Repr::Table(move_table_kernel(t, |l| (l.mult_plus + l.mult_minus, 0))),
        };
        KernelAdjusted {
            model: Self {
                name: format!("kadj({})", self.name),
                repr,
                p: self.p,
                count_const: self.count_const,
                matrix_mult: self.matrix_mult,
                origin: Origin::KernelAdjusted { base: Box::new(self.clone()) },
            },
            warning: None,
        }
    }

    /// Model of `D'` (unchanged when there is no kernel).
    pub fn adjusted(&self) -> SpectralModel {
        self.kernel_adjust().model
    }

    pub fn suspend(&self) -> Result<Self> {
        self.suspend_tagged(SuspensionTag::Suspension)
    }

    pub fn amplify(&self) -> Result<Self> {
        self.suspend_tagged(SuspensionTag::Amplification)
    }

    /// Spectral effect of `(F ⊗ 1)(|D| ⊗ 1 + 1 ⊗ N)`: level `v` collects all
    /// `(j, n)` with `j + n = v`, keeping the sign of `D` at level `j`.
    fn suspend_tagged(&self, tag: SuspensionTag) -> Result<Self> {
        let mults = match &self.repr {
            Repr::Integer(m) => m,
            _ => return Err(Error::LatticeSuspension),
        };
        let prefix = match tag {
            SuspensionTag::Suspension => "qds",
            SuspensionTag::Amplification => "amp",
        };
        Ok(Self {
            name: format!("{prefix}({})", self.name),
            repr: Repr::Integer(mults.partial_sums()),
            p: self.p + 1,
            count_const: self.count_const,
            matrix_mult: self.matrix_mult,
            origin: Origin::Suspended { base: Box::new(self.clone()), tag },
        })
    }

    /// `ℓ`-fold suspension.
    pub fn iterate(&self, ell: u32) -> Result<Self> {
        let mut m = self.clone();
        for _ in 0..ell {
            m = m.suspend()?;
        }
        Ok(m)
    }

    /// Weight `(W₊(k), W₋(k))` of `obs` at level index `k`.
    pub fn level_weight(&self, obs: &Observable, k: u64) -> Result<(f64, f64)> {
        let w = resolve_weights(self, obs)?;
        match w {
            Weights::Integer(lp) => {
                let (p, m) = lp.at(k);
                if p.numer().bits() > 1000 || m.numer().bits() > 1000 {
                    return Err(Error::EnumerationOverflow { level: k, bound: u128::MAX });
                }
                Ok((rational_to_f64(&p), rational_to_f64(&m)))
            }
            Weights::Lattice(lw) => Ok(lw.shell_weight(k)),
            Weights::Table(t) => Ok(t.get(k as usize).map_or((0.0, 0.0), |l| (l.1, l.2))),
        }
    }

    /// `Tr(P b P)`: the weight of `obs` on `ker D`. For a kernel-adjusted model
    /// this is the weight that was moved to eigenvalue 1.
    pub fn kernel_weight(&self, obs: &Observable) -> Result<f64> {
        match &self.origin {
            Origin::KernelAdjusted { base } => base.kernel_weight(obs),
            _ => {
                if self.kernel_dim() == 0 {
                    return Ok(0.0);
                }
                let (p, m) = match self.level_kind() {
                    LevelKind::Table => {
                        let idx = self.table().unwrap().iter().position(|l| l.value == 0.0).unwrap();
                        self.level_weight(obs, idx as u64)?
                    }
                    _ => self.level_weight(obs, 0)?,
                };
                Ok(p + m)
            }
        }
    }

    /// Exact kernel weight for integer-level models.
    pub fn kernel_weight_exact(&self, obs: &Observable) -> Result<Option<BigRational>> {
        match &self.origin {
            Origin::KernelAdjusted { base } => base.kernel_weight_exact(obs),
            _ => match resolve_weights(self, obs)? {
                Weights::Integer(lp) => Ok(Some(lp.level_zero_total())),
                _ => Ok(None),
            },
        }
    }

    /// Summability exponent of the pair: `τ_p(t) = t^p Tr(b e^{-t|D|})` stays bounded.
    pub fn pair_dimension(&self, obs: &Observable) -> u32 {
        match obs.degree_offset() {
            None => 0,
            Some(q) => self.p + q,
        }
    }

    pub fn to_json(&self) -> Value {
        let kind = match self.level_kind() {
            LevelKind::Integer => "integer-levels",
            LevelKind::Lattice => "lattice-levels",
            LevelKind::Table => "table",
        };
        let origin = match &self.origin {
            Origin::Builtin => json!("builtin"),
            Origin::Custom => json!("custom"),
            Origin::Suspended { base, tag } => json!({
                "kind": match tag { SuspensionTag::Suspension => "suspension", SuspensionTag::Amplification => "amplification" },
                "base": base.name(),
            }),
            Origin::KernelAdjusted { base } => json!({"kind": "kernel-adjusted", "base": base.name(), "original_kernel_dim": base.kernel_dim()}),
        };
        json!({
            "name": self.name,
            "level_kind": kind,
            "p": self.p,
            "C": self.count_const,
            "kernel_dim": self.kernel_dim(),
            "matrix_mult": self.matrix_mult,
            "kernel_sign": "+",
            "origin": origin,
        })
    }
}

fn to_count(q: &BigRational, level: u64) -> Result<u128> {
    if !q.is_integer() || q < &BigRational::zero() {
        return Err(Error::InvalidParameter(format!("multiplicity {q} at level {level} is not a nonnegative integer")));
    }
    q.to_integer()
        .to_u128()
        .ok_or(Error::EnumerationOverflow { level, bound: u128::MAX })
}

fn move_table_kernel<F: Fn(&TableLevel) -> (u64, u64)>(t: &[TableLevel], weight: F) -> Vec<TableLevel> {
    let mut out: Vec<TableLevel> = Vec::with_capacity(t.len() + 1);
    let mut moved = (0, 0);
    for l in t {
        if l.value == 0.0 {
            moved = weight(l);
        } else {
            out.push(l.clone());
        }
    }
    match out.iter_mut().find(|l| l.value == 1.0) {
        Some(l) => {
            l.mult_plus += moved.0;
            l.mult_minus += moved.1;
        }
        None => {
            let pos = out.iter().position(|l| l.value > 1.0).unwrap_or(out.len());
            out.insert(pos, TableLevel { value: 1.0, mult_plus: moved.0, mult_minus: moved.1 });
        }
    }
    out
}

/// Number of `(m, n) ∈ ℤ²` with `m² + n² = k`.
pub fn r2(k: u64) -> u64 {
    if k == 0 {
        return 1;
    }
    let mut count = 0;
    let mut m = 0u64;
    while m * m <= k {
        let rest = k - m * m;
        let n = isqrt(rest);
        if n * n == rest {
            // (±m, ±n), without double counting zeros.
            count += match (m == 0, n == 0) {
                (true, true) => 1,
                (true, false) | (false, true) => 2,
                (false, false) => 4,
            };
        }
        m += 1;
    }
    count
}

pub(crate) fn isqrt(x: u64) -> u64 {
    let mut r = (x as f64).sqrt() as u64;
    while r * r > x {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= x {
        r += 1;
    }
    r
}

/// Per-point weight of a lattice observable: `coef · m^a n^b (m² + n²)^{j/2}`,
/// with a fraction `plus_frac` of it on the positive eigenspace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct PointWeight {
    pub coef: f64,
    pub plus_frac: f64,
    pub a: u32,
    pub b: u32,
    pub j: u32,
}

impl PointWeight {
    pub fn at(&self, m: i64, n: i64) -> f64 {
        let (mf, nf) = (m as f64, n as f64);
        let mut w = self.coef * mf.powi(self.a as i32) * nf.powi(self.b as i32);
        if self.j > 0 {
            w *= (mf * mf + nf * nf).sqrt().powi(self.j as i32);
        }
        w
    }

    pub fn degree(&self) -> u32 {
        self.a + self.b + self.j
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LatticeWeights {
    pub point: Option<PointWeight>,
    /// Weight on `(0,0)`, split `(plus, minus)`.
    pub origin: (f64, f64),
    /// Whether the origin weight sits at eigenvalue 1 (kernel-adjusted).
    pub origin_moved: bool,
    /// Extra finitely supported shell weights `(shell, plus, minus)`, shell ≥ 1.
    pub shells: Vec<(u64, f64, f64)>,
}

impl LatticeWeights {
    pub fn shell_weight(&self, k: u64) -> (f64, f64) {
        let (mut p, mut m) = (0.0, 0.0);
        if k > 0 {
            if let Some(pw) = &self.point {
                let mut s = 0.0;
                let r = isqrt(k) as i64;
                for a in -r..=r {
                    let rest = k as i64 - a * a;
                    let b = isqrt(rest as u64) as i64;
                    if b * b == rest {
                        s += pw.at(a, b);
                        if b != 0 {
                            s += pw.at(a, -b);
                        }
                    }
                }
                p += s * pw.plus_frac;
                m += s * (1.0 - pw.plus_frac);
            }
        }
        let origin_level = if self.origin_moved { 1 } else { 0 };
        if k == origin_level {
            p += self.origin.0;
            m += self.origin.1;
        }
        for &(s, wp, wm) in &self.shells {
            if s == k {
                p += wp;
                m += wm;
            }
        }
        (p, m)
    }
}

/// Observable weights resolved against a model, in the form the summation routines consume.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Weights {
    Integer(LevelPoly),
    Lattice(LatticeWeights),
    /// `(value, W₊, W₋)` per level.
    Table(Vec<(f64, f64, f64)>),
}

fn mismatch(model: &SpectralModel, obs: &Observable) -> Error {
    Error::ObservableMismatch {
        model: model.name().to_string(),
        observable: obs.to_string(),
    }
}

pub(crate) fn resolve_weights(model: &SpectralModel, obs: &Observable) -> Result<Weights> {
    if let Origin::KernelAdjusted { base } = &model.origin {
        return Ok(match resolve_weights(base, obs)? {
            Weights::Integer(lp) => Weights::Integer(lp.move_zero_to_one()),
            Weights::Lattice(mut lw) => {
                lw.origin_moved = true;
                Weights::Lattice(lw)
            }
            Weights::Table(t) => {
                let mut moved = (0.0, 0.0);
                let mut out: Vec<(f64, f64, f64)> = Vec::with_capacity(t.len() + 1);
                for l in t {
                    if l.0 == 0.0 {
                        moved = (l.1 + l.2, 0.0);
                    } else {
                        out.push(l);
                    }
                }
                match out.iter_mut().find(|l| l.0 == 1.0) {
                    Some(l) => {
                        l.1 += moved.0;
                        l.2 += moved.1;
                    }
                    None => {
                        let pos = out.iter().position(|l| l.0 > 1.0).unwrap_or(out.len());
                        out.insert(pos, (1.0, moved.0, moved.1));
                    }
                }
                Weights::Table(out)
            }
        });
    }
    match &model.repr {
        Repr::Integer(mults) => integer_weights(model, mults, obs).map(Weights::Integer),
        Repr::Lattice { .. } => lattice_weights(model, obs).map(Weights::Lattice),
        Repr::Table(t) => table_weights(model, t, obs).map(Weights::Table),
    }
}

fn integer_weights(model: &SpectralModel, mults: &LevelPoly, obs: &Observable) -> Result<LevelPoly> {
    Ok(match obs {
        Observable::Identity => mults.clone(),
        Observable::SignProjection(s) => mults.sign_part(*s == Sign::Plus),
        Observable::AbsPower(j) => mults.times_power(*j),
        Observable::Diagonal(entries) => {
            let mut lp = LevelPoly::default();
            for e in entries {
                lp.add_correction(e.level, e.plus.clone(), e.minus.clone());
            }
            lp
        }
        Observable::LatticeMonomial { .. } => return Err(mismatch(model, obs)),
        Observable::Suspended(s) => {
            let Origin::Suspended { base, .. } = &model.origin else {
                return Err(mismatch(model, obs));
            };
            match s {
                SuspendedObservable::Tensor { base: b, factor } => match resolve_weights(base, b)? {
                    Weights::Integer(lp) => lp.convolve_finite(factor),
                    _ => return Err(mismatch(model, obs)),
                },
                SuspendedObservable::Upper { mean } => mults.sign_part(true).scale(mean),
                SuspendedObservable::Lower { mean } => mults.sign_part(false).scale(mean),
            }
        }
    })
}

fn lattice_weights(model: &SpectralModel, obs: &Observable) -> Result<LatticeWeights> {
    let mm = model.matrix_mult as f64;
    let point = |coef: f64, plus_frac: f64, a: u32, b: u32, j: u32| {
        Some(PointWeight { coef, plus_frac, a, b, j })
    };
    let (point, origin, shells) = match obs {
        Observable::Identity => (point(mm, 0.5, 0, 0, 0), (mm, 0.0), vec![]),
        Observable::SignProjection(Sign::Plus) => (point(mm / 2.0, 1.0, 0, 0, 0), (mm, 0.0), vec![]),
        Observable::SignProjection(Sign::Minus) => (point(mm / 2.0, 0.0, 0, 0, 0), (0.0, 0.0), vec![]),
        Observable::AbsPower(j) => {
            let origin = if *j == 0 { (mm, 0.0) } else { (0.0, 0.0) };
            (point(mm, 0.5, 0, 0, *j), origin, vec![])
        }
        Observable::LatticeMonomial { a, b } => {
            let origin = if *a == 0 && *b == 0 { (mm, 0.0) } else { (0.0, 0.0) };
            (point(mm, 0.5, *a, *b, 0), origin, vec![])
        }
        Observable::Diagonal(entries) => {
            let mut origin = (0.0, 0.0);
            let mut shells = Vec::new();
            for e in entries {
                let (p, m) = (rational_to_f64(&e.plus), rational_to_f64(&e.minus));
                if e.level == 0 {
                    origin.0 += p;
                    origin.1 += m;
                } else {
                    shells.push((e.level, p, m));
                }
            }
            (None, origin, shells)
        }
        Observable::Suspended(_) => return Err(mismatch(model, obs)),
    };
    Ok(LatticeWeights { point, origin, origin_moved: false, shells })
}

fn table_weights(model: &SpectralModel, t: &[TableLevel], obs: &Observable) -> Result<Vec<(f64, f64, f64)>> {
    let out = match obs {
        Observable::Identity => t.iter().map(|l| (l.value, l.mult_plus as f64, l.mult_minus as f64)).collect(),
        Observable::SignProjection(s) => t
            .iter()
            .map(|l| match s {
                Sign::Plus => (l.value, l.mult_plus as f64, 0.0),
                Sign::Minus => (l.value, 0.0, l.mult_minus as f64),
            })
            .collect(),
        Observable::AbsPower(j) => t
            .iter()
            .map(|l| {
                let f = l.value.powi(*j as i32);
                (l.value, l.mult_plus as f64 * f, l.mult_minus as f64 * f)
            })
            .collect(),
        Observable::Diagonal(entries) => {
            let mut out: Vec<(f64, f64, f64)> = t.iter().map(|l| (l.value, 0.0, 0.0)).collect();
            for e in entries {
                let slot = out
                    .get_mut(e.level as usize)
                    .ok_or_else(|| Error::InvalidParameter(format!("level {} outside the table", e.level)))?;
                slot.1 += rational_to_f64(&e.plus);
                slot.2 += rational_to_f64(&e.minus);
            }
            out
        }
        _ => return Err(mismatch(model, obs)),
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn total(m: &SpectralModel, k: u64) -> u128 {
        m.level(k).unwrap().map_or(0, |l| l.total())
    }

    #[test]
    fn circle_levels() {
        let c = SpectralModel::circle();
        assert_eq!(total(&c, 3), 2);
        assert_eq!(c.kernel_dim(), 1);
        assert_eq!(c.level(0).unwrap().unwrap().mult_plus, 1);
        assert_eq!(c.level_weight(&Observable::Identity, 2).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn sphere_torus_one_at_two() {
        assert_eq!(total(&SpectralModel::sphere_torus(1).unwrap(), 2), 5);
        assert!(SpectralModel::sphere_torus(0).is_err());
    }

    #[test]
    fn nc_torus_shells() {
        assert_eq!(r2(5), 8);
        assert_eq!(r2(0), 1);
        assert_eq!(r2(3), 0);
        assert_eq!(r2(25), 12);
        let t = SpectralModel::nc_torus();
        assert_eq!(t.kernel_dim(), 2);
        let (p, m) = t.level_weight(&Observable::LatticeMonomial { a: 2, b: 0 }, 2).unwrap();
        assert_eq!(p + m, 8.0);
        assert!(t.level(3).unwrap().is_none());
    }

    #[test]
    fn kernel_adjustment() {
        let c = SpectralModel::circle().adjusted();
        assert_eq!(total(&c, 1), 3);
        assert_eq!(c.kernel_dim(), 0);
        assert_eq!(c.original_kernel_dim(), 1);
        let n = SpectralModel::number_op().adjusted();
        assert_eq!(total(&n, 1), 2);
        let twice = c.kernel_adjust();
        assert!(twice.warning.is_some());
        assert_eq!(twice.model, c);
    }

    #[test]
    fn rank_one_projection_weight() {
        let n = SpectralModel::number_op();
        assert_eq!(n.level_weight(&Observable::rank_one(0), 0).unwrap(), (1.0, 0.0));
        assert_eq!(n.pair_dimension(&Observable::rank_one(0)), 0);
    }

    #[test]
    fn custom_table() {
        let m = SpectralModel::from_custom_json(r#"{"levels":[{"v":0,"mp":1,"mm":0},{"v":1.5,"mp":2,"mm":1}],"p":1,"C":3,"kernel_dim":1}"#).unwrap();
        assert_eq!(m.kernel_dim(), 1);
        assert_eq!(m.level(1).unwrap().unwrap().value, 1.5);
        let a = m.adjusted();
        assert_eq!(a.table().unwrap()[0].value, 1.0);
        assert!(SpectralModel::from_custom_json(r#"{"levels":[{"v":1,"mp":1,"mm":0}],"p":1,"kernel_dim":2}"#).is_err());
    }

    #[test]
    fn lattice_suspension_rejected() {
        assert_eq!(SpectralModel::nc_torus().suspend().unwrap_err(), Error::LatticeSuspension);
    }
}
