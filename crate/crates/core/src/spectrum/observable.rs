use std::fmt;

use num_rational::BigRational;
use num_traits::Zero;

/// Sign of `D` selected by a spectral projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrowthClass {
    RapidDecay,
    Polynomial(u32),
    Bounded,
    Projection,
}

/// Weight of a finite diagonal observable on one level, split by sign.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagEntry {
    pub level: u64,
    pub plus: BigRational,
    pub minus: BigRational,
}

/// Observables on a suspended model beyond the plain diagonal ones.
#[derive(Debug, Clone, PartialEq)]
pub enum SuspendedObservable {
    /// `b ⊗ k` with `k = Σ w_n |e_n⟩⟨e_n|` a finite diagonal operator on the number-operator space.
    Tensor {
        base: Box<Observable>,
        factor: Vec<(u64, BigRational)>,
    },
    /// `P ⊗ σ(f)`, entered through the mean `∫ f dθ` of the symbol.
    Upper { mean: BigRational },
    /// `(1 - P) ⊗ σ(g)`.
    Lower { mean: BigRational },
}

/// Diagonal stand-in for an algebra element: a weight per level and sign.
#[derive(Debug, Clone, PartialEq)]
pub enum Observable {
    Identity,
    SignProjection(Sign),
    /// `|D|^j`.
    AbsPower(u32),
    /// Finitely many weighted levels; for lattice models the level is the shell `m² + n²`.
    Diagonal(Vec<DiagEntry>),
    /// Toeplitz-type multiplier `m^a n^b` on the lattice basis `e_{m,n}`.
    LatticeMonomial { a: u32, b: u32 },
    Suspended(SuspendedObservable),
}

impl Observable {
    /// Rank-one projection onto a `+` basis vector at `level`.
    pub fn rank_one(level: u64) -> Self {
        Observable::Diagonal(vec![DiagEntry {
            level,
            plus: BigRational::from_integer(1.into()),
            minus: BigRational::zero(),
        }])
    }

    pub fn growth_class(&self) -> GrowthClass {
        match self {
            Observable::Identity => GrowthClass::Bounded,
            Observable::SignProjection(_) => GrowthClass::Projection,
            Observable::AbsPower(0) => GrowthClass::Bounded,
            Observable::AbsPower(j) => GrowthClass::Polynomial(*j),
            Observable::Diagonal(_) => GrowthClass::RapidDecay,
            Observable::LatticeMonomial { a: 0, b: 0 } => GrowthClass::Bounded,
            Observable::LatticeMonomial { a, b } => GrowthClass::Polynomial(a + b),
            Observable::Suspended(SuspendedObservable::Tensor { base, .. }) => base.growth_class(),
            Observable::Suspended(_) => GrowthClass::Bounded,
        }
    }

    /// Extra powers of `t` needed on top of the model exponent, or `None` for
    /// rapid-decay observables (whose heat traces stay bounded as `t → 0`).
    pub fn degree_offset(&self) -> Option<u32> {
        match self.growth_class() {
            GrowthClass::RapidDecay => None,
            GrowthClass::Polynomial(q) => Some(q),
            GrowthClass::Bounded | GrowthClass::Projection => Some(0),
        }
    }

    pub fn toeplitz_mean(&self) -> Option<&BigRational> {
        match self {
            Observable::Suspended(SuspendedObservable::Upper { mean })
            | Observable::Suspended(SuspendedObservable::Lower { mean }) => Some(mean),
            _ => None,
        }
    }

    /// Whether every weight is nonnegative, so heat traces are positive.
    pub fn is_nonnegative(&self) -> bool {
        match self {
            Observable::Identity | Observable::SignProjection(_) | Observable::AbsPower(_) => true,
            Observable::Diagonal(e) => e.iter().all(|d| d.plus >= BigRational::zero() && d.minus >= BigRational::zero()),
            Observable::LatticeMonomial { a, b } => a % 2 == 0 && b % 2 == 0,
            Observable::Suspended(SuspendedObservable::Tensor { base, factor }) => {
                base.is_nonnegative() && factor.iter().all(|(_, w)| *w >= BigRational::zero())
            }
            Observable::Suspended(SuspendedObservable::Upper { mean })
            | Observable::Suspended(SuspendedObservable::Lower { mean }) => *mean >= BigRational::zero(),
        }
    }
}

fn fmt_factor(f: &mut fmt::Formatter<'_>, entries: &[(u64, BigRational)]) -> fmt::Result {
    for (i, (n, w)) in entries.iter().enumerate() {
        if i > 0 {
            write!(f, ",")?;
        }
        write!(f, "{n}:{w}")?;
    }
    Ok(())
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observable::Identity => write!(f, "id"),
            Observable::SignProjection(Sign::Plus) => write!(f, "pos"),
            Observable::SignProjection(Sign::Minus) => write!(f, "neg"),
            Observable::AbsPower(j) => write!(f, "abs({j})"),
            Observable::Diagonal(entries) => {
                write!(f, "diag(")?;
                for (i, d) in entries.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    if d.minus.is_zero() {
                        write!(f, "{}:{}", d.level, d.plus)?;
                    } else {
                        write!(f, "{}:{}:{}", d.level, d.plus, d.minus)?;
                    }
                }
                write!(f, ")")
            }
            Observable::LatticeMonomial { a, b } => write!(f, "mono({a},{b})"),
            Observable::Suspended(SuspendedObservable::Tensor { base, factor }) => {
                write!(f, "tensor({base};")?;
                fmt_factor(f, factor)?;
                write!(f, ")")
            }
            Observable::Suspended(SuspendedObservable::Upper { mean }) => write!(f, "upper({mean})"),
            Observable::Suspended(SuspendedObservable::Lower { mean }) => write!(f, "lower({mean})"),
        }
    }
}
