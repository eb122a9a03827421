//! Quantum double suspension on spectral data: `Σ²(D) = (F⊗1)(|D|⊗1 + 1⊗N)`,
//! heat expansions of suspended observables, and dimension spectra.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::expansion::{exp_expansion, geometric_expansion, Coefficient, LaurentExpansion};
use crate::spectrum::{Observable, Origin, Sign, SpectralModel, SuspendedObservable};
use crate::trace::closed_form_expansion;
use crate::zeta::{zeta_data, ZetaData, RESIDUE_TOL};

pub fn suspend(model: &SpectralModel) -> Result<SpectralModel> {
    model.suspend()
}

pub fn amplify(model: &SpectralModel) -> Result<SpectralModel> {
    model.amplify()
}

pub fn iterate(model: &SpectralModel, ell: u32) -> Result<SpectralModel> {
    model.iterate(ell)
}

/// `t/(1 - e^{-t})` through `t^order`.
fn shifted_geometric(order: u32) -> LaurentExpansion {
    geometric_expansion(order).shift_power(1)
}

/// Expansion through `t^order` of `τ_{p'}` for a suspended observable, built
/// from expansions of the base model: `Tr(b⊗k e^{-t|Σ²D|}) = Tr(b e^{-t|D|}) Tr(k e^{-tN})`
/// and `Tr(P⊗σ(f) …) = (∫f) Tr(P e^{-t|D|}) / (1 - e^{-t})`.
///
/// `model` may be the base model or its suspension; `p'` is the pair
/// dimension on the suspended model.
pub fn suspended_trace_expansion(model: &SpectralModel, sobs: &SuspendedObservable, order: u32) -> Result<LaurentExpansion> {
    let (base, suspended) = match model.origin() {
        Origin::Suspended { base, .. } => ((**base).clone(), model.clone()),
        _ => (model.clone(), model.suspend()?),
    };
    let obs = Observable::Suspended(sobs.clone());
    let target = suspended.pair_dimension(&obs) as i32;
    let n = order as i32;
    let out = match sobs {
        SuspendedObservable::Tensor { base: b, factor } => {
            let pb = base.pair_dimension(b) as i32;
            let trace_b = closed_form_expansion(&base, b, n)?.shift_power(-pb);
            let mut trace_k = LaurentExpansion::zero().truncate(n)?;
            for (level, w) in factor {
                let lambda = BigRational::from_integer(BigInt::from(*level));
                trace_k = trace_k.add(&exp_expansion(&lambda, order).scale_rational(w))?;
            }
            let product = trace_b.mul(&trace_k)?.shift_power(target);
            truncate_padded(&product, n)?
        }
        SuspendedObservable::Upper { mean } | SuspendedObservable::Lower { mean } => {
            let sign = match sobs {
                SuspendedObservable::Upper { .. } => Sign::Plus,
                _ => Sign::Minus,
            };
            let proj = closed_form_expansion(&base, &Observable::SignProjection(sign), n)?;
            proj.mul(&shifted_geometric(order))?.scale_rational(mean)
        }
    };
    truncate_padded(&out, n)
}

/// Truncate to `order`, keeping a leading order of at most 0.
fn truncate_padded(e: &LaurentExpansion, order: i32) -> Result<LaurentExpansion> {
    if e.leading_order() > order {
        return LaurentExpansion::zero().truncate(order);
    }
    e.truncate(order)
}

/// Points of the dimension spectrum with the residue of each observable.
#[derive(Debug, Clone, PartialEq)]
pub struct DimensionSpectrum {
    pub model: String,
    pub points: BTreeSet<u32>,
    pub per_observable: Vec<(String, ZetaData)>,
}

impl DimensionSpectrum {
    /// Residue of the first observable at `k`, if it has a pole there.
    pub fn residue(&self, k: u32) -> Option<&Coefficient> {
        self.per_observable.first().and_then(|(_, d)| d.poles.get(&k))
    }

    pub fn max_pole(&self) -> Option<u32> {
        self.points.iter().next_back().copied()
    }

    pub fn to_json(&self) -> Value {
        let per: serde_json::Map<String, Value> = self
            .per_observable
            .iter()
            .map(|(name, d)| {
                let poles: serde_json::Map<String, Value> =
                    d.poles.iter().map(|(k, r)| (k.to_string(), r.to_json())).collect();
                (name.clone(), json!({"p": d.p, "residues": poles, "zeta_at_zero": d.value_at_zero.to_json()}))
            })
            .collect();
        json!({
            "model": self.model,
            "dimension_spectrum": self.points.iter().collect::<Vec<_>>(),
            "observables": per,
        })
    }
}

fn is_pole(c: &Coefficient, tol: f64) -> bool {
    match c {
        Coefficient::Rational(q) => !q.is_zero(),
        Coefficient::Float(f) => f.value.abs() > tol,
    }
}

/// Union over `observables` of `{k : Res_{s=k} ζ_b ≠ 0}` (exact residues) or
/// `|Res| > tol` (float residues).
pub fn dimension_spectrum(model: &SpectralModel, observables: &[Observable], tol: Option<f64>) -> Result<DimensionSpectrum> {
    if observables.is_empty() {
        return Err(Error::InvalidParameter("at least one observable is needed".into()));
    }
    let tol = tol.unwrap_or(RESIDUE_TOL);
    let mut points = BTreeSet::new();
    let mut per_observable = Vec::with_capacity(observables.len());
    for obs in observables {
        let mut data = zeta_data(model, obs)?;
        data.poles.retain(|_, r| is_pole(r, tol));
        points.extend(data.poles.keys().copied());
        per_observable.push((obs.to_string(), data));
    }
    Ok(DimensionSpectrum { model: model.name().to_string(), points, per_observable })
}

/// Residues keyed by pole, as `f64`, for reports and comparisons.
pub fn residues_f64(d: &ZetaData) -> BTreeMap<u32, f64> {
    d.poles.iter().map(|(k, r)| (*k, r.to_f64())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::rat;

    #[test]
    fn qds_circle_identity_expansion() {
        let m = SpectralModel::circle().suspend().unwrap();
        let e = closed_form_expansion(&m, &Observable::Identity, 2).unwrap();
        let want = LaurentExpansion::from_fractions(0, &[(2, 1), (1, 1), (1, 3)], crate::expansion::Remainder::PowerLaw).unwrap();
        assert_eq!(e, want);
    }

    #[test]
    fn upper_kind_matches_direct_weights() {
        let m = SpectralModel::circle().suspend().unwrap();
        let sobs = SuspendedObservable::Upper { mean: rat(3, 2) };
        let via_product = suspended_trace_expansion(&SpectralModel::circle(), &sobs, 4).unwrap();
        let direct = closed_form_expansion(&m, &Observable::Suspended(sobs), 4).unwrap();
        assert_eq!(via_product, direct);
    }

    #[test]
    fn tensor_kind_matches_direct_weights() {
        let base = SpectralModel::number_op();
        let sobs = SuspendedObservable::Tensor {
            base: Box::new(Observable::AbsPower(1)),
            factor: vec![(0, rat(1, 1)), (2, rat(-1, 3))],
        };
        let via_product = suspended_trace_expansion(&base, &sobs, 5).unwrap();
        let direct = closed_form_expansion(&base.suspend().unwrap(), &Observable::Suspended(sobs), 5).unwrap();
        assert_eq!(via_product, direct);
    }

    #[test]
    fn vanishing_mean_gives_zero() {
        let e = suspended_trace_expansion(&SpectralModel::circle(), &SuspendedObservable::Lower { mean: rat(0, 1) }, 3).unwrap();
        assert!(e.terms().iter().all(|(_, c)| c.is_zero()));
    }

    #[test]
    fn circle_and_qds_circle_spectra() {
        let d = dimension_spectrum(&SpectralModel::circle(), &[Observable::Identity], None).unwrap();
        assert_eq!(d.points.iter().copied().collect::<Vec<_>>(), vec![1]);
        assert_eq!(d.residue(1), Some(&Coefficient::Rational(rat(2, 1))));
        let d = dimension_spectrum(&SpectralModel::circle().suspend().unwrap(), &[Observable::Identity], None).unwrap();
        assert_eq!(d.points.iter().copied().collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(d.residue(1), Some(&Coefficient::Rational(rat(1, 1))));
        assert_eq!(d.residue(2), Some(&Coefficient::Rational(rat(2, 1))));
    }
}
