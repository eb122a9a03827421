use std::f64::consts::PI;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use proptest::prelude::*;
use whkae_core::expansion::{geometric_expansion, LaurentExpansion, Remainder};
use whkae_core::qds::suspended_trace_expansion;
use whkae_core::spectrum::{Observable, SpectralModel, SuspendedObservable};
use whkae_core::trace::{closed_form_expansion, fit_expansion, heat_trace, KernelKind, TraceSample};
use whkae_core::zeta::{gamma, zeta_continued, zeta_direct, ContinuedZeta, ZetaOptions};

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn integer_builtins() -> Vec<SpectralModel> {
    vec![
        SpectralModel::circle(),
        SpectralModel::number_op(),
        SpectralModel::sphere_torus(1).unwrap(),
        SpectralModel::sphere_torus(2).unwrap(),
        SpectralModel::sphere_torus(3).unwrap(),
        SpectralModel::sphere_eq(1).unwrap(),
        SpectralModel::sphere_eq(2).unwrap(),
    ]
}

/// `Σ_{k∈ℤ} e^{-t²k²}` through its Poisson dual `(√π/t) Σ_n e^{-π²n²/t²}`.
fn theta_dual(t: f64) -> f64 {
    let q = (-(PI / t).powi(2)).exp();
    let mut s = 1.0;
    let mut n = 1;
    loop {
        let term = 2.0 * q.powi(n * n);
        s += term;
        if term < 1e-18 * s {
            break;
        }
        n += 1;
    }
    PI.sqrt() / t * s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn certified_circle_traces(e in -6.0f64..1.0) {
        let t = 2f64.powf(e);
        let m = SpectralModel::circle();
        let s = heat_trace(&m, &Observable::Identity, t, KernelKind::Exponential, 1e-12).unwrap();
        let exact = 1.0 / (t / 2.0).tanh();
        prop_assert!((s.value - exact).abs() <= s.abs_error + 4.0 * f64::EPSILON * exact, "t={t}");
        prop_assert!(s.abs_error <= 1e-12 * exact.max(1.0));

        let g = heat_trace(&m, &Observable::Identity, t, KernelKind::Gaussian, 1e-12).unwrap();
        let exact = theta_dual(t);
        prop_assert!((g.value - exact).abs() <= g.abs_error + 16.0 * f64::EPSILON * exact, "t={t}");
    }

    #[test]
    fn certified_number_operator_trace(e in -6.0f64..1.0) {
        let t = 2f64.powf(e);
        let s = heat_trace(&SpectralModel::number_op(), &Observable::Identity, t, KernelKind::Exponential, 1e-12).unwrap();
        let exact = 1.0 / -(-t).exp_m1();
        prop_assert!((s.value - exact).abs() <= s.abs_error + 4.0 * f64::EPSILON * exact);
    }

    #[test]
    fn suspended_trace_is_a_product(e in -5.0f64..1.0) {
        let t = 2f64.powf(e);
        let base = heat_trace(&SpectralModel::circle(), &Observable::Identity, t, KernelKind::Exponential, 1e-13).unwrap();
        let n = heat_trace(&SpectralModel::number_op(), &Observable::Identity, t, KernelKind::Exponential, 1e-13).unwrap();
        let q = heat_trace(&SpectralModel::circle().suspend().unwrap(), &Observable::Identity, t, KernelKind::Exponential, 1e-13).unwrap();
        let prod = base.value * n.value;
        let bound = base.abs_error * n.value + n.abs_error * base.value + q.abs_error + 4.0 * f64::EPSILON * prod;
        prop_assert!((q.value - prod).abs() <= bound, "{} vs {prod}", q.value);
    }

    #[test]
    fn fit_recovers_polynomial_coefficients(c in proptest::collection::vec(-3.0f64..3.0, 8), p in 0u32..4) {
        let samples: Vec<TraceSample> = (0..14)
            .map(|j| {
                let t = 0.5 * 0.6f64.powi(j);
                let tau: f64 = c.iter().enumerate().map(|(r, a)| a * t.powi(r as i32)).sum();
                let mass: f64 = c.iter().enumerate().map(|(r, a)| (a * t.powi(r as i32)).abs()).sum();
                let scale = t.powi(p as i32);
                let abs_error = 16.0 * f64::EPSILON * mass / scale;
                TraceSample { t, value: tau / scale, abs_error, kernel: KernelKind::Exponential }
            })
            .collect();
        let f = fit_expansion(&samples, p, 3, 1e-7).unwrap();
        for r in 0..=3 {
            let got = f.expansion.coeff_f64(r).unwrap();
            prop_assert!((got - c[r as usize]).abs() < 1e-7, "a{r}: {got} vs {}", c[r as usize]);
        }
    }

    #[test]
    fn gamma_reflection_and_duplication(re in -4.7f64..4.7, im in -3.0f64..3.0) {
        let s = Complex64::new(re, im);
        prop_assume!((s - s.re.round()).norm() > 1e-3);
        let g = |z: Complex64| gamma(z).unwrap();
        let lhs = g(s) * g(1.0 - s);
        let rhs = PI / (s * PI).sin();
        prop_assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm().max(1.0), "{lhs} vs {rhs}");
        prop_assume!((2.0 * s - (2.0 * s.re).round()).norm() > 1e-3);
        let lhs = g(s) * g(s + 0.5);
        let rhs = Complex64::new(2.0, 0.0).powc(1.0 - 2.0 * s) * PI.sqrt() * g(2.0 * s);
        prop_assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm().max(1.0), "{lhs} vs {rhs}");
    }

    #[test]
    fn continuation_agrees_with_direct_sums(which in 0usize..4, dre in 0.5f64..3.0, im in -4.0f64..4.0) {
        let m = [
            SpectralModel::circle(),
            SpectralModel::number_op(),
            SpectralModel::sphere_torus(1).unwrap(),
            SpectralModel::sphere_eq(1).unwrap(),
        ][which].clone();
        let s = Complex64::new(m.p() as f64 + dre, im);
        let c = zeta_continued(&m, &Observable::Identity, s, 1e-10, None).unwrap();
        let d = zeta_direct(&m, &Observable::Identity, s, 1e-12).unwrap();
        prop_assert!((c.value - d.value).norm() <= c.abs_error + d.abs_error, "{} vs {} (±{})", c.value, d.value, c.abs_error);
    }

    #[test]
    fn split_point_does_not_matter(re in -2.5f64..2.5, im in 0.2f64..3.0, split in 0.3f64..2.5) {
        let m = SpectralModel::sphere_torus(1).unwrap();
        let s = Complex64::new(re, im);
        let at = |c: f64| {
            let opts = ZetaOptions { split: c, ..ZetaOptions::default() };
            ContinuedZeta::new(&m, &Observable::Identity, opts).unwrap().eval(s).unwrap()
        };
        let (a, b) = (at(1.0), at(split));
        prop_assert!((a.value - b.value).norm() <= a.abs_error + b.abs_error, "{} vs {}", a.value, b.value);
    }

    #[test]
    fn symbol_traces_scale_with_mean(n in -20i64..20, d in 1i64..9, upper in any::<bool>()) {
        let mean = rat(n, d);
        let make = |mu: BigRational| if upper {
            SuspendedObservable::Upper { mean: mu }
        } else {
            SuspendedObservable::Lower { mean: mu }
        };
        let base = SpectralModel::sphere_torus(1).unwrap();
        let unit = suspended_trace_expansion(&base, &make(rat(1, 1)), 5).unwrap();
        let scaled = suspended_trace_expansion(&base, &make(mean.clone()), 5).unwrap();
        prop_assert!(scaled.agrees_with(&unit.scale_rational(&mean), 0.0));
    }

    #[test]
    fn expansion_algebra(
        a in proptest::collection::vec(-9i64..9, 1..6),
        b in proptest::collection::vec(-9i64..9, 1..6),
        c in proptest::collection::vec(-9i64..9, 1..6),
        la in -2i32..2, lb in -2i32..2,
    ) {
        let mk = |v: &[i64], lead: i32| {
            LaurentExpansion::exact(lead, v.iter().map(|&x| rat(x, 1 + x.abs() % 4)).collect(), Remainder::PowerLaw).unwrap()
        };
        let (x, y, z) = (mk(&a, la), mk(&b, lb), mk(&c, 0));
        prop_assert!(x.mul(&y).unwrap().agrees_with(&y.mul(&x).unwrap(), 0.0));
        let l = x.mul(&y).unwrap().mul(&z).unwrap();
        let r = x.mul(&y.mul(&z).unwrap()).unwrap();
        prop_assert!(l.agrees_with(&r, 0.0));
        let back = x.add(&y).unwrap().sub(&y).unwrap();
        if back.truncation_order() >= x.leading_order() {
            prop_assert!(back.agrees_with(&x.truncate(back.truncation_order()).unwrap(), 0.0));
        }
    }
}

#[test]
fn geometric_series_inverts_one_minus_exp() {
    let g = geometric_expansion(10);
    let e = whkae_core::expansion::one_minus_exp_expansion(12);
    let prod = g.mul(&e).unwrap();
    let want = LaurentExpansion::exact(0, vec![rat(1, 1)], Remainder::PowerLaw).unwrap();
    assert!(prod.agrees_with(&want, 0.0), "{prod:?}");
}

#[test]
fn suspension_accumulates_multiplicities() {
    for m in integer_builtins() {
        let s = m.suspend().unwrap();
        assert_eq!(s.p(), m.p() + 1, "{}", m.name());
        let base = m.levels_upto(40).unwrap();
        let mut acc = (0u128, 0u128);
        for v in 0..=40u64 {
            if let Some(l) = base.iter().find(|l| l.index == v) {
                acc.0 += l.mult_plus;
                acc.1 += l.mult_minus;
            }
            let got = s.level(v).unwrap().map(|l| (l.mult_plus, l.mult_minus)).unwrap_or((0, 0));
            assert_eq!(got, acc, "{} level {v}", s.name());
        }
    }
}

#[test]
fn suspension_raises_the_leading_order() {
    for m in integer_builtins() {
        let s = m.suspend().unwrap();
        let e = closed_form_expansion(&s, &Observable::Identity, 2).unwrap();
        assert_eq!(e.leading_order(), 0, "{}", s.name());
        assert!(e.coeff_f64(0).unwrap().abs() > 1e-6, "{}", s.name());
    }
}

#[test]
fn convolution_coherence() {
    for m in integer_builtins() {
        let n = 6;
        let p = m.p() as i32;
        let base = closed_form_expansion(&m, &Observable::Identity, n).unwrap().shift_power(-p);
        let direct = closed_form_expansion(&m.suspend().unwrap(), &Observable::Identity, n).unwrap();
        let via = base.mul(&geometric_expansion(n as u32 + 1)).unwrap().shift_power(p + 1).truncate(n).unwrap();
        assert!(direct.agrees_with(&via, 0.0), "{}", m.name());
        assert!(direct.exact_coeffs().is_some() && via.exact_coeffs().is_some());
    }
}

#[test]
fn iterated_circle_is_the_sphere_torus() {
    for ell in 1..=3 {
        let a = SpectralModel::circle().iterate(ell).unwrap().levels_upto(50).unwrap();
        let b = SpectralModel::sphere_torus(ell).unwrap().levels_upto(50).unwrap();
        let totals = |v: &[whkae_core::spectrum::Level]| v.iter().map(|l| (l.index, l.total())).collect::<Vec<_>>();
        assert_eq!(totals(&a), totals(&b), "ℓ={ell}");
    }
}
