//! Adaptive Gauss–Kronrod (7/15) quadrature for complex integrands whose
//! values carry their own error bounds.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::par;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_EVALS: usize = 200_000;

/// Integral with a bound `err` that covers both the discretisation estimate
/// and the propagated error of the integrand values.
#[derive(Debug, Clone, Copy, Default)]
pub struct Quad {
    pub value: Complex64,
    pub err: f64,
    pub evals: usize,
}

fn rule<F>(f: &F, a: f64, b: f64, parallel: bool) -> Result<(Complex64, f64, f64, f64)>
where
    F: Fn(f64) -> Result<(Complex64, f64)> + Sync,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let nodes: Vec<f64> = (0..15)
        .map(|i| if i < 7 { c - h * XGK[i] } else if i == 7 { c } else { c + h * XGK[14 - i] })
        .collect();
    let vals = par::map_indexed(15, parallel, |i| f(nodes[i]));
    let mut fv = Vec::with_capacity(15);
    for v in vals {
        fv.push(v?);
    }
    let w = |i: usize| if i <= 7 { i } else { 14 - i };
    let mut kron = Complex64::new(0.0, 0.0);
    let mut gauss = Complex64::new(0.0, 0.0);
    let mut prop = 0.0;
    let mut noise = 0.0;
    for (i, (v, e)) in fv.iter().enumerate() {
        let k = w(i);
        let wg = if k % 2 == 1 { WG[k / 2] } else { 0.0 };
        kron += WGK[k] * v;
        gauss += wg * v;
        prop += WGK[k] * e;
        noise += (WGK[k] - wg).abs() * e + 64.0 * f64::EPSILON * (WGK[k] + wg) * v.norm();
    }
    let h = h.abs();
    Ok((kron * h, ((kron - gauss) * h).norm(), prop * h, noise * h))
}

/// `∫_a^b f`, bisecting until the Kronrod–Gauss difference on every piece
/// is below its share of `tol` or below the noise carried by the integrand values.
pub fn integrate<F>(f: &F, a: f64, b: f64, tol: f64, parallel: bool) -> Result<Quad>
where
    F: Fn(f64) -> Result<(Complex64, f64)> + Sync,
{
    let mut out = Quad::default();
    let mut stack = vec![(a, b, tol, 0u32)];
    while let Some((lo, hi, t, depth)) = stack.pop() {
        let (v, disc, prop, noise) = rule(f, lo, hi, parallel)?;
        out.evals += 15;
        if out.evals > MAX_EVALS {
            return Err(Error::Quadrature(format!("evaluation budget exhausted on [{a}, {b}]")));
        }
        if disc <= t || disc <= noise || depth >= 40 {
            if !disc.is_finite() {
                return Err(Error::Quadrature(format!("no convergence on [{lo}, {hi}]: estimate {disc:e}")));
            }
            out.value += v;
            out.err += disc + prop;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, t / 2.0, depth + 1));
            stack.push((lo, mid, t / 2.0, depth + 1));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_integrals() {
        let f = |x: f64| Ok((Complex64::new(x.exp(), x.sin()), 0.0));
        let q = integrate(&f, 0.0, 2.0, 1e-13, false).unwrap();
        assert!((q.value.re - (2f64.exp() - 1.0)).abs() < 1e-13);
        assert!((q.value.im - (1.0 - 2f64.cos())).abs() < 1e-13);
    }

    #[test]
    fn peaked_integrand_refines() {
        let f = |x: f64| Ok((Complex64::new(1.0 / (1e-4 + x * x), 0.0), 0.0));
        let q = integrate(&f, -1.0, 1.0, 1e-9, false).unwrap();
        let exact = 2.0 * (1.0 / 1e-2f64).atan() / 1e-2;
        assert!((q.value.re - exact).abs() < 1e-8, "{} vs {exact}", q.value.re);
    }
}
