//! Text names for models and observables, as used on the command line.
//!
//! Models: `circle`, `number_op`, `nc_torus`, `sphere_torus(ℓ)`, `sphere_eq(ℓ)`,
//! `qds(M)`, `amp(M)`, `kadj(M)`, `iterate(M,ℓ)`, `custom:<path.json>`.
//!
//! Observables: `id`, `pos`, `neg`, `abs(j)`, `mono(a,b)`, `diag(k:w,…)` or
//! `diag(k:w₊:w₋,…)`, `upper(μ)`, `lower(μ)`, `tensor(OBS;n:w,…)`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{DiagEntry, Observable, Sign, SpectralModel, SuspendedObservable};
use crate::error::{Error, Result};

/// Split `name(args)` into `("name", Some("args"))`.
fn split_call(s: &str) -> Result<(&str, Option<&str>)> {
    let s = s.trim();
    match s.find('(') {
        None => Ok((s, None)),
        Some(i) => {
            if !s.ends_with(')') {
                return Err(Error::Parse(format!("unbalanced parentheses in `{s}`")));
            }
            Ok((s[..i].trim(), Some(&s[i + 1..s.len() - 1])))
        }
    }
}

/// Split on `sep` at parenthesis depth zero.
fn split_top(s: &str, sep: char) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push(s[start..i].trim());
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    out.push(s[start..].trim());
    out
}

fn parse_u32(s: &str, what: &str) -> Result<u32> {
    s.trim()
        .parse::<u32>()
        .map_err(|_| Error::Parse(format!("{what} must be a nonnegative integer, got `{s}`")))
}

pub fn parse_model(s: &str) -> Result<SpectralModel> {
    let s = s.trim();
    if let Some(path) = s.strip_prefix("custom:") {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read custom model `{path}`: {e}")))?;
        return SpectralModel::from_custom_json(&text);
    }
    let (name, args) = split_call(s)?;
    let args: Vec<&str> = args.map(|a| split_top(a, ',')).unwrap_or_default();
    let one = |args: &[&'_ str]| -> Result<String> {
        match args {
            [a] => Ok(a.to_string()),
            _ => Err(Error::Parse(format!("`{name}` takes one argument"))),
        }
    };
    match name {
        "circle" | "number_op" | "nc_torus" if !args.is_empty() => {
            Err(Error::Parse(format!("`{name}` takes no arguments")))
        }
        "circle" => Ok(SpectralModel::circle()),
        "number_op" => Ok(SpectralModel::number_op()),
        "nc_torus" => Ok(SpectralModel::nc_torus()),
        "sphere_torus" => SpectralModel::sphere_torus(parse_u32(&one(&args)?, "ℓ")?),
        "sphere_eq" => SpectralModel::sphere_eq(parse_u32(&one(&args)?, "ℓ")?),
        "qds" => parse_model(&one(&args)?)?.suspend(),
        "amp" => parse_model(&one(&args)?)?.amplify(),
        "kadj" => Ok(parse_model(&one(&args)?)?.adjusted()),
        "iterate" => match args.as_slice() {
            [m, l] => parse_model(m)?.iterate(parse_u32(l, "ℓ")?),
            _ => Err(Error::Parse("`iterate` takes a model and a count".into())),
        },
        _ => Err(Error::UnknownModel(s.to_string())),
    }
}

/// Exact rational from `3`, `-1/2`, `0.125` or `1e-3`.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("`{s}` is not a rational number"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let n: BigInt = format!("{int}{frac}").parse().map_err(|_| bad())?;
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut q = if scale >= 0 {
        BigRational::from_integer(n * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(n, num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        q = -q;
    }
    Ok(q)
}

fn parse_entries(s: &str) -> Result<Vec<(u64, BigRational, BigRational)>> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        let level = parts[0]
            .trim()
            .parse::<u64>()
            .map_err(|_| Error::Parse(format!("bad level in `{item}`")))?;
        let (plus, minus) = match parts.as_slice() {
            [_] => (BigRational::one(), BigRational::zero()),
            [_, w] => (parse_rational(w)?, BigRational::zero()),
            [_, wp, wm] => (parse_rational(wp)?, parse_rational(wm)?),
            _ => return Err(Error::Parse(format!("bad entry `{item}`"))),
        };
        out.push((level, plus, minus));
    }
    Ok(out)
}

pub fn parse_observable(s: &str) -> Result<Observable> {
    let s = s.trim();
    let (name, args) = split_call(s)?;
    let arg = || args.ok_or_else(|| Error::Parse(format!("`{name}` needs arguments")));
    match name {
        "id" | "identity" if args.is_none() => Ok(Observable::Identity),
        "pos" if args.is_none() => Ok(Observable::SignProjection(Sign::Plus)),
        "neg" if args.is_none() => Ok(Observable::SignProjection(Sign::Minus)),
        "abs" => Ok(Observable::AbsPower(parse_u32(arg()?, "power")?)),
        "mono" => match split_top(arg()?, ',').as_slice() {
            [a, b] => Ok(Observable::LatticeMonomial {
                a: parse_u32(a, "exponent")?,
                b: parse_u32(b, "exponent")?,
            }),
            _ => Err(Error::Parse("`mono` takes two exponents".into())),
        },
        "diag" => Ok(Observable::Diagonal(
            parse_entries(arg()?)?
                .into_iter()
                .map(|(level, plus, minus)| DiagEntry { level, plus, minus })
                .collect(),
        )),
        "upper" => Ok(Observable::Suspended(SuspendedObservable::Upper { mean: parse_rational(arg()?)? })),
        "lower" => Ok(Observable::Suspended(SuspendedObservable::Lower { mean: parse_rational(arg()?)? })),
        "tensor" => {
            let inner = arg()?;
            let parts = split_top(inner, ';');
            let [base, factor] = parts.as_slice() else {
                return Err(Error::Parse("`tensor` takes `OBS;n:w,…`".into()));
            };
            let factor = parse_entries(factor)?
                .into_iter()
                .map(|(n, w, m)| {
                    if m.is_zero() {
                        Ok((n, w))
                    } else {
                        Err(Error::Parse("tensor factor weights carry no sign split".into()))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Observable::Suspended(SuspendedObservable::Tensor {
                base: Box::new(parse_observable(base)?),
                factor,
            }))
        }
        _ => Err(Error::UnknownObservable(s.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::rat;

    #[test]
    fn model_names() {
        assert_eq!(parse_model("circle").unwrap().name(), "circle");
        assert_eq!(parse_model("qds(circle)").unwrap().p(), 2);
        assert_eq!(parse_model("iterate(circle, 2)").unwrap().p(), 3);
        assert_eq!(parse_model("kadj(qds(number_op))").unwrap().kernel_dim(), 0);
        assert_eq!(parse_model("sphere_eq(2)").unwrap().p(), 5);
        assert!(matches!(parse_model("torus"), Err(Error::UnknownModel(_))));
        assert!(parse_model("sphere_torus(x)").is_err());
    }

    #[test]
    fn rationals() {
        assert_eq!(parse_rational("1/2").unwrap(), rat(1, 2));
        assert_eq!(parse_rational("-0.125").unwrap(), rat(-1, 8));
        assert_eq!(parse_rational("3e2").unwrap(), rat(300, 1));
        assert_eq!(parse_rational("2.5e-1").unwrap(), rat(1, 4));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn observable_round_trip() {
        for s in ["id", "pos", "neg", "abs(2)", "mono(2,0)", "diag(0:1,3:1/2:1/3)", "upper(1)", "lower(-3/2)", "tensor(abs(1);0:1,2:1/2)"] {
            let o = parse_observable(s).unwrap();
            assert_eq!(parse_observable(&o.to_string()).unwrap(), o, "{s}");
        }
        assert!(matches!(parse_observable("spin"), Err(Error::UnknownObservable(_))));
    }
}
