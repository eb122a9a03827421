//! The command implementations. Each returns a [`Report`] that renders as
//! JSON or CSV; nothing here prints or exits.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde_json::{json, Value};
use whkae_core::expansion::Coefficient;
use whkae_core::qds::dimension_spectrum;
use whkae_core::spectrum::{parse_model, parse_observable, LevelKind, Observable, SpectralModel};
use whkae_core::trace::{
    closed_form_expansion_kernel, fit_expansion, sample_grid_with, samples_to_csv, TraceOptions,
};
use whkae_core::zeta::{zeta_direct, ContinuedZeta, ZetaOptions, ZetaValue};
use whkae_core::{verify, Error, Result};

use crate::config::{OutFormat, RunConfig};

/// Coefficients of a numerical fit with a larger error than this are flagged.
pub const FIT_TOL: f64 = 1e-6;
/// Expansion order used by `expand` when none is configured.
pub const DEFAULT_EXPAND_ORDER: u32 = 4;
/// Highest level index listed by `suspend`.
const LISTED_LEVELS: u64 = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub json: Value,
    pub csv: String,
}

impl Report {
    pub fn render(&self, out: OutFormat) -> String {
        match out {
            OutFormat::Json => {
                let mut s = serde_json::to_string_pretty(&self.json).expect("reports are plain JSON");
                s.push('\n');
                s
            }
            OutFormat::Csv => self.csv.clone(),
        }
    }
}

fn trace_options(cfg: &RunConfig) -> TraceOptions {
    TraceOptions { eps: cfg.eps, budget: cfg.budget_levels, ..TraceOptions::default() }
}

fn model_and_obs(cfg: &RunConfig) -> Result<(SpectralModel, Observable)> {
    Ok((parse_model(&cfg.model)?, parse_observable(cfg.single_obs()?)?))
}

fn exact_str(c: &Coefficient) -> String {
    match c {
        Coefficient::Rational(q) => q.to_string(),
        Coefficient::Float(_) => String::new(),
    }
}

fn builtins() -> Vec<SpectralModel> {
    let mut out = vec![SpectralModel::circle(), SpectralModel::number_op(), SpectralModel::nc_torus()];
    for ell in 1..=3 {
        out.push(SpectralModel::sphere_torus(ell).expect("ℓ ≥ 1"));
    }
    for ell in 1..=2 {
        out.push(SpectralModel::sphere_eq(ell).expect("ℓ ≥ 1"));
    }
    out
}

pub fn cmd_models() -> Report {
    let models = builtins();
    let mut csv = String::from("name,level_kind,p,C,kernel_dim\n");
    for m in &models {
        let j = m.to_json();
        let _ = writeln!(csv, "{},{},{},{},{}", m.name(), j["level_kind"].as_str().unwrap_or(""), m.p(), m.count_const(), m.kernel_dim());
    }
    Report {
        json: json!({
            "models": models.iter().map(SpectralModel::to_json).collect::<Vec<_>>(),
            "constructors": [
                "sphere_torus(l)", "sphere_eq(l)", "qds(M)", "amp(M)", "kadj(M)", "iterate(M,l)", "custom:<file.json>",
            ],
            "observables": [
                "id", "pos", "neg", "abs(j)", "mono(a,b)", "diag(k:w,...)", "diag(k:w+:w-,...)",
                "upper(mean)", "lower(mean)", "tensor(OBS;n:w,...)",
            ],
        }),
        csv,
    }
}

pub fn cmd_trace(cfg: &RunConfig) -> Result<Report> {
    let (model, obs) = model_and_obs(cfg)?;
    let samples = sample_grid_with(&model, &obs, cfg.t0, cfg.rho, cfg.count, cfg.kernel, &trace_options(cfg))?;
    Ok(Report {
        json: json!({
            "model": model.name(),
            "obs": obs.to_string(),
            "kernel": cfg.kernel.as_str(),
            "samples": samples.iter().map(|s| json!({"t": s.t, "value": s.value, "abs_error": s.abs_error})).collect::<Vec<_>>(),
        }),
        csv: samples_to_csv(&samples),
    })
}

pub fn cmd_expand(cfg: &RunConfig) -> Result<Report> {
    let (model, obs) = model_and_obs(cfg)?;
    let order = cfg.order.unwrap_or(DEFAULT_EXPAND_ORDER);
    let p = model.pair_dimension(&obs);
    let (expansion, method, failures) = match closed_form_expansion_kernel(&model, &obs, cfg.kernel, order as i32) {
        Ok(e) => (e, "closed-form", Vec::new()),
        Err(Error::NoClosedForm { .. }) => {
            let samples = sample_grid_with(&model, &obs, cfg.t0, cfg.rho, cfg.count, cfg.kernel, &trace_options(cfg))?;
            let fit = fit_expansion(&samples, p, order, FIT_TOL)?;
            (fit.expansion, "richardson-fit", fit.failures)
        }
        Err(e) => return Err(e),
    };
    let mut csv = String::from("power,value,abs_error,exact\n");
    let mut coeffs = Vec::new();
    for (r, c) in expansion.terms() {
        let _ = writeln!(csv, "{r},{:e},{:e},{}", c.to_f64(), c.error(), exact_str(&c));
        let mut j = c.to_json();
        j["power"] = json!(r);
        coeffs.push(j);
    }
    let mut json = json!({
        "model": model.name(),
        "obs": obs.to_string(),
        "kernel": cfg.kernel.as_str(),
        "p": p,
        "method": method,
        "order": order,
        "coefficients": coeffs,
        "remainder": expansion.to_json()["remainder"],
    });
    if method != "closed-form" {
        json["fit_tolerance"] = json!(FIT_TOL);
        json["failed_powers"] = json!(failures);
    }
    Ok(Report { json, csv })
}

/// Parse `3`, `-0.5`, `0.5+2i`, `-1-0.25i`.
pub fn parse_s(text: &str) -> Result<Complex64> {
    let t = text.trim();
    if let Ok(x) = t.parse::<f64>() {
        return Ok(Complex64::new(x, 0.0));
    }
    t.parse::<Complex64>()
        .map_err(|_| Error::Parse(format!("`{t}` is not a complex number (expected e.g. 0.5+2i)")))
}

pub fn cmd_zeta(cfg: &RunConfig, s_list: &[Complex64]) -> Result<Report> {
    if s_list.is_empty() {
        return Err(Error::InvalidParameter("at least one --s value is needed".into()));
    }
    let (model, obs) = model_and_obs(cfg)?;
    let p = model.pair_dimension(&obs) as f64;
    let opts = ZetaOptions { eps: cfg.eps, order: cfg.order, ..ZetaOptions::default() };
    let mut continued: Option<ContinuedZeta> = None;
    let mut rows: Vec<(ZetaValue, &str)> = Vec::with_capacity(s_list.len());
    for &s in s_list {
        if s.re > p + 0.5 {
            match zeta_direct(&model, &obs, s, cfg.eps) {
                Ok(v) => {
                    rows.push((v, "direct"));
                    continue;
                }
                Err(Error::Budget { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        if continued.is_none() {
            continued = Some(ContinuedZeta::new(&model, &obs, opts)?);
        }
        let z = continued.as_ref().expect("just built");
        rows.push((z.eval(s)?, "continued"));
    }
    let mut csv = String::from("s_re,s_im,value_re,value_im,abs_error,method\n");
    let mut values = Vec::with_capacity(rows.len());
    for (v, method) in &rows {
        let _ = writeln!(csv, "{:e},{:e},{:e},{:e},{:e},{method}", v.s.re, v.s.im, v.value.re, v.value.im, v.abs_error);
        let mut j = v.to_json();
        j["method"] = json!(method);
        values.push(j);
    }
    Ok(Report {
        json: json!({"model": model.name(), "obs": obs.to_string(), "values": values}),
        csv,
    })
}

pub fn cmd_dimspec(cfg: &RunConfig) -> Result<Report> {
    let model = parse_model(&cfg.model)?;
    let obs = cfg.obs.iter().map(|o| parse_observable(o)).collect::<Result<Vec<_>>>()?;
    let d = dimension_spectrum(&model, &obs, None)?;
    let mut csv = String::from("observable,pole,value,abs_error,exact\n");
    for (name, data) in &d.per_observable {
        for (k, r) in &data.poles {
            let _ = writeln!(csv, "\"{name}\",{k},{:e},{:e},{}", r.to_f64(), r.error(), exact_str(r));
        }
    }
    Ok(Report { json: d.to_json(), csv })
}

pub fn cmd_suspend(cfg: &RunConfig, times: u32) -> Result<Report> {
    let base = parse_model(&cfg.model)?;
    let mut model = base.clone();
    for _ in 0..times {
        model = model.suspend()?;
    }
    let levels = model.levels_upto(LISTED_LEVELS)?;
    let mut csv = String::from("index,value,mult_plus,mult_minus\n");
    for l in &levels {
        let _ = writeln!(csv, "{},{},{},{}", l.index, l.value, l.mult_plus, l.mult_minus);
    }
    let mut json = json!({
        "base": base.name(),
        "times": times,
        "model": model.to_json(),
        "levels": levels
            .iter()
            .map(|l| json!({"index": l.index, "value": l.value, "mult_plus": l.mult_plus, "mult_minus": l.mult_minus}))
            .collect::<Vec<_>>(),
    });
    if model.level_kind() == LevelKind::Integer {
        json["dimension_spectrum"] = dimension_spectrum(&model, &[Observable::Identity], None)?.to_json();
    }
    Ok(Report { json, csv })
}

/// Outcome of `verify`: the report and whether every criterion passed.
pub fn cmd_verify(ids: &[u8]) -> Result<(Report, bool)> {
    let ids: Vec<u8> = if ids.is_empty() { (1..=9).collect() } else { ids.to_vec() };
    if let Some(bad) = ids.iter().find(|&&i| !(1..=9).contains(&i)) {
        return Err(Error::InvalidParameter(format!("criterion {bad} does not exist (1..=9)")));
    }
    let results: Vec<_> = ids.iter().map(|&i| verify::run(i)).collect();
    let all = results.iter().all(|r| r.passed);
    let mut csv = String::from("id,passed,title,detail\n");
    for r in &results {
        let _ = writeln!(csv, "{},{},\"{}\",\"{}\"", r.id, r.passed, r.title, r.detail.replace('"', "'"));
    }
    Ok((
        Report {
            json: json!({"passed": all, "criteria": results.iter().map(|r| r.to_json()).collect::<Vec<_>>()}),
            csv,
        },
        all,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(model: &str, obs: &str) -> RunConfig {
        RunConfig { model: model.into(), obs: vec![obs.into()], ..RunConfig::default() }
    }

    #[test]
    fn zeta_of_circle_at_three() {
        let r = cmd_zeta(&cfg("circle", "id"), &[Complex64::new(3.0, 0.0)]).unwrap();
        let v = &r.json["values"][0];
        // 2ζ(3)
        assert!((v["value"].as_f64().unwrap() - 2.0 * 1.2020569031595942).abs() < 1e-10);
        assert!(v["abs_error"].as_f64().unwrap() <= 1e-10);
    }

    #[test]
    fn number_operator_expansion() {
        let c = RunConfig { order: Some(2), ..cfg("number_op", "id") };
        let r = cmd_expand(&c).unwrap();
        let got: Vec<String> = r.csv.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().to_string()).collect();
        assert_eq!(got, ["1", "1/2", "1/12"]);
    }

    #[test]
    fn qds_circle_dimension_spectrum() {
        let r = cmd_dimspec(&cfg("qds(circle)", "id")).unwrap();
        assert_eq!(r.json["dimension_spectrum"], json!([1, 2]));
        let res = &r.json["observables"]["id"]["residues"];
        assert_eq!(res["1"]["num"], json!(1));
        assert_eq!(res["2"]["num"], json!(2));
    }

    #[test]
    fn complex_arguments() {
        assert_eq!(parse_s("-1").unwrap(), Complex64::new(-1.0, 0.0));
        assert_eq!(parse_s("0.5+2i").unwrap(), Complex64::new(0.5, 2.0));
        assert!(parse_s("two").is_err());
    }
}
