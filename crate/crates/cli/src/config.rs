//! Run configuration shared by all commands, loadable from TOML.

use serde::{Deserialize, Serialize};
use whkae_core::trace::KernelKind;
use whkae_core::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Model name as accepted by `parse_model`, e.g. `qds(circle)`.
    pub model: String,
    /// Observables; commands other than `dimspec` use exactly one.
    pub obs: Vec<String>,
    pub kernel: KernelKind,
    pub t0: f64,
    pub rho: f64,
    pub count: usize,
    pub eps: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<u32>,
    pub out: OutFormat,
    pub budget_levels: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: "circle".into(),
            obs: vec!["id".into()],
            kernel: KernelKind::Exponential,
            t0: 0.25,
            rho: 0.5,
            count: 14,
            eps: 1e-10,
            order: None,
            out: OutFormat::Json,
            budget_levels: 1 << 30,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config fields are TOML-representable")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("eps must be positive, got {}", self.eps)));
        }
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            return Err(Error::InvalidParameter(format!("t0 must be positive, got {}", self.t0)));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::InvalidParameter(format!("rho must lie in (0,1), got {}", self.rho)));
        }
        if self.count == 0 {
            return Err(Error::InvalidParameter("count must be at least 1".into()));
        }
        if self.budget_levels == 0 {
            return Err(Error::InvalidParameter("budget-levels must be at least 1".into()));
        }
        if self.obs.is_empty() {
            return Err(Error::InvalidParameter("at least one observable is needed".into()));
        }
        Ok(())
    }

    /// The single observable of a one-observable command.
    pub fn single_obs(&self) -> Result<&str> {
        match self.obs.as_slice() {
            [one] => Ok(one),
            _ => Err(Error::InvalidParameter(format!("this command takes one observable, got {}", self.obs.len()))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn awkward_floats_round_trip() {
        let c = RunConfig {
            model: "iterate(circle,2)".into(),
            obs: vec!["mono(1,0)".into(), "tensor(abs(1);0:1,2:-1/3)".into()],
            kernel: KernelKind::Gaussian,
            t0: 0.1 + 0.2,
            rho: 1.0 / 3.0,
            count: 7,
            eps: 3.3e-13,
            order: Some(6),
            out: OutFormat::Csv,
            budget_levels: 12345,
        };
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig::from_toml("eps = 0.0").is_err());
        assert!(RunConfig::from_toml("rho = 1.5").is_err());
        assert!(RunConfig::from_toml("colour = \"red\"").is_err());
    }
}
