//! Run configuration: a flat, strict JSON document.
//!
//! ```json
//! {"rho": 5, "a": 2, "b": 1, "c": 2.5, "f": 4, "h": 1, "sigma": 0.5,
//!  "u0": 2, "v0": 1, "scheme": "strong-taylor-1.5", "dt": 0.001}
//! ```

use std::path::PathBuf;

use serde::Deserialize;

use crate::model::{ModelParams, State};
use crate::regime::SweepAxis;
use crate::sde::scheme::SchemeKind;
use crate::sde::{ClampPolicy, SolverConfig};

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_T_END: f64 = 10.0;
pub const DEFAULT_SAMPLES: usize = 101;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis1: SweepAxis,
    pub axis2: SweepAxis,
}

/// The document as written; every key is optional at this stage.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDoc {
    pub rho: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
    pub f: Option<f64>,
    pub h: Option<f64>,
    pub sigma: Option<f64>,
    pub u0: Option<f64>,
    pub v0: Option<f64>,
    pub scheme: Option<SchemeKind>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub clamp: Option<ClampPolicy>,
    pub record_stride: Option<usize>,
    pub seed: Option<u64>,
    pub n_paths: Option<usize>,
    pub samples: Option<usize>,
    pub outputs: Option<PathBuf>,
    pub sweep: Option<SweepSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    pub init: State,
    pub solver: SolverConfig,
    pub master_seed: u64,
    pub n_paths: usize,
    /// Sample count for ensemble statistics on `[0, t_end]`.
    pub samples: usize,
    pub outputs: PathBuf,
    pub sweep: Option<SweepSpec>,
}

/// Parse failure; the message names the offending key.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

impl ConfigDoc {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            if path == "." {
                err(format!("config: {}", e.inner()))
            } else {
                err(format!("config key `{path}`: {}", e.inner()))
            }
        })
    }

    /// Parameters, with any keys present in the document replacing `base`.
    pub fn params_over(&self, base: &ModelParams) -> Result<ModelParams, ConfigError> {
        let mut p = *base;
        for (name, value) in self.param_entries() {
            if let Some(x) = value {
                p = p.with(name, x).map_err(|e| err(e.to_string()))?;
            }
        }
        p.validate().map_err(|e| err(e.to_string()))?;
        Ok(p)
    }

    fn param_entries(&self) -> [(&'static str, Option<f64>); 7] {
        [
            ("rho", self.rho),
            ("a", self.a),
            ("b", self.b),
            ("c", self.c),
            ("f", self.f),
            ("h", self.h),
            ("sigma", self.sigma),
        ]
    }

    pub fn params(&self) -> Result<ModelParams, ConfigError> {
        let mut vals = [0.0; 7];
        for (slot, (name, value)) in vals.iter_mut().zip(self.param_entries()) {
            *slot = value.ok_or_else(|| err(format!("config key `{name}`: missing")))?;
        }
        let [rho, a, b, c, f, h, sigma] = vals;
        ModelParams::new(rho, a, b, c, f, h, sigma).map_err(|e| err(e.to_string()))
    }

    pub fn init_over(&self, base: State) -> Result<State, ConfigError> {
        State::new(self.u0.unwrap_or(base.u), self.v0.unwrap_or(base.v)).map_err(|e| err(e.to_string()))
    }

    pub fn solver_over(&self, scheme: SchemeKind, dt: f64, t_end: f64) -> Result<SolverConfig, ConfigError> {
        let cfg = SolverConfig::new(
            self.scheme.unwrap_or(scheme),
            self.dt.unwrap_or(dt),
            self.t_end.unwrap_or(t_end),
        )
        .map_err(|e| err(e.to_string()))?
        .with_clamp(self.clamp.unwrap_or(ClampPolicy::ClampToZero));
        match self.record_stride {
            Some(0) => Err(err("config key `record_stride`: must be >= 1")),
            Some(s) => Ok(cfg.with_stride(s)),
            None => Ok(cfg),
        }
    }

    /// Resolves a complete run configuration; the seven model parameters
    /// and both initial densities are required.
    pub fn resolve(&self) -> Result<RunConfig, ConfigError> {
        let params = self.params()?;
        for (name, v) in [("u0", self.u0), ("v0", self.v0)] {
            if v.is_none() {
                return Err(err(format!("config key `{name}`: missing")));
            }
        }
        let init = self.init_over(State::ORIGIN)?;
        let solver = self.solver_over(SchemeKind::StrongTaylor15, DEFAULT_DT, DEFAULT_T_END)?;
        let n_paths = self.n_paths.unwrap_or(1);
        if n_paths == 0 {
            return Err(err("config key `n_paths`: must be >= 1"));
        }
        let samples = self.samples.unwrap_or(DEFAULT_SAMPLES);
        if samples < 2 {
            return Err(err("config key `samples`: must be >= 2"));
        }
        Ok(RunConfig {
            params,
            init,
            solver,
            master_seed: self.seed.unwrap_or(0),
            n_paths,
            samples,
            outputs: self.outputs.clone().unwrap_or_else(|| PathBuf::from(".")),
            sweep: self.sweep.clone(),
        })
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    ConfigDoc::parse(text)?.resolve()
}
