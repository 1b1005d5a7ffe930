//! Run configuration: a flat `key = value` file (TOML syntax) merged with
//! command-line overrides.

use std::path::{Path, PathBuf};

use lbm_core::boundary::DirichletMethod;
use lbm_core::flow::Mask;
use serde::{Deserialize, Serialize};

use crate::catalog::{scenario, Case, ScenarioId};
use crate::error::BenchError;
use crate::runner::RunRequest;

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "LBM_BENCH_OUT";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Option<String>,
    pub case: Option<usize>,
    pub dx: Option<f64>,
    pub dt: Option<f64>,
    /// `standard` or `weighted_split`.
    pub bc: Option<String>,
    pub out: Option<PathBuf>,
    pub sample_every: Option<usize>,
    pub threads: Option<usize>,
    /// Obstacle mask file for the porous scenario.
    pub mask: Option<PathBuf>,
    pub coevolve: Option<bool>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, BenchError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Fields set in `over` replace those in `self`.
    pub fn merge(self, over: RunConfig) -> RunConfig {
        RunConfig {
            scenario: over.scenario.or(self.scenario),
            case: over.case.or(self.case),
            dx: over.dx.or(self.dx),
            dt: over.dt.or(self.dt),
            bc: over.bc.or(self.bc),
            out: over.out.or(self.out),
            sample_every: over.sample_every.or(self.sample_every),
            threads: over.threads.or(self.threads),
            mask: over.mask.or(self.mask),
            coevolve: over.coevolve.or(self.coevolve),
        }
    }

    pub fn scenario_id(&self) -> Result<ScenarioId, BenchError> {
        self.scenario
            .as_deref()
            .ok_or_else(|| BenchError::Config("no scenario given".into()))?
            .parse()
    }

    /// Output directory: `out` if set, else `$LBM_BENCH_OUT/<run>`, else
    /// `runs/<run>`.
    pub fn out_dir(&self) -> Result<PathBuf, BenchError> {
        if let Some(p) = &self.out {
            return Ok(p.clone());
        }
        let root = std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"));
        let id = self.scenario_id()?;
        let tag = match (self.case, self.dx, self.dt) {
            (_, Some(dx), Some(dt)) => format!("dx{dx:e}_dt{dt:e}"),
            (k, _, _) => format!("case{}", k.unwrap_or(1)),
        };
        let bc = self.bc.as_deref().unwrap_or("standard");
        Ok(root.join(format!("{id}_{tag}_{bc}")))
    }

    pub fn to_request(&self) -> Result<RunRequest, BenchError> {
        let id = self.scenario_id()?;
        let mut req = match (self.case, self.dx, self.dt) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                return Err(BenchError::Config("give either case or dx and dt, not both".into()))
            }
            (_, Some(dx), Some(dt)) => RunRequest::explicit(id, dx, dt),
            (_, Some(_), None) | (_, None, Some(_)) => {
                return Err(BenchError::Config("dx and dt must be given together".into()))
            }
            (k, None, None) => {
                let k = k.unwrap_or(1);
                scenario(id).case(k)?;
                RunRequest::case(id, k)
            }
        };
        if let Some(bc) = &self.bc {
            req.bc = bc.parse::<DirichletMethod>()?;
        }
        if let Some(every) = self.sample_every {
            if every == 0 {
                return Err(BenchError::Config("sample_every must be at least 1".into()));
            }
            req.sample_every = Some(every);
        }
        if let Some(path) = &self.mask {
            if id != ScenarioId::S7 {
                return Err(BenchError::Config("mask applies only to S7".into()));
            }
            req.mask = Some(Mask::load(path)?);
        }
        req.coevolve = self.coevolve.unwrap_or(false);
        if let Some(Case { dx, dt }) = req.case {
            if !(dx > 0.0 && dt > 0.0) {
                return Err(BenchError::Config(format!("dx = {dx} and dt = {dt} must be positive")));
            }
        }
        Ok(req)
    }
}
