//! Benchmark scenarios and their constants.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ScenarioId {
    S1,
    S2,
    S3,
    S4,
    S5,
    S6,
    S7,
    S8,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 8] = [
        ScenarioId::S1,
        ScenarioId::S2,
        ScenarioId::S3,
        ScenarioId::S4,
        ScenarioId::S5,
        ScenarioId::S6,
        ScenarioId::S7,
        ScenarioId::S8,
    ];

    pub fn is_1d(self) -> bool {
        matches!(self, ScenarioId::S1 | ScenarioId::S2 | ScenarioId::S3 | ScenarioId::S4)
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for ScenarioId {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, BenchError> {
        ScenarioId::ALL
            .into_iter()
            .find(|id| id.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| BenchError::Config(format!("unknown scenario {s:?}; expected S1..S8")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Lattice {
    D1Q3,
    D2Q5,
    D2Q9,
}

impl Lattice {
    pub fn kind(self) -> lbm_core::LatticeKind {
        match self {
            Lattice::D1Q3 => lbm_core::LatticeKind::D1Q3,
            Lattice::D2Q5 => lbm_core::LatticeKind::D2Q5,
            Lattice::D2Q9 => lbm_core::LatticeKind::D2Q9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Srt,
    YoshidaNagaoka,
    HuangWu,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Case {
    pub dx: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Initial1d {
    Uniform { value: f64 },
    Band { lo: f64, hi: f64, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum End1d {
    Flux { q: f64 },
    Value { u: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Physics {
    Line {
        diffusivity: f64,
        initial: Initial1d,
        left: End1d,
        right: End1d,
        source: f64,
        /// Left boundary values swept for the comparison experiment.
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        left_values: Vec<f64>,
    },
    NonConvex {
        principal: [f64; 2],
        theta: f64,
        /// Hole side as a fraction of the domain side.
        hole_fraction: f64,
        inner_value: f64,
        outer_flux: f64,
    },
    Heterogeneous {
        eps: f64,
        eps_prime: f64,
        band: [f64; 2],
        boundary_value: f64,
    },
    Porous {
        rho: f64,
        mu: f64,
        inlet: [f64; 2],
        diffusivity: f64,
        u_a: f64,
        u_b: f64,
        stoich: [u32; 3],
    },
    StreamFunction {
        p: [f64; 3],
        q: [f64; 3],
        alpha: [f64; 3],
        base: f64,
        beta_t: f64,
        beta_l: f64,
        u_a: f64,
        u_b: f64,
        stoich: [u32; 3],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: ScenarioId,
    pub title: String,
    pub lattice: Lattice,
    pub method: Method,
    /// `[L_x, L_y]`; `L_y = 0` for line problems.
    pub domain: [f64; 2],
    pub end_time: f64,
    pub cases: Vec<Case>,
    pub physics: Physics,
}

impl Scenario {
    pub fn case(&self, k: usize) -> Result<Case, BenchError> {
        if k == 0 || k > self.cases.len() {
            return Err(BenchError::Config(format!(
                "{} has cases 1..={}, got {k}",
                self.id,
                self.cases.len()
            )));
        }
        Ok(self.cases[k - 1])
    }
}

fn cases(list: &[(f64, f64)]) -> Vec<Case> {
    list.iter().map(|&(dx, dt)| Case { dx, dt }).collect()
}

const D_LINE: f64 = 1.0 / 3.0;

pub fn scenario(id: ScenarioId) -> Scenario {
    match id {
        ScenarioId::S1 => Scenario {
            id,
            title: "1D diffusion, uniform initial condition".into(),
            lattice: Lattice::D1Q3,
            method: Method::Srt,
            domain: [1.0, 0.0],
            end_time: 1e-2,
            cases: cases(&[(0.1, 1e-3), (0.1, 1e-4), (0.1, 1e-5), (1e-3, 1e-5), (1e-2, 1e-5)]),
            physics: Physics::Line {
                diffusivity: D_LINE,
                initial: Initial1d::Uniform { value: 1.0 },
                left: End1d::Flux { q: 0.0 },
                right: End1d::Value { u: 0.0 },
                source: 0.0,
                left_values: Vec::new(),
            },
        },
        ScenarioId::S2 => Scenario {
            id,
            title: "1D diffusion, band initial condition".into(),
            lattice: Lattice::D1Q3,
            method: Method::Srt,
            domain: [1.0, 0.0],
            end_time: 1e-2,
            cases: cases(&[(0.1, 1e-3), (0.1, 1e-4), (0.1, 1e-5), (1e-3, 1e-5), (1e-2, 1e-5)]),
            physics: Physics::Line {
                diffusivity: D_LINE,
                initial: Initial1d::Band {
                    lo: 0.4,
                    hi: 0.6,
                    value: 1.0,
                },
                left: End1d::Flux { q: 0.0 },
                right: End1d::Value { u: 0.0 },
                source: 0.0,
                left_values: Vec::new(),
            },
        },
        ScenarioId::S3 => Scenario {
            id,
            title: "1D diffusion with constant source".into(),
            lattice: Lattice::D1Q3,
            method: Method::Srt,
            domain: [1.0, 0.0],
            end_time: 1e-2,
            cases: cases(&[(1e-3, 1e-3), (1e-3, 1e-4), (1e-3, 1e-5), (1e-3, 1e-6), (1e-3, 1e-7)]),
            physics: Physics::Line {
                diffusivity: D_LINE,
                initial: Initial1d::Uniform { value: 0.0 },
                left: End1d::Value { u: 0.0 },
                right: End1d::Value { u: 0.0 },
                source: 1.0,
                left_values: Vec::new(),
            },
        },
        ScenarioId::S4 => Scenario {
            id,
            title: "1D comparison principle".into(),
            lattice: Lattice::D1Q3,
            method: Method::Srt,
            domain: [1.0, 0.0],
            end_time: 0.01,
            cases: cases(&[(0.1, 1e-5), (1e-3, 1e-5)]),
            physics: Physics::Line {
                diffusivity: D_LINE,
                initial: Initial1d::Uniform { value: 0.0 },
                left: End1d::Value { u: 1.0 },
                right: End1d::Value { u: 0.0 },
                source: 0.0,
                left_values: vec![1.0, 2.0, 3.0],
            },
        },
        ScenarioId::S5 => Scenario {
            id,
            title: "2D anisotropic diffusion on a domain with a square hole".into(),
            lattice: Lattice::D2Q5,
            method: Method::YoshidaNagaoka,
            domain: [1.0, 1.0],
            end_time: 1e-2,
            cases: cases(&[(1.25e-2, 1.5625e-4), (1e-2, 1e-4), (5e-3, 2.5e-5)]),
            physics: Physics::NonConvex {
                principal: [10.0, 1e-3],
                theta: std::f64::consts::FRAC_PI_4,
                hole_fraction: 0.1,
                inner_value: 1.0,
                outer_flux: 0.0,
            },
        },
        ScenarioId::S6 => Scenario {
            id,
            title: "2D anisotropic heterogeneous diffusion".into(),
            lattice: Lattice::D2Q9,
            method: Method::HuangWu,
            domain: [1.0, 1.0],
            end_time: 0.025,
            cases: cases(&[
                (5e-2, 1e-3),
                (2.5e-2, 2.5e-4),
                (1.25e-2, 6.25e-5),
                (1e-2, 4e-5),
                (5e-3, 1e-5),
            ]),
            physics: Physics::Heterogeneous {
                eps: 1e-3,
                eps_prime: 1e-10,
                band: [0.4, 0.6],
                boundary_value: 0.0,
            },
        },
        ScenarioId::S7 => Scenario {
            id,
            title: "Fast bimolecular reaction in a porous medium".into(),
            lattice: Lattice::D2Q9,
            method: Method::Srt,
            domain: [0.5, 2.0],
            end_time: 0.5,
            cases: cases(&[(6.25e-3, 9.75e-4), (5e-3, 6.25e-4)]),
            physics: Physics::Porous {
                rho: 1.0,
                mu: 1e-2,
                inlet: [1.0, 0.0],
                diffusivity: 1e-2,
                u_a: 1.0,
                u_b: 1.0,
                stoich: [1, 2, 1],
            },
        },
        ScenarioId::S8 => Scenario {
            id,
            title: "Fast bimolecular reaction with stream-function velocity and dispersion".into(),
            lattice: Lattice::D2Q9,
            method: Method::HuangWu,
            domain: [2.0, 1.0],
            end_time: 0.25,
            cases: cases(&[(5e-2, 2.5e-4), (2.5e-2, 6.25e-5), (1.25e-2, 1.56e-6)]),
            physics: Physics::StreamFunction {
                p: [4.0, 5.0, 10.0],
                q: [1.0, 5.0, 10.0],
                alpha: [0.08, 0.02, 0.01],
                base: 1e-5,
                beta_t: 1e-4,
                beta_l: 1.0,
                u_a: 1.0,
                u_b: 1.0,
                stoich: [1, 2, 1],
            },
        },
    }
}

pub fn scenario_catalog() -> Vec<Scenario> {
    ScenarioId::ALL.into_iter().map(scenario).collect()
}
