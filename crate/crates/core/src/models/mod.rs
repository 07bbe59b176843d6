//! Built-in low/high-fidelity model pairs and synthetic test instances.

mod burgers;
mod grid;
mod pendulum;
mod synthetic;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bifidelity::Ensemble;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

pub use burgers::{burgers_steady, zero_crossing, BurgersSolution, BurgersSpec};
pub use grid::{GridAxis, ParameterGrid};
pub use pendulum::{
    pendulum_series, PendulumFidelity, PendulumSeries, PendulumSpec, BLOW_UP_ANGLE,
};
pub use synthetic::{
    synthetic_recovery_instance, RecoveryInstance, SyntheticSpec, MIN_BASIS_EIGENVALUE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fidelity {
    Low,
    High,
}

impl fmt::Display for Fidelity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Fidelity::Low => "low",
            Fidelity::High => "high",
        })
    }
}

impl FromStr for Fidelity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "low" => Ok(Fidelity::Low),
            "high" => Ok(Fidelity::High),
            other => Err(Error::InvalidArgument(format!(
                "unknown fidelity `{other}`"
            ))),
        }
    }
}

/// Burgers pair: the parameter point is `(δ, ν)`; the fidelities differ in grid resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BurgersSetup {
    pub low_nx: usize,
    pub high_nx: usize,
    pub tolerance: f64,
    pub max_steps: usize,
}

impl Default for BurgersSetup {
    fn default() -> Self {
        BurgersSetup {
            low_nx: 40,
            high_nx: 256,
            tolerance: 1e-10,
            max_steps: 10_000,
        }
    }
}

/// Double pendulum pair: the parameter point is `(m₂, ℓ₂)`. High fidelity is
/// the nonlinear model at a fine step, low fidelity the linearized model at a
/// coarse step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PendulumSetup {
    pub m1: f64,
    pub l1: f64,
    pub g: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub low_dt: f64,
    pub high_dt: f64,
    pub horizon: f64,
}

impl Default for PendulumSetup {
    fn default() -> Self {
        PendulumSetup {
            m1: 1.0,
            l1: 1.0,
            g: 9.8,
            theta1: std::f64::consts::FRAC_PI_4,
            theta2: std::f64::consts::FRAC_PI_4,
            low_dt: 0.25,
            high_dt: 1e-2,
            horizon: 15.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSetup {
    Burgers(BurgersSetup),
    Pendulum(PendulumSetup),
}

impl ModelSetup {
    /// Default setup for a model name (`burgers` or `pendulum`).
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "burgers" => Ok(ModelSetup::Burgers(BurgersSetup::default())),
            "pendulum" => Ok(ModelSetup::Pendulum(PendulumSetup::default())),
            other => Err(Error::InvalidArgument(format!(
                "unknown model `{other}`; valid models: burgers, pendulum"
            ))),
        }
    }

    pub fn model_id(&self) -> &'static str {
        match self {
            ModelSetup::Burgers(_) => "burgers",
            ModelSetup::Pendulum(_) => "pendulum",
        }
    }

    /// Tensor grid over the model's default parameter ranges.
    pub fn default_grid(&self, counts: [usize; 2]) -> Result<ParameterGrid> {
        let axes = match self {
            ModelSetup::Burgers(_) => vec![
                GridAxis::new("delta", 0.0, 0.1, counts[0]),
                GridAxis::new("nu", 0.1, 1.0, counts[1]),
            ],
            ModelSetup::Pendulum(_) => vec![
                GridAxis::new("m2", 0.25, 0.75, counts[0]),
                GridAxis::new("l2", 0.25, 4.0, counts[1]),
            ],
        };
        ParameterGrid::new(axes)
    }

    pub fn parameter_count(&self) -> usize {
        2
    }

    /// One snapshot at a parameter point.
    pub fn evaluate(&self, point: &[f64], fidelity: Fidelity) -> Result<Vec<f64>> {
        if point.len() != self.parameter_count() {
            return Err(Error::DimensionMismatch(format!(
                "{} expects {} parameters, got {}",
                self.model_id(),
                self.parameter_count(),
                point.len()
            )));
        }
        let fail = |reason: String| Error::SolverFailure {
            point: point.to_vec(),
            reason,
        };
        match self {
            ModelSetup::Burgers(setup) => {
                let spec = BurgersSpec {
                    viscosity: point[1],
                    delta: point[0],
                    nx: match fidelity {
                        Fidelity::Low => setup.low_nx,
                        Fidelity::High => setup.high_nx,
                    },
                    tolerance: setup.tolerance,
                    max_steps: setup.max_steps,
                };
                let sol = burgers_steady(&spec).map_err(|e| fail(e.to_string()))?;
                if !sol.converged {
                    return Err(fail(format!(
                        "no convergence after {} steps (last change {:e}, residual {:e})",
                        sol.steps, sol.last_change, sol.residual
                    )));
                }
                Ok(sol.profile)
            }
            ModelSetup::Pendulum(setup) => {
                let (dt, kind) = match fidelity {
                    Fidelity::Low => (setup.low_dt, PendulumFidelity::Linear),
                    Fidelity::High => (setup.high_dt, PendulumFidelity::Nonlinear),
                };
                let spec = PendulumSpec {
                    m1: setup.m1,
                    m2: point[0],
                    l1: setup.l1,
                    l2: point[1],
                    g: setup.g,
                    theta1: setup.theta1,
                    theta2: setup.theta2,
                    dt,
                    horizon: setup.horizon,
                };
                let series = pendulum_series(&spec, kind).map_err(|e| fail(e.to_string()))?;
                if series.blew_up {
                    return Err(fail(format!("|θ| exceeded {BLOW_UP_ANGLE}")));
                }
                Ok(series.theta2)
            }
        }
    }
}

/// Evaluates the model at every grid point (row-major) and stacks the
/// snapshots as columns. Points are solved in parallel; the result does not
/// depend on scheduling. Any failed solve fails the build, naming the
/// first failing point in grid order.
pub fn build_ensemble(
    setup: &ModelSetup,
    grid: &ParameterGrid,
    fidelity: Fidelity,
) -> Result<Ensemble> {
    if grid.dim() != setup.parameter_count() {
        return Err(Error::DimensionMismatch(format!(
            "{} takes {} parameters but the grid has {} axes",
            setup.model_id(),
            setup.parameter_count(),
            grid.dim()
        )));
    }
    let points = grid.points();
    let columns: Vec<Result<Vec<f64>>> = points
        .par_iter()
        .map(|p| setup.evaluate(p, fidelity))
        .collect();
    let columns = columns.into_iter().collect::<Result<Vec<_>>>()?;
    let rows = columns[0].len();
    let data: Vec<f64> = columns.into_iter().flatten().collect();
    let snapshots = DenseMatrix::from_vec(rows, points.len(), data);
    Ensemble::new(snapshots, points, fidelity.to_string(), setup.model_id())
}
