//! Planar double pendulum, nonlinear and small-angle linearized, integrated
//! with the classical four-stage Runge–Kutta scheme. The recorded observable
//! is the lower angle θ₂.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// |θ| beyond this counts as a blow-up.
pub const BLOW_UP_ANGLE: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PendulumFidelity {
    Nonlinear,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendulumSpec {
    pub m1: f64,
    pub m2: f64,
    pub l1: f64,
    pub l2: f64,
    pub g: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub dt: f64,
    pub horizon: f64,
}

impl Default for PendulumSpec {
    fn default() -> Self {
        PendulumSpec {
            m1: 1.0,
            m2: 0.5,
            l1: 1.0,
            l2: 1.0,
            g: 9.8,
            theta1: std::f64::consts::FRAC_PI_4,
            theta2: std::f64::consts::FRAC_PI_4,
            dt: 1e-2,
            horizon: 15.0,
        }
    }
}

impl PendulumSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("m1", self.m1),
            ("m2", self.m2),
            ("l1", self.l1),
            ("l2", self.l2),
            ("g", self.g),
            ("dt", self.dt),
            ("horizon", self.horizon),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !self.theta1.is_finite() || !self.theta2.is_finite() {
            return Err(Error::InvalidArgument(
                "initial angles must be finite".into(),
            ));
        }
        if self.dt > self.horizon {
            return Err(Error::InvalidArgument(format!(
                "time step {} exceeds horizon {}",
                self.dt, self.horizon
            )));
        }
        Ok(())
    }

    /// `floor(T/Δt) + 1`, with a small allowance for representation error in `T/Δt`.
    pub fn samples(&self) -> usize {
        let ratio = self.horizon / self.dt;
        (ratio + 1e-9 * ratio.max(1.0)).floor() as usize + 1
    }

    // Mass and stiffness matrices of the small-angle system M θ'' + K θ = 0.
    fn linear_mass(&self) -> [[f64; 2]; 2] {
        let c = self.m2 * self.l1 * self.l2;
        [
            [(self.m1 + self.m2) * self.l1 * self.l1, c],
            [c, self.m2 * self.l2 * self.l2],
        ]
    }

    fn linear_stiffness(&self) -> [f64; 2] {
        [
            (self.m1 + self.m2) * self.g * self.l1,
            self.m2 * self.g * self.l2,
        ]
    }

    /// Conserved quadratic energy `½ ωᵀMω + ½ θᵀKθ` of the linearized system.
    pub fn linear_energy(&self, state: &[f64; 4]) -> f64 {
        let m = self.linear_mass();
        let k = self.linear_stiffness();
        let [t1, t2, w1, w2] = *state;
        0.5 * (m[0][0] * w1 * w1 + 2.0 * m[0][1] * w1 * w2 + m[1][1] * w2 * w2)
            + 0.5 * (k[0] * t1 * t1 + k[1] * t2 * t2)
    }

    fn derivative(&self, fidelity: PendulumFidelity, s: &[f64; 4]) -> [f64; 4] {
        let [t1, t2, w1, w2] = *s;
        let (a1, a2) = match fidelity {
            PendulumFidelity::Nonlinear => {
                let (m1, m2, l1, l2, g) = (self.m1, self.m2, self.l1, self.l2, self.g);
                let d = t1 - t2;
                let den = 2.0 * m1 + m2 - m2 * (2.0 * d).cos();
                let a1 = (-g * (2.0 * m1 + m2) * t1.sin()
                    - m2 * g * (t1 - 2.0 * t2).sin()
                    - 2.0 * d.sin() * m2 * (w2 * w2 * l2 + w1 * w1 * l1 * d.cos()))
                    / (l1 * den);
                let a2 = 2.0
                    * d.sin()
                    * (w1 * w1 * l1 * (m1 + m2)
                        + g * (m1 + m2) * t1.cos()
                        + w2 * w2 * l2 * m2 * d.cos())
                    / (l2 * den);
                (a1, a2)
            }
            PendulumFidelity::Linear => {
                let m = self.linear_mass();
                let k = self.linear_stiffness();
                let f1 = -k[0] * t1;
                let f2 = -k[1] * t2;
                let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
                (
                    (m[1][1] * f1 - m[0][1] * f2) / det,
                    (m[0][0] * f2 - m[1][0] * f1) / det,
                )
            }
        };
        [w1, w2, a1, a2]
    }

    fn rk4_step(&self, fidelity: PendulumFidelity, s: &[f64; 4]) -> [f64; 4] {
        let h = self.dt;
        let add = |a: &[f64; 4], b: &[f64; 4], c: f64| {
            [
                a[0] + c * b[0],
                a[1] + c * b[1],
                a[2] + c * b[2],
                a[3] + c * b[3],
            ]
        };
        let k1 = self.derivative(fidelity, s);
        let k2 = self.derivative(fidelity, &add(s, &k1, 0.5 * h));
        let k3 = self.derivative(fidelity, &add(s, &k2, 0.5 * h));
        let k4 = self.derivative(fidelity, &add(s, &k3, h));
        let mut out = *s;
        for i in 0..4 {
            out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PendulumSeries {
    /// θ₂ at `t = 0, Δt, 2Δt, …`.
    pub theta2: Vec<f64>,
    /// Full state `(θ₁, θ₂, ω₁, ω₂)` at the last recorded time.
    pub final_state: [f64; 4],
    pub blew_up: bool,
}

/// Integrates from rest at the initial angles and records θ₂.
pub fn pendulum_series(spec: &PendulumSpec, fidelity: PendulumFidelity) -> Result<PendulumSeries> {
    spec.validate()?;
    let samples = spec.samples();
    let mut state = [spec.theta1, spec.theta2, 0.0, 0.0];
    let mut theta2 = Vec::with_capacity(samples);
    theta2.push(state[1]);
    let mut blew_up = false;
    for _ in 1..samples {
        state = spec.rk4_step(fidelity, &state);
        theta2.push(state[1]);
        if !(state[0].abs() <= BLOW_UP_ANGLE && state[1].abs() <= BLOW_UP_ANGLE) {
            blew_up = true;
            theta2.resize(samples, f64::NAN);
            break;
        }
    }
    Ok(PendulumSeries {
        theta2,
        final_state: state,
        blew_up,
    })
}
