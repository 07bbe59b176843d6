//! Steady viscous Burgers equation `u u_x = ν u_xx` on (−1, 1) with
//! `u(−1) = 1 + δ`, `u(1) = −1`.
//!
//! Space: conservative Engquist–Osher upwind flux for the convection term,
//! central differences for diffusion. The steady state is reached by
//! implicit pseudo-time marching whose step starts at the explicit CFL limit
//! (safety 0.4) and grows with the residual reduction, ending in Newton steps.
//! The march starts from the exact tanh solution of the continuous problem.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_DTAU: f64 = 1e14;
const CFL_SAFETY: f64 = 0.4;
// Pseudo-time step growth per accepted step, at least.
const MIN_GROWTH: f64 = 1.2;
// A step that raises the residual by more than this factor is retried with a smaller step.
const REJECT_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurgersSpec {
    pub viscosity: f64,
    /// Perturbation of the left boundary value.
    pub delta: f64,
    /// Number of interior grid points.
    pub nx: usize,
    /// Convergence threshold on the ∞-norm of successive iterate changes.
    pub tolerance: f64,
    pub max_steps: usize,
}

impl BurgersSpec {
    pub fn new(viscosity: f64, delta: f64, nx: usize) -> Self {
        BurgersSpec {
            viscosity,
            delta,
            nx,
            tolerance: 1e-10,
            max_steps: 10_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.viscosity > 0.0) || !self.viscosity.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "viscosity must be positive, got {}",
                self.viscosity
            )));
        }
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "boundary perturbation must be non-negative, got {}",
                self.delta
            )));
        }
        if self.nx < 8 {
            return Err(Error::InvalidArgument(format!(
                "need at least 8 interior points, got {}",
                self.nx
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        2.0 / (self.nx + 1) as f64
    }

    /// Grid coordinates including both boundary points.
    pub fn coordinates(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.nx + 2)
            .map(|i| {
                if i == self.nx + 1 {
                    1.0
                } else {
                    -1.0 + h * i as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BurgersSolution {
    /// Values at all `nx + 2` grid points, boundaries included.
    pub profile: Vec<f64>,
    pub converged: bool,
    pub steps: usize,
    /// ∞-norm of the last iterate change.
    pub last_change: f64,
    /// ∞-norm of the discrete steady residual at the returned profile.
    pub residual: f64,
}

fn flux_plus(u: f64) -> f64 {
    let p = u.max(0.0);
    0.5 * p * p
}

fn flux_minus(u: f64) -> f64 {
    let m = u.min(0.0);
    0.5 * m * m
}

// Engquist–Osher numerical flux at the interface between `left` and `right`.
fn interface_flux(left: f64, right: f64) -> f64 {
    flux_plus(left) + flux_minus(right)
}

/// Discrete steady residual at the interior points.
fn residual(u: &[f64], nu: f64, h: f64, out: &mut [f64]) {
    let inv_h = 1.0 / h;
    let diff = nu / (h * h);
    for i in 1..u.len() - 1 {
        let conv = (interface_flux(u[i], u[i + 1]) - interface_flux(u[i - 1], u[i])) * inv_h;
        out[i - 1] = -conv + diff * (u[i + 1] - 2.0 * u[i] + u[i - 1]);
    }
}

// Tridiagonal bands of I/Δτ − J, where J is the Jacobian of the steady residual.
fn assemble_jacobian(
    u: &[f64],
    nu: f64,
    h: f64,
    dtau: f64,
    lower: &mut [f64],
    diag: &mut [f64],
    upper: &mut [f64],
) {
    let diff = nu / (h * h);
    for k in 0..diag.len() {
        let i = k + 1;
        let d_left = u[i - 1].max(0.0) / h + diff;
        let d_center = -(u[i].max(0.0) - u[i].min(0.0)) / h - 2.0 * diff;
        let d_right = -u[i + 1].min(0.0) / h + diff;
        lower[k] = -d_left;
        diag[k] = 1.0 / dtau - d_center;
        upper[k] = -d_right;
    }
}

// Solves a tridiagonal system in place (Thomas algorithm). `rhs` holds the solution on return.
fn solve_tridiagonal(lower: &[f64], diag: &mut [f64], upper: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    for i in 1..n {
        let w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for i in (0..n - 1).rev() {
        rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
    }
}

// Amplitude and centre of the exact steady solution `−A tanh(A (x − x₀) / 2ν)`
// of the continuous problem, used as the starting iterate.
fn continuous_layer(nu: f64, left: f64) -> (f64, f64) {
    let centre = |a: f64| 1.0 - 2.0 * nu * (1.0 / a).atanh() / a;
    let mismatch = |a: f64| a * (a * (1.0 + centre(a)) / (2.0 * nu)).tanh() - left;
    let mut lo = left;
    let mut hi = 2.0 * left;
    while mismatch(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mismatch(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let a = 0.5 * (lo + hi);
    (a, centre(a))
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Marches to the steady profile. Non-convergence is reported through
/// [`BurgersSolution::converged`] rather than as an error.
pub fn burgers_steady(spec: &BurgersSpec) -> Result<BurgersSolution> {
    spec.validate()?;
    let n = spec.nx;
    let h = spec.spacing();
    let nu = spec.viscosity;
    let left = 1.0 + spec.delta;
    let right = -1.0;

    let x = spec.coordinates();
    let (amp, centre) = continuous_layer(nu, left);
    let mut u: Vec<f64> = x
        .iter()
        .map(|xi| -amp * (amp * (xi - centre) / (2.0 * nu)).tanh())
        .collect();
    u[0] = left;
    u[n + 1] = right;

    let wave_speed = left.abs().max(right.abs());
    let dtau0 = CFL_SAFETY * (h / wave_speed).min(h * h / (2.0 * nu));
    let mut dtau = dtau0;

    let mut r = vec![0.0; n];
    residual(&u, nu, h, &mut r);
    let mut r_norm = inf_norm(&r);

    let (mut lower, mut diag, mut upper) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut last_change = f64::INFINITY;

    for step in 1..=spec.max_steps {
        assemble_jacobian(&u, nu, h, dtau, &mut lower, &mut diag, &mut upper);
        let mut delta = r.clone();
        solve_tridiagonal(&lower, &mut diag, &upper, &mut delta);

        let mut trial = u.clone();
        for (k, d) in delta.iter().enumerate() {
            trial[k + 1] += d;
        }
        let change = inf_norm(&delta);
        if !change.is_finite() {
            last_change = change;
            break;
        }
        let mut trial_r = vec![0.0; n];
        residual(&trial, nu, h, &mut trial_r);
        let new_norm = inf_norm(&trial_r);
        if new_norm > REJECT_FACTOR * r_norm && dtau > dtau0 {
            dtau = (dtau / REJECT_FACTOR).max(dtau0);
            continue;
        }
        u = trial;
        r = trial_r;
        last_change = change;
        let ratio = if new_norm > 0.0 {
            r_norm / new_norm
        } else {
            f64::INFINITY
        };
        dtau = (dtau * ratio.max(MIN_GROWTH)).clamp(dtau0, MAX_DTAU);
        r_norm = new_norm;

        if last_change < spec.tolerance {
            // Confirm with a full Newton correction: the distance to the discrete steady state.
            assemble_jacobian(&u, nu, h, f64::INFINITY, &mut lower, &mut diag, &mut upper);
            let mut newton = r.clone();
            solve_tridiagonal(&lower, &mut diag, &upper, &mut newton);
            if inf_norm(&newton) < spec.tolerance {
                return Ok(BurgersSolution {
                    profile: u,
                    converged: true,
                    steps: step,
                    last_change,
                    residual: r_norm,
                });
            }
        }
    }

    Ok(BurgersSolution {
        profile: u,
        converged: false,
        steps: spec.max_steps,
        last_change,
        residual: r_norm,
    })
}

/// Location of the sign change of a profile on the given grid, by linear interpolation.
pub fn zero_crossing(x: &[f64], profile: &[f64]) -> Option<f64> {
    profile.windows(2).zip(x.windows(2)).find_map(|(u, xs)| {
        if u[0] > 0.0 && u[1] <= 0.0 {
            Some(xs[0] + (xs[1] - xs[0]) * u[0] / (u[0] - u[1]))
        } else {
            None
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interpolate(x: &[f64], u: &[f64], at: f64) -> f64 {
        let i = x.windows(2).position(|w| w[0] <= at && at <= w[1]).unwrap();
        let t = (at - x[i]) / (x[i + 1] - x[i]);
        u[i] + t * (u[i + 1] - u[i])
    }

    #[test]
    fn dirichlet_values_are_exact() {
        let spec = BurgersSpec::new(0.3, 0.07, 40);
        let sol = burgers_steady(&spec).unwrap();
        assert!(sol.converged);
        assert_eq!(sol.profile.len(), 42);
        assert_eq!(sol.profile[0], 1.07);
        assert_eq!(sol.profile[41], -1.0);
    }

    #[test]
    fn diffusion_dominated_profile_is_nearly_linear() {
        let coarse = BurgersSpec::new(10.0, 0.0, 40);
        let fine = BurgersSpec::new(10.0, 0.0, 81);
        let a = burgers_steady(&coarse).unwrap();
        let b = burgers_steady(&fine).unwrap();
        assert!(a.converged && b.converged);
        assert!(a.profile.windows(2).all(|w| w[1] < w[0]));
        let xa = coarse.coordinates();
        let xb = fine.coordinates();
        let mid = interpolate(&xa, &a.profile, 0.0);
        assert!(mid.abs() < 0.05);
        // The doubled grid agrees at the shared nodes to discretization accuracy.
        for (i, xi) in xa.iter().enumerate() {
            let ub = interpolate(&xb, &b.profile, *xi);
            assert!((a.profile[i] - ub).abs() < 1e-3);
        }
        // Nearly linear: deviation from the chord is small.
        for (xi, ui) in xa.iter().zip(&a.profile) {
            assert!((ui + xi).abs() < 0.05);
        }
    }

    #[test]
    fn layer_moves_right_with_boundary_perturbation() {
        let spec = |delta| BurgersSpec::new(0.1, delta, 256);
        let mut last = f64::NEG_INFINITY;
        for delta in [0.0, 0.01, 0.03, 0.06, 0.1] {
            let s = spec(delta);
            let sol = burgers_steady(&s).unwrap();
            assert!(sol.converged, "delta {delta}");
            let z = zero_crossing(&s.coordinates(), &sol.profile).unwrap();
            assert!(z > last, "delta {delta}: {z} <= {last}");
            last = z;
        }
        assert!(last > 0.3);
    }

    #[test]
    fn steady_residual_is_small() {
        for nu in [0.1, 0.37, 1.0] {
            let sol = burgers_steady(&BurgersSpec::new(nu, 0.05, 256)).unwrap();
            assert!(sol.converged);
            assert!(sol.residual < 1e-6, "nu {nu}: {}", sol.residual);
        }
    }

    #[test]
    fn extra_steps_do_not_change_converged_profile() {
        let mut spec = BurgersSpec::new(0.2, 0.04, 40);
        let a = burgers_steady(&spec).unwrap();
        spec.max_steps *= 2;
        let b = burgers_steady(&spec).unwrap();
        let change = a
            .profile
            .iter()
            .zip(&b.profile)
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(change < spec.tolerance);
    }

    #[test]
    fn non_convergence_is_flagged() {
        let mut spec = BurgersSpec::new(0.1, 0.05, 64);
        spec.max_steps = 2;
        let sol = burgers_steady(&spec).unwrap();
        assert!(!sol.converged);
        assert_eq!(sol.profile.len(), 66);
    }

    #[test]
    fn invalid_specs() {
        assert!(burgers_steady(&BurgersSpec::new(0.0, 0.0, 40)).is_err());
        assert!(burgers_steady(&BurgersSpec::new(0.1, -0.1, 40)).is_err());
        assert!(burgers_steady(&BurgersSpec::new(0.1, 0.0, 7)).is_err());
    }
}
