//! Ground states by minimization on the Nehari–Pankov set.
//!
//! A field is pulled onto the set by Newton's method in the transverse
//! coordinates `ℝu ⊕ E∓`; descent steps follow the `k`-metric gradient
//! and are re-projected after every step.

mod descent;
mod projection;
mod seed;
mod verify;

use serde::{Deserialize, Serialize};

use crate::action::NehariResidual;
use crate::continuation::DecayFit;
use crate::grid::{LatticeShift, PeriodicField};
use crate::real::Real;

pub use descent::{minimize_from, minimize_ground_state};
pub use projection::project_to_manifold;
pub use seed::{linking_seed, ray_maximizer};
pub use verify::{verify_critical_point, verify_field, VerificationReport, VerifyOptions};

/// Tolerances and caps of the solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    /// Newton projection stops once `‖G(u)‖ < newton_tol`.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Smallest damping factor of the Newton line search.
    pub newton_step_floor: f64,
    /// Descent stops once the `k`-norm of the projected gradient is below this.
    pub descent_tol: f64,
    pub descent_max_iter: usize,
    pub armijo: f64,
    pub initial_step: f64,
    /// Randomly perturbed runs in addition to the one from the linking seed.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            newton_tol: 1e-10,
            newton_max_iter: 50,
            newton_step_floor: 1e-4,
            descent_tol: 1e-8,
            descent_max_iter: 5000,
            armijo: 1e-4,
            initial_step: 1.0,
            restarts: 3,
            seed: 0,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> crate::Result<()> {
        let positive = [
            ("newton_tol", self.newton_tol),
            ("newton_step_floor", self.newton_step_floor),
            ("descent_tol", self.descent_tol),
            ("armijo", self.armijo),
            ("initial_step", self.initial_step),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(crate::Error::NoConvergence(format!(
                    "solver setting {name} = {v} must be positive"
                )));
            }
        }
        if self.newton_max_iter == 0 || self.descent_max_iter == 0 {
            return Err(crate::Error::NoConvergence(
                "iteration caps must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Collapse threshold on `‖u‖_{L²}`.
pub const COLLAPSE_NORM: f64 = 1e-12;

/// A ground-state candidate.
#[derive(Debug, Clone)]
pub struct SolveResult<T: Real> {
    pub u: PeriodicField<T>,
    /// `±J_k(u)`, the candidate `m±_k`.
    pub value: T,
    /// `J_k(u)` itself.
    pub energy: T,
    pub residual: NehariResidual<T>,
    /// `‖−Δu + Vu ∓ f‖_{L²}`.
    pub pde_residual_l2: T,
    /// `k`-norm of the projected gradient at the last iterate.
    pub gradient_norm: T,
    pub iterations: usize,
    pub converged: bool,
    pub recenter_b: LatticeShift,
    pub sup_norm: T,
    pub h1_norm: T,
    /// PRNG seed of the perturbed restarts.
    pub seed: u64,
    /// Which run produced this result (0 = linking seed).
    pub run: usize,
    /// `±J_k` after every accepted descent step.
    pub history: Vec<T>,
    pub decay: Option<DecayFit<T>>,
}
