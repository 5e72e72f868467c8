use crate::action::ActionContext;
use crate::error::{Error, Result};
use crate::grid::PeriodicField;
use crate::real::Real;

use super::{SolveResult, COLLAPSE_NORM};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    /// `‖r‖_{L²} < pde_rel_tol·‖u‖_{H¹}`.
    pub pde_rel_tol: f64,
    /// `|∫(½fu − F) − (±J_k)| ≤ identity_tol·max(1, |J_k|)`.
    pub identity_tol: f64,
    /// `‖J'_k(u)‖_k ≤ gradient_tol·max(1, ‖u‖_{H¹})`.
    pub gradient_tol: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            pde_rel_tol: 1e-6,
            identity_tol: 1e-8,
            gradient_tol: 1e-6,
        }
    }
}

/// Measured quantities of a verified critical point.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub value: f64,
    pub energy: f64,
    pub h1_norm: f64,
    pub sup_norm: f64,
    pub pde_residual_l2: f64,
    /// `‖J'_k(u)‖_k` for the unconstrained functional.
    pub full_gradient_norm: f64,
    /// `|∫(½fu − F) − (±J_k)|`.
    pub identity_error: f64,
    pub nehari_residual: f64,
    /// `‖u‖_{H¹}·α^{1/2} / (|c|^{1/2} + |c|^{1/p'})`, tracked for boundedness.
    pub bound_ratio: f64,
}

fn fail(check: &'static str, detail: String) -> Error {
    Error::VerificationFailed { check, detail }
}

/// Substitutes `u` back into the equation and checks every property a
/// nontrivial critical point on the Nehari–Pankov set must have.
pub fn verify_field<T: Real>(
    ctx: &ActionContext<T>,
    u: &PeriodicField<T>,
    opts: &VerifyOptions,
) -> Result<VerificationReport> {
    ctx.grid().ensure_same(u.grid())?;
    if u.l2_norm() < T::lit(COLLAPSE_NORM) {
        return Err(fail("nontriviality", "the field is zero".into()));
    }
    let h1 = ctx.h1_norm(u).as_f64();
    let r = ctx.gradient(u);
    let pde = r.l2_norm().as_f64();
    if !(pde < opts.pde_rel_tol * h1) {
        return Err(fail(
            "pde_residual",
            format!("‖−Δu+Vu∓f‖ = {pde:e} exceeds {:e}·‖u‖_H1 = {:e}", opts.pde_rel_tol, opts.pde_rel_tol * h1),
        ));
    }
    let energy = ctx.energy(u).as_f64();
    let value = ctx.sign().factor::<f64>() * energy;
    let residual = ctx.nehari_residual(u);
    let identity = ctx
        .nehari_value_identity_with_tol(u, T::infinity())?
        .value
        .as_f64();
    let identity_error = (identity - value).abs();
    if !(identity_error <= opts.identity_tol * energy.abs().max(1.0)) {
        return Err(fail(
            "identity",
            format!("∫(½fu − F) = {identity:e} differs from ±J = {value:e} by {identity_error:e}"),
        ));
    }
    if !(value > 0.0) {
        return Err(fail("positivity", format!("±J = {value:e} is not positive")));
    }
    let g = ctx.decomposition().raise(&r)?;
    let full = r.dot(&g).max(T::zero()).sqrt().as_f64();
    if !(full <= opts.gradient_tol * h1.max(1.0)) {
        return Err(fail(
            "full_gradient",
            format!("‖J'(u)‖_k = {full:e} is not small"),
        ));
    }
    let alpha = ctx.gap().alpha().as_f64();
    let p = ctx.nonlinearity().p().as_f64();
    let p_conj = p / (p - 1.0);
    let c = value.abs();
    let bound_ratio = h1 * alpha.sqrt() / (c.sqrt() + c.powf(1.0 / p_conj));
    if !bound_ratio.is_finite() {
        return Err(fail("bound", format!("norm bound ratio {bound_ratio} is not finite")));
    }
    Ok(VerificationReport {
        value,
        energy,
        h1_norm: h1,
        sup_norm: u.sup_norm().as_f64(),
        pde_residual_l2: pde,
        full_gradient_norm: full,
        identity_error,
        nehari_residual: residual.norm.as_f64(),
        bound_ratio,
    })
}

/// [`verify_field`] on the field of a solve.
pub fn verify_critical_point<T: Real>(
    ctx: &ActionContext<T>,
    result: &SolveResult<T>,
) -> Result<VerificationReport> {
    verify_field(ctx, &result.u, &VerifyOptions::default())
}
