use nalgebra::{DMatrix, DVector};

use crate::action::ActionContext;
use crate::error::{Error, Result};
use crate::grid::PeriodicField;
use crate::real::Real;

use super::seed::ray_maximizer;
use super::{SolveConfig, COLLAPSE_NORM};

/// `G̃(u) = (∫r̃u, (r̃, b_i))` and the merit `I²/‖u‖⁴ + Σ c_i²/(|λ_i|‖u‖²)`
/// in the `H¹` norm. Being scale free, the merit cannot be driven down by
/// shrinking towards the trivial zero of `G̃`.
struct Residual<T: Real> {
    i_value: T,
    c: DVector<T>,
    merit: T,
}

fn residual<T: Real>(ctx: &ActionContext<T>, u: &PeriodicField<T>) -> Residual<T> {
    let r = ctx.signed_gradient(u);
    let i_value = r.dot(u);
    let c = ctx.constrained_coefficients(&r);
    let lam = ctx.constrained_signed_eigenvalues();
    let n2 = {
        let h = ctx.h1_norm(u);
        h * h
    };
    let merit = c
        .iter()
        .zip(lam.iter())
        .fold(i_value * i_value / (n2 * n2), |a, (&ci, &l)| a + ci * ci / (l.abs() * n2));
    Residual { i_value, c, merit }
}

/// Newton's method on `G̃` in the coordinates `δ = τu + Σβ_i b_i`.
///
/// Returns the projected field, or the reason Newton gave up. Iterates
/// stay in `span(u₀) ⊕ E∓`; `t` tracks the coefficient along `u₀`.
fn newton<T: Real>(
    ctx: &ActionContext<T>,
    u0: &PeriodicField<T>,
    cfg: &SolveConfig,
) -> Result<PeriodicField<T>> {
    let grid = *ctx.grid();
    let w = grid.node_weight::<T>();
    let basis = ctx.constrained_basis();
    let lam = ctx.constrained_signed_eigenvalues();
    let m = lam.len();
    let tol = T::lit(cfg.newton_tol);
    let floor = T::lit(cfg.newton_step_floor);
    let collapse = T::lit(COLLAPSE_NORM);

    let mut u = u0.clone();
    let mut t = T::one();
    let mut res = residual(ctx, &u);
    for _ in 0..=cfg.newton_max_iter {
        if res.merit.sqrt() < tol {
            if t <= T::zero() {
                return Err(Error::ProjectionDiverged(
                    "converged on the opposite half-space".into(),
                ));
            }
            return Ok(u);
        }
        let fp = ctx.sampled().fprime(&u);
        let hu = {
            let lu = ctx.decomposition().operator().apply(&u).scaled(ctx.sign().factor());
            lu.sub(&fp.zip_map(&u, |a, b| a * b))
        };
        let uvec = DVector::from_column_slice(u.values());
        let fpu = DVector::from_iterator(grid.len(), fp.values().iter().zip(u.values()).map(|(&a, &b)| a * b));
        let pu = basis.tr_mul(&uvec) * w;
        let qv = basis.tr_mul(&fpu) * w;
        let mut a = DMatrix::<T>::zeros(m + 1, m + 1);
        a[(0, 0)] = hu.dot(&u) + res.i_value;
        for j in 0..m {
            a[(0, j + 1)] = lam[j] * pu[j] - qv[j] + res.c[j];
            a[(j + 1, 0)] = lam[j] * pu[j] - qv[j];
        }
        if m > 0 {
            let mut weighted = basis.clone();
            for (row, &f) in fp.values().iter().enumerate() {
                let s = f * w;
                for col in 0..m {
                    weighted[(row, col)] *= s;
                }
            }
            let block = basis.tr_mul(&weighted);
            for i in 0..m {
                for j in 0..m {
                    a[(i + 1, j + 1)] = -block[(i, j)];
                }
                a[(i + 1, i + 1)] += lam[i];
            }
        }
        let mut rhs = DVector::<T>::zeros(m + 1);
        rhs[0] = -res.i_value;
        for j in 0..m {
            rhs[j + 1] = -res.c[j];
        }
        let sol = a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::ProjectionDiverged("singular Newton system".into()))?;
        let tau = sol[0];
        let h = basis * sol.rows(1, m);
        let mut dir = u.scaled(tau);
        for (d, &hv) in dir.values_mut().iter_mut().zip(h.iter()) {
            *d += hv;
        }

        let mut step = T::one();
        loop {
            let trial = u.add_scaled(step, &dir);
            let rest = residual(ctx, &trial);
            if rest.merit < res.merit && rest.merit.is_finite() {
                u = trial;
                res = rest;
                t *= T::one() + step * tau;
                break;
            }
            step *= T::lit(0.5);
            if step < floor {
                return Err(Error::ProjectionDiverged(format!(
                    "line search hit the step floor at residual {:e}",
                    res.merit.sqrt().as_f64()
                )));
            }
        }
        if u.l2_norm() < collapse {
            return Err(Error::CollapsedToZero);
        }
    }
    Err(Error::ProjectionDiverged(format!(
        "no convergence in {} Newton iterations (residual {:e})",
        cfg.newton_max_iter,
        res.merit.sqrt().as_f64()
    )))
}

/// Removes the constrained component and rescales to the ray maximum.
fn ray_prescale<T: Real>(ctx: &ActionContext<T>, u: &PeriodicField<T>) -> Result<PeriodicField<T>> {
    let basis = ctx.constrained_basis();
    let w = ctx.grid().node_weight::<T>();
    let coeff = basis.tr_mul(&DVector::from_column_slice(u.values())) * w;
    let comp = basis * coeff;
    let mut z = u.clone();
    for (a, &b) in z.values_mut().iter_mut().zip(comp.iter()) {
        *a -= b;
    }
    if z.l2_norm() < T::lit(COLLAPSE_NORM) {
        return Err(Error::CollapsedToZero);
    }
    let t = ray_maximizer(ctx, &z).map_err(|e| match e {
        Error::SeedDegenerate => {
            Error::ProjectionDiverged("no maximum of the action along the ray".into())
        }
        other => other,
    })?;
    Ok(z.scaled(t))
}

/// The point of the Nehari–Pankov set in the half-space `ℝ⁺u₀ ⊕ E∓`.
///
/// Newton runs from `u₀` directly; if that fails, the start is first moved
/// to the maximum of the action along its ray, which keeps Newton away
/// from the trivial zero of `G`.
pub fn project_to_manifold<T: Real>(
    ctx: &ActionContext<T>,
    u0: &PeriodicField<T>,
    cfg: &SolveConfig,
) -> Result<PeriodicField<T>> {
    ctx.grid().ensure_same(u0.grid())?;
    if u0.l2_norm() < T::lit(COLLAPSE_NORM) {
        return Err(Error::CollapsedToZero);
    }
    match newton(ctx, u0, cfg) {
        Ok(u) => Ok(u),
        Err(first) => {
            let start = ray_prescale(ctx, u0).map_err(|e| match e {
                Error::ProjectionDiverged(_) => first,
                other => other,
            })?;
            newton(ctx, &start, cfg)
        }
    }
}
