use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::action::ActionContext;
use crate::error::{Error, Result};
use crate::grid::{LatticeShift, PeriodicField};
use crate::real::Real;

use super::projection::project_to_manifold;
use super::seed::{linking_seed, seed_index};
use super::{SolveConfig, SolveResult};

/// Smallest Armijo step before the descent is declared stalled.
const MIN_STEP: f64 = 1e-12;

/// Consecutive accepted steps that lower neither the value (beyond roundoff)
/// nor the gradient before the run is declared stalled. The roundoff slack
/// in the Armijo test can otherwise accept null steps forever at the
/// precision floor.
const STALL_LIMIT: usize = 25;

fn recoverable(e: &Error) -> bool {
    matches!(
        e,
        Error::SeedDegenerate
            | Error::ProjectionDiverged(_)
            | Error::CollapsedToZero
            | Error::NoConvergence(_)
    )
}

/// Projected-gradient descent of `±J_k` on the Nehari–Pankov set from a
/// field already on the set.
fn descend<T: Real>(
    ctx: &ActionContext<T>,
    start: PeriodicField<T>,
    cfg: &SolveConfig,
    run: usize,
) -> Result<SolveResult<T>> {
    let mut u = start;
    let mut phi = ctx.signed_energy(&u);
    let mut history = vec![phi];
    let armijo = T::lit(cfg.armijo);
    let tol = T::lit(cfg.descent_tol);
    // roundoff in Lu − f alone is about 1e3·ε relative in single precision
    let pde_rel = T::lit(1e-6).max(T::lit(1e3) * T::eps());
    let slack = T::lit(4.0) * T::eps();
    let mut iterations = 0;
    let mut stalls = 0;
    let mut best_gnorm = T::infinity();
    let mut converged = false;
    let mut gnorm;
    loop {
        let r = ctx.signed_gradient(&u);
        let g = ctx.decomposition().raise(&r)?;
        gnorm = r.dot(&g).max(T::zero()).sqrt();
        if gnorm < T::lit(0.9) * best_gnorm {
            best_gnorm = gnorm;
            stalls = 0;
        }
        let pde = r.l2_norm();
        if gnorm < tol && pde < pde_rel * ctx.h1_norm(&u) {
            converged = true;
            break;
        }
        if iterations >= cfg.descent_max_iter {
            break;
        }
        let mut step = T::lit(cfg.initial_step);
        let accepted = loop {
            let trial = u.add_scaled(-step, &g);
            match project_to_manifold(ctx, &trial, cfg) {
                Ok(v) => {
                    let phi_v = ctx.signed_energy(&v);
                    if phi_v <= phi - armijo * step * gnorm * gnorm + slack * phi.abs() {
                        break Some((v, phi_v));
                    }
                }
                Err(e) if recoverable(&e) => {}
                Err(e) => return Err(e),
            }
            step *= T::lit(0.5);
            if step < T::lit(MIN_STEP) {
                break None;
            }
        };
        match accepted {
            Some((v, phi_v)) => {
                if phi_v < phi - slack * phi.abs() {
                    stalls = 0;
                } else {
                    stalls += 1;
                }
                u = v;
                phi = phi_v;
                history.push(phi);
                iterations += 1;
                if stalls >= STALL_LIMIT {
                    break;
                }
            }
            None => break,
        }
    }
    Ok(finish(ctx, u, gnorm, iterations, converged, cfg.seed, run, history))
}

#[allow(clippy::too_many_arguments)]
fn finish<T: Real>(
    ctx: &ActionContext<T>,
    u: PeriodicField<T>,
    gradient_norm: T,
    iterations: usize,
    converged: bool,
    seed: u64,
    run: usize,
    history: Vec<T>,
) -> SolveResult<T> {
    let r = ctx.gradient(&u);
    let residual = ctx.residual_from_gradient(&u, &r);
    let energy = ctx.energy(&u);
    SolveResult {
        value: ctx.sign().factor::<T>() * energy,
        energy,
        residual,
        pde_residual_l2: r.l2_norm(),
        gradient_norm,
        iterations,
        converged,
        recenter_b: LatticeShift::zero(u.grid().dim()),
        sup_norm: u.sup_norm(),
        h1_norm: ctx.h1_norm(&u),
        seed,
        run,
        history,
        decay: None,
        u,
    }
}

/// One descent run started from `u0` (projected first). Used for warm starts.
pub fn minimize_from<T: Real>(
    ctx: &ActionContext<T>,
    u0: &PeriodicField<T>,
    cfg: &SolveConfig,
) -> Result<SolveResult<T>> {
    cfg.validate()?;
    let start = project_to_manifold(ctx, u0, cfg)?;
    descend(ctx, start, cfg, 0)
}

/// The seed eigenvector under a random localized envelope plus a little
/// low-mode noise.
fn perturbed_start<T: Real>(ctx: &ActionContext<T>, seed: u64, run: usize) -> Result<PeriodicField<T>> {
    let dec = ctx.decomposition();
    let grid = *ctx.grid();
    let z = dec.vector(seed_index(ctx)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(run as u64));
    let k = grid.cell_edge();
    let half = k as f64 / 2.0;
    let centre: Vec<f64> = (0..grid.dim())
        .map(|_| rng.random_range(0..k) as f64 - half)
        .collect();
    let width = rng.random_range(1.0..=(k as f64 / 8.0).max(1.0));
    let mut u = z.clone();
    for (j, v) in u.values_mut().iter_mut().enumerate() {
        let idx = grid.multi_index(j);
        let mut dist2 = 0.0;
        for (a, &c) in centre.iter().enumerate() {
            let x = idx[a] as f64 / grid.points_per_unit() as f64 - half;
            let d = (x - c + half).rem_euclid(k as f64) - half;
            dist2 += d * d;
        }
        *v *= T::lit(1.0 / (dist2.sqrt() / width).cosh());
    }
    let amp = u.sup_norm() * T::lit(0.02);
    let first = dec.split_index().min(dec.retained());
    let modes = (dec.retained() - first).min(8);
    for i in 0..modes {
        let e = dec.vector(first + i);
        let xi = T::lit(rng.random_range(-1.0..1.0));
        u.axpy_in_place(amp * xi / e.sup_norm().max(T::eps()), &e);
    }
    Ok(u)
}

fn better<T: Real>(a: &SolveResult<T>, b: &SolveResult<T>) -> bool {
    let tie = T::lit(1e-9);
    if (a.value - b.value).abs() <= tie {
        a.h1_norm < b.h1_norm
    } else {
        a.value < b.value
    }
}

/// Best ground-state candidate over the linking-seed run and
/// `cfg.restarts` randomly perturbed runs.
///
/// Runs that exhaust their caps still count, with `converged = false`.
pub fn minimize_ground_state<T: Real>(
    ctx: &ActionContext<T>,
    cfg: &SolveConfig,
) -> Result<SolveResult<T>> {
    cfg.validate()?;
    let mut best: Option<SolveResult<T>> = None;
    let mut last = String::from("no run attempted");
    for run in 0..=cfg.restarts {
        let start = if run == 0 {
            linking_seed(ctx)
        } else {
            perturbed_start(ctx, cfg.seed, run)
        };
        let outcome = start
            .and_then(|s| project_to_manifold(ctx, &s, cfg))
            .and_then(|u| descend(ctx, u, cfg, run));
        match outcome {
            Ok(r) => {
                if best.as_ref().is_none_or(|b| better(&r, b)) {
                    best = Some(r);
                }
            }
            Err(e) if recoverable(&e) => last = e.to_string(),
            Err(e) => return Err(e),
        }
    }
    best.ok_or(Error::AllRestartsCollapsed {
        restarts: cfg.restarts + 1,
        last,
    })
}
