//! Passing from `Q_k` to `ℝ^N`: integer recentering, zero-extension into
//! larger cells, warm-started sweeps over `k`, and decay diagnostics.

use std::time::Instant;

use crate::action::ActionContext;
use crate::error::{Error, Result};
use crate::grid::{translate_field, GridSpec, LatticeShift, PeriodicField};
use crate::real::Real;
use crate::solver::{minimize_from, minimize_ground_state, SolveConfig, SolveResult};
use crate::spectral::{EigenOptions, SpectralGap};

/// Moves the largest `|u|` into the unit cell at the centre of `Q_k` by an
/// integer lattice translation, returning `(u(· + b), b)`.
///
/// Among equal maxima the shift of smallest magnitude wins, then the
/// lexicographically smallest one; this keeps the map idempotent under
/// periodic wraparound.
pub fn recenter<T: Real>(u: &PeriodicField<T>) -> Result<(PeriodicField<T>, LatticeShift)> {
    let grid = *u.grid();
    let peak = u.sup_norm();
    if peak == T::zero() {
        return Err(Error::InvalidField("cannot recenter the zero field".into()));
    }
    let n = grid.points_per_unit() as i64;
    let c = grid.center_node() as i64;
    let cutoff = peak * (T::one() - T::lit(1e-12));
    let mut best: Option<Vec<i64>> = None;
    for (j, &v) in u.values().iter().enumerate() {
        if v.abs() < cutoff {
            continue;
        }
        let idx = grid.multi_index(j);
        let b: Vec<i64> = (0..grid.dim())
            .map(|a| (idx[a] as i64 - c + n / 2).div_euclid(n))
            .collect();
        let key = |b: &[i64]| (b.iter().map(|x| x.abs()).sum::<i64>(), b.to_vec());
        if best.as_ref().is_none_or(|cur| key(&b) < key(cur)) {
            best = Some(b);
        }
    }
    let b = LatticeShift(best.expect("a node attains the maximum"));
    Ok((translate_field(u, &b)?, b))
}

/// Zero-extension of `u` into the larger cell `target`, keeping the lattice
/// aligned and the old centre as close to the new centre as the lattice allows.
pub fn extend_to_grid<T: Real>(u: &PeriodicField<T>, target: &GridSpec) -> Result<PeriodicField<T>> {
    let src = *u.grid();
    if src.dim() != target.dim()
        || src.points_per_unit() != target.points_per_unit()
        || target.cell_edge() < src.cell_edge()
    {
        return Err(Error::GridMismatch(format!(
            "cannot extend {src:?} into {target:?}"
        )));
    }
    let n = src.points_per_unit();
    let offset = n * ((target.cell_edge() - src.cell_edge()) / 2);
    let mut out = PeriodicField::zeros(*target);
    for (j, &v) in u.values().iter().enumerate() {
        let idx = src.multi_index(j);
        let moved = [idx[0] + offset, if src.dim() == 2 { idx[1] + offset } else { 0 }];
        out.values_mut()[target.flat_index(moved)] = v;
    }
    Ok(out)
}

pub fn extend_to_cell<T: Real>(u: &PeriodicField<T>, cell_edge: usize) -> Result<PeriodicField<T>> {
    extend_to_grid(u, &u.grid().with_cell_edge(cell_edge)?)
}

/// `u` on `Q_k` placed in the middle of `Q_{2k}`, zero elsewhere.
pub fn extend_to_doubled_cell<T: Real>(u: &PeriodicField<T>) -> Result<PeriodicField<T>> {
    extend_to_cell(u, 2 * u.grid().cell_edge())
}

/// Relative amplitude window of the shells used in a decay fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayWindow {
    pub lo: f64,
    pub hi: f64,
}

impl Default for DecayWindow {
    fn default() -> Self {
        Self { lo: 1e-8, hi: 1e-2 }
    }
}

/// `|u(x)| ≈ C e^{−λ|x|}` fitted on shell maxima.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit<T> {
    pub lambda: T,
    pub prefactor: T,
    /// Smallest and largest shell radius used.
    pub window: (usize, usize),
    pub r_squared: T,
    /// `λ / α^{1/2}`.
    pub lambda_vs_gap: T,
    /// Every shell `(r, max{|u(x)| : r ≤ |x| < r+1})` of the cell.
    pub shells: Vec<(usize, T)>,
}

/// Shell maxima of `|u|` around the centre, for `r = 0 .. ⌈k√N/2⌉`.
pub fn shell_maxima<T: Real>(u: &PeriodicField<T>) -> Vec<(usize, T)> {
    let grid = *u.grid();
    let k = grid.cell_edge() as f64;
    let rmax = (k * (grid.dim() as f64).sqrt() / 2.0).ceil() as usize + 1;
    let mut shells = vec![T::zero(); rmax];
    for (j, &v) in u.values().iter().enumerate() {
        let idx = grid.multi_index(j);
        let r2: f64 = (0..grid.dim())
            .map(|a| grid.centered_coordinate::<f64>(idx[a]).powi(2))
            .sum();
        let r = r2.sqrt().floor() as usize;
        if r < rmax {
            shells[r] = shells[r].max(v.abs());
        }
    }
    shells.into_iter().enumerate().collect()
}

/// Least-squares line through `(x, y)`: slope, intercept, `r²`, slope stderr.
fn line_fit(points: &[(f64, f64)]) -> (f64, f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let stderr = if points.len() > 2 {
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        f64::INFINITY
    };
    (slope, intercept, r2, stderr)
}

/// Exponential decay rate of a recentered field.
pub fn fit_decay_rate<T: Real>(u: &PeriodicField<T>, gap: &SpectralGap<T>) -> Result<DecayFit<T>> {
    fit_decay_rate_with(u, gap, DecayWindow::default())
}

pub fn fit_decay_rate_with<T: Real>(
    u: &PeriodicField<T>,
    gap: &SpectralGap<T>,
    window: DecayWindow,
) -> Result<DecayFit<T>> {
    let sup = u.sup_norm().as_f64();
    if !(sup > 0.0) {
        return Err(Error::InvalidField("cannot fit the decay of the zero field".into()));
    }
    let shells = shell_maxima(u);
    let r_hi = (u.grid().cell_edge() / 2).saturating_sub(1);
    let points: Vec<(f64, f64)> = shells
        .iter()
        .filter(|(r, m)| {
            let rel = m.as_f64() / sup;
            *r >= 1 && *r <= r_hi && rel >= window.lo && rel <= window.hi
        })
        .map(|(r, m)| (*r as f64, m.as_f64().ln()))
        .collect();
    if points.len() < 4 {
        return Err(Error::WindowTooSmall {
            shells: points.len(),
        });
    }
    let (slope, intercept, r2, _) = line_fit(&points);
    let lambda = -slope;
    Ok(DecayFit {
        lambda: T::lit(lambda),
        prefactor: T::lit(intercept.exp()),
        window: (points[0].0 as usize, points[points.len() - 1].0 as usize),
        r_squared: T::lit(r2),
        lambda_vs_gap: T::lit(lambda / gap.alpha().as_f64().sqrt()),
        shells,
    })
}

/// `max |u|` on the outermost shell `|x| ≥ k/2 − 1` relative to `sup |u|`.
pub fn boundary_ratio<T: Real>(u: &PeriodicField<T>) -> T {
    let grid = *u.grid();
    let edge = grid.cell_edge() as f64 / 2.0 - 1.0;
    let mut m = T::zero();
    for (j, &v) in u.values().iter().enumerate() {
        let idx = grid.multi_index(j);
        let r2: f64 = (0..grid.dim())
            .map(|a| grid.centered_coordinate::<f64>(idx[a]).powi(2))
            .sum();
        if r2.sqrt() >= edge {
            m = m.max(v.abs());
        }
    }
    m / u.sup_norm()
}

/// Boundary smallness threshold for localized states.
pub const BOUNDARY_SMALLNESS: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct KSweepRecord<T: Real> {
    pub k: usize,
    /// `m_k = ±J_k(u_k)`.
    pub value: T,
    pub sup_norm: T,
    pub h1_norm: T,
    pub decay: Option<DecayFit<T>>,
    pub converged: bool,
    /// False when the state is not small on the outer shell: `k` too small.
    pub boundary_ok: bool,
    pub wall_time: f64,
    pub result: SolveResult<T>,
}

#[derive(Debug, Clone)]
pub struct KSweep<T: Real> {
    pub records: Vec<KSweepRecord<T>>,
    /// `|m_{k_{i+1}} − m_{k_i}| < k_conv_tol·|m|` at the last step.
    pub converged: bool,
    /// The `k` at which the sweep stopped, and why.
    pub failure: Option<(usize, String)>,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub solve: SolveConfig,
    pub eigen: EigenOptions,
    pub k_conv_tol: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            solve: SolveConfig::default(),
            eigen: EigenOptions::default(),
            k_conv_tol: 1e-4,
        }
    }
}

/// Checks a sweep list: strictly increasing, each entry dividing the next.
pub fn validate_k_list(k_list: &[usize]) -> Result<()> {
    if k_list.is_empty() {
        return Err(Error::InvalidSweep("empty k list".into()));
    }
    for w in k_list.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidSweep(format!(
                "k list must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        if w[1] % w[0] != 0 {
            return Err(Error::InvalidSweep(format!("{} does not divide {}", w[0], w[1])));
        }
    }
    Ok(())
}

/// Solves on `Q_k` for each `k` in turn: the first from scratch, each later
/// one warm-started from the recentered, zero-extended previous solution.
///
/// `ctx` fixes the problem and resolution; its own cell edge is ignored.
pub fn k_sweep<T: Real>(
    ctx: &ActionContext<T>,
    k_list: &[usize],
    cfg: &SweepConfig,
) -> Result<KSweep<T>> {
    validate_k_list(k_list)?;
    let mut records: Vec<KSweepRecord<T>> = Vec::new();
    let mut previous: Option<PeriodicField<T>> = None;
    for &k in k_list {
        let started = Instant::now();
        let grid = ctx.grid().with_cell_edge(k)?;
        let attempt = (|| -> Result<SolveResult<T>> {
            let local = ctx.regrid(&grid, &cfg.eigen)?;
            let mut result = match &previous {
                None => minimize_ground_state(&local, &cfg.solve)?,
                Some(u) => minimize_from(&local, &extend_to_grid(u, &grid)?, &cfg.solve)?,
            };
            let (u, b) = recenter(&result.u)?;
            result.u = u;
            result.recenter_b = b;
            result.decay = fit_decay_rate(&result.u, local.gap()).ok();
            Ok(result)
        })();
        let result = match attempt {
            Ok(r) => r,
            Err(e) if e.is_refusal() => return Err(e),
            Err(e) => {
                return Ok(KSweep {
                    records,
                    converged: false,
                    failure: Some((k, e.to_string())),
                })
            }
        };
        previous = Some(result.u.clone());
        records.push(KSweepRecord {
            k,
            value: result.value,
            sup_norm: result.sup_norm,
            h1_norm: result.h1_norm,
            decay: result.decay.clone(),
            converged: result.converged,
            boundary_ok: boundary_ratio(&result.u) <= T::lit(BOUNDARY_SMALLNESS),
            wall_time: started.elapsed().as_secs_f64(),
            result,
        });
    }
    let converged = match records.as_slice() {
        [.., a, b] => {
            (b.value - a.value).abs() < T::lit(cfg.k_conv_tol) * b.value.abs()
        }
        _ => false,
    };
    Ok(KSweep {
        records,
        converged,
        failure: None,
    })
}

/// One member of a family of solutions approaching a gap edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeRecord {
    pub alpha: f64,
    pub alpha_plus: f64,
    pub alpha_minus: Option<f64>,
    pub h1_norm: f64,
    pub sup_norm: f64,
}

/// Power-law fit `‖u‖_{H¹} ∝ a^{exponent}` for one choice of gap width `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentFit {
    pub exponent: f64,
    pub stderr: f64,
    /// `exponent ± 2·stderr`.
    pub band: (f64, f64),
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeScaling {
    /// Fit against `α = min(α₋, α₊)`.
    pub alpha: ExponentFit,
    pub alpha_plus: ExponentFit,
    /// Present when every record has a finite `α₋`.
    pub alpha_minus: Option<ExponentFit>,
    /// `sup|u|` decreases as `α → 0`, allowing 5% slack between neighbours.
    pub sup_monotone: bool,
    /// `sup|u|` decreases strictly as `α → 0`.
    pub sup_strictly_monotone: bool,
}

fn exponent_fit(xs: &[f64], ys: &[f64]) -> Result<ExponentFit> {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).map(|(x, y)| (x.ln(), y.ln())).collect();
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(0.0, f64::max);
    let mut distinct: Vec<f64> = xs.to_vec();
    distinct.sort_by(|a, b| a.partial_cmp(b).expect("finite gap width"));
    distinct.dedup();
    if distinct.len() < 4 || !(hi / lo >= 10.0 * (1.0 - 1e-12)) {
        return Err(Error::InsufficientSpan(format!(
            "{} distinct gap widths spanning a factor {:.3}; need 4 spanning a decade",
            distinct.len(),
            hi / lo
        )));
    }
    let (slope, _, r2, se) = line_fit(&pts);
    Ok(ExponentFit {
        exponent: slope,
        stderr: se,
        band: (slope - 2.0 * se, slope + 2.0 * se),
        r_squared: r2,
    })
}

/// Slope of `log ‖u‖_{H¹}` against `log α` over a family of solutions.
pub fn edge_scaling_probe(records: &[EdgeRecord]) -> Result<EdgeScaling> {
    if records.len() < 4 {
        return Err(Error::InsufficientSpan(format!(
            "{} records; need at least 4",
            records.len()
        )));
    }
    let h1: Vec<f64> = records.iter().map(|r| r.h1_norm).collect();
    let a: Vec<f64> = records.iter().map(|r| r.alpha).collect();
    let ap: Vec<f64> = records.iter().map(|r| r.alpha_plus).collect();
    let alpha = exponent_fit(&a, &h1)?;
    let alpha_plus = exponent_fit(&ap, &h1)?;
    let alpha_minus = records
        .iter()
        .map(|r| r.alpha_minus)
        .collect::<Option<Vec<f64>>>()
        .and_then(|am| exponent_fit(&am, &h1).ok());
    let mut by_alpha: Vec<&EdgeRecord> = records.iter().collect();
    by_alpha.sort_by(|x, y| x.alpha.partial_cmp(&y.alpha).expect("finite α"));
    let sup_monotone = by_alpha
        .windows(2)
        .all(|w| w[0].sup_norm <= 1.05 * w[1].sup_norm);
    let sup_strictly_monotone = by_alpha.windows(2).all(|w| w[0].sup_norm < w[1].sup_norm);
    Ok(EdgeScaling {
        alpha,
        alpha_plus,
        alpha_minus,
        sup_monotone,
        sup_strictly_monotone,
    })
}
