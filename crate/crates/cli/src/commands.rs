use std::path::Path;
use std::time::Instant;

use gapsol::action::{ActionContext, Sign};
use gapsol::continuation::{fit_decay_rate, k_sweep, recenter, shell_maxima, DecayFit, SweepConfig};
use gapsol::dump::read_field_dump;
use gapsol::grid::{GridSpec, PeriodicField};
use gapsol::nonlinear::{check_assumptions, NonlinearitySpec};
use gapsol::photonic::{bifurcation_sweep, frequency_gap_map, reduce_to_nls, solve_gap_soliton};
use gapsol::solver::{minimize_ground_state, verify_field, SolveResult, VerifyOptions};
use gapsol::spectral::{bloch_bands, find_gap_at_zero, PotentialSpec, SpectralGap};
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::{ConfigError, ProblemSource, RunConfig};
use crate::output::{jnum, num, opt_num, Output};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Solver(#[from] gapsol::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for refusals of the problem itself, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Solver(e) if e.is_refusal() => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Magnitude range probed when checking the nonlinearity hypotheses.
const ASSUMPTION_PROBE_RANGE: f64 = 1e3;
const ASSUMPTION_PROBE_SAMPLES: usize = 24;

/// `(V, f, sign)` of the configured problem.
fn problem(cfg: &RunConfig) -> CliResult<(PotentialSpec<f64>, NonlinearitySpec<f64>, Sign)> {
    match &cfg.source {
        ProblemSource::Potential {
            potential,
            nonlinearity,
            sign,
        } => Ok((potential.clone(), nonlinearity.clone(), *sign)),
        ProblemSource::Medium { .. } => {
            let m = cfg.medium()?;
            Ok(reduce_to_nls(&m).map_err(|e| e.at_stage("reduce"))?)
        }
    }
}

fn linear_potential(cfg: &RunConfig) -> CliResult<PotentialSpec<f64>> {
    match &cfg.source {
        ProblemSource::Potential { potential, .. } => Ok(potential.clone()),
        ProblemSource::Medium { .. } => Ok(cfg.medium()?.potential()),
    }
}

fn single_grid(cfg: &RunConfig) -> CliResult<GridSpec> {
    let g = cfg
        .grid
        .as_ref()
        .ok_or_else(|| ConfigError::Validation {
            key: "grid".into(),
            message: "required for this command".into(),
        })?;
    let k = g.k.ok_or_else(|| ConfigError::Validation {
        key: "grid.k".into(),
        message: "required for this command".into(),
    })?;
    Ok(GridSpec::new(cfg.dimension, k, g.n)?)
}

fn context(cfg: &RunConfig, grid: &GridSpec) -> CliResult<ActionContext<f64>> {
    let (v, f, sign) = problem(cfg)?;
    check_assumptions(&f, cfg.dimension, ASSUMPTION_PROBE_RANGE, ASSUMPTION_PROBE_SAMPLES)
        .map_err(|e| e.at_stage("nonlinearity"))?;
    Ok(ActionContext::prepare(v, f, sign, grid, &cfg.prepare_options())?)
}

fn gap_json(g: &SpectralGap<f64>) -> Value {
    g.to_json()
}

fn decay_json(d: &Option<DecayFit<f64>>) -> Value {
    match d {
        Some(d) => json!({
            "lambda": d.lambda,
            "prefactor": d.prefactor,
            "r_squared": d.r_squared,
            "window": [d.window.0, d.window.1],
            "lambda_over_sqrt_alpha": d.lambda_vs_gap,
        }),
        None => Value::Null,
    }
}

fn grid_json(g: &GridSpec) -> Value {
    json!({"dim": g.dim(), "k": g.cell_edge(), "n": g.points_per_unit()})
}

fn result_json(gap: &SpectralGap<f64>, sign: Sign, r: &SolveResult<f64>) -> Value {
    json!({
        "value": r.value,
        "energy": r.energy,
        "sup_norm": r.sup_norm,
        "h1_norm": r.h1_norm,
        "residuals": {
            "pde_l2": r.pde_residual_l2,
            "gradient_k": r.gradient_norm,
            "nehari_i": r.residual.i_value,
            "nehari_constrained": r.residual.g_minus_norm,
            "nehari": r.residual.norm,
        },
        "iterations": r.iterations,
        "converged": r.converged,
        "seed": r.seed,
        "run": r.run,
        "alpha": gap.alpha(),
        "gap": gap_json(gap),
        "sign": sign.to_string(),
        "grid": grid_json(r.u.grid()),
        "recenter_b": r.recenter_b.components(),
        "decay": decay_json(&r.decay),
    })
}

fn write_profile(out: &mut Output, u: &PeriodicField<f64>) -> CliResult<()> {
    let g = *u.grid();
    if g.dim() == 1 {
        let rows: Vec<String> = u
            .values()
            .iter()
            .enumerate()
            .map(|(j, &v)| format!("{},{}", num(g.centered_coordinate::<f64>(j)), num(v)))
            .collect();
        out.csv("profile.csv", "x,u", &rows)?;
    }
    let rows: Vec<String> = shell_maxima(u)
        .iter()
        .map(|(r, m)| format!("{r},{}", num(*m)))
        .collect();
    out.csv("decay.csv", "r,shell_max", &rows)?;
    Ok(())
}

pub fn band(cfg: &RunConfig) -> CliResult<()> {
    let v = linear_potential(cfg)?;
    let opts = cfg.prepare_options();
    let bands = bloch_bands(&v, cfg.dimension, &opts.bloch).map_err(|e| e.at_stage("bands"))?;
    let header = if cfg.dimension == 1 {
        "theta_0,band_index,lambda"
    } else {
        "theta_0,theta_1,band_index,lambda"
    };
    let mut rows = Vec::new();
    for (theta, vals) in bands.thetas.iter().zip(&bands.values) {
        let t: Vec<String> = theta.iter().map(|&x| num(x)).collect();
        for (j, &l) in vals.iter().enumerate() {
            rows.push(format!("{},{j},{}", t.join(","), num(l)));
        }
    }
    let gap = match find_gap_at_zero(&bands, opts.eigen.tau_spec) {
        Ok(g) => json!({"status": "gap", "gap": gap_json(&g)}),
        Err(e) => json!({"status": "no_gap", "reason": e.to_string()}),
    };
    let mut out = Output::for_config(cfg)?;
    out.csv("bands.csv", header, &rows)?;
    out.json(
        "bands.json",
        json!({
            "dim": cfg.dimension,
            "n_theta": opts.bloch.n_theta,
            "intervals": bands.intervals.iter().map(|&(a, b)| [a, b]).collect::<Vec<_>>(),
            "gap_at_zero": gap,
        }),
    )?;
    eprintln!("bands written to {}", out.dir().display());
    Ok(())
}

pub fn gapmap(cfg: &RunConfig) -> CliResult<()> {
    let (epsilon, beta) = match &cfg.source {
        ProblemSource::Medium { epsilon, beta, .. } => (epsilon.clone(), *beta),
        ProblemSource::Potential { .. } => {
            return Err(ConfigError::Validation {
                key: "problem.medium".into(),
                message: "gapmap needs a photonic medium".into(),
            }
            .into())
        }
    };
    let gm = cfg.gapmap.as_ref().ok_or_else(|| ConfigError::Validation {
        key: "gapmap".into(),
        message: "gapmap needs omega_min and omega_max".into(),
    })?;
    let map = frequency_gap_map(
        &epsilon,
        beta,
        (gm.omega_min, gm.omega_max),
        gm.n_samples,
        cfg.dimension,
        &cfg.prepare_options(),
    )?;
    let rows: Vec<String> = map
        .rows
        .iter()
        .map(|r| {
            let (am, ap) = match r.gap {
                Some(g) => (opt_num(g.alpha_minus), num(g.alpha_plus)),
                None => (String::new(), String::new()),
            };
            format!("{},{},{am},{ap}", num(r.omega), r.status.as_str())
        })
        .collect();
    let edges: Vec<Value> = map
        .edges
        .iter()
        .map(|e| {
            json!({
                "omega": e.omega,
                "bracket": [e.bracket.0, e.bracket.1],
                "edge": if e.upper { "omega_plus" } else { "omega_minus" },
            })
        })
        .collect();
    let mut out = Output::for_config(cfg)?;
    out.csv("gapmap.csv", "omega,status,alpha_minus,alpha_plus", &rows)?;
    out.json("gapmap.json", json!({"beta": beta, "edges": edges}))?;
    for e in &map.edges {
        eprintln!(
            "{} = {}",
            if e.upper { "omega_plus" } else { "omega_minus" },
            e.omega
        );
    }
    Ok(())
}

pub fn solve(cfg: &RunConfig, seed: Option<u64>) -> CliResult<()> {
    let mut solver = cfg.solver.clone();
    if let Some(s) = seed {
        solver.seed = s;
    }
    let grid = single_grid(cfg)?;
    let started = Instant::now();
    let (result, ctx) = match &cfg.source {
        ProblemSource::Medium { .. } => {
            let m = cfg.medium()?;
            solve_gap_soliton(&m, &grid, &solver, &cfg.prepare_options())?
        }
        ProblemSource::Potential { .. } => {
            let ctx = context(cfg, &grid)?;
            let mut r = minimize_ground_state(&ctx, &solver).map_err(|e| e.at_stage("minimize"))?;
            let (u, b) = recenter(&r.u).map_err(|e| e.at_stage("recenter"))?;
            r.u = u;
            r.recenter_b = b;
            r.decay = fit_decay_rate(&r.u, ctx.gap()).ok();
            (r, ctx)
        }
    };
    let verification = match verify_field(&ctx, &result.u, &VerifyOptions::default()) {
        Ok(rep) => json!({"passed": true, "identity_error": rep.identity_error,
                          "full_gradient_norm": rep.full_gradient_norm, "bound_ratio": rep.bound_ratio}),
        Err(e) => json!({"passed": false, "reason": e.to_string()}),
    };
    let mut body = result_json(ctx.gap(), ctx.sign(), &result);
    body["verification"] = verification;
    let mut out = Output::for_config(cfg)?;
    out.json("solve.json", body)?;
    out.field("u.bin", &result.u)?;
    write_profile(&mut out, &result.u)?;
    let hist: Vec<String> = result
        .history
        .iter()
        .enumerate()
        .map(|(i, v)| format!("{i},{}", num(*v)))
        .collect();
    out.csv("history.csv", "iteration,value", &hist)?;
    if !result.converged {
        eprintln!("warning: descent stopped before meeting its tolerance");
    }
    eprintln!(
        "value = {} (converged: {}, {:.2} s)",
        result.value,
        result.converged,
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

pub fn ksweep(cfg: &RunConfig) -> CliResult<()> {
    let g = cfg.grid.as_ref().ok_or_else(|| ConfigError::Validation {
        key: "grid".into(),
        message: "required for this command".into(),
    })?;
    let k_list = g.k_list.clone().ok_or_else(|| ConfigError::Validation {
        key: "grid.k_list".into(),
        message: "ksweep needs a list of cell edges".into(),
    })?;
    let first = GridSpec::new(cfg.dimension, *k_list.first().unwrap_or(&1), g.n)?;
    let ctx = context(cfg, &first)?;
    let opts = cfg.prepare_options();
    let sweep_cfg = SweepConfig {
        solve: cfg.solver.clone(),
        eigen: opts.eigen,
        ..SweepConfig::default()
    };
    let sweep = k_sweep(&ctx, &k_list, &sweep_cfg)?;
    let rows: Vec<String> = sweep
        .records
        .iter()
        .map(|r| {
            let (l, r2) = r
                .decay
                .as_ref()
                .map_or((String::new(), String::new()), |d| (num(d.lambda), num(d.r_squared)));
            format!(
                "{},{},{},{},{l},{r2},{}",
                r.k,
                num(r.value),
                num(r.sup_norm),
                num(r.h1_norm),
                r.converged
            )
        })
        .collect();
    for r in &sweep.records {
        eprintln!("k = {}: m_k = {} ({:.2} s)", r.k, r.value, r.wall_time);
    }
    let mut out = Output::for_config(cfg)?;
    out.csv("ksweep.csv", "k,m_k,sup_norm,h1_norm,lambda,r2,converged", &rows)?;
    let records: Vec<Value> = sweep
        .records
        .iter()
        .map(|r| {
            json!({
                "k": r.k,
                "result": result_json(ctx.gap(), ctx.sign(), &r.result),
                "boundary_small": r.boundary_ok,
            })
        })
        .collect();
    out.json(
        "ksweep.json",
        json!({
            "converged": sweep.converged,
            "failure": sweep.failure.as_ref().map(|(k, m)| json!({"k": k, "reason": m})),
            "records": records,
        }),
    )?;
    if let Some(last) = sweep.records.last() {
        out.field("u.bin", &last.result.u)?;
        write_profile(&mut out, &last.result.u)?;
    }
    if let Some((k, why)) = &sweep.failure {
        eprintln!("sweep stopped at k = {k}: {why}");
    }
    Ok(())
}

pub fn bifurcate(cfg: &RunConfig) -> CliResult<()> {
    let (epsilon, chi, beta) = match &cfg.source {
        ProblemSource::Medium {
            epsilon, chi, beta, ..
        } => (epsilon.clone(), chi.clone(), *beta),
        ProblemSource::Potential { .. } => {
            return Err(ConfigError::Validation {
                key: "problem.medium".into(),
                message: "bifurcate needs a photonic medium".into(),
            }
            .into())
        }
    };
    let bc = cfg.bifurcate.as_ref().ok_or_else(|| ConfigError::Validation {
        key: "bifurcate.omegas".into(),
        message: "bifurcate needs a list of frequencies".into(),
    })?;
    let grid = single_grid(cfg)?;
    let sweep = bifurcation_sweep(
        &epsilon,
        &chi,
        beta,
        &bc.omegas,
        &grid,
        &cfg.solver,
        &cfg.prepare_options(),
    )?;
    let rows: Vec<String> = sweep
        .records
        .iter()
        .map(|r| {
            let alpha = r.alpha().map_or(String::new(), num);
            match &r.result {
                Some(s) => format!(
                    "{},{alpha},{},{},{},{},{}",
                    num(r.omega),
                    num(s.h1_norm),
                    num(s.sup_norm),
                    num(s.value),
                    s.decay.as_ref().map_or(String::new(), |d| num(d.lambda)),
                    s.converged
                ),
                None => format!("{},{alpha},,,,,false", num(r.omega)),
            }
        })
        .collect();
    let scaling = match &sweep.scaling {
        Ok(s) => {
            let fit = |f: &gapsol::continuation::ExponentFit| {
                json!({"exponent": f.exponent, "stderr": f.stderr,
                       "band": [f.band.0, f.band.1], "r_squared": f.r_squared})
            };
            json!({
                "alpha": fit(&s.alpha),
                "alpha_plus": fit(&s.alpha_plus),
                "alpha_minus": s.alpha_minus.as_ref().map(fit),
                "sup_decreasing_toward_edge": s.sup_monotone,
                "sup_strictly_decreasing_toward_edge": s.sup_strictly_monotone,
            })
        }
        Err(why) => json!({"unavailable": why}),
    };
    let failures: Vec<Value> = sweep
        .records
        .iter()
        .filter_map(|r| r.failure.as_ref().map(|f| json!({"omega": r.omega, "reason": f})))
        .collect();
    let mut out = Output::for_config(cfg)?;
    out.csv(
        "bifurcation.csv",
        "omega,alpha,h1_norm,sup_norm,value,lambda,converged",
        &rows,
    )?;
    out.json(
        "bifurcation.json",
        json!({
            "beta": beta,
            "scaling": scaling,
            "bound_exponent": jnum(sweep.bound_exponent),
            "failures": failures,
        }),
    )?;
    for f in &failures {
        eprintln!("skipped ω = {}: {}", f["omega"], f["reason"]);
    }
    Ok(())
}

pub fn verify(cfg: &RunConfig, field: &Path) -> CliResult<()> {
    let u: PeriodicField<f64> = read_field_dump(field)?;
    if u.grid().dim() != cfg.dimension {
        return Err(gapsol::Error::GridMismatch(format!(
            "field is {}-dimensional, config is {}-dimensional",
            u.grid().dim(),
            cfg.dimension
        ))
        .into());
    }
    let ctx = context(cfg, u.grid())?;
    let rep = verify_field(&ctx, &u, &VerifyOptions::default())?;
    let mut out = Output::for_config(cfg)?;
    out.json(
        "verify.json",
        json!({
            "field": field.display().to_string(),
            "grid": grid_json(u.grid()),
            "value": rep.value,
            "energy": rep.energy,
            "h1_norm": rep.h1_norm,
            "sup_norm": rep.sup_norm,
            "pde_residual_l2": rep.pde_residual_l2,
            "full_gradient_norm": rep.full_gradient_norm,
            "identity_error": rep.identity_error,
            "nehari_residual": rep.nehari_residual,
            "bound_ratio": jnum(rep.bound_ratio),
            "passed": true,
        }),
    )?;
    eprintln!("verified: value = {}", rep.value);
    Ok(())
}
