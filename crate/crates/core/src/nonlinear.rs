//! Sign-definite power-type nonlinearities `f(x,u)`, their primitives and
//! derivatives, and numerical checks of the growth and superlinearity
//! hypotheses the solver relies on.

use crate::error::{Error, Result};
use crate::grid::{GridSpec, PeriodicField};
use crate::real::Real;
use crate::spectral::PeriodicFunction;

#[derive(Debug, Clone, PartialEq)]
pub enum NonlinearityKind<T> {
    /// `f = h(x)|u|^{p-2}u`.
    Power { weight: PeriodicFunction<T>, p: T },
    /// `f = c(x)u³`.
    Kerr { coupling: PeriodicFunction<T> },
}

/// A nonlinearity with the exponents that certify its hypotheses.
///
/// `q`, `theta` and `gamma` are declared, not derived, so that
/// [`check_assumptions`] can test a declaration against the actual `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearitySpec<T> {
    pub kind: NonlinearityKind<T>,
    /// Superlinearity exponent: `0 < qF ≤ uf`.
    pub q: T,
    /// Ratio constant: `f/u ≤ θ f'_u`.
    pub theta: T,
    /// Hölder exponent of `f'_u`.
    pub gamma: T,
    /// Global factor multiplying `f`; `0` gives the linear problem.
    pub scale: T,
}

impl<T: Real> NonlinearitySpec<T> {
    /// Power law with `q = p`, `θ = 1/(p-1)`, `γ = min(1, p-2)`.
    pub fn power(weight: PeriodicFunction<T>, p: T) -> Self {
        Self {
            kind: NonlinearityKind::Power { weight, p },
            q: p,
            theta: T::one() / (p - T::one()),
            gamma: (p - T::lit(2.0)).min(T::one()),
            scale: T::one(),
        }
    }

    /// `f = u³`.
    pub fn cubic() -> Self {
        Self::kerr(PeriodicFunction::constant(T::one()))
    }

    pub fn kerr(coupling: PeriodicFunction<T>) -> Self {
        Self {
            kind: NonlinearityKind::Kerr { coupling },
            q: T::lit(4.0),
            theta: T::one() / T::lit(3.0),
            gamma: T::one(),
            scale: T::one(),
        }
    }

    pub fn with_q(mut self, q: T) -> Self {
        self.q = q;
        self
    }

    pub fn with_theta(mut self, theta: T) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_gamma(mut self, gamma: T) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn scaled(mut self, factor: T) -> Self {
        self.scale *= factor;
        self
    }

    /// Growth exponent `p`.
    pub fn p(&self) -> T {
        match &self.kind {
            NonlinearityKind::Power { p, .. } => *p,
            NonlinearityKind::Kerr { .. } => T::lit(4.0),
        }
    }

    pub fn weight(&self) -> &PeriodicFunction<T> {
        match &self.kind {
            NonlinearityKind::Power { weight, .. } => weight,
            NonlinearityKind::Kerr { coupling } => coupling,
        }
    }

    /// Checks the declared exponents and the data of the weight.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let p = self.p();
        let two = T::lit(2.0);
        let bad = |msg: String| Err(Error::InvalidNonlinearity(msg));
        if !(p > two) || !p.is_finite() {
            return bad(format!("growth exponent p = {p} must satisfy 2 < p < ∞"));
        }
        if !(self.q > two) || !self.q.is_finite() {
            return bad(format!("q = {} must exceed 2", self.q));
        }
        if !(self.theta > T::zero() && self.theta < T::one()) {
            return bad(format!("θ = {} must lie in (0, 1)", self.theta));
        }
        if !(self.gamma > T::zero() && self.gamma <= T::one()) {
            return bad(format!("γ = {} must lie in (0, 1]", self.gamma));
        }
        if !(self.scale >= T::zero()) || !self.scale.is_finite() {
            return bad(format!("scale {} must be finite and nonnegative", self.scale));
        }
        self.weight()
            .validate(dim)
            .map_err(|e| Error::InvalidNonlinearity(e.to_string()))
    }

    /// Samples the weight on `grid` for repeated pointwise evaluation.
    pub fn sample(&self, grid: &GridSpec) -> Result<SampledNonlinearity<T>> {
        self.validate(grid.dim())?;
        let weight = self.weight().sample(grid)?.map(|h| h * self.scale);
        Ok(SampledNonlinearity {
            weight,
            p: self.p(),
        })
    }
}

/// Pointwise `|u|^e` with fast paths for the common integer exponents.
#[inline]
fn abs_pow<T: Real>(u: T, e: T) -> T {
    let a = u.abs();
    if e == T::lit(2.0) {
        a * a
    } else if e == T::one() {
        a
    } else if e == T::zero() {
        T::one()
    } else if a == T::zero() {
        T::zero()
    } else {
        a.powf(e)
    }
}

#[inline]
fn f_scalar<T: Real>(h: T, p: T, u: T) -> T {
    h * abs_pow(u, p - T::lit(2.0)) * u
}

#[inline]
fn primitive_scalar<T: Real>(h: T, p: T, u: T) -> T {
    h * abs_pow(u, p - T::lit(2.0)) * u * u / p
}

#[inline]
fn fprime_scalar<T: Real>(h: T, p: T, u: T) -> T {
    h * (p - T::one()) * abs_pow(u, p - T::lit(2.0))
}

/// A nonlinearity with its weight sampled on one grid.
#[derive(Debug, Clone)]
pub struct SampledNonlinearity<T> {
    weight: PeriodicField<T>,
    p: T,
}

impl<T: Real> SampledNonlinearity<T> {
    pub fn grid(&self) -> &GridSpec {
        self.weight.grid()
    }

    pub fn weight(&self) -> &PeriodicField<T> {
        &self.weight
    }

    pub fn p(&self) -> T {
        self.p
    }

    fn pointwise(&self, u: &PeriodicField<T>, g: impl Fn(T, T, T) -> T) -> PeriodicField<T> {
        self.weight.zip_map(u, |h, x| g(h, self.p, x))
    }

    pub fn f(&self, u: &PeriodicField<T>) -> PeriodicField<T> {
        self.pointwise(u, f_scalar)
    }

    pub fn primitive(&self, u: &PeriodicField<T>) -> PeriodicField<T> {
        self.pointwise(u, primitive_scalar)
    }

    pub fn fprime(&self, u: &PeriodicField<T>) -> PeriodicField<T> {
        self.pointwise(u, fprime_scalar)
    }

    /// `f(x, s·z(x))` integrated against `z`: `∫ f(sz) z`.
    pub fn ray_derivative_term(&self, z: &PeriodicField<T>, s: T) -> T {
        let w = z.grid().node_weight::<T>();
        self.weight
            .values()
            .iter()
            .zip(z.values())
            .fold(T::zero(), |acc, (&h, &zi)| acc + f_scalar(h, self.p, s * zi) * zi)
            * w
    }

    /// `∫ F(x, s·z(x))`.
    pub fn ray_primitive(&self, z: &PeriodicField<T>, s: T) -> T {
        let w = z.grid().node_weight::<T>();
        self.weight
            .values()
            .iter()
            .zip(z.values())
            .fold(T::zero(), |acc, (&h, &zi)| acc + primitive_scalar(h, self.p, s * zi))
            * w
    }
}

/// Pointwise `f(x, u(x))`.
pub fn eval_f<T: Real>(spec: &NonlinearitySpec<T>, u: &PeriodicField<T>) -> Result<PeriodicField<T>> {
    Ok(spec.sample(u.grid())?.f(u))
}

/// Pointwise `F(x, u(x)) = ∫₀^u f(x, s) ds`.
#[allow(non_snake_case)]
pub fn eval_F<T: Real>(spec: &NonlinearitySpec<T>, u: &PeriodicField<T>) -> Result<PeriodicField<T>> {
    Ok(spec.sample(u.grid())?.primitive(u))
}

/// Pointwise `∂f/∂u (x, u(x))`.
pub fn eval_fprime<T: Real>(
    spec: &NonlinearitySpec<T>,
    u: &PeriodicField<T>,
) -> Result<PeriodicField<T>> {
    Ok(spec.sample(u.grid())?.fprime(u))
}

/// Outcome of one numerical hypothesis check.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Measured constant (growth constant, best θ, Hölder constant, slope).
    pub measured: f64,
    /// Failing `(x-node, u)` when the check fails.
    pub witness: Option<(usize, f64)>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub checks: Vec<AssumptionCheck>,
    /// Growth constant `C` in `|f| ≤ C(1 + |u|^{p-1})`.
    pub growth_constant: f64,
    /// Smallest `θ` with `f/u ≤ θ f'_u` on the samples.
    pub best_theta: f64,
    /// Hölder constant of `f'_u` on sampled pairs.
    pub holder_constant: f64,
}

impl AssumptionReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| !c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// x-resolution of the probe grid on the unit cell.
const X_PROBE: usize = 16;

/// Evaluates every hypothesis on a probe grid of x-nodes and `samples`
/// log-spaced magnitudes `|u| ∈ [10⁻⁶ u_range, u_range]` of both signs.
pub fn assess_assumptions<T: Real>(
    spec: &NonlinearitySpec<T>,
    dim: usize,
    u_range: T,
    samples: usize,
) -> Result<AssumptionReport> {
    spec.validate(dim)?;
    if !(u_range > T::zero()) || samples < 8 {
        return Err(Error::InvalidNonlinearity(
            "u_range must be positive and samples at least 8".into(),
        ));
    }
    let probe = GridSpec::new(dim, 1, X_PROBE)?;
    let h: Vec<T> = spec
        .weight()
        .sample(&probe)?
        .values()
        .iter()
        .map(|&v| v * spec.scale)
        .collect();
    let p = spec.p();
    let two = T::lit(2.0);
    let decades = 6.0;
    let mags: Vec<T> = (0..samples)
        .map(|i| {
            let e = -decades + decades * i as f64 / (samples - 1) as f64;
            u_range * T::lit(10f64.powf(e))
        })
        .collect();
    let us: Vec<T> = mags.iter().flat_map(|&m| [m, -m]).collect();
    let mut checks = Vec::new();

    let (hmin_node, &hmin) = h
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite weight"))
        .expect("nonempty probe");
    checks.push(AssumptionCheck {
        name: "positivity",
        passed: hmin > T::zero(),
        measured: hmin.as_f64(),
        witness: (hmin <= T::zero()).then_some((hmin_node, u_range.as_f64())),
        detail: format!(
            "weight minimum {:e}; the nonlinearity must not change sign in x",
            hmin.as_f64()
        ),
    });

    let mut growth = T::zero();
    let mut best_theta = T::zero();
    let mut v_fail: Option<(usize, T, String)> = None;
    let mut vp_fail: Option<(usize, T, String)> = None;
    let q = spec.q;
    let rel = T::lit(1e-12);
    for (node, &hx) in h.iter().enumerate() {
        for &u in &us {
            let f = f_scalar(hx, p, u);
            let big_f = primitive_scalar(hx, p, u);
            let fp = fprime_scalar(hx, p, u);
            growth = growth.max(f.abs() / (T::one() + abs_pow(u, p - T::one())));
            let uf = u * f;
            if v_fail.is_none() && !(q * big_f > T::zero() && q * big_f <= uf * (T::one() + rel)) {
                v_fail = Some((
                    node,
                    u,
                    format!("qF = {:e}, uf = {:e}", (q * big_f).as_f64(), uf.as_f64()),
                ));
            }
            let ratio = f / u;
            if ratio > T::zero() && fp > T::zero() {
                best_theta = best_theta.max(ratio / fp);
            } else if vp_fail.is_none() {
                vp_fail = Some((
                    node,
                    u,
                    format!("f/u = {:e}, f'_u = {:e}", ratio.as_f64(), fp.as_f64()),
                ));
            }
        }
    }
    checks.push(AssumptionCheck {
        name: "(iii)",
        passed: growth.is_finite(),
        measured: growth.as_f64(),
        witness: None,
        detail: format!("|f| ≤ C(1 + |u|^(p-1)) with C = {:e}", growth.as_f64()),
    });

    let sup_ratio = |m: T| {
        h.iter()
            .fold(T::zero(), |acc, &hx| acc.max(f_scalar(hx, p, m).abs() / m))
    };
    let lo = mags[0];
    let mid = mags[samples / 2];
    let (r_lo, r_mid) = (sup_ratio(lo), sup_ratio(mid));
    let slope = if r_lo > T::zero() && r_mid > T::zero() {
        ((r_mid / r_lo).ln() / (mid / lo).ln()).as_f64()
    } else if r_lo == T::zero() {
        f64::INFINITY
    } else {
        0.0
    };
    checks.push(AssumptionCheck {
        name: "(iv)",
        passed: slope > 0.0,
        measured: slope,
        witness: (slope <= 0.0).then_some((0, lo.as_f64())),
        detail: format!("log-log slope of sup|f|/|u| near 0 is {slope:.4}; must be positive"),
    });

    checks.push(match &v_fail {
        None => AssumptionCheck {
            name: "(v)",
            passed: true,
            measured: q.as_f64(),
            witness: None,
            detail: format!("0 < qF ≤ uf holds with q = {q}"),
        },
        Some((node, u, d)) => AssumptionCheck {
            name: "(v)",
            passed: false,
            measured: q.as_f64(),
            witness: Some((*node, u.as_f64())),
            detail: format!("0 < qF ≤ uf fails with q = {q}: {d}"),
        },
    });

    let theta_ok = vp_fail.is_none() && best_theta <= spec.theta * (T::one() + rel);
    checks.push(AssumptionCheck {
        name: "(v')",
        passed: theta_ok,
        measured: best_theta.as_f64(),
        witness: vp_fail.as_ref().map(|(n, u, _)| (*n, u.as_f64())),
        detail: match &vp_fail {
            Some((_, _, d)) => format!("0 < f/u ≤ θ f'_u fails: {d}"),
            None => format!(
                "best θ = {:e}, declared θ = {:e}",
                best_theta.as_f64(),
                spec.theta.as_f64()
            ),
        },
    });

    let gamma = spec.gamma;
    let holder = |scale: T| {
        let mut c = T::zero();
        for &hx in &h {
            for (i, &a) in us.iter().enumerate() {
                for &b in us.iter().skip(i + 1) {
                    let (a, b) = (a * scale, b * scale);
                    let d = (a - b).abs();
                    if d == T::zero() {
                        continue;
                    }
                    let lhs = (fprime_scalar(hx, p, a) - fprime_scalar(hx, p, b)).abs();
                    let base = T::one() + a.abs() + b.abs();
                    let rhs = base.powf(p - two - gamma) * d.powf(gamma);
                    c = c.max(lhs / rhs);
                }
            }
        }
        c
    };
    let c_base = holder(T::one());
    let c_wide = holder(T::lit(100.0));
    let bounded = c_base.is_finite() && c_wide <= T::lit(2.0) * c_base.max(T::eps());
    checks.push(AssumptionCheck {
        name: "(vii)",
        passed: bounded,
        measured: c_base.as_f64(),
        witness: None,
        detail: format!(
            "Hölder constant {:e} on the sample range, {:e} at 100x scale",
            c_base.as_f64(),
            c_wide.as_f64()
        ),
    });

    Ok(AssumptionReport {
        checks,
        growth_constant: growth.as_f64(),
        best_theta: best_theta.as_f64(),
        holder_constant: c_base.as_f64(),
    })
}

/// Like [`assess_assumptions`], failing on the first violated hypothesis.
pub fn check_assumptions<T: Real>(
    spec: &NonlinearitySpec<T>,
    dim: usize,
    u_range: T,
    samples: usize,
) -> Result<AssumptionReport> {
    let report = assess_assumptions(spec, dim, u_range, samples)?;
    if let Some(c) = report.first_failure() {
        let (node, u) = c.witness.unwrap_or((0, 0.0));
        return Err(Error::AssumptionViolated {
            assumption: c.name,
            node,
            u,
            detail: c.detail.clone(),
        });
    }
    Ok(report)
}
