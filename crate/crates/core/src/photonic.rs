//! Kerr photonic crystals in the E-mode reduction
//! `−Δu − ω²ε(x)u + β²u = ω²χ(x)u³`.

use serde::Serialize;

use crate::action::{ActionContext, PrepareOptions, Sign};
use crate::continuation::{edge_scaling_probe, fit_decay_rate, recenter, EdgeRecord, EdgeScaling};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::nonlinear::NonlinearitySpec;
use crate::real::Real;
use crate::solver::{minimize_ground_state, SolveConfig, SolveResult};
use crate::spectral::{bloch_bands, find_gap_at_zero, BlochOptions, PeriodicFunction, PotentialSpec, SpectralGap};

/// Dielectric data `ε`, `χ` of the unit cell at frequency `ω` and
/// propagation constant `β`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonicMedium<T> {
    pub epsilon: PeriodicFunction<T>,
    pub chi: PeriodicFunction<T>,
    pub omega: T,
    pub beta: T,
    pub dim: usize,
}

impl<T: Real> PhotonicMedium<T> {
    pub fn new(
        epsilon: PeriodicFunction<T>,
        chi: PeriodicFunction<T>,
        omega: T,
        beta: T,
        dim: usize,
    ) -> Result<Self> {
        let m = Self {
            epsilon,
            chi,
            omega,
            beta,
            dim,
        };
        m.validate()?;
        Ok(m)
    }

    /// Uniform medium with constant `ε` and `χ`.
    pub fn uniform(epsilon: T, chi: T, omega: T, beta: T, dim: usize) -> Result<Self> {
        Self::new(
            PeriodicFunction::constant(epsilon),
            PeriodicFunction::constant(chi),
            omega,
            beta,
            dim,
        )
    }

    pub fn with_omega(&self, omega: T) -> Result<Self> {
        Self::new(self.epsilon.clone(), self.chi.clone(), omega, self.beta, self.dim)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 1 && self.dim != 2 {
            return Err(Error::InvalidMedium(format!("dimension {} is not 1 or 2", self.dim)));
        }
        if !(self.omega > T::zero()) || !self.omega.is_finite() {
            return Err(Error::InvalidMedium(format!("ω = {} must be positive", self.omega)));
        }
        if !(self.beta >= T::zero()) || !self.beta.is_finite() {
            return Err(Error::InvalidMedium(format!("β = {} must be nonnegative", self.beta)));
        }
        let (eps_lo, _) = self
            .epsilon
            .range(self.dim)
            .map_err(|e| Error::InvalidMedium(e.to_string()))?;
        if !(eps_lo > T::zero()) {
            return Err(Error::InvalidMedium(format!(
                "ε must be bounded below by a positive constant, min ε = {eps_lo}"
            )));
        }
        self.focusing().map(|_| ())
    }

    /// `Plus` for self-focusing media (`χ > 0`), `Minus` for defocusing ones.
    pub fn focusing(&self) -> Result<Sign> {
        let (lo, hi) = self
            .chi
            .range(self.dim)
            .map_err(|e| Error::InvalidMedium(e.to_string()))?;
        if lo > T::zero() {
            Ok(Sign::Plus)
        } else if hi < T::zero() {
            Ok(Sign::Minus)
        } else {
            Err(Error::MixedSignChi)
        }
    }

    /// `V = β² − ω²ε`.
    pub fn potential(&self) -> PotentialSpec<T> {
        self.epsilon
            .affine(-self.omega * self.omega, self.beta * self.beta)
    }
}

/// The Schrödinger problem of the medium: `V = β² − ω²ε`, `f = ω²|χ|u³`,
/// and the sign of `χ`.
pub fn reduce_to_nls<T: Real>(
    m: &PhotonicMedium<T>,
) -> Result<(PotentialSpec<T>, NonlinearitySpec<T>, Sign)> {
    m.validate()?;
    let sign = m.focusing()?;
    let w2 = m.omega * m.omega;
    let coupling = m.chi.affine(sign.factor::<T>() * w2, T::zero());
    Ok((m.potential(), NonlinearitySpec::kerr(coupling), sign))
}

/// Where 0 sits relative to the spectrum of `−Δ + β² − ω²ε`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GapStatus {
    /// 0 lies in a finite gap, with spectrum on both sides.
    FiniteGap,
    /// 0 lies below the spectrum.
    BelowSpectrum,
    /// 0 lies in a band.
    InBand,
    /// Too few bands were computed to find spectrum above 0.
    Unresolved,
}

impl GapStatus {
    pub fn is_gap(self) -> bool {
        matches!(self, GapStatus::FiniteGap | GapStatus::BelowSpectrum)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GapStatus::FiniteGap => "finite_gap",
            GapStatus::BelowSpectrum => "below_spectrum",
            GapStatus::InBand => "in_band",
            GapStatus::Unresolved => "unresolved",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapMapRow<T> {
    pub omega: T,
    pub status: GapStatus,
    pub gap: Option<SpectralGap<T>>,
}

impl<T: Real> GapMapRow<T> {
    pub fn alpha_minus(&self) -> Option<T> {
        self.gap.and_then(|g| g.alpha_minus)
    }

    pub fn alpha_plus(&self) -> Option<T> {
        self.gap.map(|g| g.alpha_plus)
    }
}

/// A frequency where the gap at 0 opens or closes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapEdge<T> {
    pub omega: T,
    /// Bracket left by bisection.
    pub bracket: (T, T),
    /// True for `ω₊`: the gap lies on the low-frequency side.
    pub upper: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapMap<T> {
    pub beta: T,
    pub rows: Vec<GapMapRow<T>>,
    pub edges: Vec<GapEdge<T>>,
}

impl<T: Real> GapMap<T> {
    /// First `ω₊` in the map.
    pub fn upper_edge(&self) -> Option<T> {
        self.edges.iter().find(|e| e.upper).map(|e| e.omega)
    }

    /// First `ω₋` in the map.
    pub fn lower_edge(&self) -> Option<T> {
        self.edges.iter().find(|e| !e.upper).map(|e| e.omega)
    }
}

/// Relative width at which gap-edge bisection stops.
pub const EDGE_REL_TOL: f64 = 1e-4;

fn classify<T: Real>(
    epsilon: &PeriodicFunction<T>,
    beta: T,
    omega: T,
    dim: usize,
    bloch: &BlochOptions,
    tau: T,
) -> Result<(GapStatus, Option<SpectralGap<T>>)> {
    let v = epsilon.affine(-omega * omega, beta * beta);
    let bands = bloch_bands(&v, dim, bloch)?;
    match find_gap_at_zero(&bands, tau) {
        Ok(g) if g.alpha_minus.is_some() => Ok((GapStatus::FiniteGap, Some(g))),
        Ok(g) => Ok((GapStatus::BelowSpectrum, Some(g))),
        Err(Error::GapContainsZero { .. }) => Ok((GapStatus::InBand, None)),
        Err(Error::NoSpectrumAbove) => Ok((GapStatus::Unresolved, None)),
        Err(e) => Err(e),
    }
}

/// Gap classification of 0 for `n_samples` equally spaced frequencies in
/// `omega_range`, with every change of gap membership bracketed by bisection.
pub fn frequency_gap_map<T: Real>(
    epsilon: &PeriodicFunction<T>,
    beta: T,
    omega_range: (T, T),
    n_samples: usize,
    dim: usize,
    opts: &PrepareOptions,
) -> Result<GapMap<T>> {
    let (lo, hi) = omega_range;
    if !(lo > T::zero() && hi > lo) || !hi.is_finite() {
        return Err(Error::InvalidMedium(format!(
            "frequency range ({lo}, {hi}) must satisfy 0 < ω_lo < ω_hi < ∞"
        )));
    }
    if n_samples < 16 {
        return Err(Error::InvalidMedium(format!(
            "{n_samples} frequency samples; need at least 16"
        )));
    }
    // Validates ε through a dummy medium with χ ≡ 1.
    PhotonicMedium::new(epsilon.clone(), PeriodicFunction::constant(T::one()), lo, beta, dim)?;
    let tau = T::lit(opts.eigen.tau_spec);
    let step = (hi - lo) / T::from_usize_exact(n_samples - 1);
    let mut rows = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let omega = if i + 1 == n_samples {
            hi
        } else {
            lo + step * T::from_usize_exact(i)
        };
        let (status, gap) = classify(epsilon, beta, omega, dim, &opts.bloch, tau)?;
        rows.push(GapMapRow { omega, status, gap });
    }
    let mut edges = Vec::new();
    for w in rows.windows(2) {
        let (left, right) = (w[0].status.is_gap(), w[1].status.is_gap());
        if left == right {
            continue;
        }
        let (mut a, mut b) = (w[0].omega, w[1].omega);
        while b - a > T::lit(EDGE_REL_TOL) * b {
            let mid = (a + b) / T::lit(2.0);
            let (s, _) = classify(epsilon, beta, mid, dim, &opts.bloch, tau)?;
            if s.is_gap() == left {
                a = mid;
            } else {
                b = mid;
            }
        }
        edges.push(GapEdge {
            omega: (a + b) / T::lit(2.0),
            bracket: (a, b),
            upper: left,
        });
    }
    Ok(GapMap { beta, rows, edges })
}

/// Reduce, locate the gap, decompose, minimize, recenter and fit the decay.
/// Errors carry the stage that raised them. The decay fit is left empty
/// when the cell holds too few shells of the tail.
pub fn solve_gap_soliton<T: Real>(
    m: &PhotonicMedium<T>,
    grid: &GridSpec,
    cfg: &SolveConfig,
    opts: &PrepareOptions,
) -> Result<(SolveResult<T>, ActionContext<T>)> {
    if grid.dim() != m.dim {
        return Err(Error::GridMismatch(format!(
            "medium is {}-dimensional, grid is {}-dimensional",
            m.dim,
            grid.dim()
        ))
        .at_stage("reduce"));
    }
    let (v, f, sign) = reduce_to_nls(m).map_err(|e| e.at_stage("reduce"))?;
    let ctx = ActionContext::prepare(v, f, sign, grid, opts)?;
    let mut result = minimize_ground_state(&ctx, cfg).map_err(|e| e.at_stage("minimize"))?;
    let (u, b) = recenter(&result.u).map_err(|e| e.at_stage("recenter"))?;
    result.u = u;
    result.recenter_b = b;
    result.decay = match fit_decay_rate(&result.u, ctx.gap()) {
        Ok(d) => Some(d),
        // the cell is too small to see the tail; the state itself is fine
        Err(Error::WindowTooSmall { .. }) => None,
        Err(e) => return Err(e.at_stage("decay")),
    };
    Ok((result, ctx))
}

/// Per-frequency outcome of a bifurcation sweep.
#[derive(Debug, Clone)]
pub struct BifurcationRecord<T: Real> {
    pub omega: T,
    pub gap: Option<SpectralGap<T>>,
    pub result: Option<SolveResult<T>>,
    /// Why no solution was produced.
    pub failure: Option<String>,
}

impl<T: Real> BifurcationRecord<T> {
    pub fn alpha(&self) -> Option<T> {
        self.gap.map(|g| g.alpha())
    }
}

#[derive(Debug, Clone)]
pub struct BifurcationSweep<T: Real> {
    pub records: Vec<BifurcationRecord<T>>,
    /// Fit of `‖u‖_{H¹}` against the gap widths; `Err` text when the
    /// solved records do not span enough.
    pub scaling: std::result::Result<EdgeScaling, String>,
    /// The exponent `q/(2(q−2))` from the a priori bound, for comparison.
    pub bound_exponent: f64,
}

/// Solves at each `ω` of `omega_list`. Frequencies outside the gap are
/// recorded and skipped; a gap too narrow for the discretization aborts
/// the sweep before any solve.
pub fn bifurcation_sweep<T: Real>(
    epsilon: &PeriodicFunction<T>,
    chi: &PeriodicFunction<T>,
    beta: T,
    omega_list: &[T],
    grid: &GridSpec,
    cfg: &SolveConfig,
    opts: &PrepareOptions,
) -> Result<BifurcationSweep<T>> {
    let tau = T::lit(opts.eigen.tau_spec);
    let mut media = Vec::with_capacity(omega_list.len());
    for &omega in omega_list {
        let m = PhotonicMedium::new(epsilon.clone(), chi.clone(), omega, beta, grid.dim())?;
        let (status, gap) = classify(epsilon, beta, omega, grid.dim(), &opts.bloch, tau)?;
        if let Some(g) = gap {
            if g.alpha() < T::lit(10.0) * tau {
                return Err(Error::EdgeTooClose {
                    alpha: g.alpha().as_f64(),
                });
            }
        }
        media.push((m, status, gap));
    }
    let mut records = Vec::with_capacity(media.len());
    let mut edge = Vec::new();
    for (m, status, gap) in media {
        let mut rec = BifurcationRecord {
            omega: m.omega,
            gap,
            result: None,
            failure: None,
        };
        if !status.is_gap() {
            rec.failure = Some(format!("0 is not in a gap ({})", status.as_str()));
            records.push(rec);
            continue;
        }
        match solve_gap_soliton(&m, grid, cfg, opts) {
            Ok((r, _)) => {
                let g = gap.expect("gap status carries a gap");
                edge.push(EdgeRecord {
                    alpha: g.alpha().as_f64(),
                    alpha_plus: g.alpha_plus.as_f64(),
                    alpha_minus: g.alpha_minus.map(|a| a.as_f64()),
                    h1_norm: r.h1_norm.as_f64(),
                    sup_norm: r.sup_norm.as_f64(),
                });
                rec.result = Some(r);
            }
            Err(e) if e.is_refusal() => rec.failure = Some(e.to_string()),
            Err(e) => rec.failure = Some(e.to_string()),
        }
        records.push(rec);
    }
    let q = 4.0;
    Ok(BifurcationSweep {
        records,
        scaling: edge_scaling_probe(&edge).map_err(|e| e.to_string()),
        bound_exponent: q / (2.0 * (q - 2.0)),
    })
}
