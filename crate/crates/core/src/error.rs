use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure and refusal the solver can report.
///
/// Refusals (see [`Error::is_refusal`]) mean the requested problem is outside
/// the setting where localized ground states are guaranteed; everything else
/// is an internal or I/O failure.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("shift is not an integer lattice vector: {0}")]
    NonIntegerShift(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error(
        "assumption (vi) violated: eigenvalue {eigenvalue:e} of the periodic operator lies within \
         {tolerance:e} of 0, so 0 is in the spectrum at this discretization"
    )]
    ZeroInSpectrum { eigenvalue: f64, tolerance: f64 },
    #[error(
        "assumption (vi) violated: 0 lies in the spectrum of -Δ+V (band {band} spans [{lo}, {hi}])"
    )]
    GapContainsZero { band: usize, lo: f64, hi: f64 },
    #[error("no computed band lies above 0; increase the number of bands")]
    NoSpectrumAbove,
    #[error(
        "assumption (vi) violated for the '-' sign: inf σ(L) = {inf_spectrum} ≥ 0, so 0 lies \
         below the spectrum rather than in a finite gap, and there is no nontrivial solution"
    )]
    NoSpectrumBelow { inf_spectrum: f64 },
    #[error("decomposition does not retain the full {0} subspace")]
    IncompleteDecomposition(String),
    #[error("negative squared split norm {value:e} ({which} part)")]
    NegativeSquare { which: &'static str, value: f64 },
    #[error("invalid nonlinearity: {0}")]
    InvalidNonlinearity(String),
    #[error("assumption {assumption} violated at x-node {node}, u = {u:e}: {detail}")]
    AssumptionViolated {
        assumption: &'static str,
        node: usize,
        u: f64,
        detail: String,
    },
    #[error("field is off the Nehari-Pankov set (residual {residual:e} > {tolerance:e})")]
    OffManifold { residual: f64, tolerance: f64 },
    #[error("seed ray s -> J(s z) has its maximum at s = 0; the nonlinearity is not superlinear")]
    SeedDegenerate,
    #[error("Newton projection onto the Nehari-Pankov set diverged: {0}")]
    ProjectionDiverged(String),
    #[error("iterate collapsed to the zero field")]
    CollapsedToZero,
    #[error("descent did not converge: {0}")]
    NoConvergence(String),
    #[error("all {restarts} restarts collapsed or failed; no nontrivial critical point found ({last})")]
    AllRestartsCollapsed { restarts: usize, last: String },
    #[error("verification failed on check '{check}': {detail}")]
    VerificationFailed { check: &'static str, detail: String },
    #[error("decay window too small: {shells} qualifying shells (need 4); increase k")]
    WindowTooSmall { shells: usize },
    #[error("insufficient span: {0}")]
    InsufficientSpan(String),
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error(
        "χ changes sign: mixed focusing/defocusing media are an open problem and are not solved; \
         χ must be strictly one sign"
    )]
    MixedSignChi,
    #[error("invalid medium: {0}")]
    InvalidMedium(String),
    #[error("gap edge too close: α = {alpha:e} is below 10·τ_spec and cannot be resolved")]
    EdgeTooClose { alpha: f64 },
    #[error("eigensolver failure: {0}")]
    Eigensolver(String),
    #[error("field dump format: {0}")]
    Format(String),
    #[error("stage '{stage}': {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Wraps `self` with the pipeline stage that produced it.
    pub fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Strips any stage labels.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    /// Domain refusals: the problem violates a standing assumption.
    pub fn is_refusal(&self) -> bool {
        matches!(
            self.root(),
            Error::ZeroInSpectrum { .. }
                | Error::GapContainsZero { .. }
                | Error::NoSpectrumBelow { .. }
                | Error::AssumptionViolated { .. }
                | Error::MixedSignChi
                | Error::EdgeTooClose { .. }
        )
    }
}
