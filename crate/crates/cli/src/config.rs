//! Run configuration: a TOML file with `[problem]`, `[nonlinearity]`,
//! `[grid]`, `[solver]`, `[spectral]`, `[output]` and per-command tables.
//! Unknown keys are errors.

use std::fs;
use std::path::{Path, PathBuf};

use gapsol::action::{PrepareOptions, Sign};
use gapsol::dump::read_field_dump;
use gapsol::nonlinear::NonlinearitySpec;
use gapsol::photonic::PhotonicMedium;
use gapsol::solver::SolveConfig;
use gapsol::spectral::{BlochOptions, CosineTerm, EigenOptions, PeriodicFunction};
use serde::Deserialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid value for `{key}`: {message}")]
    Validation { key: String, message: String },
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        key: key.to_owned(),
        message: message.into(),
    }
}

/// A 1-periodic function: a constant, a cosine series, or unit-cell samples
/// stored as a field dump.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionConfig {
    pub constant: Option<f64>,
    pub offset: Option<f64>,
    pub terms: Option<Vec<TermConfig>>,
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub amplitude: f64,
    pub mode: Vec<i64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumConfig {
    pub epsilon: FunctionConfig,
    pub chi: FunctionConfig,
    pub omega: Option<f64>,
    #[serde(default)]
    pub beta: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub dimension: usize,
    pub sign: Option<Sign>,
    pub potential: Option<FunctionConfig>,
    pub medium: Option<MediumConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NonlinearityKindConfig {
    Power,
    Kerr,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearityConfig {
    pub kind: NonlinearityKindConfig,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub theta: Option<f64>,
    pub gamma: Option<f64>,
    /// Weight `h` (power) or coupling (Kerr); defaults to 1.
    pub h: Option<FunctionConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub k: Option<usize>,
    pub k_list: Option<Vec<usize>>,
    pub n: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralConfig {
    pub n_theta: Option<usize>,
    pub n_bands: usize,
    pub tau_spec: f64,
    pub dense_limit: usize,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        let e = EigenOptions::default();
        Self {
            n_theta: None,
            n_bands: 8,
            tau_spec: e.tau_spec,
            dense_limit: e.dense_limit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Dump,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("gapsol-out"),
            formats: vec![Format::Csv, Format::Json, Format::Dump],
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapMapConfig {
    pub omega_min: f64,
    pub omega_max: f64,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
}

fn default_samples() -> usize {
    32
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BifurcateConfig {
    pub omegas: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    problem: ProblemConfig,
    nonlinearity: Option<NonlinearityConfig>,
    grid: Option<GridConfig>,
    #[serde(default)]
    solver: SolveConfig,
    #[serde(default)]
    spectral: SpectralConfig,
    #[serde(default)]
    output: OutputConfig,
    gapmap: Option<GapMapConfig>,
    bifurcate: Option<BifurcateConfig>,
}

/// What the equation is built from.
#[derive(Debug, Clone)]
pub enum ProblemSource {
    Potential {
        potential: PeriodicFunction<f64>,
        nonlinearity: NonlinearitySpec<f64>,
        sign: Sign,
    },
    Medium {
        epsilon: PeriodicFunction<f64>,
        chi: PeriodicFunction<f64>,
        omega: Option<f64>,
        beta: f64,
    },
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub dimension: usize,
    pub source: ProblemSource,
    pub grid: Option<GridConfig>,
    pub solver: SolveConfig,
    pub spectral: SpectralConfig,
    pub output: OutputConfig,
    pub gapmap: Option<GapMapConfig>,
    pub bifurcate: Option<BifurcateConfig>,
    /// SHA-256 of the file bytes, hex encoded.
    pub hash: String,
}

impl RunConfig {
    pub fn prepare_options(&self) -> PrepareOptions {
        let default_theta = if self.dimension == 1 { 32 } else { 16 };
        let eigen = EigenOptions {
            tau_spec: self.spectral.tau_spec,
            dense_limit: self.spectral.dense_limit,
            ..EigenOptions::default()
        };
        PrepareOptions {
            bloch: BlochOptions::new(
                self.dimension,
                self.spectral.n_theta.unwrap_or(default_theta),
                self.spectral.n_bands,
            ),
            eigen,
        }
    }

    pub fn wants(&self, f: Format) -> bool {
        self.output.formats.contains(&f)
    }

    /// The medium at its configured frequency.
    pub fn medium(&self) -> gapsol::Result<PhotonicMedium<f64>> {
        match &self.source {
            ProblemSource::Medium {
                epsilon,
                chi,
                omega,
                beta,
            } => {
                let omega = omega.ok_or_else(|| {
                    gapsol::Error::InvalidMedium("`problem.medium.omega` is required for this command".into())
                })?;
                PhotonicMedium::new(epsilon.clone(), chi.clone(), omega, *beta, self.dimension)
            }
            ProblemSource::Potential { .. } => Err(gapsol::Error::InvalidMedium(
                "this command needs `problem.medium`".into(),
            )),
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn function(
    cfg: &FunctionConfig,
    key: &str,
    dim: usize,
    base: &Path,
) -> Result<PeriodicFunction<f64>, ConfigError> {
    let forms = [
        cfg.constant.is_some(),
        cfg.offset.is_some() || cfg.terms.is_some(),
        cfg.file.is_some(),
    ];
    if forms.iter().filter(|&&b| b).count() != 1 {
        return Err(invalid(
            key,
            "give exactly one of `constant`, `offset`/`terms`, or `file`",
        ));
    }
    let f = if let Some(c) = cfg.constant {
        PeriodicFunction::constant(c)
    } else if let Some(path) = &cfg.file {
        let path = base.join(path);
        if !path.exists() {
            return Err(invalid(&format!("{key}.file"), format!("{} does not exist", path.display())));
        }
        let field = read_field_dump(&path).map_err(|e| invalid(&format!("{key}.file"), e.to_string()))?;
        PeriodicFunction::sampled(field).map_err(|e| invalid(&format!("{key}.file"), e.to_string()))?
    } else {
        let terms = cfg
            .terms
            .iter()
            .flatten()
            .map(|t| CosineTerm::new(t.amplitude, t.mode.clone()))
            .collect();
        PeriodicFunction::cosine(cfg.offset.unwrap_or(0.0), terms)
    };
    f.validate(dim).map_err(|e| invalid(key, e.to_string()))?;
    Ok(f)
}

fn nonlinearity(
    cfg: &NonlinearityConfig,
    dim: usize,
    base: &Path,
) -> Result<NonlinearitySpec<f64>, ConfigError> {
    let h = match &cfg.h {
        Some(h) => function(h, "nonlinearity.h", dim, base)?,
        None => PeriodicFunction::constant(1.0),
    };
    let mut spec = match cfg.kind {
        NonlinearityKindConfig::Power => {
            let p = cfg
                .p
                .ok_or_else(|| invalid("nonlinearity.p", "required for kind = \"power\""))?;
            NonlinearitySpec::power(h, p)
        }
        NonlinearityKindConfig::Kerr => {
            if cfg.p.is_some_and(|p| p != 4.0) {
                return Err(invalid("nonlinearity.p", "Kerr nonlinearities have p = 4"));
            }
            NonlinearitySpec::kerr(h)
        }
    };
    if let Some(q) = cfg.q {
        spec = spec.with_q(q);
    }
    if let Some(t) = cfg.theta {
        spec = spec.with_theta(t);
    }
    if let Some(g) = cfg.gamma {
        spec = spec.with_gamma(g);
    }
    spec.validate(dim).map_err(|e| invalid("nonlinearity", e.to_string()))?;
    Ok(spec)
}

/// Parses and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let bytes = fs::read(path).map_err(|source| ConfigError::Read {
        path: path.to_owned(),
        source,
    })?;
    let text = String::from_utf8(bytes.clone()).map_err(|e| ConfigError::Parse {
        line: line_of(&String::from_utf8_lossy(&bytes), e.utf8_error().valid_up_to()),
        message: "file is not valid UTF-8".into(),
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let hash = hex(&Sha256::digest(&bytes));
    parse_str(&text, base, hash)
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Parses configuration text; relative file references resolve against `base`.
pub fn parse_str(text: &str, base: &Path, hash: String) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.span().map_or(1, |s| line_of(text, s.start)),
        message: e.message().to_owned(),
    })?;
    let dim = raw.problem.dimension;
    if dim != 1 && dim != 2 {
        return Err(invalid("problem.dimension", format!("{dim} is not 1 or 2")));
    }
    let source = match (&raw.problem.potential, &raw.problem.medium) {
        (Some(_), Some(_)) => {
            return Err(invalid(
                "problem",
                "exactly one of `potential` and `medium` may be given, found both",
            ))
        }
        (None, None) => {
            return Err(invalid(
                "problem",
                "exactly one of `potential` and `medium` is required, found neither",
            ))
        }
        (Some(v), None) => {
            let nl = raw
                .nonlinearity
                .as_ref()
                .ok_or_else(|| invalid("nonlinearity", "required with `problem.potential`"))?;
            ProblemSource::Potential {
                potential: function(v, "problem.potential", dim, base)?,
                nonlinearity: nonlinearity(nl, dim, base)?,
                sign: raw.problem.sign.unwrap_or(Sign::Plus),
            }
        }
        (None, Some(m)) => {
            if raw.nonlinearity.is_some() {
                return Err(invalid(
                    "nonlinearity",
                    "a medium fixes its own Kerr nonlinearity through `chi`",
                ));
            }
            if raw.problem.sign.is_some() {
                return Err(invalid("problem.sign", "a medium takes its sign from `chi`"));
            }
            ProblemSource::Medium {
                epsilon: function(&m.epsilon, "problem.medium.epsilon", dim, base)?,
                chi: function(&m.chi, "problem.medium.chi", dim, base)?,
                omega: m.omega,
                beta: m.beta,
            }
        }
    };
    if let Some(g) = &raw.grid {
        if g.k.is_some() && g.k_list.is_some() {
            return Err(invalid("grid", "give `k` or `k_list`, not both"));
        }
        if g.n == 0 {
            return Err(invalid("grid.n", "must be positive"));
        }
    }
    raw.solver
        .validate()
        .map_err(|e| invalid("solver", e.to_string()))?;
    if raw.output.formats.is_empty() {
        return Err(invalid("output.formats", "at least one format is required"));
    }
    let directory = if raw.output.directory.is_absolute() {
        raw.output.directory.clone()
    } else {
        base.join(&raw.output.directory)
    };
    Ok(RunConfig {
        dimension: dim,
        source,
        grid: raw.grid,
        solver: raw.solver,
        spectral: raw.spectral,
        output: OutputConfig {
            directory,
            formats: raw.output.formats,
        },
        gapmap: raw.gapmap,
        bifurcate: raw.bifurcate,
        hash,
    })
}
