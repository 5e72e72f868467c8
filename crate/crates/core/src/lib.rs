//! Localized solutions of `−Δu + V(x)u = ±f(x,u)` with periodic `V`, computed
//! on periodic cells `Q_k` and continued in `k`.
//!
//! Numerical code is generic over [`real::Real`] (`f32` or `f64`); the
//! aliases below fix `f64`.

pub mod action;
pub mod continuation;
pub mod dump;
pub mod error;
pub mod grid;
pub mod nonlinear;
pub mod photonic;
pub mod real;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use real::Real;

pub type Field = grid::PeriodicField<f64>;
pub type Field32 = grid::PeriodicField<f32>;
pub type Potential = spectral::PotentialSpec<f64>;
pub type Nonlinearity = nonlinear::NonlinearitySpec<f64>;
pub type Context = action::ActionContext<f64>;
pub type Context32 = action::ActionContext<f32>;
pub type Solution = solver::SolveResult<f64>;
pub type Gap = spectral::SpectralGap<f64>;
pub type Medium = photonic::PhotonicMedium<f64>;
