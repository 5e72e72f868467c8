//! The periodic operator `L = -Δ + V`: finite-cell eigenpairs, Bloch bands
//! on `ℝ^N`, the gap around 0 and the splitting `E_k = E⁻_k ⊕ E⁺_k`.

pub mod bloch;
pub mod decomposition;
pub mod eigen;
pub mod gap;
pub mod operator;
pub mod potential;

pub use bloch::{bloch_bands, BlochBands, BlochFiber, BlochOptions};
pub use decomposition::SpectralDecomposition;
pub use eigen::{eigendecompose, eigendecompose_operator, EigenOptions, PairCount};
pub use gap::{find_gap_at_zero, SpectralGap};
pub use operator::{apply_operator, SchrodingerOperator};
pub use potential::{CosineTerm, ModeTable, PeriodicFunction, PotentialSpec};
