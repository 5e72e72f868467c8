#![allow(dead_code)]

use gapsol::action::{ActionContext, Sign};
use gapsol::grid::{GridSpec, PeriodicField};
use gapsol::nonlinear::NonlinearitySpec;
use gapsol::spectral::{eigendecompose, EigenOptions, PairCount, PotentialSpec, SpectralGap};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn cases(n: u32) -> ProptestConfig {
    ProptestConfig::with_cases(n)
}

/// Small grids: 1D `k ∈ {1,2,4}, n ∈ {4,8,16}` and 2D `k ∈ {1,2}, n ∈ {4,8}`.
pub fn small_grid() -> impl Strategy<Value = GridSpec> {
    prop_oneof![
        (prop::sample::select(vec![1usize, 2, 4]), prop::sample::select(vec![4usize, 8, 16]))
            .prop_map(|(k, n)| GridSpec::new(1, k, n).unwrap()),
        (prop::sample::select(vec![1usize, 2]), prop::sample::select(vec![4usize, 8]))
            .prop_map(|(k, n)| GridSpec::new(2, k, n).unwrap()),
    ]
}

/// Random field: a few random low Fourier modes plus small nodal noise.
pub fn random_field(grid: GridSpec, seed: u64, amplitude: f64) -> PeriodicField<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = grid.cell_edge() as f64;
    let modes: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.random_range(-1.0..1.0),
                rng.random_range(0..3) as f64,
                rng.random_range(0..3) as f64,
                rng.random_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let mut u = PeriodicField::from_lattice_fn(grid, |x: &[f64]| {
        let y = if x.len() == 2 { x[1] } else { 0.0 };
        modes
            .iter()
            .map(|&(a, m1, m2, ph)| a * (std::f64::consts::TAU * (m1 * x[0] + m2 * y) / k + ph).cos())
            .sum::<f64>()
    });
    for v in u.values_mut() {
        *v += 0.05 * rng.random_range(-1.0..1.0);
        *v *= amplitude;
    }
    u
}

/// 1-periodic potential `c + a·cos(2πx₁) [+ b·cos(2πx₂)]`.
pub fn potential(dim: usize, c: f64, a: f64, b: f64) -> PotentialSpec<f64> {
    use gapsol::spectral::CosineTerm;
    let mut terms = vec![CosineTerm::new(a, if dim == 1 { vec![1] } else { vec![1, 0] })];
    if dim == 2 {
        terms.push(CosineTerm::new(b, vec![0, 1]));
    }
    PotentialSpec::cosine(c, terms)
}

/// A context whose gap is read off the eigenvalues of `L_k` itself. Skips
/// Bloch bands, which these properties do not depend on. `None` when the
/// discretized operator has an eigenvalue too close to 0.
pub fn quick_context(
    v: PotentialSpec<f64>,
    f: NonlinearitySpec<f64>,
    sign: Sign,
    grid: &GridSpec,
) -> Option<ActionContext<f64>> {
    let dec = eigendecompose(&v, grid, PairCount::All, &EigenOptions::default()).ok()?;
    let ev = dec.eigenvalues();
    let above = ev.iter().copied().filter(|&l| l > 0.0).fold(f64::INFINITY, f64::min);
    let below = ev.iter().copied().filter(|&l| l < 0.0).fold(f64::NEG_INFINITY, f64::max);
    if above.min(-below) < 1e-3 {
        return None;
    }
    let gap = SpectralGap {
        alpha_minus: below.is_finite().then(|| -below),
        alpha_plus: above,
        inf_spectrum: ev[0],
    };
    ActionContext::new(v, f, sign, dec, gap).ok()
}

pub fn rel(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale.max(f64::MIN_POSITIVE)
}
