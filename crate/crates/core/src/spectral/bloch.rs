use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::real::Real;

use super::potential::{ModeTable, PotentialSpec};

#[derive(Debug, Clone)]
pub struct BlochOptions {
    /// Quasimomentum samples per axis (`≥ 16`).
    pub n_theta: usize,
    /// Bands computed per fiber (`≥ 4`).
    pub n_bands: usize,
    /// Plane waves `e^{2πiG·x}` with `|G_i| ≤ max_mode` span the fiber basis.
    pub max_mode: i64,
    /// Refinement sweeps of each band extremum.
    pub refine_rounds: usize,
}

impl BlochOptions {
    pub fn new(dim: usize, n_theta: usize, n_bands: usize) -> Self {
        Self {
            n_theta,
            n_bands,
            max_mode: if dim == 1 { 16 } else { 6 },
            refine_rounds: 3,
        }
    }
}

/// Sampled band functions `λ_j(θ)` of `L = -Δ + V` on `ℝ^N`.
#[derive(Debug, Clone)]
pub struct BlochBands<T> {
    pub dim: usize,
    /// Quasimomenta, one `dim`-vector per sample.
    pub thetas: Vec<Vec<T>>,
    /// `values[s][j] = λ_j(θ_s)`.
    pub values: Vec<Vec<T>>,
    /// `[min λ_j, max λ_j]` per band, including refined extrema.
    pub intervals: Vec<(T, T)>,
}

impl<T: Real> BlochBands<T> {
    pub fn n_bands(&self) -> usize {
        self.intervals.len()
    }

    pub fn band(&self, j: usize) -> impl Iterator<Item = T> + '_ {
        self.values.iter().map(move |v| v[j])
    }

    /// True when `λ` lies in some band interval widened by `tol`.
    pub fn contains(&self, lambda: T, tol: T) -> bool {
        self.intervals
            .iter()
            .any(|&(lo, hi)| lambda >= lo - tol && lambda <= hi + tol)
    }
}

/// Dense Hermitian fiber `-(∇ + iθ)² + V` in a truncated plane-wave basis.
pub struct BlochFiber<T: Real> {
    dim: usize,
    modes: Vec<[i64; 2]>,
    coupling: DMatrix<Complex<T>>,
}

impl<T: Real> BlochFiber<T> {
    pub fn new(potential: &PotentialSpec<T>, dim: usize, max_mode: i64) -> Result<Self> {
        if max_mode < 1 {
            return Err(Error::InvalidPotential("fiber basis needs max_mode ≥ 1".into()));
        }
        let table: ModeTable<T> = potential.fourier_table(dim, 2 * max_mode)?;
        let range = -max_mode..=max_mode;
        let modes: Vec<[i64; 2]> = if dim == 1 {
            range.map(|g| [g, 0]).collect()
        } else {
            range
                .clone()
                .flat_map(|a| range.clone().map(move |b| [a, b]))
                .collect()
        };
        let coupling = DMatrix::from_fn(modes.len(), modes.len(), |i, j| {
            table.get([modes[i][0] - modes[j][0], modes[i][1] - modes[j][1]])
        });
        Ok(Self {
            dim,
            modes,
            coupling,
        })
    }

    pub fn size(&self) -> usize {
        self.modes.len()
    }

    /// Lowest `n_bands` eigenvalues at quasimomentum `θ`, ascending.
    pub fn eigenvalues(&self, theta: &[T], n_bands: usize) -> Vec<T> {
        let mut h = self.coupling.clone();
        let two_pi = T::two_pi();
        for (i, g) in self.modes.iter().enumerate() {
            let mut kin = T::zero();
            for a in 0..self.dim {
                let q = two_pi * T::from_i64(g[a]).expect("mode") + theta[a];
                kin += q * q;
            }
            h[(i, i)] += Complex::new(kin, T::zero());
        }
        let mut ev: Vec<T> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).expect("finite band value"));
        ev.truncate(n_bands);
        ev
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the minimum of `g` on `[a, b]`.
fn golden_min<T: Real>(mut a: T, mut b: T, g: impl Fn(T) -> T) -> (T, T) {
    let r = T::lit(INV_PHI);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut gc = g(c);
    let mut gd = g(d);
    // an absolute 1e-9 is below the spacing of f32 near θ ≈ π
    let tol = T::lit(1e-9).max(T::lit(4.0) * T::eps() * (a.abs() + b.abs()));
    while (b - a).abs() > tol {
        if gc < gd {
            b = d;
            d = c;
            gd = gc;
            c = b - r * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + r * (b - a);
            gd = g(d);
        }
    }
    if gc < gd {
        (c, gc)
    } else {
        (d, gd)
    }
}

/// Samples the band functions on the uniform quasimomentum grid
/// `θ = 2πj/n_θ` and refines every band minimum and maximum by
/// golden-section search inside the neighbouring-sample bracket.
pub fn bloch_bands<T: Real>(
    potential: &PotentialSpec<T>,
    dim: usize,
    opts: &BlochOptions,
) -> Result<BlochBands<T>> {
    if opts.n_theta < 16 {
        return Err(Error::InvalidPotential(format!(
            "n_theta = {} must be at least 16",
            opts.n_theta
        )));
    }
    if opts.n_bands < 4 {
        return Err(Error::InvalidPotential(format!(
            "n_bands = {} must be at least 4",
            opts.n_bands
        )));
    }
    let fiber = BlochFiber::new(potential, dim, opts.max_mode)?;
    let n_bands = opts.n_bands.min(fiber.size());
    let nt = opts.n_theta;
    let step = T::two_pi() / T::from_usize_exact(nt);
    let thetas: Vec<Vec<T>> = if dim == 1 {
        (0..nt).map(|j| vec![step * T::from_usize_exact(j)]).collect()
    } else {
        (0..nt * nt)
            .map(|s| {
                vec![
                    step * T::from_usize_exact(s / nt),
                    step * T::from_usize_exact(s % nt),
                ]
            })
            .collect()
    };
    let values: Vec<Vec<T>> = thetas.iter().map(|t| fiber.eigenvalues(t, n_bands)).collect();

    let mut intervals = Vec::with_capacity(n_bands);
    for j in 0..n_bands {
        let band_at = |t: &[T]| fiber.eigenvalues(t, j + 1)[j];
        let mut lo = values[0][j];
        let mut hi = values[0][j];
        let (mut arg_lo, mut arg_hi) = (0, 0);
        for (s, v) in values.iter().enumerate() {
            if v[j] < lo {
                lo = v[j];
                arg_lo = s;
            }
            if v[j] > hi {
                hi = v[j];
                arg_hi = s;
            }
        }
        let rmin = refine(&thetas[arg_lo], step, opts.refine_rounds, |t| band_at(t));
        let rmax = refine(&thetas[arg_hi], step, opts.refine_rounds, |t| -band_at(t));
        intervals.push((lo.min(rmin), hi.max(-rmax)));
    }
    Ok(BlochBands {
        dim,
        thetas,
        values,
        intervals,
    })
}

/// Coordinate-wise golden-section minimization of `g` starting at `start`,
/// each coordinate confined to `start ± step`.
fn refine<T: Real>(start: &[T], step: T, rounds: usize, g: impl Fn(&[T]) -> T) -> T {
    let mut theta = start.to_vec();
    let mut best = g(&theta);
    for _ in 0..rounds {
        for a in 0..theta.len() {
            let centre = start[a];
            let (arg, val) = golden_min(centre - step, centre + step, |x| {
                let mut t = theta.clone();
                t[a] = x;
                g(&t)
            });
            if val < best {
                best = val;
                theta[a] = arg;
            }
        }
        if theta.len() == 1 {
            break;
        }
    }
    best
}
