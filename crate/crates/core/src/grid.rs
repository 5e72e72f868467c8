//! Uniform periodic grids on the cube `Q_k`, field storage and spectral calculus.
//!
//! A grid covers the cube of edge `k` (in lattice units) with `n` nodes per
//! unit length on every axis, so each axis carries `n·k` nodes at
//! `x_j = j/n`, `j = 0..n·k-1`. The last node is not a copy of the first:
//! fields are stored exactly once per period.
//!
//! Derivatives are exact on the trigonometric interpolant: mode `m` of an
//! axis of length `k` has wavenumber `2πm/k`, and `-Δ` is the Fourier
//! multiplier `|2πm/k|²`. Quadrature is the trapezoidal rule, which is the
//! exact integral of the interpolant.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// Uniform grid on `Q_k` in dimension 1 or 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    #[serde(rename = "k")]
    cell_edge: usize,
    #[serde(rename = "n")]
    points_per_unit: usize,
}

/// Validates and builds a grid: `dim ∈ {1,2}`, `k ≥ 1`, `n ≥ 4` even.
pub fn make_grid(dim: usize, cell_edge: usize, points_per_unit: usize) -> Result<GridSpec> {
    GridSpec::new(dim, cell_edge, points_per_unit)
}

impl GridSpec {
    pub fn new(dim: usize, cell_edge: usize, points_per_unit: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in {{1, 2}}")));
        }
        if cell_edge == 0 {
            return Err(Error::InvalidGrid("cell edge k must be a positive integer".into()));
        }
        if points_per_unit < 4 || points_per_unit % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "points per unit n = {points_per_unit} must be even and at least 4"
            )));
        }
        Ok(Self {
            dim,
            cell_edge,
            points_per_unit,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Edge length `k` of the periodic cell.
    pub fn cell_edge(&self) -> usize {
        self.cell_edge
    }

    pub fn points_per_unit(&self) -> usize {
        self.points_per_unit
    }

    /// Nodes per axis, `n·k`.
    pub fn axis_len(&self) -> usize {
        self.points_per_unit * self.cell_edge
    }

    /// Total degrees of freedom `(n·k)^N`.
    pub fn len(&self) -> usize {
        self.axis_len().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing<T: Real>(&self) -> T {
        T::one() / T::from_usize_exact(self.points_per_unit)
    }

    /// Quadrature weight `h^N` carried by every node.
    pub fn node_weight<T: Real>(&self) -> T {
        let h = self.spacing::<T>();
        if self.dim == 1 {
            h
        } else {
            h * h
        }
    }

    /// Measure of the cell, `k^N`.
    pub fn cell_volume<T: Real>(&self) -> T {
        T::from_usize_exact(self.cell_edge.pow(self.dim as u32))
    }

    /// Same resolution, different cell edge.
    pub fn with_cell_edge(&self, cell_edge: usize) -> Result<Self> {
        Self::new(self.dim, cell_edge, self.points_per_unit)
    }

    /// Per-axis node indices of a flat (row-major) index.
    pub fn multi_index(&self, flat: usize) -> [usize; 2] {
        let m = self.axis_len();
        if self.dim == 1 {
            [flat, 0]
        } else {
            [flat / m, flat % m]
        }
    }

    pub fn flat_index(&self, idx: [usize; 2]) -> usize {
        if self.dim == 1 {
            idx[0]
        } else {
            idx[0] * self.axis_len() + idx[1]
        }
    }

    /// Lattice coordinate `j/n` of an axis node.
    pub fn lattice_coordinate<T: Real>(&self, j: usize) -> T {
        T::from_usize_exact(j) * self.spacing::<T>()
    }

    /// Reporting coordinate `j/n - k/2`: the cell centred at the origin.
    pub fn centered_coordinate<T: Real>(&self, j: usize) -> T {
        self.lattice_coordinate::<T>(j) - T::from_usize_exact(self.cell_edge) / T::lit(2.0)
    }

    /// Node index of the domain centre on each axis.
    pub fn center_node(&self) -> usize {
        self.axis_len() / 2
    }

    pub(crate) fn ensure_same(&self, other: &GridSpec) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

/// Trapezoidal (spectrally exact) quadrature on a grid.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureRule<T> {
    pub weight: T,
}

impl<T: Real> QuadratureRule<T> {
    pub fn for_grid(grid: &GridSpec) -> Self {
        Self {
            weight: grid.node_weight(),
        }
    }

    pub fn integrate(&self, values: &[T]) -> T {
        values.iter().fold(T::zero(), |acc, &v| acc + v) * self.weight
    }
}

/// Real samples of a `k`-periodic function on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicField<T> {
    grid: GridSpec,
    values: Vec<T>,
}

impl<T: Real> PeriodicField<T> {
    pub fn new(grid: GridSpec, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidField(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!("non-finite value at node {i}")));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_raw(grid: GridSpec, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, T::zero())
    }

    pub fn constant(grid: GridSpec, c: T) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    /// Samples `f` at lattice coordinates `x_j = j/n`.
    pub fn from_lattice_fn(grid: GridSpec, f: impl Fn(&[T]) -> T) -> Self {
        Self::sample_with(grid, |g, j| g.lattice_coordinate(j), f)
    }

    /// Samples `f` at reporting coordinates `x_j = j/n - k/2`.
    pub fn from_centered_fn(grid: GridSpec, f: impl Fn(&[T]) -> T) -> Self {
        Self::sample_with(grid, |g, j| g.centered_coordinate(j), f)
    }

    fn sample_with(
        grid: GridSpec,
        coord: impl Fn(&GridSpec, usize) -> T,
        f: impl Fn(&[T]) -> T,
    ) -> Self {
        let values = (0..grid.len())
            .map(|flat| {
                let idx = grid.multi_index(flat);
                if grid.dim() == 1 {
                    f(&[coord(&grid, idx[0])])
                } else {
                    f(&[coord(&grid, idx[0]), coord(&grid, idx[1])])
                }
            })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        assert_eq!(self.grid, other.grid, "zip_map on mismatched grids");
        Self::from_raw(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn scaled(&self, a: T) -> Self {
        self.map(|v| v * a)
    }

    /// `self + a·x`
    pub fn add_scaled(&self, a: T, x: &Self) -> Self {
        self.zip_map(x, |u, v| u + a * v)
    }

    pub fn axpy_in_place(&mut self, a: T, x: &Self) {
        assert_eq!(self.grid, x.grid, "axpy on mismatched grids");
        for (u, &v) in self.values.iter_mut().zip(&x.values) {
            *u += a * v;
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    /// `∫ u v` over the cell.
    pub fn dot(&self, other: &Self) -> T {
        assert_eq!(self.grid, other.grid, "dot on mismatched grids");
        self.values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
            * self.grid.node_weight()
    }

    pub fn l2_norm(&self) -> T {
        self.dot(self).sqrt()
    }

    pub fn sup_norm(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |acc, &v| if v.abs() > acc { v.abs() } else { acc })
    }

    /// Index of the first node attaining the maximum of `|u|`.
    pub fn argmax_abs(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if v.abs() > self.values[best].abs() {
                best = i;
            }
        }
        best
    }
}

/// FFT plans and wavenumbers for one grid.
pub struct Fourier<T: Real> {
    grid: GridSpec,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    neg_laplacian: Vec<T>,
}

impl<T: Real> std::fmt::Debug for Fourier<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fourier").field("grid", &self.grid).finish()
    }
}

impl<T: Real> Clone for Fourier<T> {
    fn clone(&self) -> Self {
        Self {
            grid: self.grid,
            forward: Arc::clone(&self.forward),
            inverse: Arc::clone(&self.inverse),
            neg_laplacian: self.neg_laplacian.clone(),
        }
    }
}

/// Signed Fourier mode of axis index `j` on an axis of `m` nodes; the
/// Nyquist index maps to `+m/2`.
pub fn signed_mode(j: usize, m: usize) -> i64 {
    if j <= m / 2 {
        j as i64
    } else {
        j as i64 - m as i64
    }
}

impl<T: Real> Fourier<T> {
    pub fn new(grid: GridSpec) -> Self {
        let m = grid.axis_len();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(m);
        let inverse = planner.plan_fft_inverse(m);
        let k = T::from_usize_exact(grid.cell_edge());
        let wavenumber = |j: usize| {
            T::two_pi() * T::from_i64(signed_mode(j, m)).expect("mode index") / k
        };
        let neg_laplacian = (0..grid.len())
            .map(|flat| {
                let idx = grid.multi_index(flat);
                let k0 = wavenumber(idx[0]);
                if grid.dim() == 1 {
                    k0 * k0
                } else {
                    let k1 = wavenumber(idx[1]);
                    k0 * k0 + k1 * k1
                }
            })
            .collect();
        Self {
            grid,
            forward,
            inverse,
            neg_laplacian,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// `|κ|²` for every flat mode index (the symbol of `-Δ`).
    pub fn neg_laplacian_symbol(&self) -> &[T] {
        &self.neg_laplacian
    }

    fn transform(&self, data: &mut [Complex<T>], plan: &Arc<dyn Fft<T>>) {
        let m = self.grid.axis_len();
        plan.process(data);
        if self.grid.dim() == 2 {
            let mut column = vec![Complex::new(T::zero(), T::zero()); m];
            for c in 0..m {
                for r in 0..m {
                    column[r] = data[r * m + c];
                }
                plan.process(&mut column);
                for r in 0..m {
                    data[r * m + c] = column[r];
                }
            }
        }
    }

    /// Unnormalized forward DFT of real samples.
    pub fn forward(&self, values: &[T]) -> Vec<Complex<T>> {
        let mut data: Vec<Complex<T>> = values.iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.transform(&mut data, &self.forward);
        data
    }

    /// Inverse DFT (normalized) returning the real part.
    pub fn inverse_real(&self, mut spectrum: Vec<Complex<T>>) -> Vec<T> {
        self.transform(&mut spectrum, &self.inverse);
        let scale = T::one() / T::from_usize_exact(self.grid.len());
        spectrum.into_iter().map(|c| c.re * scale).collect()
    }

    /// Applies a real, even Fourier multiplier given per flat mode index.
    pub fn apply_symbol(&self, values: &[T], symbol: impl Fn(usize) -> T) -> Vec<T> {
        let mut spec = self.forward(values);
        for (i, c) in spec.iter_mut().enumerate() {
            *c = c.scale(symbol(i));
        }
        self.inverse_real(spec)
    }

    /// `-Δu` on raw samples.
    pub fn neg_laplacian(&self, values: &[T]) -> Vec<T> {
        self.apply_symbol(values, |i| self.neg_laplacian[i])
    }

    /// `(-Δ + c)^{-1}` on raw samples; `c > 0`.
    pub fn solve_shifted(&self, values: &[T], shift: T) -> Vec<T> {
        self.apply_symbol(values, |i| T::one() / (self.neg_laplacian[i] + shift))
    }

    /// `-Δu` of a field on this grid.
    pub fn laplacian_field(&self, u: &PeriodicField<T>) -> PeriodicField<T> {
        assert_eq!(u.grid(), &self.grid, "Fourier plan used on another grid");
        PeriodicField::from_raw(self.grid, self.neg_laplacian(u.values()))
    }
}

/// Returns `-Δu`, exact on the trigonometric interpolant.
pub fn laplacian_apply<T: Real>(u: &PeriodicField<T>) -> PeriodicField<T> {
    Fourier::new(*u.grid()).laplacian_field(u)
}

/// `∫_{Q_k} g dx` by the trapezoidal rule.
pub fn integrate<T: Real>(g: &PeriodicField<T>) -> T {
    QuadratureRule::for_grid(g.grid()).integrate(g.values())
}

/// `(∫ |∇u|² + u²)^{1/2}`.
pub fn h1_norm<T: Real>(u: &PeriodicField<T>) -> T {
    h1_norm_with(&Fourier::new(*u.grid()), u)
}

pub fn h1_norm_with<T: Real>(fourier: &Fourier<T>, u: &PeriodicField<T>) -> T {
    let grad_sq = u.dot(&fourier.laplacian_field(u));
    (grad_sq + u.dot(u)).max(T::zero()).sqrt()
}

/// Integer lattice vector in lattice units.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticeShift(pub Vec<i64>);

impl LatticeShift {
    pub fn zero(dim: usize) -> Self {
        Self(vec![0; dim])
    }

    /// Accepts real components only when each is an integer.
    pub fn from_real<T: Real>(b: &[T]) -> Result<Self> {
        b.iter()
            .map(|&c| {
                let r = c.round();
                if (c - r).abs() > T::zero() || !c.is_finite() {
                    Err(Error::NonIntegerShift(format!("component {c} is not an integer")))
                } else {
                    Ok(r.as_f64() as i64)
                }
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }

    pub fn components(&self) -> &[i64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }
}

/// Returns `u(· + b)` with periodic wraparound.
pub fn translate_field<T: Real>(u: &PeriodicField<T>, b: &LatticeShift) -> Result<PeriodicField<T>> {
    let grid = *u.grid();
    if b.0.len() != grid.dim() {
        return Err(Error::NonIntegerShift(format!(
            "shift has {} components, grid dimension is {}",
            b.0.len(),
            grid.dim()
        )));
    }
    let m = grid.axis_len() as i64;
    let n = grid.points_per_unit() as i64;
    let offset: Vec<i64> = b.0.iter().map(|&c| (c * n).rem_euclid(m)).collect();
    let src = |j: usize, axis: usize| ((j as i64 + offset[axis]) % m) as usize;
    let values = (0..grid.len())
        .map(|flat| {
            let idx = grid.multi_index(flat);
            let from = if grid.dim() == 1 {
                [src(idx[0], 0), 0]
            } else {
                [src(idx[0], 0), src(idx[1], 1)]
            };
            u.values()[grid.flat_index(from)]
        })
        .collect();
    Ok(PeriodicField::from_raw(grid, values))
}
