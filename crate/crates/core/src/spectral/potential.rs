use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::{signed_mode, Fourier, GridSpec, PeriodicField};
use crate::real::Real;

/// One term `a·cos(2π m·x)` of a cosine series.
#[derive(Debug, Clone, PartialEq)]
pub struct CosineTerm<T> {
    pub amplitude: T,
    pub mode: Vec<i64>,
}

impl<T: Real> CosineTerm<T> {
    pub fn new(amplitude: T, mode: Vec<i64>) -> Self {
        Self { amplitude, mode }
    }
}

/// A bounded 1-periodic function of `x ∈ ℝ^N`: closed form or unit-cell samples.
///
/// Used for the potential `V`, the nonlinearity weight `h`, and the
/// dielectric data `ε`, `χ` of a photonic medium.
#[derive(Debug, Clone, PartialEq)]
pub enum PeriodicFunction<T> {
    Constant(T),
    CosineSeries {
        offset: T,
        terms: Vec<CosineTerm<T>>,
    },
    /// Samples on the unit cell (`k = 1`), tiled onto larger cells.
    Sampled(PeriodicField<T>),
}

/// The potential `V` of `-Δ + V`.
pub type PotentialSpec<T> = PeriodicFunction<T>;

/// Resolution used to bound closed-form functions from samples.
const PROBE_RESOLUTION: usize = 64;

impl<T: Real> PeriodicFunction<T> {
    pub fn constant(c: T) -> Self {
        PeriodicFunction::Constant(c)
    }

    pub fn cosine(offset: T, terms: Vec<CosineTerm<T>>) -> Self {
        PeriodicFunction::CosineSeries { offset, terms }
    }

    /// The 1D Mathieu-type potential `a·cos(2πx) + offset`.
    pub fn mathieu(amplitude: T, offset: T) -> Self {
        Self::cosine(offset, vec![CosineTerm::new(amplitude, vec![1])])
    }

    pub fn sampled(unit_cell: PeriodicField<T>) -> Result<Self> {
        if unit_cell.grid().cell_edge() != 1 {
            return Err(Error::InvalidPotential(format!(
                "sampled data must live on the unit cell, got k = {}",
                unit_cell.grid().cell_edge()
            )));
        }
        Ok(PeriodicFunction::Sampled(unit_cell))
    }

    /// Checks finiteness and that the data fits dimension `dim`.
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            PeriodicFunction::Constant(c) => {
                if !c.is_finite() {
                    return Err(Error::InvalidPotential("non-finite constant".into()));
                }
            }
            PeriodicFunction::CosineSeries { offset, terms } => {
                if !offset.is_finite() {
                    return Err(Error::InvalidPotential("non-finite offset".into()));
                }
                for t in terms {
                    if t.mode.len() != dim {
                        return Err(Error::InvalidPotential(format!(
                            "cosine mode {:?} does not have {dim} components",
                            t.mode
                        )));
                    }
                    if !t.amplitude.is_finite() {
                        return Err(Error::InvalidPotential("non-finite amplitude".into()));
                    }
                }
            }
            PeriodicFunction::Sampled(f) => {
                if f.grid().dim() != dim {
                    return Err(Error::InvalidPotential(format!(
                        "sampled data is {}-dimensional, problem is {dim}-dimensional",
                        f.grid().dim()
                    )));
                }
            }
        }
        Ok(())
    }

    fn eval_closed(&self, x: &[T]) -> T {
        match self {
            PeriodicFunction::Constant(c) => *c,
            PeriodicFunction::CosineSeries { offset, terms } => {
                terms.iter().fold(*offset, |acc, t| {
                    let phase = t
                        .mode
                        .iter()
                        .zip(x)
                        .fold(T::zero(), |p, (&m, &xi)| p + T::lit(m as f64) * xi);
                    acc + t.amplitude * (T::two_pi() * phase).cos()
                })
            }
            PeriodicFunction::Sampled(_) => unreachable!("sampled functions are tiled"),
        }
    }

    /// Values at the nodes of `grid` (lattice coordinates `j/n`).
    pub fn sample(&self, grid: &GridSpec) -> Result<PeriodicField<T>> {
        self.validate(grid.dim())?;
        match self {
            PeriodicFunction::Sampled(cell) => {
                let cg = cell.grid();
                if cg.points_per_unit() != grid.points_per_unit() {
                    return Err(Error::GridMismatch(format!(
                        "unit-cell data has n = {}, grid has n = {}",
                        cg.points_per_unit(),
                        grid.points_per_unit()
                    )));
                }
                let n = cg.points_per_unit();
                let values = (0..grid.len())
                    .map(|flat| {
                        let idx = grid.multi_index(flat);
                        cell.values()[cg.flat_index([idx[0] % n, idx[1] % n])]
                    })
                    .collect();
                PeriodicField::new(*grid, values)
            }
            _ => Ok(PeriodicField::from_lattice_fn(*grid, |x| self.eval_closed(x))),
        }
    }

    /// `(min, max)` over a probe grid (exact nodes for sampled data).
    pub fn range(&self, dim: usize) -> Result<(T, T)> {
        let field = match self {
            PeriodicFunction::Constant(c) => return Ok((*c, *c)),
            PeriodicFunction::Sampled(f) => f.clone(),
            _ => self.sample(&GridSpec::new(dim, 1, PROBE_RESOLUTION)?)?,
        };
        let vals = field.values();
        let lo = vals.iter().copied().fold(vals[0], |a, b| a.min(b));
        let hi = vals.iter().copied().fold(vals[0], |a, b| a.max(b));
        Ok((lo, hi))
    }

    /// Upper bound on `‖·‖_∞`; exact for constants and sampled data.
    pub fn sup_bound(&self) -> T {
        match self {
            PeriodicFunction::Constant(c) => c.abs(),
            PeriodicFunction::CosineSeries { offset, terms } => terms
                .iter()
                .fold(offset.abs(), |acc, t| acc + t.amplitude.abs()),
            PeriodicFunction::Sampled(f) => f.sup_norm(),
        }
    }

    /// `scale·self + shift`.
    pub fn affine(&self, scale: T, shift: T) -> Self {
        match self {
            PeriodicFunction::Constant(c) => PeriodicFunction::Constant(scale * *c + shift),
            PeriodicFunction::CosineSeries { offset, terms } => PeriodicFunction::CosineSeries {
                offset: scale * *offset + shift,
                terms: terms
                    .iter()
                    .map(|t| CosineTerm::new(scale * t.amplitude, t.mode.clone()))
                    .collect(),
            },
            PeriodicFunction::Sampled(f) => PeriodicFunction::Sampled(f.map(|v| scale * v + shift)),
        }
    }

    /// Fourier coefficients `ĉ(m)` of the function on the unit cell for all
    /// modes `|m_i| ≤ max_mode`, as a dense table indexed by [`ModeTable::get`].
    pub fn fourier_table(&self, dim: usize, max_mode: i64) -> Result<ModeTable<T>> {
        self.validate(dim)?;
        let mut table = ModeTable::zeros(dim, max_mode);
        match self {
            PeriodicFunction::Constant(c) => table.set([0, 0], Complex::new(*c, T::zero())),
            PeriodicFunction::CosineSeries { offset, terms } => {
                table.add([0, 0], Complex::new(*offset, T::zero()));
                let half = T::lit(0.5);
                for t in terms {
                    let m = [t.mode[0], if dim == 2 { t.mode[1] } else { 0 }];
                    let a = Complex::new(t.amplitude * half, T::zero());
                    if m == [0, 0] {
                        table.add(m, a + a);
                    } else {
                        table.add(m, a);
                        table.add([-m[0], -m[1]], a);
                    }
                }
            }
            PeriodicFunction::Sampled(cell) => {
                let g = *cell.grid();
                let n = g.points_per_unit();
                let spec = Fourier::new(g).forward(cell.values());
                let norm = T::one() / T::from_usize_exact(g.len());
                let nyq = (n / 2) as i64;
                let axis_modes = |j: usize| -> Vec<i64> {
                    let m = signed_mode(j, n);
                    if m == nyq {
                        vec![nyq, -nyq]
                    } else {
                        vec![m]
                    }
                };
                for (flat, &c) in spec.iter().enumerate() {
                    let idx = g.multi_index(flat);
                    let m0s = axis_modes(idx[0]);
                    let m1s = if dim == 2 { axis_modes(idx[1]) } else { vec![0] };
                    let split = T::from_usize_exact(m0s.len() * m1s.len());
                    for &m0 in &m0s {
                        for &m1 in &m1s {
                            table.add([m0, m1], c * (norm / split));
                        }
                    }
                }
            }
        }
        Ok(table)
    }
}

/// Dense table of Fourier coefficients for modes in `[-M, M]^N`.
#[derive(Debug, Clone)]
pub struct ModeTable<T> {
    dim: usize,
    max_mode: i64,
    data: Vec<Complex<T>>,
}

impl<T: Real> ModeTable<T> {
    fn zeros(dim: usize, max_mode: i64) -> Self {
        let side = (2 * max_mode + 1) as usize;
        Self {
            dim,
            max_mode,
            data: vec![Complex::new(T::zero(), T::zero()); side.pow(dim as u32)],
        }
    }

    fn slot(&self, m: [i64; 2]) -> Option<usize> {
        let side = 2 * self.max_mode + 1;
        let a = m[0] + self.max_mode;
        if a < 0 || a >= side {
            return None;
        }
        if self.dim == 1 {
            if m[1] != 0 {
                return None;
            }
            return Some(a as usize);
        }
        let b = m[1] + self.max_mode;
        if b < 0 || b >= side {
            return None;
        }
        Some((a * side + b) as usize)
    }

    fn set(&mut self, m: [i64; 2], v: Complex<T>) {
        if let Some(s) = self.slot(m) {
            self.data[s] = v;
        }
    }

    fn add(&mut self, m: [i64; 2], v: Complex<T>) {
        if let Some(s) = self.slot(m) {
            self.data[s] += v;
        }
    }

    /// Coefficient of mode `m` (zero outside the table).
    pub fn get(&self, m: [i64; 2]) -> Complex<T> {
        self.slot(m)
            .map(|s| self.data[s])
            .unwrap_or_else(|| Complex::new(T::zero(), T::zero()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn tiles_unit_cell_samples() {
        let cell_grid = make_grid(1, 1, 8).unwrap();
        let cell = PeriodicField::from_lattice_fn(cell_grid, |x: &[f64]| (6.0 * x[0]).sin());
        let v = PeriodicFunction::sampled(cell.clone()).unwrap();
        let big = v.sample(&make_grid(1, 3, 8).unwrap()).unwrap();
        for (j, &val) in big.values().iter().enumerate() {
            assert_eq!(val, cell.values()[j % 8]);
        }
        assert!(v.sample(&make_grid(1, 3, 16).unwrap()).is_err());
    }

    #[test]
    fn sampled_and_closed_form_coefficients_agree() {
        let closed = PeriodicFunction::cosine(
            0.3_f64,
            vec![CosineTerm::new(2.0, vec![1, 0]), CosineTerm::new(-0.5, vec![1, 2])],
        );
        let cell = closed.sample(&make_grid(2, 1, 8).unwrap()).unwrap();
        let sampled = PeriodicFunction::sampled(cell).unwrap();
        let a = closed.fourier_table(2, 6).unwrap();
        let b = sampled.fourier_table(2, 6).unwrap();
        for m0 in -6..=6 {
            for m1 in -6..=6 {
                let d = a.get([m0, m1]) - b.get([m0, m1]);
                assert!(d.norm() < 1e-13, "mode ({m0},{m1}): {d}");
            }
        }
        assert!((a.get([1, 2]).re + 0.25).abs() < 1e-15);
        assert!((a.get([-1, -2]).re + 0.25).abs() < 1e-15);
    }

    #[test]
    fn affine_and_range() {
        let v = PeriodicFunction::mathieu(2.0_f64, 0.0).affine(-1.0, 3.0);
        let (lo, hi) = v.range(1).unwrap();
        assert!((lo - 1.0).abs() < 1e-12 && (hi - 5.0).abs() < 1e-12);
        assert_eq!(v.sup_bound(), 5.0);
    }
}
