use crate::error::Result;
use crate::grid::{Fourier, GridSpec, PeriodicField};
use crate::real::Real;

use super::potential::PotentialSpec;

/// The periodic Schrödinger operator `L_k = -Δ + V` on one grid.
#[derive(Debug, Clone)]
pub struct SchrodingerOperator<T: Real> {
    potential: PeriodicField<T>,
    fourier: Fourier<T>,
}

impl<T: Real> SchrodingerOperator<T> {
    pub fn new(potential: &PotentialSpec<T>, grid: &GridSpec) -> Result<Self> {
        Ok(Self::from_samples(potential.sample(grid)?))
    }

    pub fn from_samples(potential: PeriodicField<T>) -> Self {
        let fourier = Fourier::new(*potential.grid());
        Self { potential, fourier }
    }

    pub fn grid(&self) -> &GridSpec {
        self.potential.grid()
    }

    pub fn fourier(&self) -> &Fourier<T> {
        &self.fourier
    }

    /// Sampled `V` on the grid.
    pub fn potential(&self) -> &PeriodicField<T> {
        &self.potential
    }

    pub(crate) fn apply_raw(&self, u: &[T]) -> Vec<T> {
        let mut out = self.fourier.neg_laplacian(u);
        for ((o, &v), &x) in out.iter_mut().zip(self.potential.values()).zip(u) {
            *o += v * x;
        }
        out
    }

    /// `-Δu + V u`.
    pub fn apply(&self, u: &PeriodicField<T>) -> PeriodicField<T> {
        assert_eq!(u.grid(), self.grid(), "operator applied on another grid");
        PeriodicField::from_raw(*u.grid(), self.apply_raw(u.values()))
    }

    /// `∫ (|∇u|² + V u²)`.
    pub fn quadratic_form(&self, u: &PeriodicField<T>) -> T {
        u.dot(&self.apply(u))
    }
}

/// `-Δu + V u` for a potential sampled on `u`'s grid.
pub fn apply_operator<T: Real>(
    potential: &PotentialSpec<T>,
    u: &PeriodicField<T>,
) -> Result<PeriodicField<T>> {
    Ok(SchrodingerOperator::new(potential, u.grid())?.apply(u))
}
