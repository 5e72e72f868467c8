//! The action `J_k(u) = ½∫(|∇u|² + Vu²) ∓ ∫F(x,u)` on the torus, its
//! derivatives, and the Nehari–Pankov residual.
//!
//! Internally the solver works with the signed functional `Φ = ±J_k`,
//! which is `½⟨sLu,u⟩ − ∫F` with `s = ±1`. The `−` problem is the `+`
//! problem for `−L`, so both share one code path: the constrained
//! subspace is spanned by the eigenvectors with `sλ < 0`.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{h1_norm_with, GridSpec, PeriodicField};
use crate::nonlinear::{NonlinearitySpec, SampledNonlinearity};
use crate::real::Real;
use crate::spectral::{
    bloch_bands, eigendecompose, find_gap_at_zero, BlochOptions, EigenOptions, PairCount,
    PotentialSpec, SpectralDecomposition, SpectralGap,
};

/// The `±` of `−Δu + Vu = ±f(x,u)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor<T: Real>(self) -> T {
        match self {
            Sign::Plus => T::one(),
            Sign::Minus => -T::one(),
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "plus",
            Sign::Minus => "minus",
        })
    }
}

/// Spectral settings used by [`ActionContext::prepare`].
#[derive(Debug, Clone)]
pub struct PrepareOptions {
    pub bloch: BlochOptions,
    pub eigen: EigenOptions,
}

impl PrepareOptions {
    pub fn for_dim(dim: usize) -> Self {
        Self {
            bloch: if dim == 1 {
                BlochOptions::new(1, 32, 8)
            } else {
                BlochOptions::new(2, 16, 8)
            },
            eigen: EigenOptions::default(),
        }
    }
}

/// Everything needed to evaluate `J_k` and its derivatives on one grid.
#[derive(Debug, Clone)]
pub struct ActionContext<T: Real> {
    potential: PotentialSpec<T>,
    nonlinearity: NonlinearitySpec<T>,
    sampled: SampledNonlinearity<T>,
    decomposition: SpectralDecomposition<T>,
    gap: SpectralGap<T>,
    sign: Sign,
    /// Indices of the constrained eigenpairs (`sλ < 0`).
    constrained: Vec<usize>,
    /// Their eigenvectors as columns, and `sλ_i`.
    basis: DMatrix<T>,
    signed_eigenvalues: DVector<T>,
}

impl<T: Real> ActionContext<T> {
    pub fn new(
        potential: PotentialSpec<T>,
        nonlinearity: NonlinearitySpec<T>,
        sign: Sign,
        decomposition: SpectralDecomposition<T>,
        gap: SpectralGap<T>,
    ) -> Result<Self> {
        let grid = *decomposition.grid();
        if sign == Sign::Minus {
            gap.require_spectrum_below()?;
            if !decomposition.is_complete() {
                return Err(Error::IncompleteDecomposition(
                    "positive (required for the '-' sign)".into(),
                ));
            }
        } else if !decomposition.negatives_complete() {
            return Err(Error::IncompleteDecomposition("negative".into()));
        }
        let sampled = nonlinearity.sample(&grid)?;
        let split = decomposition.split_index();
        let constrained: Vec<usize> = match sign {
            Sign::Plus => (0..split).collect(),
            Sign::Minus => (split..decomposition.retained()).collect(),
        };
        let vectors = decomposition.vectors();
        let basis = DMatrix::from_fn(vectors.nrows(), constrained.len(), |r, c| {
            vectors[(r, constrained[c])]
        });
        let s = sign.factor::<T>();
        let signed_eigenvalues = DVector::from_iterator(
            constrained.len(),
            constrained.iter().map(|&i| s * decomposition.eigenvalues()[i]),
        );
        Ok(Self {
            potential,
            nonlinearity,
            sampled,
            decomposition,
            gap,
            sign,
            constrained,
            basis,
            signed_eigenvalues,
        })
    }

    /// Bloch bands, gap location and the eigendecomposition on `grid`.
    pub fn prepare(
        potential: PotentialSpec<T>,
        nonlinearity: NonlinearitySpec<T>,
        sign: Sign,
        grid: &GridSpec,
        opts: &PrepareOptions,
    ) -> Result<Self> {
        potential
            .validate(grid.dim())
            .map_err(|e| e.at_stage("potential"))?;
        let bands = bloch_bands(&potential, grid.dim(), &opts.bloch).map_err(|e| e.at_stage("bands"))?;
        let gap = find_gap_at_zero(&bands, T::lit(opts.eigen.tau_spec)).map_err(|e| e.at_stage("gap"))?;
        if sign == Sign::Minus {
            gap.require_spectrum_below().map_err(|e| e.at_stage("gap"))?;
        }
        let pairs = if sign == Sign::Minus || grid.len() <= opts.eigen.dense_limit {
            PairCount::All
        } else {
            PairCount::Lowest(opts.eigen.buffer)
        };
        let dec = eigendecompose(&potential, grid, pairs, &opts.eigen)
            .map_err(|e| e.at_stage("decompose"))?;
        Self::new(potential, nonlinearity, sign, dec, gap)
    }

    /// Same problem on another grid (the gap does not depend on the grid).
    pub fn regrid(&self, grid: &GridSpec, eigen: &EigenOptions) -> Result<Self> {
        let pairs = if self.sign == Sign::Minus || grid.len() <= eigen.dense_limit {
            PairCount::All
        } else {
            PairCount::Lowest(eigen.buffer)
        };
        let dec = eigendecompose(&self.potential, grid, pairs, eigen)
            .map_err(|e| e.at_stage("decompose"))?;
        Self::new(
            self.potential.clone(),
            self.nonlinearity.clone(),
            self.sign,
            dec,
            self.gap,
        )
    }

    pub fn grid(&self) -> &GridSpec {
        self.decomposition.grid()
    }

    pub fn potential(&self) -> &PotentialSpec<T> {
        &self.potential
    }

    pub fn nonlinearity(&self) -> &NonlinearitySpec<T> {
        &self.nonlinearity
    }

    pub fn sampled(&self) -> &SampledNonlinearity<T> {
        &self.sampled
    }

    pub fn decomposition(&self) -> &SpectralDecomposition<T> {
        &self.decomposition
    }

    pub fn gap(&self) -> &SpectralGap<T> {
        &self.gap
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn constrained(&self) -> &[usize] {
        &self.constrained
    }

    /// Constrained eigenvectors as columns of nodal values.
    pub fn constrained_basis(&self) -> &DMatrix<T> {
        &self.basis
    }

    /// `sλ_i < 0` for every constrained pair.
    pub fn constrained_signed_eigenvalues(&self) -> &DVector<T> {
        &self.signed_eigenvalues
    }

    pub fn h1_norm(&self, u: &PeriodicField<T>) -> T {
        h1_norm_with(self.decomposition.operator().fourier(), u)
    }

    fn integral_f(&self, u: &PeriodicField<T>) -> T {
        self.sampled.primitive(u).values().iter().fold(T::zero(), |a, &v| a + v)
            * self.grid().node_weight::<T>()
    }

    /// `J_k(u)` from the quadratic form.
    pub fn energy(&self, u: &PeriodicField<T>) -> T {
        let q = self.decomposition.operator().quadratic_form(u);
        T::lit(0.5) * q - self.sign.factor::<T>() * self.integral_f(u)
    }

    /// `J_k(u)` from the split norms `½(‖P⁺u‖² − ‖P⁻u‖²) ∓ ∫F`.
    pub fn energy_split(&self, u: &PeriodicField<T>) -> Result<T> {
        let (p, m) = self.decomposition.split_norm(u)?;
        Ok(T::lit(0.5) * (p * p - m * m) - self.sign.factor::<T>() * self.integral_f(u))
    }

    /// The signed functional `Φ = ±J_k`.
    pub fn signed_energy(&self, u: &PeriodicField<T>) -> T {
        self.sign.factor::<T>() * self.energy(u)
    }

    /// `r = −Δu + Vu ∓ f(x,u)`, the `L²` representative of `J'_k(u)`.
    pub fn gradient(&self, u: &PeriodicField<T>) -> PeriodicField<T> {
        let lu = self.decomposition.operator().apply(u);
        lu.add_scaled(-self.sign.factor::<T>(), &self.sampled.f(u))
    }

    /// `r̃ = ±r`, the `L²` representative of `Φ'(u)`.
    pub fn signed_gradient(&self, u: &PeriodicField<T>) -> PeriodicField<T> {
        self.gradient(u).scaled(self.sign.factor())
    }

    /// `−Δw + Vw ∓ f'_u(x,u) w`.
    pub fn hessian_apply(&self, u: &PeriodicField<T>, w: &PeriodicField<T>) -> PeriodicField<T> {
        let lw = self.decomposition.operator().apply(w);
        let fw = self.sampled.fprime(u).zip_map(w, |a, b| a * b);
        lw.add_scaled(-self.sign.factor::<T>(), &fw)
    }

    /// `(r, e_i)` over the constrained pairs.
    pub(crate) fn constrained_coefficients(&self, r: &PeriodicField<T>) -> DVector<T> {
        self.basis.tr_mul(&DVector::from_column_slice(r.values())) * self.grid().node_weight::<T>()
    }

    /// `G(u) = (⟨J'(u),u⟩, P∓∇_k J(u))`.
    pub fn nehari_residual(&self, u: &PeriodicField<T>) -> NehariResidual<T> {
        self.residual_from_gradient(u, &self.gradient(u))
    }

    pub(crate) fn residual_from_gradient(
        &self,
        u: &PeriodicField<T>,
        r: &PeriodicField<T>,
    ) -> NehariResidual<T> {
        let i_value = r.dot(u);
        let c = self.constrained_coefficients(r);
        let mut weighted = c.clone();
        let mut sq = T::zero();
        for (slot, w) in weighted.iter_mut().enumerate() {
            let l = self.signed_eigenvalues[slot].abs();
            sq += c[slot] * c[slot] / l;
            *w = c[slot] / l;
        }
        let g = &self.basis * weighted;
        let g_minus = PeriodicField::from_raw(*self.grid(), g.iter().copied().collect());
        NehariResidual {
            i_value,
            g_minus,
            g_minus_norm: sq.sqrt(),
            norm: (i_value * i_value + sq).sqrt(),
        }
    }

    /// `∫(½fu − F)`, which equals `±J_k(u)` on the Nehari–Pankov set.
    pub fn nehari_value_identity(&self, u: &PeriodicField<T>) -> Result<ValueIdentity<T>> {
        self.nehari_value_identity_with_tol(u, T::lit(DEFAULT_MANIFOLD_TOL))
    }

    pub fn nehari_value_identity_with_tol(
        &self,
        u: &PeriodicField<T>,
        tolerance: T,
    ) -> Result<ValueIdentity<T>> {
        if u.values().iter().all(|&v| v == T::zero()) {
            return Ok(ValueIdentity {
                value: T::zero(),
                zero_field: true,
            });
        }
        let res = self.nehari_residual(u);
        if !(res.norm <= tolerance) {
            return Err(Error::OffManifold {
                residual: res.norm.as_f64(),
                tolerance: tolerance.as_f64(),
            });
        }
        let f = self.sampled.f(u);
        let big = self.sampled.primitive(u);
        let half = T::lit(0.5);
        let value = f
            .values()
            .iter()
            .zip(u.values())
            .zip(big.values())
            .fold(T::zero(), |a, ((&fi, &ui), &bi)| a + half * fi * ui - bi)
            * self.grid().node_weight::<T>();
        Ok(ValueIdentity {
            value,
            zero_field: false,
        })
    }
}

/// Residual tolerance accepted by [`ActionContext::nehari_value_identity`].
pub const DEFAULT_MANIFOLD_TOL: f64 = 1e-6;

/// `G(u)` and its size.
#[derive(Debug, Clone)]
pub struct NehariResidual<T> {
    /// `I(u) = ⟨J'(u), u⟩`.
    pub i_value: T,
    /// Constrained component of the `k`-gradient.
    pub g_minus: PeriodicField<T>,
    /// `‖g_minus‖_k`.
    pub g_minus_norm: T,
    /// `(I² + ‖g_minus‖²_k)^{1/2}`.
    pub norm: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueIdentity<T> {
    pub value: T,
    /// Set for `u = 0`, where the identity holds trivially.
    pub zero_field: bool,
}
