use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, PeriodicField};
use crate::real::Real;

use super::operator::SchrodingerOperator;

/// Eigenpairs of `L_k` and the splitting `E_k = E⁻_k ⊕ E⁺_k`.
///
/// Eigenvectors are stored as columns of a dense matrix of nodal values,
/// orthonormal for `(u, v) = ∫ u v`. A decomposition is either complete (all
/// `(n·k)^N` pairs) or holds the lowest pairs, which always include the full
/// negative subspace.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition<T: Real> {
    operator: SchrodingerOperator<T>,
    eigenvalues: Vec<T>,
    vectors: DMatrix<T>,
    split_index: usize,
}

impl<T: Real> SpectralDecomposition<T> {
    /// Assembles a decomposition from sorted, `∫`-orthonormal pairs.
    pub fn from_parts(
        operator: SchrodingerOperator<T>,
        eigenvalues: Vec<T>,
        vectors: DMatrix<T>,
    ) -> Result<Self> {
        if vectors.nrows() != operator.grid().len() || vectors.ncols() != eigenvalues.len() {
            return Err(Error::Eigensolver(format!(
                "eigenvector block is {}x{}, expected {}x{}",
                vectors.nrows(),
                vectors.ncols(),
                operator.grid().len(),
                eigenvalues.len()
            )));
        }
        if eigenvalues.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Eigensolver("eigenvalues must be sorted ascending".into()));
        }
        let split_index = eigenvalues.iter().take_while(|&&l| l < T::zero()).count();
        Ok(Self {
            operator,
            eigenvalues,
            vectors,
            split_index,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        self.operator.grid()
    }

    pub fn operator(&self) -> &SchrodingerOperator<T> {
        &self.operator
    }

    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    /// Number of negative eigenvalues, `dim E⁻_k`.
    pub fn split_index(&self) -> usize {
        self.split_index
    }

    pub fn retained(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_complete(&self) -> bool {
        self.retained() == self.grid().len()
    }

    /// True when the retained pairs certify that all of `E⁻_k` is present.
    pub fn negatives_complete(&self) -> bool {
        self.is_complete() || self.split_index < self.retained()
    }

    /// Raw nodal eigenvector matrix (columns).
    pub fn vectors(&self) -> &DMatrix<T> {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> PeriodicField<T> {
        PeriodicField::from_raw(*self.grid(), self.vectors.column(i).iter().copied().collect())
    }

    /// `(u, e_i)` for every retained pair.
    pub fn coefficients(&self, u: &PeriodicField<T>) -> DVector<T> {
        let w = self.grid().node_weight::<T>();
        self.vectors.tr_mul(&DVector::from_column_slice(u.values())) * w
    }

    /// `Σ c_i e_i` over the retained pairs.
    pub fn synthesize(&self, coefficients: &DVector<T>) -> PeriodicField<T> {
        let v = &self.vectors * coefficients;
        PeriodicField::from_raw(*self.grid(), v.iter().copied().collect())
    }

    fn require_negatives(&self) -> Result<()> {
        if self.negatives_complete() {
            Ok(())
        } else {
            Err(Error::IncompleteDecomposition(format!(
                "negative ({} retained pairs are all negative)",
                self.retained()
            )))
        }
    }

    /// `(P⁺u, P⁻u)`.
    pub fn project_split(
        &self,
        u: &PeriodicField<T>,
    ) -> Result<(PeriodicField<T>, PeriodicField<T>)> {
        self.grid().ensure_same(u.grid())?;
        self.require_negatives()?;
        let mut c = self.coefficients(u);
        for i in self.split_index..c.len() {
            c[i] = T::zero();
        }
        let minus = self.synthesize(&c);
        let plus = u.sub(&minus);
        Ok((plus, minus))
    }

    /// `(‖P⁺u‖_k, ‖P⁻u‖_k)` from the quadratic form of `L_k`.
    pub fn split_norm(&self, u: &PeriodicField<T>) -> Result<(T, T)> {
        let (plus, minus) = self.project_split(u)?;
        let plus_sq = self.operator.quadratic_form(&plus);
        let minus_sq = -self.operator.quadratic_form(&minus);
        let floor = -T::lit(1e-9);
        for (which, v) in [("plus", plus_sq), ("minus", minus_sq)] {
            if v < floor {
                return Err(Error::NegativeSquare {
                    which,
                    value: v.as_f64(),
                });
            }
        }
        Ok((plus_sq.max(T::zero()).sqrt(), minus_sq.max(T::zero()).sqrt()))
    }

    /// `|L_k|^{-1} r`: the Riesz representative of the functional `v ↦ ∫ r v`
    /// for the inner product `(·,·)_k`.
    ///
    /// Retained pairs are inverted exactly; the orthogonal complement, on
    /// which `L_k` is positive definite, by deflated preconditioned CG.
    pub fn raise(&self, r: &PeriodicField<T>) -> Result<PeriodicField<T>> {
        self.require_negatives()?;
        let c = self.coefficients(r);
        let scaled = DVector::from_iterator(
            c.len(),
            c.iter().zip(&self.eigenvalues).map(|(&ci, &l)| ci / l.abs()),
        );
        let mut out = self.synthesize(&scaled);
        if !self.is_complete() {
            let rest = r.sub(&self.synthesize(&c));
            let x = self.complement_solve(&rest)?;
            out.axpy_in_place(T::one(), &x);
        }
        Ok(out)
    }

    fn deflate(&self, v: &mut Vec<T>) {
        let w = self.grid().node_weight::<T>();
        let vv = DVector::from_column_slice(v);
        let c = self.vectors.tr_mul(&vv) * w;
        let proj = &self.vectors * c;
        for (a, b) in v.iter_mut().zip(proj.iter()) {
            *a -= *b;
        }
    }

    /// Solves `L x = b` on the complement of the retained pairs.
    fn complement_solve(&self, b: &PeriodicField<T>) -> Result<PeriodicField<T>> {
        let grid = *self.grid();
        let fourier = self.operator.fourier();
        let vmean = self
            .operator
            .potential()
            .values()
            .iter()
            .fold(T::zero(), |a, &v| a + v)
            / T::from_usize_exact(grid.len());
        let lam_top = *self.eigenvalues.last().unwrap_or(&T::one());
        let shift = vmean.max(T::zero()) + lam_top.max(T::one());
        let dot = |a: &[T], b: &[T]| a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y);
        let mut rhs = b.values().to_vec();
        self.deflate(&mut rhs);
        let bnorm = dot(&rhs, &rhs).sqrt();
        let mut x = vec![T::zero(); grid.len()];
        if bnorm == T::zero() {
            return Ok(PeriodicField::from_raw(grid, x));
        }
        let mut r = rhs;
        let precondition = |r: &[T]| {
            let mut z = fourier.solve_shifted(r, shift);
            self.deflate(&mut z);
            z
        };
        let mut z = precondition(&r);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let tol = T::lit(1e-13) * bnorm;
        for _ in 0..2000 {
            let mut ap = self.operator.apply_raw(&p);
            self.deflate(&mut ap);
            let pap = dot(&p, &ap);
            if pap <= T::zero() {
                return Err(Error::Eigensolver(
                    "operator not positive on the complement of the retained pairs".into(),
                ));
            }
            let a = rz / pap;
            for i in 0..x.len() {
                x[i] += a * p[i];
                r[i] -= a * ap[i];
            }
            if dot(&r, &r).sqrt() <= tol {
                return Ok(PeriodicField::from_raw(grid, x));
            }
            z = precondition(&r);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..p.len() {
                p[i] = z[i] + beta * p[i];
            }
        }
        Err(Error::Eigensolver("complement CG did not converge".into()))
    }
}
