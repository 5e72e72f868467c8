use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{Fourier, GridSpec};
use crate::real::Real;

use super::decomposition::SpectralDecomposition;
use super::operator::SchrodingerOperator;
use super::potential::PotentialSpec;

/// How many eigenpairs to retain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairCount {
    /// The complete decomposition.
    All,
    /// At least this many of the lowest pairs; always enlarged to cover
    /// every negative pair plus the buffer.
    Lowest(usize),
}

#[derive(Debug, Clone)]
pub struct EigenOptions {
    /// Largest number of degrees of freedom handled by the dense solver.
    pub dense_limit: usize,
    /// Positive pairs kept beyond the negative subspace.
    pub buffer: usize,
    /// Eigenvalues with `|λ| < tau_spec` count as zero.
    pub tau_spec: f64,
    /// Outer iteration cap of the partial solver.
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            dense_limit: 5000,
            buffer: 10,
            tau_spec: 1e-8,
            max_iter: 500,
            seed: 0x5eed,
        }
    }
}

/// Eigenpairs of `L_k = -Δ + V` on `grid`.
///
/// Grids up to `dense_limit` nodes are solved densely; `PairCount::All` is
/// only available there. Larger grids use block shift-and-invert subspace
/// iteration for the lowest pairs.
pub fn eigendecompose<T: Real>(
    potential: &PotentialSpec<T>,
    grid: &GridSpec,
    pairs: PairCount,
    opts: &EigenOptions,
) -> Result<SpectralDecomposition<T>> {
    let op = SchrodingerOperator::new(potential, grid)?;
    eigendecompose_operator(op, pairs, opts)
}

pub fn eigendecompose_operator<T: Real>(
    op: SchrodingerOperator<T>,
    pairs: PairCount,
    opts: &EigenOptions,
) -> Result<SpectralDecomposition<T>> {
    let dof = op.grid().len();
    let (values, vectors) = if dof <= opts.dense_limit {
        let (mut values, mut vectors) = dense_pairs(&op);
        if let PairCount::Lowest(n) = pairs {
            let split = values.iter().take_while(|&&l| l < T::zero()).count();
            let keep = n.max(split + opts.buffer).min(dof);
            values.truncate(keep);
            vectors = vectors.columns(0, keep).into_owned();
        }
        (values, vectors)
    } else {
        match pairs {
            PairCount::All => {
                return Err(Error::Eigensolver(format!(
                    "a complete decomposition needs at most {} degrees of freedom, grid has {dof}",
                    opts.dense_limit
                )))
            }
            PairCount::Lowest(n) => partial_pairs(&op, n, opts)?,
        }
    };
    let tau = T::lit(opts.tau_spec);
    if let Some(&l) = values.iter().find(|l| l.abs() < tau) {
        return Err(Error::ZeroInSpectrum {
            eigenvalue: l.as_f64(),
            tolerance: opts.tau_spec,
        });
    }
    let scale = T::one() / op.grid().node_weight::<T>().sqrt();
    let mut vectors = vectors * scale;
    normalize_signs(&mut vectors);
    SpectralDecomposition::from_parts(op, values, vectors)
}

/// Flips each column so that its first entry of largest magnitude is positive.
fn normalize_signs<T: Real>(vectors: &mut DMatrix<T>) {
    for mut col in vectors.column_iter_mut() {
        let mut best = T::zero();
        let mut sign = T::one();
        for &v in col.iter() {
            if v.abs() > best * (T::one() + T::lit(1e-9)) {
                best = v.abs();
                sign = if v < T::zero() { -T::one() } else { T::one() };
            }
        }
        if sign < T::zero() {
            col.neg_mut();
        }
    }
}

/// Dense matrix of `-Δ` on the grid, built from its circulant symbol.
pub fn dense_neg_laplacian<T: Real>(grid: &GridSpec) -> DMatrix<T> {
    let m = grid.axis_len();
    let axis = GridSpec::new(1, grid.cell_edge(), grid.points_per_unit()).expect("valid axis grid");
    let fourier = Fourier::<T>::new(axis);
    let symbol = fourier.neg_laplacian_symbol().to_vec();
    let mut delta = vec![T::zero(); m];
    delta[0] = T::one();
    let column = fourier.apply_symbol(&delta, |i| symbol[i]);
    let d1 = DMatrix::from_fn(m, m, |i, j| column[(i + m - j) % m]);
    if grid.dim() == 1 {
        return d1;
    }
    let eye = DMatrix::<T>::identity(m, m);
    d1.kronecker(&eye) + eye.kronecker(&d1)
}

/// Dense matrix of `L_k` in nodal values.
pub fn dense_operator<T: Real>(op: &SchrodingerOperator<T>) -> DMatrix<T> {
    let mut a = dense_neg_laplacian::<T>(op.grid());
    for (i, &v) in op.potential().values().iter().enumerate() {
        a[(i, i)] += v;
    }
    a
}

fn dense_pairs<T: Real>(op: &SchrodingerOperator<T>) -> (Vec<T>, DMatrix<T>) {
    let a = dense_operator(op);
    let eig = SymmetricEigen::new(a);
    sort_pairs(eig.eigenvalues, eig.eigenvectors)
}

fn sort_pairs<T: Real>(values: DVector<T>, vectors: DMatrix<T>) -> (Vec<T>, DMatrix<T>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite eigenvalues"));
    let sorted_values = order.iter().map(|&i| values[i]).collect();
    let sorted_vectors = DMatrix::from_fn(vectors.nrows(), order.len(), |r, c| vectors[(r, order[c])]);
    (sorted_values, sorted_vectors)
}

/// Lowest pairs by block subspace iteration on `(L - σ)^{-1}` with
/// `σ` below the spectrum. Returns Euclidean-orthonormal nodal vectors.
fn partial_pairs<T: Real>(
    op: &SchrodingerOperator<T>,
    requested: usize,
    opts: &EigenOptions,
) -> Result<(Vec<T>, DMatrix<T>)> {
    let dof = op.grid().len();
    let vsup = op.potential().sup_norm();
    let sigma = -vsup - T::one();
    let vmean = op
        .potential()
        .values()
        .iter()
        .fold(T::zero(), |a, &v| a + v)
        / T::from_usize_exact(dof);
    let precond_shift = (vmean - sigma).max(T::one());
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut target = requested.max(opts.buffer + 1).min(dof);
    let mut block = (target + target / 2 + 4).min(dof);
    let mut x = DMatrix::<T>::from_fn(dof, block, |_, _| T::lit(rng.random::<f64>() - 0.5));
    let tol = T::lit(1e-10).max(T::lit(100.0) * T::eps());

    for _ in 0..opts.max_iter {
        let mut y = DMatrix::<T>::zeros(dof, block);
        for c in 0..block {
            let col: Vec<T> = x.column(c).iter().copied().collect();
            let sol = shifted_solve(op, &col, sigma, precond_shift)?;
            y.set_column(c, &DVector::from_vec(sol));
        }
        let q = y.qr().q();
        let mut aq = DMatrix::<T>::zeros(dof, block);
        for c in 0..block {
            let col: Vec<T> = q.column(c).iter().copied().collect();
            aq.set_column(c, &DVector::from_vec(op.apply_raw(&col)));
        }
        let mut small = q.tr_mul(&aq);
        small = (&small + small.transpose()) * T::lit(0.5);
        let eig = SymmetricEigen::new(small);
        let (theta, w) = sort_pairs(eig.eigenvalues, eig.eigenvectors);
        x = &q * &w;
        let ax = &aq * &w;

        let converged = (0..target).all(|i| {
            let r = ax.column(i) - x.column(i) * theta[i];
            r.norm() <= tol * theta[i].abs().max(T::one())
        });
        if converged {
            let split = theta[..target].iter().take_while(|&&l| l < T::zero()).count();
            let needed = requested.max(split + opts.buffer).min(dof);
            if needed <= target && (split < target || target == dof) {
                let vectors = x.columns(0, target).into_owned();
                return Ok((theta[..target].to_vec(), vectors));
            }
            target = (needed + opts.buffer).min(dof);
            let new_block = (target + target / 2 + 4).min(dof);
            if new_block > block {
                let extra = new_block - block;
                x = x.resize_horizontally(new_block, T::zero());
                for c in block..block + extra {
                    for r in 0..dof {
                        x[(r, c)] = T::lit(rng.random::<f64>() - 0.5);
                    }
                }
                block = new_block;
            }
        }
    }
    Err(Error::Eigensolver(format!(
        "subspace iteration did not converge in {} iterations",
        opts.max_iter
    )))
}

/// Solves `(L - σ) x = b` by CG preconditioned with `(-Δ + c)^{-1}`.
fn shifted_solve<T: Real>(
    op: &SchrodingerOperator<T>,
    b: &[T],
    sigma: T,
    precond_shift: T,
) -> Result<Vec<T>> {
    let fourier = op.fourier();
    let dot = |a: &[T], b: &[T]| a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y);
    let apply = |v: &[T]| {
        let mut out = op.apply_raw(v);
        for (o, &x) in out.iter_mut().zip(v) {
            *o -= sigma * x;
        }
        out
    };
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![T::zero(); b.len()];
    if bnorm == T::zero() {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut z = fourier.solve_shifted(&r, precond_shift);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let tol = T::lit(1e-14).max(T::eps() * T::lit(10.0)) * bnorm;
    for _ in 0..5000 {
        let ap = apply(&p);
        let a = rz / dot(&p, &ap);
        for i in 0..x.len() {
            x[i] += a * p[i];
            r[i] -= a * ap[i];
        }
        if dot(&r, &r).sqrt() <= tol {
            return Ok(x);
        }
        z = fourier.solve_shifted(&r, precond_shift);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..p.len() {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Eigensolver("inner shifted CG did not converge".into()))
}
