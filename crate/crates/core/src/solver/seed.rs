use crate::action::ActionContext;
use crate::error::{Error, Result};
use crate::grid::PeriodicField;
use crate::real::Real;

/// Maximizer `t > 0` of `s ↦ ±J_k(s z)`, the root of
/// `d(s) = s⟨L̃z,z⟩ − ∫f(x, sz) z`.
///
/// Fails with `SeedDegenerate` when the ray has no interior maximum: the
/// quadratic part is not positive, or `d` never turns negative.
pub fn ray_maximizer<T: Real>(ctx: &ActionContext<T>, z: &PeriodicField<T>) -> Result<T> {
    let q = ctx.sign().factor::<T>() * ctx.decomposition().operator().quadratic_form(z);
    if !(q > T::zero()) {
        return Err(Error::SeedDegenerate);
    }
    let sampled = ctx.sampled();
    let d = |s: T| s * q - sampled.ray_derivative_term(z, s);
    let two = T::lit(2.0);
    let (mut lo, mut hi) = (T::zero(), T::one());
    let mut doublings = 0;
    while d(hi) > T::zero() {
        lo = hi;
        hi *= two;
        doublings += 1;
        if doublings > 200 || !hi.is_finite() {
            return Err(Error::SeedDegenerate);
        }
    }
    if lo == T::zero() {
        // shrink towards 0 until d is positive again
        let mut s = hi;
        let mut halvings = 0;
        while d(s) <= T::zero() {
            hi = s;
            s /= two;
            halvings += 1;
            if halvings > 200 {
                return Err(Error::SeedDegenerate);
            }
        }
        lo = s;
    }
    for _ in 0..200 {
        let mid = (lo + hi) / two;
        if mid <= lo || mid >= hi {
            break;
        }
        if d(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) / two)
}

/// Index of the eigenvector with the smallest positive `sλ`.
pub(crate) fn seed_index<T: Real>(ctx: &ActionContext<T>) -> Result<usize> {
    let dec = ctx.decomposition();
    let split = dec.split_index();
    match ctx.sign() {
        crate::action::Sign::Plus if split < dec.retained() => Ok(split),
        crate::action::Sign::Minus if split > 0 => Ok(split - 1),
        _ => Err(Error::SeedDegenerate),
    }
}

/// `t·z⁰`: the eigenvector with the smallest positive `sλ` scaled to the
/// maximum of the action along its ray.
pub fn linking_seed<T: Real>(ctx: &ActionContext<T>) -> Result<PeriodicField<T>> {
    let z = ctx.decomposition().vector(seed_index(ctx)?);
    let t = ray_maximizer(ctx, &z)?;
    Ok(z.scaled(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::{PrepareOptions, Sign};
    use crate::grid::make_grid;
    use crate::nonlinear::NonlinearitySpec;
    use crate::spectral::PotentialSpec;

    fn ctx(f: NonlinearitySpec<f64>, k: usize) -> ActionContext<f64> {
        ActionContext::prepare(
            PotentialSpec::constant(1.0),
            f,
            Sign::Plus,
            &make_grid(1, k, 8).unwrap(),
            &PrepareOptions::for_dim(1),
        )
        .unwrap()
    }

    #[test]
    fn unit_cell_seed_is_the_constant_one() {
        let c = ctx(NonlinearitySpec::cubic(), 1);
        let seed = linking_seed(&c).unwrap();
        for &v in seed.values() {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn seed_is_critical_along_its_ray() {
        let c = ctx(NonlinearitySpec::cubic(), 4);
        let seed = linking_seed(&c).unwrap();
        let d = c.gradient(&seed).dot(&seed);
        assert!(d.abs() < 1e-10, "{d}");
    }

    #[test]
    fn linear_problem_has_no_seed() {
        let c = ctx(NonlinearitySpec::cubic().scaled(0.0), 2);
        assert!(matches!(linking_seed(&c), Err(Error::SeedDegenerate)));
    }
}
