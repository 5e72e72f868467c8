mod common;

use common::{cases, potential, quick_context, random_field, small_grid};
use gapsol::action::Sign;
use gapsol::grid::{translate_field, LatticeShift};
use gapsol::nonlinear::NonlinearitySpec;
use proptest::prelude::*;

fn sign_of(minus: bool) -> Sign {
    if minus {
        Sign::Minus
    } else {
        Sign::Plus
    }
}

proptest! {
    #![proptest_config(cases(128))]

    #[test]
    fn gradient_matches_central_differences(
        grid in small_grid(), c in -12.0f64..4.0, a in -6.0f64..6.0, minus: bool,
        su: u64, sw: u64, amp in 0.1f64..2.0,
    ) {
        let ctx = quick_context(potential(grid.dim(), c, a, 0.5 * a), NonlinearitySpec::cubic(), sign_of(minus), &grid);
        prop_assume!(ctx.is_some());
        let ctx = ctx.unwrap();
        let u = random_field(grid, su, amp);
        let w = random_field(grid, sw, 1.0);
        let eps = 1e-4;
        let fd = (ctx.energy(&u.add_scaled(eps, &w)) - ctx.energy(&u.add_scaled(-eps, &w))) / (2.0 * eps);
        let r = ctx.gradient(&u);
        let exact = r.dot(&w);
        let scale = r.l2_norm() * w.l2_norm();
        prop_assert!((fd - exact).abs() <= 1e-5 * scale, "fd {fd} exact {exact} scale {scale}");
    }

    #[test]
    fn hessian_matches_differences_and_is_symmetric(
        grid in small_grid(), c in -12.0f64..4.0, a in -6.0f64..6.0, minus: bool,
        su: u64, sv: u64, sw: u64, amp in 0.1f64..2.0,
    ) {
        let ctx = quick_context(potential(grid.dim(), c, a, -a), NonlinearitySpec::cubic(), sign_of(minus), &grid);
        prop_assume!(ctx.is_some());
        let ctx = ctx.unwrap();
        let u = random_field(grid, su, amp);
        let v = random_field(grid, sv, 1.0);
        let w = random_field(grid, sw, 1.0);
        let hv = ctx.hessian_apply(&u, &v);
        let hw = ctx.hessian_apply(&u, &w);
        let scale = hv.l2_norm() * w.l2_norm() + hw.l2_norm() * v.l2_norm();
        prop_assert!((hv.dot(&w) - hw.dot(&v)).abs() <= 1e-10 * scale);
        let eps = 1e-4;
        let fd = ctx.gradient(&u.add_scaled(eps, &v)).sub(&ctx.gradient(&u.add_scaled(-eps, &v))).scaled(0.5 / eps);
        prop_assert!(fd.sub(&hv).l2_norm() <= 1e-5 * hv.l2_norm().max(1.0));
    }

    #[test]
    fn energies_are_lattice_invariant(
        grid in small_grid(), c in -12.0f64..4.0, a in -6.0f64..6.0, minus: bool,
        su: u64, b1 in -4i64..4, b2 in -4i64..4,
    ) {
        let ctx = quick_context(potential(grid.dim(), c, a, a), NonlinearitySpec::cubic(), sign_of(minus), &grid);
        prop_assume!(ctx.is_some());
        let ctx = ctx.unwrap();
        let u = random_field(grid, su, 1.0);
        let b = LatticeShift(if grid.dim() == 1 { vec![b1] } else { vec![b1, b2] });
        let t = translate_field(&u, &b).unwrap();
        let e = ctx.energy(&u);
        let tol = 1e-12 * e.abs().max(1.0);
        prop_assert!((ctx.energy(&t) - e).abs() <= tol);
        prop_assert!((ctx.energy_split(&t).unwrap() - ctx.energy_split(&u).unwrap()).abs() <= tol);
        prop_assert!((ctx.h1_norm(&t) - ctx.h1_norm(&u)).abs() <= 1e-12 * ctx.h1_norm(&u));
        prop_assert!((ctx.nehari_residual(&t).norm - ctx.nehari_residual(&u).norm).abs()
            <= 1e-10 * ctx.nehari_residual(&u).norm.max(1.0));
    }

    #[test]
    fn split_projections_are_complementary(
        grid in small_grid(), c in -12.0f64..4.0, a in -6.0f64..6.0, su: u64,
    ) {
        let ctx = quick_context(potential(grid.dim(), c, a, a), NonlinearitySpec::cubic(), Sign::Plus, &grid);
        prop_assume!(ctx.is_some());
        let ctx = ctx.unwrap();
        let dec = ctx.decomposition();
        let u = random_field(grid, su, 1.0);
        let (plus, minus) = dec.project_split(&u).unwrap();
        prop_assert!(plus.add(&minus).sub(&u).sup_norm() <= 1e-12 * u.sup_norm());
        let (pp, pm) = dec.project_split(&plus).unwrap();
        prop_assert!(pm.sup_norm() <= 1e-10 * u.sup_norm());
        prop_assert!(pp.sub(&plus).sup_norm() <= 1e-10 * u.sup_norm());
    }

    #[test]
    fn two_energy_routes_agree(
        grid in small_grid(), c in -12.0f64..4.0, a in -6.0f64..6.0, minus: bool, su: u64, amp in 0.1f64..3.0,
    ) {
        let ctx = quick_context(potential(grid.dim(), c, a, 0.3), NonlinearitySpec::cubic(), sign_of(minus), &grid);
        prop_assume!(ctx.is_some());
        let ctx = ctx.unwrap();
        let u = random_field(grid, su, amp);
        let e1 = ctx.energy(&u);
        let e2 = ctx.energy_split(&u).unwrap();
        prop_assert!((e1 - e2).abs() <= 1e-9 * e1.abs().max(1.0), "{e1} vs {e2}");
    }
}
