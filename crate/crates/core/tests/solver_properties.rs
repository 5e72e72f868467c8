mod common;

use common::{cases, potential, quick_context};
use gapsol::action::Sign;
use gapsol::grid::GridSpec;
use gapsol::nonlinear::NonlinearitySpec;
use gapsol::solver::{linking_seed, minimize_from, project_to_manifold, verify_field, SolveConfig, VerifyOptions};
use proptest::prelude::*;

fn cfg() -> SolveConfig {
    SolveConfig {
        restarts: 0,
        descent_max_iter: 3000,
        ..SolveConfig::default()
    }
}

fn problem() -> impl Strategy<Value = (f64, f64, usize, f64)> {
    (0.2f64..3.0, -3.0f64..3.0, prop::sample::select(vec![2usize, 4]), 2.5f64..4.0)
}

proptest! {
    #![proptest_config(cases(100))]

    #[test]
    fn descent_from_the_seed((c, a, k, p) in problem()) {
        let grid = GridSpec::new(1, k, 8).unwrap();
        let f = NonlinearitySpec::power(gapsol::spectral::PeriodicFunction::constant(1.0), p);
        let ctx = quick_context(potential(1, c, a, 0.0), f, Sign::Plus, &grid);
        prop_assume!(ctx.is_some());
        let ctx = ctx.unwrap();
        let cfg = cfg();
        let seed = linking_seed(&ctx).unwrap();
        let start = project_to_manifold(&ctx, &seed, &cfg).unwrap();
        let start_value = ctx.signed_energy(&start);
        let r = minimize_from(&ctx, &seed, &cfg).unwrap();

        for w in r.history.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0));
        }
        prop_assert!(r.value <= start_value + 1e-9 * start_value.abs().max(1.0));
        prop_assert!(r.value > 0.0);

        // Newton's merit is scale free, so closure is relative to ‖u‖²_{H¹}
        let scale = r.h1_norm.powi(2).max(1.0);
        prop_assert!(r.residual.norm <= 1e-8 * scale, "{} vs {}", r.residual.norm, scale);

        if r.converged {
            let rep = verify_field(&ctx, &r.u, &VerifyOptions::default());
            prop_assert!(rep.is_ok(), "{:?}", rep);
        }

        let mirrored = minimize_from(&ctx, &seed.scaled(-1.0), &cfg).unwrap();
        prop_assert!((mirrored.value - r.value).abs() <= 1e-9 * r.value.abs().max(1.0));
        let gap = mirrored.u.add(&r.u).sup_norm();
        prop_assert!(gap <= 1e-6 * r.sup_norm, "{gap}");
    }
}
