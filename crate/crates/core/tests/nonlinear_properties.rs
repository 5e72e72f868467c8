mod common;

use common::{cases, random_field, small_grid};
use gapsol::nonlinear::{eval_f, eval_F, NonlinearitySpec};
use gapsol::spectral::{CosineTerm, PeriodicFunction};
use proptest::prelude::*;

fn spec(kerr: bool, p: f64, h0: f64, h1: f64, dim: usize) -> NonlinearitySpec<f64> {
    let mode = if dim == 1 { vec![1] } else { vec![1, 1] };
    let h = PeriodicFunction::cosine(h0, vec![CosineTerm::new(h1, mode)]);
    if kerr {
        NonlinearitySpec::kerr(h)
    } else {
        NonlinearitySpec::power(h, p)
    }
}

proptest! {
    #![proptest_config(cases(128))]

    #[test]
    fn half_fu_minus_primitive_dominates(
        grid in small_grid(), s: u64, kerr: bool, p in 2.2f64..6.0,
        h0 in 1.0f64..3.0, frac in 0.0f64..0.9, amp in 0.01f64..10.0,
    ) {
        let f = spec(kerr, p, h0, frac * h0, grid.dim());
        let q = f.q;
        let u = random_field(grid, s, amp);
        let fu = eval_f(&f, &u).unwrap();
        let big = eval_F(&f, &u).unwrap();
        for ((&fi, &ui), &bi) in fu.values().iter().zip(u.values()).zip(big.values()) {
            let lhs = 0.5 * fi * ui - bi;
            let mid = (0.5 - 1.0 / q) * ui * fi;
            let scale = 1e-12 * (1.0 + (fi * ui).abs());
            prop_assert!(lhs >= mid - scale, "{lhs} < {mid}");
            prop_assert!(mid >= -scale);
        }
    }

    #[test]
    fn built_in_kinds_are_odd(grid in small_grid(), s: u64, kerr: bool, p in 2.2f64..6.0, amp in 0.01f64..10.0) {
        let f = spec(kerr, p, 1.5, 0.5, grid.dim());
        let u = random_field(grid, s, amp);
        let plus = eval_f(&f, &u).unwrap();
        let minus = eval_f(&f, &u.scaled(-1.0)).unwrap();
        for (a, b) in plus.values().iter().zip(minus.values()) {
            prop_assert_eq!(*a, -*b);
        }
    }
}
