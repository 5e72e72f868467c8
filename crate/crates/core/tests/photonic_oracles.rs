mod common;

use common::cases;
use gapsol::action::{PrepareOptions, Sign};
use gapsol::grid::make_grid;
use gapsol::photonic::{frequency_gap_map, reduce_to_nls, solve_gap_soliton, PhotonicMedium};
use gapsol::solver::SolveConfig;
use gapsol::spectral::{CosineTerm, PeriodicFunction};
use gapsol::Error;
use proptest::prelude::*;

fn cosine(offset: f64, amp: f64) -> PeriodicFunction<f64> {
    PeriodicFunction::cosine(offset, vec![CosineTerm::new(amp, vec![1])])
}

proptest! {
    #![proptest_config(cases(128))]

    #[test]
    fn reduction_is_pointwise(
        e0 in 0.5f64..3.0, e1 in -0.45f64..0.45, chi in prop_oneof![-2.0f64..-0.1, 0.1f64..2.0],
        omega in 0.1f64..3.0, beta in 0.0f64..3.0,
    ) {
        let eps = cosine(e0, e1 * e0);
        let m = PhotonicMedium::new(eps.clone(), PeriodicFunction::constant(chi), omega, beta, 1).unwrap();
        let (v, f, sign) = reduce_to_nls(&m).unwrap();
        prop_assert_eq!(sign, if chi > 0.0 { Sign::Plus } else { Sign::Minus });
        let grid = make_grid(1, 1, 16).unwrap();
        let vs = v.sample(&grid).unwrap();
        let es = eps.sample(&grid).unwrap();
        for (a, b) in vs.values().iter().zip(es.values()) {
            prop_assert!((a - (beta * beta - omega * omega * b)).abs() <= 1e-12 * (1.0 + a.abs()));
        }
        let w = f.weight().sample(&grid).unwrap();
        for x in w.values() {
            prop_assert!((x - omega * omega * chi.abs()).abs() <= 1e-12 * x.abs());
        }
    }

    #[test]
    fn mixed_sign_coupling_is_refused(c in -1.0f64..1.0, excess in 0.01f64..1.0, omega in 0.1f64..3.0) {
        let amp = c.abs() + excess;
        let err = PhotonicMedium::new(PeriodicFunction::constant(1.0), cosine(c, amp), omega, 0.0, 1).unwrap_err();
        prop_assert!(matches!(err, Error::MixedSignChi));
        prop_assert!(err.is_refusal());
    }
}

fn constant_state(omega: f64) -> (f64, f64, Option<f64>) {
    let m = PhotonicMedium::uniform(1.0, 1.0, omega, 1.0, 1).unwrap();
    let grid = make_grid(1, 32, 16).unwrap();
    let (r, ctx) = solve_gap_soliton(&m, &grid, &SolveConfig::default(), &PrepareOptions::for_dim(1)).unwrap();
    assert!(r.converged);
    (r.value, ctx.gap().alpha_plus, r.decay.map(|d| d.lambda))
}

#[test]
fn constant_medium_matches_closed_form_and_scales() {
    let mut values = Vec::new();
    for omega in [0.8f64, 0.6] {
        let alpha = 1.0 - omega * omega;
        let (value, gap_alpha, lambda) = constant_state(omega);
        assert!((gap_alpha - alpha).abs() < 1e-6, "{gap_alpha}");
        let exact = 4.0 / 3.0 * alpha.powf(1.5) / (omega * omega);
        assert!((value - exact).abs() < 2e-3 * exact, "ω={omega}: {value} vs {exact}");
        let lambda = lambda.expect("decay fit");
        assert!(lambda <= 1.1 * alpha.sqrt(), "{lambda}");
        values.push((value, alpha, omega));
    }
    let (v1, a1, w1) = values[0];
    let (v2, a2, w2) = values[1];
    let predicted = (a2 / a1).powf(1.5) * (w1 * w1) / (w2 * w2);
    assert!((v2 / v1 / predicted - 1.0).abs() < 0.02, "{} vs {predicted}", v2 / v1);
}

/// Hill discriminant `y₁(1) + y₂'(1)` of `y'' = −ω²ε(x)y` by classical RK4.
fn discriminant(eps: impl Fn(f64) -> f64, omega: f64) -> f64 {
    let steps = 4000;
    let h = 1.0 / steps as f64;
    let rhs = |x: f64, y: [f64; 2]| [y[1], -omega * omega * eps(x) * y[0]];
    let run = |mut y: [f64; 2]| {
        for s in 0..steps {
            let x = s as f64 * h;
            let k1 = rhs(x, y);
            let k2 = rhs(x + h / 2.0, [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]]);
            let k3 = rhs(x + h / 2.0, [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]]);
            let k4 = rhs(x + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
            for i in 0..2 {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        y
    };
    run([1.0, 0.0])[0] + run([0.0, 1.0])[1]
}

fn oracle_edge(eps: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let outside = |w: f64| discriminant(eps, w).abs() > 2.0;
    let left = outside(a);
    assert_ne!(left, outside(b));
    for _ in 0..60 {
        let mid = 0.5 * (a + b);
        if outside(mid) == left {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

#[test]
fn cosine_medium_edges_match_hill_discriminant() {
    let eps = cosine(1.0, 0.4);
    let opts = PrepareOptions::for_dim(1);
    let map = frequency_gap_map(&eps, 0.0, (2.5, 4.0), 16, 1, &opts).unwrap();
    let lower = map.lower_edge().expect("gap opens");
    let upper = map.upper_edge().expect("gap closes");
    assert!(lower < upper);
    let e = |x: f64| 1.0 + 0.4 * (std::f64::consts::TAU * x).cos();
    let w_lo = oracle_edge(&e, lower * 0.98, lower * 1.02);
    let w_hi = oracle_edge(&e, upper * 0.98, upper * 1.02);
    assert!((lower - w_lo).abs() < 2e-4 * w_lo, "{lower} vs {w_lo}");
    assert!((upper - w_hi).abs() < 2e-4 * w_hi, "{upper} vs {w_hi}");
}
