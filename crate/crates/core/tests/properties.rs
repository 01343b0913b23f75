use levyhomog_core::cell::{
    estimate_d, solve_cell_direct, solve_discounted, DiscountSchedule, ErgodicOptions,
};
use levyhomog_core::coeffs::CoefficientSet;
use levyhomog_core::effective::harmonic_mean_oracle;
use levyhomog_core::grid::{DomainGrid, GridFunction};
use levyhomog_core::harness::{run_sweep, SweepConfig};
use levyhomog_core::quadrature::LevyQuadrature;
use proptest::prelude::*;

fn trig(a: f64, b: f64, k: u32, g1: f64, g2: f64, m: u32) -> CoefficientSet {
    CoefficientSet::parse(
        1.0,
        &format!("{a}+{b}*cos(2*pi*{k}*y)"),
        &format!("{g1}*sin(2*pi*{m}*y)+{g2}"),
        None,
        "0",
        0.0,
    )
    .unwrap()
}

fn arb_set() -> impl Strategy<Value = CoefficientSet> {
    (
        1.2f64..3.0,
        0.0f64..1.0,
        1u32..4,
        0.0f64..2.0,
        -1.0f64..1.0,
        1u32..4,
    )
        .prop_map(|(a, frac, k, g1, g2, m)| {
            let r = |x: f64| (x * 1e4).round() / 1e4;
            trig(r(a), r(frac * (a - 1.0)), k, r(g1), r(g2), m)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn torus_operator_is_nonpositive_at_a_global_max(
        alpha in 0.1f64..1.9,
        values in proptest::collection::vec(-1.0f64..1.0, 64),
    ) {
        let q = LevyQuadrature::for_torus(alpha, 64, 1.0, 1.0).unwrap();
        let u = GridFunction::torus(values.clone()).unwrap();
        let iu = q.apply(&u).unwrap();
        let j = (0..64).max_by(|a, b| values[*a].total_cmp(&values[*b])).unwrap();
        prop_assert!(iu[j] <= 1e-9);
    }

    #[test]
    fn domain_operator_is_nonpositive_at_a_global_max(
        alpha in 0.1f64..1.9,
        far in -1.0f64..1.0,
        values in proptest::collection::vec(-1.0f64..1.0, 16 + 1 + 2 * 16),
    ) {
        let h = 1.0 / 16.0;
        let q = LevyQuadrature::build(alpha, h, h, 1.0).unwrap();
        let grid = DomainGrid::new(0.0, 1.0, h, q.reach(), far).unwrap();
        let u = GridFunction::domain(grid, values.clone()).unwrap();
        let iu = q.apply(&u).unwrap();
        let top = values.iter().copied().fold(far, f64::max);
        for i in grid.interior() {
            if values[grid.slot(i)] == top {
                prop_assert!(iu[i as usize] <= 1e-9);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn discounted_solution_obeys_the_maximum_principle(
        set in arb_set(),
        lambda in 1e-3f64..0.5,
        i_value in -1.0f64..1.0,
    ) {
        let q = LevyQuadrature::for_torus(1.0, 64, 1.0, 1.0).unwrap();
        let u = solve_discounted(&set, &q, lambda, i_value, 64).unwrap();
        let c = set.c_torus(64).unwrap();
        let g = set.g_torus(64).unwrap();
        let bound = c.iter().zip(&g).map(|(c, g)| (g + c * i_value).abs()).fold(0.0, f64::max);
        prop_assert!(u.values().iter().all(|v| (lambda * v).abs() <= bound * (1.0 + 1e-9) + 1e-12));
    }

    #[test]
    fn trace_gap_shrinks_along_the_schedule(set in arb_set(), i_value in -1.0f64..1.0) {
        let q = LevyQuadrature::for_torus(1.0, 64, 1.0, 1.0).unwrap();
        let sol = estimate_d(&set, &q, &DiscountSchedule::default(), i_value, 64, &ErgodicOptions::default()).unwrap();
        for w in sol.trace.windows(2) {
            prop_assert!(w[1].gap() <= w[0].gap() + 1e-10 / w[1].lambda);
        }
        prop_assert!(sol.rho <= 1e-2);
    }

    #[test]
    fn ergodic_constant_is_jointly_linear(set in arb_set(), i_value in -1.0f64..1.0) {
        let q = LevyQuadrature::for_torus(1.0, 64, 1.0, 1.0).unwrap();
        let base = solve_cell_direct(&set, &q, i_value, 64).unwrap();
        prop_assert!(base.rho <= 1e-10);
        for s in [-1.0, 2.0] {
            let g = levyhomog_core::expr::parse(&format!("({s})*({})", set.g())).unwrap();
            let scaled = solve_cell_direct(&set.with_g(g).unwrap(), &q, s * i_value, 64).unwrap();
            prop_assert!((scaled.d - s * base.d).abs() <= 1e-10 * (1.0 + base.d.abs()));
        }
    }

    #[test]
    fn harmonic_mean_lies_between_the_extremes(set in arb_set()) {
        let (c_bar, _) = harmonic_mean_oracle(&set, 4096).unwrap();
        let c = set.c_torus(4096).unwrap();
        let (lo, hi) = c.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
        prop_assert!(c_bar >= lo - 1e-12 && c_bar <= hi + 1e-12);
        prop_assert!(c_bar >= set.c0() - 1e-9);
    }
}

#[test]
fn sweep_is_reproducible_and_refinement_consistent() {
    let set = CoefficientSet::parse(1.0, "2+cos(2*pi*y)", "sin(2*pi*y)", None, "0", 0.0).unwrap();
    let cfg = SweepConfig::default();
    let a = run_sweep(&set, &cfg).unwrap();
    let b = run_sweep(&set, &cfg).unwrap();
    assert_eq!(a, b);
    for r in &a.rows {
        assert!(r.err_interior <= r.err_sup);
    }
    let fine = run_sweep(
        &set,
        &SweepConfig {
            refinement: 32,
            epsilons: vec![0.25, 1.0 / 64.0],
            ..cfg
        },
    )
    .unwrap();
    let (e16, e32) = (
        a.rows.last().unwrap().err_interior,
        fine.rows.last().unwrap().err_interior,
    );
    assert!(e16 <= 2.0 * e32 && e32 <= 2.0 * e16, "{e16} vs {e32}");
}
