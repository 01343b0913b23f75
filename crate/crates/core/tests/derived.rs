//! Worked examples with independently derived reference values.

use levyhomog_core::cell::{
    estimate_d, estimate_d_eikonal, solve_cell_direct, solve_discounted, solve_discounted_eikonal,
    DiscountSchedule, EikonalMethod, ErgodicOptions,
};
use levyhomog_core::coeffs::CoefficientSet;
use levyhomog_core::effective::{
    build_effective, check_subellipticity, harmonic_mean_oracle, CellMethod, EffectiveOperator,
};
use levyhomog_core::harness::{SweepConfig, SweepPlan};
use levyhomog_core::pide::{solve_eps_problem, Mode, ProblemInstance};
use levyhomog_core::quadrature::LevyQuadrature;

const SQRT3: f64 = 1.7320508075688772;

fn set(c: &str, g: &str) -> CoefficientSet {
    CoefficientSet::parse(1.0, c, g, None, "0", 0.0).unwrap()
}

fn torus(n: usize) -> LevyQuadrature {
    LevyQuadrature::for_torus(1.0, n, 1.0, 1.0).unwrap()
}

/// `1 / ∫₀¹ dy / (A + cos 2πy) = √(A² − 1)`.
fn closed_form_c_bar(a: f64) -> f64 {
    (a * a - 1.0).sqrt()
}

#[test]
fn unit_slope_is_the_harmonic_mean() {
    let c = set("2+cos(2*pi*y)", "0");
    let q = torus(512);
    let direct = solve_cell_direct(&c, &q, 1.0, 512).unwrap();
    assert!((direct.d - closed_form_c_bar(2.0)).abs() <= 2e-2);
    let disc = estimate_d(
        &c,
        &q,
        &DiscountSchedule::default(),
        1.0,
        512,
        &ErgodicOptions::default(),
    )
    .unwrap();
    assert!((disc.d - SQRT3).abs() <= 2e-2, "{}", disc.d);
}

#[test]
fn balanced_source_has_zero_ergodic_constant() {
    let c = set("2+cos(2*pi*y)", "sin(2*pi*y)");
    let q = torus(512);
    assert!(solve_cell_direct(&c, &q, 0.0, 512).unwrap().d.abs() <= 1e-6);
    let u = solve_discounted(&c, &q, 1e-4, 0.0, 512).unwrap();
    assert!(u.values().iter().all(|v| (1e-4 * v).abs() <= 1e-2));
}

#[test]
fn discounted_solutions_are_ordered_in_g() {
    let q = torus(256);
    let lo = solve_discounted(&set("2+cos(2*pi*y)", "sin(2*pi*y)"), &q, 0.01, 0.0, 256).unwrap();
    let hi =
        solve_discounted(&set("2+cos(2*pi*y)", "sin(2*pi*y)+0.3"), &q, 0.01, 0.0, 256).unwrap();
    assert!(lo.values().iter().zip(hi.values()).all(|(a, b)| a <= b));
}

#[test]
fn eikonal_discount_limit_self_converges() {
    let c = CoefficientSet::parse(1.0, "1", "sin(2*pi*y)", Some("1+0.5*cos(2*pi*y)"), "0", 0.0)
        .unwrap();
    let lambda = 1e-4;
    let solve =
        |n| solve_discounted_eikonal(&c, &torus(n), lambda, n, EikonalMethod::default()).unwrap();
    let (coarse, fine) = (solve(256), solve(512));
    let worst = coarse
        .values()
        .iter()
        .zip(fine.values().iter().step_by(2))
        .map(|(a, b)| (lambda * (a - b)).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 2e-2, "{worst}");

    let d = estimate_d_eikonal(
        &c,
        &torus(256),
        &DiscountSchedule::default(),
        256,
        EikonalMethod::default(),
        &ErgodicOptions::default(),
    )
    .unwrap();
    assert!(d
        .trace
        .iter()
        .all(|t| t.min <= d.d + 2e-2 && d.d - 2e-2 <= t.max));
}

#[test]
fn oracle_matches_closed_forms() {
    let (c_bar, g_bar) =
        harmonic_mean_oracle(&set("2+cos(2*pi*y)", "sin(2*pi*y)"), 100_000).unwrap();
    assert!((c_bar - SQRT3).abs() <= 1e-10);
    assert!(g_bar.abs() <= 1e-10);
    let (c_bar, _) = harmonic_mean_oracle(&set("3+cos(2*pi*y)", "0"), 100_000).unwrap();
    assert!((c_bar - closed_form_c_bar(3.0)).abs() <= 1e-10);
}

#[test]
fn fitted_operator_and_certificate() {
    let op = build_effective(
        &set("2+cos(2*pi*y)", "0"),
        &torus(1024),
        &[-2.0, -1.0, 0.0, 1.0, 2.0],
        1024,
        &CellMethod::Direct,
    )
    .unwrap();
    assert!((op.c_bar - SQRT3).abs() <= 1e-3);
    assert!((op.theta_certificate.margin - (SQRT3 - 1.0)).abs() <= 1e-3);

    let exact = EffectiveOperator::from_parts(0.0, SQRT3, 1.0);
    assert!((exact.eval(0.0, 2.0) + 2.0 * SQRT3).abs() <= 1e-12);
    let rep = check_subellipticity(&exact, 1.0, &[(0.0, 1.0), (-3.0, 0.5)], 1e-12).unwrap();
    for (_, ip, m) in rep.margins {
        assert!((m - (SQRT3 - 1.0) * ip).abs() <= 1e-12);
    }
}

fn closed(p: &ProblemInstance) -> Vec<(f64, f64)> {
    solve_eps_problem(p).unwrap().closed_values()
}

#[test]
fn successive_eps_solutions_are_closer_than_the_coarse_error() {
    let coeffs = set("2+cos(2*pi*y)", "sin(2*pi*y)");
    let cfg = SweepConfig {
        epsilons: vec![0.25, 0.125, 0.0625],
        ..SweepConfig::default()
    };
    let plan = SweepPlan::new(&coeffs, &cfg).unwrap();
    let coarse = plan.row(0.25);
    let (p8, _) = plan.instances(0.125).unwrap();
    let (p16, _) = plan.instances(0.0625).unwrap();
    let (u8, u16) = (closed(&p8), closed(&p16));
    // h halves, so every other fine point is a coarse point
    let diff = u8
        .iter()
        .zip(u16.iter().step_by(2))
        .map(|(a, b)| {
            assert!((a.0 - b.0).abs() < 1e-12);
            (a.1 - b.1).abs()
        })
        .fold(0.0, f64::max);
    assert!(diff < coarse.err_sup, "{diff} vs {}", coarse.err_sup);
}

#[test]
fn unit_source_homogenizes() {
    // g_bar = c_bar · mean(1/c) = 1
    let coeffs = set("2+cos(2*pi*y)", "1");
    let plan = SweepPlan::new(&coeffs, &SweepConfig::default()).unwrap();
    assert!((plan.effective().g_bar - 1.0).abs() <= 1e-9);
    assert!((plan.effective().c_bar - SQRT3).abs() <= 1e-3);
    let row = plan.row(1.0 / 64.0);
    assert!(row.failure.is_none());
    assert!(row.err_sup <= 1e-2, "{}", row.err_sup);
    let (_, eff) = plan.instances(1.0 / 64.0).unwrap();
    assert!(matches!(eff.mode(), Mode::Effective(_)));
}
