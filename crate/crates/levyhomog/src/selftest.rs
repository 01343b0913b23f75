//! Closed-form checks that any correct build must pass.

use std::io::Write;

use levyhomog_core::cell::{
    estimate_d, estimate_d_eikonal, solve_cell_direct, solve_discounted, DiscountSchedule,
    EikonalMethod, ErgodicOptions,
};
use levyhomog_core::coeffs::CoefficientSet;
use levyhomog_core::effective::{
    build_effective, check_subellipticity, CellMethod, EffectiveOperator,
};
use levyhomog_core::expr::{parse, validate_periodic, ParseErrorKind};
use levyhomog_core::grid::{DomainGrid, GridFunction};
use levyhomog_core::pide::{comparison_trial, solve_eps_problem, Mode, ProblemInstance};
use levyhomog_core::quadrature::{near_moment, tail_mass, LevyQuadrature, SplitParams};
use levyhomog_core::{Error, Result};

type Check = (&'static str, fn() -> Result<bool>);

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn eval(text: &str, at: f64) -> Result<f64> {
    parse(text)?.eval(at)
}

fn coeffs(c: &str, g: &str) -> Result<CoefficientSet> {
    CoefficientSet::parse(1.0, c, g, None, "0", 0.0)
}

const CHECKS: &[Check] = &[
    ("parse: 2+cos(2*pi*y) at 0 is 3", || {
        Ok(eval("2+cos(2*pi*y)", 0.0)? == 3.0)
    }),
    ("parse: sin(2*pi*y) at 0.25 is 1", || {
        Ok(eval("sin(2*pi*y)", 0.25)? == 1.0)
    }),
    ("parse: 2*(3+ is an unbalanced paren", || {
        Ok(matches!(parse("2*(3+"), Err(e) if e.kind == ParseErrorKind::UnbalancedParen))
    }),
    ("eval: pi", || Ok(eval("pi", 0.3)? == std::f64::consts::PI)),
    (
        "eval: abs(-2)*3 is 6",
        || Ok(eval("abs(-2)*3", 0.0)? == 6.0),
    ),
    ("eval: 1/y at 0 is a domain error", || {
        Ok(matches!(eval("1/y", 0.0), Err(Error::Domain(_))))
    }),
    ("eval: precedence", || {
        Ok(eval("2+3*4", 0.0)? == 14.0 && eval("(2+3)*4", 0.0)? == 20.0)
    }),
    ("periodicity: cos passes, y fails", || {
        let cos = validate_periodic(&parse("cos(2*pi*y)")?, 64, 1e-9)?;
        let y = validate_periodic(&parse("y")?, 64, 1e-9)?;
        let konst = validate_periodic(&parse("2+0*y")?, 4, 0.0)?;
        Ok(cos.pass && !y.pass && close(y.max_deviation, 1.0, 1e-12) && konst.pass)
    }),
    ("quadrature: closed-form tail and near moments", || {
        Ok(tail_mass(1.0, 2.0)? == 1.0
            && near_moment(1.0, 0.5)? == 1.0
            && close(near_moment(0.5, 1.0)?, 4.0 / 3.0, 1e-15)
            && tail_mass(0.5, 1.0)? == 4.0
            && near_moment(1.5, 1.0)? == 4.0
            && tail_mass(1.0, 4.0)? == 0.5)
    }),
    ("quadrature: constants are annihilated", || {
        let q = LevyQuadrature::build(1.0, 1.0 / 16.0, 1.0 / 16.0, 1.0)?;
        let grid = DomainGrid::new(0.0, 1.0, 1.0 / 16.0, q.reach(), 7.0)?;
        let u = GridFunction::domain(grid, vec![7.0; grid.len()])?;
        Ok(q.apply(&u)?.iter().all(|v| *v == 0.0))
    }),
    ("quadrature: split identity at X=2, nu=0.5", || {
        let q = LevyQuadrature::for_torus(1.0, 64, 1.0, 1.0)?;
        let u = GridFunction::torus(vec![0.0; 64])?;
        let v = q.eval_split(
            &u,
            0,
            &SplitParams {
                nu: 0.5,
                delta: 0.0,
                x: 2.0,
                p: 0.0,
            },
        )?;
        Ok(v.i1_plus == 1.0 && v.i1_minus == 1.0)
    }),
    (
        "cell: discounted constants, c=3, g=0, I=1, lambda=0.1",
        || {
            let q = LevyQuadrature::for_torus(1.0, 32, 1.0, 1.0)?;
            let u = solve_discounted(&coeffs("3", "0")?, &q, 0.1, 1.0, 32)?;
            Ok(u.values().iter().all(|v| close(*v, 30.0, 1e-10)))
        },
    ),
    ("cell: constant coefficients give d = g0 + c0 I", || {
        let q = LevyQuadrature::for_torus(1.0, 32, 1.0, 1.0)?;
        let c = coeffs("3", "2")?;
        let direct = solve_cell_direct(&c, &q, 0.5, 32)?;
        let disc = estimate_d(
            &c,
            &q,
            &DiscountSchedule::default(),
            0.5,
            32,
            &ErgodicOptions::default(),
        )?;
        Ok(close(direct.d, 3.5, 1e-12) && close(disc.d, 3.5, 1e-10) && direct.rho <= 1e-10)
    }),
    ("effective: c=4, g=1 gives -(1 + 4I)", || {
        let q = LevyQuadrature::for_torus(1.0, 32, 1.0, 1.0)?;
        let op = build_effective(
            &coeffs("4", "1")?,
            &q,
            &[-1.0, 0.0, 1.0],
            32,
            &CellMethod::Direct,
        )?;
        Ok(close(op.c_bar, 4.0, 1e-12)
            && close(op.eval(0.0, 0.0), -1.0, 1e-12)
            && op.fit_residual <= 1e-10)
    }),
    ("effective: tampered slope fails the certificate", || {
        let op = EffectiveOperator::from_parts(0.0, 0.5, 1.0);
        Ok(matches!(
            check_subellipticity(&op, 1.0, &[(0.0, 1.0)], 1e-12),
            Err(Error::CertificateFailed { .. })
        ))
    }),
    ("solve: constant data give a constant solution", || {
        let c = CoefficientSet::parse(1.0, "3", "2", None, "2", 2.0)?;
        let q = LevyQuadrature::build(1.0, 1.0 / 32.0, 1.0 / 32.0, 1.0)?;
        let p = ProblemInstance::new(c, 0.0, 1.0, q, Mode::Oscillatory { epsilon: 0.25 })?;
        Ok(solve_eps_problem(&p)?
            .closed_values()
            .iter()
            .all(|(_, u)| close(*u, 2.0, 1e-12)))
    }),
    ("solve: shifting g and phi by 1 shifts u by 1", || {
        let q = LevyQuadrature::build(1.0, 1.0 / 32.0, 1.0 / 32.0, 1.0)?;
        let lo = CoefficientSet::parse(1.0, "2+cos(2*pi*y)", "sin(2*pi*y)", None, "0", 0.0)?;
        let hi = CoefficientSet::parse(1.0, "2+cos(2*pi*y)", "sin(2*pi*y)+1", None, "1", 1.0)?;
        let p1 = ProblemInstance::new(lo, 0.0, 1.0, q, Mode::Oscillatory { epsilon: 0.25 })?;
        let p2 = p1.with_data(hi)?;
        let r = comparison_trial(&p1, &p2)?;
        Ok(r.u1
            .u
            .values()
            .iter()
            .zip(r.u2.u.values())
            .all(|(a, b)| close(b - a, 1.0, 1e-12)))
    }),
    ("eikonal: constant data give d = g0", || {
        let q = LevyQuadrature::for_torus(1.0, 64, 1.0, 1.0)?;
        let c = CoefficientSet::parse(1.0, "1", "5", Some("1"), "0", 0.0)?;
        let sol = estimate_d_eikonal(
            &c,
            &q,
            &DiscountSchedule::default(),
            64,
            EikonalMethod::default(),
            &ErgodicOptions::default(),
        )?;
        Ok(close(sol.d, 5.0, 1e-10))
    }),
    ("emit: CSV header", || {
        Ok(crate::emit::TABLE_HEADER.join(",")
            == "epsilon,h,err_sup,err_interior,residual,wall_time")
    }),
];

/// Runs the battery, printing one line per check. Returns the failure count.
pub fn run(out: &mut dyn Write) -> std::io::Result<usize> {
    let mut failures = 0;
    for (name, check) in CHECKS {
        let outcome = check();
        let ok = matches!(outcome, Ok(true));
        if !ok {
            failures += 1;
        }
        match outcome {
            Ok(true) => writeln!(out, "PASS  {name}")?,
            Ok(false) => writeln!(out, "FAIL  {name}")?,
            Err(e) => writeln!(out, "FAIL  {name}: {e}")?,
        }
    }
    writeln!(
        out,
        "{} of {} checks passed",
        CHECKS.len() - failures,
        CHECKS.len()
    )?;
    Ok(failures)
}
