//! The nonlocal Dirichlet problem on an interval.
//!
//! Unknowns are the interior grid values `u(x_1) .. u(x_{cells-1})`. Exterior
//! values are data: `phi` on the halo and the constant far field beyond it.
//! The scheme is
//!
//! ```text
//! u_i - c_i I_h[u](x_i) = g_i
//! ```
//!
//! with `c_i = c(x_i/ε)`, `g_i = g(x_i/ε)` for the oscillatory problem and the
//! constants `c̄`, `ḡ` for the effective one.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::coeffs::CoefficientSet;
use crate::effective::EffectiveOperator;
use crate::grid::{DomainGrid, GridFunction};
use crate::linalg::{self, sup_norm, Matrix};
use crate::quadrature::LevyQuadrature;
use crate::{Error, Result};

/// Absolute bound on the sup-norm residual of a returned solution.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Relative bound, against `1 + max_i (|g_i| + c_i |center| ‖u‖)`, used when
/// that scale is large enough to make the absolute bound unattainable.
pub const RESIDUAL_REL: f64 = 1e-13;
/// Interior sizes above this are solved by damped Jacobi.
pub const DIRECT_LIMIT: usize = 4096;
/// Slack allowed in the comparison check.
pub const COMPARISON_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Mode {
    Oscillatory { epsilon: f64 },
    Effective(EffectiveOperator),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    coeffs: CoefficientSet,
    grid: DomainGrid,
    quad: LevyQuadrature,
    mode: Mode,
}

fn integer_ratio(num: f64, den: f64) -> Option<usize> {
    let r = num / den;
    let k = libm::round(r);
    (k >= 1.0 && libm::fabs(r - k) <= 1e-9 * k).then_some(k as usize)
}

impl ProblemInstance {
    /// The grid spacing is that of `quad` and the halo is its reach.
    pub fn new(
        coeffs: CoefficientSet,
        x_lo: f64,
        x_hi: f64,
        quad: LevyQuadrature,
        mode: Mode,
    ) -> Result<Self> {
        if quad.alpha() != coeffs.alpha() {
            return Err(Error::InvalidParameter(
                "quadrature and coefficients disagree on alpha".into(),
            ));
        }
        let h = quad.h();
        if let Mode::Oscillatory { epsilon } = mode {
            if !(epsilon > 0.0 && epsilon <= 1.0) || integer_ratio(1.0, epsilon).is_none() {
                return Err(Error::InvalidParameter(format!(
                    "1/epsilon must be a positive integer, got {epsilon}"
                )));
            }
            if integer_ratio(epsilon, h).is_none() {
                return Err(Error::InvalidParameter(
                    "epsilon / h must be a positive integer".into(),
                ));
            }
        }
        let grid = DomainGrid::new(x_lo, x_hi, h, quad.reach(), coeffs.far_field())?;
        Ok(Self {
            coeffs,
            grid,
            quad,
            mode,
        })
    }

    pub fn coeffs(&self) -> &CoefficientSet {
        &self.coeffs
    }
    pub fn grid(&self) -> &DomainGrid {
        &self.grid
    }
    pub fn quad(&self) -> &LevyQuadrature {
        &self.quad
    }
    pub fn mode(&self) -> &Mode {
        &self.mode
    }

    /// Same instance with new source and exterior data.
    pub fn with_data(&self, coeffs: CoefficientSet) -> Result<Self> {
        Self::new(
            coeffs,
            self.grid.x_lo,
            self.grid.x_hi,
            self.quad.clone(),
            self.mode.clone(),
        )
    }

    /// Same instance with a different (possibly tampered) quadrature of the
    /// same spacing and reach.
    pub fn with_quadrature(&self, quad: LevyQuadrature) -> Result<Self> {
        Self::new(
            self.coeffs.clone(),
            self.grid.x_lo,
            self.grid.x_hi,
            quad,
            self.mode.clone(),
        )
    }

    /// `(c_i, g_i)` at every closed-domain point.
    fn coefficients(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let len = self.grid.cells + 1;
        match &self.mode {
            Mode::Oscillatory { epsilon } => {
                let r =
                    integer_ratio(*epsilon, self.grid.h).expect("checked at construction") as f64;
                let y0 = self.grid.x_lo / epsilon;
                let mut c = Vec::with_capacity(len);
                let mut g = Vec::with_capacity(len);
                for i in 0..len {
                    let y = y0 + i as f64 / r;
                    c.push(self.coeffs.c().eval(y)?);
                    g.push(self.coeffs.g().eval(y)?);
                }
                Ok((c, g))
            }
            Mode::Effective(op) => Ok((vec![op.c_bar; len], vec![op.g_bar; len])),
        }
    }

    fn exterior(&self) -> Result<GridFunction> {
        GridFunction::domain_from_expr(self.grid, self.coeffs.phi())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Direct,
    Jacobi,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub unknowns: usize,
    pub solver: SolverKind,
    /// 1 for the direct solve (plus one refinement step).
    pub iterations: usize,
    pub backward_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// Solution on the whole grid, halo included.
    pub u: GridFunction,
    pub sup_residual: f64,
    pub stats: SolveStats,
    /// Seconds; left at 0 by the core solver and filled by callers that time it.
    pub wall_time: f64,
}

impl SolveReport {
    /// `(x_i, u_i)` over the closed domain.
    pub fn closed_values(&self) -> Vec<(f64, f64)> {
        let crate::grid::Grid::Domain(d) = self.u.grid() else {
            unreachable!("solve reports live on domain grids")
        };
        d.closure()
            .map(|i| (d.x(i), self.u.values()[d.slot(i)]))
            .collect()
    }
}

/// Options for the linear solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub direct_limit: usize,
    pub jacobi_omega: f64,
    pub jacobi_max_iters: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            direct_limit: DIRECT_LIMIT,
            jacobi_omega: 1.0,
            jacobi_max_iters: 200_000,
        }
    }
}

struct System {
    c: Vec<f64>,
    g: Vec<f64>,
    exterior: GridFunction,
    matrix: Option<Matrix>,
    rhs: Vec<f64>,
    diag: Vec<f64>,
}

/// Assembles the interior system. The matrix is only formed for the direct
/// path; the Jacobi path works from the stencil.
fn assemble(p: &ProblemInstance, dense: bool) -> Result<System> {
    let (c, g) = p.coefficients()?;
    let exterior = p.exterior()?;
    let grid = &p.grid;
    let stencil = p.quad.stencil();
    let m = grid.cells - 1;
    let mut matrix = dense.then(|| Matrix::zeros(m));
    let mut rhs = Vec::with_capacity(m);
    let mut diag = Vec::with_capacity(m);
    let ext = exterior.values();
    for r in 0..m {
        let i = r + 1;
        let ci = c[i];
        let d = 1.0 - ci * stencil.center;
        diag.push(d);
        let mut b = g[i] + ci * stencil.tail_mass * grid.far_field;
        if let Some(a) = matrix.as_mut() {
            a.set(r, r, d);
        }
        for (k, w) in stencil.offsets.iter().enumerate() {
            let k = k + 1;
            for j in [i as isize - k as isize, (i + k) as isize] {
                if j >= 1 && j < grid.cells as isize {
                    if let Some(a) = matrix.as_mut() {
                        a.add(r, j as usize - 1, -ci * w);
                    }
                } else {
                    b += ci * w * ext[grid.slot(j)];
                }
            }
        }
        rhs.push(b);
    }
    Ok(System {
        c,
        g,
        exterior,
        matrix,
        rhs,
        diag,
    })
}

fn full_solution(p: &ProblemInstance, sys: &System, interior: &[f64]) -> Result<GridFunction> {
    let mut u = sys.exterior.clone();
    for (r, v) in interior.iter().enumerate() {
        let s = p.grid.slot(r as isize + 1);
        u.values_mut()[s] = *v;
    }
    Ok(u)
}

/// `(sup_i |u_i - c_i I_h[u](x_i) - g_i|, scale)` over the interior.
fn discrete_residual(p: &ProblemInstance, sys: &System, u: &GridFunction) -> Result<(f64, f64)> {
    let iu = p.quad.apply(u)?;
    let center = libm::fabs(p.quad.stencil().center);
    let u_sup = sup_norm(u.values()).max(libm::fabs(p.grid.far_field));
    let mut res: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in p.grid.interior() {
        let i = i as usize;
        let ui = u.values()[p.grid.slot(i as isize)];
        res = res.max(libm::fabs(ui - sys.c[i] * iu[i] - sys.g[i]));
        scale = scale.max(libm::fabs(sys.g[i]) + sys.c[i] * center * u_sup);
    }
    Ok((res, 1.0 + scale))
}

fn jacobi_stencil(
    p: &ProblemInstance,
    sys: &System,
    opts: &SolveOptions,
) -> Result<(Vec<f64>, usize, f64)> {
    let grid = &p.grid;
    let stencil = p.quad.stencil();
    let m = grid.cells - 1;
    let mut x = vec![0.0; m];
    let mut next = vec![0.0; m];
    let diag_max = sys.diag.iter().copied().fold(0.0, f64::max);
    let b_sup = sup_norm(&sys.rhs);
    for iter in 1..=opts.jacobi_max_iters {
        let mut r_sup: f64 = 0.0;
        for r in 0..m {
            let i = r + 1;
            let mut off = 0.0;
            for (k, w) in stencil.offsets.iter().enumerate() {
                let k = k + 1;
                if i > k {
                    off += w * x[i - k - 1];
                }
                if i + k < grid.cells {
                    off += w * x[i + k - 1];
                }
            }
            let residual = sys.rhs[r] - (sys.diag[r] * x[r] - sys.c[i] * off);
            r_sup = r_sup.max(libm::fabs(residual));
            next[r] = x[r] + opts.jacobi_omega * residual / sys.diag[r];
        }
        let backward = r_sup / (2.0 * diag_max * sup_norm(&x) + b_sup).max(f64::MIN_POSITIVE);
        if backward <= 1e-15 {
            return Ok((x, iter, backward));
        }
        core::mem::swap(&mut x, &mut next);
    }
    Err(Error::NotConverged(format!(
        "Jacobi did not converge within {} iterations",
        opts.jacobi_max_iters
    )))
}

fn solve_system(
    p: &ProblemInstance,
    opts: &SolveOptions,
    check_monotone: bool,
) -> Result<(SolveReport, System)> {
    let m = p.grid.cells - 1;
    let direct = m <= opts.direct_limit;
    let sys = assemble(p, direct)?;
    let (interior, stats) = match &sys.matrix {
        Some(a) => {
            if check_monotone {
                a.check_m_matrix()?;
            }
            let (x, backward, _) = linalg::solve_checked(a, &sys.rhs, crate::cell::LINEAR_TOL)?;
            (
                x,
                SolveStats {
                    unknowns: m,
                    solver: SolverKind::Direct,
                    iterations: 1,
                    backward_error: backward,
                },
            )
        }
        None => {
            if check_monotone {
                p.quad.check_monotone()?;
                if let Some(r) = sys.c.iter().position(|c| !(*c > 0.0)) {
                    return Err(Error::NotMMatrix {
                        row: r,
                        reason: "nonpositive coefficient",
                    });
                }
            }
            let (x, iterations, backward) = jacobi_stencil(p, &sys, opts)?;
            (
                x,
                SolveStats {
                    unknowns: m,
                    solver: SolverKind::Jacobi,
                    iterations,
                    backward_error: backward,
                },
            )
        }
    };
    let u = full_solution(p, &sys, &interior)?;
    let (sup_residual, scale) = discrete_residual(p, &sys, &u)?;
    let tol = RESIDUAL_TOL.max(RESIDUAL_REL * scale);
    if !(sup_residual <= tol) {
        return Err(Error::NotConverged(format!(
            "solution residual {sup_residual:e} exceeds {tol:e}"
        )));
    }
    Ok((
        SolveReport {
            u,
            sup_residual,
            stats,
            wall_time: 0.0,
        },
        sys,
    ))
}

/// Solves the problem in whichever mode it was built with.
pub fn solve(p: &ProblemInstance, opts: &SolveOptions) -> Result<SolveReport> {
    solve_system(p, opts, true).map(|(r, _)| r)
}

/// `u_ε` for an oscillatory instance.
pub fn solve_eps_problem(p: &ProblemInstance) -> Result<SolveReport> {
    if !matches!(p.mode, Mode::Oscillatory { .. }) {
        return Err(Error::InvalidParameter(
            "solve_eps_problem needs an oscillatory instance".into(),
        ));
    }
    solve(p, &SolveOptions::default())
}

/// `ū` for an effective instance.
pub fn solve_effective(p: &ProblemInstance) -> Result<SolveReport> {
    let Mode::Effective(op) = &p.mode else {
        return Err(Error::InvalidParameter(
            "solve_effective needs an effective instance".into(),
        ));
    };
    if !op.theta_certificate.slope_check {
        return Err(Error::CertificateFailed {
            i: 0.0,
            i_prime: 1.0,
            margin: op.theta_certificate.margin,
        });
    }
    solve(p, &SolveOptions::default())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    /// `max_i (u1 - u2)` over the closed domain; `<= COMPARISON_TOL` on success.
    pub max_excess: f64,
    pub u1: SolveReport,
    pub u2: SolveReport,
}

/// Solves two instances with ordered data and checks `u1 <= u2`.
///
/// Ordering of `(g, phi)` is checked on the grid first. The monotonicity of the
/// assembled matrix is only checked after the ordering of the solutions, so a
/// broken scheme is reported as the comparison failure it causes.
pub fn comparison_trial(p1: &ProblemInstance, p2: &ProblemInstance) -> Result<ComparisonReport> {
    let same_grid = DomainGrid {
        far_field: p2.grid.far_field,
        ..p1.grid
    } == p2.grid;
    if !same_grid || p1.quad != p2.quad || p1.coeffs.c() != p2.coeffs.c() {
        return Err(Error::InvalidParameter(
            "comparison instances must differ only in (g, phi)".into(),
        ));
    }
    let same_mode = match (&p1.mode, &p2.mode) {
        (Mode::Oscillatory { epsilon: a }, Mode::Oscillatory { epsilon: b }) => a == b,
        (Mode::Effective(a), Mode::Effective(b)) => a.c_bar == b.c_bar,
        _ => false,
    };
    if !same_mode {
        return Err(Error::InvalidParameter(
            "comparison instances must share the mode".into(),
        ));
    }
    let (_, g1) = p1.coefficients()?;
    let (_, g2) = p2.coefficients()?;
    let (e1, e2) = (p1.exterior()?, p2.exterior()?);
    let data_ordered = g1.iter().zip(&g2).all(|(a, b)| a <= b)
        && e1.values().iter().zip(e2.values()).all(|(a, b)| a <= b)
        && p1.grid.far_field <= p2.grid.far_field;
    if !data_ordered {
        return Err(Error::InvalidParameter(
            "comparison data are not ordered".into(),
        ));
    }

    let opts = SolveOptions::default();
    let (u1, sys1) = solve_system(p1, &opts, false)?;
    let (u2, _) = solve_system(p2, &opts, false)?;
    let mut max_excess = f64::NEG_INFINITY;
    let mut worst = 0;
    for i in p1.grid.closure() {
        let s = p1.grid.slot(i);
        let excess = u1.u.values()[s] - u2.u.values()[s];
        if excess > max_excess {
            max_excess = excess;
            worst = i as usize;
        }
    }
    if max_excess > COMPARISON_TOL {
        return Err(Error::OrderingViolated {
            index: worst,
            excess: max_excess,
        });
    }
    match &sys1.matrix {
        Some(a) => a.check_m_matrix()?,
        None => p1.quad.check_monotone()?,
    }
    Ok(ComparisonReport { max_excess, u1, u2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use proptest::prelude::*;

    fn instance(
        c: &str,
        g: &str,
        phi: &str,
        far: f64,
        eps: f64,
        refinement: usize,
    ) -> ProblemInstance {
        let coeffs = CoefficientSet::parse(1.0, c, g, None, phi, far).unwrap();
        let h = eps / refinement as f64;
        let quad = LevyQuadrature::build(1.0, h, h, 1.0).unwrap();
        ProblemInstance::new(coeffs, 0.0, 1.0, quad, Mode::Oscillatory { epsilon: eps }).unwrap()
    }

    #[test]
    fn constants_are_reproduced() {
        let p = instance("3", "2", "2", 2.0, 0.25, 8);
        let r = solve_eps_problem(&p).unwrap();
        for (_, u) in r.closed_values() {
            assert!((u - 2.0).abs() < 1e-12, "{u}");
        }
        assert!(r.sup_residual <= RESIDUAL_TOL);
        assert_eq!(r.stats.solver, SolverKind::Direct);

        let q = ProblemInstance::new(
            p.coeffs.clone(),
            0.0,
            1.0,
            p.quad.clone(),
            Mode::Effective(EffectiveOperator::from_parts(2.0, 0.7, 0.5)),
        )
        .unwrap();
        for (_, u) in solve_effective(&q).unwrap().closed_values() {
            assert!((u - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn instance_invariants() {
        let coeffs = CoefficientSet::parse(1.0, "1", "0", None, "0", 0.0).unwrap();
        let quad = LevyQuadrature::build(1.0, 1.0 / 48.0, 1.0 / 48.0, 1.0).unwrap();
        let bad_eps = ProblemInstance::new(
            coeffs.clone(),
            0.0,
            1.0,
            quad.clone(),
            Mode::Oscillatory { epsilon: 0.3 },
        );
        assert!(bad_eps.is_err());
        let bad_ratio = ProblemInstance::new(
            coeffs.clone(),
            0.0,
            1.0,
            quad.clone(),
            Mode::Oscillatory {
                epsilon: 1.0 / 32.0,
            },
        );
        assert!(bad_ratio.is_err());
        assert!(ProblemInstance::new(
            coeffs,
            0.0,
            1.0,
            quad,
            Mode::Oscillatory {
                epsilon: 1.0 / 16.0
            }
        )
        .is_ok());
    }

    #[test]
    fn mode_is_enforced() {
        let p = instance("3", "2", "2", 2.0, 0.25, 8);
        assert!(solve_effective(&p).is_err());
        let q = ProblemInstance::new(
            p.coeffs.clone(),
            0.0,
            1.0,
            p.quad.clone(),
            Mode::Effective(EffectiveOperator::from_parts(0.0, 0.5, 1.0)),
        )
        .unwrap();
        assert!(solve_eps_problem(&q).is_err());
        assert!(matches!(
            solve_effective(&q),
            Err(Error::CertificateFailed { .. })
        ));
    }

    #[test]
    fn exterior_is_data() {
        let p = instance("2+cos(2*pi*y)", "sin(2*pi*y)", "x*x", 4.0, 0.25, 8);
        let r = solve_eps_problem(&p).unwrap();
        let phi = parse("x*x").unwrap();
        let d = p.grid();
        for i in -(d.halo as isize)..=0 {
            assert_eq!(r.u.values()[d.slot(i)], phi.eval(d.x(i)).unwrap());
        }
        let last = d.cells as isize;
        assert_eq!(r.u.values()[d.slot(last)], phi.eval(d.x(last)).unwrap());
    }

    #[test]
    fn jacobi_matches_direct() {
        let p = instance("2+cos(2*pi*y)", "sin(2*pi*y)", "0.5", 0.5, 0.25, 4);
        let direct = solve(&p, &SolveOptions::default()).unwrap();
        let opts = SolveOptions {
            direct_limit: 2,
            ..SolveOptions::default()
        };
        let iterative = solve(&p, &opts).unwrap();
        assert_eq!(iterative.stats.solver, SolverKind::Jacobi);
        for (a, b) in direct.u.values().iter().zip(iterative.u.values()) {
            assert!((a - b).abs() < 1e-11);
        }
        let starved = SolveOptions {
            direct_limit: 2,
            jacobi_max_iters: 3,
            ..SolveOptions::default()
        };
        assert!(matches!(solve(&p, &starved), Err(Error::NotConverged(_))));
    }

    #[test]
    fn comparison_shift_and_halo_step() {
        let p1 = instance("2+cos(2*pi*y)", "sin(2*pi*y)", "x", 0.0, 0.25, 8);
        let shifted = p1
            .with_data(
                CoefficientSet::parse(1.0, "2+cos(2*pi*y)", "sin(2*pi*y)+1", None, "x+1", 1.0)
                    .unwrap(),
            )
            .unwrap();
        let rep = comparison_trial(&p1, &shifted).unwrap();
        for (a, b) in rep.u1.u.values().iter().zip(rep.u2.u.values()) {
            assert!((b - a - 1.0).abs() < 1e-12);
        }

        // a ramp on the right exterior only
        let p2 = p1
            .with_data(
                p1.coeffs()
                    .with_phi(parse("x+(x-1+abs(x-1))/2").unwrap(), 0.5)
                    .unwrap(),
            )
            .unwrap();
        let rep = comparison_trial(&p1, &p2).unwrap();
        let diff: Vec<f64> = rep
            .u1
            .closed_values()
            .iter()
            .zip(rep.u2.closed_values())
            .map(|(a, b)| b.1 - a.1)
            .collect();
        assert!(diff.iter().all(|d| *d >= -COMPARISON_TOL));
        let m = diff.len() - 1;
        assert!(diff[1..m].iter().all(|d| *d > 0.0));
        assert!(diff[m - 1] > diff[1]);

        assert!(matches!(
            comparison_trial(&p2, &p1),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn tampered_scheme_violates_ordering() {
        let p1 = instance("2+cos(2*pi*y)", "0", "0", 0.0, 0.25, 8);
        let bump = p1
            .with_data(p1.coeffs().with_g(parse("1+cos(2*pi*y)").unwrap()).unwrap())
            .unwrap();
        let bad = p1.quad().clone().tampered(1, -50.0);
        let t1 = p1.with_quadrature(bad.clone()).unwrap();
        let t2 = bump.with_quadrature(bad).unwrap();
        assert!(matches!(
            comparison_trial(&t1, &t2),
            Err(Error::OrderingViolated { .. }) | Err(Error::NotMMatrix { .. })
        ));
        assert!(matches!(
            solve(&t1, &SolveOptions::default()),
            Err(Error::NotMMatrix { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn translation_invariance(a in -1.0f64..1.0, b in -1.0f64..1.0, kappa in -3.0f64..3.0) {
            let g = format!("{a}*sin(2*pi*y)+{b}*cos(4*pi*y)");
            let g_shift = format!("{g}+{kappa}");
            let p = instance("2+cos(2*pi*y)", &g, "x", 0.0, 0.25, 8);
            let coeffs = CoefficientSet::parse(1.0, "2+cos(2*pi*y)", &g_shift, None, &format!("x+{kappa}"), kappa).unwrap();
            let q = p.with_data(coeffs).unwrap();
            let u = solve(&p, &SolveOptions::default()).unwrap();
            let v = solve(&q, &SolveOptions::default()).unwrap();
            for (x, y) in u.u.values().iter().zip(v.u.values()) {
                prop_assert!((y - x - kappa).abs() < 1e-11);
            }
        }

        #[test]
        fn maximum_principle(a in -2.0f64..2.0, b in -2.0f64..2.0, f in -2.0f64..2.0) {
            let g = format!("{a}*sin(2*pi*y)+{b}");
            let p = instance("1.5+sin(2*pi*y)", &g, &format!("{f}*cos(3*x)"), f * 0.5, 0.25, 8);
            let r = solve(&p, &SolveOptions::default()).unwrap();
            let g_sup = a.abs() + b.abs();
            let phi_sup = f.abs();
            let bound = g_sup.max(phi_sup);
            prop_assert!(sup_norm(r.u.values()) <= bound + 1e-12);
        }
    }
}
