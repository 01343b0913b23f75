//! The ε-sweep comparing `u_ε` with `ū`, and the corrector diagnostic.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::cell::solve_cell_direct;
use crate::coeffs::CoefficientSet;
use crate::effective::{build_effective, CellMethod, EffectiveOperator};
use crate::expr::{self, Expr};
use crate::grid::{DomainGrid, GridFunction};
use crate::pide::{self, comparison_trial, ComparisonReport, Mode, ProblemInstance, SolveOptions};
use crate::quadrature::LevyQuadrature;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// Strictly decreasing reciprocals of integers.
    pub epsilons: Vec<f64>,
    /// `h = ε / refinement`.
    pub refinement: usize,
    /// Interior margin as a fraction of `|Ω|`.
    pub margin: f64,
    pub x_lo: f64,
    pub x_hi: f64,
    /// Truncation radius `R` of the quadrature.
    pub truncation: f64,
    /// `zeta = h / zeta_div`.
    pub zeta_div: f64,
    /// Torus resolution for the effective operator.
    pub n_torus: usize,
    pub i_samples: Vec<f64>,
    pub cell_method: CellMethod,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            epsilons: [4.0, 8.0, 16.0, 32.0, 64.0]
                .iter()
                .map(|k| 1.0 / k)
                .collect(),
            refinement: 16,
            margin: 0.1,
            x_lo: 0.0,
            x_hi: 1.0,
            truncation: 1.0,
            zeta_div: 1.0,
            n_torus: 512,
            i_samples: alloc::vec![-2.0, -1.0, 0.0, 1.0, 2.0],
            cell_method: CellMethod::Direct,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.refinement < 8 {
            return Err(Error::InvalidParameter("refinement must be >= 8".into()));
        }
        if self.epsilons.is_empty() {
            return Err(Error::InvalidParameter("no epsilons given".into()));
        }
        if self.epsilons.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::InvalidParameter(
                "epsilons must be strictly decreasing".into(),
            ));
        }
        for &e in &self.epsilons {
            let k = libm::round(1.0 / e);
            if !(e > 0.0 && e <= 1.0) || libm::fabs(1.0 / e - k) > 1e-9 * k {
                return Err(Error::InvalidParameter(format!(
                    "epsilon {e} is not the reciprocal of an integer"
                )));
            }
        }
        if !(self.margin >= 0.0 && self.margin < 0.5) {
            return Err(Error::InvalidParameter(
                "margin must lie in [0, 0.5)".into(),
            ));
        }
        if !(self.zeta_div >= 1.0) {
            return Err(Error::InvalidParameter("zeta divisor must be >= 1".into()));
        }
        Ok(())
    }

    /// Domain quadrature for a given `ε`.
    pub fn quadrature(&self, alpha: f64, epsilon: f64) -> Result<LevyQuadrature> {
        let h = epsilon / self.refinement as f64;
        LevyQuadrature::build(alpha, h, h / self.zeta_div, self.truncation)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub epsilon: f64,
    pub h: f64,
    pub err_sup: f64,
    pub err_interior: f64,
    /// Sup-norm residual of `u_ε`.
    pub residual: f64,
    pub wall_time: f64,
    /// Set when the row could not be computed; the numeric fields are NaN.
    pub failure: Option<String>,
}

impl SweepRow {
    fn failed(epsilon: f64, h: f64, err: &Error) -> Self {
        Self {
            epsilon,
            h,
            err_sup: f64::NAN,
            err_interior: f64::NAN,
            residual: f64::NAN,
            wall_time: 0.0,
            failure: Some(err.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableMetadata {
    pub c: String,
    pub g: String,
    pub a: Option<String>,
    pub phi: String,
    pub far_field: f64,
    pub alpha: f64,
    pub refinement: usize,
    pub margin: f64,
    pub c_bar: f64,
    pub g_bar: f64,
    pub theta: f64,
    pub cert_margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    /// Sorted by `ε` descending.
    pub rows: Vec<SweepRow>,
    pub metadata: TableMetadata,
}

/// A sweep with its effective operator built; rows can be computed in any
/// order or in parallel.
#[derive(Debug, Clone)]
pub struct SweepPlan {
    coeffs: CoefficientSet,
    config: SweepConfig,
    effective: EffectiveOperator,
}

impl SweepPlan {
    pub fn new(coeffs: &CoefficientSet, config: &SweepConfig) -> Result<Self> {
        config.validate()?;
        let quad = LevyQuadrature::for_torus(
            coeffs.alpha(),
            config.n_torus,
            config.zeta_div,
            config.truncation,
        )?;
        let effective = build_effective(
            coeffs,
            &quad,
            &config.i_samples,
            config.n_torus,
            &config.cell_method,
        )?;
        if !effective.theta_certificate.slope_check {
            return Err(Error::CertificateFailed {
                i: 0.0,
                i_prime: 1.0,
                margin: effective.theta_certificate.margin,
            });
        }
        Ok(Self {
            coeffs: coeffs.clone(),
            config: config.clone(),
            effective,
        })
    }

    pub fn effective(&self) -> &EffectiveOperator {
        &self.effective
    }

    pub fn config(&self) -> &SweepConfig {
        &self.config
    }

    /// Oscillatory and effective instances on the grid matched to `ε`.
    pub fn instances(&self, epsilon: f64) -> Result<(ProblemInstance, ProblemInstance)> {
        let quad = self.config.quadrature(self.coeffs.alpha(), epsilon)?;
        let (lo, hi) = (self.config.x_lo, self.config.x_hi);
        let osc = ProblemInstance::new(
            self.coeffs.clone(),
            lo,
            hi,
            quad.clone(),
            Mode::Oscillatory { epsilon },
        )?;
        let eff = ProblemInstance::new(
            self.coeffs.clone(),
            lo,
            hi,
            quad,
            Mode::Effective(self.effective.clone()),
        )?;
        Ok((osc, eff))
    }

    fn try_row(&self, epsilon: f64) -> Result<SweepRow> {
        let (osc, eff) = self.instances(epsilon)?;
        let opts = SolveOptions::default();
        let u_eps = pide::solve(&osc, &opts)?;
        let u_bar = pide::solve(&eff, &opts)?;
        let grid = osc.grid();
        let width = grid.x_hi - grid.x_lo;
        let (lo, hi) = (
            grid.x_lo + self.config.margin * width,
            grid.x_hi - self.config.margin * width,
        );
        let slack = 1e-9 * grid.h;
        let mut err_sup: f64 = 0.0;
        let mut err_interior: f64 = 0.0;
        for i in grid.closure() {
            let s = grid.slot(i);
            let e = libm::fabs(u_eps.u.values()[s] - u_bar.u.values()[s]);
            err_sup = err_sup.max(e);
            let x = grid.x(i);
            if x >= lo - slack && x <= hi + slack {
                err_interior = err_interior.max(e);
            }
        }
        Ok(SweepRow {
            epsilon,
            h: grid.h,
            err_sup,
            err_interior,
            residual: u_eps.sup_residual,
            wall_time: 0.0,
            failure: None,
        })
    }

    /// One row; solver failures are recorded in the row.
    pub fn row(&self, epsilon: f64) -> SweepRow {
        self.try_row(epsilon).unwrap_or_else(|e| {
            SweepRow::failed(epsilon, epsilon / self.config.refinement as f64, &e)
        })
    }

    /// Assembles the table, sorting rows by `ε` descending.
    pub fn finish(&self, mut rows: Vec<SweepRow>) -> ConvergenceTable {
        rows.sort_by(|a, b| b.epsilon.total_cmp(&a.epsilon));
        let cert = self.effective.theta_certificate;
        ConvergenceTable {
            rows,
            metadata: TableMetadata {
                c: self.coeffs.c().to_string(),
                g: self.coeffs.g().to_string(),
                a: self.coeffs.a().map(ToString::to_string),
                phi: self.coeffs.phi().to_string(),
                far_field: self.coeffs.far_field(),
                alpha: self.coeffs.alpha(),
                refinement: self.config.refinement,
                margin: self.config.margin,
                c_bar: self.effective.c_bar,
                g_bar: self.effective.g_bar,
                theta: cert.theta,
                cert_margin: cert.margin,
            },
        }
    }

    /// Comparison trials at the coarsest `ε` between the problem data and
    /// `g + ψ_s` for eight localized periodic bumps `ψ_s >= 0`, optionally with
    /// a corrupted quadrature weight. The first ordering violation is returned;
    /// otherwise the trial with the largest `u1 - u2`.
    pub fn comparison_gate(&self, tamper: bool) -> Result<ComparisonReport> {
        let (osc, _) = self.instances(self.config.epsilons[0])?;
        let (lower, quad) = if tamper {
            let quad = osc.quad();
            let bad = quad.clone().tampered(1, -quad.stencil().offsets[0]);
            (osc.with_quadrature(bad.clone())?, Some(bad))
        } else {
            (osc.clone(), None)
        };
        let mut worst: Option<Result<ComparisonReport>> = None;
        for k in 0..8 {
            let bumped = format!(
                "({})+exp(20*(cos(2*pi*(y-{}))-1))",
                self.coeffs.g(),
                k as f64 / 8.0
            );
            let mut upper = osc.with_data(self.coeffs.with_g(expr::parse(&bumped)?)?)?;
            if let Some(q) = &quad {
                upper = upper.with_quadrature(q.clone())?;
            }
            match comparison_trial(&lower, &upper) {
                Err(e @ Error::OrderingViolated { .. }) => return Err(e),
                Ok(rep) => {
                    let better = match &worst {
                        Some(Ok(w)) => rep.max_excess > w.max_excess,
                        Some(Err(_)) => false,
                        None => true,
                    };
                    if better {
                        worst = Some(Ok(rep));
                    }
                }
                Err(e) => {
                    if !matches!(worst, Some(Err(_))) {
                        worst = Some(Err(e));
                    }
                }
            }
        }
        worst.expect("eight trials ran")
    }
}

/// Sequential sweep; `wall_time` is left at 0.
pub fn run_sweep(coeffs: &CoefficientSet, config: &SweepConfig) -> Result<ConvergenceTable> {
    let plan = SweepPlan::new(coeffs, config)?;
    let rows = config.epsilons.iter().map(|&e| plan.row(e)).collect();
    Ok(plan.finish(rows))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectorReport {
    pub epsilon: f64,
    /// `sup |R_ε[φ_ε] - R̄[φ]|` over the interior.
    pub gap: f64,
    /// Largest residual of the two cell solves.
    pub rho: f64,
    /// `sup |v|` over the probes (with the probe's own `I`).
    pub corrector_sup: f64,
    pub c_bar: f64,
    pub g_bar: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Periodic extension of a torus function sampled at `y_0 + i / n`, with
/// `y_0 * n` an integer.
fn periodic_on_domain(
    grid: &DomainGrid,
    v: &GridFunction,
    start: isize,
    scale: f64,
) -> Result<GridFunction> {
    let n = v.values().len() as isize;
    let values = (0..grid.len() as isize)
        .map(|s| scale * v.values()[(start + s - grid.halo as isize).rem_euclid(n) as usize])
        .collect();
    GridFunction::domain(
        DomainGrid {
            far_field: 0.0,
            ..*grid
        },
        values,
    )
}

/// Residual of the perturbed test function `φ_ε = φ + ε^α v(x/ε)` in the
/// oscillatory scheme against that of `φ` in the effective one.
///
/// The corrector is `v = v_g + I w` with `I = I_h[φ](x̂)` frozen at each probe
/// `x̂`; `v_g` and `w` are exact discrete cell correctors on the torus whose
/// spacing is `h / ε`, so the torus and domain operators agree on them.
pub fn corrector_diagnostic(
    coeffs: &CoefficientSet,
    config: &SweepConfig,
    epsilon: f64,
    testfn: &Expr,
    threshold: f64,
) -> Result<CorrectorReport> {
    config.validate()?;
    let n = config.refinement;
    let alpha = coeffs.alpha();
    let torus = LevyQuadrature::for_torus(alpha, n, config.zeta_div, config.truncation / epsilon)?;
    let source = solve_cell_direct(coeffs, &torus, 0.0, n)?;
    let unit = solve_cell_direct(&coeffs.with_g(expr::parse("0")?)?, &torus, 1.0, n)?;
    let (g_bar, c_bar) = (source.d, unit.d);

    let quad = config.quadrature(alpha, epsilon)?;
    let grid = DomainGrid::new(
        config.x_lo,
        config.x_hi,
        quad.h(),
        quad.reach(),
        coeffs.far_field(),
    )?;
    let phi = GridFunction::domain_from_expr(grid, testfn)?;
    let start = libm::round(grid.x_lo / grid.h) as isize;
    let scale = libm::pow(epsilon, alpha);
    let vg = periodic_on_domain(&grid, &source.v, start, scale)?;
    let w = periodic_on_domain(&grid, &unit.v, start, scale)?;
    let (i_phi, i_vg, i_w) = (quad.apply(&phi)?, quad.apply(&vg)?, quad.apply(&w)?);

    let mut gap: f64 = 0.0;
    let mut corrector_sup: f64 = 0.0;
    for i in grid.interior() {
        let s = grid.slot(i);
        let k = i as usize;
        let y = (start + i).rem_euclid(n as isize) as f64 / n as f64;
        let (c, g) = (coeffs.c().eval(y)?, coeffs.g().eval(y)?);
        let big_i = i_phi[k];
        let v_here = vg.values()[s] + big_i * w.values()[s];
        let phi_eps = phi.values()[s] + v_here;
        let r_eps = phi_eps - c * (i_phi[k] + i_vg[k] + big_i * i_w[k]) - g;
        let r_bar = phi.values()[s] - g_bar - c_bar * big_i;
        gap = gap.max(libm::fabs(r_eps - r_bar));
        corrector_sup = corrector_sup.max(libm::fabs(v_here) / scale);
    }
    Ok(CorrectorReport {
        epsilon,
        gap,
        rho: source.rho.max(unit.rho),
        corrector_sup,
        c_bar,
        g_bar,
        threshold,
        pass: gap <= threshold,
    })
}

/// One evaluation of the near/far split on `u = cos(2πky)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRow {
    pub k: u32,
    pub nu: f64,
    pub point: usize,
    /// `u''` at the point.
    pub x: f64,
    /// Smallest `δ` with `|u(y+z) + u(y-z) - 2u(y) - X z²| <= 2δ z²` on `0 < z <= ν`.
    pub delta: f64,
    pub i1_plus: f64,
    pub i1_minus: f64,
    pub i2: f64,
    pub i_h: f64,
    /// `|I1+ - I1- - 2δ M(ν)|`.
    pub identity_error: f64,
    /// `I_h - (I1- + I2)`; nonnegative up to the tolerance when the sandwich holds.
    pub lower_slack: f64,
    /// `(I1+ + I2) - I_h`.
    pub upper_slack: f64,
    pub pass: bool,
}

/// Checks the split identities and the sandwich `I1- + I2 <= I_h <= I1+ + I2`
/// on cosine modes at a few torus points and split radii.
pub fn split_check(
    quad: &LevyQuadrature,
    n: usize,
    modes: &[u32],
    nus: &[f64],
    tol: f64,
) -> Result<Vec<SplitRow>> {
    use core::f64::consts::PI;
    let points = [0, n / 8, n / 3, n / 2 + 1];
    let mut rows = Vec::new();
    for &k in modes {
        let w = 2.0 * PI * k as f64;
        let values = (0..n).map(|j| libm::cos(w * j as f64 / n as f64)).collect();
        let u = GridFunction::torus(values)?;
        let full = quad.apply(&u)?;
        for &nu in nus {
            let moment = crate::quadrature::near_moment(quad.alpha(), nu)?;
            for &point in &points {
                let y = point as f64 / n as f64;
                let cy = libm::cos(w * y);
                let x = -w * w * cy;
                // f(z)/z² = 2 cos(wy) (cos(wz) - 1) / z²; sampled on a fine grid
                let samples = 4096;
                let delta = (1..=samples)
                    .map(|m| {
                        let z = nu * m as f64 / samples as f64;
                        let ratio = 2.0 * cy * (libm::cos(w * z) - 1.0) / (z * z);
                        libm::fabs(ratio - x) / 2.0
                    })
                    .fold(0.0, f64::max);
                let params = crate::quadrature::SplitParams {
                    nu,
                    delta,
                    x,
                    p: 0.0,
                };
                let v = quad.eval_split(&u, point, &params)?;
                let identity_error = libm::fabs(v.i1_plus - v.i1_minus - 2.0 * delta * moment);
                let lower_slack = full[point] - (v.i1_minus + v.i2);
                let upper_slack = (v.i1_plus + v.i2) - full[point];
                rows.push(SplitRow {
                    k,
                    nu,
                    point,
                    x,
                    delta,
                    i1_plus: v.i1_plus,
                    i1_minus: v.i1_minus,
                    i2: v.i2,
                    i_h: full[point],
                    identity_error,
                    lower_slack,
                    upper_slack,
                    pass: identity_error <= tol && lower_slack >= -tol && upper_slack >= -tol,
                });
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> SweepConfig {
        SweepConfig {
            epsilons: alloc::vec![0.25, 0.125],
            refinement: 8,
            n_torus: 64,
            i_samples: alloc::vec![-1.0, 0.0, 1.0],
            ..SweepConfig::default()
        }
    }

    #[test]
    fn split_sandwich_on_cosine_modes() {
        let n = 512;
        let quad = LevyQuadrature::for_torus(1.0, n, 1.0, 1.0).unwrap();
        let rows = split_check(&quad, n, &[1, 2, 4], &[0.1, 0.25, 0.5], 1e-8).unwrap();
        assert_eq!(rows.len(), 36);
        for r in &rows {
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn config_validation() {
        assert!(SweepConfig::default().validate().is_ok());
        let mut c = small_config();
        c.refinement = 4;
        assert!(c.validate().is_err());
        let mut c = small_config();
        c.epsilons = alloc::vec![0.125, 0.25];
        assert!(c.validate().is_err());
        let mut c = small_config();
        c.epsilons = alloc::vec![0.3];
        assert!(c.validate().is_err());
    }

    #[test]
    fn constant_coefficients_sweep() {
        let coeffs = CoefficientSet::parse(1.0, "3", "1", None, "x*(1-x)", 0.0).unwrap();
        let table = run_sweep(&coeffs, &small_config()).unwrap();
        assert_eq!(table.rows.len(), 2);
        for row in &table.rows {
            assert!(row.failure.is_none());
            assert!(row.err_sup <= 1e-9, "{}", row.err_sup);
            assert!(row.err_interior <= row.err_sup);
        }
        assert!((table.metadata.c_bar - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rows_sorted_descending() {
        let coeffs =
            CoefficientSet::parse(1.0, "2+cos(2*pi*y)", "sin(2*pi*y)", None, "0", 0.0).unwrap();
        let plan = SweepPlan::new(&coeffs, &small_config()).unwrap();
        let rows = alloc::vec![plan.row(0.125), plan.row(0.25)];
        let table = plan.finish(rows);
        assert_eq!(table.rows[0].epsilon, 0.25);
        assert!(table
            .rows
            .iter()
            .all(|r| r.err_sup >= 0.0 && r.err_interior <= r.err_sup));
    }

    #[test]
    fn failed_rows_do_not_abort() {
        let coeffs =
            CoefficientSet::parse(1.0, "2+cos(2*pi*y)", "sin(2*pi*y)", None, "0", 0.0).unwrap();
        let mut cfg = small_config();
        cfg.x_hi = 1.0 + 1.0 / 128.0;
        let plan = SweepPlan::new(&coeffs, &cfg).unwrap();
        let row = plan.row(0.25);
        assert!(row.failure.is_some());
        assert!(row.err_sup.is_nan());
    }

    #[test]
    fn comparison_gate_detects_tampering() {
        let coeffs =
            CoefficientSet::parse(1.0, "2+cos(2*pi*y)", "sin(2*pi*y)", None, "0", 0.0).unwrap();
        let plan = SweepPlan::new(&coeffs, &small_config()).unwrap();
        assert!(plan.comparison_gate(false).is_ok());
        let r = plan.comparison_gate(true);
        assert!(matches!(r, Err(Error::OrderingViolated { .. })), "{r:?}");
    }

    #[test]
    fn corrector_constant_coefficients() {
        let coeffs = CoefficientSet::parse(1.0, "2", "0.5", None, "0", 0.0).unwrap();
        let bump = expr::parse("exp(-40*(x-0.5)*(x-0.5))").unwrap();
        for eps in [0.25, 0.125] {
            let r = corrector_diagnostic(&coeffs, &small_config(), eps, &bump, 1e-9).unwrap();
            assert!(r.gap <= 1e-9, "{}", r.gap);
            assert!(r.pass);
        }
    }

    #[test]
    fn corrector_gap_is_linear_and_shrinks() {
        let coeffs = CoefficientSet::parse(1.0, "2+cos(2*pi*y)", "0", None, "0", 0.0).unwrap();
        let cfg = small_config();
        let bump = expr::parse("exp(-40*(x-0.5)*(x-0.5))").unwrap();
        let double = expr::parse("2*exp(-40*(x-0.5)*(x-0.5))").unwrap();
        let gaps: Vec<f64> = [0.125, 0.0625, 0.03125]
            .iter()
            .map(|&e| {
                corrector_diagnostic(&coeffs, &cfg, e, &bump, 1.0)
                    .unwrap()
                    .gap
            })
            .collect();
        assert!(gaps[1] < gaps[0] && gaps[2] < gaps[1], "{gaps:?}");
        let g1 = corrector_diagnostic(&coeffs, &cfg, 0.125, &bump, 1.0)
            .unwrap()
            .gap;
        let g2 = corrector_diagnostic(&coeffs, &cfg, 0.125, &double, 1.0)
            .unwrap()
            .gap;
        assert!((g2 - 2.0 * g1).abs() <= 1e-9 * g2);
    }
}
