//! The effective operator `Ī(x, I) = -d(x, I)`.
//!
//! The cell problem is linear in `(g, I)`, so `d` is affine in `I` and the
//! operator is stored in the normal form `Ī(I) = -(ḡ + c̄ I)`. Problem data do
//! not depend on the slow variable, so `x` is accepted but unused.

use alloc::format;
use alloc::vec::Vec;

use crate::cell::{estimate_d, solve_cell_direct, DiscountSchedule, ErgodicOptions};
use crate::coeffs::CoefficientSet;
use crate::quadrature::LevyQuadrature;
use crate::{Error, Result};

/// Default relative tolerance on the affine fit, scaled by `max |d|`.
pub const AFFINE_TOL: f64 = 1e-6;
/// Default slack on `c̄ >= c0` for a fitted slope.
pub const SLOPE_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub enum CellMethod {
    Direct,
    Discounted {
        schedule: DiscountSchedule,
        opts: ErgodicOptions,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    /// The subellipticity constant claimed, `c0`.
    pub theta: f64,
    /// Whether `c̄ >= theta` held within tolerance.
    pub slope_check: bool,
    /// `c̄ - theta`.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveOperator {
    pub g_bar: f64,
    pub c_bar: f64,
    pub fit_residual: f64,
    /// `(I, d(I))` pairs the fit was built from.
    pub samples: Vec<(f64, f64)>,
    pub theta_certificate: Certificate,
}

impl EffectiveOperator {
    /// An operator with given coefficients and no samples; `fit_residual` is 0.
    pub fn from_parts(g_bar: f64, c_bar: f64, theta: f64) -> Self {
        Self {
            g_bar,
            c_bar,
            fit_residual: 0.0,
            samples: Vec::new(),
            theta_certificate: certificate(c_bar, theta, 0.0),
        }
    }

    /// `Ī(x, I) = -(ḡ + c̄ I)`.
    pub fn eval(&self, _x: f64, i_value: f64) -> f64 {
        -(self.g_bar + self.c_bar * i_value)
    }

    /// Flat key/value view: `g_bar, c_bar, fit_residual, theta, margin`.
    pub fn report(&self) -> [(&'static str, f64); 5] {
        [
            ("g_bar", self.g_bar),
            ("c_bar", self.c_bar),
            ("fit_residual", self.fit_residual),
            ("theta", self.theta_certificate.theta),
            ("margin", self.theta_certificate.margin),
        ]
    }
}

fn certificate(c_bar: f64, theta: f64, tol: f64) -> Certificate {
    Certificate {
        theta,
        slope_check: c_bar >= theta - tol,
        margin: c_bar - theta,
    }
}

/// Least-squares line through `(I, d)`; returns `(intercept, slope, max deviation)`.
fn fit_affine(samples: &[(f64, f64)]) -> (f64, f64, f64) {
    let k = samples.len() as f64;
    let mean_i = samples.iter().map(|s| s.0).sum::<f64>() / k;
    let mean_d = samples.iter().map(|s| s.1).sum::<f64>() / k;
    let sxx: f64 = samples
        .iter()
        .map(|s| (s.0 - mean_i) * (s.0 - mean_i))
        .sum();
    let sxy: f64 = samples
        .iter()
        .map(|s| (s.0 - mean_i) * (s.1 - mean_d))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_d - slope * mean_i;
    let dev = samples
        .iter()
        .map(|s| libm::fabs(s.1 - (intercept + slope * s.0)))
        .fold(0.0, f64::max);
    (intercept, slope, dev)
}

/// Samples `d(I)` with the chosen cell method, fits the affine normal form and
/// fills the subellipticity certificate with `theta = c0`.
pub fn build_effective(
    coeffs: &CoefficientSet,
    quad: &LevyQuadrature,
    i_samples: &[f64],
    n: usize,
    method: &CellMethod,
) -> Result<EffectiveOperator> {
    let mut distinct: Vec<f64> = i_samples.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 || i_samples.iter().any(|i| !i.is_finite()) {
        return Err(Error::InvalidParameter(
            "need at least 3 distinct finite I samples".into(),
        ));
    }
    let samples = i_samples
        .iter()
        .map(|&i| {
            let sol = match method {
                CellMethod::Direct => solve_cell_direct(coeffs, quad, i, n)?,
                CellMethod::Discounted { schedule, opts } => {
                    estimate_d(coeffs, quad, schedule, i, n, opts)?
                }
            };
            Ok((i, sol.d))
        })
        .collect::<Result<Vec<_>>>()?;
    let (g_bar, c_bar, fit_residual) = fit_affine(&samples);
    let scale = samples.iter().map(|s| libm::fabs(s.1)).fold(0.0, f64::max);
    let tol = AFFINE_TOL * scale + 1e-14;
    if !(fit_residual <= tol) {
        return Err(Error::NotAffine {
            residual: fit_residual,
            tol,
        });
    }
    Ok(EffectiveOperator {
        g_bar,
        c_bar,
        fit_residual,
        samples,
        theta_certificate: certificate(c_bar, coeffs.c0(), SLOPE_TOL),
    })
}

/// `Ī(x, I) = -(ḡ + c̄ I)`.
pub fn eval_effective(op: &EffectiveOperator, x: f64, i_value: f64) -> f64 {
    op.eval(x, i_value)
}

/// `c̄ = 1 / mean(1/c)` and `ḡ = c̄ mean(g/c)` by the periodic trapezoidal rule
/// with `m` points. This is the solvability condition of the cell problem and
/// is independent of any discretization of the nonlocal operator.
pub fn harmonic_mean_oracle(coeffs: &CoefficientSet, m: usize) -> Result<(f64, f64)> {
    if m < 256 {
        return Err(Error::InvalidParameter(
            "oracle resolution must be at least 256".into(),
        ));
    }
    let mut inv_c = 0.0;
    let mut g_over_c = 0.0;
    for j in 0..m {
        let y = j as f64 / m as f64;
        let c = coeffs.c().eval(y)?;
        if !(c > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "c({y}) = {c} is not positive"
            )));
        }
        inv_c += 1.0 / c;
        g_over_c += coeffs.g().eval(y)? / c;
    }
    let c_bar = m as f64 / inv_c;
    Ok((c_bar, c_bar * g_over_c / m as f64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubellipticityReport {
    pub theta: f64,
    /// Smallest `Ī(I) - θ I' - Ī(I + I')` over the pairs.
    pub worst_margin: f64,
    pub margins: Vec<(f64, f64, f64)>,
}

/// Verifies `Ī(I + I') <= Ī(I) - c0 I' + tol` for every `(I, I')`, `I' > 0`.
pub fn check_subellipticity(
    op: &EffectiveOperator,
    c0: f64,
    pairs: &[(f64, f64)],
    tol: f64,
) -> Result<SubellipticityReport> {
    if pairs.is_empty() {
        return Err(Error::InvalidParameter("no (I, I') pairs given".into()));
    }
    let mut margins = Vec::with_capacity(pairs.len());
    let mut worst = f64::INFINITY;
    for &(i, ip) in pairs {
        if !(ip > 0.0) {
            return Err(Error::InvalidParameter("I' must be positive".into()));
        }
        let margin = op.eval(0.0, i) - c0 * ip - op.eval(0.0, i + ip);
        if !(margin >= -tol) {
            return Err(Error::CertificateFailed {
                i,
                i_prime: ip,
                margin,
            });
        }
        worst = worst.min(margin);
        margins.push((i, ip, margin));
    }
    Ok(SubellipticityReport {
        theta: c0,
        worst_margin: worst,
        margins,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(c: &str, g: &str) -> CoefficientSet {
        CoefficientSet::parse(1.0, c, g, None, "0", 0.0).unwrap()
    }

    #[test]
    fn constant_coefficients() {
        let coeffs = set("4", "1");
        let q = LevyQuadrature::for_torus(1.0, 64, 1.0, 1.0).unwrap();
        let op = build_effective(&coeffs, &q, &[-1.0, 0.0, 1.0], 64, &CellMethod::Direct).unwrap();
        assert!((op.c_bar - 4.0).abs() < 1e-12);
        assert!((op.g_bar - 1.0).abs() < 1e-12);
        assert!(op.fit_residual <= 1e-10);
        assert!(op.theta_certificate.slope_check);
        assert!(op.theta_certificate.margin.abs() < 1e-12);
    }

    #[test]
    fn eval_examples() {
        let op = EffectiveOperator::from_parts(1.0, 4.0, 4.0);
        assert_eq!(eval_effective(&op, 0.3, 0.0), -1.0);
        let op = EffectiveOperator::from_parts(0.0, 3f64.sqrt(), 1.0);
        assert!((op.eval(0.0, 2.0) + 2.0 * 3f64.sqrt()).abs() < 1e-15);
        for (i, ip) in [(0.0, 1.0), (-2.0, 0.3), (5.0, 7.0)] {
            assert!((op.eval(0.0, i + ip) - op.eval(0.0, i) + op.c_bar * ip).abs() < 1e-12);
        }
    }

    #[test]
    fn needs_three_distinct_samples() {
        let coeffs = set("4", "1");
        let q = LevyQuadrature::for_torus(1.0, 16, 1.0, 1.0).unwrap();
        assert!(build_effective(&coeffs, &q, &[0.0, 0.0, 1.0], 16, &CellMethod::Direct).is_err());
    }

    #[test]
    fn oracle_examples() {
        let (c_bar, _) = harmonic_mean_oracle(&set("5", "0"), 256).unwrap();
        assert!((c_bar - 5.0).abs() < 1e-13);
        let (c_bar, g_bar) =
            harmonic_mean_oracle(&set("2+cos(2*pi*y)", "sin(2*pi*y)"), 100_000).unwrap();
        assert!((c_bar - 3f64.sqrt()).abs() < 1e-10);
        assert!(g_bar.abs() < 1e-10);
        assert!(harmonic_mean_oracle(&set("5", "0"), 100).is_err());
    }

    #[test]
    fn subellipticity_certificate() {
        let op = EffectiveOperator::from_parts(1.0, 2.0, 2.0);
        let r = check_subellipticity(&op, 2.0, &[(0.0, 1.0), (3.0, 0.5)], 1e-12).unwrap();
        assert!(r.worst_margin.abs() < 1e-12);

        let op = EffectiveOperator::from_parts(0.0, 3f64.sqrt(), 1.0);
        let r = check_subellipticity(&op, 1.0, &[(0.0, 1.0), (-3.0, 0.5)], 1e-12).unwrap();
        assert!((r.margins[0].2 - (3f64.sqrt() - 1.0)).abs() < 1e-12);
        assert!((r.margins[1].2 - 0.5 * (3f64.sqrt() - 1.0)).abs() < 1e-12);

        let tampered = EffectiveOperator::from_parts(0.0, 0.5, 1.0);
        assert!(!tampered.theta_certificate.slope_check);
        assert!(matches!(
            check_subellipticity(&tampered, 1.0, &[(0.0, 1.0)], 1e-12),
            Err(Error::CertificateFailed { .. })
        ));
        assert!(check_subellipticity(&op, 1.0, &[(0.0, -1.0)], 1e-12).is_err());
    }
}
