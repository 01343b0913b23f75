//! The periodic data of the problem.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use crate::expr::{self, validate_periodic, Expr, Variable};
use crate::{Error, Result};

/// Number of samples used for periodicity checks.
pub const PERIOD_SAMPLES: usize = 128;
/// Tolerance of the periodicity checks.
pub const PERIOD_TOL: f64 = 1e-9;
/// Lower bounds `c0`, `a0` are minima over this many torus samples.
pub const BOUND_SAMPLES: usize = 4096;

/// `alpha`, the periodic coefficients `c`, `g` and optional `a` (functions of
/// `y`), and the exterior datum `phi` (a function of `x`) with its constant
/// far field.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    alpha: f64,
    c: Expr,
    g: Expr,
    a: Option<Expr>,
    phi: Expr,
    far_field: f64,
    c0: f64,
    a0: Option<f64>,
}

fn coefficient_error(name: &'static str, reason: impl ToString) -> Error {
    Error::Coefficient {
        name,
        reason: reason.to_string(),
    }
}

fn check_torus_fn(name: &'static str, e: &Expr) -> Result<()> {
    if e.variable() == Some(Variable::X) {
        return Err(coefficient_error(name, "must be a function of y"));
    }
    let report = validate_periodic(e, PERIOD_SAMPLES, PERIOD_TOL)?;
    if !report.pass {
        return Err(coefficient_error(
            name,
            format!("not periodic (deviation {:e})", report.max_deviation),
        ));
    }
    Ok(())
}

fn lower_bound(name: &'static str, e: &Expr) -> Result<f64> {
    let samples = e
        .sample_torus(BOUND_SAMPLES)
        .map_err(|err| coefficient_error(name, err))?;
    Ok(samples.into_iter().fold(f64::INFINITY, f64::min))
}

impl CoefficientSet {
    pub fn new(
        alpha: f64,
        c: Expr,
        g: Expr,
        a: Option<Expr>,
        phi: Expr,
        far_field: f64,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(coefficient_error("alpha", "out of (0,2)"));
        }
        check_torus_fn("c", &c)?;
        check_torus_fn("g", &g)?;
        let c0 = lower_bound("c", &c)?;
        if !(c0 > 0.0) {
            return Err(coefficient_error(
                "c",
                format!("lower bound c0 = {c0} is not positive"),
            ));
        }
        let a0 = match &a {
            Some(a) => {
                check_torus_fn("a", a)?;
                let a0 = lower_bound("a", a)?;
                if !(a0 > 0.0) {
                    return Err(coefficient_error(
                        "a",
                        format!("lower bound a0 = {a0} is not positive"),
                    ));
                }
                Some(a0)
            }
            None => None,
        };
        if phi.variable() == Some(Variable::Y) {
            return Err(coefficient_error("phi", "must be a function of x"));
        }
        if !far_field.is_finite() {
            return Err(coefficient_error("far_field", "must be finite"));
        }
        Ok(Self {
            alpha,
            c,
            g,
            a,
            phi,
            far_field,
            c0,
            a0,
        })
    }

    /// Parses the expressions and validates.
    pub fn parse(
        alpha: f64,
        c: &str,
        g: &str,
        a: Option<&str>,
        phi: &str,
        far_field: f64,
    ) -> Result<Self> {
        let a = a.map(expr::parse).transpose()?;
        Self::new(
            alpha,
            expr::parse(c)?,
            expr::parse(g)?,
            a,
            expr::parse(phi)?,
            far_field,
        )
    }

    pub fn with_g(&self, g: Expr) -> Result<Self> {
        Self::new(
            self.alpha,
            self.c.clone(),
            g,
            self.a.clone(),
            self.phi.clone(),
            self.far_field,
        )
    }

    pub fn with_phi(&self, phi: Expr, far_field: f64) -> Result<Self> {
        Self::new(
            self.alpha,
            self.c.clone(),
            self.g.clone(),
            self.a.clone(),
            phi,
            far_field,
        )
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn c(&self) -> &Expr {
        &self.c
    }
    pub fn g(&self) -> &Expr {
        &self.g
    }
    pub fn a(&self) -> Option<&Expr> {
        self.a.as_ref()
    }
    pub fn phi(&self) -> &Expr {
        &self.phi
    }
    pub fn far_field(&self) -> f64 {
        self.far_field
    }
    pub fn c0(&self) -> f64 {
        self.c0
    }
    pub fn a0(&self) -> Option<f64> {
        self.a0
    }

    pub fn c_torus(&self, n: usize) -> Result<Vec<f64>> {
        self.c.sample_torus(n)
    }

    pub fn g_torus(&self, n: usize) -> Result<Vec<f64>> {
        self.g.sample_torus(n)
    }
}
