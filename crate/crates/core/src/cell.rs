//! The ergodic cell problem on the unit torus.
//!
//! For fixed `I` we look for the unique constant `d` such that
//!
//! ```text
//! d - c(y) I[v](y) - g(y) - c(y) I = 0
//! ```
//!
//! has a periodic solution `v`. Two independent routes are provided:
//!
//! * vanishing discount: solve `λ u - c I_h[u] = g + c I` for a decreasing
//!   sequence of `λ` and extrapolate the torus average of `λ u_λ` to `λ = 0`;
//! * a direct solve of the singular system augmented with the constraint
//!   `mean(v) = 0`, with `d` as an extra unknown.
//!
//! The eikonal variant `λ u + a(y)|Du| - I_h[u] - g = 0` is solved with an
//! upwind gradient and Howard's policy iteration.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::coeffs::CoefficientSet;
use crate::grid::GridFunction;
use crate::linalg::{self, sup_norm, Matrix};
use crate::quadrature::LevyQuadrature;
use crate::{Error, Result};

/// Backward-error tolerance for the linear torus solves.
pub const LINEAR_TOL: f64 = 1e-12;
/// Sup-norm residual tolerance of the eikonal solve (relative to `max(1, |g|)`).
pub const EIKONAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscountSchedule {
    lambdas: Vec<f64>,
    extrapolation_order: usize,
}

impl Default for DiscountSchedule {
    /// `1e-1 · 2^-k` down to `1e-4`, first-order extrapolation.
    fn default() -> Self {
        Self::geometric(1e-1, 1e-4, 0.5, 1).expect("default schedule is valid")
    }
}

impl DiscountSchedule {
    pub fn new(lambdas: Vec<f64>, extrapolation_order: usize) -> Result<Self> {
        if lambdas.len() < extrapolation_order + 2 {
            return Err(Error::InvalidParameter(format!(
                "schedule needs at least {} values for order {extrapolation_order}",
                extrapolation_order + 2
            )));
        }
        if lambdas.iter().any(|l| !(*l > 0.0 && *l < 1.0)) {
            return Err(Error::InvalidParameter(
                "discount factors must lie in (0,1)".into(),
            ));
        }
        if lambdas.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::InvalidParameter(
                "discount factors must be strictly decreasing".into(),
            ));
        }
        Ok(Self {
            lambdas,
            extrapolation_order,
        })
    }

    /// `start · ratio^k` while above `end`, then `end` itself.
    pub fn geometric(start: f64, end: f64, ratio: f64, extrapolation_order: usize) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) || !(end > 0.0 && end < start) {
            return Err(Error::InvalidParameter(
                "geometric schedule needs 0 < end < start and ratio in (0,1)".into(),
            ));
        }
        let mut lambdas = Vec::new();
        let mut l = start;
        while l > end * (1.0 + 1e-9) {
            lambdas.push(l);
            l *= ratio;
        }
        lambdas.push(end);
        Self::new(lambdas, extrapolation_order)
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn extrapolation_order(&self) -> usize {
        self.extrapolation_order
    }

    pub fn smallest(&self) -> f64 {
        *self.lambdas.last().expect("schedule is non-empty")
    }
}

/// Acceptance knobs of [`estimate_d`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErgodicOptions {
    /// Two successive extrapolants must agree to `cauchy_tol · max(1, |d|)`.
    pub cauchy_tol: f64,
    /// Bound on `max λu - min λu` at the smallest `λ`.
    pub gap_bound: f64,
}

impl Default for ErgodicOptions {
    fn default() -> Self {
        Self {
            cauchy_tol: 1e-5,
            gap_bound: 5e-2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub lambda: f64,
    pub min: f64,
    pub max: f64,
    /// Torus average of `λ u_λ`, the per-λ estimate of `d`.
    pub mean: f64,
}

impl TraceEntry {
    pub fn gap(&self) -> f64 {
        self.max - self.min
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSolution {
    /// The ergodic constant.
    pub d: f64,
    /// Mean-zero corrector.
    pub v: GridFunction,
    /// Sup-norm residual of `(d, v)` in the discrete cell equation.
    pub rho: f64,
    /// Empty for the direct solve.
    pub trace: Vec<TraceEntry>,
}

struct TorusData {
    n: usize,
    kernel: Vec<f64>,
    c: Vec<f64>,
    g: Vec<f64>,
}

fn torus_data(coeffs: &CoefficientSet, quad: &LevyQuadrature, n: usize) -> Result<TorusData> {
    if n < 8 {
        return Err(Error::InvalidParameter("torus grid needs n >= 8".into()));
    }
    if quad.alpha() != coeffs.alpha() {
        return Err(Error::InvalidParameter(
            "quadrature and coefficients disagree on alpha".into(),
        ));
    }
    Ok(TorusData {
        n,
        kernel: quad.torus_kernel(n)?,
        c: coeffs.c_torus(n)?,
        g: coeffs.g_torus(n)?,
    })
}

/// `I_h[u]` at torus point `j` from the folded kernel, in difference form.
fn apply_kernel(kernel: &[f64], u: &[f64], j: usize) -> f64 {
    let n = u.len();
    let center = u[j];
    let mut acc = 0.0;
    for (m, w) in kernel.iter().enumerate().skip(1) {
        let idx = if j + m >= n { j + m - n } else { j + m };
        acc += w * (u[idx] - center);
    }
    acc
}

/// `λ Id - diag(c) K` on the torus.
fn discounted_matrix(data: &TorusData, lambda: f64) -> Matrix {
    let n = data.n;
    let mut a = Matrix::zeros(n);
    for j in 0..n {
        let mut diag = lambda;
        for (m, w) in data.kernel.iter().enumerate().skip(1) {
            let col = (j + m) % n;
            a.add(j, col, -data.c[j] * w);
            diag += data.c[j] * w;
        }
        a.add(j, j, diag);
    }
    a
}

/// Solves `λ u - c I_h[u] = g + c I` on the torus with `n` points.
///
/// The system is an M-matrix; this is asserted before solving. The solve is
/// carried out for `u - s` with the constant `s` chosen so that the shifted
/// right-hand side satisfies the solvability condition, which keeps the
/// unknowns of order one as `λ → 0`.
pub fn solve_discounted(
    coeffs: &CoefficientSet,
    quad: &LevyQuadrature,
    lambda: f64,
    i_value: f64,
    n: usize,
) -> Result<GridFunction> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidParameter("lambda must lie in (0,1)".into()));
    }
    let data = torus_data(coeffs, quad, n)?;
    solve_discounted_with(&data, lambda, i_value)
}

fn solve_discounted_with(data: &TorusData, lambda: f64, i_value: f64) -> Result<GridFunction> {
    let a = discounted_matrix(data, lambda);
    a.check_m_matrix()?;
    let rhs: Vec<f64> = data
        .g
        .iter()
        .zip(&data.c)
        .map(|(g, c)| g + c * i_value)
        .collect();
    let inv_c_sum: f64 = data.c.iter().map(|c| 1.0 / c).sum();
    let weighted: f64 = rhs.iter().zip(&data.c).map(|(b, c)| b / c).sum();
    let shift = weighted / inv_c_sum / lambda;
    let shifted: Vec<f64> = rhs.iter().map(|b| b - lambda * shift).collect();
    let (w, _, _) = linalg::solve_checked(&a, &shifted, LINEAR_TOL)?;
    let u: Vec<f64> = w.iter().map(|w| shift + w).collect();

    // discrete maximum principle
    let bound = sup_norm(&rhs);
    let lu_sup = u.iter().map(|x| libm::fabs(lambda * x)).fold(0.0, f64::max);
    if lu_sup > bound * (1.0 + 1e-9) + 1e-12 {
        return Err(Error::InvariantViolated(format!(
            "sup |λu| = {lu_sup} exceeds sup |g + cI| = {bound}"
        )));
    }
    GridFunction::torus(u)
}

/// Neville extrapolation of `(x_i, y_i)` to `x = 0`.
fn extrapolate_to_zero(xs: &[f64], ys: &[f64]) -> f64 {
    let mut p: Vec<f64> = ys.to_vec();
    let k = xs.len();
    for level in 1..k {
        for i in 0..k - level {
            let (xi, xj) = (xs[i], xs[i + level]);
            p[i] = (xj * p[i] - xi * p[i + 1]) / (xj - xi);
        }
    }
    p[0]
}

fn ergodic_limit(
    schedule: &DiscountSchedule,
    opts: &ErgodicOptions,
    mut solve: impl FnMut(f64) -> Result<GridFunction>,
) -> Result<(f64, GridFunction, Vec<TraceEntry>)> {
    let mut trace = Vec::with_capacity(schedule.lambdas.len());
    let mut last = None;
    for &lambda in &schedule.lambdas {
        let u = solve(lambda)?;
        let scaled: Vec<f64> = u.values().iter().map(|x| lambda * x).collect();
        let min = scaled.iter().copied().fold(f64::INFINITY, f64::min);
        let max = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = scaled.iter().sum::<f64>() / scaled.len() as f64;
        trace.push(TraceEntry {
            lambda,
            min,
            max,
            mean,
        });
        last = Some(u);
    }
    let u_last = last.expect("schedule is non-empty");

    let window = schedule.extrapolation_order + 1;
    let xs: Vec<f64> = trace.iter().map(|t| t.lambda).collect();
    let ys: Vec<f64> = trace.iter().map(|t| t.mean).collect();
    let len = xs.len();
    let d = extrapolate_to_zero(&xs[len - window..], &ys[len - window..]);
    let previous = extrapolate_to_zero(
        &xs[len - window - 1..len - 1],
        &ys[len - window - 1..len - 1],
    );
    if !(libm::fabs(d - previous) <= opts.cauchy_tol * libm::fabs(d).max(1.0)) {
        return Err(Error::NotConverged(format!(
            "extrapolated ergodic constant not Cauchy: {d} vs {previous}"
        )));
    }
    let gap = trace.last().map(TraceEntry::gap).unwrap_or(0.0);
    if !(gap <= opts.gap_bound) {
        return Err(Error::NotConverged(format!(
            "uniformity gap {gap:e} at λ = {} exceeds {:e}",
            schedule.smallest(),
            opts.gap_bound
        )));
    }
    Ok((d, u_last, trace))
}

fn mean_zero(u: &GridFunction) -> Result<GridFunction> {
    let mean = u.mean();
    GridFunction::torus(u.values().iter().map(|x| x - mean).collect())
}

/// `sup_y |d - c I_h[v] - g - c I|`.
fn linear_residual(data: &TorusData, d: f64, v: &[f64], i_value: f64) -> f64 {
    (0..data.n)
        .map(|j| {
            let iv = apply_kernel(&data.kernel, v, j);
            libm::fabs(d - data.c[j] * iv - data.g[j] - data.c[j] * i_value)
        })
        .fold(0.0, f64::max)
}

/// Ergodic constant by vanishing discount with Richardson extrapolation.
pub fn estimate_d(
    coeffs: &CoefficientSet,
    quad: &LevyQuadrature,
    schedule: &DiscountSchedule,
    i_value: f64,
    n: usize,
    opts: &ErgodicOptions,
) -> Result<CellSolution> {
    let data = torus_data(coeffs, quad, n)?;
    let (d, u_last, trace) = ergodic_limit(schedule, opts, |lambda| {
        solve_discounted_with(&data, lambda, i_value)
    })?;
    let v = mean_zero(&u_last)?;
    let rho = linear_residual(&data, d, v.values(), i_value);
    Ok(CellSolution { d, v, rho, trace })
}

/// Direct solve of `{ c I_h[v] - d = -g - c I ; Σ v = 0 }` for `(v, d)`.
pub fn solve_cell_direct(
    coeffs: &CoefficientSet,
    quad: &LevyQuadrature,
    i_value: f64,
    n: usize,
) -> Result<CellSolution> {
    let data = torus_data(coeffs, quad, n)?;
    let mut a = Matrix::zeros(n + 1);
    let mut rhs = vec![0.0; n + 1];
    for j in 0..n {
        let mut diag = 0.0;
        for (m, w) in data.kernel.iter().enumerate().skip(1) {
            a.add(j, (j + m) % n, data.c[j] * w);
            diag -= data.c[j] * w;
        }
        a.add(j, j, diag);
        a.set(j, n, -1.0);
        a.set(n, j, 1.0);
        rhs[j] = -data.g[j] - data.c[j] * i_value;
    }
    let (sol, _, _) = linalg::solve_checked(&a, &rhs, LINEAR_TOL)?;
    let d = sol[n];
    let v = mean_zero(&GridFunction::torus(sol[..n].to_vec())?)?;
    let rho = linear_residual(&data, d, v.values(), i_value);
    if !(rho <= 1e-10 * (1.0 + sup_norm(&rhs))) {
        return Err(Error::NotConverged(format!(
            "direct cell solve residual {rho:e}"
        )));
    }
    Ok(CellSolution {
        d,
        v,
        rho,
        trace: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EikonalMethod {
    /// Howard's algorithm: alternate upwind direction choice and a linear
    /// M-matrix solve until the choice is stable.
    PolicyIteration { max_iters: usize },
    /// `u ← u - ω F(u) / (λ + diag)` until `sup |F(u)|` is small.
    FixedPoint { omega: f64, max_iters: usize },
}

impl Default for EikonalMethod {
    fn default() -> Self {
        EikonalMethod::PolicyIteration { max_iters: 200 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Upwind {
    Zero,
    Backward,
    Forward,
}

struct EikonalData {
    torus: TorusData,
    a: Vec<f64>,
    h: f64,
}

fn eikonal_data(coeffs: &CoefficientSet, quad: &LevyQuadrature, n: usize) -> Result<EikonalData> {
    let Some(a) = coeffs.a() else {
        return Err(Error::InvalidParameter(
            "eikonal solve needs the coefficient a".into(),
        ));
    };
    let mut torus = torus_data(coeffs, quad, n)?;
    // the eikonal equation has no c in front of the nonlocal term
    torus.c = vec![1.0; n];
    Ok(EikonalData {
        a: a.sample_torus(n)?,
        torus,
        h: 1.0 / n as f64,
    })
}

impl EikonalData {
    /// `max(D⁻u, -D⁺u, 0)` and the branch attaining it.
    fn upwind(&self, u: &[f64], j: usize) -> (f64, Upwind) {
        let n = u.len();
        let back = (u[j] - u[(j + n - 1) % n]) / self.h;
        let fwd = (u[j] - u[(j + 1) % n]) / self.h;
        let mut best = (0.0, Upwind::Zero);
        if back > best.0 {
            best = (back, Upwind::Backward);
        }
        if fwd > best.0 {
            best = (fwd, Upwind::Forward);
        }
        best
    }

    /// `λ (s + w) + a |Dw| - I_h[w] - g` where `u = s + w`.
    fn residual(&self, lambda: f64, shift: f64, w: &[f64]) -> Vec<f64> {
        (0..self.torus.n)
            .map(|j| {
                let (grad, _) = self.upwind(w, j);
                lambda * shift + lambda * w[j] + self.a[j] * grad
                    - apply_kernel(&self.torus.kernel, w, j)
                    - self.torus.g[j]
            })
            .collect()
    }

    fn tolerance(&self) -> f64 {
        EIKONAL_TOL * sup_norm(&self.torus.g).max(1.0)
    }
}

/// Solves `λ u + a(y)|Du|_upwind - I_h[u] - g = 0` on the torus.
pub fn solve_discounted_eikonal(
    coeffs: &CoefficientSet,
    quad: &LevyQuadrature,
    lambda: f64,
    n: usize,
    method: EikonalMethod,
) -> Result<GridFunction> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidParameter("lambda must lie in (0,1)".into()));
    }
    let data = eikonal_data(coeffs, quad, n)?;
    solve_eikonal_with(&data, lambda, method)
}

fn solve_eikonal_with(
    data: &EikonalData,
    lambda: f64,
    method: EikonalMethod,
) -> Result<GridFunction> {
    let n = data.torus.n;
    let g = &data.torus.g;
    let tol = data.tolerance();
    match method {
        EikonalMethod::PolicyIteration { max_iters } => {
            let mut policy = vec![Upwind::Zero; n];
            let mut shift = g.iter().sum::<f64>() / n as f64 / lambda;
            let mut w = vec![0.0; n];
            for _ in 0..max_iters {
                let mut a = discounted_matrix(&data.torus, lambda);
                let ah = |j: usize| data.a[j] / data.h;
                for (j, p) in policy.iter().enumerate() {
                    match p {
                        Upwind::Zero => {}
                        Upwind::Backward => {
                            a.add(j, j, ah(j));
                            a.add(j, (j + n - 1) % n, -ah(j));
                        }
                        Upwind::Forward => {
                            a.add(j, j, ah(j));
                            a.add(j, (j + 1) % n, -ah(j));
                        }
                    }
                }
                a.check_m_matrix()?;
                let rhs: Vec<f64> = g.iter().map(|g| g - lambda * shift).collect();
                let (sol, _, _) = linalg::solve_checked(&a, &rhs, LINEAR_TOL)?;
                w = sol;
                let mean = w.iter().sum::<f64>() / n as f64;
                shift += mean;
                for x in w.iter_mut() {
                    *x -= mean;
                }
                let mut changed = false;
                for j in 0..n {
                    let (grad, branch) = data.upwind(&w, j);
                    let current = match policy[j] {
                        Upwind::Zero => 0.0,
                        Upwind::Backward => (w[j] - w[(j + n - 1) % n]) / data.h,
                        Upwind::Forward => (w[j] - w[(j + 1) % n]) / data.h,
                    };
                    // switch only on a strict improvement so ties cannot cycle
                    if branch != policy[j] && grad > current + 1e-12 * (1.0 + libm::fabs(grad)) {
                        policy[j] = branch;
                        changed = true;
                    }
                }
                if !changed {
                    let res = sup_norm(&data.residual(lambda, shift, &w));
                    if res <= tol {
                        return GridFunction::torus(w.iter().map(|x| shift + x).collect());
                    }
                    return Err(Error::NotConverged(format!(
                        "policy iteration stalled with residual {res:e}"
                    )));
                }
            }
            let res = sup_norm(&data.residual(lambda, shift, &w));
            Err(Error::NotConverged(format!(
                "policy iteration did not settle in {max_iters} steps (residual {res:e})"
            )))
        }
        EikonalMethod::FixedPoint { omega, max_iters } => {
            let center: f64 = data.torus.kernel[1..].iter().sum();
            let shift = g.iter().sum::<f64>() / n as f64 / lambda;
            let mut w = vec![0.0; n];
            for iter in 0..max_iters {
                let res = data.residual(lambda, shift, &w);
                if sup_norm(&res) <= tol {
                    return GridFunction::torus(w.iter().map(|x| shift + x).collect());
                }
                for j in 0..n {
                    w[j] -= omega * res[j] / (lambda + center + data.a[j] / data.h);
                }
                if iter + 1 == max_iters {
                    break;
                }
            }
            let res = sup_norm(&data.residual(lambda, shift, &w));
            Err(Error::NotConverged(format!(
                "fixed-point iteration did not reach {tol:e} in {max_iters} steps (residual {res:e})"
            )))
        }
    }
}

/// Ergodic constant of the eikonal cell problem by vanishing discount.
/// `rho` is the residual of `(d, v)` in `d + a|Dv| - I_h[v] - g = 0`.
pub fn estimate_d_eikonal(
    coeffs: &CoefficientSet,
    quad: &LevyQuadrature,
    schedule: &DiscountSchedule,
    n: usize,
    method: EikonalMethod,
    opts: &ErgodicOptions,
) -> Result<CellSolution> {
    let data = eikonal_data(coeffs, quad, n)?;
    let (d, u_last, trace) = ergodic_limit(schedule, opts, |lambda| {
        solve_eikonal_with(&data, lambda, method)
    })?;
    let v = mean_zero(&u_last)?;
    let vals = v.values();
    let rho = (0..n)
        .map(|j| {
            let (grad, _) = data.upwind(vals, j);
            libm::fabs(
                d + data.a[j] * grad - apply_kernel(&data.torus.kernel, vals, j) - data.torus.g[j],
            )
        })
        .fold(0.0, f64::max);
    Ok(CellSolution { d, v, rho, trace })
}
