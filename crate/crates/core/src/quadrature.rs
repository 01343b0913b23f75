//! Discretization of the one-dimensional Lévy operator
//!
//! ```text
//! I[u](x) = ∫ [u(x+z) - u(x) - 1_{|z|<=1} u'(x) z] q(z) dz,   q(z) = |z|^(-1-alpha).
//! ```
//!
//! The line is split into three regions:
//!
//! * `|z| <= zeta`: the integrand is replaced by `½ u''(x) z²`, with `u''` the
//!   central second difference, giving `½ near_moment · D²u(x)`;
//! * `zeta < |z| <= R`: nodes `z_k = k h` carrying the exact mass of `q` over
//!   their cell, paired as `u(x+z_k) + u(x-z_k) - 2u(x)` so the gradient
//!   compensator cancels identically;
//! * `|z| > R`: the function is taken to be a constant (the far field of a
//!   domain grid, or the mean over one period on the torus) and integrated
//!   analytically against `tail_mass`.
//!
//! All node weights are nonnegative, so `u ↦ I_h[u]` has nonnegative
//! off-center coefficients and satisfies the discrete maximum principle.

use alloc::vec;
use alloc::vec::Vec;

use crate::grid::{Grid, GridFunction};
use crate::{Error, Result};

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 2.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter("alpha must lie in (0, 2)".into()))
    }
}

/// `∫_{|z|>R} q(z) dz = 2 / (alpha R^alpha)`.
pub fn tail_mass(alpha: f64, truncation: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(truncation > 0.0) || !truncation.is_finite() {
        return Err(Error::InvalidParameter(
            "truncation radius must be positive".into(),
        ));
    }
    Ok(2.0 / (alpha * libm::pow(truncation, alpha)))
}

/// `∫_{|z|<=zeta} z² q(z) dz = 2 zeta^(2-alpha) / (2 - alpha)`.
pub fn near_moment(alpha: f64, zeta: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(zeta > 0.0) || !zeta.is_finite() {
        return Err(Error::InvalidParameter(
            "near-field radius must be positive".into(),
        ));
    }
    Ok(2.0 * libm::pow(zeta, 2.0 - alpha) / (2.0 - alpha))
}

/// `∫_a^b z^(-1-alpha) dz` for `0 < a <= b`, without cancellation for `b ≈ a`.
fn cell_mass(alpha: f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let ratio = libm::log1p((b - a) / a);
    -libm::pow(a, -alpha) * libm::expm1(-alpha * ratio) / alpha
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevyQuadrature {
    alpha: f64,
    h: f64,
    zeta: f64,
    truncation: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    near_moment: f64,
    tail_mass: f64,
}

/// Parameters of the near/far split at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitParams {
    /// Split radius; `zeta <= nu <= 1`.
    pub nu: f64,
    /// Slack on the second-order bound, `>= 0`.
    pub delta: f64,
    /// Second derivative used in the near part.
    pub x: f64,
    /// First derivative. It cancels against the symmetric node pairing and so
    /// never changes the result; kept to mirror the compensated integrand.
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitValues {
    pub i1_plus: f64,
    pub i1_minus: f64,
    pub i2: f64,
}

impl LevyQuadrature {
    /// Builds the quadrature for spacing `h`, near-field radius `zeta` and
    /// truncation radius `truncation` (an integer multiple of `h`, at least 1).
    pub fn build(alpha: f64, h: f64, zeta: f64, truncation: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidParameter("spacing h must be positive".into()));
        }
        if !(zeta > 0.0 && zeta <= h) {
            return Err(Error::InvalidParameter(
                "zeta must satisfy 0 < zeta <= h".into(),
            ));
        }
        if !(truncation >= 1.0) || !truncation.is_finite() {
            return Err(Error::InvalidParameter(
                "truncation radius R must be >= 1".into(),
            ));
        }
        let k_f = truncation / h;
        let count = libm::round(k_f);
        if libm::fabs(k_f - count) > 1e-9 * count {
            return Err(Error::InvalidParameter(
                "R must be an integer multiple of h".into(),
            ));
        }
        let count = count as usize;
        let mut nodes = Vec::with_capacity(count);
        let mut weights = Vec::with_capacity(count);
        for k in 1..=count {
            let z = k as f64 * h;
            let lo = if k == 1 { zeta } else { (k as f64 - 0.5) * h };
            let hi = if k == count {
                truncation
            } else {
                (k as f64 + 0.5) * h
            };
            nodes.push(z);
            weights.push(cell_mass(alpha, lo.max(zeta), hi));
        }
        let quad = Self {
            alpha,
            h,
            zeta,
            truncation,
            nodes,
            weights,
            near_moment: near_moment(alpha, zeta)?,
            tail_mass: tail_mass(alpha, truncation)?,
        };
        quad.check_monotone()?;
        Ok(quad)
    }

    /// Quadrature for the torus grid with `n` points, `zeta = h / zeta_div`.
    pub fn for_torus(alpha: f64, n: usize, zeta_div: f64, truncation: f64) -> Result<Self> {
        let h = 1.0 / n as f64;
        Self::build(alpha, h, h / zeta_div, truncation)
    }

    /// Fails unless every off-center stencil coefficient is nonnegative and finite.
    pub fn check_monotone(&self) -> Result<()> {
        let stencil = self.stencil();
        let ok = stencil.offsets.iter().all(|s| *s >= 0.0 && s.is_finite())
            && stencil.center.is_finite()
            && self.near_moment > 0.0
            && self.tail_mass >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvariantViolated(
                "quadrature is not monotone".into(),
            ))
        }
    }

    /// Overwrites a node weight without any check. Only for fault injection:
    /// the result is usually non-monotone.
    pub fn tampered(mut self, node: usize, weight: f64) -> Self {
        self.weights[node] = weight;
        self
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn zeta(&self) -> f64 {
        self.zeta
    }
    pub fn truncation(&self) -> f64 {
        self.truncation
    }
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn near_moment(&self) -> f64 {
        self.near_moment
    }
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }
    /// Number of grid offsets reached by the nodes.
    pub fn reach(&self) -> usize {
        self.nodes.len()
    }

    /// Coefficients of `I_h` as a symmetric stencil, tail excluded from the offsets.
    pub fn stencil(&self) -> Stencil {
        let second = self.near_moment / (2.0 * self.h * self.h);
        let mut offsets = self.weights.clone();
        offsets[0] += second;
        let center = -(2.0 * offsets.iter().sum::<f64>() + self.tail_mass);
        Stencil {
            center,
            offsets,
            tail_mass: self.tail_mass,
        }
    }

    /// Folds the stencil onto a torus with `n` points. Entry `m` is the
    /// coefficient of `u(y_{j+m})` in `I_h[u](y_j)`; the tail is spread over
    /// all points as `tail_mass / n` (the far field is the mean). Rows sum to 0.
    pub fn torus_kernel(&self, n: usize) -> Result<Vec<f64>> {
        self.check_torus(n)?;
        let stencil = self.stencil();
        let mut kernel = vec![0.0; n];
        for (k, s) in stencil.offsets.iter().enumerate() {
            let d = (k + 1) % n;
            kernel[d] += s;
            kernel[(n - d) % n] += s;
        }
        let spread = self.tail_mass / n as f64;
        for entry in kernel.iter_mut() {
            *entry += spread;
        }
        // the center is whatever makes the row sum vanish
        let off: f64 = kernel[1..].iter().sum();
        kernel[0] = -off;
        Ok(kernel)
    }

    fn check_torus(&self, n: usize) -> Result<()> {
        if libm::fabs(self.h * n as f64 - 1.0) > 1e-12 {
            return Err(Error::InvalidParameter(
                "quadrature spacing does not match the torus grid".into(),
            ));
        }
        Ok(())
    }

    fn check_halo(&self, halo: usize) -> Result<()> {
        if halo < self.reach() {
            return Err(Error::HaloTooShort {
                needed: self.reach(),
                available: halo,
            });
        }
        Ok(())
    }

    /// `I_h[u]` at every torus point, or at every point of the closed domain
    /// `[x_lo, x_hi]` for a domain grid.
    pub fn apply(&self, u: &GridFunction) -> Result<Vec<f64>> {
        match u.grid() {
            Grid::Torus { n } => {
                let kernel = self.torus_kernel(*n)?;
                let v = u.values();
                Ok((0..*n)
                    .map(|j| {
                        let center = v[j];
                        let mut acc = 0.0;
                        for (m, w) in kernel.iter().enumerate().skip(1) {
                            let idx = if j + m >= *n { j + m - n } else { j + m };
                            acc += w * (v[idx] - center);
                        }
                        acc
                    })
                    .collect())
            }
            Grid::Domain(d) => {
                self.check_halo(d.halo)?;
                let stencil = self.stencil();
                let v = u.values();
                Ok(d.closure()
                    .map(|i| {
                        let s = d.slot(i);
                        let center = v[s];
                        let mut acc = 0.0;
                        for (k, w) in stencil.offsets.iter().enumerate() {
                            let k = k + 1;
                            acc += w * ((v[s + k] - center) + (v[s - k] - center));
                        }
                        acc + self.tail_mass * (d.far_field - center)
                    })
                    .collect())
            }
        }
    }

    /// Near/far split at one evaluation point (torus index, or closed-domain
    /// index with 0 at `x_lo`).
    pub fn eval_split(
        &self,
        u: &GridFunction,
        point: usize,
        s: &SplitParams,
    ) -> Result<SplitValues> {
        if !(s.nu >= self.zeta && s.nu <= 1.0 && s.nu <= self.truncation) {
            return Err(Error::InvalidParameter(
                "split radius must satisfy zeta <= nu <= min(1, R)".into(),
            ));
        }
        if !(s.delta >= 0.0) {
            return Err(Error::InvalidParameter(
                "split slack delta must be >= 0".into(),
            ));
        }
        let moment = near_moment(self.alpha, s.nu)?;
        let i1_plus = 0.5 * (s.x + 2.0 * s.delta) * moment;
        let i1_minus = 0.5 * (s.x - 2.0 * s.delta) * moment;

        let (center, far, pair): (
            f64,
            f64,
            alloc::boxed::Box<dyn Fn(usize) -> (f64, f64) + '_>,
        ) = match u.grid() {
            Grid::Torus { n } => {
                self.check_torus(*n)?;
                if point >= *n {
                    return Err(Error::InvalidParameter(
                        "evaluation point outside the torus".into(),
                    ));
                }
                let uf = u;
                (
                    u.values()[point],
                    u.mean(),
                    alloc::boxed::Box::new(move |k: usize| {
                        (
                            uf.torus_at(point, k as isize),
                            uf.torus_at(point, -(k as isize)),
                        )
                    }),
                )
            }
            Grid::Domain(d) => {
                self.check_halo(d.halo)?;
                if point > d.cells {
                    return Err(Error::InvalidParameter(
                        "evaluation point outside the closed domain".into(),
                    ));
                }
                let slot = d.slot(point as isize);
                let v = u.values();
                (
                    v[slot],
                    d.far_field,
                    alloc::boxed::Box::new(move |k: usize| (v[slot + k], v[slot - k])),
                )
            }
        };

        let count = self.reach();
        let mut i2 = 0.0;
        for k in 1..=count {
            let lo = if k == 1 {
                self.zeta
            } else {
                (k as f64 - 0.5) * self.h
            };
            let hi = if k == count {
                self.truncation
            } else {
                (k as f64 + 0.5) * self.h
            };
            let lo = lo.max(s.nu);
            if hi <= lo {
                continue;
            }
            let w = cell_mass(self.alpha, lo, hi);
            let (plus, minus) = pair(k);
            let z = self.nodes[k - 1];
            let drift = if z <= 1.0 { s.p * z } else { 0.0 };
            i2 += w * (((plus - center) - drift) + ((minus - center) + drift));
        }
        i2 += self.tail_mass * (far - center);
        Ok(SplitValues {
            i1_plus,
            i1_minus,
            i2,
        })
    }
}

/// Symmetric stencil of `I_h`: `center` on the diagonal, `offsets[k-1]` for
/// `±k h`, and the analytic tail coupling to the far field.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    pub center: f64,
    pub offsets: Vec<f64>,
    pub tail_mass: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::grid::DomainGrid;

    #[test]
    fn closed_form_moments() {
        assert_eq!(tail_mass(1.0, 2.0).unwrap(), 1.0);
        assert_eq!(tail_mass(0.5, 1.0).unwrap(), 4.0);
        assert_eq!(tail_mass(1.0, 4.0).unwrap(), 0.5);
        assert_eq!(near_moment(1.0, 0.5).unwrap(), 1.0);
        assert!((near_moment(0.5, 1.0).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(near_moment(1.5, 1.0).unwrap(), 4.0);
        assert!(tail_mass(2.0, 1.0).is_err());
        assert!(near_moment(0.0, 1.0).is_err());
    }

    #[test]
    fn build_examples_and_invariants() {
        let q = LevyQuadrature::build(1.0, 0.5, 0.5, 2.0).unwrap();
        assert_eq!(q.tail_mass(), 1.0);
        assert_eq!(q.near_moment(), 1.0);
        let q = LevyQuadrature::build(0.5, 1.0, 1.0, 1.0).unwrap();
        assert!((q.near_moment() - 4.0 / 3.0).abs() < 1e-15);

        let q = LevyQuadrature::build(1.3, 1.0 / 64.0, 1.0 / 64.0, 3.0).unwrap();
        assert!(q.weights().iter().all(|w| *w >= 0.0));
        // with the default zeta = h the first node sits on the cutoff; its cell starts there
        assert!(q
            .nodes()
            .iter()
            .all(|z| *z >= q.zeta() && *z <= q.truncation() + 1e-12));
        // cells partition (zeta, R]
        let total: f64 = q.weights().iter().sum();
        let exact = (libm::pow(q.zeta(), -1.3) - libm::pow(3.0, -1.3)) / 1.3;
        assert!((total - exact).abs() < 1e-10 * exact);
    }

    #[test]
    fn build_rejects_bad_parameters() {
        assert!(LevyQuadrature::build(0.0, 0.1, 0.1, 1.0).is_err());
        assert!(LevyQuadrature::build(2.0, 0.1, 0.1, 1.0).is_err());
        assert!(LevyQuadrature::build(1.0, 0.1, 0.2, 1.0).is_err());
        assert!(LevyQuadrature::build(1.0, 0.1, 0.0, 1.0).is_err());
        assert!(LevyQuadrature::build(1.0, 0.1, 0.1, 0.5).is_err());
        assert!(LevyQuadrature::build(1.0, 0.3, 0.3, 1.0).is_err());
    }

    #[test]
    fn tampering_breaks_monotonicity_check() {
        let q = LevyQuadrature::build(1.0, 0.1, 0.1, 1.0)
            .unwrap()
            .tampered(1, -10.0);
        assert!(q.check_monotone().is_err());
    }

    #[test]
    fn constants_are_annihilated_exactly() {
        let q = LevyQuadrature::for_torus(1.0, 64, 1.0, 2.0).unwrap();
        let u = GridFunction::torus(vec![7.0; 64]).unwrap();
        assert!(q.apply(&u).unwrap().iter().all(|v| *v == 0.0));

        let grid = DomainGrid::new(0.0, 1.0, 1.0 / 32.0, 32, 7.0).unwrap();
        let q = LevyQuadrature::build(0.7, grid.h, grid.h, 1.0).unwrap();
        let u = GridFunction::domain(grid, vec![7.0; grid.len()]).unwrap();
        assert!(q.apply(&u).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn odd_functions_cancel() {
        let grid = DomainGrid::new(-1.0, 1.0, 1.0 / 32.0, 32, 0.0).unwrap();
        let q = LevyQuadrature::build(1.0, grid.h, grid.h, 1.0).unwrap();
        let u = GridFunction::domain_from_expr(grid, &parse("3*x").unwrap()).unwrap();
        let out = q.apply(&u).unwrap();
        for (i, val) in grid.closure().zip(&out) {
            let x = grid.x(i);
            // everything except the constant far-field tail cancels
            let tail = q.tail_mass() * (0.0 - 3.0 * x);
            assert!((val - tail).abs() < 1e-9, "x={x} got {val} want {tail}");
        }
        // at the center the far field equals u, so the whole sum vanishes
        assert!(out[grid.cells / 2].abs() < 1e-9);
    }

    #[test]
    fn halo_must_reach_truncation() {
        let grid = DomainGrid::new(0.0, 1.0, 0.1, 5, 0.0).unwrap();
        let q = LevyQuadrature::build(1.0, 0.1, 0.1, 1.0).unwrap();
        let u = GridFunction::domain(grid, vec![0.0; grid.len()]).unwrap();
        assert_eq!(
            q.apply(&u),
            Err(Error::HaloTooShort {
                needed: 10,
                available: 5
            })
        );
    }

    #[test]
    fn torus_kernel_is_symmetric_with_zero_row_sum() {
        let q = LevyQuadrature::for_torus(1.2, 32, 1.0, 3.0).unwrap();
        let k = q.torus_kernel(32).unwrap();
        for m in 1..32 {
            assert!(k[m] > 0.0);
            assert!((k[m] - k[32 - m]).abs() < 1e-12 * k[m]);
        }
        assert!(k.iter().sum::<f64>().abs() < 1e-10 * k[0].abs());
        assert!(q.torus_kernel(31).is_err());
    }

    #[test]
    fn split_difference_is_two_delta_moment() {
        let q = LevyQuadrature::for_torus(1.0, 128, 1.0, 1.0).unwrap();
        let u = GridFunction::torus_from_expr(&parse("sin(2*pi*y)").unwrap(), 128).unwrap();
        let s = SplitParams {
            nu: 0.5,
            delta: 0.0,
            x: 2.0,
            p: 0.0,
        };
        let v = q.eval_split(&u, 3, &s).unwrap();
        assert_eq!(v.i1_plus, 1.0);
        assert_eq!(v.i1_minus, 1.0);
        let s = SplitParams { delta: 0.3, ..s };
        let v = q.eval_split(&u, 3, &s).unwrap();
        assert!(
            (v.i1_plus - v.i1_minus - 2.0 * 0.3 * near_moment(1.0, 0.5).unwrap()).abs() < 1e-15
        );
    }

    #[test]
    fn split_at_zeta_reproduces_apply() {
        let n = 256;
        let q = LevyQuadrature::for_torus(1.4, n, 1.0, 2.0).unwrap();
        let u = GridFunction::torus_from_expr(&parse("cos(2*pi*y)+0.3*sin(6*pi*y)").unwrap(), n)
            .unwrap();
        let full = q.apply(&u).unwrap();
        for j in [0, 17, 100, 255] {
            let d2 = (u.torus_at(j, 1) - 2.0 * u.values()[j] + u.torus_at(j, -1)) / (q.h() * q.h());
            let s = SplitParams {
                nu: q.zeta(),
                delta: 0.0,
                x: d2,
                p: 1.0,
            };
            let v = q.eval_split(&u, j, &s).unwrap();
            assert!((v.i1_plus + v.i2 - full[j]).abs() < 1e-9 * full[j].abs().max(1.0));
        }
    }

    #[test]
    fn split_rejects_small_nu() {
        let q = LevyQuadrature::for_torus(1.0, 64, 1.0, 1.0).unwrap();
        let u = GridFunction::torus(vec![0.0; 64]).unwrap();
        let s = SplitParams {
            nu: q.zeta() / 2.0,
            delta: 0.0,
            x: 0.0,
            p: 0.0,
        };
        assert!(q.eval_split(&u, 0, &s).is_err());
    }
}
