//! Numerical core for the periodic homogenization of the linear Lévy-type
//! equation
//!
//! ```text
//! u_eps(x) - c(x/eps) I[u_eps](x) - g(x/eps) = 0   in Omega,
//! u_eps = phi                                      outside Omega,
//! ```
//!
//! with the symmetric alpha-stable jump density `q(z) = |z|^(-1-alpha)` in one
//! space dimension.
//!
//! The crate is `no_std` and only needs `alloc`. It covers:
//!
//! * [`expr`]: the coefficient expression language (`c`, `g`, `a`, `phi`);
//! * [`quadrature`]: a monotone, symmetric, compensated discretization of the
//!   singular operator `I[u]`, including the near/far split evaluation used by
//!   the sub/superdifferential form of viscosity solutions;
//! * [`cell`]: the ergodic cell problem, by vanishing discount and by a direct
//!   mean-zero constrained solve, plus the eikonal variant `a(y)|Du|`;
//! * [`effective`]: the effective operator `Ī(I) = -(ḡ + c̄ I)`, its
//!   subellipticity certificate and the harmonic-mean oracle;
//! * [`pide`]: the oscillatory and effective Dirichlet problems on an interval
//!   with nonlocal exterior data;
//! * [`harness`]: the epsilon sweep and the corrector diagnostic.
//!
//! IO, configuration and the command line live in the `levyhomog` crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod cell;
pub mod coeffs;
pub mod effective;
mod error;
pub mod expr;
pub mod grid;
pub mod harness;
pub mod linalg;
pub mod pide;
pub mod quadrature;

pub use error::{Error, Result};
