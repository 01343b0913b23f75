//! Dense linear algebra for the moderate system sizes used here.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Checks positive diagonal, nonpositive off-diagonals and strict
    /// diagonal dominance by rows.
    pub fn check_m_matrix(&self) -> Result<()> {
        for i in 0..self.n {
            let row = self.row(i);
            let diag = row[i];
            if !(diag > 0.0) {
                return Err(Error::NotMMatrix {
                    row: i,
                    reason: "nonpositive diagonal",
                });
            }
            let mut off = 0.0;
            for (j, a) in row.iter().enumerate() {
                if j == i {
                    continue;
                }
                if *a > 0.0 {
                    return Err(Error::NotMMatrix {
                        row: i,
                        reason: "positive off-diagonal entry",
                    });
                }
                off -= a;
            }
            if !(diag > off) {
                return Err(Error::NotMMatrix {
                    row: i,
                    reason: "not strictly diagonally dominant",
                });
            }
        }
        Ok(())
    }
}

/// LU factorization with partial pivoting.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(mut a: Matrix) -> Result<Self> {
        let n = a.n;
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = libm::fabs(a.get(k, k));
            for i in k + 1..n {
                let v = libm::fabs(a.get(i, k));
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > 0.0) || !best.is_finite() {
                return Err(Error::SingularSystem(k));
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = a.get(k, k);
            let (upper, lower) = a.data.split_at_mut((k + 1) * n);
            let pivot_row = &upper[k * n..(k + 1) * n];
            for row in lower.chunks_exact_mut(n) {
                let factor = row[k] / pivot;
                row[k] = factor;
                if factor != 0.0 {
                    for (dst, src) in row[k + 1..].iter_mut().zip(&pivot_row[k + 1..]) {
                        *dst -= factor * src;
                    }
                }
            }
        }
        Ok(Self { lu: a, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let s: f64 = row[..i].iter().zip(&x[..i]).map(|(a, b)| a * b).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s: f64 = row[i + 1..]
                .iter()
                .zip(&x[i + 1..])
                .map(|(a, b)| a * b)
                .sum();
            x[i] = (x[i] - s) / row[i];
        }
        x
    }
}

/// Normwise backward error `‖Ax - b‖∞ / (‖A‖∞ ‖x‖∞ + ‖b‖∞)` and the plain
/// sup-norm residual.
pub fn residual(a: &Matrix, x: &[f64], b: &[f64]) -> (f64, f64) {
    let ax = a.mul_vec(x);
    let res = ax
        .iter()
        .zip(b)
        .map(|(l, r)| libm::fabs(l - r))
        .fold(0.0, f64::max);
    let norm_a = (0..a.n)
        .map(|i| a.row(i).iter().map(|v| libm::fabs(*v)).sum::<f64>())
        .fold(0.0, f64::max);
    let norm_x = sup_norm(x);
    let norm_b = sup_norm(b);
    let scale = norm_a * norm_x + norm_b;
    let backward = if scale > 0.0 { res / scale } else { res };
    (backward, res)
}

pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| libm::fabs(*x)).fold(0.0, f64::max)
}

/// Solves `A x = b` by LU with one step of iterative refinement and checks the
/// normwise backward error against `tol`. Returns `(x, backward_error, residual)`.
pub fn solve_checked(a: &Matrix, b: &[f64], tol: f64) -> Result<(Vec<f64>, f64, f64)> {
    let lu = Lu::factor(a.clone())?;
    let mut x = lu.solve(b);
    let r: Vec<f64> = a
        .mul_vec(&x)
        .iter()
        .zip(b)
        .map(|(ax, bi)| bi - ax)
        .collect();
    let dx = lu.solve(&r);
    for (xi, d) in x.iter_mut().zip(&dx) {
        *xi += d;
    }
    let (backward, res) = residual(a, &x, b);
    if !(backward <= tol) {
        return Err(Error::NotConverged(alloc::format!(
            "linear solve backward error {backward:e} exceeds {tol:e}"
        )));
    }
    Ok((x, backward, res))
}

/// Damped Jacobi iteration for a diagonally dominant system.
/// Returns `(x, iterations, backward_error)`.
pub fn jacobi(
    a: &Matrix,
    b: &[f64],
    omega: f64,
    tol: f64,
    max_iters: usize,
) -> Result<(Vec<f64>, usize, f64)> {
    let n = a.n;
    let mut x = vec![0.0; n];
    let mut next = vec![0.0; n];
    for iter in 1..=max_iters {
        for i in 0..n {
            let row = a.row(i);
            let ax: f64 = row.iter().zip(&x).map(|(a, v)| a * v).sum();
            next[i] = x[i] + omega * (b[i] - ax) / row[i];
        }
        core::mem::swap(&mut x, &mut next);
        if iter % 16 == 0 || iter == max_iters {
            let (backward, _) = residual(a, &x, b);
            if backward <= tol {
                return Ok((x, iter, backward));
            }
        }
    }
    Err(Error::NotConverged(alloc::format!(
        "Jacobi did not reach {tol:e} within {max_iters} iterations"
    )))
}
