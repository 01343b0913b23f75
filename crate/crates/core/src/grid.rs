//! Grid functions on the unit torus or on a bounded interval with an exterior halo.

use alloc::vec::Vec;

use crate::expr::Expr;
use crate::{Error, Result};

/// Layout of a bounded-interval grid.
///
/// Points are `x_i = x_lo + i h` for `i = -halo ..= cells + halo`. Indices
/// `1 .. cells` are the interior (Omega is open); everything else is exterior
/// data. Beyond the halo the function equals `far_field`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainGrid {
    pub x_lo: f64,
    pub x_hi: f64,
    pub h: f64,
    pub cells: usize,
    pub halo: usize,
    pub far_field: f64,
}

impl DomainGrid {
    pub fn new(x_lo: f64, x_hi: f64, h: f64, halo: usize, far_field: f64) -> Result<Self> {
        if !(x_hi > x_lo) || !(h > 0.0) || !far_field.is_finite() {
            return Err(Error::InvalidParameter(
                "domain grid needs x_lo < x_hi and h > 0".into(),
            ));
        }
        let cells_f = (x_hi - x_lo) / h;
        let cells = libm::round(cells_f);
        if libm::fabs(cells_f - cells) > 1e-9 * cells.max(1.0) || cells < 2.0 {
            return Err(Error::InvalidParameter(
                "domain length must be an integer multiple (>= 2) of h".into(),
            ));
        }
        Ok(Self {
            x_lo,
            x_hi,
            h,
            cells: cells as usize,
            halo,
            far_field,
        })
    }

    /// Total number of stored values.
    pub fn len(&self) -> usize {
        self.cells + 1 + 2 * self.halo
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Storage index of grid point `i` (where `i = 0` is `x_lo`).
    pub fn slot(&self, i: isize) -> usize {
        (i + self.halo as isize) as usize
    }

    pub fn x(&self, i: isize) -> f64 {
        self.x_lo + i as f64 * self.h
    }

    /// Grid indices of the interior unknowns.
    pub fn interior(&self) -> core::ops::Range<isize> {
        1..self.cells as isize
    }

    /// Grid indices of the closed domain `[x_lo, x_hi]`.
    pub fn closure(&self) -> core::ops::RangeInclusive<isize> {
        0..=self.cells as isize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Grid {
    /// `n` points `y_j = j / n` on the unit torus.
    Torus {
        n: usize,
    },
    Domain(DomainGrid),
}

impl Grid {
    pub fn spacing(&self) -> f64 {
        match self {
            Grid::Torus { n } => 1.0 / *n as f64,
            Grid::Domain(d) => d.h,
        }
    }
}

/// Values on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn torus(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("empty torus function".into()));
        }
        Ok(Self {
            grid: Grid::Torus { n: values.len() },
            values,
        })
    }

    pub fn torus_from_expr(e: &Expr, n: usize) -> Result<Self> {
        Self::torus(e.sample_torus(n)?)
    }

    pub fn domain(grid: DomainGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(
                "value count does not match domain grid".into(),
            ));
        }
        Ok(Self {
            grid: Grid::Domain(grid),
            values,
        })
    }

    /// Samples `e` at every stored point of a domain grid, halo included.
    pub fn domain_from_expr(grid: DomainGrid, e: &Expr) -> Result<Self> {
        let values = e.sample(grid.len(), grid.x(-(grid.halo as isize)), grid.h)?;
        Self::domain(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Value at torus index `j + offset` with wrap-around.
    pub fn torus_at(&self, j: usize, offset: isize) -> f64 {
        let n = self.values.len() as isize;
        self.values[(j as isize + offset).rem_euclid(n) as usize]
    }
}
