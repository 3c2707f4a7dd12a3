//! Scalar fields on a uniform square grid and their finite-difference stencils.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::num::{cst, Real};

/// `N x N` values, `values[i * N + j]` at `(x1, x2) = origin + h (i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D<T> {
    n: usize,
    h: T,
    origin: (T, T),
    values: Vec<T>,
}

/// How `ddx1` treats the two `x1` boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Ghost value equal to the first interior neighbour, so the derivative vanishes.
    Mirror,
    /// First-order one-sided difference.
    OneSided,
}

impl<T: Real> Field2D<T> {
    pub fn zeros(n: usize, h: T, origin: (T, T)) -> Result<Self> {
        Self::from_values(n, h, origin, vec![T::zero(); n * n])
    }

    pub fn from_values(n: usize, h: T, origin: (T, T), values: Vec<T>) -> Result<Self> {
        if n < 3 {
            return Err(Error::Config(format!("grid needs at least 3 points per side, got {n}")));
        }
        if !(h > T::zero() && h.is_finite()) {
            return Err(Error::Config("grid spacing must be positive".into()));
        }
        if values.len() != n * n {
            return Err(Error::Config(format!("{} values for a {n}x{n} grid", values.len())));
        }
        Ok(Self { n, h, origin, values })
    }

    /// Samples `f(x1, x2)` at every grid point.
    pub fn from_fn(n: usize, h: T, origin: (T, T), f: impl Fn(T, T) -> T + Sync) -> Result<Self> {
        let mut field = Self::zeros(n, h, origin)?;
        let (x0, y0) = origin;
        field.values.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            let x1 = x0 + h * cst(i as f64);
            for (j, val) in row.iter_mut().enumerate() {
                *val = f(x1, y0 + h * cst(j as f64));
            }
        });
        Ok(field)
    }

    /// Same grid, new values.
    pub fn like(&self, values: Vec<T>) -> Self {
        assert_eq!(values.len(), self.values.len());
        Self { n: self.n, h: self.h, origin: self.origin, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> T {
        self.h
    }

    pub fn origin(&self) -> (T, T) {
        self.origin
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: T) {
        self.values[i * self.n + j] = x;
    }

    /// Physical coordinates of grid point `(i, j)`.
    pub fn point(&self, i: usize, j: usize) -> (T, T) {
        (self.origin.0 + self.h * cst(i as f64), self.origin.1 + self.h * cst(j as f64))
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.n == other.n && self.h == other.h && self.origin == other.origin
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|x| x.is_finite())
    }

    /// Sum of all values, accumulated row by row in a fixed order.
    pub fn sum(&self) -> T {
        self.values.chunks(self.n).map(|r| r.iter().copied().sum::<T>()).sum()
    }

    /// Trapezoid-weighted sum, the quantity a mirror-ghost Laplacian conserves.
    pub fn weighted_sum(&self) -> T {
        let n = self.n;
        let half: T = cst(0.5);
        let w = |k: usize| if k == 0 || k == n - 1 { half } else { T::one() };
        self.values
            .chunks(n)
            .enumerate()
            .map(|(i, r)| w(i) * (r.iter().copied().sum::<T>() - half * (r[0] + r[n - 1])))
            .sum()
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }
}

#[inline]
pub(crate) fn neighbours(i: usize, n: usize) -> (usize, usize) {
    let lo = if i == 0 { 1 } else { i - 1 };
    let hi = if i == n - 1 { n - 2 } else { i + 1 };
    (lo, hi)
}

/// Five-point Laplacian of row `i`, mirror ghosts on all sides.
#[inline]
pub(crate) fn laplacian_row<T: Real>(f: &[T], n: usize, i: usize, inv_h2: T, out: &mut [T]) {
    let (im, ip) = neighbours(i, n);
    let (up, mid, down) = (&f[ip * n..ip * n + n], &f[i * n..i * n + n], &f[im * n..im * n + n]);
    let four: T = cst(4.0);
    out[0] = (up[0] + down[0] + mid[1] + mid[1] - four * mid[0]) * inv_h2;
    for j in 1..n - 1 {
        out[j] = (up[j] + down[j] + mid[j + 1] + mid[j - 1] - four * mid[j]) * inv_h2;
    }
    out[n - 1] = (up[n - 1] + down[n - 1] + mid[n - 2] + mid[n - 2] - four * mid[n - 1]) * inv_h2;
}

/// `d/dx1` of row `i`.
#[inline]
pub(crate) fn ddx1_row<T: Real>(f: &[T], n: usize, i: usize, inv_h: T, boundary: Boundary, out: &mut [T]) {
    let row = |k: usize| &f[k * n..k * n + n];
    let (lo, hi, scale) = if i == 0 || i == n - 1 {
        if boundary == Boundary::Mirror {
            out.iter_mut().for_each(|x| *x = T::zero());
            return;
        }
        if i == 0 {
            (0, 1, inv_h)
        } else {
            (n - 2, n - 1, inv_h)
        }
    } else {
        (i - 1, i + 1, inv_h * cst(0.5))
    };
    let (a, b) = (row(lo), row(hi));
    for j in 0..n {
        out[j] = (b[j] - a[j]) * scale;
    }
}

/// `(f[i+1,j] + f[i-1,j] + f[i,j+1] + f[i,j-1] - 4 f[i,j]) / h^2` with Neumann
/// mirror ghosts.
pub fn laplacian5<T: Real>(f: &Field2D<T>) -> Field2D<T> {
    let n = f.n;
    let inv_h2 = T::one() / (f.h * f.h);
    let mut out = vec![T::zero(); n * n];
    out.par_chunks_mut(n).enumerate().for_each(|(i, row)| laplacian_row(&f.values, n, i, inv_h2, row));
    f.like(out)
}

/// Central difference in `x1`; the boundary rows follow `boundary`.
pub fn ddx1<T: Real>(f: &Field2D<T>, boundary: Boundary) -> Field2D<T> {
    let n = f.n;
    let inv_h = T::one() / f.h;
    let mut out = vec![T::zero(); n * n];
    out.par_chunks_mut(n).enumerate().for_each(|(i, row)| ddx1_row(&f.values, n, i, inv_h, boundary, row));
    f.like(out)
}

/// Central difference in `x2`, mirror boundaries.
pub fn ddx2<T: Real>(f: &Field2D<T>) -> Field2D<T> {
    let n = f.n;
    let half_inv_h = cst::<T>(0.5) / f.h;
    let mut out = vec![T::zero(); n * n];
    out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let src = &f.values[i * n..i * n + n];
        for j in 1..n - 1 {
            row[j] = (src[j + 1] - src[j - 1]) * half_inv_h;
        }
    });
    f.like(out)
}
