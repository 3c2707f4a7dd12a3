//! Parameter scans over `(eps, mu_1, ..., mu_n)` with continuation along rows.

use std::io::Write;

use num_complex::Complex;
use rayon::prelude::*;

use super::poincare::{newton_fixed_point, NewtonOptions, PoincareResult};
use super::PlanarFlow;
use crate::bundle::{BundleSystem, TransformedSystem};
use crate::error::{Error, Result};
use crate::fourier::DEFAULT_MODES;
use crate::num::{cst, times_i, Real};

/// One parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanPoint<T> {
    pub epsilon: T,
    pub mu: Vec<T>,
}

/// Rows of parameter points. Continuation runs along a row; rows are independent.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScanGrid<T> {
    pub rows: Vec<Vec<ScanPoint<T>>>,
}

impl<T: Real> ScanGrid<T> {
    pub fn from_rows(rows: Vec<Vec<ScanPoint<T>>>) -> Self {
        Self { rows }
    }

    /// One row per `epsilon`, walking the `mu` vectors in order.
    pub fn product(epsilons: &[T], mus: &[Vec<T>]) -> Self {
        let rows = epsilons
            .iter()
            .map(|&epsilon| mus.iter().map(|mu| ScanPoint { epsilon, mu: mu.clone() }).collect())
            .collect();
        Self { rows }
    }

    /// The same points with every row walked backwards.
    pub fn reversed(&self) -> Self {
        Self { rows: self.rows.iter().map(|r| r.iter().rev().cloned().collect()).collect() }
    }

    pub fn len(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Settings for [`wedge_scan`].
#[derive(Debug, Clone, Copy)]
pub struct ScanOptions<T> {
    pub newton: NewtonOptions<T>,
    /// Galerkin truncation for the reference path when `j* > 1`.
    pub truncation: usize,
    /// Residual target for the periodic correction.
    pub correction_tol: T,
    /// Site whose neighbourhood seeds the search for `n > 1`.
    pub site: usize,
    /// Offset of the first guess in each row, in the scan coordinate.
    pub guess: Complex<T>,
    /// Escape radius in units of `|v|`.
    pub escape_factor: T,
}

impl<T: Real> ScanOptions<T> {
    pub fn new(tol: T) -> Self {
        Self {
            newton: NewtonOptions::new(tol),
            truncation: DEFAULT_MODES,
            correction_tol: cst(1e-12),
            site: 0,
            guess: Complex::new(T::zero(), T::zero()),
            escape_factor: cst(1e3),
        }
    }
}

/// Outcome at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRecord<T> {
    pub row: usize,
    pub col: usize,
    pub epsilon: T,
    pub mu: Vec<T>,
    pub outcome: std::result::Result<PoincareResult<T>, String>,
}

impl<T> ScanRecord<T> {
    pub fn converged(&self) -> bool {
        self.outcome.is_ok()
    }

    pub fn result(&self) -> Option<&PoincareResult<T>> {
        self.outcome.as_ref().ok()
    }
}

/// Solves for the perturbed rotating wave at one parameter point.
///
/// With one site the search runs in the recentered coordinate `z`; otherwise
/// it runs on `p` itself and `z_star` is the orbit's value at `t = 0`.
pub fn solve_point<T: Real>(system: &BundleSystem<T>, guess: Complex<T>, opts: &ScanOptions<T>) -> Result<PoincareResult<T>> {
    let mut newton = opts.newton;
    let v = system.params().v;
    let radius = opts.escape_factor * v.norm().max(T::one());
    if system.params().n() == 1 {
        let tr = TransformedSystem::build(system.clone(), opts.truncation, opts.correction_tol)?;
        newton.integration = newton.integration.with_escape(radius);
        newton_fixed_point(&tr as &dyn PlanarFlow<T>, guess, &newton)
    } else {
        newton.integration = newton.integration.with_escape(radius);
        newton_fixed_point(system as &dyn PlanarFlow<T>, guess, &newton)
    }
}

/// Starting guess for the first point of a row.
pub fn row_seed<T: Real>(system: &BundleSystem<T>, opts: &ScanOptions<T>) -> Result<Complex<T>> {
    let p = system.params();
    if p.n() == 1 {
        return Ok(opts.guess);
    }
    let site = p
        .xi
        .get(opts.site)
        .ok_or_else(|| Error::Config(format!("site index {} out of range for {} sites", opts.site, p.n())))?;
    // The unperturbed wave centered on the site passes through xi - iv at t = 0.
    Ok(*site - times_i(&p.v) + opts.guess)
}

/// Runs [`solve_point`] over the grid, seeding each point from the previous
/// converged point in its row. Records come back in grid order.
pub fn wedge_scan<T: Real>(base: &BundleSystem<T>, grid: &ScanGrid<T>, opts: &ScanOptions<T>) -> Result<Vec<ScanRecord<T>>> {
    let seed = row_seed(base, opts)?;
    let rows: Vec<Vec<ScanRecord<T>>> = grid
        .rows
        .par_iter()
        .enumerate()
        .map(|(row, points)| {
            let mut guess = seed;
            points
                .iter()
                .enumerate()
                .map(|(col, pt)| {
                    let outcome = base
                        .with_strengths(pt.epsilon, &pt.mu)
                        .and_then(|sys| solve_point(&sys, guess, opts))
                        .map_err(|e| e.to_string());
                    if let Ok(r) = &outcome {
                        guess = r.z_star;
                    }
                    ScanRecord { row, col, epsilon: pt.epsilon, mu: pt.mu.clone(), outcome }
                })
                .collect()
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

/// Writes scan records as CSV with one column per `mu_j`.
pub fn write_scan_csv<T: Real, W: Write>(records: &[ScanRecord<T>], n: usize, mut out: W) -> std::io::Result<()> {
    let mut header = vec!["epsilon".to_string()];
    header.extend((1..=n).map(|j| format!("mu{j}")));
    header.extend(
        ["converged", "z_re", "z_im", "center_re", "center_im", "omega1_abs", "omega2_abs", "classification"]
            .iter()
            .map(|s| s.to_string()),
    );
    writeln!(out, "{}", header.join(","))?;
    for r in records {
        let mut row = vec![format!("{:e}", r.epsilon)];
        row.extend((0..n).map(|j| r.mu.get(j).map_or_else(String::new, |m| format!("{m:e}"))));
        match &r.outcome {
            Ok(p) => {
                row.push("true".into());
                for x in [p.z_star.re, p.z_star.im, p.anchor_center.re, p.anchor_center.im, p.multipliers[0].norm(), p.multipliers[1].norm()] {
                    row.push(format!("{x:e}"));
                }
                row.push(p.classification.to_string());
            }
            Err(_) => {
                row.push("false".into());
                row.extend(std::iter::repeat_n(String::new(), 6));
                row.push("failed".into());
            }
        }
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
