//! The modified FitzHugh–Nagumo right-hand side and its midpoint stepper.
//!
//! ```text
//! u_t = (u - u^3/3 - v)/s + c phi + lap u + a1 u_x1
//! v_t = s (u + beta - gamma v + phi)
//! ```

use rayon::prelude::*;

use super::field::{ddx1_row, laplacian_row, Boundary, Field2D};
use crate::config::{PhiMode, RdasConfig};
use crate::error::{Error, Result};
use crate::num::{cst, Real};

/// Rows handed to a worker at once.
const ROW_CHUNK: usize = 8;

/// Switches for the individual terms, used by tests that isolate the stencils.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Terms {
    pub reaction: bool,
    pub diffusion: bool,
    pub advection: bool,
    pub forcing: bool,
}

impl Terms {
    pub const ALL: Terms = Terms { reaction: true, diffusion: true, advection: true, forcing: true };
    pub const DIFFUSION_ONLY: Terms = Terms { reaction: false, diffusion: true, advection: false, forcing: false };
}

impl Default for Terms {
    fn default() -> Self {
        Terms::ALL
    }
}

/// Spatially uniform equilibrium of the kinetics without forcing.
///
/// Solves `u - u^3/3 - (u + beta)/gamma = 0` by bisection; the cubic is
/// decreasing for `gamma < 1`, so the root is unique.
pub fn rest_state(beta: f64, gamma: f64) -> Result<(f64, f64)> {
    let f = |u: f64| u - u * u * u / 3.0 - (u + beta) / gamma;
    let (mut lo, mut hi) = (-10.0f64, 10.0f64);
    if f(lo) * f(hi) > 0.0 {
        return Err(Error::Config(format!("no rest state bracketed for beta = {beta}, gamma = {gamma}")));
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if f(lo) * f(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let u = 0.5 * (lo + hi);
    Ok((u, (u + beta) / gamma))
}

/// The bump `A exp(-k |x - c|^2)` on the grid.
pub fn build_phi<T: Real>(cfg: &RdasConfig) -> Result<Field2D<T>> {
    let h: T = cst(cfg.h());
    let l: T = cst(-cfg.half_width);
    let (a, k): (T, T) = (cst(cfg.bump_amplitude), cst(cfg.bump_decay));
    let (c1, c2): (T, T) = (cst(cfg.bump_center[0]), cst(cfg.bump_center[1]));
    Field2D::from_fn(cfg.n, h, (l, l), |x1, x2| {
        let (d1, d2) = (x1 - c1, x2 - c2);
        a * (-k * (d1 * d1 + d2 * d2)).exp()
    })
}

/// The field that enters both equations for the configured reading of the forcing.
pub fn phi_term<T: Real>(cfg: &RdasConfig, phi: &Field2D<T>) -> Field2D<T> {
    match cfg.phi_mode {
        PhiMode::Value => phi.clone(),
        PhiMode::X2Derivative => super::field::ddx2(phi),
    }
}

/// Grid, coefficients and precomputed forcing of one simulation.
#[derive(Debug, Clone)]
pub struct RdasModel<T> {
    pub n: usize,
    pub h: T,
    pub origin: (T, T),
    pub dt: T,
    pub varsigma: T,
    pub beta: T,
    pub gamma: T,
    pub advection: T,
    pub forcing: T,
    pub boundary: Boundary,
    pub phi: Field2D<T>,
    pub phi_term: Field2D<T>,
    pub rest: (T, T),
    pub terms: Terms,
}

impl<T: Real> RdasModel<T> {
    pub fn new(cfg: &RdasConfig) -> Result<Self> {
        cfg.validate()?;
        let phi = build_phi::<T>(cfg)?;
        let term = phi_term(cfg, &phi);
        let (ur, vr) = rest_state(cfg.beta, cfg.gamma)?;
        Ok(Self {
            n: cfg.n,
            h: cst(cfg.h()),
            origin: (cst(-cfg.half_width), cst(-cfg.half_width)),
            dt: cst(cfg.dt),
            varsigma: cst(cfg.varsigma),
            beta: cst(cfg.beta),
            gamma: cst(cfg.gamma),
            advection: cst(cfg.advection),
            forcing: cst(cfg.forcing),
            boundary: cfg.advection_boundary.into(),
            phi,
            phi_term: term,
            rest: (cst(ur), cst(vr)),
            terms: Terms::ALL,
        })
    }

    pub fn zeros(&self) -> Field2D<T> {
        Field2D::zeros(self.n, self.h, self.origin).expect("model grid is valid")
    }

    /// Evaluates both right-hand sides, row-parallel.
    pub fn rhs(&self, u: &[T], v: &[T], du: &mut [T], dv: &mut [T]) {
        let n = self.n;
        let inv_h2 = T::one() / (self.h * self.h);
        let inv_h = T::one() / self.h;
        let third: T = cst(1.0 / 3.0);
        let inv_s = T::one() / self.varsigma;
        let terms = self.terms;
        let phi = self.phi_term.values();
        du.par_chunks_mut(n)
            .zip(dv.par_chunks_mut(n))
            .enumerate()
            .with_min_len(ROW_CHUNK)
            .for_each_init(
                || vec![T::zero(); n],
                |scratch, (i, (du_row, dv_row))| {
                    if terms.diffusion {
                        laplacian_row(u, n, i, inv_h2, du_row);
                    } else {
                        du_row.iter_mut().for_each(|x| *x = T::zero());
                    }
                    if terms.advection && self.advection != T::zero() {
                        ddx1_row(u, n, i, inv_h, self.boundary, scratch);
                        for (d, s) in du_row.iter_mut().zip(scratch.iter()) {
                            *d += self.advection * *s;
                        }
                    }
                    let base = i * n;
                    let (ur, vr, pr) = (&u[base..base + n], &v[base..base + n], &phi[base..base + n]);
                    for j in 0..n {
                        let (uu, vv) = (ur[j], vr[j]);
                        let p = if terms.forcing { pr[j] } else { T::zero() };
                        if terms.reaction {
                            du_row[j] += (uu - uu * uu * uu * third - vv) * inv_s + self.forcing * p;
                            dv_row[j] = self.varsigma * (uu + self.beta - self.gamma * vv + p);
                        } else {
                            du_row[j] += self.forcing * p;
                            dv_row[j] = T::zero();
                        }
                    }
                },
            );
    }
}

/// Reusable buffers for [`RdasModel`] time steps.
#[derive(Debug, Clone)]
pub struct Stepper<T> {
    ku: Vec<T>,
    kv: Vec<T>,
    mu: Vec<T>,
    mv: Vec<T>,
}

impl<T: Real> Stepper<T> {
    pub fn new(n: usize) -> Self {
        let z = vec![T::zero(); n * n];
        Self { ku: z.clone(), kv: z.clone(), mu: z.clone(), mv: z }
    }

    /// One explicit midpoint step in place. `step` is only used for diagnostics.
    pub fn rk2_step(&mut self, model: &RdasModel<T>, u: &mut Field2D<T>, v: &mut Field2D<T>, step: u64) -> Result<()> {
        let n = model.n;
        if u.n() != n || v.n() != n {
            return Err(Error::Config("fields do not match the model grid".into()));
        }
        let half_dt = model.dt * cst(0.5);
        model.rhs(u.values(), v.values(), &mut self.ku, &mut self.kv);
        axpy_into(&mut self.mu, u.values(), half_dt, &self.ku);
        axpy_into(&mut self.mv, v.values(), half_dt, &self.kv);
        model.rhs(&self.mu, &self.mv, &mut self.ku, &mut self.kv);
        let ok_u = axpy_in_place(u.values_mut(), model.dt, &self.ku, n);
        let ok_v = axpy_in_place(v.values_mut(), model.dt, &self.kv, n);
        if ok_u && ok_v {
            Ok(())
        } else {
            Err(Error::BlowUp(step))
        }
    }
}

/// One step with temporary buffers.
pub fn rk2_step<T: Real>(model: &RdasModel<T>, u: &Field2D<T>, v: &Field2D<T>) -> Result<(Field2D<T>, Field2D<T>)> {
    let (mut u1, mut v1) = (u.clone(), v.clone());
    Stepper::new(model.n).rk2_step(model, &mut u1, &mut v1, 0)?;
    Ok((u1, v1))
}

fn axpy_into<T: Real>(out: &mut [T], y: &[T], a: T, k: &[T]) {
    out.par_iter_mut().zip(y.par_iter().zip(k.par_iter())).with_min_len(4096).for_each(|(o, (y, k))| *o = *y + a * *k);
}

/// `y += a k`, reporting whether every result is finite.
fn axpy_in_place<T: Real>(y: &mut [T], a: T, k: &[T], n: usize) -> bool {
    y.par_chunks_mut(n)
        .zip(k.par_chunks(n))
        .with_min_len(ROW_CHUNK)
        .map(|(yr, kr)| {
            let mut finite = true;
            for (y, k) in yr.iter_mut().zip(kr) {
                *y += a * *k;
                finite &= y.is_finite();
            }
            finite
        })
        .reduce(|| true, |a, b| a && b)
}
