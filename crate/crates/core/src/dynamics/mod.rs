//! Numerical dynamics of the bundle equations: integration, return maps,
//! Floquet multipliers and parameter scans.

mod integrate;
mod poincare;
mod scan;

use num_complex::Complex;

pub use integrate::{integrate_dense, integrate_to, uniform_times, StepStats, Tolerance, Trajectory};
pub use poincare::{
    anchoring_center, eigenvalues2, monodromy, newton_fixed_point, orbit_center, return_map_jacobian, time2pi_map,
    Classification, NewtonOptions, PoincareResult, CENTER_SAMPLES, ETA, MAX_NEWTON_ITERATIONS,
};
pub use scan::{row_seed, solve_point, wedge_scan, write_scan_csv, ScanGrid, ScanOptions, ScanPoint, ScanRecord};

use crate::error::Result;
use crate::num::Real;

/// A non-autonomous planar vector field `z' = f(z, conj z, t)`.
pub trait PlanarFlow<T: Real>: Sync {
    fn velocity(&self, z: Complex<T>, t: T) -> Complex<T>;

    /// `(df/dz, df/d conj z)`.
    fn wirtinger(&self, z: Complex<T>, t: T) -> (Complex<T>, Complex<T>);

    /// Maps the flow coordinate back to the physical position `p`.
    fn to_physical(&self, z: Complex<T>, _t: T) -> Complex<T> {
        z
    }
}

/// Integrates a flow from `t0` to `t1`, sampling `samples + 1` uniform times.
pub fn integrate<T: Real, F: PlanarFlow<T> + ?Sized>(
    flow: &F,
    p0: Complex<T>,
    t0: T,
    t1: T,
    samples: usize,
    tol: Tolerance<T>,
) -> Result<Trajectory<T, 1>> {
    if !(t1 > t0) {
        return Err(crate::error::Error::BadSpan);
    }
    let times = uniform_times(t0, t1, samples);
    integrate_dense(|t, y: &[Complex<T>; 1]| [flow.velocity(y[0], t)], [p0], t0, &times, tol)
}
