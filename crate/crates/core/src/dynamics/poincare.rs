//! Time-2π return maps, Floquet multipliers and fixed points.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::integrate::{integrate_dense, integrate_to, uniform_times, Tolerance};
use super::PlanarFlow;
use crate::error::{Error, Result};
use crate::num::{cst, Real};

/// Default hyperbolicity margin on `|omega| - 1`.
pub const ETA: f64 = 1e-6;
/// Default Newton iteration cap.
pub const MAX_NEWTON_ITERATIONS: usize = 50;
/// Default number of quadrature intervals for the anchoring center.
pub const CENTER_SAMPLES: usize = 256;

/// Stability of a perturbed rotating wave.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Anchoring,
    Repelling,
    NonHyperbolic,
}

impl Classification {
    /// Anchoring iff both multipliers lie inside `|w| < 1 - eta`, repelling iff
    /// both lie outside `|w| > 1 + eta`.
    pub fn from_multipliers<T: Real>(multipliers: &[Complex<T>; 2], eta: T) -> Self {
        let inside = multipliers.iter().all(|w| w.norm() < T::one() - eta);
        let outside = multipliers.iter().all(|w| w.norm() > T::one() + eta);
        match (inside, outside) {
            (true, _) => Classification::Anchoring,
            (_, true) => Classification::Repelling,
            _ => Classification::NonHyperbolic,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Classification::Anchoring => "anchoring",
            Classification::Repelling => "repelling",
            Classification::NonHyperbolic => "non-hyperbolic",
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Classification {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "anchoring" => Ok(Classification::Anchoring),
            "repelling" => Ok(Classification::Repelling),
            "non-hyperbolic" => Ok(Classification::NonHyperbolic),
            other => Err(Error::Config(format!("unknown classification `{other}`"))),
        }
    }
}

/// A fixed point of the return map and its Floquet data.
#[derive(Debug, Clone, PartialEq)]
pub struct PoincareResult<T> {
    pub z_star: Complex<T>,
    pub multipliers: [Complex<T>; 2],
    pub classification: Classification,
    pub anchor_center: Complex<T>,
    pub residual: T,
    pub iterations: usize,
}

/// Settings shared by the return-map routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions<T> {
    /// Target for `|P(z) - z|`.
    pub tol: T,
    pub integration: Tolerance<T>,
    pub max_iterations: usize,
    pub eta: T,
    pub center_samples: usize,
}

impl<T: Real> NewtonOptions<T> {
    pub fn new(tol: T) -> Self {
        let itol = (tol * cst(1e-2)).max(cst(1e-13));
        Self {
            tol,
            integration: Tolerance::new(itol),
            max_iterations: MAX_NEWTON_ITERATIONS,
            eta: cst(ETA),
            center_samples: CENTER_SAMPLES,
        }
    }
}

/// Real 2x2 matrix acting on `(re z, im z)`, row-major.
type Mat2<T> = [[T; 2]; 2];

/// `P(z0)`: the flow from `t = 0` to `t = 2pi`.
pub fn time2pi_map<T: Real, F: PlanarFlow<T> + ?Sized>(flow: &F, z0: Complex<T>, tol: Tolerance<T>) -> Result<Complex<T>> {
    let (y, _) = integrate_to(|t, y: &[Complex<T>; 1]| [flow.velocity(y[0], t)], [z0], T::zero(), T::TAU(), tol)?;
    Ok(y[0])
}

/// `P(z0)` together with the real 2x2 Jacobian `DP(z0)`, from the variational
/// equations `d' = f_z d + f_zbar conj(d)`.
pub fn return_map_jacobian<T: Real, F: PlanarFlow<T> + ?Sized>(flow: &F, z0: Complex<T>, tol: Tolerance<T>) -> Result<(Complex<T>, Mat2<T>)> {
    let one = Complex::new(T::one(), T::zero());
    let i = Complex::new(T::zero(), T::one());
    let rhs = |t: T, y: &[Complex<T>; 3]| {
        let (a, b) = flow.wirtinger(y[0], t);
        [flow.velocity(y[0], t), a * y[1] + b * y[1].conj(), a * y[2] + b * y[2].conj()]
    };
    let (y, _) = integrate_to(rhs, [z0, one, i], T::zero(), T::TAU(), tol)?;
    let jac = [[y[1].re, y[2].re], [y[1].im, y[2].im]];
    Ok((y[0], jac))
}

/// Eigenvalues of a real 2x2 matrix.
pub fn eigenvalues2<T: Real>(m: &Mat2<T>) -> [Complex<T>; 2] {
    let half: T = cst(0.5);
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = tr * tr * cst(0.25) - det;
    if disc >= T::zero() {
        let s = disc.sqrt();
        // Avoid cancellation in the smaller root.
        let big = tr * half + if tr >= T::zero() { s } else { -s };
        let small = if big != T::zero() { det / big } else { tr * half - s };
        [Complex::new(big, T::zero()), Complex::new(small, T::zero())]
    } else {
        let s = (-disc).sqrt();
        [Complex::new(tr * half, s), Complex::new(tr * half, -s)]
    }
}

/// Floquet multipliers at `z_star`.
pub fn monodromy<T: Real, F: PlanarFlow<T> + ?Sized>(flow: &F, z_star: Complex<T>, tol: Tolerance<T>) -> Result<[Complex<T>; 2]> {
    let (_, jac) = return_map_jacobian(flow, z_star, tol)?;
    Ok(eigenvalues2(&jac))
}

/// Time average of a sampled path over one period, by the composite trapezoid
/// rule. `times` must run from 0 to 2pi and the path must close to `10 tol`.
pub fn anchoring_center<T: Real>(times: &[T], path: &[Complex<T>], tol: T) -> Result<Complex<T>> {
    if times.len() < 2 || times.len() != path.len() {
        return Err(Error::BadSpan);
    }
    let span_tol: T = cst(1e-9);
    if times[0].abs() > span_tol || (times[times.len() - 1] - T::TAU()).abs() > span_tol {
        return Err(Error::BadSpan);
    }
    let gap = (path[path.len() - 1] - path[0]).norm();
    if gap > tol * cst(10.0) {
        return Err(Error::NotPeriodic(gap.to_f64().unwrap_or(f64::NAN)));
    }
    let half: T = cst(0.5);
    let mut acc = Complex::new(T::zero(), T::zero());
    for k in 1..times.len() {
        acc += (path[k] + path[k - 1]) * ((times[k] - times[k - 1]) * half);
    }
    Ok(acc / (times[times.len() - 1] - times[0]))
}

fn distance_from_identity<T: Real>(m: &Mat2<T>) -> T {
    let mut worst = T::zero();
    for (r, row) in m.iter().enumerate() {
        for (c, x) in row.iter().enumerate() {
            let target = if r == c { T::one() } else { T::zero() };
            worst = worst.max((*x - target).abs());
        }
    }
    worst
}

fn solve2<T: Real>(m: &Mat2<T>, rhs: [T; 2]) -> Option<[T; 2]> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det == T::zero() || !det.is_finite() {
        return None;
    }
    Some([(rhs[0] * m[1][1] - m[0][1] * rhs[1]) / det, (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / det])
}

/// Newton iteration on `z -> P(z) - z` with the variational Jacobian and a
/// backtracking line search.
pub fn newton_fixed_point<T: Real, F: PlanarFlow<T> + ?Sized>(flow: &F, guess: Complex<T>, opts: &NewtonOptions<T>) -> Result<PoincareResult<T>> {
    let mut z = guess;
    let (mut pz, mut jac) = return_map_jacobian(flow, z, opts.integration)?;
    let mut residual = (pz - z).norm();
    let mut iterations = 0;
    while residual > opts.tol {
        if iterations >= opts.max_iterations {
            return Err(Error::NoFixedPoint { iterations, residual: residual.to_f64().unwrap_or(f64::NAN) });
        }
        iterations += 1;
        let mut a = jac;
        a[0][0] -= T::one();
        a[1][1] -= T::one();
        let distance = distance_from_identity(&jac);
        if distance < opts.eta {
            return Err(Error::Degenerate(distance.to_f64().unwrap_or(f64::NAN)));
        }
        let g = pz - z;
        let Some(step) = solve2(&a, [-g.re, -g.im]) else {
            return Err(Error::Degenerate(distance.to_f64().unwrap_or(f64::NAN)));
        };
        let step = Complex::new(step[0], step[1]);
        let mut lambda = T::one();
        let mut accepted = false;
        for _ in 0..12 {
            let trial = z + step * lambda;
            match return_map_jacobian(flow, trial, opts.integration) {
                Ok((p_trial, j_trial)) => {
                    let r_trial = (p_trial - trial).norm();
                    if r_trial.is_finite() && r_trial < residual {
                        z = trial;
                        pz = p_trial;
                        jac = j_trial;
                        residual = r_trial;
                        accepted = true;
                        break;
                    }
                }
                Err(Error::Escape { .. }) | Err(Error::NonFinite(_)) => {}
                Err(e) => return Err(e),
            }
            lambda *= cst(0.5);
        }
        if !accepted {
            return Err(Error::NoFixedPoint { iterations, residual: residual.to_f64().unwrap_or(f64::NAN) });
        }
    }

    let distance = distance_from_identity(&jac);
    if distance < opts.eta {
        return Err(Error::Degenerate(distance.to_f64().unwrap_or(f64::NAN)));
    }
    let multipliers = eigenvalues2(&jac);
    let classification = Classification::from_multipliers(&multipliers, opts.eta);
    let anchor_center = orbit_center(flow, z, opts)?;
    Ok(PoincareResult { z_star: z, multipliers, classification, anchor_center, residual, iterations })
}

/// Anchoring center of the physical orbit through the fixed point `z`.
pub fn orbit_center<T: Real, F: PlanarFlow<T> + ?Sized>(flow: &F, z: Complex<T>, opts: &NewtonOptions<T>) -> Result<Complex<T>> {
    let times = uniform_times(T::zero(), T::TAU(), opts.center_samples.max(2));
    let traj = integrate_dense(|t, y: &[Complex<T>; 1]| [flow.velocity(y[0], t)], [z], T::zero(), &times, opts.integration)?;
    let path: Vec<Complex<T>> = traj.times.iter().zip(&traj.states).map(|(t, s)| flow.to_physical(s[0], *t)).collect();
    let closure = opts.tol.max(opts.integration.rtol.max(opts.integration.atol));
    anchoring_center(&traj.times, &path, closure)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    type C = Complex<f64>;

    struct Linear {
        a: C,
        b: C,
        forcing: C,
    }

    impl PlanarFlow<f64> for Linear {
        fn velocity(&self, z: C, _t: f64) -> C {
            self.a * z + self.b * z.conj() + self.forcing
        }
        fn wirtinger(&self, _z: C, _t: f64) -> (C, C) {
            (self.a, self.b)
        }
    }

    #[test]
    fn linear_return_map_closed_form() {
        let flow = Linear { a: Complex::new(-0.05, 0.02), b: Complex::new(0.0, 0.0), forcing: Complex::new(0.0, 0.0) };
        let tol = Tolerance::new(1e-12);
        let z0 = Complex::new(0.3, -0.7);
        let exact = (flow.a * 2.0 * PI).exp() * z0;
        assert!((time2pi_map(&flow, z0, tol).unwrap() - exact).norm() < 1e-10);
        let w = monodromy(&flow, z0, tol).unwrap();
        let e = (flow.a * 2.0 * PI).exp();
        let mut found = [w[0], w[1]];
        found.sort_by(|x, y| x.im.partial_cmp(&y.im).unwrap());
        assert!((found[0] - e.conj()).norm() < 1e-10);
        assert!((found[1] - e).norm() < 1e-10);
    }

    #[test]
    fn eigenvalues_of_known_matrices() {
        let w = eigenvalues2::<f64>(&[[2.0, 0.0], [0.0, 3.0]]);
        assert!((w[0].re - 3.0).abs() < 1e-15 && (w[1].re - 2.0).abs() < 1e-15);
        let w = eigenvalues2::<f64>(&[[0.0, -1.0], [1.0, 0.0]]);
        assert!((w[0] - Complex::new(0.0, 1.0)).norm() < 1e-15);
        let w = eigenvalues2::<f64>(&[[1.0, 1e-9], [0.0, 1.0 + 1e-12]]);
        assert!((w[0].re - 1.0).abs() < 1e-11 && (w[1].re - 1.0).abs() < 1e-11);
    }

    #[test]
    fn newton_finds_the_shifted_fixed_point() {
        let flow = Linear { a: Complex::new(-0.1, 0.0), b: Complex::new(0.02, 0.01), forcing: Complex::new(0.01, -0.03) };
        let opts = NewtonOptions::new(1e-11);
        let r = newton_fixed_point(&flow, Complex::new(1.0, 1.0), &opts).unwrap();
        // Equilibrium of the autonomous linear flow.
        let g = -flow.forcing;
        let (a, b) = (flow.a, flow.b);
        let z = (g * a.conj() - b * g.conj()) / (a.norm_sqr() - b.norm_sqr());
        assert!((r.z_star - z).norm() < 1e-9);
        assert!((r.anchor_center - z).norm() < 1e-9);
        assert_eq!(r.classification, Classification::Anchoring);
    }

    #[test]
    fn identity_map_is_degenerate() {
        let flow = Linear { a: Complex::new(0.0, 0.0), b: Complex::new(0.0, 0.0), forcing: Complex::new(0.0, 0.0) };
        let opts = NewtonOptions::new(1e-10);
        let r = newton_fixed_point(&flow, Complex::new(0.1, 0.1), &opts);
        assert!(matches!(r, Err(Error::Degenerate(_))));
        let drift = Linear { forcing: Complex::new(1e-3, 0.0), ..flow };
        assert!(matches!(newton_fixed_point(&drift, Complex::new(0.0, 0.0), &opts), Err(Error::Degenerate(_))));
    }

    #[test]
    fn classification_rules() {
        let c = |r: f64| Complex::new(r, 0.0);
        assert_eq!(Classification::from_multipliers(&[c(0.5), c(0.9)], 1e-6), Classification::Anchoring);
        assert_eq!(Classification::from_multipliers(&[c(1.5), c(1.1)], 1e-6), Classification::Repelling);
        assert_eq!(Classification::from_multipliers(&[c(0.5), c(1.1)], 1e-6), Classification::NonHyperbolic);
        assert_eq!(Classification::from_multipliers(&[c(1.0 - 1e-7), c(0.5)], 1e-6), Classification::NonHyperbolic);
        assert_eq!("repelling".parse::<Classification>().unwrap(), Classification::Repelling);
        assert!("stable".parse::<Classification>().is_err());
    }

    #[test]
    fn anchoring_center_examples() {
        let times = uniform_times(0.0, 2.0 * PI, 256);
        let v = Complex::new(0.7, -0.4);
        let p0 = Complex::new(1.0, 2.0);
        let i = Complex::new(0.0, 1.0);
        let orbit: Vec<C> = times.iter().map(|t| p0 - i * v * (Complex::new(t.cos(), t.sin()) - 1.0)).collect();
        assert!((anchoring_center(&times, &orbit, 1e-12).unwrap() - (p0 + i * v)).norm() < 1e-13);
        let rest: Vec<C> = times.iter().map(|t| -i * v * Complex::new(t.cos(), t.sin())).collect();
        assert!(anchoring_center(&times, &rest, 1e-12).unwrap().norm() < 1e-13);
        let constant = vec![Complex::new(3.0, -1.0); times.len()];
        assert!((anchoring_center(&times, &constant, 1e-12).unwrap() - Complex::new(3.0, -1.0)).norm() < 1e-13);
        let open: Vec<C> = times.iter().map(|t| Complex::new(*t, 0.0)).collect();
        assert!(matches!(anchoring_center(&times, &open, 1e-8), Err(Error::NotPeriodic(_))));
        assert!(matches!(anchoring_center(&times[..10], &orbit[..10], 1e-8), Err(Error::BadSpan)));
    }
}
