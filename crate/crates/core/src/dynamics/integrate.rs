//! Dormand–Prince 5(4) with the fourth-order continuous extension.
//!
//! The state is a fixed-size array of complex numbers so that an orbit and its
//! variational equations can be carried together.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::num::{cst, Real};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Step-size control settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance<T> {
    pub rtol: T,
    pub atol: T,
    pub max_steps: usize,
    /// Abort with [`Error::Escape`] once the first state component leaves this disc.
    pub escape_radius: Option<T>,
}

impl<T: Real> Tolerance<T> {
    pub fn new(tol: T) -> Self {
        Self { rtol: tol, atol: tol, max_steps: 1_000_000, escape_radius: None }
    }

    pub fn with_escape(mut self, radius: T) -> Self {
        self.escape_radius = Some(radius);
        self
    }
}

/// Counters from one integration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// States sampled at the requested times.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T, const K: usize> {
    pub times: Vec<T>,
    pub states: Vec<[Complex<T>; K]>,
    pub stats: StepStats,
}

impl<T: Real, const K: usize> Trajectory<T, K> {
    /// First state component at each sample.
    pub fn component(&self, k: usize) -> Vec<Complex<T>> {
        self.states.iter().map(|s| s[k]).collect()
    }

    pub fn last(&self) -> Option<&[Complex<T>; K]> {
        self.states.last()
    }
}

type State<T, const K: usize> = [Complex<T>; K];

fn axpy<T: Real, const K: usize>(y: &State<T, K>, h: T, terms: &[(f64, &State<T, K>)]) -> State<T, K> {
    let mut out = *y;
    for (a, k) in terms {
        let ha = h * cst::<T>(*a);
        for (o, ki) in out.iter_mut().zip(k.iter()) {
            *o += ki * ha;
        }
    }
    out
}

fn error_norm<T: Real, const K: usize>(err: &State<T, K>, y0: &State<T, K>, y1: &State<T, K>, tol: &Tolerance<T>) -> T {
    let mut sum = T::zero();
    for i in 0..K {
        let sre = tol.atol + tol.rtol * y0[i].re.abs().max(y1[i].re.abs());
        let sim = tol.atol + tol.rtol * y0[i].im.abs().max(y1[i].im.abs());
        sum += (err[i].re / sre).powi(2) + (err[i].im / sim).powi(2);
    }
    (sum / cst::<T>(2.0 * K as f64)).sqrt()
}

fn initial_step<T: Real, const K: usize, F>(f: &mut F, t0: T, y0: &State<T, K>, f0: &State<T, K>, span: T, tol: &Tolerance<T>) -> T
where
    F: FnMut(T, &State<T, K>) -> State<T, K>,
{
    let zero = [Complex::new(T::zero(), T::zero()); K];
    let scale = |y: &State<T, K>, v: &State<T, K>| error_norm(v, y, y, tol);
    let d0 = scale(y0, y0);
    let d1 = scale(y0, f0);
    let small: T = cst(1e-5);
    let mut h0 = if d0 < small || d1 < small { cst(1e-6) } else { cst::<T>(0.01) * d0 / d1 };
    h0 = h0.min(span);
    let y1 = axpy(y0, h0, &[(1.0, f0)]);
    let f1 = f(t0 + h0, &y1);
    let mut diff = zero;
    for i in 0..K {
        diff[i] = f1[i] - f0[i];
    }
    let d2 = scale(y0, &diff) / h0;
    let h1 = if d1.max(d2) <= cst(1e-15) {
        (h0 * cst(1e-3)).max(cst(1e-6))
    } else {
        (cst::<T>(0.01) / d1.max(d2)).powf(cst(0.2))
    };
    (cst::<T>(100.0) * h0).min(h1).min(span)
}

/// Integrates `y' = f(t, y)` from `t0`, reporting the state at every entry of
/// `samples` (non-decreasing, all `>= t0`). The last sample is the final time.
pub fn integrate_dense<T, const K: usize, F>(
    mut f: F,
    y0: State<T, K>,
    t0: T,
    samples: &[T],
    tol: Tolerance<T>,
) -> Result<Trajectory<T, K>>
where
    T: Real,
    F: FnMut(T, &State<T, K>) -> State<T, K>,
{
    let mut out = Trajectory { times: Vec::with_capacity(samples.len()), states: Vec::with_capacity(samples.len()), stats: StepStats::default() };
    let Some(&t_end) = samples.last() else {
        return Ok(out);
    };
    if !(tol.rtol > T::zero() && tol.atol > T::zero()) {
        return Err(Error::Config("integration tolerance must be positive".into()));
    }
    if samples.windows(2).any(|w| w[1] < w[0]) || samples[0] < t0 {
        return Err(Error::Config("sample times must be non-decreasing and start at or after t0".into()));
    }
    let mut next = 0;
    while next < samples.len() && samples[next] == t0 {
        out.times.push(t0);
        out.states.push(y0);
        next += 1;
    }
    if next == samples.len() {
        return Ok(out);
    }

    let span = t_end - t0;
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    out.stats.evaluations += 1;
    let mut h = initial_step(&mut f, t0, &y0, &k1, span, &tol);
    out.stats.evaluations += 1;
    let h_min = span * cst(1e-14);
    let (safety, fac_min, fac_max): (T, T, T) = (cst(0.9), cst(0.2), cst(5.0));
    let mut last_rejected = false;

    loop {
        if out.stats.accepted + out.stats.rejected >= tol.max_steps {
            return Err(Error::TooManySteps(tol.max_steps));
        }
        if h < h_min {
            return Err(Error::StepUnderflow { t: t.to_f64().unwrap_or(f64::NAN), h: h.to_f64().unwrap_or(f64::NAN) });
        }
        let finishing = t + h >= t_end;
        if finishing {
            h = t_end - t;
        }

        let k2 = f(t + h * cst(C2), &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(t + h * cst(C3), &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + h * cst(C4), &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(t + h * cst(C5), &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(t + h, &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y1 = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(t + h, &y1);
        out.stats.evaluations += 6;

        let err = axpy(
            &[Complex::new(T::zero(), T::zero()); K],
            h,
            &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)],
        );
        let en = error_norm(&err, &y, &y1, &tol);
        if !en.is_finite() {
            if y1.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) && h <= h_min {
                return Err(Error::NonFinite(t.to_f64().unwrap_or(f64::NAN)));
            }
            h *= fac_min;
            out.stats.rejected += 1;
            last_rejected = true;
            continue;
        }

        if en <= T::one() {
            let t1 = if finishing { t_end } else { t + h };
            // Dense output between t and t1.
            let mut rcont: Option<[State<T, K>; 5]> = None;
            while next < samples.len() && samples[next] <= t1 {
                let ts = samples[next];
                let state = if ts == t1 {
                    y1
                } else {
                    let r = rcont.get_or_insert_with(|| continuous_coefficients(&y, &y1, &k1, &k3, &k4, &k5, &k6, &k7, h));
                    interpolate(r, (ts - t) / h)
                };
                out.times.push(ts);
                out.states.push(state);
                next += 1;
            }
            if let Some(r) = tol.escape_radius {
                if y1[0].norm() > r {
                    return Err(Error::Escape { t: t1.to_f64().unwrap_or(f64::NAN), radius: r.to_f64().unwrap_or(f64::NAN) });
                }
            }
            t = t1;
            y = y1;
            k1 = k7;
            out.stats.accepted += 1;
            if finishing || next == samples.len() {
                return Ok(out);
            }
            let mut fac = safety * en.powf(cst(-0.2));
            fac = fac.min(fac_max).max(fac_min);
            if last_rejected {
                fac = fac.min(T::one());
            }
            h *= fac;
            last_rejected = false;
        } else {
            let fac = (safety * en.powf(cst(-0.2))).max(fac_min);
            h *= fac;
            out.stats.rejected += 1;
            last_rejected = true;
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn continuous_coefficients<T: Real, const K: usize>(
    y0: &State<T, K>,
    y1: &State<T, K>,
    k1: &State<T, K>,
    k3: &State<T, K>,
    k4: &State<T, K>,
    k5: &State<T, K>,
    k6: &State<T, K>,
    k7: &State<T, K>,
    h: T,
) -> [State<T, K>; 5] {
    let zero = Complex::new(T::zero(), T::zero());
    let mut r = [[zero; K]; 5];
    for i in 0..K {
        let ydiff = y1[i] - y0[i];
        let bspl = k1[i] * h - ydiff;
        r[0][i] = y0[i];
        r[1][i] = ydiff;
        r[2][i] = bspl;
        r[3][i] = ydiff - k7[i] * h - bspl;
        r[4][i] = (k1[i] * cst::<T>(D1) + k3[i] * cst::<T>(D3) + k4[i] * cst::<T>(D4) + k5[i] * cst::<T>(D5) + k6[i] * cst::<T>(D6) + k7[i] * cst::<T>(D7)) * h;
    }
    r
}

fn interpolate<T: Real, const K: usize>(r: &[State<T, K>; 5], theta: T) -> State<T, K> {
    let theta1 = T::one() - theta;
    let mut out = r[0];
    for i in 0..K {
        out[i] = r[0][i] + (r[1][i] + (r[2][i] + (r[3][i] + r[4][i] * theta1) * theta) * theta1) * theta;
    }
    out
}

/// Integrates from `t0` to `t1` and returns only the end state.
pub fn integrate_to<T, const K: usize, F>(f: F, y0: State<T, K>, t0: T, t1: T, tol: Tolerance<T>) -> Result<(State<T, K>, StepStats)>
where
    T: Real,
    F: FnMut(T, &State<T, K>) -> State<T, K>,
{
    if !(t1 > t0) {
        return Err(Error::BadSpan);
    }
    let traj = integrate_dense(f, y0, t0, &[t1], tol)?;
    Ok((traj.states[0], traj.stats))
}

/// `samples + 1` uniformly spaced times on `[t0, t1]`, both ends included.
pub fn uniform_times<T: Real>(t0: T, t1: T, samples: usize) -> Vec<T> {
    let n = samples.max(1);
    let dt = (t1 - t0) / cst(n as f64);
    (0..=n).map(|k| if k == n { t1 } else { t0 + dt * cst(k as f64) }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    type C = Complex<f64>;

    #[test]
    fn exponential_decay() {
        let tol = Tolerance::new(1e-10);
        let (y, stats) = integrate_to(|_, y: &[C; 1]| [-y[0]], [Complex::new(1.0, 0.0)], 0.0, 3.0, tol).unwrap();
        assert!((y[0].re - (-3.0f64).exp()).abs() < 1e-9);
        assert!(stats.accepted > 5);
    }

    #[test]
    fn unperturbed_wave_closed_form() {
        let tol = Tolerance::new(1e-11);
        let times = uniform_times(0.0, 2.0 * PI, 64);
        let traj = integrate_dense(|t, _: &[C; 1]| [Complex::new(t.cos(), t.sin())], [Complex::new(0.0, 0.0)], 0.0, &times, tol).unwrap();
        for (t, s) in traj.times.iter().zip(&traj.states) {
            let exact = Complex::new(0.0, -1.0) * (Complex::new(t.cos(), t.sin()) - 1.0);
            assert!((s[0] - exact).norm() < 1e-9, "t={t}");
        }
    }

    #[test]
    fn dense_output_is_fourth_order_between_steps() {
        // Loose tolerance forces long steps; interpolant errors must still be small.
        let tol = Tolerance::new(1e-6);
        let times: Vec<f64> = (0..=200).map(|k| k as f64 * 0.05).collect();
        let traj = integrate_dense(|_, y: &[C; 1]| [y[0] * Complex::new(0.0, 1.0)], [Complex::new(1.0, 0.0)], 0.0, &times, tol).unwrap();
        assert!(traj.stats.accepted < 200);
        for (t, s) in traj.times.iter().zip(&traj.states) {
            assert!((s[0] - Complex::new(t.cos(), t.sin())).norm() < 2e-5, "t={t}");
        }
    }

    #[test]
    fn continuous_extension_reproduces_cubic_polynomials() {
        // For y' = 3t^2 the interpolant is exact at every point of a step.
        let tol = Tolerance::new(1e-3);
        let times: Vec<f64> = (0..=40).map(|k| k as f64 * 0.05).collect();
        let traj = integrate_dense(|t, _: &[C; 1]| [Complex::new(3.0 * t * t, 0.0)], [Complex::new(0.0, 0.0)], 0.0, &times, tol).unwrap();
        for (t, s) in traj.times.iter().zip(&traj.states) {
            assert!((s[0].re - t.powi(3)).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn escape_and_bad_inputs() {
        let tol = Tolerance::new(1e-8).with_escape(10.0);
        let err = integrate_to(|_, y: &[C; 1]| [y[0]], [Complex::new(1.0, 0.0)], 0.0, 10.0, tol).unwrap_err();
        assert!(matches!(err, Error::Escape { .. }));
        assert!(matches!(integrate_to(|_, y: &[C; 1]| [y[0]], [Complex::new(1.0, 0.0)], 1.0, 1.0, tol), Err(Error::BadSpan)));
        assert!(integrate_dense(|_, y: &[C; 1]| [y[0]], [Complex::new(1.0, 0.0)], 1.0, &[0.5], tol).is_err());
    }

    #[test]
    fn stiff_budget_exhaustion() {
        let mut tol = Tolerance::new(1e-12);
        tol.max_steps = 50;
        let err = integrate_to(|_, y: &[C; 1]| [y[0] * -1e6], [Complex::new(1.0, 0.0)], 0.0, 1.0, tol).unwrap_err();
        assert!(matches!(err, Error::TooManySteps(50)));
    }

    #[test]
    fn single_precision_runs() {
        let tol = Tolerance::new(1e-5f32);
        let (y, _) = integrate_to(|_, y: &[Complex<f32>; 1]| [-y[0]], [Complex::new(1.0f32, 0.0)], 0.0, 1.0, tol).unwrap();
        assert!((y[0].re - (-1.0f32).exp()).abs() < 1e-4);
    }
}
