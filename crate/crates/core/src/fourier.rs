//! Truncated Fourier series on `2pi/j`-periodic functions, the operator
//! `Y(u) = i u + u'`, and the reference paths `F_G` around which the bundle
//! equations are recentered.
//!
//! A series with base frequency `j` and truncation `M` represents
//! `sum_{|m| <= M} c_m e^{i m j t}`. On such a series `Y` is diagonal with symbol
//! `i (1 + m j)`; it is singular only on the mode `m = -1` when `j = 1`.

use num_complex::Complex;

use crate::bundle::HFamily;
use crate::error::{Error, Result};
use crate::num::{cis, cst, int, times_i, Field, Real};

/// Default Galerkin truncation.
pub const DEFAULT_MODES: usize = 32;
/// Picard iteration budget for [`solve_u`].
pub const MAX_PICARD_ITERATIONS: usize = 200;
/// Largest acceptable magnitude of the outermost retained modes.
pub const TAIL_WARNING: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct FourierSeries<S> {
    base_freq: u32,
    truncation: usize,
    /// `coeffs[m + M]` holds `c_m`.
    coeffs: Vec<Complex<S>>,
}

impl<S: Field> FourierSeries<S> {
    /// The zero series. Panics if `base_freq == 0`.
    pub fn zeros(base_freq: u32, truncation: usize) -> Self {
        assert!(base_freq >= 1, "base frequency must be at least 1");
        Self {
            base_freq,
            truncation,
            coeffs: vec![Complex::new(S::zero(), S::zero()); 2 * truncation + 1],
        }
    }

    /// Builds a series from `(m, c_m)` pairs; repeated modes accumulate.
    pub fn from_modes<I>(base_freq: u32, truncation: usize, modes: I) -> Result<Self>
    where
        I: IntoIterator<Item = (i64, Complex<S>)>,
    {
        if base_freq == 0 {
            return Err(Error::Config("base frequency must be at least 1".into()));
        }
        let mut s = Self::zeros(base_freq, truncation);
        for (m, c) in modes {
            let idx = s.index(m).ok_or(Error::ModeOutOfRange { mode: m, truncation })?;
            s.coeffs[idx] = s.coeffs[idx].clone() + c;
        }
        Ok(s)
    }

    /// Constant series `c_0 = c`.
    pub fn constant(base_freq: u32, truncation: usize, c: Complex<S>) -> Self {
        let mut s = Self::zeros(base_freq, truncation);
        s.coeffs[truncation] = c;
        s
    }

    pub fn base_freq(&self) -> u32 {
        self.base_freq
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    fn index(&self, m: i64) -> Option<usize> {
        let tr = self.truncation as i64;
        (-tr..=tr).contains(&m).then(|| (m + tr) as usize)
    }

    /// `c_m`, zero outside the truncation.
    pub fn coeff(&self, m: i64) -> Complex<S> {
        match self.index(m) {
            Some(i) => self.coeffs[i].clone(),
            None => Complex::new(S::zero(), S::zero()),
        }
    }

    pub fn set_coeff(&mut self, m: i64, c: Complex<S>) -> Result<()> {
        let idx = self
            .index(m)
            .ok_or(Error::ModeOutOfRange { mode: m, truncation: self.truncation })?;
        self.coeffs[idx] = c;
        Ok(())
    }

    /// `(m, c_m)` for every retained mode, in increasing `m`.
    pub fn modes(&self) -> impl Iterator<Item = (i64, &Complex<S>)> + '_ {
        let tr = self.truncation as i64;
        self.coeffs.iter().enumerate().map(move |(i, c)| (i as i64 - tr, c))
    }

    /// Same series with truncation `m`; modes beyond `m` are dropped.
    pub fn resized(&self, truncation: usize) -> Self {
        let mut s = Self::zeros(self.base_freq, truncation);
        for (m, c) in self.modes() {
            if let Some(i) = s.index(m) {
                s.coeffs[i] = c.clone();
            }
        }
        s
    }

    /// The integer `1 + m j`; `Y` acts on mode `m` as multiplication by `i (1 + m j)`.
    pub fn y_symbol(&self, m: i64) -> i64 {
        1 + m * self.base_freq as i64
    }

    pub fn scale(&self, a: &S) -> Self {
        let mut s = self.clone();
        for c in &mut s.coeffs {
            *c = Complex::new(c.re.clone() * a.clone(), c.im.clone() * a.clone());
        }
        s
    }

    pub fn map_coeffs(&self, f: impl Fn(i64, &Complex<S>) -> Complex<S>) -> Self {
        let tr = self.truncation as i64;
        let mut s = self.clone();
        for (i, c) in s.coeffs.iter_mut().enumerate() {
            *c = f(i as i64 - tr, c);
        }
        s
    }

    /// Coefficient-wise sum; the result has the larger truncation.
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.base_freq, other.base_freq, "base frequencies differ");
        let mut s = self.resized(self.truncation.max(other.truncation));
        for (m, c) in other.modes() {
            let i = s.index(m).expect("within the larger truncation");
            s.coeffs[i] = s.coeffs[i].clone() + c.clone();
        }
        s
    }

    /// `Y(u) = i u + u'`: `c_m -> i (1 + m j) c_m`.
    pub fn y_apply(&self) -> Self {
        self.map_coeffs(|m, c| {
            let k: S = int(self.y_symbol(m));
            times_i(&Complex::new(c.re.clone() * k.clone(), c.im.clone() * k))
        })
    }

    /// `Y^{-1}`: `c_m -> c_m / (i (1 + m j))`.
    ///
    /// Fails when `j = 1` and `c_{-1} != 0`, the one mode in the kernel of `Y`.
    pub fn y_invert(&self) -> Result<Self> {
        let mut s = self.clone();
        let tr = self.truncation as i64;
        for (i, c) in s.coeffs.iter_mut().enumerate() {
            let k = self.y_symbol(i as i64 - tr);
            if k == 0 {
                if !(c.re.is_zero() && c.im.is_zero()) {
                    return Err(Error::SingularOperator);
                }
                continue;
            }
            let k: S = int(k);
            // (a + ib) / (ik) = b/k - i a/k
            *c = Complex::new(c.im.clone() / k.clone(), S::zero() - c.re.clone() / k);
        }
        Ok(s)
    }
}

impl<T: Real> FourierSeries<T> {
    /// `2pi / j`.
    pub fn period(&self) -> T {
        T::TAU() / cst(self.base_freq as f64)
    }

    /// `sum_m c_m e^{i m j t}`, with `t` reduced modulo the period first.
    pub fn eval(&self, t: T) -> Complex<T> {
        let period = self.period();
        let t = t - (t / period).floor() * period;
        let theta = t * cst(self.base_freq as f64);
        let step = cis(theta);
        // Horner in e^{i j t}, then shift by e^{-i M j t}.
        let mut acc = Complex::new(T::zero(), T::zero());
        for c in self.coeffs.iter().rev() {
            acc = acc * step + c;
        }
        acc * cis(-theta * cst(self.truncation as f64))
    }

    /// Termwise time derivative, `c_m -> i m j c_m`.
    pub fn derivative(&self) -> Self {
        let j = self.base_freq as f64;
        self.map_coeffs(|m, c| times_i(c) * cst::<T>(m as f64 * j))
    }

    /// `max(|c_M|, |c_{-M}|)`.
    pub fn tail(&self) -> T {
        let first = self.coeffs.first().map(|c| c.norm()).unwrap_or_else(T::zero);
        let last = self.coeffs.last().map(|c| c.norm()).unwrap_or_else(T::zero);
        first.max(last)
    }

    /// `max_m |c_m|`.
    pub fn max_coeff(&self) -> T {
        self.coeffs.iter().map(|c| c.norm()).fold(T::zero(), T::max)
    }

    /// `sum_m |c_m|`, an upper bound on the sup norm.
    pub fn l1_norm(&self) -> T {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }
}

/// Uniform collocation grid for a fixed `(j, M)`, with cached twiddle factors.
///
/// Samples sit at `t_k = k P / N`, `P = 2pi/j`, with `N = 4M + 1` points.
#[derive(Debug, Clone)]
pub struct Collocation<T> {
    base_freq: u32,
    truncation: usize,
    nodes: Vec<T>,
    /// `twiddle[k] = e^{2 pi i k / N}`.
    twiddle: Vec<Complex<T>>,
}

impl<T: Real> Collocation<T> {
    pub fn new(base_freq: u32, truncation: usize) -> Self {
        let n = 4 * truncation + 1;
        let period = T::TAU() / cst(base_freq as f64);
        let nodes = (0..n)
            .map(|k| period * cst(k as f64) / cst(n as f64))
            .collect();
        let twiddle = (0..n)
            .map(|k| cis(T::TAU() * cst(k as f64) / cst(n as f64)))
            .collect();
        Self { base_freq, truncation, nodes, twiddle }
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn phase(&self, m: i64, k: usize) -> Complex<T> {
        let n = self.nodes.len() as i64;
        self.twiddle[(m * k as i64).rem_euclid(n) as usize]
    }

    /// Values of `s` at the nodes.
    pub fn sample(&self, s: &FourierSeries<T>) -> Vec<Complex<T>> {
        debug_assert_eq!(s.base_freq, self.base_freq);
        (0..self.nodes.len())
            .map(|k| s.modes().map(|(m, c)| c * self.phase(m, k)).sum())
            .collect()
    }

    /// Discrete Fourier projection `Pi_M` of nodal values.
    pub fn project(&self, samples: &[Complex<T>]) -> FourierSeries<T> {
        assert_eq!(samples.len(), self.nodes.len(), "sample count must match the grid");
        let inv_n: T = T::one() / cst(samples.len() as f64);
        let mut s = FourierSeries::zeros(self.base_freq, self.truncation);
        let tr = self.truncation as i64;
        for (i, c) in s.coeffs.iter_mut().enumerate() {
            let m = i as i64 - tr;
            let acc: Complex<T> = samples
                .iter()
                .enumerate()
                .map(|(k, f)| f * self.phase(-m, k))
                .sum();
            *c = acc * inv_n;
        }
        s
    }

    /// Sup norm over the nodes.
    pub fn sup_norm(&self, s: &FourierSeries<T>) -> T {
        self.sample(s).into_iter().map(|z| z.norm()).fold(T::zero(), T::max)
    }
}

/// A periodic path `F(t) = e^{it} B(t)`, where the bracket `B` is a Fourier
/// series with base frequency `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferencePath<T> {
    bracket: FourierSeries<T>,
    bracket_y: FourierSeries<T>,
    correction: FourierSeries<T>,
}

impl<T: Real> ReferencePath<T> {
    pub fn new(bracket: FourierSeries<T>, correction: FourierSeries<T>) -> Self {
        let bracket_y = bracket.y_apply();
        Self { bracket, bracket_y, correction }
    }

    /// `F(t)`.
    pub fn eval(&self, t: T) -> Complex<T> {
        cis(t) * self.bracket.eval(t)
    }

    /// `F(t) e^{-it}`, evaluated without the rotation round trip.
    pub fn bracket_at(&self, t: T) -> Complex<T> {
        self.bracket.eval(t)
    }

    /// `dF/dt = e^{it} Y(B)(t)`.
    pub fn derivative(&self, t: T) -> Complex<T> {
        cis(t) * self.bracket_y.eval(t)
    }

    pub fn bracket(&self) -> &FourierSeries<T> {
        &self.bracket
    }

    /// The periodic correction `U` (zero for the `j = 1` path).
    pub fn correction(&self) -> &FourierSeries<T> {
        &self.correction
    }
}

/// `-iv + eps sum_m g_m e^{imjt} / (i (m j + 1))`, omitting the resonant mode.
fn offset_series<T: Real>(v: Complex<T>, g: &FourierSeries<T>, epsilon: T, truncation: usize) -> FourierSeries<T> {
    let mut scaled = g.resized(truncation).scale(&epsilon);
    if g.base_freq() == 1 {
        scaled
            .set_coeff(-1, Complex::new(T::zero(), T::zero()))
            .expect("mode -1 is retained whenever the truncation is positive");
    }
    let inverted = scaled.y_invert().expect("the resonant mode has been removed");
    inverted.add(&FourierSeries::constant(g.base_freq(), truncation, -times_i(&v)))
}

/// Reference path for `j = 1`:
/// `F_G(t) = e^{it} [ -iv + eps sum_{m != -1} g_m e^{imt} / (i (m+1)) ]`.
pub fn build_fg_j1<T: Real>(v: Complex<T>, g: &FourierSeries<T>, epsilon: T) -> Result<ReferencePath<T>> {
    if g.base_freq() != 1 {
        return Err(Error::Unsupported(format!(
            "j = 1 reference path needs base frequency 1, got {}",
            g.base_freq()
        )));
    }
    let tr = g.truncation().max(1);
    let bracket = offset_series(v, g, epsilon, tr);
    Ok(ReferencePath::new(bracket, FourierSeries::zeros(1, tr)))
}

/// The periodic correction `U` and how it was obtained.
#[derive(Debug, Clone)]
pub struct Correction<T> {
    pub u: FourierSeries<T>,
    pub iterations: usize,
    pub residual: T,
}

/// Solves `Y(U) = mu1 Pi_M H1(U - iv + eps sum_m g_m e^{imjt}/(i(mj+1)))` for `j > 1`.
///
/// Picard iteration `U <- Y^{-1}(mu1 Pi_M H1(...))` from `U = 0`, with `H1`
/// applied pointwise on the `4M+1` collocation grid. The returned residual is the
/// grid sup norm of `Y(U) - mu1 Pi_M H1(...)`.
pub fn solve_u<T: Real>(
    v: Complex<T>,
    g: &FourierSeries<T>,
    h1: &HFamily<T>,
    epsilon: T,
    mu1: T,
    truncation: usize,
    tol: T,
) -> Result<Correction<T>> {
    let j = g.base_freq();
    if j < 2 {
        return Err(Error::Unsupported("the periodic correction needs base frequency > 1".into()));
    }
    if truncation < g.truncation() {
        return Err(Error::Config(format!(
            "truncation {truncation} is below the forcing truncation {}",
            g.truncation()
        )));
    }
    if tol.partial_cmp(&T::zero()) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::Config("solve tolerance must be positive".into()));
    }
    let grid = Collocation::new(j, truncation);
    let offset = grid.sample(&offset_series(v, g, epsilon, truncation));
    let mut u = FourierSeries::zeros(j, truncation);
    let mut residual = T::infinity();
    for iteration in 0..MAX_PICARD_ITERATIONS {
        let u_nodes = grid.sample(&u);
        let forcing: Vec<Complex<T>> = offset
            .iter()
            .zip(&u_nodes)
            .map(|(o, w)| h1.eval(o + w, mu1) * mu1)
            .collect();
        let target = grid.project(&forcing);
        let defect = u.y_apply().add(&target.scale(&-T::one()));
        residual = grid.sup_norm(&defect);
        if !residual.is_finite() {
            break;
        }
        if residual <= tol {
            if u.tail() > cst(TAIL_WARNING) {
                log::warn!(
                    "periodic correction tail |c_M| = {:e} exceeds {TAIL_WARNING:e}; raise the truncation",
                    u.tail().to_f64().unwrap_or(f64::NAN)
                );
            }
            return Ok(Correction { u, iterations: iteration, residual });
        }
        u = target.y_invert()?;
    }
    Err(Error::NoSolution {
        iterations: MAX_PICARD_ITERATIONS,
        residual: residual.to_f64().unwrap_or(f64::NAN),
    })
}

/// Reference path for `j > 1`:
/// `F_G(t) = e^{it} [ -iv + eps sum_m g_m e^{imjt}/(i(mj+1)) + U(t) ]`.
pub fn build_fg_jstar<T: Real>(
    v: Complex<T>,
    g: &FourierSeries<T>,
    h1: &HFamily<T>,
    epsilon: T,
    mu1: T,
    truncation: usize,
    tol: T,
) -> Result<ReferencePath<T>> {
    let correction = solve_u(v, g, h1, epsilon, mu1, truncation, tol)?;
    let bracket = offset_series(v, g, epsilon, truncation).add(&correction.u);
    Ok(ReferencePath::new(bracket, correction.u))
}
