//! Parameter model and right-hand sides of the center-bundle equations
//!
//! ```text
//! p' = e^{it} [ v + eps G(t) + sum_j mu_j H_j((p - xi_j) e^{-it}, c.c., mu_j) ]
//! ```
//!
//! with time already rescaled so that the phase is `t`. Translational
//! perturbations `H_j` are drawn from [`HFamily`]; the rotational forcing `G` is a
//! [`FourierSeries`] with base frequency `j*`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;

use crate::dynamics::PlanarFlow;
use crate::error::{Error, Result};
use crate::fourier::{build_fg_j1, build_fg_jstar, FourierSeries, ReferencePath};
use crate::num::{cis, cst, is_finite, times_i, Real};

/// Names of the shipped perturbation families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HKind {
    Linear,
    AffineLinear,
    SaturatedPolynomial,
    RadialGaussian,
}

impl HKind {
    pub fn name(self) -> &'static str {
        match self {
            HKind::Linear => "linear",
            HKind::AffineLinear => "affine-linear",
            HKind::SaturatedPolynomial => "saturated-polynomial",
            HKind::RadialGaussian => "radial-gaussian",
        }
    }
}

impl fmt::Display for HKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(HKind::Linear),
            "affine-linear" => Ok(HKind::AffineLinear),
            "saturated-polynomial" => Ok(HKind::SaturatedPolynomial),
            "radial-gaussian" => Ok(HKind::RadialGaussian),
            other => Err(Error::Config(format!("unknown perturbation kind `{other}`"))),
        }
    }
}

/// A translational perturbation `H(w, conj w, mu)`.
///
/// None of the families depends on `mu`; the argument is kept so that every
/// family has the same signature as the bundle equations.
#[derive(Debug, Clone, PartialEq)]
pub enum HFamily<T> {
    /// `alpha w + beta conj(w)`. Unbounded.
    Linear { alpha: Complex<T>, beta: Complex<T> },
    /// `offset + alpha w + beta conj(w)`. Unbounded.
    AffineLinear { offset: Complex<T>, alpha: Complex<T>, beta: Complex<T> },
    /// `sum_k a_k w^k / (1 + |w|^2/s^2)^d` with `2d >= deg`, bounded by `sum_k |a_k| s^k`.
    SaturatedPolynomial { coeffs: Vec<Complex<T>>, scale: T, power: u32 },
    /// `c exp(-|w|^2/s^2)`.
    RadialGaussian { amplitude: Complex<T>, scale: T },
}

impl<T: Real> HFamily<T> {
    pub fn linear(alpha: Complex<T>, beta: Complex<T>) -> Self {
        HFamily::Linear { alpha, beta }
    }

    pub fn affine(offset: Complex<T>, alpha: Complex<T>, beta: Complex<T>) -> Self {
        HFamily::AffineLinear { offset, alpha, beta }
    }

    /// `power` defaults to `deg + 1`, which also makes the family decay at infinity.
    pub fn saturated_polynomial(coeffs: Vec<Complex<T>>, scale: T, power: Option<u32>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Config("saturated polynomial needs at least one coefficient".into()));
        }
        if !(scale > T::zero() && scale.is_finite()) {
            return Err(Error::Config("saturation scale must be positive".into()));
        }
        let degree = coeffs.len() as u32 - 1;
        let power = power.unwrap_or(degree + 1);
        if 2 * power < degree {
            return Err(Error::Config(format!(
                "saturation power {power} cannot bound a degree-{degree} polynomial"
            )));
        }
        Ok(HFamily::SaturatedPolynomial { coeffs, scale, power })
    }

    pub fn radial_gaussian(amplitude: Complex<T>, scale: T) -> Result<Self> {
        if !(scale > T::zero() && scale.is_finite()) {
            return Err(Error::Config("gaussian scale must be positive".into()));
        }
        Ok(HFamily::RadialGaussian { amplitude, scale })
    }

    /// Builds a family from its configuration-file description.
    ///
    /// Coefficient layouts: linear `[alpha, beta?]`; affine-linear
    /// `[alpha, beta, offset]`; saturated-polynomial `[a_0, a_1, ...]`;
    /// radial-gaussian `[amplitude]`.
    pub fn from_parts(
        kind: &str,
        coefficients: &[Complex<T>],
        saturation_scale: Option<T>,
        power: Option<u32>,
    ) -> Result<Self> {
        let kind: HKind = kind.parse()?;
        if coefficients.iter().any(|c| !is_finite(*c)) {
            return Err(Error::Config("perturbation coefficients must be finite".into()));
        }
        let zero = Complex::new(T::zero(), T::zero());
        let at = |i: usize| coefficients.get(i).copied().unwrap_or(zero);
        match kind {
            HKind::Linear => {
                if coefficients.is_empty() || coefficients.len() > 2 {
                    return Err(Error::Config("linear family takes [alpha] or [alpha, beta]".into()));
                }
                Ok(Self::linear(at(0), at(1)))
            }
            HKind::AffineLinear => {
                if coefficients.is_empty() || coefficients.len() > 3 {
                    return Err(Error::Config("affine-linear family takes [alpha, beta, offset]".into()));
                }
                Ok(Self::affine(at(2), at(0), at(1)))
            }
            HKind::SaturatedPolynomial => {
                let scale = saturation_scale
                    .ok_or_else(|| Error::Config("saturated-polynomial needs saturation_scale".into()))?;
                Self::saturated_polynomial(coefficients.to_vec(), scale, power)
            }
            HKind::RadialGaussian => {
                if coefficients.len() != 1 {
                    return Err(Error::Config("radial-gaussian takes [amplitude]".into()));
                }
                let scale = saturation_scale
                    .ok_or_else(|| Error::Config("radial-gaussian needs saturation_scale".into()))?;
                Self::radial_gaussian(at(0), scale)
            }
        }
    }

    pub fn kind(&self) -> HKind {
        match self {
            HFamily::Linear { .. } => HKind::Linear,
            HFamily::AffineLinear { .. } => HKind::AffineLinear,
            HFamily::SaturatedPolynomial { .. } => HKind::SaturatedPolynomial,
            HFamily::RadialGaussian { .. } => HKind::RadialGaussian,
        }
    }

    /// `H(w, conj w, mu)`.
    pub fn eval(&self, w: Complex<T>, _mu: T) -> Complex<T> {
        match self {
            HFamily::Linear { alpha, beta } => alpha * w + beta * w.conj(),
            HFamily::AffineLinear { offset, alpha, beta } => offset + alpha * w + beta * w.conj(),
            HFamily::SaturatedPolynomial { coeffs, scale, power } => {
                let poly = horner(coeffs, w);
                let denom = T::one() + w.norm_sqr() / (*scale * *scale);
                poly / denom.powi(*power as i32)
            }
            HFamily::RadialGaussian { amplitude, scale } => {
                amplitude * (-w.norm_sqr() / (*scale * *scale)).exp()
            }
        }
    }

    /// Wirtinger derivatives `(dH/dw, dH/d conj w)`.
    pub fn wirtinger(&self, w: Complex<T>) -> (Complex<T>, Complex<T>) {
        match self {
            HFamily::Linear { alpha, beta } | HFamily::AffineLinear { alpha, beta, .. } => (*alpha, *beta),
            HFamily::SaturatedPolynomial { coeffs, scale, power } => {
                let s2 = *scale * *scale;
                let d: T = cst(*power as f64);
                let denom = T::one() + w.norm_sqr() / s2;
                let base = denom.powi(-(*power as i32));
                let poly = horner(coeffs, w);
                let dpoly = horner_derivative(coeffs, w);
                // d/dw (1 + w wbar/s^2)^{-d} = -d wbar/s^2 (1 + ...)^{-d-1}
                let shrink = -d * base / denom / s2;
                (dpoly * base + poly * w.conj() * shrink, poly * w * shrink)
            }
            HFamily::RadialGaussian { amplitude, scale } => {
                let s2 = *scale * *scale;
                let value = amplitude * (-w.norm_sqr() / s2).exp();
                (-value * w.conj() / s2, -value * w / s2)
            }
        }
    }

    /// A uniform bound on `|H|`, or `None` for the unbounded linear families.
    pub fn bound(&self) -> Option<T> {
        match self {
            HFamily::Linear { .. } | HFamily::AffineLinear { .. } => None,
            HFamily::SaturatedPolynomial { coeffs, scale, .. } => Some(
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, a)| a.norm() * scale.powi(k as i32))
                    .sum(),
            ),
            HFamily::RadialGaussian { amplitude, .. } => Some(amplitude.norm()),
        }
    }
}

fn horner<T: Real>(coeffs: &[Complex<T>], w: Complex<T>) -> Complex<T> {
    coeffs
        .iter()
        .rev()
        .fold(Complex::new(T::zero(), T::zero()), |acc, a| acc * w + a)
}

fn horner_derivative<T: Real>(coeffs: &[Complex<T>], w: Complex<T>) -> Complex<T> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(Complex::new(T::zero(), T::zero()), |acc, (k, a)| acc * w + a * cst::<T>(k as f64))
}

/// `sum_m g_m e^{imj t}`. The `eps` argument is accepted for symmetry with the
/// bundle equations; the coefficient table is fixed per run.
pub fn eval_g<T: Real>(spec: &PerturbationSpec<T>, t: T, _epsilon: T) -> Complex<T> {
    spec.g.eval(t)
}

/// `H(w, conj w, mu_j)`.
pub fn eval_h<T: Real>(family: &HFamily<T>, w: Complex<T>, mu_j: T) -> Complex<T> {
    family.eval(w, mu_j)
}

/// Drift, symmetry-breaking strengths and inhomogeneity sites.
#[derive(Debug, Clone, PartialEq)]
pub struct BundleParams<T> {
    pub v: Complex<T>,
    pub epsilon: T,
    pub mu: Vec<T>,
    pub xi: Vec<Complex<T>>,
    pub jstar: u32,
}

impl<T: Real> BundleParams<T> {
    pub fn new(v: Complex<T>, epsilon: T, mu: Vec<T>, xi: Vec<Complex<T>>, jstar: u32) -> Result<Self> {
        let p = Self { v, epsilon, mu, xi, jstar };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.jstar < 1 {
            return Err(Error::Config("jstar must be at least 1".into()));
        }
        if self.mu.len() != self.xi.len() {
            return Err(Error::Config(format!(
                "{} mu values for {} sites",
                self.mu.len(),
                self.xi.len()
            )));
        }
        if !is_finite(self.v) || !self.epsilon.is_finite() || self.mu.iter().any(|m| !m.is_finite()) {
            return Err(Error::Config("parameters must be finite".into()));
        }
        for (a, x) in self.xi.iter().enumerate() {
            if !is_finite(*x) {
                return Err(Error::Config("sites must be finite".into()));
            }
            if self.xi[..a].contains(x) {
                return Err(Error::Config(format!("site {} repeats an earlier site", a + 1)));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.mu.len()
    }
}

/// Rotational forcing table and the per-site translational families.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSpec<T> {
    pub g: FourierSeries<T>,
    pub h: Vec<HFamily<T>>,
}

/// Validated pairing of parameters and perturbations.
#[derive(Debug, Clone, PartialEq)]
pub struct BundleSystem<T> {
    params: BundleParams<T>,
    spec: PerturbationSpec<T>,
}

impl<T: Real> BundleSystem<T> {
    pub fn new(params: BundleParams<T>, spec: PerturbationSpec<T>) -> Result<Self> {
        params.validate()?;
        if spec.g.base_freq() != params.jstar {
            return Err(Error::Config(format!(
                "forcing has base frequency {} but jstar = {}",
                spec.g.base_freq(),
                params.jstar
            )));
        }
        if spec.h.len() != params.n() {
            return Err(Error::Config(format!(
                "{} perturbation families for {} sites",
                spec.h.len(),
                params.n()
            )));
        }
        Ok(Self { params, spec })
    }

    pub fn params(&self) -> &BundleParams<T> {
        &self.params
    }

    pub fn spec(&self) -> &PerturbationSpec<T> {
        &self.spec
    }

    /// Same system at another parameter point.
    pub fn with_strengths(&self, epsilon: T, mu: &[T]) -> Result<Self> {
        let mut params = self.params.clone();
        params.epsilon = epsilon;
        params.mu = mu.to_vec();
        Self::new(params, self.spec.clone())
    }

    /// Genericity constant `alpha_k = dH_k/dw (-iv, i conj v, 0)`.
    pub fn alpha(&self, k: usize) -> Complex<T> {
        self.spec.h[k].wirtinger(-times_i(&self.params.v)).0
    }

    /// `p'` of the bundle equations.
    pub fn rhs(&self, p: Complex<T>, t: T) -> Complex<T> {
        let rot = cis(t);
        let mut bracket = self.params.v + self.spec.g.eval(t) * self.params.epsilon;
        for ((h, mu), xi) in self.spec.h.iter().zip(&self.params.mu).zip(&self.params.xi) {
            bracket += h.eval((p - xi) * rot.conj(), *mu) * *mu;
        }
        rot * bracket
    }

    /// `(d p'/dp, d p'/d conj p)`.
    pub fn rhs_wirtinger(&self, p: Complex<T>, t: T) -> (Complex<T>, Complex<T>) {
        let rot = cis(t);
        let mut dz = Complex::new(T::zero(), T::zero());
        let mut dzbar = dz;
        for ((h, mu), xi) in self.spec.h.iter().zip(&self.params.mu).zip(&self.params.xi) {
            let (hw, hwbar) = h.wirtinger((p - xi) * rot.conj());
            dz += hw * *mu;
            dzbar += hwbar * rot * rot * *mu;
        }
        (dz, dzbar)
    }

    /// The reference path `F_G` for this parameter point (`n = 1`).
    pub fn reference_path(&self, truncation: usize, tol: T) -> Result<ReferencePath<T>> {
        if self.params.n() != 1 {
            return Err(Error::Unsupported(format!(
                "recentered coordinates need exactly one site, got {}",
                self.params.n()
            )));
        }
        let p = &self.params;
        if p.jstar == 1 {
            build_fg_j1(p.v, &self.spec.g, p.epsilon)
        } else {
            let tr = truncation.max(self.spec.g.truncation());
            build_fg_jstar(p.v, &self.spec.g, &self.spec.h[0], p.epsilon, p.mu[0], tr, tol)
        }
    }
}

impl<T: Real> PlanarFlow<T> for BundleSystem<T> {
    fn velocity(&self, p: Complex<T>, t: T) -> Complex<T> {
        self.rhs(p, t)
    }

    fn wirtinger(&self, p: Complex<T>, t: T) -> (Complex<T>, Complex<T>) {
        self.rhs_wirtinger(p, t)
    }
}

/// The bundle equations in the recentered coordinate `z = p - xi_1 - F_G(t)`.
///
/// For `j* = 1`: `z' = eps g_{-1} + mu_1 e^{it} H_1((z + F_G) e^{-it}, c.c., mu_1)`.
/// For `j* > 1`: `z' = mu_1 e^{it} [H_1((z + F_G) e^{-it}, ...) - H_1(F_G e^{-it}, ...)]`.
#[derive(Debug, Clone)]
pub struct TransformedSystem<T> {
    system: BundleSystem<T>,
    path: ReferencePath<T>,
    resonant_drift: Complex<T>,
}

impl<T: Real> TransformedSystem<T> {
    pub fn new(system: BundleSystem<T>, path: ReferencePath<T>) -> Result<Self> {
        if system.params.n() != 1 {
            return Err(Error::Unsupported(format!(
                "recentered coordinates need exactly one site, got {}",
                system.params.n()
            )));
        }
        let resonant_drift = if system.params.jstar == 1 {
            system.spec.g.coeff(-1) * system.params.epsilon
        } else {
            Complex::new(T::zero(), T::zero())
        };
        Ok(Self { system, path, resonant_drift })
    }

    /// Builds `F_G` for the system's parameter point and recenters.
    pub fn build(system: BundleSystem<T>, truncation: usize, tol: T) -> Result<Self> {
        let path = system.reference_path(truncation, tol)?;
        Self::new(system, path)
    }

    pub fn system(&self) -> &BundleSystem<T> {
        &self.system
    }

    pub fn path(&self) -> &ReferencePath<T> {
        &self.path
    }

    /// Right-hand side in the recentered coordinate.
    pub fn rhs_transformed(&self, z: Complex<T>, t: T) -> Complex<T> {
        let p = &self.system.params;
        let h = &self.system.spec.h[0];
        let mu = p.mu[0];
        let rot = cis(t);
        let base = self.path.bracket_at(t);
        let shifted = h.eval(z * rot.conj() + base, mu);
        if p.jstar == 1 {
            self.resonant_drift + rot * shifted * mu
        } else {
            rot * (shifted - h.eval(base, mu)) * mu
        }
    }

    /// `p` corresponding to `z` at time `t`.
    pub fn physical(&self, z: Complex<T>, t: T) -> Complex<T> {
        z + self.system.params.xi[0] + self.path.eval(t)
    }
}

impl<T: Real> PlanarFlow<T> for TransformedSystem<T> {
    fn velocity(&self, z: Complex<T>, t: T) -> Complex<T> {
        self.rhs_transformed(z, t)
    }

    fn wirtinger(&self, z: Complex<T>, t: T) -> (Complex<T>, Complex<T>) {
        let p = &self.system.params;
        let mu = p.mu[0];
        let rot = cis(t);
        let w = z * rot.conj() + self.path.bracket_at(t);
        let (hw, hwbar) = self.system.spec.h[0].wirtinger(w);
        (hw * mu, hwbar * rot * rot * mu)
    }

    fn to_physical(&self, z: Complex<T>, t: T) -> Complex<T> {
        self.physical(z, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate_dense, Tolerance};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    type C = Complex<f64>;

    fn c(re: f64, im: f64) -> C {
        Complex::new(re, im)
    }

    fn system(jstar: u32, g: FourierSeries<f64>, h: Vec<HFamily<f64>>, eps: f64, mu: Vec<f64>, xi: Vec<C>) -> BundleSystem<f64> {
        let params = BundleParams::new(c(1.0, 0.0), eps, mu, xi, jstar).unwrap();
        BundleSystem::new(params, PerturbationSpec { g, h }).unwrap()
    }

    fn saturated() -> HFamily<f64> {
        HFamily::saturated_polynomial(vec![c(0.1, -0.2), c(-0.8, 0.4), c(0.2, 0.1)], 1.5, None).unwrap()
    }

    #[test]
    fn eval_g_examples() {
        let spec = PerturbationSpec { g: FourierSeries::constant(1, 0, c(1.0, 0.0)), h: vec![] };
        assert_eq!(eval_g(&spec, 0.7, 0.1), c(1.0, 0.0));
        let g = FourierSeries::from_modes(2, 1, [(1, c(1.0, 0.0))]).unwrap();
        let spec = PerturbationSpec { g, h: vec![] };
        assert!((eval_g(&spec, PI / 2.0, 0.0) - c(-1.0, 0.0)).norm() < 1e-15);
        let g = FourierSeries::from_modes(1, 1, [(-1, c(2.0, 0.0)), (1, c(2.0, 0.0))]).unwrap();
        let spec = PerturbationSpec { g, h: vec![] };
        assert!((eval_g(&spec, PI / 3.0, 0.0) - c(2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn eval_h_examples() {
        let w = c(3.0, 4.0);
        assert_eq!(eval_h(&HFamily::linear(c(1.0, 0.0), c(0.0, 0.0)), w, 0.1), w);
        assert_eq!(eval_h(&HFamily::linear(c(0.0, 0.0), c(1.0, 0.0)), w, 0.1), w.conj());
        let gauss = HFamily::radial_gaussian(c(0.7, -0.2), 2.0).unwrap();
        assert_eq!(eval_h(&gauss, c(0.0, 0.0), 0.0), c(0.7, -0.2));
        let aff = HFamily::from_parts("affine-linear", &[c(2.0, 0.0), c(0.0, 0.0), c(0.5, 0.5)], None, None).unwrap();
        assert_eq!(aff.eval(c(1.0, 0.0), 0.0), c(2.5, 0.5));
    }

    #[test]
    fn unknown_kind_is_a_config_error() {
        let err = HFamily::<f64>::from_parts("cubic", &[c(1.0, 0.0)], None, None).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(HFamily::<f64>::from_parts("saturated-polynomial", &[c(1.0, 0.0)], None, None).is_err());
        assert!(HFamily::<f64>::saturated_polynomial(vec![c(1.0, 0.0); 6], 1.0, Some(2)).is_err());
    }

    #[test]
    fn wirtinger_matches_finite_differences() {
        let families = [
            HFamily::linear(c(0.3, -1.0), c(0.2, 0.5)),
            HFamily::affine(c(1.0, 1.0), c(-0.4, 0.1), c(0.0, 0.7)),
            saturated(),
            HFamily::radial_gaussian(c(0.5, 0.9), 1.3).unwrap(),
        ];
        let h = 1e-6;
        for fam in &families {
            for w in [c(0.0, -1.0), c(0.7, 0.2), c(-1.5, 2.0)] {
                let dx = (fam.eval(w + h, 0.0) - fam.eval(w - h, 0.0)) / (2.0 * h);
                let dy = (fam.eval(w + c(0.0, h), 0.0) - fam.eval(w - c(0.0, h), 0.0)) / (2.0 * h);
                let dw = (dx - c(0.0, 1.0) * dy) * 0.5;
                let dwbar = (dx + c(0.0, 1.0) * dy) * 0.5;
                let (a, b) = fam.wirtinger(w);
                assert!((a - dw).norm() < 1e-8, "{:?} dw at {w}", fam.kind());
                assert!((b - dwbar).norm() < 1e-8, "{:?} dwbar at {w}", fam.kind());
            }
        }
    }

    #[test]
    fn params_validation() {
        assert!(BundleParams::new(c(1.0, 0.0), 0.0, vec![0.1, 0.2], vec![c(0.0, 0.0), c(0.0, 0.0)], 1).is_err());
        assert!(BundleParams::new(c(1.0, 0.0), 0.0, vec![0.1], vec![], 1).is_err());
        assert!(BundleParams::new(c(1.0, 0.0), 0.0, vec![], vec![], 0).is_err());
        assert!(BundleParams::new(c(f64::NAN, 0.0), 0.0, vec![], vec![], 1).is_err());
        assert!(BundleParams::new(c(1.0, 0.0), 0.0, vec![], vec![], 3).is_ok());
        let params = BundleParams::new(c(1.0, 0.0), 0.0, vec![], vec![], 2).unwrap();
        let spec = PerturbationSpec { g: FourierSeries::zeros(1, 0), h: vec![] };
        assert!(BundleSystem::new(params, spec).is_err());
    }

    #[test]
    fn rhs_examples() {
        let sys = system(1, FourierSeries::zeros(1, 0), vec![], 0.0, vec![], vec![]);
        assert_eq!(sys.rhs(c(3.0, -2.0), 0.0), c(1.0, 0.0));
        assert!((sys.rhs(c(3.0, -2.0), PI / 2.0) - c(0.0, 1.0)).norm() < 1e-15);
        let sys = system(1, FourierSeries::constant(1, 0, c(1.0, 0.0)), vec![], 0.1, vec![], vec![]);
        assert!((sys.rhs(c(0.5, 0.5), 0.0) - c(1.1, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn rhs_transformed_examples() {
        let g = FourierSeries::from_modes(1, 1, [(-1, c(0.3, -0.1)), (1, c(0.2, 0.0))]).unwrap();
        let lin = HFamily::linear(c(1.0, 0.0), c(0.0, 0.0));
        let sys = system(1, g, vec![lin.clone()], 0.05, vec![0.0], vec![c(0.0, 0.0)]);
        let tr = TransformedSystem::build(sys, 8, 1e-12).unwrap();
        for (z, t) in [(c(0.1, 0.2), 0.0), (c(-1.0, 0.0), 2.0)] {
            assert!((tr.rhs_transformed(z, t) - c(0.3, -0.1) * 0.05).norm() < 1e-16);
        }
        let g2 = FourierSeries::from_modes(2, 1, [(1, c(0.4, 0.0))]).unwrap();
        let sys = system(2, g2.clone(), vec![saturated()], 0.05, vec![0.0], vec![c(0.0, 0.0)]);
        let tr = TransformedSystem::build(sys, 8, 1e-12).unwrap();
        assert_eq!(tr.rhs_transformed(c(0.4, -0.3), 1.1), c(0.0, 0.0));
        let mu = 0.07;
        let sys = system(2, g2, vec![lin], 0.0, vec![mu], vec![c(0.0, 0.0)]);
        let tr = TransformedSystem::build(sys, 8, 1e-13).unwrap();
        for (z, t) in [(c(0.4, -0.3), 1.1), (c(2.0, 1.0), 4.0)] {
            assert!((tr.rhs_transformed(z, t) - z * mu).norm() < 1e-15);
        }
    }

    #[test]
    fn recentering_needs_one_site() {
        let h = vec![saturated(), saturated()];
        let sys = system(2, FourierSeries::zeros(2, 0), h, 0.0, vec![0.1, 0.1], vec![c(0.0, 0.0), c(5.0, 0.0)]);
        assert!(matches!(TransformedSystem::build(sys, 8, 1e-12), Err(Error::Unsupported(_))));
    }

    #[test]
    fn change_of_variables_is_consistent() {
        for jstar in [1u32, 2] {
            let g = FourierSeries::from_modes(jstar, 2, [(-1, c(0.3, 0.1)), (0, c(0.1, 0.0)), (2, c(0.0, 0.2))]).unwrap();
            let sys = system(jstar, g, vec![saturated()], 0.03, vec![0.04], vec![c(0.5, -0.25)]);
            let tr = TransformedSystem::build(sys.clone(), 32, 1e-13).unwrap();
            let tol = Tolerance::new(1e-12);
            let times: Vec<f64> = (0..=40).map(|k| k as f64 * 0.25).collect();
            let p0 = c(0.8, 0.6);
            let z0 = p0 - tr.physical(c(0.0, 0.0), 0.0);
            let p = integrate_dense(|t, y: &[C; 1]| [sys.rhs(y[0], t)], [p0], 0.0, &times, tol).unwrap();
            let z = integrate_dense(|t, y: &[C; 1]| [tr.rhs_transformed(y[0], t)], [z0], 0.0, &times, tol).unwrap();
            for ((t, ps), zs) in times.iter().zip(&p.states).zip(&z.states) {
                let err = (ps[0] - tr.physical(zs[0], *t)).norm();
                assert!(err < 1e-9, "jstar={jstar} t={t} err={err}");
            }
        }
    }

    #[test]
    fn alpha_is_the_derivative_at_the_unperturbed_wave() {
        let sys = system(2, FourierSeries::zeros(2, 0), vec![HFamily::linear(c(-1.0, 0.3), c(0.0, 0.0))], 0.0, vec![0.1], vec![c(0.0, 0.0)]);
        assert_eq!(sys.alpha(0), c(-1.0, 0.3));
    }

    proptest! {
        #[test]
        fn translation_symmetry_without_tsb(re in -5.0..5.0f64, im in -5.0..5.0f64, sr in -5.0..5.0f64, si in -5.0..5.0f64, t in 0.0..10.0f64) {
            let g = FourierSeries::from_modes(2, 1, [(-1, c(0.3, 0.0)), (1, c(0.0, 0.5))]).unwrap();
            let sys = system(2, g, vec![saturated()], 0.2, vec![0.0], vec![c(1.0, 1.0)]);
            let p = c(re, im);
            prop_assert!((sys.rhs(p, t) - sys.rhs(p + c(sr, si), t)).norm() < 1e-14);
        }

        #[test]
        fn rhs_is_two_pi_periodic(re in -5.0..5.0f64, im in -5.0..5.0f64, t in 0.0..10.0f64) {
            let g = FourierSeries::from_modes(1, 2, [(-2, c(0.3, 0.0)), (1, c(0.0, 0.5))]).unwrap();
            let sys = system(1, g, vec![saturated()], 0.2, vec![0.3], vec![c(1.0, 1.0)]);
            let p = c(re, im);
            prop_assert!((sys.rhs(p, t) - sys.rhs(p, t + 2.0 * PI)).norm() < 1e-12);
        }

        #[test]
        fn rhs_respects_the_family_bounds(re in -50.0..50.0f64, im in -50.0..50.0f64, t in 0.0..10.0f64) {
            let g = FourierSeries::from_modes(1, 2, [(-2, c(0.3, 0.0)), (1, c(0.0, 0.5))]).unwrap();
            let gauss = HFamily::radial_gaussian(c(1.0, -2.0), 0.7).unwrap();
            let fams = vec![saturated(), gauss];
            let (eps, mu): (f64, Vec<f64>) = (0.2, vec![0.3, -0.5]);
            let bound = 1.0 + eps * g.l1_norm() + fams.iter().zip(&mu).map(|(h, m)| m.abs() * h.bound().unwrap()).sum::<f64>();
            let sys = system(1, g, fams, eps, mu, vec![c(1.0, 1.0), c(-3.0, 0.0)]);
            prop_assert!(sys.rhs(c(re, im), t).norm() <= bound + 1e-12);
        }
    }
}
