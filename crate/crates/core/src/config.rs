//! TOML run configuration.
//!
//! Every section has full defaults except `[bundle]`, whose drift, strengths and
//! sites must be spelled out. Complex numbers are written `[re, im]`; Fourier
//! tables are lists of `[m, re, im]` triples.

use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::bundle::{BundleParams, BundleSystem, HFamily, PerturbationSpec};
use crate::dynamics::{NewtonOptions, ScanGrid, ScanOptions, Tolerance};
use crate::error::{Error, Result};
use crate::fourier::{FourierSeries, DEFAULT_MODES};
use crate::num::{cst, Real};
use crate::rdas::Boundary;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bundle: Option<BundleConfig>,
    #[serde(default)]
    pub integrate: IntegrateConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanConfig>,
    #[serde(default)]
    pub rdas: RdasConfig,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// TOML with every default written out.
    pub fn emit(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(b) = &self.bundle {
            b.to_system::<f64>()?;
        }
        self.integrate.validate()?;
        if let Some(s) = &self.scan {
            s.validate()?;
            if let Some(b) = &self.bundle {
                if s.mu.iter().any(|m| m.len() != b.mu.len()) {
                    return Err(Error::Config(format!("scan mu vectors must have {} entries", b.mu.len())));
                }
            }
        }
        self.rdas.validate()
    }

    pub fn bundle(&self) -> Result<&BundleConfig> {
        self.bundle.as_ref().ok_or_else(|| Error::Config("missing [bundle] section".into()))
    }

    pub fn scan(&self) -> Result<&ScanConfig> {
        self.scan.as_ref().ok_or_else(|| Error::Config("missing [scan] section".into()))
    }
}

fn complex<T: Real>(c: [f64; 2]) -> Complex<T> {
    Complex::new(cst(c[0]), cst(c[1]))
}

fn is_default<T: Default + PartialEq>(x: &T) -> bool {
    *x == T::default()
}

/// Drift, strengths, sites and perturbation tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleConfig {
    pub v: [f64; 2],
    #[serde(default)]
    pub epsilon: f64,
    pub mu: Vec<f64>,
    pub xi: Vec<[f64; 2]>,
    #[serde(default = "one")]
    pub jstar: u32,
    #[serde(default)]
    pub g: ForcingConfig,
    #[serde(default)]
    pub h: Vec<PerturbationConfig>,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ForcingConfig {
    /// `[m, re, im]` triples.
    #[serde(default)]
    pub modes: Vec<[f64; 3]>,
    /// Defaults to the largest `|m|` listed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<usize>,
}

impl ForcingConfig {
    pub fn to_series<T: Real>(&self, jstar: u32) -> Result<FourierSeries<T>> {
        let mut modes = Vec::with_capacity(self.modes.len());
        for &[m, re, im] in &self.modes {
            if m.fract() != 0.0 || !m.is_finite() {
                return Err(Error::Config(format!("Fourier mode index {m} is not an integer")));
            }
            modes.push((m as i64, complex::<T>([re, im])));
        }
        let widest = modes.iter().map(|(m, _)| m.unsigned_abs() as usize).max().unwrap_or(0);
        let truncation = self.truncation.unwrap_or(widest);
        FourierSeries::from_modes(jstar, truncation, modes).map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationConfig {
    pub kind: String,
    pub coefficients: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saturation_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<u32>,
}

impl PerturbationConfig {
    pub fn to_family<T: Real>(&self) -> Result<HFamily<T>> {
        let coeffs: Vec<Complex<T>> = self.coefficients.iter().map(|c| complex(*c)).collect();
        HFamily::from_parts(&self.kind, &coeffs, self.saturation_scale.map(cst), self.power)
    }
}

impl BundleConfig {
    pub fn to_system<T: Real>(&self) -> Result<BundleSystem<T>> {
        let params = BundleParams::new(
            complex(self.v),
            cst(self.epsilon),
            self.mu.iter().map(|m| cst(*m)).collect(),
            self.xi.iter().map(|x| complex(*x)).collect(),
            self.jstar,
        )?;
        let g = self.g.to_series(self.jstar)?;
        let h = self.h.iter().map(PerturbationConfig::to_family).collect::<Result<Vec<_>>>()?;
        BundleSystem::new(params, PerturbationSpec { g, h })
    }
}

/// Settings for a single trajectory of the bundle equations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegrateConfig {
    pub p0: [f64; 2],
    pub t0: f64,
    pub t_end: f64,
    pub samples: usize,
    pub tol: f64,
}

impl Default for IntegrateConfig {
    fn default() -> Self {
        Self { p0: [0.0, 0.0], t0: 0.0, t_end: std::f64::consts::TAU, samples: 256, tol: 1e-10 }
    }
}

impl IntegrateConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > self.t0) {
            return Err(Error::Config("integrate.t_end must exceed t0".into()));
        }
        if !(self.tol > 0.0) || self.samples == 0 {
            return Err(Error::Config("integrate.tol and integrate.samples must be positive".into()));
        }
        Ok(())
    }

    pub fn tolerance<T: Real>(&self) -> Tolerance<T> {
        Tolerance::new(cst(self.tol))
    }
}

/// Parameter grid and solver settings for a scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    /// One continuation row per value.
    pub epsilon: Vec<f64>,
    /// Points along each row.
    pub mu: Vec<Vec<f64>>,
    #[serde(default)]
    pub site: usize,
    #[serde(default = "scan_tol")]
    pub tol: f64,
    #[serde(default)]
    pub guess: [f64; 2],
    #[serde(default = "default_modes")]
    pub truncation: usize,
    #[serde(default = "correction_tol")]
    pub correction_tol: f64,
    #[serde(default = "escape_factor")]
    pub escape_factor: f64,
    #[serde(default, skip_serializing_if = "is_default")]
    pub reverse: bool,
}

fn scan_tol() -> f64 {
    1e-10
}

fn default_modes() -> usize {
    DEFAULT_MODES
}

fn correction_tol() -> f64 {
    1e-12
}

fn escape_factor() -> f64 {
    1e3
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.correction_tol > 0.0 && self.escape_factor > 0.0) {
            return Err(Error::Config("scan tolerances must be positive".into()));
        }
        if self.epsilon.iter().chain(self.mu.iter().flatten()).any(|x| !x.is_finite()) {
            return Err(Error::Config("scan grid values must be finite".into()));
        }
        Ok(())
    }

    pub fn grid<T: Real>(&self) -> ScanGrid<T> {
        let eps: Vec<T> = self.epsilon.iter().map(|e| cst(*e)).collect();
        let mus: Vec<Vec<T>> = self.mu.iter().map(|m| m.iter().map(|x| cst(*x)).collect()).collect();
        let grid = ScanGrid::product(&eps, &mus);
        if self.reverse {
            grid.reversed()
        } else {
            grid
        }
    }

    pub fn options<T: Real>(&self) -> ScanOptions<T> {
        ScanOptions {
            newton: NewtonOptions::new(cst(self.tol)),
            truncation: self.truncation,
            correction_tol: cst(self.correction_tol),
            site: self.site,
            guess: complex(self.guess),
            escape_factor: cst(self.escape_factor),
        }
    }
}

/// Reading of the forcing symbol in the `u` equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhiMode {
    /// The bump itself.
    Value,
    /// Its `x2` derivative.
    X2Derivative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdvectionBoundary {
    OneSided,
    Mirror,
}

impl From<AdvectionBoundary> for Boundary {
    fn from(b: AdvectionBoundary) -> Self {
        match b {
            AdvectionBoundary::OneSided => Boundary::OneSided,
            AdvectionBoundary::Mirror => Boundary::Mirror,
        }
    }
}

/// Initial broken-front data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitConfig {
    /// Where the free end of the front sits.
    pub center: [f64; 2],
    /// `u` on the excited half plane `x2 > center[1]`.
    pub u_excited: f64,
    /// `v - v_rest` at the refractory end of the ramp.
    pub v_offset: f64,
    /// Width of the linear `v` ramp in `x1` around `center[0]`.
    pub ramp_width: f64,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self { center: [0.0, 0.0], u_excited: 2.0, v_offset: 1.5, ramp_width: 1.0 }
    }
}

/// Modified FitzHugh–Nagumo system on `[-L, L]^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RdasConfig {
    pub half_width: f64,
    pub n: usize,
    pub dt: f64,
    pub varsigma: f64,
    pub beta: f64,
    pub gamma: f64,
    pub advection: f64,
    pub forcing: f64,
    pub bump_amplitude: f64,
    pub bump_decay: f64,
    pub bump_center: [f64; 2],
    pub phi_mode: PhiMode,
    pub advection_boundary: AdvectionBoundary,
    pub t_end: f64,
    pub u_star: f64,
    pub v_star: f64,
    pub record_stride: u64,
    /// Steps between field snapshots; 0 writes only the final state.
    pub snapshot_stride: u64,
    /// Fraction of the run, counted from the end, checked for a lost tip.
    pub late_fraction: f64,
    pub init: InitConfig,
}

impl Default for RdasConfig {
    fn default() -> Self {
        Self {
            half_width: 30.0,
            n: 200,
            dt: 0.005,
            varsigma: 0.3,
            beta: 0.6,
            gamma: 0.5,
            advection: 0.002,
            forcing: -3.0 * 2f64.sqrt() * (0.03 * std::f64::consts::PI / 2.0).sin(),
            bump_amplitude: 0.12,
            bump_decay: 0.00086,
            bump_center: [-10.0, 5.0 * 3f64.sqrt()],
            phi_mode: PhiMode::Value,
            advection_boundary: AdvectionBoundary::OneSided,
            t_end: 400.0,
            u_star: 0.0,
            v_star: 0.3,
            record_stride: 20,
            snapshot_stride: 0,
            late_fraction: 0.5,
            init: InitConfig::default(),
        }
    }
}

impl RdasConfig {
    /// `2L / (N - 1)`, so that both boundaries are grid points.
    pub fn h(&self) -> f64 {
        2.0 * self.half_width / (self.n as f64 - 1.0)
    }

    pub fn steps(&self) -> u64 {
        (self.t_end / self.dt).round() as u64
    }

    /// `dt (4/h^2 + |a1|/h)`; the explicit scheme wants this at most 1.
    pub fn cfl_number(&self) -> f64 {
        let h = self.h();
        self.dt * (4.0 / (h * h) + self.advection.abs() / h)
    }

    pub fn cfl_ok(&self) -> bool {
        self.cfl_number() <= 1.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::Config("rdas.n must be at least 3".into()));
        }
        let positive = [self.half_width, self.dt, self.varsigma, self.gamma, self.bump_decay.max(f64::MIN_POSITIVE)];
        if positive.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::Config("rdas.half_width, dt, varsigma and gamma must be positive".into()));
        }
        if !(self.t_end >= 0.0) || self.record_stride == 0 {
            return Err(Error::Config("rdas.t_end must be non-negative and record_stride positive".into()));
        }
        if !(0.0..=1.0).contains(&self.late_fraction) {
            return Err(Error::Config("rdas.late_fraction must lie in [0, 1]".into()));
        }
        let finite = [self.beta, self.advection, self.forcing, self.bump_amplitude, self.u_star, self.v_star];
        if finite.iter().chain(&self.bump_center).any(|x| !x.is_finite()) {
            return Err(Error::Config("rdas parameters must be finite".into()));
        }
        if !(self.init.ramp_width > 0.0) {
            return Err(Error::Config("rdas.init.ramp_width must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BUNDLE: &str = r#"
[bundle]
v = [1.0, 0.0]
epsilon = 0.01
mu = [0.05]
xi = [[0.0, 0.0]]
jstar = 2

[bundle.g]
modes = [[1, 0.3, 0.1], [-1, 0.0, 0.2]]

[[bundle.h]]
kind = "saturated-polynomial"
coefficients = [[0.0, 0.0], [-1.0, 0.3]]
saturation_scale = 2.0

[scan]
epsilon = [0.0, 0.01]
mu = [[0.01], [0.02]]
"#;

    #[test]
    fn defaults_match_the_experiment() {
        let c = RdasConfig::default();
        assert_eq!((c.n, c.dt, c.half_width), (200, 0.005, 30.0));
        assert!((c.forcing + 0.19986).abs() < 1e-4);
        assert!((c.h() - 60.0 / 199.0).abs() < 1e-15);
        assert!(c.cfl_ok());
        assert_eq!(c.steps(), 80_000);
    }

    #[test]
    fn round_trip() {
        let cfg = Config::parse(BUNDLE).unwrap();
        let again = Config::parse(&cfg.emit()).unwrap();
        assert_eq!(cfg, again);
        let empty = Config::parse("").unwrap();
        assert_eq!(empty.rdas, RdasConfig::default());
        assert_eq!(Config::parse(&empty.emit()).unwrap(), empty);
    }

    #[test]
    fn builds_the_system() {
        let cfg = Config::parse(BUNDLE).unwrap();
        let sys = cfg.bundle().unwrap().to_system::<f64>().unwrap();
        assert_eq!(sys.params().jstar, 2);
        assert_eq!(sys.spec().g.truncation(), 1);
        assert_eq!(cfg.scan().unwrap().grid::<f64>().len(), 4);
    }

    #[test]
    fn missing_mu_is_a_parse_error_with_a_line() {
        let text = "[bundle]\nv = [1.0, 0.0]\nxi = []\n";
        let Err(Error::Config(msg)) = Config::parse(text) else { panic!("expected a config error") };
        assert!(msg.contains("mu"), "{msg}");
        assert!(msg.contains("line"), "{msg}");
    }

    #[test]
    fn rejects_inconsistent_input() {
        assert!(Config::parse("[rdas]\nn = 2\n").is_err());
        assert!(Config::parse("[rdas]\nbogus = 1\n").is_err());
        let bad_kind = BUNDLE.replace("saturated-polynomial", "cubic");
        assert!(Config::parse(&bad_kind).is_err());
        let bad_scan = BUNDLE.replace("mu = [[0.01], [0.02]]", "mu = [[0.01, 0.02]]");
        assert!(Config::parse(&bad_scan).is_err());
        let half_mode = BUNDLE.replace("[1, 0.3, 0.1]", "[1.5, 0.3, 0.1]");
        assert!(Config::parse(&half_mode).is_err());
    }
}
