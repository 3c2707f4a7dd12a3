//! Center-bundle dynamics of spiral waves under translational and rotational
//! symmetry breaking, and an excitable-media simulator for the anchoring
//! experiment.
//!
//! * [`bundle`]: the bundle equations and their recentered form.
//! * [`fourier`]: Fourier series, the operator `Y(u) = iu + u'` and the reference paths.
//! * [`dynamics`]: integration, return maps, Floquet multipliers and scans.
//! * [`rdas`]: the reaction-diffusion-advection simulation and tip tracking.
//!
//! Numerical code is generic over [`Real`]; the aliases below fix `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bundle;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod fourier;
pub mod num;
pub mod rdas;

pub use error::{Error, Result};
pub use num::{Field, Real};

pub type C64 = num_complex::Complex<f64>;
pub type Series = fourier::FourierSeries<f64>;
pub type Path = fourier::ReferencePath<f64>;
pub type Family = bundle::HFamily<f64>;
pub type Params = bundle::BundleParams<f64>;
pub type Spec = bundle::PerturbationSpec<f64>;
pub type System = bundle::BundleSystem<f64>;
pub type Recentered = bundle::TransformedSystem<f64>;
pub type Poincare = dynamics::PoincareResult<f64>;
pub type Grid = rdas::Field2D<f64>;
