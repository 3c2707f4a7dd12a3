//! Finite-difference simulation of the modified FitzHugh–Nagumo
//! reaction-diffusion-advection system, with spiral-tip tracking.

mod field;
mod model;
mod run;
mod snapshot;
mod tip;

pub use field::{ddx1, ddx2, laplacian5, Boundary, Field2D};
pub use model::{build_phi, phi_term, rest_state, rk2_step, RdasModel, Stepper, Terms};
pub use run::{init_spiral, revolutions, run, RdasState, Revolution, Simulation, TipPath, TipSample};
pub use snapshot::{read_snapshot, write_snapshot, Snapshot, HEADER_LEN, MAGIC, VERSION};
pub use tip::{tip_candidates, tip_locate};
