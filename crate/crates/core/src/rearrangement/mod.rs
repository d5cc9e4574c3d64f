//! Phase-space Jacobian, Schwarz profiles, energy rearrangement, potential tuning and Abel transforms.

mod abel;
mod jacobian;
mod schwarz;

pub use abel::{abel_forward, abel_invert, AbelTable};
pub use jacobian::JacobianContext;
pub use schwarz::{energy_rearrangement, rearranged_density, schwarz_profile, tune_nu, SchwarzProfile, TuneOutcome, NU_TOL};
