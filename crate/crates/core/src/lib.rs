//! Numerical toolkit for the spherically symmetric gravitational Vlasov-Manev system.
//!
//! The potential is `phi = delta * phi_P + kappa * phi_M` with the Newtonian part
//! `-1/(4 pi |x|) * rho` and the Manev part `-1/(2 pi^2 |x|^2) * rho`. Every
//! phase-space density handled here is a function of a (possibly drifted)
//! microscopic energy `|v|^2/2 + b chi(|x|) x.v + phi(x)`, which keeps all moments
//! one-dimensional radial integrals.
//!
//! Module map:
//! - [`phase_space`]: grids, Casimir functions, energy profiles and their moments.
//! - [`potentials`]: radial Poisson and Manev solvers, energies, `H`, `K`, `K_j^M`.
//! - [`rescaling`]: the three-parameter scaling algebra and constraint fitting.
//! - [`ground_state`]: self-consistent steady states and their multipliers.
//! - [`rearrangement`]: phase-space Jacobians, Schwarz profiles, Abel transforms.
//! - [`self_similar`]: drifted profiles `Q_b` and the explicit blow-up families.
//! - [`dynamics`]: radial shell particle simulator and orbital diagnostics.
//! - [`cli`]: configuration, commands and output writers behind `manev-kit`.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod ground_state;
pub mod phase_space;
pub mod potentials;
pub mod quad;
pub mod rearrangement;
pub mod rescaling;
pub mod self_similar;

pub use error::{Error, Result};
