//! Spherically symmetric phase-space densities, their moments and distribution functions.

mod casimir;
mod density;
mod distribution;
mod grid;
mod profile;

pub use casimir::CasimirSpec;
pub use density::PhaseDensity;
pub use distribution::{distribution_curve, equimeasurability_distance, DistributionCurve};
pub use grid::{CellLocator, RadialGrid};
pub use profile::{chi, clustered_energies, Cutoff, EnergyProfile, ProfileShape};

use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};

/// Mass and Casimir-mass targets `(M_1, M_j)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintPair {
    pub m1: f64,
    pub mj: f64,
}

impl ConstraintPair {
    pub fn new(m1: f64, mj: f64) -> Result<Self> {
        if !(m1 > 0.0 && mj > 0.0 && m1.is_finite() && mj.is_finite()) {
            return invalid("constraint masses must be positive");
        }
        Ok(Self { m1, mj })
    }
}

/// Weights `delta` (Poisson) and `kappa` (Manev) of the potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub delta: f64,
    pub kappa: f64,
}

impl ModelParams {
    pub fn new(delta: f64, kappa: f64) -> Result<Self> {
        if !(delta >= 0.0 && kappa >= 0.0 && delta + kappa > 0.0) {
            return invalid("model weights need delta >= 0, kappa >= 0, delta + kappa > 0");
        }
        Ok(Self { delta, kappa })
    }

    pub fn pure_manev() -> Self {
        Self { delta: 0.0, kappa: 1.0 }
    }

    pub fn pure_poisson() -> Self {
        Self { delta: 1.0, kappa: 0.0 }
    }
}

/// Radial density table on a grid.
pub fn mass(grid: &RadialGrid, rho: &[f64]) -> f64 {
    grid.integrate_shell(rho)
}
