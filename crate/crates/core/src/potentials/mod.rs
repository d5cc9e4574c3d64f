//! Radial Poisson and Manev fields, potential energies and the functionals `H`, `K`, `K_j^M`.
//!
//! Normalization: `phi_P = -rho * 1/(4 pi |x|)` and `phi_M = -rho * 1/(2 pi^2 |x|^2)`,
//! written radially with the kernels `1_{s<r}/r + 1_{s>r}/s` and
//! `(1/(pi s r)) ln|(r+s)/(r-s)|` against `rho(s) s^2 ds`.

mod functionals;
mod manev;

pub use functionals::{
    decay_constants, energies, functional_k, functional_kjm, hamiltonian, interpolation_ratios, DecayConstants, Energies,
    InterpolationRatios,
};
pub use manev::ManevOperator;

use crate::error::{Error, Result};
use crate::phase_space::{ModelParams, RadialGrid};
use serde::{Deserialize, Serialize};
use std::sync::{Arc, OnceLock};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Component {
    Poisson,
    Manev,
    Combined { delta: f64, kappa: f64 },
}

/// Potential values with their finite-difference radial derivative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialPotential {
    pub values: Vec<f64>,
    pub derivative: Vec<f64>,
    pub component: Component,
}

/// Poisson potential of a nodal density (fourth-order running integrals).
pub fn poisson_potential(grid: &RadialGrid, rho: &[f64]) -> Vec<f64> {
    let r = grid.nodes();
    let g2: Vec<f64> = rho.iter().zip(r).map(|(p, r)| p * r * r).collect();
    let g1: Vec<f64> = rho.iter().zip(r).map(|(p, r)| p * r).collect();
    let c2 = grid.cumulative(&g2);
    let c1 = grid.cumulative(&g1);
    let t1 = c1[c1.len() - 1];
    r.iter()
        .enumerate()
        .map(|(i, &ri)| if ri == 0.0 { -t1 } else { -(c2[i] / ri + (t1 - c1[i])) })
        .collect()
}

/// Radial derivative of a tabulated potential.
pub fn force(grid: &RadialGrid, phi: &[f64]) -> Vec<f64> {
    grid.derivative(phi)
}

/// Field solver bound to one grid; the dense Manev operator is built on first use.
#[derive(Debug)]
pub struct FieldSolver {
    grid: Arc<RadialGrid>,
    manev: OnceLock<ManevOperator>,
}

/// Poisson and Manev parts of the field of one density.
#[derive(Debug, Clone)]
pub struct FieldParts {
    pub poisson: Vec<f64>,
    pub manev: Vec<f64>,
}

impl FieldParts {
    pub fn combined(&self, params: &ModelParams) -> Vec<f64> {
        self.poisson.iter().zip(&self.manev).map(|(p, m)| params.delta * p + params.kappa * m).collect()
    }
}

impl FieldSolver {
    pub fn new(grid: Arc<RadialGrid>) -> Self {
        Self { grid, manev: OnceLock::new() }
    }

    /// Solver with a prebuilt Manev operator (used for deliberately corrupted kernels).
    pub fn with_operator(grid: Arc<RadialGrid>, op: ManevOperator) -> Self {
        let s = Self::new(grid);
        let _ = s.manev.set(op);
        s
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    /// Solver on the grid dilated by `lambda`, reusing a built Manev operator.
    pub fn rescaled(&self, lambda: f64) -> Self {
        let grid = Arc::new(self.grid.scaled(lambda));
        match self.manev.get() {
            Some(op) => Self::with_operator(grid, op.scaled(lambda)),
            None => Self::new(grid),
        }
    }

    fn check(&self, rho: &[f64]) -> Result<()> {
        if rho.len() != self.grid.len() {
            return Err(Error::GridMismatch(format!("density has {} values, grid {}", rho.len(), self.grid.len())));
        }
        Ok(())
    }

    pub fn poisson(&self, rho: &[f64]) -> Result<Vec<f64>> {
        self.check(rho)?;
        Ok(poisson_potential(&self.grid, rho))
    }

    pub fn manev(&self, rho: &[f64]) -> Result<Vec<f64>> {
        self.check(rho)?;
        Ok(self.manev.get_or_init(|| ManevOperator::new(&self.grid)).apply(rho))
    }

    /// Both components; the Manev part is skipped (zero) when `kappa = 0` and vice versa.
    pub fn parts(&self, rho: &[f64], params: &ModelParams) -> Result<FieldParts> {
        let n = self.grid.len();
        let poisson = if params.delta > 0.0 { self.poisson(rho)? } else { vec![0.0; n] };
        let manev = if params.kappa > 0.0 { self.manev(rho)? } else { vec![0.0; n] };
        Ok(FieldParts { poisson, manev })
    }

    /// `phi = delta phi_P + kappa phi_M` with its derivative.
    pub fn combined(&self, rho: &[f64], params: &ModelParams) -> Result<RadialPotential> {
        let values = self.parts(rho, params)?.combined(params);
        let derivative = force(&self.grid, &values);
        Ok(RadialPotential { values, derivative, component: Component::Combined { delta: params.delta, kappa: params.kappa } })
    }
}

/// `-int phi rho dx` on a shared grid.
pub fn potential_energy(grid: &RadialGrid, rho: &[f64], phi: &[f64]) -> Result<f64> {
    if rho.len() != grid.len() || phi.len() != grid.len() {
        return Err(Error::GridMismatch("density and potential must live on the same grid".into()));
    }
    let g: Vec<f64> = rho.iter().zip(phi).map(|(a, b)| -a * b).collect();
    Ok(grid.integrate_shell(&g))
}
