use super::{potential_energy, FieldSolver};
use crate::error::{invalid, Result};
use crate::phase_space::{CasimirSpec, ModelParams, PhaseDensity};
use serde::{Deserialize, Serialize};

/// Moments of a density in its own self-consistent field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Energies {
    pub mass: f64,
    /// `|| |v|^2 f ||_1`
    pub kinetic: f64,
    pub ep: f64,
    pub em: f64,
    /// `delta E_P + kappa E_M`
    pub epot: f64,
    /// `kinetic - epot`
    pub h: f64,
}

pub fn energies(f: &PhaseDensity, solver: &FieldSolver, params: &ModelParams) -> Result<Energies> {
    let rho = f.density();
    let grid = solver.grid();
    let ep = potential_energy(grid, &rho, &solver.poisson(&rho)?)?;
    let em = potential_energy(grid, &rho, &solver.manev(&rho)?)?;
    let kinetic = f.kinetic();
    let epot = params.delta * ep + params.kappa * em;
    Ok(Energies { mass: grid.integrate_shell(&rho), kinetic, ep, em, epot, h: kinetic - epot })
}

pub fn hamiltonian(f: &PhaseDensity, solver: &FieldSolver, params: &ModelParams) -> Result<f64> {
    Ok(energies(f, solver, params)?.h)
}

fn manev_energy(f: &PhaseDensity, solver: &FieldSolver) -> Result<f64> {
    if f.profile.is_zero() {
        return invalid("functional undefined for f = 0");
    }
    let rho = f.density();
    let em = potential_energy(solver.grid(), &rho, &solver.manev(&rho)?)?;
    if !(em > 0.0) {
        return invalid("Manev energy vanishes");
    }
    Ok(em)
}

/// `K(f) = || |v|^2 f || / E_M(f)`.
pub fn functional_k(f: &PhaseDensity, solver: &FieldSolver) -> Result<f64> {
    let em = manev_energy(f, solver)?;
    Ok(f.kinetic() / em)
}

/// `K_j^M(f) = || |v|^2 f || ||f||^{(p-3)/(3(p-1))} ||f + j(f)||^{2/(3(p-1))} / E_M(f)` with `p = j.p()`.
pub fn functional_kjm(f: &PhaseDensity, solver: &FieldSolver, j: &CasimirSpec) -> Result<f64> {
    let em = manev_energy(f, solver)?;
    let p = j.p();
    let m1 = f.mass();
    let mj = f.casimir(j);
    Ok(f.kinetic() * m1.powf((p - 3.0) / (3.0 * (p - 1.0))) * (m1 + mj).powf(2.0 / (3.0 * (p - 1.0))) / em)
}

/// Left side over the right side (without constant) of the two interpolation inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpolationRatios {
    /// `E_P / (kin^{1/2} ||f||_1^{(7p-9)/(6(p-1))} ||f||_p^{p/(3(p-1))})`
    pub poisson: f64,
    /// `E_M / (kin ||f||_1^{(p-3)/(3(p-1))} ||f||_p^{2p/(3(p-1))})`
    pub manev: f64,
}

pub fn interpolation_ratios(f: &PhaseDensity, solver: &FieldSolver, p: f64) -> Result<InterpolationRatios> {
    let rho = f.density();
    let grid = solver.grid();
    let ep = potential_energy(grid, &rho, &solver.poisson(&rho)?)?;
    let em = potential_energy(grid, &rho, &solver.manev(&rho)?)?;
    let kin = f.kinetic();
    let m1 = grid.integrate_shell(&rho);
    let lp = f.casimir(&CasimirSpec::power(p)?);
    let d = 3.0 * (p - 1.0);
    Ok(InterpolationRatios {
        poisson: ep / (kin.sqrt() * m1.powf((7.0 * p - 9.0) / (2.0 * d)) * lp.powf(1.0 / d)),
        manev: em / (kin * m1.powf((p - 3.0) / d) * lp.powf(2.0 / d)),
    })
}

/// Empirical constants of the pointwise decay bounds `|phi_P| <= C ||f||_1 / r` and
/// `|phi_M| <= C_alpha ||f||_{E_j} / r^{3/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayConstants {
    pub poisson: f64,
    pub manev: f64,
}

pub fn decay_constants(f: &PhaseDensity, solver: &FieldSolver, j: &CasimirSpec) -> Result<DecayConstants> {
    let rho = f.density();
    let pp = solver.poisson(&rho)?;
    let pm = solver.manev(&rho)?;
    let m1 = solver.grid().integrate_shell(&rho);
    let ej = m1 + f.casimir(j) + f.kinetic();
    let r = solver.grid().nodes();
    let (mut cp, mut cm) = (0.0f64, 0.0f64);
    for i in 1..r.len() {
        cp = cp.max(r[i] * pp[i].abs() / m1);
        cm = cm.max(r[i].powf(1.5) * pm[i].abs() / ej);
    }
    Ok(DecayConstants { poisson: cp, manev: cm })
}
