//! Drifted profiles `Q_b = F_b(|v|^2/2 + b chi x.v + nu_b phi_{Q_b})`, minimizing
//! `T_b(f) = int (|v|^2/2 + b chi x.v) f` over densities equimeasurable with a pure Manev
//! ground state `Q` at fixed `E_pot`, and the two explicit blow-up families.

mod blowup;
mod residual;

pub use blowup::{blowup_pseudoconformal, blowup_selfsimilar, rate_fit, BlowupSnapshot};
pub use residual::{stationarity_residual, stationarity_residual_of, virial_selfsimilar, ResidualResolution, SelfSimilarVirial};

use crate::error::{invalid, Error, Result};
use crate::ground_state::{solve_ground_state, GroundState, GroundTarget, SolverOptions};
use crate::phase_space::{CasimirSpec, Cutoff, ModelParams, PhaseDensity};
use crate::potentials::{decay_constants, FieldSolver};
use crate::rearrangement::{schwarz_profile, tune_nu, JacobianContext, SchwarzProfile};
use crate::rescaling::{apply_rescale, RescaleParams};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Cut-off radius choice with the measured ingredients of the formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RChiChoice {
    pub cutoff: Cutoff,
    /// `r_chi` from the formula before the `2 R_Q` floor.
    pub formula: f64,
    /// Measured constant of `|phi_M(r)| <= C ||f||_{E_j} r^{-3/2}`.
    pub decay_constant: f64,
    /// `||Q||_{E_j} = M_1 + M_j + || |v|^2 Q ||`.
    pub ej_norm: f64,
    /// `a^{-1}(r_*)` in the field of `Q`; the cut-off energy of `Q`.
    pub e_star: f64,
}

/// `r_chi = (8 C ||Q||_{E_j} / |a^{-1}(r_*)|)^{2/3}`.
pub fn r_chi_formula(decay_constant: f64, ej_norm: f64, e_star: f64) -> Result<f64> {
    if !(e_star < 0.0) {
        return invalid("a^{-1}(r_*) must be negative");
    }
    if !(decay_constant > 0.0 && ej_norm > 0.0) {
        return invalid("decay constant and E_j norm must be positive");
    }
    Ok((8.0 * decay_constant * ej_norm / e_star.abs()).powf(2.0 / 3.0))
}

/// Cut-off radius for a pure Manev ground state, floored at twice its support radius.
pub fn choose_r_chi(state: &GroundState) -> Result<RChiChoice> {
    if state.params.delta != 0.0 {
        return invalid("self-similar profiles are built from pure Manev ground states");
    }
    let c = decay_constants(&state.density, &state.solver, &state.casimir)?.manev;
    let ej_norm = state.masses.m1 + state.masses.mj + state.energies.kinetic;
    let ctx = JacobianContext::of(&state.density)?;
    let r_star = schwarz_profile(&state.density)?.r_star();
    let e_star = ctx.jacobian_inverse(r_star)?;
    let formula = r_chi_formula(c, ej_norm, e_star)?;
    let cutoff = Cutoff::new(formula.max(2.0 * state.support_radius))?;
    Ok(RChiChoice { cutoff, formula, decay_constant: c, ej_norm, e_star })
}

/// `T_b(f) = int (|v|^2/2 + b chi x.v) f`, using the drift carried by `f`'s energy.
pub fn t_b_functional(f: &PhaseDensity, b: f64, cutoff: Option<&Cutoff>) -> f64 {
    0.5 * f.kinetic() + f.drift_moment(b, cutoff)
}

/// Pure Manev ground state of mass `m1` on a grid reaching past `R_chi`, with its cut-off.
pub fn self_similar_setup(m1: f64, j: &CasimirSpec, opts: &SolverOptions) -> Result<(GroundState, RChiChoice)> {
    let params = ModelParams::pure_manev();
    let mut opts = *opts;
    let mut state = solve_ground_state(&params, j, &GroundTarget::Mass(m1), &opts)?;
    for _ in 0..4 {
        let choice = choose_r_chi(&state)?;
        let need = SETUP_MARGIN * choice.cutoff.outer() / state.support_radius;
        if state.solver.grid().r_max() >= SETUP_MARGIN * choice.cutoff.outer() * 0.999 {
            return Ok((state, choice));
        }
        opts.extent = need;
        state = solve_ground_state(&params, j, &GroundTarget::Mass(m1), &opts)?;
    }
    Err(Error::Unresolvable("grid extent does not settle around the cut-off radius".into()))
}

/// Grid extent beyond `R_chi`, as a factor.
const SETUP_MARGIN: f64 = 1.25;

/// Relaxation controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxOptions {
    pub max_iter: usize,
    /// Relative `L^1` change of `rho` between iterates at which the loop stops.
    pub tol: f64,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        Self { max_iter: 200, tol: 1e-8 }
    }
}

/// One relaxation step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxRecord {
    pub nu: f64,
    pub t_b: f64,
    pub epot: f64,
    /// `||rho_new - rho_old||_1 / ||rho_old||_1`.
    pub change: f64,
}

/// Converged (or capped) minimizer `Q_b` in the form `F_b(|v|^2/2 + b chi x.v + nu_b phi)`.
#[derive(Debug, Clone)]
pub struct SelfSimilarProfile {
    pub b: f64,
    pub nu: f64,
    pub cutoff: Cutoff,
    /// Representation of `Q_b`: its energy carries `nu_b phi` of the previous iterate.
    pub density: PhaseDensity,
    /// Field generated by `Q_b` itself.
    pub phi_self: Vec<f64>,
    pub solver: Arc<FieldSolver>,
    pub t_b: f64,
    pub epot: f64,
    /// `E_pot(Q)`, the constraint value.
    pub epot_target: f64,
    /// `T_b(Q)`, the value before the first step.
    pub t_b_start: f64,
    pub trace: Vec<RelaxRecord>,
    pub converged: bool,
}

impl SelfSimilarProfile {
    pub fn e_cut(&self) -> f64 {
        self.density.profile.e_cut()
    }

    pub fn kinetic(&self) -> f64 {
        self.density.kinetic()
    }

    /// Normal form `Q_b(x, v / nu_b)` with drift `nu_b b`, whose energy carries its own field with coefficient 1.
    pub fn normalized(&self) -> Result<(f64, PhaseDensity)> {
        let d = apply_rescale(&self.density, &RescaleParams::new(1.0, 1.0, 1.0 / self.nu)?)?;
        Ok((self.nu * self.b, d))
    }

    /// `T_b` values `T_b(Q), T_b(f_1), ...` along the relaxation.
    pub fn t_b_series(&self) -> Vec<f64> {
        std::iter::once(self.t_b_start).chain(self.trace.iter().map(|r| r.t_b)).collect()
    }
}

fn rel_l1(solver: &FieldSolver, a: &[f64], b: &[f64]) -> f64 {
    let g = solver.grid();
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect();
    g.integrate_shell(&d) / g.integrate_shell(&b.iter().map(|x| x.abs()).collect::<Vec<_>>())
}

/// Relaxation `f <- Q^{* b, nu phi_f}` from `f = Q`, with `nu` tuned so that `E_pot = E_pot(Q)`.
pub fn solve_self_similar(state: &GroundState, b: f64, cutoff: &Cutoff, opts: &RelaxOptions) -> Result<SelfSimilarProfile> {
    if state.params.delta != 0.0 {
        return invalid("self-similar profiles are built from pure Manev ground states");
    }
    if !(b >= 0.0 && b.is_finite()) {
        return invalid("b must be nonnegative");
    }
    if state.solver.grid().r_max() < cutoff.outer() {
        return invalid("grid must extend past R_chi = 2 r_chi");
    }
    let qstar: SchwarzProfile = schwarz_profile(&state.density)?;
    let target = state.energies.epot;
    let params = state.params;
    let solver = &state.solver;
    let mut f = state.density.clone();
    let mut rho = state.rho.clone();
    let mut phi_f = state.potential.values.clone();
    let t_b_start = t_b_functional(&f, b, Some(cutoff));
    let mut trace = Vec::new();
    let mut converged = false;
    let mut nu = 1.0;
    let mut epot = target;
    for _ in 0..opts.max_iter {
        let out = tune_nu(&qstar, &f, b, Some(*cutoff), &phi_f, target, solver, &params)?;
        let sr = out.density.support_radius();
        if sr >= cutoff.r_chi {
            return Err(Error::Unresolvable(format!("support radius {sr} escapes r_chi = {}", cutoff.r_chi)));
        }
        let new_rho = out.density.density();
        let change = rel_l1(solver, &new_rho, &rho);
        nu = out.nu;
        epot = out.epot;
        f = out.density;
        trace.push(RelaxRecord { nu, t_b: t_b_functional(&f, b, Some(cutoff)), epot, change });
        phi_f = solver.combined(&new_rho, &params)?.values;
        rho = new_rho;
        if change <= opts.tol {
            converged = true;
            break;
        }
    }
    let t_b = trace.last().map_or(t_b_start, |r| r.t_b);
    Ok(SelfSimilarProfile {
        b,
        nu,
        cutoff: *cutoff,
        density: f,
        phi_self: phi_f,
        solver: solver.clone(),
        t_b,
        epot,
        epot_target: target,
        t_b_start,
        trace,
        converged,
    })
}

/// `|rho_{Q_b} - rho_Q|_1 / M_1 + |kin(Q_b) - kin(Q)| / kin(Q)`: computable stand-in for `||Q_b - Q||_{E_j}`.
pub fn profile_distance(profile: &SelfSimilarProfile, state: &GroundState) -> f64 {
    let rho = profile.density.density();
    rel_l1(&state.solver, &rho, &state.rho) + (profile.kinetic() / state.energies.kinetic - 1.0).abs()
}

/// One member of the `b` ladder.
#[derive(Debug, Clone)]
pub struct LadderEntry {
    pub b: f64,
    pub outcome: std::result::Result<SelfSimilarProfile, String>,
}

/// Ladder summary row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderRow {
    pub b: f64,
    pub nu: f64,
    pub t_b: f64,
    pub distance: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Largest `b = b_top 2^{-k}`, `k < max_halvings`, whose relaxation converges with the support inside `r_chi`.
///
/// `b_top = sqrt(2 |e_*|) / R_chi` is the drift at which the cut-off dip of `phi_eff` reaches the cut energy.
pub fn operational_b_star(state: &GroundState, choice: &RChiChoice, opts: &RelaxOptions, max_halvings: usize) -> Result<(f64, SelfSimilarProfile)> {
    let mut b = (2.0 * choice.e_star.abs()).sqrt() / choice.cutoff.outer();
    for _ in 0..max_halvings {
        match solve_self_similar(state, b, &choice.cutoff, opts) {
            Ok(p) if p.converged => return Ok((b, p)),
            Ok(_) | Err(Error::Bracket(_)) | Err(Error::Unresolvable(_)) | Err(Error::NoConvergence { .. }) => b *= 0.5,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Bracket("no b in the ladder admits a converged profile".into()))
}

/// Profiles for `b = b_star 2^{-k}`, `k = 0..levels`, solved in parallel.
pub fn b_ladder(state: &GroundState, cutoff: &Cutoff, b_star: f64, levels: usize, opts: &RelaxOptions) -> Vec<LadderEntry> {
    (0..levels)
        .into_par_iter()
        .map(|k| {
            let b = b_star * 0.5f64.powi(k as i32);
            LadderEntry { b, outcome: solve_self_similar(state, b, cutoff, opts).map_err(|e| e.to_string()) }
        })
        .collect()
}

pub fn ladder_row(profile: &SelfSimilarProfile, state: &GroundState) -> LadderRow {
    LadderRow {
        b: profile.b,
        nu: profile.nu,
        t_b: profile.t_b,
        distance: profile_distance(profile, state),
        iterations: profile.trace.len(),
        converged: profile.converged,
    }
}
