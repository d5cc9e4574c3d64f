//! Ground states of the Euler-Lagrange form `Q = (j')^{-1}((lambda - E) / |mu|)_+` for power-law
//! Casimirs, built by a damped self-consistent iteration on a normalized problem and then moved
//! to the requested constraints by exact steady-state symmetries.

mod checks;
mod tune;

pub use checks::{
    density_lipschitz_check, estimate_kjm, lipschitz_bound, potential_distribution, recover_multipliers, structural_checks,
    subcritical_margin, virial_residual, virial_residual_of, KjmEstimate, LipschitzCheck, MultiplierCheck, StructuralReport,
};
pub use tune::{tune_pure_manev, PureManevTuning};

use crate::error::{invalid, Error, Result};
use crate::phase_space::{CasimirSpec, ConstraintPair, EnergyProfile, ModelParams, PhaseDensity, RadialGrid};
use crate::potentials::{energies, force, Component, Energies, FieldSolver, RadialPotential};
use crate::rescaling::{apply_rescale, RescaleParams};
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta;
use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

/// Numerical controls of the self-consistent iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Radial nodes of the normalized grid (support radius 1).
    pub nodes: usize,
    /// Grid extent in units of the support radius.
    pub extent: f64,
    /// Clustering strength of the graded grid.
    pub grading: f64,
    /// Weight of the new potential in each update.
    pub damping: f64,
    pub max_iter: usize,
    /// Relative sup-norm update at which the iteration stops.
    pub tol: f64,
    /// Replaces the uniform-ball initial potential by `-(1 - bump r^2 / 2)` inside the support (for re-solve checks).
    pub initial_bump: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { nodes: 2000, extent: 3.0, grading: 6.0, damping: 0.5, max_iter: 500, tol: 1e-10, initial_bump: None }
    }
}

/// Normalization requested from [`solve_ground_state`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GroundTarget {
    /// `phi(0) = -1`, support radius 1.
    Normalized,
    /// Prescribed mass; the only freedom left for pure Manev steady states.
    Mass(f64),
    /// Prescribed `(M_1, M_j)`.
    Constraints(ConstraintPair),
}

/// `j(t) = c t^p`: the Casimirs for which the Euler-Lagrange profile is a power law.
#[derive(Debug, Clone, Copy, PartialEq)]
struct PowerCasimir {
    c: f64,
    p: f64,
}

impl PowerCasimir {
    fn from_spec(j: &CasimirSpec) -> Result<Self> {
        match j {
            CasimirSpec::Powers(t) if t.len() == 1 => Ok(Self { c: t[0].0, p: t[0].1 }),
            _ => Err(Error::Unsupported("ground states are computed for single-term Casimirs j(t) = c t^p".into())),
        }
    }

    /// Polytropic index `n = 1 / (p - 1)`.
    fn n(&self) -> f64 {
        1.0 / (self.p - 1.0)
    }
}

/// Lagrange multipliers and the constant `C_Q = ||j'(Q) Q|| - M_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Multipliers {
    pub lambda: f64,
    pub mu: f64,
    pub c_q: f64,
}

/// Convergence record of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    /// Self-consistent solves spent locating the support radius.
    pub shooting_steps: usize,
    /// Support radius of the normalized solve before the mass scaling.
    pub support_scale: f64,
}

/// A converged steady state with its field, moments and multipliers.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub density: PhaseDensity,
    pub solver: Arc<FieldSolver>,
    pub params: ModelParams,
    pub casimir: CasimirSpec,
    pub rho: Vec<f64>,
    pub potential: RadialPotential,
    pub energies: Energies,
    pub masses: ConstraintPair,
    /// Multipliers read off the profile: `lambda = e_cut`, `mu = -1 / (c p amp^{p-1})`.
    pub multipliers: Multipliers,
    pub support_radius: f64,
    pub report: SolveReport,
}

/// Scalar summary for JSON output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundStateSummary {
    pub delta: f64,
    pub kappa: f64,
    pub p: f64,
    pub masses: ConstraintPair,
    pub energies: Energies,
    pub multipliers: Multipliers,
    pub support_radius: f64,
    pub e_cut: f64,
    pub amplitude: f64,
    pub report: SolveReport,
}

impl GroundState {
    fn assemble(density: PhaseDensity, solver: Arc<FieldSolver>, params: ModelParams, j: &CasimirSpec, report: SolveReport) -> Result<Self> {
        let pc = PowerCasimir::from_spec(j)?;
        let rho = density.density();
        let values = density.phi.clone();
        let potential = RadialPotential {
            derivative: force(solver.grid(), &values),
            values,
            component: Component::Combined { delta: params.delta, kappa: params.kappa },
        };
        let energies = energies(&density, &solver, &params)?;
        let mj = density.casimir(j);
        let masses = ConstraintPair { m1: energies.mass, mj };
        let amp = match density.profile.shape() {
            crate::phase_space::ProfileShape::PowerLaw { amp, .. } => *amp,
            _ => return invalid("ground-state profile must be a power law"),
        };
        let c_q = density.casimir_with(&|t| t * j.dj(t)) - mj;
        let multipliers = Multipliers { lambda: density.profile.e_cut(), mu: -1.0 / (pc.c * pc.p * amp.powf(pc.p - 1.0)), c_q };
        let support_radius = density.support_radius();
        Ok(Self { density, solver, params, casimir: j.clone(), rho, potential, energies, masses, multipliers, support_radius, report })
    }

    pub fn amplitude(&self) -> f64 {
        match self.density.profile.shape() {
            crate::phase_space::ProfileShape::PowerLaw { amp, .. } => *amp,
            _ => f64::NAN,
        }
    }

    pub fn p(&self) -> f64 {
        self.casimir.p()
    }

    pub fn summary(&self) -> GroundStateSummary {
        GroundStateSummary {
            delta: self.params.delta,
            kappa: self.params.kappa,
            p: self.p(),
            masses: self.masses,
            energies: self.energies,
            multipliers: self.multipliers,
            support_radius: self.support_radius,
            e_cut: self.density.profile.e_cut(),
            amplitude: self.amplitude(),
            report: self.report,
        }
    }

    /// Steady-state symmetry `f -> gamma f(x, gamma v)`: mass scales by `gamma^{-2}`.
    pub fn velocity_scaled(&self, gamma: f64) -> Result<Self> {
        let d = apply_rescale(&self.density, &RescaleParams::new(gamma, 1.0, gamma)?)?;
        Self::assemble(d, self.solver.clone(), self.params, &self.casimir, self.report)
    }

    /// Steady-state dilation: support scaled by `ell`, amplitude adjusted so the field still generates the energy.
    /// Only exact for pure models.
    fn dilated_pure(&self, ell: f64) -> Result<Self> {
        let ModelParams { delta, kappa } = self.params;
        if delta > 0.0 && kappa > 0.0 {
            return invalid("dilation is a steady-state symmetry only for pure models");
        }
        let expo = if delta > 0.0 { 2.0 } else { 1.0 };
        let d = apply_rescale(&self.density, &RescaleParams::new(ell.powf(-expo), ell, 1.0)?)?;
        Self::assemble(d, Arc::new(self.solver.rescaled(ell)), self.params, &self.casimir, self.report)
    }
}

/// Normalized solve output on the unit-support grid.
struct Unit {
    phi: Vec<f64>,
    amp: f64,
    e_cut: f64,
    iterations: usize,
    residual: f64,
    converged: bool,
}

/// `4 pi sqrt2 B(n + 1, 3/2)`: density of `(e_cut - E)_+^n` per unit `(e_cut - phi)^{n + 3/2}`.
fn density_constant(n: f64) -> f64 {
    4.0 * PI * SQRT_2 * beta(n + 1.0, 1.5)
}

/// Damped iteration `phi <- (1 - theta) phi + theta A phi[rho(phi)]` with `A` restoring `phi(0) = -1`
/// and `e_cut = phi(1)` pinning the support edge at `r = 1`.
fn unit_solve(solver: &FieldSolver, params: &ModelParams, n: f64, init: &[f64], opts: &SolverOptions) -> Result<Unit> {
    let grid = solver.grid();
    let cn = density_constant(n);
    let mut phi = init.to_vec();
    let (mut prev_res, mut growth) = (f64::INFINITY, 0usize);
    let mut last = None;
    for it in 1..=opts.max_iter {
        let e_cut = grid.interp(&phi, 1.0);
        let rho: Vec<f64> = phi.iter().map(|&p| cn * (e_cut - p).max(0.0).powf(n + 1.5)).collect();
        let raw = solver.parts(&rho, params)?.combined(params);
        if !(raw[0] < 0.0) {
            return Err(Error::Diverged { iterations: it });
        }
        let amp = -1.0 / raw[0];
        let new: Vec<f64> = raw.iter().map(|x| amp * x).collect();
        let scale = phi.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let res = new.iter().zip(&phi).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale;
        if !res.is_finite() {
            return Err(Error::Diverged { iterations: it });
        }
        if res < opts.tol {
            return Ok(Unit { phi: new, amp, e_cut, iterations: it, residual: res, converged: true });
        }
        growth = if res > prev_res { growth + 1 } else { 0 };
        if growth >= 20 {
            return Err(Error::Diverged { iterations: it });
        }
        prev_res = res;
        let th = opts.damping;
        for (p, q) in phi.iter_mut().zip(&new) {
            *p = (1.0 - th) * *p + th * q;
        }
        last = Some((new, amp, e_cut, it, res));
    }
    let (phi, amp, e_cut, iterations, residual) = last.expect("max_iter >= 1");
    Ok(Unit { phi, amp, e_cut, iterations, residual, converged: false })
}

/// Initial potential: the field of a uniform ball of radius 1, normalized to `phi(0) = -1`.
fn initial_potential(solver: &FieldSolver, params: &ModelParams, opts: &SolverOptions) -> Result<Vec<f64>> {
    let grid = solver.grid();
    if let Some(bump) = opts.initial_bump {
        let inner: Vec<f64> = grid.nodes().iter().map(|&r| -(1.0 - 0.5 * bump * r.min(1.0) * r.min(1.0))).collect();
        // continue outside with a decaying tail matching the edge value
        let edge = -(1.0 - 0.5 * bump);
        return Ok(grid.nodes().iter().zip(inner).map(|(&r, v)| if r <= 1.0 { v } else { edge / r }).collect());
    }
    let rho: Vec<f64> = grid.nodes().iter().map(|&r| if r < 1.0 { 1.0 } else { 0.0 }).collect();
    let raw = solver.parts(&rho, params)?.combined(params);
    Ok(raw.iter().map(|x| -x / raw[0]).collect())
}

/// Builds the solver of the normalized problem.
pub fn unit_solver(opts: &SolverOptions) -> Result<Arc<FieldSolver>> {
    let grid = RadialGrid::graded(opts.nodes, 1.0, opts.extent, opts.grading)?;
    Ok(Arc::new(FieldSolver::new(Arc::new(grid))))
}

fn unit_state(solver: &Arc<FieldSolver>, eff: &ModelParams, pc: PowerCasimir, init: &[f64], opts: &SolverOptions) -> Result<(Unit, PhaseDensity)> {
    let u = unit_solve(solver, eff, pc.n(), init, opts)?;
    // amp (e_cut - E)^n with the EL normalization c p amp^{p-1} = 1 / |mu|
    let prof = EnergyProfile::power_law(u.amp, pc.n(), u.e_cut)?;
    let d = PhaseDensity::new(solver.grid().clone(), prof, u.phi.clone(), 0.0, None)?;
    Ok((u, d))
}

/// `M_j M_1^{(p-3)/2}`, invariant under `f -> gamma f(x, gamma v)`.
fn velocity_invariant(m1: f64, mj: f64, p: f64) -> f64 {
    mj * m1.powf(0.5 * (p - 3.0))
}

/// Steady state of the model for a power-law Casimir.
///
/// Pure Manev states form a one-parameter family, so only [`GroundTarget::Mass`] or a
/// constraint pair on that family (see [`tune_pure_manev`]) is accepted for `delta = 0`.
pub fn solve_ground_state(params: &ModelParams, j: &CasimirSpec, target: &GroundTarget, opts: &SolverOptions) -> Result<GroundState> {
    let pc = PowerCasimir::from_spec(j)?;
    match target {
        GroundTarget::Mass(m) if !(*m > 0.0 && m.is_finite()) => return invalid("target mass must be positive"),
        _ => {}
    }
    let solver = unit_solver(opts)?;
    let init = initial_potential(&solver, params, opts)?;
    let pure = params.delta == 0.0 || params.kappa == 0.0;
    let report = |u: &Unit, steps: usize, r: f64| SolveReport {
        iterations: u.iterations,
        residual: u.residual,
        converged: u.converged,
        shooting_steps: steps,
        support_scale: r,
    };
    if pure || matches!(target, GroundTarget::Normalized) {
        let (u, d) = unit_state(&solver, params, pc, &init, opts)?;
        let base = GroundState::assemble(d, solver, *params, j, report(&u, 1, 1.0))?;
        return match target {
            GroundTarget::Normalized => Ok(base),
            GroundTarget::Mass(m) => {
                if params.delta > 0.0 {
                    return invalid("a mass target alone fixes only pure Manev states; give (M_1, M_j)");
                }
                base.velocity_scaled((base.masses.m1 / m).sqrt())
            }
            GroundTarget::Constraints(c) => {
                let p = pc.p;
                if params.delta == 0.0 {
                    let have = velocity_invariant(base.masses.m1, base.masses.mj, p);
                    let want = velocity_invariant(c.m1, c.mj, p);
                    if (want / have - 1.0).abs() > 1e-6 {
                        return invalid("pure Manev steady states need J(M_1, M_j) = 1; use tune_pure_manev or a mass target");
                    }
                    return base.velocity_scaled((base.masses.m1 / c.m1).sqrt());
                }
                // pure Poisson: dilation by ell scales the invariant by ell^{3(1-p)/2}
                let have = velocity_invariant(base.masses.m1, base.masses.mj, p);
                let want = velocity_invariant(c.m1, c.mj, p);
                let ell = (want / have).powf(2.0 / (3.0 * (1.0 - p)));
                let d = base.dilated_pure(ell)?;
                let mut s = d.velocity_scaled((d.masses.m1 / c.m1).sqrt())?;
                s.report.support_scale = ell;
                Ok(s)
            }
        };
    }
    let GroundTarget::Constraints(c) = target else {
        return invalid("Poisson-Manev states need a constraint pair (M_1, M_j)");
    };
    shoot_combined(params, pc, j, c, &solver, init, opts)
}

/// Combined model: the state with support radius `R` is the dilation of the normalized state for
/// weights `(delta R^2, kappa R)`. `R` is located so that `M_j M_1^{(p-3)/2}` matches the target,
/// then the velocity symmetry fixes `M_1`.
fn shoot_combined(
    params: &ModelParams,
    pc: PowerCasimir,
    j: &CasimirSpec,
    c: &ConstraintPair,
    solver: &Arc<FieldSolver>,
    init: Vec<f64>,
    opts: &SolverOptions,
) -> Result<GroundState> {
    let p = pc.p;
    let want = velocity_invariant(c.m1, c.mj, p).ln();
    let mut warm = init;
    let mut steps = 0usize;
    let mut eval = |ln_r: f64| -> Result<(f64, Unit, PhaseDensity)> {
        let r = ln_r.exp();
        let eff = ModelParams { delta: params.delta * r * r, kappa: params.kappa * r };
        let (u, d) = unit_state(solver, &eff, pc, &warm, opts)?;
        if !u.converged {
            return Err(Error::NoConvergence { iterations: u.iterations, residual: u.residual });
        }
        warm = u.phi.clone();
        let (m1, mj) = (d.mass() * r.powi(3), d.casimir(j) * r.powi(3));
        Ok((velocity_invariant(m1, mj, p).ln() - want, u, d))
    };
    // the invariant decreases from its Manev limit (R -> 0) to 0 (R -> infinity)
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    let (mut glo, mut ghi) = {
        steps += 1;
        let g0 = eval(0.0)?.0;
        (g0, g0)
    };
    let mut step = 1.0;
    while glo < 0.0 {
        hi = lo;
        ghi = glo;
        lo -= step;
        step *= 1.5;
        if lo < -30.0 {
            return Err(Error::Bracket("constraint pair is not reachable: supercritical for the Manev part".into()));
        }
        steps += 1;
        glo = eval(lo)?.0;
    }
    step = 1.0;
    while ghi > 0.0 {
        lo = hi;
        glo = ghi;
        hi += step;
        step *= 1.5;
        if hi > 30.0 {
            return Err(Error::Bracket("constraint pair is not reachable within the support-radius range".into()));
        }
        steps += 1;
        ghi = eval(hi)?.0;
    }
    // Illinois false position on ln R
    let mut side = 0i32;
    for _ in 0..200 {
        let x = if glo != ghi { (lo * ghi - hi * glo) / (ghi - glo) } else { 0.5 * (lo + hi) };
        let x = if x > lo.min(hi) && x < lo.max(hi) { x } else { 0.5 * (lo + hi) };
        steps += 1;
        let (g, u, d) = eval(x)?;
        if g.abs() <= 1e-12 || (hi - lo).abs() <= 1e-14 {
            let r = x.exp();
            let mut state = GroundState::assemble(
                apply_rescale(&d, &RescaleParams::new(1.0, r, 1.0)?)?,
                Arc::new(solver.rescaled(r)),
                *params,
                j,
                SolveReport { iterations: u.iterations, residual: u.residual, converged: u.converged, shooting_steps: steps, support_scale: r },
            )?;
            state = state.velocity_scaled((state.masses.m1 / c.m1).sqrt())?;
            return Ok(state);
        }
        if g > 0.0 {
            lo = x;
            glo = g;
            if side == 1 {
                ghi *= 0.5;
            }
            side = 1;
        } else {
            hi = x;
            ghi = g;
            if side == -1 {
                glo *= 0.5;
            }
            side = -1;
        }
    }
    Err(Error::NoConvergence { iterations: 200, residual: glo.abs().min(ghi.abs()) })
}
