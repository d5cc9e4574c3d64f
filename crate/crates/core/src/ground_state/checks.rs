use super::GroundState;
use super::Multipliers;
use crate::error::{Error, Result};
use crate::phase_space::{CasimirSpec, ConstraintPair, EnergyProfile, ModelParams, PhaseDensity};
use crate::potentials::{energies, FieldSolver};
use crate::quad::linear_fit;
use crate::rearrangement::{abel_invert, AbelTable, JacobianContext};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

/// Multipliers from the integral identities next to those read off the profile by regression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplierCheck {
    /// `mu = -K / (3 C_Q)`, `lambda = -(E_pot - K (5 + 2 M_j / C_Q) / 6) / M_1`.
    pub formula: Multipliers,
    /// Fit of `E = lambda - |mu| j'(Q)` over the support.
    pub regression: Multipliers,
    pub rel_diff_lambda: f64,
    pub rel_diff_mu: f64,
}

pub fn recover_multipliers(state: &GroundState) -> Result<MultiplierCheck> {
    let Multipliers { c_q, .. } = state.multipliers;
    if !(c_q > 0.0) {
        return Err(Error::Unresolvable(format!("C_Q = {c_q} is not positive: growth condition violated or state unconverged")));
    }
    let e = &state.energies;
    let (m1, mj) = (state.masses.m1, state.masses.mj);
    let mu = -e.kinetic / (3.0 * c_q);
    let lambda = -(e.epot - e.kinetic / 6.0 * (5.0 + 2.0 * mj / c_q)) / m1;
    let formula = Multipliers { lambda, mu, c_q };

    let prof = &state.density.profile;
    let e_min = state.density.phi_eff().iter().cloned().fold(f64::INFINITY, f64::min);
    let e_cut = prof.e_cut();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for k in 1..200 {
        let en = e_min + (e_cut - e_min) * k as f64 / 200.0;
        xs.push(state.casimir.dj(prof.value(en)));
        ys.push(en);
    }
    let (slope, intercept) = linear_fit(&xs, &ys);
    let regression = Multipliers { lambda: intercept, mu: slope, c_q };
    Ok(MultiplierCheck {
        formula,
        regression,
        rel_diff_lambda: (formula.lambda / regression.lambda - 1.0).abs(),
        rel_diff_mu: (formula.mu / regression.mu - 1.0).abs(),
    })
}

/// `|K - (delta/2) E^P - kappa E^M| / K` for a density in its own field.
pub fn virial_residual_of(f: &PhaseDensity, solver: &FieldSolver, params: &ModelParams) -> Result<f64> {
    let e = energies(f, solver, params)?;
    Ok((e.kinetic - 0.5 * params.delta * e.ep - params.kappa * e.em).abs() / e.kinetic)
}

pub fn virial_residual(state: &GroundState) -> f64 {
    let (e, p) = (&state.energies, &state.params);
    (e.kinetic - 0.5 * p.delta * e.ep - p.kappa * e.em).abs() / e.kinetic
}

/// `K_hat - kappa M_1^{(p-3)/(3(p-1))} (M_1 + M_j)^{2/(3(p-1))}`; positive values are
/// only indicative since `K_hat` bounds the true constant from above.
pub fn subcritical_margin(targets: &ConstraintPair, kappa: f64, estimate: f64, p: f64) -> f64 {
    let d = 3.0 * (p - 1.0);
    estimate - kappa * targets.m1.powf((p - 3.0) / d) * (targets.m1 + targets.mj).powf(2.0 / d)
}

/// Monotonicity, compact support, multiplier signs and the exterior Poisson law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructuralReport {
    pub rho_nonincreasing: bool,
    pub phi_nondecreasing: bool,
    pub compact_support: bool,
    pub lambda_negative: bool,
    pub mu_negative: bool,
    /// Max relative deviation of `phi_P` from `-M_1 / (4 pi r)` outside the support.
    pub exterior_law_error: f64,
}

impl StructuralReport {
    pub fn all_hold(&self) -> bool {
        self.rho_nonincreasing && self.phi_nondecreasing && self.compact_support && self.lambda_negative && self.mu_negative
    }
}

pub fn structural_checks(state: &GroundState) -> Result<StructuralReport> {
    let rho = &state.rho;
    let phi = &state.potential.values;
    let top = rho.iter().cloned().fold(0.0, f64::max);
    let r = state.solver.grid().nodes();
    let rq = state.support_radius;
    let pp = state.solver.poisson(rho)?;
    let m1 = state.masses.m1;
    let mut ext = 0.0f64;
    for (i, &x) in r.iter().enumerate() {
        if x > 1.01 * rq {
            ext = ext.max((pp[i] / (-m1 / (4.0 * PI * x)) - 1.0).abs());
        }
    }
    Ok(StructuralReport {
        rho_nonincreasing: rho.windows(2).all(|w| w[1] <= w[0] + 1e-12 * top),
        phi_nondecreasing: phi.windows(2).all(|w| w[1] >= w[0] - 1e-12 * phi[0].abs()),
        compact_support: rq < r[r.len() - 1] && r.iter().zip(rho).all(|(&x, &p)| x <= rq || p == 0.0),
        lambda_negative: state.multipliers.lambda < 0.0,
        mu_negative: state.multipliers.mu < 0.0,
        exterior_law_error: ext,
    })
}

/// `4 pi sqrt2 |mu|^{1/2} (j')^{-1}(k0) k0^{1/2}`: Lipschitz constant of `phi -> rho` on `{phi >= lambda - |mu| k0}`.
pub fn lipschitz_bound(j: &CasimirSpec, mu: f64, k0: f64) -> f64 {
    4.0 * PI * SQRT_2 * mu.abs().sqrt() * j.dj_inv(k0) * k0.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzCheck {
    /// `max |rho(x) - rho(y)| / |phi(x) - phi(y)|` over neighbouring nodes.
    pub ratio: f64,
    /// Bound at `k0 = (lambda - phi(0)) / |mu|`.
    pub bound: f64,
}

pub fn density_lipschitz_check(state: &GroundState) -> LipschitzCheck {
    let (rho, phi) = (&state.rho, &state.potential.values);
    let mut ratio = 0.0f64;
    for i in 0..rho.len() - 1 {
        let dphi = (phi[i + 1] - phi[i]).abs();
        if dphi > 1e-14 * phi[0].abs() {
            ratio = ratio.max((rho[i + 1] - rho[i]).abs() / dphi);
        }
    }
    let Multipliers { lambda, mu, .. } = state.multipliers;
    let k0 = (lambda - phi[0]) / mu.abs();
    LipschitzCheck { ratio, bound: lipschitz_bound(&state.casimir, mu, k0) }
}

/// Minimum over trial functions of `K_j^M`, each optimized over its amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KjmEstimate {
    pub value: f64,
    pub samples: Vec<f64>,
}

/// `min_gamma K_j^M(gamma f)`; the remaining rescalings leave `K_j^M` unchanged.
pub fn kjm_over_amplitude(f: &PhaseDensity, solver: &FieldSolver, j: &CasimirSpec) -> Result<f64> {
    let rho = f.density();
    let em = crate::potentials::potential_energy(solver.grid(), &rho, &solver.manev(&rho)?)?;
    let (kin, m1) = (f.kinetic(), solver.grid().integrate_shell(&rho));
    let p = j.p();
    let d = 3.0 * (p - 1.0);
    let (a, b) = ((p - 3.0) / d, 2.0 / d);
    let terms: Vec<(f64, f64, f64)> = match j {
        CasimirSpec::Powers(t) => t.iter().map(|&(c, q)| Ok((c, q, f.casimir(&CasimirSpec::power(q)?)))).collect::<Result<_>>()?,
        CasimirSpec::Custom { .. } => Vec::new(),
    };
    let casimir = |g: f64| -> f64 {
        if terms.is_empty() {
            f.casimir_with(&|t| j.j(g * t))
        } else {
            terms.iter().map(|&(c, q, m)| c * g.powf(q) * m).sum()
        }
    };
    let val = |lg: f64| {
        let g = lg.exp();
        kin * (g * m1).powf(a) * (g * m1 + casimir(g)).powf(b) / (g * em)
    };
    // coarse scan, then golden section around the best point
    let mut best = (0.0, f64::INFINITY);
    for k in -60..=60 {
        let x = k as f64 * 0.5;
        let v = val(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    let (mut lo, mut hi) = (best.0 - 0.5, best.0 + 0.5);
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let (x1, x2) = (hi - gr * (hi - lo), lo + gr * (hi - lo));
        if val(x1) < val(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    Ok(val(0.5 * (lo + hi)).min(best.1))
}

/// Upper estimate of the sharp constant `K_j^M` from seeded polytropic trials plus solved states.
pub fn estimate_kjm(solver: &FieldSolver, j: &CasimirSpec, family_size: usize, seed: u64, minimizers: &[&GroundState]) -> Result<KjmEstimate> {
    let grid = solver.grid();
    let r_max = grid.r_max();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(family_size + minimizers.len());
    for _ in 0..family_size {
        let width = rng.gen_range(0.3..1.0) * r_max / 3.0;
        let n = rng.gen_range(0.1..3.0);
        let phi: Vec<f64> = grid.nodes().iter().map(|&r| -1.0 / (1.0 + (r / width).powi(2)).sqrt()).collect();
        let floor = phi[phi.len() - 1];
        let e_cut = floor + rng.gen_range(0.05..0.6) * (-1.0 - floor);
        let f = PhaseDensity::new(grid.clone(), EnergyProfile::power_law(1.0, n, e_cut)?, phi, 0.0, None)?;
        samples.push(kjm_over_amplitude(&f, solver, j)?);
    }
    for s in minimizers {
        samples.push(kjm_over_amplitude(&s.density, &s.solver, j)?);
    }
    let value = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(KjmEstimate { value, samples })
}

/// Jacobian `a(tau)` of a state on `k + 1` uniform energies in `[phi(0), e_cut]` and the
/// potential distribution `mu_psi(w) = meas{phi_Q < w}` recovered from it by Abel inversion.
pub fn potential_distribution(state: &GroundState, k: usize) -> Result<(AbelTable, AbelTable)> {
    let ctx = JacobianContext::of(&state.density)?;
    let lo = ctx.e_min();
    let hi = state.density.profile.e_cut();
    let a = AbelTable::sample(lo, hi, k, |t| ctx.a_unchecked(t))?;
    let mu = abel_invert(&a)?;
    Ok((a, mu))
}
