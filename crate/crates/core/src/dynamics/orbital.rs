use super::{dynamical_time, DepositWindow, evolve_with, field_of, sample_particles, DiagnosticSeries, EvolutionConfig, FieldState, ParticleEnsemble};
use crate::error::{invalid, Result};
use crate::ground_state::GroundState;
use crate::phase_space::{distribution_curve, equimeasurability_distance, DistributionCurve};
use serde::{Deserialize, Serialize};

/// Level count of particle distribution curves.
const LEVELS: usize = 800;

/// `mu(t) = sum_{q_p > t} w_p / q_p`: each particle carries phase volume `w / q`, so the curve is
/// fixed by weights and labels alone and is invariant along the flow.
pub fn ensemble_curve(ens: &ParticleEnsemble) -> DistributionCurve {
    let mut pairs: Vec<(f64, f64)> = ens.q.iter().zip(&ens.w).filter(|(&q, _)| q > 0.0).map(|(&q, &w)| (q, w / q)).collect();
    if pairs.is_empty() {
        return DistributionCurve::zero();
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let sup = pairs[pairs.len() - 1].0;
    let levels: Vec<f64> = (0..=LEVELS).map(|k| sup * k as f64 / LEVELS as f64).collect();
    // suffix sums of phase volume, in descending label order
    let mut tail = vec![0.0; pairs.len() + 1];
    for i in (0..pairs.len()).rev() {
        tail[i] = tail[i + 1] + pairs[i].1;
    }
    let volumes = levels
        .iter()
        .map(|&l| {
            let i = pairs.partition_point(|p| p.0 <= l);
            tail[i]
        })
        .collect();
    DistributionCurve { levels, volumes }
}

/// How the ensemble is compared with the ground state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DistanceMode {
    Plain,
    /// Rescales `f -> f(lambda x, v / lambda)` with `lambda^2 = || |v|^2 Q || / || |v|^2 f ||`,
    /// which preserves every level-set measure; the pure Manev notion of stability.
    Scaled,
}

/// Computable surrogate for the orbital distance to `Q` with the translation fixed to 0:
/// `|H(f) - H(Q)| / || |v|^2 Q || + || rho_f - rho_Q ||_1 / M_1(Q) + d_eq(f, Q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitalDistance {
    pub total: f64,
    pub energy: f64,
    pub density: f64,
    pub equimeasurability: f64,
    /// Scale applied in [`DistanceMode::Scaled`], 1 otherwise.
    pub lambda: f64,
}

pub fn orbital_distance(ens: &ParticleEnsemble, state: &GroundState, mode: DistanceMode, window: DepositWindow) -> Result<OrbitalDistance> {
    let q_curve = distribution_curve(&state.density)?;
    distance_with_curve(ens, state, &q_curve, mode, window)
}

fn distance_with_curve(ens: &ParticleEnsemble, state: &GroundState, q_curve: &DistributionCurve, mode: DistanceMode, window: DepositWindow) -> Result<OrbitalDistance> {
    let kin_q = state.energies.kinetic;
    let lambda = match mode {
        DistanceMode::Plain => 1.0,
        DistanceMode::Scaled => (kin_q / ens.kinetic()).sqrt(),
    };
    let scaled;
    let e = if lambda == 1.0 {
        ens
    } else {
        scaled = ens.scaled(lambda);
        &scaled
    };
    let fs = field_of(e, &state.solver, &state.params, window)?;
    Ok(distance_from_field(e, &fs, state, q_curve, lambda))
}

fn distance_from_field(ens: &ParticleEnsemble, fs: &FieldState, state: &GroundState, q_curve: &DistributionCurve, lambda: f64) -> OrbitalDistance {
    let p = &state.params;
    let kin_q = state.energies.kinetic;
    let h = ens.kinetic() - p.delta * fs.ep - p.kappa * fs.em;
    let energy = (h - state.energies.h).abs() / kin_q;
    let diff: Vec<f64> = fs.rho.iter().zip(&state.rho).map(|(a, b)| (a - b).abs()).collect();
    let density = (state.solver.grid().integrate_shell(&diff) + fs.escaped) / state.masses.m1;
    let equimeasurability = equimeasurability_distance(q_curve, &ensemble_curve(ens));
    OrbitalDistance { total: energy + density + equimeasurability, energy, density, equimeasurability, lambda }
}

/// Initial perturbation of a sampled ground state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Perturbation {
    /// `f = (1 + eps)^{-3} Q(x / (1 + eps), v)`: same mass, same velocity law, diluted in space.
    Dilation(f64),
    /// `f = Q(x / (1 + eps), (1 + eps) v)`: measure preserving, so mass and every level-set
    /// measure are unchanged and `H` moves only at second order.
    Symplectic(f64),
    /// `f = (1 + eps) Q`.
    Amplitude(f64),
}

impl Perturbation {
    pub fn apply(&self, ens: &mut ParticleEnsemble) {
        match *self {
            Perturbation::Dilation(eps) => {
                let s = 1.0 + eps;
                ens.r.iter_mut().for_each(|r| *r *= s);
                ens.l.iter_mut().for_each(|l| *l *= s);
                ens.q.iter_mut().for_each(|q| *q /= s.powi(3));
                ens.r_floor *= s;
            }
            Perturbation::Symplectic(eps) => {
                let s = 1.0 + eps;
                ens.r.iter_mut().for_each(|r| *r *= s);
                ens.u.iter_mut().for_each(|u| *u /= s);
                ens.r_floor *= s;
            }
            Perturbation::Amplitude(eps) => {
                ens.w.iter_mut().for_each(|w| *w *= 1.0 + eps);
                ens.q.iter_mut().for_each(|q| *q *= 1.0 + eps);
            }
        }
    }
}

/// Controls of [`stability_experiment`]; times are in units of the crossing time of `Q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityOptions {
    pub particles: usize,
    pub seed: u64,
    pub perturbation: Perturbation,
    pub horizon: f64,
    /// `dt / t_dyn`.
    pub dt_fraction: f64,
    /// Samples per crossing time.
    pub samples_per_tdyn: usize,
    pub window: DepositWindow,
    pub mode: DistanceMode,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        Self {
            particles: 100_000,
            seed: 7,
            perturbation: Perturbation::Symplectic(0.01),
            horizon: 20.0,
            dt_fraction: 0.01,
            samples_per_tdyn: 4,
            window: DepositWindow::default(),
            mode: DistanceMode::Plain,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub t_dyn: f64,
    pub times: Vec<f64>,
    pub distances: Vec<OrbitalDistance>,
    pub series: DiagnosticSeries,
    /// `max_t D(t) / D(0)`.
    pub ratio: f64,
}

impl StabilityReport {
    pub fn initial(&self) -> f64 {
        self.distances[0].total
    }

    pub fn max(&self) -> f64 {
        self.distances.iter().map(|d| d.total).fold(0.0, f64::max)
    }
}

/// Crossing time of a ground state.
pub fn ground_state_tdyn(state: &GroundState) -> f64 {
    dynamical_time(state.support_radius, state.energies.kinetic, state.masses.m1)
}

/// Samples `Q`, perturbs, evolves self-consistently and records the orbital distance.
pub fn stability_experiment(state: &GroundState, opts: &StabilityOptions) -> Result<StabilityReport> {
    if opts.mode == DistanceMode::Plain && state.params.delta == 0.0 {
        return invalid("pure Manev stability is only meaningful in scaled mode");
    }
    if !(opts.horizon > 0.0 && opts.dt_fraction > 0.0) || opts.samples_per_tdyn == 0 {
        return invalid("horizon, time step and sampling cadence must be positive");
    }
    let t_dyn = ground_state_tdyn(state);
    let mut ens = sample_particles(&state.density, opts.particles, opts.seed)?;
    opts.perturbation.apply(&mut ens);
    let per = (1.0 / (opts.dt_fraction * opts.samples_per_tdyn as f64)).round().max(1.0) as usize;
    let steps = (opts.horizon / opts.dt_fraction).round() as usize;
    let cfg = EvolutionConfig {
        dt: opts.dt_fraction * t_dyn,
        steps,
        window: opts.window,
        force_every: 1,
        sample_every: per,
        params: state.params,
    };
    let q_curve = distribution_curve(&state.density)?;
    let mut times = Vec::new();
    let mut distances = Vec::new();
    let mut failure = None;
    let series = evolve_with(&mut ens, &state.solver, &state.casimir, &cfg, |t, e, fs| {
        let d = match opts.mode {
            DistanceMode::Plain => Ok(distance_from_field(e, fs, state, &q_curve, 1.0)),
            DistanceMode::Scaled => distance_with_curve(e, state, &q_curve, DistanceMode::Scaled, opts.window),
        };
        match d {
            Ok(d) => {
                times.push(t);
                distances.push(d);
            }
            Err(err) => failure = failure.take().or(Some(err)),
        }
    })?;
    if let Some(err) = failure {
        return Err(err);
    }
    let d0 = distances[0].total;
    let ratio = distances.iter().map(|d| d.total).fold(0.0, f64::max) / d0;
    Ok(StabilityReport { t_dyn, times, distances, series, ratio })
}
