//! Radial mean-field particle simulator: shells `(r, u, l)` with `u` the radial velocity and
//! `l = |x ^ v|`, pushed by kick-drift-kick leapfrog in the self-consistent field of their
//! deposited density.

mod orbital;

pub use orbital::{
    ensemble_curve, ground_state_tdyn, orbital_distance, stability_experiment, DistanceMode, OrbitalDistance, Perturbation, StabilityOptions,
    StabilityReport,
};

use crate::error::{invalid, Error, Result};
use crate::phase_space::{CasimirSpec, CellLocator, ModelParams, PhaseDensity, RadialGrid};
use crate::potentials::{force, potential_energy, FieldSolver};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// Particles per chunk of the fixed-order reductions; sums do not depend on the thread count.
const CHUNK: usize = 4096;

/// Sum of `g(i)` over `0..n`, reduced chunk by chunk in index order.
fn ordered_sum(n: usize, g: impl Fn(usize) -> f64 + Sync) -> f64 {
    let parts: Vec<f64> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| (c * CHUNK..((c + 1) * CHUNK).min(n)).map(&g).sum::<f64>())
        .collect();
    parts.iter().sum()
}

/// Weighted radial shells; `q` is the phase-space density carried by each particle.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub l: Vec<f64>,
    pub w: Vec<f64>,
    pub q: Vec<f64>,
    /// Radius below which particles are reflected.
    pub r_floor: f64,
}

impl ParticleEnsemble {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        ordered_sum(self.len(), |i| self.w[i])
    }

    /// `|| |v|^2 f ||_1 = sum w (u^2 + l^2 / r^2)`.
    pub fn kinetic(&self) -> f64 {
        ordered_sum(self.len(), |i| self.w[i] * (self.u[i] * self.u[i] + (self.l[i] / self.r[i]).powi(2)))
    }

    /// `int j(f) = sum w j(q) / q`, exact for labels carried along characteristics.
    pub fn casimir(&self, j: &CasimirSpec) -> f64 {
        ordered_sum(self.len(), |i| if self.q[i] > 0.0 { self.w[i] * j.j(self.q[i]) / self.q[i] } else { 0.0 })
    }

    /// Ensemble of `f(lambda x, v / lambda)`: positions divided and velocities multiplied by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let mut e = self.clone();
        e.r.iter_mut().for_each(|r| *r /= lambda);
        e.u.iter_mut().for_each(|u| *u *= lambda);
        e.r_floor /= lambda;
        e
    }
}

/// Stratified sample of `f`: radii by inversion of the mass profile at stratified levels,
/// speeds by rejection from `w^2 dw` against `F(|w|^2/2 + phi_eff)`, isotropic directions.
/// Weights are `M_1 / N`; the drift of `f` is removed from the radial velocity.
pub fn sample_particles(f: &PhaseDensity, n: usize, seed: u64) -> Result<ParticleEnsemble> {
    if n < 1000 {
        return invalid("sampling needs at least 1000 particles");
    }
    if f.profile.is_zero() {
        return invalid("cannot sample a zero density");
    }
    let grid = &f.grid;
    let r = grid.nodes();
    let rho = f.density();
    let pe = f.phi_eff();
    let shell: Vec<f64> = rho.iter().zip(r).map(|(p, x)| 4.0 * PI * p * x * x).collect();
    let mut cum = grid.cumulative(&shell);
    for k in 1..cum.len() {
        cum[k] = cum[k].max(cum[k - 1]);
    }
    let m1 = cum[cum.len() - 1];
    let e_cut = f.profile.e_cut();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ens = ParticleEnsemble {
        r: Vec::with_capacity(n),
        u: Vec::with_capacity(n),
        l: Vec::with_capacity(n),
        w: vec![m1 / n as f64; n],
        q: Vec::with_capacity(n),
        r_floor: R_FLOOR * f.support_radius(),
    };
    let r_sup = f.support_radius();
    for i in 0..n {
        let target = m1 * (i as f64 + rng.gen::<f64>()) / n as f64;
        let k = cum.partition_point(|&c| c < target).clamp(1, cum.len() - 1);
        let t = if cum[k] > cum[k - 1] { (target - cum[k - 1]) / (cum[k] - cum[k - 1]) } else { 0.5 };
        // below the support radius the interpolated phi_eff stays under the cut-off
        let x = (r[k - 1] + t * (r[k] - r[k - 1])).clamp(ens.r_floor, r_sup);
        let p = grid.interp(&pe, x);
        let w_max = (2.0 * (e_cut - p)).max(0.0).sqrt();
        let top = f.profile.value(p);
        let (speed, q) = loop {
            let s = w_max * rng.gen::<f64>().cbrt();
            let q = f.profile.value(0.5 * s * s + p);
            if rng.gen::<f64>() * top <= q {
                break (s, q);
            }
        };
        let c: f64 = rng.gen_range(-1.0..1.0);
        ens.r.push(x);
        ens.u.push(speed * c - f.drift(x));
        ens.l.push(x * speed * (1.0 - c * c).sqrt());
        ens.q.push(q);
    }
    Ok(ens)
}

/// Reflection radius in units of the support radius.
pub const R_FLOOR: f64 = 1e-6;

/// Conservative radial field: `phi` is the cubic Hermite interpolant of nodal values and
/// derivatives, continued outside the grid by `-A/r - B/r^2` matching value and slope.
#[derive(Debug, Clone)]
pub struct ForceField {
    grid: Arc<RadialGrid>,
    phi: Vec<f64>,
    dphi: Vec<f64>,
    tail: (f64, f64),
    locator: CellLocator,
}

impl ForceField {
    pub fn new(grid: Arc<RadialGrid>, phi: Vec<f64>, dphi: Vec<f64>) -> Result<Self> {
        if phi.len() != grid.len() || dphi.len() != grid.len() {
            return Err(Error::GridMismatch("field tables must match the grid".into()));
        }
        let rm = grid.r_max();
        let (p, d) = (phi[phi.len() - 1], dphi[dphi.len() - 1]);
        // phi = -A/r - B/r^2, phi' = A/r^2 + 2B/r^3
        let b = (p * rm + d * rm * rm) * rm;
        let a = -p * rm - b / rm;
        let locator = grid.locator();
        Ok(Self { grid, phi, dphi, tail: (a, b), locator })
    }

    /// Field of a nodal potential with its five-point derivative.
    pub fn from_potential(grid: Arc<RadialGrid>, phi: Vec<f64>) -> Result<Self> {
        let d = force(&grid, &phi);
        Self::new(grid, phi, d)
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn potential(&self, r: f64) -> f64 {
        if r >= self.grid.r_max() {
            return -self.tail.0 / r - self.tail.1 / (r * r);
        }
        self.grid.interp_hermite(&self.phi, &self.dphi, r)
    }

    /// `phi'(r)`, the exact derivative of [`Self::potential`].
    pub fn slope(&self, r: f64) -> f64 {
        if r >= self.grid.r_max() {
            return self.tail.0 / (r * r) + 2.0 * self.tail.1 / (r * r * r);
        }
        let g = &self.grid;
        let x = g.nodes();
        let i = self.locator.locate(r);
        let h = x[i + 1] - x[i];
        let t = (r - x[i]) / h;
        let (v0, v1, d0, d1) = (self.phi[i], self.phi[i + 1], self.dphi[i], self.dphi[i + 1]);
        ((6.0 * t * t - 6.0 * t) * (v0 - v1) / h) + (3.0 * t * t - 4.0 * t + 1.0) * d0 + (3.0 * t * t - 2.0 * t) * d1
    }
}

fn kick(ens: &mut ParticleEnsemble, field: &ForceField, dt: f64) {
    let r = &ens.r;
    ens.u.par_iter_mut().enumerate().for_each(|(i, u)| *u -= dt * field.slope(r[i]));
}

/// Exact free flight `x + v t` expressed in `(r, u)`; `l` is invariant and the centrifugal
/// barrier is integrated without error. Orbits through the origin come out reflected.
fn drift(ens: &mut ParticleEnsemble, dt: f64) {
    kick_drift(ens, None, dt);
}

/// Optional kick `(field, kick_dt)` followed by exact free flight, in one pass.
fn kick_drift(ens: &mut ParticleEnsemble, kick: Option<(&ForceField, f64)>, dt: f64) {
    let floor = ens.r_floor;
    let l = &ens.l;
    ens.r.par_iter_mut().zip(ens.u.par_iter_mut()).enumerate().for_each(|(i, (r, u))| {
        if let Some((field, h)) = kick {
            *u -= h * field.slope(*r);
        }
        let (r0, u0) = (*r, *u);
        let tangential = l[i] * dt / r0;
        let radial = r0 + u0 * dt;
        let v2 = u0 * u0 + (l[i] / r0).powi(2);
        let mut r1 = radial.hypot(tangential);
        *u = if r1 > 0.0 { (r0 * u0 + v2 * dt) / r1 } else { u0.abs() };
        if r1 < floor {
            r1 = 2.0 * floor - r1;
        }
        *r = r1;
    });
}

/// Kick-drift-kick step in a frozen field: half kicks by `-phi'`, exact free flight in between.
pub fn step(ens: &mut ParticleEnsemble, field: &ForceField, dt: f64) {
    kick(ens, field, 0.5 * dt);
    drift(ens, dt);
    kick(ens, field, 0.5 * dt);
}

/// `u^2/2 + l^2/(2 r^2) + phi(r)` per particle.
pub fn particle_energies(ens: &ParticleEnsemble, field: &ForceField) -> Vec<f64> {
    (0..ens.len())
        .into_par_iter()
        .map(|i| 0.5 * ens.u[i] * ens.u[i] + 0.5 * (ens.l[i] / ens.r[i]).powi(2) + field.potential(ens.r[i]))
        .collect()
}

/// Nodal density from the cumulative mass: `rho_i = (M(r_b) - M(r_a)) / (V(r_b) - V(r_a))` over the
/// window `[r_{i-k}, r_{i+k}]`, widened symmetrically until it holds `min_weight`, then rescaled so
/// that the shell integral equals the weight inside the grid. The widening keeps a lone particle in
/// the tiny central cells from producing a density spike (and a self-force).
/// Returns `(rho, weight outside the grid)`.
pub fn deposit(ens: &ParticleEnsemble, grid: &RadialGrid, bandwidth: usize, min_weight: f64) -> (Vec<f64>, f64) {
    let x = grid.nodes();
    let n = x.len();
    let locator = grid.locator();
    let parts: Vec<(Vec<f64>, f64)> = (0..ens.len().div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut cells = vec![0.0; n];
            let mut outside = 0.0;
            for i in c * CHUNK..((c + 1) * CHUNK).min(ens.len()) {
                let r = ens.r[i];
                if r >= grid.r_max() {
                    outside += ens.w[i];
                    continue;
                }
                // top-hat one cell wide centered on r: M(r_j) is continuous in r and unbiased
                let k = locator.locate(r);
                let t = (r - x[k]) / (x[k + 1] - x[k]);
                let w = ens.w[i];
                if t < 0.5 {
                    // nothing lies inside r_0 = 0
                    let below = if k == 0 { 0.0 } else { (0.5 - t) * w };
                    cells[k] += below;
                    cells[k + 1] += w - below;
                } else {
                    cells[k + 1] += (1.5 - t) * w;
                    if k + 2 < n {
                        cells[k + 2] += (t - 0.5) * w;
                    } else {
                        outside += (t - 0.5) * w;
                    }
                }
            }
            (cells, outside)
        })
        .collect();
    let mut cum = vec![0.0; n];
    let mut outside = 0.0;
    for (cells, o) in &parts {
        for (c, v) in cum.iter_mut().zip(cells) {
            *c += v;
        }
        outside += o;
    }
    for k in 1..n {
        cum[k] += cum[k - 1];
    }
    let k = bandwidth.max(1);
    let vol = |r: f64| 4.0 * PI * r.powi(3) / 3.0;
    let mut rho: Vec<f64> = (0..n)
        .map(|i| {
            let (mut a, mut b) = (i.saturating_sub(k), (i + k).min(n - 1));
            while cum[b] - cum[a] < min_weight && (a > 0 || b < n - 1) {
                a = a.saturating_sub(1);
                b = (b + 1).min(n - 1);
            }
            (cum[b] - cum[a]) / (vol(x[b]) - vol(x[a]))
        })
        .collect();
    let inside = cum[n - 1];
    let m = grid.integrate_shell(&rho);
    if m > 0.0 {
        rho.iter_mut().for_each(|p| *p *= inside / m);
    }
    (rho, outside)
}

/// Time stepping controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub steps: usize,
    pub window: DepositWindow,
    /// Field recomputed every `force_every` steps.
    pub force_every: usize,
    /// Diagnostics recorded every `sample_every` steps.
    pub sample_every: usize,
    pub params: ModelParams,
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return invalid("time step must be positive");
        }
        if self.window.bandwidth == 0 || self.force_every == 0 || self.sample_every == 0 {
            return invalid("bandwidth and cadences must be at least 1");
        }
        Ok(())
    }
}

/// Crossing time `R / sqrt(|| |v|^2 f || / M_1)` of a state.
pub fn dynamical_time(support_radius: f64, kinetic: f64, mass: f64) -> f64 {
    support_radius / (kinetic / mass).sqrt()
}

/// Diagnostics at one sample time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticSample {
    pub t: f64,
    pub h: f64,
    /// Deposited mass inside the grid.
    pub m1: f64,
    pub casimir: f64,
    pub kinetic: f64,
    pub ep: f64,
    pub em: f64,
    /// Weight outside the grid.
    pub escaped: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticSeries {
    pub samples: Vec<DiagnosticSample>,
    /// Set when the kinetic energy exceeded `1e3` times its initial value.
    pub blowup_flag: bool,
}

impl DiagnosticSeries {
    /// `max |H(t) - H(0)| / || |v|^2 f(0) ||`; the kinetic scale stays meaningful when `H(0) = 0`.
    pub fn h_drift(&self) -> f64 {
        let s0 = &self.samples[0];
        self.samples.iter().map(|s| (s.h - s0.h).abs()).fold(0.0, f64::max) / s0.kinetic
    }

    pub fn mass_drift(&self) -> f64 {
        let s0 = &self.samples[0];
        self.samples.iter().map(|s| (s.m1 - s0.m1).abs()).fold(0.0, f64::max) / s0.m1
    }

    pub fn casimir_drift(&self) -> f64 {
        let s0 = &self.samples[0];
        self.samples.iter().map(|s| (s.casimir - s0.casimir).abs()).fold(0.0, f64::max) / s0.casimir
    }
}

/// Self-consistent field and energies of an ensemble.
pub struct FieldState {
    pub field: ForceField,
    pub rho: Vec<f64>,
    pub ep: f64,
    pub em: f64,
    pub escaped: f64,
}

/// Deposit window of `k` cells holding at least `window` mean particle weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepositWindow {
    pub bandwidth: usize,
    pub particles: usize,
}

impl Default for DepositWindow {
    fn default() -> Self {
        Self { bandwidth: 2, particles: 64 }
    }
}

pub fn field_of(ens: &ParticleEnsemble, solver: &FieldSolver, params: &ModelParams, window: DepositWindow) -> Result<FieldState> {
    let grid = solver.grid();
    let min_weight = window.particles as f64 * ens.total_weight() / ens.len() as f64;
    let (rho, escaped) = deposit(ens, grid, window.bandwidth, min_weight);
    let parts = solver.parts(&rho, params)?;
    let ep = if params.delta > 0.0 { potential_energy(grid, &rho, &parts.poisson)? } else { 0.0 };
    let em = if params.kappa > 0.0 { potential_energy(grid, &rho, &parts.manev)? } else { 0.0 };
    let field = ForceField::from_potential(grid.clone(), parts.combined(params))?;
    Ok(FieldState { field, rho, ep, em, escaped })
}

/// Deposit, field, kick-drift-kick; samples every `sample_every` steps plus the initial state.
/// `observer` sees the ensemble at every sample time.
pub fn evolve_with(
    ens: &mut ParticleEnsemble,
    solver: &FieldSolver,
    j: &CasimirSpec,
    cfg: &EvolutionConfig,
    mut observer: impl FnMut(f64, &ParticleEnsemble, &FieldState),
) -> Result<DiagnosticSeries> {
    cfg.validate()?;
    let p = &cfg.params;
    let casimir = ens.casimir(j);
    let mut fs = field_of(ens, solver, p, cfg.window)?;
    let record = |t: f64, ens: &ParticleEnsemble, fs: &FieldState| {
        let kinetic = ens.kinetic();
        DiagnosticSample {
            t,
            h: kinetic - p.delta * fs.ep - p.kappa * fs.em,
            m1: solver.grid().integrate_shell(&fs.rho),
            casimir,
            kinetic,
            ep: fs.ep,
            em: fs.em,
            escaped: fs.escaped,
        }
    };
    let mut samples = vec![record(0.0, ens, &fs)];
    observer(0.0, ens, &fs);
    let k0 = samples[0].kinetic;
    let mut blowup_flag = false;
    // the closing half kick of a step merges with the opening one of the next,
    // except where a sample needs synchronized velocities
    let mut pending = 0.5 * cfg.dt;
    for n in 1..=cfg.steps {
        kick_drift(ens, Some((&fs.field, pending)), cfg.dt);
        if n % cfg.force_every == 0 || n % cfg.sample_every == 0 {
            fs = field_of(ens, solver, p, cfg.window)?;
        }
        pending = cfg.dt;
        if n % cfg.sample_every == 0 || n == cfg.steps {
            kick(ens, &fs.field, 0.5 * cfg.dt);
            pending = 0.5 * cfg.dt;
        }
        if n % cfg.sample_every == 0 {
            let t = n as f64 * cfg.dt;
            let s = record(t, ens, &fs);
            observer(t, ens, &fs);
            samples.push(s);
            if s.kinetic > 1e3 * k0 {
                blowup_flag = true;
                break;
            }
        }
    }
    Ok(DiagnosticSeries { samples, blowup_flag })
}

pub fn evolve(ens: &mut ParticleEnsemble, solver: &FieldSolver, j: &CasimirSpec, cfg: &EvolutionConfig) -> Result<DiagnosticSeries> {
    evolve_with(ens, solver, j, cfg, |_, _, _| {})
}
