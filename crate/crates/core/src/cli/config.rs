//! Run configuration: `key = value` lines under `[model]`, `[grid]`, `[solver]`, `[dynamics]`
//! and `[output]`. Every key has a default; unknown keys and sections are rejected.

use crate::dynamics::{DepositWindow, DistanceMode, Perturbation, StabilityOptions};
use crate::error::{Error, Result};
use crate::ground_state::{GroundTarget, SolverOptions};
use crate::phase_space::{CasimirSpec, ConstraintPair, ModelParams};
use crate::self_similar::{RelaxOptions, ResidualResolution};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub grid: GridSection,
    pub solver: SolverSection,
    pub dynamics: DynamicsSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub delta: f64,
    pub kappa: f64,
    /// Casimir `j(t) = t^p` (`p = q`) or `t^p + t^q`.
    pub p: f64,
    pub q: f64,
    pub m1: f64,
    /// Ignored for pure Manev, whose only free constraint is the mass.
    pub mj: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub nodes: usize,
    pub extent: f64,
    pub grading: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub damping: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub relax_max_iter: usize,
    pub relax_tol: f64,
    /// Members of the drift ladder `b*, b*/2, ...`.
    pub ladder_levels: usize,
    pub residual_nr: usize,
    pub residual_nu: usize,
    pub residual_nc: usize,
    /// Trial profiles of the `K_j^M` estimate.
    pub kjm_family: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsSection {
    pub particles: usize,
    /// `symplectic`, `dilation` or `amplitude`.
    pub perturbation: String,
    pub epsilon: f64,
    /// In crossing times.
    pub horizon: f64,
    pub dt_fraction: f64,
    pub samples_per_tdyn: usize,
    pub bandwidth: usize,
    pub window_particles: usize,
    /// `plain`, `scaled` or `auto` (scaled for pure Manev, plain otherwise).
    pub mode: String,
    /// Blow-up time of the explicit families.
    pub blowup_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelSection::default(),
            grid: GridSection::default(),
            solver: SolverSection::default(),
            dynamics: DynamicsSection::default(),
            output: OutputSection::default(),
        }
    }
}

impl Default for ModelSection {
    fn default() -> Self {
        Self { delta: 0.0, kappa: 1.0, p: 4.0, q: 4.0, m1: 1.0, mj: 1.0 }
    }
}

impl Default for GridSection {
    fn default() -> Self {
        let s = SolverOptions::default();
        Self { nodes: s.nodes, extent: s.extent, grading: s.grading }
    }
}

impl Default for SolverSection {
    fn default() -> Self {
        let s = SolverOptions::default();
        let r = RelaxOptions::default();
        let res = ResidualResolution::default();
        Self {
            damping: s.damping,
            max_iter: s.max_iter,
            tol: s.tol,
            relax_max_iter: r.max_iter,
            relax_tol: r.tol,
            ladder_levels: 5,
            residual_nr: res.nr,
            residual_nu: res.nu,
            residual_nc: res.nc,
            kjm_family: 100,
        }
    }
}

impl Default for DynamicsSection {
    fn default() -> Self {
        let s = StabilityOptions::default();
        Self {
            particles: s.particles,
            perturbation: "symplectic".into(),
            epsilon: 0.0,
            horizon: s.horizon,
            dt_fraction: s.dt_fraction,
            samples_per_tdyn: s.samples_per_tdyn,
            bandwidth: s.window.bandwidth,
            window_particles: s.window.particles,
            mode: "auto".into(),
            blowup_time: 1.0,
        }
    }
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: "out".into(), seed: 7 }
    }
}

fn bad<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

fn positive(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return bad(format!("{name} must be positive"));
    }
    Ok(())
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn emit(&self) -> String {
        toml::to_string(self).expect("plain tables serialize")
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        ModelParams::new(m.delta, m.kappa).map_err(|e| Error::Config(e.to_string()))?;
        if !(m.p > 3.0 && m.p <= m.q && m.q.is_finite()) {
            return bad("Casimir exponents must satisfy 3 < p <= q");
        }
        positive("m1", m.m1)?;
        positive("mj", m.mj)?;
        if self.grid.nodes < 50 {
            return bad("grid needs at least 50 nodes");
        }
        positive("extent", self.grid.extent - 1.0).map_err(|_| Error::Config("extent must exceed 1".into()))?;
        positive("grading", self.grid.grading)?;
        let s = &self.solver;
        if !(s.damping > 0.0 && s.damping <= 1.0) {
            return bad("damping must lie in (0, 1]");
        }
        positive("tol", s.tol)?;
        positive("relax_tol", s.relax_tol)?;
        if s.max_iter == 0 || s.relax_max_iter == 0 || s.ladder_levels == 0 || s.kjm_family == 0 {
            return bad("iteration caps, ladder levels and family size must be at least 1");
        }
        if s.residual_nr < 4 || s.residual_nu < 4 || s.residual_nc < 4 {
            return bad("residual grid needs at least 4 cells per direction");
        }
        let d = &self.dynamics;
        if d.particles < 1000 {
            return bad("dynamics needs at least 1000 particles");
        }
        self.perturbation()?;
        self.mode()?;
        if !(d.epsilon >= 0.0 && d.epsilon < 1.0) {
            return bad("epsilon must lie in [0, 1)");
        }
        positive("horizon", d.horizon)?;
        positive("dt_fraction", d.dt_fraction)?;
        positive("blowup_time", d.blowup_time)?;
        if d.samples_per_tdyn == 0 || d.bandwidth == 0 || d.window_particles == 0 {
            return bad("sampling cadence and deposit window must be at least 1");
        }
        if self.output.dir.is_empty() {
            return bad("output directory must be set");
        }
        Ok(())
    }

    pub fn params(&self) -> ModelParams {
        ModelParams { delta: self.model.delta, kappa: self.model.kappa }
    }

    pub fn casimir(&self) -> Result<CasimirSpec> {
        let m = &self.model;
        if m.p == m.q {
            CasimirSpec::power(m.p)
        } else {
            CasimirSpec::powers(vec![(1.0, m.p), (1.0, m.q)])
        }
    }

    /// Pure Manev states are fixed by the mass alone.
    pub fn target(&self) -> Result<GroundTarget> {
        let m = &self.model;
        if m.delta == 0.0 {
            return Ok(GroundTarget::Mass(m.m1));
        }
        Ok(GroundTarget::Constraints(ConstraintPair::new(m.m1, m.mj)?))
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            nodes: self.grid.nodes,
            extent: self.grid.extent,
            grading: self.grid.grading,
            damping: self.solver.damping,
            max_iter: self.solver.max_iter,
            tol: self.solver.tol,
            initial_bump: None,
        }
    }

    pub fn relax_options(&self) -> RelaxOptions {
        RelaxOptions { max_iter: self.solver.relax_max_iter, tol: self.solver.relax_tol }
    }

    pub fn residual_resolution(&self) -> ResidualResolution {
        ResidualResolution { nr: self.solver.residual_nr, nu: self.solver.residual_nu, nc: self.solver.residual_nc }
    }

    pub fn perturbation(&self) -> Result<Perturbation> {
        let e = self.dynamics.epsilon;
        match self.dynamics.perturbation.as_str() {
            "symplectic" => Ok(Perturbation::Symplectic(e)),
            "dilation" => Ok(Perturbation::Dilation(e)),
            "amplitude" => Ok(Perturbation::Amplitude(e)),
            other => bad(format!("unknown perturbation `{other}`")),
        }
    }

    pub fn mode(&self) -> Result<DistanceMode> {
        match self.dynamics.mode.as_str() {
            "plain" => Ok(DistanceMode::Plain),
            "scaled" => Ok(DistanceMode::Scaled),
            "auto" if self.model.delta == 0.0 => Ok(DistanceMode::Scaled),
            "auto" => Ok(DistanceMode::Plain),
            other => bad(format!("unknown distance mode `{other}`")),
        }
    }

    pub fn stability_options(&self) -> Result<StabilityOptions> {
        let d = &self.dynamics;
        Ok(StabilityOptions {
            particles: d.particles,
            seed: self.output.seed,
            perturbation: self.perturbation()?,
            horizon: d.horizon,
            dt_fraction: d.dt_fraction,
            samples_per_tdyn: d.samples_per_tdyn,
            window: DepositWindow { bandwidth: d.bandwidth, particles: d.window_particles },
            mode: self.mode()?,
        })
    }
}
