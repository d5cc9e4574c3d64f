//! Command bodies. Each returns the run status or the error that fixes the exit code.

use super::config::RunConfig;
use super::output::{num, OutputDir, Table};
use crate::dynamics::{ground_state_tdyn, stability_experiment, StabilityReport};
use crate::error::{Error, Result};
use crate::ground_state::{
    estimate_kjm, recover_multipliers, solve_ground_state, structural_checks, virial_residual, GroundState, GroundStateSummary, KjmEstimate,
    MultiplierCheck, StructuralReport,
};
use crate::potentials::functional_k;
use crate::self_similar::{
    b_ladder, blowup_pseudoconformal, blowup_selfsimilar, ladder_row, operational_b_star, rate_fit, self_similar_setup, solve_self_similar,
    stationarity_residual, virial_selfsimilar, LadderEntry, LadderRow, RChiChoice, SelfSimilarProfile, SelfSimilarVirial,
};
use serde::Serialize;

/// Halvings tried when searching the largest convergent drift.
const B_STAR_HALVINGS: usize = 8;
/// Snapshot count of each blow-up rate table.
const RATE_POINTS: usize = 21;
/// `t / T` window of the rate tables.
const RATE_WINDOW: (f64, f64) = (0.9, 0.999);

/// Completed run; partial failures are reported through [`Status::Partial`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Partial,
}

fn ground_state(cfg: &RunConfig) -> Result<GroundState> {
    solve_ground_state(&cfg.params(), &cfg.casimir()?, &cfg.target()?, &cfg.solver_options())
}

fn pure_manev_setup(cfg: &RunConfig) -> Result<(GroundState, RChiChoice)> {
    if cfg.model.delta != 0.0 {
        return Err(Error::Unsupported("self-similar profiles exist for the pure Manev model only (delta = 0)".into()));
    }
    self_similar_setup(cfg.model.m1, &cfg.casimir()?, &cfg.solver_options())
}

fn radial_table(state: &GroundState) -> Table {
    let mut t = Table::new(&["r", "rho", "phi", "dphi"]);
    let g = state.solver.grid();
    for (i, &r) in g.nodes().iter().enumerate() {
        t.push_f64(&[r, state.rho[i], state.potential.values[i], state.potential.derivative[i]]);
    }
    t
}

#[derive(Debug, Clone, Serialize)]
struct GroundStateRun {
    summary: GroundStateSummary,
    /// Weinstein-type functional; 1 on pure Manev ground states.
    k: f64,
    /// `H / || |v|^2 Q ||`.
    h_over_kinetic: f64,
    virial_residual: f64,
    multipliers: Option<MultiplierCheck>,
    structure: StructuralReport,
}

pub fn cmd_ground_state(cfg: &RunConfig, out: &OutputDir) -> Result<Status> {
    let s = ground_state(cfg)?;
    let run = GroundStateRun {
        summary: s.summary(),
        k: functional_k(&s.density, &s.solver)?,
        h_over_kinetic: s.energies.h / s.energies.kinetic,
        virial_residual: virial_residual(&s),
        multipliers: recover_multipliers(&s).ok(),
        structure: structural_checks(&s)?,
    };
    out.json("ground_state.json", &run)?;
    out.csv("ground_state.csv", &radial_table(&s))?;
    Ok(Status::Ok)
}

#[derive(Debug, Clone, Serialize)]
struct LadderStatus {
    b: f64,
    row: Option<LadderRow>,
    residual: Option<f64>,
    virial: Option<SelfSimilarVirial>,
    error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
struct LadderRun {
    b_star: f64,
    r_chi: f64,
    e_star: f64,
    entries: Vec<LadderStatus>,
    all_converged: bool,
}

pub fn cmd_self_similar(cfg: &RunConfig, out: &OutputDir) -> Result<Status> {
    let (state, choice) = pure_manev_setup(cfg)?;
    let relax = cfg.relax_options();
    let (b_star, _) = operational_b_star(&state, &choice, &relax, B_STAR_HALVINGS)?;
    let zero = LadderEntry { b: 0.0, outcome: solve_self_similar(&state, 0.0, &choice.cutoff, &relax).map_err(|e| e.to_string()) };
    let mut entries = b_ladder(&state, &choice.cutoff, b_star, cfg.solver.ladder_levels, &relax);
    entries.insert(0, zero);

    let res = cfg.residual_resolution();
    let mut table = Table::new(&["b", "nu", "t_b", "distance", "residual", "virial", "iterations", "converged", "status"]);
    let mut statuses = Vec::new();
    for (k, e) in entries.iter().enumerate() {
        let st = match &e.outcome {
            Ok(p) => {
                let residual = stationarity_residual(p, &res).ok();
                let virial = virial_selfsimilar(p);
                out.csv(&format!("profile_{k}.csv"), &profile_table(p))?;
                LadderStatus { b: e.b, row: Some(ladder_row(p, &state)), residual, virial: Some(virial), error: None }
            }
            Err(msg) => LadderStatus { b: e.b, row: None, residual: None, virial: None, error: Some(msg.clone()) },
        };
        let cell = |x: Option<f64>| x.map_or_else(|| "nan".to_string(), num);
        let status = match (&st.row, &st.error) {
            (Some(r), _) if r.converged => "ok".to_string(),
            (Some(_), _) => "capped".to_string(),
            (None, Some(m)) => format!("\"{}\"", m.replace('"', "'")),
            (None, None) => unreachable!(),
        };
        table.push(vec![
            num(e.b),
            cell(st.row.map(|r| r.nu)),
            cell(st.row.map(|r| r.t_b)),
            cell(st.row.map(|r| r.distance)),
            cell(st.residual),
            cell(st.virial.map(|v| v.residual)),
            st.row.map_or_else(|| "0".into(), |r| r.iterations.to_string()),
            st.row.is_some_and(|r| r.converged).to_string(),
            status,
        ]);
        statuses.push(st);
    }
    let all_converged = statuses.iter().all(|s| s.row.is_some_and(|r| r.converged));
    table.note(format!("b_star = {}", num(b_star)));
    out.csv("ladder.csv", &table)?;
    out.json("ladder.json", &LadderRun { b_star, r_chi: choice.cutoff.r_chi, e_star: choice.e_star, entries: statuses, all_converged })?;
    Ok(if all_converged { Status::Ok } else { Status::Partial })
}

fn profile_table(p: &SelfSimilarProfile) -> Table {
    let mut t = Table::new(&["r", "rho", "phi_self"]);
    t.note(format!("b = {}", num(p.b)));
    t.note(format!("nu = {}", num(p.nu)));
    let rho = p.density.density();
    for (i, &r) in p.density.grid.nodes().iter().enumerate() {
        t.push_f64(&[r, rho[i], p.phi_self[i]]);
    }
    t
}

#[derive(Debug, Clone, Serialize)]
struct BlowupRun {
    blowup_time: f64,
    b_star: f64,
    self_similar_rate: f64,
    pseudo_conformal_rate: f64,
}

pub fn cmd_blowup_family(cfg: &RunConfig, out: &OutputDir) -> Result<Status> {
    let (state, choice) = pure_manev_setup(cfg)?;
    let (b_star, profile) = operational_b_star(&state, &choice, &cfg.relax_options(), B_STAR_HALVINGS)?;
    let big_t = cfg.dynamics.blowup_time;
    let mut table = Table::new(&["family", "t", "remaining", "scale", "kinetic", "mass"]);
    let (mut ss, mut pc) = (Vec::new(), Vec::new());
    for k in 0..RATE_POINTS {
        let frac = RATE_WINDOW.0 + (RATE_WINDOW.1 - RATE_WINDOW.0) * k as f64 / (RATE_POINTS - 1) as f64;
        let t = big_t * frac;
        for (name, snap, series) in [
            ("self_similar", blowup_selfsimilar(&profile, big_t, t)?, &mut ss),
            ("pseudo_conformal", blowup_pseudoconformal(&state, big_t, t)?, &mut pc),
        ] {
            let r = snap.row();
            series.push((r.remaining, r.kinetic));
            table.push(vec![name.into(), num(r.t), num(r.remaining), num(r.scale), num(r.kinetic), num(r.mass)]);
        }
    }
    let run = BlowupRun { blowup_time: big_t, b_star, self_similar_rate: rate_fit(&ss)?, pseudo_conformal_rate: rate_fit(&pc)? };
    table.note(format!("self_similar_rate = {}", num(run.self_similar_rate)));
    table.note(format!("pseudo_conformal_rate = {}", num(run.pseudo_conformal_rate)));
    out.csv("blowup.csv", &table)?;
    out.json("blowup.json", &run)?;
    Ok(Status::Ok)
}

#[derive(Debug, Clone, Serialize)]
struct EvolveRun {
    t_dyn: f64,
    particles: usize,
    h_drift: f64,
    mass_drift: f64,
    casimir_drift: f64,
    blowup_flag: bool,
    initial_distance: f64,
    max_distance: f64,
    ratio: f64,
}

pub fn cmd_evolve(cfg: &RunConfig, out: &OutputDir) -> Result<Status> {
    let s = ground_state(cfg)?;
    let opts = cfg.stability_options()?;
    let rep = stability_experiment(&s, &opts)?;
    out.csv("diagnostics.csv", &diagnostics_table(&rep))?;
    let run = EvolveRun {
        t_dyn: ground_state_tdyn(&s),
        particles: opts.particles,
        h_drift: rep.series.h_drift(),
        mass_drift: rep.series.mass_drift(),
        casimir_drift: rep.series.casimir_drift(),
        blowup_flag: rep.series.blowup_flag,
        initial_distance: rep.initial(),
        max_distance: rep.max(),
        ratio: rep.ratio,
    };
    out.json("evolve.json", &run)?;
    Ok(Status::Ok)
}

fn diagnostics_table(rep: &StabilityReport) -> Table {
    let mut t = Table::new(&["t", "t_over_tdyn", "h", "m1", "casimir", "kinetic", "ep", "em", "escaped", "distance", "d_energy", "d_density", "d_equimeasurability", "lambda"]);
    t.note(format!("t_dyn = {}", num(rep.t_dyn)));
    for (s, d) in rep.series.samples.iter().zip(&rep.distances) {
        t.push_f64(&[s.t, s.t / rep.t_dyn, s.h, s.m1, s.casimir, s.kinetic, s.ep, s.em, s.escaped, d.total, d.energy, d.density, d.equimeasurability, d.lambda]);
    }
    t
}

#[derive(Debug, Clone, Serialize)]
struct KjmRun {
    estimate: f64,
    /// Value on the solved ground state, the last sample.
    ground_state: f64,
    family_size: usize,
}

pub fn cmd_estimate_kjm(cfg: &RunConfig, out: &OutputDir) -> Result<Status> {
    let s = ground_state(cfg)?;
    let KjmEstimate { value, samples } = estimate_kjm(&s.solver, &cfg.casimir()?, cfg.solver.kjm_family, cfg.output.seed, &[&s])?;
    let mut t = Table::new(&["trial", "kjm"]);
    for (k, v) in samples.iter().enumerate() {
        t.push(vec![k.to_string(), num(*v)]);
    }
    out.csv("kjm.csv", &t)?;
    out.json("kjm.json", &KjmRun { estimate: value, ground_state: samples[samples.len() - 1], family_size: cfg.solver.kjm_family })?;
    Ok(Status::Ok)
}
