use manev_kit::ground_state::{GroundState, SolverOptions};
use manev_kit::phase_space::{distribution_curve, equimeasurability_distance, CasimirSpec, Cutoff, EnergyProfile, PhaseDensity, ProfileShape};
use manev_kit::self_similar::{
    blowup_pseudoconformal, blowup_selfsimilar, choose_r_chi, profile_distance, r_chi_formula, rate_fit, self_similar_setup, solve_self_similar,
    stationarity_residual, stationarity_residual_of, t_b_functional, virial_selfsimilar, RChiChoice, RelaxOptions, ResidualResolution,
    SelfSimilarProfile,
};
use proptest::prelude::*;
use std::sync::OnceLock;

fn j4() -> CasimirSpec {
    CasimirSpec::power(4.0).unwrap()
}

fn setup() -> &'static (GroundState, RChiChoice) {
    static S: OnceLock<(GroundState, RChiChoice)> = OnceLock::new();
    S.get_or_init(|| self_similar_setup(1.0, &j4(), &SolverOptions::default()).unwrap())
}

fn b_top() -> f64 {
    let (_, c) = setup();
    (2.0 * c.e_star.abs()).sqrt() / c.cutoff.outer()
}

/// Profile at `b_top / 4`, well inside the convergent range.
fn profile() -> &'static SelfSimilarProfile {
    static P: OnceLock<SelfSimilarProfile> = OnceLock::new();
    P.get_or_init(|| {
        let (s, c) = setup();
        solve_self_similar(s, b_top() / 4.0, &c.cutoff, &RelaxOptions::default()).unwrap()
    })
}

#[test]
fn cutoff_radius_contains_support_and_scales() {
    let (s, c) = setup();
    assert!(c.cutoff.outer() >= 2.0 * s.support_radius);
    assert!(c.e_star < 0.0 && c.decay_constant > 0.0);
    assert!(s.solver.grid().r_max() > c.cutoff.outer());
    let r1 = r_chi_formula(c.decay_constant, c.ej_norm, c.e_star).unwrap();
    let r2 = r_chi_formula(c.decay_constant, 2.0 * c.ej_norm, c.e_star).unwrap();
    assert!((r2 / r1 - 2f64.powf(2.0 / 3.0)).abs() < 1e-12);
    assert!(r_chi_formula(c.decay_constant, c.ej_norm, 0.0).is_err());
    assert!(r_chi_formula(c.decay_constant, c.ej_norm, 0.1).is_err());
    assert_eq!(choose_r_chi(s).unwrap(), *c);
}

#[test]
fn t_b_of_ground_state_is_half_kinetic() {
    let (s, c) = setup();
    let k = s.energies.kinetic;
    assert!((t_b_functional(&s.density, 0.0, None) - 0.5 * k).abs() < 1e-14);
    // Q is even in v, so the drift moment vanishes for any b
    assert!((t_b_functional(&s.density, 0.3, Some(&c.cutoff)) - 0.5 * k).abs() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 50, ..ProptestConfig::default() })]

    #[test]
    fn t_b_lower_bound_on_drifted_profiles(amp in 0.05f64..2.0, n in 0.2f64..2.5, depth in 0.3f64..1.5, b in 0.0f64..0.05, well in 0.5f64..2.5) {
        let (s, c) = setup();
        let grid = s.solver.grid().clone();
        let r_q = s.support_radius;
        // Plummer-like well scaled to the support of Q
        let phi: Vec<f64> = grid.nodes().iter().map(|&r| -depth / (1.0 + (r / (well * r_q)).powi(2)).sqrt()).collect();
        let e_cut = 0.5 * (phi[0] + phi[phi.len() - 1]);
        let prof = EnergyProfile::power_law(amp, n, e_cut).unwrap();
        if let Ok(f) = PhaseDensity::new(grid, prof, phi, b, Some(c.cutoff)) {
            let r_out = c.cutoff.outer();
            let lower = 0.25 * f.kinetic() - b * b * r_out * r_out * f.mass();
            prop_assert!(t_b_functional(&f, b, Some(&c.cutoff)) >= lower);
        }
    }
}

#[test]
fn zero_drift_returns_ground_state() {
    let (s, c) = setup();
    let p = solve_self_similar(s, 0.0, &c.cutoff, &RelaxOptions::default()).unwrap();
    assert!(p.converged);
    assert!((p.nu - 1.0).abs() < 1e-6, "nu = {}", p.nu);
    assert!(profile_distance(&p, s) < 1e-6, "{}", profile_distance(&p, s));
    let v = virial_selfsimilar(&p);
    assert!(v.rhs == 0.0 && v.residual < 1e-3, "{v:?}");
}

#[test]
fn drifted_profile_keeps_constraints() {
    let (s, c) = setup();
    let p = profile();
    assert!(p.converged);
    assert!(p.nu > 1.0 && p.nu - 1.0 < 1e-4, "nu = {}", p.nu);
    assert!(p.density.support_radius() < c.cutoff.r_chi);
    assert!((p.epot / p.epot_target - 1.0).abs() < 1e-8);
    let d = equimeasurability_distance(&distribution_curve(&s.density).unwrap(), &distribution_curve(&p.density).unwrap());
    assert!(d < 1e-3, "{d}");
    let t = p.t_b_series();
    assert!(t.windows(2).all(|w| w[1] <= w[0] + 1e-10), "{t:?}");
    let v = virial_selfsimilar(p);
    assert!(v.residual < 1e-3 && v.bound_holds(), "{v:?}");
}

#[test]
fn residual_refines_and_detects_perturbed_profile() {
    let p = profile();
    let coarse = stationarity_residual(p, &ResidualResolution { nr: 80, nu: 80, nc: 20 }).unwrap();
    let fine = stationarity_residual(p, &ResidualResolution::default()).unwrap();
    assert!(fine < 1e-2 && fine < 0.5 * coarse, "{coarse} -> {fine}");
    // +1% bump in the middle of the energy range
    let (bt, q) = p.normalized().unwrap();
    let ProfileShape::Table { e, f, edge } = q.profile.shape() else { panic!("tabulated profile expected") };
    let (lo, hi) = (e[0], e[e.len() - 1]);
    let g: Vec<f64> = e
        .iter()
        .zip(f)
        .map(|(&x, &v)| {
            let t = (x - lo) / (hi - lo);
            v * (1.0 + 0.01 * (-(t - 0.5f64).powi(2) / 0.02).exp())
        })
        .collect();
    let bumped = EnergyProfile::table_with_edge(e.clone(), g, *edge).unwrap();
    let qb = PhaseDensity::new(q.grid.clone(), bumped, q.phi.clone(), q.b, q.cutoff).unwrap();
    let r = stationarity_residual_of(&qb, bt, &p.cutoff, &p.solver, &ResidualResolution::default()).unwrap();
    assert!(r >= 10.0 * fine, "{r} vs {fine}");
}

#[test]
fn drift_ladder_approaches_ground_state() {
    let (s, c) = setup();
    let half = solve_self_similar(s, b_top() / 8.0, &c.cutoff, &RelaxOptions::default()).unwrap();
    let p = profile();
    assert!(half.nu - 1.0 < p.nu - 1.0);
    assert!(profile_distance(&half, s) < profile_distance(p, s));
    assert!(virial_selfsimilar(&half).bound_holds());
}

#[test]
fn self_similar_family_scaling() {
    let p = profile();
    let (bt, q) = p.normalized().unwrap();
    let big_t = 1.0;
    let at_unit = blowup_selfsimilar(p, big_t, big_t - 1.0 / (2.0 * bt)).unwrap();
    assert!((at_unit.scale - 1.0).abs() < 1e-14);
    assert!((at_unit.kinetic / q.kinetic() - 1.0).abs() < 1e-12);
    let mut series = Vec::new();
    let m0 = at_unit.density.mass();
    for k in 0..=20 {
        let t = big_t * (0.9 + 0.099 * k as f64 / 20.0);
        let snap = blowup_selfsimilar(p, big_t, t).unwrap();
        assert!((snap.scale.powi(2) * snap.kinetic / at_unit.kinetic - 1.0).abs() < 1e-10);
        assert!((snap.row().mass / m0 - 1.0).abs() < 1e-10);
        series.push((big_t - t, snap.kinetic));
    }
    let rate = rate_fit(&series).unwrap();
    assert!((rate + 1.0).abs() < 0.02, "{rate}");
    assert!(blowup_selfsimilar(p, big_t, big_t).is_err());
}

#[test]
fn pseudo_conformal_family_rate_and_invariants() {
    let (s, _) = setup();
    let j = j4();
    let big_t = 2.0;
    let start = blowup_pseudoconformal(s, big_t, 0.0).unwrap();
    assert!((start.density.mass() / s.masses.m1 - 1.0).abs() < 1e-10);
    let mut series = Vec::new();
    for k in 0..=20 {
        let t = big_t * (0.9 + 0.099 * k as f64 / 20.0);
        let snap = blowup_pseudoconformal(s, big_t, t).unwrap();
        assert!((snap.density.mass() / s.masses.m1 - 1.0).abs() < 1e-10);
        assert!((snap.density.casimir(&j) / s.masses.mj - 1.0).abs() < 1e-8);
        series.push((big_t - t, snap.kinetic));
    }
    let rate = rate_fit(&series).unwrap();
    assert!((rate + 2.0).abs() < 0.02, "{rate}");
    assert!(blowup_pseudoconformal(s, big_t, 2.5).is_err());
}

#[test]
fn rate_fit_is_exact_on_power_laws() {
    let series: Vec<(f64, f64)> = (1..=8).map(|k| (0.1 / k as f64, 3.0 * (0.1 / k as f64).powf(-1.0))).collect();
    assert!((rate_fit(&series).unwrap() + 1.0).abs() < 1e-12);
    let steep: Vec<(f64, f64)> = (1..=8).map(|k| (2f64.powi(-k), 0.5 * 2f64.powi(-k).powf(-2.5))).collect();
    assert!((rate_fit(&steep).unwrap() + 2.5).abs() < 1e-12);
    assert!(rate_fit(&series[..4]).is_err());
    let mut bad = series.clone();
    bad[2].1 = 0.0;
    assert!(rate_fit(&bad).is_err());
    let cut = Cutoff::new(1.0).unwrap();
    assert_eq!(cut.outer(), 2.0);
}
