use manev_kit::phase_space::{CasimirSpec, ConstraintPair, Cutoff, EnergyProfile, ModelParams, PhaseDensity, RadialGrid};
use manev_kit::potentials::{energies, FieldSolver};
use manev_kit::rescaling::{apply_fit, apply_rescale, casimir_ratio, fit_constraints, rescale_factors, CasimirFactor, RescaleParams};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn grid() -> Arc<RadialGrid> {
    Arc::new(RadialGrid::graded(600, 1.5, 6.0, 4.0).unwrap())
}

fn random_density(rng: &mut ChaCha8Rng, g: &Arc<RadialGrid>) -> PhaseDensity {
    let (depth, width) = (rng.gen_range(0.5..2.0), rng.gen_range(0.6..1.4));
    let phi: Vec<f64> = g.nodes().iter().map(|&r| -depth / (1.0 + (r / width).powi(2)).sqrt()).collect();
    let ecut = -depth * rng.gen_range(0.3..0.6);
    let prof = EnergyProfile::power_law(rng.gen_range(0.2..3.0), rng.gen_range(0.1..2.0), ecut).unwrap();
    let b = if rng.gen_bool(0.5) { rng.gen_range(0.0..0.2) } else { 0.0 };
    let cut = (b > 0.0).then(|| Cutoff::new(rng.gen_range(1.0..2.5)).unwrap());
    PhaseDensity::new(g.clone(), prof, phi, b, cut).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

#[test]
fn factor_table() {
    let j = CasimirSpec::power(5.0).unwrap();
    let one = rescale_factors(&RescaleParams::identity(), &j);
    assert_eq!((one.mass, one.kinetic, one.ep, one.em), (1.0, 1.0, 1.0, 1.0));
    assert_eq!(one.casimir, CasimirFactor::Exact(1.0));
    let d = rescale_factors(&RescaleParams::new(1.0, 2.0, 1.0).unwrap(), &j);
    assert_eq!((d.mass, d.em, d.ep), (8.0, 16.0, 32.0));
    let k = rescale_factors(&RescaleParams::new(1.7, 0.6, 0.6).unwrap(), &j);
    assert!(rel(k.kinetic / k.em, 1.0 / 1.7) < 1e-15);
    let k = rescale_factors(&RescaleParams::new(1.0, 0.6, 0.6).unwrap(), &j);
    assert!(rel(k.kinetic / k.em, 1.0) < 1e-15);
}

#[test]
fn measured_moments_follow_factors() {
    let g = grid();
    let solver = FieldSolver::new(g.clone());
    let params = ModelParams::new(1.0, 1.0).unwrap();
    let j = CasimirSpec::power(4.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let f = random_density(&mut rng, &g);
        let p = RescaleParams::new(rng.gen_range(0.3..3.0), rng.gen_range(0.3..3.0), rng.gen_range(0.3..3.0)).unwrap();
        let h = apply_rescale(&f, &p).unwrap();
        let fac = rescale_factors(&p, &j);
        let (e0, e1) = (energies(&f, &solver, &params).unwrap(), energies(&h, &solver.rescaled(p.lambda), &params).unwrap());
        assert!(rel(e1.mass, fac.mass * e0.mass) < 1e-10);
        assert!(rel(e1.kinetic, fac.kinetic * e0.kinetic) < 1e-10);
        assert!(rel(e1.ep, fac.ep * e0.ep) < 1e-10);
        assert!(rel(e1.em, fac.em * e0.em) < 1e-10);
        assert!(fac.casimir.contains(h.casimir(&j) / f.casimir(&j), 1e-10));
    }
}

#[test]
fn rescaling_is_a_group() {
    let g = grid();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let f = random_density(&mut rng, &g);
    let id = apply_rescale(&f, &RescaleParams::identity()).unwrap();
    assert_eq!(id.profile, f.profile);
    assert_eq!(id.phi, f.phi);
    let (p, q) = (RescaleParams::new(2.0, 0.5, 1.5).unwrap(), RescaleParams::new(0.7, 3.0, 0.4).unwrap());
    let twice = apply_rescale(&apply_rescale(&f, &p).unwrap(), &q).unwrap();
    let once = apply_rescale(&f, &p.then(&q)).unwrap();
    assert!(rel(twice.mass(), once.mass()) < 1e-13);
    assert!(rel(twice.kinetic(), once.kinetic()) < 1e-13);
    assert!((twice.b - once.b).abs() < 1e-15);
}

#[test]
fn power_law_fit_matches_closed_form() {
    let g = grid();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let f = random_density(&mut rng, &g);
        let p = rng.gen_range(3.5..7.0);
        let j = CasimirSpec::power(p).unwrap();
        let target = ConstraintPair::new(rng.gen_range(0.1..10.0), rng.gen_range(0.1..10.0)).unwrap();
        let fit = fit_constraints(&f, &target, &j).unwrap();
        let closed = (target.mj * f.mass() / (target.m1 * f.casimir(&j))).powf(1.0 / (p - 1.0));
        assert!(rel(fit.gamma, closed) < 1e-12);
        let h = apply_fit(&f, &fit).unwrap();
        assert!(rel(h.mass(), target.m1) < 1e-10);
        assert!(rel(h.casimir(&j), target.mj) < 1e-10);
    }
    // already on the constraint set
    let f = random_density(&mut rng, &g);
    let j = CasimirSpec::power(5.0).unwrap();
    let fit = fit_constraints(&f, &ConstraintPair::new(f.mass(), f.casimir(&j)).unwrap(), &j).unwrap();
    assert!((fit.gamma - 1.0).abs() < 1e-12 && (fit.lambda - 1.0).abs() < 1e-14);
}

#[test]
fn mixed_casimir_fit_respects_growth_bracket() {
    let g = grid();
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let j = CasimirSpec::powers(vec![(1.0, 4.0), (0.3, 6.5)]).unwrap();
    for _ in 0..50 {
        let f = random_density(&mut rng, &g);
        let target = ConstraintPair::new(rng.gen_range(0.1..10.0), rng.gen_range(0.1..10.0)).unwrap();
        let fit = fit_constraints(&f, &target, &j).unwrap();
        let (a, b) = (fit.gamma.powf(j.p() - 1.0), fit.gamma.powf(j.q() - 1.0));
        assert!(fit.ratio >= a.min(b) * (1.0 - 1e-12) && fit.ratio <= a.max(b) * (1.0 + 1e-12));
        let h = apply_fit(&f, &fit).unwrap();
        assert!(rel(h.mass(), target.m1) < 1e-10);
        assert!(rel(h.casimir(&j), target.mj) < 1e-10);
    }
}

#[test]
fn casimir_ratio_growth() {
    let g = grid();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let f = random_density(&mut rng, &g);
    let j = CasimirSpec::powers(vec![(1.0, 4.0), (2.0, 5.0)]).unwrap();
    let p = j.p();
    for &gm in &[0.2, 0.7, 1.0, 1.9, 5.0] {
        let d = 1e-6 * gm;
        let hp = (casimir_ratio(&f, &j, gm + d).unwrap() - casimir_ratio(&f, &j, gm - d).unwrap()) / (2.0 * d);
        let h = casimir_ratio(&f, &j, gm).unwrap();
        assert!(hp >= (p - 1.0) * h / gm * (1.0 - 1e-6));
    }
}

proptest! {
    #[test]
    fn nondichotomy(b in 1.0f64..20.0, t in 0.0f64..50.0) {
        let j = CasimirSpec::powers(vec![(1.0, 4.0), (0.5, 6.0)]).unwrap();
        let (p, q) = (j.p(), j.q());
        prop_assert!(b.powf(p) * j.j(t) <= j.j(b * t) * (1.0 + 1e-12));
        prop_assert!(j.j(b * t) <= b.powf(q) * j.j(t) * (1.0 + 1e-12));
    }
}
