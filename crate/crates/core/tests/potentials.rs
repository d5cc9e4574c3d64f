use manev_kit::phase_space::RadialGrid;
use manev_kit::potentials::{poisson_potential, potential_energy, FieldSolver};
use std::f64::consts::PI;
use std::sync::Arc;

fn ball_grid() -> Arc<RadialGrid> {
    Arc::new(RadialGrid::graded(2000, 1.0, 3.0, 18.0).unwrap())
}

fn unit_ball(g: &RadialGrid) -> Vec<f64> {
    g.nodes().iter().map(|&r| if r <= 1.0 { 1.0 } else { 0.0 }).collect()
}

#[test]
fn unit_ball_central_values() {
    let g = ball_grid();
    let rho = unit_ball(&g);
    let s = FieldSolver::new(g.clone());
    let pp = s.poisson(&rho).unwrap();
    let pm = s.manev(&rho).unwrap();
    assert!((pp[0] + 0.5).abs() / 0.5 < 1e-6, "{}", pp[0]);
    assert!((pm[0] + 2.0 / PI).abs() / (2.0 / PI) < 1e-6, "{}", pm[0]);
}

#[test]
fn unit_ball_interior_poisson_and_energy() {
    let g = ball_grid();
    let rho = unit_ball(&g);
    let pp = poisson_potential(&g, &rho);
    for (i, &r) in g.nodes().iter().enumerate() {
        if r < 0.999 {
            let exact = -(3.0 - r * r) / 6.0;
            assert!((pp[i] - exact).abs() < 1e-7, "r = {r}: {} vs {exact}", pp[i]);
        }
    }
    let ep = potential_energy(&g, &rho, &pp).unwrap();
    let exact = 8.0 * PI / 15.0;
    assert!((ep - exact).abs() / exact < 1e-8, "{ep} vs {exact}");
}

#[test]
fn poisson_exterior_law() {
    let g = ball_grid();
    let rho: Vec<f64> = g.nodes().iter().map(|&r| (1.0 - r * r).max(0.0).powi(2)).collect();
    let pp = poisson_potential(&g, &rho);
    let m1 = g.integrate_shell(&rho);
    for (i, &r) in g.nodes().iter().enumerate() {
        if r > 1.01 {
            let exact = -m1 / (4.0 * PI * r);
            assert!((pp[i] - exact).abs() / exact.abs() < 1e-8);
        }
    }
}

fn smooth_rho(r: f64) -> f64 {
    (1.0 - r * r).max(0.0).powi(2)
}

/// Direct quadrature of the Manev kernel, split at `s = r` with `t^4` clustering.
fn manev_oracle(r: f64) -> f64 {
    let gl = gauss_quad::legendre::GaussLegendre::new(200).unwrap();
    let piece = |a: f64, b: f64| {
        // singular end at `a = r`; |r - s| = |b - a| t^4 is formed exactly
        gl.integrate(0.0, 1.0, |t| {
            let d = (b - a).abs() * t.powi(4);
            let s = a + (b - a) * t.powi(4);
            let lg = (r + s).ln() - (d.ln());
            smooth_rho(s) * s * lg * (b - a) * 4.0 * t.powi(3)
        })
    };
    let total = if r < 1.0 {
        -piece(r, 0.0) + piece(r, 1.0)
    } else {
        gl.integrate(0.0, 1.0, |s| smooth_rho(s) * s * ((r + s) / (r - s)).ln())
    };
    -total / (PI * r)
}

#[test]
fn manev_matches_direct_quadrature() {
    let g = ball_grid();
    let rho: Vec<f64> = g.nodes().iter().map(|&r| smooth_rho(r)).collect();
    let pm = FieldSolver::new(g.clone()).manev(&rho).unwrap();
    for &target in &[0.05, 0.3, 0.7, 0.95, 1.5, 2.5] {
        let i = g.cell(target);
        let r = g.nodes()[i];
        let exact = manev_oracle(r);
        assert!((pm[i] - exact).abs() / exact.abs() < 1e-5, "r = {r}: {} vs {exact}", pm[i]);
    }
}

#[test]
fn manev_far_field_asymptotics() {
    let g = Arc::new(RadialGrid::graded(2000, 1.0, 12.0, 10.0).unwrap());
    let rho: Vec<f64> = g.nodes().iter().map(|&r| smooth_rho(r)).collect();
    let pm = FieldSolver::new(g.clone()).manev(&rho).unwrap();
    let m1 = g.integrate_shell(&rho);
    let i = g.cell(10.0);
    let r = g.nodes()[i];
    let lim = m1 / (2.0 * PI * PI);
    assert!((pm[i].abs() * r * r - lim).abs() / lim < 1e-2);
}

#[test]
fn manev_energy_matches_double_integral() {
    let g = ball_grid();
    let rho: Vec<f64> = g.nodes().iter().map(|&r| smooth_rho(r)).collect();
    let pm = FieldSolver::new(g.clone()).manev(&rho).unwrap();
    let em = potential_energy(&g, &rho, &pm).unwrap();
    // E_M = 4 pi int rho(r) r^2 (-phi_M(r)) dr with phi_M from the direct oracle
    let gl = gauss_quad::legendre::GaussLegendre::new(120).unwrap();
    let oracle = gl.integrate(0.0, 1.0, |r| 4.0 * PI * smooth_rho(r) * r * r * (-manev_oracle(r)));
    assert!((em - oracle).abs() / oracle < 1e-6, "{em} vs {oracle}");
}

#[test]
fn combined_is_linear() {
    use manev_kit::phase_space::ModelParams;
    let g = ball_grid();
    let a: Vec<f64> = g.nodes().iter().map(|&r| smooth_rho(r)).collect();
    let b: Vec<f64> = g.nodes().iter().map(|&r| if r < 0.5 { 1.0 - r } else { 0.0 }).collect();
    let ab: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
    let s = FieldSolver::new(g.clone());
    let p = ModelParams::new(0.7, 1.3).unwrap();
    let (fa, fb, fab) = (s.combined(&a, &p).unwrap(), s.combined(&b, &p).unwrap(), s.combined(&ab, &p).unwrap());
    for i in 0..g.len() {
        assert!((fa.values[i] + fb.values[i] - fab.values[i]).abs() <= 1e-12 * fab.values[i].abs().max(1e-3));
    }
    let only_p = s.combined(&a, &ModelParams::pure_poisson()).unwrap();
    assert_eq!(only_p.values, s.poisson(&a).unwrap());
    let only_m = s.combined(&a, &ModelParams::pure_manev()).unwrap();
    assert_eq!(only_m.values, s.manev(&a).unwrap());
}

#[test]
fn exterior_force_and_refinement_order() {
    use manev_kit::potentials::force;
    let g = Arc::new(RadialGrid::graded(2000, 1.0, 3.0, 8.0).unwrap());
    let rho: Vec<f64> = g.nodes().iter().map(|&r| smooth_rho(r)).collect();
    let pp = poisson_potential(&g, &rho);
    let d = force(&g, &pp);
    let m1 = g.integrate_shell(&rho);
    for (i, &r) in g.nodes().iter().enumerate() {
        if r > 1.05 && r < 2.9 {
            let exact = m1 / (4.0 * PI * r * r);
            assert!((d[i] - exact).abs() / exact < 1e-6, "r = {r}");
        }
    }
    // centered differences of a smooth function converge at second order
    let err = |n: usize| {
        let g = RadialGrid::uniform(n, 2.0).unwrap();
        let v: Vec<f64> = g.nodes().iter().map(|r| (-r * r).exp()).collect();
        let d = force(&g, &v);
        g.nodes().iter().zip(&d).map(|(r, d)| (d + 2.0 * r * (-r * r).exp()).abs()).fold(0.0, f64::max)
    };
    assert!(err(201) / err(401) > 3.5, "{} {}", err(201), err(401));
}
