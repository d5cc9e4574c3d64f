use super::SelfSimilarProfile;
use crate::error::{invalid, Result};
use crate::phase_space::{chi, Cutoff, ModelParams, PhaseDensity};
use crate::potentials::{force, FieldSolver};
use serde::{Deserialize, Serialize};

/// Cell counts of the tensor grid in `(r, |v|, cos angle(x, v))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualResolution {
    pub nr: usize,
    pub nu: usize,
    pub nc: usize,
}

impl Default for ResidualResolution {
    fn default() -> Self {
        Self { nr: 160, nu: 160, nc: 40 }
    }
}

/// Energies within this fraction of `e_cut - e_min` below the cut-off are excluded: `F` has an
/// infinite derivative at the cut-off and the equation holds classically only inside.
pub const EDGE_BAND: f64 = 0.1;

/// Relative `L^1` residual of the normal form of `Q_b` in self-similar variables.
pub fn stationarity_residual(profile: &SelfSimilarProfile, res: &ResidualResolution) -> Result<f64> {
    let (bt, q) = profile.normalized()?;
    stationarity_residual_of(&q, bt, &profile.cutoff, &profile.solver, res)
}

/// `|| v.grad_x f - grad phi_f . grad_v f + b (x.grad_x f - v.grad_v f) ||_1 / || v.grad_x f ||_1`
/// over `|x| < r_chi`, with `phi_f` the pure Manev field generated by `f` and centered differences of
/// the representation of `f` in `(r, u, c)` (fourth order).
pub fn stationarity_residual_of(f: &PhaseDensity, b: f64, cutoff: &Cutoff, solver: &FieldSolver, res: &ResidualResolution) -> Result<f64> {
    if res.nr < 4 || res.nu < 4 || res.nc < 4 {
        return invalid("residual grid needs at least 4 cells per direction");
    }
    let grid = f.grid.clone();
    let rho = f.density();
    let phi_self = solver.combined(&rho, &ModelParams::pure_manev())?.values;
    let dphi_self = force(&grid, &phi_self);
    let dphi_used = force(&grid, &f.phi);
    let prof = &f.profile;
    let e_cut = prof.e_cut();
    let pe = f.phi_eff();
    let e_min = pe.iter().cloned().fold(f64::INFINITY, f64::min);
    let inner = e_cut - EDGE_BAND * (e_cut - e_min);
    let cut = Some(cutoff);
    let r_top = f.support_radius().min(cutoff.r_chi);
    let phi_at = |r: f64| grid.interp_hermite(&f.phi, &dphi_used, r.abs());
    let energy = |r: f64, u: f64, c: f64| 0.5 * u * u + b * chi(cut, r.abs()) * r * u * c + phi_at(r);
    // largest speed inside the support: u^2/2 - b r u + phi(r) < e_cut
    let u_top = grid
        .nodes()
        .iter()
        .zip(&f.phi)
        .filter(|(&r, _)| r <= r_top)
        .map(|(&r, &p)| {
            let d = b * chi(cut, r) * r;
            d + (d * d + 2.0 * (e_cut - p).max(0.0)).sqrt()
        })
        .fold(0.0, f64::max);
    let (hr, hu, hc) = (r_top / res.nr as f64, u_top / res.nu as f64, 2.0 / res.nc as f64);
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..res.nr {
        let r = (i as f64 + 0.5) * hr;
        let dps = grid.interp(&dphi_self, r);
        for k in 0..res.nu {
            let u = (k as f64 + 0.5) * hu;
            let w = r * r * u * u;
            for l in 0..res.nc {
                let c = -1.0 + (l as f64 + 0.5) * hc;
                let e0 = energy(r, u, c);
                if e0 >= inner {
                    continue;
                }
                // fourth-order centered differences; every stencil point must lie inside the support
                let mut d = [0.0; 3];
                let mut inside = true;
                for (axis, h) in [hr, hu, hc].into_iter().enumerate() {
                    let at = |m: f64| match axis {
                        0 => energy(r + m * h, u, c),
                        1 => energy(r, u + m * h, c),
                        _ => energy(r, u, c + m * h),
                    };
                    let es = [at(2.0), at(1.0), at(-1.0), at(-2.0)];
                    if es.iter().any(|&e| e >= e_cut) {
                        inside = false;
                        break;
                    }
                    let fv = es.map(|e| prof.value(e));
                    d[axis] = (-fv[0] + 8.0 * fv[1] - 8.0 * fv[2] + fv[3]) / (12.0 * h);
                }
                if !inside {
                    continue;
                }
                let [dr, du, dc] = d;
                let transport = u * c * dr;
                let total = transport - dps * c * du + (1.0 - c * c) * (u / r - dps / u) * dc + b * (r * dr - u * du);
                num += w * total.abs();
                den += w * transport.abs();
            }
        }
    }
    if den == 0.0 {
        return invalid("no interior points on the residual grid");
    }
    Ok(num / den)
}

/// Step-5 identity `nu_b E_pot(Q) - || |v|^2 Q_b || = b int (x.v)(x.grad chi) Q_b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelfSimilarVirial {
    pub lhs: f64,
    pub rhs: f64,
    /// `|lhs - rhs| / || |v|^2 Q_b ||`.
    pub residual: f64,
    /// `b R_chi^2 ||chi'||_inf (M_1 + || |v|^2 Q_b ||) / 2`.
    pub rhs_bound: f64,
}

impl SelfSimilarVirial {
    pub fn bound_holds(&self) -> bool {
        self.rhs.abs() <= self.rhs_bound
    }
}

pub fn virial_selfsimilar(profile: &SelfSimilarProfile) -> SelfSimilarVirial {
    let f = &profile.density;
    let cut = &profile.cutoff;
    let kin = f.kinetic();
    let rho = f.density();
    let grid = &f.grid;
    // x.v = x.w - b chi r^2 with w even, so int (x.v)(r chi') f = -int b chi chi' r^3 rho
    let g: Vec<f64> = grid.nodes().iter().zip(&rho).map(|(&r, &p)| -profile.b * cut.value(r) * cut.derivative(r) * r.powi(3) * p).collect();
    let rhs = profile.b * grid.integrate_shell(&g);
    let lhs = profile.nu * profile.epot_target - kin;
    let m1 = grid.integrate_shell(&rho);
    SelfSimilarVirial {
        lhs,
        rhs,
        residual: (lhs - rhs).abs() / kin,
        rhs_bound: profile.b * cut.outer().powi(2) * cut.max_slope() * (m1 + kin) / 2.0,
    }
}
