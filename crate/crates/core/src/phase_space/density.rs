use super::casimir::CasimirSpec;
use super::grid::RadialGrid;
use super::profile::{chi, Cutoff, EnergyProfile};
use crate::error::{Error, Result};
use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

/// Phase-space density `f(x, v) = F(|v|^2/2 + b chi(|x|) x.v + phi(|x|))`.
///
/// `phi` is the potential entering the energy, not necessarily the field generated by `f`.
/// With `w = v + b chi x` every moment reduces to radial integrals against
/// `phi_eff = phi - (b chi r)^2 / 2`.
#[derive(Debug, Clone)]
pub struct PhaseDensity {
    pub grid: Arc<RadialGrid>,
    pub profile: EnergyProfile,
    pub phi: Vec<f64>,
    pub b: f64,
    pub cutoff: Option<Cutoff>,
}

impl PhaseDensity {
    pub fn new(grid: Arc<RadialGrid>, profile: EnergyProfile, phi: Vec<f64>, b: f64, cutoff: Option<Cutoff>) -> Result<Self> {
        if phi.len() != grid.len() {
            return Err(Error::GridMismatch(format!("potential has {} values, grid {}", phi.len(), grid.len())));
        }
        if !(b >= 0.0) {
            return Err(Error::InvalidInput("drift b must be nonnegative".into()));
        }
        let d = Self { grid, profile, phi, b, cutoff };
        d.check_support()?;
        Ok(d)
    }

    /// Drift coefficient `b chi(r) r` at radius `r`.
    pub fn drift(&self, r: f64) -> f64 {
        self.b * chi(self.cutoff.as_ref(), r) * r
    }

    pub fn phi_eff(&self) -> Vec<f64> {
        self.grid.nodes().iter().zip(&self.phi).map(|(&r, &p)| p - 0.5 * self.drift(r).powi(2)).collect()
    }

    fn check_support(&self) -> Result<()> {
        if self.profile.is_zero() {
            return Ok(());
        }
        let pe = self.phi_eff();
        if pe[pe.len() - 1] < self.profile.e_cut() {
            return Err(Error::Unresolvable(format!(
                "profile support reaches the grid edge r = {} (phi_eff = {}, cut-off = {})",
                self.grid.r_max(),
                pe[pe.len() - 1],
                self.profile.e_cut()
            )));
        }
        Ok(())
    }

    /// `rho(r) = 4 pi sqrt2 int F(s) (s - phi_eff(r))_+^{1/2} ds`.
    pub fn density(&self) -> Vec<f64> {
        self.phi_eff().iter().map(|&w| 4.0 * PI * SQRT_2 * self.profile.shell(w, 0.5)).collect()
    }

    /// `int |w|^2 F dw` at each node.
    pub fn shifted_kinetic_density(&self) -> Vec<f64> {
        self.phi_eff().iter().map(|&w| 8.0 * PI * SQRT_2 * self.profile.shell(w, 1.5)).collect()
    }

    pub fn mass(&self) -> f64 {
        self.grid.integrate_shell(&self.density())
    }

    /// `|| |v|^2 f ||_1`; the cross term `x.w` vanishes by parity in `w`.
    pub fn kinetic(&self) -> f64 {
        let rho = self.density();
        let kin = self.shifted_kinetic_density();
        let g: Vec<f64> = self.grid.nodes().iter().enumerate().map(|(i, &r)| kin[i] + self.drift(r).powi(2) * rho[i]).collect();
        self.grid.integrate_shell(&g)
    }

    pub fn casimir(&self, j: &CasimirSpec) -> f64 {
        let g: Vec<f64> = self.phi_eff().iter().map(|&w| 4.0 * PI * SQRT_2 * self.profile.casimir_shell(w, j)).collect();
        self.grid.integrate_shell(&g)
    }

    /// `int g(f) dx dv` for an arbitrary `g` with `g(0) = 0`.
    pub fn casimir_with(&self, g: &dyn Fn(f64) -> f64) -> f64 {
        let v: Vec<f64> = self.phi_eff().iter().map(|&w| 4.0 * PI * SQRT_2 * self.profile.shell_map(w, g)).collect();
        self.grid.integrate_shell(&v)
    }

    /// `int b' chi'(x) x.v f`, equal to `-int b' chi' b chi r^2 rho dx`.
    pub fn drift_moment(&self, b2: f64, cut2: Option<&Cutoff>) -> f64 {
        let rho = self.density();
        let g: Vec<f64> = self.grid.nodes().iter().enumerate().map(|(i, &r)| -b2 * chi(cut2, r) * r * self.drift(r) * rho[i]).collect();
        self.grid.integrate_shell(&g)
    }

    /// Radius beyond which `rho` vanishes (last node with `phi_eff < e_cut`, plus one cell).
    pub fn support_radius(&self) -> f64 {
        let pe = self.phi_eff();
        let e = self.profile.e_cut();
        let r = self.grid.nodes();
        match pe.iter().rposition(|&w| w < e) {
            None => 0.0,
            Some(i) if i + 1 < r.len() => {
                // linear root of phi_eff - e_cut inside [r_i, r_{i+1}]
                let t = (e - pe[i]) / (pe[i + 1] - pe[i]);
                r[i] + t.clamp(0.0, 1.0) * (r[i + 1] - r[i])
            }
            Some(i) => r[i],
        }
    }
}
