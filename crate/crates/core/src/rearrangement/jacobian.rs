use crate::error::{invalid, Error, Result};
use crate::phase_space::{PhaseDensity, RadialGrid};
use crate::quad::gauss_legendre;
use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

/// Phase-space volume map `a(e) = meas{ |v|^2/2 + b chi x.v + phi < e }` for a fixed field.
///
/// `phi_eff` is interpolated linearly between nodes; each cell integral is then exact.
#[derive(Debug, Clone)]
pub struct JacobianContext {
    grid: Arc<RadialGrid>,
    phi_eff: Vec<f64>,
    e_min: f64,
    e_top: f64,
    /// `tail_min[i] = min phi_eff[i..]`: cells from `i` on are empty for `e <= tail_min[i]`.
    tail_min: Vec<f64>,
}

/// `(int_cell (e - phi_eff)_+^{3/2} r^2 dr, int_cell (e - phi_eff)_+^{1/2} r^2 dr)` with `phi_eff`
/// linear on `[r_a, r_b]`.
fn cell_integrals(ra: f64, rb: f64, ga: f64, gb: f64) -> (f64, f64) {
    if ga <= 0.0 && gb <= 0.0 {
        return (0.0, 0.0);
    }
    let h = rb - ra;
    let s = (gb - ga) / h;
    let (mut lo, mut hi) = (ra, rb);
    if ga <= 0.0 {
        lo = ra - ga / s;
    }
    if gb <= 0.0 {
        hi = ra - ga / s;
    }
    if hi <= lo {
        return (0.0, 0.0);
    }
    let g = |r: f64| (ga + s * (r - ra)).max(0.0);
    if (gb - ga).abs() <= 1e-3 * ga.max(gb) {
        let (m, w) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        return gauss_legendre(8).iter().fold((0.0, 0.0), |(a, b), &(x, wt)| {
            let r = m + w * x;
            let v = g(r);
            let q = wt * w * v.sqrt() * r * r;
            (a + q * v, b + q)
        });
    }
    // g = u^2: both integrands become polynomials in u of degree <= 8, exact with 5 points.
    let (ulo, uhi) = (g(lo).sqrt(), g(hi).sqrt());
    let (m, w) = (0.5 * (ulo + uhi), 0.5 * (uhi - ulo));
    gauss_legendre(5).iter().fold((0.0, 0.0), |(a, b), &(x, wt)| {
        let u = m + w * x;
        let u2 = u * u;
        let r = ra + (u2 - ga) / s;
        let q = wt * w * r * r * 2.0 * u2 / s;
        (a + q * u2, b + q)
    })
}

const A_CONST: f64 = 32.0 * PI * PI * SQRT_2 / 3.0;

impl JacobianContext {
    pub fn new(grid: Arc<RadialGrid>, phi_eff: Vec<f64>) -> Result<Self> {
        if phi_eff.len() != grid.len() {
            return Err(Error::GridMismatch("phi_eff length differs from the grid".into()));
        }
        let e_min = phi_eff.iter().cloned().fold(f64::INFINITY, f64::min);
        let e_top = phi_eff[phi_eff.len() - 1].min(0.0);
        let mut tail_min = phi_eff.clone();
        for i in (0..tail_min.len() - 1).rev() {
            tail_min[i] = tail_min[i].min(tail_min[i + 1]);
        }
        Ok(Self { grid, phi_eff, e_min, e_top, tail_min })
    }

    /// Context of the energy of `f` (its own `phi`, `b`, cut-off).
    pub fn of(f: &PhaseDensity) -> Result<Self> {
        Self::new(f.grid.clone(), f.phi_eff())
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn phi_eff(&self) -> &[f64] {
        &self.phi_eff
    }

    /// `inf phi_eff`; `a` vanishes below it.
    pub fn e_min(&self) -> f64 {
        self.e_min
    }

    /// Largest energy whose sublevel set stays inside the grid.
    pub fn e_top(&self) -> f64 {
        self.e_top
    }

    /// Radial integrals of `(e - phi_eff)_+^{3/2}` and `(e - phi_eff)_+^{1/2}` against `r^2 dr`.
    fn radial(&self, e: f64) -> (f64, f64) {
        if e <= self.e_min {
            return (0.0, 0.0);
        }
        let r = self.grid.nodes();
        let pe = &self.phi_eff;
        let mut acc = (0.0, 0.0);
        for i in 0..r.len() - 1 {
            if self.tail_min[i] >= e {
                break;
            }
            let (a, b) = cell_integrals(r[i], r[i + 1], e - pe[i], e - pe[i + 1]);
            acc.0 += a;
            acc.1 += b;
        }
        acc
    }

    /// `a(e) = (32 pi^2 sqrt2 / 3) int (e - phi_eff)_+^{3/2} r^2 dr` without the sign check.
    pub fn a_unchecked(&self, e: f64) -> f64 {
        A_CONST * self.radial(e).0
    }

    pub fn a_prime_unchecked(&self, e: f64) -> f64 {
        1.5 * A_CONST * self.radial(e).1
    }

    /// `(a(e), a'(e))` from one pass over the cells.
    pub fn a_and_prime(&self, e: f64) -> (f64, f64) {
        let (x, y) = self.radial(e);
        (A_CONST * x, 1.5 * A_CONST * y)
    }

    pub fn jacobian_a(&self, e: f64) -> Result<f64> {
        if !(e < 0.0) {
            return invalid("the phase-space Jacobian is defined for negative energies");
        }
        Ok(self.a_unchecked(e))
    }

    pub fn jacobian_a_prime(&self, e: f64) -> Result<f64> {
        if !(e < 0.0) {
            return invalid("the phase-space Jacobian is defined for negative energies");
        }
        Ok(self.a_prime_unchecked(e))
    }

    /// `a^{-1}(s)` by bracketed Newton, `|a(e) - s| <= 1e-13 s`.
    pub fn jacobian_inverse(&self, s: f64) -> Result<f64> {
        if !(s > 0.0) {
            return invalid("jacobian_inverse needs s > 0");
        }
        let top = self.a_unchecked(self.e_top);
        if s >= top {
            return Err(Error::Unresolvable(format!("volume {s} exceeds the resolvable range {top}")));
        }
        Ok(self.inverse_in(s, self.e_min, self.e_top))
    }

    /// Newton iteration safeguarded by the bracket `[lo, hi]` with `a(lo) <= s < a(hi)`.
    pub fn inverse_in(&self, s: f64, mut lo: f64, mut hi: f64) -> f64 {
        let mut e = 0.5 * (lo + hi);
        for _ in 0..200 {
            let (av, d) = self.a_and_prime(e);
            let val = av - s;
            if val.abs() <= 1e-13 * s {
                return e;
            }
            if val < 0.0 {
                lo = e;
            } else {
                hi = e;
            }
            let step = if d > 0.0 { e - val / d } else { f64::NAN };
            e = if step > lo && step < hi { step } else { 0.5 * (lo + hi) };
            if hi - lo <= 1e-16 * (1.0 + e.abs()) {
                return e;
            }
        }
        e
    }
}
