//! Exact scaling algebra `f -> gamma f(x / lambda, mu v)` and two-parameter constraint fitting.

use crate::error::{invalid, Error, Result};
use crate::phase_space::{CasimirSpec, ConstraintPair, Cutoff, PhaseDensity};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// `f~(x, v) = gamma f(x / lambda, mu v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RescaleParams {
    pub gamma: f64,
    pub lambda: f64,
    pub mu: f64,
}

impl RescaleParams {
    pub fn new(gamma: f64, lambda: f64, mu: f64) -> Result<Self> {
        if ![gamma, lambda, mu].iter().all(|x| *x > 0.0 && x.is_finite()) {
            return invalid("rescale parameters must be positive and finite");
        }
        Ok(Self { gamma, lambda, mu })
    }

    pub fn identity() -> Self {
        Self { gamma: 1.0, lambda: 1.0, mu: 1.0 }
    }

    /// Parameters of applying `self` first and `then` second.
    pub fn then(&self, then: &RescaleParams) -> Self {
        Self { gamma: self.gamma * then.gamma, lambda: self.lambda * then.lambda, mu: self.mu * then.mu }
    }
}

/// Casimir factor: exact for power laws, otherwise the growth bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CasimirFactor {
    Exact(f64),
    Bracket { lo: f64, hi: f64 },
}

impl CasimirFactor {
    pub fn contains(&self, x: f64, rel: f64) -> bool {
        match *self {
            Self::Exact(v) => (x - v).abs() <= rel * v.abs(),
            Self::Bracket { lo, hi } => x >= lo * (1.0 - rel) && x <= hi * (1.0 + rel),
        }
    }
}

/// Multipliers of the moments under a rescaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleFactors {
    pub mass: f64,
    pub kinetic: f64,
    pub ep: f64,
    pub em: f64,
    pub casimir: CasimirFactor,
}

pub fn rescale_factors(params: &RescaleParams, j: &CasimirSpec) -> ScaleFactors {
    let RescaleParams { gamma: g, lambda: l, mu: m } = *params;
    let vol = l.powi(3) / m.powi(3);
    let casimir = match j {
        // homogeneous terms scale alike only when there is a single exponent
        CasimirSpec::Powers(t) if t.iter().all(|x| x.1 == t[0].1) => CasimirFactor::Exact(vol * g.powf(t[0].1)),
        _ => {
            let (a, b) = (g.powf(j.p()), g.powf(j.q()));
            CasimirFactor::Bracket { lo: vol * a.min(b), hi: vol * a.max(b) }
        }
    };
    ScaleFactors {
        mass: g * vol,
        kinetic: g * vol / (m * m),
        ep: g * g * l.powi(5) / m.powi(6),
        em: g * g * l.powi(4) / m.powi(6),
        casimir,
    }
}

/// Exact transform of the representation: grid and cut-off dilate by `lambda`,
/// `F~(e) = gamma F(mu^2 e)`, `phi~(r) = phi(r / lambda) / mu^2`, `b~ = b / (lambda mu)`.
pub fn apply_rescale(f: &PhaseDensity, params: &RescaleParams) -> Result<PhaseDensity> {
    if *params == RescaleParams::identity() {
        return Ok(f.clone());
    }
    let RescaleParams { gamma, lambda, mu } = *params;
    let grid = if lambda == 1.0 { f.grid.clone() } else { Arc::new(f.grid.scaled(lambda)) };
    let m2 = mu * mu;
    let phi = f.phi.iter().map(|p| p / m2).collect();
    let cutoff = f.cutoff.map(|c| Cutoff::new(c.r_chi * lambda)).transpose()?;
    PhaseDensity::new(grid, f.profile.rescaled(gamma, mu), phi, f.b / (lambda * mu), cutoff)
}

/// Solution of the constraint fit `f~(x, v) = gamma f(gamma^{1/3} lambda^{-1/3} x, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintFit {
    pub gamma: f64,
    pub lambda: f64,
    /// Target of `h(gamma) = ||j(gamma f)|| / (gamma ||j(f)||)`.
    pub ratio: f64,
    pub iterations: usize,
}

impl ConstraintFit {
    /// The fit as a rescaling: amplitude `gamma`, spatial dilation `(lambda / gamma)^{1/3}`.
    pub fn params(&self) -> RescaleParams {
        RescaleParams { gamma: self.gamma, lambda: (self.lambda / self.gamma).cbrt(), mu: 1.0 }
    }
}

/// `||j(gamma f)||` and its `gamma`-derivative, from per-term moments for power sums.
struct CasimirCurve<'a> {
    f: &'a PhaseDensity,
    j: &'a CasimirSpec,
    terms: Option<Vec<(f64, f64, f64)>>,
}

impl<'a> CasimirCurve<'a> {
    fn new(f: &'a PhaseDensity, j: &'a CasimirSpec) -> Result<Self> {
        let terms = match j {
            CasimirSpec::Powers(t) => {
                Some(t.iter().map(|&(c, p)| Ok((c, p, f.casimir(&CasimirSpec::power(p)?)))).collect::<Result<Vec<_>>>()?)
            }
            CasimirSpec::Custom { .. } => None,
        };
        Ok(Self { f, j, terms })
    }

    fn value(&self, gamma: f64) -> f64 {
        match &self.terms {
            Some(t) => t.iter().map(|&(c, p, m)| c * gamma.powf(p) * m).sum(),
            None => self.f.casimir_with(&|t| self.j.j(gamma * t)),
        }
    }

    fn derivative(&self, gamma: f64) -> f64 {
        match &self.terms {
            Some(t) => t.iter().map(|&(c, p, m)| c * p * gamma.powf(p - 1.0) * m).sum(),
            None => self.f.casimir_with(&|t| t * self.j.dj(gamma * t)),
        }
    }
}

/// `h(gamma) = ||j(gamma f)|| / (gamma ||j(f)||)`, strictly increasing under the growth condition.
pub fn casimir_ratio(f: &PhaseDensity, j: &CasimirSpec, gamma: f64) -> Result<f64> {
    let c = CasimirCurve::new(f, j)?;
    Ok(c.value(gamma) / (gamma * c.value(1.0)))
}

/// Unique `(gamma, lambda)` placing the fitted density on the constraint pair.
///
/// `lambda = M_1 / ||f||_1`; `gamma` solves `h(gamma) = M_j ||f|| / (M_1 ||j(f)||)` inside the
/// growth bracket, by bisection polished with Newton to `1e-12` relative.
pub fn fit_constraints(f: &PhaseDensity, target: &ConstraintPair, j: &CasimirSpec) -> Result<ConstraintFit> {
    let m1 = f.mass();
    if f.profile.is_zero() || !(m1 > 0.0) {
        return invalid("constraint fitting needs f != 0");
    }
    let curve = CasimirCurve::new(f, j)?;
    let mj = curve.value(1.0);
    let ratio = target.mj * m1 / (target.m1 * mj);
    let lambda = target.m1 / m1;
    let (p, q) = (j.p(), j.q());
    let (a, b) = (ratio.powf(1.0 / (p - 1.0)), ratio.powf(1.0 / (q - 1.0)));
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let h = |g: f64| curve.value(g) / (g * mj) - ratio;
    let slack = 1e-12;
    if h(lo * (1.0 - slack)) > 0.0 || h(hi * (1.0 + slack)) < 0.0 {
        return Err(Error::Bracket(format!("growth bracket [{lo}, {hi}] does not enclose the root; growth condition violated")));
    }
    lo *= 1.0 - slack;
    hi *= 1.0 + slack;
    let mut g = 0.5 * (lo + hi);
    for it in 1..=200 {
        let val = h(g);
        if val < 0.0 {
            lo = g;
        } else {
            hi = g;
        }
        // h' = ||j'(g f) f|| / (g ||j(f)||) - h / g
        let d = curve.derivative(g) / (g * mj) - (val + ratio) / g;
        let newton = g - val / d;
        let next = if d > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - g).abs() <= 1e-14 * g || hi - lo <= 1e-12 * g {
            return Ok(ConstraintFit { gamma: next, lambda, ratio, iterations: it });
        }
        g = next;
    }
    Err(Error::NoConvergence { iterations: 200, residual: h(g).abs() })
}

/// Applies a constraint fit.
pub fn apply_fit(f: &PhaseDensity, fit: &ConstraintFit) -> Result<PhaseDensity> {
    apply_rescale(f, &fit.params())
}
