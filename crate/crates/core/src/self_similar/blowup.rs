use super::SelfSimilarProfile;
use crate::error::{invalid, Error, Result};
use crate::ground_state::GroundState;
use crate::phase_space::PhaseDensity;
use crate::quad::linear_fit;
use crate::rescaling::{apply_rescale, RescaleParams};
use serde::{Deserialize, Serialize};

/// One time slice of an explicit blow-up solution.
#[derive(Debug, Clone)]
pub struct BlowupSnapshot {
    pub t: f64,
    pub blowup_time: f64,
    /// Spatial scale of the solution at `t`.
    pub scale: f64,
    pub kinetic: f64,
    pub density: PhaseDensity,
}

/// Scalars of a snapshot for tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRow {
    pub t: f64,
    pub remaining: f64,
    pub scale: f64,
    pub kinetic: f64,
    pub mass: f64,
}

impl BlowupSnapshot {
    pub fn row(&self) -> SnapshotRow {
        SnapshotRow { t: self.t, remaining: self.blowup_time - self.t, scale: self.scale, kinetic: self.kinetic, mass: self.density.mass() }
    }
}

fn check_time(t: f64, blowup_time: f64) -> Result<()> {
    if !(t < blowup_time) || !t.is_finite() || !blowup_time.is_finite() {
        return invalid("snapshot time must precede the blow-up time");
    }
    Ok(())
}

/// `f(t) = Q_b(x / lambda, lambda v)` with `lambda = sqrt(2 b (T - t))`, using the normal form of `Q_b`.
pub fn blowup_selfsimilar(profile: &SelfSimilarProfile, blowup_time: f64, t: f64) -> Result<BlowupSnapshot> {
    check_time(t, blowup_time)?;
    let (b, q) = profile.normalized()?;
    if !(b > 0.0) {
        return invalid("the self-similar family needs b > 0");
    }
    let scale = (2.0 * b * (blowup_time - t)).sqrt();
    let density = apply_rescale(&q, &RescaleParams::new(1.0, scale, scale)?)?;
    Ok(BlowupSnapshot { t, blowup_time, scale, kinetic: density.kinetic(), density })
}

/// `f(t) = Q(T x / (T - t), (T - t) v / T + x / T)` for a pure Manev steady state `Q`.
///
/// With `s = (T - t) / T` this is `F(s^2 (|v|^2/2 + x.v / (s T) + phi_Q(x / s) / s^2 + |x|^2 / (2 s^2 T^2)))`,
/// a drifted energy with `b = 1 / (s T)` and no cut-off.
pub fn blowup_pseudoconformal(state: &GroundState, blowup_time: f64, t: f64) -> Result<BlowupSnapshot> {
    check_time(t, blowup_time)?;
    if state.params.delta != 0.0 {
        return invalid("the pseudo-conformal family needs a pure Manev steady state");
    }
    if !(t >= 0.0) {
        return invalid("the pseudo-conformal family starts at t = 0");
    }
    let s = (blowup_time - t) / blowup_time;
    let scaled = apply_rescale(&state.density, &RescaleParams::new(1.0, s, s)?)?;
    let b = 1.0 / (s * blowup_time);
    let phi: Vec<f64> = scaled.grid.nodes().iter().zip(&scaled.phi).map(|(&r, &p)| p + 0.5 * (b * r).powi(2)).collect();
    let density = PhaseDensity::new(scaled.grid.clone(), scaled.profile.clone(), phi, b, None)?;
    Ok(BlowupSnapshot { t, blowup_time, scale: s, kinetic: density.kinetic(), density })
}

/// Least-squares slope of `ln kinetic` against `ln (T - t)`.
pub fn rate_fit(series: &[(f64, f64)]) -> Result<f64> {
    if series.len() < 5 {
        return invalid("rate fit needs at least 5 points");
    }
    if series.iter().any(|&(d, k)| !(d > 0.0 && k > 0.0)) {
        return Err(Error::InvalidInput("rate fit needs positive (T - t, kinetic) pairs".into()));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = series.iter().map(|&(d, k)| (d.ln(), k.ln())).unzip();
    Ok(linear_fit(&x, &y).0)
}
