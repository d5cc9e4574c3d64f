use super::density::PhaseDensity;
use crate::error::Result;
use crate::rearrangement::JacobianContext;
use serde::{Deserialize, Serialize};

/// Tabulated `mu(lambda) = meas{ f > lambda }` on increasing levels; `mu` is nonincreasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionCurve {
    pub levels: Vec<f64>,
    pub volumes: Vec<f64>,
}

const LEVELS: usize = 800;

impl DistributionCurve {
    pub fn zero() -> Self {
        Self { levels: vec![0.0], volumes: vec![0.0] }
    }

    pub fn sup(&self) -> f64 {
        self.levels[self.levels.len() - 1]
    }

    /// Piecewise linear in `lambda`, zero above the top level.
    pub fn at(&self, lambda: f64) -> f64 {
        let l = &self.levels;
        if lambda >= self.sup() || l.len() < 2 {
            return 0.0;
        }
        if lambda <= l[0] {
            return self.volumes[0];
        }
        let i = l.partition_point(|&x| x <= lambda) - 1;
        let t = (lambda - l[i]) / (l[i + 1] - l[i]);
        self.volumes[i] + t * (self.volumes[i + 1] - self.volumes[i])
    }

    /// `int mu d lambda`, which equals `|| f ||_1`.
    pub fn integral(&self) -> f64 {
        self.levels.windows(2).zip(self.volumes.windows(2)).map(|(l, v)| 0.5 * (l[1] - l[0]) * (v[0] + v[1])).sum()
    }

    /// Curve from level energies: `mu(lambda) = a(F^{-1}(lambda))`.
    pub fn from_profile(sup: f64, level_energy: impl Fn(f64) -> f64, a: impl Fn(f64) -> f64) -> Self {
        if !(sup > 0.0) {
            return Self::zero();
        }
        let levels: Vec<f64> = (0..=LEVELS).map(|k| sup * k as f64 / LEVELS as f64).collect();
        let mut volumes: Vec<f64> = levels.iter().map(|&l| a(level_energy(l))).collect();
        volumes[LEVELS] = 0.0;
        // enforce monotonicity against round-off in a(.)
        for k in (0..LEVELS).rev() {
            volumes[k] = volumes[k].max(volumes[k + 1]);
        }
        Self { levels, volumes }
    }
}

/// Distribution function of `f`, using the Jacobian of its own energy.
pub fn distribution_curve(f: &PhaseDensity) -> Result<DistributionCurve> {
    if f.profile.is_zero() {
        return Ok(DistributionCurve::zero());
    }
    let ctx = JacobianContext::of(f)?;
    let sup = f.profile.sup_above(ctx.e_min());
    let e_cut = f.profile.e_cut();
    Ok(DistributionCurve::from_profile(
        sup,
        |l| f.profile.level_energy(l).min(e_cut),
        |e| if e <= ctx.e_min() { 0.0 } else { ctx.a_unchecked(e) },
    ))
}

/// `int |mu_1 - mu_2| d lambda / int mu_1 d lambda` on a common level grid.
pub fn equimeasurability_distance(c1: &DistributionCurve, c2: &DistributionCurve) -> f64 {
    let top = c1.sup().max(c2.sup());
    if top <= 0.0 {
        return 0.0;
    }
    let m = 4000;
    let dl = top / m as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..m {
        let l = (k as f64 + 0.5) * dl;
        let (a, b) = (c1.at(l), c2.at(l));
        num += (a - b).abs();
        den += a;
    }
    if den == 0.0 {
        return if num == 0.0 { 0.0 } else { f64::INFINITY };
    }
    num / den
}
