use super::{solve_ground_state, GroundState, GroundTarget, SolverOptions};
use crate::error::{invalid, Error, Result};
use crate::phase_space::{CasimirSpec, ConstraintPair, ModelParams};
use crate::potentials::functional_k;
use crate::rescaling::{apply_fit, fit_constraints};
use serde::{Deserialize, Serialize};

/// Outcome of locating the unique `M_j` with `J(M_1, M_j) = 1`.
#[derive(Debug, Clone)]
pub struct PureManevTuning {
    pub mj: f64,
    /// `J` at the returned `M_j`.
    pub j_value: f64,
    /// `(M_j, J)` along the bisection.
    pub trace: Vec<(f64, f64)>,
    /// `M_j` predicted by the scaling law of the normalized steady state.
    pub closed_form_mj: f64,
    /// Steady state with mass `M_1`.
    pub state: GroundState,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct Probe {
    mj: f64,
    j: f64,
}

/// Bisection on `ln M_j` with `J(M_1, M_j) = K` of the constraint-fitted normalized minimizer.
pub fn tune_pure_manev(m1: f64, j: &CasimirSpec, opts: &SolverOptions) -> Result<PureManevTuning> {
    if !(m1 > 0.0) {
        return invalid("target mass must be positive");
    }
    let params = ModelParams::pure_manev();
    let base = solve_ground_state(&params, j, &GroundTarget::Normalized, opts)?;
    let (m10, mj0) = (base.masses.m1, base.masses.mj);
    let p = j.p();
    let jval = |mj: f64| -> Result<f64> {
        let fit = fit_constraints(&base.density, &ConstraintPair::new(m1, mj)?, j)?;
        let f = apply_fit(&base.density, &fit)?;
        functional_k(&f, &base.solver.rescaled(fit.params().lambda))
    };
    let mut trace = Vec::new();
    let probe = |mj: f64, trace: &mut Vec<(f64, f64)>| -> Result<Probe> {
        let v = jval(mj)?;
        trace.push((mj, v));
        Ok(Probe { mj, j: v })
    };
    // J decreases in M_j: expand from the unscaled value until it brackets 1
    let start = mj0 * m1 / m10;
    let (mut lo, mut hi) = (probe(start, &mut trace)?, probe(start, &mut trace)?);
    while lo.j < 1.0 {
        hi = lo;
        lo = probe(lo.mj / 4.0, &mut trace)?;
        if lo.mj < start * 1e-30 {
            return Err(Error::Bracket("J stays below 1".into()));
        }
    }
    while hi.j > 1.0 {
        lo = hi;
        hi = probe(hi.mj * 4.0, &mut trace)?;
        if hi.mj > start * 1e30 {
            return Err(Error::Bracket("J stays above 1".into()));
        }
    }
    for _ in 0..200 {
        let mid = probe((lo.mj * hi.mj).sqrt(), &mut trace)?;
        if (mid.j - 1.0).abs() <= 1e-12 || hi.mj / lo.mj - 1.0 <= 1e-14 {
            lo = mid;
            break;
        }
        if mid.j > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let best = if (lo.j - 1.0).abs() <= (hi.j - 1.0).abs() { lo } else { hi };
    // J = 1 forces amplitude a = (M_1^0 / M_1)^{1/2} and M_j = a^{p-1} M_j^0 M_1 / M_1^0
    let a = (m10 / m1).sqrt();
    let closed_form_mj = a.powf(p - 1.0) * mj0 * m1 / m10;
    let state = solve_ground_state(&params, j, &GroundTarget::Mass(m1), opts)?;
    Ok(PureManevTuning { mj: best.mj, j_value: best.j, trace, closed_form_mj, state })
}
