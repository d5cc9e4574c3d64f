use super::jacobian::JacobianContext;
use crate::error::{Error, Result};
use crate::phase_space::{chi, clustered_energies, Cutoff, DistributionCurve, EnergyProfile, ModelParams, PhaseDensity};
use crate::potentials::{energies, FieldSolver};

/// Energy nodes of a rearranged profile; clustered towards the new cut-off.
const REARRANGE_NODES: usize = 800;
const REARRANGE_CLUSTER: f64 = 3.0;

#[derive(Debug, Clone)]
enum Source {
    /// `Q*(s) = F(a^{-1}(s))` for `f = F(energy)`; `(s, e)` pairs bracket the inverse.
    Energy { ctx: JacobianContext, profile: EnergyProfile, s: Vec<f64>, e: Vec<f64> },
    /// Generic inverse of a distribution curve, linear between levels.
    Curve(DistributionCurve),
}

/// Nonincreasing rearrangement `Q*` on phase-space volumes, zero from `r_star` on.
#[derive(Debug, Clone)]
pub struct SchwarzProfile {
    source: Source,
    r_star: f64,
}

impl SchwarzProfile {
    /// `Q* = inf { lambda : mu(lambda) <= s }` from a tabulated distribution curve.
    pub fn from_curve(curve: DistributionCurve) -> Self {
        let r_star = curve.volumes.first().copied().unwrap_or(0.0);
        Self { source: Source::Curve(curve), r_star }
    }

    /// `meas Supp Q*`.
    pub fn r_star(&self) -> f64 {
        self.r_star
    }

    pub fn sup(&self) -> f64 {
        self.value(0.0)
    }

    pub fn value(&self, s: f64) -> f64 {
        if s >= self.r_star {
            return 0.0;
        }
        match &self.source {
            Source::Energy { ctx, profile, s: ts, e } => {
                if s <= 0.0 {
                    return profile.value(ctx.e_min());
                }
                let k = ts.partition_point(|&x| x <= s).clamp(1, ts.len() - 1);
                profile.value(ctx.inverse_in(s, e[k - 1], e[k]))
            }
            Source::Curve(c) => {
                let (l, v) = (&c.levels, &c.volumes);
                // first level whose volume is <= s
                let k = v.partition_point(|&x| x > s);
                if k == 0 {
                    return l[0];
                }
                if k >= v.len() {
                    return c.sup();
                }
                let t = (v[k - 1] - s) / (v[k - 1] - v[k]);
                l[k - 1] + t * (l[k] - l[k - 1])
            }
        }
    }

    /// Exponent `n` of `Q*(s) ~ c (r_star - s)^n` as `s -> r_star`.
    pub fn edge_exponent(&self) -> f64 {
        match &self.source {
            Source::Energy { profile, .. } => profile.edge_exponent(),
            Source::Curve(_) => 0.0,
        }
    }

    /// Coefficient `c` of `Q*(s) ~ c (r_star - s)^n`; for `n = 0` the jump `Q*(r_star-)`.
    pub fn edge_coefficient(&self) -> f64 {
        match &self.source {
            Source::Energy { ctx, profile, e, .. } => {
                let n = profile.edge_exponent();
                if n == 0.0 {
                    return profile.edge_coefficient();
                }
                // e_cut - e ~ (r_star - s) / a'(e_cut)
                profile.edge_coefficient() / ctx.a_prime_unchecked(e[e.len() - 1]).powf(n)
            }
            Source::Curve(c) => {
                let (l, v) = (&c.levels, &c.volumes);
                let k = v.iter().rposition(|&x| x >= self.r_star).unwrap_or(0);
                l[k]
            }
        }
    }
}

/// Schwarz profile of `f = F(energy)`, exact through the Jacobian of its own energy.
pub fn schwarz_profile(f: &PhaseDensity) -> Result<SchwarzProfile> {
    let ctx = JacobianContext::of(f)?;
    let e_cut = f.profile.e_cut().min(ctx.e_top());
    if f.profile.is_zero() || e_cut <= ctx.e_min() {
        return Ok(SchwarzProfile::from_curve(DistributionCurve::zero()));
    }
    let e = clustered_energies(ctx.e_min(), e_cut, REARRANGE_NODES, REARRANGE_CLUSTER);
    let s: Vec<f64> = e.iter().map(|&x| ctx.a_unchecked(x)).collect();
    let r_star = s[s.len() - 1];
    Ok(SchwarzProfile { source: Source::Energy { ctx, profile: f.profile.clone(), s, e }, r_star })
}

/// `Q^{*}(a(e))` for energies of `ctx`, i.e. the profile of the rearrangement with respect to that energy.
///
/// The new cut-off is `a^{-1}(r_star)`; an edge jump of `Q*` is kept as a jump.
pub fn energy_rearrangement(qstar: &SchwarzProfile, ctx: &JacobianContext) -> Result<EnergyProfile> {
    if qstar.r_star() <= 0.0 {
        return Ok(EnergyProfile::zero(ctx.e_min()));
    }
    let e_cut = ctx.jacobian_inverse(qstar.r_star())?;
    let e = clustered_energies(ctx.e_min(), e_cut, REARRANGE_NODES, REARRANGE_CLUSTER);
    let last = e.len() - 1;
    let mut f: Vec<f64> = e[..last].iter().map(|&x| qstar.value(ctx.a_unchecked(x))).collect();
    for k in 1..f.len() {
        f[k] = f[k].min(f[k - 1]);
    }
    // divide out the edge behaviour so that the tabulated factor stays smooth up to the cut-off
    let n = qstar.edge_exponent();
    let mut g: Vec<f64> = if n == 0.0 { f } else { f.iter().zip(&e).map(|(v, x)| v / (e_cut - x).powf(n)).collect() };
    g.push(qstar.edge_coefficient() * ctx.a_prime_unchecked(e_cut).powf(n));
    EnergyProfile::table_with_edge(e, g, n)
}

/// Rearrangement of `qstar` with respect to `|v|^2/2 + b chi x.v + phi`.
pub fn rearranged_density(qstar: &SchwarzProfile, phi: Vec<f64>, b: f64, cutoff: Option<Cutoff>, like: &PhaseDensity) -> Result<PhaseDensity> {
    let grid = like.grid.clone();
    let pe: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(&phi)
        .map(|(&r, &p)| {
            let d = b * chi(cutoff.as_ref(), r) * r;
            p - 0.5 * d * d
        })
        .collect();
    let ctx = JacobianContext::new(grid.clone(), pe)?;
    let profile = energy_rearrangement(qstar, &ctx)?;
    PhaseDensity::new(grid, profile, phi, b, cutoff)
}

/// Result of [`tune_nu`]: the tuned factor, the rearranged density and the bisection trace.
#[derive(Debug, Clone)]
pub struct TuneOutcome {
    pub nu: f64,
    pub density: PhaseDensity,
    pub epot: f64,
    /// `(nu, E_pot)` pairs in evaluation order.
    pub trace: Vec<(f64, f64)>,
}

const NU_MIN: f64 = 1e-3;
const NU_MAX: f64 = 1e3;
/// First bracketing factor; squared after every unsuccessful step.
const NU_STEP: f64 = 1.0442737824274138;
/// Relative `E_pot` mismatch accepted by [`tune_nu`].
pub const NU_TOL: f64 = 1e-12;

/// Chooses `nu` with `E_pot(Q^{* b, nu phi_f}) = target`.
///
/// The bracket grows geometrically from `nu = 1` (first factor `2^{1/16}`, squared at every
/// step) inside `[1e-3, 1e3]`; the root is then located by Illinois false position in `ln nu`
/// until `E_pot` matches to [`NU_TOL`].
#[allow(clippy::too_many_arguments)]
pub fn tune_nu(
    qstar: &SchwarzProfile,
    like: &PhaseDensity,
    b: f64,
    cutoff: Option<Cutoff>,
    phi_f: &[f64],
    target: f64,
    solver: &FieldSolver,
    params: &ModelParams,
) -> Result<TuneOutcome> {
    if !(target > 0.0) || phi_f.iter().all(|&p| p == 0.0) {
        return Err(Error::InvalidInput("tune_nu needs a positive target and a nonzero field".into()));
    }
    let mut trace = Vec::new();
    let mut eval = |nu: f64| -> Result<(f64, PhaseDensity)> {
        let phi: Vec<f64> = phi_f.iter().map(|p| nu * p).collect();
        let f = rearranged_density(qstar, phi, b, cutoff, like)?;
        let ep = energies(&f, solver, params)?.epot;
        trace.push((nu, ep));
        Ok((ep, f))
    };
    let (mut lo, mut hi);
    let first = eval(1.0)?;
    if (first.0 - target).abs() <= NU_TOL * target {
        return Ok(TuneOutcome { nu: 1.0, density: first.1, epot: first.0, trace });
    }
    if first.0 < target {
        lo = (1.0f64, first.0);
        let (mut nu, mut step) = (1.0f64, NU_STEP);
        loop {
            nu *= step;
            step *= step;
            if nu > NU_MAX {
                return Err(Error::Bracket(format!("E_pot stays below target up to nu = {NU_MAX}")));
            }
            let (e, _) = eval(nu)?;
            if e >= target {
                hi = (nu, e);
                break;
            }
            lo = (nu, e);
        }
    } else {
        hi = (1.0f64, first.0);
        let (mut nu, mut step) = (1.0f64, NU_STEP);
        loop {
            nu /= step;
            step *= step;
            if nu < NU_MIN {
                return Err(Error::Bracket(format!("E_pot stays above target down to nu = {NU_MIN}")));
            }
            let (e, _) = match eval(nu) {
                Ok(v) => v,
                Err(Error::Unresolvable(m)) => return Err(Error::Bracket(format!("rearranged support leaves the grid: {m}"))),
                Err(err) => return Err(err),
            };
            if e < target {
                lo = (nu, e);
                break;
            }
            hi = (nu, e);
        }
    }
    // Illinois false position on (ln nu, E_pot - target)
    let (mut xl, mut fl) = (lo.0.ln(), lo.1 - target);
    let (mut xh, mut fh) = (hi.0.ln(), hi.1 - target);
    let mut side = 0i32;
    for _ in 0..200 {
        let x = if fh != fl { (xl * fh - xh * fl) / (fh - fl) } else { 0.5 * (xl + xh) };
        let x = if x > xl && x < xh { x } else { 0.5 * (xl + xh) };
        let (e, f) = eval(x.exp())?;
        let fx = e - target;
        if fx.abs() <= NU_TOL * target || xh - xl <= 1e-15 {
            return Ok(TuneOutcome { nu: x.exp(), density: f, epot: e, trace });
        }
        if fx < 0.0 {
            xl = x;
            fl = fx;
            if side == -1 {
                fh *= 0.5;
            }
            side = -1;
        } else {
            xh = x;
            fh = fx;
            if side == 1 {
                fl *= 0.5;
            }
            side = 1;
        }
    }
    Err(Error::NoConvergence { iterations: 200, residual: (fl.abs()).min(fh.abs()) / target })
}
