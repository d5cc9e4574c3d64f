use crate::error::{invalid, Result};
use std::fmt;
use std::sync::Arc;

type Eval = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Convex Casimir function `j` with `j(0) = j'(0) = 0` and growth exponents `3 < p <= q`.
#[derive(Clone)]
pub enum CasimirSpec {
    /// `j(t) = sum_k c_k t^{p_k}` with `c_k > 0`.
    Powers(Vec<(f64, f64)>),
    /// Caller-supplied evaluators for `j`, `j'` and `(j')^{-1}`.
    Custom { j: Eval, dj: Eval, dj_inv: Eval, p: f64, q: f64 },
}

impl fmt::Debug for CasimirSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Powers(t) => f.debug_tuple("Powers").field(t).finish(),
            Self::Custom { p, q, .. } => f.debug_struct("Custom").field("p", p).field("q", q).finish(),
        }
    }
}

impl CasimirSpec {
    /// `j(t) = t^p`.
    pub fn power(p: f64) -> Result<Self> {
        Self::powers(vec![(1.0, p)])
    }

    pub fn powers(terms: Vec<(f64, f64)>) -> Result<Self> {
        if terms.is_empty() {
            return invalid("Casimir needs at least one term");
        }
        for &(c, p) in &terms {
            if !(c > 0.0) || !(p > 3.0) || !p.is_finite() {
                return invalid(format!("Casimir term {c} t^{p} needs c > 0 and p > 3"));
            }
        }
        Ok(Self::Powers(terms))
    }

    pub fn custom(j: Eval, dj: Eval, dj_inv: Eval, p: f64, q: f64) -> Result<Self> {
        if !(p > 3.0 && q >= p) {
            return invalid("custom Casimir needs 3 < p <= q");
        }
        Ok(Self::Custom { j, dj, dj_inv, p, q })
    }

    /// Lower growth exponent `p` in `p <= t j'(t)/j(t) <= q`.
    pub fn p(&self) -> f64 {
        match self {
            Self::Powers(t) => t.iter().map(|x| x.1).fold(f64::INFINITY, f64::min),
            Self::Custom { p, .. } => *p,
        }
    }

    pub fn q(&self) -> f64 {
        match self {
            Self::Powers(t) => t.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max),
            Self::Custom { q, .. } => *q,
        }
    }

    /// `Some(p)` when `j(t) = t^p` exactly.
    pub fn pure_power(&self) -> Option<f64> {
        match self {
            Self::Powers(t) if t.len() == 1 && t[0].0 == 1.0 => Some(t[0].1),
            _ => None,
        }
    }

    pub fn j(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            Self::Powers(terms) => terms.iter().map(|&(c, p)| c * t.powf(p)).sum(),
            Self::Custom { j, .. } => j(t),
        }
    }

    pub fn dj(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            Self::Powers(terms) => terms.iter().map(|&(c, p)| c * p * t.powf(p - 1.0)).sum(),
            Self::Custom { dj, .. } => dj(t),
        }
    }

    pub fn d2j(&self, t: f64) -> f64 {
        match self {
            Self::Powers(terms) => terms.iter().map(|&(c, p)| c * p * (p - 1.0) * t.max(0.0).powf(p - 2.0)).sum(),
            Self::Custom { dj, .. } => {
                let h = 1e-6 * t.abs().max(1e-6);
                (dj(t + h) - dj((t - h).max(0.0))) / (t + h - (t - h).max(0.0))
            }
        }
    }

    /// `(j')^{-1}(s)`, zero for `s <= 0`.
    pub fn dj_inv(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        match self {
            Self::Powers(terms) if terms.len() == 1 => {
                let (c, p) = terms[0];
                (s / (c * p)).powf(1.0 / (p - 1.0))
            }
            Self::Powers(_) => {
                // j' is increasing; bracket then bisect in log space.
                let mut hi = 1.0;
                while self.dj(hi) < s {
                    hi *= 2.0;
                }
                let mut lo = hi;
                while self.dj(lo) > s && lo > 1e-300 {
                    lo *= 0.5;
                }
                crate::quad::bisect(lo, hi, 1e-15, 300, |t| self.dj(t) - s)
            }
            Self::Custom { dj_inv, .. } => dj_inv(s),
        }
    }

    /// Checks `j(0)=0`, `j'' > 0` and `p <= t j'/j <= q` on sampled `t > 0`.
    pub fn check_invariants(&self) -> Result<()> {
        if self.j(0.0) != 0.0 || self.dj(0.0) != 0.0 {
            return invalid("Casimir must vanish to first order at 0");
        }
        let (p, q) = (self.p(), self.q());
        for k in -40..=40 {
            let t = 10f64.powf(k as f64 / 8.0);
            let ratio = t * self.dj(t) / self.j(t);
            if ratio < p * (1.0 - 1e-9) || ratio > q * (1.0 + 1e-9) {
                return invalid(format!("t j'(t)/j(t) = {ratio} outside [{p}, {q}] at t = {t}"));
            }
            if !(self.d2j(t) > 0.0) {
                return invalid(format!("j'' not positive at t = {t}"));
            }
        }
        Ok(())
    }
}
