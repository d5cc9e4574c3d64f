use super::casimir::CasimirSpec;
use crate::error::{invalid, Result};
use crate::quad::gl_integrate;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta;

/// Radial cut-off: `chi = 1` on `[0, r_chi]`, cubic descent to `0` at `2 r_chi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub r_chi: f64,
}

impl Cutoff {
    pub fn new(r_chi: f64) -> Result<Self> {
        if !(r_chi > 0.0 && r_chi.is_finite()) {
            return invalid("cut-off radius must be positive");
        }
        Ok(Self { r_chi })
    }

    pub fn outer(&self) -> f64 {
        2.0 * self.r_chi
    }

    pub fn value(&self, r: f64) -> f64 {
        let t = (r - self.r_chi) / self.r_chi;
        if t <= 0.0 {
            1.0
        } else if t >= 1.0 {
            0.0
        } else {
            1.0 - t * t * (3.0 - 2.0 * t)
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        let t = (r - self.r_chi) / self.r_chi;
        if t <= 0.0 || t >= 1.0 {
            0.0
        } else {
            -6.0 * t * (1.0 - t) / self.r_chi
        }
    }

    /// `sup |chi'|`, attained at the midpoint of the descent.
    pub fn max_slope(&self) -> f64 {
        1.5 / self.r_chi
    }
}

/// `chi(r)` with `None` meaning `chi = 1` everywhere.
pub fn chi(cut: Option<&Cutoff>, r: f64) -> f64 {
    cut.map_or(1.0, |c| c.value(r))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ProfileShape {
    /// `F(e) = amp (e_cut - e)_+^n`.
    PowerLaw { amp: f64, n: f64 },
    /// `F(e) = G(e) (e_cut - e)^edge` with `G` piecewise linear on increasing nodes ending at
    /// `e_cut` (values `f`) and constant below the first node. With `edge = 0` a positive last
    /// value is a jump.
    Table { e: Vec<f64>, f: Vec<f64>, edge: f64 },
}

/// Nonincreasing function `F` of the microscopic energy, vanishing for `e >= e_cut`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyProfile {
    shape: ProfileShape,
    e_cut: f64,
}

/// `d^edge` with `0^0 = 1`, so a plain table keeps its edge value.
fn edge_factor(d: f64, edge: f64) -> f64 {
    if edge == 0.0 {
        1.0
    } else {
        d.max(0.0).powf(edge)
    }
}

fn pow_k1(t: f64, k: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        t.powf(k)
    }
}

impl EnergyProfile {
    pub fn zero(e_cut: f64) -> Self {
        Self { shape: ProfileShape::PowerLaw { amp: 0.0, n: 1.0 }, e_cut }
    }

    pub fn power_law(amp: f64, n: f64, e_cut: f64) -> Result<Self> {
        if !(amp >= 0.0) || !(n > 0.0) || !e_cut.is_finite() {
            return invalid("power-law profile needs amp >= 0, n > 0, finite cut-off");
        }
        Ok(Self { shape: ProfileShape::PowerLaw { amp, n }, e_cut })
    }

    /// Tabulated profile; the last node is the cut-off. A positive last value is a jump.
    pub fn table(e: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        Self::table_with_edge(e, f, 0.0)
    }

    /// Tabulated `G` times the edge factor `(e_cut - e)^edge`; `F` must be nonincreasing at the nodes.
    pub fn table_with_edge(e: Vec<f64>, g: Vec<f64>, edge: f64) -> Result<Self> {
        if e.len() < 2 || e.len() != g.len() {
            return invalid("profile table needs >= 2 matching nodes");
        }
        if e.windows(2).any(|p| !(p[1] > p[0])) {
            return invalid("profile energies must be strictly increasing");
        }
        if !(edge >= 0.0 && edge.is_finite()) || g.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
            return invalid("profile values must be finite and nonnegative, edge exponent >= 0");
        }
        let e_cut = e[e.len() - 1];
        let fv: Vec<f64> = e.iter().zip(&g).map(|(&x, &y)| y * edge_factor(e_cut - x, edge)).collect();
        if fv.windows(2).any(|p| p[1] > p[0] * (1.0 + 1e-12)) {
            return invalid("profile values must be nonincreasing");
        }
        Ok(Self { shape: ProfileShape::Table { e, f: g, edge }, e_cut })
    }

    pub fn shape(&self) -> &ProfileShape {
        &self.shape
    }

    pub fn e_cut(&self) -> f64 {
        self.e_cut
    }

    pub fn is_zero(&self) -> bool {
        match &self.shape {
            ProfileShape::PowerLaw { amp, .. } => *amp == 0.0,
            ProfileShape::Table { f, .. } => f.iter().all(|&x| x == 0.0),
        }
    }

    pub fn value(&self, e: f64) -> f64 {
        if e >= self.e_cut {
            return 0.0;
        }
        match &self.shape {
            ProfileShape::PowerLaw { amp, n } => amp * (self.e_cut - e).powf(*n),
            ProfileShape::Table { e: x, f, edge } => {
                let g = if e <= x[0] {
                    f[0]
                } else {
                    let i = x.partition_point(|&p| p <= e) - 1;
                    let t = (e - x[i]) / (x[i + 1] - x[i]);
                    f[i] + t * (f[i + 1] - f[i])
                };
                g * edge_factor(self.e_cut - e, *edge)
            }
        }
    }

    /// Left limit `F(e_cut-)`; positive for a tabulated jump.
    pub fn jump(&self) -> f64 {
        match &self.shape {
            ProfileShape::Table { f, edge, .. } if *edge == 0.0 => f[f.len() - 1],
            _ => 0.0,
        }
    }

    /// Exponent `n` of the behaviour `F ~ c (e_cut - e)^n` at the cut-off.
    pub fn edge_exponent(&self) -> f64 {
        match &self.shape {
            ProfileShape::PowerLaw { n, .. } => *n,
            ProfileShape::Table { edge, .. } => *edge,
        }
    }

    /// Coefficient `c` of the behaviour `F ~ c (e_cut - e)^n` at the cut-off.
    pub fn edge_coefficient(&self) -> f64 {
        match &self.shape {
            ProfileShape::PowerLaw { amp, .. } => *amp,
            ProfileShape::Table { f, .. } => f[f.len() - 1],
        }
    }

    /// Supremum of `F` over energies `>= e_floor`.
    pub fn sup_above(&self, e_floor: f64) -> f64 {
        self.value(e_floor)
    }

    /// `inf { e : F(e) <= level }`, so that `{F > level} = {e < level_energy}`.
    pub fn level_energy(&self, level: f64) -> f64 {
        if level < 0.0 {
            return f64::INFINITY;
        }
        match &self.shape {
            ProfileShape::PowerLaw { amp, n } => {
                if *amp == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    self.e_cut - (level / amp).powf(1.0 / n)
                }
            }
            ProfileShape::Table { e, f, edge } => {
                let fv: Vec<f64> = e.iter().zip(f).map(|(&x, &g)| g * edge_factor(self.e_cut - x, *edge)).collect();
                if fv[0] <= level {
                    return f64::NEG_INFINITY;
                }
                let Some(i) = fv.iter().position(|&v| v <= level) else { return self.e_cut };
                if *edge == 0.0 {
                    return e[i - 1] + (fv[i - 1] - level) / (fv[i - 1] - fv[i]) * (e[i] - e[i - 1]);
                }
                let (mut lo, mut hi) = (e[i - 1], e[i]);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if self.value(mid) > level {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                hi
            }
        }
    }

    /// `int_w^{e_cut} F(s) (s - w)^k ds` for `k > -1`.
    pub fn shell(&self, w: f64, k: f64) -> f64 {
        if w >= self.e_cut {
            return 0.0;
        }
        match &self.shape {
            ProfileShape::PowerLaw { amp, n } => {
                if *amp == 0.0 {
                    0.0
                } else {
                    amp * beta(n + 1.0, k + 1.0) * (self.e_cut - w).powf(n + k + 1.0)
                }
            }
            ProfileShape::Table { edge, .. } if *edge > 0.0 => self.cusp_integral(w, k, *edge, &|t| t),
            ProfileShape::Table { e, f, .. } => {
                let mut acc = 0.0;
                if w < e[0] {
                    acc += f[0] * pow_k1(e[0] - w, k + 1.0) / (k + 1.0);
                }
                for i in 0..e.len() - 1 {
                    if e[i + 1] <= w {
                        continue;
                    }
                    let (a, b) = (e[i].max(w), e[i + 1]);
                    let slope = (f[i + 1] - f[i]) / (e[i + 1] - e[i]);
                    let at_w = f[i] + slope * (w - e[i]);
                    let (ta, tb) = (a - w, b - w);
                    acc += at_w * (pow_k1(tb, k + 1.0) - pow_k1(ta, k + 1.0)) / (k + 1.0)
                        + slope * (pow_k1(tb, k + 2.0) - pow_k1(ta, k + 2.0)) / (k + 2.0);
                }
                acc
            }
        }
    }

    /// `int_w^{e_cut} g(F(s)) (s - w)^k ds` when `F` behaves like `(e_cut - s)^n` at the cut-off.
    ///
    /// `s = w + d x`; `x = t^2` on `[0, 1/2]` and `1 - x = y^m` on `[1/2, 1]` flatten both endpoints.
    fn cusp_integral(&self, w: f64, k: f64, n: f64, g: &dyn Fn(f64) -> f64) -> f64 {
        let d = self.e_cut - w;
        let m = if n > 0.0 { (2.0 / n).ceil().clamp(2.0, 40.0) } else { 2.0 };
        let left = gl_integrate(48, 0.0, 0.5f64.sqrt(), |t| 2.0 * t.powf(2.0 * k + 1.0) * g(self.value(w + d * t * t)));
        let right = gl_integrate(48, 0.0, 0.5f64.powf(1.0 / m), |y| {
            let x = 1.0 - y.powf(m);
            m * y.powf(m - 1.0) * x.powf(k) * g(self.value(w + d * x))
        });
        d.powf(k + 1.0) * (left + right)
    }

    /// `int_w^{e_cut} g(F(s)) (s - w)^{1/2} ds` for `g(0) = 0`.
    pub fn shell_map(&self, w: f64, g: &dyn Fn(f64) -> f64) -> f64 {
        if w >= self.e_cut {
            return 0.0;
        }
        match &self.shape {
            ProfileShape::PowerLaw { n, .. } => self.cusp_integral(w, 0.5, *n, g),
            ProfileShape::Table { edge, .. } if *edge > 0.0 => self.cusp_integral(w, 0.5, *edge, g),
            ProfileShape::Table { e, .. } => {
                // s = w + u^2 removes the square-root endpoint; GL-8 per table cell
                let integrand = |u: f64| 2.0 * u * u * g(self.value(w + u * u));
                let mut acc = 0.0;
                let mut lo = 0.0;
                for &x in e.iter() {
                    if x <= w {
                        continue;
                    }
                    let hi = (x - w).sqrt();
                    acc += gl_integrate(8, lo, hi, integrand);
                    lo = hi;
                }
                acc
            }
        }
    }

    /// Casimir shell `int j(F(s)) (s - w)^{1/2} ds`, closed form for power laws.
    pub fn casimir_shell(&self, w: f64, j: &CasimirSpec) -> f64 {
        if w >= self.e_cut {
            return 0.0;
        }
        match (&self.shape, j) {
            (ProfileShape::PowerLaw { amp, n }, CasimirSpec::Powers(terms)) => {
                if *amp == 0.0 {
                    return 0.0;
                }
                let d = self.e_cut - w;
                terms.iter().map(|&(c, p)| c * amp.powf(p) * beta(n * p + 1.0, 1.5) * d.powf(n * p + 1.5)).sum()
            }
            _ => self.shell_map(w, &|t| j.j(t)),
        }
    }

    /// Profile of `gamma f(x/lambda, mu v)` after the energy axis is rescaled: `gamma F(mu^2 e)`.
    pub fn rescaled(&self, gamma: f64, mu: f64) -> Self {
        let m2 = mu * mu;
        let shape = match &self.shape {
            ProfileShape::PowerLaw { amp, n } => ProfileShape::PowerLaw { amp: gamma * amp * m2.powf(*n), n: *n },
            ProfileShape::Table { e, f, edge } => ProfileShape::Table {
                e: e.iter().map(|x| x / m2).collect(),
                f: f.iter().map(|x| gamma * x * m2.powf(*edge)).collect(),
                edge: *edge,
            },
        };
        Self { shape, e_cut: self.e_cut / m2 }
    }

    /// Tabulated copy on `k` nodes in `[e_lo, e_cut]` clustered toward the cut-off.
    pub fn tabulate(&self, e_lo: f64, k: usize) -> Result<Self> {
        let nodes = clustered_energies(e_lo, self.e_cut, k, 3.0);
        let vals = nodes.iter().map(|&x| self.value(x)).collect();
        Self::table(nodes, vals)
    }
}

/// `k` increasing energies on `[lo, hi]`, denser near `hi` with grading power `g`.
pub fn clustered_energies(lo: f64, hi: f64, k: usize, g: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..k)
        .map(|i| {
            let s = 1.0 - i as f64 / (k - 1) as f64;
            hi - (hi - lo) * s.powf(g)
        })
        .collect();
    v[0] = lo;
    v[k - 1] = hi;
    v
}
