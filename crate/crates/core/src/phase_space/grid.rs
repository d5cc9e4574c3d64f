use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};

/// Radial nodes `0 = r_0 < ... < r_{N-1}` with composite (nonuniform) Simpson weights.
///
/// All node-based integrals use the weights; potentials treat data as piecewise
/// linear between nodes and use [`RadialGrid::cumulative`] for running integrals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    r: Vec<f64>,
    w: Vec<f64>,
}

/// Weights of `f0, f1, f2` for the integral over [x0, x2] of the interpolating quadratic.
fn simpson_pair(h0: f64, h1: f64) -> [f64; 3] {
    let s = h0 + h1;
    [s / 6.0 * (2.0 - h1 / h0), s * s * s / (6.0 * h0 * h1), s / 6.0 * (2.0 - h0 / h1)]
}

/// Weights over the first cell [x0, x1] of the quadratic through x0, x1, x2.
fn first_cell(h0: f64, h1: f64) -> [f64; 3] {
    let s = h0 + h1;
    [
        h0 * (2.0 * h0 + 3.0 * h1) / (6.0 * s),
        h0 * (h0 + 3.0 * h1) / (6.0 * h1),
        -h0 * h0 * h0 / (6.0 * h1 * s),
    ]
}

/// Weights over the last cell [x1, x2] of the quadratic through x0, x1, x2.
fn last_cell(h0: f64, h1: f64) -> [f64; 3] {
    let s = h0 + h1;
    [
        -h1 * h1 * h1 / (6.0 * h0 * s),
        h1 * (h1 + 3.0 * h0) / (6.0 * h0),
        h1 * (2.0 * h1 + 3.0 * h0) / (6.0 * s),
    ]
}

/// Uniform buckets over `[0, r_max]`, each holding the cell of its left edge.
/// Invariant: `locate(x) == cell(x)` for every finite `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellLocator {
    r: Vec<f64>,
    start: Vec<u32>,
    scale: f64,
}

impl CellLocator {
    pub fn locate(&self, x: f64) -> usize {
        let last = self.r.len() - 2;
        let b = ((x * self.scale).max(0.0) as usize).min(self.start.len() - 1);
        let mut i = self.start[b] as usize;
        // the bucket edge can round past x by one cell either way
        while i > 0 && self.r[i] > x {
            i -= 1;
        }
        while i < last && self.r[i + 1] <= x {
            i += 1;
        }
        i
    }
}

impl RadialGrid {
    pub fn from_nodes(r: Vec<f64>) -> Result<Self> {
        if r.len() < 3 {
            return invalid("a radial grid needs at least 3 nodes");
        }
        if r[0] != 0.0 {
            return invalid("the first radial node must be 0");
        }
        if r.windows(2).any(|p| !(p[1] > p[0]) || !p[1].is_finite()) {
            return invalid("radial nodes must be finite and strictly increasing");
        }
        let n = r.len();
        let mut w = vec![0.0; n];
        let pairs = (n - 1) / 2;
        for k in 0..pairs {
            let i = 2 * k;
            let c = simpson_pair(r[i + 1] - r[i], r[i + 2] - r[i + 1]);
            for j in 0..3 {
                w[i + j] += c[j];
            }
        }
        if (n - 1) % 2 == 1 {
            let i = n - 3;
            let c = last_cell(r[i + 1] - r[i], r[i + 2] - r[i + 1]);
            for j in 0..3 {
                w[i + j] += c[j];
            }
        }
        if w.iter().any(|&x| !(x > 0.0)) {
            return invalid("grid spacing varies too fast: nonpositive quadrature weight");
        }
        Ok(Self { r, w })
    }

    pub fn uniform(n: usize, r_max: f64) -> Result<Self> {
        if !(r_max > 0.0) {
            return invalid("grid extent must be positive");
        }
        let h = r_max / (n.max(1) - 1).max(1) as f64;
        Self::from_nodes((0..n).map(|i| if i + 1 == n { r_max } else { i as f64 * h }).collect())
    }

    /// Graded grid with nodes clustered at `r = 0` and at `r = r_edge`, extending to `r_max`.
    ///
    /// `[0, r_edge]` uses a two-sided tanh map of strength `beta`; the exterior uses a
    /// one-sided sinh map whose first cell matches the last interior cell.
    pub fn graded(n: usize, r_edge: f64, r_max: f64, beta: f64) -> Result<Self> {
        if n < 8 || !(r_edge > 0.0) || !(r_max > r_edge) || !(beta > 0.0) {
            return invalid("graded grid needs n >= 8, 0 < r_edge < r_max, beta > 0");
        }
        let n_in = ((n as f64) * 0.6).round() as usize;
        let n_out = n - n_in + 1;
        let t = (0.5 * beta).tanh();
        let mut r: Vec<f64> = (0..n_in)
            .map(|i| {
                let eta = i as f64 / (n_in - 1) as f64;
                r_edge * 0.5 * (1.0 + (beta * (eta - 0.5)).tanh() / t)
            })
            .collect();
        r[0] = 0.0;
        r[n_in - 1] = r_edge;
        let h_edge = r_edge - r[n_in - 2];
        let len = r_max - r_edge;
        let h_out = 1.0 / (n_out - 1) as f64;
        let first = |b: f64| len * (b * h_out).sinh() / b.sinh();
        // first(b) decreases in b; match the interior edge spacing if possible.
        let b_out = if first(1e-6) <= h_edge {
            1e-6
        } else {
            crate::quad::bisect(1e-6, 700.0, 1e-14, 200, |b| first(b) - h_edge)
        };
        for i in 1..n_out {
            let eta = i as f64 * h_out;
            r.push(if i + 1 == n_out { r_max } else { r_edge + len * (b_out * eta).sinh() / b_out.sinh() });
        }
        Self::from_nodes(r)
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.r
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn r_max(&self) -> f64 {
        self.r[self.r.len() - 1]
    }

    /// Integral of `g` over [0, r_max].
    pub fn integrate(&self, g: &[f64]) -> f64 {
        debug_assert_eq!(g.len(), self.r.len());
        self.w.iter().zip(g).map(|(w, g)| w * g).sum()
    }

    /// Volume integral `4 pi int g r^2 dr` of a radial function.
    pub fn integrate_shell(&self, g: &[f64]) -> f64 {
        4.0 * std::f64::consts::PI
            * self.w.iter().zip(&self.r).zip(g).map(|((w, r), g)| w * r * r * g).sum::<f64>()
    }

    /// Running integral `int_0^{r_i} g dr`; the value at the last node equals [`Self::integrate`].
    pub fn cumulative(&self, g: &[f64]) -> Vec<f64> {
        let r = &self.r;
        let n = r.len();
        let mut c = vec![0.0; n];
        let pairs = (n - 1) / 2;
        for k in 0..pairs {
            let i = 2 * k;
            let (h0, h1) = (r[i + 1] - r[i], r[i + 2] - r[i + 1]);
            let a = first_cell(h0, h1);
            let p = simpson_pair(h0, h1);
            c[i + 1] = c[i] + a[0] * g[i] + a[1] * g[i + 1] + a[2] * g[i + 2];
            c[i + 2] = c[i] + p[0] * g[i] + p[1] * g[i + 1] + p[2] * g[i + 2];
        }
        if (n - 1) % 2 == 1 {
            let i = n - 3;
            let l = last_cell(r[i + 1] - r[i], r[i + 2] - r[i + 1]);
            c[n - 1] = c[n - 2] + l[0] * g[i] + l[1] * g[i + 1] + l[2] * g[i + 2];
        }
        c
    }

    /// Index `i` of the cell `[r_i, r_{i+1}]` containing `x` (clamped to the grid).
    pub fn cell(&self, x: f64) -> usize {
        let n = self.r.len();
        match self.r.binary_search_by(|p| p.partial_cmp(&x).expect("finite radius")) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    /// Constant-time replacement for [`Self::cell`].
    pub fn locator(&self) -> CellLocator {
        let n = self.r.len();
        let buckets = 4 * n;
        let scale = buckets as f64 / self.r_max();
        let start = (0..=buckets).map(|b| self.cell(b as f64 / scale) as u32).collect();
        CellLocator { r: self.r.clone(), start, scale }
    }

    /// Linear interpolation of nodal values at `x`; constant extension beyond `r_max`.
    pub fn interp(&self, v: &[f64], x: f64) -> f64 {
        if x >= self.r_max() {
            return v[v.len() - 1];
        }
        let i = self.cell(x);
        let t = (x - self.r[i]) / (self.r[i + 1] - self.r[i]);
        v[i] + t * (v[i + 1] - v[i])
    }

    /// Cubic Hermite interpolation from nodal values and derivatives; constant beyond `r_max`.
    pub fn interp_hermite(&self, v: &[f64], dv: &[f64], x: f64) -> f64 {
        if x >= self.r_max() {
            return v[v.len() - 1];
        }
        let i = self.cell(x);
        let h = self.r[i + 1] - self.r[i];
        let t = (x - self.r[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * v[i] + (t3 - 2.0 * t2 + t) * h * dv[i] + (3.0 * t2 - 2.0 * t3) * v[i + 1] + (t3 - t2) * h * dv[i + 1]
    }

    /// The same grid with every node multiplied by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        Self { r: self.r.iter().map(|r| r * lambda).collect(), w: self.w.iter().map(|w| w * lambda).collect() }
    }

    /// Derivative from the five-point (fourth-order) Lagrange stencil, centered in the
    /// interior and shifted inward at both ends.
    pub fn derivative(&self, v: &[f64]) -> Vec<f64> {
        let r = &self.r;
        let n = r.len();
        let width = 5.min(n);
        (0..n)
            .map(|i| {
                let start = i.saturating_sub(width / 2).min(n - width);
                let xs = &r[start..start + width];
                let x = r[i];
                let mut acc = 0.0;
                for j in 0..width {
                    let mut wj = 0.0;
                    for m in 0..width {
                        if m == j {
                            continue;
                        }
                        let mut prod = 1.0 / (xs[j] - xs[m]);
                        for l in 0..width {
                            if l != j && l != m {
                                prod *= (x - xs[l]) / (xs[j] - xs[l]);
                            }
                        }
                        wj += prod;
                    }
                    acc += wj * v[start + j];
                }
                acc
            })
            .collect()
    }
}
