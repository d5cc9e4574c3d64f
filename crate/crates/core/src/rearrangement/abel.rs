use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

/// Nodal table on nondecreasing abscissae, linear between nodes.
///
/// A repeated abscissa encodes a jump: the two values are the left and right limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbelTable {
    pub w: Vec<f64>,
    pub values: Vec<f64>,
}

impl AbelTable {
    pub fn new(w: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if w.len() < 2 || w.len() != values.len() {
            return invalid("Abel table needs >= 2 matching nodes");
        }
        if w.windows(2).any(|p| !(p[1] >= p[0])) || w[0] == w[w.len() - 1] {
            return invalid("Abel table abscissae must be nondecreasing and span an interval");
        }
        Ok(Self { w, values })
    }

    /// Samples `g` on `k + 1` uniform nodes of `[lo, hi]`.
    pub fn sample(lo: f64, hi: f64, k: usize, g: impl Fn(f64) -> f64) -> Result<Self> {
        let w: Vec<f64> = (0..=k).map(|i| lo + (hi - lo) * i as f64 / k as f64).collect();
        let values = w.iter().map(|&x| g(x)).collect();
        Self::new(w, values)
    }

    /// Linear interpolation, right-continuous at jumps, constant outside.
    pub fn at(&self, x: f64) -> f64 {
        let n = self.w.len();
        if x < self.w[0] {
            return self.values[0];
        }
        if x >= self.w[n - 1] {
            return self.values[n - 1];
        }
        let i = self.w.partition_point(|&p| p <= x) - 1;
        let (a, b) = (self.w[i], self.w[i + 1]);
        self.values[i] + (x - a) / (b - a) * (self.values[i + 1] - self.values[i])
    }

    /// `int |self - other| / int |other|` over the span of `other`, by 8-point midpoint sampling per cell.
    pub fn l1_relative(&self, other: &AbelTable) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for c in other.w.windows(2) {
            let h = (c[1] - c[0]) / 8.0;
            for k in 0..8 {
                let x = c[0] + (k as f64 + 0.5) * h;
                num += (self.at(x) - other.at(x)).abs() * h;
                den += other.at(x).abs() * h;
            }
        }
        if den == 0.0 {
            num
        } else {
            num / den
        }
    }
}

/// `a(tau) = 4 pi sqrt2 int_{-inf}^tau mu(w) (tau - w)^{1/2} dw`, exact for the piecewise-linear `mu`, at the nodes of `mu`.
pub fn abel_forward(mu: &AbelTable) -> AbelTable {
    let w = &mu.w;
    let values = w
        .iter()
        .map(|&tau| {
            let mut acc = 0.0;
            for i in 0..w.len() - 1 {
                let (wa, wb) = (w[i], w[i + 1]);
                if wa >= tau || wb == wa {
                    continue;
                }
                let beta = (mu.values[i + 1] - mu.values[i]) / (wb - wa);
                let alpha = mu.values[i] + beta * (tau - wa);
                let t0 = tau - wa;
                let t1 = (tau - wb).max(0.0);
                acc += alpha * 2.0 / 3.0 * (t0.powf(1.5) - t1.powf(1.5)) - beta * 0.4 * (t0.powf(2.5) - t1.powf(2.5));
            }
            4.0 * PI * SQRT_2 * acc
        })
        .collect();
    AbelTable { w: w.clone(), values }
}

/// Inverse of [`abel_forward`] on strictly increasing nodes.
///
/// `J(lambda) = int a(tau) (lambda - tau)^{-1/2} dtau` by product integration (exact for the
/// piecewise-linear `a`); then `int^lambda mu = J'(lambda) / (2 pi^2 sqrt2)` and `mu` is its
/// derivative, both by centered differences.
pub fn abel_invert(a: &AbelTable) -> Result<AbelTable> {
    let t = &a.w;
    if t.windows(2).any(|p| !(p[1] > p[0])) {
        return invalid("abel_invert needs strictly increasing nodes");
    }
    let n = t.len();
    let j: Vec<f64> = (0..n)
        .map(|k| {
            let lam = t[k];
            (0..k)
                .map(|i| {
                    let slope = (a.values[i + 1] - a.values[i]) / (t[i + 1] - t[i]);
                    // a = a_lam - slope u with u = lambda - tau
                    let a_lam = a.values[i] + slope * (lam - t[i]);
                    let (u0, u1) = (lam - t[i], lam - t[i + 1]);
                    a_lam * 2.0 * (u0.sqrt() - u1.sqrt()) - slope * 2.0 / 3.0 * (u0.powf(1.5) - u1.powf(1.5))
                })
                .sum()
        })
        .collect();
    let cum: Vec<f64> = centered(t, &j).into_iter().map(|x| x / (2.0 * PI * PI * SQRT_2)).collect();
    Ok(AbelTable { w: t.clone(), values: centered(t, &cum) })
}

/// Centered differences, second-order one-sided at the ends.
fn centered(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = t.len();
    (0..n)
        .map(|k| {
            if k == 0 || k == n - 1 {
                let (i0, i1, i2) = if k == 0 { (0, 1, 2) } else { (n - 1, n - 2, n - 3) };
                if n < 3 {
                    return (y[1] - y[0]) / (t[1] - t[0]);
                }
                // derivative of the quadratic through three nodes, at the first of them
                let (h1, h2) = (t[i1] - t[i0], t[i2] - t[i0]);
                let (d1, d2) = (y[i1] - y[i0], y[i2] - y[i0]);
                (d1 * h2 * h2 - d2 * h1 * h1) / (h1 * h2 * (h2 - h1))
            } else {
                let (hl, hr) = (t[k] - t[k - 1], t[k + 1] - t[k]);
                (y[k + 1] - y[k]) * hl / (hr * (hl + hr)) + (y[k] - y[k - 1]) * hr / (hl * (hl + hr))
            }
        })
        .collect()
}
