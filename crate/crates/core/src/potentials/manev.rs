use crate::phase_space::RadialGrid;
use crate::quad::gauss_legendre;
use rayon::prelude::*;
use std::f64::consts::PI;

/// `int s ln|s + c| ds`.
fn p1(s: f64, c: f64) -> f64 {
    let lg = if s + c == 0.0 { 0.0 } else { 0.5 * (s * s - c * c) * (s + c).abs().ln() };
    lg - 0.25 * s * s + 0.5 * c * s
}

/// `int s^2 ln|s + c| ds`.
fn p2(s: f64, c: f64) -> f64 {
    let lg = if s + c == 0.0 { 0.0 } else { (s * s * s + c * c * c) / 3.0 * (s + c).abs().ln() };
    lg - s * s * s / 9.0 + c * s * s / 6.0 - c * c * s / 3.0
}

/// `s ln|(r+s)/(r-s)|` for `s != r`, evaluated through `atanh` of the smaller ratio.
fn kernel(r: f64, s: f64) -> f64 {
    if s < r {
        2.0 * s * (s / r).atanh()
    } else {
        2.0 * s * (r / s).atanh()
    }
}

/// Dense operator `phi_M = W rho` for nodal densities, piecewise linear between nodes.
///
/// Cells within four widths of `r_i` take `rho` linear and use closed-form antiderivatives
/// of the logarithmic kernel; farther cells take `rho` quadratic on their Simpson triple
/// and use 4-point Gauss-Legendre on the smooth kernel.
#[derive(Debug, Clone)]
pub struct ManevOperator {
    n: usize,
    w: Vec<f64>,
}

impl ManevOperator {
    pub fn new(grid: &RadialGrid) -> Self {
        Self::with_prefactor(grid, 1.0 / PI)
    }

    /// Operator with a custom kernel prefactor (the physical value is `1/pi`).
    pub fn with_prefactor(grid: &RadialGrid, pref: f64) -> Self {
        let s = grid.nodes();
        let n = s.len();
        let gl = gauss_legendre(4);
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let r = s[i];
                let mut row = vec![0.0; n];
                for c in 0..n - 1 {
                    let (sa, sb) = (s[c], s[c + 1]);
                    let h = sb - sa;
                    let dist = if r < sa { sa - r } else if r > sb { r - sb } else { 0.0 };
                    if r == 0.0 && dist <= 4.0 * h {
                        // limit s ln|(r+s)/(r-s)| / r -> 2, exact for linear rho
                        row[c] += -pref * h;
                        row[c + 1] += -pref * h;
                    } else if dist > 4.0 * h {
                        // quadratic interpolation through the Simpson triple holding this cell
                        let base = if c % 2 == 0 { c } else { c - 1 }.min(n - 3);
                        let (x0, x1, x2) = (s[base], s[base + 1], s[base + 2]);
                        let (m, hh) = (0.5 * (sa + sb), 0.5 * h);
                        let mut acc = [0.0; 3];
                        for &(x, wq) in gl {
                            let sq = m + hh * x;
                            // the origin row takes the kernel limit 2 r
                            let k = if r == 0.0 { 2.0 * wq * hh } else { wq * hh * kernel(r, sq) / r };
                            acc[0] += k * (sq - x1) * (sq - x2) / ((x0 - x1) * (x0 - x2));
                            acc[1] += k * (sq - x0) * (sq - x2) / ((x1 - x0) * (x1 - x2));
                            acc[2] += k * (sq - x0) * (sq - x1) / ((x2 - x0) * (x2 - x1));
                        }
                        for k in 0..3 {
                            row[base + k] += -pref * acc[k];
                        }
                    } else {
                        let i1 = (p1(sb, r) - p1(sb, -r)) - (p1(sa, r) - p1(sa, -r));
                        let i2 = (p2(sb, r) - p2(sb, -r)) - (p2(sa, r) - p2(sa, -r));
                        row[c] += -pref * ((sb * i1 - i2) / h) / r;
                        row[c + 1] += -pref * ((i2 - sa * i1) / h) / r;
                    }
                }
                row
            })
            .collect();
        Self { n, w: rows.into_iter().flatten().collect() }
    }

    /// Operator of the grid dilated by `lambda`: the kernel measure is homogeneous of degree 1.
    pub fn scaled(&self, lambda: f64) -> Self {
        Self { n: self.n, w: self.w.iter().map(|x| x * lambda).collect() }
    }

    pub fn apply(&self, rho: &[f64]) -> Vec<f64> {
        assert_eq!(rho.len(), self.n);
        self.w.par_chunks(self.n).map(|row| row.iter().zip(rho).map(|(a, b)| a * b).sum()).collect()
    }
}
