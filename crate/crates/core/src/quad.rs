//! Shared quadrature and root-finding helpers.

use gauss_quad::legendre::GaussLegendre;
use std::sync::OnceLock;

fn rule(n: usize) -> &'static [(f64, f64)] {
    static R4: OnceLock<GaussLegendre> = OnceLock::new();
    static R5: OnceLock<GaussLegendre> = OnceLock::new();
    static R8: OnceLock<GaussLegendre> = OnceLock::new();
    static R16: OnceLock<GaussLegendre> = OnceLock::new();
    static R48: OnceLock<GaussLegendre> = OnceLock::new();
    let cell = match n {
        4 => &R4,
        5 => &R5,
        8 => &R8,
        16 => &R16,
        48 => &R48,
        _ => panic!("unsupported Gauss-Legendre order {n}"),
    };
    cell.get_or_init(|| GaussLegendre::new(n).expect("order >= 2"))
        .as_node_weight_pairs()
}

/// Gauss-Legendre nodes and weights on [-1, 1]; `n` in {4, 5, 8, 16, 48}.
pub fn gauss_legendre(n: usize) -> &'static [(f64, f64)] {
    rule(n)
}

/// `n`-point Gauss-Legendre approximation of the integral of `f` over [a, b].
pub fn gl_integrate(n: usize, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
    rule(n).iter().map(|&(x, w)| w * f(m + h * x)).sum::<f64>() * h
}

/// Bisection for a sign change of `f` on [lo, hi]; returns the midpoint of the final bracket.
pub fn bisect(mut lo: f64, mut hi: f64, tol: f64, max_iter: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= tol * (1.0 + mid.abs()) {
            return mid;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
