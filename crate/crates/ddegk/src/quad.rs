//! Quadrature rules: Gauss-Legendre nodes and composite Simpson sums.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on [-1, 1], exact for degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess, refined by Newton on L_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_pair(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_pair(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

// (L_n(x), L_n'(x)) by the three-term recurrence; valid for |x| < 1.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Integral of `f` over [a, b] by `panels` equal Gauss-Legendre panels.
pub fn composite_gauss<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    panels: usize,
    nodes: usize,
) -> f64 {
    let (x, w) = gauss_legendre(nodes);
    let width = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let lo = a + k as f64 * width;
        let mid = lo + 0.5 * width;
        let mut s = 0.0;
        for (xi, wi) in x.iter().zip(&w) {
            s += wi * f(mid + 0.5 * width * xi);
        }
        total += 0.5 * width * s;
    }
    total
}

/// Composite Simpson on uniformly spaced samples.
///
/// An odd interval count closes with the 3/8 rule on the last three
/// intervals; a single interval falls back to the trapezoid.
pub fn simpson_uniform(h: f64, y: &[f64]) -> f64 {
    let n = y.len().saturating_sub(1);
    match n {
        0 => 0.0,
        1 => 0.5 * h * (y[0] + y[1]),
        _ if n.is_multiple_of(2) => simpson_even(h, y),
        3 => 3.0 * h / 8.0 * (y[0] + 3.0 * y[1] + 3.0 * y[2] + y[3]),
        _ => {
            let m = n - 3;
            simpson_even(h, &y[..=m])
                + 3.0 * h / 8.0 * (y[m] + 3.0 * y[m + 1] + 3.0 * y[m + 2] + y[m + 3])
        }
    }
}

fn simpson_even(h: f64, y: &[f64]) -> f64 {
    let n = y.len() - 1;
    let mut s = y[0] + y[n];
    for (i, v) in y.iter().enumerate().take(n).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * h / 3.0
}

/// Composite Simpson on arbitrary increasing abscissae.
///
/// Exact for quadratics on every pair of intervals; an odd trailing interval
/// uses the quadratic through the last three points.
pub fn simpson(t: &[f64], y: &[f64]) -> f64 {
    assert_eq!(t.len(), y.len());
    let n = t.len().saturating_sub(1);
    if n == 0 {
        return 0.0;
    }
    if n == 1 {
        return 0.5 * (t[1] - t[0]) * (y[0] + y[1]);
    }
    let mut total = 0.0;
    let mut i = 0;
    while i + 2 <= n {
        let h0 = t[i + 1] - t[i];
        let h1 = t[i + 2] - t[i + 1];
        let hs = h0 + h1;
        total += hs / 6.0
            * ((2.0 - h1 / h0) * y[i]
                + hs * hs / (h0 * h1) * y[i + 1]
                + (2.0 - h0 / h1) * y[i + 2]);
        i += 2;
    }
    if n % 2 == 1 {
        let h1 = t[n] - t[n - 1];
        let h0 = t[n - 1] - t[n - 2];
        let a = (2.0 * h1 * h1 + 3.0 * h1 * h0) / (6.0 * (h0 + h1));
        let b = (h1 * h1 + 3.0 * h1 * h0) / (6.0 * h0);
        let c = h1 * h1 * h1 / (6.0 * h0 * (h0 + h1));
        total += a * y[n] + b * y[n - 1] - c * y[n - 2];
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_integrates_monomials() {
        let (x, w) = gauss_legendre(7);
        for k in 0..14 {
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
            let exact = if k % 2 == 0 {
                2.0 / (k as f64 + 1.0)
            } else {
                0.0
            };
            assert!((s - exact).abs() < 1e-14, "k={k}: {s} vs {exact}");
        }
    }

    #[test]
    fn simpson_variants_exact_on_cubics() {
        let f = |t: f64| 1.0 - 2.0 * t + 3.0 * t * t - t * t * t;
        let exact = |t: f64| t - t * t + t * t * t - 0.25 * t.powi(4);
        for n in 1..9 {
            let h = 0.3;
            let y: Vec<f64> = (0..=n).map(|i| f(i as f64 * h)).collect();
            let want = exact(n as f64 * h);
            if n > 1 {
                assert!((simpson_uniform(h, &y) - want).abs() < 1e-12, "n={n}");
            }
        }
        let t = [0.0, 0.1, 0.25, 0.3, 0.5, 0.9];
        let y: Vec<f64> = t.iter().map(|&t| 2.0 - t + 4.0 * t * t).collect();
        let want = 2.0 * 0.9 - 0.5 * 0.81 + 4.0 / 3.0 * 0.729;
        assert!((simpson(&t, &y) - want).abs() < 1e-13);
    }
}
