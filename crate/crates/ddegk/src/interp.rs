//! One-dimensional interpolation on increasing, possibly nonuniform grids.

/// Interpolation rule attached to sampled signals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interp {
    Linear,
    /// Local four-point Lagrange cubic; reproduces cubics exactly.
    #[default]
    Cubic,
}

impl std::str::FromStr for Interp {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(Interp::Linear),
            "cubic" => Ok(Interp::Cubic),
            other => Err(format!("unknown interpolation '{other}'")),
        }
    }
}

impl std::fmt::Display for Interp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Interp::Linear => "linear",
            Interp::Cubic => "cubic",
        })
    }
}

// Index i with x[i] <= q <= x[i+1], clamped to the valid range.
fn bracket(x: &[f64], q: f64) -> usize {
    let n = x.len();
    if q <= x[0] {
        return 0;
    }
    if q >= x[n - 1] {
        return n - 2;
    }
    let i = x.partition_point(|&v| v <= q);
    i.saturating_sub(1).min(n - 2)
}

/// Value and derivative of the interpolant at `q`. `x` needs two or more points.
pub fn eval(x: &[f64], y: &[f64], rule: Interp, q: f64) -> (f64, f64) {
    let n = x.len();
    debug_assert!(n >= 2 && y.len() == n);
    let i = bracket(x, q);
    if rule == Interp::Linear || n < 4 {
        let slope = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
        return (y[i] + slope * (q - x[i]), slope);
    }
    // Stencil i-1..i+2, shifted inward at the ends.
    let s = i.saturating_sub(1).min(n - 4);
    let xs = &x[s..s + 4];
    let ys = &y[s..s + 4];
    let mut val = 0.0;
    let mut der = 0.0;
    for j in 0..4 {
        let mut num = 1.0;
        let mut den = 1.0;
        let mut dnum = 0.0;
        for k in 0..4 {
            if k == j {
                continue;
            }
            den *= xs[j] - xs[k];
            // Product rule for d/dq of prod (q - x_k).
            dnum = dnum * (q - xs[k]) + num;
            num *= q - xs[k];
        }
        val += ys[j] * num / den;
        der += ys[j] * dnum / den;
    }
    (val, der)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_rule_reproduces_cubics_with_derivative() {
        let x = [0.0, 0.2, 0.5, 0.6, 1.0, 1.3];
        let f = |t: f64| 0.5 - t + 2.0 * t * t - 0.7 * t * t * t;
        let df = |t: f64| -1.0 + 4.0 * t - 2.1 * t * t;
        let y: Vec<f64> = x.iter().map(|&t| f(t)).collect();
        for q in [0.0, 0.13, 0.55, 0.99, 1.3] {
            let (v, d) = eval(&x, &y, Interp::Cubic, q);
            assert!((v - f(q)).abs() < 1e-13);
            assert!((d - df(q)).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_rule_hits_samples() {
        let x = [0.0, 1.0, 3.0];
        let y = [1.0, 3.0, -1.0];
        assert_eq!(eval(&x, &y, Interp::Linear, 1.0).0, 3.0);
        assert_eq!(eval(&x, &y, Interp::Linear, 2.0).0, 1.0);
    }
}
