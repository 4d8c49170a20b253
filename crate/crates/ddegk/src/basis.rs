//! Legendre and Koornwinder polynomials, the rescaled basis on [-tau, 0],
//! and projections between history space and coefficient space.
//!
//! K_n(s) = -(1 + s) L_n'(s) + (n^2 + n + 1) L_n(s), with K_n(1) = 1.
//! The history space carries <f, g> = (1/tau) int f^D g^D + f^S g^S, under
//! which the rescaled K_n^tau(theta) = K_n(1 + 2 theta / tau), paired with
//! the point value K_n(1) = 1, are mutually orthogonal.

use crate::error::{Error, Result};
use crate::interp::{self, Interp};
use crate::quad;

/// Highest degree whose monomial coefficients are built exactly.
pub const MAX_EXACT_DEGREE: usize = 20;

fn check_unit(s: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&s) {
        return Err(Error::Domain(format!("s = {s} outside [-1, 1]")));
    }
    Ok(())
}

/// L_n(s) and L_n'(s), normalized so L_n(1) = 1.
pub fn legendre_with_derivative(n: usize, s: f64) -> Result<(f64, f64)> {
    check_unit(s)?;
    Ok(legendre_unchecked(n, s))
}

/// L_n(s).
pub fn legendre_eval(n: usize, s: f64) -> Result<f64> {
    Ok(legendre_with_derivative(n, s)?.0)
}

// Bonnet recurrence for values; L'_{k+1} = L'_{k-1} + (2k + 1) L_k for slopes.
fn legendre_unchecked(n: usize, s: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, s);
    let (mut d0, mut d1) = (0.0, 1.0);
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * s * p1 - kf * p0) / (kf + 1.0);
        let d2 = d0 + (2.0 * kf + 1.0) * p1;
        p0 = p1;
        p1 = p2;
        d0 = d1;
        d1 = d2;
    }
    (p1, d1)
}

/// K_n(s).
pub fn koornwinder_eval(n: usize, s: f64) -> Result<f64> {
    check_unit(s)?;
    Ok(koornwinder_unchecked(n, s))
}

pub(crate) fn koornwinder_unchecked(n: usize, s: f64) -> f64 {
    let (l, dl) = legendre_unchecked(n, s);
    let nf = n as f64;
    -(1.0 + s) * dl + (nf * nf + nf + 1.0) * l
}

/// K_n(-1) = (n^2 + n + 1)(-1)^n.
pub fn koornwinder_left_value(n: usize) -> f64 {
    let v = (n * n + n + 1) as f64;
    if n.is_multiple_of(2) {
        v
    } else {
        -v
    }
}

fn binom(n: u32, k: u32) -> i128 {
    let mut r: i128 = 1;
    for i in 0..k {
        r = r * (n - i) as i128 / (i + 1) as i128;
    }
    r
}

// Integer monomial coefficients of 2^n L_n, ascending powers.
fn legendre_scaled_int(n: usize) -> Vec<i128> {
    let mut c = vec![0i128; n + 1];
    for k in 0..=n / 2 {
        let sign = if k % 2 == 0 { 1 } else { -1 };
        c[n - 2 * k] = sign * binom(n as u32, k as u32) * binom((2 * n - 2 * k) as u32, n as u32);
    }
    c
}

fn check_degree(n: usize) -> Result<()> {
    if n > MAX_EXACT_DEGREE {
        return Err(Error::Capability(format!(
            "exact coefficients supported up to degree {MAX_EXACT_DEGREE}, requested {n}"
        )));
    }
    Ok(())
}

/// Monomial coefficients of L_n (ascending), from exact integer arithmetic.
pub fn legendre_coeffs(n: usize) -> Result<Vec<f64>> {
    check_degree(n)?;
    let scale = (n as f64).exp2();
    Ok(legendre_scaled_int(n)
        .into_iter()
        .map(|c| c as f64 / scale)
        .collect())
}

/// Monomial coefficients of K_n (ascending), from exact integer arithmetic.
pub fn koornwinder_coeffs(n: usize) -> Result<Vec<f64>> {
    check_degree(n)?;
    let l = legendre_scaled_int(n);
    let w = (n * n + n + 1) as i128;
    let mut k = vec![0i128; n + 1];
    for (p, &c) in l.iter().enumerate() {
        k[p] += w * c;
        if p > 0 {
            // -(1 + s) * p c s^{p-1}
            k[p - 1] -= p as i128 * c;
            k[p] -= p as i128 * c;
        }
    }
    let scale = (n as f64).exp2();
    Ok(k.into_iter().map(|c| c as f64 / scale).collect())
}

/// ||K_n||^2 = (1/2) int_{-1}^{1} K_n^2 ds + 1 for n < count, each by
/// Gauss-Legendre on n + 2 nodes, so entry n does not depend on `count`.
pub fn koornwinder_norms_sq(count: usize) -> Vec<f64> {
    (0..count)
        .map(|n| {
            let (x, w) = quad::gauss_legendre(n + 2);
            let s: f64 = x
                .iter()
                .zip(&w)
                .map(|(&x, &w)| w * koornwinder_unchecked(n, x).powi(2))
                .sum();
            0.5 * s + 1.0
        })
        .collect()
}

// K_n'(s), with L_n'' eliminated through the Legendre equation off s = 1.
fn koornwinder_derivative_unchecked(n: usize, s: f64) -> f64 {
    let nf = n as f64;
    let lam = nf * nf + nf + 1.0;
    if s == 1.0 {
        let d1 = nf * (nf + 1.0) / 2.0;
        let d2 = (nf - 1.0) * nf * (nf + 1.0) * (nf + 2.0) / 8.0;
        return (lam - 1.0) * d1 - 2.0 * d2;
    }
    let (l, dl) = legendre_unchecked(n, s);
    (lam - 1.0) * dl - (2.0 * s * dl - nf * (nf + 1.0) * l) / (1.0 - s)
}

/// Rows of a_{n,k} (k < n) with K_n' = sum_k a_{n,k} K_k, row n of length n.
///
/// a_{n,k} = <K_n', K_k> / ||K_k||^2 with the integral part by Gauss-Legendre
/// on n + 1 nodes, exact for the degree 2n - 1 integrand. Row n does not
/// depend on `count`.
pub fn derivative_coefficients(count: usize) -> Result<Vec<Vec<f64>>> {
    let norms = koornwinder_norms_sq(count);
    Ok((0..count)
        .map(|n| {
            if n == 0 {
                return Vec::new();
            }
            let (x, w) = quad::gauss_legendre(n + 1);
            let dk: Vec<f64> = x
                .iter()
                .map(|&s| koornwinder_derivative_unchecked(n, s))
                .collect();
            let d1 = koornwinder_derivative_unchecked(n, 1.0);
            (0..n)
                .map(|k| {
                    let integral: f64 = x
                        .iter()
                        .zip(&w)
                        .zip(&dk)
                        .map(|((&s, &w), &d)| w * d * koornwinder_unchecked(k, s))
                        .sum();
                    (0.5 * integral + d1) / norms[k]
                })
                .collect()
        })
        .collect())
}

/// Koornwinder basis of dimension `dim` rescaled to [-tau, 0].
#[derive(Debug, Clone, PartialEq)]
pub struct KoornwinderBasis {
    pub tau: f64,
    pub dim: usize,
    pub norms_sq: Vec<f64>,
    pub left_values: Vec<f64>,
    /// Row n holds a_{n,0..n-1}.
    pub deriv_coeffs: Vec<Vec<f64>>,
}

impl KoornwinderBasis {
    pub fn new(tau: f64, dim: usize) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Config(format!("delay must be positive, got {tau}")));
        }
        if dim == 0 {
            return Err(Error::Config("basis dimension must be at least 1".into()));
        }
        Ok(Self {
            tau,
            dim,
            norms_sq: koornwinder_norms_sq(dim),
            left_values: (0..dim).map(koornwinder_left_value).collect(),
            deriv_coeffs: derivative_coefficients(dim)?,
        })
    }

    /// a_{n,k}, zero when k >= n.
    pub fn a(&self, n: usize, k: usize) -> f64 {
        if k < n {
            self.deriv_coeffs[n][k]
        } else {
            0.0
        }
    }

    /// K_j^tau(theta) for theta in [-tau, 0].
    pub fn eval_scaled(&self, j: usize, theta: f64) -> Result<f64> {
        let s = self.to_unit(theta)?;
        Ok(koornwinder_unchecked(j, s))
    }

    fn to_unit(&self, theta: f64) -> Result<f64> {
        let tol = 1e-12 * self.tau;
        if theta < -self.tau - tol || theta > tol {
            return Err(Error::Domain(format!(
                "theta = {theta} outside [-{}, 0]",
                self.tau
            )));
        }
        Ok((1.0 + 2.0 * theta / self.tau).clamp(-1.0, 1.0))
    }

    /// CSV table: n, norm_sq, K_n(-1), a_{n,0..n-1}.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,norm_sq,left_value");
        for k in 0..self.dim.saturating_sub(1) {
            out.push_str(&format!(",a_{k}"));
        }
        out.push('\n');
        for n in 0..self.dim {
            out.push_str(&format!("{n},{},{}", self.norms_sq[n], self.left_values[n]));
            for k in 0..self.dim.saturating_sub(1) {
                out.push_str(&format!(",{}", self.a(n, k)));
            }
            out.push('\n');
        }
        out
    }
}

/// A history-space element: samples of the segment on [-tau, 0] plus the
/// point value. Continuity at theta = 0 is not required.
#[derive(Debug, Clone, PartialEq)]
pub struct HistorySegment {
    pub theta: Vec<f64>,
    pub values: Vec<f64>,
    pub state: f64,
    pub interp: Interp,
}

impl HistorySegment {
    pub fn new(theta: Vec<f64>, values: Vec<f64>, state: f64, interp: Interp) -> Result<Self> {
        if theta.len() < 2 || theta.len() != values.len() {
            return Err(Error::Config(
                "history needs at least two samples and matching lengths".into(),
            ));
        }
        if theta.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(
                "history grid must be strictly increasing".into(),
            ));
        }
        if *theta.last().unwrap() != 0.0 || theta[0] >= 0.0 {
            return Err(Error::Config(
                "history grid must run from -tau to exactly 0".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) || !state.is_finite() {
            return Err(Error::Config("history values must be finite".into()));
        }
        Ok(Self {
            theta,
            values,
            state,
            interp,
        })
    }

    /// Uniform samples of `f` at `samples + 1` points on [-tau, 0].
    pub fn from_fn<F: Fn(f64) -> f64>(tau: f64, samples: usize, f: F, state: f64) -> Result<Self> {
        let theta: Vec<f64> = (0..=samples)
            .map(|k| {
                if k == samples {
                    0.0
                } else {
                    -tau + tau * k as f64 / samples as f64
                }
            })
            .collect();
        let values = theta.iter().map(|&t| f(t)).collect();
        Self::new(theta, values, state, Interp::Cubic)
    }

    /// Constant history with matching point value.
    pub fn constant(tau: f64, value: f64) -> Result<Self> {
        Self::from_fn(tau, 200, |_| value, value)
    }

    pub fn tau(&self) -> f64 {
        -self.theta[0]
    }

    /// Segment value at theta (the L^2 part, not the point value).
    pub fn eval(&self, theta: f64) -> f64 {
        interp::eval(&self.theta, &self.values, self.interp, theta).0
    }

    /// Segment value and slope at theta.
    pub fn eval_with_slope(&self, theta: f64) -> (f64, f64) {
        interp::eval(&self.theta, &self.values, self.interp, theta)
    }

    /// CSV: theta,value rows followed by a `state` line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,value\n");
        for (t, v) in self.theta.iter().zip(&self.values) {
            out.push_str(&format!("{t},{v}\n"));
        }
        out.push_str(&format!("state,{}\n", self.state));
        out
    }
}

/// Panels used for history projections.
pub const PROJECTION_PANELS: usize = 8;

/// Coefficients zeta_j = <phi, K_j^tau> / ||K_j||^2, j < basis.dim.
pub fn project_history(phi: &HistorySegment, basis: &KoornwinderBasis) -> Result<Vec<f64>> {
    project_history_with(phi, basis, PROJECTION_PANELS)
}

/// As [`project_history`] with an explicit panel count.
pub fn project_history_with(
    phi: &HistorySegment,
    basis: &KoornwinderBasis,
    panels: usize,
) -> Result<Vec<f64>> {
    let tau = basis.tau;
    if (phi.tau() - tau).abs() > 1e-12 * tau.max(1.0) {
        return Err(Error::Config(format!(
            "history spans {} but basis delay is {tau}",
            phi.tau()
        )));
    }
    let nodes = (2 * basis.dim + 4).div_ceil(2);
    Ok((0..basis.dim)
        .map(|j| {
            let integral = quad::composite_gauss(
                |th| {
                    phi.eval(th) * koornwinder_unchecked(j, (1.0 + 2.0 * th / tau).clamp(-1.0, 1.0))
                },
                -tau,
                0.0,
                panels,
                nodes,
            );
            (integral / tau + phi.state) / basis.norms_sq[j]
        })
        .collect())
}

/// sum_j xi_j K_j^tau(theta). At theta = 0 this is sum_j xi_j.
pub fn reconstruct_history(xi: &[f64], basis: &KoornwinderBasis, theta: f64) -> Result<f64> {
    if xi.len() != basis.dim {
        return Err(Error::Config(format!(
            "expected {} coefficients, got {}",
            basis.dim,
            xi.len()
        )));
    }
    let s = basis.to_unit(theta)?;
    Ok(xi
        .iter()
        .enumerate()
        .map(|(j, x)| x * koornwinder_unchecked(j, s))
        .sum())
}

/// History segment sum_j xi_j K_j^tau sampled at `samples + 1` points, with
/// point value sum_j xi_j.
pub fn history_from_coeffs(
    xi: &[f64],
    basis: &KoornwinderBasis,
    samples: usize,
) -> Result<HistorySegment> {
    if xi.len() > basis.dim {
        return Err(Error::Config(
            "more coefficients than basis elements".into(),
        ));
    }
    let tau = basis.tau;
    let f = |th: f64| {
        let s = (1.0 + 2.0 * th / tau).clamp(-1.0, 1.0);
        xi.iter()
            .enumerate()
            .map(|(j, x)| x * koornwinder_unchecked(j, s))
            .sum()
    };
    HistorySegment::from_fn(tau, samples, f, xi.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_examples() {
        assert_eq!(legendre_eval(0, 0.37).unwrap(), 1.0);
        assert_eq!(legendre_eval(1, -0.5).unwrap(), -0.5);
        assert!((legendre_eval(2, 0.5).unwrap() + 0.125).abs() < 1e-15);
        assert!(legendre_eval(2, 1.5).is_err());
    }

    #[test]
    fn koornwinder_examples() {
        for n in 0..=10 {
            assert!((koornwinder_eval(n, 1.0).unwrap() - 1.0).abs() < 1e-12);
            assert_eq!(
                koornwinder_eval(n, -1.0).unwrap(),
                koornwinder_left_value(n)
            );
        }
        assert_eq!(koornwinder_eval(1, -1.0).unwrap(), -3.0);
        assert!((koornwinder_eval(2, 0.0).unwrap() + 3.5).abs() < 1e-15);
    }

    #[test]
    fn norms_first_values() {
        let n = koornwinder_norms_sq(2);
        assert!((n[0] - 2.0).abs() < 1e-14);
        assert!((n[1] - 10.0 / 3.0).abs() < 1e-14);
        // ((n^2 + n + 1)^2 + 1) / (2n + 1) in closed form.
        for (k, v) in koornwinder_norms_sq(21).iter().enumerate() {
            let lam = (k * k + k + 1) as f64;
            let want = (lam * lam + 1.0) / (2 * k + 1) as f64;
            assert!((v - want).abs() < 1e-13 * want, "n={k}");
        }
    }

    #[test]
    fn derivative_coefficients_low_order() {
        let a = derivative_coefficients(3).unwrap();
        assert!((a[1][0] - 2.0).abs() < 1e-14);
        assert!((a[2][0] - 4.5).abs() < 1e-13);
        assert!((a[2][1] - 7.5).abs() < 1e-13);
        let wide = derivative_coefficients(32).unwrap();
        assert_eq!(wide[5], derivative_coefficients(6).unwrap()[5]);
    }

    #[test]
    fn coefficient_polynomials_match_recurrence() {
        for n in 0..=MAX_EXACT_DEGREE {
            let c = koornwinder_coeffs(n).unwrap();
            for s in [-1.0, -0.3, 0.2, 0.9] {
                let poly: f64 = c.iter().rev().fold(0.0, |acc, v| acc * s + v);
                let direct = koornwinder_unchecked(n, s);
                assert!(
                    (poly - direct).abs() < 1e-9 * direct.abs().max(1.0),
                    "n={n}"
                );
            }
        }
    }

    #[test]
    fn constant_history_projects_to_first_mode() {
        let basis = KoornwinderBasis::new(1.58, 6).unwrap();
        let phi = HistorySegment::constant(1.58, 1.0).unwrap();
        let z = project_history(&phi, &basis).unwrap();
        assert!((z[0] - 1.0).abs() < 1e-13);
        for v in &z[1..] {
            assert!(v.abs() < 1e-13);
        }
        let other = KoornwinderBasis::new(1.2, 6).unwrap();
        assert!(matches!(
            project_history(&phi, &other),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn reconstruction_at_zero_sums_coefficients() {
        let basis = KoornwinderBasis::new(2.0, 4).unwrap();
        let xi = [0.3, -0.2, 0.05, 0.01];
        let v = reconstruct_history(&xi, &basis, 0.0).unwrap();
        assert!((v - 0.16).abs() < 1e-15);
        assert!(reconstruct_history(&xi, &basis, 0.1).is_err());
        assert_eq!(
            reconstruct_history(&[1.0, 0.0, 0.0, 0.0], &basis, -1.3).unwrap(),
            1.0
        );
    }
}
