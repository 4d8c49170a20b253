//! Galerkin-Koornwinder (GK) reduction of a controlled DDE and the real 2D
//! system obtained by projecting onto the leading conjugate eigenpair.
//!
//! The reduced system reads xi' = M xi + G(xi) + c u with output m = d . xi.

use std::sync::Arc;

use nalgebra::{Complex, DMatrix};

use crate::basis::KoornwinderBasis;
use crate::dde::{ControlSignal, DdeModel, ScalarFn3, Trajectory};
use crate::error::{Error, Result};
use crate::linalg::{self, EigenPairs};

/// Largest reduced dimension accepted.
pub const MAX_DIM: usize = 32;

type C64 = Complex<f64>;

/// Nonlinear part G of a reduced system.
#[derive(Clone)]
pub enum NonlinearTerm {
    /// Dense symmetric tensor, entry Q[j][m][n] at `(j * N + m) * N + n`.
    Quadratic(Vec<f64>),
    /// G_j(xi) = scale_j F(w_x . xi, w_y . xi, w_z . xi) for non-quadratic F.
    Functional {
        f: ScalarFn3,
        wx: Vec<f64>,
        wy: Vec<f64>,
        wz: Vec<f64>,
        scale: Vec<f64>,
    },
}

impl std::fmt::Debug for NonlinearTerm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NonlinearTerm::Quadratic(q) => f.debug_tuple("Quadratic").field(&q.len()).finish(),
            NonlinearTerm::Functional { .. } => f.write_str("Functional(..)"),
        }
    }
}

/// N-dimensional control-affine ODE with quadratic (or callback) nonlinearity.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub dim: usize,
    pub linear: DMatrix<f64>,
    pub nonlinear: NonlinearTerm,
    pub control_inj: Vec<f64>,
    pub output_weights: Vec<f64>,
    pub init: Vec<f64>,
}

impl ReducedSystem {
    pub fn new(
        linear: DMatrix<f64>,
        quadratic: Vec<f64>,
        control_inj: Vec<f64>,
        output_weights: Vec<f64>,
        init: Vec<f64>,
    ) -> Result<Self> {
        let n = linear.nrows();
        if n == 0 || n > MAX_DIM || linear.ncols() != n {
            return Err(Error::Config(format!("bad reduced dimension {n}")));
        }
        if quadratic.len() != n * n * n
            || control_inj.len() != n
            || output_weights.len() != n
            || init.len() != n
        {
            return Err(Error::Config(
                "reduced system blocks have inconsistent sizes".into(),
            ));
        }
        let mut q = quadratic;
        // Store the symmetric part.
        for j in 0..n {
            for m in 0..n {
                for k in m + 1..n {
                    let a = (j * n + m) * n + k;
                    let b = (j * n + k) * n + m;
                    let s = 0.5 * (q[a] + q[b]);
                    q[a] = s;
                    q[b] = s;
                }
            }
        }
        Ok(Self {
            dim: n,
            linear,
            nonlinear: NonlinearTerm::Quadratic(q),
            control_inj,
            output_weights,
            init,
        })
    }

    /// The quadratic tensor, when available.
    pub fn quadratic(&self) -> Option<&[f64]> {
        match &self.nonlinear {
            NonlinearTerm::Quadratic(q) => Some(q),
            NonlinearTerm::Functional { .. } => None,
        }
    }

    /// Q[j][m][n]; zero for callback systems.
    pub fn q(&self, j: usize, m: usize, n: usize) -> f64 {
        self.quadratic()
            .map_or(0.0, |q| q[(j * self.dim + m) * self.dim + n])
    }

    /// G(xi).
    pub fn g(&self, xi: &[f64]) -> Vec<f64> {
        let n = self.dim;
        match &self.nonlinear {
            NonlinearTerm::Quadratic(q) => (0..n)
                .map(|j| {
                    let mut s = 0.0;
                    for m in 0..n {
                        let row = &q[(j * n + m) * n..(j * n + m + 1) * n];
                        let inner: f64 = row.iter().zip(xi).map(|(a, b)| a * b).sum();
                        s += xi[m] * inner;
                    }
                    s
                })
                .collect(),
            NonlinearTerm::Functional {
                f,
                wx,
                wy,
                wz,
                scale,
            } => {
                let dot = |w: &[f64]| w.iter().zip(xi).map(|(a, b)| a * b).sum::<f64>();
                let val = f(dot(wx), dot(wy), dot(wz));
                scale.iter().map(|s| s * val).collect()
            }
        }
    }

    /// Jacobian of G: DG[j][m] = 2 sum_n Q[j][m][n] xi_n. Quadratic systems only.
    pub fn dg(&self, xi: &[f64]) -> Option<DMatrix<f64>> {
        let q = self.quadratic()?;
        let n = self.dim;
        Some(DMatrix::from_fn(n, n, |j, m| {
            let row = &q[(j * n + m) * n..(j * n + m + 1) * n];
            2.0 * row.iter().zip(xi).map(|(a, b)| a * b).sum::<f64>()
        }))
    }

    /// M xi + G(xi) + c u.
    pub fn rhs(&self, xi: &[f64], u: f64) -> Vec<f64> {
        let g = self.g(xi);
        (0..self.dim)
            .map(|j| {
                let lin: f64 = (0..self.dim).map(|m| self.linear[(j, m)] * xi[m]).sum();
                lin + g[j] + self.control_inj[j] * u
            })
            .collect()
    }

    /// d . xi.
    pub fn output(&self, xi: &[f64]) -> f64 {
        self.output_weights.iter().zip(xi).map(|(a, b)| a * b).sum()
    }

    pub fn with_init(&self, init: Vec<f64>) -> Result<Self> {
        if init.len() != self.dim {
            return Err(Error::Config(
                "initial state has the wrong dimension".into(),
            ));
        }
        Ok(Self {
            init,
            ..self.clone()
        })
    }

    /// The same system with the nonlinear part removed.
    pub fn linearized(&self) -> Self {
        Self {
            nonlinear: NonlinearTerm::Quadratic(vec![0.0; self.dim.pow(3)]),
            ..self.clone()
        }
    }

    /// Plain-text dump: dimension, linear rows, Q slices, injection, output
    /// weights and initial state, one labelled block each.
    pub fn to_text(&self) -> String {
        let n = self.dim;
        let row = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut out = format!("dim {n}\nlinear\n");
        for j in 0..n {
            let r: Vec<f64> = (0..n).map(|m| self.linear[(j, m)]).collect();
            out.push_str(&row(&r));
            out.push('\n');
        }
        match self.quadratic() {
            Some(q) => {
                for j in 0..n {
                    out.push_str(&format!("quadratic {j}\n"));
                    for m in 0..n {
                        out.push_str(&row(&q[(j * n + m) * n..(j * n + m + 1) * n]));
                        out.push('\n');
                    }
                }
            }
            None => out.push_str("quadratic callback\n"),
        }
        out.push_str(&format!("control_inj\n{}\n", row(&self.control_inj)));
        out.push_str(&format!("output_weights\n{}\n", row(&self.output_weights)));
        out.push_str(&format!("init\n{}\n", row(&self.init)));
        out
    }
}

/// Linear matrix of the N-dimensional GK system.
///
/// (M)_{j,n} = (a + b K_n(-1) + c tau (2 delta_{n0} - 1)
///            + (2 / tau) sum_{k<n} a_{n,k} (delta_{jk} ||K_j||^2 - 1)) / ||K_j||^2
pub fn gk_matrix(model: &DdeModel, basis: &KoornwinderBasis, n: usize) -> Result<DMatrix<f64>> {
    check_dims(model, basis, n)?;
    let tau = basis.tau;
    Ok(DMatrix::from_fn(n, n, |j, col| {
        let nj = basis.norms_sq[j];
        let dist = if col == 0 { 1.0 } else { -1.0 };
        let mut s = model.a + model.b * basis.left_values[col] + model.c * tau * dist;
        for k in 0..col {
            let delta = if j == k { nj } else { 0.0 };
            s += 2.0 / tau * basis.a(col, k) * (delta - 1.0);
        }
        s / nj
    }))
}

fn check_dims(model: &DdeModel, basis: &KoornwinderBasis, n: usize) -> Result<()> {
    if n == 0 || n > MAX_DIM {
        return Err(Error::Config(format!(
            "reduced dimension must be in 1..={MAX_DIM}"
        )));
    }
    if basis.dim < n {
        return Err(Error::Config(format!(
            "basis has {} elements, {n} requested",
            basis.dim
        )));
    }
    if (model.tau - basis.tau).abs() > 1e-12 * model.tau.max(1.0) {
        return Err(Error::Config("model and basis delays differ".into()));
    }
    Ok(())
}

/// The N-dimensional GK reduction with zero initial state.
///
/// F is expanded through the three functionals x = sum xi_n,
/// y = sum xi_n K_n(-1) and z = tau xi_0 - tau sum_{n>=1} xi_n.
pub fn build_gk(model: &DdeModel, basis: &KoornwinderBasis, n: usize) -> Result<ReducedSystem> {
    let linear = gk_matrix(model, basis, n)?;
    let tau = basis.tau;
    let wx = vec![1.0; n];
    let wy: Vec<f64> = basis.left_values[..n].to_vec();
    let wz: Vec<f64> = (0..n).map(|k| if k == 0 { tau } else { -tau }).collect();
    let scale: Vec<f64> = basis.norms_sq[..n].iter().map(|v| 1.0 / v).collect();
    let nonlinear = match model.f.quadratic() {
        Some(c) => {
            let w = [&wx, &wy, &wz];
            // (p, q, coefficient) for x^2, xy, xz, y^2, yz, z^2.
            let terms = [
                (0, 0, c[0]),
                (0, 1, c[1]),
                (0, 2, c[2]),
                (1, 1, c[3]),
                (1, 2, c[4]),
                (2, 2, c[5]),
            ];
            let mut q = vec![0.0; n * n * n];
            for m in 0..n {
                for k in 0..n {
                    let base: f64 = terms
                        .iter()
                        .map(|&(p, r, cf)| cf * 0.5 * (w[p][m] * w[r][k] + w[r][m] * w[p][k]))
                        .sum();
                    for j in 0..n {
                        q[(j * n + m) * n + k] = scale[j] * base;
                    }
                }
            }
            NonlinearTerm::Quadratic(q)
        }
        None => match &model.f {
            crate::dde::Nonlinearity::Custom(f) => NonlinearTerm::Functional {
                f: Arc::clone(f),
                wx: wx.clone(),
                wy,
                wz,
                scale: scale.clone(),
            },
            _ => unreachable!(),
        },
    };
    Ok(ReducedSystem {
        dim: n,
        linear,
        nonlinear,
        control_inj: scale,
        output_weights: wx,
        init: vec![0.0; n],
    })
}

/// RK4 integration of the reduced system from its initial state.
///
/// Samples fall on multiples of h, with a final partial step onto t_final.
pub fn integrate_reduced(
    sys: &ReducedSystem,
    u: &ControlSignal,
    t_final: f64,
    h: f64,
) -> Result<Trajectory> {
    if !(h > 0.0 && t_final > 0.0) {
        return Err(Error::Config("step and horizon must be positive".into()));
    }
    let ratio = t_final / h;
    let steps = if (ratio - ratio.round()).abs() < 1e-9 {
        ratio.round() as usize
    } else {
        ratio.ceil() as usize
    };
    let n = sys.dim;
    let mut xi = sys.init.clone();
    let mut times = vec![0.0];
    let mut states = vec![xi.clone()];
    let mut output = vec![sys.output(&xi)];
    let mut control = vec![u.eval(0.0)];
    for k in 0..steps {
        let t = k as f64 * h;
        let t1 = if k + 1 == steps {
            t_final
        } else {
            (k + 1) as f64 * h
        };
        let hh = t1 - t;
        let axpy = |x: &[f64], s: f64, d: &[f64]| -> Vec<f64> {
            x.iter().zip(d).map(|(a, b)| a + s * b).collect()
        };
        let um = u.eval(t + 0.5 * hh);
        let k1 = sys.rhs(&xi, u.eval(t));
        let k2 = sys.rhs(&axpy(&xi, 0.5 * hh, &k1), um);
        let k3 = sys.rhs(&axpy(&xi, 0.5 * hh, &k2), um);
        let k4 = sys.rhs(&axpy(&xi, hh, &k3), u.eval(t1));
        for i in 0..n {
            xi[i] += hh / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if xi.iter().any(|v| !v.is_finite() || v.abs() > 1e6) {
            return Err(Error::BlowUp { t: t1 });
        }
        times.push(t1);
        output.push(sys.output(&xi));
        states.push(xi.clone());
        control.push(u.eval(t1));
    }
    Ok(Trajectory {
        times,
        states,
        output,
        delayed: Vec::new(),
        control,
        tail_history: None,
        dense: None,
    })
}

/// Eigenpairs of the linear part, ordered by real part then imaginary part
/// (both descending). Fails when the eigenvector matrix is ill-conditioned.
pub fn eigendecompose(sys: &ReducedSystem) -> Result<EigenPairs> {
    let e = linalg::eigen_pairs(&sys.linear)?;
    if e.condition > 1e8 {
        return Err(Error::Conditioning(e.condition));
    }
    Ok(e)
}

/// Real 2D system from the leading conjugate eigenpair, with the left
/// eigenvector normalized to unit norm and its largest entry real positive.
pub fn eigen_project_2d(sys: &ReducedSystem) -> Result<ReducedSystem> {
    eigen_project_2d_scaled(sys, C64::new(1.0, 0.0))
}

/// As [`eigen_project_2d`] with the right eigenvector multiplied by `s` (and
/// the left one divided by it). The input-output map does not depend on `s`.
pub fn eigen_project_2d_scaled(sys: &ReducedSystem, s: C64) -> Result<ReducedSystem> {
    let q = sys.quadratic().ok_or_else(|| {
        Error::Unsupported("eigen-projection needs a quadratic nonlinearity".into())
    })?;
    if s.norm() == 0.0 {
        return Err(Error::Projection(
            "eigenvector scale must be nonzero".into(),
        ));
    }
    let e = eigendecompose(sys)?;
    let lam = e.values[0];
    if lam.im.abs() <= 1e-12 * lam.norm().max(1.0) {
        return Err(Error::Projection(format!(
            "leading eigenvalue {lam} is real"
        )));
    }
    let n = sys.dim;
    let mut l = e.left[0].clone();
    let mut r = e.right[0].clone();
    let big = l
        .iter()
        .cloned()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap();
    let norm = l.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let fix = big / big.norm() * norm;
    for v in l.iter_mut() {
        *v /= fix * s;
    }
    for v in r.iter_mut() {
        *v *= fix * s;
    }

    let dotc = |w: &[f64]| -> C64 { l.iter().zip(w).map(|(a, b)| a * *b).sum() };
    let alpha = dotc(&sys.control_inj);
    let z0 = dotc(&sys.init);
    let sum_r: C64 = sys.output_weights.iter().zip(&r).map(|(w, v)| v * *w).sum();
    // xi = 2 Re(r z) = e1 eta1 + e2 eta2 with z = eta1 + i eta2.
    let e1: Vec<f64> = r.iter().map(|v| 2.0 * v.re).collect();
    let e2: Vec<f64> = r.iter().map(|v| -2.0 * v.im).collect();
    let basis = [&e1, &e2];
    let mut q2 = vec![0.0; 8];
    for a in 0..2 {
        for b in 0..2 {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..n {
                let mut g = 0.0;
                for m in 0..n {
                    let row = &q[(j * n + m) * n..(j * n + m + 1) * n];
                    let inner: f64 = row.iter().zip(basis[b].iter()).map(|(x, y)| x * y).sum();
                    g += basis[a][m] * inner;
                }
                acc += l[j] * g;
            }
            q2[a * 2 + b] = acc.re;
            q2[4 + a * 2 + b] = acc.im;
        }
    }
    let linear = DMatrix::from_row_slice(2, 2, &[lam.re, -lam.im, lam.im, lam.re]);
    ReducedSystem::new(
        linear,
        q2,
        vec![alpha.re, alpha.im],
        vec![2.0 * sum_r.re, -2.0 * sum_r.im],
        vec![z0.re, z0.im],
    )
}
