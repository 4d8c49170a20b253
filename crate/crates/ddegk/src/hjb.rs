//! Backward HJB solver on a rectangle for two-dimensional reduced systems.
//!
//! v_t + H(eta, grad v) = 0, v(T, .) = 0, with
//!   H(eta, p) = (d . eta)^2 / 2 + <K eta + N(eta), p> - (alpha . p)^2 / (2 mu).
//! In reversed time s = T - t the semi-discrete scheme is
//!   dv/ds = H(eta, (D+ v + D- v) / 2) + sum_i nu_i / 2 (D+_i v - D-_i v),
//! with ENO2 one-sided differences and Heun steps. The feedback law is
//! u = -(alpha . grad v) / mu.

use nalgebra::{DMatrix, DVector};

use crate::dde::{evaluate_cost, ControlSignal, Trajectory};
use crate::error::{Error, Result};
use crate::galerkin::ReducedSystem;
use crate::interp::Interp;
use crate::par::{self, Exec};

/// Ghost-node closure at the edges of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Linear extrapolation: vanishing second derivative; both one-sided
    /// differences at an edge node reduce to the first-order quotient.
    FirstOrder,
    /// Quadratic extrapolation: vanishing third derivative; both one-sided
    /// differences at an edge node equal the second-order one-sided quotient.
    SecondOrder,
}

impl std::str::FromStr for Boundary {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "first-order" => Ok(Boundary::FirstOrder),
            "second-order" => Ok(Boundary::SecondOrder),
            other => Err(format!("unknown boundary closure '{other}'")),
        }
    }
}

impl std::fmt::Display for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Boundary::FirstOrder => "first-order",
            Boundary::SecondOrder => "second-order",
        })
    }
}

/// Space-time grid and scheme constants.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub points: [usize; 2],
    pub h: [f64; 2],
    pub dt: f64,
    pub steps: usize,
    pub t_final: f64,
    pub nu: [f64; 2],
    /// Every `stride`-th time slice is kept (plus t = 0 and t = T).
    pub stride: usize,
    pub boundary: Boundary,
}

impl GridSpec {
    /// Node counts p_i = round((hi_i - lo_i) / h_i) + 1 with the spacing then
    /// recomputed exactly; the step count is ceil(T / dt) with dt = T / steps.
    pub fn new(
        lo: [f64; 2],
        hi: [f64; 2],
        h_nominal: [f64; 2],
        dt_nominal: f64,
        t_final: f64,
        nu: [f64; 2],
        stride: usize,
    ) -> Result<Self> {
        let mut points = [0; 2];
        let mut h = [0.0; 2];
        for i in 0..2 {
            if !(hi[i] > lo[i] && h_nominal[i] > 0.0) {
                return Err(Error::Config(
                    "grid bounds and spacing must be positive".into(),
                ));
            }
            points[i] = ((hi[i] - lo[i]) / h_nominal[i]).round() as usize + 1;
            if points[i] < 4 {
                return Err(Error::Config(
                    "grid needs at least 4 points per axis".into(),
                ));
            }
            h[i] = (hi[i] - lo[i]) / (points[i] - 1) as f64;
        }
        if !(dt_nominal > 0.0 && t_final > 0.0) {
            return Err(Error::Config(
                "time step and horizon must be positive".into(),
            ));
        }
        if !(nu[0] >= 0.0 && nu[1] >= 0.0) {
            return Err(Error::Config(
                "stabilization constants must be nonnegative".into(),
            ));
        }
        if stride == 0 {
            return Err(Error::Config("slice stride must be at least 1".into()));
        }
        let steps = (t_final / dt_nominal - 1e-9).ceil().max(1.0) as usize;
        Ok(Self {
            lo,
            hi,
            points,
            h,
            dt: t_final / steps as f64,
            steps,
            t_final,
            nu,
            stride,
            boundary: Boundary::SecondOrder,
        })
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    /// dt (nu_1 / h_1 + nu_2 / h_2).
    pub fn cfl(&self) -> f64 {
        self.dt * (self.nu[0] / self.h[0] + self.nu[1] / self.h[1])
    }

    pub fn node(&self, k: usize, l: usize) -> [f64; 2] {
        [
            self.lo[0] + k as f64 * self.h[0],
            self.lo[1] + l as f64 * self.h[1],
        ]
    }

    pub fn len(&self) -> usize {
        self.points[0] * self.points[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, eta: [f64; 2]) -> bool {
        (0..2).all(|i| {
            let tol = 1e-12 * (self.hi[i] - self.lo[i]);
            eta[i] >= self.lo[i] - tol && eta[i] <= self.hi[i] + tol
        })
    }
}

/// The Hamiltonian of a 2D reduced system with its coefficients unpacked.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hamiltonian2 {
    pub k: [[f64; 2]; 2],
    /// q[i][a][b]: coefficient of eta_a eta_b in component i.
    pub q: [[[f64; 2]; 2]; 2],
    pub alpha: [f64; 2],
    pub d: [f64; 2],
    pub mu: f64,
}

impl Hamiltonian2 {
    pub fn new(sys: &ReducedSystem, mu: f64) -> Result<Self> {
        if sys.dim != 2 {
            return Err(Error::Unsupported(format!(
                "HJB solver handles 2D systems, got {}",
                sys.dim
            )));
        }
        if sys.quadratic().is_none() {
            return Err(Error::Unsupported(
                "HJB solver needs a quadratic system".into(),
            ));
        }
        if !(mu > 0.0) {
            return Err(Error::Config("mu must be positive".into()));
        }
        let mut q = [[[0.0; 2]; 2]; 2];
        for (i, qi) in q.iter_mut().enumerate() {
            for (a, qa) in qi.iter_mut().enumerate() {
                for (b, v) in qa.iter_mut().enumerate() {
                    *v = sys.q(i, a, b);
                }
            }
        }
        Ok(Self {
            k: [
                [sys.linear[(0, 0)], sys.linear[(0, 1)]],
                [sys.linear[(1, 0)], sys.linear[(1, 1)]],
            ],
            q,
            alpha: [sys.control_inj[0], sys.control_inj[1]],
            d: [sys.output_weights[0], sys.output_weights[1]],
            mu,
        })
    }

    /// K eta + N(eta).
    pub fn drift(&self, e: [f64; 2]) -> [f64; 2] {
        let mut f = [0.0; 2];
        for (i, fi) in f.iter_mut().enumerate() {
            let q = &self.q[i];
            *fi = self.k[i][0] * e[0]
                + self.k[i][1] * e[1]
                + q[0][0] * e[0] * e[0]
                + (q[0][1] + q[1][0]) * e[0] * e[1]
                + q[1][1] * e[1] * e[1];
        }
        f
    }

    /// (d . eta)^2 / 2.
    pub fn running(&self, e: [f64; 2]) -> f64 {
        let m = self.d[0] * e[0] + self.d[1] * e[1];
        0.5 * m * m
    }

    pub fn eval(&self, e: [f64; 2], p: [f64; 2]) -> f64 {
        let f = self.drift(e);
        let ap = self.alpha[0] * p[0] + self.alpha[1] * p[1];
        self.running(e) + f[0] * p[0] + f[1] * p[1] - ap * ap / (2.0 * self.mu)
    }

    /// dH/dp.
    pub fn dp(&self, e: [f64; 2], p: [f64; 2]) -> [f64; 2] {
        let f = self.drift(e);
        let ap = self.alpha[0] * p[0] + self.alpha[1] * p[1];
        [
            f[0] - self.alpha[0] * ap / self.mu,
            f[1] - self.alpha[1] * ap / self.mu,
        ]
    }

    /// Minimizing control -(alpha . p) / mu.
    pub fn control(&self, p: [f64; 2]) -> f64 {
        -(self.alpha[0] * p[0] + self.alpha[1] * p[1]) / self.mu
    }
}

/// H(eta, p) for a 2D reduced system.
pub fn hamiltonian(sys: &ReducedSystem, mu: f64, eta: [f64; 2], p: [f64; 2]) -> Result<f64> {
    Ok(Hamiltonian2::new(sys, mu)?.eval(eta, p))
}

/// H(eta, (p+ + p-) / 2) - sum_i nu_i / 2 (p+_i - p-_i).
pub fn lf_hamiltonian<H: Fn([f64; 2], [f64; 2]) -> f64>(
    h: H,
    eta: [f64; 2],
    p_plus: [f64; 2],
    p_minus: [f64; 2],
    nu: [f64; 2],
) -> f64 {
    let avg = [
        0.5 * (p_plus[0] + p_minus[0]),
        0.5 * (p_plus[1] + p_minus[1]),
    ];
    h(eta, avg) - 0.5 * nu[0] * (p_plus[0] - p_minus[0]) - 0.5 * nu[1] * (p_plus[1] - p_minus[1])
}

#[inline]
fn minmag(a: f64, b: f64) -> f64 {
    if a.abs() <= b.abs() {
        a
    } else {
        b
    }
}

// Five-point window centred on node i with ghost values past the edges.
#[inline]
fn window<F: Fn(usize) -> f64>(get: F, i: usize, p: usize, bc: Boundary) -> [f64; 5] {
    let mut w = [0.0; 5];
    for (slot, wv) in w.iter_mut().enumerate() {
        let idx = i as isize + slot as isize - 2;
        *wv = if idx < 0 {
            let (v0, v1, v2) = (get(0), get(1), get(2));
            ghost(v0, v1, v2, (-idx) as usize, bc)
        } else if idx >= p as isize {
            let (v0, v1, v2) = (get(p - 1), get(p - 2), get(p - 3));
            ghost(v0, v1, v2, (idx - p as isize + 1) as usize, bc)
        } else {
            get(idx as usize)
        };
    }
    w
}

// Extrapolated value m cells beyond the edge node v0 (v1, v2 further inside).
#[inline]
fn ghost(v0: f64, v1: f64, v2: f64, m: usize, bc: Boundary) -> f64 {
    match (bc, m) {
        (Boundary::FirstOrder, 1) => 2.0 * v0 - v1,
        (Boundary::FirstOrder, _) => 3.0 * v0 - 2.0 * v1,
        (Boundary::SecondOrder, 1) => 3.0 * v0 - 3.0 * v1 + v2,
        (Boundary::SecondOrder, _) => 6.0 * v0 - 8.0 * v1 + 3.0 * v2,
    }
}

// (D+, D-) at the centre of a window.
#[inline]
fn eno_pair(w: [f64; 5], h: f64) -> (f64, f64) {
    let dm = (w[0] - 2.0 * w[1] + w[2]) / h;
    let dc = (w[1] - 2.0 * w[2] + w[3]) / h;
    let dp = (w[2] - 2.0 * w[3] + w[4]) / h;
    let plus = (w[3] - w[2]) / h - 0.5 * minmag(dc, dp);
    let minus = (w[2] - w[1]) / h + 0.5 * minmag(dm, dc);
    (plus, minus)
}

/// One-sided ENO2 gradients at every node, row-major with eta_1 as the slow index.
#[derive(Debug, Clone, PartialEq)]
pub struct EnoGradients {
    pub plus: Vec<[f64; 2]>,
    pub minus: Vec<[f64; 2]>,
}

pub fn eno2_gradients(slice: &[f64], grid: &GridSpec) -> Result<EnoGradients> {
    let [p1, p2] = grid.points;
    if p1 < 4 || p2 < 4 {
        return Err(Error::Config(
            "ENO2 needs at least 4 points per axis".into(),
        ));
    }
    if slice.len() != p1 * p2 {
        return Err(Error::Config("slice size does not match the grid".into()));
    }
    let mut plus = Vec::with_capacity(slice.len());
    let mut minus = Vec::with_capacity(slice.len());
    for k in 0..p1 {
        for l in 0..p2 {
            let (a, b) = node_eno(slice, grid, k, l);
            plus.push(a);
            minus.push(b);
        }
    }
    Ok(EnoGradients { plus, minus })
}

#[inline]
fn node_eno(v: &[f64], grid: &GridSpec, k: usize, l: usize) -> ([f64; 2], [f64; 2]) {
    let [p1, p2] = grid.points;
    let w1 = window(|i| v[i * p2 + l], k, p1, grid.boundary);
    let w2 = window(|j| v[k * p2 + j], l, p2, grid.boundary);
    let (a1, b1) = eno_pair(w1, grid.h[0]);
    let (a2, b2) = eno_pair(w2, grid.h[1]);
    ([a1, a2], [b1, b2])
}

/// Largest |dH/dp_i| over the grid nodes and the momentum box
/// [-pmax_1, pmax_1] x [-pmax_2, pmax_2] (corners and centre).
pub fn nu_audit(ham: &Hamiltonian2, grid: &GridSpec, pmax: [f64; 2]) -> [f64; 2] {
    let probes = [
        [0.0, 0.0],
        [pmax[0], pmax[1]],
        [pmax[0], -pmax[1]],
        [-pmax[0], pmax[1]],
        [-pmax[0], -pmax[1]],
    ];
    let mut out = [0.0f64; 2];
    for k in 0..grid.points[0] {
        for l in 0..grid.points[1] {
            let e = grid.node(k, l);
            for p in probes {
                let g = ham.dp(e, p);
                out[0] = out[0].max(g[0].abs());
                out[1] = out[1].max(g[1].abs());
            }
        }
    }
    out
}

/// Stored slices v(t_j, .) of the value function, ascending in time.
#[derive(Debug, Clone)]
pub struct ValueFunction {
    pub grid: GridSpec,
    /// Time-step indices of the stored slices (t = index * dt).
    pub steps: Vec<usize>,
    pub slices: Vec<Vec<f64>>,
}

impl ValueFunction {
    pub fn times(&self) -> Vec<f64> {
        self.steps
            .iter()
            .map(|&j| j as f64 * self.grid.dt)
            .collect()
    }

    /// The t = 0 slice.
    pub fn initial(&self) -> &[f64] {
        &self.slices[0]
    }

    /// Bilinear value of a stored slice at eta.
    pub fn slice_value(&self, slice: usize, eta: [f64; 2]) -> Result<f64> {
        let g = &self.grid;
        if !g.contains(eta) {
            return Err(Error::Domain(format!(
                "({}, {}) outside the grid",
                eta[0], eta[1]
            )));
        }
        let v = &self.slices[slice];
        let (i, fx) = cell(eta[0], g.lo[0], g.h[0], g.points[0]);
        let (j, fy) = cell(eta[1], g.lo[1], g.h[1], g.points[1]);
        let p2 = g.points[1];
        Ok((1.0 - fx) * (1.0 - fy) * v[i * p2 + j]
            + fx * (1.0 - fy) * v[(i + 1) * p2 + j]
            + (1.0 - fx) * fy * v[i * p2 + j + 1]
            + fx * fy * v[(i + 1) * p2 + j + 1])
    }

    /// CSV rows eta1, eta2, v for one stored slice.
    pub fn slice_csv(&self, slice: usize) -> String {
        let g = &self.grid;
        let mut out = String::from("eta1,eta2,v\n");
        for k in 0..g.points[0] {
            for l in 0..g.points[1] {
                let e = g.node(k, l);
                out.push_str(&format!(
                    "{},{},{}\n",
                    e[0],
                    e[1],
                    self.slices[slice][k * g.points[1] + l]
                ));
            }
        }
        out
    }
}

fn cell(x: f64, lo: f64, h: f64, p: usize) -> (usize, f64) {
    let s = (x - lo) / h;
    let i = (s.floor().max(0.0) as usize).min(p - 2);
    (i, (s - i as f64).clamp(0.0, 1.0))
}

/// Marches v backward from v(T) = 0 with Heun steps.
pub fn solve_hjb(
    sys: &ReducedSystem,
    mu: f64,
    grid: &GridSpec,
    exec: Exec,
) -> Result<ValueFunction> {
    let ham = Hamiltonian2::new(sys, mu)?;
    let cfl = grid.cfl();
    if cfl > 1.0 {
        return Err(Error::Cfl(cfl));
    }
    let [p1, p2] = grid.points;
    let n = p1 * p2;
    // Node-wise drift and running cost do not change in time.
    let mut drift = Vec::with_capacity(n);
    let mut run = Vec::with_capacity(n);
    for k in 0..p1 {
        for l in 0..p2 {
            let e = grid.node(k, l);
            drift.push(ham.drift(e));
            run.push(ham.running(e));
        }
    }
    let nu = grid.nu;
    let alpha = ham.alpha;
    let inv2mu = 1.0 / (2.0 * mu);
    let rhs = |v: &[f64], out: &mut [f64]| {
        par::for_each_row(exec, out, p2, |k, row| {
            for (l, o) in row.iter_mut().enumerate() {
                let idx = k * p2 + l;
                let (pp, pm) = node_eno(v, grid, k, l);
                let f = drift[idx];
                let h = |_: [f64; 2], p: [f64; 2]| {
                    let ap = alpha[0] * p[0] + alpha[1] * p[1];
                    -(run[idx] + f[0] * p[0] + f[1] * p[1] - ap * ap * inv2mu)
                };
                // Reversed time: the scheme applies to -H.
                *o = -lf_hamiltonian(h, [0.0; 2], pp, pm, nu);
            }
        });
    };

    let mut v = vec![0.0; n];
    let mut k1 = vec![0.0; n];
    let mut v1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut steps = vec![grid.steps];
    let mut slices = vec![v.clone()];
    let dt = grid.dt;
    for j in (1..=grid.steps).rev() {
        rhs(&v, &mut k1);
        for i in 0..n {
            v1[i] = v[i] + dt * k1[i];
        }
        rhs(&v1, &mut k2);
        for i in 0..n {
            v[i] = 0.5 * (v[i] + v1[i] + dt * k2[i]);
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(grid.steps - j + 1));
        }
        let idx = j - 1;
        if idx % grid.stride == 0 {
            steps.push(idx);
            slices.push(v.clone());
        }
    }
    steps.reverse();
    slices.reverse();
    Ok(ValueFunction {
        grid: grid.clone(),
        steps,
        slices,
    })
}

// Nodal gradient by central differences, one-sided on the outer ring.
fn nodal_gradient(v: &[f64], g: &GridSpec, k: usize, l: usize) -> [f64; 2] {
    let [p1, p2] = g.points;
    let at = |a: usize, b: usize| v[a * p2 + b];
    let g1 = if k == 0 {
        (at(1, l) - at(0, l)) / g.h[0]
    } else if k == p1 - 1 {
        (at(k, l) - at(k - 1, l)) / g.h[0]
    } else {
        (at(k + 1, l) - at(k - 1, l)) / (2.0 * g.h[0])
    };
    let g2 = if l == 0 {
        (at(k, 1) - at(k, 0)) / g.h[1]
    } else if l == p2 - 1 {
        (at(k, l) - at(k, l - 1)) / g.h[1]
    } else {
        (at(k, l + 1) - at(k, l - 1)) / (2.0 * g.h[1])
    };
    [g1, g2]
}

fn slice_gradient(v: &[f64], g: &GridSpec, eta: [f64; 2]) -> [f64; 2] {
    let (i, fx) = cell(eta[0], g.lo[0], g.h[0], g.points[0]);
    let (j, fy) = cell(eta[1], g.lo[1], g.h[1], g.points[1]);
    let c00 = nodal_gradient(v, g, i, j);
    let c10 = nodal_gradient(v, g, i + 1, j);
    let c01 = nodal_gradient(v, g, i, j + 1);
    let c11 = nodal_gradient(v, g, i + 1, j + 1);
    let mut out = [0.0; 2];
    for (d, o) in out.iter_mut().enumerate() {
        *o = (1.0 - fx) * (1.0 - fy) * c00[d]
            + fx * (1.0 - fy) * c10[d]
            + (1.0 - fx) * fy * c01[d]
            + fx * fy * c11[d];
    }
    out
}

/// grad v(t, eta) from stored slices: bilinear in space, linear in time.
pub fn value_gradient(vf: &ValueFunction, t: f64, eta: [f64; 2]) -> Result<[f64; 2]> {
    let g = &vf.grid;
    if !g.contains(eta) {
        return Err(Error::GridExit {
            t,
            eta1: eta[0],
            eta2: eta[1],
        });
    }
    let jf = (t / g.dt).clamp(0.0, g.steps as f64);
    let pos = vf.steps.partition_point(|&s| (s as f64) <= jf);
    let hi = pos.min(vf.steps.len() - 1);
    let lo = pos.saturating_sub(1);
    let g0 = slice_gradient(&vf.slices[lo], g, eta);
    if hi == lo {
        return Ok(g0);
    }
    let (s0, s1) = (vf.steps[lo] as f64, vf.steps[hi] as f64);
    let w = ((jf - s0) / (s1 - s0)).clamp(0.0, 1.0);
    if w == 0.0 {
        return Ok(g0);
    }
    let g1 = slice_gradient(&vf.slices[hi], g, eta);
    Ok([(1.0 - w) * g0[0] + w * g1[0], (1.0 - w) * g0[1] + w * g1[1]])
}

/// u = -(alpha . grad v(t, eta)) / mu.
pub fn feedback_control(
    vf: &ValueFunction,
    sys: &ReducedSystem,
    mu: f64,
    t: f64,
    eta: [f64; 2],
) -> Result<f64> {
    if sys.dim != 2 {
        return Err(Error::Unsupported("feedback needs a 2D system".into()));
    }
    let g = value_gradient(vf, t, eta)?;
    Ok(-(sys.control_inj[0] * g[0] + sys.control_inj[1] * g[1]) / mu)
}

/// Closed-loop run under the synthesized feedback.
#[derive(Debug, Clone)]
pub struct ClosedLoop {
    pub trajectory: Trajectory,
    pub control: ControlSignal,
    /// Reduced cost of the realized control.
    pub cost: f64,
}

/// RK4 on eta' = K eta + N(eta) + alpha u(t, eta) from the system's initial state.
pub fn closed_loop(
    vf: &ValueFunction,
    sys: &ReducedSystem,
    mu: f64,
    h_ode: f64,
) -> Result<ClosedLoop> {
    let ham = Hamiltonian2::new(sys, mu)?;
    let t_final = vf.grid.t_final;
    if !(h_ode > 0.0) {
        return Err(Error::Config("closed-loop step must be positive".into()));
    }
    let ratio = t_final / h_ode;
    let steps = if (ratio - ratio.round()).abs() < 1e-9 {
        ratio.round() as usize
    } else {
        ratio.ceil() as usize
    };
    let field = |t: f64, e: [f64; 2]| -> Result<([f64; 2], f64)> {
        let u = feedback_control(vf, sys, mu, t, e)?;
        let f = ham.drift(e);
        Ok(([f[0] + ham.alpha[0] * u, f[1] + ham.alpha[1] * u], u))
    };
    let mut e = [sys.init[0], sys.init[1]];
    let mut times = vec![0.0];
    let mut states = vec![e.to_vec()];
    let mut output = vec![sys.output(&e)];
    let mut control = vec![field(0.0, e)?.1];
    for k in 0..steps {
        let t = k as f64 * h_ode;
        let t1 = if k + 1 == steps {
            t_final
        } else {
            (k + 1) as f64 * h_ode
        };
        let hh = t1 - t;
        let (k1, _) = field(t, e)?;
        let (k2, _) = field(
            t + 0.5 * hh,
            [e[0] + 0.5 * hh * k1[0], e[1] + 0.5 * hh * k1[1]],
        )?;
        let (k3, _) = field(
            t + 0.5 * hh,
            [e[0] + 0.5 * hh * k2[0], e[1] + 0.5 * hh * k2[1]],
        )?;
        let (k4, _) = field(t1, [e[0] + hh * k3[0], e[1] + hh * k3[1]])?;
        for i in 0..2 {
            e[i] += hh / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let (_, u) = field(t1, e)?;
        times.push(t1);
        states.push(e.to_vec());
        output.push(sys.output(&e));
        control.push(u);
    }
    let signal = ControlSignal::sampled(times.clone(), control.clone(), Interp::Linear)?;
    let trajectory = Trajectory {
        times,
        states,
        output,
        delayed: Vec::new(),
        control,
        tail_history: None,
        dense: None,
    };
    let cost = evaluate_cost(&trajectory, &signal, mu)?;
    Ok(ClosedLoop {
        trajectory,
        control: signal,
        cost,
    })
}

/// Least-squares fit v ~ c20 eta1^2 + c11 eta1 eta2 + c10 eta1 + c02 eta2^2 + c01 eta2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadFit {
    /// (c20, c11, c10, c02, c01).
    pub coeffs: [f64; 5],
    pub rmse: f64,
}

/// Fit of the t = 0 slice over all grid nodes.
pub fn fit_quadratic(vf: &ValueFunction) -> Result<QuadFit> {
    fit_quadratic_slice(&vf.grid, vf.initial())
}

pub fn fit_quadratic_slice(grid: &GridSpec, slice: &[f64]) -> Result<QuadFit> {
    let [p1, p2] = grid.points;
    let n = p1 * p2;
    if slice.len() != n {
        return Err(Error::Config("slice size does not match the grid".into()));
    }
    let a = DMatrix::from_fn(n, 5, |r, c| {
        let e = grid.node(r / p2, r % p2);
        match c {
            0 => e[0] * e[0],
            1 => e[0] * e[1],
            2 => e[0],
            3 => e[1] * e[1],
            _ => e[1],
        }
    });
    let b = DVector::from_column_slice(slice);
    let svd = a.clone().svd(true, true);
    let x = svd
        .solve(&b, 1e-14)
        .map_err(|e| Error::Config(format!("least squares failed: {e}")))?;
    let r = &a * &x - &b;
    let rmse = (r.norm_squared() / n as f64).sqrt();
    Ok(QuadFit {
        coeffs: [x[0], x[1], x[2], x[3], x[4]],
        rmse,
    })
}
