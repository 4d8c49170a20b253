//! Pontryagin boundary-value problems for quadratic-cost control of a
//! reduced system, solved by 3-stage Lobatto IIIA collocation.
//!
//! Running cost (d . xi)^2 / 2 + mu u^2 / 2, free terminal state:
//!   xi' =  M xi + G(xi) + c u,                 xi(0) = init,
//!   p'  = -(M + DG(xi))^T p - (d . xi) d,      p(T)  = 0,
//!   u   = -(c . p) / mu  (clamped when bounds are set).

use nalgebra::DMatrix;

use crate::dde::{ControlSignal, Trajectory};
use crate::error::{Error, Result};
use crate::galerkin::ReducedSystem;
use crate::interp::Interp;
use crate::linalg::BandedMatrix;
use crate::quad;

/// A two-point problem ready for collocation.
#[derive(Debug, Clone)]
pub struct PmpBvp {
    pub sys: ReducedSystem,
    pub mu: f64,
    pub t_final: f64,
    /// Optional admissible interval for u.
    pub bounds: Option<(f64, f64)>,
}

/// Checks the problem data and packages the first-order conditions.
pub fn build_pmp_bvp(sys: &ReducedSystem, mu: f64, t_final: f64) -> Result<PmpBvp> {
    if sys.quadratic().is_none() {
        return Err(Error::Unsupported(
            "first-order conditions need an explicit quadratic nonlinearity".into(),
        ));
    }
    if !(mu > 0.0 && t_final > 0.0) {
        return Err(Error::Config("mu and T must be positive".into()));
    }
    Ok(PmpBvp {
        sys: sys.clone(),
        mu,
        t_final,
        bounds: None,
    })
}

impl PmpBvp {
    pub fn with_bounds(mut self, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::Config("control bounds must satisfy lo < hi".into()));
        }
        self.bounds = Some((lo, hi));
        Ok(self)
    }

    fn control(&self, p: &[f64], mu: f64) -> (f64, bool) {
        let cp: f64 = self.sys.control_inj.iter().zip(p).map(|(a, b)| a * b).sum();
        let u = -cp / mu;
        match self.bounds {
            Some((lo, _)) if u < lo => (lo, false),
            Some((_, hi)) if u > hi => (hi, false),
            _ => (u, true),
        }
    }

    // Right-hand side and Jacobian of y = (xi, p).
    fn field(&self, y: &[f64], mu: f64, jac: Option<&mut DMatrix<f64>>) -> Vec<f64> {
        let sys = &self.sys;
        let n = sys.dim;
        let (xi, p) = y.split_at(n);
        let (u, free) = self.control(p, mu);
        let dg = sys.dg(xi).expect("quadratic system");
        let a = &sys.linear + &dg;
        let out = sys.output(xi);
        let mut f = sys.rhs(xi, u);
        for m in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                s += a[(j, m)] * p[j];
            }
            f.push(-s - out * sys.output_weights[m]);
        }
        if let Some(jm) = jac {
            jm.fill(0.0);
            let c = &sys.control_inj;
            for i in 0..n {
                for k in 0..n {
                    jm[(i, k)] = a[(i, k)];
                    jm[(n + i, n + k)] = -a[(k, i)];
                    if free {
                        jm[(i, n + k)] = -c[i] * c[k] / mu;
                    }
                }
            }
            for m in 0..n {
                for k in 0..n {
                    let mut s = 0.0;
                    for j in 0..n {
                        s += p[j] * sys.q(j, m, k);
                    }
                    jm[(n + m, k)] = -2.0 * s - sys.output_weights[m] * sys.output_weights[k];
                }
            }
        }
        f
    }
}

/// Collocation settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmpOptions {
    /// Number of uniform mesh intervals.
    pub mesh: usize,
    /// Infinity-norm tolerance on the collocation residual.
    pub tol: f64,
    pub max_newton: usize,
    /// First weight of the mu-continuation ladder.
    pub mu_start: f64,
}

impl Default for PmpOptions {
    fn default() -> Self {
        Self {
            mesh: 200,
            tol: 1e-8,
            max_newton: 40,
            mu_start: 5.0,
        }
    }
}

/// Converged open-loop optimal control with state, costate and cost.
#[derive(Debug, Clone)]
pub struct PmpSolution {
    pub control: ControlSignal,
    pub state: Trajectory,
    pub costate: Trajectory,
    /// Reduced cost J_N of the solution.
    pub cost: f64,
    /// Max collocation defect.
    pub residual: f64,
    pub newton_iterations: usize,
}

impl PmpSolution {
    /// CSV: t, u, xi_*, p_*.
    pub fn to_csv(&self) -> String {
        let n = self.state.states[0].len();
        let mut out = String::from("t,u");
        for j in 0..n {
            out.push_str(&format!(",xi_{j}"));
        }
        for j in 0..n {
            out.push_str(&format!(",p_{j}"));
        }
        out.push('\n');
        for i in 0..self.state.times.len() {
            out.push_str(&format!(
                "{},{}",
                self.state.times[i], self.state.control[i]
            ));
            for v in &self.state.states[i] {
                out.push_str(&format!(",{v}"));
            }
            for v in &self.costate.states[i] {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

struct Collocation<'a> {
    bvp: &'a PmpBvp,
    mesh: usize,
    h: f64,
}

impl Collocation<'_> {
    fn n(&self) -> usize {
        2 * self.bvp.sys.dim
    }

    fn residual(&self, y: &[f64], mu: f64) -> Vec<f64> {
        self.assemble(y, mu, None)
    }

    // Residual vector; fills the banded Jacobian when requested.
    fn assemble(&self, y: &[f64], mu: f64, mut jac: Option<&mut BandedMatrix>) -> Vec<f64> {
        let n = self.n();
        let nh = n / 2;
        let h = self.h;
        let blocks = 2 * self.mesh + 1;
        let mut r = vec![0.0; n * blocks];
        let mut fs = Vec::with_capacity(blocks);
        let mut js = Vec::with_capacity(blocks);
        for b in 0..blocks {
            let mut jm = DMatrix::zeros(n, n);
            let f = self
                .bvp
                .field(&y[b * n..(b + 1) * n], mu, jac.as_ref().map(|_| &mut jm));
            fs.push(f);
            js.push(jm);
        }
        for i in 0..nh {
            r[i] = y[i] - self.bvp.sys.init[i];
            if let Some(jb) = jac.as_deref_mut() {
                jb.add(i, i, 1.0);
            }
        }
        for k in 0..self.mesh {
            let (b0, bm, b1) = (2 * k, 2 * k + 1, 2 * k + 2);
            let row0 = nh + 2 * n * k;
            for i in 0..n {
                let y0 = y[b0 * n + i];
                let ym = y[bm * n + i];
                let y1 = y[b1 * n + i];
                r[row0 + i] =
                    ym - y0 - h * (5.0 / 24.0 * fs[b0][i] + fs[bm][i] / 3.0 - fs[b1][i] / 24.0);
                r[row0 + n + i] =
                    y1 - y0 - h * (fs[b0][i] / 6.0 + 2.0 / 3.0 * fs[bm][i] + fs[b1][i] / 6.0);
            }
            if let Some(jb) = jac.as_deref_mut() {
                let weights = [
                    [-5.0 / 24.0, -1.0 / 3.0, 1.0 / 24.0],
                    [-1.0 / 6.0, -2.0 / 3.0, -1.0 / 6.0],
                ];
                let ident = [[-1.0, 1.0, 0.0], [-1.0, 0.0, 1.0]];
                for (eq, w) in weights.iter().enumerate() {
                    for (slot, &blk) in [b0, bm, b1].iter().enumerate() {
                        let jm = &js[blk];
                        for i in 0..n {
                            let row = row0 + eq * n + i;
                            for c in 0..n {
                                let v = h * w[slot] * jm[(i, c)];
                                if v != 0.0 {
                                    jb.add(row, blk * n + c, v);
                                }
                            }
                            if ident[eq][slot] != 0.0 {
                                jb.add(row, blk * n + i, ident[eq][slot]);
                            }
                        }
                    }
                }
            }
        }
        let last = (blocks - 1) * n;
        let row_t = nh + 2 * n * self.mesh;
        for i in 0..nh {
            r[row_t + i] = y[last + nh + i];
            if let Some(jb) = jac.as_deref_mut() {
                jb.add(row_t + i, last + nh + i, 1.0);
            }
        }
        r
    }

    fn newton(&self, y: &mut [f64], mu: f64, opts: &PmpOptions) -> Result<(f64, usize)> {
        let n = self.n();
        let nh = n / 2;
        let band = 5 * nh - 1;
        let mut r = self.residual(y, mu);
        let mut rnorm = inf_norm(&r);
        for it in 0..opts.max_newton {
            if rnorm <= opts.tol {
                return Ok((rnorm, it));
            }
            let mut jb = BandedMatrix::zeros(y.len(), band, band);
            self.assemble(y, mu, Some(&mut jb));
            let mut step: Vec<f64> = r.iter().map(|v| -v).collect();
            jb.solve_in_place(&mut step)?;
            let merit = l2(&r);
            let mut lambda = 1.0;
            loop {
                let trial: Vec<f64> = y.iter().zip(&step).map(|(a, b)| a + lambda * b).collect();
                let rt = self.residual(&trial, mu);
                if l2(&rt) <= (1.0 - 1e-4 * lambda) * merit || inf_norm(&rt) <= opts.tol {
                    y.copy_from_slice(&trial);
                    r = rt;
                    rnorm = inf_norm(&r);
                    break;
                }
                lambda *= 0.5;
                if lambda < 1.0 / 1024.0 {
                    return Err(Error::Solver {
                        residual: rnorm,
                        message: "line search stalled".into(),
                    });
                }
            }
        }
        if rnorm <= opts.tol {
            return Ok((rnorm, opts.max_newton));
        }
        Err(Error::Solver {
            residual: rnorm,
            message: format!("no convergence in {} Newton steps", opts.max_newton),
        })
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Collocation on a uniform mesh with damped Newton. If Newton fails at the
/// target weight, it is retried along mu = mu_start, mu_start / 2, ... down
/// to the target, each solve warm-starting the next.
pub fn solve_bvp(bvp: &PmpBvp, opts: &PmpOptions) -> Result<PmpSolution> {
    if opts.mesh < 20 {
        return Err(Error::Config(
            "collocation mesh needs at least 20 intervals".into(),
        ));
    }
    let col = Collocation {
        bvp,
        mesh: opts.mesh,
        h: bvp.t_final / opts.mesh as f64,
    };
    let n = col.n();
    let nh = n / 2;
    let blocks = 2 * opts.mesh + 1;

    // Zero-control forward sweep with zero costate.
    let mut guess = vec![0.0; n * blocks];
    let mut xi = bvp.sys.init.clone();
    let hh = col.h / 2.0;
    guess[..nh].copy_from_slice(&xi);
    for b in 1..blocks {
        xi = rk4_step(&bvp.sys, &xi, hh);
        if xi.iter().any(|v| !v.is_finite()) {
            xi = vec![0.0; nh];
        }
        guess[b * n..b * n + nh].copy_from_slice(&xi);
    }

    let mut y = guess.clone();
    let outcome = match col.newton(&mut y, bvp.mu, opts) {
        Ok(v) => Ok(v),
        Err(_) => {
            y = guess;
            let mut mu = opts.mu_start.max(bvp.mu);
            let mut total = 0;
            loop {
                let (res, it) = col.newton(&mut y, mu, opts)?;
                total += it;
                if mu == bvp.mu {
                    break Ok((res, total));
                }
                mu = (mu / 2.0).max(bvp.mu);
            }
        }
    };
    let (residual, iters) = outcome?;

    let times: Vec<f64> = (0..blocks).map(|b| b as f64 * hh).collect();
    let mut states = Vec::with_capacity(blocks);
    let mut costates = Vec::with_capacity(blocks);
    let mut controls = Vec::with_capacity(blocks);
    let mut output = Vec::with_capacity(blocks);
    for b in 0..blocks {
        let (x, p) = y[b * n..(b + 1) * n].split_at(nh);
        controls.push(bvp.control(p, bvp.mu).0);
        output.push(bvp.sys.output(x));
        states.push(x.to_vec());
        costates.push(p.to_vec());
    }
    let running: Vec<f64> = output
        .iter()
        .zip(&controls)
        .map(|(m, u)| 0.5 * m * m + 0.5 * bvp.mu * u * u)
        .collect();
    let cost = quad::simpson_uniform(hh, &running);
    let control = ControlSignal::sampled(times.clone(), controls.clone(), Interp::Cubic)?;
    let costate = Trajectory {
        times: times.clone(),
        output: costates.iter().map(|p| bvp.sys.output(p)).collect(),
        states: costates,
        delayed: Vec::new(),
        control: controls.clone(),
        tail_history: None,
        dense: None,
    };
    let state = Trajectory {
        times,
        states,
        output,
        delayed: Vec::new(),
        control: controls,
        tail_history: None,
        dense: None,
    };
    Ok(PmpSolution {
        control,
        state,
        costate,
        cost,
        residual,
        newton_iterations: iters,
    })
}

fn rk4_step(sys: &ReducedSystem, xi: &[f64], h: f64) -> Vec<f64> {
    let axpy =
        |s: f64, d: &[f64]| -> Vec<f64> { xi.iter().zip(d).map(|(a, b)| a + s * b).collect() };
    let k1 = sys.rhs(xi, 0.0);
    let k2 = sys.rhs(&axpy(0.5 * h, &k1), 0.0);
    let k3 = sys.rhs(&axpy(0.5 * h, &k2), 0.0);
    let k4 = sys.rhs(&axpy(h, &k3), 0.0);
    (0..xi.len())
        .map(|i| xi[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Reduced cost J_N and its L^2 gradient mu u + c . p at an arbitrary control.
#[derive(Debug, Clone)]
pub struct CostGradient {
    pub cost: f64,
    pub times: Vec<f64>,
    pub gradient: Vec<f64>,
}

/// Forward RK4 for xi at step h/2 and backward RK4 for the adjoint at step h;
/// `steps` counts the backward steps over [0, T].
pub fn cost_gradient(
    sys: &ReducedSystem,
    u: &ControlSignal,
    mu: f64,
    t_final: f64,
    steps: usize,
) -> Result<CostGradient> {
    if sys.quadratic().is_none() {
        return Err(Error::Unsupported(
            "gradient needs a quadratic system".into(),
        ));
    }
    if steps == 0 {
        return Err(Error::Config("gradient needs at least one step".into()));
    }
    let n = sys.dim;
    let h = t_final / steps as f64;
    let hh = h / 2.0;
    let fine = 2 * steps;
    let mut xs = Vec::with_capacity(fine + 1);
    let mut xi = sys.init.clone();
    xs.push(xi.clone());
    for k in 0..fine {
        let t = k as f64 * hh;
        let axpy = |x: &[f64], s: f64, d: &[f64]| -> Vec<f64> {
            x.iter().zip(d).map(|(a, b)| a + s * b).collect()
        };
        let um = u.eval(t + 0.5 * hh);
        let k1 = sys.rhs(&xi, u.eval(t));
        let k2 = sys.rhs(&axpy(&xi, 0.5 * hh, &k1), um);
        let k3 = sys.rhs(&axpy(&xi, 0.5 * hh, &k2), um);
        let k4 = sys.rhs(&axpy(&xi, hh, &k3), u.eval(t + hh));
        for i in 0..n {
            xi[i] += hh / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if xi.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp { t: t + hh });
        }
        xs.push(xi.clone());
    }
    let times: Vec<f64> = (0..=fine).map(|k| k as f64 * hh).collect();
    let running: Vec<f64> = times
        .iter()
        .zip(&xs)
        .map(|(&t, x)| {
            let m = sys.output(x);
            let v = u.eval(t);
            0.5 * m * m + 0.5 * mu * v * v
        })
        .collect();
    let cost = quad::simpson_uniform(hh, &running);

    let adj = |x: &[f64], p: &[f64]| -> Vec<f64> {
        let a = &sys.linear + sys.dg(x).unwrap();
        let out = sys.output(x);
        (0..n)
            .map(|m| -(0..n).map(|j| a[(j, m)] * p[j]).sum::<f64>() - out * sys.output_weights[m])
            .collect()
    };
    let mut ps = vec![vec![0.0; n]; steps + 1];
    let mut p = vec![0.0; n];
    for k in (0..steps).rev() {
        // From t_{k+1} back to t_k with step -h.
        let (x1, xm, x0) = (&xs[2 * k + 2], &xs[2 * k + 1], &xs[2 * k]);
        let axpy =
            |s: f64, d: &[f64]| -> Vec<f64> { p.iter().zip(d).map(|(a, b)| a + s * b).collect() };
        let k1 = adj(x1, &p);
        let k2 = adj(xm, &axpy(-0.5 * h, &k1));
        let k3 = adj(xm, &axpy(-0.5 * h, &k2));
        let k4 = adj(x0, &axpy(-h, &k3));
        for i in 0..n {
            p[i] -= h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        ps[k] = p.clone();
    }
    let coarse: Vec<f64> = (0..=steps).map(|k| k as f64 * h).collect();
    let gradient = coarse
        .iter()
        .zip(&ps)
        .map(|(&t, p)| {
            let cp: f64 = sys.control_inj.iter().zip(p).map(|(a, b)| a * b).sum();
            mu * u.eval(t) + cp
        })
        .collect();
    Ok(CostGradient {
        cost,
        times: coarse,
        gradient,
    })
}

/// Reduced cost J_N of an arbitrary control, by RK4 at step h and Simpson.
pub fn reduced_cost(
    sys: &ReducedSystem,
    u: &ControlSignal,
    mu: f64,
    t_final: f64,
    h: f64,
) -> Result<f64> {
    let tr = crate::galerkin::integrate_reduced(sys, u, t_final, h)?;
    crate::dde::evaluate_cost(&tr, u, mu)
}
