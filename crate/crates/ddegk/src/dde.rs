//! Scalar delay differential equations
//!
//!   m'(t) = a m(t) + b m(t - tau) + c z(t) + F(m(t), m(t - tau), z(t)) + u(t),
//!   z(t)  = int_{t - tau}^{t} m(s) ds,
//!
//! integrated by the method of steps, plus characteristic roots, attractor
//! snippets and Hopf sweeps.

use std::sync::Arc;

use nalgebra::Complex;

use crate::basis::HistorySegment;
use crate::error::{Error, Result};
use crate::interp::{self, Interp};
use crate::par::{self, Exec};
use crate::quad;

const BLOW_UP: f64 = 1e6;

/// Scalar callback for non-quadratic nonlinearities.
pub type ScalarFn3 = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// F(x, y, z) with x = m(t), y = m(t - tau), z = int_{t-tau}^t m.
#[derive(Clone)]
pub enum Nonlinearity {
    /// Coefficients of x^2, xy, xz, y^2, yz, z^2.
    Quadratic([f64; 6]),
    Custom(ScalarFn3),
}

impl Nonlinearity {
    /// F = -x y.
    pub fn wright() -> Self {
        Nonlinearity::Quadratic([0.0, -1.0, 0.0, 0.0, 0.0, 0.0])
    }

    pub fn zero() -> Self {
        Nonlinearity::Quadratic([0.0; 6])
    }

    pub fn eval(&self, x: f64, y: f64, z: f64) -> f64 {
        match self {
            Nonlinearity::Quadratic(c) => {
                c[0] * x * x
                    + c[1] * x * y
                    + c[2] * x * z
                    + c[3] * y * y
                    + c[4] * y * z
                    + c[5] * z * z
            }
            Nonlinearity::Custom(f) => f(x, y, z),
        }
    }

    pub fn quadratic(&self) -> Option<&[f64; 6]> {
        match self {
            Nonlinearity::Quadratic(c) => Some(c),
            Nonlinearity::Custom(_) => None,
        }
    }
}

impl std::fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Nonlinearity::Quadratic(c) => f.debug_tuple("Quadratic").field(c).finish(),
            Nonlinearity::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DdeModel {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub tau: f64,
    pub f: Nonlinearity,
}

impl DdeModel {
    pub fn new(a: f64, b: f64, c: f64, tau: f64, f: Nonlinearity) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Config(format!("delay must be positive, got {tau}")));
        }
        if ![a, b, c].iter().all(|v| v.is_finite()) {
            return Err(Error::Config("linear coefficients must be finite".into()));
        }
        if f.eval(0.0, 0.0, 0.0) != 0.0 {
            return Err(Error::Config(
                "nonlinearity must vanish at the origin".into(),
            ));
        }
        Ok(Self { a, b, c, tau, f })
    }

    /// m' = -m(t - tau)(1 + m(t)).
    pub fn wright(tau: f64) -> Result<Self> {
        Self::new(0.0, -1.0, 0.0, tau, Nonlinearity::wright())
    }

    /// Same linear part with F = 0.
    pub fn linear_part(&self) -> Self {
        Self {
            f: Nonlinearity::zero(),
            ..self.clone()
        }
    }

    fn rhs(&self, x: f64, y: f64, z: f64, u: f64) -> f64 {
        self.a * x + self.b * y + self.c * z + self.f.eval(x, y, z) + u
    }
}

/// Time-dependent scalar callback used for closed-form controls.
pub type ScalarFn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Scalar control u(t) on [0, T].
#[derive(Clone)]
pub enum ControlSignal {
    Sampled {
        times: Vec<f64>,
        values: Vec<f64>,
        interp: Interp,
    },
    Function {
        horizon: f64,
        f: ScalarFn1,
    },
}

impl std::fmt::Debug for ControlSignal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ControlSignal::Sampled { times, interp, .. } => f
                .debug_struct("Sampled")
                .field("samples", &times.len())
                .field("interp", interp)
                .finish(),
            ControlSignal::Function { horizon, .. } => f
                .debug_struct("Function")
                .field("horizon", horizon)
                .finish(),
        }
    }
}

impl ControlSignal {
    pub fn sampled(times: Vec<f64>, values: Vec<f64>, interp: Interp) -> Result<Self> {
        if times.len() < 2 || times.len() != values.len() {
            return Err(Error::Config(
                "control needs two or more matched samples".into(),
            ));
        }
        if times[0] != 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(
                "control times must start at 0 and increase".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("control values must be finite".into()));
        }
        Ok(ControlSignal::Sampled {
            times,
            values,
            interp,
        })
    }

    pub fn zero(horizon: f64) -> Self {
        ControlSignal::Sampled {
            times: vec![0.0, horizon],
            values: vec![0.0, 0.0],
            interp: Interp::Linear,
        }
    }

    pub fn function<F: Fn(f64) -> f64 + Send + Sync + 'static>(horizon: f64, f: F) -> Self {
        ControlSignal::Function {
            horizon,
            f: Arc::new(f),
        }
    }

    pub fn horizon(&self) -> f64 {
        match self {
            ControlSignal::Sampled { times, .. } => *times.last().unwrap(),
            ControlSignal::Function { horizon, .. } => *horizon,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            ControlSignal::Sampled {
                times,
                values,
                interp,
            } => interp::eval(times, values, *interp, t).0,
            ControlSignal::Function { f, .. } => f(t),
        }
    }

    /// A copy scaled by `s` and shifted by `s2 * other`.
    pub fn axpy(&self, s: f64, s2: f64, other: &ControlSignal) -> ControlSignal {
        let a = self.clone();
        let b = other.clone();
        ControlSignal::function(self.horizon(), move |t| s * a.eval(t) + s2 * b.eval(t))
    }
}

// Uniformly stepped samples of m with slopes, for cubic Hermite dense output.
#[derive(Debug, Clone)]
pub(crate) struct DenseRecord {
    h: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
    // Present when the run ends with a partial step.
    tail: Option<(f64, f64, f64)>,
    past: HistorySegment,
}

fn hermite(h: f64, y0: f64, y1: f64, d0: f64, d1: f64, s: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0
        + (s3 - 2.0 * s2 + s) * h * d0
        + (-2.0 * s3 + 3.0 * s2) * y1
        + (s3 - s2) * h * d1
}

impl DenseRecord {
    fn last_time(&self) -> f64 {
        match self.tail {
            Some((t, _, _)) => t,
            None => (self.values.len() - 1) as f64 * self.h,
        }
    }

    // m at time q; q < 0 reads the initial history segment.
    fn eval(&self, q: f64) -> f64 {
        if q < 0.0 {
            return self.past.eval(q);
        }
        let n = self.values.len() - 1;
        let grid_end = n as f64 * self.h;
        if q > grid_end {
            if let Some((t1, y1, d1)) = self.tail {
                let hh = t1 - grid_end;
                let s = ((q - grid_end) / hh).min(1.0);
                return hermite(hh, self.values[n], y1, self.slopes[n], d1, s);
            }
        }
        let x = q / self.h;
        let k = x.floor() as usize;
        if k >= n {
            return self.values[n];
        }
        let s = x - k as f64;
        if s == 0.0 {
            return self.values[k];
        }
        hermite(
            self.h,
            self.values[k],
            self.values[k + 1],
            self.slopes[k],
            self.slopes[k + 1],
            s,
        )
    }
}

/// Time-stamped states with the scalar output m(t).
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// One row per time: [m] for DDE runs, xi for reduced runs.
    pub states: Vec<Vec<f64>>,
    /// m(t), or d . xi(t) for reduced runs.
    pub output: Vec<f64>,
    /// m(t - tau); empty for reduced runs.
    pub delayed: Vec<f64>,
    /// u(t) at the recorded times.
    pub control: Vec<f64>,
    /// Final segment m_T; DDE runs only.
    pub tail_history: Option<HistorySegment>,
    pub(crate) dense: Option<DenseRecord>,
}

impl Trajectory {
    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// History segment m_t on a uniform grid of the integration step.
    /// Available for DDE runs at 0 <= t <= T.
    pub fn history_at(&self, t: f64) -> Result<HistorySegment> {
        let d = self
            .dense
            .as_ref()
            .ok_or_else(|| Error::Config("trajectory carries no history record".into()))?;
        if t < 0.0 || t > d.last_time() + 1e-12 {
            return Err(Error::Domain(format!(
                "t = {t} outside the integrated range"
            )));
        }
        let tau = d.past.tau();
        let n = (tau / d.h).round() as usize;
        let theta: Vec<f64> = (0..=n)
            .map(|k| if k == n { 0.0 } else { -tau + k as f64 * d.h })
            .collect();
        let mut values: Vec<f64> = theta.iter().map(|&th| d.eval(t + th)).collect();
        let state = if t == 0.0 { d.past.state } else { d.eval(t) };
        if t == 0.0 {
            values[n] = *d.past.values.last().unwrap();
        }
        HistorySegment::new(theta, values, state, Interp::Cubic)
    }

    /// Dense m(t) for DDE runs, -tau <= t <= T.
    pub fn m_at(&self, t: f64) -> Option<f64> {
        self.dense.as_ref().map(|d| d.eval(t))
    }

    /// CSV with columns t, m, m_delayed, u (DDE) or t, output, xi_*, u (reduced).
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let dde = !self.delayed.is_empty();
        if dde {
            out.push_str("t,m,m_delayed,u\n");
        } else {
            out.push_str("t,output");
            for j in 0..self.states.first().map_or(0, |s| s.len()) {
                out.push_str(&format!(",xi_{j}"));
            }
            out.push_str(",u\n");
        }
        for i in 0..self.times.len() {
            if dde {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    self.times[i], self.output[i], self.delayed[i], self.control[i]
                ));
            } else {
                out.push_str(&format!("{},{}", self.times[i], self.output[i]));
                for v in &self.states[i] {
                    out.push_str(&format!(",{v}"));
                }
                out.push_str(&format!(",{}\n", self.control[i]));
            }
        }
        out
    }
}

/// Integrates the DDE from `phi` over [0, t_final] with step `h`.
///
/// The step must divide tau. Samples fall on multiples of h; a final partial
/// step lands exactly on t_final. Delayed values use cubic Hermite dense
/// output (the history interpolant before t = 0). The distributed term is
/// carried as an extra state with z' = m(t) - m(t - tau), started from a
/// composite Simpson sum over the history.
pub fn integrate_dde(
    model: &DdeModel,
    phi: &HistorySegment,
    u: &ControlSignal,
    t_final: f64,
    h: f64,
) -> Result<Trajectory> {
    let tau = model.tau;
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::Config(format!(
            "horizon must be positive, got {t_final}"
        )));
    }
    if !(h > 0.0) {
        return Err(Error::Config(format!("step must be positive, got {h}")));
    }
    let ratio = tau / h;
    let n_tau = ratio.round();
    if n_tau < 1.0 || (n_tau * h - tau).abs() > 1e-12 * tau.max(1.0) {
        return Err(Error::Config(format!(
            "step {h} does not divide the delay {tau}"
        )));
    }
    if (phi.tau() - tau).abs() > 1e-12 * tau.max(1.0) {
        return Err(Error::Config(format!(
            "history spans {} but the delay is {tau}",
            phi.tau()
        )));
    }
    let n_tau = n_tau as usize;
    let h = tau / n_tau as f64;

    let hist: Vec<f64> = (0..=n_tau)
        .map(|k| {
            if k == n_tau {
                *phi.values.last().unwrap()
            } else {
                phi.eval(-tau + k as f64 * h)
            }
        })
        .collect();
    let mut z = quad::simpson_uniform(h, &hist);

    // A horizon within 1e-9 steps of a grid point is treated as on-grid.
    let ratio_t = t_final / h;
    let (full, partial) = if (ratio_t - ratio_t.round()).abs() < 1e-9 {
        (ratio_t.round() as usize, false)
    } else {
        (ratio_t.floor() as usize, true)
    };

    let mut rec = DenseRecord {
        h,
        values: Vec::with_capacity(full + 1),
        slopes: Vec::with_capacity(full + 1),
        tail: None,
        past: phi.clone(),
    };
    let mut times = Vec::with_capacity(full + 2);
    let mut output = Vec::with_capacity(full + 2);
    let mut delayed = Vec::with_capacity(full + 2);
    let mut control = Vec::with_capacity(full + 2);

    let mut x = phi.state;
    let y0 = rec.eval(-tau);
    let u0 = u.eval(0.0);
    rec.values.push(x);
    rec.slopes.push(model.rhs(x, y0, z, u0));
    times.push(0.0);
    output.push(x);
    delayed.push(y0);
    control.push(u0);

    let steps = full + usize::from(partial);
    for k in 0..steps {
        let t = k as f64 * h;
        let hh = if k < full { h } else { t_final - t };
        let y1 = rec.eval(t - tau);
        let ym = rec.eval(t + 0.5 * hh - tau);
        let ye = rec.eval(t + hh - tau);
        let (ua, um, ue) = (u.eval(t), u.eval(t + 0.5 * hh), u.eval(t + hh));

        let f1 = model.rhs(x, y1, z, ua);
        let g1 = x - y1;
        let (x2, z2) = (x + 0.5 * hh * f1, z + 0.5 * hh * g1);
        let f2 = model.rhs(x2, ym, z2, um);
        let g2 = x2 - ym;
        let (x3, z3) = (x + 0.5 * hh * f2, z + 0.5 * hh * g2);
        let f3 = model.rhs(x3, ym, z3, um);
        let g3 = x3 - ym;
        let (x4, z4) = (x + hh * f3, z + hh * g3);
        let f4 = model.rhs(x4, ye, z4, ue);
        let g4 = x4 - ye;
        x += hh / 6.0 * (f1 + 2.0 * f2 + 2.0 * f3 + f4);
        z += hh / 6.0 * (g1 + 2.0 * g2 + 2.0 * g3 + g4);

        let t1 = if k + 1 == steps {
            t_final
        } else {
            (k + 1) as f64 * h
        };
        if !x.is_finite() || x.abs() > BLOW_UP {
            return Err(Error::BlowUp { t: t1 });
        }
        let slope = model.rhs(x, ye, z, ue);
        if k < full {
            rec.values.push(x);
            rec.slopes.push(slope);
        } else {
            rec.tail = Some((t1, x, slope));
        }
        times.push(t1);
        output.push(x);
        delayed.push(ye);
        control.push(ue);
    }

    let tail_theta: Vec<f64> = (0..=n_tau)
        .map(|k| if k == n_tau { 0.0 } else { -tau + k as f64 * h })
        .collect();
    let tail_values: Vec<f64> = tail_theta
        .iter()
        .map(|&th| rec.eval(t_final + th))
        .collect();
    let tail = HistorySegment::new(tail_theta, tail_values, x, Interp::Cubic)?;

    Ok(Trajectory {
        states: output.iter().map(|&m| vec![m]).collect(),
        times,
        output,
        delayed,
        control,
        tail_history: Some(tail),
        dense: Some(rec),
    })
}

fn char_fn(model: &DdeModel, beta: Complex<f64>) -> (Complex<f64>, Complex<f64>) {
    let tau = model.tau;
    let e = (-beta * tau).exp();
    // q(beta) = (1 - e^{-beta tau}) / beta, with its series near zero.
    let (q, dq) = if beta.norm() < 1e-6 {
        (
            Complex::new(tau, 0.0) - beta * (tau * tau / 2.0),
            Complex::new(-tau * tau / 2.0, 0.0) + beta * (tau * tau * tau / 3.0),
        )
    } else {
        let q = (Complex::new(1.0, 0.0) - e) / beta;
        (q, (e * tau - q) / beta)
    };
    let g = beta - model.a - e * model.b - q * model.c;
    let dg = Complex::new(1.0, 0.0) + e * (model.b * tau) - dq * model.c;
    (g, dg)
}

/// Residual |g(beta)| of the linearized characteristic equation.
pub fn characteristic_residual(model: &DdeModel, beta: Complex<f64>) -> f64 {
    char_fn(model, beta).0.norm()
}

/// Newton iteration on g(beta) = beta - a - b e^{-beta tau} - c (1 - e^{-beta tau}) / beta.
pub fn characteristic_root(model: &DdeModel, guess: Complex<f64>) -> Result<Complex<f64>> {
    let mut beta = guess;
    for _ in 0..100 {
        let (g, dg) = char_fn(model, beta);
        if g.norm() < 1e-12 {
            // One polishing step keeps the residual at round-off.
            let step = g / dg;
            if step.norm().is_finite() {
                let cand = beta - step;
                if char_fn(model, cand).0.norm() <= g.norm() {
                    return Ok(cand);
                }
            }
            return Ok(beta);
        }
        if dg.norm() == 0.0 {
            break;
        }
        beta -= g / dg;
        if !beta.re.is_finite() || !beta.im.is_finite() {
            break;
        }
    }
    Err(Error::RootFinding {
        re: beta.re,
        im: beta.im,
    })
}

// Extremum of the cubic Hermite interpolant on [0, 1], if the slope changes sign.
fn hermite_extremum(h: f64, y0: f64, y1: f64, d0: f64, d1: f64) -> Option<(f64, f64)> {
    // p'(s) / h as a quadratic A s^2 + B s + C.
    let delta = (y1 - y0) / h;
    let a = 3.0 * (d0 + d1 - 2.0 * delta);
    let b = 2.0 * (3.0 * delta - 2.0 * d0 - d1);
    let c = d0;
    let roots: Vec<f64> = if a.abs() < 1e-300 {
        if b == 0.0 {
            vec![]
        } else {
            vec![-c / b]
        }
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            vec![]
        } else {
            let sq = disc.sqrt();
            let q = -0.5 * (b + b.signum() * sq);
            let mut r = vec![q / a];
            if q != 0.0 {
                r.push(c / q);
            }
            r
        }
    };
    roots
        .into_iter()
        .filter(|s| (0.0..=1.0).contains(s))
        .map(|s| (s, hermite(h, y0, y1, d0, d1, s)))
        .next()
}

/// Refined local extremum near grid index i of a uniformly stepped record.
fn refine(h: f64, v: &[f64], d: &[f64], i: usize) -> (f64, f64) {
    // The slope changes sign in [i-1, i] or [i, i+1].
    if d[i] == 0.0 {
        return (i as f64 * h, v[i]);
    }
    let (lo, s_val) = if d[i - 1] * d[i] < 0.0 {
        (i - 1, hermite_extremum(h, v[i - 1], v[i], d[i - 1], d[i]))
    } else {
        (i, hermite_extremum(h, v[i], v[i + 1], d[i], d[i + 1]))
    };
    match s_val {
        Some((s, y)) => ((lo as f64 + s) * h, y),
        None => (i as f64 * h, v[i]),
    }
}

/// Refined maxima (`max = true`) or minima as (time, value) pairs.
fn extrema(h: f64, v: &[f64], d: &[f64], from: usize, max: bool) -> Vec<(usize, f64, f64)> {
    let mut out = Vec::new();
    for i in from.max(1)..v.len().saturating_sub(1) {
        let is_ext = if max {
            v[i] >= v[i - 1] && v[i] > v[i + 1]
        } else {
            v[i] <= v[i - 1] && v[i] < v[i + 1]
        };
        if is_ext {
            let (t, y) = refine(h, v, d, i);
            out.push((i, t, y));
        }
    }
    out
}

/// Settling parameters for attractor runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettleOptions {
    /// Constant initial history value.
    pub init_value: f64,
    /// Longest integration before giving up.
    pub max_time: f64,
    /// Successive refined maxima must agree to this tolerance.
    pub tol: f64,
    /// Cycles with peak-to-peak amplitude below this count as decayed.
    pub min_amplitude: f64,
}

impl Default for SettleOptions {
    fn default() -> Self {
        Self {
            init_value: 0.05,
            max_time: 5000.0,
            tol: 1e-6,
            min_amplitude: 1e-3,
        }
    }
}

/// Initial datum cut from a settled periodic orbit.
#[derive(Debug, Clone)]
pub struct Snippet {
    pub history: HistorySegment,
    /// Time at which successive maxima first agreed within tolerance.
    pub settled_at: f64,
    /// Orbit time t*; the snippet ends at t* - T.
    pub t_star: f64,
    /// Peak and trough of the settled cycle.
    pub peak: f64,
    pub trough: f64,
}

/// Integrates from a constant history until the cycle settles, then cuts the
/// history window [t* - T - tau, t* - T] with t* at a cycle trough, so the
/// uncontrolled continuation over [0, T] ends at a trough.
pub fn settle_and_snip(
    model: &DdeModel,
    t_control: f64,
    h: f64,
    opts: &SettleOptions,
) -> Result<Snippet> {
    let tau = model.tau;
    let phi = HistorySegment::constant(tau, opts.init_value)?;
    let traj = integrate_dde(
        model,
        &phi,
        &ControlSignal::zero(opts.max_time),
        opts.max_time,
        h,
    )?;
    let rec = traj.dense.as_ref().unwrap();
    let hs = rec.h;
    let (v, d) = (&rec.values, &rec.slopes);

    let maxima = extrema(hs, v, d, 0, true);
    let minima = extrema(hs, v, d, 0, false);
    let settled = maxima
        .windows(2)
        .find(|w| (w[1].2 - w[0].2).abs() < opts.tol)
        .map(|w| w[1]);
    let Some((_, t_settle, peak)) = settled else {
        return Err(Error::NonConvergence(format!(
            "cycle maxima did not settle within t = {}",
            opts.max_time
        )));
    };
    let trough = minima
        .iter()
        .find(|m| m.1 > t_settle)
        .map(|m| m.2)
        .unwrap_or(f64::NAN);
    if !(peak - trough > opts.min_amplitude) {
        return Err(Error::NonConvergence(
            "solution decays; no attracting periodic orbit".into(),
        ));
    }
    let earliest = t_settle + t_control + tau;
    let Some(&(i_star, _, _)) = minima.iter().find(|m| m.0 as f64 * hs >= earliest) else {
        return Err(Error::NonConvergence(
            "integration too short to place the snippet after settling".into(),
        ));
    };
    let t_star = i_star as f64 * hs;
    let end = t_star - t_control;
    let n_tau = (tau / hs).round() as usize;
    let theta: Vec<f64> = (0..=n_tau)
        .map(|k| {
            if k == n_tau {
                0.0
            } else {
                -tau + k as f64 * hs
            }
        })
        .collect();
    let values: Vec<f64> = theta.iter().map(|&th| rec.eval(end + th)).collect();
    let state = *values.last().unwrap();
    Ok(Snippet {
        history: HistorySegment::new(theta, values, state, Interp::Cubic)?,
        settled_at: t_settle,
        t_star,
        peak,
        trough,
    })
}

/// One point of a Hopf sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct HopfRecord {
    pub tau: f64,
    /// Peak-to-peak amplitude of the last full cycle.
    pub amplitude: f64,
    /// Mean spacing of the last refined maxima; NaN when no cycle is found.
    pub period: f64,
    /// (m(t), m(t - tau)) over the last cycle.
    pub samples: Vec<(f64, f64)>,
}

/// Sweep settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopfOptions {
    pub steps_per_tau: usize,
    pub t_total: f64,
    pub init_value: f64,
}

impl Default for HopfOptions {
    fn default() -> Self {
        Self {
            steps_per_tau: 200,
            t_total: 1000.0,
            init_value: 0.05,
        }
    }
}

/// Long uncontrolled runs of `family(tau)` for each tau, one task per value.
pub fn hopf_sweep<M>(
    family: M,
    taus: &[f64],
    opts: &HopfOptions,
    exec: Exec,
) -> Result<Vec<HopfRecord>>
where
    M: Fn(f64) -> Result<DdeModel> + Sync + Send,
{
    for &t in taus {
        if !(t > 0.0 && t <= 2.2) {
            return Err(Error::Config(format!("tau = {t} outside (0, 2.2]")));
        }
    }
    par::map_range(exec, taus.len(), |i| hopf_point(&family(taus[i])?, opts))
        .into_iter()
        .collect()
}

fn hopf_point(model: &DdeModel, opts: &HopfOptions) -> Result<HopfRecord> {
    let tau = model.tau;
    let h = tau / opts.steps_per_tau as f64;
    let phi = HistorySegment::constant(tau, opts.init_value)?;
    let traj = integrate_dde(
        model,
        &phi,
        &ControlSignal::zero(opts.t_total),
        opts.t_total,
        h,
    )?;
    let rec = traj.dense.as_ref().unwrap();
    let (v, d) = (&rec.values, &rec.slopes);
    let start = v.len() / 2;
    let maxima = extrema(rec.h, v, d, start, true);
    let n = (tau / rec.h).round() as usize;
    if maxima.len() < 3 {
        let tail = &v[v.len().saturating_sub(n)..];
        let hi = tail.iter().cloned().fold(f64::MIN, f64::max);
        let lo = tail.iter().cloned().fold(f64::MAX, f64::min);
        return Ok(HopfRecord {
            tau,
            amplitude: hi - lo,
            period: f64::NAN,
            samples: Vec::new(),
        });
    }
    let k = maxima.len();
    let (i0, i1) = (maxima[k - 2].0, maxima[k - 1].0);
    let last: Vec<_> = maxima[k.saturating_sub(6)..].to_vec();
    let period = (last[last.len() - 1].1 - last[0].1) / (last.len() - 1) as f64;
    let mut lo = f64::MAX;
    for (i, t, y) in extrema(rec.h, v, d, i0, false) {
        if i < i1 && t > 0.0 {
            lo = lo.min(y);
        }
    }
    let amplitude = maxima[k - 1].2 - lo;
    let samples = (i0..=i1).map(|i| (v[i], traj.delayed[i])).collect();
    Ok(HopfRecord {
        tau,
        amplitude,
        period,
        samples,
    })
}

/// J = int_0^T [m^2 / 2 + (mu / 2) u^2] dt by composite Simpson on the
/// trajectory grid.
pub fn evaluate_cost(traj: &Trajectory, u: &ControlSignal, mu: f64) -> Result<f64> {
    let t_end = traj.horizon();
    if (u.horizon() - t_end).abs() > 1e-9 * t_end.max(1.0) {
        return Err(Error::Config(format!(
            "control horizon {} differs from trajectory horizon {t_end}",
            u.horizon()
        )));
    }
    let y: Vec<f64> = traj
        .times
        .iter()
        .zip(&traj.output)
        .map(|(&t, &m)| {
            let ut = u.eval(t);
            0.5 * m * m + 0.5 * mu * ut * ut
        })
        .collect();
    Ok(quad::simpson(&traj.times, &y))
}
