//! Residual energies, error-bound constants, control comparisons and
//! convergence studies across Galerkin dimensions.

use nalgebra::Complex;

use crate::basis::HistorySegment;
use crate::basis::{project_history, KoornwinderBasis};
use crate::dde::{
    characteristic_root, evaluate_cost, integrate_dde, ControlSignal, DdeModel, Nonlinearity,
    Trajectory,
};
use crate::error::{Error, Result};
use crate::galerkin::{build_gk, eigendecompose};
use crate::par::{self, Exec};
use crate::pmp::{build_pmp_bvp, solve_bvp, PmpOptions};
use crate::quad;

/// Residual of the N-mode projection along a DDE trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorBudget {
    pub n: usize,
    pub m_ref: usize,
    pub times: Vec<f64>,
    /// H-norm of the modes n..m_ref at each sampled time.
    pub residual_h: Vec<f64>,
    /// Graph norm ||x|| + ||A x|| of the same tail.
    pub residual_da: Vec<f64>,
    /// L2-in-time norms of the two series.
    pub l2_h: f64,
    pub l2_da: f64,
}

impl ErrorBudget {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,residual_h,residual_da\n");
        for i in 0..self.times.len() {
            out.push_str(&format!(
                "{},{},{}\n",
                self.times[i], self.residual_h[i], self.residual_da[i]
            ));
        }
        out
    }

    /// Plain-text summary; the bound lines appear when constants are given.
    pub fn summary(&self, constants: Option<(&BoundConstants, f64)>) -> String {
        let mut s = format!(
            "N = {}\nM_ref = {}\nL2 residual (H) = {:.6e}\nL2 residual (graph) = {:.6e}\nmax residual (H) = {:.6e}\n",
            self.n,
            self.m_ref,
            self.l2_h,
            self.l2_da,
            self.residual_h.iter().cloned().fold(0.0, f64::max),
        );
        if let Some((c, t_final)) = constants {
            s.push_str(&format!(
                "f(T) = {:.6e}\nbound = {:.6e}\n",
                f_const(c, t_final),
                theorem_bound(c, t_final, 0.0, self.l2_da)
            ));
        }
        s
    }
}

/// ||A x||_H for x = sum_j zeta_j K_j^tau with j ranging over `range`.
///
/// A x = (a x(0) + b x(-tau) + c int x, d/dtheta x); the derivative part is
/// sum_k beta_k K_k with beta_k = (2 / tau) sum_j zeta_j a_{j,k}, whose H-norm
/// excludes the point mass: <K_k, K_l>_{L2} = delta_kl ||K_k||^2 - 1.
fn generator_norm(
    model: &DdeModel,
    basis: &KoornwinderBasis,
    zeta: &[f64],
    range: std::ops::Range<usize>,
) -> f64 {
    let tau = basis.tau;
    let m = range.end;
    let mut beta = vec![0.0; m];
    for j in range.clone() {
        for (k, b) in beta.iter_mut().enumerate().take(j) {
            *b += 2.0 / tau * zeta[j] * basis.a(j, k);
        }
    }
    let sum: f64 = beta.iter().sum();
    let diag: f64 = beta
        .iter()
        .zip(&basis.norms_sq)
        .map(|(b, n)| b * b * n)
        .sum();
    let l2 = (diag - sum * sum).max(0.0);
    let (mut x0, mut xl, mut xi) = (0.0, 0.0, 0.0);
    for j in range {
        x0 += zeta[j];
        xl += zeta[j] * basis.left_values[j];
        xi += if j == 0 { tau } else { -tau } * zeta[j];
    }
    let state = model.a * x0 + model.b * xl + model.c * xi;
    (l2 + state * state).sqrt()
}

/// Residual energies of the N-mode projection of `traj`, sampled at every
/// `stride`-th recorded time. `basis` must hold at least `m_ref` elements.
pub fn residual_energy(
    traj: &Trajectory,
    model: &DdeModel,
    basis: &KoornwinderBasis,
    n: usize,
    m_ref: usize,
    stride: usize,
) -> Result<ErrorBudget> {
    if m_ref <= n {
        return Err(Error::Config("reference dimension must exceed N".into()));
    }
    if basis.dim < m_ref {
        return Err(Error::Config(format!(
            "basis holds {} elements, need {m_ref}",
            basis.dim
        )));
    }
    if traj.m_at(0.0).is_none() {
        return Err(Error::Config("trajectory carries no history record".into()));
    }
    let stride = stride.max(1);
    let mut idx: Vec<usize> = (0..traj.times.len()).step_by(stride).collect();
    if *idx.last().unwrap() != traj.times.len() - 1 {
        idx.push(traj.times.len() - 1);
    }
    let times: Vec<f64> = idx.iter().map(|&i| traj.times[i]).collect();
    let rows: Vec<Result<(f64, f64)>> = times
        .iter()
        .map(|&t| {
            let zeta = project_history(&traj.history_at(t)?, basis)?;
            let h: f64 = (n..m_ref)
                .map(|j| zeta[j] * zeta[j] * basis.norms_sq[j])
                .sum::<f64>()
                .sqrt();
            Ok((h, h + generator_norm(model, basis, &zeta, n..m_ref)))
        })
        .collect();
    let mut residual_h = Vec::with_capacity(times.len());
    let mut residual_da = Vec::with_capacity(times.len());
    for r in rows {
        let (h, da) = r?;
        residual_h.push(h);
        residual_da.push(da);
    }
    let l2 = |v: &[f64]| -> f64 {
        let sq: Vec<f64> = v.iter().map(|x| x * x).collect();
        quad::simpson(&times, &sq).max(0.0).sqrt()
    };
    Ok(ErrorBudget {
        n,
        m_ref,
        l2_h: l2(&residual_h),
        l2_da: l2(&residual_da),
        times: times.clone(),
        residual_h,
        residual_da,
    })
}

/// Share of the time-integrated H-energy of the m_ref-mode projection carried
/// by the first n modes.
pub fn energy_fraction(
    traj: &Trajectory,
    basis: &KoornwinderBasis,
    n: usize,
    m_ref: usize,
    stride: usize,
) -> Result<f64> {
    if n > m_ref || basis.dim < m_ref {
        return Err(Error::Config("need n <= m_ref <= basis size".into()));
    }
    let stride = stride.max(1);
    let mut idx: Vec<usize> = (0..traj.times.len()).step_by(stride).collect();
    if *idx.last().unwrap() != traj.times.len() - 1 {
        idx.push(traj.times.len() - 1);
    }
    let times: Vec<f64> = idx.iter().map(|&i| traj.times[i]).collect();
    let mut lead = Vec::with_capacity(times.len());
    let mut all = Vec::with_capacity(times.len());
    for &t in &times {
        let zeta = project_history(&traj.history_at(t)?, basis)?;
        let e: Vec<f64> = (0..m_ref)
            .map(|j| zeta[j] * zeta[j] * basis.norms_sq[j])
            .collect();
        lead.push(e[..n].iter().sum::<f64>());
        all.push(e.iter().sum::<f64>());
    }
    let total = quad::simpson(&times, &all);
    if !(total > 0.0) {
        return Err(Error::Domain("trajectory carries no energy".into()));
    }
    Ok(quad::simpson(&times, &lead) / total)
}

/// User-supplied constants of the error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    pub lip_f: f64,
    pub lip_g: f64,
    pub alpha: f64,
    /// Operator norm of A in the graph norm; 1 by construction.
    pub op_norm: f64,
}

impl Default for BoundConstants {
    fn default() -> Self {
        Self {
            lip_f: 1.0,
            lip_g: 1.0,
            alpha: 0.0,
            op_norm: 1.0,
        }
    }
}

/// f(T) = (Lip_F + ||A||^2) exp(2 (alpha + 3/2 Lip_F + 1/2) T).
pub fn f_const(c: &BoundConstants, t_final: f64) -> f64 {
    (c.lip_f + c.op_norm * c.op_norm) * (2.0 * (c.alpha + 1.5 * c.lip_f + 0.5) * t_final).exp()
}

/// Lip_G (sqrt(T - t) + (T - t) sqrt(f(T))) R.
pub fn theorem_bound(c: &BoundConstants, t_final: f64, t: f64, residual: f64) -> f64 {
    let s = (t_final - t).max(0.0);
    c.lip_g * (s.sqrt() + s * f_const(c, t_final).sqrt()) * residual
}

/// Control-difference bound (1 / sigma) Lip_G (sqrt(T) + T sqrt(f(T))) (R1 + 2 R2).
pub fn corollary_bound(
    c: &BoundConstants,
    t_final: f64,
    sigma: f64,
    r1: f64,
    r2: f64,
) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::Config("sigma must be positive".into()));
    }
    Ok(theorem_bound(c, t_final, 0.0, r1 + 2.0 * r2) / sigma)
}

/// Largest difference quotient |F(p) - F(q)| / |p - q| over a lattice in the
/// cube [-radius, radius]^3, with `per_axis` points per axis.
pub fn lipschitz_estimate(f: &Nonlinearity, radius: f64, per_axis: usize) -> f64 {
    let n = per_axis.max(2);
    let pts: Vec<[f64; 3]> = (0..n * n * n)
        .map(|i| {
            let c = |k: usize| -radius + 2.0 * radius * k as f64 / (n - 1) as f64;
            [c(i / (n * n)), c((i / n) % n), c(i % n)]
        })
        .collect();
    let vals: Vec<f64> = pts.iter().map(|p| f.eval(p[0], p[1], p[2])).collect();
    let mut best = 0.0f64;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = ((pts[i][0] - pts[j][0]).powi(2)
                + (pts[i][1] - pts[j][1]).powi(2)
                + (pts[i][2] - pts[j][2]).powi(2))
            .sqrt();
            best = best.max((vals[i] - vals[j]).abs() / d);
        }
    }
    best
}

/// Gaps between two controls on a shared horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlGap {
    pub sup: f64,
    pub l2: f64,
    /// |J(u1) - J(u2)| under the supplied cost, 0 when none is given.
    pub cost_gap: f64,
}

/// Cost functional applied to each control by [`compare_controls`].
pub type CostFn<'a> = &'a dyn Fn(&ControlSignal) -> Result<f64>;

/// Compares u1 and u2 on `samples + 1` uniform points of [0, T].
pub fn compare_controls(
    u1: &ControlSignal,
    u2: &ControlSignal,
    samples: usize,
    cost: Option<CostFn<'_>>,
) -> Result<ControlGap> {
    let t_final = u1.horizon();
    if (u2.horizon() - t_final).abs() > 1e-9 * t_final.max(1.0) {
        return Err(Error::Config(format!(
            "control horizons differ: {t_final} vs {}",
            u2.horizon()
        )));
    }
    let samples = samples.max(2);
    let h = t_final / samples as f64;
    let diff: Vec<f64> = (0..=samples)
        .map(|k| {
            let t = if k == samples { t_final } else { k as f64 * h };
            u1.eval(t) - u2.eval(t)
        })
        .collect();
    let sup = diff.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let sq: Vec<f64> = diff.iter().map(|d| d * d).collect();
    let l2 = quad::simpson_uniform(h, &sq).max(0.0).sqrt();
    let cost_gap = match cost {
        Some(j) => (j(u1)? - j(u2)?).abs(),
        None => 0.0,
    };
    Ok(ControlGap { sup, l2, cost_gap })
}

/// Setup shared by every dimension of a convergence study.
#[derive(Debug, Clone)]
pub struct StudySetup {
    pub model: DdeModel,
    /// Initial history; each reduced system starts from its projection.
    pub history: HistorySegment,
    pub mu: f64,
    pub t_final: f64,
    /// DDE step used to evaluate the cost of each control.
    pub dde_step: f64,
    pub pmp: PmpOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub n: usize,
    /// Reduced cost of the PMP control.
    pub reduced_cost: f64,
    /// Cost of the same control applied to the DDE.
    pub dde_cost: f64,
    /// |dde_cost - reference| / reference with the largest N as reference.
    pub rel_error: f64,
    pub leading_eig: Complex<f64>,
    /// Distance to the characteristic root nearest the leading eigenvalue
    /// of the largest N.
    pub eig_error: f64,
}

/// PMP solve per N, one task per dimension. `ns` must be increasing.
pub fn convergence_study(setup: &StudySetup, ns: &[usize], exec: Exec) -> Result<Vec<StudyRow>> {
    if ns.is_empty() || ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(
            "dimension list must be non-empty and increasing".into(),
        ));
    }
    let n_max = *ns.last().unwrap();
    let basis = KoornwinderBasis::new(setup.model.tau, n_max)?;
    let zeta = project_history(&setup.history, &basis)?;
    type Run = Result<(usize, f64, f64, Complex<f64>)>;
    let runs: Vec<Run> = par::map_range(exec, ns.len(), |i| {
        let n = ns[i];
        let sub = KoornwinderBasis::new(setup.model.tau, n)?;
        let sys = build_gk(&setup.model, &sub, n)?.with_init(zeta[..n].to_vec())?;
        let lead = eigendecompose(&sys)?.values[0];
        let sol = solve_bvp(&build_pmp_bvp(&sys, setup.mu, setup.t_final)?, &setup.pmp)?;
        let traj = integrate_dde(
            &setup.model,
            &setup.history,
            &sol.control,
            setup.t_final,
            setup.dde_step,
        )?;
        let dde_cost = evaluate_cost(&traj, &sol.control, setup.mu)?;
        Ok((n, sol.cost, dde_cost, lead))
    });
    let runs: Vec<_> = runs.into_iter().collect::<Result<_>>()?;
    let (_, _, reference, lead_ref) = *runs.last().unwrap();
    let root = characteristic_root(&setup.model.linear_part(), lead_ref)?;
    Ok(runs
        .into_iter()
        .map(|(n, reduced_cost, dde_cost, leading_eig)| StudyRow {
            n,
            reduced_cost,
            dde_cost,
            rel_error: (dde_cost - reference).abs() / reference,
            leading_eig,
            eig_error: (leading_eig - root).norm(),
        })
        .collect())
}

/// CSV with one row per dimension.
pub fn study_csv(rows: &[StudyRow]) -> String {
    let mut out = String::from("n,reduced_cost,dde_cost,rel_error,eig_re,eig_im,eig_error\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.n,
            r.reduced_cost,
            r.dde_cost,
            r.rel_error,
            r.leading_eig.re,
            r.leading_eig.im,
            r.eig_error
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_hand_value() {
        let c = BoundConstants::default();
        let want = 1.0 + (2.0 * 4f64.exp()).sqrt();
        assert!((theorem_bound(&c, 1.0, 0.0, 1.0) - want).abs() < 1e-12);
        assert_eq!(theorem_bound(&c, 1.0, 0.0, 0.0), 0.0);
    }

    #[test]
    fn corollary_scales_with_sigma() {
        let c = BoundConstants::default();
        let a = corollary_bound(&c, 1.0, 1.0, 0.2, 0.1).unwrap();
        let b = corollary_bound(&c, 1.0, 2.0, 0.2, 0.1).unwrap();
        assert!((a - 2.0 * b).abs() < 1e-12);
        assert!((a - theorem_bound(&c, 1.0, 0.0, 0.4)).abs() < 1e-12);
        assert!(corollary_bound(&c, 1.0, 0.0, 0.2, 0.1).is_err());
    }

    #[test]
    fn identical_controls_have_no_gap() {
        let u = ControlSignal::function(4.0, |t| t.sin());
        let g = compare_controls(&u, &u, 100, None).unwrap();
        assert_eq!((g.sup, g.l2, g.cost_gap), (0.0, 0.0, 0.0));
        let v = ControlSignal::zero(3.0);
        assert!(compare_controls(&u, &v, 100, None).is_err());
    }

    #[test]
    fn lipschitz_of_linear_functional() {
        let f = Nonlinearity::Quadratic([0.0; 6]);
        assert_eq!(lipschitz_estimate(&f, 1.0, 4), 0.0);
        // F = -x y on [-r, r]^3 has Lipschitz constant r sqrt(2).
        let l = lipschitz_estimate(&Nonlinearity::wright(), 0.5, 5);
        assert!(l <= 0.5 * 2f64.sqrt() + 1e-12 && l > 0.5);
    }

    #[test]
    fn polynomial_history_has_no_residual() {
        let model = DdeModel::wright(1.0).unwrap();
        let basis = KoornwinderBasis::new(1.0, 8).unwrap();
        let xi = [0.01, -0.02, 0.005];
        let mut full = vec![0.0; 8];
        full[..3].copy_from_slice(&xi);
        let phi = crate::basis::history_from_coeffs(&full, &basis, 200).unwrap();
        // A zero-length run keeps the polynomial history as the only sample.
        let lin = model.linear_part();
        let traj = integrate_dde(&lin, &phi, &ControlSignal::zero(0.005), 0.005, 0.005).unwrap();
        let zeta = project_history(&traj.history_at(0.0).unwrap(), &basis).unwrap();
        for z in &zeta[3..] {
            assert!(z.abs() < 1e-9);
        }
        let b = generator_norm(&model, &basis, &zeta, 3..8);
        assert!(b < 1e-6);
    }
}
