//! The Wright-equation case study: parameters, reduced problems and the
//! cost table comparing them.

use crate::basis::{history_from_coeffs, project_history, HistorySegment, KoornwinderBasis};
use crate::dde::{evaluate_cost, integrate_dde, settle_and_snip, DdeModel, SettleOptions};
use crate::error::{Error, Result};
use crate::galerkin::{build_gk, eigen_project_2d, ReducedSystem};
use crate::hjb::GridSpec;
use crate::par::{self, Exec};
use crate::pmp::{build_pmp_bvp, solve_bvp, PmpOptions, PmpSolution};

pub const TAU: f64 = 1.58;
pub const MU: f64 = 0.5;
pub const HORIZON: f64 = 4.0;
/// DDE steps per delay interval.
pub const STEPS_PER_TAU: usize = 200;
/// Six-mode initial coefficients cut from the attractor, rounded to 4 digits.
pub const PRINTED_ZETA6: [f64; 6] = [0.0590, 0.0827, 0.0014, -0.0006, 0.0, 0.0];
/// Samples per delay interval for reconstructed histories.
pub const HISTORY_SAMPLES: usize = 400;

/// The reduced problems of the study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Case {
    Wright2,
    Wright6,
    Wright12,
    /// Two-dimensional real form of the leading eigenpair of the 6-mode system.
    Wright2Proj,
}

impl Case {
    pub const ALL: [Case; 4] = [
        Case::Wright12,
        Case::Wright6,
        Case::Wright2,
        Case::Wright2Proj,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Case::Wright2 => "wright2",
            Case::Wright6 => "wright6",
            Case::Wright12 => "wright12",
            Case::Wright2Proj => "wright2proj",
        }
    }

    /// Galerkin dimension the case is built from.
    pub fn gk_dim(self) -> usize {
        match self {
            Case::Wright2 => 2,
            Case::Wright6 | Case::Wright2Proj => 6,
            Case::Wright12 => 12,
        }
    }
}

impl std::str::FromStr for Case {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "wright2" => Ok(Case::Wright2),
            "wright6" => Ok(Case::Wright6),
            "wright12" => Ok(Case::Wright12),
            "wright2proj" => Ok(Case::Wright2Proj),
            other => Err(format!("unknown case '{other}'")),
        }
    }
}

impl std::fmt::Display for Case {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Where the initial history comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitSource {
    /// The six printed coefficients, reconstructed as a polynomial history.
    Printed,
    /// A window cut from the settled uncontrolled orbit.
    Snippet(SettleOptions),
}

pub fn model(tau: f64) -> Result<DdeModel> {
    DdeModel::wright(tau)
}

pub fn dde_step(tau: f64) -> f64 {
    tau / STEPS_PER_TAU as f64
}

/// Initial history for the study at delay `tau`.
pub fn initial_history(source: InitSource, tau: f64, t_control: f64) -> Result<HistorySegment> {
    match source {
        InitSource::Printed => {
            let basis = KoornwinderBasis::new(tau, 6)?;
            history_from_coeffs(&PRINTED_ZETA6, &basis, HISTORY_SAMPLES)
        }
        InitSource::Snippet(opts) => {
            Ok(settle_and_snip(&model(tau)?, t_control, dde_step(tau), &opts)?.history)
        }
    }
}

/// The reduced system of `case` started from the projection of `history`.
pub fn case_system(case: Case, m: &DdeModel, history: &HistorySegment) -> Result<ReducedSystem> {
    let n = case.gk_dim();
    let basis = KoornwinderBasis::new(m.tau, n)?;
    let sys = build_gk(m, &basis, n)?.with_init(project_history(history, &basis)?)?;
    match case {
        Case::Wright2Proj => eigen_project_2d(&sys),
        _ => Ok(sys),
    }
}

/// Default HJB grid for a two-dimensional case.
pub fn default_grid(case: Case) -> Result<GridSpec> {
    match case {
        Case::Wright2 => GridSpec::new(
            [-0.02; 2],
            [0.1; 2],
            [8.5e-3; 2],
            1.543e-4,
            HORIZON,
            [5.0, 2.0],
            10,
        ),
        Case::Wright2Proj => GridSpec::new(
            [-0.04; 2],
            [0.04; 2],
            [1.33e-3; 2],
            1.543e-4,
            HORIZON,
            [1.5, 1.5],
            10,
        ),
        other => Err(Error::Unsupported(format!("no HJB grid for {other}"))),
    }
}

/// One row of the cost table.
#[derive(Debug, Clone)]
pub struct CostRow {
    pub case: Case,
    pub solution: PmpSolution,
    /// Cost of the PMP control applied to the DDE.
    pub dde_cost: f64,
}

/// The cost table.
#[derive(Debug, Clone)]
pub struct CostTable {
    pub rows: Vec<CostRow>,
}

impl CostTable {
    pub fn row(&self, case: Case) -> Option<&CostRow> {
        self.rows.iter().find(|r| r.case == case)
    }

    /// (J(case) - J(reference)) / J(reference) on DDE costs.
    pub fn relative_error(&self, case: Case, reference: Case) -> Option<f64> {
        let a = self.row(case)?.dde_cost;
        let b = self.row(reference)?.dde_cost;
        Some((a - b) / b)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("case,reduced_cost,dde_cost,residual,newton_iterations\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.case,
                r.solution.cost,
                r.dde_cost,
                r.solution.residual,
                r.solution.newton_iterations
            ));
        }
        out
    }
}

/// PMP control for each case and its cost on the DDE from the same history.
pub fn cost_table(
    cases: &[Case],
    history: &HistorySegment,
    mu: f64,
    t_final: f64,
    opts: &PmpOptions,
    exec: Exec,
) -> Result<CostTable> {
    let tau = history.tau();
    let m = model(tau)?;
    let rows: Vec<Result<CostRow>> = par::map_range(exec, cases.len(), |i| {
        let case = cases[i];
        let sys = case_system(case, &m, history)?;
        let solution = solve_bvp(&build_pmp_bvp(&sys, mu, t_final)?, opts)?;
        let traj = integrate_dde(&m, history, &solution.control, t_final, dde_step(tau))?;
        let dde_cost = evaluate_cost(&traj, &solution.control, mu)?;
        Ok(CostRow {
            case,
            solution,
            dde_cost,
        })
    });
    Ok(CostTable {
        rows: rows.into_iter().collect::<Result<_>>()?,
    })
}
