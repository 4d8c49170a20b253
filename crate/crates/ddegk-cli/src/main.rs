mod config;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ddegk::basis::{project_history, KoornwinderBasis};
use ddegk::cases::{self, Case};
use ddegk::dde::{evaluate_cost, hopf_sweep, integrate_dde, ControlSignal, DdeModel};
use ddegk::diagnostics::{
    convergence_study, lipschitz_estimate, residual_energy, study_csv, BoundConstants, StudySetup,
};
use ddegk::galerkin::{build_gk, eigen_project_2d, eigendecompose};
use ddegk::hjb::{closed_loop, fit_quadratic, solve_hjb};
use ddegk::pmp::{build_pmp_bvp, solve_bvp, PmpSolution};
use ddegk::{Error, HistorySegment};

use config::Config;

#[derive(Parser)]
#[command(
    name = "ddegk",
    version,
    about = "Galerkin reduction and optimal control of delay equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Configuration file of `key = value` lines (a previous manifest works).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Reduced problem: wright2, wright6, wright12 or wright2proj.
    #[arg(long, global = true)]
    case: Option<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Integrate the delay equation, uncontrolled or under the PMP control.
    Simulate,
    /// Build the Galerkin system and report its eigenvalues.
    Reduce,
    /// Solve the open-loop optimal control problem of a case.
    Pmp,
    /// Solve the HJB equation of a 2D case and run the feedback loop.
    Hjb,
    /// Sweep the delay through the Hopf bifurcation.
    Hopf,
    /// Residual energies and the convergence table across dimensions.
    Diagnose,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Reduce => "reduce",
            Command::Pmp => "pmp",
            Command::Hjb => "hjb",
            Command::Hopf => "hopf",
            Command::Diagnose => "diagnose",
        }
    }
}

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Io(_) => 4,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
            Failure::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        // Refused preconditions are configuration problems; the rest arise
        // while computing.
        match e {
            Error::Config(m) => Failure::Config(m),
            Error::Cfl(_) | Error::Unsupported(_) | Error::Capability(_) => {
                Failure::Config(e.to_string())
            }
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

struct Outputs {
    dir: PathBuf,
}

impl Outputs {
    fn write(&self, name: &str, contents: &str) -> Result<(), Failure> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("ddegk {}: {f}", cli.command.name());
            ExitCode::from(f.code())
        }
    }
}

fn resolve(cli: &Cli) -> Result<Config, Failure> {
    let mut cfg = Config::defaults();
    cfg.set("out", "out")?;
    if let Some(p) = &cli.config {
        cfg.merge_file(p)?;
    }
    for kv in &cli.set {
        cfg.merge_override(kv)?;
    }
    if let Some(c) = &cli.case {
        cfg.set("case", c)?;
    }
    if let Some(o) = &cli.out {
        cfg.set("out", &o.display().to_string())?;
    }
    cfg.case()?;
    cfg.exec()?;
    cfg.resolve_step()?;
    if matches!(cli.command, Command::Hjb) {
        cfg.resolve_grid()?;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = resolve(cli)?;
    // Validate the model before touching the file system.
    let model = cfg.model()?;
    let dir = PathBuf::from(cfg.raw("out"));
    std::fs::create_dir_all(&dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
    let out = Outputs { dir };
    out.write("manifest.txt", &cfg.manifest())?;
    match cli.command {
        Command::Simulate => simulate(&cfg, &model, &out),
        Command::Reduce => reduce(&cfg, &model, &out),
        Command::Pmp => pmp(&cfg, &model, &out),
        Command::Hjb => hjb(&cfg, &model, &out),
        Command::Hopf => hopf(&cfg, &model, &out),
        Command::Diagnose => diagnose(&cfg, &model, &out),
    }
}

fn pmp_solution(
    cfg: &Config,
    model: &DdeModel,
    phi: &HistorySegment,
    case: Case,
) -> Result<PmpSolution, Failure> {
    let sys = cases::case_system(case, model, phi)?;
    Ok(solve_bvp(
        &build_pmp_bvp(&sys, cfg.mu()?, cfg.horizon()?)?,
        &cfg.pmp()?,
    )?)
}

fn simulate(cfg: &Config, model: &DdeModel, out: &Outputs) -> Result<(), Failure> {
    let phi = cfg.history(model)?;
    let t_final = cfg.horizon()?;
    let u = match cfg.raw("simulate.control") {
        "none" => ControlSignal::zero(t_final),
        "pmp" => pmp_solution(cfg, model, &phi, cfg.case()?)?.control,
        other => return Err(Failure::Config(format!("unknown control '{other}'"))),
    };
    let tr = integrate_dde(model, &phi, &u, t_final, cfg.float("dde.h")?)?;
    let cost = evaluate_cost(&tr, &u, cfg.mu()?)?;
    out.write("trajectory.csv", &tr.to_csv())?;
    out.write("cost.txt", &format!("cost = {cost}\n"))?;
    println!("cost = {cost}");
    Ok(())
}

fn reduce(cfg: &Config, model: &DdeModel, out: &Outputs) -> Result<(), Failure> {
    let n: usize = cfg.get("reduce.n")?;
    let phi = cfg.history(model)?;
    let basis = KoornwinderBasis::new(model.tau, n)?;
    let sys = build_gk(model, &basis, n)?.with_init(project_history(&phi, &basis)?)?;
    let eig = eigendecompose(&sys)?;
    let mut csv = String::from("index,re,im\n");
    for (i, l) in eig.values.iter().enumerate() {
        writeln!(csv, "{i},{},{}", l.re, l.im).unwrap();
    }
    out.write("basis.csv", &basis.to_csv())?;
    out.write("system.txt", &sys.to_text())?;
    out.write("eigenvalues.csv", &csv)?;
    let lead = eig.values[0];
    println!("leading eigenvalue = {} {:+}i", lead.re, lead.im);
    match cfg.get::<bool>("reduce.project")? {
        true => out.write("projected.txt", &eigen_project_2d(&sys)?.to_text()),
        false => Ok(()),
    }
}

fn pmp(cfg: &Config, model: &DdeModel, out: &Outputs) -> Result<(), Failure> {
    let case = cfg.case()?;
    let phi = cfg.history(model)?;
    let sol = pmp_solution(cfg, model, &phi, case)?;
    let tr = integrate_dde(
        model,
        &phi,
        &sol.control,
        cfg.horizon()?,
        cfg.float("dde.h")?,
    )?;
    let dde_cost = evaluate_cost(&tr, &sol.control, cfg.mu()?)?;
    out.write("pmp.csv", &sol.to_csv())?;
    out.write("dde_trajectory.csv", &tr.to_csv())?;
    out.write(
        "cost.csv",
        &format!(
            "case,reduced_cost,dde_cost,residual,newton_iterations\n{case},{},{dde_cost},{},{}\n",
            sol.cost, sol.residual, sol.newton_iterations
        ),
    )?;
    println!(
        "{case}: reduced cost = {:.4}, DDE cost = {dde_cost:.4}",
        sol.cost
    );
    Ok(())
}

fn hjb(cfg: &Config, model: &DdeModel, out: &Outputs) -> Result<(), Failure> {
    let case = cfg.case()?;
    let grid = cfg.grid()?;
    if grid.cfl() > 1.0 {
        return Err(Error::Cfl(grid.cfl()).into());
    }
    let mu = cfg.mu()?;
    let phi = cfg.history(model)?;
    let sys = cases::case_system(case, model, &phi)?;
    let vf = solve_hjb(&sys, mu, &grid, cfg.exec()?)?;
    let cl = closed_loop(&vf, &sys, mu, cfg.float("hjb.ode_step")?)?;
    let tr = integrate_dde(model, &phi, &cl.control, grid.t_final, cfg.float("dde.h")?)?;
    let dde_cost = evaluate_cost(&tr, &cl.control, mu)?;
    let fit = fit_quadratic(&vf)?;
    let c = fit.coeffs;
    out.write("value_t0.csv", &vf.slice_csv(0))?;
    out.write("closed_loop.csv", &cl.trajectory.to_csv())?;
    out.write("closed_loop_dde.csv", &tr.to_csv())?;
    let report = format!(
        "cfl = {}\nreduced_cost = {}\ndde_cost = {dde_cost}\nfit.c20 = {}\nfit.c11 = {}\nfit.c10 = {}\nfit.c02 = {}\nfit.c01 = {}\nfit.rmse = {}\n",
        grid.cfl(),
        cl.cost,
        c[0],
        c[1],
        c[2],
        c[3],
        c[4],
        fit.rmse
    );
    out.write("fit.txt", &report)?;
    println!(
        "{case}: closed-loop DDE cost = {dde_cost:.4}, fit rmse = {:.3e}",
        fit.rmse
    );
    Ok(())
}

fn hopf(cfg: &Config, model: &DdeModel, out: &Outputs) -> Result<(), Failure> {
    let taus = cfg.floats("hopf.taus")?;
    let base = model.clone();
    let family = move |tau: f64| DdeModel::new(base.a, base.b, base.c, tau, base.f.clone());
    let recs = hopf_sweep(family, &taus, &cfg.hopf()?, cfg.exec()?)?;
    let mut summary = String::from("tau,amplitude,period\n");
    let mut samples = String::from("tau,m,m_delayed\n");
    for r in &recs {
        writeln!(summary, "{},{},{}", r.tau, r.amplitude, r.period).unwrap();
        for (m, md) in &r.samples {
            writeln!(samples, "{},{m},{md}", r.tau).unwrap();
        }
    }
    out.write("hopf.csv", &summary)?;
    out.write("hopf_cycles.csv", &samples)?;
    println!("{} delays swept", recs.len());
    Ok(())
}

fn diagnose(cfg: &Config, model: &DdeModel, out: &Outputs) -> Result<(), Failure> {
    let ns: Vec<usize> = cfg
        .raw("diagnose.ns")
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Failure::Config(format!("diagnose.ns: '{s}'")))
        })
        .collect::<Result<_, _>>()?;
    let n: usize = cfg.get("diagnose.n")?;
    let m_ref = match cfg.raw("diagnose.m_ref") {
        "auto" => n + 6,
        _ => cfg.get("diagnose.m_ref")?,
    };
    let (mu, t_final, h) = (cfg.mu()?, cfg.horizon()?, cfg.float("dde.h")?);
    let phi = cfg.history(model)?;
    let setup = StudySetup {
        model: model.clone(),
        history: phi.clone(),
        mu,
        t_final,
        dde_step: h,
        pmp: cfg.pmp()?,
    };
    let rows = convergence_study(&setup, &ns, cfg.exec()?)?;

    let basis = KoornwinderBasis::new(model.tau, m_ref.max(n))?;
    let small = KoornwinderBasis::new(model.tau, n)?;
    let sys = build_gk(model, &small, n)?.with_init(project_history(&phi, &small)?)?;
    let sol = solve_bvp(&build_pmp_bvp(&sys, mu, t_final)?, &cfg.pmp()?)?;
    let tr = integrate_dde(model, &phi, &sol.control, t_final, h)?;
    let budget = residual_energy(&tr, model, &basis, n, m_ref, cfg.get("diagnose.stride")?)?;
    let radius = tr.output.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let constants = BoundConstants {
        lip_f: lipschitz_estimate(&model.f, radius, 5),
        ..BoundConstants::default()
    };
    out.write("convergence.csv", &study_csv(&rows))?;
    out.write("budget.csv", &budget.to_csv())?;
    out.write("budget.txt", &budget.summary(Some((&constants, t_final))))?;
    for r in &rows {
        println!(
            "N = {:>2}: DDE cost = {:.4}, relative error = {:.2e}",
            r.n, r.dde_cost, r.rel_error
        );
    }
    Ok(())
}
