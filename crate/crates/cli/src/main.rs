use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use chns::driver::experiments::{
    fitted_slope, order_test, solver_bench, stability_run, stability_sweep, StabilityStatus,
};
use chns::driver::spinodal::predict_spinodal_mode;
use chns::driver::{run, Method, RunConfig};
use chns::linsolve::SolverKind;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "chns", version, about = "Compressible Cahn-Hilliard-Navier-Stokes solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation described by a TOML configuration file.
    Run {
        config: PathBuf,
        /// Overrides `output_dir` from the file.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Overrides `t_final` from the file.
        #[arg(long)]
        t_final: Option<f64>,
    },
    /// Global errors and convergence ratios for the manufactured solution.
    OrderTest {
        #[arg(long, default_value = "dirksa")]
        scheme: Method,
        #[arg(long, value_delimiter = ',', default_value = "8,16,32,64")]
        m: Vec<usize>,
        #[arg(long, default_value_t = 0.4)]
        cfl: f64,
        #[arg(long, default_value_t = 0.01)]
        t_final: f64,
    },
    /// 1D stability sweep. Without options, runs the reference set.
    StabilityTest {
        #[arg(long, value_delimiter = ',')]
        scheme: Vec<Method>,
        #[arg(long, value_delimiter = ',')]
        m: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        cfl: Vec<f64>,
        #[arg(long, default_value_t = 0.1)]
        t_final: f64,
    },
    /// Average solver iterations on Test 1 over a parameter grid, as CSV.
    SolverBench {
        #[arg(long, value_delimiter = ',', default_value = "16,32,64,128,256")]
        m: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "1e-1,1e-2,1e-3")]
        nu: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1e-3,1e-4,1e-5")]
        eps: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "multigrid")]
        solver: Vec<Solver>,
        #[arg(long, default_value_t = 0.1)]
        t_final: f64,
    },
    /// Unstable cosine modes of a homogeneous mixture.
    SpinodalPredict {
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        c0: f64,
        #[arg(long, default_value_t = 1e-4)]
        eps: f64,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Also list every unstable mode.
        #[arg(long)]
        all: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Solver {
    Multigrid,
    Pcg,
}

impl From<Solver> for SolverKind {
    fn from(s: Solver) -> Self {
        match s {
            Solver::Multigrid => SolverKind::Multigrid,
            Solver::Pcg => SolverKind::Pcg,
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Run { config, output, t_final } => {
            let mut cfg = RunConfig::load(&config).with_context(|| format!("reading {}", config.display()))?;
            if output.is_some() {
                cfg.output_dir = output;
            }
            if let Some(t) = t_final {
                cfg.t_final = t;
            }
            let out = run(&cfg)?;
            let last = out.history.last();
            println!("t = {}", out.t);
            println!("steps = {}", out.history.len());
            println!("rejections = {}", out.rejections);
            if let Some(row) = last {
                println!("err_rho = {:e}", row.err_rho);
                println!("err_q = {:e}", row.err_q);
                println!("c range = [{}, {}]", row.cmin, row.cmax);
            }
            println!("mean iterations = {:.2} (c), {:.2} (v)", out.solver.mean_concentration_iters(), out.solver.mean_velocity_iters());
            println!("snapshots = {}", out.snapshots.len());
        }
        Command::OrderTest { scheme, m, cfl, t_final } => {
            if scheme == Method::ExplicitEuler {
                bail!("the order test needs an implicit-explicit scheme");
            }
            let rows = order_test(scheme, &m, cfl, t_final)?;
            println!("{:>6} {:>12} {:>7}", "M", "error", "ratio");
            for r in &rows {
                let ratio = r.ratio.map_or("-".to_string(), |q| format!("{q:.2}"));
                println!("{:>6} {:>12.4e} {:>7}", r.m, r.error, ratio);
            }
            if rows.len() > 1 {
                println!("fitted order {:.3}", -fitted_slope(&rows));
            }
        }
        Command::StabilityTest { scheme, m, cfl, t_final } => {
            let outcomes = if scheme.is_empty() && m.is_empty() && cfl.is_empty() {
                stability_sweep()?
            } else {
                let schemes = if scheme.is_empty() { vec![Method::EeIe, Method::Dirksa] } else { scheme };
                let ms = if m.is_empty() { vec![100] } else { m };
                let cfls = if cfl.is_empty() { vec![1.0] } else { cfl };
                let mut out = Vec::new();
                for &method in &schemes {
                    for &mm in &ms {
                        for &c in &cfls {
                            // explicit Euler always uses Δt = Δx³
                            let dt = (method == Method::ExplicitEuler).then(|| (1.0 / mm as f64).powi(3));
                            out.push(stability_run(method, mm, c, dt, t_final)?);
                        }
                    }
                }
                out
            };
            println!("{:<15} {:>6} {:>10} {:>10} {:>10}  outcome", "scheme", "M", "cfl", "dt", "T");
            for o in outcomes {
                let status = match &o.status {
                    StabilityStatus::Completed => "completed".to_string(),
                    StabilityStatus::BlewUp { t } => format!("blew up at t = {t:.4e}"),
                    StabilityStatus::Rejected { t, reason } => {
                        format!("stopped at t = {t:.4e}: {reason}")
                    }
                };
                let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3e}"));
                println!("{:<15} {:>6} {:>10} {:>10} {:>10}  {status}", o.method.to_string(), o.m, opt(o.cfl), opt(o.dt), o.t_final);
            }
        }
        Command::SolverBench { m, nu, eps, solver, t_final } => {
            println!("m,nu,eps,solver,steps,mean_c,mean_v");
            for &mm in &m {
                for &n in &nu {
                    for &e in &eps {
                        for &s in &solver {
                            let r = solver_bench(mm, n, e, s.into(), t_final)?;
                            let name = match s {
                                Solver::Multigrid => "multigrid",
                                Solver::Pcg => "pcg",
                            };
                            println!("{},{},{},{},{},{:.3},{:.3}", r.m, r.nu, r.eps, name, r.steps, r.mean_c, r.mean_v);
                        }
                    }
                }
            }
        }
        Command::SpinodalPredict { c0, eps, dim, all } => {
            let p = predict_spinodal_mode(c0, eps, dim)?;
            println!("c0 = {c0}");
            println!("unstable modes = {}", p.modes.len());
            println!("continuous k1^2+k2^2 = {:.3}", p.continuous_khat());
            match p.dominant {
                Some(d) => println!("dominant = ({}, {}), k1^2+k2^2 = {}, sigma = {:.6e}", d.k1, d.k2, d.khat(), d.sigma),
                None => println!("dominant = none (no unstable mode)"),
            }
            if all {
                println!("k1,k2,sigma");
                for md in &p.modes {
                    println!("{},{},{:e}", md.k1, md.k2, md.sigma);
                }
            }
        }
    }
    Ok(())
}
