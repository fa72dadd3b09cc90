use std::path::PathBuf;
use std::process::ExitCode;

use bp_tensor::analysis::Axis;
use bp_tensor::error::SolveError;
use bp_tensor::runner::{self, RunConfig};
use bp_tensor::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{error, info};

#[derive(Parser, Debug)]
#[command(name = "bp-tensor", version, about = "Bound-preserving FE solver for symmetric tensor convection-diffusion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Time-step one benchmark and write its outputs.
    Run(RunArgs),
    /// Repeat a run over several mesh sizes or time steps and tabulate EOCs.
    Converge {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum)]
        axis: AxisArg,
        /// Comma-separated values of h or dt.
        #[arg(long, value_delimiter = ',', required = true)]
        levels: Vec<f64>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum AxisArg {
    H,
    Dt,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Key-value configuration file; flags given here take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    degree: Option<usize>,
    /// Grid points per side.
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, conflicts_with = "omega_scale")]
    omega: Option<f64>,
    /// Use omega = scale / ||A||_2 instead of a fixed step.
    #[arg(long)]
    omega_scale: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    eps: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// printed | conventional
    #[arg(long)]
    atan_order: Option<String>,
    /// auto | direct | krylov
    #[arg(long)]
    linear_solver: Option<String>,
    /// Output directory (default `out`).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
                RunConfig::from_file_text(&text, self.problem.as_deref())?
            }
            None => {
                let name = self.problem.as_deref().ok_or_else(|| Error::Config("--problem is required".into()))?;
                RunConfig::for_problem(name)?
            }
        };
        let flags: [(&str, Option<String>); 14] = [
            ("scheme", self.scheme.clone()),
            ("degree", self.degree.map(|v| v.to_string())),
            ("p", self.p.map(|v| v.to_string())),
            ("dt", self.dt.map(|v| v.to_string())),
            ("gamma", self.gamma.map(|v| v.to_string())),
            ("omega", self.omega.map(|v| v.to_string())),
            ("omega-scale", self.omega_scale.map(|v| v.to_string())),
            ("eps", self.eps.map(|v| v.to_string())),
            ("kappa", self.kappa.map(|v| v.to_string())),
            ("t-final", self.t_final.map(|v| v.to_string())),
            ("tol", self.tol.map(|v| v.to_string())),
            ("max-iters", self.max_iters.map(|v| v.to_string())),
            ("atan-order", self.atan_order.clone()),
            ("linear-solver", self.linear_solver.clone()),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, &v)?;
            }
        }
        if let Some(out) = &self.out {
            cfg.out_dir = Some(out.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run(args) => {
            let cfg = args.resolve()?;
            let traj = runner::run(&cfg)?;
            let dir = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
            runner::emit_outputs(&traj, &dir)?;
            let (lo, hi) = traj.eig_range();
            info!("eigenvalue range [{lo:.6e}, {hi:.6e}], outputs in {}", dir.display());
            if let Some(e) = traj.errors {
                info!("L2 error {:.6e}, energy error {:.6e}", e.l2_error, e.energy_error);
            }
            Ok(())
        }
        Command::Converge { run, axis, levels } => {
            let cfg = run.resolve()?;
            let axis = match axis {
                AxisArg::H => Axis::H,
                AxisArg::Dt => Axis::Dt,
            };
            let records = runner::converge(&cfg, axis, &levels)?;
            let dir = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
            runner::emit_convergence(&records, axis, &dir)?;
            info!("{} levels written to {}", records.len(), dir.join("convergence.csv").display());
            Ok(())
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::StepFailed { source: SolveError::Diverged { .. } | SolveError::NonFinite { .. }, .. } => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    // clap's own usage-error code (2) would collide with the divergence code
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
