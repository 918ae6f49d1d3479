use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use quantflow_cli::{exit_code, run, write_error, CliError, Config, EXIT_INPUT};

#[derive(Parser)]
#[command(name = "quantflow", version, about = "Quantization gradient-flow experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Discrete 1D point flow or Newton minimization of F_{N,r}
    #[command(name = "quantize1d")]
    Quantize1d(RunArgs),
    /// Eulerian or Lagrangian continuum flow with comparison diagnostics
    #[command(name = "pde1d")]
    Pde1d(RunArgs),
    /// Distance between discrete and continuum flows in rescaled time
    #[command(name = "closeness")]
    Closeness(RunArgs),
    /// Non-convexity certificate for the mollified counterexample
    #[command(name = "hessian-cx")]
    HessianCx(RunArgs),
    /// Relaxation of perturbed hexagonal configurations and deformations
    #[command(name = "lattice2d")]
    Lattice2d(RunArgs),
    /// Scaling of the hexagonal energy with n
    #[command(name = "calibrate2d")]
    Calibrate2d(RunArgs),
    /// Moment condition on a model space
    #[command(name = "manifold-moment")]
    ManifoldMoment(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// Flat key = value config file
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. --set n=128
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (default: out/<experiment>)
    #[arg(short, long)]
    out: Option<PathBuf>,
}

impl Command {
    fn split(self) -> (&'static str, RunArgs) {
        match self {
            Command::Quantize1d(a) => ("quantize1d", a),
            Command::Pde1d(a) => ("pde1d", a),
            Command::Closeness(a) => ("closeness", a),
            Command::HessianCx(a) => ("hessian-cx", a),
            Command::Lattice2d(a) => ("lattice2d", a),
            Command::Calibrate2d(a) => ("calibrate2d", a),
            Command::ManifoldMoment(a) => ("manifold-moment", a),
        }
    }
}

fn load(args: &RunArgs) -> Result<Config, CliError> {
    let mut cfg = match &args.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    for assignment in &args.set {
        cfg.set(assignment)?;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT as u8 } else { 0 });
        }
    };
    let (name, args) = cli.command.split();
    let out_dir = args.out.clone().unwrap_or_else(|| PathBuf::from("out").join(name));
    let result = load(&args).and_then(|cfg| run(name, &cfg, &out_dir));
    match result {
        Ok(report) => {
            for t in &report.thresholds {
                println!(
                    "{} {}: {} (required {})",
                    if t.pass { "PASS" } else { "FAIL" },
                    t.name,
                    t.observed,
                    t.condition
                );
            }
            for note in &report.notes {
                println!("note: {note}");
            }
            println!("report: {}", out_dir.join("report.json").display());
            ExitCode::from(exit_code(&report) as u8)
        }
        Err(err) => {
            write_error(name, &err, &out_dir);
            eprintln!("{name}: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
