use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tnsim::budget::Strategy;
use tnsim::runner::{self, CircuitKind, Mode, RunConfig, RunReport};

#[derive(Parser)]
#[command(
    name = "tnsim",
    about = "Tensor-network circuit simulator with fidelity-targeted truncation",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one circuit and write a JSON run report.
    Run(RunArgs),
    /// Run adaptively, rerun with the bond cap fixed at the adaptive peak,
    /// and write both reports side by side.
    Compare(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// State representation: pure (mps) or density operator (mpo).
    #[arg(long, value_enum)]
    mode: Mode,
    /// Circuit source.
    #[arg(long, value_enum)]
    circuit: CircuitKind,
    /// JSON circuit path; required when --circuit file.
    #[arg(long)]
    circuit_file: Option<PathBuf>,
    /// Qubit count for generated circuits.
    #[arg(long, default_value_t = 0)]
    qubits: usize,
    /// Layer count for generated circuits (mirror: layers in the forward
    /// half).
    #[arg(long, default_value_t = 0)]
    depth: usize,
    /// Generator seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Minimum final-state fidelity to target, in (0, 1].
    #[arg(long)]
    fidelity_min: f64,
    /// How the fidelity budget is spread over truncations.
    #[arg(long, value_enum, default_value_t = Strategy::Global)]
    strategy: Strategy,
    /// Hard bond-dimension cap; may break the fidelity guarantee.
    #[arg(long)]
    chi_cap: Option<usize>,
    /// Depolarizing strength after each one-qubit gate (mpo mode).
    #[arg(long, default_value_t = 0.0)]
    eps1: f64,
    /// Depolarizing strength after each two-qubit gate (mpo mode).
    #[arg(long, default_value_t = 0.0)]
    eps2: f64,
    /// Cross-check the final state against the dense reference
    /// (small systems only).
    #[arg(long)]
    oracle_check: bool,
    /// Report output path.
    #[arg(long)]
    out: PathBuf,
}

impl RunArgs {
    fn config(&self) -> RunConfig {
        RunConfig {
            mode: self.mode,
            circuit: self.circuit,
            circuit_file: self.circuit_file.clone(),
            qubits: self.qubits,
            depth: self.depth,
            seed: self.seed,
            fidelity_min: self.fidelity_min,
            strategy: self.strategy,
            chi_cap: self.chi_cap,
            eps1: self.eps1,
            eps2: self.eps2,
            oracle_check: self.oracle_check,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    match cli.command {
        Command::Run(args) => {
            check_args(&args)?;
            let report = runner::run(&args.config())?;
            print_summary("run", &report);
            write_json(&args.out, &report)?;
            println!("report written to {}", args.out.display());
        }
        Command::Compare(args) => {
            check_args(&args)?;
            let comparison = runner::compare(&args.config())?;
            print_summary("adaptive", &comparison.adaptive);
            print_summary("fixed", &comparison.fixed);
            println!(
                "wall ratio (adaptive/fixed): {:.3}  estimate delta: {:+.3e}",
                comparison.wall_ratio, comparison.estimate_delta
            );
            write_json(&args.out, &comparison)?;
            println!("comparison written to {}", args.out.display());
        }
    }
    Ok(())
}

fn check_args(args: &RunArgs) -> Result<(), String> {
    if args.circuit != CircuitKind::File && args.qubits == 0 {
        return Err("generated circuits need --qubits >= 1".into());
    }
    Ok(())
}

fn print_summary(label: &str, report: &RunReport) {
    let bound = if report.is_lower_bound {
        "certified lower bound"
    } else {
        "estimate only"
    };
    println!(
        "{label}: estimate {:.6} ({bound}), guarantee {}, peak chi {}, wall {:.1} ms",
        report.estimate,
        if report.guarantee_held { "held" } else { "BROKEN" },
        report.peak_chi,
        report.wall_ms,
    );
    if let Some(f) = report.oracle_fidelity {
        println!("{label}: dense-reference fidelity {f:.10}");
    }
}

fn write_json<T: serde::Serialize>(
    path: &PathBuf,
    value: &T,
) -> Result<(), Box<dyn std::error::Error>> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
