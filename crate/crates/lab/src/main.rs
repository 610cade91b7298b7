use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use qhop_lab::config::RunConfig;
use qhop_lab::runner::{
    run_bound_checks, run_commutator_scan, run_convergence_h, run_estimate, run_scale_n,
    run_wavepacket_k, RunOptions,
};
use qhop_lab::{LabError, RunOutput};

/// Numerical studies of averaged-exponential (qHOP) Hamiltonian
/// simulation against Trotter, truncated-Dyson and qDRIFT baselines.
#[derive(Parser)]
#[command(name = "qhop", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration; defaults reproduce the reference studies.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output path (CSV for studies, JSON lines for estimate); stdout when
    /// omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed override for randomized studies.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Emit real wall times. Off by default so reruns are byte-identical.
    #[arg(long, global = true)]
    timings: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Norm of [B, e^{iAs} B e^{-iAs}] over a separation grid, per N.
    CommutatorScan {
        /// Include the N = 1024 column (slow).
        #[arg(long)]
        large_n: bool,
    },
    /// Operator-error convergence in the step size h.
    ConvergeH,
    /// Operator and vector errors across grid sizes at fixed h.
    ScaleN,
    /// Vector errors for wavepackets of increasing frequency.
    WavepacketK,
    /// Local error bound and commutator branch ratio checks.
    BoundCheck,
    /// Formula-level query/gate estimates, one JSON record per method.
    Estimate,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<(), LabError> {
    let config = match &cli.config {
        Some(path) => RunConfig::from_path(path)?,
        None => RunConfig::default(),
    };
    let opts = RunOptions {
        seed: cli.seed,
        timings: cli.timings,
        include_large_n: matches!(cli.command, Command::CommutatorScan { large_n: true }),
    };

    match cli.command {
        Command::CommutatorScan { .. } => {
            emit_csv(&cli, run_commutator_scan(&config, &opts)?, opts.timings)
        }
        Command::ConvergeH => emit_csv(&cli, run_convergence_h(&config, &opts)?, opts.timings),
        Command::ScaleN => emit_csv(&cli, run_scale_n(&config, &opts)?, opts.timings),
        Command::WavepacketK => emit_csv(&cli, run_wavepacket_k(&config, &opts)?, opts.timings),
        Command::BoundCheck => emit_csv(&cli, run_bound_checks(&config, &opts)?, opts.timings),
        Command::Estimate => {
            let config = if config.estimate.is_none() && cli.config.is_none() {
                demo_estimate_config()
            } else {
                config
            };
            let records = run_estimate(&config)?;
            let mut text = String::new();
            for (requested, est) in &records {
                let line = serde_json::to_string(&EstimateRecord {
                    method: requested.clone(),
                    plan: est.method,
                    segments: est.segments,
                    quadrature_nodes: est.quadrature_nodes,
                    delta: est.delta,
                    queries_select: est.queries_select,
                    queries_fast_forward: est.queries_fast_forward,
                    queries_potential: est.queries_potential,
                    two_qubit_gates: est.two_qubit_gates,
                    ancillas: est.ancillas,
                })?;
                text.push_str(&line);
                text.push('\n');
            }
            write_output(&cli, &text)
        }
    }
}

#[derive(Serialize)]
struct EstimateRecord {
    method: String,
    plan: &'static str,
    segments: u64,
    quadrature_nodes: u64,
    delta: f64,
    queries_select: f64,
    queries_fast_forward: f64,
    queries_potential: f64,
    two_qubit_gates: f64,
    ancillas: u64,
}

fn emit_csv(cli: &Cli, output: RunOutput, timings: bool) -> Result<(), LabError> {
    let text = output.to_csv_string(timings)?;
    eprintln!(
        "{} rows in {:.2}s (config {})",
        output.rows.len(),
        output.meta.walltime_s,
        output.meta.config_hash
    );
    write_output(cli, &text)
}

fn write_output(cli: &Cli, text: &str) -> Result<(), LabError> {
    match &cli.out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

/// Built-in demonstration parameters so `qhop estimate` works without a
/// config file.
fn demo_estimate_config() -> RunConfig {
    let text = r#"{
        "estimate": {
            "total_time": 1.0,
            "epsilon": 0.01,
            "methods": ["qhop", "qhop-interaction", "qhop-interaction-min",
                        "trotter1", "trotter2", "qdrift", "dyson1"],
            "alpha": 1.0,
            "c_h": 1.0,
            "theta": 1,
            "max_h_prime": 1.0,
            "alpha_b": 1.0,
            "beta_b": 0.0,
            "alpha_ab": 40.0,
            "c_ab": 1.0,
            "commutator_ab": 128.0,
            "nested_aab": 16384.0,
            "nested_bba": 128.0,
            "l1_norm": 1.0
        }
    }"#;
    serde_json::from_str(text).expect("demo config is valid")
}
