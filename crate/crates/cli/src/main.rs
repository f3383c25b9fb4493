use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use photon_counting::counting::Method;
use photon_counting_cli::scenario::{parse_scenario, validate, Scenario};
use photon_counting_cli::{figures, run};

#[derive(Parser)]
#[command(name = "pcount", version, about = "Photon-counting statistics of driven dissipative quantum systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Flux and noise of the configured ledgers.
    Cumulants(Opts),
    /// Parameter sweeps of both drive-mode fluxes.
    Scan(Opts),
    /// Photon-number distributions by inverse FFT.
    Distribution(Opts),
    /// Closed two-level statistics.
    Closed(Opts),
    /// Photon-conservation check between drive and bath ledgers.
    Conserve(Opts),
    /// Two-level stationary flux and noise sweeps.
    Fig2(Opts),
    /// Two-level photon distributions.
    Fig3(Opts),
    /// Lambda-system detuning sweep, perturbative and numeric side by side.
    Fig4(Opts),
    /// Lambda-system pump-amplitude sweep.
    Fig5(Opts),
}

#[derive(Args)]
struct Opts {
    /// Scenario file (TOML). Figure commands fall back to the shipped scenario.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    threads: Option<usize>,
    /// Method override: spectral-fd, charpoly, analytic-oracle, perturbation-theory, periodic-numeric.
    #[arg(long)]
    method: Option<String>,
}

fn invalid(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("invalid configuration:\n{msg}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, task, opts) = match &cli.command {
        Command::Cumulants(o) => ("cumulants", Some("cumulants"), o),
        Command::Scan(o) => ("scan", Some("scan"), o),
        Command::Distribution(o) => ("distribution", Some("distribution"), o),
        Command::Closed(o) => ("closed", Some("closed"), o),
        Command::Conserve(o) => ("conserve", Some("conserve"), o),
        Command::Fig2(o) => ("fig2", None, o),
        Command::Fig3(o) => ("fig3", None, o),
        Command::Fig4(o) => ("fig4", None, o),
        Command::Fig5(o) => ("fig5", None, o),
    };
    if let Some(n) = opts.threads {
        if n == 0 {
            return invalid("--threads must be positive");
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return invalid(e);
        }
    }
    let mut scenarios: Vec<Scenario> = match &opts.config {
        Some(path) => {
            let text = match std::fs::read_to_string(path) {
                Ok(t) => t,
                Err(e) => return invalid(format!("{}: {e}", path.display())),
            };
            match parse_scenario(&text) {
                Ok(s) => vec![s],
                Err(e) => return invalid(e),
            }
        }
        None => match figures::scenarios(name) {
            Some(Ok(s)) => s,
            Some(Err(e)) => return invalid(e),
            None => return invalid(format!("{name} needs --config")),
        },
    };
    for s in &mut scenarios {
        if let Some(t) = task {
            if s.task.kind() != t {
                return invalid(format!("task.kind is {:?} but the {name} command was given", s.task.kind()));
            }
        }
        if let Some(m) = &opts.method {
            match Method::parse(m) {
                Some(m) => s.methods = vec![m],
                None => return invalid(format!("unknown method {m:?}")),
            }
            if let Err(e) = validate(s) {
                return invalid(e);
            }
        }
    }
    let mut code = 0;
    for s in &scenarios {
        let out = opts.out.clone().or_else(|| s.output_dir.clone().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out"));
        match run(s, &out) {
            Ok(o) => {
                for m in &o.messages {
                    println!("{m}");
                }
                code = code.max(o.exit_code());
            }
            Err(e) => {
                eprintln!("error: {e}");
                code = code.max(1);
            }
        }
    }
    ExitCode::from(code as u8)
}
