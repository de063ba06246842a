//! `krein-lab`: rank-one perturbations, spectral shift functions and
//! Anderson-model experiments from the command line.
//!
//! Exit status: 0 when every asserted check passes, 1 when a check fails,
//! 2 for malformed input, 3 when a numerical method does not converge.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod output;
mod plot;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use krein_lab::verify::{CheckResult, CheckStatus};

use commands::*;

#[derive(Parser)]
#[command(name = "krein-lab", version, about = "Spectral theory of rank-one and Anderson-type perturbations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spectral measure of the rank-one family at coupling alpha
    Perturb(PerturbArgs),
    /// Spectral shift function of a rank-one family
    Shift(ShiftArgs),
    /// Measures mu and nu from a shift function
    Reconstruct(ReconstructArgs),
    /// Replace the singular spectrum on an open set by absolutely continuous spectrum
    Surgery(SurgeryArgs),
    /// Monte Carlo estimates of the deterministic spectral sets
    Anderson(AndersonArgs),
    /// Seeded property suites
    Verify(VerifyArgs),
    /// Render CSV series as SVG
    Plot(PlotArgs),
    /// Run a scenario file
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<krein_lab::Error>() {
        Some(krein_lab::Error::Numeric(_) | krein_lab::Error::Accuracy(_)) => 3,
        _ => 2,
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("KREIN_LAB_THREADS") else { return Ok(()) };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| format!("KREIN_LAB_THREADS={raw:?} is not a positive integer"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    let result = match &cli.command {
        Command::Perturb(a) => perturb(a),
        Command::Shift(a) => shift(a),
        Command::Reconstruct(a) => reconstruct(a),
        Command::Surgery(a) => surgery(a),
        Command::Anderson(a) => anderson(a),
        Command::Verify(a) => verify(a),
        Command::Plot(a) => plot(a),
        Command::Run { config } => run_scenario(config),
    };
    match result {
        Ok(checks) => {
            for c in &checks {
                eprintln!("{}", c.summary_line());
            }
            ExitCode::from(checks_code(&checks))
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn checks_code(checks: &[CheckResult]) -> u8 {
    if checks.iter().any(|c| c.status == CheckStatus::NonConvergence) {
        3
    } else if checks.iter().all(CheckResult::passed) {
        0
    } else {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(status: CheckStatus) -> CheckResult {
        CheckResult { suite: "s".into(), name: "n".into(), status, value: None, bound: 0.0, detail: String::new() }
    }

    #[test]
    fn error_classes_map_to_exit_codes() {
        let code = |e: krein_lab::Error| exit_code(&anyhow::Error::new(e));
        assert_eq!(code(krein_lab::Error::Numeric("x".into())), 3);
        assert_eq!(code(krein_lab::Error::Accuracy("x".into())), 3);
        assert_eq!(code(krein_lab::Error::Argument("x".into())), 2);
        assert_eq!(code(krein_lab::Error::Construction("x".into())), 2);
        assert_eq!(exit_code(&anyhow::anyhow!("io")), 2);
        let wrapped = anyhow::Error::new(krein_lab::Error::Numeric("x".into())).context("while reading");
        assert_eq!(exit_code(&wrapped), 3);
    }

    #[test]
    fn check_statuses_map_to_exit_codes() {
        assert_eq!(checks_code(&[]), 0);
        assert_eq!(checks_code(&[result(CheckStatus::Pass)]), 0);
        assert_eq!(checks_code(&[result(CheckStatus::Pass), result(CheckStatus::Fail)]), 1);
        assert_eq!(checks_code(&[result(CheckStatus::Error)]), 1);
        assert_eq!(checks_code(&[result(CheckStatus::Fail), result(CheckStatus::NonConvergence)]), 3);
    }
}
