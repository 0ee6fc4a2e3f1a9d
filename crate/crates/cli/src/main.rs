//! `dihedral-bridge`: seeded experiment driver over the LWE <-> EDCP
//! reduction graph.
//!
//! Exit codes: 0 when the experiment's acceptance gates pass, 1 on a
//! threshold failure, 2 when the configuration is rejected.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use dihedral_core::experiments::{
    emit_report, run, write_report, Experiment, OutputFormat, RunConfig, THREADS_ENV,
};
use dihedral_core::Error;

const EXPERIMENT_HELP: &str = "\
Experiments:
  roundtrip-cube       LWE -> G-EDCP by cube separation; per-repetition success rate
  roundtrip-ball       end-to-end LWE -> G-EDCP -> LWE -> brute-force recovery
  edcp2lwe-stats       G-EDCP -> LWE sample statistics (a' uniformity, error law)
  decisional-e2l       dEDCP -> dLWE: null uniformity and distinguisher advantage
  decisional-l2e       dLWE -> dEDCP: support-1 outputs, squared-weight j marginal
  grid-claims          randomized grid cell separation, both claims
  ball-claims          discretized ball intersection ratios
  variant-conversions  G<->U conversions, self-reduction, chained secret survival
  dcp-chain            G-EDCP -> DCP, narrow and wide branches
  math-checks          Poisson summation, tail bounds, sampler statistics

Thresholds (chi2_p_floor, tv_error, tv_pmf, sigma_slack, psf_rel_err, l2_tol,
min_recovery_rate, ball_ratio_floor) may be overridden via --param, as may
experiment-specific keys; run with a bogus key to list the valid ones.
The worker pool size is bounded by the DIHEDRAL_BRIDGE_THREADS variable.";

#[derive(Parser, Debug)]
#[command(name = "dihedral-bridge", version, about, after_help = EXPERIMENT_HELP)]
struct Cli {
    /// Experiment to run (see the list below).
    experiment: String,

    /// Base seed; trial i derives its own stream from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Number of trials; defaults to the experiment's acceptance sample size.
    #[arg(long)]
    trials: Option<u64>,

    /// Report format.
    #[arg(long, value_name = "json|csv", default_value = "json")]
    out: String,

    /// Report destination; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    out_path: Option<PathBuf>,

    /// Experiment parameter or threshold override, repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,

    /// Print a one-line summary to stderr in addition to the report.
    #[arg(long)]
    quiet: bool,
}

fn build_config(cli: &Cli) -> Result<(RunConfig, OutputFormat), Error> {
    let experiment: Experiment = cli.experiment.parse()?;
    let format: OutputFormat = cli.out.parse()?;
    let mut config = RunConfig::new(experiment, cli.seed);
    if let Some(trials) = cli.trials {
        config.trials = trials;
    }
    for pair in &cli.params {
        let (key, value) = pair.split_once('=').ok_or_else(|| {
            Error::Parameter(format!("--param expects KEY=VALUE, got '{pair}'"))
        })?;
        if config.params.insert(key.to_string(), value.to_string()).is_some() {
            return Err(Error::Parameter(format!("duplicate --param key '{key}'")));
        }
    }
    Ok((config, format))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (config, format) = match build_config(&cli) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let report = match run(&config) {
        Ok(report) => report,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let emitted = match &cli.out_path {
        Some(path) => emit_report(&report, format, path),
        None => write_report(&report, format, std::io::stdout().lock()),
    };
    if let Err(e) = emitted {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    if !cli.quiet {
        eprintln!(
            "{}: {} ({} trials, seed {}, {} ms, threads env {}={})",
            config.experiment.name(),
            if report.pass { "PASS" } else { "FAIL" },
            report.config.trials,
            report.config.seed,
            report.wall_time_ms,
            THREADS_ENV,
            std::env::var(THREADS_ENV).unwrap_or_else(|_| "unset".into()),
        );
    }
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
