//! Seeded, reproducible statistical experiments over the whole reduction
//! graph. Each experiment resolves its parameters (defaults overridable by
//! `key=value` pairs, unknown keys rejected), fans the base seed out per
//! trial, and folds per-trial records into aggregate statistics with a
//! pass/fail verdict against the central thresholds table.

pub mod report;
mod suites;

use std::collections::BTreeMap;
use std::str::FromStr;
use std::sync::OnceLock;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::rng::{rng_for_trial, SimRng};

pub use report::{
    emit_report, write_report, ConfigEcho, ExperimentReport, OutputFormat, TrialRecord,
};

/// Environment variable bounding the trial worker pool.
pub const THREADS_ENV: &str = "DIHEDRAL_BRIDGE_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    RoundtripCube,
    RoundtripBall,
    Edcp2LweStats,
    DecisionalE2L,
    DecisionalL2E,
    GridClaims,
    BallClaims,
    VariantConversions,
    DcpChain,
    MathChecks,
}

impl Experiment {
    pub const ALL: [Experiment; 10] = [
        Experiment::RoundtripCube,
        Experiment::RoundtripBall,
        Experiment::Edcp2LweStats,
        Experiment::DecisionalE2L,
        Experiment::DecisionalL2E,
        Experiment::GridClaims,
        Experiment::BallClaims,
        Experiment::VariantConversions,
        Experiment::DcpChain,
        Experiment::MathChecks,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::RoundtripCube => "roundtrip-cube",
            Experiment::RoundtripBall => "roundtrip-ball",
            Experiment::Edcp2LweStats => "edcp2lwe-stats",
            Experiment::DecisionalE2L => "decisional-e2l",
            Experiment::DecisionalL2E => "decisional-l2e",
            Experiment::GridClaims => "grid-claims",
            Experiment::BallClaims => "ball-claims",
            Experiment::VariantConversions => "variant-conversions",
            Experiment::DcpChain => "dcp-chain",
            Experiment::MathChecks => "math-checks",
        }
    }

    /// Default trial count matching the acceptance-criteria sample sizes.
    pub fn default_trials(&self) -> u64 {
        match self {
            Experiment::RoundtripCube => 500,
            Experiment::RoundtripBall => 100,
            Experiment::Edcp2LweStats => 10_000,
            Experiment::DecisionalE2L => 10_000,
            Experiment::DecisionalL2E => 10_000,
            Experiment::GridClaims => 10_000,
            Experiment::BallClaims => 9,
            Experiment::VariantConversions => 10_000,
            Experiment::DcpChain => 10_000,
            Experiment::MathChecks => 1,
        }
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .iter()
            .find(|e| e.name() == s)
            .copied()
            .ok_or_else(|| {
                let names: Vec<&str> = Experiment::ALL.iter().map(|e| e.name()).collect();
                Error::Parameter(format!("unknown experiment '{s}'; expected one of {names:?}"))
            })
    }
}

/// Central thresholds table; every value can be overridden through the
/// params map under the same key.
#[derive(Debug, Clone, Copy)]
pub struct Thresholds {
    /// Floor for every chi-square p-value.
    pub chi2_p_floor: f64,
    /// Ceiling for the total-variation distance of measured-error and
    /// j-marginal histograms against their exact laws.
    pub tv_error: f64,
    /// Ceiling for sampler-level TV checks.
    pub tv_pmf: f64,
    /// Gaussian-slack multiplier applied to binomial standard errors.
    pub sigma_slack: f64,
    /// Relative-error ceiling for the Poisson summation identity.
    pub psf_rel_err: f64,
    /// l2 tolerance for state comparisons.
    pub l2_tol: f64,
    /// Floor for the end-to-end round-trip recovery rate.
    pub min_recovery_rate: f64,
    /// Floor for the ball-intersection ratio inside the small-shift regime.
    pub ball_ratio_floor: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            chi2_p_floor: 0.001,
            tv_error: 0.05,
            tv_pmf: 0.01,
            sigma_slack: 3.0,
            psf_rel_err: 1e-9,
            l2_tol: 1e-9,
            min_recovery_rate: 0.8,
            ball_ratio_floor: 0.5,
        }
    }
}

impl Thresholds {
    const KEYS: [&'static str; 8] = [
        "chi2_p_floor",
        "tv_error",
        "tv_pmf",
        "sigma_slack",
        "psf_rel_err",
        "l2_tol",
        "min_recovery_rate",
        "ball_ratio_floor",
    ];

    fn apply(&mut self, reader: &mut ParamReader) -> Result<()> {
        self.chi2_p_floor = reader.read("chi2_p_floor", self.chi2_p_floor)?;
        self.tv_error = reader.read("tv_error", self.tv_error)?;
        self.tv_pmf = reader.read("tv_pmf", self.tv_pmf)?;
        self.sigma_slack = reader.read("sigma_slack", self.sigma_slack)?;
        self.psf_rel_err = reader.read("psf_rel_err", self.psf_rel_err)?;
        self.l2_tol = reader.read("l2_tol", self.l2_tol)?;
        self.min_recovery_rate = reader.read("min_recovery_rate", self.min_recovery_rate)?;
        self.ball_ratio_floor = reader.read("ball_ratio_floor", self.ball_ratio_floor)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub trials: u64,
    pub params: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn new(experiment: Experiment, seed: u64) -> Self {
        Self { experiment, seed, trials: experiment.default_trials(), params: BTreeMap::new() }
    }

    pub fn with_trials(mut self, trials: u64) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }
}

/// Reads typed parameters from the key/value map, recording which keys were
/// consumed and echoing resolved values; leftovers are a usage error.
pub(crate) struct ParamReader {
    map: BTreeMap<String, String>,
    resolved: BTreeMap<String, String>,
}

impl ParamReader {
    fn new(map: BTreeMap<String, String>) -> Self {
        Self { map, resolved: BTreeMap::new() }
    }

    pub fn read<T: FromStr + ToString>(&mut self, key: &str, default: T) -> Result<T> {
        let value = match self.map.remove(key) {
            Some(raw) => raw
                .parse::<T>()
                .map_err(|_| Error::Parameter(format!("cannot parse '{raw}' for param '{key}'")))?,
            None => default,
        };
        self.resolved.insert(key.to_string(), value.to_string());
        Ok(value)
    }

    fn finish(self) -> Result<BTreeMap<String, String>> {
        if let Some(unknown) = self.map.keys().next() {
            let mut known: Vec<&str> = self.resolved.keys().map(String::as_str).collect();
            known.extend(Thresholds::KEYS);
            return Err(Error::Parameter(format!(
                "unknown param '{unknown}'; this experiment accepts {known:?}"
            )));
        }
        Ok(self.resolved)
    }
}

/// Outcome of one experiment body: per-trial records, aggregates, verdict.
pub(crate) struct SuiteOutcome {
    pub trials: Vec<TrialRecord>,
    pub aggregates: BTreeMap<String, Value>,
    pub pass: bool,
}

impl SuiteOutcome {
    pub fn new() -> Self {
        Self { trials: Vec::new(), aggregates: BTreeMap::new(), pass: true }
    }

    pub fn agg(&mut self, key: &str, value: impl Into<Value>) {
        self.aggregates.insert(key.to_string(), value.into());
    }

    /// Records a gate: the aggregate value, its bound, and folds the
    /// comparison into the overall verdict.
    pub fn gate(&mut self, key: &str, value: f64, ok: bool) {
        self.agg(key, value);
        self.agg(&format!("{key}_ok"), ok);
        self.pass &= ok;
    }
}

fn worker_pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Ok(raw) = std::env::var(THREADS_ENV) {
            if let Ok(n) = raw.parse::<usize>() {
                builder = builder.num_threads(n.max(1));
            }
        }
        builder.build().expect("worker pool")
    })
}

/// Runs `count` independent trials on the worker pool, each on its derived
/// seed; results come back in trial order, so folds are deterministic
/// regardless of the pool size.
pub(crate) fn run_trials<T: Send>(
    seed: u64,
    count: u64,
    body: impl Fn(u64, &mut SimRng) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    worker_pool().install(|| {
        (0..count)
            .into_par_iter()
            .map(|i| {
                let mut rng = rng_for_trial(seed, i);
                body(i, &mut rng)
            })
            .collect()
    })
}

/// Executes the configured experiment and assembles the report.
pub fn run(config: &RunConfig) -> Result<ExperimentReport> {
    if config.trials == 0 {
        return Err(Error::Parameter("trials must be >= 1".into()));
    }
    let started = Instant::now();
    let mut reader = ParamReader::new(config.params.clone());
    let mut thresholds = Thresholds::default();
    thresholds.apply(&mut reader)?;
    let outcome = match config.experiment {
        Experiment::MathChecks => suites::math_checks(config, &mut reader, &thresholds)?,
        Experiment::GridClaims => suites::grid_claims(config, &mut reader, &thresholds)?,
        Experiment::BallClaims => suites::ball_claims(config, &mut reader, &thresholds)?,
        Experiment::Edcp2LweStats => suites::edcp2lwe_stats(config, &mut reader, &thresholds)?,
        Experiment::DecisionalE2L => suites::decisional_e2l(config, &mut reader, &thresholds)?,
        Experiment::DecisionalL2E => suites::decisional_l2e(config, &mut reader, &thresholds)?,
        Experiment::RoundtripCube => suites::roundtrip_cube(config, &mut reader, &thresholds)?,
        Experiment::RoundtripBall => suites::roundtrip_ball(config, &mut reader, &thresholds)?,
        Experiment::VariantConversions => {
            suites::variant_conversions(config, &mut reader, &thresholds)?
        }
        Experiment::DcpChain => suites::dcp_chain(config, &mut reader, &thresholds)?,
    };
    let params = reader.finish()?;
    Ok(ExperimentReport {
        config: ConfigEcho {
            experiment: config.experiment.name().to_string(),
            seed: config.seed,
            trials: config.trials,
            params,
        },
        trials: outcome.trials,
        aggregates: outcome.aggregates,
        pass: outcome.pass,
        wall_time_ms: started.elapsed().as_millis() as u64,
    })
}
