//! Acceptance suite: one test per criterion, every tolerance pinned in
//! code, one printed pass/fail line each. Run with
//! `cargo test --test acceptance -- --nocapture` to see the lines live.

use std::f64::consts::PI;
use std::sync::{Mutex, MutexGuard};

use dihedral_core::experiments::{run, Experiment, ExperimentReport, RunConfig};

/// The runtime ceilings are per-criterion budgets, so criteria execute one
/// at a time regardless of the harness thread count.
static EXCLUSIVE: Mutex<()> = Mutex::new(());

fn exclusive() -> MutexGuard<'static, ()> {
    EXCLUSIVE.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}
use dihedral_core::gaussian::{
    poisson_check, tail_ratio, GaussianParam, WeightFn,
};
use dihedral_core::rng::rng_from_seed;
use dihedral_core::statevector::{Direction, Register, RegisterLayout, SparseState};
use dihedral_core::stats::{binomial_sigma, chi2_test};

struct Criterion {
    number: u32,
    what: &'static str,
    checks: Vec<(String, bool)>,
}

impl Criterion {
    fn new(number: u32, what: &'static str) -> Self {
        Self { number, what, checks: Vec::new() }
    }

    fn check(&mut self, what: impl Into<String>, ok: bool) -> &mut Self {
        self.checks.push((what.into(), ok));
        self
    }

    fn finish(self) {
        let ok = self.checks.iter().all(|(_, ok)| *ok);
        println!(
            "[{}] criterion {:>2}: {}",
            if ok { "PASS" } else { "FAIL" },
            self.number,
            self.what
        );
        for (what, ok) in &self.checks {
            if !ok {
                println!("        failed: {what}");
            }
        }
        assert!(ok, "criterion {} failed", self.number);
    }
}

fn run_report(experiment: Experiment, seed: u64, trials: u64) -> ExperimentReport {
    run(&RunConfig::new(experiment, seed).with_trials(trials)).expect("experiment runs")
}

fn agg(report: &ExperimentReport, key: &str) -> f64 {
    report
        .aggregate_f64(key)
        .or_else(|| report.aggregate_bool(key).map(|b| b as u8 as f64))
        .unwrap_or_else(|| panic!("missing aggregate {key}"))
}

/// 1. Poisson summation: lhs/rhs relative error <= 1e-9 across the grid.
#[test]
fn criterion_01_poisson_summation() {
    let _exclusive = exclusive();
    let mut c = Criterion::new(1, "Poisson summation identity on the r/u/scale grid");
    let started = std::time::Instant::now();
    let mut max_rel = 0.0f64;
    for r in [0.5, 1.0, 3.0] {
        for u in [0.0, 0.25, 0.5] {
            for scale in [1.0, 2.0] {
                let (lhs, rhs) = poisson_check(r, u, scale).unwrap();
                max_rel = max_rel.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()));
            }
        }
    }
    c.check(format!("max relative error {max_rel:.3e} <= 1e-9"), max_rel <= 1e-9);
    c.check("runtime < 1 s", started.elapsed().as_secs_f64() < 1.0);
    c.finish();
}

/// 2. Gaussian tail strictly below the explicit constant on the 20-point grid.
#[test]
fn criterion_02_gaussian_tail_bound() {
    let _exclusive = exclusive();
    let mut c = Criterion::new(2, "tail mass under 2 exp(-(3/4) pi (sqrt(k) r + 1)^2 / (4 r^2))");
    let started = std::time::Instant::now();
    for r in [0.5, 1.0, 2.0, 4.0, 8.0] {
        for kappa in [1u32, 4, 16, 64] {
            let g = GaussianParam::new(r, kappa).unwrap();
            let ratio = tail_ratio(&g);
            let bound = 2.0 * (-(3.0 / 4.0) * PI * ((kappa as f64).sqrt() * r + 1.0).powi(2)
                / (4.0 * r * r))
                .exp();
            c.check(format!("r={r} kappa={kappa}: {ratio:.3e} < {bound:.3e}"), ratio < bound);
        }
    }
    c.check("runtime < 1 s", started.elapsed().as_secs_f64() < 1.0);
    c.finish();
}

/// 3. Simulator suite: unitarity, involution, Born-rule chi-square.
#[test]
fn criterion_03_qft_simulator_suite() {
    let _exclusive = exclusive();
    let mut c = Criterion::new(3, "QFT unitarity/involution and Born-rule statistics");
    let started = std::time::Instant::now();
    let mut setup = rng_from_seed(301);
    use rand::Rng;
    let mut worst_norm = 0.0f64;
    let mut worst_roundtrip = 0.0f64;
    for case in 0..100 {
        let modulus = [2u64, 3, 8, 17][case % 4];
        let layout = RegisterLayout::new(vec![Register::Mod { modulus, arity: 1 }]).unwrap();
        let entries: std::collections::BTreeMap<Vec<i64>, num_complex::Complex64> = (0..20)
            .map(|_| {
                (
                    vec![setup.random_range(0..modulus as i64)],
                    num_complex::Complex64::new(
                        setup.random::<f64>() - 0.5,
                        setup.random::<f64>() - 0.5,
                    ),
                )
            })
            .collect();
        let state = SparseState::from_amplitudes(layout, entries).unwrap();
        let forward = state.clone().qft_mod(0, Direction::Forward).unwrap();
        worst_norm = worst_norm.max((forward.norm() - 1.0).abs());
        let back = forward.qft_mod(0, Direction::Inverse).unwrap();
        worst_roundtrip = worst_roundtrip.max(state.l2_distance(&back).unwrap());
    }
    c.check(format!("norm drift {worst_norm:.2e} <= 1e-12"), worst_norm <= 1e-12);
    c.check(
        format!("involution distance {worst_roundtrip:.2e} <= 1e-12"),
        worst_roundtrip <= 1e-12,
    );

    // Born rule: 1e5 shots against the exact squared marginal.
    let modulus = 8u64;
    let layout = RegisterLayout::new(vec![Register::Mod { modulus, arity: 1 }]).unwrap();
    let entries: Vec<(Vec<i64>, num_complex::Complex64)> = (0..8i64)
        .map(|x| {
            (vec![x], num_complex::Complex64::new(setup.random::<f64>() + 0.1, setup.random::<f64>()))
        })
        .collect();
    let state = SparseState::from_amplitudes(layout, entries).unwrap();
    let probs: Vec<f64> = (0..8i64).map(|x| state.amplitude(&[x]).norm_sqr()).collect();
    let mut counts = vec![0u64; 8];
    let mut rng = rng_from_seed(302);
    for _ in 0..100_000u64 {
        let out = state.clone().measure(0, &mut rng).unwrap();
        counts[out.value[0] as usize] += 1;
    }
    let p = chi2_test(&counts, &probs).unwrap();
    c.check(format!("Born-rule chi-square p = {p:.4} > 0.001"), p > 0.001);
    c.check("runtime < 30 s", started.elapsed().as_secs_f64() < 30.0);
    c.finish();
}

/// 4. Rejection sampling: empirical accept rate equals ||p||^2 within
///    3 sigma over 1e4 trials, for five weight pairs.
#[test]
fn criterion_04_rejection_sampling() {
    let _exclusive = exclusive();
    let mut c = Criterion::new(4, "rejection accept rate = ||p||^2 within 3 sigma, 5 pairs");
    let started = std::time::Instant::now();
    let trials = 10_000u64;
    let mut rng = rng_from_seed(400);

    let uniform_state = |m: u64| {
        let layout =
            RegisterLayout::new(vec![Register::Int { min: 0, max: m as i64 - 1 }]).unwrap();
        SparseState::prepare_weighted(layout, &WeightFn::Uniform(m)).unwrap()
    };
    let gaussian_state = |r: f64, kappa: u32| {
        let g = GaussianParam::new(r, kappa).unwrap();
        let layout =
            RegisterLayout::new(vec![Register::Int { min: -g.cutoff, max: g.cutoff }]).unwrap();
        SparseState::prepare_weighted(layout, &WeightFn::Gaussian(g)).unwrap()
    };

    // (label, state, target weight function)
    type WeightPair = (&'static str, SparseState, Box<dyn Fn(&[i64]) -> f64>);
    let pairs: Vec<WeightPair> = vec![
        ("identity on uniform(4)", uniform_state(4), Box::new(|_| 0.5)),
        (
            "uniform(8) -> uniform(4)",
            uniform_state(8),
            Box::new(|l| if l[0] < 4 { 1.0 / 8.0f64.sqrt() } else { 0.0 }),
        ),
        ("gaussian(2) -> flat window", gaussian_state(2.0, 64), {
            let s = gaussian_state(2.0, 64);
            let cap = s.amplitude(&[3]).re;
            Box::new(move |l| if (0..=3).contains(&l[0]) { cap } else { 0.0 })
        }),
        ("gaussian(4) -> gaussian(2)", gaussian_state(4.0, 16), {
            let s = gaussian_state(4.0, 16);
            let a0 = s.amplitude(&[0]).re;
            Box::new(move |l| a0 * (-PI * (l[0] * l[0]) as f64 / 4.0).exp())
        }),
        ("uniform(8) -> gaussian(2)", uniform_state(8), {
            Box::new(move |l| (1.0 / 8.0f64.sqrt()) * (-PI * (l[0] * l[0]) as f64 / 4.0).exp())
        }),
    ];
    for (label, state, p) in pairs {
        let expected = state.rejection_accept_probability(&p).unwrap();
        let mut accepts = 0u64;
        for _ in 0..trials {
            let (ok, _) = state.clone().rejection_resample(&p, &mut rng).unwrap();
            accepts += ok as u64;
        }
        let rate = accepts as f64 / trials as f64;
        let sigma = binomial_sigma(expected, trials).max(1e-4);
        c.check(
            format!("{label}: rate {rate:.4} vs ||p||^2 {expected:.4} (3 sigma {:.4})", 3.0 * sigma),
            (rate - expected).abs() <= 3.0 * sigma,
        );
    }
    c.check("runtime < 30 s", started.elapsed().as_secs_f64() < 30.0);
    c.finish();
}

/// 5. Grid separation: claim-1 same-cell rate over 1e4 offset resamples at the
///    boundary error magnitude, claim-2 exhaustive separation.
#[test]
fn criterion_05_grid_separation() {
    let _exclusive = exclusive();
    let mut c = Criterion::new(5, "cube-separation grid, both claims");
    let started = std::time::Instant::now();
    let report = run_report(Experiment::GridClaims, 501, 10_000);
    c.check(
        format!(
            "claim 1 same-cell rate {:.4} >= (1-1/k)^m - 3 sigma = {:.4}",
            agg(&report, "claim1_same_cell_rate"),
            agg(&report, "claim1_floor")
        ),
        agg(&report, "claim1_same_cell_rate_ok") == 1.0,
    );
    c.check(
        format!("claim 2 violations = {}", agg(&report, "claim2_violations")),
        agg(&report, "claim2_violations") == 0.0,
    );
    c.check("experiment verdict", report.pass);
    c.check("runtime < 2 min", started.elapsed().as_secs_f64() < 120.0);
    c.finish();
}

/// 6. Ball intersection: exact ratio 1 at zero shift, monotone in the
///    shift, above 1/2 in the small-shift regime, m in {1,2,3}.
#[test]
fn criterion_06_ball_intersection() {
    let _exclusive = exclusive();
    let mut c = Criterion::new(6, "discretized ball intersection ratios");
    let started = std::time::Instant::now();
    let report = run_report(Experiment::BallClaims, 601, 9);
    c.check("ratio = 1 at zero shift", agg(&report, "zero_shift_ratio_one") == 1.0);
    c.check("monotone nonincreasing in the shift", agg(&report, "monotone_nonincreasing") == 1.0);
    for m in 1..=3 {
        c.check(
            format!(
                "m={m}: ratio {:.4} >= 0.5 at sqrt(m)||d||/R = 0.25",
                agg(&report, &format!("ratio_small_shift_m{m}"))
            ),
            agg(&report, &format!("ratio_small_shift_m{m}")) >= 0.5,
        );
    }
    c.check("experiment verdict", report.pass);
    c.check("runtime < 1 min", started.elapsed().as_secs_f64() < 60.0);
    c.finish();
}

/// 7. EDCP -> LWE statistics at (n=1, N=64, r=8), 1e4 runs: uniform a',
///    error histogram within TV 0.05 of the exact measurement law (the
///    squared folded Gaussian of width N/r predicted by Poisson summation).
#[test]
fn criterion_07_edcp_to_lwe_statistics() {
    let _exclusive = exclusive();
    let mut c = Criterion::new(7, "EDCP->LWE sample statistics (n=1, N=64, r=8)");
    let started = std::time::Instant::now();
    let report = run_report(Experiment::Edcp2LweStats, 701, 10_000);
    c.check(
        format!("a' uniform: chi-square p = {:.4} > 0.001", agg(&report, "chi2_p_a_prime")),
        agg(&report, "chi2_p_a_prime_ok") == 1.0,
    );
    c.check(
        format!(
            "error TV vs exact D_(Z,N/r)-amplitude measurement law = {:.4} <= 0.05 \
             (vs the rho_(N/r) width-label pmf itself: {:.4})",
            agg(&report, "tv_error_vs_exact_law"),
            agg(&report, "tv_error_vs_width_label_info")
        ),
        agg(&report, "tv_error_vs_exact_law_ok") == 1.0,
    );
    c.check("experiment verdict", report.pass);
    c.check("runtime < 2 min", started.elapsed().as_secs_f64() < 120.0);
    c.finish();
}

/// 8. Decisional EDCP -> LWE: null inputs give uniform pairs.
#[test]
fn criterion_08_decisional_edcp_to_lwe() {
    let _exclusive = exclusive();
    let mut c = Criterion::new(8, "null inputs produce uniform (a, b) pairs");
    let started = std::time::Instant::now();
    let report = run_report(Experiment::DecisionalE2L, 801, 10_000);
    for key in ["chi2_p_a", "chi2_p_b", "chi2_p_joint"] {
        c.check(
            format!("{key} = {:.4} > 0.001", agg(&report, key)),
            agg(&report, &format!("{key}_ok")) == 1.0,
        );
    }
    c.check(
        format!(
            "distinguisher advantage on EDCP batches {:.3} >= 0.5",
            agg(&report, "distinguisher_advantage")
        ),
        agg(&report, "distinguisher_advantage_ok") == 1.0,
    );
    c.check("experiment verdict", report.pass);
    c.check("runtime < 1 min", started.elapsed().as_secs_f64() < 60.0);
    c.finish();
}

/// 9. LWE -> EDCP by cube separation at (n=1, q=64, m=6, alpha q=1,
///    kappa=4, k=12, r=1): per-repetition success above (1-1/k)^m - 3 sigma
///    and every success passes the white-box verifier.
#[test]
fn criterion_09_cube_reduction() {
    let _exclusive = exclusive();
    let mut c = Criterion::new(9, "cube reduction success rate and verification");
    let started = std::time::Instant::now();
    let report = run_report(Experiment::RoundtripCube, 901, 500);
    c.check(
        format!(
            "per-repetition success {:.4} >= {:.4}",
            agg(&report, "rep_success_rate"),
            agg(&report, "success_floor")
        ),
        agg(&report, "rep_success_rate_ok") == 1.0,
    );
    c.check(
        "every success passes verify_edcp_state",
        agg(&report, "all_successes_verified") == 1.0,
    );
    c.check("experiment verdict", report.pass);
    c.check("runtime < 5 min", started.elapsed().as_secs_f64() < 300.0);
    c.finish();
}

/// 10. End-to-end round trip at the reference point (q=4096, n=1, m=10,
///     alpha q=1, kappa=4, ell=4, r=2): the brute-force oracle recovers s0
///     in at least 80% of 100 seeded runs.
#[test]
fn criterion_10_roundtrip_recovery() {
    let _exclusive = exclusive();
    let mut c = Criterion::new(10, "ball round trip recovers the planted secret");
    let started = std::time::Instant::now();
    let report = run_report(Experiment::RoundtripBall, 1001, 100);
    c.check(
        format!("recovery rate {:.3} >= 0.8", agg(&report, "recovery_rate")),
        agg(&report, "recovery_rate_ok") == 1.0,
    );
    c.check("experiment verdict", report.pass);
    c.check("runtime < 10 min", started.elapsed().as_secs_f64() < 600.0);
    c.finish();
}

/// 11. Decisional LWE -> EDCP: uniform pairs collapse to one-point states
///     whose shift marginal matches the squared weight law within TV 0.05.
#[test]
fn criterion_11_decisional_lwe_to_edcp() {
    let _exclusive = exclusive();
    let mut c = Criterion::new(11, "uniform pairs give support-1 outputs, j ~ rho_r^2");
    let started = std::time::Instant::now();
    let report = run_report(Experiment::DecisionalL2E, 1101, 10_000);
    c.check(
        format!("support-1 violations = {}", agg(&report, "support_one_violations")),
        agg(&report, "support_one_violations_ok") == 1.0,
    );
    c.check(
        format!("j-marginal TV {:.4} <= 0.05", agg(&report, "tv_j_marginal")),
        agg(&report, "tv_j_marginal_ok") == 1.0,
    );
    c.check(
        format!(
            "planted pairs verify as EDCP states (rate {:.3})",
            agg(&report, "planted_verified_rate")
        ),
        agg(&report, "planted_verified_rate_ok") == 1.0,
    );
    c.check("experiment verdict", report.pass);
    c.check("runtime < 2 min", started.elapsed().as_secs_f64() < 120.0);
    c.finish();
}

/// 12. Variant conversions: white-box validity of every accepted output,
///     the narrow-branch DCP acceptance floor at (N=15, r=2), and secret
///     survival through the chained G -> U -> G conversion.
#[test]
fn criterion_12_variant_conversions() {
    let _exclusive = exclusive();
    let mut c = Criterion::new(12, "variant conversions and the DCP chain");
    let started = std::time::Instant::now();
    let conv = run_report(Experiment::VariantConversions, 1201, 10_000);
    c.check("G->U accepted outputs verify", agg(&conv, "g2u_all_accepted_valid") == 1.0);
    c.check(
        format!(
            "G->U accept rate {:.4} matches analytic {:.4}",
            agg(&conv, "g2u_accept_rate"),
            agg(&conv, "g2u_accept_analytic")
        ),
        agg(&conv, "g2u_accept_rate_ok") == 1.0,
    );
    c.check(
        "U->G accepted outputs within the truncation tail bound",
        agg(&conv, "u2g_all_accepted_within_tail_bound") == 1.0,
    );
    c.check("self-reduction preserves the secret", agg(&conv, "self_reduce_secret_preserved") == 1.0);
    c.check(
        format!(
            "chained G->U->G preserved the secret in all {} accepted runs",
            agg(&conv, "chain_accepts")
        ),
        agg(&conv, "chain_secret_preserved") == 1.0 && agg(&conv, "chain_accepts") >= 1.0,
    );
    c.check("conversions verdict", conv.pass);

    let dcp = run_report(Experiment::DcpChain, 1202, 10_000);
    c.check(
        format!(
            "narrow-branch Pr[v=1] = {:.4} >= 2 e^(-2 pi / r^2) / (r/sqrt2 + 1) - 3 sigma = {:.4}",
            agg(&dcp, "narrow_v1_rate"),
            agg(&dcp, "narrow_floor")
        ),
        agg(&dcp, "narrow_v1_rate_ok") == 1.0,
    );
    c.check("narrow-branch outputs carry 2s mod N", agg(&dcp, "narrow_all_accepted_valid") == 1.0);
    c.check(
        format!("wide branch accepted {} times, all valid", agg(&dcp, "wide_accepts")),
        agg(&dcp, "wide_all_accepted_valid") == 1.0 && agg(&dcp, "wide_accepts") >= 1.0,
    );
    c.check("joint DCP solves recover the secret", agg(&dcp, "demo_recoveries_ok") == 1.0);
    c.check("dcp-chain verdict", dcp.pass);
    c.check("runtime < 5 min", started.elapsed().as_secs_f64() < 300.0);
    c.finish();
}

/// 13. Determinism: every suite rerun with the same seed reproduces its
///     per-trial records and aggregates bit-for-bit.
#[test]
fn criterion_13_determinism() {
    let _exclusive = exclusive();
    let mut c = Criterion::new(13, "seeded reruns reproduce aggregates bit-for-bit");
    let quick_trials = |e: Experiment| match e {
        Experiment::RoundtripCube => 40,
        Experiment::RoundtripBall => 2,
        Experiment::DecisionalL2E => 60,
        Experiment::BallClaims => 9,
        Experiment::MathChecks => 1,
        Experiment::DecisionalE2L => 200,
        _ => 300,
    };
    for experiment in Experiment::ALL {
        let mut config = RunConfig::new(experiment, 1301).with_trials(quick_trials(experiment));
        if experiment == Experiment::DecisionalE2L {
            config = config.with_param("adv_reps", 4);
        }
        if experiment == Experiment::DecisionalL2E {
            config = config.with_param("planted_reps", 10);
        }
        if experiment == Experiment::DcpChain {
            config = config.with_param("demos", 2);
        }
        let strip = |mut r: ExperimentReport| {
            r.wall_time_ms = 0;
            serde_json::to_string(&r).unwrap()
        };
        let first = strip(run(&config).unwrap());
        let second = strip(run(&config).unwrap());
        c.check(format!("{} reproduces", experiment.name()), first == second);
        let mut other = config.clone();
        other.seed = 1302;
        let third = strip(run(&other).unwrap());
        c.check(
            format!("{} responds to the seed", experiment.name()),
            first != third,
        );
    }
    c.finish();
}
