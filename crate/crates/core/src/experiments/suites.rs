//! The experiment bodies, one per CLI subcommand.

use std::collections::HashMap;

use rand::Rng;

use crate::edcp::{
    classify_edcp_state, gen_decisional_null, gen_edcp, gen_lwe, gen_uniform_pair,
    verify_edcp_state, EdcpParams, LweParams,
};
use crate::error::{Error, Result};
use crate::gaussian::{
    poisson_check, rho1, tail_ratio, vector_tail_check, DiscreteGaussian, GaussianParam,
    TabulatedDist, WeightFn,
};
use crate::oracles::{
    distinguish_lwe_bruteforce, edcp_error_law, solve_dcp_whitebox, solve_lwe_bruteforce,
    Hypothesis,
};
use crate::qary::{center, image_is_injective, lambda1_inf, QaryBasisSpec};
use crate::reductions::{
    ball_intersection_ratio, dcp_secret_preimages, edcp_self_reduce, edcp_to_lwe_sample, g_to_u,
    gedcp_to_dcp, grid_fn, lwe_to_edcp_ball, u_to_g, BallParams, CubeContext, CubeParams,
    GridSpec,
};
use crate::rng::{rng_for_trial, SimRng};
use crate::stats::{binomial_sigma, chi2_uniform_test, tv_counts_vs_pmf};

use super::{run_trials, ParamReader, RunConfig, SuiteOutcome, Thresholds, TrialRecord};

/// Seed stream indices reserved for setup (instances, fixed randomness),
/// far away from the 0..trials trial streams.
const SETUP_STREAM: u64 = u64::MAX;

// ---------------------------------------------------------------------------
// math-checks
// ---------------------------------------------------------------------------

pub(super) fn math_checks(
    config: &RunConfig,
    reader: &mut ParamReader,
    th: &Thresholds,
) -> Result<SuiteOutcome> {
    let draws: u64 = reader.read("draws", 200_000u64)?;
    let mut out = SuiteOutcome::new();

    // Poisson summation identity across the reference grid.
    let mut psf_max_rel = 0.0f64;
    for r in [0.5, 1.0, 3.0] {
        for u in [0.0, 0.25, 0.5] {
            for scale in [1.0, 2.0] {
                let (lhs, rhs) = poisson_check(r, u, scale)?;
                let rel = (lhs - rhs).abs() / lhs.abs().max(rhs.abs());
                psf_max_rel = psf_max_rel.max(rel);
            }
        }
    }
    out.gate("psf_max_rel_err", psf_max_rel, psf_max_rel <= th.psf_rel_err);

    // Tail mass strictly below the explicit bound on the 20-point grid.
    let mut tail_margin_min = f64::INFINITY;
    for r in [0.5, 1.0, 2.0, 4.0, 8.0] {
        for kappa in [1u32, 4, 16, 64] {
            let g = GaussianParam::new(r, kappa)?;
            tail_margin_min = tail_margin_min.min(g.tail_bound() - tail_ratio(&g));
        }
    }
    out.gate("tail_margin_min", tail_margin_min, tail_margin_min > 0.0);

    // Weight-function shape: symmetric, strictly decreasing in |j|.
    let mut shape_ok = true;
    for r in [0.5, 1.0, 2.0, 8.0] {
        for j in 1..32i64 {
            let here = rho1(r, j as f64);
            let prev = rho1(r, (j - 1) as f64);
            shape_ok &= here == rho1(r, -j as f64) && (prev == 0.0 || here < prev);
        }
    }
    out.agg("rho_shape_ok", shape_ok);
    out.pass &= shape_ok;

    // Randomized per-trial checks: sampler TV and the shifted-tail bound.
    let results = run_trials(config.seed, config.trials, |i, rng| {
        let g = GaussianParam::new(2.0, 64)?;
        let sampler = DiscreteGaussian::new(g);
        let mut counts = vec![0u64; (2 * g.cutoff + 1) as usize];
        for _ in 0..draws {
            counts[(sampler.sample(rng) + g.cutoff) as usize] += 1;
        }
        let probs: Vec<f64> = (-g.cutoff..=g.cutoff).map(|j| sampler.pmf(j)).collect();
        let tv = tv_counts_vs_pmf(&counts, &probs)?;
        let tail = vector_tail_check(1, 3.0, &[0.0], draws.min(50_000), rng)?;
        Ok(TrialRecord::new(i).with("sampler_tv", tv).with("tail_ratio_1d", tail.ratio))
    })?;
    let tv_max = results.iter().map(|t| t.values["sampler_tv"]).fold(0.0, f64::max);
    let tail_max = results.iter().map(|t| t.values["tail_ratio_1d"]).fold(0.0, f64::max);
    out.trials = results;
    out.gate("sampler_tv_max", tv_max, tv_max <= th.tv_pmf);
    out.gate("tail_ratio_1d_max", tail_max, tail_max < 0.09);
    Ok(out)
}

// ---------------------------------------------------------------------------
// grid-claims
// ---------------------------------------------------------------------------

/// Draws an instance whose l-infinity minimum supports the grid-width
/// precondition `z in [lambda/c, lambda/2]`. The separation claim further
/// needs `x -> Ax` injective (a nonzero kernel makes distinct secrets share
/// exact positions, which no grid can distinguish).
fn conforming_matrix(
    q: u64,
    m: usize,
    n: usize,
    c: u64,
    require_injective: bool,
    rng: &mut SimRng,
) -> Result<(QaryBasisSpec, u64)> {
    for _ in 0..10_000 {
        let spec = QaryBasisSpec::uniform(q, m, n, rng)?;
        let lambda = lambda1_inf(&spec)?.lambda1_inf;
        if lambda as f64 >= 2.0 * q as f64 / c as f64
            && (!require_injective || image_is_injective(&spec)?)
        {
            return Ok((spec, lambda));
        }
    }
    Err(Error::Retry("no instance with a large enough minimum found"))
}

pub(super) fn grid_claims(
    config: &RunConfig,
    reader: &mut ParamReader,
    th: &Thresholds,
) -> Result<SuiteOutcome> {
    let q: u64 = reader.read("q", 64u64)?;
    let c: u64 = reader.read("c", 8u64)?;
    let k: u64 = reader.read("k", 12u64)?;
    let m: usize = reader.read("m", 6usize)?;
    let w_draws2: u64 = reader.read("claim2_w_draws", 3u64)?;
    let mut out = SuiteOutcome::new();

    // Claim 1: same-cell rate for a cluster of width exactly the boundary
    // error magnitude lambda/(2ck), over fresh grid offsets.
    let mut setup = rng_for_trial(config.seed, SETUP_STREAM);
    let (spec, lambda) = conforming_matrix(q, m, 1, c, false, &mut setup)?;
    out.agg("lambda_inf", lambda as f64);
    let bound = lambda as f64 / (2.0 * c as f64 * k as f64);
    let x: u64 = setup.random_range(0..q);
    let ax: Vec<f64> = spec.a.iter().map(|row| (row[0] * x % q) as f64).collect();
    let u_point: Vec<f64> = ax.iter().map(|v| v + bound).collect();
    let v_point: Vec<f64> = ax.iter().map(|v| v - bound).collect();
    let results = run_trials(config.seed, config.trials, |i, rng| {
        let grid = GridSpec::sample(q, c, k, m, rng)?;
        let same = grid_fn(&u_point, &grid) == grid_fn(&v_point, &grid);
        Ok(TrialRecord::new(i).with("same_cell", same as u8 as f64))
    })?;
    let same_rate = results.iter().map(|t| t.values["same_cell"]).sum::<f64>()
        / results.len() as f64;
    out.trials = results;
    let target = (1.0 - 1.0 / k as f64).powi(m as i32);
    let floor = target - th.sigma_slack * binomial_sigma(target, config.trials);
    out.agg("claim1_floor", floor);
    out.gate("claim1_same_cell_rate", same_rate, same_rate >= floor);

    // Claim 2: exhaustive small-case check that distinct secrets never
    // share a cell, over an error grid at the boundary magnitude.
    let (q2, c2, k2, m2) = (32u64, 8u64, 6u64, 3usize);
    let (spec2, lambda2) = conforming_matrix(q2, m2, 1, c2, true, &mut setup)?;
    let bound2 = lambda2 as f64 / (2.0 * c2 as f64 * k2 as f64);
    let err_values = [-bound2, -bound2 / 2.0, 0.0, bound2 / 2.0, bound2];
    let mut violations = 0u64;
    for _ in 0..w_draws2 {
        let grid = GridSpec::sample(q2, c2, k2, m2, &mut setup)?;
        // cell -> first secret seen there; a second secret in the same cell
        // is a violation.
        let mut cells: HashMap<Vec<i64>, u64> = HashMap::new();
        for x in 0..q2 {
            let ax: Vec<f64> = spec2.a.iter().map(|row| (row[0] * x % q2) as f64).collect();
            for e0 in err_values {
                for e1 in err_values {
                    for e2 in err_values {
                        let point = [ax[0] + e0, ax[1] + e1, ax[2] + e2];
                        let cell = grid_fn(&point, &grid);
                        match cells.get(&cell) {
                            None => {
                                cells.insert(cell, x);
                            }
                            Some(owner) if *owner != x => violations += 1,
                            _ => {}
                        }
                    }
                }
            }
        }
    }
    out.agg("claim2_lambda_inf", lambda2 as f64);
    out.gate("claim2_violations", violations as f64, violations == 0);
    Ok(out)
}

// ---------------------------------------------------------------------------
// ball-claims
// ---------------------------------------------------------------------------

pub(super) fn ball_claims(
    config: &RunConfig,
    reader: &mut ParamReader,
    th: &Thresholds,
) -> Result<SuiteOutcome> {
    let radius: f64 = reader.read("radius", 8.0f64)?;
    let denom: u64 = reader.read("denom", 4u64)?;
    let q: u64 = reader.read("q", 64u64)?;
    let steps = config.trials.clamp(5, 17);
    let mut out = SuiteOutcome::new();
    let mut rng = rng_for_trial(config.seed, SETUP_STREAM);
    let mut all_monotone = true;
    let mut floor_ok = true;
    let mut zero_ok = true;
    for m in 1..=3usize {
        let mut prev = f64::INFINITY;
        for i in 0..steps {
            let d = radius * i as f64 / (steps - 1) as f64;
            let mut shift = vec![0.0; m];
            shift[0] = d;
            let ratio = ball_intersection_ratio(m, radius, &shift, denom, q, 0, &mut rng)?;
            if i == 0 {
                zero_ok &= ratio == 1.0;
                out.agg(&format!("ratio_zero_shift_m{m}"), ratio);
            }
            all_monotone &= ratio <= prev + 1e-12;
            prev = ratio;
            out.trials.push(
                TrialRecord::new((m as u64) * steps + i).with("m", m as f64).with("shift", d).with("ratio", ratio),
            );
        }
        // Small-shift regime: sqrt(m) * ||d|| / R <= 0.25.
        let d_edge = 0.25 * radius / (m as f64).sqrt();
        let mut shift = vec![0.0; m];
        shift[0] = d_edge;
        let ratio = ball_intersection_ratio(m, radius, &shift, denom, q, 0, &mut rng)?;
        out.agg(&format!("ratio_small_shift_m{m}"), ratio);
        floor_ok &= ratio >= th.ball_ratio_floor;
    }
    out.agg("zero_shift_ratio_one", zero_ok);
    out.agg("monotone_nonincreasing", all_monotone);
    out.agg("small_shift_floor_ok", floor_ok);
    out.pass &= zero_ok && all_monotone && floor_ok;
    Ok(out)
}

// ---------------------------------------------------------------------------
// edcp2lwe-stats
// ---------------------------------------------------------------------------

pub(super) fn edcp2lwe_stats(
    config: &RunConfig,
    reader: &mut ParamReader,
    th: &Thresholds,
) -> Result<SuiteOutcome> {
    let modulus: u64 = reader.read("modulus", 64u64)?;
    let r: f64 = reader.read("r", 8.0f64)?;
    let kappa: u32 = reader.read("kappa", 4u32)?;
    let params = EdcpParams::new(1, modulus, WeightFn::gaussian(r, kappa)?, 1)?;
    let mut out = SuiteOutcome::new();

    let results = run_trials(config.seed, config.trials, |i, rng| {
        let inst = gen_edcp(&params, rng)?;
        let secret = inst.secret[0];
        let state = inst.states.into_iter().next().unwrap();
        let (a, b) = edcp_to_lwe_sample(state, &params, rng)?;
        let e = (b as i64 - (a[0] * secret % modulus) as i64).rem_euclid(modulus as i64);
        Ok(TrialRecord::new(i)
            .with("a_prime", a[0] as f64)
            .with("b", b as f64)
            .with("e", e as f64))
    })?;
    let mut a_counts = vec![0u64; modulus as usize];
    let mut e_counts = vec![0u64; modulus as usize];
    for t in &results {
        a_counts[t.values["a_prime"] as usize] += 1;
        e_counts[t.values["e"] as usize] += 1;
    }
    out.trials = results;

    let p_a = chi2_uniform_test(&a_counts)?;
    out.gate("chi2_p_a_prime", p_a, p_a >= th.chi2_p_floor);

    // Exact measurement law of the final transform (squared folded
    // Gaussian of width N/r), computed independently of the simulator.
    let law = edcp_error_law(modulus, &params.dist)?;
    let tv = tv_counts_vs_pmf(&e_counts, &law)?;
    out.gate("tv_error_vs_exact_law", tv, tv <= th.tv_error);

    // Reference value: distance to the pmf proportional to the amplitude
    // profile rho_{N/r} itself (the width label the error is usually quoted
    // with); the measured law is its square, so this stays ~0.17.
    let width = modulus as f64 / r;
    let mut label_pmf: Vec<f64> = (0..modulus)
        .map(|e| {
            let ce = center(e as i64, modulus) as f64;
            (-3..=3).map(|kk| rho1(width, ce + kk as f64 * modulus as f64)).sum()
        })
        .collect();
    let total: f64 = label_pmf.iter().sum();
    label_pmf.iter_mut().for_each(|p| *p /= total);
    out.agg("tv_error_vs_width_label_info", tv_counts_vs_pmf(&e_counts, &label_pmf)?);
    Ok(out)
}

// ---------------------------------------------------------------------------
// decisional-e2l
// ---------------------------------------------------------------------------

pub(super) fn decisional_e2l(
    config: &RunConfig,
    reader: &mut ParamReader,
    th: &Thresholds,
) -> Result<SuiteOutcome> {
    let modulus: u64 = reader.read("modulus", 64u64)?;
    let r: f64 = reader.read("r", 8.0f64)?;
    let kappa: u32 = reader.read("kappa", 4u32)?;
    let adv_reps: u64 = reader.read("adv_reps", 40u64)?;
    let adv_batch: usize = reader.read("adv_batch", 200usize)?;
    let params = EdcpParams::new(1, modulus, WeightFn::gaussian(r, kappa)?, 1)?;
    let mut out = SuiteOutcome::new();

    // Null inputs: the produced pairs must be exactly uniform.
    let results = run_trials(config.seed, config.trials, |i, rng| {
        let nulls = gen_decisional_null(&params, rng)?;
        let (a, b) = edcp_to_lwe_sample(nulls.into_iter().next().unwrap(), &params, rng)?;
        Ok(TrialRecord::new(i).with("a", a[0] as f64).with("b", b as f64))
    })?;
    let mut a_counts = vec![0u64; modulus as usize];
    let mut b_counts = vec![0u64; modulus as usize];
    let coarse = 8usize;
    let mut joint = vec![0u64; coarse * coarse];
    let chunk = (modulus as usize).div_ceil(coarse);
    for t in &results {
        let (a, b) = (t.values["a"] as usize, t.values["b"] as usize);
        a_counts[a] += 1;
        b_counts[b] += 1;
        joint[(a / chunk) * coarse + b / chunk] += 1;
    }
    out.trials = results;
    let p_a = chi2_uniform_test(&a_counts)?;
    let p_b = chi2_uniform_test(&b_counts)?;
    let p_joint = chi2_uniform_test(&joint)?;
    out.gate("chi2_p_a", p_a, p_a >= th.chi2_p_floor);
    out.gate("chi2_p_b", p_b, p_b >= th.chi2_p_floor);
    out.gate("chi2_p_joint", p_joint, p_joint >= th.chi2_p_floor);

    // Distinguisher advantage on EDCP batches vs null batches.
    let batch_params = EdcpParams::new(1, modulus, params.dist, adv_batch)?;
    let r_err = modulus as f64 / r;
    let verdicts = run_trials(config.seed ^ 0xD15C, adv_reps, |_, rng| {
        let inst = gen_edcp(&batch_params, rng)?;
        let mut planted_samples = Vec::with_capacity(adv_batch);
        for state in inst.states {
            planted_samples.push(edcp_to_lwe_sample(state, &batch_params, rng)?);
        }
        let vp = distinguish_lwe_bruteforce(&planted_samples, 1, modulus, r_err)?;
        let nulls = gen_decisional_null(&batch_params, rng)?;
        let mut null_samples = Vec::with_capacity(adv_batch);
        for state in nulls {
            null_samples.push(edcp_to_lwe_sample(state, &batch_params, rng)?);
        }
        let vn = distinguish_lwe_bruteforce(&null_samples, 1, modulus, r_err)?;
        Ok((vp.hypothesis == Hypothesis::Planted, vn.hypothesis == Hypothesis::Planted))
    })?;
    let hits_planted = verdicts.iter().filter(|(p, _)| *p).count() as f64;
    let hits_null = verdicts.iter().filter(|(_, n)| *n).count() as f64;
    let advantage = (hits_planted - hits_null) / adv_reps as f64;
    out.gate("distinguisher_advantage", advantage, advantage >= 0.5);
    Ok(out)
}

// ---------------------------------------------------------------------------
// decisional-l2e
// ---------------------------------------------------------------------------

pub(super) fn decisional_l2e(
    config: &RunConfig,
    reader: &mut ParamReader,
    th: &Thresholds,
) -> Result<SuiteOutcome> {
    let q: u64 = reader.read("q", 128u64)?;
    let m: usize = reader.read("m", 8usize)?;
    let r: f64 = reader.read("r", 2.0f64)?;
    let kappa: u32 = reader.read("kappa", 4u32)?;
    let denom: u64 = reader.read("denom", 8u64)?;
    let planted_reps: u64 = reader.read("planted_reps", 60u64)?;
    let planted_q: u64 = reader.read("planted_q", 4096u64)?;
    let planted_m: usize = reader.read("planted_m", 10usize)?;
    let gauss = GaussianParam::new(r, kappa)?;
    let lwe_params = LweParams::new(1, q, 1.0 / q as f64, m)?;
    let mut out = SuiteOutcome::new();

    let results = run_trials(config.seed, config.trials, |i, rng| {
        // Uniform (A, b); instances whose (A|b) lattice is too degenerate
        // for a radius-1 ball are tail events and redrawn.
        for _ in 0..100 {
            let pair = gen_uniform_pair(&lwe_params, rng)?;
            match crate::reductions::dlwe_to_dedcp(pair.public(), r, kappa, None, denom, 1, rng) {
                Ok(outcome) if outcome.success => {
                    let state = outcome.payload.unwrap().pop().unwrap();
                    let support = state.support_len();
                    let j = state.iter().next().map(|(l, _)| l[0]).unwrap_or(0);
                    return Ok(TrialRecord::new(i)
                        .with("support", support as f64)
                        .with("j", j as f64));
                }
                Ok(_) => continue,
                Err(Error::Parameter(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(Error::Retry("no usable uniform pair found"))
    })?;
    let violations = results.iter().filter(|t| t.values["support"] != 1.0).count() as u64;
    let mut j_counts = vec![0u64; (2 * gauss.cutoff + 1) as usize];
    for t in &results {
        let j = t.values["j"] as i64;
        if t.values["support"] == 1.0 {
            j_counts[(j + gauss.cutoff) as usize] += 1;
        }
    }
    out.trials = results;
    out.gate("support_one_violations", violations as f64, violations == 0);
    let squared = TabulatedDist::from_weight_fn(&WeightFn::Gaussian(gauss), 2)?;
    let tv = tv_counts_vs_pmf(&j_counts, squared.probabilities())?;
    out.gate("tv_j_marginal", tv, tv <= th.tv_error);

    // Planted pairs run through the same algorithm must come out as
    // verifiable EDCP states carrying the planted secret. This runs at a
    // point inside the decisional width regime (the formula radius must
    // dwarf the cluster spread).
    let planted_params = LweParams::new(1, planted_q, 1.0 / planted_q as f64, planted_m)?;
    let planted = run_trials(config.seed ^ 0xBA11, planted_reps, |_, rng| {
        let inst = gen_lwe(&planted_params, rng)?;
        let outcome =
            crate::reductions::dlwe_to_dedcp(inst.public(), r, kappa, None, denom, 1, rng)?;
        if !outcome.success {
            return Ok(false);
        }
        let state = outcome.payload.unwrap().pop().unwrap();
        let eparams = EdcpParams::new(1, planted_q, WeightFn::Gaussian(gauss), 1)?;
        Ok(match classify_edcp_state(&state, &eparams) {
            Some((x, s)) => {
                s == inst.s0 && verify_edcp_state(&state, &eparams, &s, &x)
            }
            None => false,
        })
    })?;
    // The decisional reduction promises validity with probability 1 - O(1/ell) only;
    // at ell = 1 a rare one-point collapse on a planted pair is a genuine
    // reduction failure, so the gate leaves room for it.
    let planted_ok = planted.iter().filter(|ok| **ok).count() as f64 / planted_reps as f64;
    out.gate("planted_verified_rate", planted_ok, planted_ok >= 0.9);
    Ok(out)
}

// ---------------------------------------------------------------------------
// roundtrip-cube
// ---------------------------------------------------------------------------

pub(super) fn roundtrip_cube(
    config: &RunConfig,
    reader: &mut ParamReader,
    th: &Thresholds,
) -> Result<SuiteOutcome> {
    let q: u64 = reader.read("q", 64u64)?;
    let m: usize = reader.read("m", 6usize)?;
    let alpha_q: f64 = reader.read("alpha_q", 1.0f64)?;
    let r: f64 = reader.read("r", 1.0f64)?;
    let kappa: u32 = reader.read("kappa", 4u32)?;
    let c: u64 = reader.read("c", 8u64)?;
    let k: u64 = reader.read("k", 12u64)?;
    let lwe_params = LweParams::new(1, q, alpha_q / q as f64, m)?;
    let cube = CubeParams::new(r, kappa, c, k, 1);
    let mut out = SuiteOutcome::new();

    let results = run_trials(config.seed, config.trials, |i, rng| {
        // Fresh instance per repetition, conditioned on the grid-width
        // precondition, as the analysis itself does.
        for _ in 0..500 {
            let inst = gen_lwe(&lwe_params, rng)?;
            let ctx = match CubeContext::new(inst.public(), &cube) {
                Ok(ctx) => ctx,
                Err(Error::Retry(_)) => continue,
                Err(e) => return Err(e),
            };
            let rep = ctx.repetition(rng)?;
            let success = rep.classified.is_some();
            let verified = match (&rep.classified, &rep.state) {
                (Some((x, s)), Some(state)) => {
                    s == &inst.s0 && verify_edcp_state(state, &ctx.edcp_params()?, s, x)
                }
                _ => false,
            };
            return Ok(TrialRecord::new(i)
                .with("success", success as u8 as f64)
                .with("verified", verified as u8 as f64));
        }
        Err(Error::Retry("no conforming instance"))
    })?;
    let successes: f64 = results.iter().map(|t| t.values["success"]).sum();
    let verified: f64 = results.iter().map(|t| t.values["verified"]).sum();
    let rate = successes / results.len() as f64;
    out.trials = results;
    let target = (1.0 - 1.0 / k as f64).powi(m as i32);
    let floor = target - th.sigma_slack * binomial_sigma(target, config.trials);
    out.agg("success_floor", floor);
    out.gate("rep_success_rate", rate, rate >= floor);
    let all_verified = verified == successes;
    out.agg("successes", successes);
    out.agg("all_successes_verified", all_verified);
    out.pass &= all_verified;
    Ok(out)
}

// ---------------------------------------------------------------------------
// roundtrip-ball
// ---------------------------------------------------------------------------

pub(super) fn roundtrip_ball(
    config: &RunConfig,
    reader: &mut ParamReader,
    th: &Thresholds,
) -> Result<SuiteOutcome> {
    let q: u64 = reader.read("q", 4096u64)?;
    let m: usize = reader.read("m", 10usize)?;
    let alpha_q: f64 = reader.read("alpha_q", 1.0f64)?;
    let r: f64 = reader.read("r", 2.0f64)?;
    let kappa: u32 = reader.read("kappa", 4u32)?;
    let ell: usize = reader.read("ell", 4usize)?;
    let denom: u64 = reader.read("denom", 16u64)?;
    let samples_target: usize = reader.read("samples", 48usize)?;
    let lwe_params = LweParams::new(1, q, alpha_q / q as f64, m)?;
    let ball = BallParams::new(r, kappa, denom, ell);
    let mut out = SuiteOutcome::new();

    let results = run_trials(config.seed, config.trials, |i, rng| {
        let inst = gen_lwe(&lwe_params, rng)?;
        let eparams = EdcpParams::new(1, q, WeightFn::gaussian(r, kappa)?, ell)?;
        let mut samples: Vec<(Vec<u64>, u64)> = Vec::with_capacity(samples_target);
        let mut attempts_total = 0.0;
        let mut successes_total = 0.0;
        let batch_budget = 8 * samples_target.div_ceil(ell);
        for _ in 0..batch_budget {
            if samples.len() >= samples_target {
                break;
            }
            let outcome = lwe_to_edcp_ball(inst.public(), &ball, rng)?;
            attempts_total += outcome.diagnostics.get("attempts").unwrap_or(0.0);
            successes_total += outcome.diagnostics.get("successes").unwrap_or(0.0);
            if !outcome.success {
                continue;
            }
            for state in outcome.expect_payload() {
                match edcp_to_lwe_sample(state, &eparams, rng) {
                    Ok(sample) => samples.push(sample),
                    Err(Error::Retry(_)) => continue,
                    Err(e) => return Err(e),
                }
            }
        }
        let verdict = solve_lwe_bruteforce(&samples, 1, q, q as f64 / r)?;
        let recovered =
            verdict.unique && verdict.secret.as_deref() == Some(inst.s0.as_slice());
        Ok(TrialRecord::new(i)
            .with("recovered", recovered as u8 as f64)
            .with("samples", samples.len() as f64)
            .with("rep_success_rate", successes_total / attempts_total.max(1.0)))
    })?;
    let recovery_rate =
        results.iter().map(|t| t.values["recovered"]).sum::<f64>() / results.len() as f64;
    let mean_rep =
        results.iter().map(|t| t.values["rep_success_rate"]).sum::<f64>() / results.len() as f64;
    out.trials = results;
    out.agg("mean_rep_success_rate", mean_rep);
    out.gate("recovery_rate", recovery_rate, recovery_rate >= th.min_recovery_rate);
    Ok(out)
}

// ---------------------------------------------------------------------------
// variant-conversions
// ---------------------------------------------------------------------------

pub(super) fn variant_conversions(
    config: &RunConfig,
    reader: &mut ParamReader,
    th: &Thresholds,
) -> Result<SuiteOutcome> {
    let modulus: u64 = reader.read("modulus", 101u64)?;
    let r: f64 = reader.read("r", 4.0f64)?;
    let kappa: u32 = reader.read("kappa", 64u32)?;
    let c: f64 = reader.read("c", 1.0f64)?;
    let mut out = SuiteOutcome::new();
    let g_params = EdcpParams::new(1, modulus, WeightFn::gaussian(r, kappa)?, 1)?;

    // Gaussian -> uniform: acceptance matches the analytic branch-mass
    // times ||p||^2, every accepted output is a valid U-EDCP state with the
    // same secret.
    let g2u_trials = config.trials;
    let g2u = run_trials(config.seed, g2u_trials, |_, rng| {
        let inst = gen_edcp(&g_params, rng)?;
        let state = inst.states.into_iter().next().unwrap();
        let outcome = g_to_u(state, &g_params, c, rng)?;
        let analytic = outcome.diagnostics.get("overall_accept_analytic").unwrap();
        if !outcome.success {
            return Ok((false, true, analytic));
        }
        let (converted, uparams) = outcome.expect_payload();
        let valid = match classify_edcp_state(&converted, &uparams) {
            Some((x, s)) => {
                s == inst.secret && verify_edcp_state(&converted, &uparams, &s, &x)
            }
            None => false,
        };
        Ok((true, valid, analytic))
    })?;
    let accepts = g2u.iter().filter(|(a, _, _)| *a).count() as f64;
    let valid_all = g2u.iter().all(|(_, v, _)| *v);
    let analytic = g2u[0].2;
    let rate = accepts / g2u_trials as f64;
    let tol = th.sigma_slack * binomial_sigma(analytic, g2u_trials) + 0.01;
    out.agg("g2u_accept_analytic", analytic);
    out.gate("g2u_accept_rate", rate, (rate - analytic).abs() <= tol);
    out.agg("g2u_all_accepted_valid", valid_all);
    out.pass &= valid_all;

    // Uniform -> Gaussian: accepted outputs lie within the truncation tail
    // bound of the ideal state with the offset shifted by floor((M-1)/2)*s.
    let u_modulus: u64 = reader.read("u2g_modulus", 32u64)?;
    let u_window: u64 = reader.read("u2g_window", 8u64)?;
    let u_kappa: u32 = reader.read("u2g_kappa", 4u32)?;
    let u_params = EdcpParams::new(1, u_modulus, WeightFn::Uniform(u_window), 1)?;
    let u2g_trials = (config.trials / 5).max(200);
    let u2g = run_trials(config.seed ^ 0x0261, u2g_trials, |_, rng| {
        let inst = gen_edcp(&u_params, rng)?;
        let state = inst.states.into_iter().next().unwrap();
        let outcome = u_to_g(state, &u_params, u_kappa, rng)?;
        let p_norm_sq = outcome.diagnostics.get("p_norm_sq").unwrap();
        if !outcome.success {
            return Ok((false, true, p_norm_sq));
        }
        let (converted, gparams) = outcome.expect_payload();
        let shift = (u_window as i64 - 1) / 2;
        let shifted_offset = vec![
            ((inst.offsets[0][0] as i64 + shift * inst.secret[0] as i64)
                .rem_euclid(u_modulus as i64)) as u64,
        ];
        let ideal = crate::edcp::ideal_edcp_state(&gparams, &inst.secret, &shifted_offset)?;
        let g = match gparams.dist {
            WeightFn::Gaussian(g) => g,
            _ => unreachable!(),
        };
        let ok = converted.l2_distance(&ideal)? <= g.tail_bound();
        Ok((true, ok, p_norm_sq))
    })?;
    let u2g_accepts = u2g.iter().filter(|(a, _, _)| *a).count() as f64;
    let u2g_valid = u2g.iter().all(|(_, v, _)| *v);
    let u2g_analytic = u2g[0].2;
    let u2g_rate = u2g_accepts / u2g_trials as f64;
    let u2g_tol = th.sigma_slack * binomial_sigma(u2g_analytic, u2g_trials) + 0.02;
    out.agg("u2g_accept_analytic", u2g_analytic);
    out.gate("u2g_accept_rate", u2g_rate, (u2g_rate - u2g_analytic).abs() <= u2g_tol);
    out.agg("u2g_all_accepted_within_tail_bound", u2g_valid);
    out.pass &= u2g_valid;

    // Self-reduction, uniform flavor: M1 = 8 -> M2 = 4 accepts with
    // probability exactly 1/2.
    let sr_params = EdcpParams::new(1, 17, WeightFn::Uniform(8), 1)?;
    let sr_trials = (config.trials / 5).max(200);
    let sr = run_trials(config.seed ^ 0x5E1F, sr_trials, |_, rng| {
        let inst = gen_edcp(&sr_params, rng)?;
        let state = inst.states.into_iter().next().unwrap();
        let outcome = edcp_self_reduce(state, &sr_params, &WeightFn::Uniform(4), rng)?;
        let p = outcome.diagnostics.get("p_norm_sq").unwrap();
        let accepted = outcome.success;
        let preserved = if accepted {
            let (converted, uparams) = outcome.expect_payload();
            matches!(classify_edcp_state(&converted, &uparams), Some((_, s)) if s == inst.secret)
        } else {
            true
        };
        Ok((accepted, preserved, p))
    })?;
    let sr_rate = sr.iter().filter(|(a, _, _)| *a).count() as f64 / sr_trials as f64;
    let sr_preserved = sr.iter().all(|(_, p, _)| *p);
    out.agg("self_reduce_p_norm_sq", sr[0].2);
    let sr_tol = th.sigma_slack * binomial_sigma(0.5, sr_trials) + 0.01;
    out.gate("self_reduce_accept_rate", sr_rate, (sr_rate - 0.5).abs() <= sr_tol);
    out.agg("self_reduce_secret_preserved", sr_preserved);
    out.pass &= sr_preserved;

    // Gaussian self-reduction narrows the width and keeps the secret.
    let srg_params = EdcpParams::new(1, 64, WeightFn::gaussian(4.0, 4)?, 1)?;
    let srg_target = WeightFn::gaussian(2.0, 4)?;
    let srg = run_trials(config.seed ^ 0x56A0, (config.trials / 20).max(100), |_, rng| {
        let inst = gen_edcp(&srg_params, rng)?;
        let state = inst.states.into_iter().next().unwrap();
        let outcome = edcp_self_reduce(state, &srg_params, &srg_target, rng)?;
        if !outcome.success {
            return Ok(true);
        }
        let (converted, gparams) = outcome.expect_payload();
        Ok(match classify_edcp_state(&converted, &gparams) {
            Some((x, s)) => s == inst.secret && verify_edcp_state(&converted, &gparams, &s, &x),
            None => false,
        })
    })?;
    let srg_ok = srg.iter().all(|ok| *ok);
    out.agg("self_reduce_gaussian_valid", srg_ok);
    out.pass &= srg_ok;

    // Full chain G-EDCP -> U-EDCP -> G-EDCP: the secret survives every
    // accepted chain.
    let chain_trials = (config.trials / 5).max(200);
    let chain = run_trials(config.seed ^ 0xC4A1, chain_trials, |_, rng| {
        let inst = gen_edcp(&g_params, rng)?;
        let state = inst.states.into_iter().next().unwrap();
        let step1 = g_to_u(state, &g_params, c, rng)?;
        if !step1.success {
            return Ok(None);
        }
        let (uniform_state, uparams) = step1.expect_payload();
        let step2 = u_to_g(uniform_state, &uparams, 4, rng)?;
        if !step2.success {
            return Ok(None);
        }
        let (gauss_state, gparams) = step2.expect_payload();
        // The chained window covers only part of the final Gaussian support,
        // so extract the secret structurally rather than demanding the full
        // window.
        let preserved = matches!(
            crate::edcp::extract_affine_secret(&gauss_state, gparams.modulus, gparams.n),
            Some((_, s)) if s == inst.secret
        );
        Ok(Some(preserved))
    })?;
    let chain_accepts = chain.iter().filter(|r| r.is_some()).count() as f64;
    let chain_preserved = chain.iter().flatten().all(|ok| *ok);
    out.agg("chain_accepts", chain_accepts);
    out.agg("chain_secret_preserved", chain_preserved);
    out.pass &= chain_preserved && chain_accepts >= 1.0;
    Ok(out)
}

// ---------------------------------------------------------------------------
// dcp-chain
// ---------------------------------------------------------------------------

pub(super) fn dcp_chain(
    config: &RunConfig,
    reader: &mut ParamReader,
    th: &Thresholds,
) -> Result<SuiteOutcome> {
    let narrow_modulus: u64 = reader.read("narrow_modulus", 15u64)?;
    let narrow_r: f64 = reader.read("narrow_r", 2.0f64)?;
    let wide_modulus: u64 = reader.read("wide_modulus", 127u64)?;
    let wide_r: f64 = reader.read("wide_r", 21.0f64)?;
    let kappa: u32 = reader.read("kappa", 4u32)?;
    let demos: u64 = reader.read("demos", 5u64)?;
    let demo_ell: usize = reader.read("demo_ell", 24usize)?;
    let mut out = SuiteOutcome::new();

    // Narrow branch: acceptance means |j| measured 1; the empirical rate
    // must clear the analytic floor 2 exp(-2 pi / r^2) / (r/sqrt2 + 1).
    let narrow_params =
        EdcpParams::new(1, narrow_modulus, WeightFn::gaussian(narrow_r, kappa)?, 1)?;
    let narrow = run_trials(config.seed, config.trials, |_, rng| {
        let inst = gen_edcp(&narrow_params, rng)?;
        let state = inst.states.into_iter().next().unwrap();
        let outcome = gedcp_to_dcp(state, &narrow_params, 1.0, rng)?;
        if !outcome.success {
            return Ok((false, true));
        }
        let dcp = outcome.expect_payload();
        let verdict = solve_dcp_whitebox(std::slice::from_ref(&dcp.state))?;
        let valid = match verdict.secret {
            Some(sbar) => {
                sbar[0] == 2 * inst.secret[0] % narrow_modulus
                    && dcp_secret_preimages(sbar[0], narrow_modulus).contains(&inst.secret[0])
            }
            None => false,
        };
        Ok((true, valid))
    })?;
    let v1_rate = narrow.iter().filter(|(a, _)| *a).count() as f64 / config.trials as f64;
    let narrow_valid = narrow.iter().all(|(_, v)| *v);
    let floor_analytic = 2.0 * (-2.0 * std::f64::consts::PI / (narrow_r * narrow_r)).exp()
        / (narrow_r / 2.0f64.sqrt() + 1.0);
    let floor = floor_analytic - th.sigma_slack * binomial_sigma(floor_analytic, config.trials);
    out.agg("narrow_floor", floor);
    out.gate("narrow_v1_rate", v1_rate, v1_rate >= floor);
    out.agg("narrow_all_accepted_valid", narrow_valid);
    out.pass &= narrow_valid;

    // Wide branch through the uniform window.
    let wide_params = EdcpParams::new(1, wide_modulus, WeightFn::gaussian(wide_r, kappa)?, 1)?;
    let wide = run_trials(config.seed ^ 0x51DE, config.trials, |_, rng| {
        let inst = gen_edcp(&wide_params, rng)?;
        let state = inst.states.into_iter().next().unwrap();
        let outcome = gedcp_to_dcp(state, &wide_params, 1.0, rng)?;
        if !outcome.success {
            return Ok((false, true));
        }
        let dcp = outcome.expect_payload();
        let verdict = solve_dcp_whitebox(std::slice::from_ref(&dcp.state))?;
        let valid = matches!(verdict.secret, Some(sbar) if sbar[0] == 2 * inst.secret[0] % wide_modulus);
        Ok((true, valid))
    })?;
    let wide_accepts = wide.iter().filter(|(a, _)| *a).count() as f64;
    let wide_valid = wide.iter().all(|(_, v)| *v);
    out.agg("wide_accepts", wide_accepts);
    out.agg("wide_all_accepted_valid", wide_valid);
    out.pass &= wide_valid && wide_accepts >= 1.0;

    // End-to-end demo: several narrow states from one instance, solved
    // jointly; the doubled secret's preimages must contain the secret.
    let demo_params =
        EdcpParams::new(1, narrow_modulus, WeightFn::gaussian(narrow_r, kappa)?, demo_ell)?;
    let demo_results = run_trials(config.seed ^ 0xDE30, demos, |_, rng| {
        let inst = gen_edcp(&demo_params, rng)?;
        let mut dcp_states = Vec::new();
        for state in inst.states {
            let outcome = gedcp_to_dcp(state, &demo_params, 1.0, rng)?;
            if outcome.success {
                dcp_states.push(outcome.expect_payload().state);
            }
        }
        if dcp_states.len() < 2 {
            return Ok(false);
        }
        let verdict = solve_dcp_whitebox(&dcp_states)?;
        Ok(matches!(verdict.secret, Some(sbar)
            if dcp_secret_preimages(sbar[0], narrow_modulus).contains(&inst.secret[0])))
    })?;
    let demo_ok = demo_results.iter().all(|ok| *ok);
    out.agg("demo_recoveries_ok", demo_ok);
    out.pass &= demo_ok;
    Ok(out)
}
