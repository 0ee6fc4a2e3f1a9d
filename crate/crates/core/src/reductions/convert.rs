//! EDCP-variant inter-conversions built on quantum rejection sampling:
//! Gaussian -> uniform, uniform -> Gaussian, width self-reduction, and the
//! collapse of a one-dimensional G-EDCP state to a plain dihedral coset
//! state with doubled secret.

use crate::edcp::EdcpParams;
use crate::error::{Error, Result};
use crate::gaussian::{rho1, GaussianParam, WeightFn};
use crate::rng::SimRng;
use crate::statevector::SparseState;

use super::{Diagnostics, ReductionOutcome};

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn mod_inverse(v: u64, n: u64) -> Option<u64> {
    let (mut r0, mut r1) = (n as i128, (v % n) as i128);
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    if r0 != 1 {
        return None;
    }
    Some(s0.rem_euclid(n as i128) as u64)
}

/// Smallest magnitude of a nonzero real amplitude over the labels selected
/// by `select`; the feasible cap for a flat rejection target.
fn min_amplitude(state: &SparseState, select: impl Fn(i64) -> bool) -> Option<f64> {
    state
        .iter()
        .filter(|(label, _)| select(label[0]))
        .map(|(_, amp)| amp.norm())
        .min_by(|a, b| a.total_cmp(b))
}

/// G-EDCP -> U-EDCP with window `M = c * r`: measure the sign of the shift
/// register, keep the nonnegative branch (`sign(j) = 1` for `j >= 0`), then
/// rejection-resample the surviving Gaussian profile flat on `[0, M-1]`.
pub fn g_to_u(
    state: SparseState,
    params: &EdcpParams,
    c: f64,
    rng: &mut SimRng,
) -> Result<ReductionOutcome<(SparseState, EdcpParams)>> {
    let gauss = match &params.dist {
        WeightFn::Gaussian(g) => *g,
        _ => return Err(Error::Parameter("g_to_u expects a Gaussian-weighted instance".into())),
    };
    let m_real = c * gauss.r;
    let m_window = m_real.round();
    if (m_real - m_window).abs() > 1e-9 || m_window < 1.0 {
        return Err(Error::Parameter(format!("M = c*r = {m_real} must be a positive integer")));
    }
    let m_window = m_window as i64;
    if m_window - 1 > gauss.cutoff {
        return Err(Error::Parameter(format!(
            "window M = {m_window} exceeds the truncated support (cutoff {})",
            gauss.cutoff
        )));
    }
    let mut diagnostics = Diagnostics::default();
    let branch_mass: f64 = state
        .iter()
        .filter(|(label, _)| label[0] >= 0)
        .map(|(_, amp)| amp.norm_sqr())
        .sum();
    diagnostics.record("branch_mass", branch_mass);
    // Overall acceptance = branch mass times the rejection's ||p||^2 on the
    // kept branch, which collapses to M * cap^2 in the input normalization.
    let raw_cap = min_amplitude(&state, |j| (0..m_window).contains(&j))
        .ok_or_else(|| Error::Precondition("window not contained in the support".into()))?;
    diagnostics.record("overall_accept_analytic", m_window as f64 * raw_cap * raw_cap);

    // Sign ancilla: written and measured; 1 keeps j >= 0.
    let outcome = state.measure_derived(|label| vec![(label[0] >= 0) as i64], rng)?;
    if outcome.value[0] != 1 {
        diagnostics.event("sign branch measured 0; state discarded");
        return Ok(ReductionOutcome::failed(diagnostics));
    }
    let kept = outcome.collapsed;
    let cap = min_amplitude(&kept, |j| (0..m_window).contains(&j))
        .ok_or_else(|| Error::Precondition("window not contained in the support".into()))?;
    let p = move |label: &[i64]| if (0..m_window).contains(&label[0]) { cap } else { 0.0 };
    diagnostics.record("p_norm_sq", kept.rejection_accept_probability(p)?);
    let (accepted, resampled) = kept.rejection_resample(p, rng)?;
    if !accepted {
        diagnostics.event("rejection resampling failed");
        return Ok(ReductionOutcome::failed(diagnostics));
    }
    let state = resampled.unwrap().relabel_int_register(|j| j, 0, m_window - 1)?;
    let out_params = EdcpParams::new(
        params.n,
        params.modulus,
        WeightFn::Uniform(m_window as u64),
        params.ell,
    )?;
    Ok(ReductionOutcome::succeeded((state, out_params), diagnostics))
}

/// U-EDCP -> G-EDCP with `r = M / sqrt(kappa)`: recenter the window by
/// `floor((M-1)/2)` (the offset absorbs the shift) and rejection-resample
/// the flat profile to the Gaussian one.
pub fn u_to_g(
    state: SparseState,
    params: &EdcpParams,
    kappa: u32,
    rng: &mut SimRng,
) -> Result<ReductionOutcome<(SparseState, EdcpParams)>> {
    let m_window = match &params.dist {
        WeightFn::Uniform(m) => *m as i64,
        WeightFn::Indicator01 => 2,
        _ => return Err(Error::Parameter("u_to_g expects a uniform-weighted instance".into())),
    };
    let r = m_window as f64 / (kappa as f64).sqrt();
    let gauss = GaussianParam::new(r, kappa)?;
    let out_params =
        EdcpParams::new(params.n, params.modulus, WeightFn::Gaussian(gauss), params.ell)?;
    let mut diagnostics = Diagnostics::default();
    let shift = (m_window - 1) / 2;
    let state = state.shift_int_register(-shift)?;
    let cap = min_amplitude(&state, |_| true)
        .ok_or_else(|| Error::Precondition("empty support".into()))?;
    let p = move |label: &[i64]| cap * rho1(r, label[0] as f64);
    diagnostics.record("p_norm_sq", state.rejection_accept_probability(p)?);
    let (accepted, resampled) = state.rejection_resample(p, rng)?;
    if !accepted {
        diagnostics.event("rejection resampling failed");
        return Ok(ReductionOutcome::failed(diagnostics));
    }
    let state = resampled.unwrap().relabel_int_register(|j| j, -gauss.cutoff, gauss.cutoff)?;
    Ok(ReductionOutcome::succeeded((state, out_params), diagnostics))
}

/// Width self-reduction: Gaussian `r1 -> r2 < r1` or uniform `M1 -> M2 < M1`
/// by a single rejection-resampling step.
pub fn edcp_self_reduce(
    state: SparseState,
    params: &EdcpParams,
    target: &WeightFn,
    rng: &mut SimRng,
) -> Result<ReductionOutcome<(SparseState, EdcpParams)>> {
    let mut diagnostics = Diagnostics::default();
    type TargetProfile = (Box<dyn Fn(&[i64]) -> f64>, i64, i64);
    let (p, lo, hi): TargetProfile = match (&params.dist, target) {
        (WeightFn::Gaussian(g1), WeightFn::Gaussian(g2)) => {
            if g2.r >= g1.r {
                return Err(Error::Parameter("self-reduction needs r2 < r1".into()));
            }
            if g2.cutoff > g1.cutoff {
                return Err(Error::Parameter(
                    "target window exceeds the current truncated support".into(),
                ));
            }
            let cap = min_amplitude(&state, |j| j == 0)
                .ok_or_else(|| Error::Precondition("support misses j = 0".into()))?;
            let (r2, cut2) = (g2.r, g2.cutoff);
            (
                Box::new(move |label: &[i64]| {
                    if label[0].abs() <= cut2 {
                        cap * rho1(r2, label[0] as f64)
                    } else {
                        0.0
                    }
                }),
                -g2.cutoff,
                g2.cutoff,
            )
        }
        (WeightFn::Uniform(_) | WeightFn::Indicator01, WeightFn::Uniform(m2)) => {
            let m1 = match &params.dist {
                WeightFn::Uniform(m) => *m,
                _ => 2,
            };
            if *m2 >= m1 {
                return Err(Error::Parameter("self-reduction needs M2 < M1".into()));
            }
            let m2_window = *m2 as i64;
            let cap = min_amplitude(&state, |j| (0..m2_window).contains(&j))
                .ok_or_else(|| Error::Precondition("target window not in support".into()))?;
            (
                Box::new(move |label: &[i64]| {
                    if (0..m2_window).contains(&label[0]) {
                        cap
                    } else {
                        0.0
                    }
                }),
                0,
                m2_window - 1,
            )
        }
        _ => {
            return Err(Error::Parameter(
                "self-reduction converts Gaussian->Gaussian or Uniform->Uniform".into(),
            ))
        }
    };
    diagnostics.record("p_norm_sq", state.rejection_accept_probability(&p)?);
    let (accepted, resampled) = state.rejection_resample(&p, rng)?;
    if !accepted {
        diagnostics.event("rejection resampling failed");
        return Ok(ReductionOutcome::failed(diagnostics));
    }
    let state = resampled.unwrap().relabel_int_register(|j| j, lo, hi)?;
    let out_params = EdcpParams::new(params.n, params.modulus, *target, params.ell)?;
    Ok(ReductionOutcome::succeeded((state, out_params), diagnostics))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcpBranch {
    /// `r >= 3 log2 N`: via a uniform window and an `|j|` measurement.
    Wide,
    /// `r < 3 log2 N`: accept only the `|j| = 1` outcome.
    Narrow,
}

#[derive(Debug, Clone)]
pub struct DcpOutput {
    /// `|0>|x> + |1>|x + 2s mod N>`.
    pub state: SparseState,
    /// The measured magnitude whose two-sided collapse became the coset pair.
    pub v: i64,
    pub branch: DcpBranch,
}

/// The two candidate secrets `s` with `2s = sbar mod N`; for odd `N` the
/// preimage is unique, for even `N` and odd `sbar` there is none.
pub fn dcp_secret_preimages(sbar: u64, modulus: u64) -> Vec<u64> {
    if modulus % 2 == 1 {
        let inv2 = mod_inverse(2, modulus).expect("2 is a unit mod odd N");
        vec![sbar % modulus * inv2 % modulus]
    } else if sbar.is_multiple_of(2) {
        vec![sbar / 2, (sbar / 2 + modulus / 2) % modulus]
    } else {
        Vec::new()
    }
}

/// One-dimensional G-EDCP -> DCP. The output state carries the doubled
/// secret `sbar = 2s mod N`; [`dcp_secret_preimages`] lists the candidates
/// a caller must test.
pub fn gedcp_to_dcp(
    state: SparseState,
    params: &EdcpParams,
    wide_window_constant: f64,
    rng: &mut SimRng,
) -> Result<ReductionOutcome<DcpOutput>> {
    if params.n != 1 {
        return Err(Error::Parameter("DCP conversion is one-dimensional".into()));
    }
    let n_mod = params.modulus;
    let mut diagnostics = Diagnostics::default();
    match &params.dist {
        WeightFn::Gaussian(g) if g.r >= 3.0 * (n_mod as f64).log2() => {
            diagnostics.record("branch_wide", 1.0);
            // Uniform window of odd width M0 ~ c * r, then symmetrize.
            let mut m0 = (wide_window_constant * g.r).round() as i64;
            if m0 % 2 == 0 {
                m0 -= 1;
            }
            if m0 < 3 || m0 - 1 > g.cutoff {
                return Err(Error::Parameter(format!(
                    "wide window M0 = {m0} out of range for cutoff {}",
                    g.cutoff
                )));
            }
            let flat = match g_to_u(state, params, m0 as f64 / g.r, rng)? {
                out if out.success => out.expect_payload().0,
                out => {
                    diagnostics.events.extend(out.diagnostics.events);
                    return Ok(ReductionOutcome::failed(diagnostics));
                }
            };
            let symmetric = flat.shift_int_register(-(m0 - 1) / 2)?;
            finish_dcp(symmetric, n_mod, DcpBranch::Wide, diagnostics, rng)
        }
        WeightFn::Gaussian(_) => {
            diagnostics.record("branch_wide", 0.0);
            let pr_v1: f64 = state
                .iter()
                .filter(|(label, _)| label[0].abs() == 1)
                .map(|(_, amp)| amp.norm_sqr())
                .sum();
            diagnostics.record("pr_v1_analytic", pr_v1);
            let outcome = state.measure_derived(|label| vec![label[0].abs()], rng)?;
            let v = outcome.value[0];
            diagnostics.record("v", v as f64);
            if v != 1 {
                diagnostics.event("narrow branch requires |j| = 1");
                return Ok(ReductionOutcome::failed(diagnostics));
            }
            finish_collapsed(outcome.collapsed, v, n_mod, DcpBranch::Narrow, diagnostics)
        }
        WeightFn::Uniform(_) | WeightFn::Indicator01 => {
            // Symmetrize the flat window, then the |j| measurement as in the
            // wide branch. For an even window the extreme magnitude has a
            // single partner and the collapse degenerates to one point.
            diagnostics.record("branch_wide", 1.0);
            let m_window = match &params.dist {
                WeightFn::Uniform(m) => *m as i64,
                _ => 2,
            };
            let symmetric = state.shift_int_register(-(m_window - 1) / 2)?;
            finish_dcp(symmetric, n_mod, DcpBranch::Wide, diagnostics, rng)
        }
    }
}

fn finish_dcp(
    symmetric: SparseState,
    n_mod: u64,
    branch: DcpBranch,
    mut diagnostics: Diagnostics,
    rng: &mut SimRng,
) -> Result<ReductionOutcome<DcpOutput>> {
    let outcome = symmetric.measure_derived(|label| vec![label[0].abs()], rng)?;
    let v = outcome.value[0];
    diagnostics.record("v", v as f64);
    if v == 0 {
        diagnostics.event("measured |j| = 0");
        return Ok(ReductionOutcome::failed(diagnostics));
    }
    if gcd(v as u64, n_mod) != 1 {
        diagnostics.event("measured magnitude shares a factor with N");
        return Ok(ReductionOutcome::failed(diagnostics));
    }
    finish_collapsed(outcome.collapsed, v, n_mod, branch, diagnostics)
}

/// From the two-point state `|-v>|y - v s> + |v>|y + v s>`: multiply the
/// coset register by `v^{-1} mod N` and relabel `{-v, v} -> {0, 1}`.
fn finish_collapsed(
    collapsed: SparseState,
    v: i64,
    n_mod: u64,
    branch: DcpBranch,
    mut diagnostics: Diagnostics,
) -> Result<ReductionOutcome<DcpOutput>> {
    if collapsed.support_len() != 2 {
        diagnostics.event("collapse left a one-sided window; not a coset pair");
        return Ok(ReductionOutcome::failed(diagnostics));
    }
    let inv = mod_inverse(v as u64, n_mod).expect("v coprime with N");
    let rescaled = collapsed.map_register_values(1, |x| {
        vec![(x[0] as i128 * inv as i128).rem_euclid(n_mod as i128) as i64]
    })?;
    let state = rescaled.relabel_int_register(move |j| (j + v) / (2 * v), 0, 1)?;
    Ok(ReductionOutcome::succeeded(DcpOutput { state, v, branch }, diagnostics))
}
