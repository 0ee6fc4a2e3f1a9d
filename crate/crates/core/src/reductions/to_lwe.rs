//! G-EDCP -> LWE: a quantum Fourier transform over `Z_N^n` on the coset
//! register, a measurement that fixes the sample's `a`-component, a change
//! of range on the shift register, a second transform over `Z_N` and a
//! final measurement that leaves `b = <a', s0> + e` with `e` following the
//! folded-Gaussian law of width `N/r`.
//!
//! Fed a decisional-null basis state instead, both measurements come out
//! exactly uniform, which is the decisional variant.

use crate::edcp::EdcpParams;
use crate::error::{Error, Result};
use crate::oracles::{distinguish_lwe_bruteforce, DistinguishVerdict};
use crate::rng::SimRng;
use crate::statevector::{Direction, SparseState};

/// One classical sample `(a', b)` produced by the conversion.
pub type LweSample = (Vec<u64>, u64);

/// Converts one EDCP (or decisional-null) state into a classical sample
/// `(a', b)` with `a' = -a mod N`.
pub fn edcp_to_lwe_sample(
    state: SparseState,
    params: &EdcpParams,
    rng: &mut SimRng,
) -> Result<LweSample> {
    let n_mod = params.modulus;
    // The final tail cut needs the Gaussian width to reach sqrt(kappa), or
    // the produced error is not concentrated inside the residue window.
    if let crate::gaussian::WeightFn::Gaussian(g) = &params.dist {
        if g.r < (g.kappa as f64).sqrt() {
            return Err(Error::Parameter(format!(
                "conversion needs r >= sqrt(kappa); got r = {} with kappa = {}",
                g.r, g.kappa
            )));
        }
    }
    // Fourier transform the coset register and fix `a`.
    let state = state.qft_mod(1, Direction::Forward)?;
    let outcome = state.measure(1, rng)?;
    let a: Vec<u64> = outcome.value.iter().map(|v| *v as u64).collect();
    // Reinterpret the shift register in Z_N; a support point outside the
    // promised window is the 2^-Omega(kappa) tail event, surfaced as a
    // retry signal.
    let state = match outcome.collapsed.lift_int_to_mod(n_mod) {
        Ok(s) => s,
        Err(Error::Precondition(_)) => {
            return Err(Error::Retry("shift register left the promised range for the lift"))
        }
        Err(e) => return Err(e),
    };
    let state = state.qft_mod(0, Direction::Forward)?;
    let outcome = state.measure(0, rng)?;
    let b = outcome.value[0] as u64;
    let a_prime: Vec<u64> = a.iter().map(|ai| (n_mod - ai) % n_mod).collect();
    Ok((a_prime, b))
}

/// Runs the conversion over a batch of states and hands the resulting
/// samples to a pluggable decision procedure.
pub fn dedcp_to_dlwe<T>(
    states: Vec<SparseState>,
    params: &EdcpParams,
    rng: &mut SimRng,
    decide: impl FnOnce(&[LweSample]) -> Result<T>,
) -> Result<(Vec<LweSample>, T)> {
    let mut samples = Vec::with_capacity(states.len());
    for state in states {
        samples.push(edcp_to_lwe_sample(state, params, rng)?);
    }
    let verdict = decide(&samples)?;
    Ok((samples, verdict))
}

/// Convenience wrapper delegating to the brute-force likelihood-ratio
/// distinguisher with error width `N/r`. An empty batch yields no verdict.
pub fn dedcp_to_dlwe_bruteforce(
    states: Vec<SparseState>,
    params: &EdcpParams,
    r_err: f64,
    rng: &mut SimRng,
) -> Result<(Vec<LweSample>, Option<DistinguishVerdict>)> {
    let n = params.n;
    let q = params.modulus;
    dedcp_to_dlwe(states, params, rng, move |samples| {
        if samples.is_empty() {
            Ok(None)
        } else {
            distinguish_lwe_bruteforce(samples, n, q, r_err).map(Some)
        }
    })
}
