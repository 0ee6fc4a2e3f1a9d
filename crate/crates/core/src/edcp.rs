//! Instance generators and validators for LWE, DCP and the extrapolated
//! dihedral coset problem, in search and decisional flavors.
//!
//! Instances carry their planted secrets so tests and harnesses can verify
//! reduction outputs white-box; reduction code must only ever touch the
//! public projections ([`LwePublic`] and the bare states).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{DiscreteGaussian, GaussianParam, TabulatedDist, WeightFn, DEFAULT_KAPPA};
use crate::rng::SimRng;
use crate::statevector::{ClassicalMode, Register, RegisterLayout, SparseState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LweParams {
    pub n: usize,
    pub q: u64,
    /// Noise rate; the error width is `alpha * q`.
    pub alpha: f64,
    pub m: usize,
}

impl LweParams {
    pub fn new(n: usize, q: u64, alpha: f64, m: usize) -> Result<Self> {
        if q < 2 {
            return Err(Error::Parameter("q must be >= 2".into()));
        }
        if n == 0 || m < n {
            return Err(Error::Parameter("need m >= n >= 1".into()));
        }
        if !alpha.is_finite() || alpha <= 0.0 || alpha >= 1.0 {
            return Err(Error::Parameter("alpha must lie in (0, 1)".into()));
        }
        Ok(Self { n, q, alpha, m })
    }

    pub fn alpha_q(&self) -> f64 {
        self.alpha * self.q as f64
    }
}

/// A planted LWE instance `b = A s0 + e0 mod q`. The fields `s0` and `e0`
/// are ground truth for tests only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LweInstance {
    pub params: LweParams,
    /// Row-major `m x n`.
    pub a: Vec<Vec<u64>>,
    pub b: Vec<u64>,
    pub s0: Vec<u64>,
    pub e0: Vec<i64>,
}

/// Public projection of an instance: what a reduction is allowed to see.
/// The noise rate is a public parameter of the distribution, not ground
/// truth.
#[derive(Debug, Clone, Copy)]
pub struct LwePublic<'a> {
    pub n: usize,
    pub q: u64,
    pub m: usize,
    pub alpha: f64,
    pub a: &'a [Vec<u64>],
    pub b: &'a [u64],
}

impl LweInstance {
    pub fn public(&self) -> LwePublic<'_> {
        LwePublic {
            n: self.params.n,
            q: self.params.q,
            m: self.params.m,
            alpha: self.params.alpha,
            a: &self.a,
            b: &self.b,
        }
    }

    /// Row samples `(a_i, b_i)` as the classical oracle consumes them.
    pub fn samples(&self) -> Vec<(Vec<u64>, u64)> {
        self.a.iter().cloned().zip(self.b.iter().copied()).collect()
    }
}

/// Uniform `A, s0`, error entries i.i.d. from the truncated `D_{Z, alpha*q}`.
pub fn gen_lwe(params: &LweParams, rng: &mut SimRng) -> Result<LweInstance> {
    let q = params.q;
    let gauss = GaussianParam::new(params.alpha_q(), DEFAULT_KAPPA)?;
    let sampler = DiscreteGaussian::new(gauss);
    let a: Vec<Vec<u64>> =
        (0..params.m).map(|_| (0..params.n).map(|_| rng.random_range(0..q)).collect()).collect();
    let s0: Vec<u64> = (0..params.n).map(|_| rng.random_range(0..q)).collect();
    let e0: Vec<i64> = (0..params.m).map(|_| sampler.sample(rng)).collect();
    let b: Vec<u64> = a
        .iter()
        .zip(&e0)
        .map(|(row, e)| {
            let dot: u64 = row.iter().zip(&s0).map(|(x, y)| x * y % q).sum::<u64>() % q;
            (dot as i64 + e).rem_euclid(q as i64) as u64
        })
        .collect();
    Ok(LweInstance { params: *params, a, b, s0, e0 })
}

/// A uniform `(A, b)` pair shaped like an LWE instance; `s0`/`e0` are absent
/// (zeroed) since nothing is planted.
pub fn gen_uniform_pair(params: &LweParams, rng: &mut SimRng) -> Result<LweInstance> {
    let q = params.q;
    let a: Vec<Vec<u64>> =
        (0..params.m).map(|_| (0..params.n).map(|_| rng.random_range(0..q)).collect()).collect();
    let b: Vec<u64> = (0..params.m).map(|_| rng.random_range(0..q)).collect();
    Ok(LweInstance { params: *params, a, b, s0: vec![0; params.n], e0: vec![0; params.m] })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdcpParams {
    pub n: usize,
    pub modulus: u64,
    pub dist: WeightFn,
    pub ell: usize,
}

impl EdcpParams {
    pub fn new(n: usize, modulus: u64, dist: WeightFn, ell: usize) -> Result<Self> {
        if modulus < 2 {
            return Err(Error::Parameter("modulus must be >= 2".into()));
        }
        if n == 0 || ell == 0 {
            return Err(Error::Parameter("need n >= 1 and ell >= 1".into()));
        }
        if let WeightFn::Gaussian(g) = &dist {
            if modulus <= 2 * g.cutoff as u64 {
                return Err(Error::Parameter(format!(
                    "modulus {} too small for gaussian cutoff {} (need N > 2*cutoff)",
                    modulus, g.cutoff
                )));
            }
        }
        if let WeightFn::Uniform(m) = &dist {
            if *m < 1 {
                return Err(Error::Parameter("uniform weight needs M >= 1".into()));
            }
        }
        Ok(Self { n, modulus, dist, ell })
    }

    /// Layout `[j-register, Z_N^n register]` for states of this instance.
    pub fn layout(&self) -> RegisterLayout {
        let (lo, hi) = self.dist.support();
        RegisterLayout::new(vec![
            Register::Int { min: lo, max: hi },
            Register::Mod { modulus: self.modulus, arity: self.n },
        ])
        .expect("edcp layout is well-formed")
    }
}

/// A planted EDCP instance; `secret` and `offsets` are ground truth for
/// tests only.
#[derive(Debug, Clone)]
pub struct EdcpInstance {
    pub params: EdcpParams,
    pub secret: Vec<u64>,
    pub offsets: Vec<Vec<u64>>,
    pub states: Vec<SparseState>,
}

/// The normalized state `sum_j D(j) |j>|x + j*s mod N>`.
pub fn ideal_edcp_state(
    params: &EdcpParams,
    secret: &[u64],
    offset: &[u64],
) -> Result<SparseState> {
    if secret.len() != params.n || offset.len() != params.n {
        return Err(Error::Parameter("secret/offset dimension mismatch".into()));
    }
    let n_mod = params.modulus as i64;
    let state = SparseState::prepare_weighted(params.layout(), &params.dist)?;
    let secret: Vec<i64> = secret.iter().map(|v| *v as i64).collect();
    let offset: Vec<i64> = offset.iter().map(|v| *v as i64).collect();
    state.apply_classical(
        &[0],
        1,
        move |src| {
            let j = src[0];
            offset.iter().zip(&secret).map(|(x, s)| (x + j * s).rem_euclid(n_mod)).collect()
        },
        ClassicalMode::Write,
    )
}

/// Uniform secret and offsets, states built by weighted preparation plus a
/// reversible classical map.
pub fn gen_edcp(params: &EdcpParams, rng: &mut SimRng) -> Result<EdcpInstance> {
    let q = params.modulus;
    let secret: Vec<u64> = (0..params.n).map(|_| rng.random_range(0..q)).collect();
    let mut offsets = Vec::with_capacity(params.ell);
    let mut states = Vec::with_capacity(params.ell);
    for _ in 0..params.ell {
        let x: Vec<u64> = (0..params.n).map(|_| rng.random_range(0..q)).collect();
        states.push(ideal_edcp_state(params, &secret, &x)?);
        offsets.push(x);
    }
    Ok(EdcpInstance { params: params.clone(), secret, offsets, states })
}

/// Decisional-null states `|j_k>|x_k>` with `j_k` drawn proportional to
/// `D(j)^2` (the measurement statistics of the search states) and uniform
/// `x_k`.
pub fn gen_decisional_null(params: &EdcpParams, rng: &mut SimRng) -> Result<Vec<SparseState>> {
    let squared = TabulatedDist::from_weight_fn(&params.dist, 2)?;
    let layout = params.layout();
    let q = params.modulus;
    (0..params.ell)
        .map(|_| {
            let j = squared.sample(rng);
            let mut label = vec![0i64; layout.slots()];
            label[0] = j;
            for slot in label.iter_mut().skip(1) {
                *slot = rng.random_range(0..q) as i64;
            }
            SparseState::prepare_basis(layout.clone(), label)
        })
        .collect()
}

/// White-box oracle: does `state` equal the ideal EDCP state for
/// `(secret, offset, params.dist)` up to global phase, within l2 1e-9?
pub fn verify_edcp_state(
    state: &SparseState,
    params: &EdcpParams,
    secret: &[u64],
    offset: &[u64],
) -> bool {
    match ideal_edcp_state(params, secret, offset) {
        Ok(ideal) => matches!(state.l2_distance(&ideal), Ok(d) if d <= 1e-9),
        Err(_) => false,
    }
}

/// Structural (public-data) classification: if `state` is an EDCP state for
/// some `(offset, secret)` over the full support window of `dist`, return
/// that pair. Used by reductions to flag success without the ground truth.
pub fn classify_edcp_state(state: &SparseState, params: &EdcpParams) -> Option<(Vec<u64>, Vec<u64>)> {
    let (lo, hi) = params.dist.support();
    let window = (hi - lo + 1) as usize;
    if state.support_len() != window {
        return None;
    }
    let n = params.n;
    let n_mod = params.modulus as i64;
    // Collect the mod-register value per j; every j in the window must
    // appear exactly once.
    let mut per_j: Vec<Option<Vec<i64>>> = vec![None; window];
    for (label, _) in state.iter() {
        let j = label[0];
        if j < lo || j > hi {
            return None;
        }
        let idx = (j - lo) as usize;
        if per_j[idx].is_some() {
            return None;
        }
        per_j[idx] = Some(label[1..1 + n].to_vec());
    }
    let values: Vec<Vec<i64>> = per_j.into_iter().collect::<Option<_>>()?;
    let secret: Vec<u64> = if window == 1 {
        vec![0; n]
    } else {
        (0..n)
            .map(|c| (values[1][c] - values[0][c]).rem_euclid(n_mod) as u64)
            .collect()
    };
    let offset: Vec<u64> = (0..n)
        .map(|c| (values[0][c] - lo * secret[c] as i64).rem_euclid(n_mod) as u64)
        .collect();
    if verify_edcp_state(state, params, &secret, &offset) {
        Some((offset, secret))
    } else {
        None
    }
}

/// Structure-only secret extraction for states whose support may cover only
/// part of the weight window (e.g. after a rejection-resampling chain):
/// requires one label per `j` over a contiguous range of at least two
/// values, all consistent with `x_j = x + j*s mod N`. Amplitudes are not
/// inspected.
pub fn extract_affine_secret(state: &SparseState, modulus: u64, n: usize) -> Option<(Vec<u64>, Vec<u64>)> {
    let n_mod = modulus as i64;
    let mut per_j: std::collections::BTreeMap<i64, Vec<i64>> = std::collections::BTreeMap::new();
    for (label, _) in state.iter() {
        if per_j.insert(label[0], label[1..1 + n].to_vec()).is_some() {
            return None;
        }
    }
    if per_j.len() < 2 {
        return None;
    }
    let js: Vec<i64> = per_j.keys().copied().collect();
    if js.windows(2).any(|w| w[1] != w[0] + 1) {
        return None;
    }
    let (j0, x0) = (js[0], &per_j[&js[0]]);
    let x1 = &per_j[&js[1]];
    let secret: Vec<u64> =
        (0..n).map(|c| (x1[c] - x0[c]).rem_euclid(n_mod) as u64).collect();
    let offset: Vec<u64> =
        (0..n).map(|c| (x0[c] - j0 * secret[c] as i64).rem_euclid(n_mod) as u64).collect();
    for (j, xs) in &per_j {
        for c in 0..n {
            let expect = (offset[c] as i64 + j * secret[c] as i64).rem_euclid(n_mod);
            if xs[c] != expect {
                return None;
            }
        }
    }
    Some((offset, secret))
}

/// Seeded serialized form: states are regenerable from `(seed, params)`,
/// so only those plus the planted ground truth are stored.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdcpInstanceSeed {
    pub seed: u64,
    pub params: EdcpParams,
    pub secret: Vec<u64>,
    pub offsets: Vec<Vec<u64>>,
}

impl EdcpInstanceSeed {
    pub fn capture(seed: u64, instance: &EdcpInstance) -> Self {
        Self {
            seed,
            params: instance.params.clone(),
            secret: instance.secret.clone(),
            offsets: instance.offsets.clone(),
        }
    }

    pub fn regenerate(&self) -> Result<EdcpInstance> {
        let mut rng = crate::rng::rng_from_seed(self.seed);
        let instance = gen_edcp(&self.params, &mut rng)?;
        if instance.secret != self.secret || instance.offsets != self.offsets {
            return Err(Error::Inconsistent("regenerated instance disagrees with the stored record".into()));
        }
        Ok(instance)
    }
}
