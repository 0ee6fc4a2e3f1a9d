//! The reduction algorithms: LWE -> G-EDCP by cube separation and by ball
//! intersection, G-EDCP -> LWE through the double Fourier transform, the
//! decisional variants of both, and all EDCP-variant inter-conversions
//! (Gaussian <-> uniform, width self-reduction, G-EDCP -> DCP).

mod ball;
mod convert;
mod cube;
mod grid;
mod to_lwe;

pub use ball::{default_ball_radius, dlwe_to_dedcp, lwe_to_edcp_ball, BallParams};
pub use convert::{
    dcp_secret_preimages, edcp_self_reduce, g_to_u, gedcp_to_dcp, u_to_g, DcpBranch, DcpOutput,
};
pub use cube::{lwe_to_edcp_cube, CubeContext, CubeParams, CubeRepetition};
pub use grid::{ball_intersection_ratio, grid_fn, BallSpec, GridSpec};
pub use to_lwe::{dedcp_to_dlwe, dedcp_to_dlwe_bruteforce, edcp_to_lwe_sample, LweSample};

use std::collections::BTreeMap;

/// Free-form per-reduction measurements and acceptance events.
#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    pub values: BTreeMap<String, f64>,
    pub events: Vec<String>,
}

impl Diagnostics {
    pub fn record(&mut self, key: &str, value: f64) {
        self.values.insert(key.to_string(), value);
    }

    pub fn event(&mut self, what: impl Into<String>) {
        self.events.push(what.into());
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.values.get(key).copied()
    }
}

/// Outcome of one probabilistic reduction step; the payload is present
/// exactly when the step succeeded.
#[derive(Debug, Clone)]
pub struct ReductionOutcome<T> {
    pub success: bool,
    pub payload: Option<T>,
    pub diagnostics: Diagnostics,
}

impl<T> ReductionOutcome<T> {
    pub fn succeeded(payload: T, diagnostics: Diagnostics) -> Self {
        Self { success: true, payload: Some(payload), diagnostics }
    }

    pub fn failed(diagnostics: Diagnostics) -> Self {
        Self { success: false, payload: None, diagnostics }
    }

    pub fn expect_payload(self) -> T {
        self.payload.expect("reduction outcome carries a payload on success")
    }
}
