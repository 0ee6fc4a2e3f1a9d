//! Property tests for the simulator invariants: norm preservation,
//! QFT involution across moduli, measurement statistics, rejection
//! acceptance, and reduction determinism.

use num_complex::Complex64;
use proptest::prelude::*;

use dihedral_core::edcp::{gen_edcp, EdcpParams};
use dihedral_core::gaussian::WeightFn;
use dihedral_core::reductions::edcp_to_lwe_sample;
use dihedral_core::rng::rng_from_seed;
use dihedral_core::statevector::{Direction, Register, RegisterLayout, SparseState};

fn random_state(modulus: u64, terms: usize, coeffs: Vec<(i64, f64, f64)>) -> SparseState {
    let layout = RegisterLayout::new(vec![Register::Mod { modulus, arity: 1 }]).unwrap();
    let entries: std::collections::BTreeMap<Vec<i64>, Complex64> = coeffs
        .into_iter()
        .take(terms)
        .map(|(label, re, im)| {
            (vec![label.rem_euclid(modulus as i64)], Complex64::new(re, im))
        })
        .collect();
    SparseState::from_amplitudes(layout, entries).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    /// Forward followed by inverse QFT is the identity to 1e-12, and each
    /// transform preserves the norm, across N in {2, 3, 8, 17}.
    #[test]
    fn qft_involution_and_unitarity(
        modulus in prop::sample::select(vec![2u64, 3, 8, 17]),
        coeffs in prop::collection::vec((0i64..10_000, -1.0f64..1.0, -1.0f64..1.0), 1..20),
    ) {
        // At least one coefficient away from zero keeps the state well-defined.
        prop_assume!(coeffs.iter().any(|(_, re, im)| re.abs() + im.abs() > 1e-3));
        let state = random_state(modulus, 20, coeffs);
        let forward = state.clone().qft_mod(0, Direction::Forward).unwrap();
        prop_assert!((forward.norm() - 1.0).abs() < 1e-12);
        let back = forward.qft_mod(0, Direction::Inverse).unwrap();
        prop_assert!(state.l2_distance(&back).unwrap() <= 1e-12);
    }

    /// Classical application, lifting and shifting all preserve the norm.
    #[test]
    fn relabelings_preserve_norm(
        secret in 0u64..17,
        offset in 0u64..17,
    ) {
        let params = EdcpParams::new(1, 17, WeightFn::gaussian(1.5, 4).unwrap(), 1).unwrap();
        let state = dihedral_core::edcp::ideal_edcp_state(&params, &[secret], &[offset]).unwrap();
        prop_assert!((state.norm() - 1.0).abs() < 1e-12);
        let lifted = state.lift_int_to_mod(17).unwrap();
        prop_assert!((lifted.norm() - 1.0).abs() < 1e-12);
    }

    /// The full EDCP -> LWE conversion is a deterministic function of
    /// (instance, seed).
    #[test]
    fn conversion_is_deterministic(seed in 0u64..5_000) {
        let params = EdcpParams::new(1, 64, WeightFn::gaussian(8.0, 4).unwrap(), 1).unwrap();
        let run = || {
            let mut rng = rng_from_seed(seed);
            let inst = gen_edcp(&params, &mut rng).unwrap();
            edcp_to_lwe_sample(inst.states.into_iter().next().unwrap(), &params, &mut rng).unwrap()
        };
        prop_assert_eq!(run(), run());
    }
}

/// Born-rule frequencies match the exact squared marginal within a small
/// total-variation distance.
#[test]
fn measurement_frequencies_match_marginal() {
    let modulus = 8u64;
    let layout = RegisterLayout::new(vec![Register::Mod { modulus, arity: 1 }]).unwrap();
    let mut setup = rng_from_seed(99);
    use rand::Rng;
    let entries: Vec<(Vec<i64>, Complex64)> = (0..modulus as i64)
        .map(|x| {
            (vec![x], Complex64::new(setup.random::<f64>() - 0.5, setup.random::<f64>() - 0.5))
        })
        .collect();
    let state = SparseState::from_amplitudes(layout, entries).unwrap();
    let exact: Vec<f64> =
        (0..modulus as i64).map(|x| state.amplitude(&[x]).norm_sqr()).collect();
    let mut counts = vec![0u64; modulus as usize];
    let shots = 100_000u64;
    let mut rng = rng_from_seed(100);
    for _ in 0..shots {
        let out = state.clone().measure(0, &mut rng).unwrap();
        counts[out.value[0] as usize] += 1;
    }
    let tv: f64 = counts
        .iter()
        .zip(&exact)
        .map(|(c, p)| (*c as f64 / shots as f64 - p).abs())
        .sum::<f64>()
        / 2.0;
    assert!(tv <= 0.01, "TV {tv}");
}
