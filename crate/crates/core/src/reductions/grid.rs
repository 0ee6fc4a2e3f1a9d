//! The two space-partition devices: the randomized cube grid and the
//! discretized ball, together with the ball-intersection ratio used to
//! calibrate the latter.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::SimRng;

/// Randomized grid over the torus `R^m / q R^m` with cell width `z = q/c`
/// and per-coordinate offsets `w_i in [0, 1)`.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub z: f64,
    pub w: Vec<f64>,
    pub qbar: u64,
    pub c: u64,
    pub k: u64,
}

impl GridSpec {
    pub fn new(q: u64, c: u64, k: u64, w: Vec<f64>) -> Result<Self> {
        if c < 2 || c > q {
            return Err(Error::Parameter("grid needs 2 <= c <= q".into()));
        }
        if k == 0 {
            return Err(Error::Parameter("grid slack k must be >= 1".into()));
        }
        if w.iter().any(|x| !(0.0..1.0).contains(x)) {
            return Err(Error::Parameter("grid offsets must lie in [0, 1)".into()));
        }
        Ok(Self { z: q as f64 / c as f64, w, qbar: c, c, k })
    }

    pub fn sample(q: u64, c: u64, k: u64, m: usize, rng: &mut SimRng) -> Result<Self> {
        let w = (0..m).map(|_| rng.random::<f64>()).collect();
        Self::new(q, c, k, w)
    }
}

/// `x -> (floor((x_1/z - w_1) mod qbar), ...)`, componentwise cell index
/// in `[0, qbar)`.
pub fn grid_fn(x: &[f64], spec: &GridSpec) -> Vec<i64> {
    x.iter()
        .zip(&spec.w)
        .map(|(xi, wi)| {
            let t = (xi / spec.z - wi).rem_euclid(spec.qbar as f64);
            // rem_euclid can return qbar itself when the argument is a tiny
            // negative; clamp the cell index into range.
            (t.floor() as i64).clamp(0, spec.qbar as i64 - 1)
        })
        .collect()
}

/// Geometry of the discretized ball `(1/L) Z^m  ∩  B(0, R)`.
#[derive(Debug, Clone, Copy)]
pub struct BallSpec {
    /// Ball radius `R`.
    pub radius: f64,
    /// Grid denominator `L`; the superposition runs over `(1/L) Z^m`.
    pub denom: u64,
    /// Magnitude bound on the shift `d` the intersection ratio is taken at.
    pub shift_bound: f64,
}

impl BallSpec {
    pub fn new(radius: f64, denom: u64, shift_bound: f64) -> Result<Self> {
        if radius.is_nan() || radius < 1.0 {
            return Err(Error::Parameter("ball radius must be >= 1".into()));
        }
        if denom < 1 {
            return Err(Error::Parameter("ball grid denominator must be >= 1".into()));
        }
        if shift_bound.is_nan() || shift_bound < 0.0 {
            return Err(Error::Parameter("shift bound must be nonnegative".into()));
        }
        Ok(Self { radius, denom, shift_bound })
    }
}

/// Uniform sample from `(1/L) Z^m ∩ B(0, R)`, returned as scaled integers
/// `X = L * x`. Exact rejection from the bounding cube.
pub(crate) fn sample_ball_grid_point(
    m: usize,
    radius: f64,
    denom: u64,
    rng: &mut SimRng,
) -> Vec<i64> {
    let bound = (radius * denom as f64).floor() as i64;
    let limit_sq = (radius * denom as f64) * (radius * denom as f64);
    loop {
        let x: Vec<i64> = (0..m).map(|_| rng.random_range(-bound..=bound)).collect();
        let norm_sq: f64 = x.iter().map(|v| (*v as f64) * (*v as f64)).sum();
        if norm_sq <= limit_sq {
            return x;
        }
    }
}

fn cube_point_budget(m: usize, radius: f64, denom: u64) -> Result<i64> {
    let side = 2 * (radius * denom as f64).floor() as i64 + 1;
    let mut total: i128 = 1;
    for _ in 0..m {
        total = total.saturating_mul(side as i128);
        if total > (1 << 26) {
            return Err(Error::Resource("ball grid enumeration exceeds the budget".into()));
        }
    }
    Ok(side)
}

/// `| grid ∩ B(0,R) ∩ (B(0,R) + d) mod q | / | grid ∩ B(0,R) mod q |`,
/// exact by enumeration for `m <= 4`, Monte-Carlo (with `mc_trials` samples)
/// otherwise.
pub fn ball_intersection_ratio(
    m: usize,
    radius: f64,
    shift: &[f64],
    denom: u64,
    q: u64,
    mc_trials: u64,
    rng: &mut SimRng,
) -> Result<f64> {
    if m == 0 || shift.len() != m {
        return Err(Error::Parameter("shift vector must have length m >= 1".into()));
    }
    let shift_norm = shift.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (q as f64) <= 2.0 * radius + shift_norm {
        return Err(Error::Parameter("need q > 2R + ||d||".into()));
    }
    let spec = BallSpec::new(radius, denom, shift_norm)?;
    let l = spec.denom as f64;
    let in_shifted = |x: &[i64]| -> bool {
        // membership of (x - d) mod q in B(0, R), centered representatives
        let mut norm_sq = 0.0;
        for (xi, di) in x.iter().zip(shift) {
            let mut v = (*xi as f64 / l - di).rem_euclid(q as f64);
            if v > q as f64 / 2.0 {
                v -= q as f64;
            }
            norm_sq += v * v;
        }
        norm_sq <= radius * radius
    };
    if m <= 4 {
        let side = cube_point_budget(m, radius, denom)?;
        let bound = (side - 1) / 2;
        let limit_sq = (radius * l) * (radius * l);
        let mut inside = 0u64;
        let mut overlap = 0u64;
        let mut x = vec![-bound; m];
        loop {
            let norm_sq: f64 = x.iter().map(|v| (*v as f64) * (*v as f64)).sum();
            if norm_sq <= limit_sq {
                inside += 1;
                if in_shifted(&x) {
                    overlap += 1;
                }
            }
            // odometer over the cube
            let mut idx = m;
            loop {
                if idx == 0 {
                    return Ok(overlap as f64 / inside as f64);
                }
                idx -= 1;
                x[idx] += 1;
                if x[idx] <= bound {
                    break;
                }
                x[idx] = -bound;
            }
        }
    } else {
        if mc_trials == 0 {
            return Err(Error::Parameter("monte-carlo ratio needs mc_trials >= 1".into()));
        }
        let mut overlap = 0u64;
        for _ in 0..mc_trials {
            let x = sample_ball_grid_point(m, radius, denom, rng);
            if in_shifted(&x) {
                overlap += 1;
            }
        }
        Ok(overlap as f64 / mc_trials as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn grid_fn_examples() {
        // z = 1, w = 0, qbar = q: identity on residues.
        let spec = GridSpec::new(16, 16, 1, vec![0.0; 3]).unwrap();
        assert_eq!(grid_fn(&[3.0, 0.0, 15.0], &spec), vec![3, 0, 15]);

        // x = 5, z = 2, w = 0.5, qbar = 4: floor(2.0) = 2.
        let spec = GridSpec::new(8, 4, 1, vec![0.5]).unwrap();
        assert_eq!(grid_fn(&[5.0], &spec), vec![2]);
    }

    #[test]
    fn grid_offsets_must_lie_in_unit_interval() {
        assert!(GridSpec::new(16, 8, 2, vec![0.5, 1.0]).is_err());
        assert!(GridSpec::new(16, 8, 2, vec![0.5, -0.1]).is_err());
        assert!(GridSpec::new(16, 1, 2, vec![0.5]).is_err());
    }

    #[test]
    fn ratio_one_at_zero_shift() {
        let mut rng = rng_from_seed(40);
        for m in 1..=3usize {
            let r = ball_intersection_ratio(m, 6.0, &vec![0.0; m], 4, 64, 0, &mut rng).unwrap();
            assert_eq!(r, 1.0);
        }
    }

    #[test]
    fn ratio_hand_example() {
        // m = 1, R = 4, d = 2, L = 1, q = 32: overlap {-2..4} over {-4..4}.
        let mut rng = rng_from_seed(41);
        let r = ball_intersection_ratio(1, 4.0, &[2.0], 1, 32, 0, &mut rng).unwrap();
        assert!((r - 7.0 / 9.0).abs() < 1e-12, "{r}");
    }

    #[test]
    fn ratio_monotone_in_shift() {
        let mut rng = rng_from_seed(42);
        let mut prev = 1.0;
        for step in 0..8 {
            let d = step as f64;
            let r = ball_intersection_ratio(2, 8.0, &[d, 0.0], 4, 64, 0, &mut rng).unwrap();
            assert!(r <= prev + 1e-12, "ratio increased at d={d}");
            prev = r;
        }
    }

    #[test]
    fn ratio_monte_carlo_close_to_exact_direction() {
        let mut rng = rng_from_seed(43);
        // m = 5 goes through the Monte-Carlo path; compare against the
        // 1-dim projection logic indirectly via a generous envelope.
        let r = ball_intersection_ratio(5, 6.0, &[1.0, 0.0, 0.0, 0.0, 0.0], 3, 64, 40_000, &mut rng)
            .unwrap();
        assert!(r > 0.5 && r < 1.0);
    }

    #[test]
    fn ratio_rejects_small_modulus() {
        let mut rng = rng_from_seed(44);
        assert!(ball_intersection_ratio(1, 4.0, &[2.0], 1, 10, 0, &mut rng).is_err());
    }
}
