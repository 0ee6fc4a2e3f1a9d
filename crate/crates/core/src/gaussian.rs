//! Gaussian weight function, discrete Gaussian sampling, tail bounds and the
//! one-dimensional Poisson summation identity.
//!
//! The weight `rho_r(x) = exp(-pi * ||x||^2 / r^2)` is kept unnormalized
//! (`rho_r(0) = 1`); probability normalization happens only at sampling and
//! state-preparation time. All sums over `Z` are truncated at the working
//! radius `ceil(sqrt(max(kappa, 64)) * r)`, below which the omitted mass is
//! under double-precision noise.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SimRng;

/// Default tail-cut security parameter; `2^-Omega(64)` is far below every
/// statistical tolerance used by the experiment suites.
pub const DEFAULT_KAPPA: u32 = 64;

/// Width parameter `r` with its tail-cut `kappa` and derived truncation
/// radius `cutoff = ceil(sqrt(kappa) * r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianParam {
    pub r: f64,
    pub kappa: u32,
    pub cutoff: i64,
}

impl GaussianParam {
    pub fn new(r: f64, kappa: u32) -> Result<Self> {
        if !r.is_finite() || r <= 0.0 {
            return Err(Error::Parameter(format!("gaussian width r must be positive, got {r}")));
        }
        if kappa < 1 {
            return Err(Error::Parameter("kappa must be >= 1".into()));
        }
        let cutoff = ((kappa as f64).sqrt() * r).ceil().max(1.0) as i64;
        Ok(Self { r, kappa, cutoff })
    }

    /// `2 * exp(-(3/4) * pi * (sqrt(kappa) r + 1)^2 / (2r)^2)`, the explicit
    /// constant behind the `2^-Omega(kappa)` tail mass.
    pub fn tail_bound(&self) -> f64 {
        tail_bound(self.r, self.kappa)
    }
}

/// Explicit tail-mass bound for the cut at `sqrt(kappa) * r`.
pub fn tail_bound(r: f64, kappa: u32) -> f64 {
    let b = (kappa as f64).sqrt() * r;
    2.0 * (-(3.0 / 4.0) * PI * (b + 1.0) * (b + 1.0) / (4.0 * r * r)).exp()
}

/// Amplitude-weight function of an EDCP instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WeightFn {
    /// `rho_r(j)` on the truncated support `[-cutoff, cutoff]`.
    Gaussian(GaussianParam),
    /// `1` on `{0, ..., M-1}`, `0` elsewhere.
    Uniform(u64),
    /// `1` on `{0, 1}`: the plain dihedral coset case, alias of `Uniform(2)`.
    Indicator01,
}

impl WeightFn {
    pub fn gaussian(r: f64, kappa: u32) -> Result<Self> {
        Ok(WeightFn::Gaussian(GaussianParam::new(r, kappa)?))
    }

    pub fn uniform(m: u64) -> Result<Self> {
        if m < 1 {
            return Err(Error::Parameter("uniform weight needs M >= 1".into()));
        }
        Ok(WeightFn::Uniform(m))
    }

    /// Inclusive support window.
    pub fn support(&self) -> (i64, i64) {
        match self {
            WeightFn::Gaussian(g) => (-g.cutoff, g.cutoff),
            WeightFn::Uniform(m) => (0, *m as i64 - 1),
            WeightFn::Indicator01 => (0, 1),
        }
    }

    pub fn eval(&self, j: i64) -> f64 {
        let (lo, hi) = self.support();
        if j < lo || j > hi {
            return 0.0;
        }
        match self {
            WeightFn::Gaussian(g) => rho1(g.r, j as f64),
            WeightFn::Uniform(_) | WeightFn::Indicator01 => 1.0,
        }
    }

    /// Width of the support window, i.e. number of labels with nonzero weight.
    pub fn support_len(&self) -> usize {
        let (lo, hi) = self.support();
        (hi - lo + 1) as usize
    }
}

/// `exp(-pi x^2 / r^2)` for scalar `x`.
pub fn rho1(r: f64, x: f64) -> f64 {
    (-PI * x * x / (r * r)).exp()
}

/// `exp(-pi ||x||^2 / r^2)`.
pub fn rho(r: f64, x: &[f64]) -> Result<f64> {
    if !r.is_finite() || r <= 0.0 {
        return Err(Error::Parameter(format!("rho needs r > 0, got {r}")));
    }
    let norm_sq: f64 = x.iter().map(|v| v * v).sum();
    Ok((-PI * norm_sq / (r * r)).exp())
}

/// `sum_{|j| <= B} rho_r(j)`; monotone nondecreasing in `B`.
pub fn rho_sum(r: f64, b: u64) -> f64 {
    assert!(r > 0.0, "rho_sum needs r > 0");
    let mut total = 1.0;
    for j in 1..=b as i64 {
        let t = rho1(r, j as f64);
        if t == 0.0 {
            break;
        }
        total += 2.0 * t;
    }
    total
}

/// Radius beyond which every `rho_r` term underflows relative to the total.
fn working_radius(r: f64, kappa: u32) -> i64 {
    let kappa_work = kappa.max(DEFAULT_KAPPA) as f64;
    // sqrt(870/pi) ~ 16.6 sigma: rho at that radius is ~1e-378, i.e. zero.
    ((kappa_work.sqrt() + 17.0) * r).ceil() as i64 + 1
}

/// `rho_r(Z \ [-radius, radius]) / rho_r(Z)` with both sums extended to the
/// working radius.
pub fn tail_ratio_at_radius(r: f64, radius: i64) -> f64 {
    assert!(r > 0.0 && radius >= 0);
    let far = working_radius(r, DEFAULT_KAPPA).max(radius + 1);
    let mut head = 1.0; // j = 0
    let mut tail = 0.0;
    for j in 1..=far {
        let t = 2.0 * rho1(r, j as f64);
        if j <= radius {
            head += t;
        } else {
            tail += t;
        }
    }
    tail / (head + tail)
}

/// Relative mass of the Gaussian tail beyond the parameter's cutoff. The
/// result is strictly below [`tail_bound`] for every tested `(r, kappa)`.
pub fn tail_ratio(g: &GaussianParam) -> f64 {
    tail_ratio_at_radius(g.r, g.cutoff)
}

/// Both sides of the Poisson summation identity on the lattice `scale * Z`
/// shifted by `u`:
///
/// `sum_j rho_r(scale*j + u)  ==  (r/scale) * sum_{x in (1/scale)Z} cos(2 pi x u) rho_{1/r}(x)`
///
/// Each side is truncated once its omitted mass is below `1e-14`.
pub fn poisson_check(r: f64, u: f64, scale: f64) -> Result<(f64, f64)> {
    if !r.is_finite() || r <= 0.0 || !scale.is_finite() || scale <= 0.0 {
        return Err(Error::Parameter("poisson_check needs r > 0 and scale > 0".into()));
    }
    // Primal side: points scale*j + u within |.| <= t_max carry all but
    // < 1e-14 of the mass.
    let t_max = r * (16.0_f64 * std::f64::consts::LN_10 / PI).sqrt() + u.abs() + scale;
    let j_max = (t_max / scale).ceil() as i64 + 2;
    let mut lhs = 0.0;
    for j in -j_max..=j_max {
        lhs += rho1(r, scale * j as f64 + u);
    }
    // Dual side: x = k / scale, weight rho_{1/r}(x) decays with rate r^2.
    let dual_r = 1.0 / r;
    let x_max = dual_r * (16.0_f64 * std::f64::consts::LN_10 / PI).sqrt();
    let k_max = (x_max * scale).ceil() as i64 + 2;
    let mut rhs = 0.0;
    for k in -k_max..=k_max {
        let x = k as f64 / scale;
        rhs += (2.0 * PI * x * u).cos() * rho1(dual_r, x);
    }
    rhs *= r / scale;
    Ok((lhs, rhs))
}

/// Tabulated distribution over a contiguous integer window, sampled by
/// inverse CDF. Probabilities are exactly the normalized input weights.
#[derive(Debug, Clone)]
pub struct TabulatedDist {
    lo: i64,
    pmf: Vec<f64>,
    cdf: Vec<f64>,
}

impl TabulatedDist {
    pub fn from_weights(lo: i64, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !total.is_finite() || total <= 0.0 || weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(Error::Parameter("weights must be nonnegative with positive sum".into()));
        }
        let pmf: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let mut cdf = Vec::with_capacity(pmf.len());
        let mut acc = 0.0;
        for p in &pmf {
            acc += p;
            cdf.push(acc);
        }
        Ok(Self { lo, pmf, cdf })
    }

    /// Distribution proportional to `weight(j)^power` over the weight's
    /// support window (`power` 1 for amplitudes, 2 for measurement laws).
    pub fn from_weight_fn(dist: &WeightFn, power: u32) -> Result<Self> {
        let (lo, hi) = dist.support();
        let weights: Vec<f64> = (lo..=hi).map(|j| dist.eval(j).powi(power as i32)).collect();
        Self::from_weights(lo, weights)
    }

    pub fn support(&self) -> (i64, i64) {
        (self.lo, self.lo + self.pmf.len() as i64 - 1)
    }

    pub fn pmf(&self, j: i64) -> f64 {
        let idx = j - self.lo;
        if idx < 0 || idx as usize >= self.pmf.len() {
            0.0
        } else {
            self.pmf[idx as usize]
        }
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.pmf
    }

    pub fn sample(&self, rng: &mut SimRng) -> i64 {
        let u: f64 = rng.random();
        // partition_point returns the first index with cdf > u.
        let idx = self.cdf.partition_point(|c| *c <= u);
        self.lo + idx.min(self.pmf.len() - 1) as i64
    }
}

/// Sampler for the truncated integer Gaussian `D_{Z,r}` on
/// `[-cutoff, cutoff]`.
#[derive(Debug, Clone)]
pub struct DiscreteGaussian {
    param: GaussianParam,
    table: TabulatedDist,
}

impl DiscreteGaussian {
    pub fn new(param: GaussianParam) -> Self {
        let weights: Vec<f64> =
            (-param.cutoff..=param.cutoff).map(|j| rho1(param.r, j as f64)).collect();
        let table = TabulatedDist::from_weights(-param.cutoff, weights)
            .expect("gaussian weights are positive");
        Self { param, table }
    }

    pub fn param(&self) -> &GaussianParam {
        &self.param
    }

    pub fn pmf(&self, j: i64) -> f64 {
        self.table.pmf(j)
    }

    pub fn sample(&self, rng: &mut SimRng) -> i64 {
        self.table.sample(rng)
    }
}

/// One-shot draw from `D_{Z,r}` truncated at the parameter's cutoff, with
/// probability exactly `rho_r(j) / rho_r([-cutoff, cutoff])`. Hot loops
/// should build a [`DiscreteGaussian`] once instead.
pub fn sample_discrete_gaussian(g: &GaussianParam, rng: &mut SimRng) -> i64 {
    DiscreteGaussian::new(*g).sample(rng)
}

/// Result of the shifted-Gaussian tail Monte-Carlo check.
#[derive(Debug, Clone)]
pub struct TailCheckReport {
    pub trials: u64,
    pub outside: u64,
    pub ratio: f64,
    /// Three-sigma binomial half-width around `ratio`.
    pub three_sigma: f64,
}

/// Monte-Carlo estimate of the mass of `Z^m + u` outside the ball of radius
/// `sqrt(m) * r`, relative to the total mass.
pub fn vector_tail_check(
    m: usize,
    r: f64,
    u: &[f64],
    trials: u64,
    rng: &mut SimRng,
) -> Result<TailCheckReport> {
    if m == 0 || m > 8 {
        return Err(Error::Parameter("vector_tail_check supports 1 <= m <= 8".into()));
    }
    if u.len() != m {
        return Err(Error::Parameter("shift vector length must equal m".into()));
    }
    if u.iter().map(|v| v * v).sum::<f64>().sqrt() > r {
        return Err(Error::Parameter("shift norm must stay within r".into()));
    }
    if trials == 0 {
        return Err(Error::Parameter("trials must be >= 1".into()));
    }
    // Per-coordinate sampler over j with weight rho_r(j + u_i).
    let samplers: Vec<TabulatedDist> = u
        .iter()
        .map(|ui| {
            let radius = working_radius(r, DEFAULT_KAPPA);
            let lo = (-ui).round() as i64 - radius;
            let hi = (-ui).round() as i64 + radius;
            let weights: Vec<f64> = (lo..=hi).map(|j| rho1(r, j as f64 + ui)).collect();
            TabulatedDist::from_weights(lo, weights)
        })
        .collect::<Result<_>>()?;
    let radius_sq = m as f64 * r * r;
    let mut outside = 0u64;
    for _ in 0..trials {
        let norm_sq: f64 = samplers
            .iter()
            .zip(u)
            .map(|(s, ui)| {
                let x = s.sample(rng) as f64 + ui;
                x * x
            })
            .sum();
        if norm_sq > radius_sq {
            outside += 1;
        }
    }
    let ratio = outside as f64 / trials as f64;
    let three_sigma = 3.0 * (ratio * (1.0 - ratio) / trials as f64).sqrt();
    Ok(TailCheckReport { trials, outside, ratio, three_sigma })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use approx::assert_relative_eq;

    #[test]
    fn rho_closed_forms() {
        assert_relative_eq!(rho(3.0, &[0.0]).unwrap(), 1.0);
        assert_relative_eq!(rho(1.0, &[1.0]).unwrap(), (-PI).exp(), max_relative = 1e-15);
        assert_relative_eq!(rho(2.0, &[1.0, 1.0]).unwrap(), (-PI / 2.0).exp(), max_relative = 1e-15);
        assert!(rho(0.0, &[1.0]).is_err());
        assert!(rho(-1.0, &[1.0]).is_err());
    }

    #[test]
    fn rho_symmetric_and_decreasing() {
        for r in [0.5, 1.0, 2.0, 8.0] {
            for j in 1..40i64 {
                let here = rho1(r, j as f64);
                assert_eq!(here, rho1(r, -j as f64));
                let prev = rho1(r, (j - 1) as f64);
                if prev > 0.0 {
                    assert!(here < prev, "rho not decreasing at r={r}, j={j}");
                }
            }
        }
    }

    #[test]
    fn rho_sum_matches_direct_summation() {
        assert_relative_eq!(rho_sum(1.0, 0), 1.0);
        // Independent term-by-term oracle for sum_{|j|<=10} exp(-pi j^2).
        let mut oracle = 1.0;
        for j in 1..=10 {
            oracle += 2.0 * (-PI * (j * j) as f64).exp();
        }
        assert_relative_eq!(rho_sum(1.0, 10), oracle, max_relative = 1e-15);
        // rho_1(Z) is the theta constant pi^(1/4) / Gamma(3/4) = 1.08643481...
        assert_relative_eq!(rho_sum(1.0, 10), 1.086_434_811_2, max_relative = 1e-9);
        // Monotone in B.
        let mut prev = 0.0;
        for b in 0..20 {
            let s = rho_sum(2.0, b);
            assert!(s >= prev);
            prev = s;
        }
    }

    /// Two-sum oracle computed right here, independent of tail_ratio's loop
    /// structure.
    fn tail_oracle(r: f64, radius: i64) -> f64 {
        let far = 40 * (r.ceil() as i64).max(1) + radius;
        let head: f64 = (-radius..=radius).map(|j| rho1(r, j as f64)).sum();
        let tail: f64 = (radius + 1..=far)
            .map(|j| 2.0 * rho1(r, j as f64))
            .sum();
        tail / (head + tail)
    }

    #[test]
    fn tail_ratio_examples() {
        let g = GaussianParam::new(1.0, 1).unwrap();
        let ratio = tail_ratio(&g);
        assert!(ratio < 2.0 * (-3.0 * PI).exp());
        assert_relative_eq!(ratio, tail_oracle(1.0, g.cutoff), max_relative = 1e-12);

        let g = GaussianParam::new(4.0, 9).unwrap();
        let ratio = tail_ratio(&g);
        // (3/4) pi (sqrt(9)*4 + 1)^2 / (2*4)^2 = (3/4) pi (13/8)^2
        assert!(ratio < 2.0 * (-(3.0 / 4.0) * PI * (13.0f64 / 8.0).powi(2)).exp());
        assert_relative_eq!(ratio, tail_oracle(4.0, g.cutoff), max_relative = 1e-12);

        // Radius 0: complement of the j = 0 term.
        let r = 1.5;
        let ratio0 = tail_ratio_at_radius(r, 0);
        assert_relative_eq!(ratio0, tail_oracle(r, 0), max_relative = 1e-12);
    }

    #[test]
    fn tail_ratio_beats_explicit_bound_on_grid() {
        for r in [0.5, 1.0, 2.0, 4.0, 8.0] {
            for kappa in [1u32, 4, 16, 64] {
                let g = GaussianParam::new(r, kappa).unwrap();
                assert!(
                    tail_ratio(&g) < g.tail_bound(),
                    "tail bound violated at r={r} kappa={kappa}"
                );
            }
        }
    }

    #[test]
    fn poisson_identity_on_grid() {
        for r in [0.5, 1.0, 3.0] {
            for u in [0.0, 0.25, 0.5] {
                for scale in [1.0, 2.0] {
                    let (lhs, rhs) = poisson_check(r, u, scale).unwrap();
                    assert!(
                        (lhs - rhs).abs() <= 1e-9 * lhs.abs().max(rhs.abs()),
                        "PSF mismatch at r={r} u={u} scale={scale}: {lhs} vs {rhs}"
                    );
                    let (lhs_neg, _) = poisson_check(r, -u, scale).unwrap();
                    assert_relative_eq!(lhs, lhs_neg, max_relative = 1e-12);
                }
            }
        }
        let (lhs, rhs) = poisson_check(1.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(lhs, rho_sum(1.0, 40), max_relative = 1e-12);
        assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
    }

    #[test]
    fn discrete_gaussian_stats() {
        let g = GaussianParam::new(2.0, 64).unwrap();
        let sampler = DiscreteGaussian::new(g);
        let mut rng = rng_from_seed(11);
        let n = 100_000u64;
        let mut zeros = 0u64;
        let mut sum = 0i64;
        for _ in 0..n {
            let j = sampler.sample(&mut rng);
            assert!(j.abs() <= g.cutoff);
            if j == 0 {
                zeros += 1;
            }
            sum += j;
        }
        let p0 = sampler.pmf(0);
        let sigma0 = (p0 * (1.0 - p0) / n as f64).sqrt();
        assert!((zeros as f64 / n as f64 - p0).abs() < 3.0 * sigma0);
        // Symmetric distribution: mean 0 within 3 sigma of the sample mean.
        let var: f64 = (-g.cutoff..=g.cutoff)
            .map(|j| sampler.pmf(j) * (j * j) as f64)
            .sum();
        let mean = sum as f64 / n as f64;
        assert!(mean.abs() < 3.0 * (var / n as f64).sqrt());
    }

    #[test]
    fn discrete_gaussian_tv_to_exact_pmf() {
        let g = GaussianParam::new(2.0, DEFAULT_KAPPA).unwrap();
        let sampler = DiscreteGaussian::new(g);
        let mut rng = rng_from_seed(12);
        let n = 1_000_000usize;
        let mut counts = vec![0u64; (2 * g.cutoff + 1) as usize];
        for _ in 0..n {
            counts[(sampler.sample(&mut rng) + g.cutoff) as usize] += 1;
        }
        let tv: f64 = counts
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let j = i as i64 - g.cutoff;
                (*c as f64 / n as f64 - sampler.pmf(j)).abs()
            })
            .sum::<f64>()
            / 2.0;
        assert!(tv <= 0.01, "TV {tv} too large");
    }

    #[test]
    fn vector_tail_examples() {
        let mut rng = rng_from_seed(13);
        // m = 1, u = 0, r = 3: exact 1-dim oracle for mass beyond radius 3.
        let rep = vector_tail_check(1, 3.0, &[0.0], 50_000, &mut rng).unwrap();
        assert!(rep.ratio < 0.09);
        let exact = tail_oracle(3.0, 3);
        assert!((rep.ratio - exact).abs() <= rep.three_sigma.max(3.0 * 1e-3));

        // m = 2, r = 3, u = (0.5, 0): exact truncated double-sum oracle.
        let (r, u) = (3.0, [0.5, 0.0]);
        let mut inside = 0.0;
        let mut total = 0.0;
        for j0 in -60i64..=60 {
            for j1 in -60i64..=60 {
                let x = j0 as f64 + u[0];
                let y = j1 as f64 + u[1];
                let w = rho1(r, (x * x + y * y).sqrt());
                total += w;
                if x * x + y * y > 2.0 * r * r {
                    inside += w;
                }
            }
        }
        let exact2 = inside / total;
        let rep2 = vector_tail_check(2, r, &u, 50_000, &mut rng).unwrap();
        assert!(
            (rep2.ratio - exact2).abs() <= rep2.three_sigma.max(3.0 * 1e-3),
            "{} vs exact {exact2}",
            rep2.ratio
        );

        // Nested events: growing the radius multiplier can only shrink the tail.
        let wide = {
            let mut count = 0u64;
            let n = 20_000;
            let mut rng2 = rng_from_seed(14);
            let sampler = DiscreteGaussian::new(GaussianParam::new(3.0, 64).unwrap());
            for _ in 0..n {
                let x: f64 = (0..2).map(|_| (sampler.sample(&mut rng2) as f64).powi(2)).sum();
                if x > (2.0 * (2.0f64).sqrt() * 3.0).powi(2) {
                    count += 1;
                }
            }
            count as f64 / n as f64
        };
        assert!(wide <= rep2.ratio + 0.01);
    }

    #[test]
    fn weight_fn_shapes() {
        let g = WeightFn::gaussian(1.0, 1).unwrap();
        assert_eq!(g.support(), (-1, 1));
        assert_relative_eq!(g.eval(1), (-PI).exp());
        assert_eq!(g.eval(2), 0.0);
        let u = WeightFn::uniform(4).unwrap();
        assert_eq!(u.support(), (0, 3));
        assert_eq!(u.eval(0), 1.0);
        assert_eq!(u.eval(4), 0.0);
        assert_eq!(WeightFn::Indicator01.support(), WeightFn::Uniform(2).support());
    }
}
