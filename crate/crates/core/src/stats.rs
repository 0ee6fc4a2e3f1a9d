//! Small statistical helpers shared by the experiment suites: chi-square
//! goodness-of-fit, total-variation distance, binomial error bars.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Pearson chi-square statistic for observed counts vs expected counts.
/// Cells with expected count below `min_expected` are pooled into their
/// neighbor to keep the chi-square approximation honest.
pub fn chi2_statistic(observed: &[u64], expected: &[f64]) -> Result<(f64, usize)> {
    if observed.len() != expected.len() || observed.is_empty() {
        return Err(Error::Parameter("chi2 needs matching nonempty count vectors".into()));
    }
    let min_expected = 5.0;
    let mut stat = 0.0;
    let mut cells = 0usize;
    let mut pool_obs = 0.0;
    let mut pool_exp = 0.0;
    for (o, e) in observed.iter().zip(expected) {
        pool_obs += *o as f64;
        pool_exp += *e;
        if pool_exp >= min_expected {
            let d = pool_obs - pool_exp;
            stat += d * d / pool_exp;
            cells += 1;
            pool_obs = 0.0;
            pool_exp = 0.0;
        }
    }
    if pool_exp > 0.0 {
        if cells == 0 {
            return Err(Error::Parameter("expected counts too small for chi2".into()));
        }
        let d = pool_obs - pool_exp;
        stat += d * d / pool_exp;
    }
    Ok((stat, cells.max(2) - 1))
}

/// Survival probability of the chi-square distribution: `P[X >= stat]`.
pub fn chi2_pvalue(stat: f64, dof: usize) -> f64 {
    let dist = ChiSquared::new(dof as f64).expect("dof >= 1");
    dist.sf(stat)
}

/// p-value for observed counts against an expected probability vector.
pub fn chi2_test(observed: &[u64], probs: &[f64]) -> Result<f64> {
    let n: u64 = observed.iter().sum();
    let expected: Vec<f64> = probs.iter().map(|p| p * n as f64).collect();
    let (stat, dof) = chi2_statistic(observed, &expected)?;
    Ok(chi2_pvalue(stat, dof))
}

/// p-value of observed counts against the uniform law over all cells.
pub fn chi2_uniform_test(observed: &[u64]) -> Result<f64> {
    let k = observed.len();
    chi2_test(observed, &vec![1.0 / k as f64; k])
}

/// Total-variation distance between an empirical count vector and a pmf.
pub fn tv_counts_vs_pmf(observed: &[u64], probs: &[f64]) -> Result<f64> {
    if observed.len() != probs.len() {
        return Err(Error::Parameter("tv needs matching vector lengths".into()));
    }
    let n: u64 = observed.iter().sum();
    if n == 0 {
        return Err(Error::Parameter("tv needs at least one sample".into()));
    }
    Ok(observed
        .iter()
        .zip(probs)
        .map(|(o, p)| (*o as f64 / n as f64 - p).abs())
        .sum::<f64>()
        / 2.0)
}

/// Total-variation distance between two pmfs over the same index set.
pub fn tv_pmf(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Parameter("tv needs matching vector lengths".into()));
    }
    Ok(p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0)
}

/// Standard deviation of an empirical frequency `p_hat` over `n` trials.
pub fn binomial_sigma(p: f64, n: u64) -> f64 {
    (p.clamp(0.0, 1.0) * (1.0 - p.clamp(0.0, 1.0)) / n as f64).sqrt()
}
