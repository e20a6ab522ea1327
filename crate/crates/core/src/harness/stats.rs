//! Descriptive statistics and the Mann-Whitney U test.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{domain, Result};

/// Samples at or above this size (both groups) use the normal approximation.
pub const NORMAL_APPROX_MIN: usize = 20;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n − 1 denominator); zero for one sample.
pub fn sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Mid-ranks (1-based) of the pooled sample, plus tie-group sizes.
fn midranks(pooled: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..pooled.len()).collect();
    idx.sort_by(|&a, &b| pooled[a].total_cmp(&pooled[b]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && pooled[idx[j + 1]] == pooled[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        ties.push(j - i + 1);
        i = j + 1;
    }
    (ranks, ties)
}

/// Two-sided Mann-Whitney U test.
///
/// Returns `U` for `a` (number of pairs with `a > b`, ties counting one
/// half) and the p-value. When both samples have at least
/// [`NORMAL_APPROX_MIN`] values the p-value comes from the tie-corrected
/// normal approximation with continuity correction; otherwise it is exact,
/// computed from the permutation distribution of the mid-rank sum.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.is_empty() || b.is_empty() {
        return Err(domain("Mann-Whitney U needs two non-empty samples"));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(domain("Mann-Whitney U needs finite samples"));
    }
    let (na, nb) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let rank_sum_a: f64 = ranks[..na].iter().sum();
    let u = rank_sum_a - (na * (na + 1)) as f64 / 2.0;
    if ties.len() == 1 {
        return Ok((u, 1.0));
    }
    let mu = (na * nb) as f64 / 2.0;
    let p = if na.min(nb) >= NORMAL_APPROX_MIN {
        let n = (na + nb) as f64;
        let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum();
        let var = (na * nb) as f64 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
        let z = ((u - mu).abs() - 0.5).max(0.0) / var.sqrt();
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        2.0 * (1.0 - normal.cdf(z))
    } else {
        exact_p(&ranks, na, u - mu)
    };
    Ok((u, p.clamp(0.0, 1.0)))
}

/// `P(|U − μ| ≥ |observed|)` over all ways to choose `na` of the pooled
/// mid-ranks, by dynamic programming on doubled ranks (integers).
fn exact_p(ranks: &[f64], na: usize, observed: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let max_sum: usize = doubled.iter().sum();
    // counts[k][s]: number of k-subsets with doubled rank sum s.
    let mut counts = vec![vec![0f64; max_sum + 1]; na + 1];
    counts[0][0] = 1.0;
    for &r in &doubled {
        for k in (1..=na).rev() {
            let (lo, hi) = counts.split_at_mut(k);
            for s in (r..=max_sum).rev() {
                hi[0][s] += lo[k - 1][s - r];
            }
        }
    }
    let total: f64 = counts[na].iter().sum();
    let offset = (na * (na + 1)) as f64;
    let mu2 = (na * (ranks.len() - na)) as f64;
    let threshold = 2.0 * observed.abs() - 1e-9;
    let extreme: f64 = counts[na]
        .iter()
        .enumerate()
        .filter(|&(s, &c)| c > 0.0 && (s as f64 - offset - mu2).abs() >= threshold)
        .map(|(_, &c)| c)
        .sum();
    extreme / total
}
