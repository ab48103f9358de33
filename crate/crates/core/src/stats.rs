//! Statistical verdicts over recorded traces.
//!
//! Every check here consumes trace rounds (not live simulator state), so any
//! claim can be re-derived from files. Interval estimates use exact binomial
//! machinery (Clopper-Pearson, exact tails) rather than normal
//! approximations, since several experiments sit in the small-probability
//! regime where the approximation is at its worst.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, Binomial, ChiSquared, ContinuousCDF, DiscreteCDF, Normal};

use crate::trace::RoundTrace;
use crate::vrf::SelectionFraction;
use crate::{Error, Result};

/// Exact Clopper-Pearson confidence interval for a binomial proportion.
pub fn clopper_pearson(successes: u64, trials: u64, confidence: f64) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::Stats("no trials".into()));
    }
    if !(0.0..1.0).contains(&confidence) || confidence <= 0.0 {
        return Err(Error::Stats(format!("confidence must be in (0, 1), got {confidence}")));
    }
    if successes > trials {
        return Err(Error::Stats("successes exceed trials".into()));
    }
    let alpha = 1.0 - confidence;
    let k = successes as f64;
    let n = trials as f64;
    let lo = if successes == 0 {
        0.0
    } else {
        Beta::new(k, n - k + 1.0)
            .map_err(|e| Error::Stats(e.to_string()))?
            .inverse_cdf(alpha / 2.0)
    };
    let hi = if successes == trials {
        1.0
    } else {
        Beta::new(k + 1.0, n - k)
            .map_err(|e| Error::Stats(e.to_string()))?
            .inverse_cdf(1.0 - alpha / 2.0)
    };
    Ok((lo, hi))
}

/// Exact one-sided binomial tail: P[X >= k] for X ~ Binomial(n, p0).
pub fn binomial_tail_ge(k: u64, n: u64, p0: f64) -> Result<f64> {
    if n == 0 || !(0.0..=1.0).contains(&p0) {
        return Err(Error::Stats("invalid binomial tail query".into()));
    }
    if k == 0 {
        return Ok(1.0);
    }
    if k > n {
        return Ok(0.0);
    }
    // P[X >= k] = I_{p0}(k, n-k+1), the regularized incomplete beta.
    let beta = Beta::new(k as f64, (n - k + 1) as f64).map_err(|e| Error::Stats(e.to_string()))?;
    Ok(beta.cdf(p0))
}

/// Central band [lo, hi] for Binomial(n, p) with at most `alpha_per_side`
/// probability mass outside on each side.
pub fn exact_binomial_band(n: u64, p: f64, alpha_per_side: f64) -> Result<(u64, u64)> {
    if !(0.0..=1.0).contains(&p) || !(0.0..0.5).contains(&alpha_per_side) {
        return Err(Error::Stats("invalid band query".into()));
    }
    let dist = Binomial::new(p, n).map_err(|e| Error::Stats(e.to_string()))?;
    let mut lo = 0u64;
    while lo < n && dist.cdf(lo) <= alpha_per_side {
        lo += 1;
    }
    // P[X < lo] <= alpha by construction of the scan above.
    let mut hi = lo;
    while hi < n && dist.cdf(hi) < 1.0 - alpha_per_side {
        hi += 1;
    }
    Ok((lo, hi))
}

/// One-sided tail mass of the standard normal at `sigmas` deviations; the
/// per-side alpha of an n-sigma band.
pub fn one_sided_alpha(sigmas: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("standard normal").cdf(-sigmas)
}

/// Pearson chi-square test of uniformity over equal-width bins.
pub fn chi_square_uniform(counts: &[u64]) -> Result<(f64, f64)> {
    if counts.len() < 2 {
        return Err(Error::Stats("need at least two bins".into()));
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::Stats("empty sample".into()));
    }
    let expected = total as f64 / counts.len() as f64;
    let stat: f64 =
        counts.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
    let dof = (counts.len() - 1) as f64;
    let dist = ChiSquared::new(dof).map_err(|e| Error::Stats(e.to_string()))?;
    Ok((stat, 1.0 - dist.cdf(stat)))
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::Stats("empty sample".into()));
    }
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_unstable_by(|p, q| p.total_cmp(q));
    b.sort_unstable_by(|p, q| p.total_cmp(q));
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let (fa, fb);
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        fa = i as f64 / n as f64;
        fb = j as f64 / m as f64;
        d = d.max((fa - fb).abs());
    }
    let ne = (n as f64 * m as f64) / (n as f64 + m as f64);
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    let mut p = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64).powi(2) * lambda * lambda).exp();
        p += if k % 2 == 1 { 2.0 * term } else { -2.0 * term };
    }
    Ok((d, p.clamp(0.0, 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tail {
    Lower,
    Upper,
}

/// Multiplicative Chernoff bound for X ~ Binomial(n, mu):
/// lower tail P[X <= (1-eps)·n·mu] <= exp(-eps²·n·mu/2),
/// upper tail P[X >= (1+eps)·n·mu] <= exp(-eps²·n·mu/3).
pub fn chernoff_bound(n: u64, mu: f64, eps: f64, tail: Tail) -> Result<f64> {
    if n == 0 || !(0.0 < mu && mu <= 1.0) {
        return Err(Error::Stats(format!("invalid mean {mu} or count {n}")));
    }
    if !(0.0 < eps && eps <= 1.0) {
        return Err(Error::Stats(format!("deviation must be in (0, 1], got {eps}")));
    }
    let exponent = match tail {
        Tail::Lower => -eps * eps * n as f64 * mu / 2.0,
        Tail::Upper => -eps * eps * n as f64 * mu / 3.0,
    };
    Ok(exponent.exp())
}

/// Pool consistency over a trace: no client may admit both a provable
/// selected verdict and a provable not-selected verdict, and the recorded
/// verdict lists must agree with the recorded pools.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub rounds: u64,
    pub verdicts_checked: u64,
    pub conflicts: u64,
    pub structural_violations: u64,
    pub pass: bool,
}

pub fn check_pool_consistency(rounds: &[RoundTrace]) -> ConsistencyReport {
    let mut conflicts = 0u64;
    let mut structural = 0u64;
    let mut checked = 0u64;
    for r in rounds {
        conflicts += r.pver.conflicted.len() as u64;
        let qualified: BTreeSet<u32> = r.qualified.iter().copied().collect();
        let members: BTreeSet<u32> = r
            .pool_initial
            .iter()
            .chain(r.pool_final.iter())
            .copied()
            .collect();
        let expected: BTreeSet<u32> =
            qualified.intersection(&members).copied().collect();
        let recorded: BTreeSet<u32> = r.pver.selected.iter().copied().collect();
        let pool: BTreeSet<u32> = r.pool.iter().copied().collect();
        checked += (qualified.len() + members.len()) as u64;
        if recorded != expected {
            structural += recorded.symmetric_difference(&expected).count() as u64;
        }
        if pool != recorded {
            structural += pool.symmetric_difference(&recorded).count() as u64;
        }
        // A selected verdict for a client listed as conflicted would be the
        // two-observer contradiction itself.
        conflicts += r.pver.conflicted.iter().filter(|id| recorded.contains(id)).count() as u64;
    }
    ConsistencyReport {
        rounds: rounds.len() as u64,
        verdicts_checked: checked,
        conflicts,
        structural_violations: structural,
        pass: conflicts == 0 && structural == 0,
    }
}

/// Per-client selection-rate estimate with an exact confidence interval.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AntiTargetingReport {
    pub client: u32,
    pub rounds: u64,
    pub selections: u64,
    pub rate: f64,
    pub target: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub confidence: f64,
    pub pass: bool,
}

pub fn estimate_anti_targeting(
    rounds: &[RoundTrace],
    client: u32,
    c: &SelectionFraction,
    confidence: f64,
) -> Result<AntiTargetingReport> {
    if rounds.len() < 100 {
        return Err(Error::Stats(format!(
            "anti-targeting estimate needs at least 100 rounds, got {}",
            rounds.len()
        )));
    }
    let selections =
        rounds.iter().filter(|r| r.pool.binary_search(&client).is_ok()).count() as u64;
    let trials = rounds.len() as u64;
    let (lo, hi) = clopper_pearson(selections, trials, confidence)?;
    let target = c.as_f64();
    Ok(AntiTargetingReport {
        client,
        rounds: trials,
        selections,
        rate: selections as f64 / trials as f64,
        target,
        ci_low: lo,
        ci_high: hi,
        confidence,
        pass: lo <= target && target <= hi,
    })
}

/// Exact-binomial band check across every client at once.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BandReport {
    pub n_clients: u32,
    pub rounds: u64,
    pub band_low: u64,
    pub band_high: u64,
    pub alpha_per_side: f64,
    pub out_of_band: Vec<u32>,
    pub pass: bool,
}

pub fn anti_targeting_band(
    rounds: &[RoundTrace],
    n_clients: u32,
    c: &SelectionFraction,
    sigmas: f64,
) -> Result<BandReport> {
    if rounds.is_empty() {
        return Err(Error::Stats("no rounds".into()));
    }
    let mut counts = vec![0u64; n_clients as usize];
    for r in rounds {
        for &id in &r.pool {
            let slot = counts
                .get_mut(id as usize)
                .ok_or_else(|| Error::Stats(format!("client id {id} out of range")))?;
            *slot += 1;
        }
    }
    let alpha = one_sided_alpha(sigmas);
    let (lo, hi) = exact_binomial_band(rounds.len() as u64, c.as_f64(), alpha)?;
    let out_of_band: Vec<u32> = counts
        .iter()
        .enumerate()
        .filter(|(_, &k)| k < lo || k > hi)
        .map(|(i, _)| i as u32)
        .collect();
    Ok(BandReport {
        n_clients,
        rounds: rounds.len() as u64,
        band_low: lo,
        band_high: hi,
        alpha_per_side: alpha,
        pass: out_of_band.is_empty(),
        out_of_band,
    })
}

/// Honest representation inside selected pools.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoolQualityReport {
    pub rounds: u64,
    pub empty_pools: u64,
    pub alpha_honest: f64,
    pub epsilon: f64,
    /// Required per-round honest share: alpha_honest · (1 − epsilon).
    pub floor: f64,
    pub rounds_meeting_floor: u64,
    pub fraction_meeting_floor: f64,
    pub mean_honest_share: f64,
    pub colluder_population_share: f64,
    pub colluder_selection_share: f64,
    /// Exact one-sided p-value for colluder over-representation relative to
    /// their population share.
    pub overrepresentation_p: f64,
}

pub fn estimate_pool_quality(
    rounds: &[RoundTrace],
    colluders: &BTreeSet<u32>,
    n_clients: u32,
    alpha_honest: f64,
    epsilon: f64,
) -> Result<PoolQualityReport> {
    if rounds.is_empty() {
        return Err(Error::Stats("no rounds".into()));
    }
    if !(0.0..=1.0).contains(&alpha_honest) || !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::Stats("alpha and epsilon must lie in [0, 1]".into()));
    }
    let floor = alpha_honest * (1.0 - epsilon);
    let mut empty = 0u64;
    let mut meeting = 0u64;
    let mut share_sum = 0.0;
    let mut nonempty = 0u64;
    let mut colluder_selected = 0u64;
    let mut total_selected = 0u64;
    for r in rounds {
        if r.pool.is_empty() {
            empty += 1;
            continue;
        }
        nonempty += 1;
        let colluding = r.pool.iter().filter(|id| colluders.contains(id)).count() as u64;
        let share = (r.pool.len() as u64 - colluding) as f64 / r.pool.len() as f64;
        share_sum += share;
        if share >= floor {
            meeting += 1;
        }
        colluder_selected += colluding;
        total_selected += r.pool.len() as u64;
    }
    if nonempty == 0 {
        return Err(Error::Stats("every pool was empty".into()));
    }
    let population_share = colluders.len() as f64 / n_clients as f64;
    let p = binomial_tail_ge(colluder_selected, total_selected, population_share)?;
    Ok(PoolQualityReport {
        rounds: rounds.len() as u64,
        empty_pools: empty,
        alpha_honest,
        epsilon,
        floor,
        rounds_meeting_floor: meeting,
        fraction_meeting_floor: meeting as f64 / nonempty as f64,
        mean_honest_share: share_sum / nonempty as f64,
        colluder_population_share: population_share,
        colluder_selection_share: if total_selected == 0 {
            0.0
        } else {
            colluder_selected as f64 / total_selected as f64
        },
        overrepresentation_p: p,
    })
}
