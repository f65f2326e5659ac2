use serde::Serialize;
use statrs::function::erf::erfc;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MannWhitney {
    pub u_a: f64,
    pub u_b: f64,
    pub p_two_sided: f64,
}

/// Midranks of the pooled sample (ties share their average rank) and the
/// tie term `Σ (t³ − t)`.
fn pooled_ranks(pooled: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut tie_term = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && pooled[order[end]] == pooled[order[start]] {
            end += 1;
        }
        let midrank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = midrank;
        }
        let t = (end - start) as f64;
        tie_term += t * t * t - t;
        start = end;
    }
    (ranks, tie_term)
}

fn check(a: &[f64], b: &[f64]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::validation("Mann-Whitney needs two non-empty samples"));
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::validation("Mann-Whitney samples contain NaN"));
    }
    Ok(())
}

fn u_from_rank_sum(rank_sum: f64, n_a: usize, n_b: usize) -> (f64, f64) {
    let n_a_f = n_a as f64;
    let u_a = rank_sum - n_a_f * (n_a_f + 1.0) / 2.0;
    (u_a, n_a_f * n_b as f64 - u_a)
}

/// Rank-sum test with midranks, tie-corrected variance and the normal
/// approximation with continuity correction.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    check(a, b)?;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, tie_term) = pooled_ranks(&pooled);
    let (n_a, n_b) = (a.len(), b.len());
    let (u_a, u_b) = u_from_rank_sum(ranks[..n_a].iter().sum(), n_a, n_b);

    let n = (n_a + n_b) as f64;
    let mean = n_a as f64 * n_b as f64 / 2.0;
    let var = n_a as f64 * n_b as f64 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    let p_two_sided = if var <= 0.0 {
        1.0
    } else {
        let z = ((u_a - mean).abs() - 0.5).max(0.0) / var.sqrt();
        erfc(z / std::f64::consts::SQRT_2).min(1.0)
    };
    Ok(MannWhitney { u_a, u_b, p_two_sided })
}

const EXACT_LIMIT: u64 = 2_000_000;

/// Exact permutation p-value: every assignment of the pooled values to a
/// sample of size `|a|` is enumerated, and the p-value is the share of
/// assignments at least as far from the null mean as the observed one.
pub fn mann_whitney_exact(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    check(a, b)?;
    let (n_a, n_b) = (a.len(), b.len());
    let n = n_a + n_b;
    let combos = (0..n_a).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128);
    if combos > EXACT_LIMIT as u128 {
        return Err(Error::Refused(format!(
            "{combos} assignments exceed the exact-test limit"
        )));
    }

    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, _) = pooled_ranks(&pooled);
    let (u_a, u_b) = u_from_rank_sum(ranks[..n_a].iter().sum(), n_a, n_b);
    let mean = n_a as f64 * n_b as f64 / 2.0;
    let observed = (u_a - mean).abs();

    let mut extreme = 0u64;
    let mut total = 0u64;
    let mut chosen = Vec::with_capacity(n_a);
    enumerate(&ranks, n_a, 0, &mut chosen, &mut |sel| {
        let (u, _) = u_from_rank_sum(sel.iter().map(|&i| ranks[i]).sum(), n_a, n_b);
        total += 1;
        if (u - mean).abs() >= observed - 1e-9 {
            extreme += 1;
        }
    });
    Ok(MannWhitney {
        u_a,
        u_b,
        p_two_sided: extreme as f64 / total as f64,
    })
}

fn enumerate(ranks: &[f64], k: usize, from: usize, chosen: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
    if chosen.len() == k {
        visit(chosen);
        return;
    }
    let need = k - chosen.len();
    for i in from..=ranks.len() - need {
        chosen.push(i);
        enumerate(ranks, k, i + 1, chosen, visit);
        chosen.pop();
    }
}
