//! Greedy construction of the blended result page.
//!
//! At every position the candidate with the largest marginal ERR-IAA gain is
//! placed. Gains that compare equal are broken by higher `r_any`, then by
//! lower ordinary rank (documents without one go last), then by `doc_id`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;

use serde::Serialize;

use crate::calibration::CalibratedCandidate;
use crate::io::{self, for_each_record, parse_err, parse_field};
use crate::metric::{advance, err_iaa, marginal_gain, IntentDistribution, MetricConfig, PrefixState};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlendedResult {
    pub doc_ids: Vec<String>,
    pub gains: Vec<f64>,
    pub total: f64,
    pub dist: IntentDistribution,
}

/// `Less` when `a` should be preferred over `b` at equal gain.
fn tie_order(a: &CalibratedCandidate, b: &CalibratedCandidate) -> Ordering {
    b.r_any
        .total_cmp(&a.r_any)
        .then_with(|| {
            a.ordinary_rank
                .unwrap_or(usize::MAX)
                .cmp(&b.ordinary_rank.unwrap_or(usize::MAX))
        })
        .then_with(|| a.doc_id.cmp(&b.doc_id))
}

fn validate_pool(candidates: &[CalibratedCandidate]) -> Result<()> {
    if candidates.is_empty() {
        return Err(Error::validation("candidate pool is empty"));
    }
    for c in candidates {
        if !(0.0..=1.0).contains(&c.r_any) || !(0.0..=1.0).contains(&c.r_fresh) {
            return Err(Error::validation(format!(
                "candidate `{}` has probabilities ({}, {}) outside [0,1]",
                c.doc_id, c.r_any, c.r_fresh
            )));
        }
    }
    Ok(())
}

pub fn blend(
    candidates: &[CalibratedCandidate],
    dist: IntentDistribution,
    config: &MetricConfig,
) -> Result<BlendedResult> {
    config.validate()?;
    validate_pool(candidates)?;

    let n = config.depth.min(candidates.len());
    let mut remaining: Vec<&CalibratedCandidate> = candidates.iter().collect();
    let mut state = PrefixState::default();
    let mut doc_ids = Vec::with_capacity(n);
    let mut gains = Vec::with_capacity(n);

    for _ in 0..n {
        let (best_idx, best_gain) = remaining
            .iter()
            .enumerate()
            .map(|(i, c)| (i, marginal_gain(&state, *c, dist, config)))
            .reduce(|best, cur| {
                let ord = cur
                    .1
                    .total_cmp(&best.1)
                    .reverse()
                    .then_with(|| tie_order(remaining[cur.0], remaining[best.0]));
                if ord == Ordering::Less {
                    cur
                } else {
                    best
                }
            })
            .expect("remaining is non-empty");
        let pick = remaining.remove(best_idx);
        state = advance(&state, pick);
        doc_ids.push(pick.doc_id.clone());
        gains.push(best_gain);
    }

    Ok(BlendedResult {
        total: gains.iter().sum(),
        doc_ids,
        gains,
        dist,
    })
}

/// Blended pages keyed by query id, as `query_id<TAB>position<TAB>doc_id<TAB>marginal_gain`.
pub fn format_blended(pages: &BTreeMap<String, BlendedResult>) -> String {
    let mut out = String::new();
    for (q, page) in pages {
        for (i, (doc, gain)) in page.doc_ids.iter().zip(&page.gains).enumerate() {
            let _ = writeln!(out, "{q}\t{}\t{doc}\t{gain}", i + 1);
        }
    }
    out
}

pub fn load_pages(path: &Path) -> Result<BTreeMap<String, Vec<String>>> {
    parse_pages(io::open(path)?, path)
}

/// Reads the document order of each page from blended output. Positions of
/// a query must be contiguous from 1; the gain column is ignored.
pub fn parse_pages<R: BufRead>(reader: R, path: &Path) -> Result<BTreeMap<String, Vec<String>>> {
    let mut pages: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for_each_record(reader, path, |line, f| {
        if !(3..=4).contains(&f.len()) {
            return Err(parse_err(
                path,
                line,
                format!("expected 3 or 4 columns, found {}", f.len()),
            ));
        }
        let pos: usize = parse_field(path, line, "position", f[1])?;
        let page = pages.entry(f[0].to_string()).or_default();
        if pos != page.len() + 1 {
            return Err(parse_err(
                path,
                line,
                format!("position {pos} out of sequence for `{}`", f[0]),
            ));
        }
        if page.iter().any(|d| d == f[2]) {
            return Err(parse_err(
                path,
                line,
                format!("doc `{}` repeated on page `{}`", f[2], f[0]),
            ));
        }
        page.push(f[2].to_string());
        Ok(())
    })?;
    Ok(pages)
}

const BRUTE_MAX_CANDIDATES: usize = 8;
const BRUTE_MAX_POSITIONS: usize = 5;

/// Exhaustive search over every ordered selection of
/// `min(max_positions, |candidates|)` candidates. Among equal scores the
/// selection whose members compare first under the blender's tie order,
/// position by position, wins.
pub fn brute_force_best(
    candidates: &[CalibratedCandidate],
    dist: IntentDistribution,
    config: &MetricConfig,
    max_positions: usize,
) -> Result<(Vec<String>, f64)> {
    config.validate()?;
    validate_pool(candidates)?;
    if candidates.len() > BRUTE_MAX_CANDIDATES || max_positions > BRUTE_MAX_POSITIONS {
        return Err(Error::Refused(format!(
            "brute force limited to {BRUTE_MAX_CANDIDATES} candidates and {BRUTE_MAX_POSITIONS} positions, got {} and {max_positions}",
            candidates.len()
        )));
    }
    let k = max_positions.min(candidates.len());

    let mut sorted: Vec<&CalibratedCandidate> = candidates.iter().collect();
    sorted.sort_by(|a, b| tie_order(a, b));

    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut current = Vec::with_capacity(k);
    let mut used = vec![false; sorted.len()];
    // Indices are visited in tie order, so the first maximizer found is the
    // lexicographically preferred one; later ones replace it only when
    // strictly better.
    search(&sorted, k, &mut current, &mut used, &mut |sel| {
        let page: Vec<&CalibratedCandidate> = sel.iter().map(|&i| sorted[i]).collect();
        let score = err_iaa(&page, dist, config).expect("validated pool");
        if best.as_ref().is_none_or(|(_, s)| score > *s) {
            best = Some((sel.to_vec(), score));
        }
    });

    let (sel, score) = best.expect("at least one selection");
    Ok((sel.into_iter().map(|i| sorted[i].doc_id.clone()).collect(), score))
}

fn search(
    pool: &[&CalibratedCandidate],
    k: usize,
    current: &mut Vec<usize>,
    used: &mut [bool],
    visit: &mut impl FnMut(&[usize]),
) {
    if current.len() == k {
        visit(current);
        return;
    }
    for i in 0..pool.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        current.push(i);
        search(pool, k, current, used, visit);
        current.pop();
        used[i] = false;
    }
}
