//! Rank-to-probability calibration and assembly of the candidate pool.
//!
//! Each candidate carries two satisfaction probabilities: `r_any` for users
//! who want any topically relevant document and `r_fresh` for users who want
//! a fresh one. Both come from one position-prior table indexed by the
//! document's rank in the ordinary and in the fresh ranking respectively.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{DocEntry, Ranking};
use crate::freshness::{is_fresh, FreshnessWindow};
use crate::metric::IntentRelevance;
use crate::{Error, Result};

/// Probability of meeting a relevant document at each rank, best rank first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PositionPriorTable(Vec<f64>);

/// Shipped default. These are configurable stand-ins, not measured values.
pub const DEFAULT_PRIORS: [f64; 10] = [0.60, 0.50, 0.42, 0.35, 0.29, 0.24, 0.20, 0.16, 0.13, 0.10];

impl PositionPriorTable {
    pub fn new(priors: Vec<f64>) -> Result<Self> {
        if priors.is_empty() {
            return Err(Error::Config("position prior table is empty".into()));
        }
        if let Some(p) = priors.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
            return Err(Error::Config(format!("prior {p} outside (0,1)")));
        }
        if priors.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::Config("priors must be non-increasing with rank".into()));
        }
        Ok(PositionPriorTable(priors))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Prior at a 1-based rank; ranks past the table reuse its last entry.
    pub fn prior(&self, rank: usize) -> Result<f64> {
        if rank == 0 {
            return Err(Error::Argument("rank must be at least 1".into()));
        }
        Ok(self.0[rank.min(self.0.len()) - 1])
    }
}

impl Default for PositionPriorTable {
    fn default() -> Self {
        PositionPriorTable(DEFAULT_PRIORS.to_vec())
    }
}

impl TryFrom<Vec<f64>> for PositionPriorTable {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PositionPriorTable> for Vec<f64> {
    fn from(t: PositionPriorTable) -> Vec<f64> {
        t.0
    }
}

pub fn position_prior(rank: usize, table: &PositionPriorTable) -> Result<f64> {
    table.prior(rank)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibratedCandidate {
    pub doc_id: String,
    pub r_any: f64,
    pub r_fresh: f64,
    pub ordinary_rank: Option<usize>,
    pub fresh_rank: Option<usize>,
}

impl IntentRelevance for CalibratedCandidate {
    fn r_fresh(&self) -> f64 {
        self.r_fresh
    }
    fn r_any(&self) -> f64 {
        self.r_any
    }
}

/// Builds the candidate pool from the top `depth` of both rankings.
///
/// `r_any` comes from the document's rank in the ordinary ranking whenever it
/// appears there at all; documents that only the fresh ranking knows about
/// fall back to their fresh rank. `r_fresh` is the prior of the fresh rank
/// for fresh documents in the fresh top-`depth`, and zero otherwise.
pub fn build_candidates(
    ordinary: &Ranking,
    fresh: &Ranking,
    table: &PositionPriorTable,
    query_time: i64,
    window: FreshnessWindow,
    depth: usize,
) -> Result<Vec<CalibratedCandidate>> {
    if depth == 0 {
        return Err(Error::Argument("depth must be at least 1".into()));
    }

    struct Slot<'a> {
        ordinary: Option<&'a DocEntry>,
        fresh: Option<&'a DocEntry>,
    }
    let mut pool: BTreeMap<&str, Slot> = BTreeMap::new();
    for e in ordinary.top(depth) {
        pool.insert(
            &e.doc_id,
            Slot {
                ordinary: Some(e),
                fresh: None,
            },
        );
    }
    for e in fresh.top(depth) {
        pool.entry(&e.doc_id)
            .or_insert_with(|| Slot {
                ordinary: ordinary.get(&e.doc_id),
                fresh: None,
            })
            .fresh = Some(e);
    }
    // Fresh documents of the ordinary top-depth that fell outside the fresh
    // top-depth still need their fresh rank for bookkeeping.
    for slot in pool.values_mut() {
        if slot.fresh.is_none() {
            if let Some(o) = slot.ordinary {
                slot.fresh = fresh.get(&o.doc_id);
            }
        }
    }

    let mut out = Vec::with_capacity(pool.len());
    for (doc_id, slot) in pool {
        if let (Some(o), Some(f)) = (slot.ordinary, slot.fresh) {
            if o.timestamp != f.timestamp {
                return Err(Error::validation(format!(
                    "doc `{doc_id}` has timestamp {} in the ordinary ranking but {} in the fresh ranking",
                    o.timestamp, f.timestamp
                )));
            }
        }
        let ordinary_rank = slot.ordinary.map(|e| e.rank);
        let fresh_rank = slot.fresh.map(|e| e.rank);
        let timestamp = slot.ordinary.or(slot.fresh).expect("one side present").timestamp;

        let r_any = match (ordinary_rank, fresh_rank) {
            (Some(r), _) | (None, Some(r)) => table.prior(r)?,
            (None, None) => unreachable!(),
        };
        let r_fresh = match fresh_rank {
            Some(r) if r <= depth && is_fresh(timestamp, query_time, window) => table.prior(r)?,
            _ => 0.0,
        };
        out.push(CalibratedCandidate {
            doc_id: doc_id.to_string(),
            r_any,
            r_fresh,
            ordinary_rank,
            fresh_rank,
        });
    }
    out.sort_by(|a, b| {
        let key = |c: &CalibratedCandidate| {
            (
                c.ordinary_rank.unwrap_or(usize::MAX),
                c.fresh_rank.unwrap_or(usize::MAX),
            )
        };
        key(a).cmp(&key(b)).then_with(|| a.doc_id.cmp(&b.doc_id))
    });
    Ok(out)
}
