//! Binary document freshness under a fixed time window, the fresh ranking
//! derived from an ordinary ranking, and query burst profiles.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Ranking;
use crate::io::{self, for_each_record, parse_err, parse_field};
use crate::{Error, Result};

pub const SECONDS_PER_DAY: u64 = 86_400;

/// How long a document stays fresh after its creation or last update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct FreshnessWindow(u64);

impl FreshnessWindow {
    pub fn new(seconds: u64) -> Result<Self> {
        if seconds == 0 {
            return Err(Error::Config("freshness window must be positive".into()));
        }
        Ok(FreshnessWindow(seconds))
    }

    pub fn from_days(days: f64) -> Result<Self> {
        if !(days.is_finite() && days > 0.0) {
            return Err(Error::Config(format!("invalid window length {days} days")));
        }
        Self::new((days * SECONDS_PER_DAY as f64).round() as u64)
    }

    pub fn seconds(self) -> u64 {
        self.0
    }
}

impl Default for FreshnessWindow {
    fn default() -> Self {
        FreshnessWindow(3 * SECONDS_PER_DAY)
    }
}

impl TryFrom<u64> for FreshnessWindow {
    type Error = Error;
    fn try_from(seconds: u64) -> Result<Self> {
        Self::new(seconds)
    }
}

impl From<FreshnessWindow> for u64 {
    fn from(w: FreshnessWindow) -> u64 {
        w.0
    }
}

/// A document is fresh when its age at query time is at most the window.
/// Documents dated after the query count as fresh.
pub fn is_fresh(doc_timestamp: i64, query_time: i64, window: FreshnessWindow) -> bool {
    query_time.saturating_sub(doc_timestamp) <= window.0 as i64
}

/// Keeps only the fresh entries of `ranking`, preserving their order and
/// renumbering ranks from 1.
pub fn derive_fresh_ranking(ranking: &Ranking, query_time: i64, window: FreshnessWindow) -> Ranking {
    let future = ranking.entries().iter().filter(|e| e.timestamp > query_time).count();
    if future > 0 {
        log::debug!("{future} document(s) dated after query time {query_time}; treated as fresh");
    }
    Ranking::renumbered(
        ranking
            .entries()
            .iter()
            .filter(|e| is_fresh(e.timestamp, query_time, window))
            .cloned(),
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryLogEntry {
    pub query_id: String,
    pub day: i64,
    pub count: u64,
}

pub fn load_query_log(path: &Path) -> Result<Vec<QueryLogEntry>> {
    parse_query_log(io::open(path)?, path)
}

pub fn parse_query_log<R: BufRead>(reader: R, path: &Path) -> Result<Vec<QueryLogEntry>> {
    let mut out = Vec::new();
    for_each_record(reader, path, |line, f| {
        if f.len() != 3 {
            return Err(parse_err(path, line, format!("expected 3 columns, found {}", f.len())));
        }
        out.push(QueryLogEntry {
            query_id: f[0].to_string(),
            day: parse_field(path, line, "day_index", f[1])?,
            count: parse_field(path, line, "count", f[2])?,
        });
        Ok(())
    })?;
    Ok(out)
}

pub fn format_query_log(log: &[QueryLogEntry]) -> String {
    let mut out = String::new();
    for e in log {
        let _ = writeln!(out, "{}\t{}\t{}", e.query_id, e.day, e.count);
    }
    out
}

/// Per-query share of volume on each day since the query's first
/// appearance, plus the average of those shares across queries.
#[derive(Debug, Clone, PartialEq)]
pub struct BurstProfile {
    per_query: BTreeMap<String, Vec<f64>>,
    average: Vec<f64>,
}

impl BurstProfile {
    /// Shares for days 1..=D of `query_id`.
    pub fn shares(&self, query_id: &str) -> Result<&[f64]> {
        self.per_query
            .get(query_id)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownQuery(query_id.to_string()))
    }

    /// Average share on each day; queries with a shorter history contribute
    /// zero to the later days.
    pub fn average(&self) -> &[f64] {
        &self.average
    }

    pub fn queries(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.per_query.iter().map(|(q, s)| (q.as_str(), s.as_slice()))
    }

    /// CSV with header `query_id,day,share`; the average profile is emitted
    /// under the id `*`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("query_id,day,share\n");
        for (q, shares) in &self.per_query {
            for (d, s) in shares.iter().enumerate() {
                let _ = writeln!(out, "{q},{},{s}", d + 1);
            }
        }
        for (d, s) in self.average.iter().enumerate() {
            let _ = writeln!(out, "*,{},{s}", d + 1);
        }
        out
    }
}

pub fn burst_profile(log: &[QueryLogEntry]) -> BurstProfile {
    let mut by_query: BTreeMap<&str, BTreeMap<i64, u64>> = BTreeMap::new();
    for e in log {
        *by_query.entry(&e.query_id).or_default().entry(e.day).or_default() += e.count;
    }

    let mut per_query = BTreeMap::new();
    for (q, days) in by_query {
        let total: u64 = days.values().sum();
        if total == 0 {
            continue;
        }
        let first = *days.keys().next().expect("non-empty");
        let last = *days.keys().next_back().expect("non-empty");
        let mut shares = vec![0.0; (last - first + 1) as usize];
        for (day, count) in days {
            shares[(day - first) as usize] = count as f64 / total as f64;
        }
        per_query.insert(q.to_string(), shares);
    }

    let span = per_query.values().map(Vec::len).max().unwrap_or(0);
    let mut average = vec![0.0; span];
    for shares in per_query.values() {
        for (a, s) in average.iter_mut().zip(shares) {
            *a += s;
        }
    }
    let n = per_query.len().max(1) as f64;
    average.iter_mut().for_each(|a| *a /= n);

    BurstProfile { per_query, average }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::DocEntry;

    const DAY: i64 = SECONDS_PER_DAY as i64;

    fn doc(id: &str, rank: usize, ts: i64) -> DocEntry {
        DocEntry {
            doc_id: id.into(),
            rank,
            timestamp: ts,
            latent_rel_any: None,
            latent_rel_fresh: None,
        }
    }

    #[test]
    fn freshness_boundaries() {
        let w = FreshnessWindow::default();
        let now = 100 * DAY;
        assert!(is_fresh(now - 2 * DAY, now, w));
        assert!(is_fresh(now - 259_200, now, w));
        assert!(!is_fresh(now - 259_201, now, w));
        assert!(!is_fresh(now - 10 * DAY, now, w));
        assert!(is_fresh(now + DAY, now, w));
    }

    #[test]
    fn window_must_be_positive() {
        assert!(FreshnessWindow::new(0).is_err());
        assert!(FreshnessWindow::from_days(-1.0).is_err());
        assert_eq!(FreshnessWindow::from_days(3.0).unwrap(), FreshnessWindow::default());
    }

    #[test]
    fn fresh_ranking_renumbers() {
        let now = 100 * DAY;
        let old = now - 30 * DAY;
        let r = Ranking::new(vec![
            doc("a", 1, old),
            doc("b", 2, now - DAY),
            doc("c", 3, old),
            doc("d", 4, old),
            doc("e", 5, now),
        ])
        .unwrap();
        let f = derive_fresh_ranking(&r, now, FreshnessWindow::default());
        let got: Vec<_> = f.entries().iter().map(|e| (e.doc_id.as_str(), e.rank)).collect();
        assert_eq!(got, vec![("b", 1), ("e", 2)]);
    }

    #[test]
    fn all_fresh_and_none_fresh() {
        let now = 100 * DAY;
        let all = Ranking::new(vec![doc("a", 1, now), doc("b", 2, now - DAY)]).unwrap();
        assert_eq!(derive_fresh_ranking(&all, now, FreshnessWindow::default()), all);
        let none = Ranking::new(vec![doc("a", 1, 0), doc("b", 2, DAY)]).unwrap();
        assert!(derive_fresh_ranking(&none, now, FreshnessWindow::default()).is_empty());
    }

    fn entry(q: &str, day: i64, count: u64) -> QueryLogEntry {
        QueryLogEntry {
            query_id: q.into(),
            day,
            count,
        }
    }

    #[test]
    fn burst_single_day() {
        let p = burst_profile(&[entry("q", 5, 40)]);
        assert_eq!(p.shares("q").unwrap(), &[1.0]);
    }

    #[test]
    fn burst_decay_shares() {
        let p = burst_profile(&[
            entry("q", 10, 73),
            entry("q", 11, 20),
            entry("q", 12, 4),
            entry("q", 13, 3),
        ]);
        let s = p.shares("q").unwrap();
        let want = [0.73, 0.20, 0.04, 0.03];
        for (a, b) in s.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn burst_average_and_gaps() {
        let p = burst_profile(&[entry("a", 3, 10), entry("b", 0, 5), entry("b", 1, 5)]);
        assert_eq!(p.average(), &[0.75, 0.25]);
        // Days without traffic inside the span count as zero share.
        let g = burst_profile(&[entry("c", 0, 1), entry("c", 2, 1)]);
        assert_eq!(g.shares("c").unwrap(), &[0.5, 0.0, 0.5]);
    }

    #[test]
    fn burst_unknown_query() {
        let p = burst_profile(&[entry("a", 0, 1)]);
        assert!(matches!(p.shares("zzz"), Err(Error::UnknownQuery(_))));
    }
}
