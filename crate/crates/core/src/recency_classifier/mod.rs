//! Recency-need estimation: assessment preselection, a gradient-boosted
//! regression model over query features, inter-assessor agreement, and the
//! traffic-coverage report.

mod agreement;
mod gbrt;

pub use agreement::{average_pairwise_kappa, cohen_kappa};
pub use gbrt::{
    predict, train_gbrt, train_gbrt_traced, Dataset, GbrtModel, GbrtParams, Node, Tree, MODEL_SCHEMA_VERSION,
};

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::GRADES;
use crate::io::{self, for_each_record, parse_err, parse_field};
use crate::{Error, Result};

/// Per-feature minimum values used to pick queries worth assessing. A
/// feature without a threshold never triggers selection.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PreselectThresholds {
    pub thresholds: Vec<Option<f64>>,
}

impl PreselectThresholds {
    /// Thresholds aligned with `schema`; names missing from `values` get none.
    pub fn for_schema(schema: &[String], values: &[(String, f64)]) -> Result<Self> {
        if let Some((name, _)) = values.iter().find(|(n, _)| !schema.contains(n)) {
            return Err(Error::validation(format!("threshold for unknown feature `{name}`")));
        }
        if let Some((name, v)) = values.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::validation(format!("threshold {v} for `{name}` is not finite")));
        }
        Ok(PreselectThresholds {
            thresholds: schema
                .iter()
                .map(|s| values.iter().find(|(n, _)| n == s).map(|(_, v)| *v))
                .collect(),
        })
    }
}

/// True when at least one feature strictly exceeds its threshold, or when no
/// threshold is configured at all.
pub fn preselect(features: &[f64], thresholds: &PreselectThresholds) -> Result<bool> {
    if features.len() != thresholds.thresholds.len() {
        return Err(Error::validation(format!(
            "feature vector has {} values, thresholds cover {}",
            features.len(),
            thresholds.thresholds.len()
        )));
    }
    let mut any_configured = false;
    for (x, t) in features.iter().zip(&thresholds.thresholds) {
        if let Some(t) = t {
            any_configured = true;
            if x > t {
                return Ok(true);
            }
        }
    }
    Ok(!any_configured)
}

/// Volume-weighted share of traffic, in percent, for each nonzero grade.
/// Records whose grade is outside the grade set only count toward the total.
pub fn traffic_coverage(records: &[(f64, u64)]) -> Vec<(f64, f64)> {
    let total: u64 = records.iter().map(|(_, v)| v).sum();
    GRADES[1..]
        .iter()
        .map(|&g| {
            let vol: u64 = records.iter().filter(|(r, _)| *r == g).map(|(_, v)| v).sum();
            let pct = if total == 0 {
                0.0
            } else {
                100.0 * vol as f64 / total as f64
            };
            (g, pct)
        })
        .collect()
}

/// Estimated recency need per query id.
pub type Predictions = BTreeMap<String, f64>;

pub fn load_predictions(path: &Path) -> Result<Predictions> {
    parse_predictions(io::open(path)?, path)
}

/// Reads `query_id<TAB>p_fresh` lines; a header line starting with
/// `query_id` is skipped.
pub fn parse_predictions<R: BufRead>(reader: R, path: &Path) -> Result<Predictions> {
    let mut out = Predictions::new();
    for_each_record(reader, path, |line, f| {
        if f.len() != 2 {
            return Err(parse_err(path, line, format!("expected 2 columns, found {}", f.len())));
        }
        if line == 1 && f[0] == "query_id" {
            return Ok(());
        }
        let p: f64 = parse_field(path, line, "p_fresh", f[1])?;
        if !(0.0..=1.0).contains(&p) {
            return Err(parse_err(path, line, format!("p_fresh {p} outside [0,1]")));
        }
        if out.insert(f[0].to_string(), p).is_some() {
            return Err(parse_err(path, line, format!("duplicate query `{}`", f[0])));
        }
        Ok(())
    })?;
    Ok(out)
}

pub fn format_predictions(predictions: &Predictions) -> String {
    let mut out = String::from("query_id\tp_fresh\n");
    for (q, p) in predictions {
        let _ = writeln!(out, "{q}\t{p}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predictions_round_trip() {
        let mut p = Predictions::new();
        p.insert("q1".into(), 0.25);
        p.insert("q2".into(), 1.0 / 3.0);
        let text = format_predictions(&p);
        assert_eq!(parse_predictions(text.as_bytes(), Path::new("p.tsv")).unwrap(), p);
        assert!(parse_predictions("q1\t1.5\n".as_bytes(), Path::new("p.tsv")).is_err());
        assert!(parse_predictions("q1\t0.5\nq1\t0.5\n".as_bytes(), Path::new("p.tsv")).is_err());
    }

    #[test]
    fn preselect_rules() {
        let t = PreselectThresholds {
            thresholds: vec![Some(0.01); 3],
        };
        assert!(!preselect(&[0.0, 0.0, 0.0], &t).unwrap());
        assert!(preselect(&[0.0, 0.02, 0.0], &t).unwrap());
        // Strictly exceeding.
        assert!(!preselect(&[0.01, 0.01, 0.01], &t).unwrap());
        let none = PreselectThresholds {
            thresholds: vec![None; 3],
        };
        assert!(preselect(&[-5.0, -5.0, -5.0], &none).unwrap());
        assert!(preselect(&[0.0, 0.0], &t).is_err());
    }

    #[test]
    fn thresholds_from_names() {
        let schema = vec!["a".to_string(), "b".to_string()];
        let t = PreselectThresholds::for_schema(&schema, &[("b".into(), 0.5)]).unwrap();
        assert_eq!(t.thresholds, vec![None, Some(0.5)]);
        assert!(!preselect(&[100.0, 0.1], &t).unwrap());
        assert!(PreselectThresholds::for_schema(&schema, &[("c".into(), 0.5)]).is_err());
    }

    #[test]
    fn coverage_shares() {
        assert!(traffic_coverage(&[(0.0, 10), (0.0, 5)]).iter().all(|(_, s)| *s == 0.0));
        let single = traffic_coverage(&[(0.95, 3)]);
        assert_eq!(single[2], (0.95, 100.0));

        // 10 000 instances split as in the reference traffic distribution.
        let reference = [(0.0, 9326), (0.25, 490), (0.75, 111), (0.95, 73)];
        let got = traffic_coverage(&reference);
        let want = [(0.25, 4.9), (0.75, 1.11), (0.95, 0.73)];
        for ((g, s), (wg, ws)) in got.iter().zip(want) {
            assert_eq!(*g, wg);
            assert!((s - ws).abs() < 1e-9, "{g}: {s}");
        }
    }
}
