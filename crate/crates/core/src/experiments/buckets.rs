use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{prepare_all, ExperimentConfig, REPORT_SCHEMA_VERSION};
use crate::corpus::Corpus;
use crate::metric::IntentDistribution;
use crate::recency_classifier::{train_gbrt_traced, Dataset, GbrtParams};
use crate::{Error, Result};

/// Out-of-fold recency-need predictions from two-fold cross-validation.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossValidation {
    pub predictions: BTreeMap<String, f64>,
    /// Training-loss trace of the model fitted on each fold.
    pub traces: [Vec<f64>; 2],
}

impl CrossValidation {
    /// Root mean squared error of the predictions against the queries'
    /// true grades.
    pub fn rmse_vs_true_grade(&self, corpus: &Corpus) -> f64 {
        let (sum, n) = self
            .predictions
            .iter()
            .filter_map(|(q, p)| corpus.query(q).and_then(|r| r.true_grade).map(|g| (p - g).powi(2)))
            .fold((0.0, 0usize), |(s, n), e| (s + e, n + 1));
        (sum / n.max(1) as f64).sqrt()
    }
}

/// Shuffles the judged queries, halves them, trains on each half against the
/// consensus grade and predicts the other half.
pub fn cross_validate(corpus: &Corpus, params: &GbrtParams, seed: u64) -> Result<CrossValidation> {
    let schema = &corpus.feature_names;
    let mut rows: Vec<(&str, Vec<f64>, f64)> = Vec::new();
    for q in &corpus.queries {
        if let Some(j) = corpus.judgments.get(&q.query_id) {
            rows.push((&q.query_id, q.feature_values(schema)?, j.consensus_grade));
        }
    }
    if rows.len() < 2 {
        return Err(Error::validation("cross-validation needs at least two judged queries"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rows.shuffle(&mut rng);
    let half = rows.len().div_ceil(2);
    let folds = [&rows[..half], &rows[half..]];

    let mut predictions = BTreeMap::new();
    let mut traces: [Vec<f64>; 2] = Default::default();
    for k in 0..2 {
        let (train, test) = (folds[k], folds[1 - k]);
        let data = Dataset {
            feature_names: schema.clone(),
            rows: train.iter().map(|(_, x, y)| (x.clone(), *y)).collect(),
        };
        let (model, trace) = train_gbrt_traced(&data, params, seed.wrapping_add(k as u64))?;
        traces[k] = trace;
        for (q, x, _) in test {
            predictions.insert(q.to_string(), model.predict(x)?);
        }
    }
    Ok(CrossValidation { predictions, traces })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Blend with the true recency need.
    IdealDiversified,
    /// Blend with the cross-validated prediction.
    LearnedDiversified,
    /// The ordinary ranking as is.
    InitialOnly,
    /// Only the fresh documents, in ordinary order.
    FreshOnly,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::IdealDiversified,
        Strategy::LearnedDiversified,
        Strategy::InitialOnly,
        Strategy::FreshOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::IdealDiversified => "ideal_diversified",
            Strategy::LearnedDiversified => "learned_diversified",
            Strategy::InitialOnly => "initial_only",
            Strategy::FreshOnly => "fresh_only",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BucketRow {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    /// Mean ERR-IAA per strategy in [`Strategy::ALL`] order; `None` when the
    /// bucket is empty.
    pub means: [Option<f64>; 4],
}

impl BucketRow {
    pub fn mean(&self, s: Strategy) -> Option<f64> {
        let i = Strategy::ALL.iter().position(|x| *x == s).expect("listed");
        self.means[i]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BucketReport {
    pub buckets: Vec<BucketRow>,
    /// Cross-validated predictions used by the learned strategy.
    #[serde(skip)]
    pub cross_validation: CrossValidation,
}

impl BucketReport {
    /// `buckets.csv`: `bucket_lo,bucket_hi,strategy,mean_err_iaa,n` after a
    /// schema comment line; empty buckets print `-` for the mean.
    pub fn to_csv(&self) -> String {
        let mut out = format!("#schema_version={REPORT_SCHEMA_VERSION}\nbucket_lo,bucket_hi,strategy,mean_err_iaa,n\n");
        for b in &self.buckets {
            for (s, m) in Strategy::ALL.iter().zip(&b.means) {
                let mean = m.map_or_else(|| "-".to_string(), |v| v.to_string());
                let _ = writeln!(out, "{},{},{},{mean},{}", b.lo, b.hi, s.name(), b.n);
            }
        }
        out
    }
}

const N_BUCKETS: usize = 10;

fn bucket_of(need: f64) -> usize {
    ((need * N_BUCKETS as f64).floor() as usize).min(N_BUCKETS - 1)
}

/// Compares the four page strategies per bucket of true recency need. The
/// true need of a query is its consensus assessor grade: it sets the ideal
/// blend, the evaluation distribution and the bucket.
pub fn bucket_comparison(corpus: &Corpus, config: &ExperimentConfig, seed: u64) -> Result<BucketReport> {
    let cv = cross_validate(corpus, &config.gbrt, seed)?;
    let prepared = prepare_all(corpus, config, |q| cv.predictions.contains_key(&q.query_id))?;

    let mut sums = [[0.0f64; 4]; N_BUCKETS];
    let mut counts = [0usize; N_BUCKETS];
    for q in &prepared {
        let need = corpus.judgments[&q.record.query_id].consensus_grade;
        let truth = IntentDistribution::from_fresh(need)?;
        let b = bucket_of(need);
        counts[b] += 1;
        for (k, s) in Strategy::ALL.iter().enumerate() {
            let page = match s {
                Strategy::IdealDiversified => q.blended(need, &config.metric)?,
                Strategy::LearnedDiversified => q.blended(cv.predictions[&q.record.query_id], &config.metric)?,
                Strategy::InitialOnly => q.initial.clone(),
                Strategy::FreshOnly => q.fresh_only.clone(),
            };
            sums[b][k] += q.evaluate(&page, truth, &config.metric)?;
        }
    }

    let buckets = (0..N_BUCKETS)
        .map(|b| {
            let n = counts[b];
            let mut means = [None; 4];
            if n > 0 {
                for (m, s) in means.iter_mut().zip(sums[b]) {
                    *m = Some(s / n as f64);
                }
            }
            BucketRow {
                lo: b as f64 / N_BUCKETS as f64,
                hi: (b + 1) as f64 / N_BUCKETS as f64,
                n,
                means,
            }
        })
        .collect();
    Ok(BucketReport {
        buckets,
        cross_validation: cv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_corpus, GenConfig};

    #[test]
    fn bucket_edges() {
        assert_eq!(bucket_of(0.0), 0);
        assert_eq!(bucket_of(0.0999), 0);
        assert_eq!(bucket_of(0.1), 1);
        assert_eq!(bucket_of(0.95), 9);
        assert_eq!(bucket_of(1.0), 9);
    }

    #[test]
    fn too_few_queries() {
        let corpus = generate_corpus(
            &GenConfig {
                n_queries: 1,
                ..GenConfig::judged_set()
            },
            1,
        )
        .unwrap();
        assert!(bucket_comparison(&corpus, &ExperimentConfig::default(), 0).is_err());
    }

    #[test]
    fn small_corpus_report() {
        let corpus = generate_corpus(
            &GenConfig {
                n_queries: 200,
                ..GenConfig::judged_set()
            },
            2,
        )
        .unwrap();
        let report = bucket_comparison(&corpus, &ExperimentConfig::default(), 4).unwrap();
        assert_eq!(report.buckets.len(), 10);
        assert_eq!(report.buckets.iter().map(|b| b.n).sum::<usize>(), 200);
        assert_eq!(report.cross_validation.predictions.len(), 200);
        let csv = report.to_csv();
        assert_eq!(csv.lines().count(), 2 + 40);
        // Near-zero need: blending with the true need changes little.
        let first = &report.buckets[0];
        let (ideal, initial) = (
            first.mean(Strategy::IdealDiversified).unwrap(),
            first.mean(Strategy::InitialOnly).unwrap(),
        );
        assert!((ideal - initial).abs() < 0.02, "{ideal} vs {initial}");
    }
}
