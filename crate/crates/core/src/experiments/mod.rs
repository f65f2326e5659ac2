//! Offline experiments over a corpus with latent relevances, and a simulated
//! online A/B test.
//!
//! Pages are always built from calibrated position priors and always scored
//! against the generated latent relevances, so a strategy is rewarded only
//! as far as the priors predict the hidden ground truth.

mod abtest;
mod buckets;
mod clicks;
mod mann_whitney;
mod sweep;

pub use abtest::{
    ab_test, simulate_bucket, summarize, AbBucket, AbReport, ClickLogRecord, InitialRanking, LearnedBlend,
    MetricComparison, PagePolicy, ABANDONMENT_RATE, CTR_POSITION_1, CTR_POSITION_2, FIRST_CLICK_POSITION,
    TIME_TO_FIRST_CLICK,
};
pub use buckets::{bucket_comparison, cross_validate, BucketReport, BucketRow, CrossValidation, Strategy};
pub use clicks::{simulate_clicks, simulate_clicks_seeded, ClickOutcome};
pub use mann_whitney::{mann_whitney_exact, mann_whitney_u, MannWhitney};
pub use sweep::{default_grid, sweep_csv, sweep_estimate, SweepCurve};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::calibration::{build_candidates, CalibratedCandidate, PositionPriorTable};
use crate::corpus::{Corpus, QueryRecord};
use crate::diversifier::blend;
use crate::freshness::{derive_fresh_ranking, FreshnessWindow};
use crate::metric::{err_iaa, IntentDistribution, MetricConfig, RelevancePair};
use crate::recency_classifier::GbrtParams;
use crate::{Error, Result};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Knobs shared by every experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub metric: MetricConfig,
    pub window: FreshnessWindow,
    pub priors: PositionPriorTable,
    pub grid: Vec<f64>,
    pub gbrt: GbrtParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            metric: MetricConfig::default(),
            window: FreshnessWindow::default(),
            priors: PositionPriorTable::default(),
            grid: default_grid(),
            gbrt: GbrtParams::default(),
        }
    }
}

/// A query with its candidate pool and the latent relevances of every
/// document that can appear on a page.
#[derive(Debug, Clone)]
pub struct PreparedQuery<'a> {
    pub record: &'a QueryRecord,
    pub candidates: Vec<CalibratedCandidate>,
    pub initial: Vec<String>,
    pub fresh_only: Vec<String>,
    latent: HashMap<String, RelevancePair>,
}

impl<'a> PreparedQuery<'a> {
    pub fn new(corpus: &'a Corpus, record: &'a QueryRecord, config: &ExperimentConfig) -> Result<Self> {
        let ordinary = corpus
            .rankings
            .get(&record.query_id)
            .ok_or_else(|| Error::validation(format!("no ranking for query `{}`", record.query_id)))?;
        if !ordinary.has_latent() {
            return Err(Error::Refused(format!(
                "query `{}` lacks latent relevances needed for evaluation",
                record.query_id
            )));
        }
        let depth = config.metric.depth;
        let fresh = derive_fresh_ranking(ordinary, record.issue_time, config.window);
        let candidates = build_candidates(
            ordinary,
            &fresh,
            &config.priors,
            record.issue_time,
            config.window,
            depth,
        )?;
        let latent = ordinary
            .entries()
            .iter()
            .map(|e| {
                let pair = RelevancePair {
                    any: e.latent_rel_any.expect("checked"),
                    fresh: e.latent_rel_fresh.expect("checked"),
                };
                (e.doc_id.clone(), pair)
            })
            .collect();
        Ok(PreparedQuery {
            record,
            candidates,
            initial: ordinary.top(depth).iter().map(|e| e.doc_id.clone()).collect(),
            fresh_only: fresh.top(depth).iter().map(|e| e.doc_id.clone()).collect(),
            latent,
        })
    }

    /// Greedy page for an estimated recency need `p_hat`.
    pub fn blended(&self, p_hat: f64, metric: &MetricConfig) -> Result<Vec<String>> {
        if self.candidates.is_empty() {
            return Ok(Vec::new());
        }
        Ok(blend(&self.candidates, IntentDistribution::from_fresh(p_hat)?, metric)?.doc_ids)
    }

    /// Latent relevances of the documents on `page`, in order.
    pub fn latent_page(&self, page: &[String]) -> Vec<RelevancePair> {
        page.iter().map(|id| self.latent[id]).collect()
    }

    /// ERR-IAA of `page` under the latent relevances.
    pub fn evaluate(&self, page: &[String], truth: IntentDistribution, metric: &MetricConfig) -> Result<f64> {
        err_iaa(&self.latent_page(page), truth, metric)
    }
}

/// Prepares every query passing `keep`, in corpus order.
pub(crate) fn prepare_all<'a>(
    corpus: &'a Corpus,
    config: &ExperimentConfig,
    keep: impl Fn(&QueryRecord) -> bool,
) -> Result<Vec<PreparedQuery<'a>>> {
    config.metric.validate()?;
    corpus
        .queries
        .iter()
        .filter(|q| keep(q))
        .map(|q| PreparedQuery::new(corpus, q, config))
        .collect()
}
