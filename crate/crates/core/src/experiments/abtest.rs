//! Simulated A/B test: users in a control and a treatment bucket see pages
//! from different policies, and their clicks come from the cascade model
//! with the query's true grade as the intent distribution.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::clicks::simulate_clicks;
use super::mann_whitney::mann_whitney_u;
use super::{prepare_all, ExperimentConfig, PreparedQuery, REPORT_SCHEMA_VERSION};
use crate::corpus::Corpus;
use crate::metric::{IntentDistribution, MetricConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbBucket {
    Control,
    Treatment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClickLogRecord {
    pub bucket: AbBucket,
    pub query_id: String,
    pub clicked_positions: Vec<usize>,
    pub first_click_time_s: Option<f64>,
    pub abandoned: bool,
}

/// Maps a query to the documents shown on its result page.
pub trait PagePolicy {
    fn page(&self, query: &PreparedQuery<'_>, metric: &MetricConfig) -> Result<Vec<String>>;
}

/// The ordinary ranking, never diversified.
pub struct InitialRanking;

impl PagePolicy for InitialRanking {
    fn page(&self, query: &PreparedQuery<'_>, _metric: &MetricConfig) -> Result<Vec<String>> {
        Ok(query.initial.clone())
    }
}

/// Greedy blend with a per-query recency-need estimate.
pub struct LearnedBlend {
    pub predictions: BTreeMap<String, f64>,
}

impl PagePolicy for LearnedBlend {
    fn page(&self, query: &PreparedQuery<'_>, metric: &MetricConfig) -> Result<Vec<String>> {
        let id = &query.record.query_id;
        let p = self
            .predictions
            .get(id)
            .ok_or_else(|| Error::UnknownQuery(id.clone()))?;
        query.blended(*p, metric)
    }
}

fn stream_id(bucket: AbBucket, i: usize) -> u64 {
    let tag = match bucket {
        AbBucket::Control => 0u64,
        AbBucket::Treatment => 1u64,
    };
    (tag << 48) | i as u64
}

/// Simulates `n_queries` query instances for one bucket. Queries are drawn
/// in proportion to their volume; instance `i` uses its own PRNG stream.
pub fn simulate_bucket(
    corpus: &Corpus,
    policy: &dyn PagePolicy,
    bucket: AbBucket,
    n_queries: usize,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<Vec<ClickLogRecord>> {
    let prepared = prepare_all(corpus, config, |q| q.true_grade.is_some())?;
    if prepared.is_empty() {
        return Err(Error::validation("no queries with a true grade to simulate"));
    }
    let pages = prepared
        .iter()
        .map(|q| Ok(q.latent_page(&policy.page(q, &config.metric)?)))
        .collect::<Result<Vec<_>>>()?;
    let truths = prepared
        .iter()
        .map(|q| IntentDistribution::from_fresh(q.record.true_grade.expect("filtered")))
        .collect::<Result<Vec<_>>>()?;
    let weights = WeightedIndex::new(prepared.iter().map(|q| q.record.volume.unwrap_or(1)))
        .map_err(|e| Error::validation(e.to_string()))?;

    let mut out = Vec::with_capacity(n_queries);
    for i in 0..n_queries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id(bucket, i));
        let k = weights.sample(&mut rng);
        let outcome = simulate_clicks(&pages[k], truths[k], &config.metric, &mut rng);
        out.push(ClickLogRecord {
            bucket,
            query_id: prepared[k].record.query_id.clone(),
            abandoned: outcome.abandoned(),
            clicked_positions: outcome.clicked_positions,
            first_click_time_s: outcome.first_click_time_s,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricComparison {
    pub name: &'static str,
    pub control: f64,
    pub treatment: f64,
    pub u: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbReport {
    pub schema_version: u32,
    pub n_queries_per_bucket: usize,
    pub evaluation: &'static str,
    pub metrics: Vec<MetricComparison>,
}

impl AbReport {
    pub fn metric(&self, name: &str) -> Option<&MetricComparison> {
        self.metrics.iter().find(|m| m.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub const ABANDONMENT_RATE: &str = "abandonment_rate_pct";
pub const TIME_TO_FIRST_CLICK: &str = "time_to_first_click_s";
pub const CTR_POSITION_1: &str = "ctr_position_1_pct";
pub const CTR_POSITION_2: &str = "ctr_position_2_pct";
pub const FIRST_CLICK_POSITION: &str = "first_click_position";

/// Per-query observations behind each metric. Time and position only exist
/// for queries with a click.
struct Observations {
    abandoned: Vec<f64>,
    time: Vec<f64>,
    ctr1: Vec<f64>,
    ctr2: Vec<f64>,
    position: Vec<f64>,
}

fn observe(log: &[ClickLogRecord]) -> Observations {
    let indicator = |b: bool| if b { 1.0 } else { 0.0 };
    Observations {
        abandoned: log.iter().map(|r| indicator(r.abandoned)).collect(),
        time: log.iter().filter_map(|r| r.first_click_time_s).collect(),
        ctr1: log
            .iter()
            .map(|r| indicator(r.clicked_positions.contains(&1)))
            .collect(),
        ctr2: log
            .iter()
            .map(|r| indicator(r.clicked_positions.contains(&2)))
            .collect(),
        position: log
            .iter()
            .filter_map(|r| r.clicked_positions.first().map(|&p| p as f64))
            .collect(),
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn compare(name: &'static str, scale: f64, control: &[f64], treatment: &[f64]) -> Result<MetricComparison> {
    let (u, p_value) = if control.is_empty() || treatment.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        let mw = mann_whitney_u(control, treatment)?;
        (mw.u_a, mw.p_two_sided)
    };
    Ok(MetricComparison {
        name,
        control: scale * mean(control),
        treatment: scale * mean(treatment),
        u,
        p_value,
    })
}

/// Summarizes two click logs into the five behavior metrics, each with a
/// Mann-Whitney U (of the control sample) and two-sided p-value.
pub fn summarize(control: &[ClickLogRecord], treatment: &[ClickLogRecord]) -> Result<AbReport> {
    let (c, t) = (observe(control), observe(treatment));
    Ok(AbReport {
        schema_version: REPORT_SCHEMA_VERSION,
        n_queries_per_bucket: control.len(),
        evaluation: "simulated cascade clicks against generated latent relevances",
        metrics: vec![
            compare(ABANDONMENT_RATE, 100.0, &c.abandoned, &t.abandoned)?,
            compare(TIME_TO_FIRST_CLICK, 1.0, &c.time, &t.time)?,
            compare(CTR_POSITION_1, 100.0, &c.ctr1, &t.ctr1)?,
            compare(CTR_POSITION_2, 100.0, &c.ctr2, &t.ctr2)?,
            compare(FIRST_CLICK_POSITION, 1.0, &c.position, &t.position)?,
        ],
    })
}

pub fn ab_test(
    corpus: &Corpus,
    control: &dyn PagePolicy,
    treatment: &dyn PagePolicy,
    n_queries: usize,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<AbReport> {
    if n_queries < 2 {
        return Err(Error::validation("A/B test needs at least two queries per bucket"));
    }
    let c = simulate_bucket(corpus, control, AbBucket::Control, n_queries, config, seed)?;
    let t = simulate_bucket(corpus, treatment, AbBucket::Treatment, n_queries, config, seed)?;
    summarize(&c, &t)
}
