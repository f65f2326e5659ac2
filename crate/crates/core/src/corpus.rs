//! Query, ranking and judgment data, their TSV formats, and a seeded
//! synthetic corpus generator.
//!
//! File formats (UTF-8, `\n` line endings, `-` for an absent optional value):
//!
//! ```text
//! rankings.tsv    query_id  doc_id  rank  timestamp  [latent_rel_any  latent_rel_fresh]
//! judgments.tsv   query_id  grade1  grade2  grade3
//! features.tsv    query_id  <name1> ... <nameK>        (header row)
//!                 q1        v1      ... vK
//! queries.tsv     query_id  issue_time  true_grade  volume
//! query_log.tsv   query_id  day_index  count
//! ```

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::calibration::PositionPriorTable;
use crate::freshness::{self, FreshnessWindow, QueryLogEntry};
use crate::io::{self, fmt_opt, for_each_record, parse_err, parse_field, parse_opt_real};
use crate::{Error, Result};

/// The four recency-need grades assessors may assign.
pub const GRADES: [f64; 4] = [0.0, 0.25, 0.75, 0.95];

pub fn is_grade(x: f64) -> bool {
    GRADES.contains(&x)
}

fn grade_index(x: f64) -> Option<usize> {
    GRADES.iter().position(|&g| g == x)
}

/// Names of the built-in feature schema. Extra noise features are appended as
/// `noise_3`, `noise_4`, ...
pub const SIGNAL_FEATURES: [&str; 4] = [
    "query_stream_lm",
    "social_stream_lm",
    "news_stream_lm",
    "news_click_prob",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub query_id: String,
    /// Epoch seconds.
    pub issue_time: i64,
    pub true_grade: Option<f64>,
    pub features: Vec<Feature>,
    /// Number of instances of the query, for traffic weighting.
    pub volume: Option<u64>,
}

impl QueryRecord {
    /// Feature values in the order of `schema`.
    pub fn feature_values(&self, schema: &[String]) -> Result<Vec<f64>> {
        schema
            .iter()
            .map(|name| {
                self.features
                    .iter()
                    .find(|f| &f.name == name)
                    .map(|f| f.value)
                    .ok_or_else(|| {
                        Error::validation(format!("query `{}` has no value for feature `{name}`", self.query_id))
                    })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocEntry {
    pub doc_id: String,
    /// 1-based.
    pub rank: usize,
    /// Creation or last-update time, epoch seconds.
    pub timestamp: i64,
    pub latent_rel_any: Option<f64>,
    pub latent_rel_fresh: Option<f64>,
}

/// An ordered list of documents whose ranks are exactly `1..=len`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    entries: Vec<DocEntry>,
}

impl Ranking {
    /// Sorts `entries` by rank and checks the ranking invariants.
    pub fn new(mut entries: Vec<DocEntry>) -> Result<Self> {
        entries.sort_by_key(|e| e.rank);
        let mut seen = HashSet::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            if e.rank != i + 1 {
                return Err(Error::validation(format!(
                    "ranks must be contiguous from 1; found rank {} at position {}",
                    e.rank,
                    i + 1
                )));
            }
            if !seen.insert(e.doc_id.as_str()) {
                return Err(Error::validation(format!("duplicate doc_id `{}`", e.doc_id)));
            }
            if e.timestamp < 0 {
                return Err(Error::validation(format!("negative timestamp for `{}`", e.doc_id)));
            }
            for (name, v) in [
                ("latent_rel_any", e.latent_rel_any),
                ("latent_rel_fresh", e.latent_rel_fresh),
            ] {
                if let Some(v) = v {
                    if !(0.0..=1.0).contains(&v) {
                        return Err(Error::validation(format!("{name} {v} of `{}` outside [0,1]", e.doc_id)));
                    }
                }
            }
        }
        Ok(Ranking { entries })
    }

    /// Builds a ranking from entries already in order, reassigning ranks 1..n.
    pub fn renumbered(entries: impl IntoIterator<Item = DocEntry>) -> Self {
        let entries = entries
            .into_iter()
            .enumerate()
            .map(|(i, mut e)| {
                e.rank = i + 1;
                e
            })
            .collect();
        Ranking { entries }
    }

    pub fn entries(&self) -> &[DocEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn top(&self, depth: usize) -> &[DocEntry] {
        &self.entries[..depth.min(self.entries.len())]
    }

    pub fn get(&self, doc_id: &str) -> Option<&DocEntry> {
        self.entries.iter().find(|e| e.doc_id == doc_id)
    }

    pub fn has_latent(&self) -> bool {
        self.entries
            .iter()
            .all(|e| e.latent_rel_any.is_some() && e.latent_rel_fresh.is_some())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgedQuery {
    pub query_id: String,
    pub assessor_grades: [f64; 3],
    pub consensus_grade: f64,
}

impl JudgedQuery {
    /// Consensus is the arithmetic mean of the three assessor grades.
    pub fn new(query_id: impl Into<String>, grades: [f64; 3]) -> Result<Self> {
        let query_id = query_id.into();
        if let Some(bad) = grades.iter().find(|g| !is_grade(**g)) {
            return Err(Error::validation(format!(
                "grade {bad} for `{query_id}` is not one of {GRADES:?}"
            )));
        }
        let consensus_grade = grades.iter().sum::<f64>() / 3.0;
        Ok(JudgedQuery {
            query_id,
            assessor_grades: grades,
            consensus_grade,
        })
    }
}

pub type RankingMap = BTreeMap<String, Ranking>;
pub type JudgmentMap = BTreeMap<String, JudgedQuery>;

/// Feature matrix keyed by query id, with a shared schema.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureTable {
    pub names: Vec<String>,
    pub rows: BTreeMap<String, Vec<f64>>,
}

// ---------------------------------------------------------------------------
// Readers and writers
// ---------------------------------------------------------------------------

pub fn load_rankings(path: &Path) -> Result<RankingMap> {
    parse_rankings(io::open(path)?, path)
}

pub fn parse_rankings<R: BufRead>(reader: R, path: &Path) -> Result<RankingMap> {
    let mut grouped: BTreeMap<String, Vec<DocEntry>> = BTreeMap::new();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    for_each_record(reader, path, |line, f| {
        if !(4..=6).contains(&f.len()) {
            return Err(parse_err(
                path,
                line,
                format!("expected 4 to 6 columns, found {}", f.len()),
            ));
        }
        if f[0].is_empty() || f[1].is_empty() {
            return Err(parse_err(path, line, "empty query_id or doc_id"));
        }
        let entry = DocEntry {
            doc_id: f[1].to_string(),
            rank: parse_field(path, line, "rank", f[2])?,
            timestamp: parse_field(path, line, "timestamp", f[3])?,
            latent_rel_any: parse_opt_real(path, line, "latent_rel_any", f.get(4))?,
            latent_rel_fresh: parse_opt_real(path, line, "latent_rel_fresh", f.get(5))?,
        };
        if !seen.insert((f[0].to_string(), entry.doc_id.clone())) {
            return Err(parse_err(
                path,
                line,
                format!("duplicate doc `{}` for query `{}`", entry.doc_id, f[0]),
            ));
        }
        grouped.entry(f[0].to_string()).or_default().push(entry);
        Ok(())
    })?;
    grouped
        .into_iter()
        .map(|(q, entries)| {
            let ranking = Ranking::new(entries).map_err(|e| Error::validation(format!("query `{q}`: {e}")))?;
            Ok((q, ranking))
        })
        .collect()
}

pub fn format_rankings(rankings: &RankingMap) -> String {
    let mut out = String::new();
    for (q, ranking) in rankings {
        for e in ranking.entries() {
            let _ = writeln!(
                out,
                "{q}\t{}\t{}\t{}\t{}\t{}",
                e.doc_id,
                e.rank,
                e.timestamp,
                fmt_opt(e.latent_rel_any),
                fmt_opt(e.latent_rel_fresh)
            );
        }
    }
    out
}

pub fn write_rankings(path: &Path, rankings: &RankingMap) -> Result<()> {
    io::write_atomic(path, format_rankings(rankings).as_bytes())
}

pub fn load_judgments(path: &Path) -> Result<JudgmentMap> {
    parse_judgments(io::open(path)?, path)
}

pub fn parse_judgments<R: BufRead>(reader: R, path: &Path) -> Result<JudgmentMap> {
    let mut out = BTreeMap::new();
    for_each_record(reader, path, |line, f| {
        if f.len() != 4 {
            return Err(parse_err(path, line, format!("expected 4 columns, found {}", f.len())));
        }
        let mut grades = [0.0; 3];
        for (g, raw) in grades.iter_mut().zip(&f[1..]) {
            *g = parse_field(path, line, "grade", raw)?;
        }
        let judged = JudgedQuery::new(f[0], grades).map_err(|e| parse_err(path, line, e.to_string()))?;
        if out.insert(f[0].to_string(), judged).is_some() {
            return Err(parse_err(path, line, format!("duplicate query `{}`", f[0])));
        }
        Ok(())
    })?;
    Ok(out)
}

pub fn format_judgments(judgments: &JudgmentMap) -> String {
    let mut out = String::new();
    for j in judgments.values() {
        let [a, b, c] = j.assessor_grades;
        let _ = writeln!(out, "{}\t{a}\t{b}\t{c}", j.query_id);
    }
    out
}

pub fn load_features(path: &Path) -> Result<FeatureTable> {
    parse_features(io::open(path)?, path)
}

pub fn parse_features<R: BufRead>(reader: R, path: &Path) -> Result<FeatureTable> {
    let mut table = FeatureTable::default();
    let mut header_seen = false;
    for_each_record(reader, path, |line, f| {
        if !header_seen {
            header_seen = true;
            if f.len() < 2 {
                return Err(parse_err(path, line, "feature header needs at least one feature name"));
            }
            table.names = f[1..].iter().map(|s| s.to_string()).collect();
            return Ok(());
        }
        if f.len() != table.names.len() + 1 {
            return Err(parse_err(
                path,
                line,
                format!("expected {} columns, found {}", table.names.len() + 1, f.len()),
            ));
        }
        let values = f[1..]
            .iter()
            .map(|raw| {
                let v: f64 = parse_field(path, line, "feature value", raw)?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(parse_err(path, line, "feature values must be finite"))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        if table.rows.insert(f[0].to_string(), values).is_some() {
            return Err(parse_err(path, line, format!("duplicate query `{}`", f[0])));
        }
        Ok(())
    })?;
    Ok(table)
}

pub fn format_features(table: &FeatureTable) -> String {
    let mut out = String::from("query_id");
    for n in &table.names {
        out.push('\t');
        out.push_str(n);
    }
    out.push('\n');
    for (q, values) in &table.rows {
        out.push_str(q);
        for v in values {
            let _ = write!(out, "\t{v}");
        }
        out.push('\n');
    }
    out
}

pub fn load_queries(path: &Path) -> Result<Vec<QueryRecord>> {
    parse_queries(io::open(path)?, path)
}

pub fn parse_queries<R: BufRead>(reader: R, path: &Path) -> Result<Vec<QueryRecord>> {
    let mut out: Vec<QueryRecord> = Vec::new();
    let mut seen = HashSet::new();
    for_each_record(reader, path, |line, f| {
        if !(2..=4).contains(&f.len()) {
            return Err(parse_err(
                path,
                line,
                format!("expected 2 to 4 columns, found {}", f.len()),
            ));
        }
        if f[0].is_empty() {
            return Err(parse_err(path, line, "empty query_id"));
        }
        if !seen.insert(f[0].to_string()) {
            return Err(parse_err(path, line, format!("duplicate query `{}`", f[0])));
        }
        let true_grade = parse_opt_real(path, line, "true_grade", f.get(2))?;
        if let Some(g) = true_grade {
            if !is_grade(g) {
                return Err(parse_err(
                    path,
                    line,
                    format!("true_grade {g} is not one of {GRADES:?}"),
                ));
            }
        }
        let volume = match f.get(3) {
            None => None,
            Some(s) if *s == "-" || s.is_empty() => None,
            Some(s) => {
                let v: u64 = parse_field(path, line, "volume", s)?;
                if v == 0 {
                    return Err(parse_err(path, line, "volume must be positive"));
                }
                Some(v)
            }
        };
        let issue_time: i64 = parse_field(path, line, "issue_time", f[1])?;
        if issue_time < 0 {
            return Err(parse_err(path, line, "issue_time must be non-negative"));
        }
        out.push(QueryRecord {
            query_id: f[0].to_string(),
            issue_time,
            true_grade,
            features: Vec::new(),
            volume,
        });
        Ok(())
    })?;
    Ok(out)
}

pub fn format_queries(queries: &[QueryRecord]) -> String {
    let mut out = String::new();
    for q in queries {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}",
            q.query_id,
            q.issue_time,
            fmt_opt(q.true_grade),
            q.volume.map_or_else(|| "-".to_string(), |v| v.to_string())
        );
    }
    out
}

// ---------------------------------------------------------------------------
// Corpus
// ---------------------------------------------------------------------------

pub const QUERIES_FILE: &str = "queries.tsv";
pub const RANKINGS_FILE: &str = "rankings.tsv";
pub const JUDGMENTS_FILE: &str = "judgments.tsv";
pub const FEATURES_FILE: &str = "features.tsv";
pub const QUERY_LOG_FILE: &str = "query_log.tsv";

/// Everything the experiments need about a set of queries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    /// Sorted by query id.
    pub queries: Vec<QueryRecord>,
    pub rankings: RankingMap,
    pub judgments: JudgmentMap,
    pub feature_names: Vec<String>,
    pub query_log: Vec<QueryLogEntry>,
}

impl Corpus {
    pub fn query(&self, query_id: &str) -> Option<&QueryRecord> {
        self.queries
            .binary_search_by(|q| q.query_id.as_str().cmp(query_id))
            .ok()
            .map(|i| &self.queries[i])
    }

    pub fn feature_table(&self) -> FeatureTable {
        FeatureTable {
            names: self.feature_names.clone(),
            rows: self
                .queries
                .iter()
                .filter(|q| !q.features.is_empty())
                .map(|q| (q.query_id.clone(), q.features.iter().map(|f| f.value).collect()))
                .collect(),
        }
    }

    /// Checks cross-file consistency, including that no stale document
    /// carries a nonzero fresh relevance under `window`.
    pub fn validate(&self, window: FreshnessWindow) -> Result<()> {
        for q in &self.queries {
            let ranking = self
                .rankings
                .get(&q.query_id)
                .ok_or_else(|| Error::validation(format!("no ranking for query `{}`", q.query_id)))?;
            for e in ranking.entries() {
                let fresh = freshness::is_fresh(e.timestamp, q.issue_time, window);
                if !fresh && e.latent_rel_fresh.is_some_and(|r| r != 0.0) {
                    return Err(Error::validation(format!(
                        "stale doc `{}` of `{}` has nonzero latent_rel_fresh",
                        e.doc_id, q.query_id
                    )));
                }
            }
            if q.features.iter().any(|f| !f.value.is_finite()) {
                return Err(Error::validation(format!("non-finite feature for `{}`", q.query_id)));
            }
        }
        Ok(())
    }

    /// Reads a corpus directory. `queries.tsv` and `rankings.tsv` are
    /// required; judgments, features and the query log are optional.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let qpath = dir.join(QUERIES_FILE);
        let mut queries = parse_queries(io::open(&qpath)?, &qpath)?;
        queries.sort_by(|a, b| a.query_id.cmp(&b.query_id));
        let rankings = load_rankings(&dir.join(RANKINGS_FILE))?;

        let jpath = dir.join(JUDGMENTS_FILE);
        let judgments = if jpath.exists() {
            load_judgments(&jpath)?
        } else {
            BTreeMap::new()
        };

        let fpath = dir.join(FEATURES_FILE);
        let mut feature_names = Vec::new();
        if fpath.exists() {
            let table = load_features(&fpath)?;
            for q in &mut queries {
                if let Some(values) = table.rows.get(&q.query_id) {
                    q.features = table
                        .names
                        .iter()
                        .zip(values)
                        .map(|(n, &v)| Feature {
                            name: n.clone(),
                            value: v,
                        })
                        .collect();
                }
            }
            feature_names = table.names;
        }

        let lpath = dir.join(QUERY_LOG_FILE);
        let query_log = if lpath.exists() {
            freshness::load_query_log(&lpath)?
        } else {
            Vec::new()
        };

        Ok(Corpus {
            queries,
            rankings,
            judgments,
            feature_names,
            query_log,
        })
    }

    /// Writes every component of the corpus into `dir` atomically, file by file.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        io::write_atomic(&dir.join(QUERIES_FILE), format_queries(&self.queries).as_bytes())?;
        io::write_atomic(&dir.join(RANKINGS_FILE), format_rankings(&self.rankings).as_bytes())?;
        if !self.judgments.is_empty() {
            io::write_atomic(&dir.join(JUDGMENTS_FILE), format_judgments(&self.judgments).as_bytes())?;
        }
        if !self.feature_names.is_empty() {
            io::write_atomic(
                &dir.join(FEATURES_FILE),
                format_features(&self.feature_table()).as_bytes(),
            )?;
        }
        if !self.query_log.is_empty() {
            io::write_atomic(
                &dir.join(QUERY_LOG_FILE),
                freshness::format_query_log(&self.query_log).as_bytes(),
            )?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Synthetic generation
// ---------------------------------------------------------------------------

/// Share of web traffic for grades 0.25, 0.75 and 0.95; grade 0 takes the rest.
pub const TRAFFIC_COVERAGE: [f64; 3] = [0.049, 0.0111, 0.0073];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub n_queries: usize,
    /// Probability of each grade in [`GRADES`] order.
    pub grade_mixture: [f64; 4],
    /// Documents per initial ranking.
    pub ranking_depth: usize,
    /// Probability that an initial-ranking document is fresh is
    /// `fresh_rate_base + fresh_rate_slope * true_grade`.
    pub fresh_rate_base: f64,
    pub fresh_rate_slope: f64,
    /// Standard deviation of the Gaussian noise added to the grade before
    /// each signal feature's monotone transform.
    pub feature_noise: f64,
    /// Pure-noise features appended after the four signal features.
    pub noise_features: usize,
    /// Probability that an assessor reports the true grade; otherwise an
    /// adjacent grade is reported.
    pub assessor_accuracy: f64,
    /// Beta concentration of the latent relevances around the position priors.
    pub relevance_concentration: f64,
    pub priors: PositionPriorTable,
    pub window: FreshnessWindow,
    /// Issue times are spread over this many days starting at `start_time`.
    pub days: u32,
    pub start_time: i64,
}

impl Default for GenConfig {
    fn default() -> Self {
        let rest = 1.0 - TRAFFIC_COVERAGE.iter().sum::<f64>();
        GenConfig {
            n_queries: 4000,
            grade_mixture: [rest, TRAFFIC_COVERAGE[0], TRAFFIC_COVERAGE[1], TRAFFIC_COVERAGE[2]],
            ranking_depth: 30,
            fresh_rate_base: 0.03,
            fresh_rate_slope: 0.30,
            feature_noise: 0.15,
            noise_features: 2,
            assessor_accuracy: 0.9,
            relevance_concentration: 20.0,
            priors: PositionPriorTable::default(),
            window: FreshnessWindow::default(),
            days: 21,
            start_time: 1_299_628_800, // 2011-03-09
        }
    }
}

impl GenConfig {
    /// A corpus shaped like an assessment pool: queries that passed
    /// preselection, so recency-sensitive grades are far more common than in
    /// raw traffic.
    pub fn judged_set() -> Self {
        GenConfig {
            grade_mixture: [0.35, 0.25, 0.22, 0.18],
            ..GenConfig::default()
        }
    }

    pub fn feature_names(&self) -> Vec<String> {
        SIGNAL_FEATURES
            .iter()
            .map(|s| s.to_string())
            .chain((1..=self.noise_features).map(|i| format!("noise_{i}")))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_queries == 0 || self.ranking_depth == 0 || self.days == 0 {
            return Err(Error::Config(
                "query count, ranking depth and days must be positive".into(),
            ));
        }
        if self.grade_mixture.iter().any(|p| !(p.is_finite() && *p >= 0.0))
            || self.grade_mixture.iter().sum::<f64>() <= 0.0
        {
            return Err(Error::Config(
                "grade mixture must be non-negative with a positive sum".into(),
            ));
        }
        let rate_hi = self.fresh_rate_base + self.fresh_rate_slope;
        if !(0.0..=1.0).contains(&self.fresh_rate_base) || !(0.0..=1.0).contains(&rate_hi) {
            return Err(Error::Config("fresh rate must stay within [0,1]".into()));
        }
        if !(self.feature_noise >= 0.0 && self.feature_noise.is_finite()) {
            return Err(Error::Config("feature noise must be finite and non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.assessor_accuracy) {
            return Err(Error::Config("assessor accuracy must be in [0,1]".into()));
        }
        if !(self.relevance_concentration > 0.0 && self.relevance_concentration.is_finite()) {
            return Err(Error::Config("relevance concentration must be positive".into()));
        }
        if self.start_time < self.window.seconds() as i64 + 366 * 86_400 {
            return Err(Error::Config("start_time too small for stale timestamps".into()));
        }
        Ok(())
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn beta_around(mean: f64, concentration: f64) -> Beta<f64> {
    Beta::new(mean * concentration, (1.0 - mean) * concentration).expect("prior in (0,1)")
}

fn sample_grade(rng: &mut impl Rng, mixture: &[f64; 4]) -> f64 {
    let total: f64 = mixture.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (g, &p) in GRADES.iter().zip(mixture) {
        if u < p {
            return *g;
        }
        u -= p;
    }
    // Floating-point leftovers land on the last grade with nonzero weight.
    let last = mixture.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    GRADES[last]
}

fn assessor_grade(rng: &mut impl Rng, truth: f64, accuracy: f64) -> f64 {
    if rng.random::<f64>() < accuracy {
        return truth;
    }
    let i = grade_index(truth).expect("true grade is a grade");
    let j = match i {
        0 => 1,
        3 => 2,
        _ if rng.random::<bool>() => i - 1,
        _ => i + 1,
    };
    GRADES[j]
}

/// Signal feature `k` is a monotone transform of the noisy grade.
fn signal_feature(k: usize, noisy: f64) -> f64 {
    match k {
        0 => noisy,
        1 => (2.0 * noisy).exp(),
        2 => logistic(6.0 * (noisy - 0.5)),
        _ => noisy * noisy.abs(),
    }
}

/// Generates a corpus deterministically from `seed`. Every query draws from
/// its own PRNG stream, so a query's content does not depend on the count.
pub fn generate_corpus(config: &GenConfig, seed: u64) -> Result<Corpus> {
    config.validate()?;
    let names = config.feature_names();
    let width = (config.n_queries.max(10) as f64).log10().ceil() as usize;
    let noise =
        Normal::new(0.0, config.feature_noise.max(f64::MIN_POSITIVE)).map_err(|e| Error::Config(e.to_string()))?;
    let volume_dist = LogNormal::new(2.0, 1.2).expect("valid lognormal");
    let window = config.window.seconds() as i64;

    let mut corpus = Corpus {
        feature_names: names.clone(),
        ..Corpus::default()
    };

    for idx in 0..config.n_queries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(idx as u64);

        let query_id = format!("q{idx:0width$}");
        let grade = sample_grade(&mut rng, &config.grade_mixture);
        let day = rng.random_range(0..config.days) as i64;
        let issue_time = config.start_time + day * 86_400 + rng.random_range(0..86_400);
        let volume = Distribution::<f64>::sample(&volume_dist, &mut rng).ceil().max(1.0) as u64;

        let mut features = Vec::with_capacity(names.len());
        for (k, name) in names.iter().enumerate() {
            let value = if k < SIGNAL_FEATURES.len() {
                let noisy = grade
                    + if config.feature_noise > 0.0 {
                        noise.sample(&mut rng)
                    } else {
                        0.0
                    };
                signal_feature(k, noisy)
            } else {
                rng.random::<f64>()
            };
            features.push(Feature {
                name: name.clone(),
                value,
            });
        }

        let grades = [
            assessor_grade(&mut rng, grade, config.assessor_accuracy),
            assessor_grade(&mut rng, grade, config.assessor_accuracy),
            assessor_grade(&mut rng, grade, config.assessor_accuracy),
        ];
        let judged = JudgedQuery::new(query_id.clone(), grades)?;

        let fresh_rate = config.fresh_rate_base + config.fresh_rate_slope * grade;
        let mut entries = Vec::with_capacity(config.ranking_depth);
        let mut fresh_rank = 0usize;
        for rank in 1..=config.ranking_depth {
            let fresh = rng.random::<f64>() < fresh_rate;
            let timestamp = if fresh {
                issue_time - rng.random_range(0..=window)
            } else {
                issue_time - rng.random_range(window + 1..=window + 365 * 86_400)
            };
            let rel_any = beta_around(config.priors.prior(rank)?, config.relevance_concentration).sample(&mut rng);
            let rel_fresh = if fresh {
                fresh_rank += 1;
                beta_around(config.priors.prior(fresh_rank)?, config.relevance_concentration).sample(&mut rng)
            } else {
                0.0
            };
            entries.push(DocEntry {
                doc_id: format!("{query_id}-d{rank:02}"),
                rank,
                timestamp,
                latent_rel_any: Some(rel_any),
                latent_rel_fresh: Some(rel_fresh),
            });
        }

        corpus
            .query_log
            .extend(generate_log(&mut rng, &query_id, grade, day, volume));
        corpus.rankings.insert(query_id.clone(), Ranking::new(entries)?);
        corpus.judgments.insert(query_id.clone(), judged);
        corpus.queries.push(QueryRecord {
            query_id,
            issue_time,
            true_grade: Some(grade),
            features,
            volume: Some(volume),
        });
    }
    Ok(corpus)
}

/// Daily instance counts: recency-sensitive queries burst and fade within a
/// few days, others are spread evenly over a week.
fn generate_log(rng: &mut impl Rng, query_id: &str, grade: f64, first_day: i64, volume: u64) -> Vec<QueryLogEntry> {
    let weights: Vec<f64> = if grade > 0.0 {
        (0..5).map(|d| 0.27f64.powi(d)).collect()
    } else {
        vec![1.0; 7]
    };
    let total: f64 = weights.iter().sum();
    let mut counts = vec![0u64; weights.len()];
    for _ in 0..volume * 10 {
        let mut u = rng.random::<f64>() * total;
        let mut day = weights.len() - 1;
        for (d, w) in weights.iter().enumerate() {
            if u < *w {
                day = d;
                break;
            }
            u -= w;
        }
        counts[day] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .filter(|(_, c)| *c > 0)
        .map(|(d, count)| QueryLogEntry {
            query_id: query_id.to_string(),
            day: first_day + d as i64,
            count,
        })
        .collect()
}
