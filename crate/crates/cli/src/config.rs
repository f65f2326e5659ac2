//! Run configuration: a JSON file (named by `FRESHBLEND_CONFIG`) provides
//! defaults, command-line flags override it, and the merged result is echoed
//! into every output directory.

use std::path::{Path, PathBuf};

use anyhow::Context;
use freshblend::experiments::{default_grid, ExperimentConfig};
use freshblend::{BreakExponent, FreshnessWindow, GbrtParams, GenConfig, MetricConfig, PositionPriorTable};
use serde::{Deserialize, Serialize};

use crate::UsageError;

pub const CONFIG_ENV: &str = "FRESHBLEND_CONFIG";
pub const EFFECTIVE_CONFIG_FILE: &str = "effective_config.json";

/// Corpus mixture preset for `generate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mixture {
    /// Grades in proportion to web traffic.
    Traffic,
    /// Grades as in an assessment pool, where recency-sensitive queries are common.
    #[default]
    Judged,
}

/// Every key here has a matching flag of the same name with `-` for `_`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub pbreak: f64,
    pub break_exponent: BreakExponent,
    pub depth: usize,
    pub window_days: f64,
    pub priors: Vec<f64>,
    pub grid: Vec<f64>,
    pub seed: u64,
    pub out: Option<PathBuf>,

    pub corpus: Option<PathBuf>,
    pub rankings: Option<PathBuf>,
    pub queries: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub page: Option<PathBuf>,
    pub query_log: Option<PathBuf>,
    pub p_fresh: Option<f64>,

    pub n_queries: usize,
    pub mixture: Mixture,
    pub ab_queries: usize,

    pub trees: usize,
    pub tree_depth: usize,
    pub learning_rate: f64,
    pub min_leaf: usize,
    pub subsample: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let metric = MetricConfig::default();
        let gbrt = GbrtParams::default();
        RunConfig {
            pbreak: metric.p_break,
            break_exponent: metric.break_exponent,
            depth: metric.depth,
            window_days: 3.0,
            priors: PositionPriorTable::default().as_slice().to_vec(),
            grid: default_grid(),
            seed: 42,
            out: None,
            corpus: None,
            rankings: None,
            queries: None,
            features: None,
            model: None,
            predictions: None,
            page: None,
            query_log: None,
            p_fresh: None,
            n_queries: GenConfig::default().n_queries,
            mixture: Mixture::default(),
            ab_queries: 100_000,
            trees: gbrt.n_trees,
            tree_depth: gbrt.max_depth,
            learning_rate: gbrt.learning_rate,
            min_leaf: gbrt.min_samples_leaf,
            subsample: gbrt.subsample,
        }
    }
}

impl RunConfig {
    /// Defaults overlaid with the file named by `FRESHBLEND_CONFIG`, if set.
    pub fn from_env() -> anyhow::Result<Self> {
        match std::env::var_os(CONFIG_ENV) {
            Some(path) if !path.is_empty() => Self::load(Path::new(&path)),
            _ => Ok(Self::default()),
        }
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("{}: cannot read config", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("{}: invalid config", path.display()))
    }

    pub fn metric(&self) -> anyhow::Result<MetricConfig> {
        let m = MetricConfig {
            p_break: self.pbreak,
            break_exponent: self.break_exponent,
            depth: self.depth,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn window(&self) -> anyhow::Result<FreshnessWindow> {
        Ok(FreshnessWindow::from_days(self.window_days)?)
    }

    pub fn gbrt(&self) -> anyhow::Result<GbrtParams> {
        let p = GbrtParams {
            n_trees: self.trees,
            max_depth: self.tree_depth,
            learning_rate: self.learning_rate,
            min_samples_leaf: self.min_leaf,
            subsample: self.subsample,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn experiment(&self) -> anyhow::Result<ExperimentConfig> {
        Ok(ExperimentConfig {
            metric: self.metric()?,
            window: self.window()?,
            priors: PositionPriorTable::new(self.priors.clone())?,
            grid: self.grid.clone(),
            gbrt: self.gbrt()?,
        })
    }

    pub fn gen_config(&self) -> anyhow::Result<GenConfig> {
        let base = match self.mixture {
            Mixture::Traffic => GenConfig::default(),
            Mixture::Judged => GenConfig::judged_set(),
        };
        Ok(GenConfig {
            n_queries: self.n_queries,
            priors: PositionPriorTable::new(self.priors.clone())?,
            window: self.window()?,
            ..base
        })
    }

    pub fn out_dir(&self) -> anyhow::Result<&Path> {
        match &self.out {
            Some(p) => Ok(p),
            None => Err(UsageError("this command needs an output directory (--out)".into()).into()),
        }
    }

    /// An explicit path, or `file` inside the corpus directory.
    pub fn input(&self, explicit: &Option<PathBuf>, file: &str, flag: &str) -> anyhow::Result<PathBuf> {
        if let Some(p) = explicit {
            return Ok(p.clone());
        }
        match &self.corpus {
            Some(dir) => Ok(dir.join(file)),
            None => Err(UsageError(format!("missing input: pass --{flag} or --corpus")).into()),
        }
    }

    pub fn corpus_dir(&self) -> anyhow::Result<&Path> {
        match &self.corpus {
            Some(p) => Ok(p),
            None => Err(UsageError("this command needs a corpus directory (--corpus)".into()).into()),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }
}
