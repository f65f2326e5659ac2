use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use freshblend::corpus::{
    generate_corpus, load_features, load_queries, load_rankings, FEATURES_FILE, QUERIES_FILE, QUERY_LOG_FILE,
    RANKINGS_FILE,
};
use freshblend::experiments::{
    ab_test, bucket_comparison, cross_validate, sweep_csv, sweep_estimate, InitialRanking, LearnedBlend,
};
use freshblend::freshness::{burst_profile, load_query_log};
use freshblend::io::write_atomic;
use freshblend::recency_classifier::{train_gbrt, Dataset};
use freshblend::{
    blend, build_candidates, derive_fresh_ranking, err_iaa, format_blended, format_predictions, load_pages,
    load_predictions, Corpus, Error, GbrtModel, IntentDistribution, Predictions, RelevancePair,
};

use crate::config::{RunConfig, EFFECTIVE_CONFIG_FILE};
use crate::{Command, UsageError};

pub const MODEL_FILE: &str = "model.json";
pub const PREDICTIONS_FILE: &str = "predictions.tsv";
pub const BLENDED_FILE: &str = "blended.tsv";
pub const EVAL_FILE: &str = "eval.tsv";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const BUCKETS_FILE: &str = "buckets.csv";
pub const ABREPORT_FILE: &str = "abreport.json";
pub const BURST_FILE: &str = "burst.csv";

pub fn dispatch(command: Command, config: &RunConfig) -> anyhow::Result<()> {
    match command {
        Command::Generate => generate(config),
        Command::Train => train(config),
        Command::Predict => predict(config),
        Command::Blend => blend_cmd(config),
        Command::Eval => eval(config),
        Command::Sweep => sweep(config),
        Command::Buckets => buckets(config),
        Command::Abtest => abtest(config),
        Command::Profile => profile(config),
    }
}

/// Writes the named outputs and then the effective config, each atomically.
fn emit(config: &RunConfig, files: &[(&str, &str)]) -> anyhow::Result<()> {
    let out = config.out_dir()?;
    for (name, contents) in files {
        write_atomic(&out.join(name), contents.as_bytes())?;
    }
    write_atomic(&out.join(EFFECTIVE_CONFIG_FILE), config.to_json().as_bytes())?;
    Ok(())
}

fn required<'a>(path: &'a Option<PathBuf>, flag: &str) -> anyhow::Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| UsageError(format!("this command needs --{flag}")).into())
}

fn load_corpus(config: &RunConfig) -> anyhow::Result<Corpus> {
    let corpus = Corpus::load_dir(config.corpus_dir()?)?;
    corpus.validate(config.window()?)?;
    Ok(corpus)
}

/// Where each query's recency need comes from.
enum Need {
    Fixed(f64),
    PerQuery(Predictions),
}

impl Need {
    fn from_config(config: &RunConfig) -> anyhow::Result<Self> {
        match (config.p_fresh, &config.predictions) {
            (Some(_), Some(_)) => Err(UsageError("--p-fresh and --predictions are mutually exclusive".into()).into()),
            (Some(p), None) => {
                IntentDistribution::from_fresh(p)?;
                Ok(Need::Fixed(p))
            }
            (None, Some(path)) => Ok(Need::PerQuery(load_predictions(path)?)),
            (None, None) => Err(UsageError("pass --p-fresh or --predictions".into()).into()),
        }
    }

    fn dist(&self, query_id: &str) -> anyhow::Result<IntentDistribution> {
        let p = match self {
            Need::Fixed(p) => *p,
            Need::PerQuery(m) => *m
                .get(query_id)
                .ok_or_else(|| Error::UnknownQuery(query_id.to_string()))?,
        };
        Ok(IntentDistribution::from_fresh(p)?)
    }
}

/// Fixed-point with trailing zeros removed: `0.605625`, `1`, `0`.
fn fmt_score(v: f64) -> String {
    let s = format!("{v:.12}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn generate(config: &RunConfig) -> anyhow::Result<()> {
    let gen = config.gen_config()?;
    let corpus = generate_corpus(&gen, config.seed)?;
    corpus.write_dir(config.out_dir()?)?;
    emit(config, &[])
}

fn train(config: &RunConfig) -> anyhow::Result<()> {
    let corpus = load_corpus(config)?;
    let mut rows = Vec::new();
    for q in &corpus.queries {
        if let Some(j) = corpus.judgments.get(&q.query_id) {
            rows.push((q.feature_values(&corpus.feature_names)?, j.consensus_grade));
        }
    }
    if rows.is_empty() {
        return Err(anyhow!(
            "{}: no judged queries with features",
            config.corpus_dir()?.display()
        ));
    }
    let data = Dataset {
        feature_names: corpus.feature_names.clone(),
        rows,
    };
    let model = train_gbrt(&data, &config.gbrt()?, config.seed)?;
    emit(config, &[(MODEL_FILE, &model.to_json())])
}

fn predict(config: &RunConfig) -> anyhow::Result<()> {
    let model = GbrtModel::load(required(&config.model, "model")?)?;
    let path = config.input(&config.features, FEATURES_FILE, "features")?;
    let table = load_features(&path)?;
    let columns = model
        .feature_names
        .iter()
        .map(|name| {
            table
                .names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| anyhow!("{}: no column for model feature `{name}`", path.display()))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mut predictions = Predictions::new();
    for (q, values) in &table.rows {
        let x: Vec<f64> = columns.iter().map(|&c| values[c]).collect();
        predictions.insert(q.clone(), model.predict(&x)?);
    }
    emit(config, &[(PREDICTIONS_FILE, &format_predictions(&predictions))])
}

fn blend_cmd(config: &RunConfig) -> anyhow::Result<()> {
    let metric = config.metric()?;
    let need = Need::from_config(config)?;
    let rankings = load_rankings(&config.input(&config.rankings, RANKINGS_FILE, "rankings")?)?;
    let qpath = config.input(&config.queries, QUERIES_FILE, "queries")?;
    let issue_times: BTreeMap<String, i64> = load_queries(&qpath)?
        .into_iter()
        .map(|q| (q.query_id, q.issue_time))
        .collect();
    let window = config.window()?;
    let priors = freshblend::PositionPriorTable::new(config.priors.clone())?;

    let mut pages = BTreeMap::new();
    for (q, ordinary) in &rankings {
        let time = *issue_times
            .get(q)
            .ok_or_else(|| anyhow!("{}: no issue time for query `{q}`", qpath.display()))?;
        let fresh = derive_fresh_ranking(ordinary, time, window);
        let candidates = build_candidates(ordinary, &fresh, &priors, time, window, metric.depth)?;
        let page = blend(&candidates, need.dist(q)?, &metric).with_context(|| format!("query `{q}`"))?;
        pages.insert(q.clone(), page);
    }
    emit(config, &[(BLENDED_FILE, &format_blended(&pages))])
}

fn eval(config: &RunConfig) -> anyhow::Result<()> {
    let metric = config.metric()?;
    let need = Need::from_config(config)?;
    let rpath = config.input(&config.rankings, RANKINGS_FILE, "rankings")?;
    let rankings = load_rankings(&rpath)?;

    let pages: BTreeMap<String, Vec<String>> = match &config.page {
        Some(path) => load_pages(path)?,
        None => rankings
            .iter()
            .map(|(q, r)| (q.clone(), r.entries().iter().map(|e| e.doc_id.clone()).collect()))
            .collect(),
    };
    let mut scores = Vec::with_capacity(pages.len());
    for (q, docs) in &pages {
        let ranking = rankings
            .get(q)
            .ok_or_else(|| anyhow!("{}: no ranking for query `{q}`", rpath.display()))?;
        let rel = docs
            .iter()
            .map(|d| {
                let e = ranking
                    .get(d)
                    .ok_or_else(|| anyhow!("{}: doc `{d}` not in ranking of `{q}`", rpath.display()))?;
                match (e.latent_rel_any, e.latent_rel_fresh) {
                    (Some(any), Some(fresh)) => Ok(RelevancePair { fresh, any }),
                    _ => Err(anyhow!(
                        "{}: doc `{d}` of `{q}` lacks latent relevances",
                        rpath.display()
                    )),
                }
            })
            .collect::<anyhow::Result<Vec<_>>>()?;
        scores.push((q.as_str(), err_iaa(&rel, need.dist(q)?, &metric)?));
    }

    if let [(_, v)] = scores.as_slice() {
        println!("{}", fmt_score(*v));
    } else {
        for (q, v) in &scores {
            println!("{q}\t{}", fmt_score(*v));
        }
    }
    if config.out.is_some() {
        let mut tsv = String::from("query_id\terr_iaa\n");
        for (q, v) in &scores {
            let _ = writeln!(tsv, "{q}\t{v}");
        }
        emit(config, &[(EVAL_FILE, &tsv)])?;
    }
    Ok(())
}

fn sweep(config: &RunConfig) -> anyhow::Result<()> {
    let corpus = load_corpus(config)?;
    let experiment = config.experiment()?;
    let curves = sweep_estimate(&corpus, &experiment.grid, &experiment)?;
    emit(config, &[(SWEEP_FILE, &sweep_csv(&curves))])
}

fn buckets(config: &RunConfig) -> anyhow::Result<()> {
    let corpus = load_corpus(config)?;
    let report = bucket_comparison(&corpus, &config.experiment()?, config.seed)?;
    emit(
        config,
        &[
            (BUCKETS_FILE, &report.to_csv()),
            (
                PREDICTIONS_FILE,
                &format_predictions(&report.cross_validation.predictions),
            ),
        ],
    )
}

fn abtest(config: &RunConfig) -> anyhow::Result<()> {
    let corpus = load_corpus(config)?;
    let experiment = config.experiment()?;
    let predictions = match &config.predictions {
        Some(path) => load_predictions(path)?,
        None => cross_validate(&corpus, &experiment.gbrt, config.seed)?.predictions,
    };
    let treatment = LearnedBlend { predictions };
    let report = ab_test(
        &corpus,
        &InitialRanking,
        &treatment,
        config.ab_queries,
        &experiment,
        config.seed,
    )?;
    let mut json = report.to_json();
    json.push('\n');
    emit(config, &[(ABREPORT_FILE, &json)])
}

fn profile(config: &RunConfig) -> anyhow::Result<()> {
    let log = load_query_log(&config.input(&config.query_log, QUERY_LOG_FILE, "query-log")?)?;
    emit(config, &[(BURST_FILE, &burst_profile(&log).to_csv())])
}
