//! Fixtures shared by the benchmarks.

use freshblend::corpus::{generate_corpus, GenConfig};
use freshblend::experiments::ExperimentConfig;
use freshblend::recency_classifier::Dataset;
use freshblend::{build_candidates, derive_fresh_ranking, CalibratedCandidate, Corpus};

pub fn corpus(n_queries: usize) -> Corpus {
    generate_corpus(
        &GenConfig {
            n_queries,
            ..GenConfig::judged_set()
        },
        7,
    )
    .expect("corpus generates")
}

/// Candidate pools of the first `n` queries at page depth `depth`.
pub fn pools(corpus: &Corpus, n: usize, depth: usize) -> Vec<Vec<CalibratedCandidate>> {
    let cfg = ExperimentConfig::default();
    corpus
        .queries
        .iter()
        .take(n)
        .map(|q| {
            let ordinary = &corpus.rankings[&q.query_id];
            let fresh = derive_fresh_ranking(ordinary, q.issue_time, cfg.window);
            build_candidates(ordinary, &fresh, &cfg.priors, q.issue_time, cfg.window, depth).expect("valid pool")
        })
        .collect()
}

/// Judged queries as a regression set against the consensus grade.
pub fn dataset(corpus: &Corpus) -> Dataset {
    let schema = &corpus.feature_names;
    Dataset {
        feature_names: schema.clone(),
        rows: corpus
            .queries
            .iter()
            .filter_map(|q| {
                let j = corpus.judgments.get(&q.query_id)?;
                Some((q.feature_values(schema).ok()?, j.consensus_grade))
            })
            .collect(),
    }
}
