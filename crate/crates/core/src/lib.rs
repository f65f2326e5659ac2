//! Recency ranking by diversification of a web search result page.
//!
//! A query's probability of needing fresh content is estimated by a
//! gradient-boosted regression model ([`recency_classifier`]). That
//! probability becomes an intent distribution over two needs, "fresh and
//! topically relevant" and "any topically relevant", and the result page is
//! built greedily ([`diversifier`]) to maximize the intent-aware expected
//! reciprocal rank with abandonment ([`metric`]) over candidates drawn from
//! the ordinary ranking and its fresh-only subset ([`freshness`],
//! [`calibration`]).
//!
//! [`corpus`] holds the data model, file formats and the synthetic corpus
//! generator; [`experiments`] reproduces the offline sweeps and simulates an
//! online A/B test with a cascade click model.

pub mod calibration;
pub mod corpus;
pub mod diversifier;
mod error;
pub mod experiments;
pub mod freshness;
pub mod io;
pub mod metric;
pub mod recency_classifier;

pub use calibration::{build_candidates, position_prior, CalibratedCandidate, PositionPriorTable};
pub use corpus::{Corpus, DocEntry, GenConfig, JudgedQuery, QueryRecord, Ranking};
pub use diversifier::{blend, brute_force_best, format_blended, load_pages, BlendedResult};
pub use error::{Error, Result};
pub use freshness::{derive_fresh_ranking, is_fresh, FreshnessWindow};
pub use metric::{
    advance, err_iaa, marginal_gain, BreakExponent, IntentDistribution, IntentRelevance, MetricConfig, PrefixState,
    RelevancePair,
};
pub use recency_classifier::{format_predictions, load_predictions, GbrtModel, GbrtParams, Predictions};
