#![allow(dead_code)]

use freshblend::{DocEntry, Ranking};
use proptest::prelude::*;

pub const NOW: i64 = 1_300_000_000;
pub const DAY: i64 = 86_400;

/// Rankings of up to `max_len` documents whose ages range from a day in the
/// future to ten days in the past, with latent relevances attached.
pub fn arb_ranking(max_len: usize) -> impl Strategy<Value = Ranking> {
    prop::collection::vec((-DAY..10 * DAY, 0.0..=1.0f64, 0.0..=1.0f64), 0..=max_len).prop_map(|docs| {
        Ranking::renumbered(docs.into_iter().enumerate().map(|(i, (age, any, fresh))| DocEntry {
            doc_id: format!("d{i:02}"),
            rank: i + 1,
            timestamp: NOW - age,
            latent_rel_any: Some(any),
            latent_rel_fresh: Some(fresh),
        }))
    })
}
