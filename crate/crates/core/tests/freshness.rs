mod common;

use std::collections::HashSet;

use common::{arb_ranking, DAY, NOW};
use freshblend::freshness::{burst_profile, QueryLogEntry};
use freshblend::{derive_fresh_ranking, is_fresh, FreshnessWindow};
use proptest::prelude::*;

fn ids(r: &freshblend::Ranking) -> HashSet<String> {
    r.entries().iter().map(|e| e.doc_id.clone()).collect()
}

proptest! {
    #[test]
    fn wider_window_never_drops_documents(r in arb_ranking(30), a in 1u64..20 * DAY as u64, extra in 0u64..5 * DAY as u64) {
        let narrow = derive_fresh_ranking(&r, NOW, FreshnessWindow::new(a).unwrap());
        let wide = derive_fresh_ranking(&r, NOW, FreshnessWindow::new(a + extra).unwrap());
        prop_assert!(ids(&narrow).is_subset(&ids(&wide)));
    }

    #[test]
    fn idempotent(r in arb_ranking(30), w in 1u64..20 * DAY as u64) {
        let w = FreshnessWindow::new(w).unwrap();
        let once = derive_fresh_ranking(&r, NOW, w);
        prop_assert_eq!(derive_fresh_ranking(&once, NOW, w), once);
    }

    #[test]
    fn output_is_fresh_and_ordered(r in arb_ranking(30), w in 1u64..20 * DAY as u64) {
        let w = FreshnessWindow::new(w).unwrap();
        let fresh = derive_fresh_ranking(&r, NOW, w);
        for (i, e) in fresh.entries().iter().enumerate() {
            prop_assert!(is_fresh(e.timestamp, NOW, w));
            prop_assert_eq!(e.rank, i + 1);
        }
        let expected: Vec<_> = r.entries().iter().filter(|e| is_fresh(e.timestamp, NOW, w)).map(|e| &e.doc_id).collect();
        let got: Vec<_> = fresh.entries().iter().map(|e| &e.doc_id).collect();
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn burst_shares_sum_to_one(counts in prop::collection::vec((0i64..15, 1u64..50), 1..40)) {
        let log: Vec<_> = counts
            .iter()
            .map(|&(day, count)| QueryLogEntry { query_id: "q".into(), day, count })
            .collect();
        let profile = burst_profile(&log);
        let shares = profile.shares("q").unwrap();
        prop_assert!((shares.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(shares[0] > 0.0);
    }
}

#[test]
fn window_boundary_is_inclusive() {
    let w = FreshnessWindow::default();
    assert!(is_fresh(NOW - 3 * DAY, NOW, w));
    assert!(!is_fresh(NOW - 3 * DAY - 1, NOW, w));
    assert!(is_fresh(NOW + DAY, NOW, w));
}
