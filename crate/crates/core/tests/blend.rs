use freshblend::{
    blend, brute_force_best, err_iaa, BreakExponent, CalibratedCandidate, IntentDistribution, MetricConfig,
};
use proptest::prelude::*;

fn arb_pool(max: usize) -> impl Strategy<Value = Vec<CalibratedCandidate>> {
    prop::collection::vec(
        (0u8..=10, 0u8..=10, any::<bool>(), prop::option::of(1usize..20)),
        1..=max,
    )
    .prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (a, f, fresh, rank))| CalibratedCandidate {
                doc_id: format!("d{i}"),
                r_any: a as f64 / 10.0,
                r_fresh: if fresh { f as f64 / 10.0 } else { 0.0 },
                ordinary_rank: rank,
                fresh_rank: None,
            })
            .collect()
    })
}

fn arb_config(max_depth: usize) -> impl Strategy<Value = MetricConfig> {
    (0.05..0.99f64, any::<bool>(), 1..=max_depth).prop_map(|(p_break, r1, depth)| MetricConfig {
        p_break,
        break_exponent: if r1 {
            BreakExponent::PositionMinusOne
        } else {
            BreakExponent::Position
        },
        depth,
    })
}

fn dist(p: f64) -> IntentDistribution {
    IntentDistribution::from_fresh(p).unwrap()
}

fn lookup<'a>(pool: &'a [CalibratedCandidate], id: &str) -> &'a CalibratedCandidate {
    pool.iter().find(|c| c.doc_id == id).unwrap()
}

proptest! {
    #[test]
    fn every_step_is_a_best_extension(pool in arb_pool(10), cfg in arb_config(10), p in 0.0..=1.0f64) {
        let res = blend(&pool, dist(p), &cfg).unwrap();
        prop_assert_eq!(res.doc_ids.len(), cfg.depth.min(pool.len()));
        let mut prefix: Vec<&CalibratedCandidate> = Vec::new();
        for (id, gain) in res.doc_ids.iter().zip(&res.gains) {
            let base = err_iaa(&prefix, dist(p), &cfg).unwrap();
            for c in pool.iter().filter(|c| !prefix.iter().any(|q| q.doc_id == c.doc_id)) {
                let mut ext = prefix.clone();
                ext.push(c);
                let g = err_iaa(&ext, dist(p), &cfg).unwrap() - base;
                prop_assert!(g <= gain + 1e-12, "{} beats {} ({} > {})", c.doc_id, id, g, gain);
            }
            prefix.push(lookup(&pool, id));
        }
        let total = err_iaa(&prefix, dist(p), &cfg).unwrap();
        prop_assert!((total - res.total).abs() < 1e-12);
    }

    #[test]
    fn first_pick_is_the_best_single_document(pool in arb_pool(10), cfg in arb_config(10), p in 0.0..=1.0f64) {
        let res = blend(&pool, dist(p), &cfg).unwrap();
        let best = pool.iter().map(|c| err_iaa(&[c], dist(p), &cfg).unwrap()).fold(0.0, f64::max);
        let first = err_iaa(&[lookup(&pool, &res.doc_ids[0])], dist(p), &cfg).unwrap();
        prop_assert!((first - best).abs() < 1e-12);
    }

    #[test]
    fn close_to_exhaustive_optimum(pool in arb_pool(7), cfg in arb_config(4), p in 0.0..=1.0f64) {
        let res = blend(&pool, dist(p), &cfg).unwrap();
        let (page, best) = brute_force_best(&pool, dist(p), &cfg, cfg.depth).unwrap();
        prop_assert!(res.total >= 0.95 * best - 1e-12);
        prop_assert!(res.total <= best + 1e-12);
        prop_assert_eq!(page.len(), res.doc_ids.len());
    }

    #[test]
    fn single_slot_pick_ignores_p_break(pool in arb_pool(10), a in 0.05..0.99f64, b in 0.05..0.99f64, p in 0.0..=1.0f64) {
        let cfg = |p_break| MetricConfig { p_break, break_exponent: BreakExponent::PositionMinusOne, depth: 1 };
        let x = blend(&pool, dist(p), &cfg(a)).unwrap();
        let y = blend(&pool, dist(p), &cfg(b)).unwrap();
        prop_assert_eq!(x.doc_ids, y.doc_ids);
    }

    #[test]
    fn deterministic_under_pool_order(pool in arb_pool(10), cfg in arb_config(10), p in 0.0..=1.0f64) {
        let mut reversed = pool.clone();
        reversed.reverse();
        prop_assert_eq!(blend(&pool, dist(p), &cfg).unwrap().doc_ids, blend(&reversed, dist(p), &cfg).unwrap().doc_ids);
    }
}

#[test]
fn two_intent_example_places_the_fresh_document_first() {
    let pool = [
        CalibratedCandidate {
            doc_id: "B".into(),
            r_any: 0.6,
            r_fresh: 0.0,
            ordinary_rank: Some(1),
            fresh_rank: None,
        },
        CalibratedCandidate {
            doc_id: "A".into(),
            r_any: 0.6,
            r_fresh: 0.6,
            ordinary_rank: Some(2),
            fresh_rank: Some(1),
        },
    ];
    let res = blend(&pool, dist(0.5), &MetricConfig::default()).unwrap();
    assert_eq!(res.doc_ids, ["A", "B"]);
    assert!((res.total - 0.59670).abs() < 1e-12);
}
