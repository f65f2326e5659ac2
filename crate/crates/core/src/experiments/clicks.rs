//! Cascade click model matching the ERR-IAA user model.
//!
//! The user draws an intent from the query's distribution and scans the page
//! top-down. Before examining a position they continue with probability
//! `p_break` (before every position for [`BreakExponent::Position`], before
//! every position after the first for [`BreakExponent::PositionMinusOne`]).
//! An examined document satisfies the intent with probability `R^t_r`; the
//! user clicks it and stops. The probability of a click therefore equals the
//! page's ERR-IAA.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::metric::{BreakExponent, IntentDistribution, IntentRelevance, MetricConfig};

/// Seconds to the first click: a fixed base, a per-position scan cost and
/// Gaussian noise truncated to `±TIME_NOISE_BOUND`.
pub const TIME_BASE_S: f64 = 2.0;
pub const TIME_PER_POSITION_S: f64 = 1.5;
const TIME_NOISE_SD: f64 = 0.5;
const TIME_NOISE_BOUND: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClickOutcome {
    pub clicked_positions: Vec<usize>,
    pub first_click_time_s: Option<f64>,
}

impl ClickOutcome {
    pub fn abandoned(&self) -> bool {
        self.clicked_positions.is_empty()
    }

    pub fn first_click(&self) -> Option<usize> {
        self.clicked_positions.first().copied()
    }
}

fn truncated_noise(rng: &mut impl Rng) -> f64 {
    let normal = Normal::new(0.0, TIME_NOISE_SD).expect("valid normal");
    loop {
        let x: f64 = normal.sample(rng);
        if x.abs() <= TIME_NOISE_BOUND {
            return x;
        }
    }
}

pub fn simulate_clicks<T: IntentRelevance, R: Rng>(
    page: &[T],
    dist: IntentDistribution,
    config: &MetricConfig,
    rng: &mut R,
) -> ClickOutcome {
    let wants_fresh = rng.random::<f64>() < dist.p_fresh();
    for (i, doc) in page.iter().take(config.depth).enumerate() {
        let position = i + 1;
        let gate = match config.break_exponent {
            BreakExponent::Position => true,
            BreakExponent::PositionMinusOne => position > 1,
        };
        if gate && rng.random::<f64>() >= config.p_break {
            break;
        }
        let r = if wants_fresh { doc.r_fresh() } else { doc.r_any() };
        if rng.random::<f64>() < r {
            let t = TIME_BASE_S + TIME_PER_POSITION_S * i as f64 + truncated_noise(rng);
            return ClickOutcome {
                clicked_positions: vec![position],
                first_click_time_s: Some(t),
            };
        }
    }
    ClickOutcome {
        clicked_positions: Vec::new(),
        first_click_time_s: None,
    }
}

pub fn simulate_clicks_seeded<T: IntentRelevance>(
    page: &[T],
    dist: IntentDistribution,
    config: &MetricConfig,
    seed: u64,
) -> ClickOutcome {
    simulate_clicks(page, dist, config, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{err_iaa, RelevancePair};

    fn page(rs: &[(f64, f64)]) -> Vec<RelevancePair> {
        rs.iter().map(|&(any, fresh)| RelevancePair { fresh, any }).collect()
    }

    #[test]
    fn nothing_relevant_means_abandonment() {
        let p = page(&[(0.0, 0.0); 5]);
        let dist = IntentDistribution::from_fresh(0.4).unwrap();
        for seed in 0..200 {
            let out = simulate_clicks_seeded(&p, dist, &MetricConfig::default(), seed);
            assert!(out.abandoned());
            assert_eq!(out.first_click_time_s, None);
        }
    }

    #[test]
    fn certain_top_result_is_always_clicked() {
        let cfg = MetricConfig {
            break_exponent: BreakExponent::PositionMinusOne,
            ..Default::default()
        };
        let p = page(&[(1.0, 1.0), (0.5, 0.5)]);
        let dist = IntentDistribution::from_fresh(0.3).unwrap();
        for seed in 0..200 {
            let out = simulate_clicks_seeded(&p, dist, &cfg, seed);
            assert_eq!(out.clicked_positions, vec![1]);
            let t = out.first_click_time_s.unwrap();
            assert!((1.0..=3.0).contains(&t), "{t}");
        }
    }

    #[test]
    fn click_rate_matches_metric() {
        let p = page(&[(0.5, 0.1), (0.3, 0.7), (0.2, 0.0), (0.4, 0.4)]);
        let dist = IntentDistribution::from_fresh(0.35).unwrap();
        let cfg = MetricConfig::default();
        let expected = err_iaa(&p, dist, &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let trials = 50_000;
        let hits = (0..trials)
            .filter(|_| !simulate_clicks(&p, dist, &cfg, &mut rng).abandoned())
            .count();
        let rate = hits as f64 / trials as f64;
        let se = (expected * (1.0 - expected) / trials as f64).sqrt();
        assert!((rate - expected).abs() < 3.0 * se, "{rate} vs {expected}");
    }
}
