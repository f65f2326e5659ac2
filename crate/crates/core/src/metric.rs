//! Intent-aware expected reciprocal rank with abandonment (ERR-IAA).
//!
//! For an ordered page of documents with per-intent satisfaction
//! probabilities `R^t_r`:
//!
//! ```text
//! ERR-IAA = Σ_r d(r) · Σ_t P(t|q) · Π_{i<r} (1 − R^t_i) · R^t_r
//! ```
//!
//! with intents `t ∈ {fresh, any}` and discount `d(r) = pBreak^r`
//! ([`BreakExponent::Position`]) or `pBreak^(r−1)`
//! ([`BreakExponent::PositionMinusOne`]). The greedy blender works with the
//! per-position terms directly through [`PrefixState`] and [`marginal_gain`].

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Anything with a probability of satisfying each of the two intents.
pub trait IntentRelevance {
    fn r_fresh(&self) -> f64;
    fn r_any(&self) -> f64;
}

/// A bare pair of satisfaction probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelevancePair {
    pub fresh: f64,
    pub any: f64,
}

impl IntentRelevance for RelevancePair {
    fn r_fresh(&self) -> f64 {
        self.fresh
    }
    fn r_any(&self) -> f64 {
        self.any
    }
}

impl<T: IntentRelevance> IntentRelevance for &T {
    fn r_fresh(&self) -> f64 {
        (**self).r_fresh()
    }
    fn r_any(&self) -> f64 {
        (**self).r_any()
    }
}

/// `P(t|q)` over the fresh and the any-relevant intent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntentDistribution {
    p_fresh: f64,
    p_any: f64,
}

impl IntentDistribution {
    pub fn new(p_fresh: f64, p_any: f64) -> Result<Self> {
        let ok = |p: f64| (0.0..=1.0).contains(&p);
        if !ok(p_fresh) || !ok(p_any) || (p_fresh + p_any - 1.0).abs() > 1e-12 {
            return Err(Error::validation(format!(
                "intent distribution ({p_fresh}, {p_any}) must be probabilities summing to 1"
            )));
        }
        Ok(IntentDistribution { p_fresh, p_any })
    }

    /// `(p, 1 − p)`.
    pub fn from_fresh(p_fresh: f64) -> Result<Self> {
        Self::new(p_fresh, 1.0 - p_fresh)
    }

    pub fn p_fresh(&self) -> f64 {
        self.p_fresh
    }

    pub fn p_any(&self) -> f64 {
        self.p_any
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BreakExponent {
    /// `pBreak^r`: the user may abandon before examining the first result.
    #[default]
    #[serde(rename = "r")]
    Position,
    /// `pBreak^(r−1)`: the first result is always examined.
    #[serde(rename = "r-1")]
    PositionMinusOne,
}

impl std::str::FromStr for BreakExponent {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "r" => Ok(BreakExponent::Position),
            "r-1" => Ok(BreakExponent::PositionMinusOne),
            other => Err(Error::Config(format!(
                "break exponent must be `r` or `r-1`, got `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricConfig {
    pub p_break: f64,
    pub break_exponent: BreakExponent,
    /// Result page length; longer lists are truncated.
    pub depth: usize,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            p_break: 0.85,
            break_exponent: BreakExponent::Position,
            depth: 10,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_break > 0.0 && self.p_break < 1.0) {
            return Err(Error::Config(format!("p_break {} outside (0,1)", self.p_break)));
        }
        if self.depth == 0 {
            return Err(Error::Config("depth must be at least 1".into()));
        }
        Ok(())
    }

    /// Discount applied to a 1-based position.
    pub fn discount(&self, position: usize) -> f64 {
        let exp = match self.break_exponent {
            BreakExponent::Position => position,
            BreakExponent::PositionMinusOne => position - 1,
        };
        self.p_break.powi(exp as i32)
    }
}

/// Survival masses `Π (1 − R^t_i)` of the prefix placed so far.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrefixState {
    pub survive_fresh: f64,
    pub survive_any: f64,
    /// 1-based position the next document would take.
    pub next_position: usize,
}

impl Default for PrefixState {
    fn default() -> Self {
        PrefixState {
            survive_fresh: 1.0,
            survive_any: 1.0,
            next_position: 1,
        }
    }
}

/// Gain in ERR-IAA from placing `cand` at `state.next_position`.
pub fn marginal_gain<T: IntentRelevance>(
    state: &PrefixState,
    cand: &T,
    dist: IntentDistribution,
    config: &MetricConfig,
) -> f64 {
    config.discount(state.next_position)
        * (dist.p_fresh * state.survive_fresh * cand.r_fresh() + dist.p_any * state.survive_any * cand.r_any())
}

/// State after placing `cand`.
pub fn advance<T: IntentRelevance>(state: &PrefixState, cand: &T) -> PrefixState {
    PrefixState {
        survive_fresh: state.survive_fresh * (1.0 - cand.r_fresh()),
        survive_any: state.survive_any * (1.0 - cand.r_any()),
        next_position: state.next_position + 1,
    }
}

fn check_probability<T: IntentRelevance>(i: usize, c: &T) -> Result<()> {
    for (name, p) in [("R_fresh", c.r_fresh()), ("R_any", c.r_any())] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::validation(format!(
                "{name} = {p} at position {} outside [0,1]",
                i + 1
            )));
        }
    }
    Ok(())
}

/// ERR-IAA of `ordered`, truncated to `config.depth`.
pub fn err_iaa<T: IntentRelevance>(ordered: &[T], dist: IntentDistribution, config: &MetricConfig) -> Result<f64> {
    config.validate()?;
    let page = &ordered[..ordered.len().min(config.depth)];
    let mut state = PrefixState::default();
    let mut total = 0.0;
    for (i, c) in page.iter().enumerate() {
        check_probability(i, c)?;
        total += marginal_gain(&state, c, dist, config);
        state = advance(&state, c);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pair(any: f64, fresh: f64) -> RelevancePair {
        RelevancePair { fresh, any }
    }

    /// Direct transcription of the double sum, recomputing every product.
    fn brute(page: &[RelevancePair], p_fresh: f64, cfg: &MetricConfig) -> f64 {
        let n = page.len().min(cfg.depth);
        let mut total = 0.0;
        for r in 1..=n {
            let mut inner = 0.0;
            for (p, get) in [
                (p_fresh, (|d: &RelevancePair| d.fresh) as fn(&RelevancePair) -> f64),
                (1.0 - p_fresh, |d: &RelevancePair| d.any),
            ] {
                let survive: f64 = page[..r - 1].iter().map(|d| 1.0 - get(d)).product();
                inner += p * survive * get(&page[r - 1]);
            }
            total += cfg.discount(r) * inner;
        }
        total
    }

    fn any_only() -> IntentDistribution {
        IntentDistribution::from_fresh(0.0).unwrap()
    }

    #[test]
    fn empty_page_scores_zero() {
        let page: [RelevancePair; 0] = [];
        assert_eq!(err_iaa(&page, any_only(), &MetricConfig::default()).unwrap(), 0.0);
    }

    #[test]
    fn single_perfect_document() {
        let v = err_iaa(&[pair(1.0, 0.0)], any_only(), &MetricConfig::default()).unwrap();
        assert!((v - 0.85).abs() < 1e-12);
        let cfg = MetricConfig {
            break_exponent: BreakExponent::PositionMinusOne,
            ..Default::default()
        };
        assert!((err_iaa(&[pair(1.0, 0.0)], any_only(), &cfg).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_documents_half_relevant() {
        let v = err_iaa(&[pair(0.5, 0.0), pair(0.5, 0.0)], any_only(), &MetricConfig::default()).unwrap();
        assert!((v - 0.605625).abs() < 1e-12);
    }

    #[test]
    fn two_intents() {
        let dist = IntentDistribution::new(0.5, 0.5).unwrap();
        let page = [pair(0.6, 0.6), pair(0.6, 0.0)];
        let v = err_iaa(&page, dist, &MetricConfig::default()).unwrap();
        assert!((v - 0.59670).abs() < 1e-12, "{v}");
        assert!((v - brute(&page, 0.5, &MetricConfig::default())).abs() < 1e-15);
    }

    #[test]
    fn invalid_probability_is_rejected() {
        let err = err_iaa(&[pair(1.5, 0.0)], any_only(), &MetricConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn distribution_must_sum_to_one() {
        assert!(IntentDistribution::new(0.5, 0.4).is_err());
        assert!(IntentDistribution::new(-0.1, 1.1).is_err());
    }

    #[test]
    fn long_lists_are_truncated() {
        let cfg = MetricConfig {
            depth: 1,
            ..Default::default()
        };
        let v = err_iaa(&[pair(0.5, 0.0), pair(0.9, 0.0)], any_only(), &cfg).unwrap();
        assert!((v - 0.425).abs() < 1e-12);
    }

    #[test]
    fn gain_and_advance_fixtures() {
        let cfg = MetricConfig::default();
        let s = PrefixState::default();
        assert_eq!(marginal_gain(&s, &pair(0.0, 0.0), any_only(), &cfg), 0.0);
        assert!((marginal_gain(&s, &pair(1.0, 0.0), any_only(), &cfg) - 0.85).abs() < 1e-12);

        let next = advance(&s, &pair(0.25, 0.5));
        assert_eq!(
            (next.survive_fresh, next.survive_any, next.next_position),
            (0.5, 0.75, 2)
        );
        let same = advance(&next, &pair(0.0, 0.0));
        assert_eq!((same.survive_fresh, same.survive_any), (0.5, 0.75));
        let absorbed = advance(&next, &pair(1.0, 1.0));
        assert_eq!((absorbed.survive_fresh, absorbed.survive_any), (0.0, 0.0));
    }

    #[test]
    fn exponent_parses() {
        assert_eq!("r".parse::<BreakExponent>().unwrap(), BreakExponent::Position);
        assert_eq!("r-1".parse::<BreakExponent>().unwrap(), BreakExponent::PositionMinusOne);
        assert!("r+1".parse::<BreakExponent>().is_err());
    }

    fn arb_page() -> impl Strategy<Value = Vec<RelevancePair>> {
        prop::collection::vec((0.0..=1.0f64, 0.0..=1.0f64).prop_map(|(a, f)| pair(a, f)), 0..12)
    }

    fn arb_config() -> impl Strategy<Value = MetricConfig> {
        (0.05..0.99f64, any::<bool>(), 1..12usize).prop_map(|(p_break, minus_one, depth)| MetricConfig {
            p_break,
            break_exponent: if minus_one {
                BreakExponent::PositionMinusOne
            } else {
                BreakExponent::Position
            },
            depth,
        })
    }

    proptest! {
        #[test]
        fn matches_brute_force(page in arb_page(), p in 0.0..=1.0f64, cfg in arb_config()) {
            let dist = IntentDistribution::from_fresh(p).unwrap();
            let v = err_iaa(&page, dist, &cfg).unwrap();
            prop_assert!((v - brute(&page, p, &cfg)).abs() < 1e-12);
        }

        #[test]
        fn gains_telescope(page in arb_page(), p in 0.0..=1.0f64, cfg in arb_config()) {
            let dist = IntentDistribution::from_fresh(p).unwrap();
            let mut s = PrefixState::default();
            let mut sum = 0.0;
            for c in page.iter().take(cfg.depth) {
                let g = marginal_gain(&s, c, dist, &cfg);
                prop_assert!(g >= 0.0);
                sum += g;
                s = advance(&s, c);
                prop_assert!(s.survive_fresh >= 0.0 && s.survive_any >= 0.0);
            }
            prop_assert!((sum - err_iaa(&page, dist, &cfg).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn linear_in_intent(page in arb_page(), p in 0.0..=1.0f64, cfg in arb_config()) {
            let mixed = err_iaa(&page, IntentDistribution::from_fresh(p).unwrap(), &cfg).unwrap();
            let fresh = err_iaa(&page, IntentDistribution::from_fresh(1.0).unwrap(), &cfg).unwrap();
            let any = err_iaa(&page, IntentDistribution::from_fresh(0.0).unwrap(), &cfg).unwrap();
            prop_assert!((mixed - (p * fresh + (1.0 - p) * any)).abs() < 1e-12);
        }

        #[test]
        fn prefix_never_scores_higher(page in arb_page(), cut in 0..12usize, p in 0.0..=1.0f64, cfg in arb_config()) {
            let dist = IntentDistribution::from_fresh(p).unwrap();
            let cut = cut.min(page.len());
            let full = err_iaa(&page, dist, &cfg).unwrap();
            let prefix = err_iaa(&page[..cut], dist, &cfg).unwrap();
            prop_assert!(prefix <= full + 1e-15);
            let bound: f64 = (1..=page.len().min(cfg.depth)).map(|r| cfg.discount(r)).sum();
            prop_assert!(full <= bound + 1e-12);
        }

        #[test]
        fn swapping_a_dominated_document_up_never_hurts(
            page in prop::collection::vec((0.0..=1.0f64, 0.0..=1.0f64).prop_map(|(a, f)| pair(a, f)), 2..10),
            i in 0..9usize,
            p in 0.0..=1.0f64,
            cfg in arb_config(),
        ) {
            let i = i % (page.len() - 1);
            let (a, b) = (page[i], page[i + 1]);
            prop_assume!(a.fresh < b.fresh && a.any < b.any);
            let dist = IntentDistribution::from_fresh(p).unwrap();
            let mut swapped = page.clone();
            swapped.swap(i, i + 1);
            let before = err_iaa(&page, dist, &cfg).unwrap();
            let after = err_iaa(&swapped, dist, &cfg).unwrap();
            prop_assert!(after >= before - 1e-12);
        }
    }
}
