use std::fmt::Write as _;

use serde::Serialize;

use super::{prepare_all, ExperimentConfig, REPORT_SCHEMA_VERSION};
use crate::corpus::Corpus;
use crate::metric::IntentDistribution;
use crate::{Error, Result};

/// `0.00, 0.05, ..., 0.95`.
pub fn default_grid() -> Vec<f64> {
    (0..20).map(|i| i as f64 / 20.0).collect()
}

/// Mean ERR-IAA of queries sharing a true grade, as a function of the
/// recency need assumed when blending.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCurve {
    pub true_grade: f64,
    pub n_queries: usize,
    /// `(p_hat, mean err_iaa)`.
    pub points: Vec<(f64, f64)>,
}

impl SweepCurve {
    /// The first grid point attaining the maximum.
    pub fn argmax(&self) -> (f64, f64) {
        self.points.iter().copied().fold(
            (f64::NAN, f64::NEG_INFINITY),
            |best, p| if p.1 > best.1 { p } else { best },
        )
    }

    pub fn value_at(&self, p_hat: f64) -> Option<f64> {
        self.points
            .iter()
            .find(|(p, _)| (p - p_hat).abs() < 1e-12)
            .map(|(_, v)| *v)
    }
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config("estimate grid is empty".into()));
    }
    if grid.iter().any(|p| !(0.0..=1.0).contains(p)) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(
            "estimate grid must be strictly increasing within [0,1]".into(),
        ));
    }
    Ok(())
}

/// For each true grade, blends every query with each estimate on `grid` and
/// scores the page under the true distribution.
pub fn sweep_estimate(corpus: &Corpus, grid: &[f64], config: &ExperimentConfig) -> Result<Vec<SweepCurve>> {
    validate_grid(grid)?;
    let prepared = prepare_all(corpus, config, |q| q.true_grade.is_some())?;

    let mut grades: Vec<f64> = prepared.iter().filter_map(|p| p.record.true_grade).collect();
    grades.sort_by(f64::total_cmp);
    grades.dedup();

    let mut curves = Vec::with_capacity(grades.len());
    for g in grades {
        let truth = IntentDistribution::from_fresh(g)?;
        let group: Vec<_> = prepared.iter().filter(|p| p.record.true_grade == Some(g)).collect();
        let mut points = Vec::with_capacity(grid.len());
        for &p_hat in grid {
            let mut sum = 0.0;
            for q in &group {
                let page = q.blended(p_hat, &config.metric)?;
                sum += q.evaluate(&page, truth, &config.metric)?;
            }
            points.push((p_hat, sum / group.len() as f64));
        }
        curves.push(SweepCurve {
            true_grade: g,
            n_queries: group.len(),
            points,
        });
    }
    Ok(curves)
}

/// `sweep.csv`: `true_grade,p_hat,err_iaa` after a schema comment line.
pub fn sweep_csv(curves: &[SweepCurve]) -> String {
    let mut out = format!("#schema_version={REPORT_SCHEMA_VERSION}\ntrue_grade,p_hat,err_iaa\n");
    for c in curves {
        for (p, v) in &c.points {
            let _ = writeln!(out, "{},{},{}", c.true_grade, p, v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_corpus, GenConfig};

    #[test]
    fn grid_shape() {
        let g = default_grid();
        assert_eq!(g.len(), 20);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[19], 0.95);
        assert!(g.windows(2).all(|w| (w[1] - w[0] - 0.05).abs() < 1e-12));
        assert!(validate_grid(&[0.1, 0.1]).is_err());
        assert!(validate_grid(&[]).is_err());
    }

    #[test]
    fn zero_need_peaks_at_zero() {
        let cfg = GenConfig {
            n_queries: 300,
            grade_mixture: [1.0, 0.0, 0.0, 0.0],
            ..GenConfig::default()
        };
        let corpus = generate_corpus(&cfg, 5).unwrap();
        let curves = sweep_estimate(&corpus, &default_grid(), &ExperimentConfig::default()).unwrap();
        assert_eq!(curves.len(), 1);
        assert_eq!(curves[0].argmax().0, 0.0);
    }

    #[test]
    fn refuses_corpus_without_latent_relevances() {
        let mut corpus = generate_corpus(
            &GenConfig {
                n_queries: 5,
                ..GenConfig::default()
            },
            1,
        )
        .unwrap();
        let (q, ranking) = corpus
            .rankings
            .iter()
            .next()
            .map(|(q, r)| (q.clone(), r.clone()))
            .unwrap();
        let stripped = crate::corpus::Ranking::renumbered(ranking.entries().iter().cloned().map(|mut e| {
            e.latent_rel_any = None;
            e
        }));
        corpus.rankings.insert(q, stripped);
        assert!(matches!(
            sweep_estimate(&corpus, &default_grid(), &ExperimentConfig::default()),
            Err(Error::Refused(_))
        ));
    }
}
