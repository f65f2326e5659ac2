//! Gradient-boosted regression trees with squared loss.
//!
//! The ensemble starts from the mean target; each tree is grown greedily on
//! the current residuals, choosing at every node the axis-aligned split with
//! the largest reduction in squared error. Leaves hold the mean residual and
//! each tree's output is shrunk by the learning rate. Predictions are clipped
//! to `[0, 1]`.

use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::io::write_atomic;
use crate::{Error, Result};

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbrtParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
    /// Fraction of rows each tree sees; 1.0 disables subsampling.
    pub subsample: f64,
}

impl Default for GbrtParams {
    fn default() -> Self {
        GbrtParams {
            n_trees: 100,
            max_depth: 3,
            learning_rate: 0.1,
            min_samples_leaf: 1,
            subsample: 1.0,
        }
    }
}

impl GbrtParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::Config(format!(
                "learning rate {} outside (0,1]",
                self.learning_rate
            )));
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return Err(Error::Config(format!("subsample {} outside (0,1]", self.subsample)));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::Config("min_samples_leaf must be at least 1".into()));
        }
        Ok(())
    }
}

/// One node record. Internal nodes carry `feature`, `threshold`, `left` and
/// `right`; leaves carry only `leaf`. Rows with `x[feature] <= threshold`
/// go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub feature: Option<usize>,
    pub threshold: Option<f64>,
    pub left: Option<usize>,
    pub right: Option<usize>,
    pub leaf: Option<f64>,
}

impl Node {
    fn leaf(value: f64) -> Self {
        Node {
            feature: None,
            threshold: None,
            left: None,
            right: None,
            leaf: Some(value),
        }
    }
}

/// Nodes in preorder; the root is node 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            let node = &self.nodes[i];
            if let Some(v) = node.leaf {
                return v;
            }
            let (f, t) = (node.feature.unwrap(), node.threshold.unwrap());
            i = if x[f] <= t {
                node.left.unwrap()
            } else {
                node.right.unwrap()
            };
        }
    }

    fn validate(&self, n_features: usize) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::validation("tree without nodes"));
        }
        for (i, n) in self.nodes.iter().enumerate() {
            match (n.leaf, n.feature, n.threshold, n.left, n.right) {
                (Some(v), None, None, None, None) if v.is_finite() => {}
                (None, Some(f), Some(t), Some(l), Some(r)) => {
                    if f >= n_features {
                        return Err(Error::validation(format!("node {i} splits on unknown feature {f}")));
                    }
                    if !t.is_finite() {
                        return Err(Error::validation(format!("node {i} has a non-finite threshold")));
                    }
                    // Children after their parent rule out cycles.
                    if l <= i || r <= i || l >= self.nodes.len() || r >= self.nodes.len() {
                        return Err(Error::validation(format!("node {i} has invalid children")));
                    }
                }
                _ => return Err(Error::validation(format!("node {i} is neither a leaf nor a split"))),
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbrtModel {
    pub schema_version: u32,
    pub feature_names: Vec<String>,
    pub base_prediction: f64,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub n_trees: usize,
    pub trees: Vec<Tree>,
}

impl GbrtModel {
    pub fn predict_raw(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.feature_names.len() {
            return Err(Error::validation(format!(
                "expected {} features, got {}",
                self.feature_names.len(),
                x.len()
            )));
        }
        Ok(self.base_prediction + self.learning_rate * self.trees.iter().map(|t| t.evaluate(x)).sum::<f64>())
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        self.predict_raw(x).map(|v| v.clamp(0.0, 1.0))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: GbrtModel = serde_json::from_str(text)?;
        if model.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::validation(format!(
                "unsupported model schema version {}",
                model.schema_version
            )));
        }
        if model.trees.len() != model.n_trees {
            return Err(Error::validation("n_trees does not match the tree array"));
        }
        for t in &model.trees {
            t.validate(model.feature_names.len())?;
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

pub fn predict(model: &GbrtModel, features: &[f64]) -> Result<f64> {
    model.predict(features)
}

/// Training rows with a shared feature schema.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub rows: Vec<(Vec<f64>, f64)>,
}

impl Dataset {
    fn validate(&self) -> Result<()> {
        if self.rows.is_empty() {
            return Err(Error::validation("training set is empty"));
        }
        for (i, (x, y)) in self.rows.iter().enumerate() {
            if x.len() != self.feature_names.len() {
                return Err(Error::validation(format!(
                    "row {i} has {} features, schema has {}",
                    x.len(),
                    self.feature_names.len()
                )));
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::validation(format!("row {i} has a non-finite feature")));
            }
            if !(0.0..=1.0).contains(y) {
                return Err(Error::validation(format!("target {y} of row {i} outside [0,1]")));
            }
        }
        Ok(())
    }
}

pub fn train_gbrt(data: &Dataset, params: &GbrtParams, seed: u64) -> Result<GbrtModel> {
    train_gbrt_traced(data, params, seed).map(|(m, _)| m)
}

/// Trains and also returns the mean squared training loss before the first
/// tree and after each tree.
pub fn train_gbrt_traced(data: &Dataset, params: &GbrtParams, seed: u64) -> Result<(GbrtModel, Vec<f64>)> {
    params.validate()?;
    data.validate()?;

    let n = data.rows.len();
    let n_features = data.feature_names.len();
    let targets: Vec<f64> = data.rows.iter().map(|(_, y)| *y).collect();
    let base = targets.iter().sum::<f64>() / n as f64;

    // Row indices sorted by each feature, computed once.
    let sorted: Vec<Vec<usize>> = (0..n_features)
        .map(|f| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| data.rows[a].0[f].total_cmp(&data.rows[b].0[f]));
            idx
        })
        .collect();

    let mut pred = vec![base; n];
    let mut residual: Vec<f64> = targets.iter().map(|y| y - base).collect();
    let mse = |r: &[f64]| r.iter().map(|e| e * e).sum::<f64>() / n as f64;
    let mut trace = vec![mse(&residual)];

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sample_size = ((n as f64) * params.subsample).ceil() as usize;
    let mut trees = Vec::with_capacity(params.n_trees);
    let mut in_sample = vec![true; n];

    for _ in 0..params.n_trees {
        if sample_size < n {
            in_sample.iter_mut().for_each(|b| *b = false);
            for i in index::sample(&mut rng, n, sample_size) {
                in_sample[i] = true;
            }
        }
        let node_sorted: Vec<Vec<usize>> = sorted
            .iter()
            .map(|idx| idx.iter().copied().filter(|&i| in_sample[i]).collect())
            .collect();

        let mut builder = TreeBuilder {
            rows: &data.rows,
            residual: &residual,
            params,
            nodes: Vec::new(),
            scratch: vec![false; n],
        };
        builder.grow(node_sorted, 0);
        let tree = Tree { nodes: builder.nodes };

        for (i, (x, y)) in data.rows.iter().enumerate() {
            pred[i] += params.learning_rate * tree.evaluate(x);
            residual[i] = y - pred[i];
        }
        trace.push(mse(&residual));
        trees.push(tree);
    }

    let model = GbrtModel {
        schema_version: MODEL_SCHEMA_VERSION,
        feature_names: data.feature_names.clone(),
        base_prediction: base,
        learning_rate: params.learning_rate,
        max_depth: params.max_depth,
        n_trees: trees.len(),
        trees,
    };
    Ok((model, trace))
}

struct TreeBuilder<'a> {
    rows: &'a [(Vec<f64>, f64)],
    residual: &'a [f64],
    params: &'a GbrtParams,
    nodes: Vec<Node>,
    /// Marks rows going left during a partition.
    scratch: Vec<bool>,
}

struct Split {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl TreeBuilder<'_> {
    /// Appends the subtree for the rows in `sorted` (one index list per
    /// feature, each ordered by that feature) and returns its root index.
    fn grow(&mut self, sorted: Vec<Vec<usize>>, depth: usize) -> usize {
        let rows = &sorted[0];
        let sum: f64 = rows.iter().map(|&i| self.residual[i]).sum();
        let mean = if rows.is_empty() { 0.0 } else { sum / rows.len() as f64 };

        let id = self.nodes.len();
        self.nodes.push(Node::leaf(mean));
        if depth >= self.params.max_depth || rows.len() < 2 * self.params.min_samples_leaf {
            return id;
        }
        let Some(split) = self.best_split(&sorted, sum) else {
            return id;
        };

        for &i in rows {
            self.scratch[i] = self.rows[i].0[split.feature] <= split.threshold;
        }
        let (left, right): (Vec<_>, Vec<_>) = sorted
            .into_iter()
            .map(|idx| idx.into_iter().partition::<Vec<_>, _>(|&i| self.scratch[i]))
            .unzip();

        let l = self.grow(left, depth + 1);
        let r = self.grow(right, depth + 1);
        self.nodes[id] = Node {
            feature: Some(split.feature),
            threshold: Some(split.threshold),
            left: Some(l),
            right: Some(r),
            leaf: None,
        };
        id
    }

    fn best_split(&self, sorted: &[Vec<usize>], total: f64) -> Option<Split> {
        let n = sorted[0].len();
        let min_leaf = self.params.min_samples_leaf;
        let parent = total * total / n as f64;
        let mut best: Option<Split> = None;
        for (f, idx) in sorted.iter().enumerate() {
            let mut left_sum = 0.0;
            for k in 0..n - 1 {
                left_sum += self.residual[idx[k]];
                let (a, b) = (self.rows[idx[k]].0[f], self.rows[idx[k + 1]].0[f]);
                let n_left = k + 1;
                if a == b || n_left < min_leaf || n - n_left < min_leaf {
                    continue;
                }
                let right_sum = total - left_sum;
                let gain = left_sum * left_sum / n_left as f64 + right_sum * right_sum / (n - n_left) as f64 - parent;
                if gain > 1e-15 && best.as_ref().is_none_or(|s| gain > s.gain) {
                    let mid = a + (b - a) / 2.0;
                    let threshold = if mid < b { mid } else { a };
                    best = Some(Split {
                        feature: f,
                        threshold,
                        gain,
                    });
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dataset(rows: Vec<(Vec<f64>, f64)>) -> Dataset {
        let k = rows.first().map_or(0, |r| r.0.len());
        Dataset {
            feature_names: (0..k).map(|i| format!("f{i}")).collect(),
            rows,
        }
    }

    #[test]
    fn constant_target() {
        let d = dataset((0..20).map(|i| (vec![i as f64, (i * 7 % 5) as f64], 0.25)).collect());
        let m = train_gbrt(&d, &GbrtParams::default(), 1).unwrap();
        for x in [[0.0, 0.0], [3.0, 9.0], [-100.0, 100.0]] {
            assert_eq!(m.predict(&x).unwrap(), 0.25);
        }
    }

    #[test]
    fn perfect_binary_split_follows_shrinkage_series() {
        // Base is 0.475; each group's residual shrinks by (1 - lr) per tree.
        let rows: Vec<_> = (0..10)
            .map(|i| {
                if i % 2 == 0 {
                    (vec![0.0], 0.0)
                } else {
                    (vec![1.0], 0.95)
                }
            })
            .collect();
        let params = GbrtParams {
            n_trees: 60,
            max_depth: 1,
            learning_rate: 0.1,
            ..Default::default()
        };
        let m = train_gbrt(&dataset(rows), &params, 0).unwrap();
        let base = 0.475;
        let decay = (1.0 - params.learning_rate).powi(params.n_trees as i32);
        let expect_hi = 0.95 - decay * (0.95 - base);
        let expect_lo = 0.0 - decay * (0.0 - base);
        assert!((m.predict_raw(&[1.0]).unwrap() - expect_hi).abs() < 1e-12);
        assert!((m.predict_raw(&[0.0]).unwrap() - expect_lo).abs() < 1e-12);
        assert!((m.predict(&[1.0]).unwrap() - 0.95).abs() < 0.01);
        assert!(m.predict(&[0.0]).unwrap() < 0.01);
    }

    #[test]
    fn rejects_bad_targets_and_empty_data() {
        let d = dataset(vec![(vec![0.0], 0.5), (vec![1.0], 1.2)]);
        assert!(matches!(
            train_gbrt(&d, &GbrtParams::default(), 0),
            Err(Error::Validation(_))
        ));
        assert!(train_gbrt(&Dataset::default(), &GbrtParams::default(), 0).is_err());
    }

    #[test]
    fn clipping_and_empty_ensemble() {
        let mut m = GbrtModel {
            schema_version: MODEL_SCHEMA_VERSION,
            feature_names: vec!["f".into()],
            base_prediction: -0.1,
            learning_rate: 0.1,
            max_depth: 3,
            n_trees: 0,
            trees: vec![],
        };
        assert_eq!(m.predict(&[0.0]).unwrap(), 0.0);
        m.base_prediction = 0.5;
        assert_eq!(m.predict(&[0.0]).unwrap(), 0.5);
        m.base_prediction = 1.7;
        assert_eq!(m.predict(&[0.0]).unwrap(), 1.0);
        assert!(m.predict(&[0.0, 1.0]).is_err());
    }

    fn noisy_dataset(n: usize) -> Dataset {
        let mut state = 12345u64;
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        dataset(
            (0..n)
                .map(|_| {
                    let x = [next(), next(), next()];
                    let y = (0.6 * x[0] + 0.3 * x[1] * x[2] + 0.1 * next()).clamp(0.0, 1.0);
                    (x.to_vec(), y)
                })
                .collect(),
        )
    }

    #[test]
    fn training_loss_never_increases() {
        let (_, trace) = train_gbrt_traced(&noisy_dataset(300), &GbrtParams::default(), 3).unwrap();
        assert_eq!(trace.len(), 101);
        for w in trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-15, "{} -> {}", w[0], w[1]);
        }
        assert!(trace.last().unwrap() < &(trace[0] * 0.5));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let d = noisy_dataset(200);
        let params = GbrtParams {
            subsample: 0.7,
            ..Default::default()
        };
        let m = train_gbrt(&d, &params, 9).unwrap();
        let back = GbrtModel::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        for (x, _) in &d.rows {
            assert_eq!(back.predict(x).unwrap().to_bits(), m.predict(x).unwrap().to_bits());
        }
        // Same seed, same model.
        assert_eq!(train_gbrt(&d, &params, 9).unwrap(), m);
    }

    #[test]
    fn malformed_model_rejected() {
        let m = train_gbrt(
            &noisy_dataset(50),
            &GbrtParams {
                n_trees: 2,
                ..Default::default()
            },
            0,
        )
        .unwrap();
        let mut bad = m.clone();
        bad.trees[0].nodes[0].feature = Some(99);
        bad.trees[0].nodes[0].leaf = None;
        assert!(GbrtModel::from_json(&bad.to_json()).is_err());
        let mut cyclic = m.clone();
        if cyclic.trees[0].nodes[0].left.is_some() {
            cyclic.trees[0].nodes[0].left = Some(0);
            assert!(GbrtModel::from_json(&cyclic.to_json()).is_err());
        }
        assert!(GbrtModel::from_json("{\"schema_version\": 1}").is_err());
    }
}
