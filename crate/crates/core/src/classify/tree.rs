//! CART decision tree: binary splits on single features chosen by Gini
//! impurity decrease. Thresholds are midpoints between consecutive distinct
//! sorted values, and samples with `x[feature] < threshold` go left.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::model::AnomalyLabel;

use super::logreg::N_FEATURES;

/// Gain must exceed this for a split to be worth keeping.
const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf(AnomalyLabel),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Number of candidate features drawn per split; `None` scans all of them.
    pub mtry: Option<usize>,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: 8,
            min_leaf: 2,
            mtry: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub root: TreeNode,
}

impl DecisionTree {
    pub fn fit(
        features: &[[f64; N_FEATURES]],
        labels: &[AnomalyLabel],
        config: TreeConfig,
    ) -> Self {
        Self::fit_with(features, labels, config, None)
    }

    /// Fits with an optional RNG for per-split feature subsampling; forests
    /// pass one, standalone trees scan every feature.
    pub fn fit_with(
        features: &[[f64; N_FEATURES]],
        labels: &[AnomalyLabel],
        config: TreeConfig,
        mut rng: Option<&mut ChaCha8Rng>,
    ) -> Self {
        assert_eq!(features.len(), labels.len());
        assert!(!features.is_empty());
        let indices: Vec<usize> = (0..features.len()).collect();
        let root = grow(features, labels, &indices, config, 0, &mut rng);
        DecisionTree { root }
    }

    pub fn predict(&self, x: &[f64; N_FEATURES]) -> AnomalyLabel {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf(label) => return *label,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] < *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }
}

fn grow(
    features: &[[f64; N_FEATURES]],
    labels: &[AnomalyLabel],
    indices: &[usize],
    config: TreeConfig,
    depth: usize,
    rng: &mut Option<&mut ChaCha8Rng>,
) -> TreeNode {
    let counts = class_counts(labels, indices);
    if depth >= config.max_depth
        || indices.len() < 2 * config.min_leaf
        || counts.iter().filter(|&&c| c > 0).count() <= 1
    {
        return TreeNode::Leaf(majority(&counts));
    }

    let candidates: Vec<usize> = match (config.mtry, rng.as_deref_mut()) {
        (Some(m), Some(r)) => {
            let mut all: Vec<usize> = (0..N_FEATURES).collect();
            all.shuffle(r);
            all.truncate(m.min(N_FEATURES));
            all.sort_unstable();
            all
        }
        _ => (0..N_FEATURES).collect(),
    };

    let parent_gini = gini(&counts, indices.len());
    let mut best: Option<(f64, usize, f64)> = None;
    for &f in &candidates {
        let mut order: Vec<usize> = indices.to_vec();
        order.sort_by(|&a, &b| features[a][f].total_cmp(&features[b][f]));
        let mut left_counts = [0usize; 3];
        for i in 1..order.len() {
            left_counts[labels[order[i - 1]].index()] += 1;
            let prev = features[order[i - 1]][f];
            let next = features[order[i]][f];
            if prev == next {
                continue;
            }
            if i < config.min_leaf || order.len() - i < config.min_leaf {
                continue;
            }
            let mut right_counts = counts;
            for c in 0..3 {
                right_counts[c] -= left_counts[c];
            }
            let n = indices.len() as f64;
            let weighted = (i as f64 / n) * gini(&left_counts, i)
                + ((order.len() - i) as f64 / n) * gini(&right_counts, order.len() - i);
            let gain = parent_gini - weighted;
            if gain > MIN_GAIN && best.is_none_or(|(g, _, _)| gain > g) {
                best = Some((gain, f, (prev + next) / 2.0));
            }
        }
    }

    let Some((_, feature, threshold)) = best else {
        return TreeNode::Leaf(majority(&counts));
    };
    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
        .iter()
        .partition(|&&i| features[i][feature] < threshold);
    if left_idx.is_empty() || right_idx.is_empty() {
        return TreeNode::Leaf(majority(&counts));
    }
    TreeNode::Split {
        feature,
        threshold,
        left: Box::new(grow(features, labels, &left_idx, config, depth + 1, rng)),
        right: Box::new(grow(features, labels, &right_idx, config, depth + 1, rng)),
    }
}

fn class_counts(labels: &[AnomalyLabel], indices: &[usize]) -> [usize; 3] {
    let mut counts = [0usize; 3];
    for &i in indices {
        counts[labels[i].index()] += 1;
    }
    counts
}

fn gini(counts: &[usize; 3], n: usize) -> f64 {
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

/// Majority class; exact ties go to the lexicographically smallest label name
/// so refits are reproducible.
fn majority(counts: &[usize; 3]) -> AnomalyLabel {
    let mut order: Vec<AnomalyLabel> = AnomalyLabel::ALL.to_vec();
    order.sort_by_key(|l| l.as_str());
    let mut best = order[0];
    for &label in &order[1..] {
        if counts[label.index()] > counts[best.index()] {
            best = label;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use AnomalyLabel::{MemoryLeak, Normal, Shutdown};

    fn vec7(a: f64, b: f64) -> [f64; N_FEATURES] {
        [a, b, 0.0, 0.0, 0.0, 0.0, 0.0]
    }

    #[test]
    fn single_threshold_is_recovered() {
        let features = vec![
            vec7(1.0, 0.0),
            vec7(2.0, 0.0),
            vec7(8.0, 0.0),
            vec7(9.0, 0.0),
        ];
        let labels = vec![Normal, Normal, MemoryLeak, MemoryLeak];
        let tree = DecisionTree::fit(&features, &labels, TreeConfig::default());
        match &tree.root {
            TreeNode::Split {
                feature, threshold, ..
            } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 5.0);
            }
            other => panic!("expected a split, got {other:?}"),
        }
        assert_eq!(tree.predict(&vec7(0.0, 0.0)), Normal);
        assert_eq!(tree.predict(&vec7(10.0, 0.0)), MemoryLeak);
    }

    #[test]
    fn pure_input_is_a_single_leaf() {
        let features = vec![vec7(1.0, 2.0), vec7(3.0, 4.0)];
        let labels = vec![Shutdown, Shutdown];
        let tree = DecisionTree::fit(&features, &labels, TreeConfig::default());
        assert_eq!(tree.root, TreeNode::Leaf(Shutdown));
    }

    #[test]
    fn min_leaf_blocks_isolating_an_outlier() {
        // Splitting off the lone memleak point needs a leaf of size 1, so the
        // perfect threshold at 51.5 is legal only with min_leaf 1.
        let features = vec![
            vec7(1.0, 0.0),
            vec7(2.0, 0.0),
            vec7(3.0, 0.0),
            vec7(100.0, 0.0),
        ];
        let labels = vec![Normal, Normal, Normal, MemoryLeak];
        let loose = TreeConfig {
            min_leaf: 1,
            ..TreeConfig::default()
        };
        let tree = DecisionTree::fit(&features, &labels, loose);
        match &tree.root {
            TreeNode::Split { threshold, .. } => assert_eq!(*threshold, 51.5),
            other => panic!("expected a split, got {other:?}"),
        }

        let strict = TreeConfig {
            min_leaf: 2,
            ..TreeConfig::default()
        };
        let tree = DecisionTree::fit(&features, &labels, strict);
        let thresholds = |node: &TreeNode| {
            let mut out = Vec::new();
            let mut stack = vec![node.clone()];
            while let Some(n) = stack.pop() {
                if let TreeNode::Split {
                    threshold,
                    left,
                    right,
                    ..
                } = n
                {
                    out.push(threshold);
                    stack.push(*left);
                    stack.push(*right);
                }
            }
            out
        };
        assert!(!thresholds(&tree.root).contains(&51.5));
    }

    #[test]
    fn two_feature_grid_needs_two_levels() {
        let features = vec![
            vec7(0.0, 0.0),
            vec7(0.0, 1.0),
            vec7(1.0, 0.0),
            vec7(1.0, 1.0),
        ];
        let labels = vec![Normal, MemoryLeak, MemoryLeak, Shutdown];
        let config = TreeConfig {
            min_leaf: 1,
            ..TreeConfig::default()
        };
        let tree = DecisionTree::fit(&features, &labels, config);
        for (x, y) in features.iter().zip(&labels) {
            assert_eq!(tree.predict(x), *y);
        }
    }

    #[test]
    fn depth_zero_gives_majority_leaf_with_lexicographic_ties() {
        let features = vec![vec7(0.0, 0.0), vec7(1.0, 0.0)];
        let labels = vec![Normal, MemoryLeak];
        let config = TreeConfig {
            max_depth: 0,
            min_leaf: 1,
            mtry: None,
        };
        let tree = DecisionTree::fit(&features, &labels, config);
        // "memleak" sorts before "normal".
        assert_eq!(tree.root, TreeNode::Leaf(MemoryLeak));
    }

    #[test]
    fn refit_is_identical() {
        let features: Vec<[f64; N_FEATURES]> = (0..20)
            .map(|i| vec7((i as f64 * 1.37).sin() * 5.0, (i as f64 * 0.61).cos() * 3.0))
            .collect();
        let labels: Vec<AnomalyLabel> = (0..20).map(|i| AnomalyLabel::ALL[i % 3]).collect();
        let a = DecisionTree::fit(&features, &labels, TreeConfig::default());
        let b = DecisionTree::fit(&features, &labels, TreeConfig::default());
        assert_eq!(a, b);
    }
}
