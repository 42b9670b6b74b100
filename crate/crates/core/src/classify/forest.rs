//! Random forest: bagged CART trees with per-split feature subsampling.
//! Prediction is a majority vote over the trees.

use rand::Rng;

use crate::model::AnomalyLabel;
use crate::seed;

use super::logreg::N_FEATURES;
use super::tree::{DecisionTree, TreeConfig};

pub const N_TREES: usize = 50;
/// Features drawn per split, ceil(sqrt(7)).
pub const MTRY: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
}

impl RandomForest {
    pub fn fit(features: &[[f64; N_FEATURES]], labels: &[AnomalyLabel], seed: u64) -> Self {
        assert_eq!(features.len(), labels.len());
        assert!(!features.is_empty());
        let config = TreeConfig {
            mtry: Some(MTRY),
            ..TreeConfig::default()
        };
        let mut trees = Vec::with_capacity(N_TREES);
        for t in 0..N_TREES {
            let mut rng = seed::rng_indexed(seed, "forest-tree", t as u64);
            // Bootstrap sample of the same size, drawn with replacement.
            let mut boot_features = Vec::with_capacity(features.len());
            let mut boot_labels = Vec::with_capacity(labels.len());
            for _ in 0..features.len() {
                let i = rng.gen_range(0..features.len());
                boot_features.push(features[i]);
                boot_labels.push(labels[i]);
            }
            trees.push(DecisionTree::fit_with(
                &boot_features,
                &boot_labels,
                config,
                Some(&mut rng),
            ));
        }
        RandomForest { trees }
    }

    /// Majority vote; exact ties go to the lexicographically smallest label
    /// name, matching the leaf tie rule of the underlying trees.
    pub fn predict(&self, x: &[f64; N_FEATURES]) -> AnomalyLabel {
        let mut votes = [0usize; 3];
        for tree in &self.trees {
            votes[tree.predict(x).index()] += 1;
        }
        let mut order: Vec<AnomalyLabel> = AnomalyLabel::ALL.to_vec();
        order.sort_by_key(|l| l.as_str());
        let mut best = order[0];
        for &label in &order[1..] {
            if votes[label.index()] > votes[best.index()] {
                best = label;
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use AnomalyLabel::{MemoryLeak, Normal, Shutdown};

    fn vec7(a: f64, b: f64) -> [f64; N_FEATURES] {
        [a, b, a * b, 0.0, 0.0, 0.0, 0.0]
    }

    fn clustered() -> (Vec<[f64; N_FEATURES]>, Vec<AnomalyLabel>) {
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for i in 0..8 {
            let jitter = i as f64 * 0.05;
            features.push(vec7(0.0 + jitter, 0.0));
            labels.push(Normal);
            features.push(vec7(10.0 + jitter, 1.0));
            labels.push(MemoryLeak);
            features.push(vec7(-10.0 - jitter, 2.0));
            labels.push(Shutdown);
        }
        (features, labels)
    }

    #[test]
    fn clusters_are_learned() {
        let (features, labels) = clustered();
        let forest = RandomForest::fit(&features, &labels, 42);
        assert_eq!(forest.trees.len(), N_TREES);
        assert_eq!(forest.predict(&vec7(0.1, 0.0)), Normal);
        assert_eq!(forest.predict(&vec7(10.1, 1.0)), MemoryLeak);
        assert_eq!(forest.predict(&vec7(-10.1, 2.0)), Shutdown);
    }

    #[test]
    fn same_seed_same_forest() {
        let (features, labels) = clustered();
        let a = RandomForest::fit(&features, &labels, 9);
        let b = RandomForest::fit(&features, &labels, 9);
        assert_eq!(a, b);
        let c = RandomForest::fit(&features, &labels, 10);
        assert_ne!(a, c);
    }

    #[test]
    fn trees_differ_across_the_ensemble() {
        // Bagging plus feature subsampling should not produce fifty clones.
        let (features, labels) = clustered();
        let forest = RandomForest::fit(&features, &labels, 3);
        let distinct = forest.trees.iter().any(|t| *t != forest.trees[0]);
        assert!(distinct);
    }
}
