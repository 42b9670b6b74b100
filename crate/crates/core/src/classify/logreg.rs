//! Multinomial logistic regression trained by per-sample stochastic gradient
//! descent on the cross-entropy loss. Inputs are z-scored with moments frozen
//! from the training data; this is the only baseline that standardizes.

use rand::seq::SliceRandom;

use crate::model::AnomalyLabel;
use crate::seed;

pub const N_FEATURES: usize = 7;
const LEARNING_RATE: f64 = 0.01;
const EPOCHS: usize = 200;
/// Features with essentially no spread divide by this instead of zero.
const SD_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticRegression {
    pub means: [f64; N_FEATURES],
    pub sds: [f64; N_FEATURES],
    /// One weight row per class, [`AnomalyLabel::index`] order.
    pub weights: [[f64; N_FEATURES]; 3],
    pub bias: [f64; 3],
}

impl LogisticRegression {
    pub fn fit(features: &[[f64; N_FEATURES]], labels: &[AnomalyLabel], seed: u64) -> Self {
        assert_eq!(features.len(), labels.len());
        assert!(!features.is_empty());

        let (means, sds) = moments(features);
        let standardized: Vec<[f64; N_FEATURES]> = features
            .iter()
            .map(|x| standardize(x, &means, &sds))
            .collect();

        let mut weights = [[0.0; N_FEATURES]; 3];
        let mut bias = [0.0; 3];
        let mut order: Vec<usize> = (0..features.len()).collect();
        let mut rng = seed::rng(seed, "logreg-shuffle");
        for _ in 0..EPOCHS {
            order.shuffle(&mut rng);
            for &i in &order {
                let x = &standardized[i];
                let p = softmax(&scores(&weights, &bias, x));
                let y = labels[i].index();
                for c in 0..3 {
                    let err = p[c] - if c == y { 1.0 } else { 0.0 };
                    for f in 0..N_FEATURES {
                        weights[c][f] -= LEARNING_RATE * err * x[f];
                    }
                    bias[c] -= LEARNING_RATE * err;
                }
            }
        }
        LogisticRegression {
            means,
            sds,
            weights,
            bias,
        }
    }

    pub fn predict(&self, x: &[f64; N_FEATURES]) -> AnomalyLabel {
        let z = standardize(x, &self.means, &self.sds);
        let s = scores(&self.weights, &self.bias, &z);
        let mut best = 0;
        for c in 1..3 {
            if s[c] > s[best] {
                best = c;
            }
        }
        AnomalyLabel::ALL[best]
    }
}

fn moments(features: &[[f64; N_FEATURES]]) -> ([f64; N_FEATURES], [f64; N_FEATURES]) {
    let n = features.len() as f64;
    let mut means = [0.0; N_FEATURES];
    for x in features {
        for f in 0..N_FEATURES {
            means[f] += x[f] / n;
        }
    }
    let mut sds = [0.0; N_FEATURES];
    for x in features {
        for f in 0..N_FEATURES {
            sds[f] += (x[f] - means[f]).powi(2) / n;
        }
    }
    for sd in &mut sds {
        *sd = sd.sqrt().max(SD_FLOOR);
    }
    (means, sds)
}

fn standardize(
    x: &[f64; N_FEATURES],
    means: &[f64; N_FEATURES],
    sds: &[f64; N_FEATURES],
) -> [f64; N_FEATURES] {
    let mut z = [0.0; N_FEATURES];
    for f in 0..N_FEATURES {
        z[f] = (x[f] - means[f]) / sds[f];
    }
    z
}

fn scores(weights: &[[f64; N_FEATURES]; 3], bias: &[f64; 3], x: &[f64; N_FEATURES]) -> [f64; 3] {
    let mut s = *bias;
    for c in 0..3 {
        for f in 0..N_FEATURES {
            s[c] += weights[c][f] * x[f];
        }
    }
    s
}

fn softmax(s: &[f64; 3]) -> [f64; 3] {
    let max = s[0].max(s[1]).max(s[2]);
    let mut e = [0.0; 3];
    let mut sum = 0.0;
    for (ec, sc) in e.iter_mut().zip(s) {
        *ec = (sc - max).exp();
        sum += *ec;
    }
    for ec in &mut e {
        *ec /= sum;
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use AnomalyLabel::{MemoryLeak, Normal, Shutdown};

    fn vec7(a: f64, b: f64) -> [f64; N_FEATURES] {
        [a, b, 0.0, 0.0, 0.0, 0.0, 0.0]
    }

    #[test]
    fn separable_toy_set_is_learned_perfectly() {
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for i in 0..10 {
            let jitter = i as f64 * 0.01;
            features.push(vec7(1.0 + jitter, 0.0));
            labels.push(Normal);
            features.push(vec7(-1.0 - jitter, 1.0));
            labels.push(MemoryLeak);
            features.push(vec7(0.0, -2.0 + jitter));
            labels.push(Shutdown);
        }
        let model = LogisticRegression::fit(&features, &labels, 42);
        let correct = features
            .iter()
            .zip(&labels)
            .filter(|(x, y)| model.predict(x) == **y)
            .count();
        assert_eq!(correct, features.len());
    }

    #[test]
    fn same_seed_same_parameters() {
        let features = vec![vec7(1.0, 2.0), vec7(-1.0, 0.5), vec7(0.3, -1.0)];
        let labels = vec![Normal, MemoryLeak, Shutdown];
        let a = LogisticRegression::fit(&features, &labels, 7);
        let b = LogisticRegression::fit(&features, &labels, 7);
        assert_eq!(a, b);
        let c = LogisticRegression::fit(&features, &labels, 8);
        assert_ne!(a, c);
    }

    #[test]
    fn constant_feature_survives_standardization() {
        // Feature 2 is constant; the sd floor keeps z finite.
        let features = vec![vec7(1.0, 5.0), vec7(-1.0, 5.0)];
        let labels = vec![Normal, MemoryLeak];
        let model = LogisticRegression::fit(&features, &labels, 1);
        assert_eq!(model.predict(&vec7(1.0, 5.0)), Normal);
        assert_eq!(model.predict(&vec7(-1.0, 5.0)), MemoryLeak);
    }
}
