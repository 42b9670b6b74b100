//! Gaussian naive Bayes over the feature vector. Each class keeps a prior and
//! per-feature mean/variance; prediction maximizes the joint log-likelihood.

use crate::model::AnomalyLabel;

use super::logreg::N_FEATURES;

/// Variances below this are clamped so the log-density stays finite.
const VAR_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianNb {
    /// Log prior per class; classes absent from the training set get
    /// `present = false` and are never predicted.
    pub log_priors: [f64; 3],
    pub means: [[f64; N_FEATURES]; 3],
    pub vars: [[f64; N_FEATURES]; 3],
    pub present: [bool; 3],
}

impl GaussianNb {
    pub fn fit(features: &[[f64; N_FEATURES]], labels: &[AnomalyLabel]) -> Self {
        assert_eq!(features.len(), labels.len());
        assert!(!features.is_empty());

        let mut counts = [0usize; 3];
        for label in labels {
            counts[label.index()] += 1;
        }

        let mut means = [[0.0; N_FEATURES]; 3];
        for (x, label) in features.iter().zip(labels) {
            let c = label.index();
            for f in 0..N_FEATURES {
                means[c][f] += x[f] / counts[c] as f64;
            }
        }
        let mut vars = [[0.0; N_FEATURES]; 3];
        for (x, label) in features.iter().zip(labels) {
            let c = label.index();
            for f in 0..N_FEATURES {
                vars[c][f] += (x[f] - means[c][f]).powi(2) / counts[c] as f64;
            }
        }
        for class_vars in &mut vars {
            for v in class_vars.iter_mut() {
                *v = v.max(VAR_FLOOR);
            }
        }

        let n = features.len() as f64;
        let mut log_priors = [f64::NEG_INFINITY; 3];
        let mut present = [false; 3];
        for c in 0..3 {
            if counts[c] > 0 {
                present[c] = true;
                log_priors[c] = (counts[c] as f64 / n).ln();
            }
        }
        GaussianNb {
            log_priors,
            means,
            vars,
            present,
        }
    }

    pub fn predict(&self, x: &[f64; N_FEATURES]) -> AnomalyLabel {
        let mut best: Option<(usize, f64)> = None;
        for c in 0..3 {
            if !self.present[c] {
                continue;
            }
            let mut ll = self.log_priors[c];
            for ((&xf, &v), &mean) in x.iter().zip(&self.vars[c]).zip(&self.means[c]) {
                let d = xf - mean;
                ll -= 0.5 * ((2.0 * std::f64::consts::PI * v).ln() + d * d / v);
            }
            match best {
                Some((_, score)) if ll <= score => {}
                _ => best = Some((c, ll)),
            }
        }
        AnomalyLabel::ALL[best.expect("no class present").0]
    }
}
