//! Classification layer: a sequence matcher over raw heart-rate series plus
//! four from-scratch feature-vector baselines, the repeated-split evaluation
//! protocol, scoring metrics, and a plain-text model bundle format.

pub mod bundle;
pub mod forest;
pub mod hsa;
pub mod logreg;
pub mod metrics;
pub mod naive_bayes;
pub mod protocol;
pub mod tree;

pub use bundle::{load_bundle, save_bundle, TrainedBundle};
pub use hsa::{fit_hsa, predict_hsa, HsaModel};
pub use metrics::{average_reports, metrics, ClassMetrics, ConfusionMatrix, EvalReport};
pub use protocol::{
    dataset_band, evaluate, features_for, median_trace_len, EvalConfig, EvalOutcome, MethodOutcome,
};

use crate::error::{Error, Result};
use crate::model::AnomalyLabel;

/// A scoreable classification method; the order here is the report row order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Lr,
    Nb,
    Dt,
    Rf,
    Hsa,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Lr, Method::Nb, Method::Dt, Method::Rf, Method::Hsa];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Lr => "LR",
            Method::Nb => "NB",
            Method::Dt => "DT",
            Method::Rf => "RF",
            Method::Hsa => "HSA",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lr" => Ok(Method::Lr),
            "nb" => Ok(Method::Nb),
            "dt" => Ok(Method::Dt),
            "rf" => Ok(Method::Rf),
            "hsa" => Ok(Method::Hsa),
            other => Err(Error::InvalidConfig(format!(
                "unknown method {other:?} (expected lr, nb, dt, rf, or hsa)"
            ))),
        }
    }

    /// Parses a comma-separated method list; duplicates collapse and the
    /// result follows the canonical row order.
    pub fn parse_list(s: &str) -> Result<Vec<Method>> {
        let mut requested = Vec::new();
        for part in s.split(',') {
            if part.trim().is_empty() {
                continue;
            }
            let m = Method::parse(part)?;
            if !requested.contains(&m) {
                requested.push(m);
            }
        }
        if requested.is_empty() {
            return Err(Error::InvalidConfig("empty method list".into()));
        }
        requested.sort();
        Ok(requested)
    }

    pub fn baseline_kind(&self) -> Option<BaselineKind> {
        match self {
            Method::Lr => Some(BaselineKind::LogisticRegressionSgd),
            Method::Nb => Some(BaselineKind::GaussianNaiveBayes),
            Method::Dt => Some(BaselineKind::DecisionTree),
            Method::Rf => Some(BaselineKind::RandomForest),
            Method::Hsa => None,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    LogisticRegressionSgd,
    GaussianNaiveBayes,
    DecisionTree,
    RandomForest,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BaselineModel {
    LogisticRegressionSgd(logreg::LogisticRegression),
    GaussianNaiveBayes(naive_bayes::GaussianNb),
    DecisionTree(tree::DecisionTree),
    RandomForest(forest::RandomForest),
}

pub fn fit_baseline(
    kind: BaselineKind,
    features: &[[f64; 7]],
    labels: &[AnomalyLabel],
    seed: u64,
) -> Result<BaselineModel> {
    if features.is_empty() || features.len() != labels.len() {
        return Err(Error::EmptyInput);
    }
    let first = labels[0];
    if labels.iter().all(|&l| l == first) {
        return Err(Error::SingleClass);
    }
    Ok(match kind {
        BaselineKind::LogisticRegressionSgd => BaselineModel::LogisticRegressionSgd(
            logreg::LogisticRegression::fit(features, labels, seed),
        ),
        BaselineKind::GaussianNaiveBayes => {
            BaselineModel::GaussianNaiveBayes(naive_bayes::GaussianNb::fit(features, labels))
        }
        BaselineKind::DecisionTree => BaselineModel::DecisionTree(tree::DecisionTree::fit(
            features,
            labels,
            tree::TreeConfig::default(),
        )),
        BaselineKind::RandomForest => {
            BaselineModel::RandomForest(forest::RandomForest::fit(features, labels, seed))
        }
    })
}

impl BaselineModel {
    pub fn predict(&self, x: &[f64; 7]) -> AnomalyLabel {
        match self {
            BaselineModel::LogisticRegressionSgd(m) => m.predict(x),
            BaselineModel::GaussianNaiveBayes(m) => m.predict(x),
            BaselineModel::DecisionTree(m) => m.predict(x),
            BaselineModel::RandomForest(m) => m.predict(x),
        }
    }
}
