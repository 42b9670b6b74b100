//! Train/test protocol: repeated stratified splits, one shared split per
//! repeat for every method, reports averaged across repeats.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::features::extract;
use crate::model::{AnomalyLabel, Dataset, LabeledTrace, WindowSpec};
use crate::seed;
use crate::similarity::{default_band, CostKind};

use super::hsa::{fit_hsa, predict_hsa, HsaModel};
use super::metrics::{average_reports, metrics, ConfusionMatrix, EvalReport};
use super::{fit_baseline, Method};

const MAX_SPLIT_ATTEMPTS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub train_fraction: f64,
    pub repeats: usize,
    pub seed: u64,
    /// Methods to score; rows come out in [`Method::ALL`] order regardless.
    pub methods: Vec<Method>,
    pub cost: CostKind,
    /// DTW band; `None` derives one from the median trace length.
    pub band: Option<usize>,
    pub window: WindowSpec,
    pub k_neighbors: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            train_fraction: 0.30,
            repeats: 3,
            seed: 42,
            methods: Method::ALL.to_vec(),
            cost: CostKind::default(),
            band: None,
            window: WindowSpec::default(),
            k_neighbors: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodOutcome {
    pub method: Method,
    pub report: EvalReport,
    /// Per-workload reports, sorted by workload_id. A workload is averaged
    /// over the repeats in which it had test traces.
    pub per_workload: Vec<(String, EvalReport)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutcome {
    /// One row per requested method, [`Method::ALL`] order.
    pub methods: Vec<MethodOutcome>,
    pub band: usize,
    pub repeats: usize,
}

impl EvalOutcome {
    pub fn report_for(&self, method: Method) -> Option<&EvalReport> {
        self.methods
            .iter()
            .find(|m| m.method == method)
            .map(|m| &m.report)
    }
}

/// Median trace length, lower median on even counts. Panics on an empty
/// dataset.
pub fn median_trace_len(dataset: &Dataset) -> usize {
    let mut lens: Vec<usize> = dataset.traces.iter().map(|t| t.sequence.len()).collect();
    lens.sort_unstable();
    lens[(lens.len() - 1) / 2]
}

/// Default warp band for a dataset: the band rule applied to the median
/// trace length.
pub fn dataset_band(dataset: &Dataset) -> usize {
    default_band(median_trace_len(dataset))
}

pub fn evaluate(dataset: &Dataset, config: &EvalConfig) -> Result<EvalOutcome> {
    if !(config.train_fraction > 0.0 && config.train_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "train_fraction must be in (0, 1), got {}",
            config.train_fraction
        )));
    }
    if config.repeats < 1 {
        return Err(Error::InvalidConfig("repeats must be >= 1".into()));
    }
    if config.methods.is_empty() {
        return Err(Error::InvalidConfig("no methods requested".into()));
    }
    if dataset.traces.is_empty() {
        return Err(Error::EmptyInput);
    }

    let band = config.band.unwrap_or_else(|| dataset_band(dataset));
    let requested: Vec<Method> = Method::ALL
        .iter()
        .copied()
        .filter(|m| config.methods.contains(m))
        .collect();
    let wants_baselines = requested.iter().any(|m| *m != Method::Hsa);

    let mut per_repeat: BTreeMap<Method, Vec<EvalReport>> = BTreeMap::new();
    let mut per_workload: BTreeMap<(Method, String), Vec<EvalReport>> = BTreeMap::new();

    for repeat in 0..config.repeats {
        let (train_idx, test_idx) =
            stratified_split(dataset, config.train_fraction, config.seed, repeat)?;
        let train: Vec<LabeledTrace> = train_idx
            .iter()
            .map(|&i| dataset.traces[i].clone())
            .collect();
        // Fitted even when only baselines were requested: its prototypes are
        // the references the feature vectors are computed against.
        let hsa = fit_hsa(train, config.cost, band, config.k_neighbors)?;

        let baselines = if wants_baselines {
            let mut xs = Vec::with_capacity(train_idx.len());
            let mut ys = Vec::with_capacity(train_idx.len());
            for trace in &hsa.traces {
                xs.push(features_for(trace, &hsa, config.window, config.cost, band)?);
                ys.push(trace.label);
            }
            let mut fitted = BTreeMap::new();
            for &method in &requested {
                let Some(kind) = method.baseline_kind() else {
                    continue;
                };
                let fit_seed = seed::derive_indexed(
                    config.seed,
                    &format!("fit/{}", method.as_str()),
                    repeat as u64,
                );
                fitted.insert(method, fit_baseline(kind, &xs, &ys, fit_seed)?);
            }
            fitted
        } else {
            BTreeMap::new()
        };

        let mut global: BTreeMap<Method, ConfusionMatrix> = BTreeMap::new();
        let mut by_workload: BTreeMap<(Method, String), ConfusionMatrix> = BTreeMap::new();
        for &i in &test_idx {
            let trace = &dataset.traces[i];
            let x = if wants_baselines {
                Some(features_for(trace, &hsa, config.window, config.cost, band)?)
            } else {
                None
            };
            for &method in &requested {
                let predicted = match baselines.get(&method) {
                    Some(model) => model.predict(x.as_ref().unwrap()),
                    None => predict_hsa(&hsa, &trace.sequence)?.0,
                };
                global
                    .entry(method)
                    .or_default()
                    .record(trace.label, predicted);
                by_workload
                    .entry((method, trace.workload_id.clone()))
                    .or_default()
                    .record(trace.label, predicted);
            }
        }

        for (&method, cm) in &global {
            per_repeat.entry(method).or_default().push(metrics(cm)?);
        }
        for ((method, workload), cm) in &by_workload {
            per_workload
                .entry((*method, workload.clone()))
                .or_default()
                .push(metrics(cm)?);
        }
    }

    let mut methods = Vec::with_capacity(requested.len());
    for &method in &requested {
        let report = average_reports(&per_repeat[&method])?;
        let mut rows = Vec::new();
        for ((m, workload), reports) in &per_workload {
            if *m == method {
                rows.push((workload.clone(), average_reports(reports)?));
            }
        }
        methods.push(MethodOutcome {
            method,
            report,
            per_workload: rows,
        });
    }
    Ok(EvalOutcome {
        methods,
        band,
        repeats: config.repeats,
    })
}

/// Feature vector of a trace against its workload's healthy prototype.
pub fn features_for(
    trace: &LabeledTrace,
    hsa: &HsaModel,
    window: WindowSpec,
    cost: CostKind,
    band: usize,
) -> Result<[f64; 7]> {
    let prototype = hsa
        .prototypes
        .get(&trace.workload_id)
        .ok_or_else(|| Error::MissingPrototype(trace.workload_id.clone()))?;
    Ok(extract(&trace.sequence, prototype, window, cost, band)?.as_array())
}

/// Per-class random split. Redrawn when a class misses either side or a
/// workload ends up with no healthy training trace, up to a fixed number of
/// attempts.
fn stratified_split(
    dataset: &Dataset,
    fraction: f64,
    seed: u64,
    repeat: usize,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let workloads: BTreeSet<&str> = dataset
        .traces
        .iter()
        .map(|t| t.workload_id.as_str())
        .collect();
    for attempt in 0..MAX_SPLIT_ATTEMPTS {
        let mut rng = seed::rng_indexed(seed, &format!("split/{repeat}"), attempt as u64);
        let mut train = Vec::new();
        let mut test = Vec::new();
        for label in AnomalyLabel::ALL {
            let mut members: Vec<usize> = (0..dataset.traces.len())
                .filter(|&i| dataset.traces[i].label == label)
                .collect();
            if members.is_empty() {
                continue;
            }
            members.shuffle(&mut rng);
            let n = members.len();
            let picked = (fraction * n as f64).round() as usize;
            let n_train = if n == 1 { 1 } else { picked.clamp(1, n - 1) };
            train.extend_from_slice(&members[..n_train]);
            test.extend_from_slice(&members[n_train..]);
        }
        train.sort_unstable();
        test.sort_unstable();
        if split_is_valid(dataset, &workloads, &train, &test) {
            return Ok((train, test));
        }
    }
    Err(Error::SplitFailed(format!(
        "no valid stratified split after {MAX_SPLIT_ATTEMPTS} attempts \
         (a class or a workload's healthy traces cannot cover both sides)"
    )))
}

fn split_is_valid(
    dataset: &Dataset,
    workloads: &BTreeSet<&str>,
    train: &[usize],
    test: &[usize],
) -> bool {
    let labels_of = |idx: &[usize]| -> BTreeSet<AnomalyLabel> {
        idx.iter().map(|&i| dataset.traces[i].label).collect()
    };
    let present: BTreeSet<AnomalyLabel> = dataset.traces.iter().map(|t| t.label).collect();
    if labels_of(train) != present || labels_of(test) != present {
        return false;
    }
    let covered: BTreeSet<&str> = train
        .iter()
        .map(|&i| &dataset.traces[i])
        .filter(|t| t.label == AnomalyLabel::Normal)
        .map(|t| t.workload_id.as_str())
        .collect();
    covered == *workloads
}
