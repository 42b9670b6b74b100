//! Plain-text model bundle on disk. A bundle directory holds a manifest,
//! the training traces as a regular dataset, prototype references into it,
//! and one parameter file per fitted baseline. Every float is written with
//! Rust's shortest round-trip formatting, so loading reproduces the fitted
//! parameters bit for bit.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{load_dataset, save_dataset};
use crate::error::{Error, Result};
use crate::model::{AnomalyLabel, Dataset, DatasetMeta, WindowSpec};
use crate::similarity::CostKind;

use super::forest::RandomForest;
use super::hsa::HsaModel;
use super::logreg::{LogisticRegression, N_FEATURES};
use super::naive_bayes::GaussianNb;
use super::tree::{DecisionTree, TreeNode};
use super::Method;

pub const MANIFEST_FILE: &str = "manifest.toml";
pub const TRAIN_DIR: &str = "train";
pub const PROTOTYPES_FILE: &str = "prototypes.csv";
const FORMAT_VERSION: u32 = 1;

/// Everything `train` produces and `serve`/`diagnose` consume.
#[derive(Debug, Clone)]
pub struct TrainedBundle {
    pub hsa: HsaModel,
    pub window: WindowSpec,
    /// Window rates are resampled onto this length before DTW; the median
    /// training-trace length.
    pub expected_len: usize,
    pub lr: Option<LogisticRegression>,
    pub nb: Option<GaussianNb>,
    pub dt: Option<DecisionTree>,
    pub rf: Option<RandomForest>,
}

impl TrainedBundle {
    pub fn methods(&self) -> Vec<Method> {
        let mut methods = Vec::new();
        if self.lr.is_some() {
            methods.push(Method::Lr);
        }
        if self.nb.is_some() {
            methods.push(Method::Nb);
        }
        if self.dt.is_some() {
            methods.push(Method::Dt);
        }
        if self.rf.is_some() {
            methods.push(Method::Rf);
        }
        methods.push(Method::Hsa);
        methods
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    cost: String,
    band: usize,
    k_neighbors: usize,
    window_w: usize,
    window_stride: usize,
    expected_len: usize,
    methods: Vec<String>,
}

pub fn save_bundle(bundle: &TrainedBundle, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        cost: bundle.hsa.cost.as_str().to_string(),
        band: bundle.hsa.band,
        k_neighbors: bundle.hsa.k_neighbors,
        window_w: bundle.window.w,
        window_stride: bundle.window.stride,
        expected_len: bundle.expected_len,
        methods: bundle
            .methods()
            .iter()
            .map(|m| m.as_str().to_string())
            .collect(),
    };
    let text = toml::to_string_pretty(&manifest)
        .map_err(|e| Error::Bundle(format!("manifest encode: {e}")))?;
    write_file(&dir.join(MANIFEST_FILE), &text)?;

    let train = Dataset {
        traces: bundle.hsa.traces.clone(),
        metadata: DatasetMeta::default(),
    };
    save_dataset(&train, &dir.join(TRAIN_DIR))?;

    let mut prototypes = String::from("workload_id,trace_id\n");
    for (workload, seq) in &bundle.hsa.prototypes {
        prototypes.push_str(&format!("{workload},{}\n", seq.trace_id));
    }
    write_file(&dir.join(PROTOTYPES_FILE), &prototypes)?;

    if let Some(lr) = &bundle.lr {
        write_file(&dir.join("lr.txt"), &encode_lr(lr))?;
    }
    if let Some(nb) = &bundle.nb {
        write_file(&dir.join("nb.txt"), &encode_nb(nb))?;
    }
    if let Some(dt) = &bundle.dt {
        write_file(&dir.join("dt.txt"), &encode_tree(&dt.root))?;
    }
    if let Some(rf) = &bundle.rf {
        write_file(&dir.join("rf.txt"), &encode_forest(rf))?;
    }
    Ok(())
}

pub fn load_bundle(dir: &Path) -> Result<TrainedBundle> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: Manifest =
        toml::from_str(&text).map_err(|e| Error::Bundle(format!("manifest decode: {e}")))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::Bundle(format!(
            "unsupported bundle format version {} (this build reads {FORMAT_VERSION})",
            manifest.format_version
        )));
    }

    let train = load_dataset(&dir.join(TRAIN_DIR))?;
    let proto_path = dir.join(PROTOTYPES_FILE);
    let proto_text = fs::read_to_string(&proto_path).map_err(|e| Error::io(&proto_path, e))?;
    let mut prototypes = BTreeMap::new();
    for (i, line) in proto_text.lines().enumerate() {
        if i == 0 {
            if line != "workload_id,trace_id" {
                return Err(Error::Bundle(format!("bad prototypes header {line:?}")));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let (workload, trace_id) = line
            .split_once(',')
            .ok_or_else(|| Error::Bundle(format!("bad prototypes row {line:?}")))?;
        let trace = train
            .traces
            .iter()
            .find(|t| t.trace_id() == trace_id)
            .ok_or_else(|| {
                Error::Bundle(format!("prototype {trace_id:?} not in the training set"))
            })?;
        prototypes.insert(workload.to_string(), trace.sequence.clone());
    }
    for trace in &train.traces {
        if !prototypes.contains_key(&trace.workload_id) {
            return Err(Error::Bundle(format!(
                "no prototype recorded for workload {:?}",
                trace.workload_id
            )));
        }
    }

    let hsa = HsaModel {
        traces: train.traces,
        prototypes,
        cost: CostKind::parse(&manifest.cost)?,
        band: manifest.band,
        k_neighbors: manifest.k_neighbors,
    };
    let methods = manifest
        .methods
        .iter()
        .map(|m| Method::parse(m))
        .collect::<Result<Vec<_>>>()?;

    let mut bundle = TrainedBundle {
        hsa,
        window: WindowSpec::new(manifest.window_w, manifest.window_stride)?,
        expected_len: manifest.expected_len,
        lr: None,
        nb: None,
        dt: None,
        rf: None,
    };
    for method in methods {
        match method {
            Method::Lr => bundle.lr = Some(decode_lr(&read_file(&dir.join("lr.txt"))?)?),
            Method::Nb => bundle.nb = Some(decode_nb(&read_file(&dir.join("nb.txt"))?)?),
            Method::Dt => {
                let text = read_file(&dir.join("dt.txt"))?;
                let mut lines = text.lines().peekable();
                let root = decode_tree(&mut lines)?;
                expect_end(&mut lines)?;
                bundle.dt = Some(DecisionTree { root });
            }
            Method::Rf => bundle.rf = Some(decode_forest(&read_file(&dir.join("rf.txt"))?)?),
            Method::Hsa => {}
        }
    }
    Ok(bundle)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn push_row(out: &mut String, tag: &str, values: &[f64]) {
    out.push_str(tag);
    for v in values {
        out.push(' ');
        out.push_str(&format!("{v}"));
    }
    out.push('\n');
}

fn encode_lr(lr: &LogisticRegression) -> String {
    let mut out = String::new();
    push_row(&mut out, "means", &lr.means);
    push_row(&mut out, "sds", &lr.sds);
    for (c, row) in lr.weights.iter().enumerate() {
        push_row(&mut out, &format!("weights{c}"), row);
    }
    push_row(&mut out, "bias", &lr.bias);
    out
}

fn decode_lr(text: &str) -> Result<LogisticRegression> {
    let mut rows: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for line in text.lines() {
        let mut parts = line.split_whitespace();
        let tag = parts
            .next()
            .ok_or_else(|| Error::Bundle("empty line in lr.txt".into()))?;
        let values = parts.map(parse_f64).collect::<Result<Vec<f64>>>()?;
        rows.insert(tag.to_string(), values);
    }
    let mut weights = [[0.0; N_FEATURES]; 3];
    for (c, row) in weights.iter_mut().enumerate() {
        *row = take_row(&mut rows, &format!("weights{c}"))?;
    }
    let bias_row = take_row::<3>(&mut rows, "bias")?;
    Ok(LogisticRegression {
        means: take_row(&mut rows, "means")?,
        sds: take_row(&mut rows, "sds")?,
        weights,
        bias: bias_row,
    })
}

fn encode_nb(nb: &GaussianNb) -> String {
    let mut out = String::new();
    let present: Vec<f64> = nb
        .present
        .iter()
        .map(|&p| if p { 1.0 } else { 0.0 })
        .collect();
    push_row(&mut out, "present", &present);
    push_row(&mut out, "log_priors", &nb.log_priors);
    for (c, row) in nb.means.iter().enumerate() {
        push_row(&mut out, &format!("means{c}"), row);
    }
    for (c, row) in nb.vars.iter().enumerate() {
        push_row(&mut out, &format!("vars{c}"), row);
    }
    out
}

fn decode_nb(text: &str) -> Result<GaussianNb> {
    let mut rows: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for line in text.lines() {
        let mut parts = line.split_whitespace();
        let tag = parts
            .next()
            .ok_or_else(|| Error::Bundle("empty line in nb.txt".into()))?;
        rows.insert(
            tag.to_string(),
            parts.map(parse_f64).collect::<Result<Vec<f64>>>()?,
        );
    }
    let present_row = take_row::<3>(&mut rows, "present")?;
    let mut means = [[0.0; N_FEATURES]; 3];
    let mut vars = [[0.0; N_FEATURES]; 3];
    for c in 0..3 {
        means[c] = take_row(&mut rows, &format!("means{c}"))?;
        vars[c] = take_row(&mut rows, &format!("vars{c}"))?;
    }
    let mut present = [false; 3];
    for c in 0..3 {
        present[c] = present_row[c] != 0.0;
    }
    Ok(GaussianNb {
        log_priors: take_row(&mut rows, "log_priors")?,
        means,
        vars,
        present,
    })
}

fn take_row<const N: usize>(rows: &mut BTreeMap<String, Vec<f64>>, tag: &str) -> Result<[f64; N]> {
    let row = rows
        .remove(tag)
        .ok_or_else(|| Error::Bundle(format!("missing row {tag:?}")))?;
    <[f64; N]>::try_from(row)
        .map_err(|v| Error::Bundle(format!("row {tag:?} has {} values, expected {N}", v.len())))
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::Bundle(format!("bad float {s:?}")))
}

/// Preorder, one node per line: `split <feature> <threshold>` or
/// `leaf <label>`.
fn encode_tree(node: &TreeNode) -> String {
    let mut out = String::new();
    encode_node(node, &mut out);
    out
}

fn encode_node(node: &TreeNode, out: &mut String) {
    match node {
        TreeNode::Leaf(label) => out.push_str(&format!("leaf {}\n", label.as_str())),
        TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            out.push_str(&format!("split {feature} {threshold}\n"));
            encode_node(left, out);
            encode_node(right, out);
        }
    }
}

fn decode_tree<'a, I>(lines: &mut std::iter::Peekable<I>) -> Result<TreeNode>
where
    I: Iterator<Item = &'a str>,
{
    let line = lines
        .next()
        .ok_or_else(|| Error::Bundle("truncated tree".into()))?;
    let mut parts = line.split_whitespace();
    match parts.next() {
        Some("leaf") => {
            let label = parts
                .next()
                .ok_or_else(|| Error::Bundle(format!("bad leaf line {line:?}")))?;
            Ok(TreeNode::Leaf(AnomalyLabel::parse(label)?))
        }
        Some("split") => {
            let feature: usize = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Bundle(format!("bad split line {line:?}")))?;
            if feature >= N_FEATURES {
                return Err(Error::Bundle(format!(
                    "feature index {feature} out of range"
                )));
            }
            let threshold = parse_f64(
                parts
                    .next()
                    .ok_or_else(|| Error::Bundle(format!("bad split line {line:?}")))?,
            )?;
            let left = decode_tree(lines)?;
            let right = decode_tree(lines)?;
            Ok(TreeNode::Split {
                feature,
                threshold,
                left: Box::new(left),
                right: Box::new(right),
            })
        }
        _ => Err(Error::Bundle(format!("bad tree line {line:?}"))),
    }
}

fn expect_end<'a, I>(lines: &mut std::iter::Peekable<I>) -> Result<()>
where
    I: Iterator<Item = &'a str>,
{
    match lines.peek() {
        None => Ok(()),
        Some(line) => Err(Error::Bundle(format!("trailing tree data {line:?}"))),
    }
}

fn encode_forest(rf: &RandomForest) -> String {
    let mut out = format!("trees {}\n", rf.trees.len());
    for tree in &rf.trees {
        encode_node(&tree.root, &mut out);
    }
    out
}

fn decode_forest(text: &str) -> Result<RandomForest> {
    let mut lines = text.lines().peekable();
    let header = lines
        .next()
        .ok_or_else(|| Error::Bundle("empty rf.txt".into()))?;
    let count: usize = header
        .strip_prefix("trees ")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Bundle(format!("bad forest header {header:?}")))?;
    let mut trees = Vec::with_capacity(count);
    for _ in 0..count {
        trees.push(DecisionTree {
            root: decode_tree(&mut lines)?,
        });
    }
    expect_end(&mut lines)?;
    Ok(RandomForest { trees })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{fit_baseline, fit_hsa, BaselineKind, BaselineModel};
    use crate::synth::{generate_dataset, WorkloadProfile};
    use tempfile::tempdir;

    fn toy_bundle() -> TrainedBundle {
        let profiles = vec![WorkloadProfile {
            workload_id: "alpha".into(),
            base_rate: 80.0,
            noise_sd: 2.0,
            n_samples: 24,
            sample_interval: 0.5,
            phase_amplitude: 0.1,
            phase_period: 12.0,
        }];
        let dataset = generate_dataset(&profiles, 4, 5).unwrap();
        let hsa = fit_hsa(dataset.traces.clone(), CostKind::Squared, 5, 1).unwrap();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for trace in &hsa.traces {
            xs.push(
                crate::classify::features_for(
                    trace,
                    &hsa,
                    WindowSpec::default(),
                    hsa.cost,
                    hsa.band,
                )
                .unwrap(),
            );
            ys.push(trace.label);
        }
        let unwrap_lr = |m: BaselineModel| match m {
            BaselineModel::LogisticRegressionSgd(lr) => lr,
            _ => unreachable!(),
        };
        let unwrap_nb = |m: BaselineModel| match m {
            BaselineModel::GaussianNaiveBayes(nb) => nb,
            _ => unreachable!(),
        };
        let unwrap_dt = |m: BaselineModel| match m {
            BaselineModel::DecisionTree(dt) => dt,
            _ => unreachable!(),
        };
        let unwrap_rf = |m: BaselineModel| match m {
            BaselineModel::RandomForest(rf) => rf,
            _ => unreachable!(),
        };
        TrainedBundle {
            lr: Some(unwrap_lr(
                fit_baseline(BaselineKind::LogisticRegressionSgd, &xs, &ys, 3).unwrap(),
            )),
            nb: Some(unwrap_nb(
                fit_baseline(BaselineKind::GaussianNaiveBayes, &xs, &ys, 3).unwrap(),
            )),
            dt: Some(unwrap_dt(
                fit_baseline(BaselineKind::DecisionTree, &xs, &ys, 3).unwrap(),
            )),
            rf: Some(unwrap_rf(
                fit_baseline(BaselineKind::RandomForest, &xs, &ys, 3).unwrap(),
            )),
            window: WindowSpec::default(),
            expected_len: 24,
            hsa,
        }
    }

    #[test]
    fn parameters_round_trip_bit_for_bit() {
        let bundle = toy_bundle();
        let dir = tempdir().unwrap();
        save_bundle(&bundle, dir.path()).unwrap();
        let loaded = load_bundle(dir.path()).unwrap();

        assert_eq!(loaded.lr, bundle.lr);
        assert_eq!(loaded.nb, bundle.nb);
        assert_eq!(loaded.dt, bundle.dt);
        assert_eq!(loaded.rf, bundle.rf);
        assert_eq!(loaded.window, bundle.window);
        assert_eq!(loaded.expected_len, bundle.expected_len);
        assert_eq!(loaded.hsa.cost, bundle.hsa.cost);
        assert_eq!(loaded.hsa.band, bundle.hsa.band);
        assert_eq!(loaded.hsa.k_neighbors, bundle.hsa.k_neighbors);
        assert_eq!(loaded.hsa.traces.len(), bundle.hsa.traces.len());
        let ids: Vec<&str> = loaded
            .hsa
            .prototypes
            .values()
            .map(|s| s.trace_id.as_str())
            .collect();
        let expected: Vec<&str> = bundle
            .hsa
            .prototypes
            .values()
            .map(|s| s.trace_id.as_str())
            .collect();
        assert_eq!(ids, expected);
    }

    #[test]
    fn sequence_only_bundle_skips_baseline_files() {
        let mut bundle = toy_bundle();
        bundle.lr = None;
        bundle.nb = None;
        bundle.dt = None;
        bundle.rf = None;
        let dir = tempdir().unwrap();
        save_bundle(&bundle, dir.path()).unwrap();
        assert!(!dir.path().join("lr.txt").exists());
        let loaded = load_bundle(dir.path()).unwrap();
        assert!(loaded.lr.is_none() && loaded.rf.is_none());
        assert_eq!(loaded.methods(), vec![Method::Hsa]);
    }

    #[test]
    fn missing_prototype_reference_is_rejected() {
        let bundle = toy_bundle();
        let dir = tempdir().unwrap();
        save_bundle(&bundle, dir.path()).unwrap();
        fs::write(
            dir.path().join(PROTOTYPES_FILE),
            "workload_id,trace_id\nalpha,ghost-trace\n",
        )
        .unwrap();
        match load_bundle(dir.path()) {
            Err(Error::Bundle(msg)) => assert!(msg.contains("ghost-trace")),
            other => panic!("expected Bundle error, got {other:?}"),
        }
    }

    #[test]
    fn future_format_version_is_rejected() {
        let bundle = toy_bundle();
        let dir = tempdir().unwrap();
        save_bundle(&bundle, dir.path()).unwrap();
        let path = dir.path().join(MANIFEST_FILE);
        let text = fs::read_to_string(&path)
            .unwrap()
            .replace("format_version = 1", "format_version = 99");
        fs::write(&path, text).unwrap();
        assert!(matches!(load_bundle(dir.path()), Err(Error::Bundle(_))));
    }

    #[test]
    fn saved_bundle_is_byte_deterministic() {
        let bundle = toy_bundle();
        let a = tempdir().unwrap();
        let b = tempdir().unwrap();
        save_bundle(&bundle, a.path()).unwrap();
        save_bundle(&bundle, b.path()).unwrap();
        for name in [
            MANIFEST_FILE,
            PROTOTYPES_FILE,
            "lr.txt",
            "nb.txt",
            "dt.txt",
            "rf.txt",
        ] {
            let left = fs::read(a.path().join(name)).unwrap();
            let right = fs::read(b.path().join(name)).unwrap();
            assert_eq!(left, right, "{name} differs");
        }
    }
}
