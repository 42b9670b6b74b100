//! Sequence classifier: k-nearest-neighbor voting over raw heart-rate series
//! under band-constrained DTW, with envelope pruning. Also owns the healthy
//! per-workload prototype sequences that feature extraction compares against.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{resample_rates, AnomalyLabel, HeartbeatSequence, LabeledTrace};
use crate::similarity::{dtw, knn_search, CostKind, Neighbor};

#[derive(Debug, Clone)]
pub struct HsaModel {
    pub traces: Vec<LabeledTrace>,
    /// Healthy reference per workload, the DTW-medoid of its normal traces.
    pub prototypes: BTreeMap<String, HeartbeatSequence>,
    pub cost: CostKind,
    pub band: usize,
    pub k_neighbors: usize,
}

pub fn fit_hsa(
    train: Vec<LabeledTrace>,
    cost: CostKind,
    band: usize,
    k_neighbors: usize,
) -> Result<HsaModel> {
    if train.is_empty() {
        return Err(Error::EmptyInput);
    }
    if k_neighbors < 1 || k_neighbors.is_multiple_of(2) {
        return Err(Error::InvalidConfig(format!(
            "k_neighbors must be odd and >= 1, got {k_neighbors}"
        )));
    }

    let mut normals: BTreeMap<&str, Vec<&LabeledTrace>> = BTreeMap::new();
    for trace in &train {
        normals.entry(&trace.workload_id).or_default();
        if trace.label == AnomalyLabel::Normal {
            normals
                .get_mut(trace.workload_id.as_str())
                .unwrap()
                .push(trace);
        }
    }

    let mut prototypes = BTreeMap::new();
    for (workload, mut group) in normals {
        if group.is_empty() {
            return Err(Error::NoNormalTraces(workload.to_string()));
        }
        group.sort_by(|a, b| a.trace_id().cmp(b.trace_id()));
        prototypes.insert(workload.to_string(), medoid(&group, cost, band)?.clone());
    }

    Ok(HsaModel {
        traces: train,
        prototypes,
        cost,
        band,
        k_neighbors,
    })
}

/// Member with the smallest summed banded DTW to the rest of the group.
/// `group` must be sorted by trace_id so exact ties keep the first id.
fn medoid<'a>(
    group: &[&'a LabeledTrace],
    cost: CostKind,
    band: usize,
) -> Result<&'a HeartbeatSequence> {
    let mut best: Option<(f64, &LabeledTrace)> = None;
    for &candidate in group {
        let q = candidate.sequence.rates();
        let mut total = 0.0;
        for &other in group {
            if std::ptr::eq(candidate, other) {
                continue;
            }
            let aligned = resample_rates(&other.sequence.rates(), q.len());
            total += dtw(&q, &aligned, cost, Some(band))?;
        }
        match best {
            Some((t, _)) if total >= t => {}
            _ => best = Some((total, candidate)),
        }
    }
    Ok(&best.expect("nonempty group").1.sequence)
}

pub fn predict_hsa(model: &HsaModel, query: &HeartbeatSequence) -> Result<(AnomalyLabel, f64)> {
    let (neighbors, _) = knn_search(
        query,
        &model.traces,
        model.k_neighbors,
        model.cost,
        Some(model.band),
    )?;
    Ok((vote(&neighbors), neighbors[0].distance))
}

/// Majority label among the neighbors; ties fall to the smallest mean
/// distance, then to the lexicographically smallest label name.
fn vote(neighbors: &[Neighbor<'_>]) -> AnomalyLabel {
    let mut count = [0usize; 3];
    let mut dist_sum = [0.0f64; 3];
    for n in neighbors {
        let c = n.trace.label.index();
        count[c] += 1;
        dist_sum[c] += n.distance;
    }
    let mut order: Vec<AnomalyLabel> = AnomalyLabel::ALL.to_vec();
    order.sort_by_key(|l| l.as_str());
    let mut best = None;
    for &label in &order {
        let c = label.index();
        if count[c] == 0 {
            continue;
        }
        let mean = dist_sum[c] / count[c] as f64;
        let better = match best {
            None => true,
            Some((bc, bm, _)) => count[c] > bc || (count[c] == bc && mean < bm),
        };
        if better {
            best = Some((count[c], mean, label));
        }
    }
    best.expect("nonempty neighbor set").2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use rand::Rng;

    fn trace(id: &str, workload: &str, label: AnomalyLabel, rates: &[f64]) -> LabeledTrace {
        let points = rates
            .iter()
            .enumerate()
            .map(|(i, &r)| (i as f64 * 0.5, r))
            .collect();
        let seq = HeartbeatSequence::new(id.to_string(), 0, points).unwrap();
        LabeledTrace::new(seq, workload.to_string(), label).unwrap()
    }

    fn toy_training() -> Vec<LabeledTrace> {
        let mut train = Vec::new();
        for rep in 0..3 {
            let normal: Vec<f64> = (0..16).map(|i| 100.0 + (i as f64 * 0.7).sin()).collect();
            let leak: Vec<f64> = (0..16)
                .map(|i| (100.0 + (i as f64 * 0.7).sin()) * (1.0 - 0.5 * i as f64 / 16.0))
                .collect();
            let mut cut: Vec<f64> = normal.clone();
            for r in cut.iter_mut().skip(8) {
                *r = 0.0;
            }
            train.push(trace(
                &format!("w-normal-{rep:03}"),
                "w",
                AnomalyLabel::Normal,
                &normal,
            ));
            train.push(trace(
                &format!("w-memleak-{rep:03}"),
                "w",
                AnomalyLabel::MemoryLeak,
                &leak,
            ));
            train.push(trace(
                &format!("w-shutdown-{rep:03}"),
                "w",
                AnomalyLabel::Shutdown,
                &cut,
            ));
        }
        train
    }

    #[test]
    fn single_normal_trace_is_its_workloads_prototype() {
        let train = vec![
            trace("a-normal-000", "a", AnomalyLabel::Normal, &[1.0, 2.0, 3.0]),
            trace(
                "a-memleak-000",
                "a",
                AnomalyLabel::MemoryLeak,
                &[1.0, 1.5, 0.5],
            ),
        ];
        let model = fit_hsa(train, CostKind::Squared, 5, 1).unwrap();
        assert_eq!(model.prototypes["a"].trace_id, "a-normal-000");
    }

    #[test]
    fn identical_normal_traces_tie_to_first_id() {
        let train = vec![
            trace("a-normal-001", "a", AnomalyLabel::Normal, &[2.0, 2.0, 2.0]),
            trace("a-normal-000", "a", AnomalyLabel::Normal, &[2.0, 2.0, 2.0]),
        ];
        let model = fit_hsa(train, CostKind::Squared, 5, 1).unwrap();
        assert_eq!(model.prototypes["a"].trace_id, "a-normal-000");
    }

    #[test]
    fn medoid_picks_the_central_trace() {
        // b sits between a and c, so its summed distance is smallest.
        let train = vec![
            trace("a", "w", AnomalyLabel::Normal, &[0.0, 0.0, 0.0, 0.0]),
            trace("b", "w", AnomalyLabel::Normal, &[1.0, 1.0, 1.0, 1.0]),
            trace("c", "w", AnomalyLabel::Normal, &[3.0, 3.0, 3.0, 3.0]),
        ];
        let model = fit_hsa(train, CostKind::Absolute, 5, 1).unwrap();
        assert_eq!(model.prototypes["w"].trace_id, "b");
    }

    #[test]
    fn workload_without_normal_traces_is_rejected() {
        let train = vec![
            trace("a-normal-000", "a", AnomalyLabel::Normal, &[1.0, 2.0]),
            trace("b-memleak-000", "b", AnomalyLabel::MemoryLeak, &[1.0, 0.5]),
        ];
        match fit_hsa(train, CostKind::Squared, 5, 1) {
            Err(Error::NoNormalTraces(w)) => assert_eq!(w, "b"),
            other => panic!("expected NoNormalTraces, got {other:?}"),
        }
    }

    #[test]
    fn even_or_zero_k_is_rejected() {
        let train = vec![trace(
            "a-normal-000",
            "a",
            AnomalyLabel::Normal,
            &[1.0, 2.0],
        )];
        assert!(fit_hsa(train.clone(), CostKind::Squared, 5, 0).is_err());
        assert!(fit_hsa(train, CostKind::Squared, 5, 2).is_err());
    }

    #[test]
    fn training_trace_query_returns_its_own_label_at_zero_distance() {
        let train = toy_training();
        let query = train[4].sequence.clone();
        let expected = train[4].label;
        let model = fit_hsa(train, CostKind::Squared, 5, 1).unwrap();
        let (label, distance) = predict_hsa(&model, &query).unwrap();
        assert_eq!(label, expected);
        assert_eq!(distance, 0.0);
    }

    #[test]
    fn three_neighbor_vote_matches_exhaustive_scan() {
        let model = fit_hsa(toy_training(), CostKind::Squared, 5, 3).unwrap();
        let mut rng = seed::rng(11, "hsa-oracle");
        for _ in 0..40 {
            let sag: f64 = rng.gen_range(0.0..0.6);
            let rates: Vec<f64> = (0..16)
                .map(|i| {
                    (100.0 + (i as f64 * 0.7).sin() + rng.gen_range(-0.5..0.5))
                        * (1.0 - sag * i as f64 / 16.0)
                })
                .collect();
            let points = rates
                .iter()
                .enumerate()
                .map(|(i, &r)| (i as f64 * 0.5, r))
                .collect();
            let query = HeartbeatSequence::new("q".to_string(), 0, points).unwrap();

            // Exhaustive oracle: score every trace, sort, vote the same way.
            let q = query.rates();
            let mut scored: Vec<(f64, &LabeledTrace)> = model
                .traces
                .iter()
                .map(|t| {
                    let aligned = resample_rates(&t.sequence.rates(), q.len());
                    (dtw(&q, &aligned, model.cost, Some(model.band)).unwrap(), t)
                })
                .collect();
            scored.sort_by(|a, b| {
                a.0.total_cmp(&b.0)
                    .then_with(|| a.1.trace_id().cmp(b.1.trace_id()))
            });
            let top: Vec<Neighbor> = scored
                .iter()
                .take(3)
                .map(|&(distance, trace)| Neighbor { trace, distance })
                .collect();

            let (label, distance) = predict_hsa(&model, &query).unwrap();
            assert_eq!(label, vote(&top));
            assert_eq!(distance, top[0].distance);
        }
    }

    #[test]
    fn vote_breaks_count_ties_by_mean_distance() {
        let a = trace("a", "w", AnomalyLabel::Normal, &[1.0, 1.0]);
        let b = trace("b", "w", AnomalyLabel::MemoryLeak, &[2.0, 2.0]);
        let neighbors = vec![
            Neighbor {
                trace: &b,
                distance: 0.5,
            },
            Neighbor {
                trace: &a,
                distance: 1.0,
            },
        ];
        assert_eq!(vote(&neighbors), AnomalyLabel::MemoryLeak);
        // Equal counts and equal means fall back to the label name.
        let neighbors = vec![
            Neighbor {
                trace: &b,
                distance: 1.0,
            },
            Neighbor {
                trace: &a,
                distance: 1.0,
            },
        ];
        assert_eq!(vote(&neighbors), AnomalyLabel::MemoryLeak);
    }
}
