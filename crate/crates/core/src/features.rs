//! Summary features of a candidate heartbeat sequence C measured against a
//! healthy reference sequence Q.
//!
//! Global ratios compare whole-trace totals (completion time, mean rate);
//! local ratios compare sliding-window spans after index-aligning the two
//! sequences by truncation to the shorter length. Truncation rather than
//! resampling keeps a shutdown trace's missing tail visible via
//! `length_ratio`, and keeps a leak's dilated timestamps visible in the time
//! ratios.

use crate::error::{Error, Result};
use crate::model::{resample_rates, HeartbeatSequence, WindowSpec};
use crate::similarity::{dtw, envelope, CostKind};

/// Feature vector of one candidate against one reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    /// Candidate completion time over reference completion time.
    pub global_time_ratio: f64,
    /// Mean over sliding windows of elapsed-time span ratios.
    pub local_time_ratio: f64,
    /// Candidate mean rate over reference mean rate.
    pub global_hb_ratio: f64,
    /// Mean over sliding windows of rate-delta ratios (signed; a falling
    /// candidate against a rising reference yields a negative window).
    pub local_hb_ratio: f64,
    /// Banded DTW distance, candidate rates aligned to the reference length.
    pub dtw_to_ref: f64,
    /// LB_Keogh lower bound under the same alignment, cost, and band.
    pub lb_to_ref: f64,
    /// Candidate length over reference length (samples).
    pub length_ratio: f64,
}

impl FeatureVector {
    pub const NAMES: [&'static str; 7] = [
        "global_time_ratio",
        "local_time_ratio",
        "global_hb_ratio",
        "local_hb_ratio",
        "dtw_to_ref",
        "lb_to_ref",
        "length_ratio",
    ];

    pub fn as_array(&self) -> [f64; 7] {
        [
            self.global_time_ratio,
            self.local_time_ratio,
            self.global_hb_ratio,
            self.local_hb_ratio,
            self.dtw_to_ref,
            self.lb_to_ref,
            self.length_ratio,
        ]
    }
}

/// A windowed mean together with its bookkeeping: how many windows entered
/// the mean and how many were skipped for a vanishing denominator. When every
/// window is skipped the value falls back to 1.0 and `degenerate` is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalRatio {
    pub value: f64,
    pub evaluated: usize,
    pub skipped: usize,
    pub degenerate: bool,
}

/// Denominators smaller than this (in beats/sec) mark a window as carrying no
/// usable rate change.
const RATE_EPS: f64 = 1e-9;

/// Candidate completion time over reference completion time.
pub fn global_time_ratio(c: &HeartbeatSequence, q: &HeartbeatSequence) -> Result<f64> {
    let t_ref = q.last_timestamp();
    if t_ref <= 0.0 {
        return Err(Error::DegenerateReference(
            "reference completes at t = 0".into(),
        ));
    }
    Ok(c.last_timestamp() / t_ref)
}

/// Candidate mean rate over reference mean rate.
pub fn global_hb_ratio(c: &HeartbeatSequence, q: &HeartbeatSequence) -> Result<f64> {
    let mean =
        |s: &HeartbeatSequence| s.points().iter().map(|p| p.rate).sum::<f64>() / s.len() as f64;
    let q_mean = mean(q);
    if q_mean <= 0.0 {
        return Err(Error::DegenerateReference(
            "reference has zero mean rate".into(),
        ));
    }
    Ok(mean(c) / q_mean)
}

/// Mean over sliding windows of (candidate time span) / (reference time
/// span), both sequences truncated to the shorter length.
pub fn local_time_ratio(
    c: &HeartbeatSequence,
    q: &HeartbeatSequence,
    spec: WindowSpec,
) -> Result<LocalRatio> {
    let c_ts: Vec<f64> = c.timestamps().collect();
    let q_ts: Vec<f64> = q.timestamps().collect();
    windowed_ratio(&c_ts, &q_ts, spec, 0.0)
}

/// Mean over sliding windows of (candidate rate delta) / (reference rate
/// delta), truncated likewise. Windows where the reference rate barely moves
/// are skipped.
pub fn local_hb_ratio(
    c: &HeartbeatSequence,
    q: &HeartbeatSequence,
    spec: WindowSpec,
) -> Result<LocalRatio> {
    let c_rates = c.rates();
    let q_rates = q.rates();
    windowed_ratio(&c_rates, &q_rates, spec, RATE_EPS)
}

/// Shared windowed-mean core: ratio of end-minus-start deltas per window,
/// windows with |reference delta| <= min_denom skipped.
fn windowed_ratio(c: &[f64], q: &[f64], spec: WindowSpec, min_denom: f64) -> Result<LocalRatio> {
    let len = c.len().min(q.len());
    if len < spec.w + 1 {
        return Err(Error::TooShort {
            len,
            need: spec.w + 1,
        });
    }
    let mut sum = 0.0;
    let mut evaluated = 0usize;
    let mut skipped = 0usize;
    for start in spec.starts(len) {
        let end = start + spec.w;
        let denom = q[end] - q[start];
        if denom.abs() <= min_denom {
            skipped += 1;
            continue;
        }
        sum += (c[end] - c[start]) / denom;
        evaluated += 1;
    }
    if evaluated == 0 {
        return Ok(LocalRatio {
            value: 1.0,
            evaluated: 0,
            skipped,
            degenerate: true,
        });
    }
    Ok(LocalRatio {
        value: sum / evaluated as f64,
        evaluated,
        skipped,
        degenerate: false,
    })
}

/// Assemble the full feature vector of `c` against reference `q`.
///
/// The similarity features align the candidate's rates to the reference
/// length by linear resampling and share one cost kind and band, so
/// `lb_to_ref <= dtw_to_ref` holds the same way it does in search.
pub fn extract(
    c: &HeartbeatSequence,
    q: &HeartbeatSequence,
    spec: WindowSpec,
    cost: CostKind,
    band: usize,
) -> Result<FeatureVector> {
    let q_rates = q.rates();
    let aligned = resample_rates(&c.rates(), q_rates.len());
    let dtw_to_ref = dtw(&q_rates, &aligned, cost, Some(band))?;
    let lb_to_ref = envelope(&q_rates, band).lb(&aligned, cost)?;
    Ok(FeatureVector {
        global_time_ratio: global_time_ratio(c, q)?,
        local_time_ratio: local_time_ratio(c, q, spec)?.value,
        global_hb_ratio: global_hb_ratio(c, q)?,
        local_hb_ratio: local_hb_ratio(c, q, spec)?.value,
        dtw_to_ref,
        lb_to_ref,
        length_ratio: c.len() as f64 / q.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(points: &[(f64, f64)]) -> HeartbeatSequence {
        HeartbeatSequence::new("t", 0, points.to_vec()).unwrap()
    }

    fn uniform(rates: &[f64]) -> HeartbeatSequence {
        let pts: Vec<(f64, f64)> = rates
            .iter()
            .enumerate()
            .map(|(i, &r)| (i as f64, r))
            .collect();
        seq(&pts)
    }

    #[test]
    fn global_time_ratio_cases() {
        let q = seq(&[(0.0, 1.0), (10.0, 1.0)]);
        let c = seq(&[(0.0, 1.0), (15.0, 1.0)]);
        assert_eq!(global_time_ratio(&c, &q).unwrap(), 1.5);
        assert_eq!(global_time_ratio(&q, &q).unwrap(), 1.0);
        let origin_only = seq(&[(0.0, 1.0)]);
        assert!(matches!(
            global_time_ratio(&c, &origin_only),
            Err(Error::DegenerateReference(_))
        ));
    }

    #[test]
    fn global_hb_ratio_cases() {
        let q = uniform(&[1.0, 1.0, 1.0]);
        let c = uniform(&[2.0, 2.0, 2.0]);
        assert_eq!(global_hb_ratio(&c, &q).unwrap(), 2.0);
        assert_eq!(global_hb_ratio(&q, &q).unwrap(), 1.0);
        let zeros = uniform(&[0.0, 0.0]);
        assert!(matches!(
            global_hb_ratio(&c, &zeros),
            Err(Error::DegenerateReference(_))
        ));
    }

    #[test]
    fn local_time_ratio_hand_example() {
        let q = seq(&[(0.0, 1.0), (1.0, 1.0), (2.0, 1.0), (3.0, 1.0)]);
        let c = seq(&[(0.0, 1.0), (1.0, 1.0), (2.0, 1.0), (5.0, 1.0)]);
        let spec = WindowSpec::new(2, 1).unwrap();
        let r = local_time_ratio(&c, &q, spec).unwrap();
        // Windows [0..2] and [1..3]: spans 2/2 and 4/2.
        assert_eq!(r.value, 1.5);
        assert_eq!(r.evaluated, 2);
        assert_eq!(r.skipped, 0);
    }

    #[test]
    fn local_time_ratio_identity_and_doubling() {
        let q = seq(&[(0.0, 1.0), (1.0, 1.0), (2.0, 1.0), (3.0, 1.0), (4.0, 1.0)]);
        let spec = WindowSpec::new(2, 2).unwrap();
        assert_eq!(local_time_ratio(&q, &q, spec).unwrap().value, 1.0);
        let doubled = seq(&[(0.0, 1.0), (2.0, 1.0), (4.0, 1.0), (6.0, 1.0), (8.0, 1.0)]);
        assert_eq!(local_time_ratio(&doubled, &q, spec).unwrap().value, 2.0);
    }

    #[test]
    fn local_hb_ratio_cases() {
        let q = uniform(&[1.0, 2.0, 4.0, 7.0]);
        let spec = WindowSpec::new(2, 1).unwrap();
        let ident = local_hb_ratio(&q, &q, spec).unwrap();
        assert_eq!(ident.value, 1.0);
        assert!(!ident.degenerate);

        // Candidate deltas exactly 3x the reference deltas per window.
        let c = uniform(&[1.0, 4.0, 10.0, 19.0]);
        assert_eq!(local_hb_ratio(&c, &q, spec).unwrap().value, 3.0);

        // Constant reference: every window skipped.
        let flat = uniform(&[5.0, 5.0, 5.0, 5.0]);
        let r = local_hb_ratio(&c, &flat, spec).unwrap();
        assert_eq!(r.value, 1.0);
        assert!(r.degenerate);
        assert_eq!(r.skipped, 2);
        assert_eq!(r.evaluated, 0);
    }

    #[test]
    fn local_hb_ratio_keeps_sign() {
        let q = uniform(&[1.0, 2.0, 3.0]);
        let falling = uniform(&[3.0, 2.0, 1.0]);
        let spec = WindowSpec::new(2, 1).unwrap();
        assert_eq!(local_hb_ratio(&falling, &q, spec).unwrap().value, -1.0);
    }

    #[test]
    fn too_short_is_rejected() {
        let q = uniform(&[1.0, 2.0]);
        let spec = WindowSpec::new(5, 5).unwrap();
        assert!(matches!(
            local_hb_ratio(&q, &q, spec),
            Err(Error::TooShort { .. })
        ));
    }

    #[test]
    fn extract_identity() {
        let q = uniform(&[3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0]);
        let spec = WindowSpec::new(2, 2).unwrap();
        let f = extract(&q, &q, spec, CostKind::Squared, 3).unwrap();
        assert_eq!(f.as_array(), [1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn extract_scale_and_dilation_response() {
        let q = uniform(&[3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0]);
        let spec = WindowSpec::new(2, 2).unwrap();
        let base = extract(&q, &q, spec, CostKind::Squared, 3).unwrap();
        // Power-of-two factors commute with rounding, so equality is exact.
        for s in [2.0, 0.25, 8.0] {
            let scaled_rates = uniform(&[
                3.0 * s,
                1.0 * s,
                4.0 * s,
                1.0 * s,
                5.0 * s,
                9.0 * s,
                2.0 * s,
                6.0 * s,
            ]);
            let f = extract(&scaled_rates, &q, spec, CostKind::Squared, 3).unwrap();
            assert_eq!(f.global_hb_ratio, s * base.global_hb_ratio);
            assert_eq!(f.global_time_ratio, base.global_time_ratio);

            let dilated: Vec<(f64, f64)> = q
                .points()
                .iter()
                .enumerate()
                .map(|(i, p)| (i as f64 * s, p.rate))
                .collect();
            let f = extract(&seq(&dilated), &q, spec, CostKind::Squared, 3).unwrap();
            assert_eq!(f.global_time_ratio, s * base.global_time_ratio);
            assert_eq!(f.global_hb_ratio, base.global_hb_ratio);
        }
    }

    #[test]
    fn extract_orders_bound_below_distance() {
        let mut rng = crate::seed::rng(23, "feature-bound-test");
        use rand::Rng;
        for _ in 0..100 {
            let n = rng.gen_range(8..40);
            let m = rng.gen_range(8..40);
            let q = uniform(&(0..n).map(|_| rng.gen_range(1.0..50.0)).collect::<Vec<_>>());
            let c = uniform(&(0..m).map(|_| rng.gen_range(1.0..50.0)).collect::<Vec<_>>());
            let f = extract(&c, &q, WindowSpec::new(2, 2).unwrap(), CostKind::Squared, 5).unwrap();
            assert!(f.lb_to_ref <= f.dtw_to_ref + 1e-9);
            assert!(f.dtw_to_ref >= 0.0 && f.lb_to_ref >= 0.0);
        }
    }
}
