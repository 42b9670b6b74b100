//! Canonical data model shared by every other module: heartbeat samples and
//! sequences, anomaly labels, labeled traces, datasets, and window geometry.

use crate::error::{Error, Result};

/// One raw heartbeat record as collected from an instrumented thread.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeartbeatSample {
    pub thread_id: u32,
    /// Milliseconds since trace start.
    pub timestamp_ms: u64,
    /// Beats per second over the flush interval that produced the record.
    pub heart_rate: f64,
}

impl HeartbeatSample {
    pub fn new(thread_id: u32, timestamp_ms: u64, heart_rate: f64) -> Result<Self> {
        if !heart_rate.is_finite() || heart_rate < 0.0 {
            return Err(Error::InvalidSequence(format!(
                "heart_rate must be finite and >= 0, got {heart_rate}"
            )));
        }
        Ok(HeartbeatSample {
            thread_id,
            timestamp_ms,
            heart_rate,
        })
    }
}

/// An ordered heart-rate time series for one thread of one trace.
///
/// Timestamps are seconds since trace start and strictly increasing; the
/// sequence holds at least one point.
#[derive(Debug, Clone, PartialEq)]
pub struct HeartbeatSequence {
    pub trace_id: String,
    pub thread_id: u32,
    points: Vec<SeqPoint>,
}

/// A (timestamp seconds, heart rate) pair inside a sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeqPoint {
    pub t: f64,
    pub rate: f64,
}

impl HeartbeatSequence {
    pub fn new(
        trace_id: impl Into<String>,
        thread_id: u32,
        points: Vec<(f64, f64)>,
    ) -> Result<Self> {
        let trace_id = trace_id.into();
        if points.is_empty() {
            return Err(Error::InvalidSequence(format!(
                "sequence {trace_id:?} has no points"
            )));
        }
        for (i, &(t, rate)) in points.iter().enumerate() {
            if !t.is_finite() || t < 0.0 {
                return Err(Error::InvalidSequence(format!(
                    "sequence {trace_id:?}: timestamp {t} at index {i} is not a finite non-negative number"
                )));
            }
            if !rate.is_finite() || rate < 0.0 {
                return Err(Error::InvalidSequence(format!(
                    "sequence {trace_id:?}: rate {rate} at index {i} is not a finite non-negative number"
                )));
            }
            if i > 0 && points[i - 1].0 >= t {
                return Err(Error::InvalidSequence(format!(
                    "sequence {trace_id:?}: timestamps not strictly increasing at index {i}"
                )));
            }
        }
        Ok(HeartbeatSequence {
            trace_id,
            thread_id,
            points: points
                .into_iter()
                .map(|(t, rate)| SeqPoint { t, rate })
                .collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false // n >= 1 by construction
    }

    pub fn points(&self) -> &[SeqPoint] {
        &self.points
    }

    /// Timestamp of the final point: the sequence's completion time.
    pub fn last_timestamp(&self) -> f64 {
        self.points[self.points.len() - 1].t
    }

    pub fn timestamps(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.t)
    }

    pub fn rates(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.rate).collect()
    }
}

/// The closed label set: healthy, memory leak, premature shutdown.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AnomalyLabel {
    Normal,
    MemoryLeak,
    Shutdown,
}

impl AnomalyLabel {
    pub const ALL: [AnomalyLabel; 3] = [
        AnomalyLabel::Normal,
        AnomalyLabel::MemoryLeak,
        AnomalyLabel::Shutdown,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            AnomalyLabel::Normal => "normal",
            AnomalyLabel::MemoryLeak => "memleak",
            AnomalyLabel::Shutdown => "shutdown",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(AnomalyLabel::Normal),
            "memleak" => Ok(AnomalyLabel::MemoryLeak),
            "shutdown" => Ok(AnomalyLabel::Shutdown),
            other => Err(Error::UnknownLabel(other.to_string())),
        }
    }

    pub fn is_anomaly(&self) -> bool {
        !matches!(self, AnomalyLabel::Normal)
    }

    /// Stable index used by confusion matrices and parameter files.
    pub fn index(&self) -> usize {
        match self {
            AnomalyLabel::Normal => 0,
            AnomalyLabel::MemoryLeak => 1,
            AnomalyLabel::Shutdown => 2,
        }
    }
}

impl std::fmt::Display for AnomalyLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A heartbeat sequence together with the workload it came from and its label:
/// the unit of training and evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTrace {
    pub sequence: HeartbeatSequence,
    pub workload_id: String,
    pub label: AnomalyLabel,
}

impl LabeledTrace {
    pub fn new(
        sequence: HeartbeatSequence,
        workload_id: impl Into<String>,
        label: AnomalyLabel,
    ) -> Result<Self> {
        let workload_id = workload_id.into();
        if workload_id.is_empty() {
            return Err(Error::InvalidSequence(
                "workload_id must be non-empty".into(),
            ));
        }
        Ok(LabeledTrace {
            sequence,
            workload_id,
            label,
        })
    }

    pub fn trace_id(&self) -> &str {
        &self.sequence.trace_id
    }
}

/// How a dataset was produced; persisted alongside the trace files so a run
/// can be reproduced from its output directory alone.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize, Default)]
pub struct DatasetMeta {
    pub seed: Option<u64>,
    pub generator: Option<String>,
    pub per_class_count: Option<usize>,
    pub profiles: Vec<String>,
}

/// A collection of labeled traces with unique trace ids.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub traces: Vec<LabeledTrace>,
    pub metadata: DatasetMeta,
}

impl Dataset {
    pub fn new(traces: Vec<LabeledTrace>, metadata: DatasetMeta) -> Result<Self> {
        let ds = Dataset { traces, metadata };
        ds.check_unique_ids()?;
        Ok(ds)
    }

    pub fn check_unique_ids(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for trace in &self.traces {
            if !seen.insert(trace.trace_id()) {
                return Err(Error::DuplicateTraceId(trace.trace_id().to_string()));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn find(&self, trace_id: &str) -> Option<&LabeledTrace> {
        self.traces.iter().find(|t| t.trace_id() == trace_id)
    }
}

/// Sliding-window geometry: window size `w` and advance `stride`, both in
/// samples. A window anchored at index `i` spans indices `i ..= i + w`, so it
/// covers `w` inter-sample intervals. Over a sequence with `L = n - 1` usable
/// intervals the window count is `k = (L - w) / stride + 1` when `L >= w`,
/// else 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    pub w: usize,
    pub stride: usize,
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec { w: 5, stride: 5 }
    }
}

impl WindowSpec {
    pub fn new(w: usize, stride: usize) -> Result<Self> {
        if w < 1 || stride < 1 {
            return Err(Error::InvalidConfig(format!(
                "window size and stride must both be >= 1 (got w={w}, stride={stride})"
            )));
        }
        Ok(WindowSpec { w, stride })
    }

    /// Number of windows over a sequence of `n_samples` points.
    pub fn window_count(&self, n_samples: usize) -> usize {
        let usable = n_samples.saturating_sub(1);
        if usable < self.w {
            0
        } else {
            (usable - self.w) / self.stride + 1
        }
    }

    /// Anchor indices of every window over a sequence of `n_samples` points.
    pub fn starts(&self, n_samples: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.window_count(n_samples)).map(move |k| k * self.stride)
    }
}

/// Resample a sequence onto the uniform grid `0, delta, 2*delta, ...` capped
/// at the last original timestamp, with rates linearly interpolated between
/// neighboring originals and clamped to the boundary rates outside the
/// original time range.
pub fn resample_uniform(seq: &HeartbeatSequence, delta: f64) -> Result<HeartbeatSequence> {
    if seq.len() < 2 {
        return Err(Error::TooShort {
            len: seq.len(),
            need: 2,
        });
    }
    if !delta.is_finite() || delta <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "resample delta must be > 0, got {delta}"
        )));
    }
    let points = seq.points();
    let t_end = seq.last_timestamp();
    // Tolerate one part in 1e9 of drift so a grid-aligned end point is kept.
    let steps = (t_end / delta + 1e-9).floor() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let t = k as f64 * delta;
        out.push((t, rate_at(points, t)));
    }
    HeartbeatSequence::new(seq.trace_id.clone(), seq.thread_id, out)
}

/// Linearly interpolated rate at time `t`, clamped to the end rates.
fn rate_at(points: &[SeqPoint], t: f64) -> f64 {
    if t <= points[0].t {
        return points[0].rate;
    }
    let last = points[points.len() - 1];
    if t >= last.t {
        return last.rate;
    }
    // First point with timestamp >= t; in-range by the checks above.
    let hi = points.partition_point(|p| p.t < t);
    let (a, b) = (points[hi - 1], points[hi]);
    if b.t == t {
        return b.rate;
    }
    let frac = (t - a.t) / (b.t - a.t);
    a.rate + frac * (b.rate - a.rate)
}

/// Linear index-space resampling of a bare rate series onto `target_len`
/// points. Used to align sequences of different lengths before index-wise
/// comparison; endpoints map to endpoints.
pub fn resample_rates(rates: &[f64], target_len: usize) -> Vec<f64> {
    assert!(!rates.is_empty() && target_len >= 1);
    if rates.len() == target_len {
        return rates.to_vec();
    }
    if target_len == 1 {
        return vec![rates[0]];
    }
    let src_last = (rates.len() - 1) as f64;
    let dst_last = (target_len - 1) as f64;
    (0..target_len)
        .map(|i| {
            let pos = i as f64 / dst_last * src_last;
            let lo = pos.floor() as usize;
            if lo >= rates.len() - 1 {
                rates[rates.len() - 1]
            } else {
                let frac = pos - lo as f64;
                rates[lo] + frac * (rates[lo + 1] - rates[lo])
            }
        })
        .collect()
}
