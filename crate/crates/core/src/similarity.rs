//! Dynamic time warping over heart-rate series, with an optional Sakoe-Chiba
//! band, envelope-based lower bounds, and pruned nearest-neighbor search.
//!
//! The accumulated-cost recurrence here starts from D(0,0) = 0, so the cost
//! of the first aligned pair is NOT counted. This differs from the textbook
//! boundary D(0,0) = cost(q_0, c_0); every distance below is the textbook
//! value minus cost(q_0, c_0). One consequence worth knowing: the lower-bound
//! relation lb_keogh <= dtw can fail by up to cost(q_0, c_0) on adversarial
//! pairs (e.g. two far-apart constant sequences), though it holds on generic
//! data where the envelope is slack.

use crate::error::{Error, Result};
use crate::model::{resample_rates, HeartbeatSequence, LabeledTrace};

/// Per-step cost between two rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CostKind {
    Absolute,
    #[default]
    Squared,
}

impl CostKind {
    #[inline]
    pub fn cost(self, a: f64, b: f64) -> f64 {
        let d = a - b;
        match self {
            CostKind::Absolute => d.abs(),
            CostKind::Squared => d * d,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            CostKind::Absolute => "abs",
            CostKind::Squared => "sq",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "abs" => Ok(CostKind::Absolute),
            "sq" => Ok(CostKind::Squared),
            other => Err(Error::InvalidConfig(format!(
                "unknown cost kind {other:?} (expected abs or sq)"
            ))),
        }
    }
}

/// Band width when the caller does not choose one: a tenth of the sequence
/// length, never below 5 samples.
pub fn default_band(len: usize) -> usize {
    std::cmp::max(5, len.div_ceil(10))
}

/// Banded or unbounded DTW distance between two rate series.
///
/// Banded means the alignment is restricted to |i - j| <= band; a band
/// narrower than the length difference admits no path at all.
pub fn dtw(q: &[f64], c: &[f64], cost: CostKind, band: Option<usize>) -> Result<f64> {
    if q.is_empty() || c.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (n, m) = (q.len(), c.len());
    if let Some(b) = band {
        if b < n.abs_diff(m) {
            return Err(Error::InfeasibleBand { band: b, n, m });
        }
    }
    let within = |i: usize, j: usize| match band {
        Some(b) => i.abs_diff(j) <= b,
        None => true,
    };

    let mut prev = vec![f64::INFINITY; m];
    let mut curr = vec![f64::INFINITY; m];
    for j in 0..m {
        if !within(0, j) {
            break;
        }
        prev[j] = if j == 0 {
            0.0
        } else {
            prev[j - 1] + cost.cost(q[0], c[j])
        };
    }
    for (i, &qi) in q.iter().enumerate().skip(1) {
        curr.fill(f64::INFINITY);
        let lo = match band {
            Some(b) => i.saturating_sub(b),
            None => 0,
        };
        let hi = match band {
            Some(b) => (i + b).min(m - 1),
            None => m - 1,
        };
        for j in lo..=hi {
            let step = cost.cost(qi, c[j]);
            curr[j] = if j == 0 {
                prev[0] + step
            } else {
                let best = prev[j].min(curr[j - 1]).min(prev[j - 1]);
                best + step
            };
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    Ok(prev[m - 1])
}

/// Per-index bounds of a sequence over a sliding band.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub u: Vec<f64>,
    pub l: Vec<f64>,
    pub w: usize,
}

/// Running max/min of `q` over the index window [i-w, i+w], clamped to the
/// sequence ends.
pub fn envelope(q: &[f64], w: usize) -> Envelope {
    let n = q.len();
    let mut u = Vec::with_capacity(n);
    let mut l = Vec::with_capacity(n);
    for i in 0..n {
        let lo = i.saturating_sub(w);
        let hi = (i + w).min(n - 1);
        let window = &q[lo..=hi];
        u.push(window.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        l.push(window.iter().cloned().fold(f64::INFINITY, f64::min));
    }
    Envelope { u, l, w }
}

impl Envelope {
    /// Lower-bound distance of `c` against this envelope: each point after
    /// the first pays only for the part of it outside [l_i, u_i]. The first
    /// point pays nothing because a warping path may match it solely at the
    /// start cell, whose cost the alignment distance excludes; skipping it
    /// keeps the bound valid on every input, not just typical ones.
    pub fn lb(&self, c: &[f64], cost: CostKind) -> Result<f64> {
        if c.len() != self.u.len() {
            return Err(Error::LengthMismatch(self.u.len(), c.len()));
        }
        let mut total = 0.0;
        for (i, &ci) in c.iter().enumerate().skip(1) {
            if ci > self.u[i] {
                total += cost.cost(ci, self.u[i]);
            } else if ci < self.l[i] {
                total += cost.cost(ci, self.l[i]);
            }
        }
        Ok(total)
    }
}

/// LB_Keogh lower bound of the banded DTW between equal-length `q` and `c`,
/// envelope built from `q` with half-width `w`.
pub fn lb_keogh(q: &[f64], c: &[f64], w: usize, cost: CostKind) -> Result<f64> {
    if q.is_empty() || c.is_empty() {
        return Err(Error::EmptyInput);
    }
    if q.len() != c.len() {
        return Err(Error::LengthMismatch(q.len(), c.len()));
    }
    envelope(q, w).lb(c, cost)
}

/// Result of a nearest-neighbor search.
#[derive(Debug, Clone)]
pub struct NnMatch<'a> {
    pub best: &'a LabeledTrace,
    pub distance: f64,
    /// Candidates skipped because their lower bound already met or exceeded
    /// the best DTW found.
    pub pruned: usize,
}

/// One ranked neighbor from a k-nearest search.
#[derive(Debug, Clone)]
pub struct Neighbor<'a> {
    pub trace: &'a LabeledTrace,
    pub distance: f64,
}

/// Nearest candidate to `query` under banded DTW, with LB_Keogh pruning.
///
/// Candidates are aligned to the query's length by linear resampling, ordered
/// by ascending lower bound, and skipped once their bound reaches the best
/// DTW so far. Equal DTW distances go to the lexicographically smallest
/// trace_id. The winner and its distance always match an exhaustive scan.
pub fn nn_search<'a>(
    query: &HeartbeatSequence,
    candidates: &'a [LabeledTrace],
    cost: CostKind,
    band: Option<usize>,
) -> Result<NnMatch<'a>> {
    if candidates.is_empty() {
        return Err(Error::NoCandidates);
    }
    let q = query.rates();
    let ranked = rank_by_lower_bound(&q, candidates, cost, band)?;

    let mut best: Option<(usize, f64)> = None;
    let mut evaluated = 0usize;
    for &(i, lb, ref aligned) in &ranked {
        if let Some((_, best_d)) = best {
            if lb >= best_d {
                break; // every later candidate has an even larger bound
            }
        }
        evaluated += 1;
        let d = dtw(&q, aligned, cost, band)?;
        best = match best {
            None => Some((i, d)),
            Some((bi, bd)) => {
                if d < bd || (d == bd && candidates[i].trace_id() < candidates[bi].trace_id()) {
                    Some((i, d))
                } else {
                    Some((bi, bd))
                }
            }
        };
    }
    let (idx, distance) = best.expect("nonempty candidates evaluated");
    Ok(NnMatch {
        best: &candidates[idx],
        distance,
        pruned: candidates.len() - evaluated,
    })
}

/// The `k` nearest candidates by banded DTW, sorted by (distance, trace_id),
/// with the same alignment and pruning scheme as [`nn_search`]. Skipping here
/// requires the bound to strictly exceed the current k-th distance, so exact
/// ties are always evaluated and the result matches an exhaustive scan.
pub fn knn_search<'a>(
    query: &HeartbeatSequence,
    candidates: &'a [LabeledTrace],
    k: usize,
    cost: CostKind,
    band: Option<usize>,
) -> Result<(Vec<Neighbor<'a>>, usize)> {
    if k < 1 {
        return Err(Error::InvalidConfig("k must be >= 1".into()));
    }
    if candidates.is_empty() {
        return Err(Error::NoCandidates);
    }
    let q = query.rates();
    let ranked = rank_by_lower_bound(&q, candidates, cost, band)?;

    // (distance, index) of the best k so far, sorted ascending by the final
    // tie rule.
    let mut top: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
    let mut evaluated = 0usize;
    for &(i, lb, ref aligned) in &ranked {
        if top.len() == k && lb > top[k - 1].0 {
            break;
        }
        evaluated += 1;
        let d = dtw(&q, aligned, cost, band)?;
        top.push((d, i));
        top.sort_by(|a, b| {
            a.0.total_cmp(&b.0)
                .then_with(|| candidates[a.1].trace_id().cmp(candidates[b.1].trace_id()))
        });
        top.truncate(k);
    }
    let neighbors = top
        .into_iter()
        .map(|(distance, i)| Neighbor {
            trace: &candidates[i],
            distance,
        })
        .collect();
    Ok((neighbors, candidates.len() - evaluated))
}

/// Candidates aligned to the query length and sorted by (lower bound,
/// trace_id) ascending. Ties in the bound resolve in trace_id order so a
/// zero-distance duplicate with the smallest id is always examined first.
fn rank_by_lower_bound(
    q: &[f64],
    candidates: &[LabeledTrace],
    cost: CostKind,
    band: Option<usize>,
) -> Result<Vec<(usize, f64, Vec<f64>)>> {
    if q.is_empty() {
        return Err(Error::EmptyInput);
    }
    let env_w = band.unwrap_or(q.len().saturating_sub(1));
    let env = envelope(q, env_w);
    let mut ranked: Vec<(usize, f64, Vec<f64>)> = candidates
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let aligned = resample_rates(&t.sequence.rates(), q.len());
            let lb = env.lb(&aligned, cost)?;
            Ok((i, lb, aligned))
        })
        .collect::<Result<_>>()?;
    ranked.sort_by(|a, b| {
        a.1.total_cmp(&b.1)
            .then_with(|| candidates[a.0].trace_id().cmp(candidates[b.0].trace_id()))
    });
    Ok(ranked)
}
