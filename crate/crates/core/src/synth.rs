//! Synthetic labeled heartbeat traces with injected anomalies.
//!
//! A healthy trace is a noisy sinusoid around a base rate on a uniform time
//! grid. A memory leak multiplies rates by a linearly decaying factor and
//! stretches the time grid as the leak grows, so both the rate channel and
//! the completion-time channel carry signal. A shutdown keeps a prefix of the
//! healthy trace and appends a short zero-rate tail on the continuing grid.
//! Rates are clipped at zero.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::model::{AnomalyLabel, Dataset, DatasetMeta, HeartbeatSequence, LabeledTrace};
use crate::seed;

/// Shape of one simulated workload's healthy heartbeat signal.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadProfile {
    pub workload_id: String,
    /// Mean heart rate, beats/sec.
    pub base_rate: f64,
    /// Standard deviation of additive per-sample noise, beats/sec.
    pub noise_sd: f64,
    pub n_samples: usize,
    /// Seconds between consecutive samples.
    pub sample_interval: f64,
    /// Relative amplitude of the periodic component, in [0, 1).
    pub phase_amplitude: f64,
    /// Period of the periodic component, in samples.
    pub phase_period: f64,
}

impl WorkloadProfile {
    pub fn validate(&self) -> Result<()> {
        if self.workload_id.is_empty() {
            return Err(Error::InvalidConfig("workload_id must be non-empty".into()));
        }
        if !self.base_rate.is_finite() || self.base_rate <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "base_rate must be finite and > 0, got {}",
                self.base_rate
            )));
        }
        if !self.noise_sd.is_finite() || self.noise_sd < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "noise_sd must be finite and >= 0, got {}",
                self.noise_sd
            )));
        }
        if self.n_samples < 8 {
            return Err(Error::InvalidConfig(format!(
                "n_samples must be >= 8, got {}",
                self.n_samples
            )));
        }
        if !self.sample_interval.is_finite() || self.sample_interval <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "sample_interval must be finite and > 0, got {}",
                self.sample_interval
            )));
        }
        if !(0.0..1.0).contains(&self.phase_amplitude) {
            return Err(Error::InvalidConfig(format!(
                "phase_amplitude must be in [0, 1), got {}",
                self.phase_amplitude
            )));
        }
        if !self.phase_period.is_finite() || self.phase_period <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "phase_period must be finite and > 0, got {}",
                self.phase_period
            )));
        }
        Ok(())
    }
}

/// What to inject into a healthy trace, plus the per-trace noise seed.
/// Anomaly parameters are only read for the matching label.
#[derive(Debug, Clone, PartialEq)]
pub struct InjectionSpec {
    pub label: AnomalyLabel,
    /// Fraction of the rate lost by the end of a leaking trace, in [0.1, 0.9].
    pub leak_decay: f64,
    /// Fraction of extra time per interval by the end, in [0, 1].
    pub leak_stretch: f64,
    /// Fraction of the trace kept before a shutdown, in (0.1, 0.9).
    pub shutdown_cut: f64,
    /// Zero-rate samples appended after the cut.
    pub shutdown_tail: usize,
    pub seed: u64,
}

impl InjectionSpec {
    pub fn new(label: AnomalyLabel, seed: u64) -> Self {
        InjectionSpec {
            label,
            leak_decay: 0.5,
            leak_stretch: 0.3,
            shutdown_cut: 0.5,
            shutdown_tail: 5,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.label {
            AnomalyLabel::Normal => Ok(()),
            AnomalyLabel::MemoryLeak => {
                if !(0.1..=0.9).contains(&self.leak_decay) {
                    return Err(Error::InvalidConfig(format!(
                        "leak_decay must be in [0.1, 0.9], got {}",
                        self.leak_decay
                    )));
                }
                if !(0.0..=1.0).contains(&self.leak_stretch) {
                    return Err(Error::InvalidConfig(format!(
                        "leak_stretch must be in [0, 1], got {}",
                        self.leak_stretch
                    )));
                }
                Ok(())
            }
            AnomalyLabel::Shutdown => {
                if !(self.shutdown_cut > 0.1 && self.shutdown_cut < 0.9) {
                    return Err(Error::InvalidConfig(format!(
                        "shutdown_cut must be in (0.1, 0.9), got {}",
                        self.shutdown_cut
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Generate one labeled trace. Deterministic for a fixed spec seed.
pub fn generate_trace(
    profile: &WorkloadProfile,
    spec: &InjectionSpec,
    trace_id: &str,
) -> Result<LabeledTrace> {
    profile.validate()?;
    spec.validate()?;

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, profile.noise_sd)
        .map_err(|e| Error::InvalidConfig(format!("noise distribution: {e}")))?;
    let n = profile.n_samples;
    let healthy_rate = |i: usize, rng: &mut ChaCha8Rng| {
        let phase = (2.0 * std::f64::consts::PI * i as f64 / profile.phase_period).sin();
        let r = profile.base_rate * (1.0 + profile.phase_amplitude * phase) + noise.sample(rng);
        r.max(0.0)
    };

    let points: Vec<(f64, f64)> = match spec.label {
        AnomalyLabel::Normal => (0..n)
            .map(|i| {
                (
                    i as f64 * profile.sample_interval,
                    healthy_rate(i, &mut rng),
                )
            })
            .collect(),
        AnomalyLabel::MemoryLeak => {
            let mut t = 0.0;
            (0..n)
                .map(|i| {
                    if i > 0 {
                        // Interval into sample i grows with the leak.
                        t += profile.sample_interval
                            * (1.0 + spec.leak_stretch * i as f64 / n as f64);
                    }
                    let sag = 1.0 - spec.leak_decay * i as f64 / n as f64;
                    (t, healthy_rate(i, &mut rng) * sag)
                })
                .collect()
        }
        AnomalyLabel::Shutdown => {
            let kept = (spec.shutdown_cut * n as f64).floor() as usize;
            let mut pts: Vec<(f64, f64)> = (0..kept)
                .map(|i| {
                    (
                        i as f64 * profile.sample_interval,
                        healthy_rate(i, &mut rng),
                    )
                })
                .collect();
            for i in kept..kept + spec.shutdown_tail {
                pts.push((i as f64 * profile.sample_interval, 0.0));
            }
            pts
        }
    };

    let sequence = HeartbeatSequence::new(trace_id, 0, points)?;
    LabeledTrace::new(sequence, profile.workload_id.clone(), spec.label)
}

/// Generate a class-balanced dataset: every profile gets `per_class_count`
/// traces of each label. Per-trace seeds and shutdown cut points derive
/// deterministically from the master seed.
pub fn generate_dataset(
    profiles: &[WorkloadProfile],
    per_class_count: usize,
    master_seed: u64,
) -> Result<Dataset> {
    if per_class_count < 1 {
        return Err(Error::InvalidConfig("per_class_count must be >= 1".into()));
    }
    if profiles.is_empty() {
        return Err(Error::InvalidConfig("no workload profiles given".into()));
    }
    let mut traces = Vec::with_capacity(profiles.len() * 3 * per_class_count);
    for profile in profiles {
        for label in AnomalyLabel::ALL {
            for rep in 0..per_class_count {
                let tag = format!("synth/{}/{}", profile.workload_id, label);
                let mut spec =
                    InjectionSpec::new(label, seed::derive_indexed(master_seed, &tag, rep as u64));
                if label == AnomalyLabel::Shutdown {
                    let cut_tag = format!("cut/{}", profile.workload_id);
                    let mut cut_rng = seed::rng_indexed(master_seed, &cut_tag, rep as u64);
                    spec.shutdown_cut = cut_rng.gen_range(0.2..0.8);
                }
                let trace_id = format!("{}-{}-{:03}", profile.workload_id, label, rep);
                traces.push(generate_trace(profile, &spec, &trace_id)?);
            }
        }
    }
    let profiles_meta = profiles.iter().map(|p| p.workload_id.clone()).collect();
    Dataset::new(
        traces,
        DatasetMeta {
            seed: Some(master_seed),
            generator: Some("synth".into()),
            per_class_count: Some(per_class_count),
            profiles: profiles_meta,
        },
    )
}

/// The six stock workload shapes used by the CLI and the test suites.
/// Distinct base rates, noise levels, and periodic components keep their
/// healthy signatures separable. Every period divides half the default
/// sample count, so the periodic component sums to zero over each half and
/// healthy means stay stationary to within pure noise.
pub fn default_profiles() -> Vec<WorkloadProfile> {
    let mk = |id: &str, base: f64, sd: f64, amp: f64, period: f64| WorkloadProfile {
        workload_id: id.to_string(),
        base_rate: base,
        noise_sd: sd,
        n_samples: 120,
        sample_interval: 0.5,
        phase_amplitude: amp,
        phase_period: period,
    };
    vec![
        mk("npb-sp", 120.0, 6.0, 0.10, 20.0),
        mk("npb-lu", 90.0, 4.5, 0.15, 30.0),
        mk("npb-bt", 150.0, 7.5, 0.08, 15.0),
        mk("npb-cg", 60.0, 3.0, 0.20, 12.0),
        mk("epcc-array", 200.0, 10.0, 0.05, 10.0),
        mk("jacobi", 45.0, 2.25, 0.12, 60.0),
    ]
}

/// The stock profiles with per-sample noise removed, for tests that need
/// geometric separation without statistical slack.
pub fn noise_free_profiles() -> Vec<WorkloadProfile> {
    default_profiles()
        .into_iter()
        .map(|mut p| {
            p.noise_sd = 0.0;
            p
        })
        .collect()
}
