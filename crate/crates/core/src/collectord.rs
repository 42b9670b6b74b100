//! Long-running collector: ingests `HB` record streams, keeps one rolling
//! window per (trace_id, thread_id), and emits `DIAG` lines from a trained
//! model. The same engine drives live serving and file replay, so replaying
//! a recorded stream reproduces the served diagnoses byte for byte; only the
//! wall-clock silence rule is live-only.

use std::collections::{BTreeMap, VecDeque};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use crate::classify::predict_hsa;
use crate::classify::TrainedBundle;
use crate::error::{Error, Result};
use crate::model::{resample_rates, AnomalyLabel, HeartbeatSequence};
use crate::record::{is_comment_or_blank, DiagReason, DiagRecord, HbRecord};

pub const DEFAULT_WINDOW: usize = 64;
pub const DEFAULT_STRIDE: usize = 16;
/// Five times the emitter's default flush interval.
pub const DEFAULT_SILENCE_DEADLINE_MS: u64 = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CollectorConfig {
    /// Samples per diagnosis window.
    pub window: usize,
    /// New samples required between diagnoses.
    pub stride: usize,
    /// Live-only: quiet time after which a thread is presumed shut down.
    pub silence_deadline_ms: u64,
}

impl Default for CollectorConfig {
    fn default() -> Self {
        CollectorConfig {
            window: DEFAULT_WINDOW,
            stride: DEFAULT_STRIDE,
            silence_deadline_ms: DEFAULT_SILENCE_DEADLINE_MS,
        }
    }
}

struct ThreadState {
    /// Last `window` samples, (timestamp_ms, rate). Memory stays O(window)
    /// however long the stream runs.
    ring: VecDeque<(u64, f64)>,
    since_diag: usize,
    arrival_ms: u64,
    silence_flagged: bool,
}

/// The pure diagnosis engine: feed lines in, get DIAG records out. Driving it
/// from a file or from a socket makes no difference to the output.
pub struct Collector<'a> {
    bundle: &'a TrainedBundle,
    config: CollectorConfig,
    states: BTreeMap<(String, u32), ThreadState>,
    malformed: u64,
}

impl<'a> Collector<'a> {
    pub fn new(bundle: &'a TrainedBundle, config: CollectorConfig) -> Result<Self> {
        if config.window < 2 {
            return Err(Error::InvalidConfig(format!(
                "collector window must be >= 2, got {}",
                config.window
            )));
        }
        if config.stride < 1 || config.stride > config.window {
            return Err(Error::InvalidConfig(format!(
                "stride must be in 1..={}, got {}",
                config.window, config.stride
            )));
        }
        if config.silence_deadline_ms < 1 {
            return Err(Error::InvalidConfig(
                "silence deadline must be >= 1 ms".into(),
            ));
        }
        Ok(Collector {
            bundle,
            config,
            states: BTreeMap::new(),
            malformed: 0,
        })
    }

    /// Ingest one input line; `arrival_ms` is the local receive clock used by
    /// the silence rule (pass 0 when replaying). Returns a diagnosis when the
    /// line completes a stride on a full window.
    pub fn ingest_line(&mut self, line: &str, arrival_ms: u64) -> Result<Option<DiagRecord>> {
        if is_comment_or_blank(line) {
            return Ok(None);
        }
        let record = match HbRecord::parse(line) {
            Ok(r) => r,
            Err(_) => {
                self.malformed += 1;
                return Ok(None);
            }
        };
        let key = (record.trace_id.clone(), record.thread_id);
        let state = self.states.entry(key).or_insert_with(|| ThreadState {
            ring: VecDeque::with_capacity(self.config.window + 1),
            since_diag: 0,
            arrival_ms,
            silence_flagged: false,
        });
        state
            .ring
            .push_back((record.timestamp_ms, record.heart_rate));
        if state.ring.len() > self.config.window {
            state.ring.pop_front();
        }
        state.since_diag += 1;
        state.arrival_ms = arrival_ms;
        state.silence_flagged = false;

        if state.ring.len() < self.config.window || state.since_diag < self.config.stride {
            return Ok(None);
        }
        state.since_diag = 0;
        let rates: Vec<f64> = state.ring.iter().map(|&(_, r)| r).collect();
        let window_end_ms = state.ring.back().expect("full ring").0;
        let (label, distance) = self.classify_window(&rates)?;
        Ok(Some(DiagRecord {
            trace_id: record.trace_id,
            thread_id: record.thread_id,
            window_end_ms,
            label,
            distance,
            reason: DiagReason::Model,
        }))
    }

    /// The window's rates resampled onto the model's expected length, then
    /// classified by nearest sequences.
    fn classify_window(&self, rates: &[f64]) -> Result<(AnomalyLabel, f64)> {
        let resampled = resample_rates(rates, self.bundle.expected_len);
        let points = resampled
            .into_iter()
            .enumerate()
            .map(|(i, r)| (i as f64, r))
            .collect();
        let query = HeartbeatSequence::new("window", 0, points)?;
        predict_hsa(&self.bundle.hsa, &query)
    }

    /// Emit a shutdown diagnosis for every thread quiet past the deadline.
    /// Each silence is reported once until the thread speaks again.
    pub fn check_silence(&mut self, now_ms: u64) -> Vec<DiagRecord> {
        let deadline = self.config.silence_deadline_ms;
        let mut out = Vec::new();
        for ((trace_id, thread_id), state) in &mut self.states {
            if state.silence_flagged || state.ring.is_empty() {
                continue;
            }
            if now_ms.saturating_sub(state.arrival_ms) > deadline {
                state.silence_flagged = true;
                out.push(DiagRecord {
                    trace_id: trace_id.clone(),
                    thread_id: *thread_id,
                    window_end_ms: state.ring.back().expect("nonempty ring").0,
                    label: AnomalyLabel::Shutdown,
                    distance: 0.0,
                    reason: DiagReason::Silence,
                });
            }
        }
        out
    }

    /// Lines that failed to parse so far; reported when a stream closes.
    pub fn malformed(&self) -> u64 {
        self.malformed
    }
}

/// Diagnose a recorded stream. Pure function of the bytes: no silence rule,
/// no clocks. Returns the diagnoses and the malformed-line count.
pub fn replay_reader(
    reader: impl BufRead,
    bundle: &TrainedBundle,
    config: CollectorConfig,
) -> Result<(Vec<DiagRecord>, u64)> {
    let mut collector = Collector::new(bundle, config)?;
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line.map_err(|e| Error::io("<stream>", e))?;
        if let Some(diag) = collector.ingest_line(&line, 0)? {
            out.push(diag);
        }
    }
    Ok((out, collector.malformed()))
}

pub fn replay(
    path: &Path,
    bundle: &TrainedBundle,
    config: CollectorConfig,
) -> Result<(Vec<DiagRecord>, u64)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    replay_reader(BufReader::new(file), bundle, config)
}

/// Serve a live stream: model diagnoses as lines arrive, silence diagnoses on
/// deadline expiry, until the reader reaches end of input or `stop` is set.
/// Returns the malformed-line count. The reader thread is left to drain on
/// its own after a stop; it exits as soon as its next send fails.
pub fn serve_stream(
    reader: impl BufRead + Send + 'static,
    mut writer: impl Write,
    bundle: &TrainedBundle,
    config: CollectorConfig,
    stop: &AtomicBool,
) -> Result<u64> {
    let mut collector = Collector::new(bundle, config)?;
    let (tx, rx) = mpsc::channel::<std::io::Result<String>>();
    thread::spawn(move || {
        for line in reader.lines() {
            if tx.send(line).is_err() {
                return;
            }
        }
    });

    let start = Instant::now();
    let tick = Duration::from_millis((config.silence_deadline_ms / 5).clamp(5, 200));
    loop {
        if stop.load(Ordering::Acquire) {
            break Ok(collector.malformed());
        }
        match rx.recv_timeout(tick) {
            Ok(Ok(line)) => {
                let now = start.elapsed().as_millis() as u64;
                if let Some(diag) = collector.ingest_line(&line, now)? {
                    emit(&mut writer, &diag)?;
                }
            }
            Ok(Err(e)) => break Err(Error::io("<stream>", e)),
            Err(mpsc::RecvTimeoutError::Timeout) => {
                let now = start.elapsed().as_millis() as u64;
                for diag in collector.check_silence(now) {
                    emit(&mut writer, &diag)?;
                }
            }
            Err(mpsc::RecvTimeoutError::Disconnected) => break Ok(collector.malformed()),
        }
    }
}

/// Accept loop for TCP serving. Connections are handled one at a time against
/// shared window state; `stop` ends the loop at the next poll. Diagnoses go
/// to `writer`; returns the total malformed-line count.
pub fn serve_tcp(
    listener: TcpListener,
    mut writer: impl Write,
    bundle: &TrainedBundle,
    config: CollectorConfig,
    stop: &AtomicBool,
) -> Result<u64> {
    let mut collector = Collector::new(bundle, config)?;
    listener
        .set_nonblocking(true)
        .map_err(|e| Error::io("<listener>", e))?;
    let start = Instant::now();
    let tick = Duration::from_millis((config.silence_deadline_ms / 5).clamp(5, 200));

    while !stop.load(Ordering::Acquire) {
        match listener.accept() {
            Ok((stream, _addr)) => {
                stream
                    .set_read_timeout(Some(tick))
                    .map_err(|e| Error::io("<conn>", e))?;
                let mut reader = BufReader::new(stream);
                let mut line = String::new();
                loop {
                    if stop.load(Ordering::Acquire) {
                        return Ok(collector.malformed());
                    }
                    line.clear();
                    match reader.read_line(&mut line) {
                        Ok(0) => break,
                        Ok(_) => {
                            let now = start.elapsed().as_millis() as u64;
                            if let Some(diag) =
                                collector.ingest_line(line.trim_end_matches(['\r', '\n']), now)?
                            {
                                emit(&mut writer, &diag)?;
                            }
                        }
                        Err(e)
                            if e.kind() == std::io::ErrorKind::WouldBlock
                                || e.kind() == std::io::ErrorKind::TimedOut =>
                        {
                            let now = start.elapsed().as_millis() as u64;
                            for diag in collector.check_silence(now) {
                                emit(&mut writer, &diag)?;
                            }
                        }
                        Err(e) => return Err(Error::io("<conn>", e)),
                    }
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                let now = start.elapsed().as_millis() as u64;
                for diag in collector.check_silence(now) {
                    emit(&mut writer, &diag)?;
                }
                thread::sleep(tick);
            }
            Err(e) => return Err(Error::io("<listener>", e)),
        }
    }
    Ok(collector.malformed())
}

fn emit(writer: &mut impl Write, diag: &DiagRecord) -> Result<()> {
    // One atomic writeln per diagnosis; flushed so downstream pipes see it
    // immediately.
    writeln!(writer, "{}", diag.to_line()).map_err(|e| Error::io("<out>", e))?;
    writer.flush().map_err(|e| Error::io("<out>", e))
}
