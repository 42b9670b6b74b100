//! In-process heartbeat emitter for instrumented multithreaded programs.
//!
//! Worker threads call [`ThreadHandle::beat`] on their hot path; it is a
//! single relaxed atomic increment and never touches I/O or locks. A
//! background flusher wakes every `flush_interval_ms`, swaps each per-thread
//! counter to zero, and writes one `HB` line per registered thread, zero
//! counts included. Swap-and-reset makes the stream conserving: summing
//! round(heart_rate x interval) over all records recovers the exact number
//! of beat() calls, under any thread schedule.

use std::fs;
use std::io::{self, Write};
use std::net::TcpStream;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{self, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::record::HbRecord;

/// Where heartbeat lines go.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SinkSpec {
    File(PathBuf),
    /// TCP address, e.g. "127.0.0.1:9000".
    Stream(String),
    Stdout,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmitterConfig {
    pub flush_interval_ms: u64,
    pub sink: SinkSpec,
}

impl Default for EmitterConfig {
    fn default() -> Self {
        EmitterConfig {
            flush_interval_ms: 100,
            sink: SinkSpec::Stdout,
        }
    }
}

/// Per-thread registration. Cloned handles share one counter.
#[derive(Debug, Clone)]
pub struct ThreadHandle {
    counter: Arc<AtomicU64>,
}

impl ThreadHandle {
    /// Record one unit of work. Wait-free: one relaxed atomic add.
    #[inline]
    pub fn beat(&self) {
        self.counter.fetch_add(1, Ordering::Relaxed);
    }
}

struct Registry {
    /// (thread_id, beat counter), in registration order.
    slots: Vec<(u32, Arc<AtomicU64>)>,
}

/// Rate computation and line assembly, separated from real time so tests can
/// drive it with a fake clock.
struct FlushCore {
    trace_id: String,
    interval_ms: u64,
    last_ms: Option<u64>,
}

impl FlushCore {
    fn new(trace_id: String, interval_ms: u64) -> Self {
        FlushCore {
            trace_id,
            interval_ms,
            last_ms: None,
        }
    }

    /// Drain every counter and write one record per thread stamped
    /// `elapsed_ms`, nudged forward if a previous flush already used that
    /// timestamp. Returns the number of beats drained.
    fn flush(
        &mut self,
        slots: &[(u32, Arc<AtomicU64>)],
        elapsed_ms: u64,
        out: &mut dyn Write,
    ) -> io::Result<u64> {
        let ts = match self.last_ms {
            Some(prev) => elapsed_ms.max(prev + 1),
            None => elapsed_ms,
        };
        self.last_ms = Some(ts);
        let interval_s = self.interval_ms as f64 / 1000.0;
        let mut drained = 0u64;
        for (thread_id, counter) in slots {
            let count = counter.swap(0, Ordering::Relaxed);
            drained += count;
            let rec = HbRecord {
                trace_id: self.trace_id.clone(),
                thread_id: *thread_id,
                timestamp_ms: ts,
                heart_rate: count as f64 / interval_s,
            };
            writeln!(out, "{}", rec.to_line())?;
        }
        out.flush()?;
        Ok(drained)
    }
}

/// A live emitter: accepts registrations, flushes in the background, stops
/// idempotently. Dropping a running session stops it.
pub struct EmitterSession {
    registry: Arc<Mutex<Registry>>,
    stopped: Arc<AtomicBool>,
    stop_tx: Option<mpsc::Sender<()>>,
    flusher: Option<JoinHandle<()>>,
}

/// Open the sink, write the stream header, and start the flusher.
/// An unreachable sink fails here, not at the first flush.
pub fn start(config: &EmitterConfig, trace_id: &str) -> Result<EmitterSession> {
    if config.flush_interval_ms < 1 {
        return Err(Error::InvalidConfig(
            "flush_interval_ms must be >= 1".into(),
        ));
    }
    let mut sink: Box<dyn Write + Send> = match &config.sink {
        SinkSpec::File(path) => Box::new(io::BufWriter::new(
            fs::File::create(path).map_err(|e| Error::io(path, e))?,
        )),
        SinkSpec::Stream(addr) => {
            Box::new(TcpStream::connect(addr).map_err(|e| Error::io(addr.as_str(), e))?)
        }
        SinkSpec::Stdout => Box::new(io::stdout()),
    };
    writeln!(
        sink,
        "# heartbeat stream trace_id={trace_id} flush_interval_ms={}",
        config.flush_interval_ms
    )
    .and_then(|_| sink.flush())
    .map_err(|e| Error::io("<sink>", e))?;

    let registry = Arc::new(Mutex::new(Registry { slots: Vec::new() }));
    let stopped = Arc::new(AtomicBool::new(false));
    let (stop_tx, stop_rx) = mpsc::channel::<()>();

    let flusher = {
        let registry = Arc::clone(&registry);
        let mut core = FlushCore::new(trace_id.to_string(), config.flush_interval_ms);
        let interval = Duration::from_millis(config.flush_interval_ms);
        std::thread::spawn(move || {
            let started = Instant::now();
            let mut next = started + interval;
            loop {
                let now = Instant::now();
                let wait = next.saturating_duration_since(now);
                match stop_rx.recv_timeout(wait) {
                    Err(RecvTimeoutError::Timeout) => {
                        let slots = registry.lock().unwrap().slots.clone();
                        let elapsed = started.elapsed().as_millis() as u64;
                        // A broken sink cannot be reported from here; stop
                        // flushing rather than spin on errors.
                        if core.flush(&slots, elapsed, &mut sink).is_err() {
                            return;
                        }
                        next += interval;
                    }
                    Ok(()) | Err(RecvTimeoutError::Disconnected) => {
                        // Final partial interval.
                        let slots = registry.lock().unwrap().slots.clone();
                        let elapsed = started.elapsed().as_millis() as u64;
                        let _ = core.flush(&slots, elapsed, &mut sink);
                        return;
                    }
                }
            }
        })
    };

    Ok(EmitterSession {
        registry,
        stopped,
        stop_tx: Some(stop_tx),
        flusher: Some(flusher),
    })
}

impl EmitterSession {
    /// Register one worker thread. Each thread_id may appear once.
    pub fn register_thread(&self, thread_id: u32) -> Result<ThreadHandle> {
        if self.stopped.load(Ordering::Acquire) {
            return Err(Error::SessionStopped);
        }
        let mut reg = self.registry.lock().unwrap();
        if reg.slots.iter().any(|(id, _)| *id == thread_id) {
            return Err(Error::DuplicateThread(thread_id));
        }
        let counter = Arc::new(AtomicU64::new(0));
        reg.slots.push((thread_id, Arc::clone(&counter)));
        Ok(ThreadHandle { counter })
    }

    /// Flush the final partial interval and close the sink. Safe to call
    /// more than once; later calls do nothing.
    pub fn stop(&mut self) {
        self.stopped.store(true, Ordering::Release);
        if let Some(tx) = self.stop_tx.take() {
            let _ = tx.send(());
        }
        if let Some(handle) = self.flusher.take() {
            let _ = handle.join();
        }
    }
}

impl Drop for EmitterSession {
    fn drop(&mut self) {
        self.stop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::is_comment_or_blank;

    fn slot(thread_id: u32) -> (u32, Arc<AtomicU64>) {
        (thread_id, Arc::new(AtomicU64::new(0)))
    }

    fn parse_records(bytes: &[u8]) -> Vec<HbRecord> {
        String::from_utf8(bytes.to_vec())
            .unwrap()
            .lines()
            .filter(|l| !is_comment_or_blank(l))
            .map(|l| HbRecord::parse(l).unwrap())
            .collect()
    }

    #[test]
    fn fake_clock_rate_arithmetic() {
        let slots = vec![slot(0)];
        let mut core = FlushCore::new("t".into(), 100);
        let mut out = Vec::new();
        slots[0].1.fetch_add(1000, Ordering::Relaxed);
        core.flush(&slots, 100, &mut out).unwrap();
        let recs = parse_records(&out);
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].heart_rate, 10000.0);
        assert_eq!(recs[0].timestamp_ms, 100);
    }

    #[test]
    fn silent_interval_emits_zero_rate() {
        let slots = vec![slot(0), slot(1)];
        let mut core = FlushCore::new("t".into(), 50);
        let mut out = Vec::new();
        slots[1].1.fetch_add(5, Ordering::Relaxed);
        core.flush(&slots, 50, &mut out).unwrap();
        let recs = parse_records(&out);
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].heart_rate, 0.0);
        assert_eq!(recs[1].heart_rate, 100.0);
    }

    #[test]
    fn fake_clock_conservation_across_boundaries() {
        let slots = vec![slot(0), slot(1), slot(2)];
        let mut core = FlushCore::new("t".into(), 100);
        let mut out = Vec::new();
        let mut total = 0u64;
        let mut rng_state = 12345u64;
        for tick in 1..=20u64 {
            for (_, counter) in &slots {
                rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1);
                let beats = rng_state % 2000;
                counter.fetch_add(beats, Ordering::Relaxed);
                total += beats;
            }
            core.flush(&slots, tick * 100, &mut out).unwrap();
        }
        let recovered: u64 = parse_records(&out)
            .iter()
            .map(|r| (r.heart_rate * 0.1).round() as u64)
            .sum();
        assert_eq!(recovered, total);
    }

    #[test]
    fn flush_timestamps_never_repeat() {
        let slots = vec![slot(0)];
        let mut core = FlushCore::new("t".into(), 10);
        let mut out = Vec::new();
        core.flush(&slots, 10, &mut out).unwrap();
        core.flush(&slots, 10, &mut out).unwrap();
        core.flush(&slots, 10, &mut out).unwrap();
        let ts: Vec<u64> = parse_records(&out).iter().map(|r| r.timestamp_ms).collect();
        assert_eq!(ts, vec![10, 11, 12]);
    }

    #[test]
    fn registration_rules() {
        let dir = tempfile::tempdir().unwrap();
        let config = EmitterConfig {
            flush_interval_ms: 1000,
            sink: SinkSpec::File(dir.path().join("out.hb")),
        };
        let mut session = start(&config, "t").unwrap();
        session.register_thread(3).unwrap();
        assert!(matches!(
            session.register_thread(3),
            Err(Error::DuplicateThread(3))
        ));
        session.register_thread(4).unwrap();
        session.stop();
        session.stop(); // idempotent
        assert!(matches!(
            session.register_thread(5),
            Err(Error::SessionStopped)
        ));
    }

    #[test]
    fn unwritable_sink_fails_at_start() {
        let config = EmitterConfig {
            flush_interval_ms: 100,
            sink: SinkSpec::File(PathBuf::from("/nonexistent-dir/out.hb")),
        };
        assert!(matches!(start(&config, "t"), Err(Error::Io { .. })));
    }

    #[test]
    fn stop_without_threads_emits_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.hb");
        let config = EmitterConfig {
            flush_interval_ms: 1000,
            sink: SinkSpec::File(path.clone()),
        };
        let mut session = start(&config, "t").unwrap();
        session.stop();
        let content = fs::read_to_string(&path).unwrap();
        assert!(content.starts_with('#'));
        assert_eq!(parse_records(content.as_bytes()).len(), 0);
    }

    #[test]
    fn concurrent_beats_are_conserved() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.hb");
        let config = EmitterConfig {
            flush_interval_ms: 10,
            sink: SinkSpec::File(path.clone()),
        };
        let mut session = start(&config, "stress").unwrap();
        let per_thread = 20_000u64;
        let workers: Vec<_> = (0..4)
            .map(|tid| {
                let handle = session.register_thread(tid).unwrap();
                std::thread::spawn(move || {
                    for i in 0..per_thread {
                        handle.beat();
                        if i % 4096 == 0 {
                            std::thread::yield_now();
                        }
                    }
                })
            })
            .collect();
        for w in workers {
            w.join().unwrap();
        }
        session.stop();

        let content = fs::read_to_string(&path).unwrap();
        let recs = parse_records(content.as_bytes());
        let recovered: u64 = recs
            .iter()
            .map(|r| (r.heart_rate * 0.010).round() as u64)
            .sum();
        assert_eq!(recovered, 4 * per_thread);

        // Per-thread timestamps strictly increase.
        for tid in 0..4 {
            let ts: Vec<u64> = recs
                .iter()
                .filter(|r| r.thread_id == tid)
                .map(|r| r.timestamp_ms)
                .collect();
            assert!(ts.windows(2).all(|w| w[0] < w[1]), "thread {tid}: {ts:?}");
        }
    }
}
