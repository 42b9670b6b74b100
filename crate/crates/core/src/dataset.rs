//! Dataset directory I/O.
//!
//! A dataset is a directory of plain text:
//!   - `traces.csv`   header `trace_id,workload_id,thread_id,label`
//!   - `samples.csv`  header `trace_id,thread_id,timestamp_ms,heart_rate`,
//!     rows sorted by (trace_id, thread_id, timestamp_ms)
//!   - `meta.toml`    generator seed and creation parameters (optional on load)
//!
//! UTF-8, LF line endings, `.` decimal separator. Rates are written with 6
//! significant digits, so save-then-load is exact for values that short.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{AnomalyLabel, Dataset, DatasetMeta, HeartbeatSequence, LabeledTrace};
use crate::record::{format_sig, ms_to_s, s_to_ms};

const TRACES_FILE: &str = "traces.csv";
const SAMPLES_FILE: &str = "samples.csv";
const META_FILE: &str = "meta.toml";
const TRACES_HEADER: &str = "trace_id,workload_id,thread_id,label";
const SAMPLES_HEADER: &str = "trace_id,thread_id,timestamp_ms,heart_rate";

pub fn save_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    ds.check_unique_ids()?;
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))?;

    let traces_path = path.join(TRACES_FILE);
    let mut w = open_writer(&traces_path)?;
    writeln!(w, "{TRACES_HEADER}").map_err(|e| Error::io(&traces_path, e))?;
    for trace in &ds.traces {
        writeln!(
            w,
            "{},{},{},{}",
            trace.trace_id(),
            trace.workload_id,
            trace.sequence.thread_id,
            trace.label
        )
        .map_err(|e| Error::io(&traces_path, e))?;
    }
    w.flush().map_err(|e| Error::io(&traces_path, e))?;

    let samples_path = path.join(SAMPLES_FILE);
    let mut w = open_writer(&samples_path)?;
    writeln!(w, "{SAMPLES_HEADER}").map_err(|e| Error::io(&samples_path, e))?;
    let mut rows: Vec<(&str, u32, u64, f64)> = Vec::new();
    for trace in &ds.traces {
        for p in trace.sequence.points() {
            rows.push((
                trace.trace_id(),
                trace.sequence.thread_id,
                s_to_ms(p.t),
                p.rate,
            ));
        }
    }
    rows.sort_by(|a, b| (a.0, a.1, a.2).cmp(&(b.0, b.1, b.2)));
    for (trace_id, thread_id, ms, rate) in rows {
        writeln!(w, "{trace_id},{thread_id},{ms},{}", format_sig(rate))
            .map_err(|e| Error::io(&samples_path, e))?;
    }
    w.flush().map_err(|e| Error::io(&samples_path, e))?;

    let meta_path = path.join(META_FILE);
    let meta_text = toml::to_string(&ds.metadata)
        .map_err(|e| Error::InvalidConfig(format!("metadata serialization: {e}")))?;
    fs::write(&meta_path, meta_text).map_err(|e| Error::io(&meta_path, e))?;
    Ok(())
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let traces_path = path.join(TRACES_FILE);
    let samples_path = path.join(SAMPLES_FILE);

    // (trace_id, workload_id, thread_id, label) keyed in file order.
    let mut headers: Vec<(String, String, u32, AnomalyLabel)> = Vec::new();
    for (line_no, line) in read_csv_rows(&traces_path)? {
        let f = split_fields(&traces_path, line_no, &line, 4)?;
        let thread_id = f[2].parse().map_err(|_| {
            Error::parse(
                display(&traces_path),
                line_no,
                format!("bad thread_id {:?}", f[2]),
            )
        })?;
        let label = AnomalyLabel::parse(f[3])?;
        headers.push((f[0].to_string(), f[1].to_string(), thread_id, label));
    }

    // Samples grouped per (trace_id, thread_id); file order within a group.
    let mut samples: HashMap<(String, u32), Vec<(u64, f64)>> = HashMap::new();
    for (line_no, line) in read_csv_rows(&samples_path)? {
        let f = split_fields(&samples_path, line_no, &line, 4)?;
        let thread_id: u32 = f[1].parse().map_err(|_| {
            Error::parse(
                display(&samples_path),
                line_no,
                format!("bad thread_id {:?}", f[1]),
            )
        })?;
        let ms: u64 = f[2].parse().map_err(|_| {
            Error::parse(
                display(&samples_path),
                line_no,
                format!("bad timestamp_ms {:?}", f[2]),
            )
        })?;
        let rate: f64 = f[3].parse().map_err(|_| {
            Error::parse(
                display(&samples_path),
                line_no,
                format!("bad heart_rate {:?}", f[3]),
            )
        })?;
        samples
            .entry((f[0].to_string(), thread_id))
            .or_default()
            .push((ms, rate));
    }

    let mut traces = Vec::with_capacity(headers.len());
    for (trace_id, workload_id, thread_id, label) in headers {
        let mut rows = samples
            .remove(&(trace_id.clone(), thread_id))
            .ok_or_else(|| Error::TraceWithoutSamples(trace_id.clone()))?;
        rows.sort_by_key(|&(ms, _)| ms);
        let points: Vec<(f64, f64)> = rows.iter().map(|&(ms, r)| (ms_to_s(ms), r)).collect();
        let sequence = HeartbeatSequence::new(trace_id, thread_id, points)?;
        traces.push(LabeledTrace::new(sequence, workload_id, label)?);
    }
    if let Some(((trace_id, _), _)) = samples.into_iter().next() {
        return Err(Error::parse(
            display(&samples_path),
            0,
            format!("samples for unknown trace {trace_id:?}"),
        ));
    }

    let meta_path = path.join(META_FILE);
    let metadata = if meta_path.exists() {
        let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        toml::from_str(&text).map_err(|e| Error::parse(display(&meta_path), 0, e.to_string()))?
    } else {
        DatasetMeta::default()
    };

    Dataset::new(traces, metadata)
}

fn open_writer(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(
        fs::File::create(path).map_err(|e| Error::io(path, e))?,
    ))
}

/// Data rows of a headed CSV file as (1-based line number, line), header
/// verified against the expected text for the file name.
fn read_csv_rows(path: &Path) -> Result<Vec<(usize, String)>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let expected_header =
        if path.ends_with(TRACES_FILE) || path.file_name().is_some_and(|n| n == TRACES_FILE) {
            TRACES_HEADER
        } else {
            SAMPLES_HEADER
        };
    let mut rows = Vec::new();
    let mut lines = BufReader::new(file).lines();
    match lines.next() {
        Some(Ok(h)) if h == expected_header => {}
        Some(Ok(h)) => {
            return Err(Error::parse(
                display(path),
                1,
                format!("bad header {h:?}, expected {expected_header:?}"),
            ))
        }
        Some(Err(e)) => return Err(Error::io(path, e)),
        None => return Err(Error::parse(display(path), 1, "missing header".to_string())),
    }
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        rows.push((i + 2, line));
    }
    Ok(rows)
}

fn split_fields<'a>(path: &Path, line_no: usize, line: &'a str, n: usize) -> Result<Vec<&'a str>> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != n {
        return Err(Error::parse(
            display(path),
            line_no,
            format!("expected {n} fields, got {}", fields.len()),
        ));
    }
    Ok(fields)
}

fn display(path: &Path) -> String {
    path.display().to_string()
}
