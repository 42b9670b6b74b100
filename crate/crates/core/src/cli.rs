//! Command-line front end. One binary covers dataset synthesis, feature
//! dumps, model training, evaluation, live serving, offline replay, trace
//! distance inspection, and a demo workload driving the emitter with real
//! threads.

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::Rng;

use crate::classify::{
    dataset_band, evaluate, features_for, fit_baseline, fit_hsa, load_bundle, median_trace_len,
    save_bundle, BaselineModel, EvalConfig, EvalOutcome, Method, TrainedBundle,
};
use crate::collectord::{
    replay, serve_stream, serve_tcp, CollectorConfig, DEFAULT_SILENCE_DEADLINE_MS, DEFAULT_STRIDE,
    DEFAULT_WINDOW,
};
use crate::dataset::{load_dataset, save_dataset};
use crate::emitter::{start, EmitterConfig, SinkSpec};
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::model::{resample_rates, WindowSpec};
use crate::record::{is_comment_or_blank, HbRecord};
use crate::seed;
use crate::similarity::{default_band, dtw, lb_keogh, CostKind};
use crate::synth::{default_profiles, generate_dataset, WorkloadProfile};

/// Traces generated per (workload, class) pair by `simulate`.
const PER_CLASS_COUNT: usize = 50;
/// Wall-clock length of the demo workload.
const DEMO_DURATION_MS: u64 = 2_000;
const DEMO_FLUSH_MS: u64 = 100;

#[derive(Parser)]
#[command(
    name = "pulsemark",
    version,
    about = "Heartbeat-based performance anomaly diagnosis for multi-threaded applications"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled synthetic heartbeat dataset.
    Simulate(SimulateArgs),
    /// Write per-trace feature vectors against healthy prototypes to CSV.
    Features(FeaturesArgs),
    /// Fit models on a full dataset and save them as a bundle.
    Train(TrainArgs),
    /// Score methods with repeated stratified splits; write a report table.
    Eval(EvalArgs),
    /// Diagnose a live heartbeat stream from stdin or a TCP socket.
    Serve(ServeArgs),
    /// Replay a recorded heartbeat stream and write its diagnoses.
    Diagnose(DiagnoseArgs),
    /// Print the alignment distance and its lower bound for two trace files.
    Dist(DistArgs),
    /// Run a short multi-threaded demo workload through the emitter.
    EmitDemo(EmitDemoArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Output dataset directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, env = "PULSEMARK_SEED", default_value_t = 42)]
    seed: u64,
    /// Workload profiles to include; all profiles when omitted.
    #[arg(value_name = "PROFILE")]
    profiles: Vec<String>,
}

#[derive(Args)]
struct FeaturesArgs {
    /// Dataset directory to read.
    #[arg(long)]
    dataset: PathBuf,
    /// Output CSV file.
    #[arg(long)]
    out: PathBuf,
    /// Samples per feature window.
    #[arg(long, default_value_t = 5)]
    window: usize,
    /// Step between feature windows, in samples.
    #[arg(long, default_value_t = 5)]
    stride: usize,
    /// Pointwise cost: abs or sq.
    #[arg(long, default_value = "sq", value_parser = parse_cost)]
    cost: CostKind,
    /// Warp band width; derived from the median trace length when omitted.
    #[arg(long)]
    band: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset directory to read.
    #[arg(long)]
    dataset: PathBuf,
    /// Output bundle directory.
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated methods to fit (lr,nb,dt,rf,hsa). The sequence model
    /// is always fitted; it serves diagnoses and anchors the features.
    #[arg(long, default_value = "lr,nb,dt,rf,hsa")]
    methods: String,
    /// Pointwise cost: abs or sq.
    #[arg(long, default_value = "sq", value_parser = parse_cost)]
    cost: CostKind,
    /// Warp band width; derived from the median trace length when omitted.
    #[arg(long)]
    band: Option<usize>,
    /// Samples per feature window.
    #[arg(long, default_value_t = 5)]
    window: usize,
    /// Step between feature windows, in samples.
    #[arg(long, default_value_t = 5)]
    stride: usize,
    #[arg(long, env = "PULSEMARK_SEED", default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct EvalArgs {
    /// Dataset directory to read.
    #[arg(long)]
    dataset: PathBuf,
    /// Output report file.
    #[arg(long, default_value = "report.csv")]
    out: PathBuf,
    /// Fraction of each class used for training.
    #[arg(long = "train-frac", default_value_t = 0.30)]
    train_frac: f64,
    /// Independent split repetitions to average over.
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    #[arg(long, env = "PULSEMARK_SEED", default_value_t = 42)]
    seed: u64,
    /// Comma-separated methods to score (lr,nb,dt,rf,hsa).
    #[arg(long, default_value = "lr,nb,dt,rf,hsa")]
    methods: String,
    /// Pointwise cost: abs or sq.
    #[arg(long, default_value = "sq", value_parser = parse_cost)]
    cost: CostKind,
    /// Warp band width; derived from the median trace length when omitted.
    #[arg(long)]
    band: Option<usize>,
    /// Samples per feature window.
    #[arg(long, default_value_t = 5)]
    window: usize,
    /// Step between feature windows, in samples.
    #[arg(long, default_value_t = 5)]
    stride: usize,
}

#[derive(Args)]
struct ServeArgs {
    /// Trained bundle directory.
    #[arg(long)]
    model: PathBuf,
    /// TCP listen address (e.g. 127.0.0.1:7777); reads stdin when omitted.
    #[arg(long)]
    listen: Option<String>,
    /// Samples per diagnosis window.
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    window: usize,
    /// New samples required between diagnoses.
    #[arg(long, default_value_t = DEFAULT_STRIDE)]
    stride: usize,
}

#[derive(Args)]
struct DiagnoseArgs {
    /// Recorded heartbeat stream file.
    #[arg(value_name = "STREAM")]
    input: PathBuf,
    /// Trained bundle directory.
    #[arg(long)]
    model: PathBuf,
    /// Samples per diagnosis window.
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    window: usize,
    /// New samples required between diagnoses.
    #[arg(long, default_value_t = DEFAULT_STRIDE)]
    stride: usize,
    /// Write diagnoses here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DistArgs {
    /// First heartbeat trace file; the second is resampled onto its length.
    #[arg(value_name = "TRACE_A")]
    a: PathBuf,
    #[arg(value_name = "TRACE_B")]
    b: PathBuf,
    /// Pointwise cost: abs or sq.
    #[arg(long, default_value = "sq", value_parser = parse_cost)]
    cost: CostKind,
    /// Warp band width; derived from the first file's length when omitted.
    #[arg(long)]
    band: Option<usize>,
}

#[derive(Args)]
struct EmitDemoArgs {
    /// Worker threads, each beating once per unit of busy work.
    #[arg(long, default_value_t = 4)]
    threads: u32,
    /// Fault to inject: memleak (work units slow down) or shutdown (workers
    /// stop early and the stream ends).
    #[arg(long, value_parser = parse_inject)]
    inject: Option<InjectKind>,
    /// Write the heartbeat stream here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = "PULSEMARK_SEED", default_value_t = 42)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum InjectKind {
    Memleak,
    Shutdown,
}

fn parse_cost(s: &str) -> std::result::Result<CostKind, String> {
    CostKind::parse(s).map_err(|e| e.to_string())
}

fn parse_inject(s: &str) -> std::result::Result<InjectKind, String> {
    match s {
        "memleak" => Ok(InjectKind::Memleak),
        "shutdown" => Ok(InjectKind::Shutdown),
        other => Err(format!(
            "unknown fault {other:?} (expected memleak or shutdown)"
        )),
    }
}

/// Entry point for the binary; returns the process exit code. A downstream
/// consumer closing our output pipe ends the run quietly, like any stream
/// tool.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(Error::Io { source, .. })
            if source.kind() == std::io::ErrorKind::BrokenPipe =>
        {
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Features(args) => cmd_features(args),
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Serve(args) => cmd_serve(args),
        Command::Diagnose(args) => cmd_diagnose(args),
        Command::Dist(args) => cmd_dist(args),
        Command::EmitDemo(args) => cmd_emit_demo(args),
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let available = default_profiles();
    let chosen: Vec<WorkloadProfile> = if args.profiles.is_empty() {
        available
    } else {
        let valid: Vec<&str> = available.iter().map(|p| p.workload_id.as_str()).collect();
        args.profiles
            .iter()
            .map(|name| {
                available
                    .iter()
                    .find(|p| p.workload_id == *name)
                    .cloned()
                    .ok_or_else(|| {
                        Error::InvalidConfig(format!(
                            "unknown profile {name:?}; valid profiles: {}",
                            valid.join(", ")
                        ))
                    })
            })
            .collect::<Result<_>>()?
    };

    let dataset = generate_dataset(&chosen, PER_CLASS_COUNT, args.seed)?;
    save_dataset(&dataset, &args.out)?;
    println!(
        "wrote {} traces ({} workloads x 3 classes x {}) to {}",
        dataset.traces.len(),
        chosen.len(),
        PER_CLASS_COUNT,
        args.out.display()
    );
    Ok(())
}

fn cmd_features(args: FeaturesArgs) -> Result<()> {
    let window = window_spec(args.window, args.stride)?;
    let dataset = load_dataset(&args.dataset)?;
    let band = args.band.unwrap_or_else(|| dataset_band(&dataset));
    let hsa = fit_hsa(dataset.traces.clone(), args.cost, band, 1)?;

    let file = File::create(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let mut out = BufWriter::new(file);
    let mut header = String::from("trace_id,label");
    for name in FeatureVector::NAMES {
        header.push(',');
        header.push_str(name);
    }
    writeln!(out, "{header}").map_err(|e| Error::io(&args.out, e))?;
    for trace in &dataset.traces {
        let values = features_for(trace, &hsa, window, args.cost, band)?;
        let mut row = format!("{},{}", trace.trace_id(), trace.label.as_str());
        for v in values {
            row.push_str(&format!(",{v}"));
        }
        writeln!(out, "{row}").map_err(|e| Error::io(&args.out, e))?;
    }
    out.flush().map_err(|e| Error::io(&args.out, e))?;
    println!(
        "wrote {} feature rows to {}",
        dataset.traces.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let window = window_spec(args.window, args.stride)?;
    let methods = Method::parse_list(&args.methods)?;
    let dataset = load_dataset(&args.dataset)?;
    let band = args.band.unwrap_or_else(|| dataset_band(&dataset));
    let expected_len = median_trace_len(&dataset);

    let hsa = fit_hsa(dataset.traces.clone(), args.cost, band, 1)?;
    let mut bundle = TrainedBundle {
        hsa,
        window,
        expected_len,
        lr: None,
        nb: None,
        dt: None,
        rf: None,
    };

    let baselines: Vec<Method> = methods
        .iter()
        .copied()
        .filter(|m| m.baseline_kind().is_some())
        .collect();
    if !baselines.is_empty() {
        let mut xs = Vec::with_capacity(dataset.traces.len());
        let mut ys = Vec::with_capacity(dataset.traces.len());
        for trace in &dataset.traces {
            xs.push(features_for(trace, &bundle.hsa, window, args.cost, band)?);
            ys.push(trace.label);
        }
        for method in baselines {
            let kind = method.baseline_kind().expect("filtered to baselines");
            let fit_seed = seed::derive_indexed(args.seed, &format!("fit/{}", method.as_str()), 0);
            match fit_baseline(kind, &xs, &ys, fit_seed)? {
                BaselineModel::LogisticRegressionSgd(m) => bundle.lr = Some(m),
                BaselineModel::GaussianNaiveBayes(m) => bundle.nb = Some(m),
                BaselineModel::DecisionTree(m) => bundle.dt = Some(m),
                BaselineModel::RandomForest(m) => bundle.rf = Some(m),
            }
        }
    }

    save_bundle(&bundle, &args.out)?;
    let names: Vec<&str> = bundle.methods().iter().map(|m| m.as_str()).collect();
    println!(
        "wrote bundle ({}; band {band}, {} training traces) to {}",
        names.join(","),
        dataset.traces.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let window = window_spec(args.window, args.stride)?;
    let methods = Method::parse_list(&args.methods)?;
    let dataset = load_dataset(&args.dataset)?;
    let config = EvalConfig {
        train_fraction: args.train_frac,
        repeats: args.repeats,
        seed: args.seed,
        methods,
        cost: args.cost,
        band: args.band,
        window,
        k_neighbors: 1,
    };
    let outcome = evaluate(&dataset, &config)?;

    let report = render_report(&outcome);
    fs::write(&args.out, report).map_err(|e| Error::io(&args.out, e))?;
    for m in &outcome.methods {
        println!(
            "{:<4} macro_f {:.4}  weighted_macro_f {:.4}  accuracy {:.4}  anomaly_recall {:.4}",
            m.method.as_str(),
            m.report.macro_f,
            m.report.weighted_macro_f,
            m.report.accuracy,
            m.report.confusion.anomaly_recall()
        );
    }
    println!(
        "wrote report ({} repeats, band {}) to {}",
        outcome.repeats,
        outcome.band,
        args.out.display()
    );
    Ok(())
}

/// Report table: one row per method, per-class F scores for every workload
/// (N healthy, A memleak, S shutdown), then overall per-class F scores,
/// macro-F, weighted macro-F, accuracy, and anomaly recall. The note column
/// on the sequence-alignment row names any baseline with a higher macro-F.
fn render_report(outcome: &EvalOutcome) -> String {
    // All methods share the same splits, so any row's workload set works.
    let workloads: Vec<&str> = outcome
        .methods
        .first()
        .map(|m| m.per_workload.iter().map(|(w, _)| w.as_str()).collect())
        .unwrap_or_default();

    let mut out = String::from("method");
    for w in &workloads {
        for class in ["N", "A", "S"] {
            out.push_str(&format!(",{w}_{class}"));
        }
    }
    out.push_str(
        ",f_normal,f_memleak,f_shutdown,macro_f,weighted_macro_f,accuracy,anomaly_recall,note\n",
    );

    for m in &outcome.methods {
        out.push_str(m.method.as_str());
        for (_, report) in &m.per_workload {
            for class in report.per_class.iter() {
                out.push_str(&format!(",{:.4}", class.f_score));
            }
        }
        for class in m.report.per_class.iter() {
            out.push_str(&format!(",{:.4}", class.f_score));
        }
        out.push_str(&format!(
            ",{:.4},{:.4},{:.4},{:.4}",
            m.report.macro_f,
            m.report.weighted_macro_f,
            m.report.accuracy,
            m.report.confusion.anomaly_recall()
        ));
        out.push(',');
        if m.method == Method::Hsa {
            let better: Vec<&str> = outcome
                .methods
                .iter()
                .filter(|b| b.method != Method::Hsa && b.report.macro_f > m.report.macro_f)
                .map(|b| b.method.as_str())
                .collect();
            if !better.is_empty() {
                out.push_str(&format!("macro-F below {}", better.join(" ")));
            }
        }
        out.push('\n');
    }
    out
}

fn cmd_serve(args: ServeArgs) -> Result<()> {
    let bundle = load_bundle(&args.model)?;
    let config = CollectorConfig {
        window: args.window,
        stride: args.stride,
        silence_deadline_ms: DEFAULT_SILENCE_DEADLINE_MS,
    };
    let stop = Arc::new(AtomicBool::new(false));
    let handler_stop = stop.clone();
    ctrlc::set_handler(move || handler_stop.store(true, Ordering::Release))
        .map_err(|e| Error::InvalidConfig(format!("cannot install interrupt handler: {e}")))?;

    let malformed = match args.listen {
        Some(addr) => {
            let listener = TcpListener::bind(&addr).map_err(|e| Error::io(&addr, e))?;
            eprintln!("listening on {addr}");
            serve_tcp(listener, io::stdout(), &bundle, config, &stop)?
        }
        None => serve_stream(
            BufReader::new(io::stdin()),
            io::stdout(),
            &bundle,
            config,
            &stop,
        )?,
    };
    eprintln!("{malformed} malformed line(s) skipped");
    Ok(())
}

fn cmd_diagnose(args: DiagnoseArgs) -> Result<()> {
    let bundle = load_bundle(&args.model)?;
    let config = CollectorConfig {
        window: args.window,
        stride: args.stride,
        silence_deadline_ms: DEFAULT_SILENCE_DEADLINE_MS,
    };
    let (diags, malformed) = replay(&args.input, &bundle, config)?;

    match &args.out {
        Some(path) => {
            let file = File::create(path).map_err(|e| Error::io(path, e))?;
            let mut out = BufWriter::new(file);
            for diag in &diags {
                writeln!(out, "{}", diag.to_line()).map_err(|e| Error::io(path, e))?;
            }
            out.flush().map_err(|e| Error::io(path, e))?;
        }
        None => {
            let stdout = io::stdout();
            let mut out = stdout.lock();
            for diag in &diags {
                writeln!(out, "{}", diag.to_line()).map_err(|e| Error::io("<stdout>", e))?;
            }
        }
    }
    eprintln!(
        "{} diagnosis lines, {malformed} malformed line(s) skipped",
        diags.len()
    );
    Ok(())
}

fn cmd_dist(args: DistArgs) -> Result<()> {
    let a = read_rates(&args.a)?;
    let b = read_rates(&args.b)?;
    let band = args.band.unwrap_or_else(|| default_band(a.len()));
    let aligned = resample_rates(&b, a.len());
    let dtw_value = dtw(&a, &aligned, args.cost, Some(band))?;
    let lb_value = lb_keogh(&a, &aligned, band, args.cost)?;
    println!("dtw {dtw_value}");
    println!("lb {lb_value}");
    Ok(())
}

/// Heart rates of every heartbeat record in a file, in file order.
fn read_rates(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path.display().to_string();
    let mut rates = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if is_comment_or_blank(line) {
            continue;
        }
        let record = HbRecord::parse(line).map_err(|msg| Error::parse(&name, i + 1, msg))?;
        rates.push(record.heart_rate);
    }
    if rates.is_empty() {
        return Err(Error::parse(&name, 0, "no heartbeat records"));
    }
    Ok(rates)
}

fn cmd_emit_demo(args: EmitDemoArgs) -> Result<()> {
    if args.threads < 1 {
        return Err(Error::InvalidConfig("threads must be >= 1".into()));
    }
    let trace_id = match args.inject {
        None => "demo-normal",
        Some(InjectKind::Memleak) => "demo-memleak",
        Some(InjectKind::Shutdown) => "demo-shutdown",
    };
    let config = EmitterConfig {
        flush_interval_ms: DEMO_FLUSH_MS,
        sink: match &args.out {
            Some(path) => SinkSpec::File(path.clone()),
            None => SinkSpec::Stdout,
        },
    };
    let mut rng = seed::rng(args.seed, "emit-demo");
    // Shutdown cuts the run somewhere in its middle; the stream then ends.
    let run_ms = match args.inject {
        Some(InjectKind::Shutdown) => (DEMO_DURATION_MS as f64 * rng.gen_range(0.2..0.8)) as u64,
        _ => DEMO_DURATION_MS,
    };
    let slowdown = args.inject == Some(InjectKind::Memleak);

    let mut session = start(&config, trace_id)?;
    let halt = Arc::new(AtomicBool::new(false));
    let mut workers = Vec::new();
    for t in 0..args.threads {
        let handle = session.register_thread(t)?;
        let halt = halt.clone();
        // Per-thread work-unit size, so threads beat at distinct rates.
        let unit: u64 = rng.gen_range(60_000..140_000);
        workers.push(thread::spawn(move || {
            let started = Instant::now();
            loop {
                let elapsed = started.elapsed().as_millis() as u64;
                if halt.load(Ordering::Acquire) || elapsed >= run_ms {
                    return;
                }
                // A leak-like fault shows up as progressively slower units.
                let factor = if slowdown {
                    1.0 + 3.0 * elapsed as f64 / DEMO_DURATION_MS as f64
                } else {
                    1.0
                };
                busy_work((unit as f64 * factor) as u64);
                handle.beat();
            }
        }));
    }

    thread::sleep(std::time::Duration::from_millis(run_ms));
    halt.store(true, Ordering::Release);
    for worker in workers {
        worker.join().expect("demo worker panicked");
    }
    session.stop();
    eprintln!(
        "emitted {trace_id} from {} threads for ~{run_ms} ms",
        args.threads
    );
    Ok(())
}

/// Spin for roughly `n` cheap arithmetic operations.
fn busy_work(n: u64) {
    let mut x = 0u64;
    for i in 0..n {
        x = x.wrapping_mul(6364136223846793005).wrapping_add(i);
    }
    std::hint::black_box(x);
}

fn window_spec(window: usize, stride: usize) -> Result<WindowSpec> {
    if window < 1 || stride < 1 {
        return Err(Error::InvalidConfig(
            "window and stride must be >= 1".into(),
        ));
    }
    Ok(WindowSpec { w: window, stride })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{evaluate, EvalConfig, Method};
    use crate::synth::{generate_dataset, WorkloadProfile};

    fn toy_outcome() -> EvalOutcome {
        let profile = WorkloadProfile {
            workload_id: "wl".into(),
            base_rate: 100.0,
            noise_sd: 0.0,
            n_samples: 24,
            sample_interval: 0.5,
            phase_amplitude: 0.0,
            phase_period: 12.0,
        };
        let dataset = generate_dataset(&[profile], 8, 7).unwrap();
        let config = EvalConfig {
            seed: 7,
            band: Some(9),
            ..EvalConfig::default()
        };
        evaluate(&dataset, &config).unwrap()
    }

    #[test]
    fn report_has_one_row_per_method_and_consistent_columns() {
        let outcome = toy_outcome();
        let report = render_report(&outcome);
        let lines: Vec<&str> = report.lines().collect();
        assert_eq!(lines.len(), 1 + Method::ALL.len());
        assert!(lines[0].starts_with("method,wl_N,wl_A,wl_S,f_normal,"));
        assert!(lines[0].ends_with(",anomaly_recall,note"));
        let columns = lines[0].split(',').count();
        for row in &lines[1..] {
            assert_eq!(row.split(',').count(), columns);
        }
        let row_names: Vec<&str> = lines[1..]
            .iter()
            .map(|l| l.split(',').next().unwrap())
            .collect();
        assert_eq!(row_names, vec!["LR", "NB", "DT", "RF", "HSA"]);
    }

    #[test]
    fn report_macro_f_column_is_the_mean_of_the_class_f_columns() {
        let outcome = toy_outcome();
        let report = render_report(&outcome);
        let header: Vec<&str> = report.lines().next().unwrap().split(',').collect();
        let idx = |name: &str| header.iter().position(|h| *h == name).unwrap();
        for row in report.lines().skip(1) {
            let cells: Vec<&str> = row.split(',').collect();
            let f: f64 = ["f_normal", "f_memleak", "f_shutdown"]
                .iter()
                .map(|c| cells[idx(c)].parse::<f64>().unwrap())
                .sum::<f64>()
                / 3.0;
            let macro_f: f64 = cells[idx("macro_f")].parse().unwrap();
            // Cells carry four decimals, so compare at that resolution.
            assert!((f - macro_f).abs() < 2e-4, "{row}");
        }
    }

    #[test]
    fn report_note_names_baselines_beating_the_alignment_row() {
        let mut outcome = toy_outcome();
        let hsa_f = outcome
            .methods
            .iter()
            .find(|m| m.method == Method::Hsa)
            .unwrap()
            .report
            .macro_f;
        for m in &mut outcome.methods {
            if m.method == Method::Lr {
                m.report.macro_f = hsa_f + 0.02;
            } else if m.method != Method::Hsa {
                m.report.macro_f = hsa_f - 0.02;
            }
        }
        let report = render_report(&outcome);
        let hsa_row = report
            .lines()
            .find(|l| l.starts_with("HSA,"))
            .unwrap()
            .to_string();
        assert!(hsa_row.ends_with(",macro-F below LR"), "{hsa_row}");
        let lr_row = report.lines().find(|l| l.starts_with("LR,")).unwrap();
        assert!(
            lr_row.ends_with(','),
            "baseline rows carry no note: {lr_row}"
        );
    }

    #[test]
    fn rate_reader_reports_the_offending_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.hb");
        std::fs::write(&path, "# header\nHB t 0 0 100\nHB t 0 garbage 100\n").unwrap();
        let err = read_rates(&path).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("expected a parse error, got {other:?}"),
        }
    }
}
