use std::fs::File;
use std::io::{BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use revstream_core::eval::{balanced_subset, compare_detectors, run_scenario, DetectorKind, PipelineConfig, ScenarioConfig, ScenarioReport};
use revstream_core::explain::DescriptionGenerator;
use revstream_core::ingest::{read_events_path, write_events, IngestOptions};
use revstream_core::learners::{HyperParams, LeafMode, ModelKind};
use revstream_core::profiles::feature_id_table;
use revstream_core::synth::{vocabulary_flip_stream, FlipConfig};
use revstream_core::{DatasetProfile, RawEvent};
use revstream_service::generator::HttpGenerator;
use revstream_service::{replay_path, ServiceConfig};

#[derive(Parser)]
#[command(name = "revstream", version, about = "Streaming review-spam detection with drift adaptation")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one experimental scenario and write its report.
    Run(RunArgs),
    /// Compare no detection, the window detector, EDDM and ADWIN on one stream.
    Compare(CompareArgs),
    /// Serve the moderator API over a CSV stream or a journal replay.
    Serve(ServeArgs),
    /// Rebuild state from a journal and write its export and metrics.
    Replay(ReplayArgs),
    /// Print the feature ID table.
    Features {
        #[arg(long, value_enum, default_value = "json")]
        format: TableFormat,
    },
    /// Write the synthetic vocabulary-flip stream as CSV.
    Synth {
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 5_000)]
        flip_at: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Json,
    Tsv,
}

#[derive(Args, Clone)]
struct InputArgs {
    /// CSV input; omit to use the synthetic vocabulary-flip stream.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value = "yelp")]
    profile: DatasetProfile,
    /// Undersample the majority class first.
    #[arg(long)]
    balanced: bool,
    /// Malformed-row fraction tolerated before ingestion fails.
    #[arg(long, default_value_t = 0.01)]
    max_malformed: f64,
}

#[derive(Args, Clone)]
struct ModelArgs {
    #[arg(long, default_value = "arfc")]
    model: ModelKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    grace_period: Option<u32>,
    #[arg(long)]
    split_confidence: Option<f64>,
    #[arg(long)]
    tie_threshold: Option<f64>,
    #[arg(long)]
    leaf_mode: Option<LeafMode>,
    #[arg(long)]
    n_trees: Option<usize>,
    /// Cold-start length of the window detector.
    #[arg(long)]
    cold_start: Option<usize>,
}

impl ModelArgs {
    fn pipeline(&self, detector: DetectorKind, profile: DatasetProfile) -> PipelineConfig {
        let d = HyperParams::default();
        let params = HyperParams {
            grace_period: self.grace_period.unwrap_or(d.grace_period),
            split_confidence: self.split_confidence.unwrap_or(d.split_confidence),
            tie_threshold: self.tie_threshold.unwrap_or(d.tie_threshold),
            leaf_mode: self.leaf_mode.unwrap_or(d.leaf_mode),
            n_trees: self.n_trees.unwrap_or(d.n_trees),
            lambda: d.lambda,
        };
        let mut cfg = PipelineConfig { model: self.model, params, detector, seed: self.seed, profile, ..Default::default() };
        if let Some(n) = self.cold_start {
            cfg.window.cold_start = n;
        }
        cfg
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    scenario: u8,
    #[arg(long, default_value = "proposed")]
    detector: DetectorKind,
    /// Defaults to 1 for scenarios 1 and 4 and 10 for scenarios 2 and 3.
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-sample window-detector reports as JSON lines.
    #[arg(long)]
    drift_log: Option<PathBuf>,
    /// Feature-selection snapshots as JSON lines.
    #[arg(long)]
    selection_log: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value = "proposed")]
    detector: DetectorKind,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    bind: String,
    #[arg(long, default_value_t = 50)]
    snapshot_every: usize,
    /// Append-only journal for the live run.
    #[arg(long)]
    journal: Option<PathBuf>,
    /// Serve the state rebuilt from this journal instead of a live run.
    #[arg(long, conflicts_with = "journal")]
    replay: Option<PathBuf>,
    #[arg(long, env = "REVSTREAM_ADMIN_TOKEN", hide_env_values = true)]
    admin_token: Option<String>,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    journal: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    metrics_out: Option<PathBuf>,
}

fn load_events(args: &InputArgs, seed: u64) -> Result<Vec<RawEvent>> {
    let events = match &args.input {
        Some(path) => {
            let opts = IngestOptions { max_malformed_fraction: args.max_malformed };
            let rep = read_events_path(path, args.profile, opts).with_context(|| format!("reading {}", path.display()))?;
            if rep.malformed > 0 {
                log::warn!("skipped {} malformed rows of {}", rep.malformed, rep.total_rows);
            }
            rep.events
        }
        None => {
            log::info!("no --input given; using the synthetic vocabulary-flip stream");
            vocabulary_flip_stream(&FlipConfig::default())
        }
    };
    if args.balanced {
        return Ok(balanced_subset(&events, seed)?);
    }
    Ok(events)
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?);
            serde_json::to_writer_pretty(&mut w, value)?;
            w.write_all(b"\n")?;
            w.flush()?;
        }
        None => println!("{}", serde_json::to_string_pretty(value)?),
    }
    Ok(())
}

fn write_lines<T: Serialize>(path: &Path, rows: impl Iterator<Item = T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    for row in rows {
        serde_json::to_writer(&mut w, &row)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Tagged<'a, T: Serialize> {
    thread: usize,
    #[serde(flatten)]
    inner: &'a T,
}

fn summary_line(r: &ScenarioReport) -> String {
    format!(
        "scenario {} {:<5} {:<8} threads {:>2}  acc {:6.2}  F(non-spam) {:6.2}  F(spam) {:6.2}  macro-F {:6.2}  drifts {:>3}  {:.1} s",
        r.scenario,
        r.model,
        r.detector,
        r.threads,
        r.accuracy * 100.0,
        r.f_nonspam * 100.0,
        r.f_spam * 100.0,
        r.macro_f * 100.0,
        r.drifts_total,
        r.runtime_seconds
    )
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let events = load_events(&a.input, a.model.seed)?;
    let threads = a.threads.unwrap_or(if matches!(a.scenario, 2 | 3) { 10 } else { 1 });
    let mut pipeline = a.model.pipeline(a.detector, a.input.profile);
    pipeline.record_reports = a.drift_log.is_some();
    let cfg = ScenarioConfig::new(a.scenario, threads, pipeline)?;
    let report = run_scenario(&cfg, &events)?;
    eprintln!("{}", summary_line(&report));
    if let Some(p) = &a.drift_log {
        write_lines(p, report.per_thread.iter().flat_map(|t| t.logs.reports.iter().map(move |r| Tagged { thread: t.thread, inner: r })))?;
    }
    if let Some(p) = &a.selection_log {
        write_lines(p, report.per_thread.iter().flat_map(|t| t.logs.selections.iter().map(move |s| Tagged { thread: t.thread, inner: s })))?;
    }
    write_json(a.out.as_deref(), &report)
}

fn cmd_compare(a: CompareArgs) -> Result<()> {
    let events = load_events(&a.input, a.model.seed)?;
    let report = compare_detectors(&a.model.pipeline(DetectorKind::Proposed, a.input.profile), &events)?;
    for r in &report.rows {
        eprintln!("{}", summary_line(r));
    }
    write_json(a.out.as_deref(), &report)
}

fn generator_from_env() -> Result<Option<Arc<dyn DescriptionGenerator>>> {
    match HttpGenerator::from_env() {
        None => Ok(None),
        Some(g) => {
            let g = g.map_err(|e| anyhow::anyhow!("description generator: {e}"))?;
            log::info!("external description generator enabled");
            Ok(Some(Arc::new(g)))
        }
    }
}

fn cmd_serve(a: ServeArgs) -> Result<()> {
    let generator = generator_from_env()?;
    let service = match &a.replay {
        Some(log) => {
            let state = replay_path(log).with_context(|| format!("replaying {}", log.display()))?;
            log::info!("replayed {} samples from {}", state.samples(), log.display());
            revstream_service::start_replayed(state, generator, a.admin_token.clone())
        }
        None => {
            let events = load_events(&a.input, a.model.seed)?;
            let config = ServiceConfig {
                pipeline: a.model.pipeline(a.detector, a.input.profile),
                snapshot_every: a.snapshot_every,
                ..Default::default()
            };
            revstream_service::start(config, events, a.journal.as_deref(), generator, a.admin_token.clone())?
        }
    };
    let addr: SocketAddr = format!("{}:{}", a.bind, a.port).parse().context("invalid bind address")?;
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(revstream_service::serve(addr, service.app.clone()))?;
    service.writer.shutdown()?;
    Ok(())
}

fn cmd_replay(a: ReplayArgs) -> Result<()> {
    let state = replay_path(&a.journal).with_context(|| format!("replaying {}", a.journal.display()))?;
    let snap = state.snapshot(true);
    if let Some(p) = &a.metrics_out {
        std::fs::write(p, serde_json::to_vec(&snap.metrics)?)?;
    }
    match &a.out {
        Some(p) => std::fs::write(p, serde_json::to_vec(&snap.export())?)?,
        None => println!("{}", serde_json::to_string(&snap.metrics)?),
    }
    Ok(())
}

fn cmd_features(format: TableFormat) -> Result<()> {
    let table = feature_id_table();
    match format {
        TableFormat::Json => println!("{}", serde_json::to_string_pretty(&table)?),
        TableFormat::Tsv => {
            println!("id\tname\tkeys");
            for e in &table {
                println!("{}\t{}\t{}", e.id, e.name, e.keys.join(","));
            }
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Cmd::Run(a) => cmd_run(a),
        Cmd::Compare(a) => cmd_compare(a),
        Cmd::Serve(a) => cmd_serve(a),
        Cmd::Replay(a) => cmd_replay(a),
        Cmd::Features { format } => cmd_features(format),
        Cmd::Synth { n, flip_at, seed, out } => {
            if flip_at > n {
                bail!("--flip-at must not exceed --n");
            }
            let events = vocabulary_flip_stream(&FlipConfig { n, flip_at, seed, ..Default::default() });
            write_events(File::create(&out)?, &events)?;
            eprintln!("wrote {} events to {}", events.len(), out.display());
            Ok(())
        }
    }
}
