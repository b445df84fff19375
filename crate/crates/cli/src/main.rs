//! Command-line surface for the single-packet Modbus TCP intrusion-detection
//! pipeline: capture extraction, labelling, splitting, training, evaluation,
//! multi-seed experiments, cap sweeps, the factorial grid, synthetic traffic
//! generation, and summary statistics.
//!
//! Exit codes: 0 success, 1 usage/config error, 2 data-format error,
//! 3 run failure.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use sphbi::codec::Approach;
use sphbi::dataset::{
    self, read_extracted, read_records, write_extracted, write_records, RecordStore, SplitSpec,
    Splits,
};
use sphbi::dissect::{dissect, SkipReason};
use sphbi::error::Error;
use sphbi::experiments::{
    cap_sweep, default_seeds, factorial, multi_seed, paired_followup, prepare, train,
    FactorialFactors, Ledger, RunConfig,
};
use sphbi::label::{
    check_offset, label_corpus, read_attack_log, FileTimestamps, LengthTable, OffsetGrid,
};
use sphbi::metrics::evaluate;
use sphbi::models::{load_checkpoint, save_checkpoint, Task};
use sphbi::nn::{Act, OptimizerKind};
use sphbi::stats::{welch_t, StatSummary};
use sphbi::survey::{read_manifest, scan_directory, ManifestEntry};
use sphbi::synth::{write_outputs, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "sphbi",
    about = "Single-packet binary-image intrusion detection for Modbus TCP",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read pcap file(s), dissect Modbus TCP packets, write an extraction file.
    Extract(ExtractArgs),
    /// Label an extraction file using an attack-log CSV.
    Label(LabelArgs),
    /// Stratified train/val/test split of a record file.
    Split(SplitArgs),
    /// Train one classifier configuration.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a test record file.
    Evaluate(EvaluateArgs),
    /// Multi-seed replication of one configuration.
    Seeds(SeedsArgs),
    /// Accuracy-vs-cap sweep across approaches.
    Sweep(SweepArgs),
    /// 2^4 factorial experiment over training factors.
    Factorial(FactorialArgs),
    /// Generate a synthetic capture with ground truth.
    Synth(SynthArgs),
    /// Summary statistics utilities.
    Stats(StatsArgs),
}

#[derive(Args)]
struct ExtractArgs {
    /// Pcap file or directory of pcap files.
    #[arg(long)]
    pcap: PathBuf,
    /// Capture manifest CSV (file_path,capture_class,scenario).
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Output extraction file (SPX1).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LabelArgs {
    /// Extraction file from `extract`.
    #[arg(long)]
    records: PathBuf,
    /// Attack log CSV (start_ts,end_ts,attack_type,scenario).
    #[arg(long)]
    attack_log: PathBuf,
    /// Output record file (SPB1).
    #[arg(long)]
    out: PathBuf,
    /// Expected-length table JSON (defaults to the built-in table).
    #[arg(long)]
    length_table: Option<PathBuf>,
    /// Also run the timestamp-offset analysis and print its report.
    #[arg(long)]
    offset_check: bool,
}

#[derive(Args)]
struct SplitArgs {
    /// Labelled record file (SPB1).
    #[arg(long)]
    records: PathBuf,
    /// Train,val,test fractions.
    #[arg(long, default_value = "0.8,0.1,0.1")]
    ratios: String,
    /// Output directory (train.spb, val.spb, test.spb).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    task: String,
    #[arg(long)]
    approach: String,
    /// Per-class cap on train and validation.
    #[arg(long)]
    cap: usize,
    #[arg(long)]
    seed: u64,
    /// Directory holding train.spb and val.spb (from `split`).
    #[arg(long)]
    splits: PathBuf,
    /// Output checkpoint path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// sgd | adam
    #[arg(long)]
    optimizer: Option<String>,
    /// sigmoid | tanh
    #[arg(long)]
    activation: Option<String>,
    #[arg(long)]
    batchnorm: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Test record file (never capped).
    #[arg(long)]
    test: PathBuf,
    /// Report JSON output path.
    #[arg(long)]
    report: PathBuf,
    /// Optional confusion-matrix CSV output path.
    #[arg(long)]
    matrix_csv: Option<PathBuf>,
}

#[derive(Args)]
struct SeedsArgs {
    /// Experiment config JSON (see README for the schema).
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated seed list; defaults to 42,0,1,...,8.
    #[arg(long)]
    seeds: Option<String>,
    /// Worker threads (results are independent of this).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    /// Experiment config JSON.
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated cap list.
    #[arg(long, default_value = "500,1000,2000,5000,10000,20000,50000")]
    caps: String,
    /// Comma-separated approaches to sweep.
    #[arg(long, default_value = "2b,3,3b")]
    approaches: String,
    #[arg(long)]
    seeds: Option<String>,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct FactorialArgs {
    /// Experiment config JSON (supplies splits, cap, seed, ledger).
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "2b")]
    approach: String,
    /// Run the multi-seed follow-up of the winner vs the baseline with a
    /// paired t-test, over these seeds.
    #[arg(long)]
    followup_seeds: Option<String>,
}

#[derive(Args)]
struct SynthArgs {
    /// Scenario config JSON; omit to use a preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// easy-full | hard-small
    #[arg(long, default_value = "easy-full")]
    preset: String,
    #[arg(long, default_value = "42")]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    #[command(subcommand)]
    which: StatsCommand,
}

#[derive(Subcommand)]
enum StatsCommand {
    /// Welch's t-test from two (mean,std,n) summaries.
    Welch {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
    },
}

/// Experiment config file shared by seeds/sweep/factorial.
#[derive(Debug, Deserialize)]
struct ExperimentFile {
    task: String,
    approach: String,
    cap: usize,
    #[serde(default)]
    seed: u64,
    epochs: Option<usize>,
    batch_size: Option<usize>,
    lr: Option<f64>,
    optimizer: Option<String>,
    activation: Option<String>,
    #[serde(default)]
    batchnorm: bool,
    /// Directory with train.spb / val.spb / test.spb.
    splits_dir: PathBuf,
    /// JSON-lines results ledger; completed runs are reused.
    ledger: Option<PathBuf>,
}

impl ExperimentFile {
    fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io { source: e, path: Some(path.to_path_buf()) })?;
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("experiment config: {e}")))
    }

    fn run_config(&self) -> Result<RunConfig, Error> {
        let task = Task::from_str(&self.task)?;
        let approach = Approach::from_str(&self.approach)?;
        let mut config = RunConfig::defaults(task, approach, self.cap, self.seed);
        if let Some(e) = self.epochs {
            config.epochs = e;
        }
        if let Some(b) = self.batch_size {
            config.batch_size = b;
        }
        if let Some(lr) = self.lr {
            config.lr = lr;
        }
        if let Some(o) = &self.optimizer {
            config.optimizer = OptimizerKind::from_str(o)?;
        }
        if let Some(a) = &self.activation {
            config.activation = Some(Act::from_str(a)?);
        }
        config.batchnorm = self.batchnorm;
        Ok(config)
    }

    fn ledger(&self) -> Result<Ledger, Error> {
        match &self.ledger {
            Some(p) => Ledger::open(p),
            None => Ok(Ledger::ephemeral()),
        }
    }
}

fn main() {
    // Usage errors (including clap's) exit 1.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are not errors.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Config(_) => 1,
                Error::Format(_) | Error::Io { .. } => 2,
                Error::Shape(_) | Error::Run(_) => 3,
            };
            std::process::exit(code);
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Extract(a) => cmd_extract(a),
        Command::Label(a) => cmd_label(a),
        Command::Split(a) => cmd_split(a),
        Command::Train(a) => cmd_train(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Seeds(a) => cmd_seeds(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Factorial(a) => cmd_factorial(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Stats(a) => match a.which {
            StatsCommand::Welch { a, b } => cmd_stats_welch(&a, &b),
        },
    }
}

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

fn set_jobs(jobs: Option<usize>) {
    if let Some(n) = jobs {
        // Ignore failure if a pool already exists (results are identical
        // under any worker count anyway).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn parse_seed_list(s: Option<&str>) -> Result<Vec<u64>, Error> {
    match s {
        None => Ok(default_seeds()),
        Some(s) => s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u64>()
                    .map_err(|_| Error::Config(format!("bad seed: {t}")))
            })
            .collect(),
    }
}

fn parse_usize_list(s: &str) -> Result<Vec<usize>, Error> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("bad number: {t}")))
        })
        .collect()
}

fn parse_approaches(s: &str) -> Result<Vec<Approach>, Error> {
    s.split(',').map(|t| Approach::from_str(t.trim())).collect()
}

fn parse_summary(s: &str) -> Result<StatSummary, Error> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!("expected mean,std,n got: {s}")));
    }
    let mean: f64 = parts[0]
        .parse()
        .map_err(|_| Error::Config(format!("bad mean: {}", parts[0])))?;
    let std: f64 = parts[1]
        .parse()
        .map_err(|_| Error::Config(format!("bad std: {}", parts[1])))?;
    let n: usize = parts[2]
        .parse()
        .map_err(|_| Error::Config(format!("bad n: {}", parts[2])))?;
    Ok(StatSummary::from_moments(mean, std, n))
}

fn load_splits(dir: &Path, need_test: bool) -> Result<(Splits, RecordStore), Error> {
    let train = RecordStore::new(read_records(dir.join("train.spb"))?);
    let val = RecordStore::new(read_records(dir.join("val.spb"))?);
    let test_path = dir.join("test.spb");
    let test = if test_path.exists() || need_test {
        RecordStore::new(read_records(test_path)?)
    } else {
        RecordStore::default()
    };
    Ok((
        Splits {
            train,
            val,
            test: test.clone(),
            warnings: Vec::new(),
        },
        test,
    ))
}

/// Deterministic provenance sidecar: arguments plus input digests. No
/// wall-clock fields, so identical inputs give byte-identical outputs.
fn write_sidecar(
    out: &Path,
    tool: &str,
    args: serde_json::Value,
    inputs: &[&Path],
) -> Result<(), Error> {
    let mut digests = serde_json::Map::new();
    for input in inputs {
        if input.is_file() {
            let bytes = std::fs::read(input)
                .map_err(|e| Error::Io { source: e, path: Some(input.to_path_buf()) })?;
            let mut h = Sha256::new();
            h.update(&bytes);
            let hex: String = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
            digests.insert(input.display().to_string(), serde_json::Value::String(hex));
        }
    }
    let meta = serde_json::json!({
        "tool": tool,
        "version": env!("CARGO_PKG_VERSION"),
        "args": args,
        "input_sha256": digests,
    });
    let path = out.with_extension(format!(
        "{}meta.json",
        out.extension()
            .map(|e| format!("{}.", e.to_string_lossy()))
            .unwrap_or_default()
    ));
    std::fs::write(&path, serde_json::to_string_pretty(&meta).expect("meta serializes"))
        .map_err(|e| Error::Io { source: e, path: Some(path) })?;
    Ok(())
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), Error> {
    std::fs::write(path, serde_json::to_string_pretty(value).expect("report serializes"))
        .map_err(|e| Error::Io { source: e, path: Some(path.to_path_buf()) })
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn cmd_extract(a: ExtractArgs) -> Result<(), Error> {
    let manifest: Vec<ManifestEntry> = match &a.manifest {
        Some(p) => read_manifest(p)?,
        None => Vec::new(),
    };
    let survey = scan_directory(&a.pcap, &manifest)?;
    print!("{survey}");

    let files = sphbi::survey::list_pcap_files(&a.pcap)?;
    let mut records = Vec::new();
    let mut skips: u64 = 0;
    for file in &files {
        let contents = match sphbi::pcap::read_pcap_file(file) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("skipping {}: {e}", file.display());
                continue;
            }
        };
        for pkt in &contents.packets {
            match dissect(pkt) {
                Ok(fields) => records.push(dataset::ExtractedRecord::from_fields(&fields)),
                Err(_) => skips += 1,
            }
        }
    }
    write_extracted(&a.out, &records)?;
    write_sidecar(
        &a.out,
        "extract",
        serde_json::json!({ "pcap": a.pcap, "manifest": a.manifest }),
        &files.iter().map(PathBuf::as_path).collect::<Vec<_>>(),
    )?;
    println!(
        "extracted {} Modbus packets ({} skipped) from {} file(s) -> {}",
        records.len(),
        skips,
        files.len(),
        a.out.display()
    );
    let _ = SkipReason::ALL;
    Ok(())
}

fn cmd_label(a: LabelArgs) -> Result<(), Error> {
    let records = read_extracted(&a.records)?;
    let windows = read_attack_log(&a.attack_log)?;
    let table = match &a.length_table {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Io { source: e, path: Some(p.clone()) })?;
            LengthTable::from_json(&text)?
        }
        None => LengthTable::default(),
    };

    if a.offset_check {
        let files = [FileTimestamps {
            name: a.records.display().to_string(),
            packet_ts: records.iter().map(|r| r.ts_us).collect(),
        }];
        let report = check_offset(&files, &windows, OffsetGrid::default())?;
        println!("offset check:");
        for f in &report.per_file {
            println!(
                "  {}: window overlap {:.1}%, best offset {:+.1}s (coverage {:.1}%){}",
                f.file,
                100.0 * f.window_overlap_fraction,
                f.best_offset_us as f64 / 1e6,
                100.0 * f.coverage_at_best,
                f.warning.as_deref().map(|w| format!("  WARNING: {w}")).unwrap_or_default()
            );
        }
    }

    let (labeled, summary) = label_corpus(&records, &windows, table);
    write_records(&a.out, &labeled)?;
    write_sidecar(
        &a.out,
        "label",
        serde_json::json!({ "records": a.records, "attack_log": a.attack_log }),
        &[a.records.as_path(), a.attack_log.as_path()],
    )?;
    println!("{summary}");
    println!("\nwrote {} labelled records -> {}", labeled.len(), a.out.display());
    Ok(())
}

fn cmd_split(a: SplitArgs) -> Result<(), Error> {
    let ratios: Vec<f64> = a
        .ratios
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad ratio: {t}")))
        })
        .collect::<Result<_, _>>()?;
    if ratios.len() != 3 {
        return Err(Error::Config("expected three ratios: train,val,test".into()));
    }
    let spec = SplitSpec::new(ratios[0], ratios[1], ratios[2])?;
    let store = RecordStore::new(read_records(&a.records)?);
    let splits = dataset::split(&store, &spec)?;
    for w in &splits.warnings {
        eprintln!("warning: {w}");
    }
    std::fs::create_dir_all(&a.out)
        .map_err(|e| Error::Io { source: e, path: Some(a.out.clone()) })?;
    for (name, part) in [
        ("train.spb", &splits.train),
        ("val.spb", &splits.val),
        ("test.spb", &splits.test),
    ] {
        let path = a.out.join(name);
        write_records(&path, &part.records)?;
        write_sidecar(
            &path,
            "split",
            serde_json::json!({ "records": a.records, "ratios": a.ratios }),
            &[a.records.as_path()],
        )?;
    }
    println!(
        "{:<20} {:>10} {:>10} {:>10}",
        "class", "train", "val", "test"
    );
    let (tc, vc, sc) = (
        splits.train.class_counts(),
        splits.val.class_counts(),
        splits.test.class_counts(),
    );
    for label in sphbi::label::ClassLabel::ALL {
        let c = label as usize;
        println!(
            "{:<20} {:>10} {:>10} {:>10}",
            label.name(),
            tc[c],
            vc[c],
            sc[c]
        );
    }
    Ok(())
}

fn cmd_train(a: TrainArgs) -> Result<(), Error> {
    let task = Task::from_str(&a.task)?;
    let approach = Approach::from_str(&a.approach)?;
    let mut config = RunConfig::defaults(task, approach, a.cap, a.seed);
    if let Some(e) = a.epochs {
        config.epochs = e;
    }
    if let Some(b) = a.batch {
        config.batch_size = b;
    }
    if let Some(lr) = a.lr {
        config.lr = lr;
    }
    if let Some(o) = &a.optimizer {
        config.optimizer = OptimizerKind::from_str(o)?;
    }
    if let Some(act) = &a.activation {
        config.activation = Some(Act::from_str(act)?);
    }
    config.batchnorm = a.batchnorm;

    let (splits, _) = load_splits(&a.splits, false)?;
    let data = prepare(task, approach, a.cap, &splits)?;
    println!(
        "training {} approach {} (cap {}, seed {}): {} train / {} val samples, {} params",
        task,
        approach,
        a.cap,
        a.seed,
        data.train.len(),
        data.val.len(),
        config.model_spec()?.param_count
    );
    let outcome = train(&config, &data)?;
    save_checkpoint(&a.out, &outcome.checkpoint)?;
    write_sidecar(
        &a.out,
        "train",
        serde_json::to_value(&config).expect("config serializes"),
        &[a.splits.join("train.spb").as_path(), a.splits.join("val.spb").as_path()],
    )?;
    for s in outcome.log.iter().rev().take(3).rev() {
        println!(
            "epoch {:>3}: train loss {:.4}, val loss {:.4}{}",
            s.epoch,
            s.train_loss,
            s.val_loss,
            if s.is_best { "  (best)" } else { "" }
        );
    }
    println!(
        "best epoch {} (val loss {:.4}), {:.1}s -> {}",
        outcome.best_epoch,
        outcome.best_val_loss,
        outcome.wall_secs,
        a.out.display()
    );
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<(), Error> {
    let ckpt = load_checkpoint(&a.checkpoint)?;
    let test = RecordStore::new(read_records(&a.test)?);
    let report = evaluate(&ckpt, &test)?;
    write_json(&a.report, &report)?;
    if let Some(csv_path) = &a.matrix_csv {
        std::fs::write(csv_path, report.matrix.to_csv())
            .map_err(|e| Error::Io { source: e, path: Some(csv_path.clone()) })?;
    }
    println!(
        "accuracy {:.4} over {} test records",
        report.accuracy, report.evaluated
    );
    for m in &report.per_class {
        println!(
            "  {:<20} n={:<9} recall {}  precision {}",
            m.class,
            m.test_count,
            m.recall.map(|r| format!("{r:.4}")).unwrap_or_else(|| "n/a".into()),
            m.precision.map(|p| format!("{p:.4}")).unwrap_or_else(|| "n/a".into()),
        );
    }
    if let Some(p) = report.attack_precision {
        println!("  attack precision {p:.4}");
    }
    println!("report -> {}", a.report.display());
    Ok(())
}

fn cmd_seeds(a: SeedsArgs) -> Result<(), Error> {
    set_jobs(a.jobs);
    let file = ExperimentFile::load(&a.config)?;
    let config = file.run_config()?;
    let seeds = parse_seed_list(a.seeds.as_deref())?;
    let (splits, test) = load_splits(&file.splits_dir, true)?;
    let data = prepare(config.task, config.approach, config.cap, &splits)?;
    let mut ledger = file.ledger()?;
    let result = multi_seed(&config, &seeds, &data, &test, &mut ledger)?;
    for r in &result.per_seed {
        println!(
            "seed {:>3}: accuracy {:.4} (best epoch {}){}",
            r.seed,
            r.accuracy,
            r.best_epoch,
            if r.from_ledger { "  [ledger]" } else { "" }
        );
    }
    for (seed, err) in &result.failed {
        println!("seed {seed:>3}: FAILED: {err}");
    }
    let s = &result.summary;
    println!(
        "accuracy: {:.1} +- {:.1}% (n={}), 95% CI [{:.1}, {:.1}]",
        s.mean, s.std, s.n, s.ci_lo, s.ci_hi
    );
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> Result<(), Error> {
    set_jobs(a.jobs);
    let file = ExperimentFile::load(&a.config)?;
    let base = file.run_config()?;
    let caps = parse_usize_list(&a.caps)?;
    let approaches = parse_approaches(&a.approaches)?;
    let seeds = parse_seed_list(a.seeds.as_deref())?;
    let (splits, test) = load_splits(&file.splits_dir, true)?;
    let mut ledger = file.ledger()?;
    let result = cap_sweep(&base, &approaches, &caps, &seeds, &splits, &test, &mut ledger)?;
    std::fs::write(&a.out, result.to_csv())
        .map_err(|e| Error::Io { source: e, path: Some(a.out.clone()) })?;
    for row in &result.rows {
        println!(
            "approach {:<3} cap {:>6}: {:.1} +- {:.1}%  CI [{:.1}, {:.1}]",
            row.approach.id(),
            row.cap,
            row.summary.mean,
            row.summary.std,
            row.summary.ci_lo,
            row.summary.ci_hi
        );
    }
    println!("sweep CSV -> {}", a.out.display());
    Ok(())
}

fn cmd_factorial(a: FactorialArgs) -> Result<(), Error> {
    let file = ExperimentFile::load(&a.config)?;
    let approach = Approach::from_str(&a.approach)?;
    let (splits, test) = load_splits(&file.splits_dir, true)?;
    let mut ledger = file.ledger()?;
    let factors = FactorialFactors::default();
    let result = factorial(
        approach,
        &factors,
        file.cap,
        file.seed,
        &splits,
        &test,
        &mut ledger,
    )?;
    println!(
        "{:<10} {:<8} {:<9} {:<6} {:<5} accuracy",
        "task", "act", "batchnorm", "lr", "batch"
    );
    for cell in &result.cells {
        println!(
            "{:<10} {:<8} {:<9} {:<6} {:<5} {:.4}",
            cell.task.to_string(),
            cell.config.activation().to_string(),
            cell.config.batchnorm,
            cell.config.lr,
            cell.config.batch_size,
            cell.accuracy
        );
    }
    let best = &result.cells[result.best_multiclass];
    println!(
        "\nbinary spread across grid: {:.3}pp",
        result.binary_spread_pp
    );
    println!(
        "best multiclass config: activation {}, batchnorm {}, lr {}, batch {} -> {:.4}",
        best.config.activation(),
        best.config.batchnorm,
        best.config.lr,
        best.config.batch_size,
        best.accuracy
    );

    if let Some(seed_list) = &a.followup_seeds {
        let seeds = parse_seed_list(Some(seed_list))?;
        let baseline = RunConfig::defaults(Task::Multiclass, approach, file.cap, file.seed);
        let (w, b, t) = paired_followup(&best.config, &baseline, &seeds, &splits, &test, &mut ledger)?;
        println!(
            "follow-up: winner {:.1} +- {:.1}% vs baseline {:.1} +- {:.1}%, paired t = {:.3}, p = {:.3}",
            w.summary.mean, w.summary.std, b.summary.mean, b.summary.std, t.t, t.p
        );
    }
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> Result<(), Error> {
    let cfg = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Io { source: e, path: Some(path.clone()) })?;
            ScenarioConfig::from_json(&text)?
        }
        None => match a.preset.as_str() {
            "easy-full" => ScenarioConfig::easy_full(a.seed),
            "hard-small" => ScenarioConfig::hard_small(a.seed),
            other => {
                return Err(Error::Config(format!(
                    "unknown preset {other} (easy-full | hard-small)"
                )))
            }
        },
    };
    let paths = write_outputs(&cfg, &a.out)?;
    println!(
        "scenario '{}' (seed {}) -> {}",
        cfg.name,
        cfg.seed,
        a.out.display()
    );
    println!("  pcap:         {}", paths.pcap.display());
    println!("  attack log:   {}", paths.attack_log.display());
    println!("  ground truth: {}", paths.ground_truth.display());
    println!("  manifest:     {}", paths.manifest.display());
    Ok(())
}

fn cmd_stats_welch(a: &str, b: &str) -> Result<(), Error> {
    let sa = parse_summary(a)?;
    let sb = parse_summary(b)?;
    let r = welch_t(&sa, &sb)?;
    println!("t = {:.4}, df = {:.2}, p = {:.4}", r.t, r.df, r.p);
    Ok(())
}
