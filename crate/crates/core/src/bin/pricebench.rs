use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pricebench::dataset::{self, CleaningConfig, OutlierConfig, SynthConfig};
use pricebench::harness::{
    self, emit_report, run_benchmark, score_records, BenchmarkConfig, MethodConfig, ReportBundle, ReportFormat,
};
use pricebench::mes::{MesReport, Weights};
use pricebench::{criteria, Error, Result};

#[derive(Parser)]
#[command(
    name = "pricebench",
    version,
    about = "Benchmark regression pipelines on equipment listings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic listings CSV.
    Synth(SynthArgs),
    /// Run the cleaning pipeline on a listings CSV.
    Clean(CleanArgs),
    /// Run a benchmark from a TOML config.
    Bench(BenchArgs),
    /// Recompute MES from a criteria CSV with new weights.
    Score(ScoreArgs),
    /// Re-emit report files from a JSON bundle.
    Report(ReportArgs),
    /// Serve the adapter protocol on stdio with a mean predictor.
    #[command(hide = true)]
    MockAdapter {
        #[arg(long, default_value = "mean")]
        behavior: String,
    },
}

#[derive(Args)]
struct SynthArgs {
    /// TOML file with generator settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n_models: Option<usize>,
    #[arg(long)]
    samples_per_model: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, short)]
    out: PathBuf,
    /// Also write the injected duplicates, outliers and missing cells as JSON.
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(Args)]
struct CleanArgs {
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    /// Rejected rows with their reason.
    #[arg(long)]
    rejections: Option<PathBuf>,
    #[arg(long, default_value_t = 0.99)]
    confidence: f64,
    #[arg(long, default_value_t = dataset::DEFAULT_MIN_MODEL_COUNT)]
    min_model_count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Skip malformed rows instead of failing.
    #[arg(long)]
    lenient: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, short)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Seconds for every automated method.
    #[arg(long)]
    budget: Option<f64>,
    /// e.g. `corr=50,exp=40,comp=10`
    #[arg(long)]
    weights: Option<Weights>,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "json,csv,plotdata")]
    format: Vec<ReportFormat>,
}

#[derive(Args)]
struct ScoreArgs {
    /// Per-repetition criteria CSV as written by `bench`.
    #[arg(long, short)]
    criteria: PathBuf,
    #[arg(long, default_value = "corr=50,exp=40,comp=10")]
    weights: Weights,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Write `score.json` and one `mes_<subset>.csv` per subset here.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long, short)]
    bundle: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "json,csv,plotdata")]
    format: Vec<ReportFormat>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?))
}

fn io_err(path: &Path, e: io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn synth(args: SynthArgs) -> Result<ExitCode> {
    let mut cfg = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| io_err(p, e))?;
            toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?
        }
        None => SynthConfig::default(),
    };
    cfg.n_models = args.n_models.unwrap_or(cfg.n_models);
    cfg.samples_per_model = args.samples_per_model.unwrap_or(cfg.samples_per_model);
    cfg.seed = args.seed.unwrap_or(cfg.seed);
    let out = dataset::synth_generate_labeled(&cfg)?;
    dataset::write_csv(&out.dataset, &args.out)?;
    if let Some(path) = &args.labels {
        let mut w = create(path)?;
        serde_json::to_writer_pretty(&mut w, &out.injections)?;
        w.flush().map_err(|e| io_err(path, e))?;
    }
    eprintln!("wrote {} rows to {}", out.dataset.len(), args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn clean(args: CleanArgs) -> Result<ExitCode> {
    let raw = if args.lenient {
        let (d, errors) = dataset::ingest_csv_lenient(&args.input)?;
        for e in &errors {
            eprintln!("skipped line {}: {}: {}", e.line, e.column, e.reason);
        }
        d
    } else {
        dataset::ingest_csv(&args.input)?
    };
    let cfg = CleaningConfig {
        outliers: OutlierConfig::with_confidence(args.confidence),
        min_model_count: args.min_model_count,
        impute_seed: args.seed,
        ..CleaningConfig::default()
    };
    let report = dataset::clean(&raw, &cfg)?;
    dataset::write_csv(&report.dataset, &args.out)?;
    if let Some(path) = &args.rejections {
        let mut w = csv::Writer::from_writer(create(path)?);
        w.write_record(["source_id", "model", "price", "working_hours", "reason"])?;
        for r in &report.rejected {
            w.write_record([
                r.listing.source_id.as_str(),
                r.listing.model.as_str(),
                &r.listing.price.to_string(),
                &r.listing.working_hours.map(|h| h.to_string()).unwrap_or_default(),
                r.reason.as_str(),
            ])?;
        }
        w.flush().map_err(|e| io_err(path, e))?;
    }
    eprintln!(
        "{} -> {} rows: {} incomplete, {} duplicates, {} outliers, {} imputed, {} rare-model rows",
        raw.len(),
        report.dataset.len(),
        report.dropped_incomplete,
        report.duplicates_removed,
        report.rejected.len(),
        report.imputed,
        report.rare_removed
    );
    Ok(ExitCode::SUCCESS)
}

fn print_report(r: &MesReport) {
    println!("subset {}", r.subset);
    println!(
        "  {:>4}  {:<16} {:>10} {:>12} {:>4} {:>10} {:>16}",
        "rank", "method", "mape", "seconds", "exp", "resp", "mes"
    );
    for m in &r.methods {
        println!(
            "  {:>4}  {:<16} {:>10.4} {:>12.2} {:>4} {:>10} {:>8.3} ± {:.3}",
            m.rank,
            m.record.method,
            m.record.s_corr,
            m.record.s_comp,
            m.record.s_exp.level(),
            m.record.s_resp,
            m.mes_mean,
            m.mes_std
        );
    }
}

fn bench(args: BenchArgs) -> Result<ExitCode> {
    let mut cfg = BenchmarkConfig::load(&args.config)?;
    cfg.seed = args.seed.unwrap_or(cfg.seed);
    cfg.repetitions = args.repetitions.unwrap_or(cfg.repetitions);
    if let Some(w) = args.weights {
        cfg.weights = w;
    }
    if let Some(b) = args.budget {
        for m in &mut cfg.methods {
            match m {
                MethodConfig::AutomlLite {
                    budget_seconds,
                    budget_iterations,
                    ..
                } => {
                    *budget_seconds = Some(b);
                    *budget_iterations = None;
                }
                MethodConfig::External { budget_seconds, .. } => *budget_seconds = Some(b),
                MethodConfig::Manual { .. } => {}
            }
        }
    }
    let out = args
        .out
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("bench-out"));
    let bundle = run_benchmark(&cfg)?;
    for r in &bundle.reports {
        print_report(r);
    }
    for path in emit_report(&bundle, &args.format, &out)? {
        eprintln!("wrote {}", path.display());
    }
    if bundle.is_partial() {
        eprintln!("{} of {} cells failed", bundle.failed_cells(), bundle.cells.len());
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn score(args: ScoreArgs) -> Result<ExitCode> {
    let file = File::open(&args.criteria).map_err(|e| io_err(&args.criteria, e))?;
    let records = criteria::read_criteria_csv(file)?;
    let reports = score_records(&records, &args.weights, args.alpha)?;
    for r in &reports {
        print_report(r);
    }
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let path = dir.join("score.json");
        let mut w = create(&path)?;
        serde_json::to_writer_pretty(&mut w, &reports)?;
        w.flush().map_err(|e| io_err(&path, e))?;
        for r in &reports {
            r.write_csv(create(&dir.join(format!("mes_{}.csv", r.subset)))?)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn report(args: ReportArgs) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&args.bundle).map_err(|e| io_err(&args.bundle, e))?;
    let bundle = ReportBundle::from_json(&text)?;
    for path in emit_report(&bundle, &args.format, &args.out)? {
        eprintln!("wrote {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Clean(a) => clean(a),
        Command::Bench(a) => bench(a),
        Command::Score(a) => score(a),
        Command::Report(a) => report(a),
        Command::MockAdapter { behavior } => behavior.parse().and_then(|b| {
            let stdin = io::stdin();
            harness::mock::serve(b, stdin.lock(), io::stdout().lock()).map_err(|e| io_err(Path::new("<stdio>"), e))?;
            Ok(ExitCode::SUCCESS)
        }),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(1)
    })
}
