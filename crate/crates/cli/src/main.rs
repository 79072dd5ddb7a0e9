use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Mutex;

use clap::{Parser, Subcommand, ValueEnum};
use log::{error, info};
use wcp_core::features::{feature_names, write_feature_csv};
use wcp_core::pipeline::{
    classify_features_file, ingest, manifest_csv, render_rasters, run_cases, run_pipeline, write_phantom_set,
    PhantomSpec, PipelineConfig, RunReport, Stage, FEATURES_FILE, MANIFEST_FILE,
};

/// Contourlet parametric imaging and lesion classification for breast
/// ultrasound images.
#[derive(Parser, Debug)]
#[command(name = "wcp", version)]
struct Cli {
    /// Run configuration (flat TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Dataset root; overrides the config.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for per-case processing (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Stage to run when no subcommand is given.
    #[arg(long, value_enum, default_value_t = StageArg::Run)]
    stage: StageArg,
    /// More log output (-v debug, -vv trace).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum StageArg {
    Ingest,
    Segment,
    Transform,
    Features,
    Classify,
    Run,
    Render,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List cases and labels; writes manifest.csv.
    Ingest,
    /// Despeckle, normalize and segment every case.
    Segment,
    /// Contourlet subbands plus CP and WCP rasters for every case.
    Transform,
    /// Per-case features; writes features.csv.
    Features,
    /// Cross-validate classifiers on a feature table; writes report.json.
    Classify {
        /// Feature CSV (default: <out>/features.csv).
        #[arg(long)]
        features: Option<PathBuf>,
    },
    /// Full pipeline: features, cross-validation and report.
    Run,
    /// False-colour PNGs for every WCPG raster under a directory.
    Render {
        /// Directory to scan (default: <out>/cases).
        dir: Option<PathBuf>,
    },
    /// Write a synthetic two-class phantom dataset.
    Phantom {
        dir: PathBuf,
        #[arg(long, default_value_t = 40)]
        cases: usize,
        #[arg(long, default_value_t = 256)]
        side: usize,
    },
    /// Print the default configuration.
    DefaultConfig,
}

/// Log sink writing to stderr and, once opened, to logs/run.log.
struct Tee {
    file: Mutex<Option<File>>,
}

static TEE: Tee = Tee {
    file: Mutex::new(None),
};

struct TeeWriter;

impl Write for TeeWriter {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        io::stderr().write_all(buf)?;
        if let Some(f) = TEE.file.lock().unwrap().as_mut() {
            f.write_all(buf)?;
        }
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        if let Some(f) = TEE.file.lock().unwrap().as_mut() {
            f.flush()?;
        }
        io::stderr().flush()
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Info,
        1 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_env("WCP_LOG")
        .format_timestamp(None)
        .target(env_logger::Target::Pipe(Box::new(TeeWriter)))
        .init();
}

fn open_run_log(out: &Path) -> Result<(), String> {
    let dir = out.join("logs");
    fs::create_dir_all(&dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let path = dir.join("run.log");
    let f = File::create(&path).map_err(|e| format!("cannot create {}: {e}", path.display()))?;
    *TEE.file.lock().unwrap() = Some(f);
    Ok(())
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, String> {
    let mut c = match &cli.config {
        Some(p) => PipelineConfig::load(p).map_err(|e| e.to_string())?,
        None => PipelineConfig::default(),
    };
    if let Some(o) = &cli.out {
        c.output = o.clone();
    }
    if let Some(d) = &cli.data {
        c.dataset_root = d.clone();
    }
    if let Some(s) = cli.seed {
        c.seed = s;
    }
    if let Some(w) = cli.workers {
        c.workers = w;
    }
    Ok(c)
}

fn write(path: &Path, text: &str) -> Result<(), String> {
    if let Some(p) = path.parent() {
        fs::create_dir_all(p).map_err(|e| format!("cannot create {}: {e}", p.display()))?;
    }
    fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn summarize(report: &RunReport) {
    for n in &report.notes {
        info!("note: {n}");
    }
    for r in &report.classifiers {
        let pct = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{:.2}%", 100.0 * x));
        println!(
            "{:<16} acc {:>8}  sens {:>8}  spec {:>8}  ppv {:>8}  npv {:>8}",
            r.classifier.to_string(),
            pct(r.metrics.accuracy),
            pct(r.metrics.sensitivity),
            pct(r.metrics.specificity),
            pct(r.metrics.ppv),
            pct(r.metrics.npv)
        );
    }
}

/// Ok(true) when every case succeeded.
fn run_stages(cli: &Cli, stage: StageArg, classify_input: Option<PathBuf>) -> Result<bool, String> {
    let config = load_config(cli)?;
    open_run_log(&config.output)?;
    if stage != StageArg::Classify && stage != StageArg::Render {
        config.validate().map_err(|e| e.to_string())?;
    }
    let err = |e: wcp_core::Error| e.to_string();
    match stage {
        StageArg::Ingest => {
            let cases = ingest(&config).map_err(err)?;
            write(&config.output.join(MANIFEST_FILE), &manifest_csv(&cases))?;
            println!("{} cases", cases.len());
            Ok(true)
        }
        StageArg::Segment | StageArg::Transform | StageArg::Features => {
            let cases = ingest(&config).map_err(err)?;
            write(&config.output.join(MANIFEST_FILE), &manifest_csv(&cases))?;
            let s = match stage {
                StageArg::Segment => Stage::Segment,
                StageArg::Transform => Stage::Transform,
                _ => Stage::Features,
            };
            let (done, failures) = run_cases(&cases, &config, s).map_err(err)?;
            if s == Stage::Features {
                let names = feature_names(config.bmode_block);
                let rows: Vec<_> = done.into_iter().filter_map(|a| a.features).collect();
                let csv = write_feature_csv(&names, &rows).map_err(err)?;
                write(&config.output.join(FEATURES_FILE), &csv)?;
            }
            for f in &failures {
                error!("{}: {}", f.case_id, f.error);
            }
            println!("{} of {} cases processed", cases.len() - failures.len(), cases.len());
            Ok(failures.is_empty())
        }
        StageArg::Classify => {
            let input = classify_input.unwrap_or_else(|| config.output.join(FEATURES_FILE));
            let report = classify_features_file(&input, &config).map_err(err)?;
            summarize(&report);
            Ok(true)
        }
        StageArg::Run => {
            let report = run_pipeline(&config).map_err(err)?;
            for f in &report.failures {
                error!("{}: {}", f.case_id, f.error);
            }
            summarize(&report);
            Ok(report.failures.is_empty())
        }
        StageArg::Render => {
            let n = render_rasters(&config.output.join("cases")).map_err(err)?;
            println!("rendered {n} maps");
            Ok(true)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<bool, String> {
    match &cli.command {
        None => run_stages(cli, cli.stage, None),
        Some(Command::Ingest) => run_stages(cli, StageArg::Ingest, None),
        Some(Command::Segment) => run_stages(cli, StageArg::Segment, None),
        Some(Command::Transform) => run_stages(cli, StageArg::Transform, None),
        Some(Command::Features) => run_stages(cli, StageArg::Features, None),
        Some(Command::Classify { features }) => run_stages(cli, StageArg::Classify, features.clone()),
        Some(Command::Run) => run_stages(cli, StageArg::Run, None),
        Some(Command::Render { dir: Some(dir) }) => {
            let n = render_rasters(dir).map_err(|e| e.to_string())?;
            println!("rendered {n} maps");
            Ok(true)
        }
        Some(Command::Render { dir: None }) => run_stages(cli, StageArg::Render, None),
        Some(Command::Phantom { dir, cases, side }) => {
            let spec = PhantomSpec {
                cases: *cases,
                side: *side,
                seed: cli.seed.unwrap_or(PhantomSpec::default().seed),
                ..PhantomSpec::default()
            };
            let written = write_phantom_set(dir, &spec).map_err(|e| e.to_string())?;
            println!("wrote {} phantom cases to {}", written.len(), dir.display());
            Ok(true)
        }
        Some(Command::DefaultConfig) => {
            print!("{}", PipelineConfig::default().to_toml().map_err(|e| e.to_string())?);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose);
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            error!("{e}");
            ExitCode::from(2)
        }
    }
}
