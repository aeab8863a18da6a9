//! `hopfion`: seed, sweep, inspect and export hopfion configurations.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use hopfion_core::ansatz::hopfion_ansatz;
use hopfion_core::checkpoint::Checkpoint;
use hopfion_core::continuation::{self, ContinuationRecord};
use hopfion_core::diagnostics::{self, core_curve, hopf_charge};
use hopfion_core::energy;
use hopfion_core::Error as CoreError;

use config::{ConfigError, RunConfig};
use output::{CsvWriter, RunSink};

/// Environment variable overriding the configured thread count.
const THREADS_ENV: &str = "HOPFION_THREADS";

#[derive(Parser)]
#[command(name = "hopfion", version, about = "Hopf soliton continuation in a coupled sigma model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// Flat key=value config file; defaults apply to missing keys.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. --set lattice.n=32. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the initial configuration and write the alpha = 0 checkpoint.
    Init {
        #[command(flatten)]
        config: ConfigArgs,
        /// Checkpoint path; defaults to <output.directory>/init.ckpt.
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Validate and print the memory estimate without building anything.
        #[arg(long)]
        dry_run: bool,
    },
    /// Run the continuation sweep.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Start the sweep from this checkpoint instead of a fresh ansatz.
        #[arg(long, conflicts_with = "resume")]
        from: Option<PathBuf>,
        /// Continue an interrupted sweep after the alpha stored in this checkpoint.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Write a legacy VTK volume of a checkpoint.
    ExportVtk { checkpoint: PathBuf, out: PathBuf },
    /// Print the diagnostics of a checkpoint.
    Diagnose { checkpoint: PathBuf },
    /// Print the effective configuration.
    ShowConfig {
        #[command(flatten)]
        config: ConfigArgs,
    },
}

/// What went wrong, by exit code.
#[derive(Debug)]
enum Failure {
    Config(String),
    Numerical(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Numerical(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Numerical(m) | Failure::Io(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::InvalidArgument(_) | CoreError::ShapeMismatch { .. } | CoreError::Precondition(_) => {
                Failure::Config(msg)
            }
            CoreError::NonFinite { .. } | CoreError::UndefinedRatio { .. } => Failure::Numerical(msg),
            CoreError::Integrity { .. } | CoreError::Io(_) => Failure::Io(msg),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn load_config(args: &ConfigArgs) -> Result<RunConfig, Failure> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            RunConfig::parse(&text).map_err(|e| Failure::Config(format!("{}: {}", path.display(), e.0)))?
        }
        None => RunConfig::default(),
    };
    cfg.apply(args.overrides.iter().map(String::as_str))?;
    if let Ok(t) = std::env::var(THREADS_ENV) {
        cfg.threads = t.trim().parse().map_err(|_| Failure::Config(format!("{THREADS_ENV}: cannot parse {t:?}")))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn init_threads(threads: usize) {
    // only the first call can configure the global pool
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
        log::debug!("thread pool already initialised: {e}");
    }
}

/// Bytes for the two fields, and for a full sweep including the optimiser's
/// work arrays (history pairs, gradient, direction, trial state).
fn memory_estimate(n: usize, memory_depth: usize) -> (f64, f64) {
    let block = 24.0 * (n as f64).powi(3);
    let fields = 2.0 * block;
    let work = fields * (2.0 * memory_depth as f64 + 6.0);
    (fields, fields + work)
}

fn gib(bytes: f64) -> f64 {
    bytes / (1u64 << 30) as f64
}

fn print_diagnostics(record: &ContinuationRecord) {
    let e = &record.energy;
    println!("alpha            {}", record.alpha);
    println!("energy           {:.10}", e.total);
    println!("  dirichlet      {:.10}", e.dirichlet);
    println!("  pullback       {:.10}", e.pullback);
    println!("  cross          {:.10}", e.cross);
    println!("  dc_sq          {:.10}", e.dc_sq);
    println!("  c_sq           {:.10}", e.c_sq);
    println!("hopf charge      {:.6}", record.hopf_charge);
    println!("core length      {:.6} ({})", record.core_length, if record.core_reliable { "reliable" } else { "unreliable" });
    match record.derrick_ratio {
        Some(d) => println!("derrick ratio    {d:.6}"),
        None => println!("derrick ratio    undefined (non-positive energy)"),
    }
    println!("instability norm {:.10}", record.instability_norm);
}

fn cmd_init(args: &ConfigArgs, out: Option<PathBuf>, dry_run: bool) -> CmdResult {
    let cfg = load_config(args)?;
    let spec = cfg.lattice()?;
    let (fields, total) = memory_estimate(cfg.n, cfg.memory_depth);
    println!(
        "lattice {}^3, h = {}, edge = {}; memory: fields {:.2} GiB, sweep with optimiser work arrays ~{:.2} GiB",
        cfg.n,
        cfg.h,
        spec.edge(),
        gib(fields),
        gib(total)
    );
    if dry_run {
        return Ok(());
    }
    init_threads(cfg.threads);
    let params = cfg.ansatz()?;
    let (phi, c) = hopfion_ansatz(&spec, &params)?;
    let e = energy::evaluate(&phi, &c, 0.0)?;
    let q = hopf_charge(&phi)?;
    let curve = core_curve(&phi);
    println!("charge           {q:.6} (intended {})", params.charge);
    println!("energy           {:.10}", e.total);
    println!("core length      {:.6}", curve.length);

    output::ensure_dir(&cfg.directory)?;
    let path = out.unwrap_or_else(|| cfg.directory.join("init.ckpt"));
    Checkpoint::new(0.0, params.charge, phi, c)?.save(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_run(args: &ConfigArgs, from: Option<PathBuf>, resume: Option<PathBuf>) -> CmdResult {
    let cfg = load_config(args)?;
    init_threads(cfg.threads);
    let spec = cfg.lattice()?;
    let schedule = cfg.schedule()?;
    let opt = cfg.optimizer()?;
    output::ensure_dir(&cfg.directory)?;
    std::fs::write(cfg.directory.join("run.conf"), cfg.serialize())?;

    let csv_path = cfg.csv_file();
    let resumed = resume.map(|path| Checkpoint::load_for(&path, &spec)).transpose()?;
    let csv = match &resumed {
        Some(ck) => CsvWriter::resume(&csv_path, ck.alpha)?,
        None => CsvWriter::create(&csv_path)?,
    };
    let mut sink = RunSink {
        csv,
        directory: cfg.directory.clone(),
        charge_intent: cfg.charge,
        vtk_every: cfg.vtk_every,
        checkpoint_every: cfg.checkpoint_every,
        count: 0,
    };

    let records = if let Some(ck) = resumed {
        info!("resuming after alpha = {}", ck.alpha);
        sink.charge_intent = ck.charge_intent;
        continuation::resume(&ck.phi, &ck.c, ck.alpha, &schedule, &opt, &mut sink)?
    } else {
        let (phi, c) = match from {
            Some(path) => {
                let ck = Checkpoint::load_for(&path, &spec)?;
                sink.charge_intent = ck.charge_intent;
                (ck.phi, ck.c)
            }
            None => hopfion_ansatz(&spec, &cfg.ansatz()?)?,
        };
        continuation::run(&phi, &c, &schedule, &opt, &mut sink)?
    };
    let unconverged = records.iter().filter(|r| !r.converged).count();
    println!("{} records written to {} ({} not converged)", records.len(), csv_path.display(), unconverged);
    Ok(())
}

fn measure_checkpoint(path: &Path) -> Result<(Checkpoint, ContinuationRecord), Failure> {
    let ck = Checkpoint::load(path)?;
    let e = energy::evaluate(&ck.phi, &ck.c, ck.alpha)?;
    let record = ContinuationRecord::measure(&ck.phi, &ck.c, e, 0, false)?;
    Ok((ck, record))
}

fn cmd_diagnose(path: &Path) -> CmdResult {
    let (ck, record) = measure_checkpoint(path)?;
    let spec = ck.spec();
    println!("lattice          {}^3, h = {}", spec.n_points, spec.spacing);
    println!("charge intent    {}", ck.charge_intent);
    print_diagnostics(&record);
    let decomposed = energy::evaluate_decomposed(&ck.phi, &ck.c, ck.alpha)?;
    let total = record.energy.total;
    let residual = if total != 0.0 { (decomposed.sum() - total).abs() / total.abs() } else { (decomposed.sum() - total).abs() };
    println!("identity residual {residual:.3e}");
    println!("derrick virial   {:.10}", diagnostics::derrick_virial(&record.energy));
    Ok(())
}

fn cmd_export_vtk(checkpoint: &Path, out: &Path) -> CmdResult {
    let ck = Checkpoint::load(checkpoint)?;
    output::write_vtk(out, &ck.phi, &ck.c, &format!("hopfion alpha={} charge_intent={}", ck.alpha, ck.charge_intent))?;
    println!("wrote {}", out.display());
    Ok(())
}

fn dispatch(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Init { config, out, dry_run } => cmd_init(&config, out, dry_run),
        Command::Run { config, from, resume } => cmd_run(&config, from, resume),
        Command::ExportVtk { checkpoint, out } => cmd_export_vtk(&checkpoint, &out),
        Command::Diagnose { checkpoint } => cmd_diagnose(&checkpoint),
        Command::ShowConfig { config } => {
            print!("{}", load_config(&config)?.serialize());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage_error = e.use_stderr();
            let _ = e.print();
            // bad arguments are a configuration problem
            return if usage_error { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
