//! Command-line entry points: plaintext analysis of the Adult files, the two
//! protocol roles, FHE micro-benchmarks and dataset export.
//!
//! Exit codes: 0 success with nothing flagged, 2 features flagged,
//! 64 usage, 65 data, 70 internal.

/// Write to stdout, ignoring a closed pipe (e.g. `fairgate analyze | head`).
macro_rules! emit {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = write!(std::io::stdout().lock(), $($t)*);
    }};
}

macro_rules! emitln {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($t)*);
    }};
}

pub mod analyze;
pub mod bench;
pub mod error;
pub mod manifest;
pub mod prepare;
pub mod session;

use std::path::PathBuf;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use fairgate_core::regress::ModelKind;
use fairgate_fhe::{BackendKind, NOT_FOR_PRODUCTION};

pub use error::{CliError, Exit, Result};
pub use manifest::{OutDir, RunManifest};

use analyze::{AnalyzeOptions, Learner};
use session::{Endpoint, Overrides};

#[derive(Debug, Parser)]
#[command(name = "fairgate", version, about = "Leave-one-out fairness screening over encrypted regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit M and M' in the clear and run the Wald screen (exit 2 when anything is flagged).
    Analyze(AnalyzeArgs),
    /// Run the compliance role: hold the data and keys, screen each round.
    Comp(CompArgs),
    /// Run the ML role: train on encrypted data.
    Ml(MlArgs),
    /// Time FHE operations and project the cost of one encrypted GD epoch.
    FheBench(BenchArgs),
    /// Encode a raw data file under a profile and export the design matrix.
    Prepare(PrepareArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ModelArg {
    Linear,
    Logistic,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Linear => ModelKind::Linear,
            ModelArg::Logistic => ModelKind::Logistic,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum BackendArg {
    Cleartext,
    Rlwe,
}

impl From<BackendArg> for BackendKind {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Cleartext => BackendKind::Cleartext,
            BackendArg::Rlwe => BackendKind::Rlwe,
        }
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "linear")]
    pub model: ModelArg,
    #[arg(long, value_enum, default_value = "auto")]
    pub learner: Learner,
    /// Sensitive feature; repeat for several.
    #[arg(long, default_value = "age")]
    pub sensitive: Vec<String>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long)]
    pub bonferroni: bool,
    /// Test unrounded estimates instead of printed-table precision.
    #[arg(long)]
    pub full_precision: bool,
    #[arg(long, default_value = "full")]
    pub profile: String,
    #[arg(long, default_value = "?")]
    pub missing: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "fairgate-out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SessionArgs {
    /// Session config; falls back to $FAIRGATE_CONFIG, then built-in defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub backend: Option<BackendArg>,
    #[arg(long)]
    pub profile: Option<String>,
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    #[arg(long)]
    pub sensitive: Vec<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub bonferroni: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Wait for the peer on this address (port 0 picks one and prints it).
    #[arg(long, conflicts_with = "connect", required_unless_present = "connect")]
    pub listen: Option<String>,
    #[arg(long)]
    pub connect: Option<String>,
    /// Keep retrying --connect for this many seconds.
    #[arg(long, default_value_t = 0.0)]
    pub wait: f64,
}

#[derive(Debug, Args)]
pub struct CompArgs {
    #[command(flatten)]
    pub session: SessionArgs,
    /// Training data file.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "fairgate-comp")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MlArgs {
    #[command(flatten)]
    pub session: SessionArgs,
    #[arg(long, default_value = "fairgate-ml")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Parameter preset: default or small.
    #[arg(long, default_value = "default")]
    pub params: String,
    #[arg(long, value_enum, default_value = "rlwe")]
    pub backend: BackendArg,
    #[arg(long, default_value_t = 10)]
    pub iterations: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "full")]
    pub profile: String,
    #[arg(long, default_value = "age")]
    pub sensitive: String,
    #[arg(long, default_value = "?")]
    pub missing: String,
    #[arg(long, default_value = "fairgate-prepared")]
    pub out: PathBuf,
}

impl SessionArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            backend: self.backend.map(Into::into),
            profile: self.profile.clone(),
            model: self.model.map(Into::into),
            sensitive: self.sensitive.clone(),
            alpha: self.alpha,
            bonferroni: self.bonferroni,
            seed: self.seed,
        }
    }

    fn endpoint(&self) -> Result<Endpoint> {
        if !(self.wait >= 0.0 && self.wait.is_finite()) {
            return Err(CliError::Usage(format!("bad --wait {}", self.wait)));
        }
        match (&self.listen, &self.connect) {
            (Some(l), None) => Ok(Endpoint::Listen(l.clone())),
            (None, Some(c)) => Ok(Endpoint::Connect(c.clone(), Duration::from_secs_f64(self.wait))),
            _ => Err(CliError::Usage("exactly one of --listen and --connect is required".into())),
        }
    }
}

pub fn run(cli: Cli) -> Result<Exit> {
    match cli.command {
        Command::Analyze(a) => cmd_analyze(a),
        Command::Comp(a) => cmd_comp(a),
        Command::Ml(a) => cmd_ml(a),
        Command::FheBench(a) => cmd_fhe_bench(a),
        Command::Prepare(a) => cmd_prepare(a),
    }
}

fn cmd_analyze(a: AnalyzeArgs) -> Result<Exit> {
    let opts = AnalyzeOptions {
        train: a.train,
        test: a.test,
        model: a.model.into(),
        learner: a.learner,
        sensitive: a.sensitive,
        alpha: a.alpha,
        bonferroni: a.bonferroni,
        full_precision: a.full_precision,
        profile: a.profile,
        missing: a.missing,
    };
    let mut manifest = RunManifest::new("analyze", &opts.canonical(), a.seed);
    let analysis = manifest.time("analyze", || analyze::analyze(&opts))?;
    let mut out = OutDir::create(&a.out, manifest)?;
    analysis.write(&mut out)?;
    emit!("{}", analysis.summary());
    for r in &analysis.results {
        emit!("{}", r.report.to_text());
    }
    emitln!("manifest: {}", out.finish()?.display());
    Ok(if analysis.flagged_any() { Exit::Flagged } else { Exit::Ok })
}

fn cmd_comp(a: CompArgs) -> Result<Exit> {
    let config = session::resolve_config(a.session.config.as_deref(), &a.session.overrides())?;
    let endpoint = a.session.endpoint()?;
    let mut manifest = RunManifest::with_digest("comp", config.digest(), config.seed);
    let run = session::comp(&config, &a.data, &endpoint, &mut manifest)?;
    let mut out = OutDir::create(&a.out, manifest)?;
    out.write("session.conf", config.to_string())?;
    run.write(&mut out)?;
    emit!("{}", run.summary());
    emitln!("manifest: {}", out.finish()?.display());
    Ok(Exit::Ok)
}

fn cmd_ml(a: MlArgs) -> Result<Exit> {
    let config = session::resolve_config(a.session.config.as_deref(), &a.session.overrides())?;
    let endpoint = a.session.endpoint()?;
    let mut manifest = RunManifest::with_digest("ml", config.digest(), config.seed);
    let run = session::ml(&config, &endpoint, &mut manifest)?;
    let mut out = OutDir::create(&a.out, manifest)?;
    out.write("transcript.ndjson", run.transcript.to_ndjson())?;
    emitln!("served {} round(s)", run.rounds);
    emitln!("manifest: {}", out.finish()?.display());
    Ok(Exit::Ok)
}

fn cmd_fhe_bench(a: BenchArgs) -> Result<Exit> {
    let backend: BackendKind = a.backend.into();
    if backend == BackendKind::Rlwe {
        eprintln!("{NOT_FOR_PRODUCTION}");
    }
    let mut manifest = RunManifest::new("fhe-bench", &format!("params: {}\nbackend: {backend}\n", a.params), a.seed);
    let report = manifest.time("bench", || bench::run_bench(&a.params, backend, a.iterations, a.seed))?;
    emit!("{}", report.to_text());
    if let Some(dir) = a.out {
        let mut out = OutDir::create(dir, manifest)?;
        out.write("bench.csv", report.to_csv())?;
        out.write("bench.txt", report.to_text())?;
        emitln!("manifest: {}", out.finish()?.display());
    }
    Ok(Exit::Ok)
}

fn cmd_prepare(a: PrepareArgs) -> Result<Exit> {
    let mut manifest = RunManifest::new(
        "prepare",
        &format!("data: {}\nprofile: {}\nsensitive: {}\n", a.data.display(), a.profile, a.sensitive),
        0,
    );
    let p = manifest.time("encode", || prepare::prepare(&a.data, &a.profile, &a.sensitive, &a.missing))?;
    let mut out = OutDir::create(&a.out, manifest)?;
    out.write("design.csv", p.csv()?)?;
    out.write("columns.csv", p.columns())?;
    emitln!("{} rows x {} columns", p.design.rows(), p.design.cols());
    emitln!("manifest: {}", out.finish()?.display());
    Ok(Exit::Ok)
}
