//! The two protocol roles over TCP.

use std::fmt::Write as _;
use std::io::Write as _;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::time::Duration;

use fairgate_core::data::{load_adult, Profile};
use fairgate_core::regress::ModelKind;
use fairgate_fhe::{keygen, BackendKind, NOT_FOR_PRODUCTION};
use fairgate_protocol::link::Transcript;
use fairgate_protocol::{
    run_comp, run_ml, CompContext, CompReport, LearnAlgorithm, Link, RecodePolicy, Role, SessionConfig, TcpTransport,
    WaldFlagger,
};

use crate::analyze::check_sensitive;
use crate::error::{CliError, Result};
use crate::manifest::{OutDir, RunManifest};

pub const CONFIG_ENV: &str = "FAIRGATE_CONFIG";

/// Command-line settings laid over the config file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub backend: Option<BackendKind>,
    pub profile: Option<String>,
    pub model: Option<ModelKind>,
    pub sensitive: Vec<String>,
    pub alpha: Option<f64>,
    pub bonferroni: bool,
    pub seed: Option<u64>,
}

/// Read the config (explicit path, else `$FAIRGATE_CONFIG`, else defaults)
/// and apply overrides.
pub fn resolve_config(path: Option<&Path>, o: &Overrides) -> Result<SessionConfig> {
    let env = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
    let mut c = match path.or(env.as_deref()) {
        Some(p) => SessionConfig::load(p).map_err(|e| CliError::Usage(format!("config {}: {e}", p.display())))?,
        None => SessionConfig::default(),
    };
    if let Some(b) = o.backend {
        c.backend = b;
    }
    if let Some(p) = &o.profile {
        c.profile = p.clone();
    }
    if let Some(k) = o.model {
        c.learn.algorithm = LearnAlgorithm::new(k, c.learn.algorithm.is_exact());
    }
    if !o.sensitive.is_empty() {
        c.sensitive = o.sensitive.clone();
    }
    if let Some(a) = o.alpha {
        c.alpha = a;
    }
    c.bonferroni |= o.bonferroni;
    if let Some(s) = o.seed {
        c.seed = s;
    }
    c.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(c)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Endpoint {
    /// Bind and wait for the peer. Port 0 picks a free port, printed on stdout.
    Listen(String),
    /// Dial the peer, retrying for the given time.
    Connect(String, Duration),
}

fn open(endpoint: &Endpoint) -> Result<TcpTransport> {
    Ok(match endpoint {
        Endpoint::Listen(addr) => {
            let listener = TcpListener::bind(addr)
                .map_err(|e| CliError::Protocol(fairgate_protocol::ProtocolError::Io(e)))?;
            let local = listener.local_addr().map_err(|e| CliError::Protocol(e.into()))?;
            let mut out = std::io::stdout().lock();
            let _ = writeln!(out, "listening on {local}").and_then(|()| out.flush());
            TcpTransport::accept(&listener)?
        }
        Endpoint::Connect(addr, wait) if wait.is_zero() => TcpTransport::connect(addr.as_str())?,
        Endpoint::Connect(addr, wait) => TcpTransport::connect_retry(addr, *wait)?,
    })
}

fn warn_backend(c: &SessionConfig) {
    if c.backend == BackendKind::Rlwe {
        eprintln!("{NOT_FOR_PRODUCTION}");
    }
}

fn profile(c: &SessionConfig) -> Result<Profile> {
    let mut p = Profile::by_name(&c.profile).map_err(|e| CliError::Usage(e.to_string()))?;
    p = p.with_sensitive(c.sensitive.clone());
    p.features.retain(|f| !c.sensitive.contains(f));
    Ok(p)
}

pub struct CompRun {
    pub report: CompReport,
    pub transcript: Transcript,
}

/// Drive the compliance role to termination.
pub fn comp(config: &SessionConfig, data: &Path, endpoint: &Endpoint, manifest: &mut RunManifest) -> Result<CompRun> {
    warn_backend(config);
    let dataset = manifest
        .time("load", || load_adult(data, "?"))
        .map_err(|source| CliError::Input { path: data.to_path_buf(), source })?;
    check_sensitive(&dataset, &config.sensitive)?;
    let profile = profile(config)?;
    let policy = RecodePolicy::from_names(&config.recode).map_err(|e| CliError::Usage(e.to_string()))?;
    let keys = manifest.time("keygen", || keygen(&config.params, config.backend))?;
    let transport = manifest.time("connect", || open(endpoint))?;
    let mut link = Link::new(Role::Comp, transport).with_max_payload(config.max_payload);
    let mut ctx = CompContext::new(&keys, config);
    let mut flagger = WaldFlagger(config.wald_options());
    let report = manifest.time("session", || run_comp(&mut link, &dataset, &profile, &policy, &mut ctx, &mut flagger))?;
    Ok(CompRun { report, transcript: link.transcript().clone() })
}

impl CompRun {
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for r in &self.report.rounds {
            let flagged: Vec<&str> = r.flagged.iter().map(String::as_str).collect();
            let _ = writeln!(
                s,
                "round {}: |S_U| = {}, flagged: {}",
                r.round,
                r.unprotected.len(),
                if flagged.is_empty() { "none".into() } else { flagged.join(", ") }
            );
        }
        if !self.report.recoded.is_empty() {
            let _ = writeln!(s, "recoded: {}", self.report.recoded.join(", "));
        }
        let _ = writeln!(
            s,
            "terminated after {} round(s); accepted model has {} columns",
            self.report.rounds.len(),
            self.report.accepted().map_or(0, |m| m.columns.len())
        );
        s
    }

    pub fn write(&self, out: &mut OutDir) -> Result<()> {
        for r in &self.report.rounds {
            for rep in &r.reports {
                let tag = format!("round{}_{}", r.round, rep.extra_feature.replace(|c: char| !c.is_ascii_alphanumeric(), "_"));
                out.write(&format!("wald_{tag}.csv"), rep.to_csv())?;
                out.write(&format!("wald_{tag}.txt"), rep.to_text())?;
            }
        }
        if let Some(m) = self.report.accepted() {
            let mut csv = String::from("column,coefficient,std_error\n");
            for ((c, b), se) in m.columns.iter().zip(&m.coefficients).zip(&m.std_errors) {
                let _ = writeln!(csv, "{},{b},{se}", c.key());
            }
            out.write("model.csv", csv)?;
            out.write("model.txt", m.report())?;
        }
        out.write("rounds.txt", self.summary())?;
        out.write("transcript.ndjson", self.transcript.to_ndjson())?;
        Ok(())
    }
}

pub struct MlRun {
    pub rounds: u32,
    pub transcript: Transcript,
}

/// Serve the ML role until Comp terminates the session.
pub fn ml(config: &SessionConfig, endpoint: &Endpoint, manifest: &mut RunManifest) -> Result<MlRun> {
    warn_backend(config);
    let transport = manifest.time("connect", || open(endpoint))?;
    let mut link = Link::new(Role::Ml, transport).with_max_payload(config.max_payload);
    let summary = manifest.time("session", || run_ml(&mut link, config))?;
    Ok(MlRun { rounds: summary.rounds, transcript: link.transcript().clone() })
}
