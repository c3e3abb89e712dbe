//! Learner and session configuration.
//!
//! Session files are plain `key: value` lines; `#` starts a comment. The
//! canonical rendering (`Display`) is what gets digested, so two parties
//! agree exactly when their effective settings agree.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use fairgate_core::gd::{GdConfig, SIGMOID3};
use fairgate_core::regress::ModelKind;
use fairgate_core::wald::{TablePrecision, WaldOptions};
use fairgate_fhe::{BackendKind, FheParams};
use sha2::{Digest, Sha256};

use crate::error::{ProtocolError, Result};
use crate::frame::DEFAULT_MAX_PAYLOAD;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LearnAlgorithm {
    LinearGd,
    LogisticGd,
    /// Closed-form least squares. Needs arbitrary functions of the data, so
    /// it only runs on the cleartext backend.
    LinearExact,
    /// IRLS maximum likelihood; cleartext backend only.
    LogisticExact,
}

impl LearnAlgorithm {
    pub const ALL: [LearnAlgorithm; 4] = [
        LearnAlgorithm::LinearGd,
        LearnAlgorithm::LogisticGd,
        LearnAlgorithm::LinearExact,
        LearnAlgorithm::LogisticExact,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LearnAlgorithm::LinearGd => "linear_gd",
            LearnAlgorithm::LogisticGd => "logistic_gd",
            LearnAlgorithm::LinearExact => "linear_exact",
            LearnAlgorithm::LogisticExact => "logistic_exact",
        }
    }

    pub fn kind(self) -> ModelKind {
        match self {
            LearnAlgorithm::LinearGd | LearnAlgorithm::LinearExact => ModelKind::Linear,
            LearnAlgorithm::LogisticGd | LearnAlgorithm::LogisticExact => ModelKind::Logistic,
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, LearnAlgorithm::LinearExact | LearnAlgorithm::LogisticExact)
    }

    pub fn new(kind: ModelKind, exact: bool) -> Self {
        match (kind, exact) {
            (ModelKind::Linear, false) => LearnAlgorithm::LinearGd,
            (ModelKind::Logistic, false) => LearnAlgorithm::LogisticGd,
            (ModelKind::Linear, true) => LearnAlgorithm::LinearExact,
            (ModelKind::Logistic, true) => LearnAlgorithm::LogisticExact,
        }
    }
}

impl fmt::Display for LearnAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LearnAlgorithm {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| ProtocolError::Config(format!("unknown learn algorithm {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LearnConfig {
    pub algorithm: LearnAlgorithm,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Rows per ciphertext block; 0 means the slot count.
    pub batch_slots: usize,
    /// Cubic sigmoid stand-in, constant term first.
    pub sigmoid_poly: [f64; 4],
    /// Levels a coefficient ciphertext may consume before it is refreshed.
    pub refresh_every: usize,
}

impl LearnConfig {
    /// 32 epochs at rate 0.1, refreshing every `level_count - 2` levels.
    pub fn new(algorithm: LearnAlgorithm, level_count: usize) -> Self {
        let gd = GdConfig::encrypted(algorithm.kind());
        LearnConfig {
            algorithm,
            epochs: gd.epochs,
            learning_rate: gd.learning_rate,
            batch_slots: 0,
            sigmoid_poly: SIGMOID3,
            refresh_every: level_count.saturating_sub(2).max(1),
        }
    }

    /// Levels consumed by one encrypted epoch.
    pub fn epoch_depth(&self) -> usize {
        match self.algorithm.kind() {
            ModelKind::Linear => 2,
            ModelKind::Logistic => 4,
        }
    }

    pub fn validate(&self, level_count: usize, slot_count: usize) -> Result<()> {
        let bad = |m: String| Err(ProtocolError::Config(m));
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate {} must be positive", self.learning_rate));
        }
        if self.sigmoid_poly.iter().any(|c| !c.is_finite()) {
            return bad("sigmoid coefficients must be finite".into());
        }
        if self.batch_slots > slot_count || (self.batch_slots != 0 && !self.batch_slots.is_power_of_two()) {
            return bad(format!("batch_slots {} must be 0 or a power of two <= {slot_count}", self.batch_slots));
        }
        if self.refresh_every == 0 || self.refresh_every + 1 > level_count {
            return bad(format!("refresh_every {} must lie in 1..={}", self.refresh_every, level_count.saturating_sub(1)));
        }
        if !self.algorithm.is_exact() && self.refresh_every < self.epoch_depth() {
            return bad(format!(
                "refresh_every {} is below the {} levels one epoch needs",
                self.refresh_every,
                self.epoch_depth()
            ));
        }
        Ok(())
    }

    pub fn block_rows(&self, slot_count: usize) -> usize {
        if self.batch_slots == 0 {
            slot_count
        } else {
            self.batch_slots
        }
    }

    /// The plaintext learner with the same hyperparameters.
    pub fn gd_config(&self) -> GdConfig {
        GdConfig {
            kind: self.algorithm.kind(),
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            sigmoid: self.sigmoid_poly,
            normalize: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SessionConfig {
    pub backend: BackendKind,
    pub params: FheParams,
    pub learn: LearnConfig,
    pub alpha: f64,
    pub bonferroni: bool,
    /// Round coefficients and standard errors to printed-table precision
    /// before testing.
    pub table_precision: bool,
    /// Features whose flagged dummies trigger a registered recode.
    pub recode: Vec<String>,
    pub profile: String,
    pub sensitive: Vec<String>,
    pub seed: u64,
    pub max_payload: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        let params = FheParams::default();
        SessionConfig {
            backend: BackendKind::Cleartext,
            learn: LearnConfig::new(LearnAlgorithm::LinearGd, params.level_count),
            params,
            alpha: 0.05,
            bonferroni: false,
            table_precision: false,
            recode: Vec::new(),
            profile: "subsample".into(),
            sensitive: vec!["age".into()],
            seed: 0,
            max_payload: DEFAULT_MAX_PAYLOAD,
        }
    }
}

fn list(v: &str) -> Vec<String> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

impl SessionConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = SessionConfig::default();
        let mut refresh_every = None;
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once(':')
                .ok_or_else(|| ProtocolError::Config(format!("line {}: expected key: value", n + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            let bad = || ProtocolError::Config(format!("line {}: bad value {v:?} for {k}", n + 1));
            let num = |v: &str| v.parse::<f64>().map_err(|_| bad());
            match k {
                "backend" => c.backend = v.parse().map_err(|_| bad())?,
                "params" => {
                    c.params = if v.contains('=') {
                        FheParams::parse(v)?
                    } else {
                        FheParams::preset(v)?
                    }
                }
                "algorithm" => c.learn.algorithm = v.parse()?,
                "epochs" => c.learn.epochs = v.parse().map_err(|_| bad())?,
                "learning_rate" => c.learn.learning_rate = num(v)?,
                "batch_slots" => c.learn.batch_slots = v.parse().map_err(|_| bad())?,
                "refresh_every" => refresh_every = Some(v.parse().map_err(|_| bad())?),
                "sigmoid_poly" => {
                    let cs: Vec<f64> = v.split(',').map(|x| num(x.trim())).collect::<Result<_>>()?;
                    c.learn.sigmoid_poly = cs.try_into().map_err(|_| bad())?;
                }
                "alpha" => c.alpha = num(v)?,
                "bonferroni" => c.bonferroni = v.parse().map_err(|_| bad())?,
                "precision" => {
                    c.table_precision = match v {
                        "table" => true,
                        "full" => false,
                        _ => return Err(bad()),
                    }
                }
                "recode" => c.recode = list(v),
                "profile" => c.profile = v.to_string(),
                "sensitive" => c.sensitive = list(v),
                "seed" => c.seed = v.parse().map_err(|_| bad())?,
                "max_payload" => c.max_payload = v.parse().map_err(|_| bad())?,
                other => return Err(ProtocolError::Config(format!("line {}: unknown key {other:?}", n + 1))),
            }
        }
        c.learn.refresh_every = refresh_every.unwrap_or(c.params.level_count.saturating_sub(2).max(1));
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.resolve_primes()?;
        self.learn.validate(self.params.level_count, self.params.slot_count())?;
        if self.learn.algorithm.is_exact() && self.backend != BackendKind::Cleartext {
            return Err(ProtocolError::Config(format!(
                "{} needs the cleartext backend",
                self.learn.algorithm
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(ProtocolError::Config(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        Ok(())
    }

    pub fn wald_options(&self) -> WaldOptions {
        WaldOptions {
            alpha: self.alpha,
            bonferroni: self.bonferroni,
            precision: self.table_precision.then_some(TablePrecision::PUBLISHED),
        }
    }

    pub fn digest(&self) -> [u8; 32] {
        Sha256::digest(self.to_string().as_bytes()).into()
    }
}

impl fmt::Display for SessionConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = &self.learn;
        let poly: Vec<String> = l.sigmoid_poly.iter().map(|c| format!("{c:e}")).collect();
        writeln!(f, "backend: {}", self.backend)?;
        writeln!(f, "params: {}", self.params)?;
        writeln!(f, "algorithm: {}", l.algorithm)?;
        writeln!(f, "epochs: {}", l.epochs)?;
        writeln!(f, "learning_rate: {:e}", l.learning_rate)?;
        writeln!(f, "batch_slots: {}", l.batch_slots)?;
        writeln!(f, "refresh_every: {}", l.refresh_every)?;
        writeln!(f, "sigmoid_poly: {}", poly.join(","))?;
        writeln!(f, "alpha: {:e}", self.alpha)?;
        writeln!(f, "bonferroni: {}", self.bonferroni)?;
        writeln!(f, "precision: {}", if self.table_precision { "table" } else { "full" })?;
        writeln!(f, "recode: {}", self.recode.join(","))?;
        writeln!(f, "profile: {}", self.profile)?;
        writeln!(f, "sensitive: {}", self.sensitive.join(","))?;
        writeln!(f, "seed: {}", self.seed)?;
        writeln!(f, "max_payload: {}", self.max_payload)
    }
}
