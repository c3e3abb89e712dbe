//! Plaintext leave-one-out analysis of the Adult census files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use fairgate_core::data::{load_adult, Dataset, Profile};
use fairgate_core::gd::{fit_gd, GdConfig};
use fairgate_core::regress::{accuracy, fit_logistic, fit_ols, trivial_accuracy, FitConfig, ModelKind, TargetCoding};
use fairgate_core::wald::{wald_test, TablePrecision, WaldOptions};
use fairgate_core::{DesignMatrix64, ModelFit64, WaldReport64};

use crate::error::{CliError, Result};
use crate::manifest::OutDir;

/// How coefficients are estimated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum Learner {
    /// Exact for linear models, polynomial-sigmoid gradient descent for logistic ones.
    #[default]
    Auto,
    /// Least squares or IRLS maximum likelihood.
    Exact,
    /// Full-batch gradient descent on normalised columns.
    Gd,
}

impl Learner {
    pub fn resolve(self, kind: ModelKind) -> Learner {
        match (self, kind) {
            (Learner::Auto, ModelKind::Linear) => Learner::Exact,
            (Learner::Auto, ModelKind::Logistic) => Learner::Gd,
            (l, _) => l,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Learner::Auto => "auto",
            Learner::Exact => "exact",
            Learner::Gd => "gd",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalyzeOptions {
    pub train: PathBuf,
    pub test: Option<PathBuf>,
    pub model: ModelKind,
    pub learner: Learner,
    pub sensitive: Vec<String>,
    pub alpha: f64,
    pub bonferroni: bool,
    /// Test at full precision instead of printed-table precision.
    pub full_precision: bool,
    pub profile: String,
    pub missing: String,
}

impl AnalyzeOptions {
    pub fn new(train: impl Into<PathBuf>, model: ModelKind) -> Self {
        AnalyzeOptions {
            train: train.into(),
            test: None,
            model,
            learner: Learner::Auto,
            sensitive: vec!["age".into()],
            alpha: 0.05,
            bonferroni: false,
            full_precision: false,
            profile: "full".into(),
            missing: "?".into(),
        }
    }

    pub fn wald_options(&self) -> WaldOptions {
        WaldOptions {
            alpha: self.alpha,
            bonferroni: self.bonferroni,
            precision: (!self.full_precision).then_some(TablePrecision::PUBLISHED),
        }
    }

    /// Canonical text of every setting that affects the results.
    pub fn canonical(&self) -> String {
        format!(
            "train: {}\ntest: {}\nmodel: {}\nlearner: {}\nsensitive: {}\nalpha: {}\nbonferroni: {}\nfull_precision: {}\nprofile: {}\nmissing: {}\n",
            self.train.display(),
            self.test.as_deref().map_or("-".into(), |p| p.display().to_string()),
            self.model,
            self.learner.resolve(self.model).name(),
            self.sensitive.join(","),
            self.alpha,
            self.bonferroni,
            self.full_precision,
            self.profile,
            self.missing
        )
    }
}

/// M and M' for one sensitive feature.
#[derive(Clone, Debug)]
pub struct LooResult {
    pub sensitive: String,
    pub m: ModelFit64,
    pub m_prime: ModelFit64,
    pub report: WaldReport64,
    /// Test accuracy of M and M'.
    pub accuracy: Option<(f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct Analysis {
    pub options: AnalyzeOptions,
    pub results: Vec<LooResult>,
    /// Always predicting the negative class, on the test split.
    pub trivial_accuracy: Option<f64>,
}

impl Analysis {
    pub fn flagged_any(&self) -> bool {
        self.results.iter().any(|r| !r.report.flagged.is_empty())
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let o = &self.options;
        let _ = writeln!(s, "model {} ({} learner), profile {}", o.model, o.learner.resolve(o.model).name(), o.profile);
        if let Some(t) = self.trivial_accuracy {
            let _ = writeln!(s, "trivial accuracy (always <=50K): {t:.4}");
        }
        for r in &self.results {
            if let Some((a, b)) = r.accuracy {
                let _ = writeln!(s, "[{}] test accuracy M {a:.4}, M' {b:.4}", r.sensitive);
            }
            let flagged = r.report.flagged_names();
            let _ = writeln!(
                s,
                "[{}] flagged at alpha {}: {}",
                r.sensitive,
                r.report.effective_alpha,
                if flagged.is_empty() { "none".into() } else { flagged.join(", ") }
            );
        }
        s
    }

    /// Write per-feature CSV and text reports plus a summary.
    pub fn write(&self, out: &mut OutDir) -> Result<()> {
        for r in &self.results {
            let tag = file_tag(&r.sensitive);
            out.write(&format!("wald_{tag}.csv"), r.report.to_csv())?;
            out.write(&format!("wald_{tag}.txt"), r.report.to_text())?;
            out.write(&format!("models_{tag}.csv"), models_csv(&r.m, &r.m_prime))?;
        }
        out.write("summary.txt", self.summary())?;
        Ok(())
    }
}

fn file_tag(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect()
}

/// Both models side by side; the sensitive columns appear only in M'.
pub fn models_csv(m: &ModelFit64, mp: &ModelFit64) -> String {
    let mut s = String::from("column,beta,se_beta,zeta,se_zeta\n");
    for (j, c) in mp.columns.iter().enumerate() {
        let key = c.key();
        let (b, sb) = match m.index_of(&key) {
            Some(i) => (m.coefficients[i].to_string(), m.std_errors[i].to_string()),
            None => (String::new(), String::new()),
        };
        let _ = writeln!(s, "{key},{b},{sb},{},{}", mp.coefficients[j], mp.std_errors[j]);
    }
    s
}

fn load(path: &Path, missing: &str) -> Result<Dataset> {
    load_adult(path, missing).map_err(|source| CliError::Input { path: path.to_path_buf(), source })
}

/// Sensitive labels must name non-target features of the data.
pub fn check_sensitive(d: &Dataset, sensitive: &[String]) -> Result<()> {
    if sensitive.is_empty() {
        return Err(CliError::Usage("at least one --sensitive feature is required".into()));
    }
    let target = d.schema().target().map(|t| t.label.clone());
    for s in sensitive {
        if d.schema().position(s).is_none() || target.as_deref() == Some(s.as_str()) {
            return Err(CliError::Usage(format!("unknown sensitive feature {s:?}")));
        }
    }
    Ok(())
}

/// The profile with one sensitive feature moved out of the training set.
pub fn profile_for(name: &str, sensitive: &str) -> Result<Profile> {
    let mut p = Profile::by_name(name).map_err(|e| CliError::Usage(e.to_string()))?.with_sensitive([sensitive]);
    p.features.retain(|f| f != sensitive);
    Ok(p)
}

fn designs(p: &Profile, d: &Dataset) -> Result<(DesignMatrix64, DesignMatrix64)> {
    let with = p.prepare(d)?;
    let without = with.select(&p.features)?;
    Ok((p.design(&without)?, p.design(&with)?))
}

pub fn fit_one(design: &DesignMatrix64, kind: ModelKind, learner: Learner) -> Result<ModelFit64> {
    let cfg = match kind {
        ModelKind::Linear => FitConfig { target_coding: TargetCoding::PlusMinusOne, ..FitConfig::default() },
        ModelKind::Logistic => FitConfig::default(),
    };
    let fit = match (learner.resolve(kind), kind) {
        (Learner::Gd, _) => fit_gd(design, &GdConfig::analysis(kind), &cfg)?,
        (_, ModelKind::Linear) => fit_ols(design, &cfg)?,
        (_, ModelKind::Logistic) => {
            let f = fit_logistic(design, &cfg)?;
            if !f.converged {
                return Err(fairgate_core::Error::NotConverged {
                    iterations: f.iterations,
                    gradient_norm: f.gradient_norm,
                }
                .into());
            }
            f
        }
    };
    Ok(fit)
}

pub fn analyze(o: &AnalyzeOptions) -> Result<Analysis> {
    if !(o.alpha > 0.0 && o.alpha < 1.0) {
        return Err(CliError::Usage(format!("alpha {} outside (0, 1)", o.alpha)));
    }
    let train = load(&o.train, &o.missing)?;
    check_sensitive(&train, &o.sensitive)?;
    let test = o.test.as_deref().map(|p| load(p, &o.missing)).transpose()?;
    let trivial = test.as_ref().map(|t| {
        let y: Vec<f64> = t.target().unwrap_or(&[]).iter().map(|&b| f64::from(u8::from(b))).collect();
        trivial_accuracy(&y)
    });
    let mut results = Vec::new();
    for s in &o.sensitive {
        let p = profile_for(&o.profile, s)?;
        let (md, mpd) = designs(&p, &train)?;
        let m = fit_one(&md, o.model, o.learner)?;
        let m_prime = fit_one(&mpd, o.model, o.learner)?;
        let report = wald_test(&m, &m_prime, &o.wald_options())?;
        let accuracy = match &test {
            Some(t) => {
                let (td, tpd) = designs(&p, t)?;
                Some((accuracy(&m, &td)?, accuracy(&m_prime, &tpd)?))
            }
            None => None,
        };
        results.push(LooResult { sensitive: s.clone(), m, m_prime, report, accuracy });
    }
    Ok(Analysis { options: o.clone(), results, trivial_accuracy: trivial })
}
