//! The Comp party: owns the data and the secret key, screens models.

use std::collections::BTreeSet;

use fairgate_core::data::{ColumnDescriptor, Dataset, FeaturePartition, Profile};
use fairgate_core::gd::column_scales;
use fairgate_core::regress::{fit_at, FitConfig, ModelKind, TargetCoding};
use fairgate_core::wald::{wald_test, WaldOptions};
use fairgate_core::{DesignMatrix64, ModelFit64, WaldReport64};
use fairgate_fhe::{refresh_apply, Ciphertext, KeySet, PlainVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::config::{LearnConfig, SessionConfig};
use crate::error::{ProtocolError, Result};
use crate::frame::MessageKind;
use crate::learn::{train, LocalRefresher, TrainingSet};
use crate::link::Link;
use crate::message::{EncryptedColumn, EncryptedModel, ModelLayout, ProtocolMessage, RoundData, SensitiveGroup};
use crate::policy::RecodePolicy;

/// Result of screening one model pair.
#[derive(Clone, Debug, Default)]
pub struct Screen {
    pub flagged: BTreeSet<String>,
    pub report: Option<WaldReport64>,
}

/// Decides which shared columns of `m` / `m_prime` changed too much.
pub trait Flagger {
    fn screen(&mut self, label: &str, m: &ModelFit64, m_prime: &ModelFit64) -> Result<Screen>;
}

/// The Wald test at the configured level.
#[derive(Clone, Copy, Debug)]
pub struct WaldFlagger(pub WaldOptions);

impl Flagger for WaldFlagger {
    fn screen(&mut self, _label: &str, m: &ModelFit64, m_prime: &ModelFit64) -> Result<Screen> {
        let report = wald_test(m, m_prime, &self.0)?;
        Ok(Screen { flagged: report.flagged.clone(), report: Some(report) })
    }
}

/// Any closure works as a flagging oracle.
impl<F> Flagger for F
where
    F: FnMut(&str, &ModelFit64, &ModelFit64) -> BTreeSet<String>,
{
    fn screen(&mut self, label: &str, m: &ModelFit64, m_prime: &ModelFit64) -> Result<Screen> {
        Ok(Screen { flagged: self(label, m, m_prime), report: None })
    }
}

/// Comp's private material for a session.
pub struct CompContext<'a> {
    pub keys: &'a KeySet,
    pub learn: LearnConfig,
    pub fit: FitConfig,
    pub config_digest: [u8; 32],
    rng: ChaCha20Rng,
}

impl<'a> CompContext<'a> {
    pub fn new(keys: &'a KeySet, config: &SessionConfig) -> Self {
        CompContext {
            config_digest: config.digest(),
            ..Self::local(keys, config.learn, config.seed)
        }
    }

    /// A context outside any session (no configuration digest).
    pub fn local(keys: &'a KeySet, learn: LearnConfig, seed: u64) -> Self {
        CompContext {
            keys,
            learn,
            fit: fit_config(learn.algorithm.kind()),
            config_digest: [0; 32],
            rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    fn encrypt(&mut self, values: &[f64]) -> Result<Ciphertext> {
        Ok(self.keys.pk.encrypt(&PlainVector::new(values.to_vec())?, &mut self.rng)?)
    }

    fn refresh(&mut self, tokens: &[fairgate_fhe::RefreshToken]) -> Result<Vec<Ciphertext>> {
        tokens
            .iter()
            .map(|t| Ok(refresh_apply(&self.keys.sk, &self.keys.pk, t, &mut self.rng)?))
            .collect()
    }

    fn decrypt_model(&self, model: &EncryptedModel, expected: &[String]) -> Result<Vec<f64>> {
        let malformed = |reason: String| ProtocolError::Malformed { kind: MessageKind::ModelResult, reason };
        if model.columns != expected {
            return Err(malformed(format!("model columns {:?}, expected {expected:?}", model.columns)));
        }
        let beta: Vec<f64> = match model.layout {
            ModelLayout::Replicated => model
                .ciphertexts
                .iter()
                .map(|c| Ok(self.keys.sk.decrypt(c)?.values()[0]))
                .collect::<Result<_>>()?,
            ModelLayout::Packed => {
                let mut v = Vec::new();
                for c in &model.ciphertexts {
                    v.extend_from_slice(self.keys.sk.decrypt(c)?.values());
                }
                v.truncate(expected.len());
                v
            }
        };
        if beta.len() != expected.len() {
            return Err(malformed(format!("{} coefficients for {} columns", beta.len(), expected.len())));
        }
        Ok(beta)
    }
}

/// Standard-error settings matching the learner: linear models regress the
/// ±1 coded target, logistic ones the 0/1 target.
pub fn fit_config(kind: ModelKind) -> FitConfig {
    FitConfig {
        target_coding: match kind {
            ModelKind::Linear => TargetCoding::PlusMinusOne,
            ModelKind::Logistic => TargetCoding::ZeroOne,
        },
        ..FitConfig::default()
    }
}

#[derive(Clone, Debug)]
pub struct RoundOutcome {
    pub round: u32,
    pub unprotected: Vec<String>,
    /// `None` once every unprotected column has been removed.
    pub model: Option<ModelFit64>,
    pub loo: Vec<(String, ModelFit64)>,
    pub reports: Vec<WaldReport64>,
    pub flagged: BTreeSet<String>,
}

/// Design columns grouped by sensitive feature, in `sensitive` order.
pub fn sensitive_groups<S: AsRef<str>>(design: &DesignMatrix64, sensitive: &[S]) -> Result<Vec<SensitiveGroup>> {
    sensitive
        .iter()
        .map(|s| {
            let columns: Vec<String> = design
                .columns()
                .iter()
                .filter(|c| c.feature == s.as_ref())
                .map(ColumnDescriptor::key)
                .collect();
            if columns.is_empty() {
                return Err(fairgate_core::Error::UnknownLabel(s.as_ref().to_string()).into());
            }
            Ok(SensitiveGroup { label: s.as_ref().to_string(), columns })
        })
        .collect()
}

/// One round: encrypt, dispatch, serve refreshes, decrypt M and every M',
/// compute standard errors in the clear and screen each pair.
pub fn comp_one_round(
    link: &mut Link,
    design: &DesignMatrix64,
    partition: &FeaturePartition,
    groups: &[SensitiveGroup],
    ctx: &mut CompContext<'_>,
    flagger: &mut dyn Flagger,
) -> Result<RoundOutcome> {
    let unprotected: Vec<String> = design
        .keys()
        .into_iter()
        .filter(|k| partition.unprotected().contains(k))
        .collect();
    if unprotected.len() != partition.unprotected().len() {
        let missing = partition.unprotected().iter().find(|k| design.column_index(k).is_none());
        return Err(fairgate_core::Error::UnknownLabel(missing.cloned().unwrap_or_default()).into());
    }
    let data = encrypt_round(design, &unprotected, groups, ctx)?;
    link.send(&ProtocolMessage::RoundData(data))?;

    let mut model = None;
    let mut loo = Vec::with_capacity(groups.len());
    while model.is_none() || loo.len() < groups.len() {
        match link.recv()? {
            ProtocolMessage::RefreshRequest(tokens) => {
                let fresh = ctx.refresh(&tokens)?;
                link.send(&ProtocolMessage::RefreshResponse(fresh))?;
            }
            ProtocolMessage::ModelResult(m) => model = Some(m),
            ProtocolMessage::LooModelResult { label, model: m } => {
                let want = &groups[loo.len()].label;
                if &label != want {
                    return Err(ProtocolError::MissingLoo(want.clone()));
                }
                loo.push(m);
            }
            other => {
                return Err(ProtocolError::UnexpectedMessage { state: "AwaitLoo", kind: other.kind() });
            }
        }
    }
    let model = model.expect("loop exits with a model");

    let scales = column_scales(design.x());
    let kind = ctx.learn.algorithm.kind();
    let fit = |ctx: &CompContext<'_>, m: &EncryptedModel, keys: &[String]| -> Result<ModelFit64> {
        let beta = ctx.decrypt_model(m, keys)?;
        let raw = keys
            .iter()
            .zip(beta)
            .map(|(k, b)| b / scales[design.column_index(k).expect("selected from design")])
            .collect();
        Ok(fit_at(kind, &design.select_columns(keys)?, raw, &ctx.fit)?)
    };

    let m = if unprotected.is_empty() {
        None
    } else {
        Some(fit(ctx, &model, &unprotected)?)
    };
    let mut out = RoundOutcome {
        round: link.round(),
        unprotected: unprotected.clone(),
        model: None,
        loo: Vec::new(),
        reports: Vec::new(),
        flagged: BTreeSet::new(),
    };
    for (g, enc) in groups.iter().zip(&loo) {
        let keys: Vec<String> = unprotected.iter().chain(&g.columns).cloned().collect();
        let mp = fit(ctx, enc, &keys)?;
        if let Some(m) = &m {
            let screen = flagger.screen(&g.label, m, &mp)?;
            out.flagged.extend(screen.flagged);
            out.reports.extend(screen.report);
        }
        out.loo.push((g.label.clone(), mp));
    }
    out.model = m;
    Ok(out)
}

/// Normalize and encrypt the columns a round needs, in design order.
pub fn encrypt_round(
    design: &DesignMatrix64,
    unprotected: &[String],
    groups: &[SensitiveGroup],
    ctx: &mut CompContext<'_>,
) -> Result<RoundData> {
    let slots = ctx.keys.pk.slot_count();
    let block = ctx.learn.block_rows(slots);
    let scales = column_scales(design.x());
    let wanted: BTreeSet<&str> = unprotected
        .iter()
        .chain(groups.iter().flat_map(|g| &g.columns))
        .map(String::as_str)
        .collect();
    let mut columns = Vec::with_capacity(wanted.len());
    for (j, key) in design.keys().into_iter().enumerate() {
        if !wanted.contains(key.as_str()) {
            continue;
        }
        let z: Vec<f64> = design.column(j).into_iter().map(|v| v / scales[j]).collect();
        let blocks = z.chunks(block).map(|c| ctx.encrypt(c)).collect::<Result<_>>()?;
        columns.push(EncryptedColumn { key, blocks });
    }
    let y: Vec<f64> = design.target().iter().map(|&v| ctx.fit.target_coding.code(v)).collect();
    let target = y.chunks(block).map(|c| ctx.encrypt(c)).collect::<Result<_>>()?;
    let data = RoundData {
        rows: design.rows() as u64,
        columns,
        target,
        unprotected: unprotected.to_vec(),
        sensitive: groups.to_vec(),
    };
    data.validate().map_err(|reason| ProtocolError::Malformed { kind: MessageKind::RoundData, reason })?;
    Ok(data)
}

/// Encrypt `design`, train on every column in this process and return the
/// decrypted raw-scale coefficients. Both parties' steps, minus the wire.
pub fn train_local(keys: &KeySet, design: &DesignMatrix64, learn: &LearnConfig, seed: u64) -> Result<Vec<f64>> {
    learn.validate(keys.evk.max_level(), keys.evk.slot_count())?;
    let mut ctx = CompContext::local(keys, *learn, seed);
    let all = design.keys();
    let data = encrypt_round(design, &all, &[], &mut ctx)?;
    let set = TrainingSet {
        keys: all.clone(),
        columns: data.columns.iter().map(|c| c.blocks.as_slice()).collect(),
        target: &data.target,
        rows: design.rows(),
    };
    let mut refresher = LocalRefresher::new(keys, seed ^ 0x5eed);
    let model = train(&keys.evk, &set, learn, &mut refresher)?;
    let scales = column_scales(design.x());
    Ok(ctx.decrypt_model(&model, &all)?.into_iter().zip(scales).map(|(b, s)| b / s).collect())
}

#[derive(Clone, Debug)]
pub struct CompReport {
    pub rounds: Vec<RoundOutcome>,
    pub partition: FeaturePartition,
    /// Features recoded along the way, in order.
    pub recoded: Vec<String>,
    /// The dataset as finally trained on (after any recodes).
    pub dataset: Dataset,
}

impl CompReport {
    /// The model accepted in the last round.
    pub fn accepted(&self) -> Option<&ModelFit64> {
        self.rounds.last().and_then(|r| r.model.as_ref())
    }
}

/// Run rounds until one flags nothing, then terminate the session.
///
/// Every continuing round must strictly shrink S_U (removal, or a recode
/// that collapses a feature's dummies), so the session ends within
/// `|S_U| + 1` rounds.
pub fn run_comp(
    link: &mut Link,
    dataset: &Dataset,
    profile: &Profile,
    policy: &RecodePolicy,
    ctx: &mut CompContext<'_>,
    flagger: &mut dyn Flagger,
) -> Result<CompReport> {
    let mut data = profile.prepare(dataset)?;
    let mut design: DesignMatrix64 = profile.design(&data)?;
    let groups = sensitive_groups(&design, &profile.sensitive)?;
    let sensitive_keys: Vec<String> = groups.iter().flat_map(|g| g.columns.clone()).collect();
    let mut partition = FeaturePartition::new(design.keys(), sensitive_keys)?;
    let mut recoded: Vec<String> = Vec::new();
    let mut rounds = Vec::new();

    link.send(&ProtocolMessage::EvkTransfer { config_digest: ctx.config_digest, evk: ctx.keys.evk.clone() })?;
    loop {
        let outcome = comp_one_round(link, &design, &partition, &groups, ctx, flagger)?;
        let flagged = outcome.flagged.clone();
        rounds.push(outcome);
        if flagged.is_empty() {
            link.send(&ProtocolMessage::Terminate)?;
            return Ok(CompReport { rounds, partition, recoded, dataset: data });
        }
        let before = partition.unprotected().len();
        let mut to_recode: Vec<String> = flagged
            .iter()
            .map(|k| ColumnDescriptor::parse_key(k).feature)
            .filter(|f| policy.recoder(f).is_some() && !recoded.contains(f))
            .collect();
        to_recode.dedup();
        let removal: Vec<&String> = flagged
            .iter()
            .filter(|k| !to_recode.contains(&ColumnDescriptor::parse_key(k).feature))
            .collect();
        if let Some(k) = removal.iter().find(|k| !partition.unprotected().contains(**k)) {
            return Err(ProtocolError::Policy(format!("flagged column {k:?} is not in S_U")));
        }
        for feature in to_recode {
            let recode = policy.recoder(&feature).expect("filtered on registration");
            data = recode(&data)?;
            design = profile.design(&data)?;
            let old: Vec<String> = partition
                .unprotected()
                .iter()
                .filter(|k| ColumnDescriptor::parse_key(k).feature == feature)
                .cloned()
                .collect();
            let new = design
                .columns()
                .iter()
                .filter(|c| c.feature == feature)
                .map(ColumnDescriptor::key);
            partition.replace_unprotected(&old, new)?;
            recoded.push(feature);
        }
        partition.protect(&removal)?;
        let after = partition.unprotected().len();
        if after >= before {
            return Err(ProtocolError::Policy(format!("|S_U| went from {before} to {after}")));
        }
        link.send(&ProtocolMessage::Continue)?;
    }
}
