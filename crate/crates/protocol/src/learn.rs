//! The ML party's learners, evaluated on ciphertexts.
//!
//! Layout: column `j` arrives as blocks `z[j][b]` of `block_rows` rows each,
//! zero-padded to the slot count; the target likewise. Gradient descent
//! keeps every coefficient in its own ciphertext, replicated across all
//! slots, so one epoch is
//!
//! ```text
//! r_b  = f(sum_j beta_j * z[j][b]) - y_b
//! g_j  = inner_sum(sum_b r_b * z'[j][b])      z' = (eta / N) z
//! beta_j -= g_j
//! ```
//!
//! with `f` the identity or the cubic sigmoid. The full-width inner sum
//! leaves the total in every slot, which is what keeps `beta_j` replicated.
//! An epoch costs two levels (linear) or four (logistic). Before an epoch
//! that would overrun the refresh budget, all coefficients are sent back
//! for re-encryption in one batch.

use fairgate_core::data::{ColumnDescriptor, DesignMatrix};
use fairgate_core::linalg::Matrix;
use fairgate_core::regress::{fit_logistic, fit_ols, FitConfig, ModelKind};
use fairgate_fhe::{refresh_apply, Ciphertext, EvalKey, KeySet, PlainVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::config::{LearnAlgorithm, LearnConfig};
use crate::error::{ProtocolError, Result};
use crate::message::{EncryptedModel, ModelLayout};

/// Restores ciphertexts to the top level.
pub trait Refresher {
    fn refresh(&mut self, cts: Vec<Ciphertext>) -> Result<Vec<Ciphertext>>;
}

/// Refresh with the key set at hand. For tests and benchmarks, where one
/// process plays both parties.
pub struct LocalRefresher<'a> {
    keys: &'a KeySet,
    rng: ChaCha20Rng,
    pub requests: usize,
}

impl<'a> LocalRefresher<'a> {
    pub fn new(keys: &'a KeySet, seed: u64) -> Self {
        LocalRefresher { keys, rng: ChaCha20Rng::seed_from_u64(seed), requests: 0 }
    }
}

impl Refresher for LocalRefresher<'_> {
    fn refresh(&mut self, cts: Vec<Ciphertext>) -> Result<Vec<Ciphertext>> {
        self.requests += 1;
        cts.iter()
            .map(|c| Ok(refresh_apply(&self.keys.sk, &self.keys.pk, &fairgate_fhe::refresh_request(c), &mut self.rng)?))
            .collect()
    }
}

/// Encrypted training inputs: the selected columns and the target.
pub struct TrainingSet<'a> {
    pub keys: Vec<String>,
    pub columns: Vec<&'a [Ciphertext]>,
    pub target: &'a [Ciphertext],
    pub rows: usize,
}

impl TrainingSet<'_> {
    fn check(&self) -> Result<()> {
        if self.keys.len() != self.columns.len() {
            return Err(ProtocolError::Learn("one key per column required".into()));
        }
        if self.target.is_empty() || self.rows == 0 {
            return Err(ProtocolError::Learn("empty training set".into()));
        }
        if self.columns.iter().any(|c| c.len() != self.target.len()) {
            return Err(ProtocolError::Learn("columns and target disagree on block count".into()));
        }
        Ok(())
    }
}

pub fn train(
    evk: &EvalKey,
    data: &TrainingSet<'_>,
    cfg: &LearnConfig,
    refresher: &mut dyn Refresher,
) -> Result<EncryptedModel> {
    data.check()?;
    if data.columns.is_empty() {
        return Ok(EncryptedModel { columns: Vec::new(), layout: ModelLayout::Replicated, ciphertexts: Vec::new() });
    }
    if cfg.algorithm.is_exact() {
        train_exact(evk, data, cfg)
    } else {
        train_gd(evk, data, cfg, refresher)
    }
}

fn train_gd(evk: &EvalKey, data: &TrainingSet<'_>, cfg: &LearnConfig, refresher: &mut dyn Refresher) -> Result<EncryptedModel> {
    let kind = cfg.algorithm.kind();
    let slots = evk.slot_count();
    let top = evk.max_level();
    let depth = cfg.epoch_depth();
    let step = cfg.learning_rate / data.rows as f64;
    let scaled: Vec<Vec<Ciphertext>> = data
        .columns
        .iter()
        .map(|col| col.iter().map(|c| evk.mul_scalar(c, step)).collect::<fairgate_fhe::Result<_>>())
        .collect::<fairgate_fhe::Result<_>>()?;
    // x - x is an exact zero at the top level
    let zero = evk.sub(&data.target[0], &data.target[0])?;
    let mut beta: Vec<Ciphertext> = vec![zero; data.columns.len()];
    let c0 = PlainVector::constant(cfg.sigmoid_poly[0], slots)?;

    for _ in 0..cfg.epochs {
        let level = beta.iter().map(Ciphertext::level).min().unwrap_or(0);
        if level < depth || top - level + depth > cfg.refresh_every {
            beta = refresher.refresh(beta)?;
            if beta.iter().any(|b| b.level() < depth) {
                return Err(ProtocolError::Learn("refresh did not restore enough levels".into()));
            }
        }
        let mut resid = Vec::with_capacity(data.target.len());
        for (b, y) in data.target.iter().enumerate() {
            let terms = beta
                .iter()
                .zip(&data.columns)
                .map(|(bj, col)| evk.mul(bj, &col[b]))
                .collect::<fairgate_fhe::Result<Vec<_>>>()?;
            let eta = evk.add_many(&terms)?;
            let pred = match kind {
                ModelKind::Linear => eta,
                ModelKind::Logistic => cubic(evk, &eta, &cfg.sigmoid_poly, &c0)?,
            };
            resid.push(evk.sub(&pred, y)?);
        }
        for (bj, zj) in beta.iter_mut().zip(&scaled) {
            let parts = resid
                .iter()
                .zip(zj)
                .map(|(r, z)| evk.mul(r, z))
                .collect::<fairgate_fhe::Result<Vec<_>>>()?;
            let g = evk.inner_sum(&evk.add_many(&parts)?, slots)?;
            *bj = evk.sub(bj, &g)?;
        }
    }
    Ok(EncryptedModel { columns: data.keys.clone(), layout: ModelLayout::Replicated, ciphertexts: beta })
}

/// `c0 + c1 x + c2 x^2 + c3 x^3` in three levels.
fn cubic(evk: &EvalKey, x: &Ciphertext, c: &[f64; 4], c0: &PlainVector) -> Result<Ciphertext> {
    let x2 = evk.mul(x, x)?;
    let c3x = evk.mul_scalar(x, c[3])?;
    let mut acc = evk.add(&evk.mul(&c3x, &x2)?, &evk.mul_scalar(x, c[1])?)?;
    if c[2] != 0.0 {
        acc = evk.add(&acc, &evk.mul_scalar(&x2, c[2])?)?;
    }
    Ok(evk.add_plain(&acc, c0)?)
}

fn train_exact(evk: &EvalKey, data: &TrainingSet<'_>, cfg: &LearnConfig) -> Result<EncryptedModel> {
    let slots = evk.slot_count();
    let block = cfg.block_rows(slots);
    let k = data.columns.len();
    let blocks = data.target.len();
    if data.rows > blocks * block {
        return Err(ProtocolError::Learn(format!("{} rows do not fit in {blocks} blocks", data.rows)));
    }
    let descriptors: Vec<ColumnDescriptor> = data.keys.iter().map(|s| ColumnDescriptor::parse_key(s)).collect();
    let inputs: Vec<Ciphertext> = data
        .columns
        .iter()
        .flat_map(|c| c.iter())
        .chain(data.target)
        .cloned()
        .collect();
    let rows = data.rows;
    let mut failure = None;
    let out = evk.apply_cleartext(&inputs, |v| {
        let at = |j: usize, i: usize| v[j * blocks + i / block][i % block];
        let mut x = Vec::with_capacity(rows * k);
        for i in 0..rows {
            x.extend((0..k).map(|j| at(j, i)));
        }
        let y: Vec<f64> = (0..rows).map(|i| at(k, i)).collect();
        let fit = Matrix::from_row_major(rows, k, x)
            .and_then(|x| DesignMatrix::new(x, descriptors, y))
            .and_then(|d| match cfg.algorithm {
                LearnAlgorithm::LogisticExact => fit_logistic(&d, &FitConfig::default()),
                _ => fit_ols(&d, &FitConfig::default()),
            });
        match fit {
            Ok(f) => f.coefficients.chunks(slots).map(<[f64]>::to_vec).collect(),
            Err(e) => {
                failure = Some(e);
                Vec::new()
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    Ok(EncryptedModel { columns: data.keys.clone(), layout: ModelLayout::Packed, ciphertexts: out })
}
