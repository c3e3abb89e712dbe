//! What Comp does with flagged columns between rounds.

use std::collections::BTreeMap;

use fairgate_core::data::{recode_marital, Dataset};

use crate::error::{ProtocolError, Result};

pub type RecodeFn = fn(&Dataset) -> fairgate_core::Result<Dataset>;

/// Flagged columns of a registered feature trigger that feature's recode
/// (once); every other flagged column is moved to the protected set.
#[derive(Clone, Debug, Default)]
pub struct RecodePolicy {
    recoders: BTreeMap<String, RecodeFn>,
}

impl RecodePolicy {
    /// Remove flagged columns, never recode.
    pub fn remove_only() -> Self {
        Self::default()
    }

    /// Collapse `marital-status` to married / unmarried when any of its
    /// dummies is flagged.
    pub fn marital() -> Self {
        Self::remove_only().register("marital-status", recode_marital)
    }

    pub fn register(mut self, feature: impl Into<String>, f: RecodeFn) -> Self {
        self.recoders.insert(feature.into(), f);
        self
    }

    /// Build from feature names with a built-in recode.
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        names.iter().try_fold(Self::remove_only(), |p, n| match n.as_ref() {
            "marital-status" => Ok(p.register("marital-status", recode_marital)),
            other => Err(ProtocolError::Config(format!("no built-in recode for {other:?}"))),
        })
    }

    pub fn recoder(&self, feature: &str) -> Option<RecodeFn> {
        self.recoders.get(feature).copied()
    }

    pub fn features(&self) -> impl Iterator<Item = &str> {
        self.recoders.keys().map(String::as_str)
    }
}
