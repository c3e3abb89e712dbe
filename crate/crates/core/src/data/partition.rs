use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// Split of a label universe into sensitive (S_P), unprotected (S_U) and
/// protected labels.
///
/// Labels are opaque strings: schema feature labels, or encoded column keys
/// when removal happens per dummy column.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FeaturePartition {
    sensitive: BTreeSet<String>,
    unprotected: BTreeSet<String>,
    protected: BTreeSet<String>,
}

impl FeaturePartition {
    /// Everything not sensitive starts out unprotected.
    pub fn new<U, S>(universe: U, sensitive: S) -> Result<Self>
    where
        U: IntoIterator,
        U::Item: Into<String>,
        S: IntoIterator,
        S::Item: Into<String>,
    {
        let universe: BTreeSet<String> = universe.into_iter().map(Into::into).collect();
        let sensitive: BTreeSet<String> = sensitive.into_iter().map(Into::into).collect();
        if let Some(bad) = sensitive.difference(&universe).next() {
            return Err(Error::UnknownLabel(bad.clone()));
        }
        let unprotected = universe.difference(&sensitive).cloned().collect();
        Ok(FeaturePartition {
            sensitive,
            unprotected,
            protected: BTreeSet::new(),
        })
    }

    pub fn from_parts(
        sensitive: BTreeSet<String>,
        unprotected: BTreeSet<String>,
        protected: BTreeSet<String>,
    ) -> Result<Self> {
        let p = FeaturePartition {
            sensitive,
            unprotected,
            protected,
        };
        p.validate()?;
        Ok(p)
    }

    /// Pairwise disjointness of the three sets.
    pub fn validate(&self) -> Result<()> {
        let overlap = self
            .sensitive
            .intersection(&self.unprotected)
            .chain(self.sensitive.intersection(&self.protected))
            .chain(self.unprotected.intersection(&self.protected))
            .next();
        match overlap {
            Some(l) => Err(Error::InvalidArgument(format!("label {l:?} is in more than one partition set"))),
            None => Ok(()),
        }
    }

    /// Check the partition covers exactly `universe`.
    pub fn validate_against<'a>(&self, universe: impl IntoIterator<Item = &'a str>) -> Result<()> {
        self.validate()?;
        let universe: BTreeSet<&str> = universe.into_iter().collect();
        let mine: BTreeSet<&str> = self.universe().collect();
        if let Some(l) = mine.difference(&universe).next() {
            return Err(Error::UnknownLabel(l.to_string()));
        }
        if let Some(l) = universe.difference(&mine).next() {
            return Err(Error::InvalidArgument(format!("label {l:?} is not assigned to any partition set")));
        }
        Ok(())
    }

    pub fn sensitive(&self) -> &BTreeSet<String> {
        &self.sensitive
    }

    pub fn unprotected(&self) -> &BTreeSet<String> {
        &self.unprotected
    }

    pub fn protected(&self) -> &BTreeSet<String> {
        &self.protected
    }

    pub fn universe(&self) -> impl Iterator<Item = &str> {
        self.sensitive
            .iter()
            .chain(&self.unprotected)
            .chain(&self.protected)
            .map(String::as_str)
    }

    /// Move labels from unprotected to protected.
    pub fn protect<S: AsRef<str>>(&mut self, labels: &[S]) -> Result<()> {
        for l in labels {
            if !self.unprotected.contains(l.as_ref()) {
                return Err(Error::UnknownLabel(l.as_ref().to_string()));
            }
        }
        for l in labels {
            let l = self.unprotected.take(l.as_ref()).expect("checked above");
            self.protected.insert(l);
        }
        Ok(())
    }

    /// Replace unprotected labels after a recode changed their encoding.
    /// The old labels leave the universe altogether.
    pub fn replace_unprotected<S: AsRef<str>, T: Into<String>>(
        &mut self,
        removed: &[S],
        added: impl IntoIterator<Item = T>,
    ) -> Result<()> {
        for l in removed {
            if !self.unprotected.contains(l.as_ref()) {
                return Err(Error::UnknownLabel(l.as_ref().to_string()));
            }
        }
        let added: Vec<String> = added.into_iter().map(Into::into).collect();
        for l in &added {
            if self.sensitive.contains(l) || self.protected.contains(l) {
                return Err(Error::DuplicateLabel(l.clone()));
            }
        }
        for l in removed {
            self.unprotected.remove(l.as_ref());
        }
        self.unprotected.extend(added);
        Ok(())
    }
}
