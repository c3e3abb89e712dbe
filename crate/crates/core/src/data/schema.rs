//! Feature schemas and the plain-text schema descriptor format.
//!
//! A descriptor is one `name: kind` pair per line. `kind` is `numeric`,
//! `categorical <level>, <level>, ...` or `target <positive-token>`. Blank
//! lines and lines starting with `#` are ignored.
//!
//! ```text
//! age: numeric
//! workclass: categorical Federal-gov, Local-gov, Private
//! income: target >50K
//! ```

use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FeatureKind {
    Numeric,
    Categorical { levels: Vec<String> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Feature {
    pub label: String,
    pub kind: FeatureKind,
}

impl Feature {
    pub fn numeric(label: impl Into<String>) -> Self {
        Feature {
            label: label.into(),
            kind: FeatureKind::Numeric,
        }
    }

    pub fn categorical<S: Into<String>>(label: impl Into<String>, levels: impl IntoIterator<Item = S>) -> Self {
        Feature {
            label: label.into(),
            kind: FeatureKind::Categorical {
                levels: levels.into_iter().map(Into::into).collect(),
            },
        }
    }

    pub fn levels(&self) -> Option<&[String]> {
        match &self.kind {
            FeatureKind::Categorical { levels } => Some(levels),
            FeatureKind::Numeric => None,
        }
    }
}

/// Binary target column: a record is positive when its raw value starts
/// with `positive` (the Adult test file appends a trailing period).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TargetSpec {
    pub label: String,
    pub positive: String,
}

impl TargetSpec {
    pub fn is_positive(&self, raw: &str) -> bool {
        raw.trim().starts_with(&self.positive)
    }
}

/// Ordered feature labels with their kinds, plus the raw-file layout.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schema {
    features: Vec<Feature>,
    target: Option<TargetSpec>,
}

impl Schema {
    pub fn new(features: Vec<Feature>, target: Option<TargetSpec>) -> Result<Self> {
        let mut seen = HashSet::new();
        for f in &features {
            if !seen.insert(f.label.as_str()) {
                return Err(Error::DuplicateLabel(f.label.clone()));
            }
            if let FeatureKind::Categorical { levels } = &f.kind {
                if levels.len() < 2 {
                    return Err(Error::TooFewLevels {
                        feature: f.label.clone(),
                        levels: levels.len(),
                    });
                }
                let mut lv = HashSet::new();
                for l in levels {
                    if !lv.insert(l.as_str()) {
                        return Err(Error::DuplicateLabel(format!("{}={}", f.label, l)));
                    }
                }
            }
        }
        if let Some(t) = &target {
            if !seen.insert(t.label.as_str()) {
                return Err(Error::DuplicateLabel(t.label.clone()));
            }
        }
        Ok(Schema { features, target })
    }

    /// Like [`Schema::new`] but without the level-count check, for
    /// intermediate schemas whose categorical levels were collapsed.
    pub(crate) fn new_unchecked(features: Vec<Feature>, target: Option<TargetSpec>) -> Self {
        Schema { features, target }
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn target(&self) -> Option<&TargetSpec> {
        self.target.as_ref()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.features.iter().map(|f| f.label.as_str())
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.features.iter().position(|f| f.label == label)
    }

    pub fn feature(&self, label: &str) -> Option<&Feature> {
        self.features.iter().find(|f| f.label == label)
    }

    /// Parse a descriptor. Feature order follows line order; the target line
    /// may appear anywhere.
    pub fn parse(text: &str) -> Result<Self> {
        let mut features = Vec::new();
        let mut target = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let malformed = |reason: &str| Error::Malformed {
                line: idx + 1,
                reason: reason.to_string(),
            };
            let (name, rest) = line.split_once(':').ok_or_else(|| malformed("expected `name: kind`"))?;
            let name = name.trim();
            if name.is_empty() {
                return Err(malformed("empty feature name"));
            }
            let rest = rest.trim();
            let (kind, args) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
            match kind {
                "numeric" => features.push(Feature::numeric(name)),
                "categorical" => {
                    let levels: Vec<String> = args
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(String::from)
                        .collect();
                    features.push(Feature::categorical(name, levels));
                }
                "target" => {
                    if target.is_some() {
                        return Err(malformed("more than one target"));
                    }
                    let positive = args.trim();
                    if positive.is_empty() {
                        return Err(malformed("target needs a positive token"));
                    }
                    target = Some(TargetSpec {
                        label: name.to_string(),
                        positive: positive.to_string(),
                    });
                }
                other => return Err(malformed(&format!("unknown kind {other:?}"))),
            }
        }
        Schema::new(features, target)
    }

    /// Raw-file column order: features in schema order followed by the target.
    pub(crate) fn raw_width(&self) -> usize {
        self.features.len() + usize::from(self.target.is_some())
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for feat in &self.features {
            match &feat.kind {
                FeatureKind::Numeric => writeln!(f, "{}: numeric", feat.label)?,
                FeatureKind::Categorical { levels } => {
                    writeln!(f, "{}: categorical {}", feat.label, levels.join(", "))?
                }
            }
        }
        if let Some(t) = &self.target {
            writeln!(f, "{}: target {}", t.label, t.positive)?;
        }
        Ok(())
    }
}
