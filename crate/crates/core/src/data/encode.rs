//! One-hot encoding of a [`Dataset`] into a numeric design matrix.

use std::fmt;
use std::io::{self, Write};

use super::dataset::{ColumnValues, Dataset};
use super::schema::FeatureKind;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Which level of a categorical feature becomes the all-zero reference.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DropPolicy {
    /// Drop the lexicographically smallest level; remaining dummies are
    /// emitted in sorted order.
    #[default]
    AlphabeticalFirst,
    /// Drop the level listed first in the schema; keep schema order.
    FirstListed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EncodeOptions {
    pub drop: DropPolicy,
    /// Prepend a constant column.
    pub intercept: bool,
    /// Reject categorical features with fewer than two levels instead of
    /// silently emitting no dummies for them.
    pub strict: bool,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        EncodeOptions {
            drop: DropPolicy::AlphabeticalFirst,
            intercept: true,
            strict: true,
        }
    }
}

pub const INTERCEPT_KEY: &str = "(intercept)";

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ColumnKind {
    Intercept,
    Numeric,
    Dummy { level: String },
}

/// Traces one design column back to its schema feature.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ColumnDescriptor {
    /// Source feature label; empty for the intercept.
    pub feature: String,
    pub kind: ColumnKind,
}

impl ColumnDescriptor {
    pub fn intercept() -> Self {
        ColumnDescriptor {
            feature: String::new(),
            kind: ColumnKind::Intercept,
        }
    }

    pub fn numeric(feature: impl Into<String>) -> Self {
        ColumnDescriptor {
            feature: feature.into(),
            kind: ColumnKind::Numeric,
        }
    }

    pub fn dummy(feature: impl Into<String>, level: impl Into<String>) -> Self {
        ColumnDescriptor {
            feature: feature.into(),
            kind: ColumnKind::Dummy { level: level.into() },
        }
    }

    pub fn is_intercept(&self) -> bool {
        self.kind == ColumnKind::Intercept
    }

    /// Unique key: `(intercept)`, `feature`, or `feature=level`.
    pub fn key(&self) -> String {
        match &self.kind {
            ColumnKind::Intercept => INTERCEPT_KEY.to_string(),
            ColumnKind::Numeric => self.feature.clone(),
            ColumnKind::Dummy { level } => format!("{}={}", self.feature, level),
        }
    }

    /// Short name as printed in coefficient tables: the level for dummies.
    pub fn display_name(&self) -> &str {
        match &self.kind {
            ColumnKind::Intercept => INTERCEPT_KEY,
            ColumnKind::Numeric => &self.feature,
            ColumnKind::Dummy { level } => level,
        }
    }

    /// Parse a key produced by [`ColumnDescriptor::key`].
    pub fn parse_key(key: &str) -> Self {
        if key == INTERCEPT_KEY {
            Self::intercept()
        } else if let Some((f, l)) = key.split_once('=') {
            Self::dummy(f, l)
        } else {
            Self::numeric(key)
        }
    }
}

impl fmt::Display for ColumnDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

/// Encoded numeric matrix with per-column provenance and a 0/1 target.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignMatrix<T> {
    x: Matrix<T>,
    columns: Vec<ColumnDescriptor>,
    target: Vec<T>,
}

fn kept_levels(levels: &[String], policy: DropPolicy) -> Vec<(u32, &str)> {
    let mut indexed: Vec<(u32, &str)> = levels.iter().enumerate().map(|(i, l)| (i as u32, l.as_str())).collect();
    match policy {
        DropPolicy::AlphabeticalFirst => indexed.sort_by(|a, b| a.1.cmp(b.1)),
        DropPolicy::FirstListed => {}
    }
    indexed.into_iter().skip(1).collect()
}

/// Encode every feature of `d`. Numeric features are copied verbatim.
pub fn encode<T: Scalar>(d: &Dataset, opts: &EncodeOptions) -> Result<DesignMatrix<T>> {
    let target = d.target().ok_or(Error::NoTarget)?;
    let n = d.row_count();

    // (descriptor, column builder) pairs
    let mut columns = Vec::new();
    let mut data: Vec<Vec<T>> = Vec::new();
    if opts.intercept {
        columns.push(ColumnDescriptor::intercept());
        data.push(vec![T::one(); n]);
    }
    for (feature, values) in d.schema().features().iter().zip(d.columns()) {
        match (&feature.kind, values) {
            (FeatureKind::Numeric, ColumnValues::Numeric(v)) => {
                columns.push(ColumnDescriptor::numeric(&feature.label));
                data.push(v.iter().map(|&x| T::lit(x)).collect());
            }
            (FeatureKind::Categorical { levels }, ColumnValues::Categorical(v)) => {
                if opts.strict && levels.len() < 2 {
                    return Err(Error::TooFewLevels {
                        feature: feature.label.clone(),
                        levels: levels.len(),
                    });
                }
                for (idx, level) in kept_levels(levels, opts.drop) {
                    columns.push(ColumnDescriptor::dummy(&feature.label, level));
                    data.push(v.iter().map(|&c| if c == idx { T::one() } else { T::zero() }).collect());
                }
            }
            _ => unreachable!("schema kind and column storage agree"),
        }
    }
    let p = columns.len();
    let mut flat = Vec::with_capacity(n * p);
    for i in 0..n {
        flat.extend(data.iter().map(|col| col[i]));
    }
    Ok(DesignMatrix {
        x: Matrix::from_row_major(n, p, flat)?,
        columns,
        target: target.iter().map(|&t| if t { T::one() } else { T::zero() }).collect(),
    })
}

impl<T: Scalar> DesignMatrix<T> {
    pub fn new(x: Matrix<T>, columns: Vec<ColumnDescriptor>, target: Vec<T>) -> Result<Self> {
        if x.cols() != columns.len() {
            return Err(Error::Dimension(format!(
                "{} columns but {} descriptors",
                x.cols(),
                columns.len()
            )));
        }
        if x.rows() != target.len() {
            return Err(Error::Dimension(format!(
                "{} rows but target of length {}",
                x.rows(),
                target.len()
            )));
        }
        let mut keys: Vec<String> = columns.iter().map(ColumnDescriptor::key).collect();
        keys.sort();
        if let Some(w) = keys.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateLabel(w[0].clone()));
        }
        Ok(DesignMatrix { x, columns, target })
    }

    pub fn x(&self) -> &Matrix<T> {
        &self.x
    }

    pub fn columns(&self) -> &[ColumnDescriptor] {
        &self.columns
    }

    pub fn target(&self) -> &[T] {
        &self.target
    }

    pub fn rows(&self) -> usize {
        self.x.rows()
    }

    pub fn cols(&self) -> usize {
        self.x.cols()
    }

    pub fn keys(&self) -> Vec<String> {
        self.columns.iter().map(ColumnDescriptor::key).collect()
    }

    pub fn column_index(&self, key: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.key() == key)
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows()).map(|i| self.x[(i, j)]).collect()
    }

    /// Keep the columns whose keys are listed, in the order given.
    pub fn select_columns<S: AsRef<str>>(&self, keys: &[S]) -> Result<Self> {
        let idx: Vec<usize> = keys
            .iter()
            .map(|k| {
                self.column_index(k.as_ref())
                    .ok_or_else(|| Error::UnknownLabel(k.as_ref().to_string()))
            })
            .collect::<Result<_>>()?;
        let n = self.rows();
        let mut flat = Vec::with_capacity(n * idx.len());
        for i in 0..n {
            let row = self.x.row(i);
            flat.extend(idx.iter().map(|&j| row[j]));
        }
        DesignMatrix::new(
            Matrix::from_row_major(n, idx.len(), flat)?,
            idx.iter().map(|&j| self.columns[j].clone()).collect(),
            self.target.clone(),
        )
    }

    /// Drop every column whose key is listed. Unknown keys are an error.
    pub fn without_columns<S: AsRef<str>>(&self, keys: &[S]) -> Result<Self> {
        for k in keys {
            if self.column_index(k.as_ref()).is_none() {
                return Err(Error::UnknownLabel(k.as_ref().to_string()));
            }
        }
        let keep: Vec<String> = self
            .keys()
            .into_iter()
            .filter(|k| !keys.iter().any(|d| d.as_ref() == k))
            .collect();
        self.select_columns(&keep)
    }

    /// CSV with a header row of column keys followed by `target`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let header: Vec<String> = self.columns.iter().map(|c| csv_field(&c.key())).collect();
        writeln!(w, "{},target", header.join(","))?;
        for i in 0..self.rows() {
            let row: Vec<String> = self.x.row(i).iter().map(|v| v.to_string()).collect();
            writeln!(w, "{},{}", row.join(","), self.target[i])?;
        }
        Ok(())
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
