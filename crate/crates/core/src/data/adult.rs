//! UCI Adult census income: built-in schema, loader and analysis profiles.

use std::path::Path;

use super::dataset::{CsvOptions, Dataset};
use super::encode::{encode, DesignMatrix, EncodeOptions};
use super::schema::Schema;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const ADULT_SCHEMA: &str = include_str!("adult.schema");

pub const AGE: &str = "age";

/// The fourteen-attribute Adult layout plus the income target.
pub fn adult_schema() -> Schema {
    Schema::parse(ADULT_SCHEMA).expect("built-in schema parses")
}

/// Load an Adult-format file, dropping every record that holds
/// `missing_token` in any field.
pub fn load_adult(path: impl AsRef<Path>, missing_token: &str) -> Result<Dataset> {
    let opts = CsvOptions {
        missing_token: missing_token.to_string(),
        ..CsvOptions::default()
    };
    Dataset::read_csv(adult_schema(), path, &opts)
}

/// Which features take part in an analysis and how they are encoded.
#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    pub name: String,
    /// Schema labels eligible for training.
    pub features: Vec<String>,
    /// Sensitive schema labels (S_P).
    pub sensitive: Vec<String>,
    /// Restrict the encoded unsensitive columns to these keys.
    pub column_subset: Option<Vec<String>>,
    /// Keep only the first `row_limit` rows.
    pub row_limit: Option<usize>,
    pub encode: EncodeOptions,
}

const FULL_FEATURES: [&str; 8] = [
    "workclass",
    "education",
    "education-num",
    "marital-status",
    "occupation",
    "relationship",
    "hours-per-week",
    "native-country",
];

const SUBSAMPLE_COLUMNS: [&str; 8] = [
    "education-num",
    "hours-per-week",
    "marital-status=Married-civ-spouse",
    "marital-status=Never-married",
    "marital-status=Widowed",
    "relationship=Own-child",
    "occupation=Exec-managerial",
    "occupation=Prof-specialty",
];

pub const SUBSAMPLE_ROWS: usize = 1024;

impl Profile {
    /// Eight unsensitive features, 87 encoded columns, no intercept
    /// (education-num plus the education dummies already span the constant).
    pub fn full() -> Self {
        Profile {
            name: "full".into(),
            features: FULL_FEATURES.iter().map(|s| s.to_string()).collect(),
            sensitive: vec![AGE.into()],
            column_subset: None,
            row_limit: None,
            encode: EncodeOptions {
                intercept: false,
                ..EncodeOptions::default()
            },
        }
    }

    /// First 1024 training rows, eight unsensitive columns plus intercept.
    /// Sized for the encrypted backend.
    pub fn subsample() -> Self {
        Profile {
            name: "subsample".into(),
            features: FULL_FEATURES.iter().map(|s| s.to_string()).collect(),
            sensitive: vec![AGE.into()],
            column_subset: Some(SUBSAMPLE_COLUMNS.iter().map(|s| s.to_string()).collect()),
            row_limit: Some(SUBSAMPLE_ROWS),
            encode: EncodeOptions::default(),
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "full" => Ok(Self::full()),
            "subsample" => Ok(Self::subsample()),
            other => Err(Error::InvalidArgument(format!("unknown profile {other:?}"))),
        }
    }

    pub fn with_sensitive<S: Into<String>>(mut self, sensitive: impl IntoIterator<Item = S>) -> Self {
        self.sensitive = sensitive.into_iter().map(Into::into).collect();
        self
    }

    /// Restrict `d` to the profile's rows and its sensitive plus unsensitive
    /// features.
    pub fn prepare(&self, d: &Dataset) -> Result<Dataset> {
        for s in &self.sensitive {
            if d.schema().position(s).is_none() {
                return Err(Error::UnknownLabel(s.clone()));
            }
        }
        let labels: Vec<&str> = self
            .features
            .iter()
            .chain(&self.sensitive)
            .map(String::as_str)
            .collect();
        let d = d.select(&labels)?;
        Ok(match self.row_limit {
            Some(n) => d.head(n),
            None => d,
        })
    }

    /// Encode a prepared dataset, applying the column subset to the
    /// unsensitive columns. Sensitive columns are always kept.
    pub fn design<T: Scalar>(&self, d: &Dataset) -> Result<DesignMatrix<T>> {
        let m = encode::<T>(d, &self.encode)?;
        let Some(subset) = &self.column_subset else {
            return Ok(m);
        };
        let keep: Vec<String> = m
            .columns()
            .iter()
            .filter(|c| {
                c.is_intercept()
                    || self.sensitive.contains(&c.feature)
                    || subset.contains(&c.key())
                    // a recode invalidates the subset keys for that feature
                    || recoded(d, &c.feature)
            })
            .map(|c| c.key())
            .collect();
        m.select_columns(&keep)
    }
}

// A categorical feature whose level list no longer matches the built-in schema.
fn recoded(d: &Dataset, feature: &str) -> bool {
    let builtin = adult_schema();
    match (d.schema().feature(feature), builtin.feature(feature)) {
        (Some(now), Some(orig)) => now.levels() != orig.levels(),
        _ => false,
    }
}
