use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use super::schema::{Feature, FeatureKind, Schema, TargetSpec};
use crate::error::{Error, Result};

/// Column storage; categorical values are indices into the feature's level list.
#[derive(Clone, Debug, PartialEq)]
pub enum ColumnValues {
    Numeric(Vec<f64>),
    Categorical(Vec<u32>),
}

impl ColumnValues {
    #[cfg(test)]
    fn len(&self) -> usize {
        match self {
            ColumnValues::Numeric(v) => v.len(),
            ColumnValues::Categorical(v) => v.len(),
        }
    }

    fn take(&self, rows: &[usize]) -> Self {
        match self {
            ColumnValues::Numeric(v) => ColumnValues::Numeric(rows.iter().map(|&r| v[r]).collect()),
            ColumnValues::Categorical(v) => ColumnValues::Categorical(rows.iter().map(|&r| v[r]).collect()),
        }
    }
}

/// One cell viewed through the schema.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Value<'a> {
    Numeric(f64),
    Level(&'a str),
}

/// Labeled tabular data. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    schema: Schema,
    columns: Vec<ColumnValues>,
    target: Option<Vec<bool>>,
    row_count: usize,
}

/// Options for parsing comma-separated records.
#[derive(Clone, Debug)]
pub struct CsvOptions {
    /// A record is dropped when any field equals this token after trimming.
    pub missing_token: String,
    /// Lines starting with this prefix are skipped (the Adult test file
    /// opens with a `|1x3 Cross validator` banner).
    pub comment_prefix: Option<char>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            missing_token: "?".to_string(),
            comment_prefix: Some('|'),
        }
    }
}

impl Dataset {
    /// Build from parsed string records laid out as the schema's features
    /// followed by the target (when the schema has one).
    pub fn from_records<I, R, S>(schema: Schema, records: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, R)>,
        R: AsRef<[S]>,
        S: AsRef<str>,
    {
        let width = schema.raw_width();
        let lookups: Vec<Option<HashMap<&str, u32>>> = schema
            .features()
            .iter()
            .map(|f| {
                f.levels()
                    .map(|levels| levels.iter().enumerate().map(|(i, l)| (l.as_str(), i as u32)).collect())
            })
            .collect();
        let mut columns: Vec<ColumnValues> = schema
            .features()
            .iter()
            .map(|f| match f.kind {
                FeatureKind::Numeric => ColumnValues::Numeric(Vec::new()),
                FeatureKind::Categorical { .. } => ColumnValues::Categorical(Vec::new()),
            })
            .collect();
        let mut target = schema.target().map(|_| Vec::new());
        let mut rows = 0usize;
        for (line, record) in records {
            let record = record.as_ref();
            if record.len() != width {
                return Err(Error::Malformed {
                    line,
                    reason: format!("expected {width} fields, found {}", record.len()),
                });
            }
            for (j, (feature, col)) in schema.features().iter().zip(columns.iter_mut()).enumerate() {
                let raw = record[j].as_ref().trim();
                match col {
                    ColumnValues::Numeric(v) => {
                        let x: f64 = raw.parse().map_err(|_| Error::Malformed {
                            line,
                            reason: format!("feature {:?}: cannot parse {raw:?} as a number", feature.label),
                        })?;
                        if !x.is_finite() {
                            return Err(Error::Malformed {
                                line,
                                reason: format!("feature {:?}: non-finite value", feature.label),
                            });
                        }
                        v.push(x);
                    }
                    ColumnValues::Categorical(v) => {
                        let idx = lookups[j].as_ref().and_then(|m| m.get(raw)).ok_or_else(|| {
                            Error::UnknownLevel {
                                feature: feature.label.clone(),
                                level: raw.to_string(),
                            }
                        })?;
                        v.push(*idx);
                    }
                }
            }
            if let (Some(spec), Some(t)) = (schema.target(), target.as_mut()) {
                t.push(spec.is_positive(record[width - 1].as_ref()));
            }
            rows += 1;
        }
        Ok(Dataset {
            schema,
            columns,
            target,
            row_count: rows,
        })
    }

    /// Parse comma-separated text. Records holding the missing token are
    /// dropped; an input without any record is malformed.
    pub fn parse_csv(schema: Schema, text: &str, opts: &CsvOptions) -> Result<Self> {
        let mut saw_record = false;
        let mut kept: Vec<(usize, Vec<&str>)> = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if opts.comment_prefix.is_some_and(|c| trimmed.starts_with(c)) {
                continue;
            }
            saw_record = true;
            let fields: Vec<&str> = line.split(',').collect();
            if fields.iter().any(|f| f.trim() == opts.missing_token) {
                continue;
            }
            kept.push((idx + 1, fields));
        }
        if !saw_record {
            return Err(Error::Malformed {
                line: 0,
                reason: "no records".into(),
            });
        }
        Self::from_records(schema, kept)
    }

    pub fn read_csv(schema: Schema, path: impl AsRef<Path>, opts: &CsvOptions) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(schema, &text, opts)
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    pub fn column(&self, label: &str) -> Option<&ColumnValues> {
        self.schema.position(label).map(|i| &self.columns[i])
    }

    pub(crate) fn columns(&self) -> &[ColumnValues] {
        &self.columns
    }

    /// 0/1 target, when the schema designates one.
    pub fn target(&self) -> Option<&[bool]> {
        self.target.as_deref()
    }

    pub fn value(&self, row: usize, label: &str) -> Option<Value<'_>> {
        let j = self.schema.position(label)?;
        Some(match &self.columns[j] {
            ColumnValues::Numeric(v) => Value::Numeric(v[row]),
            ColumnValues::Categorical(v) => {
                let levels = self.schema.features()[j].levels().expect("categorical feature");
                Value::Level(&levels[v[row] as usize])
            }
        })
    }

    /// Keep only the labels in `subset`, in the dataset's own feature order.
    /// The target, if any, is always carried along.
    pub fn select<S: AsRef<str>>(&self, subset: &[S]) -> Result<Dataset> {
        let wanted: BTreeSet<&str> = subset.iter().map(AsRef::as_ref).collect();
        for label in &wanted {
            if self.schema.position(label).is_none() {
                return Err(Error::UnknownLabel(label.to_string()));
            }
        }
        let mut features = Vec::new();
        let mut columns = Vec::new();
        for (f, c) in self.schema.features().iter().zip(&self.columns) {
            if wanted.contains(f.label.as_str()) {
                features.push(f.clone());
                columns.push(c.clone());
            }
        }
        Ok(Dataset {
            schema: Schema::new_unchecked(features, self.schema.target().cloned()),
            columns,
            target: self.target.clone(),
            row_count: self.row_count,
        })
    }

    /// Rows at the given indices, in the given order.
    pub fn take_rows(&self, rows: &[usize]) -> Result<Dataset> {
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.row_count) {
            return Err(Error::InvalidArgument(format!(
                "row {bad} out of range for {} rows",
                self.row_count
            )));
        }
        Ok(Dataset {
            schema: self.schema.clone(),
            columns: self.columns.iter().map(|c| c.take(rows)).collect(),
            target: self.target.as_ref().map(|t| rows.iter().map(|&r| t[r]).collect()),
            row_count: rows.len(),
        })
    }

    pub fn head(&self, n: usize) -> Dataset {
        let rows: Vec<usize> = (0..n.min(self.row_count)).collect();
        self.take_rows(&rows).expect("indices in range")
    }

    /// Map the levels of one categorical feature onto a new level list.
    /// Every existing level must be mapped.
    pub fn recode(&self, feature: &str, mapping: &Recode) -> Result<Dataset> {
        let j = self
            .schema
            .position(feature)
            .ok_or_else(|| Error::MissingFeature(feature.to_string()))?;
        let old_levels = self.schema.features()[j]
            .levels()
            .ok_or_else(|| Error::InvalidArgument(format!("feature {feature:?} is not categorical")))?;
        let new_levels = mapping.target_levels();
        let translate: Vec<u32> = old_levels
            .iter()
            .map(|l| {
                let to = mapping.map(l).ok_or_else(|| Error::UnknownLevel {
                    feature: feature.to_string(),
                    level: l.clone(),
                })?;
                Ok(new_levels.iter().position(|n| n == to).expect("target level listed") as u32)
            })
            .collect::<Result<_>>()?;
        let ColumnValues::Categorical(values) = &self.columns[j] else {
            unreachable!("categorical schema implies categorical storage")
        };
        let mut columns = self.columns.clone();
        columns[j] = ColumnValues::Categorical(values.iter().map(|&v| translate[v as usize]).collect());
        let mut features = self.schema.features().to_vec();
        features[j] = Feature::categorical(feature, new_levels);
        Ok(Dataset {
            schema: Schema::new_unchecked(features, self.schema.target().cloned()),
            columns,
            target: self.target.clone(),
            row_count: self.row_count,
        })
    }

    #[cfg(test)]
    pub(crate) fn check_lengths(&self) -> bool {
        self.columns.iter().all(|c| c.len() == self.row_count)
            && self.target.as_ref().map_or(true, |t| t.len() == self.row_count)
    }
}

/// Level-collapsing rule for one categorical feature.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Recode {
    rules: Vec<RecodeRule>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum RecodeRule {
    Exact { from: String, to: String },
    Prefix { prefix: String, to: String },
}

impl Recode {
    pub fn new() -> Self {
        Recode { rules: Vec::new() }
    }

    pub fn exact(mut self, from: impl Into<String>, to: impl Into<String>) -> Self {
        self.rules.push(RecodeRule::Exact {
            from: from.into(),
            to: to.into(),
        });
        self
    }

    pub fn prefix(mut self, prefix: impl Into<String>, to: impl Into<String>) -> Self {
        self.rules.push(RecodeRule::Prefix {
            prefix: prefix.into(),
            to: to.into(),
        });
        self
    }

    /// First matching rule wins.
    pub fn map(&self, level: &str) -> Option<&str> {
        self.rules.iter().find_map(|r| match r {
            RecodeRule::Exact { from, to } if from == level => Some(to.as_str()),
            RecodeRule::Prefix { prefix, to } if level.starts_with(prefix.as_str()) => Some(to.as_str()),
            _ => None,
        })
    }

    /// Distinct output levels, sorted.
    pub fn target_levels(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self
            .rules
            .iter()
            .map(|r| match r {
                RecodeRule::Exact { to, .. } | RecodeRule::Prefix { to, .. } => to.as_str(),
            })
            .collect();
        set.into_iter().map(String::from).collect()
    }

    /// Marital status collapsed to {Married, Unmarried}: every `Married-*`
    /// level is married, everything else is not.
    pub fn marital_binary() -> Self {
        Recode::new()
            .prefix("Married-", "Married")
            .exact("Never-married", "Unmarried")
            .exact("Divorced", "Unmarried")
            .exact("Separated", "Unmarried")
            .exact("Widowed", "Unmarried")
    }
}

impl Default for Recode {
    fn default() -> Self {
        Self::new()
    }
}

pub const MARITAL_STATUS: &str = "marital-status";

/// Collapse `marital-status` to the binary {Married, Unmarried} recode.
pub fn recode_marital(d: &Dataset) -> Result<Dataset> {
    d.recode(MARITAL_STATUS, &Recode::marital_binary())
}

/// Convenience for tests and callers that build schemas inline.
pub fn target(label: &str, positive: &str) -> TargetSpec {
    TargetSpec {
        label: label.to_string(),
        positive: positive.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Dataset {
        let schema = Schema::new(
            vec![
                Feature::numeric("x"),
                Feature::categorical("c", ["b", "a", "c"]),
            ],
            Some(target("y", "yes")),
        )
        .unwrap();
        Dataset::parse_csv(
            schema,
            "1, a, yes\n2, ?, no\n3, c, no\n\n4,b,yes\n",
            &CsvOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn missing_rows_are_dropped() {
        let d = toy();
        assert_eq!(d.row_count(), 3);
        assert_eq!(d.target().unwrap(), &[true, false, true]);
        assert_eq!(d.value(1, "c"), Some(Value::Level("c")));
        assert!(d.check_lengths());
    }

    #[test]
    fn empty_input_is_malformed() {
        let schema = Schema::new(vec![Feature::numeric("x")], None).unwrap();
        assert!(matches!(
            Dataset::parse_csv(schema.clone(), "", &CsvOptions::default()),
            Err(Error::Malformed { .. })
        ));
        assert!(matches!(
            Dataset::parse_csv(schema, "\n\n", &CsvOptions::default()),
            Err(Error::Malformed { .. })
        ));
    }

    #[test]
    fn wrong_width_and_unknown_level() {
        let schema = Schema::new(vec![Feature::numeric("x"), Feature::categorical("c", ["a", "b"])], None).unwrap();
        let err = Dataset::parse_csv(schema.clone(), "1,a\n2\n", &CsvOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 2, .. }));
        let err = Dataset::parse_csv(schema, "1,z\n", &CsvOptions::default()).unwrap_err();
        assert!(matches!(err, Error::UnknownLevel { .. }));
    }

    #[test]
    fn select_preserves_order_and_rows() {
        let d = toy();
        let s = d.select(&["c", "x"]).unwrap();
        assert_eq!(s.schema().labels().collect::<Vec<_>>(), vec!["x", "c"]);
        assert_eq!(s.row_count(), 3);
        let empty = d.select::<&str>(&[]).unwrap();
        assert_eq!(empty.schema().len(), 0);
        assert_eq!(empty.row_count(), 3);
        assert_eq!(d.select(&["x", "c"]).unwrap(), d);
        assert!(matches!(d.select(&["nope"]), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn marital_recode() {
        let levels = [
            "Divorced",
            "Married-AF-spouse",
            "Married-civ-spouse",
            "Married-spouse-absent",
            "Never-married",
            "Separated",
            "Widowed",
        ];
        let schema = Schema::new(vec![Feature::categorical(MARITAL_STATUS, levels)], None).unwrap();
        let d = Dataset::parse_csv(schema, "Never-married\nMarried-civ-spouse\nWidowed\n", &CsvOptions::default())
            .unwrap();
        let r = recode_marital(&d).unwrap();
        assert_eq!(r.value(0, MARITAL_STATUS), Some(Value::Level("Unmarried")));
        assert_eq!(r.value(1, MARITAL_STATUS), Some(Value::Level("Married")));
        assert_eq!(r.value(2, MARITAL_STATUS), Some(Value::Level("Unmarried")));
        assert_eq!(r.row_count(), 3);
        assert!(matches!(recode_marital(&toy()), Err(Error::MissingFeature(_))));
    }
}
