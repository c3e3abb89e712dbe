//! Schemas, datasets, one-hot encoding and the Adult census loader.

pub mod adult;
pub mod dataset;
pub mod encode;
pub mod partition;
pub mod schema;

pub use adult::{adult_schema, load_adult, Profile};
pub use dataset::{recode_marital, ColumnValues, CsvOptions, Dataset, Recode, Value};
pub use encode::{encode, ColumnDescriptor, ColumnKind, DesignMatrix, DropPolicy, EncodeOptions, INTERCEPT_KEY};
pub use partition::FeaturePartition;
pub use schema::{Feature, FeatureKind, Schema, TargetSpec};
