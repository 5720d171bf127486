//! Raw tabular input to encoded, split datasets.

mod dataset;
pub mod libffm;
pub mod raw;
mod schema;
mod split;
mod vocab;

pub use dataset::{Dataset, Instance, Label};
pub use libffm::{format_libffm_line, parse_libffm_line, read_libffm, write_libffm};
pub use schema::{ColumnTransform, FieldKind, FieldSchema, TableSchema};
pub use split::{split_dataset, split_indices, split_sizes, SplitRatios, SplitRule};
pub use vocab::{build_vocabulary, Vocabulary, DEFAULT_MIN_FREQUENCY};

pub(crate) use dataset::check_instance as dataset_check;
