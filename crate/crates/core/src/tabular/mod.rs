//! In-memory tables and the FILTER / GROUP execution engine.
//!
//! A [`Dataset`] is immutable and dictionary-encoded per column. A
//! [`Display`] is the view obtained by applying an ordered stack of filters
//! and at most one grouping to a dataset; it stores row indices into the
//! dataset rather than copies of the rows.

mod dataset;
mod display;
pub(crate) mod histogram;

pub use dataset::{Column, ColumnKind, Dataset, KindInference, Value, NULL_CODE};
pub use display::{
    canonical_number, AggFunc, Display, FilterOp, FilterPredicate, Group, Grouping,
};
pub use histogram::{column_histogram, Distribution};
