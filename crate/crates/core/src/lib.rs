//! Contact complexity scoring.
//!
//! A multiclass boosted classifier trained on transcripts provides three
//! complexity measures per contact: agent sentence count, output entropy and
//! the summed divergence of staged predictions from the final one. These are
//! quantile-normalized and combined into a uniform score in (0, 1). The
//! score labels a pre-contact routing classifier, and the Complexity AUC
//! compares score distributions between groups of contacts.

pub mod cauc;
pub mod corpus;
pub mod error;
mod format;
pub mod gbdt;
pub mod stats;
pub mod student;
pub mod teacher;
pub mod textvec;
pub mod transforms;

pub use error::{Error, Result};
