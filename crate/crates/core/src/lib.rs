//! Task-level AI impact scoring.
//!
//! Tasks and AI patents are embedded, each task is scored by its best
//! matching patent, tasks above a corpus-wide percentile threshold count as
//! impacted, and those flags are rolled up to occupations, sectors,
//! education bins and regions. Statistics, a word-matching baseline and a
//! staged command-line pipeline sit on top.

pub mod baseline;
pub mod corpus;
pub mod embed_store;
pub mod matcher;
pub mod metrics;
pub mod output;
pub mod pipeline;
pub mod stats;
pub mod table;
pub mod text;
