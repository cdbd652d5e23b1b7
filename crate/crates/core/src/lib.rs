//! Topic discovery and extractive problem/solution summaries for Stack
//! Exchange posts.
//!
//! The pipeline runs in three stages: [`ingest`] filters a dump down to one
//! tag, [`topics`] clusters question embeddings and ranks topic terms with
//! class-based TF-IDF, and [`summarize`] extracts representative sentences
//! from questions and their well-received answers. [`report`] wires the
//! stages together behind the CLI.

pub mod embed;
pub mod fixture;
pub mod ingest;
pub mod preprocess;
pub mod util;
pub mod topics;
pub mod summarize;
pub mod report;
