//! Stack Exchange dump ingestion.
//!
//! `parse_dump` streams `Posts.xml` rows into [`RawPost`]s, `filter_posts`
//! keeps the questions for one tag and date window together with their
//! answers, and `save_store`/`load_store` persist the result as NDJSON.

mod dump;
mod store;

pub use dump::{parse_dump, parse_tags, DumpReader, ParseMode, ParseStats};
pub use store::{filter_posts, load_store, save_store, write_store, FilterStats, PostStore};

use chrono::{DateTime, TimeZone, Utc};
use thiserror::Error;

/// Kind of post carried by a dump row (`PostTypeId` 1 or 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PostType {
    Question,
    Answer,
}

/// One question or answer row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawPost {
    pub id: u64,
    pub post_type: PostType,
    /// Question id, answers only.
    pub parent_id: Option<u64>,
    /// Questions only.
    pub accepted_answer_id: Option<u64>,
    pub score: i64,
    pub creation_date: DateTime<Utc>,
    /// Lowercase tags, questions only.
    pub tags: Vec<String>,
    pub title: Option<String>,
    pub body_html: String,
}

impl RawPost {
    pub fn is_question(&self) -> bool {
        self.post_type == PostType::Question
    }

    /// Checks the type-dependent field invariants.
    pub fn validate(&self) -> Result<(), String> {
        if self.id == 0 {
            return Err("id must be positive".into());
        }
        match self.post_type {
            PostType::Answer => {
                if self.parent_id.is_none() {
                    return Err(format!("answer {} has no parent id", self.id));
                }
                if !self.tags.is_empty() {
                    return Err(format!("answer {} carries tags", self.id));
                }
            }
            PostType::Question => {
                if self.parent_id.is_some() {
                    return Err(format!("question {} has a parent id", self.id));
                }
            }
        }
        Ok(())
    }
}

/// Half-open `[from, to)` creation-date window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DateWindow {
    pub from: DateTime<Utc>,
    pub to: DateTime<Utc>,
}

impl DateWindow {
    pub fn new(from: DateTime<Utc>, to: DateTime<Utc>) -> Result<Self, IngestError> {
        if from >= to {
            return Err(IngestError::EmptyWindow { from, to });
        }
        Ok(Self { from, to })
    }

    pub fn contains(&self, t: DateTime<Utc>) -> bool {
        self.from <= t && t < self.to
    }
}

impl Default for DateWindow {
    /// January 2009 through April 2022.
    fn default() -> Self {
        Self {
            from: Utc.with_ymd_and_hms(2009, 1, 1, 0, 0, 0).unwrap(),
            to: Utc.with_ymd_and_hms(2022, 5, 1, 0, 0, 0).unwrap(),
        }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed XML at byte {offset}: {message}")]
    Xml { offset: u64, message: String },
    #[error("malformed row at byte {offset}: {message}")]
    Row { offset: u64, message: String },
    #[error("malformed tag list {raw:?}")]
    Tags { raw: String },
    #[error("empty date window: {from} is not before {to}")]
    EmptyWindow {
        from: DateTime<Utc>,
        to: DateTime<Utc>,
    },
    #[error("store line {line}: {message}")]
    Record { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
