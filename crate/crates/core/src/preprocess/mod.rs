//! Turns post markup into clean sentences (for embedding and summaries) and
//! a normalized token stream (for term weighting).

mod html;
mod porter;
mod sentences;
mod tokens;

pub use html::{decode_entities, html_to_text, strip_code_blocks};
pub use porter::stem;
pub use sentences::segment_sentences;
pub use tokens::{normalize_tokens, normalize_tokens_with, word_tokens, StopWords, BUNDLED_STOP_WORDS};

use crate::ingest::{PostType, RawPost};

/// Documents with fewer normalized tokens than this are left out of topic
/// modeling.
pub const MIN_MODEL_TOKENS: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CleanDocument {
    pub post_id: u64,
    pub role: PostType,
    /// Title (if any) and body text, one line per block.
    pub clean_text: String,
    pub sentences: Vec<String>,
    pub tokens: Vec<String>,
}

impl CleanDocument {
    pub fn is_modelable(&self) -> bool {
        self.tokens.len() >= MIN_MODEL_TOKENS
    }
}

/// Cleans one post. A question title becomes its own leading sentence and
/// is not merged with the body.
pub fn preprocess_post(post: &RawPost) -> CleanDocument {
    let body = html_to_text(&strip_code_blocks(&post.body_html));
    let title = post
        .title
        .as_deref()
        .map(|t| t.split_whitespace().collect::<Vec<_>>().join(" "))
        .filter(|t| !t.is_empty());

    let mut sentences = Vec::new();
    let clean_text = match &title {
        Some(t) => {
            sentences.push(t.clone());
            if body.is_empty() {
                t.clone()
            } else {
                format!("{t}\n{body}")
            }
        }
        None => body.clone(),
    };
    sentences.extend(segment_sentences(&body));
    let tokens = normalize_tokens(&clean_text);
    CleanDocument {
        post_id: post.id,
        role: post.post_type,
        clean_text,
        sentences,
        tokens,
    }
}
