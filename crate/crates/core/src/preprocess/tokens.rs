use std::collections::HashSet;
use std::sync::OnceLock;

use super::porter;

/// The bundled English stop-word list (175 words).
pub const BUNDLED_STOP_WORDS: &str = include_str!("../../data/stopwords.txt");

/// A stop-word set read from the one-word-per-line format, where `#` starts
/// a comment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopWords(HashSet<String>);

impl StopWords {
    pub fn parse(text: &str) -> Self {
        let words = text
            .lines()
            .map(|line| line.split('#').next().unwrap_or("").trim())
            .filter(|w| !w.is_empty())
            .map(str::to_lowercase)
            .collect();
        StopWords(words)
    }

    pub fn bundled() -> &'static StopWords {
        static WORDS: OnceLock<StopWords> = OnceLock::new();
        WORDS.get_or_init(|| StopWords::parse(BUNDLED_STOP_WORDS))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Lowercased alphabetic runs of length two or more, in order. Everything
/// outside `a-z` after lowercasing (digits, punctuation, accented letters)
/// separates tokens.
pub fn word_tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    let lower = text.to_lowercase();
    let tokens: Vec<String> = lower
        .split(|c: char| !c.is_ascii_lowercase())
        .filter(|t| t.len() >= 2)
        .map(str::to_string)
        .collect();
    tokens.into_iter()
}

/// Normalized token stream used for term weighting: word tokens minus stop
/// words, Porter-stemmed. Stems that collapse to a stop word or a single
/// letter are dropped as well.
pub fn normalize_tokens(text: &str) -> Vec<String> {
    normalize_tokens_with(text, StopWords::bundled())
}

pub fn normalize_tokens_with(text: &str, stop: &StopWords) -> Vec<String> {
    word_tokens(text)
        .filter(|t| !stop.contains(t))
        .map(|t| porter::stem(&t))
        .filter(|t| t.len() >= 2 && !stop.contains(t))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::{hex, sha256};
    use proptest::prelude::*;

    #[test]
    fn bundled_list_is_pinned() {
        assert_eq!(StopWords::bundled().len(), 175);
        assert_eq!(
            hex(&sha256(BUNDLED_STOP_WORDS.as_bytes())),
            "d9346fc371c62dcc438ae7df18ff8a7a963ef7df36ae49a62bb6bf14cc4afc28"
        );
    }

    #[test]
    fn comments_are_ignored() {
        let stop = StopWords::parse("# header\nthe\nand # trailing\n\n");
        assert_eq!(stop.len(), 2);
        assert!(stop.contains("and"));
    }

    #[test]
    fn examples() {
        assert_eq!(normalize_tokens("The build failed!!"), vec!["build", "fail"]);
        assert!(normalize_tokens("123 ++ --").is_empty());
        assert_eq!(normalize_tokens("caresses"), vec!["caress"]);
    }

    #[test]
    fn accented_letters_separate_tokens() {
        assert_eq!(normalize_tokens("caf\u{e9}teria gradle"), vec!["caf", "teria", "gradl"]);
    }

    proptest! {
        #[test]
        fn token_grammar(text in "\\PC{0,120}") {
            for tok in normalize_tokens(&text) {
                prop_assert!(tok.len() >= 2 && tok.bytes().all(|b| b.is_ascii_lowercase()), "{}", tok);
                prop_assert!(!StopWords::bundled().contains(&tok));
            }
        }

        #[test]
        fn token_grammar_on_words(text in "([A-Za-z]{1,12}[ ,.!0-9]{1,3}){0,20}") {
            for tok in normalize_tokens(&text) {
                prop_assert!(tok.len() >= 2 && tok.bytes().all(|b| b.is_ascii_lowercase()), "{}", tok);
                prop_assert!(!StopWords::bundled().contains(&tok));
            }
        }
    }
}
