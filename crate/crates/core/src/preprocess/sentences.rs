/// Sentences shorter than this many whitespace-delimited tokens are merged
/// into a neighbour.
const MIN_SENTENCE_TOKENS: usize = 2;

const ABBREVIATIONS: [&str; 3] = ["e.g.", "i.e.", "vs."];

/// Splits plain text into sentences.
///
/// Lines are always separate pieces; inside a line a run of `.`, `!` or `?`
/// followed by whitespace ends a piece unless it closes one of the known
/// abbreviations. Short pieces are then merged forward (the final one
/// backward).
pub fn segment_sentences(text: &str) -> Vec<String> {
    let mut pieces = Vec::new();
    for line in text.split('\n') {
        split_line(line, &mut pieces);
    }
    merge_short(pieces)
}

fn split_line(line: &str, pieces: &mut Vec<String>) {
    let chars: Vec<(usize, char)> = line.char_indices().collect();
    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        let (_, c) = chars[i];
        if !is_terminator(c) {
            i += 1;
            continue;
        }
        let mut run_end = i;
        while run_end + 1 < chars.len() && is_terminator(chars[run_end + 1].1) {
            run_end += 1;
        }
        let next_is_space = chars.get(run_end + 1).is_some_and(|(_, n)| n.is_whitespace());
        let end_byte = chars[run_end].0 + chars[run_end].1.len_utf8();
        if next_is_space && !ends_with_abbreviation(&line[start..end_byte]) {
            push_piece(&line[start..end_byte], pieces);
            start = end_byte;
        }
        i = run_end + 1;
    }
    push_piece(&line[start..], pieces);
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn ends_with_abbreviation(piece: &str) -> bool {
    let last_word = piece.split_whitespace().last().unwrap_or("").to_lowercase();
    let last_word = last_word.trim_start_matches(['(', '[', '"', '\'']);
    ABBREVIATIONS.contains(&last_word)
}

fn push_piece(piece: &str, pieces: &mut Vec<String>) {
    let piece = piece.trim();
    if !piece.is_empty() {
        pieces.push(piece.to_string());
    }
}

fn token_count(s: &str) -> usize {
    s.split_whitespace().count()
}

fn merge_short(pieces: Vec<String>) -> Vec<String> {
    let mut out: Vec<String> = Vec::with_capacity(pieces.len());
    let mut carry: Option<String> = None;
    for piece in pieces {
        let current = match carry.take() {
            Some(mut c) => {
                c.push(' ');
                c.push_str(&piece);
                c
            }
            None => piece,
        };
        if token_count(&current) < MIN_SENTENCE_TOKENS {
            carry = Some(current);
        } else {
            out.push(current);
        }
    }
    if let Some(rest) = carry {
        match out.last_mut() {
            Some(last) => {
                last.push(' ');
                last.push_str(&rest);
            }
            None => out.push(rest),
        }
    }
    out
}
