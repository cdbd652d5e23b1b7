//! Markup handling for post bodies. Hand-rolled rather than a full HTML
//! parser: bodies are small fragments and the rules needed here are few.

const CODE_TAGS: [&str; 2] = ["code", "pre"];

const BLOCK_TAGS: [&str; 12] = [
    "p", "br", "li", "div", "h1", "h2", "h3", "h4", "h5", "h6", "blockquote", "hr",
];

/// Removes every `<code>` and `<pre>` element together with its content.
/// An unclosed element swallows the rest of the input.
///
/// Removal is repeated until nothing changes, so the function is idempotent
/// even when deleting a block splices a new opening tag together.
pub fn strip_code_blocks(html: &str) -> String {
    let mut current = strip_once(html);
    loop {
        let next = strip_once(&current);
        if next == current {
            return current;
        }
        current = next;
    }
}

fn strip_once(html: &str) -> String {
    let lower = html.to_ascii_lowercase();
    let mut out = String::with_capacity(html.len());
    let mut pos = 0;
    while pos < html.len() {
        match find_open_tag(&lower, pos) {
            Some((start, name)) => {
                out.push_str(&html[pos..start]);
                pos = match find_matching_close(&lower, start, name) {
                    Some(end) => end,
                    None => html.len(),
                };
            }
            None => {
                out.push_str(&html[pos..]);
                break;
            }
        }
    }
    out
}

/// Whether an element named `name` opens at byte `at` of `lower`.
fn opens_at(lower: &str, at: usize, name: &str) -> bool {
    let rest = &lower[at..];
    if !rest.starts_with('<') || !rest[1..].starts_with(name) {
        return false;
    }
    matches!(
        rest.as_bytes().get(1 + name.len()),
        None | Some(b'>' | b'/' | b' ' | b'\t' | b'\n' | b'\r')
    )
}

fn closes_at(lower: &str, at: usize, name: &str) -> bool {
    let rest = &lower[at..];
    if !rest.starts_with("</") || !rest[2..].starts_with(name) {
        return false;
    }
    matches!(
        rest.as_bytes().get(2 + name.len()),
        None | Some(b'>' | b' ' | b'\t' | b'\n' | b'\r')
    )
}

fn find_open_tag(lower: &str, from: usize) -> Option<(usize, &'static str)> {
    lower[from..].match_indices('<').find_map(|(i, _)| {
        let at = from + i;
        CODE_TAGS.iter().find(|name| opens_at(lower, at, name)).map(|name| (at, *name))
    })
}

/// Byte offset just past the close tag matching the element opened at `start`.
fn find_matching_close(lower: &str, start: usize, name: &str) -> Option<usize> {
    let mut depth = 0usize;
    for (i, _) in lower[start..].match_indices('<') {
        let at = start + i;
        if opens_at(lower, at, name) {
            let tag_end = lower[at..].find('>').map(|e| at + e)?;
            if lower.as_bytes()[tag_end - 1] != b'/' {
                depth += 1;
            } else if depth == 0 {
                return Some(tag_end + 1);
            }
        } else if closes_at(lower, at, name) {
            depth = depth.saturating_sub(1);
            if depth == 0 {
                let tag_end = lower[at..].find('>').map(|e| at + e + 1).unwrap_or(lower.len());
                return Some(tag_end);
            }
        }
    }
    None
}

/// Converts a code-free HTML fragment to plain text. Block-level elements
/// become line breaks, other tags vanish, entities are decoded, and each
/// line has its whitespace collapsed. Empty lines are dropped.
pub fn html_to_text(html: &str) -> String {
    let mut raw = String::with_capacity(html.len());
    let mut rest = html;
    while let Some(lt) = rest.find('<') {
        raw.push_str(&rest[..lt]);
        let after = &rest[lt + 1..];
        let is_tag = after
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic() || c == '/' || c == '!');
        if !is_tag {
            raw.push('<');
            rest = after;
            continue;
        }
        let Some(gt) = after.find('>') else {
            // Unterminated tag: drop the remainder.
            rest = "";
            break;
        };
        let tag = &after[..gt];
        if is_block_tag(tag) {
            raw.push('\n');
        }
        rest = &after[gt + 1..];
    }
    raw.push_str(rest);

    let decoded = decode_entities(&raw);
    let mut lines = Vec::new();
    for line in decoded.lines() {
        let collapsed = line.split_whitespace().collect::<Vec<_>>().join(" ");
        if !collapsed.is_empty() {
            lines.push(collapsed);
        }
    }
    lines.join("\n")
}

fn is_block_tag(tag: &str) -> bool {
    let name: String = tag
        .trim_start_matches('/')
        .chars()
        .take_while(|c| c.is_ascii_alphanumeric())
        .collect::<String>()
        .to_ascii_lowercase();
    BLOCK_TAGS.contains(&name.as_str())
}

/// Decodes the five XML entities and numeric character references.
/// Anything else that looks like an entity is left as written.
pub fn decode_entities(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        let after = &rest[amp + 1..];
        let decoded = after.find(';').filter(|&semi| semi <= 10).and_then(|semi| {
            let name = &after[..semi];
            let ch = match name {
                "amp" => Some('&'),
                "lt" => Some('<'),
                "gt" => Some('>'),
                "quot" => Some('"'),
                "apos" => Some('\''),
                _ => name.strip_prefix('#').and_then(|num| {
                    let code = match num.strip_prefix(['x', 'X']) {
                        Some(hex) => u32::from_str_radix(hex, 16).ok(),
                        None => num.parse::<u32>().ok(),
                    };
                    code.and_then(char::from_u32)
                }),
            };
            ch.map(|c| (c, semi))
        });
        match decoded {
            Some((c, semi)) => {
                out.push(c);
                rest = &after[semi + 1..];
            }
            None => {
                out.push('&');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}
