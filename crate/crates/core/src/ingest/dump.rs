use std::io::BufRead;

use chrono::{DateTime, NaiveDateTime, Timelike, Utc};
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::{IngestError, PostType, RawPost};

/// How row-level oddities are treated. Document-level XML errors are always fatal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// Skip and count bad rows.
    #[default]
    Lenient,
    /// Fail on the first bad row.
    Strict,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseStats {
    pub rows: u64,
    pub questions: u64,
    pub answers: u64,
    /// Rows with a PostTypeId other than 1 or 2.
    pub other_types: u64,
    /// Rows dropped in lenient mode.
    pub skipped_rows: u64,
    /// Tag lists that needed a best-effort split.
    pub tag_warnings: u64,
}

/// Streaming iterator over the posts of a `Posts.xml` dump.
///
/// Holds one row's worth of buffer at a time, so memory does not grow with
/// the size of the input.
pub struct DumpReader<R: BufRead> {
    reader: Reader<R>,
    buf: Vec<u8>,
    mode: ParseMode,
    depth: usize,
    seen_root: bool,
    done: bool,
    stats: ParseStats,
}

/// Streams posts out of `input` in lenient mode.
pub fn parse_dump<R: BufRead>(input: R) -> DumpReader<R> {
    DumpReader::new(input, ParseMode::Lenient)
}

impl<R: BufRead> DumpReader<R> {
    pub fn new(input: R, mode: ParseMode) -> Self {
        let mut reader = Reader::from_reader(input);
        reader.config_mut().trim_text(true);
        Self {
            reader,
            buf: Vec::with_capacity(4096),
            mode,
            depth: 0,
            seen_root: false,
            done: false,
            stats: ParseStats::default(),
        }
    }

    pub fn stats(&self) -> ParseStats {
        self.stats
    }

    fn offset(&self) -> u64 {
        self.reader.buffer_position()
    }

    fn fatal(&mut self, err: IngestError) -> Option<Result<RawPost, IngestError>> {
        self.done = true;
        Some(Err(err))
    }

    fn handle_row(&mut self, start: &BytesStart<'_>, offset: u64) -> Result<Option<RawPost>, IngestError> {
        self.stats.rows += 1;
        match decode_row(start, &mut self.stats) {
            Ok(RowOutcome::Post(post)) => {
                match post.post_type {
                    PostType::Question => self.stats.questions += 1,
                    PostType::Answer => self.stats.answers += 1,
                }
                Ok(Some(post))
            }
            Ok(RowOutcome::OtherType) => {
                self.stats.other_types += 1;
                Ok(None)
            }
            Err(message) => match self.mode {
                ParseMode::Strict => Err(IngestError::Row { offset, message }),
                ParseMode::Lenient => {
                    self.stats.skipped_rows += 1;
                    Ok(None)
                }
            },
        }
    }
}

impl<R: BufRead> Iterator for DumpReader<R> {
    type Item = Result<RawPost, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        loop {
            self.buf.clear();
            let offset = self.offset();
            let event = match self.reader.read_event_into(&mut self.buf) {
                Ok(ev) => ev.into_owned(),
                Err(e) => {
                    let offset = self.offset();
                    return self.fatal(IngestError::Xml {
                        offset,
                        message: e.to_string(),
                    });
                }
            };
            match event {
                Event::Start(start) => {
                    let is_row = self.depth == 1 && start.local_name().as_ref() == b"row";
                    self.depth += 1;
                    self.seen_root = true;
                    if is_row {
                        match self.handle_row(&start, offset) {
                            Ok(Some(post)) => return Some(Ok(post)),
                            Ok(None) => {}
                            Err(e) => return self.fatal(e),
                        }
                    }
                }
                Event::Empty(start) => {
                    if self.depth == 0 {
                        // An empty root element: a dump with no rows.
                        self.seen_root = true;
                        continue;
                    }
                    if self.depth == 1 && start.local_name().as_ref() == b"row" {
                        match self.handle_row(&start, offset) {
                            Ok(Some(post)) => return Some(Ok(post)),
                            Ok(None) => {}
                            Err(e) => return self.fatal(e),
                        }
                    }
                }
                Event::End(_) => {
                    self.depth = self.depth.saturating_sub(1);
                }
                Event::Text(text) => {
                    if self.depth == 0 && !text.iter().all(u8::is_ascii_whitespace) {
                        return self.fatal(IngestError::Xml {
                            offset,
                            message: "text outside the root element".into(),
                        });
                    }
                }
                Event::Eof => {
                    self.done = true;
                    if self.depth > 0 {
                        let offset = self.offset();
                        return Some(Err(IngestError::Xml {
                            offset,
                            message: "unexpected end of document inside an element".into(),
                        }));
                    }
                    if !self.seen_root {
                        return Some(Err(IngestError::Xml {
                            offset: 0,
                            message: "document has no root element".into(),
                        }));
                    }
                    return None;
                }
                _ => {}
            }
        }
    }
}

enum RowOutcome {
    Post(RawPost),
    OtherType,
}

fn decode_row(start: &BytesStart<'_>, stats: &mut ParseStats) -> Result<RowOutcome, String> {
    let mut id = None;
    let mut type_id = None;
    let mut parent_id = None;
    let mut accepted = None;
    let mut score = 0i64;
    let mut created = None;
    let mut tags_raw = None;
    let mut title = None;
    let mut body = None;

    for attr in start.attributes() {
        let attr = attr.map_err(|e| format!("bad attribute: {e}"))?;
        let value = attr
            .unescape_value()
            .map_err(|e| format!("bad attribute value: {e}"))?
            .into_owned();
        match attr.key.as_ref() {
            b"Id" => id = Some(parse_id(&value, "Id")?),
            b"PostTypeId" => type_id = Some(value),
            b"ParentId" => parent_id = Some(parse_id(&value, "ParentId")?),
            b"AcceptedAnswerId" => accepted = Some(parse_id(&value, "AcceptedAnswerId")?),
            b"Score" => {
                score = value
                    .trim()
                    .parse()
                    .map_err(|_| format!("Score {value:?} is not an integer"))?
            }
            b"CreationDate" => created = Some(parse_timestamp(&value)?),
            b"Tags" => tags_raw = Some(value),
            b"Title" => title = Some(value),
            b"Body" => body = Some(value),
            _ => {}
        }
    }

    let id = id.ok_or("row has no Id")?;
    let type_id = type_id.ok_or("row has no PostTypeId")?;
    let post_type = match type_id.trim() {
        "1" => PostType::Question,
        "2" => PostType::Answer,
        _ => return Ok(RowOutcome::OtherType),
    };
    let creation_date = created.ok_or_else(|| format!("post {id} has no CreationDate"))?;

    let post = match post_type {
        PostType::Question => {
            let tags = match tags_raw {
                Some(raw) => {
                    let (tags, balanced) = split_tags(&raw);
                    if !balanced {
                        stats.tag_warnings += 1;
                    }
                    tags
                }
                None => Vec::new(),
            };
            RawPost {
                id,
                post_type,
                parent_id: None,
                accepted_answer_id: accepted,
                score,
                creation_date,
                tags,
                title,
                body_html: body.unwrap_or_default(),
            }
        }
        PostType::Answer => RawPost {
            id,
            post_type,
            parent_id: Some(parent_id.ok_or_else(|| format!("answer {id} has no ParentId"))?),
            accepted_answer_id: None,
            score,
            creation_date,
            tags: Vec::new(),
            title: None,
            body_html: body.unwrap_or_default(),
        },
    };
    Ok(RowOutcome::Post(post))
}

fn parse_id(value: &str, what: &str) -> Result<u64, String> {
    match value.trim().parse::<u64>() {
        Ok(0) | Err(_) => Err(format!("{what} {value:?} is not a positive integer")),
        Ok(v) => Ok(v),
    }
}

/// Parses dump timestamps (`2015-06-01T12:00:00.123`, implicitly UTC) or
/// RFC 3339, truncated to whole seconds.
pub(crate) fn parse_timestamp(value: &str) -> Result<DateTime<Utc>, String> {
    let value = value.trim();
    let parsed = match DateTime::parse_from_rfc3339(value) {
        Ok(dt) => dt.with_timezone(&Utc),
        Err(_) => NaiveDateTime::parse_from_str(value, "%Y-%m-%dT%H:%M:%S%.f")
            .map_err(|_| format!("CreationDate {value:?} is not a timestamp"))?
            .and_utc(),
    };
    Ok(parsed.with_nanosecond(0).expect("zero nanoseconds is valid"))
}

/// Splits a `<a><b>` tag list. Pipe-delimited lists (`|a|b|`), used by
/// newer dumps, are accepted too. The flag is false when the angle
/// brackets did not balance and the split was best-effort.
pub(crate) fn split_tags(raw: &str) -> (Vec<String>, bool) {
    let raw = raw.trim();
    if raw.is_empty() {
        return (Vec::new(), true);
    }
    if raw.starts_with('|') && !raw.contains(['<', '>']) {
        let tags = raw
            .split('|')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(str::to_lowercase)
            .collect();
        return (tags, true);
    }

    let mut tags = Vec::new();
    let mut current = String::new();
    let mut in_tag = false;
    let mut balanced = true;
    let flush = |current: &mut String, tags: &mut Vec<String>| {
        let t = current.trim();
        if !t.is_empty() {
            tags.push(t.to_lowercase());
        }
        current.clear();
    };
    for ch in raw.chars() {
        match ch {
            '<' => {
                if in_tag || !current.trim().is_empty() {
                    balanced = false;
                }
                flush(&mut current, &mut tags);
                in_tag = true;
            }
            '>' => {
                if !in_tag {
                    balanced = false;
                }
                flush(&mut current, &mut tags);
                in_tag = false;
            }
            c => {
                if !in_tag && !c.is_whitespace() {
                    balanced = false;
                }
                current.push(c);
            }
        }
    }
    if in_tag || !current.trim().is_empty() {
        balanced = false;
    }
    flush(&mut current, &mut tags);
    (tags, balanced)
}

/// Parses an entity-decoded tag list such as `<android><java>`.
///
/// Lenient mode splits unbalanced input on a best-effort basis; strict mode
/// rejects it.
pub fn parse_tags(raw: &str, mode: ParseMode) -> Result<Vec<String>, IngestError> {
    let (tags, balanced) = split_tags(raw);
    if !balanced && mode == ParseMode::Strict {
        return Err(IngestError::Tags { raw: raw.to_string() });
    }
    Ok(tags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn parse_all(xml: &str, mode: ParseMode) -> (Vec<Result<RawPost, IngestError>>, ParseStats) {
        let mut reader = DumpReader::new(xml.as_bytes(), mode);
        let out: Vec<_> = reader.by_ref().collect();
        (out, reader.stats())
    }

    #[test]
    fn question_row_decodes_entities_once() {
        let xml = r#"<?xml version="1.0" encoding="utf-8"?>
<posts>
  <row Id="7" PostTypeId="1" Score="3" CreationDate="2015-06-01T10:20:30.450" Tags="&lt;android&gt;&lt;java&gt;" Title="A &amp;amp; B" Body="&lt;p&gt;Hi&lt;/p&gt;" />
</posts>"#;
        let (posts, stats) = parse_all(xml, ParseMode::Strict);
        assert_eq!(posts.len(), 1);
        let post = posts.into_iter().next().unwrap().unwrap();
        assert_eq!(post.id, 7);
        assert_eq!(post.post_type, PostType::Question);
        assert_eq!(post.score, 3);
        assert_eq!(post.tags, vec!["android", "java"]);
        assert_eq!(post.body_html, "<p>Hi</p>");
        // `&amp;amp;` decodes to the literal text `&amp;`, not to `&`.
        assert_eq!(post.title.as_deref(), Some("A &amp; B"));
        assert_eq!(
            post.creation_date,
            Utc.with_ymd_and_hms(2015, 6, 1, 10, 20, 30).unwrap()
        );
        assert_eq!(stats.questions, 1);
    }

    #[test]
    fn answer_row_has_parent_and_no_tags() {
        let xml = r#"<posts><row Id="8" PostTypeId="2" ParentId="7" Score="-1" CreationDate="2015-06-02T00:00:00" Body="x"/></posts>"#;
        let (posts, _) = parse_all(xml, ParseMode::Strict);
        let post = posts.into_iter().next().unwrap().unwrap();
        assert_eq!(post.post_type, PostType::Answer);
        assert_eq!(post.parent_id, Some(7));
        assert_eq!(post.score, -1);
        assert!(post.tags.is_empty());
        post.validate().unwrap();
    }

    #[test]
    fn other_post_types_are_skipped() {
        let xml = r#"<posts><row Id="9" PostTypeId="4" CreationDate="2015-06-02T00:00:00" Body="wiki"/></posts>"#;
        let (posts, stats) = parse_all(xml, ParseMode::Strict);
        assert!(posts.is_empty());
        assert_eq!(stats.other_types, 1);
    }

    #[test]
    fn missing_id_is_skipped_leniently_and_fatal_strictly() {
        let xml = r#"<posts><row PostTypeId="1" CreationDate="2015-06-02T00:00:00"/><row Id="3" PostTypeId="1" CreationDate="2015-06-02T00:00:00"/></posts>"#;
        let (posts, stats) = parse_all(xml, ParseMode::Lenient);
        assert_eq!(posts.len(), 1);
        assert_eq!(posts[0].as_ref().unwrap().id, 3);
        assert_eq!(stats.skipped_rows, 1);

        let (posts, _) = parse_all(xml, ParseMode::Strict);
        assert_eq!(posts.len(), 1);
        assert!(matches!(posts[0], Err(IngestError::Row { .. })));
    }

    #[test]
    fn malformed_document_reports_offset() {
        let xml = "<posts><row Id=\"1\" PostTypeId=\"1\" CreationDate=\"2015-06-02T00:00:00\"/></rows>";
        let (posts, _) = parse_all(xml, ParseMode::Lenient);
        let err = posts.into_iter().find_map(Result::err).expect("error");
        match err {
            IngestError::Xml { offset, .. } => assert!(offset > 0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn truncated_document_is_fatal() {
        let xml = "<posts><row Id=\"1\" PostTypeId=\"1\" CreationDate=\"2015-06-02T00:00:00\"/>";
        let (posts, _) = parse_all(xml, ParseMode::Lenient);
        assert!(posts.last().unwrap().is_err());
    }

    #[test]
    fn tag_lists() {
        assert_eq!(parse_tags("<android><java>", ParseMode::Strict).unwrap(), vec!["android", "java"]);
        assert!(parse_tags("", ParseMode::Strict).unwrap().is_empty());
        assert_eq!(parse_tags("<Android>", ParseMode::Strict).unwrap(), vec!["android"]);
        assert_eq!(parse_tags("|android|java|", ParseMode::Strict).unwrap(), vec!["android", "java"]);
    }

    #[test]
    fn unbalanced_tags() {
        assert_eq!(parse_tags("<android><java", ParseMode::Lenient).unwrap(), vec!["android", "java"]);
        assert_eq!(parse_tags("android>", ParseMode::Lenient).unwrap(), vec!["android"]);
        assert!(matches!(
            parse_tags("<android><java", ParseMode::Strict),
            Err(IngestError::Tags { .. })
        ));
    }
}
