use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{escape, parse_field, read_records, split_fields, unescape, write_file};

/// Recipient actions recorded for a delivered message.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Actions(u8);

impl Actions {
    pub const READ: Actions = Actions(1);
    pub const DELETED: Actions = Actions(1 << 1);
    pub const REPLIED: Actions = Actions(1 << 2);
    pub const FORWARDED: Actions = Actions(1 << 3);
    pub const SPAM_VOTE: Actions = Actions(1 << 4);

    const NAMES: [(Actions, &'static str); 5] = [
        (Actions::READ, "read"),
        (Actions::DELETED, "deleted"),
        (Actions::REPLIED, "replied"),
        (Actions::FORWARDED, "forwarded"),
        (Actions::SPAM_VOTE, "spam_vote"),
    ];

    pub fn empty() -> Self {
        Actions(0)
    }

    pub fn contains(self, other: Actions) -> bool {
        self.0 & other.0 == other.0 && other.0 != 0
    }

    pub fn insert(&mut self, other: Actions) {
        self.0 |= other.0;
    }

    pub fn with(mut self, other: Actions) -> Self {
        self.insert(other);
        self
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    fn parse(field: &str, line: usize) -> Result<Self> {
        let mut out = Actions::empty();
        if field.is_empty() || field == "-" {
            return Ok(out);
        }
        for name in field.split(',') {
            let flag = Self::NAMES
                .iter()
                .find(|(_, n)| *n == name.trim())
                .map(|(f, _)| *f)
                .ok_or_else(|| Error::parse(line, format!("unknown flag {name:?}")))?;
            out.insert(flag);
        }
        Ok(out)
    }
}

impl fmt::Display for Actions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("-");
        }
        let names: Vec<&str> = Self::NAMES
            .iter()
            .filter(|(flag, _)| self.contains(*flag))
            .map(|(_, n)| *n)
            .collect();
        f.write_str(&names.join(","))
    }
}

/// One delivered email with the recipient's actions on it.
///
/// Lengths, url count and the reply/forward flags are derived from the raw
/// subject and body when the message is constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub id: String,
    pub sender: String,
    pub recipient_count: u32,
    pub timestamp: i64,
    pub subject: String,
    pub body: String,
    pub actions: Actions,
    pub folder: Option<String>,
    pub subject_len: usize,
    pub body_len: usize,
    pub url_count: usize,
    pub is_reply: bool,
    pub is_forward: bool,
}

impl Message {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: impl Into<String>,
        sender: &str,
        recipient_count: u32,
        timestamp: i64,
        subject: impl Into<String>,
        body: impl Into<String>,
        actions: Actions,
        folder: Option<String>,
    ) -> Result<Self> {
        let sender = sender.trim().to_lowercase();
        if sender.matches('@').count() != 1 {
            return Err(Error::InvalidAddress(sender));
        }
        let subject = subject.into();
        let body = body.into();
        let folder = folder
            .map(|f| f.trim().to_lowercase())
            .filter(|f| !f.is_empty());
        Ok(Message {
            id: id.into(),
            subject_len: subject.chars().count(),
            body_len: body.chars().count(),
            url_count: count_urls(&body),
            is_reply: has_prefix(&subject, &["re:"]),
            is_forward: has_prefix(&subject, &["fw:", "fwd:"]),
            sender,
            recipient_count,
            timestamp,
            subject,
            body,
            actions,
            folder,
        })
    }

    pub fn subject_tokens(&self) -> Vec<String> {
        tokenize(&self.subject)
    }

    pub fn body_tokens(&self) -> Vec<String> {
        tokenize(&self.body)
    }

    /// Serializes to the line format read by [`parse_message_record`].
    pub fn to_record(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            escape(&self.id),
            escape(&self.sender),
            self.recipient_count,
            self.timestamp,
            escape(&self.subject),
            escape(&self.body),
            self.actions,
            self.folder.as_deref().map(escape).unwrap_or_default(),
        )
    }
}

fn has_prefix(subject: &str, prefixes: &[&str]) -> bool {
    let s = subject.trim_start().to_lowercase();
    prefixes.iter().any(|p| s.starts_with(p))
}

fn count_urls(body: &str) -> usize {
    body.split_whitespace()
        .filter(|w| {
            let w = w.to_ascii_lowercase();
            w.starts_with("http://") || w.starts_with("https://") || w.starts_with("www.")
        })
        .count()
}

/// Lowercases, splits on non-alphanumerics and drops single-character tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().nth(1).is_some())
        .map(|t| t.to_lowercase())
        .collect()
}

/// Parses one record of the corpus line format:
/// `id, from, to_count, ts, subject, body, flags, folder`, tab separated.
pub fn parse_message_record(line: &str, lineno: usize) -> Result<Message> {
    let f = split_fields(line, 8, lineno)?;
    let text = |i: usize| unescape(f[i]).map_err(|e| Error::parse(lineno, e));
    let id = text(0)?;
    if id.trim().is_empty() {
        return Err(Error::parse(lineno, "missing id"));
    }
    let sender = text(1)?;
    if sender.trim().is_empty() {
        return Err(Error::parse(lineno, "missing sender"));
    }
    if f[3].trim().is_empty() {
        return Err(Error::parse(lineno, "missing timestamp"));
    }
    let to_count = parse_field(f[2], "to_count", lineno)?;
    let ts = parse_field(f[3], "timestamp", lineno)?;
    let actions = Actions::parse(f[6], lineno)?;
    let folder = if f[7].is_empty() { None } else { Some(text(7)?) };
    Message::new(id, &sender, to_count, ts, text(4)?, text(5)?, actions, folder).map_err(|e| match e {
        Error::InvalidAddress(a) => Error::parse(lineno, format!("invalid sender {a:?}")),
        other => other,
    })
}

/// Parses a whole corpus, rejecting duplicate ids.
pub fn parse_corpus<'a, I>(records: I) -> Result<Vec<Message>>
where
    I: IntoIterator<Item = (usize, &'a str)>,
{
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (lineno, line) in records {
        let msg = parse_message_record(line, lineno)?;
        if !seen.insert(msg.id.clone()) {
            return Err(Error::DuplicateId { id: msg.id, line: lineno });
        }
        out.push(msg);
    }
    Ok(out)
}

pub fn read_corpus(path: &Path) -> Result<Vec<Message>> {
    let records = read_records(path)?;
    parse_corpus(records.iter().map(|(n, l)| (*n, l.as_str())))
}

pub fn corpus_to_string(messages: &[Message]) -> String {
    let mut out = String::with_capacity(messages.len() * 256);
    out.push_str("# id\tfrom\tto_count\tts\tsubject\tbody\tflags\tfolder\n");
    for m in messages {
        out.push_str(&m.to_record());
        out.push('\n');
    }
    out
}

pub fn write_corpus(path: &Path, messages: &[Message]) -> Result<()> {
    write_file(path, &corpus_to_string(messages))
}
