use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use super::hashing::HashedVector;
use super::ModelSet;
use crate::category::Category;
use crate::error::{Error, Result};
use crate::io::{escape, parse_field, read_to_string, split_fields, text_records, unescape, write_file};

/// Precomputed category per canonical sender, kept only where the model is
/// confident.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SenderTable {
    pub built_at: i64,
    pub cutoff: f64,
    entries: HashMap<String, (Category, f64)>,
}

impl SenderTable {
    pub fn new(built_at: i64, cutoff: f64) -> Self {
        SenderTable { built_at, cutoff, entries: HashMap::new() }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, sender: &str, category: Category, confidence: f64) {
        self.entries.insert(sender.to_string(), (category, confidence));
    }

    pub fn lookup(&self, canonical: &str) -> Option<(Category, f64)> {
        self.entries.get(canonical).copied()
    }

    /// Entries sorted by sender.
    pub fn sorted(&self) -> Vec<(&str, Category, f64)> {
        let mut v: Vec<_> = self.entries.iter().map(|(s, (c, p))| (s.as_str(), *c, *p)).collect();
        v.sort_by(|a, b| a.0.cmp(b.0));
        v
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("#@ built_at\t{}\tcutoff\t{}\n# sender\tcategory\tconfidence\n", self.built_at, self.cutoff);
        for (sender, c, p) in self.sorted() {
            s.push_str(&format!("{}\t{}\t{}\n", escape(sender), c, p));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut table = SenderTable::new(0, 0.0);
        for (i, line) in text.lines().enumerate() {
            if let Some(meta) = line.strip_prefix("#@ ") {
                let f = split_fields(meta, 4, i + 1)?;
                table.built_at = parse_field(f[1], "built_at", i + 1)?;
                table.cutoff = parse_field(f[3], "cutoff", i + 1)?;
            }
        }
        for (line, rec) in text_records(text) {
            let f = split_fields(rec, 3, line)?;
            let sender = unescape(f[0]).map_err(|m| Error::parse(line, m))?;
            let c: Category = parse_field(f[1], "category", line)?;
            let p: f64 = parse_field(f[2], "confidence", line)?;
            table.insert(&sender, c, p);
        }
        Ok(table)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_text())
    }

    pub fn read(path: &Path) -> Result<Self> {
        SenderTable::parse(&read_to_string(path)?)
    }
}

/// Scores every sender and keeps those whose confidence reaches `cutoff`.
pub fn build_sender_table(
    models: &ModelSet,
    senders: &BTreeMap<String, HashedVector>,
    cutoff: f64,
    built_at: i64,
) -> Result<SenderTable> {
    let mut table = SenderTable::new(built_at, cutoff);
    for (sender, x) in senders {
        let (c, p) = models.predict(x)?;
        if p >= cutoff {
            table.insert(sender, c, p);
        }
    }
    Ok(table)
}
