//! The online classifier: lightweight rules, sender-table lookup, then
//! message-level models.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::aggregation::SenderAggregates;
use crate::category::Category;
use crate::corpus::{canonical_address, Message};
use crate::error::{Error, Result};
use crate::features::{extract_message_features, FeatureContext};
use crate::io::{escape, parse_field, read_to_string, split_fields, text_records, unescape, write_file};
use crate::models::{ModelSet, SenderTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Lightweight,
    SenderTable,
    Heavyweight,
}

impl Stage {
    pub const ALL: [Stage; 3] = [Stage::Lightweight, Stage::SenderTable, Stage::Heavyweight];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Lightweight => "lightweight",
            Stage::SenderTable => "sender_table",
            Stage::Heavyweight => "heavyweight",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL.into_iter().find(|x| x.as_str() == s).ok_or_else(|| format!("unknown stage {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeDecision {
    pub id: String,
    pub category: Category,
    pub confidence: f64,
    pub stage: Stage,
}

/// Stage-one rules: a whitelist of big, consistent senders and the
/// reply/forward-is-human rule.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LightweightRules {
    pub whitelist: BTreeMap<String, (Category, f64)>,
    pub reply_forward_rule: bool,
}

impl LightweightRules {
    pub fn to_text(&self) -> String {
        let mut s = format!("#@ reply_forward_rule\t{}\n# sender\tcategory\tconfidence\n", self.reply_forward_rule);
        for (sender, (c, p)) in &self.whitelist {
            s.push_str(&format!("{}\t{}\t{}\n", escape(sender), c, p));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut rules = LightweightRules { reply_forward_rule: true, ..Default::default() };
        for (i, line) in text.lines().enumerate() {
            if let Some(meta) = line.strip_prefix("#@ ") {
                let f = split_fields(meta, 2, i + 1)?;
                rules.reply_forward_rule = parse_field(f[1], "reply_forward_rule", i + 1)?;
            }
        }
        for (line, rec) in text_records(text) {
            let f = split_fields(rec, 3, line)?;
            let sender = unescape(f[0]).map_err(|m| Error::parse(line, m))?;
            rules.whitelist.insert(sender, (parse_field(f[1], "category", line)?, parse_field(f[2], "confidence", line)?));
        }
        Ok(rules)
    }

    pub fn write(&self, path: &std::path::Path) -> Result<()> {
        write_file(path, &self.to_text())
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        LightweightRules::parse(&read_to_string(path)?)
    }
}

/// Whitelists the `n_top` highest-volume senders whose table confidence
/// reaches `consistency`.
pub fn build_lightweight_rules(
    aggs: &SenderAggregates,
    table: &SenderTable,
    n_top: usize,
    consistency: f64,
) -> Result<LightweightRules> {
    if !(consistency > 0.5 && consistency <= 1.0) {
        return Err(Error::config(format!("whitelist consistency must be in (0.5, 1], got {consistency}")));
    }
    let mut by_volume: Vec<(&String, u64)> = aggs.iter().map(|(s, a)| (s, a.message_count)).collect();
    by_volume.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let whitelist = by_volume
        .into_iter()
        .take(n_top)
        .filter_map(|(s, _)| {
            let (c, p) = table.lookup(s)?;
            (p >= consistency).then(|| (s.clone(), (c, p)))
        })
        .collect();
    Ok(LightweightRules { whitelist, reply_forward_rule: true })
}

/// Everything the online classifier needs, read-only.
pub struct Cascade<'a> {
    pub rules: &'a LightweightRules,
    pub table: &'a SenderTable,
    pub models: &'a ModelSet,
    pub ctx: &'a FeatureContext<'a>,
    whitelist: HashMap<&'a str, (Category, f64)>,
}

impl<'a> Cascade<'a> {
    pub fn new(rules: &'a LightweightRules, table: &'a SenderTable, models: &'a ModelSet, ctx: &'a FeatureContext<'a>) -> Result<Self> {
        if models.models.is_empty() {
            return Err(Error::EmptyInput("message models".into()));
        }
        let whitelist = rules.whitelist.iter().map(|(s, v)| (s.as_str(), *v)).collect();
        Ok(Cascade { rules, table, models, ctx, whitelist })
    }

    /// Every message gets a decision; earlier stages short-circuit later ones.
    pub fn classify(&self, msg: &Message) -> CascadeDecision {
        let decide = |category, confidence, stage| CascadeDecision { id: msg.id.clone(), category, confidence, stage };
        if self.rules.reply_forward_rule && (msg.is_reply || msg.is_forward) {
            return decide(Category::Human, 1.0, Stage::Lightweight);
        }
        let sender = canonical_address(&msg.sender).unwrap_or_else(|_| msg.sender.clone());
        if let Some((c, p)) = self.whitelist.get(sender.as_str()) {
            return decide(*c, *p, Stage::Lightweight);
        }
        if let Some((c, p)) = self.table.lookup(&sender) {
            return decide(c, p, Stage::SenderTable);
        }
        let hasher = self.models.hasher().expect("checked non-empty");
        let v = extract_message_features(msg, self.ctx);
        let v = v.normalize().unwrap_or(v);
        let (c, p) = self.models.predict(&hasher.vectorize(&v)).unwrap_or((Category::Other, 0.0));
        decide(c, p, Stage::Heavyweight)
    }

    pub fn classify_batch(&self, messages: &[Message]) -> BatchReport {
        let start = Instant::now();
        let decisions: Vec<CascadeDecision> = messages.par_iter().map(|m| self.classify(m)).collect();
        let elapsed = start.elapsed().as_secs_f64();
        BatchReport::new(decisions, elapsed)
    }
}

/// Decisions of one batch with per-stage counts and wall-clock throughput.
#[derive(Debug, Clone)]
pub struct BatchReport {
    pub decisions: Vec<CascadeDecision>,
    pub stage_counts: BTreeMap<Stage, usize>,
    pub elapsed_secs: f64,
}

impl BatchReport {
    pub fn new(decisions: Vec<CascadeDecision>, elapsed_secs: f64) -> Self {
        let mut stage_counts: BTreeMap<Stage, usize> = Stage::ALL.iter().map(|s| (*s, 0)).collect();
        for d in &decisions {
            *stage_counts.entry(d.stage).or_default() += 1;
        }
        BatchReport { decisions, stage_counts, elapsed_secs }
    }

    pub fn stage_shares(&self) -> BTreeMap<Stage, f64> {
        let n = self.decisions.len().max(1) as f64;
        self.stage_counts.iter().map(|(s, c)| (*s, *c as f64 / n)).collect()
    }

    pub fn throughput(&self) -> f64 {
        self.decisions.len() as f64 / self.elapsed_secs.max(1e-9)
    }

    /// Deterministic part of the summary: counts and shares, no timings.
    pub fn summary(&self) -> String {
        let mut s = format!("messages\t{}\n", self.decisions.len());
        for (stage, share) in self.stage_shares() {
            s.push_str(&format!("share.{stage}\t{}\t{share:.6}\n", self.stage_counts[&stage]));
        }
        s
    }
}

pub fn decisions_to_string(decisions: &[CascadeDecision]) -> String {
    let mut s = String::from("# id\tcategory\tconfidence\tstage\n");
    for d in decisions {
        s.push_str(&format!("{}\t{}\t{}\t{}\n", escape(&d.id), d.category, d.confidence, d.stage));
    }
    s
}

pub fn parse_decisions(text: &str) -> Result<Vec<CascadeDecision>> {
    text_records(text)
        .map(|(line, rec)| {
            let f = split_fields(rec, 4, line)?;
            Ok(CascadeDecision {
                id: unescape(f[0]).map_err(|m| Error::parse(line, m))?,
                category: parse_field(f[1], "category", line)?,
                confidence: parse_field(f[2], "confidence", line)?,
                stage: parse_field(f[3], "stage", line)?,
            })
        })
        .collect()
}

/// Messages per second of the lookup path alone (canonicalize + table hit or
/// miss), single-threaded.
pub fn sender_table_throughput(messages: &[Message], table: &SenderTable) -> (usize, f64) {
    let start = Instant::now();
    let mut hits = 0;
    for m in messages {
        if let Ok(s) = canonical_address(&m.sender) {
            hits += table.lookup(&s).is_some() as usize;
        }
    }
    let secs = start.elapsed().as_secs_f64().max(1e-9);
    (hits, messages.len() as f64 / secs)
}
