//! Sender- and domain-level rollups.
//!
//! A [`SenderAggregate`] is a commutative monoid: aggregating a stream equals
//! merging the aggregates of any partition of that stream, which is what the
//! parallel builder relies on.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;

use crate::corpus::canonical::canonical_address;
use crate::corpus::message::{Actions, Message};
use crate::error::{Error, Result};
use crate::io::{decode_counts, encode_counts, parse_field, read_records, split_fields, write_file};

/// Upper bounds of the recipient-count histogram buckets; the last bucket is open.
pub const RECIPIENT_BUCKETS: [(u32, u32); 5] = [(1, 1), (2, 5), (6, 20), (21, 100), (101, u32::MAX)];

/// Bucket labels matching [`RECIPIENT_BUCKETS`].
pub const RECIPIENT_BUCKET_NAMES: [&str; 5] = ["1", "2-5", "6-20", "21-100", "gt100"];

pub fn recipient_bucket(count: u32) -> usize {
    RECIPIENT_BUCKETS
        .iter()
        .position(|(lo, hi)| count >= *lo && count <= *hi)
        .unwrap_or(0)
}

/// Sum/min/max/count over an integer statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stat {
    pub sum: u64,
    pub min: u64,
    pub max: u64,
    pub count: u64,
}

impl Default for Stat {
    fn default() -> Self {
        Stat { sum: 0, min: u64::MAX, max: 0, count: 0 }
    }
}

impl Stat {
    pub fn push(&mut self, v: u64) {
        self.sum += v;
        self.min = self.min.min(v);
        self.max = self.max.max(v);
        self.count += 1;
    }

    pub fn merge(&mut self, other: &Stat) {
        self.sum += other.sum;
        self.min = self.min.min(other.min);
        self.max = self.max.max(other.max);
        self.count += other.count;
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum as f64 / self.count as f64
        }
    }

    /// Minimum, or 0 for an empty stat.
    pub fn min_or_zero(&self) -> u64 {
        if self.count == 0 {
            0
        } else {
            self.min
        }
    }

    fn encode(&self) -> String {
        format!("{}:{}:{}:{}", self.sum, self.min_or_zero(), self.max, self.count)
    }

    fn decode(field: &str, line: usize) -> Result<Stat> {
        let parts: Vec<&str> = field.split(':').collect();
        if parts.len() != 4 {
            return Err(Error::parse(line, format!("bad stat {field:?}")));
        }
        let count: u64 = parse_field(parts[3], "stat count", line)?;
        let min: u64 = parse_field(parts[1], "stat min", line)?;
        Ok(Stat {
            sum: parse_field(parts[0], "stat sum", line)?,
            min: if count == 0 { u64::MAX } else { min },
            max: parse_field(parts[2], "stat max", line)?,
            count,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ActionCounts {
    pub read: u64,
    pub deleted: u64,
    pub replied: u64,
    pub forwarded: u64,
    pub spam_vote: u64,
}

impl ActionCounts {
    fn push(&mut self, a: Actions) {
        self.read += a.contains(Actions::READ) as u64;
        self.deleted += a.contains(Actions::DELETED) as u64;
        self.replied += a.contains(Actions::REPLIED) as u64;
        self.forwarded += a.contains(Actions::FORWARDED) as u64;
        self.spam_vote += a.contains(Actions::SPAM_VOTE) as u64;
    }

    fn merge(&mut self, o: &ActionCounts) {
        self.read += o.read;
        self.deleted += o.deleted;
        self.replied += o.replied;
        self.forwarded += o.forwarded;
        self.spam_vote += o.spam_vote;
    }
}

/// Messages sent by the sender.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outbound {
    pub total: u64,
    pub reply: u64,
    pub forward: u64,
    pub recipients: [u64; 5],
    pub first_ts: i64,
    pub last_ts: i64,
}

impl Default for Outbound {
    fn default() -> Self {
        Outbound { total: 0, reply: 0, forward: 0, recipients: [0; 5], first_ts: i64::MAX, last_ts: i64::MIN }
    }
}

/// Messages recipients sent back to the sender. The record format carries no
/// recipient addresses, so only replies and forwards triggered by the sender's
/// mail are observable; `regular` stays zero for corpora in that format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Inbound {
    pub regular: u64,
    pub reply: u64,
    pub forward: u64,
}

impl Inbound {
    pub fn total(&self) -> u64 {
        self.regular + self.reply + self.forward
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SenderAggregate {
    pub sender: String,
    pub message_count: u64,
    pub subject_tokens: BTreeMap<String, u64>,
    pub body_tokens: BTreeMap<String, u64>,
    pub subject_len: Stat,
    pub body_len: Stat,
    pub url_count: Stat,
    pub outbound: Outbound,
    pub inbound: Inbound,
    pub actions: ActionCounts,
    pub folders: BTreeMap<String, u64>,
    /// Messages sent per hour, keyed by hours since the epoch.
    pub hourly: BTreeMap<i64, u64>,
    /// Messages whose body mentions "unsubscribe".
    pub unsubscribe_messages: u64,
}

impl SenderAggregate {
    pub fn new(sender: impl Into<String>) -> Self {
        SenderAggregate { sender: sender.into(), ..Default::default() }
    }

    pub fn from_message(sender: impl Into<String>, msg: &Message) -> Self {
        let mut agg = SenderAggregate::new(sender);
        agg.push(msg);
        agg
    }

    pub fn push(&mut self, m: &Message) {
        self.message_count += 1;
        for t in m.subject_tokens() {
            *self.subject_tokens.entry(t).or_default() += 1;
        }
        let mut unsubscribe = false;
        for t in m.body_tokens() {
            unsubscribe |= t == "unsubscribe";
            *self.body_tokens.entry(t).or_default() += 1;
        }
        self.unsubscribe_messages += unsubscribe as u64;
        self.subject_len.push(m.subject_len as u64);
        self.body_len.push(m.body_len as u64);
        self.url_count.push(m.url_count as u64);
        let o = &mut self.outbound;
        o.total += 1;
        o.reply += m.is_reply as u64;
        o.forward += m.is_forward as u64;
        o.recipients[recipient_bucket(m.recipient_count)] += 1;
        o.first_ts = o.first_ts.min(m.timestamp);
        o.last_ts = o.last_ts.max(m.timestamp);
        self.inbound.reply += m.actions.contains(Actions::REPLIED) as u64;
        self.inbound.forward += m.actions.contains(Actions::FORWARDED) as u64;
        self.actions.push(m.actions);
        if let Some(f) = &m.folder {
            *self.folders.entry(f.clone()).or_default() += 1;
        }
        *self.hourly.entry(m.timestamp.div_euclid(3600)).or_default() += 1;
    }

    /// Merges another aggregate into this one. Keys are not checked; domain
    /// rollups merge senders with different keys on purpose.
    pub fn merge(&mut self, other: &SenderAggregate) {
        self.message_count += other.message_count;
        merge_counts(&mut self.subject_tokens, &other.subject_tokens);
        merge_counts(&mut self.body_tokens, &other.body_tokens);
        self.subject_len.merge(&other.subject_len);
        self.body_len.merge(&other.body_len);
        self.url_count.merge(&other.url_count);
        let (o, p) = (&mut self.outbound, &other.outbound);
        o.total += p.total;
        o.reply += p.reply;
        o.forward += p.forward;
        for (a, b) in o.recipients.iter_mut().zip(p.recipients) {
            *a += b;
        }
        o.first_ts = o.first_ts.min(p.first_ts);
        o.last_ts = o.last_ts.max(p.last_ts);
        self.inbound.regular += other.inbound.regular;
        self.inbound.reply += other.inbound.reply;
        self.inbound.forward += other.inbound.forward;
        self.actions.merge(&other.actions);
        merge_counts(&mut self.folders, &other.folders);
        merge_counts(&mut self.hourly, &other.hourly);
        self.unsubscribe_messages += other.unsubscribe_messages;
    }

    pub fn read_ratio(&self) -> f64 {
        ratio(self.actions.read, self.outbound.total)
    }

    pub fn folder_moves(&self) -> u64 {
        self.folders.values().sum()
    }

    pub fn max_hourly(&self) -> u64 {
        self.hourly.values().copied().max().unwrap_or(0)
    }

    pub fn domain(&self) -> &str {
        self.sender.rsplit_once('@').map(|(_, d)| d).unwrap_or("")
    }

    fn to_record(&self) -> String {
        let o = &self.outbound;
        let a = &self.actions;
        let recipients: Vec<String> = o.recipients.iter().map(|c| c.to_string()).collect();
        let hourly: Vec<(String, u64)> = self.hourly.iter().map(|(h, c)| (h.to_string(), *c)).collect();
        [
            crate::io::escape(&self.sender),
            self.message_count.to_string(),
            self.subject_len.encode(),
            self.body_len.encode(),
            self.url_count.encode(),
            format!("{}:{}:{}", o.total, o.reply, o.forward),
            recipients.join(":"),
            format!("{}:{}", ts_or_dash(o.first_ts, i64::MAX), ts_or_dash(o.last_ts, i64::MIN)),
            format!("{}:{}:{}", self.inbound.regular, self.inbound.reply, self.inbound.forward),
            format!("{}:{}:{}:{}:{}", a.read, a.deleted, a.replied, a.forwarded, a.spam_vote),
            self.unsubscribe_messages.to_string(),
            encode_counts(self.folders.iter().map(|(k, v)| (k.as_str(), v))),
            encode_counts(hourly.iter().map(|(k, v)| (k.as_str(), v))),
            encode_counts(self.subject_tokens.iter().map(|(k, v)| (k.as_str(), v))),
            encode_counts(self.body_tokens.iter().map(|(k, v)| (k.as_str(), v))),
        ]
        .join("\t")
    }

    fn from_record(line: &str, lineno: usize) -> Result<Self> {
        let f = split_fields(line, SNAPSHOT_COLUMNS.len(), lineno)?;
        let ints = |field: &str, n: usize, what: &str| -> Result<Vec<u64>> {
            let parts: Vec<&str> = field.split(':').collect();
            if parts.len() != n {
                return Err(Error::parse(lineno, format!("bad {what} {field:?}")));
            }
            parts.iter().map(|p| parse_field(p, what, lineno)).collect()
        };
        let out = ints(f[5], 3, "outbound")?;
        let rec = ints(f[6], 5, "recipients")?;
        let (first, last) = f[7]
            .split_once(':')
            .ok_or_else(|| Error::parse(lineno, "bad time span"))?;
        let inb = ints(f[8], 3, "inbound")?;
        let act = ints(f[9], 5, "actions")?;
        let map = |field: &str| -> Result<BTreeMap<String, u64>> {
            Ok(decode_counts::<u64>(field, lineno)?.into_iter().collect())
        };
        let mut hourly = BTreeMap::new();
        for (k, v) in decode_counts::<u64>(f[12], lineno)? {
            hourly.insert(parse_field(&k, "hour", lineno)?, v);
        }
        Ok(SenderAggregate {
            sender: crate::io::unescape(f[0]).map_err(|e| Error::parse(lineno, e))?,
            message_count: parse_field(f[1], "message_count", lineno)?,
            subject_len: Stat::decode(f[2], lineno)?,
            body_len: Stat::decode(f[3], lineno)?,
            url_count: Stat::decode(f[4], lineno)?,
            outbound: Outbound {
                total: out[0],
                reply: out[1],
                forward: out[2],
                recipients: [rec[0], rec[1], rec[2], rec[3], rec[4]],
                first_ts: if first == "-" { i64::MAX } else { parse_field(first, "first_ts", lineno)? },
                last_ts: if last == "-" { i64::MIN } else { parse_field(last, "last_ts", lineno)? },
            },
            inbound: Inbound { regular: inb[0], reply: inb[1], forward: inb[2] },
            actions: ActionCounts {
                read: act[0],
                deleted: act[1],
                replied: act[2],
                forwarded: act[3],
                spam_vote: act[4],
            },
            unsubscribe_messages: parse_field(f[10], "unsubscribe", lineno)?,
            folders: map(f[11])?,
            hourly,
            subject_tokens: map(f[13])?,
            body_tokens: map(f[14])?,
        })
    }
}

fn ts_or_dash(ts: i64, empty: i64) -> String {
    if ts == empty {
        "-".to_string()
    } else {
        ts.to_string()
    }
}

pub fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn merge_counts<K: Ord + Clone>(into: &mut BTreeMap<K, u64>, from: &BTreeMap<K, u64>) {
    for (k, v) in from {
        *into.entry(k.clone()).or_default() += v;
    }
}

/// Column order of the aggregate snapshot file.
pub const SNAPSHOT_COLUMNS: [&str; 15] = [
    "sender",
    "messages",
    "subject_len(sum:min:max:n)",
    "body_len(sum:min:max:n)",
    "url_count(sum:min:max:n)",
    "outbound(total:reply:forward)",
    "recipients(1:2-5:6-20:21-100:gt100)",
    "span(first_ts:last_ts)",
    "inbound(regular:reply:forward)",
    "actions(read:deleted:replied:forwarded:spam_vote)",
    "unsubscribe_messages",
    "folders",
    "hourly",
    "subject_tokens",
    "body_tokens",
];

/// Aggregates keyed by canonical sender, in key order.
pub type SenderAggregates = BTreeMap<String, SenderAggregate>;

/// Rolls messages up by canonical sender. Messages with an unparsable sender
/// cannot occur (construction validates it) and are skipped defensively.
pub fn aggregate_by_sender(messages: &[Message]) -> SenderAggregates {
    messages
        .par_chunks(4096)
        .map(|chunk| {
            let mut part: SenderAggregates = BTreeMap::new();
            for m in chunk {
                let Ok(key) = canonical_address(&m.sender) else { continue };
                part.entry(key.clone())
                    .or_insert_with(|| SenderAggregate::new(key))
                    .push(m);
            }
            part
        })
        .reduce(BTreeMap::new, merge_aggregate_sets)
}

/// Union of two aggregate sets, merging shared keys.
pub fn merge_aggregate_sets(mut a: SenderAggregates, b: SenderAggregates) -> SenderAggregates {
    if a.len() < b.len() {
        return merge_aggregate_sets(b, a);
    }
    for (k, v) in b {
        match a.get_mut(&k) {
            Some(existing) => existing.merge(&v),
            None => {
                a.insert(k, v);
            }
        }
    }
    a
}

/// Keeps senders with at least `min_messages` messages.
pub fn filter_senders(aggs: &SenderAggregates, min_messages: u64) -> SenderAggregates {
    aggs.iter()
        .filter(|(_, a)| a.message_count >= min_messages)
        .map(|(k, a)| (k.clone(), a.clone()))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainAggregate {
    pub domain: String,
    pub senders: Vec<String>,
    pub merged: SenderAggregate,
}

pub fn aggregate_by_domain(senders: &SenderAggregates) -> Result<BTreeMap<String, DomainAggregate>> {
    if senders.is_empty() {
        return Err(Error::EmptyInput("no sender aggregates to group by domain".into()));
    }
    let mut out: BTreeMap<String, DomainAggregate> = BTreeMap::new();
    for (key, agg) in senders {
        let domain = agg.domain().to_string();
        let entry = out.entry(domain.clone()).or_insert_with(|| DomainAggregate {
            domain: domain.clone(),
            senders: Vec::new(),
            merged: SenderAggregate::new(domain),
        });
        entry.senders.push(key.clone());
        entry.merged.merge(agg);
    }
    Ok(out)
}

pub fn snapshot_to_string(aggs: &SenderAggregates) -> String {
    let mut out = String::new();
    out.push_str("# ");
    out.push_str(&SNAPSHOT_COLUMNS.join("\t"));
    out.push('\n');
    for a in aggs.values() {
        out.push_str(&a.to_record());
        out.push('\n');
    }
    out
}

pub fn write_snapshot(path: &Path, aggs: &SenderAggregates) -> Result<()> {
    write_file(path, &snapshot_to_string(aggs))
}

pub fn read_snapshot(path: &Path) -> Result<SenderAggregates> {
    let mut out = BTreeMap::new();
    for (lineno, line) in read_records(path)? {
        let agg = SenderAggregate::from_record(&line, lineno)?;
        out.insert(agg.sender.clone(), agg);
    }
    Ok(out)
}

pub fn parse_snapshot(text: &str) -> Result<SenderAggregates> {
    let mut out = BTreeMap::new();
    for (lineno, line) in crate::io::text_records(text) {
        let agg = SenderAggregate::from_record(line, lineno)?;
        out.insert(agg.sender.clone(), agg);
    }
    Ok(out)
}
