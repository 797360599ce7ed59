//! Training labels for senders: folder voting, LDA soft voting, name
//! heuristics, co-training and conflict-aware merging.

pub mod cotrain;
pub mod heuristics;
pub mod merge;
pub mod vote;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::aggregation::SenderAggregates;
use crate::category::{Category, Label};
use crate::corpus::canonicalize_sender;
use crate::error::{Error, Result};
use crate::io::{escape, parse_field, read_to_string, split_fields, text_records, unescape, write_file};

pub use cotrain::{co_train_expand, self_train, CoTrainConfig};
pub use heuristics::{heuristic_human_machine, HeuristicConfig, NameLists};
pub use merge::{conflicts_to_string, merge_labeled_sets, Conflict, DEFAULT_PRECEDENCE};
pub use vote::{lda_soft_vote, majority_vote_label, soft_vote_scores, vote_tally, VoteTally};

/// Where a sender label came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Source {
    Manual,
    FolderVote,
    LdaVote,
    Heuristic,
    Cotrain,
}

impl Source {
    pub const ALL: [Source; 5] = [Source::Manual, Source::FolderVote, Source::LdaVote, Source::Heuristic, Source::Cotrain];

    pub fn as_str(self) -> &'static str {
        match self {
            Source::Manual => "manual",
            Source::FolderVote => "folder_vote",
            Source::LdaVote => "lda_vote",
            Source::Heuristic => "heuristic",
            Source::Cotrain => "cotrain",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Source::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| format!("unknown label source {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSender {
    pub sender: String,
    pub label: Label,
    pub source: Source,
    pub confidence: f64,
}

impl LabeledSender {
    pub fn new(sender: impl Into<String>, label: Label, source: Source, confidence: f64) -> Self {
        LabeledSender { sender: sender.into(), label, source, confidence }
    }
}

/// Folder name to category, one label per name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabeledFolders {
    pub labels: BTreeMap<String, Category>,
}

impl LabeledFolders {
    pub fn parse(text: &str) -> Result<Self> {
        let mut labels = BTreeMap::new();
        for (line, rec) in text_records(text) {
            let f = split_fields(rec, 2, line)?;
            let name = f[0].trim().to_lowercase();
            let label: Category = parse_field(f[1], "label", line)?;
            if label == Category::Human {
                return Err(Error::parse(line, "folders cannot be labeled human"));
            }
            match labels.insert(name.clone(), label) {
                Some(prev) if prev != label => {
                    return Err(Error::parse(line, format!("folder {name:?} labeled both {prev} and {label}")));
                }
                _ => {}
            }
        }
        Ok(LabeledFolders { labels })
    }

    pub fn bundled() -> Self {
        LabeledFolders::parse(crate::resources::LABELED_FOLDERS).expect("bundled folder labels are valid")
    }

    pub fn read(path: &Path) -> Result<Self> {
        LabeledFolders::parse(&read_to_string(path)?)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Algorithm 1 over every sender. Confidence is the winner's vote share.
pub fn folder_vote_labels(aggs: &SenderAggregates, folders: &LabeledFolders, tau_v: u64, tau_f: usize) -> Vec<LabeledSender> {
    aggs.par_iter()
        .filter_map(|(s, a)| {
            let tally = vote_tally(&a.folders, &folders.labels);
            let (label, votes, n) = tally.winner()?;
            (votes > tau_v && n > tau_f).then(|| {
                LabeledSender::new(s.clone(), label.into(), Source::FolderVote, votes as f64 / tally.total_votes() as f64)
            })
        })
        .collect()
}

/// LDA soft voting over every sender. Confidence is the topic score.
pub fn lda_vote_labels(
    aggs: &SenderAggregates,
    mixtures: &BTreeMap<String, Vec<f64>>,
    topic_labels: &[Option<Category>],
    threshold: f64,
) -> Vec<LabeledSender> {
    aggs.par_iter()
        .filter_map(|(s, a)| {
            let (label, score) = lda_soft_vote(&a.folders, mixtures, topic_labels, threshold)?;
            Some(LabeledSender::new(s.clone(), label.into(), Source::LdaVote, score))
        })
        .collect()
}

pub fn heuristic_labels(aggs: &SenderAggregates, lists: &NameLists, cfg: &HeuristicConfig) -> Result<Vec<LabeledSender>> {
    let out: Vec<Option<LabeledSender>> = aggs
        .par_iter()
        .map(|(s, a)| {
            let c = canonicalize_sender(s)?;
            Ok(heuristic_human_machine(a, &c, lists, cfg).map(|l| LabeledSender::new(s.clone(), l, Source::Heuristic, 1.0)))
        })
        .collect::<Result<_>>()?;
    Ok(out.into_iter().flatten().collect())
}

/// Human/machine share per source, for reporting.
pub fn source_counts(labels: &[LabeledSender]) -> BTreeMap<(Source, String), usize> {
    let mut out = BTreeMap::new();
    for l in labels {
        *out.entry((l.source, l.label.to_string())).or_insert(0) += 1;
    }
    out
}

pub fn labeled_senders_to_string(labels: &[LabeledSender]) -> String {
    let mut s = String::from("# canonical_sender\tlabel\tsource\tconfidence\n");
    for l in labels {
        s.push_str(&format!("{}\t{}\t{}\t{}\n", escape(&l.sender), l.label, l.source, l.confidence));
    }
    s
}

pub fn parse_labeled_senders(text: &str) -> Result<Vec<LabeledSender>> {
    text_records(text)
        .map(|(line, rec)| {
            let f = split_fields(rec, 4, line)?;
            let sender = unescape(f[0]).map_err(|m| Error::parse(line, m))?;
            let confidence: f64 = parse_field(f[3], "confidence", line)?;
            if !(0.0..=1.0).contains(&confidence) {
                return Err(Error::parse(line, format!("confidence {confidence} outside [0,1]")));
            }
            Ok(LabeledSender {
                sender,
                label: parse_field(f[1], "label", line)?,
                source: parse_field(f[2], "source", line)?,
                confidence,
            })
        })
        .collect()
}

pub fn write_labeled_senders(path: &Path, labels: &[LabeledSender]) -> Result<()> {
    write_file(path, &labeled_senders_to_string(labels))
}

pub fn read_labeled_senders(path: &Path) -> Result<Vec<LabeledSender>> {
    parse_labeled_senders(&read_to_string(path)?)
}

/// Imports an editor-labeled file as the manual source; senders are
/// canonicalized and any stated source is replaced.
pub fn import_manual(path: &Path) -> Result<Vec<LabeledSender>> {
    let mut out = Vec::new();
    for (line, rec) in crate::io::read_records(path)? {
        let f: Vec<&str> = rec.split('\t').collect();
        if f.len() < 2 {
            return Err(Error::parse(line, "expected sender and label"));
        }
        let sender = canonicalize_sender(&unescape(f[0]).map_err(|m| Error::parse(line, m))?)?.canonical;
        out.push(LabeledSender::new(sender, parse_field(f[1], "label", line)?, Source::Manual, 1.0));
    }
    Ok(out)
}

/// Final training label per sender.
pub fn training_labels(labels: &[LabeledSender]) -> BTreeMap<String, Label> {
    labels.iter().map(|l| (l.sender.clone(), l.label)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_folders_load() {
        let f = LabeledFolders::bundled();
        assert!(f.len() > 50);
        assert_eq!(f.labels.get("bank"), Some(&Category::Financial));
    }

    #[test]
    fn conflicting_folder_labels_rejected() {
        assert!(LabeledFolders::parse("bank\tfinancial\nbank\tshopping\n").is_err());
        assert!(LabeledFolders::parse("bank\tfinancial\nbank\tfinancial\n").is_ok());
        assert!(LabeledFolders::parse("friends\thuman\n").is_err());
    }

    #[test]
    fn labeled_sender_roundtrip() {
        let v = vec![
            LabeledSender::new("a\tb@x.com", Label::Machine, Source::Heuristic, 1.0),
            LabeledSender::new("c@y.com", Category::Travel.into(), Source::LdaVote, 0.85),
        ];
        assert_eq!(parse_labeled_senders(&labeled_senders_to_string(&v)).unwrap(), v);
        assert!(parse_labeled_senders("a@b\thuman\tmanual\t1.5\n").is_err());
    }
}
