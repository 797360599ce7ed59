use std::collections::BTreeMap;

use super::{LabeledSender, Source};
use crate::category::Label;
use crate::error::{Error, Result};
use crate::io::escape;

pub const DEFAULT_PRECEDENCE: [Source; 5] =
    [Source::Manual, Source::FolderVote, Source::LdaVote, Source::Heuristic, Source::Cotrain];

/// Two sources disagreeing on a sender; resolved by precedence and flagged
/// for review.
#[derive(Debug, Clone, PartialEq)]
pub struct Conflict {
    pub sender: String,
    pub winner: (Label, Source),
    pub loser: (Label, Source),
    pub resolution: Label,
    pub needs_review: bool,
}

fn rank_table(precedence: &[Source]) -> Result<BTreeMap<Source, usize>> {
    let ranks: BTreeMap<Source, usize> = precedence.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    if ranks.len() != Source::ALL.len() || precedence.len() != Source::ALL.len() {
        return Err(Error::config("precedence must list every label source exactly once"));
    }
    Ok(ranks)
}

/// Merges labeled sets into one label per sender.
///
/// Equal labels keep the highest confidence. A coarse machine label next to a
/// machine subcategory is absorbed by the subcategory. Any other disagreement
/// is settled by `precedence` and reported.
pub fn merge_labeled_sets(sets: &[Vec<LabeledSender>], precedence: &[Source]) -> Result<(Vec<LabeledSender>, Vec<Conflict>)> {
    let rank = rank_table(precedence)?;
    let mut groups: BTreeMap<&str, Vec<&LabeledSender>> = BTreeMap::new();
    for l in sets.iter().flatten() {
        groups.entry(l.sender.as_str()).or_default().push(l);
    }
    let mut merged = Vec::with_capacity(groups.len());
    let mut conflicts = Vec::new();
    for (sender, mut entries) in groups {
        entries.sort_by(|a, b| {
            rank[&a.source]
                .cmp(&rank[&b.source])
                .then_with(|| a.label.cmp(&b.label))
                .then_with(|| b.confidence.total_cmp(&a.confidence))
        });
        let refined = entries.iter().any(|e| matches!(e.label, Label::Category(c) if c.is_machine()));
        let live: Vec<&LabeledSender> = entries
            .into_iter()
            .filter(|e| !(refined && e.label == Label::Machine))
            .collect();
        // one representative per label: its highest-precedence entry
        let mut reps: Vec<&LabeledSender> = Vec::new();
        for e in &live {
            if !reps.iter().any(|r| r.label == e.label) {
                reps.push(e);
            }
        }
        let win = reps[0];
        let confidence = live
            .iter()
            .filter(|e| e.label == win.label)
            .map(|e| e.confidence)
            .fold(f64::MIN, f64::max);
        for lose in &reps[1..] {
            conflicts.push(Conflict {
                sender: sender.to_string(),
                winner: (win.label, win.source),
                loser: (lose.label, lose.source),
                resolution: win.label,
                needs_review: true,
            });
        }
        merged.push(LabeledSender::new(sender, win.label, win.source, confidence));
    }
    Ok((merged, conflicts))
}

pub fn conflicts_to_string(conflicts: &[Conflict]) -> String {
    let mut s = String::from("# sender\twinner_label\twinner_source\tloser_label\tloser_source\tresolution\treview\n");
    for c in conflicts {
        s.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            escape(&c.sender),
            c.winner.0,
            c.winner.1,
            c.loser.0,
            c.loser.1,
            c.resolution,
            if c.needs_review { "review" } else { "-" }
        ));
    }
    s
}
