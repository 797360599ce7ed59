use std::collections::BTreeMap;

use crate::category::Category;

/// Per-label vote sums and voting-folder counts for one sender.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VoteTally {
    pub votes: BTreeMap<Category, u64>,
    pub folders: BTreeMap<Category, usize>,
}

impl VoteTally {
    pub fn total_votes(&self) -> u64 {
        self.votes.values().sum()
    }

    /// Label with the most votes; ties go to the alphabetically first label.
    pub fn winner(&self) -> Option<(Category, u64, usize)> {
        let mut best: Option<(Category, u64)> = None;
        for (c, v) in &self.votes {
            if best.is_none_or(|(_, bv)| *v > bv) {
                best = Some((*c, *v));
            }
        }
        best.map(|(c, v)| (c, v, self.folders.get(&c).copied().unwrap_or(0)))
    }
}

/// Sums a sender's folder moves by folder label.
pub fn vote_tally(moves: &BTreeMap<String, u64>, labeled: &BTreeMap<String, Category>) -> VoteTally {
    let mut t = VoteTally::default();
    for (folder, count) in moves {
        if *count == 0 {
            continue;
        }
        if let Some(label) = labeled.get(folder) {
            *t.votes.entry(*label).or_default() += count;
            *t.folders.entry(*label).or_default() += 1;
        }
    }
    t
}

/// Folder majority vote: the winning label is returned iff its vote sum
/// exceeds `tau_v` and more than `tau_f` distinct folders voted for it.
pub fn majority_vote_label(
    moves: &BTreeMap<String, u64>,
    labeled: &BTreeMap<String, Category>,
    tau_v: u64,
    tau_f: usize,
) -> Option<Category> {
    let (label, votes, folders) = vote_tally(moves, labeled).winner()?;
    (votes > tau_v && folders > tau_f).then_some(label)
}

/// LDA soft vote: each folder spreads its move count over topics by its
/// mixture; the renormalized best topic labels the sender iff its score
/// strictly exceeds `threshold` and the topic has a name.
pub fn lda_soft_vote(
    moves: &BTreeMap<String, u64>,
    mixtures: &BTreeMap<String, Vec<f64>>,
    topic_labels: &[Option<Category>],
    threshold: f64,
) -> Option<(Category, f64)> {
    let scores = soft_vote_scores(moves, mixtures)?;
    let mut best = 0;
    for (t, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = t;
        }
    }
    let label = topic_labels.get(best).copied().flatten()?;
    (scores[best] > threshold).then_some((label, scores[best]))
}

/// Renormalized per-topic scores, or `None` without mixture-bearing moves.
pub fn soft_vote_scores(moves: &BTreeMap<String, u64>, mixtures: &BTreeMap<String, Vec<f64>>) -> Option<Vec<f64>> {
    let mut scores: Vec<f64> = Vec::new();
    for (folder, count) in moves {
        let Some(mix) = mixtures.get(folder) else { continue };
        if scores.len() < mix.len() {
            scores.resize(mix.len(), 0.0);
        }
        for (t, w) in mix.iter().enumerate() {
            scores[t] += *count as f64 * w;
        }
    }
    let total: f64 = scores.iter().sum();
    if total <= 0.0 {
        return None;
    }
    Some(scores.into_iter().map(|s| s / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn moves(items: &[(&str, u64)]) -> BTreeMap<String, u64> {
        items.iter().map(|(f, c)| (f.to_string(), *c)).collect()
    }

    fn labeled(items: &[(&str, Category)]) -> BTreeMap<String, Category> {
        items.iter().map(|(f, c)| (f.to_string(), *c)).collect()
    }

    #[test]
    fn usbank_example() {
        let m = moves(&[("bank", 69), ("banking", 29), ("banks", 8), ("bank statements", 5), ("finance", 5), ("financial", 2)]);
        let l = labeled(&[
            ("bank", Category::Financial),
            ("banking", Category::Financial),
            ("banks", Category::Financial),
            ("bank statements", Category::Financial),
            ("finance", Category::Financial),
            ("financial", Category::Financial),
        ]);
        let t = vote_tally(&m, &l);
        assert_eq!(t.winner(), Some((Category::Financial, 118, 6)));
        assert_eq!(majority_vote_label(&m, &l, 50, 2), Some(Category::Financial));
    }

    #[test]
    fn strict_gates() {
        let l = labeled(&[("a", Category::Travel), ("b", Category::Travel), ("c", Category::Travel)]);
        assert_eq!(majority_vote_label(&moves(&[("a", 20), ("b", 20), ("c", 10)]), &l, 50, 2), None);
        assert_eq!(majority_vote_label(&moves(&[("a", 100)]), &l, 50, 2), None);
        assert_eq!(majority_vote_label(&moves(&[("a", 20), ("b", 20), ("c", 11)]), &l, 50, 2), Some(Category::Travel));
    }

    #[test]
    fn ties_go_alphabetically() {
        let l = labeled(&[("jobs", Category::Career), ("trips", Category::Travel)]);
        let t = vote_tally(&moves(&[("jobs", 5), ("trips", 5)]), &l);
        assert_eq!(t.winner().unwrap().0, Category::Career);
    }

    fn mix(items: &[(&str, &[f64])]) -> BTreeMap<String, Vec<f64>> {
        items.iter().map(|(f, m)| (f.to_string(), m.to_vec())).collect()
    }

    #[test]
    fn soft_vote_single_topic() {
        let labels = [Some(Category::Shopping), Some(Category::Travel)];
        let m = mix(&[("a", &[0.9, 0.1]), ("b", &[0.9, 0.1])]);
        let (c, s) = lda_soft_vote(&moves(&[("a", 3), ("b", 7)]), &m, &labels, 0.8).unwrap();
        assert_eq!(c, Category::Shopping);
        assert!((s - 0.9).abs() < 1e-12);
    }

    #[test]
    fn soft_vote_below_threshold() {
        let labels = [Some(Category::Shopping), Some(Category::Travel)];
        let m = mix(&[("a", &[0.79, 0.21])]);
        assert_eq!(lda_soft_vote(&moves(&[("a", 4)]), &m, &labels, 0.8), None);
        let m = mix(&[("f1", &[0.9, 0.1]), ("f2", &[0.2, 0.8])]);
        let scores = soft_vote_scores(&moves(&[("f1", 3), ("f2", 1)]), &m).unwrap();
        assert!((scores[0] - 2.9 / 4.0).abs() < 1e-12);
        assert_eq!(lda_soft_vote(&moves(&[("f1", 3), ("f2", 1)]), &m, &labels, 0.8), None);
    }

    #[test]
    fn soft_vote_without_mixtures() {
        assert_eq!(lda_soft_vote(&moves(&[("x", 3)]), &BTreeMap::new(), &[Some(Category::Travel)], 0.8), None);
    }

    proptest! {
        #[test]
        fn soft_vote_scale_invariant(
            counts in prop::collection::vec(1u64..50, 1..5),
            factor in 2u64..20,
            raw in prop::collection::vec(prop::collection::vec(0.01f64..1.0, 3), 5),
        ) {
            let mut mixtures = BTreeMap::new();
            let mut a = BTreeMap::new();
            let mut b = BTreeMap::new();
            for (i, c) in counts.iter().enumerate() {
                let m = crate::topics::lda::normalize(raw[i].clone());
                mixtures.insert(format!("f{i}"), m);
                a.insert(format!("f{i}"), *c);
                b.insert(format!("f{i}"), *c * factor);
            }
            let sa = soft_vote_scores(&a, &mixtures).unwrap();
            let sb = soft_vote_scores(&b, &mixtures).unwrap();
            for (x, y) in sa.iter().zip(&sb) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
