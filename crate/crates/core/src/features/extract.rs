use chrono::{DateTime, Datelike};

use crate::aggregation::{ratio, SenderAggregate, RECIPIENT_BUCKET_NAMES};
use crate::corpus::canonical::{canonicalize_sender, name_tokens, CanonicalSender};
use crate::corpus::message::Message;
use crate::error::{Error, Result};
use crate::features::vector::{Family, FeatureVector, VectorBuilder};
use crate::features::vocab::Vocabularies;
use crate::features::CommercialKeywordList;

/// Thresholds of the burst ladder: "more than X messages in one hour".
pub const BURST_LADDER: [u64; 5] = [10, 60, 80, 100, 120];

/// Prefix of body-word feature names; the no-body ablation drops these.
pub const BODY_WORD_PREFIX: &str = "content/body:";

/// Everything extraction needs besides the input itself.
#[derive(Debug, Clone)]
pub struct FeatureContext<'a> {
    pub vocabs: &'a Vocabularies,
    pub keywords: &'a CommercialKeywordList,
    pub burst_ladder: &'a [u64],
}

impl<'a> FeatureContext<'a> {
    pub fn new(vocabs: &'a Vocabularies, keywords: &'a CommercialKeywordList) -> Self {
        FeatureContext { vocabs, keywords, burst_ladder: &BURST_LADDER }
    }
}

/// One indicator per ladder threshold: set iff some hour strictly exceeds it.
pub fn extract_burst_indicators(hourly_counts: &[u64], ladder: &[u64]) -> Vec<bool> {
    let max = hourly_counts.iter().copied().max().unwrap_or(0);
    ladder.iter().map(|x| max > *x).collect()
}

fn address_features(b: &mut VectorBuilder, c: &CanonicalSender, ctx: &FeatureContext) {
    let vocab = &ctx.vocabs.address;
    for t in name_tokens(&c.name_part) {
        if vocab.contains(t) {
            b.flag(Family::Address, &format!("name:{t}"));
        }
    }
    for t in c.domain_part.split('.') {
        if vocab.contains(t) {
            b.flag(Family::Address, &format!("domain:{t}"));
        }
    }
    for k in ctx.keywords.matches(&c.canonical) {
        b.flag(Family::Address, &format!("kw:{k}"));
    }
    if c.is_wildcarded() {
        b.flag(Family::Address, "wildcard");
    }
}

/// Message-level features: content and address families only.
pub fn extract_message_features(msg: &Message, ctx: &FeatureContext) -> FeatureVector {
    let mut b = VectorBuilder::new();
    let vocab = &ctx.vocabs.content;
    for t in msg.subject_tokens() {
        if vocab.contains(&t) {
            b.count(Family::Content, &format!("subj:{t}"), 1.0);
        }
    }
    for t in msg.body_tokens() {
        if vocab.contains(&t) {
            b.count(Family::Content, &format!("body:{t}"), 1.0);
        }
    }
    b.count(Family::Content, "subject_len", msg.subject_len as f64);
    b.count(Family::Content, "body_len", msg.body_len as f64);
    b.count(Family::Content, "url_count", msg.url_count as f64);
    if let Ok(c) = canonicalize_sender(&msg.sender) {
        address_features(&mut b, &c, ctx);
    }
    b.build()
}

/// Number of Monday-started calendar weeks touched by `[first, last]`.
pub fn weeks_spanned(first: i64, last: i64) -> u64 {
    let week = |ts: i64| (ts.div_euclid(86_400) + 3).div_euclid(7);
    (week(last) - week(first) + 1).max(1) as u64
}

/// Number of calendar months touched by `[first, last]` (UTC).
pub fn months_spanned(first: i64, last: i64) -> u64 {
    let month = |ts: i64| {
        DateTime::from_timestamp(ts, 0)
            .map(|d| d.year() as i64 * 12 + d.month0() as i64)
            .unwrap_or(0)
    };
    (month(last) - month(first) + 1).max(1) as u64
}

/// Sender-level features over all five families.
pub fn extract_sender_features(agg: &SenderAggregate, ctx: &FeatureContext) -> Result<FeatureVector> {
    if agg.message_count == 0 {
        return Err(Error::EmptyInput(format!("sender {} has no messages", agg.sender)));
    }
    let mut b = VectorBuilder::new();
    let vocab = &ctx.vocabs.content;
    for (t, c) in &agg.subject_tokens {
        if vocab.contains(t) {
            b.count(Family::Content, &format!("subj:{t}"), *c as f64);
        }
    }
    for (t, c) in &agg.body_tokens {
        if vocab.contains(t) {
            b.count(Family::Content, &format!("body:{t}"), *c as f64);
        }
    }
    for (name, s) in [("subject_len", &agg.subject_len), ("body_len", &agg.body_len), ("url_count", &agg.url_count)] {
        b.count(Family::Content, &format!("{name}_avg"), s.mean());
        b.count(Family::Content, &format!("{name}_min"), s.min_or_zero() as f64);
        b.count(Family::Content, &format!("{name}_max"), s.max as f64);
    }

    let o = &agg.outbound;
    let total = o.total.max(agg.message_count);
    b.count(Family::Behavioral, "out_total", o.total as f64);
    b.count(Family::Behavioral, "out_reply", o.reply as f64);
    b.count(Family::Behavioral, "out_forward", o.forward as f64);
    b.count(Family::Behavioral, "out_weekly_mean", o.total as f64 / weeks_spanned(o.first_ts, o.last_ts) as f64);
    b.count(Family::Behavioral, "out_monthly_mean", o.total as f64 / months_spanned(o.first_ts, o.last_ts) as f64);
    for (name, c) in RECIPIENT_BUCKET_NAMES.iter().zip(o.recipients) {
        if c > 0 {
            b.count(Family::Behavioral, &format!("rcpt:{name}"), c as f64);
        }
    }
    b.count(Family::Behavioral, "in_regular", agg.inbound.regular as f64);
    b.count(Family::Behavioral, "in_reply", agg.inbound.reply as f64);
    b.count(Family::Behavioral, "in_forward", agg.inbound.forward as f64);
    let a = &agg.actions;
    b.ratio(Family::Behavioral, "read_ratio", ratio(a.read, total));
    b.ratio(Family::Behavioral, "deleted_ratio", ratio(a.deleted, total));
    b.ratio(Family::Behavioral, "replied_ratio", ratio(a.replied, total));
    b.ratio(Family::Behavioral, "forwarded_ratio", ratio(a.forwarded, total));
    b.ratio(Family::Behavioral, "spam_ratio", ratio(a.spam_vote, total));
    b.ratio(Family::Behavioral, "trash_ratio", ratio(agg.folders.get("trash").copied().unwrap_or(0), total));
    b.ratio(Family::Behavioral, "foldered_ratio", ratio(agg.folder_moves(), total));

    let hourly: Vec<u64> = agg.hourly.values().copied().collect();
    for (x, set) in ctx.burst_ladder.iter().zip(extract_burst_indicators(&hourly, ctx.burst_ladder)) {
        if set {
            b.flag(Family::Burst, &format!("gt{x}"));
        }
    }

    for (f, c) in &agg.folders {
        if ctx.vocabs.folder.contains(f) {
            b.count(Family::Folder, f, *c as f64);
        }
    }

    if let Ok(c) = canonicalize_sender(&agg.sender) {
        address_features(&mut b, &c, ctx);
    }
    Ok(b.build())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregation::aggregate_by_sender;
    use crate::corpus::message::Actions;
    use crate::features::vocab::{prune, ExclusionReason, VocabKind};
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn vocabs(content: &[&str], address: &[&str], folder: &[&str]) -> Vocabularies {
        let v = |kind, terms: &[&str]| {
            prune(
                kind,
                terms.iter().map(|t| (t.to_string(), 1)).collect(),
                &BTreeSet::new(),
                ExclusionReason::StopWord,
                0,
                1,
            )
        };
        Vocabularies {
            content: v(VocabKind::Content, content),
            address: v(VocabKind::AddressSubstring, address),
            folder: v(VocabKind::FolderName, folder),
        }
    }

    fn message(from: &str, subject: &str, body: &str, ts: i64, actions: Actions, folder: Option<&str>) -> Message {
        Message::new("m", from, 1, ts, subject, body, actions, folder.map(String::from)).unwrap()
    }

    #[test]
    fn careers_address_matches_keyword() {
        let vocabs = vocabs(&[], &["careers", "vailresorts"], &[]);
        let kw = CommercialKeywordList::bundled();
        let ctx = FeatureContext::new(&vocabs, &kw);
        let v = extract_message_features(&message("careers@vailresorts.com", "", "", 0, Actions::empty(), None), &ctx);
        assert_eq!(v.get("address/name:careers"), Some(1.0));
        assert_eq!(v.get("address/kw:career"), Some(1.0));
        assert_eq!(v.get("address/domain:vailresorts"), Some(1.0));
        assert_eq!(v.get("address/wildcard"), None);
    }

    #[test]
    fn message_lengths_and_urls() {
        let vocabs = vocabs(&["deal"], &[], &[]);
        let kw = CommercialKeywordList::bundled();
        let ctx = FeatureContext::new(&vocabs, &kw);
        let v = extract_message_features(&message("a@b.com", "deal", "see http://x.com deal", 0, Actions::empty(), None), &ctx);
        assert_eq!(v.get("content/url_count"), Some(1.0));
        assert_eq!(v.get("content/body:deal"), Some(1.0));
        assert_eq!(v.get("content/subj:deal"), Some(1.0));
        let e = extract_message_features(&message("a@b.com", "x", "", 0, Actions::empty(), None), &ctx);
        assert_eq!(e.get("content/body_len"), Some(0.0));
        assert!(e.iter().all(|(id, _)| !id.starts_with(BODY_WORD_PREFIX)));
        assert!(e.iter().all(|(id, _)| matches!(Family::of(id), Some(Family::Content | Family::Address))));
    }

    #[test]
    fn trash_ratio() {
        let msgs: Vec<Message> = (0..100)
            .map(|i| {
                let f = if i < 30 { Some("trash") } else { None };
                Message::new(i.to_string(), "a@b.com", 1, i * 7200, "s", "b", Actions::empty(), f.map(String::from)).unwrap()
            })
            .collect();
        let aggs = aggregate_by_sender(&msgs);
        let vocabs = vocabs(&[], &[], &[]);
        let kw = CommercialKeywordList::bundled();
        let v = extract_sender_features(&aggs["a@b.com"], &FeatureContext::new(&vocabs, &kw)).unwrap();
        assert!((v.get("behavioral/trash_ratio").unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn folder_feature_weighted_by_moves() {
        let msgs: Vec<Message> = (0..5)
            .map(|i| Message::new(i.to_string(), "a@b.com", 1, i, "s", "b", Actions::empty(), Some("bills".into())).unwrap())
            .collect();
        let aggs = aggregate_by_sender(&msgs);
        let vocabs = vocabs(&[], &[], &["bills"]);
        let kw = CommercialKeywordList::bundled();
        let v = extract_sender_features(&aggs["a@b.com"], &FeatureContext::new(&vocabs, &kw)).unwrap();
        assert_eq!(v.get("folder/bills"), Some(5.0));
    }

    #[test]
    fn zero_message_aggregate_rejected() {
        let vocabs = vocabs(&[], &[], &[]);
        let kw = CommercialKeywordList::bundled();
        let agg = SenderAggregate::new("a@b.com");
        assert!(extract_sender_features(&agg, &FeatureContext::new(&vocabs, &kw)).is_err());
    }

    #[test]
    fn burst_boundaries() {
        assert_eq!(extract_burst_indicators(&[10], &BURST_LADDER), vec![false; 5]);
        assert_eq!(extract_burst_indicators(&[121], &BURST_LADDER), vec![true; 5]);
        assert_eq!(extract_burst_indicators(&[], &BURST_LADDER), vec![false; 5]);
    }

    // Independent check: slide a one-hour window over raw timestamps.
    fn sliding_max(ts: &[i64]) -> u64 {
        let mut ts = ts.to_vec();
        ts.sort();
        let mut best = 0;
        let mut lo = 0;
        for hi in 0..ts.len() {
            while ts[hi] - ts[lo] >= 3600 {
                lo += 1;
            }
            best = best.max(hi - lo + 1);
        }
        best as u64
    }

    #[test]
    fn burst_of_120_in_one_hour() {
        let start = 1_357_000_000 / 3600 * 3600;
        let mut ts: Vec<i64> = (0..120).map(|i| start + i * 29).collect();
        ts.extend((1..20).map(|d| start + d * 86_400));
        let msgs: Vec<Message> = ts
            .iter()
            .enumerate()
            .map(|(i, t)| Message::new(i.to_string(), "a@b.com", 1, *t, "s", "b", Actions::empty(), None).unwrap())
            .collect();
        let aggs = aggregate_by_sender(&msgs);
        let vocabs = vocabs(&[], &[], &[]);
        let kw = CommercialKeywordList::bundled();
        let v = extract_sender_features(&aggs["a@b.com"], &FeatureContext::new(&vocabs, &kw)).unwrap();
        let max = sliding_max(&ts);
        for x in BURST_LADDER {
            assert_eq!(v.get(&format!("burst/gt{x}")).is_some(), max > x, "threshold {x}");
        }
        assert!(v.get("burst/gt100").is_some());
        assert!(v.get("burst/gt120").is_none());
    }

    #[test]
    fn calendar_spans() {
        // 2013-01-01 (Tuesday) to 2013-01-07 (Monday): two calendar weeks, one month.
        let a = 1_356_998_400;
        let b = a + 6 * 86_400;
        assert_eq!(weeks_spanned(a, b), 2);
        assert_eq!(months_spanned(a, b), 1);
        assert_eq!(months_spanned(a, a + 40 * 86_400), 2);
    }

    proptest! {
        #[test]
        fn burst_ladder_is_monotone(counts in prop::collection::vec(0u64..200, 0..30)) {
            let ind = extract_burst_indicators(&counts, &BURST_LADDER);
            for w in ind.windows(2) {
                prop_assert!(w[0] >= w[1]);
            }
        }

        #[test]
        fn families_partition_ids(subject in "[a-z ]{0,30}", body in "[a-z :/.]{0,60}") {
            let vocabs = vocabs(&["ab", "cd"], &["com"], &[]);
            let kw = CommercialKeywordList::bundled();
            let ctx = FeatureContext::new(&vocabs, &kw);
            let v = extract_message_features(&message("x.y@z.com", &subject, &body, 0, Actions::empty(), None), &ctx);
            let mut seen = BTreeSet::new();
            for (id, _) in v.iter() {
                prop_assert!(Family::of(id).is_some());
                prop_assert!(seen.insert(id.to_string()));
            }
        }
    }
}
