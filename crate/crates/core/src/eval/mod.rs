//! Domain-disjoint splits, ROC/PR curves, the feature-family ablation, the
//! human/machine test set, traffic coverage and descriptive statistics.

pub mod ablation;
pub mod curves;

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{index::sample, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::aggregation::{ratio, SenderAggregates};
use crate::cascade::CascadeDecision;
use crate::category::Category;
use crate::corpus::canonical::name_tokens;
use crate::corpus::{canonical_address, canonicalize_sender, Message};
use crate::error::{Error, Result};
use crate::features::extract::months_spanned;

pub use ablation::{run_ablation, AblationCell, AblationData, AblationTable, FeatureSubset, TrainConfig};
pub use curves::{average_roc, compute_roc_pr_auc, curves_svg, tpr_at, CurveReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Train,
    Test,
}

pub fn domain_of(sender: &str) -> &str {
    sender.rsplit_once('@').map(|(_, d)| d).unwrap_or(sender)
}

/// Per-repeat assignment of whole domains to train or test.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPlan {
    pub fraction: f64,
    pub seed: u64,
    pub assignments: Vec<BTreeMap<String, Side>>,
}

impl SplitPlan {
    pub fn repeats(&self) -> usize {
        self.assignments.len()
    }

    pub fn side(&self, repeat: usize, sender: &str) -> Option<Side> {
        self.assignments.get(repeat)?.get(domain_of(sender)).copied()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# repeat\tdomain\tside\n");
        for (r, a) in self.assignments.iter().enumerate() {
            for (d, side) in a {
                s.push_str(&format!("{r}\t{}\t{}\n", crate::io::escape(d), if *side == Side::Train { "train" } else { "test" }));
            }
        }
        s
    }
}

/// Shuffles domains and fills the train side up to `fraction` of senders,
/// skipping any domain that would overshoot.
pub fn split_by_domain<S: AsRef<str>>(senders: &[S], fraction: f64, repeats: usize, seed: u64) -> Result<SplitPlan> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::config(format!("train fraction must be in (0,1), got {fraction}")));
    }
    if repeats == 0 {
        return Err(Error::config("repeats must be at least 1"));
    }
    let mut sizes: BTreeMap<String, usize> = BTreeMap::new();
    for s in senders {
        *sizes.entry(domain_of(s.as_ref()).to_string()).or_default() += 1;
    }
    if sizes.len() < 2 {
        return Err(Error::EmptyInput("a domain split needs at least two domains".into()));
    }
    let target = fraction * senders.len() as f64;
    let domains: Vec<(&String, usize)> = sizes.iter().map(|(d, n)| (d, *n)).collect();
    let mut assignments = Vec::with_capacity(repeats);
    for r in 0..repeats {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (r as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let mut order = domains.clone();
        order.shuffle(&mut rng);
        let mut train = 0usize;
        let mut a = BTreeMap::new();
        for (d, n) in order {
            let side = if (train + n) as f64 <= target { Side::Train } else { Side::Test };
            if side == Side::Train {
                train += n;
            }
            a.insert(d.clone(), side);
        }
        // guarantee both sides are populated
        if train == 0 {
            let d = a.keys().next().cloned().expect("two domains");
            a.insert(d, Side::Train);
        } else if a.values().all(|s| *s == Side::Train) {
            let d = a.keys().next().cloned().expect("two domains");
            a.insert(d, Side::Test);
        }
        assignments.push(a);
    }
    Ok(SplitPlan { fraction, seed, assignments })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestSetConfig {
    pub n: usize,
    pub monthly_cutoff: f64,
    pub never_replied_cutoff: u64,
    pub seed: u64,
}

impl Default for TestSetConfig {
    fn default() -> Self {
        TestSetConfig { n: 600, monthly_cutoff: 100_000.0, never_replied_cutoff: 1_000, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HumanMachineTestSet {
    pub messages: Vec<Message>,
    pub excluded_volume: Vec<String>,
    pub excluded_never_replied: Vec<String>,
}

/// Samples `n` senders uniformly after dropping bulk and never-replied
/// senders, then one message from each.
pub fn build_human_machine_testset(messages: &[Message], aggs: &SenderAggregates, cfg: &TestSetConfig) -> Result<HumanMachineTestSet> {
    if cfg.n == 0 {
        return Err(Error::config("test set size must be at least 1"));
    }
    let mut eligible = Vec::new();
    let mut excluded_volume = Vec::new();
    let mut excluded_never_replied = Vec::new();
    for (s, a) in aggs {
        let months = months_spanned(a.outbound.first_ts, a.outbound.last_ts) as f64;
        if a.message_count as f64 / months > cfg.monthly_cutoff {
            excluded_volume.push(s.clone());
        } else if a.actions.replied == 0 && a.message_count > cfg.never_replied_cutoff {
            excluded_never_replied.push(s.clone());
        } else {
            eligible.push(s.as_str());
        }
    }
    if eligible.len() < cfg.n {
        return Err(Error::NotEnoughSenders { requested: cfg.n, available: eligible.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut chosen: Vec<&str> = sample(&mut rng, eligible.len(), cfg.n).into_iter().map(|i| eligible[i]).collect();
    chosen.sort_unstable();
    let wanted: BTreeSet<&str> = chosen.iter().copied().collect();
    let mut by_sender: BTreeMap<String, Vec<&Message>> = BTreeMap::new();
    for m in messages {
        let c = canonical_address(&m.sender)?;
        if wanted.contains(c.as_str()) {
            by_sender.entry(c).or_default().push(m);
        }
    }
    let mut out = Vec::with_capacity(cfg.n);
    for s in chosen {
        let msgs = by_sender
            .get(s)
            .ok_or_else(|| Error::EmptyInput(format!("no messages in corpus for sender {s}")))?;
        out.push(msgs[rng.random_range(0..msgs.len())].clone());
    }
    Ok(HumanMachineTestSet { messages: out, excluded_volume, excluded_never_replied })
}

/// Share of decisions per category; every category is listed.
pub fn coverage_report(decisions: &[CascadeDecision]) -> Result<BTreeMap<Category, f64>> {
    if decisions.is_empty() {
        return Err(Error::EmptyInput("no decisions".into()));
    }
    let mut counts: BTreeMap<Category, usize> = Category::ALL.iter().map(|c| (*c, 0)).collect();
    for d in decisions {
        *counts.entry(d.category).or_default() += 1;
    }
    let n = decisions.len() as f64;
    Ok(counts.into_iter().map(|(c, k)| (c, k as f64 / n)).collect())
}

pub fn coverage_to_string(shares: &BTreeMap<Category, f64>) -> String {
    let mut s = String::from("# category\tshare\n");
    for (c, p) in shares {
        s.push_str(&format!("{c}\t{p:.6}\n"));
    }
    let non_other: f64 = shares.iter().filter(|(c, _)| **c != Category::Other).map(|(_, p)| p).sum();
    s.push_str(&format!("total_non_other\t{non_other:.6}\n"));
    s
}

/// Per-class descriptive counts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClassStats {
    pub senders: u64,
    /// Read-ratio histogram over ten equal bins of [0, 1].
    pub read_hist: [u64; 10],
    pub unsubscribe: u64,
    pub first_name: u64,
    pub burst100: u64,
    pub subject_gt30: u64,
    pub body_gt300: u64,
    pub urls_gt3: u64,
}

impl ClassStats {
    fn rate(&self, k: u64) -> f64 {
        ratio(k, self.senders)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct HumanMachineStats {
    pub human: ClassStats,
    pub machine: ClassStats,
}

/// `labels` maps senders to true for human, false for machine.
pub fn human_machine_stats(aggs: &SenderAggregates, labels: &BTreeMap<String, bool>, first_names: &BTreeSet<String>) -> HumanMachineStats {
    let mut out = HumanMachineStats::default();
    for (s, human) in labels {
        let Some(a) = aggs.get(s) else { continue };
        let st = if *human { &mut out.human } else { &mut out.machine };
        st.senders += 1;
        let bin = ((a.read_ratio() * 10.0) as usize).min(9);
        st.read_hist[bin] += 1;
        st.unsubscribe += (a.unsubscribe_messages > 0) as u64;
        if let Ok(c) = canonicalize_sender(s) {
            st.first_name += name_tokens(&c.name_part).iter().any(|t| first_names.contains(*t)) as u64;
        }
        st.burst100 += (a.max_hourly() > 100) as u64;
        st.subject_gt30 += (a.subject_len.mean() > 30.0) as u64;
        st.body_gt300 += (a.body_len.mean() > 300.0) as u64;
        st.urls_gt3 += (a.url_count.mean() > 3.0) as u64;
    }
    out
}

impl HumanMachineStats {
    pub fn to_text(&self) -> String {
        let mut s = String::from("# statistic\thuman\tmachine\n");
        let (h, m) = (&self.human, &self.machine);
        s.push_str(&format!("senders\t{}\t{}\n", h.senders, m.senders));
        let rows: [(&str, u64, u64); 7] = [
            ("unsubscribe_present", h.unsubscribe, m.unsubscribe),
            ("first_name_present", h.first_name, m.first_name),
            ("burst_gt100_present", h.burst100, m.burst100),
            ("avg_subject_chars_gt30", h.subject_gt30, m.subject_gt30),
            ("avg_body_chars_gt300", h.body_gt300, m.body_gt300),
            ("avg_urls_gt3", h.urls_gt3, m.urls_gt3),
            ("senders_any", h.senders, m.senders),
        ];
        for (name, a, b) in &rows[..6] {
            s.push_str(&format!("{name}\t{:.4}\t{:.4}\n", h.rate(*a), m.rate(*b)));
        }
        for i in 0..10 {
            s.push_str(&format!(
                "read_ratio[{:.1},{:.1}{}\t{:.4}\t{:.4}\n",
                i as f64 / 10.0,
                (i + 1) as f64 / 10.0,
                if i == 9 { "]" } else { ")" },
                h.rate(h.read_hist[i]),
                m.rate(m.read_hist[i])
            ));
        }
        s
    }
}
