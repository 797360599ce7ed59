//! End-to-end orchestration over a working directory: one function per
//! pipeline stage, each reading its inputs from and writing its outputs to
//! fixed file names.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::aggregation::{aggregate_by_sender, read_snapshot, write_snapshot, SenderAggregates};
use crate::cascade::{build_lightweight_rules, decisions_to_string, parse_decisions, sender_table_throughput, Cascade, LightweightRules};
use crate::category::{Category, Label};
use crate::corpus::synth::sample_manual_labels;
use crate::corpus::{generate_synthetic_corpus, read_corpus, write_corpus, GroundTruth, Message, SynthConfig};
use crate::error::{Error, Result};
use crate::eval::ablation::train_split;
use crate::eval::{
    build_human_machine_testset, compute_roc_pr_auc, coverage_report, coverage_to_string, curves_svg, human_machine_stats,
    run_ablation, split_by_domain, AblationData, FeatureSubset, Side, TestSetConfig, TrainConfig,
};
use crate::features::{
    build_vocabularies, extract_sender_features, CommercialKeywordList, Family, FeatureContext, FeatureVector, VocabConfig, VocabKind,
    Vocabularies, Vocabulary,
};
use crate::io::{read_to_string, write_file};
use crate::labeling::{
    co_train_expand, conflicts_to_string, folder_vote_labels, heuristic_labels, import_manual, labeled_senders_to_string,
    lda_vote_labels, merge_labeled_sets, read_labeled_senders, source_counts, training_labels, CoTrainConfig, HeuristicConfig,
    LabeledFolders, LabeledSender, NameLists, Source, DEFAULT_PRECEDENCE,
};
use crate::models::{
    build_sender_table, feature_importance, hash_vectors, importance_to_string, train_message_models, train_one_vs_all,
    FeatureHasher, ModelSet, SenderTable, SgdConfig,
};
use crate::topics::lda::LdaConfig;
use crate::topics::{
    build_folder_documents, coverage_report_to_string, mixtures_to_string, model_to_string, name_topics, read_mixtures,
    read_topic_labels, select_k, topic_dump_to_string, topic_labels_to_string, train_lda, FolderDocConfig,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSection {
    pub senders: usize,
    /// Share of senders exported as editor labels.
    pub manual_share: f64,
}

impl Default for SynthSection {
    fn default() -> Self {
        SynthSection { senders: 10_000, manual_share: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VocabSection {
    pub content_top: usize,
    pub content_min_senders: u64,
    pub address_top: usize,
    pub address_min_senders: u64,
    pub folder_top: usize,
    pub folder_min_senders: u64,
    pub keywords: Option<PathBuf>,
}

impl Default for VocabSection {
    fn default() -> Self {
        let d = VocabConfig::desk();
        VocabSection {
            content_top: d.content_top,
            content_min_senders: d.content_min_senders,
            address_top: d.address_top,
            address_min_senders: d.address_min_senders,
            folder_top: d.folder_top,
            folder_min_senders: d.folder_min_senders,
            keywords: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LdaSection {
    pub k: usize,
    /// K values for the coverage report; empty skips it.
    pub candidates: Vec<usize>,
    pub passes: usize,
    pub batch_size: usize,
    pub tau0: f64,
    pub kappa: f64,
    pub folder_min_messages: u64,
    pub coverage_threshold: f64,
    /// Hand-assigned topic names; seed-word naming when absent.
    pub topic_labels: Option<PathBuf>,
}

impl Default for LdaSection {
    fn default() -> Self {
        let l = LdaConfig::new(6, 0);
        LdaSection {
            k: 6,
            candidates: vec![4, 6, 8],
            passes: l.passes,
            batch_size: l.batch_size,
            tau0: l.tau0,
            kappa: l.kappa,
            folder_min_messages: FolderDocConfig::desk().min_messages,
            coverage_threshold: 0.5,
            topic_labels: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LabelSection {
    pub tau_v: u64,
    pub tau_f: usize,
    pub lda_threshold: f64,
    pub unsubscribe_fraction: f64,
    pub spam_ratio: f64,
    pub name_patterns: Vec<String>,
    pub labeled_folders: Option<PathBuf>,
    pub manual: Option<PathBuf>,
    pub cotrain: bool,
    pub cotrain_rounds: usize,
    pub cotrain_threshold: f64,
}

impl Default for LabelSection {
    fn default() -> Self {
        let h = HeuristicConfig::default();
        LabelSection {
            tau_v: 3,
            tau_f: 1,
            lda_threshold: 0.8,
            unsubscribe_fraction: h.unsubscribe_fraction,
            spam_ratio: h.spam_ratio,
            name_patterns: h.human_patterns.iter().map(|r| r.as_str().to_string()).collect(),
            labeled_folders: None,
            manual: None,
            cotrain: true,
            cotrain_rounds: 4,
            cotrain_threshold: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub hash_bits: u32,
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    pub include_folder_features: bool,
    pub per_sender: usize,
    pub importance_top: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        let s = SgdConfig::default();
        TrainSection {
            hash_bits: 18,
            learning_rate: s.learning_rate,
            epochs: s.epochs,
            l2: s.l2,
            include_folder_features: false,
            per_sender: 5,
            importance_top: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TableSection {
    pub cutoff: f64,
    pub whitelist_top: usize,
    pub whitelist_consistency: f64,
}

impl Default for TableSection {
    fn default() -> Self {
        TableSection { cutoff: 0.9, whitelist_top: 100, whitelist_consistency: 0.99 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub train_fraction: f64,
    pub repeats: usize,
    pub subsets: Vec<String>,
    pub testset_size: usize,
    pub monthly_cutoff: f64,
    pub never_replied_cutoff: u64,
}

impl Default for EvalSection {
    fn default() -> Self {
        let t = TestSetConfig::default();
        EvalSection {
            train_fraction: 0.65,
            repeats: 5,
            subsets: FeatureSubset::defaults().into_iter().map(|s| s.name).collect(),
            testset_size: t.n,
            monthly_cutoff: t.monthly_cutoff,
            never_replied_cutoff: t.never_replied_cutoff,
        }
    }
}

/// Every threshold and seed of the pipeline. Defaults suit a corpus of
/// about ten thousand senders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub synth: SynthSection,
    pub vocab: VocabSection,
    pub lda: LdaSection,
    pub label: LabelSection,
    pub train: TrainSection,
    pub table: TableSection,
    pub eval: EvalSection,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.synth.senders == 0 {
            bad.push("synth.senders");
        }
        if !(0.0..=1.0).contains(&self.synth.manual_share) {
            bad.push("synth.manual_share");
        }
        if self.lda.k < 2 {
            bad.push("lda.k");
        }
        if !(self.lda.kappa > 0.5 && self.lda.kappa <= 1.0) {
            bad.push("lda.kappa");
        }
        if !(self.label.lda_threshold > 0.0 && self.label.lda_threshold <= 1.0) {
            bad.push("label.lda_threshold");
        }
        if !(1..=30).contains(&self.train.hash_bits) {
            bad.push("train.hash_bits");
        }
        if self.train.per_sender == 0 {
            bad.push("train.per_sender");
        }
        if self.train.epochs == 0 || !(self.train.learning_rate > 0.0) || !(self.train.l2 >= 0.0) {
            bad.push("train.epochs/learning_rate/l2");
        }
        if !(self.table.cutoff > 0.0 && self.table.cutoff < 1.0) {
            bad.push("table.cutoff");
        }
        if !(self.table.whitelist_consistency > 0.5 && self.table.whitelist_consistency <= 1.0) {
            bad.push("table.whitelist_consistency");
        }
        if !(self.eval.train_fraction > 0.0 && self.eval.train_fraction < 1.0) {
            bad.push("eval.train_fraction");
        }
        if self.eval.repeats == 0 {
            bad.push("eval.repeats");
        }
        for s in &self.eval.subsets {
            if FeatureSubset::parse(s).is_err() {
                bad.push("eval.subsets");
                break;
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::config(format!("offending keys: {}", bad.join(", "))))
        }
    }

    pub fn vocab_config(&self) -> VocabConfig {
        VocabConfig {
            content_top: self.vocab.content_top,
            content_min_senders: self.vocab.content_min_senders,
            address_top: self.vocab.address_top,
            address_min_senders: self.vocab.address_min_senders,
            folder_top: self.vocab.folder_top,
            folder_min_senders: self.vocab.folder_min_senders,
            ..VocabConfig::default()
        }
    }

    pub fn lda_config(&self, k: usize) -> LdaConfig {
        LdaConfig {
            passes: self.lda.passes,
            batch_size: self.lda.batch_size,
            tau0: self.lda.tau0,
            kappa: self.lda.kappa,
            ..LdaConfig::new(k, self.seed)
        }
    }

    pub fn hasher(&self) -> Result<FeatureHasher> {
        FeatureHasher::new(self.train.hash_bits, self.seed)
    }

    pub fn sgd(&self) -> SgdConfig {
        SgdConfig { learning_rate: self.train.learning_rate, epochs: self.train.epochs, l2: self.train.l2, seed: self.seed }
    }

    pub fn heuristic_config(&self) -> Result<HeuristicConfig> {
        Ok(HeuristicConfig {
            unsubscribe_fraction: self.label.unsubscribe_fraction,
            spam_ratio: self.label.spam_ratio,
            ..HeuristicConfig::with_patterns(&self.label.name_patterns)?
        })
    }

    /// Feature filter for sender-level machine training.
    pub fn sender_feature_filter(&self) -> impl Fn(&str) -> bool + Sync + use<> {
        let folder = self.train.include_folder_features;
        move |id: &str| folder || Family::of(id) != Some(Family::Folder)
    }

    pub fn subsets(&self) -> Result<Vec<FeatureSubset>> {
        self.eval
            .subsets
            .iter()
            .map(|s| {
                let mut sub = FeatureSubset::parse(s)?;
                if self.train.include_folder_features && s == "all" {
                    sub.families.insert(Family::Folder);
                }
                Ok(sub)
            })
            .collect()
    }
}

/// File layout of a working directory.
#[derive(Debug, Clone)]
pub struct Workdir {
    pub root: PathBuf,
}

macro_rules! paths {
    ($($name:ident => $file:expr),* $(,)?) => {
        impl Workdir {
            $(pub fn $name(&self) -> PathBuf { self.root.join($file) })*
        }
    };
}

paths! {
    corpus => "corpus.tsv",
    truth_senders => "truth_senders.tsv",
    truth_overrides => "truth_overrides.tsv",
    manual_labels => "manual_labels.tsv",
    aggregates => "aggregates.tsv",
    lda_model => "lda_model.tsv",
    topic_labels => "topic_labels.tsv",
    topics => "topics.tsv",
    mixtures => "mixtures.tsv",
    lda_coverage => "lda_coverage.tsv",
    labeled => "labeled_senders.tsv",
    conflicts => "conflicts.tsv",
    label_sources => "label_sources.tsv",
    sender_models => "sender_models.tsv",
    message_models => "message_models.tsv",
    sender_table => "sender_table.tsv",
    rules => "rules.tsv",
    decisions => "decisions.tsv",
    classify_summary => "classify_summary.tsv",
    split => "split.tsv",
    auc_table => "auc_table.tsv",
    human_machine_auc => "human_machine_auc.tsv",
    coverage => "coverage.tsv",
    stats => "human_machine_stats.tsv",
}

impl Workdir {
    pub fn new(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        Ok(Workdir { root })
    }

    pub fn vocab(&self, kind: VocabKind) -> (PathBuf, PathBuf) {
        let name = kind.as_str();
        (self.root.join(format!("vocab_{name}.tsv")), self.root.join(format!("vocab_{name}_excluded.tsv")))
    }

    pub fn importance(&self, c: Category) -> PathBuf {
        self.root.join(format!("importance_{c}.tsv"))
    }

    pub fn roc_plot(&self, c: Category) -> PathBuf {
        self.root.join(format!("roc_{c}.svg"))
    }

    fn require(&self, path: PathBuf) -> Result<PathBuf> {
        if path.exists() {
            Ok(path)
        } else {
            Err(Error::io(&path, std::io::Error::new(std::io::ErrorKind::NotFound, "missing input; run the earlier stage first")))
        }
    }

    pub fn read_corpus(&self) -> Result<Vec<Message>> {
        read_corpus(&self.require(self.corpus())?)
    }

    pub fn read_aggregates(&self) -> Result<SenderAggregates> {
        read_snapshot(&self.require(self.aggregates())?)
    }

    pub fn read_vocabularies(&self) -> Result<Vocabularies> {
        let read = |kind| {
            let (terms, excluded) = self.vocab(kind);
            Vocabulary::read(kind, &self.require(terms)?, Some(&excluded).filter(|p| p.exists()).map(|p| p.as_path()))
        };
        Ok(Vocabularies {
            content: read(VocabKind::Content)?,
            address: read(VocabKind::AddressSubstring)?,
            folder: read(VocabKind::FolderName)?,
        })
    }

    pub fn read_truth(&self) -> Result<Option<GroundTruth>> {
        let s = self.truth_senders();
        if !s.exists() {
            return Ok(None);
        }
        let o = self.truth_overrides();
        GroundTruth::read(&s, o.exists().then_some(o.as_path())).map(Some)
    }

    pub fn read_labeled(&self) -> Result<Vec<LabeledSender>> {
        read_labeled_senders(&self.require(self.labeled())?)
    }
}

fn keywords(cfg: &PipelineConfig) -> Result<CommercialKeywordList> {
    match &cfg.vocab.keywords {
        Some(p) => CommercialKeywordList::read(p),
        None => Ok(CommercialKeywordList::bundled()),
    }
}

/// Feature vectors of every aggregated sender.
pub fn sender_features(aggs: &SenderAggregates, ctx: &FeatureContext) -> Result<BTreeMap<String, FeatureVector>> {
    use rayon::prelude::*;
    let v: Vec<(String, FeatureVector)> = aggs
        .par_iter()
        .filter(|(_, a)| a.message_count > 0)
        .map(|(s, a)| Ok((s.clone(), extract_sender_features(a, ctx)?)))
        .collect::<Result<_>>()?;
    Ok(v.into_iter().collect())
}

/// Generates the synthetic corpus, its ground truth and an editor-label sample.
pub fn run_synth(wd: &Workdir, cfg: &PipelineConfig) -> Result<String> {
    let sc = SynthConfig::with_total_senders(cfg.synth.senders, cfg.seed);
    let corpus = generate_synthetic_corpus(&sc)?;
    write_corpus(&wd.corpus(), &corpus.messages)?;
    corpus.truth.write(&wd.truth_senders(), &wd.truth_overrides())?;
    let manual = sample_manual_labels(&corpus.truth, cfg.synth.manual_share, cfg.seed);
    let mut s = String::from("# sender\tlabel\n");
    for (sender, c) in &manual {
        s.push_str(&format!("{}\t{c}\n", crate::io::escape(sender)));
    }
    write_file(&wd.manual_labels(), &s)?;
    Ok(format!(
        "messages\t{}\nsenders\t{}\nmanual_labels\t{}\n",
        corpus.messages.len(),
        corpus.truth.senders.len(),
        manual.len()
    ))
}

/// Validates an external corpus file and copies it into the working directory.
pub fn run_ingest(wd: &Workdir, input: &Path) -> Result<String> {
    let messages = read_corpus(input)?;
    if messages.is_empty() {
        return Err(Error::EmptyInput(format!("{} has no messages", input.display())));
    }
    write_corpus(&wd.corpus(), &messages)?;
    Ok(format!("messages\t{}\n", messages.len()))
}

pub fn run_aggregate(wd: &Workdir) -> Result<String> {
    let messages = wd.read_corpus()?;
    let aggs = aggregate_by_sender(&messages);
    write_snapshot(&wd.aggregates(), &aggs)?;
    Ok(format!("messages\t{}\nsenders\t{}\n", messages.len(), aggs.len()))
}

pub fn run_vocab(wd: &Workdir, cfg: &PipelineConfig) -> Result<String> {
    let aggs = wd.read_aggregates()?;
    let v = build_vocabularies(&aggs, &cfg.vocab_config())?;
    let mut s = String::new();
    for voc in [&v.content, &v.address, &v.folder] {
        let (t, e) = wd.vocab(voc.kind);
        voc.write(&t, &e)?;
        s.push_str(&format!("{}\t{}\t{}\n", voc.kind.as_str(), voc.len(), voc.excluded().len()));
    }
    Ok(s)
}

pub fn run_lda(wd: &Workdir, cfg: &PipelineConfig) -> Result<String> {
    let messages = wd.read_corpus()?;
    let vocabs = wd.read_vocabularies()?;
    let docs = build_folder_documents(&messages, &FolderDocConfig { min_messages: cfg.lda.folder_min_messages, ..FolderDocConfig::default() })?;
    if docs.is_empty() {
        return Err(Error::EmptyInput("no folder reaches the document floor".into()));
    }
    if !cfg.lda.candidates.is_empty() {
        let rows = select_k(&docs, &vocabs.content, &cfg.lda.candidates, &cfg.lda_config(cfg.lda.k), cfg.lda.coverage_threshold)?;
        write_file(&wd.lda_coverage(), &coverage_report_to_string(&rows))?;
    }
    let model = train_lda(&docs, &vocabs.content, &cfg.lda_config(cfg.lda.k))?;
    let labels = match &cfg.lda.topic_labels {
        Some(p) => read_topic_labels(p)?,
        None => name_topics(&model, &crate::resources::topic_seeds()),
    };
    write_file(&wd.lda_model(), &model_to_string(&model))?;
    write_file(&wd.topic_labels(), &topic_labels_to_string(&labels))?;
    write_file(&wd.topics(), &topic_dump_to_string(&model, 10, &labels))?;
    write_file(&wd.mixtures(), &mixtures_to_string(&model.mixtures))?;
    let named = labels.iter().flatten().count();
    Ok(format!("documents\t{}\ntopics\t{}\nnamed_topics\t{named}\n", docs.len(), model.k()))
}

pub fn run_label(wd: &Workdir, cfg: &PipelineConfig) -> Result<String> {
    let aggs = wd.read_aggregates()?;
    let folders = match &cfg.label.labeled_folders {
        Some(p) => LabeledFolders::read(p)?,
        None => LabeledFolders::bundled(),
    };
    let mut sets = vec![folder_vote_labels(&aggs, &folders, cfg.label.tau_v, cfg.label.tau_f)];
    if wd.mixtures().exists() && wd.topic_labels().exists() {
        let mixtures = read_mixtures(&wd.mixtures())?;
        let topic_labels = read_topic_labels(&wd.topic_labels())?;
        sets.push(lda_vote_labels(&aggs, &mixtures, &topic_labels, cfg.label.lda_threshold));
    }
    sets.push(heuristic_labels(&aggs, &NameLists::default(), &cfg.heuristic_config()?)?);
    let manual_path = cfg.label.manual.clone().unwrap_or_else(|| wd.manual_labels());
    if manual_path.exists() {
        sets.push(import_manual(&manual_path)?);
    }
    for set in &mut sets {
        set.sort_by(|a, b| a.sender.cmp(&b.sender));
    }
    let (mut merged, mut conflicts) = merge_labeled_sets(&sets, &DEFAULT_PRECEDENCE)?;
    if cfg.label.cotrain {
        let vocabs = wd.read_vocabularies()?;
        let kw = keywords(cfg)?;
        let ctx = FeatureContext::new(&vocabs, &kw);
        let vectors = sender_features(&aggs, &ctx)?;
        let cot = CoTrainConfig {
            rounds: cfg.label.cotrain_rounds,
            conf_threshold: cfg.label.cotrain_threshold,
            hasher: cfg.hasher()?,
            sgd: cfg.sgd(),
            ..CoTrainConfig::default()
        };
        let seed: Vec<LabeledSender> = merged
            .iter()
            .map(|l| {
                let coarse = if l.label.is_human() { Label::HUMAN } else { Label::Machine };
                LabeledSender { label: coarse, ..l.clone() }
            })
            .collect();
        let expanded = co_train_expand(&seed, &vectors, &cot)?;
        let additions: Vec<LabeledSender> = expanded.into_iter().filter(|l| l.source == Source::Cotrain).collect();
        let (m, c) = merge_labeled_sets(&[merged, additions], &DEFAULT_PRECEDENCE)?;
        merged = m;
        conflicts.extend(c);
    }
    write_file(&wd.labeled(), &labeled_senders_to_string(&merged))?;
    write_file(&wd.conflicts(), &conflicts_to_string(&conflicts))?;
    let mut s = String::from("# source\tlabel\tsenders\n");
    for ((src, label), n) in source_counts(&merged) {
        s.push_str(&format!("{src}\t{label}\t{n}\n"));
    }
    write_file(&wd.label_sources(), &s)?;
    Ok(format!("labeled\t{}\nconflicts\t{}\n", merged.len(), conflicts.len()))
}

pub fn run_train(wd: &Workdir, cfg: &PipelineConfig) -> Result<String> {
    let messages = wd.read_corpus()?;
    let aggs = wd.read_aggregates()?;
    let vocabs = wd.read_vocabularies()?;
    let kw = keywords(cfg)?;
    let ctx = FeatureContext::new(&vocabs, &kw);
    let labels = training_labels(&wd.read_labeled()?);
    let vectors = sender_features(&aggs, &ctx)?;
    let labeled_vectors: BTreeMap<String, FeatureVector> =
        vectors.into_iter().filter(|(s, _)| labels.contains_key(s)).collect();
    let hasher = cfg.hasher()?;
    let hashed = hash_vectors(&labeled_vectors, &hasher, cfg.sender_feature_filter())?;
    let examples: Vec<_> = hashed.into_iter().map(|(s, x)| (x, labels[&s])).collect();
    let models = train_one_vs_all(&examples, &Category::MODELED, hasher, &cfg.sgd())?;
    models.write(&wd.sender_models())?;
    let keep = cfg.sender_feature_filter();
    let filtered: Vec<(FeatureVector, Label)> = labeled_vectors
        .iter()
        .map(|(s, v)| (v.filtered(|f| keep(&f.id)), labels[s]))
        .collect();
    for m in &models.models {
        let data: Vec<(&FeatureVector, bool)> =
            filtered.iter().filter_map(|(v, l)| l.target_for(m.category).map(|t| (v, t))).collect();
        let top = feature_importance(m, &data, cfg.train.importance_top)?;
        write_file(&wd.importance(m.category), &importance_to_string(&top))?;
    }
    let msg_models = train_message_models(&messages, &labels, &ctx, cfg.train.per_sender, hasher, &cfg.sgd())?;
    msg_models.write(&wd.message_models())?;
    Ok(format!("training_senders\t{}\nmodels\t{}\n", examples.len(), models.models.len()))
}

pub fn run_build_table(wd: &Workdir, cfg: &PipelineConfig) -> Result<String> {
    let aggs = wd.read_aggregates()?;
    let vocabs = wd.read_vocabularies()?;
    let kw = keywords(cfg)?;
    let ctx = FeatureContext::new(&vocabs, &kw);
    let models = ModelSet::read(&wd.require(wd.sender_models())?)?;
    let hasher = models.hasher().ok_or_else(|| Error::EmptyInput("sender models".into()))?;
    let hashed = hash_vectors(&sender_features(&aggs, &ctx)?, &hasher, cfg.sender_feature_filter())?;
    // logical build time: the newest message seen, so rebuilds are reproducible
    let built_at = aggs.values().map(|a| a.outbound.last_ts).max().unwrap_or(0);
    let table = build_sender_table(&models, &hashed, cfg.table.cutoff, built_at)?;
    table.write(&wd.sender_table())?;
    let rules = build_lightweight_rules(&aggs, &table, cfg.table.whitelist_top, cfg.table.whitelist_consistency)?;
    rules.write(&wd.rules())?;
    Ok(format!("senders\t{}\ntable\t{}\nwhitelist\t{}\n", aggs.len(), table.len(), rules.whitelist.len()))
}

/// Timing of a classify run, kept out of the written artifacts.
#[derive(Debug, Clone, Copy)]
pub struct ClassifyTiming {
    pub messages_per_sec: f64,
    pub table_stage_messages_per_sec: f64,
}

pub fn run_classify(wd: &Workdir, cfg: &PipelineConfig, input: Option<&Path>) -> Result<(String, ClassifyTiming)> {
    let messages = match input {
        Some(p) => read_corpus(p)?,
        None => wd.read_corpus()?,
    };
    let vocabs = wd.read_vocabularies()?;
    let kw = keywords(cfg)?;
    let ctx = FeatureContext::new(&vocabs, &kw);
    let rules = LightweightRules::read(&wd.require(wd.rules())?)?;
    let table = SenderTable::read(&wd.require(wd.sender_table())?)?;
    let models = ModelSet::read(&wd.require(wd.message_models())?)?;
    let cascade = Cascade::new(&rules, &table, &models, &ctx)?;
    let report = cascade.classify_batch(&messages);
    write_file(&wd.decisions(), &decisions_to_string(&report.decisions))?;
    let summary = report.summary();
    write_file(&wd.classify_summary(), &summary)?;
    let (_, table_rate) = sender_table_throughput(&messages, &table);
    Ok((summary, ClassifyTiming { messages_per_sec: report.throughput(), table_stage_messages_per_sec: table_rate }))
}

/// Sender truth for evaluation: ground truth where known, else the label.
fn eval_truth(wd: &Workdir) -> Result<Option<BTreeMap<String, Category>>> {
    Ok(wd.read_truth()?.map(|t| t.senders))
}

pub fn run_evaluate(wd: &Workdir, cfg: &PipelineConfig) -> Result<String> {
    let messages = wd.read_corpus()?;
    let aggs = wd.read_aggregates()?;
    let vocabs = wd.read_vocabularies()?;
    let kw = keywords(cfg)?;
    let ctx = FeatureContext::new(&vocabs, &kw);
    let labels = training_labels(&wd.read_labeled()?);
    let vectors: BTreeMap<String, FeatureVector> =
        sender_features(&aggs, &ctx)?.into_iter().filter(|(s, _)| labels.contains_key(s)).collect();
    let truth = eval_truth(wd)?;
    let senders: Vec<&String> = labels.keys().collect();
    let plan = split_by_domain(&senders, cfg.eval.train_fraction, cfg.eval.repeats, cfg.seed)?;
    write_file(&wd.split(), &plan.to_text())?;
    let data = AblationData { vectors: &vectors, labels: &labels, truth: truth.as_ref() };
    let tc = TrainConfig { hasher: cfg.hasher()?, sgd: cfg.sgd() };
    let subsets = cfg.subsets()?;
    let table = run_ablation(&data, &subsets, &plan, &tc)?;
    write_file(&wd.auc_table(), &table.to_text())?;
    for c in &table.rows {
        let series: Vec<(String, Vec<(f64, f64)>)> = table
            .columns
            .iter()
            .filter_map(|col| table.cells.get(&(*c, col.clone())).map(|cell| (col.clone(), cell.roc.clone())))
            .collect();
        write_file(&wd.roc_plot(*c), &curves_svg(&format!("ROC: {c}"), "false positive rate", "true positive rate", &series))?;
    }

    // human vs machine on one message per sampled sender, scored by the
    // first repeat's models on its test side
    let mut hm = String::from("# metric\tvalue\n");
    let ts_cfg = TestSetConfig {
        n: cfg.eval.testset_size,
        monthly_cutoff: cfg.eval.monthly_cutoff,
        never_replied_cutoff: cfg.eval.never_replied_cutoff,
        seed: cfg.seed,
    };
    let test_side: SenderAggregates = aggs
        .iter()
        .filter(|(s, _)| plan.side(0, s) == Some(Side::Test) && vectors.contains_key(*s))
        .map(|(s, a)| (s.clone(), a.clone()))
        .collect();
    let full = subsets.first().cloned().unwrap_or(FeatureSubset::parse("all")?);
    match build_human_machine_testset(&messages, &test_side, &ts_cfg) {
        Ok(ts) => {
            let models = train_split(&data, &full, &plan, 0, &tc)?;
            let hasher = models.hasher().expect("trained");
            let gt = wd.read_truth()?;
            let human = models.get(Category::Human).expect("human model");
            let mut scores = Vec::new();
            for m in &ts.messages {
                let s = crate::corpus::canonical_address(&m.sender)?;
                let is_human = match &gt {
                    Some(t) => t.message_category(m) == Some(Category::Human),
                    None => labels[&s].is_human(),
                };
                let x = hasher.vectorize(&vectors[&s].filtered(|f| full.keeps(&f.id)).normalize()?);
                scores.push((human.score(&x)?, is_human));
            }
            hm.push_str(&format!("sampled_senders\t{}\n", ts.messages.len()));
            hm.push_str(&format!("excluded_volume\t{}\n", ts.excluded_volume.len()));
            hm.push_str(&format!("excluded_never_replied\t{}\n", ts.excluded_never_replied.len()));
            match compute_roc_pr_auc(&scores) {
                Ok(r) => hm.push_str(&format!("auc\t{:.4}\naverage_precision\t{:.4}\n", r.auc, r.average_precision)),
                Err(e) => hm.push_str(&format!("auc\t-\t{e}\n")),
            }
        }
        Err(e) => hm.push_str(&format!("testset\t-\t{e}\n")),
    }
    write_file(&wd.human_machine_auc(), &hm)?;
    Ok(table.to_text())
}

pub fn run_report(wd: &Workdir) -> Result<String> {
    let decisions = parse_decisions(&read_to_string(&wd.require(wd.decisions())?)?)?;
    let shares = coverage_report(&decisions)?;
    let cov = coverage_to_string(&shares);
    write_file(&wd.coverage(), &cov)?;
    let aggs = wd.read_aggregates()?;
    let labels: BTreeMap<String, bool> = match eval_truth(wd)? {
        Some(t) => t.into_iter().map(|(s, c)| (s, c == Category::Human)).collect(),
        None => wd.read_labeled()?.into_iter().map(|l| (l.sender, l.label.is_human())).collect(),
    };
    let stats = human_machine_stats(&aggs, &labels, &crate::resources::first_names());
    write_file(&wd.stats(), &stats.to_text())?;
    Ok(cov)
}

/// Timings collected while running every stage.
#[derive(Debug, Clone, Default)]
pub struct RunTimings {
    pub stages: Vec<(&'static str, f64)>,
    pub classify: Option<ClassifyTiming>,
}

/// synth through report in one go.
pub fn run_all(wd: &Workdir, cfg: &PipelineConfig) -> Result<RunTimings> {
    cfg.validate()?;
    let mut t = RunTimings::default();
    let mut time = |name: &'static str, f: &mut dyn FnMut() -> Result<()>| -> Result<()> {
        let start = Instant::now();
        f()?;
        t.stages.push((name, start.elapsed().as_secs_f64()));
        log::info!("{name} done in {:.2}s", start.elapsed().as_secs_f64());
        Ok(())
    };
    let mut classify = None;
    time("synth", &mut || run_synth(wd, cfg).map(drop))?;
    time("aggregate", &mut || run_aggregate(wd).map(drop))?;
    time("vocab", &mut || run_vocab(wd, cfg).map(drop))?;
    time("lda", &mut || run_lda(wd, cfg).map(drop))?;
    time("label", &mut || run_label(wd, cfg).map(drop))?;
    time("train", &mut || run_train(wd, cfg).map(drop))?;
    time("build-table", &mut || run_build_table(wd, cfg).map(drop))?;
    time("classify", &mut || {
        classify = Some(run_classify(wd, cfg, None)?.1);
        Ok(())
    })?;
    time("evaluate", &mut || run_evaluate(wd, cfg).map(drop))?;
    time("report", &mut || run_report(wd).map(drop))?;
    t.classify = classify;
    Ok(t)
}
