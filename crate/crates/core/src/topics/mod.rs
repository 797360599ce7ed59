//! Folder documents, LDA over them, topic coverage and topic naming.

pub mod lda;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::category::Category;
use crate::corpus::canonical::canonical_address;
use crate::corpus::message::Message;
use crate::error::{Error, Result};
use crate::features::Vocabulary;
use crate::io::{escape, parse_field, read_records, split_fields, unescape, write_file};

pub use lda::{train_online_lda, BagOfWords, Lda, LdaConfig};

/// All messages users moved into folders with one name, as a bag of words.
#[derive(Debug, Clone, PartialEq)]
pub struct FolderDocument {
    pub name: String,
    pub tokens: BTreeMap<String, u64>,
    pub message_count: u64,
    /// Canonical sender to number of its messages moved here.
    pub senders: BTreeMap<String, u64>,
    /// Share of the foldered traffic across the kept documents.
    pub traffic_weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FolderDocConfig {
    pub min_messages: u64,
    pub excluded: BTreeSet<String>,
}

impl Default for FolderDocConfig {
    fn default() -> Self {
        let mut excluded = crate::resources::system_folders();
        excluded.extend(crate::resources::third_party_folders());
        FolderDocConfig { min_messages: 1000, excluded }
    }
}

impl FolderDocConfig {
    pub fn desk() -> Self {
        FolderDocConfig { min_messages: 20, ..FolderDocConfig::default() }
    }
}

/// Merges same-named folders across users, dropping system and third-party
/// folders and folders below the message floor.
pub fn build_folder_documents(messages: &[Message], cfg: &FolderDocConfig) -> Result<Vec<FolderDocument>> {
    let mut by_name: BTreeMap<&str, FolderDocument> = BTreeMap::new();
    let mut any_moves = false;
    for m in messages {
        let Some(folder) = m.folder.as_deref() else { continue };
        any_moves = true;
        if cfg.excluded.contains(folder) {
            continue;
        }
        let doc = by_name.entry(folder).or_insert_with(|| FolderDocument {
            name: folder.to_string(),
            tokens: BTreeMap::new(),
            message_count: 0,
            senders: BTreeMap::new(),
            traffic_weight: 0.0,
        });
        doc.message_count += 1;
        for t in m.subject_tokens().into_iter().chain(m.body_tokens()) {
            *doc.tokens.entry(t).or_default() += 1;
        }
        if let Ok(c) = canonical_address(&m.sender) {
            *doc.senders.entry(c).or_default() += 1;
        }
    }
    if !any_moves {
        return Err(Error::EmptyInput("corpus has no folder moves".into()));
    }
    let mut docs: Vec<FolderDocument> = by_name
        .into_values()
        .filter(|d| d.message_count >= cfg.min_messages)
        .collect();
    let total: u64 = docs.iter().map(|d| d.message_count).sum();
    for d in &mut docs {
        d.traffic_weight = d.message_count as f64 / total.max(1) as f64;
    }
    Ok(docs)
}

/// Maps a folder document onto the vocabulary; unknown words are dropped.
pub fn bag_of_words(doc: &FolderDocument, vocab: &Vocabulary) -> BagOfWords {
    doc.tokens
        .iter()
        .filter_map(|(t, c)| vocab.index_of(t).map(|i| (i, *c as f64)))
        .collect()
}

/// A trained model together with its vocabulary and the folder mixtures.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    pub vocab: Vec<String>,
    pub lda: Lda,
    pub config: LdaConfig,
    pub mixtures: BTreeMap<String, Vec<f64>>,
}

impl TopicModel {
    pub fn k(&self) -> usize {
        self.lda.k
    }

    pub fn topic_word(&self) -> Vec<Vec<f64>> {
        self.lda.topic_word()
    }

    /// The `n` most probable words of every topic, ties by word.
    pub fn top_words(&self, n: usize) -> Vec<Vec<(String, f64)>> {
        self.topic_word()
            .into_iter()
            .map(|row| {
                let mut idx: Vec<usize> = (0..row.len()).collect();
                idx.sort_by(|a, b| row[*b].total_cmp(&row[*a]).then_with(|| self.vocab[*a].cmp(&self.vocab[*b])));
                idx.into_iter().take(n).map(|i| (self.vocab[i].clone(), row[i])).collect()
            })
            .collect()
    }
}

/// Trains LDA over folder documents and infers every document's mixture.
pub fn train_lda(docs: &[FolderDocument], vocab: &Vocabulary, cfg: &LdaConfig) -> Result<TopicModel> {
    let bags: Vec<BagOfWords> = docs.iter().map(|d| bag_of_words(d, vocab)).collect();
    let lda = train_online_lda(&bags, vocab.len(), cfg)?;
    let mixtures = docs
        .par_iter()
        .zip(bags.par_iter())
        .map(|(d, b)| (d.name.clone(), lda.infer(b, cfg.max_e_iters, cfg.e_tol)))
        .collect();
    Ok(TopicModel { vocab: vocab.terms().to_vec(), lda, config: cfg.clone(), mixtures })
}

/// Topic mixture of a document under a trained model.
pub fn infer_topic_mixture(model: &TopicModel, doc: &FolderDocument) -> Vec<f64> {
    let index: BTreeMap<&str, usize> = model.vocab.iter().enumerate().map(|(i, w)| (w.as_str(), i)).collect();
    let bag: BagOfWords = doc
        .tokens
        .iter()
        .filter_map(|(t, c)| index.get(t.as_str()).map(|i| (*i, *c as f64)))
        .collect();
    model.lda.infer(&bag, model.config.max_e_iters, model.config.e_tol)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coverage {
    pub per_topic: Vec<f64>,
    pub total: f64,
}

/// A document adds its traffic weight to topic `t` iff its mixture mass on
/// `t` strictly exceeds `threshold`.
pub fn topic_coverage(mixtures: &BTreeMap<String, Vec<f64>>, k: usize, docs: &[FolderDocument], threshold: f64) -> Result<Coverage> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::config("coverage threshold must be in (0, 1]"));
    }
    let mut per_topic = vec![0.0; k];
    for d in docs {
        let Some(m) = mixtures.get(&d.name) else { continue };
        for (t, mass) in m.iter().enumerate().take(k) {
            if *mass > threshold {
                per_topic[t] += d.traffic_weight;
            }
        }
    }
    let total = per_topic.iter().sum();
    Ok(Coverage { per_topic, total })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageRow {
    pub k: usize,
    pub coverage: Coverage,
}

/// Trains one model per candidate K and reports its coverage at `threshold`.
pub fn select_k(
    docs: &[FolderDocument],
    vocab: &Vocabulary,
    candidates: &[usize],
    template: &LdaConfig,
    threshold: f64,
) -> Result<Vec<CoverageRow>> {
    if candidates.is_empty() {
        return Err(Error::config("no candidate K values"));
    }
    candidates
        .iter()
        .map(|&k| {
            let cfg = LdaConfig { k, ..template.clone() };
            let model = train_lda(docs, vocab, &cfg)?;
            Ok(CoverageRow { k, coverage: topic_coverage(&model.mixtures, k, docs, threshold)? })
        })
        .collect()
}

pub fn coverage_report_to_string(rows: &[CoverageRow]) -> String {
    let mut out = String::from("# k\ttopic\tcoverage\n");
    for r in rows {
        for (t, c) in r.coverage.per_topic.iter().enumerate() {
            let _ = writeln!(out, "{}\t{t}\t{c:.6}", r.k);
        }
        let _ = writeln!(out, "{}\ttotal\t{:.6}", r.k, r.coverage.total);
    }
    out
}

const AMBIGUITY_RATIO: f64 = 0.5;

/// Suggests a category for each topic: the seed-word mass of every
/// (topic, category) pair is computed, then pairs are taken greedily from the
/// highest mass, each topic and category used once. Topics whose seed mass
/// is within 1.5 times the uniform share stay unnamed, as do topics where the
/// runner-up category has at least half the leader's mass.
pub fn name_topics(model: &TopicModel, seeds: &BTreeMap<Category, Vec<String>>) -> Vec<Option<Category>> {
    let index: BTreeMap<&str, usize> = model.vocab.iter().enumerate().map(|(i, w)| (w.as_str(), i)).collect();
    let rows = model.topic_word();
    let mut pairs: Vec<(f64, usize, Category)> = Vec::new();
    for (t, row) in rows.iter().enumerate() {
        let mut own: Vec<(f64, usize, Category)> = Vec::new();
        for (cat, words) in seeds {
            let hits: Vec<usize> = words.iter().filter_map(|w| index.get(w.as_str()).copied()).collect();
            let mass: f64 = hits.iter().map(|i| row[*i]).sum();
            // a near-uniform topic carries no evidence for any name
            let uniform = hits.len() as f64 / row.len().max(1) as f64;
            if mass > 1.5 * uniform {
                own.push((mass, t, *cat));
            }
        }
        own.sort_by(|a, b| b.0.total_cmp(&a.0));
        // two categories merged into one topic
        if own.len() >= 2 && own[1].0 >= AMBIGUITY_RATIO * own[0].0 {
            continue;
        }
        pairs.extend(own);
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut out = vec![None; rows.len()];
    let mut used = BTreeSet::new();
    for (mass, t, cat) in pairs {
        if mass > 0.0 && out[t].is_none() && !used.contains(&cat) {
            out[t] = Some(cat);
            used.insert(cat);
        }
    }
    out
}

pub fn topic_labels_to_string(labels: &[Option<Category>]) -> String {
    let mut out = String::from("# topic\tcategory ('-' leaves the topic unnamed)\n");
    for (t, l) in labels.iter().enumerate() {
        let _ = writeln!(out, "{t}\t{}", l.map(|c| c.as_str()).unwrap_or("-"));
    }
    out
}

pub fn read_topic_labels(path: &Path) -> Result<Vec<Option<Category>>> {
    let mut out: BTreeMap<usize, Option<Category>> = BTreeMap::new();
    for (line, rec) in read_records(path)? {
        let f = split_fields(&rec, 2, line)?;
        let t: usize = parse_field(f[0], "topic", line)?;
        let label = match f[1].trim() {
            "-" => None,
            s => Some(s.parse().map_err(|e: Error| Error::parse(line, e.to_string()))?),
        };
        if out.insert(t, label).is_some() {
            return Err(Error::parse(line, format!("topic {t} labeled twice")));
        }
    }
    let n = out.keys().next_back().map(|k| k + 1).unwrap_or(0);
    Ok((0..n).map(|t| out.get(&t).copied().flatten()).collect())
}

/// `topic, rank, word, probability` rows.
pub fn topic_dump_to_string(model: &TopicModel, n: usize, labels: &[Option<Category>]) -> String {
    let mut out = String::from("# topic\tlabel\trank\tword\tprobability\n");
    for (t, words) in model.top_words(n).into_iter().enumerate() {
        let label = labels.get(t).copied().flatten().map(|c| c.as_str()).unwrap_or("-");
        for (r, (w, p)) in words.into_iter().enumerate() {
            let _ = writeln!(out, "{t}\t{label}\t{}\t{}\t{p:.6}", r + 1, escape(&w));
        }
    }
    out
}

/// `folder, topic:weight,...` rows.
pub fn mixtures_to_string(mixtures: &BTreeMap<String, Vec<f64>>) -> String {
    let mut out = String::from("# folder\ttopic:weight,...\n");
    for (f, m) in mixtures {
        let parts: Vec<String> = m.iter().enumerate().map(|(t, w)| format!("{t}:{w}")).collect();
        let _ = writeln!(out, "{}\t{}", escape(f), parts.join(","));
    }
    out
}

pub fn parse_mixtures(records: &[(usize, String)]) -> Result<BTreeMap<String, Vec<f64>>> {
    let mut out = BTreeMap::new();
    for (line, rec) in records {
        let f = split_fields(rec, 2, *line)?;
        let name = unescape(f[0]).map_err(|e| Error::parse(*line, e))?;
        let mut m = Vec::new();
        for (i, part) in f[1].split(',').enumerate() {
            let (t, w) = part
                .split_once(':')
                .ok_or_else(|| Error::parse(*line, format!("bad mixture entry {part:?}")))?;
            let t: usize = parse_field(t, "topic", *line)?;
            if t != i {
                return Err(Error::parse(*line, "mixture topics must be listed in order"));
            }
            m.push(parse_field(w, "weight", *line)?);
        }
        out.insert(name, m);
    }
    Ok(out)
}

pub fn read_mixtures(path: &Path) -> Result<BTreeMap<String, Vec<f64>>> {
    parse_mixtures(&read_records(path)?)
}

/// Model file: a `k, vocab_size, alpha, eta` line followed by one
/// `word, lambda_0 .. lambda_{K-1}` line per vocabulary word.
pub fn model_to_string(model: &TopicModel) -> String {
    let lda = &model.lda;
    let mut out = String::from("# lda model: k\tvocab_size\talpha\teta, then word\tlambda per topic\n");
    let _ = writeln!(out, "{}\t{}\t{}\t{}", lda.k, lda.vocab_size, lda.alpha, lda.eta);
    for (w, word) in model.vocab.iter().enumerate() {
        out.push_str(&escape(word));
        for t in 0..lda.k {
            let _ = write!(out, "\t{}", lda.lambda[t * lda.vocab_size + w]);
        }
        out.push('\n');
    }
    out
}

pub fn write_topic_model(path: &Path, model: &TopicModel) -> Result<()> {
    write_file(path, &model_to_string(model))
}

/// Reads a model file; mixtures are not part of it and come back empty.
pub fn read_topic_model(path: &Path) -> Result<TopicModel> {
    let records = read_records(path)?;
    let (hline, header) = records.first().ok_or_else(|| Error::EmptyInput(format!("{}", path.display())))?;
    let h = split_fields(header, 4, *hline)?;
    let k: usize = parse_field(h[0], "k", *hline)?;
    let w: usize = parse_field(h[1], "vocab_size", *hline)?;
    let alpha: f64 = parse_field(h[2], "alpha", *hline)?;
    let eta: f64 = parse_field(h[3], "eta", *hline)?;
    if records.len() != w + 1 {
        return Err(Error::parse(*hline, format!("expected {w} word rows, found {}", records.len() - 1)));
    }
    let mut vocab = Vec::with_capacity(w);
    let mut lambda = vec![0.0; k * w];
    for (i, (line, rec)) in records[1..].iter().enumerate() {
        let f = split_fields(rec, k + 1, *line)?;
        vocab.push(unescape(f[0]).map_err(|e| Error::parse(*line, e))?);
        for t in 0..k {
            lambda[t * w + i] = parse_field(f[t + 1], "lambda", *line)?;
        }
    }
    let lda = Lda::from_lambda(k, w, alpha, eta, lambda)?;
    let config = LdaConfig { alpha: Some(alpha), eta: Some(eta), ..LdaConfig::new(k, 0) };
    Ok(TopicModel { vocab, lda, config, mixtures: BTreeMap::new() })
}
