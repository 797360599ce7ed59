//! Feature hashing, one-vs-all logistic regression, the sender table and
//! feature importance.

pub mod hashing;
pub mod importance;
pub mod logistic;
pub mod table;

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::category::{Category, Label};
use crate::corpus::{canonical_address, Message};
use crate::error::{Error, Result};
use crate::features::{extract_message_features, FeatureContext, FeatureVector};
use crate::io::{parse_field, read_to_string, split_fields, text_records, write_file};

pub use hashing::{FeatureHasher, HashedVector};
pub use importance::{feature_importance, importance_score, importance_to_string, ImportanceScore};
pub use logistic::{log_loss, log_loss_gradient, sigmoid, train_logistic, LinearModel, SgdConfig};
pub use table::{build_sender_table, SenderTable};

/// Score above which a category model claims an example.
pub const POSITIVE_THRESHOLD: f64 = 0.5;

/// Binary classifier for one category.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryModel {
    pub category: Category,
    pub hasher: FeatureHasher,
    pub sgd: SgdConfig,
    pub linear: LinearModel,
}

impl CategoryModel {
    pub fn score(&self, x: &HashedVector) -> Result<f64> {
        x.check_bits(self.hasher.bits)?;
        Ok(self.linear.predict(x))
    }

    /// Learned weight of a feature id, sign of the hash folded in.
    pub fn feature_weight(&self, id: &str) -> f64 {
        let (i, s) = self.hasher.hash(id);
        self.linear.weights[i as usize] * s
    }
}

/// One model per modeled category, in category order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSet {
    pub models: Vec<CategoryModel>,
}

impl ModelSet {
    pub fn get(&self, c: Category) -> Option<&CategoryModel> {
        self.models.iter().find(|m| m.category == c)
    }

    pub fn hasher(&self) -> Option<FeatureHasher> {
        self.models.first().map(|m| m.hasher)
    }

    pub fn scores(&self, x: &HashedVector) -> Result<Vec<(Category, f64)>> {
        self.models.iter().map(|m| Ok((m.category, m.score(x)?))).collect()
    }

    pub fn predict(&self, x: &HashedVector) -> Result<(Category, f64)> {
        Ok(merge_scores(&self.scores(x)?, POSITIVE_THRESHOLD))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# mailcat model set\n");
        for m in &self.models {
            s.push_str(&format!(
                "model\t{}\tbits\t{}\thash_seed\t{}\tlr\t{}\tepochs\t{}\tl2\t{}\tseed\t{}\tbias\t{}\n",
                m.category, m.hasher.bits, m.hasher.seed, m.sgd.learning_rate, m.sgd.epochs, m.sgd.l2, m.sgd.seed, m.linear.bias
            ));
            for (i, w) in m.linear.weights.iter().enumerate() {
                if *w != 0.0 {
                    s.push_str(&format!("w\t{i}\t{w}\n"));
                }
            }
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut models: Vec<CategoryModel> = Vec::new();
        for (line, rec) in text_records(text) {
            if rec.starts_with("model\t") {
                let f = split_fields(rec, 16, line)?;
                let bits: u32 = parse_field(f[3], "bits", line)?;
                let hasher = FeatureHasher::new(bits, parse_field(f[5], "hash_seed", line)?)?;
                let sgd = SgdConfig {
                    learning_rate: parse_field(f[7], "lr", line)?,
                    epochs: parse_field(f[9], "epochs", line)?,
                    l2: parse_field(f[11], "l2", line)?,
                    seed: parse_field(f[13], "seed", line)?,
                };
                let mut linear = LinearModel::zeros(hasher.dim());
                linear.bias = parse_field(f[15], "bias", line)?;
                models.push(CategoryModel { category: parse_field(f[1], "category", line)?, hasher, sgd, linear });
            } else {
                let f = split_fields(rec, 3, line)?;
                let m = models.last_mut().ok_or_else(|| Error::parse(line, "weight before model header"))?;
                let i: usize = parse_field(f[1], "index", line)?;
                if f[0] != "w" || i >= m.linear.weights.len() {
                    return Err(Error::parse(line, "bad weight record"));
                }
                m.linear.weights[i] = parse_field(f[2], "weight", line)?;
            }
        }
        if models.is_empty() {
            return Err(Error::EmptyInput("model file has no models".into()));
        }
        Ok(ModelSet { models })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_text())
    }

    pub fn read(path: &Path) -> Result<Self> {
        ModelSet::parse(&read_to_string(path)?)
    }
}

/// Highest positive score wins, earlier category on ties; when no model
/// claims the example it falls to Other with the lowest score.
pub fn merge_scores(scores: &[(Category, f64)], threshold: f64) -> (Category, f64) {
    let mut best: Option<(Category, f64)> = None;
    for &(c, p) in scores {
        if p > threshold && best.is_none_or(|(_, b)| p > b) {
            best = Some((c, p));
        }
    }
    best.unwrap_or_else(|| {
        let min = scores.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
        (Category::Other, if min.is_finite() { min } else { 0.0 })
    })
}

/// Binary examples for the model of `c`; see [`Label::target_for`].
fn binary_examples<L: Into<Label> + Copy>(examples: &[(HashedVector, L)], c: Category) -> Vec<(&HashedVector, bool)> {
    examples.iter().filter_map(|(x, y)| (*y).into().target_for(c).map(|t| (x, t))).collect()
}

/// Trains one binary model per category in `categories` in parallel.
pub fn train_one_vs_all<L: Into<Label> + Copy + Sync>(
    examples: &[(HashedVector, L)],
    categories: &[Category],
    hasher: FeatureHasher,
    sgd: &SgdConfig,
) -> Result<ModelSet> {
    if let Some((x, _)) = examples.iter().find(|(x, _)| x.bits != hasher.bits) {
        return Err(Error::HashMismatch { expected: hasher.bits, found: x.bits });
    }
    for &c in categories {
        let ex = binary_examples(examples, c);
        if !ex.iter().any(|(_, t)| *t) {
            return Err(Error::EmptyClass(c.to_string(), "positive"));
        }
        if ex.iter().all(|(_, t)| *t) {
            return Err(Error::EmptyClass(c.to_string(), "negative"));
        }
    }
    let models = categories
        .par_iter()
        .map(|&c| {
            let ex = binary_examples(examples, c);
            let linear = train_logistic(&ex, hasher.dim(), sgd, None)?;
            Ok(CategoryModel { category: c, hasher, sgd: *sgd, linear })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ModelSet { models })
}

/// Normalizes and hashes sender feature vectors, keeping only features
/// accepted by `keep`.
pub fn hash_vectors(
    vectors: &BTreeMap<String, FeatureVector>,
    hasher: &FeatureHasher,
    keep: impl Fn(&str) -> bool + Sync,
) -> Result<BTreeMap<String, HashedVector>> {
    let out: Vec<(String, HashedVector)> = vectors
        .par_iter()
        .map(|(s, v)| {
            let v = v.filtered(|f| keep(&f.id)).normalize()?;
            Ok((s.clone(), hasher.vectorize(&v)))
        })
        .collect::<Result<_>>()?;
    Ok(out.into_iter().collect())
}

/// Samples up to `per_sender` messages from every labeled sender and trains
/// message-level models on their content and address features.
pub fn train_message_models(
    messages: &[Message],
    labels: &BTreeMap<String, Label>,
    ctx: &FeatureContext,
    per_sender: usize,
    hasher: FeatureHasher,
    sgd: &SgdConfig,
) -> Result<ModelSet> {
    let mut by_sender: BTreeMap<String, Vec<&Message>> = BTreeMap::new();
    for m in messages {
        let canonical = canonical_address(&m.sender)?;
        if labels.contains_key(&canonical) {
            by_sender.entry(canonical).or_default().push(m);
        }
    }
    for s in labels.keys().filter(|s| !by_sender.contains_key(*s)) {
        log::warn!("labeled sender {s} has no messages");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(sgd.seed);
    let mut picked: Vec<(&Message, Label)> = Vec::new();
    for (sender, msgs) in &by_sender {
        let label = labels[sender];
        let mut idx: Vec<usize> = if msgs.len() <= per_sender {
            (0..msgs.len()).collect()
        } else {
            sample(&mut rng, msgs.len(), per_sender).into_vec()
        };
        idx.sort_unstable();
        picked.extend(idx.into_iter().map(|i| (msgs[i], label)));
    }
    let examples = picked
        .par_iter()
        .map(|(m, c)| Ok((hasher.vectorize(&extract_message_features(m, ctx).normalize()?), *c)))
        .collect::<Result<Vec<_>>>()?;
    train_one_vs_all(&examples, &Category::MODELED, hasher, sgd)
}
