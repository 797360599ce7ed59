use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use super::curves::{average_roc, compute_roc_pr_auc};
use super::{Side, SplitPlan};
use crate::category::{Category, Label};
use crate::error::{Error, Result};
use crate::features::{Family, FeatureVector, BODY_WORD_PREFIX};
use crate::models::{train_one_vs_all, FeatureHasher, ModelSet, SgdConfig};

/// A named set of feature families, optionally minus id prefixes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSubset {
    pub name: String,
    pub families: BTreeSet<Family>,
    pub drop_prefixes: Vec<String>,
}

const ALL_MODEL_FAMILIES: [Family; 4] = [Family::Content, Family::Address, Family::Behavioral, Family::Burst];

impl FeatureSubset {
    /// Accepts `all`, `content`, `address`, `behavioral` (with burst),
    /// `burst`, `no-burst`, `no-body`, or family names joined by `+`.
    pub fn parse(name: &str) -> Result<Self> {
        let all: BTreeSet<Family> = ALL_MODEL_FAMILIES.into_iter().collect();
        let mut drop_prefixes = Vec::new();
        let families: BTreeSet<Family> = match name {
            "all" => all,
            "content" | "content-only" => [Family::Content].into(),
            "address" | "address-only" => [Family::Address].into(),
            "behavioral" | "behavioral-only" => [Family::Behavioral, Family::Burst].into(),
            "burst" => [Family::Burst].into(),
            "no-burst" => all.into_iter().filter(|f| *f != Family::Burst).collect(),
            "no-body" => {
                drop_prefixes.push(BODY_WORD_PREFIX.to_string());
                all
            }
            other if other.contains('+') => {
                let mut fams = BTreeSet::new();
                for part in other.split('+') {
                    let sub = FeatureSubset::parse(part)?;
                    fams.extend(sub.families);
                    drop_prefixes.extend(sub.drop_prefixes);
                }
                fams
            }
            other => [other.parse::<Family>().map_err(|e| Error::config(format!("feature subset {name:?}: {e}")))?].into(),
        };
        Ok(FeatureSubset { name: name.to_string(), families, drop_prefixes })
    }

    pub fn defaults() -> Vec<FeatureSubset> {
        ["all", "content", "address", "behavioral", "no-burst", "no-body"]
            .iter()
            .map(|n| FeatureSubset::parse(n).expect("built-in subset"))
            .collect()
    }

    pub fn keeps(&self, id: &str) -> bool {
        Family::of(id).is_some_and(|f| self.families.contains(&f)) && !self.drop_prefixes.iter().any(|p| id.starts_with(p.as_str()))
    }
}

/// Sender features with their training labels and, when known, the truth
/// used for scoring.
pub struct AblationData<'a> {
    pub vectors: &'a BTreeMap<String, FeatureVector>,
    pub labels: &'a BTreeMap<String, Label>,
    pub truth: Option<&'a BTreeMap<String, Category>>,
}

impl AblationData<'_> {
    fn truth_of(&self, sender: &str) -> Label {
        self.truth.and_then(|t| t.get(sender)).map(|c| Label::Category(*c)).unwrap_or(self.labels[sender])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationCell {
    pub auc: f64,
    pub repeat_aucs: Vec<f64>,
    pub roc: Vec<(f64, f64)>,
}

/// Mean one-vs-rest AUC per (category, subset).
#[derive(Debug, Clone, PartialEq)]
pub struct AblationTable {
    pub rows: Vec<Category>,
    pub columns: Vec<String>,
    pub cells: BTreeMap<(Category, String), AblationCell>,
}

impl AblationTable {
    pub fn auc(&self, c: Category, column: &str) -> Option<f64> {
        self.cells.get(&(c, column.to_string())).map(|x| x.auc)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("category\t{}\n", self.columns.join("\t"));
        for r in &self.rows {
            s.push_str(r.as_str());
            for c in &self.columns {
                match self.auc(*r, c) {
                    Some(a) if a.is_finite() => s.push_str(&format!("\t{a:.4}")),
                    _ => s.push_str("\t-"),
                }
            }
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub hasher: FeatureHasher,
    pub sgd: SgdConfig,
}

/// Trains sender models on the train side of one repeat using `subset`.
pub fn train_split(
    data: &AblationData,
    subset: &FeatureSubset,
    plan: &SplitPlan,
    repeat: usize,
    cfg: &TrainConfig,
) -> Result<ModelSet> {
    let examples: Vec<_> = data
        .labels
        .iter()
        .filter(|(s, _)| plan.side(repeat, s) == Some(Side::Train))
        .filter_map(|(s, c)| data.vectors.get(s).map(|v| (v, *c)))
        .map(|(v, c)| Ok((cfg.hasher.vectorize(&v.filtered(|f| subset.keeps(&f.id)).normalize()?), c)))
        .collect::<Result<_>>()?;
    let sgd = SgdConfig { seed: cfg.sgd.seed.wrapping_add(repeat as u64), ..cfg.sgd };
    train_one_vs_all(&examples, &Category::MODELED, cfg.hasher, &sgd)
}

/// Scores of each modeled category on the test side: machine rows leave out
/// truly human senders and senders known only as machine; the human row uses
/// every test sender.
pub fn test_scores(
    data: &AblationData,
    subset: &FeatureSubset,
    plan: &SplitPlan,
    repeat: usize,
    models: &ModelSet,
) -> Result<BTreeMap<Category, Vec<(f64, bool)>>> {
    let hasher = models.hasher().ok_or_else(|| Error::EmptyInput("models".into()))?;
    let mut out: BTreeMap<Category, Vec<(f64, bool)>> = BTreeMap::new();
    for s in data.labels.keys().filter(|s| plan.side(repeat, s) == Some(Side::Test)) {
        let Some(v) = data.vectors.get(s) else { continue };
        let x = hasher.vectorize(&v.filtered(|f| subset.keeps(&f.id)).normalize()?);
        let truth = data.truth_of(s);
        for (c, p) in models.scores(&x)? {
            if c != Category::Human && truth.is_human() {
                continue;
            }
            if let Some(t) = truth.target_for(c) {
                out.entry(c).or_default().push((p, t));
            }
        }
    }
    Ok(out)
}

/// One train/eval cycle per subset per repeat, averaged over repeats.
pub fn run_ablation(data: &AblationData, subsets: &[FeatureSubset], plan: &SplitPlan, cfg: &TrainConfig) -> Result<AblationTable> {
    let jobs: Vec<(usize, usize)> = (0..subsets.len()).flat_map(|s| (0..plan.repeats()).map(move |r| (s, r))).collect();
    let results: Vec<((usize, usize), BTreeMap<Category, Vec<(f64, bool)>>)> = jobs
        .par_iter()
        .map(|&(s, r)| {
            let models = train_split(data, &subsets[s], plan, r, cfg)?;
            Ok(((s, r), test_scores(data, &subsets[s], plan, r, &models)?))
        })
        .collect::<Result<_>>()?;
    let mut cells = BTreeMap::new();
    for (si, subset) in subsets.iter().enumerate() {
        for c in Category::MODELED {
            let mut aucs = Vec::new();
            let mut curves = Vec::new();
            for ((s, _), scores) in &results {
                if *s != si {
                    continue;
                }
                if let Some(Ok(rep)) = scores.get(&c).map(|v| compute_roc_pr_auc(v)) {
                    aucs.push(rep.auc);
                    curves.push(rep.roc);
                }
            }
            let auc = if aucs.is_empty() { f64::NAN } else { aucs.iter().sum::<f64>() / aucs.len() as f64 };
            cells.insert((c, subset.name.clone()), AblationCell { auc, repeat_aucs: aucs, roc: average_roc(&curves, 101) });
        }
    }
    Ok(AblationTable { rows: Category::MODELED.to_vec(), columns: subsets.iter().map(|s| s.name.clone()).collect(), cells })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subset_names() {
        let nb = FeatureSubset::parse("no-body").unwrap();
        assert!(!nb.keeps("content/body:sale") && nb.keeps("content/subj:sale") && nb.keeps("burst/gt100"));
        assert!(!nb.keeps("folder/bank"));
        let b = FeatureSubset::parse("behavioral").unwrap();
        assert!(b.keeps("burst/gt10") && b.keeps("behavioral/read") && !b.keeps("address/wildcard"));
        assert!(!FeatureSubset::parse("no-burst").unwrap().keeps("burst/gt10"));
        assert!(FeatureSubset::parse("all+folder").unwrap().keeps("folder/bank"));
        assert!(FeatureSubset::parse("vibes").is_err());
        assert_eq!(FeatureSubset::defaults().len(), 6);
    }
}
