use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use super::{LabeledSender, Source};
use crate::category::Label;
use crate::error::{Error, Result};
use crate::features::{Family, FeatureVector};
use crate::models::{train_logistic, FeatureHasher, HashedVector, SgdConfig};

#[derive(Debug, Clone)]
pub struct CoTrainConfig {
    pub view_a: Vec<Family>,
    pub view_b: Vec<Family>,
    pub rounds: usize,
    pub conf_threshold: f64,
    pub hasher: FeatureHasher,
    pub sgd: SgdConfig,
}

impl Default for CoTrainConfig {
    fn default() -> Self {
        CoTrainConfig {
            view_a: vec![Family::Address],
            view_b: vec![Family::Behavioral, Family::Burst],
            rounds: 4,
            conf_threshold: 0.95,
            hasher: FeatureHasher::default(),
            sgd: SgdConfig::default(),
        }
    }
}

impl CoTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.view_a.is_empty() || self.view_b.is_empty() {
            return Err(Error::config("co-training views must be non-empty"));
        }
        if self.view_a.iter().any(|f| self.view_b.contains(f)) {
            return Err(Error::config("co-training views must be disjoint"));
        }
        if self.rounds == 0 || !(0.5..1.0).contains(&self.conf_threshold) {
            return Err(Error::config("co-training needs rounds >= 1 and a threshold in [0.5, 1)"));
        }
        Ok(())
    }
}

fn view_vectors(
    vectors: &BTreeMap<String, FeatureVector>,
    view: &[Family],
    hasher: &FeatureHasher,
) -> Result<BTreeMap<String, HashedVector>> {
    let out: Vec<(String, HashedVector)> = vectors
        .par_iter()
        .map(|(s, v)| {
            let v = v.filtered(|f| f.family().is_some_and(|fam| view.contains(&fam))).normalize()?;
            Ok((s.clone(), hasher.vectorize(&v)))
        })
        .collect::<Result<_>>()?;
    Ok(out.into_iter().collect())
}

/// Alternates human-vs-machine classifiers over the given views, growing the
/// pool with confident predictions. Seeds are never relabeled.
fn expand(
    seed: &[LabeledSender],
    vectors: &BTreeMap<String, FeatureVector>,
    views: &[Vec<Family>],
    cfg: &CoTrainConfig,
) -> Result<Vec<LabeledSender>> {
    let hashed: Vec<BTreeMap<String, HashedVector>> =
        views.iter().map(|v| view_vectors(vectors, v, &cfg.hasher)).collect::<Result<_>>()?;
    for (view, h) in views.iter().zip(&hashed) {
        let any = seed.iter().any(|s| h.get(&s.sender).is_some_and(|x| !x.indices.is_empty()));
        if !any {
            return Err(Error::EmptyInput(format!("co-training view {view:?} has no features on the seed set")));
        }
    }
    let mut pool: BTreeMap<String, bool> = seed.iter().map(|s| (s.sender.clone(), s.label.is_human())).collect();
    let humans = pool.values().filter(|h| **h).count();
    if humans == 0 || humans == pool.len() {
        return Err(Error::EmptyClass("human".into(), if humans == 0 { "positive" } else { "negative" }));
    }
    let mut added: Vec<LabeledSender> = Vec::new();
    let mut idle = 0;
    for round in 0..cfg.rounds {
        let h = &hashed[round % hashed.len()];
        let examples: Vec<(&HashedVector, bool)> =
            pool.iter().filter_map(|(s, y)| h.get(s).map(|x| (x, *y))).collect();
        let sgd = SgdConfig { seed: cfg.sgd.seed.wrapping_add(round as u64), ..cfg.sgd };
        let model = train_logistic(&examples, cfg.hasher.dim(), &sgd, None)?;
        let fresh: Vec<LabeledSender> = h
            .par_iter()
            .filter(|(s, _)| !pool.contains_key(*s))
            .filter_map(|(s, x)| {
                let p = model.predict(x);
                let conf = p.max(1.0 - p);
                (conf > cfg.conf_threshold).then(|| {
                    let label = if p > 0.5 { Label::HUMAN } else { Label::Machine };
                    LabeledSender::new(s.clone(), label, Source::Cotrain, conf)
                })
            })
            .collect();
        log::debug!("co-training round {round}: {} additions", fresh.len());
        if fresh.is_empty() {
            idle += 1;
            if idle >= hashed.len() {
                break;
            }
            continue;
        }
        idle = 0;
        for l in fresh {
            pool.insert(l.sender.clone(), l.label.is_human());
            added.push(l);
        }
    }
    added.sort_by(|a, b| a.sender.cmp(&b.sender));
    let mut out = seed.to_vec();
    out.extend(added);
    Ok(out)
}

/// Co-training over the two configured views.
pub fn co_train_expand(seed: &[LabeledSender], vectors: &BTreeMap<String, FeatureVector>, cfg: &CoTrainConfig) -> Result<Vec<LabeledSender>> {
    cfg.validate()?;
    expand(seed, vectors, &[cfg.view_a.clone(), cfg.view_b.clone()], cfg)
}

/// Single-view self-training on the union of both views; the baseline
/// co-training is compared against.
pub fn self_train(seed: &[LabeledSender], vectors: &BTreeMap<String, FeatureVector>, cfg: &CoTrainConfig) -> Result<Vec<LabeledSender>> {
    cfg.validate()?;
    let union: BTreeSet<Family> = cfg.view_a.iter().chain(&cfg.view_b).copied().collect();
    expand(seed, vectors, &[union.into_iter().collect()], cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::VectorBuilder;

    fn vec_for(human: bool, i: usize) -> FeatureVector {
        let mut b = VectorBuilder::new();
        b.flag(Family::Address, if human { "name:first" } else { "kw:shop" });
        b.count(Family::Address, &format!("name:n{i}"), 1.0);
        b.count(Family::Behavioral, "out_reply", if human { 5.0 } else { 0.0 });
        b.ratio(Family::Behavioral, "read", if human { 0.9 } else { 0.1 });
        b.build()
    }

    fn data() -> (Vec<LabeledSender>, BTreeMap<String, FeatureVector>) {
        let mut vectors = BTreeMap::new();
        let mut seed = Vec::new();
        for i in 0..60 {
            let human = i % 2 == 0;
            let s = format!("s{i}@x");
            vectors.insert(s.clone(), vec_for(human, i));
            if i < 10 {
                seed.push(LabeledSender::new(s, if human { Label::HUMAN } else { Label::Machine }, Source::Heuristic, 1.0));
            }
        }
        (seed, vectors)
    }

    #[test]
    fn additions_respect_threshold_and_keep_seed() {
        let (seed, vectors) = data();
        let cfg = CoTrainConfig { conf_threshold: 0.6, sgd: SgdConfig { learning_rate: 1.0, epochs: 20, ..Default::default() }, ..Default::default() };
        let out = co_train_expand(&seed, &vectors, &cfg).unwrap();
        assert_eq!(&out[..seed.len()], &seed[..]);
        assert!(out.len() > seed.len());
        for l in &out[seed.len()..] {
            assert!(l.confidence > 0.6 && l.source == Source::Cotrain);
            let i: usize = l.sender[1..l.sender.len() - 2].parse().unwrap();
            assert_eq!(l.label.is_human(), i % 2 == 0);
        }
    }

    #[test]
    fn unreachable_threshold_is_a_fixpoint() {
        let (seed, vectors) = data();
        let cfg = CoTrainConfig { conf_threshold: 0.999999, ..Default::default() };
        assert_eq!(co_train_expand(&seed, &vectors, &cfg).unwrap(), seed);
    }

    #[test]
    fn featureless_view_is_an_error() {
        let (seed, vectors) = data();
        let cfg = CoTrainConfig { view_b: vec![Family::Folder], ..Default::default() };
        assert!(co_train_expand(&seed, &vectors, &cfg).is_err());
        let cfg = CoTrainConfig { view_b: vec![], ..Default::default() };
        assert!(co_train_expand(&seed, &vectors, &cfg).is_err());
    }
}
