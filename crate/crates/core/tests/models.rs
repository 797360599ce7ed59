use std::collections::BTreeMap;

use mailcat::category::Category;
use mailcat::eval::{split_by_domain, Side};
use mailcat::features::{CommercialKeywordList, FeatureContext, Family, VectorBuilder};
use mailcat::models::{
    hash_vectors, log_loss, log_loss_gradient, train_logistic, train_one_vs_all, FeatureHasher, HashedVector,
    LinearModel, SgdConfig,
};
use mailcat::pipeline::{run_aggregate, run_synth, run_vocab, sender_features, PipelineConfig, Workdir};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn toy_examples(hasher: &FeatureHasher) -> Vec<(HashedVector, Category)> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    (0..20)
        .map(|i| {
            let travel = i % 2 == 0;
            let (a, b) = if travel { (rng.random_range(0.6..1.0), rng.random_range(0.0..0.4)) } else { (rng.random_range(0.0..0.4), rng.random_range(0.6..1.0)) };
            let mut v = VectorBuilder::new();
            v.ratio(Family::Behavioral, "a", a);
            v.ratio(Family::Behavioral, "b", b);
            (hasher.vectorize(&v.build()), if travel { Category::Travel } else { Category::Career })
        })
        .collect()
}

#[test]
fn separable_toy_set_is_fit_exactly() {
    let hasher = FeatureHasher::new(8, 0).unwrap();
    let ex = toy_examples(&hasher);
    let sgd = SgdConfig { epochs: 200, learning_rate: 1.0, ..SgdConfig::default() };
    let models = train_one_vs_all(&ex, &[Category::Career, Category::Travel], hasher, &sgd).unwrap();
    assert_eq!(models.models.len(), 2);
    let correct = ex.iter().filter(|(x, y)| models.predict(x).unwrap().0 == *y).count();
    assert_eq!(correct, ex.len());
}

#[test]
fn six_categories_give_six_models_and_each_matches_a_lone_fit() {
    let hasher = FeatureHasher::new(10, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let ex: Vec<(HashedVector, Category)> = (0..120)
        .map(|i| {
            let c = Category::MODELED[i % 6];
            let mut v = VectorBuilder::new();
            v.flag(Family::Content, c.as_str());
            v.ratio(Family::Behavioral, "noise", rng.random::<f64>());
            (hasher.vectorize(&v.build()), c)
        })
        .collect();
    let sgd = SgdConfig::default();
    let all = train_one_vs_all(&ex, &Category::MODELED, hasher, &sgd).unwrap();
    assert_eq!(all.models.len(), 6);
    let mut reversed = Category::MODELED;
    reversed.reverse();
    let again = train_one_vs_all(&ex, &reversed, hasher, &sgd).unwrap();
    for m in &all.models {
        let binary: Vec<(&HashedVector, bool)> = ex.iter().map(|(x, y)| (x, *y == m.category)).collect();
        let lone = train_logistic(&binary, hasher.dim(), &sgd, None).unwrap();
        assert_eq!(lone, m.linear, "{}", m.category);
        assert_eq!(again.get(m.category).unwrap().linear, m.linear);
    }
}

#[test]
fn empty_class_is_named() {
    let hasher = FeatureHasher::new(8, 0).unwrap();
    let ex = toy_examples(&hasher);
    let err = train_one_vs_all(&ex, &[Category::Career, Category::Social], hasher, &SgdConfig::default()).unwrap_err();
    assert!(err.to_string().contains("social"), "{err}");
}

#[test]
fn held_out_loss_falls_over_first_three_epochs() {
    let dir = tempfile::tempdir().unwrap();
    let wd = Workdir::new(dir.path()).unwrap();
    let mut cfg = PipelineConfig { seed: 2, ..Default::default() };
    cfg.synth.senders = 1200;
    run_synth(&wd, &cfg).unwrap();
    run_aggregate(&wd).unwrap();
    run_vocab(&wd, &cfg).unwrap();
    let aggs = wd.read_aggregates().unwrap();
    let vocabs = wd.read_vocabularies().unwrap();
    let kw = CommercialKeywordList::bundled();
    let ctx = FeatureContext::new(&vocabs, &kw);
    let truth = wd.read_truth().unwrap().unwrap();
    let vectors = sender_features(&aggs, &ctx).unwrap();
    let hasher = cfg.hasher().unwrap();
    let hashed = hash_vectors(&vectors, &hasher, |_| true).unwrap();
    let senders: Vec<&String> = hashed.keys().collect();
    let plan = split_by_domain(&senders, 0.65, 1, 2).unwrap();
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (s, x) in &hashed {
        let y = truth.senders[s] == Category::Human;
        match plan.side(0, s) {
            Some(Side::Train) => train.push((x, y)),
            _ => test.push((x, y)),
        }
    }
    let held_out = |m: &LinearModel| test.iter().map(|(x, y)| log_loss(m, x, *y, 0.0)).sum::<f64>() / test.len() as f64;
    let mut losses = vec![held_out(&LinearModel::zeros(hasher.dim()))];
    let mut record = |_: usize, m: &LinearModel| losses.push(held_out(m));
    train_logistic(&train, hasher.dim(), &cfg.sgd(), Some(&mut record)).unwrap();
    assert!(losses.len() >= 4);
    for w in losses[..4].windows(2) {
        assert!(w[1] < w[0], "held-out loss rose: {losses:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn gradient_matches_finite_differences(seed in any::<u64>(), y in any::<bool>(), l2 in 0.01f64..0.1) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bits = 8;
        let mut idx: Vec<u32> = rand::seq::index::sample(&mut rng, 1 << bits, 10).into_iter().map(|i| i as u32).collect();
        idx.sort_unstable();
        let x = HashedVector { bits, indices: idx.clone(), values: (0..10).map(|_| rng.random_range(-1.0..1.0)).collect() };
        let model = LinearModel { weights: (0..1 << bits).map(|_| rng.random_range(-0.3..0.3)).collect(), bias: rng.random_range(-0.5..0.5) };
        let (g, _) = log_loss_gradient(&model, &x, y, l2);
        let h = 1e-5;
        for j in idx {
            let j = j as usize;
            let mut p = model.clone();
            p.weights[j] += h;
            let mut m = model.clone();
            m.weights[j] -= h;
            let num = (log_loss(&p, &x, y, l2) - log_loss(&m, &x, y, l2)) / (2.0 * h);
            let denom = g[j].abs().max(num.abs());
            prop_assert!(denom == 0.0 || (g[j] - num).abs() / denom <= 1e-5);
        }
    }

    #[test]
    fn hashing_is_stable_across_hasher_instances(ids in proptest::collection::vec("[a-z]{1,12}", 1..20), bits in 4u32..20) {
        let a = FeatureHasher::new(bits, 9).unwrap();
        let b = FeatureHasher::new(bits, 9).unwrap();
        let mut v = VectorBuilder::new();
        for id in &ids {
            v.count(Family::Content, id, 1.0);
        }
        let v = v.build();
        prop_assert_eq!(a.vectorize(&v), b.vectorize(&v));
        let map: BTreeMap<&String, (u32, f64)> = ids.iter().map(|i| (i, a.hash(i))).collect();
        for (id, h) in map {
            prop_assert_eq!(b.hash(id), h);
        }
    }
}
