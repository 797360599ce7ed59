use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::OnceLock;

use mailcat::aggregation::{aggregate_by_domain, aggregate_by_sender};
use mailcat::cascade::{Cascade, LightweightRules};
use mailcat::eval::{domain_of, split_by_domain, Side};
use mailcat::features::{build_vocabularies, extract_message_features, CommercialKeywordList, Family, FeatureContext};
use mailcat::models::{ModelSet, SenderTable};
use mailcat::pipeline::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

fn config() -> PipelineConfig {
    let mut cfg = PipelineConfig { seed: 21, ..Default::default() };
    cfg.synth.senders = 800;
    cfg.eval.repeats = 2;
    cfg
}

/// One full run shared by every test in this file.
fn shared_run() -> &'static TempDir {
    static RUN: OnceLock<TempDir> = OnceLock::new();
    RUN.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        run_all(&Workdir::new(dir.path()).unwrap(), &config()).unwrap();
        dir
    })
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

#[test]
fn rerunning_stages_is_byte_identical_and_keeps_inputs() {
    let src = shared_run();
    let copy = tempfile::tempdir().unwrap();
    for (name, bytes) in snapshot(src.path()) {
        std::fs::write(copy.path().join(name), bytes).unwrap();
    }
    let before = snapshot(copy.path());
    let wd = Workdir::new(copy.path()).unwrap();
    let cfg = config();
    run_aggregate(&wd).unwrap();
    run_vocab(&wd, &cfg).unwrap();
    run_lda(&wd, &cfg).unwrap();
    run_label(&wd, &cfg).unwrap();
    run_train(&wd, &cfg).unwrap();
    run_build_table(&wd, &cfg).unwrap();
    run_classify(&wd, &cfg, None).unwrap();
    run_evaluate(&wd, &cfg).unwrap();
    run_report(&wd).unwrap();
    let after = snapshot(copy.path());
    assert_eq!(before.keys().collect::<Vec<_>>(), after.keys().collect::<Vec<_>>());
    for (name, bytes) in &before {
        assert!(after[name] == *bytes, "{name} changed on rerun");
    }
}

#[test]
fn aggregate_volumes_add_up() {
    let wd = Workdir::new(shared_run().path()).unwrap();
    let messages = wd.read_corpus().unwrap();
    let aggs = wd.read_aggregates().unwrap();
    let total: u64 = aggs.values().map(|a| a.message_count).sum();
    assert_eq!(total, messages.len() as u64);
    let domains = aggregate_by_domain(&aggs).unwrap();
    assert_eq!(domains.values().map(|d| d.merged.message_count).sum::<u64>(), total);
}

#[test]
fn vocabulary_ignores_corpus_order() {
    let wd = Workdir::new(shared_run().path()).unwrap();
    let mut messages = wd.read_corpus().unwrap();
    let cfg = config().vocab_config();
    let base = build_vocabularies(&aggregate_by_sender(&messages), &cfg).unwrap();
    messages.shuffle(&mut ChaCha8Rng::seed_from_u64(4));
    let shuffled = build_vocabularies(&aggregate_by_sender(&messages), &cfg).unwrap();
    assert_eq!(base, shuffled);
}

#[test]
fn feature_ids_carry_one_family_each() {
    let wd = Workdir::new(shared_run().path()).unwrap();
    let aggs = wd.read_aggregates().unwrap();
    let vocabs = wd.read_vocabularies().unwrap();
    let kw = CommercialKeywordList::bundled();
    let ctx = FeatureContext::new(&vocabs, &kw);
    let vectors = sender_features(&aggs, &ctx).unwrap();
    let mut families = BTreeSet::new();
    for v in vectors.values() {
        let ids: BTreeSet<&str> = v.features().iter().map(|f| f.id.as_str()).collect();
        assert_eq!(ids.len(), v.len(), "duplicate feature id");
        for f in v.features() {
            families.insert(Family::of(&f.id).unwrap_or_else(|| panic!("no family for {}", f.id)));
        }
    }
    assert!(families.len() >= 4, "{families:?}");
    for m in wd.read_corpus().unwrap().iter().take(200) {
        let v = extract_message_features(m, &ctx);
        assert!(v.features().iter().all(|f| matches!(Family::of(&f.id), Some(Family::Content | Family::Address))));
    }
}

#[test]
fn split_keeps_domains_on_one_side() {
    let wd = Workdir::new(shared_run().path()).unwrap();
    let aggs = wd.read_aggregates().unwrap();
    let senders: Vec<&String> = aggs.keys().collect();
    let plan = split_by_domain(&senders, 0.65, 5, 3).unwrap();
    for r in 0..5 {
        let mut train = BTreeSet::new();
        let mut test = BTreeSet::new();
        for s in &senders {
            match plan.side(r, s).unwrap() {
                Side::Train => train.insert(domain_of(s)),
                Side::Test => test.insert(domain_of(s)),
            };
        }
        assert!(train.is_disjoint(&test), "repeat {r}");
        assert!(!train.is_empty() && !test.is_empty());
    }
}

#[test]
fn cascade_is_total_and_order_insensitive() {
    let wd = Workdir::new(shared_run().path()).unwrap();
    let messages = wd.read_corpus().unwrap();
    let vocabs = wd.read_vocabularies().unwrap();
    let kw = CommercialKeywordList::bundled();
    let ctx = FeatureContext::new(&vocabs, &kw);
    let rules = LightweightRules::read(&wd.rules()).unwrap();
    let table = SenderTable::read(&wd.sender_table()).unwrap();
    let models = ModelSet::read(&wd.message_models()).unwrap();
    let cascade = Cascade::new(&rules, &table, &models, &ctx).unwrap();
    let forward = cascade.classify_batch(&messages);
    assert_eq!(forward.decisions.len(), messages.len());
    let shares: f64 = forward.stage_shares().values().sum();
    assert!((shares - 1.0).abs() < 1e-12);
    let mut reversed = messages.clone();
    reversed.reverse();
    let backward = cascade.classify_batch(&reversed);
    let by_id: BTreeMap<&str, _> = backward.decisions.iter().map(|d| (d.id.as_str(), d)).collect();
    for d in &forward.decisions {
        assert_eq!(by_id[d.id.as_str()], d);
    }
    assert!(table.sorted().iter().all(|(_, _, p)| *p >= table.cutoff));
}

#[test]
fn coverage_is_a_distribution() {
    let text = std::fs::read_to_string(Workdir::new(shared_run().path()).unwrap().coverage()).unwrap();
    let total: f64 = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("total"))
        .map(|l| l.split('\t').nth(1).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-3, "{total}");
}

#[test]
fn later_stage_without_inputs_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let wd = Workdir::new(dir.path()).unwrap();
    let err = run_train(&wd, &config()).unwrap_err();
    assert!(!matches!(err, mailcat::Error::Config(_)), "{err}");
    assert!(std::fs::read_dir(dir.path()).unwrap().next().is_none(), "failed stage wrote output");
}
