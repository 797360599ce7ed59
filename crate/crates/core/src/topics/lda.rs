//! Online variational Bayes for LDA.
//!
//! The global topic-word parameter `lambda` is updated after each mini-batch
//! with step size `(tau0 + t)^(-kappa)`. Per-document E-steps run in parallel;
//! their sufficient statistics are summed in document order so that results
//! do not depend on the thread count.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Gamma;
use rayon::prelude::*;
use statrs::function::gamma::digamma;

use crate::error::{Error, Result};

/// A document as `(word index, count)` pairs with distinct indices.
pub type BagOfWords = Vec<(usize, f64)>;

#[derive(Debug, Clone, PartialEq)]
pub struct LdaConfig {
    pub k: usize,
    /// Document-topic prior; `None` means `1/K`.
    pub alpha: Option<f64>,
    /// Topic-word prior; `None` means `1/K`.
    pub eta: Option<f64>,
    pub tau0: f64,
    pub kappa: f64,
    pub batch_size: usize,
    pub passes: usize,
    pub max_e_iters: usize,
    pub e_tol: f64,
    pub seed: u64,
}

impl LdaConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        LdaConfig {
            k,
            alpha: None,
            eta: None,
            tau0: 1.0,
            kappa: 0.7,
            batch_size: 64,
            passes: 20,
            max_e_iters: 100,
            e_tol: 1e-4,
            seed,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(1.0 / self.k as f64)
    }

    pub fn eta(&self) -> f64 {
        self.eta.unwrap_or(1.0 / self.k as f64)
    }

    fn validate(&self, docs: usize, vocab: usize) -> Result<()> {
        if self.k < 2 {
            return Err(Error::config("LDA needs K >= 2"));
        }
        if vocab == 0 {
            return Err(Error::EmptyInput("LDA vocabulary is empty".into()));
        }
        if self.k > docs {
            return Err(Error::config(format!("K = {} exceeds the document count {docs}", self.k)));
        }
        if self.batch_size == 0 || self.passes == 0 || self.max_e_iters == 0 {
            return Err(Error::config("batch size, passes and E-step iterations must be positive"));
        }
        if !(self.kappa > 0.5 && self.kappa <= 1.0) || self.tau0 < 0.0 {
            return Err(Error::config("learning rate needs kappa in (0.5, 1] and tau0 >= 0"));
        }
        Ok(())
    }
}

/// Variational topic-word parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Lda {
    pub k: usize,
    pub vocab_size: usize,
    pub alpha: f64,
    pub eta: f64,
    /// Row-major `K x W`.
    pub lambda: Vec<f64>,
    exp_elog_beta: Vec<f64>,
}

fn dirichlet_expectation_row(row: &[f64]) -> Vec<f64> {
    let total = digamma(row.iter().sum());
    row.iter().map(|v| digamma(*v) - total).collect()
}

impl Lda {
    pub fn from_lambda(k: usize, vocab_size: usize, alpha: f64, eta: f64, lambda: Vec<f64>) -> Result<Self> {
        if lambda.len() != k * vocab_size {
            return Err(Error::config("lambda has the wrong shape"));
        }
        let mut lda = Lda { k, vocab_size, alpha, eta, lambda, exp_elog_beta: Vec::new() };
        lda.refresh();
        Ok(lda)
    }

    fn refresh(&mut self) {
        let w = self.vocab_size;
        self.exp_elog_beta = self
            .lambda
            .chunks(w)
            .flat_map(|row| dirichlet_expectation_row(row).into_iter().map(f64::exp))
            .collect();
    }

    /// Normalized topic-word distributions, one row per topic.
    pub fn topic_word(&self) -> Vec<Vec<f64>> {
        self.lambda
            .chunks(self.vocab_size)
            .map(|row| {
                let s: f64 = row.iter().sum();
                row.iter().map(|v| v / s).collect()
            })
            .collect()
    }

    /// Runs the per-document E-step; returns `gamma` and, when requested,
    /// the document's contribution to the sufficient statistics as
    /// `(word, K values)` pairs.
    fn e_step(&self, doc: &BagOfWords, max_iters: usize, tol: f64, want_stats: bool) -> (Vec<f64>, Vec<(usize, Vec<f64>)>) {
        let k = self.k;
        let w = self.vocab_size;
        if doc.is_empty() {
            return (vec![self.alpha; k], Vec::new());
        }
        let total: f64 = doc.iter().map(|(_, c)| c).sum();
        let mut gamma = vec![self.alpha + total / k as f64; k];
        // expElogbeta restricted to the document's words, word-major.
        let eb: Vec<f64> = doc
            .iter()
            .flat_map(|(id, _)| (0..k).map(move |t| (t, *id)))
            .map(|(t, id)| self.exp_elog_beta[t * w + id])
            .collect();
        let mut et = exp_dirichlet_expectation(&gamma);
        let mut phinorm = vec![0.0; doc.len()];
        let compute_phinorm = |et: &[f64], phinorm: &mut [f64]| {
            for (j, p) in phinorm.iter_mut().enumerate() {
                let col = &eb[j * k..(j + 1) * k];
                *p = col.iter().zip(et).map(|(a, b)| a * b).sum::<f64>() + 1e-100;
            }
        };
        compute_phinorm(&et, &mut phinorm);
        for _ in 0..max_iters {
            let last = gamma.clone();
            let mut acc = vec![0.0; k];
            for (j, (_, c)) in doc.iter().enumerate() {
                let r = c / phinorm[j];
                let col = &eb[j * k..(j + 1) * k];
                for t in 0..k {
                    acc[t] += r * col[t];
                }
            }
            for t in 0..k {
                gamma[t] = self.alpha + et[t] * acc[t];
            }
            et = exp_dirichlet_expectation(&gamma);
            compute_phinorm(&et, &mut phinorm);
            let change: f64 = gamma.iter().zip(&last).map(|(a, b)| (a - b).abs()).sum::<f64>() / k as f64;
            if change < tol {
                break;
            }
        }
        let stats = if want_stats {
            doc.iter()
                .enumerate()
                .map(|(j, (id, c))| {
                    let r = c / phinorm[j];
                    let col = &eb[j * k..(j + 1) * k];
                    (*id, (0..k).map(|t| et[t] * r * col[t]).collect())
                })
                .collect()
        } else {
            Vec::new()
        };
        (gamma, stats)
    }

    /// Topic mixture of a document under the frozen topic-word parameters.
    pub fn infer(&self, doc: &BagOfWords, max_iters: usize, tol: f64) -> Vec<f64> {
        let (gamma, _) = self.e_step(doc, max_iters, tol, false);
        normalize(gamma)
    }
}

fn exp_dirichlet_expectation(v: &[f64]) -> Vec<f64> {
    dirichlet_expectation_row(v).into_iter().map(f64::exp).collect()
}

pub fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        for x in &mut v {
            *x /= s;
        }
    }
    v
}

/// Trains LDA over `docs` (word indices below `vocab_size`). Identical inputs
/// and seed give an identical model.
pub fn train_online_lda(docs: &[BagOfWords], vocab_size: usize, cfg: &LdaConfig) -> Result<Lda> {
    cfg.validate(docs.len(), vocab_size)?;
    if docs.iter().flatten().any(|(id, c)| *id >= vocab_size || !(*c >= 0.0)) {
        return Err(Error::config("document word index out of range or negative count"));
    }
    let k = cfg.k;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let init = Gamma::new(100.0, 0.01).expect("valid gamma parameters");
    let lambda: Vec<f64> = (0..k * vocab_size).map(|_| init.sample(&mut rng)).collect();
    let mut lda = Lda::from_lambda(k, vocab_size, cfg.alpha(), cfg.eta(), lambda)?;
    let d = docs.len() as f64;
    let mut order: Vec<usize> = (0..docs.len()).collect();
    let mut t = 0usize;
    for _ in 0..cfg.passes {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let results: Vec<Vec<(usize, Vec<f64>)>> = batch
                .par_iter()
                .map(|&i| lda.e_step(&docs[i], cfg.max_e_iters, cfg.e_tol, true).1)
                .collect();
            let mut sstats = vec![0.0; k * vocab_size];
            for doc_stats in results {
                for (id, vals) in doc_stats {
                    for (topic, v) in vals.into_iter().enumerate() {
                        sstats[topic * vocab_size + id] += v;
                    }
                }
            }
            let rho = (cfg.tau0 + t as f64).powf(-cfg.kappa);
            let scale = d / batch.len() as f64;
            for (l, s) in lda.lambda.iter_mut().zip(&sstats) {
                *l = (1.0 - rho) * *l + rho * (cfg.eta() + scale * s);
            }
            lda.refresh();
            t += 1;
        }
    }
    Ok(lda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn planted(seed: u64, docs: usize) -> (Vec<BagOfWords>, usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vocab = 40;
        let out = (0..docs)
            .map(|i| {
                let pool = (i % 2) * 20;
                let mut counts = vec![0.0; vocab];
                for _ in 0..60 {
                    counts[pool + rng.random_range(0..20)] += 1.0;
                }
                counts.into_iter().enumerate().filter(|(_, c)| *c > 0.0).collect()
            })
            .collect();
        (out, vocab)
    }

    #[test]
    fn rows_and_mixtures_are_distributions() {
        let (docs, v) = planted(1, 20);
        let lda = train_online_lda(&docs, v, &LdaConfig::new(2, 3)).unwrap();
        for row in lda.topic_word() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            assert!(row.iter().all(|x| *x >= 0.0));
        }
        for d in &docs {
            let m = lda.infer(d, 100, 1e-6);
            assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn seeded_training_is_deterministic() {
        let (docs, v) = planted(2, 20);
        let a = train_online_lda(&docs, v, &LdaConfig::new(2, 9)).unwrap();
        let b = train_online_lda(&docs, v, &LdaConfig::new(2, 9)).unwrap();
        assert_eq!(a.lambda, b.lambda);
    }

    #[test]
    fn separates_two_pools() {
        let (docs, v) = planted(3, 20);
        let lda = train_online_lda(&docs, v, &LdaConfig::new(2, 5)).unwrap();
        let m0 = lda.infer(&docs[0], 100, 1e-6);
        let m1 = lda.infer(&docs[1], 100, 1e-6);
        let t0 = if m0[0] > m0[1] { 0 } else { 1 };
        assert!(m0[t0] >= 0.8);
        assert!(m1[1 - t0] >= 0.8);
    }

    #[test]
    fn empty_document_gets_prior() {
        let (docs, v) = planted(4, 10);
        let lda = train_online_lda(&docs, v, &LdaConfig::new(2, 1)).unwrap();
        assert_eq!(lda.infer(&Vec::new(), 100, 1e-6), vec![0.5, 0.5]);
    }

    #[test]
    fn invalid_configs() {
        let (docs, v) = planted(5, 3);
        assert!(train_online_lda(&docs, v, &LdaConfig::new(1, 1)).is_err());
        assert!(train_online_lda(&docs, v, &LdaConfig::new(4, 1)).is_err());
        assert!(train_online_lda(&docs, 0, &LdaConfig::new(2, 1)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn normalization_holds_for_random_corpora(
            docs in prop::collection::vec(prop::collection::btree_map(0usize..15, 1u32..6, 0..8), 2..8),
            seed in any::<u64>(),
        ) {
            let docs: Vec<BagOfWords> = docs
                .into_iter()
                .map(|d| d.into_iter().map(|(w, c)| (w, c as f64)).collect())
                .collect();
            let mut cfg = LdaConfig::new(2, seed);
            cfg.passes = 3;
            let lda = train_online_lda(&docs, 15, &cfg).unwrap();
            for row in lda.topic_word() {
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            }
            for d in &docs {
                let m = lda.infer(d, 50, 1e-6);
                prop_assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-6);
                prop_assert!(m.iter().all(|x| *x >= 0.0));
            }
        }
    }
}
