//! Independent reference implementations used by the integration and
//! acceptance tests. None of these call into the code they check.

#![allow(dead_code)]

use std::collections::BTreeMap;

use mailcat::category::Category;
use mailcat::topics::BagOfWords;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Brute-force folder vote: for every label, add up the move counts and count
/// the distinct nonzero folders; take the largest sum (earliest name on ties)
/// and keep it only if both strict thresholds hold.
pub fn vote_oracle(
    moves: &BTreeMap<String, u64>,
    labeled: &BTreeMap<String, Category>,
    tau_v: u64,
    tau_f: usize,
) -> Option<Category> {
    let mut names: Vec<Category> = Category::ALL.to_vec();
    names.sort_by_key(|c| c.as_str());
    let mut best: Option<(Category, u64, usize)> = None;
    for y in names {
        let mut sum = 0u64;
        let mut folders = 0usize;
        for (f, c) in moves {
            if labeled.get(f) == Some(&y) && *c > 0 {
                sum += c;
                folders += 1;
            }
        }
        if sum == 0 {
            continue;
        }
        match best {
            Some((_, s, _)) if s >= sum => {}
            _ => best = Some((y, sum, folders)),
        }
    }
    let (y, sum, folders) = best?;
    if sum > tau_v && folders > tau_f {
        Some(y)
    } else {
        None
    }
}

/// Mann-Whitney AUC by counting every (positive, negative) pair; ties are
/// worth one half.
pub fn pair_auc(scores: &[(f64, bool)]) -> f64 {
    let pos: Vec<f64> = scores.iter().filter(|s| s.1).map(|s| s.0).collect();
    let neg: Vec<f64> = scores.iter().filter(|s| !s.1).map(|s| s.0).collect();
    let mut wins = 0.0;
    for p in &pos {
        for n in &neg {
            if p > n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    wins / (pos.len() * neg.len()) as f64
}

/// Collapsed Gibbs sampler for LDA. Returns the per-document topic mixtures
/// averaged over the retained samples.
pub fn gibbs_mixtures(
    docs: &[BagOfWords],
    vocab: usize,
    k: usize,
    alpha: f64,
    eta: f64,
    burn_in: usize,
    samples: usize,
    seed: u64,
) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tokens: Vec<Vec<usize>> = docs
        .iter()
        .map(|d| d.iter().flat_map(|(w, c)| std::iter::repeat_n(*w, *c as usize)).collect())
        .collect();
    let mut z: Vec<Vec<usize>> = tokens.iter().map(|t| t.iter().map(|_| rng.random_range(0..k)).collect()).collect();
    let mut ndk = vec![vec![0.0f64; k]; docs.len()];
    let mut nkw = vec![vec![0.0f64; vocab]; k];
    let mut nk = vec![0.0f64; k];
    for (d, toks) in tokens.iter().enumerate() {
        for (i, w) in toks.iter().enumerate() {
            let t = z[d][i];
            ndk[d][t] += 1.0;
            nkw[t][*w] += 1.0;
            nk[t] += 1.0;
        }
    }
    let mut acc = vec![vec![0.0f64; k]; docs.len()];
    let mut p = vec![0.0f64; k];
    for sweep in 0..burn_in + samples {
        for (d, toks) in tokens.iter().enumerate() {
            for (i, w) in toks.iter().enumerate() {
                let old = z[d][i];
                ndk[d][old] -= 1.0;
                nkw[old][*w] -= 1.0;
                nk[old] -= 1.0;
                let mut total = 0.0;
                for t in 0..k {
                    p[t] = (ndk[d][t] + alpha) * (nkw[t][*w] + eta) / (nk[t] + vocab as f64 * eta);
                    total += p[t];
                }
                let mut u = rng.random::<f64>() * total;
                let mut new = k - 1;
                for (t, pt) in p.iter().enumerate() {
                    if u < *pt {
                        new = t;
                        break;
                    }
                    u -= pt;
                }
                z[d][i] = new;
                ndk[d][new] += 1.0;
                nkw[new][*w] += 1.0;
                nk[new] += 1.0;
            }
        }
        if sweep >= burn_in {
            for d in 0..docs.len() {
                let n: f64 = ndk[d].iter().sum::<f64>() + k as f64 * alpha;
                for t in 0..k {
                    acc[d][t] += (ndk[d][t] + alpha) / n;
                }
            }
        }
    }
    for row in &mut acc {
        for v in row.iter_mut() {
            *v /= samples as f64;
        }
    }
    acc
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Planted topics over a shared vocabulary: each pool owns a disjoint block
/// of words with Zipf weights inside it. Documents draw most tokens from one
/// pool and the rest from a second.
pub struct PlantedCorpus {
    pub docs: Vec<BagOfWords>,
    pub pools: Vec<Vec<f64>>,
    pub vocab: usize,
}

impl PlantedCorpus {
    pub fn generate(seed: u64, n_docs: usize, n_pools: usize, vocab: usize, doc_len: usize, main_share: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut words: Vec<usize> = (0..vocab).collect();
        words.shuffle(&mut rng);
        let block = vocab / n_pools;
        let pools: Vec<Vec<f64>> = (0..n_pools)
            .map(|p| {
                let mut row = vec![0.0; vocab];
                let h: f64 = (1..=block).map(|r| 1.0 / r as f64).sum();
                for (r, w) in words[p * block..(p + 1) * block].iter().enumerate() {
                    row[*w] = 1.0 / ((r + 1) as f64 * h);
                }
                row
            })
            .collect();
        let cdfs: Vec<Vec<f64>> = pools
            .iter()
            .map(|row| {
                let mut acc = 0.0;
                row.iter()
                    .map(|v| {
                        acc += v;
                        acc
                    })
                    .collect()
            })
            .collect();
        let draw = |rng: &mut ChaCha8Rng, p: usize| -> usize {
            let u = rng.random::<f64>() * cdfs[p][vocab - 1];
            cdfs[p].partition_point(|c| *c <= u).min(vocab - 1)
        };
        let docs = (0..n_docs)
            .map(|i| {
                let main = i % n_pools;
                let second = (main + 1 + rng.random_range(0..n_pools - 1)) % n_pools;
                let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
                for _ in 0..doc_len {
                    let p = if rng.random::<f64>() < main_share { main } else { second };
                    *counts.entry(draw(&mut rng, p)).or_default() += 1.0;
                }
                counts.into_iter().collect()
            })
            .collect();
        PlantedCorpus { docs, pools, vocab }
    }
}

pub fn top_words(row: &[f64], n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..row.len()).collect();
    idx.sort_by(|a, b| row[*b].total_cmp(&row[*a]).then(a.cmp(b)));
    idx.truncate(n);
    idx
}

/// Best mean overlap of top-`n` word sets over every topic-to-pool matching.
pub fn best_alignment_overlap(topics: &[Vec<f64>], pools: &[Vec<f64>], n: usize) -> f64 {
    let k = topics.len();
    let tops: Vec<Vec<usize>> = topics.iter().map(|r| top_words(r, n)).collect();
    let ptops: Vec<Vec<usize>> = pools.iter().map(|r| top_words(r, n)).collect();
    let overlap = |t: usize, p: usize| tops[t].iter().filter(|w| ptops[p].contains(w)).count();
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = 0usize;
    permute(&mut perm, 0, &mut |perm| {
        let total: usize = perm.iter().enumerate().map(|(t, p)| overlap(t, *p)).sum();
        best = best.max(total);
    });
    best as f64 / k as f64
}

fn permute(v: &mut Vec<usize>, i: usize, f: &mut dyn FnMut(&[usize])) {
    if i == v.len() {
        f(v);
        return;
    }
    for j in i..v.len() {
        v.swap(i, j);
        permute(v, i + 1, f);
        v.swap(i, j);
    }
}
