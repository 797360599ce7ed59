use std::hash::Hasher;

use fnv::FnvHasher;

use crate::error::{Error, Result};
use crate::features::FeatureVector;

/// Signed feature hashing into `2^bits` buckets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureHasher {
    pub bits: u32,
    pub seed: u64,
}

impl Default for FeatureHasher {
    fn default() -> Self {
        FeatureHasher { bits: 18, seed: 0 }
    }
}

/// Sparse vector in hashed space, sorted by index, collisions summed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HashedVector {
    pub bits: u32,
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl HashedVector {
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().map(|i| *i as usize).zip(self.values.iter().copied())
    }

    pub fn dot(&self, weights: &[f64]) -> f64 {
        self.iter().map(|(i, v)| weights[i] * v).sum()
    }

    pub fn check_bits(&self, bits: u32) -> Result<()> {
        if self.bits != bits {
            return Err(Error::HashMismatch { expected: bits, found: self.bits });
        }
        Ok(())
    }
}

impl FeatureHasher {
    pub fn new(bits: u32, seed: u64) -> Result<Self> {
        if !(1..=30).contains(&bits) {
            return Err(Error::config(format!("hash bits must be in 1..=30, got {bits}")));
        }
        Ok(FeatureHasher { bits, seed })
    }

    pub fn dim(&self) -> usize {
        1usize << self.bits
    }

    /// Bucket and sign of a feature id.
    pub fn hash(&self, id: &str) -> (u32, f64) {
        let mut h = FnvHasher::default();
        h.write_u64(self.seed);
        h.write(id.as_bytes());
        let v = h.finish();
        let index = (v & (self.dim() as u64 - 1)) as u32;
        let sign = if v >> 63 == 0 { 1.0 } else { -1.0 };
        (index, sign)
    }

    /// Hashes `v` and scales the result to unit L2 norm, so one SGD step moves
    /// the margin by at most the learning rate whatever the sender's volume.
    pub fn vectorize(&self, v: &FeatureVector) -> HashedVector {
        let mut pairs: Vec<(u32, f64)> = v
            .iter()
            .map(|(id, x)| {
                let (i, s) = self.hash(id);
                (i, s * x)
            })
            .collect();
        pairs.sort_by_key(|p| p.0);
        let mut out = HashedVector { bits: self.bits, indices: Vec::with_capacity(pairs.len()), values: Vec::with_capacity(pairs.len()) };
        for (i, x) in pairs {
            if out.indices.last() == Some(&i) {
                *out.values.last_mut().expect("parallel vectors") += x;
            } else {
                out.indices.push(i);
                out.values.push(x);
            }
        }
        let norm = out.values.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            out.values.iter_mut().for_each(|x| *x /= norm);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{Family, VectorBuilder};
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn hashing_is_deterministic(id in "[a-z/:]{1,30}", bits in 4u32..20, seed in any::<u64>()) {
            let h = FeatureHasher::new(bits, seed).unwrap();
            let a = h.hash(&id);
            let b = FeatureHasher::new(bits, seed).unwrap().hash(&id);
            prop_assert_eq!(a, b);
            prop_assert!((a.0 as usize) < h.dim());
        }
    }

    #[test]
    fn collisions_are_summed_in_order() {
        let h = FeatureHasher::new(1, 0).unwrap();
        let mut b = VectorBuilder::new();
        for i in 0..10 {
            b.count(Family::Content, &format!("w{i}"), 1.0);
        }
        let v = h.vectorize(&b.build());
        assert!(v.indices.len() <= 2);
        assert!(v.indices.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn output_has_unit_norm() {
        let h = FeatureHasher::new(12, 3).unwrap();
        let mut b = VectorBuilder::new();
        b.count(Family::Content, "deal", 40.0);
        b.ratio(Family::Behavioral, "read", 0.25);
        let v = h.vectorize(&b.build());
        assert!((v.values.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(h.vectorize(&FeatureVector::default()).values.is_empty());
    }

    #[test]
    fn bit_range_checked() {
        assert!(FeatureHasher::new(0, 0).is_err());
        assert!(FeatureHasher::new(31, 0).is_err());
    }
}
