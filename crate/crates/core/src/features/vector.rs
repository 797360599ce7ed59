use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Feature families; every feature id starts with `<family>/`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    Content,
    Address,
    Behavioral,
    Burst,
    Folder,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Content,
        Family::Address,
        Family::Behavioral,
        Family::Burst,
        Family::Folder,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Content => "content",
            Family::Address => "address",
            Family::Behavioral => "behavioral",
            Family::Burst => "burst",
            Family::Folder => "folder",
        }
    }

    /// Family of a feature id, from its prefix.
    pub fn of(id: &str) -> Option<Family> {
        id.split_once('/').and_then(|(f, _)| f.parse().ok())
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown feature family {s:?}")))
    }
}

/// How a raw value is normalized: counts go through `ln(1+x)`, ratios and
/// indicators are already in `[0,1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    Count,
    Ratio,
    Indicator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Feature {
    pub id: String,
    pub kind: ValueKind,
    pub value: f64,
}

impl Feature {
    pub fn family(&self) -> Option<Family> {
        Family::of(&self.id)
    }
}

/// Sparse feature vector, sorted by id with no duplicates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureVector {
    features: Vec<Feature>,
    normalized: bool,
}

impl FeatureVector {
    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.features
            .binary_search_by(|f| f.id.as_str().cmp(id))
            .ok()
            .map(|i| self.features[i].value)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.features.iter().map(|f| (f.id.as_str(), f.value))
    }

    /// Maps counts through `ln(1+x)`; fails on an already normalized vector.
    pub fn normalize(&self) -> Result<FeatureVector> {
        if self.normalized {
            return Err(Error::AlreadyNormalized);
        }
        let features = self
            .features
            .iter()
            .map(|f| Feature {
                id: f.id.clone(),
                kind: f.kind,
                value: match f.kind {
                    ValueKind::Count => f.value.ln_1p(),
                    ValueKind::Ratio | ValueKind::Indicator => f.value,
                },
            })
            .collect();
        Ok(FeatureVector { features, normalized: true })
    }

    pub fn into_normalized(self) -> Result<FeatureVector> {
        self.normalize()
    }

    /// Keeps the features accepted by `keep`.
    pub fn filtered(&self, mut keep: impl FnMut(&Feature) -> bool) -> FeatureVector {
        FeatureVector {
            features: self.features.iter().filter(|f| keep(f)).cloned().collect(),
            normalized: self.normalized,
        }
    }

    /// `id:value` pairs separated by spaces.
    pub fn dump(&self) -> String {
        self.features
            .iter()
            .map(|f| format!("{}:{}", f.id, f.value))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Accumulates features; repeated ids add up.
#[derive(Debug, Default)]
pub struct VectorBuilder {
    items: BTreeMap<String, (ValueKind, f64)>,
}

impl VectorBuilder {
    pub fn new() -> Self {
        VectorBuilder::default()
    }

    pub fn add(&mut self, family: Family, name: &str, kind: ValueKind, value: f64) {
        let id = format!("{}/{}", family.as_str(), name);
        let entry = self.items.entry(id).or_insert((kind, 0.0));
        entry.1 += value;
    }

    pub fn count(&mut self, family: Family, name: &str, value: f64) {
        self.add(family, name, ValueKind::Count, value);
    }

    pub fn ratio(&mut self, family: Family, name: &str, value: f64) {
        self.add(family, name, ValueKind::Ratio, value);
    }

    /// Sets an indicator to 1; indicators never accumulate past 1.
    pub fn flag(&mut self, family: Family, name: &str) {
        let id = format!("{}/{}", family.as_str(), name);
        self.items.insert(id, (ValueKind::Indicator, 1.0));
    }

    pub fn build(self) -> FeatureVector {
        FeatureVector {
            features: self
                .items
                .into_iter()
                .map(|(id, (kind, value))| Feature { id, kind, value })
                .collect(),
            normalized: false,
        }
    }
}
