//! Pruned vocabularies and the content, address, behavioral, burst and folder
//! feature families.

pub mod extract;
pub mod vector;
pub mod vocab;

use std::collections::BTreeSet;
use std::path::Path;

use crate::error::Result;
use crate::io::read_to_string;

pub use extract::{
    extract_burst_indicators, extract_message_features, extract_sender_features, FeatureContext,
    BODY_WORD_PREFIX, BURST_LADDER,
};
pub use vector::{Family, Feature, FeatureVector, ValueKind, VectorBuilder};
pub use vocab::{build_vocabularies, ExclusionReason, VocabConfig, VocabKind, Vocabularies, Vocabulary};

/// Words advertisers bid on; a sender address containing one is a strong
/// category hint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommercialKeywordList {
    words: Vec<String>,
}

impl CommercialKeywordList {
    /// Lowercases and deduplicates, keeping first occurrence order.
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut seen = BTreeSet::new();
        let words = words
            .into_iter()
            .map(|w| w.as_ref().trim().to_lowercase())
            .filter(|w| !w.is_empty() && seen.insert(w.clone()))
            .collect();
        CommercialKeywordList { words }
    }

    pub fn parse(text: &str) -> Self {
        CommercialKeywordList::new(crate::io::text_records(text).map(|(_, l)| l))
    }

    pub fn bundled() -> Self {
        CommercialKeywordList::parse(crate::resources::KEYWORDS)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(CommercialKeywordList::parse(&read_to_string(path)?))
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Keywords occurring as substrings of `address`.
    pub fn matches<'a>(&'a self, address: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.words
            .iter()
            .filter(move |w| address.contains(w.as_str()))
            .map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keywords_lowercase_unique() {
        let k = CommercialKeywordList::new(["Travel", "travel", " order "]);
        assert_eq!(k.words(), ["travel", "order"]);
        let bundled = CommercialKeywordList::bundled();
        let set: BTreeSet<&String> = bundled.words().iter().collect();
        assert_eq!(set.len(), bundled.words().len());
        assert!(bundled.words().iter().all(|w| *w == w.to_lowercase()));
    }

    #[test]
    fn substring_matching() {
        let k = CommercialKeywordList::new(["career", "order"]);
        let m: Vec<&str> = k.matches("careers@vailresorts.com").collect();
        assert_eq!(m, vec!["career"]);
    }
}
