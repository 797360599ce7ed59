//! Word lists shipped with the crate. Every list can be replaced by a file of
//! the same shape at run time.

use std::collections::{BTreeMap, BTreeSet};

use crate::category::Category;
use crate::error::{Error, Result};
use crate::io::text_records;

pub const STOPWORDS_EN: &str = include_str!("../data/stopwords_en.txt");
pub const KEYWORDS: &str = include_str!("../data/keywords.txt");
pub const FIRST_NAMES: &str = include_str!("../data/first_names.txt");
pub const RESERVED_WORDS: &str = include_str!("../data/reserved_words.txt");
pub const SYSTEM_FOLDERS: &str = include_str!("../data/system_folders.txt");
pub const THIRD_PARTY_FOLDERS: &str = include_str!("../data/third_party_folders.txt");
pub const LABELED_FOLDERS: &str = include_str!("../data/labeled_folders.tsv");
pub const TOPIC_SEEDS: &str = include_str!("../data/topic_seeds.tsv");

/// One entry per non-comment line, lowercased and trimmed.
pub fn word_set(text: &str) -> BTreeSet<String> {
    text_records(text)
        .map(|(_, l)| l.trim().to_lowercase())
        .collect()
}

pub fn stopwords() -> BTreeSet<String> {
    word_set(STOPWORDS_EN)
}

pub fn first_names() -> BTreeSet<String> {
    word_set(FIRST_NAMES)
}

pub fn reserved_words() -> BTreeSet<String> {
    word_set(RESERVED_WORDS)
}

pub fn system_folders() -> BTreeSet<String> {
    word_set(SYSTEM_FOLDERS)
}

pub fn third_party_folders() -> BTreeSet<String> {
    word_set(THIRD_PARTY_FOLDERS)
}

/// Parses `category<TAB>word word word` lines.
pub fn parse_topic_seeds(text: &str) -> Result<BTreeMap<Category, Vec<String>>> {
    let mut out = BTreeMap::new();
    for (line, record) in text_records(text) {
        let (cat, words) = record
            .split_once('\t')
            .ok_or_else(|| Error::parse(line, "expected category<TAB>words"))?;
        let cat: Category = cat.parse().map_err(|e: Error| Error::parse(line, e.to_string()))?;
        out.insert(
            cat,
            words.split_whitespace().map(|w| w.to_lowercase()).collect(),
        );
    }
    Ok(out)
}

pub fn topic_seeds() -> BTreeMap<Category, Vec<String>> {
    parse_topic_seeds(TOPIC_SEEDS).expect("bundled topic seeds are well formed")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_lists_load() {
        assert!(stopwords().contains("the"));
        assert!(!stopwords().contains("well"));
        assert!(first_names().contains("susan"));
        assert!(reserved_words().contains("mailer-daemon"));
        assert!(system_folders().contains("trash"));
        assert_eq!(topic_seeds().len(), 7);
    }

    #[test]
    fn keyword_list_contains_named_bid_words() {
        let kw = word_set(KEYWORDS);
        for w in [
            "itinerary", "flight", "ticket", "order", "confirmation", "billing", "payslip",
            "payment", "transaction", "stocktrade", "career", "shopping", "travel",
        ] {
            assert!(kw.contains(w), "{w}");
        }
        assert!(kw.len() >= 55);
    }
}
