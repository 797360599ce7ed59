use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::aggregation::SenderAggregates;
use crate::corpus::canonical::{canonicalize_sender, name_tokens};
use crate::error::{Error, Result};
use crate::io::{escape, parse_field, read_records, split_fields, unescape, write_file};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VocabKind {
    Content,
    AddressSubstring,
    FolderName,
}

impl VocabKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VocabKind::Content => "content",
            VocabKind::AddressSubstring => "address_substring",
            VocabKind::FolderName => "folder_name",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExclusionReason {
    StopWord,
    SystemFolder,
    TopFrequent,
    MinSenders,
}

impl ExclusionReason {
    pub fn as_str(self) -> &'static str {
        match self {
            ExclusionReason::StopWord => "stop_word",
            ExclusionReason::SystemFolder => "system_folder",
            ExclusionReason::TopFrequent => "top_frequent",
            ExclusionReason::MinSenders => "min_senders",
        }
    }
}

impl fmt::Display for ExclusionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExclusionReason {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stop_word" => Ok(ExclusionReason::StopWord),
            "system_folder" => Ok(ExclusionReason::SystemFolder),
            "top_frequent" => Ok(ExclusionReason::TopFrequent),
            "min_senders" => Ok(ExclusionReason::MinSenders),
            _ => Err(Error::config(format!("unknown exclusion reason {s:?}"))),
        }
    }
}

/// A frozen vocabulary: terms in lexicographic order with dense indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    pub kind: VocabKind,
    terms: Vec<String>,
    sender_counts: Vec<u64>,
    index: HashMap<String, usize>,
    excluded: BTreeMap<String, (ExclusionReason, u64)>,
}

impl Vocabulary {
    pub fn empty(kind: VocabKind) -> Self {
        Vocabulary::from_parts(kind, Vec::new(), BTreeMap::new())
    }

    fn from_parts(
        kind: VocabKind,
        mut included: Vec<(String, u64)>,
        excluded: BTreeMap<String, (ExclusionReason, u64)>,
    ) -> Self {
        included.sort();
        let index = included.iter().enumerate().map(|(i, (t, _))| (t.clone(), i)).collect();
        let (terms, sender_counts) = included.into_iter().unzip();
        Vocabulary { kind, terms, sender_counts, index, excluded }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn contains(&self, term: &str) -> bool {
        self.index.contains_key(term)
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, index: usize) -> &str {
        &self.terms[index]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn sender_count(&self, term: &str) -> Option<u64> {
        self.index_of(term).map(|i| self.sender_counts[i])
    }

    pub fn excluded(&self) -> &BTreeMap<String, (ExclusionReason, u64)> {
        &self.excluded
    }

    pub fn exclusion(&self, term: &str) -> Option<ExclusionReason> {
        self.excluded.get(term).map(|(r, _)| *r)
    }

    /// `term, index, sender_count` rows.
    pub fn terms_to_string(&self) -> String {
        let mut out = format!("# {} vocabulary: term\tindex\tsender_count\n", self.kind.as_str());
        for (i, (t, c)) in self.terms.iter().zip(&self.sender_counts).enumerate() {
            out.push_str(&format!("{}\t{i}\t{c}\n", escape(t)));
        }
        out
    }

    /// `term, reason, sender_count` rows.
    pub fn exclusions_to_string(&self) -> String {
        let mut out = format!("# {} exclusions: term\treason\tsender_count\n", self.kind.as_str());
        for (t, (r, c)) in &self.excluded {
            out.push_str(&format!("{}\t{r}\t{c}\n", escape(t)));
        }
        out
    }

    pub fn write(&self, terms_path: &Path, exclusions_path: &Path) -> Result<()> {
        write_file(terms_path, &self.terms_to_string())?;
        write_file(exclusions_path, &self.exclusions_to_string())
    }

    pub fn read(kind: VocabKind, terms_path: &Path, exclusions_path: Option<&Path>) -> Result<Self> {
        let mut included = Vec::new();
        for (line, rec) in read_records(terms_path)? {
            let f = split_fields(&rec, 3, line)?;
            let term = unescape(f[0]).map_err(|e| Error::parse(line, e))?;
            let idx: usize = parse_field(f[1], "index", line)?;
            if idx != included.len() {
                return Err(Error::parse(line, "vocabulary indices must be dense and ordered"));
            }
            included.push((term, parse_field(f[2], "sender_count", line)?));
        }
        let mut excluded = BTreeMap::new();
        if let Some(p) = exclusions_path {
            for (line, rec) in read_records(p)? {
                let f = split_fields(&rec, 3, line)?;
                let term = unescape(f[0]).map_err(|e| Error::parse(line, e))?;
                let reason = f[1].parse().map_err(|e: Error| Error::parse(line, e.to_string()))?;
                excluded.insert(term, (reason, parse_field(f[2], "sender_count", line)?));
            }
        }
        Ok(Vocabulary::from_parts(kind, included, excluded))
    }
}

/// Pruning thresholds. Defaults are the production-scale values; corpora of a
/// few thousand senders need [`VocabConfig::desk`].
#[derive(Debug, Clone, PartialEq)]
pub struct VocabConfig {
    pub content_top: usize,
    pub content_min_senders: u64,
    pub address_top: usize,
    pub address_min_senders: u64,
    pub folder_min_senders: u64,
    pub folder_top: usize,
    pub stopwords: BTreeSet<String>,
    /// System and third-party folder names, never part of the folder vocabulary.
    pub excluded_folders: BTreeSet<String>,
}

impl Default for VocabConfig {
    fn default() -> Self {
        let mut excluded_folders = crate::resources::system_folders();
        excluded_folders.extend(crate::resources::third_party_folders());
        VocabConfig {
            content_top: 400,
            content_min_senders: 100,
            address_top: 800,
            address_min_senders: 100,
            folder_min_senders: 100,
            folder_top: 50,
            stopwords: crate::resources::stopwords(),
            excluded_folders,
        }
    }
}

impl VocabConfig {
    pub fn desk() -> Self {
        VocabConfig {
            content_top: 10,
            content_min_senders: 5,
            address_top: 5,
            address_min_senders: 2,
            folder_min_senders: 3,
            folder_top: 0,
            ..VocabConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.content_min_senders == 0 || self.address_min_senders == 0 || self.folder_min_senders == 0 {
            return Err(Error::config("vocabulary sender floors must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabularies {
    pub content: Vocabulary,
    pub address: Vocabulary,
    pub folder: Vocabulary,
}

impl Vocabularies {
    pub fn empty() -> Self {
        Vocabularies {
            content: Vocabulary::empty(VocabKind::Content),
            address: Vocabulary::empty(VocabKind::AddressSubstring),
            folder: Vocabulary::empty(VocabKind::FolderName),
        }
    }
}

/// Address substrings of a canonical sender: name tokens and domain labels.
pub fn address_substrings(canonical: &str) -> Vec<String> {
    let Ok(c) = canonicalize_sender(canonical) else { return Vec::new() };
    let mut out: Vec<String> = name_tokens(&c.name_part).into_iter().map(String::from).collect();
    out.extend(c.domain_part.split('.').filter(|t| !t.is_empty()).map(String::from));
    out.sort();
    out.dedup();
    out
}

/// Builds the three vocabularies from sender aggregates. Term frequencies are
/// counted in distinct senders, so the result does not depend on message order.
pub fn build_vocabularies(aggs: &SenderAggregates, cfg: &VocabConfig) -> Result<Vocabularies> {
    cfg.validate()?;
    if aggs.is_empty() {
        return Err(Error::EmptyInput("no senders to build vocabularies from".into()));
    }
    let mut content: HashMap<&str, u64> = HashMap::new();
    let mut address: HashMap<String, u64> = HashMap::new();
    let mut folder: HashMap<&str, u64> = HashMap::new();
    for (key, a) in aggs {
        let mut words: BTreeSet<&str> = a.subject_tokens.keys().map(String::as_str).collect();
        words.extend(a.body_tokens.keys().map(String::as_str));
        for w in words {
            *content.entry(w).or_default() += 1;
        }
        for s in address_substrings(key) {
            *address.entry(s).or_default() += 1;
        }
        for f in a.folders.keys() {
            *folder.entry(f.as_str()).or_default() += 1;
        }
    }
    let content = prune(
        VocabKind::Content,
        content.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        &cfg.stopwords,
        ExclusionReason::StopWord,
        cfg.content_top,
        cfg.content_min_senders,
    );
    let address = prune(
        VocabKind::AddressSubstring,
        address.into_iter().collect(),
        &BTreeSet::new(),
        ExclusionReason::StopWord,
        cfg.address_top,
        cfg.address_min_senders,
    );
    let folder = prune(
        VocabKind::FolderName,
        folder.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        &cfg.excluded_folders,
        ExclusionReason::SystemFolder,
        cfg.folder_top,
        cfg.folder_min_senders,
    );
    Ok(Vocabularies { content, address, folder })
}

/// Applies the list filter, then drops the `top` most frequent remaining
/// terms (ties by term), then terms below `floor` senders.
pub fn prune(
    kind: VocabKind,
    counts: Vec<(String, u64)>,
    listed: &BTreeSet<String>,
    listed_reason: ExclusionReason,
    top: usize,
    floor: u64,
) -> Vocabulary {
    let mut excluded = BTreeMap::new();
    let mut ranked: Vec<(String, u64)> = Vec::new();
    for (t, c) in counts {
        if listed.contains(&t) {
            excluded.insert(t, (listed_reason, c));
        } else {
            ranked.push((t, c));
        }
    }
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let mut included = Vec::new();
    for (rank, (t, c)) in ranked.into_iter().enumerate() {
        if rank < top {
            excluded.insert(t, (ExclusionReason::TopFrequent, c));
        } else if c < floor {
            excluded.insert(t, (ExclusionReason::MinSenders, c));
        } else {
            included.push((t, c));
        }
    }
    Vocabulary::from_parts(kind, included, excluded)
}
