//! Message records, sender canonicalization and the synthetic corpus.

pub mod canonical;
pub mod message;
pub mod synth;

pub use canonical::{canonical_address, canonicalize_sender, CanonicalSender, WILDCARD};
pub use message::{
    parse_corpus, parse_message_record, read_corpus, tokenize, write_corpus, Actions, Message,
};
pub use synth::{generate_synthetic_corpus, GroundTruth, SynthConfig, SyntheticCorpus};
