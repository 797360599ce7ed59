//! Latent-category email classification.
//!
//! The crate covers the whole offline and online pipeline: message ingestion and
//! a seeded synthetic corpus, sender aggregation, pruned vocabularies and feature
//! families, folder-document LDA, weak training-label generation, one-vs-all
//! logistic models over hashed features, the three-stage online classifier and
//! the evaluation harness.

pub mod aggregation;
pub mod cascade;
pub mod category;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod io;
pub mod labeling;
pub mod models;
pub mod pipeline;
pub mod resources;
pub mod topics;

pub use category::{Category, Label};
pub use error::{Error, Result};
