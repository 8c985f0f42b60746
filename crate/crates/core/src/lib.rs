//! Biomedical named-entity recognition toolkit.
//!
//! - [`model`]: documents with multi-section text, nested and non-contiguous entities
//! - [`tagio`]: tokenizer, BIO/IO label spaces, multi-label encode/decode, CoNLL I/O
//! - [`eval`]: entity-level precision/recall/F1 with per-class splitting
//! - [`weak`]: weak-label dataset construction and corpus statistics
//! - [`head`]: sigmoid classifier head with BCE loss and a hash featurizer
//! - [`ontology`]: datasource ingestion and dictionary NER
//! - [`pipeline`]: batch runner with failure isolation, memory guard and benchmarks

pub mod error;
pub mod eval;
pub mod head;
pub mod model;
pub mod ontology;
pub mod pipeline;
pub mod tagio;
pub mod weak;

pub use error::{Error, Result};
pub use model::{CharSpan, Document, Entity, Section};
