//! Tokenization, tag schemas, multi-label encoding/decoding and tag-file I/O.

pub mod codec;
pub mod conll;
pub mod schema;
pub mod tokenize;

pub use codec::{class_tags, conll_to_targets, decode, encode, LabelMode, ProbMatrix, TargetSequence};
pub use conll::{parse_conll, read_prob_records, write_conll, write_prob_records, ConllSentence, ProbRecord};
pub use schema::{chunks, parse_tags, Chunk, LabelSpace, Tag, TagSchema, DEFAULT_CLASSES};
pub use tokenize::{tokenize, tokens_from_words, Token};
