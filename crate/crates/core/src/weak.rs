//! Weak-label dataset construction from an existing model's predictions.
//!
//! Documents from a prediction corpus are filtered by a doc-id blocklist,
//! subsampled by a seeded hash of the doc id, split into sentences and
//! encoded into per-token target vectors (soft confidences or hard 0/1).

use std::collections::{BTreeSet, HashSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{char_slice, read_corpus_lenient, CharSpan, Document, Entity, Section, SkippedLine};
use crate::tagio::{encode, tokenize, LabelMode, LabelSpace, Token};

const SAMPLE_BUCKETS: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakRecord {
    pub doc_id: String,
    pub tokens: Vec<String>,
    pub targets: Vec<Vec<f64>>,
    pub mode: LabelMode,
}

/// What went into a dataset and what was dropped.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Provenance {
    pub source: String,
    pub fraction: f64,
    pub seed: u64,
    pub blocklist_size: usize,
    pub documents_read: usize,
    pub documents_blocked: usize,
    pub documents_sampled_out: usize,
    pub documents_included: usize,
    pub skipped_lines: Vec<SkippedLine>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakDataset {
    pub records: Vec<WeakRecord>,
    pub mode: LabelMode,
    pub provenance: Provenance,
}

impl WeakDataset {
    pub fn write_jsonl<W: Write>(&self, mut writer: W) -> Result<()> {
        for record in &self.records {
            serde_json::to_writer(&mut writer, record)?;
            writeln!(writer)?;
        }
        Ok(())
    }

    pub fn doc_ids(&self) -> BTreeSet<&str> {
        self.records.iter().map(|r| r.doc_id.as_str()).collect()
    }
}

pub fn read_records<R: BufRead>(reader: R) -> Result<Vec<WeakRecord>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: WeakRecord = serde_json::from_str(&line).map_err(|e| Error::Malformed {
            line: i + 1,
            message: e.to_string(),
        })?;
        if record.targets.len() != record.tokens.len() {
            return Err(Error::Malformed {
                line: i + 1,
                message: format!(
                    "{} tokens but {} target vectors",
                    record.tokens.len(),
                    record.targets.len()
                ),
            });
        }
        out.push(record);
    }
    Ok(out)
}

/// One doc id per line; blank lines and surrounding whitespace ignored.
pub fn read_blocklist<R: BufRead>(reader: R) -> Result<HashSet<String>> {
    let mut out = HashSet::new();
    for line in reader.lines() {
        let line = line?;
        let id = line.trim();
        if !id.is_empty() {
            out.insert(id.to_string());
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct BuildConfig {
    pub blocklist: HashSet<String>,
    pub fraction: f64,
    pub mode: LabelMode,
    pub seed: u64,
}

impl BuildConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.fraction > 0.0 && self.fraction <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "fraction {} is outside (0, 1]",
                self.fraction
            )));
        }
        Ok(())
    }
}

/// Stable 64-bit key of `(seed, doc_id)`: the first eight bytes of
/// SHA-256 over the little-endian seed followed by the id.
pub fn sample_key(seed: u64, doc_id: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(doc_id.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// Whether `doc_id` falls inside the sampled `fraction` for `seed`.
pub fn is_sampled(seed: u64, doc_id: &str, fraction: f64) -> bool {
    ((sample_key(seed, doc_id) % SAMPLE_BUCKETS) as f64) < fraction * SAMPLE_BUCKETS as f64
}

/// Builds a dataset from a JSON-lines prediction corpus. Lines that do not
/// parse (or carry classes outside `space`) are skipped and listed in the
/// provenance.
pub fn build<R: BufRead>(reader: R, source: &str, space: &LabelSpace, config: &BuildConfig) -> Result<WeakDataset> {
    config.validate()?;
    let (docs, skipped) = read_corpus_lenient(reader)?;
    let mut dataset = build_from_documents(&docs, space, config)?;
    dataset.provenance.source = source.to_string();
    dataset.provenance.skipped_lines = skipped;
    Ok(dataset)
}

/// As [`build`], over already parsed documents. A document whose entities
/// do not fit `space` is an error.
pub fn build_from_documents(docs: &[Document], space: &LabelSpace, config: &BuildConfig) -> Result<WeakDataset> {
    config.validate()?;
    let mut provenance = Provenance {
        fraction: config.fraction,
        seed: config.seed,
        blocklist_size: config.blocklist.len(),
        documents_read: docs.len(),
        ..Provenance::default()
    };
    let mut records = Vec::new();
    for doc in docs {
        if config.blocklist.contains(&doc.doc_id) {
            provenance.documents_blocked += 1;
            continue;
        }
        if !is_sampled(config.seed, &doc.doc_id, config.fraction) {
            provenance.documents_sampled_out += 1;
            continue;
        }
        provenance.documents_included += 1;
        for section in &doc.sections {
            records.extend(section_records(&doc.doc_id, section, space, config.mode)?);
        }
    }
    Ok(WeakDataset {
        records,
        mode: config.mode,
        provenance,
    })
}

fn section_records(doc_id: &str, section: &Section, space: &LabelSpace, mode: LabelMode) -> Result<Vec<WeakRecord>> {
    let tokens = tokenize(&section.text);
    let mut out = Vec::new();
    for range in sentence_ranges(&tokens, section.entities()) {
        let sentence = &tokens[range.clone()];
        let extent = CharSpan::new(sentence[0].start(), sentence[sentence.len() - 1].end())?;
        let entities: Vec<Entity> = section
            .entities()
            .iter()
            .filter(|e| e.overlaps(&extent))
            .cloned()
            .collect();
        let targets = encode(&entities, sentence, space, mode)?;
        out.push(WeakRecord {
            doc_id: doc_id.to_string(),
            tokens: sentence.iter().map(|t| t.text.clone()).collect(),
            targets: targets.to_rows(),
            mode,
        });
    }
    Ok(out)
}

/// Splits a token sequence into sentences (token index ranges).
///
/// A sentence ends at a `.`, `!` or `?` token that is followed by
/// whitespace and then a token not starting with a lowercase letter. No
/// boundary is placed inside an entity.
pub fn sentence_ranges(tokens: &[Token], entities: &[Entity]) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 0..tokens.len() {
        let Some(next) = tokens.get(i + 1) else { break };
        let tok = &tokens[i];
        let terminal = matches!(tok.text.as_str(), "." | "!" | "?");
        let gap = next.start() > tok.end();
        let lower_next = next.text.chars().next().is_some_and(char::is_lowercase);
        if !(terminal && gap && !lower_next) {
            continue;
        }
        let inside_entity = entities.iter().any(|e| e.start() < tok.end() && e.end() > next.start());
        if inside_entity {
            continue;
        }
        out.push(start..i + 1);
        start = i + 1;
    }
    if start < tokens.len() {
        out.push(start..tokens.len());
    }
    out
}

/// Thresholds a soft label vector (`O` at index 0). `O` is recomputed so
/// that it is 1 exactly when no other element is.
pub fn harden(soft: &[f64], threshold: f64) -> Vec<f64> {
    let mut hard: Vec<f64> = soft.iter().map(|&v| if v >= threshold { 1.0 } else { 0.0 }).collect();
    if let Some((outside, rest)) = hard.split_first_mut() {
        *outside = if rest.contains(&1.0) { 0.0 } else { 1.0 };
    }
    hard
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub abstracts: usize,
    pub sentences: usize,
    pub words: usize,
    pub words_per_sentence: f64,
}

impl CorpusStats {
    fn new(abstracts: usize, sentences: usize, words: usize) -> Self {
        let words_per_sentence = if sentences == 0 {
            0.0
        } else {
            words as f64 / sentences as f64
        };
        CorpusStats {
            abstracts,
            sentences,
            words,
            words_per_sentence,
        }
    }
}

/// Statistics of a built dataset: one record is one sentence, words are
/// tokens, abstracts are distinct doc ids.
pub fn corpus_stats(records: &[WeakRecord]) -> CorpusStats {
    let abstracts = records.iter().map(|r| r.doc_id.as_str()).collect::<HashSet<_>>().len();
    let words = records.iter().map(|r| r.tokens.len()).sum();
    CorpusStats::new(abstracts, records.len(), words)
}

/// Statistics of a raw corpus, using the same sentence splitting as
/// [`build`].
pub fn document_stats(docs: &[Document]) -> CorpusStats {
    let mut sentences = 0;
    let mut words = 0;
    let ids: HashSet<&str> = docs.iter().map(|d| d.doc_id.as_str()).collect();
    for section in docs.iter().flat_map(|d| &d.sections) {
        let tokens = tokenize(&section.text);
        sentences += sentence_ranges(&tokens, section.entities()).len();
        words += tokens.len();
    }
    CorpusStats::new(ids.len(), sentences, words)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjacencyStats {
    pub total_entities: usize,
    pub entities_with_adjacent_same_class: usize,
    pub entities_not_io_delimitable: usize,
}

impl std::ops::AddAssign for AdjacencyStats {
    fn add_assign(&mut self, rhs: Self) {
        self.total_entities += rhs.total_entities;
        self.entities_with_adjacent_same_class += rhs.entities_with_adjacent_same_class;
        self.entities_not_io_delimitable += rhs.entities_not_io_delimitable;
    }
}

impl AdjacencyStats {
    /// Share of entities with no adjacent same-class entity.
    pub fn without_adjacent_ratio(&self) -> f64 {
        if self.total_entities == 0 {
            return 0.0;
        }
        (self.total_entities - self.entities_with_adjacent_same_class) as f64 / self.total_entities as f64
    }
}

/// Counts entities that touch a same-class entity.
///
/// Two same-class entities are adjacent when the second starts at or after
/// the end of the first and only whitespace or punctuation lies between.
/// They cannot be told apart under IO tagging when nothing but whitespace
/// lies between (no intervening token). Both members of a pair count.
pub fn adjacency_stats(docs: &[Document]) -> AdjacencyStats {
    let mut stats = AdjacencyStats::default();
    for section in docs.iter().flat_map(|d| &d.sections) {
        stats += section_adjacency(section);
    }
    stats
}

pub fn section_adjacency(section: &Section) -> AdjacencyStats {
    let entities = section.entities();
    let mut order: Vec<usize> = (0..entities.len()).collect();
    order.sort_by_key(|&i| {
        (
            entities[i].entity_class.as_str(),
            entities[i].start(),
            entities[i].end(),
        )
    });

    let mut adjacent = vec![false; entities.len()];
    let mut undelimitable = vec![false; entities.len()];
    for (pos, &left) in order.iter().enumerate() {
        let e = &entities[left];
        for &right in &order[pos + 1..] {
            let f = &entities[right];
            if f.entity_class != e.entity_class {
                break;
            }
            if f.start() < e.end() {
                continue;
            }
            let between = char_slice(&section.text, e.end(), f.start());
            if between.chars().any(char::is_alphanumeric) {
                // later candidates start even further right
                break;
            }
            adjacent[left] = true;
            adjacent[right] = true;
            if between.chars().all(char::is_whitespace) {
                undelimitable[left] = true;
                undelimitable[right] = true;
            }
        }
    }
    AdjacencyStats {
        total_entities: entities.len(),
        entities_with_adjacent_same_class: adjacent.iter().filter(|&&a| a).count(),
        entities_not_io_delimitable: undelimitable.iter().filter(|&&a| a).count(),
    }
}
