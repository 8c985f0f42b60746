//! Datasource ingestion into a synonym vocabulary, and dictionary NER.
//!
//! Term records (JSON lines or TSV) are turned into normalized token
//! sequences and stored in a token trie. Tagging scans the tokenized text
//! once; at each position the trie is walked as far as the text allows, so
//! the cost is `O(n · m)` for `n` tokens and longest synonym length `m`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::BufRead;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{char_slice, Entity, SkippedLine};
use crate::tagio::tokenize;

pub const DICTIONARY_SOURCE: &str = "dictionary";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OntologyTerm {
    pub term_id: String,
    pub default_label: String,
    #[serde(default)]
    pub synonyms: Vec<String>,
    #[serde(rename = "class")]
    pub entity_class: String,
}

impl OntologyTerm {
    /// Default label followed by the listed synonyms.
    pub fn all_synonyms(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.default_label.as_str()).chain(self.synonyms.iter().map(String::as_str))
    }

    fn check(&self) -> std::result::Result<(), String> {
        if self.term_id.trim().is_empty() {
            return Err("empty term_id".into());
        }
        if self.default_label.trim().is_empty() {
            return Err("empty default_label".into());
        }
        if self.entity_class.trim().is_empty() {
            return Err("empty class".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SourceFormat {
    JsonLines,
    /// `id<TAB>label<TAB>syn1|syn2<TAB>class`
    Tsv,
}

impl SourceFormat {
    /// Picks TSV for `.tsv`/`.tab` paths, JSON lines otherwise.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") | Some("tab") => SourceFormat::Tsv,
            _ => SourceFormat::JsonLines,
        }
    }
}

fn parse_tsv_line(line: &str) -> std::result::Result<OntologyTerm, String> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 4 {
        return Err(format!("expected 4 tab-separated fields, got {}", fields.len()));
    }
    Ok(OntologyTerm {
        term_id: fields[0].trim().to_string(),
        default_label: fields[1].trim().to_string(),
        synonyms: fields[2]
            .split('|')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect(),
        entity_class: fields[3].trim().to_string(),
    })
}

/// Parses term records, returning the good ones and the skipped lines.
/// A repeated `term_id` within one source is skipped.
pub fn read_terms<R: BufRead>(reader: R, format: SourceFormat) -> Result<(Vec<OntologyTerm>, Vec<SkippedLine>)> {
    let mut terms = Vec::new();
    let mut skipped = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if format == SourceFormat::Tsv && i == 0 && trimmed.starts_with("term_id\t") {
            continue;
        }
        let parsed = match format {
            SourceFormat::JsonLines => serde_json::from_str::<OntologyTerm>(trimmed).map_err(|e| e.to_string()),
            SourceFormat::Tsv => parse_tsv_line(line.trim_end_matches(['\r', '\n'])),
        }
        .and_then(|t| t.check().map(|_| t));
        match parsed {
            Ok(term) if !seen.insert(term.term_id.clone()) => skipped.push(SkippedLine {
                line: i + 1,
                message: format!("duplicate term_id `{}`", term.term_id),
            }),
            Ok(term) => terms.push(term),
            Err(message) => skipped.push(SkippedLine { line: i + 1, message }),
        }
    }
    Ok((terms, skipped))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizationPolicy {
    pub case_fold: bool,
}

impl Default for NormalizationPolicy {
    fn default() -> Self {
        NormalizationPolicy { case_fold: true }
    }
}

impl NormalizationPolicy {
    pub fn normalize_token(&self, token: &str) -> String {
        if self.case_fold {
            token.to_lowercase()
        } else {
            token.to_string()
        }
    }

    /// Tokenizes and normalizes a synonym string.
    pub fn key(&self, text: &str) -> Vec<String> {
        tokenize(text).iter().map(|t| self.normalize_token(&t.text)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TermRef {
    pub term_id: String,
    #[serde(rename = "class")]
    pub entity_class: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub source: String,
    pub terms: usize,
    pub synonyms_indexed: usize,
    pub skipped: Vec<SkippedLine>,
}

#[derive(Debug, Default, Clone)]
struct TrieNode {
    children: HashMap<String, usize>,
    classes: Vec<String>,
}

/// Normalized synonym → term references, with a token trie for matching.
#[derive(Debug, Clone)]
pub struct SynonymIndex {
    policy: NormalizationPolicy,
    entries: BTreeMap<Vec<String>, BTreeSet<TermRef>>,
    trie: Vec<TrieNode>,
}

impl PartialEq for SynonymIndex {
    fn eq(&self, other: &Self) -> bool {
        self.policy == other.policy && self.entries == other.entries
    }
}

#[derive(Serialize, Deserialize)]
struct IndexEntry {
    key: Vec<String>,
    terms: Vec<TermRef>,
}

#[derive(Serialize, Deserialize)]
struct IndexFile {
    case_fold: bool,
    entries: Vec<IndexEntry>,
}

impl SynonymIndex {
    pub fn new(policy: NormalizationPolicy) -> Self {
        SynonymIndex {
            policy,
            entries: BTreeMap::new(),
            trie: vec![TrieNode::default()],
        }
    }

    pub fn policy(&self) -> NormalizationPolicy {
        self.policy
    }

    /// Number of distinct normalized synonym keys.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup(&self, text: &str) -> Option<&BTreeSet<TermRef>> {
        self.entries.get(&self.policy.key(text))
    }

    pub fn contains_key(&self, key: &[String]) -> bool {
        self.entries.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &Vec<String>> {
        self.entries.keys()
    }

    pub fn add_term(&mut self, term: &OntologyTerm) -> usize {
        let mut added = 0;
        for synonym in term.all_synonyms() {
            let key = self.policy.key(synonym);
            if key.is_empty() {
                continue;
            }
            let refs = self.entries.entry(key.clone()).or_default();
            let fresh = refs.insert(TermRef {
                term_id: term.term_id.clone(),
                entity_class: term.entity_class.clone(),
            });
            if fresh {
                added += 1;
                self.insert_path(&key, &term.entity_class);
            }
        }
        added
    }

    fn insert_path(&mut self, key: &[String], class: &str) {
        let mut node = 0;
        for tok in key {
            node = match self.trie[node].children.get(tok) {
                Some(&next) => next,
                None => {
                    let next = self.trie.len();
                    self.trie.push(TrieNode::default());
                    self.trie[node].children.insert(tok.clone(), next);
                    next
                }
            };
        }
        let classes = &mut self.trie[node].classes;
        if let Err(pos) = classes.binary_search_by(|c| c.as_str().cmp(class)) {
            classes.insert(pos, class.to_string());
        }
    }

    /// Ingests one datasource. Malformed records are skipped and reported;
    /// an empty source logs a warning.
    pub fn ingest<R: BufRead>(&mut self, reader: R, format: SourceFormat, source: &str) -> Result<IngestReport> {
        let (terms, skipped) = read_terms(reader, format)?;
        let mut report = IngestReport {
            source: source.to_string(),
            terms: terms.len(),
            synonyms_indexed: 0,
            skipped,
        };
        for term in &terms {
            report.synonyms_indexed += self.add_term(term);
        }
        if terms.is_empty() {
            warn!("{source}: no usable term records");
        }
        if !report.skipped.is_empty() {
            warn!("{source}: skipped {} malformed record(s)", report.skipped.len());
        }
        Ok(report)
    }

    pub fn to_json(&self) -> String {
        let file = IndexFile {
            case_fold: self.policy.case_fold,
            entries: self
                .entries
                .iter()
                .map(|(k, v)| IndexEntry {
                    key: k.clone(),
                    terms: v.iter().cloned().collect(),
                })
                .collect(),
        };
        serde_json::to_string(&file).expect("index serialization is infallible")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let file: IndexFile = serde_json::from_str(json)?;
        let mut index = SynonymIndex::new(NormalizationPolicy {
            case_fold: file.case_fold,
        });
        for entry in file.entries {
            if entry.key.is_empty() {
                continue;
            }
            for term in entry.terms {
                index.insert_path(&entry.key, &term.entity_class);
                index.entries.entry(entry.key.clone()).or_default().insert(term);
            }
        }
        Ok(index)
    }

    /// Dictionary NER over `text`.
    ///
    /// Matching is leftmost-longest per class over tokens: scanning left to
    /// right, a class takes the longest synonym starting at the current
    /// position and resumes after it. Matches of different classes may
    /// overlap. Entities are ordered by start, then class.
    pub fn tag(&self, text: &str) -> Vec<Entity> {
        let tokens = tokenize(text);
        let norm: Vec<String> = tokens.iter().map(|t| self.policy.normalize_token(&t.text)).collect();
        let mut next_free: HashMap<&str, usize> = HashMap::new();
        let mut out = Vec::new();
        let mut longest: BTreeMap<&str, usize> = BTreeMap::new();
        for start in 0..tokens.len() {
            longest.clear();
            let mut node = 0;
            for (end, tok) in norm.iter().enumerate().skip(start) {
                match self.trie[node].children.get(tok) {
                    Some(&next) => node = next,
                    None => break,
                }
                for class in &self.trie[node].classes {
                    longest.insert(class.as_str(), end);
                }
            }
            for (&class, &end) in &longest {
                let free = next_free.entry(class).or_insert(0);
                if start < *free {
                    continue;
                }
                *free = end + 1;
                let (s, e) = (tokens[start].start(), tokens[end].end());
                let entity = Entity::contiguous(s, e, class, 1.0, DICTIONARY_SOURCE)
                    .expect("token spans are non-empty")
                    .with_match_text(char_slice(text, s, e));
                out.push(entity);
            }
        }
        out
    }
}

/// Dictionary NER, as a free function over a built index.
pub fn dictionary_tag(text: &str, index: &SynonymIndex) -> Vec<Entity> {
    index.tag(text)
}
