//! Token-per-line tag files and the JSON-lines probability file.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tagio::codec::ProbMatrix;

/// One sentence of a CoNLL-style file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConllSentence {
    pub tokens: Vec<String>,
    pub tags: Vec<String>,
}

impl ConllSentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Parses `token<TAB>tag` lines (runs of spaces are accepted in place of
/// the tab). Blank lines separate sentences.
pub fn parse_conll<R: BufRead>(reader: R) -> Result<Vec<ConllSentence>> {
    let mut sentences = Vec::new();
    let mut current = ConllSentence {
        tokens: Vec::new(),
        tags: Vec::new(),
    };
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            if !current.is_empty() {
                sentences.push(std::mem::replace(
                    &mut current,
                    ConllSentence {
                        tokens: Vec::new(),
                        tags: Vec::new(),
                    },
                ));
            }
            continue;
        }
        let (token, tag) = split_line(line).ok_or_else(|| Error::Malformed {
            line: i + 1,
            message: format!("expected `token<TAB>tag`, got `{line}`"),
        })?;
        current.tokens.push(token.to_string());
        current.tags.push(tag.to_string());
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    Ok(sentences)
}

fn split_line(line: &str) -> Option<(&str, &str)> {
    let (token, tag) = match line.split_once('\t') {
        Some((token, tag)) => (token, tag),
        None => {
            let mut fields = line.split_whitespace();
            let token = fields.next()?;
            let tag = fields.next()?;
            if fields.next().is_some() {
                return None;
            }
            (token, tag)
        }
    };
    let tag = tag.trim();
    if token.is_empty() || tag.is_empty() || tag.contains(char::is_whitespace) {
        return None;
    }
    Some((token, tag))
}

/// Writes sentences in normalized form: one TAB separator per line and a
/// blank line after every sentence.
pub fn write_conll<W: Write>(mut writer: W, sentences: &[ConllSentence]) -> Result<()> {
    for sentence in sentences {
        if sentence.tokens.len() != sentence.tags.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} tags", sentence.tokens.len()),
                actual: format!("{} tags", sentence.tags.len()),
            });
        }
        for (token, tag) in sentence.tokens.iter().zip(&sentence.tags) {
            writeln!(writer, "{token}\t{tag}")?;
        }
        writeln!(writer)?;
    }
    Ok(())
}

/// One line of a probability file: tokens and their label vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbRecord {
    pub tokens: Vec<String>,
    pub probs: Vec<Vec<f64>>,
}

impl ProbRecord {
    pub fn new(tokens: Vec<String>, matrix: &ProbMatrix) -> Self {
        Self {
            tokens,
            probs: matrix.to_rows(),
        }
    }

    pub fn matrix(&self, labels: usize) -> Result<ProbMatrix> {
        if self.probs.len() != self.tokens.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} probability vectors", self.tokens.len()),
                actual: format!("{}", self.probs.len()),
            });
        }
        ProbMatrix::from_rows(&self.probs, labels)
    }
}

pub fn read_prob_records<R: BufRead>(reader: R) -> Result<Vec<ProbRecord>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| Error::Malformed {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

pub fn write_prob_records<W: Write>(mut writer: W, records: &[ProbRecord]) -> Result<()> {
    for record in records {
        serde_json::to_writer(&mut writer, record)?;
        writeln!(writer)?;
    }
    Ok(())
}
