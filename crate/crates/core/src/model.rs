//! Document data model.
//!
//! A [`Document`] holds ordered, named [`Section`]s. Each section carries its
//! own entity annotations, which may overlap each other (nested entities) and
//! may consist of several disjoint spans (non-contiguous entities). All
//! offsets are section-relative and count Unicode scalar values.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-open character range `[start, end)` measured in `char`s.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "(usize, usize)", into = "(usize, usize)")]
pub struct CharSpan {
    start: usize,
    end: usize,
}

impl CharSpan {
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if start >= end {
            return Err(Error::EmptySpan { start, end });
        }
        Ok(Self { start, end })
    }

    #[inline]
    pub fn start(&self) -> usize {
        self.start
    }

    #[inline]
    pub fn end(&self) -> usize {
        self.end
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn overlaps(&self, other: &CharSpan) -> bool {
        self.start < other.end && other.start < self.end
    }
}

impl TryFrom<(usize, usize)> for CharSpan {
    type Error = Error;

    fn try_from((start, end): (usize, usize)) -> Result<Self> {
        CharSpan::new(start, end)
    }
}

impl From<CharSpan> for (usize, usize) {
    fn from(span: CharSpan) -> Self {
        (span.start, span.end)
    }
}

/// Number of `char`s in `text`.
pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

/// Substring of `text` between two char offsets. Offsets past the end clamp.
pub fn char_slice(text: &str, start: usize, end: usize) -> &str {
    let mut indices = text.char_indices().map(|(i, _)| i).chain(std::iter::once(text.len()));
    let from = indices.nth(start).unwrap_or(text.len());
    let to = if end > start {
        indices.nth(end - start - 1).unwrap_or(text.len())
    } else {
        from
    };
    &text[from..to]
}

/// One entity mention, possibly spanning several disjoint ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entity {
    spans: Vec<CharSpan>,
    #[serde(rename = "class")]
    pub entity_class: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub match_text: String,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub source: String,
}

fn default_confidence() -> f64 {
    1.0
}

impl Entity {
    pub fn new(
        spans: Vec<CharSpan>,
        entity_class: impl Into<String>,
        confidence: f64,
        source: impl Into<String>,
    ) -> Result<Self> {
        let entity = Entity {
            spans,
            entity_class: entity_class.into(),
            match_text: String::new(),
            confidence,
            source: source.into(),
        };
        entity.validate()?;
        Ok(entity)
    }

    /// Convenience constructor for a contiguous entity.
    pub fn contiguous(
        start: usize,
        end: usize,
        entity_class: impl Into<String>,
        confidence: f64,
        source: impl Into<String>,
    ) -> Result<Self> {
        Entity::new(vec![CharSpan::new(start, end)?], entity_class, confidence, source)
    }

    pub fn with_match_text(mut self, text: impl Into<String>) -> Self {
        self.match_text = text.into();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.spans.is_empty() {
            return Err(Error::InvalidEntity("entity has no spans".into()));
        }
        for pair in self.spans.windows(2) {
            if pair[1].start < pair[0].end {
                return Err(Error::InvalidEntity(format!(
                    "spans {:?} and {:?} are unsorted or overlapping",
                    pair[0], pair[1]
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(Error::InvalidEntity(format!(
                "confidence {} is outside [0, 1]",
                self.confidence
            )));
        }
        if self.entity_class.is_empty() {
            return Err(Error::InvalidEntity("entity class is empty".into()));
        }
        Ok(())
    }

    pub fn spans(&self) -> &[CharSpan] {
        &self.spans
    }

    pub fn is_contiguous(&self) -> bool {
        self.spans.len() == 1
    }

    pub fn start(&self) -> usize {
        self.spans[0].start
    }

    pub fn end(&self) -> usize {
        self.spans[self.spans.len() - 1].end
    }

    /// True if any span of this entity overlaps `span`.
    pub fn overlaps(&self, span: &CharSpan) -> bool {
        self.spans.iter().any(|s| s.overlaps(span))
    }
}

/// A processing failure recorded against a section.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepError {
    pub step: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub name: String,
    pub text: String,
    #[serde(default)]
    entities: Vec<Entity>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<StepError>,
}

impl Section {
    pub fn new(name: impl Into<String>, text: impl Into<String>) -> Self {
        Section {
            name: name.into(),
            text: text.into(),
            entities: Vec::new(),
            errors: Vec::new(),
        }
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    /// Appends `entity`, leaving existing (possibly overlapping) entities
    /// untouched. An empty `match_text` is filled from the section text.
    pub fn add_entity(&mut self, mut entity: Entity) -> Result<()> {
        entity.validate()?;
        let len = char_len(&self.text);
        if let Some(bad) = entity.spans.iter().find(|s| s.end > len) {
            return Err(Error::SpanOutOfBounds {
                start: bad.start,
                end: bad.end,
                len,
            });
        }
        if entity.match_text.is_empty() {
            entity.match_text = entity_text(self, &entity)?;
        }
        self.entities.push(entity);
        Ok(())
    }

    pub fn clear_entities(&mut self) {
        self.entities.clear();
    }

    pub fn record_error(&mut self, step: impl Into<String>, message: impl Into<String>) {
        self.errors.push(StepError {
            step: step.into(),
            message: message.into(),
        });
    }

    fn validate(&self) -> Result<()> {
        let len = char_len(&self.text);
        for entity in &self.entities {
            entity.validate()?;
            if let Some(bad) = entity.spans.iter().find(|s| s.end > len) {
                return Err(Error::SpanOutOfBounds {
                    start: bad.start,
                    end: bad.end,
                    len,
                });
            }
        }
        Ok(())
    }
}

/// Text covered by `entity`. Non-contiguous spans are joined by one space.
pub fn entity_text(section: &Section, entity: &Entity) -> Result<String> {
    if entity.spans.is_empty() {
        return Err(Error::InvalidEntity("entity has no spans".into()));
    }
    let len = char_len(&section.text);
    let mut parts = Vec::with_capacity(entity.spans.len());
    for span in &entity.spans {
        if span.end > len {
            return Err(Error::SpanOutOfBounds {
                start: span.start,
                end: span.end,
                len,
            });
        }
        parts.push(char_slice(&section.text, span.start, span.end));
    }
    Ok(parts.join(" "))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub sections: Vec<Section>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub failed: bool,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, sections: Vec<Section>) -> Result<Self> {
        let doc = Document {
            doc_id: doc_id.into(),
            sections,
            failed: false,
        };
        doc.validate()?;
        Ok(doc)
    }

    pub fn validate(&self) -> Result<()> {
        if self.doc_id.is_empty() {
            return Err(Error::InvalidDocument("doc_id is empty".into()));
        }
        let mut names = HashSet::new();
        for section in &self.sections {
            if !names.insert(section.name.as_str()) {
                return Err(Error::InvalidDocument(format!(
                    "{}: duplicate section name `{}`",
                    self.doc_id, section.name
                )));
            }
            section.validate()?;
        }
        Ok(())
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    /// Marks the document failed and attaches the error to every section
    /// (or to a synthetic empty section when the document has none).
    pub fn mark_failed(&mut self, step: &str, message: &str) {
        self.failed = true;
        if self.sections.is_empty() {
            self.sections.push(Section::new("", ""));
        }
        for section in &mut self.sections {
            section.record_error(step, message);
        }
    }

    pub fn entity_count(&self) -> usize {
        self.sections.iter().map(|s| s.entities.len()).sum()
    }

    /// Parses one corpus line, filling in missing `match_text` values.
    pub fn from_json_line(line: &str) -> Result<Self> {
        let mut doc: Document = serde_json::from_str(line)?;
        doc.validate()?;
        for section in &mut doc.sections {
            let text = section.text.clone();
            for entity in &mut section.entities {
                if entity.match_text.is_empty() {
                    let probe = Section::new("", text.clone());
                    entity.match_text = entity_text(&probe, entity)?;
                }
            }
        }
        Ok(doc)
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("document serialization is infallible")
    }
}

/// A corpus line that could not be parsed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkippedLine {
    pub line: usize,
    pub message: String,
}

/// Reads a JSON-lines corpus, skipping blank lines. Unreadable lines are
/// returned alongside the parsed documents instead of aborting.
pub fn read_corpus_lenient<R: BufRead>(reader: R) -> Result<(Vec<Document>, Vec<SkippedLine>)> {
    let mut docs = Vec::new();
    let mut skipped = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match Document::from_json_line(&line) {
            Ok(doc) => docs.push(doc),
            Err(e) => skipped.push(SkippedLine {
                line: i + 1,
                message: e.to_string(),
            }),
        }
    }
    Ok((docs, skipped))
}

/// Reads a JSON-lines corpus; the first bad line is an error.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc = Document::from_json_line(&line).map_err(|e| Error::Malformed {
            line: i + 1,
            message: e.to_string(),
        })?;
        docs.push(doc);
    }
    Ok(docs)
}

pub fn write_corpus<W: Write>(mut writer: W, docs: &[Document]) -> Result<()> {
    for doc in docs {
        writeln!(writer, "{}", doc.to_json_line())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn span(s: usize, e: usize) -> CharSpan {
        CharSpan::new(s, e).unwrap()
    }

    #[test]
    fn nested_entities_coexist() {
        let mut section = Section::new("title", "EGFR inhibitor");
        section
            .add_entity(Entity::contiguous(0, 4, "gene", 1.0, "test").unwrap())
            .unwrap();
        section
            .add_entity(Entity::contiguous(0, 14, "chemical", 1.0, "test").unwrap())
            .unwrap();
        assert_eq!(section.entities().len(), 2);
        assert!(section.entities()[0].spans()[0].overlaps(&section.entities()[1].spans()[0]));
        assert_eq!(section.entities()[0].match_text, "EGFR");
    }

    #[test]
    fn out_of_bounds_span_is_rejected() {
        let mut section = Section::new("title", "EGFR inhibitor");
        let err = section
            .add_entity(Entity::contiguous(10, 20, "gene", 1.0, "test").unwrap())
            .unwrap_err();
        match err {
            Error::SpanOutOfBounds { start, end, len } => assert_eq!((start, end, len), (10, 20, 14)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(section.entities().is_empty());
    }

    #[test]
    fn non_contiguous_entity_text() {
        let mut section = Section::new("abstract", "left and right ventricle");
        let entity = Entity::new(vec![span(0, 4), span(15, 24)], "anatomy", 1.0, "test").unwrap();
        assert!(!entity.is_contiguous());
        assert_eq!(entity_text(&section, &entity).unwrap(), "left ventricle");
        section.add_entity(entity).unwrap();
        assert_eq!(section.entities().len(), 1);

        let egfr = Section::new("t", "EGFR inhibitor");
        let e = Entity::contiguous(0, 4, "gene", 1.0, "t").unwrap();
        assert_eq!(entity_text(&egfr, &e).unwrap(), "EGFR");
    }

    #[test]
    fn empty_span_list_is_invalid() {
        assert!(Entity::new(vec![], "gene", 1.0, "t").is_err());
        assert!(CharSpan::new(3, 3).is_err());
        assert!(Entity::new(vec![span(0, 5), span(3, 8)], "gene", 1.0, "t").is_err());
    }

    #[test]
    fn offsets_are_unicode_scalars() {
        let mut section = Section::new("t", "TGF-β signalling");
        section
            .add_entity(Entity::contiguous(0, 5, "gene", 1.0, "t").unwrap())
            .unwrap();
        assert_eq!(section.entities()[0].match_text, "TGF-β");
        assert_eq!(char_slice("αβγ", 1, 3), "βγ");
        assert_eq!(char_slice("αβγ", 2, 9), "γ");
    }

    #[test]
    fn same_span_different_classes_coexist() {
        let mut section = Section::new("t", "EGFR");
        for class in ["gene", "chemical"] {
            section
                .add_entity(Entity::contiguous(0, 4, class, 1.0, "t").unwrap())
                .unwrap();
        }
        let classes: Vec<_> = section.entities().iter().map(|e| e.entity_class.as_str()).collect();
        assert_eq!(classes, ["gene", "chemical"]);
    }

    #[test]
    fn insertion_order_is_preserved() {
        let mut section = Section::new("t", "a b c d e f g h i j");
        for i in 0..10 {
            section
                .add_entity(Entity::contiguous(2 * i, 2 * i + 1, format!("c{i}"), 1.0, "t").unwrap())
                .unwrap();
        }
        let got: Vec<_> = section.entities().iter().map(|e| e.start()).collect();
        assert_eq!(got, (0..10).map(|i| 2 * i).collect::<Vec<_>>());
    }

    #[test]
    fn document_invariants() {
        assert!(Document::new("", vec![]).is_err());
        let dup = vec![Section::new("title", "a"), Section::new("title", "b")];
        assert!(Document::new("1", dup).is_err());
    }

    #[test]
    fn corpus_line_round_trip() {
        let line = r#"{"doc_id":"123","sections":[{"name":"title","text":"EGFR inhibitor","entities":[{"spans":[[0,4]],"class":"gene","confidence":0.9}]},{"name":"abstract","text":"None."}]}"#;
        let doc = Document::from_json_line(line).unwrap();
        assert_eq!(doc.sections[0].entities()[0].match_text, "EGFR");
        assert_eq!(doc.sections[1].entities().len(), 0);
        let again = Document::from_json_line(&doc.to_json_line()).unwrap();
        assert_eq!(doc, again);
    }

    #[test]
    fn corpus_line_with_bad_span_is_rejected() {
        let line =
            r#"{"doc_id":"1","sections":[{"name":"t","text":"abc","entities":[{"spans":[[0,9]],"class":"gene"}]}]}"#;
        assert!(Document::from_json_line(line).is_err());
        let line =
            r#"{"doc_id":"1","sections":[{"name":"t","text":"abc","entities":[{"spans":[[2,1]],"class":"gene"}]}]}"#;
        assert!(Document::from_json_line(line).is_err());
    }

    #[test]
    fn lenient_reader_reports_bad_lines() {
        let input = "{\"doc_id\":\"1\",\"sections\":[]}\nnot json\n\n{\"doc_id\":\"2\",\"sections\":[]}\n";
        let (docs, skipped) = read_corpus_lenient(input.as_bytes()).unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(skipped.len(), 1);
        assert_eq!(skipped[0].line, 2);
        assert!(read_corpus(input.as_bytes()).is_err());
    }
}
