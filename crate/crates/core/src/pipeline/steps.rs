use std::sync::Arc;

use super::{DocFailure, Step};
use crate::head::HeadTagger;
use crate::model::{char_len, Document, Entity};
use crate::ontology::{dictionary_tag, SynonymIndex};

fn add_all(doc: &mut Document, tag: impl Fn(&str) -> Result<Vec<Entity>, String>) -> Result<(), String> {
    for section in &mut doc.sections {
        for entity in tag(&section.text)? {
            section.add_entity(entity).map_err(|e| e.to_string())?;
        }
    }
    Ok(())
}

fn tag_batch(
    batch: &mut [Document],
    tag: impl Fn(&str) -> Result<Vec<Entity>, String>,
) -> Result<Vec<DocFailure>, String> {
    let mut failures = Vec::new();
    for (i, doc) in batch.iter_mut().enumerate() {
        if let Err(message) = add_all(doc, &tag) {
            failures.push(DocFailure::new(i, message));
        }
    }
    Ok(failures)
}

/// Dictionary NER over every section.
#[derive(Debug, Clone)]
pub struct DictionaryStep {
    index: Arc<SynonymIndex>,
}

impl DictionaryStep {
    pub const NAME: &'static str = "dictionary";

    pub fn new(index: Arc<SynonymIndex>) -> Self {
        DictionaryStep { index }
    }
}

impl Step for DictionaryStep {
    fn name(&self) -> &str {
        Self::NAME
    }

    fn process(&self, batch: &mut [Document]) -> Result<Vec<DocFailure>, String> {
        tag_batch(batch, |text| Ok(dictionary_tag(text, &self.index)))
    }
}

/// Token-classification head over every section.
#[derive(Debug, Clone)]
pub struct HeadStep {
    tagger: Arc<HeadTagger>,
}

impl HeadStep {
    pub const NAME: &'static str = "head";

    pub fn new(tagger: Arc<HeadTagger>) -> Self {
        HeadStep { tagger }
    }
}

impl Step for HeadStep {
    fn name(&self) -> &str {
        Self::NAME
    }

    fn process(&self, batch: &mut [Document]) -> Result<Vec<DocFailure>, String> {
        tag_batch(batch, |text| self.tagger.tag_text(text).map_err(|e| e.to_string()))
    }
}

/// Fails documents whose total text exceeds `max_chars` characters.
#[derive(Debug, Clone, Copy)]
pub struct LengthGuardStep {
    pub max_chars: usize,
}

impl LengthGuardStep {
    pub const NAME: &'static str = "length-guard";
}

impl Step for LengthGuardStep {
    fn name(&self) -> &str {
        Self::NAME
    }

    fn process(&self, batch: &mut [Document]) -> Result<Vec<DocFailure>, String> {
        Ok(batch
            .iter()
            .enumerate()
            .filter_map(|(i, doc)| {
                let n: usize = doc.sections.iter().map(|s| char_len(&s.text)).sum();
                (n > self.max_chars)
                    .then(|| DocFailure::new(i, format!("{n} characters exceeds limit {}", self.max_chars)))
            })
            .collect())
    }
}
