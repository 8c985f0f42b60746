use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The entity classes used when none are configured.
pub const DEFAULT_CLASSES: [&str; 6] = ["gene", "disease", "chemical", "species", "cell_line", "cell_type"];

pub const OUTSIDE: &str = "O";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TagSchema {
    #[default]
    Bio,
    Io,
}

impl FromStr for TagSchema {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bio" => Ok(TagSchema::Bio),
            "io" => Ok(TagSchema::Io),
            other => Err(Error::InvalidArgument(format!("unknown tag schema `{other}`"))),
        }
    }
}

impl fmt::Display for TagSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TagSchema::Bio => "bio",
            TagSchema::Io => "io",
        })
    }
}

/// Ordered label vocabulary for the multi-label tagger.
///
/// Index 0 is always `O`. Under BIO, class `i` owns `B-` at `2i+1` and `I-`
/// at `2i+2`; under IO it owns `I-` at `i+1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSpace {
    classes: Vec<String>,
    schema: TagSchema,
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl LabelSpace {
    pub fn new<S: AsRef<str>>(classes: &[S], schema: TagSchema) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::InvalidLabelSpace("class list is empty".into()));
        }
        let classes: Vec<String> = classes.iter().map(|c| c.as_ref().to_string()).collect();
        let mut labels = vec![OUTSIDE.to_string()];
        for class in &classes {
            if class.is_empty() || class.chars().any(char::is_whitespace) {
                return Err(Error::InvalidLabelSpace(format!("invalid class name `{class}`")));
            }
            if schema == TagSchema::Bio {
                labels.push(format!("B-{class}"));
            }
            labels.push(format!("I-{class}"));
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, label) in labels.iter().enumerate() {
            if index.insert(label.clone(), i).is_some() {
                return Err(Error::InvalidLabelSpace(format!("duplicate label `{label}`")));
            }
        }
        Ok(Self {
            classes,
            schema,
            labels,
            index,
        })
    }

    /// Label space over [`DEFAULT_CLASSES`].
    pub fn default_classes(schema: TagSchema) -> Self {
        Self::new(&DEFAULT_CLASSES, schema).expect("default classes are valid")
    }

    /// Rebuilds a label space from an ordered label list such as the one
    /// stored with trained parameters.
    pub fn from_labels<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        let labels: Vec<&str> = labels.iter().map(AsRef::as_ref).collect();
        let schema = if labels.iter().any(|l| l.starts_with("B-")) {
            TagSchema::Bio
        } else {
            TagSchema::Io
        };
        let classes: Vec<&str> = labels.iter().filter_map(|l| l.strip_prefix("I-")).collect();
        let space = LabelSpace::new(&classes, schema)?;
        if space.labels != labels {
            return Err(Error::InvalidLabelSpace(format!(
                "label order {labels:?} does not match the canonical layout {:?}",
                space.labels
            )));
        }
        Ok(space)
    }

    pub fn schema(&self) -> TagSchema {
        self.schema
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    /// Number of labels: `2k+1` for BIO, `k+1` for IO.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> Option<&str> {
        self.labels.get(index).map(String::as_str)
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn class_index(&self, class: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == class)
    }

    pub fn outside_index(&self) -> usize {
        0
    }

    /// `B-` row of class `i`; `None` under IO.
    pub fn begin_index(&self, class: usize) -> Option<usize> {
        match self.schema {
            TagSchema::Bio => Some(2 * class + 1),
            TagSchema::Io => None,
        }
    }

    /// `I-` row of class `i`.
    pub fn inside_index(&self, class: usize) -> usize {
        match self.schema {
            TagSchema::Bio => 2 * class + 2,
            TagSchema::Io => class + 1,
        }
    }

    /// Row index for `tag` in this space. Under IO a `B-` tag maps onto the
    /// class's `I-` row.
    pub fn tag_index(&self, tag: &Tag) -> Result<usize> {
        let class_of = |c: &str| self.class_index(c).ok_or_else(|| Error::UnknownClass(c.to_string()));
        match tag {
            Tag::Outside => Ok(0),
            Tag::Begin(c) => {
                let i = class_of(c)?;
                Ok(self.begin_index(i).unwrap_or_else(|| self.inside_index(i)))
            }
            Tag::Inside(c) => Ok(self.inside_index(class_of(c)?)),
        }
    }
}

/// A single-label sequence tag.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tag {
    Outside,
    Begin(String),
    Inside(String),
}

impl Tag {
    pub fn class(&self) -> Option<&str> {
        match self {
            Tag::Outside => None,
            Tag::Begin(c) | Tag::Inside(c) => Some(c),
        }
    }

    /// This tag if it belongs to `class`, otherwise `O`.
    pub fn restricted_to(&self, class: &str) -> Tag {
        if self.class() == Some(class) {
            self.clone()
        } else {
            Tag::Outside
        }
    }
}

impl FromStr for Tag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == OUTSIDE {
            return Ok(Tag::Outside);
        }
        match s.split_once('-') {
            Some(("B", c)) if !c.is_empty() => Ok(Tag::Begin(c.to_string())),
            Some(("I", c)) if !c.is_empty() => Ok(Tag::Inside(c.to_string())),
            _ => Err(Error::UnknownTag(s.to_string())),
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::Outside => f.write_str(OUTSIDE),
            Tag::Begin(c) => write!(f, "B-{c}"),
            Tag::Inside(c) => write!(f, "I-{c}"),
        }
    }
}

pub fn parse_tags<S: AsRef<str>>(tags: &[S]) -> Result<Vec<Tag>> {
    tags.iter().map(|t| t.as_ref().parse()).collect()
}

/// A tagged chunk over token indices, `end` inclusive.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Chunk {
    pub class: String,
    pub start: usize,
    pub end: usize,
}

/// Extracts chunks with the conlleval rules: a chunk starts at `B-x`, or at
/// `I-x` whose predecessor is `O` or of another class; it ends before `O`,
/// any `B-`, a different class, or the end of the sequence.
pub fn chunks(tags: &[Tag]) -> Vec<Chunk> {
    let mut out = Vec::new();
    let mut open: Option<(&str, usize)> = None;
    for (i, tag) in tags.iter().enumerate() {
        let continues = match (open, tag) {
            (Some((class, _)), Tag::Inside(c)) => c == class,
            _ => false,
        };
        if continues {
            continue;
        }
        if let Some((class, start)) = open.take() {
            out.push(Chunk {
                class: class.to_string(),
                start,
                end: i - 1,
            });
        }
        if let Tag::Begin(c) | Tag::Inside(c) = tag {
            open = Some((c.as_str(), i));
        }
    }
    if let Some((class, start)) = open {
        out.push(Chunk {
            class: class.to_string(),
            start,
            end: tags.len() - 1,
        });
    }
    out
}
