#![allow(dead_code)]

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bioner::model::{Document, Entity, Section};
use bioner::tagio::ConllSentence;

pub const TOY_CLASSES: [&str; 3] = ["gene", "disease", "chemical"];

/// (class, head-word suffix, continuation words)
const TOY_LEXICON: [(&str, &str, [&str; 3]); 3] = [
    ("gene", "ase", ["receptor", "protein", "factor"]),
    ("disease", "itis", ["syndrome", "disorder", "lesion"]),
    ("chemical", "ol", ["acid", "chloride", "oxide"]),
];

const FILLER_SUFFIXES: [&str; 6] = ["ed", "ing", "er", "ly", "ment", "ous"];
const FUNCTION_WORDS: [&str; 8] = ["the", "of", "in", "and", "with", "was", "by", "a"];
const CONSONANTS: &[u8] = b"bcdfghjklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

fn stem(rng: &mut ChaCha8Rng) -> String {
    let syllables = rng.random_range(1..=3);
    let mut s = String::new();
    for _ in 0..syllables {
        s.push(*CONSONANTS.choose(rng).unwrap() as char);
        s.push(*VOWELS.choose(rng).unwrap() as char);
    }
    s.push(*CONSONANTS.choose(rng).unwrap() as char);
    s
}

/// Synthetic tagged sentences in which an entity's class is fixed by the
/// suffix of its first word and by a closed set of continuation words.
pub fn toy_corpus(n: usize, seed: u64) -> Vec<ConllSentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| toy_sentence(&mut rng)).collect()
}

fn toy_sentence(rng: &mut ChaCha8Rng) -> ConllSentence {
    let mut tokens = Vec::new();
    let mut tags = Vec::new();
    let length = rng.random_range(6..=14);
    while tokens.len() < length {
        let roll: f64 = rng.random();
        if roll < 0.25 {
            let (class, suffix, continuations) = TOY_LEXICON.choose(rng).unwrap();
            tokens.push(format!("{}{suffix}", stem(rng)));
            tags.push(format!("B-{class}"));
            for _ in 0..rng.random_range(0..=2) {
                tokens.push(continuations.choose(rng).unwrap().to_string());
                tags.push(format!("I-{class}"));
            }
        } else if roll < 0.55 {
            tokens.push(FUNCTION_WORDS.choose(rng).unwrap().to_string());
            tags.push("O".into());
        } else if roll < 0.6 {
            tokens.push(",".into());
            tags.push("O".into());
        } else {
            tokens.push(format!("{}{}", stem(rng), FILLER_SUFFIXES.choose(rng).unwrap()));
            tags.push("O".into());
        }
    }
    tokens.push(".".into());
    tags.push("O".into());
    ConllSentence { tokens, tags }
}

pub fn doc(id: &str, text: &str, entities: &[(usize, usize, &str)]) -> Document {
    let mut section = Section::new("abstract", text);
    for &(s, e, c) in entities {
        section
            .add_entity(Entity::contiguous(s, e, c, 1.0, "fixture").unwrap())
            .unwrap();
    }
    Document::new(id, vec![section]).unwrap()
}

/// Two adjacent same-class pairs, one with nothing but a space between its
/// members, plus an isolated entity.
pub fn adjacency_fixture() -> Document {
    doc(
        "adj",
        "goldfish Carassius auratus were fed. Mice, rats and dogs",
        &[
            (0, 8, "species"),
            (9, 26, "species"),
            (37, 41, "species"),
            (43, 47, "species"),
            (52, 56, "species"),
        ],
    )
}
