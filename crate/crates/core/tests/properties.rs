use std::collections::BTreeSet;
use std::sync::Arc;

use ndarray::Array2;
use proptest::prelude::*;

use bioner::eval::{entity_prf1, ChunkSet};
use bioner::head::{bce_loss, forward, grad, DenseHeadParams, HashFeaturizer};
use bioner::model::{Document, Entity, Section};
use bioner::ontology::{OntologyTerm, SynonymIndex};
use bioner::pipeline::{run, DictionaryStep, Pipeline, RunOptions};
use bioner::tagio::{
    class_tags, decode, encode, tokenize, LabelMode, LabelSpace, ProbMatrix, Tag, TagSchema, TargetSequence,
};
use bioner::weak::{adjacency_stats, harden, is_sampled};

const CLASSES: [&str; 3] = ["gene", "disease", "chemical"];

fn space(schema: TagSchema) -> LabelSpace {
    LabelSpace::new(&CLASSES, schema).unwrap()
}

fn schema() -> impl Strategy<Value = TagSchema> {
    prop_oneof![Just(TagSchema::Bio), Just(TagSchema::Io)]
}

fn text() -> impl Strategy<Value = String> {
    prop::collection::vec(
        prop::sample::select(vec![
            "EGFR", "binds", "IL-2", "in", "mice", ",", "p53", "(TNF)", "cells", ".",
        ]),
        1..20,
    )
    .prop_map(|w| w.join(" "))
}

/// Text plus random (class, first token, last token) picks.
fn text_with_entities() -> impl Strategy<Value = (String, Vec<(usize, usize, usize, f64)>)> {
    text().prop_flat_map(|t| {
        let n = tokenize(&t).len();
        let pick = (0..CLASSES.len(), 0..n, 0..3usize, 0.0..=1.0f64)
            .prop_map(move |(c, s, len, conf)| (c, s, (s + len).min(n - 1), conf));
        (Just(t), prop::collection::vec(pick, 0..6))
    })
}

fn entities_for(text: &str, picks: &[(usize, usize, usize, f64)]) -> Vec<Entity> {
    let tokens = tokenize(text);
    picks
        .iter()
        .map(|&(c, s, e, conf)| {
            Entity::contiguous(tokens[s].start(), tokens[e].end(), CLASSES[c], conf, "prop").unwrap()
        })
        .collect()
}

fn prob_matrix(tokens: usize, labels: usize) -> impl Strategy<Value = ProbMatrix> {
    prop::collection::vec(0.0..=1.0f64, tokens * labels)
        .prop_map(move |v| ProbMatrix::new(Array2::from_shape_vec((tokens, labels), v).unwrap()).unwrap())
}

fn tag_seq() -> impl Strategy<Value = Vec<Tag>> {
    let tag = prop_oneof![
        Just(Tag::Outside),
        prop::sample::select(CLASSES.to_vec()).prop_map(|c| Tag::Begin(c.into())),
        prop::sample::select(CLASSES.to_vec()).prop_map(|c| Tag::Inside(c.into())),
    ];
    prop::collection::vec(tag, 0..20)
}

proptest! {
    #[test]
    fn encode_shape_and_hard_values((text, picks) in text_with_entities(), schema in schema()) {
        let space = space(schema);
        let tokens = tokenize(&text);
        let entities = entities_for(&text, &picks);
        let hard = encode(&entities, &tokens, &space, LabelMode::Hard).unwrap();
        prop_assert_eq!(hard.num_tokens(), tokens.len());
        prop_assert_eq!(hard.num_labels(), space.len());
        prop_assert!(hard.is_hard());
        for row in hard.values().rows() {
            let active = row.iter().skip(1).any(|&v| v == 1.0);
            prop_assert_eq!(row[0] == 1.0, !active);
        }
        let soft = encode(&entities, &tokens, &space, LabelMode::Soft).unwrap();
        for row in soft.values().rows() {
            let max = row.iter().skip(1).fold(0.0f64, |a, &b| a.max(b));
            prop_assert!((row[0] - (1.0 - max)).abs() < 1e-12);
        }
    }

    #[test]
    fn decode_is_monotone_in_threshold(
        m in prob_matrix(6, 7),
        lo in 0.0..=1.0f64,
        delta in 0.0..=1.0f64,
    ) {
        let space = space(TagSchema::Bio);
        let hi = (lo + delta).min(1.0);
        for class in 0..CLASSES.len() {
            let at_lo = class_tags(&m, class, &space, lo).unwrap();
            let at_hi = class_tags(&m, class, &space, hi).unwrap();
            for (a, b) in at_lo.iter().zip(&at_hi) {
                prop_assert!(a.0 != Tag::Outside || b.0 == Tag::Outside);
            }
        }
    }

    #[test]
    fn bio_round_trip_without_same_class_overlap((text, picks) in text_with_entities()) {
        let space = space(TagSchema::Bio);
        let tokens = tokenize(&text);
        // keep picks that neither overlap nor touch a kept pick of the same class
        let mut kept: Vec<(usize, usize, usize, f64)> = Vec::new();
        for p in picks {
            if kept.iter().all(|k| k.0 != p.0 || p.2 + 1 < k.1 || k.2 + 1 < p.1) {
                kept.push(p);
            }
        }
        let entities = entities_for(&text, &kept);
        let targets = encode(&entities, &tokens, &space, LabelMode::Hard).unwrap();
        let decoded = decode(&ProbMatrix::new(targets.values().clone()).unwrap(), &tokens, &space, 0.5).unwrap();
        let key = |es: &[Entity]| es.iter().map(|e| (e.entity_class.clone(), e.start(), e.end())).collect::<BTreeSet<_>>();
        prop_assert_eq!(key(&decoded), key(&entities));
    }

    #[test]
    fn scores_swap_when_gold_and_prediction_swap(gold in tag_seq(), pred in tag_seq()) {
        let n = gold.len().min(pred.len());
        let (g, p) = (ChunkSet::from_tags(&gold[..n]), ChunkSet::from_tags(&pred[..n]));
        let ab = entity_prf1(&g, &p);
        let ba = entity_prf1(&p, &g);
        prop_assert_eq!(ab.per_class.len(), ba.per_class.len());
        for (class, m) in &ab.per_class {
            let r = &ba.per_class[class];
            prop_assert_eq!(m.precision, r.recall);
            prop_assert_eq!(m.recall, r.precision);
            prop_assert!((m.f1 - r.f1).abs() < 1e-15);
        }
        let perfect = entity_prf1(&g, &g);
        prop_assert!(perfect.per_class.values().all(|m| m.f1 == 1.0));
    }

    #[test]
    fn harden_is_idempotent(v in prop::collection::vec(0.0..=1.0f64, 1..10), t in 0.0..=1.0f64) {
        let once = harden(&v, t);
        prop_assert_eq!(harden(&once, t), once.clone());
        prop_assert!(once.iter().all(|&x| x == 0.0 || x == 1.0));
        prop_assert_eq!(once[0] == 1.0, once[1..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn sampling_grows_with_fraction(seed: u64, id in "[A-Z0-9]{1,12}", a in 0.0..=1.0f64, b in 0.0..=1.0f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(!is_sampled(seed, &id, lo) || is_sampled(seed, &id, hi));
        prop_assert!(is_sampled(seed, &id, 1.0));
    }

    #[test]
    fn adjacency_counts_are_ordered((text, picks) in text_with_entities()) {
        let mut section = Section::new("abstract", text.clone());
        for e in entities_for(&text, &picks) {
            section.add_entity(e).unwrap();
        }
        let s = adjacency_stats(&[Document::new("d", vec![section]).unwrap()]);
        prop_assert!(s.entities_not_io_delimitable <= s.entities_with_adjacent_same_class);
        prop_assert!(s.entities_with_adjacent_same_class <= s.total_entities);
    }

    #[test]
    fn corpus_lines_round_trip((text, picks) in text_with_entities()) {
        let mut section = Section::new("abstract", text.clone());
        for e in entities_for(&text, &picks) {
            section.add_entity(e).unwrap();
        }
        let doc = Document::new("d", vec![Section::new("title", "A title"), section]).unwrap();
        let line = doc.to_json_line();
        let back = Document::from_json_line(&line).unwrap();
        prop_assert_eq!(back.to_json_line(), line);
    }

    #[test]
    fn featurizer_is_unit_norm(token in "\\PC{1,12}", dim in 1usize..64, seed: u64) {
        let f = HashFeaturizer::new(dim, seed).unwrap();
        let v = f.featurize(&token);
        prop_assert_eq!(&v, &f.featurize(&token));
        let norm = v.dot(&v).sqrt();
        // opposite-signed n-grams may cancel in every bucket
        prop_assert!((norm - 1.0).abs() < 1e-9 || norm == 0.0);
    }

    #[test]
    fn forward_is_strictly_inside_unit_interval(
        // |logit| <= 32 keeps sigmoid representable away from 0 and 1
        w in prop::collection::vec(-8.0..8.0f64, 4 * 2),
        h in prop::collection::vec(-1.0..1.0f64, 3 * 4),
    ) {
        let space = LabelSpace::new(&["gene"], TagSchema::Io).unwrap();
        let mut params = DenseHeadParams::zeros(4, &space);
        params.weights = Array2::from_shape_vec((4, 2), w).unwrap();
        let h = Array2::from_shape_vec((3, 4), h).unwrap();
        let p = forward(&h, &params).unwrap();
        prop_assert!(p.values().iter().all(|&x| x > 0.0 && x < 1.0));
    }

    #[test]
    fn zero_residual_means_zero_gradient(
        w in prop::collection::vec(-2.0..2.0f64, 3 * 3),
        h in prop::collection::vec(-1.0..1.0f64, 4 * 3),
    ) {
        let space = LabelSpace::new(&["gene"], TagSchema::Bio).unwrap();
        let mut params = DenseHeadParams::zeros(3, &space);
        params.weights = Array2::from_shape_vec((3, 3), w).unwrap();
        let h = Array2::from_shape_vec((4, 3), h).unwrap();
        let p = forward(&h, &params).unwrap();
        let targets = TargetSequence::new(p.values().clone()).unwrap();
        let g = grad(&h, &params, &targets).unwrap();
        prop_assert!(g.weights.iter().chain(g.bias.iter()).all(|x| x.abs() <= 1e-12));
        prop_assert!(bce_loss(&p, &targets).unwrap().is_finite());
    }
}

fn index() -> Arc<SynonymIndex> {
    let mut index = SynonymIndex::new(Default::default());
    for (id, label, class) in [
        ("G1", "EGFR", "gene"),
        ("G2", "IL-2", "gene"),
        ("C1", "TNF", "chemical"),
    ] {
        index.add_term(&OntologyTerm {
            term_id: id.into(),
            default_label: label.into(),
            synonyms: vec![],
            entity_class: class.into(),
        });
    }
    Arc::new(index)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pipeline_output_is_independent_of_batching(
        texts in prop::collection::vec(text(), 0..30),
        batch_size in 1usize..10,
        workers in 1usize..4,
    ) {
        let docs: Vec<Document> = texts
            .iter()
            .enumerate()
            .map(|(i, t)| Document::new(i.to_string(), vec![Section::new("abstract", t.clone())]).unwrap())
            .collect();
        let pipeline = Pipeline::new().shared(DictionaryStep::new(index()));
        let (reference, _) = run(&pipeline, docs.clone(), &RunOptions::with_batch_size(1)).unwrap();
        let options = RunOptions { batch_size, workers, guard: None };
        let (out, report) = run(&pipeline, docs, &options).unwrap();
        prop_assert_eq!(&out, &reference);
        prop_assert_eq!(report.documents_processed + report.documents_failed, report.documents_in);
    }
}
