mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

use common::{adjacency_fixture, doc};

fn bioner(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bioner"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = bioner(args, dir);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str], dir: &Path) -> i32 {
    bioner(args, dir).status.code().unwrap()
}

const GOLD: &str = "EGFR\tB-gene\nbinds\tO\nTP53\tB-gene\nprotein\tI-gene\n.\tO\n\nAspirin\tB-chemical\nhelps\tO\n\n";

const GOLD_GENE: &str = "EGFR\tB-gene\nbinds\tO\nTP53\tB-gene\nprotein\tI-gene\n.\tO\n\n";

const ONTOLOGY: &str = r#"{"term_id": "HGNC:3236", "default_label": "EGFR", "synonyms": ["epidermal growth factor receptor"], "class": "gene"}
{"term_id": "MESH:D009369", "default_label": "cancer", "synonyms": ["neoplasm", "tumour"], "class": "disease"}
{"term_id": "CHEBI:49668", "default_label": "gefitinib", "synonyms": [], "class": "chemical"}
"#;

fn workspace() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("gold.conll"), GOLD).unwrap();
    fs::write(dir.path().join("g.conll"), GOLD_GENE).unwrap();
    fs::write(dir.path().join("terms.jsonl"), ONTOLOGY).unwrap();
    let docs = [
        doc(
            "1",
            "EGFR inhibition by gefitinib shrinks the tumour.",
            &[(0, 4, "gene"), (19, 28, "chemical")],
        ),
        doc("2", "Epidermal growth factor receptor and cancer.", &[]),
        doc("3", "Nothing to see here. Really.", &[]),
    ];
    let corpus: String = docs.iter().map(|d| d.to_json_line() + "\n").collect();
    fs::write(dir.path().join("corpus.jsonl"), corpus).unwrap();
    dir
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join(name)).unwrap()
}

#[test]
fn eval_on_identical_gold_and_prediction_is_perfect() {
    let dir = workspace();
    let d = dir.path();
    ok(
        &[
            "conll",
            "convert",
            "--input",
            "g.conll",
            "--output",
            "p.probs.jsonl",
            "--classes",
            "gene",
        ],
        d,
    );
    let table = ok(
        &[
            "eval",
            "--gold",
            "g.conll",
            "--pred",
            "p.probs.jsonl",
            "--classes",
            "gene",
        ],
        d,
    );
    assert!(table.contains("1.0000"), "{table}");
    let json = ok(
        &[
            "eval",
            "--gold",
            "g.conll",
            "--pred",
            "p.probs.jsonl",
            "--classes",
            "gene",
            "--format",
            "json",
        ],
        d,
    );
    let report: Value = serde_json::from_str(&json).unwrap();
    assert_eq!(report["macro_f1"], 1.0);
    assert_eq!(report["per_class"]["gene"]["f1"], 1.0);
    assert_eq!(report["per_class"]["gene"]["tp"], 2);
}

#[test]
fn usage_errors_exit_1() {
    let dir = workspace();
    let d = dir.path();
    assert_eq!(
        code(&["weak", "build", "--input", "corpus.jsonl", "--fraction", "1.5"], d),
        1
    );
    assert_eq!(
        code(&["weak", "build", "--input", "corpus.jsonl", "--fraction", "0"], d),
        1
    );
    assert_eq!(code(&["frobnicate"], d), 1);
    assert_eq!(code(&[], d), 1);
    assert_eq!(code(&["eval", "--gold", "gold.conll"], d), 1);
    assert_eq!(code(&["decode", "--input", "x", "--threshold", "1.5"], d), 1);
    assert_eq!(
        code(&["encode", "--input", "corpus.jsonl", "--classes", "gene,gene"], d),
        1
    );
    assert_eq!(code(&["encode", "--input", "corpus.jsonl", "--schema", "bilou"], d), 1);
    assert_eq!(code(&["--help"], d), 0);
    assert_eq!(code(&["weak", "--help"], d), 0);
}

#[test]
fn data_errors_exit_2() {
    let dir = workspace();
    let d = dir.path();
    fs::write(d.join("bad.conll"), "EGFR B-gene extra\n").unwrap();
    let out = bioner(&["conll", "convert", "--input", "bad.conll"], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
    assert_eq!(code(&["eval", "--gold", "missing.conll", "--pred", "gold.conll"], d), 2);
    // tags outside the label space
    assert_eq!(
        code(&["conll", "convert", "--input", "gold.conll", "--classes", "gene"], d),
        2
    );
    // gene-only prediction file scored against the default six-class space
    ok(
        &[
            "conll",
            "convert",
            "--input",
            "g.conll",
            "--output",
            "p.jsonl",
            "--classes",
            "gene",
        ],
        d,
    );
    assert_eq!(code(&["eval", "--gold", "g.conll", "--pred", "p.jsonl"], d), 2);
}

#[test]
fn adjacency_on_goldfish_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let goldfish = doc(
        "fig",
        "goldfish Carassius auratus",
        &[(0, 8, "species"), (9, 26, "species")],
    );
    fs::write(d.join("fig.jsonl"), goldfish.to_json_line() + "\n").unwrap();
    let stats: Value = serde_json::from_str(&ok(&["weak", "adjacency", "--input", "fig.jsonl"], d)).unwrap();
    assert_eq!(stats["entities_with_adjacent_same_class"], 2);
    assert_eq!(stats["entities_not_io_delimitable"], 2);

    fs::write(d.join("adj.jsonl"), adjacency_fixture().to_json_line() + "\n").unwrap();
    let stats: Value = serde_json::from_str(&ok(&["weak", "adjacency", "--input", "adj.jsonl"], d)).unwrap();
    assert_eq!(stats["total_entities"], 5);
    assert_eq!(stats["entities_with_adjacent_same_class"], 4);
    assert_eq!(stats["entities_not_io_delimitable"], 2);
}

#[test]
fn decode_then_encode_is_idempotent() {
    let dir = workspace();
    let d = dir.path();
    let classes = "gene,chemical";
    ok(
        &[
            "conll",
            "convert",
            "--input",
            "gold.conll",
            "--output",
            "p0.jsonl",
            "--classes",
            classes,
        ],
        d,
    );
    ok(
        &[
            "decode",
            "--input",
            "p0.jsonl",
            "--output",
            "d1.jsonl",
            "--classes",
            classes,
        ],
        d,
    );
    ok(
        &[
            "encode",
            "--input",
            "d1.jsonl",
            "--output",
            "p1.jsonl",
            "--classes",
            classes,
        ],
        d,
    );
    ok(
        &[
            "decode",
            "--input",
            "p1.jsonl",
            "--output",
            "d2.jsonl",
            "--classes",
            classes,
        ],
        d,
    );
    ok(
        &[
            "encode",
            "--input",
            "d2.jsonl",
            "--output",
            "p2.jsonl",
            "--classes",
            classes,
        ],
        d,
    );
    assert_eq!(read(d, "p0.jsonl"), read(d, "p1.jsonl"));
    assert_eq!(read(d, "p1.jsonl"), read(d, "p2.jsonl"));
    assert_eq!(read(d, "d1.jsonl"), read(d, "d2.jsonl"));
}

#[test]
fn dictionary_tagging_end_to_end() {
    let dir = workspace();
    let d = dir.path();
    let report = ok(
        &["ingest-ontology", "--input", "terms.jsonl", "--output", "index.json"],
        d,
    );
    let report: Value = serde_json::from_str(&report).unwrap();
    assert_eq!(report[0]["terms"], 3);
    ok(
        &[
            "tag",
            "--index",
            "index.json",
            "--input",
            "corpus.jsonl",
            "--output",
            "tagged.jsonl",
        ],
        d,
    );
    let tagged = String::from_utf8(read(d, "tagged.jsonl")).unwrap();
    let docs: Vec<Value> = tagged.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let texts = |i: usize| -> Vec<String> {
        docs[i]["sections"][0]["entities"]
            .as_array()
            .unwrap()
            .iter()
            .filter(|e| e["source"] == "dictionary")
            .map(|e| format!("{}:{}", e["class"].as_str().unwrap(), e["match_text"].as_str().unwrap()))
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect()
    };
    assert_eq!(texts(0), ["chemical:gefitinib", "disease:tumour", "gene:EGFR"]);
    assert_eq!(texts(1), ["disease:cancer", "gene:Epidermal growth factor receptor"]);
    assert!(texts(2).is_empty());
}

#[test]
fn weak_build_and_stats() {
    let dir = workspace();
    let d = dir.path();
    fs::write(d.join("block.txt"), "2\n").unwrap();
    ok(
        &[
            "weak",
            "build",
            "--input",
            "corpus.jsonl",
            "--output",
            "ds.jsonl",
            "--blocklist",
            "block.txt",
            "--provenance",
            "prov.json",
            "--mode",
            "hard",
        ],
        d,
    );
    let ds = String::from_utf8(read(d, "ds.jsonl")).unwrap();
    let ids: Vec<String> = ds
        .lines()
        .map(|l| {
            serde_json::from_str::<Value>(l).unwrap()["doc_id"]
                .as_str()
                .unwrap()
                .to_string()
        })
        .collect();
    assert_eq!(ids, ["1", "3", "3"]);
    let prov: Value = serde_json::from_slice(&read(d, "prov.json")).unwrap();
    assert_eq!(prov["documents_blocked"], 1);
    let stats: Value = serde_json::from_str(&ok(&["weak", "stats", "--input", "ds.jsonl"], d)).unwrap();
    assert_eq!(stats["abstracts"], 2);
    assert_eq!(stats["sentences"], 3);
    // EGFR inhibition by gefitinib shrinks the tumour . | Nothing to see here . | Really .
    assert_eq!(stats["words"], 8 + 5 + 2);
}

fn run_all(d: &Path) -> Vec<(String, Vec<u8>)> {
    let steps: Vec<Vec<&str>> = vec![
        vec!["ingest-ontology", "--input", "terms.jsonl", "--output", "index.json"],
        vec![
            "tag",
            "--index",
            "index.json",
            "--input",
            "corpus.jsonl",
            "--output",
            "tagged.jsonl",
            "--workers",
            "2",
        ],
        vec![
            "encode",
            "--input",
            "tagged.jsonl",
            "--output",
            "targets.jsonl",
            "--mode",
            "soft",
        ],
        vec![
            "weak",
            "build",
            "--input",
            "tagged.jsonl",
            "--output",
            "ds.jsonl",
            "--fraction",
            "0.5",
            "--seed",
            "3",
        ],
        vec!["conll", "convert", "--input", "gold.conll", "--output", "p.jsonl"],
        vec![
            "conll",
            "convert",
            "--input",
            "gold.conll",
            "--output",
            "norm.conll",
            "--to",
            "conll",
        ],
        vec!["decode", "--input", "p.jsonl", "--output", "decoded.jsonl"],
        vec![
            "train-head",
            "--input",
            "gold.conll",
            "--output",
            "head.json",
            "--dim",
            "32",
            "--epochs",
            "20",
            "--loss-trace",
            "loss.json",
        ],
        vec![
            "predict-head",
            "--model",
            "head.json",
            "--input",
            "gold.conll",
            "--output",
            "pred.jsonl",
        ],
        vec!["weak", "adjacency", "--input", "tagged.jsonl"],
    ];
    let mut outputs = Vec::new();
    for args in steps {
        let stdout = ok(&args, d);
        outputs.push((args.join(" "), stdout.into_bytes()));
    }
    for name in [
        "index.json",
        "tagged.jsonl",
        "targets.jsonl",
        "ds.jsonl",
        "p.jsonl",
        "norm.conll",
        "decoded.jsonl",
        "head.json",
        "loss.json",
        "pred.jsonl",
    ] {
        outputs.push((name.to_string(), read(d, name)));
    }
    outputs
}

#[test]
fn reruns_are_byte_identical() {
    let dir = workspace();
    let first = run_all(dir.path());
    let second = run_all(dir.path());
    for (a, b) in first.iter().zip(&second) {
        assert_eq!(a, b, "{} differs between runs", a.0);
    }
    assert_eq!(read(dir.path(), "norm.conll"), GOLD.as_bytes());
    let loss: Vec<f64> = serde_json::from_slice(&read(dir.path(), "loss.json")).unwrap();
    assert_eq!(loss.len(), 21);
    assert!((loss[0] - std::f64::consts::LN_2).abs() < 1e-12);
}

#[test]
fn bench_reports_each_batch_size() {
    let dir = workspace();
    let d = dir.path();
    ok(
        &["ingest-ontology", "--input", "terms.jsonl", "--output", "index.json"],
        d,
    );
    let config = r#"{"batch_size": 2, "steps": [
        {"name": "dictionary", "params": {"index": "index.json"}},
        {"name": "length-guard", "params": {"max_chars": 40}}
    ]}"#;
    let sub = d.join("cfg");
    fs::create_dir(&sub).unwrap();
    fs::write(sub.join("pipeline.json"), config).unwrap();
    fs::copy(d.join("index.json"), sub.join("index.json")).unwrap();
    let reports = ok(
        &[
            "bench",
            "--config",
            "cfg/pipeline.json",
            "--input",
            "corpus.jsonl",
            "--batch-size",
            "1,32",
        ],
        d,
    );
    let reports: Vec<Value> = serde_json::from_str(&reports).unwrap();
    assert_eq!(reports.len(), 2);
    assert_eq!(reports[0]["batch_size"], 1);
    assert_eq!(reports[1]["batch_size"], 32);
    for r in &reports {
        assert_eq!(r["documents_in"], 3);
        // documents 1 and 2 are longer than 40 characters
        assert_eq!(r["documents_failed"], 2);
        assert_eq!(r["steps"][1]["name"], "length-guard");
    }
    let text = ok(
        &[
            "bench",
            "--index",
            "index.json",
            "--input",
            "corpus.jsonl",
            "--format",
            "table",
        ],
        d,
    );
    assert!(text.contains("samples/s"), "{text}");
    assert_eq!(code(&["bench", "--input", "corpus.jsonl"], d), 1);
}

#[test]
fn predict_head_accepts_token_lines() {
    let dir = workspace();
    let d = dir.path();
    ok(
        &[
            "train-head",
            "--input",
            "gold.conll",
            "--output",
            "head.json",
            "--dim",
            "16",
            "--epochs",
            "5",
        ],
        d,
    );
    fs::write(d.join("tokens.jsonl"), "{\"tokens\": [\"EGFR\", \"binds\"]}\n").unwrap();
    let out = ok(&["predict-head", "--model", "head.json", "--input", "tokens.jsonl"], d);
    let record: Value = serde_json::from_str(out.lines().next().unwrap()).unwrap();
    assert_eq!(record["probs"].as_array().unwrap().len(), 2);
    assert_eq!(record["probs"][0].as_array().unwrap().len(), 13);
}
