use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use apimine_cli::store::{snapshot, INDEX_FILE};
use apimine_cli::ModelStore;
use apimine_core::{ApiSequence, Corpus, ObjectKey};
use tempfile::TempDir;

fn apimine(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_apimine")).args(args).output().expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_corpus(p: &Path) -> Corpus {
    Corpus::read_jsonl(std::io::BufReader::new(std::fs::File::open(p).unwrap())).unwrap()
}

fn seq(calls: &[&str]) -> ApiSequence {
    ApiSequence::new(calls.iter().map(|c| c.to_string()).collect()).unwrap()
}

#[test]
fn extract_reader_example() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("corpus.jsonl");
    let summary = ok(&apimine(&["extract", s(&fixture("read_text_file.mir")), "-o", s(&out), "--json"]));
    let v: serde_json::Value = serde_json::from_str(&summary).unwrap();
    assert_eq!(v["analyzed"], 1);
    let c = read_corpus(&out);
    let multi = ObjectKey::new(["java.io.BufferedReader", "java.io.FileReader"]).unwrap();
    let four = seq(&[
        "java.io.FileReader.init",
        "java.io.BufferedReader.init",
        "java.io.BufferedReader.readLine",
        "java.io.BufferedReader.close",
    ]);
    assert_eq!(c.entry(&multi).unwrap().get(&four), Some(&1));
    let three = seq(&[
        "java.io.BufferedReader.init",
        "java.io.BufferedReader.readLine",
        "java.io.BufferedReader.close",
    ]);
    assert_eq!(c.entry(&ObjectKey::single("java.io.BufferedReader")).unwrap().get(&three), Some(&1));
}

#[test]
fn extract_reports_skipped_methods() {
    let dir = TempDir::new().unwrap();
    let src = dir.path().join("small.mir");
    std::fs::write(
        &src,
        ".method a.Bean.get 2 (v1:a.Bean)\n  iget v0 v1 a.Bean.x\n  return v0\n.end\n",
    )
    .unwrap();
    let out = dir.path().join("c.jsonl");
    let v: serde_json::Value =
        serde_json::from_str(&ok(&apimine(&["extract", s(&src), "-o", s(&out), "--json"]))).unwrap();
    assert_eq!(v["skipped_too_short"], 1);
    assert_eq!(v["occurrences"], 0);
    assert!(read_corpus(&out).is_empty());

    let summary = ok(&apimine(&["extract", s(&fixture("corpus/misc.mir")), "-o", s(&out), "--json"]));
    let v: serde_json::Value = serde_json::from_str(&summary).unwrap();
    assert_eq!(v["skipped_too_many_branches"], 1);
}

#[test]
fn extract_dumps_graphs() {
    let dir = TempDir::new().unwrap();
    let cfgs = dir.path().join("cfg");
    let arus = dir.path().join("arus");
    ok(&apimine(&[
        "extract",
        s(&fixture("read_text_file.mir")),
        "-o",
        s(&dir.path().join("c.jsonl")),
        "--dump-cfg",
        s(&cfgs),
        "--dump-arus",
        s(&arus),
    ]));
    let cfg = std::fs::read_to_string(cfgs.join("com.example.Notes.readTextFile.dot")).unwrap();
    assert!(cfg.starts_with("digraph"));
    let usage = std::fs::read_to_string(arus.join("com.example.Notes.readTextFile.0.dot")).unwrap();
    assert!(usage.contains("dashed"));
}

#[test]
fn parse_errors_are_input_errors() {
    let dir = TempDir::new().unwrap();
    let src = dir.path().join("bad.mir");
    std::fs::write(&src, ".method a.B.f 1 ()\n  frobnicate v0\n.end\n").unwrap();
    let out = apimine(&["extract", s(&src), "-o", s(&dir.path().join("c.jsonl"))]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.mir") && err.contains("line 2"), "{err}");
}

fn small_corpus(dir: &Path) -> PathBuf {
    let mut c = Corpus::new();
    let big = ObjectKey::single("a.B");
    c.add(big.clone(), seq(&["a.B.open", "a.B.read", "a.B.close"]), 60);
    c.add(big.clone(), seq(&["a.B.open", "a.B.close"]), 30);
    c.add(big, seq(&["a.B.open", "a.B.read", "a.B.read", "a.B.close"]), 10);
    c.add(ObjectKey::single("c.D"), seq(&["c.D.x", "c.D.y"]), 24);
    let path = dir.join("corpus.jsonl");
    let mut f = std::fs::File::create(&path).unwrap();
    c.write_jsonl(&mut f).unwrap();
    path
}

#[test]
fn train_builds_two_models_per_qualifying_key() {
    let dir = TempDir::new().unwrap();
    let corpus = small_corpus(dir.path());
    let store_dir = dir.path().join("store");
    let out = ok(&apimine(&["train", s(&corpus), "--model-store", s(&store_dir), "--k-range", "1..3", "--json"]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["trained"].as_array().unwrap().len(), 1);
    assert_eq!(v["skipped"][0][0], "c.D");
    assert_eq!(v["skipped"][0][1], 24);

    let store = ModelStore::open(&store_dir).unwrap();
    assert_eq!(store.keys(), vec![ObjectKey::single("a.B")]);
    assert_eq!(store.index().models.len(), 2);
    let entry = store.entry(&ObjectKey::single("a.B"), apimine_cli::Format::Hapi).unwrap();
    assert_eq!(entry.occurrences, 100);
    assert!((1..=3).contains(&entry.k.unwrap()));
    assert!(entry.loglik.unwrap() < 0.0);
    assert_eq!(store.index().skipped[0].occurrences, 24);

    // Same seed, same bytes.
    let again = dir.path().join("again");
    ok(&apimine(&["train", s(&corpus), "--model-store", s(&again), "--k-range", "1..3"]));
    assert_eq!(snapshot(&store_dir).unwrap(), snapshot(&again).unwrap());
}

#[test]
fn corrupt_corpus_names_the_line() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("c.jsonl");
    std::fs::write(&path, "{\"types\":[\"a.B\"],\"seq\":[\"a.B.x\",\"a.B.y\"],\"count\":2}\n{oops\n").unwrap();
    let out = apimine(&["train", s(&path), "--model-store", s(&dir.path().join("st"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn recommend_and_inspect_a_trained_store() {
    let dir = TempDir::new().unwrap();
    let corpus = small_corpus(dir.path());
    let store = dir.path().join("store");
    ok(&apimine(&["train", s(&corpus), "--model-store", s(&store), "--k-range", "2..3"]));

    let out = ok(&apimine(&[
        "recommend",
        "--model-store",
        s(&store),
        "--types",
        "a.B",
        "--seq",
        "a.B.open",
        "--json",
    ]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["hole"], 2);
    let model = ModelStore::open(&store).unwrap().hapi(&ObjectKey::single("a.B")).unwrap();
    let direct = apimine_model::next_api_call(&model, &["a.B.open"], 2).unwrap();
    let shown: Vec<(String, f64)> = v["ranked"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r["call"].as_str().unwrap().to_string(), r["score"].as_f64().unwrap()))
        .collect();
    assert_eq!(shown, direct.ranked);
    let total: f64 = v["ranked"].as_array().unwrap().iter().map(|r| r["score"].as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);

    let table = ok(&apimine(&["recommend", "--model-store", s(&store), "--types", "a.B", "--seq", "a.B.open", "--k", "1"]));
    assert_eq!(table.lines().count(), 2);

    let missing = apimine(&["recommend", "--model-store", s(&store), "--types", "x.Y", "--seq", "x.Y.z"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("no model for key x.Y"));

    let oov = apimine(&["recommend", "--model-store", s(&store), "--types", "a.B", "--seq", "a.B.nope"]);
    assert_eq!(oov.status.code(), Some(2));

    let dot = ok(&apimine(&["inspect", "--model-store", s(&store), "--types", "a.B"]));
    let visible = model.pi().iter().chain(model.trans().iter().flatten()).filter(|&&p| p >= 0.01).count();
    let edges: Vec<&str> = dot.lines().filter(|l| l.contains("->")).collect();
    assert_eq!(edges.len(), visible);
    for e in edges {
        let label = e.split("label=\"").nth(1).unwrap().trim_end_matches("\"];");
        assert!(label.parse::<f64>().unwrap() >= 0.01, "{e}");
    }
    let file = ok(&apimine(&["inspect", s(&store.join("hapi-a.B.json"))]));
    assert_eq!(file, dot);
}

#[test]
fn eval_writes_csv_for_the_bundled_corpus() {
    let dir = TempDir::new().unwrap();
    let corpus = dir.path().join("c.jsonl");
    ok(&apimine(&["extract", s(&fixture("corpus")), "-o", s(&corpus)]));
    let config = dir.path().join("fast.conf");
    std::fs::write(&config, "k_range = 1..4\nrestarts = 2\n").unwrap();
    let csv_path = dir.path().join("report.csv");
    let table = ok(&apimine(&["eval", s(&corpus), "--config", s(&config), "-o", s(&csv_path)]));
    assert!(table.contains("hapi") && table.contains("fill_hole"));
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("key,model,task,k,hits,total,accuracy,skipped\n"));
    assert!(csv.lines().any(|l| l.starts_with("ALL,hapi,next_call,1,")));
    // Stored models evaluated on the rebuilt split give the same report.
    let store = dir.path().join("store");
    ok(&apimine(&["train", s(&corpus), "--model-store", s(&store), "--config", s(&config)]));
    let stored = ok(&apimine(&["eval", s(&corpus), "--model-store", s(&store), "--config", s(&config)]));
    assert_eq!(stored, csv);
}

#[test]
fn bad_arguments_exit_with_input_status() {
    assert_eq!(apimine(&["nonsense"]).status.code(), Some(2));
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("bad.conf");
    std::fs::write(&config, "k_range = 0..0\n").unwrap();
    let out = apimine(&["--config", s(&config), "eval", "x.jsonl"]);
    assert_eq!(out.status.code(), Some(2));
    let out = apimine(&["recommend", "--model-store", s(dir.path()), "--types", "a.B"]);
    assert_eq!(out.status.code(), Some(2), "store without an index");
    assert!(!dir.path().join(INDEX_FILE).exists());
}
