//! Acceptance gate for the pipeline binary: the bundled corpus must
//! reproduce the checked-in expected tree byte for byte, the emitted
//! Turtle must re-parse to the same triples, and the workspace contract
//! (no-op reruns, stage isolation, exit codes) must hold end to end.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use oxrdf::Triple;
use oxttl::{NTriplesParser, TurtleParser};
use serde::{Deserialize, Serialize};
use tempfile::TempDir;

/// Field-order mirrors of the manifest and harvest-log shapes, so
/// normalized re-serialization stays byte-compatible with the writer.
#[derive(Deserialize, Serialize)]
struct ManifestDoc {
    stages: Vec<StageRec>,
}

#[derive(Deserialize, Serialize)]
struct StageRec {
    stage: String,
    input_hash: String,
    outputs: Vec<String>,
    completed_at_epoch: u64,
    counts: BTreeMap<String, u64>,
}

#[derive(Deserialize, Serialize)]
struct LogLine {
    workflow_id: String,
    processor: String,
    source: String,
    fragments: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/corpus")
}

fn expected_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/expected")
}

fn run_stage(stage: &str, workspace: &Path, extra: &[&str]) -> Output {
    run_stage_on(stage, &corpus_dir().join("input"), workspace, extra)
}

fn run_stage_on(stage: &str, input: &Path, workspace: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wfsem"))
        .arg(stage)
        .arg("--config")
        .arg(corpus_dir().join("config.toml"))
        .arg("--input")
        .arg(input)
        .arg("--workspace")
        .arg(workspace)
        .args(extra)
        .output()
        .expect("spawn wfsem")
}

fn assert_success(output: &Output) {
    assert!(
        output.status.success(),
        "wfsem failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr),
    );
}

/// Workspace-relative paths of every regular file under `root`, sorted.
fn walk(root: &Path) -> Vec<String> {
    fn visit(dir: &Path, root: &Path, out: &mut Vec<String>) {
        for entry in fs::read_dir(dir).expect("readable dir") {
            let path = entry.expect("dir entry").path();
            if path.is_dir() {
                visit(&path, root, out);
            } else {
                let rel = path.strip_prefix(root).expect("under root");
                out.push(rel.to_string_lossy().into_owned());
            }
        }
    }
    let mut out = Vec::new();
    visit(root, root, &mut out);
    out.sort();
    out
}

/// Manifest bytes with the volatile completion timestamps zeroed, in the
/// exact serialization the stage writer uses.
fn normalized_manifest(path: &Path) -> String {
    let mut doc: ManifestDoc =
        serde_json::from_slice(&fs::read(path).expect("manifest")).expect("manifest json");
    for record in &mut doc.stages {
        record.completed_at_epoch = 0;
    }
    serde_json::to_string_pretty(&doc).expect("serialize") + "\n"
}

/// Harvest log bytes with every error message replaced by a fixed marker;
/// the messages embed fetcher paths that differ between checkouts.
fn normalized_log(path: &Path) -> String {
    let raw = fs::read_to_string(path).expect("harvest log");
    let mut out = String::new();
    for line in raw.lines() {
        let mut entry: LogLine = serde_json::from_str(line).expect("log line");
        if entry.error.is_some() {
            entry.error = Some("(error)".to_owned());
        }
        out.push_str(&serde_json::to_string(&entry).expect("serialize"));
        out.push('\n');
    }
    out
}

/// Byte-compares a produced workspace against the expected tree. The
/// manifest and the harvest log go through their normalizers; every other
/// file must match exactly, with no extras and nothing missing.
fn assert_tree_matches(workspace: &Path) {
    let expected_root = expected_dir();
    let expected_files = walk(&expected_root);
    let actual_files = walk(workspace);
    assert_eq!(
        expected_files, actual_files,
        "workspace file set diverges from the expected tree"
    );
    for rel in &expected_files {
        let expected_path = expected_root.join(rel);
        let actual_path = workspace.join(rel);
        match rel.as_str() {
            "manifest.json" => assert_eq!(
                fs::read_to_string(&expected_path).expect("expected manifest"),
                normalized_manifest(&actual_path),
                "manifest.json diverges"
            ),
            "harvest/harvest_log.jsonl" => assert_eq!(
                fs::read_to_string(&expected_path).expect("expected log"),
                normalized_log(&actual_path),
                "harvest_log.jsonl diverges"
            ),
            _ => assert_eq!(
                fs::read(&expected_path).expect("expected file"),
                fs::read(&actual_path).expect("produced file"),
                "{rel} diverges"
            ),
        }
    }
}

#[test]
fn pipeline_reproduces_expected_tree() {
    let ws = TempDir::new().expect("tempdir");
    let started = Instant::now();
    let output = run_stage("pipeline", ws.path(), &[]);
    let elapsed = started.elapsed();
    assert_success(&output);
    assert!(
        elapsed.as_secs() < 30,
        "pipeline took {elapsed:?}, budget is 30s"
    );
    assert_tree_matches(ws.path());
    println!(
        "PASS corpus pipeline: 12-workflow run reproduces the expected tree byte-exactly in {elapsed:?}"
    );
}

#[test]
fn emitted_turtle_reparses_to_the_same_triples() {
    let emit = expected_dir().join("emit");
    let mut all_from_ttl: Vec<Triple> = Vec::new();
    let counts: BTreeMap<String, usize> = serde_json::from_slice(
        &fs::read(emit.join("triple_counts.json")).expect("counts"),
    )
    .expect("counts json");
    for (file, count) in &counts {
        let bytes = fs::read(emit.join(format!("{file}.ttl"))).expect("ttl file");
        let triples: Vec<Triple> = TurtleParser::new()
            .for_reader(bytes.as_slice())
            .map(|t| t.expect("valid turtle"))
            .collect();
        assert_eq!(
            triples.len(),
            *count,
            "{file}.ttl triple count diverges from triple_counts.json"
        );
        all_from_ttl.extend(triples);
    }
    let nt = fs::read(emit.join("all.nt")).expect("all.nt");
    let mut all_from_nt: Vec<Triple> = NTriplesParser::new()
        .for_reader(nt.as_slice())
        .map(|t| t.expect("valid ntriples"))
        .collect();
    let mut sorted_ttl = all_from_ttl.clone();
    sorted_ttl.sort_by_key(|t| t.to_string());
    all_from_nt.sort_by_key(|t| t.to_string());
    assert_eq!(
        sorted_ttl, all_from_nt,
        "turtle and ntriples renderings disagree"
    );
    assert_eq!(all_from_nt.len(), counts.values().sum::<usize>());
    println!(
        "PASS turtle round-trip: {} documents re-parse into the same {} triples as the bulk dump",
        counts.len(),
        all_from_nt.len()
    );
}

#[test]
fn rerun_is_a_noop() {
    let ws = TempDir::new().expect("tempdir");
    assert_success(&run_stage("pipeline", ws.path(), &[]));
    let first = normalized_manifest(&ws.path().join("manifest.json"));
    let output = run_stage("pipeline", ws.path(), &[]);
    assert_success(&output);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert_eq!(
        stdout.matches("up to date").count(),
        6,
        "second run should skip all six stages:\n{stdout}"
    );
    let second = normalized_manifest(&ws.path().join("manifest.json"));
    assert_eq!(first, second, "no-op rerun must not change the manifest");
    assert_tree_matches(ws.path());
    println!("PASS rerun: unchanged inputs skip all six stages and leave every byte in place");
}

#[test]
fn jobs_flag_does_not_change_bytes() {
    let serial = TempDir::new().expect("tempdir");
    let parallel = TempDir::new().expect("tempdir");
    assert_success(&run_stage("pipeline", serial.path(), &["--jobs", "1"]));
    assert_success(&run_stage("pipeline", parallel.path(), &["--jobs", "4"]));
    assert_tree_matches(serial.path());
    assert_tree_matches(parallel.path());
    println!("PASS determinism: --jobs 1 and --jobs 4 produce identical workspaces");
}

#[test]
fn stage_rebuild_is_isolated() {
    let ws = TempDir::new().expect("tempdir");
    assert_success(&run_stage("pipeline", ws.path(), &[]));
    fs::remove_dir_all(ws.path().join("prune")).expect("drop prune dir");
    assert_success(&run_stage("prune", ws.path(), &[]));
    assert_tree_matches(ws.path());
    println!("PASS stage isolation: a deleted stage directory rebuilds to identical bytes");
}

#[test]
fn counts_stay_consistent_across_stages() {
    let ws = TempDir::new().expect("tempdir");
    assert_success(&run_stage("pipeline", ws.path(), &[]));
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(ws.path().join("manifest.json")).expect("manifest"))
            .expect("manifest json");
    let counts = |stage: &str| -> BTreeMap<String, u64> {
        manifest["stages"]
            .as_array()
            .expect("stages")
            .iter()
            .find(|s| s["stage"] == stage)
            .unwrap_or_else(|| panic!("{stage} missing from manifest"))["counts"]
            .as_object()
            .expect("counts")
            .iter()
            .map(|(k, v)| (k.clone(), v.as_u64().expect("count")))
            .collect()
    };
    let harvest = counts("harvest");
    let annotate = counts("annotate");
    let score = counts("score");
    assert_eq!(annotate["services"], harvest["services"]);
    assert_eq!(
        annotate["services_annotated"] + annotate["services_zero_annotations"],
        harvest["services"]
    );
    assert_eq!(score["services"], harvest["services"]);
    assert_eq!(score["annotations"], annotate["annotations_pre_dedup"]);
    println!("PASS counts: service and annotation totals agree across harvest, annotate and score");
}

#[test]
fn missing_upstream_exits_two() {
    let ws = TempDir::new().expect("tempdir");
    let output = run_stage("prune", ws.path(), &[]);
    assert_eq!(output.status.code(), Some(2), "prune before filter");
    println!("PASS exit codes: running a stage before its upstream reports code 2");
}

#[test]
fn parse_failures_exit_three_but_still_produce_output() {
    let input = TempDir::new().expect("tempdir");
    for entry in fs::read_dir(corpus_dir().join("input")).expect("corpus input") {
        let path = entry.expect("entry").path();
        fs::copy(&path, input.path().join(path.file_name().expect("name"))).expect("copy");
    }
    fs::write(input.path().join("broken.scufl"), b"<s:scufl xmlns:s=\"http://org.embl.ebi.escience/xscufl/0.1alpha\">").expect("write");
    let ws = TempDir::new().expect("tempdir");
    let output = run_stage_on("pipeline", input.path(), ws.path(), &[]);
    assert_eq!(output.status.code(), Some(3), "partial failure exit code");
    assert!(
        String::from_utf8_lossy(&output.stderr).contains("broken.scufl"),
        "failure should name the offending file"
    );
    assert!(ws.path().join("emit/all.nt").exists(), "pipeline still completes");
    println!("PASS partial failure: an unparseable workflow logs, exits 3 and leaves the rest intact");
}

#[test]
fn config_errors_exit_one() {
    let ws = TempDir::new().expect("tempdir");
    let output = Command::new(env!("CARGO_BIN_EXE_wfsem"))
        .arg("filter")
        .arg("--config")
        .arg(corpus_dir().join("no_such_config.toml"))
        .arg("--input")
        .arg(corpus_dir().join("input"))
        .arg("--workspace")
        .arg(ws.path())
        .output()
        .expect("spawn wfsem");
    assert_eq!(output.status.code(), Some(1), "unreadable config");
    println!("PASS config errors: an unreadable config file reports code 1");
}
