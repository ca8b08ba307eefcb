//! Input-directory scanning: workflow documents plus optional metadata
//! sidecars. Files are processed in name order so every downstream stage
//! sees a canonical sequence regardless of filesystem enumeration.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use wfsem_core::workflow::{parse_workflow, CategoryMap, WorkflowGraph};

/// Repository exports carry curated fields the XML lacks (numeric id,
/// tags, long description). `<file>.meta.json` next to a workflow file
/// supplies them; present fields override what the parser recovered.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Sidecar {
    id: Option<String>,
    title: Option<String>,
    description: Option<String>,
    tags: Option<Vec<String>>,
}

#[derive(Debug)]
pub struct StoredWorkflow {
    /// Base name of the source document, the key for all per-workflow
    /// outputs.
    pub file_name: String,
    pub graph: WorkflowGraph,
}

#[derive(Debug)]
pub struct CorpusLoad {
    pub workflows: Vec<StoredWorkflow>,
    /// (file name, reason) pairs for documents that failed to parse.
    pub failures: Vec<(String, String)>,
    /// Bytes of every file that participated, in name order, for hashing.
    pub fingerprint: Vec<(String, Vec<u8>)>,
}

fn is_workflow_file(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("scufl") | Some("xml") | Some("t2flow")
    )
}

/// Reads every workflow document under `input` (non-recursive), applying
/// sidecar metadata. Parse failures are collected, not fatal.
pub fn load_corpus(input: &Path, categories: &CategoryMap) -> std::io::Result<CorpusLoad> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(input)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_workflow_file(p))
        .collect();
    paths.sort();

    let mut workflows = Vec::new();
    let mut failures = Vec::new();
    let mut fingerprint = Vec::new();
    for path in &paths {
        let file_name = path
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default()
            .to_string();
        let bytes = std::fs::read(path)?;
        fingerprint.push((file_name.clone(), bytes.clone()));

        let sidecar_path = path.with_file_name(format!("{file_name}.meta.json"));
        let sidecar = if sidecar_path.exists() {
            let raw = std::fs::read(&sidecar_path)?;
            fingerprint.push((format!("{file_name}.meta.json"), raw.clone()));
            match serde_json::from_slice::<Sidecar>(&raw) {
                Ok(s) => s,
                Err(e) => {
                    failures.push((file_name, format!("sidecar: {e}")));
                    continue;
                }
            }
        } else {
            Sidecar::default()
        };

        match parse_workflow(&bytes, None, categories) {
            Ok(mut graph) => {
                if let Some(id) = sidecar.id {
                    graph.id = id;
                }
                if let Some(title) = sidecar.title {
                    graph.title = title;
                }
                if let Some(description) = sidecar.description {
                    graph.description = description;
                }
                if let Some(tags) = sidecar.tags {
                    graph.tags = tags;
                }
                workflows.push(StoredWorkflow { file_name, graph });
            }
            Err(e) => failures.push((file_name, e.to_string())),
        }
    }
    Ok(CorpusLoad {
        workflows,
        failures,
        fingerprint,
    })
}
