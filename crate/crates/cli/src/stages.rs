//! Stage execution. Every stage reads upstream outputs from the workspace,
//! writes into `<workspace>/<stage>/`, and records a manifest entry whose
//! input hash chains to its upstream stage so an upstream rerun invalidates
//! everything below it. Per-workflow work fans out over rayon; results are
//! collected in corpus order so the job count never changes output bytes.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use wfsem_core::annotate::{annotate, dedup, Dictionary, ServiceAnnotations, Span};
use wfsem_core::filter::{apply_filter, verdicts_csv, TermList};
use wfsem_core::harvest::fetch::{FixtureHttpFetcher, HttpFetcher, UreqFetcher};
use wfsem_core::harvest::{harvest, HarvestLogEntry, ServiceDescription};
use wfsem_core::ontology::{OntologyError, OntologyStore};
use wfsem_core::opmw::{opmw_triples, to_ntriples, to_turtle, UriMintingPolicy};
use wfsem_core::score::{compare_gold, histograms_csv, parse_gold_tsv, score};
use wfsem_core::shim::{compute_stats, prune_shims, stats_csv, StatsError};
use wfsem_core::workflow::{serialize_workflow, WorkflowGraph};

use crate::config::{Config, ConfigError};
use crate::corpus::{load_corpus, StoredWorkflow};
use crate::workspace::{StageHasher, Workspace, WorkspaceError, PIPELINE_STAGES};

#[derive(Debug, Error)]
pub enum StageError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Workspace(#[from] WorkspaceError),
    #[error("{0}")]
    Other(String),
}

impl From<std::io::Error> for StageError {
    fn from(e: std::io::Error) -> Self {
        StageError::Other(e.to_string())
    }
}

fn bad_config(field: &str, reason: impl Into<String>) -> StageError {
    StageError::Config(ConfigError::BadValue {
        field: field.to_string(),
        reason: reason.into(),
    })
}

#[derive(Debug, Default)]
pub struct StageOutcome {
    pub skipped: bool,
    /// Non-fatal per-item failures already written to stderr.
    pub partial_failures: u64,
}

/// One pre-dedup or deduped annotation as a JSONL record.
#[derive(Debug, Serialize, Deserialize)]
pub struct FlatAnnotation {
    pub workflow: String,
    pub processor: String,
    pub class_uri: String,
    pub ontology: String,
    pub matched_text: String,
    pub span: Span,
}

pub fn run_stage(
    stage: &str,
    workspace: &mut Workspace,
    config: &Config,
    input: &Path,
) -> Result<StageOutcome, StageError> {
    let outcome = match stage {
        "filter" => stage_filter(workspace, config, input)?,
        "prune" => stage_prune(workspace)?,
        "stats" => stage_stats(workspace)?,
        "harvest" => stage_harvest(workspace, config)?,
        "annotate" => stage_annotate(workspace, config)?,
        "score" => stage_score(workspace, config)?,
        "emit" => stage_emit(workspace, config)?,
        other => return Err(StageError::Other(format!("unknown stage {other}"))),
    };
    if outcome.skipped {
        println!("{stage}: up to date");
    }
    Ok(outcome)
}

pub fn run_pipeline(
    workspace: &mut Workspace,
    config: &Config,
    input: &Path,
) -> Result<StageOutcome, StageError> {
    let mut total = StageOutcome::default();
    for stage in PIPELINE_STAGES {
        let outcome = run_stage(stage, workspace, config, input)?;
        total.partial_failures += outcome.partial_failures;
    }
    Ok(total)
}

fn pretty<T: Serialize>(value: &T) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable stage output");
    text.push('\n');
    text.into_bytes()
}

fn jsonl<T: Serialize>(items: impl IntoIterator<Item = T>) -> Vec<u8> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(&item).expect("serializable stage output"));
        out.push('\n');
    }
    out.into_bytes()
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, StageError> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l)
                .map_err(|e| StageError::Other(format!("{}: {e}", path.display())))
        })
        .collect()
}

/// Loads the per-workflow graph documents a stage persisted, in file order.
fn read_stage_graphs(workspace: &Workspace, stage: &str) -> Result<Vec<StoredWorkflow>, StageError> {
    let dir = workspace.stage_dir(stage).join("graphs");
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for path in paths {
        let raw = std::fs::read(&path)?;
        let graph: WorkflowGraph = serde_json::from_slice(&raw)
            .map_err(|e| StageError::Other(format!("{}: {e}", path.display())))?;
        let file_name = path
            .file_name()
            .and_then(|n| n.to_str())
            .and_then(|n| n.strip_suffix(".json"))
            .unwrap_or_default()
            .to_string();
        out.push(StoredWorkflow { file_name, graph });
    }
    Ok(out)
}

fn stage_filter(
    workspace: &mut Workspace,
    config: &Config,
    input: &Path,
) -> Result<StageOutcome, StageError> {
    let terms_path = config
        .terms_path
        .as_ref()
        .ok_or_else(|| bad_config("filter.terms", "required for the filter stage"))?;
    let terms_text = std::fs::read_to_string(terms_path)?;
    let terms = TermList::parse(&terms_text)
        .map_err(|e| bad_config("filter.terms", e.to_string()))?;
    if terms.is_empty() {
        return Err(bad_config("filter.terms", "no effective terms"));
    }

    let load = load_corpus(input, &config.categories)?;
    let mut hasher = StageHasher::new("filter");
    for (name, bytes) in &load.fingerprint {
        hasher.add(&format!("corpus/{name}"), bytes);
    }
    hasher.add("terms", terms_text.as_bytes());
    hasher.add("categories", &pretty(&config.categories));
    let hash = hasher.finish();

    for (name, reason) in &load.failures {
        eprintln!("filter: {name}: {reason}");
    }
    if workspace.is_current("filter", &hash) {
        workspace.touch_stage("filter")?;
        return Ok(StageOutcome {
            skipped: true,
            partial_failures: load.failures.len() as u64,
        });
    }
    workspace.clear_stage_dir("filter")?;

    let mut verdicts = Vec::new();
    let mut outputs = Vec::new();
    let mut relevant = 0u64;
    for wf in &load.workflows {
        let verdict = apply_filter(&wf.graph, &terms).map_err(|e| StageError::Other(e.to_string()))?;
        if verdict.relevant {
            relevant += 1;
            outputs.push(workspace.write_output(
                "filter",
                &format!("graphs/{}.json", wf.file_name),
                &pretty(&wf.graph),
            )?);
        }
        verdicts.push(verdict);
    }
    outputs.push(workspace.write_output("filter", "verdicts.csv", verdicts_csv(&verdicts).as_bytes())?);
    outputs.push(workspace.write_output("filter", "verdicts.json", &pretty(&verdicts))?);

    let mut counts = BTreeMap::new();
    counts.insert("workflows_in".into(), (load.workflows.len() + load.failures.len()) as u64);
    counts.insert("relevant".into(), relevant);
    counts.insert("irrelevant".into(), load.workflows.len() as u64 - relevant);
    counts.insert("parse_failures".into(), load.failures.len() as u64);
    println!(
        "filter: {} of {} workflows relevant",
        relevant,
        load.workflows.len()
    );
    workspace.complete_stage("filter", hash, outputs, counts)?;
    Ok(StageOutcome {
        skipped: false,
        partial_failures: load.failures.len() as u64,
    })
}

fn stage_prune(workspace: &mut Workspace) -> Result<StageOutcome, StageError> {
    let upstream = workspace.upstream_hash("prune", "filter")?;
    let mut hasher = StageHasher::new("prune");
    hasher.add("upstream", upstream.as_bytes());
    let hash = hasher.finish();
    if workspace.is_current("prune", &hash) {
        workspace.touch_stage("prune")?;
        return Ok(StageOutcome { skipped: true, partial_failures: 0 });
    }

    let workflows = read_stage_graphs(workspace, "filter")?;
    workspace.clear_stage_dir("prune")?;
    let mut outputs = Vec::new();
    let mut shims_removed = 0u64;
    let mut inferred_links = 0u64;
    let mut processors_out = 0u64;
    for wf in &workflows {
        let pruned = prune_shims(&wf.graph);
        shims_removed += wf
            .graph
            .processors
            .iter()
            .filter(|p| p.category.is_shim())
            .count() as u64;
        inferred_links += pruned
            .links
            .iter()
            .filter(|l| !wf.graph.links.contains(l))
            .count() as u64;
        processors_out += pruned.processors.len() as u64;
        outputs.push(workspace.write_output(
            "prune",
            &format!("graphs/{}.json", wf.file_name),
            &pretty(&pruned),
        )?);
        outputs.push(workspace.write_output(
            "prune",
            &format!("{}.pruned", wf.file_name),
            &serialize_workflow(&pruned),
        )?);
    }

    let mut counts = BTreeMap::new();
    counts.insert("workflows".into(), workflows.len() as u64);
    counts.insert("shims_removed".into(), shims_removed);
    counts.insert("inferred_links".into(), inferred_links);
    counts.insert("processors_out".into(), processors_out);
    println!(
        "prune: removed {} shims across {} workflows ({} links inferred)",
        shims_removed,
        workflows.len(),
        inferred_links
    );
    workspace.complete_stage("prune", hash, outputs, counts)?;
    Ok(StageOutcome { skipped: false, partial_failures: 0 })
}

fn stage_stats(workspace: &mut Workspace) -> Result<StageOutcome, StageError> {
    let upstream = workspace.upstream_hash("stats", "filter")?;
    let mut hasher = StageHasher::new("stats");
    hasher.add("upstream", upstream.as_bytes());
    let hash = hasher.finish();
    if workspace.is_current("stats", &hash) {
        workspace.touch_stage("stats")?;
        return Ok(StageOutcome { skipped: true, partial_failures: 0 });
    }

    let workflows = read_stage_graphs(workspace, "filter")?;
    let graphs: Vec<WorkflowGraph> = workflows.into_iter().map(|w| w.graph).collect();
    let stats = match compute_stats(&graphs) {
        Ok(stats) => stats,
        Err(StatsError::EmptyCorpus) => {
            eprintln!("stats: no workflows survived the filter, nothing to report");
            return Ok(StageOutcome { skipped: false, partial_failures: 1 });
        }
    };
    workspace.clear_stage_dir("stats")?;
    let outputs = vec![
        workspace.write_output("stats", "stats.json", &pretty(&stats))?,
        workspace.write_output("stats", "stats.csv", stats_csv(&stats).as_bytes())?,
    ];

    let mut counts = BTreeMap::new();
    counts.insert("workflows".into(), stats.workflows as u64);
    counts.insert("processors".into(), stats.processors as u64);
    counts.insert("shims".into(), stats.shims as u64);
    counts.insert("non_shims".into(), stats.non_shims as u64);
    counts.insert("all_shim_workflows".into(), stats.all_shim_workflows as u64);
    println!(
        "stats: {} processors over {} workflows, {} shims",
        stats.processors, stats.workflows, stats.shims
    );
    workspace.complete_stage("stats", hash, outputs, counts)?;
    Ok(StageOutcome { skipped: false, partial_failures: 0 })
}

/// Hashes a fixture directory by name and content so edited captures
/// invalidate the harvest record.
fn hash_dir(hasher: &mut StageHasher, label: &str, dir: &Path) -> Result<(), StageError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    paths.sort();
    for path in paths {
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        hasher.add(&format!("{label}/{name}"), &std::fs::read(&path)?);
    }
    Ok(())
}

fn stage_harvest(workspace: &mut Workspace, config: &Config) -> Result<StageOutcome, StageError> {
    let upstream = workspace.upstream_hash("harvest", "prune")?;
    let mut hasher = StageHasher::new("harvest");
    hasher.add("upstream", upstream.as_bytes());
    hasher.add("timeout", &config.timeout.as_secs().to_le_bytes());
    hasher.add("retries", &config.retries.to_le_bytes());
    // fixture locators are absolute paths; hash the directory contents
    // instead so the manifest stays machine-independent
    for source in &config.sources {
        if source.kind == wfsem_core::harvest::SourceKind::Fixture {
            hasher.add(&format!("source/{}", source.id), b"fixture");
            hash_dir(&mut hasher, &format!("fixture/{}", source.id), Path::new(&source.locator))?;
        } else {
            hasher.add(
                &format!("source/{}", source.id),
                format!("{:?} {}", source.kind, source.locator).as_bytes(),
            );
        }
    }
    if let Some(dir) = &config.http_fixtures {
        hash_dir(&mut hasher, "http_fixtures", dir)?;
    }
    let hash = hasher.finish();
    if workspace.is_current("harvest", &hash) {
        workspace.touch_stage("harvest")?;
        return Ok(StageOutcome { skipped: true, partial_failures: 0 });
    }

    let workflows = read_stage_graphs(workspace, "prune")?;
    workspace.clear_stage_dir("harvest")?;
    let fetcher: Box<dyn HttpFetcher> = match &config.http_fixtures {
        Some(dir) => Box::new(FixtureHttpFetcher::new(dir)),
        None => Box::new(UreqFetcher { retries: config.retries }),
    };
    let harvested: Vec<(Vec<ServiceDescription>, Vec<HarvestLogEntry>)> = workflows
        .par_iter()
        .map(|wf| {
            let mut log = Vec::new();
            let descriptions = wf
                .graph
                .processors
                .iter()
                .map(|p| {
                    harvest(
                        &wf.graph.id,
                        p,
                        &config.sources,
                        fetcher.as_ref(),
                        config.timeout,
                        &mut log,
                    )
                })
                .collect();
            (descriptions, log)
        })
        .collect();

    let mut descriptions = Vec::new();
    let mut log = Vec::new();
    for (d, l) in harvested {
        descriptions.extend(d);
        log.extend(l);
    }
    let name_only = descriptions.iter().filter(|d| d.name_only()).count() as u64;
    let source_errors = log.iter().filter(|e| e.error.is_some()).count() as u64;
    let outputs = vec![
        workspace.write_output("harvest", "descriptions.json", &pretty(&descriptions))?,
        workspace.write_output("harvest", "harvest_log.jsonl", &jsonl(&log))?,
    ];

    let mut counts = BTreeMap::new();
    counts.insert("services".into(), descriptions.len() as u64);
    counts.insert("name_only".into(), name_only);
    counts.insert("source_errors".into(), source_errors);
    println!(
        "harvest: {} services described, {} name-only, {} source errors logged",
        descriptions.len(),
        name_only,
        source_errors
    );
    workspace.complete_stage("harvest", hash, outputs, counts)?;
    Ok(StageOutcome { skipped: false, partial_failures: 0 })
}

fn build_store(config: &Config) -> Result<OntologyStore, StageError> {
    let mut builder = OntologyStore::builder();
    for spec in &config.ontologies {
        let bytes = std::fs::read(&spec.path)?;
        builder
            .load_ontology(&spec.id, &bytes, spec.format)
            .map_err(|e| bad_config(&format!("ontology.{}", spec.id), e.to_string()))?;
    }
    builder
        .build()
        .map_err(|e: OntologyError| bad_config("ontology", e.to_string()))
}

fn annotate_inputs_hash(workspace: &Workspace, config: &Config) -> Result<String, StageError> {
    let upstream = workspace.upstream_hash("annotate", "harvest")?;
    let mut hasher = StageHasher::new("annotate");
    hasher.add("upstream", upstream.as_bytes());
    for spec in &config.ontologies {
        hasher.add(&format!("ontology/{}", spec.id), &std::fs::read(&spec.path)?);
    }
    hasher.add("precedence", config.precedence.ids().join("\n").as_bytes());
    hasher.add("min_single_token", &config.min_single_token.to_le_bytes());
    Ok(hasher.finish())
}

fn stage_annotate(workspace: &mut Workspace, config: &Config) -> Result<StageOutcome, StageError> {
    if config.ontologies.is_empty() {
        return Err(bad_config("ontology", "at least one ontology is required to annotate"));
    }
    let hash = annotate_inputs_hash(workspace, config)?;
    if workspace.is_current("annotate", &hash) {
        workspace.touch_stage("annotate")?;
        return Ok(StageOutcome { skipped: true, partial_failures: 0 });
    }

    let store = build_store(config)?;
    let dictionary = Dictionary::build_with_min_token(&store, config.min_single_token);
    let descriptions: Vec<ServiceDescription> = {
        let path = workspace.stage_dir("harvest").join("descriptions.json");
        let raw = std::fs::read(&path)?;
        serde_json::from_slice(&raw).map_err(|e| StageError::Other(format!("{}: {e}", path.display())))?
    };
    workspace.clear_stage_dir("annotate")?;

    let services: Vec<ServiceAnnotations> = descriptions
        .par_iter()
        .map(|d| ServiceAnnotations {
            workflow_id: d.workflow_id.clone(),
            processor: d.processor.clone(),
            annotations: annotate(&d.assembled, &dictionary),
        })
        .collect();
    let deduped: Vec<ServiceAnnotations> = services
        .iter()
        .map(|s| ServiceAnnotations {
            workflow_id: s.workflow_id.clone(),
            processor: s.processor.clone(),
            annotations: dedup(&s.annotations, &config.precedence),
        })
        .collect();

    let flat = |set: &[ServiceAnnotations]| -> Vec<FlatAnnotation> {
        set.iter()
            .flat_map(|s| {
                s.annotations.iter().map(|a| FlatAnnotation {
                    workflow: s.workflow_id.clone(),
                    processor: s.processor.clone(),
                    class_uri: a.class_uri.clone(),
                    ontology: a.ontology.clone(),
                    matched_text: a.matched_text.clone(),
                    span: a.span,
                })
            })
            .collect()
    };
    let pre = flat(&services);
    let post = flat(&deduped);
    let annotated = services.iter().filter(|s| !s.annotations.is_empty()).count() as u64;
    let outputs = vec![
        workspace.write_output("annotate", "services.json", &pretty(&services))?,
        workspace.write_output("annotate", "annotations.jsonl", &jsonl(&pre))?,
        workspace.write_output("annotate", "deduped.jsonl", &jsonl(&post))?,
    ];

    let mut counts = BTreeMap::new();
    counts.insert("services".into(), services.len() as u64);
    counts.insert("services_annotated".into(), annotated);
    counts.insert("services_zero_annotations".into(), services.len() as u64 - annotated);
    counts.insert("annotations_pre_dedup".into(), pre.len() as u64);
    counts.insert("annotations_post_dedup".into(), post.len() as u64);
    println!(
        "annotate: {} annotations over {} of {} services ({} after dedup)",
        pre.len(),
        annotated,
        services.len(),
        post.len()
    );
    workspace.complete_stage("annotate", hash, outputs, counts)?;
    Ok(StageOutcome { skipped: false, partial_failures: 0 })
}

fn stage_score(workspace: &mut Workspace, config: &Config) -> Result<StageOutcome, StageError> {
    let upstream = workspace.upstream_hash("score", "annotate")?;
    let mut hasher = StageHasher::new("score");
    hasher.add("upstream", upstream.as_bytes());
    hasher.add("metric", config.metric.describe().as_bytes());
    let gold_text = match &config.gold_path {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            hasher.add("gold", text.as_bytes());
            Some(text)
        }
        None => None,
    };
    let hash = hasher.finish();
    if workspace.is_current("score", &hash) {
        workspace.touch_stage("score")?;
        return Ok(StageOutcome { skipped: true, partial_failures: 0 });
    }

    let store = build_store(config)?;
    let services: Vec<ServiceAnnotations> = {
        let path = workspace.stage_dir("annotate").join("services.json");
        let raw = std::fs::read(&path)?;
        serde_json::from_slice(&raw).map_err(|e| StageError::Other(format!("{}: {e}", path.display())))?
    };
    workspace.clear_stage_dir("score")?;

    let report = score(&services, &store, config.metric, &config.precedence)
        .map_err(|e| StageError::Other(e.to_string()))?;
    let mut outputs = vec![
        workspace.write_output("score", "report.json", &pretty(&report))?,
        workspace.write_output("score", "histograms.csv", histograms_csv(&report.histograms).as_bytes())?,
    ];
    if let Some(text) = gold_text {
        let entries = parse_gold_tsv(&text).map_err(|e| bad_config("scoring.gold", e.to_string()))?;
        let comparison = compare_gold(&entries, &store, config.metric)
            .map_err(|e| StageError::Other(e.to_string()))?;
        outputs.push(workspace.write_output("score", "gold.json", &pretty(&comparison))?);
    }

    let unscored = report.per_annotation.iter().filter(|a| a.ic.is_none()).count() as u64;
    let mut counts = BTreeMap::new();
    counts.insert("annotations".into(), report.per_annotation.len() as u64);
    counts.insert("annotations_unscored".into(), unscored);
    counts.insert("services".into(), report.per_service.len() as u64);
    counts.insert("workflows".into(), report.per_workflow.len() as u64);
    println!(
        "score[{}]: {} annotations scored ({} unscorable) over {} services",
        report.metric,
        report.per_annotation.len() as u64 - unscored,
        unscored,
        report.per_service.len()
    );
    workspace.complete_stage("score", hash, outputs, counts)?;
    Ok(StageOutcome { skipped: false, partial_failures: 0 })
}

fn stage_emit(workspace: &mut Workspace, config: &Config) -> Result<StageOutcome, StageError> {
    let annotate_hash = workspace.upstream_hash("emit", "annotate")?;
    let prune_hash = workspace.upstream_hash("emit", "prune")?;
    let mut hasher = StageHasher::new("emit");
    hasher.add("annotate", annotate_hash.as_bytes());
    hasher.add("prune", prune_hash.as_bytes());
    hasher.add("namespace", config.fallback_namespace.as_bytes());
    let hash = hasher.finish();
    if workspace.is_current("emit", &hash) {
        workspace.touch_stage("emit")?;
        return Ok(StageOutcome { skipped: true, partial_failures: 0 });
    }

    let workflows = read_stage_graphs(workspace, "prune")?;
    let deduped: Vec<FlatAnnotation> =
        read_jsonl(&workspace.stage_dir("annotate").join("deduped.jsonl"))?;
    workspace.clear_stage_dir("emit")?;

    let mut per_workflow: BTreeMap<&str, BTreeMap<String, BTreeSet<String>>> = BTreeMap::new();
    for a in &deduped {
        per_workflow
            .entry(a.workflow.as_str())
            .or_default()
            .entry(a.processor.clone())
            .or_default()
            .insert(a.class_uri.clone());
    }

    let policy = UriMintingPolicy {
        fallback_namespace: config.fallback_namespace.clone(),
    };
    let empty = BTreeMap::new();
    let rendered: Vec<Result<(String, String, usize), String>> = workflows
        .par_iter()
        .map(|wf| {
            let annotations = per_workflow.get(wf.graph.id.as_str()).unwrap_or(&empty);
            let triples = opmw_triples(&wf.graph, annotations, &policy)
                .map_err(|e| format!("{}: {e}", wf.file_name))?;
            Ok((to_turtle(&triples), to_ntriples(&triples), triples.len()))
        })
        .collect();

    let mut outputs = Vec::new();
    let mut dump = String::new();
    let mut triple_counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut failures = 0u64;
    for (wf, result) in workflows.iter().zip(rendered) {
        match result {
            Ok((turtle, ntriples, count)) => {
                outputs.push(workspace.write_output(
                    "emit",
                    &format!("{}.ttl", wf.file_name),
                    turtle.as_bytes(),
                )?);
                dump.push_str(&ntriples);
                triple_counts.insert(&wf.file_name, count);
            }
            Err(reason) => {
                eprintln!("emit: {reason}");
                failures += 1;
            }
        }
    }
    outputs.push(workspace.write_output("emit", "all.nt", dump.as_bytes())?);
    outputs.push(workspace.write_output("emit", "triple_counts.json", &pretty(&triple_counts))?);

    let total: usize = triple_counts.values().sum();
    let mut counts = BTreeMap::new();
    counts.insert("workflows".into(), triple_counts.len() as u64);
    counts.insert("triples".into(), total as u64);
    counts.insert("failed_workflows".into(), failures);
    println!("emit: {} triples across {} documents", total, triple_counts.len());
    workspace.complete_stage("emit", hash, outputs, counts)?;
    Ok(StageOutcome { skipped: false, partial_failures: failures })
}
