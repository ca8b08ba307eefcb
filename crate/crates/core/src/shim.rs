//! Shim pruning: removes data-adaptation steps from a workflow graph and
//! reconnects the surviving endpoints across every shim-only path, so the
//! pruned graph keeps exactly the reachability the original had between
//! substantive services. Also computes corpus composition statistics.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::workflow::{DataLink, ProcessorCategory, WorkflowFormat, WorkflowGraph};

/// A link endpoint during path search: a surviving processor or a workflow
/// port. Shims never appear here.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Endpoint {
    Input(String),
    Processor(String),
    Output(String),
}

/// Removes every shim processor, keeps links between surviving endpoints
/// verbatim and adds an inferred link (u, p, v, q) for every shim-only path
/// u -> s1 -> ... -> sk -> v, where p is the port u used on the path's first
/// edge and q the port v used on the last. Inferred duplicates of existing
/// tuples are dropped; shim-only cycles vanish without reconnection.
/// Idempotent: pruning a pruned graph is the identity.
pub fn prune_shims(workflow: &WorkflowGraph) -> WorkflowGraph {
    let shims: BTreeSet<&str> = workflow
        .processors
        .iter()
        .filter(|p| p.category.is_shim())
        .map(|p| p.name.as_str())
        .collect();

    let mut result = workflow.clone();
    result.processors.retain(|p| !p.category.is_shim());

    // shim-to-shim adjacency for transitive reachability inside shim regions
    let mut shim_adj: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for link in &workflow.links {
        if let (Some(src), Some(sink)) = (&link.source_processor, &link.sink_processor) {
            if shims.contains(src.as_str()) && shims.contains(sink.as_str()) {
                shim_adj.entry(src).or_default().push(sink);
            }
        }
    }

    let classify_source = |link: &DataLink| -> Option<Endpoint> {
        match &link.source_processor {
            Some(name) if shims.contains(name.as_str()) => None,
            Some(name) => Some(Endpoint::Processor(name.clone())),
            None => Some(Endpoint::Input(link.source_port.clone())),
        }
    };
    let classify_sink = |link: &DataLink| -> Option<Endpoint> {
        match &link.sink_processor {
            Some(name) if shims.contains(name.as_str()) => None,
            Some(name) => Some(Endpoint::Processor(name.clone())),
            None => Some(Endpoint::Output(link.sink_port.clone())),
        }
    };

    let mut kept: Vec<DataLink> = Vec::new();
    let mut seen: BTreeSet<(Option<String>, String, Option<String>, String)> = BTreeSet::new();
    for link in &workflow.links {
        if classify_source(link).is_some() && classify_sink(link).is_some() {
            kept.push(link.clone());
            seen.insert(owned_key(link));
        }
    }

    // exits[s] = links leaving shim s into a surviving endpoint
    let mut exits: BTreeMap<&str, Vec<&DataLink>> = BTreeMap::new();
    for link in &workflow.links {
        if let Some(src) = &link.source_processor {
            if shims.contains(src.as_str()) && classify_sink(link).is_some() {
                exits.entry(src).or_default().push(link);
            }
        }
    }

    let mut inferred: Vec<DataLink> = Vec::new();
    for entry in &workflow.links {
        let Some(start) = classify_source(entry) else {
            continue;
        };
        let Some(first_shim) = entry.sink_processor.as_deref().filter(|s| shims.contains(s)) else {
            continue;
        };
        for shim in shim_reachable(first_shim, &shim_adj) {
            for exit in exits.get(shim).into_iter().flatten() {
                let end = classify_sink(exit).expect("exit links end at survivors");
                if let (Endpoint::Processor(a), Endpoint::Processor(b)) = (&start, &end) {
                    if a == b {
                        continue;
                    }
                }
                let link = DataLink {
                    source_processor: match &start {
                        Endpoint::Processor(name) => Some(name.clone()),
                        _ => None,
                    },
                    source_port: entry.source_port.clone(),
                    sink_processor: match &end {
                        Endpoint::Processor(name) => Some(name.clone()),
                        _ => None,
                    },
                    sink_port: exit.sink_port.clone(),
                    inferred: true,
                };
                if seen.insert(owned_key(&link)) {
                    inferred.push(link);
                }
            }
        }
    }
    inferred.sort();
    kept.extend(inferred);
    result.links = kept;
    result
}

fn owned_key(link: &DataLink) -> (Option<String>, String, Option<String>, String) {
    (
        link.source_processor.clone(),
        link.source_port.clone(),
        link.sink_processor.clone(),
        link.sink_port.clone(),
    )
}

/// All shims reachable from `start` through shim-only edges, including
/// `start` itself. Cycles are handled by the visited set.
fn shim_reachable<'a>(start: &'a str, adj: &BTreeMap<&'a str, Vec<&'a str>>) -> Vec<&'a str> {
    let mut visited: BTreeSet<&str> = BTreeSet::new();
    let mut stack = vec![start];
    while let Some(current) = stack.pop() {
        if !visited.insert(current) {
            continue;
        }
        for next in adj.get(current).into_iter().flatten() {
            stack.push(next);
        }
    }
    visited.into_iter().collect()
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("empty corpus: no workflows to analyse")]
    EmptyCorpus,
}

/// Per-format composition averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormatBreakdown {
    pub workflows: usize,
    pub mean_shims: f64,
    pub mean_non_shims: f64,
    pub mean_other: f64,
}

/// Corpus composition: processor totals split shim / non-shim / other, per
/// category and per source format. Nested workflows count as one non-shim
/// component of the enclosing workflow; their insides are not unrolled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionStats {
    pub workflows: usize,
    pub processors: usize,
    pub shims: usize,
    pub non_shims: usize,
    pub other: usize,
    pub all_shim_workflows: usize,
    pub mean_components: f64,
    pub mean_shims: f64,
    pub mean_non_shims: f64,
    pub mean_other: f64,
    pub per_category: BTreeMap<ProcessorCategory, usize>,
    pub per_format: BTreeMap<WorkflowFormat, FormatBreakdown>,
}

pub fn compute_stats(corpus: &[WorkflowGraph]) -> Result<CompositionStats, StatsError> {
    if corpus.is_empty() {
        return Err(StatsError::EmptyCorpus);
    }
    let mut per_category: BTreeMap<ProcessorCategory, usize> = BTreeMap::new();
    let mut per_format_shims: BTreeMap<WorkflowFormat, (usize, usize, usize, usize)> =
        BTreeMap::new();
    let mut shims = 0usize;
    let mut non_shims = 0usize;
    let mut other = 0usize;
    let mut all_shim_workflows = 0usize;
    for workflow in corpus {
        let entry = per_format_shims
            .entry(workflow.format)
            .or_insert((0, 0, 0, 0));
        entry.0 += 1;
        let mut workflow_shims = 0usize;
        for processor in &workflow.processors {
            *per_category.entry(processor.category).or_insert(0) += 1;
            if processor.category.is_shim() {
                shims += 1;
                workflow_shims += 1;
                entry.1 += 1;
            } else if processor.category.is_non_shim() {
                non_shims += 1;
                entry.2 += 1;
            } else {
                other += 1;
                entry.3 += 1;
            }
        }
        if !workflow.processors.is_empty() && workflow_shims == workflow.processors.len() {
            all_shim_workflows += 1;
        }
    }
    let processors = shims + non_shims + other;
    let workflows = corpus.len();
    let per_format = per_format_shims
        .into_iter()
        .map(|(format, (count, s, n, o))| {
            (
                format,
                FormatBreakdown {
                    workflows: count,
                    mean_shims: s as f64 / count as f64,
                    mean_non_shims: n as f64 / count as f64,
                    mean_other: o as f64 / count as f64,
                },
            )
        })
        .collect();
    Ok(CompositionStats {
        workflows,
        processors,
        shims,
        non_shims,
        other,
        all_shim_workflows,
        mean_components: processors as f64 / workflows as f64,
        mean_shims: shims as f64 / workflows as f64,
        mean_non_shims: non_shims as f64 / workflows as f64,
        mean_other: other as f64 / workflows as f64,
        per_category,
        per_format,
    })
}

/// Renders the per-category table as `category,count` CSV, one row per
/// category in declaration order, zero rows included.
pub fn stats_csv(stats: &CompositionStats) -> String {
    let mut out = String::from("category,count\n");
    for category in ProcessorCategory::ALL {
        let count = stats.per_category.get(&category).copied().unwrap_or(0);
        out.push_str(&format!("{category},{count}\n"));
    }
    out
}
