//! OPMW RDF emission: each surviving processor of a pruned workflow becomes
//! a process-template resource typed with its deduped annotation classes and
//! linked to its workflow and upstream processors.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::workflow::WorkflowGraph;

pub const OPMW_NS: &str = "http://www.opmw.org/ontology/";
pub const PROCESS_CLASS: &str = "http://www.opmw.org/ontology/WorkflowTemplateProcess";
pub const TEMPLATE_PREDICATE: &str = "http://www.opmw.org/ontology/template";
pub const USES_PREDICATE: &str = "http://www.opmw.org/ontology/uses";
pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
const MYEXPERIMENT_BASE: &str = "http://www.myexperiment.org/workflows/";

#[derive(Debug, Error)]
pub enum OpmwError {
    #[error("workflow {workflow} still contains shim processor {processor}; prune before emitting")]
    UnprunedInput { workflow: String, processor: String },
}

/// One triple; all terms are IRIs, literals are never emitted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RdfTriple {
    pub subject: String,
    pub predicate: String,
    pub object: String,
}

/// Controls URI minting. Numeric workflow ids map into myExperiment URL
/// space; anything else hangs off the fallback namespace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UriMintingPolicy {
    pub fallback_namespace: String,
}

impl Default for UriMintingPolicy {
    fn default() -> Self {
        UriMintingPolicy {
            fallback_namespace: "http://example.org/workflows/".to_string(),
        }
    }
}

impl UriMintingPolicy {
    pub fn workflow_uri(&self, id: &str) -> String {
        if !id.is_empty() && id.bytes().all(|b| b.is_ascii_digit()) {
            format!("{MYEXPERIMENT_BASE}{id}")
        } else {
            format!("{}{}", self.fallback_namespace, slug(id))
        }
    }
}

/// Lowercase alphanumeric-and-hyphen slug; non-alphanumeric runs collapse
/// to one hyphen. Degenerate names fall back to "process".
fn slug(name: &str) -> String {
    let mut out = String::new();
    let mut pending_hyphen = false;
    for ch in name.chars() {
        if ch.is_alphanumeric() {
            if pending_hyphen && !out.is_empty() {
                out.push('-');
            }
            pending_hyphen = false;
            out.extend(ch.to_lowercase());
        } else {
            pending_hyphen = true;
        }
    }
    if out.is_empty() {
        "process".to_string()
    } else {
        out
    }
}

/// Mints one URI per processor, in graph order. Slug collisions get numeric
/// suffixes (-2, -3, ...), so distinct processors always map to distinct
/// URIs and the mapping is stable across runs.
pub fn mint_processor_uris(
    workflow: &WorkflowGraph,
    policy: &UriMintingPolicy,
) -> BTreeMap<String, String> {
    let base = policy.workflow_uri(&workflow.id);
    let mut used: BTreeSet<String> = BTreeSet::new();
    let mut uris = BTreeMap::new();
    for processor in &workflow.processors {
        let base_slug = slug(&processor.name);
        let mut candidate = base_slug.clone();
        let mut suffix = 2;
        while !used.insert(candidate.clone()) {
            candidate = format!("{base_slug}-{suffix}");
            suffix += 1;
        }
        uris.insert(processor.name.clone(), format!("{base}/{candidate}"));
    }
    uris
}

/// Builds the triple list for one pruned workflow. Per processor: rdf:type
/// to the process-template class and to every annotation class (sorted),
/// one template link to the workflow URI, and one uses link per distinct
/// upstream processor.
pub fn opmw_triples(
    workflow: &WorkflowGraph,
    annotations: &BTreeMap<String, BTreeSet<String>>,
    policy: &UriMintingPolicy,
) -> Result<Vec<RdfTriple>, OpmwError> {
    if let Some(shim) = workflow.processors.iter().find(|p| p.category.is_shim()) {
        return Err(OpmwError::UnprunedInput {
            workflow: workflow.id.clone(),
            processor: shim.name.clone(),
        });
    }
    let workflow_uri = policy.workflow_uri(&workflow.id);
    let uris = mint_processor_uris(workflow, policy);

    let mut upstream: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for link in &workflow.links {
        let (Some(source), Some(sink)) = (&link.source_processor, &link.sink_processor) else {
            continue;
        };
        if source != sink && uris.contains_key(source) {
            upstream
                .entry(sink.as_str())
                .or_default()
                .insert(source.as_str());
        }
    }

    let empty = BTreeSet::new();
    let mut triples = Vec::new();
    for processor in &workflow.processors {
        let subject = uris[&processor.name].clone();
        triples.push(RdfTriple {
            subject: subject.clone(),
            predicate: RDF_TYPE.to_string(),
            object: PROCESS_CLASS.to_string(),
        });
        for class_uri in annotations.get(&processor.name).unwrap_or(&empty) {
            triples.push(RdfTriple {
                subject: subject.clone(),
                predicate: RDF_TYPE.to_string(),
                object: class_uri.clone(),
            });
        }
        triples.push(RdfTriple {
            subject: subject.clone(),
            predicate: TEMPLATE_PREDICATE.to_string(),
            object: workflow_uri.clone(),
        });
        if let Some(sources) = upstream.get(processor.name.as_str()) {
            for source in sources {
                triples.push(RdfTriple {
                    subject: subject.clone(),
                    predicate: USES_PREDICATE.to_string(),
                    object: uris[*source].clone(),
                });
            }
        }
    }
    Ok(triples)
}

/// Serializes the processor triples as Turtle with the opmw prefix bound.
pub fn emit_opmw(
    workflow: &WorkflowGraph,
    annotations: &BTreeMap<String, BTreeSet<String>>,
    policy: &UriMintingPolicy,
) -> Result<String, OpmwError> {
    let triples = opmw_triples(workflow, annotations, policy)?;
    Ok(to_turtle(&triples))
}

/// Turtle rendering: subjects grouped in first-appearance order, `a` for
/// rdf:type, opmw-namespace terms compacted to prefixed names.
pub fn to_turtle(triples: &[RdfTriple]) -> String {
    let mut out = format!("@prefix opmw: <{OPMW_NS}> .\n");
    let mut subjects: Vec<&str> = Vec::new();
    let mut grouped: BTreeMap<&str, Vec<&RdfTriple>> = BTreeMap::new();
    for triple in triples {
        if !grouped.contains_key(triple.subject.as_str()) {
            subjects.push(&triple.subject);
        }
        grouped.entry(&triple.subject).or_default().push(triple);
    }
    for subject in subjects {
        out.push('\n');
        out.push_str(&format!("<{}>\n", escape_iri(subject)));
        let group = &grouped[subject];
        let mut parts: Vec<String> = Vec::new();
        let types: Vec<&str> = group
            .iter()
            .filter(|t| t.predicate == RDF_TYPE)
            .map(|t| t.object.as_str())
            .collect();
        if !types.is_empty() {
            let objects: Vec<String> = types.iter().map(|o| render_term(o)).collect();
            parts.push(format!("    a {}", objects.join(", ")));
        }
        for predicate in [TEMPLATE_PREDICATE, USES_PREDICATE] {
            let objects: Vec<String> = group
                .iter()
                .filter(|t| t.predicate == predicate)
                .map(|t| render_term(&t.object))
                .collect();
            if !objects.is_empty() {
                parts.push(format!(
                    "    {} {}",
                    render_term(predicate),
                    objects.join(", ")
                ));
            }
        }
        out.push_str(&parts.join(" ;\n"));
        out.push_str(" .\n");
    }
    out
}

/// N-Triples rendering for the concatenated bulk dump.
pub fn to_ntriples(triples: &[RdfTriple]) -> String {
    let mut out = String::new();
    for t in triples {
        out.push_str(&format!(
            "<{}> <{}> <{}> .\n",
            escape_iri(&t.subject),
            escape_iri(&t.predicate),
            escape_iri(&t.object)
        ));
    }
    out
}

fn render_term(iri: &str) -> String {
    if let Some(local) = iri.strip_prefix(OPMW_NS) {
        if !local.is_empty()
            && local
                .bytes()
                .all(|b| b.is_ascii_alphanumeric() || b == b'_')
        {
            return format!("opmw:{local}");
        }
    }
    format!("<{}>", escape_iri(iri))
}

/// Percent-encodes the characters Turtle/N-Triples forbid inside IRI refs.
fn escape_iri(iri: &str) -> String {
    let mut out = String::with_capacity(iri.len());
    for byte in iri.bytes() {
        match byte {
            0x00..=0x20 | b'<' | b'>' | b'"' | b'{' | b'}' | b'|' | b'^' | b'`' | b'\\' => {
                out.push_str(&format!("%{byte:02X}"))
            }
            other => out.push(other as char),
        }
    }
    out
}
