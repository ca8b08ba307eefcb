//! Description harvesting: walks an ordered chain of metadata sources per
//! processor, keeps the first value of each fragment kind, and assembles
//! the service description text. Source failures are logged, never fatal.

pub mod fetch;
mod registry;
mod wsdl;

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use fetch::{FixtureHttpFetcher, HttpFetcher, UreqFetcher, DEFAULT_TIMEOUT};
pub use wsdl::{parse_wsdl_metadata, MalformedWsdl};

use crate::text::normalize_whitespace;
use crate::workflow::Processor;
use fetch::url_key;

/// The four description fragments, in assembly order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FragmentKind {
    ServiceName,
    ServiceDescription,
    OperationName,
    OperationDescription,
}

pub const FRAGMENT_ORDER: [FragmentKind; 4] = [
    FragmentKind::ServiceName,
    FragmentKind::ServiceDescription,
    FragmentKind::OperationName,
    FragmentKind::OperationDescription,
];

impl std::fmt::Display for FragmentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            FragmentKind::ServiceName => "service_name",
            FragmentKind::ServiceDescription => "service_description",
            FragmentKind::OperationName => "operation_name",
            FragmentKind::OperationDescription => "operation_description",
        };
        write!(f, "{name}")
    }
}

impl FragmentKind {
    pub fn parse_name(name: &str) -> Option<FragmentKind> {
        match name {
            "service_name" => Some(FragmentKind::ServiceName),
            "service_description" => Some(FragmentKind::ServiceDescription),
            "operation_name" => Some(FragmentKind::OperationName),
            "operation_description" => Some(FragmentKind::OperationDescription),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fragment {
    pub kind: FragmentKind,
    pub text: String,
    /// Id of the metadata source that won this kind.
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceDescription {
    pub workflow_id: String,
    pub processor: String,
    /// In assembly order; at most one fragment per kind.
    pub fragments: Vec<Fragment>,
    pub assembled: String,
}

impl ServiceDescription {
    /// True when no source yielded anything beyond the service name.
    pub fn name_only(&self) -> bool {
        self.fragments
            .iter()
            .all(|f| f.kind == FragmentKind::ServiceName)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    EmbeddedWorkflow,
    WsdlDocument,
    BioMobyRegistry,
    CatalogueEndpointSearch,
    CatalogueFreeSearch,
    Fixture,
}

impl SourceKind {
    pub fn parse_name(name: &str) -> Option<SourceKind> {
        match name.to_lowercase().replace(['-', '_'], "").as_str() {
            "embeddedworkflow" | "embedded" => Some(SourceKind::EmbeddedWorkflow),
            "wsdldocument" | "wsdl" => Some(SourceKind::WsdlDocument),
            "biomobyregistry" | "biomoby" => Some(SourceKind::BioMobyRegistry),
            "catalogueendpointsearch" => Some(SourceKind::CatalogueEndpointSearch),
            "cataloguefreesearch" => Some(SourceKind::CatalogueFreeSearch),
            "fixture" => Some(SourceKind::Fixture),
            _ => None,
        }
    }
}

/// One entry of the source chain. The locator is a URI template for remote
/// kinds (placeholders `{endpoint}` and `{name}`) or a directory path for
/// the fixture kind. A template that consists of a single placeholder is
/// substituted verbatim; embedded placeholders are percent-encoded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetadataSource {
    pub id: String,
    pub kind: SourceKind,
    pub locator: String,
}

/// One chain step observed while harvesting a processor, for the JSONL log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HarvestLogEntry {
    pub workflow_id: String,
    pub processor: String,
    pub source: String,
    /// Fragment kinds this source won (empty for misses and errors).
    pub fragments: Vec<FragmentKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Harvests one processor through the chain. Sources are queried in order;
/// the first source yielding a fragment kind wins that kind; traversal
/// stops once all four kinds are filled. When nothing yields a service
/// name, the processor name itself backs the `service_name` fragment, so
/// `assembled` is never empty for a named processor.
pub fn harvest(
    workflow_id: &str,
    processor: &Processor,
    chain: &[MetadataSource],
    fetcher: &dyn HttpFetcher,
    timeout: Duration,
    log: &mut Vec<HarvestLogEntry>,
) -> ServiceDescription {
    let mut won: BTreeMap<FragmentKind, Fragment> = BTreeMap::new();
    for source in chain {
        if won.len() == FRAGMENT_ORDER.len() {
            break;
        }
        let mut entry = HarvestLogEntry {
            workflow_id: workflow_id.to_string(),
            processor: processor.name.clone(),
            source: source.id.clone(),
            fragments: Vec::new(),
            error: None,
        };
        match query_source(source, processor, fetcher, timeout) {
            Ok(yielded) => {
                for kind in FRAGMENT_ORDER {
                    let Some(text) = yielded.get(&kind) else {
                        continue;
                    };
                    if won.contains_key(&kind) {
                        continue;
                    }
                    won.insert(
                        kind,
                        Fragment {
                            kind,
                            text: text.clone(),
                            source: source.id.clone(),
                        },
                    );
                    entry.fragments.push(kind);
                }
            }
            Err(message) => entry.error = Some(message),
        }
        log.push(entry);
    }
    if let Entry::Vacant(slot) = won.entry(FragmentKind::ServiceName) {
        let name = normalize_whitespace(&processor.name);
        if !name.is_empty() {
            slot.insert(Fragment {
                kind: FragmentKind::ServiceName,
                text: name,
                source: "processor".to_string(),
            });
        }
    }
    let fragments: Vec<Fragment> = FRAGMENT_ORDER
        .iter()
        .filter_map(|kind| won.remove(kind))
        .collect();
    let assembled = fragments
        .iter()
        .map(|f| f.text.as_str())
        .collect::<Vec<_>>()
        .join(" ");
    ServiceDescription {
        workflow_id: workflow_id.to_string(),
        processor: processor.name.clone(),
        fragments,
        assembled,
    }
}

fn query_source(
    source: &MetadataSource,
    processor: &Processor,
    fetcher: &dyn HttpFetcher,
    timeout: Duration,
) -> Result<BTreeMap<FragmentKind, String>, String> {
    match source.kind {
        SourceKind::EmbeddedWorkflow => {
            let mut map = BTreeMap::new();
            let name = normalize_whitespace(&processor.name);
            if !name.is_empty() {
                map.insert(FragmentKind::ServiceName, name);
            }
            if let Some(description) = &processor.embedded_description {
                let text = normalize_whitespace(description);
                if !text.is_empty() {
                    map.insert(FragmentKind::ServiceDescription, text);
                }
            }
            if let Some(operation) = &processor.operation_name {
                let text = normalize_whitespace(operation);
                if !text.is_empty() {
                    map.insert(FragmentKind::OperationName, text);
                }
            }
            Ok(map)
        }
        SourceKind::WsdlDocument => {
            let url = expand_locator(&source.locator, processor)?;
            let bytes = fetcher.fetch(&url, timeout).map_err(|e| e.to_string())?;
            parse_wsdl_metadata(&bytes, processor.operation_name.as_deref())
                .map_err(|e| e.to_string())
        }
        SourceKind::BioMobyRegistry => {
            let url = expand_locator(&source.locator, processor)?;
            let bytes = fetcher.fetch(&url, timeout).map_err(|e| e.to_string())?;
            Ok(registry::parse_biomoby_entry(&bytes))
        }
        SourceKind::CatalogueEndpointSearch | SourceKind::CatalogueFreeSearch => {
            let url = expand_locator(&source.locator, processor)?;
            let bytes = fetcher.fetch(&url, timeout).map_err(|e| e.to_string())?;
            Ok(registry::parse_catalogue_result(&bytes))
        }
        SourceKind::Fixture => {
            let key = processor
                .endpoint
                .clone()
                .unwrap_or_else(|| processor.name.clone());
            let path = std::path::Path::new(&source.locator).join(url_key(&key));
            let bytes = std::fs::read(&path)
                .map_err(|e| format!("no fixture for key {key} ({}): {e}", path.display()))?;
            parse_fixture_fragments(&bytes)
        }
    }
}

/// Fixture payloads are JSON objects mapping fragment kind names to texts.
fn parse_fixture_fragments(bytes: &[u8]) -> Result<BTreeMap<FragmentKind, String>, String> {
    let raw: BTreeMap<String, String> =
        serde_json::from_slice(bytes).map_err(|e| format!("bad fixture payload: {e}"))?;
    let mut map = BTreeMap::new();
    for (key, value) in raw {
        let kind = FragmentKind::parse_name(&key)
            .ok_or_else(|| format!("bad fixture payload: unknown fragment kind {key}"))?;
        let text = normalize_whitespace(&value);
        if !text.is_empty() {
            map.insert(kind, text);
        }
    }
    Ok(map)
}

fn expand_locator(template: &str, processor: &Processor) -> Result<String, String> {
    let resolve = |placeholder: &str| -> Result<String, String> {
        match placeholder {
            "endpoint" => processor
                .endpoint
                .clone()
                .ok_or_else(|| format!("processor {} has no endpoint", processor.name)),
            "name" => Ok(processor.name.clone()),
            other => Err(format!("unknown locator placeholder {{{other}}}")),
        }
    };
    // a bare placeholder is the whole URL; inside a longer template the
    // value lands in a query string and gets percent-encoded
    if let Some(placeholder) = template
        .strip_prefix('{')
        .and_then(|s| s.strip_suffix('}'))
    {
        if !placeholder.contains(['{', '}']) {
            return resolve(placeholder);
        }
    }
    let mut out = String::new();
    let mut rest = template;
    while let Some(start) = rest.find('{') {
        out.push_str(&rest[..start]);
        let after = &rest[start + 1..];
        let Some(end) = after.find('}') else {
            return Err(format!("unbalanced braces in locator template {template}"));
        };
        out.push_str(&percent_encode(&resolve(&after[..end])?));
        rest = &after[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

fn percent_encode(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    for byte in value.bytes() {
        match byte {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'.' | b'_' | b'~' => {
                out.push(byte as char)
            }
            other => out.push_str(&format!("%{other:02X}")),
        }
    }
    out
}
