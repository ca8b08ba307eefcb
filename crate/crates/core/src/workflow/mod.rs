//! Workflow document model for the two legacy Taverna dialects (scufl and
//! t2flow): parsing into a uniform graph, serialization back out, and the
//! processor category table that drives shim classification.

mod scufl;
mod t2flow;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Source dialect of a workflow document.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WorkflowFormat {
    #[default]
    Scufl,
    T2flow,
}

impl fmt::Display for WorkflowFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WorkflowFormat::Scufl => write!(f, "scufl"),
            WorkflowFormat::T2flow => write!(f, "t2flow"),
        }
    }
}

/// Processor classification. The first six variants are shims (data
/// adaptation steps with no analytical meaning of their own), the next seven
/// are substantive services, `Other` is anything the mapping table does not
/// recognize.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum ProcessorCategory {
    XmlSplitter,
    SpreadsheetImport,
    StringConstant,
    Beanshell,
    LocalService,
    Xpath,
    Wsdl,
    Rest,
    BioMoby,
    BioMart,
    Soaplab,
    Rshell,
    NestedWorkflow,
    Other,
}

impl ProcessorCategory {
    pub const ALL: [ProcessorCategory; 14] = [
        ProcessorCategory::XmlSplitter,
        ProcessorCategory::SpreadsheetImport,
        ProcessorCategory::StringConstant,
        ProcessorCategory::Beanshell,
        ProcessorCategory::LocalService,
        ProcessorCategory::Xpath,
        ProcessorCategory::Wsdl,
        ProcessorCategory::Rest,
        ProcessorCategory::BioMoby,
        ProcessorCategory::BioMart,
        ProcessorCategory::Soaplab,
        ProcessorCategory::Rshell,
        ProcessorCategory::NestedWorkflow,
        ProcessorCategory::Other,
    ];

    /// Data-adaptation step with no analytical meaning of its own.
    pub fn is_shim(self) -> bool {
        matches!(
            self,
            ProcessorCategory::XmlSplitter
                | ProcessorCategory::SpreadsheetImport
                | ProcessorCategory::StringConstant
                | ProcessorCategory::Beanshell
                | ProcessorCategory::LocalService
                | ProcessorCategory::Xpath
        )
    }

    /// Substantive service category. `Other` is neither shim nor non-shim.
    pub fn is_non_shim(self) -> bool {
        matches!(
            self,
            ProcessorCategory::Wsdl
                | ProcessorCategory::Rest
                | ProcessorCategory::BioMoby
                | ProcessorCategory::BioMart
                | ProcessorCategory::Soaplab
                | ProcessorCategory::Rshell
                | ProcessorCategory::NestedWorkflow
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            ProcessorCategory::XmlSplitter => "XmlSplitter",
            ProcessorCategory::SpreadsheetImport => "SpreadsheetImport",
            ProcessorCategory::StringConstant => "StringConstant",
            ProcessorCategory::Beanshell => "Beanshell",
            ProcessorCategory::LocalService => "LocalService",
            ProcessorCategory::Xpath => "Xpath",
            ProcessorCategory::Wsdl => "Wsdl",
            ProcessorCategory::Rest => "Rest",
            ProcessorCategory::BioMoby => "BioMoby",
            ProcessorCategory::BioMart => "BioMart",
            ProcessorCategory::Soaplab => "Soaplab",
            ProcessorCategory::Rshell => "Rshell",
            ProcessorCategory::NestedWorkflow => "NestedWorkflow",
            ProcessorCategory::Other => "Other",
        }
    }

    /// Case-insensitive lookup by variant name, for config tables.
    pub fn parse_name(name: &str) -> Option<ProcessorCategory> {
        let folded = name.to_lowercase();
        Self::ALL
            .into_iter()
            .find(|c| c.name().to_lowercase() == folded)
    }
}

impl fmt::Display for ProcessorCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

/// One step of a workflow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Processor {
    pub name: String,
    pub category: ProcessorCategory,
    /// Description text carried by the document itself. scufl has one per
    /// processor; t2flow only for nested workflows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedded_description: Option<String>,
    /// Service URL or registry key, when the dialect records one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    /// Bound operation or registry service name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operation_name: Option<String>,
    /// Inner graph, populated only for `NestedWorkflow`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nested: Option<Box<WorkflowGraph>>,
}

impl Processor {
    pub fn new(name: impl Into<String>, category: ProcessorCategory) -> Self {
        Processor {
            name: name.into(),
            category,
            embedded_description: None,
            endpoint: None,
            operation_name: None,
            nested: None,
        }
    }
}

/// A directed data edge. `None` on the source side means a workflow input
/// port, `None` on the sink side a workflow output port.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DataLink {
    pub source_processor: Option<String>,
    pub source_port: String,
    pub sink_processor: Option<String>,
    pub sink_port: String,
    /// True for links synthesized by shim pruning rather than present in the
    /// source document.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub inferred: bool,
}

impl DataLink {
    pub fn new(
        source_processor: Option<&str>,
        source_port: &str,
        sink_processor: Option<&str>,
        sink_port: &str,
    ) -> Self {
        DataLink {
            source_processor: source_processor.map(str::to_string),
            source_port: source_port.to_string(),
            sink_processor: sink_processor.map(str::to_string),
            sink_port: sink_port.to_string(),
            inferred: false,
        }
    }

    /// Endpoint tuple used for dedup and structural comparison.
    pub fn key(&self) -> (Option<&str>, &str, Option<&str>, &str) {
        (
            self.source_processor.as_deref(),
            &self.source_port,
            self.sink_processor.as_deref(),
            &self.sink_port,
        )
    }
}

/// Parsed workflow: processors, data links and the workflow-level metadata
/// the relevance filter reads.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct WorkflowGraph {
    /// Opaque identifier, typically the file stem or a repository numeric id.
    pub id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub tags: Vec<String>,
    pub format: WorkflowFormat,
    pub processors: Vec<Processor>,
    pub links: Vec<DataLink>,
    pub input_ports: Vec<String>,
    pub output_ports: Vec<String>,
}

impl WorkflowGraph {
    pub fn new(id: impl Into<String>, format: WorkflowFormat) -> Self {
        WorkflowGraph {
            id: id.into(),
            title: String::new(),
            description: String::new(),
            tags: Vec::new(),
            format,
            processors: Vec::new(),
            links: Vec::new(),
            input_ports: Vec::new(),
            output_ports: Vec::new(),
        }
    }

    pub fn processor(&self, name: &str) -> Option<&Processor> {
        self.processors.iter().find(|p| p.name == name)
    }

    /// Structural equality on processors, categories, links and ports.
    /// Ignores identifier and metadata fields, compares links as sets.
    pub fn same_structure(&self, other: &WorkflowGraph) -> bool {
        if self.processors.len() != other.processors.len() {
            return false;
        }
        for (a, b) in self.processors.iter().zip(&other.processors) {
            if a.name != b.name
                || a.category != b.category
                || a.embedded_description != b.embedded_description
                || a.endpoint != b.endpoint
                || a.operation_name != b.operation_name
            {
                return false;
            }
            match (&a.nested, &b.nested) {
                (None, None) => {}
                (Some(x), Some(y)) if x.same_structure(y) => {}
                _ => return false,
            }
        }
        let mut la: Vec<&DataLink> = self.links.iter().collect();
        let mut lb: Vec<&DataLink> = other.links.iter().collect();
        la.sort();
        lb.sort();
        la == lb && self.input_ports == other.input_ports && self.output_ports == other.output_ports
    }
}

#[derive(Debug, Error)]
pub enum WorkflowError {
    #[error("malformed xml: {0}")]
    MalformedXml(String),
    #[error("unknown dialect: root namespace {0:?} matches neither scufl nor t2flow")]
    UnknownDialect(Option<String>),
    #[error("dangling link: processor {0} is not declared")]
    DanglingLink(String),
}

/// Mapping from dialect-specific processor markers to categories: scufl
/// child-element local names and t2flow activity class strings. The default
/// table covers the stock Taverna vocabulary; config may extend or override
/// entries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryMap {
    pub scufl: BTreeMap<String, ProcessorCategory>,
    pub t2flow: BTreeMap<String, ProcessorCategory>,
}

impl Default for CategoryMap {
    fn default() -> Self {
        use ProcessorCategory::*;
        let scufl = [
            ("xmlsplitter", XmlSplitter),
            ("spreadsheetimport", SpreadsheetImport),
            ("stringconstant", StringConstant),
            ("beanshell", Beanshell),
            ("local", LocalService),
            ("xpath", Xpath),
            ("arbitrarywsdl", Wsdl),
            ("rest", Rest),
            ("biomobywsdl", BioMoby),
            ("biomart", BioMart),
            ("soaplabwsdl", Soaplab),
            ("rshell", Rshell),
            ("workflow", NestedWorkflow),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        let t2flow = [
            (
                "net.sf.taverna.t2.activities.wsdl.xmlsplitter.XMLInputSplitterActivity",
                XmlSplitter,
            ),
            (
                "net.sf.taverna.t2.activities.wsdl.xmlsplitter.XMLOutputSplitterActivity",
                XmlSplitter,
            ),
            (
                "net.sf.taverna.t2.activities.spreadsheet.SpreadsheetImportActivity",
                SpreadsheetImport,
            ),
            (
                "net.sf.taverna.t2.activities.stringconstant.StringConstantActivity",
                StringConstant,
            ),
            (
                "net.sf.taverna.t2.activities.beanshell.BeanshellActivity",
                Beanshell,
            ),
            (
                "net.sf.taverna.t2.activities.localworker.LocalworkerActivity",
                LocalService,
            ),
            ("net.sf.taverna.t2.activities.xpath.XPathActivity", Xpath),
            ("net.sf.taverna.t2.activities.wsdl.WSDLActivity", Wsdl),
            ("net.sf.taverna.t2.activities.rest.RESTActivity", Rest),
            (
                "net.sf.taverna.t2.activities.biomoby.BiomobyActivity",
                BioMoby,
            ),
            (
                "net.sf.taverna.t2.activities.biomart.BiomartActivity",
                BioMart,
            ),
            (
                "net.sf.taverna.t2.activities.soaplab.SoaplabActivity",
                Soaplab,
            ),
            (
                "net.sf.taverna.t2.activities.rshell.RshellActivity",
                Rshell,
            ),
            (
                "net.sf.taverna.t2.activities.dataflow.DataflowActivity",
                NestedWorkflow,
            ),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        CategoryMap { scufl, t2flow }
    }
}

impl CategoryMap {
    pub fn scufl_category(&self, element: &str) -> ProcessorCategory {
        self.scufl
            .get(element)
            .copied()
            .unwrap_or(ProcessorCategory::Other)
    }

    pub fn t2flow_category(&self, class: &str) -> ProcessorCategory {
        self.t2flow
            .get(class)
            .copied()
            .unwrap_or(ProcessorCategory::Other)
    }
}

/// Parses a workflow document. With no `format_hint` the dialect is detected
/// from the root element namespace ("xscufl" vs "/t2flow"). Bytes are decoded
/// as UTF-8 with lossy replacement, matching the hygiene of legacy corpora.
pub fn parse_workflow(
    document: &[u8],
    format_hint: Option<WorkflowFormat>,
    categories: &CategoryMap,
) -> Result<WorkflowGraph, WorkflowError> {
    let textual = String::from_utf8_lossy(document);
    let doc = roxmltree::Document::parse(&textual)
        .map_err(|e| WorkflowError::MalformedXml(e.to_string()))?;
    let root_ns = doc.root_element().tag_name().namespace().map(str::to_string);
    let format = match format_hint {
        Some(f) => f,
        None => match &root_ns {
            Some(ns) if ns.contains("xscufl") => WorkflowFormat::Scufl,
            Some(ns) if ns.contains("/t2flow") => WorkflowFormat::T2flow,
            _ => return Err(WorkflowError::UnknownDialect(root_ns)),
        },
    };
    match format {
        WorkflowFormat::Scufl => scufl::parse(&doc, categories),
        WorkflowFormat::T2flow => t2flow::parse(&doc, categories),
    }
}

/// Serializes a graph back into its own dialect. Always succeeds; the output
/// re-parses to a structurally equal graph.
pub fn serialize_workflow(workflow: &WorkflowGraph) -> Vec<u8> {
    let text = match workflow.format {
        WorkflowFormat::Scufl => scufl::serialize(workflow),
        WorkflowFormat::T2flow => t2flow::serialize(workflow),
    };
    text.into_bytes()
}

/// Escapes text content and attribute values for XML output.
pub(crate) fn xml_escape(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    for ch in value.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(ch),
        }
    }
    out
}

/// Concatenated trimmed text of an element's direct text children.
pub(crate) fn text_content(node: roxmltree::Node<'_, '_>) -> String {
    let mut out = String::new();
    for child in node.children() {
        if child.is_text() {
            if let Some(t) = child.text() {
                out.push_str(t);
            }
        }
    }
    out.trim().to_string()
}

/// Shared link bookkeeping for both dialect parsers: drops self-loops,
/// deduplicates endpoint tuples, validates processor references and
/// leniently declares workflow ports that links mention but the port
/// lists omit.
pub(crate) struct LinkCollector {
    links: Vec<DataLink>,
}

impl LinkCollector {
    pub(crate) fn new() -> Self {
        LinkCollector { links: Vec::new() }
    }

    pub(crate) fn push(
        &mut self,
        link: DataLink,
        graph: &mut WorkflowGraph,
    ) -> Result<(), WorkflowError> {
        if let Some(name) = &link.source_processor {
            if graph.processor(name).is_none() {
                return Err(WorkflowError::DanglingLink(name.clone()));
            }
        } else if !graph.input_ports.contains(&link.source_port) {
            graph.input_ports.push(link.source_port.clone());
        }
        if let Some(name) = &link.sink_processor {
            if graph.processor(name).is_none() {
                return Err(WorkflowError::DanglingLink(name.clone()));
            }
        } else if !graph.output_ports.contains(&link.sink_port) {
            graph.output_ports.push(link.sink_port.clone());
        }
        if link.source_processor.is_some() && link.source_processor == link.sink_processor {
            return Ok(());
        }
        if self.links.iter().any(|l| l.key() == link.key()) {
            return Ok(());
        }
        self.links.push(link);
        Ok(())
    }

    pub(crate) fn finish(self) -> Vec<DataLink> {
        self.links
    }
}

pub(crate) fn parse_bool_attr(value: Option<&str>) -> bool {
    matches!(value, Some("true") | Some("1"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shim_and_non_shim_partition() {
        use ProcessorCategory::*;
        let shims = [
            XmlSplitter,
            SpreadsheetImport,
            StringConstant,
            Beanshell,
            LocalService,
            Xpath,
        ];
        let non_shims = [Wsdl, Rest, BioMoby, BioMart, Soaplab, Rshell, NestedWorkflow];
        for c in shims {
            assert!(c.is_shim() && !c.is_non_shim(), "{c}");
        }
        for c in non_shims {
            assert!(c.is_non_shim() && !c.is_shim(), "{c}");
        }
        assert!(!Other.is_shim() && !Other.is_non_shim());
    }

    #[test]
    fn category_names_round_trip() {
        for c in ProcessorCategory::ALL {
            assert_eq!(ProcessorCategory::parse_name(c.name()), Some(c));
            assert_eq!(ProcessorCategory::parse_name(&c.name().to_uppercase()), Some(c));
        }
        assert_eq!(ProcessorCategory::parse_name("nosuch"), None);
    }

    #[test]
    fn default_map_sends_unknown_markers_to_other() {
        let map = CategoryMap::default();
        assert_eq!(map.scufl_category("arbitrarywsdl"), ProcessorCategory::Wsdl);
        assert_eq!(map.scufl_category("mystery"), ProcessorCategory::Other);
        assert_eq!(
            map.t2flow_category("net.sf.taverna.t2.activities.beanshell.BeanshellActivity"),
            ProcessorCategory::Beanshell
        );
        assert_eq!(map.t2flow_category("com.example.Custom"), ProcessorCategory::Other);
    }

    #[test]
    fn unknown_dialect_is_rejected() {
        let doc = b"<root xmlns=\"http://example.org/unrelated\"/>";
        let err = parse_workflow(doc, None, &CategoryMap::default()).unwrap_err();
        assert!(matches!(err, WorkflowError::UnknownDialect(_)));
    }

    #[test]
    fn malformed_xml_is_reported() {
        let err = parse_workflow(b"<scufl", None, &CategoryMap::default()).unwrap_err();
        assert!(matches!(err, WorkflowError::MalformedXml(_)));
    }
}
