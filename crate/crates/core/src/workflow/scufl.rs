//! Scufl (Taverna 1) dialect. Processor kind is carried by the first child
//! element of `<s:processor>`; links are `source`/`sink` attribute pairs in
//! `processor:port` form, a bare port name meaning a workflow port.

use roxmltree::{Document, Node};

use super::{
    parse_bool_attr, text_content, xml_escape, CategoryMap, DataLink, LinkCollector, Processor,
    ProcessorCategory, WorkflowError, WorkflowFormat, WorkflowGraph,
};

const ENDPOINT_CHILDREN: [&str; 3] = ["wsdl", "endpoint", "mobyEndpoint"];
const OPERATION_CHILDREN: [&str; 2] = ["operation", "serviceName"];

pub(super) fn parse(doc: &Document, categories: &CategoryMap) -> Result<WorkflowGraph, WorkflowError> {
    parse_element(doc.root_element(), categories)
}

fn parse_element(root: Node, categories: &CategoryMap) -> Result<WorkflowGraph, WorkflowError> {
    let mut graph = WorkflowGraph::new("", WorkflowFormat::Scufl);

    for child in root.children().filter(Node::is_element) {
        match child.tag_name().name() {
            "workflowdescription" => {
                if let Some(lsid) = child.attribute("lsid") {
                    graph.id = lsid.to_string();
                }
                if let Some(title) = child.attribute("title") {
                    graph.title = title.to_string();
                }
                graph.description = text_content(child);
            }
            "processor" => graph.processors.push(parse_processor(child, categories)?),
            "source" => {
                if let Some(name) = child.attribute("name") {
                    graph.input_ports.push(name.to_string());
                }
            }
            "sink" => {
                if let Some(name) = child.attribute("name") {
                    graph.output_ports.push(name.to_string());
                }
            }
            _ => {}
        }
    }
    if graph.id.is_empty() {
        graph.id = graph.title.clone();
    }

    let mut collector = LinkCollector::new();
    for child in root.children().filter(Node::is_element) {
        if child.tag_name().name() == "link" {
            let source = child.attribute("source").unwrap_or("");
            let sink = child.attribute("sink").unwrap_or("");
            if source.is_empty() || sink.is_empty() {
                continue;
            }
            let (sp, spo) = split_endpoint(source);
            let (kp, kpo) = split_endpoint(sink);
            let mut link = DataLink::new(sp.as_deref(), &spo, kp.as_deref(), &kpo);
            link.inferred = parse_bool_attr(child.attribute("inferred"));
            collector.push(link, &mut graph)?;
        }
    }
    graph.links = collector.finish();
    Ok(graph)
}

/// `proc:port` names a processor port, a bare name names a workflow port.
fn split_endpoint(value: &str) -> (Option<String>, String) {
    match value.split_once(':') {
        Some((proc_name, port)) => (Some(proc_name.to_string()), port.to_string()),
        None => (None, value.to_string()),
    }
}

fn parse_processor(node: Node, categories: &CategoryMap) -> Result<Processor, WorkflowError> {
    let name = node.attribute("name").unwrap_or("").to_string();
    let mut processor = Processor::new(name, ProcessorCategory::Other);
    let mut kind_seen = false;
    for child in node.children().filter(Node::is_element) {
        let tag = child.tag_name().name();
        if tag == "description" {
            let text = text_content(child);
            if !text.is_empty() {
                processor.embedded_description = Some(text);
            }
            continue;
        }
        if kind_seen {
            // first non-description child element decides the kind
            continue;
        }
        kind_seen = true;
        processor.category = categories.scufl_category(tag);
        if processor.category == ProcessorCategory::NestedWorkflow {
            if let Some(inner) = child
                .children()
                .filter(Node::is_element)
                .find(|n| n.tag_name().name() == "scufl")
            {
                let nested = parse_element(inner, categories)?;
                processor.nested = Some(Box::new(nested));
            }
        } else {
            read_binding(child, &mut processor);
        }
    }
    if processor.embedded_description.is_none() {
        if let Some(nested) = &processor.nested {
            if !nested.description.is_empty() {
                processor.embedded_description = Some(nested.description.clone());
            }
        }
    }
    Ok(processor)
}

/// Endpoint and operation live either in well-known child elements or, for
/// the local-worker and soaplab shapes, in the kind element's text content.
fn read_binding(kind_element: Node, processor: &mut Processor) {
    for child in kind_element.children().filter(Node::is_element) {
        let tag = child.tag_name().name();
        if ENDPOINT_CHILDREN.contains(&tag) && processor.endpoint.is_none() {
            let text = text_content(child);
            if !text.is_empty() {
                processor.endpoint = Some(text);
            }
        } else if OPERATION_CHILDREN.contains(&tag) && processor.operation_name.is_none() {
            let text = text_content(child);
            if !text.is_empty() {
                processor.operation_name = Some(text);
            }
        }
    }
    if processor.endpoint.is_none() {
        let text = text_content(kind_element);
        if !text.is_empty() {
            processor.endpoint = Some(text);
        }
    }
}

pub(super) fn serialize(workflow: &WorkflowGraph) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    write_graph(workflow, &mut out, 0);
    out
}

fn write_graph(workflow: &WorkflowGraph, out: &mut String, depth: usize) {
    let pad = "  ".repeat(depth);
    if depth == 0 {
        out.push_str(
            "<s:scufl xmlns:s=\"http://org.embl.ebi.escience/xscufl/0.1alpha\" version=\"0.2\">\n",
        );
    } else {
        out.push_str(&format!("{pad}<s:scufl version=\"0.2\">\n"));
    }
    let inner = "  ".repeat(depth + 1);
    out.push_str(&format!(
        "{inner}<s:workflowdescription lsid=\"{}\" title=\"{}\">{}</s:workflowdescription>\n",
        xml_escape(&workflow.id),
        xml_escape(&workflow.title),
        xml_escape(&workflow.description)
    ));
    for processor in &workflow.processors {
        write_processor(processor, out, depth + 1);
    }
    for link in &workflow.links {
        let inferred = if link.inferred { " inferred=\"true\"" } else { "" };
        out.push_str(&format!(
            "{inner}<s:link source=\"{}\" sink=\"{}\"{inferred} />\n",
            xml_escape(&endpoint_ref(&link.source_processor, &link.source_port)),
            xml_escape(&endpoint_ref(&link.sink_processor, &link.sink_port)),
        ));
    }
    for port in &workflow.input_ports {
        out.push_str(&format!("{inner}<s:source name=\"{}\" />\n", xml_escape(port)));
    }
    for port in &workflow.output_ports {
        out.push_str(&format!("{inner}<s:sink name=\"{}\" />\n", xml_escape(port)));
    }
    out.push_str(&format!("{pad}</s:scufl>\n"));
}

fn endpoint_ref(processor: &Option<String>, port: &str) -> String {
    match processor {
        Some(name) => format!("{name}:{port}"),
        None => port.to_string(),
    }
}

fn kind_element(category: ProcessorCategory) -> &'static str {
    use ProcessorCategory::*;
    match category {
        XmlSplitter => "xmlsplitter",
        SpreadsheetImport => "spreadsheetimport",
        StringConstant => "stringconstant",
        Beanshell => "beanshell",
        LocalService => "local",
        Xpath => "xpath",
        Wsdl => "arbitrarywsdl",
        Rest => "rest",
        BioMoby => "biomobywsdl",
        BioMart => "biomart",
        Soaplab => "soaplabwsdl",
        Rshell => "rshell",
        NestedWorkflow => "workflow",
        Other => "other",
    }
}

fn binding_children(category: ProcessorCategory) -> (&'static str, &'static str) {
    use ProcessorCategory::*;
    match category {
        Wsdl => ("wsdl", "operation"),
        BioMoby => ("mobyEndpoint", "serviceName"),
        _ => ("endpoint", "operation"),
    }
}

fn write_processor(processor: &Processor, out: &mut String, depth: usize) {
    let pad = "  ".repeat(depth);
    let inner = "  ".repeat(depth + 1);
    out.push_str(&format!(
        "{pad}<s:processor name=\"{}\">\n",
        xml_escape(&processor.name)
    ));
    if let Some(description) = &processor.embedded_description {
        out.push_str(&format!(
            "{inner}<s:description>{}</s:description>\n",
            xml_escape(description)
        ));
    }
    let kind = kind_element(processor.category);
    if processor.category == ProcessorCategory::NestedWorkflow {
        out.push_str(&format!("{inner}<s:{kind}>\n"));
        if let Some(nested) = &processor.nested {
            write_graph(nested, out, depth + 2);
        }
        out.push_str(&format!("{inner}</s:{kind}>\n"));
    } else if text_content_categories(processor.category) {
        // local workers and soaplab carry the endpoint as element text
        let endpoint = processor.endpoint.as_deref().unwrap_or("");
        match &processor.operation_name {
            Some(op) => out.push_str(&format!(
                "{inner}<s:{kind}>{}<s:operation>{}</s:operation></s:{kind}>\n",
                xml_escape(endpoint),
                xml_escape(op)
            )),
            None => out.push_str(&format!(
                "{inner}<s:{kind}>{}</s:{kind}>\n",
                xml_escape(endpoint)
            )),
        }
    } else {
        let (endpoint_tag, operation_tag) = binding_children(processor.category);
        let mut parts = String::new();
        if let Some(endpoint) = &processor.endpoint {
            parts.push_str(&format!(
                "<s:{endpoint_tag}>{}</s:{endpoint_tag}>",
                xml_escape(endpoint)
            ));
        }
        if let Some(op) = &processor.operation_name {
            parts.push_str(&format!(
                "<s:{operation_tag}>{}</s:{operation_tag}>",
                xml_escape(op)
            ));
        }
        if parts.is_empty() {
            out.push_str(&format!("{inner}<s:{kind} />\n"));
        } else {
            out.push_str(&format!("{inner}<s:{kind}>{parts}</s:{kind}>\n"));
        }
    }
    out.push_str(&format!("{pad}</s:processor>\n"));
}

fn text_content_categories(category: ProcessorCategory) -> bool {
    matches!(
        category,
        ProcessorCategory::LocalService | ProcessorCategory::Soaplab
    )
}
