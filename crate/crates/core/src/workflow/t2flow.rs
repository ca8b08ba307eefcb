//! T2flow (Taverna 2) dialect. Processor kind is the activity class string;
//! links are structured sink/source elements; nested workflows are sibling
//! `<dataflow>` elements referenced by id from a dataflow activity.

use std::collections::BTreeMap;

use roxmltree::{Document, Node};

use super::{
    parse_bool_attr, text_content, xml_escape, CategoryMap, DataLink, LinkCollector, Processor,
    ProcessorCategory, WorkflowError, WorkflowFormat, WorkflowGraph,
};

pub(super) fn parse(doc: &Document, categories: &CategoryMap) -> Result<WorkflowGraph, WorkflowError> {
    let root = doc.root_element();
    let dataflows: Vec<Node> = root
        .children()
        .filter(Node::is_element)
        .filter(|n| n.tag_name().name() == "dataflow")
        .collect();
    let by_id: BTreeMap<&str, Node> = dataflows
        .iter()
        .filter_map(|n| n.attribute("id").map(|id| (id, *n)))
        .collect();
    let top = dataflows
        .iter()
        .find(|n| n.attribute("role") == Some("top"))
        .or_else(|| dataflows.first())
        .ok_or_else(|| WorkflowError::MalformedXml("no dataflow element".to_string()))?;
    let mut in_progress = Vec::new();
    parse_dataflow(*top, &by_id, categories, &mut in_progress)
}

fn parse_dataflow(
    node: Node,
    by_id: &BTreeMap<&str, Node>,
    categories: &CategoryMap,
    in_progress: &mut Vec<String>,
) -> Result<WorkflowGraph, WorkflowError> {
    let mut graph = WorkflowGraph::new("", WorkflowFormat::T2flow);
    if let Some(own_id) = node.attribute("id") {
        in_progress.push(own_id.to_string());
    }

    for child in node.children().filter(Node::is_element) {
        match child.tag_name().name() {
            "name" => graph.id = text_content(child),
            "description" => graph.description = text_content(child),
            "inputPorts" => collect_ports(child, &mut graph.input_ports),
            "outputPorts" => collect_ports(child, &mut graph.output_ports),
            "processors" => {
                for proc_node in child
                    .children()
                    .filter(Node::is_element)
                    .filter(|n| n.tag_name().name() == "processor")
                {
                    graph
                        .processors
                        .push(parse_processor(proc_node, by_id, categories, in_progress)?);
                }
            }
            _ => {}
        }
    }

    let mut collector = LinkCollector::new();
    for child in node.children().filter(Node::is_element) {
        if child.tag_name().name() != "datalinks" {
            continue;
        }
        for link_node in child
            .children()
            .filter(Node::is_element)
            .filter(|n| n.tag_name().name() == "datalink")
        {
            let mut source = None;
            let mut sink = None;
            for half in link_node.children().filter(Node::is_element) {
                match half.tag_name().name() {
                    "source" => source = Some(parse_link_half(half)),
                    "sink" => sink = Some(parse_link_half(half)),
                    _ => {}
                }
            }
            let (Some((sp, spo)), Some((kp, kpo))) = (source, sink) else {
                continue;
            };
            let mut link = DataLink::new(sp.as_deref(), &spo, kp.as_deref(), &kpo);
            link.inferred = parse_bool_attr(link_node.attribute("inferred"));
            collector.push(link, &mut graph)?;
        }
    }
    graph.links = collector.finish();

    if node.attribute("id").is_some() {
        in_progress.pop();
    }
    Ok(graph)
}

fn collect_ports(container: Node, out: &mut Vec<String>) {
    for port in container
        .children()
        .filter(Node::is_element)
        .filter(|n| n.tag_name().name() == "port")
    {
        if let Some(name_node) = port
            .children()
            .filter(Node::is_element)
            .find(|n| n.tag_name().name() == "name")
        {
            let name = text_content(name_node);
            if !name.is_empty() {
                out.push(name);
            }
        }
    }
}

/// A link half: `type="processor"` carries processor+port children,
/// `type="dataflow"` a workflow port, `type="merge"` a processor with the
/// synthesized port name "merged" when no port child is present.
fn parse_link_half(half: Node) -> (Option<String>, String) {
    let kind = half.attribute("type").unwrap_or("processor");
    let mut processor = None;
    let mut port = None;
    for child in half.children().filter(Node::is_element) {
        match child.tag_name().name() {
            "processor" => processor = Some(text_content(child)),
            "port" => port = Some(text_content(child)),
            _ => {}
        }
    }
    match kind {
        "dataflow" => (None, port.unwrap_or_default()),
        "merge" => (processor, port.unwrap_or_else(|| "merged".to_string())),
        _ => (processor, port.unwrap_or_default()),
    }
}

fn parse_processor(
    node: Node,
    by_id: &BTreeMap<&str, Node>,
    categories: &CategoryMap,
    in_progress: &mut Vec<String>,
) -> Result<Processor, WorkflowError> {
    let mut processor = Processor::new("", ProcessorCategory::Other);
    for child in node.children().filter(Node::is_element) {
        if child.tag_name().name() == "name" {
            processor.name = text_content(child);
            break;
        }
    }
    let Some(activity) = node
        .descendants()
        .find(|n| n.is_element() && n.tag_name().name() == "activity")
    else {
        return Ok(processor);
    };
    let class = activity
        .descendants()
        .find(|n| n.is_element() && n.tag_name().name() == "class")
        .map(text_content)
        .unwrap_or_default();
    processor.category = categories.t2flow_category(&class);

    let config = activity
        .children()
        .filter(Node::is_element)
        .find(|n| n.tag_name().name() == "configBean");
    if processor.category == ProcessorCategory::NestedWorkflow {
        let reference = config.and_then(|c| {
            c.descendants()
                .find(|n| n.is_element() && n.tag_name().name() == "dataflow")
                .and_then(|n| n.attribute("ref"))
        });
        if let Some(reference) = reference {
            // a ref back into an ancestor dataflow would recurse forever
            if !in_progress.iter().any(|id| id == reference) {
                if let Some(target) = by_id.get(reference) {
                    let nested = parse_dataflow(*target, by_id, categories, in_progress)?;
                    if !nested.description.is_empty() {
                        processor.embedded_description = Some(nested.description.clone());
                    }
                    processor.nested = Some(Box::new(nested));
                }
            }
        }
    } else if let Some(config) = config {
        for child in config.descendants().filter(Node::is_element) {
            match child.tag_name().name() {
                "wsdl" | "endpoint" | "mobyEndpoint" if processor.endpoint.is_none() => {
                    let text = text_content(child);
                    if !text.is_empty() {
                        processor.endpoint = Some(text);
                    }
                }
                "operation" | "serviceName" if processor.operation_name.is_none() => {
                    let text = text_content(child);
                    if !text.is_empty() {
                        processor.operation_name = Some(text);
                    }
                }
                _ => {}
            }
        }
    }
    Ok(processor)
}

fn activity_class(category: ProcessorCategory) -> &'static str {
    use ProcessorCategory::*;
    match category {
        XmlSplitter => "net.sf.taverna.t2.activities.wsdl.xmlsplitter.XMLInputSplitterActivity",
        SpreadsheetImport => "net.sf.taverna.t2.activities.spreadsheet.SpreadsheetImportActivity",
        StringConstant => "net.sf.taverna.t2.activities.stringconstant.StringConstantActivity",
        Beanshell => "net.sf.taverna.t2.activities.beanshell.BeanshellActivity",
        LocalService => "net.sf.taverna.t2.activities.localworker.LocalworkerActivity",
        Xpath => "net.sf.taverna.t2.activities.xpath.XPathActivity",
        Wsdl => "net.sf.taverna.t2.activities.wsdl.WSDLActivity",
        Rest => "net.sf.taverna.t2.activities.rest.RESTActivity",
        BioMoby => "net.sf.taverna.t2.activities.biomoby.BiomobyActivity",
        BioMart => "net.sf.taverna.t2.activities.biomart.BiomartActivity",
        Soaplab => "net.sf.taverna.t2.activities.soaplab.SoaplabActivity",
        Rshell => "net.sf.taverna.t2.activities.rshell.RshellActivity",
        NestedWorkflow => "net.sf.taverna.t2.activities.dataflow.DataflowActivity",
        Other => "unknown.Activity",
    }
}

pub(super) fn serialize(workflow: &WorkflowGraph) -> String {
    // sibling dataflows in document order: top first, nested in visit order
    let mut queue: Vec<(&WorkflowGraph, String)> = Vec::new();
    let mut assigned = 0usize;
    collect_dataflows(workflow, &mut queue, &mut assigned);
    let refs: BTreeMap<*const WorkflowGraph, String> = queue
        .iter()
        .map(|(g, id)| (*g as *const WorkflowGraph, id.clone()))
        .collect();

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<workflow xmlns=\"http://taverna.sf.net/2008/xml/t2flow\" version=\"1\">\n");
    for (index, (graph, df_id)) in queue.iter().enumerate() {
        let role = if index == 0 { "top" } else { "nested" };
        write_dataflow(graph, df_id, role, &refs, &mut out);
    }
    out.push_str("</workflow>\n");
    out
}

fn collect_dataflows<'a>(
    graph: &'a WorkflowGraph,
    queue: &mut Vec<(&'a WorkflowGraph, String)>,
    assigned: &mut usize,
) {
    let id = format!("df{}", *assigned);
    *assigned += 1;
    queue.push((graph, id));
    for processor in &graph.processors {
        if let Some(nested) = &processor.nested {
            collect_dataflows(nested, queue, assigned);
        }
    }
}

fn write_dataflow(
    graph: &WorkflowGraph,
    df_id: &str,
    role: &str,
    refs: &BTreeMap<*const WorkflowGraph, String>,
    out: &mut String,
) {
    out.push_str(&format!("  <dataflow id=\"{df_id}\" role=\"{role}\">\n"));
    out.push_str(&format!("    <name>{}</name>\n", xml_escape(&graph.id)));
    if role == "nested" && !graph.description.is_empty() {
        out.push_str(&format!(
            "    <description>{}</description>\n",
            xml_escape(&graph.description)
        ));
    }
    out.push_str("    <inputPorts>\n");
    for port in &graph.input_ports {
        out.push_str(&format!(
            "      <port><name>{}</name><depth>0</depth></port>\n",
            xml_escape(port)
        ));
    }
    out.push_str("    </inputPorts>\n    <outputPorts>\n");
    for port in &graph.output_ports {
        out.push_str(&format!(
            "      <port><name>{}</name></port>\n",
            xml_escape(port)
        ));
    }
    out.push_str("    </outputPorts>\n    <processors>\n");
    for processor in &graph.processors {
        write_processor(processor, refs, out);
    }
    out.push_str("    </processors>\n    <datalinks>\n");
    for link in &graph.links {
        write_link(link, out);
    }
    out.push_str("    </datalinks>\n  </dataflow>\n");
}

fn write_processor(
    processor: &Processor,
    refs: &BTreeMap<*const WorkflowGraph, String>,
    out: &mut String,
) {
    out.push_str("      <processor>\n");
    out.push_str(&format!(
        "        <name>{}</name>\n",
        xml_escape(&processor.name)
    ));
    out.push_str("        <activities><activity>\n");
    out.push_str(&format!(
        "          <class>{}</class>\n",
        activity_class(processor.category)
    ));
    let mut config = String::new();
    if let Some(nested) = &processor.nested {
        if let Some(reference) = refs.get(&(nested.as_ref() as *const WorkflowGraph)) {
            config.push_str(&format!("<dataflow ref=\"{reference}\" />"));
        }
    }
    if let Some(endpoint) = &processor.endpoint {
        let tag = match processor.category {
            ProcessorCategory::Wsdl => "wsdl",
            ProcessorCategory::BioMoby => "mobyEndpoint",
            _ => "endpoint",
        };
        config.push_str(&format!("<{tag}>{}</{tag}>", xml_escape(endpoint)));
    }
    if let Some(operation) = &processor.operation_name {
        let tag = match processor.category {
            ProcessorCategory::BioMoby => "serviceName",
            _ => "operation",
        };
        config.push_str(&format!("<{tag}>{}</{tag}>", xml_escape(operation)));
    }
    if config.is_empty() {
        out.push_str("          <configBean />\n");
    } else {
        out.push_str(&format!("          <configBean>{config}</configBean>\n"));
    }
    out.push_str("        </activity></activities>\n");
    out.push_str("      </processor>\n");
}

fn write_link(link: &DataLink, out: &mut String) {
    let inferred = if link.inferred { " inferred=\"true\"" } else { "" };
    out.push_str(&format!("      <datalink{inferred}>\n"));
    out.push_str(&format!(
        "        <sink {}</sink>\n",
        link_half(&link.sink_processor, &link.sink_port)
    ));
    out.push_str(&format!(
        "        <source {}</source>\n",
        link_half(&link.source_processor, &link.source_port)
    ));
    out.push_str("      </datalink>\n");
}

fn link_half(processor: &Option<String>, port: &str) -> String {
    match processor {
        Some(name) => format!(
            "type=\"processor\"><processor>{}</processor><port>{}</port>",
            xml_escape(name),
            xml_escape(port)
        ),
        None => format!("type=\"dataflow\"><port>{}</port>", xml_escape(port)),
    }
}

#[cfg(test)]
mod tests {
    use crate::workflow::{parse_workflow, CategoryMap, ProcessorCategory, WorkflowFormat};

    const TWO_STEP: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<workflow xmlns="http://taverna.sf.net/2008/xml/t2flow" version="1">
  <dataflow id="a1" role="top">
    <name>align_and_plot</name>
    <inputPorts>
      <port><name>sequence</name><depth>0</depth></port>
    </inputPorts>
    <outputPorts>
      <port><name>plot</name></port>
    </outputPorts>
    <processors>
      <processor>
        <name>align</name>
        <activities><activity>
          <class>net.sf.taverna.t2.activities.wsdl.WSDLActivity</class>
          <configBean><wsdl>http://svc.example.org/align?wsdl</wsdl><operation>runAlignment</operation></configBean>
        </activity></activities>
      </processor>
      <processor>
        <name>tidy</name>
        <activities><activity>
          <class>net.sf.taverna.t2.activities.beanshell.BeanshellActivity</class>
          <configBean />
        </activity></activities>
      </processor>
    </processors>
    <datalinks>
      <datalink>
        <sink type="processor"><processor>align</processor><port>in</port></sink>
        <source type="dataflow"><port>sequence</port></source>
      </datalink>
      <datalink>
        <sink type="processor"><processor>tidy</processor><port>raw</port></sink>
        <source type="processor"><processor>align</processor><port>out</port></source>
      </datalink>
      <datalink>
        <sink type="dataflow"><port>plot</port></sink>
        <source type="processor"><processor>tidy</processor><port>clean</port></source>
      </datalink>
    </datalinks>
  </dataflow>
</workflow>
"#;

    #[test]
    fn parses_dataflow_structure() {
        let g = parse_workflow(TWO_STEP.as_bytes(), None, &CategoryMap::default()).unwrap();
        assert_eq!(g.format, WorkflowFormat::T2flow);
        assert_eq!(g.id, "align_and_plot");
        assert_eq!(g.processors.len(), 2);
        assert_eq!(g.processor("align").unwrap().category, ProcessorCategory::Wsdl);
        assert_eq!(
            g.processor("align").unwrap().endpoint.as_deref(),
            Some("http://svc.example.org/align?wsdl")
        );
        assert_eq!(
            g.processor("align").unwrap().operation_name.as_deref(),
            Some("runAlignment")
        );
        assert_eq!(g.input_ports, ["sequence"]);
        assert_eq!(g.output_ports, ["plot"]);
        assert_eq!(g.links.len(), 3);
        // no embedded description outside nested workflows in this dialect
        assert_eq!(g.processor("align").unwrap().embedded_description, None);
        assert_eq!(g.description, "");
    }

    #[test]
    fn nested_dataflow_is_resolved_by_reference() {
        let doc = r#"<workflow xmlns="http://taverna.sf.net/2008/xml/t2flow" version="1">
  <dataflow id="top1" role="top">
    <name>outer</name>
    <processors>
      <processor>
        <name>helper</name>
        <activities><activity>
          <class>net.sf.taverna.t2.activities.dataflow.DataflowActivity</class>
          <configBean><dataflow ref="sub1" /></configBean>
        </activity></activities>
      </processor>
    </processors>
  </dataflow>
  <dataflow id="sub1" role="nested">
    <name>inner</name>
    <description>Helper that trims output.</description>
    <processors>
      <processor>
        <name>trim</name>
        <activities><activity>
          <class>net.sf.taverna.t2.activities.beanshell.BeanshellActivity</class>
        </activity></activities>
      </processor>
    </processors>
  </dataflow>
</workflow>"#;
        let g = parse_workflow(doc.as_bytes(), None, &CategoryMap::default()).unwrap();
        let p = g.processor("helper").unwrap();
        assert_eq!(p.category, ProcessorCategory::NestedWorkflow);
        assert_eq!(p.embedded_description.as_deref(), Some("Helper that trims output."));
        let nested = p.nested.as_ref().unwrap();
        assert_eq!(nested.id, "inner");
        assert_eq!(nested.processors.len(), 1);
    }

    #[test]
    fn merge_links_synthesize_a_port_name() {
        let doc = r#"<workflow xmlns="http://taverna.sf.net/2008/xml/t2flow" version="1">
  <dataflow id="m" role="top">
    <name>merging</name>
    <processors>
      <processor><name>a</name><activities><activity><class>x</class></activity></activities></processor>
      <processor><name>b</name><activities><activity><class>x</class></activity></activities></processor>
    </processors>
    <datalinks>
      <datalink>
        <sink type="merge"><processor>b</processor></sink>
        <source type="processor"><processor>a</processor><port>out</port></source>
      </datalink>
    </datalinks>
  </dataflow>
</workflow>"#;
        let g = parse_workflow(doc.as_bytes(), None, &CategoryMap::default()).unwrap();
        assert_eq!(g.links.len(), 1);
        assert_eq!(g.links[0].sink_port, "merged");
        assert_eq!(g.links[0].sink_processor.as_deref(), Some("b"));
    }

    #[test]
    fn self_referencing_dataflow_does_not_recurse() {
        let doc = r#"<workflow xmlns="http://taverna.sf.net/2008/xml/t2flow" version="1">
  <dataflow id="loop" role="top">
    <name>looping</name>
    <processors>
      <processor>
        <name>me</name>
        <activities><activity>
          <class>net.sf.taverna.t2.activities.dataflow.DataflowActivity</class>
          <configBean><dataflow ref="loop" /></configBean>
        </activity></activities>
      </processor>
    </processors>
  </dataflow>
</workflow>"#;
        let g = parse_workflow(doc.as_bytes(), None, &CategoryMap::default()).unwrap();
        let p = g.processor("me").unwrap();
        assert_eq!(p.category, ProcessorCategory::NestedWorkflow);
        assert!(p.nested.is_none());
    }
}
