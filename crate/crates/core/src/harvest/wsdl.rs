//! Extracts description fragments from WSDL 1.1 documents: service name,
//! service-level documentation, operation name and operation-level
//! documentation. Matching is namespace-agnostic since registries served
//! a mix of prefixed and unprefixed documents.

use std::collections::BTreeMap;

use roxmltree::Document;
use thiserror::Error;

use super::FragmentKind;
use crate::text::normalize_whitespace;

#[derive(Debug, Error)]
#[error("malformed wsdl: {0}")]
pub struct MalformedWsdl(pub String);

/// Pulls the four fragment kinds out of a WSDL document. With an operation
/// filter only the named operation contributes; without one the first
/// operation in document order is used.
pub fn parse_wsdl_metadata(
    document: &[u8],
    operation_filter: Option<&str>,
) -> Result<BTreeMap<FragmentKind, String>, MalformedWsdl> {
    let text = String::from_utf8_lossy(document);
    let doc = Document::parse(&text).map_err(|e| MalformedWsdl(e.to_string()))?;
    let root = doc.root_element();

    let mut fragments = BTreeMap::new();
    let mut insert = |kind: FragmentKind, value: &str| {
        let cleaned = normalize_whitespace(value);
        if !cleaned.is_empty() {
            fragments.entry(kind).or_insert(cleaned);
        }
    };

    if let Some(service) = root
        .descendants()
        .find(|n| n.is_element() && n.tag_name().name() == "service")
    {
        if let Some(name) = service.attribute("name") {
            insert(FragmentKind::ServiceName, name);
        }
        if let Some(doc_text) = documentation_of(service) {
            insert(FragmentKind::ServiceDescription, &doc_text);
        }
    }
    // service documentation commonly sits on the definitions root instead
    if let Some(doc_text) = documentation_of(root) {
        insert(FragmentKind::ServiceDescription, &doc_text);
    }

    let operations: Vec<roxmltree::Node> = root
        .descendants()
        .filter(|n| {
            n.is_element()
                && n.tag_name().name() == "operation"
                && n.parent_element()
                    .is_some_and(|p| p.tag_name().name() == "portType")
        })
        .collect();
    let chosen = match operation_filter {
        Some(wanted) => operations
            .iter()
            .find(|op| op.attribute("name") == Some(wanted)),
        None => operations.first(),
    };
    if let Some(op) = chosen {
        if let Some(name) = op.attribute("name") {
            insert(FragmentKind::OperationName, name);
        }
        if let Some(doc_text) = documentation_of(*op) {
            insert(FragmentKind::OperationDescription, &doc_text);
        }
    }
    Ok(fragments)
}

fn documentation_of(node: roxmltree::Node) -> Option<String> {
    node.children()
        .find(|c| c.is_element() && c.tag_name().name() == "documentation")
        .map(|d| {
            d.descendants()
                .filter(|n| n.is_text())
                .filter_map(|n| n.text())
                .collect::<Vec<_>>()
                .join(" ")
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"<?xml version="1.0"?>
<wsdl:definitions xmlns:wsdl="http://schemas.xmlsoap.org/wsdl/" name="BlastDefs">
  <wsdl:portType name="BlastPort">
    <wsdl:operation name="runBlast">
      <wsdl:documentation>Aligns a query   sequence against a database.</wsdl:documentation>
    </wsdl:operation>
    <wsdl:operation name="checkStatus">
      <wsdl:documentation>Polls a submitted job.</wsdl:documentation>
    </wsdl:operation>
  </wsdl:portType>
  <wsdl:service name="BlastService">
    <wsdl:documentation>Sequence similarity search service.</wsdl:documentation>
  </wsdl:service>
</wsdl:definitions>"#;

    #[test]
    fn extracts_service_and_first_operation() {
        let fragments = parse_wsdl_metadata(SAMPLE.as_bytes(), None).unwrap();
        assert_eq!(fragments[&FragmentKind::ServiceName], "BlastService");
        assert_eq!(
            fragments[&FragmentKind::ServiceDescription],
            "Sequence similarity search service."
        );
        assert_eq!(fragments[&FragmentKind::OperationName], "runBlast");
        assert_eq!(
            fragments[&FragmentKind::OperationDescription],
            "Aligns a query sequence against a database."
        );
    }

    #[test]
    fn operation_filter_selects_the_bound_operation() {
        let fragments = parse_wsdl_metadata(SAMPLE.as_bytes(), Some("checkStatus")).unwrap();
        assert_eq!(fragments[&FragmentKind::OperationName], "checkStatus");
        assert_eq!(
            fragments[&FragmentKind::OperationDescription],
            "Polls a submitted job."
        );
    }

    #[test]
    fn unknown_operation_filter_yields_no_operation_fragments() {
        let fragments = parse_wsdl_metadata(SAMPLE.as_bytes(), Some("missing")).unwrap();
        assert!(!fragments.contains_key(&FragmentKind::OperationName));
        assert!(!fragments.contains_key(&FragmentKind::OperationDescription));
        assert!(fragments.contains_key(&FragmentKind::ServiceName));
    }

    #[test]
    fn undocumented_wsdl_yields_names_only() {
        let wsdl = r#"<definitions xmlns="http://schemas.xmlsoap.org/wsdl/">
  <portType name="P"><operation name="op1"/></portType>
  <service name="Svc"/>
</definitions>"#;
        let fragments = parse_wsdl_metadata(wsdl.as_bytes(), None).unwrap();
        assert_eq!(fragments[&FragmentKind::ServiceName], "Svc");
        assert_eq!(fragments[&FragmentKind::OperationName], "op1");
        assert!(!fragments.contains_key(&FragmentKind::ServiceDescription));
    }

    #[test]
    fn root_documentation_backs_service_description() {
        let wsdl = r#"<definitions xmlns="http://schemas.xmlsoap.org/wsdl/">
  <documentation>Top level notes.</documentation>
  <service name="Svc"/>
</definitions>"#;
        let fragments = parse_wsdl_metadata(wsdl.as_bytes(), None).unwrap();
        assert_eq!(fragments[&FragmentKind::ServiceDescription], "Top level notes.");
    }

    #[test]
    fn malformed_xml_is_an_error() {
        assert!(parse_wsdl_metadata(b"<definitions>", None).is_err());
    }
}
