//! Lenient parsers for the historical registry payloads: BioMoby service
//! entries and catalogue search results. Both formats circulated in several
//! shapes, so extraction goes by local element names and missing elements
//! simply yield no fragment.

use std::collections::BTreeMap;

use roxmltree::Document;

use super::FragmentKind;
use crate::text::normalize_whitespace;

/// BioMoby registry entry: `serviceName` attribute or element for the name,
/// `Description` element (commonly CDATA) for the description.
pub fn parse_biomoby_entry(document: &[u8]) -> BTreeMap<FragmentKind, String> {
    let mut fragments = BTreeMap::new();
    let text = String::from_utf8_lossy(document);
    let Ok(doc) = Document::parse(&text) else {
        return fragments;
    };
    for node in doc.root().descendants().filter(|n| n.is_element()) {
        if !fragments.contains_key(&FragmentKind::ServiceName) {
            if let Some(name) = node.attribute("serviceName") {
                insert(&mut fragments, FragmentKind::ServiceName, name);
            } else if node.tag_name().name() == "serviceName" {
                insert(
                    &mut fragments,
                    FragmentKind::ServiceName,
                    node.text().unwrap_or(""),
                );
            }
        }
        if node.tag_name().name().eq_ignore_ascii_case("description") {
            insert(
                &mut fragments,
                FragmentKind::ServiceDescription,
                &all_text(node),
            );
        }
    }
    fragments
}

/// Catalogue search result: the first `service` element (or the root when
/// none exist) contributes its `name` and `description` children.
pub fn parse_catalogue_result(document: &[u8]) -> BTreeMap<FragmentKind, String> {
    let mut fragments = BTreeMap::new();
    let text = String::from_utf8_lossy(document);
    let Ok(doc) = Document::parse(&text) else {
        return fragments;
    };
    let root = doc.root_element();
    let scope = root
        .descendants()
        .find(|n| n.is_element() && n.tag_name().name().eq_ignore_ascii_case("service"))
        .unwrap_or(root);
    for child in scope.children().filter(|n| n.is_element()) {
        match child.tag_name().name().to_lowercase().as_str() {
            "name" => insert(&mut fragments, FragmentKind::ServiceName, &all_text(child)),
            "description" => insert(
                &mut fragments,
                FragmentKind::ServiceDescription,
                &all_text(child),
            ),
            _ => {}
        }
    }
    fragments
}

fn insert(fragments: &mut BTreeMap<FragmentKind, String>, kind: FragmentKind, value: &str) {
    let cleaned = normalize_whitespace(value);
    if !cleaned.is_empty() {
        fragments.entry(kind).or_insert(cleaned);
    }
}

fn all_text(node: roxmltree::Node) -> String {
    node.descendants()
        .filter(|n| n.is_text())
        .filter_map(|n| n.text())
        .collect::<Vec<_>>()
        .join(" ")
}
