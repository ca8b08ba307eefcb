//! TermTable format: one CSV row per class with pipe-separated multi-value
//! cells. Columns: uri,label,synonyms,identifiers,definition,parents,obsolete.

use super::{OntologyError, RawClass};

const HEADERS: [&str; 7] = [
    "uri",
    "label",
    "synonyms",
    "identifiers",
    "definition",
    "parents",
    "obsolete",
];

pub(super) fn parse(ontology: &str, bytes: &[u8]) -> Result<Vec<RawClass>, OntologyError> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(false)
        .from_reader(bytes);
    let malformed = |line: usize, reason: String| OntologyError::MalformedDocument {
        ontology: ontology.to_string(),
        line,
        reason,
    };
    let headers = reader
        .headers()
        .map_err(|e| malformed(1, e.to_string()))?
        .clone();
    let header_fields: Vec<&str> = headers.iter().map(str::trim).collect();
    if header_fields != HEADERS {
        return Err(malformed(
            1,
            format!("expected header {:?}, found {:?}", HEADERS.join(","), header_fields.join(",")),
        ));
    }

    let mut classes = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for (index, record) in reader.records().enumerate() {
        let line = index + 2;
        let record = record.map_err(|e| malformed(line, e.to_string()))?;
        let field = |i: usize| record.get(i).unwrap_or("").trim().to_string();
        let mut class = RawClass::new(ontology);
        class.uri = field(0);
        if class.uri.is_empty() {
            return Err(malformed(line, "row without a uri".to_string()));
        }
        if !seen.insert(class.uri.clone()) {
            return Err(malformed(line, format!("duplicate class uri {}", class.uri)));
        }
        class.label = field(1);
        class.synonyms = split_multi(&field(2));
        class.identifiers = split_multi(&field(3));
        class.definition = field(4);
        class.parents = split_multi(&field(5));
        class.obsolete = matches!(field(6).to_lowercase().as_str(), "true" | "1" | "yes");
        classes.push(class);
    }
    Ok(classes)
}

fn split_multi(cell: &str) -> std::collections::BTreeSet<String> {
    cell.split('|')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}
