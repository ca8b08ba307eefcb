//! Line-based parser for the OBO flat-file subset used by ontology releases:
//! `[Term]` stanzas with id, name, synonym, def, is_a, alt_id and
//! is_obsolete tags. Typedef stanzas and unknown tags are skipped.

use std::collections::BTreeSet;

use super::{OntologyError, RawClass};

pub(super) fn parse(ontology: &str, text: &str) -> Result<Vec<RawClass>, OntologyError> {
    let mut classes: Vec<RawClass> = Vec::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut current: Option<(RawClass, usize)> = None;
    let mut in_term = false;

    for (index, raw_line) in text.lines().enumerate() {
        let line_no = index + 1;
        let line = raw_line.trim();
        if line.starts_with('[') {
            finish_stanza(&mut current, &mut classes, &mut seen)?;
            in_term = line == "[Term]";
            if in_term {
                current = Some((RawClass::new(ontology), line_no));
            }
            continue;
        }
        if !in_term || line.is_empty() || line.starts_with('!') {
            continue;
        }
        let Some((tag, value)) = line.split_once(':') else {
            continue;
        };
        let value = value.trim();
        let (class, _) = current.as_mut().expect("inside a [Term] stanza");
        match tag.trim() {
            "id" => class.uri = value.to_string(),
            "name" => class.label = value.to_string(),
            "alt_id" => {
                class.identifiers.insert(value.to_string());
            }
            "synonym" => {
                let text = parse_quoted(value).ok_or(OntologyError::MalformedDocument {
                    ontology: ontology.to_string(),
                    line: line_no,
                    reason: "synonym tag without a quoted string".to_string(),
                })?;
                class.synonyms.insert(text);
            }
            "def" => {
                class.definition =
                    parse_quoted(value).ok_or(OntologyError::MalformedDocument {
                        ontology: ontology.to_string(),
                        line: line_no,
                        reason: "def tag without a quoted string".to_string(),
                    })?;
            }
            "is_a" => {
                // strip the optional trailing "! label" comment
                let target = value.split('!').next().unwrap_or("").trim();
                if !target.is_empty() {
                    class.parents.insert(target.to_string());
                }
            }
            "is_obsolete" => class.obsolete = value == "true",
            _ => {}
        }
    }
    finish_stanza(&mut current, &mut classes, &mut seen)?;
    Ok(classes)
}

fn finish_stanza(
    current: &mut Option<(RawClass, usize)>,
    classes: &mut Vec<RawClass>,
    seen: &mut BTreeSet<String>,
) -> Result<(), OntologyError> {
    if let Some((class, start_line)) = current.take() {
        if class.uri.is_empty() {
            return Err(OntologyError::MalformedDocument {
                ontology: class.ontology,
                line: start_line,
                reason: "[Term] stanza without an id tag".to_string(),
            });
        }
        if !seen.insert(class.uri.clone()) {
            return Err(OntologyError::MalformedDocument {
                ontology: class.ontology,
                line: start_line,
                reason: format!("duplicate term id {}", class.uri),
            });
        }
        classes.push(class);
    }
    Ok(())
}

/// Extracts the leading double-quoted string of an OBO tag value, honoring
/// backslash escapes.
fn parse_quoted(value: &str) -> Option<String> {
    let rest = value.strip_prefix('"')?;
    let mut out = String::new();
    let mut escaped = false;
    for ch in rest.chars() {
        if escaped {
            out.push(ch);
            escaped = false;
        } else if ch == '\\' {
            escaped = true;
        } else if ch == '"' {
            return Some(out);
        } else {
            out.push(ch);
        }
    }
    None
}
