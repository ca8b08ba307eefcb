//! Relevance filtering: a curated term list matched against workflow title,
//! description and tags as whole-token sequences.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ontology::OntologyStore;
use crate::text::{contains_sequence, folded_tokens};
use crate::workflow::WorkflowGraph;

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("term list line {line}: unknown section [{name}]")]
    UnknownSection { line: usize, name: String },
    #[error("term list has no effective terms")]
    EmptyTermList,
}

/// Term list built from a searched base set plus curated removals and
/// additions. Terms are stored case-folded; the effective set is always
/// `(base ∖ removed) ∪ added`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermList {
    base_terms: BTreeSet<String>,
    removed: BTreeSet<String>,
    added: BTreeSet<String>,
    effective: BTreeSet<String>,
}

impl TermList {
    pub fn from_sets<I, J, K>(base: I, removed: J, added: K) -> TermList
    where
        I: IntoIterator,
        I::Item: AsRef<str>,
        J: IntoIterator,
        J::Item: AsRef<str>,
        K: IntoIterator,
        K::Item: AsRef<str>,
    {
        let mut list = TermList {
            base_terms: fold_all(base),
            removed: fold_all(removed),
            added: fold_all(added),
            effective: BTreeSet::new(),
        };
        list.recompute();
        list
    }

    /// Parses the three-section term file: one term per line under `[base]`,
    /// `[removed]` or `[added]`. Lines before any header count as base;
    /// blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<TermList, FilterError> {
        let mut base = BTreeSet::new();
        let mut removed = BTreeSet::new();
        let mut added = BTreeSet::new();
        let mut section = Section::Base;
        for (index, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                section = match name.trim().to_lowercase().as_str() {
                    "base" => Section::Base,
                    "removed" => Section::Removed,
                    "added" => Section::Added,
                    other => {
                        return Err(FilterError::UnknownSection {
                            line: index + 1,
                            name: other.to_string(),
                        })
                    }
                };
                continue;
            }
            let term = line.to_lowercase();
            match section {
                Section::Base => base.insert(term),
                Section::Removed => removed.insert(term),
                Section::Added => added.insert(term),
            };
        }
        Ok(TermList::from_sets(base, removed, added))
    }

    /// Adds a curated term. The effective set grows or stays equal.
    pub fn add(&mut self, term: &str) {
        self.added.insert(term.to_lowercase());
        self.recompute();
    }

    /// Removes a base term from consideration. Curated additions survive.
    pub fn remove(&mut self, term: &str) {
        self.removed.insert(term.to_lowercase());
        self.recompute();
    }

    pub fn extend_base<I>(&mut self, terms: I)
    where
        I: IntoIterator,
        I::Item: AsRef<str>,
    {
        self.base_terms.extend(fold_all(terms));
        self.recompute();
    }

    fn recompute(&mut self) {
        self.effective = self
            .base_terms
            .difference(&self.removed)
            .cloned()
            .collect();
        self.effective.extend(self.added.iter().cloned());
    }

    pub fn base_terms(&self) -> &BTreeSet<String> {
        &self.base_terms
    }

    pub fn removed(&self) -> &BTreeSet<String> {
        &self.removed
    }

    pub fn added(&self) -> &BTreeSet<String> {
        &self.added
    }

    pub fn effective(&self) -> &BTreeSet<String> {
        &self.effective
    }

    pub fn is_empty(&self) -> bool {
        self.effective.is_empty()
    }
}

enum Section {
    Base,
    Removed,
    Added,
}

fn fold_all<I>(terms: I) -> BTreeSet<String>
where
    I: IntoIterator,
    I::Item: AsRef<str>,
{
    terms
        .into_iter()
        .map(|t| t.as_ref().trim().to_lowercase())
        .filter(|t| !t.is_empty())
        .collect()
}

/// Builds the base term set by running a definition search over a loaded
/// ontology branch and keeping the labels of the hits.
pub fn base_terms_from_store(
    store: &OntologyStore,
    namespace: &str,
    query: &str,
    include_subclasses: bool,
) -> Result<BTreeSet<String>, crate::ontology::OntologyError> {
    let hits = store.definition_search(namespace, query, include_subclasses)?;
    Ok(hits
        .into_iter()
        .filter_map(|(ontology, uri)| {
            store
                .class(&ontology, &uri)
                .map(|c| c.label.to_lowercase())
        })
        .filter(|label| !label.is_empty())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchField {
    Title,
    Description,
    Tags,
}

impl std::fmt::Display for MatchField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MatchField::Title => write!(f, "title"),
            MatchField::Description => write!(f, "description"),
            MatchField::Tags => write!(f, "tags"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterVerdict {
    pub workflow_id: String,
    pub relevant: bool,
    pub matched_terms: BTreeSet<String>,
    pub matched_fields: BTreeSet<MatchField>,
}

/// Matches every effective term against title, description and each tag.
/// A term hits when its token sequence appears consecutively inside one
/// field; a multi-word term never spans two tags.
pub fn apply_filter(workflow: &WorkflowGraph, terms: &TermList) -> Result<FilterVerdict, FilterError> {
    if terms.is_empty() {
        return Err(FilterError::EmptyTermList);
    }
    let title = folded_tokens(&workflow.title);
    let description = folded_tokens(&workflow.description);
    let tags: Vec<Vec<String>> = workflow.tags.iter().map(|t| folded_tokens(t)).collect();

    let mut matched_terms = BTreeSet::new();
    let mut matched_fields = BTreeSet::new();
    for term in terms.effective() {
        let needle = folded_tokens(term);
        if needle.is_empty() {
            continue;
        }
        let mut hit = false;
        if contains_sequence(&title, &needle) {
            matched_fields.insert(MatchField::Title);
            hit = true;
        }
        if contains_sequence(&description, &needle) {
            matched_fields.insert(MatchField::Description);
            hit = true;
        }
        if tags.iter().any(|tag| contains_sequence(tag, &needle)) {
            matched_fields.insert(MatchField::Tags);
            hit = true;
        }
        if hit {
            matched_terms.insert(term.clone());
        }
    }
    Ok(FilterVerdict {
        workflow_id: workflow.id.clone(),
        relevant: !matched_terms.is_empty(),
        matched_terms,
        matched_fields,
    })
}

/// Renders verdicts as the three-column CSV export.
pub fn verdicts_csv(verdicts: &[FilterVerdict]) -> String {
    let mut out = String::from("workflow_id,relevant,matched_terms\n");
    let mut writer = csv::WriterBuilder::new().from_writer(Vec::new());
    for v in verdicts {
        let terms: Vec<&str> = v.matched_terms.iter().map(String::as_str).collect();
        writer
            .write_record([
                v.workflow_id.as_str(),
                if v.relevant { "true" } else { "false" },
                terms.join("|").as_str(),
            ])
            .expect("in-memory csv write");
    }
    let body = writer.into_inner().expect("in-memory csv flush");
    out.push_str(&String::from_utf8(body).expect("csv output is utf-8"));
    out
}
