//! Dictionary annotator: exact matching of description text against class
//! labels, synonyms and identifiers, leftmost-longest over token sequences,
//! plus cross-ontology deduplication by precedence.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ontology::OntologyStore;
use crate::text::{tokenize, Token};

/// Ontologies whose copies win over their imports during dedup.
pub const DEFAULT_PRECEDENCE: [&str; 5] = ["SWO", "OBIWS", "OBI", "EFO", "NIFSTD"];

/// Token-index span, end exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub class_uri: String,
    pub ontology: String,
    /// The original description slice covered by the span.
    pub matched_text: String,
    pub span: Span,
    /// Filled by scoring; absent until then.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ic: Option<f64>,
}

/// Frozen token-sequence trie over every matchable entry of a store:
/// labels, synonyms and identifiers of non-obsolete classes. Single-token
/// entries shorter than `min_single_token` characters are dropped to
/// suppress noise matches.
pub struct Dictionary {
    root: TrieNode,
}

pub const MIN_SINGLE_TOKEN: usize = 3;

#[derive(Default)]
struct TrieNode {
    children: BTreeMap<String, TrieNode>,
    /// (ontology, uri) pairs whose entry ends here, sorted.
    classes: Vec<(String, String)>,
}

impl Dictionary {
    pub fn build(store: &OntologyStore) -> Dictionary {
        Dictionary::build_with_min_token(store, MIN_SINGLE_TOKEN)
    }

    pub fn build_with_min_token(store: &OntologyStore, min_single_token: usize) -> Dictionary {
        let mut root = TrieNode::default();
        for class in store.iter_classes() {
            if class.obsolete {
                continue;
            }
            let entries = std::iter::once(&class.label)
                .chain(&class.synonyms)
                .chain(&class.identifiers);
            for entry in entries {
                let tokens = tokenize(entry);
                if tokens.is_empty() {
                    continue;
                }
                if tokens.len() == 1 && tokens[0].folded.chars().count() < min_single_token {
                    continue;
                }
                let mut node = &mut root;
                for token in &tokens {
                    node = node.children.entry(token.folded.clone()).or_default();
                }
                let key = (class.ontology.clone(), class.uri.clone());
                if !node.classes.contains(&key) {
                    node.classes.push(key);
                }
            }
        }
        sort_classes(&mut root);
        Dictionary { root }
    }

    fn lookup_longest<'a>(&'a self, tokens: &[Token], start: usize) -> Option<(usize, &'a [(String, String)])> {
        let mut node = &self.root;
        let mut best: Option<(usize, &[(String, String)])> = None;
        for (offset, token) in tokens[start..].iter().enumerate() {
            match node.children.get(&token.folded) {
                Some(next) => {
                    node = next;
                    if !node.classes.is_empty() {
                        best = Some((start + offset + 1, &node.classes));
                    }
                }
                None => break,
            }
        }
        best
    }
}

fn sort_classes(node: &mut TrieNode) {
    node.classes.sort();
    for child in node.children.values_mut() {
        sort_classes(child);
    }
}

/// Scans the text left to right, taking the longest dictionary entry at
/// each position; matches never overlap. Every class sharing the matched
/// string is emitted, ordered by (ontology, uri) within one span.
pub fn annotate(text: &str, dictionary: &Dictionary) -> Vec<Annotation> {
    let tokens = tokenize(text);
    let mut annotations = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        match dictionary.lookup_longest(&tokens, i) {
            Some((end, classes)) => {
                let matched_text = text[tokens[i].start..tokens[end - 1].end].to_string();
                for (ontology, uri) in classes {
                    annotations.push(Annotation {
                        class_uri: uri.clone(),
                        ontology: ontology.clone(),
                        matched_text: matched_text.clone(),
                        span: Span { start: i, end },
                        ic: None,
                    });
                }
                i = end;
            }
            None => i += 1,
        }
    }
    annotations
}

/// Annotation set of one service description, before or after dedup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceAnnotations {
    pub workflow_id: String,
    pub processor: String,
    pub annotations: Vec<Annotation>,
}

/// Preference order for dedup. Ontologies not listed rank after every
/// listed one; among those, lexicographic id order decides.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrecedenceOrder {
    ordered: Vec<String>,
}

impl Default for PrecedenceOrder {
    fn default() -> Self {
        PrecedenceOrder::new(DEFAULT_PRECEDENCE.iter().map(|s| s.to_string()))
    }
}

impl PrecedenceOrder {
    pub fn new<I>(ids: I) -> PrecedenceOrder
    where
        I: IntoIterator,
        I::Item: Into<String>,
    {
        let mut ordered: Vec<String> = Vec::new();
        for id in ids {
            let id = id.into();
            if !ordered.contains(&id) {
                ordered.push(id);
            }
        }
        PrecedenceOrder { ordered }
    }

    pub fn ids(&self) -> &[String] {
        &self.ordered
    }

    fn rank(&self, ontology: &str) -> usize {
        self.ordered
            .iter()
            .position(|o| o == ontology)
            .unwrap_or(self.ordered.len())
    }
}

/// Collapses annotations sharing one class URI down to a single copy: the
/// one from the earliest-ranked ontology, ties broken by ontology id, then
/// earliest span, then input position. Annotations with equal text but
/// different URIs all survive. Output preserves input order.
pub fn dedup(annotations: &[Annotation], order: &PrecedenceOrder) -> Vec<Annotation> {
    let mut best: BTreeMap<&str, (usize, &str, Span, usize)> = BTreeMap::new();
    for (index, a) in annotations.iter().enumerate() {
        let key = (order.rank(&a.ontology), a.ontology.as_str(), a.span, index);
        match best.get(a.class_uri.as_str()) {
            Some(current) if *current <= key => {}
            _ => {
                best.insert(&a.class_uri, key);
            }
        }
    }
    let mut winners: Vec<usize> = best.values().map(|(_, _, _, index)| *index).collect();
    winners.sort_unstable();
    winners.into_iter().map(|i| annotations[i].clone()).collect()
}
