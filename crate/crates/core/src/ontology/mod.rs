//! Ontology store: loads class vocabularies from OBO flat files or TermTable
//! CSV, freezes them into an immutable store with precomputed hierarchy
//! statistics, and evaluates intrinsic information-content metrics.
//!
//! Hierarchy conventions: every parentless non-obsolete class is a root at
//! depth 1 (no virtual root is added); depth is the longest root path;
//! hyponym counts exclude the class itself; subsumer counts include it;
//! leaf counts are descendant-or-self leaves. Obsolete classes and classes
//! whose declared parents cannot be resolved (hierarchy-detached) stay in
//! the vocabulary but carry no statistics and no IC.

mod obo;
mod table;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{contains_sequence, folded_tokens};

/// One ontology class as loaded from a document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OntologyClass {
    pub ontology: String,
    pub uri: String,
    pub label: String,
    pub synonyms: BTreeSet<String>,
    pub identifiers: BTreeSet<String>,
    pub definition: String,
    pub parents: BTreeSet<String>,
    pub obsolete: bool,
}

impl OntologyClass {
    fn new(ontology: &str) -> Self {
        OntologyClass {
            ontology: ontology.to_string(),
            uri: String::new(),
            label: String::new(),
            synonyms: BTreeSet::new(),
            identifiers: BTreeSet::new(),
            definition: String::new(),
            parents: BTreeSet::new(),
            obsolete: false,
        }
    }
}

pub(crate) type RawClass = OntologyClass;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OntologyFormat {
    Obo,
    TermTable,
}

impl OntologyFormat {
    /// Accepts the names used in config files.
    pub fn parse_name(name: &str) -> Result<Self, OntologyError> {
        match name.to_lowercase().as_str() {
            "obo" => Ok(OntologyFormat::Obo),
            "termtable" | "table" | "csv" => Ok(OntologyFormat::TermTable),
            other => Err(OntologyError::UnsupportedFormat(other.to_string())),
        }
    }
}

#[derive(Debug, Error)]
pub enum OntologyError {
    #[error("malformed ontology document {ontology} at line {line}: {reason}")]
    MalformedDocument {
        ontology: String,
        line: usize,
        reason: String,
    },
    #[error("unsupported ontology format: {0}")]
    UnsupportedFormat(String),
    #[error("ontology {0} already loaded")]
    DuplicateOntology(String),
    #[error("cycle detected in ontology {ontology} involving class {uri}")]
    CycleDetected { ontology: String, uri: String },
    #[error("unknown class {uri} in ontology {ontology}")]
    UnknownClass { ontology: String, uri: String },
    #[error("unknown namespace: no loaded class labelled {0}")]
    UnknownNamespace(String),
}

/// Intrinsic information-content metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum IcMetric {
    Seco,
    Zhou { k: f64 },
    Sanchez,
}

impl Default for IcMetric {
    fn default() -> Self {
        IcMetric::Zhou { k: 0.5 }
    }
}

impl IcMetric {
    /// Builds a metric from its config name plus the optional Zhou weight.
    pub fn from_config(name: &str, zhou_k: Option<f64>) -> Option<IcMetric> {
        match name.to_lowercase().as_str() {
            "seco" => Some(IcMetric::Seco),
            "zhou" => Some(IcMetric::Zhou {
                k: zhou_k.unwrap_or(0.5),
            }),
            "sanchez" => Some(IcMetric::Sanchez),
            _ => None,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            IcMetric::Seco => "seco".to_string(),
            IcMetric::Zhou { k } => format!("zhou(k={k})"),
            IcMetric::Sanchez => "sanchez".to_string(),
        }
    }
}

/// Why a class carries no IC value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnscorableReason {
    /// Marked obsolete in its ontology.
    Obsolete,
    /// Declared parents never resolve into the ontology hierarchy.
    Detached,
    /// The ontology is too small for the formula (a single class).
    Degenerate,
}

impl std::fmt::Display for UnscorableReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            UnscorableReason::Obsolete => write!(f, "obsolete"),
            UnscorableReason::Detached => write!(f, "detached"),
            UnscorableReason::Degenerate => write!(f, "degenerate"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IcOutcome {
    Score(f64),
    Unscorable(UnscorableReason),
}

impl IcOutcome {
    pub fn score(&self) -> Option<f64> {
        match self {
            IcOutcome::Score(v) => Some(*v),
            IcOutcome::Unscorable(_) => None,
        }
    }
}

/// Hierarchy statistics of one class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassStats {
    /// Descendants, excluding the class itself.
    pub hypo: usize,
    /// Longest path from a root; roots have depth 1.
    pub depth: usize,
    /// Leaves among descendant-or-self.
    pub leaves: usize,
    /// Ancestors including the class itself.
    pub subsumers: usize,
}

/// Whole-ontology statistics over the hierarchy classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OntologyStats {
    pub node_count: usize,
    pub leaf_count: usize,
    pub max_depth: usize,
    /// Maximum raw Sanchez value, the normalization constant.
    pub sanchez_max: f64,
}

struct OntologyData {
    classes: BTreeMap<String, OntologyClass>,
    class_stats: BTreeMap<String, ClassStats>,
    children: BTreeMap<String, Vec<String>>,
    detached: BTreeSet<String>,
    stats: OntologyStats,
}

/// Immutable store over one or more loaded ontologies.
pub struct OntologyStore {
    ontologies: BTreeMap<String, OntologyData>,
}

/// Accumulates ontology documents, then freezes them into a store.
#[derive(Default)]
pub struct OntologyStoreBuilder {
    loaded: BTreeMap<String, Vec<OntologyClass>>,
}

impl OntologyStoreBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses one document and registers its classes under `ontology`.
    /// Returns the number of classes read.
    pub fn load_ontology(
        &mut self,
        ontology: &str,
        document: &[u8],
        format: OntologyFormat,
    ) -> Result<usize, OntologyError> {
        if self.loaded.contains_key(ontology) {
            return Err(OntologyError::DuplicateOntology(ontology.to_string()));
        }
        let classes = match format {
            OntologyFormat::Obo => {
                let text = String::from_utf8_lossy(document);
                obo::parse(ontology, &text)?
            }
            OntologyFormat::TermTable => table::parse(ontology, document)?,
        };
        let count = classes.len();
        self.loaded.insert(ontology.to_string(), classes);
        Ok(count)
    }

    /// Freezes the loaded documents: resolves hierarchies, rejects cyclic
    /// ones, and precomputes all per-class and per-ontology statistics.
    pub fn build(self) -> Result<OntologyStore, OntologyError> {
        let mut ontologies = BTreeMap::new();
        for (id, classes) in self.loaded {
            let data = freeze_ontology(&id, classes)?;
            ontologies.insert(id, data);
        }
        Ok(OntologyStore { ontologies })
    }
}

fn freeze_ontology(id: &str, classes: Vec<OntologyClass>) -> Result<OntologyData, OntologyError> {
    let mut by_uri: BTreeMap<String, OntologyClass> = BTreeMap::new();
    for class in classes {
        by_uri.insert(class.uri.clone(), class);
    }

    // membership fixpoint: a class stays when it has no declared parents
    // (root) or at least one declared parent that itself stays
    let mut members: BTreeSet<&str> = by_uri
        .values()
        .filter(|c| !c.obsolete)
        .map(|c| c.uri.as_str())
        .collect();
    loop {
        let dropped: Vec<&str> = members
            .iter()
            .copied()
            .filter(|uri| {
                let class = &by_uri[*uri];
                !class.parents.is_empty()
                    && !class
                        .parents
                        .iter()
                        .any(|p| p != uri && members.contains(p.as_str()))
            })
            .collect();
        if dropped.is_empty() {
            break;
        }
        for uri in dropped {
            members.remove(uri);
        }
    }

    let detached: BTreeSet<String> = by_uri
        .values()
        .filter(|c| !c.obsolete && !members.contains(c.uri.as_str()))
        .map(|c| c.uri.clone())
        .collect();

    let index: BTreeMap<&str, usize> = members
        .iter()
        .enumerate()
        .map(|(i, uri)| (*uri, i))
        .collect();
    let uris: Vec<&str> = members.iter().copied().collect();
    let n = uris.len();

    let mut parents_of: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut children_of: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, uri) in uris.iter().enumerate() {
        for parent in &by_uri[*uri].parents {
            if parent.as_str() == *uri {
                continue;
            }
            if let Some(&p) = index.get(parent.as_str()) {
                parents_of[i].push(p);
                children_of[p].push(i);
            }
        }
    }

    let order = topo_order(&parents_of, &children_of)
        .map_err(|cycle_index| OntologyError::CycleDetected {
            ontology: id.to_string(),
            uri: uris[cycle_index].to_string(),
        })?;

    // depth: longest root path, roots at 1
    let mut depth = vec![0usize; n];
    for &i in &order {
        depth[i] = 1 + parents_of[i].iter().map(|&p| depth[p]).max().unwrap_or(0);
    }
    let max_depth = depth.iter().copied().max().unwrap_or(0);

    let leaf: Vec<bool> = (0..n).map(|i| children_of[i].is_empty()).collect();
    let leaf_count = leaf.iter().filter(|l| **l).count();
    let mut leaf_mask = BitRow::new(n);
    for (i, is_leaf) in leaf.iter().enumerate() {
        if *is_leaf {
            leaf_mask.set(i);
        }
    }

    let mut descendants = BitGrid::new(n);
    for &i in order.iter().rev() {
        for c in children_of[i].clone() {
            descendants.or_row(i, c);
            descendants.set(i, c);
        }
    }
    let mut ancestors = BitGrid::new(n);
    for &i in &order {
        for p in parents_of[i].clone() {
            ancestors.or_row(i, p);
        }
        ancestors.set(i, i);
    }

    let mut class_stats = BTreeMap::new();
    let mut sanchez_max = 0.0f64;
    for i in 0..n {
        let hypo = descendants.count(i);
        let mut leaves = descendants.count_and(i, &leaf_mask);
        if leaf[i] {
            leaves += 1;
        }
        let subsumers = ancestors.count(i);
        let stats = ClassStats {
            hypo,
            depth: depth[i],
            leaves,
            subsumers,
        };
        sanchez_max = sanchez_max.max(sanchez_raw(&stats, leaf_count));
        class_stats.insert(uris[i].to_string(), stats);
    }

    let children = (0..n)
        .map(|i| {
            let mut kids: Vec<String> = children_of[i].iter().map(|&c| uris[c].to_string()).collect();
            kids.sort();
            (uris[i].to_string(), kids)
        })
        .collect();

    Ok(OntologyData {
        classes: by_uri,
        class_stats,
        children,
        detached,
        stats: OntologyStats {
            node_count: n,
            leaf_count,
            max_depth,
            sanchez_max,
        },
    })
}

/// Kahn's algorithm over parent -> child edges. On a cycle, returns an index
/// that lies on one (unprocessed nodes are trimmed of pure descendants
/// first).
fn topo_order(parents_of: &[Vec<usize>], children_of: &[Vec<usize>]) -> Result<Vec<usize>, usize> {
    let n = parents_of.len();
    let mut in_degree: Vec<usize> = parents_of.iter().map(Vec::len).collect();
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| in_degree[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    let mut done = vec![false; n];
    while let Some(i) = queue.pop_front() {
        done[i] = true;
        order.push(i);
        for &c in &children_of[i] {
            in_degree[c] -= 1;
            if in_degree[c] == 0 {
                queue.push_back(c);
            }
        }
    }
    if order.len() == n {
        return Ok(order);
    }
    // strip nodes that only hang off a cycle so the witness sits on one
    let mut remaining: BTreeSet<usize> = (0..n).filter(|&i| !done[i]).collect();
    loop {
        let removable: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&i| !children_of[i].iter().any(|c| remaining.contains(c)))
            .collect();
        if removable.is_empty() {
            break;
        }
        for i in removable {
            remaining.remove(&i);
        }
    }
    Err(remaining.into_iter().next().expect("cycle nodes remain"))
}

fn sanchez_raw(stats: &ClassStats, leaf_count: usize) -> f64 {
    let ratio = stats.leaves as f64 / stats.subsumers as f64;
    -(((ratio + 1.0) / (leaf_count as f64 + 1.0)).ln())
}

impl OntologyStore {
    pub fn builder() -> OntologyStoreBuilder {
        OntologyStoreBuilder::new()
    }

    pub fn ontologies(&self) -> impl Iterator<Item = &str> {
        self.ontologies.keys().map(String::as_str)
    }

    pub fn class(&self, ontology: &str, uri: &str) -> Option<&OntologyClass> {
        self.ontologies.get(ontology)?.classes.get(uri)
    }

    /// Every loaded class across all ontologies, in (ontology, uri) order.
    pub fn iter_classes(&self) -> impl Iterator<Item = &OntologyClass> {
        self.ontologies.values().flat_map(|d| d.classes.values())
    }

    /// Ontology ids that define `uri`, sorted. A URI imported by several
    /// ontologies appears once per importer, each with its own statistics.
    pub fn ontologies_for_uri(&self, uri: &str) -> Vec<&str> {
        self.ontologies
            .iter()
            .filter(|(_, d)| d.classes.contains_key(uri))
            .map(|(id, _)| id.as_str())
            .collect()
    }

    pub fn stats(&self, ontology: &str) -> Option<&OntologyStats> {
        self.ontologies.get(ontology).map(|d| &d.stats)
    }

    /// Hierarchy statistics of one class; None for obsolete, detached or
    /// unknown classes.
    pub fn class_stats(&self, ontology: &str, uri: &str) -> Option<&ClassStats> {
        self.ontologies.get(ontology)?.class_stats.get(uri)
    }

    /// Sorted child URIs of a hierarchy class.
    pub fn children(&self, ontology: &str, uri: &str) -> &[String] {
        self.ontologies
            .get(ontology)
            .and_then(|d| d.children.get(uri))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Evaluates `metric` for a class. Scorable values lie in [0, 1].
    pub fn information_content(
        &self,
        ontology: &str,
        uri: &str,
        metric: IcMetric,
    ) -> Result<IcOutcome, OntologyError> {
        let data = self
            .ontologies
            .get(ontology)
            .ok_or_else(|| OntologyError::UnknownClass {
                ontology: ontology.to_string(),
                uri: uri.to_string(),
            })?;
        let class = data
            .classes
            .get(uri)
            .ok_or_else(|| OntologyError::UnknownClass {
                ontology: ontology.to_string(),
                uri: uri.to_string(),
            })?;
        if class.obsolete {
            return Ok(IcOutcome::Unscorable(UnscorableReason::Obsolete));
        }
        if data.detached.contains(uri) {
            return Ok(IcOutcome::Unscorable(UnscorableReason::Detached));
        }
        let stats = &data.class_stats[uri];
        let n = data.stats.node_count;
        if n <= 1 {
            return Ok(IcOutcome::Unscorable(UnscorableReason::Degenerate));
        }
        let seco = 1.0 - ((stats.hypo as f64 + 1.0).ln() / (n as f64).ln());
        let value = match metric {
            IcMetric::Seco => seco,
            IcMetric::Zhou { k } => {
                let depth_ratio = if data.stats.max_depth <= 1 {
                    1.0
                } else {
                    (stats.depth as f64).ln() / (data.stats.max_depth as f64).ln()
                };
                k * seco + (1.0 - k) * depth_ratio
            }
            IcMetric::Sanchez => {
                if data.stats.sanchez_max <= 0.0 {
                    return Ok(IcOutcome::Unscorable(UnscorableReason::Degenerate));
                }
                sanchez_raw(stats, data.stats.leaf_count) / data.stats.sanchez_max
            }
        };
        Ok(IcOutcome::Score(value))
    }

    /// Searches class definitions inside the branch rooted at the classes
    /// labelled `namespace` (case-insensitive) for the whole-word `query`.
    /// With `include_subclasses`, transitive subclasses of every hit join
    /// the result.
    pub fn definition_search(
        &self,
        namespace: &str,
        query: &str,
        include_subclasses: bool,
    ) -> Result<BTreeSet<(String, String)>, OntologyError> {
        let folded_ns = namespace.to_lowercase();
        let mut branch_roots: Vec<(&str, &str)> = Vec::new();
        for (id, data) in &self.ontologies {
            for (uri, class) in &data.classes {
                if data.class_stats.contains_key(uri) && class.label.to_lowercase() == folded_ns {
                    branch_roots.push((id, uri));
                }
            }
        }
        if branch_roots.is_empty() {
            return Err(OntologyError::UnknownNamespace(namespace.to_string()));
        }
        let query_tokens = folded_tokens(query);
        let mut result = BTreeSet::new();
        for (ontology, root) in branch_roots {
            let branch = self.descendants_or_self(ontology, root);
            for uri in &branch {
                let class = &self.ontologies[ontology].classes[uri];
                let definition_tokens = folded_tokens(&class.definition);
                if contains_sequence(&definition_tokens, &query_tokens) {
                    result.insert((ontology.to_string(), uri.clone()));
                    if include_subclasses {
                        for sub in self.descendants_or_self(ontology, uri) {
                            result.insert((ontology.to_string(), sub));
                        }
                    }
                }
            }
        }
        Ok(result)
    }

    fn descendants_or_self(&self, ontology: &str, root: &str) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![root.to_string()];
        while let Some(uri) = stack.pop() {
            if !seen.insert(uri.clone()) {
                continue;
            }
            for child in self.children(ontology, &uri) {
                stack.push(child.clone());
            }
        }
        seen.into_iter().collect()
    }
}

/// Fixed-width bit rows, one per hierarchy class.
struct BitGrid {
    words: usize,
    data: Vec<u64>,
}

impl BitGrid {
    fn new(n: usize) -> Self {
        let words = n.div_ceil(64);
        BitGrid {
            words,
            data: vec![0; words * n.max(1)],
        }
    }

    fn set(&mut self, row: usize, bit: usize) {
        self.data[row * self.words + bit / 64] |= 1u64 << (bit % 64);
    }

    fn or_row(&mut self, dst: usize, src: usize) {
        for w in 0..self.words {
            let v = self.data[src * self.words + w];
            self.data[dst * self.words + w] |= v;
        }
    }

    fn count(&self, row: usize) -> usize {
        self.data[row * self.words..(row + 1) * self.words]
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum()
    }

    fn count_and(&self, row: usize, mask: &BitRow) -> usize {
        self.data[row * self.words..(row + 1) * self.words]
            .iter()
            .zip(&mask.data)
            .map(|(w, m)| (w & m).count_ones() as usize)
            .sum()
    }
}

struct BitRow {
    data: Vec<u64>,
}

impl BitRow {
    fn new(n: usize) -> Self {
        BitRow {
            data: vec![0; n.div_ceil(64)],
        }
    }

    fn set(&mut self, bit: usize) {
        self.data[bit / 64] |= 1u64 << (bit % 64);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// R with children A and B; A1, A2 under A; B1 under B; B1a under B1.
    pub(crate) const TOY_TABLE: &str = "\
uri,label,synonyms,identifiers,definition,parents,obsolete
R,Root,,,The root.,,false
A,Branch a,,,First branch.,R,false
B,Branch b,,,Second branch.,R,false
A1,Leaf a1,,,,A,false
A2,Leaf a2,,,,A,false
B1,Mid b1,,,,B,false
B1a,Leaf b1a,,,,B1,false
";

    fn toy_store() -> OntologyStore {
        let mut builder = OntologyStore::builder();
        builder
            .load_ontology("toy", TOY_TABLE.as_bytes(), OntologyFormat::TermTable)
            .unwrap();
        builder.build().unwrap()
    }

    #[test]
    fn toy_tree_statistics() {
        let store = toy_store();
        let stats = store.stats("toy").unwrap();
        assert_eq!(stats.node_count, 7);
        assert_eq!(stats.leaf_count, 3);
        assert_eq!(stats.max_depth, 4);
        let root = store.class_stats("toy", "R").unwrap();
        assert_eq!(root.hypo, 6);
        assert_eq!(root.depth, 1);
        assert_eq!(root.leaves, 3);
        assert_eq!(root.subsumers, 1);
        let b1 = store.class_stats("toy", "B1").unwrap();
        assert_eq!(b1.hypo, 1);
        assert_eq!(b1.depth, 3);
        assert_eq!(b1.leaves, 1);
        assert_eq!(b1.subsumers, 3);
    }

    #[test]
    fn seco_extremes_and_interior_value() {
        let store = toy_store();
        let ic = |uri: &str| {
            store
                .information_content("toy", uri, IcMetric::Seco)
                .unwrap()
                .score()
                .unwrap()
        };
        assert_eq!(ic("R"), 0.0);
        assert_eq!(ic("A1"), 1.0);
        assert_eq!(ic("B1a"), 1.0);
        let expected = 1.0 - (3.0f64.ln() / 7.0f64.ln());
        assert!((ic("A") - expected).abs() < 1e-12);
    }

    #[test]
    fn zhou_blends_seco_with_depth() {
        let store = toy_store();
        let got = store
            .information_content("toy", "A1", IcMetric::Zhou { k: 0.5 })
            .unwrap()
            .score()
            .unwrap();
        let expected = 0.5 + 0.5 * (3.0f64.ln() / 4.0f64.ln());
        assert!((got - expected).abs() < 1e-9);
    }

    #[test]
    fn zhou_with_full_weight_equals_seco() {
        let store = toy_store();
        for uri in ["R", "A", "B", "A1", "A2", "B1", "B1a"] {
            let z = store
                .information_content("toy", uri, IcMetric::Zhou { k: 1.0 })
                .unwrap()
                .score()
                .unwrap();
            let s = store
                .information_content("toy", uri, IcMetric::Seco)
                .unwrap()
                .score()
                .unwrap();
            assert_eq!(z, s, "class {uri}");
        }
    }

    #[test]
    fn sanchez_is_normalized_to_unit_range() {
        let store = toy_store();
        let values: Vec<f64> = ["R", "A", "B", "A1", "A2", "B1", "B1a"]
            .iter()
            .map(|uri| {
                store
                    .information_content("toy", uri, IcMetric::Sanchez)
                    .unwrap()
                    .score()
                    .unwrap()
            })
            .collect();
        assert_eq!(values[0], 0.0, "root raw value is zero");
        assert!(values.iter().all(|v| (-1e-9..=1.0 + 1e-9).contains(v)));
        assert!(values.iter().any(|v| (v - 1.0).abs() < 1e-12), "max attains 1");
    }

    #[test]
    fn obsolete_and_detached_are_unscorable() {
        let csv = "\
uri,label,synonyms,identifiers,definition,parents,obsolete
R,Root,,,,,false
A,Kept,,,,R,false
G,Gone,,,,R,true
D,Dangling,,,,NOSUCH,false
H,HangsOffDangling,,,,D,false
";
        let mut builder = OntologyStore::builder();
        builder
            .load_ontology("toy", csv.as_bytes(), OntologyFormat::TermTable)
            .unwrap();
        let store = builder.build().unwrap();
        assert_eq!(store.stats("toy").unwrap().node_count, 2);
        let outcome = store
            .information_content("toy", "G", IcMetric::Seco)
            .unwrap();
        assert_eq!(outcome, IcOutcome::Unscorable(UnscorableReason::Obsolete));
        let outcome = store
            .information_content("toy", "D", IcMetric::Seco)
            .unwrap();
        assert_eq!(outcome, IcOutcome::Unscorable(UnscorableReason::Detached));
        // detachment propagates through unresolvable chains
        let outcome = store
            .information_content("toy", "H", IcMetric::Seco)
            .unwrap();
        assert_eq!(outcome, IcOutcome::Unscorable(UnscorableReason::Detached));
        assert!(store.class("toy", "G").is_some(), "still in the vocabulary");
    }

    #[test]
    fn obsolete_parent_detaches_child() {
        let csv = "\
uri,label,synonyms,identifiers,definition,parents,obsolete
R,Root,,,,,false
G,Gone,,,,R,true
C,Child,,,,G,false
";
        let mut builder = OntologyStore::builder();
        builder
            .load_ontology("toy", csv.as_bytes(), OntologyFormat::TermTable)
            .unwrap();
        let store = builder.build().unwrap();
        let outcome = store
            .information_content("toy", "C", IcMetric::Seco)
            .unwrap();
        assert_eq!(outcome, IcOutcome::Unscorable(UnscorableReason::Detached));
    }

    #[test]
    fn unknown_class_is_an_error() {
        let store = toy_store();
        assert!(matches!(
            store.information_content("toy", "NOPE", IcMetric::Seco),
            Err(OntologyError::UnknownClass { .. })
        ));
        assert!(matches!(
            store.information_content("nope", "R", IcMetric::Seco),
            Err(OntologyError::UnknownClass { .. })
        ));
    }

    #[test]
    fn cycle_is_rejected_naming_a_cycle_member() {
        let csv = "\
uri,label,synonyms,identifiers,definition,parents,obsolete
R,Root,,,,,false
X,A,,,,Y,false
Y,B,,,,X,false
Z,HangsOff,,,,Y,false
";
        let mut builder = OntologyStore::builder();
        builder
            .load_ontology("toy", csv.as_bytes(), OntologyFormat::TermTable)
            .unwrap();
        match builder.build() {
            Err(OntologyError::CycleDetected { uri, .. }) => {
                assert!(uri == "X" || uri == "Y", "witness {uri} must sit on the cycle");
            }
            other => panic!("expected cycle error, got {:?}", other.is_ok()),
        }
    }

    #[test]
    fn multi_parent_counts_are_exact() {
        // diamond: R -> {P, Q} -> C
        let csv = "\
uri,label,synonyms,identifiers,definition,parents,obsolete
R,Root,,,,,false
P,Left,,,,R,false
Q,Right,,,,R,false
C,Join,,,,P|Q,false
";
        let mut builder = OntologyStore::builder();
        builder
            .load_ontology("toy", csv.as_bytes(), OntologyFormat::TermTable)
            .unwrap();
        let store = builder.build().unwrap();
        let c = store.class_stats("toy", "C").unwrap();
        assert_eq!(c.subsumers, 4, "R, P, Q and C itself");
        assert_eq!(c.depth, 3);
        let r = store.class_stats("toy", "R").unwrap();
        assert_eq!(r.hypo, 3);
        assert_eq!(r.leaves, 1, "C is the only leaf");
    }

    #[test]
    fn multi_rooted_ontologies_have_no_virtual_root() {
        let csv = "\
uri,label,synonyms,identifiers,definition,parents,obsolete
R1,First root,,,,,false
R2,Second root,,,,,false
C1,Under first,,,,R1,false
";
        let mut builder = OntologyStore::builder();
        builder
            .load_ontology("toy", csv.as_bytes(), OntologyFormat::TermTable)
            .unwrap();
        let store = builder.build().unwrap();
        assert_eq!(store.stats("toy").unwrap().node_count, 3);
        assert_eq!(store.class_stats("toy", "R2").unwrap().depth, 1);
        assert_eq!(store.class_stats("toy", "R1").unwrap().hypo, 1);
    }

    #[test]
    fn cross_format_equality() {
        let obo = "\
[Term]
id: R
name: Root

[Term]
id: A
name: Branch a
synonym: \"The a side\" EXACT []
def: \"First branch.\" []
is_a: R ! Root
";
        let csv = "\
uri,label,synonyms,identifiers,definition,parents,obsolete
R,Root,,,,,false
A,Branch a,The a side,,First branch.,R,false
";
        let mut b1 = OntologyStore::builder();
        b1.load_ontology("x", obo.as_bytes(), OntologyFormat::Obo).unwrap();
        let s1 = b1.build().unwrap();
        let mut b2 = OntologyStore::builder();
        b2.load_ontology("x", csv.as_bytes(), OntologyFormat::TermTable)
            .unwrap();
        let s2 = b2.build().unwrap();
        let c1: Vec<&OntologyClass> = s1.iter_classes().collect();
        let c2: Vec<&OntologyClass> = s2.iter_classes().collect();
        assert_eq!(c1, c2);
        assert_eq!(s1.stats("x"), s2.stats("x"));
    }

    #[test]
    fn load_order_does_not_change_statistics() {
        let forward = TOY_TABLE;
        let mut lines: Vec<&str> = TOY_TABLE.lines().collect();
        let header = lines.remove(0);
        lines.reverse();
        let reversed = format!("{header}\n{}\n", lines.join("\n"));
        let mut b1 = OntologyStore::builder();
        b1.load_ontology("toy", forward.as_bytes(), OntologyFormat::TermTable)
            .unwrap();
        let s1 = b1.build().unwrap();
        let mut b2 = OntologyStore::builder();
        b2.load_ontology("toy", reversed.as_bytes(), OntologyFormat::TermTable)
            .unwrap();
        let s2 = b2.build().unwrap();
        for uri in ["R", "A", "B", "A1", "A2", "B1", "B1a"] {
            assert_eq!(s1.class_stats("toy", uri), s2.class_stats("toy", uri));
        }
        assert_eq!(s1.stats("toy"), s2.stats("toy"));
    }

    #[test]
    fn shared_uris_keep_per_ontology_entries() {
        let a = "\
uri,label,synonyms,identifiers,definition,parents,obsolete
U,Shared,,,,,false
V,Extra,,,,U,false
";
        let b = "\
uri,label,synonyms,identifiers,definition,parents,obsolete
U,Shared,,,,,false
";
        let mut builder = OntologyStore::builder();
        builder.load_ontology("first", a.as_bytes(), OntologyFormat::TermTable).unwrap();
        builder.load_ontology("second", b.as_bytes(), OntologyFormat::TermTable).unwrap();
        let store = builder.build().unwrap();
        assert_eq!(store.ontologies_for_uri("U"), ["first", "second"]);
        assert_eq!(store.class_stats("first", "U").unwrap().hypo, 1);
        assert_eq!(store.class_stats("second", "U").unwrap().hypo, 0);
    }

    #[test]
    fn duplicate_ontology_id_is_rejected() {
        let mut builder = OntologyStore::builder();
        builder
            .load_ontology("toy", TOY_TABLE.as_bytes(), OntologyFormat::TermTable)
            .unwrap();
        assert!(matches!(
            builder.load_ontology("toy", TOY_TABLE.as_bytes(), OntologyFormat::TermTable),
            Err(OntologyError::DuplicateOntology(_))
        ));
    }

    #[test]
    fn definition_search_unions_subclasses() {
        let csv = "\
uri,label,synonyms,identifiers,definition,parents,obsolete
T,Topic,,,A grouping.,,false
ALN,Alignment,,,Comparing sequences is a bioinformatics task.,T,false
MSA,Multiple alignment,,,,ALN,false
PSA,Pairwise alignment,,,,ALN,false
OUT,Elsewhere,,,bioinformatics mentioned outside the branch.,,false
";
        let mut builder = OntologyStore::builder();
        builder
            .load_ontology("toy", csv.as_bytes(), OntologyFormat::TermTable)
            .unwrap();
        let store = builder.build().unwrap();
        let with_subs = store.definition_search("topic", "bioinformatics", true).unwrap();
        let uris: Vec<&str> = with_subs.iter().map(|(_, u)| u.as_str()).collect();
        assert_eq!(uris, ["ALN", "MSA", "PSA"]);
        let without = store.definition_search("topic", "bioinformatics", false).unwrap();
        assert_eq!(without.len(), 1);
        // whole-word: "bioinformatic" must not match "bioinformatics"
        let none = store.definition_search("topic", "bioinformatic", false).unwrap();
        assert!(none.is_empty());
        assert!(matches!(
            store.definition_search("nope", "x", false),
            Err(OntologyError::UnknownNamespace(_))
        ));
    }

    #[test]
    fn metric_config_parsing() {
        assert_eq!(IcMetric::from_config("seco", None), Some(IcMetric::Seco));
        assert_eq!(
            IcMetric::from_config("ZHOU", Some(0.7)),
            Some(IcMetric::Zhou { k: 0.7 })
        );
        assert_eq!(IcMetric::from_config("zhou", None), Some(IcMetric::Zhou { k: 0.5 }));
        assert_eq!(IcMetric::from_config("sanchez", None), Some(IcMetric::Sanchez));
        assert_eq!(IcMetric::from_config("resnik", None), None);
        assert_eq!(IcMetric::default(), IcMetric::Zhou { k: 0.5 });
    }
}
