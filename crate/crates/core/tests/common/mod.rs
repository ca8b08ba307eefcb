//! Shared helpers for the acceptance suite: a seeded RNG, random input
//! generators, and brute-force oracles kept deliberately independent of the
//! library's own algorithms.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use wfsem_core::workflow::{DataLink, Processor, ProcessorCategory, WorkflowFormat, WorkflowGraph};

/// SplitMix64: tiny, seedable, good enough to drive test-case shapes.
pub struct Rng {
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Rng {
        Rng { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, bound); bound must be positive.
    pub fn below(&mut self, bound: usize) -> usize {
        (self.next_u64() % bound as u64) as usize
    }

    pub fn chance(&mut self, numerator: u64, denominator: u64) -> bool {
        self.next_u64() % denominator < numerator
    }

    pub fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.below(items.len())]
    }
}

const SHIMS: [ProcessorCategory; 6] = [
    ProcessorCategory::XmlSplitter,
    ProcessorCategory::SpreadsheetImport,
    ProcessorCategory::StringConstant,
    ProcessorCategory::Beanshell,
    ProcessorCategory::LocalService,
    ProcessorCategory::Xpath,
];

const NON_SHIMS: [ProcessorCategory; 6] = [
    ProcessorCategory::Wsdl,
    ProcessorCategory::Rest,
    ProcessorCategory::BioMoby,
    ProcessorCategory::BioMart,
    ProcessorCategory::Soaplab,
    ProcessorCategory::Rshell,
];

/// Random workflow: mixed categories, mostly-forward links with occasional
/// back edges (cycles through shims included), some workflow port links.
pub fn random_workflow(rng: &mut Rng, max_nodes: usize) -> WorkflowGraph {
    let n = 1 + rng.below(max_nodes);
    let mut w = WorkflowGraph::new(format!("rand-{}", rng.next_u64() % 100000), WorkflowFormat::Scufl);
    for i in 0..n {
        let category = match rng.below(10) {
            0..=4 => *rng.pick(&SHIMS),
            5..=8 => *rng.pick(&NON_SHIMS),
            _ => ProcessorCategory::Other,
        };
        w.processors.push(Processor::new(format!("p{i}"), category));
    }
    let ports = ["a", "b", "c"];
    let link_count = rng.below(2 * n + 2);
    for _ in 0..link_count {
        let s = rng.below(n);
        let t = rng.below(n);
        if s == t {
            continue;
        }
        // bias toward forward edges, keep some back edges for cycles
        let (s, t) = if s < t || rng.chance(1, 4) { (s, t) } else { (t, s) };
        let link = DataLink::new(
            Some(&format!("p{s}")),
            rng.pick(&ports),
            Some(&format!("p{t}")),
            rng.pick(&ports),
        );
        if !w.links.contains(&link) {
            w.links.push(link);
        }
    }
    if rng.chance(1, 2) {
        w.input_ports.push("wf_in".to_string());
        let t = rng.below(n);
        let link = DataLink::new(None, "wf_in", Some(&format!("p{t}")), rng.pick(&ports));
        if !w.links.contains(&link) {
            w.links.push(link);
        }
    }
    if rng.chance(1, 2) {
        w.output_ports.push("wf_out".to_string());
        let s = rng.below(n);
        let link = DataLink::new(Some(&format!("p{s}")), rng.pick(&ports), None, "wf_out");
        if !w.links.contains(&link) {
            w.links.push(link);
        }
    }
    w
}

/// Node key for reachability: processors by name, workflow ports by side.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Node {
    Proc(String),
    In(String),
    Out(String),
}

fn link_ends(link: &DataLink) -> (Node, Node) {
    let source = match &link.source_processor {
        Some(p) => Node::Proc(p.clone()),
        None => Node::In(link.source_port.clone()),
    };
    let sink = match &link.sink_processor {
        Some(p) => Node::Proc(p.clone()),
        None => Node::Out(link.sink_port.clone()),
    };
    (source, sink)
}

/// Brute-force transitive closure over a graph's links: the set of ordered
/// pairs (u, v), u != v, with a directed path u -> ... -> v.
pub fn closure(w: &WorkflowGraph) -> BTreeSet<(Node, Node)> {
    let mut adjacency: BTreeMap<Node, BTreeSet<Node>> = BTreeMap::new();
    for link in &w.links {
        let (s, t) = link_ends(link);
        adjacency.entry(s).or_default().insert(t);
    }
    let mut pairs = BTreeSet::new();
    let starts: BTreeSet<Node> = adjacency.keys().cloned().collect();
    for start in starts {
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([start.clone()]);
        while let Some(node) = queue.pop_front() {
            if let Some(nexts) = adjacency.get(&node) {
                for next in nexts {
                    if seen.insert(next.clone()) {
                        queue.push_back(next.clone());
                    }
                }
            }
        }
        for reached in seen {
            if reached != start {
                pairs.insert((start.clone(), reached));
            }
        }
    }
    pairs
}

/// Restricts a closure to pairs whose endpoints all survive pruning:
/// non-shim or Other processors, and workflow ports.
pub fn surviving_pairs(
    pairs: &BTreeSet<(Node, Node)>,
    w: &WorkflowGraph,
) -> BTreeSet<(Node, Node)> {
    let survivors: BTreeSet<&str> = w
        .processors
        .iter()
        .filter(|p| !p.category.is_shim())
        .map(|p| p.name.as_str())
        .collect();
    let keeps = |node: &Node| match node {
        Node::Proc(name) => survivors.contains(name.as_str()),
        Node::In(_) | Node::Out(_) => true,
    };
    pairs
        .iter()
        .filter(|(a, b)| keeps(a) && keeps(b))
        .cloned()
        .collect()
}

/// Random ontology DAG rendered as a TermTable document. Every class is
/// attached and non-obsolete; node i may only have parents with lower
/// indices, so the result is acyclic by construction.
pub fn random_dag_table(rng: &mut Rng, max_nodes: usize) -> (String, Vec<ClassShape>) {
    let n = 2 + rng.below(max_nodes.saturating_sub(1).max(1));
    let mut shapes = Vec::new();
    let mut csv = String::from("uri,label,synonyms,identifiers,definition,parents,obsolete\n");
    for i in 0..n {
        let parents: BTreeSet<usize> = if i == 0 || rng.chance(1, 8) {
            BTreeSet::new()
        } else {
            let count = 1 + rng.below(2.min(i));
            (0..count * 3).map(|_| rng.below(i)).take(count).collect()
        };
        let parent_cell = parents
            .iter()
            .map(|p| format!("N{p}"))
            .collect::<Vec<_>>()
            .join("|");
        csv.push_str(&format!("N{i},Class {i},,,,{parent_cell},false\n"));
        shapes.push(ClassShape {
            uri: format!("N{i}"),
            parents: parents.into_iter().map(|p| format!("N{p}")).collect(),
        });
    }
    (csv, shapes)
}

pub struct ClassShape {
    pub uri: String,
    pub parents: BTreeSet<String>,
}

pub struct OracleClassStats {
    pub hypo: usize,
    pub depth: usize,
    pub leaves: usize,
    pub subsumers: usize,
}

/// Exhaustive per-class statistics by plain graph walks; no bitsets, no
/// topological order, no sharing with the implementation under test.
pub fn oracle_stats(shapes: &[ClassShape]) -> BTreeMap<String, OracleClassStats> {
    let mut children: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    let mut parents: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for shape in shapes {
        children.entry(&shape.uri).or_default();
        parents.entry(&shape.uri).or_default();
    }
    for shape in shapes {
        for parent in &shape.parents {
            children.entry(parent).or_default().push(&shape.uri);
            parents.entry(&shape.uri).or_default().push(parent);
        }
    }
    fn walk<'a>(start: &'a str, edges: &BTreeMap<&'a str, Vec<&'a str>>) -> BTreeSet<&'a str> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![start];
        while let Some(node) = stack.pop() {
            for next in &edges[node] {
                if seen.insert(*next) {
                    stack.push(next);
                }
            }
        }
        seen
    }
    fn longest_to_root(node: &str, parents: &BTreeMap<&str, Vec<&str>>) -> usize {
        let ups = &parents[node];
        if ups.is_empty() {
            1
        } else {
            1 + ups
                .iter()
                .map(|p| longest_to_root(p, parents))
                .max()
                .unwrap()
        }
    }
    let leaves: BTreeSet<&str> = children
        .iter()
        .filter(|(_, kids)| kids.is_empty())
        .map(|(uri, _)| *uri)
        .collect();
    shapes
        .iter()
        .map(|shape| {
            let descendants = walk(&shape.uri, &children);
            let mut ancestors = walk(&shape.uri, &parents);
            ancestors.insert(&shape.uri);
            let mut desc_or_self = descendants.clone();
            desc_or_self.insert(&shape.uri);
            (
                shape.uri.clone(),
                OracleClassStats {
                    hypo: descendants.len(),
                    depth: longest_to_root(&shape.uri, &parents),
                    leaves: desc_or_self.intersection(&leaves).count(),
                    subsumers: ancestors.len(),
                },
            )
        })
        .collect()
}

/// Token sequence paired with the (ontology, uri) classes it names.
pub type DictionaryEntry = (Vec<String>, Vec<(String, String)>);

/// A dictionary case for the annotator oracle: entries as token sequences
/// with their classes, plus the text tokens.
pub struct AnnotatorCase {
    pub table_docs: Vec<(String, String)>,
    pub entries: Vec<DictionaryEntry>,
    pub text: String,
}

const TOKEN_POOL: [&str; 14] = [
    "alignment", "sequence", "blast", "protein", "scan", "of", "ms", "data", "tree",
    "profile", "genome", "xy", "search", "term",
];

pub fn random_annotator_case(rng: &mut Rng) -> AnnotatorCase {
    let ontologies = ["ONTA", "ONTB", "ONTC"];
    let entry_count = 1 + rng.below(100);
    let mut per_ontology: BTreeMap<String, Vec<(String, String)>> = BTreeMap::new();
    let mut entries: BTreeMap<Vec<String>, Vec<(String, String)>> = BTreeMap::new();
    for k in 0..entry_count {
        let len = 1 + rng.below(3);
        let tokens: Vec<String> = (0..len)
            .map(|_| rng.pick(&TOKEN_POOL).to_string())
            .collect();
        let ontology = rng.pick(&ontologies).to_string();
        let uri = format!("http://{}/c{}", ontology.to_lowercase(), k);
        per_ontology
            .entry(ontology.clone())
            .or_default()
            .push((uri.clone(), tokens.join(" ")));
        // the oracle dictionary applies the same 3-char single-token floor
        if !(tokens.len() == 1 && tokens[0].chars().count() < 3) {
            entries.entry(tokens).or_default().push((ontology, uri));
        }
    }
    let table_docs = per_ontology
        .into_iter()
        .map(|(ontology, classes)| {
            let mut csv = String::from("uri,label,synonyms,identifiers,definition,parents,obsolete\n");
            for (uri, label) in classes {
                csv.push_str(&format!("{uri},{label},,,,,false\n"));
            }
            (ontology, csv)
        })
        .collect();
    let text_len = rng.below(51);
    let text = (0..text_len)
        .map(|_| *rng.pick(&TOKEN_POOL))
        .collect::<Vec<_>>()
        .join(" ");
    let mut entry_list: Vec<DictionaryEntry> = entries.into_iter().collect();
    for (_, classes) in &mut entry_list {
        classes.sort();
        classes.dedup();
    }
    AnnotatorCase {
        table_docs,
        entries: entry_list,
        text,
    }
}

/// Brute-force leftmost-longest scan over token windows.
pub fn oracle_annotate(case: &AnnotatorCase) -> Vec<(String, String, usize, usize)> {
    let tokens: Vec<&str> = case.text.split_whitespace().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let mut best: Option<(usize, &Vec<(String, String)>)> = None;
        for (entry_tokens, classes) in &case.entries {
            let len = entry_tokens.len();
            if i + len > tokens.len() {
                continue;
            }
            if entry_tokens
                .iter()
                .zip(&tokens[i..i + len])
                .all(|(a, b)| a == b)
                && best.is_none_or(|(l, _)| len > l)
            {
                best = Some((len, classes));
            }
        }
        match best {
            Some((len, classes)) => {
                for (ontology, uri) in classes {
                    out.push((ontology.clone(), uri.clone(), i, i + len));
                }
                i += len;
            }
            None => i += 1,
        }
    }
    out
}
