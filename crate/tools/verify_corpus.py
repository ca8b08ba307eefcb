#!/usr/bin/env python3
"""Independent re-derivation of the bundled-corpus pipeline outputs.

Recomputes filter verdicts, pruned graphs, harvested descriptions,
dictionary annotations, IC scores, the gold comparison and the emitted
triples directly from the fixture inputs, using nothing but this script
and the Python standard library, then diffs a workspace produced by
`wfsem pipeline` against those expectations.

Usage: verify_corpus.py CORPUS_DIR WORKSPACE_DIR
Exits 0 when every check passes, 1 otherwise, listing each mismatch.
"""

import csv
import hashlib
import io
import json
import math
import re
import sys

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib
from pathlib import Path
from xml.etree import ElementTree

SCUFL_NS = "{http://org.embl.ebi.escience/xscufl/0.1alpha}"

SHIM_CATEGORIES = {
    "XmlSplitter", "SpreadsheetImport", "StringConstant",
    "Beanshell", "LocalService", "Xpath",
}
NON_SHIM_CATEGORIES = {
    "Wsdl", "Rest", "BioMoby", "BioMart", "Soaplab", "Rshell", "NestedWorkflow",
}

SCUFL_KINDS = {
    "xmlsplitter": "XmlSplitter",
    "spreadsheetimport": "SpreadsheetImport",
    "stringconstant": "StringConstant",
    "beanshell": "Beanshell",
    "local": "LocalService",
    "xpath": "Xpath",
    "arbitrarywsdl": "Wsdl",
    "rest": "Rest",
    "biomobywsdl": "BioMoby",
    "biomart": "BioMart",
    "soaplabwsdl": "Soaplab",
    "rshell": "Rshell",
    "workflow": "NestedWorkflow",
    "other": "Other",
}
T2_KINDS = {
    "net.sf.taverna.t2.activities.wsdl.xmlsplitter.XMLInputSplitterActivity": "XmlSplitter",
    "net.sf.taverna.t2.activities.spreadsheet.SpreadsheetImportActivity": "SpreadsheetImport",
    "net.sf.taverna.t2.activities.stringconstant.StringConstantActivity": "StringConstant",
    "net.sf.taverna.t2.activities.beanshell.BeanshellActivity": "Beanshell",
    "net.sf.taverna.t2.activities.localworker.LocalworkerActivity": "LocalService",
    "net.sf.taverna.t2.activities.xpath.XPathActivity": "Xpath",
    "net.sf.taverna.t2.activities.wsdl.WSDLActivity": "Wsdl",
    "net.sf.taverna.t2.activities.rest.RESTActivity": "Rest",
    "net.sf.taverna.t2.activities.biomoby.BiomobyActivity": "BioMoby",
    "net.sf.taverna.t2.activities.biomart.BiomartActivity": "BioMart",
    "net.sf.taverna.t2.activities.soaplab.SoaplabActivity": "Soaplab",
    "net.sf.taverna.t2.activities.rshell.RshellActivity": "Rshell",
    "net.sf.taverna.t2.activities.dataflow.DataflowActivity": "NestedWorkflow",
}

FRAGMENT_ORDER = [
    "service_name", "service_description", "operation_name", "operation_description",
]

OPMW_NS = "http://www.opmw.org/ontology/"
PROCESS_CLASS = OPMW_NS + "WorkflowTemplateProcess"
TEMPLATE_PRED = OPMW_NS + "template"
USES_PRED = OPMW_NS + "uses"
RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"
MYEXPERIMENT = "http://www.myexperiment.org/workflows/"

failures: list[str] = []


def check(label: str, ok: bool, detail: str = "") -> None:
    if ok:
        print(f"  ok   {label}")
    else:
        print(f"  FAIL {label}" + (f": {detail}" if detail else ""))
        failures.append(label)


# ---------------------------------------------------------------- text

TOKEN_RE = re.compile(r"[0-9A-Za-z]+")


def tokenize(text):
    """(folded, start, end) per maximal alphanumeric run."""
    return [(m.group(0).lower(), m.start(), m.end()) for m in TOKEN_RE.finditer(text)]


def folded(text):
    return [t[0] for t in tokenize(text)]


def normalize_ws(text):
    return " ".join(text.split())


def contains_seq(haystack, needle):
    n = len(needle)
    return any(haystack[i:i + n] == needle for i in range(len(haystack) - n + 1))


def sha256_hex(text):
    return hashlib.sha256(text.encode()).hexdigest()


# ---------------------------------------------------- workflow parsing

def localname(tag):
    return tag.rsplit("}", 1)[-1]


def text_of(node):
    return normalize_ws("".join(node.itertext()))


def parse_scufl(data):
    root = ElementTree.fromstring(data)
    graph = {
        "id": "", "title": "", "description": "", "tags": [],
        "format": "Scufl", "processors": [], "links": [],
        "input_ports": [], "output_ports": [],
    }
    for child in root:
        tag = localname(child.tag)
        if tag == "workflowdescription":
            graph["id"] = child.get("lsid") or child.get("title") or ""
            graph["title"] = child.get("title") or ""
            graph["description"] = text_of(child)
        elif tag == "processor":
            graph["processors"].append(parse_scufl_processor(child))
        elif tag == "link":
            graph["links"].append(split_scufl_ref(child.get("source", "")) +
                                  split_scufl_ref(child.get("sink", "")))
        elif tag == "source":
            graph["input_ports"].append(child.get("name", ""))
        elif tag == "sink":
            graph["output_ports"].append(child.get("name", ""))
    return graph


def split_scufl_ref(ref):
    if ":" in ref:
        proc, port = ref.split(":", 1)
        return (proc, port)
    return (None, ref)


def parse_scufl_processor(node):
    proc = {"name": node.get("name", ""), "category": "Other",
            "embedded_description": None, "endpoint": None,
            "operation_name": None, "nested": None}
    for child in node:
        tag = localname(child.tag)
        if tag == "description":
            text = text_of(child)
            proc["embedded_description"] = text or None
            continue
        if tag in SCUFL_KINDS:
            proc["category"] = SCUFL_KINDS[tag]
            for grand in child:
                gtag = localname(grand.tag)
                text = text_of(grand)
                if gtag in ("wsdl", "endpoint", "mobyEndpoint") and not proc["endpoint"] and text:
                    proc["endpoint"] = text
                elif gtag in ("operation", "serviceName") and not proc["operation_name"] and text:
                    proc["operation_name"] = text
            if not proc["endpoint"]:
                text = text_of(child)
                if text:
                    proc["endpoint"] = text
    return proc


def parse_t2flow(data):
    root = ElementTree.fromstring(data)
    dataflows = [n for n in root if localname(n.tag) == "dataflow"]
    by_id = {n.get("id"): n for n in dataflows}
    top = next((n for n in dataflows if n.get("role") == "top"), dataflows[0])
    return parse_dataflow(top, by_id)


def parse_dataflow(node, by_id):
    graph = {
        "id": "", "title": "", "description": "", "tags": [],
        "format": "T2flow", "processors": [], "links": [],
        "input_ports": [], "output_ports": [],
    }
    for child in node:
        tag = localname(child.tag)
        if tag == "name":
            graph["id"] = text_of(child)
        elif tag == "description":
            graph["description"] = text_of(child)
        elif tag in ("inputPorts", "outputPorts"):
            key = "input_ports" if tag == "inputPorts" else "output_ports"
            for port in child:
                for sub in port:
                    if localname(sub.tag) == "name":
                        graph[key].append(text_of(sub))
        elif tag == "processors":
            for pnode in child:
                graph["processors"].append(parse_t2_processor(pnode, by_id))
        elif tag == "datalinks":
            for link in child:
                ends = {"source": (None, ""), "sink": (None, "")}
                for end in link:
                    etag = localname(end.tag)
                    if etag not in ends:
                        continue
                    proc, port = None, ""
                    for sub in end:
                        if localname(sub.tag) == "processor":
                            proc = text_of(sub)
                        elif localname(sub.tag) == "port":
                            port = text_of(sub)
                    if end.get("type") == "dataflow":
                        proc = None
                    ends[etag] = (proc, port)
                graph["links"].append(ends["source"] + ends["sink"])
    return graph


def parse_t2_processor(node, by_id):
    proc = {"name": "", "category": "Other", "embedded_description": None,
            "endpoint": None, "operation_name": None, "nested": None}
    activity = None
    for child in node:
        tag = localname(child.tag)
        if tag == "name":
            proc["name"] = text_of(child)
        elif tag == "activities":
            for act in child:
                activity = act
                break
    if activity is None:
        return proc
    config = None
    for child in activity:
        tag = localname(child.tag)
        if tag == "class":
            proc["category"] = T2_KINDS.get(text_of(child), "Other")
        elif tag == "configBean":
            config = child
    if config is not None:
        for entry in config:
            tag = localname(entry.tag)
            text = text_of(entry)
            if tag in ("wsdl", "endpoint", "mobyEndpoint") and not proc["endpoint"] and text:
                proc["endpoint"] = text
            elif tag in ("operation", "serviceName") and not proc["operation_name"] and text:
                proc["operation_name"] = text
            elif tag == "dataflow" and entry.get("ref") in by_id:
                nested = parse_dataflow(by_id[entry.get("ref")], by_id)
                proc["nested"] = nested
                if nested["description"]:
                    proc["embedded_description"] = nested["description"]
    return proc


def load_corpus(input_dir):
    """[(file_name, graph)] in sorted file order, sidecars applied."""
    out = []
    for path in sorted(input_dir.iterdir()):
        if path.suffix not in (".scufl", ".xml", ".t2flow"):
            continue
        data = path.read_bytes()
        if b"xscufl" in data:
            graph = parse_scufl(data)
        else:
            graph = parse_t2flow(data)
        sidecar = input_dir / (path.name + ".meta.json")
        if sidecar.exists():
            meta = json.loads(sidecar.read_text())
            for key in ("id", "title", "description", "tags"):
                if key in meta:
                    graph[key] = meta[key]
        out.append((path.name, graph))
    return out


# ------------------------------------------------------------- filter

def load_terms(path):
    base, removed, added = set(), set(), set()
    section = base
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        low = line.lower()
        if low == "[base]":
            section = base
        elif low == "[removed]":
            section = removed
        elif low == "[added]":
            section = added
        else:
            section.add(low)
    return (base - removed) | added


def filter_verdict(graph, terms):
    matched_terms, matched_fields = set(), set()
    fields = [("title", graph["title"]), ("description", graph["description"])]
    fields += [("tags", tag) for tag in graph["tags"]]
    for field, text in fields:
        text_tokens = folded(text)
        for term in terms:
            if contains_seq(text_tokens, term.split()):
                matched_terms.add(term)
                matched_fields.add(field)
    return {
        "workflow_id": graph["id"],
        "relevant": bool(matched_terms),
        "matched_terms": sorted(matched_terms),
        "matched_fields": sorted(matched_fields,
                                 key=["title", "description", "tags"].index),
    }


# -------------------------------------------------------------- prune

def prune(graph):
    shims = {p["name"] for p in graph["processors"] if p["category"] in SHIM_CATEGORIES}
    result = dict(graph)
    result["processors"] = [p for p in graph["processors"] if p["name"] not in shims]

    shim_adj = {}
    for (sp, _, kp, _) in graph["links"]:
        if sp in shims and kp in shims:
            shim_adj.setdefault(sp, []).append(kp)

    def survives(name):
        return name is None or name not in shims

    kept, seen = [], set()
    for link in graph["links"]:
        sp, _, kp, _ = link
        if survives(sp) and survives(kp):
            kept.append(link + (False,))
            seen.add(link)

    exits = {}
    for link in graph["links"]:
        sp, _, kp, _ = link
        if sp in shims and survives(kp):
            exits.setdefault(sp, []).append(link)

    def reachable(start):
        visited, stack = set(), [start]
        while stack:
            cur = stack.pop()
            if cur in visited:
                continue
            visited.add(cur)
            stack.extend(shim_adj.get(cur, []))
        return visited

    inferred = []
    for (sp, pp, kp, _) in graph["links"]:
        if not survives(sp) or kp not in shims:
            continue
        for shim in reachable(kp):
            for (_, _, vp, vq) in exits.get(shim, []):
                if sp is not None and vp is not None and sp == vp:
                    continue
                key = (sp, pp, vp, vq)
                if key not in seen:
                    seen.add(key)
                    inferred.append(key + (True,))
    inferred.sort(key=lambda l: tuple((x is not None, x) for x in l))
    result["links"] = kept + inferred
    return result


# ------------------------------------------------------------ harvest

def read_fixture_map(path):
    raw = json.loads(path.read_text())
    out = {}
    for key, value in raw.items():
        text = normalize_ws(value)
        if text:
            out[key] = text
    return out


def parse_wsdl(data, operation_filter):
    root = ElementTree.fromstring(data)
    frags = {}

    def put(kind, value):
        value = normalize_ws(value)
        if value and kind not in frags:
            frags[kind] = value

    def doc_of(node):
        for child in node:
            if localname(child.tag) == "documentation":
                return " ".join(t for t in child.itertext())
        return None

    service = next((n for n in root.iter() if localname(n.tag) == "service"), None)
    if service is not None:
        if service.get("name"):
            put("service_name", service.get("name"))
        text = doc_of(service)
        if text is not None:
            put("service_description", text)
    text = doc_of(root)
    if text is not None:
        put("service_description", text)

    operations = [n for n in root.iter() if localname(n.tag) == "portType"
                  for c in [None]
                  ]
    ops = []
    for port_type in (n for n in root.iter() if localname(n.tag) == "portType"):
        ops.extend(c for c in port_type if localname(c.tag) == "operation")
    if operation_filter is not None:
        chosen = next((o for o in ops if o.get("name") == operation_filter), None)
    else:
        chosen = ops[0] if ops else None
    if chosen is not None:
        if chosen.get("name"):
            put("operation_name", chosen.get("name"))
        text = doc_of(chosen)
        if text is not None:
            put("operation_description", text)
    return frags


def query_source(source, proc, corpus_dir):
    kind = source["kind"]
    if kind == "embedded-workflow":
        out = {}
        name = normalize_ws(proc["name"])
        if name:
            out["service_name"] = name
        if proc["embedded_description"]:
            text = normalize_ws(proc["embedded_description"])
            if text:
                out["service_description"] = text
        if proc["operation_name"]:
            text = normalize_ws(proc["operation_name"])
            if text:
                out["operation_name"] = text
        return out
    if kind == "wsdl":
        if proc["endpoint"] is None:
            raise RuntimeError(f"processor {proc['name']} has no endpoint")
        doc = corpus_dir / "http" / sha256_hex(proc["endpoint"])
        if not doc.exists():
            raise RuntimeError(f"no fixture for {proc['endpoint']}")
        return parse_wsdl(doc.read_bytes(), proc["operation_name"])
    if kind == "fixture":
        key = proc["endpoint"] or proc["name"]
        path = corpus_dir / source["locator"] / sha256_hex(key)
        if not path.exists():
            raise RuntimeError(f"no fixture for key {key}")
        return read_fixture_map(path)
    raise RuntimeError(f"unsupported source kind {kind}")


def harvest(workflow_id, proc, sources, corpus_dir):
    won, log = {}, []
    for source in sources:
        if len(won) == len(FRAGMENT_ORDER):
            break
        entry = {"workflow_id": workflow_id, "processor": proc["name"],
                 "source": source["id"], "fragments": [], "error": None}
        try:
            yielded = query_source(source, proc, corpus_dir)
            for kind in FRAGMENT_ORDER:
                if kind in yielded and kind not in won:
                    won[kind] = {"kind": kind, "text": yielded[kind],
                                 "source": source["id"]}
                    entry["fragments"].append(kind)
        except RuntimeError as err:
            entry["error"] = str(err)
        log.append(entry)
    if "service_name" not in won:
        name = normalize_ws(proc["name"])
        if name:
            won["service_name"] = {"kind": "service_name", "text": name,
                                   "source": "processor"}
    fragments = [won[k] for k in FRAGMENT_ORDER if k in won]
    return {
        "workflow_id": workflow_id,
        "processor": proc["name"],
        "fragments": fragments,
        "assembled": " ".join(f["text"] for f in fragments),
    }, log


# ----------------------------------------------------------- ontology

def parse_term_table(path):
    classes = []
    with path.open() as handle:
        reader = csv.DictReader(handle)
        for row in reader:
            classes.append({
                "uri": row["uri"],
                "label": row["label"],
                "synonyms": [s for s in row["synonyms"].split("|") if s],
                "identifiers": [s for s in row["identifiers"].split("|") if s],
                "parents": [s for s in row["parents"].split("|") if s],
                "obsolete": row["obsolete"].strip().lower() in ("true", "1", "yes"),
            })
    return classes


def parse_obo(path):
    classes, current = [], None
    for line in path.read_text().splitlines():
        line = line.strip()
        if line == "[Term]":
            current = {"uri": "", "label": "", "synonyms": [],
                       "identifiers": [], "parents": [], "obsolete": False}
            classes.append(current)
            continue
        if line.startswith("["):
            current = None
            continue
        if current is None or ":" not in line:
            continue
        tag, value = line.split(":", 1)
        # the id value is itself a URI containing colons
        if tag == "id":
            current["uri"] = line[len("id:"):].strip()
        elif tag == "name":
            current["label"] = value.strip()
        elif tag == "synonym":
            m = re.match(r'\s*"([^"]*)"', value)
            if m:
                current["synonyms"].append(m.group(1))
        elif tag == "is_a":
            current["parents"].append(line[len("is_a:"):].strip().split("!")[0].strip())
        elif tag == "alt_id":
            current["identifiers"].append(line[len("alt_id:"):].strip())
        elif tag == "is_obsolete":
            current["obsolete"] = value.strip().lower() == "true"
    return classes


class Ontology:
    def __init__(self, ident, classes):
        self.id = ident
        self.classes = {c["uri"]: c for c in classes}
        live = {u: c for u, c in self.classes.items() if not c["obsolete"]}
        members = set(live)
        changed = True
        while changed:
            changed = False
            for uri, cls in live.items():
                if uri not in members:
                    continue
                parents = [p for p in cls["parents"]]
                if parents and not any(p in members for p in parents):
                    members.discard(uri)
                    changed = True
        self.members = members
        self.children = {u: set() for u in members}
        for uri in members:
            for parent in live[uri]["parents"]:
                if parent in members:
                    self.children[parent].add(uri)
        self.node_count = len(members)

    def descendants(self, uri):
        seen, stack = set(), [uri]
        while stack:
            for child in self.children.get(stack.pop(), ()):
                if child not in seen:
                    seen.add(child)
                    stack.append(child)
        return seen

    def seco(self, uri):
        """None when the class carries no IC under this metric."""
        cls = self.classes.get(uri)
        if cls is None or cls["obsolete"] or uri not in self.members:
            return None
        if self.node_count < 2:
            return None
        hypo = len(self.descendants(uri))
        return 1.0 - math.log(hypo + 1) / math.log(self.node_count)


def load_ontologies(corpus_dir, config):
    store = {}
    for entry in config["ontology"]:
        path = corpus_dir / entry["path"]
        fmt = entry["format"].replace("-", "").replace("_", "").lower()
        classes = parse_obo(path) if fmt == "obo" else parse_term_table(path)
        store[entry["id"]] = Ontology(entry["id"], classes)
    return store


# ----------------------------------------------------------- annotate

def build_dictionary(store, min_single_token=3):
    trie = {}
    for ont_id in store:
        for cls in store[ont_id].classes.values():
            if cls["obsolete"]:
                continue
            for entry in [cls["label"]] + cls["synonyms"] + cls["identifiers"]:
                tokens = folded(entry)
                if not tokens:
                    continue
                if len(tokens) == 1 and len(tokens[0]) < min_single_token:
                    continue
                node = trie
                for token in tokens:
                    node = node.setdefault(token, {})
                node.setdefault(None, set()).add((ont_id, cls["uri"]))
    return trie


def annotate(text, trie):
    tokens = tokenize(text)
    out, i = [], 0
    while i < len(tokens):
        node, best = trie, None
        for j in range(i, len(tokens)):
            node = node.get(tokens[j][0])
            if node is None:
                break
            if None in node:
                best = (j + 1, node[None])
        if best is None:
            i += 1
            continue
        end, classes = best
        matched = text[tokens[i][1]:tokens[end - 1][2]]
        for ont, uri in sorted(classes):
            out.append({"class_uri": uri, "ontology": ont,
                        "matched_text": matched,
                        "span": {"start": i, "end": end}})
        i = end
    return out


def dedup(annotations, precedence):
    def rank(ont):
        return precedence.index(ont) if ont in precedence else len(precedence)

    best = {}
    for index, a in enumerate(annotations):
        key = (rank(a["ontology"]), a["ontology"],
               (a["span"]["start"], a["span"]["end"]), index)
        uri = a["class_uri"]
        if uri not in best or key < best[uri]:
            best[uri] = key
    winners = sorted(k[3] for k in best.values())
    return [annotations[i] for i in winners]


# -------------------------------------------------------------- score

def mean(values):
    values = list(values)
    return sum(values) / len(values) if values else None


def histogram(values):
    bins = [{"lower": i / 10, "count": 0} for i in range(10)]
    for v in values:
        index = min(int(v * 10), 9)
        bins[index]["count"] += 1
    return {"bins": bins}


def ic_of(store, ontology, uri):
    """(ic, unscorable_reason): exactly one is None."""
    ont = store[ontology]
    cls = ont.classes[uri]
    if cls["obsolete"]:
        return None, "obsolete"
    if uri not in ont.members:
        return None, "detached"
    if ont.node_count < 2:
        return None, "degenerate"
    return ont.seco(uri), None


def score(services, store, precedence):
    per_annotation, per_service = [], []
    per_workflow_acc, ontology_acc = {}, {}
    pre_ics, post_ics = [], []
    for service in services:
        best, scorable = None, 0
        for a in service["annotations"]:
            ic, reason = ic_of(store, a["ontology"], a["class_uri"])
            acc = ontology_acc.setdefault(a["ontology"], [0, [], set()])
            acc[0] += 1
            acc[2].add(a["class_uri"])
            if ic is not None:
                scorable += 1
                best = ic if best is None else max(best, ic)
                acc[1].append(ic)
                pre_ics.append(ic)
            record = {"workflow_id": service["workflow_id"],
                      "processor": service["processor"],
                      "class_uri": a["class_uri"], "ontology": a["ontology"],
                      "matched_text": a["matched_text"], "span": a["span"]}
            if ic is not None:
                record["ic"] = ic
            else:
                record["unscorable"] = reason
            per_annotation.append(record)
        for a in dedup(service["annotations"], precedence):
            ic, _ = ic_of(store, a["ontology"], a["class_uri"])
            if ic is not None:
                post_ics.append(ic)
        unscored = best is None
        service_ic = best if best is not None else 0.0
        per_service.append({"workflow_id": service["workflow_id"],
                            "processor": service["processor"],
                            "service_ic": service_ic, "unscored": unscored,
                            "annotation_count": len(service["annotations"]),
                            "scorable_count": scorable})
        wf = per_workflow_acc.setdefault(service["workflow_id"], [0, 0, 0.0])
        wf[0] += 1
        if not unscored:
            wf[1] += 1
            wf[2] += service_ic

    per_service.sort(key=lambda s: (s["workflow_id"], s["processor"]))
    per_annotation.sort(key=lambda a: (
        a["workflow_id"], a["processor"],
        (a["span"]["start"], a["span"]["end"]), a["ontology"], a["class_uri"]))
    per_workflow = [
        {"workflow_id": wid,
         "workflow_ic": (acc[2] / acc[1]) if acc[1] else 0.0,
         "unscored": acc[1] == 0, "services": acc[0], "scored_services": acc[1]}
        for wid, acc in sorted(per_workflow_acc.items())
    ]
    per_ontology = {}
    for ont, (count, ics, terms) in sorted(ontology_acc.items()):
        agg = {"annotation_count": count}
        if ics:
            agg["mean_ic"] = mean(ics)
            agg["min_ic"] = min(ics)
        agg["distinct_terms"] = len(terms)
        per_ontology[ont] = agg

    means = {}
    for key, value in [
        ("annotation_pre_dedup", mean(pre_ics)),
        ("annotation_post_dedup", mean(post_ics)),
        ("service_including_unscored", mean(s["service_ic"] for s in per_service)),
        ("service_excluding_unscored",
         mean(s["service_ic"] for s in per_service if not s["unscored"])),
        ("workflow_including_unscored", mean(w["workflow_ic"] for w in per_workflow)),
        ("workflow_excluding_unscored",
         mean(w["workflow_ic"] for w in per_workflow if not w["unscored"])),
    ]:
        if value is not None:
            means[key] = value

    return {
        "metric": "seco",
        "per_annotation": per_annotation,
        "per_service": per_service,
        "per_workflow": per_workflow,
        "per_ontology": per_ontology,
        "means": means,
        "histograms": {
            "annotations": histogram(pre_ics),
            "services": histogram(s["service_ic"] for s in per_service),
            "workflows": histogram(w["workflow_ic"] for w in per_workflow),
        },
    }


def compare_gold(gold_path, store):
    entries = {}
    for line in gold_path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        entity, term = line.split("\t")
        entries.setdefault(entity, set()).add(term)

    per_entity, term_ics, skipped = [], [], 0
    for entity, terms in sorted(entries.items()):
        best, counted, scorable = None, 0, 0
        for term in sorted(terms):
            onts = sorted(o for o in store if term in store[o].classes)
            if not onts:
                skipped += 1
                continue
            counted += 1
            value = None
            for ont in onts:
                ic, _ = ic_of(store, ont, term)
                if ic is not None:
                    value = ic
                    break
            if value is not None:
                scorable += 1
                term_ics.append(value)
                best = value if best is None else max(best, value)
        per_entity.append({"entity": entity,
                           "ic": best if best is not None else 0.0,
                           "unscored": best is None,
                           "terms": counted, "scorable_terms": scorable})
    out = {"metric": "seco", "entities": len(per_entity), "skipped_terms": skipped,
           "per_entity": per_entity,
           "histogram": histogram(e["ic"] for e in per_entity)}
    for key, value in [
        ("mean_term_ic", mean(term_ics)),
        ("mean_entity_including_unscored", mean(e["ic"] for e in per_entity)),
        ("mean_entity_excluding_unscored",
         mean(e["ic"] for e in per_entity if not e["unscored"])),
    ]:
        if value is not None:
            out[key] = value
    return out


# --------------------------------------------------------------- emit

def slug(name):
    out = re.sub(r"[^0-9A-Za-z]+", "-", name.lower()).strip("-")
    return out or "process"


def workflow_uri(ident, fallback):
    if ident and ident.isascii() and ident.isdigit():
        return MYEXPERIMENT + ident
    return fallback + slug(ident)


def emit_triples(graph, annotations, fallback):
    base = workflow_uri(graph["id"], fallback)
    uris, used = {}, set()
    for proc in graph["processors"]:
        candidate, suffix = slug(proc["name"]), 2
        while candidate in used:
            candidate = f"{slug(proc['name'])}-{suffix}"
            suffix += 1
        used.add(candidate)
        uris[proc["name"]] = f"{base}/{candidate}"
    upstream = {}
    for (sp, _, kp, _, *_rest) in graph["links"]:
        if sp is not None and kp is not None and sp != kp and sp in uris:
            upstream.setdefault(kp, set()).add(sp)
    triples = []
    for proc in graph["processors"]:
        subject = uris[proc["name"]]
        triples.append((subject, RDF_TYPE, PROCESS_CLASS))
        for cls in sorted(annotations.get(proc["name"], ())):
            triples.append((subject, RDF_TYPE, cls))
        triples.append((subject, TEMPLATE_PRED, base))
        for source in sorted(upstream.get(proc["name"], ())):
            triples.append((subject, USES_PRED, uris[source]))
    return triples


def to_ntriples(triples):
    return "".join(f"<{s}> <{p}> <{o}> .\n" for s, p, o in triples)


# ---------------------------------------------------------- reconcile

def approx(a, b, tol=1e-9):
    if isinstance(a, float) or isinstance(b, float):
        return isinstance(a, (int, float)) and isinstance(b, (int, float)) \
            and math.isclose(a, b, rel_tol=0, abs_tol=tol)
    if isinstance(a, dict) and isinstance(b, dict):
        return a.keys() == b.keys() and all(approx(a[k], b[k]) for k in a)
    if isinstance(a, list) and isinstance(b, list):
        return len(a) == len(b) and all(approx(x, y) for x, y in zip(a, b))
    return a == b


def first_diff(a, b, path="$"):
    if isinstance(a, dict) and isinstance(b, dict):
        for k in sorted(set(a) | set(b)):
            if k not in a or k not in b:
                return f"{path}.{k} present on one side only"
            d = first_diff(a[k], b[k], f"{path}.{k}")
            if d:
                return d
        return None
    if isinstance(a, list) and isinstance(b, list):
        if len(a) != len(b):
            return f"{path} length {len(a)} vs {len(b)}"
        for i, (x, y) in enumerate(zip(a, b)):
            d = first_diff(x, y, f"{path}[{i}]")
            if d:
                return d
        return None
    if not approx(a, b):
        return f"{path}: {a!r} vs {b!r}"
    return None


def compare_json(label, path, expected):
    actual = json.loads(path.read_text())
    diff = first_diff(expected, actual)
    check(label, diff is None, diff or "")


def read_jsonl(path):
    return [json.loads(line) for line in path.read_text().splitlines() if line]


def main():
    corpus_dir = Path(sys.argv[1]).resolve()
    ws = Path(sys.argv[2]).resolve()
    config = tomllib.loads((corpus_dir / "config.toml").read_text())

    corpus = load_corpus(corpus_dir / "input")
    terms = load_terms(corpus_dir / config["filter"]["terms"])

    print("filter")
    verdicts = [filter_verdict(g, terms) for _, g in corpus]
    compare_json("verdicts.json", ws / "filter" / "verdicts.json", verdicts)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for v in verdicts:
        writer.writerow([v["workflow_id"], str(v["relevant"]).lower(),
                         "|".join(v["matched_terms"])])
    expected_csv = "workflow_id,relevant,matched_terms\n" + buf.getvalue()
    check("verdicts.csv", (ws / "filter" / "verdicts.csv").read_text() == expected_csv)
    relevant = [(name, g) for (name, g), v in zip(corpus, verdicts) if v["relevant"]]
    stored = sorted(p.name for p in (ws / "filter" / "graphs").iterdir())
    check("relevant graphs stored",
          stored == sorted(name + ".json" for name, _ in relevant),
          f"{stored}")

    print("prune")
    pruned = [(name, prune(g)) for name, g in relevant]
    for name, graph in pruned:
        actual = json.loads((ws / "prune" / "graphs" / (name + ".json")).read_text())
        got_procs = [(p["name"], p["category"]) for p in actual["processors"]]
        want_procs = [(p["name"], p["category"]) for p in graph["processors"]]
        got_links = [(l.get("source_processor"), l["source_port"],
                      l.get("sink_processor"), l["sink_port"], l.get("inferred", False))
                     for l in actual["links"]]
        want_links = [tuple(l) for l in graph["links"]]
        ok = (got_procs == want_procs and got_links == want_links
              and actual["id"] == graph["id"])
        check(f"graph {name}", ok,
              f"procs {got_procs} vs {want_procs}; links {got_links} vs {want_links}")

    print("harvest")
    sources = config["source"]
    descriptions, log = [], []
    for name, graph in pruned:
        for proc in graph["processors"]:
            desc, entries = harvest(graph["id"], proc, sources, corpus_dir)
            descriptions.append(desc)
            log.extend(entries)
    actual_desc = json.loads((ws / "harvest" / "descriptions.json").read_text())
    diff = first_diff(descriptions, actual_desc)
    check("descriptions.json", diff is None, diff or "")
    actual_log = read_jsonl(ws / "harvest" / "harvest_log.jsonl")
    ok = len(actual_log) == len(log)
    detail = f"{len(actual_log)} entries vs {len(log)}"
    if ok:
        for mine, theirs in zip(log, actual_log):
            if (mine["workflow_id"], mine["processor"], mine["source"],
                    mine["fragments"]) != (theirs["workflow_id"], theirs["processor"],
                                           theirs["source"], theirs["fragments"]) \
                    or (mine["error"] is None) != (theirs.get("error") is None):
                ok, detail = False, f"mismatch at {mine} vs {theirs}"
                break
    check("harvest_log.jsonl", ok, detail)

    print("annotate")
    store = load_ontologies(corpus_dir, config)
    precedence = config["annotator"]["precedence"]
    trie = build_dictionary(store)
    services = [{"workflow_id": d["workflow_id"], "processor": d["processor"],
                 "annotations": annotate(d["assembled"], trie)}
                for d in descriptions]
    compare_json("services.json", ws / "annotate" / "services.json", services)

    def flat(sets):
        return [{"workflow": s["workflow_id"], "processor": s["processor"],
                 "class_uri": a["class_uri"], "ontology": a["ontology"],
                 "matched_text": a["matched_text"], "span": a["span"]}
                for s in sets for a in s["annotations"]]

    deduped = [{**s, "annotations": dedup(s["annotations"], precedence)}
               for s in services]
    diff = first_diff(flat(services), read_jsonl(ws / "annotate" / "annotations.jsonl"))
    check("annotations.jsonl", diff is None, diff or "")
    diff = first_diff(flat(deduped), read_jsonl(ws / "annotate" / "deduped.jsonl"))
    check("deduped.jsonl", diff is None, diff or "")

    print("score")
    report = score(services, store, precedence)
    compare_json("report.json", ws / "score" / "report.json", report)
    lines = ["histogram,bin_lower,count"]
    for kind in sorted(report["histograms"]):
        for b in report["histograms"][kind]["bins"]:
            lines.append(f"{kind},{b['lower']:.1f},{b['count']}")
    check("histograms.csv",
          (ws / "score" / "histograms.csv").read_text() == "\n".join(lines) + "\n")
    gold = compare_gold(corpus_dir / config["scoring"]["gold"], store)
    compare_json("gold.json", ws / "score" / "gold.json", gold)

    print("emit")
    fallback = config["emit"]["fallback_namespace"]
    grouped = {}
    for s in deduped:
        for a in s["annotations"]:
            grouped.setdefault(s["workflow_id"], {}) \
                .setdefault(s["processor"], set()).add(a["class_uri"])
    all_nt, triple_counts = [], {}
    for name, graph in pruned:
        triples = emit_triples(graph, grouped.get(graph["id"], {}), fallback)
        all_nt.append(to_ntriples(triples))
        triple_counts[name] = len(triples)
        check(f"{name}.ttl exists", (ws / "emit" / (name + ".ttl")).exists())
    check("all.nt", (ws / "emit" / "all.nt").read_text() == "".join(all_nt))
    compare_json("triple_counts.json", ws / "emit" / "triple_counts.json", triple_counts)

    print("manifest")
    manifest = json.loads((ws / "manifest.json").read_text())
    by_stage = {s["stage"]: s for s in manifest["stages"]}
    check("six stages", [s["stage"] for s in manifest["stages"]] ==
          ["filter", "prune", "harvest", "annotate", "score", "emit"],
          str([s["stage"] for s in manifest["stages"]]))
    expected_counts = {
        "filter": {"workflows_in": len(corpus), "relevant": len(relevant),
                   "irrelevant": len(corpus) - len(relevant), "parse_failures": 0},
        "prune": {
            "workflows": len(pruned),
            "shims_removed": sum(
                1 for _, g in relevant
                for p in g["processors"] if p["category"] in SHIM_CATEGORIES),
            "inferred_links": sum(
                1 for _, g in pruned for l in g["links"] if l[4]),
            "processors_out": sum(len(g["processors"]) for _, g in pruned),
        },
        "harvest": {"services": len(descriptions),
                    "name_only": sum(
                        1 for d in descriptions
                        if all(f["kind"] == "service_name" for f in d["fragments"])),
                    "source_errors": sum(1 for e in log if e["error"] is not None)},
        "annotate": {"services": len(services),
                     "services_annotated": sum(1 for s in services if s["annotations"]),
                     "services_zero_annotations": sum(
                         1 for s in services if not s["annotations"]),
                     "annotations_pre_dedup": len(flat(services)),
                     "annotations_post_dedup": len(flat(deduped))},
        "score": {"annotations": len(report["per_annotation"]),
                  "annotations_unscored": sum(
                      1 for a in report["per_annotation"] if "ic" not in a),
                  "services": len(report["per_service"]),
                  "workflows": len(report["per_workflow"])},
        "emit": {"workflows": len(triple_counts),
                 "triples": sum(triple_counts.values()), "failed_workflows": 0},
    }
    for stage, counts in expected_counts.items():
        check(f"{stage} counts", by_stage[stage]["counts"] == counts,
              f"{by_stage[stage]['counts']} vs {counts}")

    print()
    if failures:
        print(f"{len(failures)} check(s) failed")
        return 1
    print("all checks passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
