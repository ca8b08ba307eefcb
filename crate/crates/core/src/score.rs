//! IC scoring and aggregation: per annotation, per service (max), per
//! workflow (mean), per ontology, histogram data, and the gold-standard
//! comparison.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotate::{dedup, PrecedenceOrder, ServiceAnnotations, Span};
use crate::ontology::{IcMetric, IcOutcome, OntologyError, OntologyStore, UnscorableReason};

pub const HISTOGRAM_BINS: usize = 10;

#[derive(Debug, Error)]
pub enum GoldError {
    #[error("gold standard line {line}: expected two tab-separated columns")]
    BadLine { line: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredAnnotation {
    pub workflow_id: String,
    pub processor: String,
    pub class_uri: String,
    pub ontology: String,
    pub matched_text: String,
    pub span: Span,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unscorable: Option<UnscorableReason>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceScore {
    pub workflow_id: String,
    pub processor: String,
    /// Max over the full pre-dedup annotation set; 0 when unscored.
    pub service_ic: f64,
    /// True when no annotation of this service is scorable.
    pub unscored: bool,
    pub annotation_count: usize,
    pub scorable_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkflowScore {
    pub workflow_id: String,
    /// Mean of service_ic over scored services; 0 when none qualify.
    pub workflow_ic: f64,
    pub unscored: bool,
    pub services: usize,
    pub scored_services: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OntologyAggregate {
    /// All annotations drawn from this ontology, scorable or not (pre-dedup).
    pub annotation_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_ic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_ic: Option<f64>,
    pub distinct_terms: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bins: Vec<HistogramBin>,
}

impl Histogram {
    /// Ten equal bins over [0,1], right-open except the last.
    pub fn build<I: IntoIterator<Item = f64>>(values: I) -> Histogram {
        let mut counts = vec![0usize; HISTOGRAM_BINS];
        for v in values {
            let clamped = v.clamp(0.0, 1.0);
            let index = ((clamped * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
            counts[index] += 1;
        }
        Histogram {
            bins: counts
                .into_iter()
                .enumerate()
                .map(|(i, count)| HistogramBin {
                    lower: i as f64 / HISTOGRAM_BINS as f64,
                    count,
                })
                .collect(),
        }
    }

    pub fn total(&self) -> usize {
        self.bins.iter().map(|b| b.count).sum()
    }
}

/// Mean IC under the reporting variants the aggregates come in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeans {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub annotation_pre_dedup: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub annotation_post_dedup: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub service_including_unscored: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub service_excluding_unscored: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workflow_including_unscored: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workflow_excluding_unscored: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcReport {
    pub metric: String,
    pub per_annotation: Vec<ScoredAnnotation>,
    pub per_service: Vec<ServiceScore>,
    pub per_workflow: Vec<WorkflowScore>,
    pub per_ontology: BTreeMap<String, OntologyAggregate>,
    pub means: ReportMeans,
    /// Keys: annotations, services, workflows.
    pub histograms: BTreeMap<String, Histogram>,
}

fn mean<I: IntoIterator<Item = f64>>(values: I) -> Option<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for v in values {
        sum += v;
        count += 1;
    }
    (count > 0).then(|| sum / count as f64)
}

/// Scores every service's full pre-dedup annotation set and aggregates.
/// `services` is the service universe: processors without annotations must
/// appear with empty sets so unscored counts are right.
pub fn score(
    services: &[ServiceAnnotations],
    store: &OntologyStore,
    metric: IcMetric,
    order: &PrecedenceOrder,
) -> Result<IcReport, OntologyError> {
    let mut per_annotation = Vec::new();
    let mut per_service = Vec::new();
    let mut per_workflow_acc: BTreeMap<String, (usize, usize, f64)> = BTreeMap::new();
    let mut ontology_acc: BTreeMap<String, (usize, Vec<f64>, BTreeSet<String>)> = BTreeMap::new();
    let mut pre_dedup_ics = Vec::new();
    let mut post_dedup_ics = Vec::new();

    for service in services {
        let mut best: Option<f64> = None;
        let mut scorable_count = 0usize;
        let mut outcome_by_index = Vec::with_capacity(service.annotations.len());
        for annotation in &service.annotations {
            let outcome =
                store.information_content(&annotation.ontology, &annotation.class_uri, metric)?;
            let entry = ontology_acc.entry(annotation.ontology.clone()).or_default();
            entry.0 += 1;
            entry.2.insert(annotation.class_uri.clone());
            let (ic, unscorable) = match outcome {
                IcOutcome::Score(v) => {
                    scorable_count += 1;
                    best = Some(best.map_or(v, |b: f64| b.max(v)));
                    entry.1.push(v);
                    pre_dedup_ics.push(v);
                    (Some(v), None)
                }
                IcOutcome::Unscorable(reason) => (None, Some(reason)),
            };
            outcome_by_index.push(ic);
            per_annotation.push(ScoredAnnotation {
                workflow_id: service.workflow_id.clone(),
                processor: service.processor.clone(),
                class_uri: annotation.class_uri.clone(),
                ontology: annotation.ontology.clone(),
                matched_text: annotation.matched_text.clone(),
                span: annotation.span,
                ic,
                unscorable,
            });
        }
        for surviving in dedup(&service.annotations, order) {
            let outcome =
                store.information_content(&surviving.ontology, &surviving.class_uri, metric)?;
            if let IcOutcome::Score(v) = outcome {
                post_dedup_ics.push(v);
            }
        }

        let unscored = best.is_none();
        let service_ic = best.unwrap_or(0.0);
        per_service.push(ServiceScore {
            workflow_id: service.workflow_id.clone(),
            processor: service.processor.clone(),
            service_ic,
            unscored,
            annotation_count: service.annotations.len(),
            scorable_count,
        });
        let wf = per_workflow_acc
            .entry(service.workflow_id.clone())
            .or_default();
        wf.0 += 1;
        if !unscored {
            wf.1 += 1;
            wf.2 += service_ic;
        }
    }

    per_service.sort_by(|a, b| {
        (&a.workflow_id, &a.processor).cmp(&(&b.workflow_id, &b.processor))
    });
    per_annotation.sort_by(|a, b| {
        (&a.workflow_id, &a.processor, a.span, &a.ontology, &a.class_uri)
            .cmp(&(&b.workflow_id, &b.processor, b.span, &b.ontology, &b.class_uri))
    });

    let per_workflow: Vec<WorkflowScore> = per_workflow_acc
        .into_iter()
        .map(|(workflow_id, (services, scored, sum))| WorkflowScore {
            workflow_id,
            workflow_ic: if scored > 0 { sum / scored as f64 } else { 0.0 },
            unscored: scored == 0,
            services,
            scored_services: scored,
        })
        .collect();

    let per_ontology: BTreeMap<String, OntologyAggregate> = ontology_acc
        .into_iter()
        .map(|(id, (count, ics, terms))| {
            (
                id,
                OntologyAggregate {
                    annotation_count: count,
                    mean_ic: mean(ics.iter().copied()),
                    min_ic: ics.iter().copied().reduce(f64::min),
                    distinct_terms: terms.len(),
                },
            )
        })
        .collect();

    let means = ReportMeans {
        annotation_pre_dedup: mean(pre_dedup_ics.iter().copied()),
        annotation_post_dedup: mean(post_dedup_ics.iter().copied()),
        service_including_unscored: mean(per_service.iter().map(|s| s.service_ic)),
        service_excluding_unscored: mean(
            per_service
                .iter()
                .filter(|s| !s.unscored)
                .map(|s| s.service_ic),
        ),
        workflow_including_unscored: mean(per_workflow.iter().map(|w| w.workflow_ic)),
        workflow_excluding_unscored: mean(
            per_workflow
                .iter()
                .filter(|w| !w.unscored)
                .map(|w| w.workflow_ic),
        ),
    };

    let mut histograms = BTreeMap::new();
    histograms.insert(
        "annotations".to_string(),
        Histogram::build(pre_dedup_ics.iter().copied()),
    );
    histograms.insert(
        "services".to_string(),
        Histogram::build(per_service.iter().map(|s| s.service_ic)),
    );
    histograms.insert(
        "workflows".to_string(),
        Histogram::build(per_workflow.iter().map(|w| w.workflow_ic)),
    );

    Ok(IcReport {
        metric: metric.describe(),
        per_annotation,
        per_service,
        per_workflow,
        per_ontology,
        means,
        histograms,
    })
}

/// One-line-per-kind CSV export of the report histograms.
pub fn histograms_csv(histograms: &BTreeMap<String, Histogram>) -> String {
    let mut out = String::from("histogram,bin_lower,count\n");
    for (kind, histogram) in histograms {
        for bin in &histogram.bins {
            out.push_str(&format!("{kind},{:.1},{}\n", bin.lower, bin.count));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldEntry {
    pub entity: String,
    pub terms: BTreeSet<String>,
}

/// Parses the two-column TSV gold standard (entity id, term uri). Repeated
/// entity ids accumulate terms; blank lines and `#` comments are skipped.
pub fn parse_gold_tsv(text: &str) -> Result<Vec<GoldEntry>, GoldError> {
    let mut entries: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (index, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let Some((entity, term)) = line.split_once('\t') else {
            return Err(GoldError::BadLine { line: index + 1 });
        };
        let entity = entity.trim();
        let term = term.trim();
        if entity.is_empty() || term.is_empty() {
            return Err(GoldError::BadLine { line: index + 1 });
        }
        entries
            .entry(entity.to_string())
            .or_default()
            .insert(term.to_string());
    }
    Ok(entries
        .into_iter()
        .map(|(entity, terms)| GoldEntry { entity, terms })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityScore {
    pub entity: String,
    /// Max over the entity's scorable term ICs; 0 when unscored.
    pub ic: f64,
    pub unscored: bool,
    pub terms: usize,
    pub scorable_terms: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldComparison {
    pub metric: String,
    pub entities: usize,
    /// Terms whose URI no loaded ontology defines.
    pub skipped_terms: usize,
    pub per_entity: Vec<EntityScore>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_term_ic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_entity_including_unscored: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_entity_excluding_unscored: Option<f64>,
    pub histogram: Histogram,
}

/// Scores gold-standard entities exactly like services: entity IC is the
/// max over its terms. A term URI defined by several ontologies takes the
/// value from the lexicographically first ontology that can score it.
pub fn compare_gold(
    gold: &[GoldEntry],
    store: &OntologyStore,
    metric: IcMetric,
) -> Result<GoldComparison, OntologyError> {
    let mut per_entity = Vec::new();
    let mut term_ics = Vec::new();
    let mut skipped_terms = 0usize;
    for entry in gold {
        let mut best: Option<f64> = None;
        let mut counted_terms = 0usize;
        let mut scorable_terms = 0usize;
        for term in &entry.terms {
            let ontologies = store.ontologies_for_uri(term);
            if ontologies.is_empty() {
                skipped_terms += 1;
                continue;
            }
            counted_terms += 1;
            let mut value = None;
            for ontology in ontologies {
                if let IcOutcome::Score(v) = store.information_content(ontology, term, metric)? {
                    value = Some(v);
                    break;
                }
            }
            if let Some(v) = value {
                scorable_terms += 1;
                term_ics.push(v);
                best = Some(best.map_or(v, |b: f64| b.max(v)));
            }
        }
        per_entity.push(EntityScore {
            entity: entry.entity.clone(),
            ic: best.unwrap_or(0.0),
            unscored: best.is_none(),
            terms: counted_terms,
            scorable_terms,
        });
    }
    let histogram = Histogram::build(per_entity.iter().map(|e| e.ic));
    Ok(GoldComparison {
        metric: metric.describe(),
        entities: per_entity.len(),
        skipped_terms,
        mean_term_ic: mean(term_ics.iter().copied()),
        mean_entity_including_unscored: mean(per_entity.iter().map(|e| e.ic)),
        mean_entity_excluding_unscored: mean(
            per_entity.iter().filter(|e| !e.unscored).map(|e| e.ic),
        ),
        per_entity,
        histogram,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotate::Annotation;
    use crate::ontology::OntologyFormat;

    fn toy_store() -> OntologyStore {
        let csv = "\
uri,label,synonyms,identifiers,definition,parents,obsolete
R,Root,,,,,false
A,Branch a,,,,R,false
B,Branch b,,,,R,false
A1,Leaf a1,,,,A,false
A2,Leaf a2,,,,A,false
B1,Mid b1,,,,B,false
B1a,Leaf b1a,,,,B1,false
OLD,Gone,,,,R,true
";
        let mut builder = OntologyStore::builder();
        builder
            .load_ontology("toy", csv.as_bytes(), OntologyFormat::TermTable)
            .unwrap();
        builder.build().unwrap()
    }

    fn ann(uri: &str) -> Annotation {
        Annotation {
            class_uri: uri.to_string(),
            ontology: "toy".to_string(),
            matched_text: uri.to_lowercase(),
            span: Span { start: 0, end: 1 },
            ic: None,
        }
    }

    fn service(workflow: &str, processor: &str, uris: &[&str]) -> ServiceAnnotations {
        ServiceAnnotations {
            workflow_id: workflow.to_string(),
            processor: processor.to_string(),
            annotations: uris.iter().map(|u| ann(u)).collect(),
        }
    }

    #[test]
    fn service_ic_is_max_and_ignores_unscorable() {
        let store = toy_store();
        let services = vec![service("wf", "p1", &["A", "A1", "OLD"])];
        let report = score(&services, &store, IcMetric::Seco, &PrecedenceOrder::default()).unwrap();
        let s = &report.per_service[0];
        assert_eq!(s.service_ic, 1.0, "A1 is a leaf under Seco");
        assert!(!s.unscored);
        assert_eq!(s.annotation_count, 3);
        assert_eq!(s.scorable_count, 2);
        let old = report
            .per_annotation
            .iter()
            .find(|a| a.class_uri == "OLD")
            .unwrap();
        assert_eq!(old.unscorable, Some(UnscorableReason::Obsolete));
        assert_eq!(old.ic, None);
    }

    #[test]
    fn workflow_ic_means_scored_services() {
        let store = toy_store();
        // Seco: R=0 scorable, A1=1
        let services = vec![
            service("wf", "p1", &["A1"]),
            service("wf", "p2", &["R"]),
            service("wf", "p3", &["OLD"]),
            service("wf", "p4", &[]),
        ];
        let report = score(&services, &store, IcMetric::Seco, &PrecedenceOrder::default()).unwrap();
        let w = &report.per_workflow[0];
        assert_eq!(w.services, 4);
        assert_eq!(w.scored_services, 2);
        assert!((w.workflow_ic - 0.5).abs() < 1e-12, "(1.0 + 0.0) / 2");
        let p3 = report.per_service.iter().find(|s| s.processor == "p3").unwrap();
        assert!(p3.unscored);
        assert_eq!(p3.service_ic, 0.0);
    }

    #[test]
    fn mean_variants_and_ordering_invariant() {
        let store = toy_store();
        let services = vec![
            service("wf1", "p1", &["A1"]),
            service("wf1", "p2", &[]),
            service("wf2", "p1", &["A"]),
        ];
        let report = score(&services, &store, IcMetric::Seco, &PrecedenceOrder::default()).unwrap();
        let incl = report.means.service_including_unscored.unwrap();
        let excl = report.means.service_excluding_unscored.unwrap();
        assert!(excl >= incl, "mean over scored only never sinks lower");
        let a_ic = 1.0 - (3.0f64.ln() / 7.0f64.ln());
        assert!((incl - (1.0 + 0.0 + a_ic) / 3.0).abs() < 1e-12);
        assert!((excl - (1.0 + a_ic) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn dedup_does_not_move_service_ic() {
        let store = toy_store();
        let mut s = service("wf", "p", &["A", "A"]);
        s.annotations[1].span = Span { start: 3, end: 4 };
        let order = PrecedenceOrder::default();
        let report = score(&[s.clone()], &store, IcMetric::Seco, &order).unwrap();
        let deduped = ServiceAnnotations {
            workflow_id: s.workflow_id.clone(),
            processor: s.processor.clone(),
            annotations: dedup(&s.annotations, &order),
        };
        let report2 = score(&[deduped], &store, IcMetric::Seco, &order).unwrap();
        assert_eq!(
            report.per_service[0].service_ic,
            report2.per_service[0].service_ic
        );
    }

    #[test]
    fn per_ontology_aggregates_cover_pre_dedup() {
        let store = toy_store();
        let services = vec![service("wf", "p", &["A", "A", "OLD"])];
        let report = score(&services, &store, IcMetric::Seco, &PrecedenceOrder::default()).unwrap();
        let agg = &report.per_ontology["toy"];
        assert_eq!(agg.annotation_count, 3, "duplicates and unscorables count");
        assert_eq!(agg.distinct_terms, 2);
        let a_ic = 1.0 - (3.0f64.ln() / 7.0f64.ln());
        assert!((agg.mean_ic.unwrap() - a_ic).abs() < 1e-12);
        assert!((agg.min_ic.unwrap() - a_ic).abs() < 1e-12);
    }

    #[test]
    fn histogram_binning_and_totals() {
        let h = Histogram::build([0.0, 0.05, 0.1, 0.95, 1.0]);
        assert_eq!(h.bins.len(), HISTOGRAM_BINS);
        assert_eq!(h.bins[0].count, 2, "[0.0, 0.1) holds 0.0 and 0.05");
        assert_eq!(h.bins[1].count, 1, "right-open: 0.1 lands in the second bin");
        assert_eq!(h.bins[9].count, 2, "last bin is closed and takes 1.0");
        assert_eq!(h.total(), 5);
        let store = toy_store();
        let services = vec![service("wf", "p", &["A1", "OLD"])];
        let report = score(&services, &store, IcMetric::Seco, &PrecedenceOrder::default()).unwrap();
        assert_eq!(
            report.histograms["annotations"].total(),
            1,
            "only scorable annotations are binned"
        );
        assert_eq!(report.histograms["services"].total(), 1);
    }

    #[test]
    fn histograms_csv_shape() {
        let mut histograms = BTreeMap::new();
        histograms.insert("services".to_string(), Histogram::build([0.55]));
        let csv = histograms_csv(&histograms);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "histogram,bin_lower,count");
        assert_eq!(lines.len(), 1 + HISTOGRAM_BINS);
        assert_eq!(lines[6], "services,0.5,1");
    }

    #[test]
    fn unknown_annotation_class_is_an_error() {
        let store = toy_store();
        let services = vec![service("wf", "p", &["MISSING"])];
        assert!(matches!(
            score(&services, &store, IcMetric::Seco, &PrecedenceOrder::default()),
            Err(OntologyError::UnknownClass { .. })
        ));
    }

    #[test]
    fn gold_tsv_parse_and_errors() {
        let entries =
            parse_gold_tsv("# header\ngene1\tA1\ngene1\tR\ngene2\tB1a\n\n").unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].entity, "gene1");
        assert_eq!(entries[0].terms.len(), 2);
        assert!(matches!(
            parse_gold_tsv("no-tab-here\n"),
            Err(GoldError::BadLine { line: 1 })
        ));
    }

    #[test]
    fn gold_comparison_mirrors_service_scoring() {
        let store = toy_store();
        let gold = vec![
            GoldEntry {
                entity: "gene1".to_string(),
                terms: ["R".to_string()].into(),
            },
            GoldEntry {
                entity: "gene2".to_string(),
                terms: ["A1".to_string(), "UNKNOWN".to_string()].into(),
            },
            GoldEntry {
                entity: "gene3".to_string(),
                terms: ["OLD".to_string()].into(),
            },
        ];
        let report = compare_gold(&gold, &store, IcMetric::Seco).unwrap();
        assert_eq!(report.entities, 3);
        assert_eq!(report.skipped_terms, 1);
        let g1 = &report.per_entity[0];
        assert_eq!(g1.ic, 0.0, "root scores zero under Seco");
        assert!(!g1.unscored);
        let g2 = &report.per_entity[1];
        assert_eq!(g2.ic, 1.0);
        assert_eq!(g2.terms, 1, "unknown term skipped");
        let g3 = &report.per_entity[2];
        assert!(g3.unscored, "obsolete-only entity is unscored");
        assert_eq!(report.histogram.total(), 3);
        assert!(
            report.mean_entity_excluding_unscored.unwrap()
                >= report.mean_entity_including_unscored.unwrap()
        );
    }
}
