//! Batch pipeline for turning legacy Taverna workflows into semantically
//! annotated artifacts: relevance filtering, shim pruning, description
//! harvesting, dictionary annotation against biomedical ontologies,
//! information-content scoring and OPMW RDF emission.

pub mod annotate;
pub mod filter;
pub mod harvest;
pub mod ontology;
pub mod opmw;
pub mod score;
pub mod shim;
pub mod text;
pub mod workflow;
