//! Pipeline configuration: one TOML file. Relative paths resolve against
//! the config file's directory; a few keys can be overridden by CLI flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use wfsem_core::annotate::{PrecedenceOrder, MIN_SINGLE_TOKEN};
use wfsem_core::harvest::fetch::{DEFAULT_RETRIES, DEFAULT_TIMEOUT};
use wfsem_core::harvest::{MetadataSource, SourceKind};
use wfsem_core::ontology::{IcMetric, OntologyFormat};
use wfsem_core::workflow::{CategoryMap, ProcessorCategory};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config: cannot read {path}: {reason}")]
    Unreadable { path: PathBuf, reason: String },
    #[error("config: {0}")]
    Parse(String),
    #[error("config field {field}: {reason}")]
    BadValue { field: String, reason: String },
    #[error("config field {field}: path {path} does not exist")]
    MissingPath { field: String, path: PathBuf },
}

fn bad(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::BadValue {
        field: field.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default, rename = "ontology")]
    ontologies: Vec<RawOntology>,
    #[serde(default)]
    annotator: RawAnnotator,
    #[serde(default)]
    filter: RawFilter,
    #[serde(default, rename = "source")]
    sources: Vec<RawSource>,
    #[serde(default)]
    scoring: RawScoring,
    #[serde(default)]
    emit: RawEmit,
    #[serde(default)]
    fetch: RawFetch,
    #[serde(default)]
    categories: RawCategories,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawOntology {
    id: String,
    path: String,
    format: String,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawAnnotator {
    #[serde(default)]
    precedence: Vec<String>,
    min_single_token: Option<usize>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawFilter {
    terms: Option<String>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawSource {
    id: String,
    kind: String,
    #[serde(default)]
    locator: String,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawScoring {
    metric: Option<String>,
    zhou_k: Option<f64>,
    gold: Option<String>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawEmit {
    fallback_namespace: Option<String>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawFetch {
    timeout_secs: Option<u64>,
    retries: Option<u32>,
    /// When set, WSDL and registry lookups read `<dir>/<sha256(url)>`
    /// instead of the network.
    http_fixtures: Option<String>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawCategories {
    #[serde(default)]
    scufl: BTreeMap<String, String>,
    #[serde(default)]
    t2flow: BTreeMap<String, String>,
}

#[derive(Debug, Clone)]
pub struct OntologySpec {
    pub id: String,
    pub path: PathBuf,
    pub format: OntologyFormat,
}

/// Fully resolved configuration: paths absolute, enums parsed, defaults
/// applied, existence validated.
#[derive(Debug)]
pub struct Config {
    pub ontologies: Vec<OntologySpec>,
    pub precedence: PrecedenceOrder,
    pub min_single_token: usize,
    pub terms_path: Option<PathBuf>,
    pub sources: Vec<MetadataSource>,
    pub metric: IcMetric,
    pub gold_path: Option<PathBuf>,
    pub fallback_namespace: String,
    pub timeout: Duration,
    pub retries: u32,
    pub http_fixtures: Option<PathBuf>,
    pub categories: CategoryMap,
}

fn metric_from_name(name: &str, zhou_k: f64) -> Result<IcMetric, ConfigError> {
    IcMetric::from_config(name, Some(zhou_k)).ok_or_else(|| {
        bad(
            "scoring.metric",
            format!("unknown metric {name:?}, expected seco, zhou or sanchez"),
        )
    })
}

impl Config {
    /// Configuration with every key defaulted, for stages that need none.
    pub fn defaults() -> Config {
        Config::resolve(RawConfig::default(), Path::new("."))
            .expect("default configuration is valid")
    }

    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Unreadable {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        let raw: RawConfig =
            toml::from_str(&text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Config::resolve(raw, &dir)
    }

    fn resolve(raw: RawConfig, dir: &Path) -> Result<Config, ConfigError> {
        let mut ontologies = Vec::new();
        for entry in &raw.ontologies {
            let format = OntologyFormat::parse_name(&entry.format.replace(['-', '_'], ""))
                .map_err(|e| bad("ontology.format", e.to_string()))?;
            let path = existing(dir, &entry.path, "ontology.path")?;
            if ontologies.iter().any(|o: &OntologySpec| o.id == entry.id) {
                return Err(bad("ontology.id", format!("duplicate id {:?}", entry.id)));
            }
            ontologies.push(OntologySpec {
                id: entry.id.clone(),
                path,
                format,
            });
        }

        for id in &raw.annotator.precedence {
            if !ontologies.iter().any(|o| &o.id == id) {
                return Err(bad(
                    "annotator.precedence",
                    format!("id {id:?} is not a loaded ontology"),
                ));
            }
        }
        let precedence = if raw.annotator.precedence.is_empty() {
            PrecedenceOrder::default()
        } else {
            PrecedenceOrder::new(raw.annotator.precedence.clone())
        };

        let terms_path = raw
            .filter
            .terms
            .as_deref()
            .map(|p| existing(dir, p, "filter.terms"))
            .transpose()?;

        let mut sources = Vec::new();
        for entry in &raw.sources {
            let kind = SourceKind::parse_name(&entry.kind).ok_or_else(|| {
                bad("source.kind", format!("unknown source kind {:?}", entry.kind))
            })?;
            let locator = if kind == SourceKind::Fixture {
                existing(dir, &entry.locator, "source.locator")?
                    .to_string_lossy()
                    .into_owned()
            } else {
                entry.locator.clone()
            };
            sources.push(MetadataSource {
                id: entry.id.clone(),
                kind,
                locator,
            });
        }

        let zhou_k = raw.scoring.zhou_k.unwrap_or(0.5);
        if !(0.0..=1.0).contains(&zhou_k) {
            return Err(bad("scoring.zhou_k", "must lie in [0, 1]"));
        }
        let metric = metric_from_name(raw.scoring.metric.as_deref().unwrap_or("zhou"), zhou_k)?;
        let gold_path = raw
            .scoring
            .gold
            .as_deref()
            .map(|p| existing(dir, p, "scoring.gold"))
            .transpose()?;

        let http_fixtures = raw
            .fetch
            .http_fixtures
            .as_deref()
            .map(|p| existing(dir, p, "fetch.http_fixtures"))
            .transpose()?;

        let mut categories = CategoryMap::default();
        for (table, field, target) in [
            (&raw.categories.scufl, "categories.scufl", &mut categories.scufl),
            (&raw.categories.t2flow, "categories.t2flow", &mut categories.t2flow),
        ] {
            for (key, value) in table {
                let category = ProcessorCategory::parse_name(value)
                    .ok_or_else(|| bad(field, format!("unknown category {value:?}")))?;
                target.insert(key.clone(), category);
            }
        }

        Ok(Config {
            ontologies,
            precedence,
            min_single_token: raw.annotator.min_single_token.unwrap_or(MIN_SINGLE_TOKEN),
            terms_path,
            sources,
            metric,
            gold_path,
            fallback_namespace: raw
                .emit
                .fallback_namespace
                .unwrap_or_else(|| "http://example.org/workflows/".to_string()),
            timeout: Duration::from_secs(raw.fetch.timeout_secs.unwrap_or(DEFAULT_TIMEOUT.as_secs())),
            retries: raw.fetch.retries.unwrap_or(DEFAULT_RETRIES),
            http_fixtures,
            categories,
        })
    }

    /// CLI flags win over config keys.
    pub fn apply_overrides(
        &mut self,
        metric: Option<&str>,
        zhou_k: Option<f64>,
    ) -> Result<(), ConfigError> {
        let current_k = match self.metric {
            IcMetric::Zhou { k } => k,
            _ => 0.5,
        };
        let k = zhou_k.unwrap_or(current_k);
        if !(0.0..=1.0).contains(&k) {
            return Err(bad("--zhou-k", "must lie in [0, 1]"));
        }
        match metric {
            Some(name) => self.metric = metric_from_name(name, k)?,
            None => {
                if let IcMetric::Zhou { .. } = self.metric {
                    self.metric = IcMetric::Zhou { k };
                }
            }
        }
        Ok(())
    }

}

fn existing(dir: &Path, raw: &str, field: &str) -> Result<PathBuf, ConfigError> {
    if raw.is_empty() {
        return Err(bad(field, "empty path"));
    }
    let path = dir.join(raw);
    if !path.exists() {
        return Err(ConfigError::MissingPath {
            field: field.to_string(),
            path,
        });
    }
    Ok(path)
}
