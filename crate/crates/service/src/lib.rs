//! Annotation backend: serves sampled correspondences with entity cards and
//! records verdicts in an append-only log per session.
//!
//! A session lives in its own directory under the sessions root:
//! `sample.jsonl` (the sampled items), `session.json` (graphs and report
//! bundle to show, optional) and `judgments.log`.

mod http;
mod store;

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use kgbench_core::graph::{ingest_ntriples, graph_id_from_path, ExtractionConfig, KnowledgeGraph, ParseMode};
use kgbench_core::report::{read_cells, Aggregates, EvaluatedCell, Manifest, AGGREGATES_FILE, CELLS_FILE, MANIFEST_FILE};
use kgbench_core::sampling::{estimate_precision, read_jsonl, wilson_interval, Judgment, SampleItem, DEFAULT_CONFIDENCE};
use kgbench_core::PrecisionEstimate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use http::router;
pub use store::{JudgmentLog, SessionState, Tally, JUDGMENT_LOG};

pub const SAMPLE_FILE: &str = "sample.jsonl";
pub const SESSION_FILE: &str = "session.json";
/// Property-value pairs shown per entity.
pub const CARD_FACTS: usize = 25;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown session '{0}'")]
    NotFound(String),
    #[error("item {item_id} does not belong to session {session}")]
    ForeignItem { item_id: String, session: String },
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("storage failure, retry: {0}")]
    Storage(String),
    #[error("{0}")]
    Load(String),
}

/// Contents of `session.json`. Paths are relative to the session directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_graph: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_graph: Option<PathBuf>,
    /// Report bundle directory served on the dashboard endpoint.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fact {
    pub property: String,
    pub value: String,
}

/// What an annotator sees of one entity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntityCard {
    pub iri: String,
    /// False when the entity is absent from the loaded graph (or no graph is loaded).
    pub found: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<&'static str>,
    pub labels: Vec<String>,
    pub alt_labels: Vec<String>,
    pub facts: Vec<Fact>,
}

pub fn entity_card(graph: Option<&KnowledgeGraph>, iri: &str) -> EntityCard {
    let found = graph.and_then(|g| g.entity(iri).map(|id| (g, id)));
    match found {
        Some((g, id)) => EntityCard {
            iri: iri.to_owned(),
            found: true,
            kind: Some(g.kind(id).as_str()),
            labels: g.labels(id).to_vec(),
            alt_labels: g.alt_labels(id).to_vec(),
            facts: g
                .facts(id)
                .take(CARD_FACTS)
                .map(|(p, o)| Fact { property: p.as_str().to_owned(), value: o.text().to_owned() })
                .collect(),
        },
        None => EntityCard { iri: iri.to_owned(), found: false, kind: None, labels: Vec::new(), alt_labels: Vec::new(), facts: Vec::new() },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Progress {
    pub judged: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NextTask {
    pub done: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub item: Option<SampleItem>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<EntityCard>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<EntityCard>,
    pub progress: Progress,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Acknowledgment {
    pub item_id: String,
    pub annotator: String,
    pub revision: bool,
    pub revisions: usize,
    pub tally: Tally,
    /// Wilson interval over decisive verdicts; absent while there are none.
    pub interval: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnotatorSummary {
    pub tally: Tally,
    pub estimate: Option<PrecisionEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItemRow {
    pub index: usize,
    pub item_id: String,
    pub source: String,
    pub target: String,
    /// Effective verdict per annotator.
    pub verdicts: BTreeMap<String, kgbench_core::sampling::Verdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub session: String,
    pub matcher: Option<String>,
    pub task: Option<String>,
    /// Pooled over all annotators' effective decisive verdicts; `None` when there are none.
    pub estimate: Option<PrecisionEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub tally: Tally,
    pub revisions: usize,
    pub per_annotator: BTreeMap<String, AnnotatorSummary>,
    pub items: Vec<ItemRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dashboard {
    pub aggregates: Aggregates,
    pub cells: Vec<EvaluatedCell>,
    pub manifest: Option<Manifest>,
}

struct Inner {
    log: JudgmentLog,
    state: SessionState,
}

pub struct Session {
    pub id: String,
    pub sample: Vec<SampleItem>,
    index: HashMap<String, usize>,
    source: Option<Arc<KnowledgeGraph>>,
    target: Option<Arc<KnowledgeGraph>>,
    report: Option<PathBuf>,
    inner: RwLock<Inner>,
}

fn valid_session_id(id: &str) -> bool {
    !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.') && !id.starts_with('.')
}

impl Session {
    fn load(dir: &Path, graphs: &mut HashMap<PathBuf, Arc<KnowledgeGraph>>) -> Result<Self, ServiceError> {
        let id = dir.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_owned();
        if !valid_session_id(&id) {
            return Err(ServiceError::Load(format!("invalid session directory name '{id}'")));
        }
        let load_err = |p: &Path, e: &dyn std::fmt::Display| ServiceError::Load(format!("{}: {e}", p.display()));
        let sample_path = dir.join(SAMPLE_FILE);
        let file = std::fs::File::open(&sample_path).map_err(|e| load_err(&sample_path, &e))?;
        let sample: Vec<SampleItem> = read_jsonl(std::io::BufReader::new(file)).map_err(|e| load_err(&sample_path, &e))?;
        let mut index = HashMap::new();
        for (i, item) in sample.iter().enumerate() {
            if index.insert(item.id.clone(), i).is_some() {
                return Err(ServiceError::Load(format!("{}: duplicate item id {}", sample_path.display(), item.id)));
            }
        }

        let config_path = dir.join(SESSION_FILE);
        let config: SessionConfig = if config_path.exists() {
            let text = std::fs::read_to_string(&config_path).map_err(|e| load_err(&config_path, &e))?;
            serde_json::from_str(&text).map_err(|e| load_err(&config_path, &e))?
        } else {
            SessionConfig::default()
        };
        let mut graph = |p: &Option<PathBuf>| -> Result<Option<Arc<KnowledgeGraph>>, ServiceError> {
            let Some(p) = p else { return Ok(None) };
            let path = dir.join(p);
            if let Some(g) = graphs.get(&path) {
                return Ok(Some(g.clone()));
            }
            let g = ingest_ntriples(&path, &graph_id_from_path(&path), &ExtractionConfig::default(), ParseMode::Lenient)
                .map_err(|e| load_err(&path, &e))?
                .graph;
            let g = Arc::new(g);
            graphs.insert(path, g.clone());
            Ok(Some(g))
        };
        let source = graph(&config.source_graph)?;
        let target = graph(&config.target_graph)?;

        let (log, records) = JudgmentLog::open(&dir.join(JUDGMENT_LOG))?;
        let state = SessionState::replay(&records, &index)?;
        Ok(Session {
            id,
            sample,
            index,
            source,
            target,
            report: config.report.map(|r| dir.join(r)),
            inner: RwLock::new(Inner { log, state }),
        })
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, Inner> {
        self.inner.read().unwrap_or_else(|p| p.into_inner())
    }

    pub fn next_task(&self, annotator: &str) -> NextTask {
        let inner = self.read();
        let progress = Progress { judged: inner.state.judged_by(annotator), total: self.sample.len() };
        match inner.state.next_for(annotator, self.sample.len()) {
            Some(i) => {
                let item = &self.sample[i];
                NextTask {
                    done: false,
                    index: Some(i),
                    source: Some(entity_card(self.source.as_deref(), item.correspondence.source.as_str())),
                    target: Some(entity_card(self.target.as_deref(), item.correspondence.target.as_str())),
                    item: Some(item.clone()),
                    progress,
                }
            }
            None => NextTask { done: true, index: None, item: None, source: None, target: None, progress },
        }
    }

    pub fn submit(&self, judgment: Judgment) -> Result<Acknowledgment, ServiceError> {
        if judgment.annotator.trim().is_empty() {
            return Err(ServiceError::BadRequest("annotator must not be empty".into()));
        }
        let item = *self
            .index
            .get(&judgment.item_id)
            .ok_or_else(|| ServiceError::ForeignItem { item_id: judgment.item_id.clone(), session: self.id.clone() })?;
        let mut inner = self.inner.write().unwrap_or_else(|p| p.into_inner());
        inner.log.append(&judgment)?;
        let (item_id, annotator) = (judgment.item_id.clone(), judgment.annotator.clone());
        let revision = inner.state.apply(item, judgment);
        let tally = inner.state.tally();
        Ok(Acknowledgment {
            item_id,
            annotator,
            revision,
            revisions: inner.state.revisions,
            tally,
            interval: wilson_interval(tally.same, tally.decisive(), DEFAULT_CONFIDENCE).ok(),
        })
    }

    pub fn summary(&self) -> Summary {
        let inner = self.read();
        let effective: Vec<(usize, &Judgment)> = inner.state.effective().collect();
        let all: Vec<Judgment> = effective.iter().map(|(_, j)| (*j).clone()).collect();
        let estimate = estimate_precision::<f64>(&all).ok();
        let per_annotator = inner
            .state
            .annotators()
            .into_iter()
            .map(|a| {
                let mine: Vec<Judgment> = all.iter().filter(|j| j.annotator == a).cloned().collect();
                (a.to_owned(), AnnotatorSummary { tally: inner.state.tally_for(a), estimate: estimate_precision::<f64>(&mine).ok() })
            })
            .collect();
        let mut items: Vec<ItemRow> = self
            .sample
            .iter()
            .enumerate()
            .map(|(i, s)| ItemRow {
                index: i,
                item_id: s.id.clone(),
                source: s.correspondence.source.as_str().to_owned(),
                target: s.correspondence.target.as_str().to_owned(),
                verdicts: BTreeMap::new(),
            })
            .collect();
        for (i, j) in &effective {
            items[*i].verdicts.insert(j.annotator.clone(), j.verdict);
        }
        Summary {
            session: self.id.clone(),
            matcher: self.sample.first().map(|s| s.matcher.clone()),
            task: self.sample.first().map(|s| s.task.to_string()),
            message: estimate.is_none().then(|| "no decisive judgments".to_owned()),
            estimate,
            tally: inner.state.tally(),
            revisions: inner.state.revisions,
            per_annotator,
            items,
        }
    }

    pub fn dashboard(&self) -> Result<Dashboard, ServiceError> {
        let dir = self.report.as_ref().ok_or_else(|| ServiceError::NotFound(format!("{}/dashboard", self.id)))?;
        let json = |name: &str| -> Result<String, ServiceError> {
            std::fs::read_to_string(dir.join(name)).map_err(|e| ServiceError::Load(format!("{}: {e}", dir.join(name).display())))
        };
        let aggregates = serde_json::from_str(&json(AGGREGATES_FILE)?).map_err(|e| ServiceError::Load(e.to_string()))?;
        let cells = read_cells(&dir.join(CELLS_FILE)).map_err(|e| ServiceError::Load(e.to_string()))?;
        let manifest = json(MANIFEST_FILE).ok().and_then(|t| serde_json::from_str(&t).ok());
        Ok(Dashboard { aggregates, cells, manifest })
    }
}

/// All sessions found under one root directory.
pub struct Service {
    sessions: BTreeMap<String, Session>,
}

impl Service {
    /// Loads every subdirectory of `root` that holds a `sample.jsonl`.
    pub fn open(root: &Path) -> Result<Self, ServiceError> {
        let entries = std::fs::read_dir(root).map_err(|e| ServiceError::Load(format!("{}: {e}", root.display())))?;
        let mut dirs: Vec<PathBuf> = entries.filter_map(Result::ok).map(|e| e.path()).filter(|p| p.join(SAMPLE_FILE).is_file()).collect();
        dirs.sort();
        let mut graphs = HashMap::new();
        let mut sessions = BTreeMap::new();
        for dir in dirs {
            let s = Session::load(&dir, &mut graphs)?;
            log::info!("session {}: {} item(s), {} record(s)", s.id, s.sample.len(), s.read().state.records);
            sessions.insert(s.id.clone(), s);
        }
        Ok(Service { sessions })
    }

    /// Writes a new session directory under `root`.
    pub fn create_session(root: &Path, id: &str, sample: &[SampleItem], config: &SessionConfig) -> Result<PathBuf, ServiceError> {
        if !valid_session_id(id) {
            return Err(ServiceError::BadRequest(format!("invalid session id '{id}'")));
        }
        let dir = root.join(id);
        let io = |e: std::io::Error| ServiceError::Storage(format!("{}: {e}", dir.display()));
        if dir.join(SAMPLE_FILE).exists() {
            return Err(ServiceError::BadRequest(format!("session '{id}' already exists")));
        }
        std::fs::create_dir_all(&dir).map_err(io)?;
        let mut out = Vec::new();
        kgbench_core::sampling::write_jsonl(&mut out, sample).map_err(|e| ServiceError::Storage(e.to_string()))?;
        std::fs::write(dir.join(SAMPLE_FILE), out).map_err(io)?;
        let text = serde_json::to_string_pretty(config).map_err(|e| ServiceError::Storage(e.to_string()))? + "\n";
        std::fs::write(dir.join(SESSION_FILE), text).map_err(io)?;
        Ok(dir)
    }

    pub fn session(&self, id: &str) -> Result<&Session, ServiceError> {
        self.sessions.get(id).ok_or_else(|| ServiceError::NotFound(id.to_owned()))
    }

    pub fn session_ids(&self) -> impl Iterator<Item = &str> {
        self.sessions.keys().map(String::as_str)
    }

    pub fn next_task(&self, id: &str, annotator: &str) -> Result<NextTask, ServiceError> {
        Ok(self.session(id)?.next_task(annotator))
    }

    pub fn submit_judgment(&self, id: &str, judgment: Judgment) -> Result<Acknowledgment, ServiceError> {
        self.session(id)?.submit(judgment)
    }

    pub fn results_summary(&self, id: &str) -> Result<Summary, ServiceError> {
        Ok(self.session(id)?.summary())
    }

    pub fn dashboard(&self, id: &str) -> Result<Dashboard, ServiceError> {
        self.session(id)?.dashboard()
    }
}
