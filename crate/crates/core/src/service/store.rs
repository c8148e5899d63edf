//! Single-file JSON document store.
//!
//! The whole state lives in one JSON file that is rewritten atomically
//! (temporary file + rename) after every mutation. Pilot deployments hold
//! tens of scenarios, so whole-file rewrites are cheap.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tokio::sync::RwLock;

use crate::frontier::{EvaluatedStrategy, FrontierResult};
use crate::model::Scenario;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredScenario {
    pub scenario_id: String,
    pub scenario: Scenario,
    pub created_at: DateTime<Utc>,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedSolution {
    pub saved_id: u64,
    pub scenario_id: String,
    pub solution: EvaluatedStrategy,
    pub note: String,
    pub saved_at: DateTime<Utc>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct Document {
    scenarios: BTreeMap<String, StoredScenario>,
    #[serde(default)]
    latest_frontier: BTreeMap<String, FrontierResult>,
    #[serde(default)]
    solutions: BTreeMap<String, Vec<SavedSolution>>,
    #[serde(default)]
    next_saved_id: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("store {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("store {path} is corrupt: {source}")]
    Corrupt { path: PathBuf, source: serde_json::Error },
    #[error("unknown scenario {0}")]
    UnknownScenario(String),
    #[error("no frontier has been computed for scenario {0}")]
    NoFrontier(String),
    #[error("solution {solution_id} is not in the latest frontier of scenario {scenario_id}")]
    DanglingSolution { scenario_id: String, solution_id: u64 },
    #[error("saved solution {0} not found")]
    UnknownSaved(u64),
}

/// Content-derived scenario id formatted like a UUID.
pub fn scenario_id(scenario: &Scenario) -> String {
    let digest = Sha256::digest(serde_json::to_vec(scenario).expect("serializable"));
    let h: String = digest[..16].iter().map(|b| format!("{b:02x}")).collect();
    format!("{}-{}-{}-{}-{}", &h[0..8], &h[8..12], &h[12..16], &h[16..20], &h[20..32])
}

#[derive(Debug)]
pub struct Store {
    path: Option<PathBuf>,
    doc: RwLock<Document>,
}

impl Store {
    /// Opens (or creates) the store file. Fails when the file cannot be
    /// read, parsed or written.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref().to_path_buf();
        let io = |source| StoreError::Io { path: path.clone(), source };
        let doc = if path.exists() {
            let text = fs::read_to_string(&path).map_err(io)?;
            serde_json::from_str(&text).map_err(|source| StoreError::Corrupt { path: path.clone(), source })?
        } else {
            let doc = Document::default();
            write_atomic(&path, &doc).map_err(io)?;
            doc
        };
        Ok(Self { path: Some(path), doc: RwLock::new(doc) })
    }

    /// A store that never touches the filesystem.
    pub fn in_memory() -> Self {
        Self { path: None, doc: RwLock::new(Document::default()) }
    }

    fn persist(&self, doc: &Document) -> Result<(), StoreError> {
        match &self.path {
            Some(p) => write_atomic(p, doc).map_err(|source| StoreError::Io { path: p.clone(), source }),
            None => Ok(()),
        }
    }

    /// Inserts the scenario unless an identical one exists; returns the
    /// stored record and whether it was new.
    pub async fn put_scenario(&self, scenario: Scenario, label: String) -> Result<(StoredScenario, bool), StoreError> {
        let id = scenario_id(&scenario);
        let mut doc = self.doc.write().await;
        if let Some(existing) = doc.scenarios.get(&id) {
            return Ok((existing.clone(), false));
        }
        let stored = StoredScenario { scenario_id: id.clone(), scenario, created_at: Utc::now(), label };
        doc.scenarios.insert(id, stored.clone());
        self.persist(&doc)?;
        Ok((stored, true))
    }

    pub async fn scenario(&self, id: &str) -> Option<StoredScenario> {
        self.doc.read().await.scenarios.get(id).cloned()
    }

    pub async fn scenarios(&self) -> Vec<StoredScenario> {
        self.doc.read().await.scenarios.values().cloned().collect()
    }

    pub async fn set_latest_frontier(&self, id: &str, frontier: FrontierResult) -> Result<(), StoreError> {
        let mut doc = self.doc.write().await;
        if !doc.scenarios.contains_key(id) {
            return Err(StoreError::UnknownScenario(id.to_string()));
        }
        if doc.latest_frontier.get(id) == Some(&frontier) {
            return Ok(());
        }
        doc.latest_frontier.insert(id.to_string(), frontier);
        self.persist(&doc)
    }

    pub async fn latest_frontier(&self, id: &str) -> Option<FrontierResult> {
        self.doc.read().await.latest_frontier.get(id).cloned()
    }

    pub async fn save_solution(&self, id: &str, solution_id: u64, note: String) -> Result<SavedSolution, StoreError> {
        let mut doc = self.doc.write().await;
        if !doc.scenarios.contains_key(id) {
            return Err(StoreError::UnknownScenario(id.to_string()));
        }
        let frontier = doc.latest_frontier.get(id).ok_or_else(|| StoreError::NoFrontier(id.to_string()))?;
        let solution = frontier.get(solution_id).cloned().ok_or(StoreError::DanglingSolution {
            scenario_id: id.to_string(),
            solution_id,
        })?;
        doc.next_saved_id += 1;
        let saved = SavedSolution {
            saved_id: doc.next_saved_id,
            scenario_id: id.to_string(),
            solution,
            note,
            saved_at: Utc::now(),
        };
        doc.solutions.entry(id.to_string()).or_default().push(saved.clone());
        self.persist(&doc)?;
        Ok(saved)
    }

    pub async fn solutions(&self, id: &str) -> Vec<SavedSolution> {
        self.doc.read().await.solutions.get(id).cloned().unwrap_or_default()
    }

    pub async fn delete_solution(&self, id: &str, saved_id: u64) -> Result<(), StoreError> {
        let mut doc = self.doc.write().await;
        let list = doc.solutions.get_mut(id).ok_or(StoreError::UnknownSaved(saved_id))?;
        let before = list.len();
        list.retain(|s| s.saved_id != saved_id);
        if list.len() == before {
            return Err(StoreError::UnknownSaved(saved_id));
        }
        self.persist(&doc)
    }
}

fn write_atomic(path: &Path, doc: &Document) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, serde_json::to_vec_pretty(doc).expect("serializable"))?;
    fs::rename(&tmp, path)
}
