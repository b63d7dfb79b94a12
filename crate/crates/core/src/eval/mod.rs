//! Scoring alignments against partial gold standards.

mod arity;
mod metrics;
mod scoring;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gold::GoldError;
use crate::graph::{EntityKind, KnowledgeGraph};

pub use arity::{classify_arity, ArityClass, ArityCounts};
pub use metrics::{aggregate_tasks, metrics_from_counts, Metrics, TaskResult};
pub use scoring::{evaluate_partial_1to1, evaluate_with_negatives, Counts, ConfusionCounts, Evaluation, FpSide, Outcome};

/// Gold-standard semantics: partial 1:1 gold, or gold with explicit negatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Semantics {
    #[serde(rename = "2018")]
    WithNegatives,
    #[default]
    #[serde(rename = "2019")]
    PartialOneToOne,
}

impl Semantics {
    pub fn as_str(self) -> &'static str {
        match self {
            Semantics::WithNegatives => "2018",
            Semantics::PartialOneToOne => "2019",
        }
    }
}

impl std::str::FromStr for Semantics {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "2018" => Ok(Semantics::WithNegatives),
            "2019" => Ok(Semantics::PartialOneToOne),
            other => Err(format!("unknown semantics '{other}', expected 2018 or 2019")),
        }
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("gold standard: {0}")]
    Gold(#[from] GoldError),
    #[error("no tasks to aggregate")]
    NoTasks,
}

/// Kind of an entity by IRI, if known.
pub trait KindLookup: Sync {
    fn kind_of(&self, iri: &str) -> Option<EntityKind>;
}

impl KindLookup for KnowledgeGraph {
    fn kind_of(&self, iri: &str) -> Option<EntityKind> {
        KnowledgeGraph::kind_of(self, iri)
    }
}

impl KindLookup for HashMap<String, EntityKind> {
    fn kind_of(&self, iri: &str) -> Option<EntityKind> {
        self.get(iri).copied()
    }
}

/// No kind information: every cell counts in the overall figures only.
pub struct NoKinds;

impl KindLookup for NoKinds {
    fn kind_of(&self, _: &str) -> Option<EntityKind> {
        None
    }
}

/// Kind lookups for the source and target side of a task.
#[derive(Clone, Copy)]
pub struct TaskKinds<'a> {
    pub source: &'a dyn KindLookup,
    pub target: &'a dyn KindLookup,
}

impl<'a> TaskKinds<'a> {
    pub fn new(source: &'a dyn KindLookup, target: &'a dyn KindLookup) -> Self {
        TaskKinds { source, target }
    }

    pub fn none() -> TaskKinds<'static> {
        TaskKinds { source: &NoKinds, target: &NoKinds }
    }

    /// The shared kind of both endpoints, or `None` for mixed or unknown kinds.
    pub fn cell_kind(&self, source: &str, target: &str) -> Option<EntityKind> {
        match (self.source.kind_of(source), self.target.kind_of(target)) {
            (Some(a), Some(b)) if a == b => Some(a),
            _ => None,
        }
    }
}
