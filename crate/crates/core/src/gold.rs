//! Partial gold standards: positive pairs, explicit negatives and the 1:1 flag.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{parse_alignment, write_alignment, Alignment, Correspondence, GraphError, Iri, Task};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntityPair {
    pub source: Iri,
    pub target: Iri,
}

impl EntityPair {
    pub fn new(source: Iri, target: Iri) -> Self {
        EntityPair { source, target }
    }
}

/// Declaration that `entity` has no counterpart in graph `counterpart_graph`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Negative {
    pub entity: Iri,
    pub counterpart_graph: String,
}

#[derive(Debug, Error)]
pub enum GoldError {
    #[error("gold standard is not 1:1: {side} entity {iri} occurs in {count} positives")]
    NotOneToOne { side: &'static str, iri: Iri, count: usize },
    #[error("entity {0} is listed both as positive and as negative")]
    Inconsistent(Iri),
    #[error("negatives line {line}: {message}")]
    Negatives { line: usize, message: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GoldStandard {
    pub positives: BTreeSet<EntityPair>,
    /// Positives inferred rather than observed (triangle closure).
    pub derived: BTreeSet<EntityPair>,
    pub negatives: BTreeSet<Negative>,
    pub one_to_one: bool,
}

impl GoldStandard {
    /// A 1:1 gold standard; fails if any entity occurs twice on one side.
    pub fn one_to_one(positives: impl IntoIterator<Item = EntityPair>) -> Result<Self, GoldError> {
        let gold = GoldStandard { positives: positives.into_iter().collect(), one_to_one: true, ..Default::default() };
        gold.check_one_to_one()?;
        Ok(gold)
    }

    pub fn check_one_to_one(&self) -> Result<(), GoldError> {
        let mut sources: BTreeMap<&Iri, usize> = BTreeMap::new();
        let mut targets: BTreeMap<&Iri, usize> = BTreeMap::new();
        for p in &self.positives {
            *sources.entry(&p.source).or_default() += 1;
            *targets.entry(&p.target).or_default() += 1;
        }
        for (side, counts) in [("source", sources), ("target", targets)] {
            if let Some((iri, count)) = counts.into_iter().find(|(_, c)| *c > 1) {
                return Err(GoldError::NotOneToOne { side, iri: iri.clone(), count });
            }
        }
        Ok(())
    }

    /// No entity may be both matched and declared unmatched towards the same graph.
    pub fn check_consistency(&self, task: &Task) -> Result<(), GoldError> {
        for p in &self.positives {
            let src_neg = Negative { entity: p.source.clone(), counterpart_graph: task.target.clone() };
            if self.negatives.contains(&src_neg) {
                return Err(GoldError::Inconsistent(p.source.clone()));
            }
            let tgt_neg = Negative { entity: p.target.clone(), counterpart_graph: task.source.clone() };
            if self.negatives.contains(&tgt_neg) {
                return Err(GoldError::Inconsistent(p.target.clone()));
            }
        }
        Ok(())
    }

    pub fn contains(&self, source: &Iri, target: &Iri) -> bool {
        self.positives.contains(&EntityPair::new(source.clone(), target.clone()))
    }

    pub fn len(&self) -> usize {
        self.positives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positives.is_empty()
    }

    pub fn as_alignment(&self, task: Task) -> Alignment {
        let cells = self.positives.iter().map(|p| Correspondence::exact(p.source.clone(), p.target.clone()));
        Alignment::from_cells(task, cells).0
    }

    /// Writes positives in alignment format (by extension), plus a negatives
    /// sidecar `<stem>.negatives.tsv` and a `<stem>.meta.json` when needed.
    pub fn write(&self, path: &Path, task: &Task) -> Result<(), GoldError> {
        write_alignment(path, &self.as_alignment(task.clone()))?;
        if !self.negatives.is_empty() {
            let neg_path = sidecar(path, "negatives.tsv");
            let mut out = io::BufWriter::new(create(&neg_path)?);
            write_negatives(&mut out, &self.negatives)
                .and_then(|_| out.flush())
                .map_err(|e| io_err(&neg_path, e))?;
        }
        let meta = GoldMeta {
            task: task.clone(),
            one_to_one: self.one_to_one,
            positives: self.positives.len(),
            negatives: self.negatives.len(),
            derived: self.derived.iter().cloned().collect(),
        };
        let meta_path = sidecar(path, "meta.json");
        let text = serde_json::to_string_pretty(&meta).expect("gold metadata serializes");
        std::fs::write(&meta_path, text + "\n").map_err(|e| io_err(&meta_path, e))?;
        Ok(())
    }

    /// Reads positives from an alignment file and negatives from an optional TSV.
    pub fn read(path: &Path, task: &Task, negatives: Option<&Path>, one_to_one: bool) -> Result<Self, GoldError> {
        let parsed = parse_alignment(path, task)?;
        let positives = parsed.alignment.cells().iter().map(|c| EntityPair::new(c.source.clone(), c.target.clone())).collect();
        let negatives = match negatives {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| io_err(p, e))?;
                parse_negatives(&text)?
            }
            None => BTreeSet::new(),
        };
        let gold = GoldStandard { positives, derived: BTreeSet::new(), negatives, one_to_one };
        if one_to_one {
            gold.check_one_to_one()?;
        }
        Ok(gold)
    }
}

#[derive(Serialize)]
struct GoldMeta {
    task: Task,
    one_to_one: bool,
    positives: usize,
    negatives: usize,
    derived: Vec<EntityPair>,
}

fn sidecar(path: &Path, suffix: &str) -> std::path::PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("gold");
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn create(path: &Path) -> Result<std::fs::File, GoldError> {
    std::fs::File::create(path).map_err(|e| io_err(path, e))
}

fn io_err(path: &Path, source: io::Error) -> GoldError {
    GoldError::Io { path: path.display().to_string(), source }
}

pub fn write_negatives<W: Write>(out: &mut W, negatives: &BTreeSet<Negative>) -> io::Result<()> {
    for n in negatives {
        writeln!(out, "{}\t{}\tnegative", n.entity.as_str(), n.counterpart_graph)?;
    }
    Ok(())
}

/// Parses `entity<TAB>counterpart-graph<TAB>negative` rows.
pub fn parse_negatives(text: &str) -> Result<BTreeSet<Negative>, GoldError> {
    let mut out = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| GoldError::Negatives { line: i + 1, message };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(err(format!("expected 3 fields, found {}", fields.len())));
        }
        if fields[2].trim() != "negative" {
            return Err(err(format!("third field must be 'negative', found '{}'", fields[2])));
        }
        let entity = Iri::new(fields[0].trim()).map_err(|e| err(e.to_string()))?;
        out.insert(Negative { entity, counterpart_graph: fields[1].trim().to_owned() });
    }
    Ok(out)
}
