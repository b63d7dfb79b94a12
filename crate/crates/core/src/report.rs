//! Dashboard bundle: `cells.csv`, `aggregates.json` and `manifest.json`.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::eval::{
    aggregate_tasks, classify_arity, metrics_from_counts, ArityClass, ArityCounts, ConfusionCounts, Counts, EvalError, Evaluation, Metrics, Outcome,
    TaskKinds, TaskResult,
};
use crate::graph::{Alignment, EntityKind, Iri, Task};

pub const CELLS_FILE: &str = "cells.csv";
pub const AGGREGATES_FILE: &str = "aggregates.json";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("bundle inconsistency: {0}")]
    Consistency(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ReportError + '_ {
    move |source| ReportError::Io { path: path.display().to_string(), source }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedCell {
    pub matcher: String,
    pub task: String,
    pub source: String,
    pub target: String,
    /// `class`, `property`, `instance` or `mixed`.
    pub kind: String,
    pub outcome: Outcome,
    pub trivial: bool,
    /// Empty for false negatives, which are not part of the alignment.
    pub arity: Option<ArityClass>,
    pub confidence: Option<f64>,
}

fn kind_label(kind: Option<EntityKind>) -> String {
    kind.map_or("mixed", EntityKind::as_str).to_owned()
}

/// One row per produced cell plus one row per missed gold positive.
pub fn evaluated_cells(
    matcher: &str,
    alignment: &Alignment,
    evaluation: &Evaluation,
    kinds: TaskKinds<'_>,
    trivial: &dyn Fn(&Iri, &Iri) -> bool,
) -> Vec<EvaluatedCell> {
    let task = alignment.task.to_string();
    let (arity, _) = classify_arity(alignment);
    let produced = alignment.cells().iter().zip(&evaluation.outcomes).zip(arity).map(|((c, outcome), arity)| EvaluatedCell {
        matcher: matcher.to_owned(),
        task: task.clone(),
        source: c.source.as_str().to_owned(),
        target: c.target.as_str().to_owned(),
        kind: kind_label(kinds.cell_kind(c.source.as_str(), c.target.as_str())),
        outcome: *outcome,
        trivial: trivial(&c.source, &c.target),
        arity: Some(arity),
        confidence: Some(c.confidence),
    });
    let missed = evaluation.false_negatives.iter().map(|p| EvaluatedCell {
        matcher: matcher.to_owned(),
        task: task.clone(),
        source: p.source.as_str().to_owned(),
        target: p.target.as_str().to_owned(),
        kind: kind_label(kinds.cell_kind(p.source.as_str(), p.target.as_str())),
        outcome: Outcome::Fn,
        trivial: trivial(&p.source, &p.target),
        arity: None,
        confidence: None,
    });
    produced.chain(missed).collect()
}

/// Result of one matcher on one task, the unit aggregates are built from.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskEvaluation {
    pub matcher: String,
    pub task: Task,
    pub alignment_size: usize,
    pub counts: ConfusionCounts,
    pub arity: ArityCounts,
}

impl TaskEvaluation {
    pub fn new(matcher: &str, alignment: &Alignment, evaluation: &Evaluation) -> Self {
        TaskEvaluation {
            matcher: matcher.to_owned(),
            task: alignment.task.clone(),
            alignment_size: alignment.len(),
            counts: evaluation.counts,
            arity: classify_arity(alignment).1,
        }
    }
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table4Row {
    #[serde(rename = "System")]
    pub system: String,
    #[serde(rename = "Kind")]
    pub kind: String,
    #[serde(rename = "# tasks")]
    pub tasks: usize,
    #[serde(rename = "Size")]
    pub size: f64,
    #[serde(rename = "Prec.")]
    pub precision: f64,
    #[serde(rename = "F-m.")]
    pub f_measure: f64,
    #[serde(rename = "Rec.")]
    pub recall: f64,
    #[serde(rename = "Prec. (non-empty)")]
    pub precision_non_empty: f64,
    #[serde(rename = "F-m. (non-empty)")]
    pub f_measure_non_empty: f64,
    #[serde(rename = "Rec. (non-empty)")]
    pub recall_non_empty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerTaskRow {
    #[serde(rename = "System")]
    pub system: String,
    #[serde(rename = "Task")]
    pub task: String,
    #[serde(rename = "Kind")]
    pub kind: String,
    #[serde(rename = "Size")]
    pub size: usize,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub ignored: usize,
    #[serde(rename = "Prec.")]
    pub precision: f64,
    #[serde(rename = "F-m.")]
    pub f_measure: f64,
    #[serde(rename = "Rec.")]
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table5Row {
    #[serde(rename = "System")]
    pub system: String,
    #[serde(rename = "Task")]
    pub task: String,
    #[serde(rename = "1:1")]
    pub one_one: usize,
    #[serde(rename = "1:n")]
    pub one_n: usize,
    #[serde(rename = "n:1")]
    pub n_one: usize,
    #[serde(rename = "n:m")]
    pub n_m: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregationNotes {
    pub within_task: String,
    pub across_tasks: String,
    pub f_measure: String,
    pub empty_tasks: String,
}

impl Default for AggregationNotes {
    fn default() -> Self {
        AggregationNotes {
            within_task: "micro: tp/fp/fn pooled over kinds, mixed-kind cells in overall only".into(),
            across_tasks: "macro: mean of per-task precision and recall".into(),
            f_measure: "harmonic mean of macro precision and macro recall".into(),
            empty_tasks: "Prec./Rec. count empty alignments as 0; the (non-empty) columns leave them out".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub semantics: String,
    pub fp_side: String,
    pub aggregation: AggregationNotes,
    pub table4: Vec<Table4Row>,
    pub per_task: Vec<PerTaskRow>,
    pub table5: Vec<Table5Row>,
}

const TABLE_KINDS: [Option<EntityKind>; 4] = [Some(EntityKind::Class), Some(EntityKind::Property), Some(EntityKind::Instance), None];

fn table_kind_label(kind: Option<EntityKind>) -> &'static str {
    kind.map_or("overall", EntityKind::as_str)
}

fn per_task_row(system: &str, task: &str, kind: &str, size: usize, c: &Counts) -> PerTaskRow {
    let m: Metrics<f64> = metrics_from_counts(c);
    PerTaskRow {
        system: system.to_owned(),
        task: task.to_owned(),
        kind: kind.to_owned(),
        size,
        tp: c.tp,
        fp: c.fp,
        fn_: c.fn_,
        ignored: c.ignored,
        precision: round6(m.precision),
        f_measure: round6(m.f_measure),
        recall: round6(m.recall),
    }
}

/// Table 4 and 5 shaped aggregates from per-task results.
pub fn build_aggregates(runs: &[TaskEvaluation], semantics: &str, fp_side: &str) -> Result<Aggregates, ReportError> {
    let mut by_matcher: BTreeMap<&str, Vec<&TaskEvaluation>> = BTreeMap::new();
    for r in runs {
        by_matcher.entry(r.matcher.as_str()).or_default().push(r);
    }
    let mut table4 = Vec::new();
    let mut per_task = Vec::new();
    let mut table5 = Vec::new();
    for (matcher, mut tasks) in by_matcher {
        tasks.sort_by_cached_key(|t| t.task.to_string());
        for w in tasks.windows(2) {
            if w[0].task == w[1].task {
                return Err(ReportError::Consistency(format!("task {} evaluated twice for {matcher}", w[0].task)));
            }
        }
        for kind in TABLE_KINDS {
            let results: Vec<TaskResult> =
                tasks.iter().map(|t| TaskResult { counts: t.counts.select(kind), alignment_size: t.alignment_size }).collect();
            let all: Metrics<f64> = aggregate_tasks(&results, true)?;
            let done: Metrics<f64> = aggregate_tasks(&results, false)?;
            table4.push(Table4Row {
                system: matcher.to_owned(),
                kind: table_kind_label(kind).to_owned(),
                tasks: all.tasks_completed,
                size: round6(all.size),
                precision: round6(all.precision),
                f_measure: round6(all.f_measure),
                recall: round6(all.recall),
                precision_non_empty: round6(done.precision),
                f_measure_non_empty: round6(done.f_measure),
                recall_non_empty: round6(done.recall),
            });
        }
        for t in &tasks {
            let task = t.task.to_string();
            for kind in TABLE_KINDS {
                per_task.push(per_task_row(matcher, &task, table_kind_label(kind), t.alignment_size, &t.counts.select(kind)));
            }
            per_task.push(per_task_row(matcher, &task, "mixed", t.alignment_size, &t.counts.mixed));
            table5.push(Table5Row {
                system: matcher.to_owned(),
                task,
                one_one: t.arity.one_one,
                one_n: t.arity.one_n,
                n_one: t.arity.n_one,
                n_m: t.arity.n_m,
            });
        }
    }
    Ok(Aggregates { semantics: semantics.to_owned(), fp_side: fp_side.to_owned(), aggregation: AggregationNotes::default(), table4, per_task, table5 })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    /// Seconds since the Unix epoch.
    pub created: u64,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub inputs: Vec<InputDigest>,
    #[serde(default)]
    pub outputs: Vec<InputDigest>,
}

impl Manifest {
    pub fn new(config: serde_json::Value, seeds: Vec<u64>, inputs: Vec<InputDigest>) -> Self {
        let created = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs());
        Manifest { tool: "kgbench".into(), version: env!("CARGO_PKG_VERSION").into(), created, config, seeds, inputs, outputs: Vec::new() }
    }
}

pub fn digest_file(path: &Path) -> Result<InputDigest, ReportError> {
    let mut file = fs::File::open(path).map_err(io_err(path))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf).map_err(io_err(path))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(InputDigest { path: path.display().to_string(), sha256: hex::encode(hasher.finalize()) })
}

fn sort_cells(cells: &mut [EvaluatedCell]) {
    cells.sort_by(|a, b| (&a.matcher, &a.task, &a.source, &a.target).cmp(&(&b.matcher, &b.task, &b.source, &b.target)));
}

pub fn write_cells(path: &Path, cells: &[EvaluatedCell]) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| ReportError::Format { path: path.display().to_string(), message: e.to_string() })?;
    for c in cells {
        w.serialize(c).map_err(|e| ReportError::Format { path: path.display().to_string(), message: e.to_string() })?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_cells(path: &Path) -> Result<Vec<EvaluatedCell>, ReportError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| ReportError::Format { path: path.display().to_string(), message: e.to_string() })?;
    r.deserialize()
        .collect::<Result<Vec<EvaluatedCell>, _>>()
        .map_err(|e| ReportError::Format { path: path.display().to_string(), message: e.to_string() })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ReportError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| ReportError::Format { path: path.display().to_string(), message: e.to_string() })?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, ReportError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| ReportError::Format { path: path.display().to_string(), message: e.to_string() })
}

/// Writes the bundle into `dir`. Every (matcher, task) that has cells must
/// have a run. Data files are sorted and carry no timestamps, so identical
/// inputs give identical `cells.csv` and `aggregates.json`.
pub fn emit_dashboard(
    dir: &Path,
    cells: &[EvaluatedCell],
    aggregates: &Aggregates,
    mut manifest: Manifest,
) -> Result<PathBuf, ReportError> {
    let known: std::collections::BTreeSet<(&str, &str)> = aggregates.table5.iter().map(|r| (r.system.as_str(), r.task.as_str())).collect();
    if let Some(c) = cells.iter().find(|c| !known.contains(&(c.matcher.as_str(), c.task.as_str()))) {
        return Err(ReportError::Consistency(format!("no aggregate for matcher {} on task {}", c.matcher, c.task)));
    }
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut sorted = cells.to_vec();
    sort_cells(&mut sorted);
    let cells_path = dir.join(CELLS_FILE);
    write_cells(&cells_path, &sorted)?;
    let aggregates_path = dir.join(AGGREGATES_FILE);
    write_json(&aggregates_path, aggregates)?;
    manifest.outputs = vec![digest_file(&cells_path)?, digest_file(&aggregates_path)?];
    for d in &mut manifest.outputs {
        d.path = Path::new(&d.path).file_name().map_or_else(|| d.path.clone(), |n| n.to_string_lossy().into_owned());
    }
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(dir.to_path_buf())
}

fn add_cell(c: &mut ConfusionCounts, kind: &str, outcome: Outcome) -> Result<(), String> {
    let bucket = match kind {
        "class" => &mut c.class,
        "property" => &mut c.property,
        "instance" => &mut c.instance,
        "mixed" => &mut c.mixed,
        other => return Err(format!("unknown kind '{other}'")),
    };
    bucket.record(outcome);
    Ok(())
}

/// Recomputes every aggregate number from `cells.csv` and compares it with
/// `aggregates.json`.
pub fn verify_bundle(dir: &Path) -> Result<(), ReportError> {
    let cells = read_cells(&dir.join(CELLS_FILE))?;
    let stored: Aggregates = read_json(&dir.join(AGGREGATES_FILE))?;

    let mut runs: BTreeMap<(String, String), TaskEvaluation> = BTreeMap::new();
    for row in stored.table5.iter() {
        let task = parse_task(&row.task)?;
        let size = stored
            .per_task
            .iter()
            .find(|p| p.system == row.system && p.task == row.task && p.kind == "overall")
            .map(|p| p.size)
            .ok_or_else(|| ReportError::Consistency(format!("no overall row for {} / {}", row.system, row.task)))?;
        runs.insert(
            (row.system.clone(), row.task.clone()),
            TaskEvaluation {
                matcher: row.system.clone(),
                task,
                alignment_size: size,
                counts: ConfusionCounts::default(),
                arity: ArityCounts::default(),
            },
        );
    }
    for c in &cells {
        let run = runs
            .get_mut(&(c.matcher.clone(), c.task.clone()))
            .ok_or_else(|| ReportError::Consistency(format!("cells for unknown run {} / {}", c.matcher, c.task)))?;
        add_cell(&mut run.counts, &c.kind, c.outcome).map_err(ReportError::Consistency)?;
        match (c.outcome, c.arity) {
            (Outcome::Fn, None) => {}
            (Outcome::Fn, Some(_)) | (_, None) => {
                return Err(ReportError::Consistency(format!("arity column inconsistent with outcome for {} -> {}", c.source, c.target)))
            }
            (_, Some(a)) => run.arity.add(a),
        }
    }
    let runs: Vec<TaskEvaluation> = runs.into_values().collect();
    let recomputed = build_aggregates(&runs, &stored.semantics, &stored.fp_side)?;
    for (name, ok) in [
        ("table4", recomputed.table4 == stored.table4),
        ("per_task", recomputed.per_task == stored.per_task),
        ("table5", recomputed.table5 == stored.table5),
    ] {
        if !ok {
            return Err(ReportError::Consistency(format!("{name} does not match the cell table")));
        }
    }
    Ok(())
}

fn parse_task(s: &str) -> Result<Task, ReportError> {
    // Rows are keyed by the task string only, so any valid split will do.
    let bad = || ReportError::Consistency(format!("cannot split task id '{s}'"));
    let (a, b) = s.split_once('-').ok_or_else(bad)?;
    Task::new(a, b).map_err(|_| bad())
}
