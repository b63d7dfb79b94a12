//! Whole-run evaluation: graphs, gold standards and matcher outputs for a
//! list of tasks in, report bundle out.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{evaluate_partial_1to1, evaluate_with_negatives, EvalError, Evaluation, FpSide, Semantics, TaskKinds};
use crate::gold::{GoldError, GoldStandard};
use crate::graph::{graph_id_from_path, ingest_ntriples, parse_alignment, Alignment, ExtractionConfig, GraphError, KnowledgeGraph, ParseMode, Task};
use crate::matchers::{is_trivial, match_by_label, MatchOptions};
use crate::report::{build_aggregates, digest_file, emit_dashboard, evaluated_cells, Aggregates, EvaluatedCell, InputDigest, Manifest, ReportError, TaskEvaluation};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("missing input file {0}")]
    MissingFile(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Gold(#[from] GoldError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Report(#[from] ReportError),
}

/// One matching task: two graph files and the gold standard between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub source: PathBuf,
    pub target: PathBuf,
    pub gold: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub negatives: Option<PathBuf>,
}

/// A precomputed alignment of an external matcher for one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlignmentSpec {
    pub matcher: String,
    /// `source-target` graph ids.
    pub task: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub semantics: Semantics,
    #[serde(default)]
    pub fp_side: FpSide,
    #[serde(default)]
    pub seed: u64,
    /// Skip malformed N-Triples lines instead of failing.
    #[serde(default)]
    pub lenient: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extraction: Option<PathBuf>,
    /// Built-in matchers to run: `baselineLabel`, `baselineAltLabel`.
    #[serde(default)]
    pub matchers: Vec<String>,
    #[serde(default, rename = "task")]
    pub tasks: Vec<TaskSpec>,
    #[serde(default, rename = "alignment")]
    pub alignments: Vec<AlignmentSpec>,
}

fn builtin(name: &str) -> Option<MatchOptions> {
    [MatchOptions::label(), MatchOptions::alt_label()].into_iter().find(|o| o.matcher_name() == name)
}

impl RunConfig {
    /// Parses a TOML run config. Relative paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, PipelineError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for t in &mut cfg.tasks {
            join(&mut t.source);
            join(&mut t.target);
            join(&mut t.gold);
            if let Some(n) = &mut t.negatives {
                join(n);
            }
        }
        for a in &mut cfg.alignments {
            join(&mut a.path);
        }
        if let Some(e) = &mut cfg.extraction {
            join(e);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; its paths are relative to the file's directory.
    pub fn from_file(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new("")))
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.tasks.is_empty() {
            return Err(PipelineError::Config("no [[task]] entries".into()));
        }
        if self.matchers.is_empty() && self.alignments.is_empty() {
            return Err(PipelineError::Config("no matchers and no [[alignment]] entries".into()));
        }
        if let Some(m) = self.matchers.iter().find(|m| builtin(m).is_none()) {
            return Err(PipelineError::Config(format!("unknown built-in matcher '{m}'")));
        }
        if self.semantics == Semantics::PartialOneToOne && self.tasks.iter().any(|t| t.negatives.is_some()) {
            return Err(PipelineError::Config("negatives are only used with semantics 2018".into()));
        }
        Ok(())
    }

    pub fn task_ids(&self) -> Result<Vec<Task>, PipelineError> {
        self.tasks.iter().map(|t| Ok(Task::new(graph_id_from_path(&t.source), graph_id_from_path(&t.target))?)).collect()
    }

    /// Every file the run reads, in config order without repeats.
    pub fn input_files(&self) -> Vec<PathBuf> {
        let mut files: Vec<PathBuf> = Vec::new();
        let candidates = self
            .extraction
            .iter()
            .chain(self.tasks.iter().flat_map(|t| [&t.source, &t.target, &t.gold].into_iter().chain(t.negatives.as_ref())))
            .chain(self.alignments.iter().map(|a| &a.path));
        for p in candidates {
            if !files.contains(p) {
                files.push(p.clone());
            }
        }
        files
    }

    pub fn check_inputs(&self) -> Result<(), PipelineError> {
        match self.input_files().into_iter().find(|p| !p.is_file()) {
            Some(p) => Err(PipelineError::MissingFile(p.display().to_string())),
            None => Ok(()),
        }
    }
}

/// Scores one alignment under the configured semantics.
pub fn evaluate_alignment(
    alignment: &Alignment,
    gold: &GoldStandard,
    semantics: Semantics,
    fp_side: FpSide,
    kinds: TaskKinds<'_>,
) -> Result<Evaluation, EvalError> {
    match semantics {
        Semantics::PartialOneToOne => evaluate_partial_1to1(alignment, gold, fp_side, kinds),
        Semantics::WithNegatives => evaluate_with_negatives(alignment, gold, kinds),
    }
}

pub fn read_gold(spec: &TaskSpec, task: &Task, semantics: Semantics) -> Result<GoldStandard, GoldError> {
    GoldStandard::read(&spec.gold, task, spec.negatives.as_deref(), semantics == Semantics::PartialOneToOne)
}

/// Cell table and run summary of one matcher on one task.
pub fn evaluate_run(
    matcher: &str,
    alignment: &Alignment,
    evaluation: &Evaluation,
    source: &KnowledgeGraph,
    target: &KnowledgeGraph,
) -> (Vec<EvaluatedCell>, TaskEvaluation) {
    let trivial = |s: &crate::graph::Iri, t: &crate::graph::Iri| {
        is_trivial(&crate::graph::Correspondence::exact(s.clone(), t.clone()), source, target).unwrap_or(false)
    };
    let cells = evaluated_cells(matcher, alignment, evaluation, TaskKinds::new(source, target), &trivial);
    (cells, TaskEvaluation::new(matcher, alignment, evaluation))
}

#[derive(Debug)]
pub struct RunOutput {
    pub cells: Vec<EvaluatedCell>,
    pub aggregates: Aggregates,
    pub runs: Vec<TaskEvaluation>,
}

/// Ingests every graph once, runs built-in matchers, loads external
/// alignments and scores all of them. A matcher with alignments for some
/// tasks but not others is scored with an empty alignment on the rest.
pub fn run_evaluation(cfg: &RunConfig) -> Result<RunOutput, PipelineError> {
    cfg.check_inputs()?;
    let extraction = match &cfg.extraction {
        Some(p) => ExtractionConfig::from_file(p)?,
        None => ExtractionConfig::default(),
    };
    let mode = if cfg.lenient { ParseMode::Lenient } else { ParseMode::Strict };
    let tasks = cfg.task_ids()?;

    let mut graph_files: BTreeMap<String, &Path> = BTreeMap::new();
    for t in &cfg.tasks {
        for p in [&t.source, &t.target] {
            let id = graph_id_from_path(p);
            match graph_files.get(&id) {
                Some(existing) if *existing != p.as_path() => {
                    return Err(PipelineError::Config(format!("graph id '{id}' refers to both {} and {}", existing.display(), p.display())))
                }
                _ => {
                    graph_files.insert(id, p);
                }
            }
        }
    }
    let graphs: BTreeMap<String, KnowledgeGraph> = graph_files
        .par_iter()
        .map(|(id, path)| Ok((id.clone(), ingest_ntriples(path, id, &extraction, mode)?.graph)))
        .collect::<Result<_, GraphError>>()?;

    let mut external: BTreeMap<&str, BTreeMap<&str, &Path>> = BTreeMap::new();
    for a in &cfg.alignments {
        if builtin(&a.matcher).is_some() {
            return Err(PipelineError::Config(format!("'{}' is a built-in matcher name", a.matcher)));
        }
        if !tasks.iter().any(|t| t.to_string() == a.task) {
            return Err(PipelineError::Config(format!("alignment for unknown task '{}'", a.task)));
        }
        if external.entry(&a.matcher).or_default().insert(&a.task, &a.path).is_some() {
            return Err(PipelineError::Config(format!("two alignments for {} on {}", a.matcher, a.task)));
        }
    }

    let mut jobs: Vec<(usize, String)> = Vec::new();
    for (i, _) in cfg.tasks.iter().enumerate() {
        jobs.extend(cfg.matchers.iter().map(|m| (i, m.clone())));
        jobs.extend(external.keys().map(|m| (i, (*m).to_owned())));
    }

    let results: Vec<(Vec<EvaluatedCell>, TaskEvaluation)> = jobs
        .par_iter()
        .map(|(i, matcher)| {
            let (spec, task) = (&cfg.tasks[*i], &tasks[*i]);
            let source = &graphs[&task.source];
            let target = &graphs[&task.target];
            let gold = read_gold(spec, task, cfg.semantics)?;
            let alignment = match builtin(matcher) {
                Some(options) => match_by_label(source, target, options)?,
                None => match external.get(matcher.as_str()).and_then(|m| m.get(task.to_string().as_str())) {
                    Some(path) => {
                        let parsed = parse_alignment(path, task)?;
                        if parsed.alignment.task != *task {
                            return Err(PipelineError::Config(format!(
                                "{} declares task {} but is listed for {task}",
                                path.display(),
                                parsed.alignment.task
                            )));
                        }
                        parsed.alignment
                    }
                    None => Alignment::empty(task.clone()),
                },
            };
            let evaluation = evaluate_alignment(&alignment, &gold, cfg.semantics, cfg.fp_side, TaskKinds::new(source, target))?;
            Ok(evaluate_run(matcher, &alignment, &evaluation, source, target))
        })
        .collect::<Result<_, PipelineError>>()?;

    let mut cells = Vec::new();
    let mut runs = Vec::new();
    for (c, r) in results {
        cells.extend(c);
        runs.push(r);
    }
    let aggregates = build_aggregates(&runs, cfg.semantics.as_str(), cfg.fp_side.as_str())?;
    Ok(RunOutput { cells, aggregates, runs })
}

/// Runs the evaluation and writes the bundle into `out_dir`.
pub fn run_to_bundle(cfg: &RunConfig, out_dir: &Path) -> Result<RunOutput, PipelineError> {
    let output = run_evaluation(cfg)?;
    let inputs: Vec<InputDigest> = cfg.input_files().iter().map(|p| digest_file(p)).collect::<Result<_, _>>()?;
    let config = serde_json::to_value(cfg).map_err(|e| PipelineError::Config(e.to_string()))?;
    emit_dashboard(out_dir, &output.cells, &output.aggregates, Manifest::new(config, vec![cfg.seed], inputs))?;
    Ok(output)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_paths_resolve_against_base() {
        let text = r#"
            matchers = ["baselineLabel"]
            [[task]]
            source = "g/a.nt"
            target = "/abs/b.nt"
            gold = "gold.tsv"
        "#;
        let cfg = RunConfig::parse(text, Path::new("/runs/x")).unwrap();
        assert_eq!(cfg.tasks[0].source, Path::new("/runs/x/g/a.nt"));
        assert_eq!(cfg.tasks[0].target, Path::new("/abs/b.nt"));
        assert_eq!(cfg.semantics, Semantics::PartialOneToOne);
        assert_eq!(cfg.task_ids().unwrap()[0].to_string(), "a-b");
    }

    #[test]
    fn config_rejects_bad_entries() {
        let base = Path::new(".");
        assert!(RunConfig::parse("matchers = [\"baselineLabel\"]", base).is_err());
        let unknown = "matchers = [\"fancy\"]\n[[task]]\nsource='a.nt'\ntarget='b.nt'\ngold='g.tsv'\n";
        assert!(RunConfig::parse(unknown, base).is_err());
        let negatives = "matchers = [\"baselineLabel\"]\n[[task]]\nsource='a.nt'\ntarget='b.nt'\ngold='g.tsv'\nnegatives='n.tsv'\n";
        assert!(RunConfig::parse(negatives, base).is_err());
        assert!(RunConfig::parse(&format!("semantics = \"2018\"\n{negatives}"), base).is_ok());
    }
}
