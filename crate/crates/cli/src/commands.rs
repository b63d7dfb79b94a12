use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use kgbench_core::eval::{classify_arity, FpSide, Semantics};
use kgbench_core::goldgen::{
    aggregate_crowd, apply_triangle_closure, extract_interlink_gold, fleiss_kappa, load_crowd_tasks, load_page_dump, IriScheme,
    MapRedirectResolver, RatingsMatrix,
};
use kgbench_core::graph::{graph_id_from_path, ingest_ntriples, parse_alignment, write_alignment, ExtractionConfig, KnowledgeGraph, ParseMode};
use kgbench_core::matchers::{match_by_label, MatchOptions};
use kgbench_core::pipeline::{run_to_bundle, AlignmentSpec, PipelineError, RunConfig, TaskSpec};
use kgbench_core::report::{verify_bundle, Aggregates};
use kgbench_core::sampling::{sample, write_jsonl};
use kgbench_core::{EntityKind, Exact, Task};
use kgbench_service::{Service, SessionConfig};
use serde_json::json;

use crate::{ArityArgs, Command, EvaluateArgs, ExtractGoldArgs, GraphOptions, IngestArgs, KappaArgs, MatchArgs, ReportArgs, SampleArgs, ServeArgs};

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or missing input files.
    Usage(String),
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failed(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Failed(m) => f.write_str(m),
        }
    }
}

fn failed(e: impl fmt::Display) -> CliError {
    CliError::Failed(e.to_string())
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::MissingFile(_) | PipelineError::Config(_) => CliError::Usage(e.to_string()),
            e => failed(e),
        }
    }
}

fn require(path: &Path) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("missing input file {}", path.display())))
    }
}

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Ingest(a) => ingest(a),
        Command::Match(a) => run_match(a),
        Command::ExtractGold(a) => extract_gold(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Arity(a) => arity(a),
        Command::Sample(a) => run_sample(a),
        Command::Kappa(a) => kappa(a),
        Command::Report(a) => report(a),
        Command::Serve(a) => serve(a),
    }
}

fn extraction(options: &GraphOptions) -> Result<ExtractionConfig, CliError> {
    match &options.config {
        Some(p) => {
            require(p)?;
            ExtractionConfig::from_file(p).map_err(failed)
        }
        None => Ok(ExtractionConfig::default()),
    }
}

fn mode(lenient: bool) -> ParseMode {
    if lenient {
        ParseMode::Lenient
    } else {
        ParseMode::Strict
    }
}

fn load_graph(path: &Path, config: &ExtractionConfig, lenient: bool) -> Result<KnowledgeGraph, CliError> {
    require(path)?;
    let id = graph_id_from_path(path);
    Ok(ingest_ntriples(path, &id, config, mode(lenient)).map_err(failed)?.graph)
}

fn print_json(value: &serde_json::Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(failed)?;
    println!("{text}");
    Ok(())
}

fn ingest(a: IngestArgs) -> Result<(), CliError> {
    require(&a.graph)?;
    let config = extraction(&a.options)?;
    let id = a.id.unwrap_or_else(|| graph_id_from_path(&a.graph));
    let ingested = ingest_ntriples(&a.graph, &id, &config, mode(a.options.lenient)).map_err(failed)?;
    let g = &ingested.graph;
    let stats = json!({
        "graph": g.id(),
        "lines": ingested.lines,
        "skipped": ingested.skipped,
        "triples": g.triple_count(),
        "entities": g.len(),
        "classes": g.count_by_kind(EntityKind::Class),
        "properties": g.count_by_kind(EntityKind::Property),
        "instances": g.count_by_kind(EntityKind::Instance),
        "kind_conflicts": g.conflicts().len(),
    });
    match a.out {
        Some(out) => {
            let text = serde_json::to_string_pretty(&stats).map_err(failed)? + "\n";
            fs::write(&out, text).map_err(|e| failed(format!("{}: {e}", out.display())))
        }
        None => print_json(&stats),
    }
}

fn run_match(a: MatchArgs) -> Result<(), CliError> {
    require(&a.source)?;
    require(&a.target)?;
    let config = extraction(&a.options)?;
    let (source, target) = rayon::join(
        || load_graph(&a.source, &config, a.options.lenient),
        || load_graph(&a.target, &config, a.options.lenient),
    );
    let (source, target) = (source?, target?);
    let options = MatchOptions { use_alt_labels: a.alt_labels, unique_only: a.unique_only };
    let alignment = match_by_label(&source, &target, options).map_err(failed)?;
    write_alignment(&a.out, &alignment).map_err(failed)?;
    log::info!("{}: {} correspondences for {}", options.matcher_name(), alignment.len(), alignment.task);
    println!("{}", alignment.len());
    Ok(())
}

fn extract_gold(a: ExtractGoldArgs) -> Result<(), CliError> {
    let (golds, mut summary) = if let Some(pages_path) = &a.pages {
        require(pages_path)?;
        let pages = load_page_dump(pages_path).map_err(failed)?;
        let mut resolver = MapRedirectResolver::new();
        resolver.add_pages(&pages);
        for spec in &a.redirects {
            let (wiki, file) =
                spec.split_once('=').ok_or_else(|| CliError::Usage(format!("--redirects expects WIKI=FILE, got '{spec}'")))?;
            let file = Path::new(file);
            require(file)?;
            resolver.load_tsv(wiki, file).map_err(failed)?;
        }
        let wikis: BTreeSet<String> =
            if a.wikis.is_empty() { pages.iter().map(|p| p.wiki.clone()).collect() } else { a.wikis.iter().cloned().collect() };
        let mut scheme = IriScheme::default();
        if let Some(t) = &a.iri_template {
            scheme.template = t.clone();
        }
        let out = extract_interlink_gold(&pages, &wikis, &resolver, &scheme, a.max_depth).map_err(failed)?;
        let dropped: Vec<_> = out
            .dropped
            .iter()
            .map(|d| {
                json!({
                    "source": d.link.source.to_string(),
                    "target": d.link.target.to_string(),
                    "problem": format!("{:?}", d.problem).to_lowercase(),
                })
            })
            .collect();
        let summary = json!({
            "candidates": out.candidates,
            "dropped": dropped,
            "malformed_links": out.diagnostics.iter().map(|(w, t, n)| json!({ "wiki": w, "title": t, "count": n })).collect::<Vec<_>>(),
        });
        (out.golds, summary)
    } else {
        let crowd = a.crowd.as_ref().expect("clap enforces one input");
        require(crowd)?;
        let tasks = load_crowd_tasks(crowd).map_err(failed)?;
        let mut golds = aggregate_crowd(&tasks).map_err(failed)?;
        let inferred = if a.triangles { apply_triangle_closure(&mut golds) } else { 0 };
        (golds, json!({ "crowd_tasks": tasks.len(), "inferred": inferred }))
    };
    fs::create_dir_all(&a.out).map_err(|e| failed(format!("{}: {e}", a.out.display())))?;
    let mut written = Vec::new();
    for (task, gold) in &golds {
        let path = a.out.join(format!("{task}.tsv"));
        gold.write(&path, task).map_err(failed)?;
        written.push(json!({ "task": task.to_string(), "positives": gold.positives.len(), "negatives": gold.negatives.len() }));
    }
    summary["tasks"] = json!(written);
    print_json(&summary)
}

fn parse_semantics(s: Option<&str>) -> Result<Option<Semantics>, CliError> {
    s.map(|s| s.parse::<Semantics>().map_err(|e| CliError::Usage(e.to_string()))).transpose()
}

fn parse_fp_side(s: Option<&str>) -> Result<Option<FpSide>, CliError> {
    s.map(|s| s.parse::<FpSide>().map_err(|e| CliError::Usage(e.to_string()))).transpose()
}

/// Alignments are laid out as `<matcher>/<source>-<target>.<ext>`.
fn default_matcher(alignment: &Path) -> String {
    alignment
        .parent()
        .and_then(|p| p.file_name())
        .and_then(|n| n.to_str())
        .or_else(|| alignment.file_stem().and_then(|s| s.to_str()))
        .unwrap_or("matcher")
        .to_owned()
}

fn evaluate(a: EvaluateArgs) -> Result<(), CliError> {
    let semantics = parse_semantics(a.semantics.as_deref())?;
    let fp_side = parse_fp_side(a.fp_side.as_deref())?;
    let mut cfg = match &a.config {
        Some(path) => {
            require(path)?;
            RunConfig::from_file(path)?
        }
        None => {
            let alignment = a.alignment.clone().expect("clap requires --alignment");
            let [source, target] = <[PathBuf; 2]>::try_from(a.graphs.clone()).expect("clap takes two graphs");
            let task = Task::new(graph_id_from_path(&source), graph_id_from_path(&target)).map_err(|e| CliError::Usage(e.to_string()))?;
            let matcher = a.matcher.clone().unwrap_or_else(|| default_matcher(&alignment));
            RunConfig {
                semantics: Semantics::default(),
                fp_side: FpSide::default(),
                seed: 0,
                lenient: a.lenient,
                extraction: None,
                matchers: Vec::new(),
                tasks: vec![TaskSpec { source, target, gold: a.gold.clone().expect("clap requires --gold"), negatives: a.negatives.clone() }],
                alignments: vec![AlignmentSpec { matcher, task: task.to_string(), path: alignment }],
            }
        }
    };
    if let Some(s) = semantics {
        cfg.semantics = s;
    }
    if let Some(f) = fp_side {
        cfg.fp_side = f;
    }
    if a.lenient {
        cfg.lenient = true;
    }
    cfg.validate()?;
    let output = run_to_bundle(&cfg, &a.out)?;
    print_table4(&output.aggregates);
    Ok(())
}

fn arity(a: ArityArgs) -> Result<(), CliError> {
    require(&a.alignment)?;
    let placeholder = Task::new("source", "target").expect("distinct ids");
    let parsed = parse_alignment(&a.alignment, &placeholder).map_err(failed)?;
    let (_, counts) = classify_arity(&parsed.alignment);
    print_json(&json!({
        "total": counts.total(),
        "1:1": counts.one_one,
        "1:n": counts.one_n,
        "n:1": counts.n_one,
        "n:m": counts.n_m,
    }))
}

/// Task of a sample: the graphs when given, otherwise an alignment named `<source>-<target>.<ext>`.
fn sample_task(a: &SampleArgs) -> Result<Task, CliError> {
    if let [s, t] = a.graphs.as_slice() {
        return Task::new(graph_id_from_path(s), graph_id_from_path(t)).map_err(|e| CliError::Usage(e.to_string()));
    }
    let stem = graph_id_from_path(&a.alignment);
    stem.split_once('-')
        .and_then(|(s, t)| Task::new(s, t).ok())
        .ok_or_else(|| CliError::Usage(format!("cannot tell the task from '{stem}'; pass --graphs <src> <tgt>")))
}

fn absolute(p: &Path) -> Result<PathBuf, CliError> {
    fs::canonicalize(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))
}

fn run_sample(a: SampleArgs) -> Result<(), CliError> {
    require(&a.alignment)?;
    for g in &a.graphs {
        require(g)?;
    }
    let task = sample_task(&a)?;
    let parsed = parse_alignment(&a.alignment, &task).map_err(failed)?;
    let matcher = a.matcher.clone().unwrap_or_else(|| default_matcher(&a.alignment));
    let items = sample(&parsed.alignment, &matcher, a.n, a.seed).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut out = Vec::new();
    write_jsonl(&mut out, &items).map_err(failed)?;
    fs::write(&a.out, out).map_err(|e| failed(format!("{}: {e}", a.out.display())))?;
    if let Some(session) = &a.session {
        let id = session.file_name().and_then(|n| n.to_str()).ok_or_else(|| CliError::Usage("--session needs a directory name".into()))?;
        let root = session.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        fs::create_dir_all(root).map_err(|e| failed(format!("{}: {e}", root.display())))?;
        let config = SessionConfig {
            source_graph: a.graphs.first().map(|p| absolute(p)).transpose()?,
            target_graph: a.graphs.get(1).map(|p| absolute(p)).transpose()?,
            report: a.report.as_deref().map(absolute).transpose()?,
        };
        Service::create_session(root, id, &items, &config).map_err(failed)?;
    }
    println!("{} of {} correspondences sampled", items.len(), parsed.alignment.len());
    Ok(())
}

fn kappa(a: KappaArgs) -> Result<(), CliError> {
    require(&a.ratings)?;
    let text = fs::read_to_string(&a.ratings).map_err(|e| failed(format!("{}: {e}", a.ratings.display())))?;
    let m: RatingsMatrix = text.parse().map_err(|e| CliError::Failed(format!("{}: {e}", a.ratings.display())))?;
    let (k, band) = fleiss_kappa::<f64>(&m).map_err(failed)?;
    println!("{k:.6}\t{band}");
    if a.exact {
        let (exact, _) = fleiss_kappa::<Exact>(&m).map_err(failed)?;
        println!("{exact}");
    }
    Ok(())
}

fn print_table4(aggregates: &Aggregates) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(
        out,
        "{:<20} {:<9} {:>5} {:>10} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}",
        "System", "Kind", "Tasks", "Size", "Prec.", "F-m.", "Rec.", "Prec.*", "F-m.*", "Rec.*"
    );
    for r in &aggregates.table4 {
        let _ = writeln!(
            out,
            "{:<20} {:<9} {:>5} {:>10.1} {:>8.3} {:>8.3} {:>8.3} {:>8.3} {:>8.3} {:>8.3}",
            r.system, r.kind, r.tasks, r.size, r.precision, r.f_measure, r.recall, r.precision_non_empty, r.f_measure_non_empty, r.recall_non_empty
        );
    }
    let _ = writeln!(out, "* non-empty alignments only ({} semantics, false positives on {} side)", aggregates.semantics, aggregates.fp_side);
}

fn print_table5(aggregates: &Aggregates) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{:<20} {:<40} {:>7} {:>7} {:>7} {:>7}", "System", "Task", "1:1", "1:n", "n:1", "n:m");
    for r in &aggregates.table5 {
        let _ = writeln!(out, "{:<20} {:<40} {:>7} {:>7} {:>7} {:>7}", r.system, r.task, r.one_one, r.one_n, r.n_one, r.n_m);
    }
}

fn report(a: ReportArgs) -> Result<(), CliError> {
    let path = a.bundle.join("aggregates.json");
    require(&path)?;
    let aggregates: Aggregates = serde_json::from_str(&fs::read_to_string(&path).map_err(failed)?)
        .map_err(|e| failed(format!("{}: {e}", path.display())))?;
    print_table4(&aggregates);
    println!();
    print_table5(&aggregates);
    if a.verify {
        verify_bundle(&a.bundle).map_err(failed)?;
        println!("\nbundle verified");
    }
    Ok(())
}

fn serve(a: ServeArgs) -> Result<(), CliError> {
    require(&a.sessions)?;
    let service = Arc::new(Service::open(&a.sessions).map_err(failed)?);
    let runtime = tokio::runtime::Runtime::new().map_err(failed)?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&a.addr).await.map_err(|e| CliError::Usage(format!("{}: {e}", a.addr)))?;
        let addr = listener.local_addr().map_err(failed)?;
        eprintln!("serving {} session(s) on http://{addr}", service.session_ids().count());
        axum::serve(listener, kgbench_service::router(service)).await.map_err(failed)
    })
}
