//! `kgbench`: command-line entry point for the matching benchmark.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "kgbench", version, about = "Knowledge-graph matching benchmark harness")]
struct Cli {
    /// Worker threads for parallel stages (default: available cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse an N-Triples graph and report entity counts per kind.
    Ingest(IngestArgs),
    /// Run a label baseline matcher between two graphs.
    Match(MatchArgs),
    /// Build gold standards from a wiki page dump or crowd votes.
    ExtractGold(ExtractGoldArgs),
    /// Score alignments and write a report bundle.
    Evaluate(EvaluateArgs),
    /// Count correspondences per arity class.
    Arity(ArityArgs),
    /// Draw a reproducible sample of correspondences for manual judging.
    Sample(SampleArgs),
    /// Fleiss' kappa of a ratings matrix.
    Kappa(KappaArgs),
    /// Print and verify a report bundle.
    Report(ReportArgs),
    /// Serve annotation sessions over HTTP.
    Serve(ServeArgs),
}

#[derive(Args)]
struct GraphOptions {
    /// Extraction config (TOML key-value file).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Skip malformed lines instead of failing.
    #[arg(long)]
    lenient: bool,
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Graph id (default: file name up to the first dot).
    #[arg(long)]
    id: Option<String>,
    #[command(flatten)]
    options: GraphOptions,
    /// Write the statistics here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MatchArgs {
    #[arg(long)]
    source: PathBuf,
    #[arg(long)]
    target: PathBuf,
    /// Index alt-labels too (baselineAltLabel).
    #[arg(long)]
    alt_labels: bool,
    /// Keep only labels shared by exactly one entity on each side.
    #[arg(long)]
    unique_only: bool,
    #[command(flatten)]
    options: GraphOptions,
    /// Alignment file; `.tsv` writes TSV, anything else alignment XML.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExtractGoldArgs {
    /// Page dump, one JSON page per line.
    #[arg(long, required_unless_present = "crowd", conflicts_with = "crowd")]
    pages: Option<PathBuf>,
    /// Crowd tasks, one JSON task per line.
    #[arg(long)]
    crowd: Option<PathBuf>,
    /// Redirect map as `<wiki>=<tsv file>`; repeatable.
    #[arg(long, value_name = "WIKI=FILE")]
    redirects: Vec<String>,
    /// Wikis whose interwiki links count (default: every wiki in the dump).
    #[arg(long, value_delimiter = ',')]
    wikis: Vec<String>,
    /// IRI template for page entities, `{wiki}` is replaced by the wiki id.
    #[arg(long)]
    iri_template: Option<String>,
    #[arg(long, default_value_t = kgbench_core::goldgen::DEFAULT_MAX_REDIRECT_DEPTH)]
    max_depth: usize,
    /// Add pairs inferred through a shared source entity (crowd input only).
    #[arg(long)]
    triangles: bool,
    /// Output directory; one `<source>-<target>.tsv` per task.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Run config listing tasks, gold standards and matchers.
    #[arg(long, conflicts_with_all = ["alignment", "gold", "negatives", "graphs", "matcher"])]
    config: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    alignment: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    gold: Option<PathBuf>,
    #[arg(long)]
    negatives: Option<PathBuf>,
    #[arg(long, value_parser = ["2018", "2019"])]
    semantics: Option<String>,
    #[arg(long, value_parser = ["both", "source"])]
    fp_side: Option<String>,
    /// Source and target graph files.
    #[arg(long, num_args = 2, value_names = ["SRC", "TGT"], required_unless_present = "config")]
    graphs: Vec<PathBuf>,
    /// Matcher name (default: name of the directory holding the alignment).
    #[arg(long)]
    matcher: Option<String>,
    #[arg(long)]
    lenient: bool,
    /// Report bundle directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ArityArgs {
    #[arg(long)]
    alignment: PathBuf,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    alignment: PathBuf,
    #[arg(short = 'n', default_value_t = 50)]
    n: usize,
    #[arg(long)]
    seed: u64,
    /// Matcher name recorded in the items (default: name of the directory holding the alignment).
    #[arg(long)]
    matcher: Option<String>,
    /// Source and target graph files; they name the task and feed entity cards.
    #[arg(long, num_args = 2, value_names = ["SRC", "TGT"])]
    graphs: Vec<PathBuf>,
    /// Sample file, one JSON item per line.
    #[arg(long)]
    out: PathBuf,
    /// Also create an annotation session in this directory.
    #[arg(long)]
    session: Option<PathBuf>,
    /// Report bundle shown on the session dashboard.
    #[arg(long, requires = "session")]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct KappaArgs {
    /// Subjects × categories count matrix, whitespace separated.
    #[arg(long)]
    ratings: PathBuf,
    /// Also print the exact rational value.
    #[arg(long)]
    exact: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Bundle directory.
    #[arg(long)]
    bundle: PathBuf,
    /// Recompute all aggregates from the cell table and compare.
    #[arg(long)]
    verify: bool,
}

#[derive(Args)]
struct ServeArgs {
    /// Directory holding one subdirectory per session.
    #[arg(long)]
    sessions: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: String,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("KGBENCH_LOG", "warn")).format_timestamp(None).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
