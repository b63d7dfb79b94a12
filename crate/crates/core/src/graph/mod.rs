//! RDF ingestion and the typed knowledge-graph model.

mod alignment;
mod model;
mod ntriples;

use std::path::Path;

use thiserror::Error;

pub use alignment::{
    parse_alignment, parse_alignment_tsv, parse_alignment_xml, write_alignment, write_alignment_tsv, write_alignment_xml,
    Alignment, AlignmentFormat, Correspondence, ParsedAlignment, Relation, Task,
};
pub use model::*;
pub use ntriples::{
    open_maybe_gzip, parse_line, parse_ntriples, parse_ntriples_str, read_ntriples_file, write_ntriples, NTriplesError,
    NTriplesReader, ParseMode,
};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("invalid IRI '{iri}': {reason}")]
    InvalidIri { iri: String, reason: &'static str },
    #[error("confidence {0} outside [0, 1]")]
    InvalidConfidence(f64),
    #[error("unknown relation '{0}'")]
    UnknownRelation(String),
    #[error("source and target graph are both '{0}'")]
    SameGraph(String),
    #[error("alignment line {line}: {message}")]
    Alignment { line: usize, message: String },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    NTriples(#[from] NTriplesError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Outcome of ingesting one N-Triples file.
#[derive(Debug)]
pub struct Ingested {
    pub graph: KnowledgeGraph,
    pub lines: u64,
    pub skipped: u64,
}

/// Streams a (possibly gzipped) N-Triples file into a graph.
pub fn ingest_ntriples(path: &Path, graph_id: &str, config: &ExtractionConfig, mode: ParseMode) -> Result<Ingested, GraphError> {
    let mut reader =
        read_ntriples_file(path, mode).map_err(|e| GraphError::Io { path: path.display().to_string(), source: e })?;
    let mut builder = GraphBuilder::new(graph_id, config.clone());
    for triple in reader.by_ref() {
        builder.push(triple?);
    }
    if reader.skipped() > 0 {
        log::warn!("{}: skipped {} malformed line(s)", path.display(), reader.skipped());
    }
    Ok(Ingested { graph: builder.finish(), lines: reader.lines_read(), skipped: reader.skipped() })
}

/// Graph id derived from a file name: the stem before the first `.`.
pub fn graph_id_from_path(path: &Path) -> String {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("graph");
    name.split('.').next().filter(|s| !s.is_empty()).unwrap_or(name).to_owned()
}
