//! Correspondences, alignments and their file formats.
//!
//! Two formats are supported: the RDF/XML alignment format with `Cell`
//! elements (`entity1`, `entity2`, `relation`, `measure`), and a tab-separated
//! `source<TAB>target<TAB>relation<TAB>confidence` form.

use std::collections::HashSet;
use std::fmt;
use std::io::{self, Write};
use std::path::Path;

use quick_xml::events::Event;
use quick_xml::Reader;
use serde::{Deserialize, Serialize};

use super::model::Iri;
use super::GraphError;

/// Source and target graph of a matching task.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Task {
    pub source: String,
    pub target: String,
}

impl Task {
    pub fn new(source: impl Into<String>, target: impl Into<String>) -> Result<Self, GraphError> {
        let (source, target) = (source.into(), target.into());
        if source == target {
            return Err(GraphError::SameGraph(source));
        }
        Ok(Task { source, target })
    }

    pub fn reversed(&self) -> Task {
        Task { source: self.target.clone(), target: self.source.clone() }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.source, self.target)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Relation {
    #[default]
    #[serde(rename = "=")]
    Equivalence,
}

impl Relation {
    pub fn parse(s: &str) -> Result<Self, GraphError> {
        match s.trim() {
            "" | "=" | "≡" => Ok(Relation::Equivalence),
            s if s.eq_ignore_ascii_case("equivalence") => Ok(Relation::Equivalence),
            other => Err(GraphError::UnknownRelation(other.to_owned())),
        }
    }

    pub fn as_str(self) -> &'static str {
        "="
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    pub source: Iri,
    pub target: Iri,
    #[serde(default)]
    pub relation: Relation,
    pub confidence: f64,
}

impl Correspondence {
    pub fn new(source: Iri, target: Iri, confidence: f64) -> Result<Self, GraphError> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(GraphError::InvalidConfidence(confidence));
        }
        Ok(Correspondence { source, target, relation: Relation::Equivalence, confidence })
    }

    /// Equivalence with confidence 1.0.
    pub fn exact(source: Iri, target: Iri) -> Self {
        Correspondence { source, target, relation: Relation::Equivalence, confidence: 1.0 }
    }

    pub fn pair(&self) -> (&Iri, &Iri) {
        (&self.source, &self.target)
    }
}

/// The correspondences produced (or asserted) for one task, free of duplicate pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    pub task: Task,
    cells: Vec<Correspondence>,
}

impl Alignment {
    pub fn empty(task: Task) -> Self {
        Alignment { task, cells: Vec::new() }
    }

    /// Builds an alignment, keeping the first occurrence of each (source, target)
    /// pair. Returns the alignment and the number of dropped duplicates.
    pub fn from_cells(task: Task, cells: impl IntoIterator<Item = Correspondence>) -> (Self, usize) {
        let mut seen = HashSet::new();
        let mut kept = Vec::new();
        let mut duplicates = 0;
        for c in cells {
            if seen.insert((c.source.clone(), c.target.clone())) {
                kept.push(c);
            } else {
                duplicates += 1;
            }
        }
        (Alignment { task, cells: kept }, duplicates)
    }

    pub fn cells(&self) -> &[Correspondence] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Sorts cells by source IRI, then target IRI.
    pub fn sort(&mut self) {
        self.cells.sort_by(|a, b| a.pair().cmp(&b.pair()));
    }

    pub fn into_cells(self) -> Vec<Correspondence> {
        self.cells
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlignmentFormat {
    Xml,
    Tsv,
}

impl AlignmentFormat {
    /// `.tsv` / `.txt` / `.tab` select TSV, everything else XML.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()) {
            Some(ext) if ext == "tsv" || ext == "txt" || ext == "tab" => AlignmentFormat::Tsv,
            _ => AlignmentFormat::Xml,
        }
    }
}

#[derive(Debug)]
pub struct ParsedAlignment {
    pub alignment: Alignment,
    pub duplicates: usize,
}

/// Reads an alignment file. The task is taken from the XML `onto1`/`onto2`
/// headers when present, otherwise from `default_task`.
pub fn parse_alignment(path: &Path, default_task: &Task) -> Result<ParsedAlignment, GraphError> {
    let text = std::fs::read_to_string(path).map_err(|e| GraphError::Io { path: path.display().to_string(), source: e })?;
    let format = if text.trim_start().starts_with('<') { AlignmentFormat::Xml } else { AlignmentFormat::from_path(path) };
    match format {
        AlignmentFormat::Xml => parse_alignment_xml(&text, default_task),
        AlignmentFormat::Tsv => parse_alignment_tsv(&text, default_task.clone()),
    }
}

pub fn parse_alignment_tsv(text: &str, task: Task) -> Result<ParsedAlignment, GraphError> {
    let mut cells = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 2 || fields.len() > 4 {
            return Err(GraphError::Alignment { line: i + 1, message: format!("expected 2-4 tab-separated fields, found {}", fields.len()) });
        }
        let at = |e: GraphError| GraphError::Alignment { line: i + 1, message: e.to_string() };
        let source = Iri::new(strip_angles(fields[0])).map_err(at)?;
        let target = Iri::new(strip_angles(fields[1])).map_err(at)?;
        let relation = fields.get(2).map(|r| Relation::parse(r)).transpose()?.unwrap_or_default();
        let confidence = match fields.get(3).map(|c| c.trim()) {
            None | Some("") => 1.0,
            Some(c) => c
                .parse::<f64>()
                .map_err(|_| GraphError::Alignment { line: i + 1, message: format!("invalid confidence '{c}'") })?,
        };
        let mut cell = Correspondence::new(source, target, confidence).map_err(at)?;
        cell.relation = relation;
        cells.push(cell);
    }
    let (alignment, duplicates) = Alignment::from_cells(task, cells);
    if duplicates > 0 {
        log::warn!("dropped {duplicates} duplicate cell(s)");
    }
    Ok(ParsedAlignment { alignment, duplicates })
}

fn strip_angles(s: &str) -> &str {
    let s = s.trim();
    s.strip_prefix('<').and_then(|s| s.strip_suffix('>')).unwrap_or(s)
}

#[derive(Default)]
struct CellBuilder {
    entity1: Option<String>,
    entity2: Option<String>,
    relation: Option<String>,
    measure: Option<String>,
}

pub fn parse_alignment_xml(text: &str, default_task: &Task) -> Result<ParsedAlignment, GraphError> {
    let xml_err = |e: &dyn fmt::Display| GraphError::Alignment { line: 0, message: format!("XML: {e}") };
    let mut reader = Reader::from_str(text);
    reader.config_mut().trim_text(true);

    let mut cells = Vec::new();
    let mut cell: Option<CellBuilder> = None;
    let mut onto: [Option<String>; 2] = [None, None];
    let mut in_onto: Option<usize> = None;
    let mut text_target: Option<&'static str> = None;

    loop {
        let event = reader.read_event().map_err(|e| xml_err(&e))?;
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => {
                let is_empty = matches!(event, Event::Empty(_));
                let name = e.local_name();
                let resource = e
                    .attributes()
                    .filter_map(Result::ok)
                    .find(|a| matches!(a.key.local_name().as_ref(), b"resource" | b"about"))
                    .map(|a| a.unescape_value().map(|v| v.into_owned()))
                    .transpose()
                    .map_err(|e| xml_err(&e))?;
                match name.as_ref() {
                    b"Cell" => cell = Some(CellBuilder::default()),
                    b"entity1" | b"entity2" if cell.is_some() => {
                        let c = cell.as_mut().unwrap();
                        let which = if name.as_ref() == b"entity1" { &mut c.entity1 } else { &mut c.entity2 };
                        if let Some(r) = resource {
                            *which = Some(r);
                        } else if !is_empty {
                            text_target = Some(if name.as_ref() == b"entity1" { "entity1" } else { "entity2" });
                        }
                    }
                    b"relation" if cell.is_some() && !is_empty => text_target = Some("relation"),
                    b"measure" if cell.is_some() && !is_empty => text_target = Some("measure"),
                    b"onto1" if !is_empty => in_onto = Some(0),
                    b"onto2" if !is_empty => in_onto = Some(1),
                    b"Ontology" => {
                        if let (Some(i), Some(r)) = (in_onto, resource) {
                            onto[i] = Some(r);
                        }
                    }
                    b"uri" | b"location" if in_onto.is_some() && !is_empty => {
                        text_target = Some(if in_onto == Some(0) { "onto1" } else { "onto2" })
                    }
                    _ => {}
                }
            }
            Event::Text(t) => {
                if let Some(target) = text_target.take() {
                    let value = t.unescape().map_err(|e| xml_err(&e))?.trim().to_owned();
                    match target {
                        "onto1" => {
                            onto[0].get_or_insert(value);
                        }
                        "onto2" => {
                            onto[1].get_or_insert(value);
                        }
                        _ => {
                            let c = cell.as_mut().unwrap();
                            let slot = match target {
                                "entity1" => &mut c.entity1,
                                "entity2" => &mut c.entity2,
                                "relation" => &mut c.relation,
                                _ => &mut c.measure,
                            };
                            *slot = Some(value);
                        }
                    }
                }
            }
            Event::End(ref e) => {
                text_target = None;
                match e.local_name().as_ref() {
                    b"Cell" => {
                        let c = cell.take().unwrap_or_default();
                        let source = c.entity1.ok_or_else(|| xml_err(&"Cell without entity1"))?;
                        let target = c.entity2.ok_or_else(|| xml_err(&"Cell without entity2"))?;
                        let relation = c.relation.as_deref().map(Relation::parse).transpose()?.unwrap_or_default();
                        let confidence = match c.measure.as_deref() {
                            None | Some("") => 1.0,
                            Some(m) => m.parse::<f64>().map_err(|_| xml_err(&format!("invalid measure '{m}'")))?,
                        };
                        let mut corr = Correspondence::new(Iri::new(source)?, Iri::new(target)?, confidence)?;
                        corr.relation = relation;
                        cells.push(corr);
                    }
                    b"onto1" | b"onto2" => in_onto = None,
                    _ => {}
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }

    let task = match onto {
        [Some(a), Some(b)] => Task::new(graph_id_from_uri(&a), graph_id_from_uri(&b)).unwrap_or_else(|_| default_task.clone()),
        _ => default_task.clone(),
    };
    let (alignment, duplicates) = Alignment::from_cells(task, cells);
    if duplicates > 0 {
        log::warn!("dropped {duplicates} duplicate cell(s)");
    }
    Ok(ParsedAlignment { alignment, duplicates })
}

/// Graph id from an ontology URI: the last non-empty path segment.
fn graph_id_from_uri(uri: &str) -> String {
    uri.trim_end_matches('/').rsplit(['/', '#']).next().unwrap_or(uri).to_owned()
}

pub fn write_alignment(path: &Path, alignment: &Alignment) -> Result<(), GraphError> {
    let io_err = |e: io::Error| GraphError::Io { path: path.display().to_string(), source: e };
    let file = std::fs::File::create(path).map_err(io_err)?;
    let mut out = io::BufWriter::new(file);
    match AlignmentFormat::from_path(path) {
        AlignmentFormat::Tsv => write_alignment_tsv(&mut out, alignment),
        AlignmentFormat::Xml => write_alignment_xml(&mut out, alignment),
    }
    .and_then(|_| out.flush())
    .map_err(io_err)
}

pub fn write_alignment_tsv<W: Write>(out: &mut W, alignment: &Alignment) -> io::Result<()> {
    for c in alignment.cells() {
        writeln!(out, "{}\t{}\t{}\t{}", c.source.as_str(), c.target.as_str(), c.relation.as_str(), c.confidence)?;
    }
    Ok(())
}

pub fn write_alignment_xml<W: Write>(out: &mut W, alignment: &Alignment) -> io::Result<()> {
    use quick_xml::escape::escape;
    writeln!(out, r#"<?xml version="1.0" encoding="utf-8"?>"#)?;
    writeln!(
        out,
        r#"<rdf:RDF xmlns="http://knowledgeweb.semanticweb.org/heterogeneity/alignment" xmlns:rdf="http://www.w3.org/1999/02/22-rdf-syntax-ns#" xmlns:xsd="http://www.w3.org/2001/XMLSchema#">"#
    )?;
    writeln!(out, "<Alignment>")?;
    writeln!(out, "  <xml>yes</xml>")?;
    writeln!(out, "  <level>0</level>")?;
    writeln!(out, "  <type>??</type>")?;
    writeln!(out, "  <onto1><Ontology rdf:about=\"{}\"/></onto1>", escape(&alignment.task.source))?;
    writeln!(out, "  <onto2><Ontology rdf:about=\"{}\"/></onto2>", escape(&alignment.task.target))?;
    for c in alignment.cells() {
        writeln!(out, "  <map>")?;
        writeln!(out, "    <Cell>")?;
        writeln!(out, "      <entity1 rdf:resource=\"{}\"/>", escape(c.source.as_str()))?;
        writeln!(out, "      <entity2 rdf:resource=\"{}\"/>", escape(c.target.as_str()))?;
        writeln!(out, "      <relation>{}</relation>", escape(c.relation.as_str()))?;
        writeln!(out, "      <measure rdf:datatype=\"xsd:float\">{}</measure>", c.confidence)?;
        writeln!(out, "    </Cell>")?;
        writeln!(out, "  </map>")?;
    }
    writeln!(out, "</Alignment>")?;
    writeln!(out, "</rdf:RDF>")?;
    Ok(())
}
