//! Gold-standard construction from wiki page dumps and crowd votes.

mod crowd;
mod filter;
mod kappa;
mod redirects;
mod wikitext;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gold::{GoldError, GoldStandard};
use crate::graph::{GraphError, Iri, Task};

pub use crowd::{aggregate_crowd, apply_triangle_closure, close_triangles, CrowdResponse, CrowdTask, MAJORITY, RESPONSES_PER_TASK};
pub use filter::enforce_functional_injective;
pub use kappa::{fleiss_kappa, KappaBand, RatingsMatrix};
pub use redirects::{resolve_redirects, DroppedLink, MapRedirectResolver, RedirectProblem, RedirectResolver, DEFAULT_MAX_REDIRECT_DEPTH};
pub use wikitext::{extract_link_candidates, heading, split_sections, LinkExtraction, LinkToken};

#[derive(Debug, Error)]
pub enum GoldgenError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Format { path: String, line: usize, message: String },
    #[error("crowd task '{task}' has {count} responses, expected 5")]
    ResponseCount { task: String, count: usize },
    #[error("ratings matrix: {0}")]
    Ratings(String),
    #[error("degenerate: no category variance")]
    Degenerate,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Gold(#[from] GoldError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub header: String,
    pub body: String,
}

/// One record of a page dump.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WikiPage {
    pub wiki: String,
    pub title: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub redirect_to: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sections: Vec<Section>,
    /// Raw page text, split into sections on `==` headings.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

impl WikiPage {
    pub fn all_sections(&self) -> Vec<Section> {
        let mut out = self.sections.clone();
        if let Some(text) = &self.text {
            out.extend(split_sections(text));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PageRef {
    pub wiki: String,
    pub title: String,
}

impl fmt::Display for PageRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.wiki, self.title)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InterwikiLink {
    pub source: PageRef,
    pub target: PageRef,
    pub section_header: String,
}

/// MediaWiki title normalization: underscores become spaces, runs of
/// whitespace collapse, and the first letter is uppercased.
pub fn canonical_title(title: &str) -> String {
    let collapsed = title.replace('_', " ").split_whitespace().collect::<Vec<_>>().join(" ");
    let mut chars = collapsed.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Maps pages to entity IRIs. `{wiki}` in the template is replaced by the
/// wiki id; the title follows after a `/` with spaces as underscores.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IriScheme {
    pub template: String,
    /// Per-wiki overrides of the base IRI.
    #[serde(default)]
    pub bases: BTreeMap<String, String>,
}

impl Default for IriScheme {
    fn default() -> Self {
        IriScheme { template: "http://dbkwik.webdatacommons.org/{wiki}/resource".into(), bases: BTreeMap::new() }
    }
}

impl IriScheme {
    pub fn base(&self, wiki: &str) -> String {
        match self.bases.get(wiki) {
            Some(b) => b.trim_end_matches('/').to_owned(),
            None => self.template.replace("{wiki}", wiki),
        }
    }

    pub fn page_iri(&self, page: &PageRef) -> Result<Iri, GraphError> {
        let mut local = String::with_capacity(page.title.len());
        for c in page.title.chars() {
            match c {
                ' ' => local.push('_'),
                '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\' | '%' => {
                    local.push_str(&format!("%{:02X}", c as u32));
                }
                c if c.is_whitespace() || c.is_control() => {
                    let mut buf = [0u8; 4];
                    for b in c.encode_utf8(&mut buf).bytes() {
                        local.push_str(&format!("%{b:02X}"));
                    }
                }
                c => local.push(c),
            }
        }
        Iri::new(format!("{}/{}", self.base(&page.wiki), local))
    }
}

/// Output of the interlink pipeline.
#[derive(Debug, Default)]
pub struct InterlinkGold {
    pub golds: BTreeMap<Task, GoldStandard>,
    pub candidates: usize,
    pub dropped: Vec<DroppedLink>,
    /// (wiki, title, malformed link tokens)
    pub diagnostics: Vec<(String, String, usize)>,
}

/// Link extraction, redirect resolution and 1:1 filtering in one pass.
pub fn extract_interlink_gold(
    pages: &[WikiPage],
    link_target_wikis: &BTreeSet<String>,
    resolver: &dyn RedirectResolver,
    iris: &IriScheme,
    max_depth: usize,
) -> Result<InterlinkGold, GoldgenError> {
    let extraction = extract_link_candidates(pages, link_target_wikis);
    let candidates = extraction.links.len();
    let (resolved, dropped) = resolve_redirects(extraction.links, resolver, max_depth);
    let golds = enforce_functional_injective(&resolved, iris)?;
    Ok(InterlinkGold { golds, candidates, dropped, diagnostics: extraction.diagnostics })
}

/// Reads a JSON-lines page dump, one [`WikiPage`] per line.
pub fn load_page_dump(path: &Path) -> Result<Vec<WikiPage>, GoldgenError> {
    let io_err = |e| GoldgenError::Io { path: path.display().to_string(), source: e };
    let file = std::fs::File::open(path).map_err(io_err)?;
    let mut pages = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let page: WikiPage = serde_json::from_str(&line).map_err(|e| GoldgenError::Format {
            path: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        if page.redirect_to.is_some() && (!page.sections.is_empty() || page.text.is_some()) {
            log::warn!("{}: redirect page {} carries content; content ignored", path.display(), page.title);
        }
        pages.push(page);
    }
    Ok(pages)
}

/// Reads crowd tasks from a JSON-lines file.
pub fn load_crowd_tasks(path: &Path) -> Result<Vec<CrowdTask>, GoldgenError> {
    let text = std::fs::read_to_string(path).map_err(|e| GoldgenError::Io { path: path.display().to_string(), source: e })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| GoldgenError::Format {
                path: path.display().to_string(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}
