use std::collections::{HashMap, HashSet};
use std::path::Path;

use super::{canonical_title, GoldgenError, InterwikiLink, WikiPage};

pub const DEFAULT_MAX_REDIRECT_DEPTH: usize = 10;

/// One-hop redirect lookup. An HTTP-backed implementation can be plugged in
/// by implementing this trait.
pub trait RedirectResolver {
    /// The page `title` in `wiki` redirects to, if it is a redirect.
    fn redirect(&self, wiki: &str, title: &str) -> Option<String>;
}

/// File-backed resolver: one `title -> title` map per wiki (ids compared
/// case-insensitively).
#[derive(Debug, Default, Clone)]
pub struct MapRedirectResolver {
    maps: HashMap<String, HashMap<String, String>>,
}

impl MapRedirectResolver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, wiki: &str, from: &str, to: &str) {
        self.maps.entry(wiki.to_lowercase()).or_default().insert(canonical_title(from), canonical_title(to));
    }

    /// Registers the redirect records of a page dump.
    pub fn add_pages(&mut self, pages: &[WikiPage]) {
        for p in pages {
            if let Some(to) = &p.redirect_to {
                self.insert(&p.wiki, &p.title, to);
            }
        }
    }

    /// Loads a two-column `from<TAB>to` TSV for `wiki`.
    pub fn load_tsv(&mut self, wiki: &str, path: &Path) -> Result<(), GoldgenError> {
        let text = std::fs::read_to_string(path).map_err(|e| GoldgenError::Io { path: path.display().to_string(), source: e })?;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            match line.split_once('\t') {
                Some((from, to)) if !from.trim().is_empty() && !to.trim().is_empty() => self.insert(wiki, from, to),
                _ => {
                    return Err(GoldgenError::Format {
                        path: path.display().to_string(),
                        line: i + 1,
                        message: "expected 'from<TAB>to'".into(),
                    })
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.maps.values().map(HashMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl RedirectResolver for MapRedirectResolver {
    fn redirect(&self, wiki: &str, title: &str) -> Option<String> {
        self.maps.get(&wiki.to_lowercase())?.get(title).cloned()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RedirectProblem {
    Cycle,
    DepthExceeded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DroppedLink {
    pub link: InterwikiLink,
    pub problem: RedirectProblem,
}

/// Replaces each link target by the end of its redirect chain. Links whose
/// chain cycles or is longer than `max_depth` hops are dropped and reported.
pub fn resolve_redirects(
    links: Vec<InterwikiLink>,
    resolver: &dyn RedirectResolver,
    max_depth: usize,
) -> (Vec<InterwikiLink>, Vec<DroppedLink>) {
    let mut resolved = Vec::with_capacity(links.len());
    let mut dropped = Vec::new();
    for mut link in links {
        match follow(resolver, &link.target.wiki, &link.target.title, max_depth) {
            Ok(title) => {
                link.target.title = title;
                resolved.push(link);
            }
            Err(problem) => {
                log::info!("dropping link {} -> {}: {:?}", link.source, link.target, problem);
                dropped.push(DroppedLink { link, problem });
            }
        }
    }
    (resolved, dropped)
}

fn follow(resolver: &dyn RedirectResolver, wiki: &str, start: &str, max_depth: usize) -> Result<String, RedirectProblem> {
    let mut seen = HashSet::new();
    let mut current = start.to_owned();
    seen.insert(current.clone());
    for _ in 0..max_depth {
        match resolver.redirect(wiki, &current) {
            None => return Ok(current),
            Some(next) => {
                if !seen.insert(next.clone()) {
                    return Err(RedirectProblem::Cycle);
                }
                current = next;
            }
        }
    }
    match resolver.redirect(wiki, &current) {
        None => Ok(current),
        Some(next) if seen.contains(&next) => Err(RedirectProblem::Cycle),
        Some(_) => Err(RedirectProblem::DepthExceeded),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::goldgen::PageRef;

    fn link(title: &str) -> InterwikiLink {
        InterwikiLink {
            source: PageRef { wiki: "a".into(), title: "Src".into() },
            target: PageRef { wiki: "memoryalpha".into(), title: title.into() },
            section_header: "External links".into(),
        }
    }

    #[test]
    fn single_redirect() {
        let mut r = MapRedirectResolver::new();
        r.insert("memoryalpha", "Catarina", "Kathryn Janeway");
        let (out, dropped) = resolve_redirects(vec![link("Catarina")], &r, DEFAULT_MAX_REDIRECT_DEPTH);
        assert_eq!(out[0].target.title, "Kathryn Janeway");
        assert!(dropped.is_empty());
    }

    #[test]
    fn no_entry_is_identity() {
        let r = MapRedirectResolver::new();
        let (out, _) = resolve_redirects(vec![link("Worf")], &r, DEFAULT_MAX_REDIRECT_DEPTH);
        assert_eq!(out[0].target.title, "Worf");
    }

    #[test]
    fn two_cycle_is_dropped() {
        let mut r = MapRedirectResolver::new();
        r.insert("memoryalpha", "A", "B");
        r.insert("memoryalpha", "B", "A");
        let (out, dropped) = resolve_redirects(vec![link("A")], &r, DEFAULT_MAX_REDIRECT_DEPTH);
        assert!(out.is_empty());
        assert_eq!(dropped[0].problem, RedirectProblem::Cycle);
    }

    #[test]
    fn depth_limit() {
        let mut r = MapRedirectResolver::new();
        for i in 0..5 {
            r.insert("memoryalpha", &format!("P{i}"), &format!("P{}", i + 1));
        }
        let (out, _) = resolve_redirects(vec![link("P0")], &r, 5);
        assert_eq!(out[0].target.title, "P5");
        let (out, dropped) = resolve_redirects(vec![link("P0")], &r, 4);
        assert!(out.is_empty());
        assert_eq!(dropped[0].problem, RedirectProblem::DepthExceeded);
    }

    #[test]
    fn self_redirect_is_a_cycle() {
        let mut r = MapRedirectResolver::new();
        r.insert("memoryalpha", "A", "A");
        let (_, dropped) = resolve_redirects(vec![link("A")], &r, 3);
        assert_eq!(dropped[0].problem, RedirectProblem::Cycle);
    }
}
