//! Minimal wikitext scanner: `== Heading ==` lines and `[[...]]` link tokens.

use std::collections::BTreeSet;

use rayon::prelude::*;

use super::{canonical_title, InterwikiLink, PageRef, Section, WikiPage};

/// A `[[...]]` token addressing a page in another wiki.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkToken {
    pub wiki: String,
    pub title: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Interwiki(LinkToken),
    /// Local or non-target link; not a candidate, not an error.
    Other,
    Malformed,
}

/// Returns the heading text if `line` is a `=`-delimited heading.
pub fn heading(line: &str) -> Option<&str> {
    let line = line.trim();
    let open = line.chars().take_while(|c| *c == '=').count();
    let close = line.chars().rev().take_while(|c| *c == '=').count();
    if open == 0 || open > 6 || close == 0 || line.len() <= open + close {
        return None;
    }
    let level = open.min(close);
    let inner = line[level..line.len() - level].trim();
    if inner.is_empty() {
        None
    } else {
        Some(inner)
    }
}

/// Splits raw page text into sections. Text before the first heading is a
/// section with an empty header.
pub fn split_sections(text: &str) -> Vec<Section> {
    let mut sections = vec![Section { header: String::new(), body: String::new() }];
    for line in text.lines() {
        if let Some(h) = heading(line) {
            sections.push(Section { header: h.to_owned(), body: String::new() });
        } else {
            let body = &mut sections.last_mut().expect("non-empty").body;
            body.push_str(line);
            body.push('\n');
        }
    }
    if sections[0].body.trim().is_empty() && sections.len() > 1 {
        sections.remove(0);
    }
    sections
}

fn classify(inner: &str, target_wikis: &BTreeSet<String>) -> Token {
    let target = inner.split('|').next().unwrap_or("").trim();
    let parts: Vec<&str> = target.split(':').collect();
    // [[w:c:wiki:Title]] and [[wikia:c:wiki:Title]]
    let (wiki, title) = if parts.len() >= 4
        && (parts[0].eq_ignore_ascii_case("w") || parts[0].eq_ignore_ascii_case("wikia"))
        && parts[1].eq_ignore_ascii_case("c")
    {
        (parts[2], parts[3..].join(":"))
    } else if parts.len() >= 2 {
        (parts[0], parts[1..].join(":"))
    } else {
        return if target.is_empty() { Token::Malformed } else { Token::Other };
    };
    let wiki = wiki.trim().to_lowercase();
    if !target_wikis.contains(&wiki) {
        return Token::Other;
    }
    let title = title.split('#').next().unwrap_or("");
    let title = canonical_title(title);
    if title.is_empty() || title.contains(['[', ']', '{', '}', '<', '>']) {
        return Token::Malformed;
    }
    Token::Interwiki(LinkToken { wiki, title })
}

/// Scans `body` for link tokens. Returns interwiki tokens (with the header in
/// force where they occur) and the number of malformed tokens.
fn scan_body(header: &str, body: &str, target_wikis: &BTreeSet<String>) -> (Vec<(String, LinkToken)>, usize) {
    let mut out = Vec::new();
    let mut malformed = 0;
    let mut current = header.to_owned();
    for line in body.lines() {
        if let Some(h) = heading(line) {
            current = h.to_owned();
            continue;
        }
        let mut rest = line;
        while let Some(start) = rest.find("[[") {
            let after = &rest[start + 2..];
            let end = after.find("]]");
            let next_open = after.find("[[");
            match (end, next_open) {
                (Some(e), Some(n)) if n < e => {
                    malformed += 1;
                    rest = &after[n..];
                }
                (Some(e), _) => {
                    match classify(&after[..e], target_wikis) {
                        Token::Interwiki(tok) => out.push((current.clone(), tok)),
                        Token::Malformed => malformed += 1,
                        Token::Other => {}
                    }
                    rest = &after[e + 2..];
                }
                (None, _) => {
                    malformed += 1;
                    break;
                }
            }
        }
    }
    (out, malformed)
}

fn is_link_section(header: &str) -> bool {
    header.to_lowercase().contains("link")
}

/// Link candidates and per-page diagnostics from a page dump.
#[derive(Debug, Default, Clone)]
pub struct LinkExtraction {
    pub links: Vec<InterwikiLink>,
    /// (wiki, title, malformed token count) for pages with unparseable tokens.
    pub diagnostics: Vec<(String, String, usize)>,
}

/// Collects interwiki links that sit in sections whose header contains "link"
/// (case-insensitive). Links to the page's own wiki are ignored.
pub fn extract_link_candidates(pages: &[WikiPage], link_target_wikis: &BTreeSet<String>) -> LinkExtraction {
    let targets: BTreeSet<String> = link_target_wikis.iter().map(|w| w.to_lowercase()).collect();
    let per_page: Vec<(Vec<InterwikiLink>, usize)> = pages
        .par_iter()
        .map(|page| {
            let mut links = Vec::new();
            let mut malformed = 0;
            if page.redirect_to.is_some() {
                return (links, 0);
            }
            let source = PageRef { wiki: page.wiki.clone(), title: canonical_title(&page.title) };
            for section in page.all_sections() {
                let (tokens, bad) = scan_body(&section.header, &section.body, &targets);
                malformed += bad;
                for (header, tok) in tokens {
                    if !is_link_section(&header) || tok.wiki == page.wiki.to_lowercase() {
                        continue;
                    }
                    links.push(InterwikiLink {
                        source: source.clone(),
                        target: PageRef { wiki: tok.wiki, title: tok.title },
                        section_header: header,
                    });
                }
            }
            (links, malformed)
        })
        .collect();

    let mut extraction = LinkExtraction::default();
    for (page, (links, malformed)) in pages.iter().zip(per_page) {
        extraction.links.extend(links);
        if malformed > 0 {
            log::debug!("{}:{}: {} unparseable link token(s)", page.wiki, page.title, malformed);
            extraction.diagnostics.push((page.wiki.clone(), page.title.clone(), malformed));
        }
    }
    extraction
}

#[cfg(test)]
mod tests {
    use super::*;

    fn targets() -> BTreeSet<String> {
        ["memorybeta".to_owned()].into()
    }

    fn page(sections: &[(&str, &str)]) -> WikiPage {
        WikiPage {
            wiki: "memoryalpha".into(),
            title: "William_T._Riker".into(),
            redirect_to: None,
            sections: sections.iter().map(|(h, b)| Section { header: (*h).into(), body: (*b).into() }).collect(),
            text: None,
        }
    }

    #[test]
    fn headings() {
        assert_eq!(heading("== External links =="), Some("External links"));
        assert_eq!(heading("===Links==="), Some("Links"));
        assert_eq!(heading("= x"), None);
        assert_eq!(heading("===="), None);
        assert_eq!(heading("plain text"), None);
    }

    #[test]
    fn external_links_section_yields_candidate() {
        let p = page(&[("External links", "* [[memorybeta:William T. Riker|Riker]] at Memory Beta\n")]);
        let ex = extract_link_candidates(&[p], &targets());
        assert_eq!(ex.links.len(), 1);
        assert_eq!(ex.links[0].target.title, "William T. Riker");
        assert_eq!(ex.links[0].source.title, "William T. Riker");
    }

    #[test]
    fn other_sections_are_ignored() {
        let p = page(&[("Biography", "[[memorybeta:William T. Riker]]\n")]);
        assert!(extract_link_candidates(&[p], &targets()).links.is_empty());
    }

    #[test]
    fn any_header_containing_link_is_accepted() {
        for h in ["Links", "External Links", "Weblinks"] {
            let p = page(&[(h, "[[memorybeta:Riker]]\n")]);
            assert_eq!(extract_link_candidates(&[p], &targets()).links.len(), 1, "{h}");
        }
    }

    #[test]
    fn fandom_interwiki_form_and_nested_heading() {
        let body = "[[w:c:memorybeta:Deanna_Troi#Early life]]\n=== Trivia ===\n[[memorybeta:Worf]]\n";
        let p = page(&[("External links", body)]);
        let ex = extract_link_candidates(&[p], &targets());
        assert_eq!(ex.links.len(), 1);
        assert_eq!(ex.links[0].target.title, "Deanna Troi");
    }

    #[test]
    fn malformed_tokens_are_counted() {
        let p = page(&[("External links", "[[memorybeta:]] [[memorybeta:Riker\n[[memorybeta:Data [[memorybeta:Worf]]\n")]);
        let ex = extract_link_candidates(&[p], &targets());
        assert_eq!(ex.links.len(), 1);
        assert_eq!(ex.diagnostics, vec![("memoryalpha".into(), "William_T._Riker".into(), 3)]);
    }

    #[test]
    fn non_target_prefixes_are_not_links() {
        let p = page(&[("External links", "[[Category:Humans]] [[Worf]] [[wikipedia:Riker]]\n")]);
        let ex = extract_link_candidates(&[p], &targets());
        assert!(ex.links.is_empty());
        assert!(ex.diagnostics.is_empty());
    }

    #[test]
    fn split_sections_from_raw_text() {
        let s = split_sections("lead\n== Biography ==\nbio\n== External links ==\n[[x:y]]\n");
        assert_eq!(s.len(), 3);
        assert_eq!(s[2].header, "External links");
        assert_eq!(split_sections("== A ==\nx\n").len(), 1);
    }
}
