#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use kgbench_core::graph::{build_graph, ExtractionConfig, Literal, Triple, RDFS_LABEL, RDF_PROPERTY, RDF_TYPE, SKOS_ALT_LABEL, OWL_CLASS};
use kgbench_core::{EntityKind, Iri, KnowledgeGraph};
use rand::Rng;

pub const VOCAB: &[&str] = &["Star Wars", "star_wars", "STAR  wars", "Riker", "riker", "Data", "Worf", "e1", "E2", "Ödön", "ödön", "x"];

/// Ground truth of a generated graph, kept next to the graph itself.
pub struct Generated {
    pub graph: KnowledgeGraph,
    pub kinds: BTreeMap<String, EntityKind>,
    pub labels: BTreeMap<String, Vec<String>>,
    pub alt_labels: BTreeMap<String, Vec<String>>,
}

fn iri(s: String) -> Iri {
    Iri::new(s).unwrap()
}

pub fn random_graph<R: Rng>(rng: &mut R, id: &str, max_entities: usize) -> Generated {
    let n = rng.random_range(0..=max_entities);
    let mut triples = Vec::new();
    let mut kinds = BTreeMap::new();
    let mut labels = BTreeMap::new();
    let mut alt_labels = BTreeMap::new();
    let value = iri("http://example.org/value".into());
    for i in 0..n {
        let e = format!("http://{id}.example/e{i}");
        let kind = match rng.random_range(0..10) {
            0 => EntityKind::Class,
            1 => EntityKind::Property,
            _ => EntityKind::Instance,
        };
        match kind {
            EntityKind::Class => triples.push(Triple::new(iri(e.clone()), iri(RDF_TYPE.into()), iri(OWL_CLASS.into()))),
            EntityKind::Property => triples.push(Triple::new(iri(e.clone()), iri(RDF_TYPE.into()), iri(RDF_PROPERTY.into()))),
            EntityKind::Instance => triples.push(Triple::new(iri(e.clone()), value.clone(), Literal::plain("v"))),
        }
        let mut ls = Vec::new();
        for _ in 0..rng.random_range(0..3) {
            let l = VOCAB[rng.random_range(0..VOCAB.len())].to_owned();
            let lit = if rng.random_bool(0.3) { Literal::with_language(l.clone(), "en") } else { Literal::plain(l.clone()) };
            triples.push(Triple::new(iri(e.clone()), iri(RDFS_LABEL.into()), lit));
            ls.push(l);
        }
        let mut alts = Vec::new();
        for _ in 0..rng.random_range(0..3) {
            let l = VOCAB[rng.random_range(0..VOCAB.len())].to_owned();
            triples.push(Triple::new(iri(e.clone()), iri(SKOS_ALT_LABEL.into()), Literal::plain(l.clone())));
            alts.push(l);
        }
        if ls.is_empty() {
            ls.push(format!("e{i}"));
        }
        kinds.insert(e.clone(), kind);
        labels.insert(e.clone(), ls);
        alt_labels.insert(e, alts);
    }
    let graph = build_graph(id, triples, &ExtractionConfig::default());
    Generated { graph, kinds, labels, alt_labels }
}

/// Lowercase, underscores to spaces, whitespace runs collapsed, trimmed.
pub fn oracle_normalize(s: &str) -> String {
    s.to_lowercase().replace('_', " ").split_whitespace().collect::<Vec<_>>().join(" ")
}

impl Generated {
    pub fn label_set(&self, e: &str, alt: bool) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self.labels[e].iter().map(|l| oracle_normalize(l)).collect();
        if alt {
            out.extend(self.alt_labels[e].iter().map(|l| oracle_normalize(l)));
        }
        out.remove("");
        out
    }
}

/// Nested-loop comparison of every source/target pair.
pub fn brute_force(src: &Generated, tgt: &Generated, alt: bool, unique_only: bool) -> BTreeSet<(String, String)> {
    let mut out = BTreeSet::new();
    for (s, sk) in &src.kinds {
        let sl = src.label_set(s, alt);
        for (t, tk) in &tgt.kinds {
            if sk != tk {
                continue;
            }
            let tl = tgt.label_set(t, alt);
            let shared = sl.intersection(&tl).any(|l| {
                if !unique_only {
                    return true;
                }
                let ns = src.kinds.iter().filter(|(e, k)| *k == sk && src.label_set(e, alt).contains(l)).count();
                let nt = tgt.kinds.iter().filter(|(e, k)| *k == tk && tgt.label_set(e, alt).contains(l)).count();
                ns == 1 && nt == 1
            });
            if shared {
                out.insert((s.clone(), t.clone()));
            }
        }
    }
    out
}
