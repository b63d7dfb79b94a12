//! String-equivalence baseline matchers over an inverted label index.
//!
//! `baselineLabel` joins entities whose normalized primary labels coincide;
//! `baselineAltLabel` additionally indexes alternative labels (redirect titles).
//! Candidates are blocked by `(kind, normalized label)`, so entities of
//! different kinds never meet and the work is proportional to the bucket
//! cross-products rather than |source| x |target|.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gold::GoldStandard;
use crate::graph::{Alignment, Correspondence, EntityId, EntityKind, GraphError, Iri, KnowledgeGraph, Task};

/// Lowercased, underscore-free, whitespace-collapsed label.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NormalizedLabel(String);

impl NormalizedLabel {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for NormalizedLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Unicode lowercase, `_` to space, whitespace runs collapsed, trimmed.
pub fn normalize_label(raw: &str) -> NormalizedLabel {
    let lowered = raw.to_lowercase();
    let mut out = String::with_capacity(lowered.len());
    for word in lowered.split(|c: char| c == '_' || c.is_whitespace()).filter(|w| !w.is_empty()) {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    NormalizedLabel(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchOptions {
    /// Index alt-labels too (`baselineAltLabel`).
    pub use_alt_labels: bool,
    /// Only buckets holding exactly one source and one target entity contribute.
    pub unique_only: bool,
}

impl MatchOptions {
    pub fn label() -> Self {
        MatchOptions { use_alt_labels: false, unique_only: false }
    }

    pub fn alt_label() -> Self {
        MatchOptions { use_alt_labels: true, unique_only: false }
    }

    pub fn matcher_name(&self) -> &'static str {
        if self.use_alt_labels {
            "baselineAltLabel"
        } else {
            "baselineLabel"
        }
    }
}

type BucketKey = (EntityKind, NormalizedLabel);

/// Inverted index from `(kind, normalized label)` to the entities carrying it.
#[derive(Debug, Default)]
pub struct LabelIndex {
    buckets: HashMap<BucketKey, Vec<EntityId>>,
}

impl LabelIndex {
    pub fn build(graph: &KnowledgeGraph, use_alt_labels: bool) -> Self {
        let ids: Vec<EntityId> = graph.entity_ids().collect();
        let buckets = ids
            .par_chunks(16 * 1024)
            .map(|chunk| {
                let mut local: HashMap<BucketKey, Vec<EntityId>> = HashMap::new();
                for &id in chunk {
                    let kind = graph.kind(id);
                    let alts: &[String] = if use_alt_labels { graph.alt_labels(id) } else { &[] };
                    for raw in graph.labels(id).iter().chain(alts) {
                        let label = normalize_label(raw);
                        if label.is_empty() {
                            continue;
                        }
                        let bucket = local.entry((kind, label)).or_default();
                        if bucket.last() != Some(&id) && !bucket.contains(&id) {
                            bucket.push(id);
                        }
                    }
                }
                local
            })
            .reduce(HashMap::new, |a, b| if a.len() >= b.len() { merge_into(a, b) } else { merge_into(b, a) });
        let mut index = LabelIndex { buckets };
        index.buckets.par_iter_mut().for_each(|(_, ids)| {
            ids.sort_unstable();
            ids.dedup();
        });
        index
    }

    pub fn get(&self, kind: EntityKind, label: &NormalizedLabel) -> &[EntityId] {
        self.buckets.get(&(kind, label.clone())).map_or(&[], Vec::as_slice)
    }

    pub fn bucket_count(&self) -> usize {
        self.buckets.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (EntityKind, &NormalizedLabel, &[EntityId])> {
        self.buckets.iter().map(|((k, l), ids)| (*k, l, ids.as_slice()))
    }
}

fn merge_into(mut into: HashMap<BucketKey, Vec<EntityId>>, from: HashMap<BucketKey, Vec<EntityId>>) -> HashMap<BucketKey, Vec<EntityId>> {
    for (key, ids) in from {
        into.entry(key).or_default().extend(ids);
    }
    into
}

/// Runs a baseline matcher. Output is sorted by source IRI, then target IRI,
/// and every cell has confidence 1.0.
pub fn match_by_label(source: &KnowledgeGraph, target: &KnowledgeGraph, options: MatchOptions) -> Result<Alignment, GraphError> {
    let task = Task::new(source.id(), target.id())?;
    let (src_index, tgt_index) =
        rayon::join(|| LabelIndex::build(source, options.use_alt_labels), || LabelIndex::build(target, options.use_alt_labels));

    // iterate the smaller index, probe the larger
    let swap = src_index.bucket_count() > tgt_index.bucket_count();
    let (small, large) = if swap { (&tgt_index, &src_index) } else { (&src_index, &tgt_index) };
    let buckets: Vec<(&BucketKey, &Vec<EntityId>)> = small.buckets.iter().collect();
    let mut pairs: Vec<(EntityId, EntityId)> = buckets
        .par_iter()
        .flat_map_iter(|(key, small_ids)| {
            let large_ids = large.buckets.get(*key).map_or(&[][..], Vec::as_slice);
            let (src_ids, tgt_ids): (&[EntityId], &[EntityId]) =
                if swap { (large_ids, small_ids.as_slice()) } else { (small_ids.as_slice(), large_ids) };
            let contributes = !src_ids.is_empty() && (!options.unique_only || (src_ids.len() == 1 && tgt_ids.len() == 1));
            let src_ids = if contributes { src_ids } else { &[] };
            src_ids.iter().flat_map(move |s| tgt_ids.iter().map(move |t| (*s, *t)))
        })
        .collect();

    pairs.par_sort_unstable_by(|a, b| {
        source.iri(a.0).cmp(source.iri(b.0)).then_with(|| target.iri(a.1).cmp(target.iri(b.1)))
    });
    pairs.dedup();

    let cells: Vec<Correspondence> =
        pairs.into_iter().map(|(s, t)| Correspondence::exact(source.iri(s).clone(), target.iri(t).clone())).collect();
    let (alignment, _) = Alignment::from_cells(task, cells);
    Ok(alignment)
}

#[derive(Debug, Error)]
pub enum MatchError {
    #[error("entity {iri} not found in graph '{graph}'")]
    MissingEntity { iri: Iri, graph: String },
}

/// True iff a raw primary label of the source equals a raw primary label of
/// the target (case-sensitive, no normalization, alt-labels ignored).
pub fn is_trivial(c: &Correspondence, source: &KnowledgeGraph, target: &KnowledgeGraph) -> Result<bool, MatchError> {
    let lookup = |g: &KnowledgeGraph, iri: &Iri| {
        g.entity(iri.as_str()).ok_or_else(|| MatchError::MissingEntity { iri: iri.clone(), graph: g.id().to_owned() })
    };
    let s = lookup(source, &c.source)?;
    let t = lookup(target, &c.target)?;
    let tgt_labels = target.labels(t);
    Ok(source.labels(s).iter().any(|l| tgt_labels.contains(l)))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindTally {
    pub total: usize,
    pub non_trivial: usize,
}

/// Per-kind size of a gold standard, split into trivial and non-trivial pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldStatistics {
    pub per_kind: BTreeMap<EntityKind, KindTally>,
    /// Pairs whose endpoints have different kinds.
    pub mixed: KindTally,
    /// Pairs with an endpoint missing from its graph.
    pub unresolvable: usize,
}

impl GoldStatistics {
    pub fn tally(&self, kind: EntityKind) -> KindTally {
        self.per_kind.get(&kind).copied().unwrap_or_default()
    }

    pub fn add(&mut self, other: &GoldStatistics) {
        for (k, t) in &other.per_kind {
            let e = self.per_kind.entry(*k).or_default();
            e.total += t.total;
            e.non_trivial += t.non_trivial;
        }
        self.mixed.total += other.mixed.total;
        self.mixed.non_trivial += other.mixed.non_trivial;
        self.unresolvable += other.unresolvable;
    }
}

pub fn gold_statistics(gold: &GoldStandard, source: &KnowledgeGraph, target: &KnowledgeGraph) -> GoldStatistics {
    let mut stats = GoldStatistics::default();
    for kind in EntityKind::ALL {
        stats.per_kind.insert(kind, KindTally::default());
    }
    for pair in &gold.positives {
        let (Some(s), Some(t)) = (source.entity(pair.source.as_str()), target.entity(pair.target.as_str())) else {
            stats.unresolvable += 1;
            continue;
        };
        let tally = if source.kind(s) == target.kind(t) {
            stats.per_kind.get_mut(&source.kind(s)).expect("all kinds present")
        } else {
            &mut stats.mixed
        };
        tally.total += 1;
        let tgt_labels = target.labels(t);
        if !source.labels(s).iter().any(|l| tgt_labels.contains(l)) {
            tally.non_trivial += 1;
        }
    }
    stats
}
