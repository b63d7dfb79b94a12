use std::collections::{BTreeMap, BTreeSet};

use super::{GoldgenError, InterwikiLink, IriScheme, PageRef};
use crate::gold::{EntityPair, GoldStandard};
use crate::graph::Task;

/// Turns redirect-resolved links into strict 1:1 gold standards, one per
/// (source wiki, target wiki) pair.
///
/// Step 1 removes every link of a source page that points to more than one
/// distinct page of the same target wiki. Step 2 removes every surviving link
/// whose target page is pointed to by more than one source page of the same
/// source wiki. Conflicting links are removed together; none is kept.
pub fn enforce_functional_injective(
    links: &[InterwikiLink],
    iris: &IriScheme,
) -> Result<BTreeMap<Task, GoldStandard>, GoldgenError> {
    let distinct: BTreeSet<(&PageRef, &PageRef)> = links.iter().map(|l| (&l.source, &l.target)).collect();

    let mut out_degree: BTreeMap<(&PageRef, &str), usize> = BTreeMap::new();
    for (s, t) in &distinct {
        *out_degree.entry((*s, t.wiki.as_str())).or_default() += 1;
    }
    let functional: Vec<(&PageRef, &PageRef)> =
        distinct.into_iter().filter(|(s, t)| out_degree[&(*s, t.wiki.as_str())] == 1).collect();

    let mut in_degree: BTreeMap<(&PageRef, &str), usize> = BTreeMap::new();
    for (s, t) in &functional {
        *in_degree.entry((*t, s.wiki.as_str())).or_default() += 1;
    }

    let mut golds: BTreeMap<Task, BTreeSet<EntityPair>> = BTreeMap::new();
    for (s, t) in functional {
        if in_degree[&(t, s.wiki.as_str())] != 1 {
            continue;
        }
        let task = Task::new(s.wiki.clone(), t.wiki.clone())?;
        golds.entry(task).or_default().insert(EntityPair::new(iris.page_iri(s)?, iris.page_iri(t)?));
    }

    golds
        .into_iter()
        .map(|(task, positives)| Ok((task, GoldStandard::one_to_one(positives)?)))
        .collect()
}
