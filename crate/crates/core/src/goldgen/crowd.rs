//! Crowd-vote aggregation and triangle closure.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::GoldgenError;
use crate::gold::{EntityPair, GoldStandard, Negative};
use crate::graph::{Iri, Task};

pub const RESPONSES_PER_TASK: usize = 5;
pub const MAJORITY: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum CrowdResponse {
    Match(Iri),
    NoMatch,
}

impl TryFrom<String> for CrowdResponse {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        match s.trim() {
            "" | "no-match" | "none" | "-" => Ok(CrowdResponse::NoMatch),
            iri => Iri::new(iri).map(CrowdResponse::Match).map_err(|e| e.to_string()),
        }
    }
}

impl From<CrowdResponse> for String {
    fn from(r: CrowdResponse) -> String {
        match r {
            CrowdResponse::Match(iri) => iri.into(),
            CrowdResponse::NoMatch => "no-match".into(),
        }
    }
}

/// One source entity shown to five workers who searched one target wiki.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrowdTask {
    pub id: String,
    pub source_wiki: String,
    pub source: Iri,
    pub target_wiki: String,
    pub responses: Vec<CrowdResponse>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Verdict {
    Match(Iri),
    NoMatch,
}

fn majority(task: &CrowdTask) -> Result<Option<Verdict>, GoldgenError> {
    if task.responses.len() != RESPONSES_PER_TASK {
        return Err(GoldgenError::ResponseCount { task: task.id.clone(), count: task.responses.len() });
    }
    let mut counts: HashMap<&CrowdResponse, usize> = HashMap::new();
    for r in &task.responses {
        *counts.entry(r).or_default() += 1;
    }
    Ok(counts.into_iter().find(|(_, c)| *c >= MAJORITY).map(|(r, _)| match r {
        CrowdResponse::Match(iri) => Verdict::Match(iri.clone()),
        CrowdResponse::NoMatch => Verdict::NoMatch,
    }))
}

/// Majority vote (at least 3 of 5) per task. A majority for a target entity
/// yields a positive, a majority for "no match" an explicit negative, and no
/// majority yields nothing. Gold standards are keyed by (source wiki, target
/// wiki) and are not 1:1.
///
/// Should two tasks about the same source entity and target wiki reach
/// contradicting verdicts, both are discarded.
pub fn aggregate_crowd(tasks: &[CrowdTask]) -> Result<BTreeMap<Task, GoldStandard>, GoldgenError> {
    let mut verdicts: BTreeMap<(Task, Iri), BTreeSet<Option<Iri>>> = BTreeMap::new();
    for task in tasks {
        let Some(verdict) = majority(task)? else { continue };
        let key = (Task::new(task.source_wiki.clone(), task.target_wiki.clone())?, task.source.clone());
        verdicts.entry(key).or_default().insert(match verdict {
            Verdict::Match(iri) => Some(iri),
            Verdict::NoMatch => None,
        });
    }

    let mut golds: BTreeMap<Task, GoldStandard> = BTreeMap::new();
    for ((task, source), outcomes) in verdicts {
        if outcomes.len() != 1 {
            log::warn!("contradicting crowd verdicts for {} towards {}; discarded", source, task.target);
            continue;
        }
        let gold = golds.entry(task.clone()).or_default();
        match outcomes.into_iter().next().expect("one outcome") {
            Some(target) => {
                gold.positives.insert(EntityPair::new(source, target));
            }
            None => {
                gold.negatives.insert(Negative { entity: source, counterpart_graph: task.target.clone() });
            }
        }
    }
    Ok(golds)
}

/// For every source entity matched into two different target wikis, the pair
/// of matched entities is a correspondence between those two wikis.
///
/// Returns the new pairs keyed by target-wiki task; the task orientation
/// follows an existing gold standard for the two wikis when one exists,
/// otherwise the lexicographically smaller wiki is the source.
pub fn close_triangles(golds: &BTreeMap<Task, GoldStandard>) -> BTreeMap<Task, BTreeSet<EntityPair>> {
    // source entity -> [(target wiki, matched entity)]
    type Matches<'a> = BTreeMap<&'a Iri, Vec<(&'a str, &'a Iri)>>;
    let mut matched: BTreeMap<&str, Matches> = BTreeMap::new();
    for (task, gold) in golds {
        for p in &gold.positives {
            matched.entry(task.source.as_str()).or_default().entry(&p.source).or_default().push((task.target.as_str(), &p.target));
        }
    }

    let mut added: BTreeMap<Task, BTreeSet<EntityPair>> = BTreeMap::new();
    for per_entity in matched.values() {
        for targets in per_entity.values() {
            for (i, (w1, e1)) in targets.iter().enumerate() {
                for (w2, e2) in &targets[i + 1..] {
                    if w1 == w2 {
                        continue;
                    }
                    let forward = Task { source: (*w1).to_owned(), target: (*w2).to_owned() };
                    let backward = forward.reversed();
                    let (task, pair) = if golds.contains_key(&forward) || (!golds.contains_key(&backward) && w1 < w2) {
                        (forward, EntityPair::new((*e1).clone(), (*e2).clone()))
                    } else {
                        (backward, EntityPair::new((*e2).clone(), (*e1).clone()))
                    };
                    added.entry(task).or_default().insert(pair);
                }
            }
        }
    }
    added
}

/// Merges triangle-closure pairs into `golds`, marking them derived. Pairs
/// that contradict an explicit negative are skipped. Returns the number added.
pub fn apply_triangle_closure(golds: &mut BTreeMap<Task, GoldStandard>) -> usize {
    let closure = close_triangles(golds);
    let mut added = 0;
    for (task, pairs) in closure {
        let gold = golds.entry(task.clone()).or_default();
        for pair in pairs {
            let contradicted = gold.negatives.contains(&Negative { entity: pair.source.clone(), counterpart_graph: task.target.clone() })
                || gold.negatives.contains(&Negative { entity: pair.target.clone(), counterpart_graph: task.source.clone() });
            if contradicted {
                log::warn!("triangle pair {} / {} contradicts a negative; skipped", pair.source, pair.target);
                continue;
            }
            if gold.positives.insert(pair.clone()) {
                gold.derived.insert(pair);
                added += 1;
            }
        }
    }
    added
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iri(s: &str) -> Iri {
        Iri::new(format!("http://{s}")).unwrap()
    }

    fn task(id: &str, responses: &[&str]) -> CrowdTask {
        CrowdTask {
            id: id.into(),
            source_wiki: "w".into(),
            source: iri("w/s"),
            target_wiki: "w1".into(),
            responses: responses
                .iter()
                .map(|r| if *r == "no" { CrowdResponse::NoMatch } else { CrowdResponse::Match(iri(r)) })
                .collect(),
        }
    }

    fn w_w1() -> Task {
        Task::new("w", "w1").unwrap()
    }

    #[test]
    fn three_of_five_is_positive() {
        let golds = aggregate_crowd(&[task("t", &["w1/x", "w1/x", "w1/x", "no", "no"])]).unwrap();
        let g = &golds[&w_w1()];
        assert!(g.contains(&iri("w/s"), &iri("w1/x")));
        assert!(g.negatives.is_empty());
        assert!(!g.one_to_one);
    }

    #[test]
    fn no_match_majority_is_negative() {
        let golds = aggregate_crowd(&[task("t", &["no", "no", "no", "w1/x", "w1/y"])]).unwrap();
        let g = &golds[&w_w1()];
        assert!(g.positives.is_empty());
        assert_eq!(g.negatives.len(), 1);
    }

    #[test]
    fn split_vote_yields_nothing() {
        let golds = aggregate_crowd(&[task("t", &["w1/x", "w1/x", "w1/y", "w1/y", "no"])]).unwrap();
        assert!(golds.is_empty());
    }

    #[test]
    fn wrong_response_count_rejected() {
        let err = aggregate_crowd(&[task("t7", &["no", "no", "no", "no"])]).unwrap_err();
        assert!(err.to_string().contains("t7"));
    }

    #[test]
    fn contradicting_tasks_discarded() {
        let golds =
            aggregate_crowd(&[task("a", &["w1/x", "w1/x", "w1/x", "no", "no"]), task("b", &["no", "no", "no", "no", "w1/x"])]).unwrap();
        assert!(golds.values().all(|g| g.positives.is_empty() && g.negatives.is_empty()));
    }

    fn gold_with(task: Task, pairs: &[(&str, &str)]) -> (Task, GoldStandard) {
        let mut g = GoldStandard::default();
        for (s, t) in pairs {
            g.positives.insert(EntityPair::new(iri(s), iri(t)));
        }
        (task, g)
    }

    #[test]
    fn triangle_between_targets() {
        let golds: BTreeMap<_, _> = [
            gold_with(Task::new("w", "w1").unwrap(), &[("w/s", "w1/e1")]),
            gold_with(Task::new("w", "w2").unwrap(), &[("w/s", "w2/e2")]),
        ]
        .into();
        let closure = close_triangles(&golds);
        assert_eq!(closure.len(), 1);
        let pairs = &closure[&Task::new("w1", "w2").unwrap()];
        assert_eq!(pairs.iter().next().unwrap(), &EntityPair::new(iri("w1/e1"), iri("w2/e2")));
        // never touches the source wiki
        assert!(closure.keys().all(|t| t.source != "w" && t.target != "w"));
    }

    #[test]
    fn single_target_adds_nothing() {
        let golds: BTreeMap<_, _> = [gold_with(Task::new("w", "w1").unwrap(), &[("w/s", "w1/e1")])].into();
        assert!(close_triangles(&golds).is_empty());
    }

    #[test]
    fn two_sources_same_pair_added_once() {
        let golds: BTreeMap<_, _> = [
            gold_with(Task::new("w", "w1").unwrap(), &[("w/s", "w1/e1")]),
            gold_with(Task::new("w", "w2").unwrap(), &[("w/s", "w2/e2")]),
            gold_with(Task::new("v", "w1").unwrap(), &[("v/s", "w1/e1")]),
            gold_with(Task::new("v", "w2").unwrap(), &[("v/s", "w2/e2")]),
        ]
        .into();
        let mut golds = golds;
        assert_eq!(apply_triangle_closure(&mut golds), 1);
        let g = &golds[&Task::new("w1", "w2").unwrap()];
        assert_eq!(g.positives.len(), 1);
        assert_eq!(g.derived.len(), 1);
    }

    #[test]
    fn orientation_follows_existing_gold() {
        let golds: BTreeMap<_, _> = [
            gold_with(Task::new("w", "w1").unwrap(), &[("w/s", "w1/e1")]),
            gold_with(Task::new("w", "w2").unwrap(), &[("w/s", "w2/e2")]),
            gold_with(Task::new("w2", "w1").unwrap(), &[]),
        ]
        .into();
        let closure = close_triangles(&golds);
        let pairs = &closure[&Task::new("w2", "w1").unwrap()];
        assert_eq!(pairs.iter().next().unwrap(), &EntityPair::new(iri("w2/e2"), iri("w1/e1")));
    }

    #[test]
    fn negative_blocks_derived_pair() {
        let (t3, mut g3) = gold_with(Task::new("w1", "w2").unwrap(), &[]);
        g3.negatives.insert(Negative { entity: iri("w1/e1"), counterpart_graph: "w2".into() });
        let mut golds: BTreeMap<_, _> = [
            gold_with(Task::new("w", "w1").unwrap(), &[("w/s", "w1/e1")]),
            gold_with(Task::new("w", "w2").unwrap(), &[("w/s", "w2/e2")]),
            (t3.clone(), g3),
        ]
        .into();
        assert_eq!(apply_triangle_closure(&mut golds), 0);
        assert!(golds[&t3].positives.is_empty());
    }
}
