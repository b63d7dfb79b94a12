use std::collections::HashMap;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use super::{EvalError, TaskKinds};
use crate::gold::{EntityPair, GoldStandard, Negative};
use crate::graph::{Alignment, EntityKind, Iri};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Outcome {
    Tp,
    Fp,
    Fn,
    Ignored,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Tp => "TP",
            Outcome::Fp => "FP",
            Outcome::Fn => "FN",
            Outcome::Ignored => "IGNORED",
        }
    }
}

/// Which endpoint of a produced cell may conflict with a 1:1 gold standard.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FpSide {
    #[default]
    Both,
    Source,
}

impl FpSide {
    pub fn as_str(self) -> &'static str {
        match self {
            FpSide::Both => "both",
            FpSide::Source => "source",
        }
    }
}

impl std::str::FromStr for FpSide {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "both" => Ok(FpSide::Both),
            "source" => Ok(FpSide::Source),
            other => Err(format!("unknown fp side '{other}', expected both or source")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub ignored: usize,
}

impl Counts {
    pub fn record(&mut self, outcome: Outcome) {
        match outcome {
            Outcome::Tp => self.tp += 1,
            Outcome::Fp => self.fp += 1,
            Outcome::Fn => self.fn_ += 1,
            Outcome::Ignored => self.ignored += 1,
        }
    }

    /// Number of produced cells these counts cover.
    pub fn produced(&self) -> usize {
        self.tp + self.fp + self.ignored
    }
}

impl Add for Counts {
    type Output = Counts;
    fn add(self, o: Counts) -> Counts {
        Counts { tp: self.tp + o.tp, fp: self.fp + o.fp, fn_: self.fn_ + o.fn_, ignored: self.ignored + o.ignored }
    }
}

impl AddAssign for Counts {
    fn add_assign(&mut self, o: Counts) {
        *self = *self + o;
    }
}

/// Counts per entity kind. Cells whose endpoints differ in kind, or whose
/// kinds are unknown, land in `mixed` and only reach the overall figures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub class: Counts,
    pub property: Counts,
    pub instance: Counts,
    pub mixed: Counts,
}

impl ConfusionCounts {
    pub fn kind(&self, kind: EntityKind) -> &Counts {
        match kind {
            EntityKind::Class => &self.class,
            EntityKind::Property => &self.property,
            EntityKind::Instance => &self.instance,
        }
    }

    fn bucket(&mut self, kind: Option<EntityKind>) -> &mut Counts {
        match kind {
            Some(EntityKind::Class) => &mut self.class,
            Some(EntityKind::Property) => &mut self.property,
            Some(EntityKind::Instance) => &mut self.instance,
            None => &mut self.mixed,
        }
    }

    /// Pooled over kinds and mixed cells.
    pub fn overall(&self) -> Counts {
        self.class + self.property + self.instance + self.mixed
    }

    /// `Some(kind)` selects one kind, `None` the overall counts.
    pub fn select(&self, kind: Option<EntityKind>) -> Counts {
        match kind {
            Some(k) => *self.kind(k),
            None => self.overall(),
        }
    }
}

/// Per-cell outcomes (parallel to the alignment's cells), the gold positives
/// that were not produced, and the resulting counts.
#[derive(Debug, Clone, Default)]
pub struct Evaluation {
    pub outcomes: Vec<Outcome>,
    pub false_negatives: Vec<EntityPair>,
    pub counts: ConfusionCounts,
}

struct GoldIndex<'g> {
    by_source: HashMap<&'g Iri, Vec<&'g Iri>>,
    by_target: HashMap<&'g Iri, Vec<&'g Iri>>,
}

impl<'g> GoldIndex<'g> {
    fn new(gold: &'g GoldStandard) -> Self {
        let mut by_source: HashMap<&Iri, Vec<&Iri>> = HashMap::new();
        let mut by_target: HashMap<&Iri, Vec<&Iri>> = HashMap::new();
        for p in &gold.positives {
            by_source.entry(&p.source).or_default().push(&p.target);
            by_target.entry(&p.target).or_default().push(&p.source);
        }
        GoldIndex { by_source, by_target }
    }

    fn is_positive(&self, x: &Iri, y: &Iri) -> bool {
        self.by_source.get(x).is_some_and(|ts| ts.contains(&y))
    }
}

fn score(
    alignment: &Alignment,
    gold: &GoldStandard,
    kinds: TaskKinds<'_>,
    classify: impl Fn(&GoldIndex<'_>, &Iri, &Iri) -> Outcome,
) -> Evaluation {
    let index = GoldIndex::new(gold);
    let mut eval = Evaluation::default();
    let mut produced: std::collections::HashSet<(&Iri, &Iri)> = std::collections::HashSet::new();
    for c in alignment.cells() {
        let outcome = classify(&index, &c.source, &c.target);
        eval.outcomes.push(outcome);
        eval.counts.bucket(kinds.cell_kind(c.source.as_str(), c.target.as_str())).record(outcome);
        produced.insert((&c.source, &c.target));
    }
    for p in &gold.positives {
        if !produced.contains(&(&p.source, &p.target)) {
            eval.counts.bucket(kinds.cell_kind(p.source.as_str(), p.target.as_str())).record(Outcome::Fn);
            eval.false_negatives.push(p.clone());
        }
    }
    eval
}

/// Scores against a 1:1 partial gold standard. A produced cell is TP when it
/// is a gold positive, FP when its source (and, with [`FpSide::Both`], its
/// target) is matched to a different partner in the gold standard, and
/// IGNORED otherwise.
pub fn evaluate_partial_1to1(
    alignment: &Alignment,
    gold: &GoldStandard,
    side: FpSide,
    kinds: TaskKinds<'_>,
) -> Result<Evaluation, EvalError> {
    gold.check_one_to_one()?;
    Ok(score(alignment, gold, kinds, |index, x, y| {
        if index.is_positive(x, y) {
            Outcome::Tp
        } else if index.by_source.contains_key(x) || (side == FpSide::Both && index.by_target.contains_key(y)) {
            Outcome::Fp
        } else {
            Outcome::Ignored
        }
    }))
}

/// Scores against a gold standard with explicit negatives. A produced cell is
/// FP when either endpoint is declared to have no counterpart in the other
/// graph, or its source is a gold positive with a different target.
pub fn evaluate_with_negatives(
    alignment: &Alignment,
    gold: &GoldStandard,
    kinds: TaskKinds<'_>,
) -> Result<Evaluation, EvalError> {
    let task = &alignment.task;
    gold.check_consistency(task)?;
    let negative = |entity: &Iri, graph: &str| {
        gold.negatives.contains(&Negative { entity: entity.clone(), counterpart_graph: graph.to_owned() })
    };
    Ok(score(alignment, gold, kinds, |index, x, y| {
        if index.is_positive(x, y) {
            Outcome::Tp
        } else if negative(x, &task.target) || negative(y, &task.source) || index.by_source.contains_key(x) {
            Outcome::Fp
        } else {
            Outcome::Ignored
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Correspondence, Task};

    fn iri(s: &str) -> Iri {
        Iri::new(format!("http://x/{s}")).unwrap()
    }

    fn task() -> Task {
        Task::new("s", "t").unwrap()
    }

    fn alignment(pairs: &[(&str, &str)]) -> Alignment {
        Alignment::from_cells(task(), pairs.iter().map(|(a, b)| Correspondence::exact(iri(a), iri(b)))).0
    }

    fn gold(pairs: &[(&str, &str)]) -> GoldStandard {
        GoldStandard::one_to_one(pairs.iter().map(|(a, b)| EntityPair::new(iri(a), iri(b)))).unwrap()
    }

    #[test]
    fn different_partner_is_fp() {
        let e = evaluate_partial_1to1(&alignment(&[("a", "b2")]), &gold(&[("a", "b")]), FpSide::Both, TaskKinds::none()).unwrap();
        let c = e.counts.overall();
        assert_eq!((c.tp, c.fp, c.fn_), (0, 1, 1));
    }

    #[test]
    fn unknown_pair_is_ignored() {
        let e = evaluate_partial_1to1(&alignment(&[("c", "d")]), &gold(&[("a", "b")]), FpSide::Both, TaskKinds::none()).unwrap();
        assert_eq!(e.outcomes, vec![Outcome::Ignored]);
        let c = e.counts.overall();
        assert_eq!((c.tp, c.fp, c.fn_, c.ignored), (0, 0, 1, 1));
    }

    #[test]
    fn target_side_rule_depends_on_flag() {
        let a = alignment(&[("z", "b")]);
        let g = gold(&[("a", "b")]);
        assert_eq!(evaluate_partial_1to1(&a, &g, FpSide::Both, TaskKinds::none()).unwrap().outcomes, vec![Outcome::Fp]);
        assert_eq!(evaluate_partial_1to1(&a, &g, FpSide::Source, TaskKinds::none()).unwrap().outcomes, vec![Outcome::Ignored]);
    }

    #[test]
    fn non_one_to_one_gold_rejected() {
        let mut g = gold(&[("a", "b")]);
        g.positives.insert(EntityPair::new(iri("a"), iri("c")));
        assert!(evaluate_partial_1to1(&alignment(&[]), &g, FpSide::Both, TaskKinds::none()).is_err());
    }

    #[test]
    fn negatives_rule_table() {
        let mut g = gold(&[("a", "b")]);
        g.one_to_one = false;
        g.negatives.insert(Negative { entity: iri("c"), counterpart_graph: "t".into() });
        let e = evaluate_with_negatives(&alignment(&[("a", "b"), ("c", "z"), ("q", "r")]), &g, TaskKinds::none()).unwrap();
        assert_eq!(e.outcomes, vec![Outcome::Tp, Outcome::Fp, Outcome::Ignored]);
        let c = e.counts.overall();
        assert_eq!((c.tp, c.fp, c.fn_, c.ignored), (1, 1, 0, 1));
    }

    #[test]
    fn empty_alignment_with_negatives() {
        let g = gold(&[("a", "b"), ("c", "d")]);
        let e = evaluate_with_negatives(&alignment(&[]), &g, TaskKinds::none()).unwrap();
        assert_eq!(e.counts.overall(), Counts { tp: 0, fp: 0, fn_: 2, ignored: 0 });
    }

    #[test]
    fn inconsistent_gold_rejected() {
        let mut g = gold(&[("a", "b")]);
        g.negatives.insert(Negative { entity: iri("a"), counterpart_graph: "t".into() });
        assert!(evaluate_with_negatives(&alignment(&[]), &g, TaskKinds::none()).is_err());
    }

    #[test]
    fn kinds_bucket_cells() {
        let mut src = HashMap::new();
        let mut tgt = HashMap::new();
        src.insert(iri("a").as_str().to_owned(), EntityKind::Class);
        tgt.insert(iri("b").as_str().to_owned(), EntityKind::Class);
        src.insert(iri("c").as_str().to_owned(), EntityKind::Class);
        tgt.insert(iri("d").as_str().to_owned(), EntityKind::Instance);
        let kinds = TaskKinds::new(&src, &tgt);
        let e = evaluate_partial_1to1(&alignment(&[("a", "b"), ("c", "d")]), &gold(&[("a", "b"), ("c", "d")]), FpSide::Both, kinds)
            .unwrap();
        assert_eq!(e.counts.class.tp, 1);
        assert_eq!(e.counts.instance.tp, 0);
        assert_eq!(e.counts.mixed.tp, 1);
        assert_eq!(e.counts.overall().tp, 2);
    }
}
