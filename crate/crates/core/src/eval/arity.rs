use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::graph::{Alignment, Iri};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArityClass {
    #[serde(rename = "1:1")]
    OneOne,
    #[serde(rename = "1:n")]
    OneN,
    #[serde(rename = "n:1")]
    NOne,
    #[serde(rename = "n:m")]
    NM,
}

impl ArityClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ArityClass::OneOne => "1:1",
            ArityClass::OneN => "1:n",
            ArityClass::NOne => "n:1",
            ArityClass::NM => "n:m",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ArityCounts {
    #[serde(rename = "1:1")]
    pub one_one: usize,
    #[serde(rename = "1:n")]
    pub one_n: usize,
    #[serde(rename = "n:1")]
    pub n_one: usize,
    #[serde(rename = "n:m")]
    pub n_m: usize,
}

impl ArityCounts {
    pub fn add(&mut self, class: ArityClass) {
        match class {
            ArityClass::OneOne => self.one_one += 1,
            ArityClass::OneN => self.one_n += 1,
            ArityClass::NOne => self.n_one += 1,
            ArityClass::NM => self.n_m += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.one_one + self.one_n + self.n_one + self.n_m
    }
}

/// Classifies each cell by the out-degree of its source and the in-degree of
/// its target (distinct partners).
pub fn classify_arity(alignment: &Alignment) -> (Vec<ArityClass>, ArityCounts) {
    let distinct: HashSet<(&Iri, &Iri)> = alignment.cells().iter().map(|c| (&c.source, &c.target)).collect();
    let mut d_out: HashMap<&Iri, usize> = HashMap::new();
    let mut d_in: HashMap<&Iri, usize> = HashMap::new();
    for (s, t) in &distinct {
        *d_out.entry(*s).or_default() += 1;
        *d_in.entry(*t).or_default() += 1;
    }
    let mut counts = ArityCounts::default();
    let classes = alignment
        .cells()
        .iter()
        .map(|c| {
            let class = match (d_out[&c.source] > 1, d_in[&c.target] > 1) {
                (false, false) => ArityClass::OneOne,
                (false, true) => ArityClass::NOne,
                (true, false) => ArityClass::OneN,
                (true, true) => ArityClass::NM,
            };
            counts.add(class);
            class
        })
        .collect();
    (classes, counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Correspondence, Task};

    #[test]
    fn degree_pairs() {
        let iri = |s: &str| Iri::new(format!("http://x/{s}")).unwrap();
        let cells = [("a", "b"), ("a", "c"), ("d", "c")].map(|(s, t)| Correspondence::exact(iri(s), iri(t)));
        let (a, _) = Alignment::from_cells(Task::new("s", "t").unwrap(), cells);
        let (classes, counts) = classify_arity(&a);
        assert_eq!(classes, vec![ArityClass::OneN, ArityClass::NM, ArityClass::NOne]);
        assert_eq!(counts.total(), 3);
        assert_eq!(counts.one_one, 0);
    }
}
