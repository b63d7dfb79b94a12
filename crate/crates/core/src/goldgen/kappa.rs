use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::GoldgenError;
use crate::scalar::Scalar;

/// N subjects × k categories; cell (i, j) counts raters who put subject i
/// into category j. Every row sums to the same n.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatingsMatrix {
    counts: Vec<Vec<u32>>,
    raters: u32,
}

impl RatingsMatrix {
    pub fn new(counts: Vec<Vec<u32>>) -> Result<Self, GoldgenError> {
        let first = counts.first().ok_or_else(|| GoldgenError::Ratings("no subjects".into()))?;
        let k = first.len();
        if k < 2 {
            return Err(GoldgenError::Ratings("at least two categories are required".into()));
        }
        let raters: u32 = first.iter().sum();
        if raters < 2 {
            return Err(GoldgenError::Ratings("at least two raters per subject are required".into()));
        }
        for (i, row) in counts.iter().enumerate() {
            if row.len() != k {
                return Err(GoldgenError::Ratings(format!("row {} has {} categories, expected {k}", i + 1, row.len())));
            }
            let sum: u32 = row.iter().sum();
            if sum != raters {
                return Err(GoldgenError::Ratings(format!("row {} sums to {sum}, expected {raters}", i + 1)));
            }
        }
        Ok(RatingsMatrix { counts, raters })
    }

    pub fn subjects(&self) -> usize {
        self.counts.len()
    }

    pub fn raters(&self) -> u32 {
        self.raters
    }

    pub fn categories(&self) -> usize {
        self.counts[0].len()
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.counts
    }
}

/// Whitespace- or tab-separated counts, one subject per line. `#` starts a
/// comment line; a first line that is not numeric is taken as a header.
impl FromStr for RatingsMatrix {
    type Err = GoldgenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut rows = Vec::new();
        for (i, line) in s.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parsed: Result<Vec<u32>, _> = line.split_whitespace().map(str::parse).collect();
            match parsed {
                Ok(row) => rows.push(row),
                Err(_) if rows.is_empty() && i == 0 => continue,
                Err(e) => return Err(GoldgenError::Ratings(format!("line {}: {e}", i + 1))),
            }
        }
        RatingsMatrix::new(rows)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaBand {
    Poor,
    Slight,
    Fair,
    Moderate,
    Substantial,
    AlmostPerfect,
}

impl KappaBand {
    pub fn of(kappa: f64) -> Self {
        match kappa {
            k if k <= 0.0 => KappaBand::Poor,
            k if k <= 0.20 => KappaBand::Slight,
            k if k <= 0.40 => KappaBand::Fair,
            k if k <= 0.60 => KappaBand::Moderate,
            k if k <= 0.80 => KappaBand::Substantial,
            _ => KappaBand::AlmostPerfect,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            KappaBand::Poor => "poor",
            KappaBand::Slight => "slight",
            KappaBand::Fair => "fair",
            KappaBand::Moderate => "moderate",
            KappaBand::Substantial => "substantial",
            KappaBand::AlmostPerfect => "almost perfect",
        }
    }
}

impl fmt::Display for KappaBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Fleiss' kappa. Fails with [`GoldgenError::Degenerate`] when expected
/// agreement is 1.
pub fn fleiss_kappa<T: Scalar>(m: &RatingsMatrix) -> Result<(T, KappaBand), GoldgenError> {
    let n = T::from_count(m.raters as usize);
    let subjects = T::from_count(m.subjects());
    let mut p_bar = T::zero();
    let mut column = vec![0usize; m.categories()];
    for row in m.rows() {
        let sq: usize = row.iter().map(|&c| (c as usize) * (c as usize)).sum();
        p_bar = p_bar + (T::from_count(sq) - n) / (n * (n - T::one()));
        for (j, &c) in row.iter().enumerate() {
            column[j] += c as usize;
        }
    }
    p_bar = p_bar / subjects;
    let total = subjects * n;
    let p_e = column.iter().fold(T::zero(), |acc, &c| {
        let p = T::from_count(c) / total;
        acc + p * p
    });
    if p_e == T::one() {
        return Err(GoldgenError::Degenerate);
    }
    let kappa = (p_bar - p_e) / (T::one() - p_e);
    Ok((kappa, KappaBand::of(kappa.to_f64())))
}
