//! Deterministic correspondence sampling and precision estimation.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::graph::{Alignment, Correspondence, Task};
use crate::scalar::RealScalar;

pub const DEFAULT_CONFIDENCE: f64 = 0.95;

#[derive(Debug, Error)]
pub enum SamplingError {
    #[error("no decisive judgments")]
    NoDecisiveJudgments,
    #[error("sample size must be at least 1")]
    EmptySampleSize,
    #[error("confidence {0} outside (0, 1)")]
    Confidence(f64),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleItem {
    pub id: String,
    pub correspondence: Correspondence,
    pub task: Task,
    pub matcher: String,
}

/// Content hash of (matcher, task, source, target).
pub fn item_id(matcher: &str, task: &Task, c: &Correspondence) -> String {
    let mut h = Sha256::new();
    for part in [matcher, &task.source, &task.target, c.source.as_str(), c.target.as_str()] {
        h.update(part.as_bytes());
        h.update([0u8]);
    }
    hex::encode(&h.finalize()[..16])
}

/// Uniform sample without replacement of `min(n, |alignment|)` cells. Cells
/// are sorted by (source, target) before drawing, so the result does not
/// depend on the order of the input file. Items come back in that sorted order.
pub fn sample(alignment: &Alignment, matcher: &str, n: usize, seed: u64) -> Result<Vec<SampleItem>, SamplingError> {
    if n == 0 {
        return Err(SamplingError::EmptySampleSize);
    }
    if alignment.is_empty() {
        log::warn!("sampling from an empty alignment for {} / {}", matcher, alignment.task);
        return Ok(Vec::new());
    }
    let mut cells: Vec<&Correspondence> = alignment.cells().iter().collect();
    cells.sort_by(|a, b| a.pair().cmp(&b.pair()));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, cells.len(), n.min(cells.len())).into_vec();
    picked.sort_unstable();
    Ok(picked
        .into_iter()
        .map(|i| SampleItem {
            id: item_id(matcher, &alignment.task, cells[i]),
            correspondence: cells[i].clone(),
            task: alignment.task.clone(),
            matcher: matcher.to_owned(),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Same,
    Different,
    Unsure,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Same => "same",
            Verdict::Different => "different",
            Verdict::Unsure => "unsure",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Verdict {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "same" | "s" => Ok(Verdict::Same),
            "different" | "d" => Ok(Verdict::Different),
            "unsure" | "u" => Ok(Verdict::Unsure),
            other => Err(format!("unknown verdict '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Judgment {
    pub item_id: String,
    pub verdict: Verdict,
    pub annotator: String,
    /// Milliseconds since the Unix epoch.
    pub timestamp: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrecisionEstimate<T> {
    pub point: T,
    pub interval: (T, T),
    pub n_judged: usize,
    pub n_unsure: usize,
}

/// Two-sided standard normal quantile for `confidence`.
fn z_value(confidence: f64) -> Result<f64, SamplingError> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(SamplingError::Confidence(confidence));
    }
    let normal = Normal::standard();
    Ok(normal.inverse_cdf(0.5 + confidence / 2.0))
}

/// Worst-case (p = 0.5) normal-approximation half-width `z·sqrt(0.25/n)`.
pub fn max_error<T: RealScalar>(n: usize, confidence: f64) -> Result<T, SamplingError> {
    if n == 0 {
        return Err(SamplingError::EmptySampleSize);
    }
    let z = T::from_f64(z_value(confidence)?);
    Ok(z * (T::from_f64(0.25) / T::from_count(n)).sqrt())
}

/// Wilson score interval for `successes` out of `n` trials.
pub fn wilson_interval<T: RealScalar>(successes: usize, n: usize, confidence: f64) -> Result<(T, T), SamplingError> {
    if n == 0 {
        return Err(SamplingError::NoDecisiveJudgments);
    }
    let z = T::from_f64(z_value(confidence)?);
    let nn = T::from_count(n);
    let p = T::from_count(successes) / nn;
    let two = T::from_f64(2.0);
    let four = T::from_f64(4.0);
    let z2 = z * z;
    let denom = T::one() + z2 / nn;
    let center = (p + z2 / (two * nn)) / denom;
    let half = z / denom * (p * (T::one() - p) / nn + z2 / (four * nn * nn)).sqrt();
    let lo = (center - half).max(T::zero()).min(p);
    let hi = (center + half).min(T::one()).max(p);
    Ok((lo, hi))
}

/// Precision from judgments of one matcher × task. Unsure verdicts are left
/// out of the estimate but counted.
pub fn estimate_precision<T: RealScalar>(judgments: &[Judgment]) -> Result<PrecisionEstimate<T>, SamplingError> {
    estimate_from_tally(
        judgments.iter().filter(|j| j.verdict == Verdict::Same).count(),
        judgments.iter().filter(|j| j.verdict == Verdict::Different).count(),
        judgments.iter().filter(|j| j.verdict == Verdict::Unsure).count(),
    )
}

pub fn estimate_from_tally<T: RealScalar>(same: usize, different: usize, unsure: usize) -> Result<PrecisionEstimate<T>, SamplingError> {
    let n = same + different;
    if n == 0 {
        return Err(SamplingError::NoDecisiveJudgments);
    }
    Ok(PrecisionEstimate {
        point: T::from_count(same) / T::from_count(n),
        interval: wilson_interval(same, n, DEFAULT_CONFIDENCE)?,
        n_judged: n,
        n_unsure: unsure,
    })
}

/// Writes one JSON record per line.
pub fn write_jsonl<T: Serialize, W: Write>(out: &mut W, records: &[T]) -> Result<(), SamplingError> {
    for r in records {
        serde_json::to_writer(&mut *out, r).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>, R: BufRead>(input: R) -> Result<Vec<T>, SamplingError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| SamplingError::Format { line: i + 1, message: e.to_string() })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Iri;

    fn alignment(n: usize) -> Alignment {
        let iri = |s: String| Iri::new(format!("http://x/{s}")).unwrap();
        let cells = (0..n).map(|i| Correspondence::exact(iri(format!("s{i}")), iri(format!("t{i}"))));
        Alignment::from_cells(Task::new("a", "b").unwrap(), cells).0
    }

    #[test]
    fn clamps_to_alignment_size() {
        assert_eq!(sample(&alignment(30), "m", 50, 1).unwrap().len(), 30);
        assert!(sample(&alignment(0), "m", 50, 1).unwrap().is_empty());
        assert!(sample(&alignment(3), "m", 0, 1).is_err());
    }

    #[test]
    fn deterministic_and_order_free() {
        let a = alignment(200);
        let ids = |s: Vec<SampleItem>| s.into_iter().map(|i| i.id).collect::<Vec<_>>();
        let first = ids(sample(&a, "m", 50, 7).unwrap());
        assert_eq!(first, ids(sample(&a, "m", 50, 7).unwrap()));
        let mut cells = a.cells().to_vec();
        cells.reverse();
        let reversed = Alignment::from_cells(a.task.clone(), cells).0;
        assert_eq!(first, ids(sample(&reversed, "m", 50, 7).unwrap()));
        assert_ne!(first, ids(sample(&a, "m", 50, 8).unwrap()));
    }

    #[test]
    fn max_error_values() {
        assert!((max_error::<f64>(50, 0.95).unwrap() - 0.1386).abs() < 5e-4);
        assert!((max_error::<f64>(100, 0.95).unwrap() - 0.0980).abs() < 5e-4);
        assert!(max_error::<f64>(50, 1.0).is_err());
    }

    #[test]
    fn wilson_values() {
        let (lo, hi) = wilson_interval::<f64>(1, 2, 0.95).unwrap();
        assert!((lo - 0.0945).abs() < 1e-3 && (hi - 0.9055).abs() < 1e-3);
        let (lo, hi) = wilson_interval::<f64>(25, 50, 0.95).unwrap();
        assert!((lo - 0.366).abs() < 1e-3 && (hi - 0.634).abs() < 1e-3);
        assert_eq!(wilson_interval::<f64>(50, 50, 0.95).unwrap().1, 1.0);
    }

    #[test]
    fn estimates() {
        let j = |v| Judgment { item_id: "x".into(), verdict: v, annotator: "a".into(), timestamp: 0 };
        let mut js: Vec<Judgment> = (0..27).map(|_| j(Verdict::Same)).collect();
        js.extend((0..23).map(|_| j(Verdict::Different)));
        js.push(j(Verdict::Unsure));
        let e = estimate_precision::<f64>(&js).unwrap();
        assert!((e.point - 0.54).abs() < 1e-12);
        assert_eq!((e.n_judged, e.n_unsure), (50, 1));
        assert!(matches!(estimate_precision::<f64>(&[j(Verdict::Unsure)]), Err(SamplingError::NoDecisiveJudgments)));
    }

    #[test]
    fn f32_path() {
        let e = max_error::<f32>(50, 0.95).unwrap();
        assert!((e - 0.1386).abs() < 5e-4);
    }
}
