use serde::Serialize;

use super::{Counts, EvalError};
use crate::scalar::{harmonic_mean, ratio_or_zero, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics<T> {
    pub precision: T,
    pub recall: T,
    pub f_measure: T,
    /// Mean number of produced correspondences.
    pub size: T,
    pub tasks_completed: usize,
}

impl<T: Scalar> Metrics<T> {
    pub fn to_f64(&self) -> Metrics<f64> {
        Metrics {
            precision: self.precision.to_f64(),
            recall: self.recall.to_f64(),
            f_measure: self.f_measure.to_f64(),
            size: self.size.to_f64(),
            tasks_completed: self.tasks_completed,
        }
    }
}

pub fn metrics_from_counts<T: Scalar>(counts: &Counts) -> Metrics<T> {
    let precision = ratio_or_zero(counts.tp, counts.tp + counts.fp);
    let recall = ratio_or_zero(counts.tp, counts.tp + counts.fn_);
    Metrics {
        precision,
        recall,
        f_measure: harmonic_mean(precision, recall),
        size: T::from_count(counts.produced()),
        tasks_completed: usize::from(counts.produced() > 0),
    }
}

/// Counts of one task (possibly restricted to one kind) together with the
/// size of the whole produced alignment, which decides emptiness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaskResult {
    pub counts: Counts,
    pub alignment_size: usize,
}

impl TaskResult {
    pub fn is_empty(&self) -> bool {
        self.alignment_size == 0
    }
}

/// Macro average over tasks. With `include_empty`, tasks without any produced
/// correspondence contribute P = R = 0; without it they are left out. F is
/// the harmonic mean of the averaged P and R. Size is the mean number of
/// produced cells counted in `counts` over non-empty tasks.
pub fn aggregate_tasks<T: Scalar>(results: &[TaskResult], include_empty: bool) -> Result<Metrics<T>, EvalError> {
    if results.is_empty() {
        return Err(EvalError::NoTasks);
    }
    let completed: Vec<&TaskResult> = results.iter().filter(|r| !r.is_empty()).collect();
    let averaged: Vec<&TaskResult> = if include_empty { results.iter().collect() } else { completed.clone() };

    let (mut p_sum, mut r_sum) = (T::zero(), T::zero());
    for r in &averaged {
        let m = metrics_from_counts::<T>(&r.counts);
        if !r.is_empty() {
            p_sum = p_sum + m.precision;
            r_sum = r_sum + m.recall;
        }
    }
    let denominator = T::from_count(averaged.len().max(1));
    let precision = p_sum / denominator;
    let recall = r_sum / denominator;
    let size_total: usize = completed.iter().map(|r| r.counts.produced()).sum();
    Ok(Metrics {
        precision,
        recall,
        f_measure: harmonic_mean(precision, recall),
        size: ratio_or_zero(size_total, completed.len()),
        tasks_completed: completed.len(),
    })
}
