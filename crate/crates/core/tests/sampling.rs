use kgbench_core::sampling::{max_error, sample, wilson_interval};
use kgbench_core::{Alignment, Correspondence, Iri, Task};
use proptest::prelude::*;

fn alignment(n: usize) -> Alignment {
    let iri = |s: String| Iri::new(s).unwrap();
    Alignment::from_cells(Task::new("a", "b").unwrap(), (0..n).map(|i| Correspondence::exact(iri(format!("http://a/{i}")), iri(format!("http://b/{i}"))))).0
}

#[test]
fn selection_frequency_is_uniform() {
    let al = alignment(10);
    let mut hits = [0usize; 10];
    let seeds = 10_000u64;
    for seed in 0..seeds {
        for item in sample(&al, "m", 5, seed).unwrap() {
            let i: usize = item.correspondence.source.as_str().rsplit('/').next().unwrap().parse().unwrap();
            hits[i] += 1;
        }
    }
    for h in hits {
        let f = h as f64 / seeds as f64;
        assert!((f - 0.5).abs() <= 0.02, "frequency {f}");
    }
}

#[test]
fn max_error_monotone() {
    let mut prev = f64::INFINITY;
    for n in 10..=10_000 {
        let e = max_error::<f64>(n, 0.95).unwrap();
        assert!(e < prev);
        prev = e;
    }
    let mut prev = 0.0;
    for c in [0.5, 0.8, 0.9, 0.95, 0.99, 0.999] {
        let e = max_error::<f64>(50, c).unwrap();
        assert!(e > prev);
        prev = e;
    }
}

proptest! {
    #[test]
    fn no_duplicate_ids(n in 0usize..80, k in 1usize..60, seed in any::<u64>()) {
        let items = sample(&alignment(n), "m", k, seed).unwrap();
        prop_assert_eq!(items.len(), k.min(n));
        let ids: std::collections::BTreeSet<_> = items.iter().map(|i| &i.id).collect();
        prop_assert_eq!(ids.len(), items.len());
    }

    #[test]
    fn wilson_contains_point(n in 1usize..500, frac in 0.0f64..=1.0) {
        let s = ((n as f64) * frac).round() as usize;
        let (lo, hi) = wilson_interval::<f64>(s, n, 0.95).unwrap();
        let p = s as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
    }
}
