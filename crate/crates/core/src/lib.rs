//! Benchmark harness for knowledge-graph matching: N-Triples ingestion,
//! label-based baseline matchers, gold-standard construction, evaluation
//! under partial gold standards, precision sampling and report bundles.
//!
//! Numeric code is generic over [`scalar::Scalar`]; the aliases below fix the
//! common choices.

pub mod eval;
pub mod gold;
pub mod goldgen;
pub mod graph;
pub mod matchers;
pub mod pipeline;
pub mod report;
pub mod sampling;
pub mod scalar;

pub use gold::{EntityPair, GoldStandard, Negative};
pub use graph::{Alignment, Correspondence, EntityKind, Iri, KnowledgeGraph, Task};
pub use scalar::{RealScalar, Scalar};

/// Exact rational used for kappa and metric checks.
pub type Exact = num_rational::Rational64;

pub type Metrics = eval::Metrics<f64>;
pub type ExactMetrics = eval::Metrics<Exact>;
pub type PrecisionEstimate = sampling::PrecisionEstimate<f64>;
