//! Nonparametric lower confidence bounds for the context tree of a stationary ergodic
//! process over a finite alphabet, computed from a single sample.
//!
//! The crate counts every substring of a sample in a prepend trie ([`counts`]), finds
//! the smallest tree that every kernel within discrepancy `c·log2(n)` of the sample
//! must contain ([`estimator`]), and compares trees by node-set inclusion and a weighted
//! Hamming distance ([`trees`]). [`vlmc`] holds finite-context models used as ground
//! truth and [`experiments`] runs the Monte Carlo checks of coverage, consistency and
//! the discrepancy deviation bound.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases below fix
//! the scalar type.
//!
//! ```
//! use ctxtree::{Alphabet, CountsTrie, EstimatorConfigF64, IngestMode, Sample, tlb};
//!
//! let alphabet = Alphabet::parse("0,1,2").unwrap();
//! let text = "012".repeat(100);
//! let sample = Sample::ingest(text.as_bytes(), IngestMode::Chars, &alphabet).unwrap();
//! let config = EstimatorConfigF64::from_alpha(alphabet.size(), sample.len(), 0.05).unwrap();
//! let trie = CountsTrie::build(&sample, config.prune_floor(sample.len()));
//! let tree = tlb(&trie, &config).unwrap();
//! assert_eq!(tree.leaves().len(), 3);
//! ```

pub mod counts;
pub mod estimator;
pub mod experiments;
pub mod files;
pub mod scalar;
pub mod sequence;
pub mod trees;
pub mod vlmc;

pub use counts::{CountQuery, CountsError, CountsTrie, Lookup, NodeId};
pub use estimator::{
    brackets, c_for_alpha, discrepancy, discrepancy_within, estimate, feasible_as_context, one_sided_test, tlb,
    tlb_traced, Brackets, Decision, Estimate, EstimatorConfig, EstimatorError, NodeVerdict, TestOutcome,
};
pub use scalar::Scalar;
pub use sequence::{Alphabet, IngestMode, Sample, SequenceError, Symbol, Word};
pub use trees::{ContextTree, LeafFlag, PatternTree, TreeBound, TreeError, WeightFunction};
pub use vlmc::{sample_path, ModelError, Simulator, Violation, VlmcModel};

pub type BracketsF64 = Brackets<f64>;
pub type BracketsF32 = Brackets<f32>;
pub type EstimatorConfigF64 = EstimatorConfig<f64>;
pub type EstimatorConfigF32 = EstimatorConfig<f32>;
pub type EstimateF64 = Estimate<f64>;
pub type EstimateF32 = Estimate<f32>;
pub type TestOutcomeF64 = TestOutcome<f64>;
pub type VlmcModelF64 = VlmcModel<f64>;
pub type VlmcModelF32 = VlmcModel<f32>;
pub type WeightFunctionF64 = WeightFunction<f64>;
pub type WeightFunctionF32 = WeightFunction<f32>;
