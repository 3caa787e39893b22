//! Tree lower bound estimator and the one-sided test built on it.
//!
//! A string `w` observed in the sample is kept as a candidate context when some kernel
//! within discrepancy `c·log2(n)` of the sample can use `w` as a context. That is
//! decided from per-symbol brackets `[l(w,a), u(w,a)]` collected over the proper
//! extensions `sw` of `w`:
//!
//! ```text
//! l(w,a) = max_{sw} p̂(a|sw) - c·log2(n) / N_{n-1}(sw)
//! u(w,a) = min_{sw} p̂(a|sw) + c·log2(n) / N_{n-1}(sw)
//! ```
//!
//! and `w` is feasible iff `l ≤ u` per symbol and `Σ max(l,0) ≤ 1 ≤ Σ min(u,1)`.
//! The estimate grows its node set from the root, adding the children of every
//! infeasible node. All logarithms are base 2.

use std::collections::VecDeque;

use thiserror::Error;

use crate::counts::{CountsTrie, Lookup, NodeId};
use crate::scalar::Scalar;
use crate::sequence::{Sample, Symbol, Word};
use crate::trees::{ContextTree, PatternTree, TreeError};
use crate::vlmc::{ModelError, VlmcModel};

#[derive(Debug, Error, PartialEq)]
pub enum EstimatorError {
    #[error("tolerance constant c must be positive and finite, got {0}")]
    BadConstant(f64),
    #[error("significance level must lie in (0, 1), got {0}")]
    BadAlpha(f64),
    #[error("sample size must exceed 2 for calibration, got {0}")]
    SampleTooShort(usize),
    #[error("trie prune floor {prune_floor} exceeds c·log2(n) = {threshold}")]
    TrieTooCoarse { prune_floor: f64, threshold: f64 },
    #[error("discrepancy needs an unpruned trie (prune floor {0})")]
    PrunedTrie(f64),
    #[error("string {0:?} does not occur in the sample prefix")]
    Unobserved(Word),
    #[error("model and sample use different alphabets")]
    AlphabetMismatch,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// Lower end of the admissible `c` window for level `alpha`:
/// `(|A|-1)·(log2((|A|-1)/alpha)/log2(n) + 2)`.
pub fn calibrated_c<S: Scalar>(alphabet_size: usize, n: usize, alpha: S) -> S {
    let m = S::from_count(alphabet_size as u64 - 1);
    let log_n = S::from_count(n as u64).log2();
    m * ((m / alpha).log2() / log_n + S::lit(2.0))
}

/// Upper end of the window: `(n-1) / (2|A| log2(n))`.
pub fn window_upper<S: Scalar>(alphabet_size: usize, n: usize) -> S {
    let log_n = S::from_count(n as u64).log2();
    S::from_count(n as u64 - 1) / (S::lit(2.0) * S::from_count(alphabet_size as u64) * log_n)
}

/// `c` for level `alpha` and whether it lies inside the window where coverage and
/// non-triviality are certified.
pub fn c_for_alpha<S: Scalar>(alphabet_size: usize, n: usize, alpha: S) -> Result<(S, bool), EstimatorError> {
    if !(alpha > S::zero() && alpha < S::one()) {
        return Err(EstimatorError::BadAlpha(alpha.as_f64()));
    }
    if n <= 2 {
        return Err(EstimatorError::SampleTooShort(n));
    }
    assert!(alphabet_size >= 2, "alphabets have at least two symbols");
    let c = calibrated_c(alphabet_size, n, alpha);
    Ok((c, c <= window_upper(alphabet_size, n)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration<S: Scalar> {
    pub alpha: S,
    pub window_lower: S,
    pub window_upper: S,
    pub window_ok: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig<S: Scalar> {
    pub c: S,
    /// Present when `c` was derived from a significance level.
    pub calibration: Option<Calibration<S>>,
}

impl<S: Scalar> EstimatorConfig<S> {
    pub fn with_c(c: S) -> Result<Self, EstimatorError> {
        if !(c > S::zero() && c.is_finite()) {
            return Err(EstimatorError::BadConstant(c.as_f64()));
        }
        Ok(EstimatorConfig { c, calibration: None })
    }

    pub fn from_alpha(alphabet_size: usize, n: usize, alpha: S) -> Result<Self, EstimatorError> {
        let (c, window_ok) = c_for_alpha(alphabet_size, n, alpha)?;
        Ok(EstimatorConfig {
            c,
            calibration: Some(Calibration {
                alpha,
                window_lower: c,
                window_upper: window_upper(alphabet_size, n),
                window_ok,
            }),
        })
    }

    /// `c·log2(n)`: the discrepancy budget, also the trie prune floor to use.
    pub fn threshold(&self, n: usize) -> S {
        self.c * S::from_count(n as u64).log2()
    }

    pub fn prune_floor(&self, n: usize) -> f64 {
        self.threshold(n).as_f64()
    }

    /// `None` when `c` was given directly.
    pub fn window_ok(&self) -> Option<bool> {
        self.calibration.map(|cal| cal.window_ok)
    }
}

/// Per-symbol interval constraints on `Q(·|w)`, with the extension attaining each bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Brackets<S: Scalar> {
    pub lower: Vec<S>,
    pub upper: Vec<S>,
    pub lower_from: Vec<Option<Word>>,
    pub upper_from: Vec<Option<Word>>,
    /// Number of extensions that contributed.
    pub extensions: usize,
}

impl<S: Scalar> Brackets<S> {
    pub fn vacuous(alphabet_size: usize) -> Self {
        Brackets {
            lower: vec![S::neg_infinity(); alphabet_size],
            upper: vec![S::infinity(); alphabet_size],
            lower_from: vec![None; alphabet_size],
            upper_from: vec![None; alphabet_size],
            extensions: 0,
        }
    }

    /// No extension constrained anything.
    pub fn is_empty(&self) -> bool {
        self.extensions == 0
    }

    fn absorb(&mut self, trie: &CountsTrie, node: NodeId, threshold: S) {
        let count = trie.count(node);
        let radius = threshold / S::from_count(count);
        let mut word = None;
        for a in 0..self.lower.len() {
            let p: S = trie.hat_p_node(node, a as Symbol);
            let lo = p - radius;
            let hi = p + radius;
            if lo > self.lower[a] {
                self.lower[a] = lo;
                self.lower_from[a] = Some(word.get_or_insert_with(|| trie.word(node)).clone());
            }
            if hi < self.upper[a] {
                self.upper[a] = hi;
                self.upper_from[a] = Some(word.get_or_insert_with(|| trie.word(node)).clone());
            }
        }
        self.extensions += 1;
    }
}

/// Brackets of `w` over extensions with count above `c·log2(n)`; the others have
/// radius at least 1 and cannot bind.
pub fn brackets<S: Scalar>(trie: &CountsTrie, w: &[Symbol], c: S) -> Result<Brackets<S>, EstimatorError> {
    let threshold = c * S::from_count(trie.sample_len() as u64).log2();
    brackets_above(trie, w, c, threshold.as_f64())
}

/// Brackets over every proper extension with count above `floor` (`floor ≥` the
/// trie's prune floor).
pub fn brackets_above<S: Scalar>(
    trie: &CountsTrie,
    w: &[Symbol],
    c: S,
    floor: f64,
) -> Result<Brackets<S>, EstimatorError> {
    check_coverage(trie, floor)?;
    let k = trie.alphabet().size();
    match trie.lookup(w) {
        Lookup::Found(node) => Ok(node_brackets(trie, node, c, floor)),
        Lookup::Absent | Lookup::Pruned(_) => Ok(Brackets::vacuous(k)),
    }
}

fn check_coverage(trie: &CountsTrie, floor: f64) -> Result<(), EstimatorError> {
    if floor < trie.prune_floor() {
        return Err(EstimatorError::TrieTooCoarse {
            prune_floor: trie.prune_floor(),
            threshold: floor,
        });
    }
    Ok(())
}

fn node_brackets<S: Scalar>(trie: &CountsTrie, node: NodeId, c: S, floor: f64) -> Brackets<S> {
    let threshold = c * S::from_count(trie.sample_len() as u64).log2();
    let mut b = Brackets::vacuous(trie.alphabet().size());
    trie.for_each_extension(node, floor, |ext| b.absorb(trie, ext, threshold));
    b
}

/// Whether some distribution `q` satisfies the brackets: `l ≤ u` for every symbol and
/// `Σ max(l,0) ≤ 1 ≤ Σ min(u,1)`. Vacuous brackets are feasible.
pub fn feasible_as_context<S: Scalar>(b: &Brackets<S>) -> bool {
    if b.lower.iter().zip(&b.upper).any(|(l, u)| l > u) {
        return false;
    }
    let low: S = b.lower.iter().map(|&l| l.max(S::zero())).sum();
    let high: S = b.upper.iter().map(|&u| u.min(S::one())).sum();
    low <= S::one() && S::one() <= high
}

/// Decision taken for one examined node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeVerdict<S: Scalar> {
    pub word: Word,
    pub count: u64,
    pub brackets: Brackets<S>,
    pub feasible: bool,
    /// Children added to the estimate (empty when feasible or unextendable).
    pub children: Vec<Word>,
}

#[derive(Debug, Clone)]
pub struct Estimate<S: Scalar> {
    pub tree: ContextTree,
    /// Verdicts in examination order (breadth first, children in symbol order).
    pub verdicts: Vec<NodeVerdict<S>>,
}

impl<S: Scalar> Estimate<S> {
    pub fn verdict(&self, w: &Word) -> Option<&NodeVerdict<S>> {
        self.verdicts.iter().find(|v| &v.word == w)
    }
}

/// Computes the lower-bound tree `T_n^c`.
pub fn tlb<S: Scalar>(trie: &CountsTrie, config: &EstimatorConfig<S>) -> Result<ContextTree, EstimatorError> {
    Ok(tlb_traced(trie, config)?.tree)
}

/// [`tlb`] with the verdict of every examined node.
pub fn tlb_traced<S: Scalar>(trie: &CountsTrie, config: &EstimatorConfig<S>) -> Result<Estimate<S>, EstimatorError> {
    let n = trie.sample_len();
    let floor = config.prune_floor(n);
    check_coverage(trie, floor)?;

    let mut nodes: Vec<Word> = vec![Word::empty()];
    let mut verdicts = Vec::new();
    let mut frontier = VecDeque::from([trie.root()]);
    while let Some(node) = frontier.pop_front() {
        let brackets = node_brackets(trie, node, config.c, floor);
        let feasible = feasible_as_context(&brackets);
        let mut children = Vec::new();
        if !feasible {
            // infeasible brackets need a binding extension, which has count above the
            // prune floor, so this node was expanded
            for child in trie.child_nodes(node) {
                let word = trie.word(child);
                nodes.push(word.clone());
                children.push(word);
                frontier.push_back(child);
            }
        }
        verdicts.push(NodeVerdict {
            word: trie.word(node),
            count: trie.count(node),
            brackets,
            feasible,
            children,
        });
    }
    let tree = ContextTree::from_node_set(trie.alphabet(), &nodes)?;
    Ok(Estimate { tree, verdicts })
}

/// Builds the trie at the config's prune floor and runs [`tlb_traced`].
pub fn estimate<S: Scalar>(sample: &Sample, config: &EstimatorConfig<S>) -> Result<Estimate<S>, EstimatorError> {
    let trie = CountsTrie::build(sample, config.prune_floor(sample.len()));
    tlb_traced(&trie, config)
}

/// `d_n(X, Q)`: the largest `N_{n-1}(w)·max_a |p̂(a|w) - Q(a|w)|` over observed `w`
/// that are not nodes of the model's tree; 0 when there is no such `w`.
pub fn discrepancy<S: Scalar>(trie: &CountsTrie, model: &VlmcModel<S>) -> Result<S, EstimatorError> {
    if trie.prune_floor() > 0.0 {
        return Err(EstimatorError::PrunedTrie(trie.prune_floor()));
    }
    discrepancy_materialized(trie, model)
}

/// Decides `d_n(X, Q) ≤ threshold` on a trie pruned at any floor `≤ threshold`. Strings
/// below a pruned node have count, hence term, at most the floor.
pub fn discrepancy_within<S: Scalar>(
    trie: &CountsTrie,
    model: &VlmcModel<S>,
    threshold: S,
) -> Result<bool, EstimatorError> {
    check_coverage(trie, threshold.as_f64())?;
    Ok(discrepancy_materialized(trie, model)? <= threshold)
}

/// Maximum over the materialized nodes only.
fn discrepancy_materialized<S: Scalar>(trie: &CountsTrie, model: &VlmcModel<S>) -> Result<S, EstimatorError> {
    if trie.alphabet() != model.alphabet() {
        return Err(EstimatorError::AlphabetMismatch);
    }
    let k = trie.alphabet().size();
    let mut best = S::zero();
    // (trie node, context distribution once the word has left the model's node set)
    let mut stack: Vec<(NodeId, Option<&[S]>)> = vec![(trie.root(), None)];
    while let Some((node, context)) = stack.pop() {
        let count = trie.count(node);
        if let Some(q) = context {
            let dev = (0..k)
                .map(|a| (trie.hat_p_node::<S>(node, a as Symbol) - q[a]).abs())
                .fold(S::zero(), S::max);
            best = best.max(S::from_count(count) * dev);
        }
        // no descendant can exceed its own count
        if S::from_count(count) <= best || !trie.is_expanded(node) {
            continue;
        }
        for child in trie.child_nodes(node) {
            let ctx = match context {
                Some(q) => Some(q),
                None => {
                    let word = trie.word(child);
                    if model.tree().contains_node(&word) {
                        None
                    } else {
                        Some(model.conditional(&word)?)
                    }
                }
            };
            stack.push((child, ctx));
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Reject,
    NotReject,
}

#[derive(Debug, Clone)]
pub struct TestOutcome<S: Scalar> {
    pub decision: Decision,
    pub c: S,
    pub window_ok: bool,
    pub estimate: Estimate<S>,
    /// Shortest node of the estimate outside the hypothesis tree, when rejecting.
    pub witness: Option<Word>,
}

/// Tests `H0: τ_P ⪯ τ0` against `H1: τ_P ⋠ τ0`, rejecting when the lower bound at
/// level `alpha` does not precede `τ0`.
pub fn one_sided_test<S: Scalar>(
    sample: &Sample,
    tau0: &PatternTree,
    alpha: S,
) -> Result<TestOutcome<S>, EstimatorError> {
    if sample.alphabet() != tau0.alphabet() {
        return Err(EstimatorError::AlphabetMismatch);
    }
    let config = EstimatorConfig::from_alpha(sample.alphabet().size(), sample.len(), alpha)?;
    let estimate = estimate(sample, &config)?;
    let witness = estimate.tree.first_excess_node(tau0)?;
    Ok(TestOutcome {
        decision: if witness.is_some() {
            Decision::Reject
        } else {
            Decision::NotReject
        },
        c: config.c,
        window_ok: config.window_ok().unwrap_or(true),
        estimate,
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::{Alphabet, IngestMode};
    use approx::assert_relative_eq;

    fn sample(text: &str, labels: &str) -> Sample {
        let a = Alphabet::parse(labels).unwrap();
        Sample::ingest(text.as_bytes(), IngestMode::Chars, &a).unwrap()
    }

    fn cycle(k: usize, n: usize) -> Sample {
        let a = Alphabet::numeric(k).unwrap();
        Sample::new(a, (0..n).map(|i| (i % k) as Symbol).collect()).unwrap()
    }

    #[test]
    fn c_formula() {
        let (c, ok) = c_for_alpha(5, 107_761, 0.05f64).unwrap();
        assert!((c - 9.513).abs() < 1e-3, "c = {c}");
        assert!(ok);
        // log2(1/0.5) / log2(4) = 1/2
        let (c, _) = c_for_alpha(2, 4, 0.5f64).unwrap();
        assert_eq!(c, 2.5);
        let (c, ok) = c_for_alpha(3, 300, 0.05f64).unwrap();
        assert!((c - 5.2935).abs() < 1e-3, "c = {c}");
        assert!(ok);
        assert!((window_upper::<f64>(3, 300) - 6.0561).abs() < 1e-3);
        assert!(c_for_alpha(2, 2, 0.05f64).is_err());
        assert!(c_for_alpha(2, 100, 1.0f64).is_err());
        let (_, ok) = c_for_alpha(2, 20, 0.05f64).unwrap();
        assert!(!ok);
    }

    #[test]
    fn cycle_brackets_at_root() {
        let s = Sample::ingest(b"123123123", IngestMode::Chars, &Alphabet::parse("1,2,3").unwrap()).unwrap();
        let trie = CountsTrie::build(&s, 0.0);
        let b = brackets(&trie, &[], 0.3f64).unwrap();
        let r = 0.3 * 9f64.log2() / 3.0;
        assert_relative_eq!(b.lower[1], 1.0 - r, epsilon = 1e-12);
        assert_eq!(b.lower_from[1], Some(Word::from(vec![0])));
        assert_relative_eq!(b.upper[1], r, epsilon = 1e-12);
        assert_eq!(b.upper_from[1], Some(Word::from(vec![1])));
        assert!(!feasible_as_context(&b));
    }

    #[test]
    fn vacuous_brackets() {
        let s = sample("abbab", "a,b");
        let trie = CountsTrie::build(&s, 0.0);
        let b = brackets(&trie, &[], 10.0f64).unwrap();
        assert!(b.is_empty());
        assert!(b.lower.iter().all(|l| *l == f64::NEG_INFINITY));
        assert!(feasible_as_context(&b));
        // unobserved string
        let b = brackets(&trie, &[0, 0], 0.1f64).unwrap();
        assert!(b.is_empty());
    }

    #[test]
    fn feasibility_sum_condition() {
        let b = Brackets::<f64> {
            lower: vec![0.6, 0.6],
            upper: vec![0.8, 0.8],
            lower_from: vec![None, None],
            upper_from: vec![None, None],
            extensions: 1,
        };
        assert!(!feasible_as_context(&b));
        let b = Brackets::<f64> {
            lower: vec![0.2, 0.5],
            upper: vec![0.4, 0.9],
            ..b
        };
        assert!(feasible_as_context(&b));
    }

    #[test]
    fn tlb_small_cases() {
        let s = sample("a", "a,b");
        let trie = CountsTrie::build(&s, 0.0);
        assert!(tlb(&trie, &EstimatorConfig::with_c(1.0f64).unwrap()).unwrap().is_root());

        let s = sample("abbab", "a,b");
        let cfg = EstimatorConfig::with_c(10.0f64).unwrap();
        let trie = CountsTrie::build(&s, cfg.prune_floor(s.len()));
        assert!(tlb(&trie, &cfg).unwrap().is_root());
    }

    #[test]
    fn tlb_on_cycle_is_nontrivial() {
        let s = cycle(3, 300);
        let cfg = EstimatorConfig::with_c(5.3f64).unwrap();
        let est = estimate(&s, &cfg).unwrap();
        assert!(!est.tree.is_root());
        assert!(ContextTree::root(s.alphabet()).precedes(&est.tree).unwrap());
        assert!(!est.verdicts[0].feasible);
        // the cycle is first-order: each symbol is a feasible context
        assert_eq!(est.tree.leaves().len(), 3);
    }

    #[test]
    fn tlb_rejects_coarse_trie() {
        let s = cycle(3, 300);
        let trie = CountsTrie::build(&s, 100.0);
        let cfg = EstimatorConfig::with_c(1.0f64).unwrap();
        assert!(matches!(tlb(&trie, &cfg), Err(EstimatorError::TrieTooCoarse { .. })));
    }

    #[test]
    fn one_sided_test_decisions() {
        let s = cycle(3, 300);
        let a = s.alphabet().clone();
        let out = one_sided_test(&s, &PatternTree::root(&a), 0.05f64).unwrap();
        assert_eq!(out.decision, Decision::Reject);
        assert!(out.window_ok);
        assert_eq!(out.witness.as_ref().map(Word::len), Some(1));
        let out = one_sided_test(&s, &PatternTree::infinite(&a), 0.05f64).unwrap();
        assert_eq!(out.decision, Decision::NotReject);
        assert_eq!(out.witness, None);
    }

    #[test]
    fn works_in_single_precision() {
        let s = cycle(3, 300);
        let cfg = EstimatorConfig::with_c(5.3f32).unwrap();
        let est = estimate(&s, &cfg).unwrap();
        assert_eq!(est.tree.leaves().len(), 3);
    }
}
