//! Variable length Markov chains with a finite context tree.
//!
//! A model assigns a next-symbol distribution to every leaf of its tree. The tree must
//! be complete: every history at least as long as the tree depth has exactly one leaf
//! as a suffix.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::scalar::Scalar;
use crate::sequence::{Alphabet, Sample, Symbol, Word};
use crate::trees::ContextTree;

/// Tolerance on distribution sums and for merging equal sibling distributions.
pub const PROB_TOLERANCE: f64 = 1e-9;

/// Largest lifted state space `|A|^K` handled by [`VlmcModel::stationary_lift`].
pub const LIFT_STATE_CAP: usize = 1_000_000;

const LIFT_MAX_ITERATIONS: usize = 200_000;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("invalid model: {}", join(.0))]
    Invalid(Vec<Violation>),
    #[error("no context matches the past {0:?}")]
    NoContext(Word),
    #[error("lifted state space |A|^K = {0} exceeds the cap of {LIFT_STATE_CAP}")]
    LiftTooLarge(f64),
    #[error("stationary iteration did not converge after {0} steps")]
    LiftDidNotConverge(usize),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    MissingDistribution(Word),
    NotALeaf(Word),
    WrongLength { leaf: Word, len: usize },
    NegativeProbability(Word),
    NotNormalized { leaf: Word, sum: f64 },
    /// Histories ending in this string have no context.
    Incomplete(Word),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingDistribution(w) => write!(f, "leaf {w:?} has no distribution"),
            Violation::NotALeaf(w) => write!(f, "distribution given for non-leaf {w:?}"),
            Violation::WrongLength { leaf, len } => {
                write!(f, "distribution of {leaf:?} has {len} entries")
            }
            Violation::NegativeProbability(w) => write!(f, "distribution of {w:?} has a negative entry"),
            Violation::NotNormalized { leaf, sum } => {
                write!(f, "distribution of {leaf:?} sums to {sum}")
            }
            Violation::Incomplete(w) => write!(f, "no context covers pasts ending in {w:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VlmcModel<S: Scalar> {
    tree: ContextTree,
    probs: BTreeMap<Word, Vec<S>>,
}

impl<S: Scalar> VlmcModel<S> {
    /// Assembles a model without checking it; see [`VlmcModel::validate`].
    pub fn new_unchecked(tree: ContextTree, probs: BTreeMap<Word, Vec<S>>) -> Self {
        VlmcModel { tree, probs }
    }

    pub fn new(tree: ContextTree, probs: BTreeMap<Word, Vec<S>>) -> Result<Self, ModelError> {
        let model = Self::new_unchecked(tree, probs);
        let violations = model.validate();
        if violations.is_empty() {
            Ok(model)
        } else {
            Err(ModelError::Invalid(violations))
        }
    }

    /// i.i.d. model with the given marginal.
    pub fn iid(alphabet: &Alphabet, marginal: Vec<S>) -> Result<Self, ModelError> {
        Self::new(
            ContextTree::root(alphabet),
            BTreeMap::from([(Word::empty(), marginal)]),
        )
    }

    pub fn tree(&self) -> &ContextTree {
        &self.tree
    }

    pub fn alphabet(&self) -> &Alphabet {
        self.tree.alphabet()
    }

    pub fn probs(&self) -> &BTreeMap<Word, Vec<S>> {
        &self.probs
    }

    /// Longest context length `K`.
    pub fn depth(&self) -> usize {
        self.tree.depth()
    }

    /// Every broken invariant; empty for a valid model.
    pub fn validate(&self) -> Vec<Violation> {
        let k = self.alphabet().size();
        let tol = S::lit(PROB_TOLERANCE);
        let mut out = Vec::new();
        for leaf in self.tree.leaves() {
            match self.probs.get(leaf) {
                None => out.push(Violation::MissingDistribution(leaf.clone())),
                Some(p) if p.len() != k => out.push(Violation::WrongLength {
                    leaf: leaf.clone(),
                    len: p.len(),
                }),
                Some(p) => {
                    if p.iter().any(|&x| !(x >= S::zero())) {
                        out.push(Violation::NegativeProbability(leaf.clone()));
                    }
                    let sum: S = p.iter().copied().sum();
                    if !((sum - S::one()).abs() <= tol) {
                        out.push(Violation::NotNormalized {
                            leaf: leaf.clone(),
                            sum: sum.as_f64(),
                        });
                    }
                }
            }
        }
        for w in self.probs.keys() {
            if !self.tree.leaves().contains(w) {
                out.push(Violation::NotALeaf(w.clone()));
            }
        }
        // complete iff every internal node has all of its children
        let nodes = self.tree.node_set();
        let mut internal: Vec<&Word> = nodes.iter().filter(|w| !self.tree.leaves().contains(*w)).collect();
        internal.sort();
        for w in internal {
            for b in 0..k as Symbol {
                let child = w.prepend(b);
                if !nodes.contains(&child) {
                    out.push(Violation::Incomplete(child));
                }
            }
        }
        out
    }

    fn ensure_valid(&self) -> Result<(), ModelError> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(ModelError::Invalid(v))
        }
    }

    /// Merges sibling leaf families with equal distributions until none remain.
    pub fn minimize(&self) -> Result<Self, ModelError> {
        self.ensure_valid()?;
        let k = self.alphabet().size();
        let tol = S::lit(PROB_TOLERANCE);
        let mut leaves: BTreeSet<Word> = self.tree.leaves().clone();
        let mut probs = self.probs.clone();
        loop {
            let parents: BTreeSet<Word> = leaves.iter().filter_map(Word::parent).collect();
            // deepest first so merges cascade within one sweep where possible
            let merge = parents.into_iter().rev().find(|parent| {
                let family: Vec<Word> = (0..k as Symbol).map(|b| parent.prepend(b)).collect();
                family.iter().all(|w| leaves.contains(w))
                    && family.windows(2).all(|pair| {
                        probs[&pair[0]]
                            .iter()
                            .zip(&probs[&pair[1]])
                            .all(|(x, y)| (*x - *y).abs() <= tol)
                    })
            });
            let Some(parent) = merge else { break };
            let mut dist = None;
            for b in 0..k as Symbol {
                let child = parent.prepend(b);
                leaves.remove(&child);
                let p = probs.remove(&child).expect("leaf has a distribution");
                dist.get_or_insert(p);
            }
            probs.insert(parent.clone(), dist.expect("nonempty family"));
            leaves.insert(parent);
        }
        let tree = ContextTree::from_leaves(self.alphabet(), leaves).expect("merging keeps the tree property");
        Ok(VlmcModel { tree, probs })
    }

    /// The leaf that is a suffix of `past`.
    pub fn context_of(&self, past: &[Symbol]) -> Result<&Word, ModelError> {
        let nodes = self.tree.node_set();
        for len in 0..=past.len() {
            let u = Word::from(&past[past.len() - len..]);
            if let Some(leaf) = self.tree.leaves().get(&u) {
                return Ok(leaf);
            }
            if !nodes.contains(&u) {
                break;
            }
        }
        Err(ModelError::NoContext(Word::from(past)))
    }

    /// Next-symbol distribution given `past` (most recent symbol last).
    pub fn conditional(&self, past: &[Symbol]) -> Result<&[S], ModelError> {
        let leaf = self.context_of(past)?;
        self.probs
            .get(leaf)
            .map(Vec::as_slice)
            .ok_or_else(|| ModelError::Invalid(vec![Violation::MissingDistribution(leaf.clone())]))
    }

    /// Stationary law of the order-`K` lift, indexed by the history read as a base-`|A|`
    /// number with the oldest symbol most significant. Power iteration of the lazy chain
    /// from the uniform law, stopped once one lifted step moves the law by less than
    /// `1e-12` in total variation.
    pub fn stationary_lift(&self) -> Result<Vec<S>, ModelError> {
        self.ensure_valid()?;
        let k = self.alphabet().size();
        let depth = self.depth();
        let states = (k as f64).powi(depth as i32);
        if states > LIFT_STATE_CAP as f64 {
            return Err(ModelError::LiftTooLarge(states));
        }
        let states = states as usize;
        if depth == 0 {
            // the empty history is the only state
            return Ok(vec![S::one()]);
        }
        let rows = self.lift_rows(depth)?;
        let half = S::lit(0.5);
        let tol = S::iteration_tolerance();
        let mut pi = vec![S::one() / S::from_count(states as u64); states];
        let mut next = vec![S::zero(); states];
        for _ in 0..LIFT_MAX_ITERATIONS {
            step(&pi, &rows, k, &mut next);
            let tv: S = pi.iter().zip(&next).map(|(a, b)| (*a - *b).abs()).sum::<S>() * half;
            if tv < tol {
                return Ok(next);
            }
            for (p, q) in pi.iter_mut().zip(&next) {
                *p = (*p + *q) * half;
            }
        }
        Err(ModelError::LiftDidNotConverge(LIFT_MAX_ITERATIONS))
    }

    /// Conditional distribution for every lifted state.
    fn lift_rows(&self, depth: usize) -> Result<Vec<&[S]>, ModelError> {
        let k = self.alphabet().size();
        let states = k.pow(depth as u32);
        let mut history = vec![0 as Symbol; depth];
        (0..states)
            .map(|idx| {
                decode_state(idx, k, &mut history);
                self.conditional(&history)
            })
            .collect()
    }
}

fn decode_state(mut idx: usize, k: usize, history: &mut [Symbol]) {
    for slot in history.iter_mut().rev() {
        *slot = (idx % k) as Symbol;
        idx /= k;
    }
}

/// One lifted transition: history `h` moves to `h[1..] a` with probability `P(a|h)`.
fn step<S: Scalar>(pi: &[S], rows: &[&[S]], k: usize, out: &mut [S]) {
    let states = pi.len();
    out.iter_mut().for_each(|x| *x = S::zero());
    for (idx, (&mass, row)) in pi.iter().zip(rows).enumerate() {
        if mass == S::zero() {
            continue;
        }
        let shifted = (idx * k) % states;
        for (a, &p) in row.iter().enumerate() {
            out[shifted + a] = out[shifted + a] + mass * p;
        }
    }
}

/// Compiled sampler for a model: a suffix trie over the contexts plus cumulative
/// distributions, with the stationary lift computed once.
#[derive(Debug, Clone)]
pub struct Simulator {
    alphabet: Alphabet,
    depth: usize,
    /// child index per (node, symbol); `u32::MAX` = none
    children: Vec<u32>,
    /// leaf row per node, `u32::MAX` for internal nodes
    leaf_row: Vec<u32>,
    cumulative: Vec<Vec<f64>>,
    /// cumulative stationary law of the lift, when available
    initial: Option<Vec<f64>>,
}

/// Burn-in used when the exact stationary lift is unavailable.
pub fn burn_in_steps(depth: usize) -> usize {
    10 * depth + 1000
}

impl Simulator {
    pub fn new<S: Scalar>(model: &VlmcModel<S>) -> Result<Self, ModelError> {
        model.ensure_valid()?;
        let alphabet = model.alphabet().clone();
        let k = alphabet.size();
        let mut sorted: Vec<Word> = model.tree().node_set().iter().cloned().collect();
        sorted.sort();
        let index: HashMap<&Word, u32> = sorted.iter().enumerate().map(|(i, w)| (w, i as u32)).collect();
        let mut children = vec![u32::MAX; sorted.len() * k];
        let mut leaf_row = vec![u32::MAX; sorted.len()];
        let mut cumulative = Vec::new();
        for (i, w) in sorted.iter().enumerate() {
            if let Some(parent) = w.parent() {
                children[index[&parent] as usize * k + w[0] as usize] = i as u32;
            }
            if let Some(p) = model.probs().get(w) {
                leaf_row[i] = cumulative.len() as u32;
                let mut acc = 0.0;
                cumulative.push(
                    p.iter()
                        .map(|x| {
                            acc += x.as_f64();
                            acc
                        })
                        .collect(),
                );
            }
        }
        let initial = match model.stationary_lift() {
            Ok(pi) => {
                let mut acc = 0.0;
                Some(
                    pi.iter()
                        .map(|x| {
                            acc += x.as_f64();
                            acc
                        })
                        .collect(),
                )
            }
            Err(ModelError::LiftTooLarge(_)) | Err(ModelError::LiftDidNotConverge(_)) => None,
            Err(e) => return Err(e),
        };
        Ok(Simulator {
            alphabet,
            depth: model.depth(),
            children,
            leaf_row,
            cumulative,
            initial,
        })
    }

    /// Whether paths start from the exact stationary lift (otherwise burn-in is used).
    pub fn has_exact_start(&self) -> bool {
        self.initial.is_some()
    }

    fn next_symbol(&self, history: &[Symbol], rng: &mut ChaCha8Rng) -> Symbol {
        let k = self.alphabet.size();
        let mut node = 0usize;
        let mut pos = history.len();
        while self.leaf_row[node] == u32::MAX {
            pos -= 1;
            node = self.children[node * k + history[pos] as usize] as usize;
        }
        draw(&self.cumulative[self.leaf_row[node] as usize], rng)
    }

    /// A path of length `n`, fully determined by `(seed, stream)`.
    pub fn sample(&self, n: usize, seed: u64, stream: u64) -> Sample {
        let k = self.alphabet.size();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let mut history: Vec<Symbol> = vec![0; self.depth];
        let burn_in = match &self.initial {
            Some(cdf) => {
                decode_state(draw_index(cdf, &mut rng), k, &mut history);
                0
            }
            None => {
                for h in history.iter_mut() {
                    *h = rng.gen_range(0..k) as Symbol;
                }
                burn_in_steps(self.depth)
            }
        };
        let start = history.len() + burn_in;
        history.reserve(burn_in + n);
        for _ in 0..burn_in + n {
            let next = self.next_symbol(&history, &mut rng);
            history.push(next);
        }
        Sample::new(self.alphabet.clone(), history.split_off(start)).expect("symbols come from the alphabet")
    }
}

fn draw_index(cdf: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total = *cdf.last().expect("nonempty distribution");
    let u: f64 = rng.gen::<f64>() * total;
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

fn draw(cdf: &[f64], rng: &mut ChaCha8Rng) -> Symbol {
    draw_index(cdf, rng) as Symbol
}

/// Simulates `n` symbols from `model` with generator stream 0 of `seed`.
pub fn sample_path<S: Scalar>(model: &VlmcModel<S>, n: usize, seed: u64) -> Result<Sample, ModelError> {
    Ok(Simulator::new(model)?.sample(n, seed, 0))
}
