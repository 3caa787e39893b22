//! Occurrence counts over all strings seen in a sample, stored as a trie grown by
//! prepending symbols (the child of `w` under `b` is `bw`).
//!
//! For a node `w` the trie keeps `N_{n-1}(w)`, the number of occurrences of `w` in
//! `X_1 .. X_{n-1}`, and for every symbol `a` the successor count `N_n(wa)`. Windows
//! overlap and never wrap around. The root always exists with count `n`.
//!
//! Nodes with count at most `prune_floor` are kept but their children are not
//! materialized; queries that would descend below such a node report
//! [`CountQuery::Pruned`].

use std::fmt::Write as _;

use thiserror::Error;

use crate::scalar::Scalar;
use crate::sequence::{Alphabet, Sample, Symbol, Word};

const NONE: u32 = u32::MAX;

#[derive(Debug, Error, PartialEq)]
pub enum CountsError {
    #[error("string {0:?} does not occur in the sample prefix")]
    Unobserved(Word),
    #[error("string {0:?} lies below a pruned node")]
    Pruned(Word),
    #[error("enumeration floor {floor} is below the trie's prune floor {prune_floor}")]
    FloorBelowPrune { floor: f64, prune_floor: f64 },
    #[error("symbol {0} is not in the alphabet")]
    BadSymbol(Symbol),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(u32);

impl NodeId {
    pub const ROOT: NodeId = NodeId(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Result of a count query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountQuery {
    Exact(u64),
    /// The string lies below a node whose children were pruned; its count is at most
    /// `upper_bound` (the count of that node).
    Pruned { upper_bound: u64 },
}

impl CountQuery {
    pub fn exact(self) -> Option<u64> {
        match self {
            CountQuery::Exact(n) => Some(n),
            CountQuery::Pruned { .. } => None,
        }
    }
}

/// Outcome of walking the trie towards a string.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lookup {
    Found(NodeId),
    Absent,
    /// Walk stopped at a pruned node.
    Pruned(NodeId),
}

#[derive(Debug, Clone)]
pub struct CountsTrie {
    alphabet: Alphabet,
    n: usize,
    prune_floor: f64,
    counts: Vec<u64>,
    successors: Vec<u64>,
    children: Vec<u32>,
    parent: Vec<u32>,
    symbol: Vec<Symbol>,
    depth: Vec<u32>,
}

impl CountsTrie {
    /// Builds the trie for `sample`, expanding every node whose count exceeds `prune_floor`.
    pub fn build(sample: &Sample, prune_floor: f64) -> Self {
        let prune_floor = if prune_floor.is_finite() {
            prune_floor.max(0.0)
        } else {
            f64::MAX
        };
        let k = sample.alphabet().size();
        let x = sample.symbols();
        let n = x.len();
        assert!(n < u32::MAX as usize, "sample too long for 32-bit positions");

        let mut trie = CountsTrie {
            alphabet: sample.alphabet().clone(),
            n,
            prune_floor,
            counts: Vec::new(),
            successors: Vec::new(),
            children: Vec::new(),
            parent: Vec::new(),
            symbol: Vec::new(),
            depth: Vec::new(),
        };

        // An occurrence of w is identified by the index j of the symbol that follows it,
        // so w = x[j-|w| .. j] and j ranges over 0..n.
        let root_positions: Vec<u32> = (0..n as u32).collect();
        let root = trie.push_node(NONE, 0, 0, &root_positions, x);
        let mut stack = vec![(root, root_positions)];
        let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); k];
        while let Some((node, positions)) = stack.pop() {
            if (trie.counts[node as usize] as f64) <= prune_floor {
                continue;
            }
            let len = trie.depth[node as usize] as usize;
            for &j in &positions {
                let j = j as usize;
                if j > len {
                    buckets[x[j - len - 1] as usize].push(j as u32);
                }
            }
            drop(positions);
            for (b, bucket) in buckets.iter_mut().enumerate().rev() {
                if bucket.is_empty() {
                    continue;
                }
                let child_positions = std::mem::take(bucket);
                let child = trie.push_node(node, b as Symbol, len as u32 + 1, &child_positions, x);
                trie.children[node as usize * k + b] = child;
                stack.push((child, child_positions));
            }
        }
        trie
    }

    fn push_node(&mut self, parent: u32, b: Symbol, depth: u32, positions: &[u32], x: &[Symbol]) -> u32 {
        let k = self.alphabet.size();
        let id = self.counts.len() as u32;
        self.counts.push(positions.len() as u64);
        let base = self.successors.len();
        self.successors.resize(base + k, 0);
        for &j in positions {
            self.successors[base + x[j as usize] as usize] += 1;
        }
        self.children.resize(self.children.len() + k, NONE);
        self.parent.push(parent);
        self.symbol.push(b);
        self.depth.push(depth);
        id
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// Sample length `n`.
    pub fn sample_len(&self) -> usize {
        self.n
    }

    pub fn prune_floor(&self) -> f64 {
        self.prune_floor
    }

    pub fn node_count(&self) -> usize {
        self.counts.len()
    }

    pub fn root(&self) -> NodeId {
        NodeId::ROOT
    }

    /// `N_{n-1}(w)` for a materialized node.
    pub fn count(&self, node: NodeId) -> u64 {
        self.counts[node.index()]
    }

    /// `N_n(wa)` for every `a`, in alphabet order.
    pub fn successors(&self, node: NodeId) -> &[u64] {
        let k = self.alphabet.size();
        &self.successors[node.index() * k..(node.index() + 1) * k]
    }

    pub fn depth(&self, node: NodeId) -> usize {
        self.depth[node.index()] as usize
    }

    /// Whether the node's children were materialized.
    pub fn is_expanded(&self, node: NodeId) -> bool {
        (self.count(node) as f64) > self.prune_floor
    }

    /// The node `bw` for node `w`, if it occurs (and `w` was expanded).
    pub fn child(&self, node: NodeId, b: Symbol) -> Option<NodeId> {
        let id = self.children[node.index() * self.alphabet.size() + b as usize];
        (id != NONE).then_some(NodeId(id))
    }

    pub fn child_nodes(&self, node: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        let k = self.alphabet.size();
        self.children[node.index() * k..(node.index() + 1) * k]
            .iter()
            .filter(|&&c| c != NONE)
            .map(|&c| NodeId(c))
    }

    /// Reconstructs the string of a node.
    pub fn word(&self, node: NodeId) -> Word {
        let mut out = Vec::with_capacity(self.depth(node));
        let mut cur = node.0;
        while cur != 0 {
            out.push(self.symbol[cur as usize]);
            cur = self.parent[cur as usize];
        }
        Word::from(out)
    }

    /// Walks from the root by prepending the symbols of `w`, most recent first.
    pub fn lookup(&self, w: &[Symbol]) -> Lookup {
        if w.len() > self.n {
            return Lookup::Absent;
        }
        let mut node = NodeId::ROOT;
        for &b in w.iter().rev() {
            if !self.alphabet.contains(b) {
                return Lookup::Absent;
            }
            if !self.is_expanded(node) {
                return Lookup::Pruned(node);
            }
            match self.child(node, b) {
                Some(c) => node = c,
                None => return Lookup::Absent,
            }
        }
        Lookup::Found(node)
    }

    /// `N_{n-1}(w)`.
    pub fn nn(&self, w: &[Symbol]) -> CountQuery {
        match self.lookup(w) {
            Lookup::Found(node) => CountQuery::Exact(self.count(node)),
            Lookup::Absent => CountQuery::Exact(0),
            Lookup::Pruned(node) => CountQuery::Pruned {
                upper_bound: self.count(node),
            },
        }
    }

    fn observed(&self, w: &[Symbol]) -> Result<NodeId, CountsError> {
        match self.lookup(w) {
            Lookup::Found(node) => Ok(node),
            Lookup::Absent => Err(CountsError::Unobserved(Word::from(w))),
            Lookup::Pruned(_) => Err(CountsError::Pruned(Word::from(w))),
        }
    }

    /// Empirical transition probability `N_n(wa) / N_{n-1}(w)`.
    pub fn hat_p<S: Scalar>(&self, w: &[Symbol], a: Symbol) -> Result<S, CountsError> {
        if !self.alphabet.contains(a) {
            return Err(CountsError::BadSymbol(a));
        }
        let node = self.observed(w)?;
        Ok(self.hat_p_node(node, a))
    }

    pub fn hat_p_node<S: Scalar>(&self, node: NodeId, a: Symbol) -> S {
        S::from_count(self.successors(node)[a as usize]) / S::from_count(self.count(node))
    }

    /// The occurring one-symbol extensions `bw` of `w`.
    pub fn children(&self, w: &[Symbol]) -> Result<Vec<Word>, CountsError> {
        match self.lookup(w) {
            Lookup::Found(node) if self.is_expanded(node) => {
                Ok(self.child_nodes(node).map(|c| self.word(c)).collect())
            }
            Lookup::Found(_) | Lookup::Pruned(_) => Err(CountsError::Pruned(Word::from(w))),
            Lookup::Absent => Ok(Vec::new()),
        }
    }

    /// Every proper extension `sw` (`|s| >= 1`) of `w` with `N_{n-1}(sw) > floor`, in
    /// depth-first order.
    pub fn proper_extensions(&self, w: &[Symbol], floor: f64) -> Result<Vec<NodeId>, CountsError> {
        if floor < self.prune_floor {
            return Err(CountsError::FloorBelowPrune {
                floor,
                prune_floor: self.prune_floor,
            });
        }
        match self.lookup(w) {
            Lookup::Found(node) => {
                let mut out = Vec::new();
                self.for_each_extension(node, floor, |id| out.push(id));
                Ok(out)
            }
            // A pruned ancestor has count <= prune_floor <= floor, so nothing qualifies.
            Lookup::Absent | Lookup::Pruned(_) => Ok(Vec::new()),
        }
    }

    /// Visits proper descendants of `node` with count above `floor`.
    pub(crate) fn for_each_extension(&self, node: NodeId, floor: f64, mut visit: impl FnMut(NodeId)) {
        let mut stack: Vec<NodeId> = Vec::new();
        if self.is_expanded(node) {
            stack.extend(self.child_nodes(node));
        }
        while let Some(id) = stack.pop() {
            if (self.count(id) as f64) <= floor {
                continue;
            }
            visit(id);
            if self.is_expanded(id) {
                stack.extend(self.child_nodes(id));
            }
        }
    }

    /// Indented text listing of every node: word, `N_{n-1}`, successor counts.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let mut stack = vec![NodeId::ROOT];
        while let Some(id) = stack.pop() {
            let depth = self.depth(id);
            let word = self.word(id);
            let label = if word.is_empty() {
                "λ".to_owned()
            } else {
                self.alphabet.render_word(&word)
            };
            let succ: Vec<String> = self.successors(id).iter().map(u64::to_string).collect();
            let _ = writeln!(
                out,
                "{:indent$}{} {} [{}]",
                "",
                label,
                self.count(id),
                succ.join(" "),
                indent = 2 * depth
            );
            let mut kids: Vec<NodeId> = self.child_nodes(id).collect();
            kids.reverse();
            stack.extend(kids);
        }
        out
    }
}
