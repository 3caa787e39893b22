//! Context-tree algebra.
//!
//! A tree is a set of leaves (finite strings, oldest symbol first) in which no leaf is
//! a proper suffix of another. Its node set holds every suffix of every leaf, the
//! empty word included. Trees are ordered by node-set inclusion, and the distance
//! between two trees is the weight of the symmetric difference of their node sets.
//!
//! Infinite hypothesis trees are described by a [`PatternTree`], whose leaves are either
//! terminal (nothing may extend past them) or open (the full infinite subtree below is
//! allowed).

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::sync::OnceLock;

use thiserror::Error;

use crate::scalar::Scalar;
use crate::sequence::{Alphabet, Symbol, Word};

#[derive(Debug, Error, PartialEq)]
pub enum TreeError {
    #[error("leaf {shorter:?} is a proper suffix of leaf {longer:?}")]
    SuffixViolation { shorter: Word, longer: Word },
    #[error("symbol {0} is not in the alphabet")]
    BadSymbol(Symbol),
    #[error("trees are over different alphabets")]
    AlphabetMismatch,
    #[error("exponential weight base must lie in (0, 1), got {0}")]
    BadBase(f64),
    #[error("weight table entries must be nonnegative")]
    NegativeWeight,
}

/// Finite context tree.
#[derive(Clone, Debug)]
pub struct ContextTree {
    alphabet: Alphabet,
    leaves: BTreeSet<Word>,
    nodes: OnceLock<HashSet<Word>>,
}

impl PartialEq for ContextTree {
    fn eq(&self, other: &Self) -> bool {
        self.alphabet == other.alphabet && self.leaves == other.leaves
    }
}

impl Eq for ContextTree {}

impl ContextTree {
    /// Validates a leaf set. The empty set gives the root-only tree.
    pub fn from_leaves<I>(alphabet: &Alphabet, leaves: I) -> Result<Self, TreeError>
    where
        I: IntoIterator<Item = Word>,
    {
        let mut set: BTreeSet<Word> = BTreeSet::new();
        for leaf in leaves {
            if let Some(&b) = leaf.iter().find(|&&b| !alphabet.contains(b)) {
                return Err(TreeError::BadSymbol(b));
            }
            set.insert(leaf);
        }
        if set.is_empty() {
            set.insert(Word::empty());
        }
        for leaf in &set {
            for k in 0..leaf.len() {
                let suffix = Word::from(leaf.suffix(k));
                if set.contains(&suffix) {
                    return Err(TreeError::SuffixViolation {
                        shorter: suffix,
                        longer: leaf.clone(),
                    });
                }
            }
        }
        Ok(ContextTree {
            alphabet: alphabet.clone(),
            leaves: set,
            nodes: OnceLock::new(),
        })
    }

    /// The tree whose only node is the empty word.
    pub fn root(alphabet: &Alphabet) -> Self {
        Self::from_leaves(alphabet, [Word::empty()]).expect("root tree is valid")
    }

    /// Builds a tree from a suffix-closed node set: the leaves are its maximal elements.
    pub fn from_node_set<'a, I>(alphabet: &Alphabet, nodes: I) -> Result<Self, TreeError>
    where
        I: IntoIterator<Item = &'a Word>,
    {
        let nodes: HashSet<&Word> = nodes.into_iter().collect();
        let mut internal: HashSet<Word> = HashSet::new();
        for w in &nodes {
            if let Some(p) = w.parent() {
                internal.insert(p);
            }
        }
        Self::from_leaves(
            alphabet,
            nodes.into_iter().filter(|w| !internal.contains(*w)).cloned(),
        )
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn leaves(&self) -> &BTreeSet<Word> {
        &self.leaves
    }

    /// Length of the longest leaf.
    pub fn depth(&self) -> usize {
        self.leaves.iter().map(Word::len).max().unwrap_or(0)
    }

    pub fn is_root(&self) -> bool {
        self.leaves.len() == 1 && self.leaves.iter().next().is_some_and(Word::is_empty)
    }

    /// All suffixes of all leaves, the empty word included.
    pub fn node_set(&self) -> &HashSet<Word> {
        self.nodes.get_or_init(|| {
            let mut nodes = HashSet::new();
            for leaf in &self.leaves {
                for k in (0..=leaf.len()).rev() {
                    // the set stays suffix-closed, so shorter suffixes are already in
                    if !nodes.insert(Word::from(leaf.suffix(k))) {
                        break;
                    }
                }
            }
            nodes
        })
    }

    /// Node set in breadth-first order.
    pub fn sorted_nodes(&self) -> Vec<Word> {
        let mut v: Vec<Word> = self.node_set().iter().cloned().collect();
        v.sort();
        v
    }

    pub fn contains_node(&self, w: &[Symbol]) -> bool {
        self.node_set().contains(&Word::from(w))
    }

    /// True iff no leaf can be replaced by its longest proper suffix without breaking the
    /// tree property.
    pub fn is_irreducible(&self) -> bool {
        self.leaves.iter().all(|leaf| match leaf.parent() {
            None => true,
            // parent is shared with another leaf iff some sibling branch is a node
            Some(parent) => (0..self.alphabet.size() as Symbol)
                .filter(|&b| b != leaf[0])
                .any(|b| self.node_set().contains(&parent.prepend(b))),
        })
    }

    /// Tree whose node set is the nodes of length at most `k`.
    pub fn truncate(&self, k: usize) -> ContextTree {
        let leaves: BTreeSet<Word> = self
            .leaves
            .iter()
            .map(|leaf| Word::from(leaf.suffix(k)))
            .collect();
        ContextTree {
            alphabet: self.alphabet.clone(),
            leaves,
            nodes: OnceLock::new(),
        }
    }

    /// `self ⪯ other`: every node of `self` is allowed by `other`.
    pub fn precedes<B: TreeBound + ?Sized>(&self, other: &B) -> Result<bool, TreeError> {
        Ok(self.first_excess_node(other)?.is_none())
    }

    /// The shortest node of `self` that `other` does not allow, if any.
    pub fn first_excess_node<B: TreeBound + ?Sized>(&self, other: &B) -> Result<Option<Word>, TreeError> {
        if self.alphabet != *other.alphabet() {
            return Err(TreeError::AlphabetMismatch);
        }
        // allowed sets are suffix-closed, so checking the nodes shortest-first finds the
        // minimal witness; checking leaves alone would decide the relation
        Ok(self.sorted_nodes().into_iter().find(|v| !other.allows(v)))
    }

    /// Weighted Hamming distance: total weight of the symmetric difference of node sets.
    pub fn hamming<S: Scalar>(&self, other: &ContextTree, phi: &WeightFunction<S>) -> Result<S, TreeError> {
        if self.alphabet != other.alphabet {
            return Err(TreeError::AlphabetMismatch);
        }
        let a = self.node_set();
        let b = other.node_set();
        let mut diff: Vec<&Word> = a.symmetric_difference(b).collect();
        // fixed summation order keeps results reproducible
        diff.sort();
        Ok(diff.into_iter().map(|v| phi.weight(v)).sum())
    }

    /// Graphviz rendering with the root at the top and one edge per symbol.
    pub fn to_dot(&self) -> String {
        let nodes = self.sorted_nodes();
        let ids: HashMap<&Word, usize> = nodes.iter().enumerate().map(|(i, w)| (w, i)).collect();
        let mut out = String::from("digraph context_tree {\n  rankdir=TB;\n  node [shape=circle, label=\"\"];\n");
        for (i, w) in nodes.iter().enumerate() {
            let shape = if self.leaves.contains(w) {
                "doublecircle"
            } else {
                "circle"
            };
            let title = if w.is_empty() {
                "λ".to_owned()
            } else {
                self.alphabet.render_word(w)
            };
            let _ = writeln!(out, "  n{i} [shape={shape}, tooltip=\"{}\"];", escape(&title));
        }
        for w in &nodes {
            if let Some(parent) = w.parent() {
                let _ = writeln!(
                    out,
                    "  n{} -> n{} [label=\"{}\"];",
                    ids[&parent],
                    ids[w],
                    escape(self.alphabet.label(w[0]))
                );
            }
        }
        out.push_str("}\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Something a finite tree can be compared against with `⪯`.
pub trait TreeBound {
    fn alphabet(&self) -> &Alphabet;
    /// Whether `node` is a node of the (possibly infinite) tree.
    fn allows(&self, node: &[Symbol]) -> bool;
}

impl TreeBound for ContextTree {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn allows(&self, node: &[Symbol]) -> bool {
        self.contains_node(node)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LeafFlag {
    /// A finite context; no node may extend past it.
    Terminal,
    /// Every extension below is permitted.
    Open,
}

/// Finite description of a possibly infinite tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternTree {
    alphabet: Alphabet,
    leaves: BTreeMap<Word, LeafFlag>,
    internal: HashSet<Word>,
}

impl PatternTree {
    pub fn new<I>(alphabet: &Alphabet, leaves: I) -> Result<Self, TreeError>
    where
        I: IntoIterator<Item = (Word, LeafFlag)>,
    {
        let leaves: BTreeMap<Word, LeafFlag> = leaves.into_iter().collect();
        // reuse the leaf validation of finite trees
        let shape = ContextTree::from_leaves(alphabet, leaves.keys().cloned())?;
        let leaves = if leaves.is_empty() {
            BTreeMap::from([(Word::empty(), LeafFlag::Terminal)])
        } else {
            leaves
        };
        let internal = shape
            .node_set()
            .iter()
            .filter(|w| !leaves.contains_key(*w))
            .cloned()
            .collect();
        Ok(PatternTree {
            alphabet: alphabet.clone(),
            leaves,
            internal,
        })
    }

    /// The tree of all left-infinite sequences (root open).
    pub fn infinite(alphabet: &Alphabet) -> Self {
        Self::new(alphabet, [(Word::empty(), LeafFlag::Open)]).expect("valid")
    }

    /// The root-only tree (root terminal).
    pub fn root(alphabet: &Alphabet) -> Self {
        Self::new(alphabet, [(Word::empty(), LeafFlag::Terminal)]).expect("valid")
    }

    /// A finite tree viewed as a pattern with all leaves terminal.
    pub fn from_tree(tree: &ContextTree) -> Self {
        Self::new(
            tree.alphabet(),
            tree.leaves().iter().map(|w| (w.clone(), LeafFlag::Terminal)),
        )
        .expect("finite trees are valid patterns")
    }

    /// The tree with the single finite context `context`; every other branch at the
    /// same depth is open.
    pub fn single_context(alphabet: &Alphabet, context: &Word) -> Result<Self, TreeError> {
        let mut leaves = vec![(context.clone(), LeafFlag::Terminal)];
        for (i, _) in context.iter().enumerate() {
            let suffix = Word::from(context.suffix(i));
            for b in 0..alphabet.size() as Symbol {
                if b != context[context.len() - i - 1] {
                    leaves.push((suffix.prepend(b), LeafFlag::Open));
                }
            }
        }
        Self::new(alphabet, leaves)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn leaves(&self) -> &BTreeMap<Word, LeafFlag> {
        &self.leaves
    }
}

impl TreeBound for PatternTree {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn allows(&self, node: &[Symbol]) -> bool {
        for k in 0..=node.len() {
            let u = Word::from(&node[node.len() - k..]);
            match self.leaves.get(&u) {
                Some(LeafFlag::Open) => return true,
                Some(LeafFlag::Terminal) => return k == node.len(),
                None if self.internal.contains(&u) => continue,
                None => return false,
            }
        }
        true
    }
}

/// Weights `φ(v)` for the Hamming tree distance.
#[derive(Clone, Debug, PartialEq)]
pub enum WeightFunction<S: Scalar> {
    /// `φ(v) = base^|v|`.
    Exponential { base: S },
    /// `φ(v) = 1` for `|v| <= depth`, else 0.
    Truncation { depth: usize },
    /// Explicit finite table; unlisted strings weigh 0.
    Table(HashMap<Word, S>),
}

impl<S: Scalar> WeightFunction<S> {
    pub fn exponential(base: S) -> Result<Self, TreeError> {
        if !(base > S::zero() && base < S::one()) {
            return Err(TreeError::BadBase(base.as_f64()));
        }
        Ok(WeightFunction::Exponential { base })
    }

    pub fn table(entries: HashMap<Word, S>) -> Result<Self, TreeError> {
        if entries.values().any(|&v| !(v >= S::zero())) {
            return Err(TreeError::NegativeWeight);
        }
        Ok(WeightFunction::Table(entries))
    }

    pub fn weight(&self, v: &[Symbol]) -> S {
        match self {
            WeightFunction::Exponential { base } => base.powi(v.len() as i32),
            WeightFunction::Truncation { depth } => {
                if v.len() <= *depth {
                    S::one()
                } else {
                    S::zero()
                }
            }
            WeightFunction::Table(t) => t.get(&Word::from(v)).copied().unwrap_or_else(S::zero),
        }
    }

    /// Whether `Σ_{v ∈ A*} φ(v)` is finite for an alphabet of the given size.
    pub fn is_summable(&self, alphabet_size: usize) -> bool {
        match self {
            WeightFunction::Exponential { base } => *base * S::from_count(alphabet_size as u64) < S::one(),
            WeightFunction::Truncation { .. } | WeightFunction::Table(_) => true,
        }
    }

    /// Parses `exp:<base>` or `trunc:<depth>`.
    pub fn parse(spec: &str) -> Option<Self> {
        let (kind, arg) = spec.split_once(':')?;
        match kind.trim() {
            "exp" => {
                let base: f64 = arg.trim().parse().ok()?;
                Self::exponential(S::from_f64(base)?).ok()
            }
            "trunc" => Some(WeightFunction::Truncation {
                depth: arg.trim().parse().ok()?,
            }),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bin() -> Alphabet {
        Alphabet::parse("0,1").unwrap()
    }

    fn tree(a: &Alphabet, leaves: &[&str]) -> ContextTree {
        ContextTree::from_leaves(a, leaves.iter().map(|s| a.parse_word(s).unwrap())).unwrap()
    }

    fn words(a: &Alphabet, ws: &[&str]) -> Vec<Word> {
        let mut v: Vec<Word> = ws.iter().map(|s| a.parse_word(s).unwrap()).collect();
        v.sort();
        v
    }

    #[test]
    fn from_leaves_validation() {
        let a = bin();
        let t1 = tree(&a, &["00", "010", "110", "1"]);
        assert_eq!(t1.leaves().len(), 4);
        let err = ContextTree::from_leaves(&a, words(&a, &["0", "00"])).unwrap_err();
        assert_eq!(
            err,
            TreeError::SuffixViolation {
                shorter: a.parse_word("0").unwrap(),
                longer: a.parse_word("00").unwrap()
            }
        );
        let root = ContextTree::from_leaves(&a, Vec::new()).unwrap();
        assert!(root.is_root());
        assert_eq!(root.sorted_nodes(), vec![Word::empty()]);
        assert_eq!(
            ContextTree::from_leaves(&a, [Word::from(vec![2])]).unwrap_err(),
            TreeError::BadSymbol(2)
        );
    }

    #[test]
    fn node_sets() {
        let a = bin();
        let t1 = tree(&a, &["00", "010", "110", "1"]);
        assert_eq!(
            t1.sorted_nodes(),
            words(&a, &["", "0", "1", "00", "10", "010", "110"])
        );
        let ab = Alphabet::parse("a,b").unwrap();
        assert_eq!(tree(&ab, &["ab"]).sorted_nodes(), words(&ab, &["", "b", "ab"]));
    }

    #[test]
    fn irreducibility() {
        let a = bin();
        assert!(tree(&a, &["00", "010", "110", "1"]).is_irreducible());
        assert!(!tree(&a, &["000", "010", "110", "1"]).is_irreducible());
        assert!(ContextTree::root(&a).is_irreducible());
        assert!(!tree(&a, &["01"]).is_irreducible());
    }

    #[test]
    fn order_against_trees_and_patterns() {
        let a = bin();
        let t1 = tree(&a, &["00", "010", "110", "1"]);
        assert!(ContextTree::root(&a).precedes(&t1).unwrap());
        assert!(!t1.precedes(&ContextTree::root(&a)).unwrap());

        // renewal tree {1, 10, 100, ...} ∪ {0^∞} up to depth 3, zero branch left open
        let renewal = PatternTree::new(
            &a,
            [
                (a.parse_word("1").unwrap(), LeafFlag::Terminal),
                (a.parse_word("10").unwrap(), LeafFlag::Terminal),
                (a.parse_word("100").unwrap(), LeafFlag::Terminal),
                (a.parse_word("000").unwrap(), LeafFlag::Open),
            ],
        )
        .unwrap();
        assert!(!t1.precedes(&renewal).unwrap());
        assert_eq!(
            t1.first_excess_node(&renewal).unwrap(),
            Some(a.parse_word("010").unwrap())
        );
        assert!(tree(&a, &["1", "10", "100", "0000"]).precedes(&renewal).unwrap());

        let five = Alphabet::parse("0,1,2,3,4").unwrap();
        let tau0 = PatternTree::single_context(&five, &five.parse_word("2").unwrap()).unwrap();
        let bad = tree(&five, &["0", "1", "02", "12", "32", "42", "22", "3", "4"]);
        assert!(!bad.precedes(&tau0).unwrap());
        assert_eq!(bad.first_excess_node(&tau0).unwrap(), Some(five.parse_word("02").unwrap()));
        let good = tree(&five, &["00", "10", "1", "2", "3", "4"]);
        assert!(good.precedes(&tau0).unwrap());

        assert!(t1.precedes(&PatternTree::infinite(&a)).unwrap());
        assert!(!t1.precedes(&PatternTree::root(&a)).unwrap());
        assert!(ContextTree::root(&a).precedes(&PatternTree::root(&a)).unwrap());
        assert_eq!(
            t1.precedes(&ContextTree::root(&five)).unwrap_err(),
            TreeError::AlphabetMismatch
        );
    }

    #[test]
    fn truncation() {
        let a = bin();
        let t1 = tree(&a, &["00", "010", "110", "1"]);
        assert_eq!(t1.truncate(2), tree(&a, &["1", "00", "10"]));
        assert!(t1.truncate(0).is_root());
        assert_eq!(t1.truncate(3), t1);
        assert_eq!(t1.truncate(7), t1);
    }

    #[test]
    fn hamming_examples() {
        let a = bin();
        let t1 = tree(&a, &["00", "010", "110", "1"]);
        let phi = WeightFunction::exponential(0.5f64).unwrap();
        assert_eq!(t1.hamming(&t1, &phi).unwrap(), 0.0);
        assert_eq!(t1.hamming(&ContextTree::root(&a), &phi).unwrap(), 1.75);
        let trunc = WeightFunction::<f64>::Truncation { depth: 2 };
        assert_eq!(t1.hamming(&ContextTree::root(&a), &trunc).unwrap(), 4.0);
    }

    #[test]
    fn weight_functions() {
        assert!(WeightFunction::exponential(0.25f64).unwrap().is_summable(2));
        assert!(WeightFunction::exponential(0.25f64).unwrap().is_summable(3));
        assert!(!WeightFunction::exponential(0.5f64).unwrap().is_summable(2));
        assert!(WeightFunction::exponential(1.0f64).is_err());
        assert_eq!(
            WeightFunction::<f64>::parse("exp:0.25"),
            Some(WeightFunction::Exponential { base: 0.25 })
        );
        assert_eq!(
            WeightFunction::<f32>::parse("trunc:3"),
            Some(WeightFunction::Truncation { depth: 3 })
        );
        assert_eq!(WeightFunction::<f64>::parse("exp:2"), None);
        let table = WeightFunction::table(HashMap::from([(Word::from(vec![1]), 2.0f64)])).unwrap();
        assert_eq!(table.weight(&[1]), 2.0);
        assert_eq!(table.weight(&[0]), 0.0);
    }

    #[test]
    fn dot_export() {
        let a = bin();
        let dot = tree(&a, &["0", "1"]).to_dot();
        assert!(dot.starts_with("digraph context_tree {"));
        assert!(dot.contains("n0 -> n1 [label=\"0\"]"));
        assert!(dot.contains("n0 -> n2 [label=\"1\"]"));
    }
}
