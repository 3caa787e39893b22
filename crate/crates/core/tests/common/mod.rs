//! Brute-force oracles and random generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use ctxtree::{Alphabet, ContextTree, Sample, Symbol, VlmcModel, Word};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Overlapping occurrences of `w` in `x[..m]`.
pub fn window_count(x: &[Symbol], m: usize, w: &[Symbol]) -> u64 {
    if w.is_empty() {
        return m as u64;
    }
    if w.len() > m {
        return 0;
    }
    x[..m].windows(w.len()).filter(|win| *win == w).count() as u64
}

/// Every string with `N_{n-1}(w) > 0`, plus the empty string.
pub fn observed_strings(x: &[Symbol]) -> BTreeSet<Word> {
    let n = x.len();
    let mut out = BTreeSet::new();
    out.insert(Word::empty());
    for i in 0..n.saturating_sub(1) {
        for j in i + 1..n {
            out.insert(Word::from(x[i..j].to_vec()));
        }
    }
    out
}

/// Brackets of `w` over every observed proper extension, without any skip.
/// Returns `None` when no extension is observed.
pub fn brute_brackets(x: &[Symbol], k: usize, w: &[Symbol], c: f64) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = x.len();
    let radius_num = c * (n as f64).log2();
    let mut lower = vec![f64::NEG_INFINITY; k];
    let mut upper = vec![f64::INFINITY; k];
    let mut any = false;
    for sw in observed_strings(x) {
        if sw.len() <= w.len() || &sw[sw.len() - w.len()..] != w {
            continue;
        }
        let count = window_count(x, n - 1, &sw);
        any = true;
        for a in 0..k {
            let mut swa = sw.to_vec();
            swa.push(a as Symbol);
            let p = window_count(x, n, &swa) as f64 / count as f64;
            let r = radius_num / count as f64;
            lower[a] = lower[a].max(p - r);
            upper[a] = upper[a].min(p + r);
        }
    }
    any.then_some((lower, upper))
}

/// Whether some binary distribution on the `1/steps` grid fits the brackets, each
/// bound relaxed by `slack`.
pub fn grid_feasible(lower: &[f64], upper: &[f64], steps: u32, slack: f64) -> bool {
    assert_eq!(lower.len(), 2);
    (0..=steps).any(|i| {
        let q0 = i as f64 / steps as f64;
        let q = [q0, 1.0 - q0];
        (0..2).all(|a| q[a] >= lower[a] - slack && q[a] <= upper[a] + slack)
    })
}

pub fn random_sample(rng: &mut ChaCha8Rng, alphabet: &Alphabet, n: usize) -> Sample {
    let k = alphabet.size();
    let data = (0..n).map(|_| rng.gen_range(0..k) as Symbol).collect();
    Sample::new(alphabet.clone(), data).unwrap()
}

/// Random finite tree: suffix closure of a few random words.
pub fn random_tree(rng: &mut ChaCha8Rng, alphabet: &Alphabet, max_depth: usize) -> ContextTree {
    let k = alphabet.size();
    let mut nodes = BTreeSet::new();
    nodes.insert(Word::empty());
    for _ in 0..rng.gen_range(0..6) {
        let len = rng.gen_range(1..=max_depth);
        let w: Vec<Symbol> = (0..len).map(|_| rng.gen_range(0..k) as Symbol).collect();
        for i in 0..=w.len() {
            nodes.insert(Word::from(w[i..].to_vec()));
        }
    }
    ContextTree::from_node_set(alphabet, nodes.iter()).unwrap()
}

/// Random complete tree: leaves are split into all their children at random.
pub fn random_complete_tree(rng: &mut ChaCha8Rng, alphabet: &Alphabet, max_depth: usize) -> ContextTree {
    let k = alphabet.size();
    let mut leaves = vec![Word::empty()];
    let mut done = Vec::new();
    while let Some(w) = leaves.pop() {
        let split = w.len() < max_depth && rng.gen_bool(if w.is_empty() { 0.9 } else { 0.45 });
        if split {
            leaves.extend((0..k).map(|b| w.prepend(b as Symbol)));
        } else {
            done.push(w);
        }
    }
    ContextTree::from_leaves(alphabet, done).unwrap()
}

/// Random model on a random complete tree, with probabilities bounded away from 0.
pub fn random_model(rng: &mut ChaCha8Rng, alphabet: &Alphabet, max_depth: usize) -> VlmcModel<f64> {
    let tree = random_complete_tree(rng, alphabet, max_depth);
    let k = alphabet.size();
    let probs: BTreeMap<Word, Vec<f64>> = tree
        .leaves()
        .iter()
        .map(|w| {
            let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
            let total: f64 = raw.iter().sum();
            (w.clone(), raw.iter().map(|x| x / total).collect())
        })
        .collect();
    VlmcModel::new(tree, probs).unwrap()
}

/// The model used throughout: contexts 1, 00, 010, 110.
pub fn example_model() -> VlmcModel<f64> {
    let a = Alphabet::numeric(2).unwrap();
    let tree = ContextTree::from_leaves(
        &a,
        [vec![1], vec![0, 0], vec![0, 1, 0], vec![1, 1, 0]].map(Word::from),
    )
    .unwrap();
    let probs = [
        (vec![1], 0.2),
        (vec![0, 0], 0.5),
        (vec![0, 1, 0], 0.3),
        (vec![1, 1, 0], 0.7),
    ]
    .into_iter()
    .map(|(w, p0)| (Word::from(w), vec![p0, 1.0 - p0]))
    .collect();
    VlmcModel::new(tree, probs).unwrap()
}

pub fn uniform_iid() -> VlmcModel<f64> {
    VlmcModel::iid(&Alphabet::numeric(2).unwrap(), vec![0.5, 0.5]).unwrap()
}

pub fn cycle(k: usize, n: usize) -> Sample {
    let a = Alphabet::numeric(k).unwrap();
    Sample::new(a, (0..n).map(|i| (i % k) as Symbol).collect()).unwrap()
}

/// All binary samples of length `n`.
pub fn all_binary(n: usize) -> impl Iterator<Item = Vec<Symbol>> {
    (0u32..1 << n).map(move |bits| (0..n).map(|i| ((bits >> i) & 1) as Symbol).collect())
}
