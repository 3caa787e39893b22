//! JSON file formats for trees, pattern trees and models.
//!
//! ```json
//! {"alphabet": ["0", "1"], "leaves": [["0", "0"], ["0", "1", "0"], ["1", "1", "0"], ["1"]]}
//! ```
//!
//! Leaves list their symbols oldest first: the leaf `["0","1","0"]` is the past
//! `... X_{-3} X_{-2} X_{-1} = 0, 1, 0`, read from the leaf towards the root. The empty
//! list is the root. A pattern file adds `"flags"`, one `"terminal"` or `"open"` per
//! leaf in the same order (omitted flags mean terminal). A model file adds `"probs"`,
//! mapping each rendered leaf string to its next-symbol probabilities in alphabet
//! order. Leaf strings are concatenated labels for single-character alphabets and
//! space-separated labels otherwise; the root is `""`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::sequence::{Alphabet, SequenceError, Word};
use crate::trees::{ContextTree, LeafFlag, PatternTree, TreeError};
use crate::vlmc::{ModelError, VlmcModel};

#[derive(Debug, Error)]
pub enum FileError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{flags} flags given for {leaves} leaves")]
    FlagCount { flags: usize, leaves: usize },
    #[error("model file has no \"probs\" entry")]
    MissingProbs,
    #[error("probability {0} is not representable")]
    BadProbability(f64),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TreeFile {
    pub alphabet: Vec<String>,
    pub leaves: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flags: Option<Vec<LeafFlag>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<BTreeMap<String, Vec<f64>>>,
}

impl TreeFile {
    fn parse_leaves(&self) -> Result<(Alphabet, Vec<Word>), FileError> {
        let alphabet = Alphabet::new(self.alphabet.iter().cloned())?;
        let leaves = self
            .leaves
            .iter()
            .map(|l| alphabet.word_from_labels(l))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((alphabet, leaves))
    }

    fn from_tree(tree: &ContextTree) -> Self {
        let a = tree.alphabet();
        TreeFile {
            alphabet: a.labels().to_vec(),
            leaves: tree.leaves().iter().map(|w| a.word_labels(w)).collect(),
            flags: None,
            probs: None,
        }
    }
}

pub fn tree_to_json(tree: &ContextTree) -> String {
    let mut s = serde_json::to_string_pretty(&TreeFile::from_tree(tree)).expect("serializable");
    s.push('\n');
    s
}

pub fn tree_from_json(text: &str) -> Result<ContextTree, FileError> {
    let file: TreeFile = serde_json::from_str(text)?;
    let (alphabet, leaves) = file.parse_leaves()?;
    Ok(ContextTree::from_leaves(&alphabet, leaves)?)
}

pub fn pattern_to_json(pattern: &PatternTree) -> String {
    let a = pattern.alphabet();
    let file = TreeFile {
        alphabet: a.labels().to_vec(),
        leaves: pattern.leaves().keys().map(|w| a.word_labels(w)).collect(),
        flags: Some(pattern.leaves().values().copied().collect()),
        probs: None,
    };
    let mut s = serde_json::to_string_pretty(&file).expect("serializable");
    s.push('\n');
    s
}

pub fn pattern_from_json(text: &str) -> Result<PatternTree, FileError> {
    let file: TreeFile = serde_json::from_str(text)?;
    let (alphabet, leaves) = file.parse_leaves()?;
    let flags = match &file.flags {
        Some(f) if f.len() != leaves.len() => {
            return Err(FileError::FlagCount {
                flags: f.len(),
                leaves: leaves.len(),
            })
        }
        Some(f) => f.clone(),
        None => vec![LeafFlag::Terminal; leaves.len()],
    };
    Ok(PatternTree::new(&alphabet, leaves.into_iter().zip(flags))?)
}

pub fn model_to_json<S: Scalar>(model: &VlmcModel<S>) -> String {
    let a = model.alphabet();
    let mut file = TreeFile::from_tree(model.tree());
    file.probs = Some(
        model
            .probs()
            .iter()
            .map(|(w, p)| (a.render_word(w), p.iter().map(|x| x.as_f64()).collect()))
            .collect(),
    );
    let mut s = serde_json::to_string_pretty(&file).expect("serializable");
    s.push('\n');
    s
}

/// Reads and validates a model.
pub fn model_from_json<S: Scalar>(text: &str) -> Result<VlmcModel<S>, FileError> {
    let file: TreeFile = serde_json::from_str(text)?;
    let (alphabet, leaves) = file.parse_leaves()?;
    let tree = ContextTree::from_leaves(&alphabet, leaves)?;
    let raw = file.probs.as_ref().ok_or(FileError::MissingProbs)?;
    let mut probs = BTreeMap::new();
    for (key, p) in raw {
        let w = alphabet.parse_word(key)?;
        let p = p
            .iter()
            .map(|&x| S::from_f64(x).ok_or(FileError::BadProbability(x)))
            .collect::<Result<Vec<S>, _>>()?;
        probs.insert(w, p);
    }
    Ok(VlmcModel::new(tree, probs)?)
}
