//! Gradient-boosted decision trees with per-round staged probabilities.
//!
//! Multiclass models grow one regression tree per class per round on the
//! softmax cross-entropy gradient; binary models grow one tree per round on
//! the logistic gradient. Leaves hold a single Newton step. A row goes left
//! at a split iff its feature value is `<= threshold`; absent sparse entries
//! read as zero.

mod io;
mod train;

use crate::textvec::SparseVector;

pub use train::{train, train_with_history, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Multiclass(usize),
    Binary,
}

impl Task {
    /// Number of trees grown per round.
    pub fn trees_per_round(self) -> usize {
        match self {
            Task::Multiclass(c) => c,
            Task::Binary => 1,
        }
    }

    /// Length of the probability vectors this task produces.
    pub fn n_classes(self) -> usize {
        match self {
            Task::Multiclass(c) => c,
            Task::Binary => 2,
        }
    }
}

/// Anything a tree can read feature values from.
pub trait FeatureRow {
    fn value(&self, feature: u32) -> f64;
}

impl FeatureRow for SparseVector {
    fn value(&self, feature: u32) -> f64 {
        self.get(feature)
    }
}

impl FeatureRow for [f64] {
    fn value(&self, feature: u32) -> f64 {
        self.get(feature as usize).copied().unwrap_or(0.0)
    }
}

impl FeatureRow for Vec<f64> {
    fn value(&self, feature: u32) -> f64 {
        self.as_slice().value(feature)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    /// Left child is the next node in preorder; `right` indexes the right child.
    Split {
        feature: u32,
        threshold: f64,
        right: u32,
    },
    Leaf {
        value: f64,
    },
}

/// A regression tree stored as a preorder node list.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(value: f64) -> Self {
        Tree {
            nodes: vec![Node::Leaf { value }],
        }
    }

    pub(crate) fn from_preorder(nodes: Vec<Node>) -> Result<Self, String> {
        fn check(nodes: &[Node], at: usize, depth: usize) -> Result<usize, String> {
            if depth > 64 {
                return Err("tree too deep".into());
            }
            match nodes.get(at) {
                None => Err(format!("node {at} missing")),
                Some(Node::Leaf { value }) if value.is_finite() => Ok(at + 1),
                Some(Node::Leaf { .. }) => Err(format!("node {at}: non-finite leaf")),
                Some(Node::Split {
                    threshold, right, ..
                }) => {
                    if !threshold.is_finite() {
                        return Err(format!("node {at}: non-finite threshold"));
                    }
                    let after_left = check(nodes, at + 1, depth + 1)?;
                    if *right as usize != after_left {
                        return Err(format!(
                            "node {at}: right child index {right} is not {after_left}"
                        ));
                    }
                    check(nodes, after_left, depth + 1)
                }
            }
        }
        let end = check(&nodes, 0, 0)?;
        if end != nodes.len() {
            return Err(format!("{} trailing nodes", nodes.len() - end));
        }
        Ok(Tree { nodes })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { right, .. } => {
                    1 + walk(nodes, at + 1).max(walk(nodes, right as usize))
                }
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn predict<R: FeatureRow + ?Sized>(&self, x: &R) -> f64 {
        let mut at = 0usize;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    right,
                } => {
                    at = if x.value(feature) <= threshold {
                        at + 1
                    } else {
                        right as usize
                    };
                }
            }
        }
    }
}

/// A probability distribution over classes.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    /// Checks that entries lie in [0, 1] and sum to 1 within 1e-9.
    pub fn new(p: Vec<f64>) -> Result<Self, String> {
        if p.is_empty() {
            return Err("empty probability vector".into());
        }
        if p.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err("probability outside [0, 1]".into());
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(format!("probabilities sum to {sum}"));
        }
        Ok(ProbVector(p))
    }

    pub fn uniform(n: usize) -> Self {
        ProbVector(vec![1.0 / n as f64; n])
    }

    /// Softmax of raw scores, shifted by the maximum for stability.
    pub fn softmax(scores: &[f64]) -> Self {
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        ProbVector(exps.into_iter().map(|e| e / total).collect())
    }

    /// `[1 - p, p]` with `p` the logistic of `score`.
    pub fn logistic(score: f64) -> Self {
        let p = sigmoid(score);
        ProbVector(vec![1.0 - p, p])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.0.iter().enumerate() {
            if p > self.0[best] {
                best = i;
            }
        }
        best
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoostedEnsemble {
    task: Task,
    learning_rate: f64,
    base_scores: Vec<f64>,
    /// `rounds[i][k]` is the tree for class `k` in round `i`.
    rounds: Vec<Vec<Tree>>,
    n_features: usize,
}

impl BoostedEnsemble {
    /// Assembles an ensemble from parts, checking that the tree grid is complete.
    pub fn from_parts(
        task: Task,
        learning_rate: f64,
        base_scores: Vec<f64>,
        rounds: Vec<Vec<Tree>>,
        n_features: usize,
    ) -> Result<Self, String> {
        let per_round = task.trees_per_round();
        if per_round == 0 {
            return Err("task has no classes".into());
        }
        if rounds.is_empty() {
            return Err("ensemble needs at least one round".into());
        }
        if !(learning_rate > 0.0 && learning_rate <= 1.0) {
            return Err(format!("learning rate {learning_rate} outside (0, 1]"));
        }
        if base_scores.len() != per_round || base_scores.iter().any(|b| !b.is_finite()) {
            return Err("base scores do not match the task".into());
        }
        if let Some(i) = rounds.iter().position(|r| r.len() != per_round) {
            return Err(format!("round {i} has an incomplete tree grid"));
        }
        Ok(BoostedEnsemble {
            task,
            learning_rate,
            base_scores,
            rounds,
            n_features,
        })
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn n_rounds(&self) -> usize {
        self.rounds.len()
    }

    pub fn n_classes(&self) -> usize {
        self.task.n_classes()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn base_scores(&self) -> &[f64] {
        &self.base_scores
    }

    pub fn rounds(&self) -> &[Vec<Tree>] {
        &self.rounds
    }

    fn to_prob(&self, scores: &[f64]) -> ProbVector {
        match self.task {
            Task::Multiclass(_) => ProbVector::softmax(scores),
            Task::Binary => ProbVector::logistic(scores[0]),
        }
    }

    /// Raw scores after each round, passed to `visit` in round order.
    fn accumulate<R: FeatureRow + ?Sized>(&self, x: &R, mut visit: impl FnMut(&[f64])) {
        let mut scores = self.base_scores.clone();
        for round in &self.rounds {
            for (s, tree) in scores.iter_mut().zip(round) {
                *s += self.learning_rate * tree.predict(x);
            }
            visit(&scores);
        }
    }

    pub fn raw_scores<R: FeatureRow + ?Sized>(&self, x: &R) -> Vec<f64> {
        let mut last = Vec::new();
        self.accumulate(x, |s| {
            last.clear();
            last.extend_from_slice(s);
        });
        last
    }

    pub fn predict_proba<R: FeatureRow + ?Sized>(&self, x: &R) -> ProbVector {
        self.to_prob(&self.raw_scores(x))
    }

    /// Probability vectors using rounds `1..=i` for every `i` in `1..=M`.
    pub fn staged_predict_proba<R: FeatureRow + ?Sized>(&self, x: &R) -> Vec<ProbVector> {
        let mut out = Vec::with_capacity(self.rounds.len());
        self.accumulate(x, |s| out.push(self.to_prob(s)));
        out
    }

    /// Positive-class probability of a binary model.
    pub fn predict_positive<R: FeatureRow + ?Sized>(&self, x: &R) -> f64 {
        self.predict_proba(x).as_slice()[self.n_classes() - 1]
    }
}
