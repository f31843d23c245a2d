use rayon::prelude::*;

use super::{sigmoid, BoostedEnsemble, Node, ProbVector, Task, Tree};
use crate::error::{Error, Result};
use crate::textvec::SparseVector;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub task: Task,
    pub rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// L2 penalty on leaf values, added to the Hessian sum.
    pub l2: f64,
}

impl TrainConfig {
    pub fn multiclass(n_classes: usize) -> Self {
        TrainConfig {
            task: Task::Multiclass(n_classes),
            ..Self::binary()
        }
    }

    pub fn binary() -> Self {
        TrainConfig {
            task: Task::Binary,
            rounds: 60,
            learning_rate: 0.1,
            max_depth: 4,
            min_samples_leaf: 20,
            l2: 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::invalid("rounds must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::invalid("learning rate must lie in (0, 1]"));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::invalid("min_samples_leaf must be at least 1"));
        }
        if self.l2.is_nan() || self.l2 < 0.0 {
            return Err(Error::invalid("l2 must be non-negative"));
        }
        if let Task::Multiclass(c) = self.task {
            if c < 2 {
                return Err(Error::invalid("multiclass task needs at least 2 classes"));
            }
        }
        Ok(())
    }
}

/// Trains an ensemble on sparse rows.
pub fn train(xs: &[SparseVector], ys: &[usize], config: &TrainConfig) -> Result<BoostedEnsemble> {
    train_with_history(xs, ys, config).map(|(model, _)| model)
}

/// Like [`train`], also returning the mean training log-loss after each
/// number of rounds: entry 0 is the base score alone, entry `i` follows round `i`.
pub fn train_with_history(
    xs: &[SparseVector],
    ys: &[usize],
    config: &TrainConfig,
) -> Result<(BoostedEnsemble, Vec<f64>)> {
    config.validate()?;
    if xs.len() != ys.len() {
        return Err(Error::invalid(format!(
            "{} rows but {} labels",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::invalid("training needs at least 2 samples"));
    }
    let n_classes = config.task.n_classes();
    let mut counts = vec![0usize; n_classes];
    for &y in ys {
        if y >= n_classes {
            return Err(Error::invalid(format!("label {y} outside 0..{n_classes}")));
        }
        counts[y] += 1;
    }
    if let Some(missing) = counts.iter().position(|&c| c == 0) {
        return Err(Error::invalid(format!(
            "class {missing} never appears in the training labels"
        )));
    }

    let n = xs.len();
    let n_features = xs
        .iter()
        .filter_map(|x| x.entries().last().map(|e| e.0 as usize + 1))
        .max()
        .unwrap_or(0);
    let columns = Columns::build(xs, n_features);
    let k = config.task.trees_per_round();
    let base_scores: Vec<f64> = match config.task {
        Task::Multiclass(_) => counts.iter().map(|&c| (c as f64 / n as f64).ln()).collect(),
        Task::Binary => {
            let p = counts[1] as f64 / n as f64;
            vec![(p / (1.0 - p)).ln()]
        }
    };

    let mut scores: Vec<f64> = (0..n).flat_map(|_| base_scores.iter().copied()).collect();
    let mut history = vec![log_loss(&scores, ys, config.task)];
    let mut rounds = Vec::with_capacity(config.rounds);
    let builder = TreeBuilder {
        columns: &columns,
        xs,
        config,
    };
    let mut probs = vec![0.0; n * k];
    for _ in 0..config.rounds {
        fill_probabilities(&scores, config.task, &mut probs);
        let fitted: Vec<(Tree, Vec<f64>)> = (0..k)
            .into_par_iter()
            .map(|class| {
                let (grad, hess) = gradients(&probs, ys, class, k, config.task);
                builder.build(&grad, &hess)
            })
            .collect();
        let mut round = Vec::with_capacity(k);
        for (class, (tree, leaf_of_row)) in fitted.into_iter().enumerate() {
            for (r, leaf) in leaf_of_row.iter().enumerate() {
                scores[r * k + class] += config.learning_rate * leaf;
            }
            round.push(tree);
        }
        rounds.push(round);
        history.push(log_loss(&scores, ys, config.task));
    }
    let model = BoostedEnsemble::from_parts(
        config.task,
        config.learning_rate,
        base_scores,
        rounds,
        n_features,
    )
    .map_err(Error::Numeric)?;
    Ok((model, history))
}

fn fill_probabilities(scores: &[f64], task: Task, probs: &mut [f64]) {
    match task {
        Task::Binary => {
            for (p, s) in probs.iter_mut().zip(scores) {
                *p = sigmoid(*s);
            }
        }
        Task::Multiclass(k) => {
            for (row_p, row_s) in probs.chunks_mut(k).zip(scores.chunks(k)) {
                row_p.copy_from_slice(ProbVector::softmax(row_s).as_slice());
            }
        }
    }
}

fn gradients(
    probs: &[f64],
    ys: &[usize],
    class: usize,
    k: usize,
    task: Task,
) -> (Vec<f64>, Vec<f64>) {
    let n = ys.len();
    let mut grad = Vec::with_capacity(n);
    let mut hess = Vec::with_capacity(n);
    for (r, &y) in ys.iter().enumerate() {
        let p = probs[r * k + class];
        let target = match task {
            Task::Binary => (y == 1) as u8 as f64,
            Task::Multiclass(_) => (y == class) as u8 as f64,
        };
        grad.push(p - target);
        hess.push((p * (1.0 - p)).max(1e-16));
    }
    (grad, hess)
}

fn log_loss(scores: &[f64], ys: &[usize], task: Task) -> f64 {
    let k = task.trees_per_round();
    let total: f64 = ys
        .iter()
        .enumerate()
        .map(|(r, &y)| {
            let row = &scores[r * k..(r + 1) * k];
            let p = match task {
                Task::Binary => ProbVector::logistic(row[0]).as_slice()[y],
                Task::Multiclass(_) => ProbVector::softmax(row).as_slice()[y],
            };
            -p.max(1e-300).ln()
        })
        .sum();
    total / ys.len() as f64
}

/// Per-feature nonzero entries sorted by (value, row). Zeros are implicit.
struct Columns {
    values: Vec<Vec<f64>>,
    rows: Vec<Vec<u32>>,
    /// Number of negative entries, which sort before the implicit zeros.
    n_negative: Vec<usize>,
}

impl Columns {
    fn build(xs: &[SparseVector], n_features: usize) -> Self {
        let mut entries: Vec<Vec<(f64, u32)>> = vec![Vec::new(); n_features];
        for (r, x) in xs.iter().enumerate() {
            for &(f, v) in x.entries() {
                if v != 0.0 {
                    entries[f as usize].push((v, r as u32));
                }
            }
        }
        let mut values = Vec::with_capacity(n_features);
        let mut rows = Vec::with_capacity(n_features);
        let mut n_negative = Vec::with_capacity(n_features);
        for mut col in entries {
            col.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            n_negative.push(col.partition_point(|e| e.0 < 0.0));
            values.push(col.iter().map(|e| e.0).collect());
            rows.push(col.iter().map(|e| e.1).collect());
        }
        Columns {
            values,
            rows,
            n_negative,
        }
    }

    fn n_features(&self) -> usize {
        self.values.len()
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: u32,
    threshold: f64,
}

impl Candidate {
    /// Higher gain wins; ties go to the lower feature, then the lower threshold.
    fn beats(&self, other: &Candidate) -> bool {
        self.gain > other.gain
            || (self.gain == other.gain
                && (self.feature < other.feature
                    || (self.feature == other.feature && self.threshold < other.threshold)))
    }
}

fn keep_better(best: &mut Option<Candidate>, cand: Candidate) {
    match best {
        Some(b) if !cand.beats(b) => {}
        _ => *best = Some(cand),
    }
}

/// Split point strictly between `lo < hi` that sends `lo` left and `hi` right.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid >= hi {
        lo
    } else {
        mid
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Stats {
    g: f64,
    h: f64,
    n: usize,
}

/// Gradient, Hessian and open-node slot of one training row.
#[derive(Debug, Clone, Copy)]
struct RowInfo {
    g: f64,
    h: f64,
    slot: u16,
}

const NO_SLOT: u16 = u16::MAX;
const MIN_GAIN: f64 = 1e-12;

struct TreeBuilder<'a> {
    columns: &'a Columns,
    xs: &'a [SparseVector],
    config: &'a TrainConfig,
}

enum Pending {
    Open,
    Leaf,
    Split {
        feature: u32,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

struct ArenaNode {
    stats: Stats,
    depth: usize,
    state: Pending,
}

impl TreeBuilder<'_> {
    fn leaf_value(&self, s: Stats) -> f64 {
        -s.g / (s.h + self.config.l2)
    }

    fn node_score(&self, g: f64, h: f64) -> f64 {
        g * g / (h + self.config.l2)
    }

    /// Grows one tree level by level and returns it with each training
    /// row's leaf value.
    fn build(&self, grad: &[f64], hess: &[f64]) -> (Tree, Vec<f64>) {
        let n = grad.len();
        let cfg = self.config;
        let root = Stats {
            g: grad.iter().sum(),
            h: hess.iter().sum(),
            n,
        };
        let mut arena = vec![ArenaNode {
            stats: root,
            depth: 0,
            state: Pending::Open,
        }];
        let mut node_of_row = vec![0usize; n];
        let mut frontier = vec![0usize];

        while !frontier.is_empty() {
            let mut active = Vec::new();
            for &id in &frontier {
                let node = &mut arena[id];
                if node.depth >= cfg.max_depth || node.stats.n < 2 * cfg.min_samples_leaf {
                    node.state = Pending::Leaf;
                } else {
                    active.push(id);
                }
            }
            if active.is_empty() {
                break;
            }
            let mut slot_of_node = vec![NO_SLOT; arena.len()];
            for (s, &id) in active.iter().enumerate() {
                slot_of_node[id] = s as u16;
            }
            let rows: Vec<RowInfo> = node_of_row
                .iter()
                .zip(grad.iter().zip(hess))
                .map(|(&id, (&g, &h))| RowInfo {
                    g,
                    h,
                    slot: slot_of_node[id],
                })
                .collect();
            let totals: Vec<Stats> = active.iter().map(|&id| arena[id].stats).collect();
            let best = self.best_splits(&rows, &totals);

            let mut next_frontier = Vec::new();
            for (s, &id) in active.iter().enumerate() {
                match best[s] {
                    Some(c) if c.gain > MIN_GAIN => {
                        let depth = arena[id].depth + 1;
                        let left = arena.len();
                        let right = left + 1;
                        for _ in 0..2 {
                            arena.push(ArenaNode {
                                stats: Stats::default(),
                                depth,
                                state: Pending::Open,
                            });
                        }
                        arena[id].state = Pending::Split {
                            feature: c.feature,
                            threshold: c.threshold,
                            left,
                            right,
                        };
                        next_frontier.push(left);
                        next_frontier.push(right);
                    }
                    _ => arena[id].state = Pending::Leaf,
                }
            }
            for (r, node) in node_of_row.iter_mut().enumerate() {
                if let Pending::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } = arena[*node].state
                {
                    *node = if self.xs[r].get(feature) <= threshold {
                        left
                    } else {
                        right
                    };
                    let st = &mut arena[*node].stats;
                    st.g += grad[r];
                    st.h += hess[r];
                    st.n += 1;
                }
            }
            frontier = next_frontier;
        }

        let leaf_values: Vec<f64> = arena
            .iter()
            .map(|node| match node.state {
                Pending::Split { .. } => 0.0,
                _ => self.leaf_value(node.stats),
            })
            .collect();
        let per_row = node_of_row.iter().map(|&id| leaf_values[id]).collect();
        let mut nodes = Vec::with_capacity(arena.len());
        emit_preorder(&arena, &leaf_values, 0, &mut nodes);
        let tree = Tree::from_preorder(nodes).expect("builder emits a valid preorder tree");
        (tree, per_row)
    }

    fn best_splits(&self, rows: &[RowInfo], totals: &[Stats]) -> Vec<Option<Candidate>> {
        const CHUNK: usize = 512;
        let n_features = self.columns.n_features();
        let parent: Vec<f64> = totals.iter().map(|t| self.node_score(t.g, t.h)).collect();
        let partial: Vec<Vec<Option<Candidate>>> = (0..n_features.div_ceil(CHUNK))
            .into_par_iter()
            .map(|chunk| {
                let mut scan = Scan::new(totals.len());
                let mut best = vec![None; totals.len()];
                let end = ((chunk + 1) * CHUNK).min(n_features);
                for f in chunk * CHUNK..end {
                    self.scan_feature(f, rows, totals, &parent, &mut scan, &mut best);
                }
                best
            })
            .collect();
        let mut best = vec![None; totals.len()];
        for chunk in partial {
            for (b, c) in best.iter_mut().zip(chunk) {
                if let Some(c) = c {
                    keep_better(b, c);
                }
            }
        }
        best
    }

    fn scan_feature(
        &self,
        f: usize,
        info: &[RowInfo],
        totals: &[Stats],
        parent: &[f64],
        scan: &mut Scan,
        best: &mut [Option<Candidate>],
    ) {
        let values = &self.columns.values[f];
        let rows = &self.columns.rows[f];
        if values.is_empty() {
            return;
        }
        let min_leaf = self.config.min_samples_leaf;
        let l2 = self.config.l2;
        let feature = f as u32;
        let consider = |best: &mut Option<Candidate>, s: usize, left: Stats, threshold: f64| {
            let t = totals[s];
            let n_right = t.n - left.n;
            if left.n < min_leaf || n_right < min_leaf {
                return;
            }
            let (gr, hr) = (t.g - left.g, t.h - left.h);
            let gain = left.g * left.g / (left.h + l2) + gr * gr / (hr + l2) - parent[s];
            keep_better(
                best,
                Candidate {
                    gain,
                    feature,
                    threshold,
                },
            );
        };

        let split = self.columns.n_negative[f];
        // Negatives, ascending: accumulate the left side.
        scan.reset();
        for i in 0..split {
            let row = info[rows[i] as usize];
            if row.slot == NO_SLOT {
                continue;
            }
            let s = row.slot as usize;
            let v = values[i];
            if scan.acc[s].n > 0 && v > scan.last[s] {
                consider(&mut best[s], s, scan.acc[s], midpoint(scan.last[s], v));
            }
            scan.push(s, v, row.g, row.h);
        }
        let negative = scan.acc.clone();
        let max_negative = scan.last.clone();

        // Positives, descending: accumulate the right side.
        scan.reset();
        for i in (split..values.len()).rev() {
            let row = info[rows[i] as usize];
            if row.slot == NO_SLOT {
                continue;
            }
            let s = row.slot as usize;
            let v = values[i];
            if scan.acc[s].n > 0 && v < scan.last[s] {
                let t = totals[s];
                let acc = scan.acc[s];
                let left = Stats {
                    g: t.g - acc.g,
                    h: t.h - acc.h,
                    n: t.n - acc.n,
                };
                consider(&mut best[s], s, left, midpoint(v, scan.last[s]));
            }
            scan.push(s, v, row.g, row.h);
        }

        // Boundaries around the implicit zero block.
        for s in 0..totals.len() {
            let t = totals[s];
            let neg = negative[s];
            let pos = scan.acc[s];
            let zeros = t.n - neg.n - pos.n;
            let all_but_pos = Stats {
                g: t.g - pos.g,
                h: t.h - pos.h,
                n: t.n - pos.n,
            };
            if zeros > 0 {
                if neg.n > 0 {
                    consider(&mut best[s], s, neg, midpoint(max_negative[s], 0.0));
                }
                if pos.n > 0 {
                    consider(&mut best[s], s, all_but_pos, midpoint(0.0, scan.last[s]));
                }
            } else if neg.n > 0 && pos.n > 0 {
                consider(
                    &mut best[s],
                    s,
                    neg,
                    midpoint(max_negative[s], scan.last[s]),
                );
            }
        }
    }
}

/// Scratch accumulators for one feature sweep.
struct Scan {
    acc: Vec<Stats>,
    last: Vec<f64>,
}

impl Scan {
    fn new(n_slots: usize) -> Self {
        Scan {
            acc: vec![Stats::default(); n_slots],
            last: vec![f64::NAN; n_slots],
        }
    }

    fn reset(&mut self) {
        self.acc.fill(Stats::default());
        self.last.fill(f64::NAN);
    }

    #[inline]
    fn push(&mut self, s: usize, v: f64, g: f64, h: f64) {
        let a = &mut self.acc[s];
        a.g += g;
        a.h += h;
        a.n += 1;
        self.last[s] = v;
    }
}

fn emit_preorder(arena: &[ArenaNode], leaf_values: &[f64], id: usize, out: &mut Vec<Node>) {
    match arena[id].state {
        Pending::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            let at = out.len();
            out.push(Node::Leaf { value: 0.0 });
            emit_preorder(arena, leaf_values, left, out);
            let right_at = out.len() as u32;
            emit_preorder(arena, leaf_values, right, out);
            out[at] = Node::Split {
                feature,
                threshold,
                right: right_at,
            };
        }
        _ => out.push(Node::Leaf {
            value: leaf_values[id],
        }),
    }
}
