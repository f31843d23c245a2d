//! Text persistence for ensembles.
//!
//! ```text
//! gbdt 1
//! task multiclass 3        (or: task binary)
//! features 120
//! rounds 60
//! learning_rate 0.1
//! base -1.09 -1.10 -1.09
//! tree 0 0 7               (round, class, node count; preorder nodes follow)
//! S 17 0.25 4              (split: feature, threshold, right child index)
//! L -0.031                 (leaf value)
//! ```
//!
//! Floats are written in shortest round-trip form, so a reloaded model
//! predicts bit-identically.

use std::io::{BufRead, Write};
use std::path::Path;

use super::{BoostedEnsemble, Node, Task, Tree};
use crate::error::{Error, Result};
use crate::format::{float, LineReader};

impl BoostedEnsemble {
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "gbdt 1")?;
        match self.task {
            Task::Multiclass(c) => writeln!(w, "task multiclass {c}")?,
            Task::Binary => writeln!(w, "task binary")?,
        }
        writeln!(w, "features {}", self.n_features)?;
        writeln!(w, "rounds {}", self.rounds.len())?;
        writeln!(w, "learning_rate {}", float(self.learning_rate))?;
        let base: Vec<String> = self.base_scores.iter().map(|b| float(*b)).collect();
        writeln!(w, "base {}", base.join(" "))?;
        for (i, round) in self.rounds.iter().enumerate() {
            for (k, tree) in round.iter().enumerate() {
                writeln!(w, "tree {i} {k} {}", tree.nodes.len())?;
                for node in &tree.nodes {
                    match node {
                        Node::Split {
                            feature,
                            threshold,
                            right,
                        } => writeln!(w, "S {feature} {} {right}", float(*threshold))?,
                        Node::Leaf { value } => writeln!(w, "L {}", float(*value))?,
                    }
                }
            }
        }
        Ok(())
    }

    pub(crate) fn read_from<R: BufRead>(r: &mut LineReader<R>) -> Result<Self> {
        let version: u32 = r.keyed_one("gbdt")?;
        if version != 1 {
            return Err(r.error(format!("unsupported model version {version}")));
        }
        let task_fields = r.keyed("task")?;
        let task = match task_fields.as_slice() {
            [kind] if kind == "binary" => Task::Binary,
            [kind, c] if kind == "multiclass" => Task::Multiclass(r.parse("task", c)?),
            _ => return Err(r.error("field `task`: expected `binary` or `multiclass <C>`")),
        };
        let n_features: usize = r.keyed_one("features")?;
        let n_rounds: usize = r.keyed_one("rounds")?;
        let learning_rate: f64 = r.keyed_one("learning_rate")?;
        let base_scores = r
            .keyed("base")?
            .iter()
            .map(|b| r.parse::<f64>("base", b))
            .collect::<Result<Vec<_>>>()?;
        let per_round = task.trees_per_round();
        let mut rounds = Vec::with_capacity(n_rounds);
        for i in 0..n_rounds {
            let mut round = Vec::with_capacity(per_round);
            for k in 0..per_round {
                let header = r.keyed("tree")?;
                let ids: Vec<usize> = header
                    .iter()
                    .map(|v| r.parse::<usize>("tree", v))
                    .collect::<Result<_>>()?;
                if ids.len() != 3 || ids[0] != i || ids[1] != k {
                    return Err(r.error(format!("expected `tree {i} {k} <count>`")));
                }
                let start = r.line_no();
                let mut nodes = Vec::with_capacity(ids[2]);
                for _ in 0..ids[2] {
                    let line = r.require_line("a tree node")?;
                    let parts: Vec<&str> = line.split_whitespace().collect();
                    let node = match parts.as_slice() {
                        ["S", f, t, right] => Node::Split {
                            feature: r.parse("feature", f)?,
                            threshold: r.parse("threshold", t)?,
                            right: r.parse("right", right)?,
                        },
                        ["L", v] => Node::Leaf {
                            value: r.parse("value", v)?,
                        },
                        _ => {
                            return Err(r.error(
                                "expected `S <feature> <threshold> <right>` or `L <value>`",
                            ))
                        }
                    };
                    nodes.push(node);
                }
                let tree = Tree::from_preorder(nodes)
                    .map_err(|m| r.error_at(start, format!("tree {i} {k}: {m}")))?;
                round.push(tree);
            }
            rounds.push(round);
        }
        BoostedEnsemble::from_parts(task, learning_rate, base_scores, rounds, n_features)
            .map_err(|m| r.error(m))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = LineReader::new(path, std::io::BufReader::new(file));
        Self::read_from(&mut reader)
    }
}
