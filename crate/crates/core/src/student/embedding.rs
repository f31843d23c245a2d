//! Learned dense vectors for categorical levels.
//!
//! The vectors come from a small logistic model trained by SGD:
//! `logit = b + w · [numerics | e_0(level_0) | e_1(level_1) | ...]`.
//! Each feature also keeps a fallback vector for levels never seen in
//! training. During SGD a level is occasionally swapped for the fallback so
//! that the fallback learns an average effect instead of staying at its
//! random initialization.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::format::{csv_error, float};

/// Level name written for the fallback row. Loading relies on position
/// (the last row of each feature), not on this name.
pub const FALLBACK_LEVEL: &str = "<unseen>";

/// Default dimension for a feature with `cardinality` levels.
pub fn default_dim(cardinality: usize) -> usize {
    cardinality.div_ceil(2).clamp(1, 16)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalEmbedding {
    name: String,
    levels: Vec<String>,
    index: HashMap<String, usize>,
    /// One vector per level, then the fallback.
    vectors: Vec<Vec<f64>>,
}

impl CategoricalEmbedding {
    fn new(name: String, levels: Vec<String>, vectors: Vec<Vec<f64>>) -> Result<Self> {
        if vectors.len() != levels.len() + 1 {
            return Err(Error::invalid(format!(
                "feature `{name}`: {} levels need {} vectors, got {}",
                levels.len(),
                levels.len() + 1,
                vectors.len()
            )));
        }
        let dim = vectors[0].len();
        if dim == 0 || vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::invalid(format!(
                "feature `{name}`: ragged or empty vectors"
            )));
        }
        if vectors.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::invalid(format!(
                "feature `{name}`: non-finite vector entry"
            )));
        }
        let mut index = HashMap::with_capacity(levels.len());
        for (i, level) in levels.iter().enumerate() {
            if index.insert(level.clone(), i).is_some() {
                return Err(Error::invalid(format!(
                    "feature `{name}`: duplicate level `{level}`"
                )));
            }
        }
        Ok(CategoricalEmbedding {
            name,
            levels,
            index,
            vectors,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn levels(&self) -> &[String] {
        &self.levels
    }

    pub fn cardinality(&self) -> usize {
        self.levels.len()
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn level_index(&self, level: &str) -> Option<usize> {
        self.index.get(level).copied()
    }

    /// The vector for `level`, or the fallback for an unseen level.
    pub fn vector(&self, level: &str) -> &[f64] {
        let i = self.level_index(level).unwrap_or(self.levels.len());
        &self.vectors[i]
    }

    pub fn fallback(&self) -> &[f64] {
        &self.vectors[self.levels.len()]
    }
}

/// Per-feature level vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    features: Vec<CategoricalEmbedding>,
}

impl EmbeddingTable {
    pub fn new(features: Vec<CategoricalEmbedding>) -> Self {
        EmbeddingTable { features }
    }

    /// Indicator vectors: level `k` maps to the `k`-th unit vector and unseen
    /// levels to all zeros.
    pub fn one_hot(levels: &[Vec<String>]) -> Result<Self> {
        let features = levels
            .iter()
            .enumerate()
            .map(|(j, lv)| {
                let card = lv.len();
                let mut vectors: Vec<Vec<f64>> = (0..card)
                    .map(|k| (0..card).map(|i| (i == k) as u8 as f64).collect())
                    .collect();
                vectors.push(vec![0.0; card.max(1)]);
                if card == 0 {
                    vectors = vec![vec![0.0]];
                }
                CategoricalEmbedding::new(feature_name(j), lv.clone(), vectors)
            })
            .collect::<Result<_>>()?;
        Ok(EmbeddingTable { features })
    }

    pub fn features(&self) -> &[CategoricalEmbedding] {
        &self.features
    }

    pub fn dims(&self) -> Vec<usize> {
        self.features.iter().map(|f| f.dim()).collect()
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.features.iter().map(|f| f.cardinality()).collect()
    }

    pub fn width(&self) -> usize {
        self.features.iter().map(|f| f.dim()).sum()
    }

    /// Writes `feature,level,v0..v{d-1}` rows. Features narrower than the
    /// widest leave their trailing cells empty.
    pub fn save(&self, path: &Path) -> Result<()> {
        let max_dim = self.features.iter().map(|f| f.dim()).max().unwrap_or(0);
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        let mut header = vec!["feature".to_string(), "level".to_string()];
        header.extend((0..max_dim).map(|k| format!("v{k}")));
        w.write_record(&header).map_err(|e| csv_error(path, e))?;
        for f in &self.features {
            let names = f.levels.iter().map(String::as_str).chain([FALLBACK_LEVEL]);
            for (level, v) in names.zip(&f.vectors) {
                let mut row = vec![f.name.clone(), level.to_string()];
                row.extend(v.iter().map(|x| float(*x)));
                row.resize(max_dim + 2, String::new());
                w.write_record(&row).map_err(|e| csv_error(path, e))?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
        let header = r.headers().map_err(|e| csv_error(path, e))?;
        if header.len() < 3 || &header[0] != "feature" || &header[1] != "level" {
            return Err(Error::schema(
                path,
                1,
                "expected header `feature,level,v0,...`",
            ));
        }
        // (name, levels, vectors) per feature; the last row of each is the fallback
        let mut groups: Vec<(String, Vec<String>, Vec<Vec<f64>>)> = Vec::new();
        let mut last_line = 1;
        for (i, rec) in r.records().enumerate() {
            let line = i + 2;
            last_line = line;
            let rec = rec.map_err(|e| Error::schema(path, line, e.to_string()))?;
            let v = rec
                .iter()
                .skip(2)
                .take_while(|c| !c.is_empty())
                .map(|c| c.parse::<f64>().ok().filter(|x| x.is_finite()))
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| Error::schema(path, line, "bad vector entry"))?;
            match groups.last_mut() {
                Some((name, levels, vectors)) if name.as_str() == &rec[0] => {
                    levels.push(rec[1].to_string());
                    vectors.push(v);
                }
                _ => {
                    if groups.iter().any(|g| g.0 == rec[0]) {
                        return Err(Error::schema(
                            path,
                            line,
                            format!("feature `{}` is not contiguous", &rec[0]),
                        ));
                    }
                    groups.push((rec[0].to_string(), vec![rec[1].to_string()], vec![v]));
                }
            }
        }
        let features = groups
            .into_iter()
            .map(|(name, mut levels, vectors)| {
                levels.pop();
                CategoricalEmbedding::new(name, levels, vectors)
                    .map_err(|e| Error::schema(path, last_line, e.to_string()))
            })
            .collect::<Result<_>>()?;
        Ok(EmbeddingTable { features })
    }
}

pub(crate) fn feature_name(j: usize) -> String {
    format!("c{j}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingConfig {
    /// Per-feature dimensions; `None` uses [`default_dim`].
    pub dims: Option<Vec<usize>>,
    pub epochs: usize,
    /// Initial SGD step; epoch `e` (from 0) uses `step_size / (1 + e)`.
    pub step_size: f64,
    /// Probability of swapping a level for the fallback during SGD.
    pub fallback_rate: f64,
    /// Standard deviation of the initial parameters.
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            dims: None,
            epochs: 8,
            step_size: 0.02,
            fallback_rate: 0.02,
            init_scale: 0.1,
            seed: 17,
        }
    }
}

/// Level indices and standardized numerics for each training row. A level
/// index equal to the feature's cardinality selects the fallback.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub levels: Vec<Vec<usize>>,
    pub numeric: Vec<Vec<f64>>,
    pub labels: Vec<bool>,
}

/// The logistic model whose first layer is the embedding lookup.
///
/// Parameters are stored flat: each feature's `(cardinality + 1) x dim`
/// matrix in turn, then the output weights over `[numerics | embeddings]`,
/// then the bias.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingNet {
    cards: Vec<usize>,
    dims: Vec<usize>,
    n_numeric: usize,
    table_offsets: Vec<usize>,
    weight_offset: usize,
    params: Vec<f64>,
}

impl EmbeddingNet {
    pub fn new<R: Rng>(
        cards: &[usize],
        dims: &[usize],
        n_numeric: usize,
        init_scale: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if cards.len() != dims.len() {
            return Err(Error::invalid(format!(
                "{} cardinalities but {} dimensions",
                cards.len(),
                dims.len()
            )));
        }
        if dims.contains(&0) {
            return Err(Error::invalid("embedding dimensions must be positive"));
        }
        let mut table_offsets = Vec::with_capacity(cards.len());
        let mut next = 0;
        for (&c, &d) in cards.iter().zip(dims) {
            table_offsets.push(next);
            next += (c + 1) * d;
        }
        let weight_offset = next;
        let n_params = weight_offset + n_numeric + dims.iter().sum::<usize>() + 1;
        let init = Normal::new(0.0, init_scale.max(0.0))
            .map_err(|e| Error::invalid(format!("init scale: {e}")))?;
        let params = (0..n_params).map(|_| init.sample(rng)).collect();
        Ok(EmbeddingNet {
            cards: cards.to_vec(),
            dims: dims.to_vec(),
            n_numeric,
            table_offsets,
            weight_offset,
            params,
        })
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::invalid(format!(
                "expected {} parameters, got {}",
                self.params.len(),
                params.len()
            )));
        }
        self.params.copy_from_slice(params);
        Ok(())
    }

    fn row_start(&self, j: usize, level: usize) -> usize {
        self.table_offsets[j] + level.min(self.cards[j]) * self.dims[j]
    }

    fn bias_index(&self) -> usize {
        self.params.len() - 1
    }

    pub fn logit(&self, levels: &[usize], numeric: &[f64]) -> f64 {
        let w = &self.params[self.weight_offset..];
        let mut z = self.params[self.bias_index()];
        z += numeric.iter().zip(w).map(|(x, wi)| x * wi).sum::<f64>();
        let mut k = self.n_numeric;
        for (j, &level) in levels.iter().enumerate() {
            let d = self.dims[j];
            let e = &self.params[self.row_start(j, level)..][..d];
            z += e.iter().zip(&w[k..k + d]).map(|(a, b)| a * b).sum::<f64>();
            k += d;
        }
        z
    }

    /// Mean cross-entropy over the set.
    pub fn loss(&self, data: &TrainingSet) -> f64 {
        let total: f64 = (0..data.labels.len())
            .map(|i| {
                cross_entropy(
                    self.logit(&data.levels[i], &data.numeric[i]),
                    data.labels[i],
                )
            })
            .sum();
        total / data.labels.len().max(1) as f64
    }

    /// Mean cross-entropy and its gradient with respect to [`Self::params`].
    pub fn loss_and_gradient(&self, data: &TrainingSet) -> (f64, Vec<f64>) {
        let n = data.labels.len().max(1) as f64;
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        for i in 0..data.labels.len() {
            let z = self.logit(&data.levels[i], &data.numeric[i]);
            loss += cross_entropy(z, data.labels[i]);
            let r = (crate::gbdt::sigmoid(z) - data.labels[i] as u8 as f64) / n;
            self.accumulate(&data.levels[i], &data.numeric[i], r, &mut grad);
        }
        (loss / n, grad)
    }

    /// Adds `r` times the gradient of the logit to `grad`.
    fn accumulate(&self, levels: &[usize], numeric: &[f64], r: f64, grad: &mut [f64]) {
        let wo = self.weight_offset;
        for (i, x) in numeric.iter().enumerate() {
            grad[wo + i] += r * x;
        }
        let mut k = self.n_numeric;
        for (j, &level) in levels.iter().enumerate() {
            let start = self.row_start(j, level);
            for t in 0..self.dims[j] {
                grad[wo + k + t] += r * self.params[start + t];
                grad[start + t] += r * self.params[wo + k + t];
            }
            k += self.dims[j];
        }
        let b = self.bias_index();
        grad[b] += r;
    }

    fn sgd_step(&mut self, levels: &[usize], numeric: &[f64], label: bool, step: f64) {
        let r = step * (crate::gbdt::sigmoid(self.logit(levels, numeric)) - label as u8 as f64);
        let wo = self.weight_offset;
        for (i, x) in numeric.iter().enumerate() {
            self.params[wo + i] -= r * x;
        }
        let mut k = self.n_numeric;
        for (j, &level) in levels.iter().enumerate() {
            let start = self.row_start(j, level);
            for t in 0..self.dims[j] {
                let e = self.params[start + t];
                let w = self.params[wo + k + t];
                self.params[wo + k + t] -= r * e;
                self.params[start + t] -= r * w;
            }
            k += self.dims[j];
        }
        let b = self.bias_index();
        self.params[b] -= r;
    }

    /// One vector per level plus the fallback, for feature `j`.
    fn vectors(&self, j: usize) -> Vec<Vec<f64>> {
        (0..=self.cards[j])
            .map(|level| self.params[self.row_start(j, level)..][..self.dims[j]].to_vec())
            .collect()
    }
}

/// `-[y ln p + (1 - y) ln(1 - p)]` for `p = sigmoid(z)`, computed stably.
fn cross_entropy(z: f64, label: bool) -> f64 {
    let softplus = z.max(0.0) + (-z.abs()).exp().ln_1p();
    softplus - if label { z } else { 0.0 }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingFit {
    pub table: EmbeddingTable,
    /// Training loss before the first epoch and after each epoch.
    pub epoch_losses: Vec<f64>,
}

/// Trains level vectors for the given categorical columns.
///
/// `levels[j]` lists the known levels of feature `j`; `rows[i][j]` is row
/// `i`'s level string; `numeric` holds standardized numerics.
pub fn fit_embeddings(
    levels: &[Vec<String>],
    rows: &[Vec<String>],
    numeric: &[Vec<f64>],
    labels: &[bool],
    config: &EmbeddingConfig,
) -> Result<EmbeddingFit> {
    if rows.len() != labels.len() || numeric.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} rows, {} numeric rows and {} labels",
            rows.len(),
            numeric.len(),
            labels.len()
        )));
    }
    if labels.len() < 2 || labels.iter().all(|&y| y) || labels.iter().all(|&y| !y) {
        return Err(Error::invalid(
            "embedding training needs both classes present",
        ));
    }
    if config.step_size.is_nan()
        || config.step_size <= 0.0
        || !(0.0..1.0).contains(&config.fallback_rate)
    {
        return Err(Error::invalid(
            "step size must be positive and fallback rate in [0, 1)",
        ));
    }
    let cards: Vec<usize> = levels.iter().map(Vec::len).collect();
    let dims = match &config.dims {
        Some(d) => d.clone(),
        None => cards.iter().map(|&c| default_dim(c)).collect(),
    };
    let n_numeric = numeric.first().map_or(0, Vec::len);
    let lookup: Vec<HashMap<&str, usize>> = levels
        .iter()
        .map(|lv| {
            lv.iter()
                .enumerate()
                .map(|(i, l)| (l.as_str(), i))
                .collect()
        })
        .collect();
    let indexed: Vec<Vec<usize>> = rows
        .iter()
        .map(|row| {
            if row.len() != levels.len() {
                return Err(Error::invalid(format!(
                    "row has {} categoricals, expected {}",
                    row.len(),
                    levels.len()
                )));
            }
            Ok(row
                .iter()
                .enumerate()
                .map(|(j, l)| lookup[j].get(l.as_str()).copied().unwrap_or(cards[j]))
                .collect())
        })
        .collect::<Result<_>>()?;
    let data = TrainingSet {
        levels: indexed,
        numeric: numeric.to_vec(),
        labels: labels.to_vec(),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut net = EmbeddingNet::new(&cards, &dims, n_numeric, config.init_scale, &mut rng)?;
    let mut order: Vec<usize> = (0..labels.len()).collect();
    let mut epoch_losses = vec![net.loss(&data)];
    let mut scratch = vec![0usize; cards.len()];
    for epoch in 0..config.epochs {
        let step = config.step_size / (1.0 + epoch as f64);
        order.shuffle(&mut rng);
        for &i in &order {
            for (j, s) in scratch.iter_mut().enumerate() {
                *s = if rng.random_bool(config.fallback_rate) {
                    cards[j]
                } else {
                    data.levels[i][j]
                };
            }
            net.sgd_step(&scratch, &data.numeric[i], data.labels[i], step);
        }
        epoch_losses.push(net.loss(&data));
    }
    if epoch_losses.iter().any(|l| !l.is_finite()) {
        return Err(Error::Numeric("embedding training diverged".into()));
    }
    let features = levels
        .iter()
        .enumerate()
        .map(|(j, lv)| CategoricalEmbedding::new(feature_name(j), lv.clone(), net.vectors(j)))
        .collect::<Result<_>>()?;
    Ok(EmbeddingFit {
        table: EmbeddingTable::new(features),
        epoch_losses,
    })
}
