//! Pre-contact routing classifier trained on teacher labels.

mod embedding;

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

pub use embedding::{
    default_dim, fit_embeddings, CategoricalEmbedding, EmbeddingConfig, EmbeddingFit, EmbeddingNet,
    EmbeddingTable, TrainingSet, FALLBACK_LEVEL,
};

use crate::corpus::PreContactRecord;
use crate::error::{Error, Result};
use crate::format::{float, LineReader};
use crate::gbdt::{self, BoostedEnsemble, TrainConfig};
use crate::textvec::SparseVector;

pub const DEFAULT_LABEL_THRESHOLD: f64 = 0.8;
pub const DEFAULT_DECISION_THRESHOLD: f64 = 0.5;

/// `true` for scores at or above `threshold`.
pub fn make_labels(scores: &[f64], threshold: f64) -> Vec<bool> {
    scores.iter().map(|&q| q >= threshold).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub true_negatives: usize,
    /// `None` when nothing was predicted positive.
    pub precision: Option<f64>,
    /// `None` when no label is positive.
    pub recall: Option<f64>,
}

pub fn evaluate(predictions: &[bool], labels: &[bool]) -> Result<Evaluation> {
    if predictions.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} predictions but {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let mut counts = [[0usize; 2]; 2];
    for (&p, &y) in predictions.iter().zip(labels) {
        counts[p as usize][y as usize] += 1;
    }
    let [[tn, fn_], [fp, tp]] = counts;
    let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
    Ok(Evaluation {
        true_positives: tp,
        false_positives: fp,
        false_negatives: fn_,
        true_negatives: tn,
        precision: ratio(tp, tp + fp),
        recall: ratio(tp, tp + fn_),
    })
}

/// Column-wise standardization with training-set mean and population std.
/// Zero-variance columns map to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::invalid("numeric rows have different widths"));
        }
        let n = rows.len().max(1) as f64;
        let mean: Vec<f64> = (0..width)
            .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n)
            .collect();
        let std = (0..width)
            .map(|j| {
                let var = rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n;
                var.sqrt()
            })
            .collect();
        Ok(Standardizer { mean, std })
    }

    pub fn width(&self) -> usize {
        self.mean.len()
    }

    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| if *s > 0.0 { (x - m) / s } else { 0.0 })
            .collect()
    }
}

/// How categorical levels become numeric columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    Embedding,
    OneHot,
}

impl Encoding {
    pub fn name(self) -> &'static str {
        match self {
            Encoding::Embedding => "embedding",
            Encoding::OneHot => "onehot",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "embedding" => Some(Encoding::Embedding),
            "onehot" => Some(Encoding::OneHot),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudentConfig {
    pub encoding: Encoding,
    pub embedding: EmbeddingConfig,
    pub boosting: TrainConfig,
    /// Probability cut-off for a positive prediction.
    pub decision_threshold: f64,
}

impl Default for StudentConfig {
    fn default() -> Self {
        StudentConfig {
            encoding: Encoding::Embedding,
            embedding: EmbeddingConfig::default(),
            boosting: TrainConfig::binary(),
            decision_threshold: DEFAULT_DECISION_THRESHOLD,
        }
    }
}

/// Sorted distinct levels of each categorical column.
pub fn known_levels(records: &[PreContactRecord]) -> Vec<Vec<String>> {
    let width = records.first().map_or(0, |r| r.categorical.len());
    (0..width)
        .map(|j| {
            records
                .iter()
                .filter_map(|r| r.categorical.get(j).cloned())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect()
        })
        .collect()
}

fn check_widths(
    records: &[PreContactRecord],
    n_numeric: usize,
    n_categorical: usize,
) -> Result<()> {
    for r in records {
        if r.numeric.len() != n_numeric || r.categorical.len() != n_categorical {
            return Err(Error::invalid(format!(
                "record `{}` has {} numeric and {} categorical fields, expected {n_numeric} and {n_categorical}",
                r.contact_id,
                r.numeric.len(),
                r.categorical.len()
            )));
        }
    }
    Ok(())
}

/// Trains entity embeddings for the categorical columns of `records`.
pub fn fit_entity_embeddings(
    records: &[PreContactRecord],
    labels: &[bool],
    config: &EmbeddingConfig,
) -> Result<EmbeddingFit> {
    let n_numeric = records.first().map_or(0, |r| r.numeric.len());
    let levels = known_levels(records);
    check_widths(records, n_numeric, levels.len())?;
    let numeric: Vec<Vec<f64>> = records.iter().map(|r| r.numeric.clone()).collect();
    let standardizer = Standardizer::fit(&numeric)?;
    let numeric: Vec<Vec<f64>> = numeric.iter().map(|r| standardizer.transform(r)).collect();
    let rows: Vec<Vec<String>> = records.iter().map(|r| r.categorical.clone()).collect();
    fit_embeddings(&levels, &rows, &numeric, labels, config)
}

/// `[standardized numerics | level vectors]` for each record.
pub fn encode(
    records: &[PreContactRecord],
    standardizer: &Standardizer,
    table: &EmbeddingTable,
) -> Result<Vec<Vec<f64>>> {
    check_widths(records, standardizer.width(), table.features().len())?;
    Ok(records
        .par_iter()
        .map(|r| {
            let mut row = standardizer.transform(&r.numeric);
            row.reserve(table.width());
            for (f, level) in table.features().iter().zip(&r.categorical) {
                row.extend_from_slice(f.vector(level));
            }
            row
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudentModel {
    pub encoding: Encoding,
    pub standardizer: Standardizer,
    pub table: EmbeddingTable,
    pub ensemble: BoostedEnsemble,
    pub decision_threshold: f64,
}

pub const STUDENT_FILE: &str = "student.txt";
pub const EMBEDDINGS_FILE: &str = "embeddings.csv";
pub const STUDENT_MODEL_FILE: &str = "student.gbdt";

pub fn train_student(
    records: &[PreContactRecord],
    labels: &[bool],
    config: &StudentConfig,
) -> Result<StudentModel> {
    if records.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} records but {} labels",
            records.len(),
            labels.len()
        )));
    }
    if !(config.decision_threshold > 0.0 && config.decision_threshold < 1.0) {
        return Err(Error::invalid("decision threshold must lie in (0, 1)"));
    }
    let n_numeric = records.first().map_or(0, |r| r.numeric.len());
    let levels = known_levels(records);
    check_widths(records, n_numeric, levels.len())?;
    let numeric: Vec<Vec<f64>> = records.iter().map(|r| r.numeric.clone()).collect();
    let standardizer = Standardizer::fit(&numeric)?;
    let table = match config.encoding {
        Encoding::Embedding => fit_entity_embeddings(records, labels, &config.embedding)?.table,
        Encoding::OneHot => EmbeddingTable::one_hot(&levels)?,
    };
    let rows = encode(records, &standardizer, &table)?;
    let xs: Vec<SparseVector> = rows.iter().map(|r| SparseVector::from_dense(r)).collect();
    let ys: Vec<usize> = labels.iter().map(|&y| y as usize).collect();
    let boosting = TrainConfig {
        task: gbdt::Task::Binary,
        ..config.boosting.clone()
    };
    let ensemble = gbdt::train(&xs, &ys, &boosting)?;
    Ok(StudentModel {
        encoding: config.encoding,
        standardizer,
        table,
        ensemble,
        decision_threshold: config.decision_threshold,
    })
}

impl StudentModel {
    pub fn input_width(&self) -> usize {
        self.standardizer.width() + self.table.width()
    }

    pub fn predict_proba(&self, records: &[PreContactRecord]) -> Result<Vec<f64>> {
        let rows = encode(records, &self.standardizer, &self.table)?;
        Ok(rows
            .par_iter()
            .map(|r| self.ensemble.predict_positive(r.as_slice()))
            .collect())
    }

    pub fn predict(&self, records: &[PreContactRecord]) -> Result<Vec<bool>> {
        Ok(self
            .predict_proba(records)?
            .into_iter()
            .map(|p| p >= self.decision_threshold)
            .collect())
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        self.table.save(&dir.join(EMBEDDINGS_FILE))?;
        self.ensemble.save(&dir.join(STUDENT_MODEL_FILE))?;
        let path = dir.join(STUDENT_FILE);
        let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = std::io::BufWriter::new(file);
        let join = |xs: &[f64]| xs.iter().map(|x| float(*x)).collect::<Vec<_>>().join(" ");
        (|| {
            writeln!(w, "student 1")?;
            writeln!(w, "encoding {}", self.encoding.name())?;
            writeln!(w, "decision_threshold {}", float(self.decision_threshold))?;
            writeln!(w, "numeric {}", self.standardizer.width())?;
            writeln!(w, "mean {}", join(&self.standardizer.mean))?;
            writeln!(w, "std {}", join(&self.standardizer.std))?;
            writeln!(w, "embeddings {EMBEDDINGS_FILE}")?;
            writeln!(w, "model {STUDENT_MODEL_FILE}")?;
            w.flush()
        })()
        .map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(STUDENT_FILE);
        let file = std::fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
        let mut r = LineReader::new(&path, std::io::BufReader::new(file));
        let version: u32 = r.keyed_one("student")?;
        if version != 1 {
            return Err(r.error(format!("unsupported student version {version}")));
        }
        let raw: String = r.keyed_one("encoding")?;
        let encoding =
            Encoding::parse(&raw).ok_or_else(|| r.error(format!("unknown encoding `{raw}`")))?;
        let decision_threshold: f64 = r.keyed_one("decision_threshold")?;
        if !(decision_threshold > 0.0 && decision_threshold < 1.0) {
            return Err(r.error("field `decision_threshold` must lie in (0, 1)"));
        }
        let width: usize = r.keyed_one("numeric")?;
        let mut floats = |key: &str| -> Result<Vec<f64>> {
            let fields = r.keyed(key)?;
            let xs = fields
                .iter()
                .map(|f| r.parse::<f64>(key, f))
                .collect::<Result<Vec<_>>>()?;
            if xs.len() != width {
                return Err(r.error(format!("field `{key}` needs {width} values")));
            }
            Ok(xs)
        };
        let mean = floats("mean")?;
        let std = floats("std")?;
        let table_ref: String = r.keyed_one("embeddings")?;
        let model_ref: String = r.keyed_one("model")?;
        let table = EmbeddingTable::load(&dir.join(table_ref))?;
        let ensemble = BoostedEnsemble::load(&dir.join(&model_ref))?;
        let model = StudentModel {
            encoding,
            standardizer: Standardizer { mean, std },
            table,
            ensemble,
            decision_threshold,
        };
        if model.ensemble.n_features() > model.input_width() {
            return Err(Error::schema(
                dir.join(model_ref),
                1,
                format!(
                    "model uses {} features but the encoder produces {}",
                    model.ensemble.n_features(),
                    model.input_width()
                ),
            ));
        }
        Ok(model)
    }
}

/// Shuffled train/test index split; each half is returned in ascending order.
pub fn split_indices(n: usize, train_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
    let k = ((n as f64 * train_fraction).round() as usize).min(n);
    let (mut train, mut test) = (order[..k].to_vec(), order[k..].to_vec());
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Writes `contact_id,probability,predicted_label` rows.
pub fn save_predictions(
    path: &Path,
    ids: &[String],
    probabilities: &[f64],
    threshold: f64,
) -> Result<()> {
    if ids.len() != probabilities.len() {
        return Err(Error::invalid("ids and probabilities differ in length"));
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::io(path, e.into()))?;
    let io = |e: csv::Error| Error::io(path, e.into());
    w.write_record(["contact_id", "probability", "predicted_label"])
        .map_err(io)?;
    for (id, &p) in ids.iter().zip(probabilities) {
        w.write_record([
            id.as_str(),
            &float(p),
            if p >= threshold { "1" } else { "0" },
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_boundary_is_inclusive() {
        assert_eq!(
            make_labels(&[0.8, 0.79999, 0.95], 0.8),
            vec![true, false, true]
        );
    }

    #[test]
    fn evaluation_hand_counts() {
        let e = evaluate(&[true, true, false, true], &[true, false, false, true]).unwrap();
        assert_eq!(e.precision, Some(2.0 / 3.0));
        assert_eq!(e.recall, Some(1.0));
        let none = evaluate(&[false, false], &[true, false]).unwrap();
        assert_eq!(none.precision, None);
        assert_eq!(none.recall, Some(0.0));
        assert!(evaluate(&[true], &[]).is_err());
    }

    #[test]
    fn zero_variance_columns_standardize_to_zero() {
        let s = Standardizer::fit(&[vec![1.0, 3.0], vec![1.0, 5.0]]).unwrap();
        assert_eq!(s.transform(&[1.0, 4.0]), vec![0.0, 0.0]);
        assert_eq!(s.transform(&[7.0, 5.0]), vec![0.0, 1.0]);
    }

    #[test]
    fn one_hot_table_uses_unit_vectors_and_zero_fallback() {
        let t = EmbeddingTable::one_hot(&[vec!["a".into(), "b".into()]]).unwrap();
        let f = &t.features()[0];
        assert_eq!(f.vector("b"), &[0.0, 1.0]);
        assert_eq!(f.vector("zzz"), &[0.0, 0.0]);
        assert_eq!(t.width(), 2);
    }

    #[test]
    fn default_dims() {
        assert_eq!(default_dim(1), 1);
        assert_eq!(default_dim(3), 2);
        assert_eq!(default_dim(40), 16);
    }
}
