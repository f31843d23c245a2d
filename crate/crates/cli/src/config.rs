//! Pipeline configuration read from a TOML file.

use std::path::{Path, PathBuf};

use complexity_core::corpus::CorpusConfig;
use complexity_core::gbdt::TrainConfig;
use complexity_core::student::{EmbeddingConfig, Encoding, StudentConfig};
use complexity_core::teacher::{TeacherConfig, WeightChoice};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub paths: Paths,
    pub corpus: CorpusConfig,
    pub teacher: TeacherSection,
    pub student: StudentSection,
    pub cauc: CaucSection,
    pub emulate: EmulateSection,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: PathBuf,
    pub models: PathBuf,
    pub reports: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TeacherSection {
    pub rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub l2: f64,
    pub min_doc_freq: usize,
    pub weight: f64,
    pub weight_grid: Vec<f64>,
    /// Pick the weight from `weight_grid` instead of using `weight`.
    pub select_weight: bool,
    pub histogram_bins: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudentSection {
    pub label_threshold: f64,
    pub decision_threshold: f64,
    pub encoding: String,
    pub embedding_dims: Option<Vec<usize>>,
    pub epochs: usize,
    pub step_size: f64,
    pub fallback_rate: f64,
    pub train_fraction: f64,
    pub rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CaucSection {
    pub grid: usize,
    pub bins: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmulateSection {
    pub background: usize,
    pub arm_size: usize,
    /// Contacts generated to search for flagged ones, background included.
    pub pool: usize,
    /// Treatment contacts are re-rendered at `z * (1 - z_reduction)`.
    pub z_reduction: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 7,
            paths: Paths::default(),
            corpus: CorpusConfig::default(),
            teacher: TeacherSection::default(),
            student: StudentSection::default(),
            cauc: CaucSection::default(),
            emulate: EmulateSection::default(),
        }
    }
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            corpus: "corpus".into(),
            models: "models".into(),
            reports: "reports".into(),
        }
    }
}

impl Default for TeacherSection {
    fn default() -> Self {
        let b = TrainConfig::binary();
        TeacherSection {
            rounds: b.rounds,
            learning_rate: b.learning_rate,
            max_depth: b.max_depth,
            min_samples_leaf: b.min_samples_leaf,
            l2: b.l2,
            min_doc_freq: 2,
            weight: complexity_core::teacher::DEFAULT_WEIGHT,
            weight_grid: vec![0.5, 1.0, 2.0, 4.0],
            select_weight: false,
            histogram_bins: 30,
        }
    }
}

impl Default for StudentSection {
    fn default() -> Self {
        let e = EmbeddingConfig::default();
        let b = TrainConfig::binary();
        StudentSection {
            label_threshold: complexity_core::student::DEFAULT_LABEL_THRESHOLD,
            decision_threshold: complexity_core::student::DEFAULT_DECISION_THRESHOLD,
            encoding: Encoding::Embedding.name().into(),
            embedding_dims: None,
            epochs: e.epochs,
            step_size: e.step_size,
            fallback_rate: e.fallback_rate,
            train_fraction: 0.8,
            rounds: b.rounds,
            learning_rate: b.learning_rate,
            max_depth: b.max_depth,
            min_samples_leaf: b.min_samples_leaf,
        }
    }
}

impl Default for CaucSection {
    fn default() -> Self {
        CaucSection {
            grid: complexity_core::cauc::DEFAULT_GRID,
            bins: 20,
        }
    }
}

impl Default for EmulateSection {
    fn default() -> Self {
        EmulateSection {
            background: 10_000,
            arm_size: 2_000,
            pool: 60_000,
            z_reduction: 0.6,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::data(format!("config: {m}")));
        if self.teacher.rounds == 0 || self.student.rounds == 0 {
            return bad("rounds must be at least 1");
        }
        if self.teacher.weight.is_nan() || self.teacher.weight <= 0.0 {
            return bad("teacher.weight must be positive");
        }
        if self.teacher.histogram_bins == 0 {
            return bad("teacher.histogram_bins must be positive");
        }
        let s = &self.student;
        for (name, v) in [
            ("label_threshold", s.label_threshold),
            ("decision_threshold", s.decision_threshold),
            ("train_fraction", s.train_fraction),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return bad(&format!("student.{name} must lie in (0, 1)"));
            }
        }
        if Encoding::parse(&s.encoding).is_none() {
            return bad("student.encoding must be `embedding` or `onehot`");
        }
        if self.cauc.grid < 2 || self.cauc.bins < 2 {
            return bad("cauc.grid and cauc.bins must be at least 2");
        }
        let e = &self.emulate;
        if e.arm_size == 0 || e.background < 2 || e.pool <= e.background {
            return bad("emulate needs arm_size > 0, background >= 2 and pool > background");
        }
        if !(0.0..=1.0).contains(&e.z_reduction) {
            return bad("emulate.z_reduction must lie in [0, 1]");
        }
        Ok(())
    }

    pub fn corpus_config(&self) -> CorpusConfig {
        CorpusConfig {
            seed: self.seed,
            ..self.corpus.clone()
        }
    }

    pub fn teacher_config(&self) -> TeacherConfig {
        let t = &self.teacher;
        let mut config = TeacherConfig::new(self.corpus.n_classes);
        config.min_doc_freq = t.min_doc_freq;
        config.boosting = TrainConfig {
            rounds: t.rounds,
            learning_rate: t.learning_rate,
            max_depth: t.max_depth,
            min_samples_leaf: t.min_samples_leaf,
            l2: t.l2,
            ..config.boosting
        };
        config.weight = if t.select_weight {
            WeightChoice::Select(t.weight_grid.clone())
        } else {
            WeightChoice::Fixed(t.weight)
        };
        config.report_grid = t.weight_grid.clone();
        config
    }

    pub fn student_config(&self, encoding: Encoding) -> StudentConfig {
        let s = &self.student;
        StudentConfig {
            encoding,
            embedding: EmbeddingConfig {
                dims: s.embedding_dims.clone(),
                epochs: s.epochs,
                step_size: s.step_size,
                fallback_rate: s.fallback_rate,
                seed: self.seed.wrapping_add(1),
                ..EmbeddingConfig::default()
            },
            boosting: TrainConfig {
                rounds: s.rounds,
                learning_rate: s.learning_rate,
                max_depth: s.max_depth,
                min_samples_leaf: s.min_samples_leaf,
                ..TrainConfig::binary()
            },
            decision_threshold: s.decision_threshold,
        }
    }
}
