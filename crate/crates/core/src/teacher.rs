//! Transcript complexity: the three raw measures, the uniform score built
//! from them, and the validation curves.
//!
//! For a transcript the teacher computes
//!
//! * `L`, the number of agent utterances (one utterance is one sentence),
//! * `H`, the entropy of the classifier's final class distribution,
//! * `S`, the sum over rounds `i = 1..=M` of `KL(P_i || P_M)` where `P_i` is
//!   the class distribution after `i` boosting rounds.
//!
//! Each measure is mapped to a standard normal by its own empirical quantile
//! map; the weighted sum `w * L' + H' + S'` is mapped to uniform(0, 1) by a
//! fourth map, giving the complexity score `Q`.

use std::io::{BufRead, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::corpus::{Speaker, Transcript};
use crate::error::{Error, Result};
use crate::format::{csv_error, float, LineReader};
use crate::gbdt::{self, BoostedEnsemble, ProbVector, TrainConfig};
use crate::stats::anderson_darling_normal;
use crate::textvec::Vocabulary;
use crate::transforms::{EmpiricalQuantileMap, Target};

/// Denominator floor for KL terms.
const KL_FLOOR: f64 = 1e-12;

pub const DEFAULT_WEIGHT: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexityTriple {
    /// Agent sentence count.
    pub length: usize,
    /// Entropy of the final class distribution, in nats.
    pub entropy: f64,
    /// Summed divergence of staged distributions from the final one, in nats.
    pub skillfulness: f64,
}

pub fn agent_sentence_count(transcript: &Transcript) -> usize {
    transcript
        .utterances
        .iter()
        .filter(|u| u.speaker == Speaker::Agent)
        .count()
}

/// Shannon entropy in nats, with `0 ln 0 = 0`.
pub fn entropy(p: &ProbVector) -> f64 {
    let h: f64 = p
        .as_slice()
        .iter()
        .filter(|&&pc| pc > 0.0)
        .map(|&pc| -pc * pc.ln())
        .sum();
    h.max(0.0)
}

/// `KL(p || q)` in nats. Terms with `p_c = 0` vanish and `q_c` is floored
/// at 1e-12.
pub fn kl_divergence(p: &ProbVector, q: &ProbVector) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::invalid(format!(
            "KL divergence of vectors with {} and {} classes",
            p.len(),
            q.len()
        )));
    }
    let d: f64 = p
        .as_slice()
        .iter()
        .zip(q.as_slice())
        .filter(|(&pc, _)| pc > 0.0)
        .map(|(&pc, &qc)| pc * (pc / qc.max(KL_FLOOR)).ln())
        .sum();
    Ok(d.max(0.0))
}

/// Per-round divergences `KL(P_i || P_M)`, `i = 1..=M`. The last is 0.
pub fn kl_boosting_curve(staged: &[ProbVector]) -> Result<Vec<f64>> {
    let last = staged
        .last()
        .ok_or_else(|| Error::invalid("skillfulness of an empty staged sequence"))?;
    let mut curve = staged
        .iter()
        .map(|p| kl_divergence(p, last))
        .collect::<Result<Vec<_>>>()?;
    *curve.last_mut().expect("non-empty") = 0.0;
    Ok(curve)
}

pub fn skillfulness(staged: &[ProbVector]) -> Result<f64> {
    Ok(kl_boosting_curve(staged)?.iter().sum())
}

pub fn complexity_triple(
    transcript: &Transcript,
    ensemble: &BoostedEnsemble,
    vocab: &Vocabulary,
) -> Result<ComplexityTriple> {
    let x = vocab.vectorize(transcript);
    let staged = ensemble.staged_predict_proba(&x);
    let final_p = staged.last().expect("ensembles have at least one round");
    Ok(ComplexityTriple {
        length: agent_sentence_count(transcript),
        entropy: entropy(final_p),
        skillfulness: skillfulness(&staged)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScorePipeline {
    length_map: EmpiricalQuantileMap,
    entropy_map: EmpiricalQuantileMap,
    skill_map: EmpiricalQuantileMap,
    weight: f64,
    combined_map: EmpiricalQuantileMap,
}

struct NormalMaps {
    length: EmpiricalQuantileMap,
    entropy: EmpiricalQuantileMap,
    skill: EmpiricalQuantileMap,
}

impl NormalMaps {
    fn fit(triples: &[ComplexityTriple]) -> Result<Self> {
        if triples.len() < 2 {
            return Err(Error::invalid("score pipeline needs at least 2 triples"));
        }
        let column = |name: &str, values: Vec<f64>| -> Result<EmpiricalQuantileMap> {
            if values.iter().all(|v| *v == values[0]) {
                return Err(Error::invalid(format!("attribute `{name}` is constant")));
            }
            EmpiricalQuantileMap::fit(&values, Target::Normal)
        };
        Ok(NormalMaps {
            length: column("length", triples.iter().map(|t| t.length as f64).collect())?,
            entropy: column("entropy", triples.iter().map(|t| t.entropy).collect())?,
            skill: column(
                "skillfulness",
                triples.iter().map(|t| t.skillfulness).collect(),
            )?,
        })
    }

    fn normalized(&self, t: &ComplexityTriple) -> [f64; 3] {
        [
            self.length.transform(t.length as f64),
            self.entropy.transform(t.entropy),
            self.skill.transform(t.skillfulness),
        ]
    }
}

fn weighted_sum(weight: f64, n: [f64; 3]) -> f64 {
    weight * n[0] + n[1] + n[2]
}

impl ScorePipeline {
    pub fn fit(triples: &[ComplexityTriple], weight: f64) -> Result<Self> {
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::invalid(format!(
                "weight must be positive, got {weight}"
            )));
        }
        let maps = NormalMaps::fit(triples)?;
        let sums: Vec<f64> = triples
            .iter()
            .map(|t| weighted_sum(weight, maps.normalized(t)))
            .collect();
        let combined_map = EmpiricalQuantileMap::fit(&sums, Target::Uniform)?;
        Ok(ScorePipeline {
            length_map: maps.length,
            entropy_map: maps.entropy,
            skill_map: maps.skill,
            weight,
            combined_map,
        })
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn n_fitted(&self) -> usize {
        self.combined_map.len()
    }

    /// `(L', H', S')`, each on the standard normal scale.
    pub fn normalized(&self, t: &ComplexityTriple) -> [f64; 3] {
        [
            self.length_map.transform(t.length as f64),
            self.entropy_map.transform(t.entropy),
            self.skill_map.transform(t.skillfulness),
        ]
    }

    /// Weights and combines already-normalized attributes into `Q`.
    pub fn combine(&self, normalized: [f64; 3]) -> f64 {
        self.combined_map
            .transform(weighted_sum(self.weight, normalized))
    }

    /// The complexity score `Q` in (0, 1).
    pub fn score(&self, t: &ComplexityTriple) -> f64 {
        self.combine(self.normalized(t))
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "weight {}", float(self.weight))?;
        for map in [
            &self.length_map,
            &self.entropy_map,
            &self.skill_map,
            &self.combined_map,
        ] {
            map.write_to(&mut w)?;
        }
        Ok(())
    }

    pub(crate) fn read_from<R: BufRead>(r: &mut LineReader<R>) -> Result<Self> {
        let weight: f64 = r.keyed_one("weight")?;
        let length_map = EmpiricalQuantileMap::read_from(r)?;
        let entropy_map = EmpiricalQuantileMap::read_from(r)?;
        let skill_map = EmpiricalQuantileMap::read_from(r)?;
        let combined_map = EmpiricalQuantileMap::read_from(r)?;
        let expect = |m: &EmpiricalQuantileMap, t: Target| {
            if m.target() == t {
                Ok(())
            } else {
                Err(r.error("score pipeline maps have the wrong targets"))
            }
        };
        expect(&length_map, Target::Normal)?;
        expect(&entropy_map, Target::Normal)?;
        expect(&skill_map, Target::Normal)?;
        expect(&combined_map, Target::Uniform)?;
        if weight.is_nan() || weight <= 0.0 {
            return Err(r.error("field `weight` must be positive"));
        }
        Ok(ScorePipeline {
            length_map,
            entropy_map,
            skill_map,
            weight,
            combined_map,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightSelection {
    pub weight: f64,
    /// `(w, Anderson–Darling A²)` for every grid point, in grid order.
    pub table: Vec<(f64, f64)>,
}

/// Picks the grid weight whose weighted sums look most normal by the
/// Anderson–Darling statistic; ties go to the smaller weight.
pub fn select_weight(triples: &[ComplexityTriple], grid: &[f64]) -> Result<WeightSelection> {
    if grid.is_empty() {
        return Err(Error::invalid("weight grid is empty"));
    }
    if let Some(w) = grid.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
        return Err(Error::invalid(format!("grid weight {w} is not positive")));
    }
    let maps = NormalMaps::fit(triples)?;
    let normalized: Vec<[f64; 3]> = triples.iter().map(|t| maps.normalized(t)).collect();
    let table: Vec<(f64, f64)> = grid
        .iter()
        .map(|&w| {
            let sums: Vec<f64> = normalized.iter().map(|n| weighted_sum(w, *n)).collect();
            (w, anderson_darling_normal(&sums))
        })
        .collect();
    let mut best = table[0];
    for &(w, stat) in &table[1..] {
        if stat < best.1 || (stat == best.1 && w < best.0) {
            best = (w, stat);
        }
    }
    Ok(WeightSelection {
        weight: best.0,
        table,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ComplexityLabel {
    Low,
    Normal,
    High,
}

impl ComplexityLabel {
    pub const ALL: [ComplexityLabel; 3] = [Self::Low, Self::Normal, Self::High];

    /// Synthetic ground truth from a planted latent: low below 0.33, high above 0.66.
    pub fn from_latent(z: f64) -> Self {
        if z < 0.33 {
            Self::Low
        } else if z > 0.66 {
            Self::High
        } else {
            Self::Normal
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Low => "low",
            Self::Normal => "normal",
            Self::High => "high",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// Fractions of low, normal and high labels; `None` for an empty bin.
    pub fractions: Option<[f64; 3]>,
}

/// Equal-width bins over [0, 1] with per-label fractions inside each bin.
pub fn binned_label_curve(
    scores: &[f64],
    labels: &[ComplexityLabel],
    n_bins: usize,
) -> Result<Vec<LabelBin>> {
    if scores.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if n_bins < 2 {
        return Err(Error::invalid("need at least 2 bins"));
    }
    let mut counts = vec![[0usize; 3]; n_bins];
    for (&q, &label) in scores.iter().zip(labels) {
        let bin = ((q.clamp(0.0, 1.0) * n_bins as f64) as usize).min(n_bins - 1);
        counts[bin][label as usize] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(b, c)| {
            let count: usize = c.iter().sum();
            LabelBin {
                lo: b as f64 / n_bins as f64,
                hi: (b + 1) as f64 / n_bins as f64,
                count,
                fractions: (count > 0).then(|| c.map(|k| k as f64 / count as f64)),
            }
        })
        .collect())
}

/// How the combination weight is chosen when training a teacher.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightChoice {
    Fixed(f64),
    /// Select from a grid by normality of the weighted sum.
    Select(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TeacherConfig {
    pub min_doc_freq: usize,
    pub boosting: TrainConfig,
    pub weight: WeightChoice,
    /// Grid reported alongside the chosen weight.
    pub report_grid: Vec<f64>,
}

impl TeacherConfig {
    pub fn new(n_classes: usize) -> Self {
        TeacherConfig {
            min_doc_freq: 2,
            boosting: TrainConfig::multiclass(n_classes),
            weight: WeightChoice::Fixed(DEFAULT_WEIGHT),
            report_grid: vec![0.5, 1.0, 2.0, 4.0],
        }
    }
}

/// The fitted post-contact scorer.
#[derive(Debug, Clone, PartialEq)]
pub struct Teacher {
    pub vocabulary: Vocabulary,
    pub ensemble: BoostedEnsemble,
    pub pipeline: ScorePipeline,
}

/// Everything computed while fitting a teacher.
#[derive(Debug, Clone)]
pub struct TeacherFit {
    pub teacher: Teacher,
    pub triples: Vec<ComplexityTriple>,
    pub scores: Vec<f64>,
    pub weights: WeightSelection,
    pub training_loss: Vec<f64>,
}

pub const VOCABULARY_FILE: &str = "vocabulary.csv";
pub const MODEL_FILE: &str = "teacher.gbdt";
pub const PIPELINE_FILE: &str = "pipeline.txt";

impl Teacher {
    pub fn fit(transcripts: &[Transcript], config: &TeacherConfig) -> Result<TeacherFit> {
        let vocabulary = Vocabulary::fit(transcripts, config.min_doc_freq)?;
        let xs: Vec<_> = transcripts
            .par_iter()
            .map(|t| vocabulary.vectorize(t))
            .collect();
        let ys: Vec<usize> = transcripts.iter().map(|t| t.label).collect();
        let (ensemble, training_loss) = gbdt::train_with_history(&xs, &ys, &config.boosting)?;
        let triples = xs
            .par_iter()
            .zip(transcripts)
            .map(|(x, t)| {
                let staged = ensemble.staged_predict_proba(x);
                Ok(ComplexityTriple {
                    length: agent_sentence_count(t),
                    entropy: entropy(staged.last().expect("at least one round")),
                    skillfulness: skillfulness(&staged)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let weights = match &config.weight {
            WeightChoice::Fixed(w) => {
                let mut grid = config.report_grid.clone();
                if !grid.contains(w) {
                    grid.push(*w);
                }
                let mut sel = select_weight(&triples, &grid)?;
                sel.weight = *w;
                sel
            }
            WeightChoice::Select(grid) => select_weight(&triples, grid)?,
        };
        let pipeline = ScorePipeline::fit(&triples, weights.weight)?;
        let scores = triples.iter().map(|t| pipeline.score(t)).collect();
        Ok(TeacherFit {
            teacher: Teacher {
                vocabulary,
                ensemble,
                pipeline,
            },
            triples,
            scores,
            weights,
            training_loss,
        })
    }

    pub fn triple(&self, transcript: &Transcript) -> Result<ComplexityTriple> {
        complexity_triple(transcript, &self.ensemble, &self.vocabulary)
    }

    pub fn score(&self, transcript: &Transcript) -> Result<(ComplexityTriple, f64)> {
        let t = self.triple(transcript)?;
        Ok((t, self.pipeline.score(&t)))
    }

    /// Scores many transcripts, preserving order.
    pub fn score_all(&self, transcripts: &[Transcript]) -> Result<Vec<(ComplexityTriple, f64)>> {
        transcripts.par_iter().map(|t| self.score(t)).collect()
    }

    /// Writes the vocabulary, the classifier and the score pipeline into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        self.vocabulary.save(&dir.join(VOCABULARY_FILE))?;
        self.ensemble.save(&dir.join(MODEL_FILE))?;
        let path = dir.join(PIPELINE_FILE);
        let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = std::io::BufWriter::new(file);
        (|| {
            writeln!(w, "score_pipeline 1")?;
            writeln!(w, "vocabulary {VOCABULARY_FILE}")?;
            writeln!(w, "model {MODEL_FILE}")?;
            self.pipeline.write_to(&mut w)?;
            w.flush()
        })()
        .map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(PIPELINE_FILE);
        let file = std::fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
        let mut r = LineReader::new(&path, std::io::BufReader::new(file));
        let version: u32 = r.keyed_one("score_pipeline")?;
        if version != 1 {
            return Err(r.error(format!("unsupported pipeline version {version}")));
        }
        let vocab_ref: String = r.keyed_one("vocabulary")?;
        let model_ref: String = r.keyed_one("model")?;
        let pipeline = ScorePipeline::read_from(&mut r)?;
        Ok(Teacher {
            vocabulary: Vocabulary::load(&dir.join(vocab_ref))?,
            ensemble: BoostedEnsemble::load(&dir.join(model_ref))?,
            pipeline,
        })
    }
}

/// One line of a score file: `contact_id,group,L,H,S,Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub contact_id: String,
    pub group: String,
    pub triple: ComplexityTriple,
    pub score: f64,
}

pub fn save_scores(path: &Path, rows: &[ScoreRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["contact_id", "group", "L", "H", "S", "Q"])
        .map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.write_record([
            r.contact_id.as_str(),
            r.group.as_str(),
            &r.triple.length.to_string(),
            &float(r.triple.entropy),
            &float(r.triple.skillfulness),
            &float(r.score),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_scores(path: &Path) -> Result<Vec<ScoreRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = reader.headers().map_err(|e| csv_error(path, e))?;
    if header.iter().collect::<Vec<_>>() != ["contact_id", "group", "L", "H", "S", "Q"] {
        return Err(Error::schema(
            path,
            1,
            "expected header `contact_id,group,L,H,S,Q`",
        ));
    }
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| csv_error(path, e))?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let num = |k: usize, name: &str| -> Result<f64> {
            row[k]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    Error::schema(
                        path,
                        line,
                        format!("field `{name}`: not a finite number `{}`", &row[k]),
                    )
                })
        };
        let length = row[2].parse().map_err(|_| {
            Error::schema(path, line, format!("field `L`: not a count `{}`", &row[2]))
        })?;
        let score = num(5, "Q")?;
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::schema(
                path,
                line,
                format!("field `Q`: {score} outside [0, 1]"),
            ));
        }
        out.push(ScoreRow {
            contact_id: row[0].to_string(),
            group: row[1].to_string(),
            triple: ComplexityTriple {
                length,
                entropy: num(3, "H")?,
                skillfulness: num(4, "S")?,
            },
            score,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Utterance;

    fn pv(p: &[f64]) -> ProbVector {
        ProbVector::new(p.to_vec()).unwrap()
    }

    fn transcript(speakers: &[Speaker]) -> Transcript {
        Transcript {
            id: "x".into(),
            label: 0,
            group: "g".into(),
            utterances: speakers
                .iter()
                .map(|&speaker| Utterance {
                    speaker,
                    text: "hello there".into(),
                })
                .collect(),
        }
    }

    #[test]
    fn agent_counts() {
        use Speaker::*;
        assert_eq!(
            agent_sentence_count(&transcript(&[Agent, Customer, Agent, Customer, Agent])),
            3
        );
        assert_eq!(agent_sentence_count(&transcript(&[Customer, Customer])), 0);
        let alternating: Vec<Speaker> = (0..10)
            .map(|i| if i % 2 == 0 { Customer } else { Agent })
            .collect();
        assert_eq!(agent_sentence_count(&transcript(&alternating)), 5);
    }

    #[test]
    fn entropy_and_kl_edge_cases() {
        assert_eq!(entropy(&pv(&[0.0, 1.0, 0.0])), 0.0);
        assert!((entropy(&ProbVector::uniform(152)) - 152f64.ln()).abs() < 1e-12);
        let p = pv(&[0.3, 0.7]);
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        assert!(kl_divergence(&p, &pv(&[0.2, 0.3, 0.5])).is_err());
        // q_c = 0 with p_c > 0 is floored, not infinite
        let d = kl_divergence(&pv(&[0.5, 0.5]), &pv(&[1.0, 0.0])).unwrap();
        assert!(d.is_finite() && d > 10.0);
    }

    #[test]
    fn skillfulness_edge_cases() {
        assert!(skillfulness(&[]).is_err());
        assert_eq!(skillfulness(&[pv(&[0.2, 0.8])]).unwrap(), 0.0);
        assert_eq!(skillfulness(&vec![pv(&[0.2, 0.8]); 7]).unwrap(), 0.0);
        let curve =
            kl_boosting_curve(&[pv(&[0.5, 0.5]), pv(&[0.3, 0.7]), pv(&[0.1, 0.9])]).unwrap();
        assert_eq!(curve[2], 0.0);
        assert!(curve[0] > curve[1]);
    }

    #[test]
    fn binned_curve_step_at_threshold() {
        let n = 2000;
        let scores: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let labels: Vec<ComplexityLabel> = scores
            .iter()
            .map(|&q| {
                if q > 0.6 {
                    ComplexityLabel::High
                } else {
                    ComplexityLabel::Low
                }
            })
            .collect();
        let bins = binned_label_curve(&scores, &labels, 20).unwrap();
        for (b, bin) in bins.iter().enumerate() {
            let high = bin.fractions.unwrap()[2];
            assert_eq!(high, if b >= 12 { 1.0 } else { 0.0 }, "bin {b}");
        }
    }

    #[test]
    fn binned_curve_flags_empty_bins_and_checks_lengths() {
        let bins = binned_label_curve(&[0.01, 0.02], &[ComplexityLabel::High; 2], 4).unwrap();
        assert_eq!(bins[0].fractions, Some([0.0, 0.0, 1.0]));
        assert!(bins[1..]
            .iter()
            .all(|b| b.fractions.is_none() && b.count == 0));
        assert!(binned_label_curve(&[0.1], &[], 20).is_err());
        assert!(binned_label_curve(&[0.1], &[ComplexityLabel::Low], 1).is_err());
    }

    fn synthetic_triples(n: usize) -> Vec<ComplexityTriple> {
        (0..n)
            .map(|i| {
                let u = (i as f64 * 0.618_033_988_75).fract();
                let v = (i as f64 * 0.414_213_562_37).fract();
                ComplexityTriple {
                    length: 1 + (u * u * 20.0) as usize,
                    entropy: v * 2.0,
                    skillfulness: (u + v).powi(3),
                }
            })
            .collect()
    }

    #[test]
    fn pipeline_rejects_bad_inputs() {
        let t = synthetic_triples(50);
        assert!(ScorePipeline::fit(&t, 0.0).is_err());
        assert!(ScorePipeline::fit(&t[..1], 2.0).is_err());
        let constant: Vec<ComplexityTriple> = t
            .iter()
            .map(|x| ComplexityTriple { entropy: 1.0, ..*x })
            .collect();
        assert!(ScorePipeline::fit(&constant, 2.0).is_err());
    }

    #[test]
    fn out_of_range_triple_clamps_to_top_level() {
        let t = synthetic_triples(400);
        let p = ScorePipeline::fit(&t, 2.0).unwrap();
        let q = p.score(&ComplexityTriple {
            length: 10_000,
            entropy: 1e6,
            skillfulness: 1e6,
        });
        assert_eq!(q, 1.0 - 0.5 / 400.0);
    }

    #[test]
    fn weight_selection_singleton_and_errors() {
        let t = synthetic_triples(100);
        assert_eq!(select_weight(&t, &[2.0]).unwrap().weight, 2.0);
        assert!(select_weight(&t, &[]).is_err());
        assert!(select_weight(&t, &[-1.0]).is_err());
    }

    #[test]
    fn latent_labels() {
        assert_eq!(ComplexityLabel::from_latent(0.1), ComplexityLabel::Low);
        assert_eq!(ComplexityLabel::from_latent(0.5), ComplexityLabel::Normal);
        assert_eq!(ComplexityLabel::from_latent(0.9), ComplexityLabel::High);
    }
}
