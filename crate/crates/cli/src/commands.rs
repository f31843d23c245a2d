use std::collections::HashMap;
use std::path::{Path, PathBuf};

use complexity_core::cauc::{self, DualCurve};
use complexity_core::corpus::{
    self, CorpusConfig, Generator, LATENTS_FILE, RECORDS_FILE, TRANSCRIPTS_FILE,
};
use complexity_core::stats::{ks_uniform, skewness, spearman};
use complexity_core::student::{self, evaluate, make_labels, Encoding, Evaluation, StudentModel};
use complexity_core::teacher::{self, binned_label_curve, ComplexityLabel, ScoreRow, Teacher};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::svg::{line_chart, Series};
use crate::{Cli, CliError, Command, PipelineConfig};

type CmdResult = Result<(), CliError>;

pub const SCORES_FILE: &str = "scores.csv";
pub const LABELS_FILE: &str = "labels.csv";
pub const PREDICTIONS_FILE: &str = "predictions.csv";

/// Seed offsets so that each stage draws from its own stream.
const SPLIT_SALT: u64 = 0x5eed_0002;
const POOL_SALT: u64 = 0x5eed_0003;
const TREATMENT_SALT: u64 = 0x5eed_0004;

pub fn dispatch(cli: &Cli, config: &PipelineConfig) -> CmdResult {
    let ctx = Ctx { cli, config };
    match &cli.command {
        Command::Generate { n_contacts } => ctx.generate(*n_contacts),
        Command::TrainTeacher {
            corpus,
            rounds,
            weight,
            select_weight,
        } => ctx.train_teacher(corpus.as_deref(), *rounds, *weight, *select_weight),
        Command::Score { input } => ctx.score(input.as_deref()),
        Command::Label { scores, threshold } => ctx.label(scores.as_deref(), *threshold),
        Command::TrainStudent {
            records,
            labels,
            encoding,
        } => ctx.train_student(records.as_deref(), labels.as_deref(), encoding.as_deref()),
        Command::Predict { records } => ctx.predict(records.as_deref()),
        Command::Cauc {
            benchmark,
            target,
            groups,
            grid,
        } => ctx.cauc(benchmark, target.as_deref(), groups.as_deref(), *grid),
        Command::Emulate {
            identity,
            arm_size,
            background,
        } => ctx.emulate(*identity, *arm_size, *background),
        Command::Report { scores, latents } => ctx.report(scores.as_deref(), latents.as_deref()),
    }
}

struct Ctx<'a> {
    cli: &'a Cli,
    config: &'a PipelineConfig,
}

fn require_dir(path: &Path) -> CmdResult {
    if path.is_dir() {
        Ok(())
    } else {
        Err(CliError::data(format!(
            "directory `{}` does not exist",
            path.display()
        )))
    }
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> CmdResult {
    let io = |e: csv::Error| CliError::data(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row).map_err(io)?;
    }
    w.flush()
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> CmdResult {
    std::fs::write(path, text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn write_with(path: &Path, f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> CmdResult {
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    std::fs::write(path, buf).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn format_float(x: f64) -> String {
    format!("{x:?}")
}

fn opt(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

fn histogram(values: &[f64], bins: usize) -> Vec<(f64, f64, usize)> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() {
        return Vec::new();
    }
    let width = if hi > lo {
        (hi - lo) / bins as f64
    } else {
        1.0
    };
    let mut counts = vec![0usize; bins];
    for &v in values {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(b, c)| (lo + b as f64 * width, lo + (b + 1) as f64 * width, c))
        .collect()
}

struct LabelRow {
    contact_id: String,
    label: bool,
}

fn load_labels(path: &Path) -> Result<Vec<LabelRow>, CliError> {
    let err =
        |line: u64, m: String| CliError::data(format!("{}: line {line}: {m}", path.display()));
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let header = r.headers().map_err(|e| err(1, e.to_string()))?;
    if header.iter().collect::<Vec<_>>() != ["contact_id", "Q", "label"] {
        return Err(err(1, "expected header `contact_id,Q,label`".into()));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        rec[1]
            .parse::<f64>()
            .map_err(|_| err(line, format!("field `Q`: not a number `{}`", &rec[1])))?;
        let label = match &rec[2] {
            "1" => true,
            "0" => false,
            other => {
                return Err(err(
                    line,
                    format!("field `label`: expected 0 or 1, got `{other}`"),
                ))
            }
        };
        out.push(LabelRow {
            contact_id: rec[0].to_string(),
            label,
        });
    }
    Ok(out)
}

fn eval_row(
    name: &str,
    e: &Evaluation,
    n_train: usize,
    n_test: usize,
    base_rate: f64,
) -> Vec<String> {
    vec![
        name.to_string(),
        opt(e.precision),
        opt(e.recall),
        e.true_positives.to_string(),
        e.false_positives.to_string(),
        e.false_negatives.to_string(),
        e.true_negatives.to_string(),
        n_train.to_string(),
        n_test.to_string(),
        format_float(base_rate),
    ]
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_string(), |v| format!("{v:.3}"))
}

impl Ctx<'_> {
    fn paths(&self) -> &crate::config::Paths {
        &self.config.paths
    }

    fn out_dir(&self, default: &Path) -> Result<PathBuf, CliError> {
        let dir = self
            .cli
            .out
            .clone()
            .unwrap_or_else(|| default.to_path_buf());
        require_dir(&dir)?;
        Ok(dir)
    }

    fn generate(&self, n_contacts: Option<usize>) -> CmdResult {
        let dir = self.out_dir(&self.paths().corpus)?;
        let mut cfg = self.config.corpus_config();
        if let Some(n) = n_contacts {
            cfg.n_contacts = n;
        }
        let generated = corpus::generate_corpus(&cfg)?;
        corpus::save_corpus(&dir, &generated.transcripts, &generated.records)?;
        let ids: Vec<String> = generated.transcripts.iter().map(|t| t.id.clone()).collect();
        corpus::save_latents(&dir.join(LATENTS_FILE), &ids, &generated.latents)?;
        println!(
            "generated {} transcripts and {} pre-contact records in {}",
            generated.transcripts.len(),
            generated.records.len(),
            dir.display()
        );
        Ok(())
    }

    fn train_teacher(
        &self,
        corpus_dir: Option<&Path>,
        rounds: Option<usize>,
        weight: Option<f64>,
        select_weight: bool,
    ) -> CmdResult {
        let corpus_dir = corpus_dir.unwrap_or(&self.paths().corpus);
        let transcripts = corpus::load_transcripts(&corpus_dir.join(TRANSCRIPTS_FILE))?;
        let models = self.out_dir(&self.paths().models)?;
        let reports = self.paths().reports.clone();
        require_dir(&reports)?;

        let mut cfg = self.config.clone();
        if let Some(m) = rounds {
            if m == 0 {
                return Err(CliError::usage("--rounds must be at least 1"));
            }
            cfg.teacher.rounds = m;
        }
        if let Some(w) = weight {
            cfg.teacher.weight = w;
        }
        cfg.teacher.select_weight |= select_weight;
        let max_label = transcripts.iter().map(|t| t.label).max().unwrap_or(0);
        cfg.corpus.n_classes = cfg.corpus.n_classes.max(max_label + 1);
        let fit = Teacher::fit(&transcripts, &cfg.teacher_config())?;
        fit.teacher.save(&models)?;

        let chosen = fit.weights.weight;
        let weight_rows: Vec<Vec<String>> = fit
            .weights
            .table
            .iter()
            .map(|&(w, stat)| {
                vec![
                    format_float(w),
                    format_float(stat),
                    ((w == chosen) as u8).to_string(),
                ]
            })
            .collect();
        write_csv(
            &reports.join("teacher_weights.csv"),
            &["weight", "anderson_darling", "selected"],
            &weight_rows,
        )?;

        let columns: [(&str, Vec<f64>); 3] = [
            ("L", fit.triples.iter().map(|t| t.length as f64).collect()),
            ("H", fit.triples.iter().map(|t| t.entropy).collect()),
            ("S", fit.triples.iter().map(|t| t.skillfulness).collect()),
        ];
        let bins = self.config.teacher.histogram_bins;
        let mut hist_rows = Vec::new();
        let mut hist_series = Vec::new();
        for (name, values) in &columns {
            let h = histogram(values, bins);
            let total = values.len().max(1) as f64;
            hist_series.push(Series {
                name,
                points: h
                    .iter()
                    .enumerate()
                    .map(|(b, &(_, _, c))| (b as f64, c as f64 / total))
                    .collect(),
            });
            for (b, (lo, hi, c)) in h.into_iter().enumerate() {
                hist_rows.push(vec![
                    name.to_string(),
                    b.to_string(),
                    format_float(lo),
                    format_float(hi),
                    c.to_string(),
                ]);
            }
        }
        write_csv(
            &reports.join("teacher_histograms.csv"),
            &["attribute", "bin", "lo", "hi", "count"],
            &hist_rows,
        )?;

        let n = fit.scores.len();
        let ks = ks_uniform(&fit.scores);
        let skews: Vec<f64> = columns.iter().map(|(_, v)| skewness(v)).collect();
        write_csv(
            &reports.join("teacher_summary.csv"),
            &[
                "n",
                "weight",
                "ks_uniform",
                "ks_bound",
                "skew_L",
                "skew_H",
                "skew_S",
                "final_training_loss",
            ],
            &[vec![
                n.to_string(),
                format_float(chosen),
                format_float(ks),
                format_float(2.0 / (n as f64).sqrt()),
                format_float(skews[0]),
                format_float(skews[1]),
                format_float(skews[2]),
                format_float(*fit.training_loss.last().expect("history is non-empty")),
            ]],
        )?;
        if self.cli.svg {
            write_text(
                &reports.join("teacher_histograms.svg"),
                &line_chart("attribute histograms (fraction per bin)", &hist_series),
            )?;
        }
        println!(
            "trained teacher on {n} transcripts: {} features, weight {chosen}, KS to uniform {ks:.5}",
            fit.teacher.vocabulary.len()
        );
        for (w, stat) in &fit.weights.table {
            println!("  w = {w}: Anderson-Darling {stat:.4}");
        }
        println!(
            "  skewness L {:.3}, H {:.3}, S {:.3}",
            skews[0], skews[1], skews[2]
        );
        Ok(())
    }

    fn score(&self, input: Option<&Path>) -> CmdResult {
        let default_input = self.paths().corpus.join(TRANSCRIPTS_FILE);
        let transcripts = corpus::load_transcripts(input.unwrap_or(&default_input))?;
        let teacher = Teacher::load(&self.paths().models)?;
        let dir = self.out_dir(&self.paths().reports)?;
        let scored = teacher.score_all(&transcripts)?;
        let rows: Vec<ScoreRow> = transcripts
            .iter()
            .zip(scored)
            .map(|(t, (triple, score))| ScoreRow {
                contact_id: t.id.clone(),
                group: t.group.clone(),
                triple,
                score,
            })
            .collect();
        teacher::save_scores(&dir.join(SCORES_FILE), &rows)?;
        println!(
            "scored {} transcripts into {}",
            rows.len(),
            dir.join(SCORES_FILE).display()
        );
        Ok(())
    }

    fn label(&self, scores: Option<&Path>, threshold: Option<f64>) -> CmdResult {
        let threshold = threshold.unwrap_or(self.config.student.label_threshold);
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(CliError::usage("--threshold must lie in (0, 1)"));
        }
        let default_scores = self.paths().reports.join(SCORES_FILE);
        let rows = teacher::load_scores(scores.unwrap_or(&default_scores))?;
        let dir = self.out_dir(&self.paths().reports)?;
        let qs: Vec<f64> = rows.iter().map(|r| r.score).collect();
        let labels = make_labels(&qs, threshold);
        let out: Vec<Vec<String>> = rows
            .iter()
            .zip(&labels)
            .map(|(r, &y)| {
                vec![
                    r.contact_id.clone(),
                    format_float(r.score),
                    (y as u8).to_string(),
                ]
            })
            .collect();
        write_csv(&dir.join(LABELS_FILE), &["contact_id", "Q", "label"], &out)?;
        let positives = labels.iter().filter(|&&y| y).count();
        println!(
            "labelled {} contacts, {positives} positive (rate {:.4}) at threshold {threshold}",
            labels.len(),
            positives as f64 / labels.len().max(1) as f64
        );
        Ok(())
    }

    fn train_student(
        &self,
        records: Option<&Path>,
        labels: Option<&Path>,
        encoding: Option<&str>,
    ) -> CmdResult {
        let encoding = match encoding {
            Some(raw) => Encoding::parse(raw)
                .ok_or_else(|| CliError::usage(format!("unknown encoding `{raw}`")))?,
            None => Encoding::parse(&self.config.student.encoding).expect("validated"),
        };
        let default_records = self.paths().corpus.join(RECORDS_FILE);
        let records = corpus::load_records(records.unwrap_or(&default_records))?;
        let default_labels = self.paths().reports.join(LABELS_FILE);
        let label_rows = load_labels(labels.unwrap_or(&default_labels))?;
        let models = self.out_dir(&self.paths().models)?;
        let reports = self.paths().reports.clone();
        require_dir(&reports)?;

        let by_id: HashMap<&str, bool> = label_rows
            .iter()
            .map(|r| (r.contact_id.as_str(), r.label))
            .collect();
        let ys = records
            .iter()
            .map(|r| {
                by_id.get(r.contact_id.as_str()).copied().ok_or_else(|| {
                    CliError::data(format!("no label for contact `{}`", r.contact_id))
                })
            })
            .collect::<Result<Vec<bool>, _>>()?;
        let (train_idx, test_idx) = student::split_indices(
            records.len(),
            self.config.student.train_fraction,
            self.config.seed ^ SPLIT_SALT,
        );
        let pick_r = |idx: &[usize]| idx.iter().map(|&i| records[i].clone()).collect::<Vec<_>>();
        let pick_y = |idx: &[usize]| idx.iter().map(|&i| ys[i]).collect::<Vec<_>>();
        let (train_r, train_y) = (pick_r(&train_idx), pick_y(&train_idx));
        let (test_r, test_y) = (pick_r(&test_idx), pick_y(&test_idx));
        let base_rate = test_y.iter().filter(|&&y| y).count() as f64 / test_y.len().max(1) as f64;

        let ablation = match encoding {
            Encoding::Embedding => Encoding::OneHot,
            Encoding::OneHot => Encoding::Embedding,
        };
        let mut rows = Vec::new();
        let mut primary = None;
        for enc in [encoding, ablation] {
            let model =
                student::train_student(&train_r, &train_y, &self.config.student_config(enc))?;
            let eval = evaluate(&model.predict(&test_r)?, &test_y)?;
            println!(
                "{} encoding: precision {}, recall {} on {} held-out contacts (base rate {base_rate:.3})",
                enc.name(),
                fmt_opt(eval.precision),
                fmt_opt(eval.recall),
                test_y.len()
            );
            rows.push(eval_row(
                enc.name(),
                &eval,
                train_y.len(),
                test_y.len(),
                base_rate,
            ));
            if primary.is_none() {
                primary = Some(model);
            }
        }
        primary.expect("primary model trained").save(&models)?;
        write_csv(
            &reports.join("student_eval.csv"),
            &[
                "encoding",
                "precision",
                "recall",
                "tp",
                "fp",
                "fn",
                "tn",
                "n_train",
                "n_test",
                "base_rate",
            ],
            &rows,
        )?;
        Ok(())
    }

    fn predict(&self, records: Option<&Path>) -> CmdResult {
        let default_records = self.paths().corpus.join(RECORDS_FILE);
        let records = corpus::load_records(records.unwrap_or(&default_records))?;
        let model = StudentModel::load(&self.paths().models)?;
        let dir = self.out_dir(&self.paths().reports)?;
        let probs = model.predict_proba(&records)?;
        let ids: Vec<String> = records.iter().map(|r| r.contact_id.clone()).collect();
        student::save_predictions(
            &dir.join(PREDICTIONS_FILE),
            &ids,
            &probs,
            model.decision_threshold,
        )?;
        let flagged = probs
            .iter()
            .filter(|&&p| p >= model.decision_threshold)
            .count();
        println!(
            "predicted {} contacts, {flagged} flagged as high complexity",
            probs.len()
        );
        Ok(())
    }

    fn cauc(
        &self,
        benchmark: &Path,
        target: Option<&Path>,
        groups: Option<&Path>,
        grid: Option<usize>,
    ) -> CmdResult {
        if target.is_none() && groups.is_none() {
            return Err(CliError::usage("cauc needs --target or --groups"));
        }
        let grid = grid.unwrap_or(self.config.cauc.grid);
        let dir = self.out_dir(&self.paths().reports)?;
        let bench: Vec<f64> = teacher::load_scores(benchmark)?
            .iter()
            .map(|r| r.score)
            .collect();
        if let Some(target) = target {
            let tq: Vec<f64> = teacher::load_scores(target)?
                .iter()
                .map(|r| r.score)
                .collect();
            let curve = cauc::complexity_auc(&bench, &tq, grid)?;
            write_with(&dir.join("cauc_curve.csv"), |w| curve.write_csv(w))?;
            write_with(&dir.join("cauc_summary.csv"), |w| curve.write_summary(w))?;
            if self.cli.svg {
                write_text(
                    &dir.join("cauc_curve.svg"),
                    &cauc::render_curves_svg("dual transformation", &[("target", &curve)]),
                )?;
            }
            println!(
                "AUC {:.4}, effectiveness {:+.4}",
                curve.auc, curve.effectiveness
            );
        }
        if let Some(groups) = groups {
            let mut by_group: Vec<(String, Vec<f64>)> = Vec::new();
            for r in teacher::load_scores(groups)? {
                match by_group.iter_mut().find(|(g, _)| *g == r.group) {
                    Some((_, v)) => v.push(r.score),
                    None => by_group.push((r.group, vec![r.score])),
                }
            }
            let rows = cauc::group_report(&bench, &by_group, grid)?;
            write_with(&dir.join("cauc_report.csv"), |w| {
                cauc::write_report_csv(&rows, w)
            })?;
            if self.cli.svg {
                write_text(
                    &dir.join("cauc_report.svg"),
                    &cauc::render_report_svg("Complexity AUC by group", &rows),
                )?;
            }
            for r in &rows {
                println!(
                    "{}: AUC {:.4}, effectiveness {:+.4}, n {}",
                    r.name, r.auc, r.effectiveness, r.n
                );
            }
        }
        Ok(())
    }

    fn emulate(
        &self,
        identity: bool,
        arm_size: Option<usize>,
        background: Option<usize>,
    ) -> CmdResult {
        let e = &self.config.emulate;
        let arm = arm_size.unwrap_or(e.arm_size);
        let n_background = background.unwrap_or(e.background);
        if arm == 0 || n_background < 2 || n_background >= e.pool {
            return Err(CliError::usage(
                "need --arm-size > 0 and 2 <= --background < pool",
            ));
        }
        let reduction = if identity { 0.0 } else { e.z_reduction };
        let teacher = Teacher::load(&self.paths().models)?;
        let student_model = StudentModel::load(&self.paths().models)?;
        let dir = self.out_dir(&self.paths().reports)?;

        let generator = Generator::new(CorpusConfig {
            n_contacts: e.pool,
            seed: self.config.seed ^ POOL_SALT,
            ..self.config.corpus.clone()
        })?;
        let pool = generator.generate_with_prefix("e");
        let flags = student_model.predict(&pool.records[n_background..])?;
        let flagged: Vec<usize> = flags
            .iter()
            .enumerate()
            .filter(|(_, &f)| f)
            .map(|(i, _)| n_background + i)
            .take(2 * arm)
            .collect();
        if flagged.len() < 2 * arm {
            return Err(CliError::data(format!(
                "only {} of {} pool contacts were flagged; need {}",
                flagged.len(),
                e.pool - n_background,
                2 * arm
            )));
        }
        let control_idx: Vec<usize> = flagged.iter().step_by(2).copied().collect();
        let treatment_idx: Vec<usize> = flagged.iter().skip(1).step_by(2).copied().collect();

        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed ^ TREATMENT_SALT);
        let treated: Vec<_> = treatment_idx
            .iter()
            .map(|&i| {
                let t = &pool.transcripts[i];
                let z = pool.latents[i] * (1.0 - reduction);
                generator.transcript(&mut rng, &t.id, t.label, z, "treatment")
            })
            .collect();
        let mut score_rows = Vec::new();
        let mut arms: Vec<(&str, Vec<f64>)> = Vec::new();
        let background_t = &pool.transcripts[..n_background];
        let control_t: Vec<_> = control_idx
            .iter()
            .map(|&i| pool.transcripts[i].clone())
            .collect();
        for (name, transcripts) in [
            ("background", background_t),
            ("control", control_t.as_slice()),
            ("treatment", treated.as_slice()),
        ] {
            let scored = teacher.score_all(transcripts)?;
            let qs = scored.iter().map(|s| s.1).collect();
            for (t, (triple, score)) in transcripts.iter().zip(scored) {
                score_rows.push(ScoreRow {
                    contact_id: t.id.clone(),
                    group: name.to_string(),
                    triple,
                    score,
                });
            }
            arms.push((name, qs));
        }
        teacher::save_scores(&dir.join("emulate_scores.csv"), &score_rows)?;

        let grid = self.config.cauc.grid;
        let comparisons = [
            ("background", "control"),
            ("background", "treatment"),
            ("control", "treatment"),
        ];
        let mut report = Vec::new();
        let mut curves: Vec<(String, DualCurve)> = Vec::new();
        for (b, t) in comparisons {
            let bq = &arms.iter().find(|a| a.0 == b).expect("arm").1;
            let tq = &arms.iter().find(|a| a.0 == t).expect("arm").1;
            let curve = cauc::complexity_auc(bq, tq, grid)?;
            println!(
                "{t} vs {b}: AUC {:.4}, effectiveness {:+.4}",
                curve.auc, curve.effectiveness
            );
            report.push(vec![
                b.to_string(),
                t.to_string(),
                format_float(curve.auc),
                format_float(curve.effectiveness),
                curve.n_benchmark.to_string(),
                curve.n_target.to_string(),
            ]);
            curves.push((format!("{t} vs {b}"), curve));
        }
        write_csv(
            &dir.join("emulate_report.csv"),
            &[
                "benchmark",
                "target",
                "auc",
                "effectiveness",
                "n_benchmark",
                "n_target",
            ],
            &report,
        )?;
        let curve_rows: Vec<Vec<String>> = curves
            .iter()
            .flat_map(|(name, c)| {
                c.xs.iter()
                    .zip(&c.fs)
                    .map(move |(x, f)| vec![name.clone(), format_float(*x), format_float(*f)])
            })
            .collect();
        write_csv(
            &dir.join("emulate_curves.csv"),
            &["comparison", "x", "f_x"],
            &curve_rows,
        )?;
        let groups: Vec<(String, Vec<f64>)> = arms[1..]
            .iter()
            .map(|(n, q)| (n.to_string(), q.clone()))
            .collect();
        let rows = cauc::group_report(&arms[0].1, &groups, grid)?;
        write_with(&dir.join("emulate_groups.csv"), |w| {
            cauc::write_report_csv(&rows, w)
        })?;
        if self.cli.svg {
            let refs: Vec<(&str, &DualCurve)> =
                curves.iter().map(|(n, c)| (n.as_str(), c)).collect();
            write_text(
                &dir.join("emulate_curves.svg"),
                &cauc::render_curves_svg("emulated routing", &refs),
            )?;
        }
        Ok(())
    }

    fn report(&self, scores: Option<&Path>, latents: Option<&Path>) -> CmdResult {
        let default_scores = self.paths().reports.join(SCORES_FILE);
        let rows = teacher::load_scores(scores.unwrap_or(&default_scores))?;
        let default_latents = self.paths().corpus.join(LATENTS_FILE);
        let latents_path = latents.unwrap_or(&default_latents);
        let latents = corpus::load_latents(latents_path)?;
        let dir = self.out_dir(&self.paths().reports)?;
        let zs = rows
            .iter()
            .map(|r| {
                latents.get(&r.contact_id).copied().ok_or_else(|| {
                    CliError::data(format!(
                        "{}: no latent for contact `{}`",
                        latents_path.display(),
                        r.contact_id
                    ))
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        let qs: Vec<f64> = rows.iter().map(|r| r.score).collect();
        let labels: Vec<ComplexityLabel> = zs
            .iter()
            .map(|&z| ComplexityLabel::from_latent(z))
            .collect();
        let bins = binned_label_curve(&qs, &labels, self.config.cauc.bins)?;
        let curve_rows: Vec<Vec<String>> = bins
            .iter()
            .enumerate()
            .map(|(b, bin)| {
                let f = |k: usize| opt(bin.fractions.map(|fr| fr[k]));
                vec![
                    b.to_string(),
                    format_float(bin.lo),
                    format_float(bin.hi),
                    bin.count.to_string(),
                    f(0),
                    f(1),
                    f(2),
                ]
            })
            .collect();
        write_csv(
            &dir.join("label_curve.csv"),
            &["bin", "lo", "hi", "count", "p_low", "p_normal", "p_high"],
            &curve_rows,
        )?;
        let (idx, high): (Vec<f64>, Vec<f64>) = bins
            .iter()
            .enumerate()
            .filter_map(|(b, bin)| bin.fractions.map(|f| (b as f64, f[2])))
            .unzip();
        let col = |f: fn(&ScoreRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
        let rho_q = spearman(&zs, &qs);
        let trend = spearman(&idx, &high);
        write_csv(
            &dir.join("report_summary.csv"),
            &[
                "n",
                "spearman_z_Q",
                "spearman_z_L",
                "spearman_z_H",
                "spearman_z_S",
                "high_curve_trend",
            ],
            &[vec![
                rows.len().to_string(),
                format_float(rho_q),
                format_float(spearman(&zs, &col(|r| r.triple.length as f64))),
                format_float(spearman(&zs, &col(|r| r.triple.entropy))),
                format_float(spearman(&zs, &col(|r| r.triple.skillfulness))),
                format_float(trend),
            ]],
        )?;
        if self.cli.svg {
            let series: Vec<Series> = ComplexityLabel::ALL
                .iter()
                .map(|&l| Series {
                    name: l.name(),
                    points: bins
                        .iter()
                        .filter_map(|bin| {
                            bin.fractions
                                .map(|f| ((bin.lo + bin.hi) / 2.0, f[l as usize]))
                        })
                        .collect(),
                })
                .collect();
            write_text(
                &dir.join("label_curve.svg"),
                &line_chart("label probability by complexity score", &series),
            )?;
        }
        println!(
            "{} contacts: Spearman(z, Q) {rho_q:.3}, high-label trend {trend:.3}",
            rows.len()
        );
        Ok(())
    }
}
