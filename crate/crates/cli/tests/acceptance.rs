//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use complexity_core::cauc::{complexity_auc, effectiveness};
use complexity_core::gbdt::{self, ProbVector, TrainConfig};
use complexity_core::student::{evaluate, EmbeddingNet, TrainingSet};
use complexity_core::teacher::{
    entropy, kl_divergence, skillfulness, ComplexityTriple, ScorePipeline,
};
use complexity_core::textvec::SparseVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// A scratch directory holding `corpus/`, `models/`, `reports/` and a
/// config whose paths point at them.
struct Run {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Run {
    fn new(extra: &str) -> Run {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        for sub in ["corpus", "models", "reports"] {
            std::fs::create_dir(root.join(sub)).unwrap();
        }
        let config = format!(
            "[paths]\ncorpus = {:?}\nmodels = {:?}\nreports = {:?}\n{extra}",
            root.join("corpus"),
            root.join("models"),
            root.join("reports"),
        );
        std::fs::write(root.join("config.toml"), config).unwrap();
        Run { _dir: dir, root }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    fn cli(&self, args: &[&str]) -> Duration {
        let start = Instant::now();
        let out = Command::new(env!("CARGO_BIN_EXE_complexity"))
            .current_dir(&self.root)
            .arg("--config")
            .arg(self.path("config.toml"))
            .args(args)
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "`complexity {}` failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr)
        );
        start.elapsed()
    }
}

fn csv_table(path: &Path) -> Vec<HashMap<String, String>> {
    let mut r = csv::Reader::from_path(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let header = r.headers().unwrap().clone();
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            header
                .iter()
                .map(str::to_string)
                .zip(rec.iter().map(str::to_string))
                .collect()
        })
        .collect()
}

fn num(row: &HashMap<String, String>, key: &str) -> f64 {
    row[key]
        .parse()
        .unwrap_or_else(|_| panic!("column {key} is `{}`", row[key]))
}

/// The full default-scale pipeline, shared by several criteria.
struct Pipeline {
    run: Run,
    teacher_time: Duration,
    student_time: Duration,
    total_time: Duration,
    identity: Run,
}

fn full_pipeline() -> Pipeline {
    let run = Run::new("");
    let start = Instant::now();
    let mut teacher_time = run.cli(&["generate"]);
    teacher_time += run.cli(&["train-teacher"]);
    run.cli(&["score"]);
    run.cli(&["label"]);
    let student_time = run.cli(&["train-student"]);
    run.cli(&["report"]);
    run.cli(&["emulate"]);
    let total_time = start.elapsed();
    let identity = Run::new("");
    for dir in ["models", "corpus"] {
        for entry in std::fs::read_dir(run.path(dir)).unwrap() {
            let entry = entry.unwrap();
            std::fs::copy(entry.path(), identity.path(dir).join(entry.file_name())).unwrap();
        }
    }
    identity.cli(&["emulate", "--identity"]);
    Pipeline {
        run,
        teacher_time,
        student_time,
        total_time,
        identity,
    }
}

fn pv(p: &[f64]) -> ProbVector {
    ProbVector::new(p.to_vec()).unwrap()
}

fn formula_oracles() -> Outcome {
    let start = Instant::now();
    let checks = [
        ("entropy [0.5,0.5]", entropy(&pv(&[0.5, 0.5])), 2f64.ln()),
        (
            "entropy uniform(152)",
            entropy(&ProbVector::uniform(152)),
            152f64.ln(),
        ),
        (
            "KL([0.5,0.5] || [0.25,0.75])",
            kl_divergence(&pv(&[0.5, 0.5]), &pv(&[0.25, 0.75])).unwrap(),
            0.5 * 2f64.ln() + 0.5 * (2.0f64 / 3.0).ln(),
        ),
        (
            "skillfulness",
            skillfulness(&[pv(&[0.25, 0.75]), pv(&[0.5, 0.5])]).unwrap(),
            0.25 * 0.5f64.ln() + 0.75 * 1.5f64.ln(),
        ),
    ];
    let e = evaluate(&[true, true, false, true], &[true, false, false, true]).unwrap();
    let mut worst = 0.0f64;
    for (_, got, want) in &checks {
        worst = worst.max(rel_err(*got, *want));
    }
    worst = worst
        .max(rel_err(e.precision.unwrap(), 2.0 / 3.0))
        .max(rel_err(e.recall.unwrap(), 1.0));
    let elapsed = start.elapsed();
    check(
        worst < 1e-6 && elapsed < Duration::from_secs(1),
        format!("max relative error {worst:.1e} in {elapsed:.2?}"),
    )
}

fn staged_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let random_row = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..10)
            .map(|_| {
                if rng.random_bool(0.5) {
                    rng.random::<f64>()
                } else {
                    0.0
                }
            })
            .collect()
    };
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for _ in 0..600 {
        let row = random_row(&mut rng);
        ys.push(((row[0] + row[1] + 0.5 * rng.random::<f64>()) * 2.0) as usize % 5);
        xs.push(SparseVector::from_dense(&row));
    }
    let config = TrainConfig {
        rounds: 30,
        min_samples_leaf: 5,
        ..TrainConfig::multiclass(5)
    };
    let model = gbdt::train(&xs, &ys, &config).map_err(|e| e.to_string())?;
    let mut mismatches = 0;
    let mut worst_sum = 0.0f64;
    for _ in 0..1000 {
        let x = SparseVector::from_dense(&random_row(&mut rng));
        let staged = model.staged_predict_proba(&x);
        if staged.last() != Some(&model.predict_proba(&x)) {
            mismatches += 1;
        }
        for p in &staged {
            worst_sum = worst_sum.max((p.as_slice().iter().sum::<f64>() - 1.0).abs());
        }
    }
    check(
        mismatches == 0 && worst_sum <= 1e-9,
        format!("{mismatches} mismatches in 1000 inputs, max |sum - 1| {worst_sum:.1e}"),
    )
}

fn score_uniformity(p: &Pipeline) -> Outcome {
    let s = &csv_table(&p.run.path("reports/teacher_summary.csv"))[0];
    let (ks, bound, n) = (num(s, "ks_uniform"), num(s, "ks_bound"), num(s, "n"));
    check(
        n == 20_000.0 && ks < bound && p.teacher_time < Duration::from_secs(120),
        format!(
            "KS {ks:.5} < {bound:.5} at n = {n}, generate + train-teacher {:.1?}",
            p.teacher_time
        ),
    )
}

fn triples_from_scores(path: &Path) -> Vec<ComplexityTriple> {
    csv_table(path)
        .iter()
        .map(|r| ComplexityTriple {
            length: r["L"].parse().unwrap(),
            entropy: num(r, "H"),
            skillfulness: num(r, "S"),
        })
        .collect()
}

fn rank_invariance(p: &Pipeline) -> Outcome {
    let triples = triples_from_scores(&p.run.path("reports/scores.csv"));
    let base = ScorePipeline::fit(&triples, 2.0).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for scale_h in [true, false] {
        let scaled: Vec<ComplexityTriple> = triples
            .iter()
            .map(|t| ComplexityTriple {
                entropy: if scale_h {
                    t.entropy * 100.0
                } else {
                    t.entropy
                },
                skillfulness: if scale_h {
                    t.skillfulness
                } else {
                    t.skillfulness * 100.0
                },
                ..*t
            })
            .collect();
        let refit = ScorePipeline::fit(&scaled, 2.0).map_err(|e| e.to_string())?;
        for (a, b) in triples.iter().zip(&scaled) {
            worst = worst.max((base.score(a) - refit.score(b)).abs());
        }
    }
    check(
        worst <= 1e-9,
        format!(
            "max |dQ| {worst:.1e} over {} contacts for H x100 and S x100",
            triples.len()
        ),
    )
}

fn signal_recovery(p: &Pipeline) -> Outcome {
    let s = &csv_table(&p.run.path("reports/report_summary.csv"))[0];
    let (rho, trend) = (num(s, "spearman_z_Q"), num(s, "high_curve_trend"));
    check(
        rho > 0.5 && trend > 0.8,
        format!("Spearman(z, Q) {rho:.3}, high-curve trend {trend:.3}"),
    )
}

fn student_direction(p: &Pipeline) -> Outcome {
    let labels = csv_table(&p.run.path("reports/labels.csv"));
    let rate = labels.iter().filter(|r| r["label"] == "1").count() as f64 / labels.len() as f64;
    let eval = csv_table(&p.run.path("reports/student_eval.csv"));
    let row = |name: &str| {
        eval.iter()
            .find(|r| r["encoding"] == name)
            .expect("encoding row")
    };
    let (emb, one) = (row("embedding"), row("onehot"));
    let base = num(emb, "base_rate");
    let precision = num(emb, "precision");
    let (recall_e, recall_o) = (num(emb, "recall"), num(one, "recall"));
    check(
        (rate - 0.2).abs() <= 0.01
            && precision >= base + 0.1
            && recall_e >= recall_o
            && p.student_time < Duration::from_secs(120),
        format!(
            "positive rate {rate:.4}, precision {precision:.3} vs base {base:.3}, \
             recall embedding {recall_e:.3} vs one-hot {recall_o:.3}, {:.1?}",
            p.student_time
        ),
    )
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut net =
        EmbeddingNet::new(&[4, 3], &[2, 2], 3, 0.5, &mut rng).map_err(|e| e.to_string())?;
    let data = TrainingSet {
        levels: vec![vec![0, 2], vec![3, 1], vec![1, 0], vec![4, 3], vec![2, 2]],
        numeric: (0..5)
            .map(|_| (0..3).map(|_| rng.random_range(-1.5..1.5)).collect())
            .collect(),
        labels: vec![true, false, false, true, true],
    };
    let (_, analytic) = net.loss_and_gradient(&data);
    let base = net.params().to_vec();
    let h = 1e-5;
    let mut worst = 0.0f64;
    for k in 0..base.len() {
        let mut p = base.clone();
        p[k] += h;
        net.set_params(&p).unwrap();
        let up = net.loss(&data);
        p[k] = base[k] - h;
        net.set_params(&p).unwrap();
        let down = net.loss(&data);
        let numeric = (up - down) / (2.0 * h);
        let denom = analytic[k].abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((analytic[k] - numeric).abs() / denom);
    }
    check(
        worst < 1e-4,
        format!(
            "max relative error {worst:.1e} over {} parameters",
            base.len()
        ),
    )
}

fn cauc_oracles() -> Outcome {
    let draw = |seed: u64, f: fn(f64) -> f64| -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..10_000).map(|_| f(rng.random::<f64>())).collect()
    };
    let bench = draw(1, |u| u);
    let same = draw(2, |u| u);
    let high = draw(3, f64::sqrt);
    let low = draw(4, |u| 1.0 - (1.0 - u).sqrt());
    let auc = |a: &[f64], b: &[f64]| complexity_auc(a, b, 1000).unwrap();
    let identical = auc(&bench, &same).auc;
    let hi = auc(&bench, &high);
    let lo = auc(&bench, &low).auc;
    let swap = auc(&bench, &high).auc + auc(&high, &bench).auc;
    check(
        (identical - 0.5).abs() <= 0.01
            && (hi.auc - 2.0 / 3.0).abs() <= 0.02
            && (hi.effectiveness + 1.0 / 3.0).abs() <= 0.04
            && (lo - 1.0 / 3.0).abs() <= 0.02
            && (swap - 1.0).abs() <= 0.02,
        format!(
            "identical {identical:.4}, CDF y^2 {:.4} (eps {:+.4}), CDF 1-(1-y)^2 {lo:.4}, swap sum {swap:.4}",
            hi.auc, hi.effectiveness
        ),
    )
}

fn effectiveness_arithmetic() -> Outcome {
    let a = effectiveness(0.698).map_err(|e| e.to_string())?;
    let b = effectiveness(0.294).map_err(|e| e.to_string())?;
    check(
        (a + 0.396).abs() <= 0.001 && (b - 0.412).abs() <= 0.001,
        format!("effectiveness(0.698) = {a:+.4}, effectiveness(0.294) = {b:+.4}"),
    )
}

fn emulation_direction(p: &Pipeline) -> Outcome {
    let lookup = |run: &Run, bench: &str, target: &str| -> (f64, f64) {
        let rows = csv_table(&run.path("reports/emulate_report.csv"));
        let r = rows
            .iter()
            .find(|r| r["benchmark"] == bench && r["target"] == target)
            .expect("comparison row");
        (num(r, "auc"), num(r, "n_target"))
    };
    let (control, n_control) = lookup(&p.run, "background", "control");
    let (treated, n_treated) = lookup(&p.run, "control", "treatment");
    let (identity, _) = lookup(&p.identity, "control", "treatment");
    check(
        control > 0.55
            && treated < 0.45
            && (identity - 0.5).abs() <= 0.03
            && n_control == 2000.0
            && n_treated == 2000.0
            && p.total_time < Duration::from_secs(300),
        format!(
            "control vs background {control:.4}, treatment vs control {treated:.4}, \
             identity {identity:.4}, pipeline {:.1?}",
            p.total_time
        ),
    )
}

fn artifacts(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    for dir in ["corpus", "models", "reports"] {
        let mut entries: Vec<_> = std::fs::read_dir(root.join(dir))
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        entries.sort();
        for path in entries {
            let rel = path.strip_prefix(root).unwrap().to_path_buf();
            out.push((rel, std::fs::read(&path).unwrap()));
        }
    }
    out
}

fn determinism() -> Outcome {
    let config =
        "[corpus]\nn_contacts = 3000\n[emulate]\nbackground = 1000\narm_size = 150\npool = 8000\n";
    let runs: Vec<Run> = (0..2).map(|_| Run::new(config)).collect();
    for run in &runs {
        for args in [
            &["generate"][..],
            &["train-teacher", "--svg"],
            &["score"],
            &["label"],
            &["train-student"],
            &["predict"],
            &["report", "--svg"],
            &["emulate", "--svg"],
            &[
                "cauc",
                "--benchmark",
                "reports/scores.csv",
                "--groups",
                "reports/emulate_scores.csv",
                "--svg",
            ],
        ] {
            run.cli(args);
        }
    }
    let (a, b) = (artifacts(&runs[0].root), artifacts(&runs[1].root));
    let names_match = a.iter().map(|x| &x.0).eq(b.iter().map(|x| &x.0));
    let differing: Vec<String> = a
        .iter()
        .zip(&b)
        .filter(|(x, y)| x.1 != y.1)
        .map(|(x, _)| x.0.display().to_string())
        .collect();
    check(
        names_match && differing.is_empty(),
        if differing.is_empty() {
            format!("{} artifacts byte-identical across two runs", a.len())
        } else {
            format!("differing artifacts: {}", differing.join(", "))
        },
    )
}

fn guarded(f: impl FnOnce() -> Outcome) -> Outcome {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into());
        Err(msg)
    })
}

fn main() {
    std::panic::set_hook(Box::new(|_| {}));
    let pipeline = catch_unwind(full_pipeline).map_err(|e| {
        e.downcast_ref::<String>()
            .cloned()
            .unwrap_or_else(|| "pipeline panicked".into())
    });
    let with_pipeline = |f: fn(&Pipeline) -> Outcome| -> Outcome {
        match &pipeline {
            Ok(p) => guarded(|| f(p)),
            Err(e) => Err(format!("pipeline failed: {e}")),
        }
    };
    let results: Vec<(&str, Outcome)> = vec![
        ("formula oracles", guarded(formula_oracles)),
        ("staged consistency", guarded(staged_consistency)),
        ("score uniformity", with_pipeline(score_uniformity)),
        ("rank invariance", with_pipeline(rank_invariance)),
        ("complexity-signal recovery", with_pipeline(signal_recovery)),
        ("student direction", with_pipeline(student_direction)),
        ("embedding gradient check", guarded(gradient_check)),
        ("Complexity AUC oracles", guarded(cauc_oracles)),
        (
            "effectiveness arithmetic",
            guarded(effectiveness_arithmetic),
        ),
        ("emulation direction", with_pipeline(emulation_direction)),
        ("determinism", guarded(determinism)),
    ];
    let mut failed = 0;
    for (i, (name, outcome)) in results.iter().enumerate() {
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {tag} {name}: {detail}", i + 1);
    }
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
