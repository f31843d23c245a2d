use std::path::{Path, PathBuf};
use std::process::{Command, Output};

struct Workspace {
    dir: tempfile::TempDir,
}

impl Workspace {
    /// A workspace with the three standard directories and a small config.
    fn new(n_contacts: usize) -> Self {
        let dir = tempfile::tempdir().unwrap();
        for sub in ["corpus", "models", "reports"] {
            std::fs::create_dir(dir.path().join(sub)).unwrap();
        }
        let config = format!(
            "seed = 3\n\
             [corpus]\nn_contacts = {n_contacts}\nn_classes = 6\n\
             [teacher]\nrounds = 12\n\
             [student]\nrounds = 20\nepochs = 3\n\
             [cauc]\ngrid = 200\n\
             [emulate]\nbackground = 600\narm_size = 60\npool = 3000\n"
        );
        std::fs::write(dir.path().join("config.toml"), config).unwrap();
        Workspace { dir }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_complexity"))
            .current_dir(self.dir.path())
            .arg("--config")
            .arg("config.toml")
            .args(args)
            .output()
            .unwrap()
    }

    fn ok(&self, args: &[&str]) -> String {
        let out = self.run(args);
        assert!(
            out.status.success(),
            "{args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8(out.stdout).unwrap()
    }
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect()
}

#[test]
fn missing_output_directory_is_named() {
    let ws = Workspace::new(50);
    let out = ws.run(&["generate", "--out", "nowhere/deeper"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("nowhere/deeper"), "{stderr}");
}

#[test]
fn usage_errors_exit_with_one() {
    let ws = Workspace::new(50);
    assert_eq!(ws.run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        ws.run(&["cauc", "--benchmark", "x.csv"]).status.code(),
        Some(1)
    );
    assert_eq!(
        ws.run(&["label", "--threshold", "1.5"]).status.code(),
        Some(1)
    );
    assert!(ws.run(&["--help"]).status.success());
}

#[test]
fn bad_config_is_a_data_error() {
    let ws = Workspace::new(50);
    std::fs::write(ws.path("config.toml"), "[corpus]\nno_such_key = 1\n").unwrap();
    let out = ws.run(&["generate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_key"));
}

#[test]
fn generate_honours_the_configured_size_and_seed() {
    let ws = Workspace::new(120);
    ws.ok(&["generate"]);
    let first = read(&ws.path("corpus/transcripts.jsonl"));
    assert_eq!(first.iter().filter(|&&b| b == b'\n').count(), 120);
    std::fs::create_dir(ws.path("again")).unwrap();
    ws.ok(&["generate", "--out", "again"]);
    for file in ["transcripts.jsonl", "precontact.csv", "latents.csv"] {
        assert_eq!(
            read(&ws.path("corpus").join(file)),
            read(&ws.path("again").join(file)),
            "{file}"
        );
    }
    std::fs::create_dir(ws.path("other")).unwrap();
    ws.ok(&["generate", "--out", "other", "--seed", "4"]);
    assert_ne!(first, read(&ws.path("other/transcripts.jsonl")));
}

#[test]
fn malformed_transcripts_fail_with_the_line() {
    let ws = Workspace::new(50);
    std::fs::write(ws.path("corpus/transcripts.jsonl"), "{\"id\": \"a\"}\n").unwrap();
    let out = ws.run(&["train-teacher"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}

#[test]
fn small_pipeline_runs_end_to_end() {
    let ws = Workspace::new(1500);
    ws.ok(&["generate"]);
    let summary = ws.ok(&["train-teacher", "--svg"]);
    assert!(summary.contains("KS to uniform"), "{summary}");
    for file in [
        "models/vocabulary.csv",
        "models/teacher.gbdt",
        "models/pipeline.txt",
        "reports/teacher_weights.csv",
        "reports/teacher_histograms.csv",
        "reports/teacher_summary.csv",
        "reports/teacher_histograms.svg",
    ] {
        assert!(ws.path(file).is_file(), "{file}");
    }
    let teacher_summary = csv_rows(&ws.path("reports/teacher_summary.csv"));
    let ks: f64 = teacher_summary[0][2].parse().unwrap();
    let bound: f64 = teacher_summary[0][3].parse().unwrap();
    assert!(ks < bound);

    ws.ok(&["score"]);
    let scores = csv_rows(&ws.path("reports/scores.csv"));
    assert_eq!(scores.len(), 1500);
    ws.ok(&["label"]);
    let labels = csv_rows(&ws.path("reports/labels.csv"));
    let positives = labels.iter().filter(|r| r[2] == "1").count() as f64 / 1500.0;
    assert!((positives - 0.2).abs() < 2.0 / 1500f64.sqrt());

    ws.ok(&["train-student"]);
    let eval = csv_rows(&ws.path("reports/student_eval.csv"));
    assert_eq!(
        eval.iter().map(|r| r[0].as_str()).collect::<Vec<_>>(),
        ["embedding", "onehot"]
    );
    ws.ok(&["predict"]);
    assert_eq!(csv_rows(&ws.path("reports/predictions.csv")).len(), 1500);

    ws.ok(&["report", "--svg"]);
    assert_eq!(csv_rows(&ws.path("reports/label_curve.csv")).len(), 20);

    ws.ok(&[
        "cauc",
        "--benchmark",
        "reports/scores.csv",
        "--target",
        "reports/scores.csv",
        "--svg",
    ]);
    let auc: f64 = csv_rows(&ws.path("reports/cauc_summary.csv"))[0][0]
        .parse()
        .unwrap();
    assert!((auc - 0.5).abs() < 0.01);
    let svg = String::from_utf8(read(&ws.path("reports/cauc_curve.svg"))).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
    assert!(svg.contains("class=\"identity\"") && svg.contains("class=\"curve\""));

    ws.ok(&["emulate"]);
    let report = csv_rows(&ws.path("reports/emulate_report.csv"));
    assert_eq!(report.len(), 3);
    let groups = csv_rows(&ws.path("reports/emulate_groups.csv"));
    assert_eq!(groups.len(), 2);
}
