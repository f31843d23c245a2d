//! Hand-computed values for the closed-form pieces of the pipeline.

use complexity_core::cauc::{self, complexity_auc, dual_transform, effectiveness};
use complexity_core::corpus::{Speaker, Transcript, Utterance};
use complexity_core::gbdt::ProbVector;
use complexity_core::student::{evaluate, make_labels};
use complexity_core::teacher::{agent_sentence_count, entropy, kl_divergence, skillfulness};
use complexity_core::textvec::Vocabulary;
use complexity_core::transforms::{EmpiricalQuantileMap, Target};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pv(p: &[f64]) -> ProbVector {
    ProbVector::new(p.to_vec()).unwrap()
}

fn rel_close(actual: f64, expected: f64, tol: f64) {
    let err = (actual - expected).abs() / expected.abs().max(1e-300);
    assert!(err < tol, "{actual} vs {expected} (relative error {err:e})");
}

fn transcript(speakers: &[Speaker]) -> Transcript {
    Transcript {
        id: "t".into(),
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
fn agent_count_on_alternating_transcript() {
    let speakers: Vec<Speaker> = (0..10)
        .map(|i| {
            if i % 2 == 0 {
                Speaker::Customer
            } else {
                Speaker::Agent
            }
        })
        .collect();
    assert_eq!(agent_sentence_count(&transcript(&speakers)), 5);
    let mixed = [
        Speaker::Agent,
        Speaker::Customer,
        Speaker::Agent,
        Speaker::Customer,
        Speaker::Agent,
    ];
    assert_eq!(agent_sentence_count(&transcript(&mixed)), 3);
    assert_eq!(
        agent_sentence_count(&transcript(&[Speaker::Customer; 4])),
        0
    );
}

#[test]
fn entropy_values() {
    rel_close(entropy(&pv(&[0.5, 0.5])), std::f64::consts::LN_2, 1e-6);
    rel_close(entropy(&ProbVector::uniform(152)), 152f64.ln(), 1e-6);
    rel_close(entropy(&ProbVector::uniform(152)), 5.0239, 1e-4);
    assert_eq!(entropy(&pv(&[0.0, 1.0, 0.0])), 0.0);
}

#[test]
fn kl_values() {
    let p = pv(&[0.5, 0.5]);
    let q = pv(&[0.25, 0.75]);
    let expected = 0.5 * 2f64.ln() + 0.5 * (2.0f64 / 3.0).ln();
    rel_close(kl_divergence(&p, &q).unwrap(), expected, 1e-6);
    rel_close(kl_divergence(&p, &q).unwrap(), 0.14384, 1e-4);
    let reverse = 0.25 * 0.5f64.ln() + 0.75 * 1.5f64.ln();
    rel_close(kl_divergence(&q, &p).unwrap(), reverse, 1e-6);
    assert!((kl_divergence(&p, &q).unwrap() - kl_divergence(&q, &p).unwrap()).abs() > 1e-3);
    assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
}

#[test]
fn skillfulness_values() {
    let staged = [pv(&[0.25, 0.75]), pv(&[0.5, 0.5])];
    let expected = 0.25 * 0.5f64.ln() + 0.75 * 1.5f64.ln();
    rel_close(skillfulness(&staged).unwrap(), expected, 1e-6);
    rel_close(skillfulness(&staged).unwrap(), 0.13081, 1e-4);
    assert_eq!(skillfulness(&staged[1..]).unwrap(), 0.0);
    let constant = vec![pv(&[0.2, 0.3, 0.5]); 7];
    assert_eq!(skillfulness(&constant).unwrap(), 0.0);
}

#[test]
fn precision_recall_hand_count() {
    let e = evaluate(&[true, true, false, true], &[true, false, false, true]).unwrap();
    rel_close(e.precision.unwrap(), 2.0 / 3.0, 1e-6);
    rel_close(e.recall.unwrap(), 1.0, 1e-6);
    let perfect = evaluate(&[true, false, true], &[true, false, true]).unwrap();
    assert_eq!((perfect.precision, perfect.recall), (Some(1.0), Some(1.0)));
    let silent = evaluate(&[false, false], &[true, false]).unwrap();
    assert_eq!((silent.precision, silent.recall), (None, Some(0.0)));
}

#[test]
fn label_threshold_boundary() {
    assert_eq!(
        make_labels(&[0.8, 0.79999, 0.95], 0.8),
        vec![true, false, true]
    );
}

#[test]
fn vocabulary_hand_counts() {
    let docs = [vec!["a", "b"], vec!["b", "c"]];
    let tokens = || docs.iter().map(|d| d.iter().map(|t| t.to_string()));
    let v = Vocabulary::fit_documents(tokens(), 1).unwrap();
    assert_eq!(v.len(), 3);
    assert_eq!(
        ["a", "b", "c"].map(|t| v.doc_freq(t)),
        [Some(1), Some(2), Some(1)]
    );
    // ln((1 + D) / (1 + df)) + 1 with D = 2, df = 2.
    rel_close(v.idf(v.index_of("b").unwrap()), 1.0, 1e-12);
    rel_close(
        v.idf(v.index_of("a").unwrap()),
        (3.0f64 / 2.0).ln() + 1.0,
        1e-12,
    );

    let v2 = Vocabulary::fit_documents(tokens(), 2).unwrap();
    assert_eq!(v2.len(), 1);
    assert!(v2.index_of("b").is_some());

    let one = v.vectorize_tokens(["c".to_string()]);
    assert_eq!(one.nnz(), 1);
    rel_close(one.norm(), 1.0, 1e-12);
    assert!(v.vectorize_tokens(["zzz".to_string()]).is_zero());
}

#[test]
fn quantile_map_small_samples() {
    let u = EmpiricalQuantileMap::fit(&[1.0, 2.0, 3.0, 4.0, 5.0], Target::Uniform).unwrap();
    assert!((u.transform(3.0) - 0.5).abs() < 1e-12);
    assert!((u.transform(-10.0) - 0.1).abs() < 1e-12);
    let n = EmpiricalQuantileMap::fit(&[1.0, 2.0, 3.0, 4.0, 5.0], Target::Normal).unwrap();
    assert!(n.transform(3.0).abs() < 1e-12);
    assert!((n.inverse_transform(0.0).unwrap() - 3.0).abs() < 1e-12);
    let two = EmpiricalQuantileMap::fit(&[0.0, 1.0], Target::Uniform).unwrap();
    assert!((two.inverse_transform(0.5).unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn normal_map_of_normal_sample_is_near_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let normal = rand_distr::StandardNormal;
    let xs: Vec<f64> = (0..100_000).map(|_| rng.sample::<f64, _>(normal)).collect();
    let map = EmpiricalQuantileMap::fit(&xs, Target::Normal).unwrap();
    let worst = (0..=400)
        .map(|i| -2.0 + i as f64 * 0.01)
        .map(|x| (map.transform(x) - x).abs())
        .fold(0.0, f64::max);
    assert!(worst < 0.05, "max deviation {worst}");
}

/// Inverse-CDF sampling; `sqrt` gives CDF `y^2`, `1 - sqrt(1 - u)` gives `1 - (1 - y)^2`.
fn sample<F: Fn(f64) -> f64>(n: usize, seed: u64, inverse_cdf: F) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| inverse_cdf(rng.random::<f64>())).collect()
}

#[test]
fn dual_transform_matches_analytic_composition() {
    let bench = sample(10_000, 1, |u| u);
    let target = sample(10_000, 2, f64::sqrt);
    let f = dual_transform(&bench, &target, 0.25).unwrap();
    assert!((f - 0.5).abs() < 0.02, "f(0.25) = {f}");
}

#[test]
fn auc_oracles() {
    let bench = sample(10_000, 11, |u| u);
    let same = sample(10_000, 12, |u| u);
    let high = sample(10_000, 13, f64::sqrt);
    let low = sample(10_000, 14, |u| 1.0 - (1.0 - u).sqrt());

    let c = complexity_auc(&bench, &same, 1000).unwrap();
    assert!((c.auc - 0.5).abs() < 0.01, "identical: {}", c.auc);

    let c = complexity_auc(&bench, &high, 1000).unwrap();
    assert!((c.auc - 2.0 / 3.0).abs() < 0.02, "sqrt: {}", c.auc);
    assert!((c.effectiveness + 1.0 / 3.0).abs() < 0.04);

    let c = complexity_auc(&bench, &low, 1000).unwrap();
    assert!((c.auc - 1.0 / 3.0).abs() < 0.02, "low: {}", c.auc);
    assert!((c.effectiveness - 1.0 / 3.0).abs() < 0.04);

    let ab = complexity_auc(&bench, &high, 1000).unwrap().auc;
    let ba = complexity_auc(&high, &bench, 1000).unwrap().auc;
    assert!((ab + ba - 1.0).abs() < 0.02, "{ab} + {ba}");
}

#[test]
fn effectiveness_arithmetic() {
    assert_eq!(effectiveness(0.5).unwrap(), 0.0);
    assert!((effectiveness(0.698).unwrap() + 0.396).abs() < 0.001);
    assert!((effectiveness(0.294).unwrap() - 0.412).abs() < 0.001);
    assert!(effectiveness(1.5).is_err());
}

#[test]
fn group_report_orders_shifted_groups() {
    let background = sample(5000, 21, |u| u);
    let groups = vec![
        ("harder".to_string(), sample(3000, 22, f64::sqrt)),
        ("easier".to_string(), sample(3000, 23, |u| u * u)),
        ("same".to_string(), sample(3000, 24, |u| u)),
    ];
    let rows = cauc::group_report(&background, &groups, 1000).unwrap();
    let names: Vec<&str> = rows.iter().map(|r| r.name.as_str()).collect();
    assert_eq!(names, ["harder", "same", "easier"]);
    assert!(rows[0].auc > 0.5 && rows[2].auc < 0.5);
    assert!((rows[1].auc - 0.5).abs() < 0.02);
}
