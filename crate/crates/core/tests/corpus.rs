use complexity_core::corpus::{self, CorpusConfig, Generator, Speaker};
use complexity_core::stats::spearman;
use complexity_core::teacher::agent_sentence_count;

fn config(n: usize, seed: u64) -> CorpusConfig {
    CorpusConfig {
        n_contacts: n,
        seed,
        ..CorpusConfig::default()
    }
}

#[test]
fn length_tracks_the_latent() {
    let g = corpus::generate_corpus(&config(10_000, 7)).unwrap();
    let lengths: Vec<f64> = g
        .transcripts
        .iter()
        .map(|t| agent_sentence_count(t) as f64)
        .collect();
    let rho = spearman(&g.latents, &lengths);
    assert!(rho > 0.6, "Spearman(z, L) = {rho}");
}

#[test]
fn off_topic_share_grows_with_the_latent() {
    let generator = Generator::new(config(4000, 3)).unwrap();
    let g = generator.generate();
    let off: Vec<f64> = g
        .transcripts
        .iter()
        .map(|t| generator.lexicon().off_topic_fraction(t))
        .collect();
    assert!(spearman(&g.latents, &off) > 0.3);
}

#[test]
fn every_contact_has_a_record_and_an_agent_turn() {
    let g = corpus::generate_corpus(&config(500, 1)).unwrap();
    corpus::check_join(&g.transcripts, &g.records).unwrap();
    for t in &g.transcripts {
        assert!(t.utterances.iter().any(|u| u.speaker == Speaker::Agent));
        assert!(t.label < 12);
    }
    let widths = (g.records[0].numeric.len(), g.records[0].categorical.len());
    assert_eq!(widths, (4, 3));
}

#[test]
fn files_round_trip_byte_for_byte() {
    let g = corpus::generate_corpus(&config(1000, 11)).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    corpus::save_corpus(a.path(), &g.transcripts, &g.records).unwrap();
    let (transcripts, records) = corpus::load_corpus(a.path()).unwrap();
    assert_eq!(transcripts, g.transcripts);
    assert_eq!(records, g.records);

    let again = corpus::generate_corpus(&config(1000, 11)).unwrap();
    corpus::save_corpus(b.path(), &again.transcripts, &again.records).unwrap();
    for file in [corpus::TRANSCRIPTS_FILE, corpus::RECORDS_FILE] {
        assert_eq!(
            std::fs::read(a.path().join(file)).unwrap(),
            std::fs::read(b.path().join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn latents_round_trip() {
    let g = corpus::generate_corpus(&config(50, 2)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join(corpus::LATENTS_FILE);
    let ids: Vec<String> = g.transcripts.iter().map(|t| t.id.clone()).collect();
    corpus::save_latents(&path, &ids, &g.latents).unwrap();
    let loaded = corpus::load_latents(&path).unwrap();
    for (id, z) in ids.iter().zip(&g.latents) {
        assert_eq!(loaded[id], *z);
    }
}

#[test]
fn missing_label_is_reported_at_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.jsonl");
    let good = r#"{"id":"a","label":0,"group":"g","utterances":[{"speaker":"agent","text":"hi"}]}"#;
    let bad = r#"{"id":"b","group":"g","utterances":[{"speaker":"agent","text":"hi"}]}"#;
    std::fs::write(&path, format!("{good}\n{bad}\n")).unwrap();
    let message = corpus::load_transcripts(&path).unwrap_err().to_string();
    assert!(
        message.contains("line 2") && message.contains("label"),
        "{message}"
    );
}

#[test]
fn duplicate_ids_and_empty_text_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.jsonl");
    let line = r#"{"id":"a","label":0,"group":"g","utterances":[{"speaker":"agent","text":"hi"}]}"#;
    std::fs::write(&path, format!("{line}\n{line}\n")).unwrap();
    assert!(corpus::load_transcripts(&path)
        .unwrap_err()
        .to_string()
        .contains("line 2"));

    let blank =
        r#"{"id":"a","label":0,"group":"g","utterances":[{"speaker":"agent","text":"  ,"}]}"#;
    std::fs::write(&path, format!("{blank}\n")).unwrap();
    assert!(corpus::load_transcripts(&path)
        .unwrap_err()
        .to_string()
        .contains("line 1"));
}

#[test]
fn empty_file_is_an_empty_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.jsonl");
    std::fs::write(&path, "").unwrap();
    assert!(corpus::load_transcripts(&path).unwrap().is_empty());
}

#[test]
fn bad_numeric_field_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    std::fs::write(&path, "contact_id,n0,c0\na,1.5,x\nb,oops,y\n").unwrap();
    let message = corpus::load_records(&path).unwrap_err().to_string();
    assert!(
        message.contains("line 3") && message.contains("n0"),
        "{message}"
    );
}
