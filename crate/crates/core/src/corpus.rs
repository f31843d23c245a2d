//! Synthetic contact corpora and their on-disk formats.
//!
//! Every generated contact carries a latent complexity `z ~ U(0, 1)`. The
//! latent lengthens the conversation, mixes in vocabulary from a competing
//! product class, and shifts the contact's own vocabulary toward rare terms.
//! The matching pre-contact record holds noisy numeric and categorical
//! proxies of `z` and of the class.
//!
//! Transcripts are stored one JSON object per line; pre-contact records as a
//! CSV table with header `contact_id,n0..nK,c0..cJ`.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::csv_error;
use crate::textvec::tokenize;

pub const TRANSCRIPTS_FILE: &str = "transcripts.jsonl";
pub const RECORDS_FILE: &str = "precontact.csv";
pub const LATENTS_FILE: &str = "latents.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    Customer,
    Agent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Utterance {
    pub speaker: Speaker,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transcript {
    pub id: String,
    pub label: usize,
    pub group: String,
    pub utterances: Vec<Utterance>,
}

impl Transcript {
    fn validate(&self) -> std::result::Result<(), String> {
        if self.id.is_empty() {
            return Err("field `id` is empty".into());
        }
        if self.utterances.is_empty() {
            return Err("field `utterances` is empty".into());
        }
        for (i, u) in self.utterances.iter().enumerate() {
            if tokenize(&u.text).next().is_none() {
                return Err(format!("field `utterances[{i}].text` has no tokens"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreContactRecord {
    pub contact_id: String,
    pub numeric: Vec<f64>,
    pub categorical: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub n_contacts: usize,
    pub n_classes: usize,
    /// Common topical words per class.
    pub topic_vocab: usize,
    /// Rare topical words per class.
    pub rare_vocab: usize,
    /// Words shared by every class.
    pub shared_vocab: usize,
    /// Off-topic token fraction at `z = 1`; it grows as `mixing * z^2`.
    pub mixing: f64,
    /// Own-class rare-word fraction at `z = 0` and `z = 1`.
    pub rare_rate: (f64, f64),
    /// Agent utterance count is `1 + Poisson(length_base + length_scale * z^2)`.
    pub length_base: f64,
    pub length_scale: f64,
    /// Mean words per utterance.
    pub words_per_utterance: f64,
    /// Expected class-bearing tokens per transcript; the rest are shared
    /// filler, so longer contacts carry no extra topical evidence.
    pub topic_tokens: f64,
    pub n_numeric: usize,
    pub categorical_cardinalities: Vec<usize>,
    pub group: String,
    /// Set by the caller rather than read from config files.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            n_contacts: 20_000,
            n_classes: 12,
            topic_vocab: 120,
            rare_vocab: 80,
            shared_vocab: 60,
            mixing: 0.8,
            rare_rate: (0.05, 0.5),
            length_base: 2.0,
            length_scale: 14.0,
            words_per_utterance: 5.0,
            topic_tokens: 20.0,
            n_numeric: 4,
            categorical_cardinalities: vec![40, 8, 3],
            group: "background".into(),
            seed: 7,
        }
    }
}

impl CorpusConfig {
    fn validate(&self) -> Result<()> {
        if self.n_contacts == 0 {
            return Err(Error::invalid("n_contacts must be positive"));
        }
        if self.n_classes == 0 {
            return Err(Error::invalid("n_classes must be positive"));
        }
        if self.topic_vocab == 0 || self.shared_vocab == 0 {
            return Err(Error::invalid("vocabulary sizes must be positive"));
        }
        if !(0.0..=1.0).contains(&self.mixing) {
            return Err(Error::invalid("mixing must lie in [0, 1]"));
        }
        let (lo, hi) = self.rare_rate;
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) {
            return Err(Error::invalid("rare_rate endpoints must lie in [0, 1]"));
        }
        if self.rare_vocab == 0 && (lo > 0.0 || hi > 0.0) {
            return Err(Error::invalid("rare_rate needs a positive rare_vocab"));
        }
        if self.length_base < 0.0
            || self.length_scale < 0.0
            || self.words_per_utterance <= 0.0
            || self.topic_tokens <= 0.0
        {
            return Err(Error::invalid("length parameters must be non-negative"));
        }
        if self.categorical_cardinalities.contains(&0) {
            return Err(Error::invalid("categorical cardinalities must be positive"));
        }
        Ok(())
    }
}

/// Where a generated word comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WordKind {
    Shared,
    Topic(usize),
    Rare(usize),
}

impl WordKind {
    /// Product class owning the word, if any.
    pub fn class(self) -> Option<usize> {
        match self {
            WordKind::Shared => None,
            WordKind::Topic(c) | WordKind::Rare(c) => Some(c),
        }
    }
}

const SYLLABLES: [&str; 16] = [
    "ka", "lo", "mi", "ne", "ru", "sa", "to", "vi", "de", "po", "fu", "ga", "hi", "ju", "be", "zo",
];

/// Bijective base-16 spelling, so distinct ids give distinct words.
fn spell(mut id: usize) -> String {
    let mut parts = Vec::new();
    loop {
        parts.push(SYLLABLES[id % 16]);
        if id < 16 {
            break;
        }
        id = id / 16 - 1;
    }
    parts.reverse();
    parts.concat()
}

/// The generator's word list and the reverse lookup used by test oracles.
#[derive(Debug, Clone)]
pub struct Lexicon {
    shared: Vec<String>,
    topic: Vec<Vec<String>>,
    rare: Vec<Vec<String>>,
    kinds: HashMap<String, WordKind>,
}

impl Lexicon {
    fn new(config: &CorpusConfig) -> Self {
        let mut next = 0usize;
        let mut take = |n: usize| -> Vec<String> {
            let words = (next..next + n).map(spell).collect();
            next += n;
            words
        };
        let shared = take(config.shared_vocab);
        let mut topic = Vec::new();
        let mut rare = Vec::new();
        for _ in 0..config.n_classes {
            topic.push(take(config.topic_vocab));
            rare.push(take(config.rare_vocab));
        }
        let mut kinds = HashMap::new();
        for w in &shared {
            kinds.insert(w.clone(), WordKind::Shared);
        }
        for c in 0..config.n_classes {
            for w in &topic[c] {
                kinds.insert(w.clone(), WordKind::Topic(c));
            }
            for w in &rare[c] {
                kinds.insert(w.clone(), WordKind::Rare(c));
            }
        }
        Lexicon {
            shared,
            topic,
            rare,
            kinds,
        }
    }

    pub fn kind(&self, token: &str) -> Option<WordKind> {
        self.kinds.get(token).copied()
    }

    /// Fraction of a transcript's class-bearing tokens that belong to some
    /// class other than its label.
    pub fn off_topic_fraction(&self, transcript: &Transcript) -> f64 {
        let mut total = 0usize;
        let mut off = 0usize;
        for u in &transcript.utterances {
            for tok in tokenize(&u.text) {
                if let Some(c) = self.kind(&tok).and_then(WordKind::class) {
                    total += 1;
                    if c != transcript.label {
                        off += 1;
                    }
                }
            }
        }
        if total == 0 {
            0.0
        } else {
            off as f64 / total as f64
        }
    }
}

/// Produces contacts for a fixed configuration. Also used to re-render a
/// contact at a different latent complexity.
#[derive(Debug, Clone)]
pub struct Generator {
    config: CorpusConfig,
    lexicon: Lexicon,
    /// For each categorical feature, the level string at each affinity rank.
    level_names: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedCorpus {
    pub transcripts: Vec<Transcript>,
    pub records: Vec<PreContactRecord>,
    /// Latent complexity per contact; for oracles only, never a model input.
    pub latents: Vec<f64>,
}

impl Generator {
    pub fn new(config: CorpusConfig) -> Result<Self> {
        config.validate()?;
        let lexicon = Lexicon::new(&config);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15);
        let level_names = config
            .categorical_cardinalities
            .iter()
            .map(|&card| {
                let mut names: Vec<String> = (0..card).map(|k| format!("v{k}")).collect();
                names.shuffle(&mut rng);
                names
            })
            .collect();
        Ok(Generator {
            config,
            lexicon,
            level_names,
        })
    }

    pub fn config(&self) -> &CorpusConfig {
        &self.config
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    /// Renders a transcript for a contact with the given class and latent.
    pub fn transcript<R: Rng>(
        &self,
        rng: &mut R,
        id: &str,
        label: usize,
        z: f64,
        group: &str,
    ) -> Transcript {
        let cfg = &self.config;
        let z = z.clamp(0.0, 1.0);
        let mean_len = cfg.length_base + cfg.length_scale * z * z;
        let n_agent = 1 + poisson(rng, mean_len);
        let n_customer = if rng.random_bool(0.5) {
            n_agent
        } else {
            n_agent.max(2) - 1
        };
        let confuser = if cfg.n_classes > 1 {
            let other = rng.random_range(0..cfg.n_classes - 1);
            Some(if other >= label { other + 1 } else { other })
        } else {
            None
        };
        let off_rate = cfg.mixing * z * z;
        let rare_rate = cfg.rare_rate.0 + (cfg.rare_rate.1 - cfg.rare_rate.0) * z;

        let mut speakers = Vec::with_capacity(n_agent + n_customer);
        if n_customer < n_agent {
            speakers.push(Speaker::Agent);
        }
        for _ in 0..n_customer {
            speakers.push(Speaker::Customer);
            speakers.push(Speaker::Agent);
        }
        let lengths: Vec<usize> = speakers
            .iter()
            .map(|_| 2 + poisson(rng, (cfg.words_per_utterance - 2.0).max(0.0)))
            .collect();
        let total: usize = lengths.iter().sum();
        let topical = (cfg.topic_tokens / total as f64).min(1.0);
        let utterances = speakers
            .into_iter()
            .zip(lengths)
            .map(|(speaker, n_words)| {
                let words: Vec<&str> = (0..n_words)
                    .map(|_| self.word(rng, label, confuser, topical, off_rate, rare_rate))
                    .collect();
                Utterance {
                    speaker,
                    text: sentence(&words, speaker),
                }
            })
            .collect();
        Transcript {
            id: id.to_string(),
            label,
            group: group.to_string(),
            utterances,
        }
    }

    fn word<R: Rng>(
        &self,
        rng: &mut R,
        label: usize,
        confuser: Option<usize>,
        topical: f64,
        off_rate: f64,
        rare_rate: f64,
    ) -> &str {
        let lex = &self.lexicon;
        if !rng.random_bool(topical) {
            return pick(rng, &lex.shared);
        }
        if let Some(other) = confuser {
            if rng.random_bool(off_rate) {
                return pick(rng, &lex.topic[other]);
            }
        }
        if !lex.rare[label].is_empty() && rng.random_bool(rare_rate) {
            pick(rng, &lex.rare[label])
        } else {
            pick(rng, &lex.topic[label])
        }
    }

    /// Pre-contact features: `n0` tracks `z`, `n1` tracks the class, the
    /// remaining numerics are noise. `c0` levels are ordered by latent
    /// affinity, `c1` follows the class, the rest are noise.
    pub fn record<R: Rng>(&self, rng: &mut R, id: &str, label: usize, z: f64) -> PreContactRecord {
        let cfg = &self.config;
        let unit = Normal::new(0.0, 1.0).expect("unit normal");
        let numeric = (0..cfg.n_numeric)
            .map(|j| match j {
                0 => z + 0.5 * unit.sample(rng),
                1 => label as f64 / cfg.n_classes as f64 + 0.1 * unit.sample(rng),
                _ => unit.sample(rng),
            })
            .collect();
        let categorical = cfg
            .categorical_cardinalities
            .iter()
            .enumerate()
            .map(|(j, &card)| {
                let level = match j {
                    0 if rng.random_bool(0.85) => {
                        let jittered = (z + 0.08 * unit.sample(rng)).clamp(0.0, 1.0 - 1e-12);
                        (jittered * card as f64) as usize
                    }
                    1 if rng.random_bool(0.7) => label % card,
                    _ => rng.random_range(0..card),
                };
                self.level_names[j][level].clone()
            })
            .collect();
        PreContactRecord {
            contact_id: id.to_string(),
            numeric,
            categorical,
        }
    }

    pub fn generate(&self) -> GeneratedCorpus {
        self.generate_with_prefix("t")
    }

    /// Generates `n_contacts` contacts with ids `<prefix><index>`.
    pub fn generate_with_prefix(&self, prefix: &str) -> GeneratedCorpus {
        let cfg = &self.config;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let width = (cfg.n_contacts.max(2) - 1).to_string().len();
        let mut out = GeneratedCorpus {
            transcripts: Vec::with_capacity(cfg.n_contacts),
            records: Vec::with_capacity(cfg.n_contacts),
            latents: Vec::with_capacity(cfg.n_contacts),
        };
        for i in 0..cfg.n_contacts {
            let id = format!("{prefix}{i:0width$}");
            let z: f64 = rng.random();
            let label = rng.random_range(0..cfg.n_classes);
            out.transcripts
                .push(self.transcript(&mut rng, &id, label, z, &cfg.group));
            out.records.push(self.record(&mut rng, &id, label, z));
            out.latents.push(z);
        }
        out
    }
}

/// Builds a corpus from a configuration; identical configs give identical output.
pub fn generate_corpus(config: &CorpusConfig) -> Result<GeneratedCorpus> {
    Ok(Generator::new(config.clone())?.generate())
}

fn poisson<R: Rng>(rng: &mut R, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as usize
}

fn pick<'a, R: Rng>(rng: &mut R, words: &'a [String]) -> &'a str {
    &words[rng.random_range(0..words.len())]
}

fn sentence(words: &[&str], speaker: Speaker) -> String {
    let mut text = words.join(" ");
    if let Some(first) = text.get(0..1) {
        let upper = first.to_uppercase();
        text.replace_range(0..1, &upper);
    }
    text.push(match speaker {
        Speaker::Customer => '?',
        Speaker::Agent => '.',
    });
    text
}

pub fn save_transcripts(path: &Path, transcripts: &[Transcript]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for t in transcripts {
        let line = serde_json::to_string(t).map_err(|e| Error::invalid(e.to_string()))?;
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a transcript file. Blank lines are skipped; any malformed line
/// fails with its 1-based line number and the offending field.
pub fn load_transcripts(path: &Path) -> Result<Vec<Transcript>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let t: Transcript = serde_json::from_str(&line)
            .map_err(|e| Error::schema(path, line_no, strip_json_position(&e)))?;
        t.validate().map_err(|m| Error::schema(path, line_no, m))?;
        if !seen.insert(t.id.clone()) {
            return Err(Error::schema(
                path,
                line_no,
                format!("field `id`: duplicate id `{}`", t.id),
            ));
        }
        out.push(t);
    }
    Ok(out)
}

fn strip_json_position(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    match msg.rfind(" at line ") {
        Some(pos) => msg[..pos].to_string(),
        None => msg,
    }
}

pub fn save_records(path: &Path, records: &[PreContactRecord]) -> Result<()> {
    let (n_num, n_cat) = record_widths(records)?;
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut header = vec!["contact_id".to_string()];
    header.extend((0..n_num).map(|k| format!("n{k}")));
    header.extend((0..n_cat).map(|k| format!("c{k}")));
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for r in records {
        let mut row = Vec::with_capacity(1 + n_num + n_cat);
        row.push(r.contact_id.clone());
        row.extend(r.numeric.iter().map(|v| crate::format::float(*v)));
        row.extend(r.categorical.iter().cloned());
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn record_widths(records: &[PreContactRecord]) -> Result<(usize, usize)> {
    let Some(first) = records.first() else {
        return Ok((0, 0));
    };
    let widths = (first.numeric.len(), first.categorical.len());
    if records
        .iter()
        .any(|r| (r.numeric.len(), r.categorical.len()) != widths)
    {
        return Err(Error::invalid(
            "pre-contact feature widths differ across records",
        ));
    }
    Ok(widths)
}

pub fn load_records(path: &Path) -> Result<Vec<PreContactRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut rows = reader.records();
    let header = match rows.next() {
        None => return Ok(Vec::new()),
        Some(h) => h.map_err(|e| csv_error(path, e))?,
    };
    if header.get(0) != Some("contact_id") {
        return Err(Error::schema(path, 1, "first column must be `contact_id`"));
    }
    let n_num = header
        .iter()
        .skip(1)
        .take_while(|h| h.starts_with('n'))
        .count();
    let n_cat = header.len() - 1 - n_num;
    for (k, name) in header.iter().skip(1).enumerate() {
        let expected = if k < n_num {
            format!("n{k}")
        } else {
            format!("c{}", k - n_num)
        };
        if name != expected {
            return Err(Error::schema(
                path,
                1,
                format!("header column `{name}`, expected `{expected}`"),
            ));
        }
    }
    let mut out = Vec::new();
    for row in rows {
        let row = row.map_err(|e| csv_error(path, e))?;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
        let contact_id = row.get(0).unwrap_or_default().to_string();
        if contact_id.is_empty() {
            return Err(Error::schema(path, line, "field `contact_id` is empty"));
        }
        let mut numeric = Vec::with_capacity(n_num);
        for k in 0..n_num {
            let raw = row.get(1 + k).unwrap_or_default();
            let v: f64 = raw
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| {
                    Error::schema(
                        path,
                        line,
                        format!("field `n{k}`: not a finite number `{raw}`"),
                    )
                })?;
            numeric.push(v);
        }
        let categorical = (0..n_cat)
            .map(|k| row.get(1 + n_num + k).unwrap_or_default().to_string())
            .collect();
        out.push(PreContactRecord {
            contact_id,
            numeric,
            categorical,
        });
    }
    Ok(out)
}

pub fn save_latents(path: &Path, ids: &[String], latents: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["contact_id", "z"])
        .map_err(|e| csv_error(path, e))?;
    for (id, z) in ids.iter().zip(latents) {
        w.write_record([id.as_str(), &crate::format::float(*z)])
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_latents(path: &Path) -> Result<HashMap<String, f64>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut out = HashMap::new();
    for row in reader.records() {
        let row = row.map_err(|e| csv_error(path, e))?;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
        let z: f64 = row
            .get(1)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::schema(path, line, "field `z` is not a number"))?;
        out.insert(row.get(0).unwrap_or_default().to_string(), z);
    }
    Ok(out)
}

/// Writes `transcripts.jsonl` and `precontact.csv` into `dir`.
pub fn save_corpus(
    dir: &Path,
    transcripts: &[Transcript],
    records: &[PreContactRecord],
) -> Result<()> {
    save_transcripts(&dir.join(TRANSCRIPTS_FILE), transcripts)?;
    save_records(&dir.join(RECORDS_FILE), records)
}

/// Loads both corpus files from `dir` and checks that every record joins
/// to exactly one transcript.
pub fn load_corpus(dir: &Path) -> Result<(Vec<Transcript>, Vec<PreContactRecord>)> {
    let transcripts = load_transcripts(&dir.join(TRANSCRIPTS_FILE))?;
    let records = load_records(&dir.join(RECORDS_FILE))?;
    check_join(&transcripts, &records)?;
    Ok((transcripts, records))
}

pub fn check_join(transcripts: &[Transcript], records: &[PreContactRecord]) -> Result<()> {
    if records.is_empty() {
        return Ok(());
    }
    let ids: std::collections::HashSet<&str> = transcripts.iter().map(|t| t.id.as_str()).collect();
    let mut joined = std::collections::HashSet::new();
    for r in records {
        if !ids.contains(r.contact_id.as_str()) {
            return Err(Error::invalid(format!(
                "pre-contact record `{}` has no transcript",
                r.contact_id
            )));
        }
        if !joined.insert(r.contact_id.as_str()) {
            return Err(Error::invalid(format!(
                "duplicate pre-contact record `{}`",
                r.contact_id
            )));
        }
    }
    if joined.len() != ids.len() {
        return Err(Error::invalid(
            "some transcripts have no pre-contact record",
        ));
    }
    Ok(())
}
