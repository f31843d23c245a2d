//! Tokenization and TF-IDF vectors for transcripts.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};
use std::path::Path;

use crate::corpus::Transcript;
use crate::error::{Error, Result};

/// Lowercases and splits on any run of non-alphanumeric characters.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

/// All tokens of a transcript, both speakers, in utterance order.
pub fn transcript_tokens(transcript: &Transcript) -> impl Iterator<Item = String> + '_ {
    transcript.utterances.iter().flat_map(|u| tokenize(&u.text))
}

/// Sparse vector with strictly increasing indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    /// Builds a vector from `(index, weight)` pairs. Pairs are sorted, and
    /// duplicate indices are rejected.
    pub fn new(mut entries: Vec<(u32, f64)>) -> Result<Self> {
        entries.sort_by_key(|e| e.0);
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::invalid("duplicate index in sparse vector"));
        }
        if entries.iter().any(|e| !e.1.is_finite()) {
            return Err(Error::invalid("non-finite weight in sparse vector"));
        }
        Ok(SparseVector { entries })
    }

    /// Keeps every non-zero entry of a dense row.
    pub fn from_dense(row: &[f64]) -> Self {
        SparseVector {
            entries: row
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (i as u32, *v))
                .collect(),
        }
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: u32) -> f64 {
        match self.entries.binary_search_by_key(&index, |e| e.0) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => 0.0,
        }
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    index: HashMap<String, u32>,
    tokens: Vec<String>,
    doc_freq: Vec<u32>,
    n_docs: usize,
}

impl Vocabulary {
    /// Fits on per-document token lists. Columns follow lexicographic token
    /// order; tokens seen in fewer than `min_doc_freq` documents are dropped.
    pub fn fit_documents<D, T>(documents: D, min_doc_freq: usize) -> Result<Self>
    where
        D: IntoIterator<Item = T>,
        T: IntoIterator<Item = String>,
    {
        let mut df: BTreeMap<String, u32> = BTreeMap::new();
        let mut n_docs = 0usize;
        for doc in documents {
            n_docs += 1;
            let mut seen: Vec<String> = doc.into_iter().collect();
            seen.sort_unstable();
            seen.dedup();
            for tok in seen {
                *df.entry(tok).or_insert(0) += 1;
            }
        }
        if n_docs == 0 {
            return Err(Error::invalid("cannot fit a vocabulary on an empty corpus"));
        }
        let mut tokens = Vec::new();
        let mut doc_freq = Vec::new();
        for (tok, count) in df {
            if count as usize >= min_doc_freq {
                tokens.push(tok);
                doc_freq.push(count);
            }
        }
        Ok(Self::from_parts(tokens, doc_freq, n_docs))
    }

    pub fn fit(transcripts: &[Transcript], min_doc_freq: usize) -> Result<Self> {
        Self::fit_documents(transcripts.iter().map(transcript_tokens), min_doc_freq)
    }

    fn from_parts(tokens: Vec<String>, doc_freq: Vec<u32>, n_docs: usize) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary {
            index,
            tokens,
            doc_freq,
            n_docs,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn index_of(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, index: u32) -> &str {
        &self.tokens[index as usize]
    }

    pub fn doc_freq(&self, token: &str) -> Option<u32> {
        self.index_of(token).map(|i| self.doc_freq[i as usize])
    }

    /// Smoothed inverse document frequency `ln((1 + D) / (1 + df)) + 1`.
    pub fn idf(&self, index: u32) -> f64 {
        let d = self.n_docs as f64;
        let df = self.doc_freq[index as usize] as f64;
        ((1.0 + d) / (1.0 + df)).ln() + 1.0
    }

    /// L2-normalized tf·idf weights; out-of-vocabulary tokens are dropped.
    pub fn vectorize_tokens<I: IntoIterator<Item = String>>(&self, tokens: I) -> SparseVector {
        let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
        for tok in tokens {
            if let Some(i) = self.index_of(&tok) {
                *counts.entry(i).or_insert(0) += 1;
            }
        }
        let mut entries: Vec<(u32, f64)> = counts
            .into_iter()
            .map(|(i, tf)| (i, tf as f64 * self.idf(i)))
            .collect();
        let norm = entries.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
        if norm > 0.0 {
            for e in &mut entries {
                e.1 /= norm;
            }
        }
        SparseVector { entries }
    }

    pub fn vectorize(&self, transcript: &Transcript) -> SparseVector {
        self.vectorize_tokens(transcript_tokens(transcript))
    }

    /// Writes `docs,<D>` followed by a `token,index,df` table.
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "docs,{}", self.n_docs)?;
        writeln!(w, "token,index,df")?;
        for (i, (tok, df)) in self.tokens.iter().zip(&self.doc_freq).enumerate() {
            writeln!(w, "{tok},{i},{df}")?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = std::io::BufReader::new(file).lines();
        let mut line_no = 0;
        let mut next = |line_no: &mut usize| -> Result<Option<String>> {
            *line_no += 1;
            lines.next().transpose().map_err(|e| Error::io(path, e))
        };
        let header = next(&mut line_no)?.unwrap_or_default();
        let n_docs = header
            .strip_prefix("docs,")
            .and_then(|d| d.trim().parse::<usize>().ok())
            .ok_or_else(|| Error::schema(path, line_no, "expected `docs,<count>` header"))?;
        if next(&mut line_no)?.as_deref().map(str::trim) != Some("token,index,df") {
            return Err(Error::schema(
                path,
                line_no,
                "expected `token,index,df` header",
            ));
        }
        let mut tokens = Vec::new();
        let mut doc_freq = Vec::new();
        while let Some(line) = next(&mut line_no)? {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::schema(
                    path,
                    line_no,
                    "expected 3 fields `token,index,df`",
                ));
            }
            let index: usize = fields[1]
                .parse()
                .map_err(|_| Error::schema(path, line_no, "field `index` is not an integer"))?;
            if index != tokens.len() {
                return Err(Error::schema(path, line_no, "field `index` is not dense"));
            }
            let df: u32 = fields[2].parse().ok().filter(|&d| d >= 1).ok_or_else(|| {
                Error::schema(path, line_no, "field `df` must be a positive integer")
            })?;
            tokens.push(fields[0].to_string());
            doc_freq.push(df);
        }
        Ok(Self::from_parts(tokens, doc_freq, n_docs))
    }
}
