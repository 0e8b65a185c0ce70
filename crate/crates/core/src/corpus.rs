//! Corpus ingestion: line-delimited JSON records, tokenization, vocabulary
//! construction and equal-width time slicing.
//!
//! Documents are kept sorted by `(timestamp, id)` from load onwards, so every
//! downstream matrix (embeddings, topic distributions) is indexed in that order.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::binfmt::{ByteReader, ByteWriter};
use crate::error::{Error, Result};

/// Tokenizer settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenizerConfig {
    pub min_token_len: usize,
    pub stopwords: HashSet<String>,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self {
            min_token_len: 2,
            stopwords: HashSet::new(),
        }
    }
}

impl TokenizerConfig {
    /// Loads a stopword list, one word per line. Words are lowercased.
    pub fn with_stopword_file(mut self, path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.stopwords = text
            .lines()
            .map(|l| l.trim().to_lowercase())
            .filter(|l| !l.is_empty())
            .collect();
        Ok(self)
    }
}

/// Lowercases, splits on runs of non-alphanumeric characters, then drops
/// short tokens and stopwords.
pub fn tokenize(raw_text: &str, cfg: &TokenizerConfig) -> Vec<String> {
    raw_text
        .to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .filter(|t| t.chars().count() >= cfg.min_token_len)
        .filter(|t| !cfg.stopwords.contains(*t))
        .map(str::to_owned)
        .collect()
}

/// One record of the input file before tokenization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub id: String,
    pub timestamp: i64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub label: Option<String>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub timestamp: i64,
    pub label: Option<String>,
    /// Vocabulary ids, in text order.
    pub tokens: Vec<usize>,
    pub raw_text: String,
}

impl Document {
    /// Sparse bag of words: `(term id, count)` sorted by term id.
    pub fn term_counts(&self) -> Vec<(usize, u32)> {
        let mut ids = self.tokens.clone();
        ids.sort_unstable();
        let mut out: Vec<(usize, u32)> = Vec::new();
        for id in ids {
            match out.last_mut() {
                Some((last, c)) if *last == id => *c += 1,
                _ => out.push((id, 1)),
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    df: Vec<usize>,
    num_docs: usize,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    fn from_ranked(terms: Vec<String>, df: Vec<usize>, num_docs: usize) -> Self {
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self {
            terms,
            df,
            num_docs,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn df(&self) -> &[usize] {
        &self.df
    }

    /// Number of documents the document frequencies were counted over.
    pub fn num_docs(&self) -> usize {
        self.num_docs
    }

    pub fn id(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, id: usize) -> &str {
        &self.terms[id]
    }
}

/// Counts kept by [`load_corpus`] for the caller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LoadReport {
    pub records: usize,
    pub dropped_empty: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    documents: Vec<Document>,
    vocabulary: Vocabulary,
}

impl Corpus {
    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn timestamps(&self) -> Vec<i64> {
        self.documents.iter().map(|d| d.timestamp).collect()
    }

    /// Sparse bag-of-words rows for every document, in corpus order.
    pub fn term_counts(&self) -> Vec<Vec<(usize, u32)>> {
        self.documents.iter().map(Document::term_counts).collect()
    }

    /// Tokenizes raw records and assembles a sorted corpus with a vocabulary of
    /// every surviving token.
    pub fn from_records(
        records: Vec<RawRecord>,
        cfg: &TokenizerConfig,
    ) -> Result<(Corpus, LoadReport)> {
        let mut report = LoadReport {
            records: records.len(),
            dropped_empty: 0,
        };
        let mut tokenized = Vec::with_capacity(records.len());
        for rec in records {
            let toks = tokenize(&rec.text, cfg);
            if toks.is_empty() {
                report.dropped_empty += 1;
                continue;
            }
            tokenized.push((rec, toks));
        }
        if tokenized.is_empty() {
            return Err(Error::EmptyCorpus {
                dropped: report.dropped_empty,
            });
        }
        tokenized.sort_by(|(a, _), (b, _)| (a.timestamp, &a.id).cmp(&(b.timestamp, &b.id)));

        let token_sets: Vec<Vec<&str>> = tokenized
            .iter()
            .map(|(_, toks)| toks.iter().map(String::as_str).collect())
            .collect();
        let vocabulary = rank_terms(&token_sets, |_| true, None);

        let documents = tokenized
            .iter()
            .map(|(rec, toks)| Document {
                id: rec.id.clone(),
                timestamp: rec.timestamp,
                label: rec.label.clone(),
                tokens: toks
                    .iter()
                    .map(|t| vocabulary.id(t).expect("token was counted"))
                    .collect(),
                raw_text: rec.text.clone(),
            })
            .collect();
        Ok((
            Corpus {
                documents,
                vocabulary,
            },
            report,
        ))
    }
}

/// Counts document frequencies and ranks the kept terms by `(df desc, term asc)`.
fn rank_terms(
    docs: &[Vec<&str>],
    keep: impl Fn(usize) -> bool,
    max_size: Option<usize>,
) -> Vocabulary {
    let mut df: HashMap<&str, usize> = HashMap::new();
    for doc in docs {
        let unique: HashSet<&str> = doc.iter().copied().collect();
        for t in unique {
            *df.entry(t).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = df.into_iter().filter(|&(_, n)| keep(n)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    if let Some(max) = max_size {
        ranked.truncate(max);
    }
    let (terms, dfs) = ranked.into_iter().map(|(t, n)| (t.to_owned(), n)).unzip();
    Vocabulary::from_ranked(terms, dfs, docs.len())
}

/// Parses one JSON-lines timestamp: an integer, or an ISO-8601 string
/// converted to epoch seconds.
fn parse_timestamp(v: &Value) -> Option<i64> {
    match v {
        Value::Number(n) => n.as_i64(),
        Value::String(s) => {
            let s = s.trim();
            if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
                return Some(dt.timestamp());
            }
            if let Ok(dt) = NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S") {
                return Some(dt.and_utc().timestamp());
            }
            if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
                return Some(d.and_hms_opt(0, 0, 0)?.and_utc().timestamp());
            }
            None
        }
        _ => None,
    }
}

fn parse_record(line_no: usize, line: &str) -> Result<RawRecord> {
    let malformed = |message: String| Error::MalformedRecord {
        line: line_no,
        message,
    };
    let value: Value = serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| malformed("expected a JSON object".into()))?;

    let string_field = |name: &'static str| -> Result<String> {
        match obj.get(name) {
            None | Some(Value::Null) => Err(Error::MissingField {
                line: line_no,
                field: name,
            }),
            Some(Value::String(s)) => Ok(s.clone()),
            Some(_) => Err(malformed(format!("field `{name}` must be a string"))),
        }
    };

    let id = string_field("id")?;
    let text = string_field("text")?;
    let timestamp = match obj.get("timestamp") {
        None | Some(Value::Null) => {
            return Err(Error::MissingField {
                line: line_no,
                field: "timestamp",
            })
        }
        Some(v) => parse_timestamp(v).ok_or_else(|| {
            malformed(format!(
                "`timestamp` must be an integer or ISO-8601 string, got {v}"
            ))
        })?,
    };
    let label = match obj.get("label") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => return Err(malformed("field `label` must be a string".into())),
    };
    Ok(RawRecord {
        id,
        timestamp,
        label,
        text,
    })
}

/// Reads line-delimited records. Blank lines are skipped; line numbers in
/// errors are 1-based.
pub fn read_records(reader: impl Read) -> Result<Vec<RawRecord>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|e| Error::MalformedRecord {
            line: i + 1,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_record(i + 1, &line)?);
    }
    Ok(out)
}

pub fn load_corpus(path: &Path, cfg: &TokenizerConfig) -> Result<(Corpus, LoadReport)> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Corpus::from_records(read_records(file)?, cfg)
}

/// Vocabulary filter settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VocabConfig {
    pub min_df: usize,
    pub max_df_frac: f64,
    /// `None` keeps every term that passes the df filters.
    pub max_size: Option<usize>,
}

impl Default for VocabConfig {
    fn default() -> Self {
        Self {
            min_df: 1,
            max_df_frac: 1.0,
            max_size: None,
        }
    }
}

/// Filters the vocabulary by document frequency, ranks by `(df desc, term asc)`,
/// truncates, and remaps every document. Tokens outside the new vocabulary are
/// removed; documents left with no tokens are dropped and counted.
pub fn build_vocabulary(corpus: &Corpus, cfg: &VocabConfig) -> Result<(Corpus, usize)> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus { dropped: 0 });
    }
    if !(0.0..=1.0).contains(&cfg.max_df_frac) {
        return Err(Error::InvalidArgument(format!(
            "max_df_frac must lie in [0, 1], got {}",
            cfg.max_df_frac
        )));
    }
    let old = &corpus.vocabulary;
    let docs: Vec<Vec<&str>> = corpus
        .documents
        .iter()
        .map(|d| d.tokens.iter().map(|&t| old.term(t)).collect())
        .collect();
    let n = corpus.len() as f64;
    let vocabulary = rank_terms(
        &docs,
        |df| df >= cfg.min_df && df as f64 <= cfg.max_df_frac * n,
        cfg.max_size,
    );
    if vocabulary.is_empty() {
        return Err(Error::EmptyVocabulary);
    }

    let mut documents = Vec::with_capacity(corpus.len());
    let mut dropped = 0;
    for doc in &corpus.documents {
        let tokens: Vec<usize> = doc
            .tokens
            .iter()
            .filter_map(|&t| vocabulary.id(old.term(t)))
            .collect();
        if tokens.is_empty() {
            dropped += 1;
            continue;
        }
        documents.push(Document {
            tokens,
            ..doc.clone()
        });
    }
    let num_docs = documents.len();
    let vocabulary = Vocabulary {
        num_docs,
        ..vocabulary
    };
    Ok((
        Corpus {
            documents,
            vocabulary,
        },
        dropped,
    ))
}

/// Dense count vector over the vocabulary.
pub fn bow_counts(document: &Document, vocabulary: &Vocabulary) -> Vec<u32> {
    let mut counts = vec![0u32; vocabulary.len()];
    for &t in &document.tokens {
        if let Some(c) = counts.get_mut(t) {
            *c += 1;
        }
    }
    counts
}

/// Assignment of documents to equal-width time slices.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSliceIndex {
    num_slices: usize,
    slice_of: Vec<usize>,
    boundaries: Vec<f64>,
}

impl TimeSliceIndex {
    /// Equal-width slicing of `[min, max]` into `num_slices` intervals; the last
    /// interval includes `max`.
    pub fn from_timestamps(timestamps: &[i64], num_slices: usize) -> Result<Self> {
        if num_slices < 2 {
            return Err(Error::InvalidArgument(format!(
                "num_slices must be at least 2, got {num_slices}"
            )));
        }
        let (min, max) = match (timestamps.iter().min(), timestamps.iter().max()) {
            (Some(&lo), Some(&hi)) => (lo, hi),
            _ => return Err(Error::EmptyCorpus { dropped: 0 }),
        };
        if min == max {
            return Err(Error::SingleTimestamp { timestamp: min });
        }
        let span = (max as i128) - (min as i128);
        // Integer arithmetic keeps the assignment exact: slice = floor((t - min) * T / span).
        let slice_of: Vec<usize> = timestamps
            .iter()
            .map(|&t| {
                let s = ((t as i128 - min as i128) * num_slices as i128 / span) as usize;
                s.min(num_slices - 1)
            })
            .collect();
        let width = span as f64 / num_slices as f64;
        let boundaries = (0..=num_slices)
            .map(|s| {
                if s == num_slices {
                    max as f64
                } else {
                    min as f64 + s as f64 * width
                }
            })
            .collect();
        let index = Self {
            num_slices,
            slice_of,
            boundaries,
        };
        if let Some(slice) = index.populations().iter().position(|&p| p == 0) {
            return Err(Error::EmptySlice { slice, num_slices });
        }
        Ok(index)
    }

    /// Builds an index from explicit slice assignments (boundaries become the
    /// slice indices themselves). Every slice must be populated.
    pub fn from_assignments(slice_of: Vec<usize>, num_slices: usize) -> Result<Self> {
        if let Some(&bad) = slice_of.iter().find(|&&s| s >= num_slices) {
            return Err(Error::InvalidArgument(format!(
                "slice {bad} out of range for {num_slices} slices"
            )));
        }
        let index = Self {
            num_slices,
            slice_of,
            boundaries: (0..=num_slices).map(|s| s as f64).collect(),
        };
        if let Some(slice) = index.populations().iter().position(|&p| p == 0) {
            return Err(Error::EmptySlice { slice, num_slices });
        }
        Ok(index)
    }

    pub fn num_slices(&self) -> usize {
        self.num_slices
    }

    pub fn num_docs(&self) -> usize {
        self.slice_of.len()
    }

    pub fn slice_of(&self, doc: usize) -> usize {
        self.slice_of[doc]
    }

    pub fn assignments(&self) -> &[usize] {
        &self.slice_of
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn populations(&self) -> Vec<usize> {
        let mut pops = vec![0; self.num_slices];
        for &s in &self.slice_of {
            pops[s] += 1;
        }
        pops
    }

    /// Document indices per slice, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_slices];
        for (doc, &s) in self.slice_of.iter().enumerate() {
            out[s].push(doc);
        }
        out
    }
}

pub fn slice_by_time(corpus: &Corpus, num_slices: usize) -> Result<TimeSliceIndex> {
    TimeSliceIndex::from_timestamps(&corpus.timestamps(), num_slices)
}

const CORPUS_MAGIC: &[u8; 16] = b"TEMPORA-CORPUS\0\0";
const CORPUS_VERSION: u32 = 1;

impl Corpus {
    /// Serializes the tokenized corpus (little-endian, length-prefixed strings).
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.bytes(CORPUS_MAGIC);
        w.u32(CORPUS_VERSION);
        w.u64(self.vocabulary.num_docs as u64);
        w.u64(self.vocabulary.len() as u64);
        for (term, &df) in self.vocabulary.terms.iter().zip(&self.vocabulary.df) {
            w.str(term);
            w.u64(df as u64);
        }
        w.u64(self.documents.len() as u64);
        for d in &self.documents {
            w.str(&d.id);
            w.i64(d.timestamp);
            match &d.label {
                Some(l) => {
                    w.u8(1);
                    w.str(l);
                }
                None => w.u8(0),
            }
            w.str(&d.raw_text);
            w.u64(d.tokens.len() as u64);
            for &t in &d.tokens {
                w.u32(t as u32);
            }
        }
        w.into_inner()
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Corpus> {
        let bad = |message: String| Error::CorpusFile {
            path: path.to_path_buf(),
            message,
        };
        let mut r = ByteReader::new(bytes);
        let parse = |r: &mut ByteReader| -> std::result::Result<Corpus, String> {
            if r.take(16)? != CORPUS_MAGIC {
                return Err("bad magic header".into());
            }
            let version = r.u32()?;
            if version != CORPUS_VERSION {
                return Err(format!("unsupported version {version}"));
            }
            let num_docs = r.u64()? as usize;
            let v = r.u64()? as usize;
            let mut terms = Vec::with_capacity(v.min(1 << 20));
            let mut df = Vec::with_capacity(v.min(1 << 20));
            for _ in 0..v {
                terms.push(r.str()?);
                df.push(r.u64()? as usize);
            }
            let vocabulary = Vocabulary::from_ranked(terms, df, num_docs);
            let n = r.u64()? as usize;
            let mut documents = Vec::with_capacity(n.min(1 << 20));
            for _ in 0..n {
                let id = r.str()?;
                let timestamp = r.i64()?;
                let label = match r.u8()? {
                    0 => None,
                    1 => Some(r.str()?),
                    other => return Err(format!("bad label flag {other}")),
                };
                let raw_text = r.str()?;
                let len = r.u64()? as usize;
                let mut tokens = Vec::with_capacity(len.min(1 << 20));
                for _ in 0..len {
                    let t = r.u32()? as usize;
                    if t >= v {
                        return Err(format!("token id {t} out of range"));
                    }
                    tokens.push(t);
                }
                documents.push(Document {
                    id,
                    timestamp,
                    label,
                    tokens,
                    raw_text,
                });
            }
            r.finish()?;
            Ok(Corpus {
                documents,
                vocabulary,
            })
        };
        parse(&mut r).map_err(bad)
    }

    pub fn write_binary(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// Whether a corpus path holds the binary format written by `ingest`.
pub fn is_binary_corpus(path: &Path) -> Result<bool> {
    let mut head = [0u8; 16];
    let mut f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut read = 0;
    while read < head.len() {
        match f.read(&mut head[read..]).map_err(|e| Error::io(path, e))? {
            0 => break,
            n => read += n,
        }
    }
    Ok(read == head.len() && &head == CORPUS_MAGIC)
}

/// Loads either corpus format, detected by the magic header.
pub fn load_any(path: &Path, cfg: &TokenizerConfig) -> Result<(Corpus, LoadReport)> {
    if is_binary_corpus(path)? {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let corpus = Corpus::from_bytes(&bytes, path)?;
        let records = corpus.len();
        Ok((
            corpus,
            LoadReport {
                records,
                dropped_empty: 0,
            },
        ))
    } else {
        load_corpus(path, cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> TokenizerConfig {
        TokenizerConfig::default()
    }

    fn rec(id: &str, ts: i64, text: &str) -> RawRecord {
        RawRecord {
            id: id.into(),
            timestamp: ts,
            label: None,
            text: text.into(),
        }
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("The CAT sat.", &cfg()), ["the", "cat", "sat"]);
        assert!(tokenize("a b c", &cfg()).is_empty());
    }

    #[test]
    fn tokenize_paragraph() {
        let text = "In 1993, the Hubble telescope's mirror was FIXED; \
                    astronauts (seven of them) spent 5 days in orbit -- a record-setting job!";
        let mut stop = cfg();
        stop.stopwords = ["the", "of", "in"].iter().map(|s| s.to_string()).collect();
        assert_eq!(
            tokenize(text, &stop),
            [
                "1993",
                "hubble",
                "telescope",
                "mirror",
                "was",
                "fixed",
                "astronauts",
                "seven",
                "them",
                "spent",
                "days",
                "orbit",
                "record",
                "setting",
                "job"
            ]
        );
    }

    #[test]
    fn load_sorts_by_timestamp_then_id() {
        let input = "{\"id\":\"c\",\"timestamp\":5,\"text\":\"gamma ray\"}\n\
                     {\"id\":\"b\",\"timestamp\":1,\"text\":\"beta ray\"}\n\
                     {\"id\":\"a\",\"timestamp\":3,\"text\":\"alpha ray\"}\n";
        let (corpus, report) =
            Corpus::from_records(read_records(input.as_bytes()).unwrap(), &cfg()).unwrap();
        assert_eq!(corpus.timestamps(), vec![1, 3, 5]);
        assert_eq!(report.dropped_empty, 0);

        let (tied, _) = Corpus::from_records(
            vec![rec("z", 1, "xx yy"), rec("a", 1, "xx zz")],
            &cfg(),
        )
        .unwrap();
        let ids: Vec<_> = tied.documents().iter().map(|d| d.id.as_str()).collect();
        assert_eq!(ids, ["a", "z"]);
    }

    #[test]
    fn empty_text_is_dropped() {
        let (corpus, report) =
            Corpus::from_records(vec![rec("a", 0, "hello world"), rec("b", 1, "")], &cfg())
                .unwrap();
        assert_eq!(corpus.len(), 1);
        assert_eq!(report.dropped_empty, 1);
    }

    #[test]
    fn all_dropped_is_an_error() {
        let err = Corpus::from_records(vec![rec("a", 0, "a b c")], &cfg()).unwrap_err();
        assert!(matches!(err, Error::EmptyCorpus { dropped: 1 }));
    }

    #[test]
    fn first_malformed_line_is_reported() {
        let mut lines = Vec::new();
        for i in 0..100 {
            let line = match i {
                41 => "{\"id\": \"x\", \"timestamp\": 3, \"text\": ".to_string(),
                77 => "not json".to_string(),
                _ => format!("{{\"id\":\"d{i}\",\"timestamp\":{i},\"text\":\"word{i} shared\"}}"),
            };
            lines.push(line);
        }
        let err = read_records(lines.join("\n").as_bytes()).unwrap_err();
        assert!(matches!(err, Error::MalformedRecord { line: 42, .. }), "{err}");
    }

    #[test]
    fn missing_field_and_bad_types() {
        let err = read_records("{\"id\":\"a\",\"text\":\"hi there\"}".as_bytes()).unwrap_err();
        assert!(matches!(
            err,
            Error::MissingField {
                line: 1,
                field: "timestamp"
            }
        ));
        let err = read_records("{\"timestamp\":1,\"text\":\"hi\"}".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::MissingField { field: "id", .. }));
        let err =
            read_records("{\"id\":3,\"timestamp\":1,\"text\":\"hi\"}".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::MalformedRecord { line: 1, .. }));
    }

    #[test]
    fn iso_timestamps_become_epoch_seconds() {
        let input = "{\"id\":\"a\",\"timestamp\":\"1970-01-02T00:00:00Z\",\"text\":\"xx\"}\n\
                     {\"id\":\"b\",\"timestamp\":\"1970-01-03\",\"text\":\"xx\"}\n";
        let recs = read_records(input.as_bytes()).unwrap();
        assert_eq!(recs[0].timestamp, 86_400);
        assert_eq!(recs[1].timestamp, 172_800);
    }

    #[test]
    fn vocabulary_max_df_excludes_ubiquitous_term() {
        let recs = vec![
            rec("1", 0, "xx aa"),
            rec("2", 1, "xx bb"),
            rec("3", 2, "xx aa"),
            rec("4", 3, "xx cc"),
        ];
        let (corpus, _) = Corpus::from_records(recs, &cfg()).unwrap();
        let vc = VocabConfig {
            max_df_frac: 0.75,
            ..Default::default()
        };
        let (filtered, dropped) = build_vocabulary(&corpus, &vc).unwrap();
        assert_eq!(filtered.vocabulary().terms(), ["aa", "bb", "cc"]);
        assert_eq!(filtered.vocabulary().df(), [2, 1, 1]);
        assert_eq!(dropped, 0);
    }

    #[test]
    fn vocabulary_noop_filter_keeps_everything() {
        let (corpus, _) =
            Corpus::from_records(vec![rec("1", 0, "zz yy xx"), rec("2", 1, "yy ww")], &cfg())
                .unwrap();
        let (filtered, _) = build_vocabulary(&corpus, &VocabConfig::default()).unwrap();
        assert_eq!(filtered.vocabulary().terms(), ["yy", "ww", "xx", "zz"]);
        assert_eq!(filtered, corpus);
    }

    #[test]
    fn truncation_tie_keeps_smaller_term() {
        let (corpus, _) =
            Corpus::from_records(vec![rec("1", 0, "pear apple"), rec("2", 1, "kiwi")], &cfg())
                .unwrap();
        let vc = VocabConfig {
            max_size: Some(2),
            ..Default::default()
        };
        let (filtered, dropped) = build_vocabulary(&corpus, &vc).unwrap();
        assert_eq!(filtered.vocabulary().terms(), ["apple", "kiwi"]);
        assert_eq!(dropped, 0);

        let vc = VocabConfig {
            max_size: Some(1),
            ..Default::default()
        };
        let (filtered, dropped) = build_vocabulary(&corpus, &vc).unwrap();
        assert_eq!(filtered.vocabulary().terms(), ["apple"]);
        assert_eq!(dropped, 1);
        assert_eq!(filtered.vocabulary().num_docs(), 1);
    }

    #[test]
    fn empty_vocabulary_is_an_error() {
        let (corpus, _) = Corpus::from_records(vec![rec("1", 0, "solo")], &cfg()).unwrap();
        let vc = VocabConfig {
            min_df: 2,
            ..Default::default()
        };
        assert!(matches!(
            build_vocabulary(&corpus, &vc),
            Err(Error::EmptyVocabulary)
        ));
    }

    #[test]
    fn slicing_examples() {
        let ts: Vec<i64> = (0..100).collect();
        let idx = TimeSliceIndex::from_timestamps(&ts, 10).unwrap();
        assert_eq!(idx.populations(), vec![10; 10]);
        for (d, &t) in ts.iter().enumerate() {
            assert_eq!(idx.slice_of(d), (t / 10) as usize);
        }

        let idx = TimeSliceIndex::from_timestamps(&[0, 10], 2).unwrap();
        assert_eq!(idx.assignments(), [0, 1]);
        assert_eq!(idx.boundaries(), [0.0, 5.0, 10.0]);

        assert!(matches!(
            TimeSliceIndex::from_timestamps(&[7, 7, 7], 3),
            Err(Error::SingleTimestamp { timestamp: 7 })
        ));
    }

    #[test]
    fn one_slice_per_tick_when_counts_match() {
        let ts: Vec<i64> = (0..40).flat_map(|t| std::iter::repeat_n(t, 3)).collect();
        let idx = TimeSliceIndex::from_timestamps(&ts, 40).unwrap();
        for (d, &t) in ts.iter().enumerate() {
            assert_eq!(idx.slice_of(d), t as usize);
        }
    }

    #[test]
    fn empty_slice_error_names_slice() {
        let err = TimeSliceIndex::from_timestamps(&[0, 1, 100], 4).unwrap_err();
        assert!(matches!(err, Error::EmptySlice { slice: 1, num_slices: 4 }));
        assert!(err.to_string().contains("fewer slices"));
    }

    #[test]
    fn bow_examples() {
        let (corpus, _) =
            Corpus::from_records(vec![rec("1", 0, "aa bb aa cc"), rec("2", 1, "cc")], &cfg())
                .unwrap();
        let v = corpus.vocabulary();
        // Document frequency first, then alphabetical.
        assert_eq!(v.terms(), ["cc", "aa", "bb"]);
        assert_eq!(bow_counts(&corpus.documents()[0], v), vec![1, 2, 1]);
        assert_eq!(corpus.documents()[0].term_counts(), vec![(0, 1), (1, 2), (2, 1)]);
    }

    #[test]
    fn bow_of_fifty_token_document_sums_to_fifty() {
        let words = ["red", "green", "blue", "cyan", "magenta"];
        let text: Vec<&str> = (0..50).map(|i| words[(i * i + 3 * i) % 5]).collect();
        let (corpus, _) =
            Corpus::from_records(vec![rec("1", 0, &text.join(" "))], &cfg()).unwrap();
        let counts = bow_counts(&corpus.documents()[0], corpus.vocabulary());
        assert_eq!(counts.iter().sum::<u32>(), 50);
        // (i^2 + 3i) mod 5 cycles with period 5 over {0, 4, 0, 3, 3}.
        let id = |w: &str| corpus.vocabulary().id(w).unwrap();
        assert_eq!(counts[id("red")], 20);
        assert_eq!(counts[id("cyan")], 20);
        assert_eq!(counts[id("magenta")], 10);
    }

    #[test]
    fn binary_round_trip() {
        let recs = vec![
            RawRecord {
                label: Some("sci".into()),
                ..rec("1", 4, "orbit moon orbit")
            },
            rec("2", 9, "market price"),
        ];
        let (corpus, _) = Corpus::from_records(recs, &cfg()).unwrap();
        let bytes = corpus.to_bytes();
        let back = Corpus::from_bytes(&bytes, Path::new("mem")).unwrap();
        assert_eq!(back, corpus);
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(Corpus::from_bytes(&bad, Path::new("mem")).is_err());
        assert!(Corpus::from_bytes(&bytes[..bytes.len() - 1], Path::new("mem")).is_err());
    }
}
