//! Document embeddings behind a pluggable provider.
//!
//! The local provider is a seeded Gaussian random projection of tf-idf
//! weighted counts. The projection matrix `P` (d x V) is filled in row-major
//! order from a `ChaCha8Rng` seeded with `seed`, one `StandardNormal` draw per
//! entry. The remote provider speaks a small JSON protocol:
//! `POST {endpoint}/embed` with `{"texts": [...]}`, answered by
//! `{"embeddings": [[...], ...]}`.

use std::time::Duration;

use ndarray::{Array2, ArrayView1};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document, Vocabulary};
use crate::error::{Error, Result};

/// N x d matrix of unit-norm document embeddings, rows in corpus order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    rows: Array2<f64>,
    provider_tag: String,
}

impl EmbeddingMatrix {
    /// Wraps rows after normalizing each to unit L2 norm.
    pub fn from_rows(rows: Vec<Vec<f64>>, provider_tag: impl Into<String>) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if n == 0 || d == 0 {
            return Err(Error::ShapeMismatch("embedding matrix must be non-empty".into()));
        }
        let mut flat = Vec::with_capacity(n * d);
        for (i, mut row) in rows.into_iter().enumerate() {
            if row.len() != d {
                return Err(Error::ShapeMismatch(format!(
                    "row {i} has dimension {}, expected {d}",
                    row.len()
                )));
            }
            normalize(&mut row).ok_or(Error::NonFinite("embedding row norm"))?;
            flat.extend(row);
        }
        Ok(Self {
            rows: Array2::from_shape_vec((n, d), flat).expect("shape checked"),
            provider_tag: provider_tag.into(),
        })
    }

    pub fn rows(&self) -> &Array2<f64> {
        &self.rows
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.rows.row(i)
    }

    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }

    pub fn provider_tag(&self) -> &str {
        &self.provider_tag
    }
}

/// Scales `v` to unit L2 norm. Returns `None` for zero or non-finite norms.
fn normalize(v: &mut [f64]) -> Option<()> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Some(())
}

/// Anything that maps documents to d-dimensional vectors.
pub trait EmbeddingProvider {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    /// One vector per document, same order. Need not be normalized.
    fn embed_documents(&self, docs: &[Document]) -> Result<Vec<Vec<f64>>>;
}

/// Seeded random projection of tf-idf weights.
#[derive(Debug, Clone)]
pub struct LocalEmbedder {
    projection: Array2<f64>,
    idf: Vec<f64>,
    seed: u64,
    tag: String,
}

impl LocalEmbedder {
    pub fn new(vocabulary: &Vocabulary, dim: usize, seed: u64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidArgument(format!(
                "embedding dimension must be at least 2, got {dim}"
            )));
        }
        let v = vocabulary.len();
        let n = vocabulary.num_docs() as f64;
        let idf = vocabulary
            .df()
            .iter()
            .map(|&df| (1.0 + n / df.max(1) as f64).ln())
            .collect();
        Ok(Self {
            projection: gaussian_projection(dim, v, seed),
            idf,
            seed,
            tag: format!("local(d={dim},seed={seed})"),
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn projection(&self) -> &Array2<f64> {
        &self.projection
    }

    /// Embeds sparse `(term id, count)` pairs; the result has unit norm.
    pub fn embed_counts(&self, counts: &[(usize, u32)]) -> Result<Vec<f64>> {
        let v = self.projection.ncols();
        let mut out = vec![0.0; self.projection.nrows()];
        let mut any = false;
        for &(term, c) in counts {
            if term >= v {
                return Err(Error::ShapeMismatch(format!(
                    "term id {term} outside vocabulary of size {v}"
                )));
            }
            if c == 0 {
                continue;
            }
            any = true;
            let weight = (1.0 + c as f64).ln() * self.idf[term];
            for (o, p) in out.iter_mut().zip(self.projection.column(term)) {
                *o += p * weight;
            }
        }
        if !any {
            return Err(Error::InvalidArgument("cannot embed an all-zero count vector".into()));
        }
        normalize(&mut out).ok_or(Error::NonFinite("projected tf-idf vector"))?;
        Ok(out)
    }
}

/// d x V standard-normal matrix, filled row-major from `ChaCha8Rng(seed)`.
pub fn gaussian_projection(dim: usize, vocab_size: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_simple_fn((dim, vocab_size), || StandardNormal.sample(&mut rng))
}

impl EmbeddingProvider for LocalEmbedder {
    fn name(&self) -> &str {
        &self.tag
    }

    fn dim(&self) -> usize {
        self.projection.nrows()
    }

    fn embed_documents(&self, docs: &[Document]) -> Result<Vec<Vec<f64>>> {
        docs.iter()
            .map(|d| self.embed_counts(&d.term_counts()))
            .collect()
    }
}

/// Dense-count convenience wrapper around [`LocalEmbedder`].
pub fn local_embed(counts: &[u32], vocabulary: &Vocabulary, seed: u64, dim: usize) -> Result<Vec<f64>> {
    if counts.len() != vocabulary.len() {
        return Err(Error::ShapeMismatch(format!(
            "count vector has length {}, vocabulary has {}",
            counts.len(),
            vocabulary.len()
        )));
    }
    let sparse: Vec<(usize, u32)> = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, &c)| (i, c))
        .collect();
    LocalEmbedder::new(vocabulary, dim, seed)?.embed_counts(&sparse)
}

/// Embeds every document in corpus order, `batch_size` documents per provider
/// call. Rows are renormalized on receipt.
pub fn embed_corpus(
    corpus: &Corpus,
    provider: &dyn EmbeddingProvider,
    batch_size: usize,
) -> Result<EmbeddingMatrix> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus { dropped: 0 });
    }
    let batch_size = batch_size.max(1);
    let mut rows = Vec::with_capacity(corpus.len());
    for (b, chunk) in corpus.documents().chunks(batch_size).enumerate() {
        let first = b * batch_size;
        let last = first + chunk.len() - 1;
        let wrap = |message: String| Error::Provider {
            provider: provider.name().to_owned(),
            first,
            last,
            message,
        };
        let vectors = provider.embed_documents(chunk).map_err(|e| wrap(e.to_string()))?;
        if vectors.len() != chunk.len() {
            return Err(wrap(format!(
                "returned {} vectors for {} documents",
                vectors.len(),
                chunk.len()
            )));
        }
        for v in vectors {
            if v.len() != provider.dim() {
                return Err(wrap(format!(
                    "vector dimension {} differs from configured {}",
                    v.len(),
                    provider.dim()
                )));
            }
            rows.push(v);
        }
    }
    EmbeddingMatrix::from_rows(rows, provider.name())
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbedResponse {
    embeddings: Vec<Vec<f64>>,
}

/// Sends one batch to `{endpoint}/embed` and returns unit-norm vectors in
/// input order.
pub fn remote_embed_batch(
    texts: &[&str],
    endpoint: &str,
    timeout: Duration,
    dim: usize,
) -> Result<Vec<Vec<f64>>> {
    let url = format!("{}/embed", endpoint.trim_end_matches('/'));
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(timeout))
        .http_status_as_error(false)
        .build()
        .into();
    let mut response = agent
        .post(&url)
        .send_json(EmbedRequest { texts })
        .map_err(|e| Error::Remote(format!("{url}: {e}")))?;
    let status = response.status();
    if !status.is_success() {
        return Err(Error::Remote(format!("{url}: HTTP status {status}")));
    }
    let body: EmbedResponse = response
        .body_mut()
        .read_json()
        .map_err(|e| Error::Remote(format!("{url}: bad response body: {e}")))?;
    if body.embeddings.len() != texts.len() {
        return Err(Error::Remote(format!(
            "count mismatch: {} vectors for {} texts",
            body.embeddings.len(),
            texts.len()
        )));
    }
    body.embeddings
        .into_iter()
        .enumerate()
        .map(|(i, mut v)| {
            if v.len() != dim {
                return Err(Error::Remote(format!(
                    "dimension mismatch: vector {i} has {} entries, expected {dim}",
                    v.len()
                )));
            }
            normalize(&mut v)
                .ok_or_else(|| Error::Remote(format!("vector {i} has zero or non-finite norm")))?;
            Ok(v)
        })
        .collect()
}

/// Client for an external embedding service.
#[derive(Debug, Clone)]
pub struct RemoteEmbedder {
    pub endpoint: String,
    pub dim: usize,
    pub batch_size: usize,
    pub timeout: Duration,
}

impl EmbeddingProvider for RemoteEmbedder {
    fn name(&self) -> &str {
        "remote"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_documents(&self, docs: &[Document]) -> Result<Vec<Vec<f64>>> {
        let mut out = Vec::with_capacity(docs.len());
        for chunk in docs.chunks(self.batch_size.max(1)) {
            let texts: Vec<&str> = chunk.iter().map(|d| d.raw_text.as_str()).collect();
            out.extend(remote_embed_batch(&texts, &self.endpoint, self.timeout, self.dim)?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{bow_counts, RawRecord, TokenizerConfig};

    fn corpus(texts: &[&str]) -> Corpus {
        let recs = texts
            .iter()
            .enumerate()
            .map(|(i, t)| RawRecord {
                id: format!("d{i:02}"),
                timestamp: i as i64,
                label: None,
                text: t.to_string(),
            })
            .collect();
        Corpus::from_records(recs, &TokenizerConfig::default()).unwrap().0
    }

    #[test]
    fn fixed_counts_match_hand_projection() {
        // Vocabulary ["aa", "bb", "cc"] with df [2, 1, 1] over N = 2 documents.
        let c = corpus(&["aa bb", "aa cc"]);
        let vocab = c.vocabulary();
        assert_eq!(vocab.terms(), ["aa", "bb", "cc"]);

        // Independent oracle: draw the 12 entries in row-major order and multiply.
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let p: Vec<f64> = (0..12).map(|_| StandardNormal.sample(&mut rng)).collect();
        let x = [
            3f64.ln() * (1.0 + 2.0 / 2.0f64).ln(),
            2f64.ln() * (1.0 + 2.0 / 1.0f64).ln(),
            0.0,
        ];
        let mut y: Vec<f64> = (0..4)
            .map(|r| p[r * 3] * x[0] + p[r * 3 + 1] * x[1] + p[r * 3 + 2] * x[2])
            .collect();
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        y.iter_mut().for_each(|v| *v /= norm);

        let got = local_embed(&[2, 1, 0], vocab, 42, 4).unwrap();
        for (g, e) in got.iter().zip(&y) {
            assert!((g - e).abs() < 1e-12, "{got:?} vs {y:?}");
        }
    }

    #[test]
    fn local_embedding_is_deterministic_and_unit_norm() {
        let c = corpus(&["orbit moon rocket", "orbit moon rocket", "stock price"]);
        let e = LocalEmbedder::new(c.vocabulary(), 16, 3).unwrap();
        let a = e.embed_counts(&c.documents()[0].term_counts()).unwrap();
        let b = e.embed_counts(&c.documents()[1].term_counts()).unwrap();
        assert_eq!(a, b);
        let norm: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_counts_and_tiny_dim_rejected() {
        let c = corpus(&["aa bb"]);
        assert!(local_embed(&[0, 0], c.vocabulary(), 1, 4).is_err());
        assert!(local_embed(&[1, 0], c.vocabulary(), 1, 1).is_err());
    }

    #[test]
    fn embed_corpus_composes_local_embed() {
        let texts: Vec<String> = (0..10)
            .map(|i| format!("alpha{} beta{} shared gamma{}", i % 3, i % 4, i % 2))
            .collect();
        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        let c = corpus(&refs);
        let provider = LocalEmbedder::new(c.vocabulary(), 8, 7).unwrap();
        let m = embed_corpus(&c, &provider, 3).unwrap();
        assert_eq!(m.len(), 10);
        for (i, doc) in c.documents().iter().enumerate() {
            let expected = local_embed(&bow_counts(doc, c.vocabulary()), c.vocabulary(), 7, 8).unwrap();
            // Rows are renormalized on receipt, which may move the last bit.
            for (a, b) in m.row(i).iter().zip(&expected) {
                assert!((a - b).abs() < 1e-14);
            }
        }
        // Batch partitioning does not matter.
        assert_eq!(embed_corpus(&c, &provider, 1).unwrap(), m);
        assert_eq!(embed_corpus(&c, &provider, 100).unwrap(), m);
    }

    #[test]
    fn single_document_and_duplicates() {
        let c = corpus(&["solo words"]);
        let p = LocalEmbedder::new(c.vocabulary(), 5, 1).unwrap();
        assert_eq!(embed_corpus(&c, &p, 32).unwrap().rows().dim(), (1, 5));

        let c = corpus(&["same text here", "same text here"]);
        let p = LocalEmbedder::new(c.vocabulary(), 5, 1).unwrap();
        let m = embed_corpus(&c, &p, 32).unwrap();
        assert_eq!(m.row(0), m.row(1));
    }

    struct Broken;

    impl EmbeddingProvider for Broken {
        fn name(&self) -> &str {
            "broken"
        }
        fn dim(&self) -> usize {
            3
        }
        fn embed_documents(&self, docs: &[Document]) -> Result<Vec<Vec<f64>>> {
            if docs.iter().any(|d| d.id == "d03") {
                Err(Error::Remote("boom".into()))
            } else {
                Ok(vec![vec![1.0, 0.0, 0.0]; docs.len()])
            }
        }
    }

    #[test]
    fn provider_failure_names_document_range() {
        let c = corpus(&["aa", "bb", "cc", "dd", "ee"]);
        let err = embed_corpus(&c, &Broken, 2).unwrap_err();
        match err {
            Error::Provider { first, last, .. } => assert_eq!((first, last), (2, 3)),
            other => panic!("unexpected {other}"),
        }
    }
}
