//! Synthetic corpora with known topic dynamics.
//!
//! Slice states follow `theta_{t+1} = project(A theta_t + eps)` from a
//! uniform draw on the simplex. Every document picks a single topic from its
//! slice's state and draws all of its tokens i.i.d. from that topic's word
//! distribution, so the word distributions have a sharp oracle.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedIndex;
use rand_distr::{Distribution, Exp1, Gamma};
use serde::Serialize;

use crate::corpus::{Corpus, RawRecord, TokenizerConfig};
use crate::error::{Error, Result};
use crate::model::{simplex_project, transition_step};

/// Scalar knobs from which a [`SyntheticSpec`] is derived.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticParams {
    pub k: usize,
    pub v: usize,
    pub num_slices: usize,
    pub docs_per_slice: usize,
    pub doc_length: usize,
    pub sigma: f64,
    pub seed: u64,
    /// Mass each topic sends to the other topics per step.
    pub off_diagonal: f64,
    /// Symmetric Dirichlet concentration of the topic-word rows.
    pub phi_concentration: f64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            k: 3,
            v: 50,
            num_slices: 40,
            docs_per_slice: 20,
            doc_length: 30,
            sigma: 0.01,
            seed: 11,
            off_diagonal: 0.2,
            phi_concentration: 0.1,
        }
    }
}

impl SyntheticParams {
    /// Parses `key = value` lines; unknown keys are a usage error.
    pub fn parse(text: &str) -> Result<Self> {
        let mut p = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |message: String| Error::Config { line, message };
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{content}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = || err(format!("invalid value `{value}` for `{key}`"));
            match key {
                "k" => p.k = value.parse().map_err(|_| bad())?,
                "v" => p.v = value.parse().map_err(|_| bad())?,
                "num_slices" => p.num_slices = value.parse().map_err(|_| bad())?,
                "docs_per_slice" => p.docs_per_slice = value.parse().map_err(|_| bad())?,
                "doc_length" => p.doc_length = value.parse().map_err(|_| bad())?,
                "sigma" => p.sigma = value.parse().map_err(|_| bad())?,
                "seed" => p.seed = value.parse().map_err(|_| bad())?,
                "off_diagonal" => p.off_diagonal = value.parse().map_err(|_| bad())?,
                "phi_concentration" => p.phi_concentration = value.parse().map_err(|_| bad())?,
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Builds the explicit spec. `A` keeps `1 - off_diagonal` on the diagonal
    /// and spreads `off_diagonal` evenly over the other topics (doubly
    /// stochastic). `phi` rows are Dirichlet draws from ChaCha stream 1 of
    /// the seed, so they do not depend on the corpus size.
    pub fn build(&self) -> Result<SyntheticSpec> {
        if self.k < 1 || self.v < 1 {
            return Err(Error::InvalidArgument("k and v must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.off_diagonal) {
            return Err(Error::InvalidArgument(format!(
                "off_diagonal must lie in [0, 1], got {}",
                self.off_diagonal
            )));
        }
        let k = self.k;
        let off = if k > 1 { self.off_diagonal / (k - 1) as f64 } else { 0.0 };
        let a_true = Array2::from_shape_fn((k, k), |(i, j)| {
            if i == j {
                if k > 1 { 1.0 - self.off_diagonal } else { 1.0 }
            } else {
                off
            }
        });
        let gamma = Gamma::new(self.phi_concentration, 1.0).map_err(|e| {
            Error::InvalidArgument(format!("phi_concentration {}: {e}", self.phi_concentration))
        })?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(1);
        let mut phi_true = Array2::zeros((k, self.v));
        for mut row in phi_true.rows_mut() {
            loop {
                row.iter_mut().for_each(|x| *x = gamma.sample(&mut rng));
                let z: f64 = row.sum();
                if z > 0.0 && z.is_finite() {
                    row /= z;
                    break;
                }
            }
        }
        let spec = SyntheticSpec {
            k,
            v: self.v,
            num_slices: self.num_slices,
            docs_per_slice: self.docs_per_slice,
            doc_length: self.doc_length,
            a_true,
            phi_true,
            sigma: self.sigma,
            seed: self.seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub k: usize,
    pub v: usize,
    pub num_slices: usize,
    pub docs_per_slice: usize,
    pub doc_length: usize,
    pub a_true: Array2<f64>,
    pub phi_true: Array2<f64>,
    pub sigma: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.k < 1 || self.v < 1 || self.num_slices < 1 || self.docs_per_slice < 1 || self.doc_length < 1 {
            return bad("all synthetic counts must be at least 1".into());
        }
        if self.a_true.dim() != (self.k, self.k) || self.phi_true.dim() != (self.k, self.v) {
            return bad("a_true must be K x K and phi_true K x V".into());
        }
        if self.a_true.iter().any(|x| !x.is_finite()) {
            return bad("a_true must be finite".into());
        }
        for (i, row) in self.phi_true.rows().into_iter().enumerate() {
            if row.iter().any(|&x| x < 0.0 || !x.is_finite()) || (row.sum() - 1.0).abs() > 1e-9 {
                return bad(format!("phi_true row {i} is not a distribution"));
            }
        }
        if !self.sigma.is_finite() || self.sigma < 0.0 {
            return bad(format!("sigma must be >= 0, got {}", self.sigma));
        }
        Ok(())
    }

    /// Term string for word `w`: `w000`, `w001`, ...
    pub fn term(&self, w: usize) -> String {
        let width = ((self.v.max(2) - 1).ilog10() as usize + 1).max(3);
        format!("w{w:0width$}")
    }

    pub fn terms(&self) -> Vec<String> {
        (0..self.v).map(|w| self.term(w)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruth {
    pub a_true: Vec<Vec<f64>>,
    pub phi_true: Vec<Vec<f64>>,
    /// Slice topic states, one row per slice.
    pub theta: Vec<Vec<f64>>,
    /// Topic drawn for each record, in record order.
    pub doc_topics: Vec<usize>,
    pub terms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub records: Vec<RawRecord>,
    pub truth: GroundTruth,
}

impl SyntheticCorpus {
    pub fn to_corpus(&self) -> Result<Corpus> {
        Ok(Corpus::from_records(self.records.clone(), &TokenizerConfig::default())?.0)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn truth_json(&self) -> String {
        serde_json::to_string_pretty(&self.truth).expect("truth serializes") + "\n"
    }

    pub fn theta(&self) -> Array2<f64> {
        rows_to_array(&self.truth.theta)
    }
}

fn rows_to_array(rows: &[Vec<f64>]) -> Array2<f64> {
    let cols = rows.first().map_or(0, Vec::len);
    Array2::from_shape_fn((rows.len(), cols), |(i, j)| rows[i][j])
}

fn matrix_rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

/// Uniform draw from the simplex via normalized unit exponentials.
fn uniform_simplex(k: usize, rng: &mut impl Rng) -> Array1<f64> {
    let draws = Array1::from_shape_simple_fn(k, || -> f64 { Exp1.sample(rng) });
    let z = draws.sum();
    draws / z
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticCorpus> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut states = Vec::with_capacity(spec.num_slices);
    let mut theta = uniform_simplex(spec.k, &mut rng);
    states.push(theta.clone());
    for _ in 1..spec.num_slices {
        let raw = transition_step(theta.view(), &spec.a_true, spec.sigma, Some(&mut rng));
        theta = simplex_project(raw.view());
        states.push(theta.clone());
    }

    let word_dists = spec
        .phi_true
        .rows()
        .into_iter()
        .map(|row| WeightedIndex::new(row.iter().copied()))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::InvalidArgument(format!("phi_true row: {e}")))?;
    let terms = spec.terms();

    let mut records = Vec::with_capacity(spec.num_slices * spec.docs_per_slice);
    let mut doc_topics = Vec::with_capacity(records.capacity());
    for (t, state) in states.iter().enumerate() {
        let topic_dist = WeightedIndex::new(state.iter().copied())
            .map_err(|e| Error::InvalidArgument(format!("slice {t} state: {e}")))?;
        for j in 0..spec.docs_per_slice {
            let z = topic_dist.sample(&mut rng);
            let words: Vec<&str> = (0..spec.doc_length)
                .map(|_| terms[word_dists[z].sample(&mut rng)].as_str())
                .collect();
            records.push(RawRecord {
                id: format!("s{t:04}-d{j:04}"),
                timestamp: t as i64,
                label: Some(format!("topic{z}")),
                text: words.join(" "),
            });
            doc_topics.push(z);
        }
    }
    Ok(SyntheticCorpus {
        records,
        truth: GroundTruth {
            a_true: matrix_rows(&spec.a_true),
            phi_true: matrix_rows(&spec.phi_true),
            theta: states.iter().map(|s| s.to_vec()).collect(),
            doc_topics,
            terms,
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryScore {
    pub frobenius_error: f64,
    /// `permutation[k]` is the estimated topic matched to true topic `k`.
    pub permutation: Vec<usize>,
    pub phi_match: f64,
}

fn cosine(a: ndarray::ArrayView1<'_, f64>, b: ndarray::ArrayView1<'_, f64>) -> f64 {
    let denom = a.dot(&a).sqrt() * b.dot(&b).sqrt();
    if denom == 0.0 {
        0.0
    } else {
        a.dot(&b) / denom
    }
}

/// Greedy best-pair topic alignment by word-distribution cosine, then the
/// Frobenius distance between the aligned and true transition matrices.
/// The alignment is approximate (not an optimal assignment).
pub fn recovery_score(
    a_est: &Array2<f64>,
    phi_est: &Array2<f64>,
    a_true: &Array2<f64>,
    phi_true: &Array2<f64>,
) -> Result<RecoveryScore> {
    let k = a_true.nrows();
    if a_est.dim() != (k, k) || a_true.dim() != (k, k) || phi_est.nrows() != k || phi_true.nrows() != k {
        return Err(Error::ShapeMismatch(format!(
            "topic counts differ: estimated {}, true {k}",
            a_est.nrows()
        )));
    }
    if phi_est.ncols() != phi_true.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "vocabularies differ: {} vs {}",
            phi_est.ncols(),
            phi_true.ncols()
        )));
    }
    let sims = Array2::from_shape_fn((k, k), |(t, e)| cosine(phi_true.row(t), phi_est.row(e)));
    let mut permutation = vec![usize::MAX; k];
    let mut used = vec![false; k];
    let mut matched_sum = 0.0;
    for _ in 0..k {
        let mut best: Option<(usize, usize, f64)> = None;
        for t in (0..k).filter(|&t| permutation[t] == usize::MAX) {
            for e in (0..k).filter(|&e| !used[e]) {
                if best.is_none_or(|(_, _, s)| sims[[t, e]] > s) {
                    best = Some((t, e, sims[[t, e]]));
                }
            }
        }
        let (t, e, s) = best.expect("unmatched pair remains");
        permutation[t] = e;
        used[e] = true;
        matched_sum += s;
    }
    let aligned = Array2::from_shape_fn((k, k), |(i, j)| a_est[[permutation[i], permutation[j]]]);
    let frobenius_error = (&aligned - a_true).mapv(|x| x * x).sum().sqrt();
    Ok(RecoveryScore {
        frobenius_error,
        permutation,
        phi_match: matched_sum / k as f64,
    })
}

/// Reorders estimated topic-word columns into the true term order. Terms the
/// estimate never saw get probability zero.
pub fn align_phi_columns(phi_est: &Array2<f64>, est_terms: &[String], true_terms: &[String]) -> Array2<f64> {
    let index: std::collections::HashMap<&str, usize> =
        est_terms.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
    Array2::from_shape_fn((phi_est.nrows(), true_terms.len()), |(k, w)| {
        index.get(true_terms[w].as_str()).map_or(0.0, |&c| phi_est[[k, c]])
    })
}
