//! Perplexity, topic diversity, NPMI coherence and topic stability.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use ndarray::Array2;
use serde::Serialize;

use crate::corpus::Corpus;
use crate::error::{Error, Result};

pub const DIVERSITY_TOP_N: usize = 25;
pub const COHERENCE_TOP_N: usize = 10;

/// Token-level perplexity of the counts under `p(w|d) = sum_k theta_dk phi_kw`.
pub fn perplexity(counts: &[Vec<(usize, u32)>], theta_doc: &Array2<f64>, phi: &Array2<f64>) -> Result<f64> {
    if counts.len() != theta_doc.nrows() || theta_doc.ncols() != phi.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "{} count rows, theta {:?}, phi {:?}",
            counts.len(),
            theta_doc.dim(),
            phi.dim()
        )));
    }
    let mut log_lik = 0.0;
    let mut tokens = 0u64;
    for (d, row) in counts.iter().enumerate() {
        for &(w, c) in row {
            if w >= phi.ncols() {
                return Err(Error::ShapeMismatch(format!("term id {w} >= {}", phi.ncols())));
            }
            let p: f64 = theta_doc.row(d).dot(&phi.column(w));
            log_lik += c as f64 * p.ln();
            tokens += c as u64;
        }
    }
    if tokens == 0 {
        return Err(Error::InvalidArgument("perplexity of zero tokens".into()));
    }
    let ppl = (-log_lik / tokens as f64).exp();
    if !ppl.is_finite() {
        return Err(Error::NonFinite("perplexity"));
    }
    Ok(ppl)
}

/// The `n` highest-probability term ids per topic; ties go to the lower id.
pub fn top_words(phi: &Array2<f64>, n: usize) -> Result<Vec<Vec<usize>>> {
    if n > phi.ncols() {
        return Err(Error::InvalidArgument(format!(
            "asked for {n} top words from a vocabulary of {}",
            phi.ncols()
        )));
    }
    Ok(phi
        .rows()
        .into_iter()
        .map(|row| {
            let mut idx: Vec<usize> = (0..row.len()).collect();
            idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
            idx.truncate(n);
            idx
        })
        .collect())
}

/// Unique terms across all lists divided by the total list length.
pub fn topic_diversity(top: &[Vec<usize>]) -> Result<f64> {
    let total: usize = top.iter().map(Vec::len).sum();
    if total == 0 {
        return Err(Error::InvalidArgument("diversity needs at least one top word".into()));
    }
    let unique: HashSet<usize> = top.iter().flatten().copied().collect();
    Ok(unique.len() as f64 / total as f64)
}

/// NPMI from document-frequency fractions. Zero co-occurrence is floored at
/// one pseudo-document (`1/N`); observed co-occurrences are not smoothed.
pub fn npmi(p_i: f64, p_j: f64, p_ij: f64) -> f64 {
    if p_ij >= 1.0 {
        // Both words occur in every document.
        return 1.0;
    }
    (p_ij / (p_i * p_j)).ln() / -p_ij.ln()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coherence {
    pub mean: f64,
    pub per_topic: Vec<f64>,
    /// Topics with fewer than two of their top words present in the corpus.
    pub flagged: Vec<bool>,
}

/// Mean pairwise NPMI over each topic's top words, with documents as the
/// co-occurrence window.
pub fn topic_coherence_npmi(top: &[Vec<usize>], corpus: &Corpus) -> Result<Coherence> {
    let n_docs = corpus.len();
    if n_docs == 0 {
        return Err(Error::EmptyCorpus { dropped: 0 });
    }
    let n = n_docs as f64;
    let wanted: HashSet<usize> = top.iter().flatten().copied().collect();
    // Postings restricted to the words we need.
    let mut postings: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (d, doc) in corpus.documents().iter().enumerate() {
        let seen: HashSet<usize> = doc.tokens.iter().copied().filter(|t| wanted.contains(t)).collect();
        for t in seen {
            postings.entry(t).or_default().push(d);
        }
    }
    let co_count = |a: &[usize], b: &[usize]| {
        let (mut i, mut j, mut c) = (0, 0, 0usize);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    c += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        c
    };

    let mut per_topic = Vec::with_capacity(top.len());
    let mut flagged = Vec::with_capacity(top.len());
    for words in top {
        let present: Vec<&Vec<usize>> = words.iter().filter_map(|w| postings.get(w)).collect();
        if present.len() < 2 {
            per_topic.push(0.0);
            flagged.push(true);
            continue;
        }
        let mut sum = 0.0;
        let mut pairs = 0usize;
        for a in 0..present.len() {
            for b in a + 1..present.len() {
                let co = co_count(present[a], present[b]);
                let p_ij = if co == 0 { 1.0 / n } else { co as f64 / n };
                sum += npmi(present[a].len() as f64 / n, present[b].len() as f64 / n, p_ij);
                pairs += 1;
            }
        }
        per_topic.push(sum / pairs as f64);
        flagged.push(false);
    }
    let mean = if per_topic.is_empty() {
        0.0
    } else {
        per_topic.iter().sum::<f64>() / per_topic.len() as f64
    };
    Ok(Coherence {
        mean,
        per_topic,
        flagged,
    })
}

fn cosine(a: ndarray::ArrayView1<'_, f64>, b: ndarray::ArrayView1<'_, f64>) -> f64 {
    let denom = a.dot(&a).sqrt() * b.dot(&b).sqrt();
    if denom == 0.0 {
        0.0
    } else {
        a.dot(&b) / denom
    }
}

/// Mean cosine similarity between consecutive slice topic states.
pub fn topic_stability(theta_slice: &Array2<f64>) -> Result<f64> {
    let t = theta_slice.nrows();
    if t < 2 {
        return Err(Error::InvalidArgument(format!("stability needs at least 2 slices, got {t}")));
    }
    let sum: f64 = (0..t - 1)
        .map(|s| cosine(theta_slice.row(s), theta_slice.row(s + 1)))
        .sum();
    Ok(sum / (t - 1) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub perplexity: f64,
    pub diversity: f64,
    pub coherence: f64,
    pub stability: f64,
    pub per_topic_coherence: Vec<f64>,
    pub top_words: Vec<Vec<String>>,
    #[serde(skip)]
    pub flagged_topics: Vec<bool>,
    pub definitions: BTreeMap<&'static str, &'static str>,
}

fn definitions() -> BTreeMap<&'static str, &'static str> {
    BTreeMap::from([
        (
            "perplexity",
            "token-level: exp(-sum_d sum_w c_dw ln sum_k theta_dk phi_kw / total tokens), on the training corpus",
        ),
        ("diversity", "unique terms across all topics' top-25 lists / (K * 25)"),
        (
            "coherence",
            "mean over topics of mean pairwise NPMI of the top-10 words; document co-occurrence; zero joint count floored at 1/N",
        ),
        ("stability", "mean cosine similarity between consecutive slice topic states"),
    ])
}

/// Computes all four metrics for a trained model.
pub fn evaluation_report(
    corpus: &Corpus,
    theta_doc: &Array2<f64>,
    theta_slice: &Array2<f64>,
    phi: &Array2<f64>,
) -> Result<MetricsReport> {
    let vocab = corpus.vocabulary();
    if phi.ncols() != vocab.len() {
        return Err(Error::ShapeMismatch(format!(
            "phi has {} columns, vocabulary {} terms",
            phi.ncols(),
            vocab.len()
        )));
    }
    let counts = corpus.term_counts();
    let perplexity = perplexity(&counts, theta_doc, phi)?;
    let diversity = topic_diversity(&top_words(phi, DIVERSITY_TOP_N.min(vocab.len()))?)?;
    let coherence_top = top_words(phi, COHERENCE_TOP_N.min(vocab.len()))?;
    let coherence = topic_coherence_npmi(&coherence_top, corpus)?;
    let stability = topic_stability(theta_slice)?;
    let report = MetricsReport {
        perplexity,
        diversity,
        coherence: coherence.mean,
        stability,
        per_topic_coherence: coherence.per_topic,
        top_words: coherence_top
            .iter()
            .map(|ws| ws.iter().map(|&w| vocab.term(w).to_owned()).collect())
            .collect(),
        flagged_topics: coherence.flagged,
        definitions: definitions(),
    };
    let all = [report.perplexity, report.diversity, report.coherence, report.stability];
    if all.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("metrics report"));
    }
    Ok(report)
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// One row per topic: index, coherence, flag, top words.
    pub fn topics_csv(&self) -> String {
        let mut out = String::from("topic,coherence,flagged,top_words\n");
        for (k, c) in self.per_topic_coherence.iter().enumerate() {
            let words = self.top_words.get(k).map(|w| w.join(" ")).unwrap_or_default();
            let flagged = self.flagged_topics.get(k).copied().unwrap_or(false);
            writeln!(out, "{k},{c:.6},{flagged},{words}").unwrap();
        }
        out
    }
}
