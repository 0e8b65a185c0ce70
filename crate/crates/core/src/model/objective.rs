//! Joint objective and its hand-derived gradients.
//!
//! ```text
//! L = likelihood + beta * sum_t || theta_{t+1} - A theta_t ||^2
//! ```
//!
//! Supervised likelihood is the cross-entropy against one-hot labels.
//! Unsupervised likelihood is the token negative log-likelihood under the
//! mixture `p(w|d) = sum_k theta_dk phi_kw`, with `phi` held fixed (it is
//! re-estimated in closed form between gradient steps).
//!
//! Backward pass, with `n_s` the population of slice `s` and
//! `r_t = theta_{t+1} - A theta_t`:
//!
//! ```text
//! dL/dtheta_s  = 2 beta (r_{s-1} - A^T r_s)            (missing ends dropped)
//! dL/dtheta_d += dL/dtheta_slice(d) / n_slice(d)
//! dL/dz_d      = theta_d * (g_d - <theta_d, g_d>)      (softmax Jacobian)
//! dL/dW        = sum_d dL/dz_d h~_d^T,  dL/db = sum_d dL/dz_d
//! dL/dA        = -2 beta sum_t r_t theta_t^T
//! ```

use std::collections::BTreeSet;

use ndarray::{Array1, Array2};

use super::{slice_topic_state, softmax, ModelParams};
use crate::corpus::{Corpus, TimeSliceIndex};
use crate::error::{Error, Result};

/// Sparse bag of words per document.
pub type Counts = [Vec<(usize, u32)>];

/// What the likelihood term scores against.
#[derive(Debug, Clone, Copy)]
pub enum Targets<'a> {
    /// Class index per document.
    Supervised(&'a [usize]),
    /// Token counts per document.
    Unsupervised(&'a Counts),
}

/// Sorted class names and the class index of each document.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSet {
    pub classes: Vec<String>,
    pub targets: Vec<usize>,
}

impl LabelSet {
    pub fn from_corpus(corpus: &Corpus) -> Result<Self> {
        let mut names = Vec::with_capacity(corpus.len());
        for d in corpus.documents() {
            match &d.label {
                Some(l) => names.push(l.as_str()),
                None => {
                    return Err(Error::Labels(format!("document `{}` has no label", d.id)));
                }
            }
        }
        let classes: Vec<String> = names
            .iter()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .map(str::to_owned)
            .collect();
        let targets = names
            .iter()
            .map(|n| classes.binary_search_by(|c| c.as_str().cmp(n)).expect("collected above"))
            .collect();
        Ok(Self { classes, targets })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossComponents {
    pub likelihood: f64,
    pub consistency: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
    pub a: Array2<f64>,
}

/// Topic distributions for every pooled row.
pub fn forward(pooled: &Array2<f64>, params: &ModelParams) -> Result<Array2<f64>> {
    if pooled.ncols() != params.dim() {
        return Err(Error::ShapeMismatch(format!(
            "pooled representations have dimension {}, W expects {}",
            pooled.ncols(),
            params.dim()
        )));
    }
    let mut logits = pooled.dot(&params.w.t());
    logits += &params.b;
    let mut theta = Array2::zeros(logits.dim());
    for (mut out, z) in theta.rows_mut().into_iter().zip(logits.rows()) {
        out.assign(&softmax(z));
    }
    Ok(theta)
}

fn check_targets(targets: Targets<'_>, n: usize, k: usize, v: usize) -> Result<()> {
    match targets {
        Targets::Supervised(y) => {
            if y.len() != n {
                return Err(Error::ShapeMismatch(format!("{} labels for {n} documents", y.len())));
            }
            if let Some(&bad) = y.iter().find(|&&c| c >= k) {
                return Err(Error::Labels(format!("class index {bad} but only {k} topics")));
            }
        }
        Targets::Unsupervised(counts) => {
            if counts.len() != n {
                return Err(Error::ShapeMismatch(format!(
                    "{} count rows for {n} documents",
                    counts.len()
                )));
            }
            if counts.iter().flatten().any(|&(w, _)| w >= v) {
                return Err(Error::ShapeMismatch("term id outside phi's vocabulary".into()));
            }
        }
    }
    Ok(())
}

/// Per-token mixture probabilities `p(w|d)` for the document's sparse counts.
fn mixture_probs(theta_d: ndarray::ArrayView1<'_, f64>, phi: &Array2<f64>, counts: &[(usize, u32)]) -> Vec<f64> {
    counts
        .iter()
        .map(|&(w, _)| theta_d.iter().zip(phi.column(w)).map(|(t, p)| t * p).sum())
        .collect()
}

fn likelihood_term(theta_doc: &Array2<f64>, targets: Targets<'_>, phi: &Array2<f64>) -> f64 {
    match targets {
        Targets::Supervised(y) => y
            .iter()
            .enumerate()
            .map(|(i, &c)| -theta_doc[[i, c]].ln())
            .sum(),
        Targets::Unsupervised(counts) => counts
            .iter()
            .enumerate()
            .map(|(d, row)| {
                mixture_probs(theta_doc.row(d), phi, row)
                    .iter()
                    .zip(row)
                    .map(|(p, &(_, c))| -(c as f64) * p.ln())
                    .sum::<f64>()
            })
            .sum(),
    }
}

/// `theta_{t+1} - A theta_t` for each adjacent slice pair.
fn residuals(theta_slice: &Array2<f64>, a: &Array2<f64>) -> Vec<Array1<f64>> {
    (0..theta_slice.nrows().saturating_sub(1))
        .map(|t| &theta_slice.row(t + 1) - &a.dot(&theta_slice.row(t)))
        .collect()
}

/// Evaluates the objective at given distributions.
pub fn joint_loss(
    theta_doc: &Array2<f64>,
    theta_slice: &Array2<f64>,
    targets: Targets<'_>,
    params: &ModelParams,
) -> Result<LossComponents> {
    let (n, k) = theta_doc.dim();
    if k != params.k() || theta_slice.ncols() != k || params.a.dim() != (k, k) {
        return Err(Error::ShapeMismatch(format!(
            "topic count mismatch: theta has {k}, params have {}",
            params.k()
        )));
    }
    check_targets(targets, n, k, params.vocab_size())?;
    let likelihood = likelihood_term(theta_doc, targets, &params.phi);
    let consistency = params.beta
        * residuals(theta_slice, &params.a)
            .iter()
            .map(|r| r.dot(r))
            .sum::<f64>();
    Ok(LossComponents {
        likelihood,
        consistency,
        total: likelihood + consistency,
    })
}

/// Loss and analytic gradients with respect to `W`, `b` and `A` (phi fixed).
pub fn gradients(
    pooled: &Array2<f64>,
    slices: &TimeSliceIndex,
    targets: Targets<'_>,
    params: &ModelParams,
) -> Result<(LossComponents, Gradients)> {
    let theta = forward(pooled, params)?;
    let theta_slice = slice_topic_state(&theta, slices)?;
    let loss = joint_loss(&theta, &theta_slice, targets, params)?;
    let (n, k) = theta.dim();
    let beta = params.beta;

    // Consistency gradient w.r.t. each slice state, and w.r.t. A.
    let res = residuals(&theta_slice, &params.a);
    let mut g_slice = Array2::<f64>::zeros(theta_slice.dim());
    let mut grad_a = Array2::<f64>::zeros((k, k));
    if beta != 0.0 {
        for (t, r) in res.iter().enumerate() {
            g_slice.row_mut(t + 1).scaled_add(2.0 * beta, r);
            g_slice.row_mut(t).scaled_add(-2.0 * beta, &params.a.t().dot(r));
            for i in 0..k {
                for j in 0..k {
                    grad_a[[i, j]] -= 2.0 * beta * r[i] * theta_slice[[t, j]];
                }
            }
        }
    }
    let pops = slices.populations();

    // dL/dz per document.
    let mut dz = Array2::<f64>::zeros((n, k));
    for d in 0..n {
        let th = theta.row(d);
        let s = slices.slice_of(d);
        let g: Array1<f64> = g_slice.row(s).mapv(|x| x / pops[s] as f64);
        let mut row = dz.row_mut(d);
        match targets {
            Targets::Supervised(y) => {
                // Cross-entropy through softmax collapses to theta - y.
                row.assign(&th);
                row[y[d]] -= 1.0;
                let inner = th.dot(&g);
                for j in 0..k {
                    row[j] += th[j] * (g[j] - inner);
                }
            }
            Targets::Unsupervised(counts) => {
                let probs = mixture_probs(th, &params.phi, &counts[d]);
                let mut gl = g;
                for (&(w, c), p) in counts[d].iter().zip(&probs) {
                    let scale = c as f64 / p;
                    for j in 0..k {
                        gl[j] -= scale * params.phi[[j, w]];
                    }
                }
                let inner = th.dot(&gl);
                for j in 0..k {
                    row[j] = th[j] * (gl[j] - inner);
                }
            }
        }
    }
    let grads = Gradients {
        w: dz.t().dot(pooled),
        b: dz.sum_axis(ndarray::Axis(0)),
        a: grad_a,
    };
    Ok((loss, grads))
}

/// `phi_kw` proportional to `eta + sum_d theta_dk c_dw`.
pub fn estimate_topic_word(
    theta_doc: &Array2<f64>,
    counts: &Counts,
    vocab_size: usize,
    eta: f64,
) -> Result<Array2<f64>> {
    if eta.is_nan() || eta <= 0.0 {
        return Err(Error::InvalidArgument(format!("smoothing must be > 0, got {eta}")));
    }
    if counts.len() != theta_doc.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "{} count rows for {} documents",
            counts.len(),
            theta_doc.nrows()
        )));
    }
    let k = theta_doc.ncols();
    let mut phi = Array2::from_elem((k, vocab_size), eta);
    for (d, row) in counts.iter().enumerate() {
        for &(w, c) in row {
            if w >= vocab_size {
                return Err(Error::ShapeMismatch(format!("term id {w} >= {vocab_size}")));
            }
            for j in 0..k {
                phi[[j, w]] += theta_doc[[d, j]] * c as f64;
            }
        }
    }
    for mut row in phi.rows_mut() {
        let z = row.sum();
        row /= z;
    }
    Ok(phi)
}
