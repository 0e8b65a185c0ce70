//! Time-decayed attention across documents.
//!
//! For documents `i`, `j` with slice distance `dt = |slice(i) - slice(j)|` the
//! unnormalized log-weight is `(h_i . h_j / sqrt(d)) * exp(-lambda * dt)`: the
//! decay scales the score inside the exponent, so distant neighbours drift
//! toward uniform weight rather than toward zero. Rows are softmax-normalized
//! over the neighbourhood `{ j : dt <= window }`, which always contains `i`.

use ndarray::Array2;

use crate::corpus::TimeSliceIndex;
use crate::embed::EmbeddingMatrix;
use crate::error::{Error, Result};

/// Attention neighbourhood size in slices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Slices(usize),
    Unlimited,
}

impl Window {
    /// `-1` means unlimited, `0` self-slice only.
    pub fn from_config(value: i64) -> Result<Self> {
        match value {
            -1 => Ok(Window::Unlimited),
            v if v >= 0 => Ok(Window::Slices(v as usize)),
            v => Err(Error::InvalidArgument(format!(
                "attention window must be >= -1, got {v}"
            ))),
        }
    }

    fn contains(self, distance: usize) -> bool {
        match self {
            Window::Slices(w) => distance <= w,
            Window::Unlimited => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayConfig {
    /// Decay rate per slice.
    pub lambda: f64,
    pub window: Window,
}

impl Default for DecayConfig {
    fn default() -> Self {
        Self {
            lambda: 0.5,
            window: Window::Slices(3),
        }
    }
}

impl DecayConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "lambda must be finite and >= 0, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// `exp(-lambda * delta_t)`.
pub fn decay(delta_t: f64, lambda: f64) -> Result<f64> {
    if delta_t.is_nan() || lambda.is_nan() || delta_t < 0.0 || lambda < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "decay needs delta_t >= 0 and lambda >= 0, got ({delta_t}, {lambda})"
        )));
    }
    Ok((-lambda * delta_t).exp())
}

/// Sparse row-stochastic attention weights.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionMatrix {
    /// Per row, `(neighbour index, weight)` with ascending neighbour index.
    rows: Vec<Vec<(usize, f64)>>,
}

impl AttentionMatrix {
    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Weight of `j` in row `i`, zero outside the neighbourhood.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.rows[i]
            .binary_search_by_key(&j, |&(k, _)| k)
            .map_or(0.0, |pos| self.rows[i][pos].1)
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let n = self.rows.len();
        let mut out = Array2::zeros((n, n));
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                out[[i, j]] = w;
            }
        }
        out
    }
}

/// Computes the decayed attention weights for every document.
pub fn attention_weights(
    h: &EmbeddingMatrix,
    slices: &TimeSliceIndex,
    cfg: &DecayConfig,
) -> Result<AttentionMatrix> {
    cfg.validate()?;
    let n = h.len();
    if slices.num_docs() != n {
        return Err(Error::ShapeMismatch(format!(
            "{} embeddings but slice index covers {} documents",
            n,
            slices.num_docs()
        )));
    }
    let members = slices.members();
    let num_slices = slices.num_slices();
    let scale = 1.0 / (h.dim() as f64).sqrt();
    // Decay per slice distance, computed once.
    let decays: Vec<f64> = (0..num_slices)
        .map(|dt| decay(dt as f64, cfg.lambda))
        .collect::<Result<_>>()?;
    let rows_h = h.rows();

    let mut rows = Vec::with_capacity(n);
    let mut logits: Vec<(usize, f64)> = Vec::new();
    for i in 0..n {
        let si = slices.slice_of(i);
        let hi = rows_h.row(i);
        logits.clear();
        for (sj, docs) in members.iter().enumerate() {
            let dt = si.abs_diff(sj);
            if !cfg.window.contains(dt) {
                continue;
            }
            for &j in docs {
                let score = hi.dot(&rows_h.row(j)) * scale;
                logits.push((j, score * decays[dt]));
            }
        }
        assert!(!logits.is_empty(), "neighbourhood always contains the document itself");
        logits.sort_unstable_by_key(|&(j, _)| j);
        let max = logits.iter().map(|&(_, l)| l).fold(f64::NEG_INFINITY, f64::max);
        let mut row: Vec<(usize, f64)> = logits.iter().map(|&(j, l)| (j, (l - max).exp())).collect();
        let z: f64 = row.iter().map(|&(_, w)| w).sum();
        row.iter_mut().for_each(|(_, w)| *w /= z);
        rows.push(row);
    }
    Ok(AttentionMatrix { rows })
}

/// `h~_i = sum_j a_ij h_j`. Rows are not renormalized.
pub fn temporal_pool(h: &EmbeddingMatrix, attn: &AttentionMatrix) -> Result<Array2<f64>> {
    if attn.len() != h.len() {
        return Err(Error::ShapeMismatch(format!(
            "attention has {} rows, embeddings {}",
            attn.len(),
            h.len()
        )));
    }
    let mut out = Array2::zeros((h.len(), h.dim()));
    for (i, row) in attn.rows.iter().enumerate() {
        let mut target = out.row_mut(i);
        for &(j, w) in row {
            if j >= h.len() {
                return Err(Error::ShapeMismatch(format!("neighbour {j} out of range")));
            }
            target.scaled_add(w, &h.row(j));
        }
    }
    Ok(out)
}
