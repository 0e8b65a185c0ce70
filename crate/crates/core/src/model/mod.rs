//! Topic head, slice-level dynamics, joint objective and training.
//!
//! Document topic distributions are `softmax(W h~ + b)`. A slice's topic state
//! is the mean of its documents' distributions, and consecutive slice states
//! are linked by the unconstrained transition matrix `A`.

mod checkpoint;
mod objective;
mod train;

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::corpus::TimeSliceIndex;
use crate::error::{Error, Result};

pub use checkpoint::{Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use objective::{
    estimate_topic_word, forward, gradients, joint_loss, Gradients, LabelSet, LossComponents,
    Targets,
};
pub use train::{train, Mode, TrainConfig, TrainOutcome};

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// K x d topic head weights.
    pub w: Array2<f64>,
    /// K topic head biases.
    pub b: Array1<f64>,
    /// K x K transition matrix.
    pub a: Array2<f64>,
    /// K x V topic-word distributions, rows on the simplex.
    pub phi: Array2<f64>,
    /// Transition noise scale, used only when sampling.
    pub sigma: f64,
    /// Consistency weight.
    pub beta: f64,
}

impl ModelParams {
    pub fn k(&self) -> usize {
        self.b.len()
    }

    pub fn dim(&self) -> usize {
        self.w.ncols()
    }

    pub fn vocab_size(&self) -> usize {
        self.phi.ncols()
    }

    /// Relabels topics: new topic `i` is old topic `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let k = self.k();
        assert_eq!(perm.len(), k);
        let rows = |m: &Array2<f64>| Array2::from_shape_fn(m.dim(), |(i, j)| m[[perm[i], j]]);
        Self {
            w: rows(&self.w),
            b: Array1::from_shape_fn(k, |i| self.b[perm[i]]),
            a: Array2::from_shape_fn((k, k), |(i, j)| self.a[[perm[i], perm[j]]]),
            phi: rows(&self.phi),
            sigma: self.sigma,
            beta: self.beta,
        }
    }

    pub fn check_finite(&self) -> Result<()> {
        let all_finite = self
            .w
            .iter()
            .chain(&self.b)
            .chain(&self.a)
            .chain(&self.phi)
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::NonFinite("model parameters"));
        }
        Ok(())
    }
}

/// Per-document and per-slice topic distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicAssignments {
    pub theta_doc: Array2<f64>,
    pub theta_slice: Array2<f64>,
}

/// Numerically stable softmax (max-subtracted).
pub fn softmax(logits: ArrayView1<'_, f64>) -> Array1<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = logits.mapv(|z| (z - max).exp());
    let sum = out.sum();
    out /= sum;
    out
}

/// `softmax(W h~ + b)` for a single pooled representation.
pub fn topic_distribution(
    h_tilde: ArrayView1<'_, f64>,
    w: &Array2<f64>,
    b: &Array1<f64>,
) -> Result<Array1<f64>> {
    if w.ncols() != h_tilde.len() || w.nrows() != b.len() {
        return Err(Error::ShapeMismatch(format!(
            "W is {:?}, h~ has {} entries, b has {}",
            w.dim(),
            h_tilde.len(),
            b.len()
        )));
    }
    let logits = w.dot(&h_tilde) + b;
    if logits.iter().any(|z| !z.is_finite()) {
        return Err(Error::NonFinite("topic logits"));
    }
    Ok(softmax(logits.view()))
}

/// Mean document distribution per slice.
pub fn slice_topic_state(theta_doc: &Array2<f64>, slices: &TimeSliceIndex) -> Result<Array2<f64>> {
    if theta_doc.nrows() != slices.num_docs() {
        return Err(Error::ShapeMismatch(format!(
            "{} document distributions, slice index covers {}",
            theta_doc.nrows(),
            slices.num_docs()
        )));
    }
    let k = theta_doc.ncols();
    let mut out = Array2::zeros((slices.num_slices(), k));
    for (s, docs) in slices.members().iter().enumerate() {
        if docs.is_empty() {
            return Err(Error::EmptySlice {
                slice: s,
                num_slices: slices.num_slices(),
            });
        }
        let mut row = out.row_mut(s);
        for &d in docs {
            row += &theta_doc.row(d);
        }
        row /= docs.len() as f64;
    }
    Ok(out)
}

/// `A theta + eps` with `eps ~ N(0, sigma^2 I)` when an RNG is supplied.
/// The result may leave the simplex.
pub fn transition_step<R: Rng + ?Sized>(
    theta: ArrayView1<'_, f64>,
    a: &Array2<f64>,
    sigma: f64,
    rng: Option<&mut R>,
) -> Array1<f64> {
    let mut next = a.dot(&theta);
    if let Some(rng) = rng {
        if sigma > 0.0 {
            let noise = Normal::new(0.0, sigma).expect("sigma is finite and positive");
            next.iter_mut().for_each(|v| *v += noise.sample(rng));
        }
    }
    next
}

/// Clips negatives to zero and renormalizes; falls back to uniform when no
/// positive mass remains.
pub fn simplex_project(v: ArrayView1<'_, f64>) -> Array1<f64> {
    let clipped = v.mapv(|x| if x > 0.0 { x } else { 0.0 });
    let sum = clipped.sum();
    if sum > 0.0 && sum.is_finite() {
        clipped / sum
    } else {
        Array1::from_elem(v.len(), 1.0 / v.len() as f64)
    }
}

/// Runs the noiseless dynamics forward `steps` times, projecting each state.
pub fn forecast(last: ArrayView1<'_, f64>, a: &Array2<f64>, steps: usize) -> Result<Vec<Array1<f64>>> {
    if steps == 0 {
        return Err(Error::InvalidArgument("forecast needs at least one step".into()));
    }
    if a.dim() != (last.len(), last.len()) {
        return Err(Error::ShapeMismatch(format!(
            "A is {:?} but the state has {} topics",
            a.dim(),
            last.len()
        )));
    }
    let mut out = Vec::with_capacity(steps);
    let mut state = last.to_owned();
    for _ in 0..steps {
        state = simplex_project(transition_step::<rand::rngs::ThreadRng>(state.view(), a, 0.0, None).view());
        out.push(state.clone());
    }
    Ok(out)
}
