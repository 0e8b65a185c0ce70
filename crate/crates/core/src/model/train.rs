use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::objective::{estimate_topic_word, forward, gradients, LabelSet, LossComponents, Targets};
use super::{slice_topic_state, ModelParams, TopicAssignments};
use crate::corpus::{Corpus, TimeSliceIndex};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Supervised,
    Unsupervised,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "supervised" => Ok(Mode::Supervised),
            "unsupervised" => Ok(Mode::Unsupervised),
            other => Err(Error::InvalidArgument(format!(
                "mode must be `supervised` or `unsupervised`, got `{other}`"
            ))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Supervised => "supervised",
            Mode::Unsupervised => "unsupervised",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub mode: Mode,
    pub init_scale: f64,
    pub beta: f64,
    pub k: usize,
    pub smoothing_eta: f64,
    pub sigma: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            learning_rate: 0.05,
            seed: 7,
            mode: Mode::Unsupervised,
            init_scale: 0.01,
            beta: 1.0,
            k: 20,
            smoothing_eta: 0.01,
            sigma: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.epochs < 1 {
            return bad("epochs must be at least 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be > 0, got {}", self.learning_rate));
        }
        if !(self.init_scale > 0.0 && self.init_scale.is_finite()) {
            return bad(format!("init_scale must be > 0, got {}", self.init_scale));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad(format!("beta must be >= 0, got {}", self.beta));
        }
        if self.k < 1 {
            return bad("k must be at least 1".into());
        }
        if self.smoothing_eta.is_nan() || self.smoothing_eta <= 0.0 {
            return bad(format!("smoothing_eta must be > 0, got {}", self.smoothing_eta));
        }
        if self.sigma.is_nan() || self.sigma < 0.0 {
            return bad(format!("sigma must be >= 0, got {}", self.sigma));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub assignments: TopicAssignments,
    /// Loss before each update, followed by the loss of the returned params.
    pub history: Vec<LossComponents>,
}

impl TrainOutcome {
    pub fn initial_loss(&self) -> LossComponents {
        self.history[0]
    }

    pub fn final_loss(&self) -> LossComponents {
        *self.history.last().expect("history is never empty")
    }
}

/// `W`, `b` from a seeded Gaussian (row-major W, then b) times `init_scale`;
/// `A` starts at the identity.
fn init_params(cfg: &TrainConfig, dim: usize, vocab_size: usize) -> ModelParams {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
    let w = Array2::from_shape_simple_fn((cfg.k, dim), || draw() * cfg.init_scale);
    let b = Array1::from_shape_simple_fn(cfg.k, || draw() * cfg.init_scale);
    ModelParams {
        w,
        b,
        a: Array2::eye(cfg.k),
        phi: Array2::from_elem((cfg.k, vocab_size), 1.0 / vocab_size as f64),
        sigma: cfg.sigma,
        beta: cfg.beta,
    }
}

/// Full-batch gradient descent on the joint objective, with step
/// `learning_rate / N` (the objective's minimizers are unchanged).
///
/// `pooled` holds the time-aware document representations in corpus order.
/// In unsupervised mode `phi` is re-estimated from the current topic
/// distributions before every step; in supervised mode it is estimated once
/// at the end (metrics need it).
pub fn train(
    corpus: &Corpus,
    pooled: &Array2<f64>,
    slices: &TimeSliceIndex,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let n = corpus.len();
    if pooled.nrows() != n || slices.num_docs() != n {
        return Err(Error::ShapeMismatch(format!(
            "corpus has {n} documents, pooled {} rows, slice index {}",
            pooled.nrows(),
            slices.num_docs()
        )));
    }
    let counts = corpus.term_counts();
    let vocab_size = corpus.vocabulary().len();
    let labels = match cfg.mode {
        Mode::Supervised => {
            let labels = LabelSet::from_corpus(corpus)?;
            if labels.classes.len() != cfg.k {
                return Err(Error::Labels(format!(
                    "k = {} but the corpus has {} classes",
                    cfg.k,
                    labels.classes.len()
                )));
            }
            Some(labels)
        }
        Mode::Unsupervised => None,
    };
    let targets = match &labels {
        Some(l) => Targets::Supervised(&l.targets),
        None => Targets::Unsupervised(&counts),
    };

    // The objective is a sum over documents, so a fixed step on it grows
    // with corpus size. Steps are taken on the per-document mean instead.
    let step = cfg.learning_rate / n as f64;
    let mut params = init_params(cfg, pooled.ncols(), vocab_size);
    let mut history = Vec::with_capacity(cfg.epochs + 1);
    for epoch in 0..cfg.epochs {
        if cfg.mode == Mode::Unsupervised {
            let theta = forward(pooled, &params)?;
            params.phi = estimate_topic_word(&theta, &counts, vocab_size, cfg.smoothing_eta)?;
        }
        let (loss, grads) = gradients(pooled, slices, targets, &params)?;
        if !loss.total.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        history.push(loss);
        params.w.scaled_add(-step, &grads.w);
        params.b.scaled_add(-step, &grads.b);
        if cfg.beta != 0.0 {
            params.a.scaled_add(-step, &grads.a);
        }
    }

    let theta_doc = forward(pooled, &params)?;
    params.phi = estimate_topic_word(&theta_doc, &counts, vocab_size, cfg.smoothing_eta)?;
    let theta_slice = slice_topic_state(&theta_doc, slices)?;
    let last = super::joint_loss(&theta_doc, &theta_slice, targets, &params)?;
    if !last.total.is_finite() {
        return Err(Error::Diverged { epoch: cfg.epochs });
    }
    history.push(last);
    params.check_finite()?;
    Ok(TrainOutcome {
        params,
        assignments: TopicAssignments {
            theta_doc,
            theta_slice,
        },
        history,
    })
}
