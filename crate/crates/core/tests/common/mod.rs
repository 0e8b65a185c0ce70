//! Fuzz fixtures and independent reference computations shared by the
//! integration suites.
#![allow(dead_code)]

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use tempora::corpus::TimeSliceIndex;
use tempora::embed::EmbeddingMatrix;
use tempora::model::{forward, joint_loss, slice_topic_state, ModelParams, Targets};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || {
        let z: f64 = StandardNormal.sample(rng);
        z * scale
    })
}

/// Random slice assignment over `n` documents with every slice populated.
pub fn random_slices(rng: &mut ChaCha8Rng, n: usize, max_slices: usize) -> TimeSliceIndex {
    let t = rng.random_range(1..=max_slices.min(n));
    let mut of: Vec<usize> = (0..n).map(|i| if i < t { i } else { rng.random_range(0..t) }).collect();
    // Shuffle so slice membership is not tied to position.
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        of.swap(i, j);
    }
    TimeSliceIndex::from_assignments(of, t).unwrap()
}

pub fn random_embeddings(rng: &mut ChaCha8Rng, n: usize, d: usize) -> EmbeddingMatrix {
    let rows = (0..n)
        .map(|_| loop {
            let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut *rng)).collect();
            if v.iter().map(|x| x * x).sum::<f64>() > 1e-6 {
                break v;
            }
        })
        .collect();
    EmbeddingMatrix::from_rows(rows, "fuzz").unwrap()
}

/// Windowed scaled dot-product attention without decay, computed densely.
pub fn reference_attention(h: &EmbeddingMatrix, slices: &TimeSliceIndex, window: Option<usize>) -> Array2<f64> {
    let n = h.len();
    let scale = (h.dim() as f64).sqrt();
    let mut out = Array2::zeros((n, n));
    for i in 0..n {
        let si = slices.slice_of(i);
        let near: Vec<usize> = (0..n)
            .filter(|&j| window.is_none_or(|w| slices.slice_of(j).abs_diff(si) <= w))
            .collect();
        let scores: Vec<f64> = near.iter().map(|&j| h.row(i).dot(&h.row(j)) / scale).collect();
        let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = scores.iter().map(|s| (s - m).exp()).sum();
        for (&j, s) in near.iter().zip(&scores) {
            out[[i, j]] = (s - m).exp() / z;
        }
    }
    out
}

pub fn on_simplex(row: impl IntoIterator<Item = f64>, tol: f64) -> bool {
    let mut sum = 0.0;
    for x in row {
        if !x.is_finite() || x < -tol {
            return false;
        }
        sum += x;
    }
    (sum - 1.0).abs() <= tol
}

pub fn rows_on_simplex(m: &Array2<f64>, tol: f64) -> bool {
    m.rows().into_iter().all(|r| on_simplex(r.iter().copied(), tol))
}

/// A small random objective instance.
pub struct Instance {
    pub pooled: Array2<f64>,
    pub slices: TimeSliceIndex,
    pub params: ModelParams,
    pub labels: Vec<usize>,
    pub counts: Vec<Vec<(usize, u32)>>,
}

impl Instance {
    pub fn random(seed: u64) -> Self {
        let mut r = rng(seed);
        let k = r.random_range(2..=5);
        let d = r.random_range(1..=16);
        let n = r.random_range(2..=30);
        let v = r.random_range(2..=12);
        let slices = random_slices(&mut r, n, 8);
        let pooled = gaussian(&mut r, n, d, 0.5);
        let w = gaussian(&mut r, k, d, 0.7);
        let b = Array1::from_shape_simple_fn(k, || {
            let z: f64 = StandardNormal.sample(&mut r);
            0.5 * z
        });
        let a = Array2::eye(k) + gaussian(&mut r, k, k, 0.4);
        let mut phi = Array2::from_shape_simple_fn((k, v), || r.random_range(0.05..1.0));
        for mut row in phi.rows_mut() {
            let s = row.sum();
            row /= s;
        }
        let labels = (0..n).map(|_| r.random_range(0..k)).collect();
        let counts = (0..n)
            .map(|_| {
                let mut c = Vec::new();
                for w in 0..v {
                    if r.random_bool(0.5) {
                        c.push((w, r.random_range(1..5u32)));
                    }
                }
                if c.is_empty() {
                    c.push((r.random_range(0..v), 1));
                }
                c
            })
            .collect();
        Self {
            pooled,
            slices,
            params: ModelParams {
                w,
                b,
                a,
                phi,
                sigma: 0.0,
                beta: 0.0,
            },
            labels,
            counts,
        }
    }

    pub fn targets(&self, supervised: bool) -> Targets<'_> {
        if supervised {
            Targets::Supervised(&self.labels)
        } else {
            Targets::Unsupervised(&self.counts)
        }
    }

    /// Total loss recomputed from scratch through the public forward path.
    pub fn loss(&self, params: &ModelParams, supervised: bool) -> f64 {
        let theta = forward(&self.pooled, params).unwrap();
        let slice = slice_topic_state(&theta, &self.slices).unwrap();
        joint_loss(&theta, &slice, self.targets(supervised), params).unwrap().total
    }
}

/// Largest relative error between analytic gradients and central finite
/// differences (step 1e-5) over every entry of W, b and A. The denominator
/// is floored at 1e-3 so entries whose true derivative is zero are judged
/// on absolute error.
pub fn max_gradient_error(inst: &Instance, supervised: bool, beta: f64) -> f64 {
    const STEP: f64 = 1e-5;
    let mut params = inst.params.clone();
    params.beta = beta;
    let (_, g) = tempora::model::gradients(&inst.pooled, &inst.slices, inst.targets(supervised), &params).unwrap();
    let mut worst: f64 = 0.0;
    let mut check = |analytic: f64, bump: &dyn Fn(&mut ModelParams, f64)| {
        let mut plus = params.clone();
        bump(&mut plus, STEP);
        let mut minus = params.clone();
        bump(&mut minus, -STEP);
        let numeric = (inst.loss(&plus, supervised) - inst.loss(&minus, supervised)) / (2.0 * STEP);
        let err = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-3);
        worst = worst.max(err);
    };
    let (k, d) = params.w.dim();
    for i in 0..k {
        for j in 0..d {
            check(g.w[[i, j]], &|p, h| p.w[[i, j]] += h);
        }
        check(g.b[i], &|p, h| p.b[i] += h);
        for j in 0..k {
            check(g.a[[i, j]], &|p, h| p.a[[i, j]] += h);
        }
    }
    worst
}
