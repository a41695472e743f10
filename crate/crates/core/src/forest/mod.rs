//! Differentiable decision forest for scalar regression.
//!
//! Each of the K trees is a full binary tree of fixed depth d. An internal
//! node holds a weight vector A (one entry per feature) and a threshold b;
//! its gating probability is sigmoid(A.x - b) and, by convention, gates the
//! LEFT child. A leaf holds a scalar response Q. A tree's output is the
//! path-probability-weighted average of its leaf responses, the forest's
//! output is the plain mean over trees.
//!
//! Parameters live in one flat buffer whose layout doubles as the on-disk
//! layout: per tree, node-major [A_0 | b_0 | A_1 | b_1 | ...] followed by the
//! leaf responses. Feature normalization statistics are part of the model;
//! `predict` z-scores raw inputs itself, so a stored model is self-contained.

mod io;
mod optim;
mod train;

pub use io::{
    load_model, load_model_meta, meta_path, model_from_bytes, model_to_bytes, save_model,
    save_model_meta, ModelMeta, MODEL_MAGIC,
};
pub use optim::{optimizer_step, OptimConfig, OptimState, OptimizerKind};
pub use train::{
    backward, batch_loss, loss_grad, loss_value, train, BatchGrad, EpochStats, LossComposition,
    LossKind, LossSpec, TrainConfig, TrainResult,
};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Gating probability sigmoid(A.x - b); strictly inside (0, 1).
pub fn gate<S: Scalar>(weights: &[S], x: &[S], threshold: S) -> S {
    debug_assert_eq!(weights.len(), x.len());
    let z = weights
        .iter()
        .zip(x)
        .fold(S::zero(), |acc, (&a, &v)| acc + a * v)
        - threshold;
    sigmoid(z)
}

#[inline]
pub(crate) fn sigmoid<S: Scalar>(z: S) -> S {
    S::one() / (S::one() + (-z).exp())
}

/// Ensemble of soft decision trees plus the feature statistics they were
/// trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct Forest<S> {
    n_trees: usize,
    depth: usize,
    n_features: usize,
    loss: LossKind,
    feat_mean: Vec<S>,
    feat_std: Vec<S>,
    params: Vec<S>,
}

impl<S: Scalar> Forest<S> {
    pub fn new(
        n_trees: usize,
        depth: usize,
        n_features: usize,
        loss: LossKind,
        feat_mean: Vec<S>,
        feat_std: Vec<S>,
        params: Vec<S>,
    ) -> Result<Self> {
        if n_trees == 0 || depth == 0 || n_features == 0 {
            return Err(Error::argument("forest needs at least one tree, level and feature"));
        }
        if depth > 24 {
            return Err(Error::argument(format!("tree depth {depth} is unreasonably large")));
        }
        if feat_mean.len() != n_features || feat_std.len() != n_features {
            return Err(Error::argument("normalization statistics must have one entry per feature"));
        }
        let f = Self { n_trees, depth, n_features, loss, feat_mean, feat_std, params };
        if f.params.len() != f.n_trees * f.tree_stride() {
            return Err(Error::argument(format!(
                "parameter buffer has {} entries, expected {}",
                f.params.len(),
                f.n_trees * f.tree_stride()
            )));
        }
        if !f.params.iter().all(|v| v.is_finite())
            || !f.feat_mean.iter().all(|v| v.is_finite())
            || !f.feat_std.iter().all(|v| v.is_finite())
        {
            return Err(Error::argument("forest parameters must be finite"));
        }
        Ok(f)
    }

    pub fn n_trees(&self) -> usize {
        self.n_trees
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn loss_kind(&self) -> LossKind {
        self.loss
    }

    pub fn node_count(&self) -> usize {
        (1usize << self.depth) - 1
    }

    pub fn leaf_count(&self) -> usize {
        1usize << self.depth
    }

    pub(crate) fn tree_stride(&self) -> usize {
        self.node_count() * (self.n_features + 1) + self.leaf_count()
    }

    pub(crate) fn params(&self) -> &[S] {
        &self.params
    }

    pub(crate) fn params_mut(&mut self) -> &mut Vec<S> {
        &mut self.params
    }

    pub fn feature_stats(&self) -> (&[S], &[S]) {
        (&self.feat_mean, &self.feat_std)
    }

    /// Read-only view of one tree's parameters.
    pub fn tree(&self, h: usize) -> TreeView<'_, S> {
        assert!(h < self.n_trees);
        let stride = self.tree_stride();
        let base = h * stride;
        let node_len = self.node_count() * (self.n_features + 1);
        TreeView {
            depth: self.depth,
            n_features: self.n_features,
            nodes: &self.params[base..base + node_len],
            leaves: &self.params[base + node_len..base + stride],
        }
    }

    pub fn normalize_into(&self, x: &[S], out: &mut [S]) {
        for ((o, &v), (&m, &s)) in out
            .iter_mut()
            .zip(x)
            .zip(self.feat_mean.iter().zip(&self.feat_std))
        {
            *o = (v - m) / s;
        }
    }

    /// Forest prediction on a raw feature vector: z-score, evaluate every
    /// tree, average.
    pub fn predict(&self, x: &[S]) -> Result<S> {
        if x.len() != self.n_features {
            return Err(Error::argument(format!(
                "input has {} features, model expects {}",
                x.len(),
                self.n_features
            )));
        }
        let mut xn = vec![S::zero(); self.n_features];
        self.normalize_into(x, &mut xn);
        Ok(self.predict_normalized(&xn))
    }

    pub(crate) fn predict_normalized(&self, xn: &[S]) -> S {
        // summing in sorted order makes the mean independent of how the
        // trees happen to be stored
        let mut preds: Vec<S> = (0..self.n_trees).map(|h| self.tree(h).predict(xn)).collect();
        preds.sort_by(|a, b| a.partial_cmp(b).expect("finite tree outputs"));
        preds.iter().copied().sum::<S>() / S::from_usize(self.n_trees).unwrap()
    }
}

/// One tree inside the flat parameter buffer.
#[derive(Debug, Clone, Copy)]
pub struct TreeView<'a, S> {
    depth: usize,
    n_features: usize,
    nodes: &'a [S],
    leaves: &'a [S],
}

impl<'a, S: Scalar> TreeView<'a, S> {
    pub fn node_count(&self) -> usize {
        (1 << self.depth) - 1
    }

    pub fn leaf_count(&self) -> usize {
        1 << self.depth
    }

    pub fn weights(&self, k: usize) -> &'a [S] {
        let base = k * (self.n_features + 1);
        &self.nodes[base..base + self.n_features]
    }

    pub fn threshold(&self, k: usize) -> S {
        self.nodes[k * (self.n_features + 1) + self.n_features]
    }

    pub fn leaf_response(&self, j: usize) -> S {
        self.leaves[j]
    }

    pub fn gate_at(&self, k: usize, x: &[S]) -> S {
        gate(self.weights(k), x, self.threshold(k))
    }

    /// Path probability of every leaf: top-down product of gate factors
    /// (g toward the left child, 1-g toward the right).
    pub fn leaf_probabilities(&self, x: &[S]) -> Vec<S> {
        let n_nodes = self.node_count();
        let mut arrival = vec![S::zero(); n_nodes + self.leaf_count()];
        arrival[0] = S::one();
        for k in 0..n_nodes {
            let g = self.gate_at(k, x);
            let p = arrival[k];
            arrival[2 * k + 1] = p * g;
            arrival[2 * k + 2] = p * (S::one() - g);
        }
        arrival.split_off(n_nodes)
    }

    /// Probability-weighted average of the leaf responses.
    pub fn predict(&self, x: &[S]) -> S {
        // bottom-up conditional values avoid forming each path product
        let n_nodes = self.node_count();
        let mut value = vec![S::zero(); n_nodes + self.leaf_count()];
        value[n_nodes..].copy_from_slice(self.leaves);
        for k in (0..n_nodes).rev() {
            let g = self.gate_at(k, x);
            value[k] = g * value[2 * k + 1] + (S::one() - g) * value[2 * k + 2];
        }
        value[0]
    }
}
