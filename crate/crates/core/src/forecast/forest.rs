//! Regression forest over lag windows.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf(f64),
    /// Goes left when `x[feature] <= threshold`.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf(v) => return *v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub lag_window: usize,
    pub bootstrap: bool,
    pub min_samples_split: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 500,
            max_depth: 10,
            lag_window: 10,
            bootstrap: true,
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub lag_window: usize,
    pub trees: Vec<Tree>,
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    max_depth: usize,
    min_split: usize,
    mtry: usize,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn build(&mut self, idx: &mut [usize], depth: usize, r: &mut rng::Rng) -> usize {
        let mean = idx.iter().map(|&i| self.y[i]).sum::<f64>() / idx.len() as f64;
        let sse: f64 = idx.iter().map(|&i| (self.y[i] - mean).powi(2)).sum();
        let me = self.nodes.len();
        self.nodes.push(Node::Leaf(mean));
        if depth >= self.max_depth || idx.len() < self.min_split || sse <= 0.0 {
            return me;
        }
        let n_features = self.x[0].len();
        let features = rand::seq::index::sample(r, n_features, self.mtry.min(n_features));
        let mut best: Option<(f64, usize, f64)> = None;
        let mut order: Vec<(f64, f64)> = Vec::with_capacity(idx.len());
        for f in features.iter() {
            order.clear();
            order.extend(idx.iter().map(|&i| (self.x[i][f], self.y[i])));
            order.sort_by(|a, b| a.0.total_cmp(&b.0));
            let total: f64 = order.iter().map(|p| p.1).sum();
            let n = order.len() as f64;
            let mut left_sum = 0.0;
            for k in 0..order.len() - 1 {
                left_sum += order[k].1;
                if order[k].0 == order[k + 1].0 {
                    continue;
                }
                let nl = (k + 1) as f64;
                let nr = n - nl;
                let right_sum = total - left_sum;
                // Maximizing this is minimizing the children's summed squared error.
                let gain = left_sum * left_sum / nl + right_sum * right_sum / nr;
                if best.is_none_or(|b| gain > b.0) {
                    best = Some((gain, f, 0.5 * (order[k].0 + order[k + 1].0)));
                }
            }
        }
        let Some((gain, feature, threshold)) = best else {
            return me;
        };
        let parent = {
            let total: f64 = idx.iter().map(|&i| self.y[i]).sum();
            total * total / idx.len() as f64
        };
        if gain <= parent + 1e-12 * parent.abs() {
            return me;
        }
        let split = partition(idx, |i| self.x[i][feature] <= threshold);
        let (l, rgt) = idx.split_at_mut(split);
        let left = self.build(l, depth + 1, r);
        let right = self.build(rgt, depth + 1, r);
        self.nodes[me] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        me
    }
}

fn partition(idx: &mut [usize], pred: impl Fn(usize) -> bool) -> usize {
    let mut k = 0;
    for j in 0..idx.len() {
        if pred(idx[j]) {
            idx.swap(k, j);
            k += 1;
        }
    }
    k
}

/// Lag-window design: row `t` holds `y[t−1], …, y[t−w]` (most recent first).
pub fn lag_matrix(series: &[f64], window: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut x = Vec::with_capacity(series.len().saturating_sub(window));
    let mut y = Vec::with_capacity(series.len().saturating_sub(window));
    for t in window..series.len() {
        x.push((1..=window).map(|i| series[t - i]).collect());
        y.push(series[t]);
    }
    (x, y)
}

impl RandomForest {
    pub fn fit(params: &ForestParams, series: &[f64], seed: u64) -> Result<Self> {
        if params.n_trees == 0 || params.max_depth == 0 || params.lag_window == 0 {
            return Err(Error::Config(
                "random forest: trees, depth and lag window must be at least 1".into(),
            ));
        }
        if series.len() < params.lag_window + 2 {
            return Err(Error::too_short(
                "random forest training points",
                params.lag_window + 2,
                series.len(),
            ));
        }
        let (x, y) = lag_matrix(series, params.lag_window);
        let mtry = params.lag_window.div_ceil(3);
        let trees = (0..params.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut r = rng::stream(seed, t as u64);
                let mut idx: Vec<usize> = if params.bootstrap {
                    (0..y.len()).map(|_| r.random_range(0..y.len())).collect()
                } else {
                    (0..y.len()).collect()
                };
                let mut b = Builder {
                    x: &x,
                    y: &y,
                    max_depth: params.max_depth,
                    min_split: params.min_samples_split.max(2),
                    mtry,
                    nodes: Vec::new(),
                };
                b.build(&mut idx, 0, &mut r);
                Tree { nodes: b.nodes }
            })
            .collect();
        Ok(RandomForest {
            lag_window: params.lag_window,
            trees,
        })
    }

    pub fn predict(&self, context: &[f64]) -> f64 {
        let n = context.len();
        let x: Vec<f64> = (1..=self.lag_window).map(|i| context[n - i]).collect();
        self.trees.iter().map(|t| t.predict(&x)).sum::<f64>() / self.trees.len() as f64
    }
}
