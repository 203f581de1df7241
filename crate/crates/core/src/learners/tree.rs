//! Gradient boosted regression trees, fit stage-wise on residuals with a
//! squared-error objective.

use serde::{Deserialize, Serialize};

use super::LearnError;

/// Node of a binary regression tree stored in a flat arena.
#[derive(Debug, Clone, Serialize, Deserialize)]
enum Node {
    Leaf { value: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, left, right } => {
                    at = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }
}

const MIN_LEAF: usize = 1;

/// Greedy exact-split tree construction on the provided sample subset.
fn build_tree(
    inputs: &[Vec<f64>],
    residuals: &[f64],
    indices: &mut [usize],
    max_depth: usize,
) -> Tree {
    let mut nodes = Vec::new();
    build_node(inputs, residuals, indices, max_depth, &mut nodes);
    Tree { nodes }
}

fn mean(residuals: &[f64], indices: &[usize]) -> f64 {
    indices.iter().map(|&i| residuals[i]).sum::<f64>() / indices.len() as f64
}

fn build_node(
    inputs: &[Vec<f64>],
    residuals: &[f64],
    indices: &mut [usize],
    depth: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let id = nodes.len();
    if depth == 0 || indices.len() < 2 * MIN_LEAF || indices.len() < 2 {
        nodes.push(Node::Leaf { value: mean(residuals, indices) });
        return id;
    }
    let Some((feature, threshold)) = best_split(inputs, residuals, indices) else {
        nodes.push(Node::Leaf { value: mean(residuals, indices) });
        return id;
    };
    nodes.push(Node::Leaf { value: 0.0 }); // placeholder, patched below
    let split_at = partition(inputs, indices, feature, threshold);
    let (left_idx, right_idx) = indices.split_at_mut(split_at);
    let left = build_node(inputs, residuals, left_idx, depth - 1, nodes);
    let right = build_node(inputs, residuals, right_idx, depth - 1, nodes);
    nodes[id] = Node::Split { feature, threshold, left, right };
    id
}

/// Stable partition of `indices` into (<= threshold, > threshold); returns
/// the boundary.
fn partition(inputs: &[Vec<f64>], indices: &mut [usize], feature: usize, threshold: f64) -> usize {
    let mut ordered: Vec<usize> = indices.to_vec();
    ordered.sort_by(|&a, &b| {
        let (va, vb) = (inputs[a][feature], inputs[b][feature]);
        va.total_cmp(&vb).then(a.cmp(&b))
    });
    let boundary = ordered.iter().position(|&i| inputs[i][feature] > threshold);
    indices.copy_from_slice(&ordered);
    boundary.unwrap_or(indices.len())
}

/// Exhaustive best split by sum-of-squares reduction; `None` when no split
/// separates the samples.
fn best_split(inputs: &[Vec<f64>], residuals: &[f64], indices: &[usize]) -> Option<(usize, f64)> {
    let n = indices.len();
    let total_sum: f64 = indices.iter().map(|&i| residuals[i]).sum();
    let dim = inputs[0].len();
    let mut best: Option<(f64, usize, f64)> = None; // (score, feature, threshold)
    let mut order: Vec<usize> = indices.to_vec();
    for feature in 0..dim {
        order.copy_from_slice(indices);
        order.sort_by(|&a, &b| inputs[a][feature].total_cmp(&inputs[b][feature]));
        let mut left_sum = 0.0;
        for (pos, &i) in order.iter().enumerate().take(n - 1) {
            left_sum += residuals[i];
            let v = inputs[i][feature];
            let v_next = inputs[order[pos + 1]][feature];
            if v == v_next {
                continue;
            }
            let left_n = (pos + 1) as f64;
            let right_n = (n - pos - 1) as f64;
            if (pos + 1) < MIN_LEAF || (n - pos - 1) < MIN_LEAF {
                continue;
            }
            let right_sum = total_sum - left_sum;
            // SSE reduction is equivalent to maximizing this score.
            let score = left_sum * left_sum / left_n + right_sum * right_sum / right_n;
            let threshold = 0.5 * (v + v_next);
            if best.map_or(true, |(s, _, _)| score > s) {
                best = Some((score, feature, threshold));
            }
        }
    }
    best.map(|(_, f, t)| (f, t))
}

/// Gradient boosted trees: a constant base prediction plus shrunken
/// residual-fit trees.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GbtRegressor {
    base: f64,
    shrinkage: f64,
    trees: Vec<Tree>,
    dim: usize,
}

impl GbtRegressor {
    pub fn fit(
        n_trees: usize,
        max_depth: usize,
        shrinkage: f64,
        inputs: &[Vec<f64>],
        targets: &[f64],
    ) -> Result<Self, LearnError> {
        if n_trees == 0 {
            return Err(LearnError::BadConfig("boosted trees require n_trees > 0".into()));
        }
        if !(shrinkage > 0.0 && shrinkage <= 1.0) {
            return Err(LearnError::BadConfig(format!("shrinkage {shrinkage} not in (0, 1]")));
        }
        let n = inputs.len();
        let base = targets.iter().sum::<f64>() / n as f64;
        let mut predictions = vec![base; n];
        let mut trees = Vec::with_capacity(n_trees);
        let mut indices: Vec<usize> = (0..n).collect();
        let mut residuals = vec![0.0; n];
        for _ in 0..n_trees {
            for i in 0..n {
                residuals[i] = targets[i] - predictions[i];
            }
            indices.clear();
            indices.extend(0..n);
            let tree = build_tree(inputs, &residuals, &mut indices, max_depth);
            for (i, p) in predictions.iter_mut().enumerate() {
                *p += shrinkage * tree.predict(&inputs[i]);
            }
            trees.push(tree);
        }
        Ok(Self { base, shrinkage, trees, dim: inputs[0].len() })
    }

    pub fn predict(&self, input: &[f64]) -> Result<f64, LearnError> {
        if input.len() != self.dim {
            return Err(LearnError::DimensionMismatch { got: input.len(), expected: self.dim });
        }
        let boost: f64 = self.trees.iter().map(|t| t.predict(input)).sum();
        Ok(self.base + self.shrinkage * boost)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_tree_fits_step_function() {
        let inputs: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let targets: Vec<f64> = (0..10).map(|i| if i < 5 { 0.0 } else { 1.0 }).collect();
        let m = GbtRegressor::fit(1, 1, 1.0, &inputs, &targets).unwrap();
        assert!((m.predict(&[2.0]).unwrap()).abs() < 1e-12);
        assert!((m.predict(&[8.0]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deeper_boosting_reduces_error() {
        let inputs: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64 / 99.0]).collect();
        let targets: Vec<f64> = inputs.iter().map(|r| (6.0 * r[0]).sin()).collect();
        let shallow = GbtRegressor::fit(5, 2, 0.1, &inputs, &targets).unwrap();
        let deep = GbtRegressor::fit(100, 3, 0.1, &inputs, &targets).unwrap();
        let err = |m: &GbtRegressor| -> f64 {
            inputs
                .iter()
                .zip(&targets)
                .map(|(x, t)| (m.predict(x).unwrap() - t).abs())
                .sum::<f64>()
        };
        assert!(err(&deep) < err(&shallow));
    }
}
