use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::WeightedGridGraph;

/// Vectors shorter than this are multiplied sequentially.
const PARALLEL_THRESHOLD: usize = 4096;

/// Matrix-free normalized Laplacian `L = I − D^{−1/2} W D^{−1/2}` restricted to the
/// non-isolated vertices of a graph.
///
/// Degrees are recomputed on the restricted vertex set so that `D^{1/2}·1` is an exact null
/// vector of the operator.
#[derive(Debug, Clone)]
pub struct NormalizedLaplacian {
    active: Vec<usize>,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    scaled: Vec<f64>,
    degrees: Vec<f64>,
    sqrt_degrees: Vec<f64>,
}

impl NormalizedLaplacian {
    /// Dimension of the operator (number of non-isolated vertices).
    pub fn dim(&self) -> usize {
        self.active.len()
    }

    /// Graph vertex id of each operator coordinate.
    pub fn active(&self) -> &[usize] {
        &self.active
    }

    /// Degrees on the restricted vertex set.
    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    /// Unit-norm `D^{1/2}·1`.
    pub fn null_vector(&self) -> Vec<f64> {
        let norm = self.sqrt_degrees.iter().map(|s| s * s).sum::<f64>().sqrt();
        self.sqrt_degrees.iter().map(|s| s / norm).collect()
    }

    fn row(&self, i: usize, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for k in self.offsets[i]..self.offsets[i + 1] {
            acc += self.scaled[k] * x[self.neighbors[k]];
        }
        x[i] - acc
    }

    /// `y = L·x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim());
        if self.dim() < PARALLEL_THRESHOLD {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = self.row(i, x);
            }
        } else {
            y.par_iter_mut().enumerate().for_each(|(i, yi)| *yi = self.row(i, x));
        }
    }

    /// Dense copy, for small graphs and diagnostics.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut m = vec![vec![0.0; n]; n];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1.0;
            for k in self.offsets[i]..self.offsets[i + 1] {
                row[self.neighbors[k]] -= self.scaled[k];
            }
        }
        m
    }
}

/// Builds the normalized Laplacian on the non-isolated vertices of `g`.
pub fn normalized_laplacian(g: &WeightedGridGraph) -> Result<NormalizedLaplacian> {
    let active: Vec<usize> = (0..g.len()).filter(|&v| !g.is_isolated(v)).collect();
    if active.is_empty() {
        return Err(Error::DegenerateGraph("no vertex with positive degree".into()));
    }
    let mut local = vec![usize::MAX; g.len()];
    for (k, &v) in active.iter().enumerate() {
        local[v] = k;
    }
    let mut offsets = vec![0];
    let mut neighbors = Vec::new();
    let mut weights = Vec::new();
    let mut degrees = Vec::with_capacity(active.len());
    for &v in &active {
        let mut d = 0.0;
        for (u, w) in g.neighbors(v) {
            if local[u] != usize::MAX {
                neighbors.push(local[u]);
                weights.push(w);
                d += w;
            }
        }
        offsets.push(neighbors.len());
        degrees.push(d);
    }
    if let Some(k) = degrees.iter().position(|&d| d <= 0.0) {
        return Err(Error::DegenerateGraph(format!(
            "vertex {} has zero degree among non-isolated vertices",
            active[k]
        )));
    }
    let sqrt_degrees: Vec<f64> = degrees.iter().map(|d| d.sqrt()).collect();
    let mut scaled = vec![0.0; weights.len()];
    for i in 0..active.len() {
        for k in offsets[i]..offsets[i + 1] {
            scaled[k] = weights[k] / (sqrt_degrees[i] * sqrt_degrees[neighbors[k]]);
        }
    }
    Ok(NormalizedLaplacian {
        active,
        offsets,
        neighbors,
        scaled,
        degrees,
        sqrt_degrees,
    })
}
