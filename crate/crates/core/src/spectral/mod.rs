//! Spectral estimation of the Cheeger constant: normalized Laplacian, Fiedler vector and
//! threshold-sweep cuts.

mod laplacian;
mod lanczos;

use std::collections::VecDeque;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gabor::WeightField;
use crate::graph::{build_graph, cheeger_ratio, ratio_of, CutResult, VertexSet, WeightedGridGraph};

pub use laplacian::{normalized_laplacian, NormalizedLaplacian};
pub use lanczos::{fiedler_vector, fiedler_vector_seeded, FiedlerPair, DEFAULT_SEED, DEFAULT_TOLERANCE};

/// Relative slack under which two sweep ratios count as tied.
const TIE_TOLERANCE: f64 = 1e-12;

/// Solver settings for [`estimate_cheeger`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralOptions {
    pub tol: f64,
    /// Operator applications allowed; `None` means ten per vertex.
    pub max_iter: Option<usize>,
    pub seed: u64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions {
            tol: DEFAULT_TOLERANCE,
            max_iter: None,
            seed: DEFAULT_SEED,
        }
    }
}

/// Spectral upper estimate `h*` of the Cheeger constant with its certified bracket.
#[derive(Debug, Clone, PartialEq)]
pub struct CheegerEstimate {
    /// Ratio of the best threshold cut.
    pub h_star: f64,
    /// `(h*/2)²`, a lower bound for the true constant.
    pub h_lower: f64,
    pub cut: CutResult,
    /// Second-smallest Laplacian eigenvalue (zero for disconnected graphs).
    pub eigen_value: f64,
    pub iterations: usize,
    pub n_vertices: usize,
    /// Lattice spacing of the underlying grid.
    pub delta: f64,
}

impl CheegerEstimate {
    fn new(cut: CutResult, eigen_value: f64, iterations: usize, g: &WeightedGridGraph) -> Self {
        let h_star = cut.ratio;
        CheegerEstimate {
            h_star,
            h_lower: (h_star / 2.0).powi(2),
            cut,
            eigen_value,
            iterations,
            n_vertices: g.len(),
            delta: g.delta(),
        }
    }

    /// `[h_lower, h_star]`.
    pub fn certified_interval(&self) -> (f64, f64) {
        (self.h_lower, self.h_star)
    }

    /// `h*/δ`: the lattice ratio converted to continuum units.
    pub fn calibrated(&self) -> f64 {
        self.h_star / self.delta
    }

    pub fn summary(&self) -> CheegerSummary {
        CheegerSummary {
            h_star: self.h_star,
            h_lower: self.h_lower,
            lambda2: self.eigen_value,
            cut_size: self.cut.subset.count(),
            vol_in: self.cut.vol_in,
            vol_out: self.cut.vol_out,
            n_vertices: self.n_vertices,
            iterations: self.iterations,
        }
    }
}

/// JSON form of a [`CheegerEstimate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheegerSummary {
    pub h_star: f64,
    pub h_lower: f64,
    pub lambda2: f64,
    pub cut_size: usize,
    pub vol_in: f64,
    pub vol_out: f64,
    pub n_vertices: usize,
    pub iterations: usize,
}

struct Candidate {
    ratio: f64,
    min_volume: f64,
    threshold: f64,
    members: Vec<bool>,
}

impl Candidate {
    fn beats(&self, other: &Candidate) -> bool {
        let slack = TIE_TOLERANCE * self.ratio.abs().max(other.ratio.abs());
        if (self.ratio - other.ratio).abs() > slack {
            return self.ratio < other.ratio;
        }
        if self.min_volume != other.min_volume {
            return self.min_volume < other.min_volume;
        }
        self.threshold < other.threshold
    }
}

/// Active-subgraph adjacency with local indices.
struct ActiveGraph {
    active: Vec<usize>,
    adjacency: Vec<Vec<(usize, f64)>>,
    degrees: Vec<f64>,
}

impl ActiveGraph {
    fn new(g: &WeightedGridGraph) -> Self {
        let active: Vec<usize> = (0..g.len()).filter(|&v| !g.is_isolated(v)).collect();
        let mut local = vec![usize::MAX; g.len()];
        for (k, &v) in active.iter().enumerate() {
            local[v] = k;
        }
        let adjacency: Vec<Vec<(usize, f64)>> = active
            .iter()
            .map(|&v| {
                g.neighbors(v)
                    .filter(|&(u, _)| local[u] != usize::MAX)
                    .map(|(u, w)| (local[u], w))
                    .collect()
            })
            .collect();
        let degrees = adjacency.iter().map(|row| row.iter().map(|&(_, w)| w).sum()).collect();
        ActiveGraph { active, adjacency, degrees }
    }

    /// Cut weight and volume of every prefix of `order`, accumulated incrementally.
    fn prefix_cuts(&self, order: &[usize]) -> Vec<(f64, f64)> {
        let mut inside = vec![false; order.len()];
        let mut cut = 0.0;
        let mut vol = 0.0;
        let mut out = Vec::with_capacity(order.len());
        for &v in order {
            inside[v] = true;
            vol += self.degrees[v];
            for &(u, w) in &self.adjacency[v] {
                if inside[u] {
                    cut -= w;
                } else {
                    cut += w;
                }
            }
            out.push((cut.max(0.0), vol));
        }
        out
    }

    /// Best sweep cut of the ordering induced by `values` (descending).
    ///
    /// Prefix sums are run from both ends and each cut is read from the side with the smaller
    /// volume, so rounding stays relative to the smaller side.
    fn sweep(&self, values: &[f64]) -> Option<Candidate> {
        let n = values.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
        let forward = self.prefix_cuts(&order);
        let reversed: Vec<usize> = order.iter().rev().cloned().collect();
        let backward = self.prefix_cuts(&reversed);
        let mut best: Option<(f64, f64, f64, usize)> = None;
        for k in 0..n - 1 {
            let (hi, lo) = (values[order[k]], values[order[k + 1]]);
            if hi <= lo {
                continue;
            }
            let (cut_in, vol_in) = forward[k];
            let (cut_out, vol_out) = backward[n - 2 - k];
            let cut = if vol_in <= vol_out { cut_in } else { cut_out };
            let ratio = ratio_of(cut, vol_in, vol_out);
            let cand = (ratio, vol_in.min(vol_out), 0.5 * (hi + lo), k + 1);
            let better = match best {
                None => true,
                Some(b) => {
                    let slack = TIE_TOLERANCE * cand.0.abs().max(b.0.abs());
                    if (cand.0 - b.0).abs() > slack {
                        cand.0 < b.0
                    } else {
                        // thresholds decrease along the sweep, so a tie in volume goes to the later one
                        cand.1 <= b.1
                    }
                }
            };
            if better {
                best = Some(cand);
            }
        }
        let (ratio, min_volume, threshold, size) = best?;
        let mut members = vec![false; n];
        for &v in &order[..size] {
            members[v] = true;
        }
        Some(Candidate {
            ratio,
            min_volume,
            threshold,
            members,
        })
    }
}

/// Extends a membership on the active vertices to the whole graph: isolated vertices join the
/// side of the nearest active vertex in lattice distance, and unreachable ones stay outside.
fn reattach(g: &WeightedGridGraph, active: &[usize], members: &[bool]) -> VertexSet {
    let mut label: Vec<Option<bool>> = vec![None; g.len()];
    let mut queue = VecDeque::new();
    for (&v, &m) in active.iter().zip(members) {
        label[v] = Some(m);
        queue.push_back(v);
    }
    while let Some(v) = queue.pop_front() {
        for u in g.lattice_neighbors(v) {
            if label[u].is_none() {
                label[u] = label[v];
                queue.push_back(u);
            }
        }
    }
    VertexSet(label.into_iter().map(|l| l.unwrap_or(false)).collect())
}

/// Best threshold cut of `v`, which holds one entry per non-isolated vertex.
///
/// Both `v` and `D^{−1/2}v` are swept; every midpoint between distinct sorted entries is a
/// candidate. Ties go to the smaller min-volume side, then to the lower threshold.
pub fn threshold_cut(g: &WeightedGridGraph, v: &[f64]) -> Result<CheegerEstimate> {
    let sub = ActiveGraph::new(g);
    if v.len() != sub.active.len() {
        return Err(Error::ShapeMismatch(format!(
            "vector has {} entries for {} non-isolated vertices",
            v.len(),
            sub.active.len()
        )));
    }
    let cut = best_threshold_cut(g, &sub, v)?;
    Ok(CheegerEstimate::new(cut, f64::NAN, 0, g))
}

fn best_threshold_cut(g: &WeightedGridGraph, sub: &ActiveGraph, v: &[f64]) -> Result<CutResult> {
    let rescaled: Vec<f64> = v
        .iter()
        .zip(&sub.degrees)
        .map(|(x, d)| if *d > 0.0 { x / d.sqrt() } else { *x })
        .collect();
    let mut best: Option<Candidate> = None;
    for values in [v, rescaled.as_slice()] {
        if let Some(c) = sub.sweep(values) {
            if best.as_ref().is_none_or(|b| c.beats(b)) {
                best = Some(c);
            }
        }
    }
    let best = best.ok_or_else(|| Error::NoCut("constant vector induces no cut".into()))?;
    let subset = reattach(g, &sub.active, &best.members);
    cheeger_ratio(g, &subset)
}

/// Spectral Cheeger estimate of the weighted grid graph of `w` on `mask`.
///
/// Weights are normalized by their maximum first. A disconnected active subgraph short-cuts
/// to the smallest-volume component as the cut.
pub fn estimate_cheeger(
    w: &WeightField,
    mask: Option<&Array2<bool>>,
    opts: &SpectralOptions,
) -> Result<CheegerEstimate> {
    if w.degenerate {
        return Err(Error::ZeroRegion);
    }
    let peak = w.w.iter().cloned().fold(0.0, f64::max);
    let g = build_graph(&w.scaled(1.0 / peak), mask)?;
    estimate_graph(&g, opts)
}

/// Spectral Cheeger estimate of an already built graph.
pub fn estimate_graph(g: &WeightedGridGraph, opts: &SpectralOptions) -> Result<CheegerEstimate> {
    if g.len() < 2 {
        return Err(Error::DegenerateGraph("graph needs at least two vertices".into()));
    }
    let active_flags: Vec<bool> = (0..g.len()).map(|v| !g.is_isolated(v)).collect();
    let (labels, count) = g.components(&active_flags);
    let sub = ActiveGraph::new(g);
    if count > 1 {
        let mut volumes = vec![0.0; count];
        for &v in &sub.active {
            volumes[labels[v]] += g.degree(v);
        }
        let smallest = (0..count)
            .min_by(|&a, &b| volumes[a].total_cmp(&volumes[b]).then(a.cmp(&b)))
            .unwrap_or(0);
        let members: Vec<bool> = sub.active.iter().map(|&v| labels[v] == smallest).collect();
        let cut = cheeger_ratio(g, &reattach(g, &sub.active, &members))?;
        return Ok(CheegerEstimate::new(cut, 0.0, 0, g));
    }
    let op = normalized_laplacian(g)?;
    let max_iter = opts.max_iter.unwrap_or(10 * op.dim()).max(1);
    let pair = fiedler_vector_seeded(&op, opts.tol, max_iter, opts.seed)?;
    let cut = best_threshold_cut(g, &sub, &pair.vector)?;
    Ok(CheegerEstimate::new(cut, pair.value, pair.iterations, g))
}
