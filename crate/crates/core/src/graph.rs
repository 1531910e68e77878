//! Weighted 4-neighbor grid graphs over time-frequency samples, cut evaluation and an
//! exhaustive Cheeger-constant oracle for small graphs.
//!
//! Vertices are the masked grid points; two points at distance `Δ` are joined by an edge of
//! weight `½(w(z) + w(z′))`. The Cheeger ratio of a vertex set `C` is
//! `cut(C) / min(vol(C), vol(V∖C))` with `vol` the sum of degrees.

use std::io::Write;

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gabor::WeightField;

/// Degrees below this fraction of the largest degree mark a vertex as isolated.
pub const ISOLATION_FLOOR: f64 = 1e-14;

/// Largest vertex count accepted by [`brute_force_cheeger`].
pub const BRUTE_FORCE_LIMIT: usize = 22;

/// Subset of graph vertices, one flag per vertex.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VertexSet(pub Vec<bool>);

impl VertexSet {
    pub fn empty(n: usize) -> Self {
        VertexSet(vec![false; n])
    }

    pub fn from_indices(n: usize, members: &[usize]) -> Self {
        let mut v = vec![false; n];
        for &i in members {
            v[i] = true;
        }
        VertexSet(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn complement(&self) -> VertexSet {
        VertexSet(self.0.iter().map(|b| !b).collect())
    }

    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }
}

/// Cut of a vertex set with its side volumes and Cheeger ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct CutResult {
    pub subset: VertexSet,
    pub cut_weight: f64,
    pub vol_in: f64,
    pub vol_out: f64,
    /// `cut / min(vol_in, vol_out)`; infinite when one side has zero volume.
    pub ratio: f64,
}

impl CutResult {
    pub fn min_volume(&self) -> f64 {
        self.vol_in.min(self.vol_out)
    }
}

/// Undirected weighted graph in compressed adjacency form, usually built on a grid.
#[derive(Debug, Clone)]
pub struct WeightedGridGraph {
    cells: Vec<(usize, usize)>,
    coords: Vec<(f64, f64)>,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    weights: Vec<f64>,
    degrees: Vec<f64>,
    total_volume: f64,
    isolated: Vec<bool>,
    delta: f64,
    shape: (usize, usize),
    index: Option<Array2<usize>>,
}

impl WeightedGridGraph {
    fn from_adjacency(
        cells: Vec<(usize, usize)>,
        coords: Vec<(f64, f64)>,
        adjacency: Vec<Vec<(usize, f64)>>,
        delta: f64,
        shape: (usize, usize),
    ) -> Self {
        let n = adjacency.len();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut neighbors = Vec::new();
        let mut weights = Vec::new();
        offsets.push(0);
        for row in &adjacency {
            for &(j, w) in row {
                neighbors.push(j);
                weights.push(w);
            }
            offsets.push(neighbors.len());
        }
        let degrees: Vec<f64> = adjacency
            .iter()
            .map(|row| row.iter().map(|&(_, w)| w).sum())
            .collect();
        let total_volume = degrees.iter().sum();
        let max_degree = degrees.iter().cloned().fold(0.0, f64::max);
        let isolated = degrees
            .iter()
            .map(|&d| d <= 0.0 || d < ISOLATION_FLOOR * max_degree)
            .collect();
        WeightedGridGraph {
            cells,
            coords,
            offsets,
            neighbors,
            weights,
            degrees,
            total_volume,
            isolated,
            delta,
            shape,
            index: None,
        }
    }

    /// Builds a graph from an explicit undirected edge list; parallel edges are merged.
    #[doc(hidden)]
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut adjacency = vec![Vec::<(usize, f64)>::new(); n];
        for &(i, j, w) in edges {
            if i >= n || j >= n || i == j {
                return Err(Error::InvalidParameter(format!("bad edge ({i}, {j})")));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::InvalidParameter(format!("bad edge weight {w}")));
            }
            if w == 0.0 {
                continue;
            }
            for (a, b) in [(i, j), (j, i)] {
                match adjacency[a].iter_mut().find(|(k, _)| *k == b) {
                    Some(e) => e.1 += w,
                    None => adjacency[a].push((b, w)),
                }
            }
        }
        for row in adjacency.iter_mut() {
            row.sort_by_key(|&(k, _)| k);
        }
        let cells = (0..n).map(|i| (i, 0)).collect();
        let coords = (0..n).map(|i| (i as f64, 0.0)).collect();
        Ok(WeightedGridGraph::from_adjacency(cells, coords, adjacency, 1.0, (n, 1)))
    }

    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Shape of the underlying grid.
    pub fn grid_shape(&self) -> (usize, usize) {
        self.shape
    }

    pub fn cell(&self, v: usize) -> (usize, usize) {
        self.cells[v]
    }

    pub fn cells(&self) -> &[(usize, usize)] {
        &self.cells
    }

    pub fn coord(&self, v: usize) -> (f64, f64) {
        self.coords[v]
    }

    pub fn degree(&self, v: usize) -> f64 {
        self.degrees[v]
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn total_volume(&self) -> f64 {
        self.total_volume
    }

    pub fn is_isolated(&self, v: usize) -> bool {
        self.isolated[v]
    }

    pub fn isolated(&self) -> &[bool] {
        &self.isolated
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[v]..self.offsets[v + 1];
        self.neighbors[range.clone()]
            .iter()
            .copied()
            .zip(self.weights[range].iter().copied())
    }

    /// Lattice neighbors of `v` inside the graph, whether or not the joining edge has weight;
    /// falls back to weighted adjacency for graphs not built on a grid.
    pub fn lattice_neighbors(&self, v: usize) -> Vec<usize> {
        match &self.index {
            Some(index) => {
                let (i, j) = self.cells[v];
                [(i.wrapping_sub(1), j), (i, j.wrapping_sub(1)), (i, j + 1), (i + 1, j)]
                    .into_iter()
                    .filter(|&(a, b)| a < self.shape.0 && b < self.shape.1)
                    .map(|(a, b)| index[[a, b]])
                    .filter(|&u| u != usize::MAX)
                    .collect()
            }
            None => self.neighbors(v).map(|(u, _)| u).collect(),
        }
    }

    /// Each undirected edge once, as `(i, j, w)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.len()).flat_map(move |i| {
            self.neighbors(i)
                .filter(move |&(j, _)| j > i)
                .map(move |(j, w)| (i, j, w))
        })
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    /// Connected-component label per vertex over positive-weight edges between vertices
    /// with `active[v]`; inactive vertices get `usize::MAX`. Labels follow first appearance.
    pub fn components(&self, active: &[bool]) -> (Vec<usize>, usize) {
        let mut label = vec![usize::MAX; self.len()];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..self.len() {
            if !active[start] || label[start] != usize::MAX {
                continue;
            }
            label[start] = count;
            stack.push(start);
            while let Some(v) = stack.pop() {
                for (u, w) in self.neighbors(v) {
                    if w > 0.0 && active[u] && label[u] == usize::MAX {
                        label[u] = count;
                        stack.push(u);
                    }
                }
            }
            count += 1;
        }
        (label, count)
    }

    /// Writes the `i j weight` edge list.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (i, j, w) in self.edges() {
            writeln!(out, "{i} {j} {w:e}")?;
        }
        Ok(())
    }

    /// Writes the `i x y grid_i grid_j degree isolated` vertex table.
    pub fn write_vertex_table<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for v in 0..self.len() {
            let (x, y) = self.coords[v];
            let (ci, cj) = self.cells[v];
            writeln!(
                out,
                "{v} {x:e} {y:e} {ci} {cj} {:e} {}",
                self.degrees[v],
                u8::from(self.isolated[v])
            )?;
        }
        Ok(())
    }
}

/// Builds the 4-neighbor similarity graph of a weight field, restricted to `mask` if given.
pub fn build_graph(weights: &WeightField, mask: Option<&Array2<bool>>) -> Result<WeightedGridGraph> {
    let grid = weights.grid;
    let shape = grid.shape();
    if let Some(m) = mask {
        if m.dim() != shape {
            return Err(Error::ShapeMismatch(format!("mask {:?} vs grid {:?}", m.dim(), shape)));
        }
    }
    let inside = |i: usize, j: usize| mask.is_none_or(|m| m[[i, j]]);
    let mut index = Array2::from_elem(shape, usize::MAX);
    let mut cells = Vec::new();
    let mut coords = Vec::new();
    for i in 0..grid.nx {
        for j in 0..grid.ny {
            if inside(i, j) {
                index[[i, j]] = cells.len();
                cells.push((i, j));
                coords.push(grid.point(i, j));
            }
        }
    }
    if cells.is_empty() {
        return Err(Error::EmptyMask);
    }
    let w = &weights.w;
    let adjacency: Vec<Vec<(usize, f64)>> = cells
        .iter()
        .map(|&(i, j)| {
            let mut row = Vec::with_capacity(4);
            let candidates = [
                (i.wrapping_sub(1), j),
                (i, j.wrapping_sub(1)),
                (i, j + 1),
                (i + 1, j),
            ];
            for (a, b) in candidates {
                if a >= grid.nx || b >= grid.ny || index[[a, b]] == usize::MAX {
                    continue;
                }
                let weight = 0.5 * (w[[i, j]] + w[[a, b]]);
                if weight > 0.0 {
                    row.push((index[[a, b]], weight));
                }
            }
            row.sort_by_key(|&(k, _)| k);
            row
        })
        .collect();
    let mut graph = WeightedGridGraph::from_adjacency(cells, coords, adjacency, grid.delta, shape);
    graph.index = Some(index);
    if graph.total_volume <= 0.0 {
        return Err(Error::DegenerateGraph("all edge weights vanish on the mask".into()));
    }
    Ok(graph)
}

fn check_subset(g: &WeightedGridGraph, subset: &VertexSet) -> Result<()> {
    if subset.len() != g.len() {
        return Err(Error::InvalidSubset(format!(
            "subset has {} flags for {} vertices",
            subset.len(),
            g.len()
        )));
    }
    let k = subset.count();
    if k == 0 || k == g.len() {
        return Err(Error::InvalidSubset("subset must be nonempty and proper".into()));
    }
    Ok(())
}

pub(crate) fn ratio_of(cut: f64, vol_in: f64, vol_out: f64) -> f64 {
    let m = vol_in.min(vol_out);
    if m > 0.0 {
        cut / m
    } else {
        f64::INFINITY
    }
}

/// Exact Cheeger ratio of `subset`.
pub fn cheeger_ratio(g: &WeightedGridGraph, subset: &VertexSet) -> Result<CutResult> {
    check_subset(g, subset)?;
    let mut cut = 0.0;
    let mut vol_in = 0.0;
    let mut vol_out = 0.0;
    for v in 0..g.len() {
        if subset.contains(v) {
            vol_in += g.degrees[v];
            for (u, w) in g.neighbors(v) {
                if !subset.contains(u) {
                    cut += w;
                }
            }
        } else {
            vol_out += g.degrees[v];
        }
    }
    Ok(CutResult {
        subset: subset.clone(),
        cut_weight: cut,
        vol_in,
        vol_out,
        ratio: ratio_of(cut, vol_in, vol_out),
    })
}

/// Exhaustive minimum of the Cheeger ratio over all nonempty proper subsets.
///
/// Ties resolve to the lexicographically smallest membership vector (vertex 0 first), which
/// always excludes vertex 0, so only those subsets are enumerated.
pub fn brute_force_cheeger(g: &WeightedGridGraph) -> Result<CutResult> {
    let n = g.len();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooManyVertices(n));
    }
    if n < 2 {
        return Err(Error::InvalidSubset("graph needs at least two vertices".into()));
    }
    let edges: Vec<(usize, usize, f64)> = g.edges().collect();
    let degrees = &g.degrees;
    let total = g.total_volume;
    // key bit (n-1-i) set <=> vertex i in C, so numeric key order is lexicographic order
    let member = |key: u64, i: usize| (key >> (n - 1 - i)) & 1 == 1;
    let evaluate = |key: u64| {
        let mut vol_in = 0.0;
        for (i, d) in degrees.iter().enumerate() {
            if member(key, i) {
                vol_in += d;
            }
        }
        let mut cut = 0.0;
        for &(i, j, w) in &edges {
            if member(key, i) != member(key, j) {
                cut += w;
            }
        }
        ratio_of(cut, vol_in, total - vol_in)
    };
    let upper: u64 = 1 << (n - 1);
    let chunk: u64 = 1 << 12;
    let best = (0..upper.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let lo = (c * chunk).max(1);
            let hi = ((c + 1) * chunk).min(upper);
            let mut best = (f64::INFINITY, u64::MAX);
            for key in lo..hi {
                let r = evaluate(key);
                if r < best.0 {
                    best = (r, key);
                }
            }
            best
        })
        .reduce(
            || (f64::INFINITY, u64::MAX),
            |a, b| match a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)) {
                std::cmp::Ordering::Greater => b,
                _ => a,
            },
        );
    let key = if best.1 == u64::MAX { 1 } else { best.1 };
    let subset = VertexSet((0..n).map(|i| member(key, i)).collect());
    cheeger_ratio(g, &subset)
}
