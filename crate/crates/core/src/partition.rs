//! Recursive spectral bipartitioning of the time-frequency plane and the multicomponent
//! stability bound.

use std::collections::BTreeMap;

use ndarray::Array2;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gabor::{GaborField, WeightField};
use crate::graph::build_graph;
use crate::spectral::{estimate_cheeger, CheegerEstimate, CheegerSummary, SpectralOptions};
use crate::stability::delta_tilde;

pub const DEFAULT_TAU: f64 = 0.05;
pub const DEFAULT_MAX_DEPTH: usize = 6;
pub const DEFAULT_MIN_VERTICES: usize = 64;

/// Stopping rule of the recursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionOptions {
    /// Regions whose calibrated Cheeger estimate reaches `tau` are kept whole.
    pub tau: f64,
    pub max_depth: usize,
    pub min_vertices: usize,
    pub spectral: SpectralOptions,
}

impl Default for PartitionOptions {
    fn default() -> Self {
        PartitionOptions {
            tau: DEFAULT_TAU,
            max_depth: DEFAULT_MAX_DEPTH,
            min_vertices: DEFAULT_MIN_VERTICES,
            spectral: SpectralOptions::default(),
        }
    }
}

/// A leaf of the partition with its statistics.
#[derive(Debug, Clone)]
pub struct Region {
    pub mask: Array2<bool>,
    /// Absent when the estimator failed on this region.
    pub h_est: Option<CheegerEstimate>,
    /// Calibrated estimate `h*/δ`; zero when unavailable.
    pub h_cal: f64,
    pub kappa: f64,
    pub delta_tilde: f64,
    /// `Σ w·δ²` over the region.
    pub volume: f64,
    pub depth: usize,
    pub n_vertices: usize,
    /// Below `tau` but not split further (size, depth or estimator failure).
    pub indivisible: bool,
    /// The field vanishes on the region.
    pub degenerate: bool,
}

/// Node of the recursion tree.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub depth: usize,
    pub n_vertices: usize,
    pub volume: f64,
    pub h_cal: f64,
    pub cheeger: Option<CheegerSummary>,
    /// Index into the leaf list for leaves.
    pub leaf: Option<usize>,
}

/// Per-leaf contribution `(1 + 1/h)(1 + κ^p/δ̃²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeafFactor {
    pub leaf: usize,
    pub h_cal: f64,
    pub kappa: f64,
    pub delta_tilde: f64,
    pub factor: f64,
    /// Same factor with the certified lower Cheeger bound in place of `h*`.
    pub factor_worst: f64,
}

/// Maximum of the leaf factors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityBound {
    pub b: f64,
    /// Bound evaluated with the certified lower Cheeger estimates.
    pub b_worst: f64,
    pub factors: Vec<LeafFactor>,
    /// Leaves with a vanishing field, left out of the maximum.
    pub skipped: Vec<usize>,
    /// Leaves with `h = 0`, which make the bound infinite.
    pub infinite: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct PartitionReport {
    pub regions: Vec<Region>,
    pub tree: Vec<TreeNode>,
    pub bound: StabilityBound,
    pub tau: f64,
    pub p: f64,
    /// Edge weight between each pair of leaves on the root graph.
    pub inter_leaf_cuts: BTreeMap<(usize, usize), f64>,
}

/// JSON form of a [`PartitionReport`].
#[derive(Debug, Clone, Serialize)]
pub struct PartitionSummary<'a> {
    pub tau: f64,
    pub p: f64,
    pub b: f64,
    pub b_worst: f64,
    pub leaves: Vec<LeafSummary>,
    pub tree: &'a [TreeNode],
    pub factors: &'a [LeafFactor],
    pub inter_leaf_cuts: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LeafSummary {
    pub h_cal: f64,
    pub kappa: f64,
    pub delta_tilde: f64,
    pub volume: f64,
    pub depth: usize,
    pub n_vertices: usize,
    pub indivisible: bool,
    pub degenerate: bool,
}

impl PartitionReport {
    pub fn summary(&self) -> PartitionSummary<'_> {
        PartitionSummary {
            tau: self.tau,
            p: self.p,
            b: self.bound.b,
            b_worst: self.bound.b_worst,
            leaves: self
                .regions
                .iter()
                .map(|r| LeafSummary {
                    h_cal: r.h_cal,
                    kappa: r.kappa,
                    delta_tilde: r.delta_tilde,
                    volume: r.volume,
                    depth: r.depth,
                    n_vertices: r.n_vertices,
                    indivisible: r.indivisible,
                    degenerate: r.degenerate,
                })
                .collect(),
            tree: &self.tree,
            factors: &self.bound.factors,
            inter_leaf_cuts: self.inter_leaf_cuts.iter().map(|(&(a, b), &w)| (a, b, w)).collect(),
        }
    }

    /// Leaf index of every grid cell of the root mask.
    pub fn labels(&self) -> Array2<Option<usize>> {
        let shape = self.regions.first().map(|r| r.mask.dim()).unwrap_or((0, 0));
        let mut labels = Array2::from_elem(shape, None);
        for (k, r) in self.regions.iter().enumerate() {
            for (idx, &m) in r.mask.indexed_iter() {
                if m {
                    labels[idx] = Some(k);
                }
            }
        }
        labels
    }
}

/// `(κ, δ̃)` of `field` on `mask`: the `L^p`-to-`L^∞` ratio and the inscribed half-maximum
/// radius.
pub fn region_stats(field: &GaborField, mask: &Array2<bool>, p: f64) -> Result<(f64, f64)> {
    if mask.dim() != field.grid.shape() {
        return Err(Error::ShapeMismatch(format!("mask {:?} vs grid {:?}", mask.dim(), field.grid.shape())));
    }
    if !mask.iter().any(|&m| m) {
        return Err(Error::EmptyMask);
    }
    let modulus = field.modulus();
    let mut sum = 0.0;
    let mut peak = 0.0f64;
    for (idx, &m) in mask.indexed_iter() {
        if m {
            sum += modulus[idx].powf(p);
            peak = peak.max(modulus[idx]);
        }
    }
    if peak <= 0.0 {
        return Err(Error::ZeroRegion);
    }
    let kappa = (sum * field.grid.cell_area()).powf(1.0 / p) / peak;
    Ok((kappa, delta_tilde(&modulus, Some(mask), field.grid.delta)?))
}

/// `(1 + 1/h)(1 + κ^p/δ̃²)`, infinite for `h = 0`.
pub fn leaf_factor(h_cal: f64, kappa: f64, delta_tilde: f64, p: f64) -> f64 {
    if h_cal <= 0.0 {
        return f64::INFINITY;
    }
    (1.0 + 1.0 / h_cal) * (1.0 + kappa.powf(p) / (delta_tilde * delta_tilde))
}

/// Multicomponent bound `B = max_i (1 + 1/h_i)(1 + κ_i^p/δ̃_i²)` over the leaves.
pub fn stability_bound(regions: &[Region], p: f64) -> Result<StabilityBound> {
    let mut factors = Vec::new();
    let mut skipped = Vec::new();
    let mut infinite = Vec::new();
    for (k, r) in regions.iter().enumerate() {
        if r.degenerate {
            skipped.push(k);
            continue;
        }
        let h_worst = r.h_est.as_ref().map(|e| e.h_lower / e.delta).unwrap_or(0.0);
        let factor = leaf_factor(r.h_cal, r.kappa, r.delta_tilde, p);
        if factor.is_infinite() {
            infinite.push(k);
        }
        factors.push(LeafFactor {
            leaf: k,
            h_cal: r.h_cal,
            kappa: r.kappa,
            delta_tilde: r.delta_tilde,
            factor,
            factor_worst: leaf_factor(h_worst, r.kappa, r.delta_tilde, p),
        });
    }
    if factors.is_empty() {
        return Err(Error::ZeroRegion);
    }
    if !infinite.is_empty() {
        log::warn!("{} leaf region(s) with vanishing Cheeger estimate; bound is infinite", infinite.len());
    }
    let b = factors.iter().map(|f| f.factor).fold(0.0, f64::max);
    let b_worst = factors.iter().map(|f| f.factor_worst).fold(0.0, f64::max);
    Ok(StabilityBound {
        b,
        b_worst,
        factors,
        skipped,
        infinite,
    })
}

struct Recursion<'a> {
    w: &'a WeightField,
    field: &'a GaborField,
    opts: PartitionOptions,
    regions: Vec<Region>,
    tree: Vec<TreeNode>,
}

impl Recursion<'_> {
    fn visit(&mut self, mask: Array2<bool>, depth: usize, parent: Option<usize>) -> Result<()> {
        let id = self.tree.len();
        let n_vertices = mask.iter().filter(|&&m| m).count();
        let volume: f64 = mask
            .indexed_iter()
            .filter(|(_, &m)| m)
            .map(|(idx, _)| self.w.w[idx])
            .sum::<f64>()
            * self.w.grid.cell_area();
        self.tree.push(TreeNode {
            id,
            parent,
            children: Vec::new(),
            depth,
            n_vertices,
            volume,
            h_cal: 0.0,
            cheeger: None,
            leaf: None,
        });
        if let Some(p) = parent {
            self.tree[p].children.push(id);
        }

        let degenerate = volume <= 0.0;
        let estimate = if degenerate || n_vertices < 2 {
            None
        } else {
            match estimate_cheeger(self.w, Some(&mask), &self.opts.spectral) {
                Ok(e) => Some(e),
                Err(e) => {
                    log::warn!("region {id}: Cheeger estimate failed ({e}); kept as a leaf");
                    None
                }
            }
        };
        let h_cal = estimate.as_ref().map(|e| e.calibrated()).unwrap_or(0.0);
        self.tree[id].h_cal = h_cal;
        self.tree[id].cheeger = estimate.as_ref().map(|e| e.summary());

        let below = h_cal < self.opts.tau;
        let splittable = n_vertices >= self.opts.min_vertices && depth < self.opts.max_depth;
        if let (true, true, Some(est)) = (below, splittable, estimate.as_ref()) {
            let g = build_graph(self.w, Some(&mask))?;
            let mut inner = Array2::from_elem(mask.dim(), false);
            for v in est.cut.subset.members() {
                inner[g.cell(v)] = true;
            }
            let outer = Array2::from_shape_fn(mask.dim(), |idx| mask[idx] && !inner[idx]);
            let mut children = [(est.cut.vol_in, inner), (est.cut.vol_out, outer)];
            if children[1].0 > children[0].0 {
                children.swap(0, 1);
            }
            for (_, child) in children {
                self.visit(child, depth + 1, Some(id))?;
            }
            return Ok(());
        }

        let (kappa, delta_tilde) = if degenerate {
            (0.0, 0.0)
        } else {
            region_stats(self.field, &mask, self.w.p)?
        };
        self.tree[id].leaf = Some(self.regions.len());
        self.regions.push(Region {
            mask,
            h_est: estimate,
            h_cal,
            kappa,
            delta_tilde,
            volume,
            depth,
            n_vertices,
            indivisible: below,
            degenerate,
        });
        Ok(())
    }
}

/// Splits `mask` (the whole grid when `None`) along spectral cuts until every region has a
/// calibrated Cheeger estimate of at least `tau`, or is too small or too deep to split.
///
/// The recursion is depth-first with the larger-volume child first.
pub fn recursive_partition(
    w: &WeightField,
    field: &GaborField,
    mask: Option<&Array2<bool>>,
    opts: &PartitionOptions,
) -> Result<PartitionReport> {
    if w.grid != field.grid {
        return Err(Error::ShapeMismatch("weights and field live on different grids".into()));
    }
    if !(opts.tau.is_finite() && opts.tau >= 0.0) {
        return Err(Error::InvalidParameter(format!("tau must be nonnegative, got {}", opts.tau)));
    }
    if opts.max_depth == 0 {
        return Err(Error::InvalidParameter("max_depth must be at least 1".into()));
    }
    let root = match mask {
        Some(m) if m.dim() != w.grid.shape() => {
            return Err(Error::ShapeMismatch(format!("mask {:?} vs grid {:?}", m.dim(), w.grid.shape())))
        }
        Some(m) => m.clone(),
        None => Array2::from_elem(w.grid.shape(), true),
    };
    if !root.iter().any(|&m| m) {
        return Err(Error::EmptyMask);
    }
    let mut rec = Recursion {
        w,
        field,
        opts: *opts,
        regions: Vec::new(),
        tree: Vec::new(),
    };
    rec.visit(root.clone(), 0, None)?;
    let Recursion { regions, tree, .. } = rec;
    check_cover(&root, &regions)?;
    let bound = stability_bound(&regions, w.p)?;
    let mut report = PartitionReport {
        regions,
        tree,
        bound,
        tau: opts.tau,
        p: w.p,
        inter_leaf_cuts: BTreeMap::new(),
    };
    report.inter_leaf_cuts = inter_leaf_cuts(w, &root, &report)?;
    Ok(report)
}

fn check_cover(root: &Array2<bool>, regions: &[Region]) -> Result<()> {
    let mut hits = Array2::<u32>::zeros(root.dim());
    for r in regions {
        hits.zip_mut_with(&r.mask, |h, &m| *h += m as u32);
    }
    let exact = hits.iter().zip(root.iter()).all(|(&h, &m)| h == m as u32);
    if !exact {
        return Err(Error::InvalidSubset("leaf masks do not partition the root mask".into()));
    }
    Ok(())
}

fn inter_leaf_cuts(
    w: &WeightField,
    root: &Array2<bool>,
    report: &PartitionReport,
) -> Result<BTreeMap<(usize, usize), f64>> {
    let mut cuts = BTreeMap::new();
    let g = match build_graph(w, Some(root)) {
        Ok(g) => g,
        Err(Error::DegenerateGraph(_)) => return Ok(cuts),
        Err(e) => return Err(e),
    };
    let labels = report.labels();
    for (i, j, weight) in g.edges() {
        if let (Some(a), Some(b)) = (labels[g.cell(i)], labels[g.cell(j)]) {
            if a != b {
                *cuts.entry((a.min(b), a.max(b))).or_insert(0.0) += weight;
            }
        }
    }
    Ok(cuts)
}
