//! Measurement norms, phase-invariant distances, global variation, zero counts and the
//! two-Gaussian instability sweep.

mod experiment;
mod zeros;

use std::f64::consts::TAU;

use ndarray::Array2;
use num_complex::Complex64;

use crate::distance::distance_to_complement;
use crate::error::{Error, Result};
use crate::gabor::{gradient_field, GaborField, TfGrid};

pub use experiment::{compare_signals, experiment_csv, instability_experiment, ExperimentConfig, ExperimentRow};
pub use zeros::{count_zeros, disc_coverage, log_derivative_norm, zero_locations, LogDerivative};

/// Exponents of the measurement norm `‖F‖_p + ‖F‖_q + ‖∇F‖_p + ‖(|x|+|y|)^s F‖_q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DNormParams {
    pub p: f64,
    /// May be `f64::INFINITY`.
    pub q: f64,
    pub r: u32,
    pub s: i32,
}

impl DNormParams {
    /// Requires `p ∈ [1, 2)` and `q > 2p/(2−p)`.
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !(p.is_finite() && (1.0..2.0).contains(&p)) {
            return Err(Error::InvalidParameter(format!("p must lie in [1, 2), got {p}")));
        }
        let q_min = 2.0 * p / (2.0 - p);
        if q.is_nan() || q <= q_min {
            return Err(Error::InvalidParameter(format!("q must exceed {q_min}, got {q}")));
        }
        Ok(DNormParams { p, q, r: 1, s: 6 })
    }
}

fn inside(mask: Option<&Array2<bool>>, i: usize, j: usize) -> bool {
    mask.is_none_or(|m| m[[i, j]])
}

fn check_mask(shape: (usize, usize), mask: Option<&Array2<bool>>) -> Result<()> {
    match mask {
        Some(m) if m.dim() != shape => Err(Error::ShapeMismatch(format!(
            "mask {:?} vs field {:?}",
            m.dim(),
            shape
        ))),
        _ => Ok(()),
    }
}

/// Discrete `L^p` norm with cell measure `δ²`; `p = ∞` takes the maximum.
fn lp_norm<I: Iterator<Item = f64>>(values: I, p: f64, cell: f64) -> f64 {
    if p.is_infinite() {
        values.fold(0.0, |m, v| m.max(v.abs()))
    } else {
        (values.map(|v| v.abs().powf(p)).sum::<f64>() * cell).powf(1.0 / p)
    }
}

/// The four terms of the measurement norm, in the order `‖F‖_p, ‖F‖_q, ‖∇F‖_p, ‖(|x|+|y|)^s F‖_q`.
pub fn d_norm_terms(
    f: &Array2<f64>,
    grid: &TfGrid,
    params: &DNormParams,
    mask: Option<&Array2<bool>>,
) -> Result<[f64; 4]> {
    if f.dim() != grid.shape() {
        return Err(Error::ShapeMismatch(format!("field {:?} vs grid {:?}", f.dim(), grid.shape())));
    }
    check_mask(grid.shape(), mask)?;
    let cell = grid.cell_area();
    let grad = gradient_field(f.view(), grid.delta)?.magnitude();
    let cells = || {
        f.indexed_iter()
            .filter(|&((i, j), _)| inside(mask, i, j))
            .map(|((i, j), &v)| (i, j, v))
    };
    let weighted = cells().map(|(i, j, v)| {
        let (x, y) = grid.point(i, j);
        (x.abs() + y.abs()).powi(params.s) * v
    });
    Ok([
        lp_norm(cells().map(|c| c.2), params.p, cell),
        lp_norm(cells().map(|c| c.2), params.q, cell),
        lp_norm(cells().map(|(i, j, _)| grad[[i, j]]), params.p, cell),
        lp_norm(weighted, params.q, cell),
    ])
}

/// Measurement norm of a real field on `grid`, restricted to `mask`.
pub fn d_norm(f: &Array2<f64>, grid: &TfGrid, params: &DNormParams, mask: Option<&Array2<bool>>) -> Result<f64> {
    Ok(d_norm_terms(f, grid, params, mask)?.iter().sum())
}

/// `Σ|e^{iα}F1 − F2|^p` over the mask.
fn phase_objective(a: &[Complex64], b: &[Complex64], p: f64, alpha: f64) -> f64 {
    let rot = Complex64::from_polar(1.0, alpha);
    a.iter().zip(b).map(|(x, y)| (rot * x - y).norm().powf(p)).sum()
}

/// `inf_α ‖e^{iα}F1 − F2‖_p` and its minimizer in `[0, 2π)`.
///
/// `p = 2` is solved in closed form; other exponents scan 64 angles and refine the best one by
/// golden-section search.
pub fn phase_distance(
    f1: &GaborField,
    f2: &GaborField,
    p: f64,
    mask: Option<&Array2<bool>>,
) -> Result<(f64, f64)> {
    if f1.grid != f2.grid {
        return Err(Error::ShapeMismatch("fields live on different grids".into()));
    }
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::InvalidParameter(format!("p must lie in [1, ∞), got {p}")));
    }
    check_mask(f1.grid.shape(), mask)?;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for ((i, j), &x) in f1.values.indexed_iter() {
        if inside(mask, i, j) {
            a.push(x);
            b.push(f2.values[[i, j]]);
        }
    }
    let cell = f1.grid.cell_area();
    let alpha = if p == 2.0 {
        let inner: Complex64 = a.iter().zip(&b).map(|(x, y)| x.conj() * y).sum();
        inner.arg()
    } else {
        let samples = 64;
        let h = TAU / samples as f64;
        let best = (0..samples)
            .map(|k| (k as f64 * h, phase_objective(&a, &b, p, k as f64 * h)))
            .min_by(|u, v| u.1.total_cmp(&v.1))
            .map(|u| u.0)
            .unwrap_or(0.0);
        golden_section(|t| phase_objective(&a, &b, p, t), best - h, best + h, 1e-10)
    };
    let alpha = alpha.rem_euclid(TAU);
    let distance = (phase_objective(&a, &b, p, alpha) * cell).powf(1.0 / p);
    Ok((distance, alpha))
}

fn golden_section<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - ratio * (hi - lo);
    let mut d = lo + ratio * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > tol {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - ratio * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + ratio * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// Radius (capped at 1) of the largest lattice disc inside `mask` on which `modulus` stays at
/// or above half its maximum over the mask.
///
/// The inscribed radius of a cell set is taken as the distance from a cell center to the
/// nearest excluded cell center minus half a cell.
pub fn delta_tilde(modulus: &Array2<f64>, mask: Option<&Array2<bool>>, delta: f64) -> Result<f64> {
    check_mask(modulus.dim(), mask)?;
    let peak = modulus
        .indexed_iter()
        .filter(|&((i, j), _)| inside(mask, i, j))
        .fold(0.0f64, |m, (_, &v)| m.max(v));
    if peak <= 0.0 {
        return Err(Error::ZeroRegion);
    }
    let level = Array2::from_shape_fn(modulus.dim(), |(i, j)| inside(mask, i, j) && modulus[[i, j]] >= 0.5 * peak);
    let dist = distance_to_complement(&level);
    let cells = dist.iter().fold(0.0, |m: f64, &d| m.max(d));
    Ok(((cells - 0.5) * delta).min(1.0))
}

/// `(δ_D, δ̃_D)`: half the sup-norm over the sup of the modulus gradient, and the inscribed
/// half-maximum radius, both capped at 1.
pub fn global_variation(field: &GaborField, mask: Option<&Array2<bool>>) -> Result<(f64, f64)> {
    check_mask(field.grid.shape(), mask)?;
    let modulus = field.modulus();
    let grad = gradient_field(modulus.view(), field.grid.delta)?.magnitude();
    let mut peak = 0.0f64;
    let mut slope = 0.0f64;
    for ((i, j), &v) in modulus.indexed_iter() {
        if inside(mask, i, j) {
            peak = peak.max(v);
            slope = slope.max(grad[[i, j]]);
        }
    }
    if peak <= 0.0 {
        return Err(Error::ZeroRegion);
    }
    let delta_d = if slope > 0.0 { (0.5 * peak / slope).min(1.0) } else { 1.0 };
    Ok((delta_d, delta_tilde(&modulus, mask, field.grid.delta)?))
}
