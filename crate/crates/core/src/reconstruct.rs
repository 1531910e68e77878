//! Spectrogram inversion through the ambiguity-function factorization.
//!
//! On a centered square grid of `N×N` points with spacing `δ`, the 2-D Fourier transform of the
//! spectrogram satisfies `𝓕|V_φf|²(ξ,η) = 𝒜f(−η,ξ)·conj(𝒜φ(−η,ξ))`. Dividing out the Gaussian
//! factor and inverting along the frequency axis of `𝒜f` gives `f(t)·conj(f(t−x))`, whose
//! diagonal `x = t` is `f(t)·conj(f(0))`.

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::gabor::{ambiguity, dgt, gaussian_ambiguity_value, TfGrid};
use crate::signal::Signal;

/// Ambiguity-plane radius beyond which the Gaussian factor is below `1e−30` and is dropped.
pub const AMBIGUITY_RADIUS_CAP: f64 = 9.0;
pub const DEFAULT_TAU_REG: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regularization {
    /// Drop frequencies where `|𝒜φ| < τ·max|𝒜φ|`.
    Threshold,
    /// Multiply by `𝒜φ / (|𝒜φ|² + τ²)`.
    Tikhonov,
}

impl std::str::FromStr for Regularization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "threshold" => Ok(Regularization::Threshold),
            "tikhonov" => Ok(Regularization::Tikhonov),
            other => Err(Error::Parse(format!("unknown regularization '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionConfig {
    pub regularization: Regularization,
    pub tau_reg: f64,
    /// Grid of the spectrogram; must be a centered square with `N·δ² = 1`.
    pub grid: TfGrid,
}

impl ReconstructionConfig {
    pub fn new(regularization: Regularization, tau_reg: f64, grid: TfGrid) -> Result<Self> {
        if !(tau_reg.is_finite() && tau_reg > 0.0) {
            return Err(Error::InvalidParameter(format!("tau_reg must be positive, got {tau_reg}")));
        }
        check_square(&grid)?;
        Ok(ReconstructionConfig {
            regularization,
            tau_reg,
            grid,
        })
    }

    /// Threshold regularization with the noiseless default on [`reconstruction_grid`].
    pub fn noiseless(delta: f64) -> Result<Self> {
        ReconstructionConfig::new(Regularization::Threshold, DEFAULT_TAU_REG, reconstruction_grid(delta)?)
    }
}

/// Centered `N×N` grid with `N = 1/δ²`, whose ambiguity-plane spacing equals `δ`.
pub fn reconstruction_grid(delta: f64) -> Result<TfGrid> {
    let n = (1.0 / (delta * delta)).round();
    if !(n >= 4.0 && ((1.0 / (delta * delta)) - n).abs() < 1e-6 * n) || !(n as usize).is_multiple_of(2) {
        return Err(Error::InvalidGrid(format!("1/δ² must be an even integer, got δ = {delta}")));
    }
    TfGrid::centered(delta, n as usize, n as usize)
}

/// Centered `N×N` grid with `N = 1/(δ·dt)`, whose ambiguity-plane spacing equals `dt`.
pub fn factorization_grid(delta: f64, dt: f64) -> Result<TfGrid> {
    let ratio = 1.0 / (delta * dt);
    let n = ratio.round();
    if !(n >= 4.0 && (ratio - n).abs() < 1e-6 * n) || !(n as usize).is_multiple_of(2) {
        return Err(Error::InvalidGrid(format!("1/(δ·dt) must be an even integer, got {ratio}")));
    }
    TfGrid::centered(delta, n as usize, n as usize)
}

fn check_square(grid: &TfGrid) -> Result<()> {
    let n = grid.nx;
    let centered = TfGrid::centered(grid.delta, n, n)?;
    let tol = 1e-9 * grid.delta;
    if grid.ny != n || !n.is_multiple_of(2) || (grid.x0 - centered.x0).abs() > tol || (grid.y0 - centered.y0).abs() > tol {
        return Err(Error::InvalidGrid(format!(
            "expected a centered square grid with an even side, got {}x{} from ({}, {})",
            grid.nx, grid.ny, grid.x0, grid.y0
        )));
    }
    Ok(())
}

/// `|V_φf|²` on `grid`.
pub fn spectrogram(signal: &Signal, grid: &TfGrid) -> Result<Array2<f64>> {
    Ok(dgt(signal, grid)?.values.mapv(|z| z.norm_sqr()))
}

fn alternating(k: usize) -> f64 {
    if k.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// In-place FFT of every lane along `axis`.
fn fft_lanes(data: &mut Array2<Complex64>, axis: Axis, inverse: bool) {
    let len = data.len_of(axis);
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(len)
    } else {
        planner.plan_fft_forward(len)
    };
    let mut lanes: Vec<Vec<Complex64>> = data.lanes(axis).into_iter().map(|l| l.to_vec()).collect();
    lanes.par_iter_mut().for_each(|lane| fft.process(lane));
    for (mut dst, src) in data.lanes_mut(axis).into_iter().zip(lanes) {
        for (d, s) in dst.iter_mut().zip(src) {
            *d = s;
        }
    }
}

/// `δ²·Σ S(x_i,y_j)·e^{−2πi(x_i ξ_k + y_j η_l)}` on the centered frequency lattice of spacing
/// `1/(Nδ)`.
fn centered_dft2(s: &Array2<f64>, delta: f64) -> Array2<Complex64> {
    let mut data = Array2::from_shape_fn(s.dim(), |(i, j)| Complex64::new(s[[i, j]] * alternating(i + j), 0.0));
    fft_lanes(&mut data, Axis(0), false);
    fft_lanes(&mut data, Axis(1), false);
    let cell = delta * delta;
    data.indexed_iter_mut().for_each(|((k, l), v)| *v *= alternating(k + l) * cell);
    data
}

/// Relative `L²` mismatch between the Fourier transform of the spectrogram of `f` and the
/// ambiguity product `𝒜f·conj(𝒜φ)`, both on `grid`.
///
/// The ambiguity-plane spacing `1/(Nδ)` must be a multiple of the signal's sample spacing.
/// Returns 0 when both sides vanish.
pub fn verify_factorization(f: &Signal, grid: &TfGrid) -> Result<f64> {
    check_square(grid)?;
    let n = grid.nx;
    let s = 1.0 / (n as f64 * grid.delta);
    let lhs = centered_dft2(&spectrogram(f, grid)?, grid.delta);
    // lags x'_a = (a − N/2)s for a = 0..=N so that −η_l = x'_{N−l} is always present
    let amb_grid = TfGrid::new(s, n + 1, n, -((n / 2) as f64) * s, -((n / 2) as f64) * s)?;
    let amb = ambiguity(f, &amb_grid)?;
    let mut diff = 0.0;
    let mut norm_l = 0.0;
    let mut norm_r = 0.0;
    for ((k, l), &left) in lhs.indexed_iter() {
        let a = n - l;
        let (x, y) = amb_grid.point(a, k);
        let right = amb.values[[a, k]] * gaussian_ambiguity_value(x, y).conj();
        diff += (left - right).norm_sqr();
        norm_l += left.norm_sqr();
        norm_r += right.norm_sqr();
    }
    let scale = norm_l.max(norm_r);
    Ok(if scale == 0.0 { 0.0 } else { (diff / scale).sqrt() })
}

/// Recovers `f` up to a global phase from its spectrogram `S = |V_φf|²`.
///
/// The result is sampled at spacing `δ` on `[−Nδ/2, Nδ/2)`, normalized by `√|f(0)|²` and
/// rotated so that its largest-modulus sample is real and positive. The first sample, whose
/// diagonal entry falls outside the periodic frequency lattice, is set to zero.
pub fn reconstruct_from_spectrogram(s: &Array2<f64>, cfg: &ReconstructionConfig) -> Result<Signal> {
    let grid = cfg.grid;
    check_square(&grid)?;
    if s.dim() != grid.shape() {
        return Err(Error::ShapeMismatch(format!("spectrogram {:?} vs grid {:?}", s.dim(), grid.shape())));
    }
    if s.iter().any(|&v| !(v.is_finite() && v >= 0.0)) {
        return Err(Error::InvalidParameter("spectrogram must be finite and nonnegative".into()));
    }
    let n = grid.nx;
    let delta = grid.delta;
    if ((n as f64) * delta * delta - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidGrid(format!("reconstruction needs N·δ² = 1, got N = {n}, δ = {delta}")));
    }
    let half = (n / 2) as f64;
    let mut data = centered_dft2(s, delta);
    let peak = super::gabor::GAUSSIAN_AMBIGUITY_PEAK;
    let tau = cfg.tau_reg;
    // data[k, l] sits at ambiguity coordinates (x', y') = ((N/2 − l)δ, (k − N/2)δ)
    data.indexed_iter_mut().for_each(|((k, l), v)| {
        let x = (half - l as f64) * delta;
        let y = (k as f64 - half) * delta;
        if x.hypot(y) > AMBIGUITY_RADIUS_CAP {
            *v = Complex64::new(0.0, 0.0);
            return;
        }
        let g = gaussian_ambiguity_value(x, y);
        *v = match cfg.regularization {
            Regularization::Threshold if g.norm() < tau * peak => Complex64::new(0.0, 0.0),
            Regularization::Threshold => *v / g.conj(),
            Regularization::Tikhonov => *v * g / (g.norm_sqr() + tau * tau),
        };
    });
    // inverse transform along y' evaluated at t_m = (m − N/2)δ, on the column x' = t_m
    data.indexed_iter_mut().for_each(|((k, _), v)| *v *= alternating(k));
    fft_lanes(&mut data, Axis(0), true);
    let sign = alternating(n / 2);
    let mut g: Vec<Complex64> = (0..n)
        .map(|m| {
            if m == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                data[[m, n - m]] * (alternating(m) * sign * delta)
            }
        })
        .collect();
    let origin = g[n / 2];
    let g_max = g.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
    if origin.norm() < (1e-12 * g_max).max(noise_floor(s, cfg)) || g_max == 0.0 {
        return Err(Error::VanishingOrigin);
    }
    let scale = 1.0 / origin.norm().sqrt();
    let largest = g
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |best, (k, z)| if z.norm() > best.1 { (k, z.norm()) } else { best })
        .0;
    let gauge = Complex64::from_polar(scale, -g[largest].arg());
    g.iter_mut().for_each(|z| *z *= gauge);
    Signal::new(g, delta, -half * delta)
}

/// Rounding noise expected on `f(t)·conj(f(0))`: the largest regularized gain times machine
/// precision times `‖f‖²`, with the energy read off the spectrogram.
fn noise_floor(s: &Array2<f64>, cfg: &ReconstructionConfig) -> f64 {
    let peak = super::gabor::GAUSSIAN_AMBIGUITY_PEAK;
    let energy = s.sum() * cfg.grid.cell_area() / peak;
    let gain = match cfg.regularization {
        Regularization::Threshold => 1.0 / (cfg.tau_reg * peak),
        Regularization::Tikhonov => 0.5 / cfg.tau_reg,
    };
    100.0 * f64::EPSILON * gain * peak * energy
}

/// Additive perturbation `ν·max(S)·u` with `u` uniform in `[−1, 1]`, clipped at zero.
pub fn add_noise<R: rand::Rng>(s: &Array2<f64>, level: f64, rng: &mut R) -> Array2<f64> {
    let amp = level * s.iter().fold(0.0f64, |m, &v| m.max(v));
    s.mapv(|v| (v + amp * rng.random_range(-1.0..=1.0)).max(0.0))
}

/// Tikhonov damping suggested for a noise level `ν` (relative to `max S`).
pub fn noisy_tau(level: f64) -> f64 {
    10.0 * level / super::gabor::GAUSSIAN_AMBIGUITY_PEAK
}

#[doc(hidden)]
pub fn phase_aligned_error(a: &Signal, b: &Signal) -> f64 {
    let inner: Complex64 = a.samples().iter().zip(b.samples()).map(|(x, y)| x.conj() * y).sum();
    let rot = Complex64::from_polar(1.0, inner.arg());
    let diff: f64 = a
        .samples()
        .iter()
        .zip(b.samples())
        .map(|(x, y)| (rot * x - y).norm_sqr())
        .sum();
    let norm: f64 = b.samples().iter().map(|y| y.norm_sqr()).sum();
    (diff / norm).sqrt()
}
