use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use super::{FieldKind, GaborField, TfGrid};
use crate::error::{Error, Result};
use crate::signal::Signal;

/// Half-width of the truncated Gaussian window; `e^{−π·25}` is below 1e-34.
pub const WINDOW_CUTOFF: f64 = 5.0;

/// `e^{-2πi·θ}` with `θ` reduced modulo 1 first, so large phases keep full precision.
#[inline]
fn cis_turns(theta: f64) -> Complex64 {
    let frac = theta - theta.round();
    Complex64::from_polar(1.0, -2.0 * PI * frac)
}

/// Evaluates `dt · Σ_k a_k e^{−2πi y_j t_k}` for every frequency row of a grid.
///
/// When `1/(δ·dt)` is an integer `N` the sum is folded modulo `N` and computed with one FFT;
/// otherwise it is summed directly.
struct FrequencyKernel {
    dt: f64,
    t0: f64,
    delta: f64,
    y0: f64,
    ny: usize,
    fft: Option<Arc<dyn Fft<f64>>>,
}

impl FrequencyKernel {
    fn new(signal: &Signal, grid: &TfGrid) -> Self {
        let ratio = 1.0 / (grid.delta * signal.dt());
        let n = ratio.round();
        let fft = if n >= 1.0 && (ratio - n).abs() <= 1e-9 * ratio && n <= (1u64 << 24) as f64 {
            Some(FftPlanner::new().plan_fft_forward(n as usize))
        } else {
            None
        };
        FrequencyKernel {
            dt: signal.dt(),
            t0: signal.t0(),
            delta: grid.delta,
            y0: grid.y0,
            ny: grid.ny,
            fft,
        }
    }

    /// `values[m]` is the integrand at sample index `k_start + m`.
    fn column(&self, k_start: usize, values: &[Complex64]) -> Vec<Complex64> {
        let t = |k: usize| self.t0 + k as f64 * self.dt;
        match &self.fft {
            Some(fft) => {
                let n = fft.len();
                let mut buf = vec![Complex64::new(0.0, 0.0); n];
                for (m, &v) in values.iter().enumerate() {
                    let k = k_start + m;
                    buf[k % n] += v * cis_turns(self.y0 * t(k));
                }
                fft.process(&mut buf);
                (0..self.ny)
                    .map(|j| buf[j % n] * cis_turns(j as f64 * self.delta * self.t0) * self.dt)
                    .collect()
            }
            None => (0..self.ny)
                .map(|j| {
                    let y = self.y0 + j as f64 * self.delta;
                    let s: Complex64 = values
                        .iter()
                        .enumerate()
                        .map(|(m, &v)| v * cis_turns(y * t(k_start + m)))
                        .sum();
                    s * self.dt
                })
                .collect(),
        }
    }
}

fn check_inputs(signal: &Signal, grid: &TfGrid) -> Result<()> {
    if signal.is_empty() {
        return Err(Error::InvalidSignal("empty signal".into()));
    }
    grid.require_min_dims(4)?;
    let nyquist = 0.5 / signal.dt();
    let max_y = grid.max_abs_y();
    if max_y > nyquist * (1.0 + 1e-12) {
        return Err(Error::AboveNyquist { max_y, nyquist });
    }
    Ok(())
}

fn assemble(grid: &TfGrid, columns: Vec<Vec<Complex64>>, kind: FieldKind) -> GaborField {
    let mut values = Array2::zeros(grid.shape());
    for (i, col) in columns.into_iter().enumerate() {
        for (j, v) in col.into_iter().enumerate() {
            values[[i, j]] = v;
        }
    }
    GaborField {
        grid: *grid,
        values,
        kind,
    }
}

fn windowed_transform(signal: &Signal, grid: &TfGrid, window: fn(f64) -> f64) -> Result<GaborField> {
    check_inputs(signal, grid)?;
    let kernel = FrequencyKernel::new(signal, grid);
    let samples = signal.samples();
    let n = samples.len();
    let columns: Vec<Vec<Complex64>> = (0..grid.nx)
        .into_par_iter()
        .map(|i| {
            let x = grid.x(i);
            let lo = ((x - WINDOW_CUTOFF - signal.t0()) / signal.dt()).ceil().max(0.0);
            let hi = ((x + WINDOW_CUTOFF - signal.t0()) / signal.dt()).floor();
            if hi < 0.0 || lo > (n - 1) as f64 {
                return vec![Complex64::new(0.0, 0.0); grid.ny];
            }
            let (lo, hi) = (lo as usize, (hi as usize).min(n - 1));
            let values: Vec<Complex64> = (lo..=hi)
                .map(|k| samples[k] * window(signal.time(k) - x))
                .collect();
            kernel.column(lo, &values)
        })
        .collect();
    Ok(assemble(grid, columns, FieldKind::Gabor))
}

fn gaussian_window(t: f64) -> f64 {
    (-PI * t * t).exp()
}

fn gaussian_window_derivative(t: f64) -> f64 {
    -2.0 * PI * t * (-PI * t * t).exp()
}

/// Discrete Gabor transform `V_φf` on `grid`.
///
/// Each time column is a truncated-window sum evaluated with one FFT when the frequency
/// spacing divides the sampling rate, directly otherwise.
pub fn dgt(signal: &Signal, grid: &TfGrid) -> Result<GaborField> {
    windowed_transform(signal, grid, gaussian_window)
}

/// Transform with the window replaced by `φ′(t) = −2πt·e^{−πt²}`.
pub fn window_derivative_dgt(signal: &Signal, grid: &TfGrid) -> Result<GaborField> {
    let mut field = windowed_transform(signal, grid, gaussian_window_derivative)?;
    field.kind = FieldKind::Generic;
    Ok(field)
}

/// Ambiguity function `𝒜f(x,y) = ∫ f(t)·conj(f(t−x))·e^{−2πiyt} dt`.
///
/// Lags `x` must fall on the sample lattice of `signal`.
pub fn ambiguity(signal: &Signal, grid: &TfGrid) -> Result<GaborField> {
    check_inputs(signal, grid)?;
    let dt = signal.dt();
    let lags = (0..grid.nx)
        .map(|i| {
            let pos = grid.x(i) / dt;
            let m = pos.round();
            if (pos - m).abs() > 1e-6 {
                Err(Error::InvalidGrid(format!(
                    "lag {} is not a multiple of the sample spacing {dt}",
                    grid.x(i)
                )))
            } else {
                Ok(m as i64)
            }
        })
        .collect::<Result<Vec<i64>>>()?;
    let kernel = FrequencyKernel::new(signal, grid);
    let samples = signal.samples();
    let n = samples.len() as i64;
    let columns: Vec<Vec<Complex64>> = lags
        .par_iter()
        .map(|&m| {
            let lo = m.max(0);
            let hi = (n - 1).min(n - 1 + m);
            if lo > hi {
                return vec![Complex64::new(0.0, 0.0); grid.ny];
            }
            let values: Vec<Complex64> = (lo..=hi)
                .map(|k| samples[k as usize] * samples[(k - m) as usize].conj())
                .collect();
            kernel.column(lo as usize, &values)
        })
        .collect();
    Ok(assemble(grid, columns, FieldKind::Ambiguity))
}
