use rayon::prelude::*;
use serde::Serialize;

use super::{d_norm, phase_distance, DNormParams};
use crate::error::{Error, Result};
use crate::gabor::{dgt, weight_field, TfGrid};
use crate::signal::{synthesize, Signal, SynthKind, SynthParams};
use crate::spectral::{estimate_cheeger, SpectralOptions};

/// Sampling of the two-Gaussian sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentConfig {
    /// Signal sample spacing.
    pub dt: f64,
    /// Lattice spacing of the time-frequency grid.
    pub delta: f64,
    /// Grid margin beyond the Gaussian centers along time.
    pub margin: f64,
    /// Frequency half-extent of the grid.
    pub half_y: f64,
    pub spectral: SpectralOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dt: 1.0 / 16.0,
            delta: 1.0 / 8.0,
            margin: 4.0,
            half_y: 4.0,
            spectral: SpectralOptions::default(),
        }
    }
}

/// One separation of the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub a: f64,
    /// Calibrated Cheeger estimate of `|V_φf|^p`.
    pub h_cal: f64,
    /// Measurement norm of `|V_φf| − |V_φg|`.
    pub mismatch: f64,
    /// Phase-invariant `L^p` distance of the transforms.
    pub distance: f64,
    /// `(1 + 1/h_cal)·mismatch`.
    pub bound_rhs: f64,
    /// `distance / bound_rhs`.
    pub ratio: f64,
}

fn row(a: f64, params: &DNormParams, cfg: &ExperimentConfig) -> Result<ExperimentRow> {
    let half_t = a + 6.0;
    let n = 2 * (half_t / cfg.dt).ceil() as usize + 1;
    let sp = SynthParams { a, b: 0.0 };
    let f = synthesize(SynthKind::GaussianPairPlus, sp, n, cfg.dt)?;
    let g = synthesize(SynthKind::GaussianPairMinus, sp, n, cfg.dt)?;
    let grid = TfGrid::covering(cfg.delta, a + cfg.margin, cfg.half_y)?;
    let mut row = compare_signals(&f, &g, &grid, params, &cfg.spectral)?;
    row.a = a;
    Ok(row)
}

/// Connectivity of `|V_φf|^p`, measurement mismatch and phase-invariant distance of two
/// signals on `grid`. The row's `a` is left at zero.
pub fn compare_signals(
    f: &Signal,
    g: &Signal,
    grid: &TfGrid,
    params: &DNormParams,
    spectral: &SpectralOptions,
) -> Result<ExperimentRow> {
    let vf = dgt(f, grid)?;
    let vg = dgt(g, grid)?;
    let est = estimate_cheeger(&weight_field(&vf, params.p)?, None, spectral)?;
    let h_cal = est.calibrated();
    let diff = &vf.modulus() - &vg.modulus();
    let mismatch = d_norm(&diff, grid, params, None)?;
    let (distance, _) = phase_distance(&vf, &vg, params.p, None)?;
    let bound_rhs = if h_cal > 0.0 { (1.0 + 1.0 / h_cal) * mismatch } else { f64::INFINITY };
    Ok(ExperimentRow {
        a: 0.0,
        h_cal,
        mismatch,
        distance,
        bound_rhs,
        ratio: distance / bound_rhs,
    })
}

/// Runs `f = φ(·+a) + φ(·−a)` against `g = φ(·+a) − φ(·−a)` for each separation.
///
/// Rows come back in the order of `a_values`.
pub fn instability_experiment(
    a_values: &[f64],
    params: &DNormParams,
    cfg: &ExperimentConfig,
) -> Result<Vec<ExperimentRow>> {
    if let Some(a) = a_values.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
        return Err(Error::InvalidParameter(format!("separations must be positive, got {a}")));
    }
    a_values.par_iter().map(|&a| row(a, params, cfg)).collect()
}

/// CSV with header `a,h_cal,mismatch,distance,bound_rhs,ratio`.
pub fn experiment_csv(rows: &[ExperimentRow]) -> String {
    let mut out = String::from("a,h_cal,mismatch,distance,bound_rhs,ratio\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.a, r.h_cal, r.mismatch, r.distance, r.bound_rhs, r.ratio
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nonpositive_separation() {
        let p = DNormParams::new(1.0, f64::INFINITY).unwrap();
        assert!(instability_experiment(&[1.0, 0.0], &p, &ExperimentConfig::default()).is_err());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let rows = [ExperimentRow {
            a: 1.0,
            h_cal: 0.5,
            mismatch: 0.1,
            distance: 2.0,
            bound_rhs: 0.3,
            ratio: 6.0,
        }];
        let csv = experiment_csv(&rows);
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.starts_with("a,h_cal,mismatch,distance,bound_rhs,ratio\n1,0.5,"));
    }
}
