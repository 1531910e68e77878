//! Holomorphy diagnostics for Gabor transforms.
//!
//! `G(z) = η(z)·V_φf(x,−y)` with `η(z) = e^{π(|z|²/2 − ixy)}` is entire. Rather than resampling the
//! field on a reflected grid we work with `K(x,y) = conj(G(x,−y)) = e^{π|z|²/2}·e^{−πixy}·conj(V_φf(x,y))`,
//! which is holomorphic exactly when `G` is and lives on the original lattice.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;

use super::{complex_gradient, gradient_field, FieldKind, GaborField};
use crate::error::{Error, Result};

/// Fraction of the peak modulus below which samples are treated as numerically zero.
const SUPPORT_FLOOR: f64 = 1e-6;

/// The holomorphic representative `K` of a Gabor field.
pub fn holomorphic_factor(field: &GaborField) -> GaborField {
    let grid = field.grid;
    let values = Array2::from_shape_fn(grid.shape(), |(i, j)| {
        let (x, y) = grid.point(i, j);
        let eta = Complex64::from_polar((0.5 * PI * (x * x + y * y)).exp(), -PI * x * y);
        eta * field.values[[i, j]].conj()
    });
    GaborField {
        grid,
        values,
        kind: FieldKind::Generic,
    }
}

fn interior_support(field: &GaborField) -> impl Fn(usize, usize) -> bool + '_ {
    let (nx, ny) = field.grid.shape();
    let floor = SUPPORT_FLOOR * field.max_modulus();
    move |i, j| i > 0 && j > 0 && i + 1 < nx && j + 1 < ny && field.values[[i, j]].norm() >= floor
}

/// Maximum discrete Cauchy–Riemann defect `|∂x K + i·∂y K| / max(|K|, ε)` over interior points.
///
/// Points where `|V_φf|` is below `1e-6` of its maximum carry no usable phase and are skipped.
pub fn cr_residual(field: &GaborField) -> Result<f64> {
    if field.kind != FieldKind::Gabor {
        return Err(Error::InvalidParameter("cr_residual expects a Gabor field".into()));
    }
    field.grid.require_min_dims(3)?;
    let k = holomorphic_factor(field);
    let grad = complex_gradient(k.values.view(), field.grid.delta)?;
    let keep = interior_support(field);
    let i_unit = Complex64::new(0.0, 1.0);
    let mut worst: f64 = 0.0;
    for ((i, j), kz) in k.values.indexed_iter() {
        if !keep(i, j) {
            continue;
        }
        let defect = (grad.dx[[i, j]] + i_unit * grad.dy[[i, j]]).norm();
        worst = worst.max(defect / kz.norm().max(f64::EPSILON));
    }
    Ok(worst)
}

/// Discrepancy between `|K′|` and `|∇|K||`, which coincide for holomorphic `K`.
///
/// Evaluated away from zeros (the 3×3 stencil modulus must stay above a quarter of the
/// center value) and normalized by the largest `|K′|` seen; zero when `K′` vanishes.
pub fn magnitude_gradient_defect(field: &GaborField) -> Result<f64> {
    field.grid.require_min_dims(3)?;
    let k = holomorphic_factor(field);
    let delta = field.grid.delta;
    let deriv = complex_gradient(k.values.view(), delta)?;
    let modulus = k.modulus();
    let mod_grad = gradient_field(modulus.view(), delta)?.magnitude();
    let keep = interior_support(field);
    let (mut worst, mut scale) = (0.0f64, 0.0f64);
    for ((i, j), &m) in modulus.indexed_iter() {
        if !keep(i, j) {
            continue;
        }
        let stencil_min = (i - 1..=i + 1)
            .flat_map(|a| (j - 1..=j + 1).map(move |b| (a, b)))
            .map(|(a, b)| modulus[[a, b]])
            .fold(f64::INFINITY, f64::min);
        if stencil_min < 0.25 * m {
            continue;
        }
        let kd = deriv.dx[[i, j]].norm();
        worst = worst.max((kd - mod_grad[[i, j]]).abs());
        scale = scale.max(kd);
    }
    Ok(if scale > 0.0 { worst / scale } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gabor::{dgt, TfGrid};
    use crate::signal::{synthesize, SynthKind, SynthParams};
    use rand::{Rng, SeedableRng};

    #[test]
    fn gaussian_factor_is_constant() {
        let f = synthesize(SynthKind::Gaussian, SynthParams::default(), 512, 1.0 / 16.0).unwrap();
        let grid = TfGrid::centered(1.0 / 16.0, 65, 65).unwrap();
        let k = holomorphic_factor(&dgt(&f, &grid).unwrap());
        let c = 0.5f64.sqrt();
        assert!(k.values.iter().all(|z| (z - c).norm() < 1e-10));
        assert!(cr_residual(&dgt(&f, &grid).unwrap()).unwrap() <= 1e-2);
    }

    #[test]
    fn random_matrix_is_not_holomorphic() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let grid = TfGrid::centered(1.0 / 16.0, 16, 16).unwrap();
        let values = Array2::from_shape_fn(grid.shape(), |_| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let field = GaborField::new(grid, values, FieldKind::Gabor).unwrap();
        // defect is measured in units of 1/δ for an unstructured field
        assert!(cr_residual(&field).unwrap() * grid.delta > 0.1);
    }

    #[test]
    fn rejects_non_gabor_kind() {
        let grid = TfGrid::centered(0.25, 8, 8).unwrap();
        let field = GaborField::zeros(grid, FieldKind::Ambiguity);
        assert!(cr_residual(&field).is_err());
    }
}
