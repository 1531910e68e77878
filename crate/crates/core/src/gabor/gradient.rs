use std::ops::{Mul, Sub};

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Partial derivatives of a sampled function along `x` (axis 0) and `y` (axis 1).
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient<T = f64> {
    pub dx: Array2<T>,
    pub dy: Array2<T>,
}

impl Gradient<f64> {
    /// Pointwise Euclidean norm `√(∂x² + ∂y²)`.
    pub fn magnitude(&self) -> Array2<f64> {
        ndarray::Zip::from(&self.dx)
            .and(&self.dy)
            .map_collect(|&a, &b| a.hypot(b))
    }
}

fn differences<T>(a: ArrayView2<T>, delta: f64) -> Result<Gradient<T>>
where
    T: Copy + Default + Sub<Output = T> + Mul<f64, Output = T>,
{
    let (nx, ny) = a.dim();
    if nx < 3 || ny < 3 {
        return Err(Error::InvalidGrid(format!("gradient needs at least 3x3 samples, got {nx}x{ny}")));
    }
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidGrid(format!("spacing must be positive, got {delta}")));
    }
    let central = 0.5 / delta;
    let one_sided = 1.0 / delta;
    let dx = Array2::from_shape_fn((nx, ny), |(i, j)| {
        if i == 0 {
            (a[[1, j]] - a[[0, j]]) * one_sided
        } else if i == nx - 1 {
            (a[[nx - 1, j]] - a[[nx - 2, j]]) * one_sided
        } else {
            (a[[i + 1, j]] - a[[i - 1, j]]) * central
        }
    });
    let dy = Array2::from_shape_fn((nx, ny), |(i, j)| {
        if j == 0 {
            (a[[i, 1]] - a[[i, 0]]) * one_sided
        } else if j == ny - 1 {
            (a[[i, ny - 1]] - a[[i, ny - 2]]) * one_sided
        } else {
            (a[[i, j + 1]] - a[[i, j - 1]]) * central
        }
    });
    Ok(Gradient { dx, dy })
}

/// Central differences in the interior, first-order one-sided differences on the boundary.
pub fn gradient_field(a: ArrayView2<f64>, delta: f64) -> Result<Gradient<f64>> {
    differences(a, delta)
}

/// Same stencil as [`gradient_field`] applied to a complex array.
pub fn complex_gradient(a: ArrayView2<Complex64>, delta: f64) -> Result<Gradient<Complex64>> {
    differences(a, delta)
}

/// `|∇|F||` from the complex gradient, `|Re(conj(F)·∇F)| / |F|`; zero where `F` vanishes.
///
/// Unlike differencing `|F|` directly, this stays second-order accurate next to zeros of a
/// smooth `F`, where `|F|` has a cusp.
pub fn modulus_gradient(a: ArrayView2<Complex64>, delta: f64) -> Result<Array2<f64>> {
    let g = complex_gradient(a, delta)?;
    Ok(Array2::from_shape_fn(a.dim(), |(i, j)| {
        let z = a[[i, j]];
        let m = z.norm();
        if m == 0.0 {
            return 0.0;
        }
        let gx = (z.conj() * g.dx[[i, j]]).re / m;
        let gy = (z.conj() * g.dy[[i, j]]).re / m;
        gx.hypot(gy)
    }))
}
