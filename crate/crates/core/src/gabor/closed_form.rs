use std::f64::consts::{FRAC_1_SQRT_2, PI};

use ndarray::Array2;
use num_complex::Complex64;

use super::{FieldKind, GaborField, TfGrid};

/// `𝒜φ(0,0) = ∫ e^{−2πt²} dt = 2^{−1/2}`.
pub const GAUSSIAN_AMBIGUITY_PEAK: f64 = FRAC_1_SQRT_2;

/// `𝒜φ(x,y) = 2^{−1/2}·e^{−πixy}·e^{−π/2(x²+y²)}`; also equal to `V_φφ(x,y)`.
pub fn gaussian_ambiguity_value(x: f64, y: f64) -> Complex64 {
    Complex64::from_polar(
        GAUSSIAN_AMBIGUITY_PEAK * (-0.5 * PI * (x * x + y * y)).exp(),
        -PI * x * y,
    )
}

pub fn gaussian_ambiguity_closed_form(grid: &TfGrid) -> GaborField {
    let values = Array2::from_shape_fn(grid.shape(), |(i, j)| {
        let (x, y) = grid.point(i, j);
        gaussian_ambiguity_value(x, y)
    });
    GaborField {
        grid: *grid,
        values,
        kind: FieldKind::Ambiguity,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peak_and_symmetry() {
        assert_eq!(gaussian_ambiguity_value(0.0, 0.0).re, 0.5f64.sqrt());
        let a = gaussian_ambiguity_value(0.7, -1.2);
        let b = gaussian_ambiguity_value(-0.7, 1.2);
        assert!((a.norm() - b.norm()).abs() < 1e-16);
        let want = FRAC_1_SQRT_2 * (-PI).exp();
        assert!((gaussian_ambiguity_value(1.0, 1.0).norm() - want).abs() < 1e-16);
    }
}
