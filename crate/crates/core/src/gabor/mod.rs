//! Discrete Gabor transform and its companions on a rectangular time-frequency lattice.
//!
//! The transform follows `V_φf(x,y) = ∫ f(t) φ(t−x) e^{−2πiyt} dt` with the Gaussian window
//! `φ(t) = e^{−πt²}`. Fields are stored unreflected as `nx × ny` arrays indexed `[i, j]`, where
//! `i` runs along time `x` and `j` along frequency `y`.

mod closed_form;
mod grid;
mod gradient;
mod holomorphy;
mod transform;

pub use closed_form::{gaussian_ambiguity_closed_form, gaussian_ambiguity_value, GAUSSIAN_AMBIGUITY_PEAK};
pub use grid::TfGrid;
pub use gradient::{complex_gradient, gradient_field, modulus_gradient, Gradient};
pub use holomorphy::{cr_residual, holomorphic_factor, magnitude_gradient_defect};
pub use transform::{ambiguity, dgt, window_derivative_dgt, WINDOW_CUTOFF};

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldKind {
    Gabor,
    Ambiguity,
    Generic,
}

/// Complex samples of a time-frequency function on a [`TfGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GaborField {
    pub grid: TfGrid,
    pub values: Array2<Complex64>,
    pub kind: FieldKind,
}

impl GaborField {
    pub fn new(grid: TfGrid, values: Array2<Complex64>, kind: FieldKind) -> Result<Self> {
        if values.dim() != grid.shape() {
            return Err(Error::ShapeMismatch(format!(
                "values {:?} do not match grid {:?}",
                values.dim(),
                grid.shape()
            )));
        }
        if values.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidParameter("field has non-finite values".into()));
        }
        Ok(GaborField { grid, values, kind })
    }

    pub fn zeros(grid: TfGrid, kind: FieldKind) -> Self {
        GaborField {
            values: Array2::zeros(grid.shape()),
            grid,
            kind,
        }
    }

    pub fn modulus(&self) -> Array2<f64> {
        self.values.mapv(|z| z.norm())
    }

    pub fn max_modulus(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Σ|F|²·δ².
    pub fn l2_norm_sqr(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_area()
    }

    pub fn rotated(&self, alpha: f64) -> GaborField {
        let u = Complex64::from_polar(1.0, alpha);
        GaborField {
            grid: self.grid,
            values: self.values.mapv(|z| z * u),
            kind: self.kind,
        }
    }

    /// Relabels coordinates so that the grid point with largest modulus sits at the origin.
    ///
    /// Returns the recentered field and the `(x, y)` location of the maximum in the
    /// original coordinates. Moduli are covariant under time-frequency shifts, so this is
    /// the modulus of the transform of the correspondingly translated and modulated signal.
    pub fn centered(&self) -> (GaborField, (f64, f64)) {
        let (imax, jmax) = argmax(&self.values.mapv(|z| z.norm()));
        let (xm, ym) = (self.grid.x(imax), self.grid.y(jmax));
        let mut grid = self.grid;
        grid.x0 -= xm;
        grid.y0 -= ym;
        (
            GaborField {
                grid,
                values: self.values.clone(),
                kind: self.kind,
            },
            (xm, ym),
        )
    }
}

/// Nonnegative weights `|F|^p` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightField {
    pub grid: TfGrid,
    pub w: Array2<f64>,
    pub p: f64,
    /// Set when every weight is zero.
    pub degenerate: bool,
}

impl WeightField {
    pub fn new(grid: TfGrid, w: Array2<f64>, p: f64) -> Result<Self> {
        if w.dim() != grid.shape() {
            return Err(Error::ShapeMismatch(format!(
                "weights {:?} do not match grid {:?}",
                w.dim(),
                grid.shape()
            )));
        }
        if w.iter().any(|&v| !(v.is_finite() && v >= 0.0)) {
            return Err(Error::InvalidParameter("weights must be finite and nonnegative".into()));
        }
        check_exponent(p)?;
        let degenerate = w.iter().all(|&v| v == 0.0);
        Ok(WeightField { grid, w, p, degenerate })
    }

    /// Σw·δ².
    pub fn mass(&self) -> f64 {
        self.w.sum() * self.grid.cell_area()
    }

    pub fn scaled(&self, factor: f64) -> WeightField {
        WeightField {
            grid: self.grid,
            w: self.w.mapv(|v| v * factor),
            p: self.p,
            degenerate: self.degenerate || factor == 0.0,
        }
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::InvalidParameter(format!("exponent p must lie in [1, ∞), got {p}")));
    }
    Ok(())
}

/// `w = |F|^p` elementwise.
pub fn weight_field(field: &GaborField, p: f64) -> Result<WeightField> {
    check_exponent(p)?;
    let w = field.values.mapv(|z| z.norm().powf(p));
    let wf = WeightField::new(field.grid, w, p)?;
    if wf.degenerate {
        log::warn!("weight field is identically zero (degenerate)");
    }
    Ok(wf)
}

/// Index of the largest entry; the first one in row-major order wins ties.
pub(crate) fn argmax(a: &Array2<f64>) -> (usize, usize) {
    let mut best = (0, 0);
    let mut best_v = f64::NEG_INFINITY;
    for ((i, j), &v) in a.indexed_iter() {
        if v > best_v {
            best_v = v;
            best = (i, j);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_of_constant_modulus() {
        let grid = TfGrid::new(0.5, 4, 4, 0.0, 0.0).unwrap();
        let values = Array2::from_elem((4, 4), Complex64::new(0.0, 2.0));
        let field = GaborField::new(grid, values, FieldKind::Generic).unwrap();
        let w1 = weight_field(&field, 1.0).unwrap();
        assert!(w1.w.iter().all(|&v| (v - 2.0).abs() < 1e-15));
        let w2 = weight_field(&field, 2.0).unwrap();
        for (a, b) in w1.w.iter().zip(w2.w.iter()) {
            assert!((a * a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_field_gives_degenerate_weights() {
        let grid = TfGrid::new(0.5, 4, 4, 0.0, 0.0).unwrap();
        let w = weight_field(&GaborField::zeros(grid, FieldKind::Gabor), 1.0).unwrap();
        assert!(w.degenerate);
        assert!(weight_field(&GaborField::zeros(grid, FieldKind::Gabor), 0.5).is_err());
    }

    #[test]
    fn centering_moves_max_to_origin() {
        let grid = TfGrid::new(1.0, 5, 5, -2.0, -2.0).unwrap();
        let mut values = Array2::zeros((5, 5));
        values[[3, 1]] = Complex64::new(0.0, 5.0);
        let field = GaborField::new(grid, values, FieldKind::Gabor).unwrap();
        let (c, shift) = field.centered();
        assert_eq!(shift, (1.0, -1.0));
        assert_eq!(c.grid.x(3), 0.0);
        assert_eq!(c.grid.y(1), 0.0);
    }
}
