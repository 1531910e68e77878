use crate::error::{Error, Result};

/// Square-cell sampling lattice; point `(i, j)` sits at `(x0 + i·delta, y0 + j·delta)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TfGrid {
    pub delta: f64,
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
}

impl TfGrid {
    pub fn new(delta: f64, nx: usize, ny: usize, x0: f64, y0: f64) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {delta}")));
        }
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidGrid(format!("empty grid {nx}x{ny}")));
        }
        if !(x0.is_finite() && y0.is_finite()) {
            return Err(Error::InvalidGrid("non-finite origin".into()));
        }
        Ok(TfGrid { delta, nx, ny, x0, y0 })
    }

    /// Grid whose index `(nx/2, ny/2)` sits at the origin.
    pub fn centered(delta: f64, nx: usize, ny: usize) -> Result<Self> {
        TfGrid::new(delta, nx, ny, -((nx / 2) as f64) * delta, -((ny / 2) as f64) * delta)
    }

    /// Smallest centered grid covering `[-half_x, half_x] × [-half_y, half_y]`.
    pub fn covering(delta: f64, half_x: f64, half_y: f64) -> Result<Self> {
        let nx = 2 * (half_x / delta).ceil() as usize + 1;
        let ny = 2 * (half_y / delta).ceil() as usize + 1;
        TfGrid::centered(delta, nx, ny)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.delta
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.delta
    }

    pub fn point(&self, i: usize, j: usize) -> (f64, f64) {
        (self.x(i), self.y(j))
    }

    pub fn x_end(&self) -> f64 {
        self.x(self.nx - 1)
    }

    pub fn y_end(&self) -> f64 {
        self.y(self.ny - 1)
    }

    pub fn cell_area(&self) -> f64 {
        self.delta * self.delta
    }

    /// Largest |y| over the lattice.
    pub fn max_abs_y(&self) -> f64 {
        self.y0.abs().max(self.y_end().abs())
    }

    pub(crate) fn require_min_dims(&self, min: usize) -> Result<()> {
        if self.nx < min || self.ny < min {
            return Err(Error::InvalidGrid(format!(
                "grid {}x{} smaller than the required {min}x{min}",
                self.nx, self.ny
            )));
        }
        Ok(())
    }

    /// Boolean mask of grid points within distance `radius` of `(cx, cy)`.
    pub fn disc_mask(&self, cx: f64, cy: f64, radius: f64) -> ndarray::Array2<bool> {
        ndarray::Array2::from_shape_fn(self.shape(), |(i, j)| {
            let (x, y) = self.point(i, j);
            (x - cx).hypot(y - cy) <= radius
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centered_coordinates() {
        let g = TfGrid::centered(1.0 / 16.0, 257, 257).unwrap();
        assert_eq!(g.x(128), 0.0);
        assert_eq!(g.x0, -8.0);
        assert_eq!(g.y_end(), 8.0);
        let g = TfGrid::centered(1.0 / 16.0, 256, 256).unwrap();
        assert_eq!(g.x0, -8.0);
        assert_eq!(g.x_end(), 8.0 - 1.0 / 16.0);
    }

    #[test]
    fn rejects_bad_spacing() {
        assert!(TfGrid::new(0.0, 4, 4, 0.0, 0.0).is_err());
        assert!(TfGrid::new(-1.0, 4, 4, 0.0, 0.0).is_err());
        assert!(TfGrid::new(1.0, 0, 4, 0.0, 0.0).is_err());
    }

    #[test]
    fn covering_grid_contains_box() {
        let g = TfGrid::covering(0.25, 3.0, 1.1).unwrap();
        assert!(g.x0 <= -3.0 && g.x_end() >= 3.0);
        assert!(g.y0 <= -1.1 && g.y_end() >= 1.1);
    }
}
