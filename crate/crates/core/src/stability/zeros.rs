use std::f64::consts::{PI, TAU};

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gabor::{gradient_field, FieldKind, GaborField, TfGrid};

/// Subsamples per axis used to estimate partial cell coverage.
const COVERAGE_SAMPLES: usize = 32;
/// Moduli below this fraction of the maximum count as sitting on a zero.
const ZERO_LEVEL: f64 = 1e-9;

fn require_disc(grid: &TfGrid, radius: f64) -> Result<()> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {radius}")));
    }
    if grid.x0 > -radius || grid.x_end() < radius || grid.y0 > -radius || grid.y_end() < radius {
        return Err(Error::InvalidGrid(format!(
            "disc of radius {radius} exceeds the grid [{}, {}] x [{}, {}]",
            grid.x0,
            grid.x_end(),
            grid.y0,
            grid.y_end()
        )));
    }
    Ok(())
}

/// Fraction of each lattice cell (side `δ`, centered on its grid point) covered by the disc
/// `|z| ≤ radius`.
pub fn disc_coverage(grid: &TfGrid, radius: f64) -> Array2<f64> {
    let h = 0.5 * grid.delta;
    Array2::from_shape_fn(grid.shape(), |(i, j)| {
        let (x, y) = grid.point(i, j);
        let far = (x.abs() + h).hypot(y.abs() + h);
        let near = (x.abs() - h).max(0.0).hypot((y.abs() - h).max(0.0));
        if far <= radius {
            1.0
        } else if near >= radius {
            0.0
        } else {
            let step = grid.delta / COVERAGE_SAMPLES as f64;
            let mut hits = 0;
            for a in 0..COVERAGE_SAMPLES {
                for b in 0..COVERAGE_SAMPLES {
                    let u = x - h + (a as f64 + 0.5) * step;
                    let v = y - h + (b as f64 + 0.5) * step;
                    if u.hypot(v) <= radius {
                        hits += 1;
                    }
                }
            }
            hits as f64 / (COVERAGE_SAMPLES * COVERAGE_SAMPLES) as f64
        }
    })
}

/// Phase increment from `a` to `b`, wrapped to `(−π, π]`.
fn phase_step(a: Complex64, b: Complex64) -> f64 {
    (b * a.conj()).arg()
}

fn winding_count(values: &Array2<Complex64>, grid: &TfGrid, radius: f64) -> (i64, bool) {
    let peak = values.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let h = 0.5 * grid.delta;
    let counted = |i: usize, j: usize| {
        i + 1 < grid.nx && j + 1 < grid.ny && {
            let (x, y) = grid.point(i, j);
            (x + h).hypot(y + h) < radius
        }
    };
    let mut total = 0i64;
    let mut ambiguous = false;
    for i in 0..grid.nx.saturating_sub(1) {
        for j in 0..grid.ny.saturating_sub(1) {
            if !counted(i, j) {
                continue;
            }
            let corners = [
                values[[i, j]],
                values[[i + 1, j]],
                values[[i + 1, j + 1]],
                values[[i, j + 1]],
            ];
            let turn: f64 = (0..4).map(|k| phase_step(corners[k], corners[(k + 1) % 4])).sum();
            total += (turn / TAU).round() as i64;
            let on_edge = [(i.wrapping_sub(1), j), (i + 1, j), (i, j.wrapping_sub(1)), (i, j + 1)]
                .into_iter()
                .any(|(a, b)| a >= grid.nx || b >= grid.ny || !counted(a, b));
            if on_edge && corners.iter().any(|z| z.norm() < ZERO_LEVEL * peak) {
                ambiguous = true;
            }
        }
    }
    (total, ambiguous)
}

/// Number of zeros of a Gabor field in the disc `|z| < radius`, from the phase winding of
/// `e^{πixy}·V` around each lattice cell.
///
/// Zeros of a Gabor transform all wind negatively, so the count is the negated winding sum.
/// A near-zero sample on the rim of the disc makes the count ambiguous; the radius is then
/// enlarged by half a cell once.
pub fn count_zeros(field: &GaborField, radius: f64) -> Result<usize> {
    if field.kind != FieldKind::Gabor {
        return Err(Error::InvalidParameter("zero counting needs a Gabor transform".into()));
    }
    let grid = &field.grid;
    require_disc(grid, radius)?;
    let dechirped = Array2::from_shape_fn(grid.shape(), |(i, j)| {
        let (x, y) = grid.point(i, j);
        field.values[[i, j]] * Complex64::from_polar(1.0, PI * x * y)
    });
    let (mut total, ambiguous) = winding_count(&dechirped, grid, radius);
    if ambiguous {
        let wider = radius + 0.5 * grid.delta;
        if require_disc(grid, wider).is_ok() {
            total = winding_count(&dechirped, grid, wider).0;
        }
    }
    Ok((-total).max(0) as usize)
}

/// Centers of the lattice cells around which the de-chirped field winds, one entry per unit of
/// winding, in row-major cell order.
pub fn zero_locations(field: &GaborField) -> Result<Vec<(f64, f64)>> {
    if field.kind != FieldKind::Gabor {
        return Err(Error::InvalidParameter("zero location needs a Gabor transform".into()));
    }
    let grid = &field.grid;
    let w = Array2::from_shape_fn(grid.shape(), |(i, j)| {
        let (x, y) = grid.point(i, j);
        field.values[[i, j]] * Complex64::from_polar(1.0, PI * x * y)
    });
    let h = 0.5 * grid.delta;
    let mut out = Vec::new();
    for i in 0..grid.nx.saturating_sub(1) {
        for j in 0..grid.ny.saturating_sub(1) {
            let corners = [w[[i, j]], w[[i + 1, j]], w[[i + 1, j + 1]], w[[i, j + 1]]];
            let turn: f64 = (0..4).map(|k| phase_step(corners[k], corners[(k + 1) % 4])).sum();
            let k = (turn / TAU).round() as i64;
            let (x, y) = grid.point(i, j);
            for _ in 0..k.unsigned_abs() {
                out.push((x + h, y + h));
            }
        }
    }
    Ok(out)
}

/// `L^r` norm of the logarithmic derivative of a field over a centered disc.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LogDerivative {
    pub norm: f64,
    /// `norm / (R⁵ + 1)`.
    pub ratio: f64,
}

/// `‖∇|F| / |F|‖_{L^r(B_R(0))}` with the modulus floored at `1e−13·max|F|`.
///
/// The quotient is evaluated as the gradient of `log max(|F|, floor)`, whose central
/// differences are exact on Gaussian bumps. Partial cells on the rim of the disc are weighted
/// by their covered fraction.
pub fn log_derivative_norm(field: &GaborField, r: f64, radius: f64) -> Result<LogDerivative> {
    if !(r.is_finite() && (1.0..2.0).contains(&r)) {
        return Err(Error::InvalidParameter(format!("exponent r must lie in [1, 2), got {r}")));
    }
    let grid = &field.grid;
    require_disc(grid, radius)?;
    let modulus = field.modulus();
    let floor = 1e-13 * field.max_modulus();
    if floor <= 0.0 {
        return Err(Error::ZeroRegion);
    }
    let log_modulus = modulus.mapv(|m| m.max(floor).ln());
    let grad = gradient_field(log_modulus.view(), grid.delta)?.magnitude();
    let cover = disc_coverage(grid, radius);
    let mut acc = 0.0;
    for ((i, j), &c) in cover.indexed_iter() {
        if c > 0.0 {
            acc += c * grad[[i, j]].powf(r);
        }
    }
    let norm = (acc * grid.cell_area()).powf(1.0 / r);
    Ok(LogDerivative {
        norm,
        ratio: norm / (radius.powi(5) + 1.0),
    })
}
