//! Exact Euclidean distance transform on a grid.

use ndarray::Array2;

const FAR: f64 = 1e30;

/// Squared distance transform of a sampled 1-D function (lower envelope of parabolas).
fn envelope(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let parabola = |p: usize| {
            ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64))
        };
        let mut s = parabola(v[k]);
        while s <= z[k] {
            k -= 1;
            s = parabola(v[k]);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Euclidean distance (in cells) from every cell to the nearest `false` cell.
///
/// Cells outside the array count as `false`, so a full mask measures the distance to the border.
pub fn distance_to_complement(mask: &Array2<bool>) -> Array2<f64> {
    let (nx, ny) = mask.dim();
    // padding by one cell on each side realizes the out-of-grid complement
    let (px, py) = (nx + 2, ny + 2);
    let mut g = Array2::from_elem((px, py), 0.0);
    for ((i, j), &m) in mask.indexed_iter() {
        if m {
            g[[i + 1, j + 1]] = FAR;
        }
    }
    let len = px.max(py);
    let mut f = vec![0.0; len];
    let mut out = vec![0.0; len];
    let mut v = vec![0usize; len];
    let mut z = vec![0.0; len + 1];
    for i in 0..px {
        for j in 0..py {
            f[j] = g[[i, j]];
        }
        envelope(&f[..py], &mut out[..py], &mut v, &mut z);
        for j in 0..py {
            g[[i, j]] = out[j];
        }
    }
    for j in 0..py {
        for i in 0..px {
            f[i] = g[[i, j]];
        }
        envelope(&f[..px], &mut out[..px], &mut v, &mut z);
        for i in 0..px {
            g[[i, j]] = out[i];
        }
    }
    Array2::from_shape_fn((nx, ny), |(i, j)| g[[i + 1, j + 1]].sqrt())
}
