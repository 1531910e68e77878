//! Thick-restart Lanczos (Krylov–Schur) iteration for the smallest nonzero eigenpair of a
//! normalized Laplacian, with the known null vector deflated from every Krylov vector.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::NormalizedLaplacian;
use crate::error::{Error, Result};

/// Seed of the random start vector.
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

const MAX_BASIS: usize = 80;
const KEEP: usize = 30;

/// Eigenpair of the smallest positive eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct FiedlerPair {
    pub value: f64,
    /// Unit-norm eigenvector, orthogonal to `D^{1/2}·1`.
    pub vector: Vec<f64>,
    /// Operator applications spent.
    pub iterations: usize,
    /// `‖Lv − λv‖`, recomputed with one extra operator application.
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn deflate(v: &mut [f64], null: &[f64]) {
    let c = dot(v, null);
    axpy(-c, null, v);
}

/// Projects `w` off the null vector and the basis (two Gram–Schmidt passes); returns the
/// accumulated coefficients.
fn orthogonalize(w: &mut [f64], basis: &[Vec<f64>], null: &[f64]) -> Vec<f64> {
    let mut coeffs = vec![0.0; basis.len()];
    for _ in 0..2 {
        deflate(w, null);
        for (c, q) in coeffs.iter_mut().zip(basis) {
            let h = dot(q, w);
            axpy(-h, q, w);
            *c += h;
        }
    }
    coeffs
}

fn random_unit(n: usize, rng: &mut ChaCha8Rng, basis: &[Vec<f64>], null: &[f64]) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        orthogonalize(&mut v, basis, null);
        let nv = norm(&v);
        if nv > 1e-8 {
            v.iter_mut().for_each(|x| *x /= nv);
            return v;
        }
    }
}

/// Computes the eigenpair of the second-smallest eigenvalue of `op`.
///
/// `max_iter` bounds the number of operator applications; convergence requires
/// `‖Lv − λv‖ ≤ tol` for the unit-norm Ritz vector.
pub fn fiedler_vector(op: &NormalizedLaplacian, tol: f64, max_iter: usize) -> Result<FiedlerPair> {
    fiedler_vector_seeded(op, tol, max_iter, DEFAULT_SEED)
}

pub fn fiedler_vector_seeded(
    op: &NormalizedLaplacian,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<FiedlerPair> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let n = op.dim();
    if n < 2 {
        return Err(Error::DegenerateGraph(
            "fewer than two non-isolated vertices; no positive eigenvalue".into(),
        ));
    }
    let null = op.null_vector();
    let space = n - 1;
    let m = space.min(MAX_BASIS);
    let keep = KEEP.min(m.saturating_sub(1)).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut basis: Vec<Vec<f64>> = vec![random_unit(n, &mut rng, &[], &null)];
    let mut t = DMatrix::<f64>::zeros(m, m);
    let mut matvecs = 0usize;
    let mut last_residual;
    let mut w = vec![0.0; n];

    loop {
        // extend the Krylov decomposition to m vectors
        let mut beta;
        let residual_vec: Vec<f64>;
        let mut j = basis.len() - 1;
        loop {
            op.apply(&basis[j], &mut w);
            matvecs += 1;
            let coeffs = orthogonalize(&mut w, &basis, &null);
            for (i, &c) in coeffs.iter().enumerate() {
                t[(i, j)] = c;
                t[(j, i)] = c;
            }
            beta = norm(&w);
            let exhausted = beta <= 1e-12;
            if j + 1 == m || exhausted {
                if exhausted && basis.len() < space && j + 1 < m {
                    // invariant subspace found early: continue with a fresh direction
                    let fresh = random_unit(n, &mut rng, &basis, &null);
                    basis.push(fresh);
                    j += 1;
                    continue;
                }
                residual_vec = w.iter().map(|x| x / beta.max(f64::MIN_POSITIVE)).collect();
                break;
            }
            basis.push(w.iter().map(|x| x / beta).collect());
            j += 1;
        }
        let dim = basis.len();
        let eig = SymmetricEigen::new(t.view((0, 0), (dim, dim)).into_owned());
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let best = order[0];
        let estimate = if beta <= 1e-12 {
            0.0
        } else {
            beta * eig.eigenvectors[(dim - 1, best)].abs()
        };

        let ritz = |col: usize| -> Vec<f64> {
            let mut v = vec![0.0; n];
            for (k, q) in basis.iter().enumerate() {
                axpy(eig.eigenvectors[(k, col)], q, &mut v);
            }
            v
        };

        if estimate <= tol || dim == space {
            let mut v = ritz(best);
            deflate(&mut v, &null);
            let nv = norm(&v);
            v.iter_mut().for_each(|x| *x /= nv);
            op.apply(&v, &mut w);
            matvecs += 1;
            let lambda = dot(&v, &w);
            let residual = w
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - lambda * b).powi(2))
                .sum::<f64>()
                .sqrt();
            last_residual = residual;
            if residual <= tol {
                return Ok(FiedlerPair {
                    value: lambda,
                    vector: v,
                    iterations: matvecs,
                    residual,
                });
            }
        } else {
            last_residual = estimate;
        }
        if matvecs >= max_iter {
            return Err(Error::NoConvergence {
                iterations: matvecs,
                residual: last_residual,
            });
        }

        // thick restart: keep the smallest Ritz pairs plus the residual direction
        let k = keep.min(dim - 1).max(1);
        let mut new_basis: Vec<Vec<f64>> = order[..k].iter().map(|&c| ritz(c)).collect();
        t.fill(0.0);
        for (i, &c) in order[..k].iter().enumerate() {
            t[(i, i)] = eig.eigenvalues[c];
            let coupling = beta * eig.eigenvectors[(dim - 1, c)];
            t[(i, k)] = coupling;
            t[(k, i)] = coupling;
        }
        if beta > 1e-12 {
            new_basis.push(residual_vec);
        } else {
            let fresh = random_unit(n, &mut rng, &new_basis, &null);
            new_basis.push(fresh);
            for i in 0..k {
                t[(i, k)] = 0.0;
                t[(k, i)] = 0.0;
            }
        }
        basis = new_basis;
    }
}
