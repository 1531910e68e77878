#![allow(dead_code)]

use std::f64::consts::PI;

use gabor_stability::gabor::TfGrid;
use gabor_stability::signal::{sample_mixture, GaussianAtom, Signal};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DT: f64 = 1.0 / 16.0;
/// Samples on `[-8, 8]` at spacing [`DT`].
pub const N: usize = 257;

/// Closed-form Gabor transform of one mixture atom `c·φ(t−s)·e^{2πibt}`:
/// `c·2^{−1/2}·e^{−π((x−s)²+(y−b)²)/2}·e^{−πi(y−b)(x+s)}`.
pub fn atom_transform(atom: &GaussianAtom, x: f64, y: f64) -> Complex64 {
    let (s, b) = (atom.shift, atom.modulation);
    let envelope = 0.5f64.sqrt() * (-0.5 * PI * ((x - s).powi(2) + (y - b).powi(2))).exp();
    atom.amplitude * envelope * Complex64::from_polar(1.0, -PI * (y - b) * (x + s))
}

pub fn mixture_transform(atoms: &[GaussianAtom], x: f64, y: f64) -> Complex64 {
    atoms.iter().map(|a| atom_transform(a, x, y)).sum()
}

/// `V_{φ′}` of the mixture, equal to `−∂x V_φ`.
pub fn mixture_derivative_transform(atoms: &[GaussianAtom], x: f64, y: f64) -> Complex64 {
    atoms
        .iter()
        .map(|a| atom_transform(a, x, y) * Complex64::new(PI * (x - a.shift), PI * (y - a.modulation)))
        .sum()
}

/// Exact `‖f‖₂²` of a mixture from the pairwise Gaussian inner products.
pub fn mixture_energy(atoms: &[GaussianAtom]) -> f64 {
    let mut total = Complex64::new(0.0, 0.0);
    for p in atoms {
        for q in atoms {
            // ∫ φ(t−s1)φ(t−s2) e^{2πi(b1−b2)t} dt
            let (ds, db) = (p.shift - q.shift, p.modulation - q.modulation);
            let c = 0.5 * (p.shift + q.shift);
            let value = 0.5f64.sqrt()
                * (-0.5 * PI * ds * ds).exp()
                * (-0.5 * PI * db * db).exp()
                * Complex64::from_polar(1.0, 2.0 * PI * db * c);
            total += p.amplitude * q.amplitude.conj() * value;
        }
    }
    total.re
}

/// Random mixtures of 2 to 4 atoms with shifts and modulations in `[-1.5, 1.5]`.
pub fn random_mixtures(count: usize, seed: u64) -> Vec<Vec<GaussianAtom>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let k = rng.random_range(2..=4);
            (0..k)
                .map(|_| {
                    let amp = Complex64::from_polar(rng.random_range(0.5..1.5), rng.random_range(0.0..2.0 * PI));
                    GaussianAtom::new(amp, rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5))
                })
                .collect()
        })
        .collect()
}

pub fn mixture_signal(atoms: &[GaussianAtom]) -> Signal {
    sample_mixture(atoms, N, DT).unwrap()
}

pub fn square_grid(delta: f64, half: f64) -> TfGrid {
    TfGrid::covering(delta, half, half).unwrap()
}
