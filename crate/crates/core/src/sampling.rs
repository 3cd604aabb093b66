//! Seeded random states and channels for tests and multi-start solvers.
//!
//! Everything routes through ChaCha streams derived from a user seed, so any
//! draw is reproducible from (seed, purpose) alone.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::channels::QuantumChannel;
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, DensityMatrix, PureStateVector};
use crate::optim::{derive_seed, seeded_rng};

/// Standard normal via Box-Muller; the second value of each pair is dropped
/// to keep draw counts position-independent.
pub(crate) fn standard_normal(rng: &mut ChaCha12Rng) -> f64 {
    loop {
        let u: f64 = rng.gen();
        if u > 1e-300 {
            let v: f64 = rng.gen();
            return (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos();
        }
    }
}

fn complex_gaussian(rng: &mut ChaCha12Rng) -> Complex64 {
    Complex64::new(standard_normal(rng), standard_normal(rng))
}

/// Haar-distributed unit vector in C^dim.
pub fn random_unit_vector(dim: usize, rng: &mut ChaCha12Rng) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..dim).map(|_| complex_gaussian(rng)).collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

pub fn random_pure_state(dim: usize, seed: u64) -> Result<PureStateVector> {
    if dim == 0 {
        return Err(Error::BadParams("state dimension must be positive".into()));
    }
    let mut rng = seeded_rng(seed);
    PureStateVector::new(random_unit_vector(dim, &mut rng))
}

/// Full-support density matrix rho = A A^dagger / tr with A a dim x rank
/// Gaussian matrix; rank caps the number of nonzero eigenvalues.
pub fn random_density_matrix(dim: usize, rank: usize, seed: u64) -> Result<DensityMatrix> {
    if dim == 0 || rank == 0 {
        return Err(Error::BadParams("dimension and rank must be positive".into()));
    }
    let mut rng = seeded_rng(seed);
    let mut a = ComplexMatrix::zeros(dim, rank);
    for i in 0..dim {
        for j in 0..rank {
            a.set(i, j, complex_gaussian(&mut rng));
        }
    }
    let gram = a.mul(&a.adjoint());
    let tr = gram.trace().re;
    DensityMatrix::new(gram.scale(1.0 / tr))
}

/// Hermitian matrix with O(1) Gaussian entries, (G + G^dagger)/2.
pub fn random_hermitian(dim: usize, seed: u64) -> Result<ComplexMatrix> {
    if dim == 0 {
        return Err(Error::BadParams("dimension must be positive".into()));
    }
    let mut rng = seeded_rng(seed);
    let mut g = ComplexMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            g.set(i, j, complex_gaussian(&mut rng));
        }
    }
    Ok(g.hermitize())
}

/// Haar-style random CPTP channel from a random Stinespring isometry
/// V: C^dim_in -> C^dim_out (x) C^kraus_rank, with K_e = (I (x) <e|) V.
pub fn random_channel(
    dim_in: usize,
    dim_out: usize,
    kraus_rank: usize,
    seed: u64,
) -> Result<QuantumChannel> {
    if dim_in == 0 || dim_out == 0 || kraus_rank == 0 {
        return Err(Error::BadParams("channel dimensions must be positive".into()));
    }
    if dim_out * kraus_rank < dim_in {
        return Err(Error::BadParams(format!(
            "no isometry into dimension {} from dimension {dim_in}",
            dim_out * kraus_rank
        )));
    }
    for attempt in 0..8_u64 {
        let mut rng = seeded_rng(derive_seed(seed, attempt));
        let rows = dim_out * kraus_rank;
        let mut g = ComplexMatrix::zeros(rows, dim_in);
        for i in 0..rows {
            for j in 0..dim_in {
                g.set(i, j, complex_gaussian(&mut rng));
            }
        }
        if g.orthonormalize_columns().is_err() {
            continue;
        }
        let v = g;
        let mut kraus = Vec::with_capacity(kraus_rank);
        for e in 0..kraus_rank {
            let mut k = ComplexMatrix::zeros(dim_out, dim_in);
            for o in 0..dim_out {
                for i in 0..dim_in {
                    k.set(o, i, v.get(o * kraus_rank + e, i));
                }
            }
            kraus.push(k);
        }
        return QuantumChannel::new(kraus);
    }
    Err(Error::Validation(
        "failed to draw a random isometry after several attempts".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn random_states_are_valid_and_reproducible() {
        let a = random_pure_state(5, 42).unwrap();
        let b = random_pure_state(5, 42).unwrap();
        assert_eq!(a.amplitudes(), b.amplitudes());
        let c = random_pure_state(5, 43).unwrap();
        assert!(a.amplitudes() != c.amplitudes());

        let rho = random_density_matrix(4, 2, 9).unwrap();
        assert_relative_eq!(rho.matrix().trace().re, 1.0, epsilon = 1e-12);
        let evs = rho.eigenvalues();
        assert!(evs[2].abs() < 1e-10, "rank cap violated: {evs:?}");
    }

    #[test]
    fn random_channels_are_cptp() {
        for seed in 0..5 {
            let ch = random_channel(3, 2, 4, seed).unwrap();
            let rho = random_density_matrix(3, 3, seed + 100).unwrap();
            let out = ch.apply(&rho).unwrap();
            assert_relative_eq!(out.matrix().trace().re, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn hermitian_draws_are_hermitian() {
        let h = random_hermitian(6, 11).unwrap();
        assert!(h.hermiticity_defect() < 1e-15);
    }
}
