//! Density matrices, pure state vectors, entropy and purification.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::eig::{hermitian_eig, jacobi_hermitian};
use super::matrix::{vec_kron, vec_norm, ComplexMatrix};
use crate::error::{Error, Result};

const DENSITY_TOL: f64 = 1e-10;

/// Density matrix: Hermitian, positive semidefinite, unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity (1e-10), spectrum >= -1e-10 and trace 1 (1e-10).
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NonSquare {
                rows: matrix.rows(),
                cols: matrix.cols(),
            });
        }
        let defect = matrix.hermiticity_defect();
        if defect > DENSITY_TOL {
            return Err(Error::Validation(format!(
                "density matrix is not Hermitian (defect {defect:.3e})"
            )));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > DENSITY_TOL || tr.im.abs() > DENSITY_TOL {
            return Err(Error::Validation(format!(
                "density matrix trace is {tr}, expected 1"
            )));
        }
        let (vals, _) = jacobi_hermitian(&matrix.hermitize());
        if let Some(&min) = vals.last() {
            if min < -DENSITY_TOL {
                return Err(Error::Validation(format!(
                    "density matrix has negative eigenvalue {min:.3e}"
                )));
            }
        }
        Ok(DensityMatrix { matrix })
    }

    pub fn from_pure(state: &PureStateVector) -> Self {
        let amps = state.amplitudes();
        DensityMatrix {
            matrix: ComplexMatrix::outer(amps, amps),
        }
    }

    /// |k><k| in dimension dim.
    pub fn basis_projector(dim: usize, k: usize) -> Self {
        let mut diag = vec![0.0; dim];
        diag[k] = 1.0;
        DensityMatrix {
            matrix: ComplexMatrix::from_diagonal(&diag),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix {
            matrix: ComplexMatrix::from_diagonal(&vec![1.0 / dim as f64; dim]),
        }
    }

    /// Diagonal density matrix from a probability vector.
    pub fn from_diagonal(probs: &[f64]) -> Result<Self> {
        Self::new(ComplexMatrix::from_diagonal(probs))
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// Eigenvalues, descending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        jacobi_hermitian(&self.matrix.hermitize()).0
    }

    /// Convex combination of two density matrices.
    pub fn mix_with(&self, other: &DensityMatrix, weight_self: f64) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
                context: "density matrix mixture",
            });
        }
        if !(0.0..=1.0).contains(&weight_self) {
            return Err(Error::BadParams("mixture weight must lie in [0,1]".into()));
        }
        let m = self
            .matrix
            .scale(weight_self)
            .add(&other.matrix.scale(1.0 - weight_self));
        Ok(DensityMatrix { matrix: m })
    }

    pub fn tensor(&self, other: &DensityMatrix) -> Self {
        DensityMatrix {
            matrix: self.matrix.kron(&other.matrix),
        }
    }
}

impl Serialize for DensityMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.matrix.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let m = ComplexMatrix::deserialize(deserializer)?;
        DensityMatrix::new(m).map_err(|e| serde::de::Error::custom(e.to_string()))
    }
}

/// Unit-norm complex vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PureStateVector {
    amplitudes: Vec<Complex64>,
}

impl PureStateVector {
    /// Validates the norm to within 1e-10.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidInput("state vector must be non-empty".into()));
        }
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("state vector entries must be finite".into()));
        }
        let norm = vec_norm(&amplitudes);
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Validation(format!(
                "state vector norm is {norm}, expected 1"
            )));
        }
        Ok(PureStateVector { amplitudes })
    }

    /// Normalizes a nonzero vector.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = vec_norm(&amplitudes);
        if norm < 1e-150 {
            return Err(Error::InvalidInput("cannot normalize the zero vector".into()));
        }
        Ok(PureStateVector {
            amplitudes: amplitudes.into_iter().map(|z| z / norm).collect(),
        })
    }

    /// Computational basis vector e_k.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[k] = Complex64::new(1.0, 0.0);
        PureStateVector { amplitudes: amps }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.amplitudes, &self.amplitudes)
    }

    pub fn tensor(&self, other: &PureStateVector) -> Self {
        PureStateVector {
            amplitudes: vec_kron(&self.amplitudes, &other.amplitudes),
        }
    }
}

impl Serialize for PureStateVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.amplitudes.iter().map(|z| [z.re, z.im]).collect();
        pairs.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PureStateVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let pairs: Vec<[f64; 2]> = Vec::deserialize(deserializer)?;
        let amps = pairs.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        PureStateVector::new(amps).map_err(|e| serde::de::Error::custom(e.to_string()))
    }
}

/// Von Neumann entropy in bits: S(rho) = -sum lambda log2 lambda.
///
/// Eigenvalues in [-1e-10, 0) are treated as exact zeros; the result is
/// clamped at 0 to absorb rounding.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    let mut s = 0.0;
    for lam in rho.eigenvalues() {
        if lam > 0.0 {
            s -= lam * lam.log2();
        }
        // negative values within tolerance contribute nothing
    }
    s.max(0.0)
}

/// Purification of rho on dim^2: psi = sum_i sqrt(lambda_i) v_i (x) e_i.
///
/// Tracing out the second factor of |psi><psi| recovers rho.
pub fn purify(rho: &DensityMatrix) -> Result<PureStateVector> {
    let d = rho.dim();
    let (vals, vecs) = hermitian_eig(rho.matrix())?;
    let mut amps = vec![Complex64::new(0.0, 0.0); d * d];
    for (i, &lam) in vals.iter().enumerate() {
        if lam <= 0.0 {
            continue;
        }
        let w = lam.sqrt();
        let col = vecs.column(i);
        for (j, &vj) in col.iter().enumerate() {
            amps[j * d + i] = vj * w;
        }
    }
    PureStateVector::normalized(amps)
}
