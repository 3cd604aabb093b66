//! Dense row-major complex matrices sized for small Hilbert spaces.

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Dense complex matrix, row-major storage.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    /// Builds a matrix from row-major data; rejects shape mismatch and non-finite entries.
    pub fn from_data(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: data.len(),
                context: "matrix data length",
            });
        }
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput("matrix must be non-empty".into()));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("matrix entries must be finite".into()));
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map(|row| row.len()).unwrap_or(0);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidInput("matrix rows have unequal lengths".into()));
        }
        Self::from_data(r, c, rows.concat())
    }

    /// Real diagonal matrix.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &x) in diag.iter().enumerate() {
            m.set(i, i, Complex64::new(x, 0.0));
        }
        m
    }

    /// Outer product u v^dagger.
    pub fn outer(u: &[Complex64], v: &[Complex64]) -> Self {
        let mut m = Self::zeros(u.len(), v.len());
        for (i, a) in u.iter().enumerate() {
            for (j, b) in v.iter().enumerate() {
                m.set(i, j, a * b.conj());
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, z: Complex64) {
        self.data[i * self.cols + j] = z;
    }

    #[inline]
    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn mul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, other.rows, "matrix product shape mismatch");
        let mut out = ComplexMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len(), "matrix-vector shape mismatch");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum::<Complex64>()
            })
            .collect()
    }

    pub fn add(&self, other: &ComplexMatrix) -> ComplexMatrix {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ComplexMatrix) -> ComplexMatrix {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &ComplexMatrix, f: impl Fn(Complex64, Complex64) -> Complex64) -> ComplexMatrix {
        assert_eq!(self.rows, other.rows, "matrix sum shape mismatch");
        assert_eq!(self.cols, other.cols, "matrix sum shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// In-place self += scale * other.
    pub fn add_scaled(&mut self, other: &ComplexMatrix, scale: f64) {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        for (d, s) in self.data.iter_mut().zip(&other.data) {
            *d += s * scale;
        }
    }

    pub fn scale(&self, factor: f64) -> ComplexMatrix {
        self.scale_complex(Complex64::new(factor, 0.0))
    }

    pub fn scale_complex(&self, factor: Complex64) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * factor).collect(),
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    pub fn transpose(&self) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square(), "trace of non-square matrix");
        (0..self.rows).map(|i| self.get(i, i)).sum()
    }

    /// Re tr(self^dagger other), the Frobenius inner product.
    pub fn inner_product_re(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest |a_ij - conj(a_ji)| over all entries; zero iff Hermitian.
    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                let d = (self.get(i, j) - self.get(j, i).conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.hermiticity_defect() <= tol
    }

    /// Hermitian part (self + self^dagger) / 2.
    pub fn hermitize(&self) -> ComplexMatrix {
        assert!(self.is_square());
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                let z = (self.get(i, j) + self.get(j, i).conj()) * 0.5;
                out.set(i, j, z);
            }
        }
        out
    }

    /// Kronecker product; block (i1, j1) is a[i1][j1] * b.
    pub fn kron(&self, other: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.rows * other.rows, self.cols * other.cols);
        for i1 in 0..self.rows {
            for j1 in 0..self.cols {
                let a = self.get(i1, j1);
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for i2 in 0..other.rows {
                    for j2 in 0..other.cols {
                        out.set(i1 * other.rows + i2, j1 * other.cols + j2, a * other.get(i2, j2));
                    }
                }
            }
        }
        out
    }

    /// Orthonormalizes the columns in place via modified Gram-Schmidt.
    /// Returns an error when the columns are linearly dependent.
    pub fn orthonormalize_columns(&mut self) -> Result<()> {
        for j in 0..self.cols {
            for k in 0..j {
                let proj: Complex64 = (0..self.rows)
                    .map(|i| self.get(i, k).conj() * self.get(i, j))
                    .sum();
                for i in 0..self.rows {
                    let z = self.get(i, j) - proj * self.get(i, k);
                    self.set(i, j, z);
                }
            }
            let norm: f64 = (0..self.rows)
                .map(|i| self.get(i, j).norm_sqr())
                .sum::<f64>()
                .sqrt();
            if norm < 1e-12 {
                return Err(Error::InvalidInput(
                    "columns are numerically linearly dependent".into(),
                ));
            }
            for i in 0..self.rows {
                let z = self.get(i, j) / norm;
                self.set(i, j, z);
            }
        }
        Ok(())
    }
}

/// Kronecker (tensor) product of two matrices.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kron(b)
}

/// Which factor of a bipartite space dim_a x dim_b to keep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Second,
}

/// Partial trace of an operator on C^{dim_a} (x) C^{dim_b}.
pub fn partial_trace(
    m: &ComplexMatrix,
    dim_a: usize,
    dim_b: usize,
    keep: Subsystem,
) -> Result<ComplexMatrix> {
    check_bipartite(m, dim_a, dim_b)?;
    match keep {
        Subsystem::First => {
            let mut out = ComplexMatrix::zeros(dim_a, dim_a);
            for a in 0..dim_a {
                for a2 in 0..dim_a {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for b in 0..dim_b {
                        acc += m.get(a * dim_b + b, a2 * dim_b + b);
                    }
                    out.set(a, a2, acc);
                }
            }
            Ok(out)
        }
        Subsystem::Second => {
            let mut out = ComplexMatrix::zeros(dim_b, dim_b);
            for b in 0..dim_b {
                for b2 in 0..dim_b {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for a in 0..dim_a {
                        acc += m.get(a * dim_b + b, a * dim_b + b2);
                    }
                    out.set(b, b2, acc);
                }
            }
            Ok(out)
        }
    }
}

/// Partial transpose on the second factor of C^{dim_a} (x) C^{dim_b}.
pub fn partial_transpose(m: &ComplexMatrix, dim_a: usize, dim_b: usize) -> Result<ComplexMatrix> {
    check_bipartite(m, dim_a, dim_b)?;
    let mut out = ComplexMatrix::zeros(m.rows(), m.cols());
    for a in 0..dim_a {
        for a2 in 0..dim_a {
            for b in 0..dim_b {
                for b2 in 0..dim_b {
                    out.set(a * dim_b + b, a2 * dim_b + b2, m.get(a * dim_b + b2, a2 * dim_b + b));
                }
            }
        }
    }
    Ok(out)
}

fn check_bipartite(m: &ComplexMatrix, dim_a: usize, dim_b: usize) -> Result<()> {
    if !m.is_square() {
        return Err(Error::NonSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    if m.rows() != dim_a * dim_b {
        return Err(Error::DimensionMismatch {
            expected: dim_a * dim_b,
            actual: m.rows(),
            context: "bipartite operator dimension",
        });
    }
    Ok(())
}

// Wire format: a matrix is a list of rows, each entry an [re, im] pair.
impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.rows)
            .map(|i| self.row(i).iter().map(|z| [z.re, z.im]).collect())
            .collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(deserializer)?;
        let converted: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|row| row.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
            .collect();
        ComplexMatrix::from_rows(&converted).map_err(|e| D::Error::custom(e.to_string()))
    }
}

/// Inner product <u, v> = sum conj(u_i) v_i.
pub fn vec_inner(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn vec_norm(u: &[Complex64]) -> f64 {
    u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Tensor product of state vectors (first factor major).
pub fn vec_kron(u: &[Complex64], v: &[Complex64]) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(u.len() * v.len());
    for a in u {
        for b in v {
            out.push(a * b);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn product_and_adjoint() {
        let a = ComplexMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(0.0, 1.0)],
            vec![c(2.0, 0.0), c(0.0, 0.0)],
        ])
        .unwrap();
        let prod = a.mul(&a.adjoint());
        assert!(prod.is_hermitian(1e-15));
        assert!((prod.get(0, 0).re - 2.0).abs() < 1e-15);
        assert!((prod.trace().re - 6.0).abs() < 1e-15);
    }

    #[test]
    fn kron_shapes_and_trace() {
        let a = ComplexMatrix::from_diagonal(&[1.0, 2.0]);
        let b = ComplexMatrix::from_diagonal(&[3.0, 4.0, 5.0]);
        let k = tensor(&a, &b);
        assert_eq!(k.rows(), 6);
        let ta = a.trace().re;
        let tb = b.trace().re;
        assert!((k.trace().re - ta * tb).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_recovers_factors() {
        let a = ComplexMatrix::from_rows(&[
            vec![c(0.5, 0.0), c(0.1, 0.2)],
            vec![c(0.1, -0.2), c(0.5, 0.0)],
        ])
        .unwrap();
        let b = ComplexMatrix::from_diagonal(&[0.25, 0.75]);
        let joint = tensor(&a, &b);
        let ra = partial_trace(&joint, 2, 2, Subsystem::First).unwrap();
        let rb = partial_trace(&joint, 2, 2, Subsystem::Second).unwrap();
        assert!(ra.sub(&a).max_abs_entry() < 1e-14);
        assert!(rb.sub(&b).max_abs_entry() < 1e-14);
    }

    #[test]
    fn partial_transpose_is_involution() {
        let m = ComplexMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        ])
        .unwrap();
        let pt = partial_transpose(&m, 2, 2).unwrap();
        let back = partial_transpose(&pt, 2, 2).unwrap();
        assert!(back.sub(&m).max_abs_entry() < 1e-15);
        // trace preserved exactly
        assert_eq!(pt.trace(), m.trace());
    }

    #[test]
    fn serde_round_trip() {
        let m = ComplexMatrix::from_rows(&[
            vec![c(0.0, -1.5), c(2.0, 0.25)],
            vec![c(1.0, 0.0), c(0.0, 0.0)],
        ])
        .unwrap();
        let text = serde_json::to_string(&m).unwrap();
        let back: ComplexMatrix = serde_json::from_str(&text).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn ragged_rows_rejected() {
        let res: std::result::Result<ComplexMatrix, _> = serde_json::from_str("[[[1,0]],[[1,0],[0,0]]]");
        assert!(res.is_err());
    }
}
