//! Hermitian eigendecomposition via cyclic Jacobi rotations, and the trace norm.
//!
//! Dimensions in this crate stay at or below 81, where Jacobi is accurate to
//! machine precision and fast enough that no external solver is needed.

use num_complex::Complex64;

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

const HERMITIAN_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 100;

/// Eigendecomposition of a Hermitian matrix.
///
/// Returns eigenvalues sorted descending and a unitary whose columns are the
/// matching eigenvectors, so that m = V diag(vals) V^dagger.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    if !m.is_square() {
        return Err(Error::NonSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let defect = m.hermiticity_defect();
    let scale = m.max_abs_entry().max(1.0);
    if defect > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian { defect });
    }
    Ok(jacobi_hermitian(&m.hermitize()))
}

/// Cyclic Jacobi on an exactly Hermitian input. Always converges for the
/// dimensions used here; the sweep cap is a safety net.
pub(crate) fn jacobi_hermitian(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let d = m.rows();
    let mut a = m.clone();
    let mut v = ComplexMatrix::identity(d);
    let frob = a.frobenius_norm();
    if d == 1 || frob == 0.0 {
        let vals = (0..d).map(|i| a.get(i, i).re).collect();
        return sort_descending(vals, v);
    }
    let target = frob * 1e-14;

    for _sweep in 0..MAX_SWEEPS {
        let mut off2 = 0.0;
        for p in 0..d {
            for q in (p + 1)..d {
                off2 += a.get(p, q).norm_sqr();
            }
        }
        if (2.0 * off2).sqrt() <= target {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let vals = (0..d).map(|i| a.get(i, i).re).collect();
    sort_descending(vals, v)
}

/// One complex Jacobi rotation zeroing a[p][q].
///
/// The phase of a[p][q] is absorbed first, reducing the 2x2 block to the real
/// symmetric case, then a standard rotation annihilates the off-diagonal.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a.get(p, q);
    let mag = apq.norm();
    let diag_scale = a.get(p, p).norm() + a.get(q, q).norm();
    if mag <= 1e-300 || mag <= 1e-18 * diag_scale {
        return;
    }
    let app = a.get(p, p).re;
    let aqq = a.get(q, q).re;
    let phase = apq / mag; // e^{i beta}
    let tau = (aqq - app) / (2.0 * mag);
    // smaller root of t^2 - 2 tau t - 1 = 0
    let t = if tau >= 0.0 {
        -1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    let d = a.rows();
    let sp = phase.conj() * s; // s e^{-i beta}
    let cp = phase.conj() * c; // c e^{-i beta}

    // Column update: B = A G with G[p][p]=c, G[p][q]=-s, G[q][p]=s e^{-ib}, G[q][q]=c e^{-ib}.
    for i in 0..d {
        let x = a.get(i, p);
        let y = a.get(i, q);
        a.set(i, p, x * c + y * sp);
        a.set(i, q, y * cp - x * s);
    }
    // Row update: A' = G^dagger B.
    for j in 0..d {
        let x = a.get(p, j);
        let y = a.get(q, j);
        a.set(p, j, x * c + y * (phase * s));
        a.set(q, j, y * (phase * c) - x * s);
    }
    // Clean the rotated pair to keep the matrix exactly Hermitian.
    a.set(p, q, Complex64::new(0.0, 0.0));
    a.set(q, p, Complex64::new(0.0, 0.0));
    let dp = a.get(p, p).re;
    let dq = a.get(q, q).re;
    a.set(p, p, Complex64::new(dp, 0.0));
    a.set(q, q, Complex64::new(dq, 0.0));

    // Accumulate eigenvectors.
    for i in 0..d {
        let x = v.get(i, p);
        let y = v.get(i, q);
        v.set(i, p, x * c + y * sp);
        v.set(i, q, y * cp - x * s);
    }
}

fn sort_descending(vals: Vec<f64>, vecs: ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let d = vals.len();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| vals[j].partial_cmp(&vals[i]).unwrap().then(i.cmp(&j)));
    let sorted_vals: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
    let mut sorted_vecs = ComplexMatrix::zeros(d, d);
    for (new_col, &old_col) in order.iter().enumerate() {
        for i in 0..d {
            sorted_vecs.set(i, new_col, vecs.get(i, old_col));
        }
    }
    (sorted_vals, sorted_vecs)
}

/// Eigenvalues only, descending.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    hermitian_eig(m).map(|(vals, _)| vals)
}

/// Trace norm (sum of singular values) of a square matrix.
///
/// Hermitian inputs take the eigenvalue path, which keeps the error additive
/// in machine epsilon even for rank-deficient matrices; general inputs go
/// through the singular values of m^dagger m.
pub fn trace_norm(m: &ComplexMatrix) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::NonSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let scale = m.max_abs_entry().max(1.0);
    if m.hermiticity_defect() <= 1e-8 * scale {
        let (vals, _) = jacobi_hermitian(&m.hermitize());
        Ok(vals.iter().map(|x| x.abs()).sum())
    } else {
        let gram = m.adjoint().mul(m);
        let (vals, _) = jacobi_hermitian(&gram.hermitize());
        Ok(vals.iter().map(|&x| x.max(0.0).sqrt()).sum())
    }
}

/// Trace norm of an exactly Hermitian matrix; skips validation for hot loops.
pub(crate) fn trace_norm_hermitian(m: &ComplexMatrix) -> f64 {
    let (vals, _) = jacobi_hermitian(m);
    vals.iter().map(|x| x.abs()).sum()
}

/// Largest eigenvalue and its eigenvector for a Hermitian matrix.
pub fn top_eigenvector(m: &ComplexMatrix) -> Result<(f64, Vec<Complex64>)> {
    let (vals, vecs) = hermitian_eig(m)?;
    Ok((vals[0], vecs.column(0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pauli_x_spectrum() {
        let x = ComplexMatrix::from_rows(&[
            vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        ])
        .unwrap();
        let (vals, vecs) = hermitian_eig(&x).unwrap();
        assert_relative_eq!(vals[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(vals[1], -1.0, max_relative = 1e-12);
        // reconstruction
        let recon = reconstruct(&vals, &vecs);
        assert!(recon.sub(&x).frobenius_norm() < 1e-12);
    }

    #[test]
    fn complex_hermitian_reconstruction() {
        let m = ComplexMatrix::from_rows(&[
            vec![Complex64::new(2.0, 0.0), Complex64::new(0.5, -1.25), Complex64::new(0.0, 0.75)],
            vec![Complex64::new(0.5, 1.25), Complex64::new(-1.0, 0.0), Complex64::new(0.25, 0.0)],
            vec![Complex64::new(0.0, -0.75), Complex64::new(0.25, 0.0), Complex64::new(0.5, 0.0)],
        ])
        .unwrap();
        let (vals, vecs) = hermitian_eig(&m).unwrap();
        let recon = reconstruct(&vals, &vecs);
        assert!(recon.sub(&m).frobenius_norm() < 1e-12 * m.frobenius_norm().max(1.0));
        // eigenvalues descending
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        // unitarity of the eigenvector matrix
        let gram = vecs.adjoint().mul(&vecs);
        assert!(gram.sub(&ComplexMatrix::identity(3)).max_abs_entry() < 1e-12);
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = ComplexMatrix::from_rows(&[
            vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)],
        ])
        .unwrap();
        assert!(matches!(hermitian_eig(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn trace_norm_of_traceless_difference() {
        // (|0><0| - |1><1|) / 2 has trace norm 1.
        let m = ComplexMatrix::from_diagonal(&[0.5, -0.5]);
        assert_relative_eq!(trace_norm(&m).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn trace_norm_general_matrix() {
        // Nilpotent [[0,1],[0,0]] has a single singular value 1.
        let m = ComplexMatrix::from_rows(&[
            vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)],
        ])
        .unwrap();
        assert_relative_eq!(trace_norm(&m).unwrap(), 1.0, epsilon = 1e-10);
    }

    fn reconstruct(vals: &[f64], vecs: &ComplexMatrix) -> ComplexMatrix {
        let d = vals.len();
        let mut out = ComplexMatrix::zeros(d, d);
        for k in 0..d {
            let col = vecs.column(k);
            out.add_scaled(&ComplexMatrix::outer(&col, &col), vals[k]);
        }
        out
    }
}
