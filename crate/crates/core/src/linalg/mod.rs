//! Complex linear algebra for spaces of dimension at most 81.

mod eig;
mod matrix;
mod state;

pub use eig::{hermitian_eig, hermitian_eigenvalues, top_eigenvector, trace_norm};
pub(crate) use eig::{jacobi_hermitian, trace_norm_hermitian};
pub use matrix::{
    partial_trace, partial_transpose, tensor, vec_inner, vec_kron, vec_norm, ComplexMatrix,
    Subsystem,
};
pub use state::{purify, von_neumann_entropy, DensityMatrix, PureStateVector};
