//! Dense complex matrices and the numerical spectral oracle.

mod jacobi;
mod matrix;
mod spectral;

pub use matrix::ComplexMatrix;
pub use spectral::{
    generalized_determinant, gram_singular_values, hermitian_eigen, hermitian_eigenvalues,
    hermitian_log_abs_det, pseudo_inverse, singular_values, spectral_norm, spectral_summary,
    summarize_singular_values, HermitianEigen, SpectralSummary, DEFAULT_RANK_TOL,
};

pub use num_complex::Complex64;
