//! Delay matrices of linear recurrent networks.
//!
//! A linear recurrence `h[k+1] = W h[k] + y[k] + b` run over `n` lags links
//! the stacked inputs to the stacked states through the block bidiagonal
//! delay matrix `M` (identity blocks on the diagonal, `W` above it). This
//! crate builds `M` and its Gram matrix `A = M M*`, evaluates their
//! closed-form spectra for scalar and Hermitian `W`, implements the
//! conditioning and embedding bounds for arbitrary `W`, simulates the
//! recurrence, and drives seeded random-matrix sweeps. A Jacobi-based
//! spectral oracle in [`matcore`] cross-checks every closed form.

pub mod bounds;
pub mod delaymat;
pub mod error;
pub mod experiments;
pub mod lrnn;
pub mod matcore;
pub mod matio;
pub mod spectra;

pub use error::{Error, Result};
pub use matcore::{Complex64, ComplexMatrix, SpectralSummary};
