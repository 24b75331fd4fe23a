//! Density estimation under adversarial losses.
//!
//! Densities on `[0,1]^d` are orthogonal-series expansions over a realified
//! Fourier basis or the one-dimensional Haar basis. Losses are integral
//! probability metrics over generalized ellipses of discriminators,
//! `d_F(P, Q) = sup_{f∈F} |E_P f − E_Q f|`.

pub mod basis;
pub mod bounds;
pub mod coeffs;
pub mod density;
pub mod error;
pub mod estimator;
pub mod loss;
pub mod montecarlo;
pub mod quadrature;

pub use basis::{enumerate_truncation, BasisIndex, BasisKind, TruncationSet, WeightRule};
pub use coeffs::CoefficientVector;
pub use density::SeriesDensity;
pub use error::{Error, Result};
pub use estimator::Dataset;
pub use loss::{EllipseClass, KernelSpectrum};
