//! Numerical toolkit for the trigonometric quantum integrable structures behind
//! boundary q-difference equations: evaluation R- and L-operators on (truncated)
//! Verma modules over quantum affine sl2, diagonal K-operators and their fusion,
//! boundary monodromy matrices and off-shell Bethe vectors, transport operators,
//! and truncated Jackson-integral solution evaluation.
//!
//! Everything is built on a total-level grading of tensor products of weight
//! modules. All in-scope operators are level-banded, so a level cutoff gives
//! *exact* (not approximate) results on the retained levels.

pub mod error;
pub mod jackson;
pub mod kops;
pub mod monodromy;
pub mod params;
pub mod qkz;
pub mod rops;
pub mod sampling;
pub mod spaces;
pub mod special;

pub use error::Error;
pub use params::{SpectralParams, ToleranceProfile};
pub use spaces::{GradedOperator, GradedSpace, GradedVector, SpinLabel};

/// Shorthand used throughout the crate.
pub type C64 = num_complex::Complex64;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;

/// Scale-free residual between two complex scalars: |a-b| / (|a|+|b|+1).
pub fn rel_diff(a: C64, b: C64) -> f64 {
    (a - b).norm() / (a.norm() + b.norm() + 1.0)
}
