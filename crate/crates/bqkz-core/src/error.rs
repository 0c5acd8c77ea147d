//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// q-series with |q| >= 1 cannot be summed.
    #[error("divergent q-series: |q| = {modulus} >= 1")]
    DivergentSeries { modulus: f64 },

    /// A denominator came within the pole guard of zero.
    #[error("pole hit in {context}: |denominator| = {magnitude:.3e}")]
    PoleHit { context: &'static str, magnitude: f64 },

    /// A level-raising operator would push support past the cutoff.
    #[error("level cutoff {cutoff} exceeded: raising from occupied level {level}")]
    CutoffOverflow { cutoff: usize, level: usize },

    /// A per-level linear system is numerically unreliable.
    #[error("ill-conditioned system in {context}: cond = {cond:.3e}")]
    IllConditioned { context: &'static str, cond: f64 },

    /// A solve left a residual incompatible with the defining relation.
    #[error("residual {residual:.3e} > {tol:.3e} in {context}")]
    ResidualTooLarge {
        context: &'static str,
        residual: f64,
        tol: f64,
    },

    /// Operator/vector shapes or spaces do not match.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}
