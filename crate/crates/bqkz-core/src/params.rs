//! Global spectral parameters and numerical tolerances.

use crate::{C64, Error, Result};

/// The global complex parameters of the model.
///
/// `eta` is the quantum deformation parameter (p = e^eta), `tau` the step of
/// the difference equations (q = e^tau), and `xi_plus`/`xi_minus` the two
/// boundary parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralParams {
    pub eta: C64,
    pub tau: C64,
    pub xi_plus: C64,
    pub xi_minus: C64,
}

impl SpectralParams {
    pub fn new(eta: C64, tau: C64, xi_plus: C64, xi_minus: C64) -> Self {
        Self {
            eta,
            tau,
            xi_plus,
            xi_minus,
        }
    }

    /// p = e^eta.
    pub fn p(&self) -> C64 {
        self.eta.exp()
    }

    /// q = e^tau.
    pub fn q(&self) -> C64 {
        self.tau.exp()
    }

    /// p^z = e^(eta z), evaluated by direct exponentiation (no log branch).
    pub fn p_pow(&self, z: C64) -> C64 {
        (self.eta * z).exp()
    }

    /// Checks that p = e^eta stays away from roots of unity:
    /// |p^(2m) - 1| > delta for m = 1..=max_order.
    pub fn check_generic(&self, profile: &ToleranceProfile) -> Result<()> {
        let p2 = (self.eta * C64::new(2.0, 0.0)).exp();
        let mut pw = C64::new(1.0, 0.0);
        for m in 1..=profile.generic_orders {
            pw *= p2;
            let dist = (pw - C64::new(1.0, 0.0)).norm();
            if dist <= profile.generic_guard {
                return Err(Error::PoleHit {
                    context: "generic-parameter guard: e^(2 m eta) near 1",
                    magnitude: dist,
                });
            }
            let _ = m;
        }
        Ok(())
    }

    /// |q| < 1, required for every q-series evaluation.
    pub fn check_q_modulus(&self) -> Result<()> {
        let m = self.q().norm();
        if m >= 1.0 {
            Err(Error::DivergentSeries { modulus: m })
        } else {
            Ok(())
        }
    }
}

/// Numerical tolerances used across the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceProfile {
    /// Relative tolerance for residual checks.
    pub rel_tol: f64,
    /// Guard radius around sinh/series denominators.
    pub pole_guard: f64,
    /// Guard radius for the root-of-unity check on e^eta.
    pub generic_guard: f64,
    /// Number of powers tested by the root-of-unity check.
    pub generic_orders: u32,
    /// Stop threshold for q-shifted factorial tails.
    pub qpoch_stop: f64,
}

impl Default for ToleranceProfile {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            pole_guard: 1e-6,
            generic_guard: 1e-3,
            generic_orders: 16,
            qpoch_stop: f64::EPSILON * 8.0,
        }
    }
}

impl ToleranceProfile {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }

    /// All guards must be strictly positive and rel_tol must exceed machine eps.
    pub fn validate(&self) -> Result<()> {
        let ok = self.rel_tol > f64::EPSILON
            && self.pole_guard > 0.0
            && self.generic_guard > 0.0
            && self.qpoch_stop > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(
                "tolerance profile fields must be strictly positive".into(),
            ))
        }
    }
}
