//! Generator actions on weight modules and their (opposite) coproducts.
//!
//! Single-site action with highest weight ell:
//!   p^(lambda h) m_n = p^(2 lambda (ell+1-n)) m_n,
//!   e m_n = sinh((n-1) eta) sinh((2 ell + 2 - n) eta) / sinh(eta)^2 m_(n-1),
//!   f m_n = m_(n+1),
//! finite sites use the quotient action (m_(2k+2) = 0). The evaluation
//! homomorphism attaches e^(-x) / e^(x) factors and maps the affine
//! generators e0 -> e^(-x) f, f0 -> e^(x) e, h0 -> -h1.

use super::{GradedOperator, Space, SpinLabel};
use crate::{C64, SpectralParams};


/// Chevalley generators of the affine algebra acted through evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gen {
    E1,
    F1,
    E0,
    F0,
}

impl Gen {
    /// Whether the evaluated action raises the level (f-type).
    pub fn raises(&self) -> bool {
        matches!(self, Gen::F1 | Gen::E0)
    }
}

/// Coefficient of the lowering step m_n -> m_(n-1).
fn lower_coeff(ell: C64, n: u32, params: &SpectralParams) -> C64 {
    let eta = params.eta;
    let s = eta.sinh();
    (eta * (n as f64 - 1.0)).sinh() * ((ell * 2.0 + C64::new(2.0 - n as f64, 0.0)) * eta).sinh()
        / (s * s)
}

/// Weight exponent of p^(h1) on m_n: 2 (ell + 1 - n).
fn weight_exponent(ell: C64, n: u32) -> C64 {
    (ell + C64::new(1.0 - n as f64, 0.0)) * 2.0
}

/// Diagonal Cartan factor attached by the coproduct on a pass-through leg.
/// `sign` is the exponent sign of p^(h1); the affine h0 flips it once more.
fn cartan_factor(label: SpinLabel, n: u32, sign: f64, params: &SpectralParams) -> C64 {
    params.p_pow(weight_exponent(label.ell(), n) * sign)
}

/// The single-site evaluated action of `gen` at `site`, identity elsewhere.
pub fn site_action(
    space: &Space,
    site: usize,
    gen: Gen,
    eval_x: C64,
    params: &SpectralParams,
) -> GradedOperator {
    let (lower, raise) = if gen.raises() { (0, 1) } else { (1, 0) };
    let mut op = GradedOperator::zero(space, space, lower, raise);
    for i in 0..space.dim() {
        let t = space.tuple(i);
        if let Some((coeff, n_out)) = step(t[site], space.sites()[site], gen, eval_x, params) {
            let mut t_out = t.to_vec();
            t_out[site] = n_out;
            if let Some(j) = space.index_of(&t_out) {
                op.add_entry(j, i, coeff);
            }
        }
    }
    op
}

/// One evaluated generator step at a single site: (coefficient, new index).
fn step(
    n: u32,
    label: SpinLabel,
    gen: Gen,
    eval_x: C64,
    params: &SpectralParams,
) -> Option<(C64, u32)> {
    let ell = label.ell();
    match gen {
        Gen::E1 | Gen::F0 => {
            if n == 1 {
                return None;
            }
            let phase = if gen == Gen::E1 { -eval_x } else { eval_x };
            Some((phase.exp() * lower_coeff(ell, n, params), n - 1))
        }
        Gen::F1 | Gen::E0 => {
            if let Some(cap) = label.cap() {
                if n >= cap {
                    return None;
                }
            }
            let phase = if gen == Gen::F1 { eval_x } else { -eval_x };
            Some((phase.exp(), n + 1))
        }
    }
}

/// Iterated (opposite) coproduct of `gen` evaluated at per-site points.
///
/// For the coproduct, e-type generators carry the Cartan dressing on legs to
/// the left of the acting site and f-type on legs to the right; the opposite
/// coproduct mirrors this.
pub fn coproduct_action(
    space: &Space,
    gen: Gen,
    evals: &[C64],
    params: &SpectralParams,
    opposite: bool,
) -> GradedOperator {
    assert_eq!(evals.len(), space.sites().len());
    let (lower, raise) = if gen.raises() { (0, 1) } else { (1, 0) };
    let mut op = GradedOperator::zero(space, space, lower, raise);

    // Sign of the p^(h1) exponent on pass-through legs.
    let dress_sign = match gen {
        Gen::E1 => -1.0,
        Gen::E0 => 1.0,
        Gen::F1 => 1.0,
        Gen::F0 => -1.0,
    };
    // e-type dresses left of the acting site, f-type right; swapped for the
    // opposite coproduct.
    let e_type = matches!(gen, Gen::E1 | Gen::E0);
    let dress_left = e_type != opposite;

    let m = space.sites().len();
    for i in 0..space.dim() {
        let t = space.tuple(i);
        for j in 0..m {
            let Some((mut coeff, n_out)) = step(t[j], space.sites()[j], gen, evals[j], params)
            else {
                continue;
            };
            for (s, (&n, &label)) in t.iter().zip(space.sites()).enumerate() {
                if s == j {
                    continue;
                }
                let dressed = if dress_left { s < j } else { s > j };
                if dressed {
                    coeff *= cartan_factor(label, n, dress_sign, params);
                }
            }
            let mut t_out = t.to_vec();
            t_out[j] = n_out;
            if let Some(idx) = space.index_of(&t_out) {
                op.add_entry(idx, i, coeff);
            }
        }
    }
    op
}

/// Diagonal action of p^(lambda h1) through the iterated coproduct.
pub fn cartan_action(space: &Space, lambda: C64, params: &SpectralParams) -> GradedOperator {
    let mut op = GradedOperator::zero(space, space, 0, 0);
    for i in 0..space.dim() {
        let t = space.tuple(i);
        let mut w = C64::new(0.0, 0.0);
        for (&n, label) in t.iter().zip(space.sites()) {
            w += weight_exponent(label.ell(), n);
        }
        op.add_entry(i, i, params.p_pow(lambda * w));
    }
    op
}
