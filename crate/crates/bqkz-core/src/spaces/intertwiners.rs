//! Fusion intertwiners between finite modules, the weight-reversal map used
//! by crossing symmetry, and the projection from a truncated generic module
//! onto its finite quotient.

use super::{GradedOperator, GradedSpace, Space, SpinLabel};
use crate::{C64, SpectralParams};

const C_ONE: C64 = C64::new(1.0, 0.0);

fn finite_single(twice: u32) -> Space {
    GradedSpace::single(SpinLabel::finite(twice), twice as usize)
}

/// Injection V^(k+1/2) -> V^(1/2) (x) V^k,
/// v_n -> e^(eta (n-1)/2) v_1 (x) v_n
///      + e^(-eta (n-2-2k)/2) (sinh((n-1) eta)/sinh(eta)) v_2 (x) v_(n-1).
///
/// As an intertwiner it relates evaluation points x -> (x - k eta, x + eta/2).
pub fn iota_map(twice_k: u32, params: &SpectralParams) -> GradedOperator {
    let eta = params.eta;
    let k = twice_k as f64 / 2.0;
    let domain = finite_single(twice_k + 1);
    let codomain = GradedSpace::pair(
        SpinLabel::half(),
        SpinLabel::finite(twice_k),
        twice_k as usize + 1,
    );
    let mut op = GradedOperator::zero(&domain, &codomain, 0, 0);
    for n in 1..=(twice_k + 2) {
        let i_in = domain.index_of(&[n]).unwrap();
        let c1 = (eta * ((n as f64 - 1.0) / 2.0)).exp();
        if let Some(j) = codomain.index_of(&[1, n]) {
            op.add_entry(j, i_in, c1);
        }
        if n >= 2 {
            let c2 = (-eta * ((n as f64 - 2.0 - 2.0 * k) / 2.0)).exp()
                * (eta * (n as f64 - 1.0)).sinh()
                / eta.sinh();
            if let Some(j) = codomain.index_of(&[2, n - 1]) {
                op.add_entry(j, i_in, c2);
            }
        }
    }
    op
}

/// Injection V^(k+1/2) -> V^k (x) V^(1/2): the leg-swapped form of `iota_map`,
/// relating evaluation points x -> (x - eta/2, x + k eta).
pub fn j_map(twice_k: u32, params: &SpectralParams) -> GradedOperator {
    let iota = iota_map(twice_k, params);
    let p = GradedOperator::permutation(&iota.codomain, &[1, 0]);
    p.compose(&iota)
}

/// Weight-reversal isomorphism on V^k: w(v_n) = c_n v_(2k+2-n) with c_1 = 1
/// and c_(n+1) = -c_n p^(2k+1-2n).
pub fn w_map(twice_k: u32, params: &SpectralParams) -> GradedOperator {
    let dim = twice_k + 1;
    let space = finite_single(twice_k);
    let mut op = GradedOperator::zero(&space, &space, twice_k as usize, twice_k as usize);
    let mut c = C_ONE;
    for n in 1..=dim {
        let i_in = space.index_of(&[n]).unwrap();
        let j = space.index_of(&[dim + 1 - n]).unwrap();
        op.add_entry(j, i_in, c);
        c = -c * params.p_pow(C64::new(twice_k as f64 + 1.0 - 2.0 * n as f64, 0.0));
    }
    op
}

/// Canonical projection from a truncated generic site with half-integer
/// weight onto the finite quotient: m_n -> v_n for n <= 2k+1, else 0.
pub fn projector_map(domain: &Space, twice_k: u32) -> GradedOperator {
    assert_eq!(domain.sites().len(), 1);
    let codomain = GradedSpace::single(
        SpinLabel::finite(twice_k),
        (twice_k as usize).min(domain.cutoff()),
    );
    let mut op = GradedOperator::zero(domain, &codomain, 0, 0);
    for i in 0..domain.dim() {
        let n = domain.tuple(i)[0];
        if let Some(j) = codomain.index_of(&[n]) {
            op.add_entry(j, i, C_ONE);
        }
    }
    op
}

/// The 2x2 matrix [[0, -i], [i, 0]] on a spin-1/2 site.
pub fn sigma_y() -> GradedOperator {
    let space = finite_single(1);
    let mut op = GradedOperator::zero(&space, &space, 1, 1);
    op.add_entry(1, 0, C64::new(0.0, 1.0));
    op.add_entry(0, 1, C64::new(0.0, -1.0));
    op
}
