//! Bulk and boundary monodromy matrices, their entry operators, normalized
//! boundary creation operators, the pseudo-vacuum, off-shell Bethe vectors
//! (operator route and explicit-expansion oracle), and the boundary transfer
//! operator.

use crate::rops::{l_entries, l_explicit, r_6vertex};
use crate::spaces::{GradedOperator, GradedSpace, GradedVector, Space, SpinLabel};
use crate::special::{crossing_scalar, guard_denominator};
use crate::{C64, Result, SpectralParams, ToleranceProfile};

const C_ONE: C64 = C64::new(1.0, 0.0);

/// An inhomogeneous open chain: site spins, inhomogeneities, parameters and
/// the state-space level cutoff.
#[derive(Debug, Clone)]
pub struct Chain {
    pub spins: Vec<SpinLabel>,
    pub t: Vec<C64>,
    pub params: SpectralParams,
    pub cutoff: usize,
    state: Space,
    combined: Space,
}

impl Chain {
    pub fn new(spins: Vec<SpinLabel>, t: Vec<C64>, params: SpectralParams, cutoff: usize) -> Self {
        assert_eq!(spins.len(), t.len());
        assert!(!spins.is_empty());
        let state = GradedSpace::new(spins.clone(), cutoff);
        let combined = GradedSpace::new(
            std::iter::once(SpinLabel::half())
                .chain(spins.iter().copied())
                .collect(),
            cutoff + 1,
        );
        Self {
            spins,
            t,
            params,
            cutoff,
            state,
            combined,
        }
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    /// The state space M^(l_1) (x) ... (x) M^(l_N) at the chain cutoff.
    pub fn state_space(&self) -> &Space {
        &self.state
    }

    /// Auxiliary spin-1/2 leg prepended to the state space, one level higher.
    pub fn combined_space(&self) -> &Space {
        &self.combined
    }

    /// Pseudo-vacuum: the tensor product of highest-weight vectors.
    pub fn pseudo_vacuum(&self) -> GradedVector {
        GradedVector::pseudo_vacuum(&self.state)
    }

    /// Site visit order of the permutation s_r ... s_(N-1) (r is 0-based):
    /// all sites in order with site r moved to the end. r = N-1 gives the
    /// identity.
    pub fn cycle_order(&self, r: usize) -> Vec<usize> {
        let n = self.len();
        assert!(r < n);
        let mut order: Vec<usize> = (0..n).filter(|&s| s != r).collect();
        order.push(r);
        order
    }

    pub fn identity_order(&self) -> Vec<usize> {
        (0..self.len()).collect()
    }
}

/// The four entry operators of an auxiliary-space 2x2 monodromy block
/// structure, acting on the state space. A and D preserve the state level,
/// B raises it by one, C lowers it by one.
#[derive(Debug, Clone)]
pub struct MonodromyEntries {
    pub a: GradedOperator,
    pub b: GradedOperator,
    pub c: GradedOperator,
    pub d: GradedOperator,
}

/// Bulk monodromy T_sigma(x; t) = L^(l_sigma(1))(x - t_sigma(1)) ...
/// L^(l_sigma(N))(x - t_sigma(N)) on the combined space.
pub fn build_t(
    chain: &Chain,
    order: &[usize],
    x: C64,
    profile: &ToleranceProfile,
) -> Result<GradedOperator> {
    build_t_on(
        chain,
        chain.combined_space(),
        0,
        &(1..=chain.len()).collect::<Vec<_>>(),
        order,
        x,
        profile,
    )
}

/// Same product embedded into an arbitrary host space: `aux_leg` carries the
/// auxiliary spin-1/2 site and `state_legs[s]` the chain site s.
fn build_t_on(
    chain: &Chain,
    host: &Space,
    aux_leg: usize,
    state_legs: &[usize],
    order: &[usize],
    x: C64,
    profile: &ToleranceProfile,
) -> Result<GradedOperator> {
    assert_eq!(order.len(), chain.len());
    let mut acc: Option<GradedOperator> = None;
    for &site in order {
        let l = l_explicit(
            chain.spins[site],
            x - chain.t[site],
            host.cutoff(),
            &chain.params,
            profile,
        )?;
        let factor = GradedOperator::embed(host, &[aux_leg, state_legs[site]], &l.op);
        acc = Some(match acc {
            None => factor,
            Some(prev) => prev.compose(&factor),
        });
    }
    Ok(acc.expect("non-empty chain"))
}

/// Split a combined-space operator into its four auxiliary-space entries.
pub fn extract_entries(chain: &Chain, op: &GradedOperator) -> MonodromyEntries {
    let combined = chain.combined_space();
    let state = chain.state_space();
    assert!(op.domain.same_structure(combined));
    let mut a = GradedOperator::zero(state, state, 0, 0);
    let mut b = GradedOperator::zero(state, state, 0, 1);
    let mut c = GradedOperator::zero(state, state, 1, 0);
    let mut d = GradedOperator::zero(state, state, 0, 0);
    for (&(in_l, out_l), blk) in op.blocks() {
        let in_start = combined.level_range(in_l).start;
        let out_start = combined.level_range(out_l).start;
        for col in 0..blk.ncols() {
            let t_in = combined.tuple(in_start + col);
            let Some(i_state) = state.index_of(&t_in[1..]) else {
                continue;
            };
            for row in 0..blk.nrows() {
                let v = blk[(row, col)];
                if v == C64::new(0.0, 0.0) {
                    continue;
                }
                let t_out = combined.tuple(out_start + row);
                let Some(j_state) = state.index_of(&t_out[1..]) else {
                    continue;
                };
                match (t_out[0], t_in[0]) {
                    (1, 1) => a.add_entry(j_state, i_state, v),
                    (1, 2) => b.add_entry(j_state, i_state, v),
                    (2, 1) => c.add_entry(j_state, i_state, v),
                    (2, 2) => d.add_entry(j_state, i_state, v),
                    _ => unreachable!("auxiliary leg is 2-dimensional"),
                }
            }
        }
    }
    MonodromyEntries { a, b, c, d }
}

/// Inverse of the auxiliary-space K-matrix, embedded at `aux_leg`.
fn k_aux_inverse(
    host: &Space,
    aux_leg: usize,
    xi: C64,
    x: C64,
    profile: &ToleranceProfile,
) -> Result<GradedOperator> {
    let den = guard_denominator(
        (xi - x).sinh(),
        "auxiliary K inverse sinh(xi-x)",
        profile,
    )?;
    let aux = GradedSpace::single(SpinLabel::half(), 1);
    let mut k = GradedOperator::zero(&aux, &aux, 0, 0);
    k.add_entry(0, 0, C_ONE);
    k.add_entry(1, 1, (xi + x).sinh() / den);
    Ok(GradedOperator::embed(host, &[aux_leg], &k))
}

/// Boundary monodromy U_sigma(x; t) = T_sigma(x)^(-1) K(x)^(-1) T_sigma(-x)
/// on the combined space, with the inverse taken per combined-level block.
pub fn build_u(
    chain: &Chain,
    order: &[usize],
    xi: C64,
    x: C64,
    profile: &ToleranceProfile,
) -> Result<GradedOperator> {
    let t_pos = build_t(chain, order, x, profile)?;
    let t_neg = build_t(chain, order, -x, profile)?;
    let t_inv = t_pos.blockwise_inverse(1e10, "bulk monodromy inverse")?;
    let k_inv = k_aux_inverse(chain.combined_space(), 0, xi, x, profile)?;
    Ok(t_inv.compose(&k_inv).compose(&t_neg))
}

/// Entries of the boundary monodromy operator.
pub fn boundary_entries(
    chain: &Chain,
    order: &[usize],
    xi: C64,
    x: C64,
    profile: &ToleranceProfile,
) -> Result<MonodromyEntries> {
    let u = build_u(chain, order, xi, x, profile)?;
    Ok(extract_entries(chain, &u))
}

/// The scalar prefactor of the renormalized boundary creation operator.
fn bbar_prefactor(chain: &Chain, xi: C64, x: C64, profile: &ToleranceProfile) -> Result<C64> {
    let eta = chain.params.eta;
    let mut pre = (xi - x - eta * 0.5).sinh() * (x * 2.0).sinh();
    let den = guard_denominator(
        (x * 2.0 + eta).sinh(),
        "bbar prefactor sinh(2x+eta)",
        profile,
    )?;
    pre /= den;
    for (tr, spin) in chain.t.iter().zip(&chain.spins) {
        let ell = spin.ell();
        let d = guard_denominator(
            (x - tr + ell * eta).sinh(),
            "bbar prefactor sinh(x-t_r+ell eta)",
            profile,
        )?;
        pre *= (x - tr - ell * eta).sinh() / d;
    }
    Ok(pre)
}

/// Renormalized boundary creation operator
/// Bbar(x; t) = prefactor(x) * B-entry of U at argument x + eta/2.
pub fn bbar(
    chain: &Chain,
    order: &[usize],
    xi: C64,
    x: C64,
    profile: &ToleranceProfile,
) -> Result<GradedOperator> {
    let pre = bbar_prefactor(chain, xi, x, profile)?;
    let entries = boundary_entries(chain, order, xi, x + chain.params.eta * 0.5, profile)?;
    Ok(entries.b.scale(pre))
}

/// Off-shell Bethe vector: prod_j Bbar(x_j) applied to the pseudo-vacuum.
/// Needs cutoff >= number of spectral parameters.
pub fn bethe_vector(
    chain: &Chain,
    xi: C64,
    xs: &[C64],
    profile: &ToleranceProfile,
) -> Result<GradedVector> {
    let mut v = chain.pseudo_vacuum();
    let order = chain.identity_order();
    for &x in xs.iter().rev() {
        let op = bbar(chain, &order, xi, x, profile)?;
        v = op.apply(&v)?;
    }
    Ok(v)
}

/// Explicit double-sum expansion of the off-shell Bethe vector over sign
/// patterns and subsets, for visit orders of the cycle form (site r moved
/// last). Enumeration is lexicographic over (signs, subset) for determinism.
pub fn bethe_expansion(
    chain: &Chain,
    xi: C64,
    xs: &[C64],
    order: &[usize],
    profile: &ToleranceProfile,
) -> Result<GradedVector> {
    assert_eq!(order.len(), chain.len());
    let s = xs.len();
    assert!(s <= 16, "sign/subset enumeration limited to S <= 16");
    let params = &chain.params;
    let eta = params.eta;
    let state = chain.state_space();
    let last = *order.last().expect("non-empty order");
    let ell_last = chain.spins[last].ell();
    let t_last = chain.t[last];

    // Single-site creation operators at the distinguished site are applied
    // repeatedly; the inner monodromy acts trivially on that site.
    let omega = chain.pseudo_vacuum();
    let mut total = GradedVector::zero(state);

    for eps_bits in 0..(1usize << s) {
        let eps: Vec<f64> = (0..s)
            .map(|i| if eps_bits >> i & 1 == 1 { 1.0 } else { -1.0 })
            .collect();
        let ex: Vec<C64> = (0..s).map(|i| xs[i] * eps[i]).collect();
        let shifted: Vec<C64> = (0..s).map(|i| -ex[i] - eta * 0.5).collect();

        // Sign- and chain-dependent part common to all subsets.
        let mut base = C_ONE;
        for i in 0..s {
            base *= (xi - ex[i] - eta * 0.5).sinh() * eps[i];
            for (tr, spin) in chain.t.iter().zip(&chain.spins) {
                let ell = spin.ell();
                let den = guard_denominator(
                    (ex[i] - tr + ell * eta).sinh(),
                    "bethe expansion sinh(eps x - t_r + ell eta)",
                    profile,
                )?;
                base *= (ex[i] - tr - ell * eta).sinh() / den;
            }
        }
        for i in 0..s {
            for j in (i + 1)..s {
                let den = guard_denominator(
                    (ex[i] + ex[j]).sinh(),
                    "bethe expansion sinh(eps x_i + eps x_j)",
                    profile,
                )?;
                base *= (ex[i] + ex[j] + eta).sinh() / den;
            }
        }

        for subset_bits in 0..(1usize << s) {
            let in_subset = |i: usize| subset_bits >> i & 1 == 1;
            let mut weight = base;
            for i in 0..s {
                if !in_subset(i) {
                    continue;
                }
                let den = guard_denominator(
                    (shifted[i] - t_last + (C64::new(0.5, 0.0) + ell_last) * eta).sinh(),
                    "bethe expansion subset denominator",
                    profile,
                )?;
                weight *=
                    (shifted[i] - t_last + (C64::new(0.5, 0.0) - ell_last) * eta).sinh() / den;
                for j in 0..s {
                    if in_subset(j) {
                        continue;
                    }
                    let den = guard_denominator(
                        (shifted[i] - shifted[j]).sinh(),
                        "bethe expansion pair denominator",
                        profile,
                    )?;
                    weight *= (shifted[i] - shifted[j] + eta).sinh() / den;
                }
            }

            // Inner-monodromy creation operators for subset members...
            let mut v = omega.clone();
            for i in (0..s).rev() {
                if !in_subset(i) {
                    continue;
                }
                let inner = inner_b_entry(chain, order, shifted[i], profile)?;
                v = inner.apply(&v)?;
            }
            // ... then single-site creation at the distinguished site for the rest.
            for j in (0..s).rev() {
                if in_subset(j) {
                    continue;
                }
                let single = single_site_b(chain, last, shifted[j] - t_last, profile)?;
                v = single.apply(&v)?;
            }
            total.add_assign_scaled(&v, weight);
        }
    }
    Ok(total)
}

/// B-entry of the product of the first N-1 L-factors of the visit order,
/// acting trivially on the distinguished last site.
fn inner_b_entry(
    chain: &Chain,
    order: &[usize],
    x: C64,
    profile: &ToleranceProfile,
) -> Result<GradedOperator> {
    let combined = chain.combined_space();
    let mut acc = GradedOperator::identity(combined);
    for &site in &order[..order.len() - 1] {
        let l = l_explicit(
            chain.spins[site],
            x - chain.t[site],
            combined.cutoff(),
            &chain.params,
            profile,
        )?;
        acc = acc.compose(&GradedOperator::embed(combined, &[0, site + 1], &l.op));
    }
    Ok(extract_entries(chain, &acc).b)
}

/// Single-site B operator at one chain site, embedded into the state space.
fn single_site_b(
    chain: &Chain,
    site: usize,
    arg: C64,
    profile: &ToleranceProfile,
) -> Result<GradedOperator> {
    let entries = l_entries(
        chain.spins[site],
        arg,
        chain.cutoff,
        &chain.params,
        profile,
    )?;
    Ok(GradedOperator::embed(
        chain.state_space(),
        &[site],
        &entries.b,
    ))
}

/// Boundary transfer operator
/// A(x) + [sinh(xi+ - x + eta)/sinh(xi+ + x - eta)] D(x) built from the
/// boundary monodromy at xi-.
pub fn transfer(
    chain: &Chain,
    xi_plus: C64,
    xi_minus: C64,
    x: C64,
    profile: &ToleranceProfile,
) -> Result<GradedOperator> {
    let eta = chain.params.eta;
    let den = guard_denominator(
        (xi_plus + x - eta).sinh(),
        "transfer sinh(xi+ + x - eta)",
        profile,
    )?;
    let coeff = (xi_plus - x + eta).sinh() / den;
    let entries = boundary_entries(chain, &chain.identity_order(), xi_minus, x, profile)?;
    Ok(entries.a.add(&entries.d.scale(coeff)))
}

/// Pseudo-vacuum eigenvalue of the D entry: prod_r theta^(l_r)(t_r - x).
pub fn d_eigenvalue(chain: &Chain, x: C64, profile: &ToleranceProfile) -> Result<C64> {
    let mut acc = C_ONE;
    for (tr, spin) in chain.t.iter().zip(&chain.spins) {
        acc *= crossing_scalar(spin.ell(), tr - x, &chain.params, profile)?;
    }
    Ok(acc)
}

/// Relative residual of the RTT relation on a host with two auxiliary legs:
/// R_00'(x-y) T_0(x) T_0'(y) = T_0'(y) T_0(x) R_00'(x-y).
pub fn check_rtt(
    chain: &Chain,
    order: &[usize],
    x: C64,
    y: C64,
    profile: &ToleranceProfile,
) -> Result<f64> {
    let (host, state_legs) = double_aux_host(chain);
    let t0 = build_t_on(chain, &host, 0, &state_legs, order, x, profile)?;
    let t1 = build_t_on(chain, &host, 1, &state_legs, order, y, profile)?;
    let r = GradedOperator::embed(
        &host,
        &[0, 1],
        &r_6vertex(x - y, &chain.params, profile)?.op,
    );
    let lhs = r.compose(&t0).compose(&t1);
    let rhs = t1.compose(&t0).compose(&r);
    Ok(crate::spaces::op_residual(&lhs, &rhs))
}

/// Relative residual of the boundary exchange relation
/// R_00'(y-x) U_0(x) R_00'(-x-y) U_0'(y) = U_0'(y) R_00'(-x-y) U_0(x) R_00'(y-x).
pub fn check_ru(
    chain: &Chain,
    order: &[usize],
    xi: C64,
    x: C64,
    y: C64,
    profile: &ToleranceProfile,
) -> Result<f64> {
    let (host, state_legs) = double_aux_host(chain);
    let u0 = {
        let t_pos = build_t_on(chain, &host, 0, &state_legs, order, x, profile)?;
        let t_neg = build_t_on(chain, &host, 0, &state_legs, order, -x, profile)?;
        let k_inv = k_aux_inverse(&host, 0, xi, x, profile)?;
        t_pos
            .blockwise_inverse(1e10, "RU monodromy inverse")?
            .compose(&k_inv)
            .compose(&t_neg)
    };
    let u1 = {
        let t_pos = build_t_on(chain, &host, 1, &state_legs, order, y, profile)?;
        let t_neg = build_t_on(chain, &host, 1, &state_legs, order, -y, profile)?;
        let k_inv = k_aux_inverse(&host, 1, xi, y, profile)?;
        t_pos
            .blockwise_inverse(1e10, "RU monodromy inverse")?
            .compose(&k_inv)
            .compose(&t_neg)
    };
    let r_minus = GradedOperator::embed(
        &host,
        &[0, 1],
        &r_6vertex(y - x, &chain.params, profile)?.op,
    );
    let r_sum = GradedOperator::embed(
        &host,
        &[0, 1],
        &r_6vertex(-x - y, &chain.params, profile)?.op,
    );
    let lhs = r_minus.compose(&u0).compose(&r_sum).compose(&u1);
    let rhs = u1.compose(&r_sum).compose(&u0).compose(&r_minus);
    Ok(crate::spaces::op_residual(&lhs, &rhs))
}

fn double_aux_host(chain: &Chain) -> (Space, Vec<usize>) {
    let host = GradedSpace::new(
        [SpinLabel::half(), SpinLabel::half()]
            .into_iter()
            .chain(chain.spins.iter().copied())
            .collect(),
        chain.cutoff + 2,
    );
    let legs = (2..2 + chain.len()).collect();
    (host, legs)
}
