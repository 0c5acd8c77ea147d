//! R- and L-operators on tensor products of evaluation modules.
//!
//! Three construction routes are provided and cross-checked: the explicit
//! spin-1/2 L-operator, a level-recursive intertwining solve valid for any
//! pair of spins, and the fusion of lower-spin L-operators through the
//! injections of `spaces::intertwiners`.

use nalgebra::DMatrix;

use crate::spaces::{
    coproduct_action, iota_map, j_map, op_residual, w_map, Gen, GradedOperator, GradedSpace,
    Space, SpinLabel,
};
use crate::special::{crossing_scalar, guard_denominator};
use crate::{C64, Error, Result, SpectralParams, ToleranceProfile};

const C_ZERO: C64 = C64::new(0.0, 0.0);
const C_ONE: C64 = C64::new(1.0, 0.0);

/// Construction route of an [`ROperator`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Explicit,
    Solve,
    Fusion,
}

/// A normalized two-leg R- or L-operator at a difference argument `x`.
///
/// The operator preserves the total pair level exactly, fixes the tensor
/// product of highest-weight vectors, and records the residual of whichever
/// defining relation produced it.
#[derive(Debug, Clone)]
pub struct ROperator {
    pub first: SpinLabel,
    pub second: SpinLabel,
    pub x: C64,
    pub op: GradedOperator,
    pub route: Route,
    pub residual: f64,
}

impl ROperator {
    pub fn space(&self) -> &Space {
        &self.op.domain
    }
}

/// Entry operators of a spin-1/2 auxiliary L-operator, as single-site
/// operators on the state site.
#[derive(Debug, Clone)]
pub struct LEntries {
    pub a: GradedOperator,
    pub b: GradedOperator,
    pub c: GradedOperator,
    pub d: GradedOperator,
}

/// The four explicit entry operators of L^(1/2,ell)(x) on a single state site.
pub fn l_entries(
    ell_label: SpinLabel,
    x: C64,
    cutoff: usize,
    params: &SpectralParams,
    profile: &ToleranceProfile,
) -> Result<LEntries> {
    let eta = params.eta;
    let ell = ell_label.ell();
    let den = guard_denominator(
        (x + (ell + 0.5) * eta).sinh(),
        "L-operator denominator sinh(x + (1/2 + ell) eta)",
        profile,
    )?;
    let space = GradedSpace::single(ell_label, cutoff);
    let mut a = GradedOperator::zero(&space, &space, 0, 0);
    let mut b = GradedOperator::zero(&space, &space, 0, 1);
    let mut c = GradedOperator::zero(&space, &space, 1, 0);
    let mut d = GradedOperator::zero(&space, &space, 0, 0);
    let cap = ell_label.cap();
    for i in 0..space.dim() {
        let n = space.tuple(i)[0];
        let nf = n as f64;
        a.add_entry(i, i, (x + (ell + C64::new(1.5 - nf, 0.0)) * eta).sinh() / den);
        d.add_entry(i, i, (x + (-ell + C64::new(nf - 0.5, 0.0)) * eta).sinh() / den);
        if cap.map_or(true, |c| n < c) {
            if let Some(j) = space.index_of(&[n + 1]) {
                let coeff = eta.sinh() / den * (((-ell + C64::new(nf - 0.5, 0.0)) * eta).exp());
                b.add_entry(j, i, coeff);
            }
        }
        if n > 1 {
            let j = space.index_of(&[n - 1]).expect("lowering stays in space");
            let coeff = (eta * (nf - 1.0)).sinh()
                * ((ell * 2.0 + C64::new(2.0 - nf, 0.0)) * eta).sinh()
                / (eta.sinh() * den)
                * (((ell + C64::new(1.5 - nf, 0.0)) * eta).exp());
            c.add_entry(j, i, coeff);
        }
    }
    Ok(LEntries { a, b, c, d })
}

/// Assemble a two-leg operator on V^(1/2) (x) state from entry operators:
/// columns indexed by the auxiliary basis vector, A/C act from v_1, B/D from v_2.
fn assemble_aux_state(entries: &LEntries, cutoff: usize) -> GradedOperator {
    let state = &entries.a.domain;
    let pair = GradedSpace::new(
        std::iter::once(SpinLabel::half())
            .chain(state.sites().iter().copied())
            .collect(),
        cutoff,
    );
    let mut op = GradedOperator::zero(&pair, &pair, 0, 0);
    let parts: [(&GradedOperator, u32, u32); 4] = [
        (&entries.a, 1, 1),
        (&entries.b, 2, 1),
        (&entries.c, 1, 2),
        (&entries.d, 2, 2),
    ];
    for i in 0..pair.dim() {
        let t = pair.tuple(i);
        let aux_in = t[0];
        let state_in = &t[1..];
        let Some(si) = state.index_of(state_in) else {
            continue;
        };
        for (e, a_in, a_out) in parts {
            if a_in != aux_in {
                continue;
            }
            let in_l = state.level_of(si);
            let (lo, hi) = e.band();
            let from = in_l.saturating_sub(lo);
            let to = (in_l + hi).min(state.num_levels() - 1);
            for out_l in from..=to {
                let Some(blk) = e.block(in_l, out_l) else {
                    continue;
                };
                let col = si - state.level_range(in_l).start;
                let start = state.level_range(out_l).start;
                for r in 0..blk.nrows() {
                    let v = blk[(r, col)];
                    if v == C_ZERO {
                        continue;
                    }
                    let mut t_out = t.to_vec();
                    t_out[0] = a_out;
                    t_out[1..].copy_from_slice(state.tuple(start + r));
                    if let Some(j) = pair.index_of(&t_out) {
                        op.add_entry(j, i, v);
                    }
                }
            }
        }
    }
    op
}

/// Explicit L^(1/2,ell)(x) on V^(1/2) (x) M^ell (or V^ell), normalized to fix
/// v_1 (x) m_1.
pub fn l_explicit(
    ell_label: SpinLabel,
    x: C64,
    cutoff: usize,
    params: &SpectralParams,
    profile: &ToleranceProfile,
) -> Result<ROperator> {
    let entries = l_entries(ell_label, x, cutoff, params, profile)?;
    let op = assemble_aux_state(&entries, cutoff);
    Ok(ROperator {
        first: SpinLabel::half(),
        second: ell_label,
        x,
        op,
        route: Route::Explicit,
        residual: 0.0,
    })
}

/// The 6-vertex R-operator on V^(1/2) (x) V^(1/2).
pub fn r_6vertex(x: C64, params: &SpectralParams, profile: &ToleranceProfile) -> Result<ROperator> {
    l_explicit(SpinLabel::half(), x, 2, params, profile)
}

fn hstack(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    assert_eq!(a.nrows(), b.nrows());
    let mut m = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    m.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
    m.view_mut((0, a.ncols()), (b.nrows(), b.ncols())).copy_from(b);
    m
}

/// Solve X * m = rhs in the least-squares sense, returning (X, residual, cond).
fn solve_from_right(
    m: &DMatrix<C64>,
    rhs: &DMatrix<C64>,
    context: &'static str,
) -> Result<(DMatrix<C64>, f64, f64)> {
    let mt = m.transpose();
    let svd = mt.clone().svd(true, true);
    let (smax, smin) = (svd.singular_values.max(), svd.singular_values.min());
    let cond = if smin == 0.0 { f64::INFINITY } else { smax / smin };
    if cond > 1e10 {
        return Err(Error::IllConditioned { context, cond });
    }
    let xt = svd
        .solve(&rhs.transpose(), 0.0)
        .map_err(|_| Error::IllConditioned { context, cond })?;
    let x = xt.transpose();
    let scale = rhs.norm() + 1.0;
    let res = (&x * m - rhs).norm() / scale;
    Ok((x, res, cond))
}

/// Solve m * x = rhs in the least-squares sense (m injective).
fn solve_from_left(
    m: &DMatrix<C64>,
    rhs: &DMatrix<C64>,
    context: &'static str,
) -> Result<(DMatrix<C64>, f64, f64)> {
    let svd = m.clone().svd(true, true);
    let (smax, smin) = (svd.singular_values.max(), svd.singular_values.min());
    let cond = if smin == 0.0 { f64::INFINITY } else { smax / smin };
    if cond > 1e10 {
        return Err(Error::IllConditioned { context, cond });
    }
    let x = svd
        .solve(rhs, 0.0)
        .map_err(|_| Error::IllConditioned { context, cond })?;
    let res = (m * &x - rhs).norm() / (rhs.norm() + 1.0);
    Ok((x, res, cond))
}

/// Normalized R-operator on the pair space built level block by level block
/// from the two level-raising intertwining relations, with evaluation points
/// (x, 0).
pub fn solve_r(
    first: SpinLabel,
    second: SpinLabel,
    x: C64,
    cutoff: usize,
    params: &SpectralParams,
    profile: &ToleranceProfile,
) -> Result<ROperator> {
    let space = GradedSpace::pair(first, second, cutoff);
    let evals = [x, C_ZERO];
    let f_dir = coproduct_action(&space, Gen::F1, &evals, params, false);
    let f_opp = coproduct_action(&space, Gen::F1, &evals, params, true);
    let e0_dir = coproduct_action(&space, Gen::E0, &evals, params, false);
    let e0_opp = coproduct_action(&space, Gen::E0, &evals, params, true);

    let levels = space.num_levels();
    let mut r = GradedOperator::zero(&space, &space, 0, 0);
    r.set_block(0, 0, DMatrix::identity(1, 1));
    for l in 0..levels.saturating_sub(1) {
        let d_in = space.level_dim(l);
        let d_out = space.level_dim(l + 1);
        let zero_blk = DMatrix::zeros(d_out, d_in);
        let f_blk = f_dir.block(l, l + 1).unwrap_or(&zero_blk);
        let e_blk = e0_dir.block(l, l + 1).unwrap_or(&zero_blk);
        let fo_blk = f_opp.block(l, l + 1).unwrap_or(&zero_blk);
        let eo_blk = e0_opp.block(l, l + 1).unwrap_or(&zero_blk);
        let r_prev = r.block(l, l).expect("previous block solved");
        let m = hstack(f_blk, e_blk);
        let rhs = hstack(&(fo_blk * r_prev), &(eo_blk * r_prev));
        let (x_blk, res, _cond) = solve_from_right(&m, &rhs, "solve_r level block")?;
        if res > profile.rel_tol {
            return Err(Error::ResidualTooLarge {
                context: "solve_r level block",
                residual: res,
                tol: profile.rel_tol,
            });
        }
        r.set_block(l + 1, l + 1, x_blk);
    }

    let residual = intertwining_residual(&r, &space, &evals, params);
    if residual > profile.rel_tol {
        return Err(Error::ResidualTooLarge {
            context: "solve_r consistency over all generators",
            residual,
            tol: profile.rel_tol,
        });
    }
    Ok(ROperator {
        first,
        second,
        x,
        op: r,
        route: Route::Solve,
        residual,
    })
}

/// Maximum relative residual of R (pi (x) pi)(Delta(g)) = (pi (x) pi)(Delta_op(g)) R
/// over all four evaluated generators, on the blocks fully represented at the
/// cutoff.
pub fn intertwining_residual(
    r: &GradedOperator,
    space: &Space,
    evals: &[C64],
    params: &SpectralParams,
) -> f64 {
    let mut worst: f64 = 0.0;
    for gen in [Gen::E1, Gen::F1, Gen::E0, Gen::F0] {
        let dir = coproduct_action(space, gen, evals, params, false);
        let opp = coproduct_action(space, gen, evals, params, true);
        worst = worst.max(op_residual(&r.compose(&dir), &opp.compose(r)));
    }
    worst
}

/// Higher-spin L-operator L^(K,ell)(x) on V^K (x) M^ell by iterated fusion
/// from the explicit spin-1/2 stage.
pub fn fuse_l(
    twice_target: u32,
    ell_label: SpinLabel,
    x: C64,
    cutoff: usize,
    params: &SpectralParams,
    profile: &ToleranceProfile,
) -> Result<ROperator> {
    assert!(twice_target >= 1);
    if twice_target == 1 {
        return l_explicit(ell_label, x, cutoff, params, profile);
    }
    let twice_k = twice_target - 1;
    let k = twice_k as f64 / 2.0;
    let eta = params.eta;

    let inner_half = l_explicit(ell_label, x - eta * k, cutoff, params, profile)?;
    let inner_k = fuse_l(twice_k, ell_label, x + eta * 0.5, cutoff, params, profile)?;

    let triple = GradedSpace::new(
        vec![SpinLabel::half(), SpinLabel::finite(twice_k), ell_label],
        cutoff,
    );
    let l13 = GradedOperator::embed(&triple, &[0, 2], &inner_half.op);
    let l23 = GradedOperator::embed(&triple, &[1, 2], &inner_k.op);

    let target_pair = GradedSpace::pair(SpinLabel::finite(twice_target), ell_label, cutoff);
    let iota_ext = GradedOperator::embed_site_map(&target_pair, 0, &iota_map(twice_k, params));
    debug_assert!(iota_ext.codomain.same_structure(&triple));
    let rhs = l13.compose(&l23).compose(&iota_ext);

    let mut op = GradedOperator::zero(&target_pair, &target_pair, 0, 0);
    let mut worst = inner_k.residual;
    for l in 0..target_pair.num_levels() {
        let m = iota_ext
            .block(l, l)
            .expect("injection has full diagonal blocks");
        let rows = triple.level_dim(l);
        let cols = target_pair.level_dim(l);
        let zero_blk = DMatrix::zeros(rows, cols);
        let rhs_blk = rhs.block(l, l).unwrap_or(&zero_blk);
        let (x_blk, res, _cond) = solve_from_left(m, rhs_blk, "fuse_l level block")?;
        if res > profile.rel_tol {
            return Err(Error::ResidualTooLarge {
                context: "fuse_l image not contained in the injection span",
                residual: res,
                tol: profile.rel_tol,
            });
        }
        worst = worst.max(res);
        op.set_block(l, l, x_blk);
    }
    Ok(ROperator {
        first: SpinLabel::finite(twice_target),
        second: ell_label,
        x,
        op,
        route: Route::Fusion,
        residual: worst,
    })
}

/// Residual of the leg-swapped fusion relation
/// (j (x) Id) L^(k+1/2,ell)(x) = L_23^(1/2,ell)(x - k eta) L_13^(k,ell)(x + eta/2) (j (x) Id).
pub fn check_l_fusion_j(
    fused: &ROperator,
    params: &SpectralParams,
    profile: &ToleranceProfile,
) -> Result<f64> {
    let SpinLabel::Finite { twice } = fused.first else {
        return Err(Error::ShapeMismatch("fused leg must be finite".into()));
    };
    assert!(twice >= 1);
    let twice_k = twice - 1;
    let k = twice_k as f64 / 2.0;
    let eta = params.eta;
    let cutoff = fused.space().cutoff();
    let ell_label = fused.second;

    let triple = GradedSpace::new(
        vec![SpinLabel::finite(twice_k), SpinLabel::half(), ell_label],
        cutoff,
    );
    let l23 = GradedOperator::embed(
        &triple,
        &[1, 2],
        &l_explicit(ell_label, fused.x - eta * k, cutoff, params, profile)?.op,
    );
    let l13 = GradedOperator::embed(
        &triple,
        &[0, 2],
        &fuse_l(twice_k, ell_label, fused.x + eta * 0.5, cutoff, params, profile)?.op,
    );
    let j_ext = GradedOperator::embed_site_map(&fused.op.domain, 0, &j_map(twice_k, params));
    Ok(op_residual(
        &j_ext.compose(&fused.op),
        &l23.compose(&l13).compose(&j_ext),
    ))
}

/// Relative residual of the Yang-Baxter equation
/// R_12(x-y) R_13(x-z) R_23(y-z) = R_23(y-z) R_13(x-z) R_12(x-y)
/// on the triple tensor truncation.
pub fn check_ybe(
    spins: (SpinLabel, SpinLabel, SpinLabel),
    points: (C64, C64, C64),
    cutoff: usize,
    params: &SpectralParams,
    profile: &ToleranceProfile,
) -> Result<f64> {
    let (k, l, m) = spins;
    let (x, y, z) = points;
    let triple = GradedSpace::new(vec![k, l, m], cutoff);
    let r12 = GradedOperator::embed(
        &triple,
        &[0, 1],
        &solve_r(k, l, x - y, cutoff, params, profile)?.op,
    );
    let r13 = GradedOperator::embed(
        &triple,
        &[0, 2],
        &solve_r(k, m, x - z, cutoff, params, profile)?.op,
    );
    let r23 = GradedOperator::embed(
        &triple,
        &[1, 2],
        &solve_r(l, m, y - z, cutoff, params, profile)?.op,
    );
    let lhs = r12.compose(&r13).compose(&r23);
    let rhs = r23.compose(&r13).compose(&r12);
    Ok(op_residual(&lhs, &rhs))
}

/// R_21 at argument x: the permutation conjugate of the leg-swapped operator.
pub fn r21(
    first: SpinLabel,
    second: SpinLabel,
    x: C64,
    cutoff: usize,
    params: &SpectralParams,
    profile: &ToleranceProfile,
) -> Result<GradedOperator> {
    let pair_kl = GradedSpace::pair(first, second, cutoff);
    let swapped = solve_r(second, first, x, cutoff, params, profile)?;
    let p_to = GradedOperator::permutation(&pair_kl, &[1, 0]);
    let p_back = GradedOperator::permutation(&swapped.op.domain, &[1, 0]);
    Ok(p_back.compose(&swapped.op).compose(&p_to))
}

/// Residual of unitarity R^(kl)(x)^(-1) = R_21^(lk)(-x), inverted blockwise.
pub fn check_unitarity(
    first: SpinLabel,
    second: SpinLabel,
    x: C64,
    cutoff: usize,
    params: &SpectralParams,
    profile: &ToleranceProfile,
) -> Result<f64> {
    let r = solve_r(first, second, x, cutoff, params, profile)?;
    let inv = r.op.blockwise_inverse(1e10, "unitarity inverse")?;
    let flipped = r21(first, second, -x, cutoff, params, profile)?;
    Ok(op_residual(&inv, &flipped))
}

/// Residual of P-symmetry R_21^(lk)(x) = R^(kl)(x).
pub fn check_psym(
    first: SpinLabel,
    second: SpinLabel,
    x: C64,
    cutoff: usize,
    params: &SpectralParams,
    profile: &ToleranceProfile,
) -> Result<f64> {
    let r = solve_r(first, second, x, cutoff, params, profile)?;
    let flipped = r21(first, second, x, cutoff, params, profile)?;
    Ok(op_residual(&r.op, &flipped))
}

/// Residual of the RLL relation with spin-1/2 auxiliary legs:
/// R_12(x-y) L_13(x-z) L_23(y-z) = L_23(y-z) L_13(x-z) R_12(x-y).
pub fn check_rll(
    state: SpinLabel,
    points: (C64, C64, C64),
    cutoff: usize,
    params: &SpectralParams,
    profile: &ToleranceProfile,
) -> Result<f64> {
    let (x, y, z) = points;
    let triple = GradedSpace::new(vec![SpinLabel::half(), SpinLabel::half(), state], cutoff);
    let r12 = GradedOperator::embed(&triple, &[0, 1], &r_6vertex(x - y, params, profile)?.op);
    let l13 = GradedOperator::embed(
        &triple,
        &[0, 2],
        &l_explicit(state, x - z, cutoff, params, profile)?.op,
    );
    let l23 = GradedOperator::embed(
        &triple,
        &[1, 2],
        &l_explicit(state, y - z, cutoff, params, profile)?.op,
    );
    let lhs = r12.compose(&l13).compose(&l23);
    let rhs = l23.compose(&l13).compose(&r12);
    Ok(op_residual(&lhs, &rhs))
}

/// Residual of the spin-1/2 crossing relation
/// L(-x)^(T1) = theta^ell(x) sigma^y_1 L(x - eta) sigma^y_1,
/// checked entrywise with the transpose taken in the auxiliary leg.
pub fn check_crossing_half(
    ell_label: SpinLabel,
    x: C64,
    cutoff: usize,
    params: &SpectralParams,
    profile: &ToleranceProfile,
) -> Result<f64> {
    let theta = crossing_scalar(ell_label.ell(), x, params, profile)?;
    let l_neg = l_explicit(ell_label, -x, cutoff, params, profile)?.op;
    let l_sh = l_explicit(ell_label, x - params.eta, cutoff, params, profile)?.op;
    let space = l_neg.domain.clone();

    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for i_out in 0..space.dim() {
        let t_out = space.tuple(i_out);
        for i_in in 0..space.dim() {
            let t_in = space.tuple(i_in);
            // Transpose in the first (2-dim) leg swaps the auxiliary indices
            // between row and column.
            let mut sw_out = t_out.to_vec();
            let mut sw_in = t_in.to_vec();
            sw_out[0] = t_in[0];
            sw_in[0] = t_out[0];
            // sigma^y conjugation flips both auxiliary indices with sign
            // -1 unless they agree.
            let mut fl_out = t_out.to_vec();
            let mut fl_in = t_in.to_vec();
            fl_out[0] = 3 - t_out[0];
            fl_in[0] = 3 - t_in[0];
            let (Some(row), Some(col), Some(f_row), Some(f_col)) = (
                space.index_of(&sw_out),
                space.index_of(&sw_in),
                space.index_of(&fl_out),
                space.index_of(&fl_in),
            ) else {
                continue;
            };
            let lhs = l_neg.entry(row, col);
            let sign = if t_out[0] == t_in[0] { C_ONE } else { -C_ONE };
            let rhs = theta * sign * l_sh.entry(f_row, f_col);
            num += (lhs - rhs).norm_sqr();
            den += lhs.norm_sqr().max(rhs.norm_sqr());
        }
    }
    Ok(num.sqrt() / (den.sqrt() + 1.0))
}

/// General-spin crossing: L^(k,ell)(-x)^(T1) is proportional to the
/// w-conjugate of L^(k,ell)(x - eta). The proportionality scalar is not
/// predicted; the check recovers it and reports the worst relative deviation
/// of the entrywise ratio from it.
pub struct CrossingRatio {
    pub scalar: C64,
    pub max_deviation: f64,
}

pub fn check_crossing_general(
    twice_k: u32,
    ell_label: SpinLabel,
    x: C64,
    cutoff: usize,
    params: &SpectralParams,
    profile: &ToleranceProfile,
) -> Result<CrossingRatio> {
    let l_neg = fuse_l(twice_k, ell_label, -x, cutoff, params, profile)?.op;
    let l_sh = fuse_l(twice_k, ell_label, x - params.eta, cutoff, params, profile)?.op;
    let space = l_neg.domain.clone();
    let dim_aux = twice_k + 1;

    // Reversal coefficients c_n of w^k.
    let w = w_map(twice_k, params);
    let aux_space = w.domain.clone();
    let c: Vec<C64> = (1..=dim_aux)
        .map(|n| {
            w.entry(
                aux_space.index_of(&[dim_aux + 1 - n]).unwrap(),
                aux_space.index_of(&[n]).unwrap(),
            )
        })
        .collect();

    let mut pairs: Vec<(C64, C64)> = Vec::new();
    let mut scale = 0.0f64;
    for i_out in 0..space.dim() {
        let t_out = space.tuple(i_out);
        for i_in in 0..space.dim() {
            let t_in = space.tuple(i_in);
            let mut sw_out = t_out.to_vec();
            let mut sw_in = t_in.to_vec();
            sw_out[0] = t_in[0];
            sw_in[0] = t_out[0];
            let mut fl_out = t_out.to_vec();
            let mut fl_in = t_in.to_vec();
            fl_out[0] = dim_aux + 1 - t_out[0];
            fl_in[0] = dim_aux + 1 - t_in[0];
            let (Some(row), Some(col), Some(f_row), Some(f_col)) = (
                space.index_of(&sw_out),
                space.index_of(&sw_in),
                space.index_of(&fl_out),
                space.index_of(&fl_in),
            ) else {
                continue;
            };
            let lhs = l_neg.entry(row, col);
            let w_factor = c[(dim_aux - t_out[0]) as usize] / c[(dim_aux - t_in[0]) as usize];
            let rhs = w_factor * l_sh.entry(f_row, f_col);
            scale = scale.max(lhs.norm()).max(rhs.norm());
            pairs.push((lhs, rhs));
        }
    }

    let floor = scale * 1e-9;
    let mut scalar = C_ZERO;
    let mut best = 0.0f64;
    for &(lhs, rhs) in &pairs {
        if rhs.norm() > best {
            best = rhs.norm();
            scalar = lhs / rhs;
        }
    }
    if best == 0.0 {
        return Err(Error::ShapeMismatch(
            "crossing ratio: no significant entries".into(),
        ));
    }
    let mut max_deviation = 0.0f64;
    for &(lhs, rhs) in &pairs {
        if lhs.norm() <= floor && rhs.norm() <= floor {
            continue;
        }
        let dev = (lhs - scalar * rhs).norm() / (scalar.norm() * rhs.norm() + floor);
        max_deviation = max_deviation.max(dev);
    }
    Ok(CrossingRatio {
        scalar,
        max_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::Sampler;
    use crate::spaces::site_action;

    fn test_params() -> SpectralParams {
        SpectralParams::new(
            C64::new(0.41, 0.23),
            C64::new(-1.1, 0.37),
            C64::new(-0.53, 0.19),
            C64::new(-0.61, -0.11),
        )
    }

    fn profile() -> ToleranceProfile {
        ToleranceProfile::default()
    }

    #[test]
    fn six_vertex_matches_closed_form() {
        let params = test_params();
        let x = C64::new(0.37, 0.21);
        let r = r_6vertex(x, &params, &profile()).unwrap();
        let eta = params.eta;
        let m = r.op.to_dense();
        let den = (x + eta).sinh();
        // Ordered basis (v1 v1, v1 v2, v2 v1, v2 v2).
        assert!((m[(0, 0)] - C_ONE).norm() < 1e-14);
        assert!((m[(3, 3)] - C_ONE).norm() < 1e-14);
        assert!((m[(1, 1)] - x.sinh() / den).norm() < 1e-14);
        assert!((m[(2, 2)] - x.sinh() / den).norm() < 1e-14);
        assert!((m[(1, 2)] - eta.sinh() / den).norm() < 1e-14);
        assert!((m[(2, 1)] - eta.sinh() / den).norm() < 1e-14);
        for (i, j) in [(0, 1), (0, 2), (0, 3), (1, 0), (1, 3), (3, 1)] {
            assert!(m[(i, j)].norm() < 1e-15);
        }
    }

    #[test]
    fn six_vertex_at_zero_is_permutation() {
        let params = test_params();
        let r = r_6vertex(C64::new(0.0, 0.0), &params, &profile()).unwrap();
        let p = GradedOperator::permutation(r.space(), &[1, 0]);
        assert!(op_residual(&r.op, &p) < 1e-14);
    }

    #[test]
    fn six_vertex_unitarity_closed_form() {
        let params = test_params();
        let x = C64::new(0.52, -0.17);
        let r_pos = r_6vertex(x, &params, &profile()).unwrap();
        let r_neg = r_6vertex(-x, &params, &profile()).unwrap();
        let p = GradedOperator::permutation(r_pos.space(), &[1, 0]);
        let prod = r_pos.op.compose(&p).compose(&r_neg.op).compose(&p);
        let id = GradedOperator::identity(r_pos.space());
        assert!(op_residual(&prod, &id) < 1e-12);
    }

    #[test]
    fn l_pseudovacuum_entries() {
        let params = test_params();
        let ell = SpinLabel::generic(C64::new(0.73, 0.29));
        let x = C64::new(0.43, 0.11);
        let e = l_entries(ell, x, 4, &params, &profile()).unwrap();
        // A m_1 = m_1, C m_1 = 0, D m_1 = theta(-x) m_1.
        assert!((e.a.entry(0, 0) - C_ONE).norm() < 1e-14);
        assert!(e.c.block(0, 0).is_none() || e.c.entry(0, 0).norm() < 1e-15);
        let theta = crossing_scalar(ell.ell(), -x, &params, &profile()).unwrap();
        assert!((e.d.entry(0, 0) - theta).norm() < 1e-14);
    }

    #[test]
    fn solve_r_half_half_matches_six_vertex() {
        let params = test_params();
        let mut sampler = Sampler::new(5);
        for _ in 0..5 {
            let x = sampler.draw();
            let solved = solve_r(SpinLabel::half(), SpinLabel::half(), x, 2, &params, &profile())
                .unwrap();
            let explicit = r_6vertex(x, &params, &profile()).unwrap();
            let diff = solved.op.sub(&explicit.op).frobenius();
            assert!(diff < 1e-12, "x = {x}: entrywise diff {diff:e}");
        }
    }

    #[test]
    fn solve_r_fixes_highest_weight_and_levels() {
        let params = test_params();
        let k = SpinLabel::generic(C64::new(0.37, 0.41));
        let l = SpinLabel::generic(C64::new(-0.29, 0.53));
        let r = solve_r(k, l, C64::new(0.61, -0.33), 5, &params, &profile()).unwrap();
        assert!((r.op.entry(0, 0) - C_ONE).norm() < 1e-13);
        assert_eq!(r.op.band(), (0, 0));
        assert!(r.residual < 1e-9);
    }

    #[test]
    fn solve_r_equal_spins_zero_argument_is_flip() {
        let params = test_params();
        let ell = SpinLabel::generic(C64::new(0.47, 0.31));
        let r = solve_r(ell, ell, C64::new(0.0, 0.0), 5, &params, &profile()).unwrap();
        let p = GradedOperator::permutation(r.space(), &[1, 0]);
        assert!(op_residual(&r.op, &p) < 1e-10);
    }

    #[test]
    fn iota_intertwines_evaluated_generators() {
        let params = test_params();
        let mut sampler = Sampler::new(43);
        for twice_k in 0..=3u32 {
            let x = sampler.draw();
            let iota = iota_map(twice_k, &params);
            let single = iota.domain.clone();
            let pair = iota.codomain.clone();
            let k = twice_k as f64 / 2.0;
            let evals = [x - params.eta * k, x + params.eta * 0.5];
            for gen in [Gen::E1, Gen::F1, Gen::E0, Gen::F0] {
                let big = coproduct_action(&pair, gen, &evals, &params, false);
                let small = site_action(&single, 0, gen, x, &params);
                let lhs = big.compose(&iota);
                let rhs = iota.compose(&small);
                let res = op_residual(&lhs, &rhs);
                assert!(res < 1e-10, "k = {k}, gen {gen:?}: residual {res:e}");
            }
        }
    }

    #[test]
    fn j_map_is_permuted_iota() {
        let params = test_params();
        for twice_k in 0..=3u32 {
            let iota = iota_map(twice_k, &params);
            let j = j_map(twice_k, &params);
            let p = GradedOperator::permutation(&iota.codomain, &[1, 0]);
            assert!(op_residual(&j, &p.compose(&iota)) < 1e-14);
        }
    }

    #[test]
    fn w_map_square_matches_closed_form() {
        let params = test_params();
        // k = 0: identity on the 1-dim space.
        let w0 = w_map(0, &params);
        assert!((w0.entry(0, 0) - C_ONE).norm() < 1e-15);
        // The recursion c_(n+1) = -c_n p^(2k+1-2n) solves to
        // c_n = (-1)^(n-1) p^((n-1)(2k+1-n)), so w^2 is diagonal with entries
        // c_n c_(2k+2-n) = (-1)^(2k) p^(2(n-1)(2k+1-n)).
        for twice_k in 1..=3u32 {
            let w = w_map(twice_k, &params);
            let sq = w.compose(&w);
            let space = w.domain.clone();
            let kk = twice_k as f64;
            let parity = if twice_k % 2 == 1 { -C_ONE } else { C_ONE };
            for n in 1..=(twice_k + 1) {
                let nf = n as f64;
                let expect =
                    parity * params.p_pow(C64::new(2.0 * (nf - 1.0) * (kk + 1.0 - nf), 0.0));
                let i = space.index_of(&[n]).unwrap();
                let got = sq.entry(i, i);
                assert!(
                    (got - expect).norm() < 1e-12,
                    "k/2 = {twice_k}, n = {n}: {got} vs {expect}"
                );
            }
        }
        // Spin-1/2 case: w(v1) = v2, w(v2) = -v1.
        let w = w_map(1, &params);
        assert!((w.entry(1, 0) - C_ONE).norm() < 1e-15);
        assert!((w.entry(0, 1) + C_ONE).norm() < 1e-15);
    }

    #[test]
    fn fused_l_agrees_with_solve_route() {
        let params = test_params();
        let ell = SpinLabel::generic(C64::new(0.67, -0.23));
        let x = C64::new(0.39, 0.27);
        for twice in [1u32, 2, 3] {
            let fused = fuse_l(twice, ell, x, 4, &params, &profile()).unwrap();
            let solved = solve_r(SpinLabel::finite(twice), ell, x, 4, &params, &profile()).unwrap();
            let res = op_residual(&fused.op, &solved.op);
            assert!(res < 1e-9, "spin {}/2: routes differ by {res:e}", twice);
        }
    }

    #[test]
    fn fused_l_satisfies_j_form() {
        let params = test_params();
        let ell = SpinLabel::generic(C64::new(0.57, 0.13));
        let fused = fuse_l(2, ell, C64::new(0.49, -0.21), 4, &params, &profile()).unwrap();
        let res = check_l_fusion_j(&fused, &params, &profile()).unwrap();
        assert!(res < 1e-10, "j-ordered fusion residual {res:e}");
    }

    #[test]
    fn ybe_spin_half_triple() {
        let params = test_params();
        let mut sampler = Sampler::new(47);
        let h = SpinLabel::half();
        for _ in 0..3 {
            let pts = (sampler.draw(), sampler.draw(), sampler.draw());
            let res = check_ybe((h, h, h), pts, 3, &params, &profile()).unwrap();
            assert!(res < 1e-11, "residual {res:e}");
        }
    }

    #[test]
    fn ybe_mixed_spins() {
        let params = test_params();
        let spins = (
            SpinLabel::finite(2),
            SpinLabel::half(),
            SpinLabel::generic(C64::new(0.71, 0.33)),
        );
        let pts = (
            C64::new(0.31, 0.17),
            C64::new(-0.23, 0.41),
            C64::new(0.11, -0.29),
        );
        let res = check_ybe(spins, pts, 5, &params, &profile()).unwrap();
        assert!(res < 1e-9, "residual {res:e}");
    }

    #[test]
    fn unitarity_and_psym_generic_pair() {
        let params = test_params();
        let k = SpinLabel::generic(C64::new(0.61, 0.21));
        let l = SpinLabel::generic(C64::new(-0.43, 0.37));
        let x = C64::new(0.53, 0.29);
        let u = check_unitarity(k, l, x, 5, &params, &profile()).unwrap();
        assert!(u < 1e-9, "unitarity residual {u:e}");
        let p = check_psym(k, l, x, 5, &params, &profile()).unwrap();
        assert!(p < 1e-9, "P-symmetry residual {p:e}");
    }

    #[test]
    fn rll_relation_with_six_vertex() {
        let params = test_params();
        let state = SpinLabel::generic(C64::new(0.83, -0.19));
        let pts = (
            C64::new(0.41, 0.13),
            C64::new(-0.17, 0.37),
            C64::new(0.23, -0.31),
        );
        let res = check_rll(state, pts, 4, &params, &profile()).unwrap();
        assert!(res < 1e-9, "RLL residual {res:e}");
    }

    #[test]
    fn crossing_spin_half_aux() {
        let params = test_params();
        let ell = SpinLabel::generic(C64::new(0.59, 0.31));
        let res = check_crossing_half(ell, C64::new(0.47, 0.19), 5, &params, &profile()).unwrap();
        assert!(res < 1e-10, "crossing residual {res:e}");
    }

    #[test]
    fn crossing_general_k_ratio_constancy() {
        let params = test_params();
        let ell = SpinLabel::generic(C64::new(0.73, -0.17));
        let x = C64::new(0.51, 0.23);
        let ratio = check_crossing_general(2, ell, x, 5, &params, &profile()).unwrap();
        assert!(
            ratio.max_deviation < 1e-8,
            "ratio deviation {:e}",
            ratio.max_deviation
        );
        // At k = 1/2 the recovered scalar is the crossing scalar.
        let half = check_crossing_general(1, ell, x, 5, &params, &profile()).unwrap();
        let theta = crossing_scalar(ell.ell(), x, &params, &profile()).unwrap();
        assert!(
            (half.scalar - theta).norm() < 1e-9,
            "recovered {} vs theta {}",
            half.scalar,
            theta
        );
        assert!(half.max_deviation < 1e-9);
    }

    #[test]
    fn l_explicit_pole_guard() {
        let params = test_params();
        let ell = SpinLabel::generic(C64::new(0.31, 0.22));
        // x chosen so sinh(x + (1/2+ell) eta) = 0.
        let x = -(ell.ell() + 0.5) * params.eta;
        let err = l_explicit(ell, x, 3, &params, &profile());
        assert!(matches!(err, Err(Error::PoleHit { .. })));
    }
}
