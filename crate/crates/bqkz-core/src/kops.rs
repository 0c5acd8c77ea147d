//! K-operators: the diagonal one-parameter spin-1/2 family, its diagonal
//! extension to arbitrary weights, recursive fusion to higher finite spins,
//! and the reflection-equation / boundary-crossing checkers.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::rops::{r_6vertex, solve_r};
use crate::spaces::{
    iota_map, j_map, op_residual, projector_map, GradedOperator, GradedSpace, Space, SpinLabel,
};
use crate::special::{guard_denominator, k_diag_coeff};
use crate::{C64, Error, Result, SpectralParams, ToleranceProfile};

const C_ONE: C64 = C64::new(1.0, 0.0);

/// A single-site K-operator at boundary parameter xi and argument x.
///
/// Level-preserving and normalized to fix the highest-weight vector; on a
/// single site that makes it diagonal in the weight basis.
#[derive(Debug, Clone)]
pub struct KOperator {
    pub spin: SpinLabel,
    pub xi: C64,
    pub x: C64,
    pub op: GradedOperator,
    /// Defining-relation residual of the construction (0 for closed forms).
    pub residual: f64,
}

impl KOperator {
    pub fn space(&self) -> &Space {
        &self.op.domain
    }

    /// Diagonal coefficients in basis order.
    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.space().dim())
            .map(|i| self.op.entry(i, i))
            .collect()
    }
}

/// Cherednik's one-parameter diagonal K-matrix on V^(1/2):
/// diag(1, sinh(xi - x)/sinh(xi + x)).
pub fn k_half(
    xi: C64,
    x: C64,
    params: &SpectralParams,
    profile: &ToleranceProfile,
) -> Result<KOperator> {
    let _ = params;
    let den = guard_denominator((xi + x).sinh(), "k_half denominator sinh(xi+x)", profile)?;
    let space = GradedSpace::single(SpinLabel::half(), 1);
    let mut op = GradedOperator::zero(&space, &space, 0, 0);
    op.add_entry(0, 0, C_ONE);
    op.add_entry(1, 1, (xi - x).sinh() / den);
    Ok(KOperator {
        spin: SpinLabel::half(),
        xi,
        x,
        op,
        residual: 0.0,
    })
}

/// Diagonal K-operator with coefficients C_n^ell(x; xi) on a (truncated)
/// weight module.
pub fn k_diag(
    xi: C64,
    spin: SpinLabel,
    x: C64,
    cutoff: usize,
    params: &SpectralParams,
    profile: &ToleranceProfile,
) -> Result<KOperator> {
    let space = GradedSpace::single(spin, cutoff);
    let ell = spin.ell();
    let mut op = GradedOperator::zero(&space, &space, 0, 0);
    for i in 0..space.dim() {
        let n = space.tuple(i)[0] as usize;
        op.add_entry(i, i, k_diag_coeff(n, ell, x, xi, params, profile)?);
    }
    Ok(KOperator {
        spin,
        xi,
        x,
        op,
        residual: 0.0,
    })
}

/// Recursive fusion of the spin-1/2 K-matrix to higher finite spins.
///
/// Fusion at argument x needs lower stages at shifted arguments, so the cache
/// is keyed by (stage, argument).
pub struct KFusion {
    xi: C64,
    params: SpectralParams,
    profile: ToleranceProfile,
    cache: HashMap<(u32, u64, u64), KOperator>,
}

impl KFusion {
    pub fn new(xi: C64, params: SpectralParams, profile: ToleranceProfile) -> Self {
        Self {
            xi,
            params,
            profile,
            cache: HashMap::new(),
        }
    }

    /// Fused K-operator on V^(twice_k / 2) at argument x.
    pub fn fuse(&mut self, twice_k: u32, x: C64) -> Result<KOperator> {
        if twice_k == 0 {
            let space = GradedSpace::single(SpinLabel::finite(0), 0);
            let mut op = GradedOperator::zero(&space, &space, 0, 0);
            op.add_entry(0, 0, C_ONE);
            return Ok(KOperator {
                spin: SpinLabel::finite(0),
                xi: self.xi,
                x,
                op,
                residual: 0.0,
            });
        }
        if twice_k == 1 {
            return k_half(self.xi, x, &self.params, &self.profile);
        }
        let key = (twice_k, x.re.to_bits(), x.im.to_bits());
        if let Some(hit) = self.cache.get(&key) {
            return Ok(hit.clone());
        }

        let twice_prev = twice_k - 1;
        let k_prev = twice_prev as f64 / 2.0;
        let eta = self.params.eta;

        let lower_half = k_half(self.xi, x - eta * k_prev, &self.params, &self.profile)?;
        let lower_k = self.fuse(twice_prev, x + eta * 0.5)?;

        let pair = GradedSpace::pair(
            SpinLabel::half(),
            SpinLabel::finite(twice_prev),
            1 + twice_prev as usize,
        );
        let k1 = GradedOperator::embed(&pair, &[0], &lower_half.op);
        let k2 = GradedOperator::embed(&pair, &[1], &lower_k.op);
        let r12 = solve_r(
            SpinLabel::half(),
            SpinLabel::finite(twice_prev),
            x * 2.0 - eta * (k_prev - 0.5),
            pair.cutoff(),
            &self.params,
            &self.profile,
        )?;
        let p = GradedOperator::permutation(&pair, &[1, 0]);
        let iota = iota_map(twice_prev, &self.params);
        let rhs = p
            .compose(&k1)
            .compose(&r12.op)
            .compose(&k2)
            .compose(&iota);

        let j = j_map(twice_prev, &self.params);
        let target = j.domain.clone();
        let mut op = GradedOperator::zero(&target, &target, 0, 0);
        let mut worst = lower_k.residual.max(r12.residual);
        for l in 0..target.num_levels() {
            let m = j.block(l, l).expect("injection diagonal block");
            let rows = j.codomain.level_dim(l);
            let cols = target.level_dim(l);
            let zero_blk = DMatrix::zeros(rows, cols);
            let rhs_blk = rhs.block(l, l).unwrap_or(&zero_blk);
            let (x_blk, res, _cond) = lsq_solve(m, rhs_blk)?;
            if res > 1e-8 {
                return Err(Error::ResidualTooLarge {
                    context: "fuse_k image escapes the injection span",
                    residual: res,
                    tol: 1e-8,
                });
            }
            worst = worst.max(res);
            op.set_block(l, l, x_blk);
        }

        let fused = KOperator {
            spin: SpinLabel::finite(twice_k),
            xi: self.xi,
            x,
            op,
            residual: worst,
        };
        self.cache.insert(key, fused.clone());
        Ok(fused)
    }
}

fn lsq_solve(m: &DMatrix<C64>, rhs: &DMatrix<C64>) -> Result<(DMatrix<C64>, f64, f64)> {
    let svd = m.clone().svd(true, true);
    let (smax, smin) = (svd.singular_values.max(), svd.singular_values.min());
    let cond = if smin == 0.0 { f64::INFINITY } else { smax / smin };
    if cond > 1e10 {
        return Err(Error::IllConditioned {
            context: "fuse_k level solve",
            cond,
        });
    }
    let x = svd.solve(rhs, 0.0).map_err(|_| Error::IllConditioned {
        context: "fuse_k level solve",
        cond,
    })?;
    let res = (m * &x - rhs).norm() / (rhs.norm() + 1.0);
    Ok((x, res, cond))
}

/// Relative residual of the reflection equation
/// R(x-y) K_1(x) R(x+y) K_2(y) = K_2(y) R(x+y) K_1(x) R(x-y)
/// on the (truncated) pair space, with per-side K rules.
pub fn check_reflection(
    first: SpinLabel,
    second: SpinLabel,
    x: C64,
    y: C64,
    cutoff: usize,
    k_first: &mut dyn FnMut(C64) -> Result<GradedOperator>,
    k_second: &mut dyn FnMut(C64) -> Result<GradedOperator>,
    params: &SpectralParams,
    profile: &ToleranceProfile,
) -> Result<f64> {
    let pair = GradedSpace::pair(first, second, cutoff);
    let r_diff = solve_r(first, second, x - y, cutoff, params, profile)?.op;
    let r_sum = solve_r(first, second, x + y, cutoff, params, profile)?.op;
    let k1 = GradedOperator::embed(&pair, &[0], &k_first(x)?);
    let k2 = GradedOperator::embed(&pair, &[1], &k_second(y)?);
    let lhs = r_diff.compose(&k1).compose(&r_sum).compose(&k2);
    let rhs = k2.compose(&r_sum).compose(&k1).compose(&r_diff);
    Ok(op_residual(&lhs, &rhs))
}

/// Reflection residual for the diagonal family on both legs.
pub fn check_reflection_diag(
    first: SpinLabel,
    second: SpinLabel,
    xi: C64,
    x: C64,
    y: C64,
    cutoff: usize,
    params: &SpectralParams,
    profile: &ToleranceProfile,
) -> Result<f64> {
    let mut rule1 = |arg: C64| Ok(k_diag(xi, first, arg, cutoff, params, profile)?.op);
    let mut rule2 = |arg: C64| Ok(k_diag(xi, second, arg, cutoff, params, profile)?.op);
    check_reflection(
        first, second, x, y, cutoff, &mut rule1, &mut rule2, params, profile,
    )
}

/// Residual of the compatibility pr^k . K^(xi,k) = K^(xi,k)|_finite . pr^k
/// between the diagonal operator on the truncated module and its finite
/// quotient.
pub fn check_projection_compat(
    xi: C64,
    twice_k: u32,
    x: C64,
    cutoff: usize,
    params: &SpectralParams,
    profile: &ToleranceProfile,
) -> Result<f64> {
    let generic = k_diag(
        xi,
        SpinLabel::generic(C64::new(twice_k as f64 / 2.0, 0.0)),
        x,
        cutoff,
        params,
        profile,
    )?;
    let pr = projector_map(generic.space(), twice_k);
    let finite = k_diag(
        xi,
        SpinLabel::finite(twice_k),
        x,
        pr.codomain.cutoff(),
        params,
        profile,
    )?;
    Ok(op_residual(
        &pr.compose(&generic.op),
        &finite.op.compose(&pr),
    ))
}

/// Residual of the boundary crossing relation
/// Tr_2(R_12(2x-2eta) P_12 K_2(x)) =
///   [sinh(xi+x-eta) sinh(2x) / (sinh(xi+x) sinh(2x-eta))] K_1(x-eta).
pub fn check_boundary_crossing(
    xi: C64,
    x: C64,
    params: &SpectralParams,
    profile: &ToleranceProfile,
) -> Result<f64> {
    let eta = params.eta;
    let den1 = guard_denominator((xi + x).sinh(), "boundary crossing sinh(xi+x)", profile)?;
    let den2 = guard_denominator(
        (x * 2.0 - eta).sinh(),
        "boundary crossing sinh(2x-eta)",
        profile,
    )?;
    let scalar = (xi + x - eta).sinh() * (x * 2.0).sinh() / (den1 * den2);

    let r = r_6vertex(x * 2.0 - eta * 2.0, params, profile)?;
    let pair = r.space().clone();
    let p = GradedOperator::permutation(&pair, &[1, 0]);
    let k2 = GradedOperator::embed(&pair, &[1], &k_half(xi, x, params, profile)?.op);
    let lhs = r.op.compose(&p).compose(&k2).trace_leg(1);
    let rhs = k_half(xi, x - eta, params, profile)?.op.scale(scalar);
    Ok(op_residual(&lhs, &rhs))
}
