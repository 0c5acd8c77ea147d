//! Graded vector-space data model.
//!
//! A site carries either a finite (2k+1)-dimensional module or a generic
//! highest-weight module truncated by a *total-level* cutoff on the tensor
//! product. Basis tuples (n_1, ..., n_M), n_i >= 1, are graded by the level
//! sum(n_i - 1); enumeration is deterministic: levels ascending, lexicographic
//! within each level.
//!
//! Operators are stored as dense blocks between level subspaces, tagged with
//! a level-shift band. Every in-scope operator is level-banded, which makes
//! all level-preserving computations on the retained levels exact rather than
//! approximate.

mod generators;
mod intertwiners;

pub use generators::{cartan_action, coproduct_action, site_action, Gen};
pub use intertwiners::{iota_map, j_map, projector_map, sigma_y, w_map};

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use std::collections::BTreeMap;

use crate::{C64, Error, Result};

const C_ZERO: C64 = C64::new(0.0, 0.0);
const C_ONE: C64 = C64::new(1.0, 0.0);

/// A site's representation type: finite half-integer spin or a generic
/// complex highest weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpinLabel {
    /// Spin k stored as 2k; the module has dimension 2k+1.
    Finite { twice: u32 },
    /// Generic highest weight; infinite-dimensional, truncated by the cutoff.
    Generic(C64),
}

impl SpinLabel {
    pub fn finite(twice: u32) -> Self {
        SpinLabel::Finite { twice }
    }

    pub fn half() -> Self {
        SpinLabel::Finite { twice: 1 }
    }

    pub fn generic(ell: C64) -> Self {
        SpinLabel::Generic(ell)
    }

    /// Highest weight as a complex number.
    pub fn ell(&self) -> C64 {
        match self {
            SpinLabel::Finite { twice } => C64::new(*twice as f64 / 2.0, 0.0),
            SpinLabel::Generic(ell) => *ell,
        }
    }

    /// Largest basis index n (= 2k+1) for finite sites.
    pub fn cap(&self) -> Option<u32> {
        match self {
            SpinLabel::Finite { twice } => Some(twice + 1),
            SpinLabel::Generic(_) => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, SpinLabel::Finite { .. })
    }
}

/// Tensor product of site spaces with total-level grading and cutoff.
#[derive(Debug)]
pub struct GradedSpace {
    sites: Vec<SpinLabel>,
    cutoff: usize,
    basis: Vec<Vec<u32>>,
    level_start: Vec<usize>,
    index: HashMap<Vec<u32>, usize>,
}

pub type Space = Arc<GradedSpace>;

impl GradedSpace {
    pub fn new(sites: Vec<SpinLabel>, cutoff: usize) -> Space {
        let mut basis = Vec::new();
        let mut level_start = vec![0usize];
        let top = Self::natural_top_of(&sites).map_or(cutoff, |t| t.min(cutoff));
        let mut tuple = vec![1u32; sites.len()];
        for level in 0..=top {
            enumerate_level(&sites, level, 0, &mut tuple, &mut basis);
            level_start.push(basis.len());
        }
        let index = basis
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Arc::new(Self {
            sites,
            cutoff,
            basis,
            level_start,
            index,
        })
    }

    pub fn single(site: SpinLabel, cutoff: usize) -> Space {
        Self::new(vec![site], cutoff)
    }

    pub fn pair(a: SpinLabel, b: SpinLabel, cutoff: usize) -> Space {
        Self::new(vec![a, b], cutoff)
    }

    fn natural_top_of(sites: &[SpinLabel]) -> Option<usize> {
        sites
            .iter()
            .map(|s| s.cap().map(|c| c as usize - 1))
            .sum::<Option<usize>>()
    }

    /// Maximal total level of the untruncated tensor product, if finite.
    pub fn natural_top(&self) -> Option<usize> {
        Self::natural_top_of(&self.sites)
    }

    /// Whether the cutoff actually removes levels of the underlying module.
    pub fn is_truncated(&self) -> bool {
        self.natural_top().map_or(true, |t| t > self.cutoff)
    }

    pub fn sites(&self) -> &[SpinLabel] {
        &self.sites
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Number of retained levels (highest level + 1).
    pub fn num_levels(&self) -> usize {
        self.level_start.len() - 1
    }

    pub fn level_dim(&self, level: usize) -> usize {
        self.level_start[level + 1] - self.level_start[level]
    }

    pub fn level_range(&self, level: usize) -> std::ops::Range<usize> {
        self.level_start[level]..self.level_start[level + 1]
    }

    pub fn level_of(&self, idx: usize) -> usize {
        self.basis[idx].iter().map(|&n| n as usize - 1).sum()
    }

    pub fn tuple(&self, idx: usize) -> &[u32] {
        &self.basis[idx]
    }

    pub fn index_of(&self, tuple: &[u32]) -> Option<usize> {
        self.index.get(tuple).copied()
    }

    pub fn same_structure(&self, other: &Self) -> bool {
        self.sites == other.sites && self.cutoff == other.cutoff
    }

    /// Index of the tensor product of highest-weight vectors (1, ..., 1).
    pub fn highest_weight_index(&self) -> usize {
        0
    }
}

fn enumerate_level(
    sites: &[SpinLabel],
    remaining: usize,
    pos: usize,
    tuple: &mut Vec<u32>,
    out: &mut Vec<Vec<u32>>,
) {
    if pos == sites.len() {
        if remaining == 0 {
            out.push(tuple.clone());
        }
        return;
    }
    if pos + 1 == sites.len() {
        let n = remaining as u32 + 1;
        if sites[pos].cap().map_or(true, |c| n <= c) {
            tuple[pos] = n;
            out.push(tuple.clone());
            tuple[pos] = 1;
        }
        return;
    }
    let max_here = sites[pos]
        .cap()
        .map_or(remaining as u32, |c| (c - 1).min(remaining as u32));
    for d in 0..=max_here {
        tuple[pos] = d + 1;
        enumerate_level(sites, remaining - d as usize, pos + 1, tuple, out);
    }
    tuple[pos] = 1;
}

/// Dense vector over a graded space.
#[derive(Debug, Clone)]
pub struct GradedVector {
    pub space: Space,
    pub data: DVector<C64>,
}

impl GradedVector {
    pub fn zero(space: &Space) -> Self {
        Self {
            space: space.clone(),
            data: DVector::zeros(space.dim()),
        }
    }

    pub fn basis(space: &Space, idx: usize) -> Self {
        let mut v = Self::zero(space);
        v.data[idx] = C_ONE;
        v
    }

    /// Tensor product of highest-weight vectors.
    pub fn pseudo_vacuum(space: &Space) -> Self {
        Self::basis(space, space.highest_weight_index())
    }

    pub fn norm(&self) -> f64 {
        self.data.norm()
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            space: self.space.clone(),
            data: &self.data * c,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert!(self.space.same_structure(&other.space));
        Self {
            space: self.space.clone(),
            data: &self.data + &other.data,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert!(self.space.same_structure(&other.space));
        Self {
            space: self.space.clone(),
            data: &self.data - &other.data,
        }
    }

    pub fn add_assign_scaled(&mut self, other: &Self, c: C64) {
        assert!(self.space.same_structure(&other.space));
        self.data.axpy(c, &other.data, C_ONE);
    }

    /// Highest level carrying an exactly nonzero component.
    pub fn max_support_level(&self) -> Option<usize> {
        (0..self.space.num_levels())
            .rev()
            .find(|&l| self.space.level_range(l).any(|i| self.data[i] != C_ZERO))
    }

    /// Euclidean norm of the components at one level.
    pub fn level_norm(&self, level: usize) -> f64 {
        self.space
            .level_range(level)
            .map(|i| self.data[i].norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Linear operator stored as dense blocks between level subspaces.
///
/// `lower`/`raise` bound the level shift: level l maps into [l-lower, l+raise].
/// Blocks outside the band are structurally zero and never stored.
#[derive(Debug, Clone)]
pub struct GradedOperator {
    pub domain: Space,
    pub codomain: Space,
    lower: usize,
    raise: usize,
    blocks: BTreeMap<(usize, usize), DMatrix<C64>>,
}

impl GradedOperator {
    pub fn zero(domain: &Space, codomain: &Space, lower: usize, raise: usize) -> Self {
        Self {
            domain: domain.clone(),
            codomain: codomain.clone(),
            lower,
            raise,
            blocks: BTreeMap::new(),
        }
    }

    pub fn identity(space: &Space) -> Self {
        let mut op = Self::zero(space, space, 0, 0);
        for l in 0..space.num_levels() {
            let d = space.level_dim(l);
            op.blocks.insert((l, l), DMatrix::identity(d, d));
        }
        op
    }

    pub fn band(&self) -> (usize, usize) {
        (self.lower, self.raise)
    }

    pub fn block(&self, in_level: usize, out_level: usize) -> Option<&DMatrix<C64>> {
        self.blocks.get(&(in_level, out_level))
    }

    pub fn blocks(&self) -> impl Iterator<Item = (&(usize, usize), &DMatrix<C64>)> {
        self.blocks.iter()
    }

    pub fn block_mut(&mut self, in_level: usize, out_level: usize) -> &mut DMatrix<C64> {
        let rows = self.codomain.level_dim(out_level);
        let cols = self.domain.level_dim(in_level);
        self.blocks
            .entry((in_level, out_level))
            .or_insert_with(|| DMatrix::zeros(rows, cols))
    }

    pub fn set_block(&mut self, in_level: usize, out_level: usize, m: DMatrix<C64>) {
        assert_eq!(m.nrows(), self.codomain.level_dim(out_level));
        assert_eq!(m.ncols(), self.domain.level_dim(in_level));
        self.blocks.insert((in_level, out_level), m);
    }

    /// Accumulate a single matrix element identified by global basis indices.
    pub fn add_entry(&mut self, out_idx: usize, in_idx: usize, value: C64) {
        if value == C_ZERO {
            return;
        }
        let in_level = self.domain.level_of(in_idx);
        let out_level = self.codomain.level_of(out_idx);
        debug_assert!(
            out_level + self.lower >= in_level && out_level <= in_level + self.raise,
            "entry outside declared band"
        );
        let r = out_idx - self.codomain.level_range(out_level).start;
        let c = in_idx - self.domain.level_range(in_level).start;
        self.block_mut(in_level, out_level)[(r, c)] += value;
    }

    /// Matrix element by global basis indices (0 if structurally absent).
    pub fn entry(&self, out_idx: usize, in_idx: usize) -> C64 {
        let in_level = self.domain.level_of(in_idx);
        let out_level = self.codomain.level_of(out_idx);
        match self.blocks.get(&(in_level, out_level)) {
            Some(b) => {
                let r = out_idx - self.codomain.level_range(out_level).start;
                let c = in_idx - self.domain.level_range(in_level).start;
                b[(r, c)]
            }
            None => C_ZERO,
        }
    }

    /// Composition self . rhs (rhs applied first).
    pub fn compose(&self, rhs: &Self) -> Self {
        assert!(
            rhs.codomain.same_structure(&self.domain),
            "compose: inner spaces differ"
        );
        let mut out = Self::zero(
            &rhs.domain,
            &self.codomain,
            self.lower + rhs.lower,
            self.raise + rhs.raise,
        );
        for (&(in_l, mid_l), b1) in &rhs.blocks {
            for (&(mid_l2, out_l), b2) in &self.blocks {
                if mid_l2 != mid_l {
                    continue;
                }
                let prod = b2 * b1;
                match out.blocks.get_mut(&(in_l, out_l)) {
                    Some(acc) => *acc += prod,
                    None => {
                        out.blocks.insert((in_l, out_l), prod);
                    }
                }
            }
        }
        out
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = self.clone();
        for b in out.blocks.values_mut() {
            *b *= c;
        }
        out
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert!(self.domain.same_structure(&rhs.domain));
        assert!(self.codomain.same_structure(&rhs.codomain));
        let mut out = Self::zero(
            &self.domain,
            &self.codomain,
            self.lower.max(rhs.lower),
            self.raise.max(rhs.raise),
        );
        out.blocks = self.blocks.clone();
        for (&key, b) in &rhs.blocks {
            match out.blocks.get_mut(&key) {
                Some(acc) => *acc += b,
                None => {
                    out.blocks.insert(key, b.clone());
                }
            }
        }
        out
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.scale(-C_ONE))
    }

    pub fn frobenius(&self) -> f64 {
        self.blocks
            .values()
            .map(|b| b.norm_squared())
            .sum::<f64>()
            .sqrt()
    }

    /// Apply to a vector. Errors with CutoffOverflow when a level-raising
    /// operator would push support of a truncated space past the cutoff.
    pub fn apply(&self, v: &GradedVector) -> Result<GradedVector> {
        assert!(
            v.space.same_structure(&self.domain),
            "apply: domain mismatch"
        );
        if self.raise > 0 && self.domain.is_truncated() {
            if let Some(top) = v.max_support_level() {
                if top + self.raise > self.domain.cutoff() {
                    return Err(Error::CutoffOverflow {
                        cutoff: self.domain.cutoff(),
                        level: top,
                    });
                }
            }
        }
        let mut out = GradedVector::zero(&self.codomain);
        for (&(in_l, out_l), b) in &self.blocks {
            let src = v.data.rows(
                self.domain.level_range(in_l).start,
                self.domain.level_dim(in_l),
            );
            let mut dst = out.data.rows_mut(
                self.codomain.level_range(out_l).start,
                self.codomain.level_dim(out_l),
            );
            dst.gemv(C_ONE, b, &src, C_ONE);
        }
        Ok(out)
    }

    /// Blockwise inverse of a level-preserving square operator.
    pub fn blockwise_inverse(&self, max_cond: f64, context: &'static str) -> Result<Self> {
        assert!(self.domain.same_structure(&self.codomain));
        assert_eq!((self.lower, self.raise), (0, 0), "inverse needs band (0,0)");
        let mut out = Self::zero(&self.domain, &self.codomain, 0, 0);
        for l in 0..self.domain.num_levels() {
            let d = self.domain.level_dim(l);
            let b = match self.blocks.get(&(l, l)) {
                Some(b) => b.clone(),
                None => {
                    return Err(Error::IllConditioned {
                        context,
                        cond: f64::INFINITY,
                    })
                }
            };
            let sv = b.clone().singular_values();
            let (smax, smin) = (sv.max(), sv.min());
            if smin == 0.0 || smax / smin > max_cond {
                return Err(Error::IllConditioned {
                    context,
                    cond: if smin == 0.0 { f64::INFINITY } else { smax / smin },
                });
            }
            let inv = b.try_inverse().ok_or(Error::IllConditioned {
                context,
                cond: f64::INFINITY,
            })?;
            let _ = d;
            out.blocks.insert((l, l), inv);
        }
        Ok(out)
    }

    /// Permutation operator from `space` to the space with sites reordered as
    /// new_sites[j] = sites[perm[j]]; basis tuples map accordingly.
    pub fn permutation(space: &Space, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), space.sites().len());
        let new_sites: Vec<SpinLabel> = perm.iter().map(|&p| space.sites()[p]).collect();
        let codomain = GradedSpace::new(new_sites, space.cutoff());
        let mut op = Self::zero(space, &codomain, 0, 0);
        for i in 0..space.dim() {
            let t = space.tuple(i);
            let t_new: Vec<u32> = perm.iter().map(|&p| t[p]).collect();
            let j = codomain
                .index_of(&t_new)
                .expect("permutation preserves level");
            op.add_entry(j, i, C_ONE);
        }
        op
    }

    /// Embed an operator acting on a subset of tensor legs into a larger
    /// space, by basis-index arithmetic (no Kronecker products of identities).
    ///
    /// `legs[p]` is the big-space leg carrying site p of the small operator.
    pub fn embed(big: &Space, legs: &[usize], small: &Self) -> Self {
        assert!(small.domain.same_structure(&small.codomain));
        for (p, &l) in legs.iter().enumerate() {
            assert_eq!(
                small.domain.sites()[p],
                big.sites()[l],
                "embed: site label mismatch at leg {l}"
            );
        }
        // The small operator must resolve every sub-level reachable inside
        // the big cutoff.
        let needed = small
            .domain
            .natural_top()
            .map_or(big.cutoff(), |t| t.min(big.cutoff()));
        assert!(
            small.domain.num_levels() > needed,
            "embed: small operator cutoff {} too small (need {})",
            small.domain.cutoff(),
            needed
        );

        let mut out = Self::zero(big, big, small.lower, small.raise);
        let mut sub_in = vec![0u32; legs.len()];
        let mut t_out: Vec<u32> = Vec::new();
        for i_in in 0..big.dim() {
            let t = big.tuple(i_in);
            for (p, &l) in legs.iter().enumerate() {
                sub_in[p] = t[l];
            }
            let j_in = small
                .domain
                .index_of(&sub_in)
                .expect("sub-tuple within small cutoff");
            let in_l = small.domain.level_of(j_in);
            let j_in_local = j_in - small.domain.level_range(in_l).start;
            let lo = in_l.saturating_sub(small.lower);
            let hi = (in_l + small.raise).min(small.codomain.num_levels() - 1);
            for out_l in lo..=hi {
                let Some(b) = small.blocks.get(&(in_l, out_l)) else {
                    continue;
                };
                let start = small.codomain.level_range(out_l).start;
                for r in 0..b.nrows() {
                    let val = b[(r, j_in_local)];
                    if val == C_ZERO {
                        continue;
                    }
                    let sub_out = small.codomain.tuple(start + r);
                    t_out.clear();
                    t_out.extend_from_slice(t);
                    for (p, &l) in legs.iter().enumerate() {
                        t_out[l] = sub_out[p];
                    }
                    if let Some(i_out) = big.index_of(&t_out) {
                        out.add_entry(i_out, i_in, val);
                    }
                }
            }
        }
        out
    }

    /// Replace one site of `domain_big` through a level-preserving site map
    /// (single site -> one or more sites), extending by the identity on all
    /// other legs. Returns the operator into the correspondingly re-sited
    /// space at the same cutoff.
    pub fn embed_site_map(domain_big: &Space, site: usize, map: &Self) -> Self {
        assert_eq!(map.domain.sites().len(), 1);
        assert_eq!(map.domain.sites()[0], domain_big.sites()[site]);
        assert_eq!((map.lower, map.raise), (0, 0), "site map must preserve level");
        let mut new_sites = Vec::new();
        new_sites.extend_from_slice(&domain_big.sites()[..site]);
        new_sites.extend_from_slice(map.codomain.sites());
        new_sites.extend_from_slice(&domain_big.sites()[site + 1..]);
        let codomain = GradedSpace::new(new_sites, domain_big.cutoff());

        let mut out = Self::zero(domain_big, &codomain, 0, 0);
        let mut t_out: Vec<u32> = Vec::new();
        for i_in in 0..domain_big.dim() {
            let t = domain_big.tuple(i_in);
            let n = t[site];
            let j_in = map
                .domain
                .index_of(&[n])
                .expect("site index within map domain");
            let in_l = map.domain.level_of(j_in);
            let j_in_local = j_in - map.domain.level_range(in_l).start;
            let Some(b) = map.blocks.get(&(in_l, in_l)) else {
                continue;
            };
            let start = map.codomain.level_range(in_l).start;
            for r in 0..b.nrows() {
                let val = b[(r, j_in_local)];
                if val == C_ZERO {
                    continue;
                }
                let sub_out = map.codomain.tuple(start + r);
                t_out.clear();
                t_out.extend_from_slice(&t[..site]);
                t_out.extend_from_slice(sub_out);
                t_out.extend_from_slice(&t[site + 1..]);
                let i_out = codomain
                    .index_of(&t_out)
                    .expect("level-preserving site map stays within cutoff");
                out.add_entry(i_out, i_in, val);
            }
        }
        out
    }

    /// Partial trace over one tensor leg of an endomorphism on a complete
    /// (untruncated) space.
    pub fn trace_leg(&self, leg: usize) -> Self {
        assert!(self.domain.same_structure(&self.codomain));
        assert!(
            !self.domain.is_truncated(),
            "partial trace requires a complete space"
        );
        let mut sites = self.domain.sites().to_vec();
        sites.remove(leg);
        let top = GradedSpace::natural_top_of(&sites).unwrap_or(self.domain.cutoff());
        let reduced = GradedSpace::new(sites, top);
        let mut out = Self::zero(&reduced, &reduced, self.lower, self.raise);
        for (&(in_l, out_l), b) in &self.blocks {
            let in_start = self.domain.level_range(in_l).start;
            let out_start = self.codomain.level_range(out_l).start;
            for c in 0..b.ncols() {
                let t_in = self.domain.tuple(in_start + c);
                for r in 0..b.nrows() {
                    let val = b[(r, c)];
                    if val == C_ZERO {
                        continue;
                    }
                    let t_out = self.codomain.tuple(out_start + r);
                    if t_in[leg] != t_out[leg] {
                        continue;
                    }
                    let mut rin = t_in.to_vec();
                    rin.remove(leg);
                    let mut rout = t_out.to_vec();
                    rout.remove(leg);
                    let i = reduced.index_of(&rin).expect("reduced tuple");
                    let j = reduced.index_of(&rout).expect("reduced tuple");
                    out.add_entry(j, i, val);
                }
            }
        }
        out
    }

    /// Dense matrix over the full graded basis (small spaces only).
    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.codomain.dim(), self.domain.dim());
        for (&(in_l, out_l), b) in &self.blocks {
            let r0 = self.codomain.level_range(out_l).start;
            let c0 = self.domain.level_range(in_l).start;
            m.view_mut((r0, c0), (b.nrows(), b.ncols())).copy_from(b);
        }
        m
    }

    /// Largest singular value ratio over the stored diagonal blocks.
    pub fn diag_block_condition(&self) -> f64 {
        let mut worst: f64 = 1.0;
        for l in 0..self.domain.num_levels().min(self.codomain.num_levels()) {
            if let Some(b) = self.blocks.get(&(l, l)) {
                let sv = b.clone().singular_values();
                let (mx, mn) = (sv.max(), sv.min());
                worst = worst.max(if mn == 0.0 { f64::INFINITY } else { mx / mn });
            }
        }
        worst
    }
}

/// Scale-free residual between two operators:
/// ||A - B||_F / (||A||_F + ||B||_F + 1).
pub fn op_residual(a: &GradedOperator, b: &GradedOperator) -> f64 {
    a.sub(b).frobenius() / (a.frobenius() + b.frobenius() + 1.0)
}

/// Scale-free residual between two vectors.
pub fn vec_residual(a: &GradedVector, b: &GradedVector) -> f64 {
    a.sub(b).norm() / (a.norm() + b.norm() + 1.0)
}
