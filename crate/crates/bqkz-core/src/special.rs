//! Scalar special functions: q-shifted factorials, the explicit weight
//! functions g, h, F of the Jackson sums, diagonal K coefficients, the
//! crossing scalar, and standalone trigonometric identity checkers.
//!
//! All functions are pure; non-integer exponentials are evaluated as
//! `exp(c * x)` directly so branch behavior is deterministic.

use crate::{C64, Error, Result, SpectralParams, ToleranceProfile};

const ONE: C64 = C64::new(1.0, 0.0);

/// q-shifted factorial (x; q)_inf = prod_{i>=0} (1 - q^i x).
///
/// The product is truncated once |q^i x| drops below `profile.qpoch_stop`;
/// terms are multiplied in the order i = 0, 1, 2, ...
pub fn q_pochhammer(x: C64, q: C64, profile: &ToleranceProfile) -> Result<C64> {
    let qn = q.norm();
    if qn >= 1.0 {
        return Err(Error::DivergentSeries { modulus: qn });
    }
    let mut acc = ONE;
    let mut term = x;
    // |q^i x| decays geometrically; the iteration cap is unreachable for any
    // |q| < 1 representable in f64 without underflowing first.
    for _ in 0..16384 {
        if term.norm() < profile.qpoch_stop {
            break;
        }
        acc *= ONE - term;
        term *= q;
    }
    Ok(acc)
}

/// Product of q-shifted factorials (x_1, ..., x_s; q)_inf.
fn q_pochhammer_multi(xs: &[C64], q: C64, profile: &ToleranceProfile) -> Result<C64> {
    let mut acc = ONE;
    for &x in xs {
        acc *= q_pochhammer(x, q, profile)?;
    }
    Ok(acc)
}

pub(crate) fn guard_denominator(
    value: C64,
    context: &'static str,
    profile: &ToleranceProfile,
) -> Result<C64> {
    let m = value.norm();
    if m <= profile.pole_guard {
        Err(Error::PoleHit {
            context,
            magnitude: m,
        })
    } else {
        Ok(value)
    }
}

/// Boundary weight g_{xi+,xi-}(x) entering the Jackson summand.
///
/// Satisfies
/// g(x+tau)/g(x) = sinh(xi- - x - eta/2) sinh(xi+ - x - tau/2 - eta/2)
///               / (sinh(xi- + x + tau - eta/2) sinh(xi+ + x + tau/2 - eta/2)).
pub fn weight_g(x: C64, params: &SpectralParams, profile: &ToleranceProfile) -> Result<C64> {
    params.check_q_modulus()?;
    let eta = params.eta;
    let tau = params.tau;
    let q = params.q();
    let q2 = q * q;
    let xim = params.xi_minus;
    let xip = params.xi_plus;

    let pre = (((xim + xip - eta) * 2.0 / tau + ONE) * x).exp();
    let num = q_pochhammer_multi(
        &[
            q2 * ((x + xim) * 2.0 - eta).exp(),
            q * ((x + xip) * 2.0 - eta).exp(),
        ],
        q2,
        profile,
    )?;
    let den = q_pochhammer_multi(
        &[
            ((x - xim) * 2.0 + eta).exp(),
            q * ((x - xip) * 2.0 + eta).exp(),
        ],
        q2,
        profile,
    )?;
    let den = guard_denominator(den, "weight_g q-factor denominator", profile)?;
    Ok(pre * num / den)
}

/// Pair-interaction weight h(x).
///
/// Satisfies h(x+tau)/h(x) = sinh(x+tau) sinh(x+eta) / (sinh(x) sinh(x+tau-eta)).
pub fn weight_h(x: C64, params: &SpectralParams, profile: &ToleranceProfile) -> Result<C64> {
    params.check_q_modulus()?;
    let eta = params.eta;
    let tau = params.tau;
    let q2 = (tau * 2.0).exp();

    let pre = (-eta * 2.0 * x / tau).exp() * (ONE - (x * 2.0).exp());
    let num = q_pochhammer(q2 * ((x - eta) * 2.0).exp(), q2, profile)?;
    let den = q_pochhammer(((x + eta) * 2.0).exp(), q2, profile)?;
    let den = guard_denominator(den, "weight_h q-factor denominator", profile)?;
    Ok(pre * num / den)
}

/// Site weight F^ell(x).
///
/// Satisfies F(x+tau)/F(x) = sinh(x+tau-ell eta)/sinh(x+tau+ell eta) as well as
/// the fusion compatibility F^{k+1/2}(x) = F^k(x+eta/2) F^{1/2}(x-k eta).
pub fn weight_f(
    ell: C64,
    x: C64,
    params: &SpectralParams,
    profile: &ToleranceProfile,
) -> Result<C64> {
    params.check_q_modulus()?;
    let eta = params.eta;
    let tau = params.tau;
    let q2 = (tau * 2.0).exp();

    let pre = (ell * eta * 2.0 * x / tau).exp();
    let num = q_pochhammer(q2 * ((x + ell * eta) * 2.0).exp(), q2, profile)?;
    let den = q_pochhammer(q2 * ((x - ell * eta) * 2.0).exp(), q2, profile)?;
    let den = guard_denominator(den, "weight_f q-factor denominator", profile)?;
    Ok(pre * num / den)
}

/// Diagonal K coefficient
/// C_n^ell(x; xi) = prod_{j=1}^{n-1} sinh(xi - x + (ell + 1/2 - j) eta)
///                                 / sinh(xi + x + (ell + 1/2 - j) eta),
/// with C_1 = 1.
pub fn k_diag_coeff(
    n: usize,
    ell: C64,
    x: C64,
    xi: C64,
    params: &SpectralParams,
    profile: &ToleranceProfile,
) -> Result<C64> {
    assert!(n >= 1, "diagonal K coefficients are indexed from 1");
    let eta = params.eta;
    let mut acc = ONE;
    for j in 1..n {
        let shift = (ell + C64::new(0.5 - j as f64, 0.0)) * eta;
        let den = guard_denominator((xi + x + shift).sinh(), "k_diag_coeff denominator", profile)?;
        acc *= (xi - x + shift).sinh() / den;
    }
    Ok(acc)
}

/// Crossing scalar theta^ell(x) = sinh(x - (1/2 - ell) eta) / sinh(x - (1/2 + ell) eta).
pub fn crossing_scalar(
    ell: C64,
    x: C64,
    params: &SpectralParams,
    profile: &ToleranceProfile,
) -> Result<C64> {
    let eta = params.eta;
    let den = guard_denominator(
        (x - (C64::new(0.5, 0.0) + ell) * eta).sinh(),
        "crossing_scalar denominator",
        profile,
    )?;
    Ok((x - (C64::new(0.5, 0.0) - ell) * eta).sinh() / den)
}

/// Residual of the three-term product identity
/// sinh(xi+x) sinh(x-z) + sinh(xi-x) sinh(x+z) = sinh(xi-z) sinh(2x).
pub fn check_coeffcond4(xi: C64, x: C64, z: C64) -> f64 {
    let lhs = (xi + x).sinh() * (x - z).sinh() + (xi - x).sinh() * (x + z).sinh();
    let rhs = (xi - z).sinh() * (x * 2.0).sinh();
    (lhs - rhs).norm() / (lhs.norm() + rhs.norm() + 1.0)
}

/// sinh(a+b) sinh(a-b).
fn sinh_pm(a: C64, b: C64) -> C64 {
    (a + b).sinh() * (a - b).sinh()
}

/// Signed summand of the multivariate identity: the subset encoded in `bits`
/// fixes the sign pattern eps_i = +1 (i in subset) / -1 (i outside) and the
/// shifted points x_i - eps_i eta/2.
fn subset_term(bits: usize, xs: &[C64], t: C64, xi: C64, ell: C64, eta: C64) -> C64 {
    let d = xs.len();
    let mut term = if bits.count_ones() % 2 == 1 { -ONE } else { ONE };
    let mut shifted = Vec::with_capacity(d);
    for (i, &x) in xs.iter().enumerate() {
        let eps = if bits >> i & 1 == 1 { 1.0 } else { -1.0 };
        let ex = x * eps;
        term *= (xi + ex).sinh() * (t + ex + ell * eta).sinh();
        shifted.push(x - eta * (0.5 * eps));
    }
    for i in 0..d {
        for j in (i + 1)..d {
            term *= sinh_pm(shifted[i], shifted[j]);
        }
    }
    term
}

/// Residual of the multivariate generalization of the three-term identity:
/// the 2^d signed subset sum against the closed form
/// delta(x) * (-1)^d prod_{i=1}^d sinh(xi + t + (ell - i + 1) eta),
/// where delta is the Weyl denominator of type C_d.
pub fn check_multivariable(xs: &[C64], t: C64, xi: C64, ell: C64, params: &SpectralParams) -> f64 {
    let d = xs.len();
    assert!((1..=12).contains(&d), "subset enumeration limited to d <= 12");
    let eta = params.eta;

    let mut lhs = C64::new(0.0, 0.0);
    for bits in 0..(1usize << d) {
        lhs += subset_term(bits, xs, t, xi, ell, eta);
    }

    let mut weyl = ONE;
    for i in 0..d {
        for j in (i + 1)..d {
            weyl *= sinh_pm(xs[i], xs[j]);
        }
    }
    for &x in xs {
        weyl *= (x * 2.0).sinh();
    }
    let mut rhs = weyl * if d % 2 == 1 { -ONE } else { ONE };
    for i in 1..=d {
        rhs *= (xi + t + (ell - C64::new(i as f64 - 1.0, 0.0)) * eta).sinh();
    }

    (lhs - rhs).norm() / (lhs.norm() + rhs.norm() + 1.0)
}

/// The signed 2^d sum whose invariance under t -> -t - tau underlies the
/// difference-equation step at depth d.
fn depth_sum(xs: &[C64], t: C64, xi: C64, ell: C64, params: &SpectralParams) -> C64 {
    let d = xs.len();
    let eta = params.eta;
    let tau = params.tau;

    let mut pre = ONE;
    for i in 1..=d {
        pre *= (xi - t - tau * 0.5 + (ell + C64::new(1.0 - i as f64, 0.0)) * eta).sinh()
            / (t + xs[i - 1] - ell * eta).sinh();
    }

    let mut sum = C64::new(0.0, 0.0);
    for bits in 0..(1usize << d) {
        let inside = |i: usize| bits >> i & 1 == 1;
        let mut term = if bits.count_ones() % 2 == 1 { -ONE } else { ONE };
        for i in 0..d {
            if !inside(i) {
                continue;
            }
            for j in (i + 1)..d {
                if inside(j) {
                    term *= (xs[i] + xs[j] - tau - eta).sinh() / (xs[i] + xs[j] - tau + eta).sinh();
                }
            }
            term *= (xi + xs[i] - tau * 0.5).sinh() * (t + xs[i] + ell * eta).sinh()
                / ((xi - xs[i] + tau * 0.5).sinh() * (t - xs[i] + tau + ell * eta).sinh());
            for j in 0..d {
                if !inside(j) {
                    term *= (xs[i] - xs[j] - eta).sinh() * (xs[i] + xs[j] - tau).sinh()
                        / ((xs[i] - xs[j]).sinh() * (xs[i] + xs[j] - tau + eta).sinh());
                }
            }
        }
        sum += term;
    }
    pre * sum
}

/// Residual of the exchange symmetry t_r <-> -t_r - tau of the depth-d sum.
pub fn check_trigident(
    xs: &[C64],
    t_r: C64,
    xi_plus: C64,
    ell_r: C64,
    params: &SpectralParams,
) -> f64 {
    let d = xs.len();
    assert!((1..=10).contains(&d), "subset enumeration limited to d <= 10");
    let xi = xi_plus - params.eta * 0.5;
    let lhs = depth_sum(xs, t_r, xi, ell_r, params);
    let rhs = depth_sum(xs, -t_r - params.tau, xi, ell_r, params);
    (lhs - rhs).norm() / (lhs.norm() + rhs.norm() + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::Sampler;

    fn test_params() -> SpectralParams {
        SpectralParams::new(
            C64::new(0.41, 0.23),
            C64::new(-1.1, 0.37),
            C64::new(-0.53, 0.19),
            C64::new(-0.61, -0.11),
        )
    }

    /// Independent direct-product oracle with a fixed, large term count.
    fn pochhammer_oracle(x: C64, q: C64, terms: usize) -> C64 {
        let mut acc = ONE;
        let mut xq = x;
        for _ in 0..terms {
            acc *= ONE - xq;
            xq *= q;
        }
        acc
    }

    #[test]
    fn pochhammer_zero_argument() {
        let profile = ToleranceProfile::default();
        let v = q_pochhammer(C64::new(0.0, 0.0), C64::new(0.5, 0.0), &profile).unwrap();
        assert_eq!(v, ONE);
    }

    #[test]
    fn pochhammer_zero_nome() {
        let profile = ToleranceProfile::default();
        let v = q_pochhammer(C64::new(0.3, 0.0), C64::new(0.0, 0.0), &profile).unwrap();
        assert!((v - C64::new(0.7, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn pochhammer_matches_direct_product() {
        let profile = ToleranceProfile::default();
        let x = C64::new(0.3, 0.1);
        let q = C64::new(0.4, -0.2);
        let v = q_pochhammer(x, q, &profile).unwrap();
        let oracle = pochhammer_oracle(x, q, 200);
        assert!((v - oracle).norm() < 1e-13, "diff {:e}", (v - oracle).norm());
    }

    #[test]
    fn pochhammer_rejects_divergent_nome() {
        let profile = ToleranceProfile::default();
        let err = q_pochhammer(C64::new(0.3, 0.0), C64::new(1.0, 0.2), &profile);
        assert!(matches!(err, Err(Error::DivergentSeries { .. })));
    }

    /// Second implementation of weight_g via the direct-product oracle with a
    /// 4x tail length.
    fn weight_g_oracle(x: C64, params: &SpectralParams) -> C64 {
        let eta = params.eta;
        let tau = params.tau;
        let q = params.q();
        let q2 = q * q;
        let pre = (((params.xi_minus + params.xi_plus - eta) * 2.0 / tau + ONE) * x).exp();
        let n1 = pochhammer_oracle(q2 * ((x + params.xi_minus) * 2.0 - eta).exp(), q2, 800);
        let n2 = pochhammer_oracle(q * ((x + params.xi_plus) * 2.0 - eta).exp(), q2, 800);
        let d1 = pochhammer_oracle(((x - params.xi_minus) * 2.0 + eta).exp(), q2, 800);
        let d2 = pochhammer_oracle(q * ((x - params.xi_plus) * 2.0 + eta).exp(), q2, 800);
        pre * n1 * n2 / (d1 * d2)
    }

    #[test]
    fn weight_g_matches_second_implementation() {
        let params = test_params();
        let profile = ToleranceProfile::default();
        let mut sampler = Sampler::new(11);
        for _ in 0..20 {
            let x = sampler.draw();
            let v = weight_g(x, &params, &profile).unwrap();
            let o = weight_g_oracle(x, &params);
            assert!(
                (v - o).norm() / (o.norm() + 1.0) < 1e-12,
                "x = {x}, got {v}, oracle {o}"
            );
        }
    }

    #[test]
    fn weight_g_functional_equation() {
        let params = test_params();
        let profile = ToleranceProfile::default();
        let eta = params.eta;
        let tau = params.tau;
        let mut sampler = Sampler::new(7);
        for _ in 0..100 {
            let x = sampler.draw();
            let lhs = weight_g(x + tau, &params, &profile).unwrap()
                / weight_g(x, &params, &profile).unwrap();
            let rhs = (params.xi_minus - x - eta * 0.5).sinh()
                * (params.xi_plus - x - tau * 0.5 - eta * 0.5).sinh()
                / ((params.xi_minus + x + tau - eta * 0.5).sinh()
                    * (params.xi_plus + x + tau * 0.5 - eta * 0.5).sinh());
            assert!((lhs - rhs).norm() < 1e-10, "x = {x}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn weight_h_functional_equation_and_zero() {
        let params = test_params();
        let profile = ToleranceProfile::default();
        let eta = params.eta;
        let tau = params.tau;
        let h0 = weight_h(C64::new(0.0, 0.0), &params, &profile).unwrap();
        assert!(h0.norm() < 1e-15);
        let mut sampler = Sampler::new(13);
        for _ in 0..100 {
            let x = sampler.draw_guarded(|x| x.sinh().norm() > 1e-2);
            let lhs = weight_h(x + tau, &params, &profile).unwrap()
                / weight_h(x, &params, &profile).unwrap();
            let rhs = (x + tau).sinh() * (x + eta).sinh() / (x.sinh() * (x + tau - eta).sinh());
            assert!((lhs - rhs).norm() < 1e-10, "x = {x}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn weight_f_trivial_at_zero_spin() {
        let params = test_params();
        let profile = ToleranceProfile::default();
        let mut sampler = Sampler::new(17);
        for _ in 0..10 {
            let x = sampler.draw();
            let v = weight_f(C64::new(0.0, 0.0), x, &params, &profile).unwrap();
            assert!((v - ONE).norm() < 1e-14);
        }
    }

    #[test]
    fn weight_f_functional_equation_random() {
        let params = test_params();
        let profile = ToleranceProfile::default();
        let tau = params.tau;
        let eta = params.eta;
        let mut sampler = Sampler::new(19);
        for _ in 0..100 {
            let x = sampler.draw();
            let ell = sampler.draw();
            let lhs = weight_f(ell, x + tau, &params, &profile).unwrap()
                / weight_f(ell, x, &params, &profile).unwrap();
            let rhs = (x + tau - ell * eta).sinh() / (x + tau + ell * eta).sinh();
            assert!((lhs - rhs).norm() < 1e-10, "x = {x}, ell = {ell}");
        }
    }

    #[test]
    fn weight_f_fusion_compatibility() {
        let params = test_params();
        let profile = ToleranceProfile::default();
        let eta = params.eta;
        let mut sampler = Sampler::new(23);
        for twice_k in 1..=3u32 {
            let k = C64::new(twice_k as f64 / 2.0, 0.0);
            for _ in 0..20 {
                let x = sampler.draw();
                let lhs = weight_f(k + 0.5, x, &params, &profile).unwrap();
                let rhs = weight_f(k, x + eta * 0.5, &params, &profile).unwrap()
                    * weight_f(C64::new(0.5, 0.0), x - k * eta, &params, &profile).unwrap();
                assert!(
                    (lhs - rhs).norm() / (lhs.norm() + 1.0) < 1e-10,
                    "k = {k}, x = {x}"
                );
            }
        }
    }

    #[test]
    fn k_diag_coeff_base_cases() {
        let params = test_params();
        let profile = ToleranceProfile::default();
        let ell = C64::new(0.77, 0.21);
        let x = C64::new(0.31, -0.12);
        let xi = C64::new(-0.53, 0.19);
        let c1 = k_diag_coeff(1, ell, x, xi, &params, &profile).unwrap();
        assert_eq!(c1, ONE);
        let c2 = k_diag_coeff(2, ell, x, xi, &params, &profile).unwrap();
        let shift = (ell - 0.5) * params.eta;
        let expect = (xi - x + shift).sinh() / (xi + x + shift).sinh();
        assert!((c2 - expect).norm() < 1e-14);
        for n in 1..=5 {
            let c = k_diag_coeff(n, ell, C64::new(0.0, 0.0), xi, &params, &profile).unwrap();
            assert!((c - ONE).norm() < 1e-13, "n = {n}: factors at x=0 are all 1");
        }
    }

    #[test]
    fn crossing_scalar_values() {
        let params = test_params();
        let profile = ToleranceProfile::default();
        let eta = params.eta;
        let x = C64::new(0.45, 0.31);
        let half = C64::new(0.5, 0.0);
        let v = crossing_scalar(half, x, &params, &profile).unwrap();
        let expect = x.sinh() / (x - eta).sinh();
        assert!((v - expect).norm() < 1e-14);
        // Numerator zero at x = (1/2 - ell) eta.
        let ell = C64::new(0.8, 0.25);
        let v0 = crossing_scalar(ell, (half - ell) * eta, &params, &profile).unwrap();
        assert!(v0.norm() < 1e-13);
    }

    #[test]
    fn coeffcond4_random_and_degenerate() {
        let mut sampler = Sampler::new(29);
        for _ in 0..100 {
            let (xi, x, z) = (sampler.draw(), sampler.draw(), sampler.draw());
            assert!(check_coeffcond4(xi, x, z) < 1e-12);
        }
        let (xi, x) = (sampler.draw(), sampler.draw());
        assert!(check_coeffcond4(xi, x, x) < 1e-15);
        assert!(check_coeffcond4(C64::new(0.0, 0.0), x, sampler.draw()) < 1e-14);
    }

    #[test]
    fn multivariable_identity_reduces_to_three_term_at_d1() {
        let params = test_params();
        let mut sampler = Sampler::new(31);
        for _ in 0..100 {
            let xs = [sampler.draw()];
            let r =
                check_multivariable(&xs, sampler.draw(), sampler.draw(), sampler.draw(), &params);
            assert!(r < 1e-12, "residual {r:e}");
        }
    }

    #[test]
    fn multivariable_identity_middle_and_large_d() {
        let params = test_params();
        let mut sampler = Sampler::new(37);
        for _ in 0..25 {
            let xs: Vec<C64> = (0..3).map(|_| sampler.draw()).collect();
            let r =
                check_multivariable(&xs, sampler.draw(), sampler.draw(), sampler.draw(), &params);
            assert!(r < 1e-10, "d=3 residual {r:e}");
        }
        for _ in 0..10 {
            let xs: Vec<C64> = (0..6).map(|_| sampler.draw()).collect();
            let r =
                check_multivariable(&xs, sampler.draw(), sampler.draw(), sampler.draw(), &params);
            assert!(r < 1e-9, "d=6 residual {r:e}");
        }
    }

    #[test]
    fn trigident_exchange_symmetry() {
        let params = test_params();
        let mut sampler = Sampler::new(41);
        for _ in 0..50 {
            let xs = [sampler.draw()];
            let r = check_trigident(&xs, sampler.draw(), sampler.draw(), sampler.draw(), &params);
            assert!(r < 1e-11, "d=1 residual {r:e}");
        }
        for _ in 0..20 {
            let xs: Vec<C64> = (0..4).map(|_| sampler.draw()).collect();
            let r = check_trigident(&xs, sampler.draw(), sampler.draw(), sampler.draw(), &params);
            assert!(r < 1e-9, "d=4 residual {r:e}");
        }
        // Fixed point of the exchange: t = -tau/2.
        let xs: Vec<C64> = (0..3).map(|_| sampler.draw()).collect();
        let r = check_trigident(&xs, -params.tau * 0.5, sampler.draw(), sampler.draw(), &params);
        assert_eq!(r, 0.0);
    }
}
