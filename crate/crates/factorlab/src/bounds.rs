//! Closed-form threshold exponents and first/second-moment quantities used
//! as analytic cross-checks and to size experiments.

use crate::error::{Error, Result};
use num_rational::Rational64;
use serde::Serialize;

/// The exponent `phi(s) = 2s / ((s-1)(s+2))` as an exact rational.
pub fn phi(s: u32) -> Result<Rational64> {
    if s < 2 {
        return Err(Error::Domain(format!("phi requires s >= 2, got {s}")));
    }
    let s = s as i64;
    Ok(Rational64::new(2 * s, (s - 1) * (s + 2)))
}

/// The probability scale `p_s(n)`: `ln n / n` for s = 2, `n^{-phi(s)}` for
/// s >= 3. Natural logarithm throughout.
pub fn p_s(n: u64, s: u32) -> Result<f64> {
    if n < 3 {
        return Err(Error::Domain(format!("p_s requires n >= 3, got {n}")));
    }
    if s < 2 {
        return Err(Error::Domain(format!("p_s requires s >= 2, got {s}")));
    }
    let nf = n as f64;
    if s == 2 {
        Ok(nf.ln() / nf)
    } else {
        let phi = phi(s)?;
        let exp = *phi.numer() as f64 / *phi.denom() as f64;
        Ok((-exp * nf.ln()).exp())
    }
}

#[inline]
pub fn binom(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

pub fn binom_f(n: f64, k: u64) -> f64 {
    let mut acc = 1.0;
    for i in 0..k {
        acc *= (n - i as f64) / (i + 1) as f64;
    }
    acc
}

/// First/second-moment summary in the style of Janson's inequality.
#[derive(Clone, Debug, Serialize)]
pub struct JansonReport {
    /// expected count of the target structures
    pub mu: f64,
    /// pairwise-dependency sum
    pub delta_bar: f64,
    /// tail exponent `mu^2 / (8 (mu + delta_bar))`
    pub exponent_bound: f64,
    /// per-term decomposition of `delta_bar`, when structured
    pub terms: Vec<MomentTerm>,
}

/// One term of a moment table, with its symbolic exponents.
#[derive(Clone, Debug, Serialize)]
pub struct MomentTerm {
    /// shared-vertex count
    pub i: u32,
    /// shared-vertex count outside D (harvest table only; 0 otherwise)
    pub j: u32,
    /// exponent of n in the bound
    pub n_exp: i64,
    /// exponent of p in the bound
    pub p_exp: i64,
    /// numeric value of the term
    pub value: f64,
}

/// Expected `K_s` count in `G(n_sub, p)` together with the standard overlap
/// sum over pairs sharing `2..=s-1` vertices.
pub fn expected_ks_count(n_sub: u64, p: f64, s: u32) -> Result<JansonReport> {
    if n_sub < s as u64 {
        return Err(Error::Domain(format!(
            "expected_ks_count requires n_sub >= s, got {n_sub} < {s}"
        )));
    }
    if !(0.0..=1.0).contains(&p) || p <= 0.0 {
        return Err(Error::Domain(format!("p must be in (0, 1], got {p}")));
    }
    let es = binom(s as u64, 2);
    let mu = binom_f(n_sub as f64, s as u64) * p.powi(es as i32);
    let mut delta_bar = 0.0;
    let mut terms = Vec::new();
    for i in 2..s {
        let shared_pairs = binom(i as u64, 2);
        let value = binom_f(n_sub as f64, s as u64)
            * binom_f(s as f64, i as u64)
            * binom_f((n_sub - s as u64) as f64, (s - i) as u64)
            * p.powi((2 * es - shared_pairs) as i32);
        delta_bar += value;
        terms.push(MomentTerm {
            i,
            j: 0,
            n_exp: (2 * s - i) as i64,
            p_exp: (2 * es - shared_pairs) as i64,
            value,
        });
    }
    Ok(JansonReport {
        mu,
        delta_bar,
        exponent_bound: mu * mu / (8.0 * (mu + delta_bar)),
        terms,
    })
}

/// Moment table for the harvest pipeline's candidate book at `p = C p_s(n)`.
///
/// `mu` uses the idealized candidate count
/// `|W| = floor(n/3) * ceil(g/5) * binom(n - 2 floor(n/3), s - 1)`, matching
/// the pipeline's partition rounding, with the realized
/// `kappa = |W| / (g n^s)` reported. The per-(i, j) terms carry the integer
/// exponents of `n` and `p` in the pairwise-dependency bounds, with the
/// maximum-degree ratio `delta` entering the (i, 1) terms.
pub fn harvest_moments(n: u64, g: u64, s: u32, c: f64, delta: f64) -> Result<HarvestMoments> {
    if s < 2 {
        return Err(Error::Domain(format!("harvest_moments requires s >= 2, got {s}")));
    }
    if g == 0 || g > n {
        return Err(Error::Domain(format!("g must be in 1..=n, got {g}")));
    }
    let b = binom(s as u64 + 1, 2) as i64;
    let p = c * p_s(n, s)?;
    let a_size = n / 3;
    let d_size = n - 2 * a_size;
    let w_size = a_size as f64 * (g as f64 / 5.0).ceil() * binom_f(d_size as f64, s as u64 - 1);
    let kappa = w_size / (g as f64 * (n as f64).powi(s as i32));
    let mu = w_size * p.powi(b as i32 - 1);
    let nf = n as f64;
    let gf = g as f64;
    let mut terms = Vec::new();
    let mut delta_bar = 0.0;
    // (i, 0): g^2 n^{2s-i} p^{2B-2-C(i,2)}   (from (gn)^2 n^{2s-i-2})
    // (i, 1): delta g n^{2s-i+1} p^{2B-2-C(i,2)}   (cherry-count term)
    // (i, 2): g n^{2s-i+1} p^{2B-1-C(i,2)}
    for i in 1..=s as i64 {
        let ci = i * (i - 1) / 2;
        for j in 0..=2i64 {
            let (n_exp, p_exp, coeff) = match j {
                0 => (2 * s as i64 - i, 2 * b - 2 - ci, gf * gf),
                1 => (2 * s as i64 - i + 1, 2 * b - 2 - ci, delta * gf),
                _ => (2 * s as i64 - i + 1, 2 * b - 1 - ci, gf),
            };
            let value = coeff * nf.powi(n_exp as i32) * p.powf(p_exp as f64);
            delta_bar += value;
            terms.push(MomentTerm {
                i: i as u32,
                j: j as u32,
                n_exp,
                p_exp,
                value,
            });
        }
    }
    Ok(HarvestMoments {
        report: JansonReport {
            mu,
            delta_bar,
            exponent_bound: mu * mu / (8.0 * (mu + delta_bar)),
            terms,
        },
        kappa,
        p,
        w_size,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct HarvestMoments {
    #[serde(flatten)]
    pub report: JansonReport,
    /// realized `|W| / (g n^s)`
    pub kappa: f64,
    /// the probability `C * p_s(n)` used
    pub p: f64,
    /// idealized candidate count `|W|`
    pub w_size: f64,
}

/// Failure-probability exponent `c_s nu^2 n^2 p` with `c_s = 1/64` and
/// `p = C p_s(n)`, used to size union bounds in experiment design.
pub fn divb_bound(n: u64, nu: f64, s: u32, c: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&nu) {
        return Err(Error::Domain(format!("nu must be in [0, 1], got {nu}")));
    }
    let p = c * p_s(n, s)?;
    Ok(nu * nu * (n as f64) * (n as f64) * p / 64.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_values() {
        assert_eq!(phi(3).unwrap(), Rational64::new(3, 5));
        assert_eq!(phi(2).unwrap(), Rational64::new(1, 1));
        assert_eq!(phi(4).unwrap(), Rational64::new(4, 9));
        assert!(phi(1).is_err());
    }

    #[test]
    fn phi_strictly_decreasing() {
        for s in 2..10 {
            assert!(phi(s).unwrap() > phi(s + 1).unwrap());
        }
    }

    #[test]
    fn p_s_formula_values() {
        let v = p_s(1000, 2).unwrap();
        assert!((v - 1000f64.ln() / 1000.0).abs() < 1e-15);
        assert!((v - 0.0069078).abs() < 1e-6);
        let v3 = p_s(100, 3).unwrap();
        assert!((v3 - 100f64.powf(-0.6)).abs() < 1e-12);
    }

    #[test]
    fn nps_identity_exact_in_rationals() {
        // n^s p_s^{C(s+1,2)-1} = 1 iff phi(s) * (C(s+1,2) - 1) = s.
        for s in 3..=10u32 {
            let lhs = phi(s).unwrap() * Rational64::from((binom(s as u64 + 1, 2) - 1) as i64);
            assert_eq!(lhs, Rational64::from(s as i64));
        }
    }

    #[test]
    fn nps_identity_in_floats() {
        for s in 3..=10u32 {
            let e = binom(s as u64 + 1, 2) - 1;
            for &n in &[100u64, 1_000, 10_000, 100_000, 1_000_000] {
                let p = p_s(n, s).unwrap();
                let value = (n as f64).powi(s as i32) * p.powi(e as i32);
                assert!(
                    (value - 1.0).abs() < 1e-12,
                    "s={s} n={n} value={value}"
                );
            }
        }
    }

    #[test]
    fn ps_above_two_over_s() {
        // n^{-phi(s)} > n^{-2/s} for s >= 3.
        for s in 3..=10u32 {
            let p = phi(s).unwrap();
            assert!(p < Rational64::new(2, s as i64));
        }
    }

    #[test]
    fn ks_count_single_candidate() {
        let r = expected_ks_count(4, 0.37, 4).unwrap();
        assert!((r.mu - 0.37f64.powi(6)).abs() < 1e-15);
    }

    #[test]
    fn ks_count_complete() {
        let r = expected_ks_count(10, 1.0, 3).unwrap();
        assert!((r.mu - 120.0).abs() < 1e-9);
        assert!(r.delta_bar.is_finite() && r.delta_bar > 0.0);
        assert!(r.exponent_bound > 0.0);
    }

    #[test]
    fn ks_count_supercritical() {
        // At p = n^{-2/s + 0.1} the per-vertex expected K_3 count exceeds 1
        // once n is large enough for the n^{0.3}/6 growth to clear 1; direct
        // evaluation puts the crossing near n = 450.
        let n_sub = 500u64;
        let p = (n_sub as f64).powf(-2.0 / 3.0 + 0.1);
        let r = expected_ks_count(n_sub, p, 3).unwrap();
        assert!(r.mu / n_sub as f64 > 1.0, "ratio {}", r.mu / n_sub as f64);
        let small = expected_ks_count(200, 200f64.powf(-2.0 / 3.0 + 0.1), 3).unwrap();
        assert!(small.mu / 200.0 < 1.0);
    }

    #[test]
    fn harvest_mu_matches_kappa_form() {
        // mu = kappa g C^{B-1} via the n^s p_s^{B-1} = 1 identity (s >= 3)
        let n = 240u64;
        let g = 30u64;
        let s = 3u32;
        let c = 4.0;
        let hm = harvest_moments(n, g, s, c, 0.5).unwrap();
        let b = binom(s as u64 + 1, 2) - 1;
        let expected = hm.kappa * g as f64 * c.powi(b as i32);
        assert!(
            (hm.report.mu - expected).abs() / expected < 1e-9,
            "mu={} kappa-form={expected}",
            hm.report.mu
        );
    }

    #[test]
    fn harvest_doubling_c_scales_mu() {
        let a = harvest_moments(240, 30, 3, 2.0, 0.5).unwrap();
        let b = harvest_moments(240, 30, 3, 4.0, 0.5).unwrap();
        let e = binom(4, 2) - 1;
        let ratio = b.report.mu / a.report.mu;
        assert!((ratio - 2f64.powi(e as i32)).abs() < 1e-9);
    }

    #[test]
    fn harvest_term_exponents() {
        // (i, j) term exponents: n-exponent 2s - i (+1 for j >= 1),
        // p-exponent 2 binom(s+1,2) - 2 - binom(i,2) (+1 for j = 2).
        let s = 3u32;
        let b = binom(s as u64 + 1, 2) as i64;
        let hm = harvest_moments(300, 20, s, 2.0, 0.5).unwrap();
        for t in &hm.report.terms {
            let ci = (t.i as i64) * (t.i as i64 - 1) / 2;
            let expected_n = 2 * s as i64 - t.i as i64 + if t.j == 0 { 0 } else { 1 };
            let expected_p = 2 * b - 2 - ci + if t.j == 2 { 1 } else { 0 };
            assert_eq!(t.n_exp, expected_n, "term ({}, {})", t.i, t.j);
            assert_eq!(t.p_exp, expected_p, "term ({}, {})", t.i, t.j);
        }
        // F_{1,.} terms dominate: scale with g, while i >= 2 terms vanish
        let f1: f64 = hm.report.terms.iter().filter(|t| t.i == 1 && t.j <= 1).map(|t| t.value).sum();
        let f2: f64 = hm.report.terms.iter().filter(|t| t.i >= 2).map(|t| t.value).sum();
        assert!(f1 > f2);
    }

    #[test]
    fn divb_values() {
        assert_eq!(divb_bound(100, 0.0, 3, 2.0).unwrap(), 0.0);
        let e1 = divb_bound(100, 0.1, 3, 2.0).unwrap();
        let e2 = divb_bound(100, 0.2, 3, 2.0).unwrap();
        assert!((e2 / e1 - 4.0).abs() < 1e-12);
        // independent recomputation
        let expected = (1.0 / 64.0) * 0.01 * 10_000.0 * (2.0 * 100f64.powf(-0.6));
        assert!((e1 - expected).abs() / expected < 1e-12);
    }
}
