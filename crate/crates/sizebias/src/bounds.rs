//! Closed-form evaluation of the sub-gaussian tail bounds and their
//! constants.
//!
//! For a nonnegative random vector with means `mu_i > 0`, standard
//! deviations `sigma_i > 0`, and bounded size-biased couplings of radius
//! `K` in every direction, the standardized tails satisfy
//!
//! ```text
//! P((W - mu)/sigma <= -t)  <=  exp(-|t|^2 / (2 K1))
//! P((W - mu)/sigma >=  t)  <=  exp(-|t|^2 / (2 (K1 + K2 |t|)))
//! ```
//!
//! component-wise, for every t >= 0, with
//! `K1 = (2K/sigma_(1)) * |mu/sigma|_2` and `K2 = K / (2 sigma_(1))` where
//! `sigma_(1)` is the smallest coordinate standard deviation. This module
//! evaluates those expressions (plus the univariate and i.i.d.
//! specializations and the pattern-statistic constants) in 64-bit floats;
//! the exactness-critical work all lives upstream in the rational layer.

use num::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::rational;

/// The constants feeding both tail bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundParams {
    pub k: usize,
    /// Almost-sure coupling radius K.
    pub coupling_radius: f64,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    /// `sigma_(1) = min_i sigma_i`.
    pub sigma_min: f64,
    /// `K1 = (2 K / sigma_(1)) * ||mu / sigma||_2`.
    pub k1: f64,
    /// `K2 = K / (2 sigma_(1))`.
    pub k2: f64,
}

/// A standardized tail threshold and which tail it queries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailQuery {
    pub t: Vec<f64>,
    pub side: TailSide,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailSide {
    Lower,
    Upper,
}

/// Validates positivity and assembles [`BoundParams`].
pub fn bound_params(mu: &[f64], sigma: &[f64], coupling_radius: f64) -> Result<BoundParams, Error> {
    if mu.is_empty() {
        return Err(Error::NonPositiveInput { field: "k" });
    }
    if sigma.len() != mu.len() {
        return Err(Error::DimensionMismatch {
            expected: mu.len(),
            got: sigma.len(),
        });
    }
    if !(coupling_radius > 0.0) {
        return Err(Error::NonPositiveInput { field: "K" });
    }
    if mu.iter().any(|&m| !(m > 0.0)) {
        return Err(Error::NonPositiveInput { field: "mu" });
    }
    if sigma.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::NonPositiveInput { field: "sigma" });
    }
    let sigma_min = sigma.iter().cloned().fold(f64::INFINITY, f64::min);
    let mu_over_sigma_norm = norm2(
        &mu.iter()
            .zip(sigma)
            .map(|(m, s)| m / s)
            .collect::<Vec<_>>(),
    );
    Ok(BoundParams {
        k: mu.len(),
        coupling_radius,
        mu: mu.to_vec(),
        sigma: sigma.to_vec(),
        sigma_min,
        k1: 2.0 * coupling_radius / sigma_min * mu_over_sigma_norm,
        k2: coupling_radius / (2.0 * sigma_min),
    })
}

/// `exp(-|t|^2 / (2 K1))`.
pub fn lower_tail_bound(params: &BoundParams, t: &[f64]) -> Result<f64, Error> {
    let norm = checked_norm(params, t)?;
    Ok((-norm * norm / (2.0 * params.k1)).exp())
}

/// `exp(-|t|^2 / (2 (K1 + K2 |t|)))`.
pub fn upper_tail_bound(params: &BoundParams, t: &[f64]) -> Result<f64, Error> {
    let norm = checked_norm(params, t)?;
    if norm == 0.0 {
        return Ok(1.0);
    }
    Ok((-norm * norm / (2.0 * (params.k1 + params.k2 * norm))).exp())
}

/// Univariate bounds on the *unstandardized* deviation:
/// `P(W - mu <= -t) <= exp(-t^2/(4 K mu))` and
/// `P(W - mu >= t) <= exp(-t^2/(4 K mu + K t))`. This is the k = 1 case
/// after the substitution t -> t/sigma, so sigma cancels.
pub fn univariate_bounds(mu: f64, coupling_radius: f64, t: f64) -> Result<(f64, f64), Error> {
    if !(mu > 0.0) {
        return Err(Error::NonPositiveInput { field: "mu" });
    }
    if !(coupling_radius > 0.0) {
        return Err(Error::NonPositiveInput { field: "K" });
    }
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeT);
    }
    let lower = (-t * t / (4.0 * coupling_radius * mu)).exp();
    let upper = (-t * t / (4.0 * coupling_radius * mu + coupling_radius * t)).exp();
    Ok((lower, upper))
}

/// Tail bounds for i.i.d. nonnegative coordinates with shared mean `mu`,
/// shared variance `sigma2`, and coordinates bounded by `K`:
/// lower `exp(-sigma2 |t|^2 / (4 K sqrt(k) mu))`,
/// upper `exp(-|t|^2 / (4 K sqrt(k) mu / sigma2 + K |t| / sigma))`.
pub fn iid_bounds(
    k: usize,
    mu: f64,
    sigma2: f64,
    coupling_radius: f64,
    t: &[f64],
) -> Result<(f64, f64), Error> {
    if k == 0 {
        return Err(Error::NonPositiveInput { field: "k" });
    }
    if !(mu > 0.0) {
        return Err(Error::NonPositiveInput { field: "mu" });
    }
    if !(sigma2 > 0.0) {
        return Err(Error::NonPositiveInput { field: "sigma2" });
    }
    if !(coupling_radius > 0.0) {
        return Err(Error::NonPositiveInput { field: "K" });
    }
    if t.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: t.len(),
        });
    }
    if t.iter().any(|&x| x < 0.0 || x.is_nan()) {
        return Err(Error::NegativeT);
    }
    let norm = norm2(t);
    let sqrt_k = (k as f64).sqrt();
    let lower = (-sigma2 * norm * norm / (4.0 * coupling_radius * sqrt_k * mu)).exp();
    let denom = 4.0 * coupling_radius * sqrt_k * mu / sigma2
        + coupling_radius * norm / sigma2.sqrt();
    let upper = if norm == 0.0 {
        1.0
    } else {
        (-norm * norm / denom).exp()
    };
    Ok((lower, upper))
}

/// The tail-bound constants for counting k distinct length-m patterns in a
/// uniformly random circular permutation of n elements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatternConstants {
    /// `K1 = 2 k (2m-1) m! / (m! - 2m + 2)`.
    pub k1: f64,
    /// `K2 = sqrt(k) (2m-1) m! / (2 sqrt(n (m! - 2m + 1)))`.
    pub k2: f64,
    /// K1 rederived from the variance lower bound
    /// `sigma_(1)^2 >= n (m! - 2m + 1) / (m!)^2`, which yields denominator
    /// `m! - 2m + 1` instead of `m! - 2m + 2`. This variant is the larger
    /// (hence always-valid) constant; the printed `k1` is smaller and is
    /// reported alongside for comparison.
    pub k1_conservative: f64,
}

/// Evaluates the pattern-statistic constants. Requires `3 <= m <= 12` (the
/// factorial stays in exact integer range) and `n >= m`, `k >= 1`.
pub fn pattern_bound_params(n: usize, m: usize, k: usize) -> Result<PatternConstants, Error> {
    if !(3..=12).contains(&m) || n < m {
        return Err(Error::InvalidPatternDims { n, m });
    }
    if k == 0 {
        return Err(Error::NonPositiveInput { field: "k" });
    }
    let m_fact = rational::factorial(m)
        .to_f64()
        .expect("m! fits in f64 for m <= 12");
    let kf = k as f64;
    let two_m_minus_1 = (2 * m - 1) as f64;
    let k1 = 2.0 * kf * two_m_minus_1 * m_fact / (m_fact - 2.0 * m as f64 + 2.0);
    let k1_conservative = 2.0 * kf * two_m_minus_1 * m_fact / (m_fact - 2.0 * m as f64 + 1.0);
    let k2 = kf.sqrt() * two_m_minus_1 * m_fact
        / (2.0 * (n as f64 * (m_fact - 2.0 * m as f64 + 1.0)).sqrt());
    Ok(PatternConstants {
        k1,
        k2,
        k1_conservative,
    })
}

fn checked_norm(params: &BoundParams, t: &[f64]) -> Result<f64, Error> {
    if t.len() != params.k {
        return Err(Error::DimensionMismatch {
            expected: params.k,
            got: t.len(),
        });
    }
    if t.iter().any(|&x| x < 0.0 || x.is_nan()) {
        return Err(Error::NegativeT);
    }
    Ok(norm2(t))
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const REL: f64 = 1e-12;

    fn close(a: f64, b: f64) {
        assert!(
            (a - b).abs() <= REL * b.abs().max(1.0),
            "{a} != {b} beyond tolerance"
        );
    }

    #[test]
    fn params_univariate_unit() {
        let p = bound_params(&[1.0], &[1.0], 1.0).unwrap();
        close(p.k1, 2.0);
        close(p.k2, 0.5);
    }

    #[test]
    fn params_bivariate() {
        let p = bound_params(&[1.0, 1.0], &[1.0, 1.0], 1.0).unwrap();
        close(p.k1, 2.0 * 2.0f64.sqrt());
        close(p.k2, 0.5);
    }

    #[test]
    fn params_reject_nonpositive() {
        assert!(matches!(
            bound_params(&[1.0, 1.0], &[0.0, 1.0], 1.0),
            Err(Error::NonPositiveInput { field: "sigma" })
        ));
        assert!(matches!(
            bound_params(&[0.0], &[1.0], 1.0),
            Err(Error::NonPositiveInput { field: "mu" })
        ));
        assert!(matches!(
            bound_params(&[1.0], &[1.0], 0.0),
            Err(Error::NonPositiveInput { field: "K" })
        ));
    }

    #[test]
    fn lower_bound_examples() {
        let p = bound_params(&[1.0], &[1.0], 1.0).unwrap(); // K1 = 2
        close(lower_tail_bound(&p, &[0.0]).unwrap(), 1.0);
        close(lower_tail_bound(&p, &[1.0]).unwrap(), (-0.25f64).exp());

        let p2 = bound_params(&[1.0, 1.0], &[1.0, 1.0], 1.0).unwrap(); // K1 = 2*sqrt(2)
        close(
            lower_tail_bound(&p2, &[1.0, 1.0]).unwrap(),
            (-2.0 / (4.0 * 2.0f64.sqrt())).exp(),
        );
    }

    #[test]
    fn upper_bound_examples() {
        let p = bound_params(&[1.0], &[1.0], 1.0).unwrap(); // K1 = 2, K2 = 1/2
        close(upper_tail_bound(&p, &[0.0]).unwrap(), 1.0);
        close(upper_tail_bound(&p, &[2.0]).unwrap(), (-2.0 / 3.0f64).exp());
    }

    #[test]
    fn negative_t_rejected() {
        let p = bound_params(&[1.0], &[1.0], 1.0).unwrap();
        assert!(matches!(
            lower_tail_bound(&p, &[-0.5]),
            Err(Error::NegativeT)
        ));
        assert!(matches!(
            upper_tail_bound(&p, &[-0.5]),
            Err(Error::NegativeT)
        ));
        assert!(matches!(univariate_bounds(1.0, 1.0, -1.0), Err(Error::NegativeT)));
    }

    #[test]
    fn univariate_examples() {
        let (l, u) = univariate_bounds(1.0, 1.0, 0.0).unwrap();
        close(l, 1.0);
        close(u, 1.0);
        let (l, u) = univariate_bounds(4.0, 1.0, 4.0).unwrap();
        close(l, (-1.0f64).exp());
        close(u, (-16.0 / 20.0f64).exp());
        let (l, u) = univariate_bounds(1.0, 1.0, 2.0).unwrap();
        close(l, (-1.0f64).exp());
        close(u, (-4.0 / 6.0f64).exp());
    }

    #[test]
    fn iid_examples() {
        let (l, u) = iid_bounds(4, 0.5, 0.25, 1.0, &[0.0; 4]).unwrap();
        close(l, 1.0);
        close(u, 1.0);
        // |t| = 2 via t = (1,1,1,1)
        let (l, u) = iid_bounds(4, 0.5, 0.25, 1.0, &[1.0; 4]).unwrap();
        close(l, (-0.25f64).exp());
        close(u, (-0.2f64).exp());
    }

    #[test]
    fn iid_matches_generic_path() {
        // identical coordinates: the i.i.d. display is the generic bound
        let (k, mu, sigma2, radius) = (3usize, 0.7, 0.35f64, 1.4);
        let sigma = sigma2.sqrt();
        let params = bound_params(&[mu; 3], &[sigma; 3], radius).unwrap();
        for t in [[0.0, 0.0, 0.0], [0.3, 0.9, 0.1], [2.0, 1.0, 0.5]] {
            let (l, u) = iid_bounds(k, mu, sigma2, radius, &t).unwrap();
            close(l, lower_tail_bound(&params, &t).unwrap());
            close(u, upper_tail_bound(&params, &t).unwrap());
        }
    }

    #[test]
    fn pattern_constants_dominate_generic_path_with_exact_moments() {
        // with the exact variance in place of its lower bound, the generic
        // constants sit between the printed K1 and the conservative K1
        use crate::patterns::{pattern_variance_exact, Permutation};
        use crate::rational;
        let (n, m, k) = (100usize, 3usize, 2usize);
        let c = pattern_bound_params(n, m, k).unwrap();
        let sigma2 =
            rational::to_f64(&pattern_variance_exact(n, &Permutation::identity(m)).unwrap());
        let sigma = sigma2.sqrt();
        let mu = n as f64 / 6.0;
        let radius = (k as f64).sqrt() * (2 * m - 1) as f64;
        let generic = bound_params(&[mu; 2], &[sigma; 2], radius).unwrap();
        assert!(generic.k1 <= c.k1_conservative);
        assert!(generic.k2 <= c.k2);
        assert!(c.k1 <= c.k1_conservative);
    }

    #[test]
    fn pattern_constants_examples() {
        let c = pattern_bound_params(100, 3, 1).unwrap();
        close(c.k1, 30.0);
        close(c.k2, 1.5);
        close(c.k1_conservative, 60.0);
        assert!(matches!(
            pattern_bound_params(10, 2, 1),
            Err(Error::InvalidPatternDims { .. })
        ));
        assert!(matches!(
            pattern_bound_params(20, 13, 1),
            Err(Error::InvalidPatternDims { .. })
        ));
        assert!(matches!(
            pattern_bound_params(2, 3, 1),
            Err(Error::InvalidPatternDims { .. })
        ));
    }

    proptest! {
        /// Both bounds live in (0,1], equal 1 only at t = 0, decrease in
        /// |t|, and the upper bound dominates the lower at equal t.
        #[test]
        fn bound_shape(
            mu in prop::collection::vec(0.1f64..5.0, 1..4),
            sig in prop::collection::vec(0.1f64..5.0, 1..4),
            radius in 0.1f64..10.0,
            scale in 0.01f64..4.0,
        ) {
            let k = mu.len().min(sig.len());
            let params = bound_params(&mu[..k], &sig[..k], radius).unwrap();
            let t: Vec<f64> = (0..k).map(|i| scale * (i + 1) as f64).collect();
            let bigger: Vec<f64> = t.iter().map(|x| x * 1.5).collect();

            let l = lower_tail_bound(&params, &t).unwrap();
            let u = upper_tail_bound(&params, &t).unwrap();
            prop_assert!(l > 0.0 && l < 1.0);
            prop_assert!(u > 0.0 && u < 1.0);
            prop_assert!(u >= l);
            prop_assert_eq!(lower_tail_bound(&params, &vec![0.0; k]).unwrap(), 1.0);
            prop_assert_eq!(upper_tail_bound(&params, &vec![0.0; k]).unwrap(), 1.0);
            prop_assert!(lower_tail_bound(&params, &bigger).unwrap() < l);
            prop_assert!(upper_tail_bound(&params, &bigger).unwrap() < u);
        }

        /// Growing the coupling radius weakly increases both bounds.
        #[test]
        fn monotone_in_radius(radius in 0.1f64..5.0, bump in 0.0f64..5.0, scale in 0.01f64..4.0) {
            let mu = [1.0, 2.0];
            let sig = [0.5, 1.5];
            let t = [scale, scale * 0.5];
            let a = bound_params(&mu, &sig, radius).unwrap();
            let b = bound_params(&mu, &sig, radius + bump).unwrap();
            prop_assert!(lower_tail_bound(&b, &t).unwrap() >= lower_tail_bound(&a, &t).unwrap());
            prop_assert!(upper_tail_bound(&b, &t).unwrap() >= upper_tail_bound(&a, &t).unwrap());
        }

        /// The univariate reduction equals the k = 1 generic path after
        /// t -> t/sigma, for every sigma. Parameter ranges keep the
        /// exponent below ~1e3 so 1e-12 relative agreement is meaningful.
        #[test]
        fn univariate_is_k1_reduction(
            mu in 0.2f64..10.0,
            radius in 0.2f64..10.0,
            t in 0.0f64..6.0,
            sigma in 0.05f64..10.0,
        ) {
            let (l, u) = univariate_bounds(mu, radius, t).unwrap();
            let params = bound_params(&[mu], &[sigma], radius).unwrap();
            let l2 = lower_tail_bound(&params, &[t / sigma]).unwrap();
            let u2 = upper_tail_bound(&params, &[t / sigma]).unwrap();
            prop_assert!((l - l2).abs() <= REL * l2.max(1e-300));
            prop_assert!((u - u2).abs() <= REL * u2.max(1e-300));
        }
    }
}
