//! Closed-form probability and rate laws.
//!
//! Everything here is a pure function of a [`ModelParams`] set and a
//! contamination `k = c_p / c`. The growth rate of new concepts is fixed at one
//! concept per time step.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Guard on `|1 - r_cleanup|` below which the concept-domain derivative is
/// considered singular.
pub const DEFAULT_SINGULAR_EPS: f64 = 1e-9;

/// Above this base count `(1 - k)^B` is evaluated in the log domain.
const LOG_DOMAIN_MIN_B: u32 = 64;

/// Constant parameters of the contamination model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams<T> {
    p_err: T,
    b: u32,
    r_prag: T,
    r_comp: T,
}

impl<T: Scalar> ModelParams<T> {
    /// `p_err` is the chance a new concept is miscreated, `b` the number of
    /// base concepts per child and `r_prag` / `r_comp` the pragmatic and
    /// competing reduction strengths.
    pub fn new(p_err: T, b: u32, r_prag: T, r_comp: T) -> Result<Self> {
        if !(p_err >= T::zero() && p_err <= T::one()) {
            return Err(domain("p_err", p_err, "[0, 1]"));
        }
        if b < 1 {
            return Err(Error::Domain {
                name: "b",
                value: f64::from(b),
                expected: "[1, inf)",
            });
        }
        check_reduction("r_prag", r_prag)?;
        check_reduction("r_comp", r_comp)?;
        Ok(Self {
            p_err,
            b,
            r_prag,
            r_comp,
        })
    }

    pub fn p_err(&self) -> T {
        self.p_err
    }

    pub fn b(&self) -> u32 {
        self.b
    }

    pub fn r_prag(&self) -> T {
        self.r_prag
    }

    pub fn r_comp(&self) -> T {
        self.r_comp
    }

    /// Same error rate and base count with different cleanup strengths.
    pub fn with_reduction(&self, r_prag: T, r_comp: T) -> Result<Self> {
        Self::new(self.p_err, self.b, r_prag, r_comp)
    }

    /// Probability that a new concept is parasitic, through miscreation or
    /// through inheriting a parasitic base: `1 - (1 - P_err)(1 - k)^B`.
    pub fn parasitic_formation_probability(&self, k: T) -> Result<T> {
        let k = check_contamination(k)?;
        Ok(formation(self, k))
    }

    /// Expected pragmatic removals per step, `k * R_prag`.
    pub fn pragmatic_rate(&self, k: T) -> Result<T> {
        let k = check_contamination(k)?;
        Ok(pragmatic(self, k))
    }

    /// Expected competing removals per step, `(k - k^2) * R_comp`.
    pub fn competing_rate(&self, k: T) -> Result<T> {
        let k = check_contamination(k)?;
        Ok(competing(self, k))
    }

    pub fn cleanup_rate(&self, k: T) -> Result<T> {
        let k = check_contamination(k)?;
        Ok(cleanup(self, k))
    }

    /// `dc_p/dc = (p_p - r_cleanup) / (1 - r_cleanup)` with the default singularity guard.
    pub fn contamination_derivative(&self, k: T) -> Result<T> {
        self.contamination_derivative_with(k, T::lit(DEFAULT_SINGULAR_EPS))
    }

    /// Fails with [`Error::SingularDenominator`] when `r_cleanup` lies within
    /// `eps` of 1; past that point `c` no longer grows monotonically and the
    /// time-domain integrator has to be used.
    pub fn contamination_derivative_with(&self, k: T, eps: T) -> Result<T> {
        let k = check_contamination(k)?;
        let r = cleanup(self, k);
        let denom = T::one() - r;
        if denom.abs() <= eps {
            return Err(Error::SingularDenominator {
                k: k.to_f64_lossy(),
                r_cleanup: r.to_f64_lossy(),
                c: None,
            });
        }
        Ok((formation(self, k) - r) / denom)
    }

    /// Stability polynomial
    /// `f(k) = (1+R_prag+R_comp)k - (R_prag+2R_comp)k^2 + R_comp k^3 - 1 + (1-P_err)(1-k)^B`.
    ///
    /// `f < 0` means contamination keeps growing, `f >= 0` that it decreases or
    /// holds. `f(0) = -P_err` and `f(1) = 0` for every parameter set.
    pub fn stability_polynomial(&self, k: T) -> Result<T> {
        let k = check_contamination(k)?;
        Ok(polynomial(self, k))
    }

    /// All rates at one state.
    pub fn evaluate_rates(&self, state: &KnowledgeState<T>) -> PointwiseRates<T> {
        let k = state.k();
        let r_prag_rate = pragmatic(self, k);
        let r_comp_rate = competing(self, k);
        PointwiseRates {
            p_ip: inclusion(k, self.b),
            p_p: formation(self, k),
            r_prag_rate,
            r_comp_rate,
            r_cleanup: r_prag_rate + r_comp_rate,
            f: polynomial(self, k),
        }
    }
}

/// Probability that at least one of `b` uniformly chosen base concepts is
/// parasitic: `1 - (1 - k)^b`.
pub fn parasitic_inclusion_probability<T: Scalar>(k: T, b: u32) -> Result<T> {
    let k = check_contamination(k)?;
    if b < 1 {
        return Err(Error::Domain {
            name: "b",
            value: f64::from(b),
            expected: "[1, inf)",
        });
    }
    Ok(inclusion(k, b))
}

/// `(1 - k)^b`, switching to `exp(b * ln(1 - k))` for large `b`.
pub fn clean_base_probability<T: Scalar>(k: T, b: u32) -> T {
    let x = T::one() - k;
    if b > LOG_DOMAIN_MIN_B {
        (T::lit(f64::from(b)) * (-k).ln_1p()).exp()
    } else {
        // b <= 64 always fits in i32
        x.powi(b as i32)
    }
}

/// Validates a contamination value.
pub fn check_contamination<T: Scalar>(k: T) -> Result<T> {
    if k >= T::zero() && k <= T::one() {
        Ok(k)
    } else {
        Err(domain("k", k, "[0, 1]"))
    }
}

fn check_reduction<T: Scalar>(name: &'static str, r: T) -> Result<()> {
    if r >= T::zero() && r.is_finite() {
        Ok(())
    } else {
        Err(domain(name, r, "[0, inf)"))
    }
}

fn domain<T: Scalar>(name: &'static str, value: T, expected: &'static str) -> Error {
    Error::Domain {
        name,
        value: value.to_f64_lossy(),
        expected,
    }
}

// Unchecked kernels, shared with the integrators which clamp k themselves.

fn inclusion<T: Scalar>(k: T, b: u32) -> T {
    T::one() - clean_base_probability(k, b)
}

pub(crate) fn formation<T: Scalar>(p: &ModelParams<T>, k: T) -> T {
    T::one() - (T::one() - p.p_err) * clean_base_probability(k, p.b)
}

pub(crate) fn pragmatic<T: Scalar>(p: &ModelParams<T>, k: T) -> T {
    k * p.r_prag
}

pub(crate) fn competing<T: Scalar>(p: &ModelParams<T>, k: T) -> T {
    (k - k * k) * p.r_comp
}

pub(crate) fn cleanup<T: Scalar>(p: &ModelParams<T>, k: T) -> T {
    pragmatic(p, k) + competing(p, k)
}

pub(crate) fn polynomial<T: Scalar>(p: &ModelParams<T>, k: T) -> T {
    let two = T::lit(2.0);
    let linear = (T::one() + p.r_prag + p.r_comp) * k;
    let quadratic = (p.r_prag + two * p.r_comp) * k * k;
    let cubic = p.r_comp * k * k * k;
    linear - quadratic + cubic - T::one() + (T::one() - p.p_err) * clean_base_probability(k, p.b)
}

/// Total and parasitic concept counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnowledgeState<T> {
    c: T,
    c_p: T,
}

impl<T: Scalar> KnowledgeState<T> {
    pub fn new(c: T, c_p: T) -> Result<Self> {
        if !(c > T::zero() && c.is_finite()) {
            return Err(domain("c", c, "(0, inf)"));
        }
        if !(c_p >= T::zero() && c_p <= c) {
            return Err(Error::OutOfBounds {
                c: c.to_f64_lossy(),
                c_p: c_p.to_f64_lossy(),
            });
        }
        Ok(Self { c, c_p })
    }

    pub fn c(&self) -> T {
        self.c
    }

    pub fn c_p(&self) -> T {
        self.c_p
    }

    /// Contamination `c_p / c`, always in `[0, 1]`.
    pub fn k(&self) -> T {
        (self.c_p / self.c).min(T::one())
    }
}

/// Every rate law evaluated at one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointwiseRates<T> {
    pub p_ip: T,
    pub p_p: T,
    pub r_prag_rate: T,
    pub r_comp_rate: T,
    pub r_cleanup: T,
    pub f: T,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scenario_b() -> ModelParams<f64> {
        ModelParams::new(0.1, 7, 2.0, 2.0).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn params_reject_out_of_range() {
        assert!(ModelParams::new(1.5, 7, 0.0, 0.0).is_err());
        assert!(ModelParams::new(-0.1, 7, 0.0, 0.0).is_err());
        assert!(ModelParams::new(f64::NAN, 7, 0.0, 0.0).is_err());
        assert!(ModelParams::new(0.1, 0, 0.0, 0.0).is_err());
        assert!(ModelParams::new(0.1, 7, -1.0, 0.0).is_err());
        assert!(ModelParams::new(0.1, 7, 0.0, f64::INFINITY).is_err());
        assert!(ModelParams::new(0.0, 1, 0.0, 0.0).is_ok());
    }

    #[test]
    fn state_invariants() {
        assert!(KnowledgeState::new(0.0, 0.0).is_err());
        assert!(KnowledgeState::new(10.0, 11.0).is_err());
        assert!(KnowledgeState::new(10.0, -1.0).is_err());
        let s = KnowledgeState::new(1000.0, 200.0).unwrap();
        assert_eq!(s.k(), 0.2);
    }

    #[test]
    fn inclusion_probability_examples() {
        assert_eq!(parasitic_inclusion_probability(0.0, 5).unwrap(), 0.0);
        assert_eq!(parasitic_inclusion_probability(1.0, 1).unwrap(), 1.0);
        assert!(close(
            parasitic_inclusion_probability(0.2, 7).unwrap(),
            0.7902848,
            1e-12
        ));
        assert!(parasitic_inclusion_probability(1.2, 7).is_err());
        assert!(parasitic_inclusion_probability(0.2, 0).is_err());
    }

    #[test]
    fn inclusion_probability_matches_empirical_draws() {
        // 10^6 base sets of 7 drawn with replacement from 1000 concepts, 200 parasitic.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let hits = (0..n)
            .filter(|_| (0..7).any(|_| rng.gen_range(0..1000u32) < 200))
            .count();
        let freq = hits as f64 / n as f64;
        let p: f64 = 0.7902848;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((freq - p).abs() < 4.0 * sigma, "freq {freq}");
    }

    #[test]
    fn formation_probability_examples() {
        let p = ModelParams::new(0.1, 3, 0.0, 0.0).unwrap();
        assert!(close(
            p.parasitic_formation_probability(0.0).unwrap(),
            0.1,
            1e-15
        ));
        let clean = ModelParams::new(0.0, 9, 0.0, 0.0).unwrap();
        assert_eq!(clean.parasitic_formation_probability(0.0).unwrap(), 0.0);
        let v = scenario_b().parasitic_formation_probability(0.2).unwrap();
        assert!(close(v, 1.0 - 0.9 * 0.8f64.powi(7), 1e-15));
        assert!(close(v, 0.81125632, 1e-12));
        assert!(scenario_b().parasitic_formation_probability(-0.01).is_err());
    }

    #[test]
    fn cleanup_rate_examples() {
        let b = scenario_b();
        assert_eq!(b.pragmatic_rate(0.0).unwrap(), 0.0);
        let no_prag = ModelParams::new(0.1, 7, 0.0, 2.0).unwrap();
        assert_eq!(no_prag.pragmatic_rate(0.7).unwrap(), 0.0);
        assert!(close(b.pragmatic_rate(0.2).unwrap(), 0.4, 1e-15));

        assert_eq!(b.competing_rate(1.0).unwrap(), 0.0);
        assert_eq!(b.competing_rate(0.0).unwrap(), 0.0);
        assert!(close(b.competing_rate(0.2).unwrap(), 0.32, 1e-15));

        assert!(close(b.cleanup_rate(0.2).unwrap(), 0.72, 1e-15));
        assert!(close(b.cleanup_rate(1.0).unwrap(), 2.0, 1e-15));
        let none = ModelParams::new(0.3, 4, 0.0, 0.0).unwrap();
        for k in [0.0, 0.3, 0.9, 1.0] {
            assert_eq!(none.cleanup_rate(k).unwrap(), 0.0);
        }
        assert!(b.cleanup_rate(1.0001).is_err());
    }

    #[test]
    fn derivative_examples() {
        let zero = ModelParams::new(0.0, 4, 0.0, 0.0).unwrap();
        assert_eq!(zero.contamination_derivative(0.0).unwrap(), 0.0);
        let d = scenario_b().contamination_derivative(0.2).unwrap();
        assert!(close(d, (0.81125632 - 0.72) / 0.28, 1e-12));
        assert!(close(d, 0.32591543, 1e-8));
        let no_cleanup = ModelParams::new(0.1, 7, 0.0, 0.0).unwrap();
        assert!(close(
            no_cleanup.contamination_derivative(0.2).unwrap(),
            0.81125632,
            1e-12
        ));
    }

    #[test]
    fn derivative_guards_the_singularity() {
        // r_cleanup(k) = k * 2 is exactly 1 at k = 0.5
        let p = ModelParams::new(0.1, 3, 2.0, 0.0).unwrap();
        match p.contamination_derivative(0.5) {
            Err(Error::SingularDenominator { r_cleanup, .. }) => assert_eq!(r_cleanup, 1.0),
            other => panic!("expected singular denominator, got {other:?}"),
        }
        assert!(p.contamination_derivative(0.49).is_ok());
    }

    #[test]
    fn polynomial_examples() {
        let b = scenario_b();
        assert!(close(b.stability_polynomial(0.0).unwrap(), -0.1, 1e-15));
        assert!(close(b.stability_polynomial(1.0).unwrap(), 0.0, 1e-15));
        // 1.0 - 0.12 + 0.016 - 1 + 0.9 * 0.8^7
        assert!(close(
            b.stability_polynomial(0.2).unwrap(),
            -0.03525632,
            1e-12
        ));
        assert!(close(
            b.stability_polynomial(0.5).unwrap(),
            0.25703125,
            1e-12
        ));
    }

    #[test]
    fn evaluate_rates_examples() {
        let state = KnowledgeState::new(1000.0, 200.0).unwrap();
        let r = scenario_b().evaluate_rates(&state);
        assert!(close(r.p_ip, 0.7902848, 1e-12));
        assert!(close(r.p_p, 0.81125632, 1e-12));
        assert!(close(r.r_prag_rate, 0.4, 1e-15));
        assert!(close(r.r_comp_rate, 0.32, 1e-15));
        assert!(close(r.r_cleanup, 0.72, 1e-15));
        assert!(close(r.f, -0.03525632, 1e-12));

        let zero = ModelParams::new(0.0, 5, 0.0, 0.0).unwrap();
        let r = zero.evaluate_rates(&KnowledgeState::new(1000.0, 0.0).unwrap());
        assert_eq!((r.p_ip, r.p_p, r.r_cleanup, r.f), (0.0, 0.0, 0.0, 0.0));

        let full = scenario_b().evaluate_rates(&KnowledgeState::new(1000.0, 1000.0).unwrap());
        assert_eq!((full.p_ip, full.p_p, full.r_comp_rate), (1.0, 1.0, 0.0));
        assert!(full.f.abs() < 1e-15);
    }

    #[test]
    fn log_domain_power_agrees_with_direct_power() {
        for &k in &[0.0, 1e-6, 0.01, 0.3, 0.999, 1.0] {
            for b in [65u32, 100, 500] {
                let direct = (1.0f64 - k).powi(b as i32);
                let stable = clean_base_probability(k, b);
                assert!(
                    (direct - stable).abs() <= 1e-12 * direct.max(1e-300) + 1e-300,
                    "k={k} b={b}"
                );
            }
        }
    }

    #[test]
    fn generic_over_f32() {
        let p = ModelParams::<f32>::new(0.1, 7, 2.0, 2.0).unwrap();
        let f = p.stability_polynomial(0.2).unwrap();
        assert!((f - (-0.035_256_32)).abs() < 1e-5);
    }

    fn params() -> impl Strategy<Value = ModelParams<f64>> {
        (0.0..=1.0f64, 1u32..=30, 0.0..=10.0f64, 0.0..=10.0f64)
            .prop_map(|(p, b, rp, rc)| ModelParams::new(p, b, rp, rc).unwrap())
    }

    proptest! {
        #[test]
        fn probabilities_and_rates_in_range(p in params(), k in 0.0..=1.0f64) {
            let rates = p.evaluate_rates(&KnowledgeState::new(1.0, k).unwrap());
            prop_assert!((0.0..=1.0).contains(&rates.p_ip));
            prop_assert!(rates.p_p <= 1.0);
            prop_assert!(rates.p_p >= p.p_err() - 1e-15);
            prop_assert!(rates.p_p >= rates.p_ip - 1e-15);
            prop_assert!(rates.r_prag_rate >= 0.0 && rates.r_comp_rate >= 0.0);
            prop_assert_eq!(rates.r_cleanup, rates.r_prag_rate + rates.r_comp_rate);
        }

        #[test]
        fn inclusion_monotone_in_k_and_b(k1 in 0.0..=1.0f64, k2 in 0.0..=1.0f64, b1 in 1u32..200, b2 in 1u32..200) {
            let (klo, khi) = if k1 <= k2 { (k1, k2) } else { (k2, k1) };
            let (blo, bhi) = if b1 <= b2 { (b1, b2) } else { (b2, b1) };
            let at = |k, b| parasitic_inclusion_probability(k, b).unwrap();
            prop_assert!(at(klo, blo) <= at(khi, blo) + 1e-15);
            prop_assert!(at(klo, blo) <= at(klo, bhi) + 1e-15);
        }

        #[test]
        fn competing_rate_symmetric(p in params(), k in 0.0..=1.0f64) {
            let a = p.competing_rate(k).unwrap();
            let b = p.competing_rate(1.0 - k).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }

        #[test]
        fn polynomial_endpoints(p in params()) {
            prop_assert!((p.stability_polynomial(0.0).unwrap() + p.p_err()).abs() <= 1e-12);
            prop_assert!(p.stability_polynomial(1.0).unwrap().abs() <= 1e-12);
        }

        #[test]
        fn derivative_sign_opposes_polynomial(p in params(), u in 0.0..=1.0f64) {
            // r_cleanup(k) <= (R_prag + R_comp) k keeps r below 0.99
            let k = u * (0.98 / (p.r_prag() + p.r_comp())).min(1.0);
            let r = p.cleanup_rate(k).unwrap();
            prop_assert!(r < 0.99);
            let lhs = p.contamination_derivative(k).unwrap() - k;
            let f = p.stability_polynomial(k).unwrap();
            if !(lhs.abs() < 1e-9 && f.abs() < 1e-9) {
                prop_assert_eq!(lhs.signum(), -f.signum());
            }
        }
    }
}
