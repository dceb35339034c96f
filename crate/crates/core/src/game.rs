//! Payoff structure of a single population in a feedback-evolving game.
//!
//! A population is described by the four payoff differences of its
//! environment-dependent 2x2 matrix `A_n = n A1 + (1 - n) A0`. Everything
//! downstream (dynamics, resource map, equilibria) depends only on these
//! differences, so [`Policy`] is the canonical form and [`PayoffMatrices`]
//! is an ingestion path that immediately reduces to one.
//!
//! The payoff gap between low and high consumers is bilinear,
//! `g(x, n) = a x n + b x + c n + d`, see [`GCoefficients`].

use serde::{Deserialize, Serialize};

use crate::error::{check_positive, check_unit, Error, Result};

/// Payoff differences of the responsible population.
///
/// Construction enforces that high consumption dominates in the replete
/// state (`dTR1 > 0`, `dPS1 > 0`) and that the relative payoff to low
/// consumers decreases as the resource improves (`dSP0 > -dPS1`,
/// `dRT0 > -dTR1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPolicy", into = "RawPolicy")]
pub struct Policy {
    d_sp0: f64,
    d_rt0: f64,
    d_tr1: f64,
    d_ps1: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct RawPolicy {
    #[serde(rename = "dSP0")]
    d_sp0: f64,
    #[serde(rename = "dRT0")]
    d_rt0: f64,
    #[serde(rename = "dTR1")]
    d_tr1: f64,
    #[serde(rename = "dPS1")]
    d_ps1: f64,
}

impl TryFrom<RawPolicy> for Policy {
    type Error = Error;

    fn try_from(raw: RawPolicy) -> Result<Self> {
        Policy::new(raw.d_sp0, raw.d_rt0, raw.d_tr1, raw.d_ps1)
    }
}

impl From<Policy> for RawPolicy {
    fn from(p: Policy) -> Self {
        RawPolicy {
            d_sp0: p.d_sp0,
            d_rt0: p.d_rt0,
            d_tr1: p.d_tr1,
            d_ps1: p.d_ps1,
        }
    }
}

impl Policy {
    pub fn new(d_sp0: f64, d_rt0: f64, d_tr1: f64, d_ps1: f64) -> Result<Self> {
        for (name, v) in [
            ("dSP0", d_sp0),
            ("dRT0", d_rt0),
            ("dTR1", d_tr1),
            ("dPS1", d_ps1),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidPolicy(format!("{name} = {v} is not finite")));
            }
        }
        if !(d_tr1 > 0.0 && d_ps1 > 0.0) {
            return Err(Error::InvalidPolicy(format!(
                "high consumption must dominate the replete state: need dTR1 > 0 and dPS1 > 0, got dTR1 = {d_tr1}, dPS1 = {d_ps1}"
            )));
        }
        if !(d_sp0 > -d_ps1) {
            return Err(Error::InvalidPolicy(format!(
                "dg/dn must be negative: need dSP0 > -dPS1, got dSP0 = {d_sp0}, dPS1 = {d_ps1}"
            )));
        }
        if !(d_rt0 > -d_tr1) {
            return Err(Error::InvalidPolicy(format!(
                "dg/dn must be negative: need dRT0 > -dTR1, got dRT0 = {d_rt0}, dTR1 = {d_tr1}"
            )));
        }
        Ok(Policy {
            d_sp0,
            d_rt0,
            d_tr1,
            d_ps1,
        })
    }

    pub fn d_sp0(&self) -> f64 {
        self.d_sp0
    }

    pub fn d_rt0(&self) -> f64 {
        self.d_rt0
    }

    pub fn d_tr1(&self) -> f64 {
        self.d_tr1
    }

    pub fn d_ps1(&self) -> f64 {
        self.d_ps1
    }

    /// Same replete-state payoffs with a different deplete-state policy.
    pub fn with_deplete(&self, d_sp0: f64, d_rt0: f64) -> Result<Self> {
        Policy::new(d_sp0, d_rt0, self.d_tr1, self.d_ps1)
    }

    /// Strict upper bound `(dTR1 / dPS1) dSP0` on `dRT0` for a sustainable policy.
    pub fn upper_bound(&self) -> f64 {
        self.d_tr1 / self.d_ps1 * self.d_sp0
    }

    pub fn coefficients(&self) -> GCoefficients {
        GCoefficients::from_differences(self.d_sp0, self.d_rt0, self.d_tr1, self.d_ps1)
    }
}

/// Payoff differences of a greedy population: low consumption is never
/// incentivised (`g_i < 0` on the whole unit square).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPolicy", into = "RawPolicy")]
pub struct GreedyPolicy {
    d_sp0: f64,
    d_rt0: f64,
    d_tr1: f64,
    d_ps1: f64,
}

impl TryFrom<RawPolicy> for GreedyPolicy {
    type Error = Error;

    fn try_from(raw: RawPolicy) -> Result<Self> {
        GreedyPolicy::new(raw.d_sp0, raw.d_rt0, raw.d_tr1, raw.d_ps1)
    }
}

impl From<GreedyPolicy> for RawPolicy {
    fn from(p: GreedyPolicy) -> Self {
        RawPolicy {
            d_sp0: p.d_sp0,
            d_rt0: p.d_rt0,
            d_tr1: p.d_tr1,
            d_ps1: p.d_ps1,
        }
    }
}

impl Default for GreedyPolicy {
    fn default() -> Self {
        GreedyPolicy {
            d_sp0: -1.0,
            d_rt0: -1.0,
            d_tr1: 2.1,
            d_ps1: 2.0,
        }
    }
}

impl GreedyPolicy {
    pub fn new(d_sp0: f64, d_rt0: f64, d_tr1: f64, d_ps1: f64) -> Result<Self> {
        if ![d_sp0, d_rt0, d_tr1, d_ps1].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidPolicy(
                "greedy policy has non-finite entries".into(),
            ));
        }
        if !(d_sp0 < 0.0 && d_rt0 < 0.0) {
            return Err(Error::InvalidPolicy(format!(
                "greedy policy needs dSP0 < 0 and dRT0 < 0, got {d_sp0}, {d_rt0}"
            )));
        }
        if !(d_tr1 > 0.0 && d_ps1 > 0.0) {
            return Err(Error::InvalidPolicy(format!(
                "greedy policy needs dTR1 > 0 and dPS1 > 0, got {d_tr1}, {d_ps1}"
            )));
        }
        let coeffs = GCoefficients::from_differences(d_sp0, d_rt0, d_tr1, d_ps1);
        // g is bilinear, so negativity at the corners covers the whole square.
        let corners = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)];
        if corners.iter().any(|&(x, n)| coeffs.eval(x, n) >= 0.0) {
            return Err(Error::InvalidPolicy(
                "greedy payoff gap must be negative on the unit square".into(),
            ));
        }
        Ok(GreedyPolicy {
            d_sp0,
            d_rt0,
            d_tr1,
            d_ps1,
        })
    }

    pub fn coefficients(&self) -> GCoefficients {
        GCoefficients::from_differences(self.d_sp0, self.d_rt0, self.d_tr1, self.d_ps1)
    }
}

/// Bilinear form of the payoff gap `g(x, n) = a x n + b x + c n + d`, plus
/// `Y = bc - ad`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    #[serde(rename = "Y")]
    pub y: f64,
}

impl GCoefficients {
    pub fn from_differences(d_sp0: f64, d_rt0: f64, d_tr1: f64, d_ps1: f64) -> Self {
        let a = d_sp0 - d_rt0 + d_ps1 - d_tr1;
        let b = d_rt0 - d_sp0;
        let c = -(d_ps1 + d_sp0);
        let d = d_sp0;
        // Same quantity as b*c - a*d, without the cancellation.
        let y = d_tr1 * d_sp0 - d_rt0 * d_ps1;
        GCoefficients { a, b, c, d, y }
    }

    /// `Y` through the coefficient route, `b c - a d`.
    pub fn y_from_coefficients(&self) -> f64 {
        self.b * self.c - self.a * self.d
    }

    /// Unchecked evaluation of `g(x, n)`.
    #[inline]
    pub fn eval(&self, x: f64, n: f64) -> f64 {
        self.a * x * n + self.b * x + self.c * n + self.d
    }

    /// `dg/dn` at cooperator share `x`; independent of `n`.
    #[inline]
    pub fn dg_dn(&self, x: f64) -> f64 {
        self.a * x + self.c
    }

    /// `dg/dx` at resource level `n`.
    #[inline]
    pub fn dg_dx(&self, n: f64) -> f64 {
        self.a * n + self.b
    }
}

pub fn g_coefficients(policy: &Policy) -> GCoefficients {
    policy.coefficients()
}

/// Payoff gap `g(x, n)` with domain checking.
pub fn payoff_gap(coeffs: &GCoefficients, x: f64, n: f64) -> Result<f64> {
    check_unit("x", x)?;
    check_unit("n", n)?;
    Ok(coeffs.eval(x, n))
}

/// Full 2x2 payoff matrices for the replete (`a1`) and deplete (`a0`) states.
///
/// Rows and columns are ordered (low consumer, high consumer), so
/// `a1 = [[R1, S1], [T1, P1]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoffMatrices {
    pub a1: [[f64; 2]; 2],
    pub a0: [[f64; 2]; 2],
}

impl PayoffMatrices {
    #[allow(clippy::too_many_arguments)]
    pub fn from_entries(
        r1: f64,
        s1: f64,
        t1: f64,
        p1: f64,
        r0: f64,
        s0: f64,
        t0: f64,
        p0: f64,
    ) -> Self {
        PayoffMatrices {
            a1: [[r1, s1], [t1, p1]],
            a0: [[r0, s0], [t0, p0]],
        }
    }

    /// Payoff differences as a validated [`Policy`].
    pub fn policy(&self) -> Result<Policy> {
        let [[r1, s1], [t1, p1]] = self.a1;
        let [[r0, s0], [t0, p0]] = self.a0;
        Policy::new(s0 - p0, r0 - t0, t1 - r1, p1 - s1)
    }

    /// `(pi_L, pi_H)` for a population with cooperator share `x` at resource level `n`.
    pub fn payoffs(&self, x: f64, n: f64) -> Result<(f64, f64)> {
        check_unit("x", x)?;
        check_unit("n", n)?;
        let row = |i: usize| {
            let lo = self.a1[i][0] * x + self.a1[i][1] * (1.0 - x);
            let de = self.a0[i][0] * x + self.a0[i][1] * (1.0 - x);
            n * lo + (1.0 - n) * de
        };
        Ok((row(0), row(1)))
    }
}

pub fn payoffs_from_matrices(mats: &PayoffMatrices, x: f64, n: f64) -> Result<(f64, f64)> {
    mats.payoffs(x, n)
}

/// Lower bound of `V(abar)` on `dRT0` before taking the max with `-dTR1`.
pub fn region_lower_bound(policy: &Policy, alpha: f64, theta: f64, abar: f64) -> f64 {
    (abar - theta) / (alpha + abar) * policy.d_sp0()
}

/// Membership of the policy in `V(abar)`, the set of responsible policies
/// that still sustain the resource against total greedy extraction `abar`.
///
/// Exact comparisons, no tolerance band.
pub fn in_region_v(policy: &Policy, alpha: f64, theta: f64, abar: f64) -> Result<bool> {
    check_positive("alpha", alpha)?;
    check_positive("theta", theta)?;
    if !(abar >= 0.0) {
        return Err(Error::Domain {
            name: "abar",
            value: abar,
            domain: "[0, inf)",
        });
    }
    let lower = region_lower_bound(policy, alpha, theta, abar).max(-policy.d_tr1());
    let rt = policy.d_rt0();
    Ok(lower <= rt && rt < policy.upper_bound())
}

/// Whether the policy sustains the resource when the population is alone.
pub fn is_responsible(policy: &Policy, alpha: f64, theta: f64) -> Result<bool> {
    check_positive("alpha", alpha)?;
    check_positive("theta", theta)?;
    let lower = (-theta / alpha * policy.d_sp0()).max(-policy.d_tr1());
    let rt = policy.d_rt0();
    Ok(lower <= rt && rt < policy.upper_bound())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn base() -> Policy {
        Policy::new(2.0, 0.2, 2.1, 2.0).unwrap()
    }

    #[test]
    fn coefficients_of_reference_policy() {
        let c = base().coefficients();
        assert_relative_eq!(c.a, 1.7, epsilon = 1e-12);
        assert_relative_eq!(c.b, -1.8, epsilon = 1e-12);
        assert_relative_eq!(c.c, -4.0, epsilon = 1e-12);
        assert_relative_eq!(c.d, 2.0, epsilon = 1e-12);
        assert_relative_eq!(c.y, 3.8, epsilon = 1e-12);
        assert_relative_eq!(c.y_from_coefficients(), 3.8, epsilon = 1e-12);

        let c = Policy::new(2.0, 0.8, 2.1, 2.0).unwrap().coefficients();
        assert_relative_eq!(c.b, -1.2, epsilon = 1e-12);
        assert_relative_eq!(c.y, 2.6, epsilon = 1e-12);
        assert_relative_eq!(c.y_from_coefficients(), 2.6, epsilon = 1e-12);
    }

    #[test]
    fn symmetric_policy_cancels_a_and_b() {
        let c = Policy::new(1.3, 1.3, 0.7, 0.7).unwrap().coefficients();
        assert_eq!(c.a, 0.0);
        assert_eq!(c.b, 0.0);
    }

    #[test]
    fn corner_values() {
        let c = base().coefficients();
        assert_relative_eq!(payoff_gap(&c, 0.0, 0.0).unwrap(), 2.0);
        assert_relative_eq!(payoff_gap(&c, 0.0, 1.0).unwrap(), -2.0);
        assert_relative_eq!(payoff_gap(&c, 1.0, 1.0).unwrap(), -2.1, epsilon = 1e-12);
        assert_relative_eq!(payoff_gap(&c, 1.0, 0.0).unwrap(), 0.2, epsilon = 1e-12);
    }

    #[test]
    fn payoff_gap_rejects_out_of_domain() {
        let c = base().coefficients();
        assert!(matches!(
            payoff_gap(&c, 1.2, 0.5),
            Err(Error::Domain { name: "x", .. })
        ));
        assert!(matches!(
            payoff_gap(&c, 0.2, -0.1),
            Err(Error::Domain { name: "n", .. })
        ));
    }

    #[test]
    fn assumptions_are_enforced() {
        assert!(Policy::new(2.0, 0.2, 0.0, 2.0).is_err());
        assert!(Policy::new(2.0, 0.2, 2.1, -1.0).is_err());
        assert!(Policy::new(-2.5, 0.2, 2.1, 2.0).is_err());
        assert!(Policy::new(2.0, -2.2, 2.1, 2.0).is_err());
        assert!(Policy::new(2.0, -2.1, 2.1, 2.0).is_err());
        assert!(Policy::new(f64::NAN, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn greedy_policy_checks() {
        assert!(GreedyPolicy::new(-1.0, -1.0, 2.1, 2.0).is_ok());
        assert!(GreedyPolicy::new(0.5, -1.0, 2.1, 2.0).is_err());
        assert!(GreedyPolicy::new(-1.0, -1.0, 0.0, 2.0).is_err());
        let g = GreedyPolicy::default().coefficients();
        for (x, n) in [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (0.3, 0.7)] {
            assert!(g.eval(x, n) < 0.0);
        }
    }

    #[test]
    fn reference_matrices() {
        let mats = PayoffMatrices::from_entries(0.0, -2.0, 2.1, 0.0, 0.0, 2.0, -0.2, 0.0);
        assert_eq!(mats.policy().unwrap(), base());
        let (pl, ph) = mats.payoffs(1.0, 1.0).unwrap();
        assert_relative_eq!(pl, 0.0);
        assert_relative_eq!(ph, 2.1);
        assert_relative_eq!(pl - ph, -2.1, epsilon = 1e-12);
        let (pl, ph) = mats.payoffs(0.0, 0.0).unwrap();
        assert_eq!((pl, ph), (2.0, 0.0));
    }

    #[test]
    fn identical_matrices_ignore_resource() {
        let mats = PayoffMatrices::from_entries(1.0, -1.0, 3.0, 0.5, 1.0, -1.0, 3.0, 0.5);
        let lo = mats.payoffs(0.4, 0.0).unwrap();
        let hi = mats.payoffs(0.4, 1.0).unwrap();
        assert_eq!(lo, hi);
    }

    #[test]
    fn region_v_examples() {
        let p = base();
        assert!(in_region_v(&p, 0.4, 1.0, 0.0).unwrap());
        assert!(in_region_v(&p, 0.4, 1.0, 0.5).unwrap());
        assert_relative_eq!(
            region_lower_bound(&p, 0.4, 1.0, 0.5),
            -1.0 / 0.9,
            epsilon = 1e-12
        );
        let edge = Policy::new(2.0, 2.1, 2.1, 2.0).unwrap();
        for abar in [0.0, 0.3, 0.9] {
            assert!(!in_region_v(&edge, 0.4, 1.0, abar).unwrap());
        }
        assert!(in_region_v(&p, 0.4, 1.0, -0.1).is_err());
    }

    #[test]
    fn responsible_examples() {
        assert!(is_responsible(&Policy::new(2.0, 0.8, 2.1, 2.0).unwrap(), 0.4, 1.0).unwrap());
        assert!(is_responsible(&Policy::new(2.0, -1.0, 2.1, 2.0).unwrap(), 0.4, 1.0).unwrap());
        assert!(!is_responsible(&Policy::new(2.0, 2.5, 2.1, 2.0).unwrap(), 0.4, 1.0).unwrap());
        // dRT0 = -2.2 never reaches classification.
        assert!(Policy::new(2.0, -2.2, 2.1, 2.0).is_err());
    }

    #[test]
    fn responsible_matches_region_at_zero_extraction() {
        for rt in [-2.0, -1.0, -0.3, 0.0, 0.5, 2.0, 2.09] {
            let p = Policy::new(2.0, rt, 2.1, 2.0).unwrap();
            assert_eq!(
                is_responsible(&p, 0.4, 1.0).unwrap(),
                in_region_v(&p, 0.4, 1.0, 0.0).unwrap()
            );
        }
    }

    #[test]
    fn policy_serde_uses_difference_names() {
        let json = serde_json::to_string(&base()).unwrap();
        assert_eq!(json, r#"{"dSP0":2.0,"dRT0":0.2,"dTR1":2.1,"dPS1":2.0}"#);
        let back: Policy = serde_json::from_str(&json).unwrap();
        assert_eq!(back, base());
        let bad: std::result::Result<Policy, _> =
            serde_json::from_str(r#"{"dSP0":2.0,"dRT0":-3.0,"dTR1":2.1,"dPS1":2.0}"#);
        assert!(bad.is_err());
    }
}
