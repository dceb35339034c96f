//! The resource-extraction game between the high-level greedy agents.
//!
//! Each of `M` agents picks an extraction rate `alpha_i >= 0` for its
//! population and earns `alpha_i * R(abar)`, where `R` is the steady-state
//! resource level the low-level dynamics settle to under total extraction
//! `abar`. Under the coupling constraint that keeps the resource alive the
//! game is concave, best responses have closed forms, and there is a unique
//! symmetric equilibrium.
//!
//! Quadratic roots are evaluated in a cancellation-free form: instead of
//! `(-B + sqrt(B^2 - 4AC)) / 2A`, the root that stays finite as `A -> 0` is
//! written as `2C / (-B - sqrt(B^2 - 4AC))`. This matters because the
//! leading coefficient is proportional to `a`, which crosses zero inside
//! the responsible region.

use serde::{Deserialize, Serialize};

use crate::dynamics::fixed_point;
use crate::error::{check_positive, Error, Result};
use crate::game::{in_region_v, is_responsible, region_lower_bound, GCoefficients, Policy};

/// `|a|` below this is routed to the linear (a = 0) formulas.
pub const A_DEAD_BAND: f64 = 1e-9;
/// Negative radicands down to this (relative) size are round-off and clamp to zero.
pub const RADICAND_SLACK: f64 = 1e-12;

/// An instance of the constrained extraction game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameInstance {
    m: usize,
    policy: Policy,
    alpha: f64,
    theta: f64,
}

impl GameInstance {
    /// Fails unless `m >= 1`, the rates are positive and the policy is responsible.
    pub fn new(m: usize, policy: Policy, alpha: f64, theta: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::Domain {
                name: "M",
                value: 0.0,
                domain: "{1, 2, ...}",
            });
        }
        check_positive("alpha", alpha)?;
        check_positive("theta", theta)?;
        if !is_responsible(&policy, alpha, theta)? {
            return Err(Error::NotResponsible(responsibility_violation(
                &policy, alpha, theta,
            )));
        }
        Ok(GameInstance {
            m,
            policy,
            alpha,
            theta,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn policy(&self) -> &Policy {
        &self.policy
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Same game with a different number of greedy agents.
    pub fn with_m(&self, m: usize) -> Result<Self> {
        GameInstance::new(m, self.policy, self.alpha, self.theta)
    }

    pub fn coefficients(&self) -> GCoefficients {
        self.policy.coefficients()
    }

    /// `(alpha dRT0 + theta dSP0) / (dSP0 - dRT0)`: the total extraction at
    /// which `g(x*, 0)` hits zero.
    pub fn depletion_capacity(&self) -> f64 {
        let (sp, rt) = (self.policy.d_sp0(), self.policy.d_rt0());
        (self.alpha * rt + self.theta * sp) / (sp - rt)
    }

    /// Largest total extraction that keeps the resource positive: `theta`
    /// when `dRT0 > 0`, the depletion capacity otherwise.
    pub fn total_capacity(&self) -> f64 {
        if self.policy.d_rt0() > 0.0 {
            self.theta
        } else {
            self.depletion_capacity()
        }
    }
}

fn responsibility_violation(policy: &Policy, alpha: f64, theta: f64) -> String {
    let rt = policy.d_rt0();
    let upper = policy.upper_bound();
    if rt >= upper {
        format!("dRT0 = {rt} must be below (dTR1/dPS1) dSP0 = {upper}")
    } else {
        let lower = (-theta / alpha * policy.d_sp0()).max(-policy.d_tr1());
        format!("dRT0 = {rt} must be at least max(-(theta/alpha) dSP0, -dTR1) = {lower}")
    }
}

/// Extraction rates of the `M` greedy agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyProfile {
    rates: Vec<f64>,
}

impl StrategyProfile {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        if let Some(&bad) = rates.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
            return Err(Error::Domain {
                name: "alpha_i",
                value: bad,
                domain: "[0, inf)",
            });
        }
        Ok(StrategyProfile { rates })
    }

    pub fn symmetric(m: usize, rate: f64) -> Result<Self> {
        StrategyProfile::new(vec![rate; m])
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn abar(&self) -> f64 {
        self.rates.iter().sum()
    }

    /// Total extraction of everyone except agent `i`.
    pub fn abar_minus(&self, i: usize) -> f64 {
        self.rates
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, r)| r)
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// Total extraction sits at `theta`.
    CapSaturated,
    /// Interior root `E+` (taken when `a < 0`).
    InteriorEplus,
    /// Interior root `E-` (taken when `a > 0`).
    InteriorEminus,
    /// Interior equilibrium from the linear formula (`a = 0`).
    InteriorLinear,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::CapSaturated => "CapSaturated",
            Regime::InteriorEplus => "InteriorEplus",
            Regime::InteriorEminus => "InteriorEminus",
            Regime::InteriorLinear => "InteriorLinear",
        }
    }

    pub fn is_interior(&self) -> bool {
        !matches!(self, Regime::CapSaturated)
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumResult {
    pub alpha_star: f64,
    pub regime: Regime,
    pub abar_star: f64,
    #[serde(rename = "R_star")]
    pub r_star: f64,
    pub utility_star: f64,
}

/// Flat serialisation of a solved instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumRecord {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "dSP0")]
    pub d_sp0: f64,
    #[serde(rename = "dRT0")]
    pub d_rt0: f64,
    #[serde(rename = "dTR1")]
    pub d_tr1: f64,
    #[serde(rename = "dPS1")]
    pub d_ps1: f64,
    pub alpha: f64,
    pub theta: f64,
    pub alpha_star: f64,
    pub regime: Regime,
    pub abar_star: f64,
    #[serde(rename = "R_star")]
    pub r_star: f64,
    pub utility_star: f64,
}

impl EquilibriumRecord {
    pub const HEADER: [&'static str; 12] = [
        "M",
        "dSP0",
        "dRT0",
        "dTR1",
        "dPS1",
        "alpha",
        "theta",
        "alpha_star",
        "regime",
        "abar_star",
        "R_star",
        "utility_star",
    ];

    pub fn new(game: &GameInstance, eq: &EquilibriumResult) -> Self {
        let p = game.policy();
        EquilibriumRecord {
            m: game.m(),
            d_sp0: p.d_sp0(),
            d_rt0: p.d_rt0(),
            d_tr1: p.d_tr1(),
            d_ps1: p.d_ps1(),
            alpha: game.alpha(),
            theta: game.theta(),
            alpha_star: eq.alpha_star,
            regime: eq.regime,
            abar_star: eq.abar_star,
            r_star: eq.r_star,
            utility_star: eq.utility_star,
        }
    }
}

/// Steady-state resource level under total greedy extraction `abar`.
///
/// At `abar = theta` with `dRT0 > 0` the dynamics have a segment of stable
/// levels; the top of the segment is used, which makes `R` left-continuous
/// there. Beyond capacity the resource is depleted and `R = 0`.
pub fn resource_level(abar: f64, game: &GameInstance) -> f64 {
    let (alpha, theta) = (game.alpha, game.theta);
    let p = &game.policy;
    if abar < theta && in_region_v(p, alpha, theta, abar.max(0.0)).unwrap_or(false) {
        fixed_point(p, alpha, theta, abar).1
    } else if abar == theta && p.d_rt0() > 0.0 {
        p.d_rt0() / (p.d_rt0() + p.d_tr1())
    } else {
        0.0
    }
}

/// `U_i = alpha_i * R(abar)`. Infeasible profiles simply earn zero.
pub fn utility(i: usize, profile: &StrategyProfile, game: &GameInstance) -> Result<f64> {
    let rate = *profile.rates.get(i).ok_or(Error::IndexOutOfRange {
        index: i,
        len: profile.len(),
    })?;
    Ok(rate * resource_level(profile.abar(), game))
}

/// Upper end of agent `i`'s restricted strategy set `[0, cap]` given the
/// others' total extraction.
pub fn strategy_cap(abar_minus: f64, game: &GameInstance) -> Result<f64> {
    if !(abar_minus >= 0.0) {
        return Err(Error::Domain {
            name: "abar_minus",
            value: abar_minus,
            domain: "[0, inf)",
        });
    }
    let p = &game.policy;
    let empty = Error::EmptyStrategySet { abar_minus };
    if p.d_rt0() > 0.0 {
        if abar_minus > game.theta {
            return Err(empty);
        }
        Ok(game.theta - abar_minus)
    } else {
        // Lower bound of V(abar_minus), in the same form as the region itself.
        if region_lower_bound(p, game.alpha, game.theta, abar_minus) <= p.d_rt0() {
            Ok((game.depletion_capacity() - abar_minus).max(0.0))
        } else {
            Err(empty)
        }
    }
}

/// Threshold on `dRT0` above which the best response saturates the cap.
///
/// Positive root in `dRT0` of the marginal utility at the cap. Decreasing in
/// `abar_minus`, with `C(theta) = 0`; arguments beyond `theta` are treated as
/// `theta`.
pub fn threshold_c(abar_minus: f64, game: &GameInstance) -> f64 {
    let p = &game.policy;
    let q = ((game.theta - abar_minus) / (game.alpha + game.theta)).max(0.0);
    let s = p.d_tr1() + q * p.d_ps1();
    let prod = 4.0 * q * p.d_tr1() * p.d_sp0();
    let disc = s * s + prod;
    // -s + sqrt(s^2 + prod) without cancellation.
    let root = disc.max(0.0).sqrt();
    if s + root == 0.0 {
        return 0.0;
    }
    0.5 * prod / (s + root)
}

fn clamp_radicand(value: f64, scale: f64) -> Result<f64> {
    if value >= 0.0 {
        Ok(value)
    } else if value >= -RADICAND_SLACK * scale.max(1.0) {
        Ok(0.0)
    } else {
        Err(Error::NegativeRadicand(value))
    }
}

/// Interior stationary point `F_i` of agent `i`'s utility (valid when the
/// best response is not the cap).
///
/// Solves `ab t^2 + 2b g_n(xh) t + g_n(xh) g(xh, 0) = 0` for
/// `t = alpha_i / (alpha + theta)`, taking the root
/// `(1/a)(-g_n + sqrt(b g_n Y) / b)` in its rationalised form.
pub fn interior_response(abar_minus: f64, game: &GameInstance) -> Result<f64> {
    let co = game.coefficients();
    let span = game.alpha + game.theta;
    let xh = (game.alpha + abar_minus) / span;
    let gn = co.dg_dn(xh);
    let g0 = co.eval(xh, 0.0);
    if co.a.abs() < A_DEAD_BAND {
        return Ok(0.5 * (game.depletion_capacity() - abar_minus));
    }
    let rad = clamp_radicand(co.b * gn * co.y, (co.b * gn).powi(2))?;
    let denom = -co.b * gn - rad.sqrt();
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok(span * gn * g0 / denom)
}

/// Best response of an agent to the others' total extraction.
pub fn best_response(abar_minus: f64, game: &GameInstance) -> Result<f64> {
    let cap = strategy_cap(abar_minus, game)?;
    let rt = game.policy.d_rt0();
    if threshold_c(abar_minus, game) <= rt && rt <= game.policy.upper_bound() {
        return Ok(cap);
    }
    Ok(interior_response(abar_minus, game)?.clamp(0.0, cap))
}

/// Whether the profile is an equilibrium at which the resource is depleted:
/// every agent's opponents already extract at least the total capacity, so
/// no unilateral deviation can revive the resource.
pub fn is_depleting_equilibrium(profile: &StrategyProfile, game: &GameInstance) -> bool {
    if profile.is_empty() {
        return false;
    }
    let abar = profile.abar();
    let capacity = game.total_capacity();
    profile.rates.iter().all(|&r| abar - r >= capacity)
}

/// `(K1, K0)` of the symmetric-profile quadratic `M^2 g^2 + K1 g + K0 = 0`.
/// Undefined for `a = 0`.
pub fn quadratic_coefficients(game: &GameInstance) -> (f64, f64) {
    let co = game.coefficients();
    let span = game.alpha + game.theta;
    let gn0 = co.dg_dn(game.alpha / span);
    let m = game.m as f64;
    let k1 = span / co.a * (2.0 * m * gn0 - (m - 1.0) / co.b * co.y);
    let k0 = span * span / (co.a * co.a) * gn0 * (gn0 - co.y / co.b);
    (k1, k0)
}

/// Residual `Q(gamma)` of the symmetric-profile quadratic.
pub fn quadratic_residual(gamma: f64, game: &GameInstance) -> f64 {
    let (k1, k0) = quadratic_coefficients(game);
    let m = game.m as f64;
    m * m * gamma * gamma + k1 * gamma + k0
}

/// Interior symmetric equilibrium rate and its regime.
fn interior_equilibrium(game: &GameInstance) -> Result<(f64, Regime)> {
    let co = game.coefficients();
    let m = game.m as f64;
    if co.a.abs() < A_DEAD_BAND {
        return Ok((
            game.depletion_capacity() / (m + 1.0),
            Regime::InteriorLinear,
        ));
    }
    // Symmetric profile gamma = F((M-1) gamma) in u = gamma / (alpha + theta):
    //   a b M^2 u^2 + (b (M+1) g_n0 + a (M-1) g00) u + g_n0 g00 = 0
    // with g_n0, g00 taken at x0 = alpha / (alpha + theta).
    let span = game.alpha + game.theta;
    let x0 = game.alpha / span;
    let gn0 = co.dg_dn(x0);
    let g00 = co.eval(x0, 0.0);
    let qa = co.a * co.b * m * m;
    let qb = co.b * (m + 1.0) * gn0 + co.a * (m - 1.0) * g00;
    let qc = gn0 * g00;
    let disc = clamp_radicand(qb * qb - 4.0 * qa * qc, qb * qb)?;
    let q = -0.5 * (qb + qb.signum() * disc.sqrt());
    let (r1, r2) = (q / qa, qc / q);
    let (lo, hi) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
    let (u, regime) = if co.a < 0.0 {
        (hi, Regime::InteriorEplus)
    } else {
        (lo, Regime::InteriorEminus)
    };
    Ok((span * u, regime))
}

/// The unique symmetric Nash equilibrium of the constrained game.
pub fn symmetric_equilibrium(game: &GameInstance) -> Result<EquilibriumResult> {
    let m = game.m as f64;
    let rt = game.policy.d_rt0();
    let boundary = threshold_c((m - 1.0) * game.theta / m, game);
    let (alpha_star, regime) = if boundary <= rt && rt <= game.policy.upper_bound() {
        (game.theta / m, Regime::CapSaturated)
    } else {
        interior_equilibrium(game)?
    };
    let abar_star = match regime {
        // Keep abar* == theta exactly so R picks the top of the segment.
        Regime::CapSaturated => game.theta,
        _ => m * alpha_star,
    };
    let r_star = resource_level(abar_star, game);
    Ok(EquilibriumResult {
        alpha_star,
        regime,
        abar_star,
        r_star,
        utility_star: alpha_star * r_star,
    })
}

/// Large-`M` limits `(abar_inf, R_inf)` of total extraction and resource level.
pub fn limits(policy: &Policy, alpha: f64, theta: f64) -> Result<(f64, f64)> {
    let game = GameInstance::new(1, *policy, alpha, theta)?;
    let rt = policy.d_rt0();
    if rt > 0.0 {
        Ok((theta, rt / (rt + policy.d_tr1())))
    } else {
        Ok((game.depletion_capacity(), 0.0))
    }
}
