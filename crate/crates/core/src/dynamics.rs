//! Coupled population/resource dynamics.
//!
//! The single-population system is replicator dynamics for the cooperator
//! share `x` coupled to logistic resource dynamics for `n`. The
//! multi-population system adds `M` greedy populations that share the same
//! resource. Trajectories are produced by a fixed-step RK4 scheme that
//! clamps every component back into `[1e-12, 1 - 1e-12]` after each step.

use serde::{Deserialize, Serialize};

use crate::error::{check_positive, check_unit, Error, Result};
use crate::game::{in_region_v, GCoefficients, GreedyPolicy, Policy};

/// Post-step clamp applied to every state component.
pub const CLAMP_LO: f64 = 1e-12;
pub const CLAMP_HI: f64 = 1.0 - 1e-12;

pub const DEFAULT_DT: f64 = 0.01;
pub const DEFAULT_T_END: f64 = 2000.0;
/// Largest derivative component below which a state counts as settled.
pub const SETTLE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreedyPopulation {
    pub alpha: f64,
    pub theta: f64,
    #[serde(default)]
    pub policy: GreedyPolicy,
}

impl GreedyPopulation {
    pub fn new(alpha: f64, theta: f64) -> Self {
        GreedyPopulation {
            alpha,
            theta,
            policy: GreedyPolicy::default(),
        }
    }
}

/// Rates of the responsible population, resource timescale and the greedy populations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateParams {
    pub alpha: f64,
    pub theta: f64,
    pub eps: f64,
    pub greedy: Vec<GreedyPopulation>,
}

impl RateParams {
    pub fn new(alpha: f64, theta: f64) -> Self {
        RateParams {
            alpha,
            theta,
            eps: 1.0,
            greedy: Vec::new(),
        }
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn with_greedy(mut self, greedy: Vec<GreedyPopulation>) -> Self {
        self.greedy = greedy;
        self
    }

    /// `M` identical greedy populations extracting `alpha_i` each.
    pub fn with_symmetric_greedy(self, m: usize, alpha_i: f64, theta_i: f64) -> Self {
        self.with_greedy(vec![GreedyPopulation::new(alpha_i, theta_i); m])
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("alpha", self.alpha)?;
        check_positive("theta", self.theta)?;
        check_positive("eps", self.eps)?;
        for g in &self.greedy {
            if !(g.alpha >= 0.0 && g.alpha.is_finite()) {
                return Err(Error::Domain {
                    name: "alpha_i",
                    value: g.alpha,
                    domain: "[0, inf)",
                });
            }
            if !(g.theta >= 0.0 && g.theta.is_finite()) {
                return Err(Error::Domain {
                    name: "theta_i",
                    value: g.theta,
                    domain: "[0, inf)",
                });
            }
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.greedy.len()
    }

    /// Total greedy extraction rate.
    pub fn abar(&self) -> f64 {
        self.greedy.iter().map(|g| g.alpha).sum()
    }
}

/// `(x, x_1..x_M, n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub x: f64,
    pub xg: Vec<f64>,
    pub n: f64,
}

impl SystemState {
    pub fn new(x: f64, xg: Vec<f64>, n: f64) -> Self {
        SystemState { x, xg, n }
    }

    pub fn dim(&self) -> usize {
        self.xg.len() + 2
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        v.push(self.x);
        v.extend_from_slice(&self.xg);
        v.push(self.n);
        v
    }

    pub fn from_slice(s: &[f64]) -> Result<Self> {
        if s.len() < 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: s.len(),
            });
        }
        Ok(SystemState {
            x: s[0],
            xg: s[1..s.len() - 1].to_vec(),
            n: s[s.len() - 1],
        })
    }

    fn check_domain(&self) -> Result<()> {
        check_unit("x", self.x)?;
        for &v in &self.xg {
            check_unit("x_i", v)?;
        }
        check_unit("n", self.n)
    }
}

/// Time series of states; states are stored flat with stride `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    dim: usize,
    times: Vec<f64>,
    data: Vec<f64>,
    max_clamp: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn final_state(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    /// One component across the whole trajectory.
    pub fn component(&self, k: usize) -> Vec<f64> {
        self.states().map(|s| s[k]).collect()
    }

    /// Largest correction any clamp applied along the trajectory.
    pub fn max_clamp(&self) -> f64 {
        self.max_clamp
    }

    /// Range (max - min) of component `k` over the trailing `fraction` of the time span.
    pub fn trailing_range(&self, k: usize, fraction: f64) -> f64 {
        let t_last = *self.times.last().unwrap_or(&0.0);
        let t_first = self.times.first().copied().unwrap_or(0.0);
        let cutoff = t_last - fraction * (t_last - t_first);
        let (lo, hi) = self
            .times
            .iter()
            .zip(self.states())
            .filter(|(t, _)| **t >= cutoff)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, s)| {
                (lo.min(s[k]), hi.max(s[k]))
            });
        hi - lo
    }
}

/// Fixed-step fourth-order Runge-Kutta with post-step clamping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rk4 {
    pub dt: f64,
    pub t_end: f64,
    /// Keep every `record_every`-th step (the initial and final states are always kept).
    pub record_every: usize,
}

impl Default for Rk4 {
    fn default() -> Self {
        Rk4 {
            dt: DEFAULT_DT,
            t_end: DEFAULT_T_END,
            record_every: 1,
        }
    }
}

/// End point of a run that stops early once the flow has settled.
#[derive(Debug, Clone, PartialEq)]
pub struct Settled {
    pub state: Vec<f64>,
    pub t: f64,
    /// True if the derivative criterion was met before `t_end`.
    pub settled: bool,
    pub max_derivative: f64,
    pub max_clamp: f64,
}

struct Workspace {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Workspace {
    fn new(dim: usize) -> Self {
        Workspace {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }
}

impl Rk4 {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Rk4 {
            dt,
            t_end,
            record_every: 1,
        }
    }

    pub fn recording_every(mut self, stride: usize) -> Self {
        self.record_every = stride.max(1);
        self
    }

    fn check(&self, state0: &[f64]) -> Result<()> {
        check_positive("dt", self.dt)?;
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Domain {
                name: "t_end",
                value: self.t_end,
                domain: "[0, inf)",
            });
        }
        for &v in state0 {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Domain {
                    name: "state0",
                    value: v,
                    domain: "(0, 1)",
                });
            }
        }
        Ok(())
    }

    fn n_steps(&self) -> usize {
        // Tolerate t_end / dt landing a hair above an integer.
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize
    }

    fn time_at(&self, k: usize) -> f64 {
        (k as f64 * self.dt).min(self.t_end)
    }

    #[allow(clippy::needless_range_loop)]
    /// One step from `s` of length `h`; `ws.k1` must already hold `f(s)`.
    /// Returns the largest clamp correction.
    fn step<F>(f: &F, s: &mut [f64], h: f64, ws: &mut Workspace) -> f64
    where
        F: Fn(&[f64], &mut [f64]),
    {
        let n = s.len();
        for i in 0..n {
            ws.tmp[i] = s[i] + 0.5 * h * ws.k1[i];
        }
        f(&ws.tmp, &mut ws.k2);
        for i in 0..n {
            ws.tmp[i] = s[i] + 0.5 * h * ws.k2[i];
        }
        f(&ws.tmp, &mut ws.k3);
        for i in 0..n {
            ws.tmp[i] = s[i] + h * ws.k3[i];
        }
        f(&ws.tmp, &mut ws.k4);
        let mut clamp = 0.0_f64;
        for i in 0..n {
            let next = s[i] + h / 6.0 * (ws.k1[i] + 2.0 * ws.k2[i] + 2.0 * ws.k3[i] + ws.k4[i]);
            let clamped = next.clamp(CLAMP_LO, CLAMP_HI);
            clamp = clamp.max((clamped - next).abs());
            s[i] = if next.is_nan() { next } else { clamped };
        }
        clamp
    }

    pub fn run<F>(&self, f: F, state0: &[f64]) -> Result<Trajectory>
    where
        F: Fn(&[f64], &mut [f64]),
    {
        self.check(state0)?;
        let dim = state0.len();
        let steps = self.n_steps();
        let mut ws = Workspace::new(dim);
        let mut s = state0.to_vec();
        let mut traj = Trajectory {
            dim,
            times: vec![0.0],
            data: s.clone(),
            max_clamp: 0.0,
        };
        for k in 0..steps {
            let t = self.time_at(k);
            let h = self.time_at(k + 1) - t;
            f(&s, &mut ws.k1);
            let clamp = Self::step(&f, &mut s, h, &mut ws);
            traj.max_clamp = traj.max_clamp.max(clamp);
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { t: t + h });
            }
            if (k + 1) % self.record_every == 0 || k + 1 == steps {
                traj.times.push(t + h);
                traj.data.extend_from_slice(&s);
            }
        }
        Ok(traj)
    }

    /// Integrate without recording, stopping as soon as every derivative
    /// component drops below [`SETTLE_TOL`] or `t_end` is reached.
    ///
    /// A slow passage near a boundary saddle also has a tiny derivative, so
    /// this can stop short of the attractor; use [`Rk4::endpoint`] when that
    /// matters.
    pub fn settle<F>(&self, f: F, state0: &[f64]) -> Result<Settled>
    where
        F: Fn(&[f64], &mut [f64]),
    {
        self.advance(f, state0, true)
    }

    /// State at `t_end`, without recording the path.
    pub fn endpoint<F>(&self, f: F, state0: &[f64]) -> Result<Settled>
    where
        F: Fn(&[f64], &mut [f64]),
    {
        self.advance(f, state0, false)
    }

    fn advance<F>(&self, f: F, state0: &[f64], early_stop: bool) -> Result<Settled>
    where
        F: Fn(&[f64], &mut [f64]),
    {
        self.check(state0)?;
        let steps = self.n_steps();
        let mut ws = Workspace::new(state0.len());
        let mut s = state0.to_vec();
        let mut max_clamp = 0.0_f64;
        for k in 0..steps {
            let t = self.time_at(k);
            f(&s, &mut ws.k1);
            let max_derivative = ws.k1.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            if early_stop && max_derivative < SETTLE_TOL {
                return Ok(Settled {
                    state: s,
                    t,
                    settled: true,
                    max_derivative,
                    max_clamp,
                });
            }
            let h = self.time_at(k + 1) - t;
            max_clamp = max_clamp.max(Self::step(&f, &mut s, h, &mut ws));
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { t: t + h });
            }
        }
        f(&s, &mut ws.k1);
        let max_derivative = ws.k1.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        Ok(Settled {
            state: s,
            t: self.time_at(steps),
            settled: max_derivative < SETTLE_TOL,
            max_derivative,
            max_clamp,
        })
    }
}

/// Fixed-step RK4 from `state0` to `t_end`, recording every step.
pub fn integrate<F>(rhs: F, state0: &[f64], t_end: f64, dt: f64) -> Result<Trajectory>
where
    F: Fn(&[f64], &mut [f64]),
{
    Rk4::new(dt, t_end).run(rhs, state0)
}

/// Vector field of the single-population system on `(x, n)`.
#[derive(Debug, Clone, Copy)]
pub struct SinglePopulation {
    coeffs: GCoefficients,
    alpha: f64,
    theta: f64,
}

impl SinglePopulation {
    pub fn new(policy: &Policy, alpha: f64, theta: f64) -> Result<Self> {
        check_positive("alpha", alpha)?;
        check_positive("theta", theta)?;
        Ok(SinglePopulation {
            coeffs: policy.coefficients(),
            alpha,
            theta,
        })
    }

    #[inline]
    pub fn eval(&self, x: f64, n: f64) -> (f64, f64) {
        let dx = x * (1.0 - x) * self.coeffs.eval(x, n);
        let dn = n * (1.0 - n) * (self.theta * x - self.alpha * (1.0 - x));
        (dx, dn)
    }

    pub fn field(&self, s: &[f64], out: &mut [f64]) {
        let (dx, dn) = self.eval(s[0], s[1]);
        out[0] = dx;
        out[1] = dn;
    }
}

pub fn rhs_single(x: f64, n: f64, policy: &Policy, alpha: f64, theta: f64) -> Result<(f64, f64)> {
    check_unit("x", x)?;
    check_unit("n", n)?;
    Ok(SinglePopulation::new(policy, alpha, theta)?.eval(x, n))
}

/// Vector field of the responsible population plus `M` greedy populations
/// on `(x, x_1..x_M, n)`.
#[derive(Debug, Clone)]
pub struct MultiPopulation {
    coeffs: GCoefficients,
    greedy: Vec<(f64, f64, GCoefficients)>,
    alpha: f64,
    theta: f64,
    eps: f64,
}

impl MultiPopulation {
    pub fn new(policy: &Policy, rates: &RateParams) -> Result<Self> {
        rates.validate()?;
        Ok(MultiPopulation {
            coeffs: policy.coefficients(),
            greedy: rates
                .greedy
                .iter()
                .map(|g| (g.alpha, g.theta, g.policy.coefficients()))
                .collect(),
            alpha: rates.alpha,
            theta: rates.theta,
            eps: rates.eps,
        })
    }

    pub fn dim(&self) -> usize {
        self.greedy.len() + 2
    }

    pub fn field(&self, s: &[f64], out: &mut [f64]) {
        let m = self.greedy.len();
        let x = s[0];
        let n = s[m + 1];
        out[0] = x * (1.0 - x) * self.coeffs.eval(x, n);
        let mut restore = self.theta * x;
        let mut extract = self.alpha * (1.0 - x);
        for (i, &(a_i, t_i, ref g)) in self.greedy.iter().enumerate() {
            let xi = s[i + 1];
            out[i + 1] = xi * (1.0 - xi) * g.eval(xi, n);
            restore += t_i * xi;
            extract += a_i * (1.0 - xi);
        }
        out[m + 1] = self.eps * n * (1.0 - n) * (restore - extract);
    }

    pub fn run(&self, rk: &Rk4, state0: &[f64]) -> Result<Trajectory> {
        self.check_dim(state0.len())?;
        rk.run(|s, o| self.field(s, o), state0)
    }

    pub fn settle(&self, rk: &Rk4, state0: &[f64]) -> Result<Settled> {
        self.check_dim(state0.len())?;
        rk.settle(|s, o| self.field(s, o), state0)
    }

    pub fn endpoint(&self, rk: &Rk4, state0: &[f64]) -> Result<Settled> {
        self.check_dim(state0.len())?;
        rk.endpoint(|s, o| self.field(s, o), state0)
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got,
            });
        }
        Ok(())
    }
}

pub fn rhs_multi(state: &SystemState, rates: &RateParams, policy: &Policy) -> Result<SystemState> {
    let field = MultiPopulation::new(policy, rates)?;
    if state.dim() != field.dim() {
        return Err(Error::DimensionMismatch {
            expected: field.dim(),
            got: state.dim(),
        });
    }
    state.check_domain()?;
    let s = state.to_vec();
    let mut out = vec![0.0; s.len()];
    field.field(&s, &mut out);
    SystemState::from_slice(&out)
}

/// Asymptotic outcome of the dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum OutcomeClass {
    /// Unique asymptotically stable interior point with greedy shares at zero.
    Sustained { x_star: f64, n_star: f64 },
    /// Convergence to the heteroclinic cycle on the boundary of the square.
    /// `closed_orbits` marks the neutral case where trajectories are closed
    /// orbits around a centre instead.
    OscillatingToc { closed_orbits: bool },
    /// Resource driven to zero.
    Collapse,
    /// Total greedy extraction exactly balances restoration: a locally
    /// stable segment of fixed points `(1, 0, n)` with `n < n_upper`.
    LineSegment { n_upper: f64 },
}

/// Interior fixed point `(x*, n*)` at total greedy extraction `abar`.
pub fn fixed_point(policy: &Policy, alpha: f64, theta: f64, abar: f64) -> (f64, f64) {
    let c = policy.coefficients();
    let x = (alpha + abar) / (alpha + theta);
    let n = -c.eval(x, 0.0) / c.dg_dn(x);
    (x, n.max(0.0))
}

pub fn classify_single(policy: &Policy, alpha: f64, theta: f64) -> Result<OutcomeClass> {
    check_positive("alpha", alpha)?;
    check_positive("theta", theta)?;
    let sp = policy.d_sp0();
    let rt = policy.d_rt0();
    let upper = policy.upper_bound();
    if sp > 0.0 && -theta / alpha * sp <= rt && rt < upper {
        let (x_star, n_star) = fixed_point(policy, alpha, theta, 0.0);
        Ok(OutcomeClass::Sustained { x_star, n_star })
    } else if sp > 0.0 && rt >= upper {
        Ok(OutcomeClass::OscillatingToc {
            closed_orbits: rt == upper,
        })
    } else {
        Ok(OutcomeClass::Collapse)
    }
}

pub fn classify_multi(rates: &RateParams, policy: &Policy) -> Result<OutcomeClass> {
    rates.validate()?;
    let abar = rates.abar();
    let (alpha, theta) = (rates.alpha, rates.theta);
    if abar == 0.0 {
        // No greedy extraction: the responsible population alone.
        return classify_single(policy, alpha, theta);
    }
    Ok(if abar > theta {
        OutcomeClass::Collapse
    } else if abar < theta {
        if in_region_v(policy, alpha, theta, abar)? {
            let (x_star, n_star) = fixed_point(policy, alpha, theta, abar);
            OutcomeClass::Sustained { x_star, n_star }
        } else {
            OutcomeClass::Collapse
        }
    } else if policy.d_rt0() > 0.0 {
        let rt = policy.d_rt0();
        OutcomeClass::LineSegment {
            n_upper: rt / (rt + policy.d_tr1()),
        }
    } else {
        OutcomeClass::Collapse
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn base() -> Policy {
        Policy::new(2.0, 0.2, 2.1, 2.0).unwrap()
    }

    #[test]
    fn single_rhs_reference_point() {
        let (dx, dn) = rhs_single(0.5, 0.5, &base(), 0.4, 1.0).unwrap();
        assert_abs_diff_eq!(dx, -0.11875, epsilon = 1e-12);
        assert_abs_diff_eq!(dn, 0.075, epsilon = 1e-12);
    }

    #[test]
    fn single_rhs_boundaries() {
        let p = base();
        for v in [0.0, 0.3, 1.0] {
            assert_eq!(rhs_single(0.0, v, &p, 0.4, 1.0).unwrap().0, 0.0);
            assert_eq!(rhs_single(1.0, v, &p, 0.4, 1.0).unwrap().0, 0.0);
            assert_eq!(rhs_single(v, 0.0, &p, 0.4, 1.0).unwrap().1, 0.0);
            assert_eq!(rhs_single(v, 1.0, &p, 0.4, 1.0).unwrap().1, 0.0);
        }
        assert!(rhs_single(1.5, 0.5, &p, 0.4, 1.0).is_err());
    }

    #[test]
    fn single_rhs_vanishes_at_fixed_point() {
        let OutcomeClass::Sustained { x_star, n_star } =
            classify_single(&base(), 0.4, 1.0).unwrap()
        else {
            panic!("expected sustained");
        };
        let (dx, dn) = rhs_single(x_star, n_star, &base(), 0.4, 1.0).unwrap();
        assert_abs_diff_eq!(dx, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(dn, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn multi_without_greedy_reduces_to_single() {
        let p = base();
        for eps in [1.0, 0.3] {
            let rates = RateParams::new(0.4, 1.0).with_eps(eps);
            let d = rhs_multi(&SystemState::new(0.3, vec![], 0.6), &rates, &p).unwrap();
            let (dx, dn) = rhs_single(0.3, 0.6, &p, 0.4, 1.0).unwrap();
            assert_eq!(d.x, dx);
            assert_abs_diff_eq!(d.n, eps * dn, epsilon = 1e-15);
        }
    }

    #[test]
    fn multi_vanishes_at_lemma_fixed_point() {
        let p = base();
        let rates = RateParams::new(0.4, 1.0).with_symmetric_greedy(1, 0.5, 1.0);
        let (x, n) = fixed_point(&p, 0.4, 1.0, 0.5);
        let d = rhs_multi(&SystemState::new(x, vec![0.0], n), &rates, &p).unwrap();
        assert_abs_diff_eq!(d.x, 0.0, epsilon = 1e-14);
        assert_eq!(d.xg[0], 0.0);
        assert_abs_diff_eq!(d.n, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn eps_scales_only_the_resource() {
        let p = base();
        let state = SystemState::new(0.4, vec![0.3, 0.8], 0.55);
        let greedy = vec![
            GreedyPopulation::new(0.2, 0.5),
            GreedyPopulation::new(0.1, 1.0),
        ];
        let r1 = RateParams::new(0.4, 1.0).with_greedy(greedy.clone());
        let r2 = r1.clone().with_eps(2.0);
        let d1 = rhs_multi(&state, &r1, &p).unwrap();
        let d2 = rhs_multi(&state, &r2, &p).unwrap();
        assert_eq!(d1.x, d2.x);
        assert_eq!(d1.xg, d2.xg);
        assert_abs_diff_eq!(d2.n, 2.0 * d1.n, epsilon = 1e-15);
    }

    #[test]
    fn multi_rejects_bad_dimension() {
        let rates = RateParams::new(0.4, 1.0).with_symmetric_greedy(2, 0.1, 1.0);
        let err = rhs_multi(&SystemState::new(0.3, vec![0.1], 0.5), &rates, &base()).unwrap_err();
        assert_eq!(
            err,
            Error::DimensionMismatch {
                expected: 4,
                got: 3
            }
        );
        let err = rhs_multi(&SystemState::new(0.3, vec![0.1, 1.1], 0.5), &rates, &base());
        assert!(matches!(err, Err(Error::Domain { .. })));
    }

    #[test]
    fn constant_field_gives_constant_trajectory() {
        let traj = integrate(|_, o| o.fill(0.0), &[0.3, 0.7], 5.0, 0.1).unwrap();
        assert_eq!(traj.len(), 51);
        assert!(traj.states().all(|s| s == [0.3, 0.7]));
        assert_abs_diff_eq!(*traj.times().last().unwrap(), 5.0);
    }

    #[test]
    fn rk4_is_fourth_order_on_exponential_decay() {
        let exact = 0.5 * (-1.0_f64).exp();
        let err = |dt: f64| {
            let traj = integrate(|s, o| o[0] = -s[0], &[0.5], 1.0, dt).unwrap();
            (traj.final_state()[0] - exact).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn zero_horizon_echoes_initial_state() {
        let traj = integrate(|s, o| o[0] = -s[0], &[0.5], 0.0, 0.01).unwrap();
        assert_eq!(traj.len(), 1);
        assert_eq!(traj.final_state(), &[0.5]);
    }

    #[test]
    fn integrate_rejects_boundary_start_and_bad_step() {
        assert!(integrate(|_, o| o[0] = 0.0, &[0.0], 1.0, 0.1).is_err());
        assert!(integrate(|_, o| o[0] = 0.0, &[0.5], 1.0, 0.0).is_err());
        assert!(integrate(|_, o| o[0] = 0.0, &[0.5], -1.0, 0.1).is_err());
    }

    #[test]
    fn non_finite_state_is_an_error() {
        let err = integrate(|_, o| o[0] = f64::NAN, &[0.5], 1.0, 0.1).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn clamp_keeps_state_inside() {
        let traj = integrate(|_, o| o[0] = 5.0, &[0.5], 1.0, 0.1).unwrap();
        assert_eq!(traj.final_state()[0], CLAMP_HI);
        assert!(traj.max_clamp() > 0.0);
    }

    #[test]
    fn recording_stride_keeps_endpoints() {
        let rk = Rk4::new(0.01, 1.0).recording_every(30);
        let traj = rk.run(|s, o| o[0] = -s[0], &[0.5]).unwrap();
        assert_eq!(traj.times()[0], 0.0);
        assert_abs_diff_eq!(*traj.times().last().unwrap(), 1.0);
        assert_eq!(traj.len(), 5);
    }

    #[test]
    fn classify_single_examples() {
        let out = classify_single(&base(), 0.4, 1.0).unwrap();
        let OutcomeClass::Sustained { x_star, n_star } = out else {
            panic!("{out:?}");
        };
        assert_abs_diff_eq!(x_star, 0.4 / 1.4, epsilon = 1e-12);
        assert_abs_diff_eq!(
            n_star,
            1.485714285714286 / 3.514285714285714,
            epsilon = 1e-12
        );

        let osc = Policy::new(2.0, 2.5, 2.1, 2.0).unwrap();
        assert_eq!(
            classify_single(&osc, 0.4, 1.0).unwrap(),
            OutcomeClass::OscillatingToc {
                closed_orbits: false
            }
        );
        let centre = Policy::new(2.0, 2.1, 2.1, 2.0).unwrap();
        assert_eq!(
            classify_single(&centre, 0.4, 1.0).unwrap(),
            OutcomeClass::OscillatingToc {
                closed_orbits: true
            }
        );
        let collapse = Policy::new(-0.5, 0.2, 2.1, 2.0).unwrap();
        assert_eq!(
            classify_single(&collapse, 0.4, 1.0).unwrap(),
            OutcomeClass::Collapse
        );
        let low = Policy::new(1.0, -2.0, 2.1, 2.0).unwrap();
        assert_eq!(
            classify_single(&low, 1.0, 0.4).unwrap(),
            OutcomeClass::Collapse
        );
    }

    #[test]
    fn sustained_on_lower_boundary_has_zero_resource() {
        // dRT0 = -(theta / alpha) dSP0 exactly.
        let p = Policy::new(2.0, -1.0, 2.1, 2.0).unwrap();
        let out = classify_single(&p, 1.0, 0.5).unwrap();
        let OutcomeClass::Sustained { x_star, n_star } = out else {
            panic!("{out:?}");
        };
        assert_abs_diff_eq!(x_star, 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(n_star, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn classify_multi_examples() {
        let p = base();
        let rates = |abar: f64| RateParams::new(0.4, 1.0).with_symmetric_greedy(1, abar, 1.0);
        assert_eq!(
            classify_multi(&rates(1.5), &p).unwrap(),
            OutcomeClass::Collapse
        );

        let out = classify_multi(&rates(0.5), &p).unwrap();
        let OutcomeClass::Sustained { x_star, n_star } = out else {
            panic!("{out:?}");
        };
        assert_abs_diff_eq!(x_star, 0.9 / 1.4, epsilon = 1e-12);
        assert_abs_diff_eq!(n_star, 0.289926289926, epsilon = 1e-9);

        let OutcomeClass::LineSegment { n_upper } = classify_multi(&rates(1.0), &p).unwrap() else {
            panic!();
        };
        assert_abs_diff_eq!(n_upper, 0.2 / 2.3, epsilon = 1e-15);

        let neg = Policy::new(2.0, -1.0, 2.1, 2.0).unwrap();
        assert_eq!(
            classify_multi(&rates(1.0), &neg).unwrap(),
            OutcomeClass::Collapse
        );
        // Sustainable alone (lower bound -5), but not against abar = 0.9.
        assert_eq!(
            classify_multi(&rates(0.9), &neg).unwrap(),
            OutcomeClass::Collapse
        );
    }

    #[test]
    fn classify_multi_is_independent_of_eps() {
        let p = base();
        let r = RateParams::new(0.4, 1.0).with_symmetric_greedy(2, 0.2, 1.0);
        let a = classify_multi(&r, &p).unwrap();
        for eps in [0.1, 10.0] {
            assert_eq!(classify_multi(&r.clone().with_eps(eps), &p).unwrap(), a);
        }
    }

    #[test]
    fn classify_multi_without_greedy_matches_single() {
        for rt in [-3.0, -1.0, 0.2, 2.1, 2.5] {
            let p = Policy::new(2.0, rt, 3.5, 2.0).unwrap();
            assert_eq!(
                classify_multi(&RateParams::new(0.4, 1.0), &p).unwrap(),
                classify_single(&p, 0.4, 1.0).unwrap()
            );
        }
    }

    #[test]
    fn single_population_converges_to_fixed_point() {
        let p = base();
        let sys = SinglePopulation::new(&p, 0.4, 1.0).unwrap();
        let traj = Rk4::new(0.01, 500.0)
            .recording_every(1000)
            .run(|s, o| sys.field(s, o), &[0.5, 0.5])
            .unwrap();
        let end = traj.final_state();
        assert_abs_diff_eq!(end[0], 0.285714, epsilon = 1e-3);
        assert_abs_diff_eq!(end[1], 0.422764, epsilon = 1e-3);
    }

    #[test]
    fn one_greedy_population_converges_to_lemma_point() {
        let rates = RateParams::new(0.4, 1.0).with_symmetric_greedy(1, 0.5, 1.0);
        let sys = MultiPopulation::new(&base(), &rates).unwrap();
        let end = sys.settle(&Rk4::default(), &[0.5, 0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(end.state[0], 0.642857, epsilon = 1e-3);
        assert!(end.state[1] < 1e-3);
        assert_abs_diff_eq!(end.state[2], 0.289926, epsilon = 1e-3);
    }

    #[test]
    fn oscillating_policy_keeps_swinging() {
        let p = Policy::new(2.0, 2.5, 2.1, 2.0).unwrap();
        let sys = SinglePopulation::new(&p, 0.4, 1.0).unwrap();
        let traj = Rk4::new(0.01, 2000.0)
            .recording_every(10)
            .run(|s, o| sys.field(s, o), &[0.5, 0.5])
            .unwrap();
        assert!(traj.trailing_range(1, 0.25) > 0.5);
    }
}
