//! Independent numerical cross-checks of the closed forms.
//!
//! Each oracle recomputes a quantity by brute force (grid search, fixed-point
//! iteration, finite differences, bisection, ODE integration) and reports the
//! worst disagreement over a batch of seeded random instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dynamics::{
    fixed_point, MultiPopulation, RateParams, Rk4, Settled, DEFAULT_DT, DEFAULT_T_END,
};
use crate::equilibrium::{
    best_response, quadratic_coefficients, quadratic_residual, resource_level, strategy_cap,
    symmetric_equilibrium, threshold_c, EquilibriumResult, GameInstance, Regime, StrategyProfile,
    A_DEAD_BAND,
};
use crate::error::{Error, Result};
use crate::game::{GCoefficients, Policy};

pub const DEFAULT_SEED: u64 = 42;

pub const BR_GRID_RESOLUTION: f64 = 1e-5;
pub const BR_GRID_TOL: f64 = 2e-5;
pub const BR_ITERATION_TOL: f64 = 1e-8;
pub const EQUILIBRIUM_TOL: f64 = 1e-6;
pub const RESIDUAL_TOL: f64 = 1e-9;
pub const CONCAVITY_TOL: f64 = 1e-6;
/// Distance kept from both ends of the restricted set when sampling.
pub const CONCAVITY_MARGIN: f64 = 1e-4;
/// Finite-difference step for `U''`. Round-off in the second difference
/// scales like `eps * U / h^2`, so it cannot be much smaller.
pub const CONCAVITY_STEP: f64 = 1e-5;
pub const ODE_TOL: f64 = 1e-3;
pub const ODE_STARTS: usize = 5;
/// Offset below `theta` used to simulate cap-saturated equilibria.
pub const CAP_OFFSET: f64 = 1e-6;
pub const THRESHOLD_TOL: f64 = 1e-9;
pub const ROOT_TOL: f64 = 1e-10;
pub const Y_TOL: f64 = 1e-12;

/// Outcome of one oracle over a batch of instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub name: String,
    pub instances_checked: usize,
    pub max_abs_error: f64,
    pub tolerance: f64,
    /// Parameters of the instance with the largest error.
    pub worst_instance: Value,
    pub pass: bool,
}

impl OracleReport {
    /// Folds per-instance errors into a report. NaN errors count as infinite.
    pub fn from_errors<I>(name: &str, tolerance: f64, errors: I) -> Self
    where
        I: IntoIterator<Item = (f64, Value)>,
    {
        let mut count = 0;
        let mut worst = (f64::NEG_INFINITY, Value::Null);
        for (err, inst) in errors {
            count += 1;
            let err = if err.is_nan() { f64::INFINITY } else { err };
            if err > worst.0 {
                worst = (err, inst);
            }
        }
        let max_abs_error = if count == 0 { 0.0 } else { worst.0 };
        OracleReport {
            name: name.to_string(),
            instances_checked: count,
            max_abs_error,
            tolerance,
            worst_instance: worst.1,
            pass: max_abs_error <= tolerance,
        }
    }
}

/// Seeded source of random responsible game instances.
pub struct InstanceGenerator {
    rng: ChaCha8Rng,
}

impl InstanceGenerator {
    pub fn new(seed: u64) -> Self {
        InstanceGenerator {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// A policy satisfying both sign assumptions, responsible or not.
    pub fn policy(&mut self) -> Policy {
        loop {
            let tr = self.rng.gen_range(0.5..3.0);
            let ps = self.rng.gen_range(0.5..3.0);
            let sp = self.rng.gen_range(-ps..3.0);
            let rt = self.rng.gen_range(-tr..3.0);
            if let Ok(p) = Policy::new(sp, rt, tr, ps) {
                return p;
            }
        }
    }

    /// `dSP0, dTR1, dPS1 ~ U(0.5, 3)`, `alpha ~ U(0.1, 1)`, `theta ~ U(0.5, 2)`
    /// and `dRT0` uniform over the responsible interval.
    pub fn game(&mut self, m: usize) -> GameInstance {
        loop {
            let sp: f64 = self.rng.gen_range(0.5..3.0);
            let tr: f64 = self.rng.gen_range(0.5..3.0);
            let ps: f64 = self.rng.gen_range(0.5..3.0);
            let alpha: f64 = self.rng.gen_range(0.1..1.0);
            let theta: f64 = self.rng.gen_range(0.5..2.0);
            let lower = (-theta / alpha * sp).max(-tr);
            let upper = tr / ps * sp;
            let rt = self.rng.gen_range(lower..upper);
            let game =
                Policy::new(sp, rt, tr, ps).and_then(|p| GameInstance::new(m, p, alpha, theta));
            if let Ok(g) = game {
                return g;
            }
        }
    }

    /// A game with `M` drawn uniformly from `ms`.
    pub fn game_in(&mut self, ms: std::ops::RangeInclusive<usize>) -> GameInstance {
        let m = self.rng.gen_range(ms);
        self.game(m)
    }
}

pub fn describe(game: &GameInstance) -> Value {
    serde_json::to_value(game).unwrap_or(Value::Null)
}

/// Utility of rate `r` for an agent facing `abar_minus` with cap `cap`.
/// The cap itself is evaluated at exactly the total capacity so rounding in
/// `abar_minus + cap` cannot push it past the `R` discontinuity.
fn deviation_utility(r: f64, abar_minus: f64, cap: f64, game: &GameInstance) -> f64 {
    let abar = if r == cap && cap > 0.0 {
        game.total_capacity()
    } else {
        abar_minus + r
    };
    r * resource_level(abar, game)
}

/// Maximiser of `U_i` over a uniform grid on `[0, strategy_cap]` with spacing
/// at most `resolution`. Ties go to the smaller rate.
pub fn grid_best_response(abar_minus: f64, game: &GameInstance, resolution: f64) -> Result<f64> {
    if !(resolution > 0.0) {
        return Err(Error::Domain {
            name: "resolution",
            value: resolution,
            domain: "(0, inf)",
        });
    }
    let cap = strategy_cap(abar_minus, game)?;
    let steps = (cap / resolution).ceil().max(1.0) as usize;
    let mut best = (0.0, deviation_utility(0.0, abar_minus, cap, game));
    for k in 1..=steps {
        let r = if k == steps {
            cap
        } else {
            cap * k as f64 / steps as f64
        };
        let u = deviation_utility(r, abar_minus, cap, game);
        if u > best.1 {
            best = (r, u);
        }
    }
    Ok(best.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrIteration {
    pub profile: StrategyProfile,
    pub converged: bool,
    pub iterations: usize,
    /// Final `max_i |BR_i - alpha_i|`.
    pub residual: f64,
}

impl BrIteration {
    /// Whether all rates agree to within `tol`.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        let r = self.profile.rates();
        let (lo, hi) = r
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        r.is_empty() || hi - lo <= tol
    }
}

/// Best response, or 0 when the restricted set is empty.
fn response_or_zero(abar_minus: f64, game: &GameInstance) -> Result<f64> {
    match best_response(abar_minus, game) {
        Err(Error::EmptyStrategySet { .. }) => Ok(0.0),
        other => other,
    }
}

/// Synchronous best-response iteration.
///
/// Each round moves every agent a fraction `w` of the way to its best
/// response. `w` starts at 1 and halves whenever the residual fails to
/// shrink, which tames the overshoot of the cap branch (slope `-(M-1)`).
/// Convergence means `max_i |BR_i - alpha_i| < tol`.
pub fn br_iteration(
    game: &GameInstance,
    init: &StrategyProfile,
    max_iter: usize,
    tol: f64,
) -> Result<BrIteration> {
    if init.len() != game.m() {
        return Err(Error::DimensionMismatch {
            expected: game.m(),
            got: init.len(),
        });
    }
    let mut rates = init.rates().to_vec();
    let mut weight = 1.0;
    let mut last = f64::INFINITY;
    let mut br = vec![0.0; rates.len()];
    for it in 0..=max_iter {
        let total: f64 = rates.iter().sum();
        for (b, &r) in br.iter_mut().zip(&rates) {
            *b = response_or_zero((total - r).max(0.0), game)?;
        }
        let residual = br
            .iter()
            .zip(&rates)
            .fold(0.0_f64, |m, (b, r)| m.max((b - r).abs()));
        if residual < tol || it == max_iter {
            return Ok(BrIteration {
                profile: StrategyProfile::new(rates)?,
                converged: residual < tol,
                iterations: it,
                residual,
            });
        }
        if residual >= last {
            weight *= 0.5;
        }
        last = residual;
        for (r, b) in rates.iter_mut().zip(&br) {
            *r = (*r + weight * (b - *r)).max(0.0);
        }
    }
    unreachable!()
}

/// Analytic `U_i''` on the interior branch of `R`.
pub fn analytic_second_derivative(rate: f64, abar_minus: f64, game: &GameInstance) -> f64 {
    let co = game.coefficients();
    let span = game.alpha() + game.theta();
    let gn = co.dg_dn((game.alpha() + abar_minus + rate) / span);
    2.0 * co.y / (span * gn * gn) * (-1.0 + rate / span * co.a / gn)
}

/// Finite-difference `U_i''` at random interior points of the restricted
/// set, plus a sign comparison against the analytic factorisation.
/// `max_abs_error` is the largest positive `U''` seen (0 if all are negative).
pub fn fd_concavity_check(
    game: &GameInstance,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> OracleReport {
    let h = CONCAVITY_STEP;
    let capacity = game.total_capacity();
    let mut out = Vec::with_capacity(samples);
    let mut sign_mismatches = 0;
    while out.len() < samples {
        let abar_minus = rng.gen_range(0.0..capacity);
        let Ok(cap) = strategy_cap(abar_minus, game) else {
            continue;
        };
        if cap <= 2.0 * CONCAVITY_MARGIN {
            continue;
        }
        let r = rng.gen_range(CONCAVITY_MARGIN..cap - CONCAVITY_MARGIN);
        let u = |v: f64| v * resource_level(abar_minus + v, game);
        let fd = (u(r + h) - 2.0 * u(r) + u(r - h)) / (h * h);
        let exact = analytic_second_derivative(r, abar_minus, game);
        // Signs are only comparable where the difference quotient resolves them.
        if exact.abs() > 1e-4 && fd.signum() != exact.signum() {
            sign_mismatches += 1;
        }
        let inst = json!({"game": describe(game), "abar_minus": abar_minus, "alpha_i": r, "fd": fd, "exact": exact});
        out.push((fd.max(0.0), inst));
    }
    let mut report = OracleReport::from_errors("concavity", CONCAVITY_TOL, out);
    if sign_mismatches > 0 {
        report.pass = false;
    }
    report
}

/// Random interior starting state for `m` greedy populations.
pub fn random_start(m: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..m + 2).map(|_| rng.gen_range(0.05..0.95)).collect()
}

/// Integrates the coupled dynamics with greedy rates `rates` (default greedy
/// policy, `theta_i = 1`, `eps = 1`) from each start over the full horizon.
pub fn simulate_profile(
    game: &GameInstance,
    rates: &[f64],
    starts: &[Vec<f64>],
    rk: &Rk4,
) -> Result<Vec<Settled>> {
    let params = RateParams::new(game.alpha(), game.theta()).with_greedy(
        rates
            .iter()
            .map(|&a| crate::dynamics::GreedyPopulation::new(a, 1.0))
            .collect(),
    );
    let sys = MultiPopulation::new(game.policy(), &params)?;
    starts.iter().map(|s| sys.endpoint(rk, s)).collect()
}

/// Distance of a final state from the sustained point `(x*, 0, .., 0, n*)`.
pub fn distance_to_sustained(state: &[f64], x_star: f64, n_star: f64) -> f64 {
    let m = state.len() - 2;
    let greedy = state[1..=m].iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    (state[0] - x_star)
        .abs()
        .max(greedy)
        .max((state[m + 1] - n_star).abs())
}

/// Integrates the dynamics at the equilibrium profile from [`ODE_STARTS`]
/// random interior starts and compares the final resource level with `R*`.
///
/// Interior equilibria must land within [`ODE_TOL`] of `(x*, 0, .., 0, R*)`.
/// Cap-saturated equilibria are run at `abar = theta - CAP_OFFSET`, where the
/// drift along the segment of near-fixed points `(1, 0, n)` has rate
/// `CAP_OFFSET`; there the state must reach that segment (`x > 1 - tol`,
/// greedy shares below `tol`) at some `n <= R* + tol`.
pub fn ode_equilibrium_consistency(
    game: &GameInstance,
    eq: &EquilibriumResult,
    seed: u64,
) -> Result<OracleReport> {
    let m = game.m();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts: Vec<Vec<f64>> = (0..ODE_STARTS).map(|_| random_start(m, &mut rng)).collect();
    let rk = Rk4::new(DEFAULT_DT, DEFAULT_T_END);
    let cap = eq.regime == Regime::CapSaturated;
    let abar = if cap {
        game.theta() - CAP_OFFSET
    } else {
        eq.abar_star
    };
    let rates = vec![abar / m as f64; m];
    let finals = simulate_profile(game, &rates, &starts, &rk)?;
    let (x_star, n_star) = fixed_point(game.policy(), game.alpha(), game.theta(), abar);
    let errors = finals.iter().zip(&starts).map(|(f, s0)| {
        let s = &f.state;
        let err = if cap {
            let greedy = s[1..=m].iter().fold(0.0_f64, |a, v| a.max(*v));
            (1.0 - s[0]).max(greedy).max(s[m + 1] - eq.r_star)
        } else {
            distance_to_sustained(s, x_star, n_star).max((s[m + 1] - eq.r_star).abs())
        };
        let inst = json!({"game": describe(game), "abar": abar, "start": s0, "final": s, "t": f.t, "R_star": eq.r_star});
        (err, inst)
    });
    Ok(OracleReport::from_errors(
        "ode_equilibrium_consistency",
        ODE_TOL,
        errors.collect::<Vec<_>>(),
    ))
}

/// Bisection for a sign change of `f` on `[lo, hi]`, run until the bracket
/// stops shrinking in floating point.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> Option<f64> {
    let (mut flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() || !flo.is_finite() || !fhi.is_finite() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Left derivative at the cap `alpha_i = theta - abar_minus` of the deviation
/// utility, as a function of `dRT0`, built from the generic `R'` formula.
pub fn marginal_utility_at_cap(rt: f64, abar_minus: f64, game: &GameInstance) -> f64 {
    let p = game.policy();
    let co = GCoefficients::from_differences(p.d_sp0(), rt, p.d_tr1(), p.d_ps1());
    let span = game.alpha() + game.theta();
    let gn = co.dg_dn(1.0);
    let r = -co.eval(1.0, 0.0) / gn;
    let dr = -co.y / (span * gn * gn);
    r + (game.theta() - abar_minus) * dr
}

/// `threshold_c` against a bisection root of the marginal utility at the cap.
pub fn threshold_oracle(games: &[GameInstance], rng: &mut ChaCha8Rng) -> OracleReport {
    let draws: Vec<f64> = games
        .iter()
        .map(|g| rng.gen_range(0.0..g.theta()))
        .collect();
    let errors: Vec<_> = games
        .par_iter()
        .zip(draws)
        .map(|(g, abar_minus)| {
            let upper = g.policy().upper_bound();
            let root = bisect(|rt| marginal_utility_at_cap(rt, abar_minus, g), 0.0, upper);
            let closed = threshold_c(abar_minus, g);
            let err = root.map_or(f64::INFINITY, |r| (r - closed).abs());
            (err, json!({"game": describe(g), "abar_minus": abar_minus, "closed": closed, "bisection": root}))
        })
        .collect();
    OracleReport::from_errors("threshold_c_bisection", THRESHOLD_TOL, errors)
}

/// Both roots of `Q` by bisection, smaller first, if it has real roots.
pub fn quadratic_roots_bisection(game: &GameInstance) -> Option<(f64, f64)> {
    let (k1, k0) = quadratic_coefficients(game);
    let m2 = (game.m() * game.m()) as f64;
    let q = |g: f64| m2 * g * g + k1 * g + k0;
    let vertex = -k1 / (2.0 * m2);
    let bound = 1.0 + k1.abs().max(k0.abs()) / m2 + vertex.abs();
    let lo = bisect(q, vertex - bound, vertex)?;
    let hi = bisect(q, vertex, vertex + bound)?;
    Some((lo, hi))
}

/// Interior symmetric equilibria against bisection roots of `Q`.
pub fn quadratic_root_oracle(games: &[GameInstance]) -> OracleReport {
    let errors: Vec<_> = games
        .par_iter()
        .filter_map(|g| {
            let eq = symmetric_equilibrium(g).ok()?;
            if !matches!(eq.regime, Regime::InteriorEplus | Regime::InteriorEminus) {
                return None;
            }
            let roots = quadratic_roots_bisection(g);
            let target = roots.map(|(lo, hi)| if g.coefficients().a < 0.0 { hi } else { lo });
            let err = target.map_or(f64::INFINITY, |t| (t - eq.alpha_star).abs());
            Some((
                err,
                json!({"game": describe(g), "alpha_star": eq.alpha_star, "roots": roots}),
            ))
        })
        .collect();
    OracleReport::from_errors("quadratic_roots_bisection", ROOT_TOL, errors)
}

/// `|Q(alpha*)|` relative to the size of its terms.
pub fn relative_residual(gamma: f64, game: &GameInstance) -> f64 {
    let (k1, k0) = quadratic_coefficients(game);
    let m2 = (game.m() * game.m()) as f64;
    let scale = m2 * gamma * gamma + (k1 * gamma).abs() + k0.abs();
    quadratic_residual(gamma, game).abs() / scale.max(f64::MIN_POSITIVE)
}

pub fn best_response_oracle(games: &[GameInstance], rng: &mut ChaCha8Rng) -> Result<OracleReport> {
    let draws: Vec<f64> = games
        .iter()
        .map(|g| {
            // Half the draws sit at abar_minus = 0, where both branches occur
            // across the responsible interval.
            if rng.gen_bool(0.5) {
                0.0
            } else {
                rng.gen_range(0.0..g.total_capacity())
            }
        })
        .collect();
    let errors = games
        .par_iter()
        .zip(draws)
        .map(|(g, abar_minus)| {
            let closed = best_response(abar_minus, g)?;
            let grid = grid_best_response(abar_minus, g, BR_GRID_RESOLUTION)?;
            let branch = if closed == strategy_cap(abar_minus, g)? { "cap" } else { "interior" };
            let inst = json!({"game": describe(g), "abar_minus": abar_minus, "closed": closed, "grid": grid, "branch": branch});
            Ok(((closed - grid).abs(), inst))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OracleReport::from_errors(
        "best_response_grid",
        BR_GRID_TOL,
        errors,
    ))
}

/// Symmetric equilibrium against best-response iteration from `theta / (2M)`.
/// Runs that do not converge count as failures.
pub fn equilibrium_oracle(games: &[GameInstance]) -> Result<OracleReport> {
    let errors = games
        .par_iter()
        .map(|g| {
            let eq = symmetric_equilibrium(g)?;
            let init = StrategyProfile::symmetric(g.m(), g.total_capacity() / (2.0 * g.m() as f64))?;
            let it = br_iteration(g, &init, 10_000, BR_ITERATION_TOL)?;
            let err = if it.converged {
                it.profile
                    .rates()
                    .iter()
                    .fold(0.0_f64, |a, r| a.max((r - eq.alpha_star).abs()))
            } else {
                f64::INFINITY
            };
            let inst = json!({"game": describe(g), "alpha_star": eq.alpha_star, "regime": eq.regime.as_str(), "iterations": it.iterations, "converged": it.converged});
            Ok((err, inst))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OracleReport::from_errors(
        "equilibrium_br_iteration",
        EQUILIBRIUM_TOL,
        errors,
    ))
}

pub fn residual_oracle(games: &[GameInstance]) -> Result<OracleReport> {
    let errors = games
        .iter()
        .filter(|g| g.coefficients().a.abs() >= A_DEAD_BAND)
        .map(|g| {
            let eq = symmetric_equilibrium(g)?;
            Ok((eq.regime.is_interior(), g, eq))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|(interior, _, _)| *interior)
        .map(|(_, g, eq)| {
            let err = relative_residual(eq.alpha_star, g);
            (
                err,
                json!({"game": describe(g), "alpha_star": eq.alpha_star}),
            )
        });
    Ok(OracleReport::from_errors(
        "quadratic_residual",
        RESIDUAL_TOL,
        errors.collect::<Vec<_>>(),
    ))
}

pub fn concavity_oracle(
    games: &[GameInstance],
    samples_per_game: usize,
    seed: u64,
) -> OracleReport {
    let reports: Vec<OracleReport> = games
        .par_iter()
        .enumerate()
        .map(|(k, g)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
            fd_concavity_check(g, samples_per_game, &mut rng)
        })
        .collect();
    merge("concavity", CONCAVITY_TOL, reports)
}

/// Combines per-game reports; fails if any part failed.
pub fn merge(name: &str, tolerance: f64, reports: Vec<OracleReport>) -> OracleReport {
    let all_pass = reports.iter().all(|r| r.pass);
    let total: usize = reports.iter().map(|r| r.instances_checked).sum();
    let mut merged = OracleReport::from_errors(
        name,
        tolerance,
        reports
            .into_iter()
            .map(|r| (r.max_abs_error, r.worst_instance)),
    );
    merged.instances_checked = total;
    merged.pass = merged.pass && all_pass;
    merged
}

/// Interior equilibria of `games` simulated at their equilibrium profiles.
pub fn ode_oracle(games: &[GameInstance], seed: u64) -> Result<OracleReport> {
    let reports = games
        .par_iter()
        .enumerate()
        .map(|(k, g)| {
            let eq = symmetric_equilibrium(g)?;
            ode_equilibrium_consistency(g, &eq, seed.wrapping_add(k as u64))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(merge("ode_equilibrium_consistency", ODE_TOL, reports))
}

/// Greedy extraction beyond `theta` drives the resource to zero.
pub fn collapse_oracle(games: &[GameInstance], rng: &mut ChaCha8Rng) -> Result<OracleReport> {
    let setups: Vec<(f64, Vec<Vec<f64>>)> = games
        .iter()
        .map(|g| {
            let abar = g.theta() * rng.gen_range(1.1..2.0);
            let starts = (0..ODE_STARTS).map(|_| random_start(g.m(), rng)).collect();
            (abar, starts)
        })
        .collect();
    let rk = Rk4::new(DEFAULT_DT, DEFAULT_T_END);
    let errors = games
        .par_iter()
        .zip(setups)
        .map(|(g, (abar, starts))| {
            let rates = vec![abar / g.m() as f64; g.m()];
            let finals = simulate_profile(g, &rates, &starts, &rk)?;
            let n_max = finals
                .iter()
                .fold(0.0_f64, |a, f| a.max(f.state[g.m() + 1]));
            Ok((n_max, json!({"game": describe(g), "abar": abar})))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OracleReport::from_errors("ode_collapse", ODE_TOL, errors))
}

/// Difference-based and coefficient-based `Y` on random policies.
pub fn y_identity_oracle(count: usize, gen: &mut InstanceGenerator) -> OracleReport {
    let errors = (0..count).map(|_| {
        let p = gen.policy();
        let co = p.coefficients();
        let err = (co.y - co.y_from_coefficients()).abs();
        (err, serde_json::to_value(p).unwrap_or(Value::Null))
    });
    OracleReport::from_errors("y_identity", Y_TOL, errors.collect::<Vec<_>>())
}

/// Batch sizes for [`run_all`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteSizes {
    pub best_response: usize,
    pub equilibrium: usize,
    pub concavity_games: usize,
    pub concavity_samples: usize,
    pub ode_sustained: usize,
    pub ode_collapse: usize,
    pub y_policies: usize,
}

impl Default for SuiteSizes {
    fn default() -> Self {
        SuiteSizes {
            best_response: 200,
            equilibrium: 100,
            concavity_games: 100,
            concavity_samples: 10,
            ode_sustained: 20,
            ode_collapse: 5,
            y_policies: 10_000,
        }
    }
}

/// Draws `count` games with `M` in `ms` whose symmetric equilibrium is interior.
pub fn interior_games(
    gen: &mut InstanceGenerator,
    count: usize,
    ms: std::ops::RangeInclusive<usize>,
) -> Vec<GameInstance> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let g = gen.game_in(ms.clone());
        if symmetric_equilibrium(&g).is_ok_and(|e| e.regime.is_interior() && e.r_star > 0.0) {
            out.push(g);
        }
    }
    out
}

/// Runs every oracle on instances drawn from `seed`.
pub fn run_all(seed: u64, sizes: SuiteSizes) -> Result<Vec<OracleReport>> {
    let mut gen = InstanceGenerator::new(seed);
    let br_games: Vec<_> = (0..sizes.best_response).map(|_| gen.game(1)).collect();
    let eq_games: Vec<_> = (0..sizes.equilibrium).map(|_| gen.game_in(1..=8)).collect();
    let cc_games: Vec<_> = (0..sizes.concavity_games)
        .map(|_| gen.game_in(1..=8))
        .collect();
    let ode_games = interior_games(&mut gen, sizes.ode_sustained, 1..=4);
    let collapse_games: Vec<_> = (0..sizes.ode_collapse)
        .map(|_| gen.game_in(1..=4))
        .collect();
    let mut reports = vec![
        best_response_oracle(&br_games, gen.rng())?,
        equilibrium_oracle(&eq_games)?,
        residual_oracle(&eq_games)?,
        quadratic_root_oracle(&eq_games),
        threshold_oracle(&eq_games, gen.rng()),
        concavity_oracle(&cc_games, sizes.concavity_samples, seed),
    ];
    reports.push(ode_oracle(&ode_games, seed)?);
    reports.push(collapse_oracle(&collapse_games, gen.rng())?);
    reports.push(y_identity_oracle(sizes.y_policies, &mut gen));
    Ok(reports)
}
