//! Ground states by energy minimization on the Nehari manifold.
//!
//! Every nonnegative `u ≠ 0` meets the manifold `{I′(v)·v = 0}` exactly once along
//! its ray, at `t_u·u` where `t ↦ I(tu)` peaks. The solver takes preconditioned
//! gradient steps of Barzilai–Borwein length, clips to the positive cone, projects back onto the manifold
//! and accepts a step only if the projected energy does not increase.

use std::thread;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::DecayFit;
use crate::energy::{EnergyBreakdown, EnergyError, Functional, GradientField};
use crate::model::ModelSpec;
use crate::rootfind::{brent, RootError};
use crate::spectral::{pairwise_sum, Field, Grid};

/// Doublings or halvings of `t` allowed while bracketing the ray maximum.
const BRACKET_STEPS: usize = 200;
/// Relative size of energy differences treated as rounding noise in the descent test.
pub const DESCENT_ROUNDOFF: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error("u₊ vanishes identically; no Nehari point on its ray")]
    NonPositive,
    #[error("no Nehari point: d/dt I(tu) stays positive up to t = {t:e} (Ψ(u) = 0?)")]
    NoNehariPoint { t: f64 },
    #[error("no descent after {halvings} step halvings at iteration {iteration}")]
    LineSearch { iteration: usize, halvings: usize },
    #[error("not converged after {iterations} iterations ({reason:?}, relative residual {residual:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        reason: StopReason,
        history: Vec<HistoryEntry>,
    },
}

/// A point `t_u·u` on the Nehari manifold.
#[derive(Clone, Debug)]
pub struct NehariPoint {
    /// The projected point `t_u·u`.
    pub point: Field,
    pub t_u: f64,
    /// `t_u` lies in `[lo, hi]` with `Φ′(lo) > 0 > Φ′(hi)`, `Φ(t) = I(tu)`.
    pub bracket: (f64, f64),
    pub energy: EnergyBreakdown,
    pub gradient: GradientField,
    /// `‖∇I(t_u u)‖₂`
    pub residual: f64,
    /// `I′(v)·v` at `v = t_u u`; zero on the manifold.
    pub nehari_defect: f64,
}

fn ray_derivative(fun: &Functional, u: &Field, q: f64, t: f64) -> Result<f64, SolverError> {
    Ok(fun.ray_derivative(u, q, t)?)
}

/// Projects `u` onto the Nehari manifold along its ray.
pub fn nehari_project(fun: &Functional, u: &Field) -> Result<NehariPoint, SolverError> {
    if !(u.max() > 0.0) {
        return Err(SolverError::NonPositive);
    }
    let q = fun.quad(u)?;
    let phi = |t: f64| ray_derivative(fun, u, q, t);
    let d1 = phi(1.0)?;
    let (lo, hi, dlo, dhi) = if d1 > 0.0 {
        let (mut lo, mut dlo) = (1.0, d1);
        let mut found = None;
        for _ in 0..BRACKET_STEPS {
            let hi = 2.0 * lo;
            let dhi = phi(hi)?;
            if dhi <= 0.0 {
                found = Some((lo, hi, dlo, dhi));
                break;
            }
            lo = hi;
            dlo = dhi;
        }
        found.ok_or(SolverError::NoNehariPoint { t: lo })?
    } else if d1 < 0.0 {
        let (mut hi, mut dhi) = (1.0, d1);
        let mut found = None;
        for _ in 0..BRACKET_STEPS {
            let lo = 0.5 * hi;
            let dlo = phi(lo)?;
            if dlo >= 0.0 {
                found = Some((lo, hi, dlo, dhi));
                break;
            }
            hi = lo;
            dhi = dlo;
        }
        found.ok_or(SolverError::NoNehariPoint { t: hi })?
    } else {
        (1.0, 1.0, 0.0, 0.0)
    };
    let t_u = if lo == hi {
        lo
    } else {
        match brent(phi, lo, hi, dlo, dhi, 1e-15 * hi, 200) {
            Ok(t) => t,
            Err(RootError::Eval(e)) => return Err(e),
            Err(RootError::NotBracketed) => unreachable!("bracket verified"),
        }
    };
    let point = u.scaled(t_u);
    let (energy, gradient) = fun.energy_and_gradient(&point)?;
    let residual = gradient.l2_norm();
    let nehari_defect = gradient.inner(&point);
    Ok(NehariPoint {
        point,
        t_u,
        bracket: (lo, hi),
        energy,
        gradient,
        residual,
        nehari_defect,
    })
}

/// Sign changes of `t ↦ d/dt I(tu)` over `count` geometric points on `[lo, hi]`.
pub fn ray_sign_changes(fun: &Functional, u: &Field, lo: f64, hi: f64, count: usize) -> Result<usize, SolverError> {
    let q = fun.quad(u)?;
    let ratio = (hi / lo).powf(1.0 / (count.max(2) - 1) as f64);
    let mut changes = 0;
    let mut prev: Option<f64> = None;
    for j in 0..count {
        let t = lo * ratio.powi(j as i32);
        let d = ray_derivative(fun, u, q, t)?;
        if d == 0.0 {
            continue;
        }
        if let Some(p) = prev {
            if p.signum() != d.signum() {
                changes += 1;
            }
        }
        prev = Some(d);
    }
    Ok(changes)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    /// Stop once `‖∇I(u)‖₂ / ‖u‖₂` falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Give up once the residual has not dropped by 10% over this many iterations.
    pub stall_window: usize,
    /// Number of independent starts; the first is always the centered Gaussian.
    pub starts: usize,
    pub tau: TauPolicy,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-8,
            max_iter: 5000,
            stall_window: 200,
            starts: 3,
            tau: TauPolicy::default(),
        }
    }
}

/// Step size control on the preconditioned gradient `d = (√(−Δ+m²) + V∞)⁻¹ ∇I`.
///
/// After an accepted step `s` with gradient change `y` the next trial step is the
/// Barzilai–Borwein length `⟨s, Ps⟩ / ⟨s, y⟩` in the preconditioner metric,
/// clamped to `[min, max]`; when `⟨s, y⟩ ≤ 0` the previous step grows by `growth`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TauPolicy {
    pub initial: f64,
    pub min: f64,
    pub max: f64,
    pub growth: f64,
    pub max_halvings: usize,
}

impl Default for TauPolicy {
    fn default() -> Self {
        TauPolicy {
            initial: 1.0,
            min: 1e-3,
            max: 1e3,
            growth: 2.0,
            max_halvings: 30,
        }
    }
}

#[derive(Clone, Debug)]
pub enum InitStrategy {
    /// `exp(−|y|²)`
    CenteredGaussian,
    /// Gaussian with seeded width, amplitude and a small offset from the origin.
    Seeded(u64),
    /// A given nonnegative field.
    Warm(Field),
    /// `starts` runs: the centered Gaussian, then `Seeded(seed + 1)`, `Seeded(seed + 2)`, …
    MultiStart { starts: usize, seed: u64 },
}

pub fn initial_field(grid: Grid, strategy: &InitStrategy) -> Field {
    let origin = vec![0.0; grid.dim()];
    match strategy {
        InitStrategy::CenteredGaussian => Field::gaussian(grid, &origin, 1.0),
        InitStrategy::Seeded(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let width = rng.gen_range(0.7..1.4);
            let amplitude = rng.gen_range(0.5..2.0);
            let center: Vec<f64> = (0..grid.dim()).map(|_| rng.gen_range(-0.5..0.5)).collect();
            Field::gaussian(grid, &center, width).scaled(amplitude)
        }
        InitStrategy::Warm(f) => f.clone(),
        InitStrategy::MultiStart { .. } => Field::gaussian(grid, &origin, 1.0),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub iteration: usize,
    /// `‖∇I‖₂ / ‖u‖₂`
    pub residual: f64,
    pub energy: f64,
    pub tau: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    /// No 10% residual reduction within `stall_window` iterations.
    Stalled,
    MaxIterations,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StartSummary {
    pub start: usize,
    pub level: f64,
    pub iterations: usize,
    pub residual: f64,
    pub stop: StopReason,
}

#[derive(Clone, Debug, Serialize)]
pub struct GroundStateReport {
    #[serde(skip)]
    pub solution: Field,
    pub level_c: f64,
    /// Filled in by the limit comparison.
    pub level_c_infinity: Option<f64>,
    pub energy: EnergyBreakdown,
    pub converged: bool,
    pub stop: StopReason,
    pub iterations: usize,
    /// Final `‖∇I‖₂ / ‖u‖₂`.
    pub residual: f64,
    /// Same ratio with the components at nodes where `u = 0` and `∇I ≥ 0` dropped:
    /// the stationarity measure on the positive cone.
    pub cone_residual: f64,
    /// `‖∇I‖₂` at the solution.
    pub residual_abs: f64,
    pub residual_history: Vec<HistoryEntry>,
    /// Smallest `‖t_u u‖` over all accepted projections.
    pub beta: f64,
    pub boundary_max_ratio: f64,
    pub min_over_max: f64,
    pub starts: Vec<StartSummary>,
    /// Relative spread `(max − min)/|min|` of the levels over starts.
    pub start_spread: f64,
    pub decay_fit: Option<DecayFit>,
    /// The level computed is the constrained infimum over the manifold; its
    /// equality with the mountain-pass level is taken over from the continuum.
    pub level_note: String,
}

impl GroundStateReport {
    pub fn require_converged(self) -> Result<Self, SolverError> {
        if self.converged {
            return Ok(self);
        }
        Err(SolverError::NotConverged {
            iterations: self.iterations,
            residual: self.residual,
            reason: self.stop,
            history: self.residual_history,
        })
    }
}

#[derive(Clone, Debug)]
struct Run {
    point: NehariPoint,
    iterations: usize,
    history: Vec<HistoryEntry>,
    beta: f64,
    stop: StopReason,
}

/// `‖∇I‖₂/‖u‖₂` without the components blocked by the constraint `u ≥ 0`.
pub fn cone_residual(u: &Field, gradient: &Field) -> f64 {
    let kept: Vec<f64> = u
        .values()
        .iter()
        .zip(gradient.values())
        .map(|(&x, &g)| if x <= 0.0 && g >= 0.0 { 0.0 } else { g * g })
        .collect();
    (pairwise_sum(&kept) / pairwise_sum(&u.values().iter().map(|x| x * x).collect::<Vec<_>>())).sqrt()
}

fn preconditioner(fun: &Functional) -> Vec<f64> {
    let v_inf = fun.spec().potential.v_infinity().max(0.0);
    fun.symbol().iter().map(|s| s + v_inf).collect()
}

fn apply(fun: &Functional, g: &Field, multiplier: &[f64]) -> Result<Field, SolverError> {
    Ok(fun
        .transform()
        .apply_multiplier(g, multiplier)
        .map_err(EnergyError::from)?)
}

fn descent_run(fun: &Functional, init: &Field, opts: &SolverOptions) -> Result<Run, SolverError> {
    let metric = preconditioner(fun);
    let inverse: Vec<f64> = metric.iter().map(|p| 1.0 / p).collect();
    let policy = &opts.tau;
    let mut point = nehari_project(fun, &init.positive_part())?;
    let mut beta = fun.norm_sq(&point.point)?.sqrt();
    let mut history = Vec::new();
    let mut tau = policy.initial;
    let mut mark = (f64::INFINITY, 0);
    let mut stop = StopReason::MaxIterations;
    let mut iterations = opts.max_iter;
    for iteration in 0..=opts.max_iter {
        let rel = point.residual / point.point.l2_norm();
        history.push(HistoryEntry {
            iteration,
            residual: rel,
            energy: point.energy.total,
            tau,
        });
        if rel < opts.tol {
            stop = StopReason::Converged;
            iterations = iteration;
            break;
        }
        if rel < 0.9 * mark.0 {
            mark = (rel, iteration);
        } else if iteration - mark.1 >= opts.stall_window {
            stop = StopReason::Stalled;
            iterations = iteration;
            break;
        }
        if iteration == opts.max_iter {
            break;
        }
        let d = apply(fun, &point.gradient, &inverse)?;
        let scale = point.energy.quad.abs() + point.energy.hartree.abs();
        let mut accepted = None;
        for _ in 0..=policy.max_halvings {
            let cand = point.point.axpy(-tau, &d).positive_part();
            if cand.max() > 0.0 {
                let next = nehari_project(fun, &cand)?;
                if next.energy.total <= point.energy.total + DESCENT_ROUNDOFF * scale {
                    accepted = Some(next);
                    break;
                }
            }
            tau *= 0.5;
        }
        let Some(next) = accepted else {
            return Err(SolverError::LineSearch {
                iteration,
                halvings: policy.max_halvings,
            });
        };
        let step = next.point.axpy(-1.0, &point.point);
        let curvature = step.inner(&next.gradient.axpy(-1.0, &point.gradient));
        tau = if curvature > 0.0 {
            (step.inner(&apply(fun, &step, &metric)?) / curvature).clamp(policy.min, policy.max)
        } else {
            (tau * policy.growth).min(policy.max)
        };
        point = next;
        beta = beta.min(fun.norm_sq(&point.point)?.sqrt());
    }
    Ok(Run {
        point,
        iterations,
        history,
        beta,
        stop,
    })
}

fn report_from(run: Run, starts: Vec<StartSummary>) -> GroundStateReport {
    let solution = run.point.point;
    let levels: Vec<f64> = starts.iter().map(|s| s.level).collect();
    let lo = levels.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = levels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let residual = run.history.last().map_or(f64::NAN, |h| h.residual);
    GroundStateReport {
        level_c: run.point.energy.total,
        level_c_infinity: None,
        energy: run.point.energy,
        converged: run.stop == StopReason::Converged,
        stop: run.stop,
        iterations: run.iterations,
        residual,
        cone_residual: cone_residual(&solution, &run.point.gradient),
        residual_abs: run.point.residual,
        residual_history: run.history,
        beta: run.beta,
        boundary_max_ratio: solution.boundary_max_ratio(),
        min_over_max: solution.min() / solution.max(),
        starts,
        start_spread: if levels.len() > 1 { (hi - lo) / lo.abs() } else { 0.0 },
        decay_fit: None,
        level_note: "ground-state level computed as the Nehari-constrained infimum; \
                     equality with the mountain-pass level is assumed"
            .into(),
        solution,
    }
}

/// Runs every start on its own thread; the lowest level wins, ties to the lowest index.
/// A start that stops short of `opts.tol` still yields a report, with `converged` unset.
pub fn solve_with(fun: &Functional, inits: &[Field], opts: &SolverOptions) -> Result<GroundStateReport, SolverError> {
    let results: Vec<Result<Run, SolverError>> = thread::scope(|scope| {
        let handles: Vec<_> = inits
            .iter()
            .map(|init| scope.spawn(move || descent_run(fun, init, opts)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("solver thread panicked"))
            .collect()
    });
    let mut runs = Vec::with_capacity(results.len());
    for r in results {
        runs.push(r?);
    }
    let starts: Vec<StartSummary> = runs
        .iter()
        .enumerate()
        .map(|(i, r)| StartSummary {
            start: i,
            level: r.point.energy.total,
            iterations: r.iterations,
            residual: r.history.last().map_or(f64::NAN, |h| h.residual),
            stop: r.stop,
        })
        .collect();
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.point.energy.total < runs[best].point.energy.total {
            best = i;
        }
    }
    let run = runs.swap_remove(best);
    Ok(report_from(run, starts))
}

pub fn init_fields(grid: Grid, init: &InitStrategy) -> Vec<Field> {
    match init {
        InitStrategy::MultiStart { starts, seed } => (0..(*starts).max(1))
            .map(|i| {
                if i == 0 {
                    initial_field(grid, &InitStrategy::CenteredGaussian)
                } else {
                    initial_field(grid, &InitStrategy::Seeded(seed.wrapping_add(i as u64)))
                }
            })
            .collect(),
        other => vec![initial_field(grid, other)],
    }
}

pub fn solve_ground_state(
    spec: &ModelSpec,
    grid: Grid,
    init: &InitStrategy,
    opts: &SolverOptions,
) -> Result<GroundStateReport, SolverError> {
    let fun = Functional::new(spec, grid)?;
    solve_with(&fun, &init_fields(grid, init), opts)
}

/// Same scheme with `V ≡ V∞`; the solution is translated so its peak sits at the origin.
pub fn solve_limit_problem(
    spec: &ModelSpec,
    grid: Grid,
    init: &InitStrategy,
    opts: &SolverOptions,
) -> Result<GroundStateReport, SolverError> {
    let fun = Functional::new(&spec.limit_problem(), grid)?;
    solve_limit_with(&fun, &init_fields(grid, init), opts)
}

/// [`solve_with`] on a functional with constant potential, recentred on the peak.
pub fn solve_limit_with(
    fun: &Functional,
    inits: &[Field],
    opts: &SolverOptions,
) -> Result<GroundStateReport, SolverError> {
    let mut report = solve_with(fun, inits, opts)?;
    report.solution = report.solution.centered_on_peak();
    report.boundary_max_ratio = report.solution.boundary_max_ratio();
    Ok(report)
}

/// Relative mismatch between `½∫(W∗F(u))(f(u)u − F(u))` and the level `I(u)`.
pub fn ar_level_identity(fun: &Functional, solution: &Field, level: f64) -> Result<f64, SolverError> {
    let a = fun.ar_level(solution)?;
    if level == 0.0 {
        return Ok(a.abs());
    }
    Ok((a - level).abs() / level.abs())
}

/// Whether the strict comparison with the limit problem is meaningful: the potential
/// must sit strictly below `V∞` somewhere on the grid.
pub fn comparison_applicable(spec: &ModelSpec, grid: &Grid) -> bool {
    if spec.potential.is_constant() {
        return false;
    }
    let v_inf = spec.potential.v_infinity();
    (0..grid.len()).any(|i| spec.potential.eval(grid.radius(i)) < v_inf)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitComparison {
    pub applicable: bool,
    pub c: Option<f64>,
    pub c_infinity: Option<f64>,
    /// `c∞ − c`
    pub margin: Option<f64>,
    pub pass: bool,
}

/// Solves the problem and its limit `V ≡ V∞` from the same starts. The comparison
/// passes when both runs converge and `0 < c < c∞`.
pub fn compare_with_limit(
    spec: &ModelSpec,
    grid: Grid,
    inits: &[Field],
    opts: &SolverOptions,
) -> Result<(LimitComparison, GroundStateReport, GroundStateReport), SolverError> {
    let applicable = comparison_applicable(spec, &grid);
    let mut ground = solve_with(&Functional::new(spec, grid)?, inits, opts)?;
    let limit = solve_limit_with(&Functional::new(&spec.limit_problem(), grid)?, inits, opts)?;
    ground.level_c_infinity = Some(limit.level_c);
    let margin = limit.level_c - ground.level_c;
    let cmp = LimitComparison {
        applicable,
        c: Some(ground.level_c),
        c_infinity: Some(limit.level_c),
        margin: Some(margin),
        pass: applicable && ground.converged && limit.converged && ground.level_c > 0.0 && margin > 0.0,
    };
    Ok((cmp, ground, limit))
}

/// Mountain-pass geometry probed numerically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryWitness {
    pub rho: f64,
    /// Minimum of `I` over the sampled sphere `‖u‖ = ρ`.
    pub delta: f64,
    pub directions: usize,
    pub tau: Option<f64>,
    pub energy_at_tau: Option<f64>,
    pub norm_at_tau: Option<f64>,
    pub pass: bool,
}

fn sphere_direction(grid: Grid, rng: &mut ChaCha8Rng) -> Field {
    let bumps = rng.gen_range(1..4);
    let mut acc = Field::zeros(grid);
    for _ in 0..bumps {
        let center: Vec<f64> = (0..grid.dim())
            .map(|_| rng.gen_range(-0.25..0.25) * grid.box_length())
            .collect();
        let width = rng.gen_range(0.3..3.0);
        let amplitude = if rng.gen_bool(0.8) {
            rng.gen_range(0.2..1.0)
        } else {
            -rng.gen_range(0.2..1.0)
        };
        acc = acc.axpy(amplitude, &Field::gaussian(grid, &center, width));
    }
    acc
}

/// Samples `I` on spheres `‖u‖ = ρ` (halving `ρ` until the sampled minimum is
/// positive) and doubles `τ` until `I(τ u₀) < 0` with `‖τu₀‖ > ρ`.
pub fn mountain_pass_geometry_check(
    fun: &Functional,
    u0: &Field,
    directions: usize,
    seed: u64,
) -> Result<GeometryWitness, SolverError> {
    if !(u0.max() > 0.0) {
        return Err(SolverError::NonPositive);
    }
    let grid = *fun.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dirs = vec![u0.clone()];
    while dirs.len() < directions.max(1) {
        dirs.push(sphere_direction(grid, &mut rng));
    }
    let unit: Vec<Field> = dirs
        .iter()
        .map(|d| {
            let n = fun.norm_sq(d)?.sqrt();
            Ok(d.scaled(1.0 / n))
        })
        .collect::<Result<_, SolverError>>()?;
    let mut rho = 1.0;
    let mut delta = f64::NEG_INFINITY;
    for _ in 0..60 {
        let mut min = f64::INFINITY;
        for d in &unit {
            min = min.min(fun.energy(&d.scaled(rho))?.total);
        }
        delta = min;
        if min > 0.0 {
            break;
        }
        rho *= 0.5;
    }
    let n0 = fun.norm_sq(u0)?.sqrt();
    let mut tau = 1.0;
    let mut found = None;
    for _ in 0..BRACKET_STEPS {
        let e = fun.energy(&u0.scaled(tau))?.total;
        if e < 0.0 && tau * n0 > rho {
            found = Some((tau, e));
            break;
        }
        tau *= 2.0;
    }
    Ok(GeometryWitness {
        rho,
        delta,
        directions: unit.len(),
        tau: found.map(|f| f.0),
        energy_at_tau: found.map(|f| f.1),
        norm_at_tau: found.map(|f| f.0 * n0),
        pass: delta > 0.0 && found.is_some(),
    })
}

/// Relative spread of a set of levels.
pub fn relative_spread(levels: &[f64]) -> f64 {
    let lo = levels.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = levels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = pairwise_sum(levels) / levels.len() as f64;
    (hi - lo) / mean.abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::KernelSpec;

    fn small() -> (Functional, Grid) {
        let g = Grid::new(2, 32, 16.0).unwrap();
        (Functional::new(&ModelSpec::desk_default(), g).unwrap(), g)
    }

    fn bump(grid: Grid, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        Field::gaussian(grid, &c, rng.gen_range(0.6..2.0)).scaled(rng.gen_range(0.1..5.0))
    }

    #[test]
    fn matches_closed_form_projection() {
        let (fun, g) = small();
        for seed in 0..20 {
            let u = bump(g, seed);
            let q = fun.quad(&u).unwrap();
            let psi = fun.hartree(&u).unwrap();
            let closed = (q / (3.0 * psi)).powf(0.25);
            let p = nehari_project(&fun, &u).unwrap();
            assert!((p.t_u - closed).abs() < 1e-10 * closed, "seed {seed}");
            assert!(p.bracket.0 <= p.t_u && p.t_u <= p.bracket.1);
            assert!(p.nehari_defect.abs() < 1e-10 * p.energy.total.abs());
            // I(t_u u) = (2/3) q t_u² for p = 3
            let expected = 2.0 / 3.0 * q * closed * closed;
            assert!((p.energy.total - expected).abs() < 1e-10 * expected);
            assert_eq!(ray_sign_changes(&fun, &u, p.t_u / 4.0, 4.0 * p.t_u, 64).unwrap(), 1);
        }
    }

    #[test]
    fn projection_of_a_scaled_ray() {
        let (fun, g) = small();
        let u = bump(g, 4);
        let base = nehari_project(&fun, &u).unwrap().t_u;
        for a in [0.1, 3.0, 40.0] {
            let t = nehari_project(&fun, &u.scaled(a)).unwrap().t_u;
            assert!((t * a - base).abs() < 1e-12 * base);
        }
    }

    #[test]
    fn unit_ratio_gives_unit_t() {
        let (fun, g) = small();
        let p = nehari_project(&fun, &bump(g, 9)).unwrap();
        let again = nehari_project(&fun, &p.point).unwrap();
        assert!((again.t_u - 1.0).abs() < 1e-13);
    }

    #[test]
    fn rejects_nonpositive_and_linear() {
        let (fun, g) = small();
        let neg = bump(g, 1).scaled(-1.0);
        assert!(matches!(nehari_project(&fun, &neg), Err(SolverError::NonPositive)));
        let spec = ModelSpec {
            kernel: KernelSpec::zero(),
            ..ModelSpec::desk_default()
        };
        let lin = Functional::new(&spec, g).unwrap();
        assert!(matches!(
            nehari_project(&lin, &bump(g, 1)),
            Err(SolverError::NoNehariPoint { .. })
        ));
        let geo = mountain_pass_geometry_check(&lin, &bump(g, 2), 10, 0).unwrap();
        assert!(geo.tau.is_none());
        assert!(!geo.pass);
    }

    #[test]
    fn geometry_on_default() {
        let (fun, g) = small();
        let geo = mountain_pass_geometry_check(&fun, &Field::gaussian(g, &[0.0, 0.0], 1.0), 50, 3).unwrap();
        assert!(geo.pass, "{geo:?}");
        assert!(geo.delta > 0.0);
        assert!(geo.energy_at_tau.unwrap() < 0.0);
    }

    #[test]
    fn small_grid_solve_descends_and_satisfies_identities() {
        let g = Grid::new(2, 64, 20.0).unwrap();
        let spec = ModelSpec::desk_default();
        let opts = SolverOptions::default();
        let r = solve_ground_state(&spec, g, &InitStrategy::CenteredGaussian, &opts).unwrap();
        assert!(r.converged);
        assert_eq!(r.stop, StopReason::Converged);
        assert!(r.residual < 1e-8);
        assert!(r.level_c > 0.0);
        for w in r.residual_history.windows(2) {
            let scale = w[0].energy.abs();
            assert!(w[1].energy <= w[0].energy + 1e-12 * scale);
        }
        assert!(r.solution.min() >= 0.0);
        assert!(r.beta > 0.0);
        let fun = Functional::new(&spec, g).unwrap();
        assert!(ar_level_identity(&fun, &r.solution, r.level_c).unwrap() < 1e-6);
        assert!(ar_level_identity(&fun, &Field::zeros(g), 0.0).unwrap() == 0.0);
    }

    #[test]
    fn clipped_far_field_stalls_and_is_reported() {
        // h = 0.5 leaves aliasing ripples larger than the tail, so u₊ cannot be critical
        let g = Grid::new(2, 32, 16.0).unwrap();
        let opts = SolverOptions {
            stall_window: 40,
            ..SolverOptions::default()
        };
        let r = solve_ground_state(&ModelSpec::desk_default(), g, &InitStrategy::CenteredGaussian, &opts).unwrap();
        assert_eq!(r.stop, StopReason::Stalled);
        assert!(!r.converged);
        assert!(r.residual > opts.tol);
        assert!(r.solution.min() >= 0.0);
        let history = r.residual_history.len();
        match r.require_converged() {
            Err(SolverError::NotConverged { reason, history: h, .. }) => {
                assert_eq!(reason, StopReason::Stalled);
                assert_eq!(h.len(), history);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn iteration_cap_is_reported() {
        let g = Grid::new(2, 32, 16.0).unwrap();
        let opts = SolverOptions {
            max_iter: 3,
            ..SolverOptions::default()
        };
        let r = solve_ground_state(&ModelSpec::desk_default(), g, &InitStrategy::CenteredGaussian, &opts).unwrap();
        assert_eq!(r.stop, StopReason::MaxIterations);
        assert_eq!(r.iterations, 3);
        assert_eq!(r.residual_history.len(), 4);
    }

    #[test]
    fn cone_residual_drops_blocked_components() {
        let g = Grid::new(1, 8, 8.0).unwrap();
        let u = Field::from_values(g, vec![1.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let grad = Field::from_values(g, vec![0.0, 3.0, -4.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((cone_residual(&u, &grad) - 4.0 / 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn applicability_gate() {
        let g = Grid::new(2, 32, 16.0).unwrap();
        let spec = ModelSpec::desk_default();
        assert!(comparison_applicable(&spec, &g));
        assert!(!comparison_applicable(&spec.limit_problem(), &g));
    }

    #[test]
    fn options_round_trip_and_reject_unknown() {
        let o = SolverOptions::default();
        let text = serde_json::to_string(&o).unwrap();
        assert_eq!(serde_json::from_str::<SolverOptions>(&text).unwrap(), o);
        assert!(serde_json::from_str::<SolverOptions>(r#"{"tol": 1e-8, "bogus": 1}"#).is_err());
        let partial: SolverOptions = serde_json::from_str(r#"{"max_iter": 7}"#).unwrap();
        assert_eq!(partial.max_iter, 7);
        assert_eq!(partial.tol, 1e-8);
    }
}
