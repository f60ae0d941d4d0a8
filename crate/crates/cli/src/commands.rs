use std::f64::consts::PI;
use std::path::Path;

use relhartree::analysis::{
    fit_decay, positivity_check, run_property_suites, smoothness_descriptor, verify_decay_theorem, AnalysisError,
    DecayFit, DecayTheoremWitness, PositivityReport, SpectralDecayProfile, SuiteReport,
};
use relhartree::energy::{trace_inequality_check, Functional, TraceReport};
use relhartree::extension::{
    default_levels, energy_identity, extend, neumann_check, pde_residual, EnergyIdentity, ExtensionError, NeumannReport,
};
use relhartree::model::{validate_hypotheses, SamplingPlan, ValidationReport};
use relhartree::nehari::{
    ar_level_identity, compare_with_limit, comparison_applicable, init_fields, mountain_pass_geometry_check,
    solve_with, GeometryWitness, GroundStateReport, InitStrategy, LimitComparison,
};
use relhartree::spectral::snapshot::{read_field, SnapshotError};
use relhartree::{Field, Grid, InequalityWitness};
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::Output;
use crate::CliError;

/// Tolerance shared by the ground-state post-checks.
pub const POST_CHECK_TOL: f64 = 1e-6;
/// Sphere directions sampled by the geometry check.
const GEOMETRY_DIRECTIONS: usize = 50;
/// Minimum factor by which the PDE residual must drop when the depth step halves.
const PDE_ORDER_RATIO: f64 = 3.6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    SolverFailure,
    CheckFailure,
    NotApplicable,
}

impl Outcome {
    pub fn code(self) -> u8 {
        match self {
            Outcome::Pass => 0,
            Outcome::SolverFailure => 1,
            Outcome::CheckFailure => 2,
            Outcome::NotApplicable => 3,
        }
    }

    fn from_checks(pass: bool) -> Self {
        if pass {
            Outcome::Pass
        } else {
            Outcome::CheckFailure
        }
    }
}

/// A snapshot named by the config: missing files are usage errors, bad bytes format errors.
pub fn load_snapshot(path: &Path, grid: Option<Grid>) -> Result<Field, CliError> {
    let field = read_field(path).map_err(|e| match e {
        SnapshotError::Io { .. } => CliError::Config(e.to_string()),
        other => CliError::Format(format!("{}: {other}", path.display())),
    })?;
    if let Some(g) = grid {
        if *field.grid() != g {
            return Err(CliError::Format(format!(
                "{}: snapshot grid {:?} differs from the configured grid {:?}",
                path.display(),
                field.grid(),
                g
            )));
        }
    }
    Ok(field)
}

fn starts(cfg: &RunConfig) -> Result<Vec<Field>, CliError> {
    match &cfg.warm_start {
        Some(path) => Ok(vec![load_snapshot(path, Some(cfg.grid))?]),
        None => Ok(init_fields(
            cfg.grid,
            &InitStrategy::MultiStart {
                starts: cfg.solver.starts,
                seed: cfg.seed,
            },
        )),
    }
}

fn functional(spec: &relhartree::ModelSpec, grid: Grid) -> Result<Functional, CliError> {
    Functional::new(spec, grid).map_err(|e| CliError::Solver(e.into()))
}

#[derive(Debug, Serialize)]
pub struct SolveChecks {
    pub level_positive: bool,
    pub positivity: PositivityReport,
    pub boundary: InequalityWitness,
    pub ar_identity: InequalityWitness,
    pub start_agreement: InequalityWitness,
    pub decay: Option<DecayTheoremWitness>,
    pub decay_error: Option<String>,
    pub geometry: GeometryWitness,
    pub hypotheses: ValidationReport,
    pub smoothness: SpectralDecayProfile,
    pub all_pass: bool,
}

#[derive(Serialize)]
struct SolveResult<'a> {
    ground_state: &'a GroundStateReport,
    checks: &'a SolveChecks,
}

fn solve_checks(
    fun: &Functional,
    cfg: &RunConfig,
    report: &GroundStateReport,
    u0: &Field,
) -> Result<(SolveChecks, Option<DecayFit>), CliError> {
    let u = &report.solution;
    let positivity = positivity_check(u, cfg.decay.window);
    let boundary = InequalityWitness::new(report.boundary_max_ratio, POST_CHECK_TOL, "boundary max ratio");
    let mismatch = ar_level_identity(fun, u, report.level_c)?;
    let ar_identity = InequalityWitness::new(mismatch, POST_CHECK_TOL, "level identity mismatch");
    let start_agreement = InequalityWitness::new(report.start_spread, POST_CHECK_TOL, "spread of levels over starts");
    let (fit, decay, decay_error) = match fit_decay(u, cfg.decay.window) {
        Ok(fit) => {
            let w = verify_decay_theorem(&fit, &cfg.model).map_err(analysis)?;
            (Some(fit), Some(w), None)
        }
        Err(e) => (None, None, Some(e.to_string())),
    };
    let geometry = mountain_pass_geometry_check(fun, u0, GEOMETRY_DIRECTIONS, cfg.seed)?;
    let hypotheses = validate_hypotheses(&cfg.model, &SamplingPlan::default())
        .map_err(|e| CliError::Config(format!("model: {e}")))?;
    let level_positive = report.level_c > 0.0;
    let all_pass = level_positive
        && positivity.witness.pass
        && boundary.pass
        && ar_identity.pass
        && start_agreement.pass
        && decay.as_ref().is_some_and(|w| w.pass)
        && geometry.pass
        && (hypotheses.all_hold() || cfg.model.outside_hypotheses);
    Ok((
        SolveChecks {
            level_positive,
            positivity,
            boundary,
            ar_identity,
            start_agreement,
            decay,
            decay_error,
            geometry,
            hypotheses,
            smoothness: smoothness_descriptor(u),
            all_pass,
        },
        fit,
    ))
}

fn analysis(e: AnalysisError) -> CliError {
    CliError::Module {
        module: "analysis",
        message: e.to_string(),
    }
}

fn extension(e: ExtensionError) -> CliError {
    match e {
        ExtensionError::Levels(m) => CliError::Config(format!("extension.depths: {m}")),
        other => CliError::Module {
            module: "extension",
            message: other.to_string(),
        },
    }
}

fn history_rows(report: &GroundStateReport) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
    report
        .residual_history
        .iter()
        .map(|h| (h.iteration, h.residual, h.energy))
}

fn profile_rows(fit: &DecayFit) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
    fit.radii
        .iter()
        .zip(&fit.profile)
        .map(|(&r, &p)| (r, p, fit.envelope(r)))
}

pub fn solve(cfg: &RunConfig, out: &Output) -> Result<Outcome, CliError> {
    let inits = starts(cfg)?;
    let fun = functional(&cfg.model, cfg.grid)?;
    let mut report = solve_with(&fun, &inits, &cfg.solver)?;
    let (checks, fit) = solve_checks(&fun, cfg, &report, &inits[0])?;
    report.decay_fit = fit.clone();
    out.report(
        "report.json",
        cfg,
        &SolveResult {
            ground_state: &report,
            checks: &checks,
        },
    )?;
    out.snapshot("solution.fld", &report.solution)?;
    out.csv(
        "residuals.csv",
        &["iteration", "residual", "energy"],
        history_rows(&report),
    )?;
    if let Some(fit) = &fit {
        out.csv("profile.csv", &["r", "profile", "envelope"], profile_rows(fit))?;
    }
    out.say(format!(
        "solve: c = {:.12} after {} iterations, residual {:.3e} ({:?}); post-checks {}",
        report.level_c,
        report.iterations,
        report.residual,
        report.stop,
        if checks.all_pass { "pass" } else { "FAIL" }
    ));
    if !report.converged {
        return Ok(Outcome::SolverFailure);
    }
    Ok(Outcome::from_checks(checks.all_pass))
}

#[derive(Serialize)]
struct CompareResult<'a> {
    comparison: &'a LimitComparison,
    ground_state: Option<&'a GroundStateReport>,
    limit: Option<&'a GroundStateReport>,
}

pub fn limit_compare(cfg: &RunConfig, out: &Output) -> Result<Outcome, CliError> {
    let inits = starts(cfg)?;
    if !comparison_applicable(&cfg.model, &cfg.grid) {
        let cmp = LimitComparison {
            applicable: false,
            c: None,
            c_infinity: None,
            margin: None,
            pass: false,
        };
        out.report(
            "comparison.json",
            cfg,
            &CompareResult {
                comparison: &cmp,
                ground_state: None,
                limit: None,
            },
        )?;
        eprintln!("limit-compare: comparison not applicable (V is identically V∞ on the grid)");
        return Ok(Outcome::NotApplicable);
    }
    let (cmp, ground, limit) = compare_with_limit(&cfg.model, cfg.grid, &inits, &cfg.solver)?;
    out.report(
        "comparison.json",
        cfg,
        &CompareResult {
            comparison: &cmp,
            ground_state: Some(&ground),
            limit: Some(&limit),
        },
    )?;
    out.snapshot("ground.fld", &ground.solution)?;
    out.snapshot("limit.fld", &limit.solution)?;
    out.say(format!(
        "limit-compare: c = {:.12}, c_inf = {:.12}, margin {:.6e}",
        ground.level_c,
        limit.level_c,
        limit.level_c - ground.level_c
    ));
    if !(ground.converged && limit.converged) {
        return Ok(Outcome::SolverFailure);
    }
    Ok(Outcome::from_checks(cmp.pass))
}

#[derive(Debug, Serialize)]
pub struct PlaneWaveCheck {
    pub mode: Vec<i64>,
    pub neumann: NeumannReport,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct ExtensionChecks {
    pub depths: usize,
    pub dx: f64,
    pub pde_residual: f64,
    pub pde_residual_half_step: f64,
    pub pde_order: InequalityWitness,
    pub neumann: NeumannReport,
    pub plane_waves: Vec<PlaneWaveCheck>,
    pub energy: EnergyIdentity,
    pub energy_witness: InequalityWitness,
    pub trace: TraceReport,
    pub sup_decay: (f64, f64),
    pub weighted_sup_decreasing: bool,
    pub all_pass: bool,
}

/// Lattice modes whose cosines are extended exactly in the Neumann check.
const PLANE_WAVES: [[i64; 3]; 4] = [[1, 0, 0], [0, 2, 0], [3, 1, 0], [2, 2, 1]];

fn plane_wave(grid: Grid, mode: &[i64]) -> Field {
    let l = grid.box_length();
    Field::from_fn(grid, |y| {
        let phase: f64 = y.iter().zip(mode).map(|(c, &n)| n as f64 * c).sum();
        (2.0 * PI * phase / l).cos()
    })
}

pub fn extend_check(cfg: &RunConfig, out: &Output) -> Result<Outcome, CliError> {
    let m = cfg.model.mass;
    let levels = cfg.extension.depths.clone().unwrap_or_else(|| default_levels(m));
    if levels.len() < 3 {
        return Err(CliError::Config(format!(
            "extension.depths: {} levels given, the PDE residual needs at least 3",
            levels.len()
        )));
    }
    let v0 = match &cfg.extension.trace {
        Some(path) => load_snapshot(path, None)?,
        None => Field::gaussian(cfg.grid, &vec![0.0; cfg.grid.dim()], 1.0),
    };
    let ext = extend(&v0, m, &levels).map_err(extension)?;
    let dx = levels[1] - levels[0];
    let pde = pde_residual(&ext).map_err(extension)?;
    let fine_levels: Vec<f64> = (0..2 * levels.len() - 1)
        .map(|j| levels[0] + 0.5 * dx * j as f64)
        .collect();
    let fine = pde_residual(&extend(&v0, m, &fine_levels).map_err(extension)?).map_err(extension)?;
    // pass when pde / fine ≥ 3.6
    let pde_order = InequalityWitness::new(PDE_ORDER_RATIO * fine, pde, "pde residual drop on halving dx");
    let neumann = neumann_check(&v0, m, cfg.extension.neumann_dx).map_err(extension)?;
    let mut plane_waves = Vec::new();
    for mode in PLANE_WAVES {
        let mode = mode[..cfg.grid.dim()].to_vec();
        let report = neumann_check(&plane_wave(cfg.grid, &mode), m, cfg.extension.neumann_dx).map_err(extension)?;
        let pass = report.richardson < POST_CHECK_TOL;
        plane_waves.push(PlaneWaveCheck {
            mode,
            neumann: report,
            pass,
        });
    }
    let energy = energy_identity(&v0, m, cfg.extension.energy_dx, 10.0 / m).map_err(extension)?;
    let energy_witness = InequalityWitness::new(energy.relative_error, 1e-3, "half-space energy against trace form");
    let trace = trace_inequality_check(&ext).map_err(|e| CliError::Module {
        module: "energy",
        message: e.to_string(),
    })?;
    let sup_decay = ext.sup_decay_constant().map_err(extension)?;
    let weighted_sup_decreasing = ext.weighted_sup_decreasing(m);
    if cfg.extension.save {
        ext.save(&out.dir().join("extension"), "extend-check")
            .map_err(extension)?;
    }
    let all_pass = pde_order.pass
        && neumann.witness.pass
        && plane_waves.iter().all(|p| p.pass)
        && energy_witness.pass
        && trace.all_pass()
        && weighted_sup_decreasing;
    let checks = ExtensionChecks {
        depths: levels.len(),
        dx,
        pde_residual: pde,
        pde_residual_half_step: fine,
        pde_order,
        neumann,
        plane_waves,
        energy,
        energy_witness,
        trace,
        sup_decay,
        weighted_sup_decreasing,
        all_pass,
    };
    out.report("extension.json", cfg, &checks)?;
    out.csv(
        "depths.csv",
        &["x", "l2_norm", "sup"],
        ext.x_levels()
            .iter()
            .zip(ext.slices())
            .map(|(&x, s)| (x, s.l2_norm(), s.max_abs())),
    )?;
    out.say(format!(
        "extend-check: pde residual {:.3e} -> {:.3e}, neumann {:.3e}, energy {:.3e}; {}",
        pde,
        fine,
        checks.neumann.richardson,
        checks.energy.relative_error,
        if all_pass { "pass" } else { "FAIL" }
    ));
    Ok(Outcome::from_checks(all_pass))
}

#[derive(Serialize)]
struct PropsFailure {
    suite: String,
    seed: u64,
    index: u64,
    context: String,
}

#[derive(Serialize)]
struct PropsResult {
    report: Option<SuiteReport>,
    failure: Option<PropsFailure>,
}

pub fn props(cfg: &RunConfig, out: &Output) -> Result<Outcome, CliError> {
    match run_property_suites(&cfg.model, cfg.grid, cfg.seed, cfg.props.fields) {
        Ok(report) => {
            let pass = report.all_pass();
            for s in &report.suites {
                out.say(format!(
                    "props: {:<22} {}/{} (worst relative slack {:.3e})",
                    s.name, s.passes, s.checks, s.worst_relative_slack
                ));
            }
            out.report(
                "suites.json",
                cfg,
                &PropsResult {
                    report: Some(report),
                    failure: None,
                },
            )?;
            Ok(Outcome::from_checks(pass))
        }
        Err(AnalysisError::SuiteFailure {
            suite,
            seed,
            index,
            context,
        }) => {
            eprintln!("props: {suite} failed at seed {seed}, index {index}: {context}");
            out.report(
                "suites.json",
                cfg,
                &PropsResult {
                    report: None,
                    failure: Some(PropsFailure {
                        suite,
                        seed,
                        index,
                        context,
                    }),
                },
            )?;
            Ok(Outcome::CheckFailure)
        }
        Err(e) => Err(analysis(e)),
    }
}

#[derive(Serialize)]
struct DecayResult {
    fit: DecayFit,
    theorem: DecayTheoremWitness,
    positivity: PositivityReport,
}

pub fn decay_fit(cfg: &RunConfig, out: &Output) -> Result<Outcome, CliError> {
    let path = cfg
        .decay
        .snapshot
        .as_ref()
        .ok_or_else(|| CliError::Config("decay.snapshot: decay-fit needs a snapshot path".into()))?;
    let u = load_snapshot(path, None)?;
    let fit = match fit_decay(&u, cfg.decay.window) {
        Ok(fit) => fit,
        Err(e) => {
            eprintln!("decay-fit: analysis: {e}");
            return Ok(Outcome::CheckFailure);
        }
    };
    let theorem = verify_decay_theorem(&fit, &cfg.model).map_err(analysis)?;
    let pass = theorem.pass;
    out.csv("profile.csv", &["r", "profile", "envelope"], profile_rows(&fit))?;
    out.say(format!(
        "decay-fit: delta_hat = {:.6} (threshold {:.6}), r² = {:.6}; {}",
        fit.delta_hat,
        theorem.threshold,
        fit.r_squared,
        if pass { "pass" } else { "FAIL" }
    ));
    out.report(
        "decay.json",
        cfg,
        &DecayResult {
            positivity: positivity_check(&u, cfg.decay.window),
            fit,
            theorem,
        },
    )?;
    Ok(Outcome::from_checks(pass))
}
