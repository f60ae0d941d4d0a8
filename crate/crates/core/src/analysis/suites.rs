use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::energy::trace_inequality_check;
use crate::extension::{default_levels, extend};
use crate::model::{ar_gap, log_space, ModelSpec, NonlinearitySpec};
use crate::spectral::{check_hausdorff_young, check_weak_hls, Field, Grid};

pub const HY_TRIPLES: [(f64, f64, f64); 3] = [(1.0, 1.0, 1.0), (1.0, 2.0, 2.0), (4.0 / 3.0, 4.0 / 3.0, 2.0)];
pub const HLS_TRIPLES: [(f64, f64, f64); 2] = [(4.0 / 3.0, 2.0, 4.0 / 3.0), (1.5, 1.5, 1.5)];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub name: String,
    pub checks: usize,
    pub passes: usize,
    /// Smallest `(rhs − lhs)/rhs` seen (0 for vacuous `0 ≤ 0` checks).
    pub worst_relative_slack: f64,
    /// Largest empirical constant, where the suite records one.
    pub max_empirical_constant: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub grid: Grid,
    pub fields: usize,
    pub suites: Vec<SuiteSummary>,
}

impl SuiteReport {
    pub fn all_pass(&self) -> bool {
        self.suites.iter().all(|s| s.passes == s.checks)
    }
}

/// Nonlinearities shipped with the default configurations.
pub fn bundled_nonlinearities() -> Vec<NonlinearitySpec> {
    vec![
        NonlinearitySpec::Power { p: 3.0, theta: 3.5 },
        NonlinearitySpec::Power { p: 2.5, theta: 3.0 },
        NonlinearitySpec::PowerSum {
            a: 1.0,
            p: 2.5,
            b: 0.5,
            q: 3.5,
            theta: 3.5,
        },
    ]
}

/// Stream `index` of the suite seed: every check can be replayed on its own.
fn rng_for(seed: u64, suite: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((suite << 32) | index);
    rng
}

/// Sum of one to three Gaussian bumps of random centre, width and sign.
fn random_bumps(grid: Grid, rng: &mut ChaCha8Rng, signed: bool) -> Field {
    let mut acc = Field::zeros(grid);
    for _ in 0..rng.gen_range(1..=3) {
        let center: Vec<f64> = (0..grid.dim())
            .map(|_| rng.gen_range(-0.2..0.2) * grid.box_length())
            .collect();
        let width = rng.gen_range(0.05..0.15) * grid.box_length();
        let mut amp = rng.gen_range(0.1..3.0);
        if signed && rng.gen_bool(0.3) {
            amp = -amp;
        }
        acc = acc.axpy(amp, &Field::gaussian(grid, &center, width));
    }
    acc
}

struct Tally {
    summary: SuiteSummary,
}

impl Tally {
    fn new(name: &str) -> Self {
        Tally {
            summary: SuiteSummary {
                name: name.into(),
                checks: 0,
                passes: 0,
                worst_relative_slack: f64::INFINITY,
                max_empirical_constant: None,
            },
        }
    }

    fn record(
        &mut self,
        pass: bool,
        lhs: f64,
        rhs: f64,
        seed: u64,
        index: u64,
        context: &str,
    ) -> Result<(), AnalysisError> {
        let s = &mut self.summary;
        s.checks += 1;
        let rel = if rhs == 0.0 { 0.0 } else { (rhs - lhs) / rhs.abs() };
        s.worst_relative_slack = s.worst_relative_slack.min(rel);
        if !pass {
            return Err(AnalysisError::SuiteFailure {
                suite: s.name.clone(),
                seed,
                index,
                context: format!("{context}: lhs {lhs:e} > rhs {rhs:e}"),
            });
        }
        s.passes += 1;
        Ok(())
    }

    fn constant(&mut self, c: f64) {
        let m = &mut self.summary.max_empirical_constant;
        *m = Some(m.map_or(c, |x: f64| x.max(c)));
    }

    fn finish(mut self) -> SuiteSummary {
        if self.summary.checks == 0 {
            self.summary.worst_relative_slack = 0.0;
        }
        self.summary
    }
}

/// Randomized inequality checks. `fields` fields feed Hausdorff–Young on `grid`
/// and weak HLS on a 32-node line; the trace inequalities use `fields / 5`
/// extensions; the AR gap is scanned on 10³ log-spaced points for `spec.nonlinearity`
/// and every bundled nonlinearity. The first failure aborts with its seed and index.
pub fn run_property_suites(
    spec: &ModelSpec,
    grid: Grid,
    seed: u64,
    fields: usize,
) -> Result<SuiteReport, AnalysisError> {
    let mut suites = Vec::new();

    let mut hy = Tally::new("hausdorff_young");
    for i in 0..fields as u64 {
        let mut rng = rng_for(seed, 0, i);
        let w = random_bumps(grid, &mut rng, false);
        let g = random_bumps(grid, &mut rng, true);
        for (p, q, s) in HY_TRIPLES {
            let r = check_hausdorff_young(&w, &g, p, q, s).map_err(|e| AnalysisError::Numerics(e.to_string()))?;
            hy.record(r.pass, r.lhs, r.rhs, seed, i, &r.context)?;
        }
    }
    suites.push(hy.finish());

    let line = Grid::new(1, 32, 8.0).expect("fixed grid");
    let mut hls = Tally::new("weak_hls");
    for i in 0..fields as u64 {
        let mut rng = rng_for(seed, 1, i);
        let f = random_bumps(line, &mut rng, true);
        let g = random_bumps(line, &mut rng, true);
        for (p, q, r) in HLS_TRIPLES {
            let w = check_weak_hls(&f, &g, p, q, r).map_err(|e| AnalysisError::Numerics(e.to_string()))?;
            hls.record(
                w.witness.pass,
                w.witness.lhs,
                w.witness.rhs,
                seed,
                i,
                &w.witness.context,
            )?;
            if let Some(c) = w.empirical_constant {
                hls.constant(c);
            }
        }
    }
    suites.push(hls.finish());

    let mut ar = Tally::new("ambrosetti_rabinowitz");
    let ts = log_space(1e-3, 1e3, 1000);
    let mut nls = vec![spec.nonlinearity.clone()];
    for nl in bundled_nonlinearities() {
        if !nls.contains(&nl) {
            nls.push(nl);
        }
    }
    for (i, nl) in nls.iter().enumerate() {
        let min_gap = ts.iter().map(|&t| ar_gap(nl, t)).fold(f64::INFINITY, f64::min);
        ar.record(min_gap >= -1e-12, -min_gap, 1e-12, seed, i as u64, &format!("{nl:?}"))?;
    }
    suites.push(ar.finish());

    let mut trace = Tally::new("trace");
    let levels = default_levels(spec.mass);
    for i in 0..(fields / 5).max(1) as u64 {
        let mut rng = rng_for(seed, 2, i);
        let v0 = random_bumps(grid, &mut rng, true);
        let ext = extend(&v0, spec.mass, &levels).map_err(|e| AnalysisError::Numerics(e.to_string()))?;
        let report = trace_inequality_check(&ext).map_err(|e| AnalysisError::Numerics(e.to_string()))?;
        for w in &report.witnesses {
            trace.record(w.pass, w.lhs, w.rhs, seed, i, &w.context)?;
        }
        for &(_, c) in &report.constants {
            trace.constant(c);
        }
    }
    suites.push(trace.finish());

    Ok(SuiteReport {
        seed,
        grid,
        fields,
        suites,
    })
}
