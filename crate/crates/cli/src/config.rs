use std::fs;
use std::path::{Path, PathBuf};

use relhartree::analysis::WindowPolicy;
use relhartree::nehari::SolverOptions;
use relhartree::{Grid, ModelSpec};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// The configuration shipped with the binary: the desk instance on a 256² grid.
pub const BUNDLED: &str = include_str!("../configs/default.json");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub grid: Grid,
    #[serde(default)]
    pub solver: SolverOptions,
    /// Seeds the extra solver starts, the sphere directions and the suites.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_outputs")]
    pub outputs: PathBuf,
    /// Snapshot used as the only solver start.
    #[serde(default)]
    pub warm_start: Option<PathBuf>,
    #[serde(default)]
    pub extension: ExtensionSection,
    #[serde(default)]
    pub props: PropsSection,
    #[serde(default)]
    pub decay: DecaySection,
}

fn default_outputs() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtensionSection {
    /// Uniform depths `x_j`; 64 levels on `[0, 10/m]` when absent.
    pub depths: Option<Vec<f64>>,
    /// Trace to extend; the centered Gaussian when absent.
    pub trace: Option<PathBuf>,
    /// Step of the half-space energy quadrature.
    pub energy_dx: f64,
    /// Step of the Neumann difference quotients.
    pub neumann_dx: f64,
    /// Also persist the sampled extension under `<outputs>/extension`.
    pub save: bool,
}

impl Default for ExtensionSection {
    fn default() -> Self {
        ExtensionSection {
            depths: None,
            trace: None,
            energy_dx: 1e-2,
            neumann_dx: 1e-3,
            save: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PropsSection {
    pub fields: usize,
}

impl Default for PropsSection {
    fn default() -> Self {
        PropsSection { fields: 100 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecaySection {
    pub window: WindowPolicy,
    /// Field to fit in `decay-fit`.
    pub snapshot: Option<PathBuf>,
}

impl RunConfig {
    pub fn bundled() -> Self {
        parse(BUNDLED, "<bundled>").expect("bundled config is valid")
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        parse(&text, &path.display().to_string())
    }

    fn validate(&self) -> Result<(), String> {
        self.model.check_admissible().map_err(|e| format!("model: {e}"))?;
        if self.model.dim != self.grid.dim() {
            return Err(format!(
                "model.dim = {} but grid.dim = {}",
                self.model.dim,
                self.grid.dim()
            ));
        }
        let s = &self.solver;
        if !(s.tol > 0.0) || s.starts == 0 || s.stall_window == 0 {
            return Err("solver: need tol > 0, starts >= 1 and stall_window >= 1".into());
        }
        let t = &s.tau;
        if !(t.initial > 0.0 && t.min > 0.0 && t.min <= t.max && t.growth >= 1.0) {
            return Err("solver.tau: need initial > 0, 0 < min <= max and growth >= 1".into());
        }
        let w = &self.decay.window;
        if !(0.0 < w.lo_fraction && w.lo_fraction < w.hi_fraction && w.hi_fraction <= 1.0) {
            return Err("decay.window: need 0 < lo_fraction < hi_fraction <= 1".into());
        }
        let e = &self.extension;
        if !(e.energy_dx > 0.0 && e.neumann_dx > 0.0) {
            return Err("extension: steps must be positive".into());
        }
        Ok(())
    }
}

/// Strict parse; syntax and schema errors carry the line and column.
pub fn parse(text: &str, origin: &str) -> Result<RunConfig, CliError> {
    let config: RunConfig = serde_json::from_str(text)
        .map_err(|e| CliError::Config(format!("{origin}:{}:{}: {e}", e.line(), e.column())))?;
    config
        .validate()
        .map_err(|m| CliError::Config(format!("{origin}: {m}")))?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_config_is_the_desk_instance() {
        let c = RunConfig::bundled();
        assert_eq!(c.model, ModelSpec::desk_default());
        assert_eq!(c.grid, Grid::new(2, 256, 40.0).unwrap());
        assert_eq!(c.solver, SolverOptions::default());
    }

    #[test]
    fn unknown_keys_are_rejected_with_position() {
        let text = BUNDLED.replacen("\"seed\"", "\"sede\"", 1);
        let CliError::Config(msg) = parse(&text, "cfg.json").unwrap_err() else {
            panic!("expected a config error");
        };
        assert!(msg.starts_with("cfg.json:"), "{msg}");
        assert!(msg.contains("sede"), "{msg}");
        let line: usize = msg.split(':').nth(1).unwrap().parse().unwrap();
        let expected = BUNDLED.lines().position(|l| l.contains("\"seed\"")).unwrap() + 1;
        assert_eq!(line, expected);
    }

    #[test]
    fn semantic_errors_are_config_errors() {
        let mut c = RunConfig::bundled();
        c.model.dim = 3;
        assert!(c.validate().is_err());
        let mut c = RunConfig::bundled();
        c.model.v0 = 2.0;
        assert!(c.validate().unwrap_err().starts_with("model:"));
        let mut c = RunConfig::bundled();
        c.decay.window.hi_fraction = 0.1;
        assert!(c.validate().is_err());
    }

    #[test]
    fn round_trips_through_json() {
        let c = RunConfig::bundled();
        let text = serde_json::to_string_pretty(&c).unwrap();
        assert_eq!(parse(&text, "x").unwrap(), c);
    }
}
