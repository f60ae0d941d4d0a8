//! The half-space picture of `√(−Δ+m²)`.
//!
//! A trace `v₀` on `ℝ^N` extends to `u(x, y)` on `(0, ∞) × ℝ^N` by damping each
//! Fourier mode independently, `û(x, k) = e^{−x s(k)} v̂₀(k)` with
//! `s(k) = √(4π²|k|² + m²)`. The extension solves `−Δu + m²u = 0` and its
//! outward normal derivative at `x = 0` is `√(−Δ+m²) v₀`. Depths are sampled,
//! never discretized, so every check here probes the bridge between the trace
//! form of the energy and the half-space form.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::Functional;
use crate::spectral::snapshot::{self, SnapshotError};
use crate::spectral::{
    laplacian_symbol, pairwise_sum, sqrt_symbol, Field, Grid, SpectralError, SpectralField, Transform,
};
use crate::witness::InequalityWitness;

#[derive(Debug, Error)]
pub enum ExtensionError {
    #[error("invalid depth levels: {0}")]
    Levels(String),
    #[error("mass must be positive and finite, got {0}")]
    Mass(f64),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error("manifest {path}: {message}")]
    Manifest { path: String, message: String },
}

/// Sampled extension `u(x_j, ·)` of a trace.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtensionField {
    grid: Grid,
    mass: f64,
    x_levels: Vec<f64>,
    slices: Vec<Field>,
}

/// `count` uniformly spaced depths on `[0, x_max]`, both ends included.
pub fn uniform_levels(count: usize, x_max: f64) -> Vec<f64> {
    if count < 2 {
        return vec![0.0; count.min(1)];
    }
    let dx = x_max / (count - 1) as f64;
    (0..count).map(|j| j as f64 * dx).collect()
}

/// 64 uniform depths on `[0, 10/m]`.
pub fn default_levels(mass: f64) -> Vec<f64> {
    uniform_levels(64, 10.0 / mass)
}

fn check_mass(mass: f64) -> Result<(), ExtensionError> {
    if mass.is_finite() && mass > 0.0 {
        Ok(())
    } else {
        Err(ExtensionError::Mass(mass))
    }
}

fn damped(tr: &Transform, v0hat: &SpectralField, symbol: &[f64], x: f64) -> Result<Field, SpectralError> {
    let mut s = v0hat.clone();
    for (c, &sk) in s.coeffs_mut().iter_mut().zip(symbol) {
        *c *= (-x * sk).exp();
    }
    tr.from_spectral(&s)
}

/// Builds the slices `u(x_j, ·)` for ascending depths starting at `0`.
pub fn extend(v0: &Field, mass: f64, x_levels: &[f64]) -> Result<ExtensionField, ExtensionError> {
    check_mass(mass)?;
    if x_levels.first() != Some(&0.0) {
        return Err(ExtensionError::Levels("first depth must be 0".into()));
    }
    if x_levels.windows(2).any(|w| !(w[1] > w[0])) || x_levels.iter().any(|x| !x.is_finite()) {
        return Err(ExtensionError::Levels(
            "depths must be finite and strictly ascending".into(),
        ));
    }
    let grid = *v0.grid();
    let tr = Transform::new(grid);
    let v0hat = tr.to_spectral(v0)?;
    let symbol = sqrt_symbol(&grid, mass);
    let mut slices = Vec::with_capacity(x_levels.len());
    slices.push(v0.clone());
    for &x in &x_levels[1..] {
        slices.push(damped(&tr, &v0hat, &symbol, x)?);
    }
    Ok(ExtensionField {
        grid,
        mass,
        x_levels: x_levels.to_vec(),
        slices,
    })
}

impl ExtensionField {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn x_levels(&self) -> &[f64] {
        &self.x_levels
    }

    pub fn slices(&self) -> &[Field] {
        &self.slices
    }

    /// The slice at `x = 0`, `γ(u)`.
    pub fn trace(&self) -> &Field {
        &self.slices[0]
    }

    /// Half-space integrals of the exact extension, integrated in `x` in closed form
    /// and summed over the frequency lattice.
    pub fn integrals(&self) -> Result<HalfSpaceIntegrals, ExtensionError> {
        half_space_integrals(self.trace(), self.mass)
    }

    /// `∬ |u|^p` by the trapezoid rule over the sampled depths. The part beyond the
    /// last depth is dropped.
    pub fn lp_integral(&self, p: f64) -> f64 {
        let per_slice: Vec<f64> = self
            .slices
            .iter()
            .map(|s| {
                let powers: Vec<f64> = s.values().iter().map(|v| v.abs().powf(p)).collect();
                self.grid.cell_volume() * pairwise_sum(&powers)
            })
            .collect();
        self.x_levels
            .windows(2)
            .zip(per_slice.windows(2))
            .map(|(x, f)| 0.5 * (x[1] - x[0]) * (f[0] + f[1]))
            .sum()
    }

    /// `max_j ‖u(x_j)‖∞ e^{m x_j} / |v₀|₂` together with the a priori grid constant
    /// `L^{−N} Σ|v̂₀| / |v₀|₂` that bounds it.
    pub fn sup_decay_constant(&self) -> Result<(f64, f64), ExtensionError> {
        let l2 = self.trace().l2_norm();
        if l2 == 0.0 {
            return Ok((0.0, 0.0));
        }
        let empirical = self
            .x_levels
            .iter()
            .zip(&self.slices)
            .map(|(x, s)| s.max_abs() * (self.mass * x).exp())
            .fold(0.0f64, f64::max)
            / l2;
        let hat = Transform::new(self.grid).to_spectral(self.trace())?;
        let abs: Vec<f64> = hat.coeffs().iter().map(|c| c.norm()).collect();
        let bound = pairwise_sum(&abs) / self.grid.box_volume() / l2;
        Ok((empirical, bound))
    }

    /// Whether `max_y |u(x, y)| e^{λx}` decreases over the three deepest levels.
    pub fn weighted_sup_decreasing(&self, lambda: f64) -> bool {
        let n = self.x_levels.len();
        if n < 3 {
            return false;
        }
        let w: Vec<f64> = (n - 3..n)
            .map(|j| self.slices[j].max_abs() * (lambda * self.x_levels[j]).exp())
            .collect();
        w[1] <= w[0] && w[2] <= w[1]
    }

    /// Writes one snapshot per depth plus `manifest.json`.
    pub fn save(&self, dir: &Path, source: &str) -> Result<(), ExtensionError> {
        let manifest_path = dir.join("manifest.json");
        fs::create_dir_all(dir).map_err(|e| ExtensionError::Manifest {
            path: dir.display().to_string(),
            message: e.to_string(),
        })?;
        let mut names = Vec::with_capacity(self.slices.len());
        for (j, slice) in self.slices.iter().enumerate() {
            let name = format!("slice_{j:04}.fld");
            snapshot::write_field(&dir.join(&name), slice)?;
            names.push(name);
        }
        let manifest = ExtensionManifest {
            mass: self.mass,
            x_levels: self.x_levels.clone(),
            source: source.to_string(),
            slices: names,
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest");
        snapshot::write_atomic(&manifest_path, text.as_bytes())?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, ExtensionError> {
        let manifest_path = dir.join("manifest.json");
        let bad = |message: String| ExtensionError::Manifest {
            path: manifest_path.display().to_string(),
            message,
        };
        let text = fs::read_to_string(&manifest_path).map_err(|e| bad(e.to_string()))?;
        let manifest: ExtensionManifest = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
        if manifest.slices.len() != manifest.x_levels.len() || manifest.slices.is_empty() {
            return Err(bad("slice count does not match x_levels".into()));
        }
        let slices = manifest
            .slices
            .iter()
            .map(|name| snapshot::read_field(&dir.join(name)))
            .collect::<Result<Vec<_>, _>>()?;
        let grid = *slices[0].grid();
        if slices.iter().any(|s| *s.grid() != grid) {
            return Err(bad("slices live on different grids".into()));
        }
        Ok(ExtensionField {
            grid,
            mass: manifest.mass,
            x_levels: manifest.x_levels,
            slices,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtensionManifest {
    pub mass: f64,
    pub x_levels: Vec<f64>,
    /// Where the trace came from (free text).
    pub source: String,
    pub slices: Vec<String>,
}

/// Exact half-space integrals of the extension of a trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfSpaceIntegrals {
    /// `∫ |γu|²`
    pub trace_l2_sq: f64,
    /// `∬ u²`
    pub l2_sq: f64,
    /// `∬ |∂ₓu|²`
    pub dx_sq: f64,
    /// `∬ |∇u|²`, both `x` and `y` derivatives
    pub grad_sq: f64,
}

impl HalfSpaceIntegrals {
    /// `‖u‖²_{H¹} = ∬ |∇u|² + u²`.
    pub fn h1_sq(&self) -> f64 {
        self.grad_sq + self.l2_sq
    }
}

/// Per mode, `∫₀^∞ e^{−2sx} dx = 1/(2s)`, so `∬u² = L^{−N} Σ |v̂|²/(2s)`,
/// `∬|∂ₓu|² = L^{−N} Σ s|v̂|²/2` and `∬|∇_y u|² = L^{−N} Σ (s² − m²)|v̂|²/(2s)`.
pub fn half_space_integrals(v0: &Field, mass: f64) -> Result<HalfSpaceIntegrals, ExtensionError> {
    check_mass(mass)?;
    let grid = *v0.grid();
    let hat = Transform::new(grid).to_spectral(v0)?;
    let s = sqrt_symbol(&grid, mass);
    let lap = laplacian_symbol(&grid);
    let l2_sq = hat.weighted_energy(|i| 0.5 / s[i]);
    let dx_sq = hat.weighted_energy(|i| 0.5 * s[i]);
    let grad_sq = hat.weighted_energy(|i| 0.5 * s[i] + 0.5 * lap[i] / s[i]);
    Ok(HalfSpaceIntegrals {
        trace_l2_sq: hat.weighted_energy(|_| 1.0),
        l2_sq,
        dx_sq,
        grad_sq,
    })
}

fn check_uniform(levels: &[f64]) -> Result<f64, ExtensionError> {
    if levels.len() < 3 {
        return Err(ExtensionError::Levels(format!(
            "need at least 3 depths, got {}",
            levels.len()
        )));
    }
    let dx = levels[1] - levels[0];
    let uniform = levels.windows(2).all(|w| ((w[1] - w[0]) - dx).abs() <= 1e-9 * dx);
    if !uniform {
        return Err(ExtensionError::Levels("depths must be uniformly spaced".into()));
    }
    Ok(dx)
}

/// `max_j ‖−∂ₓ²u − Δ_y u + m²u‖₂ / ‖u‖₂` over interior depths, with a central
/// second difference in `x` and the spectral Laplacian in `y`.
pub fn pde_residual(ext: &ExtensionField) -> Result<f64, ExtensionError> {
    let dx = check_uniform(&ext.x_levels)?;
    let tr = Transform::new(ext.grid);
    let lap = laplacian_symbol(&ext.grid);
    let m2 = ext.mass * ext.mass;
    let mut worst = 0.0f64;
    for j in 1..ext.slices.len() - 1 {
        let u = &ext.slices[j];
        let norm = u.l2_norm();
        if norm == 0.0 {
            continue;
        }
        let lap_u = tr.apply_multiplier(u, &lap)?;
        let (prev, next) = (&ext.slices[j - 1], &ext.slices[j + 1]);
        let values: Vec<f64> = (0..u.values().len())
            .map(|i| {
                let uxx = (next.values()[i] - 2.0 * u.values()[i] + prev.values()[i]) / (dx * dx);
                -uxx + lap_u.values()[i] + m2 * u.values()[i]
            })
            .collect();
        let r = Field::from_values(ext.grid, values)?.l2_norm() / norm;
        worst = worst.max(r);
    }
    Ok(worst)
}

/// Difference quotients of the extension at `x = 0` against `−√(−Δ+m²) v₀`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeumannReport {
    pub dx: f64,
    /// `‖(u(dx) − u(0))/dx + √(−Δ+m²)v₀‖₂ / ‖√(−Δ+m²)v₀‖₂`, first order in `dx`.
    pub one_sided: f64,
    /// Same mismatch for `2D(dx/2) − D(dx)`, second order in `dx`.
    pub richardson: f64,
    /// `richardson` against its leading-order error bound `s³dx²/12·(1 + s·dx)`
    /// carried mode by mode, plus a rounding allowance `64ε|v₀|₂/dx`.
    pub witness: InequalityWitness,
}

fn difference_quotient(
    tr: &Transform,
    v0: &Field,
    v0hat: &SpectralField,
    symbol: &[f64],
    dx: f64,
) -> Result<Field, SpectralError> {
    let shifted = damped(tr, v0hat, symbol, dx)?;
    Ok(shifted.zip_map(v0, |a, b| (a - b) / dx))
}

/// Richardson-extrapolated `∂ₓu(0, ·)`.
fn normal_derivative(v0: &Field, mass: f64, dx: f64) -> Result<(Field, Field), ExtensionError> {
    let tr = Transform::new(*v0.grid());
    let v0hat = tr.to_spectral(v0)?;
    let symbol = sqrt_symbol(v0.grid(), mass);
    let coarse = difference_quotient(&tr, v0, &v0hat, &symbol, dx)?;
    let fine = difference_quotient(&tr, v0, &v0hat, &symbol, 0.5 * dx)?;
    let richardson = fine.zip_map(&coarse, |f, c| 2.0 * f - c);
    Ok((coarse, richardson))
}

pub fn neumann_check(v0: &Field, mass: f64, dx: f64) -> Result<NeumannReport, ExtensionError> {
    check_mass(mass)?;
    if !(dx > 0.0 && dx.is_finite()) {
        return Err(ExtensionError::Levels(format!("dx = {dx} must be positive")));
    }
    let grid = *v0.grid();
    let tr = Transform::new(grid);
    let symbol = sqrt_symbol(&grid, mass);
    let target = tr.apply_multiplier(v0, &symbol)?.scaled(-1.0);
    let (coarse, richardson) = normal_derivative(v0, mass, dx)?;
    let scale = target.l2_norm();
    let rel = |d: &Field| {
        let diff = d.zip_map(&target, |a, b| a - b).l2_norm();
        if scale == 0.0 {
            diff
        } else {
            diff / scale
        }
    };
    let one_sided = rel(&coarse);
    let richardson_err = rel(&richardson);
    let hat = tr.to_spectral(v0)?;
    let bound_sq = hat.weighted_energy(|i| {
        let s = symbol[i];
        let e = s * s * s * dx * dx / 12.0 * (1.0 + s * dx);
        e * e
    });
    // rounding in the difference quotients grows like ε/dx
    let rounding = 64.0 * f64::EPSILON * v0.l2_norm() / dx;
    let bound = if scale == 0.0 {
        0.0
    } else {
        (bound_sq.sqrt() + rounding) / scale
    } + 1e-12;
    Ok(NeumannReport {
        dx,
        one_sided,
        richardson: richardson_err,
        witness: InequalityWitness::new(richardson_err, bound, format!("neumann richardson dx={dx}")),
    })
}

/// Relative mismatch between `−∂ₓu(0, ·)` of the extension of `w` and the right
/// side `(W ∗ F(w)) f(w) − V w` of the boundary condition.
pub fn boundary_equation_mismatch(w: &Field, functional: &Functional, dx: f64) -> Result<f64, ExtensionError> {
    let (_, richardson) = normal_derivative(w, functional.spec().mass, dx)?;
    let rhs = functional
        .boundary_source(w)
        .map_err(|e| ExtensionError::Levels(e.to_string()))?;
    let diff = richardson.zip_map(&rhs, |d, r| -d - r).l2_norm();
    let scale = rhs.l2_norm();
    Ok(if scale == 0.0 { diff } else { diff / scale })
}

/// Half-space energy `∬ |∇u|² + m²u²` by quadrature in `x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyIdentity {
    pub dx: f64,
    pub x_max: f64,
    pub quadrature: f64,
    /// `⟨√(−Δ+m²) v₀, v₀⟩`
    pub trace_form: f64,
    pub relative_error: f64,
}

/// Each mode's profile `e^{−s x}` is sampled on `[0, x_max]` with step `dx`,
/// differentiated by second-order finite differences and integrated by Simpson's
/// rule; the `y`-gradient uses the exact symbol. Modes are recombined by Parseval.
pub fn energy_identity(v0: &Field, mass: f64, dx: f64, x_max: f64) -> Result<EnergyIdentity, ExtensionError> {
    check_mass(mass)?;
    if !(dx > 0.0 && x_max > dx) {
        return Err(ExtensionError::Levels("need 0 < dx < x_max".into()));
    }
    let mut intervals = (x_max / dx).round() as usize;
    if intervals % 2 == 1 {
        intervals += 1;
    }
    let h = x_max / intervals as f64;
    let grid = *v0.grid();
    let hat = Transform::new(grid).to_spectral(v0)?;
    let symbol = sqrt_symbol(&grid, mass);
    let lap = laplacian_symbol(&grid);
    let m2 = mass * mass;
    let n = intervals + 1;
    let mut profile = vec![0.0; n];
    let mut per_mode = vec![0.0; grid.len()];
    let mut cache: HashMap<u64, f64> = HashMap::new();
    for i in 0..grid.len() {
        let s = symbol[i];
        // many lattice modes share |k|
        if let Some(&v) = cache.get(&s.to_bits()) {
            per_mode[i] = v;
            continue;
        }
        for (j, p) in profile.iter_mut().enumerate() {
            *p = (-s * j as f64 * h).exp();
        }
        let deriv = |j: usize| -> f64 {
            if j == 0 {
                (-3.0 * profile[0] + 4.0 * profile[1] - profile[2]) / (2.0 * h)
            } else if j == n - 1 {
                (3.0 * profile[n - 1] - 4.0 * profile[n - 2] + profile[n - 3]) / (2.0 * h)
            } else {
                (profile[j + 1] - profile[j - 1]) / (2.0 * h)
            }
        };
        let mut acc = 0.0;
        for (j, &p) in profile.iter().enumerate() {
            let d = deriv(j);
            let integrand = d * d + (lap[i] + m2) * p * p;
            let weight = if j == 0 || j == n - 1 {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += weight * integrand;
        }
        let v = acc * h / 3.0;
        cache.insert(s.to_bits(), v);
        per_mode[i] = v;
    }
    let quadrature = hat.weighted_energy(|i| per_mode[i]);
    let trace_form = hat.weighted_energy(|i| symbol[i]);
    let relative_error = if trace_form == 0.0 {
        quadrature.abs()
    } else {
        (quadrature - trace_form).abs() / trace_form
    };
    Ok(EnergyIdentity {
        dx: h,
        x_max,
        quadrature,
        trace_form,
        relative_error,
    })
}
