//! The energy functional in trace form,
//!
//! ```text
//! I(u) = ½⟨√(−Δ+m²) u, u⟩ + ½∫V u² − ½∫(W ∗ F(u)) F(u),
//! ```
//!
//! its `L²` gradient, and the constants relating the quadratic part to the
//! half-space `H¹` norm of the extension.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extension::{ExtensionError, ExtensionField};
use crate::model::{trace_critical_exponent, ModelError, ModelSpec};
use crate::spectral::{pairwise_sum, sqrt_symbol, Convolver, Field, Grid, SpectralError, SpectralField, Transform};
use crate::witness::InequalityWitness;

#[derive(Debug, Error)]
pub enum EnergyError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("model dimension {model} does not match grid dimension {grid}")]
    Dimension { model: usize, grid: usize },
    #[error("F(u) is not finite at node {0}")]
    Range(usize),
}

/// How `‖u‖` is discretized for the norm-equivalence constants.
pub const NORM_DEFINITION: &str = "‖u‖² = L^-N Σ_k (s(k) − (m²−1)/(2 s(k))) |û(k)|², s(k) = √(4π²|k|²+m²): \
     the H¹ norm of the half-space extension of u";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    /// `½⟨√(−Δ+m²)u, u⟩ + ½∫Vu²`
    pub quad: f64,
    /// `½∫(W ∗ F(u)) F(u)`
    pub hartree: f64,
    /// `quad − hartree`
    pub total: f64,
}

impl EnergyBreakdown {
    pub const ZERO: EnergyBreakdown = EnergyBreakdown {
        quad: 0.0,
        hartree: 0.0,
        total: 0.0,
    };

    fn new(quad: f64, hartree: f64) -> Self {
        EnergyBreakdown {
            quad,
            hartree,
            total: quad - hartree,
        }
    }
}

/// `∇I(u)` under the `L²` pairing.
pub type GradientField = Field;

/// `K‖u‖² ≤ quad(u) ≤ C‖u‖²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormBounds {
    pub k: f64,
    pub c: f64,
    pub norm: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub energy: EnergyBreakdown,
    pub norm_sq: f64,
    pub bounds: NormBounds,
}

/// `K = min{½(1 − V₀/m), ½m(m − V₀)}` and the smallest `C` with
/// `½(s + V⁺) ≤ C·(s − (m²−1)/(2s))` for every `s ≥ m`, where `V⁺ = max(sup V, 0)`.
pub fn quad_form_bounds(spec: &ModelSpec) -> NormBounds {
    let m = spec.mass;
    let k = (0.5 * (1.0 - spec.v0 / m)).min(0.5 * m * (m - spec.v0));
    let a = spec.potential.sup().max(0.0);
    let b = 1.0 - m * m;
    // ratio (s² + a s) / (2s² + b) on [m, ∞)
    let ratio = |s: f64| (s * s + a * s) / (2.0 * s * s + b);
    let mut c = ratio(m).max(0.5);
    if a > 0.0 && b > 0.0 {
        let s_star = (2.0 * b + (4.0 * b * b + 8.0 * a * a * b).sqrt()) / (4.0 * a);
        if s_star > m {
            c = c.max(ratio(s_star));
        }
    }
    NormBounds {
        k,
        c,
        norm: NORM_DEFINITION.into(),
    }
}

/// Energy of one problem instance on one grid, with the operator symbol,
/// the sampled potential and the kernel spectrum precomputed.
#[derive(Clone, Debug)]
pub struct Functional {
    spec: ModelSpec,
    grid: Grid,
    symbol: Vec<f64>,
    potential: Vec<f64>,
    convolver: Convolver,
}

impl Functional {
    pub fn new(spec: &ModelSpec, grid: Grid) -> Result<Self, EnergyError> {
        spec.check_admissible()?;
        if spec.dim != grid.dim() {
            return Err(EnergyError::Dimension {
                model: spec.dim,
                grid: grid.dim(),
            });
        }
        let transform = Transform::new(grid);
        let convolver = Convolver::from_kernel(transform, &spec.kernel)?;
        let potential = (0..grid.len()).map(|i| spec.potential.eval(grid.radius(i))).collect();
        Ok(Functional {
            spec: spec.clone(),
            grid,
            symbol: sqrt_symbol(&grid, spec.mass),
            potential,
            convolver,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn transform(&self) -> &Transform {
        self.convolver.transform()
    }

    /// `√(4π²|k|² + m²)` in DFT order.
    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    /// `V(y_j)` at the nodes.
    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    fn check(&self, u: &Field) -> Result<(), EnergyError> {
        if *u.grid() != self.grid {
            return Err(SpectralError::GridMismatch.into());
        }
        Ok(())
    }

    fn weighted_sum(&self, terms: impl Iterator<Item = f64>) -> f64 {
        let v: Vec<f64> = terms.collect();
        self.grid.cell_volume() * pairwise_sum(&v)
    }

    fn quad_from(&self, uhat: &SpectralField, u: &Field) -> f64 {
        let kinetic = 0.5 * uhat.weighted_energy(|i| self.symbol[i]);
        let pot = 0.5 * self.weighted_sum(u.values().iter().zip(&self.potential).map(|(x, v)| v * x * x));
        kinetic + pot
    }

    /// `F(u)` at the nodes.
    fn primitive_field(&self, u: &Field) -> Result<Field, EnergyError> {
        let nl = &self.spec.nonlinearity;
        let values: Vec<f64> = u.values().iter().map(|&x| nl.primitive(x)).collect();
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(EnergyError::Range(i));
        }
        Ok(Field::from_values(self.grid, values)?)
    }

    /// `(W ∗ F(u), F(u))`.
    pub fn potential_of(&self, u: &Field) -> Result<(Field, Field), EnergyError> {
        self.check(u)?;
        let big_f = self.primitive_field(u)?;
        let conv = self.convolver.convolve(&big_f)?;
        Ok((conv, big_f))
    }

    pub fn quad(&self, u: &Field) -> Result<f64, EnergyError> {
        self.check(u)?;
        let uhat = self.transform().to_spectral(u)?;
        Ok(self.quad_from(&uhat, u))
    }

    pub fn hartree(&self, u: &Field) -> Result<f64, EnergyError> {
        let (conv, big_f) = self.potential_of(u)?;
        Ok(0.5 * conv.inner(&big_f))
    }

    pub fn energy(&self, u: &Field) -> Result<EnergyBreakdown, EnergyError> {
        let quad = self.quad(u)?;
        let hartree = self.hartree(u)?;
        Ok(EnergyBreakdown::new(quad, hartree))
    }

    /// Energy and gradient sharing the transforms of `u` and `F(u)`.
    pub fn energy_and_gradient(&self, u: &Field) -> Result<(EnergyBreakdown, GradientField), EnergyError> {
        self.check(u)?;
        let mut uhat = self.transform().to_spectral(u)?;
        let quad = self.quad_from(&uhat, u);
        let (conv, big_f) = self.potential_of(u)?;
        let hartree = 0.5 * conv.inner(&big_f);
        uhat.multiply(&self.symbol);
        let kinetic = self.transform().from_spectral(&uhat)?;
        let nl = &self.spec.nonlinearity;
        let values: Vec<f64> = (0..u.values().len())
            .map(|i| {
                let x = u.values()[i];
                kinetic.values()[i] + self.potential[i] * x - conv.values()[i] * nl.f(x)
            })
            .collect();
        Ok((
            EnergyBreakdown::new(quad, hartree),
            Field::from_values(self.grid, values)?,
        ))
    }

    /// `√(−Δ+m²)u + Vu − (W ∗ F(u)) f(u)`.
    pub fn gradient(&self, u: &Field) -> Result<GradientField, EnergyError> {
        Ok(self.energy_and_gradient(u)?.1)
    }

    /// `(W ∗ F(u)) f(u) − V u`, the right side of the boundary condition
    /// `−∂ₓu(0, ·) = …` of the half-space problem.
    pub fn boundary_source(&self, u: &Field) -> Result<Field, EnergyError> {
        let (conv, _) = self.potential_of(u)?;
        let nl = &self.spec.nonlinearity;
        let values: Vec<f64> = (0..u.values().len())
            .map(|i| {
                let x = u.values()[i];
                conv.values()[i] * nl.f(x) - self.potential[i] * x
            })
            .collect();
        Ok(Field::from_values(self.grid, values)?)
    }

    /// `d/dt I(t u)` given `quad(u)`: `2t·quad(u) − ∫(W ∗ F(tu)) f(tu) u`.
    pub fn ray_derivative(&self, u: &Field, quad_u: f64, t: f64) -> Result<f64, EnergyError> {
        let tu = u.scaled(t);
        let (conv, _) = self.potential_of(&tu)?;
        let nl = &self.spec.nonlinearity;
        let drive =
            self.weighted_sum((0..u.values().len()).map(|i| conv.values()[i] * nl.f(tu.values()[i]) * u.values()[i]));
        Ok(2.0 * t * quad_u - drive)
    }

    /// `½∫(W ∗ F(u)) (f(u) u − F(u))`, which equals `I(u)` wherever `I′(u)·u = 0`.
    pub fn ar_level(&self, u: &Field) -> Result<f64, EnergyError> {
        let (conv, big_f) = self.potential_of(u)?;
        let nl = &self.spec.nonlinearity;
        Ok(0.5
            * self.weighted_sum((0..u.values().len()).map(|i| {
                let x = u.values()[i];
                conv.values()[i] * (nl.f(x) * x - big_f.values()[i])
            })))
    }

    /// `‖u‖²` as defined by [`NORM_DEFINITION`].
    pub fn norm_sq(&self, u: &Field) -> Result<f64, EnergyError> {
        self.check(u)?;
        let uhat = self.transform().to_spectral(u)?;
        Ok(extension_norm_sq(&uhat, &self.symbol, self.spec.mass))
    }

    pub fn report(&self, u: &Field) -> Result<EnergyReport, EnergyError> {
        Ok(EnergyReport {
            energy: self.energy(u)?,
            norm_sq: self.norm_sq(u)?,
            bounds: quad_form_bounds(&self.spec),
        })
    }
}

fn extension_norm_sq(uhat: &SpectralField, symbol: &[f64], mass: f64) -> f64 {
    let shift = 0.5 * (mass * mass - 1.0);
    uhat.weighted_energy(|i| symbol[i] - shift / symbol[i])
}

/// Trace inequalities evaluated on one extension field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    pub witnesses: Vec<InequalityWitness>,
    /// `(t, |γu|_t / ‖u‖_{H¹})` for each probed exponent.
    pub constants: Vec<(f64, f64)>,
}

impl TraceReport {
    pub fn all_pass(&self) -> bool {
        self.witnesses.iter().all(|w| w.pass)
    }
}

/// For `λ ∈ {m, 1}`: `|γu|₂² ≤ λ∬u² + λ⁻¹∬|∇u|²`. For `t ∈ {2, 2^#}`:
/// `|γu|_t ≤ ‖u‖_{2(t−1)}^{(t−1)/t} (t‖∇u‖₂)^{1/t}` and its Young relaxation
/// `|γu|_t ≤ ((t−1)/t)‖u‖_{2(t−1)} + ‖∇u‖₂`. Quadratic half-space integrals are
/// exact in `x`; the `L^{2(t−1)}` norm for `t > 2` uses the sampled depths.
pub fn trace_inequality_check(ext: &ExtensionField) -> Result<TraceReport, ExtensionError> {
    let ints = ext.integrals()?;
    let m = ext.mass();
    let trace = ext.trace();
    let mut witnesses = Vec::new();
    for lambda in [m, 1.0] {
        witnesses.push(InequalityWitness::new(
            ints.trace_l2_sq,
            lambda * ints.l2_sq + ints.grad_sq / lambda,
            format!("trace p=2 lambda={lambda}"),
        ));
    }
    let grad = ints.grad_sq.sqrt();
    let h1 = ints.h1_sq().sqrt();
    let mut constants = Vec::new();
    let dim = ext.grid().dim();
    let mut exponents = vec![2.0];
    let sharp = trace_critical_exponent(dim);
    if sharp.is_finite() {
        exponents.push(sharp);
    }
    for t in exponents {
        let lhs = trace.lp_norm(t);
        let inner = if t == 2.0 {
            ints.l2_sq.sqrt()
        } else {
            let q = 2.0 * (t - 1.0);
            ext.lp_integral(q).powf(1.0 / q)
        };
        witnesses.push(InequalityWitness::new(
            lhs,
            inner.powf((t - 1.0) / t) * (t * grad).powf(1.0 / t),
            format!("trace interpolation t={t}"),
        ));
        witnesses.push(InequalityWitness::new(
            lhs,
            (t - 1.0) / t * inner + grad,
            format!("trace young t={t}"),
        ));
        constants.push((t, if h1 > 0.0 { lhs / h1 } else { 0.0 }));
    }
    Ok(TraceReport { witnesses, constants })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extension::{default_levels, extend};
    use crate::model::{KernelSpec, NonlinearitySpec, PotentialSpec};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid() -> Grid {
        Grid::new(2, 32, 16.0).unwrap()
    }

    fn bump(grid: Grid, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let w = rng.gen_range(0.6..2.0);
        let a = rng.gen_range(0.3..2.0);
        Field::gaussian(grid, &c, w).scaled(a)
    }

    fn noise(grid: Grid, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Field::from_values(grid, (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn zero_field() {
        let fun = Functional::new(&ModelSpec::desk_default(), grid()).unwrap();
        let z = Field::zeros(grid());
        assert_eq!(fun.energy(&z).unwrap(), EnergyBreakdown::ZERO);
        assert!(fun.gradient(&z).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_cell_bump_by_hand() {
        let g = grid();
        let spec = ModelSpec::desk_default();
        let fun = Functional::new(&spec, g).unwrap();
        let mut u = Field::zeros(g);
        let j = g.flatten([10, 20, 0]);
        u.values_mut()[j] = 1.5;
        let hn = g.cell_volume();
        // The spectrum of a single spike has |û|² = (1.5 hᴺ)² at every mode.
        let mut kinetic = 0.0;
        for i in 0..g.len() {
            kinetic += fun.symbol()[i];
        }
        kinetic *= 0.5 * (1.5 * hn) * (1.5 * hn) / g.box_volume();
        let pot = 0.5 * hn * spec.potential.eval(g.radius(j)) * 1.5 * 1.5;
        let quad = fun.quad(&u).unwrap();
        assert!((quad - (kinetic + pot)).abs() < 1e-12 * quad);
        // W(0) = 0 for the rational kernel, so the spike does not interact with itself.
        assert!(fun.hartree(&u).unwrap().abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let g = grid();
        let fun = Functional::new(&ModelSpec::desk_default(), g).unwrap();
        let eps = [1e-2, 1e-3, 1e-4, 1e-5];
        for seed in 0..20u64 {
            let u = bump(g, seed);
            let phi = noise(g, 1000 + seed).zip_map(&bump(g, 77 + seed), |a, b| a * b);
            let exact = fun.gradient(&u).unwrap().inner(&phi);
            let e = fun.energy(&u).unwrap();
            let scale = e.quad.abs() + e.hartree.abs();
            let errs: Vec<f64> = eps
                .iter()
                .map(|&h| {
                    let ip = fun.energy(&u.axpy(h, &phi)).unwrap().total;
                    let im = fun.energy(&u.axpy(-h, &phi)).unwrap().total;
                    ((ip - im) / (2.0 * h) - exact).abs()
                })
                .collect();
            // log-log slope over the points above the rounding floor ε_mach·I/ε
            let pts: Vec<(f64, f64)> = eps
                .iter()
                .zip(&errs)
                .filter(|(h, e)| **e > 10.0 * f64::EPSILON * scale / **h)
                .map(|(h, e)| (h.ln(), e.ln()))
                .collect();
            assert!(pts.len() >= 2, "seed {seed}: {errs:?}");
            let n = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            assert!(sxy / sxx > 1.8, "seed {seed}: order {} {errs:?}", sxy / sxx);
            assert!(errs[3] < 1e-6 * exact.abs(), "seed {seed}: {exact} {errs:?}");
        }
    }

    #[test]
    fn linear_when_kernel_vanishes() {
        let g = grid();
        let spec = ModelSpec {
            kernel: KernelSpec::zero(),
            ..ModelSpec::desk_default()
        };
        let fun = Functional::new(&spec, g).unwrap();
        let u = bump(g, 3);
        let a = fun.gradient(&u.scaled(2.0)).unwrap();
        let b = fun.gradient(&u).unwrap().scaled(2.0);
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-13 * b.max_abs());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn hartree_homogeneity(seed in any::<u64>()) {
            let g = grid();
            let fun = Functional::new(&ModelSpec::desk_default(), g).unwrap();
            let u = bump(g, seed);
            let base = fun.hartree(&u).unwrap();
            for t in [0.5f64, 2.0, 3.0] {
                let scaled = fun.hartree(&u.scaled(t)).unwrap();
                prop_assert!((scaled - t.powi(6) * base).abs() < 1e-10 * scaled);
            }
        }

        #[test]
        fn nonpositive_fields_have_no_hartree(seed in any::<u64>()) {
            let g = grid();
            let fun = Functional::new(&ModelSpec::desk_default(), g).unwrap();
            let u = noise(g, seed).map(|v| -v.abs());
            prop_assert_eq!(fun.hartree(&u).unwrap(), 0.0);
        }

        #[test]
        fn ray_derivative_is_consistent(seed in any::<u64>(), t in 0.2f64..3.0) {
            let g = grid();
            let fun = Functional::new(&ModelSpec::desk_default(), g).unwrap();
            let u = bump(g, seed);
            let q = fun.quad(&u).unwrap();
            let d = fun.ray_derivative(&u, q, t).unwrap();
            let via_grad = fun.gradient(&u.scaled(t)).unwrap().inner(&u);
            prop_assert!((d - via_grad).abs() < 1e-10 * (2.0 * t * q));
        }
    }

    #[test]
    fn coercivity_and_upper_bound() {
        let g = grid();
        for spec in [
            ModelSpec::desk_default(),
            ModelSpec {
                mass: 2.0,
                v0: 1.5,
                potential: PotentialSpec::GaussianWell {
                    v_infinity: 1.0,
                    depth: 2.5,
                    width: 1.0,
                },
                ..ModelSpec::desk_default()
            },
            ModelSpec {
                mass: 0.5,
                v0: 0.25,
                potential: PotentialSpec::GaussianWell {
                    v_infinity: 0.1,
                    depth: 0.35,
                    width: 2.0,
                },
                ..ModelSpec::desk_default()
            },
        ] {
            let fun = Functional::new(&spec, g).unwrap();
            let b = quad_form_bounds(&spec);
            for seed in 0..100u64 {
                let u = if seed % 2 == 0 { noise(g, seed) } else { bump(g, seed) };
                let q = fun.quad(&u).unwrap();
                let n = fun.norm_sq(&u).unwrap();
                assert!(q >= b.k * n * (1.0 - 1e-12), "seed {seed}: {q} < {} {n}", b.k);
                assert!(q <= b.c * n * (1.0 + 1e-12), "seed {seed}: {q} > {} {n}", b.c);
            }
        }
    }

    #[test]
    fn k_formula() {
        let b = quad_form_bounds(&ModelSpec::desk_default());
        assert!((b.k - 0.375).abs() < 1e-15);
        let spec = ModelSpec {
            v0: 1e-9,
            ..ModelSpec::desk_default()
        };
        assert!((quad_form_bounds(&spec).k - 0.5).abs() < 1e-8);
    }

    #[test]
    fn limit_functional_is_translation_invariant() {
        let g = grid();
        let spec = ModelSpec::desk_default().limit_problem();
        let fun = Functional::new(&spec, g).unwrap();
        let u = bump(g, 11);
        let e0 = fun.energy(&u).unwrap();
        for shift in [[3, 0, 0], [-5, 7, 0], [16, 16, 0]] {
            let e1 = fun.energy(&u.shifted(shift)).unwrap();
            assert!((e1.quad - e0.quad).abs() <= 1e-13 * e0.quad);
            assert!((e1.hartree - e0.hartree).abs() <= 1e-13 * e0.hartree);
        }
    }

    #[test]
    fn power_sum_gradient() {
        let g = grid();
        let spec = ModelSpec {
            nonlinearity: NonlinearitySpec::PowerSum {
                a: 1.0,
                p: 2.5,
                b: 0.5,
                q: 3.2,
                theta: 3.2,
            },
            ..ModelSpec::desk_default()
        };
        let fun = Functional::new(&spec, g).unwrap();
        let u = bump(g, 5);
        let phi = bump(g, 6);
        let exact = fun.gradient(&u).unwrap().inner(&phi);
        let eps = 1e-4;
        let fd = (fun.energy(&u.axpy(eps, &phi)).unwrap().total - fun.energy(&u.axpy(-eps, &phi)).unwrap().total)
            / (2.0 * eps);
        assert!((fd - exact).abs() < 1e-7 * exact.abs());
    }

    #[test]
    fn trace_inequalities_on_gaussians() {
        let g = Grid::new(2, 64, 20.0).unwrap();
        for (i, mass) in [1.0, 0.6, 1.7].into_iter().enumerate() {
            let v0 = bump(g, 40 + i as u64);
            let ext = extend(&v0, mass, &default_levels(mass)).unwrap();
            let r = trace_inequality_check(&ext).unwrap();
            assert!(r.all_pass(), "{r:?}");
            assert_eq!(r.witnesses.len(), 6);
        }
        let zero = extend(&Field::zeros(g), 1.0, &default_levels(1.0)).unwrap();
        let r = trace_inequality_check(&zero).unwrap();
        assert!(r.all_pass());
        assert!(r.witnesses.iter().all(|w| w.lhs == 0.0));
    }

    #[test]
    fn constant_trace_is_extremal_for_lambda_m() {
        let g = Grid::new(2, 16, 4.0).unwrap();
        let ext = extend(&Field::constant(g, 1.0), 1.0, &default_levels(1.0)).unwrap();
        let r = trace_inequality_check(&ext).unwrap();
        let w = &r.witnesses[0];
        assert!(w.pass);
        assert!(w.slack.abs() < 1e-12 * w.rhs);
    }
}
