//! Problem instance: mass, potential, interaction kernel and nonlinearity,
//! together with the structural hypotheses they are expected to satisfy.
//!
//! Every family here is closed form. The potential and the kernel are radial
//! and are evaluated as functions of `|y|`; the nonlinearity `f` vanishes on
//! the negative half-line and its primitive `F(t) = ∫₀ᵗ f` is known exactly.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("dimension {0} is not supported (expected 1..=3)")]
    Dimension(usize),
    #[error("dimension 1 lies outside the supported hypotheses; set `outside_hypotheses`")]
    OneDimensional,
    #[error("mass must be positive and finite, got {0}")]
    Mass(f64),
    #[error("v0 = {v0} must lie in the open interval (0, m = {mass})")]
    V0Range { v0: f64, mass: f64 },
    #[error("theta = {theta} must lie in (2, {upper})")]
    ThetaRange { theta: f64, upper: f64 },
    #[error("integrable kernel exponent r = {r} must exceed {threshold}")]
    KernelExponent { r: f64, threshold: f64 },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("growth envelope constant diverges along the grid (last ratio {last_ratio} at t = {t})")]
    UnboundedEnvelope { t: f64, last_ratio: f64 },
}

/// `2^# = 2N/(N-1)`, the critical exponent for traces on `ℝ^N` (infinite when `N = 1`).
pub fn trace_critical_exponent(dim: usize) -> f64 {
    if dim <= 1 {
        f64::INFINITY
    } else {
        2.0 * dim as f64 / (dim as f64 - 1.0)
    }
}

/// `2* = 2(N+1)/(N-1)`, the Sobolev exponent of the half-space `ℝ^{N+1}_+`.
pub fn half_space_critical_exponent(dim: usize) -> f64 {
    if dim <= 1 {
        f64::INFINITY
    } else {
        2.0 * (dim as f64 + 1.0) / (dim as f64 - 1.0)
    }
}

/// Lower bound `N / (N(2-θ)+θ)` on the integrability exponent of the kernel part `W₁`.
pub fn kernel_exponent_threshold(dim: usize, theta: f64) -> f64 {
    let n = dim as f64;
    n / (n * (2.0 - theta) + theta)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub dim: usize,
    pub mass: f64,
    pub v0: f64,
    pub potential: PotentialSpec,
    pub kernel: KernelSpec,
    pub nonlinearity: NonlinearitySpec,
    #[serde(default)]
    pub outside_hypotheses: bool,
}

impl ModelSpec {
    /// The bundled desk instance: `N = 2`, `m = 1`, `V₀ = 0.25`,
    /// `V(y) = 0.5 − 0.4·exp(−|y|²)`, `W(y) = |y|²/(1+|y|²)`, `f(t) = t₊²`, `θ = 3.5`.
    pub fn desk_default() -> Self {
        ModelSpec {
            dim: 2,
            mass: 1.0,
            v0: 0.25,
            potential: PotentialSpec::GaussianWell {
                v_infinity: 0.5,
                depth: 0.4,
                width: 1.0,
            },
            kernel: KernelSpec {
                bounded: Some(BoundedKernel::RationalPower { k: 2.0 }),
                integrable: None,
            },
            nonlinearity: NonlinearitySpec::Power { p: 3.0, theta: 3.5 },
            outside_hypotheses: false,
        }
    }

    /// Same instance with `V` replaced by its limit `V∞`.
    pub fn limit_problem(&self) -> Self {
        ModelSpec {
            potential: PotentialSpec::Constant {
                v_infinity: self.potential.v_infinity(),
            },
            ..self.clone()
        }
    }

    /// Structural checks that are hard errors rather than report entries.
    pub fn check_admissible(&self) -> Result<(), ModelError> {
        if self.dim == 0 || self.dim > 3 {
            return Err(ModelError::Dimension(self.dim));
        }
        if self.dim == 1 && !self.outside_hypotheses {
            return Err(ModelError::OneDimensional);
        }
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(ModelError::Mass(self.mass));
        }
        if !(self.v0 > 0.0 && self.v0 < self.mass) {
            return Err(ModelError::V0Range {
                v0: self.v0,
                mass: self.mass,
            });
        }
        let theta = self.nonlinearity.theta();
        let upper = trace_critical_exponent(self.dim);
        if !(theta > 2.0 && theta < upper) {
            return Err(ModelError::ThetaRange { theta, upper });
        }
        self.potential.check_parameters()?;
        self.kernel.check_parameters()?;
        self.nonlinearity.check_parameters()?;
        if let Some(w1) = &self.kernel.integrable {
            let threshold = kernel_exponent_threshold(self.dim, theta);
            let r = w1.exponent();
            if !(r > threshold) {
                return Err(ModelError::KernelExponent { r, threshold });
            }
        }
        Ok(())
    }
}

/// Radial closed forms; both families are continuous.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    /// `V(y) = V∞ − depth·exp(−|y|²/width²)`.
    GaussianWell { v_infinity: f64, depth: f64, width: f64 },
    /// `V ≡ V∞`.
    Constant { v_infinity: f64 },
}

impl PotentialSpec {
    pub fn v_infinity(&self) -> f64 {
        match *self {
            PotentialSpec::GaussianWell { v_infinity, .. } => v_infinity,
            PotentialSpec::Constant { v_infinity } => v_infinity,
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            PotentialSpec::GaussianWell {
                v_infinity,
                depth,
                width,
            } => v_infinity - depth * (-(r * r) / (width * width)).exp(),
            PotentialSpec::Constant { v_infinity } => v_infinity,
        }
    }

    /// Exact supremum of `V` over `ℝ^N`.
    pub fn sup(&self) -> f64 {
        match *self {
            PotentialSpec::GaussianWell { v_infinity, depth, .. } => v_infinity.max(v_infinity - depth),
            PotentialSpec::Constant { v_infinity } => v_infinity,
        }
    }

    pub fn is_constant(&self) -> bool {
        match *self {
            PotentialSpec::GaussianWell { depth, .. } => depth == 0.0,
            PotentialSpec::Constant { .. } => true,
        }
    }

    fn check_parameters(&self) -> Result<(), ModelError> {
        match *self {
            PotentialSpec::GaussianWell {
                v_infinity,
                depth,
                width,
            } => {
                if !(v_infinity.is_finite() && depth.is_finite() && depth >= 0.0) {
                    return Err(ModelError::Parameter(
                        "gaussian_well needs finite v_infinity and depth >= 0".into(),
                    ));
                }
                if !(width.is_finite() && width > 0.0) {
                    return Err(ModelError::Parameter("gaussian_well width must be > 0".into()));
                }
            }
            PotentialSpec::Constant { v_infinity } => {
                if !v_infinity.is_finite() {
                    return Err(ModelError::Parameter("v_infinity must be finite".into()));
                }
            }
        }
        Ok(())
    }
}

/// `W = W₁ + W₂` with `W₂` bounded and `W₁ ∈ L^r`. Either part may be absent.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    #[serde(default)]
    pub bounded: Option<BoundedKernel>,
    #[serde(default)]
    pub integrable: Option<IntegrableKernel>,
}

impl KernelSpec {
    pub fn zero() -> Self {
        KernelSpec::default()
    }

    pub fn is_zero(&self) -> bool {
        self.bounded.is_none() && self.integrable.is_none()
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.bounded.as_ref().map_or(0.0, |w| w.eval(r)) + self.integrable.as_ref().map_or(0.0, |w| w.eval(r))
    }

    fn check_parameters(&self) -> Result<(), ModelError> {
        if let Some(w) = &self.bounded {
            w.check_parameters()?;
        }
        if let Some(w) = &self.integrable {
            w.check_parameters()?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundedKernel {
    /// `|y|^k / (1 + |y|^k)`.
    RationalPower { k: f64 },
    /// `amplitude·exp(−|y|²/width²)`.
    Gaussian { amplitude: f64, width: f64 },
}

impl BoundedKernel {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            BoundedKernel::RationalPower { k } => {
                let rk = r.powf(k);
                if rk.is_infinite() {
                    1.0
                } else {
                    rk / (1.0 + rk)
                }
            }
            BoundedKernel::Gaussian { amplitude, width } => amplitude * (-(r * r) / (width * width)).exp(),
        }
    }

    fn check_parameters(&self) -> Result<(), ModelError> {
        match *self {
            BoundedKernel::RationalPower { k } if !(k.is_finite() && k > 0.0) => {
                Err(ModelError::Parameter("rational_power needs k > 0".into()))
            }
            BoundedKernel::Gaussian { amplitude, width }
                if !(amplitude.is_finite() && width.is_finite() && width > 0.0) =>
            {
                Err(ModelError::Parameter(
                    "gaussian kernel needs finite amplitude, width > 0".into(),
                ))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum IntegrableKernel {
    /// `amplitude·exp(−|y|²/width²)`, declared to lie in `L^r`.
    Gaussian { amplitude: f64, width: f64, r: f64 },
    /// `amplitude·exp(−|y|)`, declared to lie in `L^r`.
    Exponential { amplitude: f64, r: f64 },
}

impl IntegrableKernel {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            IntegrableKernel::Gaussian { amplitude, width, .. } => amplitude * (-(r * r) / (width * width)).exp(),
            IntegrableKernel::Exponential { amplitude, .. } => amplitude * (-r).exp(),
        }
    }

    pub fn exponent(&self) -> f64 {
        match *self {
            IntegrableKernel::Gaussian { r, .. } | IntegrableKernel::Exponential { r, .. } => r,
        }
    }

    fn check_parameters(&self) -> Result<(), ModelError> {
        let ok = match *self {
            IntegrableKernel::Gaussian { amplitude, width, .. } => {
                amplitude.is_finite() && width.is_finite() && width > 0.0
            }
            IntegrableKernel::Exponential { amplitude, .. } => amplitude.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(ModelError::Parameter("integrable kernel parameters".into()))
        }
    }
}

/// Nonlinearity `f` with `f(t) = 0` for `t < 0`; `theta` is the growth exponent of (f2).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum NonlinearitySpec {
    /// `f(t) = t₊^{p−1}`, `F(t) = t₊^p / p`.
    Power { p: f64, theta: f64 },
    /// `f(t) = a·t₊^{p−1} + b·t₊^{q−1}`.
    PowerSum { a: f64, p: f64, b: f64, q: f64, theta: f64 },
}

impl NonlinearitySpec {
    pub fn theta(&self) -> f64 {
        match *self {
            NonlinearitySpec::Power { theta, .. } | NonlinearitySpec::PowerSum { theta, .. } => theta,
        }
    }

    /// `Some(p)` when `f(t) = t₊^{p−1}`.
    pub fn homogeneous_degree(&self) -> Option<f64> {
        match *self {
            NonlinearitySpec::Power { p, .. } => Some(p),
            NonlinearitySpec::PowerSum { .. } => None,
        }
    }

    #[inline]
    pub fn f(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match *self {
            NonlinearitySpec::Power { p, .. } => pow(t, p - 1.0),
            NonlinearitySpec::PowerSum { a, p, b, q, .. } => a * pow(t, p - 1.0) + b * pow(t, q - 1.0),
        }
    }

    /// The primitive `F(t) = ∫₀ᵗ f(s) ds`.
    #[inline]
    pub fn primitive(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match *self {
            NonlinearitySpec::Power { p, .. } => pow(t, p) / p,
            NonlinearitySpec::PowerSum { a, p, b, q, .. } => a * pow(t, p) / p + b * pow(t, q) / q,
        }
    }

    fn check_parameters(&self) -> Result<(), ModelError> {
        let ok = match *self {
            NonlinearitySpec::Power { p, .. } => p.is_finite() && p > 2.0,
            NonlinearitySpec::PowerSum { a, p, b, q, .. } => {
                a.is_finite() && b.is_finite() && a >= 0.0 && b >= 0.0 && p > 2.0 && q > 2.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(ModelError::Parameter(
                "nonlinearity exponents must exceed 2 and coefficients be non-negative".into(),
            ))
        }
    }
}

// Integer exponents go through powi: the default f(t) = t² is hit on every grid
// node in every energy evaluation.
#[inline]
fn pow(t: f64, e: f64) -> f64 {
    if e == e.trunc() && e.abs() < 64.0 {
        t.powi(e as i32)
    } else {
        t.powf(e)
    }
}

/// `f(t)·t − 2F(t)`; non-negative under (f3). Zero for `t ≤ 0`.
pub fn ar_gap(nl: &NonlinearitySpec, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    nl.f(t) * t - 2.0 * nl.primitive(t)
}

/// Smallest `C` on `t_grid` with `|f(t)| ≤ ξ t + C t^{θ−1}` at every grid point.
///
/// Fails when the required constant is still increasing at the top of the grid,
/// which is what a violation of (f2) looks like on a finite sample.
pub fn growth_envelope(nl: &NonlinearitySpec, xi: f64, t_grid: &[f64]) -> Result<f64, ModelError> {
    if !(xi > 0.0) {
        return Err(ModelError::Parameter("xi must be positive".into()));
    }
    if t_grid.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(ModelError::Parameter("t_grid must be positive and finite".into()));
    }
    let theta = nl.theta();
    let required: Vec<f64> = t_grid
        .iter()
        .map(|&t| ((nl.f(t).abs() - xi * t) / t.powf(theta - 1.0)).max(0.0))
        .collect();
    let Some((argmax, &c)) = required.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)) else {
        return Ok(0.0);
    };
    let n = required.len();
    let tail = (n / 10).max(3).min(n);
    let rising_tail = n >= 3 && argmax == n - 1 && required[n - tail..].windows(2).all(|w| w[1] > w[0]);
    if rising_tail {
        return Err(ModelError::UnboundedEnvelope {
            t: t_grid[n - 1],
            last_ratio: c,
        });
    }
    Ok(c)
}

/// Points at which the hypotheses are probed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingPlan {
    /// Positive sample points for the nonlinearity.
    pub t_grid: Vec<f64>,
    /// Radii `|y|` for the potential and the kernel.
    pub radii: Vec<f64>,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        SamplingPlan {
            t_grid: log_space(1e-3, 1e3, 1000),
            radii: (0..=500).map(|i| i as f64 * 0.1).collect(),
        }
    }
}

/// `count` points geometrically spaced on `[lo, hi]`.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && count >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    /// A limit statement whose finite sample trend agrees with it.
    SampledConsistent,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub status: CheckStatus,
    /// Sample point at which the check failed.
    pub witness: Option<f64>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<HypothesisCheck>,
}

impl ValidationReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn get(&self, name: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Strict-monotonicity tolerance for (f3) on consecutive samples.
const F3_TOLERANCE: f64 = 1e-10;

pub fn validate_hypotheses(spec: &ModelSpec, plan: &SamplingPlan) -> Result<ValidationReport, ModelError> {
    spec.check_admissible()?;
    if plan.t_grid.len() < 2 || plan.t_grid.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(ModelError::Parameter("t_grid needs >= 2 positive points".into()));
    }
    let mut t_grid = plan.t_grid.clone();
    t_grid.sort_by(f64::total_cmp);
    let nl = &spec.nonlinearity;
    let theta = nl.theta();
    let mut checks = Vec::new();

    // (f) sign convention and non-negativity.
    let negative = t_grid.iter().find(|&&t| nl.f(-t) != 0.0 || nl.primitive(-t) != 0.0);
    checks.push(HypothesisCheck {
        name: "sign_convention".into(),
        status: status(negative.is_none()),
        witness: negative.map(|&t| -t),
        detail: "f(t) = F(t) = 0 for t < 0".into(),
    });
    let neg_f = t_grid.iter().find(|&&t| nl.f(t) < 0.0);
    checks.push(HypothesisCheck {
        name: "f_nonnegative".into(),
        status: status(neg_f.is_none()),
        witness: neg_f.copied(),
        detail: "f >= 0 on [0, inf)".into(),
    });

    // F(0) = 0 and F' = f via Gauss-Legendre on consecutive intervals.
    let mut worst: (f64, f64) = (0.0, 0.0);
    for w in t_grid.windows(2) {
        let quad = gauss_legendre(|s| nl.f(s), w[0], w[1], 4);
        let exact = nl.primitive(w[1]) - nl.primitive(w[0]);
        let rel = (quad - exact).abs() / exact.abs().max(f64::MIN_POSITIVE);
        if rel > worst.0 && exact != 0.0 {
            worst = (rel, w[1]);
        }
    }
    let primitive_ok = nl.primitive(0.0) == 0.0 && worst.0 < 1e-8;
    checks.push(HypothesisCheck {
        name: "primitive".into(),
        status: status(primitive_ok),
        witness: (!primitive_ok).then_some(worst.1),
        detail: format!("F(0) = 0 and quadrature of f matches F (worst rel err {:.3e})", worst.0),
    });

    // (f1): |f(t)|/t -> 0 as t -> 0.
    let small: Vec<f64> = (1..=12).map(|k| 10f64.powi(-k)).collect();
    let f1: Vec<f64> = small.iter().map(|&t| nl.f(t).abs() / t).collect();
    checks.push(trend_check("f1", &small, &f1, "|f(t)|/t decreasing to 0 as t -> 0"));

    // (f2): f(t)/t^{theta-1} -> 0 as t -> inf.
    let large: Vec<f64> = (1..=12).map(|k| 10f64.powi(k)).collect();
    let f2: Vec<f64> = large.iter().map(|&t| nl.f(t) / t.powf(theta - 1.0)).collect();
    checks.push(trend_check(
        "f2",
        &large,
        &f2,
        "f(t)/t^(theta-1) decreasing to 0 as t -> inf",
    ));

    // (f3): f(t)/t strictly increasing.
    let ratios: Vec<f64> = t_grid.iter().map(|&t| nl.f(t) / t).collect();
    let f3_fail = t_grid
        .windows(2)
        .zip(ratios.windows(2))
        .find(|(_, g)| !(g[1] - g[0] > F3_TOLERANCE * g[0].abs()))
        .map(|(t, _)| t[1]);
    checks.push(HypothesisCheck {
        name: "f3".into(),
        status: status(f3_fail.is_none()),
        witness: f3_fail,
        detail: "f(t)/t strictly increasing on t_grid".into(),
    });

    // (V1)
    let v = &spec.potential;
    let v1_fail = plan.radii.iter().find(|&&r| v.eval(r) + spec.v0 < 0.0);
    checks.push(HypothesisCheck {
        name: "v1".into(),
        status: status(v1_fail.is_none()),
        witness: v1_fail.copied(),
        detail: "V(y) + V0 >= 0 on sampled radii".into(),
    });

    // (V2): V -> V_inf > 0.
    let v_inf = v.v_infinity();
    let far: Vec<f64> = (0..=6).map(|k| 10f64.powi(k)).collect();
    let gaps: Vec<f64> = far.iter().map(|&r| (v.eval(r) - v_inf).abs()).collect();
    let mut v2 = trend_check("v2", &far, &gaps, "|V(y) - V_inf| decreasing to 0");
    if !(v_inf > 0.0) {
        v2.status = CheckStatus::Fail;
        v2.detail = format!("V_inf = {v_inf} must be positive");
    }
    checks.push(v2);

    // (V3): V <= V_inf, V not identically V_inf.
    let above = plan.radii.iter().find(|&&r| v.eval(r) > v_inf);
    let strict_somewhere = plan.radii.iter().any(|&r| v.eval(r) < v_inf);
    checks.push(HypothesisCheck {
        name: "v3".into(),
        status: status(above.is_none() && strict_somewhere),
        witness: above.copied(),
        detail: if strict_somewhere {
            "V <= V_inf on sampled radii".into()
        } else {
            "V coincides with V_inf on every sampled radius".into()
        },
    });

    // (Wh)
    let w_neg = plan.radii.iter().find(|&&r| spec.kernel.eval(r) < 0.0);
    checks.push(HypothesisCheck {
        name: "wh_nonnegative".into(),
        status: status(w_neg.is_none()),
        witness: w_neg.copied(),
        detail: "W = W1 + W2 >= 0 on sampled radii (radial by construction)".into(),
    });
    let threshold = kernel_exponent_threshold(spec.dim, theta);
    checks.push(HypothesisCheck {
        name: "wh_exponent".into(),
        status: CheckStatus::Pass,
        witness: None,
        detail: match &spec.kernel.integrable {
            Some(w1) => format!("r = {} > {}", w1.exponent(), threshold),
            None => "no integrable part".into(),
        },
    });

    Ok(ValidationReport { checks })
}

fn status(ok: bool) -> CheckStatus {
    if ok {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    }
}

/// Accepts a sampled limit-to-zero statement when the values are non-increasing
/// and end below half of where they started (or are identically zero).
fn trend_check(name: &str, points: &[f64], values: &[f64], detail: &str) -> HypothesisCheck {
    let broken = points
        .iter()
        .zip(values.windows(2))
        .find(|(_, v)| !(v[1] <= v[0]))
        .map(|(&p, _)| p);
    let first = values[0];
    let last = *values.last().unwrap();
    let shrinks = last == 0.0 || last < 0.5 * first;
    let ok = broken.is_none() && shrinks && values.iter().all(|v| v.is_finite());
    HypothesisCheck {
        name: name.into(),
        status: if ok {
            CheckStatus::SampledConsistent
        } else {
            CheckStatus::Fail
        },
        witness: if ok { None } else { broken.or(points.last().copied()) },
        detail: detail.into(),
    }
}

// 5-point Gauss-Legendre nodes/weights on [-1, 1].
const GL_NODES: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683_1,
    0.538_469_310_105_683_1,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_47,
    0.478_628_670_499_366_47,
    0.236_926_885_056_189_08,
    0.236_926_885_056_189_08,
];

/// Composite 5-point Gauss-Legendre rule with `panels` equal panels.
pub fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let width = (b - a) / panels as f64;
    let mut total = 0.0;
    for i in 0..panels {
        let lo = a + i as f64 * width;
        let mid = lo + 0.5 * width;
        let half = 0.5 * width;
        let s: f64 = GL_NODES
            .iter()
            .zip(GL_WEIGHTS.iter())
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum();
        total += s * half;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec_with_w1(r: f64) -> ModelSpec {
        ModelSpec {
            kernel: KernelSpec {
                bounded: None,
                integrable: Some(IntegrableKernel::Gaussian {
                    amplitude: 1.0,
                    width: 1.0,
                    r,
                }),
            },
            ..ModelSpec::desk_default()
        }
    }

    #[test]
    fn critical_exponents_in_two_dimensions() {
        assert_eq!(trace_critical_exponent(2), 4.0);
        assert_eq!(half_space_critical_exponent(2), 6.0);
        assert_eq!(trace_critical_exponent(3), 3.0);
        assert!(trace_critical_exponent(1).is_infinite());
    }

    #[test]
    fn kernel_threshold_n2_theta_3_5() {
        // 2 / (2·(2 − 3.5) + 3.5) = 2 / 0.5
        assert!((kernel_exponent_threshold(2, 3.5) - 4.0).abs() < 1e-14);
        let plan = SamplingPlan::default();
        assert!(validate_hypotheses(&spec_with_w1(5.0), &plan).is_ok());
        assert!(matches!(
            validate_hypotheses(&spec_with_w1(4.0), &plan),
            Err(ModelError::KernelExponent { .. })
        ));
    }

    #[test]
    fn v0_at_mass_is_rejected() {
        let spec = ModelSpec {
            v0: 1.0,
            ..ModelSpec::desk_default()
        };
        assert!(matches!(
            validate_hypotheses(&spec, &SamplingPlan::default()),
            Err(ModelError::V0Range { .. })
        ));
    }

    #[test]
    fn theta_outside_range_is_rejected() {
        let spec = ModelSpec {
            nonlinearity: NonlinearitySpec::Power { p: 3.0, theta: 4.0 },
            ..ModelSpec::desk_default()
        };
        assert!(matches!(spec.check_admissible(), Err(ModelError::ThetaRange { .. })));
    }

    #[test]
    fn one_dimension_requires_flag() {
        let mut spec = ModelSpec {
            dim: 1,
            ..ModelSpec::desk_default()
        };
        assert_eq!(spec.check_admissible(), Err(ModelError::OneDimensional));
        spec.outside_hypotheses = true;
        assert!(spec.check_admissible().is_ok());
    }

    #[test]
    fn default_instance_satisfies_everything() {
        let report = validate_hypotheses(&ModelSpec::desk_default(), &SamplingPlan::default()).unwrap();
        assert!(report.all_hold(), "{report:#?}");
        assert_eq!(report.get("f3").unwrap().status, CheckStatus::Pass);
        assert_eq!(report.get("f1").unwrap().status, CheckStatus::SampledConsistent);
        assert_eq!(report.get("v2").unwrap().status, CheckStatus::SampledConsistent);
    }

    #[test]
    fn constant_potential_fails_v3() {
        let spec = ModelSpec::desk_default().limit_problem();
        let report = validate_hypotheses(&spec, &SamplingPlan::default()).unwrap();
        assert_eq!(report.get("v3").unwrap().status, CheckStatus::Fail);
    }

    #[test]
    fn superlinear_growth_fails_f2() {
        let spec = ModelSpec {
            nonlinearity: NonlinearitySpec::Power { p: 4.0, theta: 3.5 },
            ..ModelSpec::desk_default()
        };
        let report = validate_hypotheses(&spec, &SamplingPlan::default()).unwrap();
        assert_eq!(report.get("f2").unwrap().status, CheckStatus::Fail);
    }

    #[test]
    fn validation_is_deterministic() {
        let plan = SamplingPlan::default();
        let a = validate_hypotheses(&ModelSpec::desk_default(), &plan).unwrap();
        let b = validate_hypotheses(&ModelSpec::desk_default(), &plan).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn ar_gap_of_square() {
        let nl = NonlinearitySpec::Power { p: 3.0, theta: 3.5 };
        assert!((ar_gap(&nl, 1.0) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(ar_gap(&nl, 0.0), 0.0);
        assert_eq!(ar_gap(&nl, -2.0), 0.0);
    }

    #[test]
    fn envelope_of_square_is_finite() {
        let nl = NonlinearitySpec::Power { p: 3.0, theta: 3.5 };
        let grid = log_space(1e-3, 1e3, 2001);
        let c = growth_envelope(&nl, 1.0, &grid).unwrap();
        // max of t^{-1/2} − t^{-3/2} sits at t = 3
        let exact = 3f64.powf(-0.5) - 3f64.powf(-1.5);
        assert!((c - exact).abs() < 1e-4, "{c} vs {exact}");
    }

    #[test]
    fn envelope_of_zero_is_zero() {
        let nl = NonlinearitySpec::PowerSum {
            a: 0.0,
            p: 3.0,
            b: 0.0,
            q: 3.0,
            theta: 3.5,
        };
        assert_eq!(growth_envelope(&nl, 1.0, &log_space(1e-3, 1e3, 100)).unwrap(), 0.0);
    }

    #[test]
    fn envelope_of_cube_diverges() {
        let nl = NonlinearitySpec::Power { p: 4.0, theta: 3.5 };
        assert!(matches!(
            growth_envelope(&nl, 1.0, &log_space(1e-3, 1e3, 500)),
            Err(ModelError::UnboundedEnvelope { .. })
        ));
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = spec_with_w1(5.0);
        let text = serde_json::to_string_pretty(&spec).unwrap();
        let back: ModelSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(spec, back);
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut value = serde_json::to_value(ModelSpec::desk_default()).unwrap();
        value["potential"]["colour"] = serde_json::json!(1);
        assert!(serde_json::from_value::<ModelSpec>(value).is_err());
        let mut value = serde_json::to_value(ModelSpec::desk_default()).unwrap();
        value["extra"] = serde_json::json!(1);
        assert!(serde_json::from_value::<ModelSpec>(value).is_err());
    }
}
