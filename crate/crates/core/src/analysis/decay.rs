use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::model::ModelSpec;
use crate::spectral::Field;

/// Fit window as fractions of the half box length `L/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindowPolicy {
    pub lo_fraction: f64,
    pub hi_fraction: f64,
}

impl Default for WindowPolicy {
    fn default() -> Self {
        WindowPolicy {
            lo_fraction: 0.3,
            hi_fraction: 0.45,
        }
    }
}

/// Log-linear fit `profile(r) ≈ c_hat·e^{−delta_hat·r}` of the radial max profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Radius of the maximizing node in each shell of width `h`.
    pub radii: Vec<f64>,
    /// `max |u|` over each shell.
    pub profile: Vec<f64>,
    pub r_lo: f64,
    pub r_hi: f64,
    pub points: usize,
    pub delta_hat: f64,
    pub c_hat: f64,
    pub r_squared: f64,
    /// Coefficient of `r²` in a quadratic fit of `−log profile` over the window.
    pub curvature: f64,
    /// Set when the curvature term changes the slope by more than 5% across the window.
    pub curvature_flag: bool,
    /// Set when the window had to stop short of `r_hi` at a zero or subnormal value.
    pub window_shrunk: bool,
}

impl DecayFit {
    pub fn envelope(&self, r: f64) -> f64 {
        self.c_hat * (-self.delta_hat * r).exp()
    }
}

fn radial_max_profile(u: &Field) -> (Vec<f64>, Vec<f64>) {
    let grid = u.grid();
    let h = grid.spacing();
    let shells = (grid.box_length() * (grid.dim() as f64).sqrt() / h).ceil() as usize + 2;
    let mut best: Vec<Option<(f64, f64)>> = vec![None; shells];
    for (i, &v) in u.values().iter().enumerate() {
        let r = grid.radius(i);
        let b = (r / h).round() as usize;
        let a = v.abs();
        match best[b] {
            Some((_, m)) if m >= a => {}
            _ => best[b] = Some((r, a)),
        }
    }
    best.into_iter().flatten().unzip()
}

/// Fits the exponential tail of `u` after moving its peak onto the origin node.
pub fn fit_decay(u: &Field, policy: WindowPolicy) -> Result<DecayFit, AnalysisError> {
    if !(u.max() > 0.0) {
        return Err(AnalysisError::NonPositive);
    }
    let centered = u.centered_on_peak();
    let (radii, profile) = radial_max_profile(&centered);
    let half = 0.5 * u.grid().box_length();
    let r_lo = policy.lo_fraction * half;
    let mut r_hi = policy.hi_fraction * half;
    let mut window_shrunk = false;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&r, &p) in radii.iter().zip(&profile) {
        if r < r_lo || r > r_hi {
            continue;
        }
        if !(p >= f64::MIN_POSITIVE) {
            window_shrunk = true;
            r_hi = xs.last().copied().unwrap_or(r_lo);
            break;
        }
        xs.push(r);
        ys.push(-p.ln());
    }
    if xs.len() < 3 {
        return Err(AnalysisError::InsufficientWindow {
            r_lo,
            r_hi,
            points: xs.len(),
        });
    }
    let (intercept, slope, r_squared) = linear_fit(&xs, &ys);
    if !(slope > 0.0) {
        return Err(AnalysisError::NoDecay(slope));
    }
    let curvature = quadratic_coefficient(&xs, &ys);
    let span = xs[xs.len() - 1] - xs[0];
    Ok(DecayFit {
        points: xs.len(),
        radii,
        profile,
        r_lo,
        r_hi,
        delta_hat: slope,
        c_hat: (-intercept).exp(),
        r_squared,
        curvature,
        curvature_flag: (2.0 * curvature * span).abs() > 0.05 * slope,
        window_shrunk,
    })
}

/// `(a, b, r²)` of the least-squares line `y ≈ a + b x`.
fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - a - b * x).powi(2)).sum();
    let r2 = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (a, b, r2)
}

/// `c` in the least-squares fit `y ≈ a + b x + c x²`, in centered coordinates.
fn quadratic_coefficient(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let mut s = [0.0f64; 5];
    let mut t = [0.0f64; 3];
    for (&x, &y) in xs.iter().zip(ys) {
        let d = x - mx;
        let mut p = 1.0;
        for (k, sk) in s.iter_mut().enumerate() {
            *sk += p;
            if k < 3 {
                t[k] += p * y;
            }
            p *= d;
        }
    }
    // normal equations [s0 s1 s2; s1 s2 s3; s2 s3 s4] · (a, b, c) = t, by Cramer's rule
    let det3 = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let a = [[s[0], s[1], s[2]], [s[1], s[2], s[3]], [s[2], s[3], s[4]]];
    let det = det3(a);
    if det == 0.0 {
        return 0.0;
    }
    let mut c = a;
    for row in 0..3 {
        c[row][2] = t[row];
    }
    det3(c) / det
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayTheoremWitness {
    /// `0.8·(m − V₀)`
    pub threshold: f64,
    pub delta_hat: f64,
    /// `delta_hat − threshold`
    pub margin: f64,
    /// `0.9·delta_hat`
    pub envelope_rate: f64,
    /// `min over the window of c_hat·e^{−0.9·delta_hat·r} / profile(r)`; at least 1 on success.
    pub envelope_ratio: f64,
    pub r_squared: f64,
    pub vacuous: bool,
    pub pass: bool,
    pub policy: String,
}

/// Passes iff `delta_hat ≥ 0.8(m − V₀)` and `c_hat·e^{−0.9·delta_hat·r}` dominates
/// the shell maxima throughout the fit window.
pub fn verify_decay_theorem(fit: &DecayFit, spec: &ModelSpec) -> Result<DecayTheoremWitness, AnalysisError> {
    if fit.points < 3 {
        return Err(AnalysisError::InsufficientWindow {
            r_lo: fit.r_lo,
            r_hi: fit.r_hi,
            points: fit.points,
        });
    }
    let threshold = 0.8 * (spec.mass - spec.v0);
    let envelope_rate = 0.9 * fit.delta_hat;
    let envelope_ratio = fit
        .radii
        .iter()
        .zip(&fit.profile)
        .filter(|(r, _)| **r >= fit.r_lo && **r <= fit.r_hi)
        .map(|(&r, &p)| fit.c_hat * (-envelope_rate * r).exp() / p)
        .fold(f64::INFINITY, f64::min);
    let margin = fit.delta_hat - threshold;
    Ok(DecayTheoremWitness {
        threshold,
        delta_hat: fit.delta_hat,
        margin,
        envelope_rate,
        envelope_ratio,
        r_squared: fit.r_squared,
        vacuous: threshold <= 1e-6 * spec.mass,
        pass: margin >= 0.0 && envelope_ratio >= 1.0,
        policy: format!(
            "delta_hat >= 0.8 (m - v0); envelope rate 0.9 delta_hat over window [{}, {}]",
            fit.r_lo, fit.r_hi
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;

    fn exp_field(delta: f64) -> Field {
        let g = Grid::new(2, 256, 40.0).unwrap();
        Field::from_radial(g, |r| (-delta * r).exp())
    }

    #[test]
    fn recovers_synthetic_exponents() {
        for k in 0..10 {
            let delta = 0.2 + 0.2 * k as f64;
            let fit = fit_decay(&exp_field(delta), WindowPolicy::default()).unwrap();
            assert!((fit.delta_hat - delta).abs() < 1e-3, "{delta}: {}", fit.delta_hat);
            assert!(fit.r_squared > 0.9999);
            assert!(!fit.curvature_flag);
            assert!((fit.c_hat - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn gaussian_is_curved() {
        let g = Grid::new(2, 256, 40.0).unwrap();
        let fit = fit_decay(&Field::gaussian(g, &[0.0, 0.0], 3.0), WindowPolicy::default()).unwrap();
        assert!(fit.curvature_flag);
        assert!(fit.r_squared < 0.9999);
        assert!(fit.curvature > 0.0);
    }

    #[test]
    fn constant_is_rejected() {
        let g = Grid::new(2, 64, 40.0).unwrap();
        assert!(matches!(
            fit_decay(&Field::constant(g, 1.0), WindowPolicy::default()),
            Err(AnalysisError::NoDecay(_))
        ));
        assert_eq!(
            fit_decay(&Field::zeros(g), WindowPolicy::default()),
            Err(AnalysisError::NonPositive)
        );
    }

    #[test]
    fn translation_invariant() {
        let u = exp_field(0.9);
        let a = fit_decay(&u, WindowPolicy::default()).unwrap();
        let b = fit_decay(&u.shifted([17, -40, 0]), WindowPolicy::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn underflowing_window_is_shrunk() {
        let g = Grid::new(2, 256, 40.0).unwrap();
        let u = Field::from_radial(g, |r| if r < 7.5 { (-r).exp() } else { 0.0 });
        let fit = fit_decay(&u, WindowPolicy::default()).unwrap();
        assert!(fit.window_shrunk);
        assert!(fit.r_hi < 7.5);
        assert!((fit.delta_hat - 1.0).abs() < 1e-6);
    }

    #[test]
    fn theorem_check_margins() {
        let spec = ModelSpec::desk_default();
        let at_rate = fit_decay(&exp_field(0.75), WindowPolicy::default()).unwrap();
        let w = verify_decay_theorem(&at_rate, &spec).unwrap();
        assert!(w.pass);
        assert!((w.margin - 0.15).abs() < 1e-3);
        let slow = fit_decay(&exp_field(0.5), WindowPolicy::default()).unwrap();
        assert!(!verify_decay_theorem(&slow, &spec).unwrap().pass);
        let tight = ModelSpec {
            v0: spec.mass * (1.0 - 1e-9),
            ..spec.clone()
        };
        let w = verify_decay_theorem(&slow, &tight).unwrap();
        assert!(w.vacuous && w.pass);
    }

    #[test]
    fn enlarging_the_window_never_flips_to_fail() {
        let spec = ModelSpec::desk_default();
        for delta in [0.7, 1.0, 1.6] {
            let u = exp_field(delta);
            let mut passed = false;
            for hi in [0.4, 0.45, 0.5, 0.6, 0.7] {
                let policy = WindowPolicy {
                    lo_fraction: 0.3,
                    hi_fraction: hi,
                };
                let ok = verify_decay_theorem(&fit_decay(&u, policy).unwrap(), &spec)
                    .unwrap()
                    .pass;
                assert!(ok || !passed, "delta {delta}, hi {hi}");
                passed |= ok;
            }
        }
    }
}
