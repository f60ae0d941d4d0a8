use serde::{Deserialize, Serialize};

use super::decay::WindowPolicy;
use crate::spectral::{Field, Transform};
use crate::witness::InequalityWitness;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    /// `−min u ≤ 10⁻¹⁰·max u`
    pub witness: InequalityWitness,
    pub min_value: f64,
    pub min_position: Vec<f64>,
    /// Minimum over `|y| ≤ lo_fraction·L/2` around the peak.
    pub core_min: f64,
    pub core_radius: f64,
}

pub fn positivity_check(u: &Field, policy: WindowPolicy) -> PositivityReport {
    let grid = u.grid();
    let at = u.argmin();
    let pos = grid.position(at);
    let centered = u.centered_on_peak();
    let core_radius = policy.lo_fraction * 0.5 * grid.box_length();
    let core_min = centered
        .values()
        .iter()
        .enumerate()
        .filter(|(i, _)| grid.radius(*i) <= core_radius)
        .map(|(_, v)| *v)
        .fold(f64::INFINITY, f64::min);
    PositivityReport {
        witness: InequalityWitness::new(-u.min(), 1e-10 * u.max(), "positivity"),
        min_value: u.min(),
        min_position: pos[..grid.dim()].to_vec(),
        core_min,
        core_radius,
    }
}

/// Shell-averaged `|û|` against `|k|` for shells of width `1/L` below Nyquist.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralDecayProfile {
    pub wave_numbers: Vec<f64>,
    pub shell_mean: Vec<f64>,
    pub peak: f64,
    /// Last shell mean relative to the peak.
    pub tail_ratio: f64,
    /// Slope of `log shell_mean` against `log |k|` over `[0.3, 0.6]` of Nyquist.
    pub high_frequency_slope: f64,
    /// Slope over `[0.6, 0.9]` of Nyquist; more negative than
    /// `high_frequency_slope` for super-algebraic decay.
    pub top_slope: f64,
    pub super_algebraic: bool,
}

fn log_slope(ks: &[f64], vs: &[f64], lo: f64, hi: f64) -> f64 {
    let pts: Vec<(f64, f64)> = ks
        .iter()
        .zip(vs)
        .filter(|(k, v)| **k >= lo && **k <= hi && **v > 0.0)
        .map(|(k, v)| (k.ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NEG_INFINITY;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

pub fn smoothness_descriptor(u: &Field) -> SpectralDecayProfile {
    let grid = *u.grid();
    let hat = Transform::new(grid)
        .to_spectral(u)
        .expect("fields are finite by construction");
    let l = grid.box_length();
    let nyquist = grid.nyquist();
    let shells = (nyquist * l).floor() as usize;
    let mut sum = vec![0.0; shells + 1];
    let mut count = vec![0usize; shells + 1];
    for (i, c) in hat.coeffs().iter().enumerate() {
        let k = grid.wave_number_sq(i).sqrt();
        let b = (k * l).round() as usize;
        if b <= shells {
            sum[b] += c.norm();
            count[b] += 1;
        }
    }
    let mut wave_numbers = Vec::new();
    let mut shell_mean = Vec::new();
    for b in 0..=shells {
        if count[b] > 0 {
            wave_numbers.push(b as f64 / l);
            shell_mean.push(sum[b] / count[b] as f64);
        }
    }
    let peak = shell_mean.iter().copied().fold(0.0, f64::max);
    let tail_ratio = match (shell_mean.last(), peak > 0.0) {
        (Some(t), true) => t / peak,
        _ => 0.0,
    };
    let high = log_slope(&wave_numbers, &shell_mean, 0.3 * nyquist, 0.6 * nyquist);
    let top = log_slope(&wave_numbers, &shell_mean, 0.6 * nyquist, 0.9 * nyquist);
    SpectralDecayProfile {
        super_algebraic: top < high - 1.0 || tail_ratio < 1e-13,
        wave_numbers,
        shell_mean,
        peak,
        tail_ratio,
        high_frequency_slope: high,
        top_slope: top,
    }
}
