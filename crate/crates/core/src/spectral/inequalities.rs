//! Discrete Young and weak Hardy–Littlewood–Sobolev inequalities on sampled fields.

use serde::{Deserialize, Serialize};

use super::{convolve_sampled, Field, SpectralError};
use crate::witness::InequalityWitness;

const EXPONENT_TOL: f64 = 1e-12;

fn reciprocal(p: f64) -> f64 {
    if p.is_infinite() {
        0.0
    } else {
        1.0 / p
    }
}

/// `|w ∗ g|_s ≤ |w|_p |g|_q` for `1/p + 1/q = 1 + 1/s`, all norms `h^N`-weighted.
///
/// On the lattice torus with counting measure scaled by `h^N` this holds with
/// constant one, so the check is sharp up to rounding.
pub fn check_hausdorff_young(w: &Field, g: &Field, p: f64, q: f64, s: f64) -> Result<InequalityWitness, SpectralError> {
    for e in [p, q, s] {
        if !(e >= 1.0) {
            return Err(SpectralError::Exponents(format!("exponent {e} < 1")));
        }
    }
    let mismatch = reciprocal(p) + reciprocal(q) - 1.0 - reciprocal(s);
    if mismatch.abs() > EXPONENT_TOL {
        return Err(SpectralError::Exponents(format!(
            "1/p + 1/q − 1 − 1/s = {mismatch:e} for (p, q, s) = ({p}, {q}, {s})"
        )));
    }
    let conv = convolve_sampled(w, g)?;
    Ok(InequalityWitness::new(
        conv.lp_norm(s),
        w.lp_norm(p) * g.lp_norm(q),
        format!("hausdorff_young p={p} q={q} s={s}"),
    ))
}

/// Lattice power-law kernel `h(d) = |d|^{−N/q}`, capped at the origin by its value
/// at half a cell, `(h/2)^{−N/q}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawKernel {
    pub dim: usize,
    pub q: f64,
    pub spacing: f64,
}

impl PowerLawKernel {
    pub fn exponent(&self) -> f64 {
        self.dim as f64 / self.q
    }

    pub fn eval(&self, d: f64) -> f64 {
        let lambda = self.exponent();
        if d == 0.0 {
            (0.5 * self.spacing).powf(-lambda)
        } else {
            d.powf(-lambda)
        }
    }

    /// `sup_t t·|{h > t}|^{1/q}` of the untruncated power law, `ω_N^{1/q}` with
    /// `ω_N` the unit-ball volume. The cap only lowers the distribution function.
    pub fn weak_norm(&self) -> f64 {
        unit_ball_volume(self.dim).powf(1.0 / self.q)
    }
}

pub fn unit_ball_volume(dim: usize) -> f64 {
    use std::f64::consts::PI;
    match dim {
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => panic!("dimension {dim} not supported"),
    }
}

/// `N_{p,q,r}` such that `∬ f h g ≤ N |f|_p |g|_r |h|_{q_w}` for `h = |·|^{−N/q}`:
/// the explicit (non-sharp) constant of the Lieb–Loss proof divided by the weak norm.
pub fn hls_constant(dim: usize, p: f64, q: f64, r: f64) -> f64 {
    let n = dim as f64;
    let lambda = n / q;
    let a = lambda / n;
    let front = n / ((n - lambda) * p * r);
    front * ((a / (1.0 - 1.0 / p)).powf(a) + (a / (1.0 - 1.0 / r)).powf(a))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HlsWitness {
    pub witness: InequalityWitness,
    /// `lhs / (|f|_p |g|_r |h|_{q_w})`; `None` when the denominator vanishes.
    pub empirical_constant: Option<f64>,
    pub constant_bound: f64,
    pub weak_norm: f64,
}

/// Brute-force `Σ_t Σ_s f(t) h(t−s) g(s) h^{2N}` over the lattice (no periodic wrap)
/// against `N_{p,q,r} |f|_p |g|_r |h|_{q_w}`.
pub fn check_weak_hls(f: &Field, g: &Field, p: f64, q: f64, r: f64) -> Result<HlsWitness, SpectralError> {
    if f.grid() != g.grid() {
        return Err(SpectralError::GridMismatch);
    }
    for e in [p, q, r] {
        if !(e > 1.0 && e.is_finite()) {
            return Err(SpectralError::Exponents(format!("exponent {e} not in (1, ∞)")));
        }
    }
    let mismatch = 1.0 / p + 1.0 / q + 1.0 / r - 2.0;
    if mismatch.abs() > EXPONENT_TOL {
        return Err(SpectralError::Exponents(format!("1/p + 1/q + 1/r − 2 = {mismatch:e}")));
    }
    let grid = f.grid();
    let kernel = PowerLawKernel {
        dim: grid.dim(),
        q,
        spacing: grid.spacing(),
    };
    let positions: Vec<[f64; 3]> = (0..grid.len()).map(|i| grid.position(i)).collect();
    let mut total = 0.0;
    for (ti, &ft) in f.values().iter().enumerate() {
        if ft == 0.0 {
            continue;
        }
        let yt = positions[ti];
        let mut row = 0.0;
        for (si, &gs) in g.values().iter().enumerate() {
            if gs == 0.0 {
                continue;
            }
            let ys = positions[si];
            let d = (0..grid.dim()).map(|a| (yt[a] - ys[a]).powi(2)).sum::<f64>().sqrt();
            row += kernel.eval(d) * gs;
        }
        total += ft * row;
    }
    let w2 = grid.cell_volume() * grid.cell_volume();
    let lhs = total * w2;
    let constant = hls_constant(grid.dim(), p, q, r);
    let weak = kernel.weak_norm();
    let norms = f.lp_norm(p) * g.lp_norm(r);
    Ok(HlsWitness {
        witness: InequalityWitness::new(lhs, constant * norms * weak, format!("weak_hls p={p} q={q} r={r}")),
        empirical_constant: (norms > 0.0).then(|| lhs / (norms * weak)),
        constant_bound: constant,
        weak_norm: weak,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{delta_kernel, Grid};

    #[test]
    fn young_equality_for_nonnegative_l1() {
        let g = Grid::new(2, 64, 20.0).unwrap();
        let a = Field::gaussian(g, &[0.0, 0.0], 1.0);
        let b = Field::gaussian(g, &[1.0, -1.0], 1.3);
        let w = check_hausdorff_young(&a, &b, 1.0, 1.0, 1.0).unwrap();
        assert!(w.pass);
        assert!((w.lhs - w.rhs).abs() < 1e-10 * w.rhs);
    }

    #[test]
    fn young_with_zero_and_delta() {
        let g = Grid::new(2, 32, 10.0).unwrap();
        let a = Field::gaussian(g, &[0.0, 0.0], 1.0);
        let zero = check_hausdorff_young(&a, &Field::zeros(g), 1.0, 2.0, 2.0).unwrap();
        assert_eq!((zero.lhs, zero.rhs), (0.0, 0.0));
        assert!(zero.pass);
        let id = check_hausdorff_young(&delta_kernel(g), &a, 1.0, 2.0, 2.0).unwrap();
        assert!(id.pass);
        assert!((id.lhs - id.rhs).abs() < 1e-12 * id.rhs);
    }

    #[test]
    fn mismatched_exponents_rejected() {
        let g = Grid::new(1, 8, 1.0).unwrap();
        let a = Field::zeros(g);
        assert!(check_hausdorff_young(&a, &a, 1.0, 2.0, 3.0).is_err());
        assert!(check_weak_hls(&a, &a, 2.0, 2.0, 2.0).is_err());
    }

    #[test]
    fn hls_single_cell_is_self_interaction() {
        let g = Grid::new(1, 32, 8.0).unwrap();
        let mut f = Field::zeros(g);
        f.values_mut()[10] = 1.0;
        let (p, q, r) = (4.0 / 3.0, 2.0, 4.0 / 3.0);
        let w = check_weak_hls(&f, &f, p, q, r).unwrap();
        let h = g.spacing();
        let expected = (0.5 * h).powf(-0.5) * h * h;
        assert!((w.witness.lhs - expected).abs() < 1e-14);
        assert!(w.witness.pass);
    }

    #[test]
    fn hls_constant_n1_diagonal() {
        // λ = 1/2, p = r = 4/3: (9/8)·2·√2
        let c = hls_constant(1, 4.0 / 3.0, 2.0, 4.0 / 3.0);
        assert!((c - 9.0 / 8.0 * 2.0 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn hls_zero_field() {
        let g = Grid::new(1, 32, 8.0).unwrap();
        let z = Field::zeros(g);
        let w = check_weak_hls(&z, &z, 1.5, 1.5, 1.5).unwrap();
        assert_eq!(w.witness.lhs, 0.0);
        assert!(w.witness.pass);
        assert!(w.empirical_constant.is_none());
    }
}
