use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{Field, Grid, SpectralError, SpectralField};

/// Planned forward/inverse transforms for one grid.
///
/// `to_spectral` computes `û(k) = h^N Σ_j u_j e^{−2πi k·(j h)}`, the Riemann sum
/// of the continuum Fourier integral (phases measured from the first node).
/// `from_spectral` is its exact inverse, `u_j = L^{−N} Σ_k û(k) e^{2πi k·(j h)}`.
/// Cloning shares the plans; each call allocates its own scratch.
#[derive(Clone)]
pub struct Transform {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Transform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transform").field("grid", &self.grid).finish()
    }
}

impl Transform {
    pub fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::new();
        let m = grid.points_per_axis();
        Transform {
            grid,
            forward: planner.plan_fft_forward(m),
            inverse: planner.plan_fft_inverse(m),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn to_spectral(&self, u: &Field) -> Result<SpectralField, SpectralError> {
        self.check_grid(u.grid())?;
        u.check_finite()?;
        let mut buf: Vec<Complex64> = u.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward_in_place(&mut buf);
        SpectralField::new(self.grid, buf)
    }

    /// Real part of the inverse transform.
    pub fn from_spectral(&self, s: &SpectralField) -> Result<Field, SpectralError> {
        self.check_grid(s.grid())?;
        let mut buf = s.coeffs().to_vec();
        self.inverse_in_place(&mut buf);
        Field::from_values(self.grid, buf.into_iter().map(|c| c.re).collect())
    }

    /// Forward transform including the `h^N` weight.
    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        self.fft_nd(buf, &self.forward);
        let w = self.grid.cell_volume();
        buf.iter_mut().for_each(|c| *c *= w);
    }

    /// Inverse transform including the `L^{−N}` weight.
    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        self.fft_nd(buf, &self.inverse);
        let w = 1.0 / self.grid.box_volume();
        buf.iter_mut().for_each(|c| *c *= w);
    }

    /// Applies a real Fourier multiplier given in DFT order.
    pub fn apply_multiplier(&self, u: &Field, symbol: &[f64]) -> Result<Field, SpectralError> {
        let mut s = self.to_spectral(u)?;
        s.multiply(symbol);
        self.from_spectral(&s)
    }

    fn check_grid(&self, g: &Grid) -> Result<(), SpectralError> {
        if *g != self.grid {
            return Err(SpectralError::GridMismatch);
        }
        Ok(())
    }

    // Unnormalized N-d transform: batch along the contiguous axis, then gather
    // each remaining axis into contiguous lines.
    fn fft_nd(&self, buf: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let m = self.grid.points_per_axis();
        let dim = self.grid.dim();
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(buf, &mut scratch);
        if dim == 1 {
            return;
        }
        let total = buf.len();
        let mut lines = vec![Complex64::new(0.0, 0.0); total];
        for axis in (0..dim - 1).rev() {
            let stride = m.pow((dim - 1 - axis) as u32);
            let block = stride * m;
            // gather: line index = (outer, inner), element = position along axis
            let mut line = 0;
            for outer in (0..total).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    let dst = &mut lines[line * m..(line + 1) * m];
                    for (j, d) in dst.iter_mut().enumerate() {
                        *d = buf[base + j * stride];
                    }
                    line += 1;
                }
            }
            plan.process_with_scratch(&mut lines, &mut scratch);
            let mut line = 0;
            for outer in (0..total).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    let src = &lines[line * m..(line + 1) * m];
                    for (j, s) in src.iter().enumerate() {
                        buf[base + j * stride] = *s;
                    }
                    line += 1;
                }
            }
        }
    }
}

/// One-shot forward transform.
pub fn to_spectral(u: &Field) -> Result<SpectralField, SpectralError> {
    Transform::new(*u.grid()).to_spectral(u)
}

/// One-shot inverse transform.
pub fn from_spectral(s: &SpectralField) -> Result<Field, SpectralError> {
    Transform::new(*s.grid()).from_spectral(s)
}
