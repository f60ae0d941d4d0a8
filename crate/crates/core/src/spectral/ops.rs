use std::f64::consts::PI;

use num_complex::Complex64;

use super::{Field, Grid, SpectralError, Transform};
use crate::model::KernelSpec;

/// `√(4π²|k|² + m²)` on the frequency lattice, DFT order.
pub fn sqrt_symbol(grid: &Grid, mass: f64) -> Vec<f64> {
    let m2 = mass * mass;
    (0..grid.len())
        .map(|i| (4.0 * PI * PI * grid.wave_number_sq(i) + m2).sqrt())
        .collect()
}

/// `4π²|k|²`, the symbol of `−Δ`.
pub fn laplacian_symbol(grid: &Grid) -> Vec<f64> {
    (0..grid.len())
        .map(|i| 4.0 * PI * PI * grid.wave_number_sq(i))
        .collect()
}

/// `√(−Δ + m²) u`.
pub fn apply_sqrt_op(u: &Field, mass: f64) -> Result<Field, SpectralError> {
    check_mass(mass)?;
    let tr = Transform::new(*u.grid());
    tr.apply_multiplier(u, &sqrt_symbol(u.grid(), mass))
}

/// `½⟨√(−Δ+m²) u, u⟩ = ½ L^{−N} Σ_k √(4π²|k|²+m²) |û(k)|²`.
pub fn half_form(u: &Field, mass: f64) -> Result<f64, SpectralError> {
    check_mass(mass)?;
    let tr = Transform::new(*u.grid());
    let symbol = sqrt_symbol(u.grid(), mass);
    Ok(0.5 * tr.to_spectral(u)?.weighted_energy(|i| symbol[i]))
}

fn check_mass(mass: f64) -> Result<(), SpectralError> {
    if mass.is_finite() && mass > 0.0 {
        Ok(())
    } else {
        Err(SpectralError::Parameter(format!("mass {mass} must be > 0")))
    }
}

/// Samples a radial kernel at the nodes, `W(y_j)`, in the same centered layout
/// as any other field. Values on the box are used as-is (no decay assumed).
pub fn sample_kernel(kernel: &KernelSpec, grid: Grid) -> Field {
    Field::from_radial(grid, |r| kernel.eval(r))
}

/// Kernel spectrum prepared for repeated periodic convolutions.
#[derive(Clone, Debug)]
pub struct Convolver {
    transform: Transform,
    spectrum: Vec<Complex64>,
}

impl Convolver {
    /// `w` holds `W(y_j)` at the nodes (centered layout).
    pub fn new(transform: Transform, w: &Field) -> Result<Self, SpectralError> {
        let grid = *transform.grid();
        if *w.grid() != grid {
            return Err(SpectralError::GridMismatch);
        }
        w.check_finite()?;
        // Move the origin node to index 0 so that index j holds W at displacement j·h.
        let c = grid.center_index() as i64;
        let wrapped = w.shifted([-c, -c, -c]);
        let mut buf: Vec<Complex64> = wrapped.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        transform.forward_in_place(&mut buf);
        Ok(Convolver {
            transform,
            spectrum: buf,
        })
    }

    pub fn from_kernel(transform: Transform, kernel: &KernelSpec) -> Result<Self, SpectralError> {
        let w = sample_kernel(kernel, *transform.grid());
        Convolver::new(transform, &w)
    }

    pub fn transform(&self) -> &Transform {
        &self.transform
    }

    /// `(W ∗ g)(y_i) ≈ h^N Σ_j W(y_i − y_j) g_j` with periodic wrap.
    pub fn convolve(&self, g: &Field) -> Result<Field, SpectralError> {
        let mut s = self.transform.to_spectral(g)?;
        for (c, w) in s.coeffs_mut().iter_mut().zip(&self.spectrum) {
            *c *= w;
        }
        self.transform.from_spectral(&s)
    }
}

/// Periodic convolution of `g` with the closed-form kernel sampled on `g`'s grid.
pub fn convolve(kernel: &KernelSpec, g: &Field) -> Result<Field, SpectralError> {
    Convolver::from_kernel(Transform::new(*g.grid()), kernel)?.convolve(g)
}

/// Periodic convolution with a sampled kernel (centered layout).
pub fn convolve_sampled(w: &Field, g: &Field) -> Result<Field, SpectralError> {
    Convolver::new(Transform::new(*g.grid()), w)?.convolve(g)
}

/// Kernel `1/h^N` at the origin node, zero elsewhere.
pub fn delta_kernel(grid: Grid) -> Field {
    let mut w = Field::zeros(grid);
    let c = grid.center_index();
    let flat = grid.flatten([c, c, c]);
    w.values_mut()[flat] = 1.0 / grid.cell_volume();
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BoundedKernel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: Grid, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Field::from_values(grid, (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    // Direct O(n²) periodic sum, the reference for the FFT path.
    fn direct_convolution(w: &Field, g: &Field) -> Field {
        let grid = *g.grid();
        let m = grid.points_per_axis();
        let c = grid.center_index();
        let mut out = vec![0.0; grid.len()];
        for (i, o) in out.iter_mut().enumerate() {
            let yi = grid.unflatten(i);
            let mut acc = 0.0;
            for (j, &gj) in g.values().iter().enumerate() {
                let yj = grid.unflatten(j);
                let mut d = [0usize; 3];
                for a in 0..grid.dim() {
                    d[a] = (yi[a] + m + c - yj[a]) % m;
                }
                acc += w.values()[grid.flatten(d)] * gj;
            }
            *o = acc * grid.cell_volume();
        }
        Field::from_values(grid, out).unwrap()
    }

    #[test]
    fn constant_maps_to_mass_times_constant() {
        let g = Grid::new(2, 16, 10.0).unwrap();
        let out = apply_sqrt_op(&Field::constant(g, 2.5), 1.3).unwrap();
        for v in out.values() {
            assert!((v - 3.25).abs() < 1e-13);
        }
    }

    #[test]
    fn half_form_cross_check() {
        let g = Grid::new(2, 16, 6.0).unwrap();
        let u = random_field(g, 11);
        let a = half_form(&u, 0.7).unwrap();
        let b = 0.5 * u.inner(&apply_sqrt_op(&u, 0.7).unwrap());
        assert!((a - b).abs() < 1e-12 * a.abs());
        assert!(a >= 0.35 * u.inner(&u));
        assert_eq!(half_form(&Field::zeros(g), 1.0).unwrap(), 0.0);
    }

    #[test]
    fn delta_kernel_is_identity() {
        let g = Grid::new(2, 16, 4.0).unwrap();
        let u = random_field(g, 5);
        let out = convolve_sampled(&delta_kernel(g), &u).unwrap();
        for (a, b) in out.values().iter().zip(u.values()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn fft_convolution_matches_direct_sum() {
        let g = Grid::new(2, 16, 7.0).unwrap();
        let kernel = KernelSpec {
            bounded: Some(BoundedKernel::RationalPower { k: 2.0 }),
            integrable: None,
        };
        let w = sample_kernel(&kernel, g);
        let u = random_field(g, 9);
        let fast = convolve(&kernel, &u).unwrap();
        let slow = direct_convolution(&w, &u);
        let scale = slow.max_abs();
        for (a, b) in fast.values().iter().zip(slow.values()) {
            assert!((a - b).abs() < 1e-10 * scale);
        }
    }

    #[test]
    fn gaussian_convolution_has_summed_variances() {
        // exp(−y²/a²) ∗ exp(−y²/b²) = √π ab/√(a²+b²) · exp(−y²/(a²+b²))
        let g = Grid::new(1, 256, 40.0).unwrap();
        let (a, b) = (1.0f64, 1.5f64);
        let kernel = KernelSpec {
            bounded: Some(BoundedKernel::Gaussian {
                amplitude: 1.0,
                width: a,
            }),
            integrable: None,
        };
        let u = Field::gaussian(g, &[0.0], b);
        let out = convolve(&kernel, &u).unwrap();
        let s2 = a * a + b * b;
        let amp = PI.sqrt() * a * b / s2.sqrt();
        for (flat, &v) in out.values().iter().enumerate() {
            let y = g.coordinate(flat);
            if y.abs() < 5.0 {
                let exact = amp * (-y * y / s2).exp();
                assert!((v - exact).abs() < 1e-6 * exact, "y={y}: {v} vs {exact}");
            }
        }
    }

    #[test]
    fn nonnegative_inputs_give_nonnegative_output() {
        let g = Grid::new(2, 32, 20.0).unwrap();
        let kernel = KernelSpec {
            bounded: Some(BoundedKernel::RationalPower { k: 2.0 }),
            integrable: None,
        };
        let u = Field::gaussian(g, &[1.0, 0.0], 1.0);
        let out = convolve(&kernel, &u).unwrap();
        assert!(out.min() > -1e-12 * out.max());
    }
}
