use num_complex::Complex64;

use super::{Grid, SpectralError};

/// Real samples of a function on a [`Grid`], row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid) -> Self {
        Field {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Field {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self, SpectralError> {
        if values.len() != grid.len() {
            return Err(SpectralError::Length {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(SpectralError::NonFinite(i));
        }
        Ok(Field { grid, values })
    }

    /// Samples `func(y)` at every node; `y` has `grid.dim()` components.
    pub fn from_fn(grid: Grid, func: impl Fn(&[f64]) -> f64) -> Self {
        let dim = grid.dim();
        let values = (0..grid.len())
            .map(|flat| {
                let y = grid.position(flat);
                func(&y[..dim])
            })
            .collect();
        Field { grid, values }
    }

    /// Samples a radial profile `func(|y|)`.
    pub fn from_radial(grid: Grid, func: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.len()).map(|flat| func(grid.radius(flat))).collect();
        Field { grid, values }
    }

    /// `exp(−|y − center|²/width²)`.
    pub fn gaussian(grid: Grid, center: &[f64], width: f64) -> Self {
        Field::from_fn(grid, |y| {
            let r2: f64 = y
                .iter()
                .zip(center.iter().chain(std::iter::repeat(&0.0)))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            (-r2 / (width * width)).exp()
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub(crate) fn check_finite(&self) -> Result<(), SpectralError> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(i) => Err(SpectralError::NonFinite(i)),
            None => Ok(()),
        }
    }

    pub fn map(&self, op: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|&v| op(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Field, op: impl Fn(f64, f64) -> f64) -> Field {
        debug_assert_eq!(self.grid, other.grid);
        Field {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| op(a, b)).collect(),
        }
    }

    pub fn scaled(&self, a: f64) -> Field {
        self.map(|v| a * v)
    }

    /// `self + a·other`.
    pub fn axpy(&self, a: f64, other: &Field) -> Field {
        self.zip_map(other, |x, y| x + a * y)
    }

    pub fn positive_part(&self) -> Field {
        self.map(|v| v.max(0.0))
    }

    /// `h^N Σ u v`, pairwise summed in row-major order.
    pub fn inner(&self, other: &Field) -> f64 {
        let products: Vec<f64> = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        self.grid.cell_volume() * pairwise_sum(&products)
    }

    /// `(h^N Σ |u|^p)^{1/p}`; `p = ∞` gives the max norm.
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.max_abs();
        }
        let powers: Vec<f64> = self.values.iter().map(|v| v.abs().powf(p)).collect();
        (self.grid.cell_volume() * pairwise_sum(&powers)).powf(1.0 / p)
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    /// Sum of all samples times `h^N`.
    pub fn integral(&self) -> f64 {
        self.grid.cell_volume() * pairwise_sum(&self.values)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Flat index of the first maximal sample.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        best
    }

    pub fn argmin(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v < self.values[best] {
                best = i;
            }
        }
        best
    }

    /// Periodic lattice shift: the output at node `j` is the input at `j − shift`.
    pub fn shifted(&self, shift: [i64; 3]) -> Field {
        let m = self.grid.points_per_axis() as i64;
        let dim = self.grid.dim();
        let mut out = vec![0.0; self.values.len()];
        for (flat, &v) in self.values.iter().enumerate() {
            let mut idx = self.grid.unflatten(flat);
            for axis in 0..dim {
                idx[axis] = (idx[axis] as i64 + shift[axis]).rem_euclid(m) as usize;
            }
            out[self.grid.flatten(idx)] = v;
        }
        Field {
            grid: self.grid,
            values: out,
        }
    }

    /// Point reflection `y ↦ −y` on the torus.
    pub fn reflected(&self) -> Field {
        let m = self.grid.points_per_axis();
        let dim = self.grid.dim();
        let mut out = vec![0.0; self.values.len()];
        for (flat, &v) in self.values.iter().enumerate() {
            let mut idx = self.grid.unflatten(flat);
            for i in idx.iter_mut().take(dim) {
                *i = (m - *i) % m;
            }
            out[self.grid.flatten(idx)] = v;
        }
        Field {
            grid: self.grid,
            values: out,
        }
    }

    /// Shift that moves the first maximal sample onto the origin node.
    pub fn centering_shift(&self) -> [i64; 3] {
        let idx = self.grid.unflatten(self.argmax());
        let c = self.grid.center_index() as i64;
        let mut shift = [0i64; 3];
        for axis in 0..self.grid.dim() {
            shift[axis] = c - idx[axis] as i64;
        }
        shift
    }

    /// Copy translated so that its peak sits on the origin node.
    pub fn centered_on_peak(&self) -> Field {
        self.shifted(self.centering_shift())
    }

    /// Largest `|u|` over the outer faces of the box relative to `max |u|`.
    pub fn boundary_max_ratio(&self) -> f64 {
        let peak = self.max_abs();
        if peak == 0.0 {
            return 0.0;
        }
        let edge = self
            .values
            .iter()
            .enumerate()
            .filter(|(i, _)| self.grid.is_boundary(*i))
            .fold(0.0f64, |m, (_, v)| m.max(v.abs()));
        edge / peak
    }
}

/// Complex Fourier coefficients on the frequency lattice, DFT order.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self, SpectralError> {
        if coeffs.len() != grid.len() {
            return Err(SpectralError::Length {
                expected: grid.len(),
                actual: coeffs.len(),
            });
        }
        Ok(SpectralField { grid, coeffs })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Pointwise multiplication by a real symbol given in DFT order.
    pub fn multiply(&mut self, symbol: &[f64]) {
        for (c, &s) in self.coeffs.iter_mut().zip(symbol) {
            *c *= s;
        }
    }

    /// `L^{−N} Σ_k w(k)|û(k)|²`; with `w ≡ 1` this equals `‖u‖₂²` by Parseval.
    pub fn weighted_energy(&self, weight: impl Fn(usize) -> f64) -> f64 {
        let terms: Vec<f64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| weight(i) * c.norm_sqr())
            .collect();
        pairwise_sum(&terms) / self.grid.box_volume()
    }

    /// Flat index of the mode `−k`.
    pub fn conjugate_index(&self, flat: usize) -> usize {
        let m = self.grid.points_per_axis();
        let mut idx = self.grid.unflatten(flat);
        for i in idx.iter_mut().take(self.grid.dim()) {
            *i = (m - *i) % m;
        }
        self.grid.flatten(idx)
    }
}

/// Pairwise (cascade) summation with a fixed blocking, so results depend only
/// on the slice contents and order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 128;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}
