use serde::{Deserialize, Serialize};

use super::SpectralError;

/// Uniform periodic lattice on the box `[−L/2, L/2)^N`.
///
/// Node `j` along an axis sits at `−L/2 + j·h` with `h = L/M`, so the origin is
/// node `M/2`. Frequencies are `n/L` for `n ∈ {−M/2, …, M/2−1}` stored in DFT
/// order (`0, 1, …, M/2−1, −M/2, …, −1`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridDoc", into = "GridDoc")]
pub struct Grid {
    dim: usize,
    points_per_axis: usize,
    box_length: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridDoc {
    dim: usize,
    points_per_axis: usize,
    box_length: f64,
}

impl TryFrom<GridDoc> for Grid {
    type Error = SpectralError;
    fn try_from(doc: GridDoc) -> Result<Self, Self::Error> {
        Grid::new(doc.dim, doc.points_per_axis, doc.box_length)
    }
}

impl From<Grid> for GridDoc {
    fn from(g: Grid) -> Self {
        GridDoc {
            dim: g.dim,
            points_per_axis: g.points_per_axis,
            box_length: g.box_length,
        }
    }
}

impl Grid {
    pub fn new(dim: usize, points_per_axis: usize, box_length: f64) -> Result<Self, SpectralError> {
        if dim == 0 || dim > 3 {
            return Err(SpectralError::Grid(format!("dimension {dim} not in 1..=3")));
        }
        if points_per_axis < 8 || !points_per_axis.is_power_of_two() {
            return Err(SpectralError::Grid(format!(
                "points per axis {points_per_axis} must be a power of two >= 8"
            )));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(SpectralError::Grid(format!("box length {box_length} must be > 0")));
        }
        Ok(Grid {
            dim,
            points_per_axis,
            box_length,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn spacing(&self) -> f64 {
        self.box_length / self.points_per_axis as f64
    }

    /// Total number of nodes, `M^N`.
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight `h^N`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// `L^N`.
    pub fn box_volume(&self) -> f64 {
        self.box_length.powi(self.dim as i32)
    }

    /// Index of the node at the origin along every axis.
    pub fn center_index(&self) -> usize {
        self.points_per_axis / 2
    }

    pub fn coordinate(&self, index: usize) -> f64 {
        -0.5 * self.box_length + index as f64 * self.spacing()
    }

    /// Signed DFT index `n` of array position `index`.
    pub fn frequency_index(&self, index: usize) -> i64 {
        let m = self.points_per_axis as i64;
        let i = index as i64;
        if i < m / 2 {
            i
        } else {
            i - m
        }
    }

    /// Continuum frequency `n/L`.
    pub fn frequency(&self, index: usize) -> f64 {
        self.frequency_index(index) as f64 / self.box_length
    }

    /// Row-major multi-index; unused trailing axes are zero.
    pub fn unflatten(&self, flat: usize) -> [usize; 3] {
        let m = self.points_per_axis;
        let mut out = [0usize; 3];
        let mut rest = flat;
        for axis in (0..self.dim).rev() {
            out[axis] = rest % m;
            rest /= m;
        }
        out
    }

    pub fn flatten(&self, idx: [usize; 3]) -> usize {
        let m = self.points_per_axis;
        (0..self.dim).fold(0, |acc, axis| acc * m + idx[axis])
    }

    /// Node position `y`.
    pub fn position(&self, flat: usize) -> [f64; 3] {
        let idx = self.unflatten(flat);
        let mut y = [0.0; 3];
        for axis in 0..self.dim {
            y[axis] = self.coordinate(idx[axis]);
        }
        y
    }

    /// `|y|` at a node.
    pub fn radius(&self, flat: usize) -> f64 {
        let y = self.position(flat);
        y.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// `|k|²` of the lattice mode stored at `flat`.
    pub fn wave_number_sq(&self, flat: usize) -> f64 {
        let idx = self.unflatten(flat);
        (0..self.dim)
            .map(|axis| {
                let k = self.frequency(idx[axis]);
                k * k
            })
            .sum()
    }

    /// Node displacement represented by `flat` when index 0 is the zero shift
    /// (wrapped layout used for convolution kernels).
    pub fn wrapped_displacement_norm(&self, flat: usize) -> f64 {
        let idx = self.unflatten(flat);
        let h = self.spacing();
        (0..self.dim)
            .map(|axis| {
                let d = self.frequency_index(idx[axis]) as f64 * h;
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Nyquist frequency `M/(2L)` of each axis.
    pub fn nyquist(&self) -> f64 {
        (self.points_per_axis / 2) as f64 / self.box_length
    }

    /// Whether `flat` lies on the outer faces of the box.
    pub fn is_boundary(&self, flat: usize) -> bool {
        let idx = self.unflatten(flat);
        let last = self.points_per_axis - 1;
        (0..self.dim).any(|axis| idx[axis] == 0 || idx[axis] == last)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(Grid::new(2, 6, 1.0).is_err());
        assert!(Grid::new(2, 4, 1.0).is_err());
        assert!(Grid::new(4, 8, 1.0).is_err());
        assert!(Grid::new(2, 8, 0.0).is_err());
        assert!(Grid::new(2, 8, 1.0).is_ok());
    }

    #[test]
    fn frequency_lattice_is_dual() {
        let g = Grid::new(1, 8, 4.0).unwrap();
        let ks: Vec<i64> = (0..8).map(|i| g.frequency_index(i)).collect();
        assert_eq!(ks, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        assert_eq!(g.frequency(1), 0.25);
        assert_eq!(g.coordinate(g.center_index()), 0.0);
    }

    #[test]
    fn flatten_round_trip() {
        let g = Grid::new(3, 8, 1.0).unwrap();
        for flat in [0, 1, 7, 8, 63, 64, 511] {
            assert_eq!(g.flatten(g.unflatten(flat)), flat);
        }
    }

    #[test]
    fn deserialization_validates() {
        assert!(serde_json::from_str::<Grid>(r#"{"dim":2,"points_per_axis":100,"box_length":40.0}"#).is_err());
        assert!(serde_json::from_str::<Grid>(r#"{"dim":2,"points_per_axis":128,"box_length":40.0,"x":1}"#).is_err());
        let g: Grid = serde_json::from_str(r#"{"dim":2,"points_per_axis":128,"box_length":40.0}"#).unwrap();
        assert_eq!(g.len(), 16384);
    }
}
