//! Cell-centred, component-planar storage for an `m`-vector field on a
//! periodic grid.

use crate::spectral::GridSpec;

/// An `m`-component field; component `c` occupies the plane
/// `data[c * nx * ny .. (c + 1) * nx * ny]`, each plane row-major with `x`
/// varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseField {
    grid: GridSpec,
    m: usize,
    data: Vec<f64>,
}

impl PhaseField {
    pub fn zeros(grid: GridSpec, m: usize) -> Self {
        assert!(m == 1 || m == 2, "only 1- and 2-component fields are supported");
        Self {
            grid,
            m,
            data: vec![0.0; m * grid.cells()],
        }
    }

    /// Builds a field from raw component planes.
    pub fn from_planes(grid: GridSpec, m: usize, data: Vec<f64>) -> Option<Self> {
        if !(m == 1 || m == 2) || data.len() != m * grid.cells() {
            return None;
        }
        Some(Self { grid, m, data })
    }

    /// Same value in every cell.
    pub fn uniform(grid: GridSpec, value: &[f64]) -> Self {
        let mut f = Self::zeros(grid, value.len());
        for (c, v) in value.iter().enumerate() {
            f.component_mut(c).fill(*v);
        }
        f
    }

    /// Samples `f(x, y)` at cell centres; only the first `m` outputs are kept.
    pub fn from_fn(grid: GridSpec, m: usize, f: impl Fn(f64, f64) -> [f64; 2]) -> Self {
        let mut out = Self::zeros(grid, m);
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let v = f(grid.x(i), grid.y(j));
                out.set(i, j, v);
            }
        }
        out
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let n = self.grid.cells();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.grid.cells();
        &mut self.data[c * n..(c + 1) * n]
    }

    /// Value at cell `(i, j)` padded to a 2-vector.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> [f64; 2] {
        self.at(j * self.grid.nx + i)
    }

    /// Value at flat cell index `k = j * nx + i`.
    #[inline]
    pub fn at(&self, k: usize) -> [f64; 2] {
        let n = self.grid.cells();
        if self.m == 1 {
            [self.data[k], 0.0]
        } else {
            [self.data[k], self.data[n + k]]
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: [f64; 2]) {
        let k = j * self.grid.nx + i;
        self.set_at(k, v);
    }

    #[inline]
    pub fn set_at(&mut self, k: usize, v: [f64; 2]) {
        let n = self.grid.cells();
        self.data[k] = v[0];
        if self.m == 2 {
            self.data[n + k] = v[1];
        }
    }

    /// Grid-scaled L² distance `h · ‖a − b‖₂`, i.e. the discrete
    /// `L²(Ω)` norm of the difference.
    pub fn l2_distance(&self, other: &PhaseField) -> f64 {
        assert_eq!(self.data.len(), other.data.len());
        let s: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        self.grid.h() * s.sqrt()
    }

    pub fn max_abs_difference(&self, other: &PhaseField) -> f64 {
        assert_eq!(self.data.len(), other.data.len());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Discrete `L²(Ω)` inner product `h² Σ a·b`.
    pub fn inner(&self, other: &PhaseField) -> f64 {
        assert_eq!(self.data.len(), other.data.len());
        let h = self.grid.h();
        h * h * self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn same_shape(&self, other: &PhaseField) -> bool {
        self.grid == other.grid && self.m == other.m
    }
}
