//! Phase-space densities on a grid over the unit square, their coarse-graining
//! over a block partition, and the baker's map as a mixing dynamics.
//!
//! On a power-of-two grid the discrete baker's map permutes fine cells, so
//! fine-grained quantities (occupied volume, distance to uniform) are exactly
//! conserved while coarse-grained ones relax.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

const MASS_TOLERANCE: f64 = 1e-10;

/// Nonnegative density on an `n × n` grid; cell `(col, row)` is stored at
/// `row * n + col`, with `col` along x and `row` along y.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    n: usize,
    values: Vec<f64>,
}

impl DensityField {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || values.len() != n * n {
            return Err(Error::InvalidField(format!("{} values for resolution {n}", values.len())));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidField(format!("invalid cell value {v}")));
        }
        let field = DensityField { n, values };
        let mass = field.mass();
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidField(format!("total mass {mass}")));
        }
        Ok(field)
    }

    pub fn uniform(n: usize) -> Result<Self> {
        DensityField::new(n, vec![1.0; n * n])
    }

    /// Normalized indicator of the given `(col, row)` cells.
    pub fn indicator(n: usize, cells: &[(usize, usize)]) -> Result<Self> {
        let mut values = vec![0.0; n * n];
        for &(c, r) in cells {
            if c >= n || r >= n {
                return Err(Error::InvalidField(format!("cell ({c}, {r}) outside grid {n}")));
            }
            values[r * n + c] = 1.0;
        }
        let occupied = values.iter().filter(|v| **v > 0.0).count();
        if occupied == 0 {
            return Err(Error::InvalidField("empty support".into()));
        }
        let h = (n * n) as f64 / occupied as f64;
        values.iter_mut().for_each(|v| *v *= h);
        DensityField::new(n, values)
    }

    /// Normalized indicator of the left half `x < 1/2`.
    pub fn left_half(n: usize) -> Result<Self> {
        let cells: Vec<(usize, usize)> = (0..n).flat_map(|r| (0..n / 2).map(move |c| (c, r))).collect();
        DensityField::indicator(n, &cells)
    }

    /// Independent uniform cell values, normalized.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        let raw: Vec<f64> = (0..n * n).map(|_| rng.random::<f64>()).collect();
        let total: f64 = raw.iter().sum::<f64>() / (n * n) as f64;
        DensityField::new(n, raw.into_iter().map(|v| v / total).collect())
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.n + col]
    }

    pub fn cell_measure(&self) -> f64 {
        1.0 / (self.n * self.n) as f64
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_measure()
    }

    /// Number of fine cells carrying nonzero density.
    pub fn occupied(&self) -> usize {
        self.values.iter().filter(|v| **v > 0.0).count()
    }

    pub fn l1_distance(&self, other: &DensityField) -> Result<f64> {
        if other.n != self.n {
            return Err(Error::InvalidField(format!("resolutions {} and {} differ", self.n, other.n)));
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).sum::<f64>() * self.cell_measure())
    }

    pub fn l1_to_uniform(&self) -> f64 {
        self.values.iter().map(|v| (v - 1.0).abs()).sum::<f64>() * self.cell_measure()
    }
}

/// `k × k` equal blocks tiling an `n × n` grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CellPartition {
    resolution: usize,
    cells_per_side: usize,
}

impl CellPartition {
    pub fn new(resolution: usize, cells_per_side: usize) -> Result<Self> {
        if cells_per_side == 0 || resolution == 0 || !resolution.is_multiple_of(cells_per_side) {
            return Err(Error::IncompatiblePartition { resolution, coarse: cells_per_side });
        }
        Ok(CellPartition { resolution, cells_per_side })
    }

    pub fn cells_per_side(&self) -> usize {
        self.cells_per_side
    }

    pub fn block_size(&self) -> usize {
        self.resolution / self.cells_per_side
    }

    /// Volume of each coarse cell.
    pub fn cell_volume(&self) -> f64 {
        1.0 / (self.cells_per_side * self.cells_per_side) as f64
    }
}

/// Replaces each coarse cell by its average density; an all-zero cell stays zero.
pub fn coarse_grain_classical(field: &DensityField, partition: &CellPartition) -> Result<DensityField> {
    let n = field.n;
    if partition.resolution != n {
        return Err(Error::IncompatiblePartition { resolution: n, coarse: partition.cells_per_side });
    }
    let b = partition.block_size();
    let k = partition.cells_per_side;
    let mut out = vec![0.0; n * n];
    for br in 0..k {
        for bc in 0..k {
            let cells = || (0..b).flat_map(move |r| (0..b).map(move |c| (br * b + r) * n + bc * b + c));
            let first = field.values[br * b * n + bc * b];
            let level = if cells().all(|i| field.values[i] == 0.0) {
                0.0
            } else if cells().all(|i| field.values[i] == first) {
                first
            } else {
                cells().map(|i| field.values[i]).sum::<f64>() / (b * b) as f64
            };
            for i in cells() {
                out[i] = level;
            }
        }
    }
    Ok(DensityField { n, values: out })
}

fn require_power_of_two(n: usize) -> Result<()> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    Ok(())
}

/// Destination `(col, row)` of a fine cell under the discrete baker's map
/// `(x, y) ↦ (2x, y/2)` for `x < 1/2`, `(2x − 1, (y + 1)/2)` otherwise.
fn baker_cell(n: usize, col: usize, row: usize) -> (usize, usize) {
    let (m, r) = (row / 2, row % 2);
    if col < n / 2 {
        (2 * col + r, m)
    } else {
        (2 * (col - n / 2) + r, m + n / 2)
    }
}

/// Pushes the density forward by one baker's-map step.
pub fn mixing_step(field: &DensityField) -> Result<DensityField> {
    let n = field.n;
    require_power_of_two(n)?;
    let mut out = vec![0.0; n * n];
    for row in 0..n {
        for col in 0..n {
            let (c2, r2) = baker_cell(n, col, row);
            out[r2 * n + c2] = field.values[row * n + col];
        }
    }
    Ok(DensityField { n, values: out })
}

#[derive(Debug, Clone, Serialize)]
pub struct LiouvilleReport {
    pub occupied: Vec<usize>,
    pub invariant: bool,
}

/// Checks that the occupied fine-cell count is the same for every field.
pub fn liouville_check(fields: &[DensityField]) -> LiouvilleReport {
    let occupied: Vec<usize> = fields.iter().map(DensityField::occupied).collect();
    let invariant = occupied.windows(2).all(|w| w[0] == w[1]);
    LiouvilleReport { occupied, invariant }
}

#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumSeries {
    /// L1 distance of the coarse-grained field to uniform, steps `0..=steps`.
    pub coarse_distance: Vec<f64>,
    /// L1 distance of the fine-grained field to uniform.
    pub fine_distance: Vec<f64>,
    pub occupied: Vec<usize>,
    pub mass: Vec<f64>,
}

impl EquilibriumSeries {
    /// First step whose coarse distance falls below `threshold`.
    pub fn first_below(&self, threshold: f64) -> Option<usize> {
        self.coarse_distance.iter().position(|d| *d < threshold)
    }
}

/// Iterates the baker's map and records fine and coarse distances to uniform.
pub fn equilibrium_approach(initial: &DensityField, partition: &CellPartition, steps: usize) -> Result<EquilibriumSeries> {
    require_power_of_two(initial.n)?;
    if partition.cells_per_side >= initial.n {
        return Err(Error::IncompatiblePartition { resolution: initial.n, coarse: partition.cells_per_side });
    }
    let mut series = EquilibriumSeries {
        coarse_distance: Vec::with_capacity(steps + 1),
        fine_distance: Vec::with_capacity(steps + 1),
        occupied: Vec::with_capacity(steps + 1),
        mass: Vec::with_capacity(steps + 1),
    };
    let mut field = initial.clone();
    for step in 0..=steps {
        if step > 0 {
            field = mixing_step(&field)?;
        }
        series.coarse_distance.push(coarse_grain_classical(&field, partition)?.l1_to_uniform());
        series.fine_distance.push(field.l1_to_uniform());
        series.occupied.push(field.occupied());
        series.mass.push(field.mass());
    }
    Ok(series)
}
