use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Open,
}

/// Cubic-lattice geometry. Sites are indexed x-fastest: i = x + nx·(y + ny·z).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeConfig {
    pub dims: [usize; 3],
    /// µm
    pub spacing: f64,
    pub quantization_axis: [f64; 3],
    /// µm
    pub cutoff_radius: f64,
    #[serde(default)]
    pub boundary: Boundary,
}

impl LatticeConfig {
    /// Lattice with the default cutoff of five spacings and a z quantization axis.
    pub fn cubic(dims: [usize; 3], spacing: f64) -> Result<Self> {
        let cfg = LatticeConfig {
            dims,
            spacing,
            quantization_axis: [0.0, 0.0, 1.0],
            cutoff_radius: 5.0 * spacing,
            boundary: Boundary::Open,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.contains(&0) {
            return Err(Error::invalid("lattice dims must all be >= 1"));
        }
        if !(self.spacing.is_finite() && self.spacing > 0.0) {
            return Err(Error::invalid("lattice spacing must be > 0"));
        }
        if !(self.cutoff_radius >= self.spacing) {
            return Err(Error::invalid("cutoff radius must be >= spacing"));
        }
        let axis = Vector3::from(self.quantization_axis);
        if !(axis.norm() > 0.0) || !axis.norm().is_finite() {
            return Err(Error::invalid("quantization axis must be a non-zero vector"));
        }
        Ok(())
    }

    pub fn n_sites(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn axis(&self) -> Vector3<f64> {
        Vector3::from(self.quantization_axis).normalize()
    }

    pub fn position(&self, site: usize) -> Vector3<f64> {
        let [nx, ny, _] = self.dims;
        let x = site % nx;
        let y = (site / nx) % ny;
        let z = site / (nx * ny);
        Vector3::new(x as f64, y as f64, z as f64) * self.spacing
    }
}

/// C3/r³·(1 − 3cos²θ), θ measured from the quantization axis.
pub fn dipole_coupling(r_vec: &Vector3<f64>, c3: f64, axis: &Vector3<f64>) -> Result<f64> {
    let r = r_vec.norm();
    if !(r > 0.0) {
        return Err(Error::domain("dipole coupling at zero separation"));
    }
    let cos_theta = r_vec.dot(axis) / (r * axis.norm());
    Ok(c3 / (r * r * r) * (1.0 - 3.0 * cos_theta * cos_theta))
}

/// Sparse symmetric table of pair couplings V_ij within the cutoff (CSR rows).
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingTable {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    values: Vec<f64>,
    /// Largest per-site Σ|V_ij| over in-lattice pairs dropped by the cutoff.
    truncated_tail: f64,
}

impl CouplingTable {
    pub fn n_sites(&self) -> usize {
        self.offsets.len() - 1
    }

    /// (neighbor, V_ij) pairs of one row.
    pub fn row(&self, site: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.offsets[site]..self.offsets[site + 1];
        self.neighbors[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.row(i).find(|&(k, _)| k == j).map(|(_, v)| v)
    }

    pub fn n_ordered_pairs(&self) -> usize {
        self.neighbors.len()
    }

    pub fn n_unordered_pairs(&self) -> usize {
        self.neighbors.len() / 2
    }

    /// max |V_ij|, the stiffest coupling in the table.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn truncated_tail(&self) -> f64 {
        self.truncated_tail
    }

    /// A table with no couplings, for single-site or non-interacting runs.
    pub fn empty(n_sites: usize) -> Self {
        CouplingTable {
            offsets: vec![0; n_sites + 1],
            neighbors: Vec::new(),
            values: Vec::new(),
            truncated_tail: 0.0,
        }
    }
}

pub fn build_coupling_table(lattice: &LatticeConfig, c3: f64) -> Result<CouplingTable> {
    lattice.validate()?;
    let n = lattice.n_sites();
    let axis = lattice.axis();
    let positions: Vec<_> = (0..n).map(|i| lattice.position(i)).collect();
    // small slack so sites sitting exactly on the cutoff sphere are kept
    let cutoff = lattice.cutoff_radius * (1.0 + 1e-12);

    let mut offsets = Vec::with_capacity(n + 1);
    let mut neighbors = Vec::new();
    let mut values = Vec::new();
    let mut truncated_tail: f64 = 0.0;
    offsets.push(0);
    for i in 0..n {
        let mut tail = 0.0;
        for j in 0..n {
            if i == j {
                continue;
            }
            let r = positions[j] - positions[i];
            let v = dipole_coupling(&r, c3, &axis)?;
            if r.norm() <= cutoff {
                neighbors.push(j);
                values.push(v);
            } else {
                tail += v.abs();
            }
        }
        truncated_tail = truncated_tail.max(tail);
        offsets.push(neighbors.len());
    }
    Ok(CouplingTable {
        offsets,
        neighbors,
        values,
        truncated_tail,
    })
}
