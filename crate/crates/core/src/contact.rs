//! Short-range repulsion between distinct bodies.
//!
//! Contact sets are found in the current configuration every step. A point
//! `i` closer than `l_c` to a point `j` of a paired body receives
//! `9C/(πδ⁵)·(l_c − d)·(xⁱ − xʲ)/d·Vʲ`. The horizon `δ` of an interacting
//! pair is the larger of the two body horizons unless a fixed contact
//! horizon is configured. Either way `Vⁱ·bⁱ = −Vʲ·bʲ` holds for every pair.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::spatial::CellGrid;
use crate::Vec3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactParams {
    /// Critical contact distance `l_c` (m).
    pub critical_distance: f64,
    /// Contact spring constant `C^con`.
    pub stiffness: f64,
    /// Body id pairs that can touch.
    pub pairs: Vec<[u32; 2]>,
    /// Fixed `δ` for the contact law, replacing the per-pair maximum.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
}

impl ContactParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.critical_distance > 0.0) {
            return Err(Error::Config(format!(
                "contact.critical_distance must be positive, got {}",
                self.critical_distance
            )));
        }
        if !(self.stiffness > 0.0) {
            return Err(Error::Config(format!(
                "contact.stiffness must be positive, got {}",
                self.stiffness
            )));
        }
        if let Some(h) = self.horizon.filter(|h| !(*h > 0.0)) {
            return Err(Error::Config(format!("contact.horizon must be positive, got {h}")));
        }
        if let Some(p) = self.pairs.iter().find(|p| p[0] == p[1]) {
            return Err(Error::Config(format!(
                "contact pair [{}, {}] names the same body twice",
                p[0], p[1]
            )));
        }
        Ok(())
    }

    pub fn pairs_with(&self, a: u32, b: u32) -> bool {
        a != b
            && self
                .pairs
                .iter()
                .any(|p| (p[0] == a && p[1] == b) || (p[0] == b && p[1] == a))
    }
}

/// Default `l_c ≈ max(Δx_I/2, Δx_II/2)`.
pub fn default_critical_distance(spacing_a: f64, spacing_b: f64) -> f64 {
    0.5 * spacing_a.max(spacing_b)
}

/// Cross-body neighbors of every point in the current configuration (CSR).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ContactSets {
    pub offsets: Vec<usize>,
    pub neighbors: Vec<u32>,
}

impl ContactSets {
    pub fn of(&self, i: usize) -> &[u32] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn pair_count(&self) -> usize {
        self.neighbors.len() / 2
    }
}

/// Contact sets from current positions `x`; lists are ascending.
pub fn build_contact_sets(x: &[Vec3], body: &[u32], params: &ContactParams) -> ContactSets {
    let n = x.len();
    let active: Vec<u32> = (0..n as u32)
        .filter(|&i| {
            let b = body[i as usize];
            params.pairs.iter().any(|p| p[0] == b || p[1] == b)
        })
        .collect();
    let mut sets = ContactSets {
        offsets: vec![0; n + 1],
        neighbors: Vec::new(),
    };
    if active.is_empty() {
        return sets;
    }
    let lc = params.critical_distance;
    let grid = CellGrid::with_subset(x, Some(&active), lc);
    let lists: Vec<Vec<u32>> = active
        .par_iter()
        .map(|&i| {
            let bi = body[i as usize];
            let mut out = grid.within(x, &x[i as usize], lc);
            out.retain(|&j| params.pairs_with(bi, body[j as usize]));
            out
        })
        .collect();
    let mut per_point: Vec<&[u32]> = vec![&[]; n];
    for (k, &i) in active.iter().enumerate() {
        per_point[i as usize] = &lists[k];
    }
    for (i, list) in per_point.iter().enumerate() {
        sets.neighbors.extend_from_slice(list);
        sets.offsets[i + 1] = sets.neighbors.len();
    }
    sets
}

/// Contact force densities of all points into `out`; returns the number of
/// coincident cross-body point pairs skipped.
pub fn contact_force(
    x: &[Vec3],
    volumes: &[f64],
    horizon: &[f64],
    sets: &ContactSets,
    params: &ContactParams,
    out: &mut [Vec3],
) -> u64 {
    let lc = params.critical_distance;
    let k = 9.0 * params.stiffness / PI;
    out.par_iter_mut()
        .enumerate()
        .map(|(i, slot)| {
            let mut sum = Vec3::zeros();
            let mut skipped = 0;
            for &j in sets.of(i) {
                let j = j as usize;
                let r = x[i] - x[j];
                let d = r.norm();
                if d == 0.0 {
                    skipped += 1;
                    continue;
                }
                let delta = params.horizon.unwrap_or_else(|| horizon[i].max(horizon[j]));
                sum += r * (k / delta.powi(5) * (lc - d) / d * volumes[j]);
            }
            *slot = sum;
            skipped
        })
        .sum()
}
