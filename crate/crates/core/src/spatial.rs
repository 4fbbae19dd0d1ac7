//! Uniform spatial hashing for fixed-radius neighbor queries.
//!
//! Points are binned into cubic cells whose edge equals the search radius, so
//! every neighbor of a point lies in the 3×3×3 block of cells around it. The
//! grid is built once, single-threaded, and is read-only afterwards; queries
//! can run from any number of threads.

use std::collections::HashMap;

use crate::Vec3;

type CellKey = [i64; 3];

#[derive(Debug, Clone)]
pub struct CellGrid {
    cell: f64,
    origin: Vec3,
    /// Point indices sorted by cell, ascending index inside a cell.
    order: Vec<u32>,
    cells: HashMap<CellKey, (u32, u32)>,
    flat: bool,
}

impl CellGrid {
    /// Bins `positions` (optionally restricted to `subset`) with the given cell edge.
    pub fn new(positions: &[Vec3], cell: f64) -> Self {
        Self::with_subset(positions, None, cell)
    }

    pub fn with_subset(positions: &[Vec3], subset: Option<&[u32]>, cell: f64) -> Self {
        assert!(cell > 0.0, "cell size must be positive");
        // Pad the cell so rounding in the binning can never push a point at
        // exactly the search radius two cells away.
        let cell = cell * (1.0 + 1e-9);
        let members: Vec<u32> = match subset {
            Some(s) => s.to_vec(),
            None => (0..positions.len() as u32).collect(),
        };
        let mut origin = Vec3::repeat(f64::INFINITY);
        let mut z_min = f64::INFINITY;
        let mut z_max = f64::NEG_INFINITY;
        for &i in &members {
            let p = positions[i as usize];
            origin = origin.inf(&p);
            z_min = z_min.min(p.z);
            z_max = z_max.max(p.z);
        }
        if members.is_empty() {
            origin = Vec3::zeros();
        }
        let flat = members.is_empty() || z_max == z_min;

        let key_of = |p: &Vec3| -> CellKey {
            let r = (p - origin) / cell;
            [r.x.floor() as i64, r.y.floor() as i64, r.z.floor() as i64]
        };
        let mut keyed: Vec<(CellKey, u32)> = members
            .iter()
            .map(|&i| (key_of(&positions[i as usize]), i))
            .collect();
        keyed.sort_unstable();

        let mut cells = HashMap::new();
        let mut order = Vec::with_capacity(keyed.len());
        let mut start = 0usize;
        while start < keyed.len() {
            let key = keyed[start].0;
            let mut end = start;
            while end < keyed.len() && keyed[end].0 == key {
                order.push(keyed[end].1);
                end += 1;
            }
            cells.insert(key, (start as u32, end as u32));
            start = end;
        }

        Self {
            cell,
            origin,
            order,
            cells,
            flat,
        }
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    /// Calls `f` for every binned point in the cells surrounding `p`.
    /// Candidates still have to be distance-checked by the caller.
    pub fn for_each_candidate(&self, p: &Vec3, mut f: impl FnMut(u32)) {
        let r = (p - self.origin) / self.cell;
        let base = [r.x.floor() as i64, r.y.floor() as i64, r.z.floor() as i64];
        // A flat grid only populates the z = 0 layer of cells.
        let z_offsets: &[i64] = if !self.flat {
            &[-1, 0, 1]
        } else {
            match base[2] {
                -1 => &[1],
                0 => &[0],
                1 => &[-1],
                _ => &[],
            }
        };
        for &oz in z_offsets {
            for oy in -1..=1 {
                for ox in -1..=1 {
                    let key = [base[0] + ox, base[1] + oy, base[2] + oz];
                    if let Some(&(s, e)) = self.cells.get(&key) {
                        for &j in &self.order[s as usize..e as usize] {
                            f(j);
                        }
                    }
                }
            }
        }
    }

    /// Indices of binned points `j` with `0 < |x_j - p| <= radius`, ascending.
    /// `radius` must not exceed the cell size.
    pub fn within(&self, positions: &[Vec3], p: &Vec3, radius: f64) -> Vec<u32> {
        debug_assert!(radius <= self.cell);
        let r2 = radius * radius;
        let mut out = Vec::new();
        self.for_each_candidate(p, |j| {
            let d2 = (positions[j as usize] - p).norm_squared();
            if d2 > 0.0 && d2 <= r2 {
                out.push(j);
            }
        });
        out.sort_unstable();
        out
    }
}
