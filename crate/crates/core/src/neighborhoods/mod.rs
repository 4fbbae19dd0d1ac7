//! Interaction sets of every point and their quadrature weights.
//!
//! One-neighbor interactions (bonds) are stored per point in CSR form in
//! ascending neighbor order. Each directed bond `i→j` maps to an undirected
//! link carrying the shared failure flag. Two- and three-neighbor
//! interactions are stored once per unordered set of directed bonds of `i`;
//! the kernels expand them into all orderings, and the counts `N₂`/`N₃`
//! report ordered tuples.
//!
//! Tables are built once from the reference configuration and never rebuilt.

pub mod cache;

use rayon::prelude::*;

use crate::geometry::{CrackSegment, Dim, PointCloud};
use crate::spatial::CellGrid;
use crate::Vec3;

/// Two-neighbor interactions with a reference area below `AREA_CUTOFF·δ²`
/// are dropped. Nearly collinear triangles carry a stiffness that scales
/// with 1/A, and on irregular clouds they drive an explosive instability
/// whenever C₂ < 0. A regular lattice with δ ≤ 10Δx has no nonzero area
/// below Δx² ≥ AREA_CUTOFF·δ², so lattice clouds are unaffected.
pub const AREA_CUTOFF: f64 = 1e-2;

/// Same role for three-neighbor reference volumes, in units of δ³.
/// The smallest nonzero lattice volume Δx³ stays above it for δ ≤ 10Δx.
pub const VOLUME_CUTOFF: f64 = 1e-3;

/// Which higher-order interaction sets to enumerate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableOptions {
    pub pairs: bool,
    pub triples: bool,
}

impl Default for TableOptions {
    fn default() -> Self {
        Self {
            pairs: true,
            triples: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct InteractionTables {
    /// CSR offsets of each point's bonds, `len = n + 1`.
    pub bond_offsets: Vec<usize>,
    pub bond_target: Vec<u32>,
    /// Reference bond length `L`.
    pub bond_length: Vec<f64>,
    /// Undirected link of every directed bond.
    pub bond_link: Vec<u32>,
    /// Endpoints `(i, j)`, `i < j`, of every undirected link.
    pub links: Vec<[u32; 2]>,

    pub pair_offsets: Vec<usize>,
    /// Global directed-bond indices `(i→j, i→k)` with `j` before `k` in `h1(i)`.
    pub pairs: Vec<[u32; 2]>,
    /// Reference area `A = |ΔXʲ × ΔXᵏ|`.
    pub pair_area: Vec<f64>,

    pub triple_offsets: Vec<usize>,
    pub triples: Vec<[u32; 3]>,
    /// Reference volume `|V| = |(ΔXʲ × ΔXᵏ)·ΔXˡ|`.
    pub triple_volume: Vec<f64>,

    /// `V_H = β·|ball(δ)|`.
    pub neighborhood_volume: Vec<f64>,
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
    pub v3: Vec<f64>,
}

impl InteractionTables {
    /// Builds the tables of a single-horizon cloud. Bonds never connect
    /// different bodies.
    pub fn build(cloud: &PointCloud, delta: f64, options: TableOptions) -> Self {
        let h1 = build_h1(cloud, delta);
        Self::from_h1(cloud, &h1, delta, options)
    }

    pub fn from_h1(cloud: &PointCloud, h1: &[Vec<u32>], delta: f64, options: TableOptions) -> Self {
        let n = cloud.len();
        let mut t = InteractionTables {
            bond_offsets: Vec::with_capacity(n + 1),
            ..Default::default()
        };
        t.bond_offsets.push(0);
        for (i, nb) in h1.iter().enumerate() {
            for &j in nb {
                t.bond_target.push(j);
                t.bond_length
                    .push((cloud.positions[j as usize] - cloud.positions[i]).norm());
            }
            t.bond_offsets.push(t.bond_target.len());
        }
        t.bond_link = vec![u32::MAX; t.bond_target.len()];
        for i in 0..n {
            for b in t.bond_offsets[i]..t.bond_offsets[i + 1] {
                let j = t.bond_target[b] as usize;
                if j > i {
                    t.bond_link[b] = t.links.len() as u32;
                    t.links.push([i as u32, j as u32]);
                } else {
                    let back = t
                        .find_bond(j, i as u32)
                        .expect("neighbor relation is symmetric");
                    t.bond_link[b] = t.bond_link[back];
                }
            }
        }

        let pos = &cloud.positions;
        let do_pairs = options.pairs;
        let do_triples = options.triples && cloud.dim == Dim::Three;
        let per_point: Vec<(LocalPairs, LocalTriples)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let nb = &h1[i];
                let base = t.bond_offsets[i] as u32;
                let pairs = if do_pairs {
                    local_pairs(i, nb, pos, delta)
                        .into_iter()
                        .map(|(a, b, area)| ([base + a, base + b], area))
                        .collect()
                } else {
                    Vec::new()
                };
                let triples = if do_triples {
                    local_triples(i, nb, pos, delta)
                        .into_iter()
                        .map(|(a, b, c, vol)| ([base + a, base + b, base + c], vol))
                        .collect()
                } else {
                    Vec::new()
                };
                (pairs, triples)
            })
            .collect();

        t.pair_offsets.push(0);
        t.triple_offsets.push(0);
        for (pairs, triples) in per_point {
            for (p, a) in pairs {
                t.pairs.push(p);
                t.pair_area.push(a);
            }
            t.pair_offsets.push(t.pairs.len());
            for (p, v) in triples {
                t.triples.push(p);
                t.triple_volume.push(v);
            }
            t.triple_offsets.push(t.triples.len());
        }

        t.set_effective_volumes(cloud.dim, &cloud.fullness, delta);
        t
    }

    pub fn len(&self) -> usize {
        self.bond_offsets.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn bonds(&self, i: usize) -> std::ops::Range<usize> {
        self.bond_offsets[i]..self.bond_offsets[i + 1]
    }

    pub fn h1(&self, i: usize) -> &[u32] {
        &self.bond_target[self.bonds(i)]
    }

    pub fn pair_range(&self, i: usize) -> std::ops::Range<usize> {
        self.pair_offsets[i]..self.pair_offsets[i + 1]
    }

    pub fn triple_range(&self, i: usize) -> std::ops::Range<usize> {
        self.triple_offsets[i]..self.triple_offsets[i + 1]
    }

    fn find_bond(&self, i: usize, j: u32) -> Option<usize> {
        let r = self.bonds(i);
        self.bond_target[r.clone()]
            .binary_search(&j)
            .ok()
            .map(|k| r.start + k)
    }

    pub fn n1(&self, i: usize) -> usize {
        self.bonds(i).len()
    }

    /// Ordered two-neighbor count: both orderings of every stored pair.
    pub fn n2(&self, i: usize) -> usize {
        2 * self.pair_range(i).len()
    }

    /// Ordered three-neighbor count: all six orderings of every stored triple.
    pub fn n3(&self, i: usize) -> usize {
        6 * self.triple_range(i).len()
    }

    /// The ordered pairs `(j, k)` of point `i`.
    pub fn ordered_pairs(&self, i: usize) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.pairs[self.pair_range(i)].iter().flat_map(move |&[a, b]| {
            let (j, k) = (self.bond_target[a as usize], self.bond_target[b as usize]);
            [(j, k), (k, j)]
        })
    }

    /// The ordered triples `(j, k, l)` of point `i`.
    pub fn ordered_triples(&self, i: usize) -> impl Iterator<Item = (u32, u32, u32)> + '_ {
        self.triples[self.triple_range(i)]
            .iter()
            .flat_map(move |&[a, b, c]| {
                let (j, k, l) = (
                    self.bond_target[a as usize],
                    self.bond_target[b as usize],
                    self.bond_target[c as usize],
                );
                [(j, k, l), (j, l, k), (k, j, l), (k, l, j), (l, j, k), (l, k, j)]
            })
    }

    /// `V_H = β·|ball(δ)|`, `V₁ = V_H/N₁`, `V₂ = V_H²/N₂`, `V₃ = V_H³/N₃`;
    /// zero when the count is zero.
    pub fn set_effective_volumes(&mut self, dim: Dim, fullness: &[f64], delta: f64) {
        let n = self.len();
        let ball = dim.ball_measure(delta);
        self.neighborhood_volume = (0..n).map(|i| fullness[i] * ball).collect();
        let share = |v: f64, count: usize| if count == 0 { 0.0 } else { v / count as f64 };
        self.v1 = (0..n)
            .map(|i| share(self.neighborhood_volume[i], self.n1(i)))
            .collect();
        self.v2 = (0..n)
            .map(|i| share(self.neighborhood_volume[i].powi(2), self.n2(i)))
            .collect();
        self.v3 = (0..n)
            .map(|i| share(self.neighborhood_volume[i].powi(3), self.n3(i)))
            .collect();
    }

    /// Appends the tables of another cloud whose point indices start at `offset`.
    pub fn append(&mut self, other: &InteractionTables) {
        let point_offset = self.len() as u32;
        let bond_offset = self.bond_target.len();
        let link_offset = self.links.len() as u32;
        let shift = |v: &[usize], base: usize| -> Vec<usize> {
            v.iter().skip(1).map(|&o| o + base).collect()
        };
        if self.bond_offsets.is_empty() {
            self.bond_offsets.push(0);
            self.pair_offsets.push(0);
            self.triple_offsets.push(0);
        }
        let pair_base = self.pairs.len();
        let triple_base = self.triples.len();
        self.bond_offsets
            .extend(shift(&other.bond_offsets, bond_offset));
        self.pair_offsets.extend(shift(&other.pair_offsets, pair_base));
        self.triple_offsets
            .extend(shift(&other.triple_offsets, triple_base));
        self.bond_target
            .extend(other.bond_target.iter().map(|&j| j + point_offset));
        self.bond_length.extend_from_slice(&other.bond_length);
        self.bond_link
            .extend(other.bond_link.iter().map(|&l| l + link_offset));
        self.links.extend(
            other
                .links
                .iter()
                .map(|&[a, b]| [a + point_offset, b + point_offset]),
        );
        let b = bond_offset as u32;
        self.pairs
            .extend(other.pairs.iter().map(|&[x, y]| [x + b, y + b]));
        self.pair_area.extend_from_slice(&other.pair_area);
        self.triples
            .extend(other.triples.iter().map(|&[x, y, z]| [x + b, y + b, z + b]));
        self.triple_volume.extend_from_slice(&other.triple_volume);
        self.neighborhood_volume
            .extend_from_slice(&other.neighborhood_volume);
        self.v1.extend_from_slice(&other.v1);
        self.v2.extend_from_slice(&other.v2);
        self.v3.extend_from_slice(&other.v3);
    }

    /// Links whose reference segment crosses the crack.
    pub fn links_cut_by(&self, cloud: &PointCloud, crack: &CrackSegment) -> Vec<u32> {
        self.links
            .iter()
            .enumerate()
            .filter(|(_, &[i, j])| crack.cuts(&cloud.positions[i as usize], &cloud.positions[j as usize]))
            .map(|(l, _)| l as u32)
            .collect()
    }
}

/// Same-body neighbors within the horizon, `0 < |Xʲ − Xⁱ| ≤ δ`, ascending.
pub fn build_h1(cloud: &PointCloud, delta: f64) -> Vec<Vec<u32>> {
    let grid = CellGrid::new(&cloud.positions, delta);
    (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            let mut nb = grid.within(&cloud.positions, &cloud.positions[i], delta);
            nb.retain(|&j| cloud.body[j as usize] == cloud.body[i]);
            nb
        })
        .collect()
}

/// Ordered two-neighbor sets of every point.
pub fn build_h2(h1: &[Vec<u32>], cloud: &PointCloud, delta: f64) -> Vec<Vec<(u32, u32)>> {
    (0..h1.len())
        .into_par_iter()
        .map(|i| {
            let nb = &h1[i];
            let mut out = Vec::new();
            for (a, b, _) in local_pairs(i, nb, &cloud.positions, delta) {
                let (j, k) = (nb[a as usize], nb[b as usize]);
                out.push((j, k));
                out.push((k, j));
            }
            out
        })
        .collect()
}

/// Ordered three-neighbor sets of every point; empty for 2D clouds.
pub fn build_h3(h1: &[Vec<u32>], cloud: &PointCloud, delta: f64) -> Vec<Vec<(u32, u32, u32)>> {
    if cloud.dim == Dim::Two {
        return vec![Vec::new(); h1.len()];
    }
    (0..h1.len())
        .into_par_iter()
        .map(|i| {
            let nb = &h1[i];
            let mut out = Vec::new();
            for (a, b, c, _) in local_triples(i, nb, &cloud.positions, delta) {
                let (j, k, l) = (nb[a as usize], nb[b as usize], nb[c as usize]);
                out.extend([(j, k, l), (j, l, k), (k, j, l), (k, l, j), (l, j, k), (l, k, j)]);
            }
            out
        })
        .collect()
}

/// Neighbor positions `a < b` in `nb` forming a valid two-neighbor interaction.
/// Stored pairs of one point as bond indices with their reference area.
type LocalPairs = Vec<([u32; 2], f64)>;
/// Stored triples of one point as bond indices with their reference volume.
type LocalTriples = Vec<([u32; 3], f64)>;

fn local_pairs(i: usize, nb: &[u32], pos: &[Vec3], delta: f64) -> Vec<(u32, u32, f64)> {
    let xi = pos[i];
    let d2 = delta * delta;
    let tol = AREA_CUTOFF * d2;
    let rel: Vec<Vec3> = nb.iter().map(|&j| pos[j as usize] - xi).collect();
    let mut out = Vec::new();
    for a in 0..rel.len() {
        for b in a + 1..rel.len() {
            let gap = (rel[b] - rel[a]).norm_squared();
            if gap > 0.0 && gap <= d2 {
                let area = rel[a].cross(&rel[b]).norm();
                if area >= tol {
                    out.push((a as u32, b as u32, area));
                }
            }
        }
    }
    out
}

/// Neighbor positions `a < b < c` forming a valid three-neighbor interaction.
fn local_triples(i: usize, nb: &[u32], pos: &[Vec3], delta: f64) -> Vec<(u32, u32, u32, f64)> {
    let xi = pos[i];
    let d2 = delta * delta;
    let tol = VOLUME_CUTOFF * delta.powi(3);
    let rel: Vec<Vec3> = nb.iter().map(|&j| pos[j as usize] - xi).collect();
    // Upper adjacency among the neighbors: for each a, the b > a within δ.
    let adj: Vec<Vec<u32>> = (0..rel.len())
        .map(|a| {
            (a + 1..rel.len())
                .filter(|&b| {
                    let g = (rel[b] - rel[a]).norm_squared();
                    g > 0.0 && g <= d2
                })
                .map(|b| b as u32)
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    for a in 0..rel.len() {
        for (pos_b, &b) in adj[a].iter().enumerate() {
            let ab = rel[a].cross(&rel[b as usize]);
            // c must follow b and be adjacent to both a and b.
            let after_b = &adj[a][pos_b + 1..];
            let nb_b = &adj[b as usize];
            let (mut x, mut y) = (0, 0);
            while x < after_b.len() && y < nb_b.len() {
                match after_b[x].cmp(&nb_b[y]) {
                    std::cmp::Ordering::Less => x += 1,
                    std::cmp::Ordering::Greater => y += 1,
                    std::cmp::Ordering::Equal => {
                        let c = after_b[x];
                        let vol = ab.dot(&rel[c as usize]).abs();
                        if vol >= tol {
                            out.push((a as u32, b, c, vol));
                        }
                        x += 1;
                        y += 1;
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, compute_fullness};
    use std::f64::consts::PI;

    fn grid3() -> PointCloud {
        build_grid(&[3, 3], 1.0, Vec3::zeros(), Dim::Two).unwrap()
    }

    #[test]
    fn centre_of_three_by_three() {
        let c = grid3();
        let h1 = build_h1(&c, 1.5);
        assert_eq!(h1[4].len(), 8);
        let h2 = build_h2(&h1, &c, 1.5);
        assert_eq!(h2[4].len(), 24);
    }

    #[test]
    fn horizon_is_inclusive() {
        let pts = vec![Vec3::zeros(), Vec3::new(2.0, 0.0, 0.0)];
        let c = PointCloud::from_positions(Dim::Two, pts, 1.0, 0);
        assert_eq!(build_h1(&c, 2.0), vec![vec![1], vec![0]]);
        assert_eq!(build_h1(&c, 1.0), vec![Vec::<u32>::new(), Vec::new()]);
        let h2 = build_h2(&build_h1(&c, 2.0), &c, 2.0);
        assert!(h2.iter().all(|p| p.is_empty()));
    }

    #[test]
    fn collinear_pair_is_excluded() {
        let pts = vec![Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0), Vec3::new(2.0, 0.0, 0.0)];
        let c = PointCloud::from_positions(Dim::Two, pts, 1.0, 0);
        let h1 = build_h1(&c, 2.0);
        assert!(build_h2(&h1, &c, 2.0).iter().all(|p| p.is_empty()));
    }

    #[test]
    fn tetrahedron_triples() {
        let s = 1.0;
        let pts = vec![
            Vec3::new(s, s, s),
            Vec3::new(s, -s, -s),
            Vec3::new(-s, s, -s),
            Vec3::new(-s, -s, s),
        ];
        let c = PointCloud::from_positions(Dim::Three, pts, 1.0, 0);
        let delta = 3.0; // edge 2√2
        let h1 = build_h1(&c, delta);
        let h3 = build_h3(&h1, &c, delta);
        assert!(h3.iter().all(|t| t.len() == 6));
        let t = InteractionTables::build(&c, delta, TableOptions::default());
        assert_eq!(t.n3(0), 6);
        // Reference volume |(b-a)×(c-a)·(d-a)| = 16 for this tetrahedron.
        assert!((t.triple_volume[0] - 16.0).abs() < 1e-12);
    }

    #[test]
    fn coplanar_points_have_no_triples() {
        let pts = vec![
            Vec3::zeros(),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
        ];
        let c = PointCloud::from_positions(Dim::Three, pts, 1.0, 0);
        let h1 = build_h1(&c, 2.0);
        assert!(build_h3(&h1, &c, 2.0).iter().all(|t| t.is_empty()));
    }

    #[test]
    fn two_d_has_no_triples() {
        let c = grid3();
        let h1 = build_h1(&c, 3.0);
        assert!(build_h3(&h1, &c, 3.0).iter().all(|t| t.is_empty()));
        let t = InteractionTables::build(&c, 3.0, TableOptions::default());
        assert!(t.triples.is_empty());
        assert_eq!(t.v3, vec![0.0; 9]);
    }

    #[test]
    fn effective_volume_substitution() {
        let mut t = InteractionTables {
            bond_offsets: vec![0, 100],
            bond_target: vec![0; 100],
            pair_offsets: vec![0, 0],
            triple_offsets: vec![0, 0],
            ..Default::default()
        };
        t.set_effective_volumes(Dim::Three, &[1.0], 1.0);
        assert!((t.v1[0] - 4.0 * PI / 3.0 / 100.0).abs() < 1e-15);
        assert_eq!(t.v2[0], 0.0);

        let mut t = InteractionTables {
            bond_offsets: vec![0, 10],
            bond_target: vec![0; 10],
            pair_offsets: vec![0, 0],
            triple_offsets: vec![0, 0],
            ..Default::default()
        };
        t.set_effective_volumes(Dim::Two, &[0.5], 2.0);
        assert!((t.neighborhood_volume[0] - 2.0 * PI).abs() < 1e-15);
        assert!((t.v1[0] - PI / 5.0).abs() < 1e-15);
    }

    #[test]
    fn effective_volume_identities() {
        let mut c = build_grid(&[6, 5, 3], 1.0, Vec3::zeros(), Dim::Three).unwrap();
        c.fullness = compute_fullness(&c, 1.8);
        let t = InteractionTables::build(&c, 1.8, TableOptions::default());
        for i in 0..c.len() {
            let vh = t.neighborhood_volume[i];
            let expected = c.fullness[i] * 4.0 / 3.0 * PI * 1.8f64.powi(3);
            assert!((vh - expected).abs() <= 1e-15 * expected);
            assert_eq!(t.v1[i], vh / t.n1(i) as f64);
            if t.n2(i) > 0 {
                assert_eq!(t.v2[i], vh * vh / t.n2(i) as f64);
            }
            if t.n3(i) > 0 {
                assert_eq!(t.v3[i], vh.powi(3) / t.n3(i) as f64);
            }
        }
    }

    #[test]
    fn links_are_shared_by_both_directions() {
        let c = build_grid(&[4, 4], 1.0, Vec3::zeros(), Dim::Two).unwrap();
        let t = InteractionTables::build(&c, 2.1, TableOptions::default());
        for i in 0..c.len() {
            for b in t.bonds(i) {
                let j = t.bond_target[b] as usize;
                let back = t.find_bond(j, i as u32).unwrap();
                assert_eq!(t.bond_link[b], t.bond_link[back]);
                let [p, q] = t.links[t.bond_link[b] as usize];
                assert_eq!((p.min(q), p.max(q)), (i.min(j) as u32, i.max(j) as u32));
            }
        }
        assert_eq!(t.links.len() * 2, t.bond_target.len());
    }

    #[test]
    fn append_matches_joint_build() {
        let a = build_grid(&[3, 3], 1.0, Vec3::zeros(), Dim::Two).unwrap();
        let mut b = build_grid(&[2, 3], 1.0, Vec3::zeros(), Dim::Two).unwrap().with_body(1);
        b.translate(Vec3::new(10.0, 0.0, 0.0));
        let joint = PointCloud::concat(&[a.clone(), b.clone()]).unwrap();
        let whole = InteractionTables::build(&joint, 1.5, TableOptions::default());
        let mut parts = InteractionTables::build(&a, 1.5, TableOptions::default());
        parts.append(&InteractionTables::build(&b, 1.5, TableOptions::default()));
        assert_eq!(whole, parts);
    }

    #[test]
    fn precrack_cuts_crossing_links_only() {
        let c = build_grid(&[4, 4], 1.0, Vec3::zeros(), Dim::Two).unwrap();
        let t = InteractionTables::build(&c, 1.5, TableOptions::default());
        let crack = CrackSegment::new(Vec3::new(-2.0, 0.0, 0.0), Vec3::new(0.0, 0.0, 0.0)).unwrap();
        let cut = t.links_cut_by(&c, &crack);
        for (l, &[i, j]) in t.links.iter().enumerate() {
            let (p, q) = (c.positions[i as usize], c.positions[j as usize]);
            let crosses = p.y.signum() != q.y.signum() && (p.x + q.x) / 2.0 <= 0.0;
            assert_eq!(cut.contains(&(l as u32)), crosses, "link {l}");
        }
    }
}
