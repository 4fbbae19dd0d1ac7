//! Bond failure and point damage.
//!
//! A bond (`d₁`) fails permanently once its stretch exceeds the critical
//! stretch. Two- and three-neighbor interactions fail as soon as any of
//! their bonds has failed, which the force kernels evaluate on the fly from
//! the bond flags.

use rayon::prelude::*;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::Dim;
use crate::mechanics::{stretch_unchecked, Material, StretchMeasure};
use crate::neighborhoods::InteractionTables;
use crate::Vec3;

/// Critical stretch from the energy release rate:
///
/// * 3D: `√(G_c / (δ(3G + (3/4)⁴(K − 5G/3))))`
/// * 2D: `√(G_c / (δ((6/π)G + 16/(9π²)(K − 2G))))`
pub fn critical_stretch(m: &Material, dim: Dim) -> Result<f64> {
    let g = m.mu();
    let k = m.bulk(dim);
    let stiffness = match dim {
        Dim::Three => 3.0 * g + 0.75f64.powi(4) * (k - 5.0 * g / 3.0),
        Dim::Two => 6.0 / PI * g + 16.0 / (9.0 * PI * PI) * (k - 2.0 * g),
    };
    let radicand = m.fracture_energy / (m.horizon * stiffness);
    if !(radicand > 0.0) || !radicand.is_finite() {
        return Err(Error::Material(format!(
            "critical stretch undefined: G_c/(δ·S) = {radicand} with S = {stiffness} \
             (G = {g}, K = {k})"
        )));
    }
    Ok(radicand.sqrt())
}

/// `d₂ⁱʲᵏ = d₁ⁱʲ·d₁ⁱᵏ`.
#[inline]
pub fn pair_failure(ij: bool, ik: bool) -> bool {
    ij && ik
}

/// `d₃ⁱʲᵏˡ = d₁ⁱʲ·d₁ⁱᵏ·d₁ⁱˡ`.
#[inline]
pub fn triple_failure(ij: bool, ik: bool, il: bool) -> bool {
    ij && ik && il
}

#[derive(Debug, Clone, PartialEq)]
pub struct FailureState {
    /// `d₁` per undirected link.
    pub intact: Vec<bool>,
    /// Point damage `Dⁱ`.
    pub damage: Vec<f64>,
    pub broken_this_step: u64,
    pub total_broken: u64,
}

impl FailureState {
    pub fn new(tables: &InteractionTables) -> Self {
        Self {
            intact: vec![true; tables.links.len()],
            damage: vec![0.0; tables.len()],
            broken_this_step: 0,
            total_broken: 0,
        }
    }

    /// Marks links as failed before the first step (pre-cracks).
    pub fn seed_failed(&mut self, tables: &InteractionTables, links: &[u32]) {
        for &l in links {
            self.intact[l as usize] = false;
        }
        self.damage = point_damage(&self.intact, tables);
    }

    pub fn max_damage(&self) -> f64 {
        self.damage.iter().copied().fold(0.0, f64::max)
    }
}

/// Fails every intact link whose stretch exceeds the critical stretch of its
/// body. Links touching a `protected` point are never evaluated. Returns the
/// number of links broken by this call and refreshes the point damage.
#[allow(clippy::too_many_arguments)]
pub fn update_bond_failure(
    state: &mut FailureState,
    tables: &InteractionTables,
    reference: &[Vec3],
    current: &[Vec3],
    critical: &[f64],
    measure: StretchMeasure,
    protected: &[bool],
) -> u64 {
    let broken: u64 = state
        .intact
        .par_iter_mut()
        .zip(tables.links.par_iter())
        .map(|(flag, &[i, j])| {
            let (i, j) = (i as usize, j as usize);
            if !*flag || protected[i] || protected[j] {
                return 0;
            }
            let big = reference[j] - reference[i];
            let small = current[j] - current[i];
            if stretch_unchecked(&big, &small, measure) > critical[i] {
                *flag = false;
                1
            } else {
                0
            }
        })
        .sum();
    state.broken_this_step = broken;
    state.total_broken += broken;
    if broken > 0 {
        state.damage = point_damage(&state.intact, tables);
    }
    broken
}

/// `Dⁱ = 1 − Σⱼ d₁ⁱʲ / N₁ⁱ`; zero for points without bonds.
pub fn point_damage(intact: &[bool], tables: &InteractionTables) -> Vec<f64> {
    (0..tables.len())
        .into_par_iter()
        .map(|i| {
            let n = tables.n1(i);
            if n == 0 {
                return 0.0;
            }
            let alive = tables
                .bonds(i)
                .filter(|&b| intact[tables.bond_link[b] as usize])
                .count();
            1.0 - alive as f64 / n as f64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, PointCloud};
    use crate::neighborhoods::TableOptions;

    fn mode1_3d() -> Material {
        Material {
            density: 7580.0,
            youngs_modulus: 210e9,
            poisson_ratio: 0.3,
            fracture_energy: 500.0,
            horizon: 0.05025,
        }
    }

    #[test]
    fn critical_stretch_mode1_3d() {
        let m = mode1_3d();
        let eps = critical_stretch(&m, Dim::Three).unwrap();
        assert!((eps / 1.97e-4 - 1.0).abs() < 0.005, "{eps}");
        let quad = critical_stretch(&Material { horizon: 4.0 * m.horizon, ..m.clone() }, Dim::Three).unwrap();
        assert!((quad / eps - 0.5).abs() < 1e-14);
        let tiny = critical_stretch(&Material { fracture_energy: 1e-20, ..m }, Dim::Three).unwrap();
        assert!(tiny < 1e-13);
    }

    #[test]
    fn non_positive_radicand_is_rejected() {
        // Strongly auxetic material drives the 2D stiffness negative.
        let m = Material {
            poisson_ratio: -0.99,
            ..mode1_3d()
        };
        let s = 6.0 / PI * m.mu() + 16.0 / (9.0 * PI * PI) * (m.bulk(Dim::Two) - 2.0 * m.mu());
        if s <= 0.0 {
            assert!(critical_stretch(&m, Dim::Two).is_err());
        }
        let m = Material {
            fracture_energy: -1.0,
            ..mode1_3d()
        };
        assert!(critical_stretch(&m, Dim::Three).is_err());
    }

    #[test]
    fn cascade_truth_table() {
        for ij in [false, true] {
            for ik in [false, true] {
                let case = matches!((ij, ik), (true, true));
                assert_eq!(pair_failure(ij, ik), case);
                for il in [false, true] {
                    let case = matches!((ij, ik, il), (true, true, true));
                    assert_eq!(triple_failure(ij, ik, il), case);
                }
            }
        }
    }

    fn two_points() -> (PointCloud, InteractionTables) {
        let c = PointCloud::from_positions(
            Dim::Two,
            vec![Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0)],
            1.0,
            0,
        );
        let t = InteractionTables::build(&c, 1.5, TableOptions::default());
        (c, t)
    }

    #[test]
    fn strict_threshold_and_irreversibility() {
        let (c, t) = two_points();
        let mut s = FailureState::new(&t);
        let eps_c = 0.25;
        let crit = vec![eps_c; 2];
        let free = vec![false; 2];
        let m = StretchMeasure::LengthRatio;
        let at = |e: f64| vec![Vec3::zeros(), Vec3::new(1.0 + e, 0.0, 0.0)];
        assert_eq!(update_bond_failure(&mut s, &t, &c.positions, &at(eps_c), &crit, m, &free), 0);
        assert!(s.intact[0]);
        assert_eq!(update_bond_failure(&mut s, &t, &c.positions, &at(1.01 * eps_c), &crit, m, &free), 1);
        assert!(!s.intact[0]);
        assert_eq!(s.damage, vec![1.0, 1.0]);
        assert_eq!(update_bond_failure(&mut s, &t, &c.positions, &at(0.0), &crit, m, &free), 0);
        assert!(!s.intact[0]);
        assert_eq!(s.total_broken, 1);
    }

    #[test]
    fn protected_points_keep_bonds() {
        let (c, t) = two_points();
        let mut s = FailureState::new(&t);
        let x = vec![Vec3::zeros(), Vec3::new(3.0, 0.0, 0.0)];
        let n = update_bond_failure(
            &mut s,
            &t,
            &c.positions,
            &x,
            &[0.1, 0.1],
            StretchMeasure::DisplacementNorm,
            &[true, false],
        );
        assert_eq!(n, 0);
    }

    #[test]
    fn damage_fractions() {
        let c = build_grid(&[3, 3], 1.0, Vec3::zeros(), Dim::Two).unwrap();
        let t = InteractionTables::build(&c, 1.5, TableOptions::default());
        let mut intact = vec![true; t.links.len()];
        assert!(point_damage(&intact, &t).iter().all(|&d| d == 0.0));
        let centre_links: Vec<usize> = t.bonds(4).map(|b| t.bond_link[b] as usize).collect();
        for &l in centre_links.iter().take(4) {
            intact[l] = false;
        }
        assert_eq!(point_damage(&intact, &t)[4], 0.5);
        for &l in &centre_links {
            intact[l] = false;
        }
        assert_eq!(point_damage(&intact, &t)[4], 1.0);

        let lone = PointCloud::from_positions(Dim::Two, vec![Vec3::zeros()], 1.0, 0);
        let t = InteractionTables::build(&lone, 1.0, TableOptions::default());
        assert_eq!(point_damage(&[], &t), vec![0.0]);
    }
}
