//! Material constants and the internal force density kernels.
//!
//! Each integral over an interaction set is evaluated as a plain sum of the
//! integrand times the point's constant effective volume. Every kernel
//! returns `b_nⁱ = -∂Ψ_nⁱ/∂xⁱ`, where `Ψ_nⁱ` is the summed (damage-weighted)
//! potential of point `i`'s own interactions; [`point_energy`] evaluates
//! those potentials.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::damage;
use crate::error::{Error, Result};
use crate::geometry::Dim;
use crate::neighborhoods::InteractionTables;
use crate::Vec3;

/// Current measures below `COLLAPSE·δⁿ` are treated as collapsed and skipped.
pub const COLLAPSE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Material {
    /// Mass density ρ (kg/m³; kg/m² in 2D).
    pub density: f64,
    /// Young's modulus E (Pa).
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    /// Critical energy release rate G_c (N/m).
    pub fracture_energy: f64,
    /// Horizon δ (m).
    pub horizon: f64,
}

impl Material {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.density > 0.0 && self.density.is_finite()) {
            problems.push(format!("density must be positive, got {}", self.density));
        }
        if !(self.youngs_modulus > 0.0 && self.youngs_modulus.is_finite()) {
            problems.push(format!(
                "Young's modulus must be positive, got {}",
                self.youngs_modulus
            ));
        }
        if !(self.poisson_ratio > -1.0 && self.poisson_ratio < 0.5) {
            problems.push(format!(
                "Poisson ratio out of range (-1, 0.5): {}",
                self.poisson_ratio
            ));
        }
        if !(self.fracture_energy > 0.0 && self.fracture_energy.is_finite()) {
            problems.push(format!(
                "fracture energy must be positive, got {}",
                self.fracture_energy
            ));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            problems.push(format!("horizon must be positive, got {}", self.horizon));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Material(problems.join("; ")))
        }
    }

    /// First Lamé parameter λ.
    pub fn lambda(&self) -> f64 {
        let (e, nu) = (self.youngs_modulus, self.poisson_ratio);
        e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    }

    /// Shear modulus μ = G.
    pub fn mu(&self) -> f64 {
        self.youngs_modulus / (2.0 * (1.0 + self.poisson_ratio))
    }

    /// Bulk modulus: `E/(3(1-2ν))` in 3D, the planar `E/(2(1-ν))` in 2D.
    pub fn bulk(&self, dim: Dim) -> f64 {
        let (e, nu) = (self.youngs_modulus, self.poisson_ratio);
        match dim {
            Dim::Three => e / (3.0 * (1.0 - 2.0 * nu)),
            Dim::Two => e / (2.0 * (1.0 - nu)),
        }
    }
}

/// `(C₁, C₂)` of a two-dimensional body.
pub fn derive_constants_2d(e: f64, nu: f64, delta: f64) -> Result<(f64, f64)> {
    if (nu * nu - 1.0).abs() == 0.0 {
        return Err(Error::Material(format!("Poisson ratio {nu} makes C2 singular")));
    }
    let c1 = 12.0 / (PI * delta.powi(3)) * e / (nu + 1.0);
    let c2 = 27.0 / (16.0 * PI * delta.powi(6)) * e * (1.0 - 3.0 * nu) / (nu * nu - 1.0);
    Ok((c1, c2))
}

/// `(C₁, C₃)` of a three-dimensional body; `C₂ = 0` there.
pub fn derive_constants_3d(e: f64, nu: f64, delta: f64) -> Result<(f64, f64)> {
    if nu == 0.5 || nu == -1.0 {
        return Err(Error::Material(format!("Poisson ratio {nu} makes λ singular")));
    }
    let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    let mu = e / (2.0 * (1.0 + nu));
    let c1 = 30.0 * mu / (PI * delta.powi(4));
    // λ = μ (ν = 1/4) is exact in theory; drop round-off so no
    // three-neighbor work is spent on a vanishing constant.
    let diff = if (lambda - mu).abs() <= 1e-12 * mu { 0.0 } else { lambda - mu };
    let c3 = 32.0 / (PI.powi(4) * delta.powi(12)) * diff;
    Ok((c1, c3))
}

/// Everything derived from a [`Material`] for one body.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Constants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub critical_stretch: f64,
    pub lambda: f64,
    pub mu: f64,
    pub bulk: f64,
    pub shear: f64,
}

impl Constants {
    pub fn derive(m: &Material, dim: Dim) -> Result<Self> {
        m.validate()?;
        let (c1, c2, c3) = match dim {
            Dim::Two => {
                let (c1, c2) = derive_constants_2d(m.youngs_modulus, m.poisson_ratio, m.horizon)?;
                (c1, c2, 0.0)
            }
            Dim::Three => {
                let (c1, c3) = derive_constants_3d(m.youngs_modulus, m.poisson_ratio, m.horizon)?;
                (c1, 0.0, c3)
            }
        };
        Ok(Self {
            c1,
            c2,
            c3,
            critical_stretch: damage::critical_stretch(m, dim)?,
            lambda: m.lambda(),
            mu: m.mu(),
            bulk: m.bulk(dim),
            shear: m.mu(),
        })
    }
}

/// How the bond stretch ε is measured for failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StretchMeasure {
    /// `|Δx − ΔX| / |ΔX|`.
    #[default]
    DisplacementNorm,
    /// `(|Δx| − |ΔX|) / |ΔX|`.
    LengthRatio,
}

#[inline]
pub(crate) fn stretch_unchecked(reference: &Vec3, current: &Vec3, measure: StretchMeasure) -> f64 {
    let big_l = reference.norm();
    match measure {
        StretchMeasure::DisplacementNorm => (current - reference).norm() / big_l,
        StretchMeasure::LengthRatio => (current.norm() - big_l) / big_l,
    }
}

/// Stretch of a bond with reference vector `reference` and current vector `current`.
pub fn bond_stretch(reference: &Vec3, current: &Vec3, measure: StretchMeasure) -> Result<f64> {
    if reference.norm() == 0.0 {
        return Err(Error::Geometry("bond has zero reference length".into()));
    }
    Ok(stretch_unchecked(reference, current, measure))
}

/// Per-point kernel coefficients: `Cₙ·Vₙⁱ` and the horizon used for the
/// collapse tolerance.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KernelWeights {
    pub horizon: Vec<f64>,
    pub c1v1: Vec<f64>,
    pub c2v2: Vec<f64>,
    pub c3v3: Vec<f64>,
}

impl KernelWeights {
    /// `constants_of(i)` and `horizon_of(i)` give the body data of point `i`.
    pub fn new(
        tables: &InteractionTables,
        constants_of: impl Fn(usize) -> Constants,
        horizon_of: impl Fn(usize) -> f64,
    ) -> Self {
        let n = tables.len();
        let mut w = KernelWeights::default();
        for i in 0..n {
            let c = constants_of(i);
            w.horizon.push(horizon_of(i));
            w.c1v1.push(c.c1 * tables.v1[i]);
            w.c2v2.push(c.c2 * tables.v2[i]);
            w.c3v3.push(c.c3 * tables.v3[i]);
        }
        w
    }
}

/// Inputs shared by the kernels for one force evaluation.
#[derive(Clone, Copy)]
pub struct ForceInput<'a> {
    pub tables: &'a InteractionTables,
    pub weights: &'a KernelWeights,
    /// Current `Δxⁱʲ` of every directed bond.
    pub bond_dx: &'a [Vec3],
    /// `d₁` of every undirected link.
    pub link_intact: &'a [bool],
    /// When false, two- and three-neighbor interactions ignore bond failure.
    pub cascade: bool,
}

impl ForceInput<'_> {
    #[inline]
    fn intact(&self, bond: u32) -> bool {
        self.link_intact[self.tables.bond_link[bond as usize] as usize]
    }

    #[inline]
    fn pair_intact(&self, p: &[u32; 2]) -> bool {
        !self.cascade || damage::pair_failure(self.intact(p[0]), self.intact(p[1]))
    }

    #[inline]
    fn triple_intact(&self, t: &[u32; 3]) -> bool {
        !self.cascade
            || damage::triple_failure(self.intact(t[0]), self.intact(t[1]), self.intact(t[2]))
    }
}

/// `Δxⁱʲ = xʲ − xⁱ` for every directed bond.
pub fn bond_vectors(tables: &InteractionTables, x: &[Vec3], out: &mut Vec<Vec3>) {
    out.resize(tables.bond_target.len(), Vec3::zeros());
    let offsets = &tables.bond_offsets;
    let mut chunks: Vec<(usize, &mut [Vec3])> = Vec::with_capacity(tables.len());
    let mut rest: &mut [Vec3] = out.as_mut_slice();
    for i in 0..tables.len() {
        let (head, tail) = rest.split_at_mut(offsets[i + 1] - offsets[i]);
        chunks.push((i, head));
        rest = tail;
    }
    chunks.into_par_iter().for_each(|(i, chunk)| {
        let xi = x[i];
        for (slot, &j) in chunk.iter_mut().zip(tables.h1(i)) {
            *slot = x[j as usize] - xi;
        }
    });
}

/// One-neighbor force density of point `i` and the number of collapsed bonds skipped.
#[inline]
pub fn b1_at(input: &ForceInput, i: usize) -> (Vec3, u32) {
    let t = input.tables;
    let w = input.weights.c1v1[i];
    let tol = COLLAPSE * input.weights.horizon[i];
    let mut sum = Vec3::zeros();
    let mut skipped = 0;
    for b in t.bonds(i) {
        if !input.intact(b as u32) {
            continue;
        }
        let dx = input.bond_dx[b];
        let l = dx.norm();
        if l < tol {
            skipped += 1;
            continue;
        }
        sum += dx * (w * (1.0 / t.bond_length[b] - 1.0 / l));
    }
    (sum, skipped)
}

/// Two-neighbor force density of point `i`. Both orderings `(j,k)` and
/// `(k,j)` of a stored pair are evaluated together:
/// `2C₂V₂(1/A − 1/a)(Δxⁱᵏ×a + Δxⁱʲ×(−a))`.
#[inline]
pub fn b2_at(input: &ForceInput, i: usize) -> (Vec3, u32) {
    let t = input.tables;
    let w = 2.0 * input.weights.c2v2[i];
    if w == 0.0 {
        return (Vec3::zeros(), 0);
    }
    let tol = COLLAPSE * input.weights.horizon[i].powi(2);
    let mut sum = Vec3::zeros();
    let mut skipped = 0;
    for p in t.pair_range(i) {
        let pair = &t.pairs[p];
        if !input.pair_intact(pair) {
            continue;
        }
        let dj = input.bond_dx[pair[0] as usize];
        let dk = input.bond_dx[pair[1] as usize];
        let a_vec = dj.cross(&dk);
        let a = a_vec.norm();
        if a < tol {
            skipped += 1;
            continue;
        }
        let coef = w * (1.0 / t.pair_area[p] - 1.0 / a);
        sum += (dk - dj).cross(&a_vec) * coef;
    }
    (sum, skipped)
}

/// Three-neighbor force density of point `i`. The six orderings of a stored
/// triple sum to `6C₃V₃(1/|V| − 1/|v|)·v·(Δxᵏ×Δxˡ + Δxˡ×Δxʲ + Δxʲ×Δxᵏ)`.
#[inline]
pub fn b3_at(input: &ForceInput, i: usize) -> (Vec3, u32) {
    let t = input.tables;
    let w = 6.0 * input.weights.c3v3[i];
    if w == 0.0 {
        return (Vec3::zeros(), 0);
    }
    let tol = COLLAPSE * input.weights.horizon[i].powi(3);
    let mut sum = Vec3::zeros();
    let mut skipped = 0;
    for q in t.triple_range(i) {
        let tri = &t.triples[q];
        if !input.triple_intact(tri) {
            continue;
        }
        let dj = input.bond_dx[tri[0] as usize];
        let dk = input.bond_dx[tri[1] as usize];
        let dl = input.bond_dx[tri[2] as usize];
        let kl = dk.cross(&dl);
        let v = kl.dot(&dj);
        let av = v.abs();
        if av < tol {
            skipped += 1;
            continue;
        }
        let coef = w * (1.0 / t.triple_volume[q] - 1.0 / av) * v;
        sum += (kl + dl.cross(&dj) + dj.cross(&dk)) * coef;
    }
    (sum, skipped)
}

fn run_kernel(
    input: &ForceInput,
    out: &mut [Vec3],
    kernel: fn(&ForceInput, usize) -> (Vec3, u32),
) -> u64 {
    out.par_iter_mut()
        .enumerate()
        .map(|(i, slot)| {
            let (b, skipped) = kernel(input, i);
            *slot = b;
            skipped as u64
        })
        .sum()
}

/// Writes `b₁` of every point into `out`; returns the collapsed bonds skipped.
pub fn force_b1(input: &ForceInput, out: &mut [Vec3]) -> u64 {
    run_kernel(input, out, b1_at)
}

pub fn force_b2(input: &ForceInput, out: &mut [Vec3]) -> u64 {
    run_kernel(input, out, b2_at)
}

pub fn force_b3(input: &ForceInput, out: &mut [Vec3]) -> u64 {
    run_kernel(input, out, b3_at)
}

/// `b_int = b₁ + b₂ + b₃`, all three evaluated per point in one pass.
pub fn total_internal(input: &ForceInput, out: &mut [Vec3]) -> u64 {
    out.par_iter_mut()
        .enumerate()
        .map(|(i, slot)| {
            let (b1, s1) = b1_at(input, i);
            let (b2, s2) = b2_at(input, i);
            let (b3, s3) = b3_at(input, i);
            *slot = b1 + b2 + b3;
            (s1 + s2 + s3) as u64
        })
        .sum()
}

/// `ψ₁ = ½C₁L(l/L − 1)²`.
pub fn psi1(c1: f64, big_l: f64, l: f64) -> f64 {
    0.5 * c1 * big_l * (l / big_l - 1.0).powi(2)
}

/// `ψ₂ = ½C₂A(a/A − 1)²`.
pub fn psi2(c2: f64, big_a: f64, a: f64) -> f64 {
    0.5 * c2 * big_a * (a / big_a - 1.0).powi(2)
}

/// `ψ₃ = ½C₃|V|(|v|/|V| − 1)²`.
pub fn psi3(c3: f64, big_v: f64, v: f64) -> f64 {
    0.5 * c3 * big_v.abs() * (v.abs() / big_v.abs() - 1.0).powi(2)
}

/// Summed potentials `[Ψ₁ⁱ, Ψ₂ⁱ, Ψ₃ⁱ]` of point `i`'s own interactions,
/// damage-weighted, with each sum running over ordered tuples.
pub fn point_energy(input: &ForceInput, i: usize) -> [f64; 3] {
    let t = input.tables;
    let w = input.weights;
    let mut e = [0.0; 3];
    for b in t.bonds(i) {
        if input.intact(b as u32) {
            e[0] += w.c1v1[i] * psi1(1.0, t.bond_length[b], input.bond_dx[b].norm());
        }
    }
    for p in t.pair_range(i) {
        let pair = &t.pairs[p];
        if input.pair_intact(pair) {
            let a = input.bond_dx[pair[0] as usize]
                .cross(&input.bond_dx[pair[1] as usize])
                .norm();
            e[1] += 2.0 * w.c2v2[i] * psi2(1.0, t.pair_area[p], a);
        }
    }
    for q in t.triple_range(i) {
        let tri = &t.triples[q];
        if input.triple_intact(tri) {
            let d = |k: usize| input.bond_dx[tri[k] as usize];
            let v = d(0).cross(&d(1)).dot(&d(2));
            e[2] += 6.0 * w.c3v3[i] * psi3(1.0, t.triple_volume[q], v);
        }
    }
    e
}
