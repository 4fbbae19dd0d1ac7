//! Reference point clouds.
//!
//! Every generator returns a [`PointCloud`] in the reference configuration
//! with a uniform point volume. Fullness factors start at one and are filled
//! in by [`compute_fullness`] once the horizon is known.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spatial::CellGrid;
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Dim {
    Two,
    Three,
}

impl Dim {
    pub fn as_usize(self) -> usize {
        match self {
            Dim::Two => 2,
            Dim::Three => 3,
        }
    }

    /// Volume (3D) or area (2D) of a full horizon ball of radius `delta`.
    pub fn ball_measure(self, delta: f64) -> f64 {
        match self {
            Dim::Two => PI * delta * delta,
            Dim::Three => 4.0 / 3.0 * PI * delta.powi(3),
        }
    }
}

impl TryFrom<u8> for Dim {
    type Error = String;

    fn try_from(value: u8) -> std::result::Result<Self, String> {
        match value {
            2 => Ok(Dim::Two),
            3 => Ok(Dim::Three),
            other => Err(format!("dimension must be 2 or 3, got {other}")),
        }
    }
}

impl From<Dim> for u8 {
    fn from(d: Dim) -> u8 {
        d.as_usize() as u8
    }
}

/// Marks the single point layers at the ends of a curved bar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointTag {
    #[default]
    None,
    LoadLeft,
    LoadRight,
}

/// A discretized body (or several bodies concatenated).
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub dim: Dim,
    pub positions: Vec<Vec3>,
    /// Point volume ΔV; area in 2D.
    pub volumes: Vec<f64>,
    /// Neighborhood fullness β in [0, 1].
    pub fullness: Vec<f64>,
    pub body: Vec<u32>,
    pub tags: Vec<PointTag>,
}

impl PointCloud {
    /// A cloud with uniform volume, body id and full neighborhoods.
    pub fn from_positions(dim: Dim, positions: Vec<Vec3>, point_volume: f64, body: u32) -> Self {
        let n = positions.len();
        Self {
            dim,
            positions,
            volumes: vec![point_volume; n],
            fullness: vec![1.0; n],
            body: vec![body; n],
            tags: vec![PointTag::None; n],
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn with_body(mut self, body: u32) -> Self {
        self.body.iter_mut().for_each(|b| *b = body);
        self
    }

    /// Concatenates clouds of equal dimension, keeping their body ids.
    pub fn concat(clouds: &[PointCloud]) -> Result<Self> {
        let dim = clouds
            .first()
            .map(|c| c.dim)
            .ok_or_else(|| Error::Geometry("no bodies to assemble".into()))?;
        if clouds.iter().any(|c| c.dim != dim) {
            return Err(Error::Geometry("bodies mix 2D and 3D clouds".into()));
        }
        let mut out = PointCloud::from_positions(dim, Vec::new(), 0.0, 0);
        for c in clouds {
            out.positions.extend_from_slice(&c.positions);
            out.volumes.extend_from_slice(&c.volumes);
            out.fullness.extend_from_slice(&c.fullness);
            out.body.extend_from_slice(&c.body);
            out.tags.extend_from_slice(&c.tags);
        }
        Ok(out)
    }

    pub fn translate(&mut self, offset: Vec3) {
        self.positions.iter_mut().for_each(|p| *p += offset);
    }

    pub fn tagged(&self, tag: PointTag) -> Vec<u32> {
        (0..self.len() as u32)
            .filter(|&i| self.tags[i as usize] == tag)
            .collect()
    }
}

/// A straight crack. In 3D it is extruded along z through the whole body.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrackSegment {
    pub a: Vec3,
    pub b: Vec3,
}

impl CrackSegment {
    pub fn new(a: Vec3, b: Vec3) -> Result<Self> {
        if a == b {
            return Err(Error::Geometry("crack endpoints coincide".into()));
        }
        Ok(Self { a, b })
    }

    /// Whether the reference segment `p`–`q` crosses (or touches) the crack,
    /// judged in the xy-plane.
    pub fn cuts(&self, p: &Vec3, q: &Vec3) -> bool {
        segments_intersect_xy(p, q, &self.a, &self.b)
    }
}

fn orient(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn on_segment(a: &Vec3, b: &Vec3, p: &Vec3) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn segments_intersect_xy(p1: &Vec3, p2: &Vec3, q1: &Vec3, q2: &Vec3) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

fn check_spacing(spacing: f64) -> Result<()> {
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::Geometry(format!(
            "point spacing must be positive, got {spacing}"
        )));
    }
    Ok(())
}

/// Regular lattice with `counts` points per axis, centered on `origin`.
pub fn build_grid(counts: &[usize], spacing: f64, origin: Vec3, dim: Dim) -> Result<PointCloud> {
    check_spacing(spacing)?;
    if counts.len() != dim.as_usize() {
        return Err(Error::Geometry(format!(
            "expected {} grid counts, got {}",
            dim.as_usize(),
            counts.len()
        )));
    }
    if counts.contains(&0) {
        return Err(Error::Geometry("grid counts must be at least 1".into()));
    }
    let n = [counts[0], counts[1], counts.get(2).copied().unwrap_or(1)];
    let centre = |c: usize, k: usize| (k as f64 - (c as f64 - 1.0) / 2.0) * spacing;
    let mut positions = Vec::with_capacity(n[0] * n[1] * n[2]);
    for kz in 0..n[2] {
        for ky in 0..n[1] {
            for kx in 0..n[0] {
                let z = if dim == Dim::Three { centre(n[2], kz) } else { 0.0 };
                positions.push(origin + Vec3::new(centre(n[0], kx), centre(n[1], ky), z));
            }
        }
    }
    if dim == Dim::Two {
        positions.iter_mut().for_each(|p| p.z = 0.0);
    }
    Ok(PointCloud::from_positions(dim, positions, spacing.powi(dim.as_usize() as i32), 0))
}

/// Midcurve of the curved bar, `f(x) = cos(πx/2)`.
pub fn bar_curve(x: f64) -> f64 {
    (PI / 2.0 * x).cos()
}

pub fn bar_curve_slope(x: f64) -> f64 {
    -PI / 2.0 * (PI / 2.0 * x).sin()
}

/// Direction of the cross-section lines of the curved bar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionOrientation {
    /// Perpendicular to the midcurve, slope `-1/f'(x_i)`.
    #[default]
    Perpendicular,
    /// Slope `+1/f'(x_i)`.
    Printed,
}

impl SectionOrientation {
    /// Unit direction of the section line through root `x`.
    fn direction(self, x: f64) -> Vec3 {
        let fp = bar_curve_slope(x);
        let d = match self {
            // Slope -1/f' is the direction (-f', 1); flipped so it points
            // the same way as the vertical line at the crown.
            SectionOrientation::Perpendicular => Vec3::new(-fp, 1.0, 0.0),
            SectionOrientation::Printed => Vec3::new(fp, 1.0, 0.0),
        };
        d.normalize()
    }
}

/// Cumulative arc length of the bar midcurve, tabulated for inversion.
struct ArcTable {
    xs: Vec<f64>,
    s: Vec<f64>,
}

impl ArcTable {
    fn new(x0: f64, x1: f64, intervals: usize) -> Self {
        let speed = |x: f64| (1.0 + bar_curve_slope(x).powi(2)).sqrt();
        let h = (x1 - x0) / intervals as f64;
        let mut xs = Vec::with_capacity(intervals + 1);
        let mut s = Vec::with_capacity(intervals + 1);
        xs.push(x0);
        s.push(0.0);
        for k in 0..intervals {
            let a = x0 + k as f64 * h;
            let b = a + h;
            let simpson = h / 6.0 * (speed(a) + 4.0 * speed(0.5 * (a + b)) + speed(b));
            xs.push(b);
            s.push(s[k] + simpson);
        }
        Self { xs, s }
    }

    fn total(&self) -> f64 {
        *self.s.last().unwrap()
    }

    /// Root x at arc length `target`, refined with Newton on the tabulated bracket.
    fn x_at(&self, target: f64) -> f64 {
        let k = match self
            .s
            .binary_search_by(|v| v.partial_cmp(&target).unwrap())
        {
            Ok(k) => return self.xs[k],
            Err(k) => k.clamp(1, self.s.len() - 1) - 1,
        };
        let (xa, sa) = (self.xs[k], self.s[k]);
        let speed = |x: f64| (1.0 + bar_curve_slope(x).powi(2)).sqrt();
        let mut x = xa + (target - sa) / speed(xa);
        for _ in 0..4 {
            let m = 0.5 * (xa + x);
            let arc = (x - xa) / 6.0 * (speed(xa) + 4.0 * speed(m) + speed(x));
            x -= (sa + arc - target) / speed(x);
        }
        x
    }
}

/// Curved bar along `f(x) = cos(πx/2)`, `x ∈ [-L/2, L/2]`.
///
/// Root points are spaced `Δx = width / nn` in arc length, symmetric about
/// the crown. Each root carries `nn` points on its section line, and in 3D
/// the section is repeated over `nn` layers in z. The first and last root
/// sections are tagged as loading layers.
pub fn build_curved_bar(
    nn: usize,
    length: f64,
    width: f64,
    dim: Dim,
    orientation: SectionOrientation,
) -> Result<PointCloud> {
    if nn == 0 {
        return Err(Error::Geometry("curved bar needs at least one point per section".into()));
    }
    if !(length > 0.0 && width > 0.0) {
        return Err(Error::Geometry("curved bar length and width must be positive".into()));
    }
    let spacing = width / nn as f64;
    let table = ArcTable::new(-length / 2.0, length / 2.0, 20_000);
    let total = table.total();
    let roots = (total / spacing + 1e-9).floor() as usize + 1;
    let s0 = 0.5 * (total - (roots - 1) as f64 * spacing);

    let offset = |k: usize| (k as f64 - (nn as f64 - 1.0) / 2.0) * spacing;
    let layers = if dim == Dim::Three { nn } else { 1 };
    let mut positions = Vec::with_capacity(roots * nn * layers);
    let mut tags = Vec::with_capacity(positions.capacity());
    for layer in 0..layers {
        let z = if dim == Dim::Three { offset(layer) } else { 0.0 };
        for r in 0..roots {
            let x = table.x_at(s0 + r as f64 * spacing);
            let root = Vec3::new(x, bar_curve(x), z);
            let dir = orientation.direction(x);
            let tag = if roots > 1 && r == 0 {
                PointTag::LoadLeft
            } else if roots > 1 && r == roots - 1 {
                PointTag::LoadRight
            } else {
                PointTag::None
            };
            for k in 0..nn {
                positions.push(root + dir * offset(k));
                tags.push(tag);
            }
        }
    }
    let mut cloud =
        PointCloud::from_positions(dim, positions, spacing.powi(dim.as_usize() as i32), 0);
    cloud.tags = tags;
    Ok(cloud)
}

/// Lattice points with spacing `spacing` kept by `inside`. Axes listed in
/// `cell_centred` use half-offset coordinates instead of passing through 0.
fn cut_lattice(
    half_extent: Vec3,
    spacing: f64,
    cell_centred: [bool; 3],
    inside: impl Fn(&Vec3) -> bool,
) -> Vec<Vec3> {
    let axis = |a: usize| -> Vec<f64> {
        let shift = if cell_centred[a] { 0.5 } else { 0.0 };
        let m = (half_extent[a] / spacing).ceil() as i64 + 1;
        (-m..=m)
            .map(|k| (k as f64 + shift) * spacing)
            .filter(|v| v.abs() <= half_extent[a] * (1.0 + 1e-12))
            .collect()
    };
    let (xs, ys, zs) = (axis(0), axis(1), axis(2));
    let mut out = Vec::new();
    for &z in &zs {
        for &y in &ys {
            for &x in &xs {
                let p = Vec3::new(x, y, z);
                if inside(&p) {
                    out.push(p);
                }
            }
        }
    }
    out
}

/// Solid sphere of radius `radius` centered on the origin.
pub fn build_sphere(radius: f64, spacing: f64) -> Result<PointCloud> {
    check_spacing(spacing)?;
    if !(radius > 0.0) {
        return Err(Error::Geometry("sphere radius must be positive".into()));
    }
    if spacing > 2.0 * radius {
        return Err(Error::Geometry(format!(
            "point spacing {spacing} exceeds the sphere diameter {}",
            2.0 * radius
        )));
    }
    let r2 = radius * radius * (1.0 + 1e-12);
    let positions = cut_lattice(Vec3::repeat(radius), spacing, [false; 3], |p| {
        p.norm_squared() <= r2
    });
    Ok(PointCloud::from_positions(Dim::Three, positions, spacing.powi(3), 0))
}

/// Disc of radius `radius` and thickness `height`, axis along z, centered on
/// the origin. Through the thickness the lattice is cell-centred so that
/// `height / spacing` layers fill the disc exactly.
pub fn build_disc(radius: f64, height: f64, spacing: f64) -> Result<PointCloud> {
    check_spacing(spacing)?;
    if !(radius > 0.0 && height > 0.0) {
        return Err(Error::Geometry("disc radius and height must be positive".into()));
    }
    let layers = (height / spacing).round().max(1.0) as usize;
    let r2 = radius * radius * (1.0 + 1e-12);
    let half_z = 0.5 * (layers as f64) * spacing;
    let even = layers.is_multiple_of(2);
    let positions = cut_lattice(
        Vec3::new(radius, radius, half_z - 0.5 * spacing),
        spacing,
        [false, false, even],
        |p| p.x * p.x + p.y * p.y <= r2,
    );
    if positions.is_empty() {
        return Err(Error::Geometry("disc discretization is empty".into()));
    }
    Ok(PointCloud::from_positions(Dim::Three, positions, spacing.powi(3), 0))
}

/// Number of same-body neighbors of every point within `delta`.
pub fn neighbor_counts(cloud: &PointCloud, delta: f64) -> Vec<usize> {
    let grid = CellGrid::new(&cloud.positions, delta);
    let r2 = delta * delta;
    (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            let p = cloud.positions[i];
            let mut count = 0;
            grid.for_each_candidate(&p, |j| {
                let j = j as usize;
                let d2 = (cloud.positions[j] - p).norm_squared();
                if j != i && cloud.body[j] == cloud.body[i] && d2 > 0.0 && d2 <= r2 {
                    count += 1;
                }
            });
            count
        })
        .collect()
}

/// Fullness `β = (N₁ + 1)·ΔV / V_ball`, clamped to `[0, 1]`.
pub fn compute_fullness(cloud: &PointCloud, delta: f64) -> Vec<f64> {
    let ball = cloud.dim.ball_measure(delta);
    neighbor_counts(cloud, delta)
        .into_iter()
        .zip(&cloud.volumes)
        .map(|(n, &dv)| ((n + 1) as f64 * dv / ball).clamp(0.0, 1.0))
        .collect()
}
