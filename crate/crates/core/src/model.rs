//! Several bodies assembled into one indexed point set.

use std::ops::Range;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{compute_fullness, CrackSegment, Dim, PointCloud};
use crate::mechanics::{Constants, KernelWeights, Material};
use crate::neighborhoods::{cache, InteractionTables, TableOptions};

/// Input for one body before assembly.
#[derive(Debug, Clone)]
pub struct BodySpec {
    pub name: String,
    pub material: Material,
    /// Reference cloud; its body ids are overwritten during assembly.
    pub cloud: PointCloud,
    pub spacing: f64,
    pub cracks: Vec<CrackSegment>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Body {
    pub id: u32,
    pub name: String,
    pub material: Material,
    pub constants: Constants,
    pub spacing: f64,
    /// Global indices of this body's points.
    pub points: Range<usize>,
}

#[derive(Debug, Clone)]
pub struct Model {
    pub dim: Dim,
    pub cloud: PointCloud,
    pub bodies: Vec<Body>,
    pub tables: InteractionTables,
    pub weights: KernelWeights,
    /// Critical stretch, density and horizon of every point's body.
    pub critical_stretch: Vec<f64>,
    pub density: Vec<f64>,
    pub horizon: Vec<f64>,
    /// Links cut by the pre-cracks.
    pub precracked: Vec<u32>,
}

/// Interaction sets worth enumerating for a body: pairs only when `C₂ ≠ 0`,
/// triples only when `C₃ ≠ 0`.
pub fn table_options(constants: &Constants) -> TableOptions {
    TableOptions {
        pairs: constants.c2 != 0.0,
        triples: constants.c3 != 0.0,
    }
}

impl Model {
    /// Derives constants, fullness and interaction tables for every body.
    /// With `cache_dir` set, tables are loaded from (or stored to) disk.
    pub fn assemble(specs: Vec<BodySpec>, cache_dir: Option<&Path>) -> Result<Model> {
        let dim = specs
            .first()
            .map(|s| s.cloud.dim)
            .ok_or_else(|| Error::Config("scenario defines no bodies".into()))?;
        let mut bodies = Vec::with_capacity(specs.len());
        let mut clouds = Vec::with_capacity(specs.len());
        let mut tables = InteractionTables::default();
        let mut precracked = Vec::new();
        let mut start = 0;
        for (id, spec) in specs.into_iter().enumerate() {
            if spec.cloud.dim != dim {
                return Err(Error::Geometry(format!(
                    "body '{}' is {}D but the first body is {}D",
                    spec.name,
                    spec.cloud.dim.as_usize(),
                    dim.as_usize()
                )));
            }
            if spec.cloud.is_empty() {
                return Err(Error::Geometry(format!("body '{}' has no points", spec.name)));
            }
            let constants = Constants::derive(&spec.material, dim)
                .map_err(|e| Error::Material(format!("body '{}': {e}", spec.name)))?;
            let delta = spec.material.horizon;
            let mut cloud = spec.cloud.with_body(id as u32);
            cloud.fullness = compute_fullness(&cloud, delta);
            let options = table_options(&constants);
            let local = match cache_dir {
                Some(dir) => cache::load_or_build(dir, &cloud, delta, options)?,
                None => InteractionTables::build(&cloud, delta, options),
            };
            let link_base = tables.links.len() as u32;
            for crack in &spec.cracks {
                precracked.extend(local.links_cut_by(&cloud, crack).into_iter().map(|l| l + link_base));
            }
            tables.append(&local);
            let n = cloud.len();
            bodies.push(Body {
                id: id as u32,
                name: spec.name,
                material: spec.material,
                constants,
                spacing: spec.spacing,
                points: start..start + n,
            });
            start += n;
            clouds.push(cloud);
        }
        precracked.sort_unstable();
        precracked.dedup();
        let cloud = PointCloud::concat(&clouds)?;
        let body_of = |i: usize| &bodies[cloud.body[i] as usize];
        let weights = KernelWeights::new(
            &tables,
            |i| body_of(i).constants,
            |i| body_of(i).material.horizon,
        );
        let n = cloud.len();
        let critical_stretch = (0..n).map(|i| body_of(i).constants.critical_stretch).collect();
        let density = (0..n).map(|i| body_of(i).material.density).collect();
        let horizon = (0..n).map(|i| body_of(i).material.horizon).collect();
        Ok(Model {
            dim,
            cloud,
            bodies,
            tables,
            weights,
            critical_stretch,
            density,
            horizon,
            precracked,
        })
    }

    pub fn len(&self) -> usize {
        self.cloud.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cloud.is_empty()
    }

    pub fn body_of(&self, i: usize) -> &Body {
        &self.bodies[self.cloud.body[i] as usize]
    }

    pub fn body_by_name(&self, name: &str) -> Option<&Body> {
        self.bodies.iter().find(|b| b.name == name)
    }
}
