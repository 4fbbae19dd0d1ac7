//! Scenario files (TOML).
//!
//! Parsing is strict: unknown keys are errors, and a file missing required
//! sections reports all of them at once.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::contact::{default_critical_distance, ContactParams};
use crate::dynamics::{stable_timestep, LoadSchedule, SimOptions};
use crate::error::{Error, Result};
use crate::geometry::{
    build_curved_bar, build_disc, build_grid, build_sphere, CrackSegment, Dim, PointCloud,
    SectionOrientation,
};
use crate::mechanics::{Constants, Material, StretchMeasure};
use crate::model::BodySpec;
use crate::Vec3;

const REQUIRED_SECTIONS: [&str; 3] = ["simulation", "output", "bodies"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub simulation: SimulationSection,
    #[serde(default)]
    pub switches: Switches,
    pub output: OutputSection,
    pub bodies: Vec<BodyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contact: Option<ContactConfig>,
    #[serde(default)]
    pub loads: Vec<LoadSchedule>,
}

fn default_safety() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub dim: Dim,
    pub steps: u64,
    /// Fixed time step (s); when absent it is derived from the wave speed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default = "default_safety")]
    pub dt_safety: f64,
    pub snapshot_every: u64,
    #[serde(default)]
    pub progress_every: u64,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Switches {
    #[serde(default)]
    pub stretch_measure: StretchMeasure,
    /// Two- and three-neighbor interactions fail with their bonds.
    #[serde(default = "yes")]
    pub cascade: bool,
    /// Points with prescribed velocity keep their bonds.
    #[serde(default = "yes")]
    pub protect_driven: bool,
}

impl Default for Switches {
    fn default() -> Self {
        Self {
            stretch_measure: StretchMeasure::default(),
            cascade: true,
            protect_driven: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Vtk,
}

fn csv_only() -> Vec<OutputFormat> {
    vec![OutputFormat::Csv]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub directory: PathBuf,
    #[serde(default = "csv_only")]
    pub formats: Vec<OutputFormat>,
    /// Directory for cached interaction tables.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table_cache: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyConfig {
    pub name: String,
    pub geometry: GeometryConfig,
    pub material: Material,
    /// Rigid offset added to the generated points.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cracks: Vec<CrackConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometryConfig {
    /// Regular lattice centred on the origin.
    Grid { counts: Vec<usize>, spacing: f64 },
    /// Curved bar along `cos(πx/2)`; the spacing is `width / points_per_section`.
    CurvedBar {
        points_per_section: usize,
        length: f64,
        width: f64,
        #[serde(default)]
        orientation: SectionOrientation,
    },
    Sphere { radius: f64, spacing: f64 },
    Disc { radius: f64, height: f64, spacing: f64 },
}

impl GeometryConfig {
    pub fn spacing(&self) -> f64 {
        match self {
            GeometryConfig::Grid { spacing, .. }
            | GeometryConfig::Sphere { spacing, .. }
            | GeometryConfig::Disc { spacing, .. } => *spacing,
            GeometryConfig::CurvedBar {
                points_per_section,
                width,
                ..
            } => width / *points_per_section as f64,
        }
    }

    pub fn build(&self, dim: Dim) -> Result<PointCloud> {
        let three_only = |what: &str| {
            if dim != Dim::Three {
                Err(Error::Config(format!("{what} geometry needs dim = 3")))
            } else {
                Ok(())
            }
        };
        match self {
            GeometryConfig::Grid { counts, spacing } => build_grid(counts, *spacing, Vec3::zeros(), dim),
            GeometryConfig::CurvedBar {
                points_per_section,
                length,
                width,
                orientation,
            } => build_curved_bar(*points_per_section, *length, *width, dim, *orientation),
            GeometryConfig::Sphere { radius, spacing } => {
                three_only("sphere")?;
                build_sphere(*radius, *spacing)
            }
            GeometryConfig::Disc {
                radius,
                height,
                spacing,
            } => {
                three_only("disc")?;
                build_disc(*radius, *height, *spacing)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrackConfig {
    pub a: [f64; 3],
    pub b: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactConfig {
    /// Bodies by name.
    pub pairs: Vec<[String; 2]>,
    /// `l_c` (m); defaults to half the larger spacing of each pair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub critical_distance: Option<f64>,
    pub stiffness: f64,
    /// `δ` in the contact law (m); defaults to the larger horizon of each
    /// touching pair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
}

/// Problems found by [`ScenarioConfig::parse`] before any geometry is built.
fn missing_sections(text: &str) -> Result<()> {
    let value: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    let missing: Vec<&str> = REQUIRED_SECTIONS
        .iter()
        .copied()
        .filter(|s| !value.contains_key(*s))
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "missing required section(s): {}",
            missing
                .iter()
                .map(|s| if *s == "bodies" { "[[bodies]]".to_string() } else { format!("[{s}]") })
                .collect::<Vec<_>>()
                .join(", ")
        )))
    }
}

impl ScenarioConfig {
    /// Parses and validates a scenario.
    pub fn parse(text: &str) -> Result<Self> {
        missing_sections(text)?;
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes to TOML")
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        let sim = &self.simulation;
        if let Some(dt) = sim.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                problems.push(format!("simulation.dt must be positive, got {dt}"));
            }
        }
        if !(sim.dt_safety > 0.0 && sim.dt_safety.is_finite()) {
            problems.push(format!("simulation.dt_safety must be positive, got {}", sim.dt_safety));
        }
        if self.bodies.is_empty() {
            problems.push("at least one [[bodies]] entry is required".into());
        }
        for (k, b) in self.bodies.iter().enumerate() {
            if self.bodies[..k].iter().any(|o| o.name == b.name) {
                problems.push(format!("body name '{}' is used twice", b.name));
            }
            if let Err(e) = Constants::derive(&b.material, sim.dim) {
                problems.push(format!("body '{}': {e}", b.name));
            }
            if !(b.geometry.spacing() > 0.0) {
                problems.push(format!("body '{}': point spacing must be positive", b.name));
            }
            for c in &b.cracks {
                if c.a == c.b {
                    problems.push(format!("body '{}': crack endpoints coincide", b.name));
                }
            }
        }
        if let Some(c) = &self.contact {
            for pair in &c.pairs {
                for name in pair {
                    if !self.bodies.iter().any(|b| &b.name == name) {
                        problems.push(format!("contact pair refers to unknown body '{name}'"));
                    }
                }
                if pair[0] == pair[1] {
                    problems.push(format!("contact pair names '{}' twice", pair[0]));
                }
            }
            if !(c.stiffness > 0.0) {
                problems.push(format!("contact.stiffness must be positive, got {}", c.stiffness));
            }
            if let Some(lc) = c.critical_distance {
                if !(lc > 0.0) {
                    problems.push(format!("contact.critical_distance must be positive, got {lc}"));
                }
            }
        }
        for load in &self.loads {
            if let Err(e) = load.validate() {
                problems.push(e.to_string());
            }
            if let Some(name) = load_body(load) {
                if !self.bodies.iter().any(|b| b.name == name) {
                    problems.push(format!("load refers to unknown body '{name}'"));
                }
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("\n")))
        }
    }

    pub fn body_id(&self, name: &str) -> Option<u32> {
        self.bodies.iter().position(|b| b.name == name).map(|i| i as u32)
    }

    /// Reference clouds, materials and cracks of every body.
    pub fn body_specs(&self) -> Result<Vec<BodySpec>> {
        let dim = self.simulation.dim;
        self.bodies
            .iter()
            .map(|b| {
                let mut cloud = b.geometry.build(dim)?;
                if let Some(o) = b.offset {
                    cloud.translate(Vec3::from(o));
                }
                let cracks = b
                    .cracks
                    .iter()
                    .map(|c| CrackSegment::new(Vec3::from(c.a), Vec3::from(c.b)))
                    .collect::<Result<_>>()?;
                Ok(BodySpec {
                    name: b.name.clone(),
                    material: b.material.clone(),
                    cloud,
                    spacing: b.geometry.spacing(),
                    cracks,
                })
            })
            .collect()
    }

    pub fn contact_params(&self) -> Option<ContactParams> {
        let c = self.contact.as_ref()?;
        let spacing = |name: &str| {
            self.bodies
                .iter()
                .find(|b| b.name == name)
                .map_or(0.0, |b| b.geometry.spacing())
        };
        let lc = c.critical_distance.unwrap_or_else(|| {
            c.pairs
                .iter()
                .map(|[a, b]| default_critical_distance(spacing(a), spacing(b)))
                .fold(0.0, f64::max)
        });
        Some(ContactParams {
            critical_distance: lc,
            stiffness: c.stiffness,
            pairs: c
                .pairs
                .iter()
                .filter_map(|[a, b]| Some([self.body_id(a)?, self.body_id(b)?]))
                .collect(),
            horizon: c.horizon,
        })
    }

    /// The configured time step, or the smallest stable one over all bodies.
    pub fn time_step(&self) -> Result<f64> {
        if let Some(dt) = self.simulation.dt {
            return Ok(dt);
        }
        let mut dt = f64::INFINITY;
        for b in &self.bodies {
            dt = dt.min(stable_timestep(&b.material, b.geometry.spacing(), self.simulation.dt_safety)?);
        }
        Ok(dt)
    }

    pub fn sim_options(&self) -> Result<SimOptions> {
        Ok(SimOptions {
            dt: self.time_step()?,
            measure: self.switches.stretch_measure,
            cascade: self.switches.cascade,
            protect_driven: self.switches.protect_driven,
            progress_every: self.simulation.progress_every,
        })
    }

    /// Human-readable derived constants of every body.
    pub fn describe(&self) -> Result<String> {
        let mut out = String::new();
        for b in &self.bodies {
            let c = Constants::derive(&b.material, self.simulation.dim)?;
            out.push_str(&format!(
                "body '{}': C1={:e} C2={:e} C3={:e} eps_c={:e} spacing={} horizon={}\n",
                b.name,
                c.c1,
                c.c2,
                c.c3,
                c.critical_stretch,
                b.geometry.spacing(),
                b.material.horizon
            ));
        }
        out.push_str(&format!("dt={:e} steps={}\n", self.time_step()?, self.simulation.steps));
        Ok(out)
    }
}

fn load_body(load: &LoadSchedule) -> Option<&str> {
    use crate::dynamics::Region;
    let region = match load {
        LoadSchedule::VelocityRegion { region, .. } | LoadSchedule::InitialVelocity { region, .. } => region,
        LoadSchedule::PressureImpulse { .. } => return None,
    };
    match region {
        Region::Box { body, .. } => body.as_deref(),
        Region::Body { body } | Region::Edge { body, .. } => Some(body),
        Region::Tagged { .. } => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
[simulation]
dim = 2
steps = 10
snapshot_every = 5

[output]
directory = "out"

[[bodies]]
name = "plate"
geometry = { kind = "grid", counts = [10, 10], spacing = 0.005 }
material = { density = 7580.0, youngs_modulus = 210e9, poisson_ratio = 0.3, fracture_energy = 140.0, horizon = 0.015075 }
cracks = [{ a = [-0.03, 0.0, 0.0], b = [0.0, 0.0, 0.0] }]

[[loads]]
kind = "velocity_region"
velocity = [0.0, 0.005, 0.0]
region = { select = "edge", body = "plate", side = "top", layers = 3 }
"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = ScenarioConfig::parse(SMALL).unwrap();
        assert_eq!(cfg.simulation.dim, Dim::Two);
        assert!(cfg.switches.cascade);
        assert_eq!(cfg.output.formats, vec![OutputFormat::Csv]);
        let again = ScenarioConfig::parse(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn empty_file_lists_all_sections() {
        let msg = ScenarioConfig::parse("").unwrap_err().to_string();
        for s in ["[simulation]", "[output]", "[[bodies]]"] {
            assert!(msg.contains(s), "{msg}");
        }
    }

    #[test]
    fn unknown_keys_rejected_with_line() {
        let text = SMALL.replace("steps = 10", "steps = 10\nstep = 3");
        let msg = ScenarioConfig::parse(&text).unwrap_err().to_string();
        assert!(msg.contains("unknown field") && msg.contains("line"), "{msg}");
    }

    #[test]
    fn bad_poisson_ratio() {
        let text = SMALL.replace("poisson_ratio = 0.3", "poisson_ratio = 0.7");
        let msg = ScenarioConfig::parse(&text).unwrap_err().to_string();
        assert!(msg.contains("Poisson ratio out of range"), "{msg}");
    }

    #[test]
    fn dangling_body_reference() {
        let text = SMALL.replace("body = \"plate\"", "body = \"slab\"");
        let msg = ScenarioConfig::parse(&text).unwrap_err().to_string();
        assert!(msg.contains("unknown body 'slab'"), "{msg}");
    }

    #[test]
    fn automatic_time_step() {
        let cfg = ScenarioConfig::parse(SMALL).unwrap();
        let dt = cfg.time_step().unwrap();
        let expected = stable_timestep(&cfg.bodies[0].material, 0.005, 0.5).unwrap();
        assert_eq!(dt, expected);
        assert!(cfg.describe().unwrap().contains("body 'plate'"));
    }
}
