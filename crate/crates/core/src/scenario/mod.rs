//! Scenario files, presets, snapshot output and the run driver.

pub mod config;
pub mod presets;
pub mod snapshot;

use std::fs;
use std::path::{Path, PathBuf};

pub use config::{OutputFormat, ScenarioConfig};
pub use presets::{Preset, Scale};
pub use snapshot::Snapshot;

use crate::dynamics::{RunReport, Simulation};
use crate::error::{Error, Result};
use crate::model::Model;

/// Builds the model and simulation described by a validated scenario.
pub fn build_simulation(cfg: &ScenarioConfig) -> Result<Simulation> {
    let model = Model::assemble(cfg.body_specs()?, cfg.output.table_cache.as_deref())?;
    Simulation::new(model, &cfg.loads, cfg.contact_params(), cfg.sim_options()?)
}

/// Runs a scenario, writing snapshots and `report.json` into `out_dir`
/// (the configured directory when `None`).
pub fn run_scenario(cfg: &ScenarioConfig, out_dir: Option<&Path>) -> Result<(Simulation, RunReport)> {
    let mut sim = build_simulation(cfg)?;
    let report = run_built(&mut sim, cfg, out_dir)?;
    Ok((sim, report))
}

/// Runs an already built simulation for the configured number of steps,
/// writing its outputs like [`run_scenario`].
pub fn run_built(sim: &mut Simulation, cfg: &ScenarioConfig, out_dir: Option<&Path>) -> Result<RunReport> {
    let dir: PathBuf = out_dir.map_or_else(|| cfg.output.directory.clone(), Path::to_path_buf);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let formats = cfg.output.formats.clone();
    let report = sim.run(cfg.simulation.steps, cfg.simulation.snapshot_every, |s| {
        let snap = Snapshot::from_sim(s);
        for f in &formats {
            match f {
                OutputFormat::Csv => snapshot::write_csv(&snap, &snapshot::csv_path(&dir, snap.step))?,
                OutputFormat::Vtk => snapshot::write_vtk(&snap, &snapshot::vtk_path(&dir, snap.step))?,
            }
        }
        Ok(())
    })?;
    let path = dir.join("report.json");
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(report)
}
