//! Explicit time integration, loads and the simulation loop.
//!
//! One step of [`Simulation::step`]:
//!
//! 1. half-kick `u̇ += Δt/2·ü`, drift `u += Δt·u̇`
//! 2. prescribed velocities overwrite the driven points
//! 3. bond failure from the new positions
//! 4. `ü = (b_int + b_con + b_ext)/ρ`
//! 5. second half-kick, prescribed velocities again

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::contact::{build_contact_sets, contact_force, ContactParams};
use crate::damage::{update_bond_failure, FailureState};
use crate::error::{Error, Result};
use crate::geometry::{bar_curve_slope, Dim, PointTag};
use crate::mechanics::{bond_vectors, force_b1, force_b2, force_b3, ForceInput, Material, StretchMeasure};
use crate::model::Model;
use crate::Vec3;

/// Which points a load acts on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "select", rename_all = "snake_case", deny_unknown_fields)]
pub enum Region {
    /// Points with reference position inside the closed box, optionally of one body.
    Box {
        min: [f64; 3],
        max: [f64; 3],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        body: Option<String>,
    },
    /// Every point of a body.
    Body { body: String },
    /// The outermost `layers` point rows of a body on one side.
    Edge { body: String, side: Side, layers: usize },
    /// Points carrying a geometry tag.
    Tagged { tag: PointTag },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Top,
    Bottom,
    Left,
    Right,
}

impl Region {
    pub fn resolve(&self, model: &Model) -> Result<Vec<u32>> {
        let body_id = |name: &str| {
            model
                .body_by_name(name)
                .map(|b| b.id)
                .ok_or_else(|| Error::Config(format!("region refers to unknown body '{name}'")))
        };
        let c = &model.cloud;
        let points: Vec<u32> = match self {
            Region::Box { min, max, body } => {
                let only = body.as_deref().map(body_id).transpose()?;
                (0..c.len())
                    .filter(|&i| only.is_none_or(|b| c.body[i] == b))
                    .filter(|&i| {
                        let p = c.positions[i];
                        (0..3).all(|k| p[k] >= min[k] && p[k] <= max[k])
                    })
                    .map(|i| i as u32)
                    .collect()
            }
            Region::Body { body } => {
                let b = body_id(body)?;
                (0..c.len() as u32).filter(|&i| c.body[i as usize] == b).collect()
            }
            Region::Edge { body, side, layers } => {
                let b = body_id(body)?;
                let spacing = model.bodies[b as usize].spacing;
                let (axis, sign) = match side {
                    Side::Top => (1, 1.0),
                    Side::Bottom => (1, -1.0),
                    Side::Right => (0, 1.0),
                    Side::Left => (0, -1.0),
                };
                let members: Vec<u32> = (0..c.len() as u32).filter(|&i| c.body[i as usize] == b).collect();
                let extreme = members
                    .iter()
                    .map(|&i| sign * c.positions[i as usize][axis])
                    .fold(f64::NEG_INFINITY, f64::max);
                let reach = (*layers as f64 - 0.5) * spacing;
                members
                    .into_iter()
                    .filter(|&i| extreme - sign * c.positions[i as usize][axis] <= reach)
                    .collect()
            }
            Region::Tagged { tag } => c.tagged(*tag),
        };
        if points.is_empty() {
            return Err(Error::Config(format!("load region {self:?} selects no points")));
        }
        Ok(points)
    }
}

fn default_sign() -> f64 {
    1.0
}

fn default_bar_length() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LoadSchedule {
    /// Driven points move with constant velocity: `u̇ = v`, `u = v·t`.
    VelocityRegion { region: Region, velocity: [f64; 3] },
    /// Parabolic pressure pulse on the two tagged end layers of a curved bar.
    PressureImpulse {
        /// Peak pressure `p₀` (N/m in 2D, N/m² in 3D).
        peak: f64,
        /// Pulse duration `t₁` (s).
        duration: f64,
        /// Bar length used for the end angle of the normals.
        #[serde(default = "default_bar_length")]
        bar_length: f64,
        /// Multiplies both normals; `-1` turns the push into a pull.
        #[serde(default = "default_sign")]
        normal_sign: f64,
    },
    /// Velocity given to a region at `t = 0`.
    InitialVelocity { region: Region, velocity: [f64; 3] },
}

impl LoadSchedule {
    pub fn validate(&self) -> Result<()> {
        let finite = |v: &[f64; 3]| v.iter().all(|x| x.is_finite());
        match self {
            LoadSchedule::VelocityRegion { velocity, .. }
            | LoadSchedule::InitialVelocity { velocity, .. } => {
                if !finite(velocity) {
                    return Err(Error::Config("load velocity must be finite".into()));
                }
            }
            LoadSchedule::PressureImpulse {
                peak,
                duration,
                bar_length,
                normal_sign,
            } => {
                if !(*duration > 0.0) {
                    return Err(Error::Config(format!(
                        "pressure impulse duration must be positive, got {duration}"
                    )));
                }
                if !peak.is_finite() || !(*bar_length > 0.0) {
                    return Err(Error::Config("pressure impulse needs a finite peak and a positive bar length".into()));
                }
                if normal_sign.abs() != 1.0 {
                    return Err(Error::Config(format!("normal_sign must be +1 or -1, got {normal_sign}")));
                }
            }
        }
        Ok(())
    }
}

/// `p(t) = −4p₀/t₁²·(t − t₁/2)² + p₀` on `[0, t₁]`, zero elsewhere.
pub fn pressure_impulse(t: f64, peak: f64, duration: f64) -> f64 {
    if !(0.0..=duration).contains(&t) {
        return 0.0;
    }
    let s = t - 0.5 * duration;
    (-4.0 * peak / (duration * duration) * s * s + peak).max(0.0)
}

/// Load normals `(n_l, n_r)` of the curved bar ends, with
/// `α = arctan(−1/f'(L/2))`.
pub fn bar_end_normals(bar_length: f64) -> (Vec3, Vec3) {
    let alpha = (-1.0 / bar_curve_slope(bar_length / 2.0)).atan();
    let (s, c) = alpha.sin_cos();
    (Vec3::new(s, c, 0.0), Vec3::new(-s, c, 0.0))
}

/// Dilatational wave speed `√(E(1−ν)/((1+ν)(1−2ν)ρ))`; the same expression
/// serves 2D with the areal density.
pub fn wave_speed(m: &Material) -> f64 {
    let (e, nu) = (m.youngs_modulus, m.poisson_ratio);
    (e * (1.0 - nu) / ((1.0 + nu) * (1.0 - 2.0 * nu) * m.density)).sqrt()
}

/// `Δt = safety·Δx/c`.
pub fn stable_timestep(m: &Material, spacing: f64, safety: f64) -> Result<f64> {
    m.validate()?;
    if !(safety > 0.0 && safety.is_finite()) {
        return Err(Error::Config(format!("timestep safety factor must be positive, got {safety}")));
    }
    if !(spacing > 0.0) {
        return Err(Error::Geometry(format!("point spacing must be positive, got {spacing}")));
    }
    Ok(safety * spacing / wave_speed(m))
}

/// `u̇ += Δt/2·ü`.
pub fn half_kick(v: &mut [Vec3], a: &[Vec3], dt: f64) {
    let h = 0.5 * dt;
    v.iter_mut().zip(a).for_each(|(v, a)| *v += a * h);
}

/// `u += Δt·u̇`.
pub fn drift(u: &mut [Vec3], v: &[Vec3], dt: f64) {
    u.iter_mut().zip(v).for_each(|(u, v)| *u += v * dt);
}

/// One Velocity-Verlet step for a plain system; `accel(u, a)` writes the
/// accelerations of displacement `u`.
pub fn step_velocity_verlet(
    u: &mut [Vec3],
    v: &mut [Vec3],
    a: &mut [Vec3],
    dt: f64,
    mut accel: impl FnMut(&[Vec3], &mut [Vec3]),
) {
    half_kick(v, a, dt);
    drift(u, v, dt);
    accel(u, a);
    half_kick(v, a, dt);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub dt: f64,
    pub measure: StretchMeasure,
    /// Two- and three-neighbor interactions fail with their bonds.
    pub cascade: bool,
    /// Driven points never lose bonds.
    pub protect_driven: bool,
    /// Print a progress line to stderr every this many steps (0: never).
    pub progress_every: u64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            dt: 0.0,
            measure: StretchMeasure::default(),
            cascade: true,
            protect_driven: true,
            progress_every: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub u: Vec<Vec3>,
    pub v: Vec<Vec3>,
    pub a: Vec<Vec3>,
    pub t: f64,
    pub step: u64,
    pub failure: FailureState,
    pub b_int: Vec<Vec3>,
    pub b_con: Vec<Vec3>,
    pub b_ext: Vec<Vec3>,
}

/// Wall-clock seconds spent in each phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub contact: f64,
    pub external: f64,
    pub failure: f64,
    pub integration: f64,
    pub output: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodyReport {
    pub name: String,
    pub points: usize,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub critical_stretch: f64,
    pub max_damage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub steps: u64,
    pub dt: f64,
    pub final_time: f64,
    pub points: usize,
    pub links: usize,
    pub total_broken: u64,
    pub precracked: usize,
    pub max_damage: f64,
    pub wall_clock: f64,
    pub timings: Timings,
    /// Interactions skipped because their current measure collapsed.
    pub collapsed_skipped: u64,
    pub max_contact_pairs: usize,
    pub bodies: Vec<BodyReport>,
}

#[derive(Debug, Clone)]
enum Resolved {
    Velocity { points: Vec<u32>, velocity: Vec3 },
    Pressure {
        left: Vec<u32>,
        right: Vec<u32>,
        peak: f64,
        duration: f64,
        n_left: Vec3,
        n_right: Vec3,
    },
}

pub struct Simulation {
    pub model: Model,
    pub state: SimState,
    pub options: SimOptions,
    pub contact: Option<ContactParams>,
    loads: Vec<Resolved>,
    protected: Vec<bool>,
    bond_dx: Vec<Vec3>,
    scratch: Vec<Vec3>,
    x: Vec<Vec3>,
    pub timings: Timings,
    pub collapsed_skipped: u64,
    pub max_contact_pairs: usize,
    started: Instant,
}

impl Simulation {
    pub fn new(
        model: Model,
        loads: &[LoadSchedule],
        contact: Option<ContactParams>,
        options: SimOptions,
    ) -> Result<Self> {
        if !(options.dt > 0.0 && options.dt.is_finite()) {
            return Err(Error::Config(format!("time step must be positive, got {}", options.dt)));
        }
        if let Some(c) = &contact {
            c.validate()?;
            for p in &c.pairs {
                for &b in p {
                    if b as usize >= model.bodies.len() {
                        return Err(Error::Config(format!("contact pair names unknown body id {b}")));
                    }
                }
            }
        }
        let n = model.len();
        let mut failure = FailureState::new(&model.tables);
        failure.seed_failed(&model.tables, &model.precracked);
        let mut state = SimState {
            u: vec![Vec3::zeros(); n],
            v: vec![Vec3::zeros(); n],
            a: vec![Vec3::zeros(); n],
            t: 0.0,
            step: 0,
            failure,
            b_int: vec![Vec3::zeros(); n],
            b_con: vec![Vec3::zeros(); n],
            b_ext: vec![Vec3::zeros(); n],
        };
        let mut resolved = Vec::new();
        let mut protected = vec![false; n];
        for load in loads {
            load.validate()?;
            match load {
                LoadSchedule::VelocityRegion { region, velocity } => {
                    let points = region.resolve(&model)?;
                    if options.protect_driven {
                        points.iter().for_each(|&i| protected[i as usize] = true);
                    }
                    resolved.push(Resolved::Velocity {
                        points,
                        velocity: Vec3::from(*velocity),
                    });
                }
                LoadSchedule::InitialVelocity { region, velocity } => {
                    for i in region.resolve(&model)? {
                        state.v[i as usize] = Vec3::from(*velocity);
                    }
                }
                LoadSchedule::PressureImpulse {
                    peak,
                    duration,
                    bar_length,
                    normal_sign,
                } => {
                    let left = Region::Tagged { tag: PointTag::LoadLeft }.resolve(&model)?;
                    let right = Region::Tagged { tag: PointTag::LoadRight }.resolve(&model)?;
                    let (nl, nr) = bar_end_normals(*bar_length);
                    resolved.push(Resolved::Pressure {
                        left,
                        right,
                        peak: *peak,
                        duration: *duration,
                        n_left: nl * *normal_sign,
                        n_right: nr * *normal_sign,
                    });
                }
            }
        }
        let mut sim = Simulation {
            x: model.cloud.positions.clone(),
            model,
            state,
            options,
            contact,
            loads: resolved,
            protected,
            bond_dx: Vec::new(),
            scratch: vec![Vec3::zeros(); n],
            timings: Timings::default(),
            collapsed_skipped: 0,
            max_contact_pairs: 0,
            started: Instant::now(),
        };
        sim.apply_kinematics(false);
        sim.compute_accelerations()?;
        sim.apply_kinematics(true);
        Ok(sim)
    }

    pub fn dim(&self) -> Dim {
        self.model.dim
    }

    /// Current positions `X + u`.
    pub fn positions(&self) -> Vec<Vec3> {
        self.model
            .cloud
            .positions
            .iter()
            .zip(&self.state.u)
            .map(|(p, u)| p + u)
            .collect()
    }

    /// Prescribed displacement and velocity of driven points at the current
    /// time. With `velocities_only` the displacements are left alone.
    fn apply_kinematics(&mut self, velocities_only: bool) {
        let t = self.state.t;
        for load in &self.loads {
            if let Resolved::Velocity { points, velocity } = load {
                for &i in points {
                    let i = i as usize;
                    self.state.v[i] = *velocity;
                    self.state.a[i] = Vec3::zeros();
                    if !velocities_only {
                        self.state.u[i] = velocity * t;
                    }
                }
            }
        }
    }

    fn apply_external(&mut self) {
        let t = self.state.t;
        self.state.b_ext.iter_mut().for_each(|b| *b = Vec3::zeros());
        for load in &self.loads {
            if let Resolved::Pressure {
                left,
                right,
                peak,
                duration,
                n_left,
                n_right,
            } = load
            {
                let p = pressure_impulse(t, *peak, *duration);
                for (set, n) in [(left, n_left), (right, n_right)] {
                    for &i in set {
                        let dx = self.model.body_of(i as usize).spacing;
                        self.state.b_ext[i as usize] += n * (p / dx);
                    }
                }
            }
        }
    }

    fn compute_accelerations(&mut self) -> Result<()> {
        let n = self.model.len();
        for i in 0..n {
            self.x[i] = self.model.cloud.positions[i] + self.state.u[i];
        }
        bond_vectors(&self.model.tables, &self.x, &mut self.bond_dx);
        let input = ForceInput {
            tables: &self.model.tables,
            weights: &self.model.weights,
            bond_dx: &self.bond_dx,
            link_intact: &self.state.failure.intact,
            cascade: self.options.cascade,
        };
        let clock = Instant::now();
        self.collapsed_skipped += force_b1(&input, &mut self.state.b_int);
        self.timings.b1 += clock.elapsed().as_secs_f64();
        if !self.model.tables.pairs.is_empty() {
            let clock = Instant::now();
            self.collapsed_skipped += force_b2(&input, &mut self.scratch);
            add_into(&mut self.state.b_int, &self.scratch);
            self.timings.b2 += clock.elapsed().as_secs_f64();
        }
        if !self.model.tables.triples.is_empty() {
            let clock = Instant::now();
            self.collapsed_skipped += force_b3(&input, &mut self.scratch);
            add_into(&mut self.state.b_int, &self.scratch);
            self.timings.b3 += clock.elapsed().as_secs_f64();
        }

        let clock = Instant::now();
        if let Some(params) = &self.contact {
            let sets = build_contact_sets(&self.x, &self.model.cloud.body, params);
            self.max_contact_pairs = self.max_contact_pairs.max(sets.pair_count());
            self.collapsed_skipped += contact_force(
                &self.x,
                &self.model.cloud.volumes,
                &self.model.horizon,
                &sets,
                params,
                &mut self.state.b_con,
            );
        }
        self.timings.contact += clock.elapsed().as_secs_f64();

        let clock = Instant::now();
        self.apply_external();
        self.timings.external += clock.elapsed().as_secs_f64();

        let s = &mut self.state;
        for i in 0..n {
            s.a[i] = (s.b_int[i] + s.b_con[i] + s.b_ext[i]) / self.model.density[i];
        }
        Ok(())
    }

    fn check_finite(&self) -> Result<()> {
        let s = &self.state;
        for (quantity, field) in [("displacement", &s.u), ("velocity", &s.v), ("acceleration", &s.a)] {
            if let Some(point) = field.iter().position(|v| !v.iter().all(|c| c.is_finite())) {
                return Err(Error::NonFinite {
                    step: s.step,
                    point,
                    quantity,
                });
            }
        }
        Ok(())
    }

    /// Advances the state by one time step.
    pub fn step(&mut self) -> Result<()> {
        let dt = self.options.dt;
        let clock = Instant::now();
        half_kick(&mut self.state.v, &self.state.a, dt);
        drift(&mut self.state.u, &self.state.v, dt);
        self.state.step += 1;
        self.state.t = self.state.step as f64 * dt;
        self.apply_kinematics(false);
        self.timings.integration += clock.elapsed().as_secs_f64();

        let clock = Instant::now();
        let current = self.positions();
        update_bond_failure(
            &mut self.state.failure,
            &self.model.tables,
            &self.model.cloud.positions,
            &current,
            &self.model.critical_stretch,
            self.options.measure,
            &self.protected,
        );
        self.timings.failure += clock.elapsed().as_secs_f64();

        self.compute_accelerations()?;

        let clock = Instant::now();
        half_kick(&mut self.state.v, &self.state.a, dt);
        self.apply_kinematics(true);
        self.timings.integration += clock.elapsed().as_secs_f64();
        self.check_finite()?;

        let every = self.options.progress_every;
        if every > 0 && self.state.step.is_multiple_of(every) {
            eprintln!("{}", self.progress_line());
        }
        Ok(())
    }

    pub fn progress_line(&self) -> String {
        format!(
            "STEP {} t={:e} broken={} maxD={}",
            self.state.step,
            self.state.t,
            self.state.failure.total_broken,
            self.state.failure.max_damage()
        )
    }

    /// Runs `steps` steps. `on_snapshot` sees the initial state and every
    /// `snapshot_every`-th step (never when `snapshot_every` is 0).
    pub fn run(
        &mut self,
        steps: u64,
        snapshot_every: u64,
        mut on_snapshot: impl FnMut(&Simulation) -> Result<()>,
    ) -> Result<RunReport> {
        self.started = Instant::now();
        let emit = |sim: &mut Simulation, f: &mut dyn FnMut(&Simulation) -> Result<()>| {
            let clock = Instant::now();
            let r = f(sim);
            sim.timings.output += clock.elapsed().as_secs_f64();
            r
        };
        if snapshot_every > 0 {
            emit(self, &mut on_snapshot)?;
        }
        for _ in 0..steps {
            self.step()?;
            if snapshot_every > 0 && self.state.step.is_multiple_of(snapshot_every) {
                emit(self, &mut on_snapshot)?;
            }
        }
        Ok(self.report())
    }

    pub fn report(&self) -> RunReport {
        let f = &self.state.failure;
        RunReport {
            steps: self.state.step,
            dt: self.options.dt,
            final_time: self.state.t,
            points: self.model.len(),
            links: self.model.tables.links.len(),
            total_broken: f.total_broken,
            precracked: self.model.precracked.len(),
            max_damage: f.max_damage(),
            wall_clock: self.started.elapsed().as_secs_f64(),
            timings: self.timings,
            collapsed_skipped: self.collapsed_skipped,
            max_contact_pairs: self.max_contact_pairs,
            bodies: self
                .model
                .bodies
                .iter()
                .map(|b| BodyReport {
                    name: b.name.clone(),
                    points: b.points.len(),
                    c1: b.constants.c1,
                    c2: b.constants.c2,
                    c3: b.constants.c3,
                    critical_stretch: b.constants.critical_stretch,
                    max_damage: f.damage[b.points.clone()].iter().copied().fold(0.0, f64::max),
                })
                .collect(),
        }
    }
}

fn add_into(acc: &mut [Vec3], add: &[Vec3]) {
    acc.iter_mut().zip(add).for_each(|(a, b)| *a += b);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, PointCloud};
    use crate::model::BodySpec;

    fn steel() -> Material {
        Material {
            density: 7850.0,
            youngs_modulus: 210e9,
            poisson_ratio: 0.3,
            fracture_energy: 1e9,
            horizon: 0.015,
        }
    }

    fn single(cloud: PointCloud, material: Material, spacing: f64) -> Model {
        Model::assemble(
            vec![BodySpec {
                name: "body".into(),
                material,
                cloud,
                spacing,
                cracks: vec![],
            }],
            None,
        )
        .unwrap()
    }

    #[test]
    fn impulse_shape() {
        let (p0, t1) = (4e5, 300e-6);
        assert_eq!(pressure_impulse(0.0, p0, t1), 0.0);
        assert_eq!(pressure_impulse(t1 / 2.0, p0, t1), p0);
        assert!(pressure_impulse(t1, p0, t1).abs() < 1e-9 * p0);
        assert_eq!(pressure_impulse(2.0 * t1, p0, t1), 0.0);
        assert_eq!(pressure_impulse(-1e-6, p0, t1), 0.0);
        assert!((p0 / 3.125e-3 - 1.28e8).abs() < 1e-6);
    }

    #[test]
    fn end_normals_are_inward_tangents() {
        let (nl, nr) = bar_end_normals(1.0);
        let t = Vec3::new(1.0, bar_curve_slope(-0.5), 0.0).normalize();
        assert!((nl - t).norm() < 1e-12);
        assert!((nr - Vec3::new(-t.x, t.y, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn timestep_rule() {
        let m = Material { density: 7850.0, ..steel() };
        let c = wave_speed(&m);
        assert!((c - 6001.0).abs() < 10.0, "{c}");
        let dt = stable_timestep(&m, 5e-3, 0.5).unwrap();
        assert!((dt - 0.5 * 5e-3 / c).abs() < 1e-18);
        assert_eq!(stable_timestep(&m, 1e-2, 0.5).unwrap(), 2.0 * dt);
        assert!(stable_timestep(&m, 5e-3, 0.0).is_err());
    }

    #[test]
    fn free_flight_is_exact() {
        let mut u = vec![Vec3::zeros(); 2];
        let mut v = vec![Vec3::new(1.0, -2.0, 0.5); 2];
        let mut a = vec![Vec3::zeros(); 2];
        for _ in 0..10 {
            step_velocity_verlet(&mut u, &mut v, &mut a, 0.25, |_, a| {
                a.iter_mut().for_each(|x| *x = Vec3::zeros())
            });
        }
        assert_eq!(u[0], Vec3::new(2.5, -5.0, 1.25));
    }

    #[test]
    fn single_step_matches_hand_update() {
        // Constant acceleration g: exact for Velocity-Verlet.
        let g = Vec3::new(0.0, -9.81, 0.0);
        let mut u = vec![Vec3::zeros()];
        let mut v = vec![Vec3::new(1.0, 0.0, 0.0)];
        let mut a = vec![g];
        let dt = 0.1;
        step_velocity_verlet(&mut u, &mut v, &mut a, dt, |_, a| a[0] = g);
        let v_half = Vec3::new(1.0, 0.0, 0.0) + g * (dt / 2.0);
        assert_eq!(u[0], v_half * dt);
        assert_eq!(v[0], v_half + g * (dt / 2.0));
    }

    #[test]
    fn driven_region_moves_linearly() {
        let dx = 5e-3;
        let cloud = build_grid(&[6, 6], dx, Vec3::zeros(), Dim::Two).unwrap();
        let model = single(cloud, Material { horizon: 3.015 * dx, ..steel() }, dx);
        let top = Region::Box {
            min: [-1.0, 0.01, -1.0],
            max: [1.0, 1.0, 1.0],
            body: None,
        };
        let loads = vec![LoadSchedule::VelocityRegion {
            region: top.clone(),
            velocity: [0.0, 0.005, 0.0],
        }];
        let dt = 1e-7;
        let mut sim = Simulation::new(model, &loads, None, SimOptions { dt, ..Default::default() }).unwrap();
        let driven = top.resolve(&sim.model).unwrap();
        for _ in 0..100 {
            sim.step().unwrap();
        }
        for &i in &driven {
            let u = sim.state.u[i as usize];
            assert!((u.y - 0.005 * 100.0 * dt).abs() < 1e-20);
            assert_eq!(sim.state.v[i as usize].y, 0.005);
        }
    }

    #[test]
    fn zero_steps_emit_initial_snapshot() {
        let dx = 1e-2;
        let cloud = build_grid(&[3, 3], dx, Vec3::zeros(), Dim::Two).unwrap();
        let model = single(cloud, Material { horizon: 1.5 * dx, ..steel() }, dx);
        let mut sim = Simulation::new(model, &[], None, SimOptions { dt: 1e-7, ..Default::default() }).unwrap();
        let mut seen = Vec::new();
        let report = sim.run(0, 1, |s| {
            seen.push(s.state.step);
            Ok(())
        }).unwrap();
        assert_eq!(seen, vec![0]);
        assert_eq!(report.steps, 0);

        let mut seen = Vec::new();
        sim.run(10, 3, |s| {
            seen.push(s.state.step);
            Ok(())
        })
        .unwrap();
        assert_eq!(seen, vec![0, 3, 6, 9]);
    }

    #[test]
    fn momentum_is_conserved_without_loads() {
        let dx = 1e-2;
        let cloud = build_grid(&[5, 5], dx, Vec3::zeros(), Dim::Two).unwrap();
        let mut model = single(cloud, Material { horizon: 1.5 * dx, ..steel() }, dx);
        // Uniform effective volumes make the bond kernel pairwise antisymmetric.
        let w = model.weights.c1v1.iter().copied().fold(0.0, f64::max);
        model.weights.c1v1.iter_mut().for_each(|x| *x = w);
        model.weights.c2v2.iter_mut().for_each(|x| *x = 0.0);
        let n = model.len();
        let mut sim = Simulation::new(model, &[], None, SimOptions { dt: 2e-7, ..Default::default() }).unwrap();
        for i in 0..n {
            sim.state.v[i] = Vec3::new(((i * 7) % 5) as f64 - 2.0, ((i * 3) % 4) as f64 - 1.5, 0.0);
        }
        let momentum = |s: &Simulation| -> Vec3 { s.state.v.iter().sum() };
        let p0 = momentum(&sim);
        let scale: f64 = sim.state.v.iter().map(|v| v.norm()).sum();
        for _ in 0..2000 {
            sim.step().unwrap();
        }
        assert!((momentum(&sim) - p0).norm() < 1e-10 * scale);
    }

    #[test]
    fn divergence_is_reported() {
        let dx = 1e-2;
        let cloud = build_grid(&[3, 3], dx, Vec3::zeros(), Dim::Two).unwrap();
        let model = single(cloud, Material { horizon: 1.5 * dx, ..steel() }, dx);
        let mut sim = Simulation::new(model, &[], None, SimOptions { dt: 1e-7, ..Default::default() }).unwrap();
        sim.state.v[4] = Vec3::new(f64::NAN, 0.0, 0.0);
        match sim.step() {
            Err(Error::NonFinite { step: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_setup_rejected() {
        let dx = 1e-2;
        let cloud = build_grid(&[3, 3], dx, Vec3::zeros(), Dim::Two).unwrap();
        let model = single(cloud, Material { horizon: 1.5 * dx, ..steel() }, dx);
        assert!(Simulation::new(model.clone(), &[], None, SimOptions::default()).is_err());
        let empty = LoadSchedule::VelocityRegion {
            region: Region::Box {
                min: [5.0; 3],
                max: [6.0; 3],
                body: None,
            },
            velocity: [0.0; 3],
        };
        let opts = SimOptions { dt: 1e-7, ..Default::default() };
        assert!(Simulation::new(model.clone(), &[empty], None, opts).is_err());
        let impulse = LoadSchedule::PressureImpulse {
            peak: 1.0,
            duration: 0.0,
            bar_length: 1.0,
            normal_sign: 1.0,
        };
        assert!(impulse.validate().is_err());
    }
}
