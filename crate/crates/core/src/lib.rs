//! Continuum-kinematics-based peridynamics (CPD) for dynamic fracture.
//!
//! Bodies are discretized as point clouds. Every point interacts with the
//! points inside its horizon through one-neighbor (bond), two-neighbor
//! (triangle) and three-neighbor (tetrahedron) interactions. Bonds fail once
//! their stretch exceeds a critical value, and a failed bond takes every
//! triangle and tetrahedron built on it down with it. Distinct bodies repel
//! each other through short-range contact forces, and the equation of motion
//! is integrated explicitly with Velocity-Verlet.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: reference point clouds and neighborhood fullness.
//! * [`neighborhoods`]: interaction sets, effective volumes, pre-cracks.
//! * [`mechanics`]: material constants and the internal force kernels.
//! * [`damage`]: critical stretch, failure flags and point damage.
//! * [`contact`]: cross-body repulsion.
//! * [`dynamics`]: time integration, loads and the simulation loop.
//! * [`scenario`]: configuration files, presets and snapshot output.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod contact;
pub mod damage;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod mechanics;
pub mod model;
pub mod neighborhoods;
pub mod scenario;
pub mod spatial;

pub use contact::{ContactParams, ContactSets};
pub use damage::FailureState;
pub use dynamics::{LoadSchedule, RunReport, SimState, Simulation};
pub use error::{Error, Result};
pub use geometry::{CrackSegment, Dim, PointCloud, PointTag, SectionOrientation};
pub use mechanics::{Constants, Material, StretchMeasure};
pub use model::{Body, Model};
pub use neighborhoods::InteractionTables;
pub use scenario::{Preset, Scale, ScenarioConfig};

/// Three-component vector used for positions, displacements and forces.
/// Two-dimensional bodies keep `z = 0`.
pub type Vec3 = nalgebra::Vector3<f64>;
