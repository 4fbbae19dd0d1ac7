#![allow(dead_code)]

use ckpd_core::dynamics::{Region, SimOptions};
use ckpd_core::mechanics::{bond_vectors, point_energy, ForceInput};
use ckpd_core::model::{BodySpec, Model};
use ckpd_core::neighborhoods::{AREA_CUTOFF, VOLUME_CUTOFF};
use ckpd_core::{Dim, LoadSchedule, Material, PointCloud, Simulation, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn steel(horizon: f64, nu: f64) -> Material {
    Material {
        density: 7580.0,
        youngs_modulus: 210e9,
        poisson_ratio: nu,
        fracture_energy: 140.0,
        horizon,
    }
}

/// `n` uniform random points in `[0, side]^dim`.
pub fn random_cloud(n: usize, side: f64, dim: Dim, seed: u64) -> PointCloud {
    let mut r = rng(seed);
    let positions = (0..n)
        .map(|_| {
            let z = if dim == Dim::Three { r.gen_range(0.0..side) } else { 0.0 };
            Vec3::new(r.gen_range(0.0..side), r.gen_range(0.0..side), z)
        })
        .collect();
    let volume = match dim {
        Dim::Two => side * side / n as f64,
        Dim::Three => side.powi(3) / n as f64,
    };
    PointCloud::from_positions(dim, positions, volume, 0)
}

pub fn single_body(cloud: PointCloud, material: Material) -> Model {
    let spacing = cloud.volumes[0].powf(1.0 / cloud.dim.as_usize() as f64);
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
    .expect("test model assembles")
}

/// Current positions with every point displaced by up to `amp` per axis.
pub fn perturbed(model: &Model, amp: f64, seed: u64) -> Vec<Vec3> {
    let mut r = rng(seed);
    let three = model.dim == Dim::Three;
    model
        .cloud
        .positions
        .iter()
        .map(|p| {
            let z = if three { r.gen_range(-amp..amp) } else { 0.0 };
            p + Vec3::new(r.gen_range(-amp..amp), r.gen_range(-amp..amp), z)
        })
        .collect()
}

/// Everything a force evaluation borrows, owned in one place.
pub struct Forces<'m> {
    pub model: &'m Model,
    pub dx: Vec<Vec3>,
    pub intact: Vec<bool>,
    pub cascade: bool,
}

impl<'m> Forces<'m> {
    pub fn new(model: &'m Model, x: &[Vec3]) -> Self {
        let mut dx = Vec::new();
        bond_vectors(&model.tables, x, &mut dx);
        Forces {
            model,
            dx,
            intact: vec![true; model.tables.links.len()],
            cascade: true,
        }
    }

    pub fn input(&self) -> ForceInput<'_> {
        ForceInput {
            tables: &self.model.tables,
            weights: &self.model.weights,
            bond_dx: &self.dx,
            link_intact: &self.intact,
            cascade: self.cascade,
        }
    }

    pub fn energy(&self, i: usize) -> [f64; 3] {
        point_energy(&self.input(), i)
    }
}

pub fn brute_h1(cloud: &PointCloud, delta: f64) -> Vec<Vec<u32>> {
    let p = &cloud.positions;
    (0..p.len())
        .map(|i| {
            (0..p.len())
                .filter(|&j| {
                    let d = (p[j] - p[i]).norm();
                    cloud.body[j] == cloud.body[i] && d > 0.0 && d <= delta
                })
                .map(|j| j as u32)
                .collect()
        })
        .collect()
}

/// Ordered pairs of H1 neighbors, sorted.
pub fn brute_h2(cloud: &PointCloud, h1: &[Vec<u32>], delta: f64) -> Vec<Vec<(u32, u32)>> {
    let p = &cloud.positions;
    h1.iter()
        .enumerate()
        .map(|(i, nb)| {
            let mut out = Vec::new();
            for &j in nb {
                for &k in nb {
                    let (xj, xk) = (p[j as usize], p[k as usize]);
                    let gap = (xj - xk).norm();
                    let area = (xj - p[i]).cross(&(xk - p[i])).norm();
                    if gap > 0.0 && gap <= delta && area >= AREA_CUTOFF * delta * delta {
                        out.push((j, k));
                    }
                }
            }
            out.sort_unstable();
            out
        })
        .collect()
}

/// Ordered triples of H1 neighbors, sorted.
pub fn brute_h3(cloud: &PointCloud, h1: &[Vec<u32>], delta: f64) -> Vec<Vec<(u32, u32, u32)>> {
    let p = &cloud.positions;
    let close = |a: u32, b: u32| {
        let g = (p[a as usize] - p[b as usize]).norm();
        g > 0.0 && g <= delta
    };
    h1.iter()
        .enumerate()
        .map(|(i, nb)| {
            let mut out = Vec::new();
            for &j in nb {
                for &k in nb {
                    for &l in nb {
                        if !(close(j, k) && close(j, l) && close(k, l)) {
                            continue;
                        }
                        let d = |m: u32| p[m as usize] - p[i];
                        let v = d(j).cross(&d(k)).dot(&d(l));
                        if v.abs() >= VOLUME_CUTOFF * delta.powi(3) {
                            out.push((j, k, l));
                        }
                    }
                }
            }
            out.sort_unstable();
            out
        })
        .collect()
}

pub type Kernel = fn(&ForceInput, usize) -> (Vec3, u32);

/// Worst relative mismatch between each kernel and the central difference
/// of the matching summed potential, over all points with a nonzero force.
pub fn gradient_error(model: &Model, x: &[Vec3], kernel: Kernel, part: usize) -> f64 {
    let h = 1e-7 * model.horizon[0];
    let forces = Forces::new(model, x);
    let mut worst: f64 = 0.0;
    for i in 0..model.len() {
        let (b, _) = kernel(&forces.input(), i);
        let mut fd = Vec3::zeros();
        for k in 0..model.dim.as_usize() {
            let mut xp = x.to_vec();
            xp[i][k] += h;
            let ep = Forces::new(model, &xp).energy(i)[part];
            xp[i][k] -= 2.0 * h;
            let em = Forces::new(model, &xp).energy(i)[part];
            fd[k] = -(ep - em) / (2.0 * h);
        }
        if b.norm() == 0.0 && fd.norm() == 0.0 {
            continue;
        }
        worst = worst.max((b - fd).norm() / b.norm().max(fd.norm()));
    }
    worst
}

/// Two points a distance `length` apart, pushed apart with `±v0` and
/// stepped at a thousandth of the analytic period, which is returned too.
pub fn oscillator(length: f64, v0: f64) -> (Simulation, f64) {
    let cloud = PointCloud::from_positions(
        Dim::Two,
        vec![Vec3::zeros(), Vec3::new(length, 0.0, 0.0)],
        length * length,
        0,
    );
    let material = Material {
        fracture_energy: 1e12,
        ..steel(1.5 * length, 0.3)
    };
    let model = single_body(cloud, material);
    assert_eq!(model.tables.n2(0), 0, "two points form no pairs");
    let rho = model.density[0];
    let omega = (2.0 * model.weights.c1v1[0] / (rho * length)).sqrt();
    let expected = 2.0 * std::f64::consts::PI / omega;

    let pick = |x: f64| Region::Box {
        min: [x - 0.1 * length, -0.1 * length, -1.0],
        max: [x + 0.1 * length, 0.1 * length, 1.0],
        body: None,
    };
    let loads = [
        LoadSchedule::InitialVelocity { region: pick(0.0), velocity: [-v0, 0.0, 0.0] },
        LoadSchedule::InitialVelocity { region: pick(length), velocity: [v0, 0.0, 0.0] },
    ];
    let options = SimOptions {
        dt: expected / 1000.0,
        ..SimOptions::default()
    };
    let sim = Simulation::new(model, &loads, None, options).expect("oscillator builds");
    (sim, expected)
}

/// Measured and analytic period of [`oscillator`].
pub fn two_point_oscillator(length: f64, v0: f64) -> (f64, f64) {
    let (mut sim, expected) = oscillator(length, v0);

    // Upward zero crossings of the elongation, linearly interpolated.
    let elongation = |s: &Simulation| {
        let x = s.positions();
        (x[1] - x[0]).norm() - length
    };
    let mut crossings = Vec::new();
    let mut prev = (sim.state.t, elongation(&sim));
    while crossings.len() < 4 && sim.state.step < 10_000 {
        sim.step().expect("oscillator stays finite");
        let now = (sim.state.t, elongation(&sim));
        if prev.1 < 0.0 && now.1 >= 0.0 {
            crossings.push(prev.0 + (now.0 - prev.0) * (-prev.1) / (now.1 - prev.1));
        }
        prev = now;
    }
    assert!(crossings.len() >= 2, "oscillator completes a period");
    let measured = (crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64;
    (measured, expected)
}
