//! Snapshot files: canonical CSV and a legacy VTK mirror for viewers.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::dynamics::Simulation;
use crate::error::{Error, Result};
use crate::Vec3;

pub const FORMAT_VERSION: u32 = 1;
pub const CSV_HEADER: &str = "body,X1,X2,X3,u1,u2,u3,v1,v2,v3,damage";

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: u64,
    pub t: f64,
    pub bodies: usize,
    pub body: Vec<u32>,
    pub reference: Vec<Vec3>,
    pub u: Vec<Vec3>,
    pub v: Vec<Vec3>,
    pub damage: Vec<f64>,
}

impl Snapshot {
    pub fn from_sim(sim: &Simulation) -> Self {
        Snapshot {
            step: sim.state.step,
            t: sim.state.t,
            bodies: sim.model.bodies.len(),
            body: sim.model.cloud.body.clone(),
            reference: sim.model.cloud.positions.clone(),
            u: sim.state.u.clone(),
            v: sim.state.v.clone(),
            damage: sim.state.failure.damage.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.body.len()
    }

    pub fn is_empty(&self) -> bool {
        self.body.is_empty()
    }

    pub fn current_positions(&self) -> Vec<Vec3> {
        self.reference.iter().zip(&self.u).map(|(x, u)| x + u).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(self.len() * 160 + 128);
        let _ = writeln!(
            s,
            "# step={} t={} bodies={} points={} format={}",
            self.step,
            self.t,
            self.bodies,
            self.len(),
            FORMAT_VERSION
        );
        s.push_str(CSV_HEADER);
        s.push('\n');
        for i in 0..self.len() {
            let (x, u, v) = (self.reference[i], self.u[i], self.v[i]);
            // `{}` on f64 prints the shortest decimal that parses back exactly.
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{}",
                self.body[i], x.x, x.y, x.z, u.x, u.y, u.z, v.x, v.y, v.z, self.damage[i]
            );
        }
        s
    }

    pub fn parse_csv(text: &str) -> std::result::Result<Self, String> {
        let mut lines = text.lines().enumerate();
        let (_, meta) = lines.next().ok_or("empty snapshot")?;
        let meta = meta.strip_prefix("# ").ok_or("missing metadata line")?;
        let mut step = None;
        let mut t = None;
        let mut bodies = None;
        let mut points = None;
        for field in meta.split_whitespace() {
            let (k, v) = field.split_once('=').ok_or(format!("bad metadata field '{field}'"))?;
            let bad = |_| format!("bad metadata value '{field}'");
            match k {
                "step" => step = Some(v.parse::<u64>().map_err(bad)?),
                "t" => t = Some(v.parse::<f64>().map_err(|_| format!("bad time '{v}'"))?),
                "bodies" => bodies = Some(v.parse::<usize>().map_err(bad)?),
                "points" => points = Some(v.parse::<usize>().map_err(bad)?),
                "format" => {
                    if v != FORMAT_VERSION.to_string() {
                        return Err(format!("unsupported snapshot format {v}"));
                    }
                }
                _ => return Err(format!("unknown metadata key '{k}'")),
            }
        }
        match lines.next() {
            Some((_, h)) if h == CSV_HEADER => {}
            _ => return Err("missing column header".into()),
        }
        let mut snap = Snapshot {
            step: step.ok_or("metadata lacks step")?,
            t: t.ok_or("metadata lacks t")?,
            bodies: bodies.ok_or("metadata lacks bodies")?,
            body: Vec::new(),
            reference: Vec::new(),
            u: Vec::new(),
            v: Vec::new(),
            damage: Vec::new(),
        };
        for (n, line) in lines {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 11 {
                return Err(format!("line {}: expected 11 columns, got {}", n + 1, cols.len()));
            }
            let f = |k: usize| {
                cols[k]
                    .parse::<f64>()
                    .map_err(|_| format!("line {}: bad number '{}'", n + 1, cols[k]))
            };
            snap.body
                .push(cols[0].parse().map_err(|_| format!("line {}: bad body id", n + 1))?);
            snap.reference.push(Vec3::new(f(1)?, f(2)?, f(3)?));
            snap.u.push(Vec3::new(f(4)?, f(5)?, f(6)?));
            snap.v.push(Vec3::new(f(7)?, f(8)?, f(9)?));
            snap.damage.push(f(10)?);
        }
        if Some(snap.len()) != points {
            return Err(format!(
                "metadata announces {:?} points, file has {}",
                points,
                snap.len()
            ));
        }
        Ok(snap)
    }

    /// Legacy ASCII VTK polydata with displacement, velocity, damage and
    /// body id as point data, placed at the current positions.
    pub fn to_vtk(&self) -> String {
        let n = self.len();
        let mut s = String::with_capacity(n * 200 + 256);
        let _ = writeln!(s, "# vtk DataFile Version 3.0");
        let _ = writeln!(s, "step {} t {}", self.step, self.t);
        let _ = writeln!(s, "ASCII\nDATASET POLYDATA\nPOINTS {n} double");
        for p in self.current_positions() {
            let _ = writeln!(s, "{} {} {}", p.x, p.y, p.z);
        }
        let _ = writeln!(s, "VERTICES {} {}", n, 2 * n);
        for i in 0..n {
            let _ = writeln!(s, "1 {i}");
        }
        let _ = writeln!(s, "POINT_DATA {n}");
        for (name, field) in [("displacement", &self.u), ("velocity", &self.v)] {
            let _ = writeln!(s, "VECTORS {name} double");
            for w in field {
                let _ = writeln!(s, "{} {} {}", w.x, w.y, w.z);
            }
        }
        let _ = writeln!(s, "SCALARS damage double 1\nLOOKUP_TABLE default");
        for d in &self.damage {
            let _ = writeln!(s, "{d}");
        }
        let _ = writeln!(s, "SCALARS body int 1\nLOOKUP_TABLE default");
        for b in &self.body {
            let _ = writeln!(s, "{b}");
        }
        s
    }
}

pub fn csv_path(dir: &Path, step: u64) -> PathBuf {
    dir.join(format!("snap_{step:08}.csv"))
}

pub fn vtk_path(dir: &Path, step: u64) -> PathBuf {
    dir.join(format!("snap_{step:08}.vtk"))
}

pub fn write_csv(snap: &Snapshot, path: &Path) -> Result<()> {
    fs::write(path, snap.to_csv()).map_err(|e| Error::io(path, e))
}

pub fn write_vtk(snap: &Snapshot, path: &Path) -> Result<()> {
    fs::write(path, snap.to_vtk()).map_err(|e| Error::io(path, e))
}

pub fn read_csv(path: &Path) -> Result<Snapshot> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Snapshot::parse_csv(&text).map_err(|reason| Error::Config(format!("{}: {reason}", path.display())))
}
