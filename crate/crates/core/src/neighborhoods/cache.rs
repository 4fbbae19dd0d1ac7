//! On-disk cache of interaction tables.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic      4 bytes  "CKPD"
//! version    u32      FORMAT_VERSION
//! key        u64      table_key(cloud, δ, options)
//! points     u64
//! bonds      u64      directed bonds
//! links      u64
//! pairs      u64      stored (unordered) pairs
//! triples    u64      stored (unordered) triples
//! bond_offsets[points + 1] u64, bond_target[bonds] u32,
//! bond_length[bonds] f64, bond_link[bonds] u32, links[links] 2×u32,
//! pair_offsets[points + 1] u64, pairs[pairs] 2×u32, pair_area[pairs] f64,
//! triple_offsets[points + 1] u64, triples[triples] 3×u32,
//! triple_volume[triples] f64,
//! neighborhood_volume, v1, v2, v3: [points] f64 each
//! ```

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{InteractionTables, TableOptions};
use crate::error::{Error, Result};
use crate::geometry::PointCloud;

pub const MAGIC: &[u8; 4] = b"CKPD";
pub const FORMAT_VERSION: u32 = 2;

struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }

    fn bytes(&mut self, data: &[u8]) {
        for &b in data {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }

    fn f64(&mut self, v: f64) {
        self.bytes(&v.to_bits().to_le_bytes());
    }
}

/// Content hash of everything the tables depend on.
pub fn table_key(cloud: &PointCloud, delta: f64, options: TableOptions) -> u64 {
    let mut h = Fnv::new();
    h.bytes(&[cloud.dim.as_usize() as u8, options.pairs as u8, options.triples as u8]);
    h.f64(delta);
    for i in 0..cloud.len() {
        let p = cloud.positions[i];
        h.f64(p.x);
        h.f64(p.y);
        h.f64(p.z);
        h.f64(cloud.volumes[i]);
        h.f64(cloud.fullness[i]);
        h.bytes(&cloud.body[i].to_le_bytes());
    }
    h.0
}

pub fn cache_path(dir: &Path, key: u64) -> PathBuf {
    dir.join(format!("tables_{key:016x}.ckpd"))
}

pub fn write(path: &Path, key: u64, t: &InteractionTables) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&key.to_le_bytes());
    for n in [
        t.len(),
        t.bond_target.len(),
        t.links.len(),
        t.pairs.len(),
        t.triples.len(),
    ] {
        buf.extend_from_slice(&(n as u64).to_le_bytes());
    }
    let put_usize = |buf: &mut Vec<u8>, v: &[usize]| {
        v.iter()
            .for_each(|x| buf.extend_from_slice(&(*x as u64).to_le_bytes()))
    };
    let put_u32 = |buf: &mut Vec<u8>, v: &mut dyn Iterator<Item = u32>| {
        v.for_each(|x| buf.extend_from_slice(&x.to_le_bytes()))
    };
    let put_f64 = |buf: &mut Vec<u8>, v: &[f64]| {
        v.iter()
            .for_each(|x| buf.extend_from_slice(&x.to_le_bytes()))
    };
    put_usize(&mut buf, &t.bond_offsets);
    put_u32(&mut buf, &mut t.bond_target.iter().copied());
    put_f64(&mut buf, &t.bond_length);
    put_u32(&mut buf, &mut t.bond_link.iter().copied());
    put_u32(&mut buf, &mut t.links.iter().flatten().copied());
    put_usize(&mut buf, &t.pair_offsets);
    put_u32(&mut buf, &mut t.pairs.iter().flatten().copied());
    put_f64(&mut buf, &t.pair_area);
    put_usize(&mut buf, &t.triple_offsets);
    put_u32(&mut buf, &mut t.triples.iter().flatten().copied());
    put_f64(&mut buf, &t.triple_volume);
    put_f64(&mut buf, &t.neighborhood_volume);
    put_f64(&mut buf, &t.v1);
    put_f64(&mut buf, &t.v2);
    put_f64(&mut buf, &t.v3);
    w.write_all(&buf)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

struct Reader<'a> {
    data: &'a [u8],
    at: usize,
    path: &'a Path,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.at + n > self.data.len() {
            return Err(Error::Cache {
                path: self.path.into(),
                reason: "file is truncated".into(),
            });
        }
        let s = &self.data[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn usizes(&mut self, n: usize) -> Result<Vec<usize>> {
        (0..n).map(|_| self.u64().map(|v| v as usize)).collect()
    }

    fn u32s(&mut self, n: usize) -> Result<Vec<u32>> {
        (0..n).map(|_| self.u32()).collect()
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n)
            .map(|_| self.u64().map(f64::from_bits))
            .collect()
    }
}

/// Reads a cache file; `Ok(None)` when it was written for a different key.
pub fn read(path: &Path, key: u64) -> Result<Option<InteractionTables>> {
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut r = Reader {
        data: &data,
        at: 0,
        path,
    };
    let bad = |reason: &str| Error::Cache {
        path: path.into(),
        reason: reason.into(),
    };
    if r.take(4)? != MAGIC {
        return Err(bad("missing CKPD magic"));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(bad(&format!("unsupported format version {version}")));
    }
    if r.u64()? != key {
        return Ok(None);
    }
    let n = r.u64()? as usize;
    let bonds = r.u64()? as usize;
    let links = r.u64()? as usize;
    let pairs = r.u64()? as usize;
    let triples = r.u64()? as usize;
    let mut t = InteractionTables {
        bond_offsets: r.usizes(n + 1)?,
        bond_target: r.u32s(bonds)?,
        bond_length: r.f64s(bonds)?,
        bond_link: r.u32s(bonds)?,
        links: r.u32s(2 * links)?.chunks(2).map(|c| [c[0], c[1]]).collect(),
        ..Default::default()
    };
    t.pair_offsets = r.usizes(n + 1)?;
    t.pairs = r.u32s(2 * pairs)?.chunks(2).map(|c| [c[0], c[1]]).collect();
    t.pair_area = r.f64s(pairs)?;
    t.triple_offsets = r.usizes(n + 1)?;
    t.triples = r
        .u32s(3 * triples)?
        .chunks(3)
        .map(|c| [c[0], c[1], c[2]])
        .collect();
    t.triple_volume = r.f64s(triples)?;
    t.neighborhood_volume = r.f64s(n)?;
    t.v1 = r.f64s(n)?;
    t.v2 = r.f64s(n)?;
    t.v3 = r.f64s(n)?;
    if r.at != data.len() {
        return Err(bad("trailing bytes after table data"));
    }
    Ok(Some(t))
}

/// Loads the tables from `dir` if a matching cache exists, otherwise builds
/// and stores them. An unreadable cache file is rebuilt, not reported.
pub fn load_or_build(
    dir: &Path,
    cloud: &PointCloud,
    delta: f64,
    options: TableOptions,
) -> Result<InteractionTables> {
    let key = table_key(cloud, delta, options);
    let path = cache_path(dir, key);
    if path.exists() {
        if let Ok(Some(t)) = read(&path, key) {
            return Ok(t);
        }
    }
    let t = InteractionTables::build(cloud, delta, options);
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(&path, key, &t)?;
    Ok(t)
}
