//! On-disk index container.
//!
//! A small little-endian binary format, magic `HYNN`, version 1. The file
//! carries the dataset snapshot plus whatever the backend needs to come back
//! byte-for-byte: the kd-tree stores its node arena (so the exact topology
//! survives even if the build heuristic ever changes), LSH stores its
//! parameters and hyperplane draw and rebuilds buckets on load, which is
//! cheap and exactly reproducible. Loads re-validate everything — magic,
//! version, point norms, node and item ranges — so a corrupt or foreign file
//! fails with a diagnostic instead of producing garbage answers.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

use super::kdtree::{KdIndex, Node};
use super::lsh::{lsh_build_with_hyperplanes, LshHyperplanes, LshIndex, LshParams};
use super::EuclideanOracle;

const MAGIC: [u8; 4] = *b"HYNN";
const VERSION: u16 = 1;
const KIND_KD: u8 = 0;
const KIND_LSH: u8 = 1;

pub fn save_index(path: impl AsRef<Path>, oracle: &EuclideanOracle) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&MAGIC)?;
    w_u16(&mut w, VERSION)?;
    match oracle {
        EuclideanOracle::Kd(index) => {
            w.write_all(&[KIND_KD])?;
            write_dataset(&mut w, index.data())?;
            write_kd(&mut w, index)?;
        }
        EuclideanOracle::Lsh(index) => {
            w.write_all(&[KIND_LSH])?;
            write_dataset(&mut w, index.data())?;
            write_lsh(&mut w, index)?;
        }
        EuclideanOracle::Brute(_) | EuclideanOracle::Adversarial { .. } => {
            return Err(Error::InvalidParameter {
                name: "oracle",
                reason: "only kd-tree and LSH backends have a persistent index form".into(),
            });
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_index(path: impl AsRef<Path>) -> Result<EuclideanOracle> {
    let path = path.as_ref();
    let mut r = BufReader::new(File::open(path)?);

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if magic != MAGIC {
        return Err(Error::InvalidIndex(format!(
            "{}: not an index file (bad magic)",
            path.display()
        )));
    }
    let version = r_u16(&mut r)?;
    if version != VERSION {
        return Err(Error::InvalidIndex(format!(
            "{}: unsupported index version {version} (expected {VERSION})",
            path.display()
        )));
    }
    let kind = r_u8(&mut r)?;
    let data = Arc::new(read_dataset(&mut r, path)?);
    match kind {
        KIND_KD => {
            let index = read_kd(&mut r, path, data)?;
            Ok(EuclideanOracle::Kd(index))
        }
        KIND_LSH => {
            let index = read_lsh(&mut r, path, data)?;
            Ok(EuclideanOracle::Lsh(index))
        }
        other => Err(Error::InvalidIndex(format!(
            "{}: unknown index kind {other}",
            path.display()
        ))),
    }
}

fn write_dataset(w: &mut impl Write, data: &Dataset) -> Result<()> {
    w_u64(w, data.len() as u64)?;
    w_u64(w, data.dim() as u64)?;
    for pos in 0..data.len() {
        w_u64(w, data.id(pos))?;
    }
    for pos in 0..data.len() {
        for &c in data.point(pos).coords() {
            w_f64(w, c)?;
        }
    }
    Ok(())
}

fn read_dataset(r: &mut impl Read, path: &Path) -> Result<Dataset> {
    let n = r_len(r, path, "point count")?;
    let dim = r_len(r, path, "dimension")?;
    let ids: Vec<u64> = (0..n).map(|_| r_u64(r)).collect::<std::io::Result<_>>()?;
    let mut rows = Vec::with_capacity(n);
    for id in ids {
        let coords: Vec<f64> = (0..dim).map(|_| r_f64(r)).collect::<std::io::Result<_>>()?;
        rows.push((id, coords));
    }
    // from_rows re-runs full point validation, so corrupted coordinates
    // (NaN, norms ≥ 1) are rejected here rather than at query time.
    Dataset::from_rows(dim, rows)
        .map_err(|e| Error::InvalidIndex(format!("{}: invalid dataset: {e}", path.display())))
}

fn write_kd(w: &mut impl Write, index: &KdIndex) -> Result<()> {
    w_u32(w, index.root)?;
    w_u64(w, index.nodes.len() as u64)?;
    for node in &index.nodes {
        match node {
            Node::Leaf { start, len } => {
                w.write_all(&[0u8])?;
                w_u32(w, *start)?;
                w_u32(w, *len)?;
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                w.write_all(&[1u8])?;
                w_u32(w, *axis)?;
                w_f64(w, *value)?;
                w_u32(w, *left)?;
                w_u32(w, *right)?;
            }
        }
    }
    w_u64(w, index.items.len() as u64)?;
    for &pos in &index.items {
        w_u32(w, pos)?;
    }
    Ok(())
}

fn read_kd(r: &mut impl Read, path: &Path, data: Arc<Dataset>) -> Result<KdIndex> {
    let bad = |what: &str| Error::InvalidIndex(format!("{}: {what}", path.display()));
    let root = r_u32(r)?;
    let num_nodes = r_len(r, path, "node count")?;
    let mut nodes = Vec::with_capacity(num_nodes);
    for _ in 0..num_nodes {
        match r_u8(r)? {
            0 => nodes.push(Node::Leaf {
                start: r_u32(r)?,
                len: r_u32(r)?,
            }),
            1 => nodes.push(Node::Split {
                axis: r_u32(r)?,
                value: r_f64(r)?,
                left: r_u32(r)?,
                right: r_u32(r)?,
            }),
            t => return Err(bad(&format!("unknown node tag {t}"))),
        }
    }
    let num_items = r_len(r, path, "item count")?;
    let items: Vec<u32> = (0..num_items)
        .map(|_| r_u32(r))
        .collect::<std::io::Result<_>>()?;

    if num_items != data.len() {
        return Err(bad("item table does not cover the dataset"));
    }
    if root as usize >= nodes.len() {
        return Err(bad("root node out of range"));
    }
    for node in &nodes {
        match node {
            Node::Leaf { start, len } => {
                let end = *start as u64 + *len as u64;
                if end > num_items as u64 {
                    return Err(bad("leaf range out of bounds"));
                }
            }
            Node::Split {
                axis, left, right, ..
            } => {
                if *axis as usize >= data.dim()
                    || *left as usize >= nodes.len()
                    || *right as usize >= nodes.len()
                {
                    return Err(bad("split node out of range"));
                }
            }
        }
    }
    for &pos in &items {
        if pos as usize >= data.len() {
            return Err(bad("item position out of range"));
        }
    }
    Ok(KdIndex::from_parts(data, nodes, items, root))
}

fn write_lsh(w: &mut impl Write, index: &LshIndex) -> Result<()> {
    let p = index.params();
    w_u64(w, p.num_tables as u64)?;
    w_u64(w, p.hyperplanes_per_table as u64)?;
    w_f64(w, p.granularity)?;
    w_u64(w, p.probe_radius as u64)?;
    w_u64(w, p.seed)?;
    for t in 0..p.num_tables {
        for plane in index.hyperplanes().table(t) {
            for &c in plane {
                w_f64(w, c)?;
            }
        }
    }
    Ok(())
}

fn read_lsh(r: &mut impl Read, path: &Path, data: Arc<Dataset>) -> Result<LshIndex> {
    let num_tables = r_len(r, path, "table count")?;
    let per_table = r_len(r, path, "hyperplane count")?;
    let granularity = r_f64(r)?;
    let probe_radius = r_len(r, path, "probe radius")?;
    let seed = r_u64(r)?;
    let params = LshParams::new(num_tables, per_table, granularity, probe_radius, seed)
        .map_err(|e| Error::InvalidIndex(format!("{}: bad parameters: {e}", path.display())))?;
    let mut tables = Vec::with_capacity(num_tables);
    for _ in 0..num_tables {
        let mut planes = Vec::with_capacity(per_table);
        for _ in 0..per_table {
            let plane: Vec<f64> = (0..data.dim())
                .map(|_| r_f64(r))
                .collect::<std::io::Result<_>>()?;
            planes.push(plane);
        }
        tables.push(planes);
    }
    let planes = Arc::new(LshHyperplanes::from_parts(data.dim(), tables));
    Ok(lsh_build_with_hyperplanes(data, &params, planes))
}

fn w_u16(w: &mut impl Write, v: u16) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}
fn w_u32(w: &mut impl Write, v: u32) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}
fn w_u64(w: &mut impl Write, v: u64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}
fn w_f64(w: &mut impl Write, v: f64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn r_u8(r: &mut impl Read) -> std::io::Result<u8> {
    let mut b = [0u8; 1];
    r.read_exact(&mut b)?;
    Ok(b[0])
}
fn r_u16(r: &mut impl Read) -> std::io::Result<u16> {
    let mut b = [0u8; 2];
    r.read_exact(&mut b)?;
    Ok(u16::from_le_bytes(b))
}
fn r_u32(r: &mut impl Read) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}
fn r_u64(r: &mut impl Read) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}
fn r_f64(r: &mut impl Read) -> std::io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// u64 length field → usize, rejecting values that cannot index memory here.
fn r_len(r: &mut impl Read, path: &Path, what: &str) -> Result<usize> {
    let v = r_u64(r)?;
    usize::try_from(v).map_err(|_| {
        Error::InvalidIndex(format!(
            "{}: {what} {v} too large for this platform",
            path.display()
        ))
    })
}
