//! Datasets: id-addressed collections of Poincaré points, plus the text
//! interchange format used by the CLI and the instance generators.
//!
//! The text format is a header line `n dim` followed by `n` rows of
//! `id v1 … v_dim`, whitespace-separated, floats written with 17 significant
//! digits so save→load round-trips are lossless.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::PoincarePoint;

/// An immutable, dimension-consistent collection of points with unique ids.
///
/// Positions (dense `usize` indexes) are an internal addressing scheme; ids
/// are the stable external names and survive subsetting.
#[derive(Debug, Clone)]
pub struct Dataset {
    dim: usize,
    ids: Vec<u64>,
    points: Vec<PoincarePoint>,
    index_of: HashMap<u64, usize>,
}

impl Dataset {
    /// Builds a dataset from parallel id/point lists.
    ///
    /// # Errors
    /// Ids must be unique and every point must have dimension `dim`. An empty
    /// dataset is legal (shell bands can be empty); `dim` keeps it typed.
    pub fn new(dim: usize, ids: Vec<u64>, points: Vec<PoincarePoint>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter {
                name: "dim",
                reason: "must be at least 1".into(),
            });
        }
        if ids.len() != points.len() {
            return Err(Error::InvalidParameter {
                name: "ids",
                reason: format!("{} ids for {} points", ids.len(), points.len()),
            });
        }
        let mut index_of = HashMap::with_capacity(ids.len());
        for (pos, (&id, point)) in ids.iter().zip(&points).enumerate() {
            if point.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: point.dim(),
                });
            }
            if index_of.insert(id, pos).is_some() {
                return Err(Error::DuplicateId { id });
            }
        }
        Ok(Self {
            dim,
            ids,
            points,
            index_of,
        })
    }

    /// Convenience constructor from `(id, coords)` rows.
    pub fn from_rows(dim: usize, rows: Vec<(u64, Vec<f64>)>) -> Result<Self> {
        let mut ids = Vec::with_capacity(rows.len());
        let mut points = Vec::with_capacity(rows.len());
        for (id, coords) in rows {
            ids.push(id);
            points.push(PoincarePoint::new(coords)?);
        }
        Self::new(dim, ids, points)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn id(&self, pos: usize) -> u64 {
        self.ids[pos]
    }

    pub fn point(&self, pos: usize) -> &PoincarePoint {
        &self.points[pos]
    }

    pub fn position_of(&self, id: u64) -> Option<usize> {
        self.index_of.get(&id).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &PoincarePoint)> {
        self.ids.iter().copied().zip(self.points.iter())
    }

    /// A new dataset holding the selected positions, ids preserved.
    pub fn subset(&self, positions: &[usize]) -> Self {
        let ids = positions.iter().map(|&p| self.ids[p]).collect::<Vec<_>>();
        let points = positions
            .iter()
            .map(|&p| self.points[p].clone())
            .collect::<Vec<_>>();
        let index_of = ids.iter().enumerate().map(|(pos, &id)| (id, pos)).collect();
        Self {
            dim: self.dim,
            ids,
            points,
            index_of,
        }
    }

    /// Serializes to the text interchange format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.len(), self.dim);
        for (id, point) in self.iter() {
            let _ = write!(out, "{id}");
            for c in point.coords() {
                let _ = write!(out, " {c:.16e}");
            }
            out.push('\n');
        }
        out
    }

    /// Parses the text interchange format.
    ///
    /// # Errors
    /// Reports the offending line for malformed rows, the offending id for
    /// norm violations, and duplicates; `origin` only labels error messages.
    pub fn from_text(text: &str, origin: &Path) -> Result<Self> {
        let parse_err = |line: usize, reason: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            reason,
        };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| parse_err(1, "missing header line".into()))?;
        let mut parts = header.split_whitespace();
        let n: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err(1, format!("bad point count in header {header:?}")))?;
        let dim: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err(1, format!("bad dimension in header {header:?}")))?;
        if parts.next().is_some() {
            return Err(parse_err(
                1,
                format!("trailing tokens in header {header:?}"),
            ));
        }

        let mut ids = Vec::with_capacity(n);
        let mut points = Vec::with_capacity(n);
        let mut rows = 0usize;
        for (idx, line) in lines {
            let lineno = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            rows += 1;
            let mut tokens = line.split_whitespace();
            let id: u64 = tokens
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| parse_err(lineno, "bad or missing id".into()))?;
            let mut coords = Vec::with_capacity(dim);
            for k in 0..dim {
                let tok = tokens.next().ok_or_else(|| {
                    parse_err(lineno, format!("expected {dim} coordinates, found {k}"))
                })?;
                let v: f64 = tok
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("bad coordinate {tok:?}")))?;
                coords.push(v);
            }
            if tokens.next().is_some() {
                return Err(parse_err(lineno, format!("more than {dim} coordinates")));
            }
            let point = PoincarePoint::new(coords).map_err(|e| match e {
                Error::InvalidPoint { reason } => Error::InvalidPoint {
                    reason: format!("point {id}: {reason}"),
                },
                other => other,
            })?;
            ids.push(id);
            points.push(point);
        }
        if rows != n {
            return Err(parse_err(
                rows + 1,
                format!("header promised {n} rows, found {rows}"),
            ));
        }
        Self::new(dim, ids, points)
    }
}

/// Reads a dataset from a text-format file.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    Dataset::from_text(&text, path)
}

/// Writes a dataset to a text-format file (17-significant-digit floats).
pub fn save_dataset(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path.as_ref(), data.to_text())?;
    Ok(())
}
