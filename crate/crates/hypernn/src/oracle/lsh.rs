//! Multiprobe hyperplane LSH for approximate Euclidean nearest neighbor.
//!
//! Each table hashes a point to the vector of ⌊⟨rᵢ,x⟩/g⌋ values over its
//! random unit directions rᵢ; `g` is the quantization granularity. A query
//! probes its own bucket in every table plus, when `probe_radius > 0`, every
//! bucket reachable by shifting a single coordinate of the key by up to
//! ±`probe_radius`. All randomness flows from one explicit seed, so a given
//! (parameters, dataset) pair always builds the same index and returns the
//! same answers.

use std::collections::HashMap;
use std::sync::Arc;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::numeric::dist_sq;

use super::OracleStats;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LshParams {
    pub num_tables: usize,
    pub hyperplanes_per_table: usize,
    pub granularity: f64,
    pub probe_radius: usize,
    pub seed: u64,
}

impl LshParams {
    pub fn new(
        num_tables: usize,
        hyperplanes_per_table: usize,
        granularity: f64,
        probe_radius: usize,
        seed: u64,
    ) -> Result<Self> {
        if num_tables == 0 {
            return Err(Error::InvalidParameter {
                name: "num_tables",
                reason: "must be at least 1".into(),
            });
        }
        if hyperplanes_per_table == 0 {
            return Err(Error::InvalidParameter {
                name: "hyperplanes_per_table",
                reason: "must be at least 1".into(),
            });
        }
        if !(granularity > 0.0 && granularity.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "granularity",
                reason: format!("must be positive and finite, got {granularity}"),
            });
        }
        Ok(Self {
            num_tables,
            hyperplanes_per_table,
            granularity,
            probe_radius,
            seed,
        })
    }
}

/// The random unit directions for every table, drawn once from a seed and
/// shareable between indexes (shell structures reuse one draw across many
/// per-band indexes so that only the granularity varies).
#[derive(Debug, Clone)]
pub struct LshHyperplanes {
    dim: usize,
    pub(super) tables: Vec<Vec<Vec<f64>>>,
}

impl LshHyperplanes {
    pub fn draw(dim: usize, num_tables: usize, per_table: usize, seed: u64) -> Self {
        let mut rng = StdRng::seed_from_u64(seed);
        let tables = (0..num_tables)
            .map(|_| {
                (0..per_table)
                    .map(|_| loop {
                        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
                        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
                        if norm > 0.0 {
                            return v.iter().map(|c| c / norm).collect();
                        }
                    })
                    .collect()
            })
            .collect();
        Self { dim, tables }
    }

    pub(super) fn from_parts(dim: usize, tables: Vec<Vec<Vec<f64>>>) -> Self {
        Self { dim, tables }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_tables(&self) -> usize {
        self.tables.len()
    }

    pub fn table(&self, t: usize) -> &[Vec<f64>] {
        &self.tables[t]
    }
}

#[derive(Debug, Clone)]
pub struct LshIndex {
    data: Arc<Dataset>,
    params: LshParams,
    planes: Arc<LshHyperplanes>,
    buckets: Vec<HashMap<Vec<i64>, Vec<u32>>>,
}

pub fn lsh_build(data: Arc<Dataset>, params: &LshParams) -> LshIndex {
    let planes = Arc::new(LshHyperplanes::draw(
        data.dim(),
        params.num_tables,
        params.hyperplanes_per_table,
        params.seed,
    ));
    lsh_build_with_hyperplanes(data, params, planes)
}

pub fn lsh_build_with_hyperplanes(
    data: Arc<Dataset>,
    params: &LshParams,
    planes: Arc<LshHyperplanes>,
) -> LshIndex {
    assert_eq!(
        planes.dim(),
        data.dim(),
        "hyperplane draw is for another dimension"
    );
    assert!(
        planes.num_tables() >= params.num_tables,
        "hyperplane draw has too few tables"
    );
    let mut buckets: Vec<HashMap<Vec<i64>, Vec<u32>>> = vec![HashMap::new(); params.num_tables];
    for pos in 0..data.len() {
        let coords = data.point(pos).coords();
        for (t, table) in buckets.iter_mut().enumerate() {
            let key = hash_key(planes.table(t), coords, params.granularity);
            table.entry(key).or_default().push(pos as u32);
        }
    }
    LshIndex {
        data,
        params: *params,
        planes,
        buckets,
    }
}

fn hash_key(planes: &[Vec<f64>], x: &[f64], granularity: f64) -> Vec<i64> {
    planes
        .iter()
        .map(|r| {
            let dot: f64 = r.iter().zip(x).map(|(a, b)| a * b).sum();
            (dot / granularity).floor() as i64
        })
        .collect()
}

impl LshIndex {
    pub fn data(&self) -> &Arc<Dataset> {
        &self.data
    }

    pub fn params(&self) -> &LshParams {
        &self.params
    }

    pub fn hyperplanes(&self) -> &Arc<LshHyperplanes> {
        &self.planes
    }

    /// Distinct dataset positions in probed buckets, ascending. Position
    /// order (== insertion order) keeps downstream scans deterministic.
    pub(super) fn candidates(&self, q: &[f64]) -> Vec<u32> {
        let mut out: Vec<u32> = Vec::new();
        for (t, table) in self.buckets.iter().enumerate() {
            let base = hash_key(self.planes.table(t), q, self.params.granularity);
            if let Some(bucket) = table.get(&base) {
                out.extend_from_slice(bucket);
            }
            for coord in 0..base.len() {
                for shift in 1..=self.params.probe_radius as i64 {
                    for delta in [-shift, shift] {
                        let mut key = base.clone();
                        key[coord] += delta;
                        if let Some(bucket) = table.get(&key) {
                            out.extend_from_slice(bucket);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    pub(super) fn nearest(&self, q: &[f64], stats: &mut OracleStats) -> Option<(usize, f64)> {
        let mut best: Option<(f64, u64, usize)> = None;
        for pos in self.candidates(q) {
            let pos = pos as usize;
            stats.points_examined += 1;
            let d2 = dist_sq(self.data.point(pos).coords(), q);
            let id = self.data.id(pos);
            let better = match &best {
                None => true,
                Some((bd2, bid, _)) => d2 < *bd2 || (d2 == *bd2 && id < *bid),
            };
            if better {
                best = Some((d2, id, pos));
            }
        }
        best.map(|(d2, _, pos)| (pos, d2.sqrt()))
    }

    pub(super) fn nearest_k(
        &self,
        q: &[f64],
        k: usize,
        stats: &mut OracleStats,
    ) -> Vec<(usize, f64)> {
        let mut scored: Vec<(f64, u64, usize)> = self
            .candidates(q)
            .into_iter()
            .map(|pos| {
                let pos = pos as usize;
                stats.points_examined += 1;
                (
                    dist_sq(self.data.point(pos).coords(), q),
                    self.data.id(pos),
                    pos,
                )
            })
            .collect();
        scored.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        scored.truncate(k);
        scored
            .into_iter()
            .map(|(d2, _, pos)| (pos, d2.sqrt()))
            .collect()
    }
}

/// Ids of all candidate points the probe sequence reaches for `q`.
pub fn lsh_candidates(index: &LshIndex, q: &[f64]) -> Result<Vec<u64>> {
    check(index, q)?;
    Ok(index
        .candidates(q)
        .into_iter()
        .map(|pos| index.data.id(pos as usize))
        .collect())
}

/// Approximate nearest neighbor: the best point among probed candidates, or
/// `None` when every probed bucket is empty.
pub fn lsh_query(index: &LshIndex, q: &[f64], stats: &mut OracleStats) -> Result<Option<u64>> {
    check(index, q)?;
    Ok(index.nearest(q, stats).map(|(pos, _)| index.data.id(pos)))
}

/// Up to `k` probed candidates, ascending (distance, id). May return fewer
/// than `k` — the probe set, not the dataset, is the universe here.
pub fn lsh_query_k(
    index: &LshIndex,
    q: &[f64],
    k: usize,
    stats: &mut OracleStats,
) -> Result<Vec<u64>> {
    check(index, q)?;
    if k == 0 {
        return Err(Error::InvalidParameter {
            name: "k",
            reason: "must be at least 1".into(),
        });
    }
    Ok(index
        .nearest_k(q, k, stats)
        .into_iter()
        .map(|(pos, _)| index.data.id(pos))
        .collect())
}

fn check(index: &LshIndex, q: &[f64]) -> Result<()> {
    if q.len() != index.data.dim() {
        return Err(Error::DimensionMismatch {
            expected: index.data.dim(),
            got: q.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::brute_force_exact_query;
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_data(n: usize, dim: usize, seed: u64) -> Arc<Dataset> {
        let mut rng = StdRng::seed_from_u64(seed);
        let bound = 0.9 / (dim as f64).sqrt();
        let rows = (0..n as u64)
            .map(|id| {
                let coords = (0..dim).map(|_| rng.gen_range(-bound..bound)).collect();
                (id, coords)
            })
            .collect();
        Arc::new(Dataset::from_rows(dim, rows).unwrap())
    }

    #[test]
    fn params_are_validated() {
        assert!(LshParams::new(0, 4, 0.1, 1, 7).is_err());
        assert!(LshParams::new(4, 0, 0.1, 1, 7).is_err());
        assert!(LshParams::new(4, 4, 0.0, 1, 7).is_err());
        assert!(LshParams::new(4, 4, -0.1, 1, 7).is_err());
        assert!(LshParams::new(4, 4, f64::INFINITY, 1, 7).is_err());
        assert!(LshParams::new(4, 4, 0.1, 0, 7).is_ok());
    }

    #[test]
    fn same_seed_same_hyperplanes() {
        let a = LshHyperplanes::draw(3, 2, 5, 99);
        let b = LshHyperplanes::draw(3, 2, 5, 99);
        let c = LshHyperplanes::draw(3, 2, 5, 100);
        assert_eq!(a.tables, b.tables);
        assert_ne!(a.tables, c.tables);
        for t in 0..2 {
            for plane in a.table(t) {
                let norm: f64 = plane.iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!((norm - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identical_builds_answer_identically() {
        let data = random_data(200, 3, 3);
        let params = LshParams::new(4, 6, 0.15, 1, 17).unwrap();
        let ix1 = lsh_build(data.clone(), &params);
        let ix2 = lsh_build(data, &params);
        let mut rng = StdRng::seed_from_u64(4);
        for _ in 0..40 {
            let q: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.6..0.6)).collect();
            let mut s = OracleStats::default();
            assert_eq!(
                lsh_query(&ix1, &q, &mut s).unwrap(),
                lsh_query(&ix2, &q, &mut s).unwrap()
            );
            assert_eq!(
                lsh_candidates(&ix1, &q).unwrap(),
                lsh_candidates(&ix2, &q).unwrap()
            );
        }
    }

    #[test]
    fn wider_probing_never_shrinks_the_candidate_set() {
        let data = random_data(300, 3, 8);
        let base = LshParams::new(3, 5, 0.12, 0, 31).unwrap();
        let wide = LshParams {
            probe_radius: 2,
            ..base
        };
        let ix0 = lsh_build(data.clone(), &base);
        let ix2 = lsh_build(data, &wide);
        let mut rng = StdRng::seed_from_u64(9);
        for _ in 0..30 {
            let q: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.6..0.6)).collect();
            let narrow = lsh_candidates(&ix0, &q).unwrap();
            let wide = lsh_candidates(&ix2, &q).unwrap();
            for id in &narrow {
                assert!(wide.contains(id));
            }
        }
    }

    #[test]
    fn a_point_always_finds_itself() {
        // Hashing is deterministic, so querying at a dataset point must at
        // minimum land in that point's own bucket in every table.
        let data = random_data(150, 2, 12);
        let params = LshParams::new(2, 4, 0.2, 0, 5).unwrap();
        let index = lsh_build(data.clone(), &params);
        let mut stats = OracleStats::default();
        for pos in 0..data.len() {
            let q = data.point(pos).coords().to_vec();
            let got = lsh_query(&index, &q, &mut stats).unwrap();
            assert_eq!(got, Some(data.id(pos)));
        }
    }

    #[test]
    fn recall_at_one_is_reasonable_with_multiprobe() {
        let data = random_data(400, 4, 77);
        let params = LshParams::new(6, 8, 0.2, 1, 123).unwrap();
        let index = lsh_build(data.clone(), &params);
        let mut rng = StdRng::seed_from_u64(78);
        let mut hits = 0;
        let trials = 100;
        for _ in 0..trials {
            let q: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let mut s1 = OracleStats::default();
            let mut s2 = OracleStats::default();
            let truth = brute_force_exact_query(&q, &data, &mut s1).unwrap();
            if lsh_query(&index, &q, &mut s2).unwrap() == Some(truth) {
                hits += 1;
            }
            assert!(s2.points_examined <= s1.points_examined);
        }
        assert!(hits >= 50, "recall collapsed: {hits}/{trials}");
    }
}
