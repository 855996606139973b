//! Concentric-band ("shell") partitioned search.
//!
//! The ball is cut into multiplicative-width annuli (see
//! [`crate::geometry::ShellParams`]); each band gets its own Euclidean oracle
//! over just its points. Because a band pins 1/(1−‖x‖²) to within a factor w,
//! Euclidean order within a band agrees with hyperbolic order up to √w — so
//! probing a band's Euclidean oracle yields a √w·(1+ε)-approximate hyperbolic
//! candidate, and [`check_intersection`][ci]/[`choose_band`][cb] geometry
//! decides which further bands could still beat it.
//!
//! [ci]: crate::geometry::check_intersection
//! [cb]: crate::geometry::choose_band
//!
//! The deterministic driver probes the query's own band first and then walks
//! outward/inward frontiers; the randomized driver visits bands in a seeded
//! random permutation, using a cheap decision query to skip bands that cannot
//! improve the current candidate — cutting expected full probes to O(ln N)
//! for N nonempty bands.

use std::sync::Arc;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::geometry::{
    check_intersection_radius, choose_band_radius, hyperbolic_distance, partition_index,
    PoincarePoint, ShellParams,
};
use crate::oracle::{decision_query, EuclideanOracle, LshHyperplanes, LshParams, OracleStats};

use super::{budget_hit, SearchResult};

/// Which oracle family backs each band.
#[derive(Debug, Clone)]
pub enum ShellBacking {
    Brute,
    Kd,
    Lsh(LshParams),
    /// Test instrument: each band answers with its worst legal (1+ε) point.
    Adversarial {
        epsilon: f64,
    },
}

/// One annulus: its 1-based band index and the oracle over its points.
#[derive(Debug, Clone)]
pub struct ShellBand {
    band: u32,
    oracle: EuclideanOracle,
}

impl ShellBand {
    pub fn band(&self) -> u32 {
        self.band
    }

    pub fn oracle(&self) -> &EuclideanOracle {
        &self.oracle
    }

    pub fn dataset(&self) -> &Arc<Dataset> {
        self.oracle.data()
    }

    pub fn len(&self) -> usize {
        self.dataset().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// The built partition: every source point lives in exactly one band.
#[derive(Debug, Clone)]
pub struct ShellPartition {
    params: ShellParams,
    source: Arc<Dataset>,
    /// Index `b−1` holds band `b`; empty bands hold empty oracles.
    bands: Vec<ShellBand>,
}

impl ShellPartition {
    pub fn params(&self) -> &ShellParams {
        &self.params
    }

    pub fn source(&self) -> &Arc<Dataset> {
        &self.source
    }

    pub fn bands(&self) -> &[ShellBand] {
        &self.bands
    }

    pub fn band(&self, b: u32) -> &ShellBand {
        &self.bands[(b - 1) as usize]
    }

    pub fn len(&self) -> usize {
        self.source.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.source.dim()
    }
}

/// Splits `data` into bands and builds one oracle per band (in parallel when
/// the `parallel` feature is on — band builds are independent).
///
/// LSH backing draws one set of hyperplanes shared by every band; only the
/// quantization granularity varies per band, as min(w^band, configured
/// granularity), so the configured value acts as a cap.
///
/// # Errors
/// Any point with norm beyond `params.max_norm_supported()` is rejected with
/// an error naming its id.
pub fn build_shell_partition(
    data: Arc<Dataset>,
    params: &ShellParams,
    backing: &ShellBacking,
) -> Result<ShellPartition> {
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); params.num_bands() as usize];
    for pos in 0..data.len() {
        let band = partition_index(data.point(pos), params).map_err(|e| match e {
            Error::NormOutOfRange { norm, max_norm, .. } => Error::NormOutOfRange {
                subject: format!("point {}", data.id(pos)),
                norm,
                max_norm,
            },
            other => other,
        })?;
        members[(band - 1) as usize].push(pos);
    }

    let planes = match backing {
        ShellBacking::Lsh(p) => Some(Arc::new(LshHyperplanes::draw(
            data.dim(),
            p.num_tables,
            p.hyperplanes_per_table,
            p.seed,
        ))),
        _ => None,
    };

    let width = params.width();
    let build_one = |(idx, positions): (usize, Vec<usize>)| -> ShellBand {
        let band = idx as u32 + 1;
        let band_data = Arc::new(data.subset(&positions));
        let oracle = match backing {
            ShellBacking::Brute => EuclideanOracle::brute(band_data),
            ShellBacking::Kd => EuclideanOracle::kd(band_data),
            ShellBacking::Adversarial { epsilon } => {
                EuclideanOracle::adversarial(band_data, *epsilon)
            }
            ShellBacking::Lsh(p) => {
                // powi overflow to +inf is fine: min() then picks the cap.
                let granularity = width.powi(band as i32).min(p.granularity);
                let band_params = LshParams { granularity, ..*p };
                EuclideanOracle::lsh_with_hyperplanes(
                    band_data,
                    &band_params,
                    planes.as_ref().expect("drawn for LSH backing").clone(),
                )
            }
        };
        ShellBand { band, oracle }
    };

    #[cfg(feature = "parallel")]
    let bands: Vec<ShellBand> = members.into_par_iter().enumerate().map(build_one).collect();
    #[cfg(not(feature = "parallel"))]
    let bands: Vec<ShellBand> = members.into_iter().enumerate().map(build_one).collect();

    Ok(ShellPartition {
        params: *params,
        source: data,
        bands,
    })
}

/// √w·(1+ε)-approximate hyperbolic NN via deterministic band probing.
///
/// Probes the query's band, then feeds the outward (i+1, i+2, …) and inward
/// (i−1, …, 1) frontiers through `choose_band`, stopping a frontier at its
/// first band that cannot intersect the current best ball (the intersection
/// predicate is monotone along each frontier, so everything beyond it is dead
/// too) and terminating when both frontiers are exhausted.
pub fn shell_nn(
    q: &PoincarePoint,
    partition: &ShellPartition,
    epsilon: f64,
    budget: Option<u64>,
) -> Result<SearchResult> {
    shell_probe(q, partition, 1, epsilon, budget)
}

/// K-neighbor variant: band probes ask for K candidates and the frontier
/// tests run on the current K-th best distance. `K = 1` is [`shell_nn`].
pub fn shell_knn(
    q: &PoincarePoint,
    partition: &ShellPartition,
    k: usize,
    epsilon: f64,
    budget: Option<u64>,
) -> Result<SearchResult> {
    if k > partition.len() {
        return Err(Error::NotEnoughPoints {
            requested: k,
            available: partition.len(),
        });
    }
    shell_probe(q, partition, k, epsilon, budget)
}

fn validate_shell_query(
    q: &PoincarePoint,
    partition: &ShellPartition,
    epsilon: f64,
    k: usize,
) -> Result<()> {
    if partition.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if q.dim() != partition.dim() {
        return Err(Error::DimensionMismatch {
            expected: partition.dim(),
            got: q.dim(),
        });
    }
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            reason: format!("must be nonnegative, got {epsilon}"),
        });
    }
    if k == 0 {
        return Err(Error::InvalidParameter {
            name: "k",
            reason: "must be at least 1".into(),
        });
    }
    Ok(())
}

fn shell_probe(
    q: &PoincarePoint,
    partition: &ShellPartition,
    k: usize,
    epsilon: f64,
    budget: Option<u64>,
) -> Result<SearchResult> {
    validate_shell_query(q, partition, epsilon, k)?;
    let params = partition.params();
    let start = partition_index(q, params).map_err(|e| match e {
        Error::NormOutOfRange { norm, max_norm, .. } => Error::NormOutOfRange {
            subject: "query point".into(),
            norm,
            max_norm,
        },
        other => other,
    })?;

    let mut stats = OracleStats::default();
    // Bands are disjoint, so candidates never repeat across probes.
    let mut pool: Vec<(f64, u64)> = Vec::new();

    let probe = |band: u32, stats: &mut OracleStats, pool: &mut Vec<(f64, u64)>| -> Result<()> {
        let shell_band = partition.band(band);
        let hits = shell_band.oracle.nearest_k(q.coords(), k, stats)?;
        stats.oracle_calls += 1;
        let band_data = shell_band.dataset();
        for (pos, _) in hits {
            let dist = hyperbolic_distance(q, band_data.point(pos));
            pool.push((dist, band_data.id(pos)));
        }
        pool.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        Ok(())
    };
    let kth_radius = |pool: &Vec<(f64, u64)>| -> Option<f64> { pool.get(k - 1).map(|&(d, _)| d) };

    probe(start, &mut stats, &mut pool)?;
    let b_max = params.num_bands();
    let mut top = start + 1; // > b_max means the outward frontier is done
    let mut bottom = start - 1; // 0 means the inward frontier is done
    let mut early = false;

    loop {
        let radius = kth_radius(&pool);
        if top <= b_max && !check_intersection_radius(q, radius, params, top) {
            top = b_max + 1;
        }
        if bottom >= 1 && !check_intersection_radius(q, radius, params, bottom) {
            bottom = 0;
        }
        let next = match (top <= b_max, bottom >= 1) {
            (false, false) => break,
            (true, false) => top,
            (false, true) => bottom,
            (true, true) => choose_band_radius(q, radius, params, top, bottom)?,
        };
        if budget_hit(budget, &stats) {
            early = true;
            break;
        }
        probe(next, &mut stats, &mut pool)?;
        if next == top {
            top += 1;
        } else {
            bottom -= 1;
        }
    }

    pool.truncate(k);
    if pool.is_empty() {
        // Possible only when every probed band's LSH probe set came up empty.
        return Err(Error::Infeasible(
            "no band produced a candidate (all probe sets empty)".into(),
        ));
    }
    Ok(SearchResult {
        neighbor_ids: pool.iter().map(|&(_, id)| id).collect(),
        hyper_distances: pool.iter().map(|&(d, _)| d).collect(),
        stats,
        terminated_early: early,
    })
}

/// Randomized probing order with decision-query skipping.
///
/// Nonempty bands are visited in a permutation drawn from `seed`. The first
/// band is probed fully; after that a band is fully probed only if its
/// decision oracle certifies a point within the radius that could beat the
/// current best — the Euclidean radius in band `b` equivalent to the current
/// best hyperbolic distance, sinh(d/2)·√((1−‖q‖²)/wᵇ)/(1+ε). Full probes
/// count as oracle calls; decision queries only charge examined points.
pub fn randomized_shell_nn(
    q: &PoincarePoint,
    partition: &ShellPartition,
    epsilon: f64,
    seed: u64,
    budget: Option<u64>,
) -> Result<SearchResult> {
    validate_shell_query(q, partition, epsilon, 1)?;
    let width = partition.params().width();

    let mut order: Vec<u32> = partition
        .bands()
        .iter()
        .filter(|b| !b.is_empty())
        .map(|b| b.band())
        .collect();
    let mut rng = StdRng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let mut stats = OracleStats::default();
    let mut best: Option<(f64, u64)> = None;
    let mut early = false;

    for band in order {
        let shell_band = partition.band(band);
        if let Some((best_dist, _)) = best {
            if best_dist == 0.0 {
                break; // nothing can beat an exact hit
            }
            if budget_hit(budget, &stats) {
                early = true;
                break;
            }
            let radius = (best_dist / 2.0).sinh()
                * (q.one_minus_sq_norm() / width.powi(band as i32)).sqrt()
                / (1.0 + epsilon);
            if !(radius > 0.0) {
                // Underflow: the band is so far out that no representable
                // point in it can come close. A decision query would reject.
                continue;
            }
            if decision_query(&shell_band.oracle, q.coords(), radius, epsilon, &mut stats)?
                .is_none()
            {
                continue;
            }
        } else if budget_hit(budget, &stats) && stats.points_examined > 0 {
            early = true;
            break;
        }
        let hit = shell_band.oracle.nearest(q.coords(), &mut stats)?;
        stats.oracle_calls += 1;
        if let Some((pos, _)) = hit {
            let band_data = shell_band.dataset();
            let dist = hyperbolic_distance(q, band_data.point(pos));
            let id = band_data.id(pos);
            let better = match best {
                None => true,
                Some((bd, bid)) => dist < bd || (dist == bd && id < bid),
            };
            if better {
                best = Some((dist, id));
            }
        }
    }

    let Some((dist, id)) = best else {
        return Err(Error::Infeasible(
            "no band produced a candidate (all probe sets empty)".into(),
        ));
    };
    Ok(SearchResult {
        neighbor_ids: vec![id],
        hyper_distances: vec![dist],
        stats,
        terminated_early: early,
    })
}
