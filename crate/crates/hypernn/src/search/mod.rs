//! Hyperbolic nearest-neighbor search over Euclidean oracles.
//!
//! All algorithms here reduce hyperbolic NN in the Poincaré ball to a
//! sequence of *Euclidean* nearest-neighbor calls, exploiting the fact that
//! hyperbolic balls are Euclidean balls (with displaced centers):
//!
//! * [`recentering_nn`] — iteratively re-centers a shrinking ball around the
//!   query; with an exact oracle it returns the exact hyperbolic NN in at
//!   most k+1 calls, k being the hyperbolic rank of the Euclidean NN.
//! * [`binary_search_nn`] — bisects on the ball radius in log space; returns
//!   a c-approximate neighbor in ⌈log₂(ln(R₀/L₀)/ln c)⌉ + 1 rounds.
//! * [`shell::shell_nn`] and friends — partition the ball into concentric
//!   bands and probe per-band oracles, for a √w·(1+ε) guarantee.
//! * [`brute_force_hyper_knn`] — the ground-truth full scan.
//!
//! Oracle invocations are counted in [`OracleStats::oracle_calls`]; budgets
//! cap `points_examined` and are checked between calls, so a run can overshoot
//! its budget by at most the one call in flight.

pub mod shell;

pub use shell::{
    build_shell_partition, randomized_shell_nn, shell_knn, shell_nn, ShellBacking, ShellBand,
    ShellPartition,
};

use std::collections::HashMap;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::geometry::{euclidean_center_of_hyperbolic_ball, hyperbolic_distance, PoincarePoint};
use crate::numeric::distances_equal;
use crate::oracle::{EuclideanOracle, OracleStats};

/// The outcome of one search: neighbor ids with their hyperbolic distances
/// (ascending), the work counters, and whether a budget cut the run short.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub neighbor_ids: Vec<u64>,
    pub hyper_distances: Vec<f64>,
    pub stats: OracleStats,
    pub terminated_early: bool,
}

impl SearchResult {
    /// The best neighbor, when the search produced any.
    pub fn best(&self) -> Option<(u64, f64)> {
        self.neighbor_ids
            .first()
            .map(|&id| (id, self.hyper_distances[0]))
    }
}

/// Lower/upper hyperbolic-distance bounds after a bisection round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinarySearchBounds {
    pub lower: f64,
    pub upper: f64,
}

fn budget_hit(budget: Option<u64>, stats: &OracleStats) -> bool {
    budget.is_some_and(|b| stats.points_examined >= b)
}

/// One counted oracle invocation.
fn oracle_call(
    oracle: &EuclideanOracle,
    target: &[f64],
    stats: &mut OracleStats,
) -> Result<Option<(usize, f64)>> {
    let hit = oracle.nearest(target, stats)?;
    stats.oracle_calls += 1;
    Ok(hit)
}

/// These searches steer by the returned candidate, so an oracle that can come
/// back empty-handed (LSH with an empty probe set) cannot drive them.
fn require_candidate(hit: Option<(usize, f64)>) -> Result<(usize, f64)> {
    hit.ok_or_else(|| {
        Error::InvalidConfig(
            "this search needs an oracle that returns a candidate on every call; \
             the probe set came back empty"
                .into(),
        )
    })
}

fn check_query(data: &Dataset, q: &PoincarePoint) -> Result<()> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if q.dim() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            got: q.dim(),
        });
    }
    Ok(())
}

fn single_result(
    data: &Dataset,
    pos: usize,
    dist: f64,
    stats: OracleStats,
    terminated_early: bool,
) -> SearchResult {
    SearchResult {
        neighbor_ids: vec![data.id(pos)],
        hyper_distances: vec![dist],
        stats,
        terminated_early,
    }
}

/// Exact hyperbolic nearest neighbor by iterated re-centering.
///
/// Queries the oracle at `q`, then repeatedly at the Euclidean center of the
/// hyperbolic ball B(q, d(q, best)) while the answer keeps improving beyond
/// the relative distance tolerance. With an exact oracle and no budget the
/// final candidate is the true hyperbolic NN; the call count is k+1 where k
/// is the hyperbolic rank of the Euclidean NN (so never more than |D|+1).
/// A budget returns the best so far with `terminated_early` set.
///
/// The oracle contract here is exactness; running with an approximate oracle
/// is permitted (the failure demonstrations do) but voids the guarantee.
pub fn recentering_nn(
    q: &PoincarePoint,
    oracle: &EuclideanOracle,
    budget: Option<u64>,
) -> Result<SearchResult> {
    let data = oracle.data().clone();
    check_query(&data, q)?;
    let mut stats = OracleStats::default();

    let (pos, de) = require_candidate(oracle_call(oracle, q.coords(), &mut stats)?)?;
    let mut best_pos = pos;
    let mut best_dist = hyperbolic_distance(q, data.point(pos));
    if de == 0.0 {
        // The query is a dataset point; nothing can be closer.
        return Ok(single_result(&data, best_pos, best_dist, stats, false));
    }

    let mut early = false;
    loop {
        if best_dist == 0.0 {
            break;
        }
        if budget_hit(budget, &stats) {
            early = true;
            break;
        }
        let ball = euclidean_center_of_hyperbolic_ball(q, best_dist);
        let (pos, _) = require_candidate(oracle_call(oracle, &ball.center, &mut stats)?)?;
        let dist = hyperbolic_distance(q, data.point(pos));
        let improved = dist < best_dist && !distances_equal(dist, best_dist);
        if !improved {
            break;
        }
        best_pos = pos;
        best_dist = dist;
    }
    Ok(single_result(&data, best_pos, best_dist, stats, early))
}

/// K nearest hyperbolic neighbors by two-phase re-centering.
///
/// Every oracle call asks for the K Euclidean-nearest points of the current
/// ball center and pours them into a candidate pool. Phase one re-centers on
/// the pool's best distance until that stops improving; phase two re-centers
/// on the K-th best until *it* stops improving. With an exact oracle and no
/// budget the pool's top K are the exact hyperbolic K-NN.
pub fn recentering_knn(
    q: &PoincarePoint,
    oracle: &EuclideanOracle,
    k: usize,
    budget: Option<u64>,
) -> Result<SearchResult> {
    let data = oracle.data().clone();
    check_query(&data, q)?;
    if k == 0 {
        return Err(Error::InvalidParameter {
            name: "k",
            reason: "must be at least 1".into(),
        });
    }
    if k > data.len() {
        return Err(Error::NotEnoughPoints {
            requested: k,
            available: data.len(),
        });
    }
    if k == 1 {
        return recentering_nn(q, oracle, budget);
    }

    let mut stats = OracleStats::default();
    // Pool of every candidate any call returned, keyed by position.
    let mut pool: HashMap<usize, f64> = HashMap::new();
    let absorb = |hits: Vec<(usize, f64)>, pool: &mut HashMap<usize, f64>, q: &PoincarePoint| {
        for (pos, _) in hits {
            pool.entry(pos)
                .or_insert_with(|| hyperbolic_distance(q, data.point(pos)));
        }
    };

    let first = oracle.nearest_k(q.coords(), k, &mut stats)?;
    stats.oracle_calls += 1;
    absorb(first, &mut pool, q);

    let rank_dist = |pool: &HashMap<usize, f64>, rank: usize| -> Option<f64> {
        if pool.len() < rank {
            return None;
        }
        let mut dists: Vec<f64> = pool.values().copied().collect();
        dists.sort_unstable_by(f64::total_cmp);
        Some(dists[rank - 1])
    };

    let mut early = false;
    'phases: for rank in [1usize, k] {
        // A missing rank means too few candidates to define this phase's
        // radius yet; only the other phase's growth can change that.
        while let Some(target) = rank_dist(&pool, rank) {
            if budget_hit(budget, &stats) {
                early = true;
                break 'phases;
            }
            let ball = euclidean_center_of_hyperbolic_ball(q, target);
            let hits = oracle.nearest_k(&ball.center, k, &mut stats)?;
            stats.oracle_calls += 1;
            absorb(hits, &mut pool, q);
            let after = rank_dist(&pool, rank).expect("pool only grows");
            let improved = after < target && !distances_equal(after, target);
            if !improved {
                break;
            }
        }
    }

    let mut ranked: Vec<(f64, u64)> = pool
        .iter()
        .map(|(&pos, &dist)| (dist, data.id(pos)))
        .collect();
    ranked.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    ranked.truncate(k);
    Ok(SearchResult {
        neighbor_ids: ranked.iter().map(|&(_, id)| id).collect(),
        hyper_distances: ranked.iter().map(|&(d, _)| d).collect(),
        stats,
        terminated_early: early,
    })
}

/// c-approximate hyperbolic NN by bisection on the ball radius.
pub fn binary_search_nn(
    q: &PoincarePoint,
    oracle: &EuclideanOracle,
    c: f64,
    budget: Option<u64>,
) -> Result<SearchResult> {
    Ok(binary_search_nn_traced(q, oracle, c, budget)?.0)
}

/// [`binary_search_nn`] plus the (L, R) bounds after initialization and after
/// every round, for callers that audit the bisection invariants.
///
/// R starts at the hyperbolic distance of the Euclidean NN `n_E`; L at the
/// hyperbolic distance of the radial point t·q, t = 1 − ‖n_E−q‖/‖q‖ — the
/// hyperbolically-nearest point of the empty Euclidean ball's boundary, hence
/// a valid lower bound on d(q, n*). Each round queries the oracle at the
/// Euclidean center of B(q, √(RL)) and keeps the half that must contain the
/// answer, squaring-rooting the R/L ratio, until R ≤ c·L.
pub fn binary_search_nn_traced(
    q: &PoincarePoint,
    oracle: &EuclideanOracle,
    c: f64,
    budget: Option<u64>,
) -> Result<(SearchResult, Vec<BinarySearchBounds>)> {
    let data = oracle.data().clone();
    check_query(&data, q)?;
    if !(c > 1.0) {
        return Err(Error::InvalidParameter {
            name: "c",
            reason: format!("approximation factor must exceed 1, got {c}"),
        });
    }
    let mut stats = OracleStats::default();
    let mut trace = Vec::new();

    let (pos, de) = require_candidate(oracle_call(oracle, q.coords(), &mut stats)?)?;
    let mut best_pos = pos;
    let mut best_dist = hyperbolic_distance(q, data.point(pos));
    if de == 0.0 || q.is_origin() {
        // Exact hit; or an origin query, where Euclidean and hyperbolic
        // orderings coincide and n_E is already the answer.
        return Ok((
            single_result(&data, best_pos, best_dist, stats, false),
            trace,
        ));
    }

    let mut upper = best_dist;
    let mut lower = {
        let t = 1.0 - de / q.norm();
        let scaled: Vec<f64> = q.coords().iter().map(|&x| t * x).collect();
        match PoincarePoint::new(scaled) {
            Ok(p) => hyperbolic_distance(q, &p),
            // t·q can only leave the ball through rounding at extremes; the
            // degenerate bound collapses the bisection to "return n_E".
            Err(_) => upper,
        }
    };
    if lower > upper {
        lower = upper;
    }
    trace.push(BinarySearchBounds { lower, upper });

    let mut early = false;
    while upper > c * lower {
        if budget_hit(budget, &stats) {
            early = true;
            break;
        }
        let mid = (upper * lower).sqrt();
        if mid <= lower || mid >= upper {
            // Floating-point floor: the bounds are adjacent.
            break;
        }
        let ball = euclidean_center_of_hyperbolic_ball(q, mid);
        let (pos, _) = require_candidate(oracle_call(oracle, &ball.center, &mut stats)?)?;
        let dist = hyperbolic_distance(q, data.point(pos));
        if dist <= mid {
            // Something lives inside B(q, mid): it becomes the new candidate
            // and its distance the new upper bound.
            best_pos = pos;
            best_dist = dist;
            upper = dist;
        } else {
            // The ball is empty of data points, so no answer lies below mid.
            lower = mid;
        }
        trace.push(BinarySearchBounds { lower, upper });
    }

    Ok((
        single_result(&data, best_pos, best_dist, stats, early),
        trace,
    ))
}

/// Ground truth: the exact K hyperbolic nearest neighbors by full scan.
pub fn brute_force_hyper_knn(q: &PoincarePoint, data: &Dataset, k: usize) -> Result<SearchResult> {
    check_query(data, q)?;
    if k == 0 {
        return Err(Error::InvalidParameter {
            name: "k",
            reason: "must be at least 1".into(),
        });
    }
    if k > data.len() {
        return Err(Error::NotEnoughPoints {
            requested: k,
            available: data.len(),
        });
    }
    let mut stats = OracleStats::default();
    stats.points_examined += data.len() as u64;
    let mut ranked: Vec<(f64, u64)> = (0..data.len())
        .map(|pos| (hyperbolic_distance(q, data.point(pos)), data.id(pos)))
        .collect();
    ranked.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    ranked.truncate(k);
    Ok(SearchResult {
        neighbor_ids: ranked.iter().map(|&(_, id)| id).collect(),
        hyper_distances: ranked.iter().map(|&(d, _)| d).collect(),
        stats,
        terminated_early: false,
    })
}
