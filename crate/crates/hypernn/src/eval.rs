//! The budgeted evaluation harness: query withholding, per-budget runs of a
//! configured algorithm over a query set, and the recall / distance-ratio /
//! oracle-call metrics the reports are built from.
//!
//! A budget caps `points_examined`, not oracle invocations; a call that trips
//! the cap mid-scan still counts the points it already touched, and the
//! algorithm returns its best-so-far answer. Ground truth always comes from
//! a full hyperbolic scan of the searchable set.

use std::sync::Arc;
use std::time::Instant;

use clap::ValueEnum;
use rand::rngs::StdRng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::geometry::{hyperbolic_distance, PoincarePoint, ShellParams};
use crate::oracle::{EuclideanOracle, LshParams, OracleStats};
use crate::search::{
    binary_search_nn, brute_force_hyper_knn, build_shell_partition, randomized_shell_nn,
    recentering_knn, recentering_nn, shell_knn, shell_nn, SearchResult, ShellBacking,
    ShellPartition,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Recentering,
    BinarySearch,
    Shell,
    RandomizedShell,
    /// Budgeted hyperbolic scan in storage order — the baseline the others
    /// are judged against.
    Brute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OracleChoice {
    Brute,
    Kdtree,
    Lsh,
}

/// One evaluation run: which algorithm over which oracle, the neighbor count,
/// the budget ladder, and the experiment knobs.
///
/// `budgets` entries are `points_examined` caps; `None` means unlimited and
/// must come last. The shell knobs (`width`, `bands`) and LSH knobs
/// (`tables`, `hyperplanes`, `granularity_cap`, `probe_radius`) only matter
/// for the algorithms and oracles that read them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub algorithm: Algorithm,
    pub oracle: OracleChoice,
    pub k: usize,
    pub budgets: Vec<Option<u64>>,
    /// Approximation target of the binary search; ignored elsewhere.
    pub c: f64,
    /// Slack the shell walk grants its backing oracle. Must be declared
    /// explicitly when the backing is LSH, whose answers carry no bound of
    /// their own.
    pub epsilon: Option<f64>,
    pub width: f64,
    pub bands: u32,
    pub tables: usize,
    pub hyperplanes: usize,
    /// Per-band quantization is min(widthᵇᵃⁿᵈ, this cap).
    pub granularity_cap: f64,
    pub probe_radius: usize,
    pub num_queries: usize,
    pub seed: u64,
}

impl Default for EvalConfig {
    /// The default experiment profile: width-3 shells, 25 bands, 5 tables of
    /// 15 hyperplanes, granularity capped at 10⁴, probe radius 1, K = 1,
    /// a single unlimited budget.
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Recentering,
            oracle: OracleChoice::Kdtree,
            k: 1,
            budgets: vec![None],
            c: 2.0,
            epsilon: None,
            width: 3.0,
            bands: 25,
            tables: 5,
            hyperplanes: 15,
            granularity_cap: 10_000.0,
            probe_radius: 1,
            num_queries: 0,
            seed: 0,
        }
    }
}

impl EvalConfig {
    pub fn new(algorithm: Algorithm, oracle: OracleChoice) -> Self {
        Self {
            algorithm,
            oracle,
            ..Self::default()
        }
    }

    /// Checks the cross-field consistency rules: a positive strictly
    /// ascending budget ladder (unlimited last), exact oracles for the
    /// algorithms whose guarantees need them, a declared ε for shell over
    /// LSH, and K = 1 where no K-best variant exists.
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::InvalidConfig(reason));
        if self.k == 0 {
            return bad("K must be at least 1".into());
        }
        if self.budgets.is_empty() {
            return bad("at least one budget row required".into());
        }
        let mut prev: Option<u64> = None;
        let mut unlimited = false;
        for b in &self.budgets {
            match b {
                Some(v) => {
                    if unlimited {
                        return bad("finite budgets must precede the unlimited one".into());
                    }
                    if *v == 0 {
                        return bad("budgets must be positive".into());
                    }
                    if let Some(p) = prev {
                        if *v <= p {
                            return bad(format!(
                                "budgets must be strictly ascending, got {p} then {v}"
                            ));
                        }
                    }
                    prev = Some(*v);
                }
                None => {
                    if unlimited {
                        return bad("at most one unlimited budget row".into());
                    }
                    unlimited = true;
                }
            }
        }
        if let Some(e) = self.epsilon {
            if !(e.is_finite() && e >= 0.0) {
                return bad(format!("ε must be finite and nonnegative, got {e}"));
            }
        }
        match self.algorithm {
            Algorithm::Recentering => {
                if self.oracle == OracleChoice::Lsh {
                    return bad("recentering's exactness argument needs an exact oracle \
                         (brute or kdtree); LSH answers carry no bound"
                        .into());
                }
            }
            Algorithm::BinarySearch => {
                if self.oracle == OracleChoice::Lsh {
                    return bad("the ratio binary search needs an exact oracle \
                         (brute or kdtree); LSH answers carry no bound"
                        .into());
                }
                if !(self.c.is_finite() && self.c > 1.0) {
                    return bad(format!(
                        "binary search needs a finite c > 1, got {}",
                        self.c
                    ));
                }
                if self.k != 1 {
                    return bad("binary search reports a single neighbor; K must be 1".into());
                }
            }
            Algorithm::Shell | Algorithm::RandomizedShell => {
                if !(self.width.is_finite() && self.width > 1.0) {
                    return bad(format!(
                        "shell width must be a finite real > 1, got {}",
                        self.width
                    ));
                }
                if self.bands == 0 {
                    return bad("at least one band required".into());
                }
                if self.oracle == OracleChoice::Lsh && self.epsilon.is_none() {
                    return bad("shell over LSH: declare the ε the probe answers are to be \
                         trusted as (1+ε)-approximate within"
                        .into());
                }
                if self.algorithm == Algorithm::RandomizedShell && self.k != 1 {
                    return bad(
                        "the randomized band walk reports a single neighbor; K must be 1".into(),
                    );
                }
            }
            Algorithm::Brute => {}
        }
        Ok(())
    }
}

/// Shell parameters that realize exactly `bands` annuli at the given width:
/// the supported norm reach is s√(1 − width⁻ᵇᵃⁿᵈˢ), backed off one part in
/// 10¹² so the band count never rounds up.
pub fn shell_params_for(width: f64, bands: u32) -> Result<ShellParams> {
    if bands == 0 {
        return Err(Error::InvalidParameter {
            name: "bands",
            reason: "must be at least 1".into(),
        });
    }
    let gap = width.powi(-(bands as i32));
    if !(gap > 0.0) {
        return Err(Error::InvalidParameter {
            name: "bands",
            reason: format!("width {width} to the power −{bands} underflows"),
        });
    }
    let max_norm = (1.0 - gap).sqrt() * (1.0 - 1e-12);
    let params = ShellParams::new(width, max_norm)?;
    if params.num_bands() != bands {
        return Err(Error::InvalidConfig(format!(
            "width {width} cannot realize exactly {bands} bands (got {})",
            params.num_bands()
        )));
    }
    Ok(params)
}

/// Withholds a seed-deterministic uniform sample of `num_queries` points
/// (without replacement) and returns (searchable remainder, withheld queries),
/// both with their original ids.
pub fn split_queries(data: &Dataset, num_queries: usize, seed: u64) -> Result<(Dataset, Dataset)> {
    if num_queries >= data.len() {
        return Err(Error::InvalidParameter {
            name: "num_queries",
            reason: format!(
                "must leave a searchable set: {num_queries} requested from {} points",
                data.len()
            ),
        });
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let mut withheld = rand::seq::index::sample(&mut rng, data.len(), num_queries).into_vec();
    withheld.sort_unstable();
    let mut is_withheld = vec![false; data.len()];
    for &pos in &withheld {
        is_withheld[pos] = true;
    }
    let kept: Vec<usize> = (0..data.len()).filter(|&pos| !is_withheld[pos]).collect();
    Ok((data.subset(&kept), data.subset(&withheld)))
}

/// One line of the machine-readable report. Field order is the wire order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub budget: Option<u64>,
    pub recall: f64,
    pub avg_ratio: f64,
    pub avg_max_ratio: f64,
    pub mean_oracle_calls: f64,
    pub wall_seconds: f64,
}

/// Per-budget oracle-invocation statistics over the query set (sample
/// standard deviation). Shown in the human table, not the machine rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleCallStats {
    pub budget: Option<u64>,
    pub mean: f64,
    pub sd: f64,
    pub min: u64,
    pub max: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub call_stats: Vec<OracleCallStats>,
}

fn budget_label(budget: Option<u64>) -> String {
    budget.map_or_else(|| "unlimited".to_string(), |b| b.to_string())
}

impl EvalReport {
    /// One JSON object per budget row, newline-terminated, keys in the fixed
    /// wire order.
    pub fn machine_text(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            out.push_str(&serde_json::to_string(row).expect("rows hold only plain numbers"));
            out.push('\n');
        }
        out
    }

    /// Human-readable table, including the oracle-call spread.
    pub fn table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:>10}  {:>7}  {:>9}  {:>13}  {:>10}  {:>8}  {:>9}  {:>9}  {:>9}\n",
            "budget",
            "recall",
            "avg_ratio",
            "avg_max_ratio",
            "mean_calls",
            "sd_calls",
            "min_calls",
            "max_calls",
            "wall_s"
        ));
        for (row, stats) in self.rows.iter().zip(&self.call_stats) {
            out.push_str(&format!(
                "{:>10}  {:>7.4}  {:>9.4}  {:>13.4}  {:>10.2}  {:>8.2}  {:>9}  {:>9}  {:>9.3}\n",
                budget_label(row.budget),
                row.recall,
                row.avg_ratio,
                row.avg_max_ratio,
                row.mean_oracle_calls,
                stats.sd,
                stats.min,
                stats.max,
                row.wall_seconds
            ));
        }
        out
    }
}

enum Runner {
    Oracle(EuclideanOracle),
    Shell {
        partition: ShellPartition,
        epsilon: f64,
    },
    Brute(Arc<Dataset>),
}

struct Harness {
    runner: Runner,
    algorithm: Algorithm,
    k: usize,
    c: f64,
    seed: u64,
}

/// Per-query seed for the randomized band walk: splitmix-style stride off the
/// run seed, so parallel and sequential schedules draw identically.
fn query_seed(base: u64, index: usize) -> u64 {
    base.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Hyperbolic scan of the first min(budget, n) points in storage order. No
/// Euclidean oracle is involved, so `oracle_calls` stays 0.
fn brute_prefix_knn(
    data: &Dataset,
    q: &PoincarePoint,
    k: usize,
    budget: Option<u64>,
) -> SearchResult {
    let cap = budget.map_or(data.len(), |b| (b.min(data.len() as u64)) as usize);
    let mut scored: Vec<(f64, u64)> = (0..cap)
        .map(|pos| (hyperbolic_distance(q, data.point(pos)), data.id(pos)))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    scored.truncate(k);
    SearchResult {
        neighbor_ids: scored.iter().map(|&(_, id)| id).collect(),
        hyper_distances: scored.iter().map(|&(d, _)| d).collect(),
        stats: OracleStats {
            oracle_calls: 0,
            points_examined: cap as u64,
        },
        terminated_early: cap < data.len(),
    }
}

impl Harness {
    fn build(config: &EvalConfig, data: Arc<Dataset>) -> Result<Self> {
        let runner = match config.algorithm {
            Algorithm::Recentering | Algorithm::BinarySearch => {
                let oracle = match config.oracle {
                    OracleChoice::Brute => EuclideanOracle::brute(data),
                    OracleChoice::Kdtree => EuclideanOracle::kd(data),
                    OracleChoice::Lsh => unreachable!("rejected by EvalConfig::validate"),
                };
                Runner::Oracle(oracle)
            }
            Algorithm::Shell | Algorithm::RandomizedShell => {
                let params = shell_params_for(config.width, config.bands)?;
                let backing = match config.oracle {
                    OracleChoice::Brute => ShellBacking::Brute,
                    OracleChoice::Kdtree => ShellBacking::Kd,
                    OracleChoice::Lsh => ShellBacking::Lsh(LshParams::new(
                        config.tables,
                        config.hyperplanes,
                        config.granularity_cap,
                        config.probe_radius,
                        config.seed,
                    )?),
                };
                let partition = build_shell_partition(data, &params, &backing)?;
                Runner::Shell {
                    partition,
                    epsilon: config.epsilon.unwrap_or(0.0),
                }
            }
            Algorithm::Brute => Runner::Brute(data),
        };
        Ok(Self {
            runner,
            algorithm: config.algorithm,
            k: config.k,
            c: config.c,
            seed: config.seed,
        })
    }

    fn run(&self, q: &PoincarePoint, index: usize, budget: Option<u64>) -> Result<SearchResult> {
        match (&self.runner, self.algorithm) {
            (Runner::Oracle(oracle), Algorithm::Recentering) => {
                if self.k == 1 {
                    recentering_nn(q, oracle, budget)
                } else {
                    recentering_knn(q, oracle, self.k, budget)
                }
            }
            (Runner::Oracle(oracle), Algorithm::BinarySearch) => {
                binary_search_nn(q, oracle, self.c, budget)
            }
            (Runner::Shell { partition, epsilon }, Algorithm::Shell) => {
                if self.k == 1 {
                    shell_nn(q, partition, *epsilon, budget)
                } else {
                    shell_knn(q, partition, self.k, *epsilon, budget)
                }
            }
            (Runner::Shell { partition, epsilon }, Algorithm::RandomizedShell) => {
                randomized_shell_nn(q, partition, *epsilon, query_seed(self.seed, index), budget)
            }
            (Runner::Brute(data), Algorithm::Brute) => {
                Ok(brute_prefix_knn(data, q, self.k, budget))
            }
            _ => unreachable!("runner and algorithm are built together"),
        }
    }
}

fn run_all(
    harness: &Harness,
    queries: &Dataset,
    budget: Option<u64>,
    parallel: bool,
) -> Result<Vec<SearchResult>> {
    #[cfg(feature = "parallel")]
    if parallel {
        return (0..queries.len())
            .into_par_iter()
            .map(|i| harness.run(queries.point(i), i, budget))
            .collect();
    }
    let _ = parallel;
    (0..queries.len())
        .map(|i| harness.run(queries.point(i), i, budget))
        .collect()
}

/// Runs the configured algorithm over every query at every budget and
/// aggregates the metrics.
///
/// Recall is (Σ over queries of |found ∩ true-K| / K) / #queries. Ratios are
/// pointwise by rank, d(q, found_k) / d(q, true_k); a rank whose true
/// distance is zero contributes 1 when the algorithm also found a distance-0
/// point and is excluded from the averages otherwise. `avg_ratio` averages
/// each query's mean rank ratio, `avg_max_ratio` each query's worst; queries
/// that produced nothing comparable drop out of both (and the averages
/// degenerate to 1.0 when no query is comparable).
///
/// With the `parallel` feature, queries run concurrently; aggregation always
/// folds in query order, so the numbers match [`evaluate_sequential`] bit for
/// bit.
pub fn evaluate(config: &EvalConfig, data: &Arc<Dataset>, queries: &Dataset) -> Result<EvalReport> {
    evaluate_impl(config, data, queries, cfg!(feature = "parallel"))
}

/// [`evaluate`], but strictly one query at a time regardless of features.
pub fn evaluate_sequential(
    config: &EvalConfig,
    data: &Arc<Dataset>,
    queries: &Dataset,
) -> Result<EvalReport> {
    evaluate_impl(config, data, queries, false)
}

fn evaluate_impl(
    config: &EvalConfig,
    data: &Arc<Dataset>,
    queries: &Dataset,
    parallel: bool,
) -> Result<EvalReport> {
    config.validate()?;
    if queries.is_empty() {
        return Err(Error::InvalidParameter {
            name: "queries",
            reason: "at least one withheld query required".into(),
        });
    }
    if queries.dim() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            got: queries.dim(),
        });
    }
    let harness = Harness::build(config, Arc::clone(data))?;
    let truths: Vec<SearchResult> = (0..queries.len())
        .map(|i| brute_force_hyper_knn(queries.point(i), data, config.k))
        .collect::<Result<_>>()?;

    let n = queries.len() as f64;
    let mut rows = Vec::with_capacity(config.budgets.len());
    let mut call_stats = Vec::with_capacity(config.budgets.len());
    for &budget in &config.budgets {
        let start = Instant::now();
        let outcomes = run_all(&harness, queries, budget, parallel)?;
        let wall_seconds = start.elapsed().as_secs_f64();

        let mut recall_sum = 0.0;
        let mut ratio_sum = 0.0;
        let mut ratio_queries = 0u64;
        let mut max_sum = 0.0;
        let mut calls: Vec<u64> = Vec::with_capacity(outcomes.len());
        for (out, truth) in outcomes.iter().zip(&truths) {
            calls.push(out.stats.oracle_calls);
            let hits = out
                .neighbor_ids
                .iter()
                .filter(|id| truth.neighbor_ids.contains(id))
                .count();
            recall_sum += hits as f64 / config.k as f64;
            let mut rank_sum = 0.0;
            let mut ranks = 0u32;
            let mut worst = f64::NEG_INFINITY;
            for (&found, &true_d) in out.hyper_distances.iter().zip(&truth.hyper_distances) {
                let ratio = if true_d == 0.0 {
                    if found == 0.0 {
                        1.0
                    } else {
                        continue;
                    }
                } else {
                    found / true_d
                };
                rank_sum += ratio;
                ranks += 1;
                worst = worst.max(ratio);
            }
            if ranks > 0 {
                ratio_sum += rank_sum / f64::from(ranks);
                max_sum += worst;
                ratio_queries += 1;
            }
        }
        let mean = calls.iter().sum::<u64>() as f64 / n;
        let sd = if calls.len() > 1 {
            let var = calls
                .iter()
                .map(|&c| {
                    let d = c as f64 - mean;
                    d * d
                })
                .sum::<f64>()
                / (n - 1.0);
            var.sqrt()
        } else {
            0.0
        };
        let (avg_ratio, avg_max_ratio) = if ratio_queries > 0 {
            (
                ratio_sum / ratio_queries as f64,
                max_sum / ratio_queries as f64,
            )
        } else {
            (1.0, 1.0)
        };
        rows.push(EvalRow {
            budget,
            recall: recall_sum / n,
            avg_ratio,
            avg_max_ratio,
            mean_oracle_calls: mean,
            wall_seconds,
        });
        call_stats.push(OracleCallStats {
            budget,
            mean,
            sd,
            min: calls.iter().copied().min().expect("nonempty queries"),
            max: calls.iter().copied().max().expect("nonempty queries"),
        });
    }
    Ok(EvalReport { rows, call_stats })
}
