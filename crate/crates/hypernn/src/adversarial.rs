//! Deterministic hard instances and failure demonstrations for the search
//! algorithms: a layout that forces the recentering walk to spend one oracle
//! call per point, a two-point instance whose Euclidean and hyperbolic
//! nearest neighbors disagree by an arbitrarily large distance ratio, paired
//! constructions on which a (1+ε)-approximate oracle misdirects recentering
//! or the ratio binary search to the far point, and the fixed two-point
//! configuration that defeats exact-backed shell search.
//!
//! Every generator checks the regime its construction relies on before
//! returning — root residuals, strict distance orderings, oracle-legality
//! margins — and reports measurements (`measured_ratio`, `residual`) instead
//! of promising outcomes; the paired algorithm runs live in the test suite.
//! All instances are fully deterministic: fixed ids, fixed coordinates, no
//! randomness anywhere.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::geometry::{
    distance_to_origin, euclidean_center_of_hyperbolic_ball, hyperbolic_distance, PoincarePoint,
};
use crate::numeric::{bisect, dist_sq};

/// A point on the last coordinate axis: (0, …, 0, value).
fn radial_point(dim: usize, value: f64) -> Result<PoincarePoint> {
    let mut coords = vec![0.0; dim];
    coords[dim - 1] = value;
    PoincarePoint::new(coords)
}

fn euclid(a: &PoincarePoint, b: &PoincarePoint) -> f64 {
    dist_sq(a.coords(), b.coords()).sqrt()
}

/// Machine-readable description of a generated instance, written next to the
/// dataset by the `gen-adversarial` subcommand so a consumer can re-check the
/// claims without re-running the generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstructionSpec {
    RecenteringWorstcase {
        k: usize,
        q_norm: f64,
        dim: usize,
        z: f64,
        residual: f64,
        expected_calls: u64,
    },
    RlRatio {
        s: f64,
        delta: f64,
        gamma: f64,
        ratio_lower_bound: f64,
        measured_ratio: f64,
    },
    RecenteringApproxFailure {
        epsilon: f64,
        delta: f64,
        gamma: f64,
        wrong_id: u64,
        true_id: u64,
        measured_ratio: f64,
    },
    BinarySearchApproxFailure {
        epsilon: f64,
        s: f64,
        delta: f64,
        gamma: f64,
        c: f64,
        wrong_id: u64,
        true_id: u64,
        measured_ratio: f64,
        first_probe_radius: f64,
    },
    ShellExactCounterexample {
        width: f64,
        wrong_id: u64,
        true_id: u64,
        stated_hyper_dist_to_true: f64,
        stated_hyper_dist_to_wrong: f64,
        stated_euclid_dist_to_wrong: f64,
        stated_euclid_dist_to_true: f64,
        stated_inv_gap_true: f64,
        stated_inv_gap_wrong: f64,
    },
}

impl ConstructionSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ConstructionSpec::RecenteringWorstcase { .. } => "recentering_worstcase",
            ConstructionSpec::RlRatio { .. } => "rl_ratio",
            ConstructionSpec::RecenteringApproxFailure { .. } => "recentering_approx_failure",
            ConstructionSpec::BinarySearchApproxFailure { .. } => "binary_search_approx_failure",
            ConstructionSpec::ShellExactCounterexample { .. } => "shell_exact_counterexample",
        }
    }

    /// Re-checks the regime constraints a deserialized sidecar claims to
    /// satisfy. Tolerances are loose enough to absorb libm differences across
    /// platforms but tight enough to catch edited numbers.
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| -> Result<()> {
            Err(Error::InvalidConfig(format!(
                "construction spec ({}): {reason}",
                self.kind()
            )))
        };
        match self {
            ConstructionSpec::RecenteringWorstcase {
                k,
                q_norm,
                dim,
                z,
                residual,
                expected_calls,
            } => {
                if *k < 3 {
                    return fail(format!("k must be at least 3, got {k}"));
                }
                if *dim == 0 {
                    return fail("dim must be at least 1".into());
                }
                if !(*q_norm > 0.0 && *q_norm < 1.0) {
                    return fail(format!("q_norm out of (0, 1): {q_norm}"));
                }
                if !(*z > 0.0 && q_norm + z < 1.0) {
                    return fail(format!("offset z = {z} leaves the unit ball"));
                }
                if *expected_calls != (*k as u64) + 1 {
                    return fail(format!("expected_calls must be k+1, got {expected_calls}"));
                }
                let floor = 1.0 - 0.5f64.powi(*k as i32);
                if q_norm - z * (1.0 + 1e-6) < floor {
                    return fail(format!("mirrored point drops below 1 − 2^−{k}"));
                }
                let q = PoincarePoint::new(vec![*q_norm])?;
                let outer = PoincarePoint::new(vec![q_norm + z])?;
                let again = (hyperbolic_distance(&q, &outer) - distance_to_origin(&q)).abs();
                if (again - residual).abs() > 1e-12 * (1.0 + residual.abs()) {
                    return fail(format!(
                        "stored residual {residual:e} does not match recomputation {again:e}"
                    ));
                }
                Ok(())
            }
            ConstructionSpec::RlRatio {
                s,
                delta,
                gamma,
                ratio_lower_bound,
                measured_ratio,
            } => {
                if !(s.is_finite() && *s > 1.0) {
                    return fail(format!("s must be a finite real > 1, got {s}"));
                }
                if !(*delta > 0.0 && *delta < 1.0) {
                    return fail(format!("δ out of (0, 1): {delta}"));
                }
                let expected = delta.powf(s + 0.5);
                if (gamma - expected).abs() > 1e-12 * expected {
                    return fail(format!("γ = {gamma:e} is not δ^(s+1/2) = {expected:e}"));
                }
                if !(delta.powf(s + 1.0) < *gamma && *gamma < delta.powf(*s)) {
                    return fail(format!("γ = {gamma:e} outside (δ^(s+1), δ^s)"));
                }
                if *ratio_lower_bound != (s - 1.0) / 2.0 {
                    return fail(format!(
                        "ratio_lower_bound must be (s−1)/2, got {ratio_lower_bound}"
                    ));
                }
                if !(*measured_ratio >= ratio_lower_bound - 1.0) {
                    return fail(format!(
                        "measured ratio {measured_ratio} below the slacked bound {}",
                        ratio_lower_bound - 1.0
                    ));
                }
                Ok(())
            }
            ConstructionSpec::RecenteringApproxFailure {
                epsilon,
                delta,
                gamma,
                wrong_id,
                true_id,
                measured_ratio,
            } => {
                if !(epsilon.is_finite() && *epsilon > 0.0) {
                    return fail(format!("ε must be a finite real > 0, got {epsilon}"));
                }
                if !(*delta > 0.0
                    && *delta < epsilon / 6.0
                    && *delta < epsilon / (4.0 + 3.0 * epsilon)
                    && *delta <= 0.05)
                {
                    return fail(format!(
                        "δ = {delta} violates the sufficient-condition bounds"
                    ));
                }
                let expected = delta.powf(6.5).max(1e-15);
                if (gamma - expected).abs() > 1e-12 * expected {
                    return fail(format!(
                        "γ = {gamma:e} does not follow the γ rule ({expected:e})"
                    ));
                }
                if wrong_id == true_id {
                    return fail("wrong_id and true_id coincide".into());
                }
                if !(*measured_ratio > 1.0) {
                    return fail(format!("measured ratio {measured_ratio} not above 1"));
                }
                Ok(())
            }
            ConstructionSpec::BinarySearchApproxFailure {
                epsilon,
                s,
                delta,
                gamma,
                c,
                wrong_id,
                true_id,
                measured_ratio,
                first_probe_radius,
            } => {
                if !(epsilon.is_finite() && *epsilon > 0.0) {
                    return fail(format!("ε must be a finite real > 0, got {epsilon}"));
                }
                if !(s.is_finite() && *s > 0.0) {
                    return fail(format!("s must be a finite real > 0, got {s}"));
                }
                if !(*c > 1.0 && c.is_finite()) {
                    return fail(format!("c must be a finite real > 1, got {c}"));
                }
                if !(*delta > 0.0 && *delta < epsilon / 6.0) {
                    return fail(format!("δ = {delta} must sit strictly below ε/6"));
                }
                if 4.0 / (0.49 * s.sqrt()).exp() > delta * delta / 8.0 {
                    return fail(format!("budget s = {s} too small for δ = {delta}"));
                }
                let expected = delta.powf(6.5).max(1e-15);
                if (gamma - expected).abs() > 1e-12 * expected {
                    return fail(format!(
                        "γ = {gamma:e} does not follow the γ rule ({expected:e})"
                    ));
                }
                if wrong_id == true_id {
                    return fail("wrong_id and true_id coincide".into());
                }
                if !(*measured_ratio > 1.0 && *first_probe_radius > 0.0) {
                    return fail("degenerate ratio or probe radius".into());
                }
                Ok(())
            }
            ConstructionSpec::ShellExactCounterexample {
                width,
                wrong_id,
                true_id,
                stated_hyper_dist_to_true,
                stated_hyper_dist_to_wrong,
                stated_euclid_dist_to_wrong,
                stated_euclid_dist_to_true,
                stated_inv_gap_true,
                stated_inv_gap_wrong,
            } => {
                if *width != 3.0 {
                    return fail(format!("the fixed instance uses width 3, got {width}"));
                }
                if wrong_id == true_id {
                    return fail("wrong_id and true_id coincide".into());
                }
                let figures = [
                    stated_hyper_dist_to_true,
                    stated_hyper_dist_to_wrong,
                    stated_euclid_dist_to_wrong,
                    stated_euclid_dist_to_true,
                    stated_inv_gap_true,
                    stated_inv_gap_wrong,
                ];
                if figures.iter().any(|f| !(f.is_finite() && **f > 0.0)) {
                    return fail("stated figures must be positive and finite".into());
                }
                Ok(())
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Worst-case layout for the recentering walk
// ---------------------------------------------------------------------------

/// A dataset of `k` collinear points on which the recentering walk, run with
/// an exact oracle, spends exactly `k + 1` oracle calls: the Euclidean
/// nearest neighbor is the hyperbolically *farthest* point, and each probe
/// ball pulls the next oracle call one filler point further along the axis.
#[derive(Debug, Clone)]
pub struct RecenteringWorstcase {
    pub data: Arc<Dataset>,
    pub query: PoincarePoint,
    pub expected_calls: u64,
    pub k: usize,
    pub q_norm: f64,
    /// Offset of the outer point: the dataset stores the coordinate `q_norm + z`.
    pub z: f64,
    /// Achieved |d(q, q+z) − d(0, q)| for the stored coordinates. The solve
    /// runs to float adjacency, so this is the representation floor — roughly
    /// `1e-16 / (1 − q_norm)²` — not a fixed tolerance.
    pub residual: f64,
}

impl RecenteringWorstcase {
    pub fn spec(&self) -> ConstructionSpec {
        ConstructionSpec::RecenteringWorstcase {
            k: self.k,
            q_norm: self.q_norm,
            dim: self.data.dim(),
            z: self.z,
            residual: self.residual,
            expected_calls: self.expected_calls,
        }
    }
}

/// Builds the `k`-point worst case for the recentering walk, embedded on the
/// last axis of a `dim`-dimensional ball.
///
/// The layout is: an outer point at `q_norm + z` with `z` solved so that its
/// distance from the query equals the query's distance to the origin (making
/// the first probe ball reach all the way back to the origin), a mirrored
/// point just below `q_norm − z` (the true nearest neighbor, found last), and
/// `k − 2` fillers at 1 − 2⁻ⁱ. The mirrored point is widened by a relative
/// 1e−6 so the Euclidean tie between the two is strict in floating point.
///
/// Feasibility requires the mirrored point to stay at or above 1 − 2⁻ᵏ,
/// which forces `q_norm` within roughly 2⁻⁽ᵏ⁺¹⁾ of 1; the generator verifies
/// this and the strict Euclidean/hyperbolic orderings before returning.
pub fn gen_recentering_worstcase(
    k: usize,
    q_norm: f64,
    dim: usize,
) -> Result<RecenteringWorstcase> {
    if k < 3 {
        return Err(Error::InvalidParameter {
            name: "k",
            reason: format!("must be at least 3, got {k}"),
        });
    }
    if !(q_norm > 0.0 && q_norm < 1.0) {
        return Err(Error::InvalidParameter {
            name: "q_norm",
            reason: format!("must lie strictly between 0 and 1, got {q_norm}"),
        });
    }
    if dim == 0 {
        return Err(Error::InvalidParameter {
            name: "dim",
            reason: "must be at least 1".into(),
        });
    }

    let q_line = PoincarePoint::new(vec![q_norm])?;
    let d0 = distance_to_origin(&q_line);
    // d(q, q+z) − d(0, q), monotone increasing in z; +∞ stands in for offsets
    // whose coordinate rounds onto the unit sphere.
    let f = |z: f64| match PoincarePoint::new(vec![q_norm + z]) {
        Ok(p) => hyperbolic_distance(&q_line, &p) - d0,
        Err(_) => f64::INFINITY,
    };
    // Largest offset whose coordinate is still strictly inside the ball.
    let hi_z = (1.0 - f64::EPSILON / 2.0) - q_norm;
    if !(f(hi_z) > 0.0) {
        return Err(Error::Infeasible(format!(
            "q_norm = {q_norm} sits so close to the boundary that no representable \
             coordinate above it is as far from the query as the origin"
        )));
    }
    let z_root = bisect(0.0, hi_z, 0.0, f);
    // Round through the stored coordinate so `q_norm + z` reproduces it exactly.
    let outer_y = q_norm + z_root;
    let z = outer_y - q_norm;
    let outer_line = PoincarePoint::new(vec![outer_y])?;
    let residual = (hyperbolic_distance(&q_line, &outer_line) - d0).abs();
    if residual > 0.1 {
        return Err(Error::Infeasible(format!(
            "q_norm = {q_norm}: the best representable offset misses the target \
             distance by {residual:.3e}, enough to change the walk"
        )));
    }

    let inner_y = q_norm - z * (1.0 + 1e-6);
    let floor = 1.0 - 0.5f64.powi(k as i32);
    if inner_y < floor {
        return Err(Error::Infeasible(format!(
            "k = {k} needs the mirrored point at coordinate ≥ 1 − 2^−{k} = {floor}, \
             but q_norm = {q_norm} puts it at {inner_y}"
        )));
    }

    let mut ids = Vec::with_capacity(k);
    let mut points = Vec::with_capacity(k);
    ids.push(0);
    points.push(radial_point(dim, outer_y)?);
    ids.push(1);
    points.push(radial_point(dim, inner_y)?);
    for i in 1..=(k - 2) {
        ids.push((i + 1) as u64);
        points.push(radial_point(dim, 1.0 - 0.5f64.powi(i as i32))?);
    }
    let data = Dataset::new(dim, ids, points)?;
    let query = radial_point(dim, q_norm)?;

    // Premise checks on the stored artifact: the outer point must be the
    // strict Euclidean nearest neighbor yet hyperbolically last, and the
    // mirrored point the strict hyperbolic nearest.
    let mut by_euclid: Vec<(f64, usize)> = (0..data.len())
        .map(|pos| (euclid(&query, data.point(pos)), pos))
        .collect();
    by_euclid.sort_by(|a, b| a.0.total_cmp(&b.0));
    if by_euclid[0].1 != 0 || by_euclid[1].0 <= by_euclid[0].0 * (1.0 + 1e-9) {
        return Err(Error::Infeasible(format!(
            "k = {k}, q_norm = {q_norm}: the outer point is not the strict Euclidean \
             nearest neighbor of the query"
        )));
    }
    let mut by_hyper: Vec<(f64, usize)> = (0..data.len())
        .map(|pos| (hyperbolic_distance(&query, data.point(pos)), pos))
        .collect();
    by_hyper.sort_by(|a, b| a.0.total_cmp(&b.0));
    if by_hyper[k - 1].1 != 0 || by_hyper[k - 1].0 <= by_hyper[k - 2].0 + 1e-6 {
        return Err(Error::Infeasible(format!(
            "k = {k}, q_norm = {q_norm}: the outer point does not have hyperbolic rank {k}"
        )));
    }
    if by_hyper[0].1 != 1 || by_hyper[1].0 <= by_hyper[0].0 * (1.0 + 1e-9) {
        return Err(Error::Infeasible(format!(
            "k = {k}, q_norm = {q_norm}: the mirrored point is not the strict \
             hyperbolic nearest neighbor"
        )));
    }

    Ok(RecenteringWorstcase {
        data: Arc::new(data),
        query,
        expected_calls: (k as u64) + 1,
        k,
        q_norm,
        z,
        residual,
    })
}

// ---------------------------------------------------------------------------
// Unbounded Euclidean-vs-hyperbolic distance ratio
// ---------------------------------------------------------------------------

/// Two radial points whose Euclidean and hyperbolic nearest-neighbor answers
/// disagree, with the hyperbolic distance to the Euclidean answer at least
/// `(s−1)/2 − 1` times the true nearest distance.
#[derive(Debug, Clone)]
pub struct RlRatioInstance {
    pub data: Arc<Dataset>,
    pub query: PoincarePoint,
    /// Id 0: nearer in the Euclidean metric, almost on the boundary.
    pub euclidean_nearest: PoincarePoint,
    /// Id 1: the true hyperbolic nearest neighbor.
    pub hyperbolic_nearest: PoincarePoint,
    pub ratio_lower_bound: f64,
    pub measured_ratio: f64,
    pub s: f64,
    pub delta: f64,
    pub gamma: f64,
}

impl RlRatioInstance {
    pub fn spec(&self) -> ConstructionSpec {
        ConstructionSpec::RlRatio {
            s: self.s,
            delta: self.delta,
            gamma: self.gamma,
            ratio_lower_bound: self.ratio_lower_bound,
            measured_ratio: self.measured_ratio,
        }
    }
}

/// Places the query midway between a point at height 1 − δ and one at height
/// 1 − γ with γ = δ^(s+1/2), so the Euclidean metric cannot tell them apart
/// while the hyperbolic distance to the outer point grows like s·ln(1/δ)/2.
///
/// The outer point is pulled inward by a relative 1e−12 of the separation so
/// the Euclidean comparison is strict in floating point instead of an exact
/// tie; the shift is orders of magnitude below every quantity the instance
/// is measured by.
pub fn gen_rl_ratio_instance(s: f64, delta: f64) -> Result<RlRatioInstance> {
    if !(s.is_finite() && s > 1.0) {
        return Err(Error::InvalidParameter {
            name: "s",
            reason: format!("must be a finite real greater than 1, got {s}"),
        });
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter {
            name: "delta",
            reason: format!("must lie strictly between 0 and 1, got {delta}"),
        });
    }
    let gamma = delta.powf(s + 0.5);
    if !(gamma.is_finite() && delta.powf(s + 1.0) < gamma && gamma < delta.powf(s)) {
        return Err(Error::Infeasible(format!(
            "δ = {delta}, s = {s}: γ = δ^(s+1/2) = {gamma:e} does not sit strictly \
             inside (δ^(s+1), δ^s) in double precision"
        )));
    }
    let ds = delta.powf(s);
    if (delta - 2.0 * ds) / (delta + ds) < 0.5 {
        return Err(Error::Infeasible(format!(
            "δ = {delta}, s = {s}: separation ratio (δ − 2δ^s)/(δ + δ^s) falls below 1/2"
        )));
    }
    let far_y = 1.0 - gamma;
    if !(far_y < 1.0) {
        return Err(Error::Infeasible(format!(
            "γ = {gamma:e} is below the resolution of the coordinate grid near 1; \
             the outer point would land on the boundary"
        )));
    }
    let near_y = 1.0 - delta;
    let q_y = 1.0 - 0.5 * (gamma + delta);
    let nudge = 0.5 * (delta - gamma) * 1e-12;
    let n_e = radial_point(2, far_y - nudge)?;
    let n_h = radial_point(2, near_y)?;
    let query = radial_point(2, q_y)?;

    let to_ne = euclid(&query, &n_e);
    let to_nh = euclid(&query, &n_h);
    if !(to_ne < to_nh) {
        return Err(Error::Infeasible(format!(
            "δ = {delta}, γ = {gamma:e}: tie-break shift too small to order the \
             Euclidean distances"
        )));
    }
    let d_ne = hyperbolic_distance(&query, &n_e);
    let d_nh = hyperbolic_distance(&query, &n_h);
    if !(d_nh < d_ne && d_nh > 0.0) {
        return Err(Error::Infeasible(format!(
            "δ = {delta}, γ = {gamma:e}: hyperbolic distances did not separate"
        )));
    }
    let ratio_lower_bound = (s - 1.0) / 2.0;
    let measured_ratio = d_ne / d_nh;
    if !(measured_ratio >= ratio_lower_bound - 1.0) {
        return Err(Error::Infeasible(format!(
            "measured ratio {measured_ratio:.3} fell below the advertised \
             (s−1)/2 − 1 = {:.3}",
            ratio_lower_bound - 1.0
        )));
    }
    let data = Dataset::new(2, vec![0, 1], vec![n_e.clone(), n_h.clone()])?;
    Ok(RlRatioInstance {
        data: Arc::new(data),
        query,
        euclidean_nearest: n_e,
        hyperbolic_nearest: n_h,
        ratio_lower_bound,
        measured_ratio,
        s,
        delta,
        gamma,
    })
}

// ---------------------------------------------------------------------------
// Misdirection of recentering / binary search by a (1+ε) oracle
// ---------------------------------------------------------------------------

struct MisdirectionLayout {
    query: PoincarePoint,
    far: PoincarePoint,
    near: PoincarePoint,
}

/// Query midway between a near point at 1 − δ and a far point at 1 − γ. The
/// near point is raised toward the query by a relative 1e−9 of the separation
/// so it is the strict Euclidean nearest neighbor, leaving the far point just
/// inside the (1+ε) legality window of a worst-case approximate oracle.
fn misdirection_layout(delta: f64, gamma: f64) -> Result<MisdirectionLayout> {
    let far_y = 1.0 - gamma;
    let base_y = 1.0 - delta;
    let q_y = 0.5 * (far_y + base_y);
    let r = q_y - base_y;
    let near_y = base_y + r * 1e-9;
    Ok(MisdirectionLayout {
        query: radial_point(2, q_y)?,
        far: radial_point(2, far_y)?,
        near: radial_point(2, near_y)?,
    })
}

/// From a probe point at height `c_y` below both points: the near point must
/// be the honest nearest answer, yet the far point must stay Euclidean-legal
/// for an oracle allowed ε slack. Margins of 1e−12 and 1e−9 keep both sides
/// strict under floating-point evaluation.
fn misdirection_holds(c_y: f64, near_y: f64, far_y: f64, epsilon: f64) -> bool {
    let to_near = near_y - c_y;
    let to_far = far_y - c_y;
    near_y > c_y
        && to_far >= to_near * (1.0 + 1e-12)
        && to_near * (1.0 + epsilon) >= to_far * (1.0 + 1e-9)
}

/// Same legality check at the query itself, where the near point sits below
/// and the far point above.
fn misdirection_holds_at_query(q_y: f64, near_y: f64, far_y: f64, epsilon: f64) -> bool {
    let to_near = q_y - near_y;
    let to_far = far_y - q_y;
    to_near > 0.0
        && to_far >= to_near * (1.0 + 1e-12)
        && to_near * (1.0 + epsilon) >= to_far * (1.0 + 1e-9)
}

/// A two-point instance on which recentering search backed by a worst-case
/// (1+ε)-approximate oracle returns the far point — every probe the walk
/// makes leaves the far point inside the oracle's legality window — while an
/// exact oracle on the same instance returns the true neighbor.
#[derive(Debug, Clone)]
pub struct RecenteringApproxFailure {
    pub data: Arc<Dataset>,
    pub query: PoincarePoint,
    pub epsilon: f64,
    pub delta: f64,
    pub gamma: f64,
    pub wrong_id: u64,
    pub true_id: u64,
    /// d(q, far) / d(q, near): the error factor the misdirected run incurs.
    pub measured_ratio: f64,
}

impl RecenteringApproxFailure {
    pub fn spec(&self) -> ConstructionSpec {
        ConstructionSpec::RecenteringApproxFailure {
            epsilon: self.epsilon,
            delta: self.delta,
            gamma: self.gamma,
            wrong_id: self.wrong_id,
            true_id: self.true_id,
            measured_ratio: self.measured_ratio,
        }
    }
}

/// Builds a misdirection instance for the recentering walk at slack `epsilon`.
///
/// δ starts at 0.9·min(ε/6, ε/(4+3ε), 0.05) and γ = max(δ^6.5, 1e−15); if the
/// legality margins fail to verify, δ halves and the attempt repeats a bounded
/// number of times before giving up. The returned instance has been checked at
/// both oracle positions the walk will visit: the query, and the Euclidean
/// center of the ball B(q, d(q, far)) that the first answer induces.
pub fn gen_recentering_approx_failure(epsilon: f64) -> Result<RecenteringApproxFailure> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            reason: format!("must be a finite real greater than 0, got {epsilon}"),
        });
    }
    let mut delta = 0.9
        * (epsilon / 6.0)
            .min(epsilon / (4.0 + 3.0 * epsilon))
            .min(0.05);
    for _ in 0..60 {
        let gamma = delta.powf(6.5).max(1e-15);
        if gamma < delta {
            let lay = misdirection_layout(delta, gamma)?;
            let q_y = lay.query.coords()[1];
            let near_y = lay.near.coords()[1];
            let far_y = lay.far.coords()[1];
            let d_far = hyperbolic_distance(&lay.query, &lay.far);
            let d_near = hyperbolic_distance(&lay.query, &lay.near);
            let ball = euclidean_center_of_hyperbolic_ball(&lay.query, d_far);
            if misdirection_holds_at_query(q_y, near_y, far_y, epsilon)
                && misdirection_holds(ball.center[1], near_y, far_y, epsilon)
                && d_near > 0.0
                && d_far / d_near > 1.0
            {
                let data = Dataset::new(2, vec![0, 1], vec![lay.far, lay.near])?;
                return Ok(RecenteringApproxFailure {
                    data: Arc::new(data),
                    query: lay.query,
                    epsilon,
                    delta,
                    gamma,
                    wrong_id: 0,
                    true_id: 1,
                    measured_ratio: d_far / d_near,
                });
            }
        }
        delta *= 0.5;
    }
    Err(Error::Infeasible(format!(
        "no (δ, γ) pair passed the misdirection checks for ε = {epsilon}"
    )))
}

/// A two-point instance on which the ratio binary search backed by a
/// worst-case (1+ε)-approximate oracle never improves on its first answer:
/// the far point stays legal at every probe ball the bound-shrinking loop
/// visits, so the search returns it even though the true neighbor is closer
/// by the `measured_ratio` factor.
#[derive(Debug, Clone)]
pub struct BinarySearchApproxFailure {
    pub data: Arc<Dataset>,
    pub query: PoincarePoint,
    pub epsilon: f64,
    /// The sampling budget the sufficient condition 4·e^(−0.49√s) ≤ δ²/8 was
    /// verified against. The realized ratio is `measured_ratio`, which double
    /// precision caps far below large requested budgets.
    pub s: f64,
    pub delta: f64,
    pub gamma: f64,
    pub c: f64,
    pub wrong_id: u64,
    pub true_id: u64,
    /// d(q, far) / d(q, near), which also matches the initial upper/lower
    /// bound ratio of the misdirected run to ~9 digits.
    pub measured_ratio: f64,
    /// Radius √(R·L) of the first probe ball the search will test.
    pub first_probe_radius: f64,
}

impl BinarySearchApproxFailure {
    pub fn spec(&self) -> ConstructionSpec {
        ConstructionSpec::BinarySearchApproxFailure {
            epsilon: self.epsilon,
            s: self.s,
            delta: self.delta,
            gamma: self.gamma,
            c: self.c,
            wrong_id: self.wrong_id,
            true_id: self.true_id,
            measured_ratio: self.measured_ratio,
            first_probe_radius: self.first_probe_radius,
        }
    }
}

/// Radial coordinates of the two boundary points of the hyperbolic ball with
/// radial center height `center_y` ≥ 0 and radius `radius`: the closed forms
///
///   t₁ = (y·cosh(D/2) − sinh(D/2)) / (cosh(D/2) − y·sinh(D/2))
///   t₂ = (y·cosh(D/2) + sinh(D/2)) / (cosh(D/2) + y·sinh(D/2))
///
/// (t₁ may be negative: the ball then wraps around the origin). Both satisfy
/// d((0,…,y), (0,…,tᵢ)) = radius, and the ball's Euclidean center and radius
/// are their midpoint and half-spread. Kept separate from the ball-conversion
/// code so tests can cross-check the two derivations against each other.
pub fn radial_ball_edge_scalars(center_y: f64, radius: f64) -> (f64, f64) {
    let sh = (radius / 2.0).sinh();
    let ch = (radius / 2.0).cosh();
    let t1 = (center_y * ch - sh) / (ch - center_y * sh);
    let t2 = (center_y * ch + sh) / (ch + center_y * sh);
    (t1, t2)
}

/// Radial coordinates at hyperbolic distance `d` from `q` (a radial point),
/// found by bisection on each side of the query — deliberately independent
/// of the closed forms in `radial_ball_edge_scalars`.
fn bisected_radial_edges(q: &PoincarePoint, d: f64) -> (f64, f64) {
    let q_y = q.coords()[1];
    let f = |t: f64| match radial_point(2, t) {
        Ok(p) => hyperbolic_distance(q, &p) - d,
        Err(_) => f64::INFINITY,
    };
    let edge = 1.0 - f64::EPSILON / 2.0;
    (bisect(-edge, q_y, 0.0, f), bisect(q_y, edge, 0.0, f))
}

/// Builds a misdirection instance for the ratio binary search (fixed c = 2)
/// at slack `epsilon`, validated against sampling budget `s`.
///
/// Verifies the two sufficient conditions δ < ε/6 and 4·e^(−0.49√s) ≤ δ²/8,
/// then replicates the search's own initial bounds — R from the adversarial
/// first answer, L from shrinking the query toward the origin by that answer's
/// Euclidean distance — and checks oracle legality of the far point at the
/// query and at the center of the first probe ball B(q, √(R·L)). Probe
/// centers only drop toward the origin in later rounds, which widens the
/// legality margin, so the first round is the binding one.
pub fn gen_binary_search_approx_failure(epsilon: f64, s: f64) -> Result<BinarySearchApproxFailure> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            reason: format!("must be a finite real greater than 0, got {epsilon}"),
        });
    }
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::InvalidParameter {
            name: "s",
            reason: format!("must be a finite real greater than 0, got {s}"),
        });
    }
    let c = 2.0;
    let mut delta = 0.9 * (epsilon / 6.0).min(0.1);
    for _ in 0..60 {
        // Shrinking δ only makes this harder, so a failure here is final.
        if 4.0 / (0.49 * s.sqrt()).exp() > delta * delta / 8.0 {
            return Err(Error::Infeasible(format!(
                "sampling budget s = {s} too small for ε = {epsilon}: the condition \
                 4·e^(−0.49·√s) ≤ δ²/8 fails at δ = {delta}"
            )));
        }
        let gamma = delta.powf(6.5).max(1e-15);
        if gamma < delta {
            let lay = misdirection_layout(delta, gamma)?;
            let q_y = lay.query.coords()[1];
            let near_y = lay.near.coords()[1];
            let far_y = lay.far.coords()[1];
            let d_far = hyperbolic_distance(&lay.query, &lay.far);
            let d_near = hyperbolic_distance(&lay.query, &lay.near);

            // Initial bounds exactly as the search derives them from the
            // adversarial first answer.
            let de = euclid(&lay.query, &lay.far);
            let t = 1.0 - de / lay.query.norm();
            let scaled: Vec<f64> = lay.query.coords().iter().map(|x| t * x).collect();
            let lower = match PoincarePoint::new(scaled) {
                Ok(p) => hyperbolic_distance(&lay.query, &p).min(d_far),
                Err(_) => d_far,
            };
            if misdirection_holds_at_query(q_y, near_y, far_y, epsilon)
                && d_near > 0.0
                && lower > 0.0
                && d_far > c * lower
            {
                let mid = (d_far * lower).sqrt();
                let ball = euclidean_center_of_hyperbolic_ball(&lay.query, mid);
                let (t1, t2) = bisected_radial_edges(&lay.query, mid);
                let center_consistent = (0.5 * (t1 + t2) - ball.center[1]).abs() <= 1e-9;
                if center_consistent && misdirection_holds(ball.center[1], near_y, far_y, epsilon) {
                    let data = Dataset::new(2, vec![0, 1], vec![lay.far, lay.near])?;
                    return Ok(BinarySearchApproxFailure {
                        data: Arc::new(data),
                        query: lay.query,
                        epsilon,
                        s,
                        delta,
                        gamma,
                        c,
                        wrong_id: 0,
                        true_id: 1,
                        measured_ratio: d_far / d_near,
                        first_probe_radius: mid,
                    });
                }
            }
        }
        delta *= 0.5;
    }
    Err(Error::Infeasible(format!(
        "no (δ, γ) pair passed the misdirection checks for ε = {epsilon}, s = {s}"
    )))
}

// ---------------------------------------------------------------------------
// Fixed counterexample for exact-backed shell search
// ---------------------------------------------------------------------------

/// The headline figures this configuration is conventionally described by.
/// They are recorded as *claims* for the test suite to measure against, not
/// as outputs of this crate: measurement agrees with five of them, but
/// `hyper_dist_to_wrong` comes out near 4.1947, not 4.384.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CounterexampleFigures {
    /// d(q, (0, 0.5)) — the true nearest distance, about 4.19.
    pub hyper_dist_to_true: f64,
    /// d(q, (0.15, 0.55)) as conventionally stated: 4.384.
    pub hyper_dist_to_wrong: f64,
    /// ‖q − (0.15, 0.55)‖ ≈ 0.464.
    pub euclid_dist_to_wrong: f64,
    /// ‖q − (0, 0.5)‖ = 0.49.
    pub euclid_dist_to_true: f64,
    /// 1/(1 − 0.5²) = 4/3.
    pub inv_gap_true: f64,
    /// 1/(1 − 0.325) ≈ 1.48.
    pub inv_gap_wrong: f64,
}

/// The fixed two-point instance on which shell search with an *exact* backing
/// oracle still returns the wrong neighbor: both points share band 1 at
/// width 3, so the band probe reports the Euclidean nearest of the band,
/// and (0.15, 0.55) beats (0, 0.5) in the Euclidean metric while losing in
/// the hyperbolic one.
#[derive(Debug, Clone)]
pub struct ShellCounterexample {
    pub data: Arc<Dataset>,
    pub query: PoincarePoint,
    pub width: f64,
    /// Id of (0.15, 0.55), the point shell search returns.
    pub wrong_id: u64,
    /// Id of (0, 0.5), the true hyperbolic nearest neighbor.
    pub true_id: u64,
    pub stated: CounterexampleFigures,
}

impl ShellCounterexample {
    pub fn spec(&self) -> ConstructionSpec {
        ConstructionSpec::ShellExactCounterexample {
            width: self.width,
            wrong_id: self.wrong_id,
            true_id: self.true_id,
            stated_hyper_dist_to_true: self.stated.hyper_dist_to_true,
            stated_hyper_dist_to_wrong: self.stated.hyper_dist_to_wrong,
            stated_euclid_dist_to_wrong: self.stated.euclid_dist_to_wrong,
            stated_euclid_dist_to_true: self.stated.euclid_dist_to_true,
            stated_inv_gap_true: self.stated.inv_gap_true,
            stated_inv_gap_wrong: self.stated.inv_gap_wrong,
        }
    }
}

/// The fixed shell-search counterexample: query (0, 0.99), points (0, 0.5)
/// and (0.15, 0.55), width 3.
pub fn shell_exact_counterexample() -> ShellCounterexample {
    let true_pt = PoincarePoint::new(vec![0.0, 0.5]).expect("fixed coordinates are valid");
    let wrong_pt = PoincarePoint::new(vec![0.15, 0.55]).expect("fixed coordinates are valid");
    let query = PoincarePoint::new(vec![0.0, 0.99]).expect("fixed coordinates are valid");
    let data =
        Dataset::new(2, vec![0, 1], vec![true_pt, wrong_pt]).expect("two points, distinct ids");
    ShellCounterexample {
        data: Arc::new(data),
        query,
        width: 3.0,
        wrong_id: 1,
        true_id: 0,
        stated: CounterexampleFigures {
            hyper_dist_to_true: 4.19,
            hyper_dist_to_wrong: 4.384,
            euclid_dist_to_wrong: 0.464,
            euclid_dist_to_true: 0.49,
            inv_gap_true: 1.33,
            inv_gap_wrong: 1.48,
        },
    }
}
