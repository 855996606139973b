//! Small floating-point helpers shared across the crate.
//!
//! Points near the unit sphere are the normal case for hyperbolic embeddings,
//! so the quantity 1−‖x‖² is computed once per point with a compensated sum
//! and carried around instead of being rederived from a rounded ‖x‖².

/// Error-free transform: returns `(s, e)` with `s = fl(a+b)` and `a+b = s+e` exactly.
#[inline]
pub(crate) fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

/// 1 − ‖x‖², accurate even when ‖x‖ is within a few ulps of 1.
///
/// The squares are accumulated with a Neumaier sum whose error terms include the
/// `fma`-captured low halves of each square, and the final subtraction from 1 is
/// exact by Sterbenz whenever the sum lands in [0.5, 2].
pub(crate) fn one_minus_sq_norm(coords: &[f64]) -> f64 {
    if let [x] = coords {
        // One dimension: (1−x)(1+x) is exact-in, exact-out apart from one rounding.
        return (1.0 - x) * (1.0 + x);
    }
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &x in coords {
        let sq = x * x;
        let sq_err = f64::mul_add(x, x, -sq);
        let (s, e) = two_sum(sum, sq);
        sum = s;
        comp += e + sq_err;
    }
    // sum + comp ≈ ‖x‖² with the rounding errors held separately; subtracting the
    // high part from 1 first keeps the cancellation exact near the boundary.
    (1.0 - sum) - comp
}

/// arccosh(1 + u) for u ≥ 0, stable for small u.
///
/// Equivalent to ln(z + √(z²−1)) at z = 1+u, but `ln_1p` avoids the total loss of
/// precision the direct form suffers when z ≈ 1 (i.e. near-coincident points).
#[inline]
pub(crate) fn acosh1p(u: f64) -> f64 {
    debug_assert!(u >= 0.0);
    (u + (u * (u + 2.0)).sqrt()).ln_1p()
}

/// Squared Euclidean distance.
#[inline]
pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Tolerance comparison used for every "are these two hyperbolic distances the
/// same" decision in the search loops: |a−b| ≤ 1e−12·(1+a).
#[inline]
pub(crate) fn distances_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * (1.0 + a)
}

/// Bisection root-finder for monotone 1-d functions, used by the instance
/// generators where robustness matters more than iteration count.
///
/// Requires f(lo) and f(hi) to bracket a root (opposite signs); runs until the
/// interval is below `tol` or 200 iterations.
pub(crate) fn bisect(mut lo: f64, mut hi: f64, tol: f64, f: impl Fn(f64) -> f64) -> f64 {
    let flo = f(lo);
    debug_assert!(
        flo.signum() != f(hi).signum(),
        "bisect: endpoints do not bracket a root"
    );
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi || hi - lo < tol {
            break;
        }
        if f(mid).signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
