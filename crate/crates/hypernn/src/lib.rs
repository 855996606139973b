//! Nearest-neighbor search for points embedded in the Poincaré ball model of
//! hyperbolic space.
//!
//! Hyperbolic embeddings put most of their mass within a whisker of the unit
//! sphere, where Euclidean and hyperbolic nearest neighbors disagree badly —
//! yet decades of engineering went into *Euclidean* indexes. This crate keeps
//! those indexes as black boxes and drives them with geometry instead:
//!
//! * [`search::recentering_nn`] — exact hyperbolic NN through any exact
//!   Euclidean oracle, by repeatedly re-centering the candidate ball.
//! * [`search::binary_search_nn`] — c-approximate NN with logarithmically many
//!   oracle calls, bisecting the candidate radius in log-space.
//! * [`search::shell_nn`] — √w·(1+ε)-approximate NN over an annulus-sharded
//!   dataset, probing only bands the candidate ball can reach; a randomized
//!   variant touches O(ln N) bands in expectation.
//!
//! Backends ([`oracle`]) include brute force, a kd-tree, and multiprobe
//! random-hyperplane LSH; [`adversarial`] generates the worst-case instances
//! these algorithms are provably vulnerable to, and [`eval`] is a budgeted
//! recall/ratio benchmark harness with a CLI front end.

// Validation guards are written `!(x > 0.0)`-style throughout: NaN fails every
// ordered comparison, so the negated form routes NaN into the rejecting branch
// that the "equivalent" `x <= 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adversarial;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod geometry;
mod numeric;
pub mod oracle;
pub mod search;

pub use dataset::Dataset;
pub use error::{Error, Result};
pub use geometry::PoincarePoint;
