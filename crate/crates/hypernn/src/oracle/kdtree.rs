//! Exact Euclidean k-d tree.
//!
//! Median splits on the widest-spread axis, leaves of up to 16 points, and
//! strictly-greater pruning so that any point tying the current best distance
//! is still visited. Together with (distance², id) candidate ordering this
//! makes the tree agree *bit for bit* with the brute-force scan, duplicate
//! points and boundary ties included.

use std::collections::BinaryHeap;
use std::sync::Arc;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::geometry::{hyperbolic_distance, PoincarePoint};
use crate::numeric::dist_sq;

use super::OracleStats;

const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone)]
pub(super) enum Node {
    Split {
        axis: u32,
        value: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        start: u32,
        len: u32,
    },
}

/// A built tree over an immutable dataset snapshot.
#[derive(Debug, Clone)]
pub struct KdIndex {
    data: Arc<Dataset>,
    pub(super) nodes: Vec<Node>,
    pub(super) items: Vec<u32>,
    pub(super) root: u32,
}

/// Result of a traversal that also tracked hyperbolic distances to a
/// reference point over everything it examined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackedNearest {
    /// Exact Euclidean nearest neighbor id and distance.
    pub id: u64,
    pub dist: f64,
    /// Best hyperbolic distance to the reference seen among examined points.
    pub hyper_id: u64,
    pub hyper_dist: f64,
}

pub fn kdtree_build(data: Arc<Dataset>) -> KdIndex {
    let n = data.len();
    let mut items: Vec<u32> = (0..n as u32).collect();
    let mut nodes = Vec::new();
    let root = if n == 0 {
        nodes.push(Node::Leaf { start: 0, len: 0 });
        0
    } else {
        build_rec(&data, &mut items, 0, n, &mut nodes)
    };
    KdIndex {
        data,
        nodes,
        items,
        root,
    }
}

/// Builds the subtree over `items[lo..hi]`, returning its node id.
fn build_rec(
    data: &Dataset,
    items: &mut [u32],
    lo: usize,
    hi: usize,
    nodes: &mut Vec<Node>,
) -> u32 {
    let len = hi - lo;
    if len <= LEAF_SIZE {
        nodes.push(Node::Leaf {
            start: lo as u32,
            len: len as u32,
        });
        return (nodes.len() - 1) as u32;
    }

    // Widest spread wins; ties go to the lowest axis so builds are stable.
    let dim = data.dim();
    let mut axis = 0usize;
    let mut best_spread = f64::NEG_INFINITY;
    for a in 0..dim {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &pos in &items[lo..hi] {
            let c = data.point(pos as usize).coords()[a];
            min = min.min(c);
            max = max.max(c);
        }
        let spread = max - min;
        if spread > best_spread {
            best_spread = spread;
            axis = a;
        }
    }

    let mid = len / 2;
    items[lo..hi].select_nth_unstable_by(mid, |&a, &b| {
        let ca = data.point(a as usize).coords()[axis];
        let cb = data.point(b as usize).coords()[axis];
        ca.total_cmp(&cb)
            .then(data.id(a as usize).cmp(&data.id(b as usize)))
    });
    let value = data.point(items[lo + mid] as usize).coords()[axis];

    let left = build_rec(data, items, lo, lo + mid, nodes);
    let right = build_rec(data, items, lo + mid, hi, nodes);
    nodes.push(Node::Split {
        axis: axis as u32,
        value,
        left,
        right,
    });
    (nodes.len() - 1) as u32
}

impl KdIndex {
    pub fn data(&self) -> &Arc<Dataset> {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub(super) fn from_parts(
        data: Arc<Dataset>,
        nodes: Vec<Node>,
        items: Vec<u32>,
        root: u32,
    ) -> Self {
        Self {
            data,
            nodes,
            items,
            root,
        }
    }

    pub(super) fn nearest(&self, q: &[f64], stats: &mut OracleStats) -> Option<(usize, f64)> {
        let mut best: Option<(f64, u64, usize)> = None;
        self.descend(self.root, q, &mut best, stats, &mut NoTrack);
        best.map(|(d2, _, pos)| (pos, d2.sqrt()))
    }

    fn nearest_with_tracking(
        &self,
        q: &[f64],
        reference: &PoincarePoint,
        stats: &mut OracleStats,
    ) -> Option<TrackedNearest> {
        let mut best: Option<(f64, u64, usize)> = None;
        let mut track = HyperTrack {
            reference,
            data: &self.data,
            best: None,
        };
        self.descend(self.root, q, &mut best, stats, &mut track);
        let (d2, id, _) = best?;
        let (hyper_dist, hyper_id) = track.best.expect("tracked every examined point");
        Some(TrackedNearest {
            id,
            dist: d2.sqrt(),
            hyper_id,
            hyper_dist,
        })
    }

    fn descend(
        &self,
        node: u32,
        q: &[f64],
        best: &mut Option<(f64, u64, usize)>,
        stats: &mut OracleStats,
        track: &mut impl Track,
    ) {
        match &self.nodes[node as usize] {
            Node::Leaf { start, len } => {
                for &pos in &self.items[*start as usize..(*start + *len) as usize] {
                    let pos = pos as usize;
                    stats.points_examined += 1;
                    track.examine(pos);
                    let d2 = dist_sq(self.data.point(pos).coords(), q);
                    let id = self.data.id(pos);
                    let better = match best {
                        None => true,
                        Some((bd2, bid, _)) => d2 < *bd2 || (d2 == *bd2 && id < *bid),
                    };
                    if better {
                        *best = Some((d2, id, pos));
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let delta = q[*axis as usize] - value;
                let (near, far) = if delta < 0.0 {
                    (*left, *right)
                } else {
                    (*right, *left)
                };
                self.descend(near, q, best, stats, track);
                // Visit the far side unless the splitting plane alone already
                // rules it out; equality must visit so distance ties resolve
                // by id exactly as a full scan would.
                let prune = matches!(best, Some((bd2, _, _)) if delta * delta > *bd2);
                if !prune {
                    self.descend(far, q, best, stats, track);
                }
            }
        }
    }

    pub(super) fn nearest_k(
        &self,
        q: &[f64],
        k: usize,
        stats: &mut OracleStats,
    ) -> Vec<(usize, f64)> {
        if k == 0 {
            return Vec::new();
        }
        let mut heap: BinaryHeap<HeapItem> = BinaryHeap::new();
        self.descend_k(self.root, q, k, &mut heap, stats);
        let mut out: Vec<HeapItem> = heap.into_vec();
        out.sort_unstable();
        out.into_iter()
            .map(|item| (item.pos, item.d2.sqrt()))
            .collect()
    }

    fn descend_k(
        &self,
        node: u32,
        q: &[f64],
        k: usize,
        heap: &mut BinaryHeap<HeapItem>,
        stats: &mut OracleStats,
    ) {
        match &self.nodes[node as usize] {
            Node::Leaf { start, len } => {
                for &pos in &self.items[*start as usize..(*start + *len) as usize] {
                    let pos = pos as usize;
                    stats.points_examined += 1;
                    let item = HeapItem {
                        d2: dist_sq(self.data.point(pos).coords(), q),
                        id: self.data.id(pos),
                        pos,
                    };
                    if heap.len() < k {
                        heap.push(item);
                    } else if item < *heap.peek().expect("nonempty") {
                        heap.pop();
                        heap.push(item);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let delta = q[*axis as usize] - value;
                let (near, far) = if delta < 0.0 {
                    (*left, *right)
                } else {
                    (*right, *left)
                };
                self.descend_k(near, q, k, heap, stats);
                let prune = heap.len() == k && delta * delta > heap.peek().expect("full").d2;
                if !prune {
                    self.descend_k(far, q, k, heap, stats);
                }
            }
        }
    }
}

/// Max-heap entry ordered by (distance², id); the heap's top is the current
/// k-th best, i.e. the first to evict.
#[derive(Debug, Clone, Copy)]
struct HeapItem {
    d2: f64,
    id: u64,
    pos: usize,
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.d2 == other.d2 && self.id == other.id
    }
}
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.d2.total_cmp(&other.d2).then(self.id.cmp(&other.id))
    }
}

trait Track {
    fn examine(&mut self, pos: usize);
}

struct NoTrack;
impl Track for NoTrack {
    fn examine(&mut self, _pos: usize) {}
}

struct HyperTrack<'a> {
    reference: &'a PoincarePoint,
    data: &'a Dataset,
    best: Option<(f64, u64)>,
}

impl Track for HyperTrack<'_> {
    fn examine(&mut self, pos: usize) {
        let d = hyperbolic_distance(self.reference, self.data.point(pos));
        let id = self.data.id(pos);
        let better = match &self.best {
            None => true,
            Some((bd, bid)) => d < *bd || (d == *bd && id < *bid),
        };
        if better {
            self.best = Some((d, id));
        }
    }
}

/// Exact Euclidean nearest neighbor via the tree. Identical answers to
/// [`super::brute_force_exact_query`] on every input.
pub fn kdtree_query(index: &KdIndex, q: &[f64], stats: &mut OracleStats) -> Result<u64> {
    check(index, q)?;
    let (pos, _) = index.nearest(q, stats).ok_or(Error::EmptyDataset)?;
    Ok(index.data.id(pos))
}

/// The k exact Euclidean nearest neighbors, ascending (distance, id).
pub fn kdtree_query_k(
    index: &KdIndex,
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
    if k > index.len() {
        return Err(Error::NotEnoughPoints {
            requested: k,
            available: index.len(),
        });
    }
    Ok(index
        .nearest_k(q, k, stats)
        .into_iter()
        .map(|(pos, _)| index.data.id(pos))
        .collect())
}

/// Like [`kdtree_query`], but additionally reports the best *hyperbolic*
/// distance from `reference` to any point the traversal examined. Search
/// loops that issue many Euclidean probes use this to harvest a hyperbolic
/// candidate for free.
pub fn kdtree_query_tracked(
    index: &KdIndex,
    q: &[f64],
    reference: &PoincarePoint,
    stats: &mut OracleStats,
) -> Result<TrackedNearest> {
    check(index, q)?;
    if reference.dim() != index.data.dim() {
        return Err(Error::DimensionMismatch {
            expected: index.data.dim(),
            got: reference.dim(),
        });
    }
    index
        .nearest_with_tracking(q, reference, stats)
        .ok_or(Error::EmptyDataset)
}

fn check(index: &KdIndex, q: &[f64]) -> Result<()> {
    if q.len() != index.data.dim() {
        return Err(Error::DimensionMismatch {
            expected: index.data.dim(),
            got: q.len(),
        });
    }
    Ok(())
}
