//! Dataset builders shared by the integration suites.
//!
//! Each test binary compiles this module on its own and uses a different
//! slice of it, so the unused-item lint is off.
#![allow(dead_code)]

use std::sync::Arc;

use hypernn::{Dataset, PoincarePoint};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

pub fn unit_direction(rng: &mut StdRng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm: f64 = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 1e-9 {
            return v.into_iter().map(|c| c / norm).collect();
        }
    }
}

pub fn random_coords(rng: &mut StdRng, dim: usize, max_norm: f64) -> Vec<f64> {
    let target = rng.gen_range(0.0..max_norm);
    unit_direction(rng, dim)
        .into_iter()
        .map(|c| c * target)
        .collect()
}

pub fn random_query(rng: &mut StdRng, dim: usize, max_norm: f64) -> PoincarePoint {
    PoincarePoint::new(random_coords(rng, dim, max_norm)).unwrap()
}

/// `n` points with uniform norms in `[0, max_norm)` and uniform directions.
pub fn random_dataset(n: usize, dim: usize, seed: u64, max_norm: f64) -> Arc<Dataset> {
    let mut rng = StdRng::seed_from_u64(seed);
    let rows = (0..n as u64)
        .map(|id| (id, random_coords(&mut rng, dim, max_norm)))
        .collect();
    Arc::new(Dataset::from_rows(dim, rows).unwrap())
}

/// A rooted-tree embedding: children keep their parent's direction plus
/// angular noise and sit at a depth-dependent norm, so ancestors lie between
/// the origin and their subtree — the layout hyperbolic embeddings exist for.
pub fn hierarchical_dataset(n: usize, dim: usize, seed: u64) -> Arc<Dataset> {
    const LEVEL_NORMS: [f64; 7] = [0.25, 0.5, 0.7, 0.85, 0.93, 0.97, 0.985];
    const BRANCHING: usize = 4;
    let mut rng = StdRng::seed_from_u64(seed);

    let mut nodes: Vec<(Vec<f64>, usize)> = vec![(unit_direction(&mut rng, dim), 0)];
    let mut next_parent = 0;
    while nodes.len() < n {
        let (parent_dir, parent_level) = nodes[next_parent].clone();
        next_parent += 1;
        let level = (parent_level + 1).min(LEVEL_NORMS.len() - 1);
        for _ in 0..BRANCHING {
            if nodes.len() >= n {
                break;
            }
            let jittered: Vec<f64> = parent_dir
                .iter()
                .map(|c| c + 0.35 * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let norm: f64 = jittered.iter().map(|c| c * c).sum::<f64>().sqrt();
            let dir = if norm > 1e-9 {
                jittered.into_iter().map(|c| c / norm).collect()
            } else {
                unit_direction(&mut rng, dim)
            };
            nodes.push((dir, level));
        }
    }

    let rows = nodes
        .into_iter()
        .enumerate()
        .map(|(id, (dir, level))| {
            let radius = LEVEL_NORMS[level] * rng.gen_range(0.985..1.015);
            (id as u64, dir.into_iter().map(|c| c * radius).collect())
        })
        .collect();
    Arc::new(Dataset::from_rows(dim, rows).unwrap())
}
