use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::Vector3;
use num_traits::Float;

pub const NOISE: i32 = -1;
const UNVISITED: i32 = -2;

type Cell = (i64, i64, i64);

struct Grid<'a> {
    points: &'a [Vector3<f64>],
    eps: f64,
    cells: BTreeMap<Cell, Vec<usize>>,
}

impl<'a> Grid<'a> {
    fn new(points: &'a [Vector3<f64>], eps: f64) -> Self {
        let mut cells: BTreeMap<Cell, Vec<usize>> = BTreeMap::new();
        for (i, p) in points.iter().enumerate() {
            if let Some(c) = Self::cell_of(p, eps) {
                cells.entry(c).or_default().push(i);
            }
        }
        Self { points, eps, cells }
    }

    fn cell_of(p: &Vector3<f64>, eps: f64) -> Option<Cell> {
        if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
            return None;
        }
        let k = |x: f64| Float::floor(x / eps) as i64;
        Some((k(p.x), k(p.y), k(p.z)))
    }

    /// Indices within `eps` of point `i` (including `i`), ascending.
    fn neighbors(&self, i: usize, out: &mut Vec<usize>) {
        out.clear();
        let p = &self.points[i];
        let Some((cx, cy, cz)) = Self::cell_of(p, self.eps) else {
            return;
        };
        let eps2 = self.eps * self.eps;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    // Saturating: far-out coordinates clamp to the extreme cells (which
                    // may then be visited twice, hence the dedup) and the exact distance
                    // test still decides membership.
                    let cell = (cx.saturating_add(dx), cy.saturating_add(dy), cz.saturating_add(dz));
                    if let Some(members) = self.cells.get(&cell) {
                        out.extend(members.iter().copied().filter(|&j| (self.points[j] - p).norm_squared() <= eps2));
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
    }
}

/// Density-based Euclidean clustering.
///
/// A point with at least `min_points` neighbours within `eps` (itself
/// included) is a core point; clusters are the connected components of core
/// points plus their border points. Noise is labelled [`NOISE`]. Cluster ids
/// are assigned in order of each cluster's first point, so the labelling is
/// deterministic for a fixed input order.
pub fn cluster_points(points: &[Vector3<f64>], eps: f64, min_points: usize) -> Vec<i32> {
    let mut labels = vec![UNVISITED; points.len()];
    if points.is_empty() || !(eps > 0.0 && eps.is_finite()) {
        labels.iter_mut().for_each(|l| *l = NOISE);
        return labels;
    }
    let min_points = min_points.max(1);
    let grid = Grid::new(points, eps);
    let mut next_cluster = 0;
    let mut nb = Vec::new();
    let mut queue = VecDeque::new();

    for i in 0..points.len() {
        if labels[i] != UNVISITED {
            continue;
        }
        grid.neighbors(i, &mut nb);
        if nb.len() < min_points {
            labels[i] = NOISE;
            continue;
        }
        let id = next_cluster;
        next_cluster += 1;
        labels[i] = id;
        queue.clear();
        queue.extend(nb.iter().copied().filter(|&j| j != i));
        while let Some(j) = queue.pop_front() {
            if labels[j] == NOISE {
                labels[j] = id;
            }
            if labels[j] != UNVISITED {
                continue;
            }
            labels[j] = id;
            grid.neighbors(j, &mut nb);
            if nb.len() >= min_points {
                queue.extend(nb.iter().copied().filter(|&k| labels[k] == UNVISITED || labels[k] == NOISE));
            }
        }
    }
    labels
}
