//! Neighbor selection and the per-tick sensing graph.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::config::NeighborMode;
use crate::real::Real;
use crate::types::Vec3;

/// Every `j != i` with `d_ij <= r`, ascending by id.
pub fn metric_neighbors<T: Real>(positions: &[Vec3<T>], i: usize, r: T) -> Vec<usize> {
    let pi = positions[i];
    positions
        .iter()
        .enumerate()
        .filter(|&(j, pj)| j != i && (*pj - pi).norm() <= r)
        .map(|(j, _)| j)
        .collect()
}

/// The `nn` agents nearest to `i` (ties broken by lower id), ascending by id.
pub fn topological_neighbors<T: Real>(positions: &[Vec3<T>], i: usize, nn: usize) -> Vec<usize> {
    let mut buf = Vec::with_capacity(positions.len());
    topological_neighbors_with(positions, i, nn, &mut buf)
}

fn by_distance_then_id<T: Real>(a: &(T, usize), b: &(T, usize)) -> Ordering {
    a.0.partial_cmp(&b.0)
        .unwrap_or(Ordering::Equal)
        .then(a.1.cmp(&b.1))
}

pub(crate) fn topological_neighbors_with<T: Real>(
    positions: &[Vec3<T>],
    i: usize,
    nn: usize,
    buf: &mut Vec<(T, usize)>,
) -> Vec<usize> {
    let pi = positions[i];
    buf.clear();
    buf.extend(
        positions
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(j, pj)| ((*pj - pi).norm_squared(), j)),
    );
    let k = nn.min(buf.len());
    if k == 0 {
        return Vec::new();
    }
    if k < buf.len() {
        buf.select_nth_unstable_by(k - 1, by_distance_then_id);
    }
    let mut out: Vec<usize> = buf[..k].iter().map(|&(_, j)| j).collect();
    out.sort_unstable();
    out
}

/// Directed sensing graph: `(i, j)` is an edge when agent `i` senses `j`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SensingGraph {
    neighbors: Vec<Vec<usize>>,
}

impl SensingGraph {
    /// Builds a graph from per-agent neighbor lists. Lists are sorted and
    /// self-edges dropped.
    pub fn from_neighbor_lists(mut neighbors: Vec<Vec<usize>>) -> Self {
        for (i, list) in neighbors.iter_mut().enumerate() {
            list.retain(|&j| j != i);
            list.sort_unstable();
            list.dedup();
        }
        Self { neighbors }
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(i, l)| l.iter().map(move |&j| (i, j)))
    }

    /// Undirected adjacency of `G'`: `i ~ j` iff `(i, j)` or `(j, i)` is an
    /// edge. Lists sorted ascending.
    pub fn undirected(&self) -> Vec<Vec<usize>> {
        let mut adj = self.neighbors.clone();
        for (i, list) in self.neighbors.iter().enumerate() {
            for &j in list {
                adj[j].push(i);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }
}

/// Builds the sensing graph under the selected neighbor rule.
pub fn build_graph<T: Real>(positions: &[Vec3<T>], mode: &NeighborMode<T>) -> SensingGraph {
    build_graph_with(positions, mode, false)
}

/// As [`build_graph`], optionally fanning the per-agent queries out over the
/// rayon pool. Both paths produce identical graphs.
pub fn build_graph_with<T: Real>(
    positions: &[Vec3<T>],
    mode: &NeighborMode<T>,
    parallel: bool,
) -> SensingGraph {
    let n = positions.len();
    let neighbors: Vec<Vec<usize>> = match *mode {
        NeighborMode::Metric { radius } => {
            if parallel {
                (0..n)
                    .into_par_iter()
                    .map(|i| metric_neighbors(positions, i, radius))
                    .collect()
            } else {
                (0..n).map(|i| metric_neighbors(positions, i, radius)).collect()
            }
        }
        NeighborMode::Topological { count } => {
            if parallel {
                (0..n)
                    .into_par_iter()
                    .map_init(Vec::new, |buf, i| {
                        topological_neighbors_with(positions, i, count, buf)
                    })
                    .collect()
            } else {
                let mut buf = Vec::with_capacity(n);
                (0..n)
                    .map(|i| topological_neighbors_with(positions, i, count, &mut buf))
                    .collect()
            }
        }
    };
    SensingGraph { neighbors }
}
