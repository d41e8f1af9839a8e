//! Swarm performance metrics and tracking statistics.
//!
//! * order `Φ_o`: mean pairwise cosine similarity of velocities;
//! * inter-agent safety `Φ_s,ag = 1 − n_ag / (N(N−1))`, with `n_ag` the number of
//!   ordered pairs closer than `2 r_ag`;
//! * obstacle safety `Φ_s,obs = 1 − n_obs / N`, with `n_obs` the number of
//!   (agent, obstacle) pairs closer than `r_ag + r_obs` (clamped at 0);
//! * union `Φ_u = 1 − (n_c − 1)/(N − 1)` over the connected components of the
//!   undirected sensing graph;
//! * connectivity `Φ_c = λ₂ / N`, `λ₂` being the algebraic connectivity of the
//!   undirected sensing graph.

use nalgebra::{DMatrix, SymmetricEigen};
use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use crate::environment::ObstacleMap;
use crate::flocking::SensingGraph;
use crate::real::Real;
use crate::types::Vec3;

/// Speeds below this contribute nothing to the order metric.
pub const ZERO_SPEED: f64 = 1e-9;
/// Eigenvalues below this are treated as exact zeros.
pub const EIGEN_ZERO: f64 = 1e-9;
/// Largest swarm for which the dense eigensolver is used.
pub const MAX_DENSE_EIGEN: usize = 2048;

/// Order metric. Agents slower than [`ZERO_SPEED`] contribute zero to every
/// pair they belong to. `NaN` for fewer than two agents.
pub fn order_metric<T: Real>(velocities: &[Vec3<T>]) -> T {
    let n = velocities.len();
    if n < 2 {
        return T::nan();
    }
    // Σ_{i≠j} v̂_i·v̂_j = ‖Σ v̂_i‖² − Σ ‖v̂_i‖²
    let tiny = T::lit(ZERO_SPEED);
    let mut sum = Vec3::zeros();
    let mut self_terms = T::zero();
    for v in velocities {
        let s = v.norm();
        if s >= tiny {
            let u = *v / s;
            sum += u;
            self_terms = self_terms + u.norm_squared();
        }
    }
    let pairs = T::from_count(n * (n - 1));
    let phi = (sum.norm_squared() - self_terms) / pairs;
    phi.max(-T::one()).min(T::one())
}

/// Inter-agent safety and the ordered-pair collision count.
pub fn safety_agents<T: Real>(positions: &[Vec3<T>], r_ag: T) -> (T, usize) {
    let n = positions.len();
    let threshold = r_ag + r_ag;
    let mut unordered = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            if (positions[j] - positions[i]).norm() < threshold {
                unordered += 1;
            }
        }
    }
    let n_ag = 2 * unordered;
    if n < 2 {
        return (T::one(), 0);
    }
    let phi = T::one() - T::from_count(n_ag) / T::from_count(n * (n - 1));
    (phi, n_ag)
}

/// Obstacle safety and the (agent, obstacle) collision count.
pub fn safety_obstacles<T: Real>(positions: &[Vec3<T>], map: &ObstacleMap<T>, r_ag: T) -> (T, usize) {
    let n_obs = positions
        .iter()
        .map(|p| {
            map.obstacles
                .iter()
                .filter(|o| o.axis_distance(*p) < r_ag + o.radius)
                .count()
        })
        .sum::<usize>();
    if positions.is_empty() {
        return (T::one(), n_obs);
    }
    let phi = T::one() - T::from_count(n_obs) / T::from_count(positions.len());
    (phi.max(T::zero()), n_obs)
}

/// Number of connected components of the undirected sensing graph.
pub fn component_count(graph: &SensingGraph) -> usize {
    let n = graph.len();
    let mut uf = UnionFind::<usize>::new(n);
    for (i, j) in graph.edges() {
        uf.union(i, j);
    }
    let mut labels = uf.into_labeling();
    labels.sort_unstable();
    labels.dedup();
    labels.len()
}

/// Union metric and the number of connected components.
pub fn union_metric<T: Real>(graph: &SensingGraph) -> (T, usize) {
    let n = graph.len();
    let n_c = component_count(graph);
    if n < 2 {
        return (T::one(), n_c);
    }
    let phi = T::one() - T::from_count(n_c - 1) / T::from_count(n - 1);
    (phi, n_c)
}

/// Laplacian `L = D − A` of the undirected sensing graph.
pub fn laplacian(graph: &SensingGraph) -> DMatrix<f64> {
    let adj = graph.undirected();
    let n = adj.len();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for (i, list) in adj.iter().enumerate() {
        l[(i, i)] = list.len() as f64;
        for &j in list {
            l[(i, j)] = -1.0;
        }
    }
    l
}

/// Second-smallest Laplacian eigenvalue `λ₂`. Exactly zero for disconnected
/// graphs; values within [`EIGEN_ZERO`] of an integer are snapped to it, since
/// the spectra of many regular graphs are integral. `NaN` for fewer than two
/// agents or beyond [`MAX_DENSE_EIGEN`] agents.
pub fn algebraic_connectivity(graph: &SensingGraph) -> f64 {
    let n = graph.len();
    if !(2..=MAX_DENSE_EIGEN).contains(&n) {
        return f64::NAN;
    }
    if component_count(graph) > 1 {
        return 0.0;
    }
    let eig = SymmetricEigen::new(laplacian(graph));
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(|a, b| a.total_cmp(b));
    let l2 = values[1];
    let nearest = l2.round();
    if (l2 - nearest).abs() < EIGEN_ZERO {
        nearest.max(0.0)
    } else {
        l2.max(0.0)
    }
}

/// Connectivity metric `λ₂ / N`.
pub fn connectivity_metric<T: Real>(graph: &SensingGraph) -> T {
    let n = graph.len();
    T::lit(algebraic_connectivity(graph) / n as f64)
}

/// Minimum, mean and maximum of a sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stats<T> {
    pub min: T,
    pub avg: T,
    pub max: T,
}

impl<T: Real> Stats<T> {
    pub fn nan() -> Self {
        Self {
            min: T::nan(),
            avg: T::nan(),
            max: T::nan(),
        }
    }

    pub fn of(values: impl IntoIterator<Item = T>) -> Self {
        let mut count = 0usize;
        let mut min = T::infinity();
        let mut max = T::neg_infinity();
        let mut sum = T::zero();
        for v in values {
            count += 1;
            min = min.min(v);
            max = max.max(v);
            sum = sum + v;
        }
        if count == 0 {
            return Self::nan();
        }
        Self {
            min,
            avg: sum / T::from_count(count),
            max,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackingStats<T> {
    /// Inter-agent distances over unordered pairs.
    pub distance: Stats<T>,
    /// Smallest surface clearance `d_im − r_obs` over agents and obstacles.
    pub obstacle_clearance_min: T,
    pub speed: Stats<T>,
    pub accel: Stats<T>,
}

pub fn tracking_stats<T: Real>(
    positions: &[Vec3<T>],
    velocities: &[Vec3<T>],
    accelerations: &[Vec3<T>],
    map: &ObstacleMap<T>,
) -> TrackingStats<T> {
    let n = positions.len();
    let distance = Stats::of(
        (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (positions[j] - positions[i]).norm())),
    );
    let clearance = positions
        .iter()
        .flat_map(|p| map.obstacles.iter().map(move |o| o.axis_distance(*p) - o.radius))
        .fold(None, |acc: Option<T>, d| Some(acc.map_or(d, |a| a.min(d))))
        .unwrap_or(T::nan());
    TrackingStats {
        distance,
        obstacle_clearance_min: clearance,
        speed: Stats::of(velocities.iter().map(Vec3::norm)),
        accel: Stats::of(accelerations.iter().map(Vec3::norm)),
    }
}

/// Everything measured on one tick.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct MetricsFrame<T> {
    pub tick: u64,
    pub t: T,
    #[serde(with = "crate::real::nonfinite")]
    pub phi_order: T,
    #[serde(with = "crate::real::nonfinite")]
    pub phi_safety_ag: T,
    #[serde(with = "crate::real::nonfinite")]
    pub phi_safety_obs: T,
    #[serde(with = "crate::real::nonfinite")]
    pub phi_union: T,
    #[serde(with = "crate::real::nonfinite")]
    pub phi_connectivity: T,
    pub n_ag: usize,
    pub n_obs: usize,
    pub n_components: usize,
    #[serde(with = "crate::real::nonfinite")]
    pub dist_min: T,
    #[serde(with = "crate::real::nonfinite")]
    pub dist_avg: T,
    #[serde(with = "crate::real::nonfinite")]
    pub dist_max: T,
    #[serde(with = "crate::real::nonfinite")]
    pub obstacle_clearance_min: T,
    #[serde(with = "crate::real::nonfinite")]
    pub speed_min: T,
    #[serde(with = "crate::real::nonfinite")]
    pub speed_avg: T,
    #[serde(with = "crate::real::nonfinite")]
    pub speed_max: T,
    #[serde(with = "crate::real::nonfinite")]
    pub accel_min: T,
    #[serde(with = "crate::real::nonfinite")]
    pub accel_avg: T,
    #[serde(with = "crate::real::nonfinite")]
    pub accel_max: T,
    pub centroid: Vec3<T>,
}

/// Column names of [`MetricsFrame`] in record order.
pub const FRAME_COLUMNS: [&str; 23] = [
    "tick",
    "t",
    "phi_order",
    "phi_safety_ag",
    "phi_safety_obs",
    "phi_union",
    "phi_connectivity",
    "n_ag",
    "n_obs",
    "n_components",
    "dist_min",
    "dist_avg",
    "dist_max",
    "obstacle_clearance_min",
    "speed_min",
    "speed_avg",
    "speed_max",
    "accel_min",
    "accel_avg",
    "accel_max",
    "centroid_n",
    "centroid_e",
    "centroid_d",
];

impl<T: Real> MetricsFrame<T> {
    /// Values in [`FRAME_COLUMNS`] order, formatted as shortest round-trip text.
    pub fn to_row(&self) -> Vec<String> {
        let f = |x: T| x.to_string();
        vec![
            self.tick.to_string(),
            f(self.t),
            f(self.phi_order),
            f(self.phi_safety_ag),
            f(self.phi_safety_obs),
            f(self.phi_union),
            f(self.phi_connectivity),
            self.n_ag.to_string(),
            self.n_obs.to_string(),
            self.n_components.to_string(),
            f(self.dist_min),
            f(self.dist_avg),
            f(self.dist_max),
            f(self.obstacle_clearance_min),
            f(self.speed_min),
            f(self.speed_avg),
            f(self.speed_max),
            f(self.accel_min),
            f(self.accel_avg),
            f(self.accel_max),
            f(self.centroid.x),
            f(self.centroid.y),
            f(self.centroid.z),
        ]
    }

    pub fn from_row(row: &[&str]) -> Result<Self, String> {
        if row.len() != FRAME_COLUMNS.len() {
            return Err(format!(
                "expected {} columns, found {}",
                FRAME_COLUMNS.len(),
                row.len()
            ));
        }
        let real = |k: usize| -> Result<T, String> {
            row[k]
                .parse::<f64>()
                .map(T::lit)
                .map_err(|_| format!("column {}: not a number: {:?}", FRAME_COLUMNS[k], row[k]))
        };
        let int = |k: usize| -> Result<usize, String> {
            row[k]
                .parse::<usize>()
                .map_err(|_| format!("column {}: not an integer: {:?}", FRAME_COLUMNS[k], row[k]))
        };
        Ok(Self {
            tick: row[0].parse().map_err(|_| format!("bad tick {:?}", row[0]))?,
            t: real(1)?,
            phi_order: real(2)?,
            phi_safety_ag: real(3)?,
            phi_safety_obs: real(4)?,
            phi_union: real(5)?,
            phi_connectivity: real(6)?,
            n_ag: int(7)?,
            n_obs: int(8)?,
            n_components: int(9)?,
            dist_min: real(10)?,
            dist_avg: real(11)?,
            dist_max: real(12)?,
            obstacle_clearance_min: real(13)?,
            speed_min: real(14)?,
            speed_avg: real(15)?,
            speed_max: real(16)?,
            accel_min: real(17)?,
            accel_avg: real(18)?,
            accel_max: real(19)?,
            centroid: Vec3::new(real(20)?, real(21)?, real(22)?),
        })
    }
}

/// Computes every metric for one snapshot. `graph` must be the sensing graph
/// of `positions`.
pub fn compute_frame<T: Real>(
    tick: u64,
    t: T,
    positions: &[Vec3<T>],
    velocities: &[Vec3<T>],
    accelerations: &[Vec3<T>],
    graph: &SensingGraph,
    map: &ObstacleMap<T>,
    r_ag: T,
) -> MetricsFrame<T> {
    let n = positions.len();
    let (phi_safety_ag, n_ag) = safety_agents(positions, r_ag);
    let (phi_safety_obs, n_obs) = safety_obstacles(positions, map, r_ag);
    let (phi_union, n_components) = union_metric::<T>(graph);
    let phi_connectivity = connectivity_metric::<T>(graph);
    let stats = tracking_stats(positions, velocities, accelerations, map);
    let centroid = if n == 0 {
        Vec3::zeros()
    } else {
        positions.iter().copied().sum::<Vec3<T>>() / T::from_count(n)
    };
    MetricsFrame {
        tick,
        t,
        phi_order: order_metric(velocities),
        phi_safety_ag,
        phi_safety_obs,
        phi_union,
        phi_connectivity,
        n_ag,
        n_obs,
        n_components,
        dist_min: stats.distance.min,
        dist_avg: stats.distance.avg,
        dist_max: stats.distance.max,
        obstacle_clearance_min: stats.obstacle_clearance_min,
        speed_min: stats.speed.min,
        speed_avg: stats.speed.avg,
        speed_max: stats.speed.max,
        accel_min: stats.accel.min,
        accel_avg: stats.accel.avg,
        accel_max: stats.accel.max,
        centroid,
    }
}
