//! Cylindrical obstacle maps.
//!
//! Obstacles are vertical cylinders, unbounded in altitude, described by a
//! horizontal center and a radius. Generated maps never contain overlapping
//! discs, so every obstacle seen by an agent is convex on its own.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::real::Real;
use crate::rng;
use crate::types::Vec3;

/// Placement attempts per obstacle before generation gives up.
pub const PLACEMENT_ATTEMPTS: usize = 10_000;

#[derive(Debug, Error)]
pub enum MapError {
    #[error("could not place obstacle {placed} of {requested} after {attempts} attempts; density too high for the radius range")]
    GenerationFailed {
        placed: usize,
        requested: usize,
        attempts: usize,
    },
    #[error("invalid map parameters: {0}")]
    InvalidParameters(String),
    #[error("map file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Axis-aligned rectangle in the north-east plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect<T> {
    pub n_min: T,
    pub n_max: T,
    pub e_min: T,
    pub e_max: T,
}

impl<T: Real> Rect<T> {
    pub fn new(n_min: T, n_max: T, e_min: T, e_max: T) -> Self {
        Self {
            n_min,
            n_max,
            e_min,
            e_max,
        }
    }

    pub fn area(&self) -> T {
        (self.n_max - self.n_min).max(T::zero()) * (self.e_max - self.e_min).max(T::zero())
    }

    pub fn contains(&self, n: T, e: T) -> bool {
        n >= self.n_min && n <= self.n_max && e >= self.e_min && e <= self.e_max
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Obstacle<T> {
    pub center_n: T,
    pub center_e: T,
    pub radius: T,
}

impl<T: Real> Obstacle<T> {
    pub fn new(center_n: T, center_e: T, radius: T) -> Self {
        Self {
            center_n,
            center_e,
            radius,
        }
    }

    /// Horizontal distance from `p` to the cylinder axis.
    #[inline]
    pub fn axis_distance(&self, p: Vec3<T>) -> T {
        (p.x - self.center_n).hypot(p.y - self.center_e)
    }

    /// Outward unit normal of the surface point closest to `p`. A point on the
    /// axis gets the `+North` normal.
    pub fn outward_normal(&self, p: Vec3<T>) -> Vec3<T> {
        let dn = p.x - self.center_n;
        let de = p.y - self.center_e;
        let rho = dn.hypot(de);
        if rho > T::zero() {
            Vec3::new(dn / rho, de / rho, T::zero())
        } else {
            Vec3::new(T::one(), T::zero(), T::zero())
        }
    }
}

/// Closest point on the cylinder surface at the altitude of `p`, and the
/// signed horizontal distance to it (negative inside the cylinder).
pub fn nearest_surface_point<T: Real>(p: Vec3<T>, obs: &Obstacle<T>) -> (Vec3<T>, T) {
    let rho = obs.axis_distance(p);
    let distance = rho - obs.radius;
    if distance == T::zero() {
        return (p, distance);
    }
    let n = obs.outward_normal(p);
    let point = Vec3::new(
        obs.center_n + n.x * obs.radius,
        obs.center_e + n.y * obs.radius,
        p.z,
    );
    (point, distance)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObstacleMap<T> {
    pub obstacles: Vec<Obstacle<T>>,
    pub bounds: Rect<T>,
    /// Obstacles per square meter.
    pub density: T,
    pub radius_range: [T; 2],
}

impl<T: Real> ObstacleMap<T> {
    pub fn empty() -> Self {
        Self {
            obstacles: Vec::new(),
            bounds: Rect::new(T::zero(), T::zero(), T::zero(), T::zero()),
            density: T::zero(),
            radius_range: [T::zero(), T::zero()],
        }
    }

    /// Builds a map from explicit obstacles. Bounds are the bounding box of the
    /// obstacle centers.
    pub fn from_obstacles(obstacles: Vec<Obstacle<T>>) -> Self {
        if obstacles.is_empty() {
            return Self::empty();
        }
        let mut bounds = Rect::new(T::infinity(), -T::infinity(), T::infinity(), -T::infinity());
        let mut r_lo = T::infinity();
        let mut r_hi = -T::infinity();
        for o in &obstacles {
            bounds.n_min = bounds.n_min.min(o.center_n);
            bounds.n_max = bounds.n_max.max(o.center_n);
            bounds.e_min = bounds.e_min.min(o.center_e);
            bounds.e_max = bounds.e_max.max(o.center_e);
            r_lo = r_lo.min(o.radius);
            r_hi = r_hi.max(o.radius);
        }
        let area = bounds.area();
        let density = if area > T::zero() {
            T::from_count(obstacles.len()) / area
        } else {
            T::zero()
        };
        Self {
            obstacles,
            bounds,
            density,
            radius_range: [r_lo, r_hi],
        }
    }

    pub fn len(&self) -> usize {
        self.obstacles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obstacles.is_empty()
    }

    /// Smallest surface-to-surface gap over all obstacle pairs, or `None` for
    /// fewer than two obstacles.
    pub fn min_gap(&self) -> Option<T> {
        let mut best: Option<T> = None;
        for (i, a) in self.obstacles.iter().enumerate() {
            for b in &self.obstacles[i + 1..] {
                let g = (a.center_n - b.center_n).hypot(a.center_e - b.center_e)
                    - a.radius
                    - b.radius;
                best = Some(best.map_or(g, |x| x.min(g)));
            }
        }
        best
    }

    /// Stable textual digest used to tag live frames with the active map.
    pub fn digest(&self) -> String {
        // FNV-1a over the canonical text form.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.to_text().bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        format!("{h:016x}")
    }

    /// One `center_n center_e radius` record per line.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# center_n center_e radius  (meters)\n");
        for o in &self.obstacles {
            let _ = writeln!(out, "{} {} {}", o.center_n, o.center_e, o.radius);
        }
        out
    }

    /// Parses the text format written by [`ObstacleMap::to_text`]. Blank lines
    /// and `#` comments are ignored.
    pub fn from_text(text: &str) -> Result<Self, MapError> {
        let mut obstacles = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| MapError::Parse {
                line: idx + 1,
                message,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(parse_err(format!(
                    "expected 3 fields (center_n center_e radius), found {}",
                    fields.len()
                )));
            }
            let mut vals = [T::zero(); 3];
            for (v, f) in vals.iter_mut().zip(&fields) {
                let x: f64 = f
                    .parse()
                    .map_err(|_| parse_err(format!("not a number: {f:?}")))?;
                if !x.is_finite() {
                    return Err(parse_err(format!("not finite: {f:?}")));
                }
                *v = T::lit(x);
            }
            if vals[2] <= T::zero() {
                return Err(parse_err("radius must be positive".into()));
            }
            obstacles.push(Obstacle::new(vals[0], vals[1], vals[2]));
        }
        Ok(Self::from_obstacles(obstacles))
    }

    pub fn load(path: &Path) -> Result<Self, MapError> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), MapError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Generates a random non-overlapping obstacle field.
///
/// The obstacle count is `round(density * area(bounds))`. Centers and radii
/// come from the map stream of `seed`; a candidate overlapping an already
/// placed disc is redrawn.
pub fn generate_map<T: Real>(
    bounds: Rect<T>,
    density: T,
    radius_range: [T; 2],
    seed: u64,
) -> Result<ObstacleMap<T>, MapError> {
    let [r_min, r_max] = radius_range;
    if !(density >= T::zero()) {
        return Err(MapError::InvalidParameters(format!(
            "density must be >= 0, got {density}"
        )));
    }
    if !(r_min <= r_max) || (density > T::zero() && !(r_min > T::zero())) {
        return Err(MapError::InvalidParameters(format!(
            "radius range must satisfy 0 < r_min <= r_max, got [{r_min}, {r_max}]"
        )));
    }
    let requested = (density * bounds.area())
        .round()
        .to_usize()
        .unwrap_or(0);
    let mut rng = rng::stream(seed, rng::MAP_STREAM);
    let mut obstacles: Vec<Obstacle<T>> = Vec::with_capacity(requested);
    for placed in 0..requested {
        let mut ok = false;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let n = rng::uniform(&mut rng, bounds.n_min, bounds.n_max);
            let e = rng::uniform(&mut rng, bounds.e_min, bounds.e_max);
            let r = rng::uniform(&mut rng, r_min, r_max);
            let candidate = Obstacle::new(n, e, r);
            let overlaps = obstacles.iter().any(|o| {
                (o.center_n - n).hypot(o.center_e - e) - o.radius - r <= T::zero()
            });
            if !overlaps {
                obstacles.push(candidate);
                ok = true;
                break;
            }
        }
        if !ok {
            return Err(MapError::GenerationFailed {
                placed,
                requested,
                attempts: PLACEMENT_ATTEMPTS,
            });
        }
    }
    Ok(ObstacleMap {
        obstacles,
        bounds,
        density,
        radius_range,
    })
}

/// `d[i][m]`: horizontal distance from agent `i` to the axis of obstacle `m`.
pub fn agent_obstacle_distances<T: Real>(
    positions: &[Vec3<T>],
    map: &ObstacleMap<T>,
) -> Vec<Vec<T>> {
    if map.is_empty() {
        return Vec::new();
    }
    positions
        .iter()
        .map(|p| map.obstacles.iter().map(|o| o.axis_distance(*p)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field() -> Rect<f64> {
        Rect::new(0.0, 200.0, 0.0, 200.0)
    }

    #[test]
    fn zero_density_is_empty() {
        let m = generate_map(field(), 0.0, [2.0, 5.0], 3).unwrap();
        assert!(m.is_empty());
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_map(field(), 5e-4, [2.0, 5.0], 11).unwrap();
        let b = generate_map(field(), 5e-4, [2.0, 5.0], 11).unwrap();
        assert_eq!(a, b);
        let c = generate_map(field(), 5e-4, [2.0, 5.0], 12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn twenty_obstacles_do_not_overlap() {
        let m = generate_map(field(), 5e-4, [2.0, 8.0], 7).unwrap();
        assert_eq!(m.len(), 20);
        // all-pairs check, independent of the generator's rejection test
        for i in 0..m.len() {
            let a = m.obstacles[i];
            assert!(m.bounds.contains(a.center_n, a.center_e));
            for j in 0..m.len() {
                if i == j {
                    continue;
                }
                let b = m.obstacles[j];
                let dn = a.center_n - b.center_n;
                let de = a.center_e - b.center_e;
                assert!((dn * dn + de * de).sqrt() > a.radius + b.radius);
            }
        }
    }

    #[test]
    fn too_dense_fails() {
        let err = generate_map(Rect::new(0.0, 10.0, 0.0, 10.0), 0.5, [3.0, 4.0], 1).unwrap_err();
        assert!(matches!(err, MapError::GenerationFailed { .. }));
    }

    #[test]
    fn surface_point_outside() {
        let o = Obstacle::new(0.0, 0.0, 4.0);
        let p = Vec3::new(6.0, 8.0, -3.0);
        let (q, d) = nearest_surface_point(p, &o);
        assert!((d - 6.0f64).abs() < 1e-12);
        assert!((q - Vec3::new(2.4, 3.2, -3.0)).norm() < 1e-12);
    }

    #[test]
    fn surface_point_on_surface_and_inside() {
        let o = Obstacle::new(1.0, 1.0, 4.0);
        let p = Vec3::new(5.0, 1.0, 0.0);
        let (q, d) = nearest_surface_point(p, &o);
        assert_eq!(d, 0.0);
        assert_eq!(q, p);

        let inside = Vec3::new(1.0, 2.0, -7.0);
        let (q, d) = nearest_surface_point(inside, &o);
        assert!((d + 3.0f64).abs() < 1e-12);
        assert!((q - Vec3::new(1.0, 5.0, -7.0)).norm() < 1e-12);
    }

    #[test]
    fn surface_point_on_axis_points_north() {
        let o = Obstacle::new(3.0, -2.0, 2.0);
        let (q, d) = nearest_surface_point(Vec3::new(3.0, -2.0, -1.0), &o);
        assert_eq!(d, -2.0);
        assert_eq!(q, Vec3::new(5.0, -2.0, -1.0));
    }

    #[test]
    fn distance_matrix() {
        assert!(agent_obstacle_distances(&[Vec3::new(0.0, 0.0, 0.0)], &ObstacleMap::empty()).is_empty());
        let m = ObstacleMap::from_obstacles(vec![Obstacle::new(10.0, 0.0, 1.0)]);
        let d = agent_obstacle_distances(&[Vec3::new(0.0, 0.0, -20.0)], &m);
        assert_eq!(d, vec![vec![10.0]]);
    }

    #[test]
    fn text_format_round_trip() {
        let m = generate_map(field(), 3e-4, [1.5, 4.0], 5).unwrap();
        let back = ObstacleMap::<f64>::from_text(&m.to_text()).unwrap();
        assert_eq!(back.obstacles, m.obstacles);
        let err = ObstacleMap::<f64>::from_text("1 2\n").unwrap_err();
        assert!(matches!(err, MapError::Parse { line: 1, .. }));
        let err = ObstacleMap::<f64>::from_text("# c\n1 2 -1\n").unwrap_err();
        assert!(matches!(err, MapError::Parse { line: 2, .. }));
    }
}
