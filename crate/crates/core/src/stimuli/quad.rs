//! Quadrilateral categories graded by geometric regularity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

pub const ANGLE_TOL: f64 = 1e-6;
pub const LENGTH_TOL: f64 = 1e-6;

/// Binary geometric properties. The regularity score counts the true flags.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShapeProperties {
    /// At least two interior right angles.
    pub has_right_angles: bool,
    /// At least one pair of opposite sides parallel.
    pub has_parallel_sides: bool,
    /// All four sides equal.
    pub has_equal_sides: bool,
    /// At least one mirror axis.
    pub has_symmetry_axis: bool,
}

impl ShapeProperties {
    pub const fn new(right: bool, parallel: bool, equal: bool, symmetric: bool) -> Self {
        ShapeProperties {
            has_right_angles: right,
            has_parallel_sides: parallel,
            has_equal_sides: equal,
            has_symmetry_axis: symmetric,
        }
    }

    pub fn score(&self) -> u8 {
        [
            self.has_right_angles,
            self.has_parallel_sides,
            self.has_equal_sides,
            self.has_symmetry_axis,
        ]
        .iter()
        .filter(|b| **b)
        .count() as u8
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadrilateralCategory {
    pub name: String,
    /// Counterclockwise, centroid at the origin, farthest vertex at radius 1.
    pub canonical_vertices: [Point; 4],
    pub properties: ShapeProperties,
    pub regularity_score: u8,
}

impl QuadrilateralCategory {
    /// Normalize `vertices` and check the declared flags against the
    /// measured geometry.
    pub fn new(name: &str, vertices: [Point; 4], declared: ShapeProperties) -> Result<Self> {
        let v = normalize(vertices)?;
        if !is_simple(&v) {
            return Err(Error::Validation(format!("{name}: vertices self-intersect")));
        }
        if signed_area(&v) <= 0.0 {
            return Err(Error::Validation(format!("{name}: vertices must be counterclockwise")));
        }
        let measured = measure_properties(&v);
        if measured != declared {
            return Err(Error::Validation(format!(
                "{name}: declared {declared:?} but geometry gives {measured:?}"
            )));
        }
        Ok(QuadrilateralCategory {
            name: name.to_string(),
            canonical_vertices: v,
            properties: declared,
            regularity_score: declared.score(),
        })
    }
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

fn normalize(v: [Point; 4]) -> Result<[Point; 4]> {
    let cx = v.iter().map(|p| p[0]).sum::<f64>() / 4.0;
    let cy = v.iter().map(|p| p[1]).sum::<f64>() / 4.0;
    let centered = v.map(|p| [p[0] - cx, p[1] - cy]);
    let r = centered.iter().map(|p| norm(*p)).fold(0.0, f64::max);
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Validation("degenerate vertices".into()));
    }
    Ok(centered.map(|p| [p[0] / r, p[1] / r]))
}

pub fn signed_area(v: &[Point; 4]) -> f64 {
    (0..4).map(|i| cross(v[i], v[(i + 1) % 4])).sum::<f64>() / 2.0
}

pub fn side_lengths(v: &[Point; 4]) -> [f64; 4] {
    std::array::from_fn(|i| norm(sub(v[(i + 1) % 4], v[i])))
}

/// Interior angle at each vertex, in radians (unsigned, in `[0, π]`).
pub fn vertex_angles(v: &[Point; 4]) -> [f64; 4] {
    std::array::from_fn(|i| {
        let prev = sub(v[(i + 3) % 4], v[i]);
        let next = sub(v[(i + 1) % 4], v[i]);
        (dot(prev, next) / (norm(prev) * norm(next))).clamp(-1.0, 1.0).acos()
    })
}

fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = cross(sub(p2, p1), sub(q1, p1));
    let d2 = cross(sub(p2, p1), sub(q2, p1));
    let d3 = cross(sub(q2, q1), sub(p1, q1));
    let d4 = cross(sub(q2, q1), sub(p2, q1));
    let eps = 1e-12;
    if ((d1 > eps && d2 < -eps) || (d1 < -eps && d2 > eps)) && ((d3 > eps && d4 < -eps) || (d3 < -eps && d4 > eps)) {
        return true;
    }
    let on_segment = |a: Point, b: Point, p: Point, d: f64| {
        d.abs() <= eps
            && p[0] >= a[0].min(b[0]) - eps
            && p[0] <= a[0].max(b[0]) + eps
            && p[1] >= a[1].min(b[1]) - eps
            && p[1] <= a[1].max(b[1]) + eps
    };
    on_segment(p1, p2, q1, d1) || on_segment(p1, p2, q2, d2) || on_segment(q1, q2, p1, d3) || on_segment(q1, q2, p2, d4)
}

/// True when no two non-adjacent edges meet and all vertices are distinct.
pub fn is_simple(v: &[Point; 4]) -> bool {
    for i in 0..4 {
        for j in (i + 1)..4 {
            if norm(sub(v[i], v[j])) < LENGTH_TOL {
                return false;
            }
        }
    }
    !segments_intersect(v[0], v[1], v[2], v[3]) && !segments_intersect(v[1], v[2], v[3], v[0])
}

fn reflect(p: Point, a: Point, b: Point) -> Point {
    let d = sub(b, a);
    let t = dot(sub(p, a), d) / dot(d, d);
    let foot = [a[0] + t * d[0], a[1] + t * d[1]];
    [2.0 * foot[0] - p[0], 2.0 * foot[1] - p[1]]
}

fn same_point_set(a: &[Point; 4], b: &[Point; 4]) -> bool {
    a.iter().all(|p| b.iter().any(|q| norm(sub(*p, *q)) < LENGTH_TOL))
        && b.iter().all(|p| a.iter().any(|q| norm(sub(*p, *q)) < LENGTH_TOL))
}

/// A quadrilateral mirror axis passes through two opposite vertices or
/// through the midpoints of two opposite sides; each candidate is tested by
/// reflecting all four vertices.
fn has_mirror_axis(v: &[Point; 4]) -> bool {
    let mid = |i: usize| {
        let (a, b) = (v[i], v[(i + 1) % 4]);
        [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]
    };
    let axes = [(v[0], v[2]), (v[1], v[3]), (mid(0), mid(2)), (mid(1), mid(3))];
    axes.iter().any(|&(a, b)| {
        if norm(sub(a, b)) < LENGTH_TOL {
            return false;
        }
        let reflected = v.map(|p| reflect(p, a, b));
        same_point_set(v, &reflected)
    })
}

pub fn measure_properties(v: &[Point; 4]) -> ShapeProperties {
    let angles = vertex_angles(v);
    let right = angles
        .iter()
        .filter(|a| (**a - std::f64::consts::FRAC_PI_2).abs() < ANGLE_TOL)
        .count()
        >= 2;
    let edges: [Point; 4] = std::array::from_fn(|i| sub(v[(i + 1) % 4], v[i]));
    let parallel = |a: Point, b: Point| (cross(a, b) / (norm(a) * norm(b))).abs() < ANGLE_TOL.sin();
    let has_parallel = parallel(edges[0], edges[2]) || parallel(edges[1], edges[3]);
    let sides = side_lengths(v);
    let (lo, hi) = sides
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    ShapeProperties {
        has_right_angles: right,
        has_parallel_sides: has_parallel,
        has_equal_sides: hi - lo < LENGTH_TOL,
        has_symmetry_axis: has_mirror_axis(v),
    }
}

fn on_circle(deg: f64) -> Point {
    let r = deg.to_radians();
    [r.cos(), r.sin()]
}

/// The ten categories, from most to least regular.
pub fn build_quadrilateral_catalog() -> Vec<QuadrilateralCategory> {
    let p = ShapeProperties::new;
    let entries: [(&str, [Point; 4], ShapeProperties); 10] = [
        ("square", [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]], p(true, true, true, true)),
        ("rectangle", [[-1.5, -0.75], [1.5, -0.75], [1.5, 0.75], [-1.5, 0.75]], p(true, true, false, true)),
        ("isosceles_trapezoid", [[-1.4, -0.8], [1.4, -0.8], [0.7, 0.8], [-0.7, 0.8]], p(false, true, false, true)),
        ("parallelogram", [[-1.2, -0.7], [0.8, -0.7], [1.2, 0.7], [-0.8, 0.7]], p(false, true, false, false)),
        ("kite", [[0.0, -1.4], [0.9, 0.1], [0.0, 0.8], [-0.9, 0.1]], p(false, false, false, true)),
        ("right_trapezoid", [[-1.0, -0.8], [1.2, -0.8], [0.4, 0.8], [-1.0, 0.8]], p(true, true, false, false)),
        ("rhombus", [[0.0, -1.3], [0.8, 0.0], [0.0, 1.3], [-0.8, 0.0]], p(false, true, true, true)),
        ("general_trapezoid", [[-1.3, -0.8], [1.1, -0.8], [0.6, 0.7], [-0.5, 0.7]], p(false, true, false, false)),
        ("cyclic_irregular", [on_circle(-95.0), on_circle(-20.0), on_circle(60.0), on_circle(150.0)], p(false, false, false, false)),
        ("irregular", [[-1.1, -0.9], [1.0, -0.5], [0.5, 1.0], [-0.8, 0.6]], p(false, false, false, false)),
    ];
    entries
        .into_iter()
        .map(|(name, v, props)| QuadrilateralCategory::new(name, v, props).expect("catalog entries are verified"))
        .collect()
}

pub fn max_regularity() -> u8 {
    4
}
