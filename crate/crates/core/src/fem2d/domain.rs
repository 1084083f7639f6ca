use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothSource {
    pub name: String,
    pub parameters: Vec<(String, f64)>,
}

/// A simple polygon with counterclockwise vertices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolygonDomain {
    pub name: String,
    pub vertices: Vec<Point>,
    pub smooth_source: Option<SmoothSource>,
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn segments_cross(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Distance from x to the segment [a, b].
pub fn segment_distance(x: Point, a: Point, b: Point) -> f64 {
    let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
    let (dx, dy) = (x[0] - a[0], x[1] - a[1]);
    let len2 = ex * ex + ey * ey;
    let t = if len2 > 0.0 { ((dx * ex + dy * ey) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (dx - t * ex).hypot(dy - t * ey)
}

impl PolygonDomain {
    pub fn new(name: &str, vertices: Vec<Point>, smooth_source: Option<SmoothSource>) -> Result<Self> {
        let d = PolygonDomain {
            name: name.into(),
            vertices,
            smooth_source,
        };
        let n = d.vertices.len();
        if n < 3 {
            return Err(Error::Mesh("a polygon needs at least 3 vertices".into()));
        }
        if !(d.signed_area() > 0.0) {
            return Err(Error::Mesh("polygon must be counterclockwise with positive area".into()));
        }
        for i in 0..n {
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                if segments_cross(d.vertex(i), d.vertex(i + 1), d.vertex(j), d.vertex(j + 1)) {
                    return Err(Error::Mesh(format!("edges {i} and {j} intersect")));
                }
            }
        }
        Ok(d)
    }

    pub fn vertex(&self, i: usize) -> Point {
        self.vertices[i % self.vertices.len()]
    }

    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        0.5 * (0..n)
            .map(|i| {
                let (a, b) = (self.vertex(i), self.vertex(i + 1));
                a[0] * b[1] - a[1] * b[0]
            })
            .sum::<f64>()
    }

    /// Number of vertices where the boundary turns clockwise.
    pub fn reflex_count(&self) -> usize {
        let n = self.vertices.len();
        (0..n)
            .filter(|&i| cross(self.vertex(i + n - 1), self.vertex(i), self.vertex(i + 1)) < 0.0)
            .count()
    }

    pub fn is_convex(&self) -> bool {
        self.reflex_count() == 0
    }

    pub fn contains(&self, x: Point) -> bool {
        let mut inside = false;
        let n = self.vertices.len();
        for i in 0..n {
            let (a, b) = (self.vertex(i), self.vertex(i + 1));
            if (a[1] > x[1]) != (b[1] > x[1]) {
                let t = (x[1] - a[1]) / (b[1] - a[1]);
                if x[0] < a[0] + t * (b[0] - a[0]) {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Unsigned distance to the boundary, for any point.
    pub fn boundary_distance(&self, x: Point) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| segment_distance(x, self.vertex(i), self.vertex(i + 1)))
            .fold(f64::INFINITY, f64::min)
    }

    /// δ(x); points outside or on the boundary give 0, or an error when `reject`.
    pub fn distance_to_boundary(&self, x: Point, reject: bool) -> Result<f64> {
        let d = self.boundary_distance(x);
        if d == 0.0 || !self.contains(x) {
            if reject {
                return Err(Error::Domain(format!("({}, {}) is not inside {}", x[0], x[1], self.name)));
            }
            return Ok(0.0);
        }
        Ok(d)
    }
}

pub const KIDNEY_DENT: f64 = 0.6;
const KIDNEY_POWER: i32 = 4;

/// Polar kidney r(θ) = 1 - a((1 - cos θ)/2)^4 with r' and r''.
pub fn kidney_radius(theta: f64, a: f64) -> [f64; 3] {
    let c = 0.5 * (1.0 - theta.cos());
    let dc = 0.5 * theta.sin();
    let ddc = 0.5 * theta.cos();
    let m = KIDNEY_POWER as f64;
    [
        1.0 - a * c.powi(KIDNEY_POWER),
        -a * m * c.powi(KIDNEY_POWER - 1) * dc,
        -a * m * ((m - 1.0) * c.powi(KIDNEY_POWER - 2) * dc * dc + c.powi(KIDNEY_POWER - 1) * ddc),
    ]
}

/// Signed curvature of the kidney curve, positive where it bends left.
pub fn kidney_curvature(theta: f64, a: f64) -> f64 {
    let [r, r1, r2] = kidney_radius(theta, a);
    (r * r + 2.0 * r1 * r1 - r * r2) / (r * r + r1 * r1).powf(1.5)
}

pub fn domain_gallery(name: &str, resolution: usize) -> Result<PolygonDomain> {
    if resolution < 32 {
        return Err(Error::InvalidParams(format!("resolution {resolution} < 32")));
    }
    let polar = |r: &dyn Fn(f64) -> f64| -> Vec<Point> {
        (0..resolution)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / resolution as f64;
                let rr = r(t);
                [rr * t.cos(), rr * t.sin()]
            })
            .collect()
    };
    match name {
        "disk" => PolygonDomain::new(
            "disk",
            polar(&|_| 1.0),
            Some(SmoothSource {
                name: "circle".into(),
                parameters: vec![("radius".into(), 1.0)],
            }),
        ),
        "square" => PolygonDomain::new("square", vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], None),
        "kidney" => PolygonDomain::new(
            "kidney",
            polar(&|t| kidney_radius(t, KIDNEY_DENT)[0]),
            Some(SmoothSource {
                name: "kidney".into(),
                parameters: vec![("dent".into(), KIDNEY_DENT), ("power".into(), KIDNEY_POWER as f64)],
            }),
        ),
        other => Err(Error::Unknown(format!("unknown domain '{other}'"))),
    }
}
