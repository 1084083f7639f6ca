use std::collections::HashMap;

use serde::Serialize;
use spade::{AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation};

use super::domain::{Point, PolygonDomain};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct TriangleMesh {
    pub nodes: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary: Vec<bool>,
    /// Target edge length the mesh was built for.
    pub h: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct MeshOptions {
    /// Boundary edges are pre-split to `grading * h`.
    pub grading: f64,
    pub min_angle_deg: f64,
}

impl Default for MeshOptions {
    fn default() -> Self {
        MeshOptions {
            grading: 0.5,
            min_angle_deg: 25.0,
        }
    }
}

fn area2(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn angles(a: Point, b: Point, c: Point) -> [f64; 3] {
    let ang = |p: Point, q: Point, r: Point| {
        let (ux, uy) = (q[0] - p[0], q[1] - p[1]);
        let (vx, vy) = (r[0] - p[0], r[1] - p[1]);
        (ux * vy - uy * vx).abs().atan2(ux * vx + uy * vy)
    };
    [ang(a, b, c), ang(b, c, a), ang(c, a, b)]
}

impl TriangleMesh {
    /// Constrained Delaunay mesh of the polygon with target edge length h.
    pub fn generate(domain: &PolygonDomain, h: f64, opts: MeshOptions) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::Mesh(format!("mesh size {h}")));
        }
        let mut pts: Vec<Point2<f64>> = Vec::new();
        let n = domain.vertices.len();
        let target = opts.grading * h;
        for i in 0..n {
            let (a, b) = (domain.vertex(i), domain.vertex(i + 1));
            let len = (b[0] - a[0]).hypot(b[1] - a[1]);
            let pieces = (len / target).ceil().max(1.0) as usize;
            for k in 0..pieces {
                let t = k as f64 / pieces as f64;
                pts.push(Point2::new(a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])));
            }
        }
        let m = pts.len();
        let edges: Vec<[usize; 2]> = (0..m).map(|i| [i, (i + 1) % m]).collect();
        let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> =
            ConstrainedDelaunayTriangulation::bulk_load_cdt(pts, edges)
                .map_err(|e| Error::Mesh(format!("triangulation failed: {e:?}")))?;
        let params = RefinementParameters::<f64>::new()
            .exclude_outer_faces(true)
            .with_max_allowed_area(3f64.sqrt() / 4.0 * h * h)
            .with_angle_limit(AngleLimit::from_deg(opts.min_angle_deg))
            .with_max_additional_vertices(50_000_000);
        let result = cdt.refine(params);
        if !result.refinement_complete {
            return Err(Error::Mesh("refinement hit its vertex budget".into()));
        }
        let excluded: std::collections::HashSet<_> = result.excluded_faces.iter().copied().collect();
        let mut index = HashMap::new();
        let mut nodes = Vec::new();
        for v in cdt.vertices() {
            let p = v.position();
            index.insert(v.fix(), nodes.len());
            nodes.push([p.x, p.y]);
        }
        let mut triangles = Vec::new();
        for f in cdt.inner_faces() {
            if excluded.contains(&f.fix()) {
                continue;
            }
            let [a, b, c] = f.vertices().map(|v| index[&v.fix()]);
            triangles.push([a, b, c]);
        }
        TriangleMesh::from_parts(nodes, triangles, h)
    }

    /// Drops unused nodes, orients triangles counterclockwise and marks
    /// nodes on edges that belong to a single triangle.
    pub fn from_parts(nodes: Vec<Point>, triangles: Vec<[usize; 3]>, h: f64) -> Result<Self> {
        let mut used = vec![usize::MAX; nodes.len()];
        let mut kept = Vec::new();
        let mut tris = Vec::with_capacity(triangles.len());
        for t in &triangles {
            let mut t2 = [0; 3];
            for (k, &v) in t.iter().enumerate() {
                if used[v] == usize::MAX {
                    used[v] = kept.len();
                    kept.push(nodes[v]);
                }
                t2[k] = used[v];
            }
            let a = area2(kept[t2[0]], kept[t2[1]], kept[t2[2]]);
            if a == 0.0 {
                return Err(Error::Mesh("degenerate triangle".into()));
            }
            if a < 0.0 {
                t2.swap(1, 2);
            }
            tris.push(t2);
        }
        let mut edge_count: HashMap<(usize, usize), u32> = HashMap::new();
        for t in &tris {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *edge_count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        let mut boundary = vec![false; kept.len()];
        for (&(a, b), &c) in &edge_count {
            if c == 1 {
                boundary[a] = true;
                boundary[b] = true;
            }
        }
        Ok(TriangleMesh {
            nodes: kept,
            triangles: tris,
            boundary,
            h,
        })
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        0.5 * area2(self.nodes[a], self.nodes[b], self.nodes[c])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.area(t)).sum()
    }

    pub fn min_angle_deg(&self) -> f64 {
        self.triangles
            .iter()
            .flat_map(|&[a, b, c]| angles(self.nodes[a], self.nodes[b], self.nodes[c]))
            .fold(f64::INFINITY, f64::min)
            .to_degrees()
    }

    pub fn max_edge(&self) -> f64 {
        self.triangles
            .iter()
            .flat_map(|t| {
                (0..3).map(move |k| {
                    let (p, q) = (self.nodes[t[k]], self.nodes[t[(k + 1) % 3]]);
                    (p[0] - q[0]).hypot(p[1] - q[1])
                })
            })
            .fold(0.0, f64::max)
    }

    /// Boundary edges as sorted node pairs.
    pub fn boundary_edges(&self) -> std::collections::HashSet<(usize, usize)> {
        let mut count: HashMap<(usize, usize), u32> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        count.into_iter().filter(|&(_, c)| c == 1).map(|(e, _)| e).collect()
    }

    /// Splits every triangle into four through its edge midpoints. Returns
    /// the fine mesh and, for each new node, the coarse nodes it averages.
    pub fn red_refine(&self) -> (TriangleMesh, Vec<[usize; 2]>) {
        let mut nodes = self.nodes.clone();
        let mut parents: Vec<[usize; 2]> = (0..nodes.len()).map(|i| [i, i]).collect();
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, nodes: &mut Vec<Point>| -> usize {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                let (p, q) = (nodes[a], nodes[b]);
                nodes.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
                parents.push([key.0, key.1]);
                nodes.len() - 1
            })
        };
        let mut tris = Vec::with_capacity(4 * self.triangles.len());
        for &[a, b, c] in &self.triangles {
            let ab = midpoint(a, b, &mut nodes);
            let bc = midpoint(b, c, &mut nodes);
            let ca = midpoint(c, a, &mut nodes);
            tris.push([a, ab, ca]);
            tris.push([ab, b, bc]);
            tris.push([ca, bc, c]);
            tris.push([ab, bc, ca]);
        }
        let be = self.boundary_edges();
        let mut boundary = self.boundary.clone();
        boundary.resize(nodes.len(), false);
        for (k, p) in parents.iter().enumerate().skip(self.nodes.len()) {
            boundary[k] = be.contains(&(p[0], p[1]));
        }
        (
            TriangleMesh {
                nodes,
                triangles: tris,
                boundary,
                h: 0.5 * self.h,
            },
            parents,
        )
    }

    /// Plain-text dump: a node table, a triangle table and optional nodal values.
    pub fn write_dump<W: std::io::Write>(&self, out: &mut W, values: Option<&[f64]>) -> std::io::Result<()> {
        writeln!(out, "# nodes {}", self.nodes.len())?;
        writeln!(out, "# index x y boundary{}", if values.is_some() { " u" } else { "" })?;
        for (i, p) in self.nodes.iter().enumerate() {
            write!(out, "{} {:.16e} {:.16e} {}", i, p[0], p[1], self.boundary[i] as u8)?;
            if let Some(v) = values {
                write!(out, " {:.16e}", v[i])?;
            }
            writeln!(out)?;
        }
        writeln!(out, "# triangles {}", self.triangles.len())?;
        writeln!(out, "# index a b c")?;
        for (i, t) in self.triangles.iter().enumerate() {
            writeln!(out, "{} {} {} {}", i, t[0], t[1], t[2])?;
        }
        Ok(())
    }
}
