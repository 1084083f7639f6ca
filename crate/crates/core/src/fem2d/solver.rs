use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use rayon::prelude::*;
use serde::Serialize;

use super::domain::PolygonDomain;
use super::mesh::{MeshOptions, TriangleMesh};
use crate::error::{Error, Result};
use crate::params::ProblemParams;
use crate::quad::gauss_legendre;

#[derive(Debug, Clone, Copy)]
pub struct FemOptions {
    /// Stop when the dual-norm Euler–Lagrange residual drops below tol.
    pub tol: f64,
    pub max_iter: usize,
    /// Gauss points per direction of the collapsed element rule.
    pub quad_order: usize,
    pub mesh: MeshOptions,
    /// Multiplies the initial guess; the result must not depend on it.
    pub initial_scale: f64,
}

impl Default for FemOptions {
    fn default() -> Self {
        FemOptions {
            tol: 1e-6,
            max_iter: 5000,
            quad_order: 4,
            mesh: MeshOptions::default(),
            initial_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FemSolution {
    #[serde(skip)]
    pub mesh: TriangleMesh,
    /// Nodal values, zero on boundary nodes, normalized to ∫δ^{-s}|u|^p = 1.
    pub u: Vec<f64>,
    pub mu_h: f64,
    pub iterations: usize,
    pub convergence_trace: Vec<f64>,
    pub residual: f64,
    pub damped_steps: usize,
    pub min_interior_value: f64,
}

struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    fn from_triplets(n: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_by_key(|e| (e.0, e.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::new();
        let mut vals: Vec<f64> = Vec::new();
        let mut last = (usize::MAX, usize::MAX);
        for (i, j, v) in t {
            if (i, j) == last {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = (i, j);
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix { n, row_ptr, cols, vals }
    }

    fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .into_par_iter()
            .map(|i| (self.row_ptr[i]..self.row_ptr[i + 1]).map(|k| self.vals[k] * x[self.cols[k]]).sum())
            .collect()
    }

    fn triplets(&self) -> Vec<Triplet<usize, usize, f64>> {
        let mut out = Vec::with_capacity(self.vals.len());
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.push(Triplet::new(i, self.cols[k], self.vals[k]));
            }
        }
        out
    }
}

/// Quadrature of δ^{-s}|u|^p: per element a list of (weight·δ^{-s}, barycentrics).
struct WeightRule {
    offsets: Vec<usize>,
    points: Vec<(f64, [f64; 3])>,
}

#[derive(Clone, Copy, PartialEq)]
enum Grading {
    None,
    /// apex opposite a boundary edge: cluster toward τ = 1
    TowardEdge,
    /// apex on the boundary: cluster toward τ = 0
    TowardApex,
}

fn build_weight_rule(domain: &PolygonDomain, mesh: &TriangleMesh, s: f64, order: usize) -> Result<WeightRule> {
    let (gx, gw) = gauss_legendre(order);
    let t01: Vec<(f64, f64)> = gx.iter().zip(&gw).map(|(x, w)| (0.5 * (1.0 + x), 0.5 * w)).collect();
    let bedges = mesh.boundary_edges();
    let per_elem: Vec<Vec<(f64, [f64; 3])>> = mesh
        .triangles
        .par_iter()
        .enumerate()
        .map(|(e, tri)| {
            let nb = tri.iter().filter(|&&v| mesh.boundary[v]).count();
            if nb == 3 {
                // u vanishes identically
                return Vec::new();
            }
            // rotate so that the collapsed vertex comes first
            let (apex, grading) = if nb == 2 {
                let k = (0..3).find(|&k| !mesh.boundary[tri[k]]).unwrap();
                let (b1, b2) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                let g = if bedges.contains(&(b1.min(b2), b1.max(b2))) { Grading::TowardEdge } else { Grading::None };
                (k, g)
            } else if nb == 1 {
                ((0..3).find(|&k| mesh.boundary[tri[k]]).unwrap(), Grading::TowardApex)
            } else {
                (0, Grading::None)
            };
            let idx = [apex, (apex + 1) % 3, (apex + 2) % 3];
            let [a, b, c] = idx.map(|k| mesh.nodes[tri[k]]);
            let area2 = 2.0 * mesh.area(e);
            let mut out = Vec::with_capacity(t01.len() * t01.len());
            for &(t, wt) in &t01 {
                let (tau, dtau) = match grading {
                    Grading::None => (t, 1.0),
                    Grading::TowardEdge => (1.0 - (1.0 - t) * (1.0 - t), 2.0 * (1.0 - t)),
                    Grading::TowardApex => (t * t, 2.0 * t),
                };
                for &(eta, we) in &t01 {
                    let x = [
                        a[0] + tau * ((b[0] - a[0]) + eta * (c[0] - b[0])),
                        a[1] + tau * ((b[1] - a[1]) + eta * (c[1] - b[1])),
                    ];
                    let d = domain.boundary_distance(x);
                    if !(d > 0.0) {
                        continue;
                    }
                    let w = wt * we * dtau * area2 * tau * d.powf(-s);
                    let mut bary = [0.0; 3];
                    bary[idx[0]] = 1.0 - tau;
                    bary[idx[1]] = tau * (1.0 - eta);
                    bary[idx[2]] = tau * eta;
                    out.push((w, bary));
                }
            }
            out
        })
        .collect();
    let mut offsets = Vec::with_capacity(per_elem.len() + 1);
    offsets.push(0);
    let mut points = Vec::new();
    for v in per_elem {
        points.extend(v);
        offsets.push(points.len());
    }
    if points.iter().any(|(w, _)| !w.is_finite()) {
        return Err(Error::Quadrature {
            estimate: f64::INFINITY,
            tol: 0.0,
        });
    }
    Ok(WeightRule { offsets, points })
}

struct Problem<'a> {
    mesh: &'a TriangleMesh,
    p: f64,
    rule: WeightRule,
    /// node -> dof or usize::MAX on the boundary
    dof: Vec<usize>,
    free: Vec<usize>,
    k: CsrMatrix,
}

impl<'a> Problem<'a> {
    fn new(domain: &PolygonDomain, mesh: &'a TriangleMesh, s: f64, p: f64, order: usize) -> Result<Self> {
        let mut dof = vec![usize::MAX; mesh.nodes.len()];
        let mut free = Vec::new();
        for (i, &b) in mesh.boundary.iter().enumerate() {
            if !b {
                dof[i] = free.len();
                free.push(i);
            }
        }
        if free.is_empty() {
            return Err(Error::Mesh("mesh has no interior nodes".into()));
        }
        let local: Vec<[[f64; 3]; 3]> = mesh
            .triangles
            .par_iter()
            .enumerate()
            .map(|(e, t)| {
                let [a, b, c] = t.map(|v| mesh.nodes[v]);
                let area = mesh.area(e);
                let g = [
                    [b[1] - c[1], c[0] - b[0]],
                    [c[1] - a[1], a[0] - c[0]],
                    [a[1] - b[1], b[0] - a[0]],
                ];
                let mut m = [[0.0; 3]; 3];
                for i in 0..3 {
                    for j in 0..3 {
                        m[i][j] = (g[i][0] * g[j][0] + g[i][1] * g[j][1]) / (4.0 * area);
                    }
                }
                m
            })
            .collect();
        let mut trip = Vec::with_capacity(9 * mesh.triangles.len());
        for (t, m) in mesh.triangles.iter().zip(&local) {
            for i in 0..3 {
                for j in 0..3 {
                    let (di, dj) = (dof[t[i]], dof[t[j]]);
                    if di != usize::MAX && dj != usize::MAX {
                        trip.push((di, dj, m[i][j]));
                    }
                }
            }
        }
        let k = CsrMatrix::from_triplets(free.len(), trip);
        let rule = build_weight_rule(domain, mesh, s, order)?;
        Ok(Problem {
            mesh,
            p,
            rule,
            dof,
            free,
            k,
        })
    }

    fn full(&self, x: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; self.mesh.nodes.len()];
        for (d, &node) in self.free.iter().enumerate() {
            u[node] = x[d];
        }
        u
    }

    /// N(x) = ∫δ^{-s}|u|^p and its gradient ∂N/∂x divided by p.
    fn weighted(&self, x: &[f64], with_grad: bool) -> (f64, Vec<f64>) {
        let u = self.full(x);
        let p = self.p;
        let per: Vec<(f64, [f64; 3])> = (0..self.mesh.triangles.len())
            .into_par_iter()
            .map(|e| {
                let t = self.mesh.triangles[e];
                let ue = t.map(|v| u[v]);
                let mut n = 0.0;
                let mut g = [0.0; 3];
                for &(w, b) in &self.rule.points[self.rule.offsets[e]..self.rule.offsets[e + 1]] {
                    let uq = b[0] * ue[0] + b[1] * ue[1] + b[2] * ue[2];
                    let a = uq.abs();
                    let ap2 = a.powf(p - 2.0);
                    n += w * ap2 * a * a;
                    if with_grad {
                        for k in 0..3 {
                            g[k] += w * ap2 * uq * b[k];
                        }
                    }
                }
                (n, g)
            })
            .collect();
        let mut total = 0.0;
        let mut grad = vec![0.0; if with_grad { self.free.len() } else { 0 }];
        for (e, (n, g)) in per.iter().enumerate() {
            total += n;
            if with_grad {
                for k in 0..3 {
                    let d = self.dof[self.mesh.triangles[e][k]];
                    if d != usize::MAX {
                        grad[d] += g[k];
                    }
                }
            }
        }
        (total, grad)
    }

    fn energy(&self, x: &[f64]) -> f64 {
        dot(x, &self.k.matvec(x))
    }

    fn normalize(&self, x: &mut [f64]) -> Result<()> {
        let (n, _) = self.weighted(x, false);
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::Domain("weighted norm of the iterate vanished".into()));
        }
        let c = n.powf(-1.0 / self.p);
        for v in x.iter_mut() {
            *v *= c;
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn check_params(params: &ProblemParams) -> Result<()> {
    if params.n != 2 || params.s != 2.0 || !(params.p > 2.0) {
        return Err(Error::InvalidParams(format!(
            "the planar minimization needs N = 2, s = 2, p > 2 (got N = {}, s = {}, p = {})",
            params.n, params.s, params.p
        )));
    }
    Ok(())
}

/// Normalized inverse iteration u ← K⁻¹g(u) on a given mesh. `initial`
/// holds nodal values; the interpolant of δ is used when absent.
pub fn minimize_on_mesh(
    domain: &PolygonDomain,
    mesh: &TriangleMesh,
    params: &ProblemParams,
    opts: &FemOptions,
    initial: Option<&[f64]>,
) -> Result<FemSolution> {
    check_params(params)?;
    let prob = Problem::new(domain, mesh, params.s, params.p, opts.quad_order)?;
    let kmat = SparseColMat::<usize, f64>::try_new_from_triplets(prob.free.len(), prob.free.len(), &prob.k.triplets())
        .map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
    let llt = kmat
        .sp_cholesky(Side::Lower)
        .map_err(|e| Error::LinearSolve(format!("Cholesky failed: {e:?}")))?;
    let solve = |g: &[f64]| -> Vec<f64> {
        let rhs = Mat::from_fn(g.len(), 1, |i, _| g[i]);
        let x = llt.solve(&rhs);
        (0..g.len()).map(|i| x[(i, 0)]).collect()
    };
    let mut x: Vec<f64> = prob
        .free
        .iter()
        .map(|&node| {
            let v = match initial {
                Some(u) => u[node],
                None => domain.boundary_distance(mesh.nodes[node]),
            };
            v * opts.initial_scale
        })
        .collect();
    prob.normalize(&mut x)?;
    let mut e = prob.energy(&x);
    let mut trace = vec![e];
    let mut damped = 0;
    let mut residual = f64::INFINITY;
    for it in 0..opts.max_iter {
        let (_, g) = prob.weighted(&x, true);
        let w = solve(&g);
        // u - μK⁻¹g in the K-norm, relative to ‖u‖_K
        let diff: Vec<f64> = x.iter().zip(&w).map(|(a, b)| a - e * b).collect();
        residual = (prob.energy(&diff) / e).sqrt();
        if residual < opts.tol {
            return finish(&prob, x, e, it, trace, residual, damped);
        }
        let mut cand = w.clone();
        prob.normalize(&mut cand)?;
        let mut ec = prob.energy(&cand);
        let mut theta = 1.0;
        while ec > e * (1.0 + 1e-13) && theta > 1e-4 {
            theta *= 0.5;
            cand = x.iter().zip(&w).map(|(a, b)| (1.0 - theta) * a + theta * e * b).collect();
            prob.normalize(&mut cand)?;
            ec = prob.energy(&cand);
            damped += 1;
        }
        x = cand;
        e = ec;
        trace.push(e);
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        residual,
        trace,
    })
}

fn finish(
    prob: &Problem,
    mut x: Vec<f64>,
    e: f64,
    iterations: usize,
    trace: Vec<f64>,
    residual: f64,
    damped: usize,
) -> Result<FemSolution> {
    if x.iter().sum::<f64>() < 0.0 {
        for v in x.iter_mut() {
            *v = -*v;
        }
    }
    let min_interior_value = x.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(FemSolution {
        mesh: prob.mesh.clone(),
        u: prob.full(&x),
        mu_h: e,
        iterations,
        convergence_trace: trace,
        residual,
        damped_steps: damped,
        min_interior_value,
    })
}

pub fn minimize_quotient(domain: &PolygonDomain, params: &ProblemParams, h: f64, opts: &FemOptions) -> Result<FemSolution> {
    check_params(params)?;
    let mesh = TriangleMesh::generate(domain, h, opts.mesh)?;
    minimize_on_mesh(domain, &mesh, params, opts, None)
}

#[derive(Debug, Clone, Serialize)]
pub struct StudyRow {
    pub h: f64,
    pub nodes: usize,
    pub triangles: usize,
    pub mu_h: f64,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RefineStudy {
    pub domain: String,
    pub p: f64,
    pub rows: Vec<StudyRow>,
    pub monotone: bool,
    /// Observed order from the last three levels.
    pub rate: Option<f64>,
    /// Richardson limit from the last three levels.
    pub extrapolated: Option<f64>,
    /// Distance of the finest value from the extrapolated limit, or the
    /// last decrement when no rate is available.
    pub error_estimate: f64,
    #[serde(skip)]
    pub finest: Option<FemSolution>,
}

/// Solves on nested meshes: the first level is meshed at h_list[0], each
/// further level is obtained by red refinement and warm-started from the
/// previous solution.
pub fn refine_study(
    domain: &PolygonDomain,
    params: &ProblemParams,
    h_list: &[f64],
    opts: &FemOptions,
) -> Result<RefineStudy> {
    check_params(params)?;
    if h_list.is_empty() || h_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParams("h_list must be non-empty and decreasing".into()));
    }
    let mut mesh = TriangleMesh::generate(domain, h_list[0], opts.mesh)?;
    let mut rows = Vec::new();
    let mut prev: Option<FemSolution> = None;
    for (i, &h) in h_list.iter().enumerate() {
        let mut warm = prev.as_ref().map(|s| s.u.clone());
        if i > 0 {
            let levels = (h_list[i - 1] / h).log2().round().max(1.0) as usize;
            for _ in 0..levels {
                let (fine, parents) = mesh.red_refine();
                warm = warm.map(|u| parents.iter().map(|&[a, b]| 0.5 * (u[a] + u[b])).collect());
                mesh = fine;
            }
        }
        let sol = minimize_on_mesh(domain, &mesh, params, opts, warm.as_deref())?;
        rows.push(StudyRow {
            h: mesh.h,
            nodes: mesh.nodes.len(),
            triangles: mesh.triangles.len(),
            mu_h: sol.mu_h,
            iterations: sol.iterations,
            residual: sol.residual,
        });
        prev = Some(sol);
    }
    let mu: Vec<f64> = rows.iter().map(|r| r.mu_h).collect();
    let monotone = mu.windows(2).all(|w| w[1] < w[0]);
    let (rate, extrapolated, error_estimate) = if mu.len() >= 3 {
        let n = mu.len();
        let (d1, d2) = (mu[n - 3] - mu[n - 2], mu[n - 2] - mu[n - 1]);
        let ratio = rows[n - 3].h / rows[n - 2].h;
        if d1 > 0.0 && d2 > 0.0 && d1 > d2 {
            let rate = (d1 / d2).ln() / ratio.ln();
            let err = d2 / (ratio.powf(rate) - 1.0);
            (Some(rate), Some(mu[n - 1] - err), err)
        } else {
            (None, None, d2.abs())
        }
    } else if mu.len() == 2 {
        (None, None, (mu[0] - mu[1]).abs())
    } else {
        (None, None, f64::NAN)
    };
    Ok(RefineStudy {
        domain: domain.name.clone(),
        p: params.p,
        rows,
        monotone,
        rate,
        extrapolated,
        error_estimate,
        finest: prev,
    })
}
