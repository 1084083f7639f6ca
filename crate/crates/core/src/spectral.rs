//! Mode-by-mode spectrum of the linearization around Ũ:
//! φ'' + (N-1)φ'/r - μ_k φ/r² = -λ ρ̃ φ, φ(1) = 0, φ regular at 0,
//! with μ_k = k(k+N-2) and ρ̃ = (2/(1-r²))^s Ũ^{p-2}.
//!
//! Discretized by continuous P2 elements in the measure r^{N-1} dr on a grid
//! clustered at both ends. Eigenvalues come from bisection on the inertia
//! of A - λB, eigenvectors from inverse iteration.

use rayon::prelude::*;
use serde::Serialize;

use crate::band::SymBand;
use crate::error::{Error, Result};
use crate::params::ProblemParams;
use crate::quad::gauss_legendre;
use crate::radial::RadialProfile;
use crate::special::harmonic_dimension;

const GAUSS_POINTS: usize = 10;

/// ρ̃ at r = 1 - gap.
fn weight_gap(profile: &RadialProfile, gap: f64) -> f64 {
    let q = gap * (2.0 - gap);
    let (u, _) = profile.eval_gap_with_ratio(gap);
    let prm = &profile.params;
    (2.0 / q).powf(prm.s) * u.powf(prm.p - 2.0)
}

pub fn weight_fn(params: &ProblemParams, profile: &RadialProfile, r: f64) -> Result<f64> {
    if params.n != profile.params.n || params.p != profile.params.p {
        return Err(Error::InvalidParams("profile built for other parameters".into()));
    }
    if !(0.0..1.0).contains(&r) {
        return Err(Error::Domain(format!("weight needs 0 <= r < 1, got {r}")));
    }
    Ok(weight_gap(profile, 1.0 - r))
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeProblem {
    pub params: ProblemParams,
    #[serde(skip)]
    pub profile: RadialProfile,
    pub k: usize,
    pub mu_k: f64,
    pub n_grid: usize,
    /// Tolerance for the grid-doubling check on λ₁.
    pub tol: f64,
}

impl ModeProblem {
    pub fn new(profile: &RadialProfile, k: usize, n_grid: usize) -> Self {
        let n = profile.params.n;
        ModeProblem {
            params: profile.params,
            profile: profile.clone(),
            k,
            mu_k: (k * (k + n - 2)) as f64,
            n_grid,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub mode: ModeProblem,
    pub eigenvalues: Vec<f64>,
    /// Node positions (vertices and midpoints, r = 0 … 1).
    pub grid: Vec<f64>,
    pub eigenfunction_samples: Vec<f64>,
    pub second_eigenfunction: Vec<f64>,
    /// Interior sign changes of the first two eigenfunctions.
    pub sign_changes: [usize; 2],
    /// λ₁ on the doubled grid minus λ₁ on this grid.
    pub grid_shift: f64,
    /// Weighted cosine between the lowest eigenfunction and Ũ (k = 0) or ξ (k = 1).
    pub reference_similarity: Option<f64>,
    /// Relative asymmetry of the assembled matrices.
    pub asymmetry: f64,
}

struct Discretization {
    nodes_r: Vec<f64>,
    nodes_gap: Vec<f64>,
    first_dof: usize,
    a: SymBand,
    b: SymBand,
    asymmetry: f64,
}

fn grid(ne: usize) -> (Vec<f64>, Vec<f64>) {
    let mut r = Vec::with_capacity(2 * ne + 1);
    let mut g = Vec::with_capacity(2 * ne + 1);
    let vr = |i: usize| {
        let t = std::f64::consts::FRAC_PI_2 * i as f64 / ne as f64;
        (t.sin().powi(2), t.cos().powi(2))
    };
    for i in 0..ne {
        let (r0, g0) = vr(i);
        let (r1, g1) = vr(i + 1);
        r.push(r0);
        g.push(g0);
        r.push(0.5 * (r0 + r1));
        g.push(0.5 * (g0 + g1));
    }
    r.push(1.0);
    g.push(0.0);
    (r, g)
}

fn assemble(mode: &ModeProblem, ne: usize) -> Discretization {
    let (nodes_r, nodes_gap) = grid(ne);
    let n = mode.params.n_f();
    let first_dof = if mode.k == 0 { 0 } else { 1 };
    let ndof = 2 * ne - first_dof; // last node (r = 1) is Dirichlet
    let (gx, gw) = gauss_legendre(GAUSS_POINTS);
    let elems: Vec<([[f64; 3]; 3], [[f64; 3]; 3])> = (0..ne)
        .into_par_iter()
        .map(|e| {
            let (r0, r1) = (nodes_r[2 * e], nodes_r[2 * e + 2]);
            let (g0, g1) = (nodes_gap[2 * e], nodes_gap[2 * e + 2]);
            let near_one = r0 >= 0.5;
            let h = if near_one { g0 - g1 } else { r1 - r0 };
            let mut ka = [[0.0; 3]; 3];
            let mut kb = [[0.0; 3]; 3];
            for (x, w) in gx.iter().zip(&gw) {
                let t = 0.5 * (1.0 + x);
                let (r, gap) = if near_one {
                    let gap = g0 - t * h;
                    (1.0 - gap, gap)
                } else {
                    let r = r0 + t * h;
                    (r, 1.0 - r)
                };
                let l = [(1.0 - t) * (1.0 - 2.0 * t), 4.0 * t * (1.0 - t), t * (2.0 * t - 1.0)];
                let dl = [(4.0 * t - 3.0) / h, (4.0 - 8.0 * t) / h, (4.0 * t - 1.0) / h];
                let meas = 0.5 * w * h * r.powf(n - 1.0);
                let rho = weight_gap(&mode.profile, gap);
                for i in 0..3 {
                    for j in 0..3 {
                        ka[i][j] += meas * (dl[i] * dl[j] + mode.mu_k * l[i] * l[j] / (r * r));
                        kb[i][j] += meas * rho * l[i] * l[j];
                    }
                }
            }
            (ka, kb)
        })
        .collect();
    let mut a = SymBand::zeros(ndof, 2);
    let mut b = SymBand::zeros(ndof, 2);
    let mut asym = 0.0f64;
    let mut scale = 0.0f64;
    for (e, (ka, kb)) in elems.iter().enumerate() {
        for i in 0..3 {
            for j in 0..3 {
                asym = asym.max((ka[i][j] - ka[j][i]).abs()).max((kb[i][j] - kb[j][i]).abs());
                scale = scale.max(ka[i][j].abs()).max(kb[i][j].abs());
                let (gi, gj) = (2 * e + i, 2 * e + j);
                if gi < first_dof || gj < first_dof || gi >= ndof + first_dof || gj >= ndof + first_dof {
                    continue;
                }
                if gi >= gj {
                    a.add(gi - first_dof, gj - first_dof, ka[i][j]);
                    b.add(gi - first_dof, gj - first_dof, kb[i][j]);
                }
            }
        }
    }
    Discretization {
        nodes_r,
        nodes_gap,
        first_dof,
        a,
        b,
        asymmetry: asym / scale,
    }
}

fn count_below(d: &Discretization, lambda: f64) -> usize {
    d.a.shifted(lambda, &d.b).ldl().negative_count()
}

fn lowest_eigenvalues(d: &Discretization, count: usize) -> Result<Vec<f64>> {
    let mut hi = 1.0;
    let mut guard = 0;
    while count_below(d, hi) < count {
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(Error::Eigen("no upper bound for the spectrum".into()));
        }
    }
    let mut out: Vec<f64> = Vec::with_capacity(count);
    for j in 1..=count {
        let mut lo = out.last().copied().unwrap_or(0.0);
        let mut up = hi;
        for _ in 0..200 {
            if up - lo <= 1e-15 * up {
                break;
            }
            let mid = 0.5 * (lo + up);
            if count_below(d, mid) >= j {
                up = mid;
            } else {
                lo = mid;
            }
        }
        out.push(0.5 * (lo + up));
    }
    for w in out.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::Eigen(format!("eigenvalues not separated: {} {}", w[0], w[1])));
        }
    }
    Ok(out)
}

fn eigenvector(d: &Discretization, lambda: f64) -> Result<Vec<f64>> {
    let shift = lambda * (1.0 - 1e-7);
    let f = d.a.shifted(shift, &d.b).ldl();
    let n = d.a.n;
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 * 0.37).sin() * 0.1).collect();
    for _ in 0..6 {
        let bx = d.b.matvec(&x);
        x = f.solve(&bx);
        let nb = dot(&x, &d.b.matvec(&x)).sqrt();
        if !nb.is_finite() || nb == 0.0 {
            return Err(Error::Eigen("inverse iteration broke down".into()));
        }
        for v in x.iter_mut() {
            *v /= nb;
        }
    }
    let ax = d.a.matvec(&x);
    let bx = d.b.matvec(&x);
    let res: f64 = ax.iter().zip(&bx).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
    let scale: f64 = ax.iter().map(|a| a * a).sum::<f64>().sqrt();
    if res > 1e-6 * scale {
        return Err(Error::Eigen(format!("eigenpair residual {:e}", res / scale)));
    }
    // sign: positive near the origin side
    let idx = x
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let first_big = x.iter().position(|v| v.abs() > 1e-3 * x[idx].abs()).unwrap_or(0);
    if x[first_big] < 0.0 {
        for v in x.iter_mut() {
            *v = -*v;
        }
    }
    Ok(x)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn full_samples(d: &Discretization, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; d.nodes_r.len()];
    for (i, v) in x.iter().enumerate() {
        out[i + d.first_dof] = *v;
    }
    out
}

fn sign_changes(v: &[f64]) -> usize {
    let big = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut prev = 0.0;
    let mut n = 0;
    for &x in v {
        if x.abs() <= 1e-8 * big {
            continue;
        }
        if prev != 0.0 && prev * x < 0.0 {
            n += 1;
        }
        prev = x;
    }
    n
}

/// ξ(r) = Ũ'(1-r²) - (N-2) Ũ r, the radial part of the translation mode.
pub fn xi(profile: &RadialProfile, gap: f64) -> f64 {
    let (u, ratio) = profile.eval_gap_with_ratio(gap);
    let r = 1.0 - gap;
    let n = profile.params.n_f();
    ratio * r * gap * (2.0 - gap) - (n - 2.0) * u * r
}

pub fn mode_eigens(mode: &ModeProblem, count: usize) -> Result<SpectrumReport> {
    if mode.n_grid < 200 {
        return Err(Error::InvalidParams(format!("n_grid = {} < 200", mode.n_grid)));
    }
    let count = count.max(2);
    let d = assemble(mode, mode.n_grid);
    let eig = lowest_eigenvalues(&d, count)?;
    let fine = assemble(mode, 2 * mode.n_grid);
    let fine_l1 = lowest_eigenvalues(&fine, 1)?[0];
    let grid_shift = fine_l1 - eig[0];
    if grid_shift.abs() > 10.0 * mode.tol * eig[0].abs() {
        return Err(Error::GridTooCoarse { shift: grid_shift });
    }
    let v1 = eigenvector(&d, eig[0])?;
    let v2 = eigenvector(&d, eig[1])?;
    let reference_similarity = match mode.k {
        0 | 1 => {
            let refv: Vec<f64> = d.nodes_gap[d.first_dof..d.first_dof + v1.len()]
                .iter()
                .map(|&g| {
                    if mode.k == 0 {
                        mode.profile.eval_gap_with_ratio(g).0
                    } else {
                        xi(&mode.profile, g)
                    }
                })
                .collect();
            let bref = d.b.matvec(&refv);
            let c = dot(&v1, &bref) / (dot(&refv, &bref).sqrt() * dot(&v1, &d.b.matvec(&v1)).sqrt());
            Some(c.abs())
        }
        _ => None,
    };
    let s1 = full_samples(&d, &v1);
    let s2 = full_samples(&d, &v2);
    Ok(SpectrumReport {
        mode: mode.clone(),
        eigenvalues: eig,
        grid: d.nodes_r.clone(),
        sign_changes: [sign_changes(&s1), sign_changes(&s2)],
        eigenfunction_samples: s1,
        second_eigenfunction: s2,
        grid_shift,
        reference_similarity,
        asymmetry: d.asymmetry,
    })
}

/// Relative weighted L² residual of A₁ξ = ξ'' + (N-1)ξ'/r - (N-1)ξ/r² + (p-1)ρ̃ξ
/// on [0.01, 0.99], with ξ' analytic (Ũ'' from the ODE) and ξ'' by central
/// differences of ξ'.
pub fn xi_residual(params: &ProblemParams, profile: &RadialProfile) -> f64 {
    let n = params.n_f();
    let (s, p) = (params.s, params.p);
    let dxi = |r: f64| {
        let g = 1.0 - r;
        let (u, ratio) = profile.eval_gap_with_ratio(g);
        let du = ratio * r;
        let q = g * (2.0 - g);
        let d2u = -(n - 1.0) * ratio - 2f64.powf(s) * u.powf(p - 1.0) / q.powf(s);
        d2u * q - 2.0 * r * du - (n - 2.0) * (u + r * du)
    };
    let (gx, gw) = gauss_legendre(8);
    let panels = 400;
    let (a, b) = (0.01, 0.99);
    let h = (b - a) / panels as f64;
    let hd = 1e-5;
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..panels {
        for (x, w) in gx.iter().zip(&gw) {
            let r = a + h * (k as f64 + 0.5 * (1.0 + x));
            let g = 1.0 - r;
            let v = xi(profile, g);
            let d1 = dxi(r);
            let d2 = (dxi(r + hd) - dxi(r - hd)) / (2.0 * hd);
            let lin = (p - 1.0) * weight_gap(profile, g) * v;
            let res = d2 + (n - 1.0) * d1 / r - (n - 1.0) * v / (r * r) + lin;
            let m = 0.5 * w * h * r.powf(n - 1.0);
            num += m * res * res;
            den += m * lin * lin;
        }
    }
    (num / den).sqrt()
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeRow {
    pub k: usize,
    pub mu_k: f64,
    pub multiplicity: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    /// λ₁(k) - (p - 1)
    pub margin: f64,
    pub grid_shift: f64,
    pub similarity: Option<f64>,
    pub sign_changes: [usize; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub params: ProblemParams,
    pub rows: Vec<ModeRow>,
    pub tol: f64,
    pub lambda1_is_one: bool,
    pub lambda2_is_p_minus_1: bool,
    pub higher_modes_above: bool,
    /// Total multiplicity of the eigenvalue p - 1 across modes.
    pub multiplicity: usize,
    pub certified: bool,
}

pub fn nondegeneracy_certificate(
    params: &ProblemParams,
    profile: &RadialProfile,
    k_max: usize,
    n_grid: usize,
) -> Result<Certificate> {
    if k_max < 2 {
        return Err(Error::InvalidParams("k_max must be at least 2".into()));
    }
    let tol = 1e-4;
    let reports: Vec<Result<SpectrumReport>> = (0..=k_max)
        .into_par_iter()
        .map(|k| mode_eigens(&ModeProblem::new(profile, k, n_grid), 2))
        .collect();
    let pm1 = params.p - 1.0;
    let mut rows = Vec::new();
    for rep in reports {
        let rep = rep?;
        let k = rep.mode.k;
        rows.push(ModeRow {
            k,
            mu_k: rep.mode.mu_k,
            multiplicity: harmonic_dimension(params.n, k),
            lambda1: rep.eigenvalues[0],
            lambda2: rep.eigenvalues[1],
            margin: rep.eigenvalues[0] - pm1,
            grid_shift: rep.grid_shift,
            similarity: rep.reference_similarity,
            sign_changes: rep.sign_changes,
        });
    }
    let lambda1_is_one = (rows[0].lambda1 - 1.0).abs() < tol && rows[0].lambda2 > pm1 + tol;
    let lambda2_is_p_minus_1 = (rows[1].lambda1 - pm1).abs() < tol && rows[1].lambda2 > pm1 + tol;
    let higher_modes_above = rows[2..].iter().all(|r| r.lambda1 > pm1 + tol);
    let multiplicity = rows
        .iter()
        .map(|r| {
            let hits = [r.lambda1, r.lambda2].iter().filter(|l| (*l - pm1).abs() < tol).count();
            hits * r.multiplicity
        })
        .sum();
    Ok(Certificate {
        params: *params,
        rows,
        tol,
        lambda1_is_one,
        lambda2_is_p_minus_1,
        higher_modes_above,
        multiplicity,
        certified: lambda1_is_one && lambda2_is_p_minus_1 && higher_modes_above,
    })
}
