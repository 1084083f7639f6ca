//! Harmonic radius and the conformally invariant quotient on explicit planar
//! domains. Every domain comes with a Riemann map onto the unit disk and its
//! inverse; the radius is 𝔯 = (1 - |f|²)/|f'|.

use std::f64::consts::PI;

use num_complex::Complex64 as C;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::ProblemParams;
use crate::quad::tanh_sinh;

const I: C = C::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "id")]
pub enum ConformalDomain {
    Disk,
    /// Upper half-plane Im z > 0.
    HalfPlane,
    /// 0 < Im z < height.
    Strip { height: f64 },
    /// 0 < arg z < angle, angle in (0, 2π).
    Sector { angle: f64 },
}

fn cayley(z: C) -> (C, C) {
    let d = z + I;
    ((z - I) / d, 2.0 * I / (d * d))
}

fn cayley_inv(w: C) -> C {
    I * (1.0 + w) / (1.0 - w)
}

impl ConformalDomain {
    pub fn name(&self) -> String {
        match self {
            ConformalDomain::Disk => "disk".into(),
            ConformalDomain::HalfPlane => "half_plane".into(),
            ConformalDomain::Strip { height } => format!("strip({height})"),
            ConformalDomain::Sector { angle } => format!("sector({angle})"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ConformalDomain::Strip { height } if !(height > 0.0 && height.is_finite()) => {
                Err(Error::InvalidParams(format!("strip height {height}")))
            }
            ConformalDomain::Sector { angle } if !(angle > 0.0 && angle < 2.0 * PI) => {
                Err(Error::InvalidParams(format!("sector angle {angle}")))
            }
            _ => Ok(()),
        }
    }

    pub fn is_convex(&self) -> bool {
        match *self {
            ConformalDomain::Sector { angle } => angle <= PI,
            _ => true,
        }
    }

    pub fn contains(&self, z: C) -> bool {
        match *self {
            ConformalDomain::Disk => z.norm_sqr() < 1.0,
            ConformalDomain::HalfPlane => z.im > 0.0,
            ConformalDomain::Strip { height } => z.im > 0.0 && z.im < height,
            ConformalDomain::Sector { angle } => {
                if z == C::new(0.0, 0.0) {
                    return false;
                }
                let t = z.im.atan2(z.re).rem_euclid(2.0 * PI);
                t > 0.0 && t < angle
            }
        }
    }

    /// Riemann map f onto the unit disk and f'.
    pub fn riemann_map(&self, z: C) -> (C, C) {
        let (w, dw, _) = self.map_with_defect(z);
        (w, dw)
    }

    // f, f' and 1 - |f|², the last one from Im ζ to avoid cancellation
    // near the boundary
    fn map_with_defect(&self, z: C) -> (C, C, f64) {
        let through_cayley = |zeta: C, dzeta: C| {
            let (w, dw) = cayley(zeta);
            (w, dw * dzeta, 4.0 * zeta.im / (zeta + I).norm_sqr())
        };
        match *self {
            ConformalDomain::Disk => (z, C::new(1.0, 0.0), (1.0 - z.norm()) * (1.0 + z.norm())),
            ConformalDomain::HalfPlane => through_cayley(z, C::new(1.0, 0.0)),
            ConformalDomain::Strip { height } => {
                let k = PI / height;
                let zeta = (k * z).exp();
                through_cayley(zeta, k * zeta)
            }
            ConformalDomain::Sector { angle } => {
                let a = PI / angle;
                let (rho, t) = (z.norm(), z.im.atan2(z.re).rem_euclid(2.0 * PI));
                let zeta = C::from_polar(rho.powf(a), a * t);
                let dzeta = C::from_polar(a * rho.powf(a - 1.0), (a - 1.0) * t);
                through_cayley(zeta, dzeta)
            }
        }
    }

    pub fn inverse_map(&self, w: C) -> C {
        match *self {
            ConformalDomain::Disk => w,
            ConformalDomain::HalfPlane => cayley_inv(w),
            ConformalDomain::Strip { height } => {
                let zeta = cayley_inv(w);
                zeta.ln() * (height / PI)
            }
            ConformalDomain::Sector { angle } => {
                let zeta = cayley_inv(w);
                let (rho, t) = (zeta.norm(), zeta.im.atan2(zeta.re).rem_euclid(2.0 * PI));
                let a = angle / PI;
                C::from_polar(rho.powf(a), a * t)
            }
        }
    }

    /// δ(z) = dist(z, ∂Ω).
    pub fn delta(&self, z: C) -> f64 {
        match *self {
            ConformalDomain::Disk => 1.0 - z.norm(),
            ConformalDomain::HalfPlane => z.im,
            ConformalDomain::Strip { height } => z.im.min(height - z.im),
            ConformalDomain::Sector { angle } => {
                let rho = z.norm();
                let t = z.im.atan2(z.re).rem_euclid(2.0 * PI);
                let ray = |phi: f64| if phi < PI / 2.0 { rho * phi.sin() } else { rho };
                ray(t).min(ray(angle - t))
            }
        }
    }

    /// Closed forms of the radius for the gallery.
    pub fn radius_closed_form(&self, z: C) -> f64 {
        match *self {
            ConformalDomain::Disk => 1.0 - z.norm_sqr(),
            ConformalDomain::HalfPlane => 2.0 * z.im,
            ConformalDomain::Strip { height } => 2.0 * height / PI * (PI * z.im / height).sin(),
            ConformalDomain::Sector { angle } => {
                let t = z.im.atan2(z.re).rem_euclid(2.0 * PI);
                2.0 * angle / PI * z.norm() * (PI * t / angle).sin()
            }
        }
    }
}

/// 𝔯(z) = (1 - |f(z)|²)/|f'(z)|.
pub fn harmonic_radius(domain: &ConformalDomain, z: C) -> Result<f64> {
    domain.validate()?;
    if !domain.contains(z) {
        return Err(Error::Domain(format!("{z} is not inside {}", domain.name())));
    }
    let (_, dw, q) = domain.map_with_defect(z);
    if !(q > 0.0) {
        return Err(Error::Domain(format!("{z} is numerically on the boundary")));
    }
    Ok(q / dw.norm())
}

/// Conformal transport g = F_B⁻¹ ∘ F_A from `from` onto `to`.
#[derive(Debug, Clone, Copy)]
pub struct Transport {
    pub from: ConformalDomain,
    pub to: ConformalDomain,
}

impl Transport {
    pub fn new(from: ConformalDomain, to: ConformalDomain) -> Self {
        Transport { from, to }
    }

    /// g(z) and g'(z).
    pub fn apply(&self, z: C) -> (C, C) {
        let (w, dw) = self.from.riemann_map(z);
        let gz = self.to.inverse_map(w);
        let (_, dv) = self.to.riemann_map(gz);
        (gz, dw / dv)
    }

    pub fn inverse(&self) -> Transport {
        Transport::new(self.to, self.from)
    }
}

/// `n` deterministic interior points spread by the R2 low-discrepancy
/// sequence over a bounded window of the domain.
pub fn sample_points(domain: &ConformalDomain, n: usize) -> Vec<C> {
    const G: f64 = 1.324_717_957_244_746;
    let (a1, a2) = (1.0 / G, 1.0 / (G * G));
    (1..=n)
        .map(|i| {
            let u = (0.5 + a1 * i as f64).fract();
            let v = (0.5 + a2 * i as f64).fract();
            match *domain {
                ConformalDomain::Disk => C::from_polar(0.99 * u.sqrt(), 2.0 * PI * v),
                ConformalDomain::HalfPlane => C::new(10.0 * u - 5.0, 10f64.powf(4.0 * v - 3.0)),
                ConformalDomain::Strip { height } => C::new(6.0 * u - 3.0, height * (0.005 + 0.99 * v)),
                ConformalDomain::Sector { angle } => C::from_polar(0.01 + 3.0 * u, angle * (0.005 + 0.99 * v)),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct RadiusBoundsReport {
    pub domain: String,
    pub samples: usize,
    pub min_radius_over_delta: f64,
    pub max_radius_over_delta: f64,
    /// max 𝔯/(2δ); only meaningful for convex domains.
    pub max_radius_over_two_delta: f64,
    pub lower_bound_holds: bool,
    pub upper_bound_holds: Option<bool>,
}

pub fn radius_bounds_check(domain: &ConformalDomain, samples: &[C]) -> Result<RadiusBoundsReport> {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for &z in samples {
        let ratio = harmonic_radius(domain, z)? / domain.delta(z);
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    let slack = 1e-12;
    Ok(RadiusBoundsReport {
        domain: domain.name(),
        samples: samples.len(),
        min_radius_over_delta: lo,
        max_radius_over_delta: hi,
        max_radius_over_two_delta: hi / 2.0,
        lower_bound_holds: lo >= 1.0 - slack,
        upper_bound_holds: domain.is_convex().then_some(hi <= 2.0 + slack),
    })
}

/// Region carrying a test function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Support {
    /// Open disk, expected to lie inside the domain.
    Disk { center: [f64; 2], radius: f64 },
    /// Upper half of a disk centred on the real axis.
    HalfDisk { center: f64, radius: f64 },
    /// (x0, x1) × (y0, y1) with y0 ≥ 0.
    Rect { x: [f64; 2], y: [f64; 2] },
}

impl Support {
    pub fn contains(&self, z: C) -> bool {
        match *self {
            Support::Disk { center, radius } => (z - C::new(center[0], center[1])).norm() < radius,
            Support::HalfDisk { center, radius } => z.im > 0.0 && (z - center).norm() < radius,
            Support::Rect { x, y } => z.re > x[0] && z.re < x[1] && z.im > y[0] && z.im < y[1],
        }
    }
}

type Eval2 = dyn Fn(f64, f64) -> (f64, [f64; 2]) + Send + Sync;

/// A smooth function on the plane with analytic gradient, zero off `support`.
pub struct TestFunction2D {
    pub name: String,
    pub support: Support,
    eval: Box<Eval2>,
}

impl std::fmt::Debug for TestFunction2D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestFunction2D")
            .field("name", &self.name)
            .field("support", &self.support)
            .finish()
    }
}

/// exp(-1/(1 - t)) for t < 1 and its derivative in t.
fn bump_profile(t: f64) -> (f64, f64) {
    if t >= 1.0 {
        return (0.0, 0.0);
    }
    let q = 1.0 - t;
    let v = (-1.0 / q).exp();
    (v, -v / (q * q))
}

/// A C^∞ cutoff that is 0 for t ≤ 0, 1 for t ≥ 1, and its derivative.
fn smooth_step(t: f64) -> (f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0);
    }
    if t >= 1.0 {
        return (1.0, 0.0);
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    let da = a / (t * t);
    let db = -b / ((1.0 - t) * (1.0 - t));
    let s = a + b;
    (a / s, (da * b - a * db) / (s * s))
}

impl TestFunction2D {
    pub fn new<F>(name: &str, support: Support, f: F) -> Self
    where
        F: Fn(f64, f64) -> (f64, [f64; 2]) + Send + Sync + 'static,
    {
        TestFunction2D {
            name: name.into(),
            support,
            eval: Box::new(f),
        }
    }

    /// Value and gradient; exactly zero off the support.
    pub fn eval(&self, x: f64, y: f64) -> (f64, [f64; 2]) {
        if !self.support.contains(C::new(x, y)) {
            return (0.0, [0.0; 2]);
        }
        (self.eval)(x, y)
    }

    /// amp · exp(-1/(1 - |z - c|²/R²)), optionally stretched by `aspect` in x.
    pub fn bump(center: [f64; 2], radius: f64, amp: f64) -> Self {
        let support = Support::Disk { center, radius };
        TestFunction2D::new("bump", support, move |x, y| {
            let (dx, dy) = (x - center[0], y - center[1]);
            let t = (dx * dx + dy * dy) / (radius * radius);
            let (v, dv) = bump_profile(t);
            let g = 2.0 * amp * dv / (radius * radius);
            (amp * v, [g * dx, g * dy])
        })
    }

    /// A bump whose level sets are ellipses, still supported in the disk of `radius`.
    pub fn skew_bump(center: [f64; 2], radius: f64, aspect: f64) -> Self {
        let support = Support::Disk { center, radius };
        TestFunction2D::new("skew_bump", support, move |x, y| {
            let (dx, dy) = (x - center[0], y - center[1]);
            let r2 = radius * radius;
            let t = (dx * dx + dy * dy) / r2;
            let (v, dv) = bump_profile(t);
            let lin = 1.0 + aspect * dx / radius + 0.3 * dy / radius;
            let (ldx, ldy) = (aspect / radius, 0.3 / radius);
            let (gx, gy) = (2.0 * dv * dx / r2, 2.0 * dv * dy / r2);
            (v * lin, [gx * lin + v * ldx, gy * lin + v * ldy])
        })
    }

    /// The half-plane extremal U(x, y) = c·y·(1 + 2βy + x² + y²)^{-1}
    /// for the N = 2 families, cut off smoothly between |z| = R/2 and R.
    pub fn cutoff_extremal(params: &ProblemParams, radius: f64) -> Result<Self> {
        let ext = crate::halfspace::ExplicitExtremal::new(params)
            .filter(|_| params.n == 2)
            .ok_or_else(|| Error::InvalidParams("needs an explicit N = 2 family".into()))?;
        let support = Support::HalfDisk { center: 0.0, radius };
        Ok(TestFunction2D::new("cutoff_extremal", support, move |x, y| {
            let v = ext.eval(x.abs(), y);
            let rho = x.hypot(y);
            let (c, dc) = smooth_step(2.0 - 2.0 * rho / radius);
            let dcr = -2.0 * dc / radius;
            let ux = v.u_r * x.signum();
            let (ex, ey) = if rho > 0.0 { (x / rho, y / rho) } else { (0.0, 0.0) };
            (
                v.u * c,
                [ux * c + v.u * dcr * ex, v.u_x * c + v.u * dcr * ey],
            )
        }))
    }

    /// Near-optimizer of the half-plane Hardy inequality on the scales
    /// ε < y < 1: √y·sin(π ln(y/ε)/ln(1/ε))·χ(x), with χ a plateau of
    /// half-width `width` and unit transitions. The deficit decays like
    /// 1/ln²(1/ε).
    pub fn hardy_profile(eps: f64, width: f64) -> Self {
        let support = Support::Rect {
            x: [-width - 1.0, width + 1.0],
            y: [eps, 1.0],
        };
        let ell = (1.0 / eps).ln();
        TestFunction2D::new("hardy_profile", support, move |x, y| {
            let arg = PI * (y / eps).ln() / ell;
            let sq = y.sqrt();
            let g = sq * arg.sin();
            let dg = (0.5 * arg.sin() + PI / ell * arg.cos()) / sq;
            let (cl, dcl) = smooth_step(x + width + 1.0);
            let (cr, dcr) = smooth_step(width + 1.0 - x);
            let chi = cl * cr;
            let dchi = dcl * cr - cl * dcr;
            (g * chi, [g * dchi, dg * chi])
        })
    }

    /// max relative mismatch between the gradient and central differences at `points`.
    pub fn gradient_check(&self, points: &[[f64; 2]], h: f64) -> f64 {
        let mut worst = 0.0f64;
        for &[x, y] in points {
            let (_, g) = self.eval(x, y);
            let fx = (self.eval(x + h, y).0 - self.eval(x - h, y).0) / (2.0 * h);
            let fy = (self.eval(x, y + h).0 - self.eval(x, y - h).0) / (2.0 * h);
            let scale = g[0].abs().max(g[1].abs()).max(1e-3);
            worst = worst.max((fx - g[0]).abs() / scale).max((fy - g[1]).abs() / scale);
        }
        worst
    }
}

/// Integrals of a test function over (part of) a domain.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PlanarIntegrals {
    /// ∫|∇u|²
    pub energy: f64,
    /// ∫𝔯^{-s}|u|^p
    pub weighted: f64,
    /// ∫u²/𝔯²
    pub hardy: f64,
    pub error_estimate: f64,
}

const INNER_TOL: f64 = 1e-13;
const INNER_LEVEL: usize = 9;

fn check_quadrature<const K: usize>(r: &crate::quad::DeResult<K>, tol: f64) -> Result<()> {
    if !r.converged {
        let e = r.error.iter().cloned().fold(0.0, f64::max);
        if e > tol * r.magnitude.iter().cloned().fold(0.0, f64::max) {
            return Err(Error::Quadrature { estimate: e, tol });
        }
    }
    Ok(())
}

/// Periodic trapezoid rule in θ, doubled until stable.
fn periodic<const K: usize, F>(f: F, tol: f64) -> Result<([f64; K], f64)>
where
    F: Fn(f64) -> Result<[f64; K]>,
{
    let mut n = 16usize;
    let mut vals: Vec<[f64; K]> = (0..n).map(|j| f(2.0 * PI * j as f64 / n as f64)).collect::<Result<_>>()?;
    let total = |v: &[[f64; K]], n: usize| -> [f64; K] {
        std::array::from_fn(|c| v.iter().map(|x| x[c]).sum::<f64>() * 2.0 * PI / n as f64)
    };
    let mut prev = total(&vals, n);
    loop {
        let new: Vec<[f64; K]> = (0..n)
            .map(|j| f(2.0 * PI * (j as f64 + 0.5) / n as f64))
            .collect::<Result<_>>()?;
        let mut merged = Vec::with_capacity(2 * n);
        for (a, b) in vals.iter().zip(&new) {
            merged.push(*a);
            merged.push(*b);
        }
        vals = merged;
        n *= 2;
        let cur = total(&vals, n);
        let err = (0..K).map(|c| (cur[c] - prev[c]).abs()).fold(0.0, f64::max);
        let mag = (0..K).map(|c| cur[c].abs()).fold(0.0, f64::max);
        if n >= 64 && err <= tol * mag {
            return Ok((cur, err));
        }
        if n > 1 << 14 {
            return Err(Error::Quadrature { estimate: err, tol });
        }
        prev = cur;
    }
}

/// First ρ in (0, hi] at which `inside(ρ)` fails, by scan and bisection.
fn exit_radius<F: Fn(f64) -> bool>(inside: F, hi: f64) -> f64 {
    let steps = 256;
    let mut a = 0.0;
    for j in 1..=steps {
        let b = hi * j as f64 / steps as f64;
        if !inside(b) {
            let mut lo = a;
            let mut up = b;
            for _ in 0..100 {
                let mid = 0.5 * (lo + up);
                if inside(mid) {
                    lo = mid;
                } else {
                    up = mid;
                }
                if up - lo <= 1e-15 * up {
                    break;
                }
            }
            return up;
        }
        a = b;
    }
    hi
}

fn gather(u: f64, g: [f64; 2], rad: f64, s: f64, p: f64) -> [f64; 3] {
    if u == 0.0 && g == [0.0, 0.0] {
        return [0.0; 3];
    }
    [g[0] * g[0] + g[1] * g[1], rad.powf(-s) * u.abs().powf(p), u * u / (rad * rad)]
}

// Liouville radius, except where the closed form avoids cancellation in
// 1 - |f|² near a straight boundary.
fn quadrature_radius(domain: &ConformalDomain, z: C) -> f64 {
    match domain {
        ConformalDomain::HalfPlane | ConformalDomain::Strip { .. } => domain.radius_closed_form(z),
        _ => {
            let (w, dw) = domain.riemann_map(z);
            (1.0 - w.norm_sqr()) / dw.norm()
        }
    }
}

/// Integrals of u over its support, which must lie inside `domain`.
pub fn integrate(domain: &ConformalDomain, u: &TestFunction2D, s: f64, p: f64, tol: f64) -> Result<PlanarIntegrals> {
    let f = |x: f64, y: f64| {
        let (v, g) = u.eval(x, y);
        gather(v, g, quadrature_radius(domain, C::new(x, y)), s, p)
    };
    let (vals, err) = match u.support {
        Support::Disk { center, radius: rr } => {
            let c = C::new(center[0], center[1]);
            if domain.delta(c) <= rr || !domain.contains(c) {
                return Err(Error::Domain(format!("support of {} leaves {}", u.name, domain.name())));
            }
            periodic::<3, _>(
                |t| {
                    let e = C::from_polar(1.0, t);
                    let r = tanh_sinh::<3, _>(
                        0.0,
                        rr,
                        |rho, _, _| {
                            let z = c + e * rho;
                            let v = f(z.re, z.im);
                            std::array::from_fn(|k| v[k] * rho)
                        },
                        INNER_TOL,
                        INNER_LEVEL,
                    );
                    check_quadrature(&r, tol)?;
                    Ok(r.value)
                },
                tol,
            )?
        }
        Support::HalfDisk { center, radius: rr } => {
            if *domain != ConformalDomain::HalfPlane {
                return Err(Error::Domain("half-disk supports need the half-plane".into()));
            }
            let outer = tanh_sinh::<3, _>(
                0.0,
                PI,
                |t, da, db| {
                    let sin = if t < 0.5 * PI { da.sin() } else { db.sin() };
                    let cos = t.cos();
                    let r = tanh_sinh::<3, _>(
                        0.0,
                        rr,
                        |rho, _, _| {
                            let (x, y) = (center + rho * cos, rho * sin);
                            let v = f(x, y);
                            std::array::from_fn(|k| v[k] * rho)
                        },
                        INNER_TOL,
                        INNER_LEVEL,
                    );
                    r.value
                },
                tol,
                INNER_LEVEL,
            );
            check_quadrature(&outer, tol)?;
            (outer.value, outer.error.iter().cloned().fold(0.0, f64::max))
        }
        Support::Rect { x, y } => {
            let inside = |xx: f64, yy: f64| domain.contains(C::new(xx, yy));
            if !(inside(x[0], y[0].max(1e-300)) && inside(x[1], y[1] - 1e-12)) || y[0] < 0.0 {
                return Err(Error::Domain(format!("support of {} leaves {}", u.name, domain.name())));
            }
            // geometric panels in y resolve profiles spread over many scales
            let mut cuts = vec![y[0]];
            if y[0] > 0.0 {
                while cuts.last().copied().unwrap_or(y[1]) * 2.0 < y[1] {
                    let next = cuts.last().copied().unwrap_or(y[0]) * 2.0;
                    cuts.push(next);
                }
            }
            cuts.push(y[1]);
            let mut acc = [0.0; 3];
            let mut err = 0.0;
            for w in cuts.windows(2) {
                let outer = tanh_sinh::<3, _>(
                    w[0],
                    w[1],
                    |yy, _, _| {
                        tanh_sinh::<3, _>(x[0], x[1], |xx, _, _| f(xx, yy), INNER_TOL, INNER_LEVEL).value
                    },
                    tol,
                    INNER_LEVEL,
                );
                check_quadrature(&outer, tol)?;
                for k in 0..3 {
                    acc[k] += outer.value[k];
                }
                err += outer.error.iter().cloned().fold(0.0, f64::max);
            }
            (acc, err)
        }
    };
    Ok(PlanarIntegrals {
        energy: vals[0],
        weighted: vals[1],
        hardy: vals[2],
        error_estimate: err,
    })
}

fn check_planar(params: &ProblemParams) -> Result<()> {
    if params.n != 2 || params.s != 2.0 || !(params.p >= 2.0) {
        return Err(Error::InvalidParams(format!(
            "planar quotient needs N = 2, s = 2, p >= 2 (got N = {}, s = {}, p = {})",
            params.n, params.s, params.p
        )));
    }
    Ok(())
}

/// J[u] = ∫|∇u|² / (∫𝔯^{-s}|u|^p)^{2/p}.
pub fn quotient_j(domain: &ConformalDomain, u: &TestFunction2D, params: &ProblemParams, tol: f64) -> Result<f64> {
    check_planar(params)?;
    let it = integrate(domain, u, params.s, params.p, tol)?;
    if !(it.weighted > 0.0) {
        return Err(Error::Domain("zero denominator".into()));
    }
    Ok(it.energy / it.weighted.powf(2.0 / params.p))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct InvarianceResiduals {
    pub energy_a: f64,
    pub energy_b: f64,
    pub weighted_a: f64,
    pub weighted_b: f64,
    pub energy_residual: f64,
    pub weighted_residual: f64,
}

/// Transports u from A to B by ũ = u ∘ g⁻¹ and compares the Dirichlet
/// energies and weighted p-norms computed independently on each side.
pub fn invariance_check(
    a: &ConformalDomain,
    b: &ConformalDomain,
    u: &TestFunction2D,
    params: &ProblemParams,
    tol: f64,
) -> Result<InvarianceResiduals> {
    check_planar(params)?;
    a.validate()?;
    b.validate()?;
    let (s, p) = (params.s, params.p);
    let lhs = integrate(a, u, s, p, tol)?;
    let Support::Disk { center, radius } = u.support else {
        return Err(Error::Domain("transport needs a disk support".into()));
    };
    let c = C::new(center[0], center[1]);
    let fwd = Transport::new(*a, *b);
    let back = fwd.inverse();
    let (gc, dgc) = fwd.apply(c);
    // ũ(w) and its gradient; 0 off the image of the support
    let ut = |w: C| -> (f64, [f64; 2]) {
        if !b.contains(w) {
            return (0.0, [0.0; 2]);
        }
        let (z, dz) = back.apply(w);
        if !a.contains(z) || (z - c).norm() >= radius {
            return (0.0, [0.0; 2]);
        }
        let (v, g) = u.eval(z.re, z.im);
        // ∇ũ = conj(dz)·∇u in complex notation
        let gu = C::new(g[0], g[1]) * dz.conj();
        (v, [gu.re, gu.im])
    };
    let inside = |w: C| {
        if !b.contains(w) {
            return false;
        }
        let z = back.apply(w).0;
        a.contains(z) && (z - c).norm() < radius
    };
    let reach = 4.0 * dgc.norm() * radius;
    let (vals, _) = periodic::<3, _>(
        |t| {
            let e = C::from_polar(1.0, t);
            let end = exit_radius(|rho| inside(gc + e * rho), reach);
            let tail = (1..=16).any(|j| {
                let w = gc + e * (end + (reach - end) * j as f64 / 16.0);
                b.contains(w) && ut(w).0 != 0.0
            });
            if tail {
                return Err(Error::Domain("image of the support is not star-shaped".into()));
            }
            let r = tanh_sinh::<3, _>(
                0.0,
                end,
                |rho, _, _| {
                    let w = gc + e * rho;
                    let (v, g) = ut(w);
                    let q = gather(v, g, quadrature_radius(b, w), s, p);
                    std::array::from_fn(|k| q[k] * rho)
                },
                INNER_TOL,
                INNER_LEVEL,
            );
            check_quadrature(&r, tol)?;
            Ok(r.value)
        },
        tol,
    )?;
    let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs());
    Ok(InvarianceResiduals {
        energy_a: lhs.energy,
        energy_b: vals[0],
        weighted_a: lhs.weighted,
        weighted_b: vals[1],
        energy_residual: rel(lhs.energy, vals[0]),
        weighted_residual: rel(lhs.weighted, vals[1]),
    })
}

/// ∫|∇u|² - ∫u²/𝔯², which the conformal Hardy inequality makes nonnegative.
pub fn conformal_hardy_check(domain: &ConformalDomain, u: &TestFunction2D, tol: f64) -> Result<HardyMargin> {
    domain.validate()?;
    let it = integrate(domain, u, 2.0, 2.0, tol)?;
    Ok(HardyMargin {
        energy: it.energy,
        hardy: it.hardy,
        margin: it.energy - it.hardy,
        holds: it.energy - it.hardy >= -tol * it.energy,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct HardyMargin {
    pub energy: f64,
    pub hardy: f64,
    pub margin: f64,
    pub holds: bool,
}
