//! Integrals of the half-space extremal in cylindrical variables.
//!
//! ∫_{R^N_+} F dx = ω_{N-2} ∫∫ F(r, x_N) r^{N-2} dr dx_N. The quarter plane is
//! covered in polar form (ρ, θ): an exp-sinh rule in ρ handles the algebraic
//! decay at infinity and at the origin, a tanh-sinh rule in θ handles the
//! x_N^{-s} weight at θ = 0 and the r^{N-2} factor at θ = π/2.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mobius::{pullback_cylindrical, CylValues};
use crate::params::{Family, ProblemParams};
use crate::quad::{exp_sinh, gauss_legendre, tanh_sinh};
use crate::radial::{ProfileSource, RadialProfile};
use crate::special::{gamma_fn, sphere_area};

const MAX_LEVEL: usize = 11;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegralResult {
    pub value: f64,
    pub error_estimate: f64,
    pub truncation_radius: f64,
    pub refinement_levels: usize,
}

/// Vector version of [`integrate_cylindrical`]: all components share the
/// abscissae and each must meet the relative tolerance.
pub fn integrate_cylindrical_many<const K: usize, F>(
    f: F,
    n: usize,
    tol: f64,
) -> Result<[IntegralResult; K]>
where
    F: Fn(f64, f64) -> [f64; K] + Sync,
{
    if n < 2 {
        return Err(Error::InvalidParams(format!("dimension {n} < 2")));
    }
    let omega = sphere_area(n - 2);
    let inner_tol = 0.1 * tol;
    let expo = (n - 2) as i32;
    let outer = exp_sinh(
        |rho| {
            let inner = tanh_sinh::<K, _>(
                0.0,
                std::f64::consts::FRAC_PI_2,
                |_, da, db| {
                    let r = rho * db.sin();
                    let x = rho * da.sin();
                    let jac = rho * r.powi(expo);
                    if !jac.is_finite() {
                        // far field of an integrable integrand
                        return [0.0; K];
                    }
                    let v = f(r, x);
                    std::array::from_fn(|c| if v[c] == 0.0 { 0.0 } else { v[c] * jac })
                },
                inner_tol,
                MAX_LEVEL,
            );
            inner.value
        },
        tol,
        MAX_LEVEL,
    );
    if !outer.converged {
        let worst = (0..K)
            .map(|c| outer.error[c] / outer.magnitude[c].max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max);
        return Err(Error::Quadrature {
            estimate: worst,
            tol,
        });
    }
    Ok(std::array::from_fn(|c| IntegralResult {
        value: omega * outer.value[c],
        error_estimate: omega * (outer.error[c] + inner_tol * outer.magnitude[c]),
        truncation_radius: outer.reach,
        refinement_levels: outer.levels,
    }))
}

pub fn integrate_cylindrical<F>(f: F, params: &ProblemParams, tol: f64) -> Result<IntegralResult>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    let [r] = integrate_cylindrical_many(|r, x| [f(r, x)], params.n, tol)?;
    Ok(r)
}

/// U(x) = c x_N D^{-m}, D = 1 + 2βx_N + x_N^2 + r^2, m = N/2.
#[derive(Debug, Clone, Copy)]
pub struct ExplicitExtremal {
    c: f64,
    m: f64,
    beta: f64,
}

/// Second-order data of Z = r^{-1} ∂_r U.
#[derive(Debug, Clone, Copy)]
pub struct ZValues {
    pub z: f64,
    pub z_r: f64,
    pub z_x: f64,
}

impl ExplicitExtremal {
    pub fn new(params: &ProblemParams) -> Option<Self> {
        let n = params.n_f();
        match params.family {
            Family::TwoOverN => Some(ExplicitExtremal {
                c: (2.0 * n).powf(n / 2.0),
                m: n / 2.0,
                beta: 1.0,
            }),
            Family::FourOverN => Some(ExplicitExtremal {
                c: (n * (n + 2.0)).powf(n / 4.0),
                m: n / 2.0,
                beta: 0.0,
            }),
            Family::General => None,
        }
    }

    fn base(&self, r: f64, x: f64) -> f64 {
        1.0 + 2.0 * self.beta * x + x * x + r * r
    }

    pub fn eval(&self, r: f64, x: f64) -> CylValues {
        let d = self.base(r, x);
        let dm = d.powf(-self.m);
        let dm1 = dm / d;
        let (c, m) = (self.c, self.m);
        CylValues {
            u: c * x * dm,
            u_r: -2.0 * m * c * x * r * dm1,
            u_x: c * dm - 2.0 * m * c * x * (x + self.beta) * dm1,
        }
    }

    /// ΔU = U_rr + (N-2) U_r / r + U_xx.
    pub fn laplacian(&self, r: f64, x: f64, n: usize) -> f64 {
        let d = self.base(r, x);
        let dm1 = d.powf(-self.m - 1.0);
        let dm2 = dm1 / d;
        let (c, m, b) = (self.c, self.m, self.beta);
        let u_rr = -2.0 * m * c * x * dm1 + 4.0 * m * (m + 1.0) * c * x * r * r * dm2;
        let u_r_over_r = -2.0 * m * c * x * dm1;
        let u_xx = -2.0 * m * c * (3.0 * x + 2.0 * b) * dm1
            + 4.0 * m * (m + 1.0) * c * x * (x + b).powi(2) * dm2;
        u_rr + (n as f64 - 2.0) * u_r_over_r + u_xx
    }

    pub fn z_values(&self, r: f64, x: f64) -> ZValues {
        let d = self.base(r, x);
        let dm1 = d.powf(-self.m - 1.0);
        let dm2 = dm1 / d;
        let (c, m) = (self.c, self.m);
        ZValues {
            z: -2.0 * m * c * x * dm1,
            z_r: 4.0 * m * (m + 1.0) * c * x * r * dm2,
            z_x: -2.0 * m * c * dm1 + 4.0 * m * (m + 1.0) * c * x * (x + self.beta) * dm2,
        }
    }
}

/// The half-space extremal, either in closed form or pulled back from a
/// numerically resolved ball profile.
#[derive(Debug, Clone, Copy)]
pub enum Extremal<'a> {
    Explicit(ExplicitExtremal),
    Pulled(&'a RadialProfile),
}

impl<'a> Extremal<'a> {
    pub fn from_profile(profile: &'a RadialProfile) -> Self {
        if profile.source == ProfileSource::ClosedForm {
            if let Some(e) = ExplicitExtremal::new(&profile.params) {
                return Extremal::Explicit(e);
            }
        }
        Extremal::Pulled(profile)
    }

    pub fn eval(&self, r: f64, x: f64) -> CylValues {
        match self {
            Extremal::Explicit(e) => e.eval(r, x),
            Extremal::Pulled(p) => pullback_cylindrical(p, r, x),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MuEstimate {
    pub mu: f64,
    pub energy: IntegralResult,
    pub weighted: IntegralResult,
    /// |∫|∇U|² - ∫x_N^{-s}U^p| / ∫|∇U|²
    pub duality_gap: f64,
    pub mu_weighted_form: f64,
}

pub fn mu_half_space(params: &ProblemParams, profile: &RadialProfile, tol: f64) -> Result<MuEstimate> {
    let ext = Extremal::from_profile(profile);
    let (s, p) = (params.s, params.p);
    let [e, w] = integrate_cylindrical_many(
        |r, x| {
            let v = ext.eval(r, x);
            [v.u_r * v.u_r + v.u_x * v.u_x, x.powf(-s) * v.u.powf(p)]
        },
        params.n,
        tol,
    )?;
    let expo = (p - 2.0) / p;
    Ok(MuEstimate {
        mu: e.value.powf(expo),
        energy: e,
        weighted: w,
        duality_gap: (e.value - w.value).abs() / e.value,
        mu_weighted_form: w.value.powf(expo),
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PohozaevReport {
    #[serde(rename = "I1")]
    pub i1: f64,
    #[serde(rename = "I2")]
    pub i2: f64,
    /// ∫ x_N |∇U|²
    pub tv1_integral: f64,
    /// 2∫ x_N (∂_{x_1}U)²
    pub shear_integral: f64,
    pub residual_main: f64,
    pub residual_tv1: f64,
    pub residual_shear: f64,
    pub quadrature_error: f64,
}

impl PohozaevReport {
    pub fn max_residual(&self) -> f64 {
        self.residual_main.max(self.residual_tv1).max(self.residual_shear)
    }
}

fn pohozaev_integrals(params: &ProblemParams, profile: &RadialProfile, tol: f64) -> Result<([f64; 3], f64)> {
    let ext = Extremal::from_profile(profile);
    let (s, p) = (params.s, params.p);
    let nm1 = params.n_f() - 1.0;
    let res = integrate_cylindrical_many(
        |r, x| {
            let v = ext.eval(r, x);
            let grad2 = v.u_r * v.u_r + v.u_x * v.u_x;
            [
                x.powf(1.0 - s) * v.u.powf(p),
                x * grad2,
                2.0 * x * v.u_r * v.u_r / nm1,
            ]
        },
        params.n,
        tol,
    )?;
    let err = res.iter().map(|r| r.error_estimate).fold(0.0, f64::max);
    Ok(([res[0].value, res[1].value, res[2].value], err))
}

pub fn pohozaev_report(params: &ProblemParams, profile: &RadialProfile, tol: f64) -> Result<PohozaevReport> {
    let ([i2, t, sh], err) = pohozaev_integrals(params, profile, tol)?;
    let (n, s, p) = (params.n_f(), params.s, params.p);
    let i1 = -t + sh;
    let main_coeff = (2.0 * (n - 1.0) - s) / ((n - 1.0) * p);
    let shear_coeff = (p + 2.0 - s) / ((n - 1.0) * p);
    Ok(PohozaevReport {
        i1,
        i2,
        tv1_integral: t,
        shear_integral: sh,
        residual_main: (i1 + main_coeff * i2).abs() / i2.abs(),
        residual_tv1: (i2 - t).abs() / i2.abs(),
        residual_shear: (sh - shear_coeff * i2).abs() / i2.abs(),
        quadrature_error: err,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SlopeReport {
    /// I1 + (2/p) I2
    pub slope: f64,
    /// s/((N-1)p) I2
    pub predicted: f64,
    pub relative_gap: f64,
    #[serde(rename = "I2")]
    pub i2: f64,
}

pub fn curvature_slope(params: &ProblemParams, profile: &RadialProfile, tol: f64) -> Result<SlopeReport> {
    let ([i2, t, sh], _) = pohozaev_integrals(params, profile, tol)?;
    let i1 = -t + sh;
    let slope = i1 + 2.0 / params.p * i2;
    let predicted = params.s / ((params.n_f() - 1.0) * params.p) * i2;
    Ok(SlopeReport {
        slope,
        predicted,
        relative_gap: (slope - predicted).abs() / predicted.abs(),
        i2,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DiscriminantReport {
    pub n: usize,
    pub family: Family,
    #[serde(rename = "I3")]
    pub i3: f64,
    #[serde(rename = "I4")]
    pub i4: f64,
    /// ∫ x_N² [r U_r - r² U_rr] Z
    pub l_integral: f64,
    /// ∫ x_N² r⁴ |∇Z|² - (p-1) ∫ x_N^{2-s} r⁴ U^{p-2} Z²
    pub q_integral: f64,
    pub quad_coeff: f64,
    pub lin_coeff: f64,
    /// I3 + (2/p) I4
    pub const_coeff: f64,
    /// I3 + (2/(p+1)) I4, the combination printed for the 4/N family
    pub const_coeff_alt: f64,
    /// 8L²/(N²-1) - const·Q, equal to (N²-1)/2 · (lin²/4 - const·quad)
    #[serde(rename = "D")]
    pub d: f64,
    pub d_closed: f64,
    pub const_closed: f64,
    pub d_rel_error: f64,
    pub const_rel_error: f64,
    pub a_star: f64,
    pub min_value: f64,
    pub attainable: bool,
}

/// Printed closed forms (I3 + (2/p)I4, D_N) for the explicit families.
pub fn discriminant_closed_form(params: &ProblemParams) -> Option<(f64, f64)> {
    let n = params.n_f();
    if params.n < 3 {
        return None;
    }
    let w = sphere_area(params.n - 2);
    let pi = std::f64::consts::PI;
    let g = |x: f64| gamma_fn(x).expect("positive");
    match params.family {
        Family::TwoOverN => {
            let c = -pi.sqrt() * n.powf(n) * ((n - 26.0) * n - 8.0) * g((n + 1.0) / 2.0)
                / (4.0 * (n - 2.0) * (n - 1.0).powi(2) * (n + 1.0) * g(n / 2.0 + 2.0))
                * w;
            let d = pi * n.powf(2.0 * n + 1.0) * (n + 2.0) * ((n - 14.0) * n - 56.0)
                * g((n + 3.0) / 2.0).powi(2)
                / (4.0 * (n - 2.0).powi(2) * (n * n - 1.0).powi(3) * g(n / 2.0 + 2.0).powi(2))
                * w
                * w;
            Some((c, d))
        }
        Family::FourOverN => {
            let c = pi * 2f64.powf(-n - 2.0) * (n * (n + 2.0)).powf(n / 2.0) * (5.0 * n + 4.0)
                / ((n - 2.0) * (n * n - 1.0))
                * w;
            let d = -pi * pi * 2f64.powf(-2.0 * n - 3.0) * n * (n * (n + 2.0)).powf(n) * (n + 8.0)
                / ((n - 2.0).powi(2) * (n * n - 1.0))
                * w
                * w;
            Some((c, d))
        }
        Family::General => None,
    }
}

pub fn discriminant_report(params: &ProblemParams, tol: f64) -> Result<DiscriminantReport> {
    let ext = ExplicitExtremal::new(params).ok_or_else(|| {
        Error::InvalidParams("discriminant needs an explicit family".into())
    })?;
    if params.n < 3 {
        return Err(Error::InvalidParams("discriminant needs N >= 3".into()));
    }
    let (n, s, p) = (params.n_f(), params.s, params.p);
    let nm1 = n - 1.0;
    let res = integrate_cylindrical_many(
        |r, x| {
            let v = ext.eval(r, x);
            let z = ext.z_values(r, x);
            let grad2 = v.u_r * v.u_r + v.u_x * v.u_x;
            let x2 = x * x;
            let r2 = r * r;
            let r4 = r2 * r2;
            let up = v.u.powf(p);
            let xs = x.powf(-s);
            [
                -0.5 * x2 * grad2 + r2 / (6.0 * nm1) * grad2 + 3.0 * x2 * v.u_r * v.u_r / nm1,
                0.5 * x2 * xs * up - r2 / (6.0 * nm1) * xs * up,
                -x2 * r2 * r * z.z_r * z.z,
                x2 * r4 * (z.z_r * z.z_r + z.z_x * z.z_x),
                x2 * xs * r4 * v.u.powf(p - 2.0) * z.z * z.z,
            ]
        },
        params.n,
        tol,
    )?;
    let [i3, i4, l, q1, q2] = res.map(|r| r.value);
    let q = q1 - (p - 1.0) * q2;
    let k = n * n - 1.0;
    let quad = 2.0 * q / k;
    let lin = 8.0 * l / k;
    let cst = i3 + 2.0 / p * i4;
    let d = 8.0 * l * l / k - cst * q;
    let (c_closed, d_closed) = discriminant_closed_form(params).expect("explicit family");
    let a_star = if quad != 0.0 { -lin / (2.0 * quad) } else { f64::NAN };
    let min_value = cst - lin * lin / (4.0 * quad);
    Ok(DiscriminantReport {
        n: params.n,
        family: params.family,
        i3,
        i4,
        l_integral: l,
        q_integral: q,
        quad_coeff: quad,
        lin_coeff: lin,
        const_coeff: cst,
        const_coeff_alt: i3 + 2.0 / (p + 1.0) * i4,
        d,
        d_closed,
        const_closed: c_closed,
        d_rel_error: (d - d_closed).abs() / d_closed.abs(),
        const_rel_error: (cst - c_closed).abs() / c_closed.abs(),
        a_star,
        min_value,
        attainable: quad > 0.0 && min_value < 0.0,
    })
}

/// ∮_{S^{N-2}} (x_1² - x_2²)² dσ and (2‖h‖²/(N²-1)) ∮ r⁴ dσ for
/// h = diag(1, -1, 0, …), by product quadrature in hyperspherical angles.
pub fn marques_check(n: usize) -> Result<(f64, f64)> {
    if n < 3 {
        return Err(Error::InvalidParams("needs N >= 3".into()));
    }
    let d = n - 1; // ambient dimension of the sphere S^{N-2}
    let lhs = sphere_integral(d, &|x: &[f64]| (x[0] * x[0] - x[1] * x[1]).powi(2));
    let nf = n as f64;
    let rhs = 2.0 * 2.0 / (nf * nf - 1.0) * sphere_area(d - 1);
    Ok((lhs, rhs))
}

/// Integral over the unit sphere in R^d (d >= 2).
fn sphere_integral(d: usize, f: &dyn Fn(&[f64]) -> f64) -> f64 {
    let (gx, gw) = gauss_legendre(24);
    let mut x = vec![0.0; d];
    fn rec(
        level: usize,
        d: usize,
        scale: f64,
        weight: f64,
        x: &mut Vec<f64>,
        gx: &[f64],
        gw: &[f64],
        f: &dyn Fn(&[f64]) -> f64,
    ) -> f64 {
        let remaining = d - level; // coordinates still to assign
        if remaining == 2 {
            // circle of radius `scale`, trapezoid rule is exact for trig polynomials
            let m = 64;
            let mut s = 0.0;
            for k in 0..m {
                let phi = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
                x[level] = scale * phi.cos();
                x[level + 1] = scale * phi.sin();
                s += f(x);
            }
            return weight * s * 2.0 * std::f64::consts::PI / m as f64;
        }
        let power = (remaining - 2) as i32;
        let mut s = 0.0;
        for (t, w) in gx.iter().zip(gw) {
            let phi = 0.5 * std::f64::consts::PI * (t + 1.0);
            x[level] = scale * phi.cos();
            let sn = phi.sin();
            s += w * 0.5 * std::f64::consts::PI * sn.powi(power)
                * rec(level + 1, d, scale * sn, weight, x, gx, gw, f);
        }
        s
    }
    rec(0, d, 1.0, 1.0, &mut x, &gx, &gw, f)
}
