//! Möbius map between the upper half-space and the unit ball.
//!
//! The map sends (x', x_N) to y with y' = 2x'/P, y_N = (1-|x|^2)/P where
//! P = |x + e_N|^2. The same formula inverts it, since x + e_N = 2(y + e_N)/|y + e_N|^2.

use crate::error::{Error, Result};
use crate::radial::RadialProfile;

#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpacePoint {
    pub x_tangential: Vec<f64>,
    pub x_normal: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BallPoint {
    pub y: Vec<f64>,
}

impl HalfSpacePoint {
    pub fn new(x_tangential: Vec<f64>, x_normal: f64) -> Result<Self> {
        if !(x_normal >= 0.0) {
            return Err(Error::Domain(format!("x_N = {x_normal} is negative")));
        }
        Ok(HalfSpacePoint {
            x_tangential,
            x_normal,
        })
    }

    pub fn dim(&self) -> usize {
        self.x_tangential.len() + 1
    }

    fn tangential_sq(&self) -> f64 {
        self.x_tangential.iter().map(|v| v * v).sum()
    }

    /// |x + e_N|^2
    pub fn shifted_norm_sq(&self) -> f64 {
        self.tangential_sq() + (1.0 + self.x_normal).powi(2)
    }
}

impl BallPoint {
    pub fn norm(&self) -> f64 {
        self.y.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

fn apply(tangential: &[f64], normal: f64) -> (Vec<f64>, f64) {
    let t2: f64 = tangential.iter().map(|v| v * v).sum();
    let den = t2 + (1.0 + normal).powi(2);
    let head = tangential.iter().map(|v| 2.0 * v / den).collect();
    // 1 - |x|^2 written to keep accuracy near the unit sphere
    let last = ((1.0 - normal) * (1.0 + normal) - t2) / den;
    (head, last)
}

pub fn to_ball(x: &HalfSpacePoint) -> BallPoint {
    let (mut y, last) = apply(&x.x_tangential, x.x_normal);
    y.push(last);
    BallPoint { y }
}

pub fn from_ball(y: &BallPoint) -> Result<HalfSpacePoint> {
    let (head, last) = y.y.split_at(y.y.len() - 1);
    let last = last[0];
    let dist_south: f64 =
        (head.iter().map(|v| v * v).sum::<f64>() + (1.0 + last).powi(2)).sqrt();
    if dist_south < 1e-10 {
        return Err(Error::Domain("point is the image of infinity".into()));
    }
    if y.norm() > 1.0 + 1e-12 {
        return Err(Error::Domain(format!("|y| = {} exceeds 1", y.norm())));
    }
    let (x_tangential, x_normal) = apply(head, last);
    Ok(HalfSpacePoint {
        x_tangential,
        x_normal: x_normal.max(0.0),
    })
}

/// |f'|(x) = 2/|x + e_N|^2 for the map to the ball.
pub fn conformal_factor(x: &HalfSpacePoint) -> f64 {
    2.0 / x.shifted_norm_sq()
}

/// Gap 1 - |y| of the image of the cylindrical point (r, x_N), computed
/// from 1 - |y|^2 = 4 x_N / |x + e_N|^2 without cancellation.
pub fn ball_gap(r: f64, xn: f64) -> (f64, f64) {
    let b2 = r * r + (1.0 + xn).powi(2);
    let q = 4.0 * xn / b2;
    let big_r = (r * r + (1.0 - xn).powi(2)).sqrt() / b2.sqrt();
    (q / (1.0 + big_r), big_r)
}

/// U(x) = 2^{(N-2)/2} |x + e_N|^{2-N} Ũ(|M(x)|).
pub fn pullback_profile(profile: &RadialProfile, x: &HalfSpacePoint, n: usize) -> Result<f64> {
    if x.dim() != n {
        return Err(Error::Domain(format!(
            "point has dimension {}, expected {n}",
            x.dim()
        )));
    }
    let r = x.tangential_sq().sqrt();
    Ok(pullback_cylindrical(profile, r, x.x_normal).u)
}

/// Value and cylindrical derivatives of a half-space function.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CylValues {
    pub u: f64,
    pub u_r: f64,
    pub u_x: f64,
}

/// Pullback together with its gradient in (r, x_N) via the chain rule
/// through the Möbius map, using the dense output of the profile.
pub fn pullback_cylindrical(profile: &RadialProfile, r: f64, xn: f64) -> CylValues {
    let n = profile.params.n as f64;
    let b2 = r * r + (1.0 + xn).powi(2);
    let (gap, big_r) = ball_gap(r, xn);
    let (ut, dut_over_r) = profile.eval_gap_with_ratio(gap);
    let c = 2f64.powf((n - 2.0) / 2.0);
    let bpow = b2.powf(-(n - 2.0) / 2.0);
    let u = c * bpow * ut;
    // R dR = [r(1-R^2), (x-1) - R^2 (x+1)] / B^2
    let r2 = big_r * big_r;
    let one_m_r2 = 4.0 * xn / b2;
    let dr_r = dut_over_r * r * one_m_r2 / b2;
    let dr_x = dut_over_r * ((xn - 1.0) - r2 * (xn + 1.0)) / b2;
    let u_r = c * bpow * (dr_r - (n - 2.0) * r / b2 * ut);
    let u_x = c * bpow * (dr_x - (n - 2.0) * (1.0 + xn) / b2 * ut);
    CylValues { u, u_r, u_x }
}
