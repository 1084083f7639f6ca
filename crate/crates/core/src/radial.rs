//! Radial profile Ũ on the unit ball:
//! Ũ'' + (N-1)Ũ'/r + 2^s Ũ^{p-1}/(1-r^2)^s = 0, Ũ'(0) = 0, Ũ(1) = 0.
//!
//! Shooting on a = Ũ(0). Up to r = 0.9 the ODE is integrated in r; past that
//! point the independent variable is τ = -ln(1-r), which turns the linear
//! vanishing of Ũ at the boundary into exponential decay and keeps the
//! weight (1-r^2)^{-s} well resolved down to 1-r = 1e-12.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::{integrate, Control, Tolerance};
use crate::params::{Family, ProblemParams};

const START_H: f64 = 1e-4;
const SWITCH_R: f64 = 0.9;
const END_GAP: f64 = 1e-12;
const BACKFILL_GAP: f64 = 1e-3;
const R_HMAX: f64 = 0.01;
const TAU_HMAX: f64 = 0.05;
const A_MIN: f64 = 1e-3;
const A_MAX: f64 = 1e12;
const BISECTION_BUDGET: usize = 200;
const STEP_BUDGET: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileSource {
    ClosedForm,
    Shooting,
}

impl ProfileSource {
    pub fn tag(self) -> &'static str {
        match self {
            ProfileSource::ClosedForm => "closed_form",
            ProfileSource::Shooting => "shooting",
        }
    }
}

/// One bisection probe: shooting parameter and whether it overshot.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Probe {
    pub a: f64,
    pub overshoot: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RadialProfile {
    pub params: ProblemParams,
    pub grid: Vec<f64>,
    /// 1 - r at each node, kept separately so that nodes near r = 1 are exact.
    pub gaps: Vec<f64>,
    pub values: Vec<f64>,
    pub derivs: Vec<f64>,
    /// Ũ'' at the nodes (from the ODE), used by the quintic dense output.
    #[serde(skip)]
    second: Vec<f64>,
    pub shoot_param: f64,
    pub boundary_slope: f64,
    pub source: ProfileSource,
    /// Extrapolated Ũ(1) of the final trajectory.
    pub boundary_value: f64,
    pub probes: Vec<Probe>,
}

fn forcing(params: &ProblemParams, u: f64, gap: f64) -> f64 {
    let q = gap * (2.0 - gap);
    2f64.powf(params.s) * u.abs().powf(params.p - 2.0) * u / q.powf(params.s)
}

/// Ũ'' from the ODE at r = 1 - gap (r > 0).
fn second_derivative(params: &ProblemParams, r: f64, gap: f64, u: f64, v: f64) -> f64 {
    -(params.n_f() - 1.0) * v / r - forcing(params, u, gap)
}

// closed forms in terms of the gap, returning (Ũ, Ũ'/r)
fn closed_eval(params: &ProblemParams, gap: f64) -> (f64, f64) {
    let n = params.n_f();
    let q = gap * (2.0 - gap);
    match params.family {
        Family::TwoOverN => {
            let c = n.powf(n / 2.0);
            (0.5 * c * q, -c)
        }
        Family::FourOverN => {
            let c = (n * (n + 2.0)).powf(n / 4.0);
            let w = 2.0 - q;
            let u = 0.5 * c * q * w.powf(-n / 2.0);
            let ratio = -c * w.powf(-n / 2.0 - 1.0) * (w + 0.5 * n * q);
            (u, ratio)
        }
        Family::General => unreachable!("closed form requested for general params"),
    }
}

fn closed_shoot_param(params: &ProblemParams) -> f64 {
    closed_eval(params, 1.0).0
}

pub fn closed_form_profile(params: &ProblemParams) -> Option<RadialProfile> {
    if params.family == Family::General {
        return None;
    }
    let m = 400;
    let mut grid = Vec::with_capacity(m + 1);
    let mut gaps = Vec::with_capacity(m + 1);
    let mut values = Vec::with_capacity(m + 1);
    let mut derivs = Vec::with_capacity(m + 1);
    let mut second = Vec::with_capacity(m + 1);
    for i in 0..=m {
        let t = std::f64::consts::FRAC_PI_2 * i as f64 / m as f64;
        let r = t.sin().powi(2);
        let g = t.cos().powi(2);
        let (u, ratio) = closed_eval(params, g);
        grid.push(r);
        gaps.push(g);
        values.push(u);
        derivs.push(ratio * r);
        second.push(0.0);
    }
    grid[m] = 1.0;
    gaps[m] = 0.0;
    values[m] = 0.0;
    let a = closed_shoot_param(params);
    let slope = derivs[m];
    Some(RadialProfile {
        params: *params,
        grid,
        gaps,
        values,
        derivs,
        second,
        shoot_param: a,
        boundary_slope: slope,
        source: ProfileSource::ClosedForm,
        boundary_value: 0.0,
        probes: Vec::new(),
    })
}

struct Trajectory {
    overshoot: bool,
    // nodes as (r, gap, u, u')
    nodes: Vec<[f64; 4]>,
    end: [f64; 4],
}

fn rtol_for(tol: f64) -> f64 {
    (tol * 1e-4).clamp(1e-13, 1e-8)
}

fn run(params: &ProblemParams, a: f64, rtol: f64, record: bool) -> Result<Trajectory> {
    let n = params.n_f();
    let two_s = 2f64.powf(params.s);
    let c = two_s * a.powf(params.p - 1.0);
    let tol = Tolerance {
        rtol,
        atol: 1e-30 * a,
    };
    let mut nodes = Vec::new();
    if record {
        nodes.push([0.0, 1.0, a, 0.0]);
    }
    // series Ũ = a + b r^2 + d r^4 + O(r^6)
    let h = START_H;
    let b = -c / (2.0 * n);
    let d = -(two_s * (params.p - 1.0) * a.powf(params.p - 2.0) * b + params.s * c)
        / (4.0 * (n + 2.0));
    let u0 = a + b * h * h + d * h.powi(4);
    let v0 = 2.0 * b * h + 4.0 * d * h.powi(3);
    if record {
        nodes.push([h, 1.0 - h, u0, v0]);
    }
    let mut overshoot = false;
    let fr = |r: f64, y: &[f64; 2]| {
        [y[1], second_derivative(params, r, 1.0 - r, y[0], y[1])]
    };
    let first = integrate(&fr, h, [u0, v0], SWITCH_R, 1e-3, R_HMAX, tol, STEP_BUDGET, |r, y| {
        if y[0] <= 0.0 {
            overshoot = true;
            return Control::Stop;
        }
        if record {
            nodes.push([r, 1.0 - r, y[0], y[1]]);
        }
        Control::Continue
    })
    .map_err(|k| Error::Budget(format!("{k} steps before r = {SWITCH_R}")))?;
    if overshoot {
        let y = first.y;
        return Ok(Trajectory {
            overshoot,
            nodes,
            end: [first.t, 1.0 - first.t, y[0], y[1]],
        });
    }
    // τ = -ln(1 - r); d/dτ = gap d/dr
    let ft = |tau: f64, y: &[f64; 2]| {
        let g = (-tau).exp();
        let r = 1.0 - g;
        [g * y[1], g * second_derivative(params, r, g, y[0], y[1])]
    };
    let t0 = -(1.0 - SWITCH_R).ln();
    let t1 = -END_GAP.ln();
    let second = integrate(&ft, t0, first.y, t1, 1e-2, TAU_HMAX, tol, STEP_BUDGET, |tau, y| {
        if y[0] <= 0.0 {
            overshoot = true;
            return Control::Stop;
        }
        if record {
            let g = (-tau).exp();
            nodes.push([1.0 - g, g, y[0], y[1]]);
        }
        Control::Continue
    })
    .map_err(|k| Error::Budget(format!("{k} steps in the boundary layer")))?;
    let g = (-second.t).exp();
    let y = second.y;
    if !overshoot {
        // linear extrapolation to r = 1 decides the remaining cases
        overshoot = y[0] + g * y[1] <= 0.0;
    }
    Ok(Trajectory {
        overshoot,
        nodes,
        end: [1.0 - g, g, y[0], y[1]],
    })
}

pub fn shoot(params: &ProblemParams, tol: f64) -> Result<RadialProfile> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParams(format!("tol = {tol} must be positive")));
    }
    let rtol = rtol_for(tol);
    let mut probes = Vec::new();
    let classify = |a: f64, probes: &mut Vec<Probe>| -> Result<bool> {
        let o = run(params, a, rtol, false)?.overshoot;
        probes.push(Probe { a, overshoot: o });
        Ok(o)
    };
    // log scan for a bracket
    let mut a = 1.0;
    let first = classify(a, &mut probes)?;
    let (mut lo, mut hi);
    if first {
        hi = a;
        loop {
            a /= 10.0;
            if a < A_MIN {
                return Err(Error::NoBracket { lo: A_MIN, hi: A_MAX });
            }
            if !classify(a, &mut probes)? {
                lo = a;
                break;
            }
            hi = a;
        }
    } else {
        lo = a;
        loop {
            a *= 10.0;
            if a > A_MAX {
                return Err(Error::NoBracket { lo: A_MIN, hi: A_MAX });
            }
            if classify(a, &mut probes)? {
                hi = a;
                break;
            }
            lo = a;
        }
    }
    let mut count = probes.len();
    while (hi - lo) > 4.0 * f64::EPSILON * hi {
        if count >= BISECTION_BUDGET {
            return Err(Error::Budget(format!("{count} shooting probes")));
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if classify(mid, &mut probes)? {
            hi = mid;
        } else {
            lo = mid;
        }
        count += 1;
    }
    // final trajectory on the undershoot side keeps Ũ > 0 on [0, 1)
    let traj = run(params, lo, rtol, true)?;
    let mut nodes = traj.nodes;
    let [_, g_end, u_end, v_end] = traj.end;
    let n = params.n_f();
    let k0 = -v_end;
    let tail = k0.powf(params.p - 1.0) * g_end.powf(params.p - params.s)
        / (params.p - params.s);
    let slope = (1.0 - g_end).powf(n - 1.0) * v_end - tail;
    nodes.push([1.0, 0.0, 0.0, slope]);
    let m = nodes.len();
    // Near r = 1 the integrated Ũ carries an absolute error comparable to Ũ
    // itself, while Ũ' stays accurate; rebuild Ũ there from Ũ' backwards.
    let w_at = |nd: &[f64; 4]| second_derivative(params, nd[0], nd[1], nd[2], nd[3]);
    let mut u_next = 0.0;
    for i in (0..m - 1).rev() {
        if nodes[i][1] >= BACKFILL_GAP {
            break;
        }
        let (a, b) = (nodes[i], nodes[i + 1]);
        let len = a[1] - b[1];
        let mut inc = 0.5 * len * (a[3] + b[3]);
        if i + 2 < m {
            inc += len * len * (w_at(&a) - w_at(&b)) / 12.0;
        }
        u_next -= inc;
        nodes[i][2] = u_next;
    }
    let mut grid = Vec::with_capacity(m);
    let mut gaps = Vec::with_capacity(m);
    let mut values = Vec::with_capacity(m);
    let mut derivs = Vec::with_capacity(m);
    let mut second = Vec::with_capacity(m);
    for (i, nd) in nodes.iter().enumerate() {
        grid.push(nd[0]);
        gaps.push(nd[1]);
        values.push(nd[2]);
        derivs.push(nd[3]);
        let w = if i == 0 {
            -2f64.powf(params.s) * lo.powf(params.p - 1.0) / n
        } else if i == m - 1 {
            0.0
        } else {
            second_derivative(params, nd[0], nd[1], nd[2], nd[3])
        };
        second.push(w);
    }
    Ok(RadialProfile {
        params: *params,
        grid,
        gaps,
        values,
        derivs,
        second,
        shoot_param: lo,
        boundary_slope: slope,
        source: ProfileSource::Shooting,
        boundary_value: u_end + g_end * v_end,
        probes,
    })
}

/// Closed form when available, shooting otherwise.
pub fn solve(params: &ProblemParams, tol: f64) -> Result<RadialProfile> {
    match closed_form_profile(params) {
        Some(p) => Ok(p),
        None => shoot(params, tol),
    }
}

impl RadialProfile {
    /// (Ũ(r), Ũ'(r)).
    pub fn evaluate(&self, r: f64) -> Result<(f64, f64)> {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::Domain(format!("r = {r} outside [0, 1]")));
        }
        let (u, ratio) = self.eval_gap_with_ratio(1.0 - r);
        Ok((u, ratio * r))
    }

    /// (Ũ, Ũ') at r = 1 - gap.
    pub fn eval_gap(&self, gap: f64) -> (f64, f64) {
        let (u, ratio) = self.eval_gap_with_ratio(gap);
        (u, ratio * (1.0 - gap))
    }

    /// (Ũ, Ũ'/r) at r = 1 - gap; the ratio stays finite at the center.
    pub fn eval_gap_with_ratio(&self, gap: f64) -> (f64, f64) {
        let gap = gap.clamp(0.0, 1.0);
        if self.source == ProfileSource::ClosedForm {
            return closed_eval(&self.params, gap);
        }
        let r = 1.0 - gap;
        let m = self.grid.len();
        // segment index i with node i at or before the query
        let i = if r < 0.5 {
            self.grid.partition_point(|&x| x <= r).saturating_sub(1)
        } else {
            self.gaps.partition_point(|&g| g >= gap).saturating_sub(1)
        }
        .min(m - 2);
        let (dx, t) = if r < 0.5 {
            let dx = self.grid[i + 1] - self.grid[i];
            (dx, (r - self.grid[i]) / dx)
        } else {
            let dx = self.gaps[i] - self.gaps[i + 1];
            (dx, (self.gaps[i] - gap) / dx)
        };
        let (u, du) = if i + 2 == m {
            // boundary segment: cubic Hermite, Ũ'' is unbounded at r = 1
            hermite3(
                [self.values[i], self.values[i + 1]],
                [self.derivs[i], self.derivs[i + 1]],
                dx,
                t,
            )
        } else {
            hermite5(
                [self.values[i], self.values[i + 1]],
                [self.derivs[i], self.derivs[i + 1]],
                [self.second[i], self.second[i + 1]],
                dx,
                t,
            )
        };
        if r == 0.0 {
            return (u, self.second[0]);
        }
        (u, du / r)
    }

    /// Ũ'' at r from the ODE (r > 0), or its limit at the center.
    pub fn second_derivative(&self, r: f64) -> Result<f64> {
        let (u, du) = self.evaluate(r)?;
        if r == 0.0 {
            return Ok(-2f64.powf(self.params.s) * u.powf(self.params.p - 1.0)
                / self.params.n_f());
        }
        Ok(second_derivative(&self.params, r, 1.0 - r, u, du))
    }

    /// ODE residual in integrated (flux) form,
    /// max over nodes in (0, 1-1e-6] of |r^{N-1}Ũ'(r) + F(r)| / F(r) with
    /// F(r) = ∫_0^r 2^s t^{N-1} Ũ^{p-1} (1-t^2)^{-s} dt.
    pub fn ode_residual(&self) -> f64 {
        let n = self.params.n_f();
        let (gx, gw) = crate::quad::gauss_legendre(8);
        let mut flux = 0.0;
        let mut worst = 0.0f64;
        for i in 0..self.grid.len() - 1 {
            let (g0, g1) = (self.gaps[i], self.gaps[i + 1]);
            if g1 < 1e-6 {
                break;
            }
            let (r0, r1) = (self.grid[i], self.grid[i + 1]);
            let small = r1 < 0.5;
            let mut seg = 0.0;
            for (x, w) in gx.iter().zip(&gw) {
                let t = 0.5 * (1.0 + x);
                let (r, gap) = if small {
                    let r = r0 + t * (r1 - r0);
                    (r, 1.0 - r)
                } else {
                    let gap = g0 - t * (g0 - g1);
                    (1.0 - gap, gap)
                };
                let (u, _) = self.eval_gap_with_ratio(gap);
                seg += w * r.powf(n - 1.0) * forcing(&self.params, u, gap);
            }
            let len = if small { r1 - r0 } else { g0 - g1 };
            flux += 0.5 * len * seg;
            let r = self.grid[i + 1];
            let res = (r.powf(n - 1.0) * self.derivs[i + 1] + flux).abs() / flux;
            worst = worst.max(res);
        }
        worst
    }

    /// Number of interior critical points of (1+r)^{N-2} Ũ(r) on (0, 1),
    /// counted as sign changes of its derivative on a fine sample.
    pub fn critical_point_count(&self) -> usize {
        let n = self.params.n_f();
        let mut count = 0;
        let mut prev: Option<f64> = None;
        for k in 1..4000 {
            let r = k as f64 / 4000.0;
            let (u, du) = self.eval_gap(1.0 - r);
            let d = (n - 2.0) * (1.0 + r).powf(n - 3.0) * u + (1.0 + r).powf(n - 2.0) * du;
            if let Some(pv) = prev {
                if pv * d < 0.0 {
                    count += 1;
                }
            }
            if d != 0.0 {
                prev = Some(d);
            }
        }
        count
    }
}

fn hermite3(y: [f64; 2], d: [f64; 2], h: f64, t: f64) -> (f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    let u = h00 * y[0] + h10 * h * d[0] + h01 * y[1] + h11 * h * d[1];
    let dh00 = 6.0 * t2 - 6.0 * t;
    let dh10 = 3.0 * t2 - 4.0 * t + 1.0;
    let dh01 = -6.0 * t2 + 6.0 * t;
    let dh11 = 3.0 * t2 - 2.0 * t;
    let du = (dh00 * y[0] + dh01 * y[1]) / h + dh10 * d[0] + dh11 * d[1];
    (u, du)
}

fn hermite5(y: [f64; 2], d: [f64; 2], dd: [f64; 2], h: f64, t: f64) -> (f64, f64) {
    let (u, du, _) = hermite5_full(y, d, dd, h, t);
    (u, du)
}

/// Quintic Hermite interpolation on a segment of length h, local t in [0, 1].
fn hermite5_full(y: [f64; 2], d: [f64; 2], dd: [f64; 2], h: f64, t: f64) -> (f64, f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let b = [
        1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5,
        t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5,
        0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5),
        0.5 * (t3 - 2.0 * t4 + t5),
        -4.0 * t3 + 7.0 * t4 - 3.0 * t5,
        10.0 * t3 - 15.0 * t4 + 6.0 * t5,
    ];
    let db = [
        -30.0 * t2 + 60.0 * t3 - 30.0 * t4,
        1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4,
        0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4),
        0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4),
        -12.0 * t2 + 28.0 * t3 - 15.0 * t4,
        30.0 * t2 - 60.0 * t3 + 30.0 * t4,
    ];
    let ddb = [
        -60.0 * t + 180.0 * t2 - 120.0 * t3,
        -36.0 * t + 96.0 * t2 - 60.0 * t3,
        0.5 * (2.0 - 18.0 * t + 36.0 * t2 - 20.0 * t3),
        0.5 * (6.0 * t - 24.0 * t2 + 20.0 * t3),
        -24.0 * t + 84.0 * t2 - 60.0 * t3,
        60.0 * t - 180.0 * t2 + 120.0 * t3,
    ];
    let c = [
        y[0],
        h * d[0],
        h * h * dd[0],
        h * h * dd[1],
        h * d[1],
        y[1],
    ];
    let mut u = 0.0;
    let mut du = 0.0;
    let mut d2u = 0.0;
    for k in 0..6 {
        u += b[k] * c[k];
        du += db[k] * c[k];
        d2u += ddb[k] * c[k];
    }
    (u, du / h, d2u / (h * h))
}
