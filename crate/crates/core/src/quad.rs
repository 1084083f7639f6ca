//! Quadrature rules: Gauss–Legendre, and double-exponential rules
//! (tanh-sinh on finite intervals, exp-sinh on the half-line) refined by
//! halving the step until successive levels agree.

use rayon::prelude::*;
use std::f64::consts::FRAC_PI_2;

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Result of a refined double-exponential quadrature.
#[derive(Debug, Clone, Copy)]
pub struct DeResult<const K: usize> {
    pub value: [f64; K],
    pub error: [f64; K],
    /// Integral of |f| per component, the scale for relative tolerances.
    pub magnitude: [f64; K],
    pub levels: usize,
    pub converged: bool,
    /// Largest abscissa whose term mattered (exp-sinh only).
    pub reach: f64,
}

const TS_TMAX: f64 = 4.0;
const ES_TMAX: f64 = 4.5;
const MIN_LEVEL: usize = 3;

#[derive(Clone, Copy)]
struct Node {
    x: f64,
    da: f64,
    db: f64,
    w: f64,
}

fn ts_node(a: f64, b: f64, t: f64) -> Option<Node> {
    let half = 0.5 * (b - a);
    let u = FRAC_PI_2 * t.sinh();
    let ch = u.cosh();
    let w = half * FRAC_PI_2 * t.cosh() / (ch * ch);
    if !(w > 0.0) || !w.is_finite() {
        return None;
    }
    let (da, db) = if t < 0.0 {
        let da = half * u.exp() / ch;
        (da, (b - a) - da)
    } else {
        let db = half * (-u).exp() / ch;
        ((b - a) - db, db)
    };
    if da <= 0.0 || db <= 0.0 {
        return None;
    }
    let x = if t < 0.0 { a + da } else { b - db };
    Some(Node { x, da, db, w })
}

fn level_points(level: usize, tmax: f64) -> (f64, Vec<f64>) {
    let h = 0.5f64.powi(level as i32);
    let mut ts = Vec::new();
    if level == 0 {
        let m = tmax.floor() as i64;
        for j in -m..=m {
            ts.push(j as f64);
        }
    } else {
        let m = (tmax / h).floor() as i64;
        let mut j = -m;
        if j % 2 == 0 {
            j += 1;
        }
        while j <= m {
            ts.push(j as f64 * h);
            j += 2;
        }
    }
    (h, ts)
}

fn refine<const K: usize, E>(eval_level: E, tol: f64, max_level: usize) -> DeResult<K>
where
    E: Fn(usize) -> ([f64; K], [f64; K], f64),
{
    let mut sum = [0.0; K];
    let mut abs = [0.0; K];
    let mut prev = [0.0; K];
    let mut err = [f64::INFINITY; K];
    let mut reach = 0.0f64;
    for level in 0..=max_level {
        let h = 0.5f64.powi(level as i32);
        let (s, a, rch) = eval_level(level);
        reach = reach.max(rch);
        for c in 0..K {
            if level == 0 {
                sum[c] = s[c];
                abs[c] = a[c];
            } else {
                sum[c] += s[c];
                abs[c] += a[c];
            }
        }
        let value: [f64; K] = std::array::from_fn(|c| sum[c] * h);
        let mag: [f64; K] = std::array::from_fn(|c| abs[c] * h);
        if level > 0 {
            err = std::array::from_fn(|c| (value[c] - prev[c]).abs());
        }
        prev = value;
        if level >= MIN_LEVEL && (0..K).all(|c| err[c] <= tol * mag[c] || mag[c] == 0.0) {
            return DeResult {
                value,
                error: err,
                magnitude: mag,
                levels: level,
                converged: true,
                reach,
            };
        }
    }
    let h = 0.5f64.powi(max_level as i32);
    DeResult {
        value: prev,
        error: err,
        magnitude: std::array::from_fn(|c| abs[c] * h),
        levels: max_level,
        converged: false,
        reach,
    }
}

/// ∫_a^b f. The integrand receives (x, x - a, b - x) with both distances
/// accurate near the endpoints.
pub fn tanh_sinh<const K: usize, F>(a: f64, b: f64, f: F, tol: f64, max_level: usize) -> DeResult<K>
where
    F: Fn(f64, f64, f64) -> [f64; K],
{
    refine(
        |level| {
            let (_, ts) = level_points(level, TS_TMAX);
            let mut s = [0.0; K];
            let mut ab = [0.0; K];
            for t in ts {
                if let Some(nd) = ts_node(a, b, t) {
                    let v = f(nd.x, nd.da, nd.db);
                    for c in 0..K {
                        s[c] += nd.w * v[c];
                        ab[c] += nd.w * v[c].abs();
                    }
                }
            }
            (s, ab, 0.0)
        },
        tol,
        max_level,
    )
}

/// ∫_0^∞ f with x = exp(π/2 sinh t); new points of each level are evaluated
/// in parallel and summed in a fixed order.
pub fn exp_sinh<const K: usize, F>(f: F, tol: f64, max_level: usize) -> DeResult<K>
where
    F: Fn(f64) -> [f64; K] + Sync,
{
    refine(
        |level| {
            let (_, ts) = level_points(level, ES_TMAX);
            let terms: Vec<(f64, [f64; K])> = ts
                .par_iter()
                .map(|&t| {
                    let x = (FRAC_PI_2 * t.sinh()).exp();
                    let w = x * FRAC_PI_2 * t.cosh();
                    if x == 0.0 || !x.is_finite() {
                        return (x, [0.0; K]);
                    }
                    let v = f(x);
                    (x, std::array::from_fn(|c| w * v[c]))
                })
                .collect();
            let mut s = [0.0; K];
            let mut ab = [0.0; K];
            for (_, v) in &terms {
                for c in 0..K {
                    s[c] += v[c];
                    ab[c] += v[c].abs();
                }
            }
            let big = ab.iter().cloned().fold(0.0, f64::max);
            let reach = terms
                .iter()
                .filter(|(_, v)| v.iter().any(|c| c.abs() > 1e-16 * big))
                .map(|(x, _)| *x)
                .fold(0.0, f64::max);
            (s, ab, reach)
        },
        tol,
        max_level,
    )
}

/// Composite Gauss–Legendre on [a, b] with `panels` equal panels.
pub fn composite_gl<F: Fn(f64) -> f64>(a: f64, b: f64, panels: usize, rule: &(Vec<f64>, Vec<f64>), f: F) -> f64 {
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    for k in 0..panels {
        let c = a + (k as f64 + 0.5) * h;
        for (x, w) in rule.0.iter().zip(&rule.1) {
            s += w * f(c + 0.5 * h * x);
        }
    }
    0.5 * h * s
}
