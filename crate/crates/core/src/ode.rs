//! Dormand–Prince 5(4) embedded Runge–Kutta pair with step-size control.

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

/// One trial step; returns the fifth-order solution and a scaled error norm.
pub fn dp_step<const D: usize, F>(
    f: &F,
    t: f64,
    y: &[f64; D],
    h: f64,
    tol: Tolerance,
) -> ([f64; D], f64)
where
    F: Fn(f64, &[f64; D]) -> [f64; D],
{
    let mut k = [[0.0; D]; 7];
    k[0] = f(t, y);
    for s in 1..7 {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            let a = A[s][j];
            if a != 0.0 {
                for d in 0..D {
                    ys[d] += h * a * kj[d];
                }
            }
        }
        k[s] = f(t + C[s] * h, &ys);
    }
    let mut y5 = *y;
    let mut err = 0.0f64;
    for d in 0..D {
        let mut hi = 0.0;
        let mut lo = 0.0;
        for s in 0..7 {
            hi += B5[s] * k[s][d];
            lo += B4[s] * k[s][d];
        }
        y5[d] += h * hi;
        let sc = tol.atol + tol.rtol * y[d].abs().max(y5[d].abs());
        err = err.max((h * (hi - lo)).abs() / sc);
    }
    (y5, err)
}

pub enum Control {
    Continue,
    Stop,
}

pub struct Outcome<const D: usize> {
    pub t: f64,
    pub y: [f64; D],
    pub steps: usize,
    pub stopped: bool,
}

/// Integrates from t0 to t1 (t1 > t0). `on_step` sees every accepted step and
/// may stop the integration early.
pub fn integrate<const D: usize, F, G>(
    f: &F,
    t0: f64,
    y0: [f64; D],
    t1: f64,
    h0: f64,
    hmax: f64,
    tol: Tolerance,
    max_steps: usize,
    mut on_step: G,
) -> Result<Outcome<D>, usize>
where
    F: Fn(f64, &[f64; D]) -> [f64; D],
    G: FnMut(f64, &[f64; D]) -> Control,
{
    let mut t = t0;
    let mut y = y0;
    let mut h = h0.min(t1 - t0);
    let mut steps = 0;
    while t < t1 {
        if steps >= max_steps {
            return Err(steps);
        }
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        let (yn, err) = dp_step(f, t, &y, h, tol);
        steps += 1;
        if err <= 1.0 && yn.iter().all(|v| v.is_finite()) {
            t = if last { t1 } else { t + h };
            y = yn;
            if let Control::Stop = on_step(t, &y) {
                return Ok(Outcome {
                    t,
                    y,
                    steps,
                    stopped: true,
                });
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h * fac).min(hmax);
        } else {
            let fac = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.5) } else { 0.1 };
            h *= fac;
        }
    }
    Ok(Outcome {
        t,
        y,
        steps,
        stopped: false,
    })
}
