use hslab::radial::solve;
use hslab::{closed_form_profile, make_params, shoot, Family, ParamSpec, ProblemParams, ProfileSource};

fn sample_max_diff(a: &hslab::RadialProfile, b: &hslab::RadialProfile) -> f64 {
    (0..=5000)
        .map(|k| {
            let r = k as f64 / 5000.0;
            (a.evaluate(r).unwrap().0 - b.evaluate(r).unwrap().0).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn closed_form_centre_values() {
    let q = make_params(3, ParamSpec::P(8.0 / 3.0)).unwrap();
    let c = closed_form_profile(&q).unwrap();
    assert_eq!(c.source, ProfileSource::ClosedForm);
    assert!((c.shoot_param - 0.5 * 27f64.sqrt()).abs() < 1e-12);

    let q = make_params(4, ParamSpec::P(3.0)).unwrap();
    assert!((closed_form_profile(&q).unwrap().shoot_param - 12.0).abs() < 1e-12);

    let q = make_params(3, ParamSpec::S(1.0)).unwrap();
    assert!((q.p - 4.0).abs() < 1e-14);
    assert!(closed_form_profile(&q).is_none());
}

#[test]
fn evaluate_examples() {
    let q = make_params(3, ParamSpec::Family(Family::TwoOverN)).unwrap();
    let c = closed_form_profile(&q).unwrap();
    let a = 0.5 * 27f64.sqrt();
    let (u, du) = c.evaluate(0.0).unwrap();
    assert!((u - a).abs() < 1e-12 && du == 0.0);
    let (u, du) = c.evaluate(1.0).unwrap();
    assert!(u.abs() < 1e-15 && (du - c.boundary_slope).abs() < 1e-12);
    let (u, du) = c.evaluate(0.5).unwrap();
    assert!((u - a * 0.75).abs() < 1e-12);
    assert!((du + a).abs() < 1e-12);
    assert!(c.evaluate(1.5).is_err());
}

#[test]
fn shooting_reproduces_closed_forms() {
    for (n, spec) in [(3, ParamSpec::S(5.0 / 3.0)), (4, ParamSpec::S(1.0))] {
        let q = make_params(n, spec).unwrap();
        let s = shoot(&q, 1e-8).unwrap();
        assert_eq!(s.source, ProfileSource::Shooting);
        let c = closed_form_profile(&q).unwrap();
        assert!(sample_max_diff(&s, &c) < 1e-7);
    }
}

// Newton on the second-order finite-difference discretization of
// Ũ'' + (N-1)/r Ũ' + 2^s Ũ^{p-1}/(1-r²)^s = 0, Ũ'(0) = 0, Ũ(1) = 0.
// Newton starts from `start`, only to select the positive solution.
fn collocation(q: &ProblemParams, m: usize, start: &dyn Fn(f64) -> f64) -> Vec<f64> {
    let n = q.n as f64;
    let h = 1.0 / m as f64;
    let mut u: Vec<f64> = (0..=m).map(|i| start(i as f64 * h)).collect();
    let weight: Vec<f64> = (0..m).map(|i| 2f64.powf(q.s) / (1.0 - (i as f64 * h).powi(2)).powf(q.s)).collect();
    for _ in 0..50 {
        // tridiagonal system on unknowns 0..m-1
        let mut lo = vec![0.0; m];
        let mut di = vec![0.0; m];
        let mut up = vec![0.0; m];
        let mut rhs = vec![0.0; m];
        for i in 0..m {
            let ui = u[i].max(0.0);
            let f = weight[i] * ui.powf(q.p - 1.0);
            let df = weight[i] * (q.p - 1.0) * ui.powf(q.p - 2.0);
            if i == 0 {
                // N Ũ''(0) with the ghost node u_{-1} = u_1
                let res = n * 2.0 * (u[1] - u[0]) / (h * h) + f;
                di[0] = -2.0 * n / (h * h) + df;
                up[0] = 2.0 * n / (h * h);
                rhs[0] = -res;
            } else {
                let r = i as f64 * h;
                let a = 1.0 / (h * h) - (n - 1.0) / (2.0 * r * h);
                let c = 1.0 / (h * h) + (n - 1.0) / (2.0 * r * h);
                let res = a * u[i - 1] - 2.0 * ui / (h * h) + c * u[i + 1] + f;
                lo[i] = a;
                di[i] = -2.0 / (h * h) + df;
                up[i] = if i + 1 < m { c } else { 0.0 };
                rhs[i] = -res;
            }
        }
        for i in 1..m {
            let w = lo[i] / di[i - 1];
            di[i] -= w * up[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        let mut du = vec![0.0; m];
        du[m - 1] = rhs[m - 1] / di[m - 1];
        for i in (0..m - 1).rev() {
            du[i] = (rhs[i] - up[i] * du[i + 1]) / di[i];
        }
        let step = du.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for i in 0..m {
            u[i] += du[i];
        }
        if step < 1e-13 * u[0] {
            break;
        }
    }
    u
}

#[test]
fn general_profile_against_collocation() {
    let q = make_params(3, ParamSpec::S(1.0)).unwrap();
    let s = shoot(&q, 1e-8).unwrap();
    assert!(s.shoot_param > 0.0);
    assert!(s.ode_residual() < 1e-8);
    assert!(s.derivs[1..].iter().all(|&d| d < 0.0));

    // two grids and Richardson extrapolation for an O(h⁴) oracle
    let (m1, m2) = (2000, 4000);
    // the discrete solution does not depend on the start once Newton converges
    let start = |r: f64| s.evaluate(r).unwrap().0 * (1.0 + 0.05 * (3.0 * r).sin());
    let u1 = collocation(&q, m1, &start);
    let u2 = collocation(&q, m2, &start);
    let mut worst = 0.0f64;
    for i in 0..=m1 {
        let r = i as f64 / m1 as f64;
        let oracle = (4.0 * u2[2 * i] - u1[i]) / 3.0;
        worst = worst.max((s.evaluate(r).unwrap().0 - oracle).abs());
    }
    assert!(worst < 1e-5 * s.shoot_param, "max diff {worst}");
}

#[test]
fn profile_invariants() {
    let cases = [
        make_params(3, ParamSpec::S(0.5)).unwrap(),
        make_params(3, ParamSpec::S(1.5)).unwrap(),
        make_params(5, ParamSpec::S(1.0)).unwrap(),
        make_params(2, ParamSpec::P(2.5)).unwrap(),
        make_params(2, ParamSpec::P(6.0)).unwrap(),
    ];
    for q in cases {
        let s = shoot(&q, 1e-8).unwrap();
        assert!(s.values[..s.values.len() - 1].iter().all(|&u| u > 0.0));
        assert!(s.derivs[1..].iter().all(|&d| d < 0.0), "{q:?}");
        assert!(s.boundary_slope < 0.0);
        // Ṽ = 2Ũ/(1-r²) on the last 10 interior nodes, extrapolated linearly in the gap
        let m = s.grid.len() - 1;
        let pts: Vec<(f64, f64)> = (m - 10..m).map(|i| (s.gaps[i], 2.0 * s.values[i] / (s.gaps[i] * (2.0 - s.gaps[i])))).collect();
        let k = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
        let sxx: f64 = pts.iter().map(|(x, _)| (x - sx / k).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|(x, y)| (x - sx / k) * (y - sy / k)).sum();
        let limit = sy / k - sxy / sxx * sx / k;
        assert!((limit + s.boundary_slope).abs() < 1e-4 * (-s.boundary_slope), "{q:?}: {limit} vs {}", -s.boundary_slope);
        // overshoot classification is monotone in the shooting parameter
        let mut probes = s.probes.clone();
        probes.sort_by(|a, b| a.a.total_cmp(&b.a));
        let first_over = probes.iter().position(|p| p.overshoot).unwrap_or(probes.len());
        assert!(probes[first_over..].iter().all(|p| p.overshoot), "{q:?}");
        assert!(probes.iter().filter(|p| !p.overshoot).all(|p| p.a <= s.shoot_param * (1.0 + 1e-9)));
    }
}

#[test]
fn solve_prefers_closed_form() {
    let q = make_params(5, ParamSpec::Family(Family::FourOverN)).unwrap();
    assert_eq!(solve(&q, 1e-8).unwrap().source, ProfileSource::ClosedForm);
    let q = make_params(5, ParamSpec::S(0.7)).unwrap();
    assert_eq!(solve(&q, 1e-8).unwrap().source, ProfileSource::Shooting);
}
