use hslab::halfspace::{
    curvature_slope, discriminant_report, integrate_cylindrical, marques_check, mu_half_space, pohozaev_report,
};
use hslab::radial::solve;
use hslab::{make_params, sphere_area, Family, ParamSpec};
use std::f64::consts::PI;

#[test]
fn separable_gaussian() {
    let q = make_params(3, ParamSpec::S(1.0)).unwrap();
    let r = integrate_cylindrical(|r, x| (-r * r - x * x).exp(), &q, 1e-12).unwrap();
    // ω_1 · ∫ r e^{-r²} · ∫ e^{-x²} = 2π · 1/2 · √π/2
    let exact = sphere_area(1) * 0.5 * PI.sqrt() / 2.0;
    assert!((r.value - exact).abs() < 1e-10 * exact);
    assert!(r.error_estimate.is_finite() && r.truncation_radius > 0.0);
}

// U = √8·x₂/(1+|x|²) for N = 2, p = 4
fn u24(x1: f64, x2: f64) -> f64 {
    8f64.sqrt() * x2 / (1.0 + x1 * x1 + x2 * x2)
}

#[test]
fn weighted_integral_against_tensor_grid() {
    let q = make_params(2, ParamSpec::P(4.0)).unwrap();
    assert_eq!(q.family, Family::FourOverN);
    let lib = integrate_cylindrical(|r, x| x.powf(-q.s) * u24(r, x).powf(q.p), &q, 1e-12).unwrap();
    // 10⁴ × 10⁴ trapezoid on [0, 200]², doubled for x₁ < 0
    let m = 10_000;
    let h = 200.0 / m as f64;
    let mut total = 0.0;
    for i in 0..=m {
        let x1 = i as f64 * h;
        let wi = if i == 0 || i == m { 0.5 } else { 1.0 };
        let mut row = 0.0;
        for j in 1..=m {
            let x2 = j as f64 * h;
            let wj = if j == m { 0.5 } else { 1.0 };
            // x₂^{-2} U⁴ = 64 x₂² / (1+|x|²)⁴, vanishing at x₂ = 0
            let d = 1.0 + x1 * x1 + x2 * x2;
            row += wj * 64.0 * x2 * x2 / (d * d * d * d);
        }
        total += wi * row;
    }
    let grid = 2.0 * total * h * h;
    assert!((lib.value - grid).abs() < 1e-6 * grid, "{} vs {grid}", lib.value);
    assert!((lib.value - 8.0 * PI / 3.0).abs() < 1e-9);
}

#[test]
fn dual_forms_of_mu() {
    for p in [3.0, 4.0] {
        let q = make_params(2, ParamSpec::P(p)).unwrap();
        let prof = solve(&q, 1e-8).unwrap();
        let mu = mu_half_space(&q, &prof, 1e-10).unwrap();
        assert!((mu.mu - mu.mu_weighted_form).abs() < 1e-6 * mu.mu);
        assert!(mu.duality_gap < 1e-6);
        let e = mu.mu.powf(p / (p - 2.0));
        assert!((e - mu.energy.value).abs() < 1e-6 * e && (e - mu.weighted.value).abs() < 1e-6 * e);
    }
    // the N = 2, p = 3 energy is 2π
    let q = make_params(2, ParamSpec::P(3.0)).unwrap();
    let mu = mu_half_space(&q, &solve(&q, 1e-8).unwrap(), 1e-10).unwrap();
    assert!((mu.energy.value - 2.0 * PI).abs() < 1e-8);
}

#[test]
fn pohozaev_examples() {
    let q = make_params(3, ParamSpec::S(5.0 / 3.0)).unwrap();
    let r = pohozaev_report(&q, &solve(&q, 1e-8).unwrap(), 1e-10).unwrap();
    assert!((r.i1 / r.i2 + 0.4375).abs() < 1e-6);

    let q = make_params(2, ParamSpec::P(4.0)).unwrap();
    let r = pohozaev_report(&q, &solve(&q, 1e-8).unwrap(), 1e-10).unwrap();
    assert!(r.i1.abs() / r.i2 < 1e-6);

    let q = make_params(3, ParamSpec::S(1.0)).unwrap();
    let r = pohozaev_report(&q, &solve(&q, 1e-8).unwrap(), 1e-10).unwrap();
    assert!(r.residual_main < 1e-4);
}

#[test]
fn explicit_families_satisfy_all_identities() {
    for fam in [Family::TwoOverN, Family::FourOverN] {
        for n in 2..=10 {
            let q = make_params(n, ParamSpec::Family(fam)).unwrap();
            let prof = solve(&q, 1e-8).unwrap();
            let r = pohozaev_report(&q, &prof, 1e-10).unwrap();
            assert!(r.max_residual() < 1e-6, "{fam:?} N={n}: {r:?}");
            let mu = mu_half_space(&q, &prof, 1e-10).unwrap();
            assert!(mu.duality_gap < 1e-6);
        }
    }
}

#[test]
fn slope_examples() {
    let q = make_params(3, ParamSpec::S(5.0 / 3.0)).unwrap();
    let r = curvature_slope(&q, &solve(&q, 1e-8).unwrap(), 1e-10).unwrap();
    assert!((r.slope / r.i2 - 0.3125).abs() < 1e-6);

    let q = make_params(2, ParamSpec::P(4.0)).unwrap();
    let r = curvature_slope(&q, &solve(&q, 1e-8).unwrap(), 1e-10).unwrap();
    assert!((r.slope / r.i2 - 0.5).abs() < 1e-6);

    for (n, s) in [(3, 0.3), (4, 1.7), (6, 1.0)] {
        let q = make_params(n, ParamSpec::S(s)).unwrap();
        let r = curvature_slope(&q, &solve(&q, 1e-8).unwrap(), 1e-10).unwrap();
        assert!(r.slope > 0.0 && r.relative_gap < 1e-6);
    }
}

#[test]
fn discriminant_examples() {
    let q = make_params(18, ParamSpec::Family(Family::TwoOverN)).unwrap();
    let r = discriminant_report(&q, 1e-11).unwrap();
    assert!(r.d > 0.0 && r.attainable);

    let q = make_params(17, ParamSpec::Family(Family::TwoOverN)).unwrap();
    let r = discriminant_report(&q, 1e-11).unwrap();
    assert!(r.d < 0.0 && !r.attainable);

    let q = make_params(5, ParamSpec::Family(Family::FourOverN)).unwrap();
    let r = discriminant_report(&q, 1e-11).unwrap();
    assert!(r.d < 0.0 && !r.attainable);
    assert!(r.const_coeff_alt.is_finite());

    let q = make_params(5, ParamSpec::S(1.0)).unwrap();
    assert!(discriminant_report(&q, 1e-11).is_err());
}

#[test]
fn discriminant_matches_printed_forms() {
    for (fam, ns) in [(Family::TwoOverN, vec![10, 17, 18, 30]), (Family::FourOverN, vec![3, 5, 10])] {
        for n in ns {
            let q = make_params(n, ParamSpec::Family(fam)).unwrap();
            let r = discriminant_report(&q, 1e-11).unwrap();
            assert!(r.d_rel_error < 1e-6 && r.const_rel_error < 1e-6, "{fam:?} N={n}: {r:?}");
            // attainable exactly when the A-quadratic dips below zero
            assert_eq!(r.attainable, r.min_value < 0.0);
        }
    }
}

#[test]
fn threshold_scan() {
    for n in 3..=40 {
        let q = make_params(n, ParamSpec::Family(Family::TwoOverN)).unwrap();
        let r = discriminant_report(&q, 1e-11).unwrap();
        assert_eq!(r.attainable, n >= 18, "N={n}");
    }
}

#[test]
fn trace_free_angular_identity() {
    for n in [3, 4, 5] {
        let (lhs, rhs) = marques_check(n).unwrap();
        assert!((lhs - rhs).abs() < 1e-8 * rhs, "N={n}: {lhs} vs {rhs}");
    }
}
