use hslab::radial::solve;
use hslab::spectral::{mode_eigens, nondegeneracy_certificate, weight_fn, xi_residual, ModeProblem};
use hslab::{closed_form_profile, make_params, Family, ParamSpec, RadialProfile};

fn explicit(n: usize, fam: Family) -> RadialProfile {
    closed_form_profile(&make_params(n, ParamSpec::Family(fam)).unwrap()).unwrap()
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

#[test]
fn weight_values() {
    let prof = explicit(3, Family::TwoOverN);
    let q = prof.params;
    let w0 = weight_fn(&q, &prof, 0.0).unwrap();
    let direct = 2f64.powf(q.s) * prof.shoot_param.powf(q.p - 2.0);
    assert!((w0 - direct).abs() < 1e-12 * direct);
    assert!((w0 - 6.0).abs() < 1e-9);
    assert!(weight_fn(&q, &prof, 1.0).is_err());
    for i in 0..1000 {
        assert!(weight_fn(&q, &prof, i as f64 / 1000.0).unwrap() > 0.0);
    }
}

// ∫_a^b ρ̃ r^{N-1} by midpoint sums on a grid graded toward b
fn weighted_mass(prof: &RadialProfile, a: f64, b: f64) -> f64 {
    let q = prof.params;
    let m = 20_000;
    (0..m)
        .map(|i| {
            let t = (i as f64 + 0.5) / m as f64;
            let r = b - (b - a) * (1.0 - t).powi(2);
            weight_fn(&q, prof, r).unwrap() * r.powi(q.n as i32 - 1) * 2.0 * (b - a) * (1.0 - t) / m as f64
        })
        .sum()
}

#[test]
fn weight_tail_four_over_n() {
    // ρ̃ ~ (1-r)^{p-2-s} and p - 2 - s = 0 here
    for n in [2, 3, 5] {
        let prof = explicit(n, Family::FourOverN);
        let total = weighted_mass(&prof, 0.0, 1.0);
        let tail = weighted_mass(&prof, 0.999, 1.0);
        assert!(tail < 1e-2 * total, "N={n}: {tail} of {total}");
    }
}

#[test]
fn weight_two_over_n_grows_like_inverse_gap() {
    // p - 2 - s = -1: (1-r)ρ̃ has a finite limit and each decade in the gap
    // carries the same mass, so ∫ρ̃ r^{N-1} diverges logarithmically
    for n in [2, 3, 5] {
        let prof = explicit(n, Family::TwoOverN);
        let q = prof.params;
        let lim: Vec<f64> = [1e-4, 1e-6, 1e-8]
            .iter()
            .map(|&g| g * weight_fn(&q, &prof, 1.0 - g).unwrap())
            .collect();
        assert!((lim[0] / lim[2] - 1.0).abs() < 1e-3 && (lim[1] / lim[2] - 1.0).abs() < 1e-5);
        let d1 = weighted_mass(&prof, 1.0 - 1e-3, 1.0 - 1e-4);
        let d2 = weighted_mass(&prof, 1.0 - 1e-5, 1.0 - 1e-6);
        assert!((d1 / d2 - 1.0).abs() < 1e-2, "N={n}: {d1} vs {d2}");
    }
}

#[test]
fn lowest_modes_of_the_three_dimensional_family() {
    let prof = explicit(3, Family::TwoOverN);
    let p = prof.params.p;

    let r0 = mode_eigens(&ModeProblem::new(&prof, 0, 800), 2).unwrap();
    assert!((r0.eigenvalues[0] - 1.0).abs() < 1e-4);
    let u: Vec<f64> = r0.grid.iter().map(|&r| prof.evaluate(r).unwrap().0).collect();
    assert!(cosine(&r0.eigenfunction_samples, &u).abs() > 0.9999);

    let r1 = mode_eigens(&ModeProblem::new(&prof, 1, 800), 2).unwrap();
    assert!((r1.eigenvalues[0] - 5.0 / 3.0).abs() < 1e-4);
    assert!((p - 1.0 - 5.0 / 3.0).abs() < 1e-14);
    assert!(r1.reference_similarity.unwrap() > 0.999);

    let r2 = mode_eigens(&ModeProblem::new(&prof, 2, 800), 2).unwrap();
    assert!(r2.eigenvalues[0] > p - 1.0 + 1e-4);
}

#[test]
fn spectrum_properties() {
    for fam in [Family::TwoOverN, Family::FourOverN] {
        let prof = explicit(3, fam);
        let mut last = 0.0;
        for k in 0..4 {
            let fine = mode_eigens(&ModeProblem::new(&prof, k, 800), 3).unwrap();
            let coarse = mode_eigens(&ModeProblem::new(&prof, k, 400), 3).unwrap();
            assert!((fine.eigenvalues[0] - coarse.eigenvalues[0]).abs() < 1e-5);
            assert!(fine.asymmetry < 1e-13 && coarse.asymmetry < 1e-13);
            assert!(fine.eigenvalues.windows(2).all(|w| w[0] < w[1]));
            assert_eq!(fine.sign_changes, [0, 1], "{fam:?} k={k}");
            assert!(fine.eigenvalues[0] > last);
            last = fine.eigenvalues[0];
            assert_eq!(fine.mode.mu_k, (k * (k + 1)) as f64);
        }
    }
}

#[test]
fn xi_solves_the_first_mode_equation() {
    assert!(xi_residual(&explicit(3, Family::TwoOverN).params, &explicit(3, Family::TwoOverN)) < 1e-6);
    let p4 = explicit(4, Family::FourOverN);
    assert!(xi_residual(&p4.params, &p4) < 1e-6);
    let q = make_params(3, ParamSpec::S(1.0)).unwrap();
    let prof = solve(&q, 1e-8).unwrap();
    assert!(xi_residual(&q, &prof) < 1e-3);
}

#[test]
fn certificates() {
    for (n, fam) in [(3, Family::TwoOverN), (4, Family::FourOverN), (2, Family::TwoOverN)] {
        let prof = explicit(n, fam);
        let c = nondegeneracy_certificate(&prof.params, &prof, 4, 800).unwrap();
        assert!(c.certified, "N={n}");
        assert_eq!(c.multiplicity, n);
    }
    let prof = explicit(3, Family::TwoOverN);
    assert!(nondegeneracy_certificate(&prof.params, &prof, 1, 800).is_err());
    assert!(mode_eigens(&ModeProblem::new(&prof, 0, 100), 2).is_err());
}
