use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64 as C;
use rayon::prelude::*;

use hslab::fem2d::{self, FemOptions};
use hslab::halfspace::{curvature_slope, discriminant_report, mu_half_space, pohozaev_report};
use hslab::planar::{self, ConformalDomain, TestFunction2D};
use hslab::spectral::{nondegeneracy_certificate, xi_residual};
use hslab::{io as hio, make_params, radial, Error, Family, ParamSpec, ProblemParams};

use crate::report::{Cell, Report};
use crate::{Command, ParamArgs, Suite, EXIT_NO_CONVERGENCE, EXIT_OK, EXIT_SOLVER_FAILED, EXIT_SUITE_FAILED, EXIT_USAGE};

pub struct Outcome {
    pub code: i32,
    pub report: Option<Report>,
    pub messages: Vec<String>,
}

impl Outcome {
    fn fail(code: i32, msg: impl Into<String>) -> Self {
        Outcome {
            code,
            report: None,
            messages: vec![format!("error: {}", msg.into())],
        }
    }

    fn from_error(e: Error) -> Self {
        match e {
            Error::InvalidParams(m) | Error::Unknown(m) => Outcome::fail(EXIT_USAGE, m),
            Error::NoConvergence { .. } => Outcome::fail(EXIT_NO_CONVERGENCE, e.to_string()),
            other => Outcome::fail(EXIT_SOLVER_FAILED, other.to_string()),
        }
    }

    fn suite(report: Report) -> Self {
        let (code, messages) = match report.first_failure() {
            None => (EXIT_OK, vec![]),
            Some(c) => (
                EXIT_SUITE_FAILED,
                vec![format!(
                    "FAILED {}: {} {} {}",
                    c.name,
                    hio::fmt_f64(c.value),
                    c.relation,
                    hio::fmt_f64(c.tolerance)
                )],
            ),
        };
        Outcome {
            code,
            report: Some(report),
            messages,
        }
    }
}

macro_rules! tryo {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => return Outcome::from_error(e),
        }
    };
}

fn params_of(a: &ParamArgs) -> hslab::Result<ProblemParams> {
    let spec = match (a.s, a.p, &a.family) {
        (Some(s), None, None) => ParamSpec::S(s),
        (None, Some(p), None) => ParamSpec::P(p),
        (None, None, Some(f)) => ParamSpec::Family(Family::parse(f)?),
        _ => return Err(Error::InvalidParams("give exactly one of --s, --p, --family".into())),
    };
    make_params(a.dim, spec)
}

fn describe(r: &mut Report, p: &ProblemParams) {
    r.set("N", p.n);
    r.set("s", p.s);
    r.set("p", p.p);
    r.set("family", p.family.tag());
}

fn resolve(out_dir: &Path, file: &Path) -> PathBuf {
    if file.is_absolute() {
        file.to_path_buf()
    } else {
        out_dir.join(file)
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), String> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| format!("cannot create {}: {e}", parent.display()))?;
        }
    }
    fs::write(path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

pub fn dispatch(cmd: &Command, out_dir: &Path) -> Outcome {
    match cmd {
        Command::SolveRadial { params, tol, output } => solve_radial(params, *tol, output.as_deref(), out_dir),
        Command::Verify { suite } => match suite {
            Suite::Pohozaev { params, tol, threshold } => verify_pohozaev(params, *tol, *threshold),
            Suite::Discriminant {
                family,
                scan,
                tol,
                threshold,
            } => verify_discriminant(family, scan, *tol, *threshold),
            Suite::Spectrum {
                params,
                kmax,
                ngrid,
                threshold,
            } => verify_spectrum(params, *kmax, *ngrid, *threshold),
            Suite::Planar { samples, threshold } => verify_planar(*samples, *threshold),
        },
        Command::Minimize {
            domain,
            p,
            h,
            refine,
            resolution,
            tol,
            quad_order,
            max_iter,
        } => {
            let opts = FemOptions {
                tol: *tol,
                max_iter: *max_iter,
                quad_order: *quad_order,
                ..FemOptions::default()
            };
            minimize(domain, *p, *h, refine.as_deref(), *resolution, &opts, out_dir)
        }
    }
}

fn solve_radial(args: &ParamArgs, tol: f64, output: Option<&Path>, out_dir: &Path) -> Outcome {
    let params = tryo!(params_of(args));
    if !(tol > 0.0 && tol < 1.0) {
        return Outcome::fail(EXIT_USAGE, format!("tol {tol} out of range"));
    }
    let profile = tryo!(radial::solve(&params, tol));
    let mut r = Report::new("solve-radial", &[]);
    describe(&mut r, &params);
    r.set("source", profile.source.tag());
    r.set("shoot_param", profile.shoot_param);
    r.set("boundary_slope", profile.boundary_slope);
    r.set("nodes", profile.grid.len());
    r.set("critical_points", profile.critical_point_count());
    let file = output
        .map(Path::to_path_buf)
        .unwrap_or_else(|| {
            let name = match params.family {
                Family::General => format!("profile_N{}_s{}.txt", params.n, params.s),
                f => format!("profile_N{}_{}.txt", params.n, f.tag()),
            };
            PathBuf::from(name)
        });
    let path = resolve(out_dir, &file);
    let mut buf = Vec::new();
    hio::write_profile(&mut buf, &profile).expect("writing to memory");
    if let Err(m) = write_file(&path, &buf) {
        return Outcome::fail(EXIT_SOLVER_FAILED, m);
    }
    r.set("profile_file", path.display().to_string());
    let residual = profile.ode_residual();
    r.below("ode_residual", residual, tol);
    let code = if r.passed() { EXIT_OK } else { EXIT_SOLVER_FAILED };
    let messages = r
        .first_failure()
        .map(|c| vec![format!("error: {} = {} exceeds tol {}", c.name, hio::fmt_f64(c.value), hio::fmt_f64(c.tolerance))])
        .unwrap_or_default();
    Outcome {
        code,
        report: Some(r),
        messages,
    }
}

fn verify_pohozaev(args: &ParamArgs, tol: f64, threshold: f64) -> Outcome {
    let params = tryo!(params_of(args));
    let profile = tryo!(radial::solve(&params, 1e-10));
    let rep = tryo!(pohozaev_report(&params, &profile, tol));
    let slope = tryo!(curvature_slope(&params, &profile, tol));
    let mut r = Report::new("verify pohozaev", &["identity", "residual", "tolerance"]);
    describe(&mut r, &params);
    r.set("source", profile.source.tag());
    r.set("I1", rep.i1);
    r.set("I2", rep.i2);
    r.set("quadrature_error", rep.quadrature_error);
    r.set("slope", slope.slope);
    r.set("slope_predicted", slope.predicted);
    for (name, v) in [
        ("residual_main", rep.residual_main),
        ("residual_tv1", rep.residual_tv1),
        ("residual_shear", rep.residual_shear),
    ] {
        r.row(vec![name.into(), v.into(), threshold.into()]);
        r.below(name, v, threshold);
    }
    r.row(vec!["slope_relative_gap".into(), slope.relative_gap.into(), threshold.into()]);
    r.below("slope_relative_gap", slope.relative_gap, threshold);
    r.above("slope_positive", slope.slope, 0.0);
    Outcome::suite(r)
}

fn parse_scan(scan: &str) -> Option<(usize, usize)> {
    let (a, b) = scan.split_once("..")?;
    let b = b.strip_prefix('=').unwrap_or(b);
    let (a, b) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
    (a <= b).then_some((a, b))
}

fn verify_discriminant(family: &str, scan: &str, tol: f64, threshold: f64) -> Outcome {
    let fam = tryo!(Family::parse(family));
    if fam == Family::General {
        return Outcome::fail(EXIT_USAGE, "discriminant needs 2overN or 4overN");
    }
    let Some((lo, hi)) = parse_scan(scan) else {
        return Outcome::fail(EXIT_USAGE, format!("bad --scan '{scan}', expected a..b"));
    };
    if lo < 3 {
        return Outcome::fail(EXIT_USAGE, "scan must start at N >= 3");
    }
    let reports: Vec<_> = (lo..=hi)
        .into_par_iter()
        .map(|n| make_params(n, ParamSpec::Family(fam)).and_then(|p| discriminant_report(&p, tol)))
        .collect();
    let mut r = Report::new(
        "verify discriminant",
        &["N", "I3", "I4", "L", "Q", "C", "C_alt", "D", "D_closed", "D_rel_error", "sign", "threshold"],
    );
    r.set("family", fam.tag());
    r.set("scan", format!("{lo}..{hi}"));
    let mut prev_sign = None;
    let mut threshold_n = None;
    for rep in reports {
        let rep = tryo!(rep);
        let sign = if rep.d > 0.0 { "+" } else if rep.d < 0.0 { "-" } else { "0" };
        let crossing = prev_sign == Some("-") && sign == "+";
        if crossing && threshold_n.is_none() {
            threshold_n = Some(rep.n);
        }
        prev_sign = Some(sign);
        r.row(vec![
            rep.n.into(),
            rep.i3.into(),
            rep.i4.into(),
            rep.l_integral.into(),
            rep.q_integral.into(),
            rep.const_coeff.into(),
            rep.const_coeff_alt.into(),
            rep.d.into(),
            rep.d_closed.into(),
            rep.d_rel_error.into(),
            sign.into(),
            crossing.into(),
        ]);
        r.below(format!("D_rel_error[N={}]", rep.n), rep.d_rel_error, threshold);
        // sign pattern claimed for the two families
        let expect_positive = fam == Family::TwoOverN && rep.n >= 18;
        let signed = if expect_positive { rep.d } else { -rep.d };
        r.above(format!("D_times_expected_sign[N={}]", rep.n), signed, 0.0);
    }
    r.set(
        "threshold_N",
        threshold_n.map(|n| Cell::Int(n as i64)).unwrap_or(Cell::Text("none".into())),
    );
    Outcome::suite(r)
}

fn verify_spectrum(args: &ParamArgs, kmax: usize, ngrid: usize, threshold: f64) -> Outcome {
    let params = tryo!(params_of(args));
    let profile = tryo!(radial::solve(&params, 1e-10));
    let cert = tryo!(nondegeneracy_certificate(&params, &profile, kmax, ngrid));
    let xi = xi_residual(&params, &profile);
    let mut r = Report::new(
        "verify spectrum",
        &["k", "mu_k", "N_k", "lambda1", "lambda2", "margin", "similarity", "sign_changes"],
    );
    describe(&mut r, &params);
    r.set("source", profile.source.tag());
    r.set("n_grid", ngrid);
    r.set("multiplicity", cert.multiplicity);
    r.set("certified", cert.certified);
    for row in &cert.rows {
        r.row(vec![
            row.k.into(),
            row.mu_k.into(),
            row.multiplicity.into(),
            row.lambda1.into(),
            row.lambda2.into(),
            row.margin.into(),
            row.similarity.map(Cell::Num).unwrap_or(Cell::Text(String::new())),
            format!("{}/{}", row.sign_changes[0], row.sign_changes[1]).into(),
        ]);
    }
    let pm1 = params.p - 1.0;
    r.below("lambda1[k=0] - 1", (cert.rows[0].lambda1 - 1.0).abs(), threshold);
    r.below("lambda1[k=1] - (p-1)", (cert.rows[1].lambda1 - pm1).abs(), threshold);
    r.above("lambda2[k=0] - (p-1)", cert.rows[0].lambda2 - pm1, 0.0);
    for row in &cert.rows[2..] {
        r.above(format!("margin[k={}]", row.k), row.margin, 0.0);
    }
    if let Some(sim) = cert.rows[1].similarity {
        r.above("xi_similarity", sim, 0.999);
    }
    let xi_tol = if profile.source == radial::ProfileSource::ClosedForm { 1e-6 } else { 1e-3 };
    r.below("xi_residual", xi, xi_tol);
    r.equal("multiplicity", cert.multiplicity as f64, params.n as f64);
    Outcome::suite(r)
}

fn verify_planar(samples: usize, threshold: f64) -> Outcome {
    let mut r = Report::new("verify planar", &["check", "domain", "value", "tolerance"]);
    let q3 = tryo!(make_params(2, ParamSpec::Family(Family::TwoOverN)));
    let gallery = [
        ConformalDomain::Disk,
        ConformalDomain::HalfPlane,
        ConformalDomain::Strip { height: 1.0 },
        ConformalDomain::Sector { angle: 2.0 },
        ConformalDomain::Sector { angle: 4.0 },
    ];
    let add = |r: &mut Report, check: &str, d: &ConformalDomain, v: f64, tol: f64, below: bool| {
        r.row(vec![check.into(), d.name().into(), v.into(), tol.into()]);
        let name = format!("{check}[{}]", d.name());
        if below {
            r.below(name, v, tol);
        } else {
            r.above(name, v, tol);
        }
    };
    for d in &gallery {
        let pts = planar::sample_points(d, samples);
        let mut worst = 0.0f64;
        for &z in &pts {
            let rad = tryo!(planar::harmonic_radius(d, z));
            worst = worst.max((rad - d.radius_closed_form(z)).abs() / rad.max(1.0));
        }
        let tol = if matches!(d, ConformalDomain::Disk | ConformalDomain::HalfPlane) { 1e-12 } else { 1e-10 };
        add(&mut r, "radius_closed_form", d, worst, tol, true);
        let b = tryo!(planar::radius_bounds_check(d, &pts));
        add(&mut r, "min_radius_over_delta", d, b.min_radius_over_delta, 1.0 - 1e-12, false);
        if d.is_convex() {
            add(&mut r, "max_radius_over_two_delta", d, b.max_radius_over_two_delta, 1.0 + 1e-12, true);
        }
    }
    // transformation rule between gallery pairs
    for (a, b) in [
        (ConformalDomain::HalfPlane, ConformalDomain::Disk),
        (ConformalDomain::Strip { height: 1.0 }, ConformalDomain::HalfPlane),
        (ConformalDomain::Sector { angle: 2.0 }, ConformalDomain::Disk),
    ] {
        let t = planar::Transport::new(a, b);
        let mut worst = 0.0f64;
        for z in planar::sample_points(&a, samples) {
            let (gz, dg) = t.apply(z);
            let lhs = tryo!(planar::harmonic_radius(&b, gz));
            let rhs = dg.norm() * tryo!(planar::harmonic_radius(&a, z));
            worst = worst.max((lhs - rhs).abs() / rhs);
        }
        add(&mut r, &format!("radius_transport->{}", b.name()), &a, worst, 1e-10, true);
    }
    // strip inside the half-plane
    let strip = ConformalDomain::Strip { height: 1.0 };
    let excess = planar::sample_points(&strip, samples)
        .into_iter()
        .map(|z| d_radius(&strip, z) - ConformalDomain::HalfPlane.radius_closed_form(z))
        .fold(f64::NEG_INFINITY, f64::max);
    add(&mut r, "monotonicity_excess", &strip, excess, 1e-15, true);
    // conformal invariance of energy and weighted norm
    let cases = [
        (ConformalDomain::HalfPlane, ConformalDomain::Disk, TestFunction2D::bump([0.3, 1.2], 0.8, 1.0)),
        (ConformalDomain::HalfPlane, ConformalDomain::Disk, TestFunction2D::skew_bump([-1.0, 2.0], 1.5, 0.7)),
        (ConformalDomain::HalfPlane, ConformalDomain::Disk, TestFunction2D::bump([5.0, 0.5], 0.4, 2.0)),
        (strip, ConformalDomain::HalfPlane, TestFunction2D::bump([0.3, 0.5], 0.4, 1.0)),
        (strip, ConformalDomain::HalfPlane, TestFunction2D::skew_bump([-1.0, 0.4], 0.3, 0.5)),
        (strip, ConformalDomain::HalfPlane, TestFunction2D::bump([2.0, 0.7], 0.25, 1.0)),
    ];
    for (i, (a, b, u)) in cases.iter().enumerate() {
        let res = tryo!(planar::invariance_check(a, b, u, &q3, 1e-11));
        add(&mut r, &format!("invariance_energy#{i}->{}", b.name()), a, res.energy_residual, threshold, true);
        add(&mut r, &format!("invariance_weighted#{i}->{}", b.name()), a, res.weighted_residual, threshold, true);
    }
    // conformal Hardy inequality
    for (d, u) in [
        (ConformalDomain::Disk, TestFunction2D::bump([0.0, 0.0], 0.9, 1.0)),
        (strip, TestFunction2D::bump([0.3, 0.3], 0.25, 1.0)),
        (ConformalDomain::HalfPlane, TestFunction2D::hardy_profile(0.01, 20.0)),
    ] {
        let m = tryo!(planar::conformal_hardy_check(&d, &u, 1e-9));
        add(&mut r, &format!("hardy_margin[{}]", u.name), &d, m.margin / m.energy, 0.0, false);
    }
    Outcome::suite(r)
}

fn d_radius(d: &ConformalDomain, z: C) -> f64 {
    planar::harmonic_radius(d, z).unwrap_or(f64::NAN)
}

fn minimize(
    name: &str,
    p: f64,
    h: f64,
    refine: Option<&[f64]>,
    resolution: usize,
    opts: &FemOptions,
    out_dir: &Path,
) -> Outcome {
    let domain = tryo!(fem2d::domain_gallery(name, resolution));
    let params = tryo!(make_params(2, ParamSpec::P(p)));
    if !(h > 0.0 && h < 1.0) {
        return Outcome::fail(EXIT_USAGE, format!("h {h} out of range"));
    }
    let reference = {
        let profile = tryo!(radial::solve(&params, 1e-10));
        tryo!(mu_half_space(&params, &profile, 1e-10)).mu
    };
    let stem = format!("{name}_p{p}_h{h}");
    let trace_path = out_dir.join(format!("{stem}_trace.csv"));
    let mut r = Report::new("minimize", &["domain", "p", "h", "nodes", "triangles", "mu_h", "reference", "gap", "iterations"]);
    r.set("domain", name);
    r.set("p", p);
    r.set("reference_mu", reference);
    r.set("convex", domain.is_convex());
    let h_list: Vec<f64> = refine.map(|v| v.to_vec()).unwrap_or_else(|| vec![h]);
    let (solution, study) = if h_list.len() > 1 {
        match fem2d::refine_study(&domain, &params, &h_list, opts) {
            Ok(mut s) => (s.finest.take().expect("at least one level"), Some(s)),
            Err(e) => return convergence_failure(e, &trace_path),
        }
    } else {
        match fem2d::minimize_quotient(&domain, &params, h, opts) {
            Ok(s) => (s, None),
            Err(e) => return convergence_failure(e, &trace_path),
        }
    };
    if let Some(study) = &study {
        for row in &study.rows {
            r.row(vec![
                name.into(),
                p.into(),
                row.h.into(),
                row.nodes.into(),
                row.triangles.into(),
                row.mu_h.into(),
                reference.into(),
                (row.mu_h - reference).into(),
                row.iterations.into(),
            ]);
        }
        r.set("monotone", study.monotone);
        r.set("rate", study.rate.map(Cell::Num).unwrap_or(Cell::Text("none".into())));
        r.set("error_estimate", study.error_estimate);
    } else {
        r.row(vec![
            name.into(),
            p.into(),
            solution.mesh.h.into(),
            solution.mesh.nodes.len().into(),
            solution.mesh.triangles.len().into(),
            solution.mu_h.into(),
            reference.into(),
            (solution.mu_h - reference).into(),
            solution.iterations.into(),
        ]);
    }
    r.set("mu_h", solution.mu_h);
    r.set("gap", solution.mu_h - reference);
    r.set("residual", solution.residual);
    r.set("min_interior_value", solution.min_interior_value);
    let mesh_path = out_dir.join(format!("{stem}_solution.txt"));
    let mut buf = Vec::new();
    solution.mesh.write_dump(&mut buf, Some(&solution.u)).expect("writing to memory");
    if let Err(m) = write_file(&mesh_path, &buf).and_then(|_| write_file(&trace_path, hio::trace_csv(&solution.convergence_trace).as_bytes())) {
        return Outcome::fail(EXIT_SOLVER_FAILED, m);
    }
    r.set("solution_file", mesh_path.display().to_string());
    r.set("trace_file", trace_path.display().to_string());
    Outcome {
        code: EXIT_OK,
        report: Some(r),
        messages: vec![],
    }
}

fn convergence_failure(e: Error, trace_path: &Path) -> Outcome {
    if let Error::NoConvergence { trace, .. } = &e {
        let csv = hio::trace_csv(trace);
        let mut o = Outcome::from_error(e.clone());
        match write_file(trace_path, csv.as_bytes()) {
            Ok(()) => o.messages.push(format!("trace written to {}", trace_path.display())),
            Err(m) => o.messages.push(m),
        }
        o.messages.push(csv);
        return o;
    }
    Outcome::from_error(e)
}
