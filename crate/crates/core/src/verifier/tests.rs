use super::*;
use crate::forms::norm_sq;

fn perturbed_2() -> Model {
    Model::torus(linalg::identity(2), parse("0.03*sin(2*pi*x1) + 0.03*cos(2*pi*y2)", 2).unwrap()).unwrap()
}

fn conv() -> Conventions {
    Conventions::default()
}

#[test]
fn flat_torus_terms_vanish() {
    let m = Model::flat_torus(1);
    let r = identity_e1(&m, &PForm::basis(1, &[0]).unwrap(), 16, &conv()).unwrap();
    assert_eq!((r.lhs, r.rhs1, r.rhs2, r.residual), (0.0, 0.0, 0.0, 0.0));
    assert_eq!(r.nodes, 1);
}

#[test]
fn perturbed_circle_identity() {
    let (m, eta) = calibration_fixture();
    let r = identity_e1(&m, &eta, 64, &conv()).unwrap();
    assert!(r.residual < 1e-8, "{r:?}");
    assert!(r.rhs2.abs() > 1e-4 && r.lhs < 0.0 && r.rhs1 > 0.0);
    assert!(r.dual_vector_gap.unwrap() < 1e-10);
    assert!(r.min_rhs1_integrand >= -1e-12);
}

#[test]
fn perturbed_surface_identity() {
    let m = perturbed_2();
    let forms = [
        PForm::basis(2, &[0]).unwrap(),
        PForm::basis(2, &[0, 1]).unwrap(),
        PForm::constant(2, 1, &[(vec![0], C64::new(1.0, 0.0)), (vec![1], C64::new(0.0, 0.5))]).unwrap(),
    ];
    for eta in &forms {
        let r = identity_e1(&m, eta, 48, &conv()).unwrap();
        assert!(r.residual < 1e-7, "{r:?}");
        assert!(r.rhs2.abs() > 1e-4);
        if let Some(gap) = r.dual_vector_gap {
            assert!(gap < 1e-10);
        }
    }
}

#[test]
fn refinement_does_not_hurt() {
    let (m, eta) = calibration_fixture();
    let coarse = identity_e1(&m, &eta, 6, &conv()).unwrap();
    let fine = identity_e1(&m, &eta, 64, &conv()).unwrap();
    assert!(fine.residual <= coarse.residual.max(1e-15));
    assert!((coarse.lhs - fine.lhs).abs() > 1e-6);
}

/// `∂_z u` from fourth-order central differences of the pointwise norm in
/// `x` and `y`.
#[test]
fn lhs_integrand_against_finite_differences() {
    let m = perturbed_2();
    let eta = PForm::constant(2, 1, &[(vec![0], C64::new(0.7, 0.0)), (vec![1], C64::new(0.2, -0.4))]).unwrap();
    let x = [0.13, 0.4, 0.77, 0.31];
    let h = 1e-3;
    let u = |p: &[f64]| norm_sq(&eta, &m, p).unwrap();
    let du: Vec<C64> = (0..2)
        .map(|k| {
            let d = |v: usize| {
                let at = |t: f64| {
                    let mut p = x.to_vec();
                    p[v] += t;
                    u(&p)
                };
                (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h)
            };
            C64::new(d(2 * k), -d(2 * k + 1)) * 0.5
        })
        .collect();
    let ginv = m.metric(&x).unwrap().inverse().clone();
    let mut expected = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            expected -= (ginv[(i, j)] * du[i] * du[j].conj()).re;
        }
    }
    let got = identity_integrands(&eta, &m, &x, &conv()).unwrap().lhs;
    assert!((got - expected).abs() < 1e-8 * (1.0 + expected.abs()), "{got} {expected}");
}

#[test]
fn calibration_selects_unit_constant() {
    let c = calibrate(64, 1e-8).unwrap();
    assert_eq!(c.grad_constant, 1.0);
    assert_eq!(c.residuals.len(), 2);
    assert!(c.residuals[1].1 > 1e-2);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out/calibration.json");
    c.save(&path).unwrap();
    assert_eq!(Calibration::load(&path).unwrap(), c);
    assert!(matches!(calibrate(64, 0.0), Err(Error::Calibration(_))));
}

#[test]
fn flipped_curvature_sign_breaks_identity() {
    let (m, eta) = calibration_fixture();
    let bad = Conventions { curvature_sign: -1.0, ..conv() };
    assert!(identity_e1(&m, &eta, 64, &bad).unwrap().residual > 0.1);
}

#[test]
fn global_preconditions() {
    let fs = Model::fubini_study(1, 1.0).unwrap();
    let eta = PForm::basis(1, &[0]).unwrap();
    assert!(matches!(identity_e1(&fs, &eta, 8, &conv()), Err(Error::UnsupportedModel(_))));
    let (m, _) = calibration_fixture();
    let local = PForm::new(1, 1, vec![(vec![0], crate::expr::Expr::z(0))]).unwrap();
    assert!(identity_e1(&m, &local, 8, &conv()).is_err());
    let wrong = PForm::basis(2, &[0]).unwrap();
    assert!(matches!(identity_e1(&m, &wrong, 8, &conv()), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn inequality_examples() {
    let opts = KappaOptions::default();
    let flat = Model::flat_torus(2);
    let r = inequality_e2(&flat, &PForm::basis(2, &[0]).unwrap(), 8, opts, &conv()).unwrap();
    assert_eq!((r.middle, r.bound, r.slack), (0.0, 0.0, 0.0));

    let (m, eta) = calibration_fixture();
    let r = inequality_e2(&m, &eta, 64, opts, &conv()).unwrap();
    assert_eq!(r.provenance, KappaProvenance::SymmetricExact);
    assert!(r.kappa_min < 0.0 && r.kappa_max > 0.0);
    assert!(r.middle < 0.0 && r.slack >= 0.0 && r.holds(1e-7), "{r:?}");

    let r = inequality_e2(&perturbed_2(), &PForm::basis(2, &[0, 1]).unwrap(), 16, opts, &conv()).unwrap();
    assert_eq!(r.provenance, KappaProvenance::GridVerified);
    assert!(r.holds(1e-7), "{r:?}");

    let heuristic = KappaOptions { grid: 0, ..opts };
    let r = inequality_e2(&perturbed_2(), &PForm::basis(2, &[0]).unwrap(), 4, heuristic, &conv()).unwrap();
    assert_eq!(r.provenance, KappaProvenance::Heuristic);
}

#[test]
fn constancy_examples() {
    let opts = KappaOptions::default();
    let flat = Model::flat_torus(2);
    for eta in [PForm::basis(2, &[0]).unwrap(), PForm::basis(2, &[0, 1]).unwrap()] {
        let r = constancy_scan(&flat, &eta, 16, opts).unwrap();
        assert_eq!(r.spread, 0.0);
        assert!(r.hypothesis_satisfied);
    }
    let (m, eta) = calibration_fixture();
    let r = constancy_scan(&m, &eta, 32, opts).unwrap();
    assert!(r.spread > 0.1 && !r.hypothesis_satisfied);
    assert_eq!(r.note, "hypothesis not satisfied; no claim");
}

#[test]
fn thread_count_does_not_change_bits() {
    let m = perturbed_2();
    let eta = PForm::basis(2, &[0, 1]).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| identity_e1(&m, &eta, 24, &conv()).unwrap())
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(a.lhs.to_bits(), b.lhs.to_bits());
    assert_eq!(a.rhs2.to_bits(), b.rhs2.to_bits());
}

fn small_corpus() -> Corpus {
    let (m, eta) = calibration_fixture();
    let spec = |id: &str, kind, model: &str, form: Option<&str>| CheckSpec {
        id: id.into(),
        kind,
        model: model.into(),
        form: form.map(Into::into),
        grid: Some(32),
        grids: vec![16, 32, 64],
        tolerance: CheckKind::default_tolerance(kind),
        heuristic_kappa: false,
    };
    Corpus {
        settings: Settings { samples: 3, ..Settings::default() },
        models: vec![
            NamedModel { id: "circle".into(), model: m },
            NamedModel { id: "fs2".into(), model: Model::fubini_study(2, 1.0).unwrap() },
        ],
        forms: vec![
            NamedForm { id: "dz".into(), form: eta },
            NamedForm { id: "dz1".into(), form: PForm::basis(2, &[0]).unwrap() },
        ],
        checks: vec![
            spec("id", CheckKind::Identity, "circle", Some("dz")),
            spec("ineq", CheckKind::Inequality, "circle", Some("dz")),
            spec("const", CheckKind::Constancy, "circle", Some("dz")),
            spec("conv", CheckKind::Convergence, "circle", Some("dz")),
            spec("curv", CheckKind::Curvature, "fs2", None),
            spec("boch", CheckKind::Bochner, "fs2", Some("dz1")),
        ],
    }
}

#[test]
fn sweep_statuses() {
    let recs = corpus_sweep(&small_corpus(), &conv()).unwrap();
    let status = |id: &str| recs.iter().find(|r| r.check_id == id).unwrap().status;
    assert_eq!(status("id"), Status::Pass);
    assert_eq!(status("ineq"), Status::Pass);
    assert_eq!(status("const"), Status::Info);
    assert_eq!(status("conv"), Status::Pass);
    for sub in ["symmetry", "lemma34", "yang", "royden", "berger"] {
        assert_eq!(status(&format!("curv.{sub}")), Status::Pass, "{sub}");
    }
    assert_eq!(status("boch"), Status::Pass);
    assert!(corpus_sweep(&Corpus::default(), &conv()).unwrap().is_empty());

    let bad = Conventions { curvature_sign: -1.0, ..conv() };
    let recs = corpus_sweep(&small_corpus(), &bad).unwrap();
    assert_eq!(recs[0].status, Status::Fail);
}

#[test]
fn sweep_validation() {
    let mut c = small_corpus();
    c.checks[0].model = "missing".into();
    assert!(matches!(corpus_sweep(&c, &conv()), Err(Error::Manifest { .. })));
    let mut c = small_corpus();
    c.checks[0].model = "fs2".into();
    c.checks[0].form = Some("dz1".into());
    let err = corpus_sweep(&c, &conv()).unwrap_err().to_string();
    assert!(err.contains("torus"), "{err}");
    let mut c = small_corpus();
    c.checks[0].form = None;
    assert!(corpus_sweep(&c, &conv()).is_err());
}

#[test]
fn csv_and_json() {
    let mut rec = CheckRecord::new("a,b", "identity", "m\"q", "f");
    rec.grid = Some(8);
    rec.residual = Some(1.5e-9);
    rec.status = Status::Pass;
    let report = Report::new(Provenance::new("test", 7, 1, conv()), vec![rec]);
    let csv = report.to_csv();
    assert_eq!(
        csv,
        "check_id,model,form,N,lhs,rhs1,rhs2,residual,status\n\"a,b\",\"m\"\"q\",f,8,,,,1.5e-9,pass\n"
    );
    let back = Report::from_json(&report.to_json()).unwrap();
    assert_eq!(back, report);
    assert_eq!(report.summary.passed, 1);
    assert!(report.all_passed());
    assert_eq!(fingerprint(b""), "cbf29ce484222325");
}
