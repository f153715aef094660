use super::*;
use crate::expr::{parse, Expr};
use crate::forms::{beta, PForm};
use crate::geometry::Model;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fs(n: usize) -> Model {
    Model::fubini_study(n, 1.0).unwrap()
}

fn perturbed_1() -> Model {
    Model::torus(linalg::identity(1), parse("0.05*sin(2*pi*x1)", 1).unwrap()).unwrap()
}

fn perturbed_2() -> Model {
    Model::torus(linalg::identity(2), parse("0.03*sin(2*pi*x1) + 0.03*cos(2*pi*y2)", 2).unwrap())
        .unwrap()
}

fn torus_fs() -> Model {
    Model::product(Model::flat_torus(1), fs(1)).unwrap()
}

fn point(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..2 * n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

#[test]
fn hsc_examples() {
    let m = Model::flat_torus(2);
    let jet = m.jet(&[0.1; 4]).unwrap();
    assert_eq!(hsc(&jet.curvature(), &jet.g, &[c(1.0), c(2.0)]).unwrap(), 0.0);

    let m = fs(1);
    let jet = m.jet(&[0.4, 0.3]).unwrap();
    assert!((hsc(&jet.curvature(), &jet.g, &[C64::new(0.3, 2.0)]).unwrap() - 2.0).abs() < 1e-12);

    let m = Model::product(fs(1), fs(1)).unwrap();
    let jet = m.jet(&[0.0; 4]).unwrap();
    let r = jet.curvature();
    assert!((hsc(&r, &jet.g, &[c(1.0), c(0.0)]).unwrap() - 2.0).abs() < 1e-12);
    assert!((hsc(&r, &jet.g, &[c(1.0), c(1.0)]).unwrap() - 1.0).abs() < 1e-12);
    assert!(matches!(hsc(&r, &jet.g, &[c(0.0), c(0.0)]), Err(Error::ZeroVector)));
}

#[test]
fn hsc_scale_invariant() {
    let m = perturbed_2();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let jet = m.jet(&point(&mut rng, 2)).unwrap();
    let r = jet.curvature();
    let v = linalg::random_unit(&mut rng, 2);
    let h = hsc(&r, &jet.g, &v).unwrap();
    for lambda in [C64::new(3.0, -1.0), C64::new(1e-3, 0.0), C64::new(0.0, 7.0)] {
        let w: Vec<C64> = v.iter().map(|z| z * lambda).collect();
        assert!((hsc(&r, &jet.g, &w).unwrap() - h).abs() < 1e-12 * (1.0 + h.abs()));
    }
}

#[test]
fn kappa_examples() {
    let jet = Model::flat_torus(2).jet(&[0.0; 4]).unwrap();
    assert_eq!(kappa(&jet.curvature(), &jet.g, KappaOptions::default()).unwrap().value, 0.0);

    let jet = fs(2).jet(&[0.3, -0.2, 0.5, 0.1]).unwrap();
    let k = kappa(&jet.curvature(), &jet.g, KappaOptions::default()).unwrap();
    assert!((k.value - 2.0).abs() < 1e-10);
    assert_eq!(k.status, KappaStatus::GridVerified);

    let jet = torus_fs().jet(&[0.1, 0.2, 0.3, 0.4]).unwrap();
    let k = kappa(&jet.curvature(), &jet.g, KappaOptions::default()).unwrap();
    assert!(k.value.abs() < 1e-10);
    assert!(k.argmin[0].norm() > 1.0 - 1e-6, "{:?}", k.argmin);
    let unit = linalg::g_inner(&jet.g, &k.argmin, &k.argmin).re;
    assert!((unit - 1.0).abs() < 1e-12);
}

#[test]
fn kappa_is_an_upper_bound_consistent_minimum() {
    let m = perturbed_2();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..3 {
        let jet = m.jet(&point(&mut rng, 2)).unwrap();
        let r = jet.curvature();
        let k = kappa(&r, &jet.g, KappaOptions::default()).unwrap();
        assert!((hsc(&r, &jet.g, &k.argmin).unwrap() - k.value).abs() < 1e-10);
        let mut fresh = f64::INFINITY;
        for _ in 0..10_000 {
            fresh = fresh.min(hsc(&r, &jet.g, &linalg::random_unit(&mut rng, 2)).unwrap());
        }
        assert!(k.value <= fresh + 1e-9);
    }
}

#[test]
fn flat_space_dimensions() {
    let jet = Model::flat_torus(2).jet(&[0.0; 4]).unwrap();
    assert_eq!(truly_flat_space(&jet.curvature(), &jet.g, 1e-8).unwrap().dim(), 2);

    let jet = fs(2).jet(&[0.2, 0.1, -0.3, 0.4]).unwrap();
    let flat = truly_flat_space(&jet.curvature(), &jet.g, 1e-8).unwrap();
    assert_eq!(flat.dim(), 0);
    // at the origin R_{ij̄kl̄} = δ_{ij}δ_{kl} + δ_{il}δ_{kj}: both singular values √6
    let jet0 = fs(2).jet(&[0.0; 4]).unwrap();
    let sv = truly_flat_space(&jet0.curvature(), &jet0.g, 1e-8).unwrap().singular_values;
    assert!(sv.iter().all(|s| (s - 6f64.sqrt()).abs() < 1e-12), "{sv:?}");

    let jet = torus_fs().jet(&[0.1, 0.2, 0.3, 0.4]).unwrap();
    let flat = truly_flat_space(&jet.curvature(), &jet.g, 1e-8).unwrap();
    assert_eq!(flat.dim(), 1);
    assert!(flat.basis[0][1].norm() < 1e-12 && (flat.basis[0][0].norm() - 1.0).abs() < 1e-12);
    let r = jet.curvature();
    let e = [[c(1.0), c(0.0)], [c(0.0), c(1.0)]];
    for x in &e {
        for y in &e {
            for z in &e {
                assert!(r.eval(&flat.basis[0], x, y, z).norm() < 1e-12);
            }
        }
    }
}

#[test]
fn rc_positivity() {
    let jet = fs(2).jet(&[0.2, 0.1, -0.3, 0.4]).unwrap();
    assert!(rc_positive(&jet.curvature(), &jet.g, 8, 0, 1e-9).unwrap().certified_positive);

    let jet = Model::flat_torus(2).jet(&[0.0; 4]).unwrap();
    let rc = rc_positive(&jet.curvature(), &jet.g, 8, 0, 1e-9).unwrap();
    assert!(!rc.certified_positive);

    let jet = torus_fs().jet(&[0.1, 0.2, 0.3, 0.4]).unwrap();
    let rc = rc_positive(&jet.curvature(), &jet.g, 8, 0, 1e-9).unwrap();
    assert!(!rc.certified_positive);
    assert!(rc.worst_v[1].norm() < 1e-6);
}

#[test]
fn lemma34_on_models() {
    let cases: Vec<(Model, usize)> = vec![
        (Model::flat_torus(2), 2),
        (fs(1), 0),
        (fs(2), 0),
        (torus_fs(), 1),
        (Model::product(fs(1), fs(1)).unwrap(), 0),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (m, dim) in cases {
        let jet = m.jet(&point(&mut rng, m.dim())).unwrap();
        let rep = lemma34_crosscheck(&jet.curvature(), &jet.g, 1e-9).unwrap();
        assert!(rep.agree, "{m:?}");
        assert_eq!(rep.flat_dim, dim, "{m:?}");
    }
    let jet = perturbed_1().jet(&[0.25, 0.0]).unwrap();
    assert!(matches!(
        lemma34_crosscheck(&jet.curvature(), &jet.g, 1e-9),
        Err(Error::HypothesisViolated(_))
    ));
}

#[test]
fn yang_slack() {
    let jet = Model::flat_torus(2).jet(&[0.0; 4]).unwrap();
    let e1 = vec![c(1.0), c(0.0)];
    assert_eq!(yang_lemma_check(&jet.curvature(), &jet.g, &e1, 100, 0).unwrap(), 0.0);

    let jet = fs(2).jet(&[0.3, 0.2, -0.1, 0.5]).unwrap();
    let r = jet.curvature();
    let k = kappa(&r, &jet.g, KappaOptions::default()).unwrap();
    let s = yang_lemma_check(&r, &jet.g, &k.argmin, 2000, 1).unwrap();
    assert!(s.abs() < 1e-8, "{s}");

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let m = perturbed_2();
    for _ in 0..5 {
        let jet = m.jet(&point(&mut rng, 2)).unwrap();
        let r = jet.curvature();
        let k = kappa(&r, &jet.g, KappaOptions::default()).unwrap();
        let s = yang_lemma_check(&r, &jet.g, &k.argmin, 2000, 2).unwrap();
        assert!(s >= -1e-8, "{s}");
    }
}

#[test]
fn royden_slack() {
    let m = Model::flat_torus(2);
    let jet = m.jet(&[0.0; 4]).unwrap();
    let eta = PForm::basis(2, &[0]).unwrap();
    let b = beta(&eta, &m, &[0.0; 4]).unwrap();
    assert_eq!(royden_check(&jet.curvature(), &jet.g, &b, 0.0).unwrap(), 0.0);

    let m = fs(2);
    let eta = PForm::new(2, 1, vec![(vec![0], Expr::one()), (vec![1], Expr::z(0))]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let x = point(&mut rng, 2);
        let jet = m.jet(&x).unwrap();
        let r = jet.curvature();
        let b = beta(&eta, &m, &x).unwrap();
        let k = kappa(&r, &jet.g, KappaOptions { restarts: 4, ..Default::default() }).unwrap();
        assert!(royden_check(&r, &jet.g, &b, k.value - 1e-9).unwrap() >= -1e-8);
    }
    let zero = PForm::new(2, 1, vec![]).unwrap();
    let jet = m.jet(&[0.1; 4]).unwrap();
    let b = beta(&zero, &m, &[0.1; 4]).unwrap();
    assert_eq!(royden_check(&jet.curvature(), &jet.g, &b, 2.0).unwrap(), 0.0);
}

#[test]
fn bochner_formula() {
    let rep = bochner_check(&Model::flat_torus(2), &PForm::basis(2, &[0]).unwrap(), &[0.2; 4]).unwrap();
    assert!(rep.lhs.iter().chain(&rep.rhs).all(|v| v.abs() < 1e-14));

    let rep = bochner_check(&perturbed_1(), &PForm::basis(1, &[0]).unwrap(), &[0.3, 0.1]).unwrap();
    assert!(rep.residual < 1e-8, "{rep:?}");
    assert!(rep.lhs[0].abs() > 1e-3);

    let rep = bochner_check(&fs(2), &PForm::basis(2, &[0]).unwrap(), &[0.0; 4]).unwrap();
    assert!(rep.residual < 1e-8, "{rep:?}");

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let cases = [
        (fs(2), PForm::basis(2, &[0, 1]).unwrap()),
        (perturbed_2(), PForm::basis(2, &[0, 1]).unwrap()),
        (fs(2), PForm::new(2, 1, vec![(vec![0], Expr::z(1) + Expr::one())]).unwrap()),
        (torus_fs(), PForm::new(2, 2, vec![(vec![0, 1], Expr::z(1) * Expr::z(1) + Expr::one())]).unwrap()),
    ];
    for (m, eta) in &cases {
        let x = point(&mut rng, 2);
        let rep = bochner_check(m, eta, &x).unwrap();
        assert!(rep.residual < 1e-8, "{m:?} {rep:?}");
        assert!(rep.dg_max < 1e-9);
    }
}

#[test]
fn berger_constants() {
    let jet = Model::flat_torus(2).jet(&[0.0; 4]).unwrap();
    let basis = vec![vec![c(1.0), c(0.0)], vec![c(0.0), c(1.0)]];
    let b = berger_average(&jet.curvature(), &jet.g, &basis, 1000).unwrap();
    assert_eq!((b.estimate, b.reference), (0.0, 0.0));

    let jet = fs(1).jet(&[0.0, 0.0]).unwrap();
    let b = berger_average(&jet.curvature(), &jet.g, &[vec![c(1.0)]], 100).unwrap();
    assert!((b.estimate - 2.0).abs() < 1e-12 && (b.constant - 1.0).abs() < 1e-12);

    let mut constants = vec![];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for m in [fs(2), Model::product(fs(1), perturbed_1()).unwrap()] {
        let x = point(&mut rng, 2);
        let jet = m.jet(&x).unwrap();
        let e = crate::geometry::orthonormal_frame(&jet.g).unwrap();
        let basis: Vec<Vec<C64>> = (0..2).map(|a| e.column(a).iter().copied().collect()).collect();
        constants.push(berger_average(&jet.curvature(), &jet.g, &basis, 100_000).unwrap().constant);
    }
    assert!((constants[0] - constants[1]).abs() < 1e-3, "{constants:?}");
    assert!((constants[0] - 3.0).abs() < 1e-3);
    let bad = vec![vec![c(1.0), c(0.0)], vec![c(1.0), c(0.0)]];
    assert!(matches!(
        berger_average(&jet_id().curvature(), &jet_id().g, &bad, 10),
        Err(Error::DegenerateBasis(_))
    ));
}

fn jet_id() -> crate::geometry::MetricJet {
    Model::flat_torus(2).jet(&[0.0; 4]).unwrap()
}

#[test]
fn trigonometric_grid_matches_direct_quartic() {
    let m = perturbed_2();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..5 {
        let jet = m.jet(&point(&mut rng, 2)).unwrap();
        let frame = Frame::new(&jet.curvature(), &jet.g).unwrap();
        let direct = projective_grid_2(40)
            .map(|u| frame.quartic(&u))
            .fold(f64::INFINITY, f64::min);
        let fast = frame.quartic(&grid_argmin_2(&frame, 40));
        assert!((direct - fast).abs() < 1e-12 * (1.0 + direct.abs()), "{direct} {fast}");
    }
}
