use super::*;
use crate::exterior::inner_product;
use crate::expr::parse;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

fn perturbed_1() -> Model {
    Model::torus(linalg::identity(1), parse("0.05*sin(2*pi*x1)", 1).unwrap()).unwrap()
}

fn perturbed_2() -> Model {
    Model::torus(linalg::identity(2), parse("0.03*sin(2*pi*x1) + 0.03*cos(2*pi*y2)", 2).unwrap())
        .unwrap()
}

fn diag(vals: &[f64]) -> CMat {
    CMat::from_diagonal(&nalgebra::DVector::from_iterator(vals.len(), vals.iter().map(|&v| one() * v)))
}

#[test]
fn contraction_signs() {
    let eta = PForm::basis(3, &[0, 1]).unwrap();
    let x = [0.0; 6];
    let c0 = eta.contract(0, &x).unwrap();
    assert_eq!(c0.get(&[1]), one());
    let c1 = eta.contract(1, &x).unwrap();
    assert_eq!(c1.get(&[0]), -one());
    assert!(eta.contract(2, &x).unwrap().max_abs() == 0.0);
}

#[test]
fn antisymmetric_storage() {
    let eta = PForm::constant(2, 2, &[(vec![1, 0], one())]).unwrap();
    assert_eq!(eta.value(&[0.0; 4]).unwrap().get(&[0, 1]), -one());
    let zero = PForm::constant(2, 2, &[(vec![1, 1], one())]).unwrap();
    assert_eq!(zero.value(&[0.0; 4]).unwrap().max_abs(), 0.0);
}

#[test]
fn beta_examples() {
    let flat1 = Model::flat_torus(1);
    let b = beta(&PForm::basis(1, &[0]).unwrap(), &flat1, &[0.0, 0.0]).unwrap();
    assert_eq!(b.matrix[(0, 0)], one());

    let flat2 = Model::flat_torus(2);
    let b = beta(&PForm::basis(2, &[0, 1]).unwrap(), &flat2, &[0.1; 4]).unwrap();
    assert!(linalg::max_abs(&(b.matrix - linalg::identity(2))) < 1e-15);

    // rank one and PSD for p = 1
    let m = perturbed_2();
    let eta = PForm::constant(2, 1, &[(vec![0], one()), (vec![1], C64::new(0.3, 0.4))]).unwrap();
    let b = beta(&eta, &m, &[0.2, 0.0, 0.0, 0.7]).unwrap();
    assert!(b.is_psd());
    assert!(b.matrix.determinant().norm() < 1e-12);
}

#[test]
fn beta_p1_is_outer_product_at_identity() {
    let eta = PForm::constant(2, 1, &[(vec![0], C64::new(0.3, 0.1)), (vec![1], C64::new(-0.5, 0.2))]).unwrap();
    let b = beta(&eta, &Model::flat_torus(2), &[0.0; 4]).unwrap();
    let v = eta.value(&[0.0; 4]).unwrap();
    for j in 0..2 {
        for i in 0..2 {
            // β_{jī} = η_j η̄_i
            assert!((b.matrix[(j, i)] - v.get(&[j]) * v.get(&[i]).conj()).norm() < 1e-15);
        }
    }
}

#[test]
fn norm_examples() {
    let eta = PForm::basis(2, &[0]).unwrap();
    assert_eq!(norm_sq(&eta, &Model::flat_torus(2), &[0.0; 4]).unwrap(), 1.0);
    let m = Model::torus(diag(&[2.0, 1.0]), Expr::zero()).unwrap();
    assert!((norm_sq(&eta, &m, &[0.0; 4]).unwrap() - 0.5).abs() < 1e-15);
    let zero = PForm::new(2, 1, vec![]).unwrap();
    assert_eq!(norm_sq(&zero, &m, &[0.0; 4]).unwrap(), 0.0);
}

#[test]
fn norm_agrees_with_exterior_pairing() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in 1..=4 {
        for p in 1..=n {
            let g = linalg::random_hermitian_pd(&mut rng, n);
            let m = Model::torus(g.clone(), Expr::zero()).unwrap();
            let f = crate::exterior::sample::p0_form(&mut rng, n, p);
            let terms: Vec<(Vec<usize>, C64)> = f.terms().map(|(i, _, c)| (i, c)).collect();
            let eta = PForm::constant(n, p, &terms).unwrap();
            let x = vec![0.0; 2 * n];
            let ours = norm_sq(&eta, &m, &x).unwrap();
            let brute = inner_product(&f, &f, &HermMetricAt::new(g).unwrap()).unwrap();
            assert!((ours - brute.re).abs() < 1e-12 * (1.0 + ours), "n={n} p={p}");
        }
    }
}

#[test]
fn trace_identity_holds_for_p1_only() {
    let m = perturbed_2();
    let x = [0.31, 0.0, 0.0, 0.77];
    let eta = PForm::constant(2, 1, &[(vec![0], one()), (vec![1], C64::new(0.2, -0.1))]).unwrap();
    assert!(trace_identity_residual(&eta, &m, &x).unwrap() < 1e-11);
    let flat = Model::flat_torus(2);
    assert_eq!(trace_identity_residual(&PForm::basis(2, &[0]).unwrap(), &flat, &[0.0; 4]).unwrap(), 0.0);
    // degree two: tr β = 2|η|², not |η|²/2
    let eta2 = PForm::basis(2, &[0, 1]).unwrap();
    let r = trace_identity_residual(&eta2, &flat, &[0.0; 4]).unwrap();
    assert!((r - 0.75).abs() < 1e-15, "{r}");
    assert!(trace_relation_residual(&eta2, &m, &x).unwrap() < 1e-11);
}

#[test]
fn trace_relation_on_local_form() {
    let m = Model::fubini_study(2, 1.0).unwrap();
    let eta = PForm::new(2, 1, vec![(vec![0], Expr::z(0))]).unwrap();
    let x = [0.3, -0.4, 0.1, 0.5];
    assert!(trace_identity_residual(&eta, &m, &x).unwrap() < 1e-11);
    assert!(trace_relation_residual(&eta, &m, &x).unwrap() < 1e-11);
}

#[test]
fn gradient_norm() {
    let flat = Model::flat_torus(1);
    let eta = PForm::basis(1, &[0]).unwrap();
    assert_eq!(grad_norm_sq(&eta, &flat, &[0.3, 0.2], 1.0).unwrap(), 0.0);

    // u = 1/g with g = 1 − 0.05π² sin(2πx); |du|² = g⁻¹ |∂u|², ∂u = ½u_x
    let m = perturbed_1();
    for &x in &[0.1, 0.37, 0.8] {
        let u = |t: f64| 1.0 / (1.0 - 0.05 * PI * PI * (2.0 * PI * t).sin());
        let h = 1e-5;
        let ux = (u(x + h) - u(x - h)) / (2.0 * h);
        let expected = u(x) * 0.25 * ux * ux;
        let got = grad_norm_sq(&eta, &m, &[x, 0.0], 1.0).unwrap();
        assert!((got - expected).abs() < 1e-6 * (1.0 + expected), "{got} vs {expected}");
        assert!((grad_norm_sq(&eta, &m, &[x, 0.0], 2.0).unwrap() - 2.0 * got).abs() < 1e-15);
    }

    let prod = Model::product(Model::flat_torus(1), perturbed_1()).unwrap();
    let eta = PForm::basis(2, &[0]).unwrap();
    assert!(grad_norm_sq(&eta, &prod, &[0.1, 0.2, 0.3, 0.4], 1.0).unwrap().abs() < 1e-15);
}

#[test]
fn holomorphy_and_closedness() {
    let pts = sample_points(2);
    let r = dbar_residual(&PForm::basis(2, &[0]).unwrap(), &pts).unwrap();
    assert_eq!(r.max(), 0.0);
    let r = dbar_residual(&PForm::new(2, 1, vec![(vec![1], Expr::z(0))]).unwrap(), &pts).unwrap();
    assert!(r.dbar < 1e-15);
    assert!((r.closed - 1.0).abs() < 1e-15);
    let r = dbar_residual(&PForm::new(2, 1, vec![(vec![0], Expr::z(0))]).unwrap(), &pts).unwrap();
    assert!(r.max() < 1e-15);
    let r = dbar_residual(&PForm::new(2, 1, vec![(vec![0], Expr::zbar(0))]).unwrap(), &pts).unwrap();
    assert!(r.dbar > 0.9);
}

#[test]
fn covariant_derivative_examples() {
    let flat = Model::flat_torus(2);
    let d = covariant_deriv(&flat, &PForm::basis(2, &[0]).unwrap(), &[0.1; 4]).unwrap();
    assert!(d.iter().all(|f| f.max_abs() == 0.0));

    let m = perturbed_2();
    let x = [0.21, 0.4, 0.6, 0.13];
    let gam = m.christoffel(&x).unwrap();
    let d = covariant_deriv(&m, &PForm::basis(2, &[0]).unwrap(), &x).unwrap();
    for i in 0..2 {
        assert!((d[i].get(&[0]) + gam.get(0, i, 0)).norm() < 1e-15);
    }
    assert!(gam.max_abs() > 0.1);

    // antisymmetry in the form slots
    let eta = PForm::new(2, 2, vec![(vec![0, 1], Expr::z(0) + Expr::one())]).unwrap();
    let jet = m.jet(&x).unwrap();
    let ej = eta.jet(&x).unwrap();
    for i in 0..2 {
        let a = covariant_component(&jet, &ej, &gam, i, &[0, 1]);
        let b = covariant_component(&jet, &ej, &gam, i, &[1, 0]);
        assert!((a + b).norm() < 1e-14);
    }
}

#[test]
fn beta_psd_on_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let fs = Model::fubini_study(2, 1.0).unwrap();
    let forms = [
        PForm::basis(2, &[0]).unwrap(),
        PForm::basis(2, &[0, 1]).unwrap(),
        PForm::new(2, 1, vec![(vec![0], Expr::z(1)), (vec![1], Expr::one())]).unwrap(),
    ];
    for _ in 0..50 {
        let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for eta in &forms {
            for m in [&fs, &perturbed_2()] {
                assert!(beta(eta, m, &x).unwrap().is_psd());
            }
        }
    }
}

#[test]
fn p1_curvature_contraction_is_quartic_in_dual_vector() {
    // β^{ij̄}β^{kl̄}R_{ij̄kl̄} = R(v, v̄, v, v̄), v = g^{ij̄} η̄_j ∂_i
    let m = Model::fubini_study(2, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..10 {
        let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let coeffs = [linalg::random_complex(&mut rng), linalg::random_complex(&mut rng)];
        let eta = PForm::constant(2, 1, &[(vec![0], coeffs[0]), (vec![1], coeffs[1])]).unwrap();
        let jet = m.jet(&x).unwrap();
        let b = beta(&eta, &m, &x).unwrap().raised(&jet.ginv);
        let rm = jet.curvature();
        let mut contraction = C64::new(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        contraction += b[(i, j)] * b[(k, l)] * rm.get(i, j, k, l);
                    }
                }
            }
        }
        let v: Vec<C64> = (0..2)
            .map(|i| (0..2).map(|j| jet.ginv[(i, j)] * coeffs[j].conj()).sum())
            .collect();
        assert!((contraction.re - rm.quartic(&v)).abs() < 1e-10);
        assert!(contraction.im.abs() < 1e-12);
    }
}
