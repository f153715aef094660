use kahler_core::exterior::MixedForm;
use kahler_core::expr::{parse, Expr, Tape};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

/// Expressions over `x1, y1, x2, y2` together with source text for them.
fn expr_strategy() -> impl Strategy<Value = (String, Expr)> {
    let leaf = prop_oneof![
        (0usize..4).prop_map(|v| {
            let name = format!("{}{}", if v % 2 == 0 { "x" } else { "y" }, v / 2 + 1);
            (name, Expr::var(v))
        }),
        (-2.0f64..2.0).prop_map(|c| (format!("({c})"), Expr::real(c))),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|((sa, a), (sb, b))| (format!("({sa} + {sb})"), a + b)),
            (inner.clone(), inner.clone()).prop_map(|((sa, a), (sb, b))| (format!("({sa} - {sb})"), a - b)),
            (inner.clone(), inner.clone()).prop_map(|((sa, a), (sb, b))| (format!("({sa})*({sb})"), a * b)),
            inner.clone().prop_map(|(s, a)| (format!("sin({s})"), a.sin())),
            inner.clone().prop_map(|(s, a)| (format!("cos({s})"), a.cos())),
            // keep exp arguments bounded so differences stay well scaled
            inner.prop_map(|(s, a)| (format!("exp(0.3*sin({s}))"), (a.sin().scale(C64::new(0.3, 0.0))).exp())),
        ]
    })
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 4)
}

fn close(a: C64, b: C64, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, ..ProptestConfig::default() })]

    #[test]
    fn parse_agrees_with_builder((src, e) in expr_strategy(), x in point()) {
        let parsed = parse(&src, 2).unwrap();
        prop_assert!(close(parsed.eval(&x).unwrap(), e.eval(&x).unwrap(), 1e-12));
    }

    #[test]
    fn printing_round_trips((_, e) in expr_strategy(), x in point()) {
        let back = parse(&e.to_string(), 2).unwrap();
        prop_assert!(close(back.eval(&x).unwrap(), e.eval(&x).unwrap(), 1e-12), "{}", e);
    }

    #[test]
    fn derivative_matches_differences((_, e) in expr_strategy(), x in point(), v in 0usize..4) {
        let h = 1e-3;
        let at = |t: f64| {
            let mut p = x.clone();
            p[v] += t;
            e.eval(&p).unwrap()
        };
        let fd = (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h);
        let exact = e.diff(v).eval(&x).unwrap();
        prop_assert!(close(exact, fd, 1e-5), "{} d/dv{}: {} vs {}", e, v, exact, fd);
    }

    #[test]
    fn mixed_partials_commute((_, e) in expr_strategy(), x in point(), a in 0usize..4, b in 0usize..4) {
        let ab = e.diff(a).diff(b).eval(&x).unwrap();
        let ba = e.diff(b).diff(a).eval(&x).unwrap();
        prop_assert!(close(ab, ba, 1e-10));
    }

    #[test]
    fn tape_matches_tree((_, e) in expr_strategy(), x in point()) {
        let roots = [e.clone(), e.diff(0), e.diff(3)];
        let tape = Tape::new(&roots);
        let mut p = x.clone();
        p.resize(p.len().max(tape.arity()), 0.0);
        let got = tape.eval(&p).unwrap();
        for (r, g) in roots.iter().zip(got) {
            prop_assert!(close(r.eval(&x).unwrap(), g, 1e-12));
        }
    }
}

/// Random constant form of bidegree `(p, q)` on `C³`.
fn mixed(p: usize, q: usize) -> impl Strategy<Value = MixedForm> {
    let subsets = |k: usize| -> Vec<Vec<usize>> {
        (0u32..8).filter(|m| m.count_ones() as usize == k).map(|m| (0..3).filter(|b| m >> b & 1 == 1).collect()).collect()
    };
    let (hol, anti) = (subsets(p), subsets(q));
    let count = hol.len() * anti.len();
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), count).prop_map(move |cs| {
        let mut f = MixedForm::zero(3, p, q).unwrap();
        for (k, (re, im)) in cs.into_iter().enumerate() {
            f.add_term(&hol[k / anti.len()], &anti[k % anti.len()], C64::new(re, im)).unwrap();
        }
        f
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn wedge_is_associative(a in mixed(1, 0), b in mixed(0, 1), c in mixed(1, 1)) {
        let left = a.wedge(&b).unwrap().wedge(&c).unwrap();
        let right = a.wedge(&b.wedge(&c).unwrap()).unwrap();
        prop_assert!(left.max_abs_diff(&right) < 1e-12);
    }

    #[test]
    fn wedge_is_graded_commutative(a in mixed(1, 0), b in mixed(1, 1), c in mixed(0, 1)) {
        // even forms commute, odd forms anticommute
        let ab = a.wedge(&b).unwrap();
        prop_assert!(ab.max_abs_diff(&b.wedge(&a).unwrap()) < 1e-12);
        let ac = a.wedge(&c).unwrap();
        let ca = c.wedge(&a).unwrap().scale(C64::new(-1.0, 0.0));
        prop_assert!(ac.max_abs_diff(&ca) < 1e-12);
        prop_assert!(a.wedge(&a).unwrap().max_abs_diff(&MixedForm::zero(3, 2, 0).unwrap()) < 1e-12);
    }

    #[test]
    fn conjugation_is_an_involution(a in mixed(1, 1)) {
        prop_assert!(a.conjugate().conjugate().max_abs_diff(&a) < 1e-15);
    }
}
