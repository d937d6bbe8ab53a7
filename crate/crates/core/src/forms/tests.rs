use proptest::prelude::*;

use super::*;
use crate::expr::{eq_randomized, parse, SamplingDomain};

const NAMES: [&str; 3] = ["x", "y", "z"];

fn p(s: &str) -> ScalarExpr {
    parse(s, &NAMES).unwrap()
}

fn ctx2() -> FormContext {
    FormContext::new(2)
}

fn assert_forms_equal(a: &IteratedForm, b: &IteratedForm, dom: &SamplingDomain) {
    let diff = a - b;
    for (gens, c) in diff.terms() {
        let verdict = eq_randomized(c, &ScalarExpr::zero(), dom).unwrap();
        assert!(verdict.is_equal(), "coefficient of {gens:?} differs: {verdict:?}\n{}", diff.display(&NAMES));
    }
}

#[test]
fn koszul_examples() {
    let d1 = MultiDegree::new(false, vec![1, 0]);
    let d2 = MultiDegree::new(false, vec![0, 1]);
    assert_eq!(koszul_sign(&d1, &d1), -1);
    assert_eq!(koszul_sign(&d1, &d2), 1);
    let odd = MultiDegree::new(true, vec![1, 0]);
    assert_eq!(koszul_sign(&odd, &odd), 1);
    assert_eq!(MultiDegree::new(false, vec![1, 0, 0]), d1);
}

#[test]
fn product_examples() {
    let c = ctx2();
    let a = c.dx(&[1], 0);
    assert!((&a * &a).is_zero());
    let b = c.dx(&[2], 1);
    assert!((&(&a * &b) - &(&b * &a)).is_zero());
    let p1 = c.dx(&[1, 2], 0);
    let p2 = c.dx(&[1, 2], 1);
    assert!((&(&p1 * &p2) - &(&p2 * &p1)).is_zero());
    assert!(!(&p1 * &p1).is_zero());
    let odd = FormContext::with_parities(vec![false, true]);
    let dtheta = odd.dx(&[1], 1);
    assert!(!(&dtheta * &dtheta).is_zero());
}

#[test]
fn generator_order_and_identification() {
    let c = FormContext::new(2).with_depth(4).unwrap();
    let order = [
        c.generator(&[1], 1).unwrap(),
        c.generator(&[2], 0).unwrap(),
        c.generator(&[3], 0).unwrap(),
        c.generator(&[1, 2], 0).unwrap(),
        c.generator(&[1, 3], 0).unwrap(),
        c.generator(&[2, 3], 0).unwrap(),
        c.generator(&[1, 2, 3], 0).unwrap(),
    ];
    for w in order.windows(2) {
        assert!(w[0] < w[1], "{w:?}");
    }
    assert!(c.generator(&[1, 4], 0).unwrap() < c.generator(&[2, 3], 0).unwrap());
    assert_eq!(c.generator(&[2, 1], 1).unwrap(), c.generator(&[1, 2], 1).unwrap());
    assert!(c.generator(&[5], 0).is_err());
    assert!(c.generator(&[1], 2).is_err());
}

#[test]
fn differential_examples() {
    let c = ctx2();
    let x = IteratedForm::scalar(ScalarExpr::var(0));
    assert_eq!(c.differential(1, &x).unwrap(), c.dx(&[1], 0));
    assert!(c.differential(1, &c.dx(&[1], 0)).unwrap().is_zero());
    assert_eq!(c.differential(1, &c.dx(&[2], 1)).unwrap(), c.dx(&[1, 2], 1));
    assert_eq!(c.differential(2, &c.dx(&[1], 1)).unwrap(), c.dx(&[2, 1], 1));
    assert!(matches!(c.differential(4, &x), Err(FormError::DepthOverflow { slot: 4, depth: 3 })));
}

/// The three-term expansion of `-d2 d1 (τ_{αμ} d1x^α d2x^μ)`, built from
/// products only.
fn christoffel_form_by_display(c: &FormContext, tau: &[[ScalarExpr; 2]; 2]) -> IteratedForm {
    let n = 2;
    let mut out = IteratedForm::zero();
    for a in 0..n {
        for b in 0..n {
            for m in 0..n {
                for v in 0..n {
                    let coeff = tau[a][m].partial(b).partial(v);
                    let mono = &(&(&c.dx(&[1], b) * &c.dx(&[1], a)) * &c.dx(&[2], m)) * &c.dx(&[2], v);
                    out += &mono.scale(&coeff);
                }
                let gamma = tau[a][b].partial(m) + tau[b][m].partial(a) - tau[a][m].partial(b);
                let mono = &(&c.dx(&[1], a) * &c.dx(&[2], m)) * &c.dx(&[2, 1], b);
                out += &mono.scale(&gamma);
            }
            out += &(&c.dx(&[2, 1], a) * &c.dx(&[2, 1], b)).scale(&tau[a][b]);
        }
    }
    out
}

#[test]
fn christoffel_form_matches_displayed_expansion() {
    let c = ctx2();
    let tau = [[p("x^2*y + 1"), p("x*y^3")], [p("y - x^2"), p("2 + x*y")]];
    let flat: Vec<ScalarExpr> = tau.iter().flatten().cloned().collect();
    let t = c.embed_tensor(2, &flat).unwrap();
    let gamma = -c.differential(2, &c.differential(1, &t).unwrap()).unwrap();
    let expected = christoffel_form_by_display(&c, &tau);
    let dom = SamplingDomain::new(vec![(-1.0, 1.0); 2]).unwrap();
    assert_forms_equal(&gamma, &expected, &dom);
    // d2 d1 and d1 d2 agree.
    let other = -c.differential(1, &c.differential(2, &t).unwrap()).unwrap();
    assert_eq!(gamma, other);
}

#[test]
fn kappa_examples() {
    let c = ctx2();
    assert_eq!(c.kappa(&c.dx(&[1], 0)).unwrap(), c.dx(&[2], 0));
    let g = c.embed_tensor(2, &[p("1"), p("x"), p("x"), p("y^2")]).unwrap();
    assert_eq!(c.kappa(&g).unwrap(), g);
    let w = c.embed_tensor(2, &[p("0"), p("x"), p("-x"), p("0")]).unwrap();
    assert_eq!(c.kappa(&w).unwrap(), -&w);
    assert!(matches!(c.kappa(&c.dx(&[3], 0)), Err(FormError::KappaOutsideDepthTwo { slot: 3 })));
}

#[test]
fn insertion_examples() {
    let c = ctx2();
    let one = IteratedForm::one();
    assert_eq!(c.insert_coordinate_field(2, 1, &c.dx(&[2], 1)).unwrap(), one);
    assert!(c.insert_coordinate_field(2, 0, &c.dx(&[2], 1)).unwrap().is_zero());
    assert!(c.insert_coordinate_field(1, 1, &c.dx(&[2], 1)).unwrap().is_zero());
    assert!(c.insert_coordinate_field(1, 1, &c.dx(&[1, 2], 1)).unwrap().is_zero());

    let g = c.embed_tensor(2, &[p("x"), p("y"), p("y"), p("x*y")]).unwrap();
    let xf = [p("y"), p("2")];
    let yf = [p("x^2"), p("-1")];
    let value = c.insert_field(2, &yf, &c.insert_field(1, &xf, &g).unwrap()).unwrap();
    // g_{μν} X^μ Y^ν
    let expected = p("x*y*x^2 - y^2 + y*2*x^2 - 2*x*y");
    let dom = SamplingDomain::new(vec![(-2.0, 2.0); 2]).unwrap();
    assert_forms_equal(&value, &IteratedForm::scalar(expected), &dom);
}

#[test]
fn insert_insertion_examples() {
    let c = ctx2();
    assert_eq!(c.insert_insertion(1, &c.dx(&[1, 2], 1)).unwrap(), IteratedForm::one());
    assert!(c.insert_insertion(0, &c.dx(&[1, 2], 1)).unwrap().is_zero());
    assert!(c.insert_insertion(1, &c.dx(&[2], 1)).unwrap().is_zero());
}

#[test]
fn insert_insertion_on_christoffel_form() {
    let c = ctx2();
    let tau = [[p("x^2 + 3"), p("x*y")], [p("y^2 - x"), p("2 + x*y^2")]];
    let flat: Vec<ScalarExpr> = tau.iter().flatten().cloned().collect();
    let t = c.embed_tensor(2, &flat).unwrap();
    let gamma = -c.differential(2, &c.differential(1, &t).unwrap()).unwrap();
    let dom = SamplingDomain::new(vec![(-1.0, 1.0); 2]).unwrap();
    for alpha in 0..2 {
        let got = c.insert_insertion(alpha, &gamma).unwrap();
        let mut expected = IteratedForm::zero();
        for b in 0..2 {
            let g_ab = (&tau[alpha][b] + &tau[b][alpha]).scale(&num_rational::BigRational::new(1.into(), 2.into()));
            expected += &c.dx(&[2, 1], b).scale(&(ScalarExpr::int(2) * g_ab));
            for m in 0..2 {
                let gam = tau[b][alpha].partial(m) + tau[alpha][m].partial(b) - tau[b][m].partial(alpha);
                expected += &(&c.dx(&[1], b) * &c.dx(&[2], m)).scale(&gam);
            }
        }
        assert_forms_equal(&got, &expected, &dom);
    }
}

#[test]
fn lie_examples() {
    let c = ctx2();
    let e0 = [ScalarExpr::one(), ScalarExpr::zero()];
    let f = IteratedForm::scalar(p("x^2*sin(y)"));
    assert_eq!(c.lie(1, &e0, &f).unwrap(), IteratedForm::scalar(p("2*x*sin(y)")));
    assert!(c.lie(1, &e0, &c.dx(&[1], 1)).unwrap().is_zero());
    let x = [p("y"), p("x^2")];
    let fs = IteratedForm::scalar(p("x*y"));
    let g = &c.dx(&[1], 0).scale(&p("y^3")) + &c.dx(&[1], 1);
    let lhs = c.lie(1, &x, &(&fs * &g)).unwrap();
    let rhs = &(&c.lie(1, &x, &fs).unwrap() * &g) + &(&fs * &c.lie(1, &x, &g).unwrap());
    let dom = SamplingDomain::new(vec![(-1.0, 1.0); 2]).unwrap();
    assert_forms_equal(&lhs, &rhs, &dom);
}

#[test]
fn connection_derivation_examples() {
    // Γ = (d1d2x^a + G^a_{μβ} d1x^β d2x^μ) i_{∂_a} with arbitrary coefficients.
    let c = ctx2();
    let sym = |a: usize, m: usize, b: usize| p(&format!("{}*x + {}*y", a + 2 * m + 1, b + 3 * a));
    let mut gam = FormDerivation::new();
    for a in 0..2 {
        let mut coeff = c.dx(&[1, 2], a);
        for m in 0..2 {
            for b in 0..2 {
                coeff += &(&c.dx(&[1], b) * &c.dx(&[2], m)).scale(&sym(a, m, b));
            }
        }
        gam.push(coeff, BasisOp::Insert { slot: 1, coord: a });
    }
    let x0 = IteratedForm::scalar(ScalarExpr::var(0));
    assert!(gam.apply(&c, &x0).unwrap().is_zero());
    for s in 0..2 {
        let got = gam.apply(&c, &c.dx(&[1], s)).unwrap();
        let mut expected = c.dx(&[1, 2], s);
        for m in 0..2 {
            for b in 0..2 {
                expected += &(&c.dx(&[1], b) * &c.dx(&[2], m)).scale(&sym(s, m, b));
            }
        }
        assert_eq!(got, expected);
    }
    // ∇ on a scalar is d2.
    let mut nabla = FormDerivation::new();
    for m in 0..2 {
        nabla.push(c.dx(&[2], m), BasisOp::Partial(m));
    }
    let f = IteratedForm::scalar(p("x*sin(y)"));
    assert_eq!(nabla.apply(&c, &f).unwrap(), c.differential(2, &f).unwrap());
    assert_eq!(gam.degree(&c).unwrap(), MultiDegree::new(false, vec![0, 1]));
}

#[test]
fn degree_queries() {
    let c = ctx2();
    let f = &c.dx(&[1], 0) * &c.dx(&[1, 2], 1);
    assert_eq!(f.degree().unwrap(), MultiDegree::new(false, vec![2, 1]));
    let mixed = &c.dx(&[1], 0) + &c.dx(&[2], 0);
    assert_eq!(mixed.degree(), Err(FormError::Inhomogeneous));
    assert_eq!(IteratedForm::zero().degree(), Err(FormError::ZeroForm));
}

#[test]
fn printer_is_canonical() {
    let c = FormContext::new(3);
    let f = &(&c.dx(&[1, 2], 2) * &c.dx(&[2], 1)) * &c.dx(&[1], 0);
    let f = &f.scale(&p("2*x")) + &IteratedForm::scalar(p("y + 1"));
    assert_eq!(f.display(&NAMES).to_string(), "1 + y\n2*x · d1x^x d2x^y d2d1x^z");
    let g = c.dx(&[1], 0).scale(&p("x - y"));
    assert_eq!(g.display(&NAMES).to_string(), "(x - y) · d1x^x");
}

#[test]
fn embed_tensor_validates_length() {
    let c = ctx2();
    assert!(matches!(c.embed_tensor(2, &[p("1")]), Err(FormError::ComponentCount { expected: 4, got: 1 })));
}

// Randomized algebra laws ---------------------------------------------------

fn ctx_super() -> FormContext {
    FormContext::with_parities(vec![false, false, true])
}

fn arb_coefficient() -> impl Strategy<Value = ScalarExpr> {
    (-3i64..=3, 0i64..3, 0i64..3, any::<bool>()).prop_map(|(r, a, b, trig)| {
        let r = if r == 0 { 1 } else { r };
        let mut f = vec![ScalarExpr::int(r), ScalarExpr::var(0).powi(a), ScalarExpr::var(1).powi(b)];
        if trig {
            f.push(ScalarExpr::var(1).sin());
        }
        ScalarExpr::product(f)
    })
}

fn arb_generator(depth: u8) -> impl Strategy<Value = Generator> {
    (1u8..(1 << depth), 0usize..3).prop_map(|(mask, coord)| Generator::new(mask, coord, coord == 2))
}

fn arb_monomial(depth: u8) -> impl Strategy<Value = IteratedForm> {
    (arb_coefficient(), prop::collection::vec(arb_generator(depth), 0..4))
        .prop_map(|(c, g)| IteratedForm::monomial(c, g))
}

fn arb_form(depth: u8) -> impl Strategy<Value = IteratedForm> {
    prop::collection::vec(arb_monomial(depth), 1..4).prop_map(|ms| ms.into_iter().sum())
}

fn sign_form(negative: bool, f: IteratedForm) -> IteratedForm {
    if negative {
        -f
    } else {
        f
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn graded_commutativity(f in arb_monomial(3), g in arb_monomial(3)) {
        prop_assume!(!f.is_zero() && !g.is_zero());
        let s = koszul_sign(&f.degree().unwrap(), &g.degree().unwrap());
        prop_assert_eq!((&f * &g).expanded(), sign_form(s < 0, &g * &f).expanded());
    }

    #[test]
    fn associativity(f in arb_form(3), g in arb_form(3), h in arb_monomial(3)) {
        prop_assert_eq!((&(&f * &g) * &h).expanded(), (&f * &(&g * &h)).expanded());
    }

    #[test]
    fn differentials_square_to_zero_and_commute(f in arb_form(3), i in 1usize..=3, j in 1usize..=3) {
        let c = ctx_super();
        let di = c.differential(i, &f).unwrap();
        prop_assert!(c.differential(i, &di).unwrap().is_zero());
        let dij = c.differential(j, &di).unwrap();
        let dji = c.differential(i, &c.differential(j, &f).unwrap()).unwrap();
        prop_assert_eq!(dij, dji);
    }

    #[test]
    fn kappa_laws(f in arb_form(2), g in arb_monomial(2)) {
        let c = ctx_super();
        let kf = c.kappa(&f).unwrap();
        prop_assert_eq!(c.kappa(&kf).unwrap(), f.clone());
        prop_assert_eq!(c.kappa(&(&f * &g)).unwrap(), &kf * &c.kappa(&g).unwrap());
        let c2 = ctx_super().with_depth(2).unwrap();
        let lhs = c2.kappa(&c2.differential(1, &kf).unwrap()).unwrap();
        prop_assert_eq!(lhs, c2.differential(2, &f).unwrap());
        let lhs = c2.kappa(&c2.differential(2, &kf).unwrap()).unwrap();
        prop_assert_eq!(lhs, c2.differential(1, &f).unwrap());
    }

    #[test]
    fn signed_leibniz(f in arb_monomial(3), g in arb_form(3), slot in 1usize..=3, coord in 0usize..3) {
        prop_assume!(!f.is_zero());
        let c = ctx_super();
        let df = f.degree().unwrap();
        let fg = &f * &g;
        let check = |op: &dyn Fn(&IteratedForm) -> IteratedForm, delta: MultiDegree| {
            let s = koszul_sign(&delta, &df);
            let rhs = &(&op(&f) * &g) + &sign_form(s < 0, &f * &op(&g));
            (op(&fg).expanded(), rhs.expanded())
        };
        let (l, r) = check(&|x| c.differential(slot, x).unwrap(), MultiDegree::unit(false, slot));
        prop_assert_eq!(l, r);
        let (l, r) = check(
            &|x| c.insert_coordinate_field(slot, coord, x).unwrap(),
            BasisOp::Insert { slot, coord }.degree(&c),
        );
        prop_assert_eq!(l, r);
        let (l, r) = check(
            &|x| c.insert_insertion(coord, x).unwrap(),
            BasisOp::InsertInsertion { coord }.degree(&c),
        );
        prop_assert_eq!(l, r);
        let (l, r) = check(&|x| c.partial(coord, x).unwrap(), BasisOp::Partial(coord).degree(&c));
        prop_assert_eq!(l, r);
    }
}
