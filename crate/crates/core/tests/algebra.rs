use formality::graphs::{AdmissibleGraph, Target, TwoTypeGraph};
use formality::hochschild::*;
use formality::polyfields::*;
use formality::scalar::{rational, Rational};
use formality::weights::{WeightEstimate, WeightTable};
use proptest::prelude::*;

fn space(d: usize) -> GradedSpaceSpec {
    GradedSpaceSpec::new(vec![d]).unwrap()
}

fn sign(e: usize) -> Rational {
    rational(if e % 2 == 0 { 1 } else { -1 }, 1)
}

/// Random inputs: a dimension in 1..=3, arities up to the dimension, a seed.
fn inputs(count: usize) -> impl Strategy<Value = Vec<Polyvector>> {
    (1usize..=3, proptest::collection::vec(0usize..=3, count), any::<u64>()).prop_map(move |(d, ar, seed)| {
        let ar: Vec<usize> = ar.into_iter().map(|a| a.min(d)).collect();
        random_tuple(&space(d), &ar, 2, 2, seed)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn schouten_symmetry(xs in inputs(2)) {
        let (a, b) = (&xs[0], &xs[1]);
        let (p, q) = (a.arity().unwrap_or(0), b.arity().unwrap_or(0));
        let ab = schouten(a, b).unwrap();
        let ba = schouten(b, a).unwrap();
        prop_assert_eq!(ba, ab.scale(&sign(p * q)));
    }

    #[test]
    fn schouten_jacobi(xs in inputs(3)) {
        let refs: Vec<&Polyvector> = xs.iter().collect();
        prop_assert!(linfty_residual(3, &refs, &WeightTable::single_edge(), Normalization::Natural).unwrap().is_zero());
    }

    #[test]
    fn json_round_trip(xs in inputs(1)) {
        let text = xs[0].to_json().to_string();
        prop_assert_eq!(Polyvector::parse(&text).unwrap(), xs[0].clone());
    }

    #[test]
    fn operator_json_round_trip(xs in inputs(1)) {
        let op = hkr(&xs[0]).unwrap();
        prop_assert_eq!(PolyDiffOperator::parse(&op.to_json().to_string()).unwrap(), op);
    }

    #[test]
    fn gerstenhaber_symmetry(xs in inputs(2)) {
        let a = hkr(&xs[0]).unwrap();
        let b = hkr(&xs[1]).unwrap().add(&PolyDiffOperator::zero(xs[1].space(), 0)).unwrap();
        let (p, q) = (a.arity(), b.arity());
        let ab = gerstenhaber(&a, &b).unwrap();
        let ba = gerstenhaber(&b, &a).unwrap();
        prop_assert_eq!(ba, ab.scale(&(-sign((p + 1) * (q + 1)))));
    }

    #[test]
    fn hkr_is_a_cocycle(xs in inputs(1)) {
        prop_assert!(hoch_differential(&hkr(&xs[0]).unwrap()).unwrap().is_zero());
    }

    #[test]
    fn vector_fields_act_as_derivations(seed in any::<u64>(), d in 1usize..=3) {
        let s = space(d);
        let xs = random_tuple(&s, &[1, 0], 2, 3, seed);
        let x = hkr(&xs[0]).unwrap();
        let f = PolyDiffOperator::from_polynomial(&to_poly(&xs[1]));
        let direct = x.apply(&[&to_poly(&xs[1])]).unwrap();
        prop_assert_eq!(gerstenhaber(&x, &f).unwrap(), PolyDiffOperator::from_polynomial(&direct));
    }

    #[test]
    fn apply_is_multilinear(seed in any::<u64>()) {
        let s = space(2);
        let xs = random_tuple(&s, &[2, 0, 0, 0], 2, 3, seed);
        let op = hkr(&xs[0]).unwrap();
        let (f, g, h) = (to_poly(&xs[1]), to_poly(&xs[2]), to_poly(&xs[3]));
        let lhs = op.apply(&[&f.add(&g).unwrap(), &h]).unwrap();
        let rhs = op.apply(&[&f, &h]).unwrap().add(&op.apply(&[&g, &h]).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    /// With any weights on canonical graphs, F_2 is graded symmetric.
    #[test]
    fn f2_graded_symmetry(seed in any::<u64>(), p in 1usize..=2, q in 1usize..=2) {
        let s = space(2);
        let xs = random_tuple(&s, &[p, q], 2, 2, seed);
        let mut table = WeightTable::new();
        for (i, g) in required_two_type(&[p, q]).into_iter().chain(required_two_type(&[q, p])).enumerate() {
            table.insert(WeightEstimate::exact(g.key(), rational(i as i64 + 2, 7)));
        }
        let xy = f_n_with(&[&xs[0], &xs[1]], &table).unwrap();
        let yx = f_n_with(&[&xs[1], &xs[0]], &table).unwrap();
        prop_assert_eq!(yx, xy.scale(&sign(p * q)));
    }

    /// Exact cases of the morphism relation: pairs of vector fields and
    /// (bivector, function), where no two-type graph with two aerial
    /// vertices survives.
    #[test]
    fn exact_morphism_relation(seed in any::<u64>(), case in 0usize..3) {
        let s = space(2);
        let ar = [[1, 1], [2, 0], [0, 2]][case];
        let xs = random_tuple(&s, &ar, 2, 3, seed);
        let mut table = WeightTable::single_edge();
        for k in 0..=2 {
            if k > 0 {
                let fan = TwoTypeGraph::new(1, k, (1..=k).map(|b| (1, Target::Boundary(b))).collect()).unwrap();
                table.insert(WeightEstimate::exact(fan.key(), rational(1, if k == 2 { 2 } else { 1 })));
            }
        }
        prop_assert!(morphism_residual(&[&xs[0], &xs[1]], &table).unwrap().is_zero());
    }
}

fn to_poly(p: &Polyvector) -> Polynomial {
    let mut out = Polynomial::zero(p.space());
    for (k, c) in p.terms() {
        assert_eq!(k.arity(), 0);
        out = out.add(&Polynomial::monomial(p.space(), c.clone(), &k.mono).unwrap()).unwrap();
    }
    out
}

#[test]
fn f1_is_hkr_with_exact_fans() {
    let s = space(3);
    let mut table = WeightTable::new();
    for k in 1..=3usize {
        let fan = TwoTypeGraph::new(1, k, (1..=k).map(|b| (1, Target::Boundary(b))).collect()).unwrap();
        table.insert(WeightEstimate::exact(fan.key(), rational(1, [1, 1, 2, 6][k])));
    }
    for (i, a) in [0usize, 1, 2, 3].into_iter().enumerate() {
        let g = random_tuple(&s, &[a], 2, 3, i as u64).remove(0);
        assert_eq!(f_n_with(&[&g], &table).unwrap(), hkr(&g).unwrap(), "arity {a}");
    }
}

#[test]
fn zero_input_gives_zero() {
    let s = space(2);
    let x = random_tuple(&s, &[1], 2, 2, 3).remove(0);
    let zero = Polyvector::zero(&s);
    let table = WeightTable::single_edge();
    assert!(f_n_with(&[&x, &zero], &table).unwrap().is_zero());
}

#[test]
fn missing_weights_are_named() {
    let s = space(2);
    let xs = random_tuple(&s, &[2, 1], 2, 2, 5);
    let err = f_n_with(&[&xs[0], &xs[1]], &WeightTable::new()).unwrap_err();
    assert!(err.to_string().contains("g2:n=2;m=1;e=(1,2)(1,b1)(2,b1)"), "{err}");
    let err = taylor_l_n(&[&xs[0], &xs[1], &xs[0]], &WeightTable::single_edge(), Normalization::Natural).unwrap_err();
    assert!(err.to_string().contains("g:n=3"), "{err}");
}

#[test]
fn quadratic_obstruction_has_one_live_shape() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/quadratic.pv")).unwrap();
    let alpha = Polyvector::parse(&text).unwrap();
    let mut table = WeightTable::single_edge();
    for g in formality::graphs::enumerate_graphs(4, 5, true) {
        table.insert(WeightEstimate::exact(g.key(), rational(1, 12)));
    }
    let obs = first_obstruction(&alpha, &table, Normalization::Natural).unwrap();
    let live: Vec<_> = obs.shapes.iter().filter(|s| !s.value.is_zero()).collect();
    assert_eq!(live.len(), 1);
    assert_eq!(live[0].shape.representative, AdmissibleGraph::ladder(1, 1));
    assert!(obs.shapes.iter().filter(|s| s.passes_filter).count() == 1);
}
