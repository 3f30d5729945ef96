use super::*;
use crate::liealg::build_lie_basis;
use crate::rational::{frac, int};
use proptest::prelude::*;

fn example() -> ControlSystem {
    ControlSystem::from_strs(&["0", "-sin(x1)^2", "2*x1^2*sin(t)"], &["-cos(x1)", "t^2", "-x2"]).unwrap()
}

fn example_with_drift() -> ControlSystem {
    ControlSystem::from_strs(&["0", "-sin(x1)^2 - 2*t*x1", "2*x1^2*sin(t)"], &["-cos(x1)", "t^2", "-x2"]).unwrap()
}

fn xi<const K: usize>(letters: [u8; K]) -> AlgElem {
    AlgElem::word(Word::from(letters))
}

fn combo(parts: &[(Rational, AlgElem)]) -> AlgElem {
    let mut out = AlgElem::zero();
    for (c, e) in parts {
        out.add_scaled(e, c);
    }
    out
}

fn poly(terms: &[(Rational, u32, &[u32])]) -> Polynomial {
    let mut out = Polynomial::zero();
    for (c, t, x) in terms {
        out.add_assign(&Polynomial::monomial(c.clone(), *t, x));
    }
    out
}

fn core_of(sys: &ControlSystem, order: usize) -> CoreDecomposition {
    let table = series_up_to(sys, order).unwrap();
    select_core(&table, &build_lie_basis(order), sys.dimension()).unwrap()
}

fn projection_of(sys: &ControlSystem) -> Projection {
    let core = core_of(sys, 4);
    project(&core, &build_ideal_blocks(&core))
}

#[test]
fn core_selection_of_the_example() {
    let core = core_of(&example(), 4);
    let labels = |v: &[CoreElement]| v.iter().map(|e| e.label.clone()).collect::<Vec<_>>();
    assert_eq!(labels(&core.ell), ["g1", "g3", "g6"]);
    assert_eq!(labels(&core.dees), ["g2", "g4 + 2*g3", "g5", "g7 + 6*g6"]);
    assert_eq!(core.orders(), [1, 3, 4]);
    assert_eq!(core.dees[3].bracket, "[xi_0, [xi_1, xi_0]] + 6*[xi_0, xi_2]");
    // selection reads beyond the needed order only as far as it must
    assert_eq!(core_of(&example(), 5), core);
}

#[test]
fn core_selection_reports_inaccessible_systems() {
    let table = series_up_to(&example(), 3).unwrap();
    assert_eq!(
        select_core(&table, &build_lie_basis(3), 3),
        Err(ApproxError::NotAccessible { n: 3, found: 2, max_order: 3 })
    );
    let single = ControlSystem::from_strs(&["0"], &["1"]).unwrap();
    let core = core_of(&single, 2);
    assert_eq!(core.ell.len(), 1);
    assert_eq!(core.ell[0].element, xi([0]));
    assert!(core.dees.is_empty());
}

#[test]
fn ideal_blocks_of_the_example() {
    let core = core_of(&example(), 4);
    let blocks = build_ideal_blocks(&core);
    let ranks: Vec<(usize, usize)> = blocks.iter().map(|b| (b.order, b.rank())).collect();
    assert_eq!(ranks, [(1, 0), (3, 2), (4, 5)]);
    // the order-3 part is spanned by the order-3 generator and g2 xi_0
    let mut echelon = SparseEchelon::new();
    for r in &blocks[1].rows {
        echelon.insert(&elem_to_sparse(r));
    }
    assert!(echelon.contains(&elem_to_sparse(&core.dees[0].element.concat(&xi([0])))));
    assert!(echelon.contains(&elem_to_sparse(&core.dees[1].element)));
    for m in &blocks[2].matrix() {
        assert_eq!(m.len(), 8);
    }
}

#[test]
fn projections_of_the_example() {
    let proj = projection_of(&example());
    assert_eq!(proj.ell_tilde[0], xi([0]));
    assert_eq!(proj.ell_tilde[1], combo(&[(frac(1, 5), xi([2])), (frac(-2, 5), xi([0, 1]))]));
    assert_eq!(
        proj.ell_tilde[2],
        combo(&[
            (frac(3, 19), xi([0, 2])),
            (frac(23, 285), xi([2, 0])),
            (frac(8, 57), xi([0, 0, 1])),
            (frac(-46, 285), xi([0, 1, 0])),
        ])
    );
}

#[test]
fn projections_are_orthogonal_and_idempotent() {
    let core = core_of(&example(), 4);
    let blocks = build_ideal_blocks(&core);
    let proj = project(&core, &blocks);
    for (l, &w) in proj.ell_tilde.iter().zip(&proj.orders) {
        let block = blocks.iter().find(|b| b.order == w).unwrap();
        for row in &block.rows {
            assert!(row.inner(l).is_zero());
        }
        let projector = Projector::new(&block.rows.iter().map(elem_to_sparse).collect::<Vec<_>>(), &enumerate_basis(w));
        assert_eq!(sparse_to_elem(projector.apply(&elem_to_sparse(l))), *l);
    }
}

#[test]
fn complement_dimension_matches_multi_indices() {
    let core = core_of(&example(), 4);
    let blocks = build_ideal_blocks(&core);
    let weights = core.orders();
    for block in &blocks {
        let complement = (1usize << (block.order - 1)) - block.rank();
        assert_eq!(complement, weighted_multi_indices(&weights, block.order).len(), "order {}", block.order);
    }
}

#[test]
fn multi_indices() {
    assert_eq!(weighted_multi_indices(&[1, 3], 3), [vec![0, 1], vec![3, 0]]);
    assert_eq!(weighted_multi_indices(&[2], 3), Vec::<Vec<u32>>::new());
    assert_eq!(weighted_multi_indices(&[1, 3, 4], 0), [vec![0, 0, 0]]);
}

#[test]
fn shuffle_polynomial_expressions() {
    let proj = projection_of(&example());
    let basis = previous(&proj, 2);
    let p = express_as_shuffle_poly(&xi([0, 0]), &basis, 2).unwrap();
    assert_eq!(p.terms, BTreeMap::from([(vec![2, 0], frac(1, 2))]));
    let y = combo(&[(int(1), xi([2])), (int(-2), xi([0, 1]))]);
    let p = express_as_shuffle_poly(&y, &basis, 3).unwrap();
    assert_eq!(p.terms, BTreeMap::from([(vec![0, 1], int(5))]));
    let witness = combo(&[(frac(2, 5), xi([1])), (frac(-2, 5), xi([0, 0]))]);
    assert!(matches!(
        express_as_shuffle_poly(&witness, &basis, 2),
        Err(ApproxError::NotRepresentable { order: 2, .. })
    ));
    let scalar = AlgElem::scalar(int(3));
    let p = express_as_shuffle_poly(&scalar, &basis, 0).unwrap();
    assert_eq!(p.terms, BTreeMap::from([(vec![0, 0], int(3))]));
    assert!(express_as_shuffle_poly(&scalar, &basis, 1).is_err());
    assert!(express_as_shuffle_poly(&AlgElem::zero(), &basis, 2).unwrap().terms.is_empty());
}

#[test]
fn nonautonomous_system_of_the_example() {
    let sys = build_nonautonomous(&projection_of(&example())).unwrap();
    assert!(sys.a_hat.iter().all(Polynomial::is_zero));
    assert_eq!(sys.b_hat[0], Polynomial::constant(int(-1), 3));
    assert_eq!(sys.b_hat[1], poly(&[(frac(-1, 5), 2, &[0, 0, 0]), (frac(2, 5), 1, &[1, 0, 0])]));
    assert_eq!(
        sys.b_hat[2],
        poly(&[(frac(-3, 19), 2, &[1, 0, 0]), (frac(-4, 57), 1, &[2, 0, 0]), (frac(-23, 57), 0, &[0, 1, 0])])
    );
}

#[test]
fn autonomous_system_does_not_exist_for_the_example() {
    match build_autonomous(&projection_of(&example())) {
        AutonomousOutcome::Nonexistent(w) => {
            assert_eq!(w.witness_index, 2);
            assert_eq!(w.witness_map, WitnessMap::Phi);
            assert_eq!(w.witness_element, combo(&[(frac(2, 5), xi([1])), (frac(-2, 5), xi([0, 0]))]));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn autonomous_system_with_extra_drift() {
    let AutonomousOutcome::Found(sys) = build_autonomous(&projection_of(&example_with_drift())) else {
        panic!("an autonomous approximation exists");
    };
    assert!(sys.is_autonomous());
    assert_eq!(sys.a_hat[0], Polynomial::zero());
    assert_eq!(sys.a_hat[1], poly(&[(frac(-1, 2), 0, &[2, 0, 0])]));
    assert_eq!(sys.a_hat[2], poly(&[(frac(1, 27), 0, &[3, 0, 0]), (frac(-10, 9), 0, &[0, 1, 0])]));
    assert_eq!(sys.b_hat[0], Polynomial::constant(int(-1), 3));
    assert_eq!(sys.b_hat[1], Polynomial::zero());
    assert_eq!(sys.b_hat[2], poly(&[(frac(4, 9), 0, &[0, 1, 0])]));
}

/// The output system must reproduce the projected elements: component `k` of
/// its series is the `ell_tilde_k` coefficient at order `w_k` and vanishes
/// at every other order.
fn assert_reproduces(output: &PolynomialSystem, proj: &Projection, up_to: usize) {
    let table = series_up_to(&output.to_control_system().unwrap(), up_to).unwrap();
    for (w, v) in table.entries() {
        for (k, (l, &order)) in proj.ell_tilde.iter().zip(&proj.orders).enumerate() {
            let expected = if w.order() == order { l.coefficient(w) } else { Rational::zero() };
            assert_eq!(v[k], expected, "component {} at {w}", k + 1);
        }
    }
}

#[test]
fn approximating_systems_reproduce_the_projections() {
    for sys in [example(), example_with_drift()] {
        let proj = projection_of(&sys);
        assert_reproduces(&build_nonautonomous(&proj).unwrap(), &proj, 6);
        if let AutonomousOutcome::Found(auto) = build_autonomous(&proj) {
            assert_reproduces(&auto, &proj, 6);
        }
    }
}

#[test]
fn approximation_is_idempotent() {
    let first = approximate(&example(), &Options::default()).unwrap();
    let output = first.nonautonomous.clone().unwrap();
    let second = approximate(&output.to_control_system().unwrap(), &Options::default()).unwrap();
    assert_eq!(second.orders, first.orders);
    assert_eq!(second.ell_tilde, first.ell_tilde);
    assert_eq!(second.nonautonomous, first.nonautonomous);
}

#[test]
fn pipeline_end_to_end() {
    let result = approximate(&example(), &Options::default()).unwrap();
    assert_eq!(result.series_order, 4);
    assert_eq!(result.orders, [1, 3, 4]);
    assert!(matches!(result.autonomous, Some(AutonomousOutcome::Nonexistent(_))));
    let options = Options { mode: Mode::Autonomous, ..Options::default() };
    let result = approximate(&example_with_drift(), &options).unwrap();
    assert!(result.nonautonomous.is_none());
    assert!(matches!(result.autonomous, Some(AutonomousOutcome::Found(_))));

    let json = serde_json::to_string(&result).unwrap();
    let back: ApproximationResult = serde_json::from_str(&json).unwrap();
    assert_eq!(back, result);
    assert_eq!(serde_json::to_string(&back).unwrap(), json);
}

#[test]
fn pipeline_errors() {
    let options = Options { max_order: 3, ..Options::default() };
    assert_eq!(
        approximate(&example(), &options),
        Err(ApproxError::NotAccessible { n: 3, found: 2, max_order: 3 })
    );
    let options = Options { max_order: ORDER_LIMIT + 1, ..Options::default() };
    assert!(matches!(approximate(&example(), &options), Err(ApproxError::OrderLimit { .. })));
    // x2 never moves
    let stuck = ControlSystem::from_strs(&["0", "0"], &["1", "0"]).unwrap();
    let options = Options { max_order: 5, ..Options::default() };
    assert_eq!(approximate(&stuck, &options), Err(ApproxError::NotAccessible { n: 2, found: 1, max_order: 5 }));
}

#[test]
fn chain_of_integrators_is_its_own_approximation() {
    let sys = ControlSystem::from_strs(&["0", "x1", "x2"], &["1", "0", "0"]).unwrap();
    let result = approximate(&sys, &Options::default()).unwrap();
    assert_eq!(result.orders, [1, 2, 3]);
    let Some(AutonomousOutcome::Found(auto)) = &result.autonomous else { panic!() };
    assert_reproduces(auto, &result.projection(), 5);
    assert_reproduces(result.nonautonomous.as_ref().unwrap(), &result.projection(), 5);
}

fn random_system() -> impl Strategy<Value = ControlSystem> {
    (1i64..=2, -2i64..=2, 1i64..=3, -2i64..=2).prop_map(|(p, q, r, s)| {
        ControlSystem::from_strs(
            &["0".to_string(), format!("{p}*x1 + {q}*t*x1"), format!("{r}*x2 + {s}*x1^2")].iter().map(String::as_str).collect::<Vec<_>>(),
            &["1", &format!("{s}*t*x1"), "0"],
        )
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn random_outputs_reproduce_their_projections(sys in random_system()) {
        let options = Options { max_order: 6, ..Options::default() };
        let result = approximate(&sys, &options).unwrap();
        let proj = result.projection();
        assert_reproduces(result.nonautonomous.as_ref().unwrap(), &proj, 5);
        if let Some(AutonomousOutcome::Found(auto)) = &result.autonomous {
            assert_reproduces(auto, &proj, 5);
        }
    }
}
