//! Acceptance checks. Prints one PASS/FAIL line per criterion and fails if any
//! criterion fails.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use homapprox_core::approx::{
    approximate, build_autonomous, build_ideal_blocks, build_nonautonomous, project, select_core, ApproximationResult,
    AutonomousOutcome, Options, PolynomialSystem, Projection,
};
use homapprox_core::freealg::{enumerate_basis, AlgElem, Word};
use homapprox_core::liealg::{build_lie_basis, witt_dimension};
use homapprox_core::linalg::{Insertion, SparseEchelon, SparseVec};
use homapprox_core::rational::{frac, int, Rational};
use homapprox_core::series::{lie_coefficient, series_up_to, ControlSystem};
use homapprox_core::verify::{
    default_thetas, order_check, shuffle_identity_error, step_halving_change, ControlSignal,
};
use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const TABLE_LIMIT: Duration = Duration::from_secs(5);
const SERIES_LIMIT: Duration = Duration::from_secs(5);
const NUMERIC_LIMIT: Duration = Duration::from_secs(60);
const PERFORMANCE_LIMIT: Duration = Duration::from_secs(60);
const MIN_SLOPE: f64 = 4.7;
const SHUFFLE_TOLERANCE: f64 = 1e-8;
const STEP_TOLERANCE: f64 = 1e-10;
const ORDER_CONTROLS: usize = 10;
const SHUFFLE_CONTROLS: usize = 50;

type Check = Result<(), String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        // written so that NaN fails
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn example() -> ControlSystem {
    ControlSystem::from_strs(&["0", "-sin(x1)^2", "2*x1^2*sin(t)"], &["-cos(x1)", "t^2", "-x2"]).unwrap()
}

fn example_with_drift() -> ControlSystem {
    ControlSystem::from_strs(&["0", "-sin(x1)^2 - 2*t*x1", "2*x1^2*sin(t)"], &["-cos(x1)", "t^2", "-x2"]).unwrap()
}

fn w(letters: &[u8]) -> Word {
    Word::from(letters)
}

fn xi(letters: &[u8]) -> AlgElem {
    AlgElem::word(w(letters))
}

fn combo(parts: &[(Rational, &[u8])]) -> AlgElem {
    let mut out = AlgElem::zero();
    for (c, letters) in parts {
        out.add_term(w(letters), c.clone());
    }
    out
}

fn ints(values: &[i64]) -> Vec<Rational> {
    values.iter().map(|&v| int(v)).collect()
}

fn sparse(e: &AlgElem) -> SparseVec<Word> {
    e.terms().map(|(w, c)| (w.clone(), c.clone())).collect()
}

fn same_span(a: &[AlgElem], b: &[AlgElem]) -> bool {
    let span = |rows: &[AlgElem]| {
        let mut e = SparseEchelon::new();
        rows.iter().for_each(|r| {
            e.insert(&sparse(r));
        });
        e
    };
    let (sa, sb) = (span(a), span(b));
    sa.rank() == sb.rank() && a.iter().all(|r| sb.contains(&sparse(r)))
}

fn within(start: Instant, limit: Duration) -> Check {
    let elapsed = start.elapsed();
    ensure!(elapsed < limit, "took {elapsed:?}, limit {limit:?}");
    Ok(())
}

fn projection_of(sys: &ControlSystem) -> Projection {
    let table = series_up_to(sys, 4).unwrap();
    let core = select_core(&table, &build_lie_basis(4), sys.dimension()).unwrap();
    project(&core, &build_ideal_blocks(&core))
}

fn basis_tables() -> Check {
    let start = Instant::now();
    let table: [&[&[u8]]; 4] = [
        &[&[0]],
        &[&[1], &[0, 0]],
        &[&[2], &[0, 1], &[1, 0], &[0, 0, 0]],
        &[&[3], &[0, 2], &[2, 0], &[1, 1], &[0, 0, 1], &[0, 1, 0], &[1, 0, 0], &[0, 0, 0, 0]],
    ];
    for (m, expected) in table.iter().enumerate() {
        let got: BTreeSet<Word> = enumerate_basis(m + 1).into_iter().collect();
        let want: BTreeSet<Word> = expected.iter().map(|l| w(l)).collect();
        ensure!(got == want, "order {}: {got:?}", m + 1);
    }
    for m in 1..=15 {
        ensure!(enumerate_basis(m).len() == 1 << (m - 1), "|A^{m}| = {}", enumerate_basis(m).len());
    }
    let lie_dims = [1, 1, 2, 3, 6, 9, 18, 30, 56, 99];
    let basis = build_lie_basis(10);
    for (m, &dim) in lie_dims.iter().enumerate() {
        let count = basis.iter().filter(|g| g.order == m + 1).count();
        ensure!(count == dim && witt_dimension(m + 1) == dim as u64, "order {}: {count} basis elements", m + 1);
    }
    within(start, TABLE_LIMIT)
}

fn series_golden() -> Check {
    let start = Instant::now();
    let table = series_up_to(&example(), 4).map_err(|e| e.to_string())?;
    let expected: Vec<(Word, Vec<Rational>)> = vec![
        (w(&[0]), ints(&[1, 0, 0])),
        (w(&[2]), ints(&[0, -1, 0])),
        (w(&[0, 1]), ints(&[0, 2, 0])),
        (w(&[0, 0, 0]), ints(&[-1, 0, 0])),
        (w(&[2, 0]), ints(&[0, 0, -1])),
        (w(&[0, 2]), ints(&[0, 0, -2])),
        (w(&[0, 1, 0]), ints(&[0, 0, 2])),
        (w(&[0, 0, 1]), ints(&[0, 0, -2])),
    ];
    let mut got: Vec<(Word, Vec<Rational>)> = table.nonzero().map(|(w, v)| (w.clone(), v.clone())).collect();
    got.sort();
    let mut want = expected;
    want.sort();
    ensure!(got == want, "nonzero coefficients {got:?}");
    within(start, SERIES_LIMIT)
}

fn lie_coefficients() -> Check {
    let basis = build_lie_basis(4);
    ensure!(basis.len() == 7, "{} basis elements", basis.len());
    let expansions = [
        xi(&[0]),
        xi(&[1]),
        xi(&[2]),
        combo(&[(int(1), &[0, 1]), (int(-1), &[1, 0])]),
        xi(&[3]),
        combo(&[(int(1), &[0, 2]), (int(-1), &[2, 0])]),
        combo(&[(int(2), &[0, 1, 0]), (int(-1), &[0, 0, 1]), (int(-1), &[1, 0, 0])]),
    ];
    for (g, e) in basis.iter().zip(&expansions) {
        ensure!(g.expansion == *e, "g{} = {}", g.index + 1, g.expansion);
    }
    let table = series_up_to(&example(), 4).map_err(|e| e.to_string())?;
    let expected = [[1, 0, 0], [0, 0, 0], [0, -1, 0], [0, 2, 0], [0, 0, 0], [0, 0, -1], [0, 0, 6]];
    for (g, v) in basis.iter().zip(expected) {
        let got = lie_coefficient(&table, g).map_err(|e| e.to_string())?;
        ensure!(got == ints(&v), "v(g{}) = {got:?}", g.index + 1);
    }
    Ok(())
}

fn core_and_ideal() -> Check {
    let table = series_up_to(&example(), 4).map_err(|e| e.to_string())?;
    let basis = build_lie_basis(4);
    let core = select_core(&table, &basis, 3).map_err(|e| e.to_string())?;
    let ell: Vec<&AlgElem> = core.ell.iter().map(|l| &l.element).collect();
    ensure!(ell == [&basis[0].expansion, &basis[2].expansion, &basis[5].expansion], "ell = {ell:?}");
    let mut g7_6g6 = basis[6].expansion.clone();
    g7_6g6.add_scaled(&basis[5].expansion, &int(6));
    let dees = [
        xi(&[1]),
        combo(&[(int(1), &[0, 1]), (int(-1), &[1, 0]), (int(2), &[2])]),
        xi(&[3]),
        g7_6g6,
    ];
    let got: Vec<&AlgElem> = core.dees.iter().map(|d| &d.element).collect();
    ensure!(got == dees.iter().collect::<Vec<_>>(), "d = {got:?}");

    let blocks = build_ideal_blocks(&core);
    let rank = |m: usize| blocks.iter().find(|b| b.order == m).map(|b| b.rank());
    ensure!(rank(1) == Some(0) && rank(3) == Some(2) && rank(4) == Some(5), "ranks {:?}", (rank(1), rank(3), rank(4)));

    // reference matrices with their own column orders
    let cols3: [&[u8]; 4] = [&[2], &[0, 1], &[1, 0], &[0, 0, 0]];
    let j3 = [[0, 0, 1, 0], [2, 1, -1, 0]];
    let cols4: [&[u8]; 8] = [&[3], &[0, 2], &[2, 0], &[1, 1], &[0, 0, 1], &[0, 1, 0], &[1, 0, 0], &[0, 0, 0, 0]];
    let j4 = [
        [0, 0, 0, 0, 0, 0, 1, 0],
        [0, 0, 0, 1, 0, 0, 0, 0],
        [0, 0, 2, 0, 0, 1, -1, 0],
        [1, 0, 0, 0, 0, 0, 0, 0],
        [0, 6, -6, 0, -1, 2, -1, 0],
    ];
    let rows = |cols: &[&[u8]], matrix: &[&[i64]]| -> Vec<AlgElem> {
        matrix.iter().map(|r| combo(&cols.iter().zip(r.iter()).map(|(c, &v)| (int(v), *c)).collect::<Vec<_>>())).collect()
    };
    let j3_rows = rows(&cols3, &j3.iter().map(|r| &r[..]).collect::<Vec<_>>());
    let j4_rows = rows(&cols4, &j4.iter().map(|r| &r[..]).collect::<Vec<_>>());
    let block = |m: usize| blocks.iter().find(|b| b.order == m).unwrap().rows.clone();
    ensure!(same_span(&block(3), &j3_rows), "order-3 ideal differs");
    ensure!(same_span(&block(4), &j4_rows), "order-4 ideal differs");
    Ok(())
}

fn projections() -> Check {
    let proj = projection_of(&example());
    let l2 = combo(&[(frac(1, 5), &[2]), (frac(-2, 5), &[0, 1])]);
    let l3 = combo(&[
        (frac(3, 19), &[0, 2]),
        (frac(23, 285), &[2, 0]),
        (frac(8, 57), &[0, 0, 1]),
        (frac(-46, 285), &[0, 1, 0]),
    ]);
    ensure!(proj.ell_tilde[0] == xi(&[0]), "l~1 = {}", proj.ell_tilde[0]);
    ensure!(proj.ell_tilde[1] == l2, "l~2 = {}", proj.ell_tilde[1]);
    ensure!(proj.ell_tilde[2] == l3, "l~3 = {}", proj.ell_tilde[2]);
    Ok(())
}

fn poly_coefficients(p: &homapprox_core::approx::Polynomial) -> Vec<(u32, Vec<u32>, Rational)> {
    p.terms().map(|(t, x, c)| (t, x.to_vec(), c.clone())).collect()
}

fn reconstruction() -> Check {
    let sys = build_nonautonomous(&projection_of(&example())).map_err(|e| e.to_string())?;
    ensure!(sys.a_hat.iter().all(|a| a.is_zero()), "a_hat is not zero");
    let b = |i: usize| poly_coefficients(&sys.b_hat[i]);
    ensure!(b(0) == [(0, vec![0, 0, 0], int(-1))], "b1 = {}", sys.b_hat[0]);
    ensure!(b(1) == [(1, vec![1, 0, 0], frac(2, 5)), (2, vec![0, 0, 0], frac(-1, 5))], "b2 = {}", sys.b_hat[1]);
    ensure!(
        b(2) == [(0, vec![0, 1, 0], frac(-23, 57)), (1, vec![2, 0, 0], frac(-4, 57)), (2, vec![1, 0, 0], frac(-3, 19))],
        "b3 = {}",
        sys.b_hat[2]
    );

    match build_autonomous(&projection_of(&example())) {
        AutonomousOutcome::Nonexistent(w) => {
            let witness = combo(&[(frac(2, 5), &[1]), (frac(-2, 5), &[0, 0])]);
            ensure!(w.witness_index == 2 && w.witness_element == witness, "witness {:?}", w);
        }
        AutonomousOutcome::Found(s) => return Err(format!("unexpected autonomous system {s:?}")),
    }

    let AutonomousOutcome::Found(auto) = build_autonomous(&projection_of(&example_with_drift())) else {
        return Err("no autonomous system for the modified example".into());
    };
    let a = |i: usize| poly_coefficients(&auto.a_hat[i]);
    let b = |i: usize| poly_coefficients(&auto.b_hat[i]);
    ensure!(a(0).is_empty(), "a1 = {}", auto.a_hat[0]);
    ensure!(a(1) == [(0, vec![2, 0, 0], frac(-1, 2))], "a2 = {}", auto.a_hat[1]);
    ensure!(a(2) == [(0, vec![0, 1, 0], frac(-10, 9)), (0, vec![3, 0, 0], frac(1, 27))], "a3 = {}", auto.a_hat[2]);
    ensure!(b(0) == [(0, vec![0, 0, 0], int(-1))], "b1 = {}", auto.b_hat[0]);
    ensure!(b(1).is_empty(), "b2 = {}", auto.b_hat[1]);
    ensure!(b(2) == [(0, vec![0, 1, 0], frac(4, 9))], "b3 = {}", auto.b_hat[2]);
    Ok(())
}

/// The series of `output` must equal `ell_tilde_k` in component `k` at order
/// `w_k` and vanish at every other order up to `up_to`.
fn reproduces(output: &PolynomialSystem, proj: &Projection, up_to: usize) -> Check {
    let sys = output.to_control_system().map_err(|e| e.to_string())?;
    let table = series_up_to(&sys, up_to).map_err(|e| e.to_string())?;
    for (word, v) in table.entries() {
        for (k, (l, &order)) in proj.ell_tilde.iter().zip(&proj.orders).enumerate() {
            let expected = if word.order() == order { l.coefficient(word) } else { Rational::zero() };
            ensure!(v[k] == expected, "component {} of {word}: {} instead of {}", k + 1, v[k], expected);
        }
    }
    Ok(())
}

fn idempotent(first: &ApproximationResult, output: &PolynomialSystem, pick: fn(&ApproximationResult) -> Option<PolynomialSystem>) -> Check {
    let sys = output.to_control_system().map_err(|e| e.to_string())?;
    let second = approximate(&sys, &Options::default()).map_err(|e| e.to_string())?;
    ensure!(second.ell_tilde == first.ell_tilde && second.orders == first.orders, "projections changed");
    ensure!(pick(&second).as_ref() == Some(output), "output system changed: {:?}", pick(&second));
    Ok(())
}

fn self_consistency() -> Check {
    let nonauto = |r: &ApproximationResult| r.nonautonomous.clone();
    let auto = |r: &ApproximationResult| match &r.autonomous {
        Some(AutonomousOutcome::Found(s)) => Some(s.clone()),
        _ => None,
    };
    for sys in [example(), example_with_drift()] {
        let result = approximate(&sys, &Options::default()).map_err(|e| e.to_string())?;
        let proj = result.projection();
        let output = result.nonautonomous.clone().unwrap();
        reproduces(&output, &proj, 7)?;
        idempotent(&result, &output, nonauto)?;
        if let Some(output) = auto(&result) {
            reproduces(&output, &proj, 7)?;
            idempotent(&result, &output, auto)?;
        }
    }
    Ok(())
}

fn numerical_order() -> Check {
    let start = Instant::now();
    let sys = example();
    let table = series_up_to(&sys, 4).map_err(|e| e.to_string())?;
    let thetas = default_thetas(6);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for k in 0..ORDER_CONTROLS {
        let u = ControlSignal::random(&mut rng);
        let run = order_check(&sys, &table, &u, &thetas).map_err(|e| e.to_string())?;
        let slope = run.slope.ok_or(format!("control {k}: no residual above noise"))?;
        ensure!(slope >= MIN_SLOPE, "control {k}: slope {slope:.3} with residuals {:?}", run.residuals);
    }
    for k in 0..SHUFFLE_CONTROLS {
        let u = ControlSignal::random(&mut rng);
        for theta in [0.05, 0.1] {
            let err = shuffle_identity_error(&u, theta, 5).map_err(|e| e.to_string())?;
            ensure!(err <= SHUFFLE_TOLERANCE, "control {k}, theta {theta}: shuffle error {err:e}");
        }
        if k < ORDER_CONTROLS {
            let change = step_halving_change(&u, 0.1, 4).map_err(|e| e.to_string())?;
            ensure!(change < STEP_TOLERANCE, "control {k}: step halving changed moments by {change:e}");
        }
    }
    within(start, NUMERIC_LIMIT)
}

fn performance() -> Check {
    // weights 1, 2 and 9: x3 is driven by x2^4, the remaining terms are of higher order
    let sys = ControlSystem::from_strs(&["0", "x1", "x2^4 + sin(t)*x1^9"], &["1", "0", "t*x1^8"]).unwrap();
    let start = Instant::now();
    let result = approximate(&sys, &Options::default()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure!(result.orders.last() == Some(&9), "orders {:?}", result.orders);
    ensure!(result.nonautonomous.is_some() && result.autonomous.is_some(), "missing output systems");
    ensure!(elapsed < PERFORMANCE_LIMIT, "took {elapsed:?}");
    Ok(())
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 9] = [
        ("basis tables", basis_tables),
        ("series golden values", series_golden),
        ("Lie coefficients", lie_coefficients),
        ("core and ideal", core_and_ideal),
        ("projections", projections),
        ("reconstruction", reconstruction),
        ("self-consistency and idempotence", self_consistency),
        ("numerical order check", numerical_order),
        ("performance at order 9", performance),
    ];
    let mut failed = Vec::new();
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        match &outcome {
            Ok(()) => println!("criterion {}: PASS  {name} ({elapsed:.2?})", k + 1),
            Err(why) => {
                println!("criterion {}: FAIL  {name} ({elapsed:.2?}): {why}", k + 1);
                failed.push(k + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

#[test]
fn insertion_reports_independence() {
    // guards the span comparison used above
    let mut e = SparseEchelon::new();
    assert!(matches!(e.insert(&sparse(&xi(&[0]))), Insertion::Independent(0)));
    assert!(same_span(&[xi(&[0]), xi(&[1])], &[xi(&[1]), combo(&[(int(1), &[0]), (int(1), &[1])])]));
    assert!(!same_span(&[xi(&[0])], &[xi(&[1])]));
}
