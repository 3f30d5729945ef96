use homapprox_core::approx::{approximate, ApproxError, AutonomousOutcome, Mode, Options, Polynomial, PolynomialSystem, Projection};
use homapprox_core::liealg::{cache_path, cached_lie_basis};
use homapprox_core::rational::int;
use homapprox_core::series::{series_up_to, ControlSystem};
use num_traits::Zero;

fn reproduces(output: &PolynomialSystem, proj: &Projection, up_to: usize) {
    let table = series_up_to(&output.to_control_system().unwrap(), up_to).unwrap();
    for (w, v) in table.entries() {
        for (k, (l, &order)) in proj.ell_tilde.iter().zip(&proj.orders).enumerate() {
            let expected = if w.order() == order { l.coefficient(w) } else { Zero::zero() };
            assert_eq!(v[k], expected, "component {} at {w}", k + 1);
        }
    }
}

#[test]
fn scalar_integrator_flips_sign() {
    let sys = ControlSystem::from_strs(&["0"], &["1"]).unwrap();
    let result = approximate(&sys, &Options::default()).unwrap();
    let minus_u = PolynomialSystem { n: 1, a_hat: vec![Polynomial::zero()], b_hat: vec![Polynomial::constant(int(-1), 1)] };
    assert_eq!(result.nonautonomous.as_ref(), Some(&minus_u));
    assert_eq!(result.autonomous, Some(AutonomousOutcome::Found(minus_u)));
}

#[test]
fn high_order_single_direction() {
    let sys = ControlSystem::from_strs(&["0", "x1^12"], &["1", "0"]).unwrap();
    let result = approximate(&sys, &Options::default()).unwrap();
    assert_eq!(result.orders, [1, 13]);
    let Some(AutonomousOutcome::Found(auto)) = &result.autonomous else { panic!("{:?}", result.autonomous) };
    reproduces(auto, &result.projection(), 13);
    reproduces(result.nonautonomous.as_ref().unwrap(), &result.projection(), 13);
    let short = Options { max_order: 12, ..Options::default() };
    assert_eq!(approximate(&sys, &short), Err(ApproxError::NotAccessible { n: 2, found: 1, max_order: 12 }));
}

#[test]
fn order_nine_outputs_are_consistent() {
    let sys = ControlSystem::from_strs(&["0", "x1", "x2^4 + sin(t)*x1^9"], &["1", "0", "t*x1^8"]).unwrap();
    let result = approximate(&sys, &Options::default()).unwrap();
    assert_eq!(result.orders, [1, 2, 9]);
    reproduces(result.nonautonomous.as_ref().unwrap(), &result.projection(), 9);
    if let Some(AutonomousOutcome::Found(auto)) = &result.autonomous {
        reproduces(auto, &result.projection(), 9);
    }
}

#[test]
fn cache_is_shared_between_runs() {
    let dir = tempfile::tempdir().unwrap();
    let sys = ControlSystem::from_strs(&["0", "-sin(x1)^2", "2*x1^2*sin(t)"], &["-cos(x1)", "t^2", "-x2"]).unwrap();
    let options = Options { cache_dir: Some(dir.path().to_path_buf()), mode: Mode::Nonautonomous, ..Options::default() };
    let first = approximate(&sys, &options).unwrap();
    assert!(cache_path(dir.path()).exists());
    let second = approximate(&sys, &options).unwrap();
    assert_eq!(first, second);
    assert_eq!(cached_lie_basis(4, Some(dir.path())).len(), 7);
    // a damaged cache is rebuilt
    std::fs::write(cache_path(dir.path()), "{").unwrap();
    assert_eq!(approximate(&sys, &options).unwrap(), first);
}
