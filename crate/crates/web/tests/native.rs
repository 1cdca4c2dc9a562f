use eed_web::{count_native, explore_shifts_native, solve_native};

#[test]
fn solve_matches_count() {
    let v = solve_native("laplacian:10", 0.0, 1.0, 1e-9, 20, None, 0).unwrap();
    assert_eq!(v.n, 100);
    assert_eq!(
        v.lambdas.len(),
        count_native("laplacian:10", 0.0, 1.0).unwrap()
    );
    assert_eq!(v.steps.len(), v.lambdas.len());
    assert!(v.steps[0].omega_bound.is_none());
    assert!(v.steps[1..]
        .iter()
        .all(|s| s.omega <= s.omega_bound.unwrap() + 1e-13));
    let json = serde_json::to_value(&v).unwrap();
    assert!(json["tau_g"].as_f64().unwrap() > 1.0);
}

#[test]
fn forced_shift_target_reaches_large_ratio() {
    let v = solve_native("example52:200", -1.0, -0.5001, 1e-6, 40, Some(-0.5), 0).unwrap();
    assert_eq!(v.lambdas.len(), 74);
    let tau = v.steps.iter().map(|s| s.tau).fold(0.0, f64::max);
    assert!(tau > 1e3);
}

#[test]
fn shift_explorer_tracks_gap() {
    let eig: Vec<f64> = (0..5).map(|k| 0.1 * k as f64).collect();
    let v = explore_shifts_native(&eig, 0.0, 0.45, 1.0, 1e-8, None).unwrap();
    assert_eq!(v.mu, 1.0);
    assert_eq!(v.steps.len(), 4);
    // Recommended shifts move every eigenvalue to mu, so the gap is mu - lambda_next.
    for s in &v.steps {
        assert!((s.gamma - (1.0 - 0.1 * (s.step - 1) as f64)).abs() < 1e-12);
        assert!(s.assumption_ok && s.omega_explicit.is_some());
    }
    assert!((v.gamma_g.unwrap() - 0.55).abs() < 1e-12);

    let bad = explore_shifts_native(&eig, 0.0, 0.45, 1.0, 1e-8, Some(0.2));
    assert!(bad.is_err());
}

#[test]
fn oversized_matrices_are_refused() {
    assert!(solve_native("laplacian:100", 0.0, 0.1, 1e-8, 40, None, 0).is_err());
}
