//! Threshold eigenproblem: accuracy, extremal property and the saddle dichotomy.

use std::time::{Duration, Instant};

use nlskdv::energy::hess_quadform;
use nlskdv::model::{semi_trivial_v, soliton_v2};
use nlskdv::sampling::{random_bumps, rng};
use nlskdv::threshold::{dense_threshold, saddle_check, threshold_closed_form};
use nlskdv::{lambda_threshold, EigenMethod, Grid, PairField, Params, RealField, ThresholdOptions};

#[test]
fn default_grid_meets_closed_form() {
    for (l1, l2) in [(1.0, 1.0), (4.0, 1.0), (1.0, 4.0)] {
        let start = Instant::now();
        let r = lambda_threshold(
            l1,
            l2,
            Grid::default_for(l1, l2).unwrap(),
            &ThresholdOptions::default(),
        )
        .unwrap();
        assert!(start.elapsed() < Duration::from_secs(5));
        let exact = threshold_closed_form(l1, l2);
        let got = r.lambda_extrapolated.unwrap();
        assert!(
            (got - exact).abs() <= 1e-6 * exact,
            "({l1}, {l2}): {got} vs {exact}"
        );
        // the raw grid value is second-order accurate only
        assert!((r.lambda_threshold - exact).abs() <= 2e-5 * exact);
    }
}

#[test]
fn inverse_iteration_matches_dense_solve() {
    let g = Grid::new(40.0, 1025).unwrap();
    for (l1, l2) in [(1.0, 1.0), (4.0, 1.0)] {
        let a = lambda_threshold(l1, l2, g, &ThresholdOptions::default()).unwrap();
        let (d, phi) = dense_threshold(l1, l2, g).unwrap();
        assert!(
            (a.lambda_threshold - d).abs() <= 1e-8,
            "{} vs {d}",
            a.lambda_threshold
        );
        assert!(a.eigenfunction.add_scaled(-1.0, &phi).sup_norm() < 1e-6);

        let opts = ThresholdOptions {
            method: EigenMethod::Dense,
            ..ThresholdOptions::default()
        };
        let b = lambda_threshold(l1, l2, g, &opts).unwrap();
        assert_eq!(b.lambda_threshold, d);
    }
    assert!(dense_threshold(1.0, 1.0, Grid::new(40.0, 2049).unwrap()).is_err());
}

#[test]
fn eigenvalue_minimizes_the_quotient() {
    let g = Grid::new(40.0, 2049).unwrap();
    let r = lambda_threshold(1.0, 1.0, g, &ThresholdOptions::default()).unwrap();
    let v2 = soliton_v2(1.0, g).unwrap();
    let mut rg = rng(5);
    for _ in 0..100 {
        let phi = random_bumps(g, &mut rg, 3, true);
        let (a, v) = (phi.values(), v2.values());
        let q = phi.norm_sq(1.0).unwrap() / g.integrate_with(|i| v[i] * a[i] * a[i]);
        assert!(q >= r.lambda_threshold - 1e-8, "{q}");
    }
}

#[test]
fn grid_refinement_is_second_order() {
    let value = |n| {
        lambda_threshold(
            1.0,
            1.0,
            Grid::new(40.0, n).unwrap(),
            &ThresholdOptions::default(),
        )
        .unwrap()
        .lambda_threshold
    };
    let (a, b, c) = (value(1025), value(2049), value(4097));
    let ratio = (a - b) / (b - c);
    assert!((ratio - 4.0).abs() < 0.1, "{ratio}");
}

#[test]
fn increases_with_lambda1() {
    let g = Grid::new(40.0, 2049).unwrap();
    let values: Vec<f64> = [0.5, 1.0, 2.0, 3.0, 4.0]
        .iter()
        .map(|&l1| {
            lambda_threshold(l1, 1.0, g, &ThresholdOptions::default())
                .unwrap()
                .lambda_threshold
        })
        .collect();
    assert!(values.windows(2).all(|w| w[1] > w[0]), "{values:?}");
}

fn along_eigenfunction(beta: f64, g: Grid) -> (f64, f64) {
    let r = lambda_threshold(1.0, 1.0, g, &ThresholdOptions::default()).unwrap();
    let p = Params::new(1.0, 1.0, beta).unwrap();
    let at = semi_trivial_v(&p, g).unwrap();
    let dir = PairField::new(r.eigenfunction.clone(), RealField::zeros(g)).unwrap();
    (hess_quadform(&at, &dir, &p).unwrap(), r.lambda_threshold)
}

#[test]
fn sign_changes_exactly_at_the_threshold() {
    let g = Grid::new(40.0, 4097).unwrap();
    let (_, lam) = along_eigenfunction(0.0, g);
    let (above, _) = along_eigenfunction(lam + 1e-6, g);
    let (below, _) = along_eigenfunction(lam - 1e-6, g);
    assert!(above < 0.0 && below > 0.0, "{above} {below}");
    assert!(along_eigenfunction(0.6, g).0 < 0.0);
    assert!(along_eigenfunction(0.4, g).0 >= 0.0);
}

#[test]
fn saddle_report() {
    let g = Grid::new(40.0, 4097).unwrap();
    let s = saddle_check(&Params::new(1.0, 1.0, 1.0).unwrap(), g, 0).unwrap();
    assert!(s.is_saddle);
    assert!((s.along_v2 + 28.8).abs() <= 1e-3 * 28.8, "{}", s.along_v2);
    assert!((s.direction_value - s.predicted_value).abs() <= 1e-8 * s.predicted_value.abs());

    let s = saddle_check(&Params::new(1.0, 1.0, 0.25).unwrap(), g, 0).unwrap();
    assert!(!s.is_saddle && s.direction_value >= 0.0);

    let s = saddle_check(&Params::new(1.0, 1.0, 0.0).unwrap(), g, 0).unwrap();
    assert!(s.direction_value > 0.0 && s.sampled_min > 0.0);
    assert_eq!(s.samples, 50);
}

#[test]
fn rejects_invalid_parameters() {
    let g = Grid::new(10.0, 101).unwrap();
    assert!(lambda_threshold(-1.0, 1.0, g, &ThresholdOptions::default()).is_err());
    assert!(lambda_threshold(1.0, 0.0, g, &ThresholdOptions::default()).is_err());
}
