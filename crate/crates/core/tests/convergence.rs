//! Second-order convergence of the discretization on the closed-form profiles.

use nlskdv::energy::residual;
use nlskdv::model::{decoupled, soliton_u1, soliton_v2};
use nlskdv::{Grid, Params};

fn residuals(n: usize) -> (f64, f64) {
    let g = Grid::new(40.0, n).unwrap();
    let p = Params::new(1.0, 1.0, 0.0).unwrap();
    let r = residual(&decoupled(&p, g).unwrap(), &p);
    (r.u.sup_norm(), r.v.sup_norm())
}

#[test]
fn closed_form_residuals_are_second_order() {
    let (u1, v1) = residuals(1025);
    let (u2, v2) = residuals(2049);
    let (u3, v3) = residuals(4097);
    for ratio in [u1 / u2, u2 / u3, v1 / v2, v2 / v3] {
        assert!((ratio - 4.0).abs() <= 0.3, "{ratio}");
    }
}

#[test]
fn sampled_norms_converge_to_closed_form_values() {
    let errors: Vec<(f64, f64)> = [1025, 2049, 4097]
        .iter()
        .map(|&n| {
            let g = Grid::new(40.0, n).unwrap();
            let u = soliton_u1(1.0, g).unwrap().norm_sq(1.0).unwrap();
            let v = soliton_v2(1.0, g).unwrap().norm_sq(1.0).unwrap();
            ((u - 16.0 / 3.0).abs(), (v - 28.8).abs())
        })
        .collect();
    for w in errors.windows(2) {
        assert!((w[0].0 / w[1].0 - 4.0).abs() < 0.3);
        assert!((w[0].1 / w[1].1 - 4.0).abs() < 0.3);
    }
}
