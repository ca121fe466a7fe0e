//! wasm-bindgen entry points for the browser demo in `www/`.
//!
//! Every function returns a JSON string so the page needs no generated
//! typings; failures come back as a thrown `Error` carrying the message.

use nlskdv::{
    continue_in_beta, ground_state, lambda_threshold, Grid, GroundOptions, NewtonOptions, Params,
    ThresholdOptions,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest grid the page may request; the solvers are O(n) per sweep but
/// the browser thread is single.
const MAX_NODES: usize = 8193;

#[derive(Serialize)]
struct Profile {
    x: Vec<f64>,
    u: Vec<f64>,
    v: Vec<f64>,
}

#[derive(Serialize)]
struct ThresholdOut {
    lambda: f64,
    lambda_grid: f64,
    closed_form: f64,
    iterations: usize,
    x: Vec<f64>,
    phi: Vec<f64>,
}

#[derive(Serialize)]
struct GroundOut {
    phi: f64,
    residual_inf: f64,
    phi_semi_trivial_v: f64,
    phi_semi_trivial_u: f64,
    coupled: bool,
    best_start: &'static str,
    profile: Profile,
}

#[derive(Serialize)]
struct BranchOut {
    beta: Vec<f64>,
    phi: Vec<f64>,
    distance: Vec<f64>,
    complete: bool,
    last_good_beta: f64,
    profile: Option<Profile>,
}

fn grid(lambda1: f64, lambda2: f64, n: usize) -> nlskdv::Result<Grid> {
    Params::new(lambda1, lambda2, 0.0)?;
    if n > MAX_NODES {
        return Err(nlskdv::Error::InvalidParameter {
            name: "n",
            value: n as f64,
            reason: "too many nodes for the browser demo",
        });
    }
    Grid::new(nlskdv::grid::default_half_width(lambda1, lambda2), n)
}

fn to_js<T: Serialize>(r: nlskdv::Result<T>) -> Result<String, JsError> {
    let value = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

fn profile(w: &nlskdv::PairField) -> Profile {
    Profile {
        x: w.grid().nodes(),
        u: w.u.values().to_vec(),
        v: w.v.values().to_vec(),
    }
}

/// Λ(λ1, λ2) with its eigenfunction.
#[wasm_bindgen]
pub fn threshold(lambda1: f64, lambda2: f64, n: usize) -> Result<String, JsError> {
    to_js((|| {
        let g = grid(lambda1, lambda2, n)?;
        let r = lambda_threshold(lambda1, lambda2, g, &ThresholdOptions::default())?;
        Ok(ThresholdOut {
            lambda: r.lambda_extrapolated.unwrap_or(r.lambda_threshold),
            lambda_grid: r.lambda_threshold,
            closed_form: nlskdv::threshold::threshold_closed_form(lambda1, lambda2),
            iterations: r.iterations,
            x: g.nodes(),
            phi: r.eigenfunction.into_values(),
        })
    })())
}

/// Ground state at `(λ1, λ2, β)` with the semi-trivial comparison energies.
#[wasm_bindgen]
pub fn ground(lambda1: f64, lambda2: f64, beta: f64, n: usize) -> Result<String, JsError> {
    to_js((|| {
        let p = Params::new(lambda1, lambda2, beta)?;
        let g = grid(lambda1, lambda2, n)?;
        let r = ground_state(&p, g, &GroundOptions::default())?;
        Ok(GroundOut {
            phi: r.best.phi,
            residual_inf: r.best.residual_inf,
            phi_semi_trivial_v: r.phi_semi_trivial_v,
            phi_semi_trivial_u: r.phi_semi_trivial_u,
            coupled: r.coupled,
            best_start: r.best_start,
            profile: profile(&r.best.profile),
        })
    })())
}

/// Branch from the decoupled pair at `β = 0` to `beta_target`.
#[wasm_bindgen]
pub fn branch(
    lambda1: f64,
    lambda2: f64,
    beta_target: f64,
    steps: usize,
    n: usize,
) -> Result<String, JsError> {
    to_js((|| {
        let p = Params::new(lambda1, lambda2, 0.0)?;
        let g = grid(lambda1, lambda2, n)?;
        let b = continue_in_beta(&p, g, beta_target, steps, &NewtonOptions::default())?;
        Ok(BranchOut {
            beta: b.points.iter().map(|q| q.beta).collect(),
            phi: b.points.iter().map(|q| q.report.phi).collect(),
            distance: b.points.iter().map(|q| q.distance_to_u0).collect(),
            complete: b.complete,
            last_good_beta: b.last_good_beta,
            profile: b.points.last().map(|q| profile(&q.report.profile)),
        })
    })())
}

#[cfg(test)]
mod tests {
    use super::*;

    // JsError only exists on wasm targets at runtime, so exercise the pure
    // parts on the host.
    #[test]
    fn grid_cap() {
        assert!(grid(1.0, 1.0, MAX_NODES + 2).is_err());
        assert_eq!(grid(1.0, 1.0, 1025).unwrap().n(), 1025);
        let e = grid(-1.0, 1.0, 1025).unwrap_err().to_string();
        assert!(e.contains("lambda1"), "{e}");
    }

    #[test]
    fn profile_shapes() {
        let p = Params::new(1.0, 1.0, 0.0).unwrap();
        let w = nlskdv::model::decoupled(&p, grid(1.0, 1.0, 257).unwrap()).unwrap();
        let out = profile(&w);
        assert_eq!(out.x.len(), 257);
        assert_eq!(out.u.len(), 257);
        assert!((out.v[128] - 3.0).abs() < 1e-12);
    }
}
