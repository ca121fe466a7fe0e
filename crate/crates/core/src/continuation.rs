//! Newton polishing of bound states and natural-parameter continuation in `β`
//! starting from the decoupled solution `(U1, V2)`.
//!
//! Newton works on the even subspace directly: the unknowns are the nodes with
//! `x >= 0` and the reflection `w(-h) = w(h)` closes the stencil at the center.
//! On the full line the Jacobian has an (almost) null translation mode; the
//! reduced system does not.

use serde::{Deserialize, Serialize};

use crate::energy;
use crate::error::{Error, Result};
use crate::grid::{Grid, PairField};
use crate::linalg::BandMatrix;
use crate::model::{self, Params};
use crate::nehari::{SolveReport, Termination};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 25,
        }
    }
}

/// Assembles the Jacobian of the residual restricted to even states.
///
/// Unknowns are interleaved as `(u_c, v_c, u_{c+1}, v_{c+1}, ...)` with `c` the
/// center node.
fn even_jacobian(w: &PairField, p: &Params) -> BandMatrix {
    let g = w.grid();
    let c = g.center();
    let q = g.n() - c;
    let inv_h2 = 1.0 / (g.h() * g.h());
    let (u, v) = (w.u.values(), w.v.values());
    let mut jac = BandMatrix::zeros(2 * q, 2, 2);
    for k in 0..q {
        let j = c + k;
        let (iu, iv) = (2 * k, 2 * k + 1);
        jac.add(
            iu,
            iu,
            2.0 * inv_h2 + p.lambda1 - 3.0 * u[j] * u[j] - p.beta * v[j],
        );
        jac.add(iv, iv, 2.0 * inv_h2 + p.lambda2 - v[j]);
        jac.add(iu, iv, -p.beta * u[j]);
        jac.add(iv, iu, -p.beta * u[j]);
        if k + 1 < q {
            // the center row sees its right neighbour twice through the reflection
            let coupling = if k == 0 { -2.0 * inv_h2 } else { -inv_h2 };
            jac.add(iu, iu + 2, coupling);
            jac.add(iv, iv + 2, coupling);
        }
        if k > 0 {
            jac.add(iu, iu - 2, -inv_h2);
            jac.add(iv, iv - 2, -inv_h2);
        }
    }
    jac
}

/// Newton's method on the stationary system, restricted to even states.
pub fn newton_solve(w0: &PairField, p: &Params, opts: &NewtonOptions) -> Result<SolveReport> {
    p.validate()?;
    if w0.is_zero() {
        return Err(Error::TrivialState);
    }
    let g = *w0.grid();
    let c = g.center();
    let mut w = w0.symmetrized();
    let mut history = Vec::new();
    let mut grew = 0;
    let mut termination = Termination::MaxIterations;
    let mut iterations = 0;

    loop {
        let r = energy::residual(&w, p);
        let r_inf = r.sup_norm();
        if let Some(&prev) = history.last() {
            if r_inf > prev {
                grew += 1;
                if grew >= 2 {
                    return Err(Error::Diverged {
                        iteration: iterations,
                        residual: r_inf,
                    });
                }
            } else {
                grew = 0;
            }
        }
        history.push(r_inf);
        if !r_inf.is_finite() {
            return Err(Error::Diverged {
                iteration: iterations,
                residual: r_inf,
            });
        }
        if r_inf <= opts.tol {
            termination = Termination::Converged;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }

        let q = g.n() - c;
        let mut rhs = vec![0.0; 2 * q];
        for k in 0..q {
            rhs[2 * k] = -r.u[c + k];
            rhs[2 * k + 1] = -r.v[c + k];
        }
        let delta = even_jacobian(&w, p)
            .solve(&rhs, 1e-14)
            .ok_or(Error::Singular {
                iteration: iterations,
            })?;
        let (u, v) = (w.u.values_mut(), w.v.values_mut());
        for k in 0..q {
            u[c + k] += delta[2 * k];
            v[c + k] += delta[2 * k + 1];
            u[c - k] = u[c + k];
            v[c - k] = v[c + k];
        }
        iterations += 1;
    }

    if w.sup_norm() <= 1e-8 {
        return Err(Error::TrivialState);
    }
    let mut report = SolveReport::assess(w, p, iterations, opts.tol, termination)?;
    report.residual_history = history;
    Ok(report)
}

/// One point of a continuation branch.
#[derive(Debug, Clone, Serialize)]
pub struct BranchPoint {
    pub beta: f64,
    pub report: SolveReport,
    /// Sup-norm distance to the `β = 0` solution on the same grid.
    pub distance_to_u0: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    /// `true` when the branch reached the requested `β`.
    pub complete: bool,
    pub last_good_beta: f64,
    /// The polished decoupled solution the distances refer to.
    #[serde(skip)]
    pub reference: PairField,
}

/// Maximum number of step halvings before giving up on a continuation step.
pub const MAX_HALVINGS: usize = 4;

/// Natural-parameter continuation of `(U1, V2)` from `β = 0` to `beta_target`
/// in `steps` equal steps, warm-starting each Newton solve from the previous
/// profile. Returns the partial branch if a later step fails.
pub fn continue_in_beta(
    base: &Params,
    grid: Grid,
    beta_target: f64,
    steps: usize,
    opts: &NewtonOptions,
) -> Result<Branch> {
    let base = base.with_beta(0.0);
    base.validate()?;
    if !(beta_target.is_finite() && beta_target >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "beta_target",
            value: beta_target,
            reason: "must be finite and >= 0",
        });
    }
    if steps == 0 {
        return Err(Error::InvalidParameter {
            name: "steps",
            value: 0.0,
            reason: "need at least one step",
        });
    }

    let start = model::decoupled(&base, grid)?;
    let reference = newton_solve(&start, &base, opts)?;
    if !reference.converged {
        return Err(Error::NotConverged {
            what: "Newton at beta = 0",
            iterations: reference.iterations,
            last: reference.residual_inf,
        });
    }
    let u0 = reference.profile.clone();

    if beta_target == 0.0 {
        return Ok(Branch {
            points: vec![BranchPoint {
                beta: 0.0,
                distance_to_u0: 0.0,
                report: reference,
            }],
            complete: true,
            last_good_beta: 0.0,
            reference: u0,
        });
    }

    let mut points: Vec<BranchPoint> = Vec::new();
    let mut beta_prev = 0.0;
    let mut w_prev = u0.clone();
    for k in 1..=steps {
        let goal = beta_target * k as f64 / steps as f64;
        while beta_prev < goal {
            let mut trial = goal;
            let mut halvings = 0;
            let accepted = loop {
                let p = base.with_beta(trial);
                match newton_solve(&w_prev, &p, opts) {
                    Ok(rep) if rep.converged => break Some((trial, rep)),
                    _ if halvings < MAX_HALVINGS => {
                        trial = beta_prev + 0.5 * (trial - beta_prev);
                        halvings += 1;
                    }
                    _ => break None,
                }
            };
            let Some((beta, report)) = accepted else {
                if points.is_empty() {
                    return Err(Error::ContinuationStart {
                        last_good_beta: beta_prev,
                    });
                }
                return Ok(Branch {
                    points,
                    complete: false,
                    last_good_beta: beta_prev,
                    reference: u0,
                });
            };
            w_prev = report.profile.clone();
            beta_prev = beta;
            points.push(BranchPoint {
                beta,
                distance_to_u0: report.profile.distance_sup(&u0),
                report,
            });
        }
    }
    Ok(Branch {
        points,
        complete: true,
        last_good_beta: beta_prev,
        reference: u0,
    })
}

/// `h^T J h` with the full-grid strong-form Jacobian and trapezoid pairing;
/// agrees with [`energy::hess_quadform`] up to the end weights.
pub fn jacobian_quadform(w: &PairField, h: &PairField, p: &Params) -> f64 {
    let (u, v) = (w.u.values(), w.v.values());
    let (a, b) = (h.u.values(), h.v.values());
    let mut ja = h.u.second_derivative();
    let mut jb = h.v.second_derivative();
    for (i, x) in ja.values_mut().iter_mut().enumerate() {
        *x = -*x + (p.lambda1 - 3.0 * u[i] * u[i] - p.beta * v[i]) * a[i] - p.beta * u[i] * b[i];
    }
    for (i, x) in jb.values_mut().iter_mut().enumerate() {
        *x = -*x + (p.lambda2 - v[i]) * b[i] - p.beta * u[i] * a[i];
    }
    let jh = PairField { u: ja, v: jb };
    jh.l2_pairing(h)
}
