//! Nehari-manifold projection and constrained minimization of the action.
//!
//! Along a ray `t ↦ t w` the Nehari functional factors as
//! `Ψ(t w) = t^2 (A - t B - t^2 C)` with
//!
//! ```text
//! A = ||u||_1^2 + ||v||_2^2,   B = ∫v^3 / 2 + (3/2) β ∫u^2 v,   C = ∫u^4,
//! ```
//!
//! so each ray meets the manifold at most once for `t > 0`, at the maximum of
//! `Φ` along the ray. Minimizing `F = Φ|_N` therefore means descending `Φ` and
//! re-projecting after every step.

use serde::Serialize;

use crate::continuation::{newton_solve, NewtonOptions};
use crate::energy::{self, Moments};
use crate::error::{Error, Result};
use crate::grid::{Grid, PairField};
use crate::model::{self, Params};

/// Coefficients of `Ψ(t w) / t^2 = A - t B - t^2 C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl RayCoefficients {
    pub fn of(w: &PairField, p: &Params) -> Result<Self> {
        let m = Moments::of(w, p)?;
        Ok(Self {
            a: m.norm_u + m.norm_v,
            b: 0.5 * m.v3 + 1.5 * p.beta * m.u2v,
            c: m.u4,
        })
    }

    /// The positive root of `A - t B - t^2 C`.
    pub fn root(&self) -> Result<f64> {
        let Self { a, b, c } = *self;
        if a <= 0.0 {
            return Err(Error::TrivialState);
        }
        if c > 0.0 {
            let disc = (b * b + 4.0 * a * c).sqrt();
            // pick the cancellation-free form of the same root
            Ok(if b >= 0.0 {
                2.0 * a / (b + disc)
            } else {
                (disc - b) / (2.0 * c)
            })
        } else if b > 0.0 {
            Ok(a / b)
        } else {
            Err(Error::NoProjection("u = 0 and ∫v^3 <= 0"))
        }
    }
}

/// Scale `t > 0` with `Ψ(t w) = 0`.
pub fn nehari_scale(w: &PairField, p: &Params) -> Result<f64> {
    if w.is_zero() {
        return Err(Error::TrivialState);
    }
    RayCoefficients::of(w, p)?.root()
}

/// Radial projection `t w` onto the Nehari manifold.
pub fn project(w: &PairField, p: &Params) -> Result<PairField> {
    let t = nehari_scale(w, p)?;
    Ok(w.scaled(t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DescentOptions {
    /// Stop once the sup norm of the residual drops below this.
    pub tol: f64,
    pub max_iter: usize,
    pub initial_step: f64,
    /// Backtracking factor.
    pub shrink: f64,
    /// Armijo sufficient-decrease parameter.
    pub armijo: f64,
    pub max_backtracks: usize,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 5000,
            initial_step: 1.0,
            shrink: 0.5,
            armijo: 1e-4,
            max_backtracks: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIterations,
    /// No step length produced a decrease of `F`.
    Stalled,
    /// An iterate left the region where the ray projection exists.
    ProjectionFailed,
    /// Newton polishing failed.
    NewtonFailed,
}

/// A computed state with its energies and quality flags.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    #[serde(skip)]
    pub profile: PairField,
    pub phi: f64,
    #[serde(rename = "F")]
    pub f: f64,
    pub residual_inf: f64,
    pub psi_value: f64,
    pub norm_sq: f64,
    pub iterations: usize,
    pub converged: bool,
    pub positive: bool,
    pub even: bool,
    pub termination: Termination,
    /// Values of `F` at accepted iterates (descent only).
    #[serde(skip)]
    pub f_history: Vec<f64>,
    /// Residual sup norms per Newton iterate (Newton only).
    #[serde(skip)]
    pub residual_history: Vec<f64>,
}

impl SolveReport {
    /// Evaluates every diagnostic of `profile`. `converged` requires both the
    /// residual and `|Ψ| / (1 + ||w||^2)` to be at most `tol`.
    pub fn assess(
        profile: PairField,
        p: &Params,
        iterations: usize,
        tol: f64,
        termination: Termination,
    ) -> Result<Self> {
        let phi = energy::phi(&profile, p)?.phi;
        let f = energy::restricted_f(&profile, p)?;
        let psi_value = energy::psi(&profile, p)?;
        let norm_sq = profile.norm_sq(p.lambda1, p.lambda2)?;
        let residual_inf = energy::residual_inf(&profile, p);
        let converged = termination == Termination::Converged
            && residual_inf <= tol
            && psi_value.abs() <= tol * (1.0 + norm_sq);
        let termination = if termination == Termination::Converged && !converged {
            Termination::MaxIterations
        } else {
            termination
        };
        Ok(Self {
            positive: profile.is_positive(),
            even: profile.evenness_defect() <= 1e-12 * profile.sup_norm().max(1.0),
            profile,
            phi,
            f,
            residual_inf,
            psi_value,
            norm_sq,
            iterations,
            converged,
            termination,
            f_history: Vec::new(),
            residual_history: Vec::new(),
        })
    }

    /// Smallest nodal value over both components.
    pub fn min_node(&self) -> f64 {
        self.profile.u.min_value().min(self.profile.v.min_value())
    }
}

fn preconditioned(r: &PairField, p: &Params) -> Result<PairField> {
    Ok(PairField {
        u: r.u.solve_shifted_laplacian(p.lambda1)?,
        v: r.v.solve_shifted_laplacian(p.lambda2)?,
    })
}

/// Preconditioned steepest descent of `F` on the Nehari manifold:
/// `w ← project(w - s P r(w))` with `P = (-D^2 + λ_j)^{-1}` per component and
/// `s` found by Armijo backtracking.
pub fn minimize_on_nehari(
    w0: &PairField,
    p: &Params,
    opts: &DescentOptions,
) -> Result<SolveReport> {
    p.validate()?;
    let keep_even = w0.evenness_defect() == 0.0;
    let mut w = project(w0, p)?;
    let mut f = energy::restricted_f(&w, p)?;
    let mut r = energy::residual(&w, p);
    let mut r_inf = r.sup_norm();
    let mut history = vec![f];
    let mut termination = Termination::MaxIterations;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        if r_inf <= opts.tol {
            termination = Termination::Converged;
            break;
        }
        let mut d = preconditioned(&r, p)?;
        if keep_even {
            d = d.symmetrized();
        }
        let slope = r.l2_pairing(&d);
        let mut step = opts.initial_step;
        let mut accepted = None;
        for _ in 0..=opts.max_backtracks {
            let trial = w.add_scaled(-step, &d);
            let candidate = match project(&trial, p) {
                Ok(c) if keep_even => c.symmetrized(),
                Ok(c) => c,
                Err(_) => {
                    step *= opts.shrink;
                    continue;
                }
            };
            let f_new = energy::restricted_f(&candidate, p)?;
            if f_new <= f - opts.armijo * step * slope {
                accepted = Some((candidate, f_new, None));
                break;
            }
            // Close to the minimum the decrease drops below the rounding
            // level of F; fall back to requiring a smaller residual.
            if f_new <= f + 8.0 * f64::EPSILON * f.abs() {
                let r_new = energy::residual(&candidate, p);
                if r_new.sup_norm() < r_inf {
                    accepted = Some((candidate, f_new, Some(r_new)));
                    break;
                }
            }
            step *= opts.shrink;
        }
        let Some((candidate, f_new, r_new)) = accepted else {
            termination = if project(&w.add_scaled(-step, &d), p).is_err() {
                Termination::ProjectionFailed
            } else {
                Termination::Stalled
            };
            break;
        };
        w = candidate;
        f = f_new;
        r = r_new.unwrap_or_else(|| energy::residual(&w, p));
        r_inf = r.sup_norm();
        history.push(f);
        iterations += 1;
    }
    if termination == Termination::MaxIterations && r_inf <= opts.tol {
        termination = Termination::Converged;
    }

    let mut report = SolveReport::assess(w, p, iterations, opts.tol, termination)?;
    report.f_history = history;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GroundOptions {
    pub descent: DescentOptions,
    pub newton: NewtonOptions,
    /// Weight of the small component in the mixed starts.
    pub epsilon: f64,
}

impl Default for GroundOptions {
    fn default() -> Self {
        Self {
            descent: DescentOptions::default(),
            newton: NewtonOptions::default(),
            epsilon: 0.1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Candidate {
    pub start: &'static str,
    pub descent: SolveReport,
    pub polished: SolveReport,
}

/// Outcome of [`ground_state`].
#[derive(Debug, Clone, Serialize)]
pub struct GroundReport {
    pub best: SolveReport,
    pub best_start: &'static str,
    pub candidates: Vec<Candidate>,
    /// `Φ(0, V2)` on the sampled closed form.
    pub phi_semi_trivial_v: f64,
    /// `Φ(U1, 0)` on the sampled closed form.
    pub phi_semi_trivial_u: f64,
    /// `min(Φ(0, V2), Φ(U1, 0)) - Φ(best)`.
    pub margin: f64,
    pub below_semi_trivial: bool,
    /// Both components are nonzero.
    pub coupled: bool,
}

/// Multistart Nehari minimization followed by `|·|` and Newton polishing;
/// returns the lowest-energy converged candidate.
pub fn ground_state(p: &Params, grid: Grid, opts: &GroundOptions) -> Result<GroundReport> {
    p.validate()?;
    let u1 = model::soliton_u1(p.lambda1, grid)?;
    let v2 = model::soliton_v2(p.lambda2, grid)?;
    let eps = opts.epsilon;
    let starts: [(&'static str, PairField); 3] = [
        ("U1+eps*V2", PairField::new(u1.clone(), v2.scaled(eps))?),
        ("eps*U1+V2", PairField::new(u1.scaled(eps), v2.clone())?),
        ("U1+V2", PairField::new(u1.clone(), v2.clone())?),
    ];

    let mut candidates = Vec::new();
    for (label, start) in starts {
        let descent = minimize_on_nehari(&start, p, &opts.descent)?;
        let rectified = descent.profile.abs();
        let polished = match newton_solve(&rectified, p, &opts.newton) {
            Ok(r) => r,
            Err(_) => {
                let mut r = SolveReport::assess(
                    rectified,
                    p,
                    descent.iterations,
                    opts.descent.tol,
                    if descent.converged {
                        Termination::Converged
                    } else {
                        descent.termination
                    },
                )?;
                if !descent.converged {
                    r.termination = Termination::NewtonFailed;
                }
                r
            }
        };
        candidates.push(Candidate {
            start: label,
            descent,
            polished,
        });
    }

    let phi_v = energy::phi(&PairField::new(crate::grid::RealField::zeros(grid), v2)?, p)?.phi;
    let phi_u = energy::phi(&PairField::new(u1, crate::grid::RealField::zeros(grid))?, p)?.phi;

    let best = candidates
        .iter()
        .filter(|c| c.polished.converged || c.polished.residual_inf <= opts.descent.tol)
        .min_by(|a, b| compare_candidates(&a.polished, &b.polished));
    let Some(best) = best else {
        let last = candidates
            .iter()
            .map(|c| c.polished.residual_inf)
            .fold(f64::INFINITY, f64::min);
        return Err(Error::NotConverged {
            what: "ground-state multistart",
            iterations: opts.descent.max_iter,
            last,
        });
    };
    let best_start = best.start;
    let best = best.polished.clone();
    let threshold = phi_v.min(phi_u);
    let coupled = best.profile.u.sup_norm() > 1e-8 && best.profile.v.sup_norm() > 1e-8;
    Ok(GroundReport {
        margin: threshold - best.phi,
        below_semi_trivial: best.phi < threshold,
        coupled,
        best,
        best_start,
        candidates,
        phi_semi_trivial_v: phi_v,
        phi_semi_trivial_u: phi_u,
    })
}

fn compare_candidates(a: &SolveReport, b: &SolveReport) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    let scale = 1e-10 * a.phi.abs().max(b.phi.abs()).max(1.0);
    if (a.phi - b.phi).abs() <= scale {
        // prefer the more interior-positive profile
        b.min_node()
            .partial_cmp(&a.min_node())
            .unwrap_or(Ordering::Equal)
    } else {
        a.phi.partial_cmp(&b.phi).unwrap_or(Ordering::Equal)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{semi_trivial_u, semi_trivial_v, soliton_u1, soliton_v2};

    fn grid() -> Grid {
        Grid::new(40.0, 4097).unwrap()
    }

    #[test]
    fn scale_of_single_solitons() {
        let g = grid();
        let p = Params::new(1.0, 1.0, 0.8).unwrap();
        let t = nehari_scale(&semi_trivial_u(&p, g).unwrap(), &p).unwrap();
        assert!((t - 1.0).abs() < 1e-4, "{t}");
        let t = nehari_scale(&semi_trivial_u(&p, g).unwrap().scaled(2.0), &p).unwrap();
        assert!((t - 0.5).abs() < 1e-4, "{t}");
        let t = nehari_scale(&semi_trivial_v(&p, g).unwrap(), &p).unwrap();
        assert!((t - 1.0).abs() < 1e-4, "{t}");
    }

    #[test]
    fn projection_of_tripled_v2_recovers_v2() {
        let g = grid();
        let p = Params::new(1.0, 1.0, 0.3).unwrap();
        let v2 = semi_trivial_v(&p, g).unwrap();
        let w = project(&v2.scaled(3.0), &p).unwrap();
        assert!(w.distance_sup(&v2) < 3.0 * 1e-4);
        let t_direct = nehari_scale(&v2, &p).unwrap();
        assert!((w.v[g.center()] - 3.0 * t_direct).abs() < 1e-12);
    }

    #[test]
    fn projection_errors() {
        let g = grid();
        let p = Params::new(1.0, 1.0, 1.0).unwrap();
        assert_eq!(
            nehari_scale(&PairField::zeros(g), &p),
            Err(Error::TrivialState)
        );
        let neg = semi_trivial_v(&p, g).unwrap().scaled(-1.0);
        assert!(matches!(project(&neg, &p), Err(Error::NoProjection(_))));
    }

    #[test]
    fn semi_trivial_v_is_a_fixed_point() {
        let g = grid();
        for beta in [0.0, 1.0, 3.0] {
            let p = Params::new(1.0, 1.0, beta).unwrap();
            let v2 = semi_trivial_v(&p, g).unwrap();
            let rep = minimize_on_nehari(&v2, &p, &DescentOptions::default()).unwrap();
            assert!(rep.converged, "{:?}", rep.termination);
            assert!(rep.iterations < 60, "{}", rep.iterations);
            assert_eq!(rep.profile.u.sup_norm(), 0.0);
            assert!(rep.profile.distance_sup(&v2) < 1e-3);
        }
    }

    #[test]
    fn coupled_descent_beats_semi_trivial() {
        let g = grid();
        let p = Params::new(1.0, 1.0, 1.0).unwrap();
        let w0 = PairField::new(soliton_u1(1.0, g).unwrap(), soliton_v2(1.0, g).unwrap()).unwrap();
        let rep = minimize_on_nehari(&w0, &p, &DescentOptions::default()).unwrap();
        assert!(rep.converged);
        assert!(rep.phi < 4.8);
        assert!(rep.positive && rep.even);
        for pair in rep.f_history.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-14 * pair[0].abs());
        }
    }

    #[test]
    fn decoupled_descent_converges() {
        let g = grid();
        let p = Params::new(1.0, 1.0, 0.0).unwrap();
        let w0 = PairField::new(soliton_u1(1.0, g).unwrap(), soliton_v2(1.0, g).unwrap()).unwrap();
        let rep = minimize_on_nehari(&w0, &p, &DescentOptions::default()).unwrap();
        assert!(rep.converged, "{:?} {}", rep.termination, rep.residual_inf);
        assert!(rep.residual_inf <= 1e-8);
    }

    #[test]
    fn decoupled_ground_state_is_semi_trivial() {
        let g = Grid::new(40.0, 2049).unwrap();
        let p = Params::new(1.0, 1.0, 0.0).unwrap();
        let rep = ground_state(&p, g, &GroundOptions::default()).unwrap();
        assert!(!rep.coupled);
        assert!((rep.best.phi - 4.0 / 3.0).abs() < 1e-3);
        assert!(rep.best.profile.v.sup_norm() < 1e-8);
    }
}
