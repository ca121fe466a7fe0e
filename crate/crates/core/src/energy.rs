//! The action functional
//!
//! ```text
//! Φ(u, v) = I1(u) + I2(v) - (β/2) ∫ u^2 v
//! I1(u)   = ||u||_1^2 / 2 - ∫ u^4 / 4
//! I2(v)   = ||v||_2^2 / 2 - ∫ v^3 / 6
//! ```
//!
//! together with the Nehari functional `Ψ = (Φ'(w) | w)`, the restriction
//! `F = ||w||^2 / 6 + ∫ u^4 / 12` that `Φ` reduces to on `{Ψ = 0}`, the strong-form
//! first variation and the second variation.
//!
//! The kinetic part uses cell differences with zero ghost values, so its exact
//! gradient is `h (-D^2 w)` at every node and the strong residual below is the
//! discrete gradient of `Φ` up to the trapezoid end weights.

use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Result};
use crate::grid::{PairField, RealField};
use crate::model::Params;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    #[serde(rename = "I1")]
    pub i1: f64,
    #[serde(rename = "I2")]
    pub i2: f64,
    /// `(β/2) ∫ u^2 v`
    pub coupling: f64,
    pub phi: f64,
}

/// Integrals that every functional is assembled from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Moments {
    pub norm_u: f64,
    pub norm_v: f64,
    pub u4: f64,
    pub v3: f64,
    pub u2v: f64,
}

impl Moments {
    pub(crate) fn of(w: &PairField, p: &Params) -> Result<Self> {
        let g = w.grid();
        let (u, v) = (w.u.values(), w.v.values());
        Ok(Self {
            norm_u: w.u.norm_sq(p.lambda1)?,
            norm_v: w.v.norm_sq(p.lambda2)?,
            u4: g.integrate_with(|i| u[i].powi(4)),
            v3: g.integrate_with(|i| v[i].powi(3)),
            u2v: g.integrate_with(|i| u[i] * u[i] * v[i]),
        })
    }
}

pub fn i1(u: &RealField, lambda1: f64) -> Result<f64> {
    require_positive("lambda1", lambda1)?;
    let g = u.grid();
    let w = u.values();
    Ok(0.5 * u.norm_sq(lambda1)? - 0.25 * g.integrate_with(|i| w[i].powi(4)))
}

pub fn i2(v: &RealField, lambda2: f64) -> Result<f64> {
    require_positive("lambda2", lambda2)?;
    let g = v.grid();
    let w = v.values();
    Ok(0.5 * v.norm_sq(lambda2)? - g.integrate_with(|i| w[i].powi(3)) / 6.0)
}

pub fn phi(w: &PairField, p: &Params) -> Result<EnergyBreakdown> {
    let m = Moments::of(w, p)?;
    let i1 = 0.5 * m.norm_u - 0.25 * m.u4;
    let i2 = 0.5 * m.norm_v - m.v3 / 6.0;
    let coupling = 0.5 * p.beta * m.u2v;
    Ok(EnergyBreakdown {
        i1,
        i2,
        coupling,
        phi: i1 + i2 - coupling,
    })
}

/// `Ψ(w) = ||u||_1^2 - ∫u^4 + ||v||_2^2 - ∫v^3/2 - (3/2) β ∫u^2 v`.
pub fn psi(w: &PairField, p: &Params) -> Result<f64> {
    let m = Moments::of(w, p)?;
    Ok(m.norm_u - m.u4 + m.norm_v - 0.5 * m.v3 - 1.5 * p.beta * m.u2v)
}

/// `F(w) = (||u||_1^2 + ||v||_2^2) / 6 + ∫u^4 / 12`.
pub fn restricted_f(w: &PairField, p: &Params) -> Result<f64> {
    let m = Moments::of(w, p)?;
    Ok((m.norm_u + m.norm_v) / 6.0 + m.u4 / 12.0)
}

/// Strong-form left-hand side of the stationary system; zero exactly at bound states.
pub fn residual(w: &PairField, p: &Params) -> PairField {
    let (u, v) = (w.u.values(), w.v.values());
    let mut ru = w.u.second_derivative();
    let mut rv = w.v.second_derivative();
    for (i, r) in ru.values_mut().iter_mut().enumerate() {
        *r = -*r + p.lambda1 * u[i] - u[i].powi(3) - p.beta * u[i] * v[i];
    }
    for (i, r) in rv.values_mut().iter_mut().enumerate() {
        *r = -*r + p.lambda2 * v[i] - 0.5 * v[i] * v[i] - 0.5 * p.beta * u[i] * u[i];
    }
    PairField { u: ru, v: rv }
}

/// Sup norm of [`residual`].
pub fn residual_inf(w: &PairField, p: &Params) -> f64 {
    residual(w, p).sup_norm()
}

/// Second variation `Φ''(w)[h, h]`:
///
/// `||h1||_1^2 - 3∫u^2 h1^2 + ||h2||_2^2 - ∫v h2^2 - β∫v h1^2 - 2β∫u h1 h2`.
pub fn hess_quadform(w: &PairField, h: &PairField, p: &Params) -> Result<f64> {
    let g = w.grid();
    let (u, v) = (w.u.values(), w.v.values());
    let (a, b) = (h.u.values(), h.v.values());
    let potential = g.integrate_with(|i| {
        3.0 * u[i] * u[i] * a[i] * a[i]
            + v[i] * b[i] * b[i]
            + p.beta * v[i] * a[i] * a[i]
            + 2.0 * p.beta * u[i] * a[i] * b[i]
    });
    Ok(h.u.norm_sq(p.lambda1)? + h.v.norm_sq(p.lambda2)? - potential)
}
