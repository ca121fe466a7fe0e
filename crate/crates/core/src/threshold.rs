//! The coupling threshold
//!
//! ```text
//! Λ = inf_φ ||φ||_1^2 / ∫ V2 φ^2
//! ```
//!
//! computed as the smallest eigenvalue of the pencil `(-D^2 + λ1) φ = Λ V2 φ`,
//! and the second-variation test at the semi-trivial state `(0, V2)`: for
//! `β > Λ` the direction `(φ_Λ, 0)` is tangent to the Nehari manifold and
//! makes `Φ''` negative.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::energy;
use crate::error::{require_positive, Error, Result};
use crate::grid::{Grid, PairField, RealField};
use crate::linalg::solve_tridiagonal;
use crate::model::{self, Params};
use crate::sampling;

/// Largest grid accepted by the dense cross-check.
pub const DENSE_MAX_NODES: usize = 1025;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenMethod {
    /// Inverse iteration with tridiagonal solves.
    #[default]
    InverseIteration,
    /// Full symmetric eigendecomposition after Cholesky reduction; `n <= 1025`.
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThresholdOptions {
    pub method: EigenMethod,
    /// Relative change of the Rayleigh quotient that ends inverse iteration.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        Self {
            method: EigenMethod::InverseIteration,
            tol: 1e-13,
            max_iter: 2000,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdReport {
    /// Smallest generalized eigenvalue on the grid.
    pub lambda_threshold: f64,
    /// Richardson extrapolation from this grid and its every-other-node coarsening.
    pub lambda_extrapolated: Option<f64>,
    /// `||φ||_1^2 / ∫V2 φ^2` evaluated with the quadrature of the energy.
    pub rayleigh_quotient: f64,
    pub iterations: usize,
    /// Even, positive, normalized by `∫ V2 φ^2 = 1`.
    #[serde(skip)]
    pub eigenfunction: RealField,
    #[serde(skip)]
    pub grid_used: Grid,
}

fn pencil_parts(lambda1: f64, lambda2: f64, grid: Grid) -> Result<(f64, f64, RealField)> {
    require_positive("lambda1", lambda1)?;
    let v2 = model::soliton_v2(lambda2, grid)?;
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    Ok((-inv_h2, 2.0 * inv_h2 + lambda1, v2))
}

fn normalize(phi: &RealField, v2: &RealField) -> RealField {
    let (p, v) = (phi.values(), v2.values());
    let mass = phi.grid().integrate_with(|i| v[i] * p[i] * p[i]);
    let sign = if phi[phi.grid().center()] < 0.0 {
        -1.0
    } else {
        1.0
    };
    phi.scaled(sign / mass.sqrt())
}

fn weak_quotient(phi: &RealField, v2: &RealField, lambda1: f64) -> Result<f64> {
    let (p, v) = (phi.values(), v2.values());
    let mass = phi.grid().integrate_with(|i| v[i] * p[i] * p[i]);
    Ok(phi.norm_sq(lambda1)? / mass)
}

fn inverse_iteration(
    lambda1: f64,
    lambda2: f64,
    grid: Grid,
    opts: &ThresholdOptions,
) -> Result<(f64, RealField, usize)> {
    let (off, diag, v2) = pencil_parts(lambda1, lambda2, grid)?;
    let n = grid.n();
    let lower = vec![off; n - 1];
    let diagv = vec![diag; n];
    let v = v2.values();
    let apply_a = |x: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let left = if i > 0 { x[i - 1] } else { 0.0 };
                let right = if i + 1 < n { x[i + 1] } else { 0.0 };
                diag * x[i] + off * (left + right)
            })
            .collect()
    };
    let quotient = |x: &[f64]| -> f64 {
        let ax = apply_a(x);
        let num: f64 = x.iter().zip(&ax).map(|(a, b)| a * b).sum();
        let den: f64 = x.iter().zip(v).map(|(a, w)| w * a * a).sum();
        num / den
    };

    let mut phi = v2.clone();
    let mut rho = quotient(phi.values());
    for it in 1..=opts.max_iter {
        let rhs: Vec<f64> = phi.values().iter().zip(v).map(|(a, w)| w * a).collect();
        let next = solve_tridiagonal(&lower, &diagv, &lower, &rhs)
            .expect("-D^2 + λ1 is positive definite");
        phi = normalize(&RealField::new(grid, next)?.symmetrized(), &v2);
        let rho_next = quotient(phi.values());
        let change = (rho_next - rho).abs();
        rho = rho_next;
        if change <= opts.tol * rho.abs() {
            return Ok((rho, phi, it));
        }
    }
    Err(Error::NotConverged {
        what: "inverse iteration for the threshold",
        iterations: opts.max_iter,
        last: rho,
    })
}

/// Smallest generalized eigenvalue of the pencil from a full eigendecomposition
/// of `L^{-1} V2 L^{-T}` where `-D^2 + λ1 = L L^T`.
pub fn dense_threshold(lambda1: f64, lambda2: f64, grid: Grid) -> Result<(f64, RealField)> {
    let n = grid.n();
    if n > DENSE_MAX_NODES {
        return Err(Error::InvalidGrid(format!(
            "dense eigensolve limited to n <= {DENSE_MAX_NODES}, got {n}"
        )));
    }
    let (off, diag, v2) = pencil_parts(lambda1, lambda2, grid)?;
    let a = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            diag
        } else if i.abs_diff(j) == 1 {
            off
        } else {
            0.0
        }
    });
    let chol = a.cholesky().expect("-D^2 + λ1 is positive definite");
    let l = chol.l();
    let sqrt_v = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        v2.values().iter().map(|w| w.sqrt()),
    ));
    let m = l
        .solve_lower_triangular(&sqrt_v)
        .expect("Cholesky factor is nonsingular");
    let c = &m * m.transpose();
    let eig = SymmetricEigen::new(c);
    let (imax, mu) =
        eig.eigenvalues
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, x)| {
                if x > best.1 {
                    (i, x)
                } else {
                    best
                }
            });
    // C y = μ y with y = L^T φ
    let y = eig.eigenvectors.column(imax).into_owned();
    let phi = l
        .tr_solve_lower_triangular(&y)
        .expect("Cholesky factor is nonsingular");
    let phi = RealField::new(grid, phi.iter().copied().collect())?.symmetrized();
    Ok((1.0 / mu, normalize(&phi, &v2)))
}

pub fn lambda_threshold(
    lambda1: f64,
    lambda2: f64,
    grid: Grid,
    opts: &ThresholdOptions,
) -> Result<ThresholdReport> {
    require_positive("lambda2", lambda2)?;
    let solve = |g: Grid| -> Result<(f64, RealField, usize)> {
        match opts.method {
            EigenMethod::InverseIteration => inverse_iteration(lambda1, lambda2, g, opts),
            EigenMethod::Dense => dense_threshold(lambda1, lambda2, g).map(|(l, f)| (l, f, 1)),
        }
    };
    let (lambda, phi, iterations) = solve(grid)?;
    let lambda_extrapolated = match grid.coarsened() {
        Ok(coarse) => {
            let (lc, _, _) = solve(coarse)?;
            Some((4.0 * lambda - lc) / 3.0)
        }
        Err(_) => None,
    };
    let v2 = model::soliton_v2(lambda2, grid)?;
    Ok(ThresholdReport {
        lambda_threshold: lambda,
        lambda_extrapolated,
        rayleigh_quotient: weak_quotient(&phi, &v2, lambda1)?,
        iterations,
        eigenfunction: phi,
        grid_used: grid,
    })
}

/// Closed form for the sech² well: `Λ(r) = (2r + sqrt(r)) / 6`, `r = λ1 / λ2`.
pub fn threshold_closed_form(lambda1: f64, lambda2: f64) -> f64 {
    let r = lambda1 / lambda2;
    (2.0 * r + r.sqrt()) / 6.0
}

/// `(V2 | h2)_2 - (3/4) ∫ V2^2 h2`, which vanishes exactly on the tangent space at `(0, V2)`.
pub fn tangent_defect(h2: &RealField, v2: &RealField, lambda2: f64) -> Result<f64> {
    let (a, b) = (v2.values(), h2.values());
    let cubic = h2.grid().integrate_with(|i| a[i] * a[i] * b[i]);
    Ok(v2.inner(h2, lambda2)? - 0.75 * cubic)
}

/// Membership of `h` in the tangent space of the Nehari manifold at `(0, V2)`.
pub fn tangent_check(h: &PairField, lambda2: f64, grid: Grid) -> Result<bool> {
    if *h.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let v2 = model::soliton_v2(lambda2, grid)?;
    let defect = tangent_defect(&h.v, &v2, lambda2)?;
    Ok(defect.abs() <= 1e-8 * (1.0 + h.v.norm_sq(lambda2)?))
}

#[derive(Debug, Clone, Serialize)]
pub struct SaddleReport {
    pub lambda_threshold: f64,
    /// `Φ''(0, V2)` along `(φ_Λ, 0)`.
    pub direction_value: f64,
    /// `(1 - β/Λ) ||φ_Λ||_1^2`.
    pub predicted_value: f64,
    /// `Φ''(0, V2)` along `(V2, 0)`.
    pub along_v2: f64,
    /// Smallest `Φ''(0, V2)[h]^2 / ||h||^2` over the sampled tangent directions.
    pub sampled_min: f64,
    pub samples: usize,
    pub is_saddle: bool,
}

/// Number of random tangent directions probed by [`saddle_check`].
pub const SADDLE_SAMPLES: usize = 50;

pub fn saddle_check(p: &Params, grid: Grid, seed: u64) -> Result<SaddleReport> {
    p.validate()?;
    let thr = lambda_threshold(p.lambda1, p.lambda2, grid, &ThresholdOptions::default())?;
    let at = model::semi_trivial_v(p, grid)?;
    let v2 = at.v.clone();
    let zero = RealField::zeros(grid);
    let phi_dir = PairField::new(thr.eigenfunction.clone(), zero.clone())?;
    let direction_value = energy::hess_quadform(&at, &phi_dir, p)?;
    let along_v2 = energy::hess_quadform(&at, &PairField::new(v2.clone(), zero)?, p)?;
    let norm_phi = thr.eigenfunction.norm_sq(p.lambda1)?;

    let mut rng = sampling::rng(seed);
    let v2_defect = tangent_defect(&v2, &v2, p.lambda2)?;
    let mut sampled_min = f64::INFINITY;
    for _ in 0..SADDLE_SAMPLES {
        let h1 = sampling::random_bumps(grid, &mut rng, 3, true);
        let raw = sampling::random_bumps(grid, &mut rng, 3, true);
        let h2 = raw.add_scaled(-tangent_defect(&raw, &v2, p.lambda2)? / v2_defect, &v2);
        let h = PairField::new(h1, h2)?;
        debug_assert!(tangent_check(&h, p.lambda2, grid)?);
        let q = energy::hess_quadform(&at, &h, p)? / h.norm_sq(p.lambda1, p.lambda2)?;
        sampled_min = sampled_min.min(q);
    }

    Ok(SaddleReport {
        lambda_threshold: thr.lambda_threshold,
        direction_value,
        predicted_value: (1.0 - p.beta / thr.lambda_threshold) * norm_phi,
        along_v2,
        sampled_min,
        samples: SADDLE_SAMPLES,
        is_saddle: direction_value < 0.0,
    })
}
