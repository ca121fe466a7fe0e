//! Problem parameters, the two closed-form single-component solitary waves and
//! the traveling-wave map from the dispersive system to the stationary one.

use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};
use crate::grid::{Grid, PairField, RealField};

/// Coefficients of the stationary system
///
/// ```text
/// -u'' + λ1 u = u^3 + β u v
/// -v'' + λ2 v = v^2 / 2 + β u^2 / 2
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub lambda1: f64,
    pub lambda2: f64,
    pub beta: f64,
}

impl Params {
    pub fn new(lambda1: f64, lambda2: f64, beta: f64) -> Result<Self> {
        let p = Self {
            lambda1,
            lambda2,
            beta,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("lambda1", self.lambda1)?;
        require_positive("lambda2", self.lambda2)?;
        if !self.beta.is_finite() {
            return Err(Error::InvalidParameter {
                name: "beta",
                value: self.beta,
                reason: "must be finite",
            });
        }
        Ok(())
    }

    pub fn with_beta(self, beta: f64) -> Self {
        Self { beta, ..self }
    }
}

/// Phase/speed data of a traveling wave `f = e^{i(ωt + kx)} u(x - ct)`, `g = v(x - ct)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveParams {
    k: f64,
    omega: f64,
}

impl WaveParams {
    pub fn new(k: f64, omega: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::InvalidParameter {
                name: "k",
                value: k,
                reason: "wavenumber must be > 0 so that the speed c = 2k is positive",
            });
        }
        if !omega.is_finite() || k * k + omega <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "omega",
                value: omega,
                reason: "k^2 + omega must be > 0",
            });
        }
        Ok(Self { k, omega })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Speed `c = 2k`.
    pub fn speed(&self) -> f64 {
        2.0 * self.k
    }

    pub fn lambda1(&self) -> f64 {
        self.k * self.k + self.omega
    }

    pub fn lambda2(&self) -> f64 {
        self.speed()
    }

    /// Wave parameters producing the given `(λ1, λ2)`: `k = λ2 / 2`, `ω = λ1 - k^2`.
    pub fn for_params(p: &Params) -> Result<Self> {
        let k = 0.5 * p.lambda2;
        Self::new(k, p.lambda1 - k * k)
    }
}

/// `λ1 = k^2 + ω`, `λ2 = 2k`; `β` is supplied by the caller.
pub fn wave_params(k: f64, omega: f64, beta: f64) -> Result<Params> {
    let w = WaveParams::new(k, omega)?;
    Params::new(w.lambda1(), w.lambda2(), beta)
}

/// `U1(x) = sqrt(2 λ1) sech(sqrt(λ1) x)`, the positive even solution of `-u'' + λ1 u = u^3`.
pub fn soliton_u1(lambda1: f64, grid: Grid) -> Result<RealField> {
    require_positive("lambda1", lambda1)?;
    let amp = (2.0 * lambda1).sqrt();
    let k = lambda1.sqrt();
    Ok(RealField::from_fn(grid, |x| amp * sech(k * x)))
}

/// `V2(x) = 3 λ2 sech^2(sqrt(λ2) x / 2)`, the positive even solution of `-v'' + λ2 v = v^2 / 2`.
pub fn soliton_v2(lambda2: f64, grid: Grid) -> Result<RealField> {
    require_positive("lambda2", lambda2)?;
    let k = 0.5 * lambda2.sqrt();
    Ok(RealField::from_fn(grid, |x| {
        let s = sech(k * x);
        3.0 * lambda2 * s * s
    }))
}

/// `V(x) = (3/2) sech^2(x/2)`, the positive even solution of `-v'' + v = v^2`.
pub fn unit_profile(x: f64) -> f64 {
    let s = sech(0.5 * x);
    1.5 * s * s
}

/// The semi-trivial state `(0, V2)`, a solution for every `β`.
pub fn semi_trivial_v(p: &Params, grid: Grid) -> Result<PairField> {
    PairField::new(RealField::zeros(grid), soliton_v2(p.lambda2, grid)?)
}

/// The state `(U1, 0)`; a solution only when `β = 0`.
pub fn semi_trivial_u(p: &Params, grid: Grid) -> Result<PairField> {
    PairField::new(soliton_u1(p.lambda1, grid)?, RealField::zeros(grid))
}

/// The decoupled solution `(U1, V2)` of the `β = 0` system.
pub fn decoupled(p: &Params, grid: Grid) -> Result<PairField> {
    PairField::new(soliton_u1(p.lambda1, grid)?, soliton_v2(p.lambda2, grid)?)
}

pub fn sech(x: f64) -> f64 {
    // 1/cosh overflows gracefully to 0 for |x| > ~710
    1.0 / x.cosh()
}
