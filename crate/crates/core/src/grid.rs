//! Uniform symmetric grids on `[-L, L]`, real fields sampled on them, and the
//! discrete calculus shared by every solver: the Dirichlet second difference,
//! trapezoid quadrature and the weighted `H^1` norms `||w||_j^2 = ∫ w'^2 + λ_j w^2`.
//!
//! Fields are treated as vanishing outside `[-L, L]`: the second difference and
//! the gradient energy both see zero ghost values at `±(L + h)`.

use std::ops::Index;

use crate::error::{require_positive, Error, Result};

/// Smallest accepted node count.
pub const MIN_NODES: usize = 5;

/// Uniform grid with an odd number of nodes, symmetric about `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    half_width: f64,
    n: usize,
    h: f64,
}

impl Grid {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half width L must be finite and > 0, got {half_width}"
            )));
        }
        if n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "node count must be odd so that x = 0 is a node, got {n}"
            )));
        }
        if n < MIN_NODES {
            return Err(Error::InvalidGrid(format!(
                "node count must be at least {MIN_NODES}, got {n}"
            )));
        }
        Ok(Self {
            half_width,
            n,
            h: 2.0 * half_width / (n - 1) as f64,
        })
    }

    /// Grid with the default box `L = 40 / sqrt(min(λ1, λ2, 1))` and `n = 4097`.
    pub fn default_for(lambda1: f64, lambda2: f64) -> Result<Self> {
        Self::new(default_half_width(lambda1, lambda2), DEFAULT_NODES)
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Index of the node at `x = 0`.
    pub fn center(&self) -> usize {
        (self.n - 1) / 2
    }

    /// Node coordinate. Computed from the center so that `x(i) == -x(n-1-i)` bit for bit.
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 - self.center() as f64) * self.h
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Trapezoid weight of node `i`.
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.n {
            0.5 * self.h
        } else {
            self.h
        }
    }

    /// Grid on the same box with half the resolution (every other node).
    pub fn coarsened(&self) -> Result<Self> {
        Self::new(self.half_width, self.n.div_ceil(2))
    }

    /// Grid on the same box with twice the resolution.
    pub fn refined(&self) -> Result<Self> {
        Self::new(self.half_width, 2 * self.n - 1)
    }

    /// Trapezoid rule over `[-L, L]`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.n);
        let n = values.len();
        let interior: f64 = values[1..n - 1].iter().sum();
        self.h * (interior + 0.5 * (values[0] + values[n - 1]))
    }

    /// Trapezoid rule applied to a pointwise product.
    pub fn integrate_with<F>(&self, f: F) -> f64
    where
        F: Fn(usize) -> f64,
    {
        let n = self.n;
        let interior: f64 = (1..n - 1).map(&f).sum();
        self.h * (interior + 0.5 * (f(0) + f(n - 1)))
    }

    /// `∫ a' b'` from cell differences, including the two ghost cells beyond `±L`.
    pub fn gradient_pairing(&self, a: &[f64], b: &[f64]) -> f64 {
        let n = self.n;
        let mut acc = a[0] * b[0] + a[n - 1] * b[n - 1];
        for i in 0..n - 1 {
            acc += (a[i + 1] - a[i]) * (b[i + 1] - b[i]);
        }
        acc / self.h
    }
}

pub const DEFAULT_NODES: usize = 4097;

pub fn default_half_width(lambda1: f64, lambda2: f64) -> f64 {
    40.0 / lambda1.min(lambda2).min(1.0).sqrt()
}

/// Real scalar field sampled at the nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: Grid,
    values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::LengthMismatch {
                expected: grid.n(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.n()],
        }
    }

    pub fn from_fn<F: FnMut(f64) -> f64>(grid: Grid, mut f: F) -> Self {
        let values = (0..grid.n()).map(|i| f(grid.x(i))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&w| f(w)).collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|w| c * w)
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, c: f64, other: &RealField) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + c * b)
                .collect(),
        }
    }

    /// Reflection `x -> -x`.
    pub fn mirrored(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        Self {
            grid: self.grid,
            values,
        }
    }

    /// Even part `(w(x) + w(-x)) / 2`; exactly even in floating point.
    pub fn symmetrized(&self) -> Self {
        let n = self.values.len();
        let values = (0..n)
            .map(|i| 0.5 * (self.values[i] + self.values[n - 1 - i]))
            .collect();
        Self {
            grid: self.grid,
            values,
        }
    }

    /// Largest `|w(x_i) - w(-x_i)|`.
    pub fn evenness_defect(&self) -> f64 {
        let n = self.values.len();
        (0..n / 2)
            .map(|i| (self.values[i] - self.values[n - 1 - i]).abs())
            .fold(0.0, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, w| m.max(w.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Central second difference with zero ghost values beyond `±L`.
    pub fn second_derivative(&self) -> Self {
        let w = &self.values;
        let n = w.len();
        let inv_h2 = 1.0 / (self.grid.h * self.grid.h);
        let at = |i: isize| -> f64 {
            if i < 0 || i as usize >= n {
                0.0
            } else {
                w[i as usize]
            }
        };
        let values = (0..n as isize)
            .map(|i| ((at(i - 1) + at(i + 1)) - 2.0 * at(i)) * inv_h2)
            .collect();
        Self {
            grid: self.grid,
            values,
        }
    }

    pub fn integrate(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    /// Solves `(-D^2 + λ) x = self` with the same zero ghost values as
    /// [`second_derivative`](Self::second_derivative).
    pub fn solve_shifted_laplacian(&self, lambda: f64) -> Result<Self> {
        require_positive("lambda", lambda)?;
        let n = self.values.len();
        let inv_h2 = 1.0 / (self.grid.h * self.grid.h);
        let off = vec![-inv_h2; n - 1];
        let diag = vec![2.0 * inv_h2 + lambda; n];
        let values = crate::linalg::solve_tridiagonal(&off, &diag, &off, &self.values)
            .expect("-D^2 + λ is positive definite for λ > 0");
        Ok(Self {
            grid: self.grid,
            values,
        })
    }

    /// `∫ w'^2 + λ_j ∫ w^2`.
    pub fn norm_sq(&self, lambda_j: f64) -> Result<f64> {
        self.inner(self, lambda_j)
    }

    /// `(w1 | w2)_j = ∫ w1' w2' + λ_j ∫ w1 w2`.
    pub fn inner(&self, other: &RealField, lambda_j: f64) -> Result<f64> {
        require_positive("lambda_j", lambda_j)?;
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let (a, b) = (&self.values, &other.values);
        let grad = self.grid.gradient_pairing(a, b);
        let mass = self.grid.integrate_with(|i| a[i] * b[i]);
        Ok(grad + lambda_j * mass)
    }
}

impl Index<usize> for RealField {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

/// The state `(u, v)`: short-wave amplitude `u` and long-wave amplitude `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairField {
    pub u: RealField,
    pub v: RealField,
}

impl PairField {
    pub fn new(u: RealField, v: RealField) -> Result<Self> {
        if u.grid() != v.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { u, v })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            u: RealField::zeros(grid),
            v: RealField::zeros(grid),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            u: self.u.scaled(c),
            v: self.v.scaled(c),
        }
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, c: f64, other: &PairField) -> Self {
        Self {
            u: self.u.add_scaled(c, &other.u),
            v: self.v.add_scaled(c, &other.v),
        }
    }

    pub fn abs(&self) -> Self {
        Self {
            u: self.u.map(f64::abs),
            v: self.v.map(f64::abs),
        }
    }

    pub fn symmetrized(&self) -> Self {
        Self {
            u: self.u.symmetrized(),
            v: self.v.symmetrized(),
        }
    }

    pub fn evenness_defect(&self) -> f64 {
        self.u.evenness_defect().max(self.v.evenness_defect())
    }

    pub fn sup_norm(&self) -> f64 {
        self.u.sup_norm().max(self.v.sup_norm())
    }

    pub fn is_zero(&self) -> bool {
        self.sup_norm() == 0.0
    }

    /// Strict positivity of both components at every node.
    pub fn is_positive(&self) -> bool {
        self.u.min_value() > 0.0 && self.v.min_value() > 0.0
    }

    /// `||u||_1^2 + ||v||_2^2`.
    pub fn norm_sq(&self, lambda1: f64, lambda2: f64) -> Result<f64> {
        Ok(self.u.norm_sq(lambda1)? + self.v.norm_sq(lambda2)?)
    }

    /// Trapezoid `L^2` pairing of both components.
    pub fn l2_pairing(&self, other: &PairField) -> f64 {
        let g = self.grid();
        let (a, b) = (self.u.values(), other.u.values());
        let (c, d) = (self.v.values(), other.v.values());
        g.integrate_with(|i| a[i] * b[i] + c[i] * d[i])
    }

    /// Sup-norm distance between two states.
    pub fn distance_sup(&self, other: &PairField) -> f64 {
        self.add_scaled(-1.0, other).sup_norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_grid_nodes() {
        let g = Grid::new(10.0, 5).unwrap();
        assert_eq!(g.nodes(), vec![-10.0, -5.0, 0.0, 5.0, 10.0]);
    }

    #[test]
    fn default_spacing() {
        let g = Grid::new(40.0, 4097).unwrap();
        assert_eq!(g.h(), 0.01953125);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(matches!(Grid::new(10.0, 4), Err(Error::InvalidGrid(_))));
        assert!(matches!(Grid::new(0.0, 5), Err(Error::InvalidGrid(_))));
        assert!(matches!(Grid::new(-1.0, 5), Err(Error::InvalidGrid(_))));
        assert!(Grid::new(1.0, 3).is_err());
    }

    #[test]
    fn nodes_are_exactly_symmetric() {
        let g = Grid::new(37.3, 1001).unwrap();
        for i in 0..g.n() {
            assert_eq!(g.x(i), -g.x(g.n() - 1 - i));
        }
        assert_eq!(g.x(g.center()), 0.0);
    }

    #[test]
    fn second_derivative_of_constant_and_quadratic() {
        let g = Grid::new(3.0, 61).unwrap();
        let one = RealField::from_fn(g, |_| 1.0);
        let d = one.second_derivative();
        for i in 1..g.n() - 1 {
            assert!(d[i].abs() < 1e-9);
        }
        let q = RealField::from_fn(g, |x| x * x).second_derivative();
        for i in 1..g.n() - 1 {
            assert!((q[i] - 2.0).abs() < 1e-9, "{}", q[i]);
        }
        let affine = RealField::from_fn(g, |x| 3.0 * x - 1.0).second_derivative();
        for i in 1..g.n() - 1 {
            assert!(affine[i].abs() < 1e-9);
        }
    }

    #[test]
    fn trapezoid_basics() {
        let g = Grid::new(10.0, 101).unwrap();
        assert!((RealField::from_fn(g, |_| 1.0).integrate() - 20.0).abs() < 1e-12);
        assert!(RealField::from_fn(g, |x| x).integrate().abs() < 1e-12);
        // exact for piecewise-linear data
        assert!((RealField::from_fn(g, |x| 2.0 * x + 3.0).integrate() - 60.0).abs() < 1e-12);
    }

    #[test]
    fn norms_reject_nonpositive_lambda() {
        let g = Grid::new(10.0, 11).unwrap();
        let w = RealField::zeros(g);
        assert!(w.norm_sq(0.0).is_err());
        assert!(w.inner(&w, -1.0).is_err());
        assert_eq!(w.norm_sq(1.0).unwrap(), 0.0);
    }

    #[test]
    fn inner_rejects_grid_mismatch() {
        let a = RealField::zeros(Grid::new(10.0, 11).unwrap());
        let b = RealField::zeros(Grid::new(10.0, 13).unwrap());
        assert_eq!(a.inner(&b, 1.0), Err(Error::GridMismatch));
        assert!(PairField::new(a, b).is_err());
    }

    #[test]
    fn symmetrize_is_exactly_even() {
        let g = Grid::new(5.0, 21).unwrap();
        let w = RealField::from_fn(g, |x| (0.3 * x).sin() + x * x * 0.1 + 0.7).symmetrized();
        assert_eq!(w.evenness_defect(), 0.0);
    }
}
