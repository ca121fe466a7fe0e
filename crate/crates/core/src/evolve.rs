//! Time integration of the dispersive short-wave/long-wave system
//!
//! ```text
//! i f_t + f_xx + a f g + |f|^2 f = 0
//! g_t + g_xxx + g g_x + (a/2) (|f|^2)_x = 0
//! ```
//!
//! on the periodic box `[-L, L)`. Each step is a Strang splitting: half a step
//! of the linear dispersion (exact in Fourier space), a full RK4 step of the
//! nonlinear and coupling terms with 2/3-rule dealiasing, another half linear
//! step.
//!
//! Substituting `f = e^{i(ωt + kx)} u(x - ct)`, `g = v(x - ct)` with
//! `λ1 = k^2 + ω`, `λ2 = c = 2k` gives the stationary system exactly when the
//! coupling `a` equals `+β`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Grid, PairField};
use crate::model::{Params, WaveParams};

/// Periodic grid `x_i = -L + i h`, `i < n`, obtained by dropping the last node
/// of a [`Grid`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicGrid {
    pub n: usize,
    pub h: f64,
    pub x0: f64,
}

impl PeriodicGrid {
    pub fn from_grid(grid: &Grid) -> Self {
        Self {
            n: grid.n() - 1,
            h: grid.h(),
            x0: grid.x(0),
        }
    }

    pub fn length(&self) -> f64 {
        self.n as f64 * self.h
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    /// Angular wavenumber of FFT bin `k`.
    fn wavenumber(&self, k: usize) -> f64 {
        let signed = if k <= self.n / 2 {
            k as f64
        } else {
            k as f64 - self.n as f64
        };
        2.0 * PI * signed / self.length()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionState {
    pub grid: PeriodicGrid,
    /// Short wave.
    pub f: Vec<Complex64>,
    /// Long wave.
    pub g: Vec<f64>,
    pub t: f64,
}

impl EvolutionState {
    pub fn mass_f(&self) -> f64 {
        self.grid.h * self.f.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }

    pub fn mean_g(&self) -> f64 {
        self.grid.h * self.g.iter().sum::<f64>()
    }

    pub fn modulus_f(&self) -> Vec<f64> {
        self.f.iter().map(|z| z.norm()).collect()
    }
}

/// Initial data `f(x, 0) = e^{ikx} u(x)`, `g(x, 0) = v(x)` for a stationary
/// profile computed with `params`.
pub fn reconstruct(
    profile: &PairField,
    params: &Params,
    wave: &WaveParams,
) -> Result<EvolutionState> {
    let dl1 = (wave.lambda1() - params.lambda1).abs();
    let dl2 = (wave.lambda2() - params.lambda2).abs();
    if dl1 > 1e-12 || dl2 > 1e-12 {
        return Err(Error::ParameterMismatch(format!(
            "k = {}, omega = {} give (λ1, λ2) = ({}, {}) but the profile was computed with ({}, {})",
            wave.k(),
            wave.omega(),
            wave.lambda1(),
            wave.lambda2(),
            params.lambda1,
            params.lambda2
        )));
    }
    let grid = PeriodicGrid::from_grid(profile.grid());
    let (u, v) = (profile.u.values(), profile.v.values());
    let f = (0..grid.n)
        .map(|i| Complex64::from_polar(u[i], wave.k() * grid.x(i)))
        .collect();
    Ok(EvolutionState {
        grid,
        f,
        g: v[..grid.n].to_vec(),
        t: 0.0,
    })
}

/// Split-step integrator with cached FFT plans, scratch space and linear
/// propagators.
pub struct Evolver {
    grid: PeriodicGrid,
    coupling: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    xi: Vec<f64>,
    keep: Vec<bool>,
    work: RefCell<Workspace>,
}

struct Workspace {
    scratch: Vec<Complex64>,
    /// `tau` and the propagators `e^{-i ξ^2 tau}`, `e^{i ξ^3 tau}`.
    propagators: Option<(f64, Vec<Complex64>, Vec<Complex64>)>,
    buf: Vec<Complex64>,
}

impl std::fmt::Debug for Evolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Evolver")
            .field("grid", &self.grid)
            .field("coupling", &self.coupling)
            .finish()
    }
}

fn transform(plan: &dyn Fft<f64>, data: &mut [Complex64], scratch: &mut Vec<Complex64>) {
    let need = plan.get_inplace_scratch_len();
    if scratch.len() < need {
        scratch.resize(need, Complex64::new(0.0, 0.0));
    }
    plan.process_with_scratch(data, &mut scratch[..need]);
}

impl Evolver {
    pub fn new(grid: PeriodicGrid, coupling: f64) -> Self {
        let mut planner = FftPlanner::new();
        let n = grid.n;
        let xi: Vec<f64> = (0..n)
            .map(|k| if 2 * k == n { 0.0 } else { grid.wavenumber(k) })
            .collect();
        // 2/3 rule: keep |k| < n/3
        let keep = (0..n)
            .map(|k| {
                let m = if k <= n / 2 { k } else { n - k };
                3 * m < n
            })
            .collect();
        Self {
            grid,
            coupling,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            xi,
            keep,
            work: RefCell::new(Workspace {
                scratch: Vec::new(),
                propagators: None,
                buf: vec![Complex64::new(0.0, 0.0); n],
            }),
        }
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    fn fft(&self, data: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        transform(self.forward.as_ref(), data, scratch);
    }

    fn ifft(&self, data: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        transform(self.inverse.as_ref(), data, scratch);
        let scale = 1.0 / data.len() as f64;
        for z in data.iter_mut() {
            *z *= scale;
        }
    }

    fn linear(&self, f: &mut [Complex64], g: &mut [f64], tau: f64, work: &mut Workspace) {
        let stale = work.propagators.as_ref().is_none_or(|(t, _, _)| *t != tau);
        if stale {
            let pf = self
                .xi
                .iter()
                .map(|&k| Complex64::from_polar(1.0, -k * k * tau))
                .collect();
            let pg = self
                .xi
                .iter()
                .map(|&k| Complex64::from_polar(1.0, k * k * k * tau))
                .collect();
            work.propagators = Some((tau, pf, pg));
        }
        let Workspace {
            scratch,
            propagators,
            buf,
        } = work;
        let (_, pf, pg) = propagators.as_ref().expect("set above");

        self.fft(f, scratch);
        for (z, e) in f.iter_mut().zip(pf) {
            *z *= e;
        }
        self.ifft(f, scratch);

        for (b, &x) in buf.iter_mut().zip(g.iter()) {
            *b = Complex64::new(x, 0.0);
        }
        self.fft(buf, scratch);
        for (z, e) in buf.iter_mut().zip(pg) {
            *z *= e;
        }
        self.ifft(buf, scratch);
        for (x, z) in g.iter_mut().zip(buf.iter()) {
            *x = z.re;
        }
    }

    /// Right-hand side of the nonlinear and coupling terms, dealiased.
    fn nonlinear(
        &self,
        f: &[Complex64],
        g: &[f64],
        df: &mut [Complex64],
        dg: &mut [f64],
        work: &mut Workspace,
    ) {
        let a = self.coupling;
        let Workspace { scratch, buf, .. } = work;
        for ((d, z), &y) in df.iter_mut().zip(f).zip(g) {
            *d = Complex64::i() * (a * y + z.norm_sqr()) * z;
        }
        self.fft(df, scratch);
        for (z, &k) in df.iter_mut().zip(&self.keep) {
            if !k {
                *z = Complex64::new(0.0, 0.0);
            }
        }
        self.ifft(df, scratch);

        for ((b, z), &y) in buf.iter_mut().zip(f).zip(g) {
            *b = Complex64::new(0.5 * y * y + 0.5 * a * z.norm_sqr(), 0.0);
        }
        self.fft(buf, scratch);
        for ((z, &k), &keep) in buf.iter_mut().zip(&self.xi).zip(&self.keep) {
            *z = if keep {
                -Complex64::i() * k * *z
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        self.ifft(buf, scratch);
        for (d, z) in dg.iter_mut().zip(buf.iter()) {
            *d = z.re;
        }
    }

    fn rk4(&self, f: &mut [Complex64], g: &mut [f64], dt: f64, work: &mut Workspace) {
        let n = f.len();
        let zero = Complex64::new(0.0, 0.0);
        let (mut kf, mut kg) = (vec![zero; n], vec![0.0; n]);
        let (mut fs, mut gs) = (f.to_vec(), g.to_vec());
        let (mut acc_f, mut acc_g) = (vec![zero; n], vec![0.0; n]);
        for (stage, (c, w)) in [(0.0, 1.0), (0.5, 2.0), (0.5, 2.0), (1.0, 1.0)]
            .into_iter()
            .enumerate()
        {
            if stage > 0 {
                for i in 0..n {
                    fs[i] = f[i] + kf[i] * (c * dt);
                    gs[i] = g[i] + kg[i] * (c * dt);
                }
            }
            self.nonlinear(&fs, &gs, &mut kf, &mut kg, work);
            for i in 0..n {
                acc_f[i] += kf[i] * w;
                acc_g[i] += kg[i] * w;
            }
        }
        let w = dt / 6.0;
        for i in 0..n {
            f[i] += acc_f[i] * w;
            g[i] += acc_g[i] * w;
        }
    }

    /// Advances `state` by one Strang step in place.
    pub fn advance(&self, state: &mut EvolutionState, dt: f64) -> Result<()> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter {
                name: "dt",
                value: dt,
                reason: "must be finite and > 0",
            });
        }
        if state.grid != self.grid {
            return Err(Error::GridMismatch);
        }
        let work = &mut *self.work.borrow_mut();
        self.linear(&mut state.f, &mut state.g, 0.5 * dt, work);
        self.rk4(&mut state.f, &mut state.g, dt, work);
        self.linear(&mut state.f, &mut state.g, 0.5 * dt, work);
        state.t += dt;
        let sane = state
            .f
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite() && z.norm() < BLOW_UP)
            && state.g.iter().all(|x| x.is_finite() && x.abs() < BLOW_UP);
        if sane {
            Ok(())
        } else {
            Err(Error::BlowUp { t: state.t })
        }
    }

    pub fn step(&self, state: &EvolutionState, dt: f64) -> Result<EvolutionState> {
        let mut next = state.clone();
        self.advance(&mut next, dt)?;
        Ok(next)
    }
}

/// Amplitude beyond which a run is declared blown up.
pub const BLOW_UP: f64 = 1e8;

/// Default time step `min(h^2 / 2, 1e-3)`.
pub fn default_dt(grid: &Grid) -> f64 {
    (0.5 * grid.h() * grid.h()).min(1e-3)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvolutionDiagnostics {
    pub t: f64,
    pub mass_f: f64,
    pub mean_g: f64,
    pub profile_error_f: f64,
    pub profile_error_g: f64,
}

/// Minimum over periodic shifts `s` of the `L^2` distance between `current`
/// and `reference(· - s)`. The best node shift comes from an FFT
/// cross-correlation and is refined by golden-section search on a spectral
/// (trigonometric-interpolant) shift.
#[derive(Clone)]
pub struct ShiftMatcher {
    grid: PeriodicGrid,
    reference_hat: Vec<Complex64>,
    xi: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    reference_norm: f64,
}

impl ShiftMatcher {
    pub fn new(grid: PeriodicGrid, reference: &[f64]) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.n);
        let inverse = planner.plan_fft_inverse(grid.n);
        let mut reference_hat: Vec<Complex64> =
            reference.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        forward.process(&mut reference_hat);
        let n = grid.n;
        let xi = (0..n)
            .map(|k| if 2 * k == n { 0.0 } else { grid.wavenumber(k) })
            .collect();
        Self {
            grid,
            reference_hat,
            xi,
            forward,
            inverse,
            reference_norm: (grid.h * reference.iter().map(|x| x * x).sum::<f64>()).sqrt(),
        }
    }

    fn distance_at(&self, current: &[f64], shift: f64) -> f64 {
        let mut shifted: Vec<Complex64> = self
            .reference_hat
            .iter()
            .zip(&self.xi)
            .map(|(z, &k)| z * Complex64::from_polar(1.0, -k * shift))
            .collect();
        self.inverse.process(&mut shifted);
        let scale = 1.0 / self.grid.n as f64;
        let ss: f64 = current
            .iter()
            .zip(&shifted)
            .map(|(a, b)| (a - b.re * scale).powi(2))
            .sum();
        (self.grid.h * ss).sqrt()
    }

    /// Returns `(distance, shift)`.
    pub fn best_match(&self, current: &[f64]) -> (f64, f64) {
        let current_norm = (self.grid.h * current.iter().map(|x| x * x).sum::<f64>()).sqrt();
        if self.reference_norm == 0.0 || current_norm == 0.0 {
            return ((current_norm - self.reference_norm).abs(), 0.0);
        }
        let n = self.grid.n;
        let mut cur: Vec<Complex64> = current.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward.process(&mut cur);
        let mut corr: Vec<Complex64> = cur
            .iter()
            .zip(&self.reference_hat)
            .map(|(a, b)| a * b.conj())
            .collect();
        self.inverse.process(&mut corr);
        let best = (0..n)
            .max_by(|&i, &j| {
                corr[i]
                    .re
                    .partial_cmp(&corr[j].re)
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(0);
        let centre = if best <= n / 2 {
            best as f64
        } else {
            best as f64 - n as f64
        } * self.grid.h;

        // golden-section refinement on [centre - h, centre + h]
        let ratio = 0.5 * (5f64.sqrt() - 1.0);
        let (mut lo, mut hi) = (centre - self.grid.h, centre + self.grid.h);
        let mut x1 = hi - ratio * (hi - lo);
        let mut x2 = lo + ratio * (hi - lo);
        let mut d1 = self.distance_at(current, x1);
        let mut d2 = self.distance_at(current, x2);
        for _ in 0..60 {
            if d1 < d2 {
                hi = x2;
                x2 = x1;
                d2 = d1;
                x1 = hi - ratio * (hi - lo);
                d1 = self.distance_at(current, x1);
            } else {
                lo = x1;
                x1 = x2;
                d1 = d2;
                x2 = lo + ratio * (hi - lo);
                d2 = self.distance_at(current, x2);
            }
            if hi - lo < 1e-12 * self.grid.length() {
                break;
            }
        }
        let (mut best_d, mut best_s) = if d1 < d2 { (d1, x1) } else { (d2, x2) };
        let at_centre = self.distance_at(current, centre);
        if at_centre < best_d {
            best_d = at_centre;
            best_s = centre;
        }
        (best_d, best_s)
    }
}

/// Evolves `s0` to time `t_final` with `round(t_final / dt)` equal steps and
/// records diagnostics at `t = 0`, every `sample_every` steps and at the end.
pub fn run(
    s0: &EvolutionState,
    t_final: f64,
    dt: f64,
    coupling: f64,
    sample_every: usize,
) -> Result<Vec<EvolutionDiagnostics>> {
    let (diagnostics, failure) = run_partial(s0, t_final, dt, coupling, sample_every)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(diagnostics),
    }
}

/// Like [`run`], but a blow-up ends the run and is returned next to the
/// diagnostics recorded before it. Invalid arguments are still errors.
pub fn run_partial(
    s0: &EvolutionState,
    t_final: f64,
    dt: f64,
    coupling: f64,
    sample_every: usize,
) -> Result<(Vec<EvolutionDiagnostics>, Option<Error>)> {
    if !(t_final.is_finite() && t_final >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "T",
            value: t_final,
            reason: "must be finite and >= 0",
        });
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter {
            name: "dt",
            value: dt,
            reason: "must be finite and > 0",
        });
    }
    let steps = (t_final / dt).round() as usize;
    let dt = if steps > 0 {
        t_final / steps as f64
    } else {
        dt
    };
    let sample_every = sample_every.max(1);
    let evolver = Evolver::new(s0.grid, coupling);
    let match_f = ShiftMatcher::new(s0.grid, &s0.modulus_f());
    let match_g = ShiftMatcher::new(s0.grid, &s0.g);
    let diagnose = |s: &EvolutionState| EvolutionDiagnostics {
        t: s.t,
        mass_f: s.mass_f(),
        mean_g: s.mean_g(),
        profile_error_f: match_f.best_match(&s.modulus_f()).0,
        profile_error_g: match_g.best_match(&s.g).0,
    };

    let mut state = s0.clone();
    let mut out = vec![diagnose(&state)];
    for k in 1..=steps {
        if let Err(e) = evolver.advance(&mut state, dt) {
            return Ok((out, Some(e)));
        }
        if k % sample_every == 0 || k == steps {
            out.push(diagnose(&state));
        }
    }
    Ok((out, None))
}

/// Final state of a run without diagnostics.
pub fn evolve_to(
    s0: &EvolutionState,
    t_final: f64,
    dt: f64,
    coupling: f64,
) -> Result<EvolutionState> {
    let steps = (t_final / dt).round().max(0.0) as usize;
    let dt = if steps > 0 {
        t_final / steps as f64
    } else {
        dt
    };
    let evolver = Evolver::new(s0.grid, coupling);
    let mut state = s0.clone();
    for _ in 0..steps {
        evolver.advance(&mut state, dt)?;
    }
    Ok(state)
}
