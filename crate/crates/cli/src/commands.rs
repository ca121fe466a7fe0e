use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use nlskdv::evolve::{reconstruct, run_partial, EvolutionDiagnostics};
use nlskdv::io::{format_float, read_field_csv, write_field_csv, write_json};
use nlskdv::nehari::{nehari_scale, Termination};
use nlskdv::threshold::{saddle_check, threshold_closed_form, SaddleReport};
use nlskdv::{
    continue_in_beta, energy, ground_state, lambda_threshold, model, Branch, EnergyBreakdown,
    Error, GroundReport, PairField, RealField, SolveReport, WaveParams,
};
use serde::Serialize;

use crate::config::{Command, Resolved, RunConfig, Source};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_SOLVER: u8 = 2;
pub const EXIT_BLOW_UP: u8 = 3;

/// A failure that ends the command before its outputs are complete.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidGrid(_)
        | Error::InvalidParameter { .. }
        | Error::GridMismatch
        | Error::LengthMismatch { .. }
        | Error::ParameterMismatch(_) => EXIT_CONFIG,
        Error::BlowUp { .. } => EXIT_BLOW_UP,
        Error::NoProjection(_)
        | Error::TrivialState
        | Error::Singular { .. }
        | Error::Diverged { .. }
        | Error::NotConverged { .. }
        | Error::ContinuationStart { .. } => EXIT_SOLVER,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::config(format!("{}: {e}", path.display()))
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: Command,
    status: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    message: Option<&'a str>,
    seed: u64,
    config: &'a RunConfig,
    result: T,
}

struct Out<'a> {
    run: &'a Resolved,
}

impl Out<'_> {
    fn path(&self, name: &str) -> std::path::PathBuf {
        self.run.out.join(name)
    }

    fn json<T: Serialize>(
        &self,
        name: &str,
        status: &str,
        message: Option<&str>,
        result: T,
    ) -> Result<(), Failure> {
        let path = self.path(name);
        let file = File::create(&path).map_err(|e| io_failure(&path, e))?;
        let envelope = Envelope {
            command: self.run.command,
            status,
            message,
            seed: self.run.config.seed,
            config: &self.run.config,
            result,
        };
        let mut w = BufWriter::new(file);
        write_json(&mut w, &envelope).map_err(|e| io_failure(&path, e))?;
        w.flush().map_err(|e| io_failure(&path, e))
    }

    fn field(&self, name: &str, f: &RealField) -> Result<(), Failure> {
        let path = self.path(name);
        let file = File::create(&path).map_err(|e| io_failure(&path, e))?;
        let mut w = BufWriter::new(file);
        write_field_csv(&mut w, f).map_err(|e| io_failure(&path, e))?;
        w.flush().map_err(|e| io_failure(&path, e))
    }

    fn csv(
        &self,
        name: &str,
        header: &str,
        rows: impl Iterator<Item = Vec<f64>>,
    ) -> Result<(), Failure> {
        let path = self.path(name);
        let file = File::create(&path).map_err(|e| io_failure(&path, e))?;
        let mut w = BufWriter::new(file);
        let write = || -> std::io::Result<()> {
            writeln!(w, "{header}")?;
            for row in rows {
                let cells: Vec<String> = row.into_iter().map(format_float).collect();
                writeln!(w, "{}", cells.join(","))?;
            }
            w.flush()
        };
        write().map_err(|e| io_failure(&path, e))
    }
}

pub fn dispatch(run: &Resolved) -> Result<u8, Failure> {
    fs::create_dir_all(&run.out).map_err(|e| io_failure(&run.out, e))?;
    let out = Out { run };
    match run.command {
        Command::Threshold => threshold(&out),
        Command::Ground => ground(&out),
        Command::Continue => continuation(&out),
        Command::Evolve => evolve(&out),
        Command::Energy => energy_cmd(&out),
    }
}

#[derive(Serialize)]
struct ThresholdOut {
    #[serde(rename = "Lambda")]
    lambda: f64,
    #[serde(rename = "Lambda_grid")]
    lambda_grid: f64,
    #[serde(rename = "Lambda_closed_form")]
    closed_form: f64,
    lambda1: f64,
    lambda2: f64,
    n: usize,
    #[serde(rename = "L")]
    half_width: f64,
    iterations: usize,
    rayleigh_quotient: f64,
    saddle: SaddleReport,
}

fn threshold(out: &Out) -> Result<u8, Failure> {
    let r = out.run;
    let p = &r.params;
    let rep = lambda_threshold(p.lambda1, p.lambda2, r.grid, &r.config.threshold)?;
    let saddle = saddle_check(p, r.grid, r.config.seed)?;
    out.field("eigenfunction.csv", &rep.eigenfunction)?;
    let result = ThresholdOut {
        lambda: rep.lambda_extrapolated.unwrap_or(rep.lambda_threshold),
        lambda_grid: rep.lambda_threshold,
        closed_form: threshold_closed_form(p.lambda1, p.lambda2),
        lambda1: p.lambda1,
        lambda2: p.lambda2,
        n: r.grid.n(),
        half_width: r.grid.half_width(),
        iterations: rep.iterations,
        rayleigh_quotient: rep.rayleigh_quotient,
        saddle,
    };
    out.json("threshold.json", "ok", None, result)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct Comparison {
    phi_ground: f64,
    phi_semi_trivial_v: f64,
    phi_semi_trivial_u: f64,
    margin: f64,
    below_semi_trivial: bool,
}

#[derive(Serialize)]
struct CandidateOut<'a> {
    start: &'a str,
    descent_iterations: usize,
    descent_residual_inf: f64,
    descent_termination: Termination,
    phi: f64,
    residual_inf: f64,
    converged: bool,
    positive: bool,
}

#[derive(Serialize)]
struct GroundOut<'a> {
    #[serde(flatten)]
    report: &'a SolveReport,
    coupled: bool,
    best_start: &'a str,
    comparison: Comparison,
    candidates: Vec<CandidateOut<'a>>,
}

fn ground_summary(g: &GroundReport) -> GroundOut<'_> {
    GroundOut {
        report: &g.best,
        coupled: g.coupled,
        best_start: g.best_start,
        comparison: Comparison {
            phi_ground: g.best.phi,
            phi_semi_trivial_v: g.phi_semi_trivial_v,
            phi_semi_trivial_u: g.phi_semi_trivial_u,
            margin: g.margin,
            below_semi_trivial: g.below_semi_trivial,
        },
        candidates: g
            .candidates
            .iter()
            .map(|c| CandidateOut {
                start: c.start,
                descent_iterations: c.descent.iterations,
                descent_residual_inf: c.descent.residual_inf,
                descent_termination: c.descent.termination,
                phi: c.polished.phi,
                residual_inf: c.polished.residual_inf,
                converged: c.polished.converged,
                positive: c.polished.positive,
            })
            .collect(),
    }
}

fn ground(out: &Out) -> Result<u8, Failure> {
    let r = out.run;
    let g = match ground_state(&r.params, r.grid, &r.config.solver) {
        Ok(g) => g,
        Err(e) => {
            let msg = e.to_string();
            out.json("ground.json", "failed", Some(&msg), ())?;
            return Err(e.into());
        }
    };
    out.field("u.csv", &g.best.profile.u)?;
    out.field("v.csv", &g.best.profile.v)?;
    let converged = g.best.converged;
    let status = if converged { "ok" } else { "not_converged" };
    out.json("ground.json", status, None, ground_summary(&g))?;
    Ok(if converged { EXIT_OK } else { EXIT_SOLVER })
}

#[derive(Serialize)]
struct PointOut {
    beta: f64,
    phi: f64,
    residual_inf: f64,
    distance_to_u0: f64,
    iterations: usize,
    converged: bool,
    positive: bool,
    even: bool,
}

#[derive(Serialize)]
struct BranchOut {
    beta_target: f64,
    steps: usize,
    complete: bool,
    last_good_beta: f64,
    points: Vec<PointOut>,
}

fn write_branch(out: &Out, b: Option<&Branch>) -> Result<(), Failure> {
    let rows = b.into_iter().flat_map(|b| {
        b.points.iter().map(|p| {
            vec![
                p.beta,
                p.report.phi,
                p.report.residual_inf,
                p.distance_to_u0,
            ]
        })
    });
    out.csv("branch.csv", "beta,phi,residual_inf,distance_to_u0", rows)
}

fn continuation(out: &Out) -> Result<u8, Failure> {
    let r = out.run;
    let c = &r.config.continuation;
    let summary = |b: &Branch| BranchOut {
        beta_target: c.beta_target,
        steps: c.steps,
        complete: b.complete,
        last_good_beta: b.last_good_beta,
        points: b
            .points
            .iter()
            .map(|p| PointOut {
                beta: p.beta,
                phi: p.report.phi,
                residual_inf: p.report.residual_inf,
                distance_to_u0: p.distance_to_u0,
                iterations: p.report.iterations,
                converged: p.report.converged,
                positive: p.report.positive,
                even: p.report.even,
            })
            .collect(),
    };
    match continue_in_beta(
        &r.params,
        r.grid,
        c.beta_target,
        c.steps,
        &r.config.solver.newton,
    ) {
        Ok(b) => {
            write_branch(out, Some(&b))?;
            if let Some(last) = b.points.last() {
                out.field("u.csv", &last.report.profile.u)?;
                out.field("v.csv", &last.report.profile.v)?;
            }
            if b.complete {
                out.json("continue.json", "ok", None, summary(&b))?;
                Ok(EXIT_OK)
            } else {
                let msg = format!("Newton failed beyond beta = {}", b.last_good_beta);
                out.json("continue.json", "incomplete", Some(&msg), summary(&b))?;
                Ok(EXIT_SOLVER)
            }
        }
        Err(e) => {
            write_branch(out, None)?;
            let msg = e.to_string();
            let last_good_beta = match e {
                Error::ContinuationStart { last_good_beta } => last_good_beta,
                _ => 0.0,
            };
            let empty = BranchOut {
                beta_target: c.beta_target,
                steps: c.steps,
                complete: false,
                last_good_beta,
                points: Vec::new(),
            };
            out.json("continue.json", "failed", Some(&msg), empty)?;
            Err(e.into())
        }
    }
}

fn read_profile(path: &Path, grid: nlskdv::Grid) -> Result<RealField, Failure> {
    let file = File::open(path).map_err(|e| io_failure(path, e))?;
    read_field_csv(BufReader::new(file), grid).map_err(|e| io_failure(path, e))
}

/// The state named by `profile.source`.
fn load_state(r: &Resolved) -> Result<PairField, Failure> {
    let (p, g) = (&r.params, r.grid);
    let z = || RealField::zeros(g);
    let state = match r.config.profile.source.unwrap_or(Source::Decoupled) {
        Source::Decoupled => model::decoupled(p, g)?,
        Source::Kdv => PairField::new(z(), model::soliton_v2(p.lambda2, g)?)?,
        Source::Nls => PairField::new(model::soliton_u1(p.lambda1, g)?, z())?,
        Source::Files => {
            let (u, v) = (&r.config.profile.u, &r.config.profile.v);
            let (Some(u), Some(v)) = (u, v) else {
                return Err(Failure::config("profile files not set"));
            };
            PairField::new(read_profile(u, g)?, read_profile(v, g)?)?
        }
        Source::Ground => {
            let gs = ground_state(p, g, &r.config.solver)?;
            if !gs.best.converged {
                return Err(Failure {
                    code: EXIT_SOLVER,
                    message: format!(
                        "ground state did not converge (residual {:e})",
                        gs.best.residual_inf
                    ),
                });
            }
            gs.best.profile
        }
    };
    Ok(state)
}

#[derive(Serialize)]
struct EvolveOut {
    k: f64,
    omega: f64,
    speed: f64,
    coupling: f64,
    dt: f64,
    t_final: f64,
    samples: usize,
    max_profile_error_f: f64,
    max_profile_error_g: f64,
    final_profile_error_f: f64,
    final_profile_error_g: f64,
    /// `max |∫|f|^2(t) - ∫|f|^2(0)| / ∫|f|^2(0)`, or the absolute drift for `f = 0`.
    mass_f_drift: f64,
    mean_g_drift: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    blow_up_time: Option<f64>,
}

fn evolve(out: &Out) -> Result<u8, Failure> {
    let r = out.run;
    let e = &r.config.evolution;
    let (k, omega, dt, coupling, every) = match (e.k, e.omega, e.dt, e.coupling, e.sample_every) {
        (Some(k), Some(o), Some(dt), Some(c), Some(s)) => (k, o, dt, c, s),
        _ => unreachable!("resolved before dispatch"),
    };
    let wave = WaveParams::new(k, omega)?;
    let state = load_state(r)?;
    let s0 = reconstruct(&state, &r.params, &wave)?;
    let (diag, failure) = run_partial(&s0, e.t_final, dt, coupling, every)?;

    out.csv(
        "diagnostics.csv",
        "t,mass_f,mean_g,profile_error_f,profile_error_g",
        diag.iter().map(|d| {
            vec![
                d.t,
                d.mass_f,
                d.mean_g,
                d.profile_error_f,
                d.profile_error_g,
            ]
        }),
    )?;
    let first: EvolutionDiagnostics = diag[0];
    let max = |f: fn(&EvolutionDiagnostics) -> f64| diag.iter().map(f).fold(0.0, f64::max);
    let last = diag.last().copied().unwrap_or(first);
    let mass_scale = if first.mass_f > 0.0 {
        first.mass_f
    } else {
        1.0
    };
    let blow_up_time = match &failure {
        Some(Error::BlowUp { t }) => Some(*t),
        _ => None,
    };
    let result = EvolveOut {
        k,
        omega,
        speed: wave.speed(),
        coupling,
        dt,
        t_final: e.t_final,
        samples: diag.len(),
        max_profile_error_f: max(|d| d.profile_error_f),
        max_profile_error_g: max(|d| d.profile_error_g),
        final_profile_error_f: last.profile_error_f,
        final_profile_error_g: last.profile_error_g,
        mass_f_drift: diag
            .iter()
            .map(|d| (d.mass_f - first.mass_f).abs())
            .fold(0.0, f64::max)
            / mass_scale,
        mean_g_drift: diag
            .iter()
            .map(|d| (d.mean_g - first.mean_g).abs())
            .fold(0.0, f64::max),
        blow_up_time,
    };
    match failure {
        None => {
            out.json("evolve.json", "ok", None, result)?;
            Ok(EXIT_OK)
        }
        Some(err) => {
            let msg = err.to_string();
            out.json("evolve.json", "blow_up", Some(&msg), result)?;
            Err(err.into())
        }
    }
}

#[derive(Serialize)]
struct EnergyOut {
    #[serde(flatten)]
    breakdown: EnergyBreakdown,
    psi: f64,
    #[serde(rename = "F")]
    f: f64,
    norm_sq: f64,
    residual_inf: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    nehari_scale: Option<f64>,
}

fn energy_cmd(out: &Out) -> Result<u8, Failure> {
    let r = out.run;
    let p = &r.params;
    let w = load_state(r)?;
    let result = EnergyOut {
        breakdown: energy::phi(&w, p)?,
        psi: energy::psi(&w, p)?,
        f: energy::restricted_f(&w, p)?,
        norm_sq: w.norm_sq(p.lambda1, p.lambda2)?,
        residual_inf: energy::residual_inf(&w, p),
        nehari_scale: nehari_scale(&w, p).ok(),
    };
    out.json("energy.json", "ok", None, result)?;
    Ok(EXIT_OK)
}
