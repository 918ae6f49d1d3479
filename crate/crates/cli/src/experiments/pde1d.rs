use std::f64::consts::PI;

use quantflow::continuum::{
    comparison_diagnostics, eulerian_rhs, evolve_eulerian, evolve_lagrangian, stationary_state, u_transform,
    DiagnosticTolerances, EulerianField, EulerianOptions, LagrangianMap, LagrangianOptions,
};
use quantflow::density::Density1D;

use super::{density, num, one_of, positive};
use crate::config::Config;
use crate::error::CliError;
use crate::report::Outputs;

struct Params {
    form: String,
    m: usize,
    r: f64,
    rho: Density1D,
    amplitude: f64,
    t_end: f64,
    record_every: f64,
    levels: Vec<f64>,
    tolerances: DiagnosticTolerances,
    mass_tolerance: f64,
}

impl Params {
    fn read(cfg: &Config) -> Result<Self, CliError> {
        let form = one_of("form", cfg.string("form", "eulerian")?, &["eulerian", "lagrangian"])?;
        let m = cfg.usize("m", 256)?;
        if m < 4 {
            return Err(CliError::Input("`m` must be at least 4".into()));
        }
        let amplitude = cfg.f64("amplitude", 0.3)?;
        if !(amplitude.abs() < 1.0) {
            return Err(CliError::Input("`amplitude` must lie in (-1, 1)".into()));
        }
        Ok(Self {
            form,
            m,
            r: cfg.f64("r", 2.0)?,
            rho: density(cfg, "cosine", 0.1)?,
            amplitude,
            t_end: cfg.f64("t_end", 0.1)?,
            record_every: positive("record_every", cfg.f64("record_every", 0.002)?)?,
            levels: cfg.f64_list("levels", &[0.8, 1.0, 1.2])?,
            tolerances: DiagnosticTolerances {
                monotone: cfg.f64("monotone_tolerance", 1e-8)?,
                bounds: cfg.f64("bounds_tolerance", 1e-6)?,
            },
            mass_tolerance: cfg.f64("mass_tolerance", 1e-8)?,
        })
    }
}

pub fn run(cfg: &Config, out: &mut Outputs) -> Result<(), CliError> {
    let p = Params::read(cfg)?;
    cfg.finish("pde1d")?;
    if p.form == "lagrangian" {
        lagrangian(&p, out)
    } else {
        eulerian(&p, out)
    }
}

/// Starts from `u0 = (1 + a sin 2πx) / ∫m`, so `u` hovers around one.
fn eulerian(p: &Params, out: &mut Outputs) -> Result<(), CliError> {
    let h = 1.0 / p.m as f64;
    let (_, weight) = u_transform(&EulerianField::from_fn(|_| 1.0, p.m)?, &p.rho, p.r);
    let norm: f64 = weight.iter().sum::<f64>() * h;
    let f0 = EulerianField::new(
        (0..p.m)
            .map(|k| (1.0 + p.amplitude * (2.0 * PI * (k as f64 + 0.5) * h).sin()) / norm * weight[k])
            .collect(),
        0.0,
    )?;
    let traj = evolve_eulerian(
        &f0,
        &p.rho,
        p.r,
        &EulerianOptions {
            dt: f64::INFINITY,
            t_end: p.t_end,
            record_every: None,
        },
    )?;
    let diag = comparison_diagnostics(&traj, &p.rho, p.r, &p.levels, p.tolerances);
    let mass0 = f0.mass();
    let drift = traj.samples.iter().map(|s| (s.mass() - mass0).abs()).fold(0.0f64, f64::max);
    let stationary = stationary_state(&p.rho, p.r, p.m)?;
    let last = traj.last();
    let l1_to_limit: f64 = last
        .values()
        .iter()
        .zip(stationary.values())
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        * h;
    let residual = eulerian_rhs(&stationary, &p.rho, p.r)?
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));

    out.metric("steps", traj.steps);
    out.metric("mass_drift", drift);
    out.metric("violations", diag.violations.len());
    out.metric("initial_u_range", vec![diag.min_u[0], diag.max_u[0]]);
    out.metric("final_u_range", vec![*diag.min_u.last().unwrap(), *diag.max_u.last().unwrap()]);
    out.metric("final_l1_to_stationary", l1_to_limit);
    out.metric("stationary_residual", residual);
    out.flag("level_functionals_nonincreasing", diag.is_monotone());
    out.flag("u_within_initial_range", diag.bounds_hold);
    out.at_most("mass_drift", drift, p.mass_tolerance);

    // the field is sampled on a coarser clock than the per-step diagnostics
    let mut next = 0.0;
    let mut rows = Vec::new();
    for s in &traj.samples {
        if s.t() + 1e-12 >= next || s.t() >= p.t_end {
            for (k, v) in s.values().iter().enumerate() {
                rows.push(vec![num(s.t()), num(s.x(k)), num(*v)]);
            }
            next = s.t() + p.record_every;
        }
    }
    out.csv("eulerian.csv", &["t", "x", "f"], rows)?;
    out.file("comparison.csv", |w| Ok(diag.write_csv(&mut *w)?))?;
    Ok(())
}

/// Starts from `X0 = θ + a sin^3(2πθ) / (2π)`, which has unit slope at both
/// ends.
fn lagrangian(p: &Params, out: &mut Outputs) -> Result<(), CliError> {
    let a = p.amplitude;
    let map = LagrangianMap::from_fn(|t| t + a * (2.0 * PI * t).sin().powi(3) / (2.0 * PI), p.m)?;
    let traj = evolve_lagrangian(
        &map,
        &p.rho,
        p.r,
        &LagrangianOptions {
            dt: f64::INFINITY,
            t_end: p.t_end,
            record_every: Some(p.record_every),
        },
    )?;
    let min_slope = |m: &LagrangianMap| m.slopes().into_iter().fold(f64::INFINITY, f64::min);
    let initial = min_slope(&map);
    let lowest = traj.samples.iter().map(min_slope).fold(f64::INFINITY, f64::min);
    let dissipative = traj.energies.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-13));

    out.metric("steps", traj.steps);
    out.metric("initial_energy", traj.energies[0]);
    out.metric("final_energy", *traj.energies.last().unwrap());
    out.metric("initial_min_slope", initial);
    out.metric("lowest_min_slope", lowest);
    out.flag("energy_nonincreasing", dissipative);
    out.at_least("min_slope_fraction", lowest / initial, 0.5);

    out.file("lagrangian.csv", |w| Ok(traj.write_csv(&mut *w)?))?;
    let rows = traj
        .samples
        .iter()
        .zip(&traj.energies)
        .map(|(s, e)| vec![num(s.t()), num(*e)]);
    out.csv("energy.csv", &["t", "energy"], rows)?;
    Ok(())
}
