use std::f64::consts::PI;

use quantflow::continuum::{run_closeness, ClosenessSetup};
use quantflow::density::Density1D;
use quantflow::fit::log_log_fit;

use super::{density, num, positive};
use crate::config::Config;
use crate::error::CliError;
use crate::report::Outputs;

struct Params {
    ns: Vec<usize>,
    rho: Density1D,
    amplitude: f64,
    t_end: f64,
    samples: usize,
    grid_ratio: usize,
    discrete_step: f64,
    time_exponent: f64,
    slope_target: f64,
    slope_tolerance: f64,
}

impl Params {
    fn read(cfg: &Config) -> Result<Self, CliError> {
        let ns = cfg.usize_list("n", &[16, 32, 64, 128])?;
        if ns.len() < 2 || ns.iter().any(|&n| n < 2) {
            return Err(CliError::Input("`n` needs at least two sizes, each at least 2".into()));
        }
        let amplitude = cfg.f64("amplitude", 0.08)?;
        if !(amplitude.abs() < 1.0) {
            return Err(CliError::Input("`amplitude` must lie in (-1, 1)".into()));
        }
        let samples = cfg.usize("samples", 40)?;
        let grid_ratio = cfg.usize("grid_ratio", 3)?;
        if samples == 0 || grid_ratio == 0 {
            return Err(CliError::Input("`samples` and `grid_ratio` must be positive".into()));
        }
        Ok(Self {
            ns,
            rho: density(cfg, "uniform", 0.05)?,
            amplitude,
            t_end: positive("t_end", cfg.f64("t_end", 0.2)?)?,
            samples,
            grid_ratio,
            discrete_step: positive("discrete_step", cfg.f64("discrete_step", 0.05)?)?,
            time_exponent: cfg.f64("time_exponent", 3.0)?,
            slope_target: cfg.f64("slope_target", -4.0)?,
            slope_tolerance: cfg.f64("slope_tolerance", 0.5)?,
        })
    }
}

pub fn run(cfg: &Config, out: &mut Outputs) -> Result<(), CliError> {
    let p = Params::read(cfg)?;
    cfg.finish("closeness")?;
    let a = p.amplitude;
    let start = move |t: f64| t + a * (2.0 * PI * t).sin() / (2.0 * PI);

    let mut rows = Vec::new();
    let mut sups = Vec::new();
    for &n in &p.ns {
        let setup = ClosenessSetup {
            t_end: p.t_end,
            samples: p.samples,
            grid_ratio: p.grid_ratio,
            discrete_step: p.discrete_step,
            time_exponent: p.time_exponent,
            ..ClosenessSetup::new(p.rho.clone(), n)
        };
        let series = run_closeness(&setup, start)?;
        for pt in &series.points {
            rows.push(vec![n.to_string(), num(pt.t), num(pt.gronwall), num(pt.w1)]);
        }
        out.metric(&format!("n{n}_sup_distance"), series.sup_gronwall());
        out.metric(&format!("n{n}_final_w1"), series.final_w1());
        if series.interpolated {
            out.note(format!("N = {n}: some discrete states were interpolated in time"));
        }
        sups.push(series.sup_gronwall());
    }
    out.csv("closeness.csv", &["n", "t", "distance", "w1_to_limit"], rows)?;
    let xs: Vec<f64> = p.ns.iter().map(|&n| n as f64).collect();
    let fit = log_log_fit(&xs, &sups);
    out.metric("slope", fit.slope);
    out.metric("slope_r_squared", fit.r_squared);
    out.within("slope", fit.slope, p.slope_target, p.slope_tolerance);
    Ok(())
}
