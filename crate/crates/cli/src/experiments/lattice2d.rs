use std::f64::consts::PI;

use quantflow::fit::exponential_fit;
use quantflow::lattice::{
    evolve_deformation, evolve_points_2d, hex_points, perturbed_hex_points, DeformationField, DeformationOptions,
    PointFlowOptions,
};

use super::{num, positive};
use crate::config::Config;
use crate::error::CliError;
use crate::report::Outputs;

struct Params {
    n: usize,
    amplitude: f64,
    points: PointFlowOptions,
    decay_ratio: f64,
    r_squared_min: f64,
    deformation: bool,
    res: usize,
    deviation: f64,
    deformation_opts: DeformationOptions,
}

impl Params {
    fn read(cfg: &Config) -> Result<Self, CliError> {
        let n = cfg.usize("n", 12)?;
        if n < 2 {
            return Err(CliError::Input("`n` must be at least 2".into()));
        }
        let points = PointFlowOptions {
            dt: cfg.opt_f64("dt")?,
            max_iterations: cfg.usize("max_iterations", 3000)?,
            gradient_tolerance: cfg.f64("gradient_tolerance", 1e-14)?,
            snapshot_every: cfg.usize("snapshot_every", 0)?,
        };
        let deformation_opts = DeformationOptions {
            dt: cfg.opt_f64("deformation_dt")?,
            t_end: cfg.f64("t_end", 0.05)?,
            record_every: positive("record_every", cfg.f64("record_every", 0.0025)?)?,
            eta: positive("eta", cfg.f64("eta", 0.05)?)?,
        };
        let res = cfg.usize("res", 64)?;
        if res < 4 {
            return Err(CliError::Input("`res` must be at least 4".into()));
        }
        Ok(Self {
            n,
            amplitude: cfg.f64("amplitude", 0.2)?,
            points,
            decay_ratio: cfg.f64("decay_ratio", 1e-3)?,
            r_squared_min: cfg.f64("r_squared_min", 0.9)?,
            deformation: cfg.bool("deformation", true)?,
            res,
            deviation: positive("deviation", cfg.f64("deviation", 0.01)?)?,
            deformation_opts,
        })
    }
}

pub fn run(cfg: &Config, seed: u64, out: &mut Outputs) -> Result<(), CliError> {
    let p = Params::read(cfg)?;
    cfg.finish("lattice2d")?;

    let reference = hex_points(p.n)?;
    let start = perturbed_hex_points(p.n, p.amplitude / p.n as f64, seed)?;
    let traj = evolve_points_2d(&start, &reference, &p.points)?;
    let s = &traj.samples;
    let decreasing = s.windows(2).all(|w| w[1].energy < w[0].energy);
    let ratio = s.last().unwrap().distance / s[0].distance;
    let iters: Vec<f64> = s.iter().map(|x| x.iteration as f64).collect();
    let dist: Vec<f64> = s.iter().map(|x| x.distance).collect();
    let fit = exponential_fit(&iters, &dist);

    out.metric("points", start.len());
    out.metric("iterations", s.len() - 1);
    out.metric("rejected_steps", traj.rejected);
    out.metric("initial_distance", s[0].distance);
    out.metric("final_distance", s.last().unwrap().distance);
    out.metric("decay_rate", -fit.slope);
    out.metric("fit_r_squared", fit.r_squared);
    out.flag("energy_strictly_decreasing", decreasing);
    out.at_most("distance_ratio", ratio, p.decay_ratio);
    out.at_least("decay_rate", -fit.slope, 0.0);
    out.at_least("fit_r_squared", fit.r_squared, p.r_squared_min);
    out.file("points.csv", |w| Ok(traj.write_series_csv(&mut *w)?))?;
    if p.points.snapshot_every > 0 {
        out.file("snapshots.csv", |w| Ok(traj.write_snapshots_csv(&mut *w)?))?;
    }

    if p.deformation {
        let shape = DeformationField::from_lattice_fn(p.res, 1.0, |a, b| {
            [
                (2.0 * PI * a).sin() + 0.3 * (2.0 * PI * (a + b)).cos(),
                (2.0 * PI * b).cos() - 0.2 * (2.0 * PI * a).sin(),
            ]
        })?;
        let tau = p.deviation / shape.max_gradient_deviation();
        let field = DeformationField::new(p.res, tau, shape.y().to_vec())?;
        let def = evolve_deformation(&field, &p.deformation_opts)?;
        let max_dev = def
            .samples
            .iter()
            .map(|x| x.max_gradient_deviation)
            .fold(0.0f64, f64::max);
        out.metric("deformation_steps", def.steps);
        out.metric("deformation_initial_l2", def.samples[0].l2_distance);
        out.metric("deformation_final_l2", def.samples.last().unwrap().l2_distance);
        out.at_most("deformation_max_gradient_deviation", max_dev, p.deformation_opts.eta / 4.0);
        let rows = def.samples.iter().map(|x| {
            vec![num(x.t), num(x.energy), num(x.l2_distance), num(x.max_gradient_deviation)]
        });
        out.csv(
            "deformation.csv",
            &["t", "energy", "l2_distance", "max_gradient_deviation"],
            rows,
        )?;
    }
    Ok(())
}
