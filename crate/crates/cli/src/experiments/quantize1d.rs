use quantflow::continuum::{c_r, stationary_density};
use quantflow::density::{Density1D, Profile};
use quantflow::discrete_flow::{
    empirical_measure, energy, evolve, gradient, minimize_energy, FlowOptions, MinimizerOptions, PointConfig1D, Scheme,
};
use quantflow::fit::log_log_fit;
use quantflow::measure::wasserstein_1d;
use quantflow::quadrature::Quadrature;

use super::{density, num, one_of, positive};
use crate::config::Config;
use crate::error::CliError;
use crate::report::Outputs;

struct Params {
    ns: Vec<usize>,
    r: f64,
    rho: Density1D,
    init: String,
    amplitude: f64,
    method: String,
    scheme: Scheme,
    dt: f64,
    t_end: f64,
    record_every: f64,
    stationary_tolerance: f64,
    energy_tolerance: f64,
    slope_tolerance: f64,
}

impl Params {
    fn read(cfg: &Config) -> Result<Self, CliError> {
        let ns = cfg.usize_list("n", &[64])?;
        if ns.contains(&0) {
            return Err(CliError::Input("`n` must be positive".into()));
        }
        let r = cfg.f64("r", 2.0)?;
        let rho = density(cfg, "uniform", 0.5)?;
        let init = one_of("init", cfg.string("init", "equispaced")?, &["equispaced", "perturbed", "quantile"])?;
        let amplitude = cfg.f64("amplitude", 0.5)?;
        let method = one_of("method", cfg.string("method", "flow")?, &["flow", "newton"])?;
        let scheme = match one_of("scheme", cfg.string("scheme", "adaptive")?, &["adaptive", "euler"])?.as_str() {
            "euler" => Scheme::ExplicitEuler,
            _ => Scheme::Adaptive,
        };
        let dt = positive("dt", cfg.f64("dt", 1.0)?)?;
        let t_end = cfg.f64("t_end", 1000.0)?;
        let record_every = positive("record_every", cfg.f64("record_every", t_end.max(1e-12) / 100.0)?)?;
        Ok(Self {
            ns,
            r,
            rho,
            init,
            amplitude,
            method,
            scheme,
            dt,
            t_end,
            record_every,
            stationary_tolerance: cfg.f64("stationary_tolerance", 1e-8)?,
            energy_tolerance: cfg.f64("energy_tolerance", 0.05)?,
            slope_tolerance: cfg.f64("slope_tolerance", 0.2)?,
        })
    }
}

pub fn run(cfg: &Config, seed: u64, out: &mut Outputs) -> Result<(), CliError> {
    let p = Params::read(cfg)?;
    cfg.finish("quantize1d")?;

    let limit = stationary_density(&p.rho, p.r)?;
    let exponent = 1.0 / (1.0 + p.r);
    let mass = Quadrature::unit().integrate(|y| p.rho.value(y).powf(exponent))?;
    // N^r F_{N,r} -> C_r (∫ rho^(1/(1+r)))^(1+r) for optimal configurations
    let asymptotic = c_r(p.r) * mass.powf(1.0 + p.r);
    out.metric("asymptotic_constant", asymptotic);

    let mut summary = Vec::new();
    let mut w1s = Vec::new();
    for &n in &p.ns {
        let start = match p.init.as_str() {
            "perturbed" => PointConfig1D::perturbed(n, p.r, p.amplitude, seed)?,
            "quantile" => PointConfig1D::from_quantiles(&limit, n, p.r)?,
            _ => PointConfig1D::equispaced(n, p.r)?,
        };
        let last = if p.method == "newton" {
            let min = minimize_energy(&start, &p.rho, &MinimizerOptions::default())?;
            out.metric(&format!("n{n}_newton_iterations"), min.iterations);
            let rows = min.config.points().iter().enumerate().map(|(i, x)| vec![(i + 1).to_string(), num(*x)]);
            out.csv(&format!("minimizer_n{n}.csv"), &["i", "x_i"], rows)?;
            min.config
        } else {
            let traj = evolve(
                &start,
                &p.rho,
                &FlowOptions {
                    scheme: p.scheme,
                    dt: p.dt,
                    t_end: p.t_end,
                    record_every: Some(p.record_every),
                },
            )?;
            out.metric(&format!("n{n}_accepted_steps"), traj.accepted);
            out.metric(&format!("n{n}_rejected_steps"), traj.rejected);
            out.file(&format!("trajectory_n{n}.csv"), |w| Ok(traj.write_csv(&mut *w)?))?;
            PointConfig1D::new(traj.last().points.clone(), p.r)?
        };
        let e = energy(&last, &p.rho);
        let grad = gradient(&last, &p.rho)?;
        let grad_norm = n as f64 * grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        let scaled = (n as f64).powf(p.r) * e;
        let w1 = wasserstein_1d(&empirical_measure(&last), &limit, 1.0)?;
        w1s.push(w1);
        out.metric(&format!("n{n}_energy"), e);
        out.metric(&format!("n{n}_scaled_energy"), scaled);
        out.metric(&format!("n{n}_gradient_norm"), grad_norm);
        out.metric(&format!("n{n}_w1_to_limit"), w1);
        out.at_most(&format!("n{n}_stationary"), grad_norm, p.stationary_tolerance);
        out.within(&format!("n{n}_energy_ratio"), scaled / asymptotic, 1.0, p.energy_tolerance);
        summary.push(vec![
            n.to_string(),
            num(e),
            num(scaled),
            num(scaled / asymptotic),
            num(grad_norm),
            num(w1),
        ]);
    }
    out.csv(
        "summary.csv",
        &["n", "energy", "scaled_energy", "energy_ratio", "gradient_norm", "w1_to_limit"],
        summary,
    )?;
    if p.ns.len() >= 2 {
        let xs: Vec<f64> = p.ns.iter().map(|&n| n as f64).collect();
        let fit = log_log_fit(&xs, &w1s);
        out.metric("w1_slope", fit.slope);
        out.metric("w1_slope_r_squared", fit.r_squared);
        out.within("w1_slope", fit.slope, -1.0, p.slope_tolerance);
    }
    Ok(())
}
