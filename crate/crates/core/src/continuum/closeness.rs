//! Distance between the discrete point flow and the continuum flow sampled
//! at the reference parameters `(i - 1/2)/N`.
//!
//! Discrete time is compared at `N^(r+1) t` (`N^3 t` for `r = 2`); the
//! rescale lives here, not in the integrators.

use serde::Serialize;

use crate::continuum::lagrangian::{evolve_lagrangian, LagrangianMap, LagrangianOptions, LagrangianTrajectory};
use crate::density::Density1D;
use crate::discrete_flow::{evolve, FlowOptions, FlowTrajectory1D, PointConfig1D, Scheme};
use crate::error::{Error, Result};
use crate::measure::{wasserstein_1d, DiscreteMeasure1D};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosenessPoint {
    /// Continuum time.
    pub t: f64,
    /// `(1/N) sum_i |x_i(N^e t) - X(t, (i - 1/2)/N)|^2`
    pub gronwall: f64,
    /// `W_1` between the discrete empirical measure and the limit density.
    pub w1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosenessSeries {
    pub n: usize,
    pub points: Vec<ClosenessPoint>,
    /// Set when some discrete state had to be interpolated in time.
    pub interpolated: bool,
}

impl ClosenessSeries {
    pub fn sup_gronwall(&self) -> f64 {
        self.points.iter().map(|p| p.gronwall).fold(0.0, f64::max)
    }

    pub fn final_w1(&self) -> f64 {
        self.points.last().map_or(f64::NAN, |p| p.w1)
    }
}

fn discrete_state_at(traj: &FlowTrajectory1D, s: f64) -> Result<(Vec<f64>, bool)> {
    let samples = &traj.samples;
    let tol = 1e-9 * s.abs().max(1.0);
    let first = samples.first().map(|x| x.t).unwrap_or(0.0);
    let last = traj.last().t;
    if s < first - tol || s > last + tol {
        return Err(Error::InvalidConfig(format!(
            "discrete trajectory covers [{first}, {last}] but time {s} was requested"
        )));
    }
    let k = samples.partition_point(|x| x.t < s - tol);
    if k < samples.len() && (samples[k].t - s).abs() <= tol {
        return Ok((samples[k].points.clone(), false));
    }
    if samples.len() < 3 {
        return Err(Error::InvalidConfig(
            "need three discrete samples to interpolate in time".into(),
        ));
    }
    // quadratic Lagrange interpolation on three neighbouring samples
    let start = k.saturating_sub(1).min(samples.len() - 3);
    let (a, b, c) = (&samples[start], &samples[start + 1], &samples[start + 2]);
    let la = (s - b.t) * (s - c.t) / ((a.t - b.t) * (a.t - c.t));
    let lb = (s - a.t) * (s - c.t) / ((b.t - a.t) * (b.t - c.t));
    let lc = (s - a.t) * (s - b.t) / ((c.t - a.t) * (c.t - b.t));
    let points = (0..a.points.len())
        .map(|i| la * a.points[i] + lb * b.points[i] + lc * c.points[i])
        .collect();
    Ok((points, true))
}

fn continuum_at_reference(map: &LagrangianMap, n: usize) -> Vec<f64> {
    let m = map.grid_size();
    if m.is_multiple_of(n) && (m / n) % 2 == 1 {
        let k = m / n;
        (0..n).map(|i| map.values()[k * i + (k - 1) / 2]).collect()
    } else {
        let interp = map.interpolant();
        (0..n).map(|i| interp.eval((i as f64 + 0.5) / n as f64)).collect()
    }
}

/// The Gronwall quantity and the `W_1` distance to `limit` at every
/// continuum sample time.
pub fn discrete_continuum_distance(
    discrete: &FlowTrajectory1D,
    continuum: &LagrangianTrajectory,
    n: usize,
    time_exponent: f64,
    limit: &Density1D,
) -> Result<ClosenessSeries> {
    let scale = (n as f64).powf(time_exponent);
    let mut interpolated = false;
    let mut points = Vec::with_capacity(continuum.samples.len());
    for map in &continuum.samples {
        let (x, interp) = discrete_state_at(discrete, scale * map.t())?;
        if x.len() != n {
            return Err(Error::InvalidConfig(format!(
                "discrete trajectory has {} points, expected {n}",
                x.len()
            )));
        }
        interpolated |= interp;
        let reference = continuum_at_reference(map, n);
        let gronwall = x
            .iter()
            .zip(&reference)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / n as f64;
        let mut sorted = x.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let empirical = DiscreteMeasure1D::uniform(sorted)?;
        points.push(ClosenessPoint {
            t: map.t(),
            gronwall,
            w1: wasserstein_1d(&empirical, limit, 1.0)?,
        });
    }
    Ok(ClosenessSeries {
        n,
        points,
        interpolated,
    })
}

/// Parameters of a discrete-versus-continuum run from a common smooth start.
#[derive(Debug, Clone)]
pub struct ClosenessSetup {
    pub rho: Density1D,
    pub n: usize,
    pub r: f64,
    /// Exponent of the time rescale; `r + 1` unless overridden.
    pub time_exponent: f64,
    /// Final continuum time.
    pub t_end: f64,
    /// Number of comparison times after `t = 0`.
    pub samples: usize,
    /// Continuum grid is `grid_ratio * n` cells; odd ratios put continuum
    /// nodes exactly on the reference parameters.
    pub grid_ratio: usize,
    /// Discrete step in units of `N` (discrete time).
    pub discrete_step: f64,
}

impl ClosenessSetup {
    pub fn new(rho: Density1D, n: usize) -> Self {
        Self {
            rho,
            n,
            r: 2.0,
            time_exponent: 3.0,
            t_end: 0.2,
            samples: 40,
            grid_ratio: 3,
            discrete_step: 0.05,
        }
    }
}

/// Runs both flows from `x_i(0) = X0((i - 1/2)/N)` and compares them.
pub fn run_closeness(setup: &ClosenessSetup, x0: impl Fn(f64) -> f64 + Copy) -> Result<ClosenessSeries> {
    let n = setup.n;
    let record = setup.t_end / setup.samples as f64;
    let scale = (n as f64).powf(setup.time_exponent);
    let cfg = PointConfig1D::sampled(x0, n, setup.r)?;
    let discrete = evolve(
        &cfg,
        &setup.rho,
        &FlowOptions {
            scheme: Scheme::ExplicitEuler,
            dt: setup.discrete_step * n as f64,
            t_end: scale * setup.t_end,
            record_every: Some(scale * record),
        },
    )?;
    let map = LagrangianMap::from_fn(x0, setup.grid_ratio * n)?;
    let continuum = evolve_lagrangian(
        &map,
        &setup.rho,
        setup.r,
        &LagrangianOptions {
            dt: f64::INFINITY,
            t_end: setup.t_end,
            record_every: Some(record),
        },
    )?;
    let limit = crate::continuum::eulerian::stationary_density(&setup.rho, setup.r)?;
    discrete_continuum_distance(&discrete, &continuum, n, setup.time_exponent, &limit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_inputs_give_zero() {
        let n = 8;
        let rho = Density1D::uniform();
        let cfg = PointConfig1D::equispaced(n, 2.0).unwrap();
        let traj = evolve(
            &cfg,
            &rho,
            &FlowOptions {
                scheme: Scheme::ExplicitEuler,
                dt: 1.0,
                t_end: 512.0 * 0.1,
                record_every: Some(512.0 * 0.05),
            },
        )
        .unwrap();
        let cont = evolve_lagrangian(
            &LagrangianMap::identity(3 * n),
            &rho,
            2.0,
            &LagrangianOptions {
                dt: 1.0,
                t_end: 0.1,
                record_every: Some(0.05),
            },
        )
        .unwrap();
        let series = discrete_continuum_distance(&traj, &cont, n, 3.0, &rho).unwrap();
        assert_eq!(series.points.len(), 3);
        assert!(!series.interpolated);
        assert!(series.sup_gronwall() < 1e-28);
        // the empirical midpoint measure sits 1/(4N) from the uniform density
        assert!((series.final_w1() - 0.25 / n as f64).abs() < 1e-12);
    }

    #[test]
    fn interpolates_between_samples_and_flags_it() {
        let rho = Density1D::uniform();
        let cfg = PointConfig1D::perturbed(4, 2.0, 0.5, 1).unwrap();
        let traj = evolve(
            &cfg,
            &rho,
            &FlowOptions {
                scheme: Scheme::ExplicitEuler,
                dt: 0.25,
                t_end: 2.0,
                record_every: Some(0.5),
            },
        )
        .unwrap();
        let (x, interp) = discrete_state_at(&traj, 0.75).unwrap();
        assert!(interp);
        let (y, exact) = discrete_state_at(&traj, 1.0).unwrap();
        assert!(!exact);
        assert_eq!(y, traj.samples[2].points);
        assert!(x.iter().zip(&traj.samples[1].points).all(|(a, b)| (a - b).abs() < 0.05));
        assert!(discrete_state_at(&traj, 3.0).is_err());
    }
}
