//! Eulerian form of the continuum flow,
//! `∂_t f = -r C_r ∂_x(f ∂_x(rho / f^(r+1)))`, on the periodic unit interval.
//!
//! With `m = rho^(1/(r+1))` and `u = f/m` the flux becomes
//! `(r+1) C_r m ∂_x(u^(-r))`, which is what the finite-volume scheme
//! discretizes. Under the step restriction used here the update is a monotone
//! map of `u`, so it inherits the comparison principle, and constant `u` is
//! an exact discrete equilibrium.

use crate::continuum::lagrangian::{c_r, LagrangianMap};
use crate::density::{power_with_exponent, Density1D, Profile};
use crate::error::{Error, Result};

/// Cell averages `f_k` on the cells centred at `x_k = (k + 1/2)/M`, periodic.
#[derive(Debug, Clone, PartialEq)]
pub struct EulerianField {
    values: Vec<f64>,
    t: f64,
}

impl EulerianField {
    pub fn new(values: Vec<f64>, t: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyConfig);
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::BlowDown { index, value });
        }
        Ok(Self { values, t })
    }

    pub fn from_fn(f: impl Fn(f64) -> f64, m: usize) -> Result<Self> {
        Self::new((0..m).map(|k| f((k as f64 + 0.5) / m as f64)).collect(), 0.0)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn grid_size(&self) -> usize {
        self.values.len()
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.values.len() as f64
    }

    pub fn x(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.spacing()
    }

    /// `sum_k f_k dx`.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.spacing()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `(u, m)` with `m = rho^(1/(1+r))` and `u = f/m` on the cell centres.
pub fn u_transform(f: &EulerianField, rho: &Density1D, r: f64) -> (Vec<f64>, Vec<f64>) {
    let e = 1.0 / (1.0 + r);
    let m: Vec<f64> = (0..f.grid_size())
        .map(|k| rho.value(f.x(k)).powf(e))
        .collect();
    let u = f.values.iter().zip(&m).map(|(fv, mv)| fv / mv).collect();
    (u, m)
}

/// `rho^(1/(1+r)) / ∫ rho^(1/(1+r))` sampled on `M` cells.
pub fn stationary_state(rho: &Density1D, r: f64, m: usize) -> Result<EulerianField> {
    if !(r >= 1.0) {
        return Err(Error::InvalidExponent { r });
    }
    let limit = stationary_density(rho, r)?;
    EulerianField::from_fn(|x| limit.value(x), m)
}

/// The stationary profile as a density on [0, 1].
pub fn stationary_density(rho: &Density1D, r: f64) -> Result<Density1D> {
    power_with_exponent(rho, 1.0 / (1.0 + r))
}

struct Stencil {
    /// `m` at faces `k + 1/2`
    face: Vec<f64>,
    /// `m` at cell centres
    centre: Vec<f64>,
}

impl Stencil {
    fn new(rho: &Density1D, r: f64, m: usize) -> Self {
        let e = 1.0 / (1.0 + r);
        let h = 1.0 / m as f64;
        Self {
            face: (0..m).map(|k| rho.value((k as f64 + 1.0) * h).powf(e)).collect(),
            centre: (0..m).map(|k| rho.value((k as f64 + 0.5) * h).powf(e)).collect(),
        }
    }

    fn rhs(&self, f: &[f64], r: f64, out: &mut [f64]) {
        let m = f.len();
        let h = 1.0 / m as f64;
        let k_coef = (r + 1.0) * c_r(r) / (h * h);
        let w: Vec<f64> = f
            .iter()
            .zip(&self.centre)
            .map(|(fv, mv)| (fv / mv).powf(-r))
            .collect();
        // flux[k] lives on face k + 1/2
        let flux: Vec<f64> = (0..m).map(|k| self.face[k] * (w[(k + 1) % m] - w[k])).collect();
        for k in 0..m {
            out[k] = -k_coef * (flux[k] - flux[(k + m - 1) % m]);
        }
    }

    /// Largest step keeping the update monotone in `u`.
    fn monotone_step(&self, f: &[f64], r: f64) -> f64 {
        let m = f.len();
        let h = 1.0 / m as f64;
        let u_min = f
            .iter()
            .zip(&self.centre)
            .map(|(fv, mv)| fv / mv)
            .fold(f64::INFINITY, f64::min);
        let worst = (0..m)
            .map(|k| (self.face[k] + self.face[(k + m - 1) % m]) / self.centre[k])
            .fold(0.0, f64::max);
        0.9 * h * h * u_min.powf(r + 1.0) / (r * (r + 1.0) * c_r(r) * worst)
    }
}

/// Time derivative of the field under the Eulerian flow.
pub fn eulerian_rhs(f: &EulerianField, rho: &Density1D, r: f64) -> Result<Vec<f64>> {
    rho.check_periodic()?;
    let stencil = Stencil::new(rho, r, f.grid_size());
    let mut out = vec![0.0; f.grid_size()];
    stencil.rhs(&f.values, r, &mut out);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EulerianOptions {
    pub dt: f64,
    pub t_end: f64,
    /// `None` records every step.
    pub record_every: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EulerianTrajectory {
    pub samples: Vec<EulerianField>,
    pub steps: usize,
}

impl EulerianTrajectory {
    pub fn last(&self) -> &EulerianField {
        self.samples.last().expect("trajectory is never empty")
    }

    /// Writes rows `t,x,f`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "x", "f"])?;
        for s in &self.samples {
            for (k, v) in s.values.iter().enumerate() {
                w.write_record(&[s.t.to_string(), s.x(k).to_string(), v.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Explicit finite-volume integration. The step is the smaller of `dt` and
/// the monotonicity bound `~ dx^2 min(u)^(r+1)`, which shrinks as `f -> 0`.
pub fn evolve_eulerian(
    f0: &EulerianField,
    rho: &Density1D,
    r: f64,
    opts: &EulerianOptions,
) -> Result<EulerianTrajectory> {
    if !(r >= 1.0) {
        return Err(Error::InvalidExponent { r });
    }
    if !(opts.dt > 0.0) || !(opts.t_end >= 0.0) {
        return Err(Error::InvalidConfig("dt must be positive and t_end nonnegative".into()));
    }
    rho.check_periodic()?;
    let m = f0.grid_size();
    let stencil = Stencil::new(rho, r, m);
    let mut f = f0.values.clone();
    let mut rate = vec![0.0; m];
    let mut samples = vec![EulerianField {
        values: f.clone(),
        t: 0.0,
    }];
    let mut t = 0.0;
    let mut steps = 0;
    let mut next_record = opts.record_every.map(|s| s.min(opts.t_end));

    while t < opts.t_end {
        let mut dt = opts
            .dt
            .min(stencil.monotone_step(&f, r))
            .min(opts.t_end - t);
        if let Some(nr) = next_record {
            dt = dt.min(nr - t);
        }
        if dt < crate::discrete_flow::MIN_STEP {
            let (index, &value) = f
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap();
            return Err(Error::BlowDown { index, value });
        }
        stencil.rhs(&f, r, &mut rate);
        for (v, d) in f.iter_mut().zip(&rate) {
            *v += dt * d;
        }
        if let Some((index, &value)) = f.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::BlowDown { index, value });
        }
        steps += 1;
        let hit = next_record.is_some_and(|nr| t + dt >= nr * (1.0 - 1e-14));
        t = if hit { next_record.unwrap() } else { t + dt };
        if opts.t_end - t < 1e-12 * opts.t_end.max(1.0) {
            t = opts.t_end;
        }
        let record = match opts.record_every {
            None => true,
            Some(step) => {
                if hit || t >= opts.t_end {
                    next_record = next_record.map(|nr| (nr + step).min(opts.t_end));
                    true
                } else {
                    false
                }
            }
        };
        if record {
            samples.push(EulerianField {
                values: f.clone(),
                t,
            });
        }
    }
    Ok(EulerianTrajectory { samples, steps })
}

/// Minimum slope accepted by [`pushforward_density`].
pub const MIN_PUSHFORWARD_SLOPE: f64 = 1e-10;

/// Density of `X_# dtheta` on `m` periodic cells. Each value is the exact
/// cell mass of the push-forward of the interpolated map divided by the cell
/// width, so the total mass is one up to rounding; on smooth maps this
/// agrees with `1/∂_theta X` at the cell centres to second order.
pub fn pushforward_density(map: &LagrangianMap, m: usize) -> Result<EulerianField> {
    let slopes = map.slopes();
    if let Some((index, &slope)) = slopes
        .iter()
        .enumerate()
        .find(|(_, s)| !(**s >= MIN_PUSHFORWARD_SLOPE))
    {
        return Err(Error::Degeneracy { index, slope });
    }
    let interp = map.interpolant();
    let inverse = |x: f64| -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while hi - lo > 1e-15 {
            let mid = 0.5 * (lo + hi);
            if interp.eval(mid) < x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let h = 1.0 / m as f64;
    let edges: Vec<f64> = (0..=m).map(|k| inverse(k as f64 * h)).collect();
    EulerianField::new(
        edges.windows(2).map(|w| (w[1] - w[0]) / h).collect(),
        map.t(),
    )
}
