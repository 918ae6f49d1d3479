//! Lagrangian continuum flow of point configurations.
//!
//! `X(t, theta)` is sampled at cell centres `theta_j = (j - 1/2)/M` and pinned
//! to `X(0) = 0`, `X(1) = 1`. Slopes live on the `M + 1` faces between
//! consecutive samples (the two boundary faces have width `1/(2M)`), and the
//! semi-discrete flow is the exact gradient flow of the face-quadrature
//! energy, so the divergence term comes out in flux form.

use crate::density::{Density1D, MonotoneCubic, Profile};
use crate::error::{Error, Result};

/// `C_r = 1 / (2^r (r + 1))`.
pub fn c_r(r: f64) -> f64 {
    1.0 / (2f64.powf(r) * (r + 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianMap {
    values: Vec<f64>,
    t: f64,
}

impl LagrangianMap {
    pub fn new(values: Vec<f64>, t: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyConfig);
        }
        if let Some(i) = values.iter().position(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::InvalidConfig(format!(
                "map value {} at node {i} outside [0, 1]",
                values[i]
            )));
        }
        if let Some(i) = values.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::NonMonotone { index: i });
        }
        Ok(Self { values, t })
    }

    pub fn from_fn(map: impl Fn(f64) -> f64, m: usize) -> Result<Self> {
        Self::new((0..m).map(|j| map((j as f64 + 0.5) / m as f64)).collect(), 0.0)
    }

    pub fn identity(m: usize) -> Self {
        Self::from_fn(|t| t, m).expect("identity is monotone")
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

    pub fn theta(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.spacing()
    }

    /// `(left value, right value, width)` for each of the `M + 1` faces.
    fn faces(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let m = self.values.len();
        let h = self.spacing();
        (0..=m).map(move |f| {
            let left = if f == 0 { 0.0 } else { self.values[f - 1] };
            let right = if f == m { 1.0 } else { self.values[f] };
            let width = if f == 0 || f == m { 0.5 * h } else { h };
            (left, right, width)
        })
    }

    /// Face slopes `∂_theta X`.
    pub fn slopes(&self) -> Vec<f64> {
        self.faces().map(|(l, r, w)| (r - l) / w).collect()
    }

    /// Shape-preserving interpolant through the samples and the pinned ends.
    pub fn interpolant(&self) -> MonotoneCubic {
        let m = self.values.len();
        let mut xs = Vec::with_capacity(m + 2);
        let mut ys = Vec::with_capacity(m + 2);
        xs.push(0.0);
        ys.push(0.0);
        for (j, &v) in self.values.iter().enumerate() {
            xs.push(self.theta(j));
            ys.push(v);
        }
        xs.push(1.0);
        ys.push(1.0);
        MonotoneCubic::new(xs, ys).expect("cell centres increase")
    }

    /// `X(theta)` at an arbitrary parameter.
    pub fn at(&self, theta: f64) -> f64 {
        self.interpolant().eval(theta)
    }

    fn with_values(&self, values: Vec<f64>, t: f64) -> Self {
        Self { values, t }
    }
}

/// `C_r ∫ rho(X) |∂_theta X|^(r+1) dtheta`, midpoint rule on the faces.
pub fn continuum_energy(map: &LagrangianMap, rho: &Density1D, r: f64) -> Result<f64> {
    if !(r >= 1.0) {
        return Err(Error::InvalidExponent { r });
    }
    if let Some(i) = map.values.windows(2).position(|w| w[1] < w[0]) {
        return Err(Error::NonMonotone { index: i });
    }
    Ok(energy_unchecked(map, rho, r))
}

fn energy_unchecked(map: &LagrangianMap, rho: &Density1D, r: f64) -> f64 {
    let mut acc = 0.0;
    for (l, rr, w) in map.faces() {
        let s = (rr - l) / w;
        acc += w * rho.value(0.5 * (l + rr)) * s.abs().powf(r + 1.0);
    }
    c_r(r) * acc
}

/// Right-hand side of
/// `∂_t X = C_r [(r+1) ∂_theta(rho(X) |∂X|^(r-1) ∂X) - rho'(X) |∂X|^(r+1)]`
/// on the cell centres.
pub fn lagrangian_rhs(map: &LagrangianMap, rho: &Density1D, r: f64) -> Result<Vec<f64>> {
    if !(r >= 1.0) {
        return Err(Error::InvalidExponent { r });
    }
    let slopes = map.slopes();
    if let Some((i, &s)) = slopes.iter().enumerate().find(|(_, s)| !(**s > 0.0)) {
        return Err(Error::Degeneracy { index: i, slope: s });
    }
    Ok(rhs_unchecked(map, rho, r))
}

fn rhs_unchecked(map: &LagrangianMap, rho: &Density1D, r: f64) -> Vec<f64> {
    let m = map.values.len();
    let h = map.spacing();
    let cr = c_r(r);
    let mut flux = Vec::with_capacity(m + 1);
    let mut lower = Vec::with_capacity(m + 1);
    for (l, rr, w) in map.faces() {
        let s = (rr - l) / w;
        let mid = 0.5 * (l + rr);
        let a = s.abs();
        flux.push(rho.value(mid) * a.powf(r - 1.0) * s);
        lower.push(w * rho.d1(mid) * a.powf(r + 1.0));
    }
    (0..m)
        .map(|j| {
            cr * ((r + 1.0) * (flux[j + 1] - flux[j]) - 0.5 * (lower[j] + lower[j + 1])) / h
        })
        .collect()
}

/// Explicit Euler stability bound from a Gershgorin estimate of the
/// linearized diffusion.
fn stable_step(map: &LagrangianMap, rho: &Density1D, r: f64) -> f64 {
    let h = map.spacing();
    let cr = c_r(r);
    let coeff: Vec<f64> = map
        .faces()
        .map(|(l, rr, w)| {
            let s = ((rr - l) / w).abs();
            cr * (r + 1.0) * r * rho.value(0.5 * (l + rr)) * s.powf(r - 1.0) / w
        })
        .collect();
    let worst = coeff
        .windows(2)
        .map(|c| c[0] + c[1])
        .fold(0.0f64, f64::max);
    0.9 * h / worst
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianOptions {
    /// Upper bound on the step; the solver also enforces its stability cap.
    pub dt: f64,
    pub t_end: f64,
    pub record_every: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianTrajectory {
    pub samples: Vec<LagrangianMap>,
    pub energies: Vec<f64>,
    pub steps: usize,
}

impl LagrangianTrajectory {
    pub fn last(&self) -> &LagrangianMap {
        self.samples.last().expect("trajectory is never empty")
    }

    /// Writes rows `t,theta,X`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "theta", "X"])?;
        for s in &self.samples {
            for (j, x) in s.values.iter().enumerate() {
                w.write_record(&[s.t.to_string(), s.theta(j).to_string(), x.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Explicit time stepping of the Lagrangian flow. A step is accepted when
/// all slopes stay positive and the energy does not increase; otherwise it
/// is halved.
pub fn evolve_lagrangian(
    x0: &LagrangianMap,
    rho: &Density1D,
    r: f64,
    opts: &LagrangianOptions,
) -> Result<LagrangianTrajectory> {
    if !(opts.dt > 0.0) || !(opts.t_end >= 0.0) {
        return Err(Error::InvalidConfig("dt must be positive and t_end nonnegative".into()));
    }
    lagrangian_rhs(x0, rho, r)?;
    let mut current = x0.with_values(x0.values.clone(), 0.0);
    let mut e = energy_unchecked(&current, rho, r);
    let mut samples = vec![current.clone()];
    let mut energies = vec![e];
    let mut next_record = opts.record_every.map(|s| s.min(opts.t_end));
    let mut t = 0.0;
    let mut steps = 0;
    let mut trial = vec![0.0; current.values.len()];

    while t < opts.t_end {
        let rhs = rhs_unchecked(&current, rho, r);
        let mut dt = opts.dt.min(stable_step(&current, rho, r)).min(opts.t_end - t);
        if let Some(nr) = next_record {
            dt = dt.min(nr - t);
        }
        loop {
            for ((y, x), v) in trial.iter_mut().zip(&current.values).zip(&rhs) {
                *y = x + dt * v;
            }
            let cand = current.with_values(trial.clone(), t + dt);
            let slopes_ok = cand.faces().all(|(l, rr, _)| rr > l);
            if slopes_ok {
                let e_new = energy_unchecked(&cand, rho, r);
                if e_new <= e + 4.0 * f64::EPSILON * e.abs() {
                    current = cand;
                    e = e_new;
                    break;
                }
            }
            dt *= 0.5;
            if dt < crate::discrete_flow::MIN_STEP {
                let (index, slope) = current
                    .slopes()
                    .into_iter()
                    .enumerate()
                    .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                    .unwrap();
                return Err(Error::Degeneracy { index, slope });
            }
        }
        steps += 1;
        let hit = next_record.is_some_and(|nr| t + dt >= nr * (1.0 - 1e-14));
        t = if hit { next_record.unwrap() } else { t + dt };
        if opts.t_end - t < 1e-12 * opts.t_end.max(1.0) {
            t = opts.t_end;
        }
        current.t = t;
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
            samples.push(current.clone());
            energies.push(e);
        }
    }
    Ok(LagrangianTrajectory {
        samples,
        energies,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete_flow::{energy, PointConfig1D};
    use std::f64::consts::PI;

    #[test]
    fn constant_c_r() {
        assert!((c_r(2.0) - 1.0 / 12.0).abs() < 1e-16);
        assert!((c_r(1.0) - 0.25).abs() < 1e-16);
    }

    #[test]
    fn identity_energy_is_c2() {
        let e = continuum_energy(&LagrangianMap::identity(64), &Density1D::uniform(), 2.0).unwrap();
        assert!((e - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn quadratic_map_energy() {
        // (1/12) ∫ (2 theta)^3 = 1/6
        let m = LagrangianMap::from_fn(|t| t * t, 1024).unwrap();
        let e = continuum_energy(&m, &Density1D::uniform(), 2.0).unwrap();
        assert!((e - 1.0 / 6.0).abs() < 1e-6, "{e}");
    }

    #[test]
    fn discrete_energy_consistency() {
        let map = |t: f64| t + 0.05 * (2.0 * PI * t).sin();
        let rho = Density1D::cosine(0.3).unwrap();
        let cont = continuum_energy(&LagrangianMap::from_fn(map, 4096).unwrap(), &rho, 2.0).unwrap();
        let errs: Vec<f64> = [32usize, 64, 128]
            .iter()
            .map(|&n| {
                let cfg = PointConfig1D::sampled(map, n, 2.0).unwrap();
                ((n * n) as f64 * energy(&cfg, &rho) - cont).abs()
            })
            .collect();
        assert!(errs[2] < 0.6 * errs[0] && errs[2] < 2e-3, "{errs:?}");
    }

    #[test]
    fn rejects_non_monotone_and_flat_maps() {
        assert!(LagrangianMap::new(vec![0.3, 0.2], 0.0).is_err());
        let flat = LagrangianMap::new(vec![0.2, 0.2, 0.7], 0.0).unwrap();
        assert!(matches!(
            lagrangian_rhs(&flat, &Density1D::uniform(), 2.0),
            Err(Error::Degeneracy { .. })
        ));
    }

    #[test]
    fn identity_is_stationary_for_uniform() {
        let rhs = lagrangian_rhs(&LagrangianMap::identity(50), &Density1D::uniform(), 2.0).unwrap();
        assert!(rhs.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn uniform_density_gives_p_laplacian() {
        let map = LagrangianMap::from_fn(|t| t + 0.1 * (PI * t).sin().powi(2), 40).unwrap();
        let rhs = lagrangian_rhs(&map, &Density1D::uniform(), 3.0).unwrap();
        let s = map.slopes();
        let h = map.spacing();
        for j in 0..40 {
            let p = |v: f64| v.abs().powf(2.0) * v;
            let expected = c_r(3.0) * 4.0 * (p(s[j + 1]) - p(s[j])) / h;
            assert!((rhs[j] - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn rhs_converges_in_the_interior() {
        // Analytic right-hand side for X = theta + 0.1 sin^2(pi theta),
        // rho(x) = 1 + 0.1 cos(2 pi x), r = 2.
        let rho = Density1D::cosine(0.1).unwrap();
        let x = |t: f64| t + 0.1 * (PI * t).sin().powi(2);
        let dx = |t: f64| 1.0 + 0.1 * PI * (2.0 * PI * t).sin();
        let ddx = |t: f64| 0.2 * PI * PI * (2.0 * PI * t).cos();
        let exact = |t: f64| {
            let (xv, s, ss) = (x(t), dx(t), ddx(t));
            // (r+1) d/dθ(ρ(X) s^2) - ρ'(X) s^3 with r = 2, times C_2
            (3.0 * (rho.d1(xv) * s * s * s + rho.value(xv) * 2.0 * s * ss) - rho.d1(xv) * s.powi(3))
                / 12.0
        };
        let errs: Vec<f64> = [50usize, 150, 450]
            .iter()
            .map(|&m| {
                let map = LagrangianMap::from_fn(x, m).unwrap();
                let rhs = lagrangian_rhs(&map, &rho, 2.0).unwrap();
                (0..m)
                    .filter(|&j| (0.1..=0.9).contains(&map.theta(j)))
                    .map(|j| (rhs[j] - exact(map.theta(j))).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        let order = (errs[0] / errs[2]).ln() / 9f64.ln();
        assert!(order >= 1.0, "errors {errs:?}, order {order}");
    }

    #[test]
    fn identity_flow_stays_put() {
        let x0 = LagrangianMap::identity(32);
        let opts = LagrangianOptions {
            dt: 1e-3,
            t_end: 0.05,
            record_every: Some(0.01),
        };
        let traj = evolve_lagrangian(&x0, &Density1D::uniform(), 2.0, &opts).unwrap();
        assert_eq!(traj.samples.len(), 6);
        for (a, b) in traj.last().values().iter().zip(x0.values()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn flow_dissipates_and_relaxes_to_identity() {
        let x0 = LagrangianMap::from_fn(|t| t + 0.05 * (2.0 * PI * t).sin(), 64).unwrap();
        let opts = LagrangianOptions {
            dt: 1.0,
            t_end: 1.0,
            record_every: Some(0.1),
        };
        let traj = evolve_lagrangian(&x0, &Density1D::uniform(), 2.0, &opts).unwrap();
        assert!(traj.energies.windows(2).all(|w| w[1] <= w[0]));
        let dist = |m: &LagrangianMap| -> f64 {
            (m.values()
                .iter()
                .enumerate()
                .map(|(j, v)| (v - m.theta(j)).powi(2))
                .sum::<f64>()
                * m.spacing())
            .sqrt()
        };
        let d: Vec<f64> = traj.samples.iter().map(dist).collect();
        assert!(d.windows(2).all(|w| w[1] < w[0]));
        assert!(d.last().unwrap() / d[0] < 1e-3);
    }
}
