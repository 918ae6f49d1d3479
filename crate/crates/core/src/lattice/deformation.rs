//! Periodic deformations `X = id + tau Y` of the fundamental domain and the
//! continuum gradient flow `dX/dt = div(grad F(grad X))`.
//!
//! Fields live on a uniform grid in lattice coordinates `(a, b)`, with
//! `x = a e1 + b e2`, and are interpolated linearly on the two triangles of
//! every grid square. Differences are taken in `(a, b)` and mapped to
//! Euclidean gradients through `B^{-1}`, `B = [e1 e2]`. On periodic
//! piecewise-linear fields `∫ det(grad Y)` vanishes exactly, as it does in
//! the continuum.

use serde::Serialize;

use super::forms::{f_phi, f_phi_gradient, E1, E2};
use super::mat2::{Mat2, Vec2};
use crate::error::{Error, Result};

/// Area of the fundamental domain.
pub const CELL_AREA: f64 = 0.866_025_403_784_438_6;

/// Default grid resolution per lattice direction.
pub const DEFAULT_RESOLUTION: usize = 64;

fn basis() -> Mat2 {
    Mat2::from_columns(E1, E2)
}

fn basis_inverse() -> Mat2 {
    basis().inverse().expect("lattice basis is invertible")
}

/// `Y` sampled at lattice coordinates `(i/res, j/res)`, with amplitude `tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeformationField {
    res: usize,
    tau: f64,
    y: Vec<Vec2>,
    t: f64,
}

impl DeformationField {
    /// Builds the field and removes its mean.
    pub fn new(res: usize, tau: f64, y: Vec<Vec2>) -> Result<Self> {
        if res < 2 || y.len() != res * res {
            return Err(Error::InvalidConfig(format!(
                "deformation field needs res >= 2 and res^2 samples, got res = {res}, {} samples",
                y.len()
            )));
        }
        if !tau.is_finite() {
            return Err(Error::NonFinite { x: tau });
        }
        if let Some(v) = y.iter().flatten().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite { x: *v });
        }
        let mut field = Self { res, tau, y, t: 0.0 };
        field.recenter();
        Ok(field)
    }

    /// Samples `f(a, b)` on the lattice-coordinate grid; `f` should be
    /// 1-periodic in both arguments.
    pub fn from_lattice_fn(res: usize, tau: f64, f: impl Fn(f64, f64) -> Vec2) -> Result<Self> {
        let h = 1.0 / res as f64;
        let y = (0..res)
            .flat_map(|i| (0..res).map(move |j| (i, j)))
            .map(|(i, j)| f(i as f64 * h, j as f64 * h))
            .collect();
        Self::new(res, tau, y)
    }

    pub fn zero(res: usize) -> Self {
        Self {
            res,
            tau: 0.0,
            y: vec![[0.0, 0.0]; res * res],
            t: 0.0,
        }
    }

    fn recenter(&mut self) {
        let n = self.y.len() as f64;
        let mean = self
            .y
            .iter()
            .fold([0.0, 0.0], |acc, v| [acc[0] + v[0], acc[1] + v[1]]);
        let mean = [mean[0] / n, mean[1] / n];
        for v in &mut self.y {
            v[0] -= mean[0];
            v[1] -= mean[1];
        }
    }

    pub fn resolution(&self) -> usize {
        self.res
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[Vec2] {
        &self.y
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        (i % self.res) * self.res + (j % self.res)
    }

    /// Mean of `Y` over the grid.
    pub fn mean(&self) -> Vec2 {
        let n = self.y.len() as f64;
        let s = self.y.iter().fold([0.0, 0.0], |acc, v| [acc[0] + v[0], acc[1] + v[1]]);
        [s[0] / n, s[1] / n]
    }

    /// `grad Y` on the triangles `(i, j), (i+1, j), (i, j+1)` and
    /// `(i+1, j+1), (i, j+1), (i+1, j)` of square `(i, j)`.
    pub fn triangle_gradients(&self, i: usize, j: usize) -> [Mat2; 2] {
        let h = 1.0 / self.res as f64;
        let y00 = self.y[self.idx(i, j)];
        let y10 = self.y[self.idx(i + 1, j)];
        let y01 = self.y[self.idx(i, j + 1)];
        let y11 = self.y[self.idx(i + 1, j + 1)];
        let diff = |p: Vec2, q: Vec2| [(p[0] - q[0]) / h, (p[1] - q[1]) / h];
        let binv = basis_inverse();
        [
            Mat2::from_columns(diff(y10, y00), diff(y01, y00)) * binv,
            Mat2::from_columns(diff(y11, y01), diff(y11, y10)) * binv,
        ]
    }

    /// `max_cells |grad X - Id|` (Frobenius).
    pub fn max_gradient_deviation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.res {
            for j in 0..self.res {
                for g in self.triangle_gradients(i, j) {
                    worst = worst.max(self.tau.abs() * g.frobenius());
                }
            }
        }
        worst
    }

    /// `||X - id||_{L^2(Pi)}`
    pub fn l2_distance(&self) -> f64 {
        let h2 = 1.0 / (self.res * self.res) as f64;
        let s: f64 = self.y.iter().map(|v| v[0] * v[0] + v[1] * v[1]).sum();
        self.tau.abs() * (s * h2 * CELL_AREA).sqrt()
    }

    /// Euclidean position of node `(i, j)` of the reference grid.
    pub fn node(&self, i: usize, j: usize) -> Vec2 {
        let h = 1.0 / self.res as f64;
        basis().apply([i as f64 * h, j as f64 * h])
    }
}

/// `∫_Pi F(grad X)` over the piecewise-linear interpolant.
pub fn continuum_energy_2d(field: &DeformationField) -> Result<f64> {
    let res = field.res;
    let mut sum = 0.0;
    for i in 0..res {
        for j in 0..res {
            for g in field.triangle_gradients(i, j) {
                sum += f_phi(&(Mat2::IDENTITY + g.scaled(field.tau))).map_err(|e| Error::CellDomain {
                    index: i * res + j,
                    reason: e.to_string(),
                })?;
            }
        }
    }
    Ok(sum * CELL_AREA / (2 * res * res) as f64)
}

/// Velocity `-(L^2 gradient)` of [`continuum_energy_2d`], with one unit of
/// mass `|Pi| h^2` per node.
pub fn deformation_velocity(field: &DeformationField) -> Result<Vec<Vec2>> {
    let res = field.res;
    let h = 1.0 / res as f64;
    let binv_t = basis_inverse().transpose();
    let mut acc = vec![[0.0; 2]; res * res];
    let at = |i: usize, j: usize| (i % res) * res + (j % res);
    let mut push = |k: usize, v: Vec2, sign: f64| {
        acc[k][0] += sign * v[0];
        acc[k][1] += sign * v[1];
    };
    for i in 0..res {
        for j in 0..res {
            let [lower, upper] = field.triangle_gradients(i, j);
            let mut q = [Mat2::ZERO; 2];
            for (t, g) in [lower, upper].iter().enumerate() {
                let p = f_phi_gradient(&(Mat2::IDENTITY + g.scaled(field.tau))).map_err(|e| Error::CellDomain {
                    index: i * res + j,
                    reason: e.to_string(),
                })?;
                q[t] = p * binv_t;
            }
            let (la, lb) = (q[0].column(0), q[0].column(1));
            push(at(i + 1, j), la, 1.0);
            push(at(i, j + 1), lb, 1.0);
            push(at(i, j), la, -1.0);
            push(at(i, j), lb, -1.0);
            let (ua, ub) = (q[1].column(0), q[1].column(1));
            push(at(i + 1, j + 1), ua, 1.0);
            push(at(i + 1, j + 1), ub, 1.0);
            push(at(i, j + 1), ua, -1.0);
            push(at(i + 1, j), ub, -1.0);
        }
    }
    let c = -1.0 / (2.0 * h);
    Ok(acc.into_iter().map(|v| [c * v[0], c * v[1]]).collect())
}

/// Power-iteration estimate of the largest eigenvalue of the flow linearized
/// at `X = id` on a `res x res` grid.
pub fn linearized_spectral_radius(res: usize) -> Result<f64> {
    let amp = 1e-6;
    let mut y: Vec<Vec2> = (0..res * res)
        .map(|k| {
            let (i, j) = (k / res, k % res);
            let s = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            [s * (1.0 + 0.1 * (k % 7) as f64), s * (0.5 + 0.1 * (k % 5) as f64)]
        })
        .collect();
    let mut lambda = 0.0;
    for _ in 0..60 {
        let norm = y.iter().map(|v| v[0] * v[0] + v[1] * v[1]).sum::<f64>().sqrt();
        for v in &mut y {
            v[0] /= norm;
            v[1] /= norm;
        }
        let field = DeformationField::new(res, amp, y.clone())?;
        let v = deformation_velocity(&field)?;
        let next: Vec<Vec2> = v.iter().map(|w| [-w[0] / amp, -w[1] / amp]).collect();
        lambda = next.iter().zip(&field.y).map(|(a, b)| a[0] * b[0] + a[1] * b[1]).sum::<f64>();
        y = next;
    }
    Ok(lambda)
}

#[derive(Debug, Clone, Copy)]
pub struct DeformationOptions {
    /// Initial step; `None` picks `1 / lambda_max` of the flow linearized at the identity.
    pub dt: Option<f64>,
    pub t_end: f64,
    pub record_every: f64,
    /// Size of the window around `Id` in which the flow must stay.
    pub eta: f64,
}

impl Default for DeformationOptions {
    fn default() -> Self {
        Self {
            dt: None,
            t_end: 0.05,
            record_every: 0.001,
            eta: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeformationSample {
    pub t: f64,
    pub energy: f64,
    pub l2_distance: f64,
    pub max_gradient_deviation: f64,
    /// `|mean of X - id|` after recentering.
    pub mean_drift: f64,
}

#[derive(Debug, Clone)]
pub struct DeformationTrajectory {
    pub samples: Vec<DeformationSample>,
    pub last: DeformationField,
    pub steps: usize,
    pub rejected: usize,
}

impl DeformationTrajectory {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "energy", "l2_distance", "max_gradient_deviation"])?;
        for s in &self.samples {
            w.write_record([
                s.t.to_string(),
                s.energy.to_string(),
                s.l2_distance.to_string(),
                s.max_gradient_deviation.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn sample(field: &DeformationField, energy: f64) -> DeformationSample {
    let m = field.mean();
    DeformationSample {
        t: field.t,
        energy,
        l2_distance: field.l2_distance(),
        max_gradient_deviation: field.max_gradient_deviation(),
        mean_drift: field.tau.abs() * m[0].hypot(m[1]),
    }
}

/// Explicit Euler in time with energy-decrease acceptance; the mean of
/// `X - id` is removed after every step.
pub fn evolve_deformation(initial: &DeformationField, opts: &DeformationOptions) -> Result<DeformationTrajectory> {
    if !(opts.t_end >= 0.0) || !(opts.record_every > 0.0) || !(opts.eta > 0.0) {
        return Err(Error::InvalidConfig("deformation flow needs t_end >= 0, record_every > 0, eta > 0".into()));
    }
    let start = initial.max_gradient_deviation();
    if start > opts.eta / 2.0 {
        return Err(Error::LeftWindow {
            index: 0,
            distance: start,
        });
    }
    let mut dt = match opts.dt {
        Some(dt) => dt,
        None => 1.0 / linearized_spectral_radius(initial.res)?,
    };
    let mut field = initial.clone();
    if field.tau == 0.0 {
        field.tau = 1.0;
    }
    let mut energy = continuum_energy_2d(&field)?;
    let mut samples = vec![sample(&field, energy)];
    let mut next_record = opts.record_every;
    let (mut steps, mut rejected) = (0, 0);
    while field.t < opts.t_end * (1.0 - 1e-12) {
        let target = next_record.min(opts.t_end);
        let step = dt.min(target - field.t);
        let v = deformation_velocity(&field)?;
        let mut trial = field.clone();
        for (y, vk) in trial.y.iter_mut().zip(&v) {
            y[0] += step * vk[0] / field.tau;
            y[1] += step * vk[1] / field.tau;
        }
        trial.recenter();
        trial.t = field.t + step;
        let trial_energy = continuum_energy_2d(&trial);
        match trial_energy {
            Ok(e) if e <= energy + 4.0 * f64::EPSILON * energy.abs() => {
                field = trial;
                energy = e;
                steps += 1;
                if field.t >= target * (1.0 - 1e-12) {
                    let s = sample(&field, energy);
                    if s.max_gradient_deviation > opts.eta {
                        return Err(Error::LeftWindow {
                            index: samples.len(),
                            distance: s.max_gradient_deviation,
                        });
                    }
                    samples.push(s);
                    next_record += opts.record_every;
                }
            }
            _ => {
                rejected += 1;
                dt = step / 2.0;
                if dt < 1e-14 {
                    return Err(Error::StepUnderflow { index: 0, t: field.t });
                }
            }
        }
    }
    if initial.tau == 0.0 {
        field.tau = 0.0;
    }
    Ok(DeformationTrajectory {
        samples,
        last: field,
        steps,
        rejected,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpansionReport {
    pub taus: Vec<f64>,
    /// `max_cells |3 sqrt(3) F(Id + tau grad Y) - polynomial|` per `tau`.
    pub max_residuals: Vec<f64>,
    /// Log-log slope of the residuals in `tau`; `None` if every residual vanishes.
    pub fitted_order: Option<f64>,
    pub r_squared: Option<f64>,
}

/// Compares `3 sqrt(3) F(Id + tau grad Y)` with its second-order model on
/// every triangle of `y` (the field's own `tau` is ignored).
pub fn expansion_check(y: &DeformationField, taus: &[f64]) -> Result<ExpansionReport> {
    let res = y.res;
    let mut max_residuals = Vec::with_capacity(taus.len());
    for &tau in taus {
        let mut worst: f64 = 0.0;
        for i in 0..res {
            for j in 0..res {
                for g in y.triangle_gradients(i, j) {
                    let value = 3.0 * 3f64.sqrt()
                        * f_phi(&(Mat2::IDENTITY + g.scaled(tau))).map_err(|e| Error::CellDomain {
                            index: i * res + j,
                            reason: e.to_string(),
                        })?;
                    worst = worst.max((value - super::forms::expansion_polynomial(&g, tau)).abs());
                }
            }
        }
        max_residuals.push(worst);
    }
    // residuals at rounding level carry no order information
    let fit = if max_residuals.iter().all(|r| *r > 1e-12) && taus.len() >= 2 {
        let xs: Vec<f64> = taus.iter().map(|t| t.abs()).collect();
        Some(crate::fit::log_log_fit(&xs, &max_residuals))
    } else {
        None
    };
    Ok(ExpansionReport {
        taus: taus.to_vec(),
        max_residuals,
        fitted_order: fit.map(|f| f.slope),
        r_squared: fit.map(|f| f.r_squared),
    })
}
