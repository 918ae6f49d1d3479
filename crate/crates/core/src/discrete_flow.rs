//! The discrete quantization energy `F_{N,r}` on ordered points in [0, 1]
//! and its gradient flow.
//!
//! The Voronoi cell of `x_i` is `[b_{i-1}, b_i]` with `b_0 = 0`, `b_N = 1`
//! and `b_i = (x_i + x_{i+1}) / 2` otherwise. Coincident points share the
//! boundary and the lower index keeps it.

use std::io::Write;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::density::{Density1D, Profile};
use crate::error::{Error, Result};
use crate::measure::{cdf_and_quantile, DiscreteMeasure1D};
use crate::quadrature::gauss_legendre;

/// Gauss–Legendre panels on each half-cell.
const HALF_CELL_PANELS: usize = 2;
/// Steps shorter than this abort the flow.
pub const MIN_STEP: f64 = 1e-14;

#[inline]
pub(crate) fn pow_r(d: f64, r: f64) -> f64 {
    if r == 2.0 {
        d * d
    } else if r == 3.0 {
        d * d * d
    } else if r == 1.0 {
        d
    } else {
        d.powf(r)
    }
}

/// Sorted points `0 <= x_1 <= ... <= x_N <= 1` with the cost exponent `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointConfig1D {
    points: Vec<f64>,
    r: f64,
}

impl PointConfig1D {
    pub fn new(points: Vec<f64>, r: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyConfig);
        }
        if !(r >= 1.0) {
            return Err(Error::InvalidExponent { r });
        }
        if let Some(i) = points.iter().position(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::InvalidConfig(format!(
                "point {i} = {} lies outside [0, 1]",
                points[i]
            )));
        }
        if let Some(i) = points.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::NonMonotone { index: i });
        }
        Ok(Self { points, r })
    }

    /// `x_i = (i - 1/2) / N`.
    pub fn equispaced(n: usize, r: f64) -> Result<Self> {
        Self::sampled(|t| t, n, r)
    }

    /// `x_i = map((i - 1/2) / N)`.
    pub fn sampled(map: impl Fn(f64) -> f64, n: usize, r: f64) -> Result<Self> {
        Self::new(
            (0..n).map(|i| map((i as f64 + 0.5) / n as f64)).collect(),
            r,
        )
    }

    /// Equispaced points each shifted by `amplitude * (u - 1/2) / N` with
    /// `u` uniform on [0, 1). Ordering is kept for `amplitude < 1`.
    pub fn perturbed(n: usize, r: f64, amplitude: f64, seed: u64) -> Result<Self> {
        if !(0.0..1.0).contains(&amplitude) {
            return Err(Error::InvalidConfig(format!(
                "perturbation amplitude {amplitude} must lie in [0, 1)"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = 1.0 / n as f64;
        let points = (0..n)
            .map(|i| {
                let u: f64 = rng.random();
                ((i as f64 + 0.5) * h + amplitude * (u - 0.5) * h).clamp(0.0, 1.0)
            })
            .collect();
        Self::new(points, r)
    }

    /// `x_i = Q((i - 1/2) / N)` with `Q` the quantile function of `limit`.
    pub fn from_quantiles(limit: &Density1D, n: usize, r: f64) -> Result<Self> {
        let dist = cdf_and_quantile(limit);
        Self::sampled(|s| dist.quantile(s), n, r)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Cell boundaries `b_0 = 0, ..., b_N = 1`.
    pub fn cell_boundaries(&self) -> Vec<f64> {
        let n = self.points.len();
        let mut b = Vec::with_capacity(n + 1);
        b.push(0.0);
        b.extend(self.points.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        b.push(1.0);
        b
    }

    fn min_gap_index(&self) -> usize {
        self.points
            .windows(2)
            .enumerate()
            .min_by(|a, b| (a.1[1] - a.1[0]).partial_cmp(&(b.1[1] - b.1[0])).unwrap())
            .map(|(i, _)| i)
            .unwrap_or(0)
    }
}

/// Optimal masses: `m_i = ∫_{cell_i} rho`.
pub fn voronoi_masses(cfg: &PointConfig1D, rho: &Density1D) -> Vec<f64> {
    let b = cfg.cell_boundaries();
    cfg.points
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            gauss_legendre(|y| rho.value(y), b[i], x, HALF_CELL_PANELS)
                + gauss_legendre(|y| rho.value(y), x, b[i + 1], HALF_CELL_PANELS)
        })
        .collect()
}

/// `F_{N,r} = sum_i ∫_{cell_i} |y - x_i|^r rho(y) dy = ∫ min_i |x_i - y|^r rho`.
pub fn energy(cfg: &PointConfig1D, rho: &Density1D) -> f64 {
    let b = cfg.cell_boundaries();
    let r = cfg.r;
    let mut total = 0.0;
    for (i, &x) in cfg.points.iter().enumerate() {
        let g = |y: f64| pow_r((y - x).abs(), r) * rho.value(y);
        total += gauss_legendre(g, b[i], x, HALF_CELL_PANELS);
        total += gauss_legendre(g, x, b[i + 1], HALF_CELL_PANELS);
    }
    total
}

/// `dF/dx_i = r ∫_{cell_i} sgn(x_i - y) |x_i - y|^(r-1) rho(y) dy`.
///
/// The cell-boundary terms cancel because the min-integrand is continuous
/// across midpoints.
pub fn gradient(cfg: &PointConfig1D, rho: &Density1D) -> Result<Vec<f64>> {
    if let Some(i) = cfg.points.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::CoincidentPoints { index: i });
    }
    Ok(gradient_unchecked(cfg, rho))
}

fn gradient_unchecked(cfg: &PointConfig1D, rho: &Density1D) -> Vec<f64> {
    let b = cfg.cell_boundaries();
    let r = cfg.r;
    cfg.points
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let g = |y: f64| pow_r((x - y).abs(), r - 1.0) * rho.value(y);
            r * (gauss_legendre(g, b[i], x, HALF_CELL_PANELS)
                - gauss_legendre(g, x, b[i + 1], HALF_CELL_PANELS))
        })
        .collect()
}

/// Atoms at the points with equal masses `1/N`.
pub fn empirical_measure(cfg: &PointConfig1D) -> DiscreteMeasure1D {
    DiscreteMeasure1D::uniform(cfg.points.clone()).expect("config points are a valid support")
}

/// Atoms at the points carrying their Voronoi masses.
pub fn voronoi_measure(cfg: &PointConfig1D, rho: &Density1D) -> Result<DiscreteMeasure1D> {
    let mut masses = voronoi_masses(cfg, rho);
    let total: f64 = masses.iter().sum();
    masses.iter_mut().for_each(|m| *m /= total);
    DiscreteMeasure1D::new(cfg.points.clone(), masses)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Fixed step; a step that breaks ordering or raises the energy is
    /// retried at half length.
    ExplicitEuler,
    /// As above, and the step grows by 1.2 after five consecutive accepts.
    Adaptive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowOptions {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
    /// Sampling interval; `None` records every accepted step.
    pub record_every: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSample {
    pub t: f64,
    pub points: Vec<f64>,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrajectory1D {
    pub samples: Vec<FlowSample>,
    pub scheme: Scheme,
    pub dt: f64,
    pub accepted: usize,
    pub rejected: usize,
}

impl FlowTrajectory1D {
    pub fn last(&self) -> &FlowSample {
        self.samples.last().expect("trajectory is never empty")
    }

    /// Writes rows `t,i,x_i,energy`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "i", "x_i", "energy"])?;
        for s in &self.samples {
            for (i, x) in s.points.iter().enumerate() {
                w.write_record(&[
                    s.t.to_string(),
                    (i + 1).to_string(),
                    x.to_string(),
                    s.energy.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn strictly_ordered_in_unit(points: &[f64]) -> bool {
    points.windows(2).all(|w| w[1] > w[0])
        && points.first().is_some_and(|&x| x >= 0.0)
        && points.last().is_some_and(|&x| x <= 1.0)
}

/// Integrates `x' = -grad F_{N,r}(x)`.
pub fn evolve(cfg: &PointConfig1D, rho: &Density1D, opts: &FlowOptions) -> Result<FlowTrajectory1D> {
    if !(opts.dt > 0.0) || !(opts.t_end >= 0.0) {
        return Err(Error::InvalidConfig("dt must be positive and t_end nonnegative".into()));
    }
    if let Some(i) = cfg.points.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::CoincidentPoints { index: i });
    }
    let r = cfg.r;
    let mut current = cfg.clone();
    let mut e = energy(&current, rho);
    let mut t = 0.0;
    let mut samples = vec![FlowSample {
        t,
        points: current.points.clone(),
        energy: e,
    }];
    let mut dt = opts.dt;
    let mut streak = 0usize;
    let (mut accepted, mut rejected) = (0usize, 0usize);
    let mut next_record = opts.record_every.map(|h| h.min(opts.t_end));
    let mut trial = vec![0.0; cfg.len()];

    while t < opts.t_end {
        let grad = gradient_unchecked(&current, rho);
        let mut h = dt.min(opts.t_end - t);
        if let Some(nr) = next_record {
            h = h.min(nr - t);
        }
        loop {
            for ((y, x), g) in trial.iter_mut().zip(&current.points).zip(&grad) {
                *y = x - h * g;
            }
            if strictly_ordered_in_unit(&trial) {
                let cand = PointConfig1D {
                    points: trial.clone(),
                    r,
                };
                let e_new = energy(&cand, rho);
                if e_new <= e + 4.0 * f64::EPSILON * e.abs() {
                    current = cand;
                    e = e_new;
                    break;
                }
            }
            rejected += 1;
            streak = 0;
            h *= 0.5;
            if opts.scheme == Scheme::Adaptive {
                dt = h;
            }
            if h < MIN_STEP {
                return Err(Error::StepUnderflow {
                    index: current.min_gap_index(),
                    t,
                });
            }
        }
        accepted += 1;
        let reached_record = next_record.is_some_and(|nr| t + h >= nr);
        t = match next_record {
            Some(nr) if reached_record => nr,
            _ => t + h,
        };
        if opts.t_end - t < 1e-12 * opts.t_end.max(1.0) {
            t = opts.t_end;
        }
        if opts.scheme == Scheme::Adaptive {
            streak += 1;
            if streak >= 5 {
                dt *= 1.2;
                streak = 0;
            }
        }
        let record = match (opts.record_every, next_record) {
            (None, _) => true,
            (Some(step), Some(nr)) if reached_record || t >= opts.t_end => {
                next_record = Some((nr + step).min(opts.t_end));
                true
            }
            _ => t >= opts.t_end,
        };
        if record {
            samples.push(FlowSample {
                t,
                points: current.points.clone(),
                energy: e,
            });
        }
    }
    Ok(FlowTrajectory1D {
        samples,
        scheme: opts.scheme,
        dt: opts.dt,
        accepted,
        rejected,
    })
}

/// Tridiagonal Hessian of `F_{N,r}` for `r >= 2`: the diagonal and the
/// coupling `d^2 F / dx_i dx_{i+1}`.
pub fn hessian_tridiagonal(cfg: &PointConfig1D, rho: &Density1D) -> Result<(Vec<f64>, Vec<f64>)> {
    let r = cfg.r;
    if r < 2.0 {
        return Err(Error::InvalidConfig(format!(
            "the tridiagonal Hessian needs r >= 2, got {r}"
        )));
    }
    if let Some(i) = cfg.points.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::CoincidentPoints { index: i });
    }
    let b = cfg.cell_boundaries();
    let n = cfg.len();
    // coupling through the shared boundary b_i, i = 0..n-1
    let off: Vec<f64> = (0..n.saturating_sub(1))
        .map(|i| {
            let half_gap = 0.5 * (cfg.points[i + 1] - cfg.points[i]);
            -0.5 * r * pow_r(half_gap, r - 1.0) * rho.value(b[i + 1])
        })
        .collect();
    let diag = (0..n)
        .map(|i| {
            let x = cfg.points[i];
            let g = |y: f64| pow_r((x - y).abs(), r - 2.0) * rho.value(y);
            let bulk = r
                * (r - 1.0)
                * (gauss_legendre(g, b[i], x, HALF_CELL_PANELS) + gauss_legendre(g, x, b[i + 1], HALF_CELL_PANELS));
            let left = if i > 0 { off[i - 1] } else { 0.0 };
            let right = if i + 1 < n { off[i] } else { 0.0 };
            bulk + left + right
        })
        .collect();
    Ok((diag, off))
}

fn solve_tridiagonal(diag: &[f64], off: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    if denom == 0.0 {
        return None;
    }
    c[0] = if n > 1 { off[0] / denom } else { 0.0 };
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - off[i - 1] * c[i - 1];
        if denom == 0.0 || !denom.is_finite() {
            return None;
        }
        c[i] = if i + 1 < n { off[i] / denom } else { 0.0 };
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Some(d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizerOptions {
    /// Stop once `N max_i |dF/dx_i|` falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for MinimizerOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-13,
            max_iterations: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimizer {
    pub config: PointConfig1D,
    pub energy: f64,
    /// `N max_i |dF/dx_i|` at the returned configuration.
    pub gradient_norm: f64,
    pub iterations: usize,
}

/// Rest point of the gradient flow started at `cfg`, located by damped
/// Newton steps on the tridiagonal Hessian. A step is accepted when it keeps
/// the points ordered and does not raise the energy; otherwise it is halved.
/// Where the Hessian is not positive the step falls back to the gradient.
pub fn minimize_energy(cfg: &PointConfig1D, rho: &Density1D, opts: &MinimizerOptions) -> Result<Minimizer> {
    let n = cfg.len() as f64;
    let mut current = cfg.clone();
    let mut e = energy(&current, rho);
    let mut iterations = 0;
    loop {
        let grad = gradient(&current, rho)?;
        let norm = n * grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if norm < opts.tolerance || iterations >= opts.max_iterations {
            return Ok(Minimizer {
                config: current,
                energy: e,
                gradient_norm: norm,
                iterations,
            });
        }
        iterations += 1;
        let (diag, off) = hessian_tridiagonal(&current, rho)?;
        let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
        let newton = solve_tridiagonal(&diag, &off, &neg)
            .filter(|d| d.iter().zip(&grad).map(|(a, b)| a * b).sum::<f64>() < 0.0);
        let (direction, mut step) = match newton {
            Some(d) => (d, 1.0),
            None => (neg, cfg.len() as f64),
        };
        let mut moved = false;
        while step * direction.iter().fold(0.0f64, |m, d| m.max(d.abs())) > 1e-17 {
            let trial: Vec<f64> = current
                .points
                .iter()
                .zip(&direction)
                .map(|(x, d)| x + step * d)
                .collect();
            if strictly_ordered_in_unit(&trial) {
                let cand = PointConfig1D {
                    points: trial,
                    r: current.r,
                };
                let e_new = energy(&cand, rho);
                if e_new <= e + 4.0 * f64::EPSILON * e.abs() {
                    current = cand;
                    e = e_new;
                    moved = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !moved {
            // no representable descent left
            return Ok(Minimizer {
                config: current,
                energy: e,
                gradient_norm: norm,
                iterations,
            });
        }
    }
}

/// Extreme normalized gaps `N (x_{i+1} - x_i)` over the whole trajectory.
pub fn monotonicity_gaps(traj: &FlowTrajectory1D) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for s in &traj.samples {
        let n = s.points.len() as f64;
        for w in s.points.windows(2) {
            let g = n * (w[1] - w[0]);
            lo = lo.min(g);
            hi = hi.max(g);
        }
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn equal_cells_for_midpoints() {
        let cfg = PointConfig1D::equispaced(7, 2.0).unwrap();
        for m in voronoi_masses(&cfg, &Density1D::uniform()) {
            assert!(close(m, 1.0 / 7.0, 1e-15));
        }
    }

    #[test]
    fn masses_two_points() {
        let cfg = PointConfig1D::new(vec![0.25, 0.75], 2.0).unwrap();
        let m = voronoi_masses(&cfg, &Density1D::uniform());
        assert!(close(m[0], 0.5, 1e-15) && close(m[1], 0.5, 1e-15));
        // rho(y) = 2y, lifted by 1e-12 so it is bounded below; linear data is
        // reproduced exactly by the monotone cubic interpolant.
        let theta: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let rho = Density1D::from_grid(theta.clone(), theta.iter().map(|t| 2.0 * t + 1e-12).collect())
            .unwrap();
        let m = voronoi_masses(&cfg, &rho);
        assert!(close(m[0], 0.25, 1e-11) && close(m[1], 0.75, 1e-11), "{m:?}");
    }

    #[test]
    fn duplicate_points_split_mass_by_lower_index() {
        let cfg = PointConfig1D::new(vec![0.3, 0.3, 0.8], 2.0).unwrap();
        let m = voronoi_masses(&cfg, &Density1D::uniform());
        assert!(close(m[0], 0.3, 1e-15));
        assert!(close(m[1], 0.25, 1e-15));
        assert!(matches!(
            gradient(&cfg, &Density1D::uniform()),
            Err(Error::CoincidentPoints { index: 0 })
        ));
    }

    #[test]
    fn energy_closed_forms() {
        let u = Density1D::uniform();
        let one = PointConfig1D::new(vec![0.5], 2.0).unwrap();
        assert!(close(energy(&one, &u), 1.0 / 12.0, 1e-15));
        let two = PointConfig1D::new(vec![0.25, 0.75], 2.0).unwrap();
        assert!(close(energy(&two, &u), 1.0 / 48.0, 1e-15));
    }

    #[test]
    fn single_point_gradient() {
        // F(x) = x^2 - x + 1/3
        let cfg = PointConfig1D::new(vec![0.25], 2.0).unwrap();
        let g = gradient(&cfg, &Density1D::uniform()).unwrap();
        assert!(close(g[0], -0.5, 1e-14));
    }

    #[test]
    fn equispaced_is_critical() {
        for r in [1.5, 2.0, 3.0] {
            let cfg = PointConfig1D::equispaced(9, r).unwrap();
            let g = gradient(&cfg, &Density1D::uniform()).unwrap();
            assert!(g.iter().all(|v| v.abs() < 1e-15), "r = {r}: {g:?}");
        }
    }

    #[test]
    fn perturbed_init_is_ordered_and_seeded() {
        let a = PointConfig1D::perturbed(50, 2.0, 0.9, 7).unwrap();
        let b = PointConfig1D::perturbed(50, 2.0, 0.9, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.points().windows(2).all(|w| w[1] > w[0]));
        assert!(PointConfig1D::perturbed(5, 2.0, 1.5, 0).is_err());
    }

    #[test]
    fn rejects_invalid_configs() {
        assert!(PointConfig1D::new(vec![0.6, 0.2], 2.0).is_err());
        assert!(PointConfig1D::new(vec![1.2], 2.0).is_err());
        assert!(PointConfig1D::new(vec![0.5], 0.5).is_err());
        assert!(PointConfig1D::new(vec![], 2.0).is_err());
    }

    #[test]
    fn stationary_flow() {
        let cfg = PointConfig1D::equispaced(16, 2.0).unwrap();
        let opts = FlowOptions {
            scheme: Scheme::Adaptive,
            dt: 1.0,
            t_end: 50.0,
            record_every: Some(10.0),
        };
        let traj = evolve(&cfg, &Density1D::uniform(), &opts).unwrap();
        let last = traj.last();
        assert_eq!(last.t, 50.0);
        for (a, b) in last.points.iter().zip(cfg.points()) {
            assert!((a - b).abs() <= 1e-12);
        }
        assert_eq!(traj.samples.len(), 6);
        let (lo, hi) = monotonicity_gaps(&traj);
        assert!(close(lo, 1.0, 1e-12) && close(hi, 1.0, 1e-12));
    }

    #[test]
    fn hessian_matches_finite_differences() {
        let rho = Density1D::cosine(0.4).unwrap();
        for r in [2.0, 3.0] {
            let cfg = PointConfig1D::perturbed(7, r, 0.6, 12).unwrap();
            let (diag, off) = hessian_tridiagonal(&cfg, &rho).unwrap();
            let h = 1e-6;
            for i in [0, 3, 6] {
                let mut p = cfg.points().to_vec();
                p[i] += h;
                let gp = gradient(&PointConfig1D::new(p.clone(), r).unwrap(), &rho).unwrap();
                p[i] -= 2.0 * h;
                let gm = gradient(&PointConfig1D::new(p, r).unwrap(), &rho).unwrap();
                let fd = (gp[i] - gm[i]) / (2.0 * h);
                assert!((fd - diag[i]).abs() < 1e-6 * diag[i].abs(), "r={r} i={i}: {fd} vs {}", diag[i]);
                if i < 6 {
                    let fd_off = (gp[i + 1] - gm[i + 1]) / (2.0 * h);
                    assert!((fd_off - off[i]).abs() < 1e-6 * diag[i].abs());
                }
            }
        }
        let low = PointConfig1D::equispaced(4, 1.5).unwrap();
        assert!(hessian_tridiagonal(&low, &rho).is_err());
    }

    #[test]
    fn newton_agrees_with_the_flow() {
        let rho = Density1D::cosine(0.5).unwrap();
        let cfg = PointConfig1D::perturbed(6, 2.0, 0.8, 5).unwrap();
        let min = minimize_energy(&cfg, &rho, &MinimizerOptions::default()).unwrap();
        assert!(min.gradient_norm < 1e-13);
        let traj = evolve(
            &cfg,
            &rho,
            &FlowOptions {
                scheme: Scheme::Adaptive,
                dt: 1.0,
                t_end: 3000.0,
                record_every: None,
            },
        )
        .unwrap();
        for (a, b) in traj.last().points.iter().zip(min.config.points()) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn quantile_start() {
        let cfg = PointConfig1D::from_quantiles(&Density1D::uniform(), 4, 2.0).unwrap();
        assert!(close(cfg.points()[0], 0.125, 1e-12) && close(cfg.points()[3], 0.875, 1e-12));
    }

    #[test]
    fn two_points_converge_to_quarters() {
        // closed form: F(1/2 - a, 1/2 + a) has its critical point at a = 1/4
        let cfg = PointConfig1D::new(vec![0.45, 0.55], 2.0).unwrap();
        let opts = FlowOptions {
            scheme: Scheme::Adaptive,
            dt: 0.1,
            t_end: 200.0,
            record_every: Some(1.0),
        };
        let traj = evolve(&cfg, &Density1D::uniform(), &opts).unwrap();
        let x = &traj.last().points;
        assert!(close(x[0], 0.25, 1e-9) && close(x[1], 0.75, 1e-9), "{x:?}");
        assert!(traj.samples.windows(2).all(|w| w[1].energy <= w[0].energy * (1.0 + 1e-13)));
        let (_, hi) = monotonicity_gaps(&traj);
        assert!(close(hi, 1.0, 1e-8));
    }

    #[test]
    fn euler_records_every_step_when_asked() {
        let cfg = PointConfig1D::perturbed(8, 2.0, 0.5, 3).unwrap();
        let opts = FlowOptions {
            scheme: Scheme::ExplicitEuler,
            dt: 0.5,
            t_end: 5.0,
            record_every: None,
        };
        let traj = evolve(&cfg, &Density1D::uniform(), &opts).unwrap();
        assert_eq!(traj.samples.len(), traj.accepted + 1);
        assert_eq!(traj.last().t, 5.0);
    }

    #[test]
    fn csv_export_has_header_and_rows() {
        let cfg = PointConfig1D::equispaced(3, 2.0).unwrap();
        let opts = FlowOptions {
            scheme: Scheme::ExplicitEuler,
            dt: 1.0,
            t_end: 1.0,
            record_every: None,
        };
        let traj = evolve(&cfg, &Density1D::uniform(), &opts).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "t,i,x_i,energy");
        assert_eq!(lines.len(), 1 + 3 * traj.samples.len());
    }
}
