//! Level-set functionals `∫ (u - c)_± m dx` along Eulerian trajectories.

use serde::Serialize;

use crate::continuum::eulerian::{u_transform, EulerianTrajectory};
use crate::density::Density1D;

/// An increase of a level functional between consecutive samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub sample: usize,
    pub level: f64,
    pub positive_part: bool,
    pub increase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonDiagnostics {
    pub times: Vec<f64>,
    pub max_u: Vec<f64>,
    pub min_u: Vec<f64>,
    pub levels: Vec<f64>,
    /// `positive[l][s] = ∫ (u - c_l)_+ m` at sample `s`
    pub positive: Vec<Vec<f64>>,
    pub negative: Vec<Vec<f64>>,
    pub violations: Vec<Violation>,
    /// Whether `min u(0) <= u(t) <= max u(0)` held at every sample.
    pub bounds_hold: bool,
}

/// Tolerances for [`comparison_diagnostics`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticTolerances {
    /// Allowed increase of a level functional between two samples.
    pub monotone: f64,
    /// Allowed excursion of `u` outside its initial range.
    pub bounds: f64,
}

impl Default for DiagnosticTolerances {
    fn default() -> Self {
        Self {
            monotone: 1e-8,
            bounds: 1e-6,
        }
    }
}

pub fn comparison_diagnostics(
    traj: &EulerianTrajectory,
    rho: &Density1D,
    r: f64,
    levels: &[f64],
    tol: DiagnosticTolerances,
) -> ComparisonDiagnostics {
    let n_samples = traj.samples.len();
    let mut diag = ComparisonDiagnostics {
        times: Vec::with_capacity(n_samples),
        max_u: Vec::with_capacity(n_samples),
        min_u: Vec::with_capacity(n_samples),
        levels: levels.to_vec(),
        positive: vec![Vec::with_capacity(n_samples); levels.len()],
        negative: vec![Vec::with_capacity(n_samples); levels.len()],
        violations: Vec::new(),
        bounds_hold: true,
    };
    let mut m_cache: Option<Vec<f64>> = None;
    for field in &traj.samples {
        let (u, m) = match &m_cache {
            Some(m) if m.len() == field.grid_size() => (
                field.values().iter().zip(m).map(|(f, mv)| f / mv).collect::<Vec<_>>(),
                m.clone(),
            ),
            _ => {
                let (u, m) = u_transform(field, rho, r);
                m_cache = Some(m.clone());
                (u, m)
            }
        };
        let h = field.spacing();
        diag.times.push(field.t());
        diag.max_u.push(u.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        diag.min_u.push(u.iter().copied().fold(f64::INFINITY, f64::min));
        for (l, &c) in levels.iter().enumerate() {
            let mut pos = 0.0;
            let mut neg = 0.0;
            for (uv, mv) in u.iter().zip(&m) {
                pos += (uv - c).max(0.0) * mv;
                neg += (c - uv).max(0.0) * mv;
            }
            diag.positive[l].push(pos * h);
            diag.negative[l].push(neg * h);
        }
    }
    for (l, &level) in levels.iter().enumerate() {
        for (series, positive_part) in [(&diag.positive[l], true), (&diag.negative[l], false)] {
            for (s, w) in series.windows(2).enumerate() {
                if w[1] - w[0] > tol.monotone {
                    diag.violations.push(Violation {
                        sample: s + 1,
                        level,
                        positive_part,
                        increase: w[1] - w[0],
                    });
                }
            }
        }
    }
    if let (Some(&hi0), Some(&lo0)) = (diag.max_u.first(), diag.min_u.first()) {
        diag.bounds_hold = diag
            .max_u
            .iter()
            .zip(&diag.min_u)
            .all(|(&hi, &lo)| hi <= hi0 + tol.bounds && lo >= lo0 - tol.bounds);
    }
    diag
}

impl ComparisonDiagnostics {
    pub fn is_monotone(&self) -> bool {
        self.violations.is_empty()
    }

    /// Rows `t,max_u,min_u,level,positive,negative`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> crate::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "max_u", "min_u", "level", "positive", "negative"])?;
        for (s, t) in self.times.iter().enumerate() {
            for (l, c) in self.levels.iter().enumerate() {
                w.write_record(&[
                    t.to_string(),
                    self.max_u[s].to_string(),
                    self.min_u[s].to_string(),
                    c.to_string(),
                    self.positive[l][s].to_string(),
                    self.negative[l][s].to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuum::eulerian::{evolve_eulerian, stationary_state, EulerianField, EulerianOptions};
    use std::f64::consts::PI;

    #[test]
    fn stationary_series_are_constant() {
        let rho = Density1D::cosine(0.2).unwrap();
        let f0 = stationary_state(&rho, 2.0, 32).unwrap();
        let opts = EulerianOptions {
            dt: 1e-3,
            t_end: 0.01,
            record_every: None,
        };
        let traj = evolve_eulerian(&f0, &rho, 2.0, &opts).unwrap();
        let d = comparison_diagnostics(&traj, &rho, 2.0, &[0.9, 1.0, 1.1], Default::default());
        for series in d.positive.iter().chain(&d.negative) {
            assert!(series.windows(2).all(|w| (w[1] - w[0]).abs() < 1e-13));
        }
        assert!(d.is_monotone() && d.bounds_hold);
    }

    #[test]
    fn upper_level_excess_drains() {
        let rho = Density1D::uniform();
        let f0 = EulerianField::from_fn(|x| 1.0 + 0.2 * (2.0 * PI * x).cos(), 64).unwrap();
        let opts = EulerianOptions {
            dt: 1.0,
            t_end: 0.5,
            record_every: None,
        };
        let traj = evolve_eulerian(&f0, &rho, 2.0, &opts).unwrap();
        let d = comparison_diagnostics(&traj, &rho, 2.0, &[1.1], Default::default());
        assert!(d.positive[0][0] > 0.0);
        assert_eq!(*d.positive[0].last().unwrap(), 0.0);
        assert!(d.is_monotone() && d.bounds_hold);
    }

    #[test]
    fn increases_are_flagged() {
        let rho = Density1D::uniform();
        let a = EulerianField::from_fn(|_| 1.0, 4).unwrap();
        let b = EulerianField::new(vec![1.5, 0.5, 1.0, 1.0], 1.0).unwrap();
        let traj = EulerianTrajectory {
            samples: vec![a, b],
            steps: 1,
        };
        let d = comparison_diagnostics(&traj, &rho, 2.0, &[1.0], Default::default());
        assert_eq!(d.violations.len(), 2);
        assert!(!d.bounds_hold);
    }
}
