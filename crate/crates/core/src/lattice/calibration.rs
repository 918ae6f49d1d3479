//! How the discrete hexagonal energy scales with `n` on the fixed domain,
//! compared against the continuum energy of the identity and against the
//! trace form.

use serde::Serialize;

use super::deformation::CELL_AREA;
use super::forms::{f_phi, f_trace};
use super::mat2::Mat2;
use super::points::{discrete_energy_2d, grid_voronoi, hex_points, hexagon_second_moment};
use crate::error::{Error, Result};
use crate::fit::log_log_fit;

#[derive(Debug, Clone, Serialize)]
pub struct CalibrationRow {
    pub n: usize,
    pub points: usize,
    /// Exact polygon value of `F_{N,2}(hex(n))`.
    pub energy: f64,
    /// Nearest-point grid quadrature of the same quantity.
    pub grid_energy: Option<f64>,
    /// `energy / (E[id] / n^2)`
    pub ratio_n2: f64,
    /// `energy / (E[id] / n^4)`
    pub ratio_n4: f64,
    /// `grid_energy / (E[id] / n^2)`
    pub grid_ratio_n2: Option<f64>,
    /// `energy / (∫_Pi F_trace(Id) / n^2)`
    pub ratio_trace_n2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CalibrationReport {
    pub rows: Vec<CalibrationRow>,
    pub fitted_exponent: f64,
    pub r_squared: f64,
    /// `E[id] = |Pi| F(Id)`
    pub continuum_identity_energy: f64,
    /// `∫_Pi F_trace(Id)`
    pub trace_identity_energy: f64,
    pub f_phi_identity: f64,
    pub f_trace_identity: f64,
    /// `(c, F_trace(c Id))`
    pub trace_scaling_probe: Vec<(f64, f64)>,
    /// `(c, F_phi(c Id))`
    pub phi_scaling_probe: Vec<(f64, f64)>,
    /// `n^2 F_{N,2}(hex(n))` predicted by the hexagon second moment.
    pub predicted_n2_constant: f64,
    pub conclusion: String,
}

/// Evaluates `F_{N,2}(hex(n))` for every `n` and fits the exponent.
/// `grid_resolution` adds the independent grid quadrature column.
pub fn scaling_calibration(ns: &[usize], grid_resolution: Option<usize>) -> Result<CalibrationReport> {
    if ns.len() < 3 {
        return Err(Error::InvalidConfig("calibration needs at least three values of n".into()));
    }
    let f_id = f_phi(&Mat2::IDENTITY)?;
    let ft_id = f_trace(&Mat2::IDENTITY)?;
    let e_id = CELL_AREA * f_id;
    let et_id = CELL_AREA * ft_id;
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let cfg = hex_points(n)?;
        let energy = discrete_energy_2d(&cfg)?;
        let grid_energy = grid_resolution
            .map(|res| grid_voronoi(&cfg, res).map(|g| g.energy))
            .transpose()?;
        let n2 = (n * n) as f64;
        rows.push(CalibrationRow {
            n,
            points: cfg.len(),
            energy,
            grid_energy,
            ratio_n2: energy / (e_id / n2),
            ratio_n4: energy / (e_id / (n2 * n2)),
            grid_ratio_n2: grid_energy.map(|g| g / (e_id / n2)),
            ratio_trace_n2: energy / (et_id / n2),
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.energy).collect();
    let fit = log_log_fit(&xs, &ys);
    let predicted = hexagon_second_moment(1.0);
    let conclusion = format!(
        "On the fixed domain Pi the discrete energy of hex(n) scales as n^{:.3} \
         (exact value {:.6}/n^2, the hexagon second moment times n^2 cells at spacing 1/n). \
         The claimed scaling F_N,2 ~ (1/n^4) E[X] does not hold: the ratio to E[id]/n^4 grows like n^2 \
         (from {:.4e} to {:.4e} over the tested n), while the ratio to E[id]/n^2 is the constant {:.6} = 1/(8 sqrt 3). \
         The trace form gives F_trace(Id) = {:.6}, which differs from F_phi(Id) = {:.6} in sign and size, \
         so no normalization of the trace form reproduces the discrete values.",
        fit.slope,
        predicted,
        rows.first().map_or(f64::NAN, |r| r.ratio_n4),
        rows.last().map_or(f64::NAN, |r| r.ratio_n4),
        predicted / e_id,
        ft_id,
        f_id,
    );
    let probe = |f: fn(&Mat2) -> Result<f64>| -> Result<Vec<(f64, f64)>> {
        [0.9, 1.1]
            .iter()
            .map(|&c| Ok((c, f(&Mat2::IDENTITY.scaled(c))?)))
            .collect()
    };
    Ok(CalibrationReport {
        rows,
        fitted_exponent: fit.slope,
        r_squared: fit.r_squared,
        continuum_identity_energy: e_id,
        trace_identity_energy: et_id,
        f_phi_identity: f_id,
        f_trace_identity: ft_id,
        trace_scaling_probe: probe(f_trace)?,
        phi_scaling_probe: probe(f_phi)?,
        predicted_n2_constant: predicted,
        conclusion,
    })
}
