use quantflow::lattice::scaling_calibration;

use super::num;
use crate::config::Config;
use crate::error::CliError;
use crate::report::Outputs;

pub fn run(cfg: &Config, out: &mut Outputs) -> Result<(), CliError> {
    let ns = cfg.usize_list("n", &[6, 8, 12, 16, 24])?;
    let grid = cfg.usize("grid_resolution", 512)?;
    let tolerance = cfg.f64("exponent_tolerance", 0.05)?;
    cfg.finish("calibrate2d")?;

    let report = scaling_calibration(&ns, (grid > 0).then_some(grid))?;
    let opt = |v: Option<f64>| v.map_or_else(String::new, num);
    let rows = report.rows.iter().map(|r| {
        vec![
            r.n.to_string(),
            r.points.to_string(),
            num(r.energy),
            opt(r.grid_energy),
            num(r.ratio_n2),
            num(r.ratio_n4),
            opt(r.grid_ratio_n2),
            num(r.ratio_trace_n2),
        ]
    });
    out.csv(
        "calibration.csv",
        &["n", "points", "energy", "grid_energy", "ratio_n2", "ratio_n4", "grid_ratio_n2", "ratio_trace_n2"],
        rows,
    )?;
    out.metric("fitted_exponent", report.fitted_exponent);
    out.metric("r_squared", report.r_squared);
    out.metric("predicted_n2_constant", report.predicted_n2_constant);
    out.metric("f_phi_identity", report.f_phi_identity);
    out.metric("f_trace_identity", report.f_trace_identity);
    out.metric("continuum_identity_energy", report.continuum_identity_energy);
    out.note(report.conclusion.clone());
    out.within("fitted_exponent", report.fitted_exponent, -2.0, tolerance);
    out.json("calibration.json", &report)?;
    Ok(())
}
