use quantflow::manifold::{moment_condition, Curvature, ModelSpace, RadialMeasure, RadialProfile, TailStatus, DEFAULT_R_MAX};

use super::{num, one_of, positive};
use crate::config::Config;
use crate::error::CliError;
use crate::report::Outputs;

pub fn run(cfg: &Config, out: &mut Outputs) -> Result<(), CliError> {
    let curvature = match one_of("curvature", cfg.string("curvature", "hyperbolic")?, &["hyperbolic", "euclidean"])?.as_str() {
        "euclidean" => Curvature::Euclidean,
        _ => Curvature::Hyperbolic,
    };
    let d = cfg.usize("d", 2)? as u32;
    let r = cfg.f64("r", 2.0)?;
    let delta = cfg.f64("delta", 1.0)?;
    let profile = match one_of("profile", cfg.string("profile", "exponential")?, &["exponential", "gaussian", "power"])?.as_str() {
        "gaussian" => RadialProfile::Gaussian {
            sigma: positive("sigma", cfg.f64("sigma", 1.0)?)?,
        },
        "power" => RadialProfile::Power {
            exponent: cfg.f64("exponent", 6.0)?,
        },
        _ => RadialProfile::Exponential {
            rate: positive("rate", cfg.f64("rate", 2.0)?)?,
        },
    };
    let r_max = positive("r_max", cfg.f64("r_max", DEFAULT_R_MAX)?)?;
    let moments = cfg.f64_list("moments", &[1.0, 2.0, 4.0, 8.0])?;
    let expect = cfg.string("expect", "")?;
    let space = ModelSpace::new(curvature, d)?;
    let mu = RadialMeasure::new(space, profile, r_max)?;
    cfg.finish("manifold-moment")?;

    let verdict = moment_condition(&mu, r, delta)?;
    let status = |s: TailStatus| format!("{s:?}").to_lowercase();
    let mut rows = Vec::new();
    let mut all_finite = true;
    for &p in &moments {
        let t = mu.polynomial_moment(p);
        all_finite &= t.status == TailStatus::Finite;
        rows.push(vec![num(p), num(t.value), num(t.growth_rate), num(t.power_exponent), status(t.status)]);
    }
    out.csv("moments.csv", &["p", "value", "growth_rate", "power_exponent", "status"], rows)?;
    out.json("verdict.json", &verdict)?;
    out.metric("verdict", verdict.verdict.clone());
    out.metric("moment_value", verdict.moment_value);
    out.metric("A_term_value", verdict.a_term_value);
    out.metric("polynomial_moments_finite", all_finite);
    if !expect.is_empty() {
        let ok = verdict.verdict == expect;
        out.check("verdict_matches", if ok { 1.0 } else { 0.0 }, format!("verdict == {expect}"), ok);
    }
    Ok(())
}
