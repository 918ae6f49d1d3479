//! One module per subcommand. Each reads and validates all of its
//! parameters into a plain struct before any computation starts.

use quantflow::density::Density1D;

use crate::config::Config;
use crate::error::CliError;
use crate::report::Outputs;

pub mod calibrate2d;
pub mod closeness;
pub mod hessian_cx;
pub mod lattice2d;
pub mod manifold_moment;
pub mod pde1d;
pub mod quantize1d;

pub const NAMES: [&str; 7] = [
    "quantize1d",
    "pde1d",
    "closeness",
    "hessian-cx",
    "lattice2d",
    "calibrate2d",
    "manifold-moment",
];

pub fn dispatch(name: &str, cfg: &Config, seed: u64, out: &mut Outputs) -> Result<(), CliError> {
    match name {
        "quantize1d" => quantize1d::run(cfg, seed, out),
        "pde1d" => pde1d::run(cfg, out),
        "closeness" => closeness::run(cfg, out),
        "hessian-cx" => hessian_cx::run(cfg, out),
        "lattice2d" => lattice2d::run(cfg, seed, out),
        "calibrate2d" => calibrate2d::run(cfg, out),
        "manifold-moment" => manifold_moment::run(cfg, out),
        other => Err(CliError::Input(format!(
            "unknown experiment `{other}`; expected one of {}",
            NAMES.join(", ")
        ))),
    }
}

/// `density = "uniform" | "cosine" | "exponential" | "grid"` with `eps`,
/// `rate` or `density_path` as needed.
pub(crate) fn density(cfg: &Config, default: &str, default_eps: f64) -> Result<Density1D, CliError> {
    let kind = cfg.string("density", default)?;
    let rho = match kind.as_str() {
        "uniform" => Density1D::uniform(),
        "cosine" => Density1D::cosine(cfg.f64("eps", default_eps)?)?,
        "exponential" => Density1D::exponential(cfg.f64("rate", 1.0)?)?,
        "grid" => {
            let path = cfg.string("density_path", "")?;
            if path.is_empty() {
                return Err(CliError::Input("density = \"grid\" needs density_path".into()));
            }
            Density1D::from_csv(path)?
        }
        other => {
            return Err(CliError::Input(format!(
                "unknown density `{other}`; expected uniform, cosine, exponential or grid"
            )))
        }
    };
    Ok(rho)
}

pub(crate) fn positive(key: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::Input(format!("`{key}` must be positive, got {v}")))
    }
}

pub(crate) fn one_of(key: &str, v: String, allowed: &[&str]) -> Result<String, CliError> {
    if allowed.contains(&v.as_str()) {
        Ok(v)
    } else {
        Err(CliError::Input(format!("`{key}` must be one of {}, got `{v}`", allowed.join(", "))))
    }
}

pub(crate) fn num(v: f64) -> String {
    v.to_string()
}
