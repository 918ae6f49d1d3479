use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("integrand is not finite at node x = {x}")]
    NonFinite { x: f64 },

    #[error("density has zero total mass after transformation")]
    DegenerateDensity,

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("exponent r = {r} must be at least 1")]
    InvalidExponent { r: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("points {index} and {} coincide, gradient undefined", index + 1)]
    CoincidentPoints { index: usize },

    #[error("step size underflow at t = {t} (stiff near index {index})")]
    StepUnderflow { index: usize, t: f64 },

    #[error("map is degenerate: slope {slope:e} at cell {index}")]
    Degeneracy { index: usize, slope: f64 },

    #[error("map is not monotone at index {index}")]
    NonMonotone { index: usize },

    #[error("density touched zero at cell {index} (value {value:e})")]
    BlowDown { index: usize, value: f64 },

    #[error("density is not periodic: rho(0) = {left}, rho(1) = {right}")]
    NotPeriodic { left: f64, right: f64 },

    #[error("weight lacks two derivatives; mollify it first")]
    MissingDerivative,

    #[error("matrix is singular or orientation-reversing: det = {det}")]
    Singular { det: f64 },

    #[error("energy density undefined: negative radicand {radicand} for direction {direction}")]
    Domain { direction: usize, radicand: f64 },

    #[error("energy density undefined at cell {index}: {reason}")]
    CellDomain { index: usize, reason: String },

    #[error("gradient left the admissible window at cell {index}: |grad X - Id| = {distance}")]
    LeftWindow { index: usize, distance: f64 },

    #[error("configuration is empty")]
    EmptyConfig,

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
