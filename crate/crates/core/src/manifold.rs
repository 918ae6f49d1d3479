//! Moment conditions for radially symmetric probability measures on the
//! Euclidean and hyperbolic space forms.
//!
//! The measure is `mu = h(R) J(R) dR / Z` in geodesic polar coordinates
//! around the base point, where `J(R) = R^(d-1)` (flat) or
//! `sinh(R)^(d-1)` (hyperbolic). The condition evaluated is
//! `∫ R^(r+delta) dmu + ∫ A(R)^r dmu < ∞` with `A(R) = R` or `sinh R`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::quadrature::gauss_legendre;

/// Truncation radius of every radial integral.
pub const DEFAULT_R_MAX: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Curvature {
    Euclidean,
    Hyperbolic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ModelSpace {
    pub curvature: Curvature,
    pub dim: u32,
}

impl ModelSpace {
    pub fn new(curvature: Curvature, dim: u32) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidConfig(format!("dimension {dim} must be at least 2")));
        }
        Ok(Self { curvature, dim })
    }

    pub fn name(&self) -> &'static str {
        match self.curvature {
            Curvature::Euclidean => "euclidean",
            Curvature::Hyperbolic => "hyperbolic",
        }
    }

    /// `log J(R)` for the polar volume element, `R > 0`.
    fn log_volume(&self, radius: f64) -> f64 {
        (self.dim - 1) as f64 * log_a(self.curvature, radius)
    }
}

fn log_a(curvature: Curvature, radius: f64) -> f64 {
    match curvature {
        Curvature::Euclidean => radius.ln(),
        // log sinh R without overflow
        Curvature::Hyperbolic => radius + (0.5 * (1.0 - (-2.0 * radius).exp())).ln(),
    }
}

/// Size of the differential of the exponential map at distance `radius`:
/// `R` on flat space, `sinh R` on hyperbolic space.
pub fn a_model(space: &ModelSpace, radius: f64) -> f64 {
    match space.curvature {
        Curvature::Euclidean => radius,
        Curvature::Hyperbolic => radius.sinh(),
    }
}

/// Radial density profiles `h(R)` against the polar volume element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "lowercase")]
pub enum RadialProfile {
    /// `exp(-R^2 / (2 sigma^2))`
    Gaussian { sigma: f64 },
    /// `exp(-rate R)`
    Exponential { rate: f64 },
    /// `(1 + R)^(-exponent)`
    Power { exponent: f64 },
}

impl RadialProfile {
    fn log_value(&self, radius: f64) -> f64 {
        match *self {
            RadialProfile::Gaussian { sigma } => -radius * radius / (2.0 * sigma * sigma),
            RadialProfile::Exponential { rate } => -rate * radius,
            RadialProfile::Power { exponent } => -exponent * (1.0 + radius).ln(),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            RadialProfile::Gaussian { sigma } => sigma > 0.0 && sigma.is_finite(),
            RadialProfile::Exponential { rate } => rate.is_finite(),
            RadialProfile::Power { exponent } => exponent.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid radial profile {self:?}")))
        }
    }
}

/// How the tail of a radial integrand behaves on `[R_max / 2, R_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TailStatus {
    Finite,
    Divergent,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TermResult {
    /// Integral truncated at `R_max`.
    pub value: f64,
    /// Slope of `log(integrand)` against `R` on the tail window.
    pub growth_rate: f64,
    /// Slope of `log(integrand)` against `log R` on the tail window.
    pub power_exponent: f64,
    pub status: TailStatus,
}

/// A radial probability measure on a model space, normalized on `[0, R_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialMeasure {
    space: ModelSpace,
    profile: RadialProfile,
    r_max: f64,
    log_norm: f64,
}

const PANELS_PER_UNIT: f64 = 4.0;
const TAIL_SAMPLES: usize = 61;
/// Exponential rates below this are treated as zero and the tail is
/// classified by its power law instead.
const RATE_THRESHOLD: f64 = 0.1;

impl RadialMeasure {
    pub fn new(space: ModelSpace, profile: RadialProfile, r_max: f64) -> Result<Self> {
        profile.validate()?;
        if !(r_max > 2.0) || !r_max.is_finite() {
            return Err(Error::InvalidConfig(format!("truncation radius {r_max} must exceed 2")));
        }
        let mut measure = Self {
            space,
            profile,
            r_max,
            log_norm: 0.0,
        };
        let mass = measure.term(|_| 0.0);
        if mass.status != TailStatus::Finite {
            return Err(Error::InvalidDensity(format!(
                "profile {profile:?} has no finite mass on {} space of dimension {} (tail {:?})",
                space.name(),
                space.dim,
                mass.status
            )));
        }
        if !(mass.value > 0.0) || !mass.value.is_finite() {
            return Err(Error::DegenerateDensity);
        }
        measure.log_norm = mass.value.ln();
        Ok(measure)
    }

    pub fn space(&self) -> &ModelSpace {
        &self.space
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    fn log_density(&self, radius: f64) -> f64 {
        self.profile.log_value(radius) + self.space.log_volume(radius) - self.log_norm
    }

    /// `∫_0^{R_max} exp(log_f(R)) dmu(R)` and the tail classification of the
    /// integrand.
    fn term(&self, log_f: impl Fn(f64) -> f64) -> TermResult {
        let log_g = |radius: f64| {
            if radius <= 0.0 {
                f64::NEG_INFINITY
            } else {
                log_f(radius) + self.log_density(radius)
            }
        };
        let panels = (self.r_max * PANELS_PER_UNIT).ceil() as usize;
        let value = gauss_legendre(|radius| log_g(radius).exp(), 0.0, self.r_max, panels);

        let lo = self.r_max / 2.0;
        let xs: Vec<f64> = (0..TAIL_SAMPLES)
            .map(|k| lo + (self.r_max - lo) * k as f64 / (TAIL_SAMPLES - 1) as f64)
            .collect();
        let ys: Vec<f64> = xs.iter().map(|&radius| log_g(radius)).collect();
        let growth_rate = linear_fit(&xs, &ys).slope;
        let log_xs: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
        let power_exponent = linear_fit(&log_xs, &ys).slope;
        let steps: Vec<f64> = ys.windows(2).map(|w| w[1] - w[0]).collect();
        let monotone = steps.iter().all(|s| *s <= 0.0) || steps.iter().all(|s| *s >= 0.0);
        let status = if !monotone || ys.iter().any(|y| !y.is_finite()) {
            TailStatus::Inconclusive
        } else if growth_rate < -RATE_THRESHOLD || (growth_rate <= RATE_THRESHOLD && power_exponent < -1.05) {
            TailStatus::Finite
        } else if growth_rate > RATE_THRESHOLD || power_exponent > -0.95 {
            TailStatus::Divergent
        } else {
            TailStatus::Inconclusive
        };
        TermResult {
            value,
            growth_rate,
            power_exponent,
            status,
        }
    }

    /// `∫ R^p dmu`
    pub fn polynomial_moment(&self, p: f64) -> TermResult {
        self.term(|radius| p * radius.ln())
    }

    /// `∫ A(R)^r dmu`
    pub fn a_term(&self, r: f64) -> TermResult {
        let curvature = self.space.curvature;
        self.term(|radius| r * log_a(curvature, radius))
    }
}

/// Record of one evaluation of the moment condition.
#[derive(Debug, Clone, Serialize)]
pub struct MomentVerdict {
    pub space: String,
    pub d: u32,
    pub r: f64,
    pub delta: f64,
    pub profile: RadialProfile,
    pub moment_value: f64,
    #[serde(rename = "A_term_value")]
    pub a_term_value: f64,
    pub moment: TermResult,
    pub a_term: TermResult,
    pub verdict: String,
}

/// Evaluates `∫ R^(r+delta) dmu + ∫ A(R)^r dmu` and classifies both terms.
pub fn moment_condition(mu: &RadialMeasure, r: f64, delta: f64) -> Result<MomentVerdict> {
    if !(r >= 1.0) {
        return Err(Error::InvalidExponent { r });
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidConfig(format!("delta = {delta} must be positive")));
    }
    let moment = mu.polynomial_moment(r + delta);
    let a_term = mu.a_term(r);
    use TailStatus::*;
    let verdict = match (moment.status, a_term.status) {
        (Inconclusive, _) | (_, Inconclusive) => "inconclusive",
        (Finite, Finite) => "finite",
        (Finite, Divergent) => "divergent (A-term)",
        (Divergent, Finite) => "divergent (moment)",
        (Divergent, Divergent) => "divergent (both)",
    };
    Ok(MomentVerdict {
        space: mu.space.name().to_string(),
        d: mu.space.dim,
        r,
        delta,
        profile: mu.profile,
        moment_value: moment.value,
        a_term_value: a_term.value,
        moment,
        a_term,
        verdict: verdict.to_string(),
    })
}
