//! Probability densities on [0, 1].

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{Quadrature, DEFAULT_PANELS};

/// Tolerance on the total mass of an analytic density.
pub const MASS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Smoothness {
    C0,
    C1,
    C2,
}

/// A scalar function on the unit interval with (up to) two derivatives.
pub trait Profile {
    fn value(&self, x: f64) -> f64;
    fn d1(&self, x: f64) -> f64;
    fn d2(&self, x: f64) -> f64;
    fn smoothness(&self) -> Smoothness;
}

/// Shape-preserving piecewise cubic Hermite interpolant (Fritsch–Carlson
/// slopes). Values between nodes stay inside the range of the neighbouring
/// samples, so a positive grid stays positive.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::InvalidDensity(
                "grid needs at least two (theta, rho) samples".into(),
            ));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidDensity("grid abscissae must increase".into()));
        }
        let n = xs.len();
        let secants: Vec<f64> = (0..n - 1)
            .map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]))
            .collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = secants[0];
        slopes[n - 1] = secants[n - 2];
        for i in 1..n - 1 {
            let (a, b) = (secants[i - 1], secants[i]);
            if a * b <= 0.0 {
                slopes[i] = 0.0;
            } else {
                // weighted harmonic mean
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                let w1 = 2.0 * h1 + h0;
                let w2 = h1 + 2.0 * h0;
                slopes[i] = (w1 + w2) / (w1 / a + w2 / b);
            }
        }
        Ok(Self { xs, ys, slopes })
    }

    fn locate(&self, x: f64) -> usize {
        let n = self.xs.len();
        match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    /// Value and the first two derivatives.
    pub fn eval3(&self, x: f64) -> (f64, f64, f64) {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return (self.ys[0], 0.0, 0.0);
        }
        if x >= self.xs[n - 1] {
            return (self.ys[n - 1], 0.0, 0.0);
        }
        let i = self.locate(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1;
        let dv = (6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * m1;
        let ddv = (12.0 * t - 6.0) * y0
            + (6.0 * t - 4.0) * m0
            + (-12.0 * t + 6.0) * y1
            + (6.0 * t - 2.0) * m1;
        (v, dv / h, ddv / (h * h))
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval3(x).0
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    fn scaled(mut self, factor: f64) -> Self {
        self.ys.iter_mut().for_each(|y| *y *= factor);
        self.slopes.iter_mut().for_each(|m| *m *= factor);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DensityKind {
    Uniform,
    /// `1 + eps cos(2 pi theta)`.
    Cosine { eps: f64 },
    /// `rate e^(rate y) / (e^rate - 1)`.
    Exponential { rate: f64 },
    Grid(MonotoneCubic),
    /// `base^exponent / norm`.
    Power {
        base: Box<Density1D>,
        exponent: f64,
        norm: f64,
    },
}

/// A probability density on [0, 1] bounded away from zero and infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct Density1D {
    kind: DensityKind,
    lambda: f64,
    c2_perturbation: f64,
}

impl Density1D {
    pub fn uniform() -> Self {
        Self::from_kind(DensityKind::Uniform).expect("uniform density is valid")
    }

    pub fn cosine(eps: f64) -> Result<Self> {
        if !(eps.abs() < 1.0) {
            return Err(Error::InvalidDensity(format!(
                "cosine amplitude {eps} must satisfy |eps| < 1"
            )));
        }
        Self::from_kind(DensityKind::Cosine { eps })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if rate == 0.0 || !rate.is_finite() {
            return Err(Error::InvalidDensity(format!("exponential rate {rate}")));
        }
        Self::from_kind(DensityKind::Exponential { rate })
    }

    /// Interpolated grid density. The samples are rescaled so the
    /// interpolant has unit mass on [0, 1].
    pub fn from_grid(theta: Vec<f64>, rho: Vec<f64>) -> Result<Self> {
        if let Some(bad) = rho.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidDensity(format!(
                "grid sample {bad} is not positive"
            )));
        }
        if theta.first().copied().unwrap_or(1.0) > 0.0 || theta.last().copied().unwrap_or(0.0) < 1.0 {
            return Err(Error::InvalidDensity("grid must cover [0, 1]".into()));
        }
        let interp = MonotoneCubic::new(theta, rho)?;
        let mass = Quadrature::unit().integrate(|y| interp.eval(y))?;
        Self::from_kind(DensityKind::Grid(interp.scaled(1.0 / mass)))
    }

    /// Loads a grid density from a CSV file with header `theta,rho`.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let headers = reader.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::InvalidDensity(format!("missing column `{name}`")))
        };
        let (ti, ri) = (col("theta")?, col("rho")?);
        let mut theta = Vec::new();
        let mut rho = Vec::new();
        for record in reader.records() {
            let record = record?;
            let parse = |i: usize| -> Result<f64> {
                record
                    .get(i)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| Error::InvalidDensity(format!("bad row {record:?}")))
            };
            theta.push(parse(ti)?);
            rho.push(parse(ri)?);
        }
        Self::from_grid(theta, rho)
    }

    fn from_kind(kind: DensityKind) -> Result<Self> {
        let mut density = Self {
            kind,
            lambda: 1.0,
            c2_perturbation: 0.0,
        };
        let quad = Quadrature::unit();
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        let mut sup = [0.0f64; 3];
        for &y in quad.nodes().iter().chain([0.0, 1.0].iter()) {
            let v = density.value(y);
            if !v.is_finite() {
                return Err(Error::NonFinite { x: y });
            }
            lo = lo.min(v);
            hi = hi.max(v);
            sup[0] = sup[0].max((v - 1.0).abs());
            sup[1] = sup[1].max(density.d1(y).abs());
            sup[2] = sup[2].max(density.d2(y).abs());
        }
        if !(lo > 0.0) {
            return Err(Error::InvalidDensity(format!("minimum value {lo} is not positive")));
        }
        let mass = quad.integrate(|y| density.value(y))?;
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidDensity(format!("total mass {mass} differs from 1")));
        }
        density.lambda = lo.min(1.0 / hi);
        density.c2_perturbation = sup[0] + sup[1] + sup[2];
        Ok(density)
    }

    pub fn kind(&self) -> &DensityKind {
        &self.kind
    }

    /// Largest `lambda` with `lambda <= rho <= 1/lambda` on the quadrature nodes.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `sup|rho - 1| + sup|rho'| + sup|rho''|` sampled on the quadrature nodes.
    pub fn c2_perturbation(&self) -> f64 {
        self.c2_perturbation
    }

    /// Whether the density and its slope match at 0 and 1.
    pub fn is_periodic(&self) -> bool {
        (self.value(0.0) - self.value(1.0)).abs() < 1e-12 && (self.d1(0.0) - self.d1(1.0)).abs() < 1e-9
    }

    pub fn check_periodic(&self) -> Result<()> {
        if self.is_periodic() {
            Ok(())
        } else {
            Err(Error::NotPeriodic {
                left: self.value(0.0),
                right: self.value(1.0),
            })
        }
    }

    fn eval3(&self, x: f64) -> (f64, f64, f64) {
        match &self.kind {
            DensityKind::Uniform => (1.0, 0.0, 0.0),
            DensityKind::Cosine { eps } => {
                let w = 2.0 * PI;
                let (s, c) = (w * x).sin_cos();
                (1.0 + eps * c, -eps * w * s, -eps * w * w * c)
            }
            DensityKind::Exponential { rate } => {
                let v = rate * (rate * x).exp() / rate.exp_m1();
                (v, rate * v, rate * rate * v)
            }
            DensityKind::Grid(interp) => interp.eval3(x),
            DensityKind::Power {
                base,
                exponent,
                norm,
            } => {
                let (b, db, ddb) = base.eval3(x);
                let e = *exponent;
                let v = b.powf(e);
                let d = e * b.powf(e - 1.0) * db;
                let dd = e * ((e - 1.0) * b.powf(e - 2.0) * db * db + b.powf(e - 1.0) * ddb);
                (v / norm, d / norm, dd / norm)
            }
        }
    }
}

impl Profile for Density1D {
    fn value(&self, x: f64) -> f64 {
        self.eval3(x).0
    }

    fn d1(&self, x: f64) -> f64 {
        self.eval3(x).1
    }

    fn d2(&self, x: f64) -> f64 {
        self.eval3(x).2
    }

    fn smoothness(&self) -> Smoothness {
        match &self.kind {
            DensityKind::Grid(_) => Smoothness::C1,
            DensityKind::Power { base, .. } => base.smoothness(),
            _ => Smoothness::C2,
        }
    }
}

/// Returns `rho^(d/(d+r)) / ∫ rho^(d/(d+r))`, the limiting point density of
/// optimal `N`-point quantizers in dimension `d`.
pub fn power_normalize(rho: &Density1D, d: u32, r: f64) -> Result<Density1D> {
    if r < 1.0 {
        return Err(Error::InvalidExponent { r });
    }
    if d == 0 {
        return Err(Error::InvalidConfig("dimension must be positive".into()));
    }
    let exponent = d as f64 / (d as f64 + r);
    power_with_exponent(rho, exponent)
}

pub(crate) fn power_with_exponent(rho: &Density1D, exponent: f64) -> Result<Density1D> {
    let norm = Quadrature::gauss_legendre(0.0, 1.0, DEFAULT_PANELS)
        .integrate(|y| rho.value(y).powf(exponent))?;
    if !(norm > 0.0) {
        return Err(Error::DegenerateDensity);
    }
    if let DensityKind::Uniform = rho.kind {
        return Ok(Density1D::uniform());
    }
    Density1D::from_kind(DensityKind::Power {
        base: Box::new(rho.clone()),
        exponent,
        norm,
    })
}

/// Density description as read from experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DensitySpec {
    Uniform,
    Cosine {
        eps: f64,
    },
    Exponential {
        #[serde(default = "one")]
        rate: f64,
    },
    Grid {
        path: std::path::PathBuf,
    },
}

fn one() -> f64 {
    1.0
}

impl DensitySpec {
    pub fn build(&self) -> Result<Density1D> {
        match self {
            DensitySpec::Uniform => Ok(Density1D::uniform()),
            DensitySpec::Cosine { eps } => Density1D::cosine(*eps),
            DensitySpec::Exponential { rate } => Density1D::exponential(*rate),
            DensitySpec::Grid { path } => Density1D::from_csv(path),
        }
    }
}
