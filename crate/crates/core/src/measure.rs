//! Distribution functions and one-dimensional Wasserstein distances.

use crate::density::{Density1D, Profile};
use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, DEFAULT_PANELS};

/// Bisection tolerance for inverting a continuous distribution function.
pub const QUANTILE_TOL: f64 = 1e-12;

/// Finitely supported probability measure on [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure1D {
    atoms: Vec<f64>,
    masses: Vec<f64>,
}

impl DiscreteMeasure1D {
    pub fn new(atoms: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptyConfig);
        }
        if atoms.len() != masses.len() {
            return Err(Error::InvalidConfig(format!(
                "{} atoms but {} masses",
                atoms.len(),
                masses.len()
            )));
        }
        if atoms.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidConfig("atoms must be sorted".into()));
        }
        if atoms.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::InvalidConfig("atoms must lie in [0, 1]".into()));
        }
        if masses.iter().any(|m| !(*m >= 0.0)) {
            return Err(Error::InvalidConfig("masses must be nonnegative".into()));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!("masses sum to {total}, not 1")));
        }
        Ok(Self { atoms, masses })
    }

    /// Equal masses `1/N` on the given sorted atoms.
    pub fn uniform(atoms: Vec<f64>) -> Result<Self> {
        let n = atoms.len().max(1);
        Self::new(atoms, vec![1.0 / n as f64; n])
    }

    pub fn dirac(at: f64) -> Result<Self> {
        Self::new(vec![at], vec![1.0])
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    fn cumulative(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.masses
            .iter()
            .map(|m| {
                acc += m;
                acc
            })
            .collect()
    }
}

/// Borrowed view of either kind of measure.
#[derive(Debug, Clone, Copy)]
pub enum MeasureRef<'a> {
    Density(&'a Density1D),
    Discrete(&'a DiscreteMeasure1D),
}

impl<'a> From<&'a Density1D> for MeasureRef<'a> {
    fn from(d: &'a Density1D) -> Self {
        MeasureRef::Density(d)
    }
}

impl<'a> From<&'a DiscreteMeasure1D> for MeasureRef<'a> {
    fn from(d: &'a DiscreteMeasure1D) -> Self {
        MeasureRef::Discrete(d)
    }
}

/// CDF and generalized inverse of a measure on [0, 1].
#[derive(Debug, Clone)]
pub enum Distribution1D<'a> {
    Continuous {
        density: &'a Density1D,
        /// cumulative mass at panel edges `k / panels`
        table: Vec<f64>,
    },
    Discrete {
        measure: &'a DiscreteMeasure1D,
        cumulative: Vec<f64>,
    },
}

/// Builds the (right-continuous CDF, quantile) pair for a measure.
pub fn cdf_and_quantile<'a>(mu: impl Into<MeasureRef<'a>>) -> Distribution1D<'a> {
    match mu.into() {
        MeasureRef::Density(density) => {
            let h = 1.0 / DEFAULT_PANELS as f64;
            let mut table = Vec::with_capacity(DEFAULT_PANELS + 1);
            let mut acc = 0.0;
            table.push(0.0);
            for p in 0..DEFAULT_PANELS {
                let a = p as f64 * h;
                acc += gauss_legendre(|y| density.value(y), a, a + h, 1);
                table.push(acc);
            }
            Distribution1D::Continuous { density, table }
        }
        MeasureRef::Discrete(measure) => Distribution1D::Discrete {
            measure,
            cumulative: measure.cumulative(),
        },
    }
}

impl Distribution1D<'_> {
    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match self {
            Distribution1D::Continuous { density, table } => {
                if x >= 1.0 {
                    return table[DEFAULT_PANELS];
                }
                let h = 1.0 / DEFAULT_PANELS as f64;
                let p = ((x / h) as usize).min(DEFAULT_PANELS - 1);
                let a = p as f64 * h;
                table[p] + gauss_legendre(|y| density.value(y), a, x, 1)
            }
            Distribution1D::Discrete {
                measure,
                cumulative,
            } => {
                // number of atoms <= x
                let k = measure.atoms.partition_point(|&a| a <= x);
                if k == 0 {
                    0.0
                } else {
                    cumulative[k - 1]
                }
            }
        }
    }

    /// `inf { x : cdf(x) >= s }`.
    pub fn quantile(&self, s: f64) -> f64 {
        match self {
            Distribution1D::Continuous { table, .. } => {
                if s <= 0.0 {
                    return 0.0;
                }
                if s >= table[DEFAULT_PANELS] {
                    return 1.0;
                }
                let h = 1.0 / DEFAULT_PANELS as f64;
                let p = table.partition_point(|&c| c < s).saturating_sub(1);
                let (mut lo, mut hi) = (p as f64 * h, ((p + 1) as f64 * h).min(1.0));
                while hi - lo > QUANTILE_TOL {
                    let mid = 0.5 * (lo + hi);
                    if self.cdf(mid) < s {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
            Distribution1D::Discrete {
                measure,
                cumulative,
            } => {
                let k = cumulative.partition_point(|&c| c < s);
                measure.atoms[k.min(measure.atoms.len() - 1)]
            }
        }
    }

    /// Levels in (0, 1) where the quantile function may jump.
    fn breaks(&self) -> Vec<f64> {
        match self {
            Distribution1D::Continuous { .. } => Vec::new(),
            Distribution1D::Discrete { cumulative, .. } => cumulative
                .iter()
                .copied()
                .filter(|&c| c > 0.0 && c < 1.0)
                .collect(),
        }
    }

    /// Levels where `|atom - Q_other|` has a kink.
    fn kinks_against(&self, other: &Distribution1D<'_>) -> Vec<f64> {
        match (self, other) {
            (Distribution1D::Discrete { measure, .. }, Distribution1D::Continuous { .. }) => {
                measure.atoms.iter().map(|&a| other.cdf(a)).collect()
            }
            _ => Vec::new(),
        }
    }

    fn is_continuous(&self) -> bool {
        matches!(self, Distribution1D::Continuous { .. })
    }
}

/// `W_r(mu, nu) = (∫_0^1 |Q_mu(s) - Q_nu(s)|^r ds)^(1/r)`.
pub fn wasserstein_1d<'a, 'b>(
    mu: impl Into<MeasureRef<'a>>,
    nu: impl Into<MeasureRef<'b>>,
    r: f64,
) -> Result<f64> {
    Ok(wasserstein_1d_pow(mu, nu, r)?.powf(1.0 / r))
}

/// `W_r(mu, nu)^r`, computed piecewise between the jumps and kinks of the
/// integrand in quantile space.
pub fn wasserstein_1d_pow<'a, 'b>(
    mu: impl Into<MeasureRef<'a>>,
    nu: impl Into<MeasureRef<'b>>,
    r: f64,
) -> Result<f64> {
    if !(r >= 1.0) {
        return Err(Error::InvalidExponent { r });
    }
    let a = cdf_and_quantile(mu);
    let b = cdf_and_quantile(nu);
    let mut levels = vec![0.0, 1.0];
    levels.extend(a.breaks());
    levels.extend(b.breaks());
    levels.extend(a.kinks_against(&b));
    levels.extend(b.kinks_against(&a));
    if a.is_continuous() || b.is_continuous() {
        levels.extend((1..DEFAULT_PANELS).map(|k| k as f64 / DEFAULT_PANELS as f64));
    }
    levels.retain(|s| (0.0..=1.0).contains(s));
    levels.sort_by(|x, y| x.partial_cmp(y).unwrap());
    levels.dedup_by(|x, y| (*x - *y).abs() < 1e-15);

    let mut total = 0.0;
    for w in levels.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        total += gauss_legendre(|s| (a.quantile(s) - b.quantile(s)).abs().powf(r), lo, hi, 2);
    }
    if !total.is_finite() {
        return Err(Error::NonFinite { x: f64::NAN });
    }
    Ok(total)
}
