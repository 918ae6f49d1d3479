//! Second variation of the continuum energy and the mollified
//! non-convexity certificate.
//!
//! Everything here uses the bare energy `∫ rho(X) |X'|^3`, without the
//! constant `C_2` carried by [`crate::continuum::continuum_energy`]. The
//! conversion is [`EnergyConvention::factor`].

use serde::Serialize;

use crate::continuum::c_r;
use crate::density::{Profile, Smoothness};
use crate::error::{Error, Result};

/// Which normalization of the continuum energy a value refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyConvention {
    /// `∫ rho(X) |X'|^(r+1)`
    Bare,
    /// `C_r ∫ rho(X) |X'|^(r+1)`
    WithConstant,
}

impl EnergyConvention {
    /// Multiplier taking a bare value to this convention.
    pub fn factor(self, r: f64) -> f64 {
        match self {
            EnergyConvention::Bare => 1.0,
            EnergyConvention::WithConstant => c_r(r),
        }
    }
}

/// Convention of every value returned by this module.
pub const HESSIAN_CONVENTION: EnergyConvention = EnergyConvention::Bare;

/// Node count used for the counterexample; resolves kernels down to `delta = 1e-5`.
pub const COUNTEREXAMPLE_GRID: usize = 8192;

/// A base map and a direction sampled on `theta_k = k/M`, `k = 0..=M`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationPair {
    x: Vec<f64>,
    dx: Vec<f64>,
    y: Vec<f64>,
    dy: Vec<f64>,
    lower: f64,
    upper: f64,
}

impl PerturbationPair {
    pub fn new(x: Vec<f64>, dx: Vec<f64>, y: Vec<f64>, dy: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 3 || !(n - 1).is_multiple_of(2) || dx.len() != n || y.len() != n || dy.len() != n {
            return Err(Error::InvalidConfig(
                "perturbation pair needs M + 1 samples of each field with M even".into(),
            ));
        }
        if x[0] != 0.0 || x[n - 1] != 1.0 {
            return Err(Error::InvalidConfig("base map must satisfy X(0) = 0, X(1) = 1".into()));
        }
        if y[0] != 0.0 || y[n - 1] != 0.0 {
            return Err(Error::InvalidConfig("direction must satisfy Y(0) = Y(1) = 0".into()));
        }
        if let Some(v) = x.iter().chain(&dx).chain(&y).chain(&dy).find(|v| !v.is_finite()) {
            return Err(Error::NonFinite { x: *v });
        }
        if let Some(index) = dx.iter().position(|&d| d <= 0.0) {
            return Err(Error::Degeneracy {
                index,
                slope: dx[index],
            });
        }
        let lower = dx.iter().copied().fold(f64::INFINITY, f64::min);
        let upper = dx.iter().chain(&dy).map(|v| v.abs()).fold(0.0, f64::max);
        Ok(Self {
            x,
            dx,
            y,
            dy,
            lower,
            upper,
        })
    }

    /// Samples `X, X', Y, Y'` from closed forms.
    pub fn from_fns(
        x: impl Fn(f64) -> f64,
        dx: impl Fn(f64) -> f64,
        y: impl Fn(f64) -> f64,
        dy: impl Fn(f64) -> f64,
        m: usize,
    ) -> Result<Self> {
        let nodes: Vec<f64> = (0..=m).map(|k| k as f64 / m as f64).collect();
        let mut xs: Vec<f64> = nodes.iter().map(|&t| x(t)).collect();
        let mut ys: Vec<f64> = nodes.iter().map(|&t| y(t)).collect();
        // closed forms are often off by an ulp at the ends
        if let (Some(first), Some(last)) = (xs.first_mut(), ys.first_mut()) {
            if first.abs() < 1e-14 {
                *first = 0.0;
            }
            if last.abs() < 1e-14 {
                *last = 0.0;
            }
        }
        if let (Some(first), Some(last)) = (xs.last_mut(), ys.last_mut()) {
            if (*first - 1.0).abs() < 1e-14 {
                *first = 1.0;
            }
            if last.abs() < 1e-14 {
                *last = 0.0;
            }
        }
        Self::new(
            xs,
            nodes.iter().map(|&t| dx(t)).collect(),
            ys,
            nodes.iter().map(|&t| dy(t)).collect(),
        )
    }

    /// The identity base map paired with the direction `y`.
    pub fn identity_with(y: impl Fn(f64) -> f64, dy: impl Fn(f64) -> f64, m: usize) -> Result<Self> {
        Self::from_fns(|t| t, |_| 1.0, y, dy, m)
    }

    pub fn grid_size(&self) -> usize {
        self.x.len() - 1
    }

    /// `min X'` over the nodes.
    pub fn lower_slope(&self) -> f64 {
        self.lower
    }

    /// `max(max X', max |Y'|)` over the nodes.
    pub fn upper_slope(&self) -> f64 {
        self.upper
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }
}

fn simpson(values: impl Iterator<Item = f64>, m: usize) -> f64 {
    let h = 1.0 / m as f64;
    let mut sum = 0.0;
    for (k, v) in values.enumerate() {
        let w = if k == 0 || k == m {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        sum += w * v;
    }
    sum * h / 3.0
}

fn require_c2<P: Profile + ?Sized>(rho: &P) -> Result<()> {
    if rho.smoothness() == Smoothness::C2 {
        Ok(())
    } else {
        Err(Error::MissingDerivative)
    }
}

/// `D^2 F[X](Y, Y) = 6∫rho(X) X' Y'^2 + 6∫rho'(X) X'^2 Y' Y + ∫rho''(X) X'^3 Y^2`
/// by composite Simpson on the pair's nodes. Only `r = 2` is supported.
pub fn hessian_form<P: Profile + ?Sized>(rho: &P, pair: &PerturbationPair, r: f64) -> Result<f64> {
    if r != 2.0 {
        return Err(Error::InvalidConfig(format!(
            "second variation is implemented for r = 2 only, got {r}"
        )));
    }
    require_c2(rho)?;
    let m = pair.grid_size();
    let integrand = (0..=m).map(|k| {
        let (x, dx, y, dy) = (pair.x[k], pair.dx[k], pair.y[k], pair.dy[k]);
        6.0 * rho.value(x) * dx * dy * dy
            + 6.0 * rho.d1(x) * dx * dx * dy * y
            + rho.d2(x) * dx * dx * dx * y * y
    });
    Ok(simpson(integrand, m))
}

/// `2∫rho Y'^2 - 4∫rho Y'' Y` at `X = id`, by composite Simpson on `m` cells.
pub fn by_parts_form<P: Profile + ?Sized>(
    rho: &P,
    y: impl Fn(f64) -> f64,
    dy: impl Fn(f64) -> f64,
    d2y: impl Fn(f64) -> f64,
    m: usize,
) -> Result<f64> {
    if m < 2 || !m.is_multiple_of(2) {
        return Err(Error::InvalidConfig("Simpson rule needs an even cell count".into()));
    }
    let integrand = (0..=m).map(|k| {
        let t = k as f64 / m as f64;
        let rv = rho.value(t);
        2.0 * rv * dy(t).powi(2) - 4.0 * rv * d2y(t) * y(t)
    });
    Ok(simpson(integrand, m))
}

/// Samples of a 1-periodic function at `theta_k = k/M`, `k = 0..M`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicGrid {
    values: Vec<f64>,
}

impl PeriodicGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidConfig("periodic grid needs at least two nodes".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite { x: *v });
        }
        Ok(Self { values })
    }

    pub fn from_fn(f: impl Fn(f64) -> f64, m: usize) -> Result<Self> {
        Self::new((0..m).map(|k| f(k as f64 / m as f64)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.values.len() as f64
    }

    pub fn theta(&self, k: usize) -> f64 {
        k as f64 * self.spacing()
    }

    /// Periodic trapezoid rule.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.spacing()
    }
}

/// A mollified grid function together with its first two derivatives, all
/// obtained by convolving with derivatives of the kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct Mollified {
    pub value: PeriodicGrid,
    pub d1: PeriodicGrid,
    pub d2: PeriodicGrid,
    /// `sqrt(delta)` is below two grid cells.
    pub under_resolved: bool,
}

/// Periodic convolution with `phi_delta(s) = exp(-s^2 / (2 delta)) / sqrt(2 pi delta)`,
/// truncated at `8 sqrt(delta)` and renormalized to unit discrete mass.
pub fn mollify_periodic(g: &PeriodicGrid, delta: f64) -> Result<Mollified> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidConfig(format!("mollification scale {delta} must be positive")));
    }
    let m = g.len();
    let h = g.spacing();
    let reach = (8.0 * delta.sqrt() / h).floor() as usize;
    let offsets: Vec<f64> = (0..=2 * reach).map(|j| (j as f64 - reach as f64) * h).collect();
    let phi: Vec<f64> = offsets.iter().map(|s| (-s * s / (2.0 * delta)).exp()).collect();
    let mass: f64 = phi.iter().sum();
    let k0: Vec<f64> = phi.iter().map(|p| p / mass).collect();
    let k1: Vec<f64> = offsets.iter().zip(&k0).map(|(s, p)| -s / delta * p).collect();
    let k2: Vec<f64> = offsets
        .iter()
        .zip(&k0)
        .map(|(s, p)| (s * s / (delta * delta) - 1.0 / delta) * p)
        .collect();

    let src = g.values();
    let mut out = [vec![0.0; m], vec![0.0; m], vec![0.0; m]];
    for k in 0..m {
        let mut acc = [0.0f64; 3];
        for j in 0..offsets.len() {
            // value at theta_k - s_j
            let shift = (k + m * (reach / m + 1) + reach - j) % m;
            let v = src[shift];
            acc[0] += k0[j] * v;
            acc[1] += k1[j] * v;
            acc[2] += k2[j] * v;
        }
        for (o, a) in out.iter_mut().zip(acc) {
            o[k] = a;
        }
    }
    let [v0, v1, v2] = out;
    Ok(Mollified {
        value: PeriodicGrid { values: v0 },
        d1: PeriodicGrid { values: v1 },
        d2: PeriodicGrid { values: v2 },
        under_resolved: delta.sqrt() < 2.0 * h,
    })
}

/// Plateau half-width and mollification scale of the counterexample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CounterexampleSpec {
    epsilon: f64,
    delta: f64,
}

impl CounterexampleSpec {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 0.125) {
            return Err(Error::InvalidConfig(format!("epsilon = {epsilon} must lie in (0, 1/8)")));
        }
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidConfig(format!("delta = {delta} must be positive")));
        }
        Ok(Self { epsilon, delta })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// The value approached as `delta -> 0`: `4 epsilon - 8`.
    pub fn limit(&self) -> f64 {
        4.0 * self.epsilon - 8.0
    }
}

/// Unmollified data of the counterexample.
#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleData {
    pub rho_bar: PeriodicGrid,
    pub y: PeriodicGrid,
    /// Largest difference quotient of `y` on the grid.
    pub lipschitz: f64,
}

const RAMP_END: f64 = 0.375;

fn direction(epsilon: f64, theta: f64) -> f64 {
    let s = (theta - 0.5).abs();
    let knee = 0.5 * (epsilon + RAMP_END);
    if s <= knee {
        1.0 + s
    } else if s < RAMP_END {
        // cubic Hermite ramp from (knee, 1 + knee, slope 1) down to (3/8, 0, slope 0)
        let len = RAMP_END - knee;
        let t = (s - knee) / len;
        let h00 = 2.0 * t * t * t - 3.0 * t * t + 1.0;
        let h10 = t * t * t - 2.0 * t * t + t;
        h00 * (1.0 + knee) + h10 * len
    } else {
        0.0
    }
}

/// `rho_bar = 1` on `[1/2 - eps, 1/2 + eps]` and `0` elsewhere; `Y = |theta - 1/2| + 1`
/// on the plateau and a little beyond it, glued by cubic ramps to zero at distance
/// `3/8` from the centre. The ramps start halfway between the plateau edge and
/// `3/8`, away from the edge layer of the mollified weight.
pub fn build_counterexample(epsilon: f64, m: usize) -> Result<CounterexampleData> {
    CounterexampleSpec::new(epsilon, 1.0)?;
    let rho_bar = PeriodicGrid::from_fn(
        |t| if (t - 0.5).abs() <= epsilon + 1e-12 { 1.0 } else { 0.0 },
        m,
    )?;
    let y = PeriodicGrid::from_fn(|t| direction(epsilon, t), m)?;
    let v = y.values();
    let lipschitz = (0..m)
        .map(|k| (v[(k + 1) % m] - v[k]).abs())
        .fold(0.0, f64::max)
        / y.spacing();
    Ok(CounterexampleData {
        rho_bar,
        y,
        lipschitz,
    })
}

/// `2∫rho_d Y_d'^2 - 4∫rho_d Y_d'' Y_d` on an `m`-node periodic grid.
pub fn counterexample_value_on(spec: &CounterexampleSpec, m: usize) -> Result<f64> {
    let data = build_counterexample(spec.epsilon, m)?;
    let rho = mollify_periodic(&data.rho_bar, spec.delta)?;
    if rho.under_resolved {
        return Err(Error::Resolution(format!(
            "sqrt(delta) = {:e} spans fewer than two of the {m} grid cells",
            spec.delta.sqrt()
        )));
    }
    let y = mollify_periodic(&data.y, spec.delta)?;
    let (r, yv, y1, y2) = (
        rho.value.values(),
        y.value.values(),
        y.d1.values(),
        y.d2.values(),
    );
    let sum: f64 = (0..m)
        .map(|k| 2.0 * r[k] * y1[k] * y1[k] - 4.0 * r[k] * y2[k] * yv[k])
        .sum();
    Ok(sum / m as f64)
}

/// [`counterexample_value_on`] at the default resolution.
pub fn counterexample_value(spec: &CounterexampleSpec) -> Result<f64> {
    counterexample_value_on(spec, COUNTEREXAMPLE_GRID)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::Density1D;
    use std::f64::consts::PI;

    #[test]
    fn uniform_density_sine_direction() {
        let pair = PerturbationPair::identity_with(
            |t| (PI * t).sin(),
            |t| PI * (PI * t).cos(),
            400,
        )
        .unwrap();
        let v = hessian_form(&Density1D::uniform(), &pair, 2.0).unwrap();
        assert!((v - 3.0 * PI * PI).abs() < 1e-9, "{v}");
    }

    #[test]
    fn by_parts_matches_at_identity() {
        let rho = Density1D::cosine(0.3).unwrap();
        let y = |t: f64| (PI * t).sin() * (1.0 + t);
        let dy = |t: f64| PI * (PI * t).cos() * (1.0 + t) + (PI * t).sin();
        let d2y = |t: f64| -PI * PI * (PI * t).sin() * (1.0 + t) + 2.0 * PI * (PI * t).cos();
        let pair = PerturbationPair::identity_with(y, dy, 2000).unwrap();
        let direct = hessian_form(&rho, &pair, 2.0).unwrap();
        let parts = by_parts_form(&rho, y, dy, d2y, 2000).unwrap();
        assert!((direct - parts).abs() < 1e-8, "{direct} vs {parts}");
    }

    #[test]
    fn grid_density_needs_mollification() {
        let rho = Density1D::from_grid(vec![0.0, 0.5, 1.0], vec![1.0, 1.0, 1.0]).unwrap();
        let pair = PerturbationPair::identity_with(|t| t * (1.0 - t), |t| 1.0 - 2.0 * t, 10).unwrap();
        assert!(matches!(hessian_form(&rho, &pair, 2.0), Err(Error::MissingDerivative)));
        let smooth = Density1D::uniform();
        assert!(hessian_form(&smooth, &pair, 3.0).is_err());
    }

    #[test]
    fn pair_validation() {
        let ok = |v: Vec<f64>| v;
        assert!(PerturbationPair::new(
            ok(vec![0.0, 0.4, 1.0]),
            vec![1.0; 3],
            vec![0.0, 0.1, 0.1],
            vec![0.0; 3]
        )
        .is_err());
        assert!(matches!(
            PerturbationPair::new(vec![0.0, 0.4, 1.0], vec![1.0, 0.0, 1.0], vec![0.0; 3], vec![0.0; 3]),
            Err(Error::Degeneracy { index: 1, .. })
        ));
        let pair = PerturbationPair::identity_with(|t| t * (1.0 - t), |t| 1.0 - 2.0 * t, 10).unwrap();
        assert_eq!(pair.lower_slope(), 1.0);
        assert_eq!(pair.upper_slope(), 1.0);
    }

    #[test]
    fn mollifier_basics() {
        let ones = PeriodicGrid::new(vec![1.0; 256]).unwrap();
        let m = mollify_periodic(&ones, 1e-3).unwrap();
        assert!(m.value.values().iter().all(|v| (v - 1.0).abs() < 1e-14));
        assert!(m.d1.values().iter().all(|v| v.abs() < 1e-9));

        let g = PeriodicGrid::from_fn(|t| (t - 0.3).abs().min(0.2) + (6.0 * PI * t).sin(), 512).unwrap();
        let s = mollify_periodic(&g, 2e-4).unwrap();
        assert!((s.value.integral() - g.integral()).abs() < 1e-10);
        assert!(!s.under_resolved);
        assert!(mollify_periodic(&g, 1e-7).unwrap().under_resolved);
        assert!(mollify_periodic(&g, 0.0).is_err());
    }

    #[test]
    fn mollified_sine_derivatives() {
        let w = 2.0 * PI;
        let g = PeriodicGrid::from_fn(|t| (w * t).sin(), 1024).unwrap();
        let delta = 1e-4;
        let s = mollify_periodic(&g, delta).unwrap();
        let damp = (-w * w * delta / 2.0).exp();
        for k in (0..1024).step_by(37) {
            let t = g.theta(k);
            assert!((s.value.values()[k] - damp * (w * t).sin()).abs() < 1e-10);
            assert!((s.d1.values()[k] - damp * w * (w * t).cos()).abs() < 1e-8);
            assert!((s.d2.values()[k] + damp * w * w * (w * t).sin()).abs() < 1e-6);
        }
    }

    #[test]
    fn plateau_centre_tends_to_one() {
        let eps = 0.1;
        let data = build_counterexample(eps, 4096).unwrap();
        let mut prev = 0.0;
        for delta in [1e-2, 1e-3, 1e-4] {
            let s = mollify_periodic(&data.rho_bar, delta).unwrap();
            let centre = s.value.values()[2048];
            // 1 - 2 * (Gaussian tail beyond eps / sqrt(delta)), to grid accuracy
            let z = eps / delta.sqrt();
            let tail = 0.5 * erfc_approx(z / 2f64.sqrt());
            assert!((centre - (1.0 - 2.0 * tail)).abs() < 2e-3, "{delta}: {centre}");
            assert!(centre > prev);
            prev = centre;
        }
        assert!(prev > 1.0 - 1e-12);
    }

    // Abramowitz-Stegun 7.1.26, absolute error below 1.5e-7.
    fn erfc_approx(x: f64) -> f64 {
        let t = 1.0 / (1.0 + 0.3275911 * x);
        let poly = t * (0.254829592 + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
        poly * (-x * x).exp()
    }

    #[test]
    fn counterexample_data() {
        let m = 8192;
        let d = build_counterexample(0.1, m).unwrap();
        assert_eq!(d.y.values()[m / 2], 1.0);
        assert_eq!(d.y.values()[0], 0.0);
        assert!((d.rho_bar.integral() - 0.2).abs() <= 1.0 / m as f64);
        assert!(d.lipschitz >= 1.0 && d.lipschitz < 50.0);
        assert!(CounterexampleSpec::new(0.125, 1e-3).is_err());
        assert!(CounterexampleSpec::new(0.1, -1.0).is_err());
    }

    #[test]
    fn counterexample_converges_to_limit() {
        let spec = |d| CounterexampleSpec::new(0.1, d).unwrap();
        let vals: Vec<f64> = [1e-3, 1e-4, 1e-5]
            .iter()
            .map(|&d| counterexample_value(&spec(d)).unwrap())
            .collect();
        let limit = spec(1e-3).limit();
        assert!(vals.iter().all(|v| *v < 0.0));
        let errs: Vec<f64> = vals.iter().map(|v| (v - limit).abs()).collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{vals:?}");
        assert!(errs[2] < 0.05 * limit.abs());
        assert!(matches!(
            counterexample_value_on(&spec(1e-5), 256),
            Err(Error::Resolution(_))
        ));
    }
}
