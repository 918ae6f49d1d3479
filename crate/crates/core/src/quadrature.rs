//! Composite Gauss–Legendre quadrature.
//!
//! Every sum is accumulated in node order so results are bitwise reproducible.

use crate::error::{Error, Result};

/// Abscissae of the 8-point Gauss–Legendre rule on [-1, 1] (positive half).
const GL8_NODES: [f64; 4] = [
    0.183_434_642_495_649_9,
    0.525_532_409_916_329,
    0.796_666_477_413_626_8,
    0.960_289_856_497_536_2,
];
const GL8_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_4,
    0.222_381_034_453_374_4,
    0.101_228_536_290_376_2,
];

/// Nodes per panel.
pub const NODES_PER_PANEL: usize = 8;
/// Panel count used for integrals over [0, 1] unless stated otherwise.
pub const DEFAULT_PANELS: usize = 256;

/// Degree of polynomials integrated exactly on each panel.
pub const EXACT_DEGREE: usize = 2 * NODES_PER_PANEL - 1;

/// Fixed node/weight table for a composite rule on `[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    panels: usize,
    interval: (f64, f64),
}

impl Quadrature {
    pub fn gauss_legendre(a: f64, b: f64, panels: usize) -> Self {
        let panels = panels.max(1);
        let mut nodes = Vec::with_capacity(panels * NODES_PER_PANEL);
        let mut weights = Vec::with_capacity(panels * NODES_PER_PANEL);
        let h = (b - a) / panels as f64;
        for p in 0..panels {
            let lo = a + p as f64 * h;
            let mid = lo + 0.5 * h;
            let half = 0.5 * h;
            for k in (0..4).rev() {
                nodes.push(mid - half * GL8_NODES[k]);
                weights.push(half * GL8_WEIGHTS[k]);
            }
            for k in 0..4 {
                nodes.push(mid + half * GL8_NODES[k]);
                weights.push(half * GL8_WEIGHTS[k]);
            }
        }
        Self {
            nodes,
            weights,
            panels,
            interval: (a, b),
        }
    }

    /// The default rule on [0, 1].
    pub fn unit() -> Self {
        Self::gauss_legendre(0.0, 1.0, DEFAULT_PANELS)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    /// Evaluates `g` on every node and sums, failing on the first
    /// non-finite value.
    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> Result<f64> {
        let mut acc = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            let v = g(x);
            if !v.is_finite() {
                return Err(Error::NonFinite { x });
            }
            acc += w * v;
        }
        Ok(acc)
    }
}

/// Composite quadrature of `g` with the given rule.
pub fn integrate(g: impl Fn(f64) -> f64, quad: &Quadrature) -> Result<f64> {
    quad.integrate(g)
}

/// Allocation-free composite rule for inner loops. No finiteness check.
#[inline]
pub fn gauss_legendre(g: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    if b == a {
        return 0.0;
    }
    let h = (b - a) / panels as f64;
    let half = 0.5 * h;
    let mut acc = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        let mut panel = 0.0;
        for k in 0..4 {
            let dx = half * GL8_NODES[k];
            panel += GL8_WEIGHTS[k] * (g(mid - dx) + g(mid + dx));
        }
        acc += half * panel;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_and_quadratic() {
        let q = Quadrature::unit();
        assert!((q.integrate(|_| 1.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((q.integrate(|y| y * y).unwrap() - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn exact_up_to_declared_degree_on_one_panel() {
        let q = Quadrature::gauss_legendre(0.0, 1.0, 1);
        for deg in 0..=EXACT_DEGREE as i32 {
            let v = q.integrate(|y| y.powi(deg)).unwrap();
            assert!((v - 1.0 / (deg as f64 + 1.0)).abs() < 1e-14, "degree {deg}");
        }
        let v = q.integrate(|y| y.powi(16)).unwrap();
        assert!((v - 1.0 / 17.0).abs() > 1e-12);
    }

    #[test]
    fn weights_positive_and_sum_to_length() {
        let q = Quadrature::gauss_legendre(-2.0, 3.0, 7);
        assert!(q.weights().iter().all(|&w| w > 0.0));
        let s: f64 = q.weights().iter().sum();
        assert!((s - 5.0).abs() < 1e-13);
        assert_eq!(q.nodes().len(), 7 * NODES_PER_PANEL);
    }

    #[test]
    fn non_finite_node_is_reported() {
        let q = Quadrature::unit();
        let err = q.integrate(|y| if y > 0.5 { f64::NAN } else { 1.0 }).unwrap_err();
        match err {
            Error::NonFinite { x } => assert!(x > 0.5),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn symmetric_integrand_reversal() {
        let q = Quadrature::gauss_legendre(-1.0, 1.0, 64);
        let g = |y: f64| (3.0 * y).cos() * (-y * y).exp();
        let a = q.integrate(g).unwrap();
        let b = q.integrate(|y| g(-y)).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn inline_rule_matches_table() {
        let g = |y: f64| (y * 5.0).sin() + y.powi(3);
        let a = gauss_legendre(g, 0.2, 0.9, 5);
        let b = Quadrature::gauss_legendre(0.2, 0.9, 5).integrate(g).unwrap();
        assert!((a - b).abs() < 1e-14);
        assert_eq!(gauss_legendre(g, 0.3, 0.3, 4), 0.0);
    }
}
