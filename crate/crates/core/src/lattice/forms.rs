//! Energy density `F(M)` of a deformed triangular lattice.
//!
//! [`f_phi`] is the canonical form. [`f_trace`] is kept verbatim for
//! comparison only; it does not agree with [`f_phi`] (see the calibration
//! report).

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::mat2::{norm2, Mat2, Vec2};
use crate::error::{Error, Result};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Rotation by 60 degrees.
pub const R: Mat2 = Mat2([[0.5, -SQRT3 / 2.0], [SQRT3 / 2.0, 0.5]]);
/// `diag(1, -1)`
pub const S: Mat2 = Mat2([[1.0, 0.0], [0.0, -1.0]]);
pub const E1: Vec2 = [1.0, 0.0];
/// `R e1`
pub const E2: Vec2 = [0.5, SQRT3 / 2.0];
/// `e1 - e2`
pub const E12: Vec2 = [0.5, -SQRT3 / 2.0];
pub const DIRECTIONS: [Vec2; 3] = [E1, E2, E12];

/// `F(Id) = 10 / (3 sqrt 3)`
pub const F_IDENTITY: f64 = 10.0 / (3.0 * SQRT3);

/// Radicands this far below zero are treated as rounding noise.
const RADICAND_SLACK: f64 = 1e-12;

fn check_det(m: &Mat2) -> Result<f64> {
    let det = m.det();
    if !(det > 0.0) || !m.is_finite() {
        return Err(Error::Singular { det });
    }
    Ok(det)
}

struct DirectionTerms {
    p: f64,
    a: f64,
    b: f64,
    radicand: f64,
}

fn terms(m: &Mat2, omega: Vec2, det: f64, direction: usize) -> Result<DirectionTerms> {
    let rw = R.apply(omega);
    let rtw = R.transpose().apply(omega);
    let a = norm2(m.apply(rw));
    let b = norm2(m.apply(rtw));
    let mut radicand = a * b / (0.75 * det * det) - 1.0;
    if radicand < 0.0 {
        if radicand < -RADICAND_SLACK {
            return Err(Error::Domain {
                direction,
                radicand,
            });
        }
        radicand = 0.0;
    }
    Ok(DirectionTerms {
        p: norm2(m.apply(omega)),
        a,
        b,
        radicand,
    })
}

/// `Phi(omega, M) = sqrt(|M R omega|^2 |M R^T omega|^2 / ((3/4) det(M)^2) - 1)`.
pub fn phi(omega: Vec2, m: &Mat2) -> Result<f64> {
    let det = check_det(m)?;
    Ok(terms(m, omega, det, 0)?.radicand.sqrt())
}

/// `F(M) = (1/3) sum_omega |M omega|^4 Phi (3 + Phi^2)` over `e1, e2, e12`.
pub fn f_phi(m: &Mat2) -> Result<f64> {
    let det = check_det(m)?;
    let mut sum = 0.0;
    for (k, &omega) in DIRECTIONS.iter().enumerate() {
        let t = terms(m, omega, det, k)?;
        let phi = t.radicand.sqrt();
        sum += t.p * t.p * phi * (3.0 + t.radicand);
    }
    Ok(sum / 3.0)
}

/// Gradient of [`f_phi`] with respect to the entries of `M`.
pub fn f_phi_gradient(m: &Mat2) -> Result<Mat2> {
    let det = check_det(m)?;
    let inv_t = m.inverse().ok_or(Error::Singular { det })?.transpose();
    let mut grad = Mat2::ZERO;
    for (k, &omega) in DIRECTIONS.iter().enumerate() {
        let t = terms(m, omega, det, k)?;
        if t.radicand == 0.0 {
            return Err(Error::Domain {
                direction: k,
                radicand: 0.0,
            });
        }
        let phi = t.radicand.sqrt();
        let rw = R.apply(omega);
        let rtw = R.transpose().apply(omega);
        let dp = Mat2::outer(m.apply(omega), omega).scaled(2.0);
        let dq = Mat2::outer(m.apply(rw), rw).scaled(2.0 * t.b)
            + Mat2::outer(m.apply(rtw), rtw).scaled(2.0 * t.a);
        let c = 0.75 * det * det;
        // d(Phi^2) = dq / c - 2 q / c * dD / D, with dD = D M^{-T}
        let dphi2 = dq.scaled(1.0 / c) - inv_t.scaled(2.0 * t.a * t.b / c);
        let dphi = dphi2.scaled(0.5 / phi);
        grad = grad
            + dp.scaled(2.0 * t.p * phi * (3.0 + t.radicand))
            + dphi.scaled(t.p * t.p * 3.0 * (1.0 + t.radicand));
    }
    Ok(grad.scaled(1.0 / 3.0))
}

/// The trace expression, transcribed term by term:
/// `det(M) tr[M^T M (2S - I)] / (16 sqrt 3)
///  + [tr(M^T M)]^2 tr(M^T M S) / (64 sqrt 3 det M)
///  - ([tr(M^T M)]^3 + 4 [tr(M^T M S)]^3) / (192 sqrt 3 det M)`.
pub fn f_trace(m: &Mat2) -> Result<f64> {
    let det = check_det(m)?;
    let g = m.gram();
    let t = g.trace();
    let ts = (g * S).trace();
    let first = det * (g * (S.scaled(2.0) - Mat2::IDENTITY)).trace() / (16.0 * SQRT3);
    let second = t * t * ts / (64.0 * SQRT3 * det);
    let third = (t * t * t + 4.0 * ts * ts * ts) / (192.0 * SQRT3 * det);
    Ok(first + second - third)
}

/// `F0(A) = F(A) - 20/(3 sqrt 3) tr(A - Id) - 14/(3 sqrt 3) det(A - Id)`.
pub fn f0(a: &Mat2) -> Result<f64> {
    let d = *a - Mat2::IDENTITY;
    Ok(f_phi(a)? - 20.0 / (3.0 * SQRT3) * d.trace() - 14.0 / (3.0 * SQRT3) * d.det())
}

/// `10 + 20 tau tr G + tau^2 (14 det G + 10 (tr G)^2 + 3 |G|^2)`, the second-order
/// model of `3 sqrt(3) F(Id + tau G)`.
pub fn expansion_polynomial(g: &Mat2, tau: f64) -> f64 {
    let tr = g.trace();
    10.0 + 20.0 * tau * tr + tau * tau * (14.0 * g.det() + 10.0 * tr * tr + 3.0 * g.contract(g))
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvexityReport {
    pub eta: f64,
    pub h: f64,
    pub samples: usize,
    /// Smallest second difference of `F0` found.
    pub min_kappa: f64,
    pub worst_point: Mat2,
    pub worst_direction: Mat2,
}

fn random_matrix(rng: &mut ChaCha8Rng) -> Mat2 {
    let mut v = || 2.0 * rng.random::<f64>() - 1.0;
    Mat2::new(v(), v(), v(), v())
}

/// Second differences `[F0(A + hB) - 2 F0(A) + F0(A - hB)] / h^2` at random
/// `|A - Id| <= eta` along random unit `B` (Frobenius norms).
pub fn convexity_probe(eta: f64, samples: usize, h: f64, seed: u64) -> Result<ConvexityReport> {
    if !(eta > 0.0) || !(h > 0.0) || samples == 0 {
        return Err(Error::InvalidConfig("convexity probe needs eta, h > 0 and samples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ConvexityReport {
        eta,
        h,
        samples,
        min_kappa: f64::INFINITY,
        worst_point: Mat2::IDENTITY,
        worst_direction: Mat2::ZERO,
    };
    for _ in 0..samples {
        let offset = loop {
            let d = random_matrix(&mut rng);
            if d.frobenius() <= 1.0 {
                break d.scaled(eta);
            }
        };
        let dir = loop {
            let d = random_matrix(&mut rng);
            let n = d.frobenius();
            if n > 1e-3 && n <= 1.0 {
                break d.scaled(1.0 / n);
            }
        };
        let a = Mat2::IDENTITY + offset;
        let kappa = (f0(&(a + dir.scaled(h)))? - 2.0 * f0(&a)? + f0(&(a - dir.scaled(h)))?) / (h * h);
        if kappa < report.min_kappa {
            report.min_kappa = kappa;
            report.worst_point = a;
            report.worst_direction = dir;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_values() {
        assert!((f_phi(&Mat2::IDENTITY).unwrap() - F_IDENTITY).abs() < 1e-14);
        assert!((F_IDENTITY - 1.924_500_897).abs() < 1e-9);
        for w in DIRECTIONS {
            assert!((phi(w, &Mat2::IDENTITY).unwrap() - 1.0 / SQRT3).abs() < 1e-15);
        }
        assert!((f_trace(&Mat2::IDENTITY).unwrap() + 1.0 / (6.0 * SQRT3)).abs() < 1e-15);
        assert_eq!(S * S, Mat2::IDENTITY);
        assert_eq!(S.trace(), 0.0);
    }

    #[test]
    fn lattice_vectors() {
        assert_eq!(R.apply(E1), E2);
        let e12 = R.inverse().unwrap().apply(E1);
        assert!((e12[0] - E12[0]).abs() < 1e-15 && (e12[1] - E12[1]).abs() < 1e-15);
    }

    #[test]
    fn singular_matrices_are_rejected() {
        let flip = Mat2::new(1.0, 0.0, 0.0, -1.0);
        assert!(matches!(f_phi(&flip), Err(Error::Singular { .. })));
        assert!(matches!(f_trace(&Mat2::ZERO), Err(Error::Singular { .. })));
    }

    #[test]
    fn scaling_is_quartic() {
        let m = Mat2::new(1.1, 0.2, -0.1, 0.9);
        let f = f_phi(&m).unwrap();
        assert!((f_phi(&m.scaled(1.3)).unwrap() - 1.3f64.powi(4) * f).abs() < 1e-12 * f);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let m = Mat2::new(1.05, 0.1, -0.07, 0.96);
        let g = f_phi_gradient(&m).unwrap();
        let h = 1e-6;
        for i in 0..2 {
            for j in 0..2 {
                let mut e = Mat2::ZERO;
                e.0[i][j] = h;
                let fd = (f_phi(&(m + e)).unwrap() - f_phi(&(m - e)).unwrap()) / (2.0 * h);
                assert!((fd - g.0[i][j]).abs() < 1e-8, "{i}{j}: {fd} vs {}", g.0[i][j]);
            }
        }
    }

    #[test]
    fn gradient_at_identity_is_trace_direction() {
        // 3 sqrt(3) F = 10 + 20 tr G + ...  =>  grad F(Id) = 20/(3 sqrt 3) Id
        let g = f_phi_gradient(&Mat2::IDENTITY).unwrap();
        assert!((g - Mat2::IDENTITY.scaled(20.0 / (3.0 * SQRT3))).frobenius() < 1e-13);
    }

    #[test]
    fn f0_along_s_at_identity() {
        let h = 1e-4;
        let second = (f0(&(Mat2::IDENTITY + S.scaled(h))).unwrap() - 2.0 * f0(&Mat2::IDENTITY).unwrap()
            + f0(&(Mat2::IDENTITY - S.scaled(h))).unwrap())
            / (h * h);
        assert!((second - 4.0 / SQRT3).abs() < 1e-5, "{second}");
    }

    #[test]
    fn f0_is_convex_near_identity() {
        let report = convexity_probe(0.05, 1000, 1e-4, 7).unwrap();
        assert!(report.min_kappa > 0.5, "{report:?}");
    }
}
