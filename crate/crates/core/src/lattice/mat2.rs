use std::ops::{Add, Mul, Neg, Sub};

use serde::Serialize;

pub type Vec2 = [f64; 2];

pub fn dot(u: Vec2, v: Vec2) -> f64 {
    u[0] * v[0] + u[1] * v[1]
}

pub fn norm2(u: Vec2) -> f64 {
    dot(u, u)
}

pub fn cross(u: Vec2, v: Vec2) -> f64 {
    u[0] * v[1] - u[1] * v[0]
}

pub fn sub(u: Vec2, v: Vec2) -> Vec2 {
    [u[0] - v[0], u[1] - v[1]]
}

pub fn add(u: Vec2, v: Vec2) -> Vec2 {
    [u[0] + v[0], u[1] + v[1]]
}

pub fn scale(c: f64, u: Vec2) -> Vec2 {
    [c * u[0], c * u[1]]
}

/// Real 2x2 matrix stored row-major: `[[m11, m12], [m21, m22]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);
    pub const ZERO: Mat2 = Mat2([[0.0, 0.0], [0.0, 0.0]]);

    pub fn new(m11: f64, m12: f64, m21: f64, m22: f64) -> Self {
        Mat2([[m11, m12], [m21, m22]])
    }

    /// Matrix whose columns are `c1` and `c2`.
    pub fn from_columns(c1: Vec2, c2: Vec2) -> Self {
        Mat2([[c1[0], c2[0]], [c1[1], c2[1]]])
    }

    /// `u v^T`
    pub fn outer(u: Vec2, v: Vec2) -> Self {
        Mat2([[u[0] * v[0], u[0] * v[1]], [u[1] * v[0], u[1] * v[1]]])
    }

    /// Counter-clockwise rotation by `angle`.
    pub fn rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Mat2([[c, -s], [s, c]])
    }

    pub fn column(&self, j: usize) -> Vec2 {
        [self.0[0][j], self.0[1][j]]
    }

    pub fn det(&self) -> f64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn transpose(&self) -> Self {
        Mat2([[self.0[0][0], self.0[1][0]], [self.0[0][1], self.0[1][1]]])
    }

    /// `M^T M`
    pub fn gram(&self) -> Self {
        self.transpose() * *self
    }

    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some(Mat2([
            [self.0[1][1] / d, -self.0[0][1] / d],
            [-self.0[1][0] / d, self.0[0][0] / d],
        ]))
    }

    pub fn apply(&self, v: Vec2) -> Vec2 {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }

    /// Frobenius inner product `A : B`.
    pub fn contract(&self, other: &Mat2) -> f64 {
        (0..2)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .map(|(i, j)| self.0[i][j] * other.0[i][j])
            .sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.contract(self).sqrt()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Mat2([
            [c * self.0[0][0], c * self.0[0][1]],
            [c * self.0[1][0], c * self.0[1][1]],
        ])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, rhs: Mat2) -> Mat2 {
        let a = &self.0;
        let b = &rhs.0;
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

impl Add for Mat2 {
    type Output = Mat2;

    fn add(self, rhs: Mat2) -> Mat2 {
        Mat2([
            [self.0[0][0] + rhs.0[0][0], self.0[0][1] + rhs.0[0][1]],
            [self.0[1][0] + rhs.0[1][0], self.0[1][1] + rhs.0[1][1]],
        ])
    }
}

impl Sub for Mat2 {
    type Output = Mat2;

    fn sub(self, rhs: Mat2) -> Mat2 {
        self + (-rhs)
    }
}

impl Neg for Mat2 {
    type Output = Mat2;

    fn neg(self) -> Mat2 {
        self.scaled(-1.0)
    }
}
