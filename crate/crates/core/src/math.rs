//! Small fixed-size linear algebra in the plane.

use core::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };
    pub const E1: Vec2 = Vec2 { x: 1.0, y: 0.0 };
    pub const E2: Vec2 = Vec2 { x: 0.0, y: 1.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the planar cross product.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        libm::hypot(self.x, self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    /// Counter-clockwise rotation by a right angle.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        Vec2::new(self.x / n, self.y / n)
    }

    pub fn scale(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Outer product `self ⊗ other`.
    pub fn outer(self, other: Vec2) -> Mat2 {
        Mat2::new(
            self.x * other.x,
            self.x * other.y,
            self.y * other.x,
            self.y * other.y,
        )
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl SubAssign for Vec2 {
    fn sub_assign(&mut self, o: Vec2) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        v.scale(self)
    }
}

/// A real 2×2 matrix stored row-major: `[[a11, a12], [a21, a22]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat2 {
    pub m: [[f64; 2]; 2],
}

impl Mat2 {
    pub const ZERO: Mat2 = Mat2 { m: [[0.0, 0.0], [0.0, 0.0]] };
    pub const IDENTITY: Mat2 = Mat2 { m: [[1.0, 0.0], [0.0, 1.0]] };

    pub const fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Mat2 { m: [[a11, a12], [a21, a22]] }
    }

    pub fn diag(a: f64, b: f64) -> Self {
        Mat2::new(a, 0.0, 0.0, b)
    }

    /// Counter-clockwise rotation by `theta`.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = libm::sincos(theta);
        Mat2::new(c, -s, s, c)
    }

    /// Matrix with the given columns.
    pub fn from_cols(c1: Vec2, c2: Vec2) -> Self {
        Mat2::new(c1.x, c2.x, c1.y, c2.y)
    }

    pub fn col(&self, j: usize) -> Vec2 {
        Vec2::new(self.m[0][j], self.m[1][j])
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn transpose(&self) -> Mat2 {
        Mat2::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some(Mat2::new(
            self.m[1][1] / d,
            -self.m[0][1] / d,
            -self.m[1][0] / d,
            self.m[0][0] / d,
        ))
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        libm::sqrt(self.norm_sq())
    }

    pub fn norm_sq(&self) -> f64 {
        self.m[0][0] * self.m[0][0]
            + self.m[0][1] * self.m[0][1]
            + self.m[1][0] * self.m[1][0]
            + self.m[1][1] * self.m[1][1]
    }

    /// Frobenius inner product.
    pub fn ddot(&self, o: &Mat2) -> f64 {
        self.m[0][0] * o.m[0][0]
            + self.m[0][1] * o.m[0][1]
            + self.m[1][0] * o.m[1][0]
            + self.m[1][1] * o.m[1][1]
    }

    pub fn sym(&self) -> Mat2 {
        let off = 0.5 * (self.m[0][1] + self.m[1][0]);
        Mat2::new(self.m[0][0], off, off, self.m[1][1])
    }

    pub fn skew(&self) -> Mat2 {
        let w = 0.5 * (self.m[0][1] - self.m[1][0]);
        Mat2::new(0.0, w, -w, 0.0)
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        Mat2::new(
            self.m[0][0] * s,
            self.m[0][1] * s,
            self.m[1][0] * s,
            self.m[1][1] * s,
        )
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|v| v.is_finite())
    }

    /// Singular values `σ1 ≥ σ2 ≥ 0`.
    pub fn singular_values(&self) -> (f64, f64) {
        // σ1 ± σ2 = |(a+d, c-b)| and |(a-d, c+b)| combinations.
        let [[a, b], [c, d]] = self.m;
        let p = libm::hypot(a + d, c - b);
        let q = libm::hypot(a - d, c + b);
        (0.5 * (p + q), 0.5 * libm::fabs(p - q))
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.m[0][0] + o.m[0][0],
            self.m[0][1] + o.m[0][1],
            self.m[1][0] + o.m[1][0],
            self.m[1][1] + o.m[1][1],
        )
    }
}

impl AddAssign for Mat2 {
    fn add_assign(&mut self, o: Mat2) {
        *self = *self + o;
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        self + o.scale(-1.0)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let a = &self.m;
        let b = &o.m;
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

impl Mul<Vec2> for Mat2 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        Vec2::new(
            self.m[0][0] * v.x + self.m[0][1] * v.y,
            self.m[1][0] * v.x + self.m[1][1] * v.y,
        )
    }
}

/// Pairwise (tree) summation in a fixed order.
///
/// The result depends only on the sequence of terms, never on how the
/// caller schedules the work, so energies are reproducible to the bit.
pub fn tree_sum(terms: &[f64]) -> f64 {
    const LEAF: usize = 64;
    if terms.len() <= LEAF {
        return terms.iter().sum();
    }
    let mid = terms.len() / 2;
    tree_sum(&terms[..mid]) + tree_sum(&terms[mid..])
}

/// `|v + d| - 1` for a unit vector `v`, without cancellation when `d` is tiny.
pub fn stretch_minus_one(v: Vec2, d: Vec2) -> f64 {
    let w = v + d;
    let r = w.norm();
    (2.0 * v.dot(d) + d.norm_sq()) / (r + 1.0)
}

/// Quintic smoothstep, clamped to `[0, 1]` with two continuous derivatives.
pub fn smoothstep(z: f64) -> f64 {
    if z <= 0.0 {
        0.0
    } else if z >= 1.0 {
        1.0
    } else {
        z * z * z * (z * (6.0 * z - 15.0) + 10.0)
    }
}

pub fn smoothstep_derivative(z: f64) -> f64 {
    if z <= 0.0 || z >= 1.0 {
        0.0
    } else {
        30.0 * z * z * (z - 1.0) * (z - 1.0)
    }
}
