//! Quaternion arithmetic and the identification of H^n with R^{4n}.
//!
//! Components are ordered (1, i, j, k): the j-th coordinate of a point
//! q in H^n occupies the real slots x_{4j}..x_{4j+3}, so
//! q_j = x_{4j} + x_{4j+1} i + x_{4j+2} j + x_{4j+3} k. Every other
//! embedding in the crate is derived from this ordering.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::Matrix4;

use crate::error::CoreError;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Quaternion {
    pub x0: f64,
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
}

impl Quaternion {
    pub const ZERO: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 0.0);
    pub const ONE: Quaternion = Quaternion::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Quaternion = Quaternion::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Quaternion = Quaternion::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(x0: f64, x1: f64, x2: f64, x3: f64) -> Self {
        Quaternion { x0, x1, x2, x3 }
    }

    pub const fn from_real(r: f64) -> Self {
        Quaternion::new(r, 0.0, 0.0, 0.0)
    }

    /// The basis unit e_s for s in 0..4, i.e. 1, i, j, k.
    pub fn unit(s: usize) -> Self {
        match s {
            0 => Quaternion::ONE,
            1 => Quaternion::I,
            2 => Quaternion::J,
            3 => Quaternion::K,
            _ => panic!("quaternion unit index {s} out of range"),
        }
    }

    pub fn conj(self) -> Self {
        Quaternion::new(self.x0, -self.x1, -self.x2, -self.x3)
    }

    pub fn re(self) -> f64 {
        self.x0
    }

    pub fn norm_sqr(self) -> f64 {
        self.x0 * self.x0 + self.x1 * self.x1 + self.x2 * self.x2 + self.x3 * self.x3
    }

    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Size of the imaginary part; zero exactly for real quaternions.
    pub fn imag_norm(self) -> f64 {
        (self.x1 * self.x1 + self.x2 * self.x2 + self.x3 * self.x3).sqrt()
    }

    pub fn scale(self, c: f64) -> Self {
        Quaternion::new(c * self.x0, c * self.x1, c * self.x2, c * self.x3)
    }

    pub fn components(self) -> [f64; 4] {
        [self.x0, self.x1, self.x2, self.x3]
    }

    pub fn from_components(c: &[f64; 4]) -> Self {
        Quaternion::new(c[0], c[1], c[2], c[3])
    }

    pub fn is_finite(self) -> bool {
        self.x0.is_finite() && self.x1.is_finite() && self.x2.is_finite() && self.x3.is_finite()
    }
}

impl Add for Quaternion {
    type Output = Quaternion;
    fn add(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.x0 + o.x0, self.x1 + o.x1, self.x2 + o.x2, self.x3 + o.x3)
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;
    fn sub(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.x0 - o.x0, self.x1 - o.x1, self.x2 - o.x2, self.x3 - o.x3)
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;
    fn neg(self) -> Quaternion {
        Quaternion::new(-self.x0, -self.x1, -self.x2, -self.x3)
    }
}

/// Hamilton product; noncommutative (ij = k, ji = -k).
impl Mul for Quaternion {
    type Output = Quaternion;
    fn mul(self, o: Quaternion) -> Quaternion {
        let (a0, a1, a2, a3) = (self.x0, self.x1, self.x2, self.x3);
        let (b0, b1, b2, b3) = (o.x0, o.x1, o.x2, o.x3);
        Quaternion::new(
            a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
            a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
            a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
            a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
        )
    }
}

impl Mul<f64> for Quaternion {
    type Output = Quaternion;
    fn mul(self, c: f64) -> Quaternion {
        self.scale(c)
    }
}

impl fmt::Display for Quaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:+}i{:+}j{:+}k", self.x0, self.x1, self.x2, self.x3)
    }
}

/// Matrix of left multiplication by `a` acting on real components:
/// left_mult_matrix(a) * b.real_embed() == (a*b).real_embed().
///
/// It is an algebra homomorphism, and transposition corresponds to
/// conjugation: L(conj a) = L(a)^T.
pub fn left_mult_matrix(a: Quaternion) -> Matrix4<f64> {
    let (a0, a1, a2, a3) = (a.x0, a.x1, a.x2, a.x3);
    Matrix4::new(
        a0, -a1, -a2, -a3, //
        a1, a0, -a3, a2, //
        a2, a3, a0, -a1, //
        a3, -a2, a1, a0,
    )
}

/// A point of H^n.
#[derive(Clone, Debug, PartialEq)]
pub struct QPoint {
    coords: Vec<Quaternion>,
}

impl QPoint {
    pub fn new(coords: Vec<Quaternion>) -> Self {
        QPoint { coords }
    }

    pub fn origin(n: usize) -> Self {
        QPoint { coords: vec![Quaternion::ZERO; n] }
    }

    pub fn n(&self) -> usize {
        self.coords.len()
    }

    pub fn coord(&self, j: usize) -> Quaternion {
        self.coords[j]
    }

    pub fn coords(&self) -> &[Quaternion] {
        &self.coords
    }

    /// Flatten into (x_0, ..., x_{4n-1}).
    pub fn real_embed(&self) -> Vec<f64> {
        let mut xs = Vec::with_capacity(4 * self.coords.len());
        for q in &self.coords {
            xs.extend_from_slice(&q.components());
        }
        xs
    }

    /// Inverse of `real_embed`; the slice length must be a multiple of 4.
    pub fn from_real(xs: &[f64]) -> Result<Self, CoreError> {
        if xs.is_empty() || xs.len() % 4 != 0 {
            return Err(CoreError::InvalidInput(format!(
                "a point of H^n needs 4n real coordinates, got {}",
                xs.len()
            )));
        }
        let coords = xs
            .chunks_exact(4)
            .map(|c| Quaternion::new(c[0], c[1], c[2], c[3]))
            .collect();
        Ok(QPoint { coords })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coords.iter().map(|q| q.norm_sqr()).sum()
    }
}
