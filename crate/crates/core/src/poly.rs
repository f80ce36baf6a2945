//! Trilinear polynomials.

use std::ops::{Add, Mul, Sub};

use crate::Point;

/// A polynomial in `span{1, x, y, z, xy, xz, yz, xyz}`, coefficients stored in
/// that order.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Q1Poly {
    pub coeffs: [f64; 8],
}

impl Q1Poly {
    pub const fn new(coeffs: [f64; 8]) -> Self {
        Self { coeffs }
    }

    pub const fn zero() -> Self {
        Self { coeffs: [0.0; 8] }
    }

    pub const fn constant(c: f64) -> Self {
        Self {
            coeffs: [c, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        }
    }

    /// `c + g . x`
    pub fn affine(c: f64, g: &Point) -> Self {
        Self {
            coeffs: [c, g.x, g.y, g.z, 0.0, 0.0, 0.0, 0.0],
        }
    }

    /// Values of the 8 monomials at `p`.
    #[inline]
    pub fn monomials(p: &Point) -> [f64; 8] {
        let (x, y, z) = (p.x, p.y, p.z);
        [1.0, x, y, z, x * y, x * z, y * z, x * y * z]
    }

    /// Gradients of the 8 monomials at `p`, as `[d/dx; d/dy; d/dz]` rows.
    #[inline]
    pub fn monomial_gradients(p: &Point) -> [[f64; 8]; 3] {
        let (x, y, z) = (p.x, p.y, p.z);
        [
            [0.0, 1.0, 0.0, 0.0, y, z, 0.0, y * z],
            [0.0, 0.0, 1.0, 0.0, x, 0.0, z, x * z],
            [0.0, 0.0, 0.0, 1.0, 0.0, x, y, x * y],
        ]
    }

    #[inline]
    pub fn eval(&self, p: &Point) -> f64 {
        let c = &self.coeffs;
        let (x, y, z) = (p.x, p.y, p.z);
        c[0] + c[1] * x
            + c[2] * y
            + c[3] * z
            + c[4] * x * y
            + c[5] * x * z
            + c[6] * y * z
            + c[7] * x * y * z
    }

    #[inline]
    pub fn grad(&self, p: &Point) -> Point {
        let c = &self.coeffs;
        let (x, y, z) = (p.x, p.y, p.z);
        Point::new(
            c[1] + c[4] * y + c[5] * z + c[7] * y * z,
            c[2] + c[4] * x + c[6] * z + c[7] * x * z,
            c[3] + c[5] * x + c[6] * y + c[7] * x * y,
        )
    }

    /// Coefficients of the `xy, xz, yz, xyz` terms.
    pub fn d(&self) -> [f64; 4] {
        [
            self.coeffs[4],
            self.coeffs[5],
            self.coeffs[6],
            self.coeffs[7],
        ]
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

impl Add for Q1Poly {
    type Output = Q1Poly;
    fn add(self, rhs: Q1Poly) -> Q1Poly {
        Q1Poly::new(std::array::from_fn(|i| self.coeffs[i] + rhs.coeffs[i]))
    }
}

impl Sub for Q1Poly {
    type Output = Q1Poly;
    fn sub(self, rhs: Q1Poly) -> Q1Poly {
        Q1Poly::new(std::array::from_fn(|i| self.coeffs[i] - rhs.coeffs[i]))
    }
}

impl Mul<Q1Poly> for f64 {
    type Output = Q1Poly;
    fn mul(self, rhs: Q1Poly) -> Q1Poly {
        Q1Poly::new(rhs.coeffs.map(|c| self * c))
    }
}
