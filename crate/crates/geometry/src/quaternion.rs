//! Quaternion arithmetic and the scalar field K.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

use crate::params::Family;

/// A real quaternion `w + x i + y j + z k`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const ZERO: Quaternion = Quaternion { w: 0.0, x: 0.0, y: 0.0, z: 0.0 };
    pub const ONE: Quaternion = Quaternion { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };
    pub const I: Quaternion = Quaternion { w: 0.0, x: 1.0, y: 0.0, z: 0.0 };
    pub const J: Quaternion = Quaternion { w: 0.0, x: 0.0, y: 1.0, z: 0.0 };
    pub const K: Quaternion = Quaternion { w: 0.0, x: 0.0, y: 0.0, z: 1.0 };

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quaternion { w, x, y, z }
    }

    pub const fn real(w: f64) -> Self {
        Quaternion { w, x: 0.0, y: 0.0, z: 0.0 }
    }

    /// Builds a quaternion from up to four real components; missing ones are zero.
    pub fn from_slice(c: &[f64]) -> Self {
        let g = |k: usize| c.get(k).copied().unwrap_or(0.0);
        Quaternion::new(g(0), g(1), g(2), g(3))
    }

    /// Pure quaternion with imaginary part `(c[0], c[1], c[2])`, missing ones zero.
    pub fn pure(c: &[f64]) -> Self {
        let g = |k: usize| c.get(k).copied().unwrap_or(0.0);
        Quaternion::new(0.0, g(0), g(1), g(2))
    }

    pub fn components(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn imag(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn conj(&self) -> Self {
        Quaternion::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Quaternion::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self) -> Option<Self> {
        let n = self.norm_sqr();
        if n == 0.0 {
            None
        } else {
            Some(self.conj().scale(1.0 / n))
        }
    }

    /// Real inner product of the coefficient vectors, equal to `Re(conj(self) * other)`.
    pub fn dot(&self, other: &Quaternion) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }
}

impl Add for Quaternion {
    type Output = Quaternion;
    fn add(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.w + o.w, self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Quaternion {
    fn add_assign(&mut self, o: Quaternion) {
        *self = *self + o;
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;
    fn sub(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.w - o.w, self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl SubAssign for Quaternion {
    fn sub_assign(&mut self, o: Quaternion) {
        *self = *self - o;
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;
    fn neg(self) -> Quaternion {
        Quaternion::new(-self.w, -self.x, -self.y, -self.z)
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;
    fn mul(self, o: Quaternion) -> Quaternion {
        Quaternion::new(
            self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        )
    }
}

impl Mul<f64> for Quaternion {
    type Output = Quaternion;
    fn mul(self, s: f64) -> Quaternion {
        self.scale(s)
    }
}

impl Div<f64> for Quaternion {
    type Output = Quaternion;
    fn div(self, s: f64) -> Quaternion {
        self.scale(1.0 / s)
    }
}

impl fmt::Display for Quaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}i + {}j + {}k", self.w, self.x, self.y, self.z)
    }
}

/// An element of K, tagged with its family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KScalar {
    Real(f64),
    Complex(Complex64),
    Quaternion(Quaternion),
}

impl KScalar {
    pub fn family(&self) -> Family {
        match self {
            KScalar::Real(_) => Family::R,
            KScalar::Complex(_) => Family::C,
            KScalar::Quaternion(_) => Family::H,
        }
    }

    /// The standard involution of K.
    pub fn conj(&self) -> Self {
        match *self {
            KScalar::Real(r) => KScalar::Real(r),
            KScalar::Complex(c) => KScalar::Complex(c.conj()),
            KScalar::Quaternion(q) => KScalar::Quaternion(q.conj()),
        }
    }

    pub fn abs(&self) -> f64 {
        match *self {
            KScalar::Real(r) => r.abs(),
            KScalar::Complex(c) => c.norm(),
            KScalar::Quaternion(q) => q.norm(),
        }
    }

    /// Embeds the scalar in the quaternions (C sits on the `1, i` plane).
    pub fn to_quaternion(&self) -> Quaternion {
        match *self {
            KScalar::Real(r) => Quaternion::real(r),
            KScalar::Complex(c) => Quaternion::new(c.re, c.im, 0.0, 0.0),
            KScalar::Quaternion(q) => q,
        }
    }

    /// Projects a quaternion onto the subalgebra of `family`, dropping foreign components.
    pub fn from_quaternion(family: Family, q: Quaternion) -> Self {
        match family {
            Family::R => KScalar::Real(q.w),
            Family::C => KScalar::Complex(Complex64::new(q.w, q.x)),
            Family::H => KScalar::Quaternion(q),
        }
    }
}
