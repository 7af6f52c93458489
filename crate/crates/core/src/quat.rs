//! Quaternion scalars.
//!
//! Complex numbers are stored as quaternions with vanishing `j`/`k`
//! components, so a single arithmetic path serves both algebras.

use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Quat {
    pub re: f64,
    pub i: f64,
    pub j: f64,
    pub k: f64,
}

impl Quat {
    pub const ZERO: Quat = Quat::new(0.0, 0.0, 0.0, 0.0);
    pub const ONE: Quat = Quat::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Quat = Quat::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Quat = Quat::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Quat = Quat::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(re: f64, i: f64, j: f64, k: f64) -> Self {
        Quat { re, i, j, k }
    }

    pub const fn real(re: f64) -> Self {
        Quat::new(re, 0.0, 0.0, 0.0)
    }

    pub const fn complex(re: f64, im: f64) -> Self {
        Quat::new(re, im, 0.0, 0.0)
    }

    /// `exp(i·angle)`.
    pub fn cis(angle: f64) -> Self {
        Quat::complex(angle.cos(), angle.sin())
    }

    #[inline]
    pub fn conj(self) -> Self {
        Quat::new(self.re, -self.i, -self.j, -self.k)
    }

    #[inline]
    pub fn norm_sqr(self) -> f64 {
        self.re * self.re + self.i * self.i + self.j * self.j + self.k * self.k
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn inv(self) -> Self {
        self.conj() * (1.0 / self.norm_sqr())
    }

    /// Unit quaternion in the direction of `self`; `ONE` for zero input.
    pub fn unit(self) -> Self {
        let n = self.norm();
        if n == 0.0 {
            Quat::ONE
        } else {
            self * (1.0 / n)
        }
    }

    /// Euclidean inner product of the component 4-vectors, `Re(conj(self)·other)`.
    #[inline]
    pub fn dot(self, other: Quat) -> f64 {
        self.re * other.re + self.i * other.i + self.j * other.j + self.k * other.k
    }

    pub fn components(self) -> [f64; 4] {
        [self.re, self.i, self.j, self.k]
    }

    pub fn from_components(c: [f64; 4]) -> Self {
        Quat::new(c[0], c[1], c[2], c[3])
    }

    pub fn is_complex(self, tol: f64) -> bool {
        self.j.abs() <= tol && self.k.abs() <= tol
    }

    pub fn is_finite(self) -> bool {
        self.re.is_finite() && self.i.is_finite() && self.j.is_finite() && self.k.is_finite()
    }
}

impl Add for Quat {
    type Output = Quat;
    #[inline]
    fn add(self, o: Quat) -> Quat {
        Quat::new(self.re + o.re, self.i + o.i, self.j + o.j, self.k + o.k)
    }
}

impl Sub for Quat {
    type Output = Quat;
    #[inline]
    fn sub(self, o: Quat) -> Quat {
        Quat::new(self.re - o.re, self.i - o.i, self.j - o.j, self.k - o.k)
    }
}

impl Neg for Quat {
    type Output = Quat;
    #[inline]
    fn neg(self) -> Quat {
        Quat::new(-self.re, -self.i, -self.j, -self.k)
    }
}

impl Mul for Quat {
    type Output = Quat;
    #[inline]
    fn mul(self, o: Quat) -> Quat {
        Quat::new(
            self.re * o.re - self.i * o.i - self.j * o.j - self.k * o.k,
            self.re * o.i + self.i * o.re + self.j * o.k - self.k * o.j,
            self.re * o.j - self.i * o.k + self.j * o.re + self.k * o.i,
            self.re * o.k + self.i * o.j - self.j * o.i + self.k * o.re,
        )
    }
}

impl Mul<f64> for Quat {
    type Output = Quat;
    #[inline]
    fn mul(self, s: f64) -> Quat {
        Quat::new(self.re * s, self.i * s, self.j * s, self.k * s)
    }
}

impl Div<f64> for Quat {
    type Output = Quat;
    #[inline]
    fn div(self, s: f64) -> Quat {
        self * (1.0 / s)
    }
}

impl AddAssign for Quat {
    #[inline]
    fn add_assign(&mut self, o: Quat) {
        *self = *self + o;
    }
}

impl SubAssign for Quat {
    #[inline]
    fn sub_assign(&mut self, o: Quat) {
        *self = *self - o;
    }
}

impl MulAssign<f64> for Quat {
    #[inline]
    fn mul_assign(&mut self, s: f64) {
        *self = *self * s;
    }
}

impl Sum for Quat {
    fn sum<I: Iterator<Item = Quat>>(iter: I) -> Quat {
        iter.fold(Quat::ZERO, |a, b| a + b)
    }
}

impl From<f64> for Quat {
    fn from(x: f64) -> Self {
        Quat::real(x)
    }
}
