use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quat::Quat;

/// Base algebra of the hyperbolic space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarAlgebra {
    Complex,
    Quaternion,
}

const COMPLEX_UNITS: [Quat; 2] = [Quat::ONE, Quat::I];
const QUATERNION_UNITS: [Quat; 4] = [Quat::ONE, Quat::I, Quat::J, Quat::K];

impl ScalarAlgebra {
    /// Real dimension of the algebra.
    pub fn d(self) -> usize {
        match self {
            ScalarAlgebra::Complex => 2,
            ScalarAlgebra::Quaternion => 4,
        }
    }

    /// Real basis `1, i (, j, k)`.
    pub fn units(self) -> &'static [Quat] {
        match self {
            ScalarAlgebra::Complex => &COMPLEX_UNITS,
            ScalarAlgebra::Quaternion => &QUATERNION_UNITS,
        }
    }

    /// The `d - 1` imaginary units defining the structure operators.
    pub fn imaginary_units(self) -> &'static [Quat] {
        &self.units()[1..]
    }

    pub fn contains(self, q: Quat, tol: f64) -> bool {
        match self {
            ScalarAlgebra::Complex => q.is_complex(tol),
            ScalarAlgebra::Quaternion => true,
        }
    }

    /// Assemble a scalar from `d` real components.
    pub fn from_slice(self, c: &[f64]) -> Result<Quat> {
        match (self, c.len()) {
            (ScalarAlgebra::Complex, 2) => Ok(Quat::complex(c[0], c[1])),
            (ScalarAlgebra::Quaternion, 4) => Ok(Quat::new(c[0], c[1], c[2], c[3])),
            (_, n) => Err(Error::Parse(format!(
                "{self} scalar needs {} components, got {n}",
                self.d()
            ))),
        }
    }

    pub fn to_components(self, q: Quat) -> Vec<f64> {
        q.components()[..self.d()].to_vec()
    }

    pub fn from_d(d: usize) -> Result<Self> {
        match d {
            2 => Ok(ScalarAlgebra::Complex),
            4 => Ok(ScalarAlgebra::Quaternion),
            _ => Err(Error::Parse(format!("scalar with {d} components"))),
        }
    }
}

impl fmt::Display for ScalarAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarAlgebra::Complex => write!(f, "complex"),
            ScalarAlgebra::Quaternion => write!(f, "quaternion"),
        }
    }
}

/// `X^p`: complex or quaternionic hyperbolic space of rank `p`, realized in
/// the projectivized signature-(p,1) Hermitian space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Space {
    algebra: ScalarAlgebra,
    p: usize,
}

impl Space {
    pub fn new(algebra: ScalarAlgebra, p: usize) -> Result<Self> {
        if p < 2 {
            return Err(Error::InvalidSpace(format!("rank must be at least 2, got {p}")));
        }
        Ok(Space { algebra, p })
    }

    pub fn complex(p: usize) -> Self {
        Space::new(ScalarAlgebra::Complex, p).expect("rank >= 2")
    }

    pub fn quaternionic(p: usize) -> Self {
        Space::new(ScalarAlgebra::Quaternion, p).expect("rank >= 2")
    }

    pub fn algebra(&self) -> ScalarAlgebra {
        self.algebra
    }

    pub fn rank(&self) -> usize {
        self.p
    }

    pub fn d(&self) -> usize {
        self.algebra.d()
    }

    /// Real dimension `k = d·p`.
    pub fn dim(&self) -> usize {
        self.algebra.d() * self.p
    }

    /// Number of homogeneous coordinates, `p + 1`.
    pub fn coords(&self) -> usize {
        self.p + 1
    }

    /// Critical exponent of a lattice, `k + d - 2`.
    pub fn critical_exponent(&self) -> f64 {
        (self.dim() + self.d() - 2) as f64
    }

    /// Sign of the Hermitian form on coordinate `i`.
    #[inline]
    pub fn sign(&self, i: usize) -> f64 {
        if i == self.p {
            -1.0
        } else {
            1.0
        }
    }

    pub fn ensure_same(&self, other: &Space) -> Result<()> {
        if self != other {
            return Err(Error::SpaceMismatch {
                expected: self.to_string(),
                found: other.to_string(),
            });
        }
        Ok(())
    }

    /// Whether `self` embeds totally geodesically into `target` by zero padding.
    pub fn embeds_into(&self, target: &Space) -> bool {
        self.algebra == target.algebra && self.p <= target.p
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.algebra {
            ScalarAlgebra::Complex => write!(f, "CH^{}", self.p),
            ScalarAlgebra::Quaternion => write!(f, "HH^{}", self.p),
        }
    }
}
