//! Square matrices over the quaternions acting on the left of `𝔽^n`.

use std::ops::{Index, IndexMut, Mul};

use nalgebra::DMatrix;

use crate::algebra::ScalarAlgebra;
use crate::hvec::HVec;
use crate::quat::Quat;

#[derive(Clone, Debug, PartialEq)]
pub struct QMatrix {
    n: usize,
    data: Vec<Quat>,
}

impl QMatrix {
    pub fn zeros(n: usize) -> Self {
        QMatrix {
            n,
            data: vec![Quat::ZERO; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = QMatrix::zeros(n);
        for i in 0..n {
            m[(i, i)] = Quat::ONE;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Quat>>) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "matrix must be square");
        QMatrix {
            n,
            data: rows.into_iter().flatten().collect(),
        }
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[HVec]) -> Self {
        let n = cols.len();
        let mut m = QMatrix::zeros(n);
        for (j, c) in cols.iter().enumerate() {
            for i in 0..n {
                m[(i, j)] = c[i];
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn column(&self, j: usize) -> HVec {
        HVec((0..self.n).map(|i| self[(i, j)]).collect())
    }

    pub fn rows(&self) -> Vec<Vec<Quat>> {
        self.data.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn conj_transpose(&self) -> Self {
        let mut m = QMatrix::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn apply(&self, v: &HVec) -> HVec {
        let n = self.n;
        HVec(
            (0..n)
                .map(|i| (0..n).map(|j| self[(i, j)] * v[j]).sum())
                .collect(),
        )
    }

    /// Multiply every entry on the left by `q`.
    pub fn left_scale(&self, q: Quat) -> Self {
        QMatrix {
            n: self.n,
            data: self.data.iter().map(|&a| q * a).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        QMatrix {
            n: self.n,
            data: self.data.iter().map(|&a| a * s).collect(),
        }
    }

    /// Scale row and column `i` by `s_i` on both sides: `diag(s)·A·diag(s)`.
    pub fn sandwich_diag(&self, s: &[f64]) -> Self {
        let mut m = self.clone();
        for i in 0..self.n {
            for j in 0..self.n {
                m[(i, j)] = self[(i, j)] * (s[i] * s[j]);
            }
        }
        m
    }

    pub fn sub(&self, other: &QMatrix) -> Self {
        QMatrix {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect(),
        }
    }

    pub fn add(&self, other: &QMatrix) -> Self {
        QMatrix {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect(),
        }
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|q| q.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|q| q.norm()).fold(0.0, f64::max)
    }

    /// Sum of diagonal entries.
    pub fn diag_sum(&self) -> Quat {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    /// Real `<A, B> = Re Σ conj(B_ij) A_ij`.
    pub fn re_inner(&self, other: &QMatrix) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a.dot(*b)).sum()
    }

    /// Complex `Σ conj(B_ij) A_ij`; only meaningful for complex entries.
    pub fn complex_inner(&self, other: &QMatrix) -> Quat {
        self.data.iter().zip(&other.data).map(|(&a, &b)| b.conj() * a).sum()
    }

    pub fn in_algebra(&self, algebra: ScalarAlgebra, tol: f64) -> bool {
        self.data.iter().all(|&q| algebra.contains(q, tol))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|q| q.is_finite())
    }

    /// Real matrix of `v ↦ A v` on `𝔽^n ≅ ℝ^{dn}`.
    pub fn real_representation(&self, algebra: ScalarAlgebra) -> DMatrix<f64> {
        let units = algebra.units();
        let d = units.len();
        let n = self.n;
        let mut r = DMatrix::zeros(d * n, d * n);
        for i in 0..n {
            for j in 0..n {
                let q = self[(i, j)];
                for (b, &u) in units.iter().enumerate() {
                    let img = q * u;
                    let c = img.components();
                    for a in 0..d {
                        r[(d * i + a, d * j + b)] = c[a];
                    }
                }
            }
        }
        r
    }

    /// Embed as the top-left block of a larger matrix, with identity elsewhere.
    pub fn block_embed(&self, positions: &[usize], size: usize) -> QMatrix {
        let mut m = QMatrix::identity(size);
        for (a, &i) in positions.iter().enumerate() {
            for (b, &j) in positions.iter().enumerate() {
                m[(i, j)] = self[(a, b)];
            }
        }
        m
    }
}

impl Index<(usize, usize)> for QMatrix {
    type Output = Quat;
    fn index(&self, (i, j): (usize, usize)) -> &Quat {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for QMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Quat {
        &mut self.data[i * self.n + j]
    }
}

impl Mul for &QMatrix {
    type Output = QMatrix;
    fn mul(self, o: &QMatrix) -> QMatrix {
        let n = self.n;
        let mut m = QMatrix::zeros(n);
        for i in 0..n {
            for l in 0..n {
                let a = self[(i, l)];
                if a == Quat::ZERO {
                    continue;
                }
                for j in 0..n {
                    m.data[i * n + j] += a * o[(l, j)];
                }
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_representation_is_multiplicative() {
        let a = QMatrix::from_rows(vec![
            vec![Quat::new(1.0, 0.5, -0.2, 0.3), Quat::new(0.0, 1.0, 2.0, 0.1)],
            vec![Quat::new(-0.4, 0.0, 0.7, 1.0), Quat::new(0.2, -0.3, 0.0, 0.9)],
        ]);
        let b = QMatrix::from_rows(vec![
            vec![Quat::new(0.3, -1.0, 0.1, 0.0), Quat::new(1.0, 0.2, 0.0, -0.5)],
            vec![Quat::new(0.6, 0.6, -0.6, 0.1), Quat::new(-1.0, 0.0, 0.4, 0.2)],
        ]);
        let alg = ScalarAlgebra::Quaternion;
        let lhs = (&a * &b).real_representation(alg);
        let rhs = a.real_representation(alg) * b.real_representation(alg);
        assert!((lhs - rhs).norm() < 1e-12);
    }
}
