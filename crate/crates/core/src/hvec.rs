//! Vectors in the signature-(p,1) Hermitian space.
//!
//! Right vector space: scalars act on the right, matrices on the left. The
//! form is `⟨z, w⟩ = Σ_i ε_i conj(w_i) z_i` with `ε = (1, …, 1, -1)`, so
//! `⟨z a, w b⟩ = conj(b) ⟨z, w⟩ a`.

use std::ops::{Add, Index, IndexMut, Sub};

use crate::quat::Quat;

#[derive(Clone, Debug, PartialEq)]
pub struct HVec(pub Vec<Quat>);

impl HVec {
    pub fn zeros(n: usize) -> Self {
        HVec(vec![Quat::ZERO; n])
    }

    /// Basis vector `e_i · a`.
    pub fn basis(n: usize, i: usize, a: Quat) -> Self {
        let mut v = HVec::zeros(n);
        v.0[i] = a;
        v
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Quat> {
        self.0.iter()
    }

    /// Hermitian form `⟨self, other⟩` of signature (n-1, 1).
    pub fn form(&self, other: &HVec) -> Quat {
        let n = self.len();
        let mut acc = Quat::ZERO;
        for i in 0..n - 1 {
            acc += other.0[i].conj() * self.0[i];
        }
        acc - other.0[n - 1].conj() * self.0[n - 1]
    }

    /// `⟨v, v⟩`, always real.
    pub fn form_norm(&self) -> f64 {
        let n = self.len();
        let pos: f64 = self.0[..n - 1].iter().map(|q| q.norm_sqr()).sum();
        pos - self.0[n - 1].norm_sqr()
    }

    /// Real part of the form; the Riemannian metric on horizontal vectors.
    pub fn re_form(&self, other: &HVec) -> f64 {
        let n = self.len();
        let mut acc = 0.0;
        for i in 0..n - 1 {
            acc += self.0[i].dot(other.0[i]);
        }
        acc - self.0[n - 1].dot(other.0[n - 1])
    }

    pub fn euclid_norm(&self) -> f64 {
        self.0.iter().map(|q| q.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn mul_right(&self, a: Quat) -> HVec {
        HVec(self.0.iter().map(|&z| z * a).collect())
    }

    pub fn scale(&self, s: f64) -> HVec {
        HVec(self.0.iter().map(|&z| z * s).collect())
    }

    /// `self += other · a`.
    pub fn add_mul_right(&mut self, other: &HVec, a: Quat) {
        for (z, &w) in self.0.iter_mut().zip(&other.0) {
            *z += w * a;
        }
    }

    /// `self += other · s`.
    pub fn axpy(&mut self, s: f64, other: &HVec) {
        for (z, &w) in self.0.iter_mut().zip(&other.0) {
            *z += w * s;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|q| q.is_finite())
    }
}

impl Index<usize> for HVec {
    type Output = Quat;
    fn index(&self, i: usize) -> &Quat {
        &self.0[i]
    }
}

impl IndexMut<usize> for HVec {
    fn index_mut(&mut self, i: usize) -> &mut Quat {
        &mut self.0[i]
    }
}

impl Add for &HVec {
    type Output = HVec;
    fn add(self, o: &HVec) -> HVec {
        HVec(self.0.iter().zip(&o.0).map(|(&a, &b)| a + b).collect())
    }
}

impl Sub for &HVec {
    type Output = HVec;
    fn sub(self, o: &HVec) -> HVec {
        HVec(self.0.iter().zip(&o.0).map(|(&a, &b)| a - b).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sesquilinearity_over_quaternions() {
        let z = HVec(vec![Quat::new(0.3, -1.0, 0.2, 0.5), Quat::new(1.1, 0.4, -0.7, 0.0), Quat::new(2.0, 0.1, 0.3, -0.2)]);
        let w = HVec(vec![Quat::new(-0.5, 0.2, 0.9, 0.1), Quat::new(0.0, 1.0, 0.3, 0.8), Quat::new(1.5, -0.3, 0.0, 0.4)]);
        let a = Quat::new(0.2, 0.7, -0.4, 1.3);
        let b = Quat::new(-1.0, 0.1, 0.6, 0.2);
        let lhs = z.mul_right(a).form(&w.mul_right(b));
        let rhs = b.conj() * z.form(&w) * a;
        assert!((lhs - rhs).norm() < 1e-12);
        assert!((z.form(&w).conj() - w.form(&z)).norm() < 1e-12);
        assert!((z.form_norm() - z.form(&z).re).abs() < 1e-12);
        assert!(z.form(&z).i.abs() < 1e-12);
    }
}
