//! Seeded random generation of scalars, points, boundary points and isometries.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::algebra::{ScalarAlgebra, Space};
use crate::geometry::{exp_map, BoundaryPoint, Frame, Point, TangentVector};
use crate::hvec::HVec;
use crate::isometry::{transvection, Isometry};
use crate::qmatrix::QMatrix;
use crate::quat::Quat;

pub fn gaussian_scalar<R: Rng + ?Sized>(rng: &mut R, algebra: ScalarAlgebra) -> Quat {
    let mut c = [0.0; 4];
    for x in c.iter_mut().take(algebra.d()) {
        *x = rng.sample(StandardNormal);
    }
    Quat::from_components(c)
}

pub fn random_unit_scalar<R: Rng + ?Sized>(rng: &mut R, algebra: ScalarAlgebra) -> Quat {
    loop {
        let q = gaussian_scalar(rng, algebra);
        if q.norm() > 1e-6 {
            return q.unit();
        }
    }
}

/// Uniform unit vector in `𝔽^n ≅ ℝ^{dn}`.
pub fn random_direction<R: Rng + ?Sized>(rng: &mut R, algebra: ScalarAlgebra, n: usize) -> Vec<Quat> {
    loop {
        let v: Vec<Quat> = (0..n).map(|_| gaussian_scalar(rng, algebra)).collect();
        let nrm = v.iter().map(|q| q.norm_sqr()).sum::<f64>().sqrt();
        if nrm > 1e-6 {
            return v.into_iter().map(|q| q * (1.0 / nrm)).collect();
        }
    }
}

/// Boundary point with uniformly distributed visual direction from `O`.
pub fn random_boundary<R: Rng + ?Sized>(rng: &mut R, space: &Space) -> BoundaryPoint {
    let dir = random_direction(rng, space.algebra(), space.rank());
    BoundaryPoint::from_direction(*space, &dir).expect("unit direction")
}

/// Uniform unit tangent vector at `x`.
pub fn random_unit_tangent<R: Rng + ?Sized>(rng: &mut R, x: &Point) -> TangentVector {
    let frame = Frame::at(x);
    let k = frame.dim();
    loop {
        let c = nalgebra::DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = c.norm();
        if n > 1e-6 {
            return frame.tangent(&(c / n));
        }
    }
}

/// Point at distance uniform in `[0, radius]` from `O` in a uniform direction.
pub fn random_point<R: Rng + ?Sized>(rng: &mut R, space: &Space, radius: f64) -> Point {
    let o = space.origin();
    let v = random_unit_tangent(rng, &o);
    let t = radius * rng.random::<f64>();
    exp_map(&o, &v, t)
}

/// Random unitary `n×n` matrix over the algebra: Gram–Schmidt on Gaussian columns.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, algebra: ScalarAlgebra, n: usize) -> QMatrix {
    loop {
        let mut cols: Vec<HVec> = Vec::with_capacity(n);
        let mut ok = true;
        for _ in 0..n {
            let mut c = HVec((0..n).map(|_| gaussian_scalar(rng, algebra)).collect());
            for u in &cols {
                let proj: Quat = u.iter().zip(c.iter()).map(|(&a, &b)| a.conj() * b).sum();
                c.add_mul_right(u, -proj);
            }
            let nrm = c.euclid_norm();
            if nrm < 1e-6 {
                ok = false;
                break;
            }
            cols.push(c.scale(1.0 / nrm));
        }
        if ok {
            return QMatrix::from_columns(&cols);
        }
    }
}

/// `τ ∘ k` with `k` a random element of the stabilizer of `O` and `τ` the
/// transvection from `O` to a random point within `radius`.
pub fn random_isometry<R: Rng + ?Sized>(rng: &mut R, space: &Space, radius: f64) -> Isometry {
    let u = random_unitary(rng, space.algebra(), space.rank());
    let phase = random_unit_scalar(rng, space.algebra());
    let k = Isometry::stabilizer(*space, &u, phase).expect("unitary block");
    let y = random_point(rng, space, radius);
    let t = transvection(&space.origin(), &y).expect("same space");
    t.compose(&k).expect("same space")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::distance;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn samples_are_canonical() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for space in [Space::complex(2), Space::quaternionic(3)] {
            for _ in 0..50 {
                let x = random_point(&mut rng, &space, 3.0);
                assert!((x.rep().form_norm() + 1.0).abs() < 1e-12);
                assert!(distance(&space.origin(), &x) <= 3.0 + 1e-12);
                let th = random_boundary(&mut rng, &space);
                assert!(th.rep().form_norm().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for alg in [ScalarAlgebra::Complex, ScalarAlgebra::Quaternion] {
            let u = random_unitary(&mut rng, alg, 4);
            let e = (&u.conj_transpose() * &u).sub(&QMatrix::identity(4)).frobenius();
            assert!(e < 1e-12);
            assert!(u.in_algebra(alg, 0.0));
        }
    }
}
