//! Complex and quaternionic hyperbolic spaces in the projective model.
//!
//! Points are negative lines of the signature-(p,1) Hermitian form, stored as
//! canonical representatives: `⟨z, z⟩ = -1` and the last coordinate real
//! positive. The metric is normalized by `cosh d(x, y) = |⟨x, y⟩|`, which pins
//! the sectional curvature to `[-4, -1]`. Tangent vectors at `x` are
//! horizontal lifts `v` with `⟨v, x⟩ = 0`, and the Riemannian metric is
//! `g(u, v) = Re⟨u, v⟩`.

use nalgebra::{DMatrix, DVector};

use crate::algebra::Space;
use crate::error::{Error, Result};
use crate::hvec::HVec;
use crate::quat::Quat;

/// Tolerance on `⟨rep, rep⟩ = -1` for interior points.
pub const POINT_TOL: f64 = 1e-12;
/// Tolerance on the null condition of normalized boundary representatives.
pub const NULL_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    space: Space,
    rep: HVec,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryPoint {
    space: Space,
    rep: HVec,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    base: Point,
    vec: HVec,
}

fn check_len(space: &Space, v: &HVec) -> Result<()> {
    if v.len() != space.coords() {
        return Err(Error::InvalidSpace(format!(
            "{space} needs {} coordinates, got {}",
            space.coords(),
            v.len()
        )));
    }
    if !v.iter().all(|&q| space.algebra().contains(q, 0.0)) {
        return Err(Error::InvalidSpace(format!("coordinates outside the {} algebra", space.algebra())));
    }
    Ok(())
}

/// Right unit scalar making `q · phase` real positive.
fn phase_to_positive(q: Quat) -> Quat {
    let n = q.norm();
    if n == 0.0 {
        Quat::ONE
    } else {
        q.conj() * (1.0 / n)
    }
}

/// Scale `raw` to unit negative norm and fix the phase of the last coordinate.
pub fn normalize_point(space: Space, raw: &HVec) -> Result<Point> {
    check_len(&space, raw)?;
    let n2 = raw.form_norm();
    if !(n2 < 0.0) {
        return Err(Error::NonNegativeNorm(n2));
    }
    let last = raw[space.coords() - 1];
    let rep = raw.mul_right(phase_to_positive(last) * (1.0 / (-n2).sqrt()));
    Ok(Point { space, rep })
}

impl Space {
    /// The base point `O = (0, …, 0, 1)`.
    pub fn origin(&self) -> Point {
        Point {
            space: *self,
            rep: HVec::basis(self.coords(), self.coords() - 1, Quat::ONE),
        }
    }
}

impl Point {
    pub fn new(space: Space, raw: HVec) -> Result<Self> {
        normalize_point(space, &raw)
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn rep(&self) -> &HVec {
        &self.rep
    }

    /// Whether the two points agree as projective classes.
    pub fn approx_eq(&self, other: &Point, tol: f64) -> bool {
        self.space == other.space && distance(self, other) <= tol
    }

    /// Image under the totally geodesic inclusion obtained by zero padding.
    pub fn embed(&self, target: &Space) -> Result<Point> {
        Ok(Point {
            space: *target,
            rep: embed_vec(&self.space, target, &self.rep)?,
        })
    }
}

fn embed_vec(source: &Space, target: &Space, v: &HVec) -> Result<HVec> {
    if !source.embeds_into(target) {
        return Err(Error::SpaceMismatch {
            expected: format!("a space containing {source}"),
            found: target.to_string(),
        });
    }
    let mut out = HVec::zeros(target.coords());
    for i in 0..source.rank() {
        out[i] = v[i];
    }
    out[target.coords() - 1] = v[source.coords() - 1];
    Ok(out)
}

impl BoundaryPoint {
    /// Canonical representative: unit Euclidean norm, last coordinate real
    /// positive (it then equals `1/√2`).
    pub fn new(space: Space, raw: HVec) -> Result<Self> {
        check_len(&space, &raw)?;
        let e = raw.euclid_norm();
        if e == 0.0 || !e.is_finite() {
            return Err(Error::ZeroVector);
        }
        let nullity = raw.form_norm() / (e * e);
        if nullity.abs() > NULL_TOL {
            return Err(Error::NotNull(nullity));
        }
        let last = raw[space.coords() - 1];
        let rep = raw.mul_right(phase_to_positive(last) * (1.0 / e));
        Ok(BoundaryPoint { space, rep })
    }

    /// Endpoint of the ray from `O` with initial direction `dir ∈ 𝔽^p`.
    pub fn from_direction(space: Space, dir: &[Quat]) -> Result<Self> {
        if dir.len() != space.rank() {
            return Err(Error::InvalidSpace(format!("direction needs {} entries", space.rank())));
        }
        let n = dir.iter().map(|q| q.norm_sqr()).sum::<f64>().sqrt();
        if n == 0.0 {
            return Err(Error::ZeroVector);
        }
        let mut v = HVec::zeros(space.coords());
        for (i, &q) in dir.iter().enumerate() {
            v[i] = q * (1.0 / n);
        }
        v[space.rank()] = Quat::ONE;
        BoundaryPoint::new(space, v)
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn rep(&self) -> &HVec {
        &self.rep
    }

    /// Unit direction in `𝔽^p` seen from `O`.
    pub fn direction(&self) -> Vec<Quat> {
        let s = 1.0 / self.rep[self.space.coords() - 1].re;
        self.rep.0[..self.space.rank()].iter().map(|&q| q * s).collect()
    }

    /// Chordal distance of the visual directions from `O`, in `[0, 2]`.
    pub fn chordal(&self, other: &BoundaryPoint) -> f64 {
        let a = self.direction();
        let b = other.direction();
        a.iter().zip(&b).map(|(&x, &y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn approx_eq(&self, other: &BoundaryPoint, tol: f64) -> bool {
        self.space == other.space && self.chordal(other) <= tol
    }

    pub fn embed(&self, target: &Space) -> Result<BoundaryPoint> {
        Ok(BoundaryPoint {
            space: *target,
            rep: embed_vec(&self.space, target, &self.rep)?,
        })
    }

    /// The opposite endpoint of the geodesic through `O` and `self`.
    pub fn antipode(&self) -> BoundaryPoint {
        let mut rep = self.rep.clone();
        for i in 0..self.space.rank() {
            rep[i] = -rep[i];
        }
        BoundaryPoint { space: self.space, rep }
    }
}

impl TangentVector {
    /// Horizontal projection of an ambient vector onto `T_base X`.
    pub fn from_ambient(base: &Point, w: &HVec) -> TangentVector {
        let mut vec = w.clone();
        let c = w.form(&base.rep);
        vec.add_mul_right(&base.rep, c);
        TangentVector { base: base.clone(), vec }
    }

    pub fn zero(base: &Point) -> TangentVector {
        TangentVector {
            base: base.clone(),
            vec: HVec::zeros(base.space.coords()),
        }
    }

    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn vec(&self) -> &HVec {
        &self.vec
    }

    /// Riemannian inner product `Re⟨u, v⟩`.
    pub fn inner(&self, other: &TangentVector) -> f64 {
        self.vec.re_form(&other.vec)
    }

    pub fn norm(&self) -> f64 {
        self.vec.form_norm().max(0.0).sqrt()
    }

    pub fn scale(&self, s: f64) -> TangentVector {
        TangentVector {
            base: self.base.clone(),
            vec: self.vec.scale(s),
        }
    }

    pub fn add(&self, other: &TangentVector) -> TangentVector {
        TangentVector {
            base: self.base.clone(),
            vec: &self.vec + &other.vec,
        }
    }

    /// Right multiplication by a unit imaginary scalar: a structure operator.
    pub fn mul_right(&self, q: Quat) -> TangentVector {
        TangentVector {
            base: self.base.clone(),
            vec: self.vec.mul_right(q),
        }
    }

    pub fn unit(&self) -> Result<TangentVector> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(self.scale(1.0 / n))
    }

    pub fn embed(&self, target: &Space) -> Result<TangentVector> {
        Ok(TangentVector {
            base: self.base.embed(target)?,
            vec: embed_vec(&self.base.space, target, &self.vec)?,
        })
    }
}

/// Representative of `y` rotated so that `⟨y', x⟩` is real and negative.
fn aligned(x: &Point, y: &Point) -> (HVec, f64) {
    let a = y.rep.form(&x.rep);
    let an = a.norm();
    let q = a.conj() * (-1.0 / an);
    (y.rep.mul_right(q), an)
}

/// Riemannian distance; `cosh d = |⟨x, y⟩|`.
pub fn distance(x: &Point, y: &Point) -> f64 {
    let (y1, an) = aligned(x, y);
    if an > 2.0 {
        return an.acosh();
    }
    let w = &y1 - &x.rep;
    // ⟨w, w⟩ = 4 sinh²(d/2), free of cancellation for nearby points
    let s = w.form_norm().max(0.0);
    2.0 * (s.sqrt() / 2.0).asinh()
}

/// Unit-speed geodesic `t ↦ x cosh t + v sinh t`; `v` must be a unit tangent at `x`.
pub fn geodesic(x: &Point, v: &TangentVector, t: f64) -> Point {
    let mut rep = x.rep.scale(t.cosh());
    rep.axpy(t.sinh(), &v.vec);
    normalize_point(x.space, &rep).expect("geodesic stays inside the ball")
}

/// `exp_x(t·v)` for a unit tangent `v`.
pub fn exp_map(x: &Point, v: &TangentVector, t: f64) -> Point {
    geodesic(x, v, t)
}

/// `exp_x(v)` for an arbitrary tangent vector.
pub fn exp(v: &TangentVector) -> Point {
    let t = v.norm();
    if t == 0.0 {
        return v.base.clone();
    }
    geodesic(&v.base, &v.scale(1.0 / t), t)
}

/// Inverse of `exp`; the zero tangent for `y = x`.
pub fn log_map(x: &Point, y: &Point) -> TangentVector {
    let (y1, _) = aligned(x, y);
    let w = &y1 - &x.rep;
    let d = 2.0 * (w.form_norm().max(0.0).sqrt() / 2.0).asinh();
    let h = TangentVector::from_ambient(x, &w);
    let hn = h.norm();
    if hn == 0.0 || d == 0.0 {
        return TangentVector::zero(x);
    }
    h.scale(d / hn)
}

/// Busemann function normalized at `base`:
/// `B_base(x, θ) = log|⟨x, θ⟩| - log|⟨base, θ⟩|`.
pub fn busemann(x: &Point, theta: &BoundaryPoint, base: &Point) -> f64 {
    x.rep.form(&theta.rep).norm().ln() - base.rep.form(&theta.rep).norm().ln()
}

/// Riemannian gradient of `x ↦ B(x, θ)`: `x + θ a / |a|²` with `a = ⟨x, θ⟩`.
/// It is the unit vector pointing away from `θ`.
pub fn busemann_gradient(x: &Point, theta: &BoundaryPoint) -> TangentVector {
    let a = x.rep.form(&theta.rep);
    let mut vec = x.rep.clone();
    vec.add_mul_right(&theta.rep, a * (1.0 / a.norm_sqr()));
    TangentVector {
        base: x.clone(),
        vec,
    }
}

/// `dB(u) = g(∇B, u)`.
pub fn busemann_differential(x: &Point, theta: &BoundaryPoint, u: &TangentVector) -> f64 {
    busemann_gradient(x, theta).inner(u)
}

/// Unit-speed ray from `x` towards `θ`.
pub fn geodesic_ray_to_boundary(x: &Point, theta: &BoundaryPoint, t: f64) -> Point {
    let u = busemann_gradient(x, theta).scale(-1.0);
    geodesic(x, &u, t)
}

/// `d(x, γ(t))` for the unit-speed ray `γ` from `base` towards `θ`, from
/// `⟨x, γ(t)⟩ = cosh t ⟨x, base⟩ + sinh t ⟨x, u⟩`. Stays accurate for large
/// `t`, where the coordinates of `γ(t)` no longer carry its position.
pub fn ray_distance(x: &Point, base: &Point, theta: &BoundaryPoint, t: f64) -> f64 {
    let u = busemann_gradient(base, theta).scale(-1.0);
    let a = x.rep.form(&base.rep) * t.cosh() + x.rep.form(&u.vec) * t.sinh();
    a.norm().max(1.0).acosh()
}

/// Busemann Hessian in the frame at `x`:
/// `∇dB = I - dB ⊗ dB + Σ_i dB∘J_i ⊗ dB∘J_i`, spectrum `{0, 1^(k-d), 2^(d-1)}`.
pub fn busemann_hessian(x: &Point, theta: &BoundaryPoint) -> DMatrix<f64> {
    let frame = Frame::at(x);
    busemann_hessian_in(&frame, &busemann_gradient(x, theta))
}

/// Hessian assembled from a precomputed gradient and frame.
pub fn busemann_hessian_in(frame: &Frame, grad: &TangentVector) -> DMatrix<f64> {
    let k = frame.dim();
    let a = frame.coords(grad);
    let mut h = DMatrix::identity(k, k);
    h.ger(-1.0, &a, &a, 1.0);
    for &q in frame.base.space.algebra().imaginary_units() {
        let r = frame.coords(&grad.mul_right(q));
        h.ger(1.0, &r, &r, 1.0);
    }
    h
}

/// Density of the Riemannian volume in geodesic polar coordinates,
/// `sinh(t)^(k-d) · (sinh(2t)/2)^(d-1)`.
pub fn polar_volume_density(space: &Space, t: f64) -> f64 {
    log_polar_volume_density(space, t).exp()
}

pub fn log_polar_volume_density(space: &Space, t: f64) -> f64 {
    let (k, d) = (space.dim() as f64, space.d() as f64);
    (k - d) * ln_sinh(t) + (d - 1.0) * (ln_sinh(2.0 * t) - std::f64::consts::LN_2)
}

fn ln_sinh(t: f64) -> f64 {
    if t > 20.0 {
        t - std::f64::consts::LN_2 + (-(-2.0 * t).exp()).ln_1p()
    } else {
        t.sinh().ln()
    }
}

/// Orthonormal frame of `T_x X`: the standard frame `e_i·a` at `O` carried by
/// the transvection from `O` to `x`. Deterministic and smooth in `x`.
#[derive(Clone, Debug)]
pub struct Frame {
    base: Point,
    vectors: Vec<HVec>,
}

impl Frame {
    pub fn at(x: &Point) -> Frame {
        let space = x.space;
        let n = space.coords();
        let p = space.rank();
        let c = x.rep[p].re;
        let v = &x.rep.0[..p];
        let mut vectors = Vec::with_capacity(space.dim());
        for i in 0..p {
            let vi = v[i].conj();
            let mut col = HVec::zeros(n);
            col[i] = Quat::ONE;
            for l in 0..p {
                col[l] += v[l] * vi * (1.0 / (1.0 + c));
            }
            col[p] = vi;
            for &a in space.algebra().units() {
                vectors.push(col.mul_right(a));
            }
        }
        Frame {
            base: x.clone(),
            vectors,
        }
    }

    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn vector(&self, a: usize) -> TangentVector {
        TangentVector {
            base: self.base.clone(),
            vec: self.vectors[a].clone(),
        }
    }

    pub fn coords(&self, v: &TangentVector) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.vectors.iter().map(|f| f.re_form(&v.vec)))
    }

    pub fn tangent(&self, c: &DVector<f64>) -> TangentVector {
        let mut vec = HVec::zeros(self.base.space.coords());
        for (f, &ci) in self.vectors.iter().zip(c.iter()) {
            vec.axpy(ci, f);
        }
        TangentVector {
            base: self.base.clone(),
            vec,
        }
    }
}

/// Matrices of `J_i: v ↦ v·q_i` in the frame at a point.
#[derive(Clone, Debug)]
pub struct StructureOperators {
    pub mats: Vec<DMatrix<f64>>,
}

pub fn structure_operators(x: &Point) -> StructureOperators {
    structure_operators_in(&Frame::at(x))
}

pub fn structure_operators_in(frame: &Frame) -> StructureOperators {
    let k = frame.dim();
    let mats = frame
        .base
        .space
        .algebra()
        .imaginary_units()
        .iter()
        .map(|&q| {
            let mut m = DMatrix::zeros(k, k);
            for b in 0..k {
                let jb = frame.vector(b).mul_right(q);
                let col = frame.coords(&jb);
                m.set_column(b, &col);
            }
            m
        })
        .collect();
    StructureOperators { mats }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spaces() -> [Space; 3] {
        [Space::complex(2), Space::complex(3), Space::quaternionic(2)]
    }

    fn real_axis(space: Space, t: f64) -> Point {
        let mut v = HVec::zeros(space.coords());
        v[0] = Quat::real(t.sinh());
        v[space.rank()] = Quat::real(t.cosh());
        Point::new(space, v).unwrap()
    }

    #[test]
    fn normalize_examples() {
        let s = Space::complex(2);
        let o = s.origin();
        assert_eq!(normalize_point(s, o.rep()).unwrap(), o);
        let mut two = HVec::zeros(3);
        two[2] = Quat::real(2.0);
        assert_eq!(normalize_point(s, &two).unwrap(), o);
        let mut z = HVec::zeros(3);
        z[0] = Quat::ONE;
        z[2] = Quat::real(2f64.sqrt());
        assert!((z.form_norm() + 1.0).abs() < 1e-15);
        let p = normalize_point(s, &z).unwrap();
        assert!((p.rep().form_norm() + 1.0).abs() < 1e-12);
        let mut bad = HVec::zeros(3);
        bad[0] = Quat::ONE;
        bad[2] = Quat::ONE;
        assert!(matches!(normalize_point(s, &bad), Err(Error::NonNegativeNorm(_))));
    }

    #[test]
    fn distance_along_real_axis() {
        for space in spaces() {
            let o = space.origin();
            assert_eq!(distance(&o, &o), 0.0);
            for &(s, t) in &[(0.0, 0.7), (-1.2, 0.4), (2.5, 3.75), (0.1, 0.1 + 1e-7)] {
                let d = distance(&real_axis(space, s), &real_axis(space, t));
                assert!((d - (s - t).abs()).abs() < 1e-12, "{d} vs {}", (s - t).abs());
            }
        }
    }

    #[test]
    fn exp_along_real_direction() {
        for space in spaces() {
            let o = space.origin();
            let e1 = Frame::at(&o).vector(0);
            assert_eq!(exp_map(&o, &e1, 0.0), o);
            for &t in &[0.7, 1.3, 4.0] {
                let x = exp_map(&o, &e1, t);
                let expected = real_axis(space, t);
                assert!((&x.rep - &expected.rep).euclid_norm() < 1e-12);
                assert!((distance(&x, &o) - t).abs() < 1e-12);
                let back = log_map(&o, &x);
                assert!((&back.vec - &e1.scale(t).vec).euclid_norm() < 1e-12);
            }
        }
    }

    #[test]
    fn log_inverts_exp_at_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for space in spaces() {
            for _ in 0..50 {
                let x = sampling::random_point(&mut rng, &space, 2.0);
                let y = sampling::random_point(&mut rng, &space, 2.0);
                let v = log_map(&x, &y);
                assert!((v.norm() - distance(&x, &y)).abs() < 1e-10);
                assert!(v.vec.form(x.rep()).norm() < 1e-10);
                let z = exp(&v);
                assert!(distance(&z, &y) < 1e-9);
            }
            let x = sampling::random_point(&mut rng, &space, 1.0);
            assert_eq!(log_map(&x, &x).norm(), 0.0);
        }
    }

    #[test]
    fn frame_is_orthonormal_and_horizontal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for space in spaces() {
            let x = sampling::random_point(&mut rng, &space, 3.0);
            let f = Frame::at(&x);
            assert_eq!(f.dim(), space.dim());
            for a in 0..f.dim() {
                assert!(f.vectors[a].form(x.rep()).norm() < 1e-10);
                for b in 0..f.dim() {
                    let g = f.vectors[a].re_form(&f.vectors[b]);
                    let want = if a == b { 1.0 } else { 0.0 };
                    assert!((g - want).abs() < 1e-10, "g[{a},{b}] = {g}");
                }
            }
        }
    }

    #[test]
    fn structure_operator_relations() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for space in spaces() {
            let x = sampling::random_point(&mut rng, &space, 2.0);
            let ops = structure_operators(&x);
            assert_eq!(ops.mats.len(), space.d() - 1);
            let id = DMatrix::<f64>::identity(space.dim(), space.dim());
            for j in &ops.mats {
                assert!((j * j + &id).norm() < 1e-12);
                assert!((j.transpose() * j - &id).norm() < 1e-12);
                assert!((j.transpose() + j).norm() < 1e-12);
            }
            if ops.mats.len() == 3 {
                let (j1, j2) = (&ops.mats[0], &ops.mats[1]);
                assert!((j1 * j2 + j2 * j1).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn ray_and_busemann_on_real_axis() {
        for space in spaces() {
            let o = space.origin();
            let mut dir = vec![Quat::ZERO; space.rank()];
            dir[0] = Quat::ONE;
            let theta = BoundaryPoint::from_direction(space, &dir).unwrap();
            for &t in &[0.0, 0.5, 2.0, 6.0] {
                let c = geodesic_ray_to_boundary(&o, &theta, t);
                assert!((&c.rep - &real_axis(space, t).rep).euclid_norm() < 1e-9 * t.cosh());
            }
            assert_eq!(busemann(&o, &theta, &o), 0.0);
            let c2 = geodesic_ray_to_boundary(&o, &theta, 2.0);
            assert!((busemann(&c2, &theta, &o) + 2.0).abs() < 1e-12);
            assert!((busemann(&c2, &theta.antipode(), &o) - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_points_away_from_boundary_point() {
        let space = Space::complex(2);
        let o = space.origin();
        let theta = BoundaryPoint::from_direction(space, &[Quat::ONE, Quat::ZERO]).unwrap();
        let g = busemann_gradient(&o, &theta);
        let coords = Frame::at(&o).coords(&g);
        assert!((coords[0] + 1.0).abs() < 1e-15);
        assert!(coords.iter().skip(1).all(|c| c.abs() < 1e-15));
    }

    #[test]
    fn polar_density_positive_and_growth() {
        let s = Space::complex(2);
        for &t in &[1e-3, 0.5, 3.0, 30.0] {
            assert!(polar_volume_density(&s, t) > 0.0);
        }
        // ℂH²: sinh²t · sinh(2t)/2
        let t: f64 = 0.8;
        let want = t.sinh().powi(2) * (2.0 * t).sinh() / 2.0;
        assert!((polar_volume_density(&s, t) - want).abs() < 1e-12 * want);
        assert!((log_polar_volume_density(&s, 40.0) - (4.0 * 40.0 - 4.0 * std::f64::consts::LN_2)).abs() < 1e-9);
    }
}
