//! Isometries as form-preserving matrices in `U(p,1)` / `Sp(p,1)`.
//!
//! Matrices are declared representatives; two matrices act identically on
//! `X^p` iff they differ by a central unit scalar (unit complex numbers in the
//! complex case, `±1` in the quaternionic case).

use nalgebra::{DMatrix, Schur};
use serde::{Deserialize, Serialize};

use crate::algebra::{ScalarAlgebra, Space};
use crate::error::{Error, Result};
use crate::geometry::{distance, log_map, normalize_point, BoundaryPoint, Point, TangentVector};
use crate::hvec::HVec;
use crate::qmatrix::QMatrix;
use crate::quat::Quat;

/// Tolerance on `A^* J A = J`, relative to `max(1, ‖A‖²)`.
pub const FORM_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct Isometry {
    space: Space,
    mat: QMatrix,
}

/// `A^* J A - J` measured in Frobenius norm.
fn form_defect(space: &Space, a: &QMatrix) -> f64 {
    let n = space.coords();
    let signs: Vec<f64> = (0..n).map(|i| space.sign(i)).collect();
    let mut defect = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut acc = Quat::ZERO;
            for l in 0..n {
                acc += a[(l, i)].conj() * a[(l, j)] * signs[l];
            }
            if i == j {
                acc -= Quat::real(signs[i]);
            }
            defect += acc.norm_sqr();
        }
    }
    defect.sqrt()
}

impl Isometry {
    pub fn new(space: Space, mat: QMatrix) -> Result<Self> {
        if mat.n() != space.coords() {
            return Err(Error::InvalidMatrix(format!(
                "{space} needs {0}x{0} matrices, got {1}x{1}",
                space.coords(),
                mat.n()
            )));
        }
        if !mat.is_finite() || !mat.in_algebra(space.algebra(), 0.0) {
            return Err(Error::InvalidMatrix(format!("entries must be finite {} scalars", space.algebra())));
        }
        let scale = mat.frobenius().powi(2).max(1.0);
        let defect = form_defect(&space, &mat) / scale;
        if defect > FORM_TOL {
            return Err(Error::NotFormPreserving(defect));
        }
        Ok(Isometry { space, mat })
    }

    pub fn identity(space: Space) -> Self {
        Isometry {
            space,
            mat: QMatrix::identity(space.coords()),
        }
    }

    /// Element `diag(U, phase)` of the stabilizer of `O`.
    pub fn stabilizer(space: Space, unitary: &QMatrix, phase: Quat) -> Result<Self> {
        let p = space.rank();
        if unitary.n() != p {
            return Err(Error::InvalidMatrix(format!("compact block must be {p}x{p}")));
        }
        check_unitary(space.algebra(), unitary)?;
        let mut m = QMatrix::zeros(space.coords());
        for i in 0..p {
            for j in 0..p {
                m[(i, j)] = unitary[(i, j)];
            }
        }
        m[(p, p)] = phase.unit();
        Isometry::new(space, m)
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn mat(&self) -> &QMatrix {
        &self.mat
    }

    pub fn form_defect(&self) -> f64 {
        form_defect(&self.space, &self.mat)
    }

    /// `A^{-1} = J A^* J`.
    pub fn inverse(&self) -> Isometry {
        let signs: Vec<f64> = (0..self.space.coords()).map(|i| self.space.sign(i)).collect();
        Isometry {
            space: self.space,
            mat: self.mat.conj_transpose().sandwich_diag(&signs),
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Isometry) -> Result<Isometry> {
        self.space.ensure_same(&other.space)?;
        Ok(Isometry {
            space: self.space,
            mat: &self.mat * &other.mat,
        })
    }

    pub fn power(&self, n: u32) -> Isometry {
        let mut out = Isometry::identity(self.space);
        for _ in 0..n {
            out.mat = &out.mat * &self.mat;
        }
        out
    }

    /// `h ∘ self ∘ h⁻¹`.
    pub fn conjugate_by(&self, h: &Isometry) -> Result<Isometry> {
        h.compose(self)?.compose(&h.inverse())
    }

    pub fn apply_point(&self, x: &Point) -> Result<Point> {
        self.space.ensure_same(&x.space())?;
        normalize_point(self.space, &self.mat.apply(x.rep()))
    }

    pub fn apply_boundary(&self, theta: &BoundaryPoint) -> Result<BoundaryPoint> {
        self.space.ensure_same(&theta.space())?;
        BoundaryPoint::new(self.space, self.mat.apply(theta.rep()))
    }

    /// Differential: `v ↦ (A v)·q` where `q` is the phase that makes `A x` canonical.
    pub fn apply_tangent(&self, v: &TangentVector) -> Result<TangentVector> {
        let x = v.base();
        self.space.ensure_same(&x.space())?;
        let ax = self.mat.apply(x.rep());
        let y = normalize_point(self.space, &ax)?;
        let last = ax[self.space.coords() - 1];
        // ax·q = y with q a unit scalar since the form is preserved
        let q = last.inv() * y.rep()[self.space.coords() - 1];
        let w = self.mat.apply(v.vec()).mul_right(q);
        Ok(TangentVector::from_ambient(&y, &w))
    }

    /// Trace on the declared representative. For quaternionic matrices only the
    /// real part is conjugation invariant, so that is what is returned.
    pub fn trace(&self) -> Quat {
        let t = self.mat.diag_sum();
        match self.space.algebra() {
            ScalarAlgebra::Complex => t,
            ScalarAlgebra::Quaternion => Quat::real(t.re),
        }
    }

    /// Block embedding into a space of the same kind and larger rank.
    pub fn embed(&self, target: &Space) -> Result<Isometry> {
        if !self.space.embeds_into(target) {
            return Err(Error::SpaceMismatch {
                expected: format!("a space containing {}", self.space),
                found: target.to_string(),
            });
        }
        let mut positions: Vec<usize> = (0..self.space.rank()).collect();
        positions.push(target.coords() - 1);
        Isometry::new(*target, self.mat.block_embed(&positions, target.coords()))
    }
}

fn check_unitary(algebra: ScalarAlgebra, m: &QMatrix) -> Result<()> {
    if !m.in_algebra(algebra, 0.0) {
        return Err(Error::NotUnitary(f64::INFINITY));
    }
    let defect = (&m.conj_transpose() * m).sub(&QMatrix::identity(m.n())).frobenius();
    if defect > FORM_TOL {
        return Err(Error::NotUnitary(defect));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IsometryKind {
    Elliptic,
    Parabolic,
    Loxodromic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsometryClass {
    pub kind: IsometryKind,
    pub translation_length: f64,
}

/// Largest eigenvalue modulus of the matrix.
pub fn spectral_radius(g: &Isometry) -> f64 {
    let r = g.mat.real_representation(g.space.algebra());
    match Schur::try_new(r, f64::EPSILON, 10_000) {
        Some(schur) => schur.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max),
        None => {
            // Gelfand's formula on renormalized powers
            let logs = power_log_norms(g, 30);
            ((logs[30] - logs[29]) / 2f64.powi(29)).exp()
        }
    }
}

/// `log ‖A^(2^j)‖_F` for `j = 0..=steps`, by renormalized repeated squaring.
fn power_log_norms(g: &Isometry, steps: usize) -> Vec<f64> {
    let mut m = g.mat.clone();
    let mut out = Vec::with_capacity(steps + 1);
    let n0 = m.frobenius();
    let mut log = n0.ln();
    m = m.scale(1.0 / n0);
    out.push(log);
    for _ in 0..steps {
        let sq = &m * &m;
        let nrm = sq.frobenius();
        log = 2.0 * log + nrm.ln();
        m = sq.scale(1.0 / nrm);
        out.push(log);
    }
    out
}

/// Spectral-radius threshold above which an element is loxodromic outright.
const LOX_EIGEN_BAND: f64 = 1e-3;
/// Squarings used by the growth test. Rounding perturbs unipotent eigenvalues by
/// about `1e-5`, which starts to show in powers beyond roughly `2^11`.
const POWER_STEPS: usize = 11;

pub fn classify(g: &Isometry) -> Result<IsometryClass> {
    let ell = spectral_radius(g).ln().max(0.0);
    if ell > LOX_EIGEN_BAND {
        return Ok(IsometryClass {
            kind: IsometryKind::Loxodromic,
            translation_length: ell,
        });
    }
    // Inside the band, Jordan blocks make eigenvalues unreliable, so the growth
    // of powers decides: bounded, polynomial or exponential.
    let logs = power_log_norms(g, POWER_STEPS);
    let last_step = logs[POWER_STEPS] - logs[POWER_STEPS - 1];
    let early = logs[..=POWER_STEPS / 2].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let growth = logs[POWER_STEPS] - early;
    if growth < 3.0 {
        Ok(IsometryClass {
            kind: IsometryKind::Elliptic,
            translation_length: 0.0,
        })
    } else if growth > 3.8 && last_step < 2.0 {
        Ok(IsometryClass {
            kind: IsometryKind::Parabolic,
            translation_length: 0.0,
        })
    } else {
        Err(Error::Indeterminate(format!(
            "power growth {growth:.3}, last doubling step {last_step:.3}"
        )))
    }
}

/// `ℓ(g) = inf_y d(gy, y)`; the log of the spectral radius for loxodromics and
/// zero otherwise. Indeterminate elements report the spectral estimate.
pub fn translation_length(g: &Isometry) -> f64 {
    match classify(g) {
        Ok(c) => c.translation_length,
        Err(_) => spectral_radius(g).ln().max(0.0),
    }
}

/// The block matrix `α [[cosh(ℓ/2), sinh(ℓ/2)], [sinh(ℓ/2), cosh(ℓ/2)]] ⊕ M`
/// acting on `(e_1, e_{m+1})` and the middle coordinates. Under the
/// curvature-`[-4,-1]` metric it translates by `ℓ/2` along the real axis.
pub fn loxodromic_normal_form(space: Space, lparam: f64, alpha: Quat, m: &QMatrix) -> Result<Isometry> {
    let n = space.coords();
    if m.n() != n - 2 {
        return Err(Error::InvalidMatrix(format!("compact factor must be {0}x{0}", n - 2)));
    }
    if (alpha.norm() - 1.0).abs() > 1e-12 || !space.algebra().contains(alpha, 0.0) {
        return Err(Error::NotUnitary((alpha.norm() - 1.0).abs()));
    }
    check_unitary(space.algebra(), m)?;
    let (c, s) = ((lparam / 2.0).cosh(), (lparam / 2.0).sinh());
    let last = n - 1;
    let mut a = QMatrix::zeros(n);
    a[(0, 0)] = alpha * c;
    a[(0, last)] = alpha * s;
    a[(last, 0)] = alpha * s;
    a[(last, last)] = alpha * c;
    for i in 0..n - 2 {
        for j in 0..n - 2 {
            a[(i + 1, j + 1)] = m[(i, j)];
        }
    }
    Isometry::new(space, a)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceBoundReport {
    pub trace_abs: f64,
    pub length_bound: f64,
    pub holds: bool,
    pub class: Option<IsometryClass>,
}

/// `|Tr g| ≤ 2 cosh(ℓparam/2) + C0` where `ℓparam = 2ℓ(g)` is the normal-form
/// parameter. Non-loxodromic elements use `ℓ = 0`.
pub fn trace_bound_check(g: &Isometry, c0: f64) -> TraceBoundReport {
    let class = classify(g).ok();
    let ell = match class {
        Some(c) if c.kind == IsometryKind::Loxodromic => c.translation_length,
        Some(_) => 0.0,
        None => translation_length(g),
    };
    let trace_abs = g.trace().norm();
    let length_bound = 2.0 * ell.cosh() + c0;
    TraceBoundReport {
        trace_abs,
        length_bound,
        holds: trace_abs <= length_bound + 1e-9 * length_bound.max(1.0),
        class,
    }
}

/// `u w^* J`: the matrix of `z ↦ u ⟨z, w⟩`.
fn form_outer(space: &Space, u: &HVec, w: &HVec) -> QMatrix {
    let n = space.coords();
    let mut m = QMatrix::zeros(n);
    for a in 0..n {
        for b in 0..n {
            m[(a, b)] = u[a] * w[b].conj() * space.sign(b);
        }
    }
    m
}

/// The transvection along the geodesic from `x` to `y`: a boost on the
/// `𝔽`-span of `x` and the unit direction `u`, identity on its complement.
pub fn transvection(x: &Point, y: &Point) -> Result<Isometry> {
    x.space().ensure_same(&y.space())?;
    let space = x.space();
    let d = distance(x, y);
    if d == 0.0 {
        return Ok(Isometry::identity(space));
    }
    // through O there is a closed form free of cancellation
    let o = space.origin();
    if *x == o {
        return Ok(transvection_from_origin(y));
    }
    if *y == o {
        return Ok(transvection_from_origin(x).inverse());
    }
    let u = log_map(x, y).unit()?;
    let (c, s) = (d.cosh(), d.sinh());
    let xx = form_outer(&space, x.rep(), x.rep());
    let uu = form_outer(&space, u.vec(), u.vec());
    let ux = form_outer(&space, u.vec(), x.rep());
    let xu = form_outer(&space, x.rep(), u.vec());
    let boost = uu.sub(&xx).scale(c - 1.0).add(&xu.sub(&ux).scale(s));
    Isometry::new(space, QMatrix::identity(space.coords()).add(&boost))
}

/// Boost `cosh r ⊗ sinh r` on the span of `(v, 0)` and `e_{p+1}` where
/// `y = (sinh r · v, cosh r)`.
fn transvection_from_origin(y: &Point) -> Isometry {
    let space = y.space();
    let p = space.rank();
    let z = &y.rep().0[..p];
    let s = z.iter().map(|q| q.norm_sqr()).sum::<f64>().sqrt();
    let mut m = QMatrix::identity(space.coords());
    if s == 0.0 {
        return Isometry { space, mat: m };
    }
    let c = (1.0 + s * s).sqrt();
    let v: Vec<Quat> = z.iter().map(|&q| q * (1.0 / s)).collect();
    for i in 0..p {
        for j in 0..p {
            m[(i, j)] += v[i] * v[j].conj() * (c - 1.0);
        }
        m[(i, p)] = v[i] * s;
        m[(p, i)] = v[i].conj() * s;
    }
    m[(p, p)] = Quat::real(c);
    Isometry { space, mat: m }
}

/// Distance between projective classes: `min_λ ‖A - λB‖_F` over central unit scalars.
pub fn projective_distance(algebra: ScalarAlgebra, a: &QMatrix, b: &QMatrix) -> f64 {
    match algebra {
        ScalarAlgebra::Complex => {
            // the optimal phase aligns B with A; evaluating the difference avoids cancellation
            let c = a.complex_inner(b);
            let lambda = if c.norm() > 0.0 { c.unit() } else { Quat::ONE };
            a.sub(&b.left_scale(lambda)).frobenius()
        }
        ScalarAlgebra::Quaternion => a.sub(b).frobenius().min(a.add(b).frobenius()),
    }
}

/// Named generators of `ρ: Γ → G_m`.
#[derive(Clone, Debug, PartialEq)]
pub struct Representation {
    source: Space,
    target: Space,
    generators: Vec<(String, Isometry)>,
}

impl Representation {
    pub fn new(source: Space, target: Space, generators: Vec<(String, Isometry)>) -> Result<Self> {
        if !source.embeds_into(&target) {
            return Err(Error::SpaceMismatch {
                expected: format!("a target of the same kind as {source} with m >= p"),
                found: target.to_string(),
            });
        }
        for (i, (name, g)) in generators.iter().enumerate() {
            target.ensure_same(&g.space)?;
            if generators[..i].iter().any(|(n, _)| n == name) {
                return Err(Error::GeneratorMismatch(format!("duplicate generator {name}")));
            }
        }
        Ok(Representation {
            source,
            target,
            generators,
        })
    }

    pub fn source(&self) -> Space {
        self.source
    }

    pub fn target(&self) -> Space {
        self.target
    }

    pub fn generators(&self) -> &[(String, Isometry)] {
        &self.generators
    }

    pub fn get(&self, name: &str) -> Option<&Isometry> {
        self.generators.iter().find(|(n, _)| n == name).map(|(_, g)| g)
    }
}

/// `γ ↦ g γ g⁻¹` on every generator.
pub fn conjugate_representation(rho: &Representation, g: &Isometry) -> Result<Representation> {
    rho.target.ensure_same(&g.space)?;
    let generators = rho
        .generators
        .iter()
        .map(|(n, h)| Ok((n.clone(), h.conjugate_by(g)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Representation {
        source: rho.source,
        target: rho.target,
        generators,
    })
}

/// Max over generators of the projective Frobenius distance.
pub fn representation_distance(a: &Representation, b: &Representation) -> Result<f64> {
    a.target.ensure_same(&b.target)?;
    if a.generators.len() != b.generators.len() {
        return Err(Error::GeneratorMismatch("different generator counts".into()));
    }
    let mut worst: f64 = 0.0;
    for (name, g) in &a.generators {
        let h = b
            .get(name)
            .ok_or_else(|| Error::GeneratorMismatch(format!("generator {name} missing")))?;
        worst = worst.max(projective_distance(a.target.algebra(), g.mat(), h.mat()));
    }
    Ok(worst)
}

/// Real matrix of the differential of `g` at `x` in the frames at `x` and `gx`.
pub fn differential_matrix(g: &Isometry, x: &Point) -> Result<DMatrix<f64>> {
    use crate::geometry::Frame;
    let fx = Frame::at(x);
    let gx = g.apply_point(x)?;
    let fgx = Frame::at(&gx);
    let k = fx.dim();
    let mut m = DMatrix::zeros(k, k);
    for b in 0..k {
        let img = g.apply_tangent(&fx.vector(b))?;
        m.set_column(b, &fgx.coords(&img));
    }
    Ok(m)
}
