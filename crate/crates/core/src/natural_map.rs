//! The natural map `F(x) = bar(D_* μ_x)` for sampled boundary data, its
//! differential from the implicit equation, the quadratic forms `K, H, H'`,
//! the Jacobian and the determinant chain bounding it.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::Space;
use crate::barycenter::{barycenter, phi_gradient, Location, SolverConfig};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{
    busemann_gradient, distance, exp_map, geodesic, log_map, log_polar_volume_density, structure_operators_in,
    BoundaryPoint, Frame, Point,
};
use crate::hvec::HVec;
use crate::measures::{BoundaryMap, BoundaryMapSample, BoundaryMeasure, ConformalDensity};
use crate::quat::Quat;
use crate::sampling::random_unit_tangent;

/// Smallest admissible eigenvalue of `K`.
pub const K_EIG_FLOOR: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct NaturalMapContext {
    density: ConformalDensity,
    map: BoundaryMapSample,
    delta: f64,
    target: Space,
    solver: SolverConfig,
}

impl NaturalMapContext {
    /// `delta` defaults to `k + d - 2` of the source space.
    pub fn new(density: ConformalDensity, map: BoundaryMapSample, delta: Option<f64>) -> Result<Self> {
        let source = density.space();
        let target = map.target_space();
        source.ensure_same(&map.source())?;
        if !source.embeds_into(&target) {
            return Err(Error::SpaceMismatch {
                expected: format!("a target of the same kind as {source} with m >= p"),
                found: target.to_string(),
            });
        }
        for (t, _) in density.seed().atoms() {
            map.map_boundary(t)?;
        }
        let delta = delta.unwrap_or_else(|| source.critical_exponent());
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::InvalidMeasure(format!("exponent {delta} must be positive")));
        }
        Ok(NaturalMapContext {
            density,
            map,
            delta,
            target,
            solver: SolverConfig {
                grad_tol: 1e-12,
                ..SolverConfig::default()
            },
        })
    }

    pub fn with_solver(mut self, solver: SolverConfig) -> Self {
        self.solver = solver;
        self
    }

    pub fn density(&self) -> &ConformalDensity {
        &self.density
    }

    pub fn map(&self) -> &BoundaryMapSample {
        &self.map
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn source(&self) -> Space {
        self.density.space()
    }

    pub fn target(&self) -> Space {
        self.target
    }

    pub fn solver(&self) -> &SolverConfig {
        &self.solver
    }

    /// `D_* μ_x`.
    pub fn pushed_measure(&self, x: &Point) -> Result<BoundaryMeasure> {
        self.density.density_at(x).pushforward(&self.map)
    }
}

/// The forms at `x` and `F(x)`, assembled from the normalized measure at `x`.
#[derive(Clone, Debug)]
pub struct FormsAt {
    pub x: Point,
    pub fx: Point,
    /// `Σ ŵ ∇dB` at `F(x)`; equals `I - H - Σ J_i H J_i`.
    pub k: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub h_prime: DMatrix<f64>,
    /// `Σ ŵ dB_{F(x)} ⊗ dB_x`, the right-hand side of the implicit equation.
    pub c: DMatrix<f64>,
    /// Structure operators in the frame at `F(x)`.
    pub j_ops: Vec<DMatrix<f64>>,
    /// `‖Σ ŵ ∇B(F(x), D θ_j)‖`.
    pub residual: f64,
    /// Largest atom ratio of the pushed measure.
    pub max_atom_ratio: f64,
    /// Distance of the pushed measure to the nearest Dirac mass.
    pub dirac_distance: f64,
}

impl FormsAt {
    pub fn min_k_eigenvalue(&self) -> f64 {
        self.k.clone().symmetric_eigenvalues().min()
    }
}

pub fn natural_map_point(ctx: &NaturalMapContext, x: &Point) -> Result<Point> {
    ctx.source().ensure_same(&x.space())?;
    let nu = ctx.pushed_measure(x)?;
    let ratio = nu.max_atom_ratio();
    if ratio >= 0.5 {
        return Err(Error::ElementaryData(ratio));
    }
    let r = barycenter(&nu, &ctx.solver)?;
    match r.location {
        Location::Interior(p) => Ok(p),
        Location::Atom(_) => Err(Error::ElementaryData(ratio)),
    }
}

pub fn forms_at(ctx: &NaturalMapContext, x: &Point) -> Result<FormsAt> {
    let fx = natural_map_point(ctx, x)?;
    let mu = ctx.density.density_at(x).normalize();
    let frame_x = Frame::at(x);
    let frame_f = Frame::at(&fx);
    let (k, km) = (frame_x.dim(), frame_f.dim());
    let mut h = DMatrix::zeros(km, km);
    let mut h_prime = DMatrix::zeros(k, k);
    let mut c = DMatrix::zeros(km, k);
    let mut grad_sum = HVec::zeros(fx.space().coords());
    for (t, w) in mu.atoms() {
        let xi = ctx.map.map_boundary(t)?;
        let gf = busemann_gradient(&fx, &xi);
        grad_sum.axpy(*w, gf.vec());
        let a = frame_f.coords(&gf);
        let b = frame_x.coords(&busemann_gradient(x, t));
        h.ger(*w, &a, &a, 1.0);
        h_prime.ger(*w, &b, &b, 1.0);
        c.ger(*w, &a, &b, 1.0);
    }
    let j_ops = structure_operators_in(&frame_f).mats;
    let mut kmat = DMatrix::identity(km, km) - &h;
    for j in &j_ops {
        kmat -= j * &h * j;
    }
    let residual = crate::geometry::TangentVector::from_ambient(&fx, &grad_sum).norm();
    let pushed = ctx.pushed_measure(x)?;
    let forms = FormsAt {
        x: x.clone(),
        fx,
        k: kmat,
        h,
        h_prime,
        c,
        j_ops,
        residual,
        max_atom_ratio: pushed.max_atom_ratio(),
        dirac_distance: pushed.dirac_distance(),
    };
    let min_eig = forms.min_k_eigenvalue();
    if min_eig < K_EIG_FLOOR {
        return Err(Error::DegenerateForms(min_eig));
    }
    Ok(forms)
}

/// `D_x F` in the frames at `x` and `F(x)`: solves `K · DF = δ C`.
#[derive(Clone, Debug)]
pub struct Differential {
    pub forms: FormsAt,
    pub matrix: DMatrix<f64>,
    pub delta: f64,
}

impl Differential {
    pub fn apply(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.matrix * u
    }

    pub fn singular_values(&self) -> DVector<f64> {
        self.matrix.clone().svd(false, false).singular_values
    }

    pub fn operator_norm(&self) -> f64 {
        self.singular_values().max()
    }

    /// `sqrt(det(DFᵀ DF))`, the product of singular values.
    pub fn jacobian(&self) -> f64 {
        self.singular_values().iter().product()
    }
}

pub fn differential(ctx: &NaturalMapContext, x: &Point) -> Result<Differential> {
    let forms = forms_at(ctx, x)?;
    let chol = forms.k.clone().cholesky().ok_or(Error::SingularSystem)?;
    let matrix = chol.solve(&(&forms.c * ctx.delta));
    if !matrix.iter().all(|v| v.is_finite()) {
        return Err(Error::SingularSystem);
    }
    Ok(Differential {
        forms,
        matrix,
        delta: ctx.delta,
    })
}

pub fn jacobian_k(ctx: &NaturalMapContext, x: &Point) -> Result<f64> {
    Ok(differential(ctx, x)?.jacobian())
}

/// Terms of `det(K^V) Jac ≤ δ^k det(H^V)^½ det(H')^½ ≤ δ^k det(H^V)^½ (Tr H'/k)^(k/2) = k^(-k/2) δ^k det(H^V)^½`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub jacobian: f64,
    pub lhs: f64,
    pub mid1: f64,
    pub mid2: f64,
    pub rhs: f64,
    /// `(δ²/k)^(k/2) det(H^V)^½ / det(K^V)`; absent when `D_x F` is rank deficient.
    pub jac_bound: Option<f64>,
    pub det_kv: f64,
    pub det_hv: f64,
    pub det_h_prime: f64,
    pub trace_h: f64,
    pub trace_h_prime: f64,
    pub holds: bool,
    pub rank_deficient: bool,
    /// Whether `V = image(D_x F)` is invariant under the structure operators.
    pub v_invariant: bool,
    pub near_elementary: bool,
}

/// Pushed measures with an atom this heavy, or this close to a Dirac mass,
/// are flagged as nearly elementary.
pub const NEAR_ATOM_RATIO: f64 = 0.45;
pub const NEAR_DIRAC: f64 = 0.05;

/// Relative slack allowed in the ordered inequalities.
pub const CHAIN_SLACK: f64 = 1e-9;

fn le_slack(a: f64, b: f64) -> bool {
    a <= b + CHAIN_SLACK * b.abs().max(1.0)
}

pub fn chain_report(diff: &Differential) -> ChainReport {
    let f = &diff.forms;
    let k = diff.matrix.ncols();
    let kf = k as f64;
    let delta = diff.delta;
    let svd = diff.matrix.clone().svd(true, false);
    let sv = &svd.singular_values;
    let smax = sv.max();
    let rank_deficient = sv.min() <= 1e-12 * smax.max(1e-300);
    let jac: f64 = sv.iter().product();
    let e = svd.u.expect("left singular vectors").columns(0, k).into_owned();
    let hv = e.transpose() * &f.h * &e;
    let kv = e.transpose() * &f.k * &e;
    let det_hv = hv.determinant().max(0.0);
    let det_kv = kv.determinant();
    let det_hp = f.h_prime.determinant().max(0.0);
    let tr_hp = f.h_prime.trace();
    let dk = delta.powi(k as i32);
    let lhs = det_kv * jac;
    let mid1 = dk * det_hv.sqrt() * det_hp.sqrt();
    let mid2 = dk * det_hv.sqrt() * (tr_hp / kf).powf(kf / 2.0);
    let rhs = kf.powf(-kf / 2.0) * dk * det_hv.sqrt();
    let jac_bound = (!rank_deficient && det_kv > 0.0).then(|| rhs / det_kv);
    let proj = DMatrix::identity(e.nrows(), e.nrows()) - &e * e.transpose();
    let v_invariant = f.j_ops.iter().all(|j| (&proj * j * &e).norm() < 1e-8);
    ChainReport {
        jacobian: jac,
        lhs,
        mid1,
        mid2,
        rhs,
        jac_bound,
        det_kv,
        det_hv,
        det_h_prime: det_hp,
        trace_h: f.h.trace(),
        trace_h_prime: tr_hp,
        holds: le_slack(lhs, mid1) && le_slack(mid1, mid2) && le_slack(mid2, rhs) && le_slack(rhs, mid2),
        rank_deficient,
        v_invariant,
        near_elementary: f.max_atom_ratio > NEAR_ATOM_RATIO || f.dirac_distance < NEAR_DIRAC,
    }
}

pub fn inequality_chain_report(ctx: &NaturalMapContext, x: &Point) -> Result<ChainReport> {
    Ok(chain_report(&differential(ctx, x)?))
}

/// `(|k(v, DF u)|, δ h(v,v)^½ h'(u,u)^½)` for the pointwise Cauchy–Schwarz step.
pub fn cauchy_terms(diff: &Differential, u: &DVector<f64>, v: &DVector<f64>) -> (f64, f64) {
    let f = &diff.forms;
    let lhs = v.dot(&(&f.k * diff.apply(u))).abs();
    let rhs = diff.delta * v.dot(&(&f.h * v)).sqrt() * u.dot(&(&f.h_prime * u)).sqrt();
    (lhs, rhs)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisplacementCheck {
    pub source_distance: f64,
    pub image_distance: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorNormReport {
    pub max_norm: f64,
    pub per_point: Vec<f64>,
    pub displacements: Vec<DisplacementCheck>,
}

/// Samples per geodesic segment when bounding displacement by the path integral.
const PATH_SAMPLES: usize = 9;

/// Supremum of `‖D_x F‖` over `ball`, and `d(F x, F y) ≤ d(x, y) · max ‖DF‖`
/// along the segment `[x, y]` for each pair.
pub fn operator_norm_probe(
    ctx: &NaturalMapContext,
    ball: &[Point],
    pairs: &[(Point, Point)],
    exec: Execution,
) -> Result<OperatorNormReport> {
    let per_point = exec
        .map_slice(ball, |x| differential(ctx, x).map(|d| d.operator_norm()))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let displacements = exec
        .map_slice(pairs, |(x, y)| -> Result<DisplacementCheck> {
            let dxy = distance(x, y);
            let v = log_map(x, y);
            let mut path_max: f64 = 0.0;
            for i in 0..PATH_SAMPLES {
                let t = i as f64 / (PATH_SAMPLES - 1) as f64;
                let z = crate::geometry::exp(&v.scale(t));
                path_max = path_max.max(differential(ctx, &z)?.operator_norm());
            }
            let image = distance(&natural_map_point(ctx, x)?, &natural_map_point(ctx, y)?);
            let bound = dxy * path_max;
            Ok(DisplacementCheck {
                source_distance: dxy,
                image_distance: image,
                bound,
                holds: image <= bound * (1.0 + 1e-6) + 1e-9,
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let max_norm = per_point.iter().cloned().fold(0.0, f64::max);
    Ok(OperatorNormReport {
        max_norm,
        per_point,
        displacements,
    })
}

/// `Σ weight · jac`.
pub fn map_volume(samples: &[(f64, f64)]) -> f64 {
    samples.iter().map(|(w, j)| w * j).sum()
}

/// Area of the unit sphere `S^(k-1)`; `k` is even here.
fn unit_sphere_area(k: usize) -> f64 {
    let half = k / 2;
    let fact: f64 = (1..half).map(|i| i as f64).product();
    2.0 * std::f64::consts::PI.powi(half as i32) / fact
}

/// Volume of the geodesic ball of radius `r`, from the polar density (composite Simpson).
pub fn ball_volume(space: &Space, r: f64) -> f64 {
    let n = 2000;
    let h = r / n as f64;
    let f = |t: f64| if t == 0.0 { 0.0 } else { log_polar_volume_density(space, t).exp() };
    let mut s = f(0.0) + f(r);
    for i in 1..n {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    unit_sphere_area(space.dim()) * s * h / 3.0
}

/// Quadrature nodes on the ball of radius `r` about `O`: midpoint rule in the
/// radius times seeded uniform directions. Weights sum to the midpoint-rule
/// approximation of the ball volume.
pub fn ball_quadrature(space: &Space, r: f64, radial: usize, directions: usize, seed: u64) -> Vec<(Point, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let o = space.origin();
    let area = unit_sphere_area(space.dim());
    let dr = r / radial as f64;
    let mut out = Vec::with_capacity(radial * directions);
    for i in 0..radial {
        let t = (i as f64 + 0.5) * dr;
        let shell = area * log_polar_volume_density(space, t).exp() * dr / directions as f64;
        for _ in 0..directions {
            let u = random_unit_tangent(&mut rng, &o);
            out.push((exp_map(&o, &u, t), shell));
        }
    }
    out
}

/// Per-point record used by batch evaluation.
#[derive(Clone, Debug)]
pub struct PointEvaluation {
    pub x: Point,
    pub fx: Point,
    pub jacobian: f64,
    pub chain: ChainReport,
    pub residual: f64,
    pub min_k_eigenvalue: f64,
    pub singular_values: Vec<f64>,
}

pub fn evaluate(ctx: &NaturalMapContext, x: &Point) -> Result<PointEvaluation> {
    let diff = differential(ctx, x)?;
    let chain = chain_report(&diff);
    Ok(PointEvaluation {
        x: x.clone(),
        fx: diff.forms.fx.clone(),
        jacobian: chain.jacobian,
        residual: diff.forms.residual,
        min_k_eigenvalue: diff.forms.min_k_eigenvalue(),
        singular_values: diff.singular_values().iter().cloned().collect(),
        chain,
    })
}

pub fn evaluate_many(ctx: &NaturalMapContext, xs: &[Point], exec: Execution) -> Vec<Result<PointEvaluation>> {
    exec.map_slice(xs, |x| evaluate(ctx, x))
}

/// Equal atoms at `±e_i·u` for every coordinate and unit: `2k` atoms whose
/// Busemann gradients at `O` are `∓e_i·u`.
pub fn symmetric_measure(space: &Space) -> BoundaryMeasure {
    let mut atoms = Vec::with_capacity(2 * space.dim());
    for i in 0..space.rank() {
        for &u in space.algebra().units() {
            for s in [1.0, -1.0] {
                let mut dir = vec![Quat::ZERO; space.rank()];
                dir[i] = u * s;
                atoms.push((BoundaryPoint::from_direction(*space, &dir).expect("unit direction"), 1.0));
            }
        }
    }
    BoundaryMeasure::new(*space, atoms).expect("distinct atoms")
}

/// Symmetric seed at `O` with `D` the boundary map of the totally geodesic inclusion.
pub fn symmetric_model(source: &Space, target: &Space) -> Result<NaturalMapContext> {
    let seed = symmetric_measure(source);
    let map = BoundaryMapSample::from_fn(&seed, *target, |t| t.embed(target))?;
    let density = ConformalDensity::new(seed, source.critical_exponent(), source.origin())?;
    NaturalMapContext::new(density, map, None)
}

/// A random admissible context: random seed measure and boundary map
/// `θ ↦ g(ι(θ))` with each image independently perturbed by Gaussian noise of
/// random size, where `ι` is the inclusion and `g` a random isometry.
pub fn random_context(source: &Space, target: &Space, seed: u64) -> Result<NaturalMapContext> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(source.dim() + 2..=2 * source.dim() + 4);
    let measure = crate::measures::random_measure(source, rng.random(), n, 4.0)?;
    let g = crate::sampling::random_isometry(&mut rng, target, 1.0);
    let noise = rng.random_range(0.0..1.5);
    let pairs = measure
        .atoms()
        .iter()
        .map(|(t, _)| {
            let xi = g.apply_boundary(&t.embed(target)?)?;
            let mut dir = xi.direction();
            for q in dir.iter_mut() {
                *q += crate::sampling::gaussian_scalar(&mut rng, target.algebra()) * noise;
            }
            let nrm = dir.iter().map(|q| q.norm_sqr()).sum::<f64>().sqrt();
            let dir: Vec<Quat> = dir.into_iter().map(|q| q * (1.0 / nrm)).collect();
            Ok((t.clone(), BoundaryPoint::from_direction(*target, &dir)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let map = BoundaryMapSample::new(*source, *target, pairs)?;
    let density = ConformalDensity::new(measure, source.critical_exponent(), source.origin())?;
    NaturalMapContext::new(density, map, None)
}

/// A boundary map squeezing every atom of a random seed measure into a cap of
/// angular size about `spread` around one boundary point; the natural map
/// then collapses volume.
pub fn collapsing_context(source: &Space, seed: u64, spread: f64) -> Result<NaturalMapContext> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let measure = crate::measures::random_measure(source, rng.random(), 2 * source.dim(), 1.0)?;
    let centre = crate::sampling::random_boundary(&mut rng, source);
    let pairs = measure
        .atoms()
        .iter()
        .map(|(t, _)| {
            let mut dir = centre.direction();
            for q in dir.iter_mut() {
                *q += crate::sampling::gaussian_scalar(&mut rng, source.algebra()) * spread;
            }
            let n = dir.iter().map(|q| q.norm_sqr()).sum::<f64>().sqrt();
            let dir: Vec<Quat> = dir.into_iter().map(|q| q * (1.0 / n)).collect();
            Ok((t.clone(), BoundaryPoint::from_direction(*source, &dir)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let map = BoundaryMapSample::new(*source, *source, pairs)?;
    let density = ConformalDensity::new(measure, source.critical_exponent(), source.origin())?;
    NaturalMapContext::new(density, map, None)
}

/// Frame coordinates of `log_{F(x)} F(exp_x(±h u))`, differenced.
pub fn finite_difference_differential(ctx: &NaturalMapContext, x: &Point, h: f64) -> Result<DMatrix<f64>> {
    let fx = natural_map_point(ctx, x)?;
    let frame_x = Frame::at(x);
    let frame_f = Frame::at(&fx);
    let (k, km) = (frame_x.dim(), frame_f.dim());
    let mut m = DMatrix::zeros(km, k);
    for b in 0..k {
        let u = frame_x.vector(b);
        let fp = natural_map_point(ctx, &geodesic(x, &u, h))?;
        let fm = natural_map_point(ctx, &geodesic(x, &u, -h))?;
        let col = (frame_f.coords(&log_map(&fx, &fp)) - frame_f.coords(&log_map(&fx, &fm))) / (2.0 * h);
        m.set_column(b, &col);
    }
    Ok(m)
}

/// Stationarity of `F(x)` for the pushed measure, `‖Σ ŵ ∇B(F(x), ·)‖`.
pub fn pushed_residual(ctx: &NaturalMapContext, x: &Point, fx: &Point) -> Result<f64> {
    Ok(phi_gradient(&ctx.pushed_measure(x)?.normalize(), fx).norm())
}
