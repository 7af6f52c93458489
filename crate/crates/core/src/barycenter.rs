//! Barycentre of a boundary measure: the minimizer of `φ_β(y) = ∫ B_O(y, θ) dβ(θ)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{busemann, busemann_gradient, busemann_hessian_in, exp, BoundaryPoint, Frame, Point, TangentVector};
use crate::hvec::HVec;
use crate::measures::BoundaryMeasure;
use crate::quat::Quat;

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub grad_tol: f64,
    /// Sufficient-decrease constant of the Armijo rule.
    pub armijo_c: f64,
    /// Backtracking factor.
    pub armijo_shrink: f64,
    /// Longest step taken in one iteration.
    pub max_step: f64,
    pub initial_point: Option<Point>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 500,
            grad_tol: 1e-10,
            armijo_c: 1e-4,
            armijo_shrink: 0.5,
            max_step: 2.0,
            initial_point: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0) || self.max_iters == 0 {
            return Err(Error::InvalidMeasure("solver needs grad_tol > 0 and max_iters >= 1".into()));
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0 && self.armijo_shrink > 0.0 && self.armijo_shrink < 1.0) {
            return Err(Error::InvalidMeasure("Armijo parameters must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Interior,
    AtomDominated,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Location {
    Interior(Point),
    Atom(BoundaryPoint),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BarycenterResult {
    pub location: Location,
    pub residual: f64,
    pub iterations: usize,
    pub regime: Regime,
    /// Set when the measure is close to the excluded two-equal-atoms case or
    /// the Hessian at the solution is nearly singular.
    pub ill_conditioned: bool,
}

impl BarycenterResult {
    pub fn point(&self) -> Option<&Point> {
        match &self.location {
            Location::Interior(p) => Some(p),
            Location::Atom(_) => None,
        }
    }
}

pub fn phi_eval(beta: &BoundaryMeasure, y: &Point, base: &Point) -> f64 {
    beta.atoms().iter().map(|(t, w)| w * busemann(y, t, base)).sum()
}

/// `Σ w_j ∇B(y, θ_j)`; independent of the normalization base.
pub fn phi_gradient(beta: &BoundaryMeasure, y: &Point) -> TangentVector {
    let mut acc = HVec::zeros(y.space().coords());
    for (t, w) in beta.atoms() {
        acc.axpy(*w, busemann_gradient(y, t).vec());
    }
    TangentVector::from_ambient(y, &acc)
}

/// Riemannian Hessian of `φ_β` in the frame.
pub fn phi_hessian(beta: &BoundaryMeasure, frame: &Frame) -> DMatrix<f64> {
    let k = frame.dim();
    let mut h = DMatrix::zeros(k, k);
    for (t, w) in beta.atoms() {
        h += busemann_hessian_in(frame, &busemann_gradient(frame.base(), t)) * *w;
    }
    h
}

pub fn stationarity_residual(beta: &BoundaryMeasure, y: &Point) -> f64 {
    phi_gradient(beta, y).norm()
}

/// Whether `β` is exactly two atoms of equal weight.
fn is_excluded(beta: &BoundaryMeasure) -> bool {
    let a = beta.atoms();
    a.len() == 2 && (a[0].1 - a[1].1).abs() <= 1e-12 * a[0].1.max(a[1].1)
}

/// Chordal margin from the excluded case: two atoms carrying half the mass each.
fn degeneracy_margin(beta: &BoundaryMeasure) -> f64 {
    let mut w: Vec<f64> = beta.atoms().iter().map(|(_, w)| *w / beta.total_mass()).collect();
    w.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let top2 = w[0] + w.get(1).copied().unwrap_or(0.0);
    (1.0 - top2) + (w[0] - w.get(1).copied().unwrap_or(0.0)).abs()
}

/// Normalized Euclidean centroid of the visual directions, or `O` if it is
/// too close to the sphere.
fn centroid_start(beta: &BoundaryMeasure) -> Point {
    let space = beta.space();
    let p = space.rank();
    let mut c = vec![Quat::ZERO; p];
    let m = beta.total_mass();
    for (t, w) in beta.atoms() {
        for (ci, di) in c.iter_mut().zip(t.direction()) {
            *ci += di * (w / m);
        }
    }
    let n = c.iter().map(|q| q.norm_sqr()).sum::<f64>().sqrt();
    if n > 0.99 {
        return space.origin();
    }
    let mut rep = HVec::zeros(space.coords());
    for i in 0..p {
        rep[i] = c[i];
    }
    rep[p] = Quat::ONE;
    Point::new(space, rep).unwrap_or_else(|_| space.origin())
}

fn cholesky_solve(h: &DMatrix<f64>, g: &DVector<f64>) -> Option<DVector<f64>> {
    let chol = h.clone().cholesky()?;
    let s = chol.solve(g);
    s.iter().all(|x| x.is_finite()).then_some(s)
}

pub fn barycenter(beta: &BoundaryMeasure, cfg: &SolverConfig) -> Result<BarycenterResult> {
    cfg.validate()?;
    if is_excluded(beta) {
        return Err(Error::ExcludedMeasure);
    }
    if beta.max_atom_ratio() >= 0.5 {
        let (t, _) = &beta.atoms()[beta.heaviest()];
        return Ok(BarycenterResult {
            location: Location::Atom(t.clone()),
            residual: 0.0,
            iterations: 0,
            regime: Regime::AtomDominated,
            ill_conditioned: beta.max_atom_ratio() < 0.5 + 1e-8,
        });
    }
    let beta = beta.normalize();
    let origin = beta.space().origin();
    let mut y = match &cfg.initial_point {
        Some(p) => {
            beta.space().ensure_same(&p.space())?;
            p.clone()
        }
        None => centroid_start(&beta),
    };
    let mut best = (y.clone(), f64::INFINITY);
    let mut polish = 0;
    for it in 0..cfg.max_iters {
        let frame = Frame::at(&y);
        let g = frame.coords(&phi_gradient(&beta, &y));
        let r = g.norm();
        if r < best.1 {
            best = (y.clone(), r);
        }
        if r <= cfg.grad_tol {
            // a couple of extra Newton steps tighten the tail well below the tolerance
            polish += 1;
            if polish > 2 || r == 0.0 {
                return Ok(finish(&beta, best.0, best.1, it));
            }
        }
        let h = phi_hessian(&beta, &frame);
        let newton = cholesky_solve(&h, &(-&g)).filter(|s| s.dot(&g) < 0.0);
        let (dir, is_newton) = match newton {
            Some(s) => (s, true),
            None => (-&g, false),
        };
        let len = dir.norm();
        let dir = if len > cfg.max_step { dir * (cfg.max_step / len) } else { dir };
        let f0 = phi_eval(&beta, &y, &origin);
        let slope = g.dot(&dir);
        let mut t = 1.0;
        let mut next = None;
        for _ in 0..60 {
            let cand = exp(&frame.tangent(&(&dir * t)));
            let f1 = phi_eval(&beta, &cand, &origin);
            if f1 <= f0 + cfg.armijo_c * t * slope {
                next = Some(cand);
                break;
            }
            // near the optimum φ is flat to rounding; accept a Newton step that reduces the residual
            if is_newton && t == 1.0 && stationarity_residual(&beta, &cand) < r {
                next = Some(cand);
                break;
            }
            t *= cfg.armijo_shrink;
        }
        match next {
            Some(n) => y = n,
            None => {
                if best.1 <= cfg.grad_tol {
                    return Ok(finish(&beta, best.0, best.1, it));
                }
                return Err(Error::NonConvergence {
                    iterations: it,
                    residual: best.1,
                    best: Box::new(best.0),
                });
            }
        }
    }
    let r = stationarity_residual(&beta, &y);
    if r < best.1 {
        best = (y, r);
    }
    if best.1 <= cfg.grad_tol {
        return Ok(finish(&beta, best.0, best.1, cfg.max_iters));
    }
    Err(Error::NonConvergence {
        iterations: cfg.max_iters,
        residual: best.1,
        best: Box::new(best.0),
    })
}

fn finish(beta: &BoundaryMeasure, y: Point, residual: f64, iterations: usize) -> BarycenterResult {
    let h = phi_hessian(beta, &Frame::at(&y));
    let min_eig = h.symmetric_eigenvalues().min();
    BarycenterResult {
        location: Location::Interior(y),
        residual,
        iterations,
        regime: Regime::Interior,
        ill_conditioned: min_eig < 1e-8 || degeneracy_margin(beta) < 1e-8,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Space;
    use crate::geometry::{distance, exp_map, geodesic};
    use crate::measures::random_measure;
    use crate::sampling;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spaces() -> [Space; 3] {
        [Space::complex(2), Space::complex(3), Space::quaternionic(2)]
    }

    /// `±e_i·u` for every coordinate and unit: invariant under a finite group fixing `O`.
    fn symmetric_measure(space: Space) -> BoundaryMeasure {
        let mut atoms = Vec::new();
        for i in 0..space.rank() {
            for &u in space.algebra().units() {
                for s in [1.0, -1.0] {
                    let mut dir = vec![Quat::ZERO; space.rank()];
                    dir[i] = u * s;
                    atoms.push((BoundaryPoint::from_direction(space, &dir).unwrap(), 1.0));
                }
            }
        }
        BoundaryMeasure::new(space, atoms).unwrap()
    }

    #[test]
    fn phi_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for space in spaces() {
            let o = space.origin();
            let beta = random_measure(&space, 3, 5, 3.0).unwrap();
            assert_eq!(phi_eval(&beta, &o, &o), 0.0);
            let th = beta.atoms()[0].0.clone();
            let single = BoundaryMeasure::new(space, vec![(th.clone(), 1.0)]).unwrap();
            let y = sampling::random_point(&mut rng, &space, 2.0);
            assert_eq!(phi_eval(&single, &y, &o), busemann(&y, &th, &o));
            assert!((phi_gradient(&single, &y).norm() - 1.0).abs() < 1e-12);
            assert!((phi_eval(&beta.scale(3.0), &y, &o) - 3.0 * phi_eval(&beta, &y, &o)).abs() < 1e-12);
        }
    }

    #[test]
    fn phi_is_midpoint_convex() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let space = Space::complex(2);
        let o = space.origin();
        for i in 0..100 {
            let beta = random_measure(&space, 100 + i, 4, 2.0).unwrap();
            let x = sampling::random_point(&mut rng, &space, 2.0);
            let y = sampling::random_point(&mut rng, &space, 2.0);
            let v = crate::geometry::log_map(&x, &y);
            let mid = exp(&v.scale(0.5));
            let lhs = phi_eval(&beta, &mid, &o);
            let rhs = 0.5 * (phi_eval(&beta, &x, &o) + phi_eval(&beta, &y, &o));
            assert!(lhs <= rhs + 1e-12);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (i, space) in spaces().iter().cycle().take(50).enumerate() {
            let o = space.origin();
            let beta = random_measure(space, 200 + i as u64, 6, 4.0).unwrap();
            let y = sampling::random_point(&mut rng, space, 2.0);
            let u = sampling::random_unit_tangent(&mut rng, &y);
            let h = 1e-5;
            let fd = (phi_eval(&beta, &geodesic(&y, &u, h), &o) - phi_eval(&beta, &geodesic(&y, &u, -h), &o)) / (2.0 * h);
            let an = phi_gradient(&beta, &y).inner(&u);
            assert!((fd - an).abs() < 1e-6, "{fd} vs {an}");
        }
    }

    #[test]
    fn hessian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for space in spaces() {
            let o = space.origin();
            let beta = random_measure(&space, 5, 6, 4.0).unwrap();
            let y = sampling::random_point(&mut rng, &space, 1.5);
            let frame = Frame::at(&y);
            let h = phi_hessian(&beta, &frame);
            let u = sampling::random_unit_tangent(&mut rng, &y);
            let c = frame.coords(&u);
            let s = 1e-4;
            let f = |t: f64| phi_eval(&beta, &geodesic(&y, &u, t), &o);
            let fd = (f(s) - 2.0 * f(0.0) + f(-s)) / (s * s);
            assert!((fd - c.dot(&(&h * &c))).abs() < 1e-5);
        }
    }

    #[test]
    fn atom_rules() {
        let space = Space::complex(2);
        let m = random_measure(&space, 6, 3, 1.0).unwrap();
        let th = m.atoms()[0].0.clone();
        let single = BoundaryMeasure::new(space, vec![(th.clone(), 1.0)]).unwrap();
        let r = barycenter(&single, &SolverConfig::default()).unwrap();
        assert_eq!(r.regime, Regime::AtomDominated);
        assert_eq!(r.location, Location::Atom(th.clone()));

        let half = BoundaryMeasure::new(
            space,
            vec![(m.atoms()[0].0.clone(), 2.0), (m.atoms()[1].0.clone(), 1.0), (m.atoms()[2].0.clone(), 1.0)],
        )
        .unwrap();
        let r = barycenter(&half, &SolverConfig::default()).unwrap();
        assert_eq!(r.regime, Regime::AtomDominated);
        assert_eq!(r.location, Location::Atom(th));

        let two = BoundaryMeasure::new(space, vec![(m.atoms()[0].0.clone(), 1.0), (m.atoms()[1].0.clone(), 1.0)]).unwrap();
        assert!(matches!(barycenter(&two, &SolverConfig::default()), Err(Error::ExcludedMeasure)));
    }

    #[test]
    fn symmetric_measure_has_barycenter_at_origin() {
        for space in spaces() {
            let beta = symmetric_measure(space);
            let o = space.origin();
            assert!(stationarity_residual(&beta, &o) < 1e-12);
            let start = exp_map(&o, &Frame::at(&o).vector(1), 0.7);
            let cfg = SolverConfig {
                initial_point: Some(start),
                ..SolverConfig::default()
            };
            let r = barycenter(&beta, &cfg).unwrap();
            assert_eq!(r.regime, Regime::Interior);
            assert!(distance(r.point().unwrap(), &o) < 1e-8);
        }
    }

    #[test]
    fn solver_contract_and_invariances() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (i, space) in spaces().iter().cycle().take(30).enumerate() {
            let beta = random_measure(space, 300 + i as u64, 3 + i % 5, 5.0).unwrap();
            let r = barycenter(&beta, &SolverConfig::default()).unwrap();
            let b = r.point().unwrap().clone();
            assert!(r.residual <= 1e-10);
            assert!(stationarity_residual(&beta.normalize(), &b) <= 1e-10);
            for c in [0.5, 2.0, 10.0] {
                let rc = barycenter(&beta.scale(c), &SolverConfig::default()).unwrap();
                assert!(distance(rc.point().unwrap(), &b) < 1e-9);
            }
            let g = sampling::random_isometry(&mut rng, space, 1.5);
            let rg = barycenter(&beta.pushforward(&g).unwrap(), &SolverConfig::default()).unwrap();
            assert!(distance(rg.point().unwrap(), &g.apply_point(&b).unwrap()) < 1e-8);
            // a displaced point is not stationary
            let u = sampling::random_unit_tangent(&mut rng, &b);
            assert!(stationarity_residual(&beta.normalize(), &geodesic(&b, &u, 0.1)) > 1e-4);
        }
    }

    #[test]
    fn restarts_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let space = Space::quaternionic(2);
        let beta = random_measure(&space, 9, 5, 3.0).unwrap();
        let reference = barycenter(&beta, &SolverConfig::default()).unwrap();
        for _ in 0..20 {
            let cfg = SolverConfig {
                initial_point: Some(sampling::random_point(&mut rng, &space, 4.0)),
                ..SolverConfig::default()
            };
            let r = barycenter(&beta, &cfg).unwrap();
            assert!(distance(r.point().unwrap(), reference.point().unwrap()) < 1e-7);
        }
    }

    #[test]
    fn non_convergence_reports_best_iterate() {
        let space = Space::complex(2);
        let beta = random_measure(&space, 10, 5, 3.0).unwrap();
        let cfg = SolverConfig {
            max_iters: 1,
            initial_point: Some(exp_map(&space.origin(), &Frame::at(&space.origin()).vector(0), 5.0)),
            ..SolverConfig::default()
        };
        match barycenter(&beta, &cfg) {
            Err(Error::NonConvergence { residual, .. }) => assert!(residual > 1e-10),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn continuity_along_converging_measures() {
        let space = Space::complex(2);
        let beta = random_measure(&space, 11, 5, 3.0).unwrap();
        let b = barycenter(&beta, &SolverConfig::default()).unwrap();
        let mut last = f64::INFINITY;
        for i in 1..8 {
            let eps = 10f64.powi(-i);
            let atoms = beta.atoms().iter().enumerate().map(|(j, (t, w))| (t.clone(), w * (1.0 + eps * (j as f64 + 1.0)))).collect();
            let bn = BoundaryMeasure::new(space, atoms).unwrap();
            let rn = barycenter(&bn, &SolverConfig::default()).unwrap();
            let d = distance(rn.point().unwrap(), b.point().unwrap());
            assert!(d <= last + 1e-12);
            last = d;
        }
        assert!(last < 1e-6);
    }
}
