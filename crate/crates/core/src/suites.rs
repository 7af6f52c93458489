//! Seeded property suites for the Busemann calculus and the barycentre solver,
//! each property reported with its worst residual.

use nalgebra::SymmetricEigen;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::Space;
use crate::barycenter::{barycenter, stationarity_residual, Regime, SolverConfig};
use crate::error::Error;
use crate::geometry::{
    busemann, busemann_gradient, busemann_hessian, distance, geodesic, ray_distance, Frame,
};
use crate::measures::{random_measure, BoundaryMeasure};
use crate::natural_map::symmetric_measure;
use crate::sampling::{random_boundary, random_isometry, random_point, random_unit_tangent};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub name: String,
    pub samples: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl PropertyCheck {
    fn new(name: &str, residuals: &[f64], tolerance: f64) -> PropertyCheck {
        let max_residual = residuals.iter().copied().fold(0.0, f64::max);
        PropertyCheck {
            name: name.into(),
            samples: residuals.len(),
            max_residual,
            tolerance,
            passed: residuals.iter().all(|r| r.is_finite()) && max_residual <= tolerance,
        }
    }

    fn flag(name: &str, ok: bool) -> PropertyCheck {
        PropertyCheck::new(name, &[if ok { 0.0 } else { 1.0 }], 0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub space: Space,
    pub properties: Vec<PropertyCheck>,
    pub passed: bool,
}

impl SuiteReport {
    fn new(space: Space, properties: Vec<PropertyCheck>) -> SuiteReport {
        let passed = properties.iter().all(|p| p.passed);
        SuiteReport {
            space,
            properties,
            passed,
        }
    }

    pub fn get(&self, name: &str) -> Option<&PropertyCheck> {
        self.properties.iter().find(|p| p.name == name)
    }
}

/// Closed form against the defining limit at ray time `t`, unit gradients,
/// Hessian spectrum, finite differences and the cocycle identity.
pub fn busemann_suite(space: &Space, seed: u64, samples: usize, t: f64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let o = space.origin();
    let (k, d) = (space.dim(), space.d());
    let mut want: Vec<f64> = std::iter::once(0.0)
        .chain(std::iter::repeat_n(1.0, k - d))
        .chain(std::iter::repeat_n(2.0, d - 1))
        .collect();
    want.sort_by(f64::total_cmp);
    let (mut limit, mut unit, mut spectrum, mut grad_fd, mut hess_fd, mut cocycle, mut invariance) =
        (vec![], vec![], vec![], vec![], vec![], vec![], vec![]);
    for _ in 0..samples {
        let x = random_point(&mut rng, space, 1.0);
        let y = random_point(&mut rng, space, 1.0);
        let th = random_boundary(&mut rng, space);
        let b = busemann(&x, &th, &o);
        limit.push((ray_distance(&x, &o, &th, t) - t - b).abs());
        unit.push((busemann_gradient(&x, &th).norm() - 1.0).abs());
        let mut ev: Vec<f64> = SymmetricEigen::new(busemann_hessian(&x, &th)).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        spectrum.push(ev.iter().zip(&want).map(|(a, w)| (a - w).abs()).fold(0.0, f64::max));
        let u = random_unit_tangent(&mut rng, &x);
        let along = |s: f64| busemann(&geodesic(&x, &u, s), &th, &o);
        let h1 = 1e-4;
        let fd1 = (along(h1) - along(-h1)) / (2.0 * h1);
        let an1 = busemann_gradient(&x, &th).inner(&u);
        grad_fd.push((fd1 - an1).abs() / an1.abs().max(1.0));
        let h2 = 1e-3;
        let fd2 = (along(h2) - 2.0 * b + along(-h2)) / (h2 * h2);
        let uc = Frame::at(&x).coords(&u);
        let an2 = (uc.transpose() * busemann_hessian(&x, &th) * &uc)[(0, 0)];
        hess_fd.push((fd2 - an2).abs() / an2.abs().max(1.0));
        cocycle.push((b - busemann(&x, &th, &y) - busemann(&y, &th, &o)).abs());
        let g = random_isometry(&mut rng, space, 1.0);
        let moved = busemann(
            &g.apply_point(&x).expect("same space"),
            &g.apply_boundary(&th).expect("same space"),
            &g.apply_point(&o).expect("same space"),
        );
        invariance.push((moved - b).abs());
    }
    SuiteReport::new(
        *space,
        vec![
            PropertyCheck::new("limit", &limit, 1e-6),
            PropertyCheck::new("gradient_unit", &unit, 1e-9),
            PropertyCheck::new("hessian_spectrum", &spectrum, 1e-8),
            PropertyCheck::new("gradient_fd", &grad_fd, 1e-5),
            PropertyCheck::new("hessian_fd", &hess_fd, 1e-4),
            PropertyCheck::new("cocycle", &cocycle, 1e-10),
            PropertyCheck::new("isometry_invariance", &invariance, 1e-9),
        ],
    )
}

fn point_of(beta: &BoundaryMeasure, cfg: &SolverConfig) -> Option<crate::geometry::Point> {
    barycenter(beta, cfg).ok()?.point().cloned()
}

/// Atom rule, exclusion, symmetric fixpoint, equivariance, scaling
/// invariance, restart uniqueness and stationarity.
pub fn barycenter_suite(space: &Space, seed: u64, isometries: usize, restarts: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = SolverConfig::default();
    let o = space.origin();
    let mut props = Vec::new();

    let base = random_measure(space, seed ^ 0xa5, 5, 3.0).expect("valid measure");
    let heavy: Vec<_> = base
        .atoms()
        .iter()
        .enumerate()
        .map(|(i, (t, _))| (t.clone(), if i == 0 { 0.6 } else { 0.4 / (base.len() - 1) as f64 }))
        .collect();
    let heavy = BoundaryMeasure::new(*space, heavy).expect("valid measure");
    let atom_ok = barycenter(&heavy, &cfg).is_ok_and(|r| {
        r.regime == Regime::AtomDominated
            && matches!(&r.location, crate::barycenter::Location::Atom(t) if t.approx_eq(&heavy.atoms()[0].0, 1e-14))
    });
    props.push(PropertyCheck::flag("atom_rule", atom_ok));

    let pair = BoundaryMeasure::new(*space, base.atoms()[..2].iter().map(|(t, _)| (t.clone(), 1.0)).collect())
        .expect("valid measure");
    props.push(PropertyCheck::flag(
        "excluded_pair",
        matches!(barycenter(&pair, &cfg), Err(Error::ExcludedMeasure)),
    ));

    let sym = point_of(&symmetric_measure(space), &cfg).map_or(f64::INFINITY, |p| distance(&p, &o));
    props.push(PropertyCheck::new("symmetry_fixpoint", &[sym], 1e-8));

    let beta = random_measure(space, seed ^ 0x5a, 6, 3.0).expect("valid measure");
    let reference = barycenter(&beta, &cfg);
    let (b, residual) = match &reference {
        Ok(r) if r.point().is_some() => (r.point().unwrap().clone(), r.residual),
        _ => {
            props.push(PropertyCheck::flag("solver", false));
            return SuiteReport::new(*space, props);
        }
    };
    let equi: Vec<f64> = (0..isometries)
        .map(|_| {
            let g = random_isometry(&mut rng, space, 1.5);
            let pushed = beta.pushforward(&g).expect("same space");
            point_of(&pushed, &cfg).map_or(f64::INFINITY, |p| distance(&p, &g.apply_point(&b).expect("same space")))
        })
        .collect();
    props.push(PropertyCheck::new("equivariance", &equi, 1e-8));

    let scaling: Vec<f64> = [1e-3, 0.5, 7.0, 1e4]
        .iter()
        .map(|&c| point_of(&beta.scale(c), &cfg).map_or(f64::INFINITY, |p| distance(&p, &b)))
        .collect();
    props.push(PropertyCheck::new("scaling_invariance", &scaling, 1e-9));

    let starts: Vec<f64> = (0..restarts)
        .map(|_| {
            let c = SolverConfig {
                initial_point: Some(random_point(&mut rng, space, 4.0)),
                ..cfg.clone()
            };
            point_of(&beta, &c).map_or(f64::INFINITY, |p| distance(&p, &b))
        })
        .collect();
    props.push(PropertyCheck::new("restart_uniqueness", &starts, 1e-7));

    let stat = stationarity_residual(&beta.normalize(), &b).max(residual);
    props.push(PropertyCheck::new("stationarity", &[stat], 1e-10));
    SuiteReport::new(*space, props)
}
