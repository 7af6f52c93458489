//! Closed-loop rigidity demo: conjugates `ρ_n = g_n ∘ i ∘ g_n⁻¹` of the
//! standard embedding `i`, the drift of the natural map at `O`, and the
//! representations renormalized by the transvection taking `F_n(O)` back to `O`.

use serde::{Deserialize, Serialize};

use crate::algebra::Space;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{distance, exp_map, TangentVector};
use crate::hvec::HVec;
use crate::isometry::{
    conjugate_representation, loxodromic_normal_form, representation_distance, trace_bound_check, transvection,
    Isometry, Representation, TraceBoundReport,
};
use crate::natural_map::{natural_map_point, symmetric_model};
use crate::qmatrix::QMatrix;
use crate::quat::Quat;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    /// `g_n = id`.
    Identity,
    /// `g_n` translates by `n·scale/2` along the first axis.
    Loxodromic,
    /// The translation composed with a rotation by `angle/n` mixing the
    /// embedded subspace with its complement.
    Mixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RigidityConfig {
    pub schedule: Schedule,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_scale")]
    pub scale: f64,
    #[serde(default = "default_angle")]
    pub angle: f64,
}

fn default_steps() -> usize {
    8
}

fn default_scale() -> f64 {
    1.0
}

fn default_angle() -> f64 {
    0.5
}

impl RigidityConfig {
    pub fn new(schedule: Schedule) -> RigidityConfig {
        RigidityConfig {
            schedule,
            steps: default_steps(),
            scale: default_scale(),
            angle: default_angle(),
        }
    }
}

/// Generators of the source group: two loxodromics on different axes and an elliptic.
pub fn source_generators(source: &Space) -> Result<Vec<(String, Isometry)>> {
    let n = source.coords();
    let u = *source.algebra().imaginary_units().last().expect("non-empty");
    let rot = |t: f64| Quat::real(t.cos()) + u * t.sin();
    let a = loxodromic_normal_form(*source, 1.3, Quat::ONE, &QMatrix::identity(n - 2))?;
    let mut m = QMatrix::identity(n - 2);
    m[(0, 0)] = rot(0.7);
    let b0 = loxodromic_normal_form(*source, 0.9, Quat::cis(0.4), &m)?;
    // move the axis of b0 off the axis of a
    let o = source.origin();
    let v = TangentVector::from_ambient(&o, &HVec::basis(n, source.rank() - 1, Quat::ONE));
    let y = exp_map(&o, &v, 0.8);
    let b = b0.conjugate_by(&transvection(&source.origin(), &y)?)?;
    let mut r = QMatrix::identity(n);
    r[(0, 0)] = Quat::cis(1.1);
    if n > 2 {
        r[(1, 1)] = rot(-0.3);
    }
    let c = Isometry::new(*source, r)?;
    Ok(vec![("a".into(), a), ("b".into(), b), ("c".into(), c)])
}

/// `i`: the source generators acting on the first block of the target.
pub fn standard_embedding(source: &Space, target: &Space) -> Result<Representation> {
    let gens = source_generators(source)?
        .into_iter()
        .map(|(n, g)| Ok((n, g.embed(target)?)))
        .collect::<Result<Vec<_>>>()?;
    Representation::new(*source, *target, gens)
}

/// `g_n` for the schedule.
pub fn conjugator(cfg: &RigidityConfig, target: &Space, n: usize) -> Result<Isometry> {
    let k = target.coords();
    let lox = || loxodromic_normal_form(*target, cfg.scale * n as f64, Quat::ONE, &QMatrix::identity(k - 2));
    match cfg.schedule {
        Schedule::Identity => Ok(Isometry::identity(*target)),
        Schedule::Loxodromic => lox(),
        Schedule::Mixed => {
            // rotation in the plane of e_1 and e_p (last coordinate of 𝔽^p)
            let theta = cfg.angle / n as f64;
            let p = target.rank() - 1;
            let mut r = QMatrix::identity(k);
            r[(0, 0)] = Quat::real(theta.cos());
            r[(0, p)] = Quat::real(-theta.sin());
            r[(p, 0)] = Quat::real(theta.sin());
            r[(p, p)] = Quat::real(theta.cos());
            lox()?.compose(&Isometry::new(*target, r)?)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RigidityStep {
    pub n: usize,
    /// `d(F_n(O), O)`.
    pub drift: f64,
    pub raw_distance: f64,
    pub normalized_distance: f64,
    /// `d(F̂_n(O), O)` for the renormalized map.
    pub normalized_offset: f64,
    pub traces: Vec<TraceBoundReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RigidityReport {
    pub source: Space,
    pub target: Space,
    pub config: RigidityConfig,
    pub trace_constant: f64,
    pub steps: Vec<RigidityStep>,
    pub drift_increasing: bool,
    pub max_normalized_distance: f64,
    /// Normalized distances are non-increasing from step 5 on, up to
    /// `MONOTONE_TOL` of rounding.
    pub normalized_decreasing: bool,
    pub traces_hold: bool,
}

/// Runs the schedule for `n = 1..=steps`, each step independent.
/// Distances below this are rounding noise for the monotonicity check.
pub const MONOTONE_TOL: f64 = 1e-9;

pub fn rigidity_demo(source: &Space, target: &Space, cfg: &RigidityConfig, exec: Execution) -> Result<RigidityReport> {
    if !source.embeds_into(target) {
        return Err(Error::SpaceMismatch {
            expected: format!("a space containing {source}"),
            found: target.to_string(),
        });
    }
    if cfg.steps == 0 || !(cfg.scale > 0.0) {
        return Err(Error::InvalidSpace("the schedule needs steps >= 1 and scale > 0".into()));
    }
    let base = standard_embedding(source, target)?;
    let model = symmetric_model(source, target)?;
    let o = target.origin();
    // |Tr M| ≤ m − 1 for the compact factor of a normal form
    let c0 = (target.coords() - 2) as f64;
    let steps = exec.map_range(cfg.steps, |i| -> Result<RigidityStep> {
        let n = i + 1;
        let g = conjugator(cfg, target, n)?;
        let rho = conjugate_representation(&base, &g)?;
        let ctx = crate::natural_map::NaturalMapContext::new(
            model.density().clone(),
            model.map().post_compose(&g)?,
            None,
        )?;
        let fo = natural_map_point(&ctx, &source.origin())?;
        let tau = transvection(&fo, &o)?;
        let normalized = conjugate_representation(&rho, &tau)?;
        let renorm = crate::natural_map::NaturalMapContext::new(
            model.density().clone(),
            ctx.map().post_compose(&tau)?,
            None,
        )?;
        let offset = distance(&natural_map_point(&renorm, &source.origin())?, &o);
        Ok(RigidityStep {
            n,
            drift: distance(&fo, &o),
            raw_distance: representation_distance(&rho, &base)?,
            normalized_distance: representation_distance(&normalized, &base)?,
            normalized_offset: offset,
            traces: normalized.generators().iter().map(|(_, h)| trace_bound_check(h, c0)).collect(),
        })
    });
    let steps = steps.into_iter().collect::<Result<Vec<_>>>()?;
    let drift_increasing = steps.windows(2).all(|w| w[1].drift > w[0].drift);
    let max_normalized_distance = steps.iter().map(|s| s.normalized_distance).fold(0.0, f64::max);
    let normalized_decreasing = steps
        .windows(2)
        .filter(|w| w[0].n >= 5)
        .all(|w| w[1].normalized_distance <= w[0].normalized_distance + MONOTONE_TOL);
    let traces_hold = steps.iter().all(|s| s.traces.iter().all(|t| t.holds));
    Ok(RigidityReport {
        source: *source,
        target: *target,
        config: cfg.clone(),
        trace_constant: c0,
        steps,
        drift_increasing,
        max_normalized_distance,
        normalized_decreasing,
        traces_hold,
    })
}
