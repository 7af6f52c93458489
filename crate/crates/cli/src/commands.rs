//! One function per subcommand. Each returns the `results` block of the
//! report and whether every checked property held.

use std::fs::File;

use log::{info, warn};
use natmap_core::barycenter::{barycenter, BarycenterResult, Location, SolverConfig};
use natmap_core::geometry::distance;
use natmap_core::io::{boundary_coords, point_coords, read_map_csv, read_measure_csv};
use natmap_core::measures::{BoundaryMeasure, ConformalDensity};
use natmap_core::natural_map::{collapsing_context, evaluate_many, random_context, symmetric_model, NaturalMapContext};
use natmap_core::rigidity::{rigidity_demo, RigidityConfig, Schedule};
use natmap_core::sampling::{random_isometry, random_point};
use natmap_core::spectrum::{boundary_scan, convergence_probe, maximize_phi, LabConfig};
use natmap_core::suites::busemann_suite;
use natmap_core::{Error, Execution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Loaded, NatmapModel, SpectrumBlock};
use crate::CliError;

pub struct Context<'a> {
    pub loaded: &'a Loaded,
    pub seed: u64,
    pub exec: Execution,
    pub strict: bool,
}

pub type Outcome = Result<(Value, bool), CliError>;

/// Errors caused by the inputs rather than by the computation.
fn classify(e: Error) -> CliError {
    match e {
        Error::InvalidSpace(_)
        | Error::InvalidLabConfig(_)
        | Error::InvalidMeasure(_)
        | Error::Parse(_)
        | Error::Io(_)
        | Error::Csv(_)
        | Error::Json(_)
        | Error::NotNull(_)
        | Error::NonNegativeNorm(_)
        | Error::ZeroVector
        | Error::SpaceMismatch { .. }
        | Error::UnmappedAtom => CliError::Config(e.to_string()),
        other => CliError::Failure(other.to_string()),
    }
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    value: f64,
    bound: f64,
    passed: bool,
}

impl Check {
    fn at_most(name: &'static str, value: f64, bound: f64) -> Check {
        Check {
            name,
            value,
            bound,
            passed: value <= bound,
        }
    }

    fn flag(name: &'static str, ok: bool) -> Check {
        Check {
            name,
            value: f64::from(u8::from(ok)),
            bound: 1.0,
            passed: ok,
        }
    }

    fn positive(name: &'static str, value: f64) -> Check {
        Check {
            name,
            value,
            bound: 0.0,
            passed: value > 0.0,
        }
    }
}

pub fn busemann_check(cx: &Context) -> Outcome {
    let cfg = &cx.loaded.config;
    let space = cfg.source()?;
    let block = cfg.busemann_check.clone().unwrap_or_default();
    if block.samples == 0 || !(block.ray_time > 0.0) {
        return Err(CliError::Config("busemann_check needs samples >= 1 and ray_time > 0".into()));
    }
    let report = busemann_suite(&space, cx.seed, block.samples, block.ray_time);
    for p in report.properties.iter().filter(|p| !p.passed) {
        warn!("{} failed: residual {:e} > {:e}", p.name, p.max_residual, p.tolerance);
    }
    let (k, d) = (space.dim(), space.d());
    let mut spectrum = vec![0.0];
    spectrum.extend(std::iter::repeat_n(1.0, k - d));
    spectrum.extend(std::iter::repeat_n(2.0, d - 1));
    Ok((
        json!({
            "space": space.to_string(),
            "expected_hessian_spectrum": spectrum,
            "properties": report.properties,
        }),
        report.passed,
    ))
}

fn location_json(r: &BarycenterResult, mu: &BoundaryMeasure) -> Value {
    match &r.location {
        Location::Interior(p) => json!({
            "kind": "interior",
            "coords": point_coords(p),
            "distance_to_origin": distance(p, &p.space().origin()),
        }),
        Location::Atom(t) => json!({
            "kind": "atom",
            "coords": boundary_coords(t),
            "atom_index": mu.heaviest(),
        }),
    }
}

pub fn barycenter_cmd(cx: &Context) -> Outcome {
    let cfg = &cx.loaded.config;
    let space = cfg.source()?;
    let block = cfg
        .barycenter
        .as_ref()
        .ok_or_else(|| CliError::Config("barycenter needs a \"barycenter\" block with measure_file".into()))?;
    let path = cx.loaded.resolve(&block.measure_file);
    let file = File::open(&path).map_err(|e| CliError::Config(format!("cannot open {}: {e}", path.display())))?;
    let mu = read_measure_csv(file, &space).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    info!("read {} atoms from {}", mu.len(), path.display());
    let solver = SolverConfig::default();
    let r = match barycenter(&mu, &solver) {
        Ok(r) => r,
        Err(Error::ExcludedMeasure) => {
            warn!("measure is two equal Dirac masses; the barycentre is undefined");
            return Ok((json!({ "atoms": mu.len(), "error": "excluded_measure", "message": Error::ExcludedMeasure.to_string() }), false));
        }
        Err(e) => return Err(classify(e)),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cx.seed);
    let isometries: Vec<_> = (0..block.isometries).map(|_| random_isometry(&mut rng, &space, 1.5)).collect();
    let spot = cx.exec.map_slice(&isometries, |g| -> Result<f64, Error> {
        let moved = barycenter(&mu.pushforward(g)?, &solver)?;
        Ok(match (&r.location, &moved.location) {
            (Location::Interior(p), Location::Interior(q)) => distance(&g.apply_point(p)?, q),
            (Location::Atom(t), Location::Atom(s)) => {
                let gt = g.apply_boundary(t)?;
                if gt.approx_eq(s, 1e-9) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            _ => f64::INFINITY,
        })
    });
    let spot = spot.into_iter().collect::<Result<Vec<_>, _>>().map_err(classify)?;
    let worst = spot.iter().copied().fold(0.0, f64::max);
    let equivariance = Check::at_most("equivariance", worst, 1e-8);
    let residual = Check::at_most("residual", r.residual, 1e-10);
    let mut passed = equivariance.passed && residual.passed;
    if r.ill_conditioned {
        warn!("barycentre is ill-conditioned");
        passed &= !cx.strict;
    }
    Ok((
        json!({
            "atoms": mu.len(),
            "location": location_json(&r, &mu),
            "regime": r.regime,
            "residual": r.residual,
            "iterations": r.iterations,
            "ill_conditioned": r.ill_conditioned,
            "checks": [residual, equivariance],
        }),
        passed,
    ))
}

fn natmap_context(cx: &Context, model: NatmapModel) -> Result<NaturalMapContext, CliError> {
    let cfg = &cx.loaded.config;
    let block = cfg.natmap.as_ref().expect("checked by caller");
    let (source, target) = (cfg.source()?, cfg.target()?);
    let ctx = match model {
        NatmapModel::Symmetric => symmetric_model(&source, &target),
        NatmapModel::Random => random_context(&source, &target, cx.seed),
        NatmapModel::Collapsing => {
            if target != source {
                return Err(CliError::Config("the collapsing model maps a space to itself; drop \"target\"".into()));
            }
            collapsing_context(&source, cx.seed, block.spread)
        }
        NatmapModel::Files => {
            let (Some(mf), Some(pf)) = (&block.measure_file, &block.map_file) else {
                return Err(CliError::Config("model \"files\" needs measure_file and map_file".into()));
            };
            let open = |p: &std::path::Path| {
                let path = cx.loaded.resolve(p);
                File::open(&path).map_err(|e| CliError::Config(format!("cannot open {}: {e}", path.display())))
            };
            let measure = read_measure_csv(open(mf)?, &source).map_err(classify)?;
            let map = read_map_csv(open(pf)?, &source, &target).map_err(classify)?;
            let delta = block.delta.unwrap_or(source.critical_exponent());
            ConformalDensity::new(measure, delta, source.origin()).and_then(|d| NaturalMapContext::new(d, map, None))
        }
    };
    let ctx = ctx.map_err(classify)?;
    Ok(match block.delta {
        Some(delta) if model != NatmapModel::Files => {
            let density = ConformalDensity::new(ctx.density().seed().clone(), delta, source.origin()).map_err(classify)?;
            NaturalMapContext::new(density, ctx.map().clone(), None).map_err(classify)?
        }
        _ => ctx,
    })
}

pub const JACOBIAN_SLACK: f64 = 1e-6;

pub fn natmap(cx: &Context) -> Outcome {
    let cfg = &cx.loaded.config;
    let block = cfg
        .natmap
        .as_ref()
        .ok_or_else(|| CliError::Config("natmap needs a \"natmap\" block".into()))?;
    if block.points == 0 || !(block.radius >= 0.0) {
        return Err(CliError::Config("natmap needs points >= 1 and radius >= 0".into()));
    }
    let ctx = natmap_context(cx, block.model)?;
    let source = ctx.source();
    let mut rng = ChaCha8Rng::seed_from_u64(cx.seed ^ 0x6e61_746d);
    let xs: Vec<_> = std::iter::once(source.origin())
        .chain((1..block.points).map(|_| random_point(&mut rng, &source, block.radius)))
        .collect();
    let evals = evaluate_many(&ctx, &xs, cx.exec);
    let (mut max_jac, mut min_k) = (0.0f64, f64::INFINITY);
    let (mut failed, mut breaches, mut chain_breaks, mut near_elementary, mut non_invariant) = (0, 0, 0, 0, 0);
    let points: Vec<Value> = xs
        .iter()
        .zip(&evals)
        .map(|(x, e)| match e {
            Ok(ev) => {
                max_jac = max_jac.max(ev.jacobian);
                min_k = min_k.min(ev.min_k_eigenvalue);
                breaches += usize::from(ev.jacobian > 1.0 + JACOBIAN_SLACK);
                chain_breaks += usize::from(!ev.chain.holds);
                near_elementary += usize::from(ev.chain.near_elementary);
                non_invariant += usize::from(!ev.chain.v_invariant);
                json!({
                    "x": point_coords(x),
                    "fx": point_coords(&ev.fx),
                    "jacobian": ev.jacobian,
                    "singular_values": ev.singular_values,
                    "residual": ev.residual,
                    "min_k_eigenvalue": ev.min_k_eigenvalue,
                    "chain": ev.chain,
                })
            }
            Err(err) => {
                failed += 1;
                warn!("natural map undefined at a sample point: {err}");
                json!({ "x": point_coords(x), "error": err.to_string() })
            }
        })
        .collect();
    if breaches > 0 {
        warn!("{breaches} points exceed Jac <= 1 + {JACOBIAN_SLACK:e}");
    }
    let evaluated = xs.len() - failed;
    let mut passed = evaluated > 0 && breaches == 0 && chain_breaks == 0;
    if cx.strict {
        passed &= failed == 0 && non_invariant == 0;
    }
    Ok((
        json!({
            "model": block.model,
            "source": source.to_string(),
            "target": ctx.target().to_string(),
            "delta": ctx.delta(),
            "summary": {
                "points": xs.len(),
                "evaluated": evaluated,
                "failed": failed,
                "max_jacobian": if evaluated > 0 { Some(max_jac) } else { None },
                "min_k_eigenvalue": if evaluated > 0 { Some(min_k) } else { None },
                "jacobian_breaches": breaches,
                "chain_breaks": chain_breaks,
                "near_elementary": near_elementary,
                "non_invariant_image": non_invariant,
            },
            "points": points,
        }),
        passed,
    ))
}

fn lab_config(cx: &Context, block: &SpectrumBlock) -> Result<LabConfig, CliError> {
    let space = cx.loaded.config.source()?;
    let k = block.k.unwrap_or(space.dim());
    let d = block.d.unwrap_or(space.d());
    if block.restarts == 0 {
        return Err(CliError::Config("spectrum needs restarts >= 1".into()));
    }
    Ok(LabConfig::new(k, d)
        .map_err(classify)?
        .with_seed(cx.seed)
        .with_restarts(block.restarts)
        .with_exec(cx.exec))
}

pub fn spectrum(cx: &Context) -> Outcome {
    let block = cx.loaded.config.spectrum.clone().unwrap_or_default();
    let lab = lab_config(cx, &block)?;
    let (k, d) = (lab.k(), lab.d());
    info!("spectrum lab for (k, d) = ({k}, {d})");
    let max = maximize_phi(&lab).map_err(classify)?;
    let scan = boundary_scan(&lab, block.margin).map_err(classify)?;
    let probe = convergence_probe(&block.eps, &lab).map_err(classify)?;
    let target = lab.max_value();
    let mut checks = vec![
        Check::at_most("value_rel_error", ((max.value - target) / target).abs(), 1e-9),
        Check::at_most("argmax_distance", max.distance_to_center, 1e-5),
    ];
    match lab.vertex_bound() {
        Some(bound) => {
            checks.push(Check::at_most("vertex_sup", scan.vertex_sup, bound + 1e-6));
            checks.push(Check::at_most("vertex_ratio", scan.vertex_ratio, 0.549));
        }
        None => checks.push(Check::at_most("vertex_ratio", scan.vertex_ratio, 1e-3)),
    }
    checks.push(Check::flag("sublevel_strictly_decreasing", probe.strictly_decreasing));
    checks.push(Check::positive("degenerate_gap", probe.degenerate_gap));
    if let Some(path) = &block.samples_csv {
        write_samples(path, &scan).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
        info!("wrote {} scan samples to {}", scan.samples.len(), path.display());
    }
    let passed = checks.iter().all(|c| c.passed);
    let argmax: Vec<Vec<f64>> = max.h_star.matrix().row_iter().map(|r| r.iter().copied().collect()).collect();
    Ok((
        json!({
            "k": k,
            "d": d,
            "target_value": target,
            "value": max.value,
            "argmax": argmax,
            "certificate": max.certificate,
            "strata": scan,
            "convergence": probe,
            "checks": checks,
        }),
        passed,
    ))
}

/// Columns `stratum, a1, …, ak, value`.
fn write_samples(path: &std::path::Path, scan: &natmap_core::spectrum::BoundaryReport) -> Result<(), Error> {
    let mut w = csv::Writer::from_path(path)?;
    let k = scan.samples.first().map_or(0, |s| s.coords.len());
    let mut header = vec!["stratum".to_string()];
    header.extend((1..=k).map(|i| format!("a{i}")));
    header.push("value".into());
    w.write_record(&header)?;
    for s in &scan.samples {
        let mut row = vec![s.stratum.clone()];
        row.extend(s.coords.iter().map(|x| format!("{x:e}")));
        row.push(format!("{:e}", s.value));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub const NORMALIZED_TOL: f64 = 1e-9;

pub fn rigidity(cx: &Context) -> Outcome {
    let cfg = &cx.loaded.config;
    let (source, target) = (cfg.source()?, cfg.target()?);
    let rc = cfg.rigidity.clone().unwrap_or_else(|| RigidityConfig::new(Schedule::Loxodromic));
    let report = rigidity_demo(&source, &target, &rc, cx.exec).map_err(classify)?;
    let mut checks = vec![
        Check::flag("normalized_decreasing", report.normalized_decreasing),
        Check::flag("traces_hold", report.traces_hold),
    ];
    // the rotation part of the mixed schedule survives normalization and only decays
    if rc.schedule != Schedule::Mixed {
        checks.insert(0, Check::at_most("max_normalized_distance", report.max_normalized_distance, NORMALIZED_TOL));
    }
    if rc.schedule != Schedule::Identity && report.steps.len() > 1 {
        checks.push(Check::flag("drift_increasing", report.drift_increasing));
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok((json!({ "demo": report, "checks": checks }), passed))
}
