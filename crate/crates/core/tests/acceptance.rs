//! Numbered acceptance checks, one `[PASS]`/`[FAIL]` line each.
//! Exits non-zero when any check fails.

use std::time::{Duration, Instant};

use natmap_core::geometry::{busemann, log_polar_volume_density};
use natmap_core::measures::ConformalDensity;
use natmap_core::natural_map::{
    ball_volume, differential, evaluate, finite_difference_differential, random_context, symmetric_model,
};
use natmap_core::rigidity::{rigidity_demo, RigidityConfig, Schedule};
use natmap_core::sampling::random_point;
use natmap_core::spectrum::{boundary_scan, convergence_probe, maximize_phi, LabConfig};
use natmap_core::suites::{barycenter_suite, busemann_suite};
use natmap_core::{Error, Execution, Space};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Outcome {
        Outcome {
            passed,
            detail: detail.into(),
        }
    }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let out = f();
    let took = start.elapsed();
    let within = limit.is_none_or(|l| took <= l);
    let budget = limit.map_or(String::new(), |l| format!(" / {}s", l.as_secs()));
    Outcome::new(
        out.passed && within,
        format!("{} [{:.2}s{budget}]", out.detail, took.as_secs_f64()),
    )
}

fn lab(k: usize, d: usize) -> LabConfig {
    LabConfig::new(k, d).expect("valid lab").with_seed(3)
}

fn phi_maximum() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, d) in [(4, 2), (6, 2), (8, 4)] {
        let out = timed(Some(Duration::from_secs(60)), || {
            let cfg = lab(k, d);
            match maximize_phi(&cfg) {
                Ok(m) => {
                    let rel = (m.value - cfg.max_value()).abs() / cfg.max_value();
                    Outcome::new(
                        rel <= 1e-9 && m.distance_to_center <= 1e-5,
                        format!("({k},{d}) rel {rel:.1e} argmax {:.1e}", m.distance_to_center),
                    )
                }
                Err(e) => Outcome::new(false, format!("({k},{d}) {e}")),
            }
        });
        ok &= out.passed;
        parts.push(out.detail);
    }
    Outcome::new(ok, parts.join("; "))
}

fn vertex_bound() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, d) in [(4, 2), (6, 2), (8, 4)] {
        let cfg = lab(k, d);
        match boundary_scan(&cfg, 1e-6) {
            Ok(r) => match cfg.vertex_bound() {
                Some(b) => {
                    ok &= r.vertex_sup <= b + 1e-6 && r.vertex_ratio <= 0.549;
                    parts.push(format!(
                        "({k},{d}) sup {:.7e} vs constant {:.7e} (+1e-6 allowed), ratio {:.4}",
                        r.vertex_sup, b, r.vertex_ratio
                    ));
                }
                None => {
                    ok &= r.vertex_ratio <= 1e-3;
                    parts.push(format!("({k},{d}) ratio {:.1e}", r.vertex_ratio));
                }
            },
            Err(e) => {
                ok = false;
                parts.push(format!("({k},{d}) {e}"));
            }
        }
    }
    Outcome::new(ok, parts.join("; "))
}

fn suite_summary(r: &natmap_core::suites::SuiteReport) -> String {
    let worst = r
        .properties
        .iter()
        .filter(|p| !p.passed)
        .map(|p| format!("{} {:.1e}>{:.0e}", p.name, p.max_residual, p.tolerance))
        .collect::<Vec<_>>();
    if worst.is_empty() {
        format!("{} ok", r.space)
    } else {
        format!("{} {}", r.space, worst.join(", "))
    }
}

fn busemann_check() -> Outcome {
    timed(Some(Duration::from_secs(10)), || {
        let reports: Vec<_> = [Space::complex(2), Space::complex(3), Space::quaternionic(2)]
            .iter()
            .map(|s| busemann_suite(s, 31, 100, 15.0))
            .collect();
        let limit = reports
            .iter()
            .map(|r| r.get("limit").map_or(f64::INFINITY, |p| p.max_residual))
            .fold(0.0, f64::max);
        Outcome::new(
            reports.iter().all(|r| r.passed),
            format!(
                "{}; worst limit residual {limit:.1e}",
                reports.iter().map(suite_summary).collect::<Vec<_>>().join("; ")
            ),
        )
    })
}

fn barycenter_check() -> Outcome {
    let reports: Vec<_> = [Space::complex(2), Space::quaternionic(2)]
        .iter()
        .map(|s| barycenter_suite(s, 17, 50, 20))
        .collect();
    Outcome::new(
        reports.iter().all(|r| r.passed),
        reports.iter().map(suite_summary).collect::<Vec<_>>().join("; "),
    )
}

fn context_pairs() -> Vec<(Space, Space)> {
    vec![
        (Space::complex(2), Space::complex(2)),
        (Space::complex(2), Space::complex(3)),
        (Space::complex(2), Space::complex(4)),
        (Space::quaternionic(2), Space::quaternionic(3)),
    ]
}

struct ContextResult {
    evaluated: usize,
    max_jac: f64,
    chain_ok: bool,
}

fn jacobian_bound() -> Outcome {
    timed(Some(Duration::from_secs(300)), || {
        let pairs = context_pairs();
        let per_context = |i: usize| -> ContextResult {
            let (s, t) = pairs[i % pairs.len()];
            let mut res = ContextResult {
                evaluated: 0,
                max_jac: 0.0,
                chain_ok: true,
            };
            let Ok(ctx) = random_context(&s, &t, 1000 + i as u64) else { return res };
            let mut rng = ChaCha8Rng::seed_from_u64(i as u64);
            let points = std::iter::once(s.origin()).chain((0..3).map(|_| random_point(&mut rng, &s, 0.5)));
            for x in points.collect::<Vec<_>>() {
                match evaluate(&ctx, &x) {
                    Ok(ev) => {
                        res.evaluated += 1;
                        res.max_jac = res.max_jac.max(ev.jacobian);
                        res.chain_ok &= ev.chain.holds;
                    }
                    // measures with a dominant atom are not admissible data
                    Err(Error::ElementaryData(_)) | Err(Error::DegenerateForms(_)) => {}
                    Err(_) => res.chain_ok = false,
                }
            }
            res
        };
        let results = Execution::Parallel.map_range(800, per_context);
        let admissible: Vec<_> = results.iter().filter(|r| r.evaluated > 0).collect();
        let points: usize = admissible.iter().map(|r| r.evaluated).sum();
        let max_jac = admissible.iter().map(|r| r.max_jac).fold(0.0, f64::max);
        let chain_ok = results.iter().all(|r| r.chain_ok);
        let mut ok = admissible.len() >= 500 && max_jac <= 1.0 + 1e-6 && chain_ok;
        let mut sym = Vec::new();
        for (s, t) in [
            (Space::complex(2), Space::complex(2)),
            (Space::complex(2), Space::complex(3)),
            (Space::quaternionic(2), Space::quaternionic(2)),
        ] {
            let ctx = symmetric_model(&s, &t).expect("symmetric model");
            match differential(&ctx, &s.origin()) {
                Ok(d) => {
                    let sv_dev = d.singular_values().iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
                    let jac = d.jacobian();
                    ok &= (jac - 1.0).abs() <= 1e-6 && sv_dev <= 1e-3;
                    sym.push(format!("{s}->{t} Jac {jac:.9} sv dev {sv_dev:.1e}"));
                }
                Err(e) => {
                    ok = false;
                    sym.push(format!("{s}->{t} {e}"));
                }
            }
        }
        Outcome::new(
            ok,
            format!(
                "{} admissible contexts, {points} points, max Jac {max_jac:.6}, chain {}; {}",
                admissible.len(),
                if chain_ok { "holds" } else { "BROKEN" },
                sym.join("; ")
            ),
        )
    })
}

/// Central differences converge quadratically here; 1e-4 keeps the truncation
/// error well under the tolerance even for nearly elementary data.
const FD_STEP: f64 = 1e-4;

fn implicit_differential() -> Outcome {
    let pairs = context_pairs();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = 0.0f64;
    let mut done = 0;
    let mut seed = 500;
    while done < 20 && seed < 600 {
        let (s, t) = pairs[seed as usize % pairs.len()];
        seed += 1;
        let Ok(ctx) = random_context(&s, &t, seed) else { continue };
        let x = random_point(&mut rng, &s, 0.5);
        let (Ok(d), Ok(fd)) = (differential(&ctx, &x), finite_difference_differential(&ctx, &x, FD_STEP)) else {
            continue;
        };
        worst = worst.max((&d.matrix - &fd).norm() / d.matrix.norm());
        done += 1;
    }
    Outcome::new(done == 20 && worst <= 1e-4, format!("{done} contexts, step {FD_STEP:e}, worst relative error {worst:.1e}"))
}

/// Least-squares slope of `f` over an evenly spaced grid on `[a, b]`.
fn slope(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let n = 41;
    let ts: Vec<f64> = (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect();
    let ys: Vec<f64> = ts.iter().map(|&t| f(t)).collect();
    let (mt, my) = (ts.iter().sum::<f64>() / n as f64, ys.iter().sum::<f64>() / n as f64);
    let sxy: f64 = ts.iter().zip(&ys).map(|(t, y)| (t - mt) * (y - my)).sum();
    let sxx: f64 = ts.iter().map(|t| (t - mt).powi(2)).sum();
    sxy / sxx
}

fn conformal_density() -> Outcome {
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for space in [Space::complex(2), Space::complex(3), Space::quaternionic(2)] {
        for trial in 0..20 {
            let seed = natmap_core::measures::random_measure(&space, trial, 9, 3.0).expect("measure");
            let o = space.origin();
            let family = ConformalDensity::new(seed, space.critical_exponent(), o.clone()).expect("density");
            let y = random_point(&mut rng, &space, 1.5);
            let x = random_point(&mut rng, &space, 1.5);
            let direct = family.density_at(&x);
            // through y: dμ_x = e^{-δ B_y(x, ·)} dμ_y
            let via = family.density_at(&y);
            for ((t, a), (_, b)) in direct.atoms().iter().zip(via.atoms()) {
                let b = b * (-space.critical_exponent() * busemann(&x, t, &y)).exp();
                worst = worst.max((a - b).abs() / a.abs());
            }
            // the same density re-based at y
            let rebased = ConformalDensity::new(via.clone(), space.critical_exponent(), y).expect("density");
            for ((_, a), (_, b)) in direct.atoms().iter().zip(rebased.density_at(&x).atoms()) {
                worst = worst.max((a - b).abs() / a.abs());
            }
        }
    }
    let mut ok = worst <= 1e-9;
    let mut parts = vec![format!("cocycle worst rel {worst:.1e}")];
    for (space, want) in [(Space::complex(2), 4.0), (Space::quaternionic(2), 10.0)] {
        let density_slope = slope(|t| log_polar_volume_density(&space, t), 15.0, 30.0);
        let volume_slope = slope(|r| ball_volume(&space, r).ln(), 10.0, 14.0);
        ok &= (density_slope - want).abs() <= 1e-3 && (volume_slope - want).abs() <= 1e-3;
        parts.push(format!(
            "{space} slopes {density_slope:.6} (density), {volume_slope:.6} (volume) vs {want}"
        ));
    }
    Outcome::new(ok, parts.join("; "))
}

fn rigidity() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (s, t) in [
        (Space::complex(2), Space::complex(3)),
        (Space::quaternionic(2), Space::quaternionic(3)),
    ] {
        match rigidity_demo(&s, &t, &RigidityConfig::new(Schedule::Loxodromic), Execution::Parallel) {
            Ok(r) => {
                ok &= r.drift_increasing && r.max_normalized_distance <= 1e-9 && r.traces_hold;
                let last = r.steps.last().expect("steps");
                parts.push(format!(
                    "{s}->{t} drift {:.2}..{:.2} increasing {}, max normalized {:.1e}, traces {}",
                    r.steps[0].drift, last.drift, r.drift_increasing, r.max_normalized_distance, r.traces_hold
                ));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("{s}->{t} {e}"));
            }
        }
        match rigidity_demo(&s, &t, &RigidityConfig::new(Schedule::Mixed), Execution::Parallel) {
            Ok(r) => {
                ok &= r.traces_hold && r.normalized_decreasing && r.drift_increasing;
                parts.push(format!("mixed traces {} decreasing {}", r.traces_hold, r.normalized_decreasing));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("mixed {e}"));
            }
        }
    }
    Outcome::new(ok, parts.join("; "))
}

fn sublevel_probe() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, d) in [(4, 2), (8, 4)] {
        match convergence_probe(&[1e-2, 1e-4, 1e-6], &lab(k, d)) {
            Ok(r) => {
                ok &= r.strictly_decreasing && r.degenerate_gap > 0.0;
                let diam: Vec<String> = r.entries.iter().map(|e| format!("{:.2e}", e.diameter)).collect();
                parts.push(format!("({k},{d}) diameters [{}] gap {:.2e}", diam.join(", "), r.degenerate_gap));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("({k},{d}) {e}"));
            }
        }
    }
    Outcome::new(ok, parts.join("; "))
}

type Named = (&'static str, fn() -> Outcome);

fn main() {
    let checks: [Named; 9] = [
        ("phi maximum", phi_maximum),
        ("vertex bound", vertex_bound),
        ("Busemann suite", busemann_check),
        ("barycentre suite", barycenter_check),
        ("Jacobian bound", jacobian_bound),
        ("implicit differential", implicit_differential),
        ("conformal density", conformal_density),
        ("rigidity demo", rigidity),
        ("sub-level probe", sublevel_probe),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let out = timed(None, check);
        if !out.passed {
            failed += 1;
        }
        println!("[{}] {}. {name}: {}", if out.passed { "PASS" } else { "FAIL" }, i + 1, out.detail);
    }
    if failed > 0 {
        println!("{failed} of {} acceptance checks failed", checks.len());
        std::process::exit(1);
    }
}
