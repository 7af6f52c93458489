//! The determinant functionals on positive trace-one symmetric matrices:
//! `φ(H) = det H / det(I − H − Σ J_i H J_i)²`, its spectral majorant `ψ`,
//! the reduction `Ψ` to the open simplex and its chart `Ψ̂`, together with
//! optimizers, boundary scans and a sub-level-set probe around `I/k`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;

const TRACE_TOL: f64 = 1e-12;
const EIGEN_FLOOR: f64 = 1e-12;

/// Positive definite symmetric `k×k` matrix of trace one.
#[derive(Clone, Debug, PartialEq)]
pub struct SymPlusOne {
    h: DMatrix<f64>,
}

impl SymPlusOne {
    pub fn new(h: DMatrix<f64>) -> Result<SymPlusOne> {
        if !h.is_square() || h.nrows() == 0 {
            return Err(Error::InvalidMatrix("not a non-empty square matrix".into()));
        }
        let asym = (&h - h.transpose()).norm();
        if asym > 1e-12 * h.norm().max(1.0) {
            return Err(Error::InvalidMatrix(format!("not symmetric (defect {asym:e})")));
        }
        if (h.trace() - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidMatrix(format!("trace {} is not 1", h.trace())));
        }
        let min = SymmetricEigen::new(h.clone()).eigenvalues.min();
        if min <= 0.0 {
            return Err(Error::InvalidMatrix(format!("not positive definite (min eigenvalue {min:e})")));
        }
        Ok(SymPlusOne { h })
    }

    /// Symmetrizes, floors the spectrum at a tiny positive value and rescales to trace one.
    pub fn normalized(h: &DMatrix<f64>) -> Result<SymPlusOne> {
        let sym = (h + h.transpose()) * 0.5;
        let mut eig = SymmetricEigen::new(sym);
        for l in eig.eigenvalues.iter_mut() {
            *l = l.max(EIGEN_FLOOR);
        }
        let tr: f64 = eig.eigenvalues.iter().sum();
        eig.eigenvalues /= tr;
        let mut h = eig.recompose();
        h = (&h + h.transpose()) * 0.5;
        SymPlusOne::new(h)
    }

    pub fn center(k: usize) -> SymPlusOne {
        SymPlusOne {
            h: DMatrix::identity(k, k) / k as f64,
        }
    }

    pub fn diagonal(a: &[f64]) -> Result<SymPlusOne> {
        SymPlusOne::new(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(a)))
    }

    /// `Q diag(a) Qᵀ` with Haar-orthogonal `Q` and `a` uniform on the simplex.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, k: usize) -> SymPlusOne {
        let g = DMatrix::from_fn(k, k, |_, _| rng.sample::<f64, _>(StandardNormal));
        let q = g.qr().q();
        let a = nalgebra::DVector::from_vec(dirichlet(rng, k));
        SymPlusOne::normalized(&(&q * DMatrix::from_diagonal(&a) * q.transpose())).expect("positive spectrum")
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn distance_to_center(&self) -> f64 {
        let k = self.dim();
        (&self.h - DMatrix::identity(k, k) / k as f64).norm()
    }
}

/// Point of the open simplex, stored sorted in decreasing order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimplexPoint {
    a: Vec<f64>,
}

impl SimplexPoint {
    pub fn new(mut a: Vec<f64>) -> Result<SimplexPoint> {
        if a.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::BoundaryPoint);
        }
        let s: f64 = a.iter().sum();
        if (s - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidMatrix(format!("coordinates sum to {s}")));
        }
        a.sort_by(|x, y| y.total_cmp(x));
        Ok(SimplexPoint { a })
    }

    pub fn coords(&self) -> &[f64] {
        &self.a
    }
}

/// Dimension, algebra and optimizer settings.
#[derive(Clone, Debug, Serialize)]
pub struct LabConfig {
    k: usize,
    d: usize,
    #[serde(skip)]
    j_set: Vec<DMatrix<f64>>,
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
    #[serde(skip)]
    pub exec: Execution,
}

impl LabConfig {
    pub fn new(k: usize, d: usize) -> Result<LabConfig> {
        let bad = |m: &str| Err(Error::InvalidLabConfig(format!("(k, d) = ({k}, {d}): {m}")));
        if d != 2 && d != 4 {
            return bad("d must be 2 or 4");
        }
        if !k.is_multiple_of(d) {
            return bad("k must be a multiple of d");
        }
        if k < d + 2 {
            return bad("k must be at least d + 2");
        }
        if k == d + 2 && d == 4 {
            return bad("a quaternionic tangent space has dimension divisible by 4");
        }
        Ok(LabConfig {
            k,
            d,
            j_set: standard_j_set(k, d),
            restarts: 32,
            max_iters: 20_000,
            seed: 0,
            exec: Execution::default(),
        })
    }

    pub fn with_seed(mut self, seed: u64) -> LabConfig {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> LabConfig {
        self.restarts = restarts;
        self
    }

    pub fn with_exec(mut self, exec: Execution) -> LabConfig {
        self.exec = exec;
        self
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn j_set(&self) -> &[DMatrix<f64>] {
        &self.j_set
    }

    /// `(k/(k+d−2)²)^k`.
    pub fn max_value(&self) -> f64 {
        let (k, d) = (self.k as f64, self.d as f64);
        (k / (k + d - 2.0).powi(2)).powi(self.k as i32)
    }

    /// `3^{9/2}/4^8` for `(4, 2)`, the only case with `k = d + 2`.
    pub fn vertex_bound(&self) -> Option<f64> {
        (self.k == self.d + 2).then(|| amgm_constant(self))
    }

    fn exponents(&self) -> (f64, f64, f64) {
        let (k, d) = (self.k as f64, self.d as f64);
        let den = k + d - 2.0;
        let log_c = 2.0 * k * (k - 1.0) / den * (k - 1.0).ln() - 2.0 * k * den.ln();
        ((k - d) / den, 2.0 * (k - 1.0) / den, log_c)
    }
}

/// Left multiplication by the imaginary units on `ℂ^{k/2}` or `ℍ^{k/4}`.
pub fn standard_j_set(k: usize, d: usize) -> Vec<DMatrix<f64>> {
    let blocks: Vec<Vec<[usize; 2]>> = match d {
        // (row, col) of the +1 entries in each block; the transposed entries carry −1
        2 => vec![vec![[1, 0]]],
        4 => vec![vec![[1, 0], [3, 2]], vec![[2, 0], [1, 3]], vec![[3, 0], [2, 1]]],
        _ => vec![],
    };
    blocks
        .into_iter()
        .map(|plus| {
            let mut j = DMatrix::zeros(k, k);
            for b in (0..k).step_by(d) {
                for [r, c] in &plus {
                    j[(b + r, b + c)] = 1.0;
                    j[(b + c, b + r)] = -1.0;
                }
            }
            j
        })
        .collect()
}

/// `I − H − Σ J_i H J_i`.
pub fn phi_denominator(h: &SymPlusOne, cfg: &LabConfig) -> DMatrix<f64> {
    let k = h.dim();
    let mut m = DMatrix::identity(k, k) - h.matrix();
    for j in cfg.j_set() {
        m -= j * h.matrix() * j;
    }
    m
}

pub fn log_phi(h: &SymPlusOne, cfg: &LabConfig) -> Result<f64> {
    check_dim(h, cfg)?;
    let den = phi_denominator(h, cfg).cholesky().ok_or(Error::SingularDenominator)?;
    let log_den: f64 = den.l().diagonal().iter().map(|x| 2.0 * x.ln()).sum();
    let num = h.matrix().clone().cholesky().ok_or(Error::SingularDenominator)?;
    let log_num: f64 = num.l().diagonal().iter().map(|x| 2.0 * x.ln()).sum();
    Ok(log_num - 2.0 * log_den)
}

pub fn phi(h: &SymPlusOne, cfg: &LabConfig) -> Result<f64> {
    log_phi(h, cfg).map(f64::exp)
}

/// `ψ(H)` from `det H` and `det(I − H)`.
pub fn psi(h: &SymPlusOne, cfg: &LabConfig) -> Result<f64> {
    check_dim(h, cfg)?;
    let (e1, e2, log_c) = cfg.exponents();
    let k = h.dim();
    let det_h = h.matrix().determinant();
    let det_c = (DMatrix::identity(k, k) - h.matrix()).determinant();
    if !(det_c > 0.0) || !(det_h > 0.0) {
        return Err(Error::SingularDenominator);
    }
    Ok((log_c + e1 * det_h.ln() - e2 * det_c.ln()).exp())
}

pub fn eigen_map(h: &SymPlusOne) -> SimplexPoint {
    let mut a: Vec<f64> = SymmetricEigen::new(h.matrix().clone()).eigenvalues.iter().copied().collect();
    let s: f64 = a.iter().sum();
    for x in &mut a {
        *x /= s;
    }
    SimplexPoint::new(a).expect("spectrum of a positive trace-one matrix")
}

fn log_psi_simplex(a: &[f64], cfg: &LabConfig) -> f64 {
    let (e1, e2, log_c) = cfg.exponents();
    log_c + a.iter().map(|&x| e1 * x.ln() - e2 * (1.0 - x).ln()).sum::<f64>()
}

/// `Ψ` on the open simplex.
pub fn psi_simplex(a: &SimplexPoint, cfg: &LabConfig) -> Result<f64> {
    if a.coords().len() != cfg.k() {
        return Err(Error::InvalidLabConfig(format!("expected {} coordinates", cfg.k())));
    }
    Ok(log_psi_simplex(a.coords(), cfg).exp())
}

/// `Ψ̂(a_1, …, a_{k−1})` in the chart where `a_k = 1 − Σ a_i`.
pub fn psi_hat(a: &[f64], cfg: &LabConfig) -> Result<f64> {
    if a.len() + 1 != cfg.k() {
        return Err(Error::InvalidLabConfig(format!("expected {} coordinates", cfg.k() - 1)));
    }
    let s: f64 = a.iter().sum();
    if a.iter().any(|&x| !(x > 0.0)) || !(s < 1.0) {
        return Err(Error::BoundaryPoint);
    }
    let (e1, e2, log_c) = cfg.exponents();
    let log_num: f64 = a.iter().map(|x| x.ln()).sum::<f64>() + (1.0 - s).ln();
    let log_den: f64 = a.iter().map(|x| (1.0 - x).ln()).sum::<f64>() + s.ln();
    Ok((log_c + e1 * log_num - e2 * log_den).exp())
}

/// Leading behaviour of `Ψ̂` at the origin vertex: `C (Π a_i)^{e₁} / (Σ a_i)^{e₂}`.
pub fn vertex_leading_factor(a: &[f64], cfg: &LabConfig) -> f64 {
    let (e1, e2, log_c) = cfg.exponents();
    let s: f64 = a.iter().sum();
    (log_c + e1 * a.iter().map(|x| x.ln()).sum::<f64>() - e2 * s.ln()).exp()
}

fn amgm_constant(cfg: &LabConfig) -> f64 {
    let (k, d) = (cfg.k as f64, cfg.d as f64);
    let den = k + d - 2.0;
    ((k - 1.0) * (k + d) / den * (k - 1.0).ln() - 2.0 * k * den.ln()).exp()
}

/// AM-GM bound on the vertex leading factor, a function of `Σ a_i` only.
pub fn amgm_majorant(a: &[f64], cfg: &LabConfig) -> f64 {
    let (k, d) = (cfg.k as f64, cfg.d as f64);
    let s: f64 = a.iter().sum();
    amgm_constant(cfg) * s.powf((k - 1.0) * (k - d - 2.0) / (k + d - 2.0))
}

fn check_dim(h: &SymPlusOne, cfg: &LabConfig) -> Result<()> {
    if h.dim() != cfg.k() {
        return Err(Error::InvalidLabConfig(format!("matrix has size {}, expected {}", h.dim(), cfg.k())));
    }
    Ok(())
}

/// Gradient of `log φ` projected to the traceless symmetric matrices.
pub fn grad_log_phi(h: &SymPlusOne, cfg: &LabConfig) -> Result<DMatrix<f64>> {
    let k = h.dim();
    let den_inv = phi_denominator(h, cfg).try_inverse().ok_or(Error::SingularDenominator)?;
    let h_inv = h.matrix().clone().try_inverse().ok_or(Error::SingularDenominator)?;
    let mut a = den_inv.clone();
    for j in cfg.j_set() {
        a += j * &den_inv * j;
    }
    let g = h_inv + a * 2.0;
    let g = (&g + g.transpose()) * 0.5;
    let tr = g.trace() / k as f64;
    Ok(g - DMatrix::identity(k, k) * tr)
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalRun {
    #[serde(skip)]
    pub h: SymPlusOne,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Projected gradient ascent of `log φ` on the trace-one slice with backtracking.
pub fn ascend(start: &SymPlusOne, cfg: &LabConfig) -> Result<LocalRun> {
    let tol = 1e-11;
    let mut h = start.clone();
    let mut f = log_phi(&h, cfg)?;
    let mut g = grad_log_phi(&h, cfg)?;
    let mut step = 1e-2;
    let mut it = 0;
    while it < cfg.max_iters && g.norm() > tol {
        let g2 = g.norm_squared();
        let mut accepted = false;
        for _ in 0..60 {
            let trial = SymPlusOne::normalized(&(h.matrix() + &g * step))?;
            if let Ok(ft) = log_phi(&trial, cfg) {
                // near the maximum the Armijo gain drops below the rounding of f;
                // a step that keeps f and shrinks the gradient is then accepted
                let flat = ft >= f - 1e-15 * f.abs()
                    && grad_log_phi(&trial, cfg).is_ok_and(|gt| gt.norm_squared() < 0.25 * g2);
                if ft >= f + 1e-4 * step * g2 || flat {
                    h = trial;
                    f = ft;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        it += 1;
        if !accepted {
            break;
        }
        g = grad_log_phi(&h, cfg)?;
        step = (step * 2.0).min(1.0);
    }
    let grad_norm = g.norm();
    Ok(LocalRun {
        h,
        value: f.exp(),
        grad_norm,
        iterations: it,
        converged: grad_norm <= tol * 10.0,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub restarts: usize,
    pub converged: usize,
    pub best_value: f64,
    /// Best value among runs ending farther than `1e-3` from the best argmax.
    pub second_best: Option<f64>,
    pub gap: Option<f64>,
    /// Largest distance from the best argmax among converged runs.
    pub argmax_spread: f64,
    pub grad_norm: f64,
    /// Maximum of `Ψ` found independently on the simplex.
    pub simplex_value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PhiMaximum {
    #[serde(skip)]
    pub h_star: SymPlusOne,
    pub value: f64,
    pub distance_to_center: f64,
    pub certificate: Certificate,
}

/// Multi-start ascent of `φ`; the best run must be a stationary point.
pub fn maximize_phi(cfg: &LabConfig) -> Result<PhiMaximum> {
    let runs: Vec<Result<LocalRun>> = cfg.exec.map_range(cfg.restarts.max(1), |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(0x9e37_79b9).wrapping_add(i as u64));
        ascend(&SymPlusOne::random(&mut rng, cfg.k()), cfg)
    });
    let runs: Vec<LocalRun> = runs.into_iter().collect::<Result<_>>()?;
    let converged: Vec<&LocalRun> = runs.iter().filter(|r| r.converged).collect();
    let Some(best) = converged.iter().max_by(|a, b| a.value.total_cmp(&b.value)).map(|r| (*r).clone()) else {
        let best_value = runs.iter().map(|r| r.value).fold(0.0, f64::max);
        return Err(Error::OptimizerFailure { best_value });
    };
    let far = |r: &&LocalRun| (r.h.matrix() - best.h.matrix()).norm() > 1e-3;
    let second_best = runs.iter().filter(far).map(|r| r.value).reduce(f64::max);
    let argmax_spread = converged
        .iter()
        .map(|r| (r.h.matrix() - best.h.matrix()).norm())
        .fold(0.0, f64::max);
    let simplex_value = maximize_psi_simplex(cfg);
    Ok(PhiMaximum {
        distance_to_center: best.h.distance_to_center(),
        value: best.value,
        certificate: Certificate {
            restarts: runs.len(),
            converged: converged.len(),
            best_value: best.value,
            second_best,
            gap: second_best.map(|s| best.value - s),
            argmax_spread,
            grad_norm: best.grad_norm,
            simplex_value,
        },
        h_star: best.h,
    })
}

/// Ascent of `log Ψ` in softmax coordinates from a seeded start.
fn maximize_psi_simplex(cfg: &LabConfig) -> f64 {
    let k = cfg.k();
    let (e1, e2, _) = cfg.exponents();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5151);
    let softmax = |z: &[f64]| {
        let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = z.iter().map(|x| (x - m).exp()).collect();
        let s: f64 = e.iter().sum();
        e.into_iter().map(|x| x / s).collect::<Vec<_>>()
    };
    let mut z: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut a = softmax(&z);
    let mut f = log_psi_simplex(&a, cfg);
    let mut step = 0.1;
    for _ in 0..cfg.max_iters {
        let g: Vec<f64> = a.iter().map(|&x| e1 / x + e2 / (1.0 - x)).collect();
        let mean: f64 = a.iter().zip(&g).map(|(x, y)| x * y).sum();
        let grad: Vec<f64> = a.iter().zip(&g).map(|(x, y)| x * (y - mean)).collect();
        let g2: f64 = grad.iter().map(|x| x * x).sum();
        if g2.sqrt() < 1e-13 {
            break;
        }
        let mut moved = false;
        for _ in 0..60 {
            let zt: Vec<f64> = z.iter().zip(&grad).map(|(x, y)| x + step * y).collect();
            let at = softmax(&zt);
            let ft = log_psi_simplex(&at, cfg);
            if ft >= f + 1e-4 * step * g2 {
                z = zt;
                a = at;
                f = ft;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
        step = (step * 2.0).min(10.0);
    }
    f.exp()
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanSample {
    pub stratum: String,
    pub coords: Vec<f64>,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundaryReport {
    pub margin: f64,
    pub vertex_sup: f64,
    pub face_sup: f64,
    pub interior_max: f64,
    pub vertex_ratio: f64,
    pub face_ratio: f64,
    pub vertex_bound: Option<f64>,
    #[serde(skip)]
    pub samples: Vec<ScanSample>,
}

fn dirichlet<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x: f64| x / s).collect()
}

const SCAN_SAMPLES: usize = 400;

/// Suprema of `Ψ̂` over points within `margin` of the vertices and of the
/// remaining boundary of the chart simplex.
pub fn boundary_scan(cfg: &LabConfig, margin: f64) -> Result<BoundaryReport> {
    let k = cfg.k();
    if !(margin > 0.0 && margin < 1.0 / k as f64) {
        return Err(Error::InvalidLabConfig(format!("margin {margin} outside (0, 1/k)")));
    }
    let chart = |full: &[f64]| psi_hat(&full[..k - 1], cfg);
    // vertex v: a_v = 1 − s and the others share s
    let vertex: Vec<Result<Vec<ScanSample>>> = cfg.exec.map_range(k, |v| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (v as u64 + 1) << 8);
        let mut out = Vec::with_capacity(SCAN_SAMPLES + 1);
        for i in 0..=SCAN_SAMPLES {
            let (s, w) = if i == 0 {
                (margin, vec![1.0 / (k - 1) as f64; k - 1])
            } else {
                (margin * rng.random::<f64>().max(1e-3), dirichlet(&mut rng, k - 1))
            };
            let mut full = Vec::with_capacity(k);
            let mut it = w.iter();
            for j in 0..k {
                full.push(if j == v { 1.0 - s } else { s * it.next().unwrap() });
            }
            let value = chart(&full)?;
            out.push(ScanSample {
                stratum: format!("vertex{v}"),
                coords: full,
                value,
            });
        }
        Ok(out)
    });
    // face i: a_i within the margin, the other coordinates away from every vertex
    let face: Vec<Result<Vec<ScanSample>>> = cfg.exec.map_range(k, |f| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (f as u64 + 1) << 24);
        let mut out = Vec::with_capacity(SCAN_SAMPLES + 1);
        for i in 0..=SCAN_SAMPLES {
            let t = if i == 0 { margin } else { margin * rng.random::<f64>().max(1e-3) };
            let w = if i == 0 {
                vec![1.0 / (k - 1) as f64; k - 1]
            } else {
                loop {
                    let w = dirichlet(&mut rng, k - 1);
                    if w.iter().copied().fold(0.0, f64::max) < 0.9 {
                        break w;
                    }
                }
            };
            let mut full = Vec::with_capacity(k);
            let mut it = w.iter();
            for j in 0..k {
                full.push(if j == f { t } else { (1.0 - t) * it.next().unwrap() });
            }
            let value = chart(&full)?;
            out.push(ScanSample {
                stratum: format!("face{f}"),
                coords: full,
                value,
            });
        }
        Ok(out)
    });
    let mut samples = Vec::new();
    for part in vertex.into_iter().chain(face) {
        samples.extend(part?);
    }
    let sup = |prefix: &str| {
        samples
            .iter()
            .filter(|s| s.stratum.starts_with(prefix))
            .map(|s| s.value)
            .fold(0.0, f64::max)
    };
    let (vertex_sup, face_sup) = (sup("vertex"), sup("face"));
    let interior_max = psi_simplex(&SimplexPoint::new(vec![1.0 / k as f64; k])?, cfg)?;
    Ok(BoundaryReport {
        margin,
        vertex_sup,
        face_sup,
        interior_max,
        vertex_ratio: vertex_sup / interior_max,
        face_ratio: face_sup / interior_max,
        vertex_bound: cfg.vertex_bound(),
        samples,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct VertexSweep {
    pub reports: Vec<BoundaryReport>,
    pub vertex_decreasing: bool,
}

/// Boundary scans at shrinking margins.
pub fn vertex_sweep(cfg: &LabConfig, margins: &[f64]) -> Result<VertexSweep> {
    let reports = margins.iter().map(|&m| boundary_scan(cfg, m)).collect::<Result<Vec<_>>>()?;
    let vertex_decreasing = reports.windows(2).all(|w| w[1].vertex_sup < w[0].vertex_sup);
    Ok(VertexSweep {
        reports,
        vertex_decreasing,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SublevelEntry {
    pub eps: f64,
    pub diameter: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub entries: Vec<SublevelEntry>,
    pub strictly_decreasing: bool,
    /// `(t, φ(H_t))` along `H_t = diag(t, (1−t)/(k−1), …)`.
    pub degenerate_path: Vec<(f64, f64)>,
    /// `max − sup φ` over the degenerate path.
    pub degenerate_gap: f64,
}

const PROBE_DIRECTIONS: usize = 256;
const PROBE_GRID: usize = 400;

/// For each `ε`, the largest `‖H − I/k‖_F` found with `φ(H) ≥ (1 − ε)·max`,
/// searched along rays from `I/k`.
pub fn convergence_probe(eps: &[f64], cfg: &LabConfig) -> Result<ConvergenceReport> {
    if eps.iter().any(|&e| !(e >= 0.0)) || eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidLabConfig("ε must be non-negative and strictly decreasing".into()));
    }
    let k = cfg.k();
    let max = cfg.max_value();
    let center = DMatrix::<f64>::identity(k, k) / k as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xc0ffee);
    let mut dirs: Vec<DMatrix<f64>> = Vec::with_capacity(PROBE_DIRECTIONS + 2 * k);
    for i in 0..k {
        for j in i..k {
            if dirs.len() >= 2 * k {
                break;
            }
            let mut e = DMatrix::zeros(k, k);
            if i == j {
                e[(i, i)] = 1.0;
                e[((i + 1) % k, (i + 1) % k)] = -1.0;
            } else {
                e[(i, j)] = 1.0;
                e[(j, i)] = 1.0;
            }
            dirs.push(e);
        }
    }
    while dirs.len() < PROBE_DIRECTIONS + 2 * k {
        let a = DMatrix::from_fn(k, k, |_, _| rng.sample::<f64, _>(StandardNormal));
        dirs.push(a.clone() + a.transpose());
    }
    for e in &mut dirs {
        let tr = e.trace() / k as f64;
        *e -= DMatrix::identity(k, k) * tr;
        let n = e.norm();
        *e /= n;
    }
    let entries = eps
        .iter()
        .map(|&e| {
            let level = (max * (1.0 - e)).ln();
            let radii = cfg.exec.map_slice(&dirs, |dir| ray_radius(&center, dir, level, cfg));
            let diameter = radii.into_iter().fold(0.0, f64::max);
            SublevelEntry { eps: e, diameter }
        })
        .collect::<Vec<_>>();
    let strictly_decreasing = entries.windows(2).all(|w| w[1].diameter < w[0].diameter);
    let degenerate_path = (1..=12)
        .map(|n| {
            let t = 10f64.powi(-n);
            let mut a = vec![(1.0 - t) / (k - 1) as f64; k];
            a[0] = t;
            let h = SymPlusOne::diagonal(&a).expect("positive diagonal");
            (t, phi(&h, cfg).unwrap_or(0.0))
        })
        .collect::<Vec<_>>();
    let sup = degenerate_path.iter().map(|p| p.1).fold(0.0, f64::max);
    Ok(ConvergenceReport {
        entries,
        strictly_decreasing,
        degenerate_path,
        degenerate_gap: max - sup,
    })
}

/// Largest `t` on a grid (refined by bisection) with `log φ(I/k + t E) ≥ level`.
fn ray_radius(center: &DMatrix<f64>, dir: &DMatrix<f64>, level: f64, cfg: &LabConfig) -> f64 {
    let lmin = SymmetricEigen::new(dir.clone()).eigenvalues.min();
    let t_max = if lmin < 0.0 { -(1.0 / cfg.k() as f64) / lmin } else { 1.0 };
    let above = |t: f64| {
        SymPlusOne::new(center + dir * t)
            .ok()
            .and_then(|h| log_phi(&h, cfg).ok())
            .is_some_and(|v| v >= level)
    };
    let grid = |i: usize| t_max * i as f64 / PROBE_GRID as f64;
    let Some(last) = (1..PROBE_GRID).rev().find(|&i| above(grid(i))) else {
        // the sub-level set is inside the first grid cell
        let (mut lo, mut hi) = (0.0, grid(1));
        if !above(hi * 1e-9) {
            return 0.0;
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if above(mid) { lo = mid } else { hi = mid }
        }
        return lo;
    };
    let (mut lo, mut hi) = (grid(last), grid(last + 1));
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if above(mid) { lo = mid } else { hi = mid }
    }
    lo
}
