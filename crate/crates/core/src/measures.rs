//! Finitely supported positive measures on the boundary, conformal densities,
//! pushforwards and a transport metric for the weak-* topology.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::Space;
use crate::error::{Error, Result};
use crate::geometry::{busemann, distance, log_map, BoundaryPoint, Point};
use crate::isometry::Isometry;
use crate::sampling::random_boundary;

/// Atoms closer than this in chordal distance are the same projective class.
pub const ATOM_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryMeasure {
    space: Space,
    atoms: Vec<(BoundaryPoint, f64)>,
}

impl BoundaryMeasure {
    pub fn new(space: Space, atoms: Vec<(BoundaryPoint, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("no atoms".into()));
        }
        for (i, (th, w)) in atoms.iter().enumerate() {
            space.ensure_same(&th.space())?;
            if !(w.is_finite() && *w > 0.0) {
                return Err(Error::InvalidMeasure(format!("weight {w} of atom {i} is not positive")));
            }
            if atoms[..i].iter().any(|(other, _)| other.chordal(th) <= ATOM_TOL) {
                return Err(Error::InvalidMeasure(format!("atom {i} repeats an earlier atom")));
            }
        }
        Ok(BoundaryMeasure { space, atoms })
    }

    /// Like [`BoundaryMeasure::new`] but sums the weights of coincident atoms.
    pub fn merged(space: Space, atoms: Vec<(BoundaryPoint, f64)>) -> Result<Self> {
        let mut out: Vec<(BoundaryPoint, f64)> = Vec::with_capacity(atoms.len());
        for (th, w) in atoms {
            match out.iter_mut().find(|(o, _)| o.chordal(&th) <= ATOM_TOL) {
                Some(slot) => slot.1 += w,
                None => out.push((th, w)),
            }
        }
        BoundaryMeasure::new(space, out)
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn atoms(&self) -> &[(BoundaryPoint, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|(_, w)| w).sum()
    }

    pub fn normalize(&self) -> BoundaryMeasure {
        let m = self.total_mass();
        self.scale(1.0 / m)
    }

    pub fn scale(&self, c: f64) -> BoundaryMeasure {
        BoundaryMeasure {
            space: self.space,
            atoms: self.atoms.iter().map(|(t, w)| (t.clone(), w * c)).collect(),
        }
    }

    /// Largest atom as a fraction of the total mass.
    pub fn max_atom_ratio(&self) -> f64 {
        let m = self.total_mass();
        self.atoms.iter().map(|(_, w)| w / m).fold(0.0, f64::max)
    }

    /// Index of the heaviest atom.
    /// Chordal `W1` distance from the normalized measure to the nearest Dirac
    /// mass at one of its atoms.
    pub fn dirac_distance(&self) -> f64 {
        let m = self.total_mass();
        self.atoms
            .iter()
            .map(|(c, _)| self.atoms.iter().map(|(t, w)| w / m * t.chordal(c)).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn heaviest(&self) -> usize {
        let mut best = 0;
        for (i, (_, w)) in self.atoms.iter().enumerate() {
            if *w > self.atoms[best].1 {
                best = i;
            }
        }
        best
    }

    /// Image under a map defined on every atom; coincident images are merged.
    pub fn pushforward<M: BoundaryMap + ?Sized>(&self, map: &M) -> Result<BoundaryMeasure> {
        let atoms = self
            .atoms
            .iter()
            .map(|(t, w)| Ok((map.map_boundary(t)?, *w)))
            .collect::<Result<Vec<_>>>()?;
        BoundaryMeasure::merged(map.target_space(), atoms)
    }
}

/// Anything that can push boundary atoms forward.
pub trait BoundaryMap {
    fn target_space(&self) -> Space;
    fn map_boundary(&self, theta: &BoundaryPoint) -> Result<BoundaryPoint>;
}

impl BoundaryMap for Isometry {
    fn target_space(&self) -> Space {
        self.space()
    }

    fn map_boundary(&self, theta: &BoundaryPoint) -> Result<BoundaryPoint> {
        self.apply_boundary(theta)
    }
}

/// A boundary map known only on finitely many points: pairs `(θ_j, ξ_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryMapSample {
    source: Space,
    target: Space,
    pairs: Vec<(BoundaryPoint, BoundaryPoint)>,
}

impl BoundaryMapSample {
    pub fn new(source: Space, target: Space, pairs: Vec<(BoundaryPoint, BoundaryPoint)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidMeasure("empty boundary map".into()));
        }
        for (i, (th, xi)) in pairs.iter().enumerate() {
            source.ensure_same(&th.space())?;
            target.ensure_same(&xi.space())?;
            if pairs[..i].iter().any(|(o, _)| o.chordal(th) <= ATOM_TOL) {
                return Err(Error::InvalidMeasure(format!("source point {i} repeats an earlier one")));
            }
        }
        if pairs.iter().all(|(_, xi)| xi.chordal(&pairs[0].1) <= ATOM_TOL) {
            return Err(Error::ElementaryData(1.0));
        }
        Ok(BoundaryMapSample { source, target, pairs })
    }

    /// Samples `θ ↦ f(θ)` on the atoms of `measure`.
    pub fn from_fn<F>(measure: &BoundaryMeasure, target: Space, f: F) -> Result<Self>
    where
        F: Fn(&BoundaryPoint) -> Result<BoundaryPoint>,
    {
        let pairs = measure
            .atoms()
            .iter()
            .map(|(t, _)| Ok((t.clone(), f(t)?)))
            .collect::<Result<Vec<_>>>()?;
        BoundaryMapSample::new(measure.space(), target, pairs)
    }

    pub fn source(&self) -> Space {
        self.source
    }

    pub fn pairs(&self) -> &[(BoundaryPoint, BoundaryPoint)] {
        &self.pairs
    }

    pub fn lookup(&self, theta: &BoundaryPoint) -> Option<&BoundaryPoint> {
        self.pairs
            .iter()
            .find(|(t, _)| t.chordal(theta) <= ATOM_TOL)
            .map(|(_, xi)| xi)
    }

    /// `g ∘ D` for an isometry `g` of the target.
    pub fn post_compose(&self, g: &Isometry) -> Result<BoundaryMapSample> {
        let pairs = self
            .pairs
            .iter()
            .map(|(t, xi)| Ok((t.clone(), g.apply_boundary(xi)?)))
            .collect::<Result<Vec<_>>>()?;
        BoundaryMapSample::new(self.source, self.target, pairs)
    }
}

impl BoundaryMap for BoundaryMapSample {
    fn target_space(&self) -> Space {
        self.target
    }

    fn map_boundary(&self, theta: &BoundaryPoint) -> Result<BoundaryPoint> {
        self.lookup(theta).cloned().ok_or(Error::UnmappedAtom)
    }
}

/// A family `x ↦ μ_x` with `dμ_x = e^{-δ B_O(x, ·)} dμ_O`, exact by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct ConformalDensity {
    seed: BoundaryMeasure,
    delta: f64,
    base: Point,
}

impl ConformalDensity {
    pub fn new(seed: BoundaryMeasure, delta: f64, base: Point) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::InvalidMeasure(format!("exponent {delta} must be positive")));
        }
        seed.space().ensure_same(&base.space())?;
        Ok(ConformalDensity { seed, delta, base })
    }

    pub fn seed(&self) -> &BoundaryMeasure {
        &self.seed
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn space(&self) -> Space {
        self.seed.space()
    }

    pub fn density_at(&self, x: &Point) -> BoundaryMeasure {
        let atoms = self
            .seed
            .atoms
            .iter()
            .map(|(t, w)| (t.clone(), w * (-self.delta * busemann(x, t, &self.base)).exp()))
            .collect();
        BoundaryMeasure {
            space: self.seed.space,
            atoms,
        }
    }
}

pub fn density_at(family: &ConformalDensity, x: &Point) -> BoundaryMeasure {
    family.density_at(x)
}

/// Endpoint of the geodesic ray from `base` through `y`.
pub fn radial_projection(base: &Point, y: &Point) -> Result<BoundaryPoint> {
    let u = log_map(base, y).unit().map_err(|_| Error::DegenerateOrbit)?;
    BoundaryPoint::new(base.space(), base.rep() + u.vec())
}

/// Orbital sample: atoms at the radial projections of `orbit`, weights `e^{-s d(base, y)}`.
pub fn patterson_sample(orbit: &[Point], s: f64, base: &Point) -> Result<BoundaryMeasure> {
    if !(s > 0.0) {
        return Err(Error::InvalidMeasure(format!("exponent {s} must be positive")));
    }
    let atoms = orbit
        .iter()
        .map(|y| {
            let d = distance(base, y);
            if d == 0.0 {
                return Err(Error::DegenerateOrbit);
            }
            Ok((radial_projection(base, y)?, (-s * d).exp()))
        })
        .collect::<Result<Vec<_>>>()?;
    BoundaryMeasure::merged(base.space(), atoms)
}

/// Deterministic random measure with `n ≥ 3` atoms in general position and
/// weights in `[1, spread_cap]`. The cap is reduced when needed so that no
/// atom carries half the mass.
pub fn random_measure(space: &Space, seed: u64, n: usize, spread_cap: f64) -> Result<BoundaryMeasure> {
    if n < 3 {
        return Err(Error::InvalidMeasure(format!("need at least 3 atoms, got {n}")));
    }
    if !(spread_cap >= 1.0) {
        return Err(Error::InvalidMeasure(format!("spread cap {spread_cap} must be at least 1")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cap = spread_cap.min(0.99 * (n - 1) as f64).max(1.0);
    let mut atoms: Vec<(BoundaryPoint, f64)> = Vec::with_capacity(n);
    while atoms.len() < n {
        let th = random_boundary(&mut rng, space);
        if atoms.iter().any(|(o, _)| o.chordal(&th) <= 1e-6) {
            continue;
        }
        let w = 1.0 + (cap - 1.0) * rng.random::<f64>();
        atoms.push((th, w));
    }
    BoundaryMeasure::new(*space, atoms)
}

/// `|m1 - m2| + W1(β1/m1, β2/m2)` with the chordal ground metric.
pub fn weakstar_distance(a: &BoundaryMeasure, b: &BoundaryMeasure) -> Result<f64> {
    a.space.ensure_same(&b.space)?;
    let (ma, mb) = (a.total_mass(), b.total_mass());
    let supply: Vec<f64> = a.atoms.iter().map(|(_, w)| w / ma).collect();
    let demand: Vec<f64> = b.atoms.iter().map(|(_, w)| w / mb).collect();
    let cost: Vec<Vec<f64>> = a
        .atoms
        .iter()
        .map(|(s, _)| b.atoms.iter().map(|(t, _)| s.chordal(t)).collect())
        .collect();
    Ok((ma - mb).abs() + transport_cost(&supply, &demand, &cost))
}

/// Minimum-cost transport between two probability vectors, by successive
/// shortest augmenting paths on the residual network.
pub fn transport_cost(supply: &[f64], demand: &[f64], cost: &[Vec<f64>]) -> f64 {
    let (n, m) = (supply.len(), demand.len());
    // nodes: 0 = source, 1..=n supplies, n+1..=n+m demands, n+m+1 = sink
    let nodes = n + m + 2;
    let sink = nodes - 1;
    let mut net = FlowNet::new(nodes);
    for (i, &s) in supply.iter().enumerate() {
        net.add_edge(0, 1 + i, s, 0.0);
    }
    for (j, &d) in demand.iter().enumerate() {
        net.add_edge(1 + n + j, sink, d, 0.0);
    }
    for (i, row) in cost.iter().enumerate().take(n) {
        for (j, &c) in row.iter().enumerate().take(m) {
            net.add_edge(1 + i, 1 + n + j, f64::INFINITY, c);
        }
    }
    let target = supply.iter().sum::<f64>().min(demand.iter().sum());
    net.min_cost_flow(0, sink, target)
}

struct Edge {
    to: usize,
    cap: f64,
    cost: f64,
}

struct FlowNet {
    edges: Vec<Edge>,
    adj: Vec<Vec<usize>>,
}

const FLOW_EPS: f64 = 1e-15;

impl FlowNet {
    fn new(n: usize) -> Self {
        FlowNet {
            edges: Vec::new(),
            adj: vec![Vec::new(); n],
        }
    }

    fn add_edge(&mut self, from: usize, to: usize, cap: f64, cost: f64) {
        self.adj[from].push(self.edges.len());
        self.edges.push(Edge { to, cap, cost });
        self.adj[to].push(self.edges.len());
        self.edges.push(Edge { to: from, cap: 0.0, cost: -cost });
    }

    fn min_cost_flow(&mut self, s: usize, t: usize, target: f64) -> f64 {
        let n = self.adj.len();
        let mut flow = 0.0;
        let mut total = 0.0;
        while flow < target - 1e-14 {
            // Bellman–Ford: residual costs can be negative
            let mut dist = vec![f64::INFINITY; n];
            let mut prev: Vec<Option<usize>> = vec![None; n];
            dist[s] = 0.0;
            for _ in 0..n {
                let mut changed = false;
                for u in 0..n {
                    if dist[u] == f64::INFINITY {
                        continue;
                    }
                    for &e in &self.adj[u] {
                        let edge = &self.edges[e];
                        if edge.cap > FLOW_EPS && dist[u] + edge.cost < dist[edge.to] - 1e-15 {
                            dist[edge.to] = dist[u] + edge.cost;
                            prev[edge.to] = Some(e);
                            changed = true;
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
            if dist[t] == f64::INFINITY {
                break;
            }
            let mut push = target - flow;
            let mut v = t;
            while let Some(e) = prev[v] {
                push = push.min(self.edges[e].cap);
                v = self.edges[e ^ 1].to;
            }
            let mut v = t;
            while let Some(e) = prev[v] {
                self.edges[e].cap -= push;
                self.edges[e ^ 1].cap += push;
                v = self.edges[e ^ 1].to;
            }
            flow += push;
            total += push * dist[t];
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{geodesic_ray_to_boundary, Frame};
    use crate::quat::Quat;
    use crate::sampling;
    use proptest::prelude::*;

    fn space() -> Space {
        Space::complex(2)
    }

    fn atom(space: Space, dir: &[Quat]) -> BoundaryPoint {
        BoundaryPoint::from_direction(space, dir).unwrap()
    }

    #[test]
    fn dirac_distance_matches_transport_to_an_atom() {
        let mu = random_measure(&space(), 9, 6, 2.0).unwrap();
        let best = (0..mu.len())
            .map(|j| {
                let dirac = BoundaryMeasure::new(space(), vec![(mu.atoms()[j].0.clone(), mu.total_mass())]).unwrap();
                weakstar_distance(&mu, &dirac).unwrap()
            })
            .fold(f64::INFINITY, f64::min);
        assert!((mu.dirac_distance() - best).abs() < 1e-12);
        let single = BoundaryMeasure::new(space(), vec![(mu.atoms()[0].0.clone(), 3.0)]).unwrap();
        assert_eq!(single.dirac_distance(), 0.0);
    }

    #[test]
    fn validation() {
        let s = space();
        let th = atom(s, &[Quat::ONE, Quat::ZERO]);
        assert!(BoundaryMeasure::new(s, vec![]).is_err());
        assert!(BoundaryMeasure::new(s, vec![(th.clone(), 0.0)]).is_err());
        assert!(BoundaryMeasure::new(s, vec![(th.clone(), 1.0), (th.clone(), 2.0)]).is_err());
        let m = BoundaryMeasure::merged(s, vec![(th.clone(), 1.0), (th, 2.0)]).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m.total_mass(), 3.0);
    }

    #[test]
    fn ratios_and_normalization() {
        let m = random_measure(&space(), 1, 4, 1.0).unwrap();
        assert!((m.max_atom_ratio() - 0.25).abs() < 1e-15);
        let s = space();
        let two = BoundaryMeasure::new(
            s,
            vec![(atom(s, &[Quat::ONE, Quat::ZERO]), 3.0), (atom(s, &[Quat::ZERO, Quat::ONE]), 1.0)],
        )
        .unwrap();
        assert_eq!(two.max_atom_ratio(), 0.75);
        let n = two.normalize();
        assert!((n.total_mass() - 1.0).abs() < 1e-15);
        assert_eq!(n.normalize(), n);
    }

    #[test]
    fn density_rules() {
        let s = space();
        let seed = random_measure(&s, 2, 5, 3.0).unwrap();
        let o = s.origin();
        let fam = ConformalDensity::new(seed.clone(), 4.0, o.clone()).unwrap();
        assert_eq!(fam.density_at(&o), seed);

        let th = seed.atoms()[0].0.clone();
        let single = BoundaryMeasure::new(s, vec![(th.clone(), 2.0)]).unwrap();
        let f1 = ConformalDensity::new(single, 3.0, o.clone()).unwrap();
        let x = geodesic_ray_to_boundary(&o, &th, 1.3);
        let w = f1.density_at(&x).atoms()[0].1;
        assert!((w / (2.0 * (3.0f64 * 1.3).exp()) - 1.0).abs() < 1e-12);

        // two-point rule through an intermediate base point
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let x = sampling::random_point(&mut rng, &s, 2.0);
            let y = sampling::random_point(&mut rng, &s, 2.0);
            let mx = fam.density_at(&x);
            let my = fam.density_at(&y);
            for ((t, wx), (_, wy)) in mx.atoms().iter().zip(my.atoms()) {
                let via = wy * (-4.0 * busemann(&x, t, &y)).exp();
                assert!((via / wx - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn pushforward_laws() {
        let s = Space::quaternionic(2);
        let m = random_measure(&s, 4, 6, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = sampling::random_isometry(&mut rng, &s, 1.5);
        let h = sampling::random_isometry(&mut rng, &s, 1.5);
        let back = m.pushforward(&g).unwrap().pushforward(&g.inverse()).unwrap();
        assert!(weakstar_distance(&back, &m).unwrap() < 1e-10);
        assert!((m.pushforward(&g).unwrap().total_mass() - m.total_mass()).abs() < 1e-12);
        let gh = g.compose(&h).unwrap();
        let a = m.pushforward(&gh).unwrap();
        let b = m.pushforward(&h).unwrap().pushforward(&g).unwrap();
        assert!(weakstar_distance(&a, &b).unwrap() < 1e-10);
        let id = Isometry::identity(s);
        assert!(weakstar_distance(&m.pushforward(&id).unwrap(), &m).unwrap() < 1e-12);
    }

    #[test]
    fn sampled_map_requires_atoms() {
        let s = space();
        let m = random_measure(&s, 6, 4, 2.0).unwrap();
        let d = BoundaryMapSample::from_fn(&m, s, |t| Ok(t.clone())).unwrap();
        assert_eq!(m.pushforward(&d).unwrap(), m);
        let other = random_measure(&s, 7, 4, 2.0).unwrap();
        assert!(matches!(other.pushforward(&d), Err(Error::UnmappedAtom)));
    }

    #[test]
    fn weakstar_examples() {
        let s = space();
        let m = random_measure(&s, 8, 5, 2.0).unwrap();
        assert!(weakstar_distance(&m, &m).unwrap() < 1e-15);
        let a = atom(s, &[Quat::ONE, Quat::ZERO]);
        let eps: f64 = 1e-3;
        let b = atom(s, &[Quat::real(eps.cos()), Quat::real(eps.sin())]);
        let ma = BoundaryMeasure::new(s, vec![(a.clone(), 1.0)]).unwrap();
        let mb = BoundaryMeasure::new(s, vec![(b.clone(), 1.0)]).unwrap();
        let d = weakstar_distance(&ma, &mb).unwrap();
        assert!((d - a.chordal(&b)).abs() < 1e-15);
        let other = random_measure(&s, 9, 5, 2.0).unwrap();
        assert!((weakstar_distance(&m, &other).unwrap() - weakstar_distance(&other, &m).unwrap()).abs() < 1e-12);
        assert!(weakstar_distance(&m, &other).unwrap() > 0.0);
        assert!((weakstar_distance(&m, &m.scale(2.0)).unwrap() - m.total_mass()).abs() < 1e-12);
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn transport_matches_brute_force_assignment() {
        // equal weights: an optimal plan is a permutation
        let s = Space::complex(3);
        for seed in 0..30u64 {
            let n = 2 + (seed as usize % 4);
            let a = random_measure(&s, 100 + seed, n.max(3), 1.0).unwrap();
            let b = random_measure(&s, 200 + seed, n.max(3), 1.0).unwrap();
            let n = a.len();
            let brute = permutations(n)
                .iter()
                .map(|p| (0..n).map(|i| a.atoms()[i].0.chordal(&b.atoms()[p[i]].0)).sum::<f64>() / n as f64)
                .fold(f64::INFINITY, f64::min);
            let d = weakstar_distance(&a, &b).unwrap();
            assert!((d - brute).abs() < 1e-12, "{d} vs {brute}");
        }
    }

    #[test]
    fn weakstar_converges_under_perturbation() {
        let s = space();
        let m = random_measure(&s, 10, 5, 2.0).unwrap();
        let mut last = f64::INFINITY;
        for i in 1..12 {
            let h = 0.5f64.powi(i);
            let atoms = m
                .atoms()
                .iter()
                .map(|(t, w)| {
                    let dir: Vec<Quat> = t.direction().iter().map(|q| *q + Quat::complex(h, -h)).collect();
                    (BoundaryPoint::from_direction(s, &unit(&dir)).unwrap(), w * (1.0 + h))
                })
                .collect();
            let mn = BoundaryMeasure::new(s, atoms).unwrap();
            let d = weakstar_distance(&mn, &m).unwrap();
            assert!(d < last);
            last = d;
        }
        assert!(last < 1e-2);
    }

    fn unit(v: &[Quat]) -> Vec<Quat> {
        let n = v.iter().map(|q| q.norm_sqr()).sum::<f64>().sqrt();
        v.iter().map(|q| *q * (1.0 / n)).collect()
    }

    #[test]
    fn patterson_examples() {
        let s = space();
        let o = s.origin();
        let v = Frame::at(&o).vector(2);
        let y = crate::geometry::exp_map(&o, &v, 1.5);
        let m = patterson_sample(std::slice::from_ref(&y), 2.0, &o).unwrap();
        assert_eq!(m.len(), 1);
        assert!((m.atoms()[0].1 - (-3.0f64).exp()).abs() < 1e-14);
        assert!(matches!(patterson_sample(std::slice::from_ref(&o), 2.0, &o), Err(Error::DegenerateOrbit)));

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let orbit: Vec<Point> = (0..5).map(|_| sampling::random_point(&mut rng, &s, 3.0)).collect();
        let far: Vec<Point> = orbit
            .iter()
            .map(|y| {
                let l = log_map(&o, y);
                crate::geometry::exp(&l.scale(2.0))
            })
            .collect();
        let a = patterson_sample(&orbit, 1.0, &o).unwrap();
        let b = patterson_sample(&far, 0.5, &o).unwrap();
        for ((ta, wa), (tb, wb)) in a.atoms().iter().zip(b.atoms()) {
            assert!(ta.chordal(tb) < 1e-10);
            assert!((wa / wb - 1.0).abs() < 1e-10);
        }

        // orbit of a rotation group fixing O gives an invariant measure
        let rot = Isometry::stabilizer(
            s,
            &crate::qmatrix::QMatrix::from_rows(vec![vec![Quat::ZERO, -Quat::ONE], vec![Quat::ONE, Quat::ZERO]]),
            Quat::ONE,
        )
        .unwrap();
        let y0 = sampling::random_point(&mut rng, &s, 2.0);
        let mut orbit = vec![y0];
        for _ in 0..3 {
            let next = rot.apply_point(orbit.last().unwrap()).unwrap();
            orbit.push(next);
        }
        let m = patterson_sample(&orbit, 1.0, &o).unwrap();
        assert!(weakstar_distance(&m.pushforward(&rot).unwrap(), &m).unwrap() < 1e-10);
    }

    #[test]
    fn random_measure_contract() {
        let s = Space::quaternionic(2);
        let a = random_measure(&s, 12, 7, 5.0).unwrap();
        assert_eq!(a, random_measure(&s, 12, 7, 5.0).unwrap());
        assert!(a.max_atom_ratio() < 0.5);
        let three = random_measure(&s, 13, 3, 1.0).unwrap();
        assert!((three.max_atom_ratio() - 1.0 / 3.0).abs() < 1e-15);
        assert!(random_measure(&s, 13, 2, 1.0).is_err());
        let tight = random_measure(&s, 14, 3, 100.0).unwrap();
        assert!(tight.max_atom_ratio() < 0.5);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn weakstar_is_a_metric(sa in 0u64..1000, sb in 0u64..1000, sc in 0u64..1000, n in 3usize..7) {
            let s = Space::complex(2);
            let a = random_measure(&s, sa, n, 3.0).unwrap();
            let b = random_measure(&s, sb, n + 1, 3.0).unwrap();
            let c = random_measure(&s, sc, n, 3.0).unwrap();
            let ab = weakstar_distance(&a, &b).unwrap();
            let bc = weakstar_distance(&b, &c).unwrap();
            let ac = weakstar_distance(&a, &c).unwrap();
            prop_assert!(ab >= 0.0);
            prop_assert!((ab - weakstar_distance(&b, &a).unwrap()).abs() < 1e-12);
            prop_assert!(ac <= ab + bc + 1e-12);
        }
    }
}
