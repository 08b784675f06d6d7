//! Finite samples of the invariant convex sets C_t in the truncated Klein ball.
//!
//! A point f_t(k·g_u·o) has harmonic coefficients ā_k(u)·Y_km(η) where η = k·e₁;
//! multiplying block k by √|λ̃_k| (zero on degrees ≥ 2 at t = 1) puts every t in
//! one hyperboloid w₀² − Σ_{k≥1} w_k² = 1, and w_{≥1}/w₀ is the Klein point.
//! Boundary points are the limits u → ∞, with ā_k replaced by the boundary
//! direction. Clouds are stored as unions of orbits of a cyclic rotation group so
//! that rotation equivariance is exact on samples.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embed::{boundary_direction, orbit_coeffs, EmbedParams};
use crate::error::{invalid, Error, Result};
use crate::harmonics::{SphBasis, SphereGrid};
use crate::par::par_map;
use crate::prinseries::{renorm_coordinate_scale, SeriesParams};
use crate::quadspace::acosh_one_plus;

/// Points with norm at least this close to one are treated as ideal.
const IDEAL_EPS: f64 = 1e-14;
/// Cap on the number of points of a hull sample.
pub const HULL_CAP: usize = 5000;
/// Cap on the number of midpoints formed per closure step.
pub const PAIR_BUDGET: usize = 20000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Orbit,
    Boundary,
    Hull,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Orbit => "orbit",
            Provenance::Boundary => "boundary",
            Provenance::Hull => "hull",
        }
    }
}

/// Points of the truncated Klein ball, grouped in consecutive orbits of size
/// `orbit_size` under the cyclic rotation group of the boundary net.
#[derive(Debug, Clone)]
pub struct KleinCloud {
    pub n: usize,
    pub t: f64,
    pub k_max: usize,
    pub provenance: Provenance,
    pub orbit_size: usize,
    pub points: Vec<Vec<f64>>,
}

impl KleinCloud {
    pub fn new(n: usize, t: f64, k_max: usize, provenance: Provenance, points: Vec<Vec<f64>>) -> Result<Self> {
        let cloud = Self { n, t, k_max, provenance, orbit_size: 1, points };
        cloud.validate()?;
        Ok(cloud)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, |p| p.len())
    }

    pub fn orbits(&self) -> usize {
        self.points.len() / self.orbit_size
    }

    fn validate(&self) -> Result<()> {
        let d = self.dim();
        for p in &self.points {
            if p.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: p.len() });
            }
            let r = norm_sq(p);
            if !(r <= 1.0 + 1e-12) {
                return Err(Error::Invariant(format!("Klein point with squared norm {r} outside the ball")));
            }
        }
        if self.orbit_size == 0 || !self.points.len().is_multiple_of(self.orbit_size) {
            return Err(Error::Invariant("cloud size is not a multiple of the orbit size".into()));
        }
        Ok(())
    }

    /// Points at hyperbolic distance at most `r` from the center (Klein origin).
    pub fn ball(&self, r: f64) -> Vec<Vec<f64>> {
        let limit = r.tanh();
        self.points.iter().filter(|p| norm_sq(p).sqrt() <= limit).cloned().collect()
    }
}

fn norm_sq(p: &[f64]) -> f64 {
    p.iter().map(|v| v * v).sum()
}

/// cosh d − 1 between Klein points, accurate for nearby points; +∞ if either is ideal.
pub fn klein_cosh_minus_one(p: &[f64], q: &[f64]) -> f64 {
    let pp = norm_sq(p);
    let qq = norm_sq(q);
    if pp >= 1.0 - IDEAL_EPS || qq >= 1.0 - IDEAL_EPS {
        let same = p.iter().zip(q).all(|(a, b)| a == b);
        return if same { 0.0 } else { f64::INFINITY };
    }
    let mut dd = 0.0;
    let mut pd = 0.0;
    let mut pq = 0.0;
    for ((a, b), _) in p.iter().zip(q).zip(0..) {
        let d = b - a;
        dd += d * d;
        pd += a * d;
        pq += a * b;
    }
    let s = ((1.0 - pp) * (1.0 - qq)).sqrt();
    let num = dd * (1.0 - pp) + pd * pd;
    num / (s * ((1.0 - pq) + s))
}

/// Hyperbolic distance between Klein points.
pub fn klein_dist(p: &[f64], q: &[f64]) -> f64 {
    let m = klein_cosh_minus_one(p, q);
    if m.is_infinite() {
        return f64::INFINITY;
    }
    acosh_one_plus(m).unwrap_or(f64::INFINITY)
}

/// Hyperbolic midpoint in the Klein model; two ideal points give the chord midpoint
/// and an ideal point absorbs an interior one.
pub fn klein_midpoint(p: &[f64], q: &[f64]) -> Vec<f64> {
    let pp = norm_sq(p);
    let qq = norm_sq(q);
    let p_ideal = pp >= 1.0 - IDEAL_EPS;
    let q_ideal = qq >= 1.0 - IDEAL_EPS;
    match (p_ideal, q_ideal) {
        (true, true) => p.iter().zip(q).map(|(a, b)| 0.5 * (a + b)).collect(),
        (true, false) => p.to_vec(),
        (false, true) => q.to_vec(),
        (false, false) => {
            let gp = 1.0 / (1.0 - pp).sqrt();
            let gq = 1.0 / (1.0 - qq).sqrt();
            let w = gp + gq;
            p.iter().zip(q).map(|(a, b)| (gp * a + gq * b) / w).collect()
        }
    }
}

/// Directions on S^{n−1} (n ∈ {2, 3}) as unions of orbits of the rotation by 2π/q about e₁'s
/// complement (n = 2) or about the polar axis e₁ (n = 3).
#[derive(Debug, Clone)]
pub struct BoundaryNet {
    pub n: usize,
    pub orbit_size: usize,
    pub directions: Vec<Vec<f64>>,
    /// Rotation of S^{n−1} generating the cyclic group.
    pub generator: DMatrix<f64>,
}

impl BoundaryNet {
    /// n = 2: m equally spaced directions. n = 3: ⌈√(m/2)⌉ latitude rings of ⌈m/rings⌉ points.
    pub fn new(n: usize, m: usize) -> Result<Self> {
        if m < 2 {
            return invalid(format!("net size m = {m} must be at least 2"));
        }
        let two_pi = 2.0 * std::f64::consts::PI;
        match n {
            2 => {
                let directions = (0..m)
                    .map(|j| {
                        let a = two_pi * j as f64 / m as f64;
                        vec![a.cos(), a.sin()]
                    })
                    .collect();
                let a = two_pi / m as f64;
                let generator = DMatrix::from_row_slice(2, 2, &[a.cos(), -a.sin(), a.sin(), a.cos()]);
                Ok(Self { n, orbit_size: m, directions, generator })
            }
            3 => {
                let rings = ((m as f64 / 2.0).sqrt().ceil() as usize).max(1);
                let q = m.div_ceil(rings).max(2);
                let mut directions = Vec::with_capacity(rings * q);
                for i in 0..rings {
                    let theta = std::f64::consts::PI * (i as f64 + 0.5) / rings as f64;
                    let offset = if i % 2 == 1 { 0.5 } else { 0.0 };
                    for j in 0..q {
                        let phi = two_pi * (j as f64 + offset) / q as f64;
                        directions.push(vec![theta.cos(), theta.sin() * phi.cos(), theta.sin() * phi.sin()]);
                    }
                }
                let a = two_pi / q as f64;
                let generator =
                    DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, a.cos(), -a.sin(), 0.0, a.sin(), a.cos()]);
                Ok(Self { n, orbit_size: q, directions, generator })
            }
            _ => invalid(format!("clouds are available for n in {{2, 3}}, got {n}")),
        }
    }
}

/// Renormalized coordinates shared by all t.
#[derive(Debug, Clone)]
pub struct CloudCoords {
    pub params: SeriesParams,
    pub basis: SphBasis,
    /// √|λ̃_k| with the V₂ squeeze, per degree.
    pub scale: Vec<f64>,
}

impl CloudCoords {
    pub fn new(params: &SeriesParams, k_max: usize) -> Result<Self> {
        let basis = SphBasis::new(params.n, k_max)?;
        let scale = renorm_coordinate_scale(params, k_max)?;
        Ok(Self { params: *params, basis, scale })
    }

    /// Klein point w_{≥1}/w₀ for per-degree magnitudes `bar` (ā_k) around direction η.
    pub fn point(&self, bar: &[f64], eta: &[f64]) -> Vec<f64> {
        let y = self.basis.eval(eta);
        let degrees = self.basis.layout.degrees();
        let w0 = self.scale[0] * bar[0] * y[0];
        (1..y.len()).map(|i| self.scale[degrees[i]] * bar[degrees[i]] * y[i] / w0).collect()
    }

    /// Coefficient-space action of a rotation of S^{n−1} on Klein points.
    pub fn rotation_action(&self, rot: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let grid = SphereGrid::new(self.params.n, 2 * self.basis.k_max + 2)?;
        let full = self.basis.rotation_matrix(rot, &grid)?;
        let d = full.nrows() - 1;
        Ok(full.view((1, 1), (d, d)).into_owned())
    }
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0 && t <= 1.0) {
        return invalid(format!("clouds need t in (0, 1], got {t}"));
    }
    Ok(())
}

/// Per-degree magnitudes of the boundary direction: the Klein limit of f_t along a ray.
pub fn boundary_magnitudes(params: &SeriesParams, k_max: usize) -> Result<Vec<f64>> {
    check_t(params.t)?;
    if params.t == 1.0 {
        return Ok(vec![1.0; k_max + 1]);
    }
    let ep = EmbedParams::new(params.n, params.t, k_max)?;
    Ok(boundary_direction(&ep, 30.0, 1e-6)?.pole_normalized())
}

/// Limit points of f_t along the rays towards a net of m boundary directions.
pub fn sample_boundary(params: &SeriesParams, k_max: usize, m: usize) -> Result<KleinCloud> {
    let net = BoundaryNet::new(params.n, m)?;
    let coords = CloudCoords::new(params, k_max)?;
    let bar = boundary_magnitudes(params, k_max)?;
    let points = net.directions.iter().map(|eta| coords.point(&bar, eta)).collect();
    let cloud = KleinCloud {
        n: params.n,
        t: params.t,
        k_max,
        provenance: Provenance::Boundary,
        orbit_size: net.orbit_size,
        points,
    };
    cloud.validate()?;
    Ok(cloud)
}

/// Orbit points f_t(k·g_u·o) for every u in `radii` and every direction of an m-point net.
pub fn sample_orbit(params: &SeriesParams, k_max: usize, radii: &[f64], m: usize) -> Result<KleinCloud> {
    check_t(params.t)?;
    let net = BoundaryNet::new(params.n, m)?;
    let coords = CloudCoords::new(params, k_max)?;
    let mut points = Vec::with_capacity(radii.len() * net.directions.len());
    for &u in radii {
        let bar = orbit_coeffs(params, u, k_max)?;
        for eta in &net.directions {
            points.push(coords.point(&bar, eta));
        }
    }
    let cloud =
        KleinCloud { n: params.n, t: params.t, k_max, provenance: Provenance::Orbit, orbit_size: net.orbit_size, points };
    cloud.validate()?;
    Ok(cloud)
}

/// One midpoint-closure step: new orbit j is formed from orbit a (position i) and
/// orbit b (position i + shift), then `keep` lists surviving orbits in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HullStep {
    pub pairs: Vec<(usize, usize, usize)>,
    pub keep: Vec<usize>,
}

/// The choices made by [`hull_sample`], replayable on a cloud with the same orbit layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HullPlan {
    pub steps: Vec<HullStep>,
}

fn orbit_pair_points(points: &[Vec<f64>], q: usize, a: usize, b: usize, shift: usize) -> Vec<Vec<f64>> {
    (0..q).map(|i| klein_midpoint(&points[a * q + i], &points[b * q + (i + shift) % q])).collect()
}

/// All orbit pairs when they fit in [`PAIR_BUDGET`] midpoints, else a random sample of that size.
fn candidate_pairs(orbits: usize, q: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize, usize)> {
    let budget = (PAIR_BUDGET / q).max(1);
    if orbits * (orbits + 1) / 2 * q <= budget {
        let mut all = Vec::new();
        for a in 0..orbits {
            for b in a..orbits {
                for s in 0..q {
                    // Within one orbit, shifts s and q − s give the same midpoints.
                    if a == b && (s == 0 || 2 * s > q) {
                        continue;
                    }
                    all.push((a, b, s));
                }
            }
        }
        return all;
    }
    (0..budget)
        .map(|_| (rng.gen_range(0..orbits), rng.gen_range(0..orbits), rng.gen_range(0..q)))
        .filter(|&(a, b, s)| !(a == b && s == 0))
        .collect()
}

/// Distance from orbit `a` to the orbits already selected (minimum over points).
fn orbit_gap(points: &[Vec<f64>], q: usize, a: usize, selected: &[Vec<f64>]) -> f64 {
    let rep = &points[a * q];
    selected.iter().map(|s| klein_dist(rep, s)).fold(f64::INFINITY, f64::min)
}

/// Keeps previous orbits first, drops near-duplicates, then adds new orbits by
/// farthest-point order until the point cap.
fn select_orbits(points: &[Vec<f64>], q: usize, previous: usize, cap_orbits: usize) -> Vec<usize> {
    let total = points.len() / q;
    let mut keep: Vec<usize> = (0..previous.min(cap_orbits)).collect();
    let mut selected: Vec<Vec<f64>> = keep.iter().flat_map(|&o| points[o * q..(o + 1) * q].iter().cloned()).collect();
    let mut gaps: Vec<f64> = par_map(total, |o| if o < previous { 0.0 } else { orbit_gap(points, q, o, &selected) });
    while keep.len() < cap_orbits {
        let mut best = None;
        let mut best_gap = 1e-9;
        for (o, &g) in gaps.iter().enumerate() {
            if o >= previous && g > best_gap {
                best_gap = g;
                best = Some(o);
            }
        }
        let Some(o) = best else { break };
        keep.push(o);
        let added: Vec<Vec<f64>> = points[o * q..(o + 1) * q].to_vec();
        gaps[o] = 0.0;
        let updated = par_map(total, |j| {
            if j < previous || gaps[j] == 0.0 {
                return gaps[j];
            }
            let rep = &points[j * q];
            added.iter().map(|s| klein_dist(rep, s)).fold(gaps[j], f64::min)
        });
        gaps = updated;
        selected.extend(added);
    }
    keep
}

fn apply_step(points: &[Vec<f64>], q: usize, pairs: &[(usize, usize, usize)]) -> Vec<Vec<f64>> {
    let fresh: Vec<Vec<Vec<f64>>> = par_map(pairs.len(), |i| {
        let (a, b, s) = pairs[i];
        orbit_pair_points(points, q, a, b, s)
    });
    let mut all = points.to_vec();
    for orbit in fresh {
        all.extend(orbit);
    }
    all
}

fn gather(points: &[Vec<f64>], q: usize, keep: &[usize]) -> Vec<Vec<f64>> {
    keep.iter().flat_map(|&o| points[o * q..(o + 1) * q].iter().cloned()).collect()
}

/// Iterated hyperbolic-midpoint closure of a cloud, thinned to at most [`HULL_CAP`] points.
pub fn hull_sample(cloud: &KleinCloud, iters: usize, seed: u64) -> Result<(KleinCloud, HullPlan)> {
    if cloud.is_empty() {
        return invalid("empty cloud");
    }
    let q = cloud.orbit_size;
    let cap_orbits = (HULL_CAP / q).max(cloud.orbits());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = cloud.points.clone();
    let mut steps = Vec::with_capacity(iters);
    for _ in 0..iters {
        let orbits = points.len() / q;
        let pairs = candidate_pairs(orbits, q, &mut rng);
        if pairs.is_empty() {
            steps.push(HullStep { pairs, keep: (0..orbits).collect() });
            continue;
        }
        let all = apply_step(&points, q, &pairs);
        let keep = select_orbits(&all, q, orbits, cap_orbits);
        points = gather(&all, q, &keep);
        steps.push(HullStep { pairs, keep });
    }
    let out = KleinCloud { provenance: Provenance::Hull, points, ..cloud.clone() };
    out.validate()?;
    Ok((out, HullPlan { steps }))
}

/// Applies the midpoint and thinning choices of `plan` to another cloud with the same orbit layout.
pub fn replay_hull(cloud: &KleinCloud, plan: &HullPlan) -> Result<KleinCloud> {
    let q = cloud.orbit_size;
    let mut points = cloud.points.clone();
    for step in &plan.steps {
        let orbits = points.len() / q;
        if step.pairs.iter().any(|&(a, b, s)| a >= orbits || b >= orbits || s >= q) {
            return Err(Error::DimensionMismatch { expected: orbits, got: step.pairs.len() });
        }
        let all = apply_step(&points, q, &step.pairs);
        points = gather(&all, q, &step.keep);
    }
    let out = KleinCloud { provenance: Provenance::Hull, points, ..cloud.clone() };
    out.validate()?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Hyperbolic,
    Euclidean,
}

fn metric_dist(metric: Metric, p: &[f64], q: &[f64]) -> f64 {
    match metric {
        Metric::Hyperbolic => klein_dist(p, q),
        Metric::Euclidean => p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
    }
}

fn directed(metric: Metric, a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    par_map(a.len(), |i| b.iter().map(|y| metric_dist(metric, &a[i], y)).fold(f64::INFINITY, f64::min))
        .into_iter()
        .fold(0.0, f64::max)
}

/// Hausdorff distance between two point sets.
pub fn hausdorff_points(a: &[Vec<f64>], b: &[Vec<f64>], metric: Metric) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return invalid("Hausdorff distance of an empty cloud");
    }
    if a[0].len() != b[0].len() {
        return Err(Error::DimensionMismatch { expected: a[0].len(), got: b[0].len() });
    }
    Ok(directed(metric, a, b).max(directed(metric, b, a)))
}

pub fn hausdorff(a: &KleinCloud, b: &KleinCloud, metric: Metric) -> Result<f64> {
    hausdorff_points(&a.points, &b.points, metric)
}

/// max over x ∈ X of the hyperbolic distance from x to A.
pub fn coradius_points(a: &[Vec<f64>], x: &[Vec<f64>]) -> Result<f64> {
    if a.is_empty() {
        return invalid("coradius of an empty set");
    }
    if x.is_empty() {
        return Ok(0.0);
    }
    Ok(directed(Metric::Hyperbolic, x, a))
}

pub fn coradius(a: &KleinCloud, x: &KleinCloud) -> Result<f64> {
    coradius_points(&a.points, &x.points)
}

/// A finite set of isometries containing the identity, here rotations of the
/// boundary net's cyclic group, acting on Klein coordinates.
#[derive(Debug, Clone)]
pub struct MotionSample {
    pub rotations: Vec<DMatrix<f64>>,
    pub actions: Vec<DMatrix<f64>>,
}

impl MotionSample {
    /// Identity, the generator, and the quarter and half turns of the net's group.
    pub fn from_net(net: &BoundaryNet, coords: &CloudCoords) -> Result<Self> {
        let q = net.orbit_size;
        let mut powers = vec![0, 1, q / 4, q / 2];
        powers.sort_unstable();
        powers.dedup();
        let mut rotations = Vec::new();
        let mut actions = Vec::new();
        for p in powers {
            let mut r = DMatrix::identity(net.n, net.n);
            for _ in 0..p {
                r = &net.generator * r;
            }
            actions.push(coords.rotation_action(&r)?);
            rotations.push(r);
        }
        Ok(Self { rotations, actions })
    }
}

fn nearest<'a>(cloud: &'a [Vec<f64>], x: &[f64]) -> &'a [f64] {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, p) in cloud.iter().enumerate() {
        let d: f64 = p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    &cloud[best]
}

fn rotate(action: &DMatrix<f64>, p: &[f64]) -> Vec<f64> {
    let v = action * nalgebra::DVector::from_column_slice(p);
    v.iter().copied().collect()
}

/// max over g ∈ M and x in `source` of d(g·f(x), f(g·x)) with f the nearest-point map into `target`.
pub fn equivariance_defect(motions: &MotionSample, source: &[Vec<f64>], target: &[Vec<f64>]) -> Result<f64> {
    if source.is_empty() || target.is_empty() {
        return invalid("equivariance defect of an empty cloud");
    }
    let mut worst: f64 = 0.0;
    for action in &motions.actions {
        let per_point = par_map(source.len(), |i| {
            let x = &source[i];
            let gfx = rotate(action, nearest(target, x));
            let fgx = nearest(target, &rotate(action, x));
            klein_dist(&gfx, fgx)
        });
        worst = per_point.into_iter().fold(worst, f64::max);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuityRow {
    pub t: f64,
    /// Hausdorff distance between the R-balls of the hull samples at t and t0.
    pub hausdorff: f64,
    /// Equivariance defect of the nearest-point map from the t0 ball into the t hull.
    pub equivariance: f64,
    /// Distance from the center of C_t to its nearest-point image of the t0 center.
    pub center: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuityConfig {
    pub n: usize,
    pub t0: f64,
    pub radius: f64,
    pub k_max: usize,
    pub m: usize,
    pub iters: usize,
    pub seed: u64,
}

/// Strong-topology proxy between C_t and C_{t0}: hulls of boundary samples built with one
/// midpoint plan (computed at t0) so that sampled points correspond across t.
pub fn continuity_curve(cfg: &ContinuityConfig, t_list: &[f64]) -> Result<Vec<ContinuityRow>> {
    if !(cfg.radius > 0.0) {
        return invalid("radius R must be positive");
    }
    let base_params = SeriesParams::new(cfg.n, cfg.t0)?;
    let base = sample_boundary(&base_params, cfg.k_max, cfg.m)?;
    let (base_hull, plan) = hull_sample(&base, cfg.iters, cfg.seed)?;
    let base_ball = base_hull.ball(cfg.radius);
    if base_ball.is_empty() {
        return Err(Error::Numerical(format!("no hull point within radius {}", cfg.radius)));
    }
    let net = BoundaryNet::new(cfg.n, cfg.m)?;
    let coords = CloudCoords::new(&base_params, cfg.k_max)?;
    let motions = MotionSample::from_net(&net, &coords)?;
    let origin = vec![0.0; base.dim()];
    let mut rows = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let params = SeriesParams::new(cfg.n, t)?;
        let hull = if t == cfg.t0 { base_hull.clone() } else { replay_hull(&sample_boundary(&params, cfg.k_max, cfg.m)?, &plan)? };
        let ball = hull.ball(cfg.radius);
        if ball.is_empty() {
            return Err(Error::Numerical(format!("no hull point within radius {} at t = {t}", cfg.radius)));
        }
        let hausdorff = hausdorff_points(&ball, &base_ball, Metric::Hyperbolic)?;
        let equivariance = equivariance_defect(&motions, &base_ball, &hull.points)?;
        let center = klein_dist(nearest(&hull.points, &origin), nearest(&base_hull.points, &origin));
        rows.push(ContinuityRow { t, hausdorff, equivariance, center });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoradiusConfig {
    pub n: usize,
    pub radius: f64,
    pub k_max: usize,
    /// Boundary net size for the hull.
    pub m: usize,
    pub iters: usize,
    pub seed: u64,
    /// Directions of the orbit sample (a multiple of `m` keeps both clouds invariant under one group).
    pub orbit_directions: usize,
    /// Radial spacing of the orbit sample.
    pub orbit_step: f64,
}

/// Sampled coradius of f_t(Hⁿ) in C_t: hull points within hyperbolic radius R of the center
/// against an orbit sample on a polar grid reaching 2R.
pub fn orbit_coradius(cfg: &CoradiusConfig, t: f64) -> Result<f64> {
    if !(cfg.radius > 0.0 && cfg.orbit_step > 0.0) {
        return invalid("radius and orbit step must be positive");
    }
    let params = SeriesParams::new(cfg.n, t)?;
    let (hull, _) = hull_sample(&sample_boundary(&params, cfg.k_max, cfg.m)?, cfg.iters, cfg.seed)?;
    let ball = hull.ball(cfg.radius);
    let steps = (2.0 * cfg.radius / cfg.orbit_step).ceil() as usize;
    let radii: Vec<f64> = (0..=steps).map(|i| i as f64 * cfg.orbit_step).collect();
    let orbit = sample_orbit(&params, cfg.k_max, &radii, cfg.orbit_directions)?;
    coradius_points(&orbit.points, &ball)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dot(p: &[f64], q: &[f64]) -> f64 {
        p.iter().zip(q).map(|(a, b)| a * b).sum()
    }

    fn p(n: usize, t: f64) -> SeriesParams {
        SeriesParams::new(n, t).unwrap()
    }

    #[test]
    fn klein_distance_matches_hyperboloid() {
        let a = vec![0.3, -0.2, 0.1];
        let b = vec![-0.5, 0.4, 0.2];
        let pa = norm_sq(&a);
        let pb = norm_sq(&b);
        let expected = ((1.0 - dot(&a, &b)) / ((1.0 - pa) * (1.0 - pb)).sqrt()).acosh();
        assert!((klein_dist(&a, &b) - expected).abs() < 1e-14);
        assert_eq!(klein_dist(&a, &a), 0.0);
        let c = vec![0.3, -0.2, 0.1 + 1e-12];
        assert!((klein_dist(&a, &c) - 1e-12 / (1.0 - pa).sqrt()).abs() < 1e-16 * 1e4);
        assert!(klein_dist(&[1.0, 0.0], &[0.0, 0.5]).is_infinite());
    }

    #[test]
    fn midpoint_is_equidistant() {
        let a = vec![0.6, 0.1];
        let b = vec![-0.2, 0.7];
        let m = klein_midpoint(&a, &b);
        assert!((klein_dist(&a, &m) - klein_dist(&m, &b)).abs() < 1e-13);
        assert!((klein_dist(&a, &m) * 2.0 - klein_dist(&a, &b)).abs() < 1e-13);
        assert_eq!(klein_midpoint(&[1.0, 0.0], &[0.0, 1.0]), vec![0.5, 0.5]);
        assert_eq!(klein_midpoint(&[1.0, 0.0], &[0.0, 0.5]), vec![1.0, 0.0]);
    }

    #[test]
    fn boundary_cloud_examples() {
        let cloud = sample_boundary(&p(2, 0.5), 16, 2).unwrap();
        let (a, b) = (&cloud.points[0], &cloud.points[1]);
        for (k, (x, y)) in a.iter().zip(b).enumerate() {
            // Half turn: degree-d coordinates pick up (−1)^d.
            let d = k / 2 + 1;
            let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
            assert!((y - sign * x).abs() < 1e-12);
        }
        let one = sample_boundary(&p(2, 1.0), 8, 12).unwrap();
        for pt in &one.points {
            assert!((norm_sq(&pt[..2]) - 1.0).abs() < 1e-14);
            assert!(pt[2..].iter().all(|v| *v == 0.0));
        }
        let cloud = sample_boundary(&p(2, 0.5), 16, 64).unwrap();
        let net = BoundaryNet::new(2, 64).unwrap();
        let coords = CloudCoords::new(&p(2, 0.5), 16).unwrap();
        let act = coords.rotation_action(&net.generator).unwrap();
        let rotated: Vec<Vec<f64>> = cloud.points.iter().map(|x| rotate(&act, x)).collect();
        assert!(hausdorff_points(&rotated, &cloud.points, Metric::Hyperbolic).unwrap() < 1e-6);
    }

    #[test]
    fn boundary_norms_increase_with_truncation() {
        let mut prev = 0.0;
        for k in [32, 64, 96] {
            let cloud = sample_boundary(&p(2, 0.5), k, 4).unwrap();
            let r = norm_sq(&cloud.points[0]);
            assert!(r > prev && r < 1.0);
            prev = r;
        }
    }

    #[test]
    fn orbit_points_have_embedding_distance() {
        let params = p(3, 0.6);
        let cloud = sample_orbit(&params, 12, &[0.7], 8).unwrap();
        let expected = crate::embed::embed_dist_u(&params, 0.7).unwrap();
        let origin = vec![0.0; cloud.dim()];
        for pt in &cloud.points {
            // Truncation at K = 12 leaves a small gap at u = 0.7.
            assert!((klein_dist(&origin, pt) - expected).abs() < 1e-5);
        }
        let one = sample_orbit(&p(2, 1.0), 6, &[1.3], 5).unwrap();
        for pt in &one.points {
            assert!((norm_sq(pt).sqrt() - 1.3f64.tanh()).abs() < 1e-12);
        }
    }

    #[test]
    fn hull_examples() {
        let single = KleinCloud::new(2, 0.5, 1, Provenance::Boundary, vec![vec![0.2, 0.1]]).unwrap();
        let (h, _) = hull_sample(&single, 4, 1).unwrap();
        assert_eq!(h.points, single.points);
        let a = vec![0.1, 0.0];
        let b = vec![-0.1, 0.05];
        let two = KleinCloud::new(2, 0.5, 1, Provenance::Boundary, vec![a.clone(), b.clone()]).unwrap();
        let (h, _) = hull_sample(&two, 8, 1).unwrap();
        let chord: Vec<Vec<f64>> =
            (0..=4000).map(|i| { let s = i as f64 / 4000.0; vec![a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])] }).collect();
        assert!(hausdorff_points(&h.points, &chord, Metric::Euclidean).unwrap() < 1e-3);
    }

    #[test]
    fn hull_is_monotone_and_replayable() {
        let cloud = sample_boundary(&p(2, 0.5), 8, 16).unwrap();
        let (h1, _) = hull_sample(&cloud, 1, 7).unwrap();
        let (h2, plan) = hull_sample(&cloud, 2, 7).unwrap();
        for x in &h1.points {
            assert!(h2.points.iter().any(|y| y == x));
        }
        let replayed = replay_hull(&cloud, &plan).unwrap();
        assert_eq!(replayed.points, h2.points);
        for x in &h2.points {
            assert!(norm_sq(x) < 1.0);
        }
    }

    #[test]
    fn hull_is_lipschitz() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let base: Vec<Vec<f64>> = (0..6).map(|_| (0..3).map(|_| rng.gen_range(-0.4..0.4)).collect()).collect();
        for eps in [1e-2, 1e-3] {
            let moved: Vec<Vec<f64>> = base
                .iter()
                .map(|x| {
                    let step: Vec<f64> = x.iter().map(|v| v * (1.0 + eps * 0.3)).collect();
                    step
                })
                .collect();
            let a = KleinCloud::new(2, 0.5, 1, Provenance::Boundary, base.clone()).unwrap();
            let b = KleinCloud::new(2, 0.5, 1, Provenance::Boundary, moved).unwrap();
            let e = hausdorff(&a, &b, Metric::Hyperbolic).unwrap();
            let (ha, plan) = hull_sample(&a, 2, 3).unwrap();
            let hb = replay_hull(&b, &plan).unwrap();
            let d = hausdorff(&ha, &hb, Metric::Hyperbolic).unwrap();
            assert!(d <= e + 1e-9, "eps {eps}: {d} > {e}");
        }
    }

    #[test]
    fn hausdorff_and_coradius_examples() {
        let a = vec![vec![0.1, 0.2], vec![-0.3, 0.0]];
        let b = vec![vec![0.0, 0.0]];
        assert_eq!(hausdorff_points(&a, &a, Metric::Hyperbolic).unwrap(), 0.0);
        assert_eq!(
            hausdorff_points(&a, &b, Metric::Hyperbolic).unwrap(),
            hausdorff_points(&b, &a, Metric::Hyperbolic).unwrap()
        );
        let s = vec![vec![0.5, 0.0]];
        assert!((hausdorff_points(&s, &b, Metric::Hyperbolic).unwrap() - 0.5f64.atanh()).abs() < 1e-15);
        assert!(hausdorff_points(&[], &b, Metric::Euclidean).is_err());
        assert_eq!(coradius_points(&a, &a).unwrap(), 0.0);
        let r: f64 = 1.2;
        let sphere: Vec<Vec<f64>> =
            (0..50).map(|i| { let th = i as f64 * 0.3; vec![r.tanh() * th.cos(), r.tanh() * th.sin()] }).collect();
        assert!((coradius_points(&b, &sphere).unwrap() - r).abs() < 1e-12);
        assert!(coradius_points(&[], &sphere).is_err());
    }

    #[test]
    fn t1_hull_lies_in_slice() {
        let cloud = sample_boundary(&p(2, 1.0), 6, 12).unwrap();
        let (h, _) = hull_sample(&cloud, 2, 5).unwrap();
        for x in &h.points {
            assert!(x[2..].iter().all(|v| v.abs() < 1e-6));
        }
    }

    #[test]
    fn continuity_at_base_parameter_is_zero() {
        let cfg = ContinuityConfig { n: 2, t0: 0.8, radius: 2.0, k_max: 6, m: 16, iters: 2, seed: 1 };
        let rows = continuity_curve(&cfg, &[0.8]).unwrap();
        assert_eq!(rows[0].hausdorff, 0.0);
        assert!(rows[0].equivariance < 1e-6, "{}", rows[0].equivariance);
        assert_eq!(rows[0].center, 0.0);
    }
}
