//! Fourier model of the affine action of Sim(Rˡ) on L²(Rˡ):
//! π₀(S)f(y) = λ^{l/2} e^{i⟨y,v⟩} f(λA⁻¹y) for S = S_{λ,v,A}: x ↦ λAx + v,
//! and the cocycle c̃(S)(y) = (e^{i⟨y,v⟩} − 1)/|y|^{t+l/2}.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::harmonics::gauss_legendre;

const RADIAL_NODES: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct Similarity {
    pub lambda: f64,
    pub v: DVector<f64>,
    pub a: DMatrix<f64>,
}

impl Similarity {
    pub fn new(lambda: f64, v: &[f64], a: DMatrix<f64>) -> Result<Self> {
        let l = v.len();
        if !(lambda > 0.0 && lambda.is_finite()) {
            return invalid(format!("dilation λ = {lambda} must be positive"));
        }
        if a.nrows() != l || a.ncols() != l {
            return Err(Error::DimensionMismatch { expected: l, got: a.nrows() });
        }
        let defect = (a.transpose() * &a - DMatrix::identity(l, l)).amax();
        if defect > 1e-12 {
            return invalid(format!("linear part is not orthogonal (defect {defect:e})"));
        }
        Ok(Self { lambda, v: DVector::from_column_slice(v), a })
    }

    pub fn identity(l: usize) -> Self {
        Self { lambda: 1.0, v: DVector::zeros(l), a: DMatrix::identity(l, l) }
    }

    pub fn translation(v: &[f64]) -> Self {
        Self { lambda: 1.0, v: DVector::from_column_slice(v), a: DMatrix::identity(v.len(), v.len()) }
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    /// x ↦ λAx + v.
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * x * self.lambda + &self.v
    }

    /// (self·other)(x) = self(other(x)) = S_{λμ, λA d + v, AB}.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            lambda: self.lambda * other.lambda,
            v: &self.a * &other.v * self.lambda + &self.v,
            a: &self.a * &other.a,
        }
    }

    pub fn inverse(&self) -> Self {
        let at = self.a.transpose();
        Self { lambda: 1.0 / self.lambda, v: -(&at * &self.v) / self.lambda, a: at }
    }
}

/// Tensor quadrature on Rˡ (l ∈ {1, 2, 3}) with log-spaced radial panels on [r_min, r_max].
#[derive(Debug, Clone)]
pub struct RadialGrid {
    pub l: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub radii: Vec<f64>,
    /// Weight of each radial node for ∫ g(r) r^{l−1} dr.
    pub radial_weights: Vec<f64>,
    /// Unit vectors on S^{l−1}.
    pub directions: Vec<Vec<f64>>,
    /// Angular weights summing to |S^{l−1}|.
    pub angular_weights: Vec<f64>,
    /// l = 3: number of polar nodes (directions are z-major, then uniform azimuth).
    polar_nodes: Vec<f64>,
    azimuths: usize,
}

impl RadialGrid {
    /// `panels_per_decade` Gauss–Legendre panels of 16 nodes per factor 10 in r;
    /// `angular` azimuthal nodes (l ≥ 2) and polar nodes (l = 3: angular/2).
    pub fn new(l: usize, r_min: f64, r_max: f64, panels_per_decade: usize, angular: usize) -> Result<Self> {
        if !(1..=3).contains(&l) {
            return invalid(format!("grids are available for l in {{1, 2, 3}}, got {l}"));
        }
        if !(r_min > 0.0 && r_max > r_min) {
            return invalid(format!("need 0 < r_min < r_max, got [{r_min}, {r_max}]"));
        }
        if panels_per_decade == 0 || (l >= 2 && angular < 4) {
            return invalid("grid resolution too small");
        }
        let (gx, gw) = gauss_legendre(RADIAL_NODES);
        let (s0, s1) = (r_min.ln(), r_max.ln());
        let panels = (((s1 - s0) / std::f64::consts::LN_10) * panels_per_decade as f64).ceil().max(1.0) as usize;
        let h = (s1 - s0) / panels as f64;
        let mut radii = Vec::with_capacity(panels * RADIAL_NODES);
        let mut radial_weights = Vec::with_capacity(panels * RADIAL_NODES);
        for p in 0..panels {
            let lo = s0 + p as f64 * h;
            for (x, w) in gx.iter().zip(&gw) {
                let s = lo + 0.5 * h * (x + 1.0);
                let r = s.exp();
                radii.push(r);
                radial_weights.push(0.5 * h * w * r.powi(l as i32));
            }
        }
        let two_pi = 2.0 * std::f64::consts::PI;
        let (directions, angular_weights, polar_nodes, azimuths) = match l {
            1 => (vec![vec![1.0], vec![-1.0]], vec![1.0, 1.0], vec![], 0),
            2 => {
                let dirs = (0..angular)
                    .map(|j| {
                        let a = two_pi * j as f64 / angular as f64;
                        vec![a.cos(), a.sin()]
                    })
                    .collect();
                (dirs, vec![two_pi / angular as f64; angular], vec![], angular)
            }
            _ => {
                let (zx, zw) = gauss_legendre((angular / 2).max(2));
                let mut dirs = Vec::new();
                let mut weights = Vec::new();
                for (z, wz) in zx.iter().zip(&zw) {
                    let rho = (1.0 - z * z).sqrt();
                    for j in 0..angular {
                        let a = two_pi * j as f64 / angular as f64;
                        dirs.push(vec![*z, rho * a.cos(), rho * a.sin()]);
                        weights.push(wz * two_pi / angular as f64);
                    }
                }
                (dirs, weights, zx, angular)
            }
        };
        Ok(Self { l, r_min, r_max, radii, radial_weights, directions, angular_weights, polar_nodes, azimuths })
    }

    pub fn len(&self) -> usize {
        self.radii.len() * self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Node i·(#directions) + j is radii[i]·directions[j].
    pub fn point(&self, idx: usize) -> DVector<f64> {
        let na = self.directions.len();
        let r = self.radii[idx / na];
        DVector::from_iterator(self.l, self.directions[idx % na].iter().map(|c| r * c))
    }

    pub fn weight(&self, idx: usize) -> f64 {
        let na = self.directions.len();
        self.radial_weights[idx / na] * self.angular_weights[idx % na]
    }

    pub fn points(&self) -> Vec<DVector<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// ∫ |f|² over the covered shell.
    pub fn norm_sq(&self, values: &[Complex64]) -> f64 {
        values.iter().enumerate().map(|(i, v)| self.weight(i) * v.norm_sqr()).sum()
    }
}

/// Four-point Lagrange stencil around `x` on sorted nodes; returns (start, weights).
fn lagrange4(nodes: &[f64], x: f64) -> (usize, [f64; 4]) {
    let n = nodes.len();
    let pos = nodes.partition_point(|&v| v < x);
    let start = pos.saturating_sub(2).min(n.saturating_sub(4));
    let mut w = [0.0; 4];
    for (a, wa) in w.iter_mut().enumerate().take(n.min(4)) {
        let xa = nodes[start + a];
        let mut acc = 1.0;
        for b in 0..n.min(4) {
            if b != a {
                acc *= (x - nodes[start + b]) / (xa - nodes[start + b]);
            }
        }
        *wa = acc;
    }
    (start, w)
}

/// Periodic four-point Lagrange stencil on m uniform nodes of [0, 2π).
fn periodic4(m: usize, phi: f64) -> ([usize; 4], [f64; 4]) {
    let h = 2.0 * std::f64::consts::PI / m as f64;
    let x = phi.rem_euclid(2.0 * std::f64::consts::PI) / h;
    let base = x.floor() as isize;
    let frac = x - base as f64;
    let offsets = [-1.0, 0.0, 1.0, 2.0];
    let mut idx = [0; 4];
    let mut w = [0.0; 4];
    for a in 0..4 {
        idx[a] = (base + offsets[a] as isize).rem_euclid(m as isize) as usize;
        let mut acc = 1.0;
        for b in 0..4 {
            if b != a {
                acc *= (frac - offsets[b]) / (offsets[a] - offsets[b]);
            }
        }
        w[a] = acc;
    }
    (idx, w)
}

/// Values on a [`RadialGrid`], interpolated off-grid by local cubic Lagrange in
/// log r and in the angular coordinates.
#[derive(Debug, Clone)]
pub struct SampledField {
    pub grid: Arc<RadialGrid>,
    pub values: Vec<Complex64>,
    log_radii: Vec<f64>,
}

impl SampledField {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: values.len() });
        }
        let log_radii = grid.radii.iter().map(|r| r.ln()).collect();
        Ok(Self { grid, values, log_radii })
    }

    pub fn eval(&self, y: &DVector<f64>) -> Result<Complex64> {
        let g = &self.grid;
        let r = y.norm();
        if r < g.radii[0] * (1.0 - 1e-12) || r > g.radii[g.radii.len() - 1] * (1.0 + 1e-12) {
            return invalid(format!("point at radius {r:e} outside the sampled range"));
        }
        let (r0, rw) = lagrange4(&self.log_radii, r.ln());
        let na = g.directions.len();
        let angular: Vec<(usize, f64)> = match g.l {
            1 => vec![(if y[0] >= 0.0 { 0 } else { 1 }, 1.0)],
            2 => {
                let (idx, w) = periodic4(g.azimuths, y[1].atan2(y[0]));
                idx.iter().copied().zip(w).collect()
            }
            _ => {
                let z = (y[0] / r).clamp(-1.0, 1.0);
                let (z0, zw) = lagrange4(&g.polar_nodes, z);
                let (pidx, pw) = periodic4(g.azimuths, y[2].atan2(y[1]));
                let mut out = Vec::with_capacity(16);
                for a in 0..4.min(g.polar_nodes.len()) {
                    for b in 0..4 {
                        out.push(((z0 + a) * g.azimuths + pidx[b], zw[a] * pw[b]));
                    }
                }
                out
            }
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, wr) in rw.iter().enumerate().take(g.radii.len().min(4)) {
            let row = (r0 + a) * na;
            for &(j, wa) in &angular {
                acc += self.values[row + j] * (wr * wa);
            }
        }
        Ok(acc)
    }
}

type Closure = Arc<dyn Fn(&DVector<f64>) -> Complex64 + Send + Sync>;

/// A complex function on Rˡ: a closure, sampled values, or a lazy π₀-image.
#[derive(Clone)]
pub enum Field {
    Analytic(Closure),
    Sampled(SampledField),
    /// π₀(S) applied to the inner field.
    Transformed(Box<Similarity>, Box<Field>),
}

impl std::fmt::Debug for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Field::Analytic(_) => write!(f, "Field::Analytic"),
            Field::Sampled(s) => write!(f, "Field::Sampled({} values)", s.values.len()),
            Field::Transformed(s, inner) => write!(f, "Field::Transformed(λ = {}, {:?})", s.lambda, inner),
        }
    }
}

impl Field {
    pub fn analytic<F: Fn(&DVector<f64>) -> Complex64 + Send + Sync + 'static>(f: F) -> Self {
        Field::Analytic(Arc::new(f))
    }

    pub fn eval(&self, y: &DVector<f64>) -> Result<Complex64> {
        match self {
            Field::Analytic(f) => Ok(f(y)),
            Field::Sampled(s) => s.eval(y),
            Field::Transformed(s, inner) => {
                let l = y.len() as f64;
                let pre = s.a.transpose() * y * s.lambda;
                let phase = Complex64::from_polar(1.0, y.dot(&s.v));
                Ok(inner.eval(&pre)? * phase * s.lambda.powf(0.5 * l))
            }
        }
    }

    /// Values at every node of `grid`.
    pub fn sample(&self, grid: &Arc<RadialGrid>) -> Result<SampledField> {
        let values = (0..grid.len()).map(|i| self.eval(&grid.point(i))).collect::<Result<Vec<_>>>()?;
        SampledField::new(grid.clone(), values)
    }
}

/// π₀(S)f, evaluated lazily (exact composition, interpolation only inside sampled fields).
pub fn pi0_apply(l: usize, s: &Similarity, f: &Field) -> Result<Field> {
    if s.dim() != l {
        return Err(Error::DimensionMismatch { expected: l, got: s.dim() });
    }
    Ok(Field::Transformed(Box::new(s.clone()), Box::new(f.clone())))
}

fn check_t_open(t: f64) -> Result<()> {
    if !(t > 0.0 && t < 1.0) {
        return invalid(format!("t = {t} outside (0, 1): the cocycle is not square integrable"));
    }
    Ok(())
}

/// e^{iθ} − 1 without cancellation for small θ.
fn expm1_i(theta: f64) -> Complex64 {
    let s = (0.5 * theta).sin();
    Complex64::new(-2.0 * s * s, theta.sin())
}

/// c̃(S)(y) = (e^{i⟨y,v⟩} − 1)/|y|^{t+l/2}.
pub fn ctilde(l: usize, t: f64, s: &Similarity, y: &DVector<f64>) -> Result<Complex64> {
    check_t_open(t)?;
    if s.dim() != l || y.len() != l {
        return Err(Error::DimensionMismatch { expected: l, got: y.len() });
    }
    let r = y.norm();
    if r == 0.0 {
        return invalid("c̃ is undefined at y = 0");
    }
    Ok(expm1_i(y.dot(&s.v)) / r.powf(t + 0.5 * l as f64))
}

/// c̃(S) as a field.
pub fn ctilde_field(l: usize, t: f64, s: &Similarity) -> Result<Field> {
    check_t_open(t)?;
    if s.dim() != l {
        return Err(Error::DimensionMismatch { expected: l, got: s.dim() });
    }
    let v = s.v.clone();
    let power = t + 0.5 * l as f64;
    Ok(Field::analytic(move |y| expm1_i(y.dot(&v)) / y.norm().powf(power)))
}

/// sup over the grid of |c̃(S₁S₂) − c̃(S₁) − λ₁ᵗ π₀(S₁)c̃(S₂)|.
pub fn cocycle_residual(l: usize, t: f64, s1: &Similarity, s2: &Similarity, grid: &RadialGrid) -> Result<f64> {
    let s12 = s1.compose(s2);
    let pushed = pi0_apply(l, s1, &ctilde_field(l, t, s2)?)?;
    let scale = s1.lambda.powf(t);
    let mut worst: f64 = 0.0;
    for i in 0..grid.len() {
        let y = grid.point(i);
        let lhs = ctilde(l, t, &s12, &y)?;
        let rhs = ctilde(l, t, s1, &y)? + pushed.eval(&y)? * scale;
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}

/// α_t(S)x = λᵗ π₀(S)x + c̃(S), pointwise at y.
pub fn affine_apply(l: usize, t: f64, s: &Similarity, x: &Field, y: &DVector<f64>) -> Result<Complex64> {
    let pushed = pi0_apply(l, s, x)?.eval(y)?;
    Ok(pushed * s.lambda.powf(t) + ctilde(l, t, s, y)?)
}

/// sup over the grid of |α_t(S₁S₂)x − α_t(S₁)(α_t(S₂)x)|.
pub fn affine_residual(l: usize, t: f64, s1: &Similarity, s2: &Similarity, x: &Field, grid: &RadialGrid) -> Result<f64> {
    check_t_open(t)?;
    let s12 = s1.compose(s2);
    let inner_s2 = s2.clone();
    let inner_x = x.clone();
    let after_s2 = Field::analytic(move |y| affine_apply(l, t, &inner_s2, &inner_x, y).unwrap_or(Complex64::new(f64::NAN, f64::NAN)));
    let mut worst: f64 = 0.0;
    for i in 0..grid.len() {
        let y = grid.point(i);
        let lhs = affine_apply(l, t, &s12, x, &y)?;
        let rhs = affine_apply(l, t, s1, &after_s2, &y)?;
        let d = (lhs - rhs).norm();
        if !d.is_finite() {
            return Err(Error::Numerical("affine action produced a non-finite value".into()));
        }
        worst = worst.max(d);
    }
    Ok(worst)
}

/// |S^{l−1}|.
fn sphere_area(l: usize) -> f64 {
    match l {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        _ => 4.0 * std::f64::consts::PI,
    }
}

/// ∫_{r_lo}^{r_hi} 2(1 − cos(c r)) r^{−2t−1} dr by Gauss–Legendre panels: logarithmic up
/// to 1/c, then of width π/c along the oscillation.
fn radial_shell(c: f64, t: f64, r_lo: f64, r_hi: f64) -> f64 {
    let (gx, gw) = gauss_legendre(RADIAL_NODES);
    let mut edges = Vec::new();
    let knee = (1.0 / c).clamp(r_lo, r_hi);
    let decades = (knee / r_lo).log10();
    let log_panels = (decades * 2.0).ceil().max(1.0) as usize;
    for i in 0..=log_panels {
        edges.push(r_lo * (knee / r_lo).powf(i as f64 / log_panels as f64));
    }
    let step = std::f64::consts::PI / c;
    let mut a = knee;
    while a < r_hi {
        // Grow the linear panels once the integrand has decayed well below machine precision of the sum.
        let b = (a + step * (1.0 + (a * c / 2000.0).floor())).min(r_hi);
        edges.push(b);
        a = b;
    }
    edges.dedup();
    let mut acc = 0.0;
    for pair in edges.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if hi <= lo {
            continue;
        }
        let half = 0.5 * (hi - lo);
        for (x, w) in gx.iter().zip(&gw) {
            let r = lo + half * (x + 1.0);
            let s = (0.5 * c * r).sin();
            acc += w * half * 4.0 * s * s * r.powf(-2.0 * t - 1.0);
        }
    }
    acc
}

/// Tails of the radial integral below r_min (Taylor) and above r_max. The upper tail is
/// integrated numerically out to where c·r ≥ 200, then asymptotically.
fn radial_tails(c: f64, t: f64, r_min: f64, r_max: f64) -> (f64, f64) {
    let low = c * c * r_min.powf(2.0 - 2.0 * t) / (2.0 - 2.0 * t)
        - c.powi(4) * r_min.powf(4.0 - 2.0 * t) / (12.0 * (4.0 - 2.0 * t));
    let far = r_max.max(200.0 / c);
    let a = 2.0 * t + 1.0;
    let asymptotic = far.powf(-2.0 * t) / t + 2.0 * (c * far).sin() * far.powf(-a) / c
        - 2.0 * a * (c * far).cos() * far.powf(-a - 1.0) / (c * c);
    let middle = if far > r_max { radial_shell(c, t, r_max, far) } else { 0.0 };
    (low, middle + asymptotic)
}

/// Angular nodes for ∫_{S^{l−1}} g(|⟨ω, e⟩|) dω / |S^{l−1}| on |z| ∈ (0, 1], graded towards z = 0
/// where |z|^{2t} is singular.
fn angular_rule(l: usize) -> Vec<(f64, f64)> {
    if l == 1 {
        return vec![(1.0, 1.0)];
    }
    let (gx, gw) = gauss_legendre(RADIAL_NODES);
    let mut out = Vec::new();
    // Geometric panels in the variable x ∈ (0, 1]: z = x (l = 3, density 1) or z = cos(πx/2)-type (l = 2).
    let mut edges = vec![0.0];
    let mut e = 1e-12;
    while e < 1.0 {
        edges.push(e);
        e *= 4.0;
    }
    edges.push(1.0);
    for pair in edges.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let half = 0.5 * (hi - lo);
        for (x, w) in gx.iter().zip(&gw) {
            let s = lo + half * (x + 1.0);
            if l == 2 {
                // φ = π/2 − (π/2)s, z = |cos φ| = sin(πs/2); four quadrants, density 1/(2π).
                let z = (0.5 * std::f64::consts::PI * s).sin();
                out.push((z, w * half * 0.5 * std::f64::consts::PI * 4.0 / (2.0 * std::f64::consts::PI)));
            } else {
                out.push((s, w * half));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CnormReport {
    pub value: f64,
    pub low_tail: f64,
    pub high_tail: f64,
}

/// ∫_{Rˡ} |e^{i⟨y,v⟩} − 1|²/|y|^{2t+l} dy with the shell [r_min, r_max] by quadrature
/// and analytic tails outside.
pub fn cnorm_sq_report(l: usize, t: f64, v: &[f64], r_min: f64, r_max: f64) -> Result<CnormReport> {
    check_t_open(t)?;
    if !(1..=3).contains(&l) || v.len() != l {
        return Err(Error::DimensionMismatch { expected: l, got: v.len() });
    }
    let speed = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    if speed == 0.0 {
        return invalid("v must be nonzero");
    }
    let mut value = 0.0;
    let mut low_tail = 0.0;
    let mut high_tail = 0.0;
    for (z, w) in angular_rule(l) {
        let c = speed * z;
        let (lo, hi) = radial_tails(c, t, r_min, r_max);
        value += w * (radial_shell(c, t, r_min, r_max) + lo + hi);
        low_tail += w * lo;
        high_tail += w * hi;
    }
    let area = sphere_area(l);
    Ok(CnormReport { value: area * value, low_tail: area * low_tail, high_tail: area * high_tail })
}

/// ‖c̃(S_{1,v,Id})‖² on the default shell [1e-4, 1e4].
pub fn cnorm_sq(l: usize, t: f64, v: &[f64]) -> Result<f64> {
    Ok(cnorm_sq_report(l, t, v, 1e-4, 1e4)?.value)
}

/// Shell integrals of |c̃|² without tails over nested [r_min, r_max] (no t restriction), used
/// to exhibit divergence at the origin for t ≥ 1 and at infinity for t ≤ 0.
pub fn cnorm_sq_shell(l: usize, t: f64, v: &[f64], r_min: f64, r_max: f64) -> Result<f64> {
    if !(1..=3).contains(&l) || v.len() != l {
        return Err(Error::DimensionMismatch { expected: l, got: v.len() });
    }
    if !(r_min > 0.0 && r_max > r_min) {
        return invalid("need 0 < r_min < r_max");
    }
    let speed = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    let total: f64 = angular_rule(l).into_iter().map(|(z, w)| w * radial_shell(speed * z, t, r_min, r_max)).sum();
    Ok(sphere_area(l) * total)
}

/// ∫_{r_min ≤ |y| ≤ r_max} |y|^{−2t−l} dy, the squared norm of the formal primitive
/// y ↦ 1/|y|^{t+l/2} on a shell.
pub fn primitive_norm_sq(l: usize, t: f64, r_min: f64, r_max: f64) -> Result<f64> {
    if !(r_min > 0.0 && r_max > r_min) {
        return invalid("need 0 < r_min < r_max");
    }
    let radial = if t == 0.0 { (r_max / r_min).ln() } else { (r_min.powf(-2.0 * t) - r_max.powf(-2.0 * t)) / (2.0 * t) };
    Ok(sphere_area(l) * radial)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceCheck {
    pub cutoffs: Vec<f64>,
    pub sums: Vec<f64>,
    /// Sums increase and successive increments do not shrink.
    pub diverges: bool,
}

fn classify_nested(cutoffs: Vec<f64>, sums: Vec<f64>) -> DivergenceCheck {
    let inc: Vec<f64> = sums.windows(2).map(|w| w[1] - w[0]).collect();
    let increasing = inc.iter().all(|d| *d > 0.0);
    let not_shrinking = inc.windows(2).all(|w| w[1] >= 0.5 * w[0]);
    DivergenceCheck { cutoffs, sums, diverges: increasing && not_shrinking }
}

/// Primitive norm over [r_min, 1] for r_min = 10^{−2}, …, 10^{−10}.
pub fn primitive_divergence_at_origin(l: usize, t: f64) -> Result<DivergenceCheck> {
    let cutoffs: Vec<f64> = (1..=5).map(|i| 10f64.powi(-2 * i)).collect();
    let sums = cutoffs.iter().map(|&r| primitive_norm_sq(l, t, r, 1.0)).collect::<Result<_>>()?;
    Ok(classify_nested(cutoffs, sums))
}

/// Primitive norm over [1, r_max] for r_max = 10², …, 10^{10}.
pub fn primitive_divergence_at_infinity(l: usize, t: f64) -> Result<DivergenceCheck> {
    let cutoffs: Vec<f64> = (1..=5).map(|i| 10f64.powi(2 * i)).collect();
    let sums = cutoffs.iter().map(|&r| primitive_norm_sq(l, t, 1.0, r)).collect::<Result<_>>()?;
    Ok(classify_nested(cutoffs, sums))
}

/// ‖c̃(S_{1,v,Id})‖² over [r_min, 1] for shrinking r_min.
pub fn cnorm_divergence_at_origin(l: usize, t: f64, v: &[f64]) -> Result<DivergenceCheck> {
    let cutoffs: Vec<f64> = (1..=5).map(|i| 10f64.powi(-2 * i)).collect();
    let sums = cutoffs.iter().map(|&r| cnorm_sq_shell(l, t, v, r, 1.0)).collect::<Result<_>>()?;
    Ok(classify_nested(cutoffs, sums))
}

/// Least-squares slope of log ‖c̃(v)‖² against log |v| along the direction `dir`.
pub fn cnorm_power_law(l: usize, t: f64, dir: &[f64], scales: &[f64]) -> Result<f64> {
    let norm = dir.iter().map(|c| c * c).sum::<f64>().sqrt();
    if norm == 0.0 || scales.len() < 2 {
        return invalid("need a nonzero direction and at least two scales");
    }
    let mut pts = Vec::with_capacity(scales.len());
    for &a in scales {
        let v: Vec<f64> = dir.iter().map(|c| c / norm * a).collect();
        pts.push((a.ln(), cnorm_sq(l, t, &v)?.ln()));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Ok(sxy / sxx)
}

/// Closed form |S^{l−1}| · π/(Γ(1+2t) sin(πt)) · |v|^{2t} · E|z|^{2t}, for tests.
#[cfg(test)]
fn cnorm_closed_form(l: usize, t: f64, speed: f64) -> f64 {
    fn gamma(x: f64) -> f64 {
        // Lanczos approximation, g = 7.
        const C: [f64; 9] = [
            0.999_999_999_999_809_9,
            676.520_368_121_885_1,
            -1_259.139_216_722_402_8,
            771.323_428_777_653_1,
            -176.615_029_162_140_6,
            12.507_343_278_686_905,
            -0.138_571_095_265_720_12,
            9.984_369_578_019_572e-6,
            1.505_632_735_149_311_6e-7,
        ];
        if x < 0.5 {
            return std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma(1.0 - x));
        }
        let x = x - 1.0;
        let mut a = C[0];
        let tt = x + 7.5;
        for (i, c) in C.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        (2.0 * std::f64::consts::PI).sqrt() * tt.powf(x + 0.5) * (-tt).exp() * a
    }
    let radial = std::f64::consts::PI / (gamma(1.0 + 2.0 * t) * (std::f64::consts::PI * t).sin());
    let moment = match l {
        1 => 1.0,
        2 => gamma(t + 0.5) / (std::f64::consts::PI.sqrt() * gamma(t + 1.0)),
        _ => 1.0 / (2.0 * t + 1.0),
    };
    sphere_area(l) * radial * speed.powf(2.0 * t) * moment
}
