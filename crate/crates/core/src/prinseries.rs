//! Spherical principal series π_s on truncated harmonic spaces, the intertwiner
//! eigenvalues λ_k, the invariant form B_t, the index of B_t and the
//! renormalized weights used near t = 1.
//!
//! Parameters are tracked through t = (n−1)(s − 1/2); π_s(g) acts by
//! f ↦ |Jac(g⁻¹)|^{1/2+s} · f∘g⁻¹.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::harmonics::{binomial, dim_hk, BlockLayout, SphBasis, SphereGrid};
use crate::hypgroup::act_on_sphere;
use crate::quadspace::Isometry;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesParams {
    pub n: usize,
    pub t: f64,
    pub s: f64,
}

impl SeriesParams {
    pub fn new(n: usize, t: f64) -> Result<Self> {
        if n < 2 {
            return invalid(format!("n = {n} must be at least 2"));
        }
        if !t.is_finite() {
            return invalid("t must be finite");
        }
        Ok(Self { n, t, s: t / (n as f64 - 1.0) + 0.5 })
    }

    pub fn from_s(n: usize, s: f64) -> Result<Self> {
        if n < 2 {
            return invalid(format!("n = {n} must be at least 2"));
        }
        Self::new(n, (n as f64 - 1.0) * (s - 0.5))
    }

    /// Parameters of π_{−s}, the dual of π_s.
    pub fn dual(&self) -> Self {
        let s = -self.s;
        Self { n: self.n, t: (self.n as f64 - 1.0) * (s - 0.5), s }
    }

    /// Exponent (n−1)(1/2+s) = n−1+t of the Poisson-kernel base in π_s(g)·1.
    pub fn kernel_exponent(&self) -> f64 {
        self.n as f64 - 1.0 + self.t
    }

    fn require_positive_t(&self) -> Result<()> {
        if !(self.t > 0.0) {
            return invalid(format!("t = {} must be positive", self.t));
        }
        Ok(())
    }
}

/// λ_k = ∏_{j<k} (j − t)/(j + t + n − 1), with λ_0 = 1.
pub fn lambda_k(params: &SeriesParams, k: usize) -> f64 {
    let nf = params.n as f64;
    let mut acc = 1.0;
    for j in 0..k {
        let jf = j as f64;
        if (jf - params.t).abs() < 1e-14 {
            return 0.0;
        }
        acc *= (jf - params.t) / (jf + params.t + nf - 1.0);
    }
    acc
}

/// True when t is an integer j < k within 1e-14, where λ_k vanishes.
pub fn is_degenerate(params: &SeriesParams, k_max: usize) -> bool {
    let r = params.t.round();
    (params.t - r).abs() < 1e-14 && r >= 0.0 && (r as usize) < k_max
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub params: SeriesParams,
    pub lam: Vec<f64>,
    pub degenerate: bool,
}

impl WeightVector {
    pub fn new(params: SeriesParams, k_max: usize) -> Self {
        let nf = params.n as f64;
        let mut lam = Vec::with_capacity(k_max + 1);
        let mut acc = 1.0;
        lam.push(acc);
        for j in 0..k_max {
            let jf = j as f64;
            acc = if (jf - params.t).abs() < 1e-14 { 0.0 } else { acc * (jf - params.t) / (jf + params.t + nf - 1.0) };
            lam.push(acc);
        }
        Self { params, lam, degenerate: is_degenerate(&params, k_max + 1) }
    }

    pub fn k_max(&self) -> usize {
        self.lam.len() - 1
    }

    /// Weight for every coordinate of a layout.
    pub fn expand(&self, layout: &BlockLayout) -> Result<Vec<f64>> {
        if layout.k_max() != self.k_max() {
            return Err(Error::DimensionMismatch { expected: self.k_max(), got: layout.k_max() });
        }
        Ok(layout.degrees().into_iter().map(|k| self.lam[k]).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexReport {
    /// Total dimension of the blocks whose sign differs from the sign of the infinite tail.
    pub index: usize,
    /// Σ_{k ≤ j, k ≡ j mod 2} p_k for t ∈ (j, j+1).
    pub parity_rule: usize,
    /// C(n−1+j, n−1).
    pub binomial_rule: usize,
    pub positive_blocks: Vec<usize>,
    pub negative_blocks: Vec<usize>,
}

/// Index of B_t at truncation K.
///
/// For t ∈ (j, j+1) every λ_k with k > j has the sign (−1)^{j+1}; the form is
/// definite on the tail and the index counts the finitely many coordinates of
/// the opposite sign.
pub fn signature_index(params: &SeriesParams, k_max: usize) -> Result<IndexReport> {
    params.require_positive_t()?;
    let r = params.t.round();
    if (params.t - r).abs() < 1e-14 {
        return invalid(format!("t = {} is an integer (reducible point)", params.t));
    }
    let j = params.t.floor() as usize;
    if k_max <= j + 1 {
        return invalid(format!("truncation K = {k_max} must exceed t + 1"));
    }
    let weights = WeightVector::new(*params, k_max);
    let tail_sign = weights.lam[k_max].signum();
    let mut index = 0;
    let mut positive_blocks = Vec::new();
    let mut negative_blocks = Vec::new();
    for (k, lam) in weights.lam.iter().enumerate() {
        if *lam > 0.0 {
            positive_blocks.push(k);
        } else {
            negative_blocks.push(k);
        }
        if lam.signum() != tail_sign {
            index += dim_hk(params.n, k);
        }
    }
    let parity_rule = (0..=j).filter(|k| k % 2 == j % 2).map(|k| dim_hk(params.n, k)).sum();
    let binomial_rule = binomial((params.n - 1 + j) as u64, (params.n - 1) as u64) as usize;
    Ok(IndexReport { index, parity_rule, binomial_rule, positive_blocks, negative_blocks })
}

/// B_t(f, h) = Σ_k λ_k ⟨f_k, h_k⟩ over the blocks of `layout`.
pub fn form_bt(weights: &WeightVector, layout: &BlockLayout, f: &[f64], h: &[f64]) -> Result<f64> {
    let total = layout.total();
    if f.len() != total || h.len() != total {
        return Err(Error::DimensionMismatch { expected: total, got: f.len().min(h.len()) });
    }
    let w = weights.expand(layout)?;
    Ok(w.iter().zip(f).zip(h).map(|((w, a), b)| w * a * b).sum())
}

/// Matrix of π_s(g) on ⊕_{k≤K} H^k in the orthonormal harmonic basis (n ∈ {2, 3}).
#[derive(Debug, Clone)]
pub struct TruncatedRep {
    pub params: SeriesParams,
    pub k_max: usize,
    pub layout: BlockLayout,
    pub matrix: DMatrix<f64>,
    pub quad_degree: usize,
}

impl TruncatedRep {
    pub fn apply(&self, f: &DVector<f64>) -> DVector<f64> {
        &self.matrix * f
    }
}

/// Smallest quadrature degree accepted by [`rep_matrix_with_degree`].
pub fn min_quad_degree(k_max: usize) -> usize {
    2 * k_max + 16
}

/// Degree adapted to the analyticity strip of the Poisson kernel of g: the
/// integrand's Fourier tail decays like coth(u/2)^{−m}, so 37/log coth(u/2)
/// extra degrees reach double precision.
pub fn auto_quad_degree(g: &Isometry, k_max: usize) -> usize {
    let u = g.matrix()[(0, 0)].max(1.0).acosh();
    let margin = if u < 1e-12 { 0.0 } else { 37.0 / (1.0 / (0.5 * u).tanh()).ln() };
    min_quad_degree(k_max) + margin.min(1e6).ceil() as usize
}

pub fn rep_matrix(params: &SeriesParams, g: &Isometry, k_max: usize) -> Result<TruncatedRep> {
    rep_matrix_with_degree(params, g, k_max, auto_quad_degree(g, k_max))
}

pub fn rep_matrix_with_degree(
    params: &SeriesParams,
    g: &Isometry,
    k_max: usize,
    degree: usize,
) -> Result<TruncatedRep> {
    let n = params.n;
    if g.dim() != n + 1 {
        return Err(Error::DimensionMismatch { expected: n + 1, got: g.dim() });
    }
    if degree < min_quad_degree(k_max) {
        return invalid(format!(
            "quadrature degree {degree} below 2K + 16 = {} (aliasing guard)",
            min_quad_degree(k_max)
        ));
    }
    let basis = SphBasis::new(n, k_max)?;
    let grid = SphereGrid::new(n, degree)?;
    if grid.len() > 4_000_000 {
        return invalid(format!("quadrature grid with {} nodes is too large", grid.len()));
    }
    let m = g.matrix();
    let g_inv = crate::hypgroup::space(n)?.isometry_inverse(m);
    let exponent = -(n as f64 - 1.0) * (0.5 + params.s);
    let dim = basis.len();
    let nodes = grid.len();
    let mut left = DMatrix::zeros(nodes, dim);
    let mut right = DMatrix::zeros(nodes, dim);
    let mut buf = vec![0.0; dim];
    for (i, (omega, w)) in grid.points.iter().zip(&grid.weights).enumerate() {
        let mut pairing = m[(0, 0)];
        for j in 0..n {
            pairing -= m[(j + 1, 0)] * omega[j];
        }
        if !(pairing > 0.0) {
            return Err(Error::Numerical(format!("Poisson kernel base {pairing} is not positive")));
        }
        let factor = w * pairing.powf(exponent);
        basis.eval_into(omega, &mut buf);
        for (a, v) in buf.iter().enumerate() {
            left[(i, a)] = factor * v;
        }
        let pre = act_on_sphere(&g_inv, omega);
        basis.eval_into(&pre, &mut buf);
        for (b, v) in buf.iter().enumerate() {
            right[(i, b)] = *v;
        }
    }
    let matrix = left.transpose() * right;
    Ok(TruncatedRep { params: *params, k_max, layout: basis.layout, matrix, quad_degree: degree })
}

/// |(π_s(g)f₁, π_{−s}(g)f₂) − (f₁, f₂)| for the plain L² pairing of truncated coefficients.
pub fn dual_pairing_defect(
    params: &SeriesParams,
    g: &Isometry,
    f1: &DVector<f64>,
    f2: &DVector<f64>,
    k_max: usize,
) -> Result<f64> {
    let plus = rep_matrix(params, g, k_max)?;
    let minus = rep_matrix(&params.dual(), g, k_max)?;
    if f1.len() != plus.matrix.ncols() || f2.len() != plus.matrix.ncols() {
        return Err(Error::DimensionMismatch { expected: plus.matrix.ncols(), got: f1.len() });
    }
    let lhs = (plus.apply(f1)).dot(&minus.apply(f2));
    Ok((lhs - f1.dot(f2)).abs())
}

/// Largest entry of L_s·π_s(g) − π_{−s}(g)·L_s on inputs of degree ≤ `input_degree`.
pub fn intertwining_defect(params: &SeriesParams, g: &Isometry, k_max: usize, input_degree: usize) -> Result<f64> {
    let plus = rep_matrix(params, g, k_max)?;
    let minus = rep_matrix(&params.dual(), g, k_max)?;
    let weights = WeightVector::new(*params, k_max).expand(&plus.layout)?;
    let cols = if input_degree >= k_max { plus.layout.total() } else { plus.layout.offset(input_degree + 1) };
    let mut worst: f64 = 0.0;
    for b in 0..cols {
        for a in 0..plus.layout.total() {
            let d = weights[a] * plus.matrix[(a, b)] - minus.matrix[(a, b)] * weights[b];
            worst = worst.max(d.abs());
        }
    }
    Ok(worst)
}

/// Largest |B_t(π_s(g)f, π_s(g)h) − B_t(f,h)| over basis vectors f, h of degree ≤ `degree`.
pub fn bt_invariance_defect(params: &SeriesParams, g: &Isometry, k_max: usize, degree: usize) -> Result<f64> {
    let rep = rep_matrix(params, g, k_max)?;
    let weights = WeightVector::new(*params, k_max).expand(&rep.layout)?;
    let cols = if degree >= k_max { rep.layout.total() } else { rep.layout.offset(degree + 1) };
    let sub = rep.matrix.columns(0, cols);
    let weighted = DMatrix::from_fn(sub.nrows(), cols, |a, b| weights[a] * sub[(a, b)]);
    let gram = sub.transpose() * weighted;
    let mut worst: f64 = 0.0;
    for a in 0..cols {
        for b in 0..cols {
            let target = if a == b { weights[a] } else { 0.0 };
            worst = worst.max((gram[(a, b)] - target).abs());
        }
    }
    Ok(worst)
}

/// Weight of the limit form on V₂: (1/(n(n+1)))·∏_{j=2}^{k−1} (j−1)/(j+n).
pub fn u2_weight(n: usize, k: usize) -> Result<f64> {
    if k < 2 {
        return invalid(format!("u2_weight needs k >= 2, got {k}"));
    }
    if n < 2 {
        return invalid("n must be at least 2");
    }
    let nf = n as f64;
    let mut acc = 1.0 / (nf * (nf + 1.0));
    for j in 2..k {
        acc *= (j as f64 - 1.0) / (j as f64 + nf);
    }
    Ok(acc)
}

/// Weights λ̃_k of the renormalized form: λ_0, λ_1, then λ_k/(1−t) for t < 1,
/// and the limits 1, −1/n, −u2_weight(n,k) at t = 1.
pub fn renorm_weights(params: &SeriesParams, k_max: usize) -> Result<WeightVector> {
    if !(params.t > 0.0 && params.t <= 1.0) {
        return invalid(format!("renormalized weights need t in (0, 1], got {}", params.t));
    }
    let mut lam = Vec::with_capacity(k_max + 1);
    if params.t == 1.0 {
        lam.push(1.0);
        if k_max >= 1 {
            lam.push(-1.0 / params.n as f64);
        }
        for k in 2..=k_max {
            lam.push(-u2_weight(params.n, k)?);
        }
    } else {
        let raw = WeightVector::new(*params, k_max);
        let scale = 1.0 / (1.0 - params.t);
        for (k, l) in raw.lam.iter().enumerate() {
            lam.push(if k >= 2 { l * scale } else { *l });
        }
    }
    Ok(WeightVector { params: *params, lam, degenerate: false })
}

/// Per-degree factor turning L² harmonic coefficients into coordinates of the
/// renormalized hyperbolic space: √|λ̃_k| times √(1−t) on V₂ (the rescaling u_t).
/// For t < 1 this equals √|λ_k|; at t = 1 it vanishes on V₂.
pub fn renorm_coordinate_scale(params: &SeriesParams, k_max: usize) -> Result<Vec<f64>> {
    let w = renorm_weights(params, k_max)?;
    let squeeze = (1.0 - params.t).max(0.0).sqrt();
    Ok(w.lam.iter().enumerate().map(|(k, l)| if k >= 2 { l.abs().sqrt() * squeeze } else { l.abs().sqrt() }).collect())
}
